use nalgebra::DMatrix;

/// Plain gradient descent on `||W F - Y||^2 + lambda ||W||^2` with step
/// `1/L`, `L` the Lipschitz constant of the gradient. Stops when the largest
/// gradient entry falls below `grad_tol`.
pub fn gradient_descent_ridge(
    f: &DMatrix<f64>,
    y: &DMatrix<f64>,
    lambda: f64,
    max_iter: usize,
    grad_tol: f64,
) -> DMatrix<f64> {
    let g = f * f.transpose();
    let lip = 2.0 * (g.symmetric_eigenvalues().max() + lambda);
    let yf = y * f.transpose();
    let mut w = DMatrix::zeros(y.nrows(), f.nrows());
    for _ in 0..max_iter {
        let grad = 2.0 * (&w * &g - &yf + lambda * &w);
        if grad.amax() < grad_tol {
            break;
        }
        w -= grad / lip;
    }
    w
}
