use std::path::Path;
use std::process::Command;

/// The generated header must compile as C and as C++ against a program that
/// touches every exported symbol.
#[test]
fn generated_header_compiles() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include/magres.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for sym in [
        "magres_last_error",
        "magres_version",
        "magres_string_free",
        "magres_retention_time",
        "magres_neuron_new",
        "magres_neuron_asn",
        "magres_neuron_bsn",
        "magres_neuron_free",
        "magres_reservoir_new",
        "magres_reservoir_dims",
        "magres_reservoir_step",
        "magres_reservoir_state",
        "magres_reservoir_reset",
        "magres_reservoir_spectral_radius",
        "magres_reservoir_free",
        "magres_weights_to_conductances",
        "magres_run_experiment",
        "MAGRES_STATUS_PANIC = 7",
    ] {
        assert!(text.contains(sym), "header lacks {sym}");
    }

    let Ok(cc) = which("cc") else {
        eprintln!("no C compiler on PATH; header compile check not run");
        return;
    };
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("use.c");
    std::fs::write(
        &src,
        r#"#include "magres.h"
int main(void) {
    double t;
    MagresNeuron *n = 0;
    MagresReservoir *r = 0;
    char *json = 0;
    size_t k;
    if (magres_retention_time(40.0, 1e-9, &t) != MAGRES_STATUS_OK) return 1;
    magres_neuron_new(0.8, 20.0, 0.05, 1, &n);
    magres_neuron_asn(n, 0.0, &t);
    magres_neuron_bsn(n, 0.0, &t);
    magres_neuron_free(n);
    magres_reservoir_new("n_nodes = 4", &r);
    magres_reservoir_dims(r, &k, 0, 0);
    magres_reservoir_step(r, &t, 1, &t, 1);
    magres_reservoir_state(r, &t, 1);
    magres_reservoir_reset(r);
    magres_reservoir_spectral_radius(r, &t);
    magres_reservoir_free(r);
    magres_weights_to_conductances(&t, 1, 1, 1e-3, 0, &t, &t, &t);
    magres_run_experiment("task = \"equalization\"", &json);
    magres_string_free(json);
    return magres_last_error() == 0 || magres_version() == 0;
}
"#,
    )
    .unwrap();
    for lang in ["c", "c++"] {
        let status = Command::new(&cc)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg("-I")
            .arg(dir.join("include"))
            .arg(&src)
            .status()
            .unwrap();
        assert!(status.success(), "header failed to compile as {lang}");
    }
}

fn which(name: &str) -> Result<std::path::PathBuf, ()> {
    std::env::var_os("PATH")
        .and_then(|paths| {
            std::env::split_paths(&paths)
                .map(|p| p.join(name))
                .find(|p| p.is_file())
        })
        .ok_or(())
}
