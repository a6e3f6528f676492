//! The two signal-processing experiments and their signal generators.

pub mod channel;
pub mod experiment;
pub mod mackey_glass;

pub use channel::{channel_apply, gen_symbols, ChannelParams};
pub use experiment::{
    run_equalization_experiment, run_experiment, run_mg_experiment, EqReport, ExperimentSpec, MgReport, Report, Task,
};
pub use mackey_glass::{mackey_glass, MGParams};
