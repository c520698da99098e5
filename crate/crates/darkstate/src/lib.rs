//! Scenario configs, bundled presets, parameter sweeps and result files on
//! top of [`darkstate_core`].

pub mod config;
pub mod output;
pub mod presets;
pub mod run;
pub mod sweep;

pub use darkstate_core as core;
