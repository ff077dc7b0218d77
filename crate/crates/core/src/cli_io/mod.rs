//! Configuration, provenance manifests, table emission and the commands
//! behind the `contamrf` binary.

mod commands;
mod config;
mod manifest;
mod selftest;
mod tables;

pub use commands::{
    cmd_fit, cmd_predict, fit_model, read_dataset, run_sweep, write_sweep, FitReport, IhdrProbability, PredictOptions,
    PredictReport, PredictSource, ProbeRow, SweepOutputs, SWEEP_FILES,
};
pub use config::{ModelSection, Overrides, RunConfig};
pub use manifest::RunManifest;
pub use selftest::{run_selftest, SelftestReport, SuiteOutcome, FAULT_ENV, SUITES};
pub use tables::{
    bias_variance_csv, envelopes_csv, format_float, misspecification_csv, BIAS_VARIANCE_HEADER, ENVELOPES_HEADER,
    MISSPECIFICATION_HEADER,
};
