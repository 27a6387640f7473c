//! Multi-seed, multi-chain experiments over design points.
//!
//! Protocol: every design point runs `max(chains, runs)` independent chains
//! with seeds `base_seed + i` and uniform-random initial labels. The first
//! `burn_in_fraction` of the iterations is discarded. ESS uses the last
//! `ess_window` retained sweeps of the first `runs` chains; R̂ uses all
//! retained sweeps of the first `chains` chains; RMSE compares the end states
//! of the first `runs` chains with the mode of the FP64 end states.

mod experiment;
mod spec;
mod sweep;
pub mod trace_io;

pub use experiment::{
    boxplot_csv, recompute_from_traces, run_experiment, run_experiment_to_dir, run_experiment_with,
    summary_csv, trace_path, ActiveEssSummary, DesignPointMetrics, DesignPointReport,
    EndpointQuality, ExperimentOutput, PointStatus, RobustnessReport,
};
pub use spec::{
    DesignPoint, ExperimentSpec, ModeKind, ModelSource, ScheduleSpec, StereoSource, SCHEMA_VERSION,
};
pub use sweep::{
    parse_pipeline, run_jsd_sweep, write_synthetic, GridSummary, SweepSummary,
    DEFAULT_SWEEP_TEMPERATURES,
};
