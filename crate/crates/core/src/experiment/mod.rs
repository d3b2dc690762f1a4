//! Sampling, multi-run evaluation, profile statistics and synthetic data.

mod report;
mod runs;
mod sampling;
pub mod stats;
mod synth;

pub use report::{Curve, EvalReport, Fingerprint, MethodRow};
pub use runs::{
    assemble_supervised, best_unsupervised, default_k_grid, extract_all, has_profiled_common_neighbor, run_seed,
    run_supervised, run_unsupervised, subset_analysis, subset_metrics, supervised_run, test_seed, RunOutcome,
    SupervisedConfig, UnsupervisedConfig, DEFAULT_RUNS, RANDOM_BASELINE,
};
pub use sampling::{
    has_common_neighbor, holdout_graph, linked_population, sample_instances, sample_instances_excluding,
    InstanceSample, SamplingConfig,
};
pub use synth::{generate_synthetic, synth_id, GroundTruth, SynthConfig, SynthOutput, WEAK_TIE_SHARE};
