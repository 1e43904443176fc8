//! Simulated-annotator experiments: synthetic ground truths, annotator
//! models, convergence runs, ablation tables and prior-corruption sweeps.

pub mod ablation;
pub mod error;
pub mod output;
pub mod run;
pub mod truth;

pub use ablation::{
    arms, corruption_setup, corruption_sweep, run_ablation, AblationSetup, AblationTable, Arm, ArmSummary,
    CorruptionRow, Hypothesis,
};
pub use error::{Result, SimError};
pub use output::{write_ablation_csv, write_corruption_csv, write_curves_csv};
pub use run::{
    compare_budget_to_target, corrupt_prior, ranking_tau, run_simulation, Checkpoints, CurvePoint, RunResult,
    TargetRow, Variant,
};
pub use truth::{
    gen_ground_truth, item_ids, simulate_annotator, AnnotatorKind, AnnotatorModel, GroundTruth, LatentDistribution,
};
