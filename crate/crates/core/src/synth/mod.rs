//! Seeded synthetic cohorts with profile-modulated behaviour signal, the
//! historical-average baseline, ablation builders and the experiment runner
//! comparing the full model against its variants.

mod baseline;
mod config;
mod experiment;
mod generate;

#[cfg(test)]
mod tests;

pub use baseline::baseline_ha;
pub use config::SynthConfig;
pub use experiment::{
    build_ablation, relative_improvement, run_experiment, Ablation, AblationMember, Comparison, ExperimentConfig,
    ExperimentReport, ModelResult,
};
pub use generate::generate;
