//! Empirical measures, insertion estimators of the limit constants `E(τ)`
//! and `V(τ)`, and the law-of-large-numbers, variance and CLT experiments.

mod constants;
mod experiments;
mod measure;

pub use constants::{
    estimate_e, estimate_v, poisson_quantization_constant, quantization_bound, ConstantEstimate,
    ProbeOptions, QuantizationBound, ShellCorrelation, VEstimate, VOptions,
};
pub use experiments::{
    run_experiment, run_experiments, write_rows, CovarianceCheck, ExperimentKind, ExperimentReport,
    ExperimentRow, ExperimentSetup, KsTrend, LambdaSummary, MomentRow, NormalityRow, Targets,
    VarianceFit,
};
pub use measure::{
    build_measure, integral, integral_of_product, integral_sq, integrate, EmpiricalMeasure,
    TestFunction,
};
