//! Statistical robustness metrics: sampling quality (ESS), convergence
//! (Gelman-Rubin with zero-variance branches) and goodness of fit (RMSE, JSD).

mod ess;
mod fit;
mod jsd;
mod rhat;

pub use ess::{
    autocorr, autocorrelation, ess, ess_of_labels, mean_active_ess, ActiveEss, EssResult, EssValue,
};
pub use fit::{
    label_error_rate, quantile_sorted, reference_mode, rmse, BoxSummary, OUTLIER_IQR_FACTOR,
};
pub use jsd::{binary_distribution, jsd, jsd_sweep, BinaryPipeline, JsdGrid};
pub use rhat::{
    convergence_from_traces, convergence_percentage, gelman_rubin, vector_components,
    ConvergenceBranch, ConvergenceDiagnostic, ConvergenceResult, DEFAULT_RHAT_THRESHOLD,
};
