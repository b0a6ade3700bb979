//! zCDP mechanisms, the budget ledger, and the sparse-vector baseline.

mod budget;
mod mechanisms;
mod svt;

pub use budget::{LedgerEntry, PrivacyBudget};
pub use mechanisms::{
    gaussian_mechanism, gumbel_quantile, normal_cdf, normal_quantile, ptr_lower_bound, rl_gap,
    sample_gumbel, zcdp_to_eps_delta, GaussianMechanism, NoisyRelease, PtrOutcome, Regularizer,
};
pub use svt::{svt_epsilon_bound, svt_run, CutoffConvention, SvtAnswer};
