//! Differentially private testing of relevant dependencies among the
//! coordinates of high-dimensional vectors.
//!
//! The toolkit is organised bottom-up:
//!
//! * [`ustat`] computes bounded vector-valued U-statistics (Kendall's tau by
//!   default), leave-one-out replicates, the jackknife covariance and the
//!   sensitivity constants every mechanism relies on.
//! * [`privacy`] holds the zCDP mechanisms, the budget ledger and the sparse
//!   vector baseline.
//! * [`extremal`] privately estimates the set of coordinates attaining the
//!   maximum via gap queries and propose-test-release.
//! * [`hdtest`] assembles the tests (bootstrap, Gumbel, Hoeffding, finite
//!   dimensional) and the threshold scan.
//! * [`simulate`] generates Gaussian-copula data with prescribed Kendall's
//!   tau and runs power experiments.

pub mod data;
pub mod error;
pub mod extremal;
pub mod hdtest;
pub mod privacy;
pub mod rng;
pub mod simulate;
pub mod ustat;

pub use data::DataMatrix;
pub use error::{Error, Result};
pub use extremal::{ExtremalEstimate, GapVector};
pub use hdtest::{Branch, TestOutcome};
pub use privacy::{LedgerEntry, PrivacyBudget};
pub use rng::Seed;
pub use ustat::{KendallKernel, Kernel, UStatResult};

/// `⌈ln p⌉`, the cardinality cap on any released extremal set.
pub fn log_cap(p: usize) -> usize {
    if p <= 1 {
        return 1;
    }
    ((p as f64).ln().ceil() as usize).max(1)
}
