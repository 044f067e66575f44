//! Exact design calculations for two-stage trials whose early-stopping and
//! efficacy criteria are nested: Stage 1 gates continuation on the number of
//! successes at a short follow-up t1 (rate p1), and the final test counts
//! successes at a longer follow-up t2 (rate p2), where a t2 success requires
//! having been a t1 success.
//!
//! The crate provides:
//!
//! - [`prob`]: stable binomial and negative-binomial kernels;
//! - [`design`]: the design/rates data model with range validation;
//! - [`oc`]: exact rejection probability, early-termination probability,
//!   expected-sample-size bound, power bound, and curve/surface grids;
//! - [`duration`]: the distribution of the smallest number of Stage-1
//!   patients needed to settle the continue/stop decision;
//! - [`search`]: exhaustive design-space enumeration under a patient budget
//!   with the classical and windowed selection criteria, and the
//!   same-criteria (p1 = p2) special case;
//! - [`sim`]: seeded Monte Carlo replication of complete trials as an
//!   independent verification oracle;
//! - [`report`]: canonical CSV/JSON formatting.

pub mod design;
pub mod duration;
mod error;
pub mod oc;
pub mod prob;
pub mod report;
pub mod search;
pub mod sim;

pub use design::{Design, OperatingCharacteristics, Rates, TrialOutcome};
pub use error::{Error, Result};
