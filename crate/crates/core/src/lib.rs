//! Random Gaussian binary integer programs and their integrality gaps.
//!
//! The crate generates instances `max c^T x, Ax <= b, x in {0,1}^n` with
//! i.i.d. standard normal `A` and `c`, solves the LP relaxation with a dense
//! bounded-variable simplex, solves the IP exactly by best-bound-first
//! branch-and-bound, and reproduces the discrepancy-based rounding that
//! certifies a small integrality gap. Monte Carlo helpers check the
//! probabilistic statements the rounding relies on.

pub mod bnb;
pub mod discrepancy;
pub mod error;
pub mod experiments;
pub mod instance;
pub mod knapsack;
pub mod lp;
pub mod numerics;
pub mod random;
pub mod rounding;
pub mod stats;

pub use bnb::{brute_force_ip, ipgap, solve_ip, BnbOptions, BnbResult, BnbStatus, BranchRule};
pub use error::{Error, Result};
pub use instance::{BSpec, Instance};
pub use lp::{dual_value, gap_formula, solve_lp, GapBreakdown, LpSolution};
pub use numerics::DenseMatrix;
pub use random::RngHandle;
pub use rounding::{round_pipeline, RoundingCertificate, RoundingParams};
