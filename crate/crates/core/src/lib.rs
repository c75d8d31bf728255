//! Exact fair-division engine.
//!
//! Computes probabilistic-serial (PS) and extended-PS fractional allocations
//! and implements them as explicit lotteries over deterministic allocations
//! that are envy-free up to one item. Every quantity is an exact rational.
//!
//! Module map:
//! - [`model`]: instances, ordinal profiles, allocations, lotteries, SD comparison.
//! - [`ps`]: simultaneous eating for strict preferences.
//! - [`eps`]: coordinated eating for weak orders, including the skip-zero mode.
//! - [`birkhoff`]: Birkhoff–von Neumann decomposition.
//! - [`pslottery`]: the end-to-end lottery pipeline and support reduction.
//! - [`fairness`]: certificate-producing verifiers.
//! - [`oracle`]: brute-force and exact-LP reference machinery.
//! - [`io`]: JSON file formats with rationals encoded as strings.

pub mod birkhoff;
pub mod eps;
pub mod error;
pub mod fairness;
mod flow;
pub mod io;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod ps;
pub mod pslottery;

pub use error::{Error, Result};
pub use model::{
    DeterministicAllocation, EatingTrace, Instance, Lottery, OrdinalProfile, RandomAllocation,
    Rational, SdRelation, Segment, WeakOrder,
};
