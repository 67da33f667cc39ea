//! Batch-arrival models for slotted CSMA/CA.
//!
//! * [`protocol`]: validated MAC parameters and the backoff window law.
//! * [`attempt`]: backoff PMFs and the attempt probability `a(t)`.
//! * [`chain`]: transient Markov chains (original and improved kernels).
//! * [`sim`]: slot-accurate Monte Carlo simulator and exact enumerator.
//! * [`experiment`]: configuration parsing, sweeps and reports.
//!
//! The analytical layers are generic over [`numeric::Scalar`]; the aliases
//! below fix the common choices.

pub mod attempt;
pub mod chain;
pub mod experiment;
pub mod numeric;
pub mod protocol;
pub mod sim;

use num_rational::BigRational;

pub use protocol::{validate, BackoffSemantics, ProtocolParams, RawParams, RetryPolicy};

pub type Pmf64 = attempt::Pmf<f64>;
pub type Pmf32 = attempt::Pmf<f32>;
/// Exact rational PMF, used as an oracle for the floating-point paths.
pub type ExactPmf = attempt::Pmf<BigRational>;

pub type AttemptProfile64 = attempt::AttemptProfile<f64>;
pub type AttemptProfile32 = attempt::AttemptProfile<f32>;
pub type ExactAttemptProfile = attempt::AttemptProfile<BigRational>;

pub type TransientResult64 = chain::TransientResult<f64>;
pub type StateDistribution64 = chain::StateDistribution<f64>;

pub type ExactMetrics64 = sim::ExactMetrics<f64>;
pub type ExactMetricsRational = sim::ExactMetrics<BigRational>;
