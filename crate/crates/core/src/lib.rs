//! Simulation and parameter-estimation library for a measurement-device-independent
//! QKD protocol whose decoy states are prepared passively, by conditioning on the
//! click pattern of two local detectors watching the idler arm of a heralded
//! photon-pair source.
//!
//! The crate is organised as a pipeline:
//!
//! * [`source`] — photon-number distributions of the four heralding events,
//! * [`bsm`] — yields and error rates of the untrusted relay's Bell-state
//!   measurement, computed from Fock-state interference,
//! * [`protocol`] — observable gains and error rates assembled from the two,
//! * [`estimator`] — lower/upper bounds on the single-photon-pair yield and
//!   phase error from the observables alone, scanned over the unobservable
//!   vacuum parameter,
//! * [`keyrate`] — the finite-size secret-key rate,
//! * [`optimizer`] — derivative-free search over the source knobs `(mu, t)`
//!   and sweeps over distance or data size.
//!
//! Everything is pure `f64` arithmetic; the only randomness is the optional
//! sampled observation mode in [`protocol::observe`], which is seeded
//! explicitly. The crate is `no_std`-compatible (with `alloc`) when built
//! without the `std` feature; transcendental functions then come from `libm`.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bsm;
pub mod estimator;
pub mod keyrate;
pub mod math;
#[cfg(feature = "oracle")]
pub mod oracle;
pub mod optimizer;
pub mod protocol;
pub mod source;

use core::fmt;

/// Errors shared by the whole pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside its physical domain.
    InvalidParam {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },
    /// A photon-number index exceeds the configured expansion limit.
    TruncationExceeded { requested: usize, limit: usize },
    /// Split counts exceed the available photon number.
    SplitExceedsPhotons { s1: usize, s2: usize, n: usize },
    /// The closed-form distributions require symmetric branch parameters.
    AsymmetricParams,
    /// States from different encoding bases were combined, or a yield table
    /// of the wrong basis was used.
    BasisMismatch,
    /// The photon-number-ratio condition the decoy bounds rely on does not
    /// hold; the estimator denominator is not positive.
    RatioConditionViolated { first_violation: usize },
    /// A gain evaluated to zero while its error term did not.
    ZeroGainWithErrors,
    /// An observable has zero effective counts at the requested data size.
    ZeroEffectiveCounts { observable: &'static str },
    /// Every multistart seed of an optimization was infeasible.
    AllStartsInfeasible,
    /// A sweep or scan was given an empty grid.
    EmptyGrid,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParam {
                name,
                value,
                constraint,
            } => write!(f, "parameter {name} = {value} violates {constraint}"),
            Error::TruncationExceeded { requested, limit } => {
                write!(f, "photon number {requested} exceeds expansion limit {limit}")
            }
            Error::SplitExceedsPhotons { s1, s2, n } => {
                write!(f, "split ({s1},{s2}) exceeds {n} photons")
            }
            Error::AsymmetricParams => {
                write!(f, "closed-form distributions need eta_1 = eta_2 and d_1 = d_2")
            }
            Error::BasisMismatch => write!(f, "encoding bases do not match"),
            Error::RatioConditionViolated { first_violation } => write!(
                f,
                "photon-number ratio condition violated at n = {first_violation}"
            ),
            Error::ZeroGainWithErrors => write!(f, "gain is zero but error term is not"),
            Error::ZeroEffectiveCounts { observable } => {
                write!(f, "observable {observable} has zero effective counts")
            }
            Error::AllStartsInfeasible => write!(f, "all optimization starts were infeasible"),
            Error::EmptyGrid => write!(f, "empty grid"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
