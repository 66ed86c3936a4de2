//! Finite-size secret-key rate.
//!
//! Keys are distilled only from `y`-`y` coincidences (the single-click herald
//! on both sides). The rate per pulse pair is the worst case over the vacuum
//! parameter of
//!
//! ```text
//! a1y b1y Y11_ZL (1 - H2(e11_phU)) - S_yy f H2(E_yy)
//! ```
//!
//! minus the composable-security overhead
//! `(log2(8/eps_cor) + 2 log2(2/(eps' eps_hat)) + 2 log2(1/eps_PA)) / N_t`.

use crate::estimator::BoundCurve;
use crate::protocol::ObservedStats;
use crate::source::{HeraldState, HeraldedDistributions};
use crate::{Error, Result};

pub use crate::math::binary_entropy;

/// Composable-security failure probabilities and the error-correction
/// inefficiency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecurityParams {
    pub eps_cor: f64,
    pub eps_prime: f64,
    pub eps_hat: f64,
    pub eps_pa: f64,
    /// Error-correction inefficiency `f >= 1`.
    pub f: f64,
}

impl SecurityParams {
    pub fn new(eps_cor: f64, eps_prime: f64, eps_hat: f64, eps_pa: f64, f: f64) -> Result<Self> {
        let params = SecurityParams {
            eps_cor,
            eps_prime,
            eps_hat,
            eps_pa,
            f,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("eps_cor", self.eps_cor),
            ("eps_prime", self.eps_prime),
            ("eps_hat", self.eps_hat),
            ("eps_pa", self.eps_pa),
        ] {
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::InvalidParam {
                    name,
                    value,
                    constraint: "eps in (0, 1)",
                });
            }
        }
        if !(self.f >= 1.0) {
            return Err(Error::InvalidParam {
                name: "f",
                value: self.f,
                constraint: "f >= 1",
            });
        }
        Ok(())
    }
}

impl Default for SecurityParams {
    /// All failure probabilities 1e-7, error correction at 1.16.
    fn default() -> Self {
        SecurityParams {
            eps_cor: 1e-7,
            eps_prime: 1e-7,
            eps_hat: 1e-7,
            eps_pa: 1e-7,
            f: 1.16,
        }
    }
}

/// The finite-size rate penalty
/// `(log2(8/eps_cor) + 2 log2(2/(eps' eps_hat)) + 2 log2(1/eps_PA)) / N_t`.
pub fn finite_size_overhead(n_t: f64, sec: &SecurityParams) -> Result<f64> {
    if !(n_t > 0.0) {
        return Err(Error::InvalidParam {
            name: "n_t",
            value: n_t,
            constraint: "N_t > 0",
        });
    }
    let bits = crate::math::log2(8.0 / sec.eps_cor)
        + 2.0 * crate::math::log2(2.0 / (sec.eps_prime * sec.eps_hat))
        + 2.0 * crate::math::log2(1.0 / sec.eps_pa);
    Ok(bits / n_t)
}

/// Key rate with its component terms, all taken at the worst-case point of
/// the vacuum-parameter scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyRateResult {
    /// Secret bits per pulse pair, clamped at zero.
    pub rate: f64,
    /// The rate-minimizing vacuum parameter.
    pub h_tilde: f64,
    /// Yield and phase-error bounds at that point.
    pub y11_z_lower: f64,
    pub e11_ph_upper: f64,
    /// `a1y b1y Y11_ZL (1 - H2(e11_phU))` at that point.
    pub single_photon_term: f64,
    /// `S_yy f H2(E_yy)`.
    pub ec_leakage: f64,
    /// Finite-size overhead per pulse pair.
    pub overhead: f64,
    /// Set when no positive rate survives the worst case.
    pub abort: bool,
}

/// Evaluates the rate at every scanned point (grid plus refinement) and
/// returns the minimum.
pub fn key_rate(
    obs: &ObservedStats,
    curve: &BoundCurve,
    dists_a: &HeraldedDistributions,
    dists_b: &HeraldedDistributions,
    sec: &SecurityParams,
) -> Result<KeyRateResult> {
    sec.validate()?;
    let overhead = finite_size_overhead(obs.n_t, sec)?;
    let a1y = dists_a.prob(HeraldState::Y, 1);
    let b1y = dists_b.prob(HeraldState::Y, 1);
    let ec_leakage = obs.s_yy * sec.f * binary_entropy(obs.e_yy);

    let mut worst: Option<(f64, &crate::estimator::BoundPoint)> = None;
    for point in curve.iter_all() {
        let raw = a1y * b1y * point.privacy_factor() - ec_leakage - overhead;
        if worst.map_or(true, |(r, _)| raw < r) {
            worst = Some((raw, point));
        }
    }
    let (raw, point) = worst.ok_or(Error::EmptyGrid)?;

    let abort = raw <= 0.0 || point.e11_ph_upper >= 0.5;
    Ok(KeyRateResult {
        rate: raw.max(0.0),
        h_tilde: point.h_tilde,
        y11_z_lower: point.y11_z_lower,
        e11_ph_upper: point.e11_ph_upper,
        single_photon_term: a1y * b1y * point.privacy_factor(),
        ec_leakage,
        overhead,
        abort,
    })
}
