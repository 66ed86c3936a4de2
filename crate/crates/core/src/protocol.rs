//! Observable gains and error rates of the protocol, assembled from the
//! heralded source distributions and the relay yield tables.
//!
//! When Alice emits state `l` and Bob state `r`, the gain is
//! `S_lr = sum_jk a_j^l b_k^r Y_jk` and the error gain is
//! `T_lr = sum_jk a_j^l b_k^r Y_jk e_jk`; the heralding probabilities are
//! already folded into the distributions, so `N_t * S_lr` is directly the
//! expected number of accepted pairs in `N_t` pulse pairs.

use crate::bsm::YieldTable;
use crate::source::{HeraldState, HeraldedDistributions};
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution, Poisson};

/// One gain/error-gain pair with its truncation bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainResult {
    /// Gain `S_lr`.
    pub s: f64,
    /// Error gain `T_lr`.
    pub t: f64,
    /// QBER `E_lr = T_lr / S_lr` (zero when `S_lr` is zero).
    pub e: f64,
    /// Upper bound on the gain mass dropped by truncating the yield table:
    /// the source mass outside the table rectangle times `Y <= 1`.
    pub tail_bound: f64,
}

/// Truncated double sum of the yield table against both sides' photon-number
/// distributions.
pub fn gains(
    l: HeraldState,
    r: HeraldState,
    dists_a: &HeraldedDistributions,
    dists_b: &HeraldedDistributions,
    yields: &YieldTable,
) -> Result<GainResult> {
    if l.basis() != r.basis() || l.basis() != yields.basis() {
        return Err(Error::BasisMismatch);
    }
    let a = dists_a.dist(l);
    let b = dists_b.dist(r);
    let n = yields.n_cut();
    let mut s = 0.0;
    let mut t = 0.0;
    for (j, &aj) in a.iter().enumerate().take(n + 1) {
        for (k, &bk) in b.iter().enumerate().take(n + 1) {
            let y = yields.y(j, k);
            s += aj * bk * y;
            t += aj * bk * y * yields.e(j, k);
        }
    }
    if s == 0.0 && t > 0.0 {
        return Err(Error::ZeroGainWithErrors);
    }
    // mass outside the (n_cut x n_cut) rectangle, counting each side once
    let a_in: f64 = a.iter().take(n + 1).sum();
    let a_out = dists_a.mass_beyond(l, n);
    let b_out = dists_b.mass_beyond(r, n);
    let tail_bound = a_out * dists_b.state_probability(r) + a_in * b_out;
    Ok(GainResult {
        s,
        t,
        e: if s > 0.0 { t / s } else { 0.0 },
        tail_bound,
    })
}

/// Model-side truth the estimator never sees: the exact single-photon-pair
/// yield and error rates plus the joint vacuum terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticTruth {
    /// `Y_11` of the key basis (equal to the X-basis yield in this model).
    pub y11: f64,
    /// Bit error rate of single-photon pairs in the Z basis.
    pub e11_bit: f64,
    /// X-basis error rate of single-photon pairs; the phase error the
    /// estimator's upper bound is compared against.
    pub e11_phase: f64,
    /// `H = a_0^w b_0^w Y_00 + sum_m (a_0^w b_m^w Y_0m + a_m^w b_0^w Y_m0)`.
    pub h: f64,
    /// Same combination over the `x`-state distributions.
    pub h_prime: f64,
}

/// Computes the joint vacuum terms and single-photon-pair truth from the
/// model tables (simulation-side only).
pub fn true_vacuum_terms(
    dists_a: &HeraldedDistributions,
    dists_b: &HeraldedDistributions,
    x_yields: &YieldTable,
    z_yields: &YieldTable,
) -> Result<AsymptoticTruth> {
    if x_yields.basis() != crate::source::Basis::X || z_yields.basis() != crate::source::Basis::Z {
        return Err(Error::BasisMismatch);
    }
    let vacuum_sum = |state: HeraldState| -> f64 {
        let a = dists_a.dist(state);
        let b = dists_b.dist(state);
        let n = x_yields.n_cut();
        let mut h = a[0] * b[0] * x_yields.y(0, 0);
        for m in 1..=n {
            let bm = b.get(m).copied().unwrap_or(0.0);
            let am = a.get(m).copied().unwrap_or(0.0);
            h += a[0] * bm * x_yields.y(0, m) + am * b[0] * x_yields.y(m, 0);
        }
        h
    };
    Ok(AsymptoticTruth {
        y11: z_yields.y(1, 1),
        e11_bit: z_yields.e(1, 1),
        e11_phase: x_yields.e(1, 1),
        h: vacuum_sum(HeraldState::W),
        h_prime: vacuum_sum(HeraldState::X),
    })
}

/// How [`observe`] turns exact gains into "measured" statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservationMode {
    /// Return the exact expected values.
    Expected,
    /// Draw Poisson counts (and binomial error counts) with the given seed.
    Sampled { seed: u64 },
}

/// The protocol's observed statistics for a run of `N_t` pulse pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservedStats {
    pub s_ww: f64,
    pub s_xx: f64,
    pub t_ww: f64,
    pub s_yy: f64,
    pub t_yy: f64,
    /// QBER of the key-generating observable.
    pub e_yy: f64,
    /// Number of pulse pairs.
    pub n_t: f64,
    /// Expected accepted-event counts per observable (w-w, x-x, y-y).
    pub counts: [f64; 3],
}

/// Produces observed statistics from exact gains, either as expected values
/// or as seeded Poisson/binomial samples for estimator stress tests.
pub fn observe(
    ww: &GainResult,
    xx: &GainResult,
    yy: &GainResult,
    n_t: f64,
    mode: ObservationMode,
) -> Result<ObservedStats> {
    if !(n_t > 0.0) {
        return Err(Error::InvalidParam {
            name: "n_t",
            value: n_t,
            constraint: "N_t > 0",
        });
    }
    let counts = [n_t * ww.s, n_t * xx.s, n_t * yy.s];
    for (count, observable) in counts.iter().zip(["S_ww", "S_xx", "S_yy"]) {
        if *count <= 0.0 {
            return Err(Error::ZeroEffectiveCounts { observable });
        }
    }
    match mode {
        ObservationMode::Expected => Ok(ObservedStats {
            s_ww: ww.s,
            s_xx: xx.s,
            t_ww: ww.t,
            s_yy: yy.s,
            t_yy: yy.t,
            e_yy: yy.e,
            n_t,
            counts,
        }),
        ObservationMode::Sampled { seed } => {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let mut draw = |gain: &GainResult| -> (f64, f64) {
                let accepted = Poisson::new(n_t * gain.s)
                    .map(|p| p.sample(&mut rng))
                    .unwrap_or(0.0);
                let errors = if accepted >= 1.0 && gain.e > 0.0 {
                    Binomial::new(accepted as u64, gain.e.min(1.0))
                        .map(|b| b.sample(&mut rng) as f64)
                        .unwrap_or(0.0)
                } else {
                    0.0
                };
                (accepted / n_t, errors / n_t)
            };
            let (s_ww, t_ww) = draw(ww);
            let (s_xx, _) = draw(xx);
            let (s_yy, t_yy) = draw(yy);
            Ok(ObservedStats {
                s_ww,
                s_xx,
                t_ww,
                s_yy,
                t_yy,
                e_yy: if s_yy > 0.0 { t_yy / s_yy } else { 0.0 },
                n_t,
                counts,
            })
        }
    }
}
