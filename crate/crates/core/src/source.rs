//! Photon-number statistics of the passively heralded source.
//!
//! Each pulse pair from the down-conversion source has its idler arm split on
//! a beam splitter of transmittance `t` and watched by two local detectors.
//! The four possible click events (none, only D1, only D2, both) project the
//! signal arm onto four different photon-number distributions; those
//! distributions are what this module computes, both by the exact event sum
//! and by the symmetric-parameter closed forms, together with the ratio
//! condition the decoy estimator relies on.

use crate::math;
use crate::{Error, Result};
use alloc::vec::Vec;

/// Encoding basis a heralding event is assigned to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    X,
    Z,
}

/// Local detection events, in the fixed order: no click, only D1, only D2,
/// both click.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeraldEvent {
    V1,
    V2,
    V3,
    V4,
}

/// The signal states conditioned on each herald event. `W` and `X` are
/// encoded in the X basis and used for channel estimation; `Y` and `Z` are
/// encoded in the Z basis, with `Y` distilling the key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeraldState {
    W,
    X,
    Y,
    Z,
}

pub const ALL_STATES: [HeraldState; 4] = [
    HeraldState::W,
    HeraldState::X,
    HeraldState::Y,
    HeraldState::Z,
];

impl HeraldEvent {
    pub fn state(self) -> HeraldState {
        match self {
            HeraldEvent::V1 => HeraldState::W,
            HeraldEvent::V2 => HeraldState::X,
            HeraldEvent::V3 => HeraldState::Y,
            HeraldEvent::V4 => HeraldState::Z,
        }
    }
}

impl HeraldState {
    pub fn event(self) -> HeraldEvent {
        match self {
            HeraldState::W => HeraldEvent::V1,
            HeraldState::X => HeraldEvent::V2,
            HeraldState::Y => HeraldEvent::V3,
            HeraldState::Z => HeraldEvent::V4,
        }
    }

    pub fn basis(self) -> Basis {
        match self {
            HeraldState::W | HeraldState::X => Basis::X,
            HeraldState::Y | HeraldState::Z => Basis::Z,
        }
    }
}

/// Source knobs: mean photon number, local splitter transmittance, and the
/// efficiency/dark rate of each local detector branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceParams {
    /// Mean photon number of the down-conversion mode, `mu > 0`.
    pub mu: f64,
    /// Local beam-splitter transmittance, constrained to `(0, 1/2)`.
    pub t: f64,
    /// Overall efficiency of branch 1 (includes its detector).
    pub eta_1: f64,
    /// Overall efficiency of branch 2.
    pub eta_2: f64,
    /// Dark-count probability of detector D1.
    pub d_1: f64,
    /// Dark-count probability of detector D2.
    pub d_2: f64,
}

impl SourceParams {
    /// Symmetric construction: both branches share `eta_a` and `d_a`.
    pub fn symmetric(mu: f64, t: f64, eta_a: f64, d_a: f64) -> Result<Self> {
        let params = SourceParams {
            mu,
            t,
            eta_1: eta_a,
            eta_2: eta_a,
            d_1: d_a,
            d_2: d_a,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) {
            return Err(Error::InvalidParam {
                name: "mu",
                value: self.mu,
                constraint: "mu > 0",
            });
        }
        if !(self.t > 0.0 && self.t < 0.5) {
            return Err(Error::InvalidParam {
                name: "t",
                value: self.t,
                constraint: "t in (0, 1/2)",
            });
        }
        for (name, value) in [("eta_1", self.eta_1), ("eta_2", self.eta_2)] {
            if !(value > 0.0 && value <= 1.0) {
                return Err(Error::InvalidParam {
                    name,
                    value,
                    constraint: "eta in (0, 1]",
                });
            }
        }
        for (name, value) in [("d_1", self.d_1), ("d_2", self.d_2)] {
            if !(value >= 0.0 && value < 1.0) {
                return Err(Error::InvalidParam {
                    name,
                    value,
                    constraint: "d in [0, 1)",
                });
            }
        }
        Ok(())
    }

    pub fn is_symmetric(&self) -> bool {
        self.eta_1 == self.eta_2 && self.d_1 == self.d_2
    }

    /// Truncation order with Poisson tail mass below 1e-12: at least 10,
    /// `ceil(mu + 12 sqrt(mu) + 20)` for larger means, capped at 40.
    pub fn adaptive_n_cut(&self) -> usize {
        let n = self.mu + 12.0 * math::sqrt(self.mu) + 20.0;
        (n as usize + 1).clamp(10, 40)
    }
}

/// Poisson photon-number probability `mu^n e^-mu / n!`.
pub fn poisson_pn(mu: f64, n: usize) -> f64 {
    math::powi(mu, n as i32) * math::exp(-mu) / math::factorial(n)
}

/// Joint probability that an `n`-photon idler pulse yields exactly `s1`
/// detected photons in branch 1 and `s2` in branch 2, summed over the
/// splitter branching.
pub fn p_split_given_n(n: usize, s1: usize, s2: usize, params: &SourceParams) -> Result<f64> {
    if s1 + s2 > n {
        return Err(Error::SplitExceedsPhotons { s1, s2, n });
    }
    let mut total = 0.0;
    // k photons take branch 1, the rest branch 2; each branch then thins
    // with its own efficiency.
    for k in s1..=(n - s2) {
        total += math::binomial_pmf(k, n, params.t)
            * math::binomial_pmf(s1, k, params.eta_1)
            * math::binomial_pmf(s2, n - k, params.eta_2);
    }
    Ok(total)
}

/// Probability of herald event `event` given the detected split `(s1, s2)`.
pub fn p_event_given_split(
    event: HeraldEvent,
    s1: usize,
    s2: usize,
    params: &SourceParams,
) -> f64 {
    let (d1, d2) = (params.d_1, params.d_2);
    match (event, s1 > 0, s2 > 0) {
        (HeraldEvent::V1, false, false) => (1.0 - d1) * (1.0 - d2),
        (HeraldEvent::V1, _, _) => 0.0,
        (HeraldEvent::V2, false, false) => d1 * (1.0 - d2),
        (HeraldEvent::V2, true, false) => 1.0 - d2,
        (HeraldEvent::V2, _, true) => 0.0,
        (HeraldEvent::V3, false, false) => d2 * (1.0 - d1),
        (HeraldEvent::V3, false, true) => 1.0 - d1,
        (HeraldEvent::V3, true, _) => 0.0,
        (HeraldEvent::V4, false, false) => d1 * d2,
        (HeraldEvent::V4, true, false) => d2,
        (HeraldEvent::V4, false, true) => d1,
        (HeraldEvent::V4, true, true) => 1.0,
    }
}

/// Probability that the signal pulse carries `n` photons *and* event `event`
/// fires: the event sum over every detected split.
pub fn heralded_pn(event: HeraldEvent, n: usize, params: &SourceParams) -> Result<f64> {
    let mut conditional = 0.0;
    for s1 in 0..=n {
        for s2 in 0..=(n - s1) {
            conditional +=
                p_event_given_split(event, s1, s2, params) * p_split_given_n(n, s1, s2, params)?;
        }
    }
    Ok(poisson_pn(params.mu, n) * conditional)
}

/// Closed forms of the four heralded distributions for symmetric branch
/// parameters. The `z` distribution is the Poisson remainder.
///
/// The three click-free survival factors are `q0 = 1 - eta_a` (photon escapes
/// both detectors), `q1 = 1 - t eta_a` (escapes D1), `q2 = 1 - (1-t) eta_a`
/// (escapes D2); products are expanded so `eta_a = 1` stays finite.
pub fn heralded_pn_closed(state: HeraldState, n: usize, params: &SourceParams) -> Result<f64> {
    if !params.is_symmetric() {
        return Err(Error::AsymmetricParams);
    }
    let d_a = params.d_1;
    let eta_a = params.eta_1;
    let pn = poisson_pn(params.mu, n);
    let q0 = math::powi(1.0 - eta_a, n as i32);
    let q1 = math::powi(1.0 - params.t * eta_a, n as i32);
    let q2 = math::powi(1.0 - (1.0 - params.t) * eta_a, n as i32);
    // The single-click brackets are grouped as (q - q0) + d_a q0 so the
    // vacuum term stays exact instead of cancelling to d_a +- 1e-16.
    let value = match state {
        HeraldState::W => (1.0 - d_a) * (1.0 - d_a) * q0 * pn,
        HeraldState::X => (1.0 - d_a) * ((q2 - q0) + d_a * q0) * pn,
        HeraldState::Y => (1.0 - d_a) * ((q1 - q0) + d_a * q0) * pn,
        HeraldState::Z => {
            pn - heralded_pn_closed(HeraldState::W, n, params)?
                - heralded_pn_closed(HeraldState::X, n, params)?
                - heralded_pn_closed(HeraldState::Y, n, params)?
        }
    };
    Ok(value)
}

/// Outcome of [`check_ratio_condition`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioCheck {
    pub holds: bool,
    /// Smallest `n` at which the ratio sequence fails to increase, if any.
    pub first_violation: Option<usize>,
}

/// Verifies that `P_n^x / P_n^w` is strictly increasing from `n = 1` to
/// `n = 2` and non-decreasing beyond, up to `n_max`.
///
/// The strict step at `n = 2` is what keeps the estimator denominator
/// positive; a flat ratio (e.g. `eta_a = 0`) carries no photon-number
/// information and is reported as a violation.
pub fn check_ratio_condition(params: &SourceParams, n_max: usize) -> Result<RatioCheck> {
    if !params.is_symmetric() {
        return Err(Error::AsymmetricParams);
    }
    let ratio = |n: usize| -> Result<f64> {
        let w = heralded_pn_closed(HeraldState::W, n, params)?;
        let x = heralded_pn_closed(HeraldState::X, n, params)?;
        if w <= 0.0 {
            return Err(Error::InvalidParam {
                name: "P_n^w",
                value: w,
                constraint: "P_n^w > 0",
            });
        }
        Ok(x / w)
    };
    let mut previous = ratio(1)?;
    for n in 2..=n_max {
        let current = ratio(n)?;
        let violated = if n == 2 {
            current <= previous
        } else {
            current < previous
        };
        if violated {
            return Ok(RatioCheck {
                holds: false,
                first_violation: Some(n),
            });
        }
        previous = current;
    }
    Ok(RatioCheck {
        holds: true,
        first_violation: None,
    })
}

/// The four heralded photon-number distributions truncated at `n_cut`,
/// with the discarded Poisson tail recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct HeraldedDistributions {
    p_w: Vec<f64>,
    p_x: Vec<f64>,
    p_y: Vec<f64>,
    p_z: Vec<f64>,
    tail: f64,
}

impl HeraldedDistributions {
    /// Computes all four distributions from the closed forms.
    pub fn compute(params: &SourceParams, n_cut: usize) -> Result<Self> {
        params.validate()?;
        let mut dists = HeraldedDistributions {
            p_w: Vec::with_capacity(n_cut + 1),
            p_x: Vec::with_capacity(n_cut + 1),
            p_y: Vec::with_capacity(n_cut + 1),
            p_z: Vec::with_capacity(n_cut + 1),
            tail: 0.0,
        };
        let mut covered = 0.0;
        for n in 0..=n_cut {
            dists.p_w.push(heralded_pn_closed(HeraldState::W, n, params)?);
            dists.p_x.push(heralded_pn_closed(HeraldState::X, n, params)?);
            dists.p_y.push(heralded_pn_closed(HeraldState::Y, n, params)?);
            dists.p_z.push(heralded_pn_closed(HeraldState::Z, n, params)?);
            covered += poisson_pn(params.mu, n);
        }
        dists.tail = (1.0 - covered).max(0.0);
        Ok(dists)
    }

    /// Same with the adaptive truncation order.
    pub fn compute_adaptive(params: &SourceParams) -> Result<Self> {
        Self::compute(params, params.adaptive_n_cut())
    }

    #[cfg(test)]
    pub(crate) fn from_raw(
        p_w: Vec<f64>,
        p_x: Vec<f64>,
        p_y: Vec<f64>,
        p_z: Vec<f64>,
        tail: f64,
    ) -> Self {
        HeraldedDistributions {
            p_w,
            p_x,
            p_y,
            p_z,
            tail,
        }
    }

    pub fn n_cut(&self) -> usize {
        self.p_w.len() - 1
    }

    /// Poisson mass beyond `n_cut`.
    pub fn tail(&self) -> f64 {
        self.tail
    }

    /// `P_n^l` for the given state, zero beyond the truncation.
    pub fn prob(&self, state: HeraldState, n: usize) -> f64 {
        let v = self.dist(state);
        v.get(n).copied().unwrap_or(0.0)
    }

    pub fn dist(&self, state: HeraldState) -> &[f64] {
        match state {
            HeraldState::W => &self.p_w,
            HeraldState::X => &self.p_x,
            HeraldState::Y => &self.p_y,
            HeraldState::Z => &self.p_z,
        }
    }

    /// Total heralding probability of a state, `sum_n P_n^l`.
    pub fn state_probability(&self, state: HeraldState) -> f64 {
        self.dist(state).iter().sum()
    }

    /// Mass of the state's distribution that lies beyond `limit`.
    pub fn mass_beyond(&self, state: HeraldState, limit: usize) -> f64 {
        self.dist(state)
            .iter()
            .skip(limit + 1)
            .sum::<f64>()
            + self.tail
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn defaults() -> SourceParams {
        SourceParams::symmetric(0.1, 0.3, 0.75, 1e-6).unwrap()
    }

    #[test]
    fn poisson_values() {
        assert_abs_diff_eq!(poisson_pn(0.5, 1), 0.303_265_329_856_317, epsilon = 1e-15);
        assert_abs_diff_eq!(poisson_pn(0.7, 0), math::exp(-0.7), epsilon = 1e-16);
        let total: f64 = (0..=30).map(|n| poisson_pn(0.5, n)).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn split_vacuum_is_certain() {
        assert_eq!(p_split_given_n(0, 0, 0, &defaults()).unwrap(), 1.0);
    }

    #[test]
    fn split_single_photon_routing() {
        let params = SourceParams {
            mu: 0.1,
            t: 0.3,
            eta_1: 0.75,
            eta_2: 0.6,
            d_1: 0.0,
            d_2: 0.0,
        };
        // one photon: branch 1 and detected = t * eta_1
        assert_abs_diff_eq!(
            p_split_given_n(1, 1, 0, &params).unwrap(),
            0.225,
            epsilon = 1e-15
        );
    }

    #[test]
    fn split_two_photons_balanced_lossless() {
        let params = SourceParams {
            mu: 0.1,
            t: 0.5,
            eta_1: 1.0,
            eta_2: 1.0,
            d_1: 0.0,
            d_2: 0.0,
        };
        assert_abs_diff_eq!(p_split_given_n(2, 2, 0, &params).unwrap(), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(p_split_given_n(2, 1, 1, &params).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p_split_given_n(2, 0, 2, &params).unwrap(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn split_rejects_excess_counts() {
        assert!(matches!(
            p_split_given_n(1, 1, 1, &defaults()),
            Err(Error::SplitExceedsPhotons { .. })
        ));
    }

    #[test]
    fn event_table_rows() {
        let params = defaults();
        let d = 1e-6;
        assert_abs_diff_eq!(
            p_event_given_split(HeraldEvent::V1, 0, 0, &params),
            (1.0 - d) * (1.0 - d),
            epsilon = 1e-18
        );
        assert_eq!(p_event_given_split(HeraldEvent::V3, 1, 0, &params), 0.0);
        assert_eq!(p_event_given_split(HeraldEvent::V4, 2, 3, &params), 1.0);
        // each split row sums to one over the four events
        for (s1, s2) in [(0, 0), (1, 0), (0, 1), (2, 2)] {
            let total: f64 = [
                HeraldEvent::V1,
                HeraldEvent::V2,
                HeraldEvent::V3,
                HeraldEvent::V4,
            ]
            .iter()
            .map(|&e| p_event_given_split(e, s1, s2, &params))
            .sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn events_partition_the_poisson_mass() {
        let params = defaults();
        for n in 0..=12 {
            let total: f64 = [
                HeraldEvent::V1,
                HeraldEvent::V2,
                HeraldEvent::V3,
                HeraldEvent::V4,
            ]
            .iter()
            .map(|&e| heralded_pn(e, n, &params).unwrap())
            .sum();
            assert_abs_diff_eq!(total, poisson_pn(params.mu, n), epsilon = 1e-15);
        }
    }

    #[test]
    fn heralded_single_photon_value() {
        // V1 keeps only undetected photons: (1-d)^2 (1-eta)^n P_n.
        let p = heralded_pn(HeraldEvent::V1, 1, &defaults()).unwrap();
        assert_abs_diff_eq!(p, 0.022_620_890_209_051, epsilon = 1e-14);
    }

    #[test]
    fn heralded_vacuum_needs_dark_count() {
        let params = defaults();
        let p = heralded_pn(HeraldEvent::V2, 0, &params).unwrap();
        let expected = params.d_1 * (1.0 - params.d_2) * math::exp(-params.mu);
        assert_abs_diff_eq!(p, expected, epsilon = 1e-20);
    }

    #[test]
    fn closed_form_matches_event_sum() {
        for &mu in &[0.05, 0.1, 0.3, 0.6, 1.0] {
            for &t in &[0.05, 0.1, 0.3, 0.45, 0.4999] {
                for &eta in &[0.25, 0.75, 1.0] {
                    let params = SourceParams::symmetric(mu, t, eta, 1e-6).unwrap();
                    for n in 0..=20 {
                        for state in ALL_STATES {
                            let closed = heralded_pn_closed(state, n, &params).unwrap();
                            let summed = heralded_pn(state.event(), n, &params).unwrap();
                            assert!(
                                (closed - summed).abs() <= 1e-12,
                                "mu={mu} t={t} eta={eta} n={n} {state:?}: {closed} vs {summed}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn closed_form_vacuum_y() {
        let params = defaults();
        let p = heralded_pn_closed(HeraldState::Y, 0, &params).unwrap();
        assert_abs_diff_eq!(
            p,
            (1.0 - 1e-6) * 1e-6 * math::exp(-0.1),
            epsilon = 1e-20
        );
    }

    #[test]
    fn closed_form_rejects_asymmetric() {
        let mut params = defaults();
        params.eta_2 = 0.5;
        assert_eq!(
            heralded_pn_closed(HeraldState::W, 1, &params),
            Err(Error::AsymmetricParams)
        );
    }

    #[test]
    fn ratio_condition_holds_at_defaults() {
        for &t in &[0.1, 0.3, 0.4999] {
            let params = SourceParams::symmetric(0.1, t, 0.75, 1e-6).unwrap();
            let check = check_ratio_condition(&params, 10).unwrap();
            assert!(check.holds, "t={t}: {check:?}");
        }
    }

    #[test]
    fn ratio_condition_degenerates_without_efficiency() {
        // eta_a = 0 collapses the ratio to the constant d_a / (1 - d_a);
        // the strict step at n = 2 must flag it.
        let params = SourceParams {
            mu: 0.1,
            t: 0.3,
            eta_1: 0.0,
            eta_2: 0.0,
            d_1: 1e-6,
            d_2: 1e-6,
        };
        let check = check_ratio_condition(&params, 10).unwrap();
        assert!(!check.holds);
        assert_eq!(check.first_violation, Some(2));
    }

    #[test]
    fn distributions_complete_and_positive() {
        let params = defaults();
        let dists = HeraldedDistributions::compute(&params, 20).unwrap();
        for n in 0..=20 {
            let total: f64 = ALL_STATES.iter().map(|&s| dists.prob(s, n)).sum();
            assert_abs_diff_eq!(total, poisson_pn(params.mu, n), epsilon = 1e-15);
            for state in ALL_STATES {
                assert!(dists.prob(state, n) >= 0.0);
            }
        }
        assert!(dists.tail() < 1e-12);
        // un-heralded pulses dominate at small dark rate
        let w_mass = dists.state_probability(HeraldState::W);
        for state in [HeraldState::X, HeraldState::Y, HeraldState::Z] {
            assert!(w_mass > dists.state_probability(state));
        }
    }

    #[test]
    fn adaptive_cut_bounds_tail() {
        for &mu in &[0.05, 0.3, 1.0, 1.5] {
            let params = SourceParams::symmetric(mu, 0.3, 0.75, 1e-6).unwrap();
            let dists = HeraldedDistributions::compute_adaptive(&params).unwrap();
            assert!(dists.tail() < 1e-12, "mu={mu}: tail={}", dists.tail());
        }
    }
}
