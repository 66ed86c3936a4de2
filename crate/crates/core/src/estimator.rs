//! Passive decoy-state bounds on the single-photon-pair yield and phase
//! error.
//!
//! The protocol cannot observe the vacuum-related yield combination
//! `H = a_0^w b_0^w Y_00 + sum_m (a_0^w b_m^w Y_0m + a_m^w b_0^w Y_m0)`
//! directly, so both bounds are written as functions of a free parameter
//! `H_tilde` ranging over `[0, 2 T_ww_upper]`:
//!
//! ```text
//! Y11_XL(H) = [a1x b2x S_ww_low - a1w b2w S_xx_up - a1x b2x H] /
//!             [a1w a1x (b1w b2x - b1x b2w)]
//! e11_XU(H) = (T_ww_up - H/2) / (a1w b1w Y11_XL(H))
//! ```
//!
//! The worst case over the whole range is what enters the key rate. Since
//! the X-basis data must stand in for the Z-basis single-photon pairs, both
//! bounds are additionally widened by two-sample deviation terms before use.

use crate::bsm::YieldTable;
use crate::math;
use crate::protocol::{AsymptoticTruth, ObservedStats};
use crate::source::{HeraldState, HeraldedDistributions};
use crate::{Error, Result};
use alloc::vec::Vec;

/// Failure probability and the matching one-sided normal quantile used for
/// every statistical deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluctuationParams {
    pub epsilon: f64,
    pub z: f64,
}

impl FluctuationParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidParam {
                name: "epsilon",
                value: epsilon,
                constraint: "epsilon in (0, 1)",
            });
        }
        Ok(FluctuationParams {
            epsilon,
            z: math::inv_norm_cdf(1.0 - epsilon),
        })
    }

    /// No fluctuations at all; bounds become their asymptotic values.
    pub fn asymptotic() -> Self {
        FluctuationParams {
            epsilon: 0.5,
            z: 0.0,
        }
    }
}

impl Default for FluctuationParams {
    fn default() -> Self {
        FluctuationParams::new(1e-7).unwrap()
    }
}

/// Gaussian deviation interval for an observed probability: `value -+ z
/// sqrt(value / N_t)`, clamped to `[0, 1]`, with the additive floor `z / N_t`
/// for a zero-valued observable.
pub fn deviations(value: f64, n_t: f64, fluct: &FluctuationParams) -> (f64, f64) {
    if value <= 0.0 {
        return (0.0, (fluct.z / n_t).min(1.0));
    }
    let delta = fluct.z * math::sqrt(value / n_t);
    ((value - delta).max(0.0), (value + delta).min(1.0))
}

/// The three fluctuation-adjusted observables the bounds consume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluctuatedObservables {
    pub s_ww_lower: f64,
    pub s_xx_upper: f64,
    pub t_ww_upper: f64,
}

impl FluctuatedObservables {
    pub fn from_stats(obs: &ObservedStats, fluct: &FluctuationParams) -> Self {
        FluctuatedObservables {
            s_ww_lower: deviations(obs.s_ww, obs.n_t, fluct).0,
            s_xx_upper: deviations(obs.s_xx, obs.n_t, fluct).1,
            t_ww_upper: deviations(obs.t_ww, obs.n_t, fluct).1,
        }
    }
}

// First- and second-photon-number coefficients of both sides' w/x
// distributions.
struct Coefficients {
    a1w: f64,
    a1x: f64,
    b1w: f64,
    b2w: f64,
    b1x: f64,
    b2x: f64,
    denominator: f64,
}

impl Coefficients {
    fn new(dists_a: &HeraldedDistributions, dists_b: &HeraldedDistributions) -> Result<Self> {
        let c = Coefficients {
            a1w: dists_a.prob(HeraldState::W, 1),
            a1x: dists_a.prob(HeraldState::X, 1),
            b1w: dists_b.prob(HeraldState::W, 1),
            b2w: dists_b.prob(HeraldState::W, 2),
            b1x: dists_b.prob(HeraldState::X, 1),
            b2x: dists_b.prob(HeraldState::X, 2),
            denominator: 0.0,
        };
        let denominator = c.a1w * c.a1x * (c.b1w * c.b2x - c.b1x * c.b2w);
        if !(denominator > 0.0) {
            // the n = 1 -> 2 ratio step of the b side is what failed
            return Err(Error::RatioConditionViolated { first_violation: 2 });
        }
        Ok(Coefficients { denominator, ..c })
    }
}

/// Lower bound on the X-basis single-photon-pair yield at a given `h_tilde`,
/// clamped to `[0, 1]`.
pub fn y11_x_lower(
    obs: &FluctuatedObservables,
    dists_a: &HeraldedDistributions,
    dists_b: &HeraldedDistributions,
    h_tilde: f64,
) -> Result<f64> {
    let c = Coefficients::new(dists_a, dists_b)?;
    let numerator =
        c.a1x * c.b2x * obs.s_ww_lower - c.a1w * c.b2w * obs.s_xx_upper - c.a1x * c.b2x * h_tilde;
    Ok((numerator / c.denominator).clamp(0.0, 1.0))
}

/// Upper bound on the X-basis single-photon-pair error rate at `h_tilde`,
/// clamped to `[0, 1/2]`; returns the abort value 1/2 when the yield bound
/// vanished.
pub fn e11_x_upper(
    obs: &FluctuatedObservables,
    dists_a: &HeraldedDistributions,
    dists_b: &HeraldedDistributions,
    h_tilde: f64,
    y11_lower: f64,
) -> Result<f64> {
    if y11_lower <= 0.0 {
        return Ok(0.5);
    }
    let c = Coefficients::new(dists_a, dists_b)?;
    let numerator = (obs.t_ww_upper - h_tilde / 2.0).max(0.0);
    Ok((numerator / (c.a1w * c.b1w * y11_lower)).clamp(0.0, 0.5))
}

/// The admissible range of the joint vacuum parameter, `[0, 2 T_ww_upper]`.
pub fn h_range(obs: &FluctuatedObservables) -> (f64, f64) {
    (0.0, 2.0 * obs.t_ww_upper)
}

/// Transfers the X-basis bounds to the Z basis with two-sample deviation
/// widenings. `n_x` and `n_z` are the single-photon-pair pulse counts of the
/// two bases; the error deviation uses the accepted-event counts
/// `m = n * Y11_ZL`. Non-positive counts yield maximal pessimism `(0, 1/2)`.
pub fn cross_basis(
    y11_x: f64,
    e11_x: f64,
    n_x: f64,
    n_z: f64,
    fluct: &FluctuationParams,
) -> (f64, f64) {
    if !(n_x > 0.0) || !(n_z > 0.0) {
        return (0.0, 0.5);
    }
    let delta_y = fluct.z * math::sqrt(y11_x * (1.0 / n_x + 1.0 / n_z));
    let y11_z = (y11_x - delta_y).clamp(0.0, 1.0);
    if y11_z <= 0.0 {
        return (0.0, 0.5);
    }
    let m_x = n_x * y11_z;
    let m_z = n_z * y11_z;
    let inv_m = 1.0 / m_x + 1.0 / m_z;
    let variance = e11_x * (1.0 - e11_x) * inv_m;
    let delta_e = if variance > 0.0 {
        fluct.z * math::sqrt(variance)
    } else {
        // zero-variance guard: additive floor
        fluct.z * inv_m
    };
    (y11_z, (e11_x + delta_e).clamp(0.0, 0.5))
}

/// One evaluated point of the `H_tilde` scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundPoint {
    pub h_tilde: f64,
    pub y11_x_lower: f64,
    pub e11_x_upper: f64,
    /// Z-basis yield lower bound after the cross-basis widening.
    pub y11_z_lower: f64,
    /// Phase-error upper bound after the cross-basis widening.
    pub e11_ph_upper: f64,
}

impl BoundPoint {
    /// The part of the key rate that depends on `H_tilde`:
    /// `Y11_ZL (1 - H2(e11_phU))`.
    pub fn privacy_factor(&self) -> f64 {
        self.y11_z_lower * (1.0 - math::binary_entropy(self.e11_ph_upper))
    }
}

/// The full scan over the vacuum parameter: a uniform grid on
/// `[0, 2 T_ww_upper]` plus a golden-section refinement of the
/// privacy-minimizing point.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCurve {
    points: Vec<BoundPoint>,
    refined: BoundPoint,
}

impl BoundCurve {
    pub fn points(&self) -> &[BoundPoint] {
        &self.points
    }

    /// The refined privacy-minimizing point.
    pub fn worst(&self) -> &BoundPoint {
        &self.refined
    }

    /// Every evaluated point, grid and refined.
    pub fn iter_all(&self) -> impl Iterator<Item = &BoundPoint> {
        self.points.iter().chain(core::iter::once(&self.refined))
    }

    pub fn min_y11_z(&self) -> f64 {
        self.iter_all().map(|p| p.y11_z_lower).fold(1.0, f64::min)
    }

    pub fn max_e11_ph(&self) -> f64 {
        self.iter_all().map(|p| p.e11_ph_upper).fold(0.0, f64::max)
    }
}

/// Evaluates the bound pair on a uniform `H_tilde` grid and refines the
/// privacy-minimizing point by golden-section search.
pub fn worst_case_bounds(
    obs: &ObservedStats,
    dists_a: &HeraldedDistributions,
    dists_b: &HeraldedDistributions,
    fluct: &FluctuationParams,
    grid_size: usize,
) -> Result<BoundCurve> {
    if grid_size < 2 {
        return Err(Error::EmptyGrid);
    }
    let fluctuated = FluctuatedObservables::from_stats(obs, fluct);
    let (h_low, h_high) = h_range(&fluctuated);
    let n_x = obs.n_t * dists_a.prob(HeraldState::W, 1) * dists_b.prob(HeraldState::W, 1);
    let n_z = obs.n_t * dists_a.prob(HeraldState::Y, 1) * dists_b.prob(HeraldState::Y, 1);

    let evaluate = |h_tilde: f64| -> Result<BoundPoint> {
        let y_x = y11_x_lower(&fluctuated, dists_a, dists_b, h_tilde)?;
        let e_x = e11_x_upper(&fluctuated, dists_a, dists_b, h_tilde, y_x)?;
        let (y_z, e_ph) = if fluct.z == 0.0 {
            (y_x, e_x)
        } else {
            cross_basis(y_x, e_x, n_x, n_z, fluct)
        };
        Ok(BoundPoint {
            h_tilde,
            y11_x_lower: y_x,
            e11_x_upper: e_x,
            y11_z_lower: y_z,
            e11_ph_upper: e_ph,
        })
    };

    let mut points = Vec::with_capacity(grid_size);
    for i in 0..grid_size {
        let h = h_low + (h_high - h_low) * i as f64 / (grid_size - 1) as f64;
        points.push(evaluate(h)?);
    }

    let worst_index = points
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            a.privacy_factor()
                .partial_cmp(&b.privacy_factor())
                .unwrap_or(core::cmp::Ordering::Equal)
        })
        .map(|(i, _)| i)
        .unwrap_or(0);

    // golden-section refinement inside the bracket around the grid minimum
    let bracket_low = points[worst_index.saturating_sub(1)].h_tilde;
    let bracket_high = points[(worst_index + 1).min(grid_size - 1)].h_tilde;
    let refined = golden_section(bracket_low, bracket_high, |h| {
        evaluate(h).map(|p| (p.privacy_factor(), p))
    })?;
    let refined = if refined.privacy_factor() < points[worst_index].privacy_factor() {
        refined
    } else {
        points[worst_index]
    };

    Ok(BoundCurve { points, refined })
}

fn golden_section<F>(mut low: f64, mut high: f64, mut f: F) -> Result<BoundPoint>
where
    F: FnMut(f64) -> Result<(f64, BoundPoint)>,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = high - INV_PHI * (high - low);
    let mut x2 = low + INV_PHI * (high - low);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..60 {
        if f1.0 < f2.0 {
            high = x2;
            x2 = x1;
            f2 = f1;
            x1 = high - INV_PHI * (high - low);
            f1 = f(x1)?;
        } else {
            low = x1;
            x1 = x2;
            f1 = f2;
            x2 = low + INV_PHI * (high - low);
            f2 = f(x2)?;
        }
        if (high - low).abs() < 1e-18 {
            break;
        }
    }
    Ok(if f1.0 < f2.0 { f1.1 } else { f2.1 })
}

/// Convenience check used by tests and the self-test command: the admissible
/// range must contain the model's true vacuum term.
pub fn range_contains_truth(obs: &FluctuatedObservables, truth: &AsymptoticTruth) -> bool {
    let (low, high) = h_range(obs);
    truth.h >= low && truth.h <= high
}

/// Builds a toy yield table whose only nonzero entry is `Y_11 = y11` with
/// error `e11`; on such a model the bounds recover the inputs exactly.
pub fn single_yield_table(basis: crate::source::Basis, y11: f64, e11: f64) -> YieldTable {
    let mut yields = alloc::vec![0.0; 9];
    let mut errors = alloc::vec![0.0; 9];
    yields[1 * 3 + 1] = y11;
    errors[1 * 3 + 1] = e11;
    YieldTable::from_parts(basis, 2, yields, errors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{gains, observe, ObservationMode};
    use crate::source::{Basis, SourceParams};
    use approx::assert_abs_diff_eq;

    fn toy_setup(
        y11: f64,
        e11: f64,
    ) -> (HeraldedDistributions, ObservedStats, FluctuatedObservables) {
        let source = SourceParams::symmetric(0.2, 0.3, 0.75, 1e-6).unwrap();
        let dists = HeraldedDistributions::compute_adaptive(&source).unwrap();
        let x_table = single_yield_table(Basis::X, y11, e11);
        let z_table = single_yield_table(Basis::Z, y11, e11);
        let ww = gains(HeraldState::W, HeraldState::W, &dists, &dists, &x_table).unwrap();
        let xx = gains(HeraldState::X, HeraldState::X, &dists, &dists, &x_table).unwrap();
        let yy = gains(HeraldState::Y, HeraldState::Y, &dists, &dists, &z_table).unwrap();
        let obs = observe(&ww, &xx, &yy, 1e9, ObservationMode::Expected).unwrap();
        let fluctuated = FluctuatedObservables::from_stats(&obs, &FluctuationParams::asymptotic());
        (dists, obs, fluctuated)
    }

    #[test]
    fn deviation_values() {
        let fluct = FluctuationParams::new(1e-7).unwrap();
        assert_abs_diff_eq!(fluct.z, 5.199_337_582_290_661, epsilon = 1e-9);
        let (low, high) = deviations(1e-5, 1e9, &fluct);
        assert_abs_diff_eq!(low, 1e-5 - 5.199_337_582_290_661e-7, epsilon = 1e-15);
        assert_abs_diff_eq!(high, 1e-5 + 5.199_337_582_290_661e-7, epsilon = 1e-15);
    }

    #[test]
    fn deviation_zero_floor_and_asymptotics() {
        let fluct = FluctuationParams::new(1e-7).unwrap();
        let (low, high) = deviations(0.0, 1e9, &fluct);
        assert_eq!(low, 0.0);
        assert_abs_diff_eq!(high, fluct.z / 1e9, epsilon = 1e-24);
        // N_t -> infinity collapses the interval
        let (low, high) = deviations(1e-5, 1e30, &fluct);
        assert_abs_diff_eq!(low, 1e-5, epsilon = 1e-16);
        assert_abs_diff_eq!(high, 1e-5, epsilon = 1e-16);
    }

    #[test]
    fn toy_model_recovers_yield_exactly() {
        let (dists, _, fluctuated) = toy_setup(0.1, 0.02);
        let y = y11_x_lower(&fluctuated, &dists, &dists, 0.0).unwrap();
        assert_abs_diff_eq!(y, 0.1, epsilon = 1e-12);
        let e = e11_x_upper(&fluctuated, &dists, &dists, 0.0, y).unwrap();
        assert_abs_diff_eq!(e, 0.02, epsilon = 1e-12);
    }

    #[test]
    fn yield_bound_is_affine_and_decreasing_in_h() {
        let (dists, _, fluctuated) = toy_setup(0.2, 0.01);
        let h2 = fluctuated.t_ww_upper; // interior points, no clamping
        let y0 = y11_x_lower(&fluctuated, &dists, &dists, 0.0).unwrap();
        let y1 = y11_x_lower(&fluctuated, &dists, &dists, h2 / 2.0).unwrap();
        let y2 = y11_x_lower(&fluctuated, &dists, &dists, h2).unwrap();
        assert!(y0 > y1 && y1 > y2);
        // three-point collinearity
        assert_abs_diff_eq!(y0 - y1, y1 - y2, epsilon = 1e-12);
    }

    #[test]
    fn huge_h_clamps_to_zero() {
        let (dists, _, mut fluctuated) = toy_setup(0.1, 0.02);
        fluctuated.t_ww_upper = 0.4;
        let (_, high) = h_range(&fluctuated);
        let y = y11_x_lower(&fluctuated, &dists, &dists, high).unwrap();
        assert_eq!(y, 0.0);
        let e = e11_x_upper(&fluctuated, &dists, &dists, high, y).unwrap();
        assert_eq!(e, 0.5);
    }

    #[test]
    fn error_bound_vanishes_at_the_range_end() {
        let (dists, _, fluctuated) = toy_setup(0.1, 0.02);
        let (_, high) = h_range(&fluctuated);
        // keep the yield bound positive by evaluating y at 0 but e at the end
        let y = y11_x_lower(&fluctuated, &dists, &dists, 0.0).unwrap();
        let e = e11_x_upper(&fluctuated, &dists, &dists, high, y).unwrap();
        assert_eq!(e, 0.0);
    }

    #[test]
    fn h_range_formula() {
        let obs = FluctuatedObservables {
            s_ww_lower: 0.0,
            s_xx_upper: 0.0,
            t_ww_upper: 3.2e-6,
        };
        assert_eq!(h_range(&obs), (0.0, 6.4e-6));
        let zero = FluctuatedObservables {
            t_ww_upper: 0.0,
            ..obs
        };
        assert_eq!(h_range(&zero), (0.0, 0.0));
    }

    #[test]
    fn cross_basis_asymptotic_identity() {
        let fluct = FluctuationParams::new(1e-7).unwrap();
        let (y, e) = cross_basis(0.1, 0.02, 1e30, 1e30, &fluct);
        assert_abs_diff_eq!(y, 0.1, epsilon = 1e-10);
        assert_abs_diff_eq!(e, 0.02, epsilon = 1e-10);
    }

    #[test]
    fn cross_basis_deviation_value() {
        let fluct = FluctuationParams::new(1e-7).unwrap();
        let (y, _) = cross_basis(0.1, 0.02, 1e6, 1e6, &fluct);
        let expected_delta = 5.199_337_582_290_661 * (2e-7f64).sqrt();
        assert_abs_diff_eq!(0.1 - y, expected_delta, epsilon = 1e-9);
    }

    #[test]
    fn cross_basis_zero_error_floor() {
        let fluct = FluctuationParams::new(1e-7).unwrap();
        let (y, e) = cross_basis(0.1, 0.0, 1e8, 1e8, &fluct);
        assert!(y > 0.0);
        let inv_m = 2.0 / (1e8 * y);
        assert_abs_diff_eq!(e, fluct.z * inv_m, epsilon = 1e-12);
    }

    #[test]
    fn cross_basis_zero_counts_pessimism() {
        let fluct = FluctuationParams::new(1e-7).unwrap();
        assert_eq!(cross_basis(0.1, 0.02, 0.0, 1e6, &fluct), (0.0, 0.5));
    }

    #[test]
    fn scan_recovers_toy_truth_at_the_origin() {
        let (dists, obs, _) = toy_setup(0.1, 0.02);
        let curve = worst_case_bounds(&obs, &dists, &dists, &FluctuationParams::asymptotic(), 201)
            .unwrap();
        let first = &curve.points()[0];
        assert_eq!(first.h_tilde, 0.0);
        assert_abs_diff_eq!(first.y11_x_lower, 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(first.e11_x_upper, 0.02, epsilon = 1e-12);
        // grid covers both endpoints
        let last = curve.points().last().unwrap();
        let (_, high) = h_range(&FluctuatedObservables::from_stats(
            &obs,
            &FluctuationParams::asymptotic(),
        ));
        assert_abs_diff_eq!(last.h_tilde, high, epsilon = 1e-20);
    }

    #[test]
    fn refinement_never_exceeds_the_grid_minimum() {
        let (dists, obs, _) = toy_setup(0.1, 0.02);
        let fluct = FluctuationParams::new(1e-7).unwrap();
        let curve = worst_case_bounds(&obs, &dists, &dists, &fluct, 201).unwrap();
        let grid_min = curve
            .points()
            .iter()
            .map(|p| p.privacy_factor())
            .fold(f64::INFINITY, f64::min);
        assert!(curve.worst().privacy_factor() <= grid_min + 1e-18);
    }

    #[test]
    fn bounds_worsen_as_data_shrinks() {
        let source = SourceParams::symmetric(0.2, 0.3, 0.75, 1e-6).unwrap();
        let dists = HeraldedDistributions::compute_adaptive(&source).unwrap();
        let x_table = single_yield_table(Basis::X, 0.1, 0.02);
        let z_table = single_yield_table(Basis::Z, 0.1, 0.02);
        let ww = gains(HeraldState::W, HeraldState::W, &dists, &dists, &x_table).unwrap();
        let xx = gains(HeraldState::X, HeraldState::X, &dists, &dists, &x_table).unwrap();
        let yy = gains(HeraldState::Y, HeraldState::Y, &dists, &dists, &z_table).unwrap();
        let fluct = FluctuationParams::new(1e-7).unwrap();
        let mut previous_y = 0.0;
        let mut previous_e = 1.0;
        for n_t in [1e13, 1e11, 1e9] {
            let obs = observe(&ww, &xx, &yy, n_t, ObservationMode::Expected).unwrap();
            let curve = worst_case_bounds(&obs, &dists, &dists, &fluct, 101).unwrap();
            let worst = curve.worst();
            if previous_y > 0.0 {
                assert!(worst.y11_z_lower <= previous_y + 1e-15);
                assert!(worst.e11_ph_upper >= previous_e - 1e-15);
            }
            previous_y = worst.y11_z_lower;
            previous_e = worst.e11_ph_upper;
        }
    }

    #[test]
    fn degenerate_source_is_rejected() {
        // a flat x/w ratio makes the denominator vanish
        let w = alloc::vec![0.5, 0.2, 0.1];
        let x = alloc::vec![0.05, 0.02, 0.01]; // exactly 0.1 * w
        let dists = HeraldedDistributions::from_raw(w.clone(), x, w.clone(), w, 0.0);
        let obs = FluctuatedObservables {
            s_ww_lower: 1e-5,
            s_xx_upper: 1e-5,
            t_ww_upper: 1e-7,
        };
        assert!(matches!(
            y11_x_lower(&obs, &dists, &dists, 0.0),
            Err(Error::RatioConditionViolated { .. })
        ));
    }
}
