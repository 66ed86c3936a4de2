//! Yields and error rates of the relay's Bell-state measurement, from first
//! principles.
//!
//! Alice and Bob each send a Fock state of linearly polarized photons into a
//! balanced beam splitter followed by one polarizing splitter and two
//! threshold detectors per output port. The detectors are labelled, in bit
//! order, D1H, D1V, D2H, D2V. A `psi-` event is a coincidence of {D1H, D2V}
//! or {D1V, D2H}; a `psi+` event is {D1H, D1V} or {D2H, D2V}; in both cases
//! the other two detectors must stay silent.
//!
//! The interference itself is computed exactly by expanding the input
//! creation-operator monomial through the mode transformation
//! `a -> (c + d)/sqrt(2)`, `b -> (c - d)/sqrt(2)`. Channel and detector loss
//! are binomial thinnings (loss commutes with passive linear optics for
//! photon-counting statistics), misalignment is a fixed rotation of Bob's
//! polarization frame by `delta` with `sin^2(delta)` equal to the misalignment
//! error, and dark counts act independently per detector.

use crate::math;
use crate::source::Basis;
use crate::{Error, Result};
use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

/// Hard cap on the photon number entering a single interference expansion.
pub const MAX_EXPANSION: usize = 64;

/// Default per-side photon-number cut of the yield table. Poisson tails at
/// the mean photon numbers the optimizer visits are below 1e-12 by n = 10.
pub const DEFAULT_N_CUT: usize = 10;

/// Click-pattern masks accepted as `psi-` (D1H+D2V, D1V+D2H).
pub const PSI_MINUS_MASKS: [usize; 2] = [0b1001, 0b0110];
/// Click-pattern masks accepted as `psi+` (D1H+D1V, D2H+D2V).
pub const PSI_PLUS_MASKS: [usize; 2] = [0b0011, 0b1100];

/// Which Bell outcomes the relay announces as successful.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BellAcceptance {
    /// Accept both `psi-` and `psi+` (maximizes the yield).
    #[default]
    Both,
    /// Accept only `psi-`.
    PsiMinusOnly,
}

impl BellAcceptance {
    fn masks(self) -> &'static [usize] {
        match self {
            BellAcceptance::Both => &[0b1001, 0b0110, 0b0011, 0b1100],
            BellAcceptance::PsiMinusOnly => &PSI_MINUS_MASKS,
        }
    }
}

/// Untrusted-relay channel parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Total Alice-to-Bob fiber length in km; the relay sits in the middle.
    pub total_distance_km: f64,
    /// Fiber loss coefficient in dB/km.
    pub loss_coeff_db_per_km: f64,
    /// Detection efficiency of the relay detectors.
    pub eta_c: f64,
    /// Dark-count probability per gate of each relay detector.
    pub d_c: f64,
    /// Misalignment error; the error floor of single-photon pairs.
    pub e_d: f64,
}

impl ChannelParams {
    pub fn new(
        total_distance_km: f64,
        loss_coeff_db_per_km: f64,
        eta_c: f64,
        d_c: f64,
        e_d: f64,
    ) -> Result<Self> {
        let params = ChannelParams {
            total_distance_km,
            loss_coeff_db_per_km,
            eta_c,
            d_c,
            e_d,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.total_distance_km >= 0.0) {
            return Err(Error::InvalidParam {
                name: "total_distance_km",
                value: self.total_distance_km,
                constraint: "distance >= 0",
            });
        }
        if !(self.loss_coeff_db_per_km >= 0.0) {
            return Err(Error::InvalidParam {
                name: "loss_coeff_db_per_km",
                value: self.loss_coeff_db_per_km,
                constraint: "loss >= 0",
            });
        }
        if !(self.eta_c > 0.0 && self.eta_c <= 1.0) {
            return Err(Error::InvalidParam {
                name: "eta_c",
                value: self.eta_c,
                constraint: "eta_c in (0, 1]",
            });
        }
        if !(self.d_c >= 0.0 && self.d_c < 1.0) {
            return Err(Error::InvalidParam {
                name: "d_c",
                value: self.d_c,
                constraint: "d_c in [0, 1)",
            });
        }
        if !(self.e_d >= 0.0 && self.e_d < 0.5) {
            return Err(Error::InvalidParam {
                name: "e_d",
                value: self.e_d,
                constraint: "e_d in [0, 0.5)",
            });
        }
        Ok(())
    }

    /// Transmittance of one arm (half the total distance).
    pub fn eta_arm(&self) -> f64 {
        arm_transmittance(self.total_distance_km / 2.0, self.loss_coeff_db_per_km).unwrap()
    }

    /// Bob's polarization-frame rotation, `sin^2(delta) = e_d`.
    pub fn misalignment_angle(&self) -> f64 {
        math::asin(math::sqrt(self.e_d))
    }
}

/// Fiber transmittance `10^(-loss * distance / 10)`.
pub fn arm_transmittance(distance_km: f64, loss_coeff_db_per_km: f64) -> Result<f64> {
    if !(distance_km >= 0.0) {
        return Err(Error::InvalidParam {
            name: "distance_km",
            value: distance_km,
            constraint: "distance >= 0",
        });
    }
    if !(loss_coeff_db_per_km >= 0.0) {
        return Err(Error::InvalidParam {
            name: "loss_coeff_db_per_km",
            value: loss_coeff_db_per_km,
            constraint: "loss >= 0",
        });
    }
    Ok(math::powf(10.0, -loss_coeff_db_per_km * distance_km / 10.0))
}

/// Exact photon-number distribution over the four detector modes after the
/// interference of `j` photons from Alice and `k` from Bob.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOutcomeDistribution {
    outcomes: BTreeMap<[u8; 4], f64>,
    total_photons: usize,
}

impl FockOutcomeDistribution {
    pub fn outcomes(&self) -> impl Iterator<Item = (&[u8; 4], &f64)> {
        self.outcomes.iter()
    }

    pub fn total_photons(&self) -> usize {
        self.total_photons
    }

    pub fn probability(&self, outcome: [u8; 4]) -> f64 {
        self.outcomes.get(&outcome).copied().unwrap_or(0.0)
    }
}

/// Probabilities of the sixteen click patterns; index is the detector bitmask
/// (bit 0 = D1H, 1 = D1V, 2 = D2H, 3 = D2V).
pub type ClickDistribution = [f64; 16];

// One side's creation operator power, expanded over the four detector modes:
// terms ((m1, m2, m3, m4), coefficient).
fn side_expansion(n: usize, angle: f64, negate_port2: bool) -> Vec<([u8; 4], f64)> {
    let inv_sqrt2 = 1.0 / math::sqrt(2.0);
    let sign = if negate_port2 { -1.0 } else { 1.0 };
    // per-mode amplitudes of (cos a_H + sin a_V) routed through the splitter
    let amps = [
        math::cos(angle) * inv_sqrt2,
        math::sin(angle) * inv_sqrt2,
        sign * math::cos(angle) * inv_sqrt2,
        sign * math::sin(angle) * inv_sqrt2,
    ];
    let mut terms = Vec::with_capacity((n + 1) * (n + 2) * (n + 3) / 6);
    for m1 in 0..=n {
        for m2 in 0..=(n - m1) {
            for m3 in 0..=(n - m1 - m2) {
                let m4 = n - m1 - m2 - m3;
                let multinomial = math::factorial(n)
                    / (math::factorial(m1)
                        * math::factorial(m2)
                        * math::factorial(m3)
                        * math::factorial(m4));
                let coeff = multinomial
                    * math::powi(amps[0], m1 as i32)
                    * math::powi(amps[1], m2 as i32)
                    * math::powi(amps[2], m3 as i32)
                    * math::powi(amps[3], m4 as i32);
                if coeff != 0.0 {
                    terms.push(([m1 as u8, m2 as u8, m3 as u8, m4 as u8], coeff));
                }
            }
        }
    }
    terms
}

// Flat outcome probabilities for total photon number m, indexed by
// (n1 * (m+1) + n2) * (m+1) + n3 with n4 implied.
struct FlatOutcomes {
    probs: Vec<f64>,
    total: usize,
}

impl FlatOutcomes {
    #[inline]
    fn index(&self, n1: usize, n2: usize, n3: usize) -> usize {
        (n1 * (self.total + 1) + n2) * (self.total + 1) + n3
    }
}

fn interference_flat(j: usize, k: usize, pol_a: f64, pol_b: f64) -> FlatOutcomes {
    let total = j + k;
    let side_a = side_expansion(j, pol_a, false);
    let side_b = side_expansion(k, pol_b, true);
    let stride = total + 1;
    let mut coeffs = vec![0.0f64; stride * stride * stride];
    for &(ma, ca) in &side_a {
        for &(mb, cb) in &side_b {
            let n1 = (ma[0] + mb[0]) as usize;
            let n2 = (ma[1] + mb[1]) as usize;
            let n3 = (ma[2] + mb[2]) as usize;
            coeffs[(n1 * stride + n2) * stride + n3] += ca * cb;
        }
    }
    // |coeff|^2 * n1! n2! n3! n4! / (j! k!)
    let norm = math::factorial(j) * math::factorial(k);
    let mut out = FlatOutcomes {
        probs: vec![0.0f64; stride * stride * stride],
        total,
    };
    for n1 in 0..=total {
        for n2 in 0..=(total - n1) {
            for n3 in 0..=(total - n1 - n2) {
                let n4 = total - n1 - n2 - n3;
                let idx = (n1 * stride + n2) * stride + n3;
                let c = coeffs[idx];
                if c != 0.0 {
                    out.probs[idx] = c
                        * c
                        * math::factorial(n1)
                        * math::factorial(n2)
                        * math::factorial(n3)
                        * math::factorial(n4)
                        / norm;
                }
            }
        }
    }
    out
}

/// Expands `j` photons at polarization angle `pol_a` (Alice) against `k`
/// photons at `pol_b` (Bob) through the balanced beam splitter and polarizing
/// splitters, returning exact outcome probabilities over the four detector
/// modes.
pub fn fock_interference(
    j: usize,
    k: usize,
    pol_a: f64,
    pol_b: f64,
) -> Result<FockOutcomeDistribution> {
    if j + k > MAX_EXPANSION {
        return Err(Error::TruncationExceeded {
            requested: j + k,
            limit: MAX_EXPANSION,
        });
    }
    let flat = interference_flat(j, k, pol_a, pol_b);
    let total = flat.total;
    let mut outcomes = BTreeMap::new();
    for n1 in 0..=total {
        for n2 in 0..=(total - n1) {
            for n3 in 0..=(total - n1 - n2) {
                let n4 = total - n1 - n2 - n3;
                let p = flat.probs[flat.index(n1, n2, n3)];
                if p != 0.0 {
                    outcomes.insert([n1 as u8, n2 as u8, n3 as u8, n4 as u8], p);
                }
            }
        }
    }
    Ok(FockOutcomeDistribution {
        outcomes,
        total_photons: total,
    })
}

// Click / no-click probabilities of a threshold detector seeing n photons.
// The no-click branch is the direct product (1 - d_c)(1 - eta_c)^n and the
// click branch is d_c + (1 - d_c)(1 - (1 - eta_c)^n), which keeps the
// dark-count-only case (n = 0) exact instead of cancelling to d_c +- 1e-16.
#[inline]
fn click_silent(n: usize, eta_c: f64, d_c: f64) -> (f64, f64) {
    let survive_none = math::powi(1.0 - eta_c, n as i32);
    let silent = (1.0 - d_c) * survive_none;
    let click = d_c + (1.0 - d_c) * (1.0 - survive_none);
    (click, silent)
}

fn click_patterns_flat(flat: &FlatOutcomes, eta_c: f64, d_c: f64) -> ClickDistribution {
    let mut patterns = [0.0f64; 16];
    let total = flat.total;
    for n1 in 0..=total {
        for n2 in 0..=(total - n1) {
            for n3 in 0..=(total - n1 - n2) {
                let n4 = total - n1 - n2 - n3;
                let p = flat.probs[flat.index(n1, n2, n3)];
                if p == 0.0 {
                    continue;
                }
                let pc = [
                    click_silent(n1, eta_c, d_c),
                    click_silent(n2, eta_c, d_c),
                    click_silent(n3, eta_c, d_c),
                    click_silent(n4, eta_c, d_c),
                ];
                for (mask, slot) in patterns.iter_mut().enumerate() {
                    let mut q = p;
                    for (bit, &(click, silent)) in pc.iter().enumerate() {
                        q *= if mask >> bit & 1 == 1 { click } else { silent };
                    }
                    *slot += q;
                }
            }
        }
    }
    patterns
}

/// Threshold-detector click statistics for an interference outcome
/// distribution: each mode with `n` arriving photons clicks with probability
/// `1 - (1 - d_c)(1 - eta_c)^n`, independently across modes.
pub fn click_pattern_probs(
    dist: &FockOutcomeDistribution,
    eta_c: f64,
    d_c: f64,
) -> ClickDistribution {
    let mut patterns = [0.0f64; 16];
    for (outcome, &p) in dist.outcomes() {
        let pc = [
            click_silent(outcome[0] as usize, eta_c, d_c),
            click_silent(outcome[1] as usize, eta_c, d_c),
            click_silent(outcome[2] as usize, eta_c, d_c),
            click_silent(outcome[3] as usize, eta_c, d_c),
        ];
        for (mask, slot) in patterns.iter_mut().enumerate() {
            let mut q = p;
            for (bit, &(click, silent)) in pc.iter().enumerate() {
                q *= if mask >> bit & 1 == 1 { click } else { silent };
            }
            *slot += q;
        }
    }
    patterns
}

fn encoding_angle(basis: Basis, bit: u8) -> f64 {
    let offset = match basis {
        Basis::Z => 0.0,
        Basis::X => core::f64::consts::FRAC_PI_4,
    };
    offset + f64::from(bit) * core::f64::consts::FRAC_PI_2
}

/// Click-pattern distribution for definite photon numbers `(j, k)` arriving
/// at the relay (after any channel loss) with the given basis and bit pair.
/// Bob's frame carries the misalignment rotation.
pub fn click_distribution(
    j: usize,
    k: usize,
    basis: Basis,
    bits: (u8, u8),
    params: &ChannelParams,
) -> Result<ClickDistribution> {
    if j + k > MAX_EXPANSION {
        return Err(Error::TruncationExceeded {
            requested: j + k,
            limit: MAX_EXPANSION,
        });
    }
    let pol_a = encoding_angle(basis, bits.0);
    let pol_b = encoding_angle(basis, bits.1) + params.misalignment_angle();
    let flat = interference_flat(j, k, pol_a, pol_b);
    Ok(click_patterns_flat(&flat, params.eta_c, params.d_c))
}

// Accepted and wrong-bit probabilities for a click distribution.
// Z basis: both Bell outcomes imply anti-correlated bits. X basis: psi-
// implies anti-correlated bits, psi+ correlated ones.
fn accept_error(
    patterns: &ClickDistribution,
    basis: Basis,
    bits: (u8, u8),
    acceptance: BellAcceptance,
) -> (f64, f64) {
    let equal_bits = bits.0 == bits.1;
    let mut accepted = 0.0;
    let mut wrong = 0.0;
    for &mask in acceptance.masks() {
        let p = patterns[mask];
        accepted += p;
        let is_error = match basis {
            Basis::Z => equal_bits,
            Basis::X => {
                if PSI_MINUS_MASKS.contains(&mask) {
                    equal_bits
                } else {
                    !equal_bits
                }
            }
        };
        if is_error {
            wrong += p;
        }
    }
    (accepted, wrong)
}

const BIT_PAIRS: [(u8, u8); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

/// Yield `Y_jk` and error rate `e_jk` for `j` photons sent by Alice and `k`
/// by Bob, averaged over the basis's equiprobable bit pairs, including arm
/// loss, detector efficiency, dark counts and misalignment.
pub fn yield_error(j: usize, k: usize, basis: Basis, params: &ChannelParams) -> Result<(f64, f64)> {
    yield_error_with(j, k, basis, params, BellAcceptance::default())
}

/// [`yield_error`] with an explicit Bell-outcome acceptance set.
pub fn yield_error_with(
    j: usize,
    k: usize,
    basis: Basis,
    params: &ChannelParams,
    acceptance: BellAcceptance,
) -> Result<(f64, f64)> {
    params.validate()?;
    let eta_arm = params.eta_arm();
    let mut yield_total = 0.0;
    let mut error_total = 0.0;
    for bits in BIT_PAIRS {
        for surviving_j in 0..=j {
            let weight_j = math::binomial_pmf(surviving_j, j, eta_arm);
            for surviving_k in 0..=k {
                let weight_k = math::binomial_pmf(surviving_k, k, eta_arm);
                let patterns = click_distribution(surviving_j, surviving_k, basis, bits, params)?;
                let (accepted, wrong) = accept_error(&patterns, basis, bits, acceptance);
                yield_total += 0.25 * weight_j * weight_k * accepted;
                error_total += 0.25 * weight_j * weight_k * wrong;
            }
        }
    }
    let e = if yield_total > 0.0 {
        error_total / yield_total
    } else {
        0.0
    };
    Ok((yield_total, e))
}

/// Precomputed `Y_jk`, `e_jk` for one basis, `0 <= j, k <= n_cut`.
///
/// Construction is single-threaded; queries afterwards are read-only and safe
/// to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct YieldTable {
    basis: Basis,
    n_cut: usize,
    yields: Vec<f64>,
    errors: Vec<f64>,
}

impl YieldTable {
    pub fn build(params: &ChannelParams, basis: Basis, n_cut: usize) -> Result<Self> {
        Self::build_with(params, basis, n_cut, BellAcceptance::default())
    }

    pub fn build_with(
        params: &ChannelParams,
        basis: Basis,
        n_cut: usize,
        acceptance: BellAcceptance,
    ) -> Result<Self> {
        params.validate()?;
        if 2 * n_cut > MAX_EXPANSION {
            return Err(Error::TruncationExceeded {
                requested: 2 * n_cut,
                limit: MAX_EXPANSION,
            });
        }
        let size = n_cut + 1;
        // Bit-averaged acceptance and error probabilities per surviving
        // photon pair; the binomial thinning below reuses them for every
        // (j, k).
        let mut accepted = vec![0.0f64; size * size];
        let mut wrong = vec![0.0f64; size * size];
        for sj in 0..size {
            for sk in 0..size {
                let mut acc = 0.0;
                let mut err = 0.0;
                for bits in BIT_PAIRS {
                    let patterns = click_distribution(sj, sk, basis, bits, params)?;
                    let (a, w) = accept_error(&patterns, basis, bits, acceptance);
                    acc += 0.25 * a;
                    err += 0.25 * w;
                }
                accepted[sj * size + sk] = acc;
                wrong[sj * size + sk] = err;
            }
        }

        let eta_arm = params.eta_arm();
        let mut yields = vec![0.0f64; size * size];
        let mut errors = vec![0.0f64; size * size];
        for j in 0..size {
            let thin_j: Vec<f64> = (0..=j).map(|s| math::binomial_pmf(s, j, eta_arm)).collect();
            for k in 0..size {
                let thin_k: Vec<f64> =
                    (0..=k).map(|s| math::binomial_pmf(s, k, eta_arm)).collect();
                let mut y = 0.0;
                let mut t = 0.0;
                for (sj, &wj) in thin_j.iter().enumerate() {
                    for (sk, &wk) in thin_k.iter().enumerate() {
                        y += wj * wk * accepted[sj * size + sk];
                        t += wj * wk * wrong[sj * size + sk];
                    }
                }
                yields[j * size + k] = y;
                errors[j * size + k] = if y > 0.0 { t / y } else { 0.0 };
            }
        }
        Ok(YieldTable {
            basis,
            n_cut,
            yields,
            errors,
        })
    }

    /// Assembles a table from raw entries (row-major, `(n_cut + 1)^2` each).
    /// Used for synthetic models in tests and self-checks.
    pub fn from_parts(basis: Basis, n_cut: usize, yields: Vec<f64>, errors: Vec<f64>) -> Self {
        let size = n_cut + 1;
        assert_eq!(yields.len(), size * size);
        assert_eq!(errors.len(), size * size);
        assert!(yields.iter().all(|&y| (0.0..=1.0).contains(&y)));
        assert!(errors.iter().all(|&e| (0.0..=0.5).contains(&e)));
        YieldTable {
            basis,
            n_cut,
            yields,
            errors,
        }
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn n_cut(&self) -> usize {
        self.n_cut
    }

    pub fn y(&self, j: usize, k: usize) -> f64 {
        self.yields[j * (self.n_cut + 1) + k]
    }

    pub fn e(&self, j: usize, k: usize) -> f64 {
        self.errors[j * (self.n_cut + 1) + k]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn ideal_channel() -> ChannelParams {
        ChannelParams::new(0.0, 0.2, 1.0, 0.0, 0.0).unwrap()
    }

    fn table_iii_channel(distance: f64) -> ChannelParams {
        ChannelParams::new(distance, 0.2, 0.4, 1e-7, 0.015).unwrap()
    }

    #[test]
    fn transmittance_values() {
        assert_eq!(arm_transmittance(0.0, 0.2).unwrap(), 1.0);
        assert_abs_diff_eq!(arm_transmittance(50.0, 0.2).unwrap(), 0.1, epsilon = 1e-16);
        assert_abs_diff_eq!(
            arm_transmittance(25.0, 0.2).unwrap(),
            0.316_227_766_016_838,
            epsilon = 1e-15
        );
        assert!(arm_transmittance(-1.0, 0.2).is_err());
        assert!(arm_transmittance(10.0, -0.2).is_err());
    }

    #[test]
    fn vacuum_passes_through() {
        let dist = fock_interference(0, 0, 0.0, 0.0).unwrap();
        assert_eq!(dist.probability([0, 0, 0, 0]), 1.0);
        assert_eq!(dist.outcomes().count(), 1);
    }

    #[test]
    fn orthogonal_photons_antibunch() {
        // H from Alice, V from Bob: four coincidence outcomes, 1/4 each.
        let dist = fock_interference(1, 1, 0.0, FRAC_PI_2).unwrap();
        for outcome in [[1, 1, 0, 0], [1, 0, 0, 1], [0, 1, 1, 0], [0, 0, 1, 1]] {
            assert_abs_diff_eq!(dist.probability(outcome), 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn identical_photons_bunch() {
        // Hong-Ou-Mandel: both photons exit the same port.
        let dist = fock_interference(1, 1, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(dist.probability([2, 0, 0, 0]), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(dist.probability([0, 0, 2, 0]), 0.5, epsilon = 1e-15);
        assert_eq!(dist.probability([1, 0, 1, 0]), 0.0);
    }

    #[test]
    fn interference_normalizes() {
        for (j, k) in [(0, 3), (2, 2), (3, 1), (4, 4), (10, 10)] {
            for (pa, pb) in [(0.0, 0.0), (FRAC_PI_4, 1.1), (0.3, FRAC_PI_2)] {
                let dist = fock_interference(j, k, pa, pb).unwrap();
                let total: f64 = dist.outcomes().map(|(_, &p)| p).sum();
                assert!(
                    (total - 1.0).abs() < 1e-12,
                    "j={j} k={k} pa={pa} pb={pb}: {total}"
                );
            }
        }
    }

    #[test]
    fn expansion_limit_enforced() {
        assert!(matches!(
            fock_interference(40, 40, 0.0, 0.0),
            Err(Error::TruncationExceeded { .. })
        ));
    }

    #[test]
    fn click_patterns_vacuum_dark_counts() {
        let dist = fock_interference(0, 0, 0.0, 0.0).unwrap();
        let patterns = click_pattern_probs(&dist, 0.4, 1e-7);
        assert_abs_diff_eq!(patterns[0], (1.0f64 - 1e-7).powi(4), epsilon = 1e-16);
        let total: f64 = patterns.iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn click_patterns_single_photon_lossless() {
        // one photon at D1H, unit efficiency, no darks
        let mut outcomes = BTreeMap::new();
        outcomes.insert([1, 0, 0, 0], 1.0);
        let dist = FockOutcomeDistribution {
            outcomes,
            total_photons: 1,
        };
        let patterns = click_pattern_probs(&dist, 1.0, 0.0);
        assert_eq!(patterns[0b0001], 1.0);
    }

    #[test]
    fn click_patterns_two_photons_partial_efficiency() {
        let mut outcomes = BTreeMap::new();
        outcomes.insert([2, 0, 0, 0], 1.0);
        let dist = FockOutcomeDistribution {
            outcomes,
            total_photons: 2,
        };
        let patterns = click_pattern_probs(&dist, 0.4, 0.0);
        assert_abs_diff_eq!(patterns[0b0001], 1.0 - 0.36, epsilon = 1e-15);
        assert_abs_diff_eq!(patterns[0], 0.36, epsilon = 1e-15);
    }

    #[test]
    fn dark_count_only_yield() {
        let params = table_iii_channel(50.0);
        let (y00, e00) = yield_error(0, 0, Basis::Z, &params).unwrap();
        let d = params.d_c;
        assert_abs_diff_eq!(y00, 4.0 * d * d * (1.0 - d) * (1.0 - d), epsilon = 1e-28);
        assert_abs_diff_eq!(e00, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn ideal_single_photon_pair() {
        let (y11, e11) = yield_error(1, 1, Basis::Z, &ideal_channel()).unwrap();
        assert_abs_diff_eq!(y11, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(e11, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn single_photon_pair_detector_efficiency() {
        let params = ChannelParams::new(0.0, 0.2, 0.4, 0.0, 0.0).unwrap();
        let (y11, _) = yield_error(1, 1, Basis::Z, &params).unwrap();
        assert_abs_diff_eq!(y11, 0.5 * 0.4 * 0.4, epsilon = 1e-14);
    }

    #[test]
    fn misalignment_sets_the_error_floor() {
        for &e_d in &[0.005, 0.015, 0.03] {
            for basis in [Basis::Z, Basis::X] {
                let params = ChannelParams::new(0.0, 0.2, 0.4, 0.0, e_d).unwrap();
                let (_, e11) = yield_error(1, 1, basis, &params).unwrap();
                assert!(
                    (e11 - e_d).abs() < 1e-12,
                    "basis {basis:?} e_d={e_d}: e11={e11}"
                );
            }
        }
    }

    #[test]
    fn hom_suppresses_equal_z_bits() {
        let params = ChannelParams::new(0.0, 0.2, 0.4, 0.0, 0.0).unwrap();
        for bits in [(0, 0), (1, 1)] {
            let patterns = click_distribution(1, 1, Basis::Z, bits, &params).unwrap();
            let accepted: f64 = BellAcceptance::Both.masks().iter().map(|&m| patterns[m]).sum();
            assert_abs_diff_eq!(accepted, 0.0, epsilon = 1e-16);
        }
    }

    #[test]
    fn psi_minus_vanishes_for_equal_x_bits() {
        let params = ChannelParams::new(0.0, 0.2, 0.4, 0.0, 0.0).unwrap();
        for bits in [(0, 0), (1, 1)] {
            let patterns = click_distribution(1, 1, Basis::X, bits, &params).unwrap();
            for mask in PSI_MINUS_MASKS {
                assert_abs_diff_eq!(patterns[mask], 0.0, epsilon = 1e-16);
            }
        }
    }

    #[test]
    fn yields_monotone_in_efficiencies() {
        // d_c = 0: more detector or channel efficiency never hurts.
        for (j, k) in [(1, 1), (2, 1), (2, 2), (0, 2)] {
            let mut previous = 0.0;
            for &eta_c in &[0.2, 0.4, 0.6, 0.8, 1.0] {
                let params = ChannelParams::new(50.0, 0.2, eta_c, 0.0, 0.015).unwrap();
                let (y, _) = yield_error(j, k, Basis::Z, &params).unwrap();
                assert!(y >= previous, "eta_c={eta_c} j={j} k={k}");
                previous = y;
            }
            let mut previous = 0.0;
            for &distance in &[100.0, 75.0, 50.0, 25.0, 0.0] {
                let params = ChannelParams::new(distance, 0.2, 0.4, 0.0, 0.015).unwrap();
                let (y, _) = yield_error(j, k, Basis::Z, &params).unwrap();
                assert!(y >= previous, "distance={distance} j={j} k={k}");
                previous = y;
            }
        }
    }

    #[test]
    fn table_matches_direct_evaluation() {
        let params = table_iii_channel(50.0);
        for basis in [Basis::Z, Basis::X] {
            let table = YieldTable::build(&params, basis, 4).unwrap();
            for j in 0..=4 {
                for k in 0..=4 {
                    let (y, e) = yield_error(j, k, basis, &params).unwrap();
                    assert_abs_diff_eq!(table.y(j, k), y, epsilon = 1e-15);
                    assert_abs_diff_eq!(table.e(j, k), e, epsilon = 1e-12);
                    assert!(table.y(j, k) >= 0.0 && table.y(j, k) <= 1.0);
                    assert!(table.e(j, k) >= 0.0 && table.e(j, k) <= 0.5 + 1e-15);
                }
            }
        }
    }

    #[test]
    fn psi_minus_only_halves_the_ideal_yield() {
        let params = ideal_channel();
        let (y_both, _) = yield_error(1, 1, Basis::Z, &params).unwrap();
        let (y_minus, _) =
            yield_error_with(1, 1, Basis::Z, &params, BellAcceptance::PsiMinusOnly).unwrap();
        assert_abs_diff_eq!(y_minus, y_both / 2.0, epsilon = 1e-14);
    }
}
