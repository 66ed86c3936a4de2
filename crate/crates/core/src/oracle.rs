//! Dense state-vector simulator over a truncated Fock space, used only to
//! validate the combinatorial engine in [`crate::bsm`].
//!
//! The simulator tracks eight modes: Alice's and Bob's H/V signal modes plus
//! one loss ancilla per signal mode. Every element of the relay is applied as
//! an explicit matrix on the state vector:
//!
//! * input states are built by repeated application of creation operators,
//! * arm loss couples each signal mode to its ancilla through a beam-splitter
//!   rotation (tracing happens implicitly when probabilities are marginalized
//!   over ancilla occupation),
//! * misalignment is a polarization rotation on Bob's modes,
//! * the balanced beam splitter is a mode rotation composed with a parity
//!   flip, realizing `a -> (c + d)/sqrt(2)`, `b -> (c - d)/sqrt(2)`,
//! * the polarizing splitters are mode relabelings onto the four detectors.
//!
//! Nothing here shares code with the production expansion routine; matrix
//! exponentials are evaluated by a Taylor series on the vector.

use crate::bsm::{ChannelParams, ClickDistribution};
use crate::math;
use crate::source::Basis;
use crate::{Error, Result};
use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

const MODES: usize = 8;
const ALICE_H: usize = 0;
const ALICE_V: usize = 1;
const BOB_H: usize = 2;
const BOB_V: usize = 3;
const LOSS_OFFSET: usize = 4;

/// Maximum total photon number the dense space is built for by default.
pub const DEFAULT_N_MAX: usize = 6;

/// Dense amplitude vector over all eight-mode occupation tuples with total
/// photon number at most `n_max`.
pub struct DenseFockState {
    amplitudes: Vec<f64>,
    basis: Vec<[u8; MODES]>,
    index: BTreeMap<[u8; MODES], usize>,
    n_max: usize,
}

impl DenseFockState {
    /// Vacuum state of the truncated space.
    pub fn vacuum(n_max: usize) -> Self {
        let mut basis = Vec::new();
        let mut tuple = [0u8; MODES];
        enumerate_tuples(&mut tuple, 0, n_max, &mut basis);
        let index = basis
            .iter()
            .enumerate()
            .map(|(i, t)| (*t, i))
            .collect::<BTreeMap<_, _>>();
        let mut amplitudes = vec![0.0; basis.len()];
        amplitudes[index[&[0u8; MODES]]] = 1.0;
        DenseFockState {
            amplitudes,
            basis,
            index,
            n_max,
        }
    }

    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.iter().map(|a| a * a).sum()
    }

    /// Applies `sum_m amps[m] a_m^dag` once. Errors if any populated state
    /// already sits at the truncation boundary.
    pub fn apply_creation(&mut self, amps: &[(usize, f64)]) -> Result<()> {
        let mut next = vec![0.0; self.amplitudes.len()];
        for (idx, &amp) in self.amplitudes.iter().enumerate() {
            if amp == 0.0 {
                continue;
            }
            let tuple = self.basis[idx];
            let total: usize = tuple.iter().map(|&n| n as usize).sum();
            if total >= self.n_max {
                return Err(Error::TruncationExceeded {
                    requested: total + 1,
                    limit: self.n_max,
                });
            }
            for &(mode, coeff) in amps {
                if coeff == 0.0 {
                    continue;
                }
                let mut target = tuple;
                target[mode] += 1;
                let boost = math::sqrt(f64::from(tuple[mode]) + 1.0);
                next[self.index[&target]] += coeff * boost * amp;
            }
        }
        self.amplitudes = next;
        Ok(())
    }

    /// Two-mode rotation `exp(theta (a_p^dag a_q - a_q^dag a_p))`, which maps
    /// `a_p^dag -> cos(theta) a_p^dag - sin(theta) a_q^dag` and
    /// `a_q^dag -> sin(theta) a_p^dag + cos(theta) a_q^dag`.
    pub fn apply_rotation(&mut self, p: usize, q: usize, theta: f64) {
        // COO generator matrix, then a Taylor series on the vector.
        let mut entries: Vec<(u32, u32, f64)> = Vec::new();
        for (idx, tuple) in self.basis.iter().enumerate() {
            if tuple[q] > 0 {
                let mut target = *tuple;
                target[p] += 1;
                target[q] -= 1;
                let amp = theta
                    * math::sqrt(f64::from(tuple[p]) + 1.0)
                    * math::sqrt(f64::from(tuple[q]));
                entries.push((self.index[&target] as u32, idx as u32, amp));
            }
            if tuple[p] > 0 {
                let mut target = *tuple;
                target[q] += 1;
                target[p] -= 1;
                let amp = -theta
                    * math::sqrt(f64::from(tuple[q]) + 1.0)
                    * math::sqrt(f64::from(tuple[p]));
                entries.push((self.index[&target] as u32, idx as u32, amp));
            }
        }
        let mut result = self.amplitudes.clone();
        let mut term = self.amplitudes.clone();
        let mut scratch = vec![0.0; term.len()];
        for order in 1..200u32 {
            scratch.iter_mut().for_each(|x| *x = 0.0);
            for &(row, col, value) in &entries {
                scratch[row as usize] += value * term[col as usize];
            }
            let inv = 1.0 / f64::from(order);
            for (t, s) in term.iter_mut().zip(scratch.iter()) {
                *t = s * inv;
            }
            let mut largest: f64 = 0.0;
            for (r, t) in result.iter_mut().zip(term.iter()) {
                *r += t;
                largest = largest.max(math::abs(*t));
            }
            if largest < 1e-18 {
                break;
            }
        }
        self.amplitudes = result;
    }

    /// Parity flip `(-1)^(n_p + n_q)` on two modes.
    pub fn apply_parity(&mut self, p: usize, q: usize) {
        for (idx, tuple) in self.basis.iter().enumerate() {
            if (tuple[p] + tuple[q]) % 2 == 1 {
                self.amplitudes[idx] = -self.amplitudes[idx];
            }
        }
    }

    /// Marginal photon-number distribution over the four signal modes,
    /// summing probability over ancilla occupations.
    pub fn signal_marginal(&self) -> BTreeMap<[u8; 4], f64> {
        let mut marginal = BTreeMap::new();
        for (idx, tuple) in self.basis.iter().enumerate() {
            let amp = self.amplitudes[idx];
            if amp == 0.0 {
                continue;
            }
            let key = [tuple[0], tuple[1], tuple[2], tuple[3]];
            *marginal.entry(key).or_insert(0.0) += amp * amp;
        }
        marginal
    }
}

fn enumerate_tuples(
    tuple: &mut [u8; MODES],
    mode: usize,
    budget: usize,
    out: &mut Vec<[u8; MODES]>,
) {
    if mode == MODES {
        out.push(*tuple);
        return;
    }
    for n in 0..=budget {
        tuple[mode] = n as u8;
        enumerate_tuples(tuple, mode + 1, budget - n, out);
    }
    tuple[mode] = 0;
}

fn encoding_angle(basis: Basis, bit: u8) -> f64 {
    let offset = match basis {
        Basis::Z => 0.0,
        Basis::X => core::f64::consts::FRAC_PI_4,
    };
    offset + f64::from(bit) * core::f64::consts::FRAC_PI_2
}

// Local copy of the threshold-detector model; kept separate from the
// production path on purpose.
fn threshold_clicks(marginal: &BTreeMap<[u8; 4], f64>, eta_c: f64, d_c: f64) -> ClickDistribution {
    let mut patterns = [0.0f64; 16];
    for (occupation, &p) in marginal {
        for (mask, slot) in patterns.iter_mut().enumerate() {
            let mut q = p;
            for (bit, &n) in occupation.iter().enumerate() {
                let none = math::powi(1.0 - eta_c, i32::from(n));
                let silent = (1.0 - d_c) * none;
                let click = d_c + (1.0 - d_c) * (1.0 - none);
                q *= if mask >> bit & 1 == 1 { click } else { silent };
            }
            *slot += q;
        }
    }
    patterns
}

/// Where the arm-loss beam splitters act relative to the relay beam
/// splitter. Physically equivalent; exposed so tests can verify that.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossPlacement {
    #[default]
    BeforeRelay,
    AfterRelay,
}

/// Full dense simulation of one relay measurement: `j` photons from Alice and
/// `k` from Bob with the given basis and bit pair, returning the click-pattern
/// distribution.
pub fn dense_simulate(
    j: usize,
    k: usize,
    basis: Basis,
    bits: (u8, u8),
    params: &ChannelParams,
) -> Result<ClickDistribution> {
    dense_simulate_placed(j, k, basis, bits, params, LossPlacement::default())
}

pub fn dense_simulate_placed(
    j: usize,
    k: usize,
    basis: Basis,
    bits: (u8, u8),
    params: &ChannelParams,
    placement: LossPlacement,
) -> Result<ClickDistribution> {
    params.validate()?;
    let n_max = j + k;
    let mut state = DenseFockState::vacuum(n_max.max(1));

    let alpha = encoding_angle(basis, bits.0);
    let beta = encoding_angle(basis, bits.1);
    for _ in 0..j {
        state.apply_creation(&[(ALICE_H, math::cos(alpha)), (ALICE_V, math::sin(alpha))])?;
    }
    for _ in 0..k {
        state.apply_creation(&[(BOB_H, math::cos(beta)), (BOB_V, math::sin(beta))])?;
    }
    // a^dag applied n times to vacuum carries sqrt(n!)
    let norm = 1.0 / math::sqrt(math::factorial(j) * math::factorial(k));
    state.amplitudes.iter_mut().for_each(|a| *a *= norm);

    // misalignment: rotate Bob's polarization frame by delta
    let delta = params.misalignment_angle();
    if delta != 0.0 {
        state.apply_rotation(BOB_H, BOB_V, -delta);
    }

    let loss_angle = -math::acos(math::sqrt(params.eta_arm()));
    let apply_loss = |state: &mut DenseFockState| {
        for mode in [ALICE_H, ALICE_V, BOB_H, BOB_V] {
            state.apply_rotation(mode, LOSS_OFFSET + mode, loss_angle);
        }
    };

    if placement == LossPlacement::BeforeRelay {
        apply_loss(&mut state);
    }

    // relay beam splitter per polarization: parity flip on Bob's modes, then
    // rotate each polarization pair by -pi/4
    state.apply_parity(BOB_H, BOB_V);
    state.apply_rotation(ALICE_H, BOB_H, -core::f64::consts::FRAC_PI_4);
    state.apply_rotation(ALICE_V, BOB_V, -core::f64::consts::FRAC_PI_4);

    if placement == LossPlacement::AfterRelay {
        apply_loss(&mut state);
    }

    let drift = math::abs(state.norm_squared() - 1.0);
    debug_assert!(drift < 1e-12, "norm drift {drift}");

    Ok(threshold_clicks(
        &state.signal_marginal(),
        params.eta_c,
        params.d_c,
    ))
}

/// Yield and error rate computed entirely through the dense simulator,
/// with its own acceptance bookkeeping.
pub fn dense_yield_error(
    j: usize,
    k: usize,
    basis: Basis,
    params: &ChannelParams,
) -> Result<(f64, f64)> {
    const PSI_MINUS: [usize; 2] = [0b1001, 0b0110];
    const PSI_PLUS: [usize; 2] = [0b0011, 0b1100];
    let mut accepted = 0.0;
    let mut wrong = 0.0;
    for bits in [(0u8, 0u8), (0, 1), (1, 0), (1, 1)] {
        let patterns = dense_simulate(j, k, basis, bits, params)?;
        for mask in PSI_MINUS.iter().chain(PSI_PLUS.iter()).copied() {
            let p = 0.25 * patterns[mask];
            accepted += p;
            let is_error = match basis {
                Basis::Z => bits.0 == bits.1,
                Basis::X if PSI_MINUS.contains(&mask) => bits.0 == bits.1,
                Basis::X => bits.0 != bits.1,
            };
            if is_error {
                wrong += p;
            }
        }
    }
    let e = if accepted > 0.0 { wrong / accepted } else { 0.0 };
    Ok((accepted, e))
}
