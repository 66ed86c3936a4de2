//! Full parameter optimization over the source knobs `(mu, t)` and the
//! distance / data-size sweeps.
//!
//! The objective is the worst-case key rate; the vacuum-parameter scan inside
//! the estimator is adversarial and never optimized. The rate is noiseless,
//! cheap and two-dimensional but non-smooth where bounds clamp, so the search
//! is a bounded Nelder-Mead simplex restarted from a handful of seeds.
//! Sweeps run a forward warm-started pass and a backward polish pass, which
//! keeps the reported optima monotone-consistent along the grid whenever the
//! underlying model is monotone.

use crate::bsm::{ChannelParams, YieldTable};
use crate::estimator::{worst_case_bounds, FluctuationParams};
use crate::keyrate::{key_rate, KeyRateResult, SecurityParams};
use crate::protocol::{gains, observe, ObservationMode};
use crate::source::{check_ratio_condition, Basis, HeraldState, HeraldedDistributions, SourceParams};
use crate::{Error, Result};
use alloc::vec::Vec;

/// Search box and termination settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizationSpec {
    pub mu_bounds: (f64, f64),
    pub t_bounds: (f64, f64),
    /// Number of deterministic seeds (center plus inset corners, at most 5).
    pub multistart: usize,
    /// Relative tolerance on the rate for simplex termination.
    pub rel_tol: f64,
    /// Objective-evaluation budget per start.
    pub max_evals: usize,
}

impl Default for OptimizationSpec {
    fn default() -> Self {
        OptimizationSpec {
            mu_bounds: (0.01, 1.5),
            t_bounds: (0.01, 0.4999),
            multistart: 5,
            rel_tol: 1e-4,
            max_evals: 400,
        }
    }
}

impl OptimizationSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu_bounds.0 > 0.0 && self.mu_bounds.0 < self.mu_bounds.1) {
            return Err(Error::InvalidParam {
                name: "mu_bounds",
                value: self.mu_bounds.0,
                constraint: "0 < low < high",
            });
        }
        if !(self.t_bounds.0 > 0.0 && self.t_bounds.1 < 0.5 && self.t_bounds.0 < self.t_bounds.1)
        {
            return Err(Error::InvalidParam {
                name: "t_bounds",
                value: self.t_bounds.0,
                constraint: "0 < low < high < 1/2",
            });
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidParam {
                name: "rel_tol",
                value: self.rel_tol,
                constraint: "rel_tol > 0",
            });
        }
        Ok(())
    }

    fn clamp(&self, point: (f64, f64)) -> (f64, f64) {
        (
            point.0.clamp(self.mu_bounds.0, self.mu_bounds.1),
            point.1.clamp(self.t_bounds.0, self.t_bounds.1),
        )
    }

    fn seeds(&self) -> Vec<(f64, f64)> {
        let (mu_lo, mu_hi) = self.mu_bounds;
        let (t_lo, t_hi) = self.t_bounds;
        let lerp = |lo: f64, hi: f64, s: f64| lo + (hi - lo) * s;
        let all = [
            (lerp(mu_lo, mu_hi, 0.5), lerp(t_lo, t_hi, 0.5)),
            (lerp(mu_lo, mu_hi, 0.15), lerp(t_lo, t_hi, 0.15)),
            (lerp(mu_lo, mu_hi, 0.85), lerp(t_lo, t_hi, 0.15)),
            (lerp(mu_lo, mu_hi, 0.15), lerp(t_lo, t_hi, 0.85)),
            (lerp(mu_lo, mu_hi, 0.85), lerp(t_lo, t_hi, 0.85)),
        ];
        all.into_iter().take(self.multistart.clamp(1, 5)).collect()
    }
}

/// Everything that stays fixed while `(mu, t)` vary: the channel, its yield
/// tables, the local detector parameters, and the statistical settings.
/// Building one is the expensive step; evaluations afterwards are cheap and
/// read-only.
#[derive(Debug, Clone)]
pub struct EvalContext {
    pub channel: ChannelParams,
    pub eta_a: f64,
    pub d_a: f64,
    pub fluct: FluctuationParams,
    pub security: SecurityParams,
    pub h_grid: usize,
    x_table: YieldTable,
    z_table: YieldTable,
}

impl EvalContext {
    pub fn new(
        channel: ChannelParams,
        eta_a: f64,
        d_a: f64,
        fluct: FluctuationParams,
        security: SecurityParams,
        n_cut: usize,
        h_grid: usize,
    ) -> Result<Self> {
        let x_table = YieldTable::build(&channel, Basis::X, n_cut)?;
        let z_table = YieldTable::build(&channel, Basis::Z, n_cut)?;
        Ok(EvalContext {
            channel,
            eta_a,
            d_a,
            fluct,
            security,
            h_grid,
            x_table,
            z_table,
        })
    }

    pub fn x_table(&self) -> &YieldTable {
        &self.x_table
    }

    pub fn z_table(&self) -> &YieldTable {
        &self.z_table
    }

    /// Runs the whole pipeline at one `(mu, t)` point.
    pub fn evaluate(&self, mu: f64, t: f64, n_t: f64) -> Result<KeyRateResult> {
        let source = SourceParams::symmetric(mu, t, self.eta_a, self.d_a)?;
        let ratio = check_ratio_condition(&source, self.z_table.n_cut().max(10))?;
        if !ratio.holds {
            return Err(Error::RatioConditionViolated {
                first_violation: ratio.first_violation.unwrap_or(0),
            });
        }
        let dists = HeraldedDistributions::compute_adaptive(&source)?;
        let ww = gains(HeraldState::W, HeraldState::W, &dists, &dists, &self.x_table)?;
        let xx = gains(HeraldState::X, HeraldState::X, &dists, &dists, &self.x_table)?;
        let yy = gains(HeraldState::Y, HeraldState::Y, &dists, &dists, &self.z_table)?;
        let obs = observe(&ww, &xx, &yy, n_t, ObservationMode::Expected)?;
        let curve = worst_case_bounds(&obs, &dists, &dists, &self.fluct, self.h_grid)?;
        key_rate(&obs, &curve, &dists, &dists, &self.security)
    }
}

/// Optimum of one `(distance, N_t)` configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointResult {
    pub mu: f64,
    pub t: f64,
    pub result: KeyRateResult,
    /// Objective evaluations spent across all starts.
    pub evaluations: usize,
}

struct Objective<'a> {
    ctx: &'a EvalContext,
    n_t: f64,
    evaluations: usize,
    best: Option<(f64, f64, KeyRateResult)>,
}

impl<'a> Objective<'a> {
    // Returns the score to MINIMIZE; infeasible points get +inf.
    fn call(&mut self, mu: f64, t: f64) -> f64 {
        self.evaluations += 1;
        match self.ctx.evaluate(mu, t, self.n_t) {
            Ok(result) => {
                let better = self
                    .best
                    .as_ref()
                    .map_or(true, |(_, _, b)| result.rate > b.rate);
                if better {
                    self.best = Some((mu, t, result));
                }
                -result.rate
            }
            Err(_) => f64::INFINITY,
        }
    }
}

// Bounded Nelder-Mead on the (mu, t) box. Standard coefficients; vertices
// are clamped into the box after every move.
fn nelder_mead(objective: &mut Objective<'_>, spec: &OptimizationSpec, seed: (f64, f64)) {
    const ALPHA: f64 = 1.0; // reflection
    const GAMMA: f64 = 2.0; // expansion
    const RHO: f64 = 0.5; // contraction
    const SIGMA: f64 = 0.5; // shrink

    let mu_step = 0.1 * (spec.mu_bounds.1 - spec.mu_bounds.0);
    let t_step = 0.1 * (spec.t_bounds.1 - spec.t_bounds.0);
    let mut simplex: [((f64, f64), f64); 3] = [
        (spec.clamp(seed), 0.0),
        (spec.clamp((seed.0 + mu_step, seed.1)), 0.0),
        (spec.clamp((seed.0, seed.1 + t_step)), 0.0),
    ];
    let start_evals = objective.evaluations;
    for vertex in simplex.iter_mut() {
        vertex.1 = objective.call(vertex.0 .0, vertex.0 .1);
    }

    while objective.evaluations - start_evals < spec.max_evals {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(core::cmp::Ordering::Equal));
        let (best, worst) = (simplex[0].1, simplex[2].1);
        if best.is_finite() && (worst - best).abs() <= spec.rel_tol * (best.abs() + 1e-12) {
            break;
        }

        let centroid = (
            (simplex[0].0 .0 + simplex[1].0 .0) / 2.0,
            (simplex[0].0 .1 + simplex[1].0 .1) / 2.0,
        );
        let reflect = spec.clamp((
            centroid.0 + ALPHA * (centroid.0 - simplex[2].0 .0),
            centroid.1 + ALPHA * (centroid.1 - simplex[2].0 .1),
        ));
        let f_reflect = objective.call(reflect.0, reflect.1);

        if f_reflect < simplex[0].1 {
            let expand = spec.clamp((
                centroid.0 + GAMMA * (reflect.0 - centroid.0),
                centroid.1 + GAMMA * (reflect.1 - centroid.1),
            ));
            let f_expand = objective.call(expand.0, expand.1);
            simplex[2] = if f_expand < f_reflect {
                (expand, f_expand)
            } else {
                (reflect, f_reflect)
            };
        } else if f_reflect < simplex[1].1 {
            simplex[2] = (reflect, f_reflect);
        } else {
            let contract = spec.clamp((
                centroid.0 + RHO * (simplex[2].0 .0 - centroid.0),
                centroid.1 + RHO * (simplex[2].0 .1 - centroid.1),
            ));
            let f_contract = objective.call(contract.0, contract.1);
            if f_contract < simplex[2].1 {
                simplex[2] = (contract, f_contract);
            } else {
                // shrink toward the best vertex
                for i in 1..3 {
                    let shrunk = spec.clamp((
                        simplex[0].0 .0 + SIGMA * (simplex[i].0 .0 - simplex[0].0 .0),
                        simplex[0].0 .1 + SIGMA * (simplex[i].0 .1 - simplex[0].0 .1),
                    ));
                    simplex[i] = (shrunk, objective.call(shrunk.0, shrunk.1));
                }
            }
        }
    }
}

/// Multistart simplex search; the returned rate is a fresh re-evaluation at
/// the winning `(mu, t)`.
pub fn optimize_point(
    ctx: &EvalContext,
    n_t: f64,
    spec: &OptimizationSpec,
    warm_starts: &[(f64, f64)],
) -> Result<PointResult> {
    spec.validate()?;
    let mut objective = Objective {
        ctx,
        n_t,
        evaluations: 0,
        best: None,
    };
    for seed in spec.seeds().into_iter().chain(warm_starts.iter().copied()) {
        nelder_mead(&mut objective, spec, spec.clamp(seed));
    }
    let evaluations = objective.evaluations;
    let (mu, t, _) = objective.best.ok_or(Error::AllStartsInfeasible)?;
    // no stale caching: report exactly what a fresh evaluation gives
    let result = ctx.evaluate(mu, t, n_t)?;
    Ok(PointResult {
        mu,
        t,
        result,
        evaluations,
    })
}

/// Independent variable of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    DistanceKm,
    DataSize,
}

/// One grid point of a sweep; failures keep their grid slot and reason.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub var: f64,
    pub outcome: core::result::Result<PointResult, Error>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub variable: SweepVariable,
    pub rows: Vec<SweepRow>,
}

fn sweep_generic<F>(variable: SweepVariable, grid: &[f64], mut run: F) -> Result<SweepResult>
where
    F: FnMut(usize, &[(f64, f64)]) -> core::result::Result<PointResult, Error>,
{
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut rows: Vec<SweepRow> = Vec::with_capacity(grid.len());
    // forward pass, warm-started from the previous optimum
    let mut warm: Vec<(f64, f64)> = Vec::new();
    for (i, &var) in grid.iter().enumerate() {
        let outcome = run(i, &warm);
        if let Ok(point) = &outcome {
            warm = alloc::vec![(point.mu, point.t)];
        }
        rows.push(SweepRow { var, outcome });
    }
    // backward polish: seed each point with its successor's optimum and keep
    // the better result, which enforces monotone consistency along the grid
    for i in (0..grid.len().saturating_sub(1)).rev() {
        let next_opt = match &rows[i + 1].outcome {
            Ok(p) => alloc::vec![(p.mu, p.t)],
            Err(_) => continue,
        };
        if let Ok(candidate) = run(i, &next_opt) {
            let improves = match &rows[i].outcome {
                Ok(existing) => candidate.result.rate > existing.result.rate,
                Err(_) => true,
            };
            if improves {
                rows[i].outcome = Ok(candidate);
            }
        }
    }
    Ok(SweepResult { variable, rows })
}

/// Optimizes every `(distance, context)` in order. Contexts carry the
/// prebuilt yield tables, so callers may construct them in parallel.
pub fn sweep_distance(
    points: &[(f64, EvalContext)],
    n_t: f64,
    spec: &OptimizationSpec,
) -> Result<SweepResult> {
    let grid: Vec<f64> = points.iter().map(|(d, _)| *d).collect();
    sweep_generic(SweepVariable::DistanceKm, &grid, |i, warm| {
        optimize_point(&points[i].1, n_t, spec, warm)
    })
}

/// Optimizes every data size on one fixed channel context.
pub fn sweep_data_size(
    ctx: &EvalContext,
    data_sizes: &[f64],
    spec: &OptimizationSpec,
) -> Result<SweepResult> {
    sweep_generic(SweepVariable::DataSize, data_sizes, |i, warm| {
        optimize_point(ctx, data_sizes[i], spec, warm)
    })
}
