//! Scenario configuration: a flat JSON object of scalars with the device
//! defaults baked in, overridable from the command line. Unknown keys are
//! rejected so typos fail loudly.

use anyhow::{bail, Context};
use passive_mdi_core::bsm::ChannelParams;
use passive_mdi_core::estimator::FluctuationParams;
use passive_mdi_core::keyrate::SecurityParams;
use passive_mdi_core::optimizer::OptimizationSpec;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    // operating point
    pub distance_km: f64,
    pub n_pulses: f64,
    pub mu: f64,
    pub t: f64,
    // local heralding detectors
    pub eta_a: f64,
    pub d_a: f64,
    // relay
    pub eta_c: f64,
    pub d_c: f64,
    pub e_d: f64,
    /// Vacuum error rate; fixed by the measurement model, kept here so config
    /// files can state it explicitly.
    pub e_0: f64,
    pub loss_coeff: f64,
    // statistics and security
    pub epsilon: f64,
    pub eps_cor: f64,
    pub eps_prime: f64,
    pub eps_hat: f64,
    pub eps_pa: f64,
    pub f: f64,
    // numerics
    pub n_cut: usize,
    pub h_grid_points: usize,
    pub seed: u64,
    // optimizer box and budget
    pub mu_min: f64,
    pub mu_max: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub multistart: usize,
    pub max_evals: usize,
    pub rel_tol: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            distance_km: 50.0,
            n_pulses: 1e9,
            mu: 0.3,
            t: 0.3,
            eta_a: 0.75,
            d_a: 1e-6,
            eta_c: 0.4,
            d_c: 1e-7,
            e_d: 0.015,
            e_0: 0.5,
            loss_coeff: 0.2,
            epsilon: 1e-7,
            eps_cor: 1e-7,
            eps_prime: 1e-7,
            eps_hat: 1e-7,
            eps_pa: 1e-7,
            f: 1.16,
            n_cut: 10,
            h_grid_points: 201,
            seed: 42,
            mu_min: 0.01,
            mu_max: 1.5,
            t_min: 0.01,
            t_max: 0.4999,
            multistart: 5,
            max_evals: 400,
            rel_tol: 1e-4,
        }
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let raw = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let config: ScenarioConfig = serde_json::from_str(&raw)
            .with_context(|| format!("invalid config {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.e_0 != 0.5 {
            bail!("e_0 is fixed at 0.5 by the measurement model, got {}", self.e_0);
        }
        self.channel(self.distance_km)?;
        self.security()?;
        self.fluctuation()?;
        self.optimization_spec().validate()?;
        if !(self.n_pulses > 0.0) {
            bail!("n_pulses must be positive, got {}", self.n_pulses);
        }
        if self.h_grid_points < 2 {
            bail!("h_grid_points must be at least 2, got {}", self.h_grid_points);
        }
        Ok(())
    }

    pub fn channel(&self, distance_km: f64) -> anyhow::Result<ChannelParams> {
        Ok(ChannelParams::new(
            distance_km,
            self.loss_coeff,
            self.eta_c,
            self.d_c,
            self.e_d,
        )?)
    }

    pub fn security(&self) -> anyhow::Result<SecurityParams> {
        Ok(SecurityParams::new(
            self.eps_cor,
            self.eps_prime,
            self.eps_hat,
            self.eps_pa,
            self.f,
        )?)
    }

    pub fn fluctuation(&self) -> anyhow::Result<FluctuationParams> {
        Ok(FluctuationParams::new(self.epsilon)?)
    }

    pub fn optimization_spec(&self) -> OptimizationSpec {
        OptimizationSpec {
            mu_bounds: (self.mu_min, self.mu_max),
            t_bounds: (self.t_min, self.t_max),
            multistart: self.multistart,
            rel_tol: self.rel_tol,
            max_evals: self.max_evals,
        }
    }
}
