//! Trimmed mixture of linear regressions.
//!
//! Same trimmed EM as [`crate::em`], but components model only `y | x`:
//! `D_g(x, y) = π_g φ(y; b_g'x + b_g^0, σ_g²)`. The distribution of `x` is
//! ignored, so trimming cannot see bad leverage points. With one component
//! and `alpha > 0` this is least trimmed squares.

use nalgebra::DVector;
use rand::seq::index;

use crate::constraints::constrain_variances;
use crate::density::{dot, log_sum_exp};
use crate::em::{
    draw_partition, random_simplex, regression_from, run_start, run_starts, subset_fit,
    IterationEvent, LogTable, StartRng, TrimmedModel, EMPTY_MASS_FRACTION,
};
use crate::error::{Error, Result};
use crate::linalg::weighted_moments;
use crate::model::{validate_dataset, Dataset, FitConfig, Responsibilities, TrimmedFit};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Parameters of a mixture of linear regressions.
#[derive(Debug, Clone, PartialEq)]
pub struct MixRegParams {
    pub weights: Vec<f64>,
    pub intercepts: Vec<f64>,
    pub slopes: Vec<DVector<f64>>,
    pub noise_vars: Vec<f64>,
}

impl MixRegParams {
    pub fn groups(&self) -> usize {
        self.weights.len()
    }

    fn component_log(&self, g: usize, x: &[f64], y: f64) -> f64 {
        if self.weights[g] == 0.0 {
            return f64::NEG_INFINITY;
        }
        let s2 = self.noise_vars[g];
        let r = y - self.intercepts[g] - dot(self.slopes[g].as_slice(), x);
        self.weights[g].ln() - 0.5 * (LN_2PI + s2.ln()) - r * r / (2.0 * s2)
    }
}

/// The regression-only mixture model.
#[derive(Debug, Clone, Copy, Default)]
pub struct MixReg;

fn finish(
    weights: Vec<f64>,
    regs: Vec<crate::em::Regression>,
    cfg: &FitConfig,
) -> Result<MixRegParams> {
    let s2: Vec<f64> = regs.iter().map(|r| r.mse).collect();
    let noise_vars = constrain_variances(&s2, &weights, cfg.c_eps)?;
    let (intercepts, slopes) = regs.into_iter().map(|r| (r.intercept, r.slope)).unzip();
    Ok(MixRegParams {
        weights,
        intercepts,
        slopes,
        noise_vars,
    })
}

impl TrimmedModel for MixReg {
    type Params = MixRegParams;

    fn groups(&self, params: &MixRegParams) -> usize {
        params.groups()
    }

    fn initialize(&self, ds: &Dataset, cfg: &FitConfig, rng: &mut StartRng) -> Result<MixRegParams> {
        let parts = draw_partition(ds.n(), cfg.groups, ds.d() + 2, rng)?;
        let weights = random_simplex(cfg.groups, rng);
        let regs = parts
            .iter()
            .map(|idx| subset_fit(ds, idx).map(|(_, r)| r))
            .collect::<Result<Vec<_>>>()?;
        finish(weights, regs, cfg)
    }

    fn log_components(&self, ds: &Dataset, params: &MixRegParams, table: &mut LogTable) -> Result<()> {
        if params.noise_vars.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::NonPositiveVariance(
                params.noise_vars.iter().copied().fold(f64::INFINITY, f64::min),
            ));
        }
        for i in 0..ds.n() {
            let (x, y) = (ds.row(i), ds.response(i));
            let row = table.row_mut(i);
            for (g, v) in row.iter_mut().enumerate() {
                *v = params.component_log(g, x, y);
            }
        }
        table.finish();
        Ok(())
    }

    fn m_step(
        &self,
        ds: &Dataset,
        resp: &Responsibilities,
        cfg: &FitConfig,
        mut rng: Option<&mut StartRng>,
    ) -> Result<(MixRegParams, Vec<usize>)> {
        let groups = resp.tau.ncols();
        let h = resp.retained() as f64;
        let mut masses = Vec::with_capacity(groups);
        let mut regs = Vec::with_capacity(groups);
        let mut empty = Vec::new();
        for g in 0..groups {
            let col: Vec<f64> = resp.tau.column(g).iter().copied().collect();
            let rows = (0..ds.n()).map(|i| (ds.row(i), ds.response(i), col[i]));
            let mass: f64 = col.iter().sum();
            if mass < EMPTY_MASS_FRACTION * h {
                let Some(rng) = rng.as_deref_mut() else {
                    empty.push(g);
                    continue;
                };
                let idx = index::sample(rng, ds.n(), ds.d() + 2).into_vec();
                regs.push(subset_fit(ds, &idx)?.1);
                masses.push(h / groups as f64);
                empty.push(g);
                continue;
            }
            let m = weighted_moments(ds.d(), rows.clone()).ok_or(Error::ZeroWeight)?;
            regs.push(regression_from(ds.d(), &m, rows)?);
            masses.push(m.mass);
        }
        if rng.is_none() && !empty.is_empty() {
            return Err(Error::EmptyComponent { components: empty });
        }
        let total: f64 = masses.iter().sum();
        let denom = if empty.is_empty() { h } else { total };
        let weights = masses.iter().map(|m| m / denom).collect();
        Ok((finish(weights, regs, cfg)?, empty))
    }
}

/// Constrained M-step of the regression mixture.
pub fn mixreg_m_step(ds: &Dataset, resp: &Responsibilities, cfg: &FitConfig) -> Result<MixRegParams> {
    MixReg.m_step(ds, resp, cfg, None).map(|(p, _)| p)
}

/// `Σ_i z_i log Σ_g π_g φ(y_i; b_g'x_i + b_g^0, σ_g²)`.
pub fn mixreg_trimmed_loglik(ds: &Dataset, params: &MixRegParams, z: &[bool]) -> f64 {
    let mut logs = vec![0.0; params.groups()];
    (0..ds.n())
        .filter(|&i| z[i])
        .map(|i| {
            for (g, v) in logs.iter_mut().enumerate() {
                *v = params.component_log(g, ds.row(i), ds.response(i));
            }
            log_sum_exp(&logs)
        })
        .sum()
}

/// One start of the trimmed mixture-of-regressions fit. `cfg.c_x` is ignored.
pub fn fit_mixreg_once(
    ds: &Dataset,
    cfg: &FitConfig,
    start: usize,
    observer: &mut dyn FnMut(&IterationEvent<'_, MixRegParams>),
) -> Result<TrimmedFit<MixRegParams>> {
    validate_dataset(ds, cfg)?;
    run_start(&MixReg, ds, cfg, start, observer)
}

/// Multi-start trimmed mixture-of-regressions fit. `cfg.c_x` is ignored.
pub fn fit_trimmed_mixreg(ds: &Dataset, cfg: &FitConfig) -> Result<TrimmedFit<MixRegParams>> {
    run_starts(&MixReg, ds, cfg)
}
