//! Trimmed, constrained EM for the linear Gaussian cluster weighted model.
//!
//! Every random start draws `d + 2` distinct observations per component,
//! then alternates
//!
//! 1. an E/C-step that keeps the `h = floor(n (1 - alpha))` observations with
//!    the largest mixture density and computes posteriors on them, and
//! 2. an M-step that updates weights, means, regressions and scatters from
//!    the posteriors and then enforces the `c_x` / `c_eps` ratio bounds by
//!    optimal truncation,
//!
//! until the trimmed log-likelihood stops changing. The start with the largest
//! trimmed log-likelihood wins.
//!
//! The driver ([`run_start`], [`run_starts`]) is generic over
//! [`TrimmedModel`] so that the mixture-of-regressions baseline shares it.

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::constraints::{constrain_scatters, constrain_variances};
use crate::density::{build_caches, component_log_density, dot, log_sum_exp, normalize_log_weights};
use crate::error::{Error, Result};
use crate::linalg::{min_norm_solve, weighted_moments, WeightedMoments};
use crate::model::{
    map_classify, retained_count, validate_dataset, Dataset, FitConfig, ModelParams,
    Responsibilities, TrimmedFit,
};

/// Random stream of one start.
pub type StartRng = ChaCha8Rng;

/// A component whose posterior mass falls below this fraction of `h` is re-drawn.
pub const EMPTY_MASS_FRACTION: f64 = 1e-10;

/// Re-draws allowed per component within one start before it is abandoned.
pub const MAX_RESEEDS: usize = 5;

/// Stream for start `start` of a fit seeded with `seed`.
///
/// Streams are split by ChaCha's stream counter, so each start's draws depend
/// only on `(seed, start)` and not on scheduling.
pub fn start_rng(seed: u64, start: usize) -> StartRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(start as u64);
    rng
}

/// Component log-densities `log D_g(x_i, y_i)` and their log-sum-exp per row.
#[derive(Debug, Clone)]
pub struct LogTable {
    groups: usize,
    comp: Vec<f64>,
    mix: Vec<f64>,
}

impl LogTable {
    pub fn new(n: usize, groups: usize) -> Self {
        Self {
            groups,
            comp: vec![0.0; n * groups],
            mix: vec![0.0; n],
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.comp[i * self.groups..(i + 1) * self.groups]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.comp[i * self.groups..(i + 1) * self.groups]
    }

    /// Log mixture densities, valid after [`LogTable::finish`].
    pub fn mixture(&self) -> &[f64] {
        &self.mix
    }

    pub fn finish(&mut self) {
        for i in 0..self.mix.len() {
            self.mix[i] = log_sum_exp(&self.comp[i * self.groups..(i + 1) * self.groups]);
        }
    }

    /// Sum of log mixture densities over the retained rows.
    pub fn trimmed_sum(&self, z: &[bool]) -> f64 {
        self.mix
            .iter()
            .zip(z)
            .filter(|(_, &k)| k)
            .map(|(v, _)| v)
            .sum()
    }

    /// Keeps the `h` rows with the largest mixture density (smaller index
    /// first on ties) and computes their posteriors.
    pub fn select(&self, h: usize) -> Result<Responsibilities> {
        let n = self.mix.len();
        if let Some(i) = self.mix.iter().position(|v| v.is_nan()) {
            return Err(Error::DegenerateDensity { index: i });
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| self.mix[b].total_cmp(&self.mix[a]).then(a.cmp(&b)));
        let mut z = vec![false; n];
        let mut tau = DMatrix::zeros(n, self.groups);
        for &i in &order[..h] {
            z[i] = true;
            let post = normalize_log_weights(self.row(i)).ok_or(Error::DegenerateDensity { index: i })?;
            for (g, p) in post.into_iter().enumerate() {
                tau[(i, g)] = p;
            }
        }
        Ok(Responsibilities { tau, z })
    }
}

/// A mixture model fitted by the trimmed EM driver.
pub trait TrimmedModel: Sync {
    type Params: Clone + Send + Sync + std::fmt::Debug;

    fn groups(&self, params: &Self::Params) -> usize;

    /// Random, constraint-satisfying starting parameters.
    fn initialize(&self, ds: &Dataset, cfg: &FitConfig, rng: &mut StartRng) -> Result<Self::Params>;

    /// Fills `table` with `log D_g(x_i, y_i)` for every row and component.
    fn log_components(&self, ds: &Dataset, params: &Self::Params, table: &mut LogTable) -> Result<()>;

    /// Constrained M-step. With `rng`, components without posterior mass are
    /// re-drawn and reported in the returned list; without it they fail with
    /// [`Error::EmptyComponent`].
    fn m_step(
        &self,
        ds: &Dataset,
        resp: &Responsibilities,
        cfg: &FitConfig,
        rng: Option<&mut StartRng>,
    ) -> Result<(Self::Params, Vec<usize>)>;
}

/// State reported to an observer after the initial and every later E/C-step.
#[derive(Debug)]
pub struct IterationEvent<'a, P> {
    /// 0 for the initial parameters.
    pub iter: usize,
    /// Trimmed log-likelihood of `params` with the retained set just selected.
    pub objective: f64,
    pub params: &'a P,
    pub resp: &'a Responsibilities,
    /// Components re-drawn in the M-step that produced `params`; the
    /// objective is not comparable with the previous one when non-empty.
    pub reseeded: &'a [usize],
}

/// Runs one random start to convergence.
pub fn run_start<M: TrimmedModel>(
    model: &M,
    ds: &Dataset,
    cfg: &FitConfig,
    start: usize,
    observer: &mut dyn FnMut(&IterationEvent<'_, M::Params>),
) -> Result<TrimmedFit<M::Params>> {
    let mut rng = start_rng(cfg.seed, start);
    let h = retained_count(ds.n(), cfg.alpha);
    let fail = |e: Error| match e {
        Error::StartFailed(_) => e,
        other => Error::StartFailed(other.to_string()),
    };

    let mut params = model.initialize(ds, cfg, &mut rng).map_err(fail)?;
    let mut table = LogTable::new(ds.n(), model.groups(&params));
    model.log_components(ds, &params, &mut table).map_err(fail)?;
    let mut resp = table.select(h).map_err(fail)?;
    let mut objective = table.trimmed_sum(&resp.z);
    observer(&IterationEvent {
        iter: 0,
        objective,
        params: &params,
        resp: &resp,
        reseeded: &[],
    });

    let mut reseeds = vec![0usize; model.groups(&params)];
    let mut converged = false;
    let mut n_iter = 0;
    for iter in 1..=cfg.max_iter {
        let (next, reseeded) = model.m_step(ds, &resp, cfg, Some(&mut rng)).map_err(fail)?;
        for &g in &reseeded {
            reseeds[g] += 1;
            if reseeds[g] > MAX_RESEEDS {
                return Err(Error::StartFailed(format!(
                    "component {} emptied more than {MAX_RESEEDS} times",
                    g + 1
                )));
            }
        }
        params = next;
        model.log_components(ds, &params, &mut table).map_err(fail)?;
        resp = table.select(h).map_err(fail)?;
        let next_objective = table.trimmed_sum(&resp.z);
        if !next_objective.is_finite() {
            return Err(Error::StartFailed(format!("objective became {next_objective}")));
        }
        n_iter = iter;
        observer(&IterationEvent {
            iter,
            objective: next_objective,
            params: &params,
            resp: &resp,
            reseeded: &reseeded,
        });
        let change = (next_objective - objective).abs() / (1.0 + objective.abs());
        objective = next_objective;
        if reseeded.is_empty() && change < cfg.rel_tol {
            converged = true;
            break;
        }
    }

    let labels = map_classify(&resp);
    Ok(TrimmedFit {
        params,
        resp,
        labels,
        objective,
        n_iter,
        converged,
        start_index: start,
    })
}

/// Runs every start (in parallel on the current rayon pool) and returns the
/// one with the largest objective, preferring the smallest start index on ties.
pub fn run_starts<M: TrimmedModel>(
    model: &M,
    ds: &Dataset,
    cfg: &FitConfig,
) -> Result<TrimmedFit<M::Params>> {
    validate_dataset(ds, cfg)?;
    let fits: Vec<Result<TrimmedFit<M::Params>>> = (0..cfg.n_starts)
        .into_par_iter()
        .map(|s| run_start(model, ds, cfg, s, &mut |_| {}))
        .collect();
    let mut best: Option<TrimmedFit<M::Params>> = None;
    for fit in fits.into_iter().flatten() {
        if best.as_ref().is_none_or(|b| fit.objective > b.objective) {
            best = Some(fit);
        }
    }
    best.ok_or(Error::AllStartsFailed {
        starts: cfg.n_starts,
    })
}

/// Weighted least-squares fit of `y` on `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Regression {
    pub intercept: f64,
    pub slope: DVector<f64>,
    /// Weighted mean of squared residuals.
    pub mse: f64,
}

/// Regression from weighted moments; `rows` yields `(x, y, weight)`.
pub(crate) fn regression_from<'a>(
    d: usize,
    m: &WeightedMoments,
    rows: impl Iterator<Item = (&'a [f64], f64, f64)>,
) -> Result<Regression> {
    let slope = min_norm_solve(&m.cov_xx, &m.cov_xy)?;
    let intercept = m.mean_y - slope.dot(&m.mean_x);
    let mut rss = 0.0;
    for (x, y, w) in rows {
        if w == 0.0 {
            continue;
        }
        // centered residual form keeps translations exact up to rounding
        let mut r = y - m.mean_y;
        for k in 0..d {
            r -= slope[k] * (x[k] - m.mean_x[k]);
        }
        rss += w * r * r;
    }
    Ok(Regression {
        intercept,
        slope,
        mse: rss / m.mass,
    })
}

fn weighted_rows<'a>(
    ds: &'a Dataset,
    weights: &'a [f64],
) -> impl Iterator<Item = (&'a [f64], f64, f64)> + Clone + 'a {
    (0..ds.n()).map(move |i| (ds.row(i), ds.response(i), weights[i]))
}

fn subset_rows<'a>(
    ds: &'a Dataset,
    idx: &'a [usize],
) -> impl Iterator<Item = (&'a [f64], f64, f64)> + Clone + 'a {
    idx.iter().map(move |&i| (ds.row(i), ds.response(i), 1.0))
}

/// Weighted least squares of `y` on `x` with weights `tau_col`.
///
/// The slope solves `S_xx b = S_xy` for the weighted covariance `S_xx`,
/// taking the minimum-norm solution when `S_xx` is singular.
pub fn weighted_regression(ds: &Dataset, tau_col: &[f64]) -> Result<Regression> {
    if tau_col.len() != ds.n() {
        return Err(Error::LengthMismatch(format!(
            "{} weights for {} observations",
            tau_col.len(),
            ds.n()
        )));
    }
    let rows = weighted_rows(ds, tau_col);
    let m = weighted_moments(ds.d(), rows.clone()).ok_or(Error::ZeroWeight)?;
    regression_from(ds.d(), &m, rows)
}

/// Sample moments and OLS fit over a subset of rows.
pub(crate) fn subset_fit(ds: &Dataset, idx: &[usize]) -> Result<(WeightedMoments, Regression)> {
    let rows = subset_rows(ds, idx);
    let m = weighted_moments(ds.d(), rows.clone()).ok_or(Error::ZeroWeight)?;
    let reg = regression_from(ds.d(), &m, rows)?;
    Ok((m, reg))
}

/// Uniform draw from the probability simplex.
pub(crate) fn random_simplex(groups: usize, rng: &mut StartRng) -> Vec<f64> {
    let e: Vec<f64> = (0..groups)
        .map(|_| {
            let v: f64 = rng.sample(Exp1);
            v.max(f64::MIN_POSITIVE)
        })
        .collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Draws `groups` disjoint sets of `size` distinct row indices.
pub(crate) fn draw_partition(
    n: usize,
    groups: usize,
    size: usize,
    rng: &mut StartRng,
) -> Result<Vec<Vec<usize>>> {
    if groups * size > n {
        return Err(Error::TooFewPoints {
            retained: n,
            required: groups * size,
        });
    }
    let all = index::sample(rng, n, groups * size).into_vec();
    Ok(all.chunks(size).map(<[usize]>::to_vec).collect())
}

/// Per-component statistics before the ratio bounds are applied.
#[derive(Debug, Clone)]
struct RawComponent {
    mass: f64,
    mean: DVector<f64>,
    scatter: DMatrix<f64>,
    reg: Regression,
}

fn raw_from_subset(ds: &Dataset, idx: &[usize]) -> Result<RawComponent> {
    let (m, reg) = subset_fit(ds, idx)?;
    Ok(RawComponent {
        mass: m.mass,
        mean: m.mean_x,
        scatter: m.cov_xx,
        reg,
    })
}

fn assemble(raw: Vec<RawComponent>, weights: Vec<f64>, cfg: &FitConfig) -> Result<ModelParams> {
    let scatters: Vec<DMatrix<f64>> = raw.iter().map(|r| r.scatter.clone()).collect();
    let s2: Vec<f64> = raw.iter().map(|r| r.reg.mse).collect();
    let scatters = constrain_scatters(&scatters, &weights, cfg.c_x)?;
    let noise_vars = constrain_variances(&s2, &weights, cfg.c_eps)?;
    let mut means = Vec::with_capacity(raw.len());
    let mut intercepts = Vec::with_capacity(raw.len());
    let mut slopes = Vec::with_capacity(raw.len());
    for r in raw {
        means.push(r.mean);
        intercepts.push(r.reg.intercept);
        slopes.push(r.reg.slope);
    }
    Ok(ModelParams {
        weights,
        means,
        scatters,
        intercepts,
        slopes,
        noise_vars,
    })
}

/// Random starting parameters: sample moments and OLS over `d + 2` distinct
/// observations per component, uniform simplex weights, then the ratio bounds.
pub fn initialize(ds: &Dataset, cfg: &FitConfig, rng: &mut StartRng) -> Result<ModelParams> {
    let parts = draw_partition(ds.n(), cfg.groups, ds.d() + 2, rng)?;
    let weights = random_simplex(cfg.groups, rng);
    let raw = parts
        .iter()
        .map(|idx| raw_from_subset(ds, idx))
        .collect::<Result<Vec<_>>>()?;
    assemble(raw, weights, cfg)
}

fn m_step_impl(
    ds: &Dataset,
    resp: &Responsibilities,
    cfg: &FitConfig,
    rng: Option<&mut StartRng>,
) -> Result<(ModelParams, Vec<usize>)> {
    let groups = resp.tau.ncols();
    let h = resp.retained() as f64;
    let mut raw = Vec::with_capacity(groups);
    let mut empty = Vec::new();
    let mut col = vec![0.0; ds.n()];
    for g in 0..groups {
        col.iter_mut()
            .zip(resp.tau.column(g).iter())
            .for_each(|(c, t)| *c = *t);
        let mass: f64 = col.iter().sum();
        if mass < EMPTY_MASS_FRACTION * h {
            empty.push(g);
            raw.push(None);
            continue;
        }
        let rows = weighted_rows(ds, &col);
        let m = weighted_moments(ds.d(), rows.clone()).ok_or(Error::ZeroWeight)?;
        let reg = regression_from(ds.d(), &m, rows)?;
        raw.push(Some(RawComponent {
            mass: m.mass,
            mean: m.mean_x,
            scatter: m.cov_xx,
            reg,
        }));
    }
    let raw: Vec<RawComponent> = if empty.is_empty() {
        raw.into_iter().flatten().collect()
    } else {
        let Some(rng) = rng else {
            return Err(Error::EmptyComponent { components: empty });
        };
        let mut filled = Vec::with_capacity(groups);
        for r in raw {
            filled.push(match r {
                Some(r) => r,
                None => {
                    let idx = index::sample(rng, ds.n(), ds.d() + 2).into_vec();
                    let mut r = raw_from_subset(ds, &idx)?;
                    r.mass = h / groups as f64;
                    r
                }
            });
        }
        filled
    };
    let total: f64 = raw.iter().map(|r| r.mass).sum();
    let weights = if empty.is_empty() {
        raw.iter().map(|r| r.mass / h).collect()
    } else {
        raw.iter().map(|r| r.mass / total).collect()
    };
    Ok((assemble(raw, weights, cfg)?, empty))
}

/// Constrained M-step from trimmed responsibilities.
///
/// Fails with [`Error::EmptyComponent`] when a component's posterior mass is
/// below `1e-10 h`.
pub fn m_step(ds: &Dataset, resp: &Responsibilities, cfg: &FitConfig) -> Result<ModelParams> {
    m_step_impl(ds, resp, cfg, None).map(|(p, _)| p)
}

fn cwm_log_components(ds: &Dataset, params: &ModelParams, table: &mut LogTable) -> Result<()> {
    let caches = build_caches(params)?;
    for i in 0..ds.n() {
        let (x, y) = (ds.row(i), ds.response(i));
        let row = table.row_mut(i);
        for (g, c) in caches.iter().enumerate() {
            row[g] = component_log_density(x, y, params, c, g);
        }
    }
    table.finish();
    Ok(())
}

/// E- and C-step: keeps the `floor(n (1 - alpha))` observations of largest
/// mixture density and returns their posteriors.
pub fn e_and_c_step(ds: &Dataset, params: &ModelParams, alpha: f64) -> Result<Responsibilities> {
    let mut table = LogTable::new(ds.n(), params.groups());
    cwm_log_components(ds, params, &mut table)?;
    table.select(retained_count(ds.n(), alpha))
}

/// Trimmed log-likelihood `Σ_i z_i log D(x_i, y_i)`.
pub fn trimmed_loglik(ds: &Dataset, params: &ModelParams, z: &[bool]) -> Result<f64> {
    let caches = build_caches(params)?;
    let mut logs = vec![0.0; params.groups()];
    let mut total = 0.0;
    for i in (0..ds.n()).filter(|&i| z[i]) {
        for (g, c) in caches.iter().enumerate() {
            logs[g] = component_log_density(ds.row(i), ds.response(i), params, c, g);
        }
        total += log_sum_exp(&logs);
    }
    Ok(total)
}

/// The linear Gaussian cluster weighted model.
#[derive(Debug, Clone, Copy, Default)]
pub struct Cwm;

impl TrimmedModel for Cwm {
    type Params = ModelParams;

    fn groups(&self, params: &ModelParams) -> usize {
        params.groups()
    }

    fn initialize(&self, ds: &Dataset, cfg: &FitConfig, rng: &mut StartRng) -> Result<ModelParams> {
        initialize(ds, cfg, rng)
    }

    fn log_components(&self, ds: &Dataset, params: &ModelParams, table: &mut LogTable) -> Result<()> {
        cwm_log_components(ds, params, table)
    }

    fn m_step(
        &self,
        ds: &Dataset,
        resp: &Responsibilities,
        cfg: &FitConfig,
        rng: Option<&mut StartRng>,
    ) -> Result<(ModelParams, Vec<usize>)> {
        m_step_impl(ds, resp, cfg, rng)
    }
}

/// One start of the trimmed CWRM fit. Failures are returned as errors and
/// count as an objective of `-inf` in [`fit`].
pub fn fit_once(ds: &Dataset, cfg: &FitConfig, start: usize) -> Result<TrimmedFit> {
    validate_dataset(ds, cfg)?;
    run_start(&Cwm, ds, cfg, start, &mut |_| {})
}

/// [`fit_once`] reporting every iteration to `observer`.
pub fn fit_once_observed(
    ds: &Dataset,
    cfg: &FitConfig,
    start: usize,
    observer: &mut dyn FnMut(&IterationEvent<'_, ModelParams>),
) -> Result<TrimmedFit> {
    validate_dataset(ds, cfg)?;
    run_start(&Cwm, ds, cfg, start, observer)
}

/// Multi-start trimmed CWRM fit.
pub fn fit(ds: &Dataset, cfg: &FitConfig) -> Result<TrimmedFit> {
    run_starts(&Cwm, ds, cfg)
}

/// Fitted value `b_g'x + b_g^0`.
pub fn predict(params: &ModelParams, g: usize, x: &[f64]) -> f64 {
    params.intercepts[g] + dot(params.slopes[g].as_slice(), x)
}
