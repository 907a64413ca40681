//! Log-space evaluation of component and mixture densities of the linear
//! Gaussian cluster weighted model.
//!
//! A component's joint log-density at `(x, y)` is
//! `log π_g + log φ(y; b_g'x + b_g^0, σ_g²) + log φ_d(x; μ_g, Σ_g)`.
//! Everything is combined with log-sum-exp; raw densities are never formed.

use crate::error::{Error, Result};
use crate::linalg::Cholesky;
use crate::model::ModelParams;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Per-component quantities reused across observations.
#[derive(Debug, Clone)]
pub struct ComponentCache {
    pub chol: Cholesky,
    pub log_det: f64,
    pub log_noise_var: f64,
    pub log_weight: f64,
}

impl ComponentCache {
    /// Factorizes `Σ_g`; fails with [`Error::NotPositiveDefinite`] rather than jittering.
    pub fn new(params: &ModelParams, g: usize) -> Result<Self> {
        let chol = Cholesky::new(&params.scatters[g])?;
        let s2 = params.noise_vars[g];
        if !(s2 > 0.0) {
            return Err(Error::NonPositiveVariance(s2));
        }
        Ok(Self {
            log_det: chol.log_det(),
            chol,
            log_noise_var: s2.ln(),
            log_weight: params.weights[g].ln(),
        })
    }
}

/// Caches for every component of a parameter set.
pub fn build_caches(params: &ModelParams) -> Result<Vec<ComponentCache>> {
    (0..params.groups())
        .map(|g| ComponentCache::new(params, g))
        .collect()
}

/// `log φ(v; mean, var)`.
pub fn log_gauss_uni(v: f64, mean: f64, var: f64) -> Result<f64> {
    if !(var > 0.0) {
        return Err(Error::NonPositiveVariance(var));
    }
    Ok(log_gauss_uni_unchecked(v, mean, var.ln(), var))
}

#[inline]
fn log_gauss_uni_unchecked(v: f64, mean: f64, log_var: f64, var: f64) -> f64 {
    let r = v - mean;
    -0.5 * (LN_2PI + log_var) - r * r / (2.0 * var)
}

/// `log φ_d(x; μ, Σ)` using the cached factor of `Σ`.
#[inline]
pub fn log_gauss_multi(x: &[f64], mu: &[f64], cache: &ComponentCache) -> f64 {
    let d = x.len() as f64;
    -0.5 * d * LN_2PI - 0.5 * cache.log_det - 0.5 * cache.chol.mahalanobis_sq(x, mu)
}

/// Joint log-density of component `g` (0-based) at `(x, y)`, including `log π_g`.
#[inline]
pub fn component_log_density(
    x: &[f64],
    y: f64,
    params: &ModelParams,
    cache: &ComponentCache,
    g: usize,
) -> f64 {
    if params.weights[g] == 0.0 {
        return f64::NEG_INFINITY;
    }
    let fitted = params.intercepts[g] + dot(params.slopes[g].as_slice(), x);
    cache.log_weight
        + log_gauss_uni_unchecked(y, fitted, cache.log_noise_var, params.noise_vars[g])
        + log_gauss_multi(x, params.means[g].as_slice(), cache)
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// Numerically stable `log Σ exp(v)`; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    if max == f64::INFINITY {
        return max;
    }
    // pairs keep full precision through log1p
    if values.len() == 2 {
        let (a, b) = (values[0], values[1]);
        return max + (-(a - b).abs()).exp().ln_1p();
    }
    // summing in sorted order makes the result independent of component order
    let mut buf = [0.0f64; 8];
    let mut heap;
    let sorted: &mut [f64] = if values.len() <= buf.len() {
        buf[..values.len()].copy_from_slice(values);
        &mut buf[..values.len()]
    } else {
        heap = values.to_vec();
        &mut heap
    };
    sorted.sort_by(f64::total_cmp);
    max + sorted.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Log mixture density `log Σ_g D_g(x, y)`.
pub fn mixture_log_density(
    x: &[f64],
    y: f64,
    params: &ModelParams,
    caches: &[ComponentCache],
) -> f64 {
    let logs: Vec<f64> = (0..params.groups())
        .map(|g| component_log_density(x, y, params, &caches[g], g))
        .collect();
    log_sum_exp(&logs)
}

/// Normalizes component log-densities into posterior probabilities.
pub fn normalize_log_weights(logs: &[f64]) -> Option<Vec<f64>> {
    let total = log_sum_exp(logs);
    if !total.is_finite() {
        return None;
    }
    let mut p: Vec<f64> = logs.iter().map(|l| (l - total).exp()).collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= s);
    Some(p)
}

/// Posterior membership probabilities of `(x, y)`.
pub fn posteriors(
    x: &[f64],
    y: f64,
    params: &ModelParams,
    caches: &[ComponentCache],
) -> Result<Vec<f64>> {
    let logs: Vec<f64> = (0..params.groups())
        .map(|g| component_log_density(x, y, params, &caches[g], g))
        .collect();
    normalize_log_weights(&logs).ok_or(Error::DegenerateDensity { index: 0 })
}
