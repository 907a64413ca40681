//! Eigenvalue-ratio and variance-ratio restrictions enforced by optimal
//! truncation.
//!
//! Given positive values `v_j` with weights `w_j` and a bound `c >= 1`, each
//! value is clamped into `[m, c m]` and the threshold `m` is chosen to minimize
//! `Σ_j w_j (log t_j + v_j / t_j)` with `t_j = min(c m, max(v_j, m))`. The
//! objective is continuously differentiable in `m`, and between consecutive
//! breakpoints `{v_j} ∪ {v_j / c}` it has a single stationary point in closed
//! form, so the minimizer is found by checking `2K + 1` candidates.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
pub use crate::linalg::{sym_eigen, SymEigen};

/// Values to be truncated jointly, with their weights and ratio bound.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedValues {
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
    pub c: f64,
}

impl WeightedValues {
    pub fn new(values: Vec<f64>, weights: Vec<f64>, c: f64) -> Result<Self> {
        if values.len() != weights.len() {
            return Err(Error::LengthMismatch(format!(
                "{} values but {} weights",
                values.len(),
                weights.len()
            )));
        }
        if values.is_empty() {
            return Err(Error::BadConfig("nothing to truncate".into()));
        }
        if !(c >= 1.0) || !c.is_finite() {
            return Err(Error::BadConfig(format!("ratio bound {c} must be finite and >= 1")));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::BadConfig("values must be finite and non-negative".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::BadConfig("weights must be finite and non-negative".into()));
        }
        Ok(Self { values, weights, c })
    }
}

/// `min(c m, max(e, m))`.
#[inline]
pub fn truncate(e: f64, m: f64, c: f64) -> f64 {
    (c * m).min(e.max(m))
}

/// `Σ_j w_j (log t_j + v_j / t_j)` at threshold `m`.
pub fn truncation_objective(wv: &WeightedValues, m: f64) -> f64 {
    wv.values
        .iter()
        .zip(&wv.weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&v, &w)| {
            let t = truncate(v, m, wv.c);
            w * (t.ln() + v / t)
        })
        .sum()
}

/// Threshold minimizing [`truncation_objective`]; the smallest minimizer on ties.
///
/// Entries with zero weight do not take part. Fails with
/// [`Error::ZeroWeights`] when no entry has positive weight and with
/// [`Error::DegenerateValues`] when every participating value is zero.
pub fn optimal_threshold(wv: &WeightedValues) -> Result<f64> {
    let active: Vec<(f64, f64)> = wv
        .values
        .iter()
        .zip(&wv.weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&v, &w)| (v, w))
        .collect();
    if active.is_empty() {
        return Err(Error::ZeroWeights);
    }
    let c = wv.c;
    let total_w: f64 = active.iter().map(|p| p.1).sum();
    let fallback = active.iter().map(|(v, w)| v * w).sum::<f64>() / total_w;
    if !(fallback > 0.0) {
        return Err(Error::DegenerateValues);
    }

    let mut bps: Vec<f64> = active
        .iter()
        .flat_map(|&(v, _)| [v, v / c])
        .filter(|&b| b > 0.0)
        .collect();
    bps.sort_by(f64::total_cmp);
    bps.dedup();

    let mut candidates = vec![fallback];
    // interval k spans (bps[k-1], bps[k]); the outer ones are (0, b_0) and (b_last, inf)
    for k in 0..=bps.len() {
        let lo = if k == 0 { 0.0 } else { bps[k - 1] };
        let hi = if k == bps.len() { f64::INFINITY } else { bps[k] };
        let probe = match (k == 0, k == bps.len()) {
            (true, _) => hi * 0.5,
            (_, true) => lo * 2.0,
            _ => 0.5 * (lo + hi),
        };
        let mut num = 0.0;
        let mut den = 0.0;
        for &(v, w) in &active {
            if v < probe {
                num += w * v;
                den += w;
            } else if v > c * probe {
                num += w * v / c;
                den += w;
            }
        }
        let m = if den > 0.0 { num / den } else { probe };
        let m = m.max(lo).min(hi);
        if m > 0.0 && m.is_finite() {
            candidates.push(m);
        }
    }
    candidates.sort_by(f64::total_cmp);

    let mut best_m = candidates[0];
    let mut best = truncation_objective(wv, best_m);
    for &m in &candidates[1..] {
        let f = truncation_objective(wv, m);
        if f < best {
            best = f;
            best_m = m;
        }
    }
    Ok(best_m)
}

/// Truncated values at the optimal threshold, together with the threshold.
pub fn constrain_values(wv: &WeightedValues) -> Result<(Vec<f64>, f64)> {
    let m = optimal_threshold(wv)?;
    let out = wv.values.iter().map(|&v| truncate(v, m, wv.c)).collect();
    Ok((out, m))
}

/// Restricts the pooled eigenvalues of `scatters` to a ratio of at most `c_x`.
///
/// Each matrix keeps its eigenvectors; its eigenvalues are truncated at the
/// common optimal threshold computed with weight `weights[g]` per eigenvalue.
/// Matrices whose eigenvalues are left unchanged are returned as given.
pub fn constrain_scatters(
    scatters: &[DMatrix<f64>],
    weights: &[f64],
    c_x: f64,
) -> Result<Vec<DMatrix<f64>>> {
    if scatters.len() != weights.len() {
        return Err(Error::LengthMismatch(format!(
            "{} scatters but {} weights",
            scatters.len(),
            weights.len()
        )));
    }
    let eigs = scatters.iter().map(sym_eigen).collect::<Result<Vec<_>>>()?;
    let mut values = Vec::new();
    let mut ws = Vec::new();
    for (e, &w) in eigs.iter().zip(weights) {
        for &v in e.values.iter() {
            // rounding can leave tiny negative eigenvalues on PSD input
            values.push(v.max(0.0));
            ws.push(w);
        }
    }
    let wv = WeightedValues::new(values, ws, c_x)?;
    let m = optimal_threshold(&wv)?;
    Ok(scatters
        .iter()
        .zip(&eigs)
        .map(|(s, e)| {
            let t: Vec<f64> = e.values.iter().map(|&v| truncate(v, m, c_x)).collect();
            if t.iter().zip(e.values.iter()).all(|(a, b)| a == b) {
                s.clone()
            } else {
                e.rebuild(&t)
            }
        })
        .collect())
}

/// Restricts regression error variances to a ratio of at most `c_eps`.
pub fn constrain_variances(variances: &[f64], weights: &[f64], c_eps: f64) -> Result<Vec<f64>> {
    let wv = WeightedValues::new(variances.to_vec(), weights.to_vec(), c_eps)?;
    Ok(constrain_values(&wv)?.0)
}
