//! Brute-force references for checking the fitting code.
//!
//! Everything here is written from the definitions alone and shares no
//! numerical code with the rest of the crate: subset enumeration for the
//! one-component trimmed likelihoods and a log-spaced grid for the
//! truncation objective.

use rayon::prelude::*;

use crate::constraints::WeightedValues;
use crate::error::{Error, Result};
use crate::model::Dataset;

/// Largest `n` accepted by the exhaustive searches.
pub const MAX_EXHAUSTIVE_N: usize = 16;

const LOG_2PI: f64 = 1.837_877_066_409_345_3;

/// Optimum found by an oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub objective: f64,
    pub argument: OracleArgument,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleArgument {
    /// Sorted indices of the retained observations.
    Subset(Vec<usize>),
    /// Minimizing threshold.
    Threshold(f64),
}

impl OracleResult {
    pub fn subset(&self) -> Option<&[usize]> {
        match &self.argument {
            OracleArgument::Subset(s) => Some(s),
            OracleArgument::Threshold(_) => None,
        }
    }

    pub fn threshold(&self) -> Option<f64> {
        match self.argument {
            OracleArgument::Threshold(m) => Some(m),
            OracleArgument::Subset(_) => None,
        }
    }
}

fn subset_size(n: usize, alpha: f64) -> Result<usize> {
    if n > MAX_EXHAUSTIVE_N {
        return Err(Error::TooLarge {
            n,
            limit: MAX_EXHAUSTIVE_N,
        });
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::BadConfig(format!("trimming level {alpha} outside [0, 1)")));
    }
    let exact = n as f64 * (1.0 - alpha);
    // tolerate representation error such as 12 * (5/6) = 9.999...
    let h = (exact + 1e-9).floor() as usize;
    Ok(h.min(n))
}

/// All `h`-subsets of `0..n` as bitmasks.
fn masks(n: usize, h: usize) -> Vec<u32> {
    (0u32..(1u32 << n)).filter(|m| m.count_ones() as usize == h).collect()
}

fn members(mask: u32, n: usize) -> Vec<usize> {
    (0..n).filter(|&i| mask >> i & 1 == 1).collect()
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot is negligible relative to the matrix scale.
fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let k = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
    if scale == 0.0 {
        return if k == 0 { Some(vec![]) } else { None };
    }
    for col in 0..k {
        let piv = (col..k).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..k {
            let f = a[r][col] / a[col][col];
            for c in col..k {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; k];
    for r in (0..k).rev() {
        let s: f64 = (r + 1..k).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Mean residual sum of squares of the OLS fit (with intercept) on `idx`.
/// `None` when the centered design is singular.
fn ols_mse(ds: &Dataset, idx: &[usize]) -> Option<f64> {
    let d = ds.d();
    let m = idx.len() as f64;
    let mut mx = vec![0.0; d];
    let mut my = 0.0;
    for &i in idx {
        for (k, v) in ds.row(i).iter().enumerate() {
            mx[k] += v / m;
        }
        my += ds.response(i) / m;
    }
    let mut sxx = vec![vec![0.0; d]; d];
    let mut sxy = vec![0.0; d];
    for &i in idx {
        let r = ds.row(i);
        let dy = ds.response(i) - my;
        for a in 0..d {
            let da = r[a] - mx[a];
            sxy[a] += da * dy;
            for b in 0..d {
                sxx[a][b] += da * (r[b] - mx[b]);
            }
        }
    }
    let beta = gauss_solve(sxx, sxy)?;
    let rss: f64 = idx
        .iter()
        .map(|&i| {
            let r = ds.row(i);
            let fit = my + (0..d).map(|k| beta[k] * (r[k] - mx[k])).sum::<f64>();
            (ds.response(i) - fit).powi(2)
        })
        .sum();
    Some(rss / m)
}

fn best_subset(n: usize, h: usize, score: impl Fn(&[usize]) -> Option<f64> + Sync) -> Result<OracleResult> {
    let all = masks(n, h);
    let best = all
        .par_iter()
        .filter_map(|&mask| {
            let idx = members(mask, n);
            score(&idx).filter(|v| v.is_finite()).map(|v| (v, idx))
        })
        // ties go to the lexicographically smallest subset
        .reduce_with(|a, b| match a.0.total_cmp(&b.0) {
            std::cmp::Ordering::Less => b,
            std::cmp::Ordering::Greater => a,
            std::cmp::Ordering::Equal => {
                if a.1 <= b.1 {
                    a
                } else {
                    b
                }
            }
        });
    best.map(|(objective, idx)| OracleResult {
        objective,
        argument: OracleArgument::Subset(idx),
    })
    .ok_or_else(|| Error::BadDataset("every subset has a zero variance".into()))
}

/// Global maximum of the one-component trimmed CWM likelihood for `d = 1`.
///
/// For a fixed retained set the maximizer is closed form (sample mean and
/// variance of `x`, OLS of `y` on `x`, mean squared residual), and the
/// maximized log-likelihood is `-h/2 (2 log 2π + log s_x² + log s_e² + 2)`.
/// Subsets with a zero variance have unbounded likelihood and are skipped.
pub fn exhaustive_trimmed_cwm_g1(ds: &Dataset, alpha: f64) -> Result<OracleResult> {
    if ds.d() != 1 {
        return Err(Error::BadDataset("exhaustive CWM oracle needs d = 1".into()));
    }
    let n = ds.n();
    let h = subset_size(n, alpha)?;
    if h < 3 {
        return Err(Error::TooFewPoints { retained: h, required: 3 });
    }
    best_subset(n, h, |idx| {
        let m = idx.len() as f64;
        let mean = idx.iter().map(|&i| ds.row(i)[0]).sum::<f64>() / m;
        let vx = idx.iter().map(|&i| (ds.row(i)[0] - mean).powi(2)).sum::<f64>() / m;
        if !(vx > 0.0) {
            return None;
        }
        let ve = ols_mse(ds, idx)?;
        if !(ve > 0.0) {
            return None;
        }
        Some(-0.5 * m * (2.0 * LOG_2PI + vx.ln() + ve.ln() + 2.0))
    })
}

/// Least trimmed squares by enumeration: the maximum over `h`-subsets of
/// the one-component regression likelihood `-h/2 (log 2π + log(RSS/h) + 1)`.
pub fn exhaustive_lts(ds: &Dataset, alpha: f64) -> Result<OracleResult> {
    let n = ds.n();
    let h = subset_size(n, alpha)?;
    if h < ds.d() + 2 {
        return Err(Error::TooFewPoints {
            retained: h,
            required: ds.d() + 2,
        });
    }
    best_subset(n, h, |idx| {
        let ve = ols_mse(ds, idx)?;
        (ve > 0.0).then(|| -0.5 * idx.len() as f64 * (LOG_2PI + ve.ln() + 1.0))
    })
}

/// `Σ_k w_k (log t_k + v_k / t_k)` with `t_k = min(c m, max(v_k, m))`,
/// evaluated straight from the definition.
fn truncation_cost(values: &[f64], weights: &[f64], c: f64, m: f64) -> f64 {
    values
        .iter()
        .zip(weights)
        .filter(|(_, w)| **w > 0.0)
        .map(|(&v, &w)| {
            let t = if v < m {
                m
            } else if v > c * m {
                c * m
            } else {
                v
            };
            w * (t.ln() + v / t)
        })
        .sum()
}

/// Minimum of the truncation objective over `n_grid` log-spaced thresholds
/// spanning `[min breakpoint / 10, max breakpoint * 10]`, where the
/// breakpoints are the positive `v` and `v / c`.
pub fn grid_threshold(wv: &WeightedValues, n_grid: usize) -> Result<OracleResult> {
    if n_grid < 1000 {
        return Err(Error::BadConfig(format!("grid of {n_grid} points is too coarse (minimum 1000)")));
    }
    let (values, weights, c) = (&wv.values, &wv.weights, wv.c);
    let positive: Vec<f64> = values
        .iter()
        .zip(weights)
        .filter(|(v, w)| **v > 0.0 && **w > 0.0)
        .map(|(v, _)| *v)
        .collect();
    if positive.is_empty() {
        return Err(Error::DegenerateValues);
    }
    let lo = positive.iter().map(|v| v / c).fold(f64::INFINITY, f64::min) / 10.0;
    let hi = positive.iter().copied().fold(0.0, f64::max) * 10.0;
    let (llo, lhi) = (lo.ln(), hi.ln());
    let step = (lhi - llo) / (n_grid - 1) as f64;
    let (objective, m) = (0..n_grid)
        .into_par_iter()
        .map(|k| {
            let m = (llo + step * k as f64).exp();
            (truncation_cost(values, weights, c, m), m)
        })
        .reduce_with(|a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a })
        .expect("grid is nonempty");
    Ok(OracleResult {
        objective,
        argument: OracleArgument::Threshold(m),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds1(x: &[f64], y: &[f64]) -> Dataset {
        Dataset::from_row_major(1, x.to_vec(), y.to_vec(), None).unwrap()
    }

    #[test]
    fn enumeration_sizes() {
        assert_eq!(masks(12, 10).len(), 66);
        assert_eq!(subset_size(12, 1.0 / 6.0).unwrap(), 10);
        assert_eq!(subset_size(10, 0.1).unwrap(), 9);
        assert!(matches!(subset_size(17, 0.0), Err(Error::TooLarge { n: 17, limit: 16 })));
    }

    #[test]
    fn alpha_zero_is_direct_ml() {
        let x = [0.3, 1.2, 2.2, 2.9, 4.4, 5.0];
        let y = [1.0, 2.1, 2.7, 4.4, 4.6, 6.3];
        let ds = ds1(&x, &y);
        let r = exhaustive_trimmed_cwm_g1(&ds, 0.0).unwrap();
        assert_eq!(r.subset().unwrap(), &[0, 1, 2, 3, 4, 5]);

        let n = 6.0;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let b = sxy / sxx;
        let rss: f64 = x.iter().zip(&y).map(|(a, c)| (c - my - b * (a - mx)).powi(2)).sum();
        let direct: f64 = x
            .iter()
            .zip(&y)
            .map(|(a, c)| {
                let (vx, ve) = (sxx / n, rss / n);
                let e = c - my - b * (a - mx);
                -0.5 * (LOG_2PI + vx.ln() + (a - mx).powi(2) / vx)
                    - 0.5 * (LOG_2PI + ve.ln() + e * e / ve)
            })
            .sum();
        assert!((r.objective - direct).abs() < 1e-12 * direct.abs());

        let lts = exhaustive_lts(&ds, 0.0).unwrap();
        let expect = -0.5 * n * (LOG_2PI + (rss / n).ln() + 1.0);
        assert!((lts.objective - expect).abs() < 1e-12 * expect.abs());
    }

    #[test]
    fn lts_keeps_clean_line() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let mut y: Vec<f64> = x.iter().map(|v| 3.0 - 0.5 * v + 0.01 * (v * 1.7).cos()).collect();
        y[2] += 25.0;
        y[7] -= 25.0;
        let r = exhaustive_lts(&ds1(&x, &y), 0.2).unwrap();
        assert_eq!(r.subset().unwrap(), &[0, 1, 3, 4, 5, 6, 8, 9]);
    }

    #[test]
    fn duplicates_do_not_matter() {
        let x = [0.0, 1.0, 2.0, 3.0, 3.0, 5.0, 6.5];
        let y = [0.2, 1.1, 1.9, 3.3, 3.3, 4.8, 30.0];
        let r = exhaustive_trimmed_cwm_g1(&ds1(&x, &y), 1.0 / 7.0).unwrap();
        // either copy of the duplicated row gives the same value
        let mut alt = r.subset().unwrap().to_vec();
        assert!(!alt.contains(&6));
        alt.sort();
        assert_eq!(alt.len(), 6);
    }

    #[test]
    fn multivariate_lts_exact_plane() {
        let rows: Vec<Vec<f64>> = (0..9)
            .map(|i| vec![f64::from(i), f64::from((i * 5) % 7)])
            .collect();
        let mut y: Vec<f64> = rows.iter().map(|r| 1.0 + 2.0 * r[0] - r[1]).collect();
        y[4] += 10.0;
        let ds = Dataset::from_rows(&rows, y, None).unwrap();
        let r = exhaustive_lts(&ds, 1.0 / 9.0).unwrap();
        // subsets excluding row 4 fit exactly, so every such subset has
        // infinite likelihood and is skipped; one including it wins
        assert!(r.objective.is_finite());
    }

    #[test]
    fn grid_matches_identity_case() {
        let wv = WeightedValues::new(vec![2.0, 3.0, 4.0], vec![1.0, 1.0, 1.0], 4.0).unwrap();
        let r = grid_threshold(&wv, 10_000).unwrap();
        let expect: f64 = [2.0f64, 3.0, 4.0].iter().map(|v| v.ln() + 1.0).sum();
        assert!((r.objective - expect).abs() < 1e-12);
    }

    #[test]
    fn grid_finds_stated_threshold() {
        let wv = WeightedValues::new(vec![1.0, 100.0], vec![1.0, 1.0], 4.0).unwrap();
        let r = grid_threshold(&wv, 100_000).unwrap();
        assert!((r.threshold().unwrap() - 13.0).abs() < 0.01, "{r:?}");
    }

    #[test]
    fn grid_refinement_converges() {
        let wv = WeightedValues::new(vec![0.5, 7.0, 90.0, 300.0], vec![0.1, 0.4, 0.3, 0.2], 6.0).unwrap();
        let a = grid_threshold(&wv, 10_000).unwrap().objective;
        let b = grid_threshold(&wv, 100_000).unwrap().objective;
        assert!(b <= a && a - b < 1e-8, "{a} {b}");
        assert!(grid_threshold(&wv, 999).is_err());
    }
}
