//! Small dense linear algebra used by the estimators: cyclic Jacobi
//! eigendecomposition, Cholesky factors and minimum-norm solves.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 64;

/// Eigendecomposition `A = V diag(values) V'` of a symmetric matrix.
///
/// `values` are sorted in descending order and the columns of `vectors`
/// are the matching orthonormal eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl SymEigen {
    /// `V diag(values) V'` with the given replacement eigenvalues.
    pub fn rebuild(&self, values: &[f64]) -> DMatrix<f64> {
        let d = self.vectors.nrows();
        let mut out = DMatrix::zeros(d, d);
        for (k, &lam) in values.iter().enumerate() {
            let v = self.vectors.column(k);
            for i in 0..d {
                for j in 0..d {
                    out[(i, j)] += lam * v[i] * v[j];
                }
            }
        }
        // exact symmetry
        for i in 0..d {
            for j in 0..i {
                let m = 0.5 * (out[(i, j)] + out[(j, i)]);
                out[(i, j)] = m;
                out[(j, i)] = m;
            }
        }
        out
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// The input is symmetrized as `(A + A') / 2` before rotating.
pub fn sym_eigen(a: &DMatrix<f64>) -> Result<SymEigen> {
    let d = a.nrows();
    assert_eq!(d, a.ncols(), "sym_eigen needs a square matrix");
    let mut m = (a + a.transpose()) * 0.5;
    let mut v = DMatrix::<f64>::identity(d, d);

    let scale = m.iter().map(|x| x * x).sum::<f64>();
    let mut converged = false;
    for sweep in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..d {
            for q in p + 1..d {
                off += m[(p, q)] * m[(p, q)];
            }
        }
        if off == 0.0 || off <= (f64::EPSILON * f64::EPSILON) * scale * 1e-4 {
            converged = true;
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                // negligible next to both diagonal entries: drop it
                let g = 100.0 * apq.abs();
                if sweep > 3 && m[(p, p)].abs() + g == m[(p, p)].abs() && m[(q, q)].abs() + g == m[(q, q)].abs() {
                    m[(p, q)] = 0.0;
                    m[(q, p)] = 0.0;
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..d {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for k in 0..d {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]).then(i.cmp(&j)));
    let values = DVector::from_iterator(d, order.iter().map(|&k| m[(k, k)]));
    let vectors = DMatrix::from_fn(d, d, |i, j| v[(i, order[j])]);
    Ok(SymEigen { values, vectors })
}

/// Lower Cholesky factor of an SPD matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    d: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        let d = a.nrows();
        let mut l = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..=i {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[i * d + k] * l[j * d + k];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite);
                    }
                    l[i * d + i] = s.sqrt();
                } else {
                    l[i * d + j] = s / l[j * d + j];
                }
            }
        }
        Ok(Self { d, lower: l })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.d).map(|i| self.lower[i * self.d + i].ln()).sum::<f64>()
    }

    /// `r' A^{-1} r` for `r = x - mu`, via forward substitution.
    #[inline]
    pub fn mahalanobis_sq(&self, x: &[f64], mu: &[f64]) -> f64 {
        let d = self.d;
        let mut w = [0.0f64; 8];
        let mut heap;
        let w: &mut [f64] = if d <= 8 {
            &mut w[..d]
        } else {
            heap = vec![0.0; d];
            &mut heap
        };
        let mut q = 0.0;
        for i in 0..d {
            let mut s = x[i] - mu[i];
            for k in 0..i {
                s -= self.lower[i * d + k] * w[k];
            }
            let wi = s / self.lower[i * d + i];
            w[i] = wi;
            q += wi * wi;
        }
        q
    }

    pub fn lower(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.d, self.d, &self.lower)
    }
}

/// Minimum-norm solution of `A b = r` for symmetric positive semi-definite `A`,
/// discarding eigen-directions with eigenvalue below `1e-12 * max eigenvalue`.
pub fn min_norm_solve(a: &DMatrix<f64>, r: &DVector<f64>) -> Result<DVector<f64>> {
    let eig = sym_eigen(a)?;
    let top = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cut = top * 1e-12;
    let d = a.nrows();
    let mut out = DVector::zeros(d);
    if top == 0.0 {
        return Ok(out);
    }
    for k in 0..d {
        let lam = eig.values[k];
        if lam > cut {
            let v = eig.vectors.column(k);
            let coef = v.dot(r) / lam;
            out.axpy(coef, &v, 1.0);
        }
    }
    Ok(out)
}

/// Weighted first and second moments of covariates and response.
#[derive(Debug, Clone)]
pub(crate) struct WeightedMoments {
    pub mass: f64,
    pub mean_x: DVector<f64>,
    pub mean_y: f64,
    /// Weighted covariance of `x` (normalized by `mass`).
    pub cov_xx: DMatrix<f64>,
    pub cov_xy: DVector<f64>,
}

pub(crate) fn weighted_moments<'a>(
    d: usize,
    rows: impl Iterator<Item = (&'a [f64], f64, f64)> + Clone,
) -> Option<WeightedMoments> {
    let mut mass = 0.0;
    let mut mean_x = DVector::zeros(d);
    let mut mean_y = 0.0;
    for (x, y, w) in rows.clone() {
        if w == 0.0 {
            continue;
        }
        mass += w;
        for k in 0..d {
            mean_x[k] += w * x[k];
        }
        mean_y += w * y;
    }
    if !(mass > 0.0) {
        return None;
    }
    mean_x /= mass;
    mean_y /= mass;
    let mut cov_xx = DMatrix::zeros(d, d);
    let mut cov_xy = DVector::zeros(d);
    let mut dx = vec![0.0; d];
    for (x, y, w) in rows {
        if w == 0.0 {
            continue;
        }
        for k in 0..d {
            dx[k] = x[k] - mean_x[k];
        }
        let dy = y - mean_y;
        for i in 0..d {
            cov_xy[i] += w * dx[i] * dy;
            for j in 0..=i {
                cov_xx[(i, j)] += w * dx[i] * dx[j];
            }
        }
    }
    for i in 0..d {
        cov_xy[i] /= mass;
        for j in 0..=i {
            let v = cov_xx[(i, j)] / mass;
            cov_xx[(i, j)] = v;
            cov_xx[(j, i)] = v;
        }
    }
    Some(WeightedMoments {
        mass,
        mean_x,
        mean_y,
        cov_xx,
        cov_xy,
    })
}
