//! Domain types shared by the estimators: observations, fit settings,
//! model parameters, trimmed responsibilities and fit results.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::sym_eigen;

/// `n` observations of covariates `x ∈ R^d` and a scalar response `y`.
///
/// Covariates are stored row-major so that a single observation is a
/// contiguous slice; see [`Dataset::row`].
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    d: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    true_labels: Option<Vec<usize>>,
}

impl Dataset {
    /// Builds a dataset from row-major covariates.
    ///
    /// Shapes are checked here; finiteness is checked by [`validate_dataset`].
    pub fn from_row_major(
        d: usize,
        x: Vec<f64>,
        y: Vec<f64>,
        true_labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        let n = y.len();
        if n == 0 {
            return Err(Error::BadDataset("no observations".into()));
        }
        if d == 0 {
            return Err(Error::BadDataset("no covariates".into()));
        }
        if x.len() != n * d {
            return Err(Error::BadDataset(format!(
                "covariate buffer has {} entries, expected {n} x {d}",
                x.len()
            )));
        }
        if let Some(labels) = &true_labels {
            if labels.len() != n {
                return Err(Error::BadDataset(format!(
                    "{} labels for {n} observations",
                    labels.len()
                )));
            }
        }
        Ok(Self {
            n,
            d,
            x,
            y,
            true_labels,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], y: Vec<f64>, true_labels: Option<Vec<usize>>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.len() != y.len() {
            return Err(Error::BadDataset(format!(
                "{} covariate rows for {} responses",
                rows.len(),
                y.len()
            )));
        }
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::BadDataset("ragged covariate rows".into()));
        }
        Self::from_row_major(d, rows.concat(), y, true_labels)
    }

    pub fn from_matrix(
        x: &DMatrix<f64>,
        y: &DVector<f64>,
        true_labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::BadDataset(format!(
                "{} covariate rows for {} responses",
                x.nrows(),
                y.len()
            )));
        }
        let d = x.ncols();
        let mut flat = Vec::with_capacity(x.nrows() * d);
        for r in x.row_iter() {
            flat.extend(r.iter().copied());
        }
        Self::from_row_major(d, flat, y.iter().copied().collect(), true_labels)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Covariates of observation `i`.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    #[inline]
    pub fn response(&self, i: usize) -> f64 {
        self.y[i]
    }

    pub fn responses(&self) -> &[f64] {
        &self.y
    }

    pub fn covariates(&self) -> &[f64] {
        &self.x
    }

    pub fn x_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.d, &self.x)
    }

    /// Ground-truth labels: 0 marks contamination, `g >= 1` the component of origin.
    pub fn true_labels(&self) -> Option<&[usize]> {
        self.true_labels.as_deref()
    }

    pub fn with_true_labels(mut self, labels: Option<Vec<usize>>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != self.n {
                return Err(Error::BadDataset(format!(
                    "{} labels for {} observations",
                    l.len(),
                    self.n
                )));
            }
        }
        self.true_labels = labels;
        Ok(self)
    }

    /// Returns a copy with every covariate shifted by `dx` and every response by `dy`.
    pub fn translated(&self, dx: &[f64], dy: f64) -> Self {
        assert_eq!(dx.len(), self.d);
        let x = self
            .x
            .chunks(self.d)
            .flat_map(|r| r.iter().zip(dx).map(|(a, b)| a + b))
            .collect();
        let y = self.y.iter().map(|v| v + dy).collect();
        Self {
            x,
            y,
            ..self.clone()
        }
    }

    /// Appends the observations of `other`, which must have the same dimension.
    pub fn concat(&self, other: &Dataset) -> Result<Self> {
        if other.d != self.d {
            return Err(Error::BadDataset(format!(
                "cannot append {}-dimensional rows to a {}-dimensional dataset",
                other.d, self.d
            )));
        }
        let mut x = self.x.clone();
        x.extend_from_slice(&other.x);
        let mut y = self.y.clone();
        y.extend_from_slice(&other.y);
        let labels = match (&self.true_labels, &other.true_labels) {
            (Some(a), Some(b)) => Some(a.iter().chain(b).copied().collect()),
            (None, None) => None,
            _ => {
                return Err(Error::BadDataset(
                    "cannot mix labeled and unlabeled observations".into(),
                ))
            }
        };
        Self::from_row_major(self.d, x, y, labels)
    }
}

/// Settings of a trimmed, constrained fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Number of mixture components.
    pub groups: usize,
    /// Trimming level in `[0, 1)`.
    pub alpha: f64,
    /// Bound on the ratio between any two covariate-scatter eigenvalues.
    pub c_x: f64,
    /// Bound on the ratio between any two regression error variances.
    pub c_eps: f64,
    pub n_starts: usize,
    pub max_iter: usize,
    /// Stop when `|Δobjective| / (1 + |objective|)` falls below this.
    pub rel_tol: f64,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            groups: 2,
            alpha: 0.0,
            c_x: 20.0,
            c_eps: 20.0,
            n_starts: 64,
            max_iter: 200,
            rel_tol: 1e-8,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn new(groups: usize, alpha: f64, c_x: f64, c_eps: f64) -> Self {
        Self {
            groups,
            alpha,
            c_x,
            c_eps,
            ..Self::default()
        }
    }

    pub fn with_starts(mut self, n_starts: usize) -> Self {
        self.n_starts = n_starts;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    fn check(&self) -> Result<()> {
        if self.groups == 0 {
            return Err(Error::BadConfig("number of groups must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::BadConfig(format!(
                "trimming level {} outside [0, 1)",
                self.alpha
            )));
        }
        // NaN fails both comparisons
        if !(self.c_x >= 1.0 && self.c_x.is_finite()) {
            return Err(Error::BadConfig(format!("c_x = {} must be finite and >= 1", self.c_x)));
        }
        if !(self.c_eps >= 1.0 && self.c_eps.is_finite()) {
            return Err(Error::BadConfig(format!(
                "c_eps = {} must be finite and >= 1",
                self.c_eps
            )));
        }
        if self.n_starts == 0 {
            return Err(Error::BadConfig("at least one random start is required".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::BadConfig("max_iter must be positive".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::BadConfig(format!("tolerance {} must be positive", self.rel_tol)));
        }
        Ok(())
    }
}

/// Number of observations kept by trimming: `floor(n (1 - alpha))`.
pub fn retained_count(n: usize, alpha: f64) -> usize {
    // nudge guards against products like 10 * 0.9 = 8.999999999999998
    let raw = n as f64 * (1.0 - alpha);
    let h = (raw + 1e-9 * raw.abs().max(1.0)).floor();
    (h.max(0.0) as usize).min(n)
}

/// Checks a dataset and a configuration jointly, including the requirement
/// that `floor(n (1 - alpha)) >= G (d + 2)`.
pub fn validate_dataset(dataset: &Dataset, config: &FitConfig) -> Result<()> {
    config.check()?;
    for i in 0..dataset.n() {
        if !dataset.row(i).iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                what: "covariates",
                row: i,
            });
        }
        if !dataset.response(i).is_finite() {
            return Err(Error::NonFinite {
                what: "response",
                row: i,
            });
        }
    }
    let h = retained_count(dataset.n(), config.alpha);
    let required = config.groups * (dataset.d() + 2);
    if h < required {
        return Err(Error::TooFewPoints {
            retained: h,
            required,
        });
    }
    Ok(())
}

/// Parameters of a linear Gaussian cluster weighted model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub weights: Vec<f64>,
    pub means: Vec<DVector<f64>>,
    pub scatters: Vec<DMatrix<f64>>,
    pub intercepts: Vec<f64>,
    pub slopes: Vec<DVector<f64>>,
    pub noise_vars: Vec<f64>,
}

impl ModelParams {
    pub fn groups(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, DVector::len)
    }

    /// Ratio between the largest and smallest eigenvalue over all scatters.
    pub fn eigenvalue_ratio(&self) -> Result<f64> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in &self.scatters {
            for &v in sym_eigen(s)?.values.iter() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        Ok(hi / lo)
    }

    pub fn variance_ratio(&self) -> f64 {
        value_ratio(&self.noise_vars)
    }

    /// Checks the parameter-space restrictions, returning a description of
    /// the first violation.
    pub fn check_feasible(&self, c_x: f64, c_eps: f64) -> std::result::Result<(), String> {
        let wsum: f64 = self.weights.iter().sum();
        if self.weights.iter().any(|&w| w < 0.0) || (wsum - 1.0).abs() > 1e-12 {
            return Err(format!("weights {:?} are not on the simplex", self.weights));
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (g, s) in self.scatters.iter().enumerate() {
            let asym = (s - s.transpose()).amax();
            if asym > 1e-10 {
                return Err(format!("scatter {g} asymmetric by {asym:e}"));
            }
            let eig = sym_eigen(s).map_err(|e| e.to_string())?;
            for &v in eig.values.iter() {
                if !(v > 0.0) {
                    return Err(format!("scatter {g} has eigenvalue {v:e}"));
                }
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if hi / lo > c_x * (1.0 + 1e-8) {
            return Err(format!("eigenvalue ratio {} exceeds {c_x}", hi / lo));
        }
        if self.noise_vars.iter().any(|&v| !(v > 0.0)) {
            return Err(format!("non-positive noise variance in {:?}", self.noise_vars));
        }
        let vr = self.variance_ratio();
        if vr > c_eps * (1.0 + 1e-8) {
            return Err(format!("variance ratio {vr} exceeds {c_eps}"));
        }
        Ok(())
    }

    /// Parameters with components reordered so that new component `k` is old
    /// component `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            weights: order.iter().map(|&g| self.weights[g]).collect(),
            means: order.iter().map(|&g| self.means[g].clone()).collect(),
            scatters: order.iter().map(|&g| self.scatters[g].clone()).collect(),
            intercepts: order.iter().map(|&g| self.intercepts[g]).collect(),
            slopes: order.iter().map(|&g| self.slopes[g].clone()).collect(),
            noise_vars: order.iter().map(|&g| self.noise_vars[g]).collect(),
        }
    }
}

pub(crate) fn value_ratio(values: &[f64]) -> f64 {
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    hi / lo
}

/// Posterior responsibilities restricted to the retained observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities {
    /// `n x G`; rows of trimmed observations are zero.
    pub tau: DMatrix<f64>,
    /// `true` for retained observations.
    pub z: Vec<bool>,
}

impl Responsibilities {
    pub fn retained(&self) -> usize {
        self.z.iter().filter(|&&k| k).count()
    }
}

/// Result of a trimmed fit. `P` is the parameter type of the fitted model.
#[derive(Debug, Clone, PartialEq)]
pub struct TrimmedFit<P = ModelParams> {
    pub params: P,
    pub resp: Responsibilities,
    /// 0 for trimmed observations, otherwise the 1-based MAP component.
    pub labels: Vec<usize>,
    /// Trimmed log-likelihood of `params` over the retained set.
    pub objective: f64,
    pub n_iter: usize,
    pub converged: bool,
    pub start_index: usize,
}

/// MAP classification: 0 on trimmed rows, otherwise the smallest 1-based
/// index attaining the row maximum of `tau`.
pub fn map_classify(resp: &Responsibilities) -> Vec<usize> {
    resp.z
        .iter()
        .enumerate()
        .map(|(i, &kept)| {
            if !kept {
                return 0;
            }
            let row = resp.tau.row(i);
            let mut best = 0;
            for g in 1..row.len() {
                if row[g] > row[best] {
                    best = g;
                }
            }
            best + 1
        })
        .collect()
}
