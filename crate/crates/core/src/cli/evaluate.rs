//! Scoring a fit against ground truth.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::datagen::ScenarioSpec;
use crate::error::{Error, Result};

use super::report::ReportParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Fraction of contaminated rows (label 0) that were trimmed; `None` without contamination.
    pub contamination_recall: Option<f64>,
    /// Fraction of clean rows that were trimmed.
    pub false_trim_rate: f64,
    /// Misclassification rate on clean retained rows, minimized over relabelings.
    pub classification_error: f64,
    /// Fitted component matched to each true component (1-based) by the best relabeling.
    pub matching: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameter_errors: Option<Vec<ComponentErrors>>,
}

/// Absolute errors of one component; Euclidean norms for vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentErrors {
    pub component: usize,
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    pub intercept: f64,
    pub slope: f64,
    pub noise_var: f64,
}

/// Smallest misclassification rate over injective relabelings of fitted
/// labels, on rows where both labels are nonzero. Returns the rate and, for
/// each true label `1..=k`, the fitted label assigned to it (0 if none).
pub fn permutation_error(fitted: &[usize], truth: &[usize]) -> Result<(f64, Vec<usize>)> {
    if fitted.len() != truth.len() {
        return Err(Error::LengthMismatch(format!(
            "{} fitted labels but {} true labels",
            fitted.len(),
            truth.len()
        )));
    }
    let g = fitted.iter().copied().max().unwrap_or(0);
    let k = truth.iter().copied().max().unwrap_or(0);
    let size = g.max(k);
    let mut counts = vec![vec![0usize; size + 1]; size + 1];
    let mut total = 0usize;
    for (&f, &t) in fitted.iter().zip(truth) {
        if f > 0 && t > 0 {
            counts[f][t] += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Ok((0.0, vec![0; k]));
    }
    // perm[f - 1] is the true label matched to fitted label f
    let (agree, perm) = (1..=size)
        .permutations(size)
        .map(|perm| {
            let hits: usize = (1..=size).map(|f| counts[f][perm[f - 1]]).sum();
            (hits, perm)
        })
        .max_by(|a, b| a.0.cmp(&b.0).then_with(|| b.1.cmp(&a.1)))
        .expect("at least one permutation");
    let mut matching = vec![0; k];
    for (f, &t) in perm.iter().enumerate() {
        if t <= k && f < g {
            matching[t - 1] = f + 1;
        }
    }
    Ok(((total - agree) as f64 / total as f64, matching))
}

fn norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Trimming and classification metrics, plus parameter errors when the
/// generating scenario is given.
pub fn evaluate(
    true_labels: &[usize],
    labels: &[usize],
    z: &[bool],
    params: Option<&ReportParams>,
    truth: Option<&ScenarioSpec>,
) -> Result<Metrics> {
    if labels.len() != true_labels.len() || z.len() != true_labels.len() {
        return Err(Error::LengthMismatch(format!(
            "dataset has {} rows, report has {}",
            true_labels.len(),
            labels.len()
        )));
    }
    let contaminated = true_labels.iter().filter(|&&t| t == 0).count();
    let clean = true_labels.len() - contaminated;
    let trimmed_bad = true_labels.iter().zip(z).filter(|(&t, &k)| t == 0 && !k).count();
    let trimmed_good = true_labels.iter().zip(z).filter(|(&t, &k)| t != 0 && !k).count();
    let (classification_error, matching) = permutation_error(labels, true_labels)?;

    let parameter_errors = match (params, truth) {
        (Some(p), Some(spec)) => Some(
            spec.components
                .iter()
                .enumerate()
                .filter_map(|(t, c)| {
                    let f = *matching.get(t)?;
                    let f = f.checked_sub(1)?;
                    Some(ComponentErrors {
                        component: t + 1,
                        weight: (p.weights[f] - c.weight).abs(),
                        mean: p.means.as_ref().map(|m| norm_diff(&m[f], &c.mean)),
                        intercept: (p.intercepts[f] - c.intercept).abs(),
                        slope: norm_diff(&p.slopes[f], &c.slope),
                        noise_var: (p.noise_vars[f] - c.noise_var).abs(),
                    })
                })
                .collect(),
        ),
        _ => None,
    };

    Ok(Metrics {
        contamination_recall: (contaminated > 0).then(|| trimmed_bad as f64 / contaminated as f64),
        false_trim_rate: if clean == 0 { 0.0 } else { trimmed_good as f64 / clean as f64 },
        classification_error,
        matching,
        parameter_errors,
    })
}
