//! Seeded generators for cluster weighted samples and contamination.
//!
//! Presets reproduce the simulated designs used to illustrate trimmed CWRM.
//! Only counts, contamination locations and the variance pair of
//! `simdata5` are fixed by those designs; every other component parameter
//! here (means, scatters, lines, noise levels, spreads) is a repo-defined
//! stand-in chosen to give the same qualitative picture.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Cholesky;
use crate::model::Dataset;

/// One clean component: `x ~ N_d(mean, scatter)`, `y = intercept + slope'x + N(0, noise_var)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSpec {
    pub weight: f64,
    pub mean: Vec<f64>,
    /// Row-major `d x d`.
    pub scatter: Vec<Vec<f64>>,
    pub intercept: f64,
    pub slope: Vec<f64>,
    pub noise_var: f64,
    /// Fixed number of observations; when every component sets it, the
    /// counts are used instead of multinomial draws from the weights.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
}

/// Linear response rule `y = intercept + slope'x + N(0, noise_sd²)` for planted points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRule {
    pub intercept: f64,
    pub slope: Vec<f64>,
    pub noise_sd: f64,
}

/// Contamination appended with `true_label = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContaminationSpec {
    /// Uniform on the box `[lower, upper]` in `(x, y)` space (`d + 1` bounds each).
    BackgroundBox {
        count: usize,
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    /// `N(location, spread² I)` in `(x, y)` space.
    Pointwise {
        count: usize,
        location: Vec<f64>,
        spread: f64,
    },
    /// Covariates on the segment `anchor + t direction`, `t ~ U(-extent, extent)`,
    /// with isotropic jitter; response from `response`.
    CollinearX {
        count: usize,
        anchor: Vec<f64>,
        direction: Vec<f64>,
        extent: f64,
        jitter: f64,
        response: ResponseRule,
    },
    /// Covariates uniform on `[x_lower, x_upper]`, response close to the
    /// hyperplane `intercept + slope'x` with jitter.
    ExactFitXy {
        count: usize,
        x_lower: Vec<f64>,
        x_upper: Vec<f64>,
        intercept: f64,
        slope: Vec<f64>,
        jitter: f64,
    },
}

impl ContaminationSpec {
    pub fn count(&self) -> usize {
        match self {
            Self::BackgroundBox { count, .. }
            | Self::Pointwise { count, .. }
            | Self::CollinearX { count, .. }
            | Self::ExactFitXy { count, .. } => *count,
        }
    }

    fn check(&self, d: usize) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidScenario(m.to_string()));
        match self {
            Self::BackgroundBox { lower, upper, .. } => {
                if lower.len() != d + 1 || upper.len() != d + 1 {
                    return bad("background box needs d + 1 bounds");
                }
                if lower.iter().zip(upper).any(|(l, u)| !(l <= u)) {
                    return bad("background box has lower > upper");
                }
            }
            Self::Pointwise {
                location, spread, ..
            } => {
                if location.len() != d + 1 {
                    return bad("pointwise location needs d + 1 coordinates");
                }
                if !(*spread >= 0.0) {
                    return bad("negative spread");
                }
            }
            Self::CollinearX {
                anchor,
                direction,
                extent,
                jitter,
                response,
                ..
            } => {
                if anchor.len() != d || direction.len() != d || response.slope.len() != d {
                    return bad("collinear contamination needs d-dimensional anchor, direction and slope");
                }
                if !(*extent >= 0.0 && *jitter >= 0.0 && response.noise_sd >= 0.0) {
                    return bad("negative extent or jitter");
                }
            }
            Self::ExactFitXy {
                x_lower,
                x_upper,
                slope,
                jitter,
                ..
            } => {
                if x_lower.len() != d || x_upper.len() != d || slope.len() != d {
                    return bad("exact-fit contamination needs d-dimensional bounds and slope");
                }
                if x_lower.iter().zip(x_upper).any(|(l, u)| !(l <= u)) {
                    return bad("exact-fit box has lower > upper");
                }
                if !(*jitter >= 0.0) {
                    return bad("negative jitter");
                }
            }
        }
        Ok(())
    }
}

/// A complete simulation design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub components: Vec<ComponentSpec>,
    pub n_clean: usize,
    #[serde(default)]
    pub contamination: Vec<ContaminationSpec>,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn dim(&self) -> usize {
        self.components.first().map_or(0, |c| c.mean.len())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn n_contaminated(&self) -> usize {
        self.contamination.iter().map(ContaminationSpec::count).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if self.components.is_empty() || d == 0 {
            return Err(Error::InvalidScenario("no components".into()));
        }
        let wsum: f64 = self.components.iter().map(|c| c.weight).sum();
        if self.components.iter().any(|c| !(c.weight >= 0.0)) || (wsum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidScenario("weights must lie on the simplex".into()));
        }
        for (g, c) in self.components.iter().enumerate() {
            if c.mean.len() != d || c.slope.len() != d || c.scatter.len() != d {
                return Err(Error::InvalidScenario(format!("component {} has wrong dimensions", g + 1)));
            }
            if c.scatter.iter().any(|r| r.len() != d) {
                return Err(Error::InvalidScenario(format!("component {} scatter is not d x d", g + 1)));
            }
            Cholesky::new(&scatter_matrix(c)).map_err(|_| {
                Error::InvalidScenario(format!("component {} scatter is not positive definite", g + 1))
            })?;
            if !(c.noise_var >= 0.0) {
                return Err(Error::InvalidScenario(format!("component {} has negative noise variance", g + 1)));
            }
        }
        let counts: Vec<Option<usize>> = self.components.iter().map(|c| c.count).collect();
        if counts.iter().all(Option::is_some) {
            let total: usize = counts.iter().flatten().sum();
            if total != self.n_clean {
                return Err(Error::InvalidScenario(format!(
                    "component counts sum to {total}, n_clean is {}",
                    self.n_clean
                )));
            }
        }
        for c in &self.contamination {
            c.check(d)?;
        }
        Ok(())
    }
}

fn scatter_matrix(c: &ComponentSpec) -> DMatrix<f64> {
    let d = c.mean.len();
    DMatrix::from_fn(d, d, |i, j| c.scatter[i][j])
}

fn std_normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Draws the clean part of a scenario, labeled `1..=G` by component.
pub fn sample_cwm(spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> Result<Dataset> {
    spec.validate()?;
    let d = spec.dim();
    let factors: Vec<DMatrix<f64>> = spec
        .components
        .iter()
        .map(|c| Cholesky::new(&scatter_matrix(c)).map(|f| f.lower()))
        .collect::<Result<_>>()?;

    let assignment: Vec<usize> = if spec.components.iter().all(|c| c.count.is_some()) {
        spec.components
            .iter()
            .enumerate()
            .flat_map(|(g, c)| std::iter::repeat_n(g, c.count.unwrap_or(0)))
            .collect()
    } else {
        (0..spec.n_clean)
            .map(|_| {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (g, c) in spec.components.iter().enumerate() {
                    acc += c.weight;
                    if u < acc {
                        return g;
                    }
                }
                spec.components.len() - 1
            })
            .collect()
    };

    let mut x = Vec::with_capacity(spec.n_clean * d);
    let mut y = Vec::with_capacity(spec.n_clean);
    let mut labels = Vec::with_capacity(spec.n_clean);
    let mut z = vec![0.0; d];
    for &g in &assignment {
        let c = &spec.components[g];
        z.iter_mut().for_each(|v| *v = std_normal(rng));
        let l = &factors[g];
        let mut fitted = c.intercept;
        for i in 0..d {
            let xi = c.mean[i] + (0..=i).map(|k| l[(i, k)] * z[k]).sum::<f64>();
            fitted += c.slope[i] * xi;
            x.push(xi);
        }
        y.push(fitted + c.noise_var.sqrt() * std_normal(rng));
        labels.push(g + 1);
    }
    Dataset::from_row_major(d, x, y, Some(labels))
}

/// Appends contamination points (label 0) to `dataset`.
pub fn contaminate(dataset: &Dataset, spec: &ContaminationSpec, rng: &mut ChaCha8Rng) -> Result<Dataset> {
    let d = dataset.d();
    spec.check(d)?;
    let count = spec.count();
    if count == 0 {
        return Ok(dataset.clone());
    }
    let mut x = Vec::with_capacity(count * d);
    let mut y = Vec::with_capacity(count);
    for _ in 0..count {
        match spec {
            ContaminationSpec::BackgroundBox { lower, upper, .. } => {
                for k in 0..d {
                    x.push(rng.random_range(lower[k]..=upper[k]));
                }
                y.push(rng.random_range(lower[d]..=upper[d]));
            }
            ContaminationSpec::Pointwise {
                location, spread, ..
            } => {
                for &loc in location.iter().take(d) {
                    x.push(loc + spread * std_normal(rng));
                }
                y.push(location[d] + spread * std_normal(rng));
            }
            ContaminationSpec::CollinearX {
                anchor,
                direction,
                extent,
                jitter,
                response,
                ..
            } => {
                let t = if *extent > 0.0 {
                    rng.random_range(-extent..=*extent)
                } else {
                    0.0
                };
                let mut fitted = response.intercept;
                for k in 0..d {
                    let xi = anchor[k] + t * direction[k] + jitter * std_normal(rng);
                    fitted += response.slope[k] * xi;
                    x.push(xi);
                }
                y.push(fitted + response.noise_sd * std_normal(rng));
            }
            ContaminationSpec::ExactFitXy {
                x_lower,
                x_upper,
                intercept,
                slope,
                jitter,
                ..
            } => {
                let mut fitted = *intercept;
                for k in 0..d {
                    let xi = rng.random_range(x_lower[k]..=x_upper[k]);
                    fitted += slope[k] * xi;
                    x.push(xi);
                }
                y.push(fitted + jitter * std_normal(rng));
            }
        }
    }
    let extra = Dataset::from_row_major(d, x, y, Some(vec![0; count]))?;
    let base = if dataset.true_labels().is_some() {
        dataset.clone()
    } else {
        dataset.clone().with_true_labels(Some(vec![1; dataset.n()]))?
    };
    base.concat(&extra)
}

/// Draws a full scenario: clean sample, then each contamination in order,
/// all from one stream seeded by `spec.seed`.
pub fn generate(spec: &ScenarioSpec) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut ds = sample_cwm(spec, &mut rng)?;
    for c in &spec.contamination {
        ds = contaminate(&ds, c, &mut rng)?;
    }
    Ok(ds)
}

fn comp(count: usize, weight: f64, mean: &[f64], scatter: &[&[f64]], intercept: f64, slope: &[f64], noise_var: f64) -> ComponentSpec {
    ComponentSpec {
        weight,
        mean: mean.to_vec(),
        scatter: scatter.iter().map(|r| r.to_vec()).collect(),
        intercept,
        slope: slope.to_vec(),
        noise_var,
        count: Some(count),
    }
}

fn pointwise(count: usize, location: &[f64], spread: f64) -> ContaminationSpec {
    ContaminationSpec::Pointwise {
        count,
        location: location.to_vec(),
        spread,
    }
}

/// Default spread of pointwise contamination.
pub const POINTWISE_SPREAD: f64 = 0.1;

/// Locations of the four pointwise contaminations on the tone analog.
pub const TONE_LOCATIONS: [(f64, f64); 4] = [(2.5, 5.0), (6.0, 4.0), (0.0, 0.5), (5.0, 2.5)];

/// Clean observations of the tone analog and the 9% contamination added to it.
pub const TONE_CLEAN: usize = 150;
pub const TONE_CONTAMINATION: usize = 14;

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 14] = [
    "simdata1",
    "simdata1_background",
    "simdata2",
    "simdata3",
    "simdata4",
    "simdata5",
    "simdata6",
    "simdata7",
    "simdata8",
    "tone_analog",
    "tone_analog_1",
    "tone_analog_2",
    "tone_analog_3",
    "tone_analog_4",
];

fn simdata1_clean() -> Vec<ComponentSpec> {
    vec![
        comp(90, 0.5, &[4.0], &[&[1.5]], 2.0, &[1.5], 0.64),
        comp(90, 0.5, &[9.0], &[&[1.5]], 16.0, &[-0.8], 0.64),
    ]
}

fn leverage_pair() -> Vec<ComponentSpec> {
    // similar covariate distributions for both groups
    vec![
        comp(90, 0.5, &[5.0], &[&[2.0]], 1.0, &[1.0], 0.25),
        comp(90, 0.5, &[5.0], &[&[2.0]], 9.0, &[-0.6], 0.25),
    ]
}

fn tone_clean() -> Vec<ComponentSpec> {
    // flat "interval memory" line at 2 and a "partial matching" line y = x
    vec![
        comp(75, 0.5, &[2.3], &[&[0.25]], 2.0, &[0.0], 0.04),
        comp(75, 0.5, &[2.3], &[&[0.25]], 0.0, &[1.0], 0.04),
    ]
}

/// Built-in scenario by name (seed 0; see [`ScenarioSpec::with_seed`]).
pub fn preset(name: &str) -> Result<ScenarioSpec> {
    let spec = |components: Vec<ComponentSpec>, contamination: Vec<ContaminationSpec>| {
        let n_clean = components.iter().filter_map(|c| c.count).sum();
        ScenarioSpec {
            name: name.to_string(),
            components,
            n_clean,
            contamination,
            seed: 0,
        }
    };
    let s = match name {
        "simdata1" => spec(simdata1_clean(), vec![pointwise(20, &[15.0, 20.0], POINTWISE_SPREAD)]),
        "simdata1_background" => spec(
            simdata1_clean(),
            vec![ContaminationSpec::BackgroundBox {
                count: 20,
                lower: vec![0.0, -5.0],
                upper: vec![16.0, 25.0],
            }],
        ),
        "simdata2" => {
            let rule = ResponseRule {
                intercept: 1.0,
                slope: vec![0.5, 0.5],
                noise_sd: 0.3,
            };
            spec(
                vec![
                    comp(90, 0.5, &[2.0, 2.0], &[&[0.25, 0.0], &[0.0, 0.25]], 1.0, &[0.5, 0.5], 0.09),
                    comp(90, 0.5, &[4.0, 4.0], &[&[0.25, 0.0], &[0.0, 0.25]], 1.0, &[0.5, 0.5], 0.09),
                ],
                vec![ContaminationSpec::CollinearX {
                    count: 20,
                    anchor: vec![4.6, 4.6],
                    direction: vec![std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2],
                    extent: 1.0,
                    jitter: 0.005,
                    response: rule,
                }],
            )
        }
        "simdata3" => spec(
            vec![
                comp(98, 0.5, &[3.0], &[&[1.0]], 1.9, &[0.7], 0.25),
                comp(98, 0.5, &[3.0], &[&[1.0]], 6.1, &[-0.7], 0.25),
            ],
            vec![ContaminationSpec::ExactFitXy {
                count: 4,
                x_lower: vec![2.8],
                x_upper: vec![3.2],
                intercept: 0.0,
                slope: vec![0.0],
                jitter: 1e-9,
            }],
        ),
        "simdata4" => spec(
            vec![
                comp(90, 0.5, &[2.0], &[&[0.25]], 1.0, &[2.0], 0.25),
                comp(90, 0.5, &[7.0], &[&[2.25]], 12.0, &[-1.0], 0.25),
            ],
            vec![ContaminationSpec::BackgroundBox {
                count: 20,
                lower: vec![0.0, -2.0],
                upper: vec![11.0, 12.0],
            }],
        ),
        "simdata5" => spec(
            vec![
                comp(90, 0.5, &[3.0], &[&[1.0]], 0.0, &[1.0], 0.5 * 0.5),
                comp(90, 0.5, &[6.0], &[&[1.0]], 10.0, &[-0.5], 0.1 * 0.1),
            ],
            vec![ContaminationSpec::BackgroundBox {
                count: 20,
                lower: vec![0.0, -2.0],
                upper: vec![9.0, 12.0],
            }],
        ),
        "simdata6" => spec(
            vec![
                comp(90, 0.5, &[3.0], &[&[1.0]], 1.0, &[1.5], 0.25),
                comp(90, 0.5, &[3.0], &[&[1.0]], 8.0, &[-1.0], 0.25),
            ],
            vec![pointwise(20, &[8.0, 2.0], POINTWISE_SPREAD)],
        ),
        "simdata7" => spec(leverage_pair(), vec![pointwise(20, &[5.0, 16.0], POINTWISE_SPREAD)]),
        "simdata8" => spec(leverage_pair(), vec![pointwise(20, &[14.0, 14.0], POINTWISE_SPREAD)]),
        "tone_analog" => spec(tone_clean(), vec![]),
        _ => {
            let k = name
                .strip_prefix("tone_analog_")
                .and_then(|s| s.parse::<usize>().ok())
                .filter(|k| (1..=4).contains(k))
                .ok_or_else(|| Error::UnknownPreset(name.to_string()))?;
            let (lx, ly) = TONE_LOCATIONS[k - 1];
            spec(tone_clean(), vec![pointwise(TONE_CONTAMINATION, &[lx, ly], POINTWISE_SPREAD)])
        }
    };
    s.validate()?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn label_count(ds: &Dataset, l: usize) -> usize {
        ds.true_labels().unwrap().iter().filter(|&&v| v == l).count()
    }

    #[test]
    fn every_preset_builds() {
        for name in PRESETS {
            let s = preset(name).unwrap();
            let ds = generate(&s.clone().with_seed(3)).unwrap();
            assert_eq!(ds.n(), s.n_clean + s.n_contaminated(), "{name}");
            assert_eq!(label_count(&ds, 0), s.n_contaminated());
            for (g, c) in s.components.iter().enumerate() {
                assert_eq!(label_count(&ds, g + 1), c.count.unwrap());
            }
        }
        assert_eq!(preset("simdata9"), Err(Error::UnknownPreset("simdata9".into())));
        assert!(preset("tone_analog_5").is_err());
    }

    #[test]
    fn stated_counts() {
        let s1 = preset("simdata1").unwrap();
        assert_eq!((s1.n_clean, s1.n_contaminated(), s1.components.len()), (180, 20, 2));
        assert!(matches!(
            &s1.contamination[0],
            ContaminationSpec::Pointwise { location, .. } if location == &vec![15.0, 20.0]
        ));
        let s3 = preset("simdata3").unwrap();
        assert_eq!((s3.n_clean, s3.n_contaminated()), (196, 4));
        let s2 = preset("simdata2").unwrap();
        assert_eq!((s2.n_clean, s2.n_contaminated(), s2.dim()), (180, 20, 2));
        assert_eq!(s2.components[0].mean, vec![2.0, 2.0]);
        assert_eq!(s2.components[1].mean, vec![4.0, 4.0]);
        let s5 = preset("simdata5").unwrap();
        assert_eq!(s5.components[0].noise_var, 0.5 * 0.5);
        assert_eq!(s5.components[1].noise_var, 0.1 * 0.1);
        let s6 = preset("simdata6").unwrap();
        assert_eq!((s6.n_clean, s6.n_contaminated()), (180, 20));
        for k in 1..=4 {
            let t = preset(&format!("tone_analog_{k}")).unwrap();
            let frac = t.n_contaminated() as f64 / t.n_clean as f64;
            assert!((frac - 0.09).abs() < 0.005);
        }
    }

    #[test]
    fn generation_is_pure() {
        let s = preset("simdata3").unwrap().with_seed(42);
        assert_eq!(generate(&s).unwrap(), generate(&s).unwrap());
        assert_ne!(generate(&s).unwrap(), generate(&s.clone().with_seed(43)).unwrap());
    }

    #[test]
    fn zero_noise_lies_on_lines() {
        let mut s = preset("simdata1").unwrap();
        s.contamination.clear();
        for c in &mut s.components {
            c.noise_var = 0.0;
        }
        let ds = generate(&s).unwrap();
        for i in 0..ds.n() {
            let g = ds.true_labels().unwrap()[i] - 1;
            let c = &s.components[g];
            let fit = c.intercept + c.slope[0] * ds.row(i)[0];
            assert!((ds.response(i) - fit).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_scatter_rejected() {
        let mut s = preset("simdata1").unwrap();
        s.components[0].scatter = vec![vec![0.0]];
        assert!(matches!(s.validate(), Err(Error::InvalidScenario(_))));
        assert!(generate(&s).is_err());
    }

    #[test]
    fn empty_contamination_is_identity() {
        let s = preset("tone_analog").unwrap();
        let ds = generate(&s).unwrap();
        let c = pointwise(0, &[0.0, 0.0], 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(contaminate(&ds, &c, &mut rng).unwrap(), ds);
    }

    #[test]
    fn component_means_converge() {
        let mut s = preset("simdata2").unwrap();
        s.contamination.clear();
        for c in &mut s.components {
            c.count = None;
        }
        s.n_clean = 100_000;
        let ds = generate(&s.with_seed(7)).unwrap();
        let labels = ds.true_labels().unwrap();
        for (g, mu) in [[2.0, 2.0], [4.0, 4.0]].iter().enumerate() {
            let rows: Vec<&[f64]> = (0..ds.n()).filter(|&i| labels[i] == g + 1).map(|i| ds.row(i)).collect();
            let m = rows.len() as f64;
            assert!((m / ds.n() as f64 - 0.5).abs() < 4.0 * (0.25 / ds.n() as f64).sqrt());
            for k in 0..2 {
                let mean = rows.iter().map(|r| r[k]).sum::<f64>() / m;
                let se = (0.25 / m).sqrt();
                assert!((mean - mu[k]).abs() < 4.0 * se, "{g} {k} {mean}");
            }
        }
    }

    #[test]
    fn clean_ols_slope_converges() {
        let mut s = preset("simdata1").unwrap();
        s.contamination.clear();
        for c in &mut s.components {
            c.count = Some(50_000);
        }
        s.n_clean = 100_000;
        let ds = generate(&s.clone().with_seed(5)).unwrap();
        let labels = ds.true_labels().unwrap();
        for (g, c) in s.components.iter().enumerate() {
            let idx: Vec<usize> = (0..ds.n()).filter(|&i| labels[i] == g + 1).collect();
            let m = idx.len() as f64;
            let mx = idx.iter().map(|&i| ds.row(i)[0]).sum::<f64>() / m;
            let my = idx.iter().map(|&i| ds.response(i)).sum::<f64>() / m;
            let sxx: f64 = idx.iter().map(|&i| (ds.row(i)[0] - mx).powi(2)).sum();
            let sxy: f64 = idx.iter().map(|&i| (ds.row(i)[0] - mx) * (ds.response(i) - my)).sum();
            let se = (c.noise_var / sxx).sqrt();
            assert!((sxy / sxx - c.slope[0]).abs() < 4.0 * se);
        }
    }

    #[test]
    fn spec_json_round_trip() {
        let s = preset("simdata2").unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<ScenarioSpec>(&text).unwrap(), s);
    }
}
