//! Trimmed, constrained cluster weighted modeling for clusterwise linear
//! regression.
//!
//! A linear Gaussian cluster weighted model describes `(x, y)` as a mixture
//! whose components factor into a covariate density `N_d(μ_g, Σ_g)` and a
//! regression `y | x ~ N(b_g'x + b_g^0, σ_g²)`. The estimator here maximizes
//! the likelihood over the `floor(n (1 - α))` best-fitting observations
//! while bounding the eigenvalue ratio of the `Σ_g` by `c_x` and the ratio
//! of the `σ_g²` by `c_eps`. This keeps the likelihood bounded and avoids
//! spurious solutions that fit a handful of degenerate points.
//!
//! ```
//! use cwrm::{datagen, fit, FitConfig};
//!
//! let data = datagen::generate(&datagen::preset("simdata1")?.with_seed(1))?;
//! let cfg = FitConfig::new(2, 0.1, 20.0, 20.0).with_starts(16).with_seed(7);
//! let result = fit(&data, &cfg)?;
//! assert_eq!(result.resp.retained(), 180);
//! # Ok::<(), cwrm::Error>(())
//! ```

pub mod baselines;
pub mod cli;
pub mod constraints;
pub mod datagen;
pub mod density;
pub mod em;
pub mod error;
pub mod linalg;
pub mod model;
pub mod oracle;

pub use baselines::{fit_trimmed_mixreg, MixRegParams};
pub use em::{fit, fit_once, predict, trimmed_loglik};
pub use error::{Error, Result};
pub use model::{
    map_classify, retained_count, Dataset, FitConfig, ModelParams, Responsibilities, TrimmedFit,
};
