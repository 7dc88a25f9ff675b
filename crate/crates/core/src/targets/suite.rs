//! Named target suite used by the experiment drivers.

use serde::{Deserialize, Serialize};

use super::{
    FreeParticle, Gaussian, MixtureKind, PlanarMixture, Rosenbrock, Target, TwoGaussianMixture1d,
};
use crate::error::{invalid, Result};
use crate::Scalar;

/// Seed of the fixed twenty-mean configuration.
pub const DEFAULT_SUITE_SEED: u64 = 2019;
pub const DEFAULT_LAPLACE_REGULARIZATION: f64 = 0.1;

pub const SUITE_NAMES: [&str; 7] = [
    "std_gaussian",
    "bivariate_gaussian",
    "mixture2_1d",
    "gaussian_mixture20",
    "laplace_mixture20",
    "rosenbrock",
    "free_particle",
];

/// Overrides for suite targets; unset fields take the defaults below.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteParams {
    /// `std_gaussian` / `free_particle` dimension (default 1).
    pub dim: Option<usize>,
    /// `mixture2_1d` scale (default 1).
    pub sigma: Option<f64>,
    /// `bivariate_gaussian` standard deviations (defaults 2 and 1).
    pub sigma_max: Option<f64>,
    pub sigma_min: Option<f64>,
    /// Mixture mean count (default 20) and box side (default 10).
    pub components: Option<usize>,
    pub side: Option<f64>,
    /// Laplace regularization δ (default 0.1).
    pub delta: Option<f64>,
    /// Seed for the mixture means.
    pub seed: Option<u64>,
}

/// Builds a suite target by name.
pub fn build<S: Scalar>(name: &str, p: &SuiteParams) -> Result<Box<dyn Target<S>>> {
    let mixture = |kind| -> Result<Box<dyn Target<S>>> {
        let means = PlanarMixture::<S>::random_means(
            p.components.unwrap_or(20),
            S::lit(p.side.unwrap_or(10.0)),
            p.seed.unwrap_or(DEFAULT_SUITE_SEED),
        );
        let delta = S::lit(p.delta.unwrap_or(DEFAULT_LAPLACE_REGULARIZATION));
        Ok(Box::new(PlanarMixture::new(means, kind, delta)?))
    };
    match name {
        "std_gaussian" => Ok(Box::new(Gaussian::<S>::standard(p.dim.unwrap_or(1))?)),
        "bivariate_gaussian" => {
            let smax = p.sigma_max.unwrap_or(2.0);
            let smin = p.sigma_min.unwrap_or(1.0);
            if smax < smin {
                return invalid("sigma_max must be >= sigma_min");
            }
            Ok(Box::new(Gaussian::new(&[
                S::lit(smax * smax),
                S::lit(smin * smin),
            ])?))
        }
        "mixture2_1d" => Ok(Box::new(TwoGaussianMixture1d::new(S::lit(
            p.sigma.unwrap_or(1.0),
        ))?)),
        "gaussian_mixture20" => mixture(MixtureKind::Gaussian),
        "laplace_mixture20" => mixture(MixtureKind::Laplace),
        "rosenbrock" => Ok(Box::new(Rosenbrock)),
        "free_particle" => Ok(Box::new(FreeParticle::new(p.dim.unwrap_or(1))?)),
        other => invalid(format!(
            "unknown target '{other}', expected one of {}",
            SUITE_NAMES.join(", ")
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_name_builds() {
        for name in SUITE_NAMES {
            let t = build::<f64>(name, &SuiteParams::default()).unwrap();
            let x = vec![0.3; t.dim()];
            assert!(t.potential(&x).is_finite(), "{name}");
        }
        assert!(build::<f64>("nope", &SuiteParams::default()).is_err());
    }

    #[test]
    fn overrides_apply() {
        let p = SuiteParams {
            dim: Some(3),
            ..Default::default()
        };
        assert_eq!(build::<f64>("std_gaussian", &p).unwrap().dim(), 3);
        let p = SuiteParams {
            sigma: Some(-1.0),
            ..Default::default()
        };
        assert!(build::<f64>("mixture2_1d", &p).is_err());
    }
}
