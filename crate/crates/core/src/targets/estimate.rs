use nalgebra::{DMatrix, SymmetricEigen};

use super::{SmoothnessConstants, Target};
use crate::error::{invalid, Result};
use crate::rng::RandomStream;
use crate::Scalar;

/// Sampling box and budget for [`estimate_constants`].
#[derive(Clone, Debug)]
pub struct ConstantEstimateOptions {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Grid points per axis for the Hessian scan.
    pub grid_per_axis: usize,
    pub n_pairs: usize,
    /// Fraction of the far-field convexity the returned `K` must reach.
    pub convexity_fraction: f64,
    pub seed: u64,
}

impl ConstantEstimateOptions {
    pub fn planar_box(lower: f64, upper: f64) -> Self {
        Self {
            lower: vec![lower; 2],
            upper: vec![upper; 2],
            grid_per_axis: 81,
            n_pairs: 20_000,
            convexity_fraction: 0.5,
            seed: 0,
        }
    }
}

fn fd_hessian_norm<S: Scalar>(target: &dyn Target<S>, x: &[f64], step: f64) -> f64 {
    let d = x.len();
    let mut hess = DMatrix::<f64>::zeros(d, d);
    let mut xp: Vec<S> = x.iter().map(|&v| S::lit(v)).collect();
    let mut gp = vec![S::zero(); d];
    let mut gm = vec![S::zero(); d];
    for j in 0..d {
        xp[j] = S::lit(x[j] + step);
        target.gradient(&xp, &mut gp);
        xp[j] = S::lit(x[j] - step);
        target.gradient(&xp, &mut gm);
        xp[j] = S::lit(x[j]);
        for i in 0..d {
            hess[(i, j)] = (gp[i].as_f64() - gm[i].as_f64()) / (2.0 * step);
        }
    }
    let sym = (&hess + hess.transpose()) * 0.5;
    SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .fold(0.0_f64, |m, e| m.max(e.abs()))
}

fn grid_points(lower: &[f64], upper: &[f64], per_axis: usize) -> Vec<Vec<f64>> {
    let d = lower.len();
    let mut out = vec![Vec::with_capacity(d)];
    for k in 0..d {
        let step = (upper[k] - lower[k]) / (per_axis.max(2) - 1) as f64;
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..per_axis.max(2)).map(move |i| {
                    let mut q = p.clone();
                    q.push(lower[k] + step * i as f64);
                    q
                })
            })
            .collect();
    }
    out
}

/// Numerical estimates of `(L, K, R)` over a box, flagged as estimates.
///
/// `L` is the largest finite-difference Hessian norm on a grid. For `K` and
/// `R`, random pairs are sorted by distance and `R` is the smallest distance
/// beyond which every sampled pair reaches `convexity_fraction` of the
/// far-field two-point convexity.
pub fn estimate_constants<S: Scalar>(
    target: &dyn Target<S>,
    opts: &ConstantEstimateOptions,
) -> Result<SmoothnessConstants<S>> {
    let d = target.dim();
    if opts.lower.len() != d || opts.upper.len() != d {
        return invalid("estimation box dimension mismatch");
    }
    if opts.n_pairs < 10 {
        return invalid("need at least 10 pairs");
    }
    let lipschitz = grid_points(&opts.lower, &opts.upper, opts.grid_per_axis)
        .iter()
        .map(|x| fd_hessian_norm(target, x, 1e-5))
        .fold(0.0_f64, f64::max);

    let mut rng = RandomStream::new(opts.seed, 0);
    let draw = |rng: &mut RandomStream| -> Vec<S> {
        (0..d)
            .map(|k| {
                let u: f64 = rng.uniform();
                S::lit(opts.lower[k] + u * (opts.upper[k] - opts.lower[k]))
            })
            .collect()
    };
    let mut pairs: Vec<(f64, f64)> = (0..opts.n_pairs)
        .filter_map(|_| {
            let x = draw(&mut rng);
            let y = draw(&mut rng);
            let z = crate::vector::sub(&x, &y);
            let r2 = crate::vector::norm_sq(&z).as_f64();
            if r2 == 0.0 {
                return None;
            }
            let dg = crate::vector::sub(&target.gradient_vec(&x), &target.gradient_vec(&y));
            Some((r2.sqrt(), crate::vector::dot(&z, &dg).as_f64() / r2))
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    // suffix minima: worst convexity among pairs at least this far apart
    let mut suffix = vec![f64::INFINITY; pairs.len() + 1];
    for i in (0..pairs.len()).rev() {
        suffix[i] = suffix[i + 1].min(pairs[i].1);
    }
    let tail = pairs.len() - pairs.len() / 20;
    let far = suffix[tail];
    if !(far > 0.0) {
        return invalid("no strongly convex far field found in the estimation box");
    }
    let goal = opts.convexity_fraction * far;
    let idx = (0..pairs.len())
        .find(|&i| suffix[i] >= goal)
        .unwrap_or(tail);
    let radius = if idx == 0 { 0.0 } else { pairs[idx].0 };
    let convexity = suffix[idx].min(lipschitz);
    SmoothnessConstants::new(S::lit(lipschitz), S::lit(convexity), S::lit(radius))
        .map(|c| c.not_centered().as_estimate())
}
