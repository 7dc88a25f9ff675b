//! Hamiltonian flows for `H(x, v) = U(x) + ½|v|²`: velocity Verlet, the
//! closed-form flow of diagonal Gaussians, and a fine-step reference flow.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{invalid, HmcError, Result};
use crate::targets::Target;
use crate::vector::{all_finite, axpy, norm_sq, to_f64};
use crate::Scalar;

/// Minimum number of Verlet substeps used by [`FlowMode::Reference`].
pub const REFERENCE_MIN_SUBSTEPS: usize = 1000;

/// Largest dimension accepted by [`jacobian_determinant_fd`].
pub const JACOBIAN_MAX_DIM: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseState<S> {
    pub position: Vec<S>,
    pub momentum: Vec<S>,
}

impl<S: Scalar> PhaseState<S> {
    pub fn new(position: Vec<S>, momentum: Vec<S>) -> Result<Self> {
        if position.len() != momentum.len() {
            return invalid(format!(
                "position has dimension {} but momentum has {}",
                position.len(),
                momentum.len()
            ));
        }
        Ok(Self { position, momentum })
    }

    pub fn dim(&self) -> usize {
        self.position.len()
    }

    pub fn flip_momentum(&mut self) {
        for v in &mut self.momentum {
            *v = -*v;
        }
    }

    pub fn flipped(mut self) -> Self {
        self.flip_momentum();
        self
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.position) && all_finite(&self.momentum)
    }

    pub fn hamiltonian(&self, target: &dyn Target<S>) -> S {
        hamiltonian(target, &self.position, &self.momentum)
    }

    fn domain_error(&self, message: impl Into<String>) -> HmcError {
        HmcError::NumericalDomain {
            message: message.into(),
            position: to_f64(&self.position),
            momentum: to_f64(&self.momentum),
        }
    }
}

pub fn hamiltonian<S: Scalar>(target: &dyn Target<S>, x: &[S], v: &[S]) -> S {
    target.potential(x) + S::lit(0.5) * norm_sq(v)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FlowMode {
    Verlet,
    /// Closed-form flow, available for diagonal Gaussians only.
    Analytic,
    /// Verlet with at least [`REFERENCE_MIN_SUBSTEPS`] substeps, standing in for the exact flow.
    Reference,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FlowSpec<S> {
    pub duration: S,
    /// Verlet step; zero for the exact flows.
    pub step: S,
    pub mode: FlowMode,
}

/// Number of grid intervals `T/h`, requiring it to be a positive integer up to rounding.
pub fn grid_steps<S: Scalar>(duration: S, step: S) -> Result<usize> {
    if !(duration > S::zero()) || !duration.is_finite() {
        return invalid(format!("duration must be positive, got {duration}"));
    }
    if !(step > S::zero()) || !step.is_finite() {
        return invalid(format!("step size must be positive, got {step}"));
    }
    let ratio = (duration / step).as_f64();
    let n = ratio.round();
    let tol = S::epsilon().as_f64().sqrt() * ratio.max(1.0);
    if n < 1.0 || (ratio - n).abs() > tol {
        return invalid(format!("T/h = {ratio} is not a positive integer"));
    }
    Ok(n as usize)
}

impl<S: Scalar> FlowSpec<S> {
    pub fn verlet(duration: S, step: S) -> Result<Self> {
        grid_steps(duration, step)?;
        Ok(Self {
            duration,
            step,
            mode: FlowMode::Verlet,
        })
    }

    pub fn analytic(duration: S) -> Result<Self> {
        Self::exact(duration, FlowMode::Analytic)
    }

    pub fn reference(duration: S) -> Result<Self> {
        Self::exact(duration, FlowMode::Reference)
    }

    /// Closed-form flow when the target supports it, otherwise the reference flow.
    pub fn exact_for(target: &dyn Target<S>, duration: S) -> Result<Self> {
        if target.diagonal_precision().is_some() {
            Self::analytic(duration)
        } else {
            Self::reference(duration)
        }
    }

    fn exact(duration: S, mode: FlowMode) -> Result<Self> {
        if !(duration > S::zero()) || !duration.is_finite() {
            return invalid(format!("duration must be positive, got {duration}"));
        }
        Ok(Self {
            duration,
            step: S::zero(),
            mode,
        })
    }

    /// Number of Verlet substeps and their size; `None` for the analytic flow.
    pub fn substeps(&self) -> Option<(usize, S)> {
        match self.mode {
            FlowMode::Verlet => {
                let n = grid_steps(self.duration, self.step).ok()?;
                Some((n, self.step))
            }
            FlowMode::Reference => {
                let n = REFERENCE_MIN_SUBSTEPS
                    .max((S::lit(1000.0) * self.duration).ceil().as_f64() as usize);
                Some((n, self.duration / S::lit(n as f64)))
            }
            FlowMode::Analytic => None,
        }
    }
}

/// Runs `n` fused Verlet steps; `grad` holds `∇U(x)` on entry and exit.
fn leapfrog<S: Scalar>(
    target: &dyn Target<S>,
    x: &mut [S],
    v: &mut [S],
    grad: &mut [S],
    h: S,
    n: usize,
    mut trace: Option<&mut Vec<PhaseState<S>>>,
) -> Result<()> {
    let half = S::lit(0.5) * h;
    for _ in 0..n {
        axpy(-half, grad, v);
        axpy(h, v, x);
        target.gradient(x, grad);
        if !all_finite(grad) {
            let state = PhaseState {
                position: x.to_vec(),
                momentum: v.to_vec(),
            };
            return Err(state.domain_error("non-finite gradient"));
        }
        axpy(-half, grad, v);
        if let Some(t) = trace.as_deref_mut() {
            t.push(PhaseState {
                position: x.to_vec(),
                momentum: v.to_vec(),
            });
        }
    }
    Ok(())
}

fn check_state<S: Scalar>(target: &dyn Target<S>, state: &PhaseState<S>) -> Result<()> {
    if state.dim() != target.dim() || state.momentum.len() != target.dim() {
        return invalid(format!(
            "state dimension {} does not match target dimension {}",
            state.dim(),
            target.dim()
        ));
    }
    if !state.is_finite() {
        return Err(state.domain_error("non-finite initial state"));
    }
    Ok(())
}

/// One velocity Verlet step of size `h`.
pub fn verlet_step<S: Scalar>(
    target: &dyn Target<S>,
    state: &PhaseState<S>,
    h: S,
) -> Result<PhaseState<S>> {
    if !(h > S::zero()) || !h.is_finite() {
        return invalid(format!("step size must be positive, got {h}"));
    }
    check_state(target, state)?;
    let mut x = state.position.clone();
    let mut v = state.momentum.clone();
    let mut g = target.gradient_vec(&x);
    if !all_finite(&g) {
        return Err(state.domain_error("non-finite gradient"));
    }
    leapfrog(target, &mut x, &mut v, &mut g, h, 1, None)?;
    Ok(PhaseState {
        position: x,
        momentum: v,
    })
}

fn analytic_flow<S: Scalar>(
    target: &dyn Target<S>,
    state: &PhaseState<S>,
    t: S,
) -> Result<PhaseState<S>> {
    let precision = target.diagonal_precision().ok_or_else(|| {
        HmcError::UnsupportedMode(format!(
            "no closed-form flow for target '{}'",
            target.name()
        ))
    })?;
    let mut position = Vec::with_capacity(state.dim());
    let mut momentum = Vec::with_capacity(state.dim());
    for ((&x, &v), &p) in state.position.iter().zip(&state.momentum).zip(precision) {
        let omega = p.sqrt();
        let (s, c) = (omega * t).sin_cos();
        position.push(c * x + s / omega * v);
        momentum.push(-omega * s * x + c * v);
    }
    Ok(PhaseState { position, momentum })
}

/// `φ_T(x, v)` for the given flow specification.
pub fn flow<S: Scalar>(
    target: &dyn Target<S>,
    state: &PhaseState<S>,
    spec: &FlowSpec<S>,
) -> Result<PhaseState<S>> {
    check_state(target, state)?;
    match spec.substeps() {
        None => analytic_flow(target, state, spec.duration),
        Some((n, h)) => {
            let mut x = state.position.clone();
            let mut v = state.momentum.clone();
            let mut g = target.gradient_vec(&x);
            if !all_finite(&g) {
                return Err(state.domain_error("non-finite gradient"));
            }
            leapfrog(target, &mut x, &mut v, &mut g, h, n, None)?;
            Ok(PhaseState {
                position: x,
                momentum: v,
            })
        }
    }
}

/// Like [`flow`] but returns every grid point, starting with `state`.
/// The analytic flow is sampled at `T/100` spacing.
pub fn flow_trace<S: Scalar>(
    target: &dyn Target<S>,
    state: &PhaseState<S>,
    spec: &FlowSpec<S>,
) -> Result<Vec<PhaseState<S>>> {
    check_state(target, state)?;
    let mut out = vec![state.clone()];
    match spec.substeps() {
        None => {
            for k in 1..=100 {
                let t = spec.duration * S::lit(k as f64 / 100.0);
                out.push(analytic_flow(target, state, t)?);
            }
        }
        Some((n, h)) => {
            let mut x = state.position.clone();
            let mut v = state.momentum.clone();
            let mut g = target.gradient_vec(&x);
            leapfrog(target, &mut x, &mut v, &mut g, h, n, Some(&mut out))?;
        }
    }
    Ok(out)
}

/// `H(φ_T(x, v)) - H(x, v)`; `h = 0` selects the exact flow.
pub fn energy_error<S: Scalar>(
    target: &dyn Target<S>,
    state: &PhaseState<S>,
    duration: S,
    h: S,
) -> Result<S> {
    let spec = if h == S::zero() {
        FlowSpec::exact_for(target, duration)?
    } else {
        FlowSpec::verlet(duration, h)?
    };
    let end = flow(target, state, &spec)?;
    let delta = end.hamiltonian(target) - state.hamiltonian(target);
    if !delta.is_finite() {
        return Err(end.domain_error("non-finite energy"));
    }
    Ok(delta)
}

/// Determinant of the central-difference Jacobian of one Verlet step as a map on `R^{2d}`.
pub fn jacobian_determinant_fd<S: Scalar>(
    target: &dyn Target<S>,
    state: &PhaseState<S>,
    h: S,
    fd_step: S,
) -> Result<f64> {
    let d = state.dim();
    if d > JACOBIAN_MAX_DIM {
        return Err(HmcError::Unsupported(format!(
            "finite-difference Jacobian limited to d <= {JACOBIAN_MAX_DIM}, got {d}"
        )));
    }
    if !(fd_step > S::zero()) {
        return invalid("finite-difference step must be positive");
    }
    let n = 2 * d;
    let mut jac = DMatrix::<f64>::zeros(n, n);
    let perturbed = |j: usize, delta: S| -> PhaseState<S> {
        let mut s = state.clone();
        if j < d {
            s.position[j] = s.position[j] + delta;
        } else {
            s.momentum[j - d] = s.momentum[j - d] + delta;
        }
        s
    };
    for j in 0..n {
        let plus = verlet_step(target, &perturbed(j, fd_step), h)?;
        let minus = verlet_step(target, &perturbed(j, -fd_step), h)?;
        let scale = 2.0 * fd_step.as_f64();
        for i in 0..d {
            jac[(i, j)] = (plus.position[i] - minus.position[i]).as_f64() / scale;
            jac[(i + d, j)] = (plus.momentum[i] - minus.momentum[i]).as_f64() / scale;
        }
    }
    Ok(jac.determinant())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;
    use crate::targets::{FreeParticle, Gaussian, Rosenbrock, TwoGaussianMixture1d};
    use std::f64::consts::PI;

    fn ps(x: &[f64], v: &[f64]) -> PhaseState<f64> {
        PhaseState::new(x.to_vec(), v.to_vec()).unwrap()
    }

    #[test]
    fn free_flight() {
        let t = FreeParticle::new(2).unwrap();
        let out = verlet_step(&t, &ps(&[1.0, 2.0], &[0.5, -1.0]), 0.1).unwrap();
        assert_eq!(out.position, vec![1.05, 1.9]);
        assert_eq!(out.momentum, vec![0.5, -1.0]);
    }

    #[test]
    fn hand_evaluated_gaussian_step() {
        let g = Gaussian::<f64>::standard(1).unwrap();
        let out = verlet_step(&g, &ps(&[1.0], &[0.0]), 0.5).unwrap();
        assert!((out.position[0] - 0.875).abs() < 1e-15);
        assert!((out.momentum[0] + 0.46875).abs() < 1e-15);
    }

    #[test]
    fn single_step_reversible() {
        let mix = TwoGaussianMixture1d::new(1.0).unwrap();
        let s = ps(&[0.7], &[-1.3]);
        let back = verlet_step(&mix, &verlet_step(&mix, &s, 0.1).unwrap().flipped(), 0.1)
            .unwrap()
            .flipped();
        assert!((back.position[0] - 0.7).abs() < 1e-12);
        assert!((back.momentum[0] + 1.3).abs() < 1e-12);
    }

    #[test]
    fn quarter_and_half_rotation() {
        let g = Gaussian::<f64>::standard(2).unwrap();
        let s = ps(&[1.0, -2.0], &[0.5, 3.0]);
        let q = flow(&g, &s, &FlowSpec::analytic(PI / 2.0).unwrap()).unwrap();
        for i in 0..2 {
            assert!((q.position[i] - s.momentum[i]).abs() < 1e-12);
            assert!((q.momentum[i] + s.position[i]).abs() < 1e-12);
        }
        let h = flow(&g, &s, &FlowSpec::analytic(PI).unwrap()).unwrap();
        for i in 0..2 {
            assert!((h.position[i] + s.position[i]).abs() < 1e-12);
            assert!((h.momentum[i] + s.momentum[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn verlet_converges_to_analytic() {
        let g = Gaussian::<f64>::standard(1).unwrap();
        let s = ps(&[1.2], &[-0.4]);
        let exact = flow(&g, &s, &FlowSpec::analytic(1.0).unwrap()).unwrap();
        let num = flow(&g, &s, &FlowSpec::verlet(1.0, 1e-3).unwrap()).unwrap();
        assert!((exact.position[0] - num.position[0]).abs() <= 1e-5);
    }

    #[test]
    fn reference_flow_uses_fine_steps() {
        let spec = FlowSpec::<f64>::reference(0.45).unwrap();
        let (n, h) = spec.substeps().unwrap();
        assert_eq!(n, 1000);
        assert!((h * n as f64 - 0.45).abs() < 1e-15);
        let (n, _) = FlowSpec::<f64>::reference(3.5).unwrap().substeps().unwrap();
        assert_eq!(n, 3500);
    }

    #[test]
    fn analytic_mode_requires_gaussian() {
        let spec = FlowSpec::analytic(1.0).unwrap();
        let err = flow(&Rosenbrock, &ps(&[0.0, 0.0], &[0.0, 0.0]), &spec).unwrap_err();
        assert!(matches!(err, HmcError::UnsupportedMode(_)));
    }

    #[test]
    fn non_integer_grid_rejected() {
        assert!(FlowSpec::<f64>::verlet(1.0, 0.3).is_err());
        assert!(FlowSpec::<f64>::verlet(1.0, 0.0).is_err());
        assert!(FlowSpec::<f64>::verlet(0.3, 0.1).is_ok());
        assert!(FlowSpec::<f32>::verlet(1.0, 0.05).is_ok());
    }

    #[test]
    fn energy_error_zero_cases() {
        let free = FreeParticle::new(2).unwrap();
        let s = ps(&[1.0, 2.0], &[0.3, 0.4]);
        assert_eq!(energy_error(&free, &s, 1.0, 0.1).unwrap(), 0.0);
        let g = Gaussian::new(&[4.0, 1.0]).unwrap();
        assert!(energy_error(&g, &s, 1.0, 0.0).unwrap().abs() < 1e-12);
        let mix = TwoGaussianMixture1d::new(1.0).unwrap();
        let s1 = ps(&[0.5], &[1.0]);
        // reference flow: O(h_ref²) with h_ref = 1e-3
        assert!(energy_error(&mix, &s1, 1.0, 0.0).unwrap().abs() < 1e-5);
    }

    #[test]
    fn energy_error_second_order() {
        let mix = TwoGaussianMixture1d::new(1.0).unwrap();
        let s = ps(&[0.8], &[1.1]);
        let hs = [0.1, 0.05, 0.025, 0.0125];
        let errs: Vec<f64> = hs
            .iter()
            .map(|&h| energy_error(&mix, &s, 1.0, h).unwrap().abs())
            .collect();
        // least-squares slope of log|ΔH| against log h
        let lx: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
        let ly: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
        let mx = lx.iter().sum::<f64>() / 4.0;
        let my = ly.iter().sum::<f64>() / 4.0;
        let slope = lx
            .iter()
            .zip(&ly)
            .map(|(a, b)| (a - mx) * (b - my))
            .sum::<f64>()
            / lx.iter().map(|a| (a - mx) * (a - mx)).sum::<f64>();
        assert!((slope - 2.0).abs() <= 0.3, "slope {slope}, errs {errs:?}");
    }

    #[test]
    fn jacobian_unit_determinant() {
        let free = FreeParticle::new(2).unwrap();
        let det = jacobian_determinant_fd(&free, &ps(&[1.0, 0.0], &[0.0, 2.0]), 0.3, 1e-5).unwrap();
        assert!((det - 1.0).abs() < 1e-9);
        let g = Gaussian::<f64>::standard(2).unwrap();
        let det = jacobian_determinant_fd(&g, &ps(&[1.0, -0.5], &[0.2, 0.7]), 0.1, 1e-5).unwrap();
        assert!((det - 1.0).abs() < 1e-6);
        let det = jacobian_determinant_fd(&Rosenbrock, &ps(&[0.5, 0.5], &[0.0, 0.0]), 0.01, 1e-5)
            .unwrap();
        assert!((det - 1.0).abs() < 1e-5);
        let big = Gaussian::<f64>::standard(5).unwrap();
        let s5 = ps(&[0.0; 5], &[0.0; 5]);
        assert!(matches!(
            jacobian_determinant_fd(&big, &s5, 0.1, 1e-5),
            Err(HmcError::Unsupported(_))
        ));
    }

    #[test]
    fn divergence_reports_state() {
        let s = ps(&[50.0, 0.0], &[0.0, 0.0]);
        let err = flow(&Rosenbrock, &s, &FlowSpec::verlet(40.0, 0.5).unwrap()).unwrap_err();
        match err {
            HmcError::NumericalDomain { position, .. } => assert_eq!(position.len(), 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn trajectory_stays_near_free_flight() {
        // max_s |q_s - (x + s v)| <= L(T² + T h) max(|x|, |x + T v|) when L(T² + T h) <= 1
        let g = Gaussian::<f64>::standard(2).unwrap();
        let mut rng = RandomStream::new(8, 0);
        for _ in 0..200 {
            let x: Vec<f64> = rng.normal_vec::<f64>(2).iter().map(|v| v * 3.0).collect();
            let v: Vec<f64> = rng.normal_vec(2);
            let (t, h) = (0.8, 0.1);
            let bound_factor: f64 = t * t + t * h;
            assert!(bound_factor <= 1.0);
            let xt: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + t * b).collect();
            let scale = crate::vector::norm(&x).max(crate::vector::norm(&xt));
            let path = flow_trace(&g, &ps(&x, &v), &FlowSpec::verlet(t, h).unwrap()).unwrap();
            for (k, s) in path.iter().enumerate() {
                let tk = k as f64 * h;
                let free: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + tk * b).collect();
                let dev = crate::vector::distance(&s.position, &free);
                assert!(dev <= bound_factor * scale + 1e-12);
            }
        }
    }
}
