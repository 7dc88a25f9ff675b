//! The HMC transition kernel: fresh momentum, Hamiltonian flow for duration
//! `T`, and an optional Metropolis correction.

use serde::{Deserialize, Serialize};

use crate::dynamics::{flow, FlowSpec, PhaseState};
use crate::error::{invalid, HmcError, Result};
use crate::rng::RandomStream;
use crate::targets::Target;
use crate::vector::{all_finite, from_f64};
use crate::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelMode {
    /// Exact flow (closed form or fine-step reference); always accepts.
    Exact,
    /// Verlet flow without correction.
    Unadjusted,
    /// Verlet flow with Metropolis accept/reject.
    Adjusted,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KernelConfig<S> {
    pub duration: S,
    /// Verlet step; ignored (zero) in exact mode.
    pub step: S,
    pub mode: KernelMode,
    /// In adjusted mode, treat a diverging trajectory as a rejection instead of an error.
    pub reject_on_divergence: bool,
}

impl<S: Scalar> KernelConfig<S> {
    pub fn new(mode: KernelMode, duration: S, step: S) -> Result<Self> {
        let cfg = Self {
            duration,
            step: if mode == KernelMode::Exact {
                S::zero()
            } else {
                step
            },
            mode,
            reject_on_divergence: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn exact(duration: S) -> Result<Self> {
        Self::new(KernelMode::Exact, duration, S::zero())
    }

    pub fn unadjusted(duration: S, step: S) -> Result<Self> {
        Self::new(KernelMode::Unadjusted, duration, step)
    }

    pub fn adjusted(duration: S, step: S) -> Result<Self> {
        Self::new(KernelMode::Adjusted, duration, step)
    }

    pub fn with_reject_on_divergence(mut self, on: bool) -> Self {
        self.reject_on_divergence = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.mode {
            KernelMode::Exact => {
                if !(self.duration > S::zero()) || !self.duration.is_finite() {
                    return invalid(format!("duration must be positive, got {}", self.duration));
                }
                Ok(())
            }
            _ => crate::dynamics::grid_steps(self.duration, self.step).map(|_| ()),
        }
    }

    pub fn flow_spec(&self, target: &dyn Target<S>) -> Result<FlowSpec<S>> {
        match self.mode {
            KernelMode::Exact => FlowSpec::exact_for(target, self.duration),
            _ => FlowSpec::verlet(self.duration, self.step),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepOutcome<S> {
    pub next_position: Vec<S>,
    pub accepted: bool,
    /// `(q_T, p_T)`.
    pub proposal: PhaseState<S>,
    /// `H(q_T, p_T) - H(x, ξ)`.
    pub energy_change: S,
    /// `ξ`.
    pub momentum_draw: Vec<S>,
}

/// Metropolis test `u <= exp(-ΔH)`; always true outside adjusted mode.
#[inline]
pub fn accepts<S: Scalar>(mode: KernelMode, energy_change: S, u: S) -> bool {
    match mode {
        KernelMode::Adjusted => u <= (-energy_change).exp(),
        _ => true,
    }
}

/// The transition from `x` given the momentum `ξ` and acceptance uniform `u`.
pub fn transition<S: Scalar>(
    target: &dyn Target<S>,
    cfg: &KernelConfig<S>,
    spec: &FlowSpec<S>,
    x: &[S],
    xi: Vec<S>,
    u: S,
) -> Result<StepOutcome<S>> {
    let start = PhaseState {
        position: x.to_vec(),
        momentum: xi,
    };
    let h0 = start.hamiltonian(target);
    let diverged = |proposal: PhaseState<S>, start: PhaseState<S>| StepOutcome {
        next_position: start.position,
        accepted: false,
        proposal,
        energy_change: S::infinity(),
        momentum_draw: start.momentum,
    };
    let soft = cfg.reject_on_divergence && cfg.mode == KernelMode::Adjusted;
    let proposal = match flow(target, &start, spec) {
        Ok(p) => p,
        Err(HmcError::NumericalDomain {
            position, momentum, ..
        }) if soft => {
            let p = PhaseState {
                position: from_f64(&position),
                momentum: from_f64(&momentum),
            };
            return Ok(diverged(p, start));
        }
        Err(e) => return Err(e),
    };
    let energy_change = proposal.hamiltonian(target) - h0;
    if !energy_change.is_finite() || !all_finite(&proposal.position) {
        if soft {
            return Ok(diverged(proposal, start));
        }
        return Err(HmcError::NumericalDomain {
            message: "non-finite energy along trajectory".into(),
            position: crate::vector::to_f64(&proposal.position),
            momentum: crate::vector::to_f64(&proposal.momentum),
        });
    }
    let accepted = accepts(cfg.mode, energy_change, u);
    Ok(StepOutcome {
        next_position: if accepted {
            proposal.position.clone()
        } else {
            start.position.clone()
        },
        accepted,
        proposal,
        energy_change,
        momentum_draw: start.momentum,
    })
}

/// One HMC transition. Draws `ξ ~ N(0, I_d)` and then one uniform, in every mode.
pub fn hmc_step<S: Scalar>(
    target: &dyn Target<S>,
    cfg: &KernelConfig<S>,
    x: &[S],
    rng: &mut RandomStream,
) -> Result<StepOutcome<S>> {
    if x.len() != target.dim() {
        return invalid(format!(
            "position dimension {} does not match target dimension {}",
            x.len(),
            target.dim()
        ));
    }
    let spec = cfg.flow_spec(target)?;
    let xi = rng.normal_vec(target.dim());
    let u = rng.uniform();
    transition(target, cfg, &spec, x, xi, u)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainRecord<S> {
    pub position: Vec<S>,
    pub accepted: bool,
    pub energy_change: S,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainSummary<S> {
    pub n_steps: usize,
    pub accepted: usize,
    pub acceptance_rate: f64,
    pub mean: Vec<f64>,
    /// Sample covariance (divisor `n - 1`; zero when `n = 1`).
    pub covariance: Vec<Vec<f64>>,
    pub final_position: Vec<S>,
    pub trace: Option<Vec<ChainRecord<S>>>,
}

/// Welford accumulator for mean and covariance.
#[derive(Clone, Debug)]
pub struct OnlineMoments {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<Vec<f64>>,
}

impl OnlineMoments {
    pub fn new(dim: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; dim],
            m2: vec![vec![0.0; dim]; dim],
        }
    }

    pub fn push(&mut self, x: &[f64]) {
        self.n += 1;
        let n = self.n as f64;
        let delta: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        for (m, d) in self.mean.iter_mut().zip(&delta) {
            *m += d / n;
        }
        for i in 0..x.len() {
            for j in 0..x.len() {
                self.m2[i][j] += delta[i] * (x[j] - self.mean[j]);
            }
        }
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> Vec<Vec<f64>> {
        let denom = if self.n > 1 {
            (self.n - 1) as f64
        } else {
            f64::INFINITY
        };
        self.m2
            .iter()
            .map(|row| row.iter().map(|v| v / denom).collect())
            .collect()
    }
}

/// Iterates [`hmc_step`] `n_steps` times from `x0`.
pub fn run_chain<S: Scalar>(
    target: &dyn Target<S>,
    cfg: &KernelConfig<S>,
    x0: &[S],
    n_steps: usize,
    record_trace: bool,
    rng: &mut RandomStream,
) -> Result<ChainSummary<S>> {
    if n_steps == 0 {
        return invalid("n_steps must be at least 1");
    }
    let mut x = x0.to_vec();
    let mut moments = OnlineMoments::new(target.dim());
    let mut accepted = 0;
    let mut trace = record_trace.then(|| Vec::with_capacity(n_steps));
    for _ in 0..n_steps {
        let out = hmc_step(target, cfg, &x, rng)?;
        accepted += out.accepted as usize;
        x = out.next_position;
        moments.push(&crate::vector::to_f64(&x));
        if let Some(t) = trace.as_mut() {
            t.push(ChainRecord {
                position: x.clone(),
                accepted: out.accepted,
                energy_change: out.energy_change,
            });
        }
    }
    Ok(ChainSummary {
        n_steps,
        accepted,
        acceptance_rate: accepted as f64 / n_steps as f64,
        mean: moments.mean().to_vec(),
        covariance: moments.covariance(),
        final_position: x,
        trace,
    })
}
