//! Coupled HMC transitions: synchronous momenta for distant chains and the
//! γ-shift/reflection coupling near each other, with a shared acceptance
//! uniform in both regimes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::kernel::{hmc_step, transition, KernelConfig, KernelMode};
use crate::rng::{RandomStream, SUBSTREAM_DYNAMICS, SUBSTREAM_INIT};
use crate::targets::Target;
use crate::vector::{distance, dot, norm, sub};
use crate::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CouplingConfig<S> {
    /// Shift scale `γ`; zero gives synchronous momenta everywhere.
    pub gamma: S,
    /// Distance at or above which the synchronous coupling is used.
    /// `+∞` applies the contractive coupling globally.
    pub switch_radius: S,
    pub merge_threshold: S,
    pub max_steps: usize,
}

impl<S: Scalar> CouplingConfig<S> {
    pub fn new(gamma: S, switch_radius: S, merge_threshold: S, max_steps: usize) -> Result<Self> {
        let cfg = Self {
            gamma,
            switch_radius,
            merge_threshold,
            max_steps,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Contractive coupling at every distance.
    pub fn global(gamma: S, merge_threshold: S, max_steps: usize) -> Result<Self> {
        Self::new(gamma, S::infinity(), merge_threshold, max_steps)
    }

    pub fn synchronous(merge_threshold: S, max_steps: usize) -> Result<Self> {
        Self::new(S::zero(), S::zero(), merge_threshold, max_steps)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= S::zero()) || !self.gamma.is_finite() {
            return invalid(format!(
                "gamma must be finite and nonnegative, got {}",
                self.gamma
            ));
        }
        if !(self.switch_radius >= S::zero()) {
            return invalid(format!(
                "switch_radius must be nonnegative, got {}",
                self.switch_radius
            ));
        }
        if !(self.merge_threshold > S::zero()) {
            return invalid(format!(
                "merge_threshold must be positive, got {}",
                self.merge_threshold
            ));
        }
        if self.max_steps == 0 {
            return invalid("max_steps must be at least 1");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoupledState<S> {
    pub x: Vec<S>,
    pub y: Vec<S>,
    pub merged: bool,
    pub distance: S,
}

impl<S: Scalar> CoupledState<S> {
    pub fn new(x: Vec<S>, y: Vec<S>) -> Result<Self> {
        if x.len() != y.len() {
            return invalid(format!(
                "chains have dimensions {} and {}",
                x.len(),
                y.len()
            ));
        }
        let d = distance(&x, &y);
        Ok(Self {
            merged: d == S::zero(),
            distance: d,
            x,
            y,
        })
    }

    /// Glues `y` onto `x`.
    pub fn merge(&mut self) {
        self.y.clone_from(&self.x);
        self.merged = true;
        self.distance = S::zero();
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoupledMomenta<S> {
    pub xi: Vec<S>,
    pub eta: Vec<S>,
    pub shifted: bool,
}

/// `η` from `ξ` and the auxiliary uniform `ũ`, for `z = x - y`.
pub fn couple_momenta<S: Scalar>(z: &[S], gamma: S, xi: Vec<S>, u_tilde: S) -> CoupledMomenta<S> {
    let r = norm(z);
    if r == S::zero() || gamma == S::zero() {
        return CoupledMomenta {
            eta: xi.clone(),
            xi,
            shifted: true,
        };
    }
    let a = dot(z, &xi) / r;
    let b = gamma * r;
    // φ(a + b) / φ(a)
    let ratio = (-a * b - S::lit(0.5) * b * b).exp();
    if u_tilde <= ratio {
        let eta = xi.iter().zip(z).map(|(&v, &zi)| v + gamma * zi).collect();
        CoupledMomenta {
            xi,
            eta,
            shifted: true,
        }
    } else {
        let c = S::lit(2.0) * a / r;
        let eta = xi.iter().zip(z).map(|(&v, &zi)| v - c * zi).collect();
        CoupledMomenta {
            xi,
            eta,
            shifted: false,
        }
    }
}

/// Draws `ξ`, then `ũ`, and couples them.
pub fn sample_coupled_momenta<S: Scalar>(
    z: &[S],
    gamma: S,
    rng: &mut RandomStream,
) -> CoupledMomenta<S> {
    let xi = rng.normal_vec(z.len());
    let u_tilde = rng.uniform();
    couple_momenta(z, gamma, xi, u_tilde)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Synchronous,
    Contractive,
    Merged,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Synchronous => "synchronous",
            Regime::Contractive => "contractive",
            Regime::Merged => "merged",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepDiagnostics {
    pub regime: Regime,
    pub shifted: bool,
    pub accepted_x: bool,
    pub accepted_y: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoupledStep<S> {
    pub x: Vec<S>,
    pub y: Vec<S>,
    pub diagnostics: StepDiagnostics,
}

/// One coupled transition of chains at `x` and `y`.
///
/// Stream layout: synchronous regime `ξ, 𝒰`; contractive regime `ξ, ũ, 𝒰`.
pub fn coupled_step<S: Scalar>(
    target: &dyn Target<S>,
    kcfg: &KernelConfig<S>,
    ccfg: &CouplingConfig<S>,
    x: &[S],
    y: &[S],
    rng: &mut RandomStream,
) -> Result<CoupledStep<S>> {
    let d = target.dim();
    if x.len() != d || y.len() != d {
        return invalid(format!("chain dimensions must equal target dimension {d}"));
    }
    let spec = kcfg.flow_spec(target)?;
    let z = sub(x, y);
    let (regime, momenta) = if norm(&z) >= ccfg.switch_radius {
        let xi = rng.normal_vec(d);
        (
            Regime::Synchronous,
            CoupledMomenta {
                eta: xi.clone(),
                xi,
                shifted: false,
            },
        )
    } else {
        (
            Regime::Contractive,
            sample_coupled_momenta(&z, ccfg.gamma, rng),
        )
    };
    let u: S = rng.uniform();
    let shifted = momenta.shifted;
    let ox = transition(target, kcfg, &spec, x, momenta.xi, u)?;
    let oy = transition(target, kcfg, &spec, y, momenta.eta, u)?;
    Ok(CoupledStep {
        x: ox.next_position,
        y: oy.next_position,
        diagnostics: StepDiagnostics {
            regime,
            shifted,
            accepted_x: ox.accepted,
            accepted_y: oy.accepted,
        },
    })
}

/// A coupled pair that glues itself once the distance drops below the
/// merge threshold and then moves both components with the same draws.
pub struct CoupledChain<'a, S> {
    target: &'a dyn Target<S>,
    kcfg: KernelConfig<S>,
    ccfg: CouplingConfig<S>,
    state: CoupledState<S>,
    steps: usize,
    met_at: Option<usize>,
    last_distance: S,
    glued_from: Option<Vec<S>>,
}

impl<'a, S: Scalar> CoupledChain<'a, S> {
    pub fn new(
        target: &'a dyn Target<S>,
        kcfg: KernelConfig<S>,
        ccfg: CouplingConfig<S>,
        x0: Vec<S>,
        y0: Vec<S>,
    ) -> Result<Self> {
        kcfg.validate()?;
        ccfg.validate()?;
        let mut state = CoupledState::new(x0, y0)?;
        if state.x.len() != target.dim() {
            return invalid(format!(
                "chain dimension {} does not match target dimension {}",
                state.x.len(),
                target.dim()
            ));
        }
        let met_at = (state.distance < ccfg.merge_threshold).then_some(0);
        if met_at.is_some() {
            state.merge();
        }
        Ok(Self {
            target,
            kcfg,
            ccfg,
            last_distance: state.distance,
            state,
            steps: 0,
            met_at,
            glued_from: None,
        })
    }

    pub fn state(&self) -> &CoupledState<S> {
        &self.state
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Step count at which the distance first fell below the threshold.
    pub fn met_at(&self) -> Option<usize> {
        self.met_at
    }

    /// Distance produced by the latest step, before any gluing.
    pub fn last_distance(&self) -> S {
        self.last_distance
    }

    /// `y` as produced by the step that triggered the merge.
    pub fn unglued_y(&self) -> Option<&[S]> {
        self.glued_from.as_deref()
    }

    pub fn step(&mut self, rng: &mut RandomStream) -> Result<StepDiagnostics> {
        self.steps += 1;
        self.glued_from = None;
        if self.state.merged {
            let out = hmc_step(self.target, &self.kcfg, &self.state.x, rng)?;
            self.state.x = out.next_position;
            self.state.y.clone_from(&self.state.x);
            self.last_distance = S::zero();
            return Ok(StepDiagnostics {
                regime: Regime::Merged,
                shifted: false,
                accepted_x: out.accepted,
                accepted_y: out.accepted,
            });
        }
        let out = coupled_step(
            self.target,
            &self.kcfg,
            &self.ccfg,
            &self.state.x,
            &self.state.y,
            rng,
        )?;
        self.state.distance = distance(&out.x, &out.y);
        self.last_distance = self.state.distance;
        self.state.x = out.x;
        self.state.y = out.y;
        if self.state.distance < self.ccfg.merge_threshold {
            self.met_at = Some(self.steps);
            self.glued_from = Some(self.state.y.clone());
            self.state.merge();
        }
        Ok(out.diagnostics)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", content = "steps", rename_all = "snake_case")]
pub enum CouplingOutcome {
    Met(usize),
    Timeout(usize),
}

impl CouplingOutcome {
    pub fn met(self) -> Option<usize> {
        match self {
            CouplingOutcome::Met(n) => Some(n),
            CouplingOutcome::Timeout(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRow<S> {
    pub step: usize,
    /// Distance after the step, before gluing.
    pub distance: S,
    pub diagnostics: StepDiagnostics,
    pub x: Vec<S>,
    pub y: Vec<S>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplingRun<S> {
    pub outcome: CouplingOutcome,
    pub initial_distance: S,
    pub final_state: CoupledState<S>,
    pub trace: Option<Vec<TraceRow<S>>>,
}

/// Runs the coupled pair until the first step with distance below the merge
/// threshold or until `max_steps`.
pub fn coupling_time<S: Scalar>(
    target: &dyn Target<S>,
    kcfg: &KernelConfig<S>,
    ccfg: &CouplingConfig<S>,
    x0: &[S],
    y0: &[S],
    record_trace: bool,
    rng: &mut RandomStream,
) -> Result<CouplingRun<S>> {
    let mut chain = CoupledChain::new(target, *kcfg, *ccfg, x0.to_vec(), y0.to_vec())?;
    let initial_distance = chain.state().distance;
    let mut trace = record_trace.then(Vec::new);
    while chain.met_at().is_none() && chain.steps() < ccfg.max_steps {
        let diagnostics = chain.step(rng)?;
        if let Some(t) = trace.as_mut() {
            let y = chain.unglued_y().unwrap_or(&chain.state.y).to_vec();
            t.push(TraceRow {
                step: chain.steps(),
                distance: chain.last_distance(),
                diagnostics,
                x: chain.state.x.clone(),
                y,
            });
        }
    }
    let outcome = match chain.met_at() {
        Some(n) => CouplingOutcome::Met(n),
        None => CouplingOutcome::Timeout(chain.steps()),
    };
    Ok(CouplingRun {
        outcome,
        initial_distance,
        final_state: chain.state,
        trace,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaPolicy {
    Zero,
    #[serde(rename = "inverse_T", alias = "inverse_t")]
    InverseT,
}

impl GammaPolicy {
    pub fn gamma(self, duration: f64) -> f64 {
        match self {
            GammaPolicy::Zero => 0.0,
            GammaPolicy::InverseT => 1.0 / duration,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GammaPolicy::Zero => "zero",
            GammaPolicy::InverseT => "inverse_T",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepConfig {
    pub durations: Vec<f64>,
    pub policy: GammaPolicy,
    pub replicas: usize,
    pub mode: KernelMode,
    /// Verlet steps per trajectory (`h = T / steps_per_trajectory`).
    pub steps_per_trajectory: usize,
    pub switch_radius: f64,
    pub merge_threshold: f64,
    pub max_steps: usize,
    /// Initial positions are uniform on `[lower, upper]^d`, independently per chain.
    pub init_lower: f64,
    pub init_upper: f64,
    pub seed: u64,
    pub reject_on_divergence: bool,
}

impl SweepConfig {
    pub fn new(durations: Vec<f64>, policy: GammaPolicy, replicas: usize, seed: u64) -> Self {
        Self {
            durations,
            policy,
            replicas,
            mode: KernelMode::Adjusted,
            steps_per_trajectory: 20,
            switch_radius: f64::INFINITY,
            merge_threshold: 1e-9,
            max_steps: 10_000,
            init_lower: 0.0,
            init_upper: 10.0,
            seed,
            reject_on_divergence: false,
        }
    }

    fn kernel(&self, duration: f64) -> Result<KernelConfig<f64>> {
        let step = duration / self.steps_per_trajectory as f64;
        Ok(KernelConfig::new(self.mode, duration, step)?
            .with_reject_on_divergence(self.reject_on_divergence))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub duration: f64,
    pub gamma_policy: GammaPolicy,
    pub replicas: usize,
    /// Mean first-passage step count over replicas that met.
    pub mean_steps: f64,
    /// `mean_steps · T`.
    pub mean_duration: f64,
    /// Standard error of `mean_duration`.
    pub stderr: f64,
    pub timeouts: usize,
}

/// Initial pair for replica `r`, shared by every duration and policy.
pub fn sweep_initial_pair(cfg: &SweepConfig, dim: usize, replica: usize) -> (Vec<f64>, Vec<f64>) {
    let mut rng = RandomStream::with_substream(cfg.seed, replica as u64, SUBSTREAM_INIT);
    let width = cfg.init_upper - cfg.init_lower;
    let mut draw = || -> Vec<f64> {
        (0..dim)
            .map(|_| cfg.init_lower + width * rng.uniform::<f64>())
            .collect()
    };
    let x = draw();
    let y = draw();
    (x, y)
}

/// Mean coupling time over `replicas` independent runs for every duration.
/// Replica `r` uses stream `r` for every duration, so rows share their
/// initial pairs; output does not depend on the rayon pool size.
pub fn sweep_mean_coupling_time(
    target: &dyn Target<f64>,
    cfg: &SweepConfig,
) -> Result<Vec<SweepRow>> {
    if cfg.durations.is_empty() {
        return invalid("duration grid is empty");
    }
    if cfg.replicas < 2 {
        return invalid("at least two replicas are needed for a standard error");
    }
    if cfg.steps_per_trajectory == 0 {
        return invalid("steps_per_trajectory must be at least 1");
    }
    if !(cfg.init_upper >= cfg.init_lower) {
        return invalid("init_upper must not be below init_lower");
    }
    let dim = target.dim();
    let tasks: Vec<(usize, usize)> = (0..cfg.durations.len())
        .flat_map(|t| (0..cfg.replicas).map(move |r| (t, r)))
        .collect();
    let outcomes: Vec<CouplingOutcome> = tasks
        .par_iter()
        .map(|&(t, r)| {
            let duration = cfg.durations[t];
            let kcfg = cfg.kernel(duration)?;
            let ccfg = CouplingConfig::new(
                cfg.policy.gamma(duration),
                cfg.switch_radius,
                cfg.merge_threshold,
                cfg.max_steps,
            )?;
            let (x0, y0) = sweep_initial_pair(cfg, dim, r);
            let mut rng = RandomStream::with_substream(cfg.seed, r as u64, SUBSTREAM_DYNAMICS);
            Ok(coupling_time(target, &kcfg, &ccfg, &x0, &y0, false, &mut rng)?.outcome)
        })
        .collect::<Result<_>>()?;
    Ok(cfg
        .durations
        .iter()
        .zip(outcomes.chunks(cfg.replicas))
        .map(|(&duration, chunk)| summarize(duration, cfg, chunk))
        .collect())
}

fn summarize(duration: f64, cfg: &SweepConfig, outcomes: &[CouplingOutcome]) -> SweepRow {
    let met: Vec<f64> = outcomes
        .iter()
        .filter_map(|o| o.met())
        .map(|n| n as f64)
        .collect();
    let timeouts = outcomes.len() - met.len();
    let n = met.len() as f64;
    let (mean, se) = match met.len() {
        0 => (f64::NAN, f64::NAN),
        1 => (met[0], f64::NAN),
        _ => {
            let mean = met.iter().sum::<f64>() / n;
            let var = met.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (mean, (var / n).sqrt())
        }
    };
    SweepRow {
        duration,
        gamma_policy: cfg.policy,
        replicas: cfg.replicas,
        mean_steps: mean,
        mean_duration: mean * duration,
        stderr: se * duration,
        timeouts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::stats::{ks_two_sample, normal_cdf};
    use crate::targets::{FreeParticle, Gaussian, TwoGaussianMixture1d};

    #[test]
    fn degenerate_direction_keeps_momentum() {
        let m = couple_momenta(&[0.0, 0.0], 1.0, vec![0.3, -0.2], 0.99);
        assert!(m.shifted);
        assert_eq!(m.xi, m.eta);
        let m = couple_momenta(&[1.0, 0.0], 0.0, vec![0.3, -0.2], 0.99);
        assert!(m.shifted && m.xi == m.eta);
    }

    #[test]
    fn reflection_preserves_norm_and_flips_component() {
        let z = [3.0, 4.0];
        let m = couple_momenta(&z, 10.0f64, vec![1.0, 2.0], 1.0 - 1e-16);
        assert!(!m.shifted);
        assert!((norm(&m.eta) - norm(&m.xi)).abs() < 1e-12);
        let e = [0.6f64, 0.8];
        assert!((dot(&e, &m.eta) + dot(&e, &m.xi)).abs() < 1e-12);
    }

    fn tv_shift(b: f64) -> f64 {
        2.0 * normal_cdf(b / 2.0) - 1.0
    }

    #[test]
    fn reflection_frequency_is_total_variation() {
        let n = 100_000;
        for (gamma, z) in [(1.0, 1.0), (0.5, 0.6), (2.0, 1.5)] {
            let mut rng = RandomStream::new(21, 0);
            let refl = (0..n)
                .filter(|_| !sample_coupled_momenta(&[z], gamma, &mut rng).shifted)
                .count() as f64
                / n as f64;
            let p = tv_shift(gamma * z);
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!(
                (refl - p).abs() <= 3.0 * se,
                "γ|z|={} {refl} vs {p}",
                gamma * z
            );
            assert!(refl <= gamma * z / (2.0 * std::f64::consts::PI).sqrt() + 3.0 * se);
        }
    }

    #[test]
    fn eta_is_standard_normal() {
        let mut rng = RandomStream::new(22, 0);
        let z = [0.7, -0.4];
        let etas: Vec<f64> = (0..20_000)
            .map(|_| sample_coupled_momenta(&z, 1.3, &mut rng).eta[0])
            .collect();
        let ks = crate::analysis::stats::ks_one_sample(&etas, normal_cdf);
        assert!(ks.p_value >= 1e-3, "{ks:?}");
    }

    #[test]
    fn free_flight_meets_in_one_shifted_step() {
        let free = FreeParticle::new(2).unwrap();
        let t = 1.5;
        let kcfg = KernelConfig::exact(t).unwrap();
        let ccfg = CouplingConfig::global(1.0 / t, 1e-9, 1000).unwrap();
        let mut rng = RandomStream::new(23, 0);
        let mut steps = Vec::new();
        for _ in 0..200 {
            let run = coupling_time(
                &free,
                &kcfg,
                &ccfg,
                &[0.0, 0.0],
                &[0.5, -0.3],
                true,
                &mut rng,
            )
            .unwrap();
            let trace = run.trace.unwrap();
            // a reflection can push the pair apart, so timeouts are possible
            match run.outcome.met() {
                Some(n) => {
                    assert!(trace.last().unwrap().diagnostics.shifted);
                    steps.push(n);
                }
                None => steps.push(usize::MAX),
            }
        }
        steps.sort_unstable();
        assert_eq!(steps[steps.len() / 2], 1);
    }

    #[test]
    fn identical_start_meets_at_zero() {
        let g = Gaussian::<f64>::standard(1).unwrap();
        let kcfg = KernelConfig::exact(1.0).unwrap();
        let ccfg = CouplingConfig::global(1.0, 1e-9, 10).unwrap();
        let run = coupling_time(
            &g,
            &kcfg,
            &ccfg,
            &[0.4],
            &[0.4],
            true,
            &mut RandomStream::new(0, 0),
        )
        .unwrap();
        assert_eq!(run.outcome, CouplingOutcome::Met(0));
        assert!(run.trace.unwrap().is_empty());
    }

    #[test]
    fn merged_chains_stay_identical() {
        let mix = TwoGaussianMixture1d::new(1.0).unwrap();
        let kcfg = KernelConfig::adjusted(1.0, 0.1).unwrap();
        let ccfg = CouplingConfig::global(1.0, 1e-9, 1000).unwrap();
        let mut chain = CoupledChain::new(&mix, kcfg, ccfg, vec![2.0], vec![-1.0]).unwrap();
        let mut rng = RandomStream::new(24, 0);
        while chain.met_at().is_none() {
            chain.step(&mut rng).unwrap();
        }
        // the merged pair follows the single-chain kernel with the same stream
        let mut solo = chain.state().x.clone();
        let mut solo_rng = rng.clone();
        for _ in 0..200 {
            let d = chain.step(&mut rng).unwrap();
            assert_eq!(d.regime, Regime::Merged);
            solo = hmc_step(&mix, &kcfg, &solo, &mut solo_rng)
                .unwrap()
                .next_position;
            assert_eq!(chain.state().x, chain.state().y);
            assert_eq!(chain.state().x, solo);
        }
    }

    #[test]
    fn synchronous_regime_above_switch_radius() {
        let g = Gaussian::<f64>::standard(1).unwrap();
        let kcfg = KernelConfig::adjusted(1.0, 0.1).unwrap();
        let ccfg = CouplingConfig::new(1.0, 2.0, 1e-9, 10).unwrap();
        let mut rng = RandomStream::new(25, 0);
        let far = coupled_step(&g, &kcfg, &ccfg, &[3.0], &[0.0], &mut rng).unwrap();
        assert_eq!(far.diagnostics.regime, Regime::Synchronous);
        let near = coupled_step(&g, &kcfg, &ccfg, &[1.0], &[0.0], &mut rng).unwrap();
        assert_eq!(near.diagnostics.regime, Regime::Contractive);
    }

    #[test]
    fn coupled_marginals_match_kernel() {
        let mix = TwoGaussianMixture1d::new(1.0).unwrap();
        let n = 10_000;
        for kcfg in [
            KernelConfig::exact(0.8).unwrap(),
            KernelConfig::adjusted(1.0, 0.25).unwrap(),
        ] {
            let ccfg = CouplingConfig::new(0.8, 3.0, 1e-12, 1).unwrap();
            let (x, y) = ([0.5], [-1.5]);
            let mut rng = RandomStream::new(26, 0);
            let mut xs = Vec::with_capacity(n);
            let mut ys = Vec::with_capacity(n);
            for _ in 0..n {
                let s = coupled_step(&mix, &kcfg, &ccfg, &x, &y, &mut rng).unwrap();
                xs.push(s.x[0]);
                ys.push(s.y[0]);
            }
            let mut single = RandomStream::new(27, 0);
            let sx: Vec<f64> = (0..n)
                .map(|_| {
                    hmc_step(&mix, &kcfg, &x, &mut single)
                        .unwrap()
                        .next_position[0]
                })
                .collect();
            let sy: Vec<f64> = (0..n)
                .map(|_| {
                    hmc_step(&mix, &kcfg, &y, &mut single)
                        .unwrap()
                        .next_position[0]
                })
                .collect();
            assert!(ks_two_sample(&xs, &sx).p_value >= 1e-3);
            assert!(ks_two_sample(&ys, &sy).p_value >= 1e-3);
        }
    }

    #[test]
    fn sweep_shape_and_worker_independence() {
        let g = Gaussian::<f64>::standard(2).unwrap();
        let mut cfg = SweepConfig::new(vec![0.5, 1.0], GammaPolicy::InverseT, 2, 3);
        cfg.max_steps = 500;
        let rows = sweep_mean_coupling_time(&g, &cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.stderr.is_finite() && r.timeouts == 0));
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let serial = pool.install(|| sweep_mean_coupling_time(&g, &cfg).unwrap());
        assert_eq!(rows, serial);
        cfg.replicas = 1;
        assert!(sweep_mean_coupling_time(&g, &cfg).is_err());
    }
}
