//! Monte Carlo simulation of the full nonlinear SDEs.
//!
//! Each trajectory starts at `x = 0` with a velocity drawn from the
//! stationary Ornstein-Uhlenbeck law and (by default) a uniform wave phase,
//! and is stepped to `t_total`. Drift and variance-rate estimates are
//! ensemble statistics over independent trajectories.
//!
//! Every trajectory owns a ChaCha8 stream selected by `(master_seed,
//! traj_index)`, and results are reduced in index order, so an estimate is
//! bit-for-bit the same whatever the size of the rayon pool.

use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{ensure, Error, Result};
use crate::model::{ou_stationary_sample, wave_velocity, Model, ReducedParams, WaveSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    /// Euler-Maruyama for both position and velocity.
    #[default]
    Euler,
    /// Exact Ornstein-Uhlenbeck velocity update with the wave frozen over the
    /// step; position still advances by Euler.
    ExactOuSplitting,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Euler => "euler",
            Scheme::ExactOuSplitting => "exact-ou-splitting",
        })
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "euler" => Ok(Scheme::Euler),
            "exact-ou-splitting" | "exact" => Ok(Scheme::ExactOuSplitting),
            other => Err(Error::InvalidArgument(format!("unknown scheme '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub t_total: f64,
    pub n_traj: u64,
    pub master_seed: u64,
    pub scheme: Scheme,
    pub model: Model,
}

impl SimConfig {
    /// Ensemble of 256 trajectories to `t = 1000` with `dt = 1e-3`.
    pub fn new(model: Model) -> Self {
        SimConfig {
            dt: 1e-3,
            t_total: 1e3,
            n_traj: 256,
            master_seed: 0x5eed,
            scheme: Scheme::Euler,
            model,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.dt.is_finite() && self.dt > 0.0, || {
            format!("dt must be finite and > 0, got {}", self.dt)
        })?;
        ensure(self.t_total.is_finite() && self.t_total >= 10.0 * self.dt, || {
            format!("t_total must be >= 10 dt, got {}", self.t_total)
        })?;
        ensure(self.n_traj >= 1, || "n_traj must be >= 1".to_string())
    }

    pub fn n_steps(&self) -> u64 {
        (self.t_total / self.dt).round() as u64
    }

    pub fn total_steps(&self) -> u64 {
        self.n_traj * self.n_steps()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleState {
    pub x: f64,
    pub u: f64,
    pub t: f64,
    /// Wave phase of this trajectory.
    pub phi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_traj: u64,
    pub total_steps: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceEstimate {
    pub rate: f64,
    pub stderr: f64,
    pub n_traj: u64,
    pub total_steps: u64,
}

/// One step `u' = decay u + relax eps f + noise z`, with the position moved
/// by `u` (plus `eps f` when the wave advects the particle directly).
#[derive(Debug, Clone, Copy)]
pub(crate) struct StepCoefficients {
    pub decay: f64,
    pub relax: f64,
    pub noise: f64,
    pub advect_wave: bool,
}

impl StepCoefficients {
    pub fn new(model: Model, scheme: Scheme, params: &ReducedParams, dt: f64) -> Self {
        let lambda = params.lambda;
        let (decay, noise) = match scheme {
            Scheme::Euler => (1.0 - lambda * dt, lambda * params.sigma * dt.sqrt()),
            Scheme::ExactOuSplitting => {
                let var = -params.stationary_variance() * (-2.0 * lambda * dt).exp_m1();
                ((-lambda * dt).exp(), var.sqrt())
            }
        };
        match model {
            Model::Inertia => StepCoefficients {
                decay,
                relax: 1.0 - decay,
                noise,
                advect_wave: false,
            },
            Model::Eddy => StepCoefficients {
                decay,
                relax: 0.0,
                noise,
                advect_wave: true,
            },
        }
    }

    /// `forcing` is `eps f(x, t)` at the pre-step state.
    #[inline(always)]
    pub fn apply(&self, x: f64, u: f64, forcing: f64, dt: f64, z: f64) -> (f64, f64) {
        let u_new = self.decay * u + self.relax * forcing + self.noise * z;
        let v = if self.advect_wave { u + forcing } else { u };
        (x + v * dt, u_new)
    }
}

fn step_with(
    coeffs: StepCoefficients,
    s: &ParticleState,
    dt: f64,
    params: &ReducedParams,
    w: &WaveSpec,
    noise: f64,
) -> Result<ParticleState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be > 0, got {dt}")));
    }
    let forcing = params.epsilon * wave_velocity(w, s.x, s.t, s.phi);
    let (x, u) = coeffs.apply(s.x, s.u, forcing, dt, noise);
    if !(x.is_finite() && u.is_finite()) {
        return Err(Error::Divergence {
            trajectory: 0,
            step: 0,
        });
    }
    Ok(ParticleState {
        x,
        u,
        t: s.t + dt,
        phi: s.phi,
    })
}

/// Euler-Maruyama step of the inertia model for a given standard normal draw.
pub fn step_inertia(
    s: &ParticleState,
    dt: f64,
    params: &ReducedParams,
    w: &WaveSpec,
    noise: f64,
) -> Result<ParticleState> {
    let c = StepCoefficients::new(Model::Inertia, Scheme::Euler, params, dt.max(0.0));
    step_with(c, s, dt, params, w, noise)
}

/// Euler-Maruyama step of the eddy model for a given standard normal draw.
pub fn step_eddy(
    s: &ParticleState,
    dt: f64,
    params: &ReducedParams,
    w: &WaveSpec,
    noise: f64,
) -> Result<ParticleState> {
    let c = StepCoefficients::new(Model::Eddy, Scheme::Euler, params, dt.max(0.0));
    step_with(c, s, dt, params, w, noise)
}

/// Step of either model under either scheme.
pub fn step(
    config: &SimConfig,
    s: &ParticleState,
    params: &ReducedParams,
    w: &WaveSpec,
    noise: f64,
) -> Result<ParticleState> {
    let c = StepCoefficients::new(config.model, config.scheme, params, config.dt);
    step_with(c, s, config.dt, params, w, noise)
}

/// Random stream of trajectory `traj_index`: ChaCha8 keyed by the master
/// seed, with the trajectory index as stream id.
pub fn rng_stream(master_seed: u64, traj_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(traj_index);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryOutcome {
    pub x_initial: f64,
    pub x_final: f64,
    pub initial: ParticleState,
    pub last: ParticleState,
    /// Velocities recorded every `sample_every` steps when requested.
    pub u_samples: Option<Vec<f64>>,
}

/// Runs trajectory `traj_index` from its stationary initial state to `t_total`.
pub fn simulate_trajectory(
    config: &SimConfig,
    params: &ReducedParams,
    w: &WaveSpec,
    traj_index: u64,
) -> Result<TrajectoryOutcome> {
    simulate_trajectory_sampled(config, params, w, traj_index, None)
}

pub fn simulate_trajectory_sampled(
    config: &SimConfig,
    params: &ReducedParams,
    w: &WaveSpec,
    traj_index: u64,
    sample_every: Option<u64>,
) -> Result<TrajectoryOutcome> {
    config.validate()?;
    params.validate()?;
    w.validate()?;
    let mut rng = rng_stream(config.master_seed, traj_index);
    let initial = ParticleState {
        x: 0.0,
        u: ou_stationary_sample(params, &mut rng),
        t: 0.0,
        phi: w.draw_phase(&mut rng),
    };

    let coeffs = StepCoefficients::new(config.model, config.scheme, params, config.dt);
    let dt = config.dt;
    let eps_u = params.epsilon * w.u;
    let (k, omega, phi) = (w.k, w.omega, initial.phi);
    let n = config.n_steps();
    let mut samples = sample_every.map(|e| Vec::with_capacity((n / e.max(1)) as usize + 1));

    let (mut x, mut u) = (initial.x, initial.u);
    for i in 0..n {
        let t = i as f64 * dt;
        let forcing = eps_u * (k * x - omega * t + phi).cos();
        let z: f64 = rng.sample(StandardNormal);
        (x, u) = coeffs.apply(x, u, forcing, dt, z);
        if !(x.is_finite() && u.is_finite()) {
            return Err(Error::Divergence {
                trajectory: traj_index,
                step: i + 1,
            });
        }
        if let (Some(buf), Some(every)) = (samples.as_mut(), sample_every) {
            if (i + 1) % every.max(1) == 0 {
                buf.push(u);
            }
        }
    }
    Ok(TrajectoryOutcome {
        x_initial: initial.x,
        x_final: x,
        initial,
        last: ParticleState {
            x,
            u,
            t: n as f64 * dt,
            phi,
        },
        u_samples: samples,
    })
}

/// Endpoint displacements of every trajectory, in index order.
pub fn ensemble_displacements(
    config: &SimConfig,
    params: &ReducedParams,
    w: &WaveSpec,
) -> Result<Vec<f64>> {
    config.validate()?;
    let results: Vec<Result<f64>> = (0..config.n_traj)
        .into_par_iter()
        .map(|i| simulate_trajectory(config, params, w, i).map(|o| o.x_final - o.x_initial))
        .collect();
    // First failure in index order, so the reported error does not depend on scheduling.
    results.into_iter().collect()
}

/// Sample mean and unbiased sample variance, summed in slice order.
pub(crate) fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, ss / (n - 1.0))
}

/// Drift as the ensemble mean of `(x_final - x_initial) / t_total`.
pub fn estimate_drift(config: &SimConfig, params: &ReducedParams, w: &WaveSpec) -> Result<DriftEstimate> {
    let disp = ensemble_displacements(config, params, w)?;
    let t = config.n_steps() as f64 * config.dt;
    let v: Vec<f64> = disp.iter().map(|d| d / t).collect();
    let (mean, var) = mean_var(&v);
    Ok(DriftEstimate {
        mean,
        stderr: (var / v.len() as f64).sqrt(),
        n_traj: config.n_traj,
        total_steps: config.total_steps(),
    })
}

/// `Var[x_final] / t_total` over the ensemble, with the Gaussian standard
/// error `rate sqrt(2 / (n - 1))`.
pub fn estimate_variance_rate(
    config: &SimConfig,
    params: &ReducedParams,
    w: &WaveSpec,
) -> Result<VarianceEstimate> {
    let disp = ensemble_displacements(config, params, w)?;
    let t = config.n_steps() as f64 * config.dt;
    let (_, var) = mean_var(&disp);
    let rate = var / t;
    let stderr = if disp.len() < 2 {
        f64::INFINITY
    } else {
        rate * (2.0 / (disp.len() as f64 - 1.0)).sqrt()
    };
    Ok(VarianceEstimate {
        rate,
        stderr,
        n_traj: config.n_traj,
        total_steps: config.total_steps(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ou_transition, PhasePolicy};

    fn state(x: f64, u: f64) -> ParticleState {
        ParticleState {
            x,
            u,
            t: 0.0,
            phi: 0.0,
        }
    }

    #[test]
    fn deterministic_relaxation_steps() {
        let p = ReducedParams::unit(0.0);
        let w = WaveSpec::unit();
        for s in [
            step_inertia(&state(0.3, 1.0), 1e-3, &p, &w, 0.0).unwrap(),
            step_eddy(&state(0.3, 1.0), 1e-3, &p, &w, 0.0).unwrap(),
        ] {
            assert!((s.u - 0.999).abs() < 1e-15);
            assert!((s.x - 0.301).abs() < 1e-15);
            assert!((s.t - 1e-3).abs() < 1e-18);
        }
    }

    #[test]
    fn inertia_fixed_point_of_relaxation() {
        let p = ReducedParams::unit(0.2);
        let w = WaveSpec::unit();
        let s0 = ParticleState {
            x: 0.7,
            u: 0.0,
            t: 0.4,
            phi: 1.1,
        };
        let u_star = 0.2 * wave_velocity(&w, s0.x, s0.t, s0.phi);
        let s = step_inertia(&ParticleState { u: u_star, ..s0 }, 1e-3, &p, &w, 0.0).unwrap();
        assert!((s.u - u_star).abs() < 1e-16);
    }

    #[test]
    fn eddy_pure_advection() {
        let p = ReducedParams::unit(0.2);
        // f = 1 everywhere: k = omega = 0.
        let w = WaveSpec::new(1.0, 0.0, 0.0).unwrap();
        let s = step_eddy(&state(0.0, 0.0), 1e-3, &p, &w, 0.0).unwrap();
        assert!((s.x - 0.0002).abs() < 1e-18);
    }

    #[test]
    fn step_rejects_bad_dt_and_divergence() {
        let p = ReducedParams::unit(0.2);
        let w = WaveSpec::unit();
        assert!(matches!(
            step_inertia(&state(0.0, 0.0), 0.0, &p, &w, 0.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            step_eddy(&state(0.0, f64::MAX), 1e-3, &p, &w, f64::MAX),
            Err(Error::Divergence { .. })
        ));
    }

    #[test]
    fn diverging_trajectory_is_reported() {
        // lambda dt = 3 makes the Euler velocity update unstable.
        let p = ReducedParams::new(3000.0, 1.0, 0.0).unwrap();
        let mut c = SimConfig::new(Model::Eddy);
        c.t_total = 10.0;
        c.n_traj = 4;
        let err = estimate_drift(&c, &p, &WaveSpec::unit()).unwrap_err();
        assert!(matches!(err, Error::Divergence { trajectory: 0, .. }), "{err:?}");
    }

    #[test]
    fn exact_splitting_step_has_transition_law() {
        let p = ReducedParams::new(2.0, 1.5, 0.0).unwrap();
        let w = WaveSpec::unit();
        let mut c = SimConfig::new(Model::Eddy);
        c.scheme = Scheme::ExactOuSplitting;
        c.dt = 0.3;
        let law = ou_transition(0.8, 0.3, &p).unwrap();
        let (z_lo, z_hi) = (-1.3, 0.4);
        let lo = step(&c, &state(0.0, 0.8), &p, &w, z_lo).unwrap();
        let hi = step(&c, &state(0.0, 0.8), &p, &w, z_hi).unwrap();
        // Affine in the normal draw with the exact mean and standard deviation.
        let sd = (hi.u - lo.u) / (z_hi - z_lo);
        let mean = lo.u - sd * z_lo;
        assert!((mean - law.mean).abs() < 1e-14);
        assert!((sd * sd - law.variance).abs() < 1e-14);
    }

    #[test]
    fn streams_are_reproducible_and_uncorrelated() {
        let draw = |idx| {
            let mut r = rng_stream(42, idx);
            (0..10_000).map(|_| r.sample::<f64, _>(StandardNormal)).collect::<Vec<_>>()
        };
        let a = draw(0);
        assert_eq!(a, draw(0));
        let b = draw(1);
        let (ma, va) = mean_var(&a);
        let (mb, vb) = mean_var(&b);
        let cov: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / 9_999.0;
        let r = cov / (va * vb).sqrt();
        assert!(r.abs() < 0.05, "r = {r}");
    }

    #[test]
    fn single_step_trajectory_matches_step_function() {
        let p = ReducedParams::unit(0.3);
        let w = WaveSpec::unit();
        for model in [Model::Inertia, Model::Eddy] {
            let mut c = SimConfig::new(model);
            c.dt = 0.01;
            c.t_total = 0.1;
            c.n_traj = 1;
            let out = simulate_trajectory(&c, &p, &w, 5).unwrap();
            let mut rng = rng_stream(c.master_seed, 5);
            let _u0 = ou_stationary_sample(&p, &mut rng);
            let _phi = w.draw_phase(&mut rng);
            let mut s = out.initial;
            for _ in 0..10 {
                let z: f64 = rng.sample(StandardNormal);
                s = step(&c, &s, &p, &w, z).unwrap();
            }
            assert!((s.x - out.x_final).abs() < 1e-14);
            assert!((s.u - out.last.u).abs() < 1e-14);
        }
    }

    #[test]
    fn fixed_phase_is_honoured() {
        let p = ReducedParams::unit(0.3);
        let w = WaveSpec::unit().with_phase(PhasePolicy::Fixed(1.25));
        let mut c = SimConfig::new(Model::Eddy);
        c.t_total = 1.0;
        let out = simulate_trajectory(&c, &p, &w, 0).unwrap();
        assert_eq!(out.initial.phi, 1.25);
    }

    #[test]
    fn euler_velocity_variance_is_stationary() {
        // Euler's stationary variance is lambda sigma^2 / (2 - lambda dt).
        let p = ReducedParams::unit(0.0);
        let mut c = SimConfig::new(Model::Inertia);
        c.t_total = 200.0;
        c.n_traj = 16;
        let mut all = Vec::new();
        for i in 0..c.n_traj {
            let out = simulate_trajectory_sampled(&c, &p, &WaveSpec::unit(), i, Some(2000)).unwrap();
            all.extend(out.u_samples.unwrap());
        }
        let (_, var) = mean_var(&all);
        // ~1600 samples, correlated over ~1 time unit at spacing 2.
        let se = 0.5 * (2.0 / all.len() as f64).sqrt() * 1.5;
        assert!((var - 0.5).abs() < 3.0 * se, "var {var}");
    }

    #[test]
    fn free_diffusion_statistics() {
        let p = ReducedParams::unit(0.0);
        let w = WaveSpec::unit();
        for model in [Model::Inertia, Model::Eddy] {
            let mut c = SimConfig::new(model);
            c.t_total = 50.0;
            c.n_traj = 400;
            c.dt = 2e-3;
            let d = estimate_drift(&c, &p, &w).unwrap();
            assert!(d.mean.abs() < 3.0 * d.stderr);
            assert_eq!(d.total_steps, 400 * 25_000);
            let v = estimate_variance_rate(&c, &p, &w).unwrap();
            // Finite-horizon mean: C(T)/T = 1 - (1 - e^{-T})/T.
            let expected = 1.0 - 1.0 / 50.0;
            assert!((v.rate - expected).abs() < 3.0 * v.stderr, "{model}: {}", v.rate);
        }
    }

    #[test]
    fn estimate_is_independent_of_pool_size() {
        let p = ReducedParams::unit(0.3);
        let w = WaveSpec::unit();
        let mut c = SimConfig::new(Model::Eddy);
        c.t_total = 5.0;
        c.n_traj = 24;
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| estimate_drift(&c, &p, &w).unwrap())
        };
        let a = run(1);
        assert_eq!(a, run(3));
        assert_eq!(a, run(1));
    }
}
