//! Domain types shared by the asymptotic and Monte Carlo layers, plus the
//! exact laws of the unforced Ornstein-Uhlenbeck velocity.

use std::f64::consts::TAU;
use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{ensure, Error, Result};

/// Below this value of `lambda |t|` the displacement covariance switches to
/// its Taylor series; the closed form subtracts nearly equal numbers there.
pub const COV_SERIES_THRESHOLD: f64 = 1e-4;

/// Which of the two stochastic forcings drives the particle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    /// Inertial particle: velocity relaxes to the wave velocity at rate lambda.
    Inertia,
    /// Massless particle advected by an Ornstein-Uhlenbeck "eddy" velocity.
    Eddy,
}

impl Model {
    pub fn as_str(self) -> &'static str {
        match self {
            Model::Inertia => "inertia",
            Model::Eddy => "eddy",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inertia" => Ok(Model::Inertia),
            "eddy" => Ok(Model::Eddy),
            other => Err(Error::InvalidArgument(format!("unknown model '{other}'"))),
        }
    }
}

/// How a trajectory picks the phase of a wave.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum PhasePolicy {
    /// Fresh uniform phase on `[0, 2pi)` for every trajectory.
    #[default]
    Uniform,
    Fixed(f64),
}

impl fmt::Display for PhasePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhasePolicy::Uniform => f.write_str("uniform"),
            PhasePolicy::Fixed(phi) => write!(f, "{phi}"),
        }
    }
}

/// One travelling wave `u cos(k x - omega t + phi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveSpec {
    pub u: f64,
    pub k: f64,
    pub omega: f64,
    pub phase: PhasePolicy,
}

impl WaveSpec {
    pub fn new(u: f64, k: f64, omega: f64) -> Result<Self> {
        let w = WaveSpec {
            u,
            k,
            omega,
            phase: PhasePolicy::Uniform,
        };
        w.validate()?;
        Ok(w)
    }

    /// The unit wave `u = k = omega = 1`.
    pub fn unit() -> Self {
        WaveSpec {
            u: 1.0,
            k: 1.0,
            omega: 1.0,
            phase: PhasePolicy::Uniform,
        }
    }

    pub fn with_phase(mut self, phase: PhasePolicy) -> Self {
        self.phase = phase;
        self
    }

    /// `k == 0` is accepted: the drift of such a wave is identically zero.
    pub fn validate(&self) -> Result<()> {
        ensure(self.u.is_finite() && self.u >= 0.0, || {
            format!("wave amplitude u must be finite and >= 0, got {}", self.u)
        })?;
        ensure(self.k.is_finite() && self.k >= 0.0, || {
            format!("wavenumber k must be finite and >= 0, got {}", self.k)
        })?;
        ensure(self.omega.is_finite(), || {
            format!("angular frequency must be finite, got {}", self.omega)
        })?;
        if let PhasePolicy::Fixed(phi) = self.phase {
            ensure((0.0..TAU).contains(&phi), || {
                format!("fixed phase must lie in [0, 2pi), got {phi}")
            })?;
        }
        Ok(())
    }

    /// Phase for one trajectory, drawing from `rng` only under the uniform policy.
    pub fn draw_phase<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.phase {
            PhasePolicy::Uniform => rng.random::<f64>() * TAU,
            PhasePolicy::Fixed(phi) => phi,
        }
    }
}

/// Dimensionless model parameters shared by both models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedParams {
    /// Velocity relaxation rate (inertia) or inverse correlation time (eddy).
    pub lambda: f64,
    /// Noise amplitude; the long-time diffusivity is `sigma^2 / 2`.
    pub sigma: f64,
    /// Wave coupling strength.
    pub epsilon: f64,
}

impl ReducedParams {
    pub fn new(lambda: f64, sigma: f64, epsilon: f64) -> Result<Self> {
        let p = ReducedParams {
            lambda,
            sigma,
            epsilon,
        };
        p.validate()?;
        Ok(p)
    }

    /// `lambda = sigma = 1` with the given coupling.
    pub fn unit(epsilon: f64) -> Self {
        ReducedParams {
            lambda: 1.0,
            sigma: 1.0,
            epsilon,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    /// Negative `epsilon` is tolerated: it is a half-period phase shift of
    /// the wave and every leading-order quantity depends on `epsilon^2`.
    pub fn validate(&self) -> Result<()> {
        ensure(self.lambda.is_finite() && self.lambda > 0.0, || {
            format!("lambda must be finite and > 0, got {}", self.lambda)
        })?;
        ensure(self.sigma.is_finite() && self.sigma > 0.0, || {
            format!("sigma must be finite and > 0, got {}", self.sigma)
        })?;
        ensure(self.epsilon.is_finite(), || {
            format!("epsilon must be finite, got {}", self.epsilon)
        })
    }

    /// Stationary variance of the unforced velocity, `lambda sigma^2 / 2`.
    pub fn stationary_variance(&self) -> f64 {
        0.5 * self.lambda * self.sigma * self.sigma
    }
}

/// Physical inputs of the inertia model in one consistent unit system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub mass: f64,
    pub mobility: f64,
    pub boltzmann: f64,
    pub temperature: f64,
}

/// Maps mass, mobility and temperature onto `(lambda, sigma)`:
/// `lambda = 1 / (b m)` and `sigma = sqrt(2 b K T)`.
pub fn to_reduced(p: &PhysicalParams) -> Result<(f64, f64)> {
    for (name, v) in [
        ("mass", p.mass),
        ("mobility", p.mobility),
        ("boltzmann", p.boltzmann),
        ("temperature", p.temperature),
    ] {
        ensure(v.is_finite() && v > 0.0, || {
            format!("{name} must be finite and > 0, got {v}")
        })?;
    }
    let lambda = 1.0 / (p.mobility * p.mass);
    let sigma = (2.0 * p.mobility * p.boltzmann * p.temperature).sqrt();
    Ok((lambda, sigma))
}

#[inline]
pub fn wave_velocity(w: &WaveSpec, x: f64, t: f64, phi: f64) -> f64 {
    w.u * (w.k * x - w.omega * t + phi).cos()
}

/// Mean-square displacement `C(t)` of the unforced particle over lag `t`:
/// `sigma^2 (|t| + (exp(-lambda |t|) - 1) / lambda)`.
pub fn cov_displacement(params: &ReducedParams, t: f64) -> f64 {
    let lambda = params.lambda;
    let s2 = params.sigma * params.sigma;
    let x = lambda * t.abs();
    if x < COV_SERIES_THRESHOLD {
        // sigma^2 / lambda * (x^2/2 - x^3/6 + x^4/24)
        s2 / lambda * x * x * (0.5 - x * (1.0 / 6.0 - x / 24.0))
    } else {
        s2 * (t.abs() + (-x).exp_m1() / lambda)
    }
}

/// Gaussian law of the unforced velocity after a time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuMoments {
    pub mean: f64,
    pub variance: f64,
}

impl OuMoments {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.mean + self.variance.sqrt() * z
    }
}

/// Exact transition law of `dU = -lambda U dt + lambda sigma dB` over `dt`.
pub fn ou_transition(u0: f64, dt: f64, params: &ReducedParams) -> Result<OuMoments> {
    if !(dt >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "time step must be >= 0, got {dt}"
        )));
    }
    let decay = (-params.lambda * dt).exp();
    let variance = if dt.is_infinite() {
        params.stationary_variance()
    } else {
        -params.stationary_variance() * (-2.0 * params.lambda * dt).exp_m1()
    };
    Ok(OuMoments {
        mean: u0 * decay,
        variance,
    })
}

/// Draw from the stationary law `N(0, lambda sigma^2 / 2)`.
pub fn ou_stationary_sample<R: Rng + ?Sized>(params: &ReducedParams, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    params.stationary_variance().sqrt() * z
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, LN_2, SQRT_2};

    fn phys(mass: f64, mobility: f64, boltzmann: f64, temperature: f64) -> PhysicalParams {
        PhysicalParams {
            mass,
            mobility,
            boltzmann,
            temperature,
        }
    }

    #[test]
    fn reduced_from_physical() {
        let (l, s) = to_reduced(&phys(1.0, 1.0, 1.0, 1.0)).unwrap();
        assert_eq!(l, 1.0);
        assert!((s - SQRT_2).abs() < 1e-15);
        assert_eq!(to_reduced(&phys(2.0, 0.5, 1.0, 1.0)).unwrap(), (1.0, 1.0));
        assert_eq!(to_reduced(&phys(1.0, 1.0, 1.0, 0.5)).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn reduced_rejects_non_positive() {
        assert!(matches!(
            to_reduced(&phys(0.0, 1.0, 1.0, 1.0)),
            Err(Error::InvalidParameter(_))
        ));
        assert!(to_reduced(&phys(1.0, -1.0, 1.0, 1.0)).is_err());
        assert!(to_reduced(&phys(1.0, 1.0, 1.0, f64::NAN)).is_err());
    }

    #[test]
    fn wave_velocity_values() {
        let w = WaveSpec::unit();
        assert_eq!(wave_velocity(&w, 0.0, 0.0, 0.0), 1.0);
        assert!(wave_velocity(&w, 0.0, 0.0, FRAC_PI_2).abs() < 1e-16);
        let w = WaveSpec::new(2.0, 3.0, 1.0).unwrap();
        // 2 cos(3*1 - 1*2) = 2 cos(1)
        let expected = 2.0 * 1.0f64.cos();
        assert!((wave_velocity(&w, 1.0, 2.0, 0.0) - expected).abs() < 1e-15);
    }

    #[test]
    fn wave_validation() {
        assert!(WaveSpec::new(-1.0, 1.0, 1.0).is_err());
        assert!(WaveSpec::new(1.0, 0.0, -3.0).is_ok());
        assert!(WaveSpec::unit()
            .with_phase(PhasePolicy::Fixed(TAU))
            .validate()
            .is_err());
        assert!(ReducedParams::new(0.0, 1.0, 0.1).is_err());
        assert!(ReducedParams::new(1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn cov_displacement_examples() {
        let p = ReducedParams::unit(0.0);
        assert_eq!(cov_displacement(&p, 0.0), 0.0);
        assert!((cov_displacement(&p, 1.0) - (-1.0f64).exp()).abs() < 1e-15);
        let t = 1e-6;
        let series = 0.5 * t * t * (1.0 - t / 3.0);
        let c = cov_displacement(&p, t);
        assert!(((c - series) / series).abs() < 1e-6);
    }

    #[test]
    fn cov_series_matches_closed_form_across_switch() {
        for &lambda in &[0.3, 1.0, 7.0, 1e8] {
            let p = ReducedParams::unit(0.0).with_lambda(lambda);
            let t_switch = COV_SERIES_THRESHOLD / lambda;
            for f in [0.5, 0.9, 0.999, 1.001, 1.1, 2.0] {
                let t = f * t_switch;
                let x = lambda * t;
                // closed form in extended form: x + expm1(-x) computed via a
                // long Taylor sum, an independent route from both branches.
                let mut sum = 0.0;
                let mut term = -x * x / 2.0;
                for n in 2..30 {
                    sum -= term;
                    term *= -x / (n as f64 + 1.0);
                }
                let exact = sum / lambda;
                let c = cov_displacement(&p, t);
                assert!(((c - exact) / exact).abs() < 1e-6, "lambda {lambda} t {t}");
            }
        }
    }

    #[test]
    fn cov_second_derivative_at_origin() {
        for &(lambda, sigma) in &[(1.0, 1.0), (4.0, 0.5), (0.2, 2.0)] {
            let p = ReducedParams::new(lambda, sigma, 0.0).unwrap();
            let h = 1e-6 / lambda;
            // C is even with C(0) = 0.
            let d2 = 2.0 * cov_displacement(&p, h) / (h * h);
            let expected = lambda * sigma * sigma;
            assert!(((d2 - expected) / expected).abs() < 1e-5);
        }
    }

    #[test]
    fn ou_transition_examples() {
        let p = ReducedParams::unit(0.0);
        let m = ou_transition(0.7, 0.0, &p).unwrap();
        assert_eq!(m, OuMoments { mean: 0.7, variance: 0.0 });
        let m = ou_transition(3.0, f64::INFINITY, &p).unwrap();
        assert_eq!(m.mean, 0.0);
        assert_eq!(m.variance, 0.5);
        let m = ou_transition(1.0, LN_2, &p).unwrap();
        assert!((m.mean - 0.5).abs() < 1e-15);
        assert!((m.variance - 0.375).abs() < 1e-15);
        assert!(matches!(
            ou_transition(1.0, -1e-3, &p),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn stationary_sampling_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &(lambda, var) in &[(1.0, 0.5), (4.0, 2.0)] {
            let p = ReducedParams::unit(0.0).with_lambda(lambda);
            let n = 1_000_000;
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                let v = ou_stationary_sample(&p, &mut rng);
                s += v;
                s2 += v * v;
            }
            let mean = s / n as f64;
            let var_hat = s2 / n as f64 - mean * mean;
            assert!(mean.abs() < 3.0 * (var / n as f64).sqrt());
            // Var of the sample variance of a Gaussian is 2 var^2 / n.
            let se = var * (2.0 / n as f64).sqrt();
            assert!((var_hat - var).abs() < 3.0 * se, "{var_hat} vs {var}");
        }
    }

    proptest! {
        #[test]
        fn cov_is_even_nonnegative_monotone(
            lambda in 1e-3f64..1e3, sigma in 0.1f64..10.0,
            t in 0.0f64..1e3, dt in 0.0f64..10.0,
        ) {
            let p = ReducedParams::new(lambda, sigma, 0.0).unwrap();
            let c = cov_displacement(&p, t);
            prop_assert!(c >= 0.0);
            prop_assert_eq!(c, cov_displacement(&p, -t));
            prop_assert!(cov_displacement(&p, t + dt) >= c);
        }

        #[test]
        fn cov_approaches_linear_asymptote(lambda in 0.05f64..50.0, sigma in 0.1f64..3.0) {
            let p = ReducedParams::new(lambda, sigma, 0.0).unwrap();
            let t = 60.0 / lambda;
            let asym = sigma * sigma * (t - 1.0 / lambda);
            prop_assert!((cov_displacement(&p, t) - asym).abs() <= 1e-12 * asym.max(1.0));
        }

        #[test]
        fn ou_transition_composes(
            lambda in 1e-2f64..1e2, sigma in 0.1f64..5.0, u0 in -5.0f64..5.0,
            dt1 in 1e-4f64..5.0, dt2 in 1e-4f64..5.0,
        ) {
            let p = ReducedParams::new(lambda, sigma, 0.0).unwrap();
            let a = ou_transition(u0, dt1, &p).unwrap();
            let b = ou_transition(a.mean, dt2, &p).unwrap();
            let decay2 = (-lambda * dt2).exp();
            let composed_var = a.variance * decay2 * decay2 + b.variance;
            let direct = ou_transition(u0, dt1 + dt2, &p).unwrap();
            let rel = |x: f64, y: f64| (x - y).abs() / y.abs().max(1e-300);
            prop_assert!(rel(b.mean, direct.mean) < 1e-12 || (b.mean - direct.mean).abs() < 1e-300);
            prop_assert!(rel(composed_var, direct.variance) < 1e-12);
        }

        #[test]
        fn long_step_variance_is_stationary(lambda in 1e-2f64..1e2, sigma in 0.1f64..5.0) {
            let p = ReducedParams::new(lambda, sigma, 0.0).unwrap();
            let m = ou_transition(1.0, 800.0 / lambda, &p).unwrap();
            prop_assert!((m.variance - p.stationary_variance()).abs() <= 1e-15 * p.stationary_variance());
        }
    }
}
