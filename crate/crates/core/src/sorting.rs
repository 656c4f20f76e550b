//! Multi-wave fields in the plane and direction-resolved drift.
//!
//! At leading order the drift produced by several waves with distinct
//! spatial or temporal frequencies is the vector sum of the single-wave
//! drifts along each wave's direction. Because the single-wave drift
//! depends on `lambda`, species with equal diffusivity but different mass
//! (inertia model) or correlation time (eddy model) drift in different
//! directions.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::asymptotics::drift;
use crate::error::{ensure, Error, Result};
use crate::mc::{mean_var, rng_stream, SimConfig, StepCoefficients};
use crate::model::{ou_stationary_sample, Model, ReducedParams, WaveSpec};
use crate::quadrature::QuadratureSettings;

pub type Vec2 = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectedWave {
    /// Unit propagation direction.
    pub direction: Vec2,
    pub spec: WaveSpec,
}

impl DirectedWave {
    /// Wave travelling at `angle` radians from the x axis.
    pub fn at_angle(angle: f64, spec: WaveSpec) -> Self {
        DirectedWave {
            direction: [angle.cos(), angle.sin()],
            spec,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct WaveField2D {
    pub waves: Vec<DirectedWave>,
}

impl WaveField2D {
    pub fn new(waves: Vec<DirectedWave>) -> Result<Self> {
        let f = WaveField2D { waves };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, w) in self.waves.iter().enumerate() {
            w.spec.validate()?;
            let norm = w.direction[0].hypot(w.direction[1]);
            ensure((norm - 1.0).abs() <= 1e-12, || {
                format!("wave {i} direction has norm {norm}, expected 1")
            })?;
        }
        for (i, a) in self.waves.iter().enumerate() {
            for (j, b) in self.waves.iter().enumerate().skip(i + 1) {
                let same_k = (0..2).all(|c| a.spec.k * a.direction[c] == b.spec.k * b.direction[c]);
                ensure(!(same_k && a.spec.omega == b.spec.omega), || {
                    format!("waves {i} and {j} share both wavevector and frequency")
                })?;
            }
        }
        Ok(())
    }

    /// Every direction rotated counter-clockwise by `theta`.
    pub fn rotated(&self, theta: f64) -> Self {
        WaveField2D {
            waves: self
                .waves
                .iter()
                .map(|w| DirectedWave {
                    direction: rotate(w.direction, theta),
                    spec: w.spec,
                })
                .collect(),
        }
    }
}

pub fn rotate(v: Vec2, theta: f64) -> Vec2 {
    let (s, c) = theta.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1]]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesSpec {
    pub label: String,
    pub params: ReducedParams,
    pub model: Model,
}

/// Leading-order drift vector: sum of single-wave drifts times directions.
pub fn predicted_drift_vector(
    species: &SpeciesSpec,
    field: &WaveField2D,
    settings: &QuadratureSettings,
) -> Result<Vec2> {
    field.validate()?;
    let mut v = [0.0, 0.0];
    for w in &field.waves {
        let d = drift(species.model, &species.params, &w.spec, settings)?.value;
        v[0] += d * w.direction[0];
        v[1] += d * w.direction[1];
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SortingEstimate {
    pub label: String,
    pub drift: Vec2,
    pub stderr: Vec2,
    pub n_traj: u64,
    pub total_steps: u64,
}

/// Stream id of trajectory `traj` of species `species`; species get
/// disjoint stream ranges so their estimates are independent.
fn species_stream(species: usize, traj: u64) -> u64 {
    ((species as u64) << 40) | traj
}

fn simulate_2d(
    species_index: usize,
    species: &SpeciesSpec,
    field: &WaveField2D,
    config: &SimConfig,
    traj: u64,
) -> Result<Vec2> {
    let params = &species.params;
    let mut rng = rng_stream(config.master_seed, species_stream(species_index, traj));
    let mut u = [
        ou_stationary_sample(params, &mut rng),
        ou_stationary_sample(params, &mut rng),
    ];
    let phases: Vec<f64> = field.waves.iter().map(|w| w.spec.draw_phase(&mut rng)).collect();
    let coeffs = StepCoefficients::new(species.model, config.scheme, params, config.dt);
    let eps = params.epsilon;
    let dt = config.dt;
    let n = config.n_steps();
    let mut x = [0.0f64; 2];
    for i in 0..n {
        let t = i as f64 * dt;
        let mut f = [0.0f64; 2];
        for (w, phi) in field.waves.iter().zip(&phases) {
            let s = &w.spec;
            let along = w.direction[0] * x[0] + w.direction[1] * x[1];
            let amp = eps * s.u * (s.k * along - s.omega * t + phi).cos();
            f[0] += amp * w.direction[0];
            f[1] += amp * w.direction[1];
        }
        for c in 0..2 {
            let z: f64 = rng.sample(StandardNormal);
            (x[c], u[c]) = coeffs.apply(x[c], u[c], f[c], dt, z);
        }
        if !(x[0].is_finite() && x[1].is_finite() && u[0].is_finite() && u[1].is_finite()) {
            return Err(Error::Divergence {
                trajectory: traj,
                step: i + 1,
            });
        }
    }
    Ok(x)
}

/// Ensemble drift vector of each species in the planar field. The model of
/// each species overrides `config.model`.
pub fn simulate_sorting(
    species_list: &[SpeciesSpec],
    field: &WaveField2D,
    config: &SimConfig,
) -> Result<Vec<SortingEstimate>> {
    config.validate()?;
    field.validate()?;
    let t = config.n_steps() as f64 * config.dt;
    let mut out = Vec::with_capacity(species_list.len());
    for (si, sp) in species_list.iter().enumerate() {
        sp.params.validate()?;
        let runs: Vec<Result<Vec2>> = (0..config.n_traj)
            .into_par_iter()
            .map(|i| simulate_2d(si, sp, field, config, i))
            .collect();
        let ends = runs.into_iter().collect::<Result<Vec<Vec2>>>()?;
        let mut drift = [0.0; 2];
        let mut stderr = [0.0; 2];
        for c in 0..2 {
            let v: Vec<f64> = ends.iter().map(|e| e[c] / t).collect();
            let (m, var) = mean_var(&v);
            drift[c] = m;
            stderr[c] = (var / v.len() as f64).sqrt();
        }
        out.push(SortingEstimate {
            label: sp.label.clone(),
            drift,
            stderr,
            n_traj: config.n_traj,
            total_steps: config.total_steps(),
        });
    }
    Ok(out)
}

/// Unsigned angle between two drift directions, in `[0, pi]`.
pub fn fanout_angle(v1: Vec2, v2: Vec2) -> Result<f64> {
    if v1 == [0.0, 0.0] || v2 == [0.0, 0.0] {
        return Err(Error::UndefinedDirection);
    }
    let dot = v1[0] * v2[0] + v1[1] * v2[1];
    let cross = v1[0] * v2[1] - v1[1] * v2[0];
    Ok(cross.abs().atan2(dot))
}

/// Standard error of a vector's polar angle, from independent component errors.
pub fn direction_stderr(v: Vec2, se: Vec2) -> f64 {
    let r2 = v[0] * v[0] + v[1] * v[1];
    ((v[1] * se[0]).powi(2) + (v[0] * se[1]).powi(2)).sqrt() / r2
}

/// Propagated standard error of [`fanout_angle`] for independent estimates.
pub fn fanout_angle_stderr(v1: Vec2, se1: Vec2, v2: Vec2, se2: Vec2) -> f64 {
    direction_stderr(v1, se1).hypot(direction_stderr(v2, se2))
}

/// Two waves along +-45 degrees and two inertial species with `sigma = 1`
/// and `lambda` 0.5 (heavy) and 5 (light). The low-frequency wave drives
/// both species alike; only the light species follows the fast one.
pub fn demo_field() -> WaveField2D {
    use std::f64::consts::FRAC_PI_4;
    let slow = WaveSpec::new(2.25, 0.5, 0.5).expect("valid wave");
    let fast = WaveSpec::new(6.75, 1.0, 3.0).expect("valid wave");
    WaveField2D::new(vec![
        DirectedWave::at_angle(FRAC_PI_4, slow),
        DirectedWave::at_angle(-FRAC_PI_4, fast),
    ])
    .expect("valid field")
}

pub fn demo_species(epsilon: f64) -> Vec<SpeciesSpec> {
    [("heavy", 0.5), ("light", 5.0)]
        .into_iter()
        .map(|(label, lambda)| SpeciesSpec {
            label: label.into(),
            params: ReducedParams {
                lambda,
                sigma: 1.0,
                epsilon,
            },
            model: Model::Inertia,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn species(lambda: f64, model: Model) -> SpeciesSpec {
        SpeciesSpec {
            label: "s".into(),
            params: ReducedParams::unit(0.2).with_lambda(lambda),
            model,
        }
    }

    #[test]
    fn fanout_angle_examples() {
        assert!((fanout_angle([1.0, 0.0], [0.0, 1.0]).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert!(fanout_angle([1.0, 1.0], [2.0, 2.0]).unwrap().abs() < 1e-15);
        assert!((fanout_angle([1.0, 0.0], [-1.0, 0.0]).unwrap() - PI).abs() < 1e-15);
        assert_eq!(fanout_angle([0.0, 0.0], [1.0, 0.0]), Err(Error::UndefinedDirection));
    }

    #[test]
    fn field_validation() {
        let w = WaveSpec::unit();
        assert!(WaveField2D::new(vec![DirectedWave {
            direction: [1.0, 0.1],
            spec: w
        }])
        .is_err());
        let dup = DirectedWave::at_angle(0.0, w);
        assert!(WaveField2D::new(vec![dup, dup]).is_err());
        // Same wavevector, different frequency is fine.
        let other = DirectedWave::at_angle(0.0, WaveSpec { omega: 2.0, ..w });
        assert!(WaveField2D::new(vec![dup, other]).is_ok());
    }

    #[test]
    fn single_and_symmetric_fields() {
        let s = QuadratureSettings::default();
        let sp = species(1.0, Model::Eddy);
        let scalar = drift(Model::Eddy, &sp.params, &WaveSpec::unit(), &s).unwrap().value;
        let one = WaveField2D::new(vec![DirectedWave::at_angle(0.0, WaveSpec::unit())]).unwrap();
        let v = predicted_drift_vector(&sp, &one, &s).unwrap();
        assert_eq!(v, [scalar, 0.0]);

        let two = WaveField2D::new(vec![
            DirectedWave::at_angle(0.0, WaveSpec::unit()),
            DirectedWave::at_angle(FRAC_PI_2, WaveSpec::unit()),
        ])
        .unwrap();
        let v = predicted_drift_vector(&sp, &two, &s).unwrap();
        assert!((v[0] - scalar).abs() < 1e-15 && (v[1] - scalar).abs() < 1e-15);
        assert!((v[1].atan2(v[0]) - FRAC_PI_4).abs() < 1e-14);
    }

    #[test]
    fn prediction_is_rotation_equivariant() {
        let s = QuadratureSettings::default();
        let field = demo_field();
        for sp in demo_species(0.1) {
            let v = predicted_drift_vector(&sp, &field, &s).unwrap();
            for theta in [0.3, 1.7, -2.2] {
                let r = predicted_drift_vector(&sp, &field.rotated(theta), &s).unwrap();
                let expect = rotate(v, theta);
                assert!((r[0] - expect[0]).abs() < 1e-14 && (r[1] - expect[1]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn demo_species_fan_out() {
        let s = QuadratureSettings::default();
        let field = demo_field();
        let sp = demo_species(0.1);
        let a = predicted_drift_vector(&sp[0], &field, &s).unwrap();
        let b = predicted_drift_vector(&sp[1], &field, &s).unwrap();
        assert!(fanout_angle(a, b).unwrap() > 0.5);
    }

    #[test]
    fn direction_stderr_matches_finite_differences() {
        let v = [0.03, -0.01];
        let se = [0.002, 0.003];
        let h = 1e-7;
        let angle = |v: Vec2| v[1].atan2(v[0]);
        let dx = (angle([v[0] + h, v[1]]) - angle([v[0] - h, v[1]])) / (2.0 * h);
        let dy = (angle([v[0], v[1] + h]) - angle([v[0], v[1] - h])) / (2.0 * h);
        let fd = ((dx * se[0]).powi(2) + (dy * se[1]).powi(2)).sqrt();
        assert!((direction_stderr(v, se) - fd).abs() < 1e-6 * fd);
    }

    #[test]
    fn zero_coupling_gives_no_drift() {
        let mut c = SimConfig::new(Model::Inertia);
        c.t_total = 20.0;
        c.n_traj = 64;
        let sp = demo_species(0.0);
        for e in simulate_sorting(&sp, &demo_field(), &c).unwrap() {
            for k in 0..2 {
                assert!(e.drift[k].abs() < 3.0 * e.stderr[k]);
            }
        }
    }
}
