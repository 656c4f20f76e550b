//! Leading-order (`eps^2`) drift velocity and long-time variance rate.
//!
//! All drift integrals have the form
//! `V = eps^2 u^2 k / 2 * int_0^inf w(s) exp(-k^2 C(s) / 2) sin(omega s) ds`
//! with `C` the unforced mean-square displacement. For the eddy model
//! `w = 1`; for the inertia model the double integral over the relaxation
//! lag collapses (substituting `s = alpha + beta`) to `w(s) = 1 - exp(-lambda s)`.
//! [`drift_inertia_2d`] keeps the uncollapsed double integral as a check on
//! that reduction.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{cov_displacement, Model, ReducedParams, WaveSpec};
use crate::quadrature::{
    base_panel_width, gauss_rule, quad_osc_decay, Envelope, Kernel, QuadratureSettings,
};

/// Which formula produced a [`DriftValue`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriftModel {
    Inertia,
    Eddy,
    /// The `lambda -> inf` (white-noise) limit shared by both models.
    Classical,
}

impl From<Model> for DriftModel {
    fn from(m: Model) -> Self {
        match m {
            Model::Inertia => DriftModel::Inertia,
            Model::Eddy => DriftModel::Eddy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftValue {
    pub value: f64,
    pub model: DriftModel,
    pub params: ReducedParams,
    pub wave: WaveSpec,
    /// Quadrature error estimate, zero for closed forms.
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceRate {
    pub value: f64,
    pub error: f64,
}

/// `exp(-k^2 C(t) / 2)`, optionally multiplied by the inertial filter
/// `1 - exp(-lambda t)`.
#[derive(Debug, Clone, Copy)]
pub struct DisplacementKernel {
    pub params: ReducedParams,
    pub k: f64,
    pub inertial: bool,
}

impl DisplacementKernel {
    fn decay_rate(&self) -> f64 {
        0.5 * self.k * self.k * self.params.sigma * self.params.sigma
    }
}

impl Envelope for DisplacementKernel {
    fn value(&self, t: f64) -> f64 {
        let g = (-0.5 * self.k * self.k * cov_displacement(&self.params, t)).exp();
        if self.inertial {
            -(-self.params.lambda * t).exp_m1() * g
        } else {
            g
        }
    }

    // C(t) >= sigma^2 (t - 1/lambda), so the exponent passes `cutoff` here.
    fn horizon(&self, cutoff: f64) -> f64 {
        cutoff / self.decay_rate() + 1.0 / self.params.lambda
    }

    fn efold_time(&self) -> f64 {
        1.0 / self.decay_rate()
    }
}

fn check_inputs(params: &ReducedParams, w: &WaveSpec, settings: &QuadratureSettings) -> Result<()> {
    params.validate()?;
    w.validate()?;
    settings.validate()
}

fn prefactor(params: &ReducedParams, w: &WaveSpec) -> f64 {
    0.5 * params.epsilon * params.epsilon * w.u * w.u * w.k
}

fn kernel_drift(
    model: DriftModel,
    params: &ReducedParams,
    w: &WaveSpec,
    settings: &QuadratureSettings,
) -> Result<DriftValue> {
    check_inputs(params, w, settings)?;
    let pre = prefactor(params, w);
    let mut out = DriftValue {
        value: 0.0,
        model,
        params: *params,
        wave: *w,
        error: 0.0,
    };
    if pre == 0.0 || w.omega == 0.0 {
        return Ok(out);
    }
    let kernel = DisplacementKernel {
        params: *params,
        k: w.k,
        inertial: model == DriftModel::Inertia,
    };
    let q = quad_osc_decay(&kernel, w.omega, Kernel::Sin, settings).map_err(|e| scale_err(e, pre))?;
    out.value = pre * q.value;
    out.error = pre * q.error;
    Ok(out)
}

fn scale_err(e: Error, factor: f64) -> Error {
    match e {
        Error::Accuracy { best, error, panels } => Error::Accuracy {
            best: best * factor,
            error: error * factor.abs(),
            panels,
        },
        other => other,
    }
}

/// Leading-order drift of the eddy (Ornstein-Uhlenbeck forced) model.
pub fn drift_eddy(params: &ReducedParams, w: &WaveSpec, settings: &QuadratureSettings) -> Result<DriftValue> {
    kernel_drift(DriftModel::Eddy, params, w, settings)
}

/// Leading-order drift of the inertia model via the single-integral reduction.
pub fn drift_inertia(
    params: &ReducedParams,
    w: &WaveSpec,
    settings: &QuadratureSettings,
) -> Result<DriftValue> {
    kernel_drift(DriftModel::Inertia, params, w, settings)
}

pub fn drift(
    model: Model,
    params: &ReducedParams,
    w: &WaveSpec,
    settings: &QuadratureSettings,
) -> Result<DriftValue> {
    match model {
        Model::Inertia => drift_inertia(params, w, settings),
        Model::Eddy => drift_eddy(params, w, settings),
    }
}

/// Inertia-model drift from the double integral
/// `eps^2 lambda u^2 k / 2 * int int exp(-lambda b - k^2 C(a + b) / 2) sin(omega (a + b)) db da`
/// by tensor-product panel quadrature. Slow; meant for checking [`drift_inertia`].
pub fn drift_inertia_2d(
    params: &ReducedParams,
    w: &WaveSpec,
    settings: &QuadratureSettings,
) -> Result<DriftValue> {
    check_inputs(params, w, settings)?;
    let lambda = params.lambda;
    let pre = prefactor(params, w) * lambda;
    let mut out = DriftValue {
        value: 0.0,
        model: DriftModel::Inertia,
        params: *params,
        wave: *w,
        error: 0.0,
    };
    if pre == 0.0 || w.omega == 0.0 {
        return Ok(out);
    }
    let half_k2 = 0.5 * w.k * w.k;
    let decay = half_k2 * params.sigma * params.sigma;
    let cutoff = settings.envelope_cutoff;
    let a_max = cutoff / decay + 1.0 / lambda;
    let b_max = a_max.min(cutoff / lambda);
    let width = base_panel_width(w.omega, 1.0 / decay);
    let a_width = width;
    let b_width = width.min(0.25 / lambda);

    let integrand = |a: f64, b: f64| {
        let s = a + b;
        (-lambda * b - half_k2 * cov_displacement(params, s)).exp() * (w.omega * s).sin()
    };

    let mut na = (a_max / a_width).ceil() as usize;
    let mut nb = (b_max / b_width).ceil() as usize;
    let mut prev = tensor_sum(&integrand, a_max, na, b_max, nb);
    loop {
        na *= 2;
        nb *= 2;
        if na.max(nb) > settings.max_panels {
            return Err(Error::Accuracy {
                best: pre * prev,
                error: f64::INFINITY,
                panels: na.max(nb) / 2,
            });
        }
        let cur = tensor_sum(&integrand, a_max, na, b_max, nb);
        let err = (cur - prev).abs();
        if err <= settings.rel_tol * cur.abs() || err <= 1e-15 * cur.abs().max(f64::MIN_POSITIVE) {
            out.value = pre * cur;
            out.error = pre.abs() * err;
            return Ok(out);
        }
        prev = cur;
    }
}

fn panel_nodes(len: f64, n: usize) -> Vec<(f64, f64)> {
    let (nodes, weights) = gauss_rule();
    let h = len / n as f64;
    let half = 0.5 * h;
    (0..n)
        .flat_map(|p| {
            let mid = (p as f64 + 0.5) * h;
            nodes
                .iter()
                .zip(weights)
                .map(move |(x, wt)| (mid + half * x, wt * half))
        })
        .collect()
}

fn tensor_sum(f: &(impl Fn(f64, f64) -> f64 + Sync), a_max: f64, na: usize, b_max: f64, nb: usize) -> f64 {
    let a_nodes = panel_nodes(a_max, na);
    let b_nodes = panel_nodes(b_max, nb);
    // Row sums in parallel, combined in a fixed order.
    let rows: Vec<f64> = a_nodes
        .par_iter()
        .map(|&(a, wa)| wa * b_nodes.iter().map(|&(b, wb)| wb * f(a, b)).sum::<f64>())
        .collect();
    rows.iter().sum()
}

/// White-noise limit `eps^2 u^2 k / 2 * omega / (a^2 + omega^2)` with
/// `a = k^2 sigma^2 / 2`.
pub fn drift_classical(params: &ReducedParams, w: &WaveSpec) -> Result<DriftValue> {
    params.validate()?;
    w.validate()?;
    let a = 0.5 * w.k * w.k * params.sigma * params.sigma;
    let pre = prefactor(params, w);
    let value = if pre == 0.0 || w.omega == 0.0 {
        0.0
    } else {
        pre * w.omega / (a * a + w.omega * w.omega)
    };
    Ok(DriftValue {
        value,
        model: DriftModel::Classical,
        params: *params,
        wave: *w,
        error: 0.0,
    })
}

/// `lim Var[X_t] / t` for the eddy model to order `eps^2`:
/// `sigma^2 + eps^2 u^2 int_0^inf cos(omega t) exp(-k^2 C(t) / 2) dt`.
pub fn variance_rate_eddy(
    params: &ReducedParams,
    w: &WaveSpec,
    settings: &QuadratureSettings,
) -> Result<VarianceRate> {
    check_inputs(params, w, settings)?;
    let base = params.sigma * params.sigma;
    let pre = params.epsilon * params.epsilon * w.u * w.u;
    if pre == 0.0 {
        return Ok(VarianceRate {
            value: base,
            error: 0.0,
        });
    }
    if w.k == 0.0 {
        return Err(Error::InvalidParameter(
            "variance correction diverges for k = 0".into(),
        ));
    }
    let kernel = DisplacementKernel {
        params: *params,
        k: w.k,
        inertial: false,
    };
    let q = quad_osc_decay(&kernel, w.omega, Kernel::Cos, settings).map_err(|e| match e {
        Error::Accuracy { best, error, panels } => Error::Accuracy {
            best: base + pre * best,
            error: pre * error,
            panels,
        },
        other => other,
    })?;
    Ok(VarianceRate {
        value: base + pre * q.value,
        error: pre * q.error,
    })
}

/// White-noise limit `sigma^2 + eps^2 2 u^2 k^2 sigma^2 / (k^4 sigma^4 + 4 omega^2)`.
pub fn variance_rate_classical(params: &ReducedParams, w: &WaveSpec) -> Result<f64> {
    params.validate()?;
    w.validate()?;
    let s2 = params.sigma * params.sigma;
    let k2s2 = w.k * w.k * s2;
    let denom = k2s2 * k2s2 + 4.0 * w.omega * w.omega;
    let corr = if denom == 0.0 {
        0.0
    } else {
        2.0 * w.u * w.u * k2s2 / denom
    };
    Ok(s2 + params.epsilon * params.epsilon * corr)
}

/// Number of logarithmic grid points scanned before refinement.
pub const PEAK_GRID_POINTS: usize = 40;
/// Golden-section stopping width, relative in lambda.
pub const PEAK_REL_TOL: f64 = 1e-4;

/// Outcome of [`find_drift_peak`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftPeak {
    pub lambda: f64,
    pub drift: f64,
    /// False when the largest drift sits on an end of the range.
    pub interior: bool,
}

/// Locates the `lambda` maximising the drift over `[lo, hi]`: a logarithmic
/// grid scan followed by golden-section refinement around the best grid point.
pub fn find_drift_peak(
    model: Model,
    base: &ReducedParams,
    w: &WaveSpec,
    range: (f64, f64),
    settings: &QuadratureSettings,
) -> Result<DriftPeak> {
    let (lo, hi) = range;
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "lambda range must satisfy 0 < lo <= hi, got [{lo}, {hi}]"
        )));
    }
    let eval = |lambda: f64| drift(model, &base.with_lambda(lambda), w, settings).map(|d| d.value);
    if lo == hi {
        return Ok(DriftPeak {
            lambda: lo,
            drift: eval(lo)?,
            interior: false,
        });
    }
    let grid = log_grid(lo, hi, PEAK_GRID_POINTS);
    let values = grid
        .par_iter()
        .map(|&l| eval(l))
        .collect::<Result<Vec<f64>>>()?;
    let best = values
        .iter()
        .enumerate()
        .fold(0, |b, (i, v)| if *v > values[b] { i } else { b });
    if best == 0 || best == grid.len() - 1 {
        return Ok(DriftPeak {
            lambda: grid[best],
            drift: values[best],
            interior: false,
        });
    }

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (grid[best - 1].ln(), grid[best + 1].ln());
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = eval(c.exp())?;
    let mut fd = eval(d.exp())?;
    while b - a > PEAK_REL_TOL {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c.exp())?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d.exp())?;
        }
    }
    let (lambda, drift) = if fc > fd { (c.exp(), fc) } else { (d.exp(), fd) };
    // The refined point can only beat the grid maximum; keep whichever is larger.
    if drift >= values[best] {
        Ok(DriftPeak {
            lambda,
            drift,
            interior: true,
        })
    } else {
        Ok(DriftPeak {
            lambda: grid[best],
            drift: values[best],
            interior: true,
        })
    }
}

/// `n` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| {
                    if i == 0 {
                        lo
                    } else if i == n - 1 {
                        hi
                    } else {
                        (a + (b - a) * i as f64 / (n - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}
