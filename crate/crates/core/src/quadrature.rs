//! Panel Gauss-Legendre quadrature for `int_0^inf g(t) sin(omega t) dt` (or
//! `cos`) where `g` is a smooth, eventually exponentially decaying envelope.
//!
//! The half-line is cut where the envelope's exponent passes a cutoff; the
//! remainder is split into panels narrow enough to resolve both the
//! oscillation and the decay, and each panel gets a fixed Gauss-Legendre rule.
//! Panels are halved until two successive sums agree.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{ensure, Error, Result};

/// Gauss-Legendre points per panel.
pub const GAUSS_ORDER: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSettings {
    pub rel_tol: f64,
    /// Integration stops once the envelope is below `exp(-envelope_cutoff)`.
    pub envelope_cutoff: f64,
    pub max_panels: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        QuadratureSettings {
            rel_tol: 1e-8,
            envelope_cutoff: 40.0,
            max_panels: 1_000_000,
        }
    }
}

impl QuadratureSettings {
    pub fn validate(&self) -> Result<()> {
        ensure(self.rel_tol > 0.0 && self.rel_tol <= 1e-4, || {
            format!("rel_tol must lie in (0, 1e-4], got {}", self.rel_tol)
        })?;
        ensure(self.envelope_cutoff >= 30.0, || {
            format!("envelope_cutoff must be >= 30, got {}", self.envelope_cutoff)
        })?;
        ensure(self.max_panels >= 1000, || {
            format!("max_panels must be >= 1000, got {}", self.max_panels)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    Sin,
    Cos,
}

impl Kernel {
    #[inline]
    fn eval(self, x: f64) -> f64 {
        match self {
            Kernel::Sin => x.sin(),
            Kernel::Cos => x.cos(),
        }
    }
}

/// A positive, smooth weight that eventually decays at least exponentially.
pub trait Envelope: Sync {
    fn value(&self, t: f64) -> f64;

    /// A time past which the envelope stays below `exp(-cutoff)`.
    fn horizon(&self, cutoff: f64) -> f64;

    /// Shortest local e-folding time of the envelope.
    fn efold_time(&self) -> f64;
}

/// `exp(-rate t)`.
#[derive(Debug, Clone, Copy)]
pub struct ExpEnvelope {
    pub rate: f64,
}

impl Envelope for ExpEnvelope {
    fn value(&self, t: f64) -> f64 {
        (-self.rate * t).exp()
    }

    fn horizon(&self, cutoff: f64) -> f64 {
        cutoff / self.rate
    }

    fn efold_time(&self) -> f64 {
        1.0 / self.rate
    }
}

/// Value and error estimate of a quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // P_n(x) and P_n'(x) by the three-term recurrence.
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

pub(crate) fn gauss_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(GAUSS_ORDER))
}

/// Panel width that resolves both half an oscillation and one e-fold, quartered.
pub(crate) fn base_panel_width(omega: f64, efold: f64) -> f64 {
    let half_period = if omega == 0.0 { f64::INFINITY } else { PI / omega.abs() };
    half_period.min(efold) / 4.0
}

/// Panel sums of `f` over `[0, t_max]` with `n` equal panels.
/// Returns the integral and the integral of `|f|`.
fn panel_sum(f: &impl Fn(f64) -> f64, t_max: f64, n: usize) -> (f64, f64) {
    let (nodes, weights) = gauss_rule();
    let h = t_max / n as f64;
    let half = 0.5 * h;
    let mut total = 0.0;
    let mut total_abs = 0.0;
    for p in 0..n {
        let mid = (p as f64 + 0.5) * h;
        let mut s = 0.0;
        let mut sa = 0.0;
        for (x, w) in nodes.iter().zip(weights) {
            let v = f(mid + half * x);
            s += w * v;
            sa += w * v.abs();
        }
        total += s * half;
        total_abs += sa * half;
    }
    (total, total_abs)
}

/// Integrates `envelope(t) * sin(omega t)` (or `cos`) over the half-line.
pub fn quad_osc_decay(
    envelope: &impl Envelope,
    omega: f64,
    kind: Kernel,
    settings: &QuadratureSettings,
) -> Result<QuadResult> {
    settings.validate()?;
    if omega == 0.0 && kind == Kernel::Sin {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            panels: 0,
        });
    }
    let t_max = envelope.horizon(settings.envelope_cutoff);
    let efold = envelope.efold_time();
    if !(t_max.is_finite() && t_max > 0.0 && efold > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "envelope has no usable decay (horizon {t_max}, e-fold time {efold})"
        )));
    }
    let integrand = |t: f64| envelope.value(t) * kind.eval(omega * t);
    refine(&integrand, t_max, base_panel_width(omega, efold), settings)
}

/// Halves panels until successive sums agree to `rel_tol`.
pub(crate) fn refine(
    f: &impl Fn(f64) -> f64,
    t_max: f64,
    width: f64,
    settings: &QuadratureSettings,
) -> Result<QuadResult> {
    let mut n = ((t_max / width).ceil() as usize).max(1);
    if n > settings.max_panels {
        return Err(Error::Accuracy {
            best: f64::NAN,
            error: f64::INFINITY,
            panels: n,
        });
    }
    let (mut prev, _) = panel_sum(f, t_max, n);
    loop {
        let n2 = 2 * n;
        if n2 > settings.max_panels {
            return Err(Error::Accuracy {
                best: prev,
                error: f64::INFINITY,
                panels: n,
            });
        }
        let (cur, cur_abs) = panel_sum(f, t_max, n2);
        let err = (cur - prev).abs();
        let floor = 64.0 * f64::EPSILON * cur_abs;
        if err <= settings.rel_tol * cur.abs() || err <= floor {
            return Ok(QuadResult {
                value: cur,
                error: err.max(f64::EPSILON * cur_abs),
                panels: n2,
            });
        }
        prev = cur;
        n = n2;
    }
}
