//! Signals on (0, ∞) with the Haar measure `dt/t`: Mellin convolution,
//! Hardy-type averages `G_r`, and the logarithmic window envelopes `Q̄`/`Q̲`.
//!
//! Everything routes through the additive side via `u = ln x`; the direct
//! one-over-t quadratures exist to cross-check that route.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::convfunc::{
    sweep_estimate, upper_p, FunctionalEstimate, ModulusPoint, SummabilityVerdict, SweepPoint,
};
use crate::error::{Error, Result};
use crate::kahan::KahanSum;
use crate::kernel::{convolve, fourier_transform, Kernel, SampledSignal};
use crate::signal::{within_bound, ContinuousSignal, GridSpec, RealMap};

/// Cells per e-fold in the direct one-over-t tables.
pub const CELLS_PER_EFOLD: usize = 1000;

/// A bounded function on (0, ∞).
#[derive(Clone)]
pub struct MultiplicativeSignal {
    generator: RealMap,
    bound: f64,
    label: String,
}

impl fmt::Debug for MultiplicativeSignal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MultiplicativeSignal")
            .field("label", &self.label)
            .field("bound", &self.bound)
            .finish()
    }
}

impl MultiplicativeSignal {
    pub fn new(
        label: impl Into<String>,
        bound: f64,
        generator: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            generator: Arc::new(generator),
            bound: bound.abs(),
            label: label.into(),
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.generator)(x)
    }

    pub fn checked_eval(&self, x: f64) -> Result<f64> {
        let v = self.eval(x);
        if within_bound(v, self.bound) {
            Ok(v)
        } else {
            Err(Error::BoundViolation {
                label: self.label.clone(),
                at: x,
                value: v,
                bound: self.bound,
            })
        }
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn generator(&self) -> RealMap {
        Arc::clone(&self.generator)
    }
}

/// `(Wφ)(x) = φ(e^x)`.
pub fn wrap_log(phi: &MultiplicativeSignal) -> ContinuousSignal {
    let g = phi.generator();
    ContinuousSignal::new(format!("W[{}]", phi.label), phi.bound, move |x| g(x.exp()))
}

/// Inverse of [`wrap_log`]: `x ↦ ψ(ln x)`.
pub fn unwrap_log(psi: &ContinuousSignal) -> MultiplicativeSignal {
    let g = psi.generator();
    MultiplicativeSignal::new(psi.label().to_string(), psi.bound(), move |x| g(x.ln()))
}

/// A kernel on (0, ∞), stored through its additive pullback `f(u) = g(e^u)`.
#[derive(Debug, Clone)]
pub struct MellinKernel {
    pullback: Kernel,
    label: String,
}

impl MellinKernel {
    /// Kernel whose pullback is `f`.
    pub fn from_pullback(label: impl Into<String>, pullback: Kernel) -> Self {
        Self {
            pullback,
            label: label.into(),
        }
    }

    /// `g_r(x) = r·x^{−r}` on `x ≥ 1`; `r = 1` gives the Hardy kernel.
    ///
    /// # Panics
    /// If `r` is not positive.
    pub fn hardy(r: f64) -> Self {
        Self::from_pullback(format!("g_{r}"), Kernel::exp(r))
    }

    /// Kernel given by a density `g` on `[lower, upper] ⊂ (0, ∞)`.
    pub fn from_density(
        label: impl Into<String>,
        lower: f64,
        upper: f64,
        nonnegative: bool,
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(lower > 0.0 && upper > lower) {
            return Err(Error::Precondition("multiplicative kernel support must lie in (0, ∞)".into()));
        }
        let label = label.into();
        let f = Kernel::custom(label.clone(), lower.ln(), upper.ln(), nonnegative, move |u| g(u.exp()));
        Ok(Self::from_pullback(label, f))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn density(&self, x: f64) -> f64 {
        if x > 0.0 {
            self.pullback.density(x.ln())
        } else {
            0.0
        }
    }

    /// `ĝ(ξ) = ∫ g(t) t^{iξ} dt/t`, which equals `f̂(−ξ)` for the pullback.
    pub fn mellin_transform(&self, xi: f64) -> Result<Complex64> {
        fourier_transform(&self.pullback, -xi)
    }

    /// `∫ g(t) dt/t`.
    pub fn mass(&self) -> Result<f64> {
        self.pullback.mass()
    }
}

/// Additive kernel `f(t) = g(e^t)`.
pub fn mellin_pullback(g: &MellinKernel) -> Kernel {
    g.pullback.clone()
}

/// `(g ∗ φ)(x) = ∫ φ(x/t) g(t) dt/t` on the log-coordinate grid `u ∈ [x_cut, x_max]`.
///
/// The result is the additive convolution of the pullbacks; read it at `x`
/// through `eval(ln x)` or [`unwrap_log`].
pub fn mellin_convolve(g: &MellinKernel, phi: &MultiplicativeSignal, grid: &GridSpec) -> Result<SampledSignal> {
    convolve(&g.pullback, &wrap_log(phi), grid)
}

/// Direct quadrature of `∫ φ(x/t) g(t) dt/t` in the variable `t`, uniform
/// within each e-fold of the kernel's truncated support.
pub fn mellin_convolve_direct(g: &MellinKernel, phi: &MultiplicativeSignal, x: f64, cells_per_efold: usize) -> Result<f64> {
    let (lo, hi) = g.pullback.truncated_support()?;
    let knots = log_blocked_knots(lo, hi, cells_per_efold);
    let mut acc = KahanSum::new();
    for w in knots.windows(2) {
        let t = 0.5 * (w[0] + w[1]);
        acc.add(phi.checked_eval(x / t)? * g.density(t) * (w[1] - w[0]) / t);
    }
    Ok(acc.value())
}

/// Knots uniform in `t` within each block `[e^k, e^{k+1}]`, covering `[e^lo, e^hi]`.
pub fn log_blocked_knots(lo: f64, hi: f64, cells_per_efold: usize) -> Vec<f64> {
    let mut knots = vec![lo.exp()];
    let mut u = lo;
    while u < hi - 1e-12 {
        let next = (u.floor() + 1.0).min(hi);
        let next = if next - u < 1e-12 { (u + 1.0).min(hi) } else { next };
        let cells = ((next - u) * cells_per_efold as f64).ceil().max(1.0) as usize;
        let (a, b) = (u.exp(), next.exp());
        for j in 1..=cells {
            knots.push(if j == cells { b } else { a + (b - a) * j as f64 / cells as f64 });
        }
        u = next;
    }
    knots
}

/// Cumulative `∫_{t_0}^{t} φ(s)·w(s) ds` over arbitrary knots, with exact
/// per-cell weights and `φ` taken at cell midpoints.
#[derive(Debug, Clone)]
pub struct HaarTable {
    knots: Vec<f64>,
    cumulative: Vec<f64>,
    values: Vec<f64>,
    power: Option<f64>,
}

impl HaarTable {
    /// Weight `1/t`.
    pub fn build(phi: &MultiplicativeSignal, knots: Vec<f64>) -> Result<Self> {
        Self::build_inner(phi, knots, None)
    }

    /// Weight `t^{r−1}`.
    pub fn build_power(phi: &MultiplicativeSignal, knots: Vec<f64>, r: f64) -> Result<Self> {
        Self::build_inner(phi, knots, Some(r))
    }

    fn build_inner(phi: &MultiplicativeSignal, knots: Vec<f64>, power: Option<f64>) -> Result<Self> {
        if knots.len() < 2 || knots[0] <= 0.0 || knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Precondition("knots must be positive and strictly increasing".into()));
        }
        let values: Vec<f64> = knots
            .par_windows(2)
            .map(|w| phi.checked_eval(0.5 * (w[0] + w[1])))
            .collect::<Result<_>>()?;
        let mut cumulative = Vec::with_capacity(knots.len());
        cumulative.push(0.0);
        let mut acc = KahanSum::new();
        for (w, v) in knots.windows(2).zip(&values) {
            acc.add(v * cell_weight(power, w[0], w[1]));
            cumulative.push(acc.value());
        }
        Ok(Self {
            knots,
            cumulative,
            values,
            power,
        })
    }

    pub fn start(&self) -> f64 {
        self.knots[0]
    }

    pub fn end(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Integral from the first knot to `t`; inside a cell the midpoint value is integrated exactly.
    pub fn integral_to(&self, t: f64) -> Result<f64> {
        let (lo, hi) = (self.start(), self.end());
        if t < lo * (1.0 - 1e-12) || t > hi * (1.0 + 1e-12) {
            return Err(Error::Range {
                start: t,
                end: t,
                lo,
                hi,
            });
        }
        let t = t.clamp(lo, hi);
        let k = self.knots.partition_point(|&s| s <= t).saturating_sub(1);
        if k + 1 >= self.knots.len() {
            return Ok(*self.cumulative.last().unwrap());
        }
        let a = self.knots[k];
        if t == a {
            return Ok(self.cumulative[k]);
        }
        Ok(self.cumulative[k] + self.values[k] * cell_weight(self.power, a, t))
    }

    /// `(1/ln θ) ∫_x^{θx} φ(t) dt/t`.
    pub fn window_mean(&self, x: f64, theta: f64) -> Result<f64> {
        if theta <= 1.0 {
            return Err(Error::DegenerateWindow { theta, step: 1.0 });
        }
        Ok((self.integral_to(theta * x)? - self.integral_to(x)?) / theta.ln())
    }
}

fn cell_weight(power: Option<f64>, a: f64, b: f64) -> f64 {
    match power {
        None => (b / a).ln(),
        Some(r) => a.powf(r) * (r * (b / a).ln()).exp_m1() / r,
    }
}

/// `(G_r φ)(x) = (r/x^r) ∫_0^x φ(t) t^{r−1} dt` at each point of `x_grid`.
pub fn hardy_operator(phi: &MultiplicativeSignal, r: f64, x_grid: &[f64]) -> Result<Vec<f64>> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::param("hardy", "r", "r must be positive"));
    }
    if x_grid.is_empty() {
        return Ok(Vec::new());
    }
    if x_grid.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::Precondition("hardy operator needs positive abscissae".into()));
    }
    let x_top = x_grid.iter().copied().fold(0.0, f64::max);
    if r * x_top.ln() > 700.0 {
        return Err(Error::Precondition(format!("x^r overflows for r = {r}, x = {x_top}")));
    }
    // ∫_0^{t_min} is below M·e^{−40}/r and is dropped.
    let u_min = (-40.0 / r).max(-700.0);
    let table = HaarTable::build_power(phi, log_blocked_knots(u_min, x_top.ln().max(u_min + 1.0), CELLS_PER_EFOLD), r)?;
    x_grid
        .iter()
        .map(|&x| Ok(r * table.integral_to(x)? / x.powf(r)))
        .collect()
}

/// Both routes to `Q̄`/`Q̲` and their disagreement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QEstimate {
    /// Direct one-over-t quadrature; the primary value.
    pub direct: FunctionalEstimate,
    /// `P̄` of the additive pullback.
    pub pullback: FunctionalEstimate,
    pub route_gap: f64,
    pub discrepancy: bool,
}

impl QEstimate {
    pub fn upper(&self) -> f64 {
        self.direct.upper
    }

    pub fn lower(&self) -> f64 {
        self.direct.lower
    }
}

/// Direct one-over-t window sweep: starts `x = e^u` for `u` on the grid in
/// `[u_lo, u_hi − ln θ]`, with `ln θ` from the grid's window sequence.
pub(crate) fn haar_sweep(table: &HaarTable, grid: &GridSpec, u_lo: f64, u_hi: f64) -> Result<Vec<SweepPoint>> {
    grid.thetas()
        .par_iter()
        .map(|&lt| {
            let n = ((u_hi - lt - u_lo) / grid.step + 1e-9).floor() as usize;
            let theta = lt.exp();
            let mut upper = f64::NEG_INFINITY;
            let mut lower = f64::INFINITY;
            for i in 0..=n {
                let m = table.window_mean((u_lo + i as f64 * grid.step).exp(), theta)?;
                upper = upper.max(m);
                lower = lower.min(m);
            }
            Ok(SweepPoint {
                param: lt,
                upper,
                lower,
            })
        })
        .collect()
}

fn direct_table(phi: &MultiplicativeSignal, u_lo: f64, u_hi: f64) -> Result<HaarTable> {
    HaarTable::build(phi, log_blocked_knots(u_lo, u_hi, CELLS_PER_EFOLD))
}

/// `Q̄(φ) = lim_θ limsup_x (1/ln θ)∫_x^{θx} φ(t) dt/t` on a log-coordinate grid
/// (window lengths are `ln θ`), by direct quadrature and through `P̄(Wφ)`.
pub fn upper_q(phi: &MultiplicativeSignal, grid: &GridSpec, route_tol: f64) -> Result<QEstimate> {
    grid.validate()?;
    let table = direct_table(phi, grid.x_cut, grid.x_max)?;
    let direct = sweep_estimate(haar_sweep(&table, grid, grid.x_cut, grid.x_max)?, *grid, true);
    let pullback = upper_p(&wrap_log(phi), grid)?;
    let route_gap = (direct.upper - pullback.upper)
        .abs()
        .max((direct.lower - pullback.lower).abs());
    Ok(QEstimate {
        direct,
        pullback,
        route_gap,
        discrepancy: route_gap > route_tol,
    })
}

/// Uniform convergence of the logarithmic window means in every `x ≥ 1`.
pub fn q_summability_test(phi: &MultiplicativeSignal, grid: &GridSpec, eps: f64) -> Result<SummabilityVerdict> {
    grid.validate()?;
    let table = direct_table(phi, 0.0, grid.x_max)?;
    let tail = sweep_estimate(haar_sweep(&table, grid, grid.x_cut, grid.x_max)?, *grid, true);
    let alpha = tail.midpoint();
    let modulus = haar_sweep(&table, grid, 0.0, grid.x_max)?
        .into_iter()
        .map(|p| ModulusPoint {
            param: p.param,
            deviation: (p.upper - alpha).max(alpha - p.lower),
        })
        .collect();
    Ok(SummabilityVerdict::decide("Q", tail.upper, tail.lower, modulus, eps))
}
