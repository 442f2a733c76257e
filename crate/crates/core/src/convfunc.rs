//! Continuous-side limit functionals: kernel limits `F̄`, `F̄_k`, `F̄_∞`,
//! sliding-window envelopes `P̄`/`P̲`, and the checks built from them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{classify, convolution_power, convolve, default_xi_grid, ClassifyTolerances, Kernel, SampledSignal};
use crate::signal::{build_prefix, tail_prefix, ContinuousSignal, GridSpec, PrefixTable, Weight};
use crate::verify::TheoremReport;

/// Largest last-step change before an estimate is flagged unstable.
pub const STABILITY_TOL: f64 = 2e-2;
/// Allowed increase in sweeps that should be nonincreasing.
pub const MONOTONE_SLACK: f64 = 1e-3;
/// Number of nested tails reported by the kernel-limit estimators.
pub const NESTED_TAILS: usize = 3;

/// Tolerances shared by the checks and the suite runner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Limit functionals and verdicts.
    pub limit: f64,
    /// Quadrature identities.
    pub quadrature: f64,
    /// Slack for sweeps that should be monotone.
    pub monotone_slack: f64,
    /// Agreement of two numerical routes to the same quantity.
    pub route: f64,
    /// Limits of classically convergent signals.
    pub classical: f64,
    /// Agreement of the Hardy operator with the Mellin convolution route.
    pub hardy: f64,
    /// Stopping threshold of the `F̄_k` sweep.
    pub sweep_eps: f64,
    pub k_max: u32,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            limit: 2e-2,
            quadrature: 1e-6,
            monotone_slack: MONOTONE_SLACK,
            route: 1e-3,
            classical: 1e-3,
            hardy: 1e-4,
            sweep_eps: 1e-3,
            k_max: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub param: f64,
    pub upper: f64,
    pub lower: f64,
}

/// A limsup/liminf pair with the sweep that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate<G> {
    pub upper: f64,
    pub lower: f64,
    pub trace: Vec<SweepPoint>,
    /// Change over the last sweep step.
    pub stability_residual: f64,
    pub unstable: bool,
    /// Whether the sweep respected the monotonicity its functional requires.
    pub monotone: bool,
    pub converged: bool,
    pub grid: G,
}

pub type FunctionalEstimate = Estimate<GridSpec>;

impl<G> Estimate<G> {
    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.upper + self.lower)
    }
}

/// Estimate from a sweep whose last entry approximates the outer limit.
pub(crate) fn sweep_estimate<G>(trace: Vec<SweepPoint>, grid: G, nonincreasing: bool) -> Estimate<G> {
    let last = *trace.last().expect("sweep has at least one point");
    let residual = if trace.len() >= 2 {
        let prev = trace[trace.len() - 2];
        (last.upper - prev.upper).abs().max((last.lower - prev.lower).abs())
    } else {
        0.0
    };
    let monotone = !nonincreasing
        || trace
            .windows(2)
            .all(|w| w[1].upper <= w[0].upper + MONOTONE_SLACK && w[1].lower >= w[0].lower - MONOTONE_SLACK);
    Estimate {
        upper: last.upper,
        lower: last.lower,
        trace,
        stability_residual: residual,
        unstable: residual > STABILITY_TOL,
        monotone,
        converged: residual <= STABILITY_TOL,
        grid,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulusPoint {
    pub param: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VerdictStatus {
    Summable { alpha: f64 },
    NotSummable { gap: f64 },
    Inconclusive { reason: String },
}

/// Outcome of a summability test with its uniformity modulus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummabilityVerdict {
    pub method: String,
    pub status: VerdictStatus,
    pub upper: f64,
    pub lower: f64,
    pub alpha: f64,
    pub gap: f64,
    pub uniformity_modulus: Vec<ModulusPoint>,
}

impl SummabilityVerdict {
    pub(crate) fn decide(method: &str, upper: f64, lower: f64, modulus: Vec<ModulusPoint>, eps: f64) -> Self {
        let gap = upper - lower;
        let alpha = 0.5 * (upper + lower);
        let last = modulus.last().map(|m| m.deviation).unwrap_or(f64::INFINITY);
        let status = if gap > eps {
            VerdictStatus::NotSummable { gap }
        } else if last <= eps {
            VerdictStatus::Summable { alpha }
        } else {
            VerdictStatus::Inconclusive {
                reason: format!("uniformity modulus {last:.6} at the largest window exceeds {eps}"),
            }
        };
        Self {
            method: method.to_string(),
            status,
            upper,
            lower,
            alpha,
            gap,
            uniformity_modulus: modulus,
        }
    }

    pub fn summable_alpha(&self) -> Option<f64> {
        match self.status {
            VerdictStatus::Summable { alpha } => Some(alpha),
            _ => None,
        }
    }

    pub fn is_inconclusive(&self) -> bool {
        matches!(self.status, VerdictStatus::Inconclusive { .. })
    }

    pub fn status_label(&self) -> String {
        match &self.status {
            VerdictStatus::Summable { alpha } => format!("summable({alpha:.6})"),
            VerdictStatus::NotSummable { gap } => format!("not summable (gap {gap:.6})"),
            VerdictStatus::Inconclusive { reason } => format!("inconclusive: {reason}"),
        }
    }
}

/// Sup/inf of a sampled convolution over nested tails `[x_cut + j·L/4, x_max]`.
pub(crate) fn tail_estimate(sampled: &SampledSignal, grid: &GridSpec) -> FunctionalEstimate {
    let quarter = grid.tail_len() / 4.0;
    let trace: Vec<SweepPoint> = (0..NESTED_TAILS)
        .map(|j| {
            let cut = grid.x_cut + j as f64 * quarter;
            let (upper, lower) = sampled.extremes_from(cut);
            SweepPoint {
                param: cut,
                upper,
                lower,
            }
        })
        .collect();
    let (first, last) = (trace[0], trace[NESTED_TAILS - 1]);
    let residual = (first.upper - last.upper).max(last.lower - first.lower);
    Estimate {
        upper: first.upper,
        lower: first.lower,
        trace,
        stability_residual: residual,
        unstable: residual > STABILITY_TOL,
        monotone: true,
        converged: residual <= STABILITY_TOL,
        grid: *grid,
    }
}

fn require_normalized(kernel: &Kernel) -> Result<()> {
    let mass = kernel.mass()?;
    if (mass - 1.0).abs() > 1e-6 {
        return Err(Error::Precondition(format!(
            "kernel `{}` is not normalized (mass {mass})",
            kernel.label()
        )));
    }
    Ok(())
}

fn require_flat(kernel: &Kernel) -> Result<()> {
    require_normalized(kernel)?;
    if !kernel.is_nonnegative() {
        return Err(Error::Precondition(format!("kernel `{}` is not nonnegative", kernel.label())));
    }
    Ok(())
}

/// `limsup (f ∗ φ)(x)` over the tail, with the liminf as companion.
pub fn upper_f(kernel: &Kernel, signal: &ContinuousSignal, grid: &GridSpec) -> Result<FunctionalEstimate> {
    grid.validate()?;
    require_normalized(kernel)?;
    let conv = convolve(kernel, signal, grid)?;
    Ok(tail_estimate(&conv, grid))
}

pub fn lower_f(kernel: &Kernel, signal: &ContinuousSignal, grid: &GridSpec) -> Result<f64> {
    Ok(upper_f(kernel, signal, grid)?.lower)
}

/// [`upper_f`] with the kernel `f^{*k}`, evaluated as one convolution.
pub fn upper_f_k(kernel: &Kernel, k: u32, signal: &ContinuousSignal, grid: &GridSpec) -> Result<FunctionalEstimate> {
    upper_f(&convolution_power(kernel, k)?, signal, grid)
}

/// Sweeps `k = 1, 2, …` until both `F̄_k` and `F̲_k` move by at most `eps`, or `k_max`.
pub fn f_infinity(
    kernel: &Kernel,
    signal: &ContinuousSignal,
    grid: &GridSpec,
    k_max: u32,
    eps: f64,
) -> Result<FunctionalEstimate> {
    require_flat(kernel)?;
    if k_max < 4 {
        return Err(Error::Precondition(format!("k_max must be at least 4, got {k_max}")));
    }
    grid.validate()?;
    let mut trace: Vec<SweepPoint> = Vec::new();
    let mut unstable = false;
    let mut converged = false;
    let mut residual = f64::INFINITY;
    for k in 1..=k_max {
        let est = upper_f_k(kernel, k, signal, grid)?;
        unstable |= est.unstable;
        if let Some(prev) = trace.last() {
            if est.upper > prev.upper + MONOTONE_SLACK {
                return Err(Error::NonMonotone {
                    k,
                    previous: prev.upper,
                    next: est.upper,
                });
            }
            if est.lower < prev.lower - MONOTONE_SLACK {
                return Err(Error::NonMonotone {
                    k,
                    previous: prev.lower,
                    next: est.lower,
                });
            }
            residual = (est.upper - prev.upper).abs().max((est.lower - prev.lower).abs());
        }
        trace.push(SweepPoint {
            param: k as f64,
            upper: est.upper,
            lower: est.lower,
        });
        if residual <= eps {
            converged = true;
            break;
        }
    }
    let last = *trace.last().expect("k sweep is not empty");
    Ok(Estimate {
        upper: last.upper,
        lower: last.lower,
        trace,
        stability_residual: residual,
        unstable,
        monotone: true,
        converged,
        grid: *grid,
    })
}

/// Window-mean extremes `(θ, sup, inf)` over starts in `[x_lo, x_hi − θ]` for every `θ`.
pub fn window_sweep(table: &PrefixTable, x_lo: f64, x_hi: f64, thetas: &[f64]) -> Result<Vec<SweepPoint>> {
    thetas
        .par_iter()
        .map(|&theta| {
            let (upper, lower) = table.window_extremes(x_lo, x_hi, theta)?;
            Ok(SweepPoint {
                param: theta,
                upper,
                lower,
            })
        })
        .collect()
}

/// `P̄(φ) = lim_θ limsup_x (1/θ)∫_x^{x+θ} φ`, with `P̲` as companion.
pub fn upper_p(signal: &ContinuousSignal, grid: &GridSpec) -> Result<FunctionalEstimate> {
    grid.validate()?;
    let table = tail_prefix(signal, grid)?;
    let trace = window_sweep(&table, grid.x_cut, grid.x_max, &grid.thetas())?;
    Ok(sweep_estimate(trace, *grid, true))
}

/// `sup_{x ∈ [lo, hi − θ]} |window mean − α|` for every `θ`.
pub(crate) fn modulus_sweep(
    table: &PrefixTable,
    lo: f64,
    hi: f64,
    thetas: &[f64],
    alpha: f64,
) -> Result<Vec<ModulusPoint>> {
    window_sweep(table, lo, hi, thetas).map(|pts| {
        pts.into_iter()
            .map(|p| ModulusPoint {
                param: p.param,
                deviation: (p.upper - alpha).max(alpha - p.lower),
            })
            .collect()
    })
}

/// Uniform convergence of the window means in every `x ≥ 0`.
pub fn almost_convergence_test(signal: &ContinuousSignal, grid: &GridSpec, eps: f64) -> Result<SummabilityVerdict> {
    let p = upper_p(signal, grid)?;
    let alpha = p.midpoint();
    let table = build_prefix(signal, 0.0, grid.x_max, grid.step, Weight::Unit)?;
    let modulus = modulus_sweep(&table, 0.0, grid.x_max, &grid.thetas(), alpha)?;
    Ok(SummabilityVerdict::decide("P", p.upper, p.lower, modulus, eps))
}

/// Residual `f ∗ φ − φ` must have vanishing window-mean envelopes.
pub fn residual_check(kernel: &Kernel, signal: &ContinuousSignal, grid: &GridSpec, eps: f64) -> Result<TheoremReport> {
    require_normalized(kernel)?;
    let conv = convolve(kernel, signal, grid)?.to_continuous();
    let residual = conv.combine(1.0, signal, -1.0);
    let r = upper_p(&residual, grid)?;
    let pc = upper_p(&conv, grid)?;
    let pp = upper_p(signal, grid)?;
    let mut report = TheoremReport::new("L3.1", signal.label(), kernel.label());
    report.check("upper_P(f*phi-phi)", r.upper.abs(), eps);
    report.check("lower_P(f*phi-phi)", r.lower.abs(), eps);
    report.check("upper_P(f*phi)-upper_P(phi)", (pc.upper - pp.upper).abs(), eps);
    report.measure("upper_P(phi)", pp.upper);
    report.measure("upper_P(f*phi)", pc.upper);
    report.add_trace("theta_sweep_residual", r.trace.clone());
    report.set_unstable(r.unstable || pc.unstable || pp.unstable);
    Ok(report.finish())
}

/// Tauberian condition through the witness kernel `f − f^{*2}`, checked
/// against the equivalence `[P summable ∧ condition] ⇔ [F summable]`.
pub fn tauberian_check(kernel: &Kernel, signal: &ContinuousSignal, grid: &GridSpec, eps: f64) -> Result<TheoremReport> {
    let report = TheoremReport::new("T5.6", signal.label(), kernel.label());
    let class = classify(kernel, &default_xi_grid(), &ClassifyTolerances::default())?;
    if !(class.flat && class.wiener) {
        return Ok(report.vacuous("premise not satisfied: kernel is not a flat Wiener kernel"));
    }
    grid.validate()?;
    let witness = kernel.tauberian_witness()?;
    let t = tail_estimate(&convolve(&witness, signal, grid)?, grid);
    let p = upper_p(signal, grid)?;
    let f = upper_f(kernel, signal, grid)?;

    let condition = t.upper.abs() <= eps && t.lower.abs() <= eps;
    let p_summable = p.gap() <= eps;
    let f_summable = f.gap() <= eps;
    let alpha_gap = (p.midpoint() - f.midpoint()).abs();
    let consistent = (p_summable && condition) == f_summable && (!f_summable || alpha_gap <= eps);

    let mut report = report;
    report.check("equivalence_mismatch", if consistent { 0.0 } else { 1.0 }, 0.0);
    if f_summable && p_summable {
        report.check("alpha_F-alpha_P", alpha_gap, eps);
    }
    report.measure("witness_upper", t.upper);
    report.measure("witness_lower", t.lower);
    report.measure("P_gap", p.gap());
    report.measure("P_alpha", p.midpoint());
    report.measure("F_gap", f.gap());
    report.measure("F_alpha", f.midpoint());
    report.set_note(format!(
        "condition {}; P {}; F {}",
        if condition { "holds" } else { "fails" },
        if p_summable { "summable" } else { "not summable" },
        if f_summable { "summable" } else { "not summable" },
    ));
    report.add_trace("witness_tails", t.trace.clone());
    let unstable = t.unstable || p.unstable || f.unstable;
    report.set_unstable(unstable);
    let mut report = report.finish();
    if unstable {
        report.status = crate::verify::Status::Inconclusive;
    }
    Ok(report)
}

/// Translate form of the Tauberian condition: `limsup |(f(· − s) − f) ∗ φ|`
/// for each shift `s`. The estimate's upper/lower are the extremes over all shifts.
pub fn translate_condition(
    kernel: &Kernel,
    signal: &ContinuousSignal,
    grid: &GridSpec,
    shifts: &[f64],
) -> Result<FunctionalEstimate> {
    if shifts.is_empty() {
        return Err(Error::Precondition("translate condition needs at least one shift".into()));
    }
    let trace: Vec<SweepPoint> = shifts
        .par_iter()
        .map(|&s| {
            let g = Kernel::combination(
                format!("{}>>{s}-{}", kernel.label(), kernel.label()),
                vec![(1.0, kernel.shifted(s)), (-1.0, kernel.clone())],
            );
            let t = tail_estimate(&convolve(&g, signal, grid)?, grid);
            Ok(SweepPoint {
                param: s,
                upper: t.upper,
                lower: t.lower,
            })
        })
        .collect::<Result<_>>()?;
    let upper = trace.iter().map(|p| p.upper).fold(f64::NEG_INFINITY, f64::max);
    let lower = trace.iter().map(|p| p.lower).fold(f64::INFINITY, f64::min);
    Ok(Estimate {
        upper,
        lower,
        trace,
        stability_residual: 0.0,
        unstable: false,
        monotone: true,
        converged: true,
        grid: *grid,
    })
}

/// When `F(φ)` converges under the leading Wiener kernel, every other
/// normalized kernel must give the same limit.
pub fn wiener_cross_check(
    signal: &ContinuousSignal,
    kernels: &[Kernel],
    grid: &GridSpec,
    eps: f64,
) -> Result<TheoremReport> {
    let lead = kernels
        .first()
        .ok_or_else(|| Error::Precondition("cross-kernel check needs at least one kernel".into()))?;
    let class = classify(lead, &default_xi_grid(), &ClassifyTolerances::default())?;
    if !class.wiener {
        return Err(Error::Precondition(format!("leading kernel `{}` is not a Wiener kernel", lead.label())));
    }
    let label = kernels.iter().map(|k| k.label()).collect::<Vec<_>>().join("+");
    let estimates: Vec<FunctionalEstimate> = kernels
        .par_iter()
        .map(|k| upper_f(k, signal, grid))
        .collect::<Result<_>>()?;
    let mut report = TheoremReport::new("T5.1", signal.label(), &label);
    for (k, e) in kernels.iter().zip(&estimates) {
        report.measure(&format!("F_upper[{}]", k.label()), e.upper);
        report.measure(&format!("F_lower[{}]", k.label()), e.lower);
    }
    let base = &estimates[0];
    if base.gap() > eps {
        return Ok(report.vacuous("premise not satisfied: F is not summable under the Wiener kernel"));
    }
    let alpha = base.midpoint();
    report.check(&format!("gap[{}]", lead.label()), base.gap(), eps);
    for (k, e) in kernels.iter().zip(&estimates).skip(1) {
        report.check(&format!("alpha[{}]", k.label()), (e.midpoint() - alpha).abs(), eps);
        report.check(&format!("gap[{}]", k.label()), e.gap(), eps);
    }
    report.set_unstable(estimates.iter().any(|e| e.unstable));
    Ok(report.finish())
}
