//! Bounded test signals on ℝ, ℕ and (0, ∞), the grid that controls every
//! limit estimator, and the prefix-sum table that turns window means into
//! O(1) lookups.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::kahan::KahanSum;
use crate::mellin::MultiplicativeSignal;

pub type RealMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type IndexMap = Arc<dyn Fn(u64) -> f64 + Send + Sync>;

/// Parameters of a library generator or kernel, as declared in a job file.
pub type ParamMap = BTreeMap<String, Value>;

/// Relative slack used when checking `|φ(x)| ≤ M` on sampled points.
const BOUND_SLACK: f64 = 1e-12;

pub(crate) fn within_bound(value: f64, bound: f64) -> bool {
    value.is_finite() && value.abs() <= bound * (1.0 + BOUND_SLACK) + BOUND_SLACK
}

/// A bounded function on the real line given by a pure generator.
#[derive(Clone)]
pub struct ContinuousSignal {
    generator: RealMap,
    bound: f64,
    label: String,
}

impl fmt::Debug for ContinuousSignal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ContinuousSignal")
            .field("label", &self.label)
            .field("bound", &self.bound)
            .finish()
    }
}

impl ContinuousSignal {
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

    pub fn from_map(label: impl Into<String>, bound: f64, generator: RealMap) -> Self {
        Self {
            generator,
            bound: bound.abs(),
            label: label.into(),
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.generator)(x)
    }

    /// Evaluates and checks the declared bound.
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

    pub fn generator(&self) -> RealMap {
        Arc::clone(&self.generator)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn scale(&self, c: f64) -> Self {
        let g = self.generator();
        ContinuousSignal::new(format!("{}*{}", c, self.label), c.abs() * self.bound, move |x| {
            c * g(x)
        })
    }

    pub fn offset(&self, c: f64) -> Self {
        let g = self.generator();
        ContinuousSignal::new(format!("{}+{}", self.label, c), self.bound + c.abs(), move |x| {
            g(x) + c
        })
    }

    /// Pointwise `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &ContinuousSignal, b: f64) -> Self {
        let (f, g) = (self.generator(), other.generator());
        ContinuousSignal::new(
            format!("{}*{}+{}*{}", a, self.label, b, other.label),
            a.abs() * self.bound + b.abs() * other.bound,
            move |x| a * f(x) + b * g(x),
        )
    }
}

/// A bounded function on the positive integers.
#[derive(Clone)]
pub struct DiscreteSignal {
    generator: IndexMap,
    bound: f64,
    label: String,
}

impl fmt::Debug for DiscreteSignal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiscreteSignal")
            .field("label", &self.label)
            .field("bound", &self.bound)
            .finish()
    }
}

impl DiscreteSignal {
    pub fn new(
        label: impl Into<String>,
        bound: f64,
        generator: impl Fn(u64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            generator: Arc::new(generator),
            bound: bound.abs(),
            label: label.into(),
        }
    }

    /// Wraps a table of values `φ(1), …, φ(len)`; indices past the end hold the last value.
    pub fn from_values(label: impl Into<String>, values: Vec<f64>) -> Self {
        let bound = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let values = Arc::new(values);
        DiscreteSignal::new(label, bound, move |n| {
            let i = (n.max(1) - 1) as usize;
            values.get(i).or(values.last()).copied().unwrap_or(0.0)
        })
    }

    #[inline]
    pub fn eval(&self, n: u64) -> f64 {
        (self.generator)(n)
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

    pub fn generator(&self) -> IndexMap {
        Arc::clone(&self.generator)
    }

    /// `φ(1), …, φ(n_max)` with the bound checked at every index.
    pub fn values(&self, n_max: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(n_max);
        for n in 1..=n_max as u64 {
            let v = self.eval(n);
            if !within_bound(v, self.bound) {
                return Err(Error::BoundViolation {
                    label: self.label.clone(),
                    at: n as f64,
                    value: v,
                    bound: self.bound,
                });
            }
            out.push(v);
        }
        Ok(out)
    }
}

/// Geometric sequence of window lengths `start·ratio^j`, `j = 0..count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaGrid {
    pub start: f64,
    pub ratio: f64,
    pub count: usize,
}

impl ThetaGrid {
    pub fn new(start: f64, ratio: f64, count: usize) -> Self {
        Self { start, ratio, count }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count)
            .map(|j| self.start * self.ratio.powi(j as i32))
            .collect()
    }

    pub fn last(&self) -> f64 {
        self.start * self.ratio.powi(self.count.saturating_sub(1) as i32)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start > 0.0 && self.start.is_finite()) {
            return Err(Error::InvalidGrid {
                field: "theta_grid",
                reason: format!("start must be positive, got {}", self.start),
            });
        }
        if !(self.ratio > 1.0 && self.ratio.is_finite()) {
            return Err(Error::InvalidGrid {
                field: "theta_grid",
                reason: format!("ratio must exceed 1, got {}", self.ratio),
            });
        }
        if self.count == 0 {
            return Err(Error::InvalidGrid {
                field: "theta_grid",
                reason: "at least one window length is required".into(),
            });
        }
        Ok(())
    }
}

/// Discretization and tail-window parameters for the continuous estimators.
///
/// `limsup_{x→∞}` is approximated over `[x_cut, x_max]`; the outer `θ → ∞`
/// limit is approximated by the last entry of `theta_grid`. On the
/// multiplicative side the same struct is read in log coordinates `u = ln x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_max: f64,
    pub step: f64,
    pub x_cut: f64,
    pub theta_grid: ThetaGrid,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            x_max: 5000.0,
            step: 0.01,
            x_cut: 1000.0,
            theta_grid: ThetaGrid::new(1.0, 2.0, 10),
        }
    }
}

fn near_integer(v: f64) -> bool {
    (v - v.round()).abs() <= 1e-6 * v.abs().max(1.0)
}

impl GridSpec {
    /// Default log-coordinate grid for multiplicative signals: `x ∈ [1, e^168]`.
    /// The tail starts at `u = 40`, enough room for the tenth convolution
    /// power of the `r = 1` Hardy kernel.
    pub fn multiplicative_default() -> Self {
        Self {
            x_max: 168.0,
            step: 0.01,
            x_cut: 40.0,
            theta_grid: ThetaGrid::new(1.0, 2.0, 7),
        }
    }

    pub fn thetas(&self) -> Vec<f64> {
        self.theta_grid.values()
    }

    pub fn tail_len(&self) -> f64 {
        self.x_max - self.x_cut
    }

    /// Number of grid cells in `[x_cut, x_max]`.
    pub fn tail_cells(&self) -> usize {
        (self.tail_len() / self.step).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidGrid {
                field: "step",
                reason: format!("step must be positive, got {}", self.step),
            });
        }
        if !(self.x_cut >= 0.0 && self.x_cut < self.x_max && self.x_max.is_finite()) {
            return Err(Error::InvalidGrid {
                field: "x_cut",
                reason: format!("need 0 <= x_cut < x_max, got x_cut = {}, x_max = {}", self.x_cut, self.x_max),
            });
        }
        if !near_integer(self.x_cut / self.step) || !near_integer(self.x_max / self.step) {
            return Err(Error::InvalidGrid {
                field: "step",
                reason: "x_cut and x_max must be multiples of the step".into(),
            });
        }
        self.theta_grid.validate()?;
        let last = self.theta_grid.last();
        if last > self.tail_len() / 2.0 * (1.0 + 1e-12) {
            return Err(Error::InvalidGrid {
                field: "theta_grid",
                reason: format!(
                    "largest window {} exceeds half the tail window ({})",
                    last,
                    self.tail_len() / 2.0
                ),
            });
        }
        if self.theta_grid.start < self.step {
            return Err(Error::InvalidGrid {
                field: "theta_grid",
                reason: format!("smallest window {} is shorter than the step {}", self.theta_grid.start, self.step),
            });
        }
        Ok(())
    }
}

/// Weight applied to the integrand when building a prefix table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weight {
    Unit,
    /// `φ(t)/t`, the Haar weight on (0, ∞). Requires a positive origin.
    OneOverT,
}

/// Cumulative midpoint-rule integrals on a uniform grid.
#[derive(Debug, Clone)]
pub struct PrefixTable {
    origin: f64,
    step: f64,
    cumulative: Vec<f64>,
}

impl PrefixTable {
    /// Builds a table directly from per-cell integrals.
    pub fn from_cell_integrals(origin: f64, step: f64, cells: impl IntoIterator<Item = f64>) -> Self {
        let mut cumulative = vec![0.0];
        let mut acc = KahanSum::new();
        for c in cells {
            acc.add(c);
            cumulative.push(acc.value());
        }
        Self {
            origin,
            step,
            cumulative,
        }
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn cells(&self) -> usize {
        self.cumulative.len() - 1
    }

    pub fn end(&self) -> f64 {
        self.origin + self.cells() as f64 * self.step
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// Integral from the origin to `x`, linearly interpolated between grid points.
    pub fn integral_to(&self, x: f64) -> Result<f64> {
        let s = (x - self.origin) / self.step;
        let n = self.cells() as f64;
        let tol = 1e-9 * n.max(1.0);
        if s < -tol || s > n + tol {
            return Err(Error::Range {
                start: x,
                end: x,
                lo: self.origin,
                hi: self.end(),
            });
        }
        let r = s.round();
        if (s - r).abs() <= 1e-9 * s.abs().max(1.0) {
            return Ok(self.cumulative[r.clamp(0.0, n) as usize]);
        }
        let j = (s.floor().max(0.0) as usize).min(self.cells() - 1);
        let frac = s - j as f64;
        let (a, b) = (self.cumulative[j], self.cumulative[j + 1]);
        Ok(a + (b - a) * frac)
    }

    /// `(1/θ)∫_x^{x+θ} φ(t) dt` from the table.
    pub fn window_mean(&self, x: f64, theta: f64) -> Result<f64> {
        if theta < self.step * (1.0 - 1e-9) {
            return Err(Error::DegenerateWindow {
                theta,
                step: self.step,
            });
        }
        let (lo, hi) = (self.origin, self.end());
        let slack = 1e-9 * self.step;
        if x < lo - slack || x + theta > hi + slack {
            return Err(Error::Range {
                start: x,
                end: x + theta,
                lo,
                hi,
            });
        }
        Ok((self.integral_to(x + theta)? - self.integral_to(x)?) / theta)
    }

    /// Supremum and infimum of the window means over grid-aligned starts
    /// `x ∈ [x_lo, x_hi − θ]`.
    pub fn window_extremes(&self, x_lo: f64, x_hi: f64, theta: f64) -> Result<(f64, f64)> {
        if theta < self.step * (1.0 - 1e-9) {
            return Err(Error::DegenerateWindow {
                theta,
                step: self.step,
            });
        }
        let start = (x_lo - self.origin) / self.step;
        let stop = (x_hi - theta - self.origin) / self.step;
        let width = theta / self.step;
        if start < -1e-6 || x_hi > self.end() + 1e-9 * self.step || stop < start - 1e-6 {
            return Err(Error::Range {
                start: x_lo,
                end: x_hi,
                lo: self.origin,
                hi: self.end(),
            });
        }
        let i0 = start.round().max(0.0) as usize;
        let i1 = (stop + 1e-6).floor().max(i0 as f64) as usize;
        let mut sup = f64::NEG_INFINITY;
        let mut inf = f64::INFINITY;
        if near_integer(start) && near_integer(width) {
            let w = width.round() as usize;
            let c = &self.cumulative;
            for i in i0..=i1 {
                let m = (c[i + w] - c[i]) / theta;
                sup = sup.max(m);
                inf = inf.min(m);
            }
        } else {
            for i in i0..=i1 {
                let x = self.origin + i as f64 * self.step;
                let m = self.window_mean(x, theta)?;
                sup = sup.max(m);
                inf = inf.min(m);
            }
        }
        Ok((sup, inf))
    }
}

/// Free-function form of [`PrefixTable::window_mean`].
pub fn window_mean(table: &PrefixTable, x: f64, theta: f64) -> Result<f64> {
    table.window_mean(x, theta)
}

/// Midpoint-rule cumulative integral of `φ·weight` over `[start, end]`.
///
/// The step is adjusted to divide the interval evenly.
pub fn build_prefix(
    signal: &ContinuousSignal,
    start: f64,
    end: f64,
    step: f64,
    weight: Weight,
) -> Result<PrefixTable> {
    if !(step > 0.0) || !(end > start) {
        return Err(Error::InvalidGrid {
            field: "step",
            reason: format!("need step > 0 and end > start, got [{start}, {end}] with step {step}"),
        });
    }
    if weight == Weight::OneOverT && start <= 0.0 {
        return Err(Error::Precondition(
            "one-over-t weighting needs a positive origin".into(),
        ));
    }
    let cells = ((end - start) / step).round().max(1.0) as usize;
    let h = (end - start) / cells as f64;
    let mut integrals = Vec::with_capacity(cells);
    for j in 0..cells {
        let mid = start + (j as f64 + 0.5) * h;
        let v = signal.checked_eval(mid)?;
        integrals.push(match weight {
            Weight::Unit => v * h,
            Weight::OneOverT => v * h / mid,
        });
    }
    Ok(PrefixTable::from_cell_integrals(start, h, integrals))
}

/// Prefix table of `φ` over the tail window `[x_cut, x_max]` of a grid.
pub fn tail_prefix(signal: &ContinuousSignal, grid: &GridSpec) -> Result<PrefixTable> {
    build_prefix(signal, grid.x_cut, grid.x_max, grid.step, Weight::Unit)
}

// ---------------------------------------------------------------------------
// Generator library
// ---------------------------------------------------------------------------

/// Where a library signal lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    #[default]
    Continuous,
    Discrete,
    Multiplicative,
}

#[derive(Debug, Clone)]
pub enum LibrarySignal {
    Continuous(ContinuousSignal),
    Discrete(DiscreteSignal),
    Multiplicative(MultiplicativeSignal),
}

impl LibrarySignal {
    pub fn label(&self) -> &str {
        match self {
            LibrarySignal::Continuous(s) => s.label(),
            LibrarySignal::Discrete(s) => s.label(),
            LibrarySignal::Multiplicative(s) => s.label(),
        }
    }

    pub fn with_label(self, label: impl Into<String>) -> Self {
        match self {
            LibrarySignal::Continuous(s) => LibrarySignal::Continuous(s.with_label(label)),
            LibrarySignal::Discrete(s) => LibrarySignal::Discrete(s.with_label(label)),
            LibrarySignal::Multiplicative(s) => LibrarySignal::Multiplicative(s.with_label(label)),
        }
    }

    pub fn domain(&self) -> Domain {
        match self {
            LibrarySignal::Continuous(_) => Domain::Continuous,
            LibrarySignal::Discrete(_) => Domain::Discrete,
            LibrarySignal::Multiplicative(_) => Domain::Multiplicative,
        }
    }

    pub fn into_continuous(self) -> Option<ContinuousSignal> {
        match self {
            LibrarySignal::Continuous(s) => Some(s),
            _ => None,
        }
    }

    pub fn into_discrete(self) -> Option<DiscreteSignal> {
        match self {
            LibrarySignal::Discrete(s) => Some(s),
            _ => None,
        }
    }

    pub fn into_multiplicative(self) -> Option<MultiplicativeSignal> {
        match self {
            LibrarySignal::Multiplicative(s) => Some(s),
            _ => None,
        }
    }
}

pub const SIGNAL_NAMES: [&str; 7] = [
    "constant",
    "sinusoid",
    "log_cosine",
    "log_block",
    "alternating",
    "convergent_plus_decay",
    "sampled",
];

pub(crate) fn param_f64(params: &ParamMap, name: &str, key: &str, default: Option<f64>) -> Result<f64> {
    match params.get(key) {
        Some(v) => v
            .as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Error::param(name, key, "expected a finite number")),
        None => default.ok_or_else(|| Error::param(name, key, "missing required parameter")),
    }
}

pub(crate) fn param_str<'a>(params: &'a ParamMap, name: &str, key: &str, default: &'a str) -> Result<&'a str> {
    match params.get(key) {
        Some(v) => v
            .as_str()
            .ok_or_else(|| Error::param(name, key, "expected a string")),
        None => Ok(default),
    }
}

pub(crate) fn param_bool(params: &ParamMap, name: &str, key: &str, default: bool) -> Result<bool> {
    match params.get(key) {
        Some(v) => v
            .as_bool()
            .ok_or_else(|| Error::param(name, key, "expected a boolean")),
        None => Ok(default),
    }
}

pub(crate) fn param_f64_list(params: &ParamMap, name: &str, key: &str) -> Result<Vec<f64>> {
    let arr = params
        .get(key)
        .ok_or_else(|| Error::param(name, key, "missing required parameter"))?
        .as_array()
        .ok_or_else(|| Error::param(name, key, "expected an array of numbers"))?;
    arr.iter()
        .map(|v| {
            v.as_f64()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::param(name, key, "expected an array of finite numbers"))
        })
        .collect()
}

fn check_keys(params: &ParamMap, name: &str, allowed: &[&str]) -> Result<()> {
    for key in params.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(Error::param(name, key, "unknown parameter"));
        }
    }
    Ok(())
}

/// Index `k` of the block `[b^k, b^{k+1})` containing `t > 0`.
pub(crate) fn log_block_index(t: f64, base: f64) -> i64 {
    let mut k = (t.ln() / base.ln()).floor() as i64;
    // Repair rounding at exact powers of the base.
    if base.powi(k as i32 + 1) <= t {
        k += 1;
    } else if base.powi(k as i32) > t {
        k -= 1;
    }
    k
}

/// Block parity pattern shared by every `log_block` variant.
#[derive(Debug, Clone, Copy)]
struct Blocks {
    base: f64,
    low: f64,
    high: f64,
}

impl Blocks {
    fn at_index(&self, k: i64) -> f64 {
        if k.rem_euclid(2) == 0 {
            self.high
        } else {
            self.low
        }
    }

    /// Value at a point of (0, ∞): `high` on `[b^{2k}, b^{2k+1})`.
    fn at(&self, t: f64) -> f64 {
        if t > 0.0 {
            self.at_index(log_block_index(t, self.base))
        } else {
            self.low
        }
    }

    fn bound(&self) -> f64 {
        self.low.abs().max(self.high.abs())
    }
}

/// Looks up a named generator.
///
/// The optional `domain` parameter selects ℝ (`continuous`, default), ℕ
/// (`discrete`) or (0, ∞) (`multiplicative`); `alternating` defaults to ℕ.
pub fn signal_library(name: &str, params: &ParamMap) -> Result<LibrarySignal> {
    let default_domain = if name == "alternating" { "discrete" } else { "continuous" };
    let domain = match param_str(params, name, "domain", default_domain)? {
        "continuous" => Domain::Continuous,
        "discrete" => Domain::Discrete,
        "multiplicative" => Domain::Multiplicative,
        other => return Err(Error::param(name, "domain", format!("unknown domain `{other}`"))),
    };
    let mut params = params.clone();
    params.remove("domain");
    let params = &params;

    let out = match name {
        "constant" => {
            check_keys(params, name, &["c"])?;
            let c = param_f64(params, name, "c", None)?;
            let label = format!("constant({c})");
            match domain {
                Domain::Continuous => LibrarySignal::Continuous(ContinuousSignal::new(label, c, move |_| c)),
                Domain::Discrete => LibrarySignal::Discrete(DiscreteSignal::new(label, c, move |_| c)),
                Domain::Multiplicative => {
                    LibrarySignal::Multiplicative(MultiplicativeSignal::new(label, c, move |_| c))
                }
            }
        }
        "sinusoid" => {
            check_keys(params, name, &["omega"])?;
            let w = param_f64(params, name, "omega", Some(1.0))?;
            let label = format!("sinusoid({w})");
            match domain {
                Domain::Continuous => {
                    LibrarySignal::Continuous(ContinuousSignal::new(label, 1.0, move |x| (w * x).sin()))
                }
                Domain::Discrete => {
                    LibrarySignal::Discrete(DiscreteSignal::new(label, 1.0, move |n| (w * n as f64).sin()))
                }
                Domain::Multiplicative => {
                    LibrarySignal::Multiplicative(MultiplicativeSignal::new(label, 1.0, move |x| (w * x).sin()))
                }
            }
        }
        "log_cosine" => {
            check_keys(params, name, &[])?;
            let label = "log_cosine".to_string();
            match domain {
                Domain::Continuous => LibrarySignal::Continuous(ContinuousSignal::new(label, 1.0, |x| {
                    x.max(1.0).ln().cos()
                })),
                Domain::Discrete => {
                    LibrarySignal::Discrete(DiscreteSignal::new(label, 1.0, |n| (n as f64).ln().cos()))
                }
                Domain::Multiplicative => {
                    LibrarySignal::Multiplicative(MultiplicativeSignal::new(label, 1.0, |x| x.ln().cos()))
                }
            }
        }
        "log_block" => {
            check_keys(params, name, &["base", "low", "high", "warp", "exponent"])?;
            let base = param_f64(params, name, "base", Some(2.0))?;
            if base <= 1.0 {
                return Err(Error::param(name, "base", format!("base must exceed 1, got {base}")));
            }
            let blocks = Blocks {
                base,
                low: param_f64(params, name, "low", Some(0.0))?,
                high: param_f64(params, name, "high", Some(1.0))?,
            };
            let warp = param_str(params, name, "warp", "none")?;
            let exponent = param_f64(params, name, "exponent", Some(1.0))?;
            if exponent <= 0.0 {
                return Err(Error::param(name, "exponent", "exponent must be positive"));
            }
            let label = if warp == "none" {
                format!("log_block({base})")
            } else if exponent == 1.0 {
                format!("log_block({base},{warp})")
            } else {
                format!("log_block({base},{warp},{exponent})")
            };
            match (domain, warp) {
                (Domain::Continuous, "none") => {
                    LibrarySignal::Continuous(ContinuousSignal::new(label, blocks.bound(), move |x| blocks.at(x)))
                }
                // φ(e^{x^p}): a square wave of period 2 ln b in x^p.
                (Domain::Continuous, "exp") => {
                    let lb = base.ln();
                    LibrarySignal::Continuous(ContinuousSignal::new(label, blocks.bound(), move |x| {
                        let u = x.signum() * x.abs().powf(exponent) / lb;
                        blocks.at_index(u.floor() as i64)
                    }))
                }
                (Domain::Discrete, "none") => LibrarySignal::Discrete(DiscreteSignal::new(
                    label,
                    blocks.bound(),
                    move |n| blocks.at(n as f64),
                )),
                (Domain::Multiplicative, "none") => LibrarySignal::Multiplicative(MultiplicativeSignal::new(
                    label,
                    blocks.bound(),
                    move |x| blocks.at(x),
                )),
                (_, other) => {
                    return Err(Error::param(
                        name,
                        "warp",
                        format!("warp `{other}` is not available in this domain"),
                    ))
                }
            }
        }
        "alternating" => {
            check_keys(params, name, &[])?;
            match domain {
                Domain::Discrete => LibrarySignal::Discrete(DiscreteSignal::new("alternating", 1.0, |n| {
                    if n % 2 == 0 {
                        1.0
                    } else {
                        -1.0
                    }
                })),
                _ => {
                    return Err(Error::param(
                        name,
                        "domain",
                        "alternating is only defined on the natural numbers",
                    ))
                }
            }
        }
        "convergent_plus_decay" => {
            check_keys(params, name, &["alpha"])?;
            let alpha = param_f64(params, name, "alpha", None)?;
            let label = format!("convergent_plus_decay({alpha})");
            let bound = alpha.abs() + 1.0;
            // e^{-max(x,0)} keeps the generator bounded on the negative half-line.
            match domain {
                Domain::Continuous => LibrarySignal::Continuous(ContinuousSignal::new(label, bound, move |x| {
                    alpha + (-x.max(0.0)).exp() * x.sin()
                })),
                Domain::Discrete => LibrarySignal::Discrete(DiscreteSignal::new(label, bound, move |n| {
                    let x = n as f64;
                    alpha + (-x).exp() * x.sin()
                })),
                Domain::Multiplicative => {
                    LibrarySignal::Multiplicative(MultiplicativeSignal::new(label, bound, move |x| {
                        alpha + (-x.max(0.0)).exp() * x.sin()
                    }))
                }
            }
        }
        "sampled" => {
            check_keys(params, name, &["values", "cell", "origin", "periodic"])?;
            let values = param_f64_list(params, name, "values")?;
            if values.is_empty() {
                return Err(Error::param(name, "values", "value table is empty"));
            }
            let cell = param_f64(params, name, "cell", Some(1.0))?;
            if cell <= 0.0 {
                return Err(Error::param(name, "cell", "cell width must be positive"));
            }
            let origin = param_f64(params, name, "origin", Some(0.0))?;
            let periodic = param_bool(params, name, "periodic", true)?;
            let bound = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let len = values.len() as i64;
            let values = Arc::new(values);
            let index = move |k: i64| -> f64 {
                let i = if periodic { k.rem_euclid(len) } else { k.clamp(0, len - 1) };
                values[i as usize]
            };
            let label = format!("sampled({})", len);
            match domain {
                Domain::Continuous => LibrarySignal::Continuous(ContinuousSignal::new(label, bound, move |x| {
                    index(((x - origin) / cell).floor() as i64)
                })),
                Domain::Multiplicative => {
                    LibrarySignal::Multiplicative(MultiplicativeSignal::new(label, bound, move |x| {
                        index(((x - origin) / cell).floor() as i64)
                    }))
                }
                Domain::Discrete => {
                    LibrarySignal::Discrete(DiscreteSignal::new(label, bound, move |n| index(n as i64 - 1)))
                }
            }
        }
        other => return Err(Error::UnknownSignal(other.to_string())),
    };
    Ok(out)
}

/// Builds a parameter map from `(key, number)` pairs.
pub fn params<const N: usize>(pairs: [(&str, f64); N]) -> ParamMap {
    pairs
        .into_iter()
        .map(|(k, v)| (k.to_string(), Value::from(v)))
        .collect()
}

/// Continuous library signal or an error naming the mismatch.
pub fn continuous_signal(name: &str, params: &ParamMap) -> Result<ContinuousSignal> {
    match signal_library(name, params)? {
        LibrarySignal::Continuous(s) => Ok(s),
        other => Err(Error::param(
            name,
            "domain",
            format!("expected a continuous signal, got {:?}", other.domain()),
        )),
    }
}

pub fn discrete_signal(name: &str, params: &ParamMap) -> Result<DiscreteSignal> {
    let mut p = params.clone();
    p.insert("domain".into(), Value::from("discrete"));
    match signal_library(name, &p)? {
        LibrarySignal::Discrete(s) => Ok(s),
        _ => unreachable!("domain forced to discrete"),
    }
}

pub fn multiplicative_signal(name: &str, params: &ParamMap) -> Result<MultiplicativeSignal> {
    let mut p = params.clone();
    p.insert("domain".into(), Value::from("multiplicative"));
    match signal_library(name, &p)? {
        LibrarySignal::Multiplicative(s) => Ok(s),
        _ => unreachable!("domain forced to multiplicative"),
    }
}
