//! Consistency harness: named suites of consistency checks over signal × kernel
//! cases, each producing a pass/fail/inconclusive report.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convfunc::{
    f_infinity, residual_check, tauberian_check, upper_f, upper_p, wiener_cross_check, SummabilityVerdict,
    SweepPoint, Tolerances, VerdictStatus,
};
use crate::error::{Error, Result};
use crate::holder::{
    bridge_q_upper, c_infinity_test, c_infinity_upper, holder_chain, logarithmic_method, DiscreteGrid,
};
use crate::kernel::{classify, default_xi_grid, ClassifyTolerances, Kernel, KernelShape};
use crate::mellin::{mellin_convolve, mellin_pullback, q_summability_test, upper_q, wrap_log, MellinKernel, MultiplicativeSignal};
use crate::signal::{
    continuous_signal, discrete_signal, multiplicative_signal, params, ContinuousSignal, DiscreteSignal, GridSpec,
    LibrarySignal, ParamMap,
};

/// Largest number of cases a single suite may expand to.
pub const MAX_CASES: usize = 200;

pub const SUITES: [&str; 10] = [
    "smoke",
    "residual",
    "theorem42",
    "chain",
    "tauberian",
    "wiener",
    "kernels",
    "mellin",
    "discrete",
    "full",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub name: String,
    pub points: Vec<SweepPoint>,
}

/// Outcome of one theorem check on one case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub theorem_id: String,
    pub status: Status,
    pub premise_met: bool,
    pub signal: String,
    pub kernel: String,
    pub discrepancies: Vec<Discrepancy>,
    pub measurements: Vec<Measurement>,
    pub unstable: bool,
    pub note: String,
    pub traces: Vec<Trace>,
}

impl TheoremReport {
    pub fn new(theorem_id: &str, signal: &str, kernel: &str) -> Self {
        Self {
            theorem_id: theorem_id.to_string(),
            status: Status::Pass,
            premise_met: true,
            signal: signal.to_string(),
            kernel: kernel.to_string(),
            discrepancies: Vec::new(),
            measurements: Vec::new(),
            unstable: false,
            note: String::new(),
            traces: Vec::new(),
        }
    }

    pub fn check(&mut self, name: &str, value: f64, tolerance: f64) {
        self.discrepancies.push(Discrepancy {
            name: name.to_string(),
            value,
            tolerance,
        });
    }

    pub fn measure(&mut self, name: &str, value: f64) {
        self.measurements.push(Measurement {
            name: name.to_string(),
            value,
        });
    }

    pub fn measurement(&self, name: &str) -> Option<f64> {
        self.measurements.iter().find(|m| m.name == name).map(|m| m.value)
    }

    pub fn discrepancy(&self, name: &str) -> Option<&Discrepancy> {
        self.discrepancies.iter().find(|d| d.name == name)
    }

    pub fn add_trace(&mut self, name: &str, points: Vec<SweepPoint>) {
        self.traces.push(Trace {
            name: name.to_string(),
            points,
        });
    }

    pub fn set_unstable(&mut self, unstable: bool) {
        self.unstable |= unstable;
    }

    pub fn set_note(&mut self, note: impl Into<String>) {
        self.note = note.into();
    }

    /// Marks the premise as unmet: the report passes and says why.
    pub fn vacuous(mut self, note: impl Into<String>) -> Self {
        self.premise_met = false;
        self.status = Status::Pass;
        self.note = note.into();
        self
    }

    /// Pass iff every discrepancy is within tolerance; a failure with an
    /// unstable sub-estimate is inconclusive.
    pub fn finish(mut self) -> Self {
        let ok = self
            .discrepancies
            .iter()
            .all(|d| d.value.is_finite() && d.value <= d.tolerance);
        self.status = if ok {
            Status::Pass
        } else if self.unstable {
            Status::Inconclusive
        } else {
            Status::Fail
        };
        self
    }

    fn from_error(theorem_id: &str, signal: &str, kernel: &str, err: Error) -> Self {
        let report = Self::new(theorem_id, signal, kernel);
        match err {
            Error::Precondition(msg) => report.vacuous(format!("premise not satisfied: {msg}")),
            other => {
                let mut r = report;
                r.status = Status::Fail;
                r.note = format!("error: {other}");
                r
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub pass: usize,
    pub fail: usize,
    pub inconclusive: usize,
    /// Passing reports whose premise was not satisfied.
    pub vacuous: usize,
}

impl Summary {
    pub fn of(reports: &[TheoremReport]) -> Self {
        let mut s = Summary {
            total: reports.len(),
            ..Summary::default()
        };
        for r in reports {
            match r.status {
                Status::Pass if !r.premise_met => s.vacuous += 1,
                Status::Pass => s.pass += 1,
                Status::Fail => s.fail += 1,
                Status::Inconclusive => s.inconclusive += 1,
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub suite: String,
    pub summary: Summary,
    pub reports: Vec<TheoremReport>,
}

/// Everything a suite runs over.
#[derive(Debug, Clone)]
pub struct SuiteInput {
    pub continuous: Vec<ContinuousSignal>,
    pub multiplicative: Vec<MultiplicativeSignal>,
    pub discrete: Vec<DiscreteSignal>,
    pub kernels: Vec<Kernel>,
    pub grid: GridSpec,
    pub log_grid: GridSpec,
    pub discrete_grid: DiscreteGrid,
    pub tolerances: Tolerances,
}

impl SuiteInput {
    pub fn new(signals: Vec<LibrarySignal>, kernels: Vec<Kernel>) -> Self {
        let mut input = Self {
            continuous: Vec::new(),
            multiplicative: Vec::new(),
            discrete: Vec::new(),
            kernels,
            grid: GridSpec::default(),
            log_grid: GridSpec::multiplicative_default(),
            discrete_grid: DiscreteGrid::default(),
            tolerances: Tolerances::default(),
        };
        for s in signals {
            match s {
                LibrarySignal::Continuous(s) => input.continuous.push(s),
                LibrarySignal::Multiplicative(s) => input.multiplicative.push(s),
                LibrarySignal::Discrete(s) => input.discrete.push(s),
            }
        }
        input
    }

    /// The built-in library: five signals per side, four closed-form kernels.
    pub fn library_default() -> Self {
        let e = std::f64::consts::E;
        let mut square = params([("base", e)]);
        square.insert("warp".into(), "exp".into());
        let mut table = params([("cell", 0.75)]);
        table.insert("values".into(), serde_json::json!([1.0, 0.0, 0.0, 0.5]));
        let continuous = vec![
            continuous_signal("constant", &params([("c", 0.7)])),
            continuous_signal("sinusoid", &params([("omega", 1.0)])),
            continuous_signal("log_block", &square),
            continuous_signal("convergent_plus_decay", &params([("alpha", 0.3)])),
            continuous_signal("sampled", &table),
        ];
        let multiplicative = vec![
            multiplicative_signal("constant", &params([("c", 0.7)])),
            multiplicative_signal("log_cosine", &ParamMap::new()),
            multiplicative_signal("log_block", &params([("base", 2.0)])),
            multiplicative_signal("log_block", &params([("base", e), ("low", -1.0), ("high", 1.0)])),
        ];
        let discrete = vec![
            discrete_signal("constant", &params([("c", 0.7)])),
            discrete_signal("log_cosine", &ParamMap::new()),
            discrete_signal("log_block", &params([("base", 2.0)])),
            discrete_signal("alternating", &ParamMap::new()),
        ];
        Self {
            continuous: continuous.into_iter().map(|s| s.expect("library signal")).collect(),
            multiplicative: multiplicative.into_iter().map(|s| s.expect("library signal")).collect(),
            discrete: discrete.into_iter().map(|s| s.expect("library signal")).collect(),
            kernels: vec![
                Kernel::exp(1.0),
                Kernel::gaussian(1.0, 0.0),
                Kernel::erlang(2, 1.0),
                Kernel::boxcar(1.0),
            ],
            grid: GridSpec::default(),
            log_grid: GridSpec::multiplicative_default(),
            discrete_grid: DiscreteGrid::default(),
            tolerances: Tolerances::default(),
        }
    }

    /// Multiplicative kernels `g_r` for every exponential kernel; `g_1` if there are none.
    fn mellin_kernels(&self) -> Vec<MellinKernel> {
        let out: Vec<MellinKernel> = self
            .kernels
            .iter()
            .filter_map(|k| match k.shape() {
                KernelShape::Exp { rate } => Some(MellinKernel::hardy(*rate)),
                _ => None,
            })
            .collect();
        if out.is_empty() {
            vec![MellinKernel::hardy(1.0)]
        } else {
            out
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Case {
    Smoke(usize, usize),
    Residual(usize, usize),
    FInfinity(usize, usize),
    Chain(usize, usize),
    Tauberian(usize, usize),
    Wiener(usize),
    Class(usize),
    RouteIdentity(usize),
    QUniform(usize),
    MellinLimit(usize, usize),
    HardyAbelian(usize, usize),
    CUniform(usize),
    Logarithmic(usize),
    Bridge(usize),
    HolderChain(usize),
}

fn pairs(n: usize, m: usize, f: fn(usize, usize) -> Case) -> Vec<Case> {
    (0..n).flat_map(|i| (0..m).map(move |j| f(i, j))).collect()
}

fn cases(suite: &str, input: &SuiteInput) -> Result<Vec<Case>> {
    let (nc, nk) = (input.continuous.len(), input.kernels.len());
    let nm = input.multiplicative.len();
    let ng = input.mellin_kernels().len();
    let nd = input.discrete.len();
    Ok(match suite {
        "smoke" => pairs(nc, nk, Case::Smoke),
        "residual" => pairs(nc, nk, Case::Residual),
        "theorem42" => pairs(nc, nk, Case::FInfinity),
        "chain" => pairs(nc, nk, Case::Chain),
        "tauberian" => pairs(nc, nk, Case::Tauberian),
        "wiener" => (0..nc).map(Case::Wiener).collect(),
        "kernels" => (0..nk).map(Case::Class).collect(),
        "mellin" => {
            let mut v: Vec<Case> = (0..nm).flat_map(|i| [Case::RouteIdentity(i), Case::QUniform(i)]).collect();
            v.extend(pairs(nm, ng, Case::MellinLimit));
            v.extend(pairs(nm, ng, Case::HardyAbelian));
            v
        }
        "discrete" => (0..nd)
            .flat_map(|i| [Case::CUniform(i), Case::Logarithmic(i), Case::Bridge(i), Case::HolderChain(i)])
            .collect(),
        "full" => {
            let mut v = Vec::new();
            for s in &SUITES[..SUITES.len() - 1] {
                v.extend(cases(s, input)?);
            }
            v
        }
        other => return Err(Error::UnknownSuite(other.to_string())),
    })
}

/// Runs a named suite. Cases run in parallel; reports keep case order.
pub fn run_suite(suite: &str, input: &SuiteInput) -> Result<SuiteResult> {
    let cases = cases(suite, input)?;
    if cases.len() > MAX_CASES {
        return Err(Error::Precondition(format!(
            "suite `{suite}` expands to {} cases, the limit is {MAX_CASES}",
            cases.len()
        )));
    }
    input.grid.validate()?;
    input.log_grid.validate()?;
    input.discrete_grid.validate()?;
    let reports: Vec<TheoremReport> = cases.par_iter().map(|c| run_case(*c, input)).collect();
    Ok(SuiteResult {
        suite: suite.to_string(),
        summary: Summary::of(&reports),
        reports,
    })
}

fn case_labels(case: Case, input: &SuiteInput) -> (&'static str, String, String) {
    let c = |i: usize| input.continuous[i].label().to_string();
    let k = |j: usize| input.kernels[j].label().to_string();
    let m = |i: usize| input.multiplicative[i].label().to_string();
    let d = |i: usize| input.discrete[i].label().to_string();
    let g = |j: usize| input.mellin_kernels()[j].label().to_string();
    let none = || "-".to_string();
    match case {
        Case::Smoke(i, j) => ("SMOKE", c(i), k(j)),
        Case::Residual(i, j) => ("L3.1", c(i), k(j)),
        Case::FInfinity(i, j) => ("T4.2", c(i), k(j)),
        Case::Chain(i, j) => ("T5.5-chain", c(i), k(j)),
        Case::Tauberian(i, j) => ("T5.6", c(i), k(j)),
        Case::Wiener(i) => (
            "T5.1",
            c(i),
            input.kernels.iter().map(|k| k.label()).collect::<Vec<_>>().join("+"),
        ),
        Case::Class(j) => ("T2.6", none(), k(j)),
        Case::RouteIdentity(i) => ("L6.1", m(i), none()),
        Case::QUniform(i) => ("T6.7", m(i), none()),
        Case::MellinLimit(i, j) => ("T6.5", m(i), g(j)),
        Case::HardyAbelian(i, j) => ("T6.9", m(i), g(j)),
        Case::CUniform(i) => ("T7.1", d(i), none()),
        Case::Logarithmic(i) => ("T7.2", d(i), none()),
        Case::Bridge(i) => ("V-bridge", d(i), none()),
        Case::HolderChain(i) => ("C-chain", d(i), none()),
    }
}

fn run_case(case: Case, input: &SuiteInput) -> TheoremReport {
    let (id, signal, kernel) = case_labels(case, input);
    match evaluate(case, input, id, &signal, &kernel) {
        Ok(r) => r,
        Err(e) => TheoremReport::from_error(id, &signal, &kernel, e),
    }
}

/// Uniformity verdict as a report: summable or not summable passes, an
/// unsettled modulus is inconclusive.
fn verdict_report(mut report: TheoremReport, v: &SummabilityVerdict, eps: f64) -> TheoremReport {
    report.measure("upper", v.upper);
    report.measure("lower", v.lower);
    report.measure("alpha", v.alpha);
    report.measure("gap", v.gap);
    if let Some(m) = v.uniformity_modulus.last() {
        report.measure("uniformity_modulus", m.deviation);
    }
    report.add_trace(
        "uniformity_modulus",
        v.uniformity_modulus
            .iter()
            .map(|m| SweepPoint {
                param: m.param,
                upper: m.deviation,
                lower: -m.deviation,
            })
            .collect(),
    );
    match &v.status {
        VerdictStatus::NotSummable { .. } => report.set_note("not summable"),
        VerdictStatus::Summable { alpha } => report.set_note(format!("summable to {alpha:.6}")),
        VerdictStatus::Inconclusive { reason } => {
            let m = v.uniformity_modulus.last().map(|m| m.deviation).unwrap_or(f64::INFINITY);
            report.check("uniformity_modulus", m, eps);
            report.set_unstable(true);
            report.set_note(reason.clone());
        }
    }
    report.finish()
}

fn evaluate(case: Case, input: &SuiteInput, id: &str, signal: &str, kernel: &str) -> Result<TheoremReport> {
    let tol = &input.tolerances;
    let grid = &input.grid;
    let mut report = TheoremReport::new(id, signal, kernel);
    match case {
        Case::Smoke(i, j) => {
            let (s, k) = (&input.continuous[i], &input.kernels[j]);
            let f = upper_f(k, s, grid)?;
            let p = upper_p(s, grid)?;
            report.check("mass", (k.mass()? - 1.0).abs(), tol.quadrature);
            report.check("F_lower-P_lower", (f.lower - p.lower).max(0.0), tol.quadrature);
            report.check("P_lower-P_upper", (p.lower - p.upper).max(0.0), tol.quadrature);
            report.check("P_upper-F_upper", (p.upper - f.upper).max(0.0), tol.quadrature);
            report.check("F_bound", (f.upper.abs().max(f.lower.abs()) - s.bound()).max(0.0), tol.quadrature);
            report.measure("F_upper", f.upper);
            report.measure("F_lower", f.lower);
            report.measure("P_upper", p.upper);
            report.measure("P_lower", p.lower);
            Ok(report.finish())
        }
        Case::Residual(i, j) => residual_check(&input.kernels[j], &input.continuous[i], grid, tol.limit),
        Case::FInfinity(i, j) => {
            let (s, k) = (&input.continuous[i], &input.kernels[j]);
            let p = upper_p(s, grid)?;
            report.measure("upper_P", p.upper);
            match f_infinity(k, s, grid, tol.k_max, tol.sweep_eps) {
                Ok(fi) => {
                    report.check("F_inf-upper_P", (fi.upper - p.upper).abs(), tol.limit);
                    report.measure("F_inf", fi.upper);
                    report.measure("F_inf_lower", fi.lower);
                    report.measure("k", fi.trace.last().map(|t| t.param).unwrap_or(0.0));
                    report.measure("converged", if fi.converged { 1.0 } else { 0.0 });
                    // A k sweep that ran out of orders has not estimated the limit.
                    report.set_unstable(fi.unstable || !fi.converged || p.unstable);
                    report.add_trace("k_sweep", fi.trace);
                }
                Err(Error::NonMonotone { k, previous, next }) => {
                    report.check("k_monotonicity", (next - previous).abs(), tol.monotone_slack);
                    report.set_note(format!("sweep not monotone at k = {k}"));
                }
                Err(e) => return Err(e),
            }
            report.add_trace("theta_sweep", p.trace);
            Ok(report.finish())
        }
        Case::Chain(i, j) => {
            let (s, k) = (&input.continuous[i], &input.kernels[j]);
            let f = upper_f(k, s, grid)?;
            let p = upper_p(s, grid)?;
            report.check("F_lower-P_lower", (f.lower - p.lower).max(0.0), tol.limit);
            report.check("P_lower-P_upper", (p.lower - p.upper).max(0.0), tol.limit);
            report.check("P_upper-F_upper", (p.upper - f.upper).max(0.0), tol.limit);
            if f.gap() <= tol.limit {
                report.check("P_gap", p.gap(), tol.limit);
                report.check("alpha_P-alpha_F", (p.midpoint() - f.midpoint()).abs(), tol.limit);
            }
            report.measure("F_upper", f.upper);
            report.measure("F_lower", f.lower);
            report.measure("P_upper", p.upper);
            report.measure("P_lower", p.lower);
            report.set_unstable(f.unstable || p.unstable);
            Ok(report.finish())
        }
        Case::Tauberian(i, j) => tauberian_check(&input.kernels[j], &input.continuous[i], grid, tol.limit),
        Case::Wiener(i) => {
            let mut r = wiener_cross_check(&input.continuous[i], &input.kernels, grid, tol.limit)?;
            r.kernel = kernel.to_string();
            Ok(r)
        }
        Case::Class(j) => {
            let c = classify(&input.kernels[j], &default_xi_grid(), &ClassifyTolerances::default())?;
            let flag = |b: bool| if b { 1.0 } else { 0.0 };
            report.check("flat_without_strict_modulus", flag(c.flat && !c.strict_modulus), 0.0);
            report.measure("mass", c.mass);
            report.measure("flat", flag(c.flat));
            report.measure("strict_modulus", flag(c.strict_modulus));
            report.measure("wiener", flag(c.wiener));
            report.measure("max_modulus_off_zero", c.max_modulus_off_zero);
            report.measure("zero_candidates", c.zero_candidates.len() as f64);
            if let Some(z) = c.zero_candidates.iter().copied().filter(|z| *z > 0.0).reduce(f64::min) {
                report.measure("first_positive_zero", z);
            }
            report.set_note(c.inconclusive.join("; "));
            Ok(report.finish())
        }
        Case::RouteIdentity(i) => {
            let q = upper_q(&input.multiplicative[i], &input.log_grid, tol.route)?;
            report.check("route_gap", q.route_gap, tol.route);
            report.measure("Q_upper", q.direct.upper);
            report.measure("Q_lower", q.direct.lower);
            report.measure("P_upper(W)", q.pullback.upper);
            report.measure("P_lower(W)", q.pullback.lower);
            report.add_trace("direct", q.direct.trace);
            report.add_trace("pullback", q.pullback.trace);
            Ok(report.finish())
        }
        Case::QUniform(i) => {
            let v = q_summability_test(&input.multiplicative[i], &input.log_grid, tol.limit)?;
            Ok(verdict_report(report, &v, tol.limit))
        }
        Case::MellinLimit(i, j) => {
            let s = &input.multiplicative[i];
            let g = &input.mellin_kernels()[j];
            let q = upper_q(s, &input.log_grid, tol.route)?;
            let fi = f_infinity(&mellin_pullback(g), &wrap_log(s), &input.log_grid, tol.k_max, tol.sweep_eps)?;
            report.check("G_inf-upper_Q", (fi.upper - q.upper()).abs(), tol.limit);
            report.measure("G_inf", fi.upper);
            report.measure("upper_Q", q.upper());
            report.set_unstable(fi.unstable || !fi.converged || q.direct.unstable);
            report.add_trace("k_sweep", fi.trace);
            Ok(report.finish())
        }
        Case::HardyAbelian(i, j) => {
            let s = &input.multiplicative[i];
            let g = &input.mellin_kernels()[j];
            let lg = &input.log_grid;
            let out = mellin_convolve(g, s, lg)?;
            let (gu, gl) = out.extremes_from(lg.x_cut);
            report.measure("G_upper", gu);
            report.measure("G_lower", gl);
            if gu - gl > tol.limit {
                return Ok(report.vacuous("premise not satisfied: not summable by the Hardy-type average"));
            }
            let q = upper_q(s, lg, tol.route)?;
            report.check("Q_gap", q.upper() - q.lower(), tol.limit);
            report.check("alpha_Q-alpha_G", (0.5 * (q.upper() + q.lower()) - 0.5 * (gu + gl)).abs(), tol.limit);
            report.set_unstable(q.direct.unstable);
            Ok(report.finish())
        }
        Case::CUniform(i) => {
            let v = c_infinity_test(&input.discrete[i], &input.discrete_grid, tol.limit)?;
            Ok(verdict_report(report, &v, tol.limit))
        }
        Case::Logarithmic(i) => {
            let s = &input.discrete[i];
            let v = c_infinity_test(s, &input.discrete_grid, tol.limit)?;
            let l = logarithmic_method(s, &input.discrete_grid)?;
            report.measure("log_upper", l.upper);
            report.measure("log_lower", l.lower);
            match v.summable_alpha() {
                None => Ok(report.vacuous(format!("premise not satisfied: C_inf verdict is {}", v.status_label()))),
                Some(alpha) => {
                    report.measure("alpha", alpha);
                    report.check("log_upper-alpha", (l.upper - alpha).abs(), tol.limit);
                    report.check("log_lower-alpha", (l.lower - alpha).abs(), tol.limit);
                    Ok(report.finish())
                }
            }
        }
        Case::Bridge(i) => {
            let s = &input.discrete[i];
            let c = c_infinity_upper(s, &input.discrete_grid)?;
            let q = bridge_q_upper(s, &input.discrete_grid)?;
            report.check("upper_C_inf-upper_Q(V)", (c.upper - q.upper).abs(), tol.limit);
            report.check("lower_C_inf-lower_Q(V)", (c.lower - q.lower).abs(), tol.limit);
            report.measure("upper_C_inf", c.upper);
            report.measure("upper_Q(V)", q.upper);
            report.add_trace("c_infinity", c.trace);
            report.add_trace("q_of_v", q.trace);
            Ok(report.finish())
        }
        Case::HolderChain(i) => {
            let chain = holder_chain(&input.discrete[i], 4, &input.discrete_grid)?;
            let mut up = 0.0f64;
            let mut down = 0.0f64;
            for w in chain.windows(2) {
                up = up.max(w[1].upper - w[0].upper);
                down = down.max(w[0].lower - w[1].lower);
            }
            let last = chain.last().expect("four orders");
            // A slack-level comparison needs estimates settled to that slack.
            let spread = chain.iter().map(|e| e.stability_residual).fold(0.0, f64::max);
            if spread > tol.monotone_slack {
                report.set_unstable(true);
                report.set_note(format!("nested-tail spread {spread:.2e} exceeds the slack"));
            }
            report.check("upper_increase", up.max(0.0), tol.monotone_slack);
            report.check("lower_decrease", down.max(0.0), tol.monotone_slack);
            report.check("lower-upper", (last.lower - last.upper).max(0.0), tol.monotone_slack);
            for (k, e) in chain.iter().enumerate() {
                report.measure(&format!("C{}_upper", k + 1), e.upper);
                report.measure(&format!("C{}_lower", k + 1), e.lower);
            }
            report.add_trace(
                "k_sweep",
                chain
                    .iter()
                    .enumerate()
                    .map(|(k, e)| SweepPoint {
                        param: (k + 1) as f64,
                        upper: e.upper,
                        lower: e.lower,
                    })
                    .collect(),
            );
            Ok(report.finish())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_input(continuous: Vec<ContinuousSignal>, kernels: Vec<Kernel>) -> SuiteInput {
        let mut input = SuiteInput::new(Vec::new(), kernels);
        input.continuous = continuous;
        input.grid = GridSpec {
            x_max: 1200.0,
            step: 0.01,
            x_cut: 200.0,
            theta_grid: crate::signal::ThetaGrid::new(1.0, 2.0, 9),
        };
        input
    }

    #[test]
    fn smoke_on_constant() {
        let c = continuous_signal("constant", &params([("c", 0.7)])).unwrap();
        let r = run_suite("smoke", &small_input(vec![c], vec![Kernel::exp(1.0)])).unwrap();
        assert_eq!(r.reports.len(), 1);
        assert_eq!(r.reports[0].status, Status::Pass);
        assert!(r.reports[0].discrepancies.iter().all(|d| d.value <= 1e-6));
    }

    #[test]
    fn tauberian_suite_on_sine() {
        let s = continuous_signal("sinusoid", &params([("omega", 1.0)])).unwrap();
        let r = run_suite("tauberian", &small_input(vec![s], vec![Kernel::exp(1.0)])).unwrap();
        let rep = &r.reports[0];
        assert_eq!(rep.theorem_id, "T5.6");
        assert_eq!(rep.status, Status::Pass);
        assert!(rep.note.contains("condition fails"));
        assert!(rep.note.contains("P summable") && rep.note.contains("F not summable"));
    }

    #[test]
    fn unknown_suite() {
        let input = SuiteInput::new(Vec::new(), Vec::new());
        assert!(matches!(run_suite("nope", &input), Err(Error::UnknownSuite(_))));
    }

    #[test]
    fn case_limit() {
        let c = continuous_signal("constant", &params([("c", 0.7)])).unwrap();
        let input = small_input(vec![c; 21], vec![Kernel::exp(1.0); 10]);
        assert!(matches!(run_suite("smoke", &input), Err(Error::Precondition(_))));
    }

    #[test]
    fn finish_rules() {
        let mut r = TheoremReport::new("X", "s", "k");
        r.check("a", 0.5, 0.1);
        assert_eq!(r.clone().finish().status, Status::Fail);
        r.set_unstable(true);
        assert_eq!(r.finish().status, Status::Inconclusive);
        let v = TheoremReport::new("X", "s", "k").vacuous("premise not satisfied");
        assert!(v.status == Status::Pass && !v.premise_met);
        let s = Summary::of(&[v]);
        assert_eq!((s.pass, s.vacuous), (0, 1));
    }

    #[test]
    fn kernel_suite() {
        let input = small_input(Vec::new(), vec![Kernel::exp(1.0), Kernel::boxcar(1.0)]);
        let r = run_suite("kernels", &input).unwrap();
        assert!(r.reports.iter().all(|r| r.status == Status::Pass));
        assert_eq!(r.reports[0].measurement("wiener"), Some(1.0));
        assert_eq!(r.reports[1].measurement("wiener"), Some(0.0));
    }
}
