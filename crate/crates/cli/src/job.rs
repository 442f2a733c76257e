//! JSON job files: schema, validation and execution.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;
use sumlab_core::convfunc::STABILITY_TOL;
use sumlab_core::verify::{Summary, MAX_CASES};
use sumlab_core::{
    banach_upper, c_infinity_upper, f_infinity, holder_upper, kernel_library, logarithmic_method, run_suite,
    signal_library, upper_f, upper_p, upper_q, DiscreteGrid, GridSpec, Kernel, ParamMap, SuiteInput,
    SuiteResult, TheoremReport, Tolerances,
};

/// Problems that map to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl ConfigError {
    fn at(key: &str, err: impl std::fmt::Display) -> Self {
        ConfigError(format!("{key}: {err}"))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Component {
    pub name: String,
    #[serde(default)]
    pub params: ParamMap,
    #[serde(default)]
    pub label: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Output {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Task {
    Suite {
        suite: String,
    },
    Functional {
        functionals: Vec<String>,
        #[serde(default = "default_order")]
        k: u32,
    },
}

fn default_order() -> u32 {
    1
}

pub const FUNCTIONALS: [&str; 9] = [
    "upper_P",
    "upper_F",
    "upper_F_k",
    "F_infinity",
    "upper_Q",
    "holder",
    "c_infinity",
    "logarithmic",
    "banach",
];

/// Job file. Omitted signal or kernel lists fall back to the built-in library.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Job {
    #[serde(default)]
    pub signals: Option<Vec<Component>>,
    #[serde(default)]
    pub kernels: Option<Vec<Component>>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub log_grid: Option<GridSpec>,
    #[serde(default)]
    pub discrete_grid: Option<DiscreteGrid>,
    pub task: Task,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: Output,
}

impl Job {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::at("job", format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| ConfigError::at("job", e))
    }

    /// Builds and validates everything the run needs. Relative sample paths
    /// resolve against `base`.
    pub fn input(&self, base: &Path) -> Result<SuiteInput, ConfigError> {
        let mut input = SuiteInput::library_default();
        if let Some(signals) = &self.signals {
            let built = signals
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let s = signal_library(&c.name, &c.params).map_err(|e| ConfigError::at(&format!("signals[{i}]"), e))?;
                    Ok(match &c.label {
                        Some(l) => s.with_label(l.clone()),
                        None => s,
                    })
                })
                .collect::<Result<Vec<_>, ConfigError>>()?;
            let kernels = std::mem::take(&mut input.kernels);
            let (grid, log_grid, discrete_grid) = (input.grid, input.log_grid, input.discrete_grid);
            input = SuiteInput::new(built, kernels);
            input.grid = grid;
            input.log_grid = log_grid;
            input.discrete_grid = discrete_grid;
        }
        if let Some(kernels) = &self.kernels {
            input.kernels = kernels
                .iter()
                .enumerate()
                .map(|(i, c)| build_kernel(c, base).map_err(|e| ConfigError::at(&format!("kernels[{i}]"), e)))
                .collect::<Result<_, _>>()?;
        }
        if let Some(g) = self.grid {
            g.validate().map_err(|e| ConfigError::at("grid", e))?;
            input.grid = g;
        }
        if let Some(g) = self.log_grid {
            g.validate().map_err(|e| ConfigError::at("log_grid", e))?;
            input.log_grid = g;
        }
        if let Some(g) = self.discrete_grid {
            g.validate().map_err(|e| ConfigError::at("discrete_grid", e))?;
            input.discrete_grid = g;
        }
        input.tolerances = self.tolerances;
        if let Task::Functional { functionals, k } = &self.task {
            if let Some(f) = functionals.iter().find(|f| !FUNCTIONALS.contains(&f.as_str())) {
                return Err(ConfigError::at("task.functionals", format!("unknown functional `{f}`")));
            }
            if *k == 0 {
                return Err(ConfigError::at("task.k", "order must be at least 1"));
            }
        }
        Ok(input)
    }
}

fn build_kernel(c: &Component, base: &Path) -> Result<Kernel, String> {
    let kernel = if c.name == "sampled" {
        let path = c
            .params
            .get("path")
            .and_then(|v| v.as_str())
            .ok_or("sampled kernel needs a string `path` param")?;
        if let Some(extra) = c.params.keys().find(|k| *k != "path") {
            return Err(format!("unknown param `{extra}` for sampled kernel"));
        }
        let (ts, vs) = read_samples(&base.join(path))?;
        Kernel::from_samples(c.label.clone().unwrap_or_else(|| "sampled".into()), &ts, &vs).map_err(|e| e.to_string())?
    } else {
        kernel_library(&c.name, &c.params).map_err(|e| e.to_string())?
    };
    Ok(match &c.label {
        Some(l) => kernel.with_label(l.clone()),
        None => kernel,
    })
}

/// Two-column CSV of `(t, value)` with a header row.
fn read_samples(path: &Path) -> Result<(Vec<f64>, Vec<f64>), String> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let (mut ts, mut vs) = (Vec::new(), Vec::new());
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| format!("{}: {e}", path.display()))?;
        let field = |j: usize| -> Result<f64, String> {
            rec.get(j)
                .and_then(|s| s.trim().parse().ok())
                .ok_or(format!("{}: row {} needs two numbers", path.display(), i + 1))
        };
        ts.push(field(0)?);
        vs.push(field(1)?);
    }
    Ok((ts, vs))
}

pub fn run(job: &Job, input: &SuiteInput, suite_override: Option<&str>) -> Result<SuiteResult, ConfigError> {
    let suite = suite_override.map(str::to_string).or(match &job.task {
        Task::Suite { suite } => Some(suite.clone()),
        Task::Functional { .. } => None,
    });
    match (suite, &job.task) {
        (Some(s), _) => run_suite(&s, input).map_err(|e| ConfigError::at("task.suite", e)),
        (None, Task::Functional { functionals, k }) => evaluate(functionals, *k, input),
        (None, Task::Suite { .. }) => unreachable!("suite task always names a suite"),
    }
}

#[derive(Clone, Copy)]
enum Eval<'a> {
    Plain(&'a str, usize),
    WithKernel(&'a str, usize, usize),
}

/// One report row per (functional, signal[, kernel]) for signals of the matching domain.
fn evaluate(functionals: &[String], k: u32, input: &SuiteInput) -> Result<SuiteResult, ConfigError> {
    let mut evals = Vec::new();
    for f in functionals {
        let f = f.as_str();
        match f {
            "upper_P" => evals.extend((0..input.continuous.len()).map(|i| Eval::Plain(f, i))),
            "upper_F" | "upper_F_k" | "F_infinity" => {
                for i in 0..input.continuous.len() {
                    evals.extend((0..input.kernels.len()).map(|j| Eval::WithKernel(f, i, j)));
                }
            }
            "upper_Q" => evals.extend((0..input.multiplicative.len()).map(|i| Eval::Plain(f, i))),
            _ => evals.extend((0..input.discrete.len()).map(|i| Eval::Plain(f, i))),
        }
    }
    if evals.len() > MAX_CASES {
        return Err(ConfigError::at(
            "task.functionals",
            format!("{} evaluations exceed the limit of {MAX_CASES}", evals.len()),
        ));
    }
    let reports = evals
        .par_iter()
        .map(|e| eval_one(*e, k, input))
        .collect::<Result<Vec<_>, ConfigError>>()?;
    Ok(SuiteResult {
        suite: "functional".into(),
        summary: Summary::of(&reports),
        reports,
    })
}

fn eval_one(e: Eval<'_>, k: u32, input: &SuiteInput) -> Result<TheoremReport, ConfigError> {
    let tol = &input.tolerances;
    let err = |key: &'static str| move |e: sumlab_core::Error| ConfigError::at(key, e);
    let (id, signal, kernel) = match e {
        Eval::Plain(f, i) => (
            f,
            match f {
                "upper_P" => input.continuous[i].label(),
                "upper_Q" => input.multiplicative[i].label(),
                _ => input.discrete[i].label(),
            },
            "-",
        ),
        Eval::WithKernel(f, i, j) => (f, input.continuous[i].label(), input.kernels[j].label()),
    };
    let mut report = TheoremReport::new(id, signal, kernel);
    let (upper, lower, residual, unstable, trace) = match e {
        Eval::Plain("upper_P", i) => {
            let p = upper_p(&input.continuous[i], &input.grid).map_err(err("grid"))?;
            (p.upper, p.lower, p.stability_residual, p.unstable, p.trace)
        }
        Eval::Plain("upper_Q", i) => {
            let q = upper_q(&input.multiplicative[i], &input.log_grid, tol.route).map_err(err("log_grid"))?;
            report.check("route_gap", q.route_gap, tol.route);
            let d = q.direct;
            (d.upper, d.lower, d.stability_residual, d.unstable, d.trace)
        }
        Eval::Plain(f, i) => {
            let (s, g) = (&input.discrete[i], &input.discrete_grid);
            let d = match f {
                "holder" => holder_upper(s, k, g),
                "c_infinity" => c_infinity_upper(s, g),
                "logarithmic" => logarithmic_method(s, g),
                _ => banach_upper(s, g),
            }
            .map_err(err("discrete_grid"))?;
            (d.upper, d.lower, d.stability_residual, d.unstable, d.trace)
        }
        Eval::WithKernel(f, i, j) => {
            let (s, kern, g) = (&input.continuous[i], &input.kernels[j], &input.grid);
            let est = match f {
                "upper_F" => upper_f(kern, s, g),
                "upper_F_k" => sumlab_core::upper_f_k(kern, k, s, g),
                _ => f_infinity(kern, s, g, tol.k_max, tol.sweep_eps),
            }
            .map_err(err("kernels"))?;
            (est.upper, est.lower, est.stability_residual, est.unstable, est.trace)
        }
    };
    report.measure("upper", upper);
    report.measure("lower", lower);
    report.check("stability_residual", residual, STABILITY_TOL);
    report.set_unstable(unstable);
    report.add_trace("sweep", trace);
    Ok(report.finish())
}
