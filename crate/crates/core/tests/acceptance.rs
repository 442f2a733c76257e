//! Acceptance criteria. Each criterion prints one PASS/FAIL line; the target
//! exits non-zero when any criterion fails.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use sumlab_core::holder::bridge_q_upper;
use sumlab_core::kernel::default_xi_grid;
use sumlab_core::report::{write_csv, write_json};
use sumlab_core::signal::{continuous_signal, discrete_signal, multiplicative_signal, params};
use sumlab_core::{
    banach_upper, c_infinity_test, c_infinity_upper, classify, convolve, f_infinity, holder_upper,
    logarithmic_method, run_suite, upper_f, upper_f_k, upper_p, upper_q, ClassifyTolerances, ContinuousSignal,
    DiscreteGrid, GridSpec, Kernel, ParamMap, SuiteInput, ThetaGrid, VerdictStatus,
};

/// Outcome of one criterion: verdict plus the numbers behind it.
struct Outcome {
    ok: bool,
    detail: String,
}

impl Outcome {
    fn new() -> Self {
        Self {
            ok: true,
            detail: String::new(),
        }
    }

    fn expect(&mut self, ok: bool, what: impl AsRef<str>) {
        if !ok {
            self.ok = false;
            if !self.detail.is_empty() {
                self.detail.push_str("; ");
            }
            self.detail.push_str(what.as_ref());
        }
    }

    fn within(&mut self, name: &str, value: f64, expected: f64, tol: f64) {
        self.expect(
            (value - expected).abs() <= tol,
            format!("{name} = {value:.6} (want {expected:.6} ± {tol:e})"),
        );
    }

    fn runtime(&mut self, elapsed: Duration, limit_secs: f64) {
        self.expect(
            elapsed.as_secs_f64() < limit_secs,
            format!("runtime {:.1}s over {limit_secs}s", elapsed.as_secs_f64()),
        );
    }
}

fn constant(c: f64) -> ContinuousSignal {
    continuous_signal("constant", &params([("c", c)])).unwrap()
}

fn sine() -> ContinuousSignal {
    continuous_signal("sinusoid", &params([("omega", 1.0)])).unwrap()
}

fn criterion_1() -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    let c = 0.7;
    let grid = GridSpec::default();
    let phi = constant(c);
    let exp1 = Kernel::exp(1.0);
    let f = upper_f(&exp1, &phi, &grid).unwrap();
    o.within("upper_F", f.upper, c, 1e-6);
    o.within("lower_F", f.lower, c, 1e-6);
    let fk = upper_f_k(&exp1, 3, &phi, &grid).unwrap();
    o.within("upper_F_3", fk.upper, c, 1e-6);
    let p = upper_p(&phi, &grid).unwrap();
    o.within("upper_P", p.upper, c, 1e-6);
    o.within("lower_P", p.lower, c, 1e-6);
    let m = multiplicative_signal("constant", &params([("c", c)])).unwrap();
    let q = upper_q(&m, &GridSpec::multiplicative_default(), 1e-3).unwrap();
    o.within("upper_Q", q.upper(), c, 1e-6);
    o.within("lower_Q", q.lower(), c, 1e-6);

    let d = discrete_signal("constant", &params([("c", c)])).unwrap();
    let g = DiscreteGrid::default();
    for k in 1..=3 {
        let h = holder_upper(&d, k, &g).unwrap();
        o.within(&format!("upper_C_{k}"), h.upper, c, 1e-12);
        o.within(&format!("lower_C_{k}"), h.lower, c, 1e-12);
    }
    let ci = c_infinity_upper(&d, &g).unwrap();
    o.within("upper_C_inf", ci.upper, c, 1e-12);
    o.within("lower_C_inf", ci.lower, c, 1e-12);
    let l = logarithmic_method(&d, &g).unwrap();
    o.within("logarithmic", l.upper, c, 1e-12);
    let b = banach_upper(&d, &g).unwrap();
    o.within("upper_B", b.upper, c, 1e-12);
    o.runtime(start.elapsed(), 5.0);
    o
}

fn criterion_2() -> Outcome {
    let mut o = Outcome::new();
    let h = 1e-3;
    let grid = GridSpec {
        x_max: 60.0,
        step: h,
        x_cut: 20.0,
        theta_grid: ThetaGrid::new(1.0, 2.0, 4),
    };
    for xi in [0.5, 1.0, 2.0] {
        let cosine = ContinuousSignal::new(format!("cos({xi}x)"), 1.0, move |x| (xi * x).cos());
        let out = convolve(&Kernel::exp(1.0), &cosine, &grid).unwrap();
        // Closed form of the exponential kernel's transform.
        let fhat = Complex64::new(1.0, 0.0) / Complex64::new(1.0, xi);
        let worst = out
            .values()
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let x = out.abscissa(i);
                (v - (fhat * Complex64::from_polar(1.0, xi * x)).re).abs()
            })
            .fold(0.0, f64::max);
        o.expect(worst <= 1e-4, format!("xi = {xi}: max deviation {worst:e}"));
    }
    o
}

fn criterion_3() -> Outcome {
    let mut o = Outcome::new();
    let grid = GridSpec::default();
    assert_eq!(grid.theta_grid.last(), 512.0);
    let p = upper_p(&sine(), &grid).unwrap();
    o.expect(
        (-0.01..=0.011).contains(&p.upper),
        format!("upper_P(sin) = {:.6} outside [-0.01, 0.011]", p.upper),
    );
    let f = upper_f(&Kernel::exp(1.0), &sine(), &grid).unwrap();
    // |f̂(1)| = |1/(1+i)|
    let amplitude = (1.0 / (1.0 + 1.0f64)).sqrt();
    o.within("upper_F(sin)", f.upper, amplitude, 0.01);
    o.within("lower_F(sin)", f.lower, -amplitude, 0.01);
    o.within("upper_F(sin) vs 0.7071", f.upper, FRAC_1_SQRT_2, 0.01);
    o
}

fn criterion_4() -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    let input = SuiteInput::library_default();
    let exp1 = Kernel::exp(1.0);
    for s in &input.continuous {
        let p = upper_p(s, &input.grid).unwrap();
        match f_infinity(&exp1, s, &input.grid, 10, 1e-3) {
            Ok(fi) => {
                let k = fi.trace.last().unwrap().param;
                o.expect(
                    (fi.upper - p.upper).abs() <= 0.02,
                    format!(
                        "{}: F_inf = {:.6} at k = {k}, upper_P = {:.6}, difference {:.6}",
                        s.label(),
                        fi.upper,
                        p.upper,
                        (fi.upper - p.upper).abs()
                    ),
                );
            }
            Err(e) => o.expect(false, format!("{}: {e}", s.label())),
        }
    }
    o.runtime(start.elapsed(), 60.0);
    o
}

fn criterion_5() -> Outcome {
    let mut o = Outcome::new();
    let input = SuiteInput::library_default();
    for k in [Kernel::exp(1.0), Kernel::gaussian(1.0, 0.0)] {
        for s in &input.continuous {
            let r = sumlab_core::residual_check(&k, s, &input.grid, 0.02).unwrap();
            for name in ["upper_P(f*phi-phi)", "lower_P(f*phi-phi)"] {
                let d = r.discrepancy(name).unwrap();
                o.expect(
                    d.value <= 0.02,
                    format!("{} ⋆ {}: {name} = {:.6}", k.label(), s.label(), d.value),
                );
            }
        }
    }
    o
}

fn criterion_6() -> Outcome {
    let mut o = Outcome::new();
    let xi = default_xi_grid();
    let tol = ClassifyTolerances::default();
    for k in [Kernel::exp(1.0), Kernel::gaussian(1.0, 0.0)] {
        let c = classify(&k, &xi, &tol).unwrap();
        o.expect(
            c.flat && c.strict_modulus && c.wiener,
            format!("{}: flat {} strict {} wiener {}", k.label(), c.flat, c.strict_modulus, c.wiener),
        );
    }
    let c = classify(&Kernel::boxcar(1.0), &xi, &tol).unwrap();
    o.expect(c.flat && c.strict_modulus && !c.wiener, "box(1) class flags");
    let step = xi[1] - xi[0];
    let hit = c.zero_candidates.iter().any(|z| (z - 2.0 * PI).abs() <= step + 1e-12);
    o.expect(hit, format!("box(1) zero candidates {:?} miss 2π", c.zero_candidates));
    o
}

/// `Σ_{i ≤ n} cos(ln i)` by the midpoint rule against the antiderivative
/// `t (cos ln t + sin ln t) / 2`.
fn cos_log_cesaro(n: f64) -> f64 {
    let big_f = |t: f64| 0.5 * t * (t.ln().cos() + t.ln().sin());
    (big_f(n + 0.5) - big_f(0.5)) / n
}

/// Number of `i ≤ n` whose binary block index `⌊log₂ i⌋` is even.
fn log_block_ones(n: u64) -> u64 {
    let mut count = 0;
    let mut k = 0;
    while (1u64 << k) <= n {
        let lo = 1u64 << k;
        let hi = ((1u64 << (k + 1)) - 1).min(n);
        if k % 2 == 0 {
            count += hi - lo + 1;
        }
        k += 1;
    }
    count
}

fn criterion_7() -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    let g = DiscreteGrid::default();
    assert_eq!(g.n_max, 1 << 22);

    let cos_log = discrete_signal("log_cosine", &ParamMap::new()).unwrap();
    let h = holder_upper(&cos_log, 1, &g).unwrap();
    let cut = h.trace.last().unwrap().param;
    let samples: Vec<f64> = (0..=4000)
        .map(|j| cut * (g.n_max as f64 / cut).powf(j as f64 / 4000.0))
        .map(|n| cos_log_cesaro(n.floor()))
        .collect();
    let oracle_hi = samples.iter().cloned().fold(f64::MIN, f64::max);
    let oracle_lo = samples.iter().cloned().fold(f64::MAX, f64::min);
    o.within("cos(log n) upper_C vs oracle", h.upper, oracle_hi, 1e-3);
    o.within("cos(log n) upper_C", h.upper, FRAC_1_SQRT_2, 0.02);
    o.within("cos(log n) lower_C vs oracle", h.lower, oracle_lo, 1e-3);
    o.within("cos(log n) lower_C", h.lower, -FRAC_1_SQRT_2, 0.02);
    let v = c_infinity_test(&cos_log, &g, 0.02).unwrap();
    match v.status {
        VerdictStatus::Summable { alpha } => o.within("cos(log n) C_inf alpha", alpha, 0.0, 0.02),
        _ => o.expect(false, format!("cos(log n) C_inf verdict {}", v.status_label())),
    }
    let l = logarithmic_method(&cos_log, &g).unwrap();
    o.within("cos(log n) logarithmic upper", l.upper, 0.0, 0.02);
    o.within("cos(log n) logarithmic lower", l.lower, 0.0, 0.02);

    let block = discrete_signal("log_block", &params([("base", 2.0)])).unwrap();
    let h = holder_upper(&block, 1, &g).unwrap();
    let cut = h.trace.last().unwrap().param as u64;
    let mut candidates = vec![cut, g.n_max as u64];
    for k in 0..=22 {
        for n in [(1u64 << k) - 1, 1u64 << k] {
            if n >= cut && n <= g.n_max as u64 {
                candidates.push(n);
            }
        }
    }
    let ratios: Vec<f64> = candidates.iter().map(|&n| log_block_ones(n) as f64 / n as f64).collect();
    let oracle_hi = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let oracle_lo = ratios.iter().cloned().fold(f64::MAX, f64::min);
    o.within("log_block upper_C vs oracle", h.upper, oracle_hi, 1e-6);
    o.within("log_block upper_C", h.upper, 2.0 / 3.0, 0.02);
    o.within("log_block lower_C vs oracle", h.lower, oracle_lo, 1e-6);
    o.within("log_block lower_C", h.lower, 1.0 / 3.0, 0.02);
    let v = c_infinity_test(&block, &g, 0.02).unwrap();
    match v.status {
        VerdictStatus::Summable { alpha } => o.within("log_block C_inf alpha", alpha, 0.5, 0.02),
        _ => o.expect(false, format!("log_block C_inf verdict {}", v.status_label())),
    }
    o.runtime(start.elapsed(), 30.0);
    o
}

fn criterion_8() -> Outcome {
    let mut o = Outcome::new();
    let input = SuiteInput::library_default();
    for s in &input.discrete {
        let c = c_infinity_upper(s, &input.discrete_grid).unwrap();
        let q = bridge_q_upper(s, &input.discrete_grid).unwrap();
        o.within(&format!("{} upper_C_inf - upper_Q(V)", s.label()), c.upper - q.upper, 0.0, 0.02);
    }
    o
}

fn criterion_9() -> Outcome {
    let mut o = Outcome::new();
    let input = SuiteInput::library_default();
    let mut summable = 0;
    for s in &input.discrete {
        let v = c_infinity_test(s, &input.discrete_grid, 0.02).unwrap();
        if let Some(alpha) = v.summable_alpha() {
            summable += 1;
            let l = logarithmic_method(s, &input.discrete_grid).unwrap();
            o.within(&format!("{} logarithmic upper", s.label()), l.upper, alpha, 0.02);
            o.within(&format!("{} logarithmic lower", s.label()), l.lower, alpha, 0.02);
        }
    }
    o.expect(summable > 0, "no C_inf-summable rows to check");
    o
}

fn criterion_10() -> Outcome {
    let mut o = Outcome::new();
    let grid = GridSpec::default();
    let phi = continuous_signal("convergent_plus_decay", &params([("alpha", 0.3)])).unwrap();
    for k in [Kernel::exp(1.0), Kernel::erlang(2, 1.0), Kernel::gaussian(1.0, 0.0)] {
        let f = upper_f(&k, &phi, &grid).unwrap();
        o.within(&format!("{} upper_F", k.label()), f.upper, 0.3, 1e-3);
        o.within(&format!("{} lower_F", k.label()), f.lower, 0.3, 1e-3);
    }
    o
}

fn criterion_11() -> Outcome {
    let mut o = Outcome::new();
    let input = SuiteInput::library_default();
    let render = || {
        let result = run_suite("full", &input).unwrap();
        let (mut csv, mut json) = (Vec::new(), Vec::new());
        write_csv(&result.reports, &mut csv).unwrap();
        write_json(&result, &mut json).unwrap();
        (csv, json)
    };
    let first = render();
    let second = render();
    o.expect(first.0 == second.0, "CSV reports differ between runs");
    o.expect(first.1 == second.1, "JSON reports differ between runs");
    o
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        ("constants reproduced by every functional", criterion_1),
        ("eigen relation for the exponential kernel", criterion_2),
        ("sine: P-summable, not F-summable", criterion_3),
        ("F_infinity agrees with upper_P on the library", criterion_4),
        ("residual f*phi - phi has null window means", criterion_5),
        ("kernel classes", criterion_6),
        ("discrete Hölder and C_inf values", criterion_7),
        ("bridge identity C_inf = Q(V)", criterion_8),
        ("C_inf summable implies logarithmic summable", criterion_9),
        ("cross-kernel agreement on a convergent signal", criterion_10),
        ("byte-identical reports across runs", criterion_11),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| Outcome {
            ok: false,
            detail: format!(
                "panicked: {}",
                e.downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default()
            ),
        });
        let secs = start.elapsed().as_secs_f64();
        if outcome.ok {
            println!("criterion {:>2} PASS  {name} ({secs:.1}s)", i + 1);
        } else {
            failed += 1;
            println!("criterion {:>2} FAIL  {name} ({secs:.1}s): {}", i + 1, outcome.detail);
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
