//! Discrete side: Cesàro means and Hölder iterates, the `C_∞` envelope,
//! logarithmic means, windowed (Banach) envelopes, and the step-function
//! bridges between sequences and functions on (0, ∞).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convfunc::{sweep_estimate, Estimate, ModulusPoint, SummabilityVerdict, SweepPoint, STABILITY_TOL};
use crate::error::{Error, Result};
use crate::kahan::{prefix_sums, KahanSum};
use crate::mellin::MultiplicativeSignal;
use crate::signal::DiscreteSignal;

/// Range and window parameters for the discrete estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscreteGrid {
    pub n_max: usize,
    /// Start of the tail for Hölder and windowed limsups.
    pub n_cut: usize,
    /// Start of the tail for the logarithmic means.
    pub log_cut: usize,
    /// Smallest inner start `n` in the `C_∞` window sweep.
    pub n_inner: usize,
    /// `C_∞` window ratios `theta_start·theta_ratio^j`, `j < theta_count`.
    pub theta_start: u64,
    pub theta_ratio: u64,
    pub theta_count: usize,
    /// Windowed envelope lengths `2^j`, `j < window_count`.
    pub window_count: usize,
    /// Uniformity modulus over every `n` instead of powers of two.
    pub full_scan: bool,
}

impl Default for DiscreteGrid {
    fn default() -> Self {
        Self {
            n_max: 1 << 22,
            n_cut: 1024,
            log_cut: 1 << 20,
            n_inner: 16,
            theta_start: 4,
            theta_ratio: 4,
            theta_count: 9,
            window_count: 13,
            full_scan: false,
        }
    }
}

impl DiscreteGrid {
    pub fn thetas(&self) -> Vec<u64> {
        (0..self.theta_count as u32)
            .map(|j| self.theta_start * self.theta_ratio.pow(j))
            .collect()
    }

    pub fn windows(&self) -> Vec<usize> {
        (0..self.window_count as u32).map(|j| 1usize << j).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &'static str, reason: String| Err(Error::InvalidGrid { field, reason });
        if self.n_max < 2 {
            return bad("n_max", format!("n_max must be at least 2, got {}", self.n_max));
        }
        if self.n_cut == 0 || self.n_cut >= self.n_max {
            return bad("n_cut", format!("need 1 <= n_cut < n_max, got {}", self.n_cut));
        }
        if self.log_cut < 2 || self.log_cut >= self.n_max {
            return bad("log_cut", format!("need 2 <= log_cut < n_max, got {}", self.log_cut));
        }
        if self.theta_start < 2 || self.theta_ratio < 2 || self.theta_count == 0 {
            return bad("theta_grid", "need theta_start >= 2, theta_ratio >= 2 and at least one window".into());
        }
        let last = self.theta_start as f64 * (self.theta_ratio as f64).powi(self.theta_count as i32 - 1);
        if self.n_inner == 0 || last * self.n_inner as f64 > self.n_max as f64 {
            return bad(
                "theta_grid",
                format!("largest ratio {last} times n_inner {} exceeds n_max {}", self.n_inner, self.n_max),
            );
        }
        if self.window_count == 0 || (1usize << (self.window_count - 1)) + self.n_cut > self.n_max {
            return bad("window_count", "largest window does not fit after n_cut".into());
        }
        Ok(())
    }
}

pub type DiscreteEstimate = Estimate<DiscreteGrid>;

/// `(Cφ)(n) = (1/n) Σ_{i ≤ n} φ(i)` on a value table `φ(1), …, φ(len)`.
pub fn cesaro_values(values: &[f64]) -> Vec<f64> {
    let mut acc = KahanSum::new();
    values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            acc.add(*v);
            acc.value() / (i + 1) as f64
        })
        .collect()
}

pub fn cesaro(phi: &DiscreteSignal, n_max: usize) -> Result<DiscreteSignal> {
    if n_max == 0 {
        return Err(Error::Precondition("n_max must be at least 1".into()));
    }
    Ok(DiscreteSignal::from_values(
        format!("C[{}]", phi.label()),
        cesaro_values(&phi.values(n_max)?),
    ))
}

/// Sup/inf of `values[n − 1]` over `n ≥ cut` for the nested cuts. The
/// deepest cut is reported since it carries the least start-up transient;
/// the spread across cuts is the stability residual.
fn nested_tails(values: &[f64], cuts: &[usize], grid: DiscreteGrid) -> DiscreteEstimate {
    let trace: Vec<SweepPoint> = cuts
        .iter()
        .map(|&cut| {
            let (upper, lower) = values[cut - 1..]
                .iter()
                .fold((f64::NEG_INFINITY, f64::INFINITY), |(s, i), &v| (s.max(v), i.min(v)));
            SweepPoint {
                param: cut as f64,
                upper,
                lower,
            }
        })
        .collect();
    let (first, last) = (trace[0], *trace.last().unwrap());
    let residual = (first.upper - last.upper).max(last.lower - first.lower);
    Estimate {
        upper: last.upper,
        lower: last.lower,
        trace,
        stability_residual: residual,
        unstable: residual > STABILITY_TOL,
        monotone: true,
        converged: residual <= STABILITY_TOL,
        grid,
    }
}

fn holder_cuts(grid: &DiscreteGrid) -> Vec<usize> {
    (0..3).map(|j| (grid.n_cut << (2 * j)).min(grid.n_max)).collect()
}

/// `C̄_k(φ)`: limsup over `[n_cut, n_max]` of `k` literal Cesàro passes, with
/// `C̲_k` as companion. Tails start at `n_cut`, `4·n_cut` and `16·n_cut`; the
/// early terms leak into `C^k φ(n)` as roughly `(log n)^{k−1}/n`, which is
/// why the deepest tail is the one reported.
pub fn holder_upper(phi: &DiscreteSignal, k: u32, grid: &DiscreteGrid) -> Result<DiscreteEstimate> {
    Ok(holder_chain(phi, k, grid)?.pop().expect("k >= 1"))
}

/// `C̄_1, …, C̄_k` from successive passes.
pub fn holder_chain(phi: &DiscreteSignal, k: u32, grid: &DiscreteGrid) -> Result<Vec<DiscreteEstimate>> {
    if k == 0 {
        return Err(Error::Precondition("Hölder order must be at least 1".into()));
    }
    grid.validate()?;
    let cuts = holder_cuts(grid);
    let mut values = phi.values(grid.n_max)?;
    let mut out = Vec::with_capacity(k as usize);
    for _ in 0..k {
        values = cesaro_values(&values);
        out.push(nested_tails(&values, &cuts, *grid));
    }
    Ok(out)
}

/// Prefix sums of `φ(i)/i` and of `1/i`.
struct LogTables {
    weighted: Vec<f64>,
    harmonic: Vec<f64>,
}

impl LogTables {
    fn new(values: &[f64]) -> Self {
        Self {
            weighted: prefix_sums(values.iter().enumerate().map(|(i, v)| v / (i + 1) as f64)),
            harmonic: prefix_sums((1..=values.len()).map(|i| 1.0 / i as f64)),
        }
    }

    /// `Σ_{i=n}^{m} φ(i)/i` normalized by `Σ_{i=n}^{m} 1/i`.
    #[inline]
    fn mean(&self, n: usize, m: usize) -> f64 {
        (self.weighted[m] - self.weighted[n - 1]) / (self.harmonic[m] - self.harmonic[n - 1])
    }
}

fn c_infinity_sweep(tables: &LogTables, grid: &DiscreteGrid) -> Vec<SweepPoint> {
    grid.thetas()
        .par_iter()
        .map(|&theta| {
            let theta = theta as usize;
            let top = grid.n_max / theta;
            let (upper, lower) = (grid.n_inner..=top)
                .map(|n| tables.mean(n, theta * n))
                .fold((f64::NEG_INFINITY, f64::INFINITY), |(s, i), m| (s.max(m), i.min(m)));
            SweepPoint {
                param: theta as f64,
                upper,
                lower,
            }
        })
        .collect()
}

/// `C̄_∞(φ) = lim_θ limsup_n` of the harmonic-weighted means of `φ(i)/i` over `[n, θn]`.
///
/// The means are normalized by `Σ_{[n,θn]} 1/i`, which is `ln θ + O(1/n)`,
/// so constants are reproduced exactly.
pub fn c_infinity_upper(phi: &DiscreteSignal, grid: &DiscreteGrid) -> Result<DiscreteEstimate> {
    grid.validate()?;
    let tables = LogTables::new(&phi.values(grid.n_max)?);
    Ok(sweep_estimate(c_infinity_sweep(&tables, grid), *grid, false))
}

/// Same envelope with `φ(i + 1)/i` in place of `φ(i)/i`; returns the largest
/// change of the upper or lower value.
pub fn c_infinity_shift_gap(phi: &DiscreteSignal, grid: &DiscreteGrid) -> Result<f64> {
    grid.validate()?;
    let values = phi.values(grid.n_max + 1)?;
    let base = sweep_estimate(c_infinity_sweep(&LogTables::new(&values[..grid.n_max]), grid), *grid, false);
    let shifted = sweep_estimate(c_infinity_sweep(&LogTables::new(&values[1..]), grid), *grid, false);
    Ok((base.upper - shifted.upper).abs().max((base.lower - shifted.lower).abs()))
}

fn geometric_starts(top: usize) -> Vec<usize> {
    std::iter::successors(Some(1usize), |n| n.checked_mul(2))
        .take_while(|&n| n <= top)
        .collect()
}

/// Uniform convergence of the `C_∞` means in every `n ≥ 1`.
pub fn c_infinity_test(phi: &DiscreteSignal, grid: &DiscreteGrid, eps: f64) -> Result<SummabilityVerdict> {
    grid.validate()?;
    let tables = LogTables::new(&phi.values(grid.n_max)?);
    let est = sweep_estimate(c_infinity_sweep(&tables, grid), *grid, false);
    let alpha = est.midpoint();
    let modulus = grid
        .thetas()
        .par_iter()
        .map(|&theta| {
            let theta = theta as usize;
            let top = grid.n_max / theta;
            let starts: Vec<usize> = if grid.full_scan {
                (1..=top).collect()
            } else {
                geometric_starts(top)
            };
            let deviation = starts
                .iter()
                .map(|&n| (tables.mean(n, theta * n) - alpha).abs())
                .fold(0.0, f64::max);
            ModulusPoint {
                param: theta as f64,
                deviation,
            }
        })
        .collect();
    Ok(SummabilityVerdict::decide("C_inf", est.upper, est.lower, modulus, eps))
}

/// Tail envelope of `Σ_{i ≤ n} φ(i)/i` normalized by `Σ_{i ≤ n} 1/i`, over
/// nested tails starting at `log_cut` and a quarter and a half of the way to `n_max`.
pub fn logarithmic_method(phi: &DiscreteSignal, grid: &DiscreteGrid) -> Result<DiscreteEstimate> {
    grid.validate()?;
    let tables = LogTables::new(&phi.values(grid.n_max)?);
    let means: Vec<f64> = (1..=grid.n_max).map(|n| tables.mean(1, n)).collect();
    let span = grid.n_max - grid.log_cut;
    let cuts: Vec<usize> = (0..3).map(|j| grid.log_cut + j * span / 4).collect();
    Ok(nested_tails(&means, &cuts, *grid))
}

/// `B̄(φ) = lim_k limsup_n (1/k) Σ_{i=n}^{n+k−1} φ(i)` over windows `k = 2^j`.
pub fn banach_upper(phi: &DiscreteSignal, grid: &DiscreteGrid) -> Result<DiscreteEstimate> {
    grid.validate()?;
    let prefix = prefix_sums(phi.values(grid.n_max)?);
    let trace: Vec<SweepPoint> = grid
        .windows()
        .par_iter()
        .map(|&k| {
            let (upper, lower) = (grid.n_cut..=grid.n_max + 1 - k)
                .map(|n| (prefix[n + k - 1] - prefix[n - 1]) / k as f64)
                .fold((f64::NEG_INFINITY, f64::INFINITY), |(s, i), m| (s.max(m), i.min(m)));
            SweepPoint {
                param: k as f64,
                upper,
                lower,
            }
        })
        .collect();
    Ok(sweep_estimate(trace, *grid, true))
}

/// `(Vφ)(x) = φ(⌊x + 1⌋)`.
pub fn bridge_v(phi: &DiscreteSignal) -> MultiplicativeSignal {
    let g = phi.generator();
    MultiplicativeSignal::new(format!("V[{}]", phi.label()), phi.bound(), move |x| {
        g((x + 1.0).floor().max(1.0) as u64)
    })
}

/// `(V₁φ)(n) = ∫_{n−1}^{n} φ(x) dx` by the midpoint rule with `cells_per_unit` cells.
pub fn bridge_v1(phi: &MultiplicativeSignal, n_max: usize, cells_per_unit: usize) -> Result<DiscreteSignal> {
    if n_max == 0 || cells_per_unit == 0 {
        return Err(Error::Precondition("n_max and cells_per_unit must be positive".into()));
    }
    let k = cells_per_unit as f64;
    let values = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let base = (n - 1) as f64;
            let mut acc = KahanSum::new();
            for c in 0..cells_per_unit {
                acc.add(phi.checked_eval(base + (c as f64 + 0.5) / k)?);
            }
            Ok(acc.value() / k)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(DiscreteSignal::from_values(format!("V1[{}]", phi.label()), values))
}

/// `Q̄(Vφ)` on the windows of the `C_∞` sweep: `(1/ln θ) ∫_n^{θn} (Vφ)(t) dt/t`
/// for `n ∈ [n_inner, n_max/θ]`, integrated exactly on the unit cells where
/// `Vφ` is constant.
pub fn bridge_q_upper(phi: &DiscreteSignal, grid: &DiscreteGrid) -> Result<DiscreteEstimate> {
    grid.validate()?;
    let values = phi.values(grid.n_max)?;
    // g[i] = ∫_1^i (Vφ)(t) dt/t; the cell [j−1, j] carries φ(j).
    let mut g = Vec::with_capacity(grid.n_max + 1);
    g.push(0.0);
    g.push(0.0);
    let mut acc = KahanSum::new();
    for j in 2..=grid.n_max {
        acc.add(values[j - 1] * (1.0 / (j - 1) as f64).ln_1p());
        g.push(acc.value());
    }
    let trace: Vec<SweepPoint> = grid
        .thetas()
        .par_iter()
        .map(|&theta| {
            let t = theta as usize;
            let lt = (theta as f64).ln();
            let (upper, lower) = (grid.n_inner..=grid.n_max / t)
                .map(|n| (g[t * n] - g[n]) / lt)
                .fold((f64::NEG_INFINITY, f64::INFINITY), |(s, i), m| (s.max(m), i.min(m)));
            SweepPoint {
                param: theta as f64,
                upper,
                lower,
            }
        })
        .collect();
    Ok(sweep_estimate(trace, *grid, false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convfunc::VerdictStatus;
    use crate::signal::{discrete_signal, params, ParamMap};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn constant(c: f64) -> DiscreteSignal {
        DiscreteSignal::new("c", c, move |_| c)
    }

    fn log_cos() -> DiscreteSignal {
        discrete_signal("log_cosine", &ParamMap::new()).unwrap()
    }

    fn log_block() -> DiscreteSignal {
        discrete_signal("log_block", &params([("base", 2.0)])).unwrap()
    }

    fn alternating() -> DiscreteSignal {
        discrete_signal("alternating", &ParamMap::new()).unwrap()
    }

    fn small() -> DiscreteGrid {
        DiscreteGrid {
            n_max: 1 << 16,
            n_cut: 64,
            log_cut: 1 << 14,
            n_inner: 4,
            theta_start: 4,
            theta_ratio: 4,
            theta_count: 6,
            window_count: 8,
            full_scan: false,
        }
    }

    #[test]
    fn cesaro_examples() {
        let c = cesaro(&constant(0.7), 100).unwrap();
        assert!((1..=100).all(|n| (c.eval(n) - 0.7).abs() < 1e-15));
        assert_eq!(cesaro(&alternating(), 10).unwrap().eval(4), 0.0);
        let first3 = DiscreteSignal::new("1[n<=3]", 1.0, |n| if n <= 3 { 1.0 } else { 0.0 });
        assert_eq!(cesaro(&first3, 10).unwrap().eval(6), 0.5);
    }

    #[test]
    fn constants_are_exact() {
        let g = small();
        let c = constant(0.7);
        for k in 1..=4 {
            let e = holder_upper(&c, k, &g).unwrap();
            assert!((e.upper - 0.7).abs() < 1e-12 && (e.lower - 0.7).abs() < 1e-12);
        }
        for e in [
            c_infinity_upper(&c, &g).unwrap(),
            logarithmic_method(&c, &g).unwrap(),
            banach_upper(&c, &g).unwrap(),
        ] {
            assert!((e.upper - 0.7).abs() < 1e-12 && (e.lower - 0.7).abs() < 1e-12, "{e:?}");
        }
        let v = c_infinity_test(&c, &g, 0.02).unwrap();
        assert!(matches!(v.status, VerdictStatus::Summable { alpha } if (alpha - 0.7).abs() < 1e-12));
    }

    #[test]
    fn holder_first_order_examples() {
        let g = DiscreteGrid::default();
        let e = holder_upper(&log_cos(), 1, &g).unwrap();
        assert!((e.upper - FRAC_1_SQRT_2).abs() < 0.02 && (e.lower + FRAC_1_SQRT_2).abs() < 0.02);
        let e = holder_upper(&log_block(), 1, &g).unwrap();
        assert!((e.upper - 2.0 / 3.0).abs() < 0.02 && (e.lower - 1.0 / 3.0).abs() < 0.02);
    }

    #[test]
    fn holder_chain_is_monotone() {
        let g = DiscreteGrid::default();
        for s in [log_cos(), log_block(), alternating()] {
            let chain = holder_chain(&s, 4, &g).unwrap();
            for w in chain.windows(2) {
                let ordered = w[1].upper <= w[0].upper + 1e-3 && w[1].lower >= w[0].lower - 1e-3;
                // Violations only where the start-up transient is still visible.
                let settled = w[0].stability_residual <= 1e-3 && w[1].stability_residual <= 1e-3;
                assert!(ordered || !settled, "{}", s.label());
            }
            let last = chain.last().unwrap();
            assert!(last.lower <= last.upper + 1e-3);
        }
        let chain = holder_chain(&log_block(), 4, &g).unwrap();
        assert!(chain.windows(2).all(|w| w[1].upper <= w[0].upper + 1e-3));
    }

    #[test]
    fn c_infinity_examples() {
        let g = DiscreteGrid::default();
        let e = c_infinity_upper(&log_block(), &g).unwrap();
        assert!((e.upper - 0.5).abs() < 0.02 && (e.lower - 0.5).abs() < 0.02);
        let e = c_infinity_upper(&log_cos(), &g).unwrap();
        assert!(e.upper.abs() < 0.02 && e.lower.abs() < 0.02);
        let v = c_infinity_test(&log_block(), &g, 0.02).unwrap();
        assert!(matches!(v.status, VerdictStatus::Summable { alpha } if (alpha - 0.5).abs() < 0.02));
    }

    #[test]
    fn c_infinity_modulus_of_slow_signals_matches_brute_force() {
        // Brute-force oracle for the uniformity modulus at the largest ratio,
        // starts n ∈ {1, 2, 4, 8, 16}.
        let g = DiscreteGrid::default();
        for s in [log_cos(), alternating()] {
            let v = c_infinity_test(&s, &g, 0.02).unwrap();
            let theta = *g.thetas().last().unwrap() as usize;
            let mut worst: f64 = 0.0;
            for n in geometric_starts(g.n_max / theta) {
                let mut num = 0.0;
                let mut den = 0.0;
                for i in (n..=theta * n).rev() {
                    num += s.eval(i as u64) / i as f64;
                    den += 1.0 / i as f64;
                }
                worst = worst.max((num / den - v.alpha).abs());
            }
            let last = v.uniformity_modulus.last().unwrap().deviation;
            assert!((last - worst).abs() < 1e-9, "{}: {last} vs {worst}", s.label());
        }
    }

    #[test]
    fn alternating_sums_are_small() {
        let g = DiscreteGrid::default();
        let b = banach_upper(&alternating(), &g).unwrap();
        assert!(b.upper <= 1.0 / 4096.0 + 1e-15);
        let e = c_infinity_upper(&alternating(), &g).unwrap();
        assert!(e.upper.abs() < 0.02 && e.lower.abs() < 0.02);
    }

    #[test]
    fn banach_of_log_block_is_one() {
        let b = banach_upper(&log_block(), &DiscreteGrid::default()).unwrap();
        assert_eq!(b.upper, 1.0);
        assert_eq!(b.lower, 0.0);
    }

    #[test]
    fn bridges() {
        let alt = alternating();
        let v = bridge_v(&alt);
        assert_eq!(v.eval(2.5), -1.0);
        let back = bridge_v1(&v, 200, 1000).unwrap();
        assert!((1..=200).all(|n| back.eval(n) == alt.eval(n)));

        let lc = MultiplicativeSignal::new("cos(log x)", 1.0, |x| x.max(f64::MIN_POSITIVE).ln().cos());
        let v1 = bridge_v1(&lc, 10, 1000).unwrap();
        let anti = |t: f64| t * (t.ln().cos() + t.ln().sin()) / 2.0;
        assert!((v1.eval(10) - (anti(10.0) - anti(9.0))).abs() < 1e-6);
    }

    #[test]
    fn bridge_identity() {
        let g = DiscreteGrid::default();
        for s in [log_cos(), log_block(), alternating(), constant(0.7)] {
            let c = c_infinity_upper(&s, &g).unwrap();
            let q = bridge_q_upper(&s, &g).unwrap();
            assert!((c.upper - q.upper).abs() <= 0.02, "{}: {} vs {}", s.label(), c.upper, q.upper);
        }
    }

    #[test]
    fn shift_replacement_is_small() {
        let g = small();
        for s in [log_cos(), log_block(), alternating()] {
            assert!(c_infinity_shift_gap(&s, &g).unwrap() < 0.05, "{}", s.label());
        }
    }

    #[test]
    fn grid_validation() {
        let mut g = DiscreteGrid::default();
        g.theta_count = 12;
        assert!(matches!(g.validate(), Err(Error::InvalidGrid { field: "theta_grid", .. })));
        let g = DiscreteGrid {
            n_cut: 0,
            ..DiscreteGrid::default()
        };
        assert!(g.validate().is_err());
    }
}
