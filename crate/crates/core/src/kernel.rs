//! L¹ convolution kernels: closed forms, lattice discretizations, Fourier
//! transforms, convolution against signals and convolution powers.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kahan::KahanSum;
use crate::signal::{param_f64, ContinuousSignal, GridSpec, ParamMap, PrefixTable, RealMap};

/// Tail mass left out when a kernel's support is truncated.
pub const TAIL_MASS: f64 = 1e-8;
/// Lattice spacing used for grid self-convolution.
pub const LATTICE_STEP: f64 = 1e-3;
/// Largest tolerated change of mass across a grid convolution power.
pub const MASS_DRIFT_TOL: f64 = 1e-5;

pub type TransformMap = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

#[derive(Clone)]
pub enum KernelShape {
    /// `r e^{−rt}` on `t ≥ 0`.
    Exp { rate: f64 },
    /// `r^k t^{k−1} e^{−rt}/(k−1)!` on `t ≥ 0`.
    Erlang { order: u32, rate: f64 },
    /// `(1/a)·1_{[0,a]}`.
    Boxcar { width: f64 },
    Gaussian { sigma: f64, mean: f64 },
    /// Point masses `weights[j]` at `offset + j·step`, smoothed by `spline`
    /// convolutions with the uniform density on `[−step/2, step/2]`.
    Lattice {
        offset: f64,
        step: f64,
        weights: Arc<Vec<f64>>,
        spline: u32,
    },
    /// `t ↦ inner(t − shift)`.
    Shifted { inner: Box<Kernel>, shift: f64 },
    /// `Σ cᵢ·fᵢ`.
    Combination(Vec<(f64, Kernel)>),
    /// Arbitrary density on `[lower, upper]`. An infinite `upper` needs a
    /// `tail` function giving the mass beyond a point.
    Custom {
        density: RealMap,
        lower: f64,
        upper: f64,
        tail: Option<RealMap>,
        transform: Option<TransformMap>,
        nonnegative: bool,
    },
}

impl fmt::Debug for KernelShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelShape::Exp { rate } => write!(f, "Exp({rate})"),
            KernelShape::Erlang { order, rate } => write!(f, "Erlang({order}, {rate})"),
            KernelShape::Boxcar { width } => write!(f, "Box({width})"),
            KernelShape::Gaussian { sigma, mean } => write!(f, "Gaussian({sigma}, {mean})"),
            KernelShape::Lattice {
                offset,
                step,
                weights,
                spline,
            } => write!(
                f,
                "Lattice(offset {offset}, step {step}, {} points, spline {spline})",
                weights.len()
            ),
            KernelShape::Shifted { inner, shift } => write!(f, "Shifted({:?}, {shift})", inner.shape),
            KernelShape::Combination(terms) => f.debug_list().entries(terms.iter().map(|(c, k)| (c, &k.label))).finish(),
            KernelShape::Custom { lower, upper, .. } => write!(f, "Custom[{lower}, {upper}]"),
        }
    }
}

/// An integrable density together with its label.
#[derive(Clone, Debug)]
pub struct Kernel {
    shape: KernelShape,
    label: String,
}

/// Point masses on the cells `[j·h, (j+1)·h]`, `j = first, first+1, …`,
/// each placed at its cell center.
#[derive(Debug, Clone, PartialEq)]
pub struct CellMasses {
    pub step: f64,
    pub first: i64,
    pub weights: Vec<f64>,
}

impl CellMasses {
    pub fn mass(&self) -> f64 {
        self.weights.iter().copied().collect::<KahanSum>().value()
    }

    pub fn abs_mass(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).collect::<KahanSum>().value()
    }

    /// Right end of the last occupied cell.
    pub fn reach(&self) -> f64 {
        (self.first + self.weights.len() as i64) as f64 * self.step
    }

    pub fn start(&self) -> f64 {
        self.first as f64 * self.step
    }

    fn accumulate(&mut self, other: &CellMasses, coef: f64) {
        if other.weights.is_empty() {
            return;
        }
        if self.weights.is_empty() {
            self.first = other.first;
        }
        let lo = self.first.min(other.first);
        let hi = (self.first + self.weights.len() as i64).max(other.first + other.weights.len() as i64);
        if lo < self.first || hi > self.first + self.weights.len() as i64 {
            let mut grown = vec![0.0; (hi - lo) as usize];
            let at = (self.first - lo) as usize;
            grown[at..at + self.weights.len()].copy_from_slice(&self.weights);
            self.weights = grown;
            self.first = lo;
        }
        let at = (other.first - self.first) as usize;
        for (dst, w) in self.weights[at..].iter_mut().zip(&other.weights) {
            *dst += coef * w;
        }
    }
}

fn erlang_density(order: u32, rate: f64, t: f64) -> f64 {
    if t < 0.0 {
        return 0.0;
    }
    if t == 0.0 {
        return if order == 1 { rate } else { 0.0 };
    }
    let k = order as f64;
    (k * rate.ln() + (k - 1.0) * t.ln() - rate * t - libm::lgamma(k)).exp()
}

/// `P(X > x)` for `X ~ Gamma(order, 1)`: `e^{−x} Σ_{i<order} x^i/i!`.
pub(crate) fn erlang_survival(order: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let lx = x.ln();
    let mut acc = KahanSum::new();
    for i in 0..order {
        let fi = i as f64;
        acc.add((-x + fi * lx - libm::lgamma(fi + 1.0)).exp());
    }
    acc.value().min(1.0)
}

/// Upper-tail mass of the standard normal beyond `z`.
fn normal_upper(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

/// Smallest `x` (to bisection precision) with `tail(x) ≤ tol`, for decreasing `tail`.
fn invert_tail(tail: impl Fn(f64) -> f64, start: f64, tol: f64) -> Result<f64> {
    let mut hi = start.max(1.0);
    let mut iters = 0;
    while tail(hi) > tol {
        hi *= 2.0;
        iters += 1;
        if iters > 60 || !hi.is_finite() {
            return Err(Error::Quadrature(format!(
                "support truncation cannot reach tail mass {tol}"
            )));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tail(mid) > tol {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    Ok(hi)
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

impl Kernel {
    pub fn from_shape(shape: KernelShape, label: impl Into<String>) -> Self {
        Self {
            shape,
            label: label.into(),
        }
    }

    /// # Panics
    /// If `rate` is not positive and finite.
    pub fn exp(rate: f64) -> Self {
        assert!(rate > 0.0 && rate.is_finite(), "exp kernel rate must be positive");
        Self::from_shape(KernelShape::Exp { rate }, format!("exp({rate})"))
    }

    /// # Panics
    /// If `order` is zero or `rate` is not positive.
    pub fn erlang(order: u32, rate: f64) -> Self {
        assert!(order >= 1 && rate > 0.0 && rate.is_finite(), "erlang kernel needs order >= 1 and rate > 0");
        if order == 1 {
            return Self::exp(rate);
        }
        Self::from_shape(KernelShape::Erlang { order, rate }, format!("erlang({order},{rate})"))
    }

    /// # Panics
    /// If `width` is not positive.
    pub fn boxcar(width: f64) -> Self {
        assert!(width > 0.0 && width.is_finite(), "box kernel width must be positive");
        Self::from_shape(KernelShape::Boxcar { width }, format!("box({width})"))
    }

    /// # Panics
    /// If `sigma` is not positive.
    pub fn gaussian(sigma: f64, mean: f64) -> Self {
        assert!(sigma > 0.0 && sigma.is_finite() && mean.is_finite(), "gaussian kernel needs sigma > 0");
        Self::from_shape(KernelShape::Gaussian { sigma, mean }, format!("gaussian({sigma},{mean})"))
    }

    /// Point-mass kernel on a uniform lattice, read as a piecewise-constant density.
    pub fn lattice(label: impl Into<String>, offset: f64, step: f64, weights: Vec<f64>) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::param("lattice", "step", "step must be positive"));
        }
        if weights.is_empty() || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::param("lattice", "weights", "need at least one finite weight"));
        }
        Ok(Self::from_shape(
            KernelShape::Lattice {
                offset,
                step,
                weights: Arc::new(weights),
                spline: 1,
            },
            label,
        ))
    }

    /// Kernel from density samples `(t_j, value_j)` on a uniform grid,
    /// weighted by the trapezoid rule.
    pub fn from_samples(label: impl Into<String>, ts: &[f64], values: &[f64]) -> Result<Self> {
        if ts.len() != values.len() || ts.len() < 2 {
            return Err(Error::param("sampled", "samples", "need at least two (t, value) pairs"));
        }
        let step = ts[1] - ts[0];
        if !(step > 0.0) {
            return Err(Error::param("sampled", "t", "abscissae must increase"));
        }
        for (i, w) in ts.windows(2).enumerate() {
            if ((w[1] - w[0]) - step).abs() > 1e-6 * step {
                return Err(Error::param(
                    "sampled",
                    "t",
                    format!("abscissae must be uniformly spaced (row {})", i + 2),
                ));
            }
        }
        let last = values.len() - 1;
        let weights = values
            .iter()
            .enumerate()
            .map(|(j, v)| if j == 0 || j == last { 0.5 * v * step } else { v * step })
            .collect();
        Self::lattice(label, ts[0], step, weights)
    }

    pub fn shifted(&self, shift: f64) -> Self {
        Self::from_shape(
            KernelShape::Shifted {
                inner: Box::new(self.clone()),
                shift,
            },
            format!("{}>>{}", self.label, shift),
        )
    }

    pub fn combination(label: impl Into<String>, terms: Vec<(f64, Kernel)>) -> Self {
        Self::from_shape(KernelShape::Combination(terms), label)
    }

    pub fn custom(
        label: impl Into<String>,
        lower: f64,
        upper: f64,
        nonnegative: bool,
        density: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::from_shape(
            KernelShape::Custom {
                density: Arc::new(density),
                lower,
                upper,
                tail: None,
                transform: None,
                nonnegative,
            },
            label,
        )
    }

    /// Attaches a closed-form transform to a custom kernel.
    pub fn with_transform(mut self, transform: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Self {
        if let KernelShape::Custom { transform: t, .. } = &mut self.shape {
            *t = Some(Arc::new(transform));
        }
        self
    }

    /// Attaches an upper-tail mass function to a custom kernel.
    pub fn with_tail(mut self, tail: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        if let KernelShape::Custom { tail: t, .. } = &mut self.shape {
            *t = Some(Arc::new(tail));
        }
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn shape(&self) -> &KernelShape {
        &self.shape
    }

    pub fn density(&self, t: f64) -> f64 {
        match &self.shape {
            KernelShape::Exp { rate } => {
                if t >= 0.0 {
                    rate * (-rate * t).exp()
                } else {
                    0.0
                }
            }
            KernelShape::Erlang { order, rate } => erlang_density(*order, *rate, t),
            KernelShape::Boxcar { width } => {
                if (0.0..=*width).contains(&t) {
                    1.0 / width
                } else {
                    0.0
                }
            }
            KernelShape::Gaussian { sigma, mean } => {
                let z = (t - mean) / sigma;
                (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
            }
            KernelShape::Lattice {
                offset,
                step,
                weights,
                ..
            } => {
                let j = ((t - offset) / step).round();
                if j >= 0.0 && (j as usize) < weights.len() {
                    weights[j as usize] / step
                } else {
                    0.0
                }
            }
            KernelShape::Shifted { inner, shift } => inner.density(t - shift),
            KernelShape::Combination(terms) => terms.iter().map(|(c, k)| c * k.density(t)).sum(),
            KernelShape::Custom {
                density,
                lower,
                upper,
                ..
            } => {
                if t >= *lower && t <= *upper {
                    density(t)
                } else {
                    0.0
                }
            }
        }
    }

    /// Declared support; the upper end may be infinite.
    pub fn support(&self) -> (f64, f64) {
        match &self.shape {
            KernelShape::Exp { .. } | KernelShape::Erlang { .. } => (0.0, f64::INFINITY),
            KernelShape::Boxcar { width } => (0.0, *width),
            KernelShape::Gaussian { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            KernelShape::Lattice {
                offset,
                step,
                weights,
                spline,
            } => {
                let half = 0.5 * *spline as f64 * step;
                (offset - half, offset + (weights.len() - 1) as f64 * step + half)
            }
            KernelShape::Shifted { inner, shift } => {
                let (a, b) = inner.support();
                (a + shift, b + shift)
            }
            KernelShape::Combination(terms) => terms.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (_, k)| {
                let (ka, kb) = k.support();
                (a.min(ka), b.max(kb))
            }),
            KernelShape::Custom { lower, upper, .. } => (*lower, *upper),
        }
    }

    /// Support cut where the left-out mass is at most [`TAIL_MASS`].
    pub fn truncated_support(&self) -> Result<(f64, f64)> {
        match &self.shape {
            KernelShape::Exp { rate } => Ok((0.0, (1.0 / TAIL_MASS).ln() / rate)),
            KernelShape::Erlang { order, rate } => {
                let x = invert_tail(|x| erlang_survival(*order, x), *order as f64 + 10.0, TAIL_MASS)?;
                Ok((0.0, x / rate))
            }
            KernelShape::Gaussian { sigma, mean } => {
                let z = invert_tail(normal_upper, 6.0, 0.5 * TAIL_MASS)?;
                Ok((mean - z * sigma, mean + z * sigma))
            }
            KernelShape::Shifted { inner, shift } => {
                let (a, b) = inner.truncated_support()?;
                Ok((a + shift, b + shift))
            }
            KernelShape::Combination(terms) => {
                let mut out = (f64::INFINITY, f64::NEG_INFINITY);
                for (_, k) in terms {
                    let (a, b) = k.truncated_support()?;
                    out = (out.0.min(a), out.1.max(b));
                }
                Ok(out)
            }
            KernelShape::Custom { lower, upper, tail, .. } => {
                if !lower.is_finite() {
                    return Err(Error::Quadrature("custom kernel needs a finite lower support end".into()));
                }
                if upper.is_finite() {
                    return Ok((*lower, *upper));
                }
                let tail = tail.as_ref().ok_or_else(|| {
                    Error::Quadrature("unbounded custom kernel has no tail-mass function".into())
                })?;
                let t = invert_tail(|x| tail(lower + x), 1.0, TAIL_MASS)?;
                Ok((*lower, lower + t))
            }
            _ => Ok(self.support()),
        }
    }

    /// Structural nonnegativity; custom kernels report their declared flag.
    pub fn is_nonnegative(&self) -> bool {
        match &self.shape {
            KernelShape::Exp { .. }
            | KernelShape::Erlang { .. }
            | KernelShape::Boxcar { .. }
            | KernelShape::Gaussian { .. } => true,
            KernelShape::Lattice { weights, .. } => weights.iter().all(|w| *w >= 0.0),
            KernelShape::Shifted { inner, .. } => inner.is_nonnegative(),
            KernelShape::Combination(terms) => terms.iter().all(|(c, k)| *c >= 0.0 && k.is_nonnegative()),
            KernelShape::Custom { nonnegative, .. } => *nonnegative,
        }
    }

    /// `∫ f`, from the transform at 0.
    pub fn mass(&self) -> Result<f64> {
        Ok(fourier_transform(self, 0.0)?.re)
    }

    /// Cell masses on the cells `[j·h, (j+1)·h]` covering the truncated support.
    pub fn discretize(&self, h: f64) -> Result<CellMasses> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidGrid {
                field: "step",
                reason: format!("step must be positive, got {h}"),
            });
        }
        let from_cdf = |lo: f64, hi: f64, mass_between: &dyn Fn(f64, f64) -> f64| {
            let first = (lo / h).floor() as i64;
            let last = ((hi / h) - 1e-9).ceil() as i64;
            let weights = (first..last.max(first + 1))
                .map(|j| {
                    let a = (j as f64 * h).max(lo);
                    let b = ((j + 1) as f64 * h).min(hi);
                    if b > a {
                        mass_between(a, b)
                    } else {
                        0.0
                    }
                })
                .collect();
            CellMasses { step: h, first, weights }
        };
        Ok(match &self.shape {
            KernelShape::Exp { rate } => {
                let (_, hi) = self.truncated_support()?;
                let r = *rate;
                let cell = -(-r * h).exp_m1();
                let n = ((hi / h) - 1e-9).ceil().max(1.0) as usize;
                CellMasses {
                    step: h,
                    first: 0,
                    weights: (0..n).map(|j| (-r * j as f64 * h).exp() * cell).collect(),
                }
            }
            KernelShape::Erlang { order, rate } => {
                let (lo, hi) = self.truncated_support()?;
                let (k, r) = (*order, *rate);
                from_cdf(lo, hi, &|a, b| erlang_survival(k, r * a) - erlang_survival(k, r * b))
            }
            KernelShape::Boxcar { width } => {
                let a = *width;
                from_cdf(0.0, a, &|lo, hi| (hi - lo) / a)
            }
            KernelShape::Gaussian { sigma, mean } => {
                let (lo, hi) = self.truncated_support()?;
                let (s, m) = (*sigma, *mean);
                from_cdf(lo, hi, &|a, b| {
                    if a >= m {
                        normal_upper((a - m) / s) - normal_upper((b - m) / s)
                    } else {
                        normal_upper((m - b) / s) - normal_upper((m - a) / s)
                    }
                })
            }
            KernelShape::Lattice {
                offset,
                step,
                weights,
                ..
            } => deposit(h, weights.iter().enumerate().map(|(j, w)| (offset + j as f64 * step, *w))),
            KernelShape::Shifted { inner, shift } => {
                let mut cm = inner.discretize(h)?;
                cm.first += (shift / h).round() as i64;
                cm
            }
            KernelShape::Combination(terms) => {
                let mut acc = CellMasses {
                    step: h,
                    first: 0,
                    weights: Vec::new(),
                };
                for (c, k) in terms {
                    acc.accumulate(&k.discretize(h)?, *c);
                }
                acc
            }
            KernelShape::Custom { density, .. } => {
                let (lo, hi) = self.truncated_support()?;
                let d = Arc::clone(density);
                from_cdf(lo, hi, &|a, b| d(0.5 * (a + b)) * (b - a))
            }
        })
    }

    /// The same kernel as point masses on a lattice of the given step.
    pub fn to_lattice(&self, step: f64) -> Result<Kernel> {
        if let KernelShape::Lattice { step: s, .. } = &self.shape {
            if (s - step).abs() <= 1e-12 * step {
                return Ok(self.clone());
            }
        }
        let cm = self.discretize(step)?;
        Ok(Self::from_shape(
            KernelShape::Lattice {
                offset: (cm.first as f64 + 0.5) * step,
                step,
                weights: Arc::new(cm.weights),
                spline: 1,
            },
            self.label.clone(),
        ))
    }

    /// `f − f^{*2}`: integrates to zero and its transform vanishes only where `f̂ ∈ {0, 1}`.
    pub fn tauberian_witness(&self) -> Result<Kernel> {
        let square = convolution_power(self, 2)?;
        Ok(Kernel::combination(
            format!("{}-{}^*2", self.label, self.label),
            vec![(1.0, self.clone()), (-1.0, square)],
        ))
    }
}

/// Spreads point masses onto cell centers `(j+½)h` by linear interpolation,
/// which preserves both mass and first moment.
fn deposit(h: f64, points: impl Iterator<Item = (f64, f64)>) -> CellMasses {
    let placed: Vec<(i64, f64, f64)> = points
        .map(|(t, w)| {
            let u = t / h - 0.5;
            let i = u.floor();
            let frac = match u - i {
                f if f < 1e-9 => 0.0,
                f if f > 1.0 - 1e-9 => 1.0,
                f => f,
            };
            (i as i64, frac, w)
        })
        .collect();
    let first = placed.iter().map(|c| c.0).min().unwrap_or(0);
    let last = placed.iter().map(|c| c.0 + 1).max().unwrap_or(0);
    let mut weights = vec![0.0; (last - first + 1) as usize];
    for &(i, frac, w) in &placed {
        let at = (i - first) as usize;
        weights[at] += w * (1.0 - frac);
        weights[at + 1] += w * frac;
    }
    while weights.len() > 1 && *weights.last().unwrap() == 0.0 {
        weights.pop();
    }
    let lead = weights.iter().take_while(|w| **w == 0.0).count().min(weights.len() - 1);
    CellMasses {
        step: h,
        first: first + lead as i64,
        weights: weights.split_off(lead),
    }
}

/// `f̂(ξ) = ∫ f(t) e^{−iξt} dt`.
pub fn fourier_transform(kernel: &Kernel, xi: f64) -> Result<Complex64> {
    let i = Complex64::i();
    Ok(match &kernel.shape {
        KernelShape::Exp { rate } => Complex64::new(*rate, 0.0) / Complex64::new(*rate, xi),
        KernelShape::Erlang { order, rate } => {
            (Complex64::new(*rate, 0.0) / Complex64::new(*rate, xi)).powu(*order)
        }
        KernelShape::Boxcar { width } => {
            let z = xi * width;
            if z.abs() < 1e-8 {
                Complex64::new(1.0, -0.5 * z)
            } else {
                (Complex64::new(1.0, 0.0) - (-i * z).exp()) / (i * z)
            }
        }
        KernelShape::Gaussian { sigma, mean } => {
            Complex64::new(-0.5 * sigma * sigma * xi * xi, -xi * mean).exp()
        }
        KernelShape::Lattice {
            offset,
            step,
            weights,
            spline,
        } => {
            // Phase recurrence, re-anchored every block to bound drift.
            const BLOCK: usize = 1024;
            let rot = Complex64::from_polar(1.0, -xi * step);
            let mut acc_re = KahanSum::new();
            let mut acc_im = KahanSum::new();
            for (b, chunk) in weights.chunks(BLOCK).enumerate() {
                let mut phase = Complex64::from_polar(1.0, -xi * (offset + (b * BLOCK) as f64 * step));
                for w in chunk {
                    acc_re.add(w * phase.re);
                    acc_im.add(w * phase.im);
                    phase *= rot;
                }
            }
            Complex64::new(acc_re.value(), acc_im.value()) * sinc(0.5 * xi * step).powi(*spline as i32)
        }
        KernelShape::Shifted { inner, shift } => fourier_transform(inner, xi)? * (-i * xi * shift).exp(),
        KernelShape::Combination(terms) => {
            let mut acc = Complex64::new(0.0, 0.0);
            for (c, k) in terms {
                acc += fourier_transform(k, xi)? * *c;
            }
            acc
        }
        KernelShape::Custom {
            transform: Some(t), ..
        } => t(xi),
        KernelShape::Custom { density, .. } => {
            let (lo, hi) = kernel.truncated_support()?;
            let cells = (((hi - lo) / LATTICE_STEP).ceil() as usize).max(1000);
            let h = (hi - lo) / cells as f64;
            let mut re = KahanSum::new();
            let mut im = KahanSum::new();
            for j in 0..cells {
                let t = lo + (j as f64 + 0.5) * h;
                let v = density(t) * h;
                if !v.is_finite() {
                    return Err(Error::Quadrature(format!("density is not finite at t = {t}")));
                }
                let (s, c) = (xi * t).sin_cos();
                re.add(v * c);
                im.add(-v * s);
            }
            Complex64::new(re.value(), im.value())
        }
    })
}

/// `f^{*k}`. Exponential, Erlang and Gaussian kernels stay in closed form;
/// everything else is self-convolved on a lattice of step [`LATTICE_STEP`]
/// by direct summation, without renormalization.
pub fn convolution_power(kernel: &Kernel, k: u32) -> Result<Kernel> {
    if k == 0 {
        return Err(Error::Precondition("convolution power needs k >= 1".into()));
    }
    if k == 1 {
        return Ok(kernel.clone());
    }
    let label = format!("{}^*{}", kernel.label, k);
    let out = match &kernel.shape {
        KernelShape::Exp { rate } => Kernel::erlang(k, *rate).with_label(label),
        KernelShape::Erlang { order, rate } => Kernel::erlang(order * k, *rate).with_label(label),
        KernelShape::Gaussian { sigma, mean } => {
            Kernel::gaussian(sigma * (k as f64).sqrt(), mean * k as f64).with_label(label)
        }
        _ => {
            let base = kernel.to_lattice(LATTICE_STEP)?;
            let expected = kernel.mass()?.powi(k as i32);
            let (offset, step, weights, spline) = match &base.shape {
                KernelShape::Lattice {
                    offset,
                    step,
                    weights,
                    spline,
                } => (*offset, *step, weights.as_ref().clone(), *spline),
                _ => unreachable!("to_lattice returns a lattice kernel"),
            };
            let powered = lattice_power(&weights, k);
            let actual = powered.iter().copied().collect::<KahanSum>().value();
            if (actual - expected).abs() > MASS_DRIFT_TOL {
                return Err(Error::MassDrift { expected, actual });
            }
            Kernel::from_shape(
                KernelShape::Lattice {
                    offset: offset * k as f64,
                    step,
                    weights: Arc::new(powered),
                    spline: spline * k,
                },
                label,
            )
        }
    };
    Ok(out)
}

/// k-fold discrete self-convolution by binary powering.
fn lattice_power(weights: &[f64], k: u32) -> Vec<f64> {
    let mut result: Option<Vec<f64>> = None;
    let mut base = weights.to_vec();
    let mut e = k;
    loop {
        if e & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => direct_convolve(&r, &base),
            });
        }
        e >>= 1;
        if e == 0 {
            break;
        }
        base = direct_convolve(&base, &base);
    }
    result.expect("k >= 1")
}

/// Full linear convolution by direct compensated summation.
pub fn direct_convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let n = a.len() + b.len() - 1;
    (0..n)
        .into_par_iter()
        .map(|m| {
            let lo = m.saturating_sub(b.len() - 1);
            let hi = m.min(a.len() - 1);
            let mut acc = KahanSum::new();
            for i in lo..=hi {
                acc.add(a[i] * b[m - i]);
            }
            acc.value()
        })
        .collect()
}

/// Full linear convolution through a zero-padded FFT.
pub fn fft_convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let n = a.len() + b.len() - 1;
    let size = n.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(size);
    let inverse = planner.plan_fft_inverse(size);
    let pad = |x: &[f64]| -> Vec<Complex64> {
        let mut v: Vec<Complex64> = x.iter().map(|&r| Complex64::new(r, 0.0)).collect();
        v.resize(size, Complex64::new(0.0, 0.0));
        v
    };
    let mut fa = pad(a);
    let mut fb = pad(b);
    forward.process(&mut fa);
    forward.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inverse.process(&mut fa);
    let scale = 1.0 / size as f64;
    fa[..n].iter().map(|c| c.re * scale).collect()
}

/// A signal tabulated as one value per grid cell.
#[derive(Debug, Clone)]
pub struct SampledSignal {
    origin: f64,
    step: f64,
    values: Arc<Vec<f64>>,
    bound: f64,
    label: String,
}

impl SampledSignal {
    pub fn new(label: impl Into<String>, origin: f64, step: f64, values: Vec<f64>, bound: f64) -> Self {
        Self {
            origin,
            step,
            values: Arc::new(values),
            bound,
            label: label.into(),
        }
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn end(&self) -> f64 {
        self.origin + self.values.len() as f64 * self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Cell value at `x`, clamped to the first or last cell outside the table.
    pub fn eval(&self, x: f64) -> f64 {
        let j = ((x - self.origin) / self.step).floor();
        let j = j.clamp(0.0, (self.values.len() - 1) as f64) as usize;
        self.values[j]
    }

    /// Midpoint of cell `i`.
    pub fn abscissa(&self, i: usize) -> f64 {
        self.origin + (i as f64 + 0.5) * self.step
    }

    pub fn to_continuous(&self) -> ContinuousSignal {
        let me = self.clone();
        ContinuousSignal::new(self.label.clone(), self.bound, move |x| me.eval(x))
    }

    pub fn prefix(&self) -> PrefixTable {
        PrefixTable::from_cell_integrals(self.origin, self.step, self.values.iter().map(|v| v * self.step))
    }

    /// Supremum and infimum over the cells whose midpoints lie in `[from, ∞)`.
    pub fn extremes_from(&self, from: f64) -> (f64, f64) {
        let start = ((from - self.origin) / self.step - 0.5).ceil().max(0.0) as usize;
        self.values[start.min(self.values.len() - 1)..]
            .iter()
            .fold((f64::NEG_INFINITY, f64::INFINITY), |(s, i), &v| (s.max(v), i.min(v)))
    }
}

fn conv_output(
    kernel: &Kernel,
    signal: &ContinuousSignal,
    grid: &GridSpec,
    combine: impl Fn(&[f64], &[f64]) -> Vec<f64>,
) -> Result<SampledSignal> {
    let h = grid.step;
    if !(h > 0.0) || !(grid.x_max > grid.x_cut) {
        return Err(Error::InvalidGrid {
            field: "step",
            reason: "convolution needs step > 0 and x_max > x_cut".into(),
        });
    }
    let cm = kernel.discretize(h)?;
    if cm.reach() > grid.x_cut + 1e-9 * h {
        return Err(Error::KernelWindow {
            truncation: cm.reach(),
            room: grid.x_cut,
        });
    }
    let n = grid.tail_cells();
    let len = cm.weights.len();
    let j1 = cm.first + len as i64 - 1;
    let mut samples = Vec::with_capacity(n + len - 1);
    for q in 0..(n + len - 1) {
        let m = q as i64 - j1;
        samples.push(signal.checked_eval(grid.x_cut + m as f64 * h)?);
    }
    let full = combine(&samples, &cm.weights);
    let values = full[len - 1..len - 1 + n].to_vec();
    Ok(SampledSignal::new(
        format!("{}*{}", kernel.label, signal.label()),
        grid.x_cut,
        h,
        values,
        signal.bound() * cm.abs_mass(),
    ))
}

/// `(f ∗ φ)(y) = ∫ φ(y − t) f(t) dt` on the cells of `[x_cut, x_max]`.
///
/// The kernel is reduced to exact cell masses on the grid and applied by FFT;
/// the kernel's truncated support must fit in `[0, x_cut]` on the right.
pub fn convolve(kernel: &Kernel, signal: &ContinuousSignal, grid: &GridSpec) -> Result<SampledSignal> {
    conv_output(kernel, signal, grid, fft_convolve)
}

/// Same as [`convolve`] with direct summation instead of an FFT.
pub fn convolve_direct(kernel: &Kernel, signal: &ContinuousSignal, grid: &GridSpec) -> Result<SampledSignal> {
    conv_output(kernel, signal, grid, direct_convolve)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassifyTolerances {
    /// `|f̂(0) − 1|` allowed for a normalized kernel.
    pub normalization: f64,
    /// `|f̂(ξ)|` below this at a local minimum marks a zero candidate.
    pub zero: f64,
    /// Width of the band below 1 in which `|f̂|` away from the origin is ambiguous.
    pub near_one: f64,
    /// `|ξ|` below which values close to 1 are expected by continuity.
    pub origin_radius: f64,
}

impl Default for ClassifyTolerances {
    fn default() -> Self {
        Self {
            normalization: 1e-6,
            zero: 1e-4,
            near_one: 1e-3,
            origin_radius: 0.5,
        }
    }
}

/// Grid evidence about a kernel's class membership.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelClass {
    pub mass: f64,
    pub nonnegative: bool,
    pub normalized: bool,
    pub flat: bool,
    pub strict_modulus: bool,
    pub wiener: bool,
    pub max_modulus_off_zero: f64,
    pub zero_candidates: Vec<f64>,
    /// Ambiguous findings that the grid cannot settle.
    pub inconclusive: Vec<String>,
}

/// `[−20, 20]` in steps of `1e-3`, without 0.
pub fn default_xi_grid() -> Vec<f64> {
    symmetric_xi_grid(20.0, 1e-3)
}

pub fn symmetric_xi_grid(extent: f64, step: f64) -> Vec<f64> {
    let n = (extent / step).round() as i64;
    (-n..=n).filter(|&j| j != 0).map(|j| j as f64 * step).collect()
}

fn sampled_nonnegative(kernel: &Kernel) -> Result<bool> {
    match &kernel.shape {
        KernelShape::Custom { .. } | KernelShape::Combination(_) => {
            let (lo, hi) = kernel.truncated_support()?;
            let n = (((hi - lo) / LATTICE_STEP).ceil() as usize).clamp(1, 100_000);
            let h = (hi - lo) / n as f64;
            Ok((0..=n).all(|j| kernel.density(lo + j as f64 * h) >= 0.0))
        }
        _ => Ok(true),
    }
}

/// Classifies a kernel from its transform on a ξ grid that excludes 0.
pub fn classify(kernel: &Kernel, xi_grid: &[f64], tol: &ClassifyTolerances) -> Result<KernelClass> {
    if xi_grid.len() < 3 || xi_grid.iter().any(|&x| x == 0.0 || !x.is_finite()) {
        return Err(Error::Precondition(
            "ξ grid needs at least three finite nonzero points".into(),
        ));
    }
    let mut grid = xi_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let mass = kernel.mass()?;
    let nonnegative = kernel.is_nonnegative() && sampled_nonnegative(kernel)?;
    let normalized = (mass - 1.0).abs() <= tol.normalization;
    let moduli: Vec<f64> = grid
        .par_iter()
        .map(|&xi| fourier_transform(kernel, xi).map(|z| z.norm()))
        .collect::<Result<_>>()?;

    let max_modulus_off_zero = moduli.iter().copied().fold(0.0, f64::max);
    let mut inconclusive = Vec::new();
    if let Some((xi, m)) = grid
        .iter()
        .zip(&moduli)
        .filter(|(xi, m)| xi.abs() >= tol.origin_radius && **m < 1.0 && **m >= 1.0 - tol.near_one)
        .map(|(x, m)| (*x, *m))
        .next()
    {
        inconclusive.push(format!("|f̂({xi})| = {m} lies within {} of 1", tol.near_one));
    }

    let mut zero_candidates = Vec::new();
    for i in 1..grid.len() - 1 {
        let m = moduli[i];
        if m <= moduli[i - 1] && m <= moduli[i + 1] {
            if m < tol.zero {
                zero_candidates.push(grid[i]);
            } else if m < 10.0 * tol.zero {
                inconclusive.push(format!("near-zero local minimum |f̂({})| = {m}", grid[i]));
            }
        }
    }

    Ok(KernelClass {
        mass,
        nonnegative,
        normalized,
        flat: nonnegative && normalized,
        strict_modulus: max_modulus_off_zero < 1.0,
        wiener: zero_candidates.is_empty(),
        max_modulus_off_zero,
        zero_candidates,
        inconclusive,
    })
}

pub const KERNEL_NAMES: [&str; 4] = ["exp", "erlang", "box", "gaussian"];

/// Looks up a named closed-form kernel.
pub fn kernel_library(name: &str, params: &ParamMap) -> Result<Kernel> {
    let allowed: &[&str] = match name {
        "exp" => &["rate"],
        "erlang" => &["order", "rate"],
        "box" => &["width"],
        "gaussian" => &["sigma", "mean"],
        other => return Err(Error::UnknownKernel(other.to_string())),
    };
    for key in params.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(Error::param(name, key, "unknown parameter"));
        }
    }
    let positive = |key: &str, default: f64| -> Result<f64> {
        let v = param_f64(params, name, key, Some(default))?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(Error::param(name, key, format!("must be positive, got {v}")))
        }
    };
    Ok(match name {
        "exp" => Kernel::exp(positive("rate", 1.0)?),
        "erlang" => {
            let order = positive("order", 2.0)?;
            if order.fract() != 0.0 || order > 10_000.0 {
                return Err(Error::param(name, "order", "must be a positive integer"));
            }
            Kernel::erlang(order as u32, positive("rate", 1.0)?)
        }
        "box" => Kernel::boxcar(positive("width", 1.0)?),
        "gaussian" => Kernel::gaussian(positive("sigma", 1.0)?, param_f64(params, name, "mean", Some(0.0))?),
        _ => unreachable!(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::ThetaGrid;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn small_grid(step: f64) -> GridSpec {
        GridSpec {
            x_max: 80.0,
            step,
            x_cut: 40.0,
            theta_grid: ThetaGrid::new(1.0, 2.0, 3),
        }
    }

    #[test]
    fn transform_examples() {
        let f = Kernel::exp(1.0);
        let z = fourier_transform(&f, 1.0).unwrap();
        assert!((z - Complex64::new(0.5, -0.5)).norm() < 1e-12);
        assert!((z.norm() - FRAC_1_SQRT_2).abs() < 1e-6);
        for k in [Kernel::exp(2.0), Kernel::erlang(3, 0.5), Kernel::boxcar(2.0), Kernel::gaussian(1.5, 0.3)] {
            assert!((fourier_transform(&k, 0.0).unwrap() - 1.0).norm() < 1e-6, "{}", k.label());
        }
        assert!(fourier_transform(&Kernel::boxcar(1.0), 2.0 * PI).unwrap().norm() < 1e-6);
    }

    #[test]
    fn quadrature_transform_matches_closed_form() {
        let custom = Kernel::custom("e", 0.0, f64::INFINITY, true, |t| (-t).exp()).with_tail(|t| (-t).exp());
        for xi in [0.0, 0.5, 1.0, 3.0] {
            let a = fourier_transform(&custom, xi).unwrap();
            let b = fourier_transform(&Kernel::exp(1.0), xi).unwrap();
            assert!((a - b).norm() < 1e-6, "xi = {xi}: {a} vs {b}");
        }
        let unbounded = Kernel::custom("u", 0.0, f64::INFINITY, true, |t| (-t).exp());
        assert!(matches!(fourier_transform(&unbounded, 1.0), Err(Error::Quadrature(_))));
    }

    #[test]
    fn cell_masses_sum_to_mass() {
        for k in [Kernel::exp(1.0), Kernel::erlang(4, 2.0), Kernel::boxcar(0.37), Kernel::gaussian(0.8, 2.0)] {
            let cm = k.discretize(0.01).unwrap();
            assert!((cm.mass() - 1.0).abs() < 2e-8, "{}: {}", k.label(), cm.mass());
        }
    }

    #[test]
    fn convolving_a_constant_is_exact() {
        let c = ContinuousSignal::new("c", 0.7, |_| 0.7);
        for k in [Kernel::exp(1.0), Kernel::gaussian(1.0, 0.0), Kernel::boxcar(1.0), Kernel::erlang(2, 1.0)] {
            let out = convolve(&k, &c, &small_grid(0.01)).unwrap();
            for v in out.values() {
                assert!((v - 0.7).abs() < 1e-6, "{}: {v}", k.label());
            }
        }
    }

    #[test]
    fn eigen_relation() {
        let f = Kernel::exp(1.0);
        for xi in [0.5, 1.0, 2.0] {
            let s = ContinuousSignal::new("cos", 1.0, move |x| (xi * x).cos());
            let out = convolve(&f, &s, &small_grid(1e-3)).unwrap();
            let fh = fourier_transform(&f, xi).unwrap();
            let worst = (0..out.values().len())
                .map(|i| {
                    let y = out.abscissa(i);
                    let expected = (fh * Complex64::from_polar(1.0, xi * y)).re;
                    (out.values()[i] - expected).abs()
                })
                .fold(0.0, f64::max);
            assert!(worst <= 1e-4, "xi = {xi}: {worst}");
        }
    }

    #[test]
    fn sine_amplitude_through_exp() {
        let s = ContinuousSignal::new("sin", 1.0, f64::sin);
        let out = convolve(&Kernel::exp(1.0), &s, &small_grid(0.01)).unwrap();
        let (sup, inf) = out.extremes_from(40.0);
        assert!((sup - FRAC_1_SQRT_2).abs() < 0.01 && (inf + FRAC_1_SQRT_2).abs() < 0.01);
    }

    #[test]
    fn fft_matches_direct_summation() {
        let s = ContinuousSignal::new("s", 1.0, |x| (0.3 * x).sin() * (1.7 * x).cos());
        let g = small_grid(0.01);
        for k in [Kernel::exp(1.0), Kernel::gaussian(1.0, 0.0)] {
            let a = convolve(&k, &s, &g).unwrap();
            let b = convolve_direct(&k, &s, &g).unwrap();
            let worst = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            assert!(worst < 1e-12, "{worst}");
        }
    }

    #[test]
    fn window_error_when_kernel_does_not_fit() {
        let grid = GridSpec {
            x_max: 80.0,
            step: 0.01,
            x_cut: 10.0,
            theta_grid: ThetaGrid::new(1.0, 2.0, 3),
        };
        let s = ContinuousSignal::new("c", 1.0, |_| 1.0);
        assert!(matches!(
            convolve(&Kernel::exp(1.0), &s, &grid),
            Err(Error::KernelWindow { .. })
        ));
    }

    #[test]
    fn power_examples() {
        let f = Kernel::exp(1.0);
        let p1 = convolution_power(&f, 1).unwrap();
        assert!(matches!(p1.shape(), KernelShape::Exp { rate } if *rate == 1.0));
        let p2 = convolution_power(&f, 2).unwrap();
        assert!((p2.density(1.7) - 1.7 * (-1.7f64).exp()).abs() < 1e-12);
        assert!((fourier_transform(&p2, 1.0).unwrap().norm() - 0.5).abs() < 1e-6);
        let b5 = convolution_power(&Kernel::boxcar(1.0), 5).unwrap();
        assert!((b5.mass().unwrap() - 1.0).abs() < 1e-5);
        assert!(convolution_power(&f, 0).is_err());
    }

    #[test]
    fn lattice_power_matches_transform_power() {
        let f = Kernel::boxcar(1.0);
        let p = convolution_power(&f, 3).unwrap();
        for xi in symmetric_xi_grid(5.0, 0.25) {
            let lhs = fourier_transform(&p, xi).unwrap();
            let rhs = fourier_transform(&f, xi).unwrap().powu(3);
            assert!((lhs - rhs).norm() < 1e-5, "xi = {xi}");
        }
        let c = Kernel::combination("mix", vec![(0.5, Kernel::exp(1.0)), (0.5, Kernel::boxcar(2.0))]);
        let p = convolution_power(&c, 2).unwrap();
        for xi in [0.3, 1.0, 4.0] {
            let lhs = fourier_transform(&p, xi).unwrap();
            let rhs = fourier_transform(&c, xi).unwrap().powu(2);
            assert!((lhs - rhs).norm() < 1e-5, "xi = {xi}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn classification_examples() {
        let grid = default_xi_grid();
        let tol = ClassifyTolerances::default();
        let e = classify(&Kernel::exp(1.0), &grid, &tol).unwrap();
        assert!(e.flat && e.strict_modulus && e.wiener);
        let g = classify(&Kernel::gaussian(1.0, 0.0), &grid, &tol).unwrap();
        assert!(g.flat && g.strict_modulus && g.wiener, "{g:?}");
        let b = classify(&Kernel::boxcar(1.0), &grid, &tol).unwrap();
        assert!(b.flat && b.strict_modulus && !b.wiener);
        assert!(b.zero_candidates.iter().any(|z| (z - 2.0 * PI).abs() <= 1e-3));
        assert!(b.zero_candidates.iter().any(|z| (z + 2.0 * PI).abs() <= 1e-3));
    }

    #[test]
    fn flat_library_kernels_have_strict_modulus() {
        let grid = symmetric_xi_grid(20.0, 0.01);
        let tol = ClassifyTolerances::default();
        for k in [
            Kernel::exp(0.5),
            Kernel::exp(3.0),
            Kernel::erlang(2, 1.0),
            Kernel::erlang(5, 2.0),
            Kernel::boxcar(0.5),
            Kernel::boxcar(3.0),
            Kernel::gaussian(0.5, 1.0),
            Kernel::gaussian(2.0, 0.0),
        ] {
            let c = classify(&k, &grid, &tol).unwrap();
            assert!(c.flat, "{}", k.label());
            assert!(c.strict_modulus, "{}", k.label());
        }
    }

    #[test]
    fn witness_is_not_flat() {
        let w = Kernel::exp(1.0).tauberian_witness().unwrap();
        let c = classify(&w, &symmetric_xi_grid(5.0, 0.01), &ClassifyTolerances::default()).unwrap();
        assert!(!c.nonnegative && !c.normalized);
        assert!(c.mass.abs() < 1e-12);
        let z = fourier_transform(&w, 1.0).unwrap();
        assert!((z.norm() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn library_lookup() {
        let mut p = ParamMap::new();
        p.insert("rate".into(), 2.0.into());
        assert!(matches!(kernel_library("exp", &p).unwrap().shape(), KernelShape::Exp { rate } if *rate == 2.0));
        assert!(matches!(kernel_library("nope", &p), Err(Error::UnknownKernel(_))));
        p.insert("rate".into(), (-1.0).into());
        assert!(kernel_library("exp", &p).is_err());
        let mut p = ParamMap::new();
        p.insert("order".into(), 2.5.into());
        assert!(kernel_library("erlang", &p).is_err());
    }

    #[test]
    fn samples_build_lattice_kernels() {
        let ts: Vec<f64> = (0..=1000).map(|j| j as f64 * 1e-3).collect();
        let vs = vec![1.0; 1001];
        let k = Kernel::from_samples("csv", &ts, &vs).unwrap();
        assert!((k.mass().unwrap() - 1.0).abs() < 1e-12);
        let b = fourier_transform(&Kernel::boxcar(1.0), 2.0).unwrap();
        assert!((fourier_transform(&k, 2.0).unwrap() - b).norm() < 1e-6);
        let ts: Vec<f64> = (0..=20000).map(|j| j as f64 * 1e-3).collect();
        let vs: Vec<f64> = ts.iter().map(|t| (-t).exp()).collect();
        let k = Kernel::from_samples("exp", &ts, &vs).unwrap();
        assert!((k.mass().unwrap() - 1.0).abs() < 1e-6);
        assert!(Kernel::from_samples("bad", &[0.0, 1.0, 3.0], &[1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn deposit_preserves_mass_and_mean() {
        let pts = [(0.0123, 0.3), (0.05, 0.2), (0.0777, 0.5)];
        let cm = deposit(0.01, pts.iter().copied());
        assert!((cm.mass() - 1.0).abs() < 1e-15);
        let mean: f64 = cm
            .weights
            .iter()
            .enumerate()
            .map(|(j, w)| w * (cm.first as f64 + j as f64 + 0.5) * 0.01)
            .sum();
        let expected: f64 = pts.iter().map(|(t, w)| t * w).sum();
        assert!((mean - expected).abs() < 1e-15);
    }
}
