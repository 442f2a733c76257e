use std::ops::AddAssign;

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct KahanSum {
    sum: f64,
    err: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.err += (self.sum - t) + value;
        } else {
            self.err += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.err
    }
}

impl AddAssign<f64> for KahanSum {
    fn add_assign(&mut self, rhs: f64) {
        self.add(rhs);
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Cumulative compensated sums: `out[0] = 0`, `out[j + 1] = values[0] + … + values[j]`.
pub fn prefix_sums(values: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let iter = values.into_iter();
    let mut out = Vec::with_capacity(iter.size_hint().0 + 1);
    out.push(0.0);
    let mut acc = KahanSum::new();
    for v in iter {
        acc.add(v);
        out.push(acc.value());
    }
    out
}
