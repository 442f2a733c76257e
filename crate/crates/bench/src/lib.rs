//! Shared fixtures for the benchmarks.

use sumlab_core::signal::{continuous_signal, discrete_signal, params};
use sumlab_core::{ContinuousSignal, DiscreteSignal, GridSpec, ParamMap, ThetaGrid};

/// A reduced continuous grid: `[0, 1200]` at step `0.01`, tail from 200.
pub fn bench_grid() -> GridSpec {
    GridSpec {
        x_max: 1200.0,
        step: 0.01,
        x_cut: 200.0,
        theta_grid: ThetaGrid::new(1.0, 2.0, 8),
    }
}

pub fn sine() -> ContinuousSignal {
    continuous_signal("sinusoid", &params([("omega", 1.0)])).expect("library signal")
}

pub fn log_cosine() -> DiscreteSignal {
    discrete_signal("log_cosine", &ParamMap::new()).expect("library signal")
}
