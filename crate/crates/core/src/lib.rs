//! Numerical summability laboratory for bounded signals.
//!
//! Evaluates sublinear limit functionals (sliding-window means, kernel
//! convolution limits, Hölder/Cesàro means, logarithmic means) at finite
//! grids and bundles them into theorem-style consistency reports.

pub mod convfunc;
pub mod error;
pub mod holder;
pub mod kahan;
pub mod kernel;
pub mod mellin;
pub mod report;
pub mod signal;
pub mod verify;

pub use convfunc::{
    almost_convergence_test, f_infinity, lower_f, residual_check, tauberian_check, translate_condition,
    upper_f, upper_f_k, upper_p, wiener_cross_check, Estimate, FunctionalEstimate, SummabilityVerdict,
    SweepPoint, Tolerances, VerdictStatus,
};
pub use error::{Error, Result};
pub use holder::{
    banach_upper, bridge_v, bridge_v1, c_infinity_test, c_infinity_upper, cesaro, holder_upper,
    logarithmic_method, DiscreteEstimate, DiscreteGrid,
};
pub use kahan::KahanSum;
pub use kernel::{
    classify, convolution_power, convolve, fourier_transform, kernel_library, ClassifyTolerances, Kernel,
    KernelClass, KernelShape, SampledSignal,
};
pub use mellin::{
    hardy_operator, mellin_convolve, mellin_pullback, q_summability_test, upper_q, wrap_log, HaarTable,
    MellinKernel, MultiplicativeSignal, QEstimate,
};
pub use signal::{
    build_prefix, signal_library, window_mean, ContinuousSignal, DiscreteSignal, Domain, GridSpec,
    LibrarySignal, ParamMap, PrefixTable, ThetaGrid, Weight,
};
pub use verify::{run_suite, Discrepancy, Measurement, Status, SuiteInput, SuiteResult, TheoremReport, Trace};
