//! Haar wavelet collocation solvers for singular nonlinear two-point
//! boundary value problems of generalized Emden-Fowler type,
//!
//! ```text
//! y''(t) + sigma * t^gamma * y(t)^beta = 0,   t in (0, 1),
//! ```
//!
//! with `y(0) = 1` and either `y(1) = 0` (ionized atom) or `y'(1) = y(1)`
//! (neutral atom). The Thomas-Fermi equation is the special case
//! `sigma = -1, gamma = -1/2, beta = 3/2`.
//!
//! Two solution routes share the same Haar machinery:
//!
//! * [qlm] linearizes the ODE around the current iterate and solves one
//!   linear collocation system per sweep.
//! * [newton] collocates the full nonlinear ODE and runs damped Newton on
//!   the Haar coefficients.
//!
//! The second derivative is expanded as `y'' = sum a_i h_i(t)`; `y'` and `y`
//! follow from the analytic integrals of the Haar functions, so boundary
//! conditions are built into the reconstruction instead of being imposed
//! as extra equations.
//!
//! Assembly loops run on rayon when the `parallel` feature is enabled (the
//! default). Every routine that fans out also accepts an explicit
//! [Execution] so the sequential path stays available at runtime.

pub mod error;
pub mod exec;
pub mod haar;
pub mod linsolve;
pub mod newton;
pub mod problem;
pub mod qlm;
pub mod refdata;
pub mod report;
pub mod study;

pub use error::{Error, Result};
pub use exec::Execution;
pub use haar::{CoefficientVector, HaarSystem, ResolutionConfig, WaveletIndex};
pub use linsolve::DenseMatrix;
pub use newton::{JacobianMode, NewtonSettings, RobinScheme};
pub use problem::{BoundaryKind, EmdenFowlerProblem, Example, Method, PowerGuard, SolutionGrid};
pub use qlm::QlmSettings;

/// Initial guess shared by both solvers: either one value broadcast to
/// every slot or an explicit vector.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialGuess {
    Constant(f64),
    Vector(Vec<f64>),
}

impl InitialGuess {
    pub(crate) fn resolve(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            InitialGuess::Constant(v) => Ok(vec![*v; n]),
            InitialGuess::Vector(v) if v.len() == n => Ok(v.clone()),
            InitialGuess::Vector(v) => Err(Error::DimensionMismatch {
                expected: n,
                found: v.len(),
            }),
        }
    }
}

/// The report abscissae used by every published table: t = 0.1, 0.2, ..., 0.9.
pub fn report_points() -> Vec<f64> {
    (1..=9).map(|k| k as f64 / 10.0).collect()
}
