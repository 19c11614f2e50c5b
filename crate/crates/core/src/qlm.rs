//! Quasilinearization: linearize `y'' = -sigma t^gamma y^beta` around the
//! current iterate `y_r`, expand `y_{r+1}''` in Haar functions with the
//! Dirichlet conditions built into the reconstruction, and solve one linear
//! collocation system per sweep.

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::haar::{CoefficientVector, HaarSystem};
use crate::linsolve::{self, DenseMatrix};
use crate::problem::{BoundaryKind, EmdenFowlerProblem, Method, PowerGuard, SolutionGrid};
use crate::InitialGuess;

#[derive(Debug, Clone, PartialEq)]
pub struct QlmSettings {
    /// Number of linearized solves.
    pub max_iter: usize,
    /// Stop once the sup-norm change of the collocation values drops below this.
    pub tol: f64,
    /// Starting values `y_0(t_c)` at the collocation points.
    pub init_guess: InitialGuess,
    pub guard: PowerGuard,
    pub eval_points: Vec<f64>,
    pub exec: Execution,
}

impl Default for QlmSettings {
    fn default() -> Self {
        QlmSettings {
            max_iter: 50,
            tol: 1e-10,
            init_guess: InitialGuess::Constant(0.0),
            guard: PowerGuard::Error,
            eval_points: crate::report_points(),
            exec: Execution::default(),
        }
    }
}

impl QlmSettings {
    /// Stop at iterate index `r`: the last linearization is taken around
    /// `y_r`, so the reported solution is `y_{r+1}` (`r + 1` solves).
    pub fn through_iterate(r: usize) -> Self {
        QlmSettings {
            max_iter: r + 1,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidSettings("max_iter must be at least 1".into()));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidSettings("tol must be positive".into()));
        }
        Ok(())
    }
}

fn require_dirichlet(problem: &EmdenFowlerProblem) -> Result<()> {
    if problem.bc != BoundaryKind::Dirichlet {
        return Err(Error::Unsupported(
            "quasilinearization supports only y(0) = 1, y(1) = 0".into(),
        ));
    }
    Ok(())
}

/// Collocation system `A a = b` for one quasilinear sweep around `y_r`
/// (values at the collocation points).
///
/// `A(c, i) = h_i(t_c) + w_c (P_{2,i}(t_c) - t_c P_{2,i}(1))` and
/// `b(c) = w_c y_r - f(y_r) - w_c (1 - t_c)`, where `f = sigma t^gamma y^beta`
/// and `w = df/dy`.
pub fn assemble(
    problem: &EmdenFowlerProblem,
    system: &HaarSystem,
    y_r: &[f64],
    guard: PowerGuard,
) -> Result<(DenseMatrix, Vec<f64>)> {
    assemble_with(problem, system, y_r, guard, Execution::default())
}

pub fn assemble_with(
    problem: &EmdenFowlerProblem,
    system: &HaarSystem,
    y_r: &[f64],
    guard: PowerGuard,
    exec: Execution,
) -> Result<(DenseMatrix, Vec<f64>)> {
    require_dirichlet(problem)?;
    let n = system.n();
    if y_r.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: y_r.len(),
        });
    }
    let rows = exec::try_map_indexed(n, exec, |c| {
        let t = system.colloc[c];
        let (f, w) = problem.source_with_slope(t, y_r[c], guard)?;
        let row: Vec<f64> = (0..n)
            .map(|i| system.h[(i, c)] + w * system.dirichlet_basis(c, i))
            .collect();
        let rhs = w * y_r[c] - f - w * (1.0 - t);
        Ok::<_, Error>((row, rhs))
    })?;
    let mut data = Vec::with_capacity(n * n);
    let mut b = Vec::with_capacity(n);
    for (row, rhs) in rows {
        data.extend(row);
        b.push(rhs);
    }
    Ok((DenseMatrix::from_row_major(n, data), b))
}

/// `(y, y', y'')` of the Dirichlet reconstruction
/// `y = 1 - t + sum a_i (P_{2,i}(t) - t P_{2,i}(1))` at any `t`.
pub fn reconstruct(a: &CoefficientVector, system: &HaarSystem, t: f64) -> (f64, f64, f64) {
    let dy0 = dirichlet_slope(a.as_slice(), system);
    let s = a.series(system.config, t);
    (1.0 + t * dy0 + s.p2, dy0 + s.p1, s.h)
}

/// `y'(0) = -1 - sum a_i P_{2,i}(1)`.
pub fn dirichlet_slope(a: &[f64], system: &HaarSystem) -> f64 {
    -1.0 - a
        .iter()
        .zip(&system.p2_at_1)
        .map(|(a, p)| a * p)
        .sum::<f64>()
}

/// Dirichlet reconstruction at every collocation point.
pub(crate) fn dirichlet_values(a: &[f64], system: &HaarSystem) -> Vec<f64> {
    let dy0 = dirichlet_slope(a, system);
    let p2 = system.p2.tr_mul_vec(a);
    system
        .colloc
        .iter()
        .zip(p2)
        .map(|(&t, p)| 1.0 + t * dy0 + p)
        .collect()
}

pub fn solve_qlm(
    problem: &EmdenFowlerProblem,
    system: &HaarSystem,
    settings: &QlmSettings,
) -> Result<SolutionGrid> {
    require_dirichlet(problem)?;
    settings.validate()?;
    let n = system.n();
    let mut y = settings.init_guess.resolve(n)?;
    let mut a = vec![0.0; n];
    let mut iterations = 0;

    while iterations < settings.max_iter {
        let (mat, rhs) = assemble_with(problem, system, &y, settings.guard, settings.exec)?;
        a = linsolve::LuFactors::factor_with(&mat, settings.exec)?.solve(&rhs)?;
        iterations += 1;
        let next = dirichlet_values(&a, system);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                iteration: iterations,
            });
        }
        let change = next
            .iter()
            .zip(&y)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max);
        y = next;
        log::debug!(
            "qlm J={} sweep {iterations}: change {change:e}",
            system.config.level()
        );
        if change < settings.tol {
            break;
        }
    }

    let dy0 = dirichlet_slope(&a, system);
    let mut sol = SolutionGrid::new(
        system.config,
        CoefficientVector(a),
        dy0,
        iterations,
        Method::Qlm,
        settings.eval_points.clone(),
    );
    sol.attach_residual(problem, settings.guard);
    Ok(sol)
}
