//! Direct nonlinear collocation solved by damped Newton.
//!
//! `y''` is expanded as `sum a_i h_i`, `y` is reconstructed with `y(0) = 1`
//! built in, and the ODE is collocated at the `2M` midpoints:
//!
//! ```text
//! Phi_c(a) = sum_i a_i h_i(t_c) + sigma t_c^gamma y(t_c)^beta = 0.
//! ```
//!
//! Three reconstructions are available:
//!
//! * Dirichlet: `y = 1 - t + sum a_i (P_{2,i}(t) - t P_{2,i}(1))`.
//! * [`RobinScheme::Augmented`]: `y = 1 + t s + sum a_i P_{2,i}(t)` with the
//!   slope `s = y'(0)` as an extra unknown and `y'(1) = y(1)` appended as
//!   equation `2M + 1`.
//! * [`RobinScheme::EndpointClosure`]: the Dirichlet profile with the right
//!   end value taken from the ODE at `t = 1`,
//!   `y(1) = (-(y''(1) + forcing) / sigma)^(1/beta)`, added as `t * y(1)`.
//!   This reproduces the published neutral-atom table; the Robin condition
//!   itself is only satisfied approximately.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::haar::{CoefficientVector, HaarSystem};
use crate::linsolve::{self, DenseMatrix};
use crate::problem::{
    power_with_slope, BoundaryKind, EmdenFowlerProblem, Method, PowerGuard, SolutionGrid,
};
use crate::qlm::{dirichlet_slope, dirichlet_values};
use crate::InitialGuess;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JacobianMode {
    #[default]
    Analytic,
    /// Central differences with step [`NewtonSettings::fd_step`].
    FiniteDifference,
}

/// Discretization of `y'(1) = y(1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RobinScheme {
    #[default]
    Augmented,
    EndpointClosure,
}

impl FromStr for RobinScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "augmented" => Ok(RobinScheme::Augmented),
            "endpoint" | "endpoint-closure" | "closure" => Ok(RobinScheme::EndpointClosure),
            other => Err(Error::InvalidSettings(format!(
                "unknown Robin scheme `{other}`"
            ))),
        }
    }
}

/// Which space the initial guess lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GuessSpace {
    /// Haar coefficients `a_i`.
    #[default]
    Coefficients,
    /// Values `y(t_c)`; converted by inverting the reconstruction.
    Values,
}

impl FromStr for GuessSpace {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "coefficients" | "coeffs" => Ok(GuessSpace::Coefficients),
            "values" => Ok(GuessSpace::Values),
            other => Err(Error::InvalidSettings(format!(
                "unknown guess space `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonSettings {
    pub max_iter: usize,
    /// Convergence threshold on `||Phi||_inf`.
    pub tol: f64,
    pub init_guess: InitialGuess,
    pub guess_space: GuessSpace,
    /// Maximum number of step halvings; `0` gives plain Newton.
    pub damping: u32,
    pub jacobian_mode: JacobianMode,
    pub fd_step: f64,
    pub guard: PowerGuard,
    pub robin_scheme: RobinScheme,
    pub eval_points: Vec<f64>,
    pub exec: Execution,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        NewtonSettings {
            max_iter: 50,
            tol: 1e-10,
            init_guess: InitialGuess::Constant(1.0),
            guess_space: GuessSpace::Coefficients,
            damping: 30,
            jacobian_mode: JacobianMode::Analytic,
            fd_step: 1e-6,
            guard: PowerGuard::Error,
            robin_scheme: RobinScheme::Augmented,
            eval_points: crate::report_points(),
            exec: Execution::default(),
        }
    }
}

impl NewtonSettings {
    fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidSettings("max_iter must be at least 1".into()));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidSettings("tol must be positive".into()));
        }
        if self.fd_step.is_nan() || self.fd_step <= 0.0 {
            return Err(Error::InvalidSettings("fd_step must be positive".into()));
        }
        Ok(())
    }
}

/// Coefficients plus the free initial slope of the augmented Robin system.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedUnknowns {
    pub a: Vec<f64>,
    pub dy0: f64,
}

impl AugmentedUnknowns {
    fn to_vec(&self) -> Vec<f64> {
        let mut u = self.a.clone();
        u.push(self.dy0);
        u
    }
}

/// A collocated nonlinear system `Phi(u) = 0`.
trait Formulation: Sync {
    fn dim(&self) -> usize;
    /// `y(t_c)` for every collocation point.
    fn values(&self, u: &[f64]) -> Result<Vec<f64>>;
    /// Rows of the analytic Jacobian.
    fn jacobian(&self, u: &[f64]) -> Result<DenseMatrix>;
    fn residual(&self, u: &[f64]) -> Result<Vec<f64>>;
    /// Reconstructed `y'(0)`.
    fn slope(&self, u: &[f64]) -> Result<f64>;
}

struct Collocation<'a> {
    problem: &'a EmdenFowlerProblem,
    system: &'a HaarSystem,
    guard: PowerGuard,
    exec: Execution,
}

impl Collocation<'_> {
    fn n(&self) -> usize {
        self.system.n()
    }

    /// `Phi_c` for the first `2M` components, given `y(t_c)`.
    fn collocated(&self, a: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let h = self.system.h.tr_mul_vec(a);
        exec::try_map_indexed(self.n(), self.exec, |c| {
            let (f, _) = self
                .problem
                .source_with_slope(self.system.colloc[c], y[c], self.guard)?;
            Ok(h[c] + f)
        })
    }

    /// `d f / d y` at every collocation point.
    fn slopes(&self, y: &[f64]) -> Result<Vec<f64>> {
        exec::try_map_indexed(self.n(), self.exec, |c| {
            Ok(self
                .problem
                .source_with_slope(self.system.colloc[c], y[c], self.guard)?
                .1)
        })
    }

    /// Rows `h_i(t_c) + w_c * dy_c/du_i`, with `dy` supplied per `(c, i)`.
    fn rows<F>(&self, width: usize, w: &[f64], dy: F) -> Vec<f64>
    where
        F: Fn(usize, usize) -> f64 + Sync + Send,
    {
        let n = self.n();
        let rows = exec::map_indexed(n, self.exec, |c| {
            (0..width)
                .map(|i| {
                    let h = if i < n { self.system.h[(i, c)] } else { 0.0 };
                    h + w[c] * dy(c, i)
                })
                .collect::<Vec<f64>>()
        });
        rows.into_iter().flatten().collect()
    }
}

struct DirichletForm<'a>(Collocation<'a>);

impl Formulation for DirichletForm<'_> {
    fn dim(&self) -> usize {
        self.0.n()
    }

    fn values(&self, u: &[f64]) -> Result<Vec<f64>> {
        Ok(dirichlet_values(u, self.0.system))
    }

    fn jacobian(&self, u: &[f64]) -> Result<DenseMatrix> {
        let y = self.values(u)?;
        let w = self.0.slopes(&y)?;
        let sys = self.0.system;
        let n = self.dim();
        Ok(DenseMatrix::from_row_major(
            n,
            self.0.rows(n, &w, |c, i| sys.dirichlet_basis(c, i)),
        ))
    }

    fn residual(&self, u: &[f64]) -> Result<Vec<f64>> {
        let y = self.values(u)?;
        self.0.collocated(u, &y)
    }

    fn slope(&self, u: &[f64]) -> Result<f64> {
        Ok(dirichlet_slope(u, self.0.system))
    }
}

struct AugmentedRobinForm<'a>(Collocation<'a>);

impl Formulation for AugmentedRobinForm<'_> {
    fn dim(&self) -> usize {
        self.0.n() + 1
    }

    fn values(&self, u: &[f64]) -> Result<Vec<f64>> {
        let n = self.0.n();
        let (a, dy0) = (&u[..n], u[n]);
        let p2 = self.0.system.p2.tr_mul_vec(a);
        Ok(self
            .0
            .system
            .colloc
            .iter()
            .zip(p2)
            .map(|(&t, p)| 1.0 + t * dy0 + p)
            .collect())
    }

    fn jacobian(&self, u: &[f64]) -> Result<DenseMatrix> {
        let n = self.0.n();
        let y = self.values(u)?;
        let w = self.0.slopes(&y)?;
        let sys = self.0.system;
        let mut data = self.0.rows(n + 1, &w, |c, i| {
            if i < n {
                sys.p2[(i, c)]
            } else {
                sys.colloc[c]
            }
        });
        data.extend((0..n).map(|i| sys.p1_at_1[i] - sys.p2_at_1[i]));
        data.push(0.0);
        Ok(DenseMatrix::from_row_major(n + 1, data))
    }

    fn residual(&self, u: &[f64]) -> Result<Vec<f64>> {
        let n = self.0.n();
        let y = self.values(u)?;
        let mut phi = self.0.collocated(&u[..n], &y)?;
        let sys = self.0.system;
        let bc: f64 = u[..n]
            .iter()
            .enumerate()
            .map(|(i, a)| a * (sys.p1_at_1[i] - sys.p2_at_1[i]))
            .sum();
        phi.push(bc - 1.0);
        Ok(phi)
    }

    fn slope(&self, u: &[f64]) -> Result<f64> {
        Ok(u[self.0.n()])
    }
}

struct EndpointClosureForm<'a>(Collocation<'a>);

impl EndpointClosureForm<'_> {
    /// `(y(1), d y(1) / d q)` with `q = -(y''(1) + forcing) / sigma`.
    fn end_value(&self, a: &[f64]) -> Result<(f64, f64)> {
        let p = self.0.problem;
        let ypp1: f64 = a
            .iter()
            .zip(&self.0.system.h_at_1)
            .map(|(a, h)| a * h)
            .sum();
        let q = -(ypp1 + p.forcing) / p.sigma;
        power_with_slope(q, 1.0 / p.beta, self.0.guard)
    }
}

impl Formulation for EndpointClosureForm<'_> {
    fn dim(&self) -> usize {
        self.0.n()
    }

    fn values(&self, u: &[f64]) -> Result<Vec<f64>> {
        let (y1, _) = self.end_value(u)?;
        let mut y = dirichlet_values(u, self.0.system);
        for (v, &t) in y.iter_mut().zip(&self.0.system.colloc) {
            *v += t * y1;
        }
        Ok(y)
    }

    fn jacobian(&self, u: &[f64]) -> Result<DenseMatrix> {
        let (_, dy1) = self.end_value(u)?;
        let y = self.values(u)?;
        let w = self.0.slopes(&y)?;
        let sys = self.0.system;
        let sigma = self.0.problem.sigma;
        let n = self.dim();
        let data = self.0.rows(n, &w, |c, i| {
            sys.dirichlet_basis(c, i) + sys.colloc[c] * dy1 * (-sys.h_at_1[i] / sigma)
        });
        let jac = DenseMatrix::from_row_major(n, data);
        if !jac.is_finite() {
            return Err(Error::NonFinite { iteration: 0 });
        }
        Ok(jac)
    }

    fn residual(&self, u: &[f64]) -> Result<Vec<f64>> {
        let y = self.values(u)?;
        self.0.collocated(u, &y)
    }

    fn slope(&self, u: &[f64]) -> Result<f64> {
        Ok(dirichlet_slope(u, self.0.system) + self.end_value(u)?.0)
    }
}

fn collocation<'a>(
    problem: &'a EmdenFowlerProblem,
    system: &'a HaarSystem,
    guard: PowerGuard,
) -> Collocation<'a> {
    Collocation {
        problem,
        system,
        guard,
        exec: Execution::default(),
    }
}

/// `Phi(a)` for the Dirichlet system.
pub fn residual_system_dirichlet(
    a: &[f64],
    problem: &EmdenFowlerProblem,
    system: &HaarSystem,
    guard: PowerGuard,
) -> Result<Vec<f64>> {
    check_len(a, system.n())?;
    DirichletForm(collocation(problem, system, guard)).residual(a)
}

/// `J(c, i) = h_i(t_c) + sigma beta t_c^gamma y_c^(beta-1) (P_{2,i}(t_c) - t_c P_{2,i}(1))`.
pub fn jacobian_dirichlet(
    a: &[f64],
    problem: &EmdenFowlerProblem,
    system: &HaarSystem,
    guard: PowerGuard,
) -> Result<DenseMatrix> {
    check_len(a, system.n())?;
    DirichletForm(collocation(problem, system, guard)).jacobian(a)
}

/// `2M` collocation residuals followed by `sum a_i (P_{1,i}(1) - P_{2,i}(1)) - 1`.
pub fn residual_system_robin(
    u: &AugmentedUnknowns,
    problem: &EmdenFowlerProblem,
    system: &HaarSystem,
    guard: PowerGuard,
) -> Result<Vec<f64>> {
    check_len(&u.a, system.n())?;
    AugmentedRobinForm(collocation(problem, system, guard)).residual(&u.to_vec())
}

pub fn jacobian_robin(
    u: &AugmentedUnknowns,
    problem: &EmdenFowlerProblem,
    system: &HaarSystem,
    guard: PowerGuard,
) -> Result<DenseMatrix> {
    check_len(&u.a, system.n())?;
    AugmentedRobinForm(collocation(problem, system, guard)).jacobian(&u.to_vec())
}

pub fn residual_system_closure(
    a: &[f64],
    problem: &EmdenFowlerProblem,
    system: &HaarSystem,
    guard: PowerGuard,
) -> Result<Vec<f64>> {
    check_len(a, system.n())?;
    require_sigma(problem)?;
    EndpointClosureForm(collocation(problem, system, guard)).residual(a)
}

pub fn jacobian_closure(
    a: &[f64],
    problem: &EmdenFowlerProblem,
    system: &HaarSystem,
    guard: PowerGuard,
) -> Result<DenseMatrix> {
    check_len(a, system.n())?;
    require_sigma(problem)?;
    EndpointClosureForm(collocation(problem, system, guard)).jacobian(a)
}

fn check_len(a: &[f64], n: usize) -> Result<()> {
    if a.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.len(),
        });
    }
    Ok(())
}

fn require_sigma(problem: &EmdenFowlerProblem) -> Result<()> {
    if problem.sigma == 0.0 {
        return Err(Error::InvalidSettings(
            "the endpoint closure needs sigma != 0".into(),
        ));
    }
    Ok(())
}

/// Central-difference Jacobian of `f` at `u`, one column per unknown.
pub fn finite_difference_jacobian<F>(
    f: F,
    u: &[f64],
    step: f64,
    exec: Execution,
) -> Result<DenseMatrix>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync + Send,
{
    let n = u.len();
    let columns = exec::try_map_indexed(n, exec, |k| {
        let mut up = u.to_vec();
        let mut dn = u.to_vec();
        up[k] += step;
        dn[k] -= step;
        let fp = f(&up)?;
        let fm = f(&dn)?;
        if fp.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: fp.len(),
            });
        }
        Ok(fp
            .iter()
            .zip(&fm)
            .map(|(p, m)| (p - m) / (2.0 * step))
            .collect::<Vec<f64>>())
    })?;
    Ok(DenseMatrix::from_fn(n, |r, c| columns[c][r]))
}

fn sup(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

struct Converged {
    u: Vec<f64>,
    iterations: usize,
}

fn newton_loop(
    form: &dyn Formulation,
    mut u: Vec<f64>,
    settings: &NewtonSettings,
) -> Result<Converged> {
    let mut phi = form.residual(&u)?;
    let mut norm = sup(&phi);
    let mut iteration = 0;
    loop {
        if !norm.is_finite() {
            return Err(Error::NonFinite { iteration });
        }
        log::debug!("newton iteration {iteration}: |Phi| = {norm:e}");
        if norm < settings.tol {
            return Ok(Converged {
                u,
                iterations: iteration,
            });
        }
        if iteration == settings.max_iter {
            return Err(Error::MaxIterations {
                iterations: iteration,
                residual: norm,
            });
        }
        let jac = match settings.jacobian_mode {
            JacobianMode::Analytic => form.jacobian(&u)?,
            JacobianMode::FiniteDifference => finite_difference_jacobian(
                |v| form.residual(v),
                &u,
                settings.fd_step,
                settings.exec,
            )?,
        };
        let rhs: Vec<f64> = phi.iter().map(|v| -v).collect();
        let delta = linsolve::LuFactors::factor_with(&jac, settings.exec)?.solve(&rhs)?;
        if delta.iter().any(|d| !d.is_finite()) {
            return Err(Error::NonFinite { iteration });
        }
        iteration += 1;

        if settings.damping == 0 {
            u.iter_mut().zip(&delta).for_each(|(x, d)| *x += d);
            phi = form.residual(&u)?;
            norm = sup(&phi);
            continue;
        }

        let mut accepted = None;
        let mut lambda = 1.0;
        for _ in 0..=settings.damping {
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(x, d)| x + lambda * d).collect();
            if let Ok(trial_phi) = form.residual(&trial) {
                let trial_norm = sup(&trial_phi);
                if trial_norm < norm {
                    accepted = Some((trial, trial_phi, trial_norm));
                    break;
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((next, next_phi, next_norm)) => {
                u = next;
                phi = next_phi;
                norm = next_norm;
            }
            None => {
                return Err(Error::DampingExhausted {
                    iteration,
                    residual: norm,
                })
            }
        }
    }
}

/// Starting vector in the formulation's unknowns.
fn initial_unknowns(
    system: &HaarSystem,
    settings: &NewtonSettings,
    augmented: bool,
) -> Result<Vec<f64>> {
    let n = system.n();
    let guess = settings.init_guess.resolve(n)?;
    let mut u = match settings.guess_space {
        GuessSpace::Coefficients => guess,
        GuessSpace::Values => {
            // invert y(t_c) = 1 + t_c s + (P2^T a)_c (s = 0) or the Dirichlet map
            let mat = if augmented {
                system.p2.transpose()
            } else {
                DenseMatrix::from_fn(n, |c, i| system.dirichlet_basis(c, i))
            };
            let rhs: Vec<f64> = system
                .colloc
                .iter()
                .zip(&guess)
                .map(|(&t, &y)| if augmented { y - 1.0 } else { y - (1.0 - t) })
                .collect();
            linsolve::solve(&mat, &rhs)?
        }
    };
    if augmented {
        u.push(0.0);
    }
    Ok(u)
}

pub fn solve_newton(
    problem: &EmdenFowlerProblem,
    system: &HaarSystem,
    settings: &NewtonSettings,
) -> Result<SolutionGrid> {
    settings.validate()?;
    problem.validate()?;
    let coll = Collocation {
        problem,
        system,
        guard: settings.guard,
        exec: settings.exec,
    };
    let form: Box<dyn Formulation> = match (problem.bc, settings.robin_scheme) {
        (BoundaryKind::Dirichlet, _) => Box::new(DirichletForm(coll)),
        (BoundaryKind::Robin, RobinScheme::Augmented) => Box::new(AugmentedRobinForm(coll)),
        (BoundaryKind::Robin, RobinScheme::EndpointClosure) => {
            require_sigma(problem)?;
            Box::new(EndpointClosureForm(coll))
        }
    };
    let augmented = form.dim() > system.n();
    let u0 = initial_unknowns(system, settings, augmented)?;
    let done = newton_loop(form.as_ref(), u0, settings)?;
    let dy0 = form.slope(&done.u)?;
    let mut coeffs = done.u;
    coeffs.truncate(system.n());
    let mut sol = SolutionGrid::new(
        system.config,
        CoefficientVector(coeffs),
        dy0,
        done.iterations,
        Method::Newton,
        settings.eval_points.clone(),
    );
    sol.attach_residual(problem, settings.guard);
    Ok(sol)
}
