//! Problem description, guarded fractional powers, and residual diagnostics.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::haar::{CoefficientVector, HaarSystem, ResolutionConfig};

/// Right-hand boundary condition; `y(0) = 1` is common to both.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    /// `y(1) = 0` (ionized atom).
    Dirichlet,
    /// `y'(1) = y(1)` (neutral atom).
    Robin,
}

impl FromStr for BoundaryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dirichlet" => Ok(BoundaryKind::Dirichlet),
            "robin" => Ok(BoundaryKind::Robin),
            other => Err(Error::InvalidSettings(format!(
                "unknown boundary kind `{other}`"
            ))),
        }
    }
}

/// What to do with `y^beta` when `y < 0` and `beta` is not an integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PowerGuard {
    /// Fail with [`Error::NegativeBaseFractionalPower`].
    #[default]
    Error,
    /// Use `sign(y) |y|^beta`.
    Signed,
}

/// `y^beta` under the guard. `0^beta = 0` for `beta > 0`.
pub fn nonlinear_power(y: f64, beta: f64, guard: PowerGuard) -> Result<f64> {
    power_with_slope(y, beta, guard).map(|(v, _)| v)
}

/// `(y^beta, d/dy y^beta)` under the guard.
pub fn power_with_slope(y: f64, beta: f64, guard: PowerGuard) -> Result<(f64, f64)> {
    if beta.fract() == 0.0 && beta.abs() < i32::MAX as f64 {
        let b = beta as i32;
        return Ok((y.powi(b), beta * y.powi(b - 1)));
    }
    if y >= 0.0 {
        return Ok((y.powf(beta), beta * y.powf(beta - 1.0)));
    }
    match guard {
        PowerGuard::Error => Err(Error::NegativeBaseFractionalPower {
            base: y,
            exponent: beta,
        }),
        PowerGuard::Signed => {
            let m = (-y).powf(beta - 1.0);
            Ok((-(m * -y), beta * m))
        }
    }
}

/// `y'' + sigma t^gamma y^beta + forcing = 0` on `(0, 1)` with `y(0) = 1`.
///
/// `forcing` is zero for every Emden-Fowler problem; it exists so that
/// linear manufactured problems such as `y'' = 2` can run through the
/// same solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmdenFowlerProblem {
    pub sigma: f64,
    pub gamma: f64,
    pub beta: f64,
    pub bc: BoundaryKind,
    pub forcing: f64,
}

impl EmdenFowlerProblem {
    pub fn new(sigma: f64, gamma: f64, beta: f64, bc: BoundaryKind) -> Result<Self> {
        let p = EmdenFowlerProblem {
            sigma,
            gamma,
            beta,
            bc,
            forcing: 0.0,
        };
        p.validate()?;
        for w in p.regime_warnings() {
            log::warn!("{w}");
        }
        Ok(p)
    }

    /// `y'' = t^{-1/2} y^{3/2}`.
    pub fn thomas_fermi(bc: BoundaryKind) -> Self {
        EmdenFowlerProblem {
            sigma: -1.0,
            gamma: -0.5,
            beta: 1.5,
            bc,
            forcing: 0.0,
        }
    }

    pub fn with_forcing(mut self, forcing: f64) -> Self {
        self.forcing = forcing;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.sigma, self.gamma, self.beta, self.forcing]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::InvalidSettings(
                "problem parameters must be finite".into(),
            ));
        }
        if self.beta <= 1.0 {
            return Err(Error::InvalidSettings(format!(
                "beta must exceed 1, got {}",
                self.beta
            )));
        }
        Ok(())
    }

    /// Messages for parameters outside `gamma < -2, beta > 1`. Every
    /// published example lies outside this band, so these never fail.
    pub fn regime_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.gamma >= -2.0 {
            out.push(format!(
                "gamma = {} lies outside the classical regime gamma < -2",
                self.gamma
            ));
        }
        if self.gamma >= 0.0 {
            out.push(format!(
                "gamma = {} makes the problem non-singular",
                self.gamma
            ));
        }
        out
    }

    fn check_t(&self, t: f64) -> Result<()> {
        if t <= 0.0 && self.gamma < 0.0 && self.sigma != 0.0 {
            return Err(Error::SingularPoint);
        }
        Ok(())
    }

    /// Value and `y`-derivative of `sigma t^gamma y^beta + forcing`.
    pub fn source_with_slope(&self, t: f64, y: f64, guard: PowerGuard) -> Result<(f64, f64)> {
        if self.sigma == 0.0 {
            return Ok((self.forcing, 0.0));
        }
        self.check_t(t)?;
        let w = self.sigma * t.powf(self.gamma);
        let (p, dp) = power_with_slope(y, self.beta, guard)?;
        Ok((w * p + self.forcing, w * dp))
    }
}

/// `R(t) = y'' + sigma t^gamma y^beta (+ forcing)`.
pub fn ode_residual(
    t: f64,
    y: f64,
    ypp: f64,
    problem: &EmdenFowlerProblem,
    guard: PowerGuard,
) -> Result<f64> {
    if t <= 0.0 && problem.gamma < 0.0 {
        return Err(Error::SingularPoint);
    }
    let (s, _) = problem.source_with_slope(t, y, guard)?;
    Ok(ypp + s)
}

/// The published examples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Example {
    /// Thomas-Fermi, `y(1) = 0`.
    One,
    /// `sigma = -1, gamma = -1, beta = 2`, `y(1) = 0`.
    Two,
    /// `sigma = -1, gamma = -5/4, beta = 9/4`, `y(1) = 0`.
    Three,
    /// Thomas-Fermi, `y'(1) = y(1)`.
    Four,
}

impl Example {
    pub const ALL: [Example; 4] = [Example::One, Example::Two, Example::Three, Example::Four];

    pub fn from_id(id: u8) -> Result<Self> {
        match id {
            1 => Ok(Example::One),
            2 => Ok(Example::Two),
            3 => Ok(Example::Three),
            4 => Ok(Example::Four),
            _ => Err(Error::InvalidSettings(format!("unknown example {id}"))),
        }
    }

    pub fn id(self) -> u8 {
        match self {
            Example::One => 1,
            Example::Two => 2,
            Example::Three => 3,
            Example::Four => 4,
        }
    }

    pub fn problem(self) -> EmdenFowlerProblem {
        let (sigma, gamma, beta, bc) = match self {
            Example::One => (-1.0, -0.5, 1.5, BoundaryKind::Dirichlet),
            Example::Two => (-1.0, -1.0, 2.0, BoundaryKind::Dirichlet),
            Example::Three => (-1.0, -1.25, 2.25, BoundaryKind::Dirichlet),
            Example::Four => (-1.0, -0.5, 1.5, BoundaryKind::Robin),
        };
        EmdenFowlerProblem {
            sigma,
            gamma,
            beta,
            bc,
            forcing: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Qlm,
    Newton,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Qlm => "QLM",
            Method::Newton => "NEWTON",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qlm" => Ok(Method::Qlm),
            "newton" => Ok(Method::Newton),
            other => Err(Error::InvalidSettings(format!("unknown method `{other}`"))),
        }
    }
}

/// A converged (or iteration-capped) Haar solution.
///
/// Every reconstruction used by the solvers has the form
/// `y(t) = 1 + t * dy0 + sum a_i P_{2,i}(t)`, so the coefficients and the
/// initial slope determine the solution everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionGrid {
    pub config: ResolutionConfig,
    pub eval_points: Vec<f64>,
    pub y: Vec<f64>,
    pub coefficients: CoefficientVector,
    /// Reconstructed `y'(0)`.
    pub dy0: f64,
    pub iterations: usize,
    pub method: Method,
    /// `max |R(t)|` over the positive evaluation points.
    pub residual_sup: Option<f64>,
}

impl SolutionGrid {
    pub(crate) fn new(
        config: ResolutionConfig,
        coefficients: CoefficientVector,
        dy0: f64,
        iterations: usize,
        method: Method,
        eval_points: Vec<f64>,
    ) -> Self {
        let mut sol = SolutionGrid {
            config,
            eval_points: Vec::new(),
            y: Vec::new(),
            coefficients,
            dy0,
            iterations,
            method,
            residual_sup: None,
        };
        sol.set_eval_points(eval_points);
        sol
    }

    /// `(y, y', y'')` at any `t` in `[0, 1]`.
    pub fn evaluate(&self, t: f64) -> (f64, f64, f64) {
        let s = self.coefficients.series(self.config, t);
        (1.0 + t * self.dy0 + s.p2, self.dy0 + s.p1, s.h)
    }

    /// Re-evaluate `y` on a new set of points. Clears `residual_sup`.
    pub fn set_eval_points(&mut self, points: Vec<f64>) {
        self.y = points.iter().map(|&t| self.evaluate(t).0).collect();
        self.eval_points = points;
        self.residual_sup = None;
    }

    /// `max |R(t)|` over the given points; `t = 0` is skipped when the
    /// coefficient is singular there.
    pub fn residual_sup_at(
        &self,
        points: &[f64],
        problem: &EmdenFowlerProblem,
        guard: PowerGuard,
    ) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for &t in points {
            if t <= 0.0 && problem.gamma < 0.0 {
                continue;
            }
            let (y, _, ypp) = self.evaluate(t);
            worst = worst.max(ode_residual(t, y, ypp, problem, guard)?.abs());
        }
        Ok(worst)
    }

    /// Fill `residual_sup` from the current evaluation points.
    pub fn attach_residual(&mut self, problem: &EmdenFowlerProblem, guard: PowerGuard) {
        let pts = self.eval_points.clone();
        self.residual_sup = self.residual_sup_at(&pts, problem, guard).ok();
    }
}

/// `max_c |R(t_c)|` over the collocation points.
pub fn residual_norm(
    sol: &SolutionGrid,
    problem: &EmdenFowlerProblem,
    system: &HaarSystem,
    guard: PowerGuard,
) -> Result<f64> {
    let a = sol.coefficients.as_slice();
    let (h, _, p2) = system.series_at_collocation(a);
    let mut worst: f64 = 0.0;
    for (c, &t) in system.colloc.iter().enumerate() {
        let y = 1.0 + t * sol.dy0 + p2[c];
        worst = worst.max(ode_residual(t, y, h[c], problem, guard)?.abs());
    }
    Ok(worst)
}

/// Diagnostic variant of [`residual_norm`] on `points` uniform points
/// `k / points`, `k = 1..=points` (excludes `t = 0`).
pub fn residual_norm_fine(
    sol: &SolutionGrid,
    problem: &EmdenFowlerProblem,
    guard: PowerGuard,
    points: usize,
) -> Result<f64> {
    let pts: Vec<f64> = (1..=points).map(|k| k as f64 / points as f64).collect();
    sol.residual_sup_at(&pts, problem, guard)
}
