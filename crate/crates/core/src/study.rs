//! Solver dispatch, the published run protocols, and resolution sweeps.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::haar::{HaarSystem, ResolutionConfig};
use crate::newton::{solve_newton, NewtonSettings, RobinScheme};
use crate::problem::{EmdenFowlerProblem, Example, Method, SolutionGrid};
use crate::qlm::{solve_qlm, QlmSettings};
use crate::report::csv_number;

/// A solver together with its settings.
#[derive(Debug, Clone, PartialEq)]
pub enum SolverConfig {
    Qlm(QlmSettings),
    Newton(NewtonSettings),
}

impl SolverConfig {
    pub fn method(&self) -> Method {
        match self {
            SolverConfig::Qlm(_) => Method::Qlm,
            SolverConfig::Newton(_) => Method::Newton,
        }
    }

    /// Settings that reproduce the published tables: three
    /// quasilinearization iterates from `y_0 = 0`, or Newton from the
    /// coefficient vector `(1, ..., 1)`. Example 4 uses the endpoint closure.
    pub fn table_protocol(example: Example, method: Method) -> Result<Self> {
        match (example, method) {
            (Example::Four, Method::Qlm) => Err(Error::Unsupported(
                "example 4 has only Newton results".into(),
            )),
            (_, Method::Qlm) => Ok(SolverConfig::Qlm(QlmSettings::through_iterate(3))),
            (Example::Four, Method::Newton) => Ok(SolverConfig::Newton(NewtonSettings {
                robin_scheme: RobinScheme::EndpointClosure,
                ..NewtonSettings::default()
            })),
            (_, Method::Newton) => Ok(SolverConfig::Newton(NewtonSettings::default())),
        }
    }

    /// Run to convergence instead of a fixed iteration count.
    pub fn converged(method: Method) -> Self {
        match method {
            Method::Qlm => SolverConfig::Qlm(QlmSettings::default()),
            Method::Newton => SolverConfig::Newton(NewtonSettings::default()),
        }
    }

    pub fn eval_points(&self) -> &[f64] {
        match self {
            SolverConfig::Qlm(s) => &s.eval_points,
            SolverConfig::Newton(s) => &s.eval_points,
        }
    }

    pub fn set_eval_points(&mut self, points: Vec<f64>) {
        match self {
            SolverConfig::Qlm(s) => s.eval_points = points,
            SolverConfig::Newton(s) => s.eval_points = points,
        }
    }

    pub fn set_execution(&mut self, exec: Execution) {
        match self {
            SolverConfig::Qlm(s) => s.exec = exec,
            SolverConfig::Newton(s) => s.exec = exec,
        }
    }

    pub fn solve(&self, problem: &EmdenFowlerProblem, system: &HaarSystem) -> Result<SolutionGrid> {
        match self {
            SolverConfig::Qlm(s) => solve_qlm(problem, system, s),
            SolverConfig::Newton(s) => solve_newton(problem, system, s),
        }
    }

    /// Build the Haar system for `level` and solve.
    pub fn solve_at(&self, problem: &EmdenFowlerProblem, level: u32) -> Result<SolutionGrid> {
        let system = HaarSystem::build(ResolutionConfig::new(level)?);
        self.solve(problem, &system)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelResult {
    pub level: u32,
    pub outcome: Result<SolutionGrid>,
}

/// Solutions over a list of resolution levels.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub levels: Vec<LevelResult>,
}

/// Solve at every level (levels are independent and run in parallel when
/// `exec` allows). A failure at one level does not stop the others.
pub fn convergence_study(
    problem: &EmdenFowlerProblem,
    solver: &SolverConfig,
    levels: &[u32],
    exec: Execution,
) -> Result<ConvergenceStudy> {
    if levels.len() < 2 {
        return Err(Error::InvalidSettings(
            "a convergence study needs at least two levels".into(),
        ));
    }
    let results = exec::map_indexed(levels.len(), exec, |k| LevelResult {
        level: levels[k],
        outcome: solver.solve_at(problem, levels[k]),
    });
    Ok(ConvergenceStudy { levels: results })
}

impl ConvergenceStudy {
    /// `max_t |y_J(t) - y_prev(t)|` against the previous successful level.
    pub fn successive_sup_diffs(&self) -> Vec<Option<f64>> {
        let mut prev: Option<&SolutionGrid> = None;
        let mut out = Vec::with_capacity(self.levels.len());
        for lr in &self.levels {
            match &lr.outcome {
                Ok(sol) => {
                    out.push(prev.map(|p| {
                        p.y.iter()
                            .zip(&sol.y)
                            .map(|(a, b)| (a - b).abs())
                            .fold(0.0, f64::max)
                    }));
                    prev = Some(sol);
                }
                Err(_) => out.push(None),
            }
        }
        out
    }

    pub fn failures(&self) -> Vec<(u32, &Error)> {
        self.levels
            .iter()
            .filter_map(|lr| lr.outcome.as_ref().err().map(|e| (lr.level, e)))
            .collect()
    }

    /// `J,t,y,delta,r_inf`; `delta` is `|y_J(t) - y_prev(t)|` and is blank
    /// for the first successful level.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("J,t,y,delta,r_inf\n");
        let mut prev: Option<&SolutionGrid> = None;
        for lr in &self.levels {
            let Ok(sol) = &lr.outcome else { continue };
            let r_inf = sol.residual_sup.map(csv_number).unwrap_or_default();
            for (k, (t, y)) in sol.eval_points.iter().zip(&sol.y).enumerate() {
                let delta = prev
                    .and_then(|p| p.y.get(k))
                    .map(|py| csv_number((y - py).abs()))
                    .unwrap_or_default();
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    lr.level,
                    csv_number(*t),
                    csv_number(*y),
                    delta,
                    r_inf
                );
            }
            prev = Some(sol);
        }
        out
    }
}
