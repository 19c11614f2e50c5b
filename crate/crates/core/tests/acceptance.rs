//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; exits non-zero if any fail.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use haar_bvp::haar::{haar_fn, haar_integral};
use haar_bvp::linsolve;
use haar_bvp::newton::{self, AugmentedUnknowns};
use haar_bvp::refdata::{self, ReferenceData};
use haar_bvp::report::solution_csv;
use haar_bvp::study::{convergence_study, SolverConfig};
use haar_bvp::{
    BoundaryKind, DenseMatrix, EmdenFowlerProblem, Example, Execution, HaarSystem, InitialGuess,
    Method, NewtonSettings, PowerGuard, QlmSettings, RobinScheme, SolutionGrid,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const TABLE_LEVELS: [u32; 4] = [3, 5, 7, 8];
const DIRICHLET_EXAMPLES: [Example; 3] = [Example::One, Example::Two, Example::Three];

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn solve(
    solver: &SolverConfig,
    problem: &EmdenFowlerProblem,
    level: u32,
) -> Result<SolutionGrid, String> {
    solver
        .solve_at(problem, level)
        .map_err(|e| format!("J={level}: {e}"))
}

fn c1_matrix_fidelity() -> Outcome {
    let sys = HaarSystem::for_level(1).map_err(|e| e.to_string())?;
    let h = [
        [1., 1., 1., 1.],
        [1., 1., -1., -1.],
        [1., -1., 0., 0.],
        [0., 0., 1., -1.],
    ];
    let p1 = [
        [1., 3., 5., 7.],
        [1., 3., 3., 1.],
        [1., 1., 0., 0.],
        [0., 0., 1., 1.],
    ];
    let p2 = [
        [1., 9., 25., 49.],
        [1., 9., 23., 31.],
        [1., 7., 8., 8.],
        [0., 0., 1., 7.],
    ];
    let mut worst: f64 = 0.0;
    for r in 0..4 {
        for c in 0..4 {
            worst = worst
                .max((sys.h[(r, c)] - h[r][c]).abs())
                .max((sys.p1[(r, c)] - p1[r][c] / 8.0).abs())
                .max((sys.p2[(r, c)] - p2[r][c] / 128.0).abs());
        }
    }
    ensure(worst <= 1e-16, || format!("max entry error {worst:e}"))?;
    Ok(format!("H, P1, P2 at J=1 max error {worst:e}"))
}

/// Table protocol for both methods at every level, against the printed
/// columns and (at J=8) the extrapolated column. Every violation is listed.
fn table_reproduction(examples: &[Example]) -> Outcome {
    let start = Instant::now();
    let data = ReferenceData::embedded();
    let mut worst_table: f64 = 0.0;
    let mut worst_ealgo: f64 = 0.0;
    let mut violations = Vec::new();
    for &ex in examples {
        let problem = ex.problem();
        for method in [Method::Qlm, Method::Newton] {
            let table = data.table(ex, method).map_err(|e| e.to_string())?;
            let solver = SolverConfig::table_protocol(ex, method).map_err(|e| e.to_string())?;
            for level in TABLE_LEVELS {
                let sol = solve(&solver, &problem, level)?;
                let rep = refdata::compare(&sol, &table, 5e-5).map_err(|e| e.to_string())?;
                if !rep.pass {
                    violations.push(format!(
                        "example {} {method} J={level} vs table {:.2e}",
                        ex.id(),
                        rep.max_diff
                    ));
                }
                worst_table = worst_table.max(rep.max_diff);
                if level == 8 {
                    let col = table.ealgo.as_ref().ok_or("missing extrapolated column")?;
                    let rep = refdata::compare_values(&sol, &table.rows, col, 1e-4)
                        .map_err(|e| e.to_string())?;
                    if !rep.pass {
                        // distance between the two published columns themselves
                        let printed = sup_diff(table.column(8).map_err(|e| e.to_string())?, col);
                        violations.push(format!(
                            "example {} {method} J=8 vs E-algo {:.2e} (published J=8 column is itself {printed:.2e} from E-algo)",
                            ex.id(),
                            rep.max_diff
                        ));
                    }
                    worst_ealgo = worst_ealgo.max(rep.max_diff);
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 30.0 {
        violations.push(format!("took {secs:.1} s"));
    }
    let summary = format!(
        "max |diff| vs tables {worst_table:.2e} (atol 5e-5), vs E-algo {worst_ealgo:.2e} (atol 1e-4), {secs:.2} s"
    );
    if violations.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{}; {summary}", violations.join("; ")))
    }
}

fn c2_example1_tables() -> Outcome {
    table_reproduction(&[Example::One])
}

fn c3_examples2_3_tables() -> Outcome {
    table_reproduction(&[Example::Two, Example::Three])
}

fn c4_cross_method() -> Outcome {
    let qlm = SolverConfig::converged(Method::Qlm);
    let newton = SolverConfig::converged(Method::Newton);
    let mut worst: f64 = 0.0;
    for ex in DIRICHLET_EXAMPLES {
        let p = ex.problem();
        for level in TABLE_LEVELS {
            let a = solve(&qlm, &p, level)?;
            let b = solve(&newton, &p, level)?;
            let d = sup_diff(&a.y, &b.y);
            ensure(d < 1e-6, || format!("example {} J={level}: {d:e}", ex.id()))?;
            worst = worst.max(d);
        }
    }
    Ok(format!(
        "converged QLM vs Newton sup diff {worst:.2e} (< 1e-6)"
    ))
}

fn c5_guess_robustness() -> Outcome {
    let p = Example::One.problem();
    let level = 5;
    let mut worst: f64 = 0.0;
    for (method, base) in [(Method::Qlm, 0.0), (Method::Newton, 1.0)] {
        let with_guess = |g: f64| match method {
            Method::Qlm => SolverConfig::Qlm(QlmSettings {
                init_guess: InitialGuess::Constant(g),
                ..QlmSettings::default()
            }),
            Method::Newton => SolverConfig::Newton(NewtonSettings {
                init_guess: InitialGuess::Constant(g),
                ..NewtonSettings::default()
            }),
        };
        let reference = solve(&with_guess(base), &p, level)?;
        for delta in [0.01, 0.1] {
            let sol = solve(&with_guess(base + delta), &p, level)?;
            let d = sup_diff(&reference.y, &sol.y);
            ensure(d < 1e-6, || format!("{method} +{delta}: {d:e}"))?;
            worst = worst.max(d);
        }
    }
    Ok(format!(
        "example 1 J=5, guesses +0.01/+0.1: sup change {worst:.2e} (< 1e-6)"
    ))
}

fn example4_study(scheme: RobinScheme) -> Result<Vec<SolutionGrid>, String> {
    let solver = SolverConfig::Newton(NewtonSettings {
        robin_scheme: scheme,
        ..NewtonSettings::default()
    });
    let study = convergence_study(
        &Example::Four.problem(),
        &solver,
        &[3, 5, 7],
        Execution::default(),
    )
    .map_err(|e| e.to_string())?;
    study
        .levels
        .into_iter()
        .map(|lr| lr.outcome.map_err(|e| format!("J={}: {e}", lr.level)))
        .collect()
}

/// `(max y diff, R_inf values, max relative R_inf error)` against the embedded example 4 table.
fn example4_metrics(sols: &[SolutionGrid]) -> Result<(f64, Vec<f64>, f64), String> {
    let table = ReferenceData::embedded()
        .table(Example::Four, Method::Newton)
        .map_err(|e| e.to_string())?;
    let mut y_diff: f64 = 0.0;
    let mut r_err: f64 = 0.0;
    let mut r_inf = Vec::new();
    for sol in sols {
        let level = sol.config.level();
        let rep = refdata::compare(sol, &table, 5e-3).map_err(|e| e.to_string())?;
        y_diff = y_diff.max(rep.max_diff);
        let r = sol.residual_sup.ok_or("residual unavailable")?;
        let r_ref = table.r_inf_at(level).ok_or("missing R_inf reference")?;
        r_err = r_err.max((r - r_ref).abs() / r_ref);
        r_inf.push(r);
    }
    Ok((y_diff, r_inf, r_err))
}

fn c6_example4() -> Outcome {
    let sols = example4_study(RobinScheme::EndpointClosure)?;
    let (y_diff, r_inf, r_err) = example4_metrics(&sols)?;
    let ratios: Vec<f64> = r_inf.windows(2).map(|w| w[0] / w[1]).collect();
    ensure(r_inf.windows(2).all(|w| w[1] < w[0]), || {
        format!("R_inf not decreasing: {r_inf:?}")
    })?;
    ensure(ratios.iter().all(|r| (3.0..=6.0).contains(r)), || {
        format!("ratios {ratios:?}")
    })?;
    ensure(y_diff <= 5e-3, || format!("max y diff {y_diff:e}"))?;
    ensure(r_err <= 0.25, || format!("R_inf relative error {r_err:e}"))?;
    Ok(format!(
        "endpoint closure: R_inf {:.6}/{:.6}/{:.6}, ratios {:.2}/{:.2}, max y diff {y_diff:.1e}, R_inf rel err {r_err:.1e}",
        r_inf[0], r_inf[1], r_inf[2], ratios[0], ratios[1]
    ))
}

/// The augmented formulation is reported, not gated.
fn example4_augmented_note() -> String {
    match example4_study(RobinScheme::Augmented).and_then(|s| example4_metrics(&s)) {
        Ok((y_diff, r_inf, r_err)) => format!(
            "augmented Robin (informational): max y diff {y_diff:.3e}, R_inf {:.5}/{:.6}/{:.7}, R_inf rel err {r_err:.1e}",
            r_inf[0], r_inf[1], r_inf[2]
        ),
        Err(e) => format!("augmented Robin (informational): failed: {e}"),
    }
}

fn haar_invariants() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut quad_err: f64 = 0.0;
    let mut jump: f64 = 0.0;
    for level in 0..=6 {
        let sys = HaarSystem::for_level(level).map_err(|e| e.to_string())?;
        let n = sys.n();
        let gram = sys.h.matmul(&sys.h.transpose());
        for r in 0..n {
            for c in 0..n {
                ensure(r == c || gram[(r, c)] == 0.0, || {
                    format!("J={level}: H H^T ({r},{c}) = {}", gram[(r, c)])
                })?;
            }
        }
        for i in 2..=n {
            ensure(sys.p1_at_1[i - 1] == 0.0, || {
                format!("J={level}: P1_{i}(1) = {}", sys.p1_at_1[i - 1])
            })?;
        }
        let grid = &sys.grid;
        for i in 1..=n {
            let idx = sys.config.wavelet(i).map_err(|e| e.to_string())?;
            // P_v against quadrature of P_{v-1}, split at every grid point so
            // the integrand is polynomial on each panel.
            for _ in 0..3 {
                let x: f64 = rng.gen_range(0.0..=1.0);
                let mut cuts: Vec<f64> = grid.iter().copied().filter(|&g| g < x).collect();
                cuts.push(x);
                for v in 1..=3u32 {
                    let mut q = 0.0;
                    for w in cuts.windows(2) {
                        let (a, b) = (w[0], w[1]);
                        q += if v == 1 {
                            // h is constant on the open panel
                            (b - a) * haar_fn(&idx, 0.5 * (a + b))
                        } else {
                            // Simpson is exact for the polynomial integrand
                            let f = |s: f64| haar_integral(v - 1, &idx, s);
                            (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
                        };
                    }
                    quad_err = quad_err.max((q - haar_integral(v, &idx, x)).abs());
                }
            }
            if let Some(bps) = idx.breakpoints {
                for b in bps {
                    for v in 1..=3u32 {
                        let eps = 1e-13;
                        let d = (haar_integral(v, &idx, b + eps)
                            - haar_integral(v, &idx, (b - eps).max(0.0)))
                        .abs();
                        jump = jump.max(d);
                    }
                }
            }
        }
    }
    ensure(quad_err < 1e-6, || {
        format!("quadrature oracle error {quad_err:e}")
    })?;
    ensure(jump < 1e-12, || format!("breakpoint jump {jump:e}"))?;
    Ok(format!(
        "haar J<=6 ok (quad err {quad_err:.1e}, jump {jump:.1e})"
    ))
}

fn max_rel(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1.0))
        .fold(0.0, f64::max)
}

fn jacobian_check() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let guard = PowerGuard::Error;
    let exec = Execution::default();
    let step = 1e-6;
    let mut worst: f64 = 0.0;
    let mut samples = 0;
    let dirichlet = Example::One.problem();
    let robin = Example::Four.problem();
    for level in 0..=5 {
        let sys = HaarSystem::for_level(level).map_err(|e| e.to_string())?;
        let n = sys.n();
        let mut accepted = 0;
        while accepted < 3 {
            let scale = rng.gen_range(0.05..0.5);
            let a: Vec<f64> = (0..n).map(|_| scale * rng.gen_range(-1.0..1.0)).collect();
            let dy0 = rng.gen_range(-0.5..0.2);

            let Ok(_) = newton::residual_system_dirichlet(&a, &dirichlet, &sys, guard) else {
                continue;
            };
            let Ok(_) = newton::residual_system_closure(&a, &robin, &sys, guard) else {
                continue;
            };
            let mut u = a.clone();
            u.push(dy0);
            let Ok(_) = newton::residual_system_robin(
                &AugmentedUnknowns { a: a.clone(), dy0 },
                &robin,
                &sys,
                guard,
            ) else {
                continue;
            };

            let fd = |f: &(dyn Fn(&[f64]) -> haar_bvp::Result<Vec<f64>> + Sync), x: &[f64]| {
                newton::finite_difference_jacobian(f, x, step, exec)
            };
            let fd_d = fd(
                &|x| newton::residual_system_dirichlet(x, &dirichlet, &sys, guard),
                &a,
            );
            let fd_c = fd(
                &|x| newton::residual_system_closure(x, &robin, &sys, guard),
                &a,
            );
            let fd_r = fd(
                &|x| {
                    let (a, d) = x.split_at(n);
                    newton::residual_system_robin(
                        &AugmentedUnknowns {
                            a: a.to_vec(),
                            dy0: d[0],
                        },
                        &robin,
                        &sys,
                        guard,
                    )
                },
                &u,
            );
            // a perturbation can step outside the admissible set; resample
            let (Ok(fd_d), Ok(fd_c), Ok(fd_r)) = (fd_d, fd_c, fd_r) else {
                continue;
            };
            let an_d = newton::jacobian_dirichlet(&a, &dirichlet, &sys, guard)
                .map_err(|e| e.to_string())?;
            let an_c =
                newton::jacobian_closure(&a, &robin, &sys, guard).map_err(|e| e.to_string())?;
            let an_r = newton::jacobian_robin(
                &AugmentedUnknowns { a: a.clone(), dy0 },
                &robin,
                &sys,
                guard,
            )
            .map_err(|e| e.to_string())?;
            worst = worst
                .max(max_rel(&an_d, &fd_d))
                .max(max_rel(&an_c, &fd_c))
                .max(max_rel(&an_r, &fd_r));
            accepted += 1;
            samples += 1;
        }
    }
    ensure(worst < 1e-5, || {
        format!("Jacobian relative error {worst:e}")
    })?;
    Ok(format!(
        "jacobian rel err {worst:.1e} over {samples} samples"
    ))
}

fn manufactured() -> Result<String, String> {
    let p = EmdenFowlerProblem::new(0.0, -1.0, 2.0, BoundaryKind::Dirichlet)
        .map_err(|e| e.to_string())?
        .with_forcing(-2.0);
    let sys = HaarSystem::for_level(4).map_err(|e| e.to_string())?;
    let sol =
        newton::solve_newton(&p, &sys, &NewtonSettings::default()).map_err(|e| e.to_string())?;
    let phi =
        newton::residual_system_dirichlet(sol.coefficients.as_slice(), &p, &sys, PowerGuard::Error)
            .map_err(|e| e.to_string())?;
    let phi = phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let exact: Vec<f64> = sol
        .eval_points
        .iter()
        .map(|t| (1.0 - t) * (1.0 - t))
        .collect();
    let err = sup_diff(&sol.y, &exact);
    ensure(sol.iterations == 1, || {
        format!("{} Newton steps", sol.iterations)
    })?;
    ensure(phi < 1e-12 && err < 1e-12, || {
        format!("|Phi| {phi:e}, y err {err:e}")
    })?;
    Ok(format!("manufactured 1 step (|Phi| {phi:.1e})"))
}

fn linear_solver_oracle() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for n in [1, 2, 5, 17, 50, 100] {
        for _ in 0..5 {
            let mut a = DenseMatrix::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            for i in 0..n {
                a[(i, i)] += 2.0 * (n as f64).sqrt();
            }
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b = a.mul_vec(&x);
            let got = linsolve::solve(&a, &b).map_err(|e| e.to_string())?;
            let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            worst = worst.max(sup_diff(&got, &x) / scale);
        }
    }
    ensure(worst < 1e-8, || format!("LU relative error {worst:e}"))?;
    Ok(format!("LU rel err {worst:.1e}"))
}

fn c7_properties() -> Outcome {
    let parts = [
        haar_invariants()?,
        jacobian_check()?,
        manufactured()?,
        linear_solver_oracle()?,
    ];
    Ok(parts.join("; "))
}

fn c8_determinism() -> Outcome {
    let p = Example::One.problem();
    let mut checked = 0;
    for method in [Method::Qlm, Method::Newton] {
        let mut seq = SolverConfig::converged(method);
        seq.set_execution(Execution::Sequential);
        let par = SolverConfig::converged(method);
        let first = solution_csv(&solve(&par, &p, 7)?);
        let again = solution_csv(&solve(&par, &p, 7)?);
        let sequential = solution_csv(&solve(&seq, &p, 7)?);
        ensure(first == again, || format!("{method}: repeated runs differ"))?;
        ensure(first == sequential, || {
            format!("{method}: sequential and parallel differ")
        })?;
        checked += 3;
    }
    let solver =
        SolverConfig::table_protocol(Example::Four, Method::Newton).map_err(|e| e.to_string())?;
    let study = |exec| {
        convergence_study(&Example::Four.problem(), &solver, &[3, 5, 7], exec)
            .map(|s| s.to_csv())
            .map_err(|e| e.to_string())
    };
    let a = study(Execution::default())?;
    ensure(a == study(Execution::default())?, || {
        "sweep CSV differs between runs".into()
    })?;
    ensure(a == study(Execution::Sequential)?, || {
        "sweep CSV differs sequential vs parallel".into()
    })?;
    Ok(format!(
        "{} identical CSV outputs (repeat and sequential/parallel)",
        checked + 3
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("C1 matrix fidelity", c1_matrix_fidelity),
        ("C2 example 1 tables", c2_example1_tables),
        ("C3 examples 2-3 tables", c3_examples2_3_tables),
        ("C4 cross-method agreement", c4_cross_method),
        ("C5 guess robustness", c5_guess_robustness),
        ("C6 example 4 Robin", c6_example4),
        ("C7 property suites", c7_properties),
        ("C8 determinism", c8_determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("note: {}", example4_augmented_note());
    if failed == 0 {
        println!("acceptance: all {} criteria passed", criteria.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of {} criteria failed", criteria.len());
        ExitCode::FAILURE
    }
}
