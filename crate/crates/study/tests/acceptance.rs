use std::process::ExitCode;
use std::time::{Duration, Instant};

use raftsan::des::{self, Estimate};
use raftsan::raft::{
    compile, compose, failure_role_probabilities, formulas::majority_delay, ClusterConfig,
    InjectionMix,
};
use raftsan::san::{ActivitySpec, Delay, Marking, OutputAction, SanBuilder};
use raftsan::solver::{
    accumulated_reward, poisson_terms, transient_sweep_rewards, RewardVariable, SolverSettings,
};
use raftsan::state_space::{expand_erlang, Ctmc, ExplorationLimits};
use raftsan_study::{run_study, Format, StudyId, StudySpec};
use statrs::distribution::{DiscreteCDF, Poisson};

type Outcome = Result<String, String>;

struct Criterion {
    number: u32,
    name: &'static str,
    budget: Duration,
    check: fn() -> Outcome,
}

fn ensure(ok: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(message())
    }
}

fn run(spec: &StudySpec) -> Result<raftsan_study::ResultTable, String> {
    run_study(spec).map_err(|e| format!("{} failed: {e}", spec.id))
}

fn column(table: &raftsan_study::ResultTable, name: &str) -> Result<Vec<f64>, String> {
    table
        .column(name)
        .ok_or_else(|| format!("missing column {name}"))
}

/// Two-state up/down chain against its closed-form availability.
fn closed_form_two_state() -> Outcome {
    let hour = 1.0;
    let lambda = 1.0 / (168.0 * hour);
    let mu = 1.0 / (12.0 * hour);
    let ctmc = Ctmc::from_transitions(
        vec![Marking::new(vec![1]), Marking::new(vec![0])],
        &[(0, 1, lambda), (1, 0, mu)],
        vec![1.0, 0.0],
    )
    .map_err(|e| e.to_string())?;
    let times: Vec<f64> = (0..100)
        .map(|k| 10f64.powf(-3.0 + 7.0 * k as f64 / 99.0))
        .collect();
    let settings = SolverSettings::default();
    let values = transient_sweep_rewards(&ctmc, &times, &[vec![1.0, 0.0]], &settings)
        .map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for (&t, &a) in times.iter().zip(&values[0]) {
        let exact = mu / (lambda + mu) + lambda / (lambda + mu) * (-(lambda + mu) * t).exp();
        worst = worst.max((a - exact).abs());
    }
    ensure(worst <= 1e-9, || format!("max error {worst:e} > 1e-9"))?;
    Ok(format!("max error {worst:.2e} over t in [1e-3, 1e4] h"))
}

/// Truncation windows against Poisson tail masses from an independent cdf.
fn poisson_truncation() -> Outcome {
    let settings = SolverSettings::<f64>::default();
    let eps = settings.total();
    let mut worst_left: f64 = 0.0;
    let mut worst_right: f64 = 0.0;
    for qt in [0.1, 1.0, 10.0, 1e3, 1e5] {
        let w = poisson_terms(qt, &settings);
        let pois = Poisson::new(qt).map_err(|e| e.to_string())?;
        let left_mass = if w.left == 0 {
            0.0
        } else {
            pois.cdf(w.left as u64 - 1)
        };
        let right_mass = pois.sf(w.right as u64);
        let sum = w.total();
        ensure(left_mass <= settings.eps_left, || {
            format!("qt={qt}: left tail {left_mass:e} > {:e}", settings.eps_left)
        })?;
        ensure(right_mass <= settings.eps_right, || {
            format!(
                "qt={qt}: right tail {right_mass:e} > {:e}",
                settings.eps_right
            )
        })?;
        ensure(sum >= 1.0 - eps && sum <= 1.0 + 4.0 * f64::EPSILON, || {
            format!("qt={qt}: weights sum to {sum}")
        })?;
        worst_left = worst_left.max(left_mass);
        worst_right = worst_right.max(right_mass);
    }
    Ok(format!(
        "worst tails left {worst_left:.2e}, right {worst_right:.2e}"
    ))
}

/// Role probabilities and majority delay endpoints.
fn formula_suite() -> Outcome {
    let mut cases = 0;
    for c in (3..=21).step_by(2) {
        for l_up in 0..=1 {
            for f_up in 0..c {
                let (sf, mj, ldr) = failure_role_probabilities::<f64>(c, f_up, l_up);
                let sum = sf + mj + ldr;
                ensure(
                    (sum - 1.0).abs() <= 1e-12 && sf >= 0.0 && mj >= 0.0 && ldr >= 0.0,
                    || format!("C={c} F={f_up} L={l_up}: ({sf}, {mj}, {ldr})"),
                )?;
                cases += 1;
            }
        }
        let best = majority_delay::<f64>(c, c - 1, 5.0);
        let worst = majority_delay::<f64>(c, c / 2, 5.0);
        ensure(best == Some(5.0) && worst == Some(10.0), || {
            format!("C={c}: endpoints {best:?}, {worst:?}")
        })?;
    }
    Ok(format!("{cases} role cases, endpoints exact for C=3..21"))
}

/// DES moments of a 20-stage Erlang replacing a 225 ms delay.
fn erlang_moments() -> Outcome {
    let mut b = SanBuilder::<f64>::new("erlang");
    let src = b.place("src", 1).map_err(|e| e.to_string())?;
    let dst = b.place("dst", 0).map_err(|e| e.to_string())?;
    b.activity(
        ActivitySpec::deterministic("wait", Delay::Fixed(225.0))
            .input(src, 1)
            .output(vec![OutputAction::Add(dst, 1)]),
    )
    .map_err(|e| e.to_string())?;
    let model = expand_erlang(&b.build(), 20).map_err(|e| e.to_string())?;
    let samples =
        des::sample_first_passage(&model, &move |m: &Marking| m.get(dst) > 0, 1e6, 100_000, 7)
            .map_err(|e| e.to_string())?;
    let times: Vec<f64> = samples
        .into_iter()
        .map(|s| s.ok_or("run never finished"))
        .collect::<Result<_, _>>()?;
    let est = Estimate::from_samples(&times);
    let target_var = 225.0f64 * 225.0 / 20.0;
    let z = (est.mean - 225.0).abs() / est.std_error();
    let rel_var = (est.variance - target_var).abs() / target_var;
    ensure(z <= 3.0, || {
        format!("mean {} is {z:.2} standard errors from 225", est.mean)
    })?;
    ensure(rel_var <= 0.10, || {
        format!(
            "variance {} vs {target_var} ({:.1}%)",
            est.variance,
            100.0 * rel_var
        )
    })?;
    Ok(format!(
        "mean {:.3} ({z:.2} SE), variance {:.1} vs {target_var:.2} ({:.2}%)",
        est.mean,
        est.variance,
        100.0 * rel_var
    ))
}

/// Failure-free completion time against the deterministic path sum.
fn zero_failure_path() -> Outcome {
    let cfg = ClusterConfig {
        injection: InjectionMix::None,
        ..ClusterConfig::table2()
    };
    let path_sum = cfg.t_cr_ms
        + cfg.t_r_ms
        + 2.0 * cfg.t_m_best_ms
        + cfg.t_c_ms
        + cfg.t_a_ms
        + cfg.t_r_ms
        + cfg.t_cr_ms;
    let compiled = compile::<f64>(&cfg, ExplorationLimits::default()).map_err(|e| e.to_string())?;
    let end = compiled
        .model
        .place_id("SequenceEnd")
        .ok_or("no SequenceEnd")?;
    let pending = RewardVariable::indicator("pending", move |m: &Marking| m.get(end) == 0);
    let analytic = accumulated_reward(&compiled.ctmc, &pending, 1000.0, &SolverSettings::default())
        .map_err(|e| e.to_string())?;

    let deterministic = compose::<f64>(&cfg).map_err(|e| e.to_string())?;
    let end_d = deterministic
        .place_id("SequenceEnd")
        .ok_or("no SequenceEnd")?;
    let samples = des::sample_first_passage(
        &deterministic,
        &move |m: &Marking| m.get(end_d) > 0,
        1000.0,
        100_000,
        11,
    )
    .map_err(|e| e.to_string())?;
    let times: Vec<f64> = samples
        .into_iter()
        .map(|s| s.ok_or("event not answered by 1 s"))
        .collect::<Result<_, _>>()?;
    let est = Estimate::from_samples(&times);
    let rel = (analytic - path_sum).abs() / path_sum;
    ensure(path_sum == 34.0, || format!("path sum {path_sum} != 34"))?;
    ensure(rel <= 0.05, || {
        format!("analytic mean {analytic} vs {path_sum}")
    })?;
    ensure(est.contains(analytic), || {
        format!(
            "analytic mean {analytic} outside DES CI {} ± {}",
            est.mean, est.ci_halfwidth
        )
    })?;
    Ok(format!(
        "analytic {analytic:.6} ms ({:.3}% off 34), DES {:.4} ± {:.4}",
        100.0 * rel,
        est.mean,
        est.ci_halfwidth
    ))
}

/// Larger clusters answer a single mixed failure no later.
fn cdf_trend() -> Outcome {
    let spec = StudySpec::new(StudyId::CdfByClusterSize)
        .with_overrides([("E_S", "5")])
        .map_err(|e| e.to_string())?;
    let table = run(&spec)?;
    let t = column(&table, "t_ms")?;
    let (p3, p5, p7) = (
        column(&table, "P_C3")?,
        column(&table, "P_C5")?,
        column(&table, "P_C7")?,
    );
    ensure(t.len() == 1001, || format!("{} time points", t.len()))?;
    for k in 0..t.len() {
        ensure(p7[k] >= p5[k] && p5[k] >= p3[k] - 1e-6, || {
            format!(
                "t={} ms: P_C3={} P_C5={} P_C7={}",
                t[k], p3[k], p5[k], p7[k]
            )
        })?;
    }
    Ok(format!(
        "1001 points ordered; at 50 ms P_C3={:.4} P_C5={:.4} P_C7={:.4}",
        p3[50], p5[50], p7[50]
    ))
}

/// Watchdog lowers unavailability, and the plain curve saturates.
fn watchdog_unavailability() -> Outcome {
    let table = run(&StudySpec::new(StudyId::Unavailability1000h))?;
    let t = column(&table, "t_h")?;
    let (u, u_wd) = (column(&table, "U")?, column(&table, "U_WD")?);
    ensure(t.len() == 1001 && t[10] == 10.0 && t[150] == 150.0, || {
        "unexpected hourly grid".into()
    })?;
    for k in 0..t.len() {
        ensure(u_wd[k] <= u[k], || {
            format!("t={} h: U_WD={} > U={}", t[k], u_wd[k], u[k])
        })?;
    }
    let slope_10 = ((u[11] - u[9]) / 2.0).abs();
    let late = (150..t.len() - 1)
        .map(|k| (u[k + 1] - u[k]).abs())
        .fold(0.0, f64::max);
    ensure(late < 0.1 * slope_10, || {
        format!("slope after 150 h {late:e} vs {slope_10:e} at 10 h")
    })?;
    Ok(format!(
        "U(1000 h)={:.3e}, U_WD(1000 h)={:.3e}; slope {late:.2e}/h after 150 h vs {slope_10:.2e}/h at 10 h",
        u[1000], u_wd[1000]
    ))
}

/// State counts grow with C and E_S; C=7 at E_S=5 stays tractable.
fn scalability() -> Outcome {
    let table = run(&StudySpec::new(StudyId::StateSpaceReport))?;
    let lookup = |c: f64, e_s: f64| {
        let (ci, ei) = (
            table.column_index("C").unwrap(),
            table.column_index("E_S").unwrap(),
        );
        table
            .rows
            .iter()
            .find(|r| r[ci] == c && r[ei] == e_s)
            .cloned()
    };
    let idx = |name: &str| table.column_index(name).unwrap();
    let (states, gen, solve) = (idx("states"), idx("generation_s"), idx("solve_s"));
    let rows: Vec<Vec<f64>> = [(3.0, 5.0), (5.0, 5.0), (7.0, 5.0), (5.0, 10.0)]
        .iter()
        .map(|&(c, e)| lookup(c, e).ok_or_else(|| format!("no row C={c} E_S={e}")))
        .collect::<Result<_, _>>()?;
    let (c3, c5, c7, c5e10) = (&rows[0], &rows[1], &rows[2], &rows[3]);
    ensure(c3[states] < c5[states] && c5[states] < c7[states], || {
        format!("E_S=5 counts {} {} {}", c3[states], c5[states], c7[states])
    })?;
    ensure(c5[states] < c5e10[states], || {
        format!(
            "C=5 counts {} (E_S=5) vs {} (E_S=10)",
            c5[states], c5e10[states]
        )
    })?;
    let cost = c7[gen] + c7[solve];
    ensure(cost < 1800.0, || format!("C=7 E_S=5 took {cost:.1} s"))?;
    Ok(format!(
        "E_S=5 states {}/{}/{}, C=5 E_S=10 {}; C=7 E_S=5 in {cost:.1} s",
        c3[states], c5[states], c7[states], c5e10[states]
    ))
}

/// Analytic response-time CDF inside the DES 99% intervals.
fn oracle_concordance() -> Outcome {
    let spec = StudySpec::new(StudyId::OracleCrosscheck)
        .with_overrides([("C", "3"), ("N_F", "1"), ("injection", "bundle")])
        .map_err(|e| e.to_string())?;
    let table = run(&spec)?;
    let t = column(&table, "t_ms")?;
    let analytic = column(&table, "analytic")?;
    let (low, high) = (column(&table, "ci99_low")?, column(&table, "ci99_high")?);
    ensure(t == [50.0, 200.0, 500.0, 1000.0], || {
        format!("time points {t:?}")
    })?;
    let runs: usize = table.metadata["runs"]
        .parse()
        .map_err(|_| "runs metadata")?;
    ensure(runs == 100_000, || format!("{runs} runs"))?;
    for k in 0..t.len() {
        ensure(low[k] <= analytic[k] && analytic[k] <= high[k], || {
            format!(
                "t={} ms: analytic {} outside [{}, {}]",
                t[k], analytic[k], low[k], high[k]
            )
        })?;
    }
    let detail: Vec<String> = (0..t.len())
        .map(|k| {
            format!(
                "{}ms {:.5} in [{:.5}, {:.5}]",
                t[k], analytic[k], low[k], high[k]
            )
        })
        .collect();
    Ok(detail.join("; "))
}

/// Two runs of S1 and S4 write byte-identical CSV files.
fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut detail = Vec::new();
    for id in [StudyId::CdfByClusterSize, StudyId::Unavailability1000h] {
        let mut files = Vec::new();
        for pass in 0..2 {
            let path = dir.path().join(format!("{}-{pass}.csv", id.short()));
            run(&StudySpec::new(id))?
                .emit(Format::Csv, &path)
                .map_err(|e| e.to_string())?;
            files.push(std::fs::read(&path).map_err(|e| e.to_string())?);
        }
        ensure(files[0] == files[1], || format!("{id}: outputs differ"))?;
        detail.push(format!("{} {} bytes", id.short(), files[0].len()));
    }
    Ok(format!("identical: {}", detail.join(", ")))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            number: 1,
            name: "two-state closed form",
            budget: Duration::from_secs(1),
            check: closed_form_two_state,
        },
        Criterion {
            number: 2,
            name: "Poisson truncation",
            budget: Duration::from_secs(5),
            check: poisson_truncation,
        },
        Criterion {
            number: 3,
            name: "formula suite",
            budget: Duration::from_secs(1),
            check: formula_suite,
        },
        Criterion {
            number: 4,
            name: "Erlang approximation",
            budget: Duration::from_secs(30),
            check: erlang_moments,
        },
        Criterion {
            number: 5,
            name: "zero-failure response path",
            budget: Duration::from_secs(120),
            check: zero_failure_path,
        },
        Criterion {
            number: 6,
            name: "CDF ordered by cluster size",
            budget: Duration::from_secs(600),
            check: cdf_trend,
        },
        Criterion {
            number: 7,
            name: "watchdog unavailability",
            budget: Duration::from_secs(600),
            check: watchdog_unavailability,
        },
        Criterion {
            number: 8,
            name: "state-space scalability",
            budget: Duration::from_secs(1800),
            check: scalability,
        },
        Criterion {
            number: 9,
            name: "analytic/DES concordance",
            budget: Duration::from_secs(900),
            check: oracle_concordance,
        },
        Criterion {
            number: 10,
            name: "byte-identical reruns",
            budget: Duration::from_secs(600),
            check: determinism,
        },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.check)();
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|detail| {
            if elapsed <= c.budget {
                Ok(detail)
            } else {
                Err(format!(
                    "{detail}; took {elapsed:.1?}, budget {:?}",
                    c.budget
                ))
            }
        });
        match outcome {
            Ok(detail) => println!("PASS {:>2} {}: {detail} [{elapsed:.2?}]", c.number, c.name),
            Err(reason) => {
                failed += 1;
                println!("FAIL {:>2} {}: {reason} [{elapsed:.2?}]", c.number, c.name);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
