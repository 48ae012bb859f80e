//! Acceptance suite: one pass/fail line per criterion, non-zero exit on any
//! failure.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use otto_spin::otto_cycle::AuditScope;
use otto_spin::verify::sample_points;
use otto_spin::{
    bound_audit, classify, find_crossover, gibbs_state_oracle, local_temperature, reduced_state,
    run_cycle, run_sweep, thermal_probs, Crossover, CycleParams, CycleResult, FieldCase,
    ModelPoint, RegimeReport, SweepSpec, SweepVariable, TwoSpinState,
};

const FIG: (f64, f64, f64, f64) = (4.0, 3.0, 1.0, 0.5);

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let detail = f()?;
    let elapsed = start.elapsed();
    ensure(elapsed < limit, || {
        format!("took {elapsed:.2?}, limit {limit:.0?}")
    })?;
    Ok(format!("{detail} in {elapsed:.2?}"))
}

fn fig_sweep() -> Outcome {
    let (b1, b2, t1, t2) = FIG;
    let base = CycleParams::new(0.0, b1, b2, t1, t2).map_err(|e| e.to_string())?;
    let spec = SweepSpec::new(base, SweepVariable::J, 0.0, 1.0, 201).map_err(|e| e.to_string())?;
    let rows = run_sweep(&spec);
    ensure(rows.len() == 201, || format!("{} rows", rows.len()))?;

    let eta = |i: usize| rows[i].result.eta;
    let eta_zero = eta(0).ok_or("no efficiency at J = 0")?;
    ensure((eta_zero - 0.25).abs() <= 1e-14, || {
        format!("eta(0) = {eta_zero:e}")
    })?;

    let initial = rows[1..]
        .iter()
        .take_while(|r| r.result.eta.is_some_and(|e| e > 0.25))
        .count();
    ensure(initial > 0, || "eta(J) <= 0.25 right after J = 0".into())?;

    let crossover = find_crossover(&base);
    let Crossover::Found {
        coupling, bracket, ..
    } = crossover
    else {
        return Err(format!("no crossover: {crossover:?}"));
    };
    ensure(coupling > 0.0 && coupling < 1.0, || {
        format!("J* = {coupling}")
    })?;
    ensure(bracket.1 - bracket.0 < 1e-9, || {
        format!("bracket {bracket:?}")
    })?;
    let last_above = rows[initial].value;
    let first_below = rows[initial + 1].value;
    ensure(last_above < coupling && coupling < first_below, || {
        format!("J* = {coupling} outside grid bracket [{last_above}, {first_below}]")
    })?;

    for row in &rows {
        if !row.report.is_engine {
            continue;
        }
        let j = row.value;
        let e = row
            .result
            .eta
            .ok_or_else(|| format!("engine without eta at J = {j}"))?;
        ensure(e < 0.5, || format!("eta = {e} >= 0.5 at J = {j}"))?;
        if e > 0.25 {
            ensure(j < 1.0 && e < 0.25 / (1.0 - j), || {
                format!("eta = {e} above 0.25/(1-J) at J = {j}")
            })?;
        }
    }
    Ok(format!(
        "eta(0) = {eta_zero}, eta > 0.25 on {initial} rows after J = 0, J* = {coupling:.10}"
    ))
}

fn oracle_equivalence() -> Outcome {
    let mut worst_prob = 0.0f64;
    let mut worst_trace = 0.0f64;
    let points = sample_points(1000, 1);
    for params in &points {
        for point in [params.hot_point(), params.cold_point()] {
            let probs = thermal_probs(&point);
            let numeric = gibbs_state_oracle(&point);
            let closed = TwoSpinState::from_probabilities(&probs);
            let by_level = numeric
                .level_populations()
                .iter()
                .zip(probs.as_array())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let by_entry = (numeric.matrix() - closed.matrix()).abs().max();
            worst_prob = worst_prob.max(by_level).max(by_entry);

            let reduced = reduced_state(&probs).matrix();
            let first = (numeric.reduce_to_first() - reduced).abs().max();
            let second = (numeric.reduce_to_second() - reduced).abs().max();
            worst_trace = worst_trace.max(first).max(second);
        }
    }
    ensure(worst_prob <= 1e-10, || {
        format!("probability mismatch {worst_prob:e}")
    })?;
    ensure(worst_trace <= 1e-12, || {
        format!("partial trace mismatch {worst_trace:e}")
    })?;
    Ok(format!(
        "{} states, max |dp| = {worst_prob:.1e}, max |d rho_A| = {worst_trace:.1e}",
        2 * points.len()
    ))
}

struct Sampled {
    params: CycleParams,
    result: CycleResult,
    report: RegimeReport,
}

fn sampled() -> Vec<Sampled> {
    sample_points(100_000, 0)
        .into_iter()
        .map(|params| {
            let result = run_cycle(&params);
            let report = classify(&params, &result);
            Sampled {
                params,
                result,
                report,
            }
        })
        .collect()
}

fn balanced(lhs: f64, terms: &[f64]) -> bool {
    let scale = terms.iter().fold(lhs.abs(), |m, t| m.max(t.abs()));
    (lhs - terms.iter().sum::<f64>()).abs() <= 1e-13 * scale + 1e-15
}

fn conservation() -> Outcome {
    let samples = sampled();
    let mut failures = Vec::new();
    for (i, s) in samples.iter().enumerate() {
        let r = &s.result;
        let checks = [
            ("W = Q1 + Q2", balanced(r.work, &[r.heat_hot, r.heat_cold])),
            ("W = 2w", balanced(r.work, &[r.spin_work, r.spin_work])),
            (
                "Q1 = leak + 2q1",
                balanced(r.heat_hot, &[r.leak, r.spin_heat_hot, r.spin_heat_hot]),
            ),
            (
                "Q2 = -leak + 2q2",
                balanced(r.heat_cold, &[-r.leak, r.spin_heat_cold, r.spin_heat_cold]),
            ),
            ("hot normalization", (r.hot.sum() - 1.0).abs() <= 1e-14),
            ("cold normalization", (r.cold.sum() - 1.0).abs() <= 1e-14),
        ];
        failures.extend(
            checks
                .iter()
                .filter(|c| !c.1)
                .map(|c| format!("#{i}: {}", c.0)),
        );
    }
    ensure(failures.is_empty(), || {
        format!("{} failures, first {}", failures.len(), failures[0])
    })?;
    Ok(format!(
        "{} points, 6 identities each, 0 failures",
        samples.len()
    ))
}

fn second_law_and_bound(samples: &[Sampled]) -> Outcome {
    let mut engines = 0;
    let mut audited = 0;
    for (i, s) in samples.iter().enumerate() {
        if !s.report.is_engine {
            continue;
        }
        engines += 1;
        let eta = s
            .result
            .eta
            .ok_or_else(|| format!("#{i}: engine without eta"))?;
        ensure(eta < s.result.eta_carnot, || {
            format!("#{i}: eta = {eta} >= Carnot")
        })?;
        if s.report.case == FieldCase::FieldDecrease && eta > s.result.eta0 {
            audited += 1;
            let audit = bound_audit(&s.params, &s.result);
            ensure(audit.scope == AuditScope::FieldDecrease, || {
                format!("#{i}: audit not applicable")
            })?;
            let failure = audit.failures().next().map(|l| l.label);
            if let Some(label) = failure {
                return Err(format!("#{i} {:?}: {label} fails", s.params));
            }
        }
    }
    ensure(audited > 0, || "no field-decrease point beats eta0".into())?;
    Ok(format!(
        "{engines} engines below Carnot, {audited} full audit chains hold"
    ))
}

fn field_increase(samples: &[Sampled]) -> Outcome {
    let mut found = 0;
    for (i, s) in samples.iter().enumerate() {
        let p = &s.params;
        if !(p.b2() > p.b1() && s.report.is_engine) {
            continue;
        }
        found += 1;
        let r = &s.result;
        ensure(r.spin_heat_hot < 0.0 && r.spin_heat_cold > 0.0, || {
            format!(
                "#{i}: q1 = {:e}, q2 = {:e}",
                r.spin_heat_hot, r.spin_heat_cold
            )
        })?;
        let ratio = r.spin_work / r.spin_heat_cold;
        let expected = 1.0 - p.b1() / p.b2();
        ensure((ratio - expected).abs() <= 1e-12, || {
            format!("#{i}: w/q2 = {ratio}, 1 - B1/B2 = {expected}")
        })?;
        let t1 = r.t1_local.ok_or_else(|| format!("#{i}: T1' undefined"))?;
        let t2 = r.t2_local.ok_or_else(|| format!("#{i}: T2' undefined"))?;
        ensure(t2 > t1, || format!("#{i}: T2' = {t2} <= T1' = {t1}"))?;
        ensure(p.b1() / t1 > p.b2() / t2, || {
            format!("#{i}: B1/T1' <= B2/T2'")
        })?;
        let audit = bound_audit(p, r);
        ensure(audit.scope == AuditScope::FieldIncrease, || {
            format!("#{i}: audit not applicable")
        })?;
        let failure = audit.failures().next().map(|l| l.label);
        if let Some(label) = failure {
            return Err(format!("#{i} {p:?}: {label} fails"));
        }
    }
    ensure(found > 0, || {
        "no field-increase engine among samples".into()
    })?;
    Ok(format!(
        "{found} field-increase engines, all conditions hold"
    ))
}

fn local_temperatures(samples: &[Sampled]) -> Outcome {
    let mut coupled = 0;
    let mut worst_uncoupled = 0.0f64;
    for (i, s) in samples.iter().enumerate() {
        let p = &s.params;
        if p.j() > 0.0 {
            coupled += 1;
            let t1 = s
                .result
                .t1_local
                .ok_or_else(|| format!("#{i}: T1' undefined"))?;
            let t2 = s
                .result
                .t2_local
                .ok_or_else(|| format!("#{i}: T2' undefined"))?;
            ensure(t1 > p.t1() && t2 > p.t2(), || {
                format!("#{i}: T1' = {t1} vs {}, T2' = {t2} vs {}", p.t1(), p.t2())
            })?;
        }
        for (b, t) in [(p.b1(), p.t1()), (p.b2(), p.t2())] {
            let probs = thermal_probs(&ModelPoint::new(0.0, b, t).map_err(|e| e.to_string())?);
            let local = local_temperature(b, &probs).map_err(|e| e.to_string())?;
            worst_uncoupled = worst_uncoupled.max((local - t).abs());
        }
    }
    ensure(worst_uncoupled <= 1e-10, || {
        format!("uncoupled |T' - T| = {worst_uncoupled:e}")
    })?;
    Ok(format!(
        "{coupled} coupled points elevated, max uncoupled |T' - T| = {worst_uncoupled:.1e}"
    ))
}

fn cli_contract() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_otto-spin");
    let run = |args: &[&str]| {
        Command::new(bin)
            .args(args)
            .output()
            .map_err(|e| format!("spawn failed: {e}"))
    };
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let fixed = ["--b1", "4", "--b2", "3", "--t1", "1", "--t2", "0.5"];
    let sweep = |path: &std::path::Path| -> Result<Vec<u8>, String> {
        let mut args = vec![
            "sweep", "--var", "J", "--lo", "0", "--hi", "1", "--steps", "201",
        ];
        args.extend(fixed);
        args.extend(["--output", path.to_str().unwrap()]);
        let out = run(&args)?;
        ensure(out.status.code() == Some(0), || {
            format!("sweep exit {:?}", out.status)
        })?;
        std::fs::read(path).map_err(|e| e.to_string())
    };
    let first = sweep(&dir.path().join("a.csv"))?;
    let second = sweep(&dir.path().join("b.csv"))?;
    ensure(first == second, || "sweep CSV differs between runs".into())?;

    let expect = |args: &[&str], code: i32| -> Result<(), String> {
        let out = run(args)?;
        ensure(out.status.code() == Some(code), || {
            format!(
                "`{}` exited {:?}, expected {code}",
                args.join(" "),
                out.status.code()
            )
        })
    };
    let mut cycle = vec!["cycle", "--j", "0.1"];
    cycle.extend(fixed);
    expect(&cycle, 0)?;
    let mut bad = vec!["cycle", "--j", "-1"];
    bad.extend(fixed);
    expect(&bad, 2)?;
    expect(&["verify", "--samples", "0"], 2)?;
    let unwritable = dir.path().join("missing").join("out.csv");
    let mut io = vec![
        "sweep", "--var", "J", "--lo", "0", "--hi", "1", "--steps", "3",
    ];
    io.extend(fixed);
    io.extend(["--output", unwritable.to_str().unwrap()]);
    expect(&io, 3)?;
    expect(&["verify", "--samples", "100000", "--seed", "0"], 0)?;
    Ok("CSV byte-identical, exit codes 0/2/3 as expected, verify 100000 seed 0 exits 0".into())
}

fn main() -> ExitCode {
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    results.push((
        "AC1 fig. sweep, crossover and bounds",
        timed(Duration::from_secs(1), fig_sweep),
    ));
    results.push((
        "AC2 oracle equivalence",
        timed(Duration::from_secs(5), oracle_equivalence),
    ));
    results.push((
        "AC3 conservation suite",
        timed(Duration::from_secs(10), conservation),
    ));
    let samples = sampled();
    results.push(("AC4 second law and bound", second_law_and_bound(&samples)));
    results.push(("AC5 field-increase engines", field_increase(&samples)));
    results.push(("AC6 local temperatures", local_temperatures(&samples)));
    results.push(("AC7 CLI contract", cli_contract()));

    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name}: {detail}");
            }
        }
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
