//! Randomized verification of every model and cycle invariant.
//!
//! Parameter points are drawn from a seeded ChaCha generator, so a seed
//! fully determines the sample set. Points are evaluated in parallel; the
//! aggregation only counts and keeps the worst violation per invariant, with
//! ties broken by sample index, so the report does not depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::otto_cycle::{
    bound_audit, classify, run_cycle, AuditScope, CycleParams, CycleResult, FieldCase, RegimeReport,
};
use crate::spin_model::{
    gibbs_state_oracle, reduced_state, spectrum, thermal_probs, LevelProbabilities, ModelPoint,
};

/// Upper end of the sampled coupling range `[0, J_MAX]`.
pub const J_MAX: f64 = 5.0;
/// Fields are sampled from `(0, B_MAX]`.
pub const B_MAX: f64 = 10.0;
/// Cold-bath temperatures are sampled from `[T2_MIN, T2_MAX]`.
pub const T2_MIN: f64 = 0.05;
pub const T2_MAX: f64 = 5.0;
/// Hot-bath temperatures are sampled from `(T2, T1_MAX]`.
pub const T1_MAX: f64 = 10.0;

pub const NORMALIZATION_TOL: f64 = 1e-14;
pub const ORACLE_TOL: f64 = 1e-10;
pub const PARTIAL_TRACE_TOL: f64 = 1e-12;
pub const SPECTRUM_TOL: f64 = 1e-12;
pub const UNCOUPLED_TEMPERATURE_TOL: f64 = 1e-10;
/// Relative tolerance of energy balances, measured against the largest
/// term entering the balance.
pub const BALANCE_REL_TOL: f64 = 1e-13;
pub const BALANCE_ABS_TOL: f64 = 1e-15;
pub const LOCAL_EFFICIENCY_TOL: f64 = 1e-12;

/// Draws `samples` valid cycle parameter points from `seed`.
pub fn sample_points(samples: usize, seed: u64) -> Vec<CycleParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|_| {
            let j = J_MAX * rng.random::<f64>();
            let b1 = B_MAX * (1.0 - rng.random::<f64>());
            let b2 = B_MAX * (1.0 - rng.random::<f64>());
            let t2 = T2_MIN + (T2_MAX - T2_MIN) * rng.random::<f64>();
            let t1 = T1_MAX - (T1_MAX - t2) * rng.random::<f64>();
            CycleParams::new(j, b1, b2, t1, t2).expect("sampling ranges yield valid points")
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Invariant {
    Normalization,
    SpectrumIdentities,
    OracleEquivalence,
    PartialTrace,
    LocalTemperatureElevation,
    LocalTemperatureUncoupled,
    FirstLaw,
    Locality,
    SecondLaw,
    AppendixChain,
    FieldIncreaseConditions,
    LocalTemperaturePwc,
    SignLink,
    UncoupledEngineCriterion,
}

impl Invariant {
    pub const ALL: [Invariant; 14] = [
        Invariant::Normalization,
        Invariant::SpectrumIdentities,
        Invariant::OracleEquivalence,
        Invariant::PartialTrace,
        Invariant::LocalTemperatureElevation,
        Invariant::LocalTemperatureUncoupled,
        Invariant::FirstLaw,
        Invariant::Locality,
        Invariant::SecondLaw,
        Invariant::AppendixChain,
        Invariant::FieldIncreaseConditions,
        Invariant::LocalTemperaturePwc,
        Invariant::SignLink,
        Invariant::UncoupledEngineCriterion,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Invariant::Normalization => "normalization",
            Invariant::SpectrumIdentities => "spectrum_identities",
            Invariant::OracleEquivalence => "oracle_equivalence",
            Invariant::PartialTrace => "partial_trace",
            Invariant::LocalTemperatureElevation => "local_temperature_elevation",
            Invariant::LocalTemperatureUncoupled => "local_temperature_uncoupled",
            Invariant::FirstLaw => "first_law",
            Invariant::Locality => "locality",
            Invariant::SecondLaw => "second_law",
            Invariant::AppendixChain => "appendix_chain",
            Invariant::FieldIncreaseConditions => "field_increase_conditions",
            Invariant::LocalTemperaturePwc => "local_temperature_pwc",
            Invariant::SignLink => "sign_link",
            Invariant::UncoupledEngineCriterion => "uncoupled_engine_criterion",
        }
    }

    fn index(&self) -> usize {
        Invariant::ALL.iter().position(|i| i == self).unwrap()
    }
}

/// A failed check at one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub index: usize,
    pub params: CycleParams,
    /// How far the check missed; larger is worse.
    pub magnitude: f64,
    pub detail: String,
}

impl Violation {
    fn is_worse_than(&self, other: &Violation) -> bool {
        match self.magnitude.total_cmp(&other.magnitude) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => self.index < other.index,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tally {
    pub invariant: Invariant,
    pub checked: usize,
    pub failed: usize,
    pub worst: Option<Violation>,
}

impl Tally {
    fn new(invariant: Invariant) -> Self {
        Self {
            invariant,
            checked: 0,
            failed: 0,
            worst: None,
        }
    }

    pub fn passed(&self) -> usize {
        self.checked - self.failed
    }

    fn record(&mut self, violation: Option<Violation>) {
        self.checked += 1;
        if let Some(v) = violation {
            self.failed += 1;
            self.keep_worst(v);
        }
    }

    fn keep_worst(&mut self, v: Violation) {
        if self.worst.as_ref().is_none_or(|w| v.is_worse_than(w)) {
            self.worst = Some(v);
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.checked += other.checked;
        self.failed += other.failed;
        if let Some(v) = other.worst {
            self.keep_worst(v);
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Accumulator {
    tallies: Vec<Tally>,
    field_increase_engines: usize,
}

impl Accumulator {
    fn new() -> Self {
        Self {
            tallies: Invariant::ALL.iter().map(|&i| Tally::new(i)).collect(),
            field_increase_engines: 0,
        }
    }

    fn merge(self, other: Accumulator) -> Accumulator {
        Accumulator {
            tallies: self
                .tallies
                .into_iter()
                .zip(other.tallies)
                .map(|(a, b)| a.merge(b))
                .collect(),
            field_increase_engines: self.field_increase_engines + other.field_increase_engines,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub seed: u64,
    pub samples: usize,
    pub tallies: Vec<Tally>,
    /// Sampled points with `B2 > B1` that run as engines.
    pub field_increase_engines: usize,
}

impl VerifyReport {
    pub fn tally(&self, invariant: Invariant) -> &Tally {
        &self.tallies[invariant.index()]
    }

    pub fn field_increase_engine_found(&self) -> bool {
        self.field_increase_engines > 0
    }

    pub fn all_pass(&self) -> bool {
        self.tallies.iter().all(|t| t.failed == 0) && self.field_increase_engine_found()
    }

    /// Plain-text report with one line per invariant.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("seed: {}\nsamples: {}\n", self.seed, self.samples));
        out.push_str(&format!(
            "{:<30} {:>9} {:>9} {:>9}\n",
            "invariant", "checked", "passed", "failed"
        ));
        for t in &self.tallies {
            out.push_str(&format!(
                "{:<30} {:>9} {:>9} {:>9}  {}\n",
                t.invariant.name(),
                t.checked,
                t.passed(),
                t.failed,
                if t.failed == 0 { "PASS" } else { "FAIL" }
            ));
        }
        out.push_str(&format!(
            "{:<30} {:>9}  {}\n",
            "field_increase_engine_found",
            self.field_increase_engines,
            if self.field_increase_engine_found() {
                "PASS"
            } else {
                "FAIL"
            }
        ));
        for t in self.tallies.iter().filter(|t| t.failed > 0) {
            if let Some(v) = &t.worst {
                let p = &v.params;
                out.push_str(&format!(
                    "worst {} violation at sample {}: J={:?} B1={:?} B2={:?} T1={:?} T2={:?} ({})\n",
                    t.invariant.name(),
                    v.index,
                    p.j(),
                    p.b1(),
                    p.b2(),
                    p.t1(),
                    p.t2(),
                    v.detail
                ));
            }
        }
        out.push_str(if self.all_pass() {
            "result: PASS\n"
        } else {
            "result: FAIL\n"
        });
        out
    }
}

/// Samples `samples` points from `seed` and checks every invariant.
pub fn run_verification(samples: usize, seed: u64) -> VerifyReport {
    let points = sample_points(samples, seed);
    let acc = points
        .par_iter()
        .enumerate()
        .fold(Accumulator::new, |mut acc, (index, params)| {
            check_point(index, params, &mut acc);
            acc
        })
        .reduce(Accumulator::new, Accumulator::merge);
    VerifyReport {
        seed,
        samples,
        tallies: acc.tallies,
        field_increase_engines: acc.field_increase_engines,
    }
}

/// Outcome of one check: `Err((magnitude, detail))` on failure.
type Check = Result<(), (f64, String)>;

fn less(a: f64, b: f64, what: &str) -> Check {
    if a < b {
        Ok(())
    } else {
        Err((a - b, format!("{what}: {a:?} !< {b:?}")))
    }
}

fn within(a: f64, b: f64, tol: f64, what: &str) -> Check {
    let diff = (a - b).abs();
    if diff <= tol {
        Ok(())
    } else {
        Err((
            diff,
            format!("{what}: |{a:?} - {b:?}| = {diff:e} > {tol:e}"),
        ))
    }
}

fn balance(lhs: f64, rhs: f64, terms: &[f64], what: &str) -> Check {
    let scale = terms.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    within(lhs, rhs, BALANCE_REL_TOL * scale + BALANCE_ABS_TOL, what)
}

fn holds(flag: bool, what: &str) -> Check {
    if flag {
        Ok(())
    } else {
        Err((1.0, what.to_string()))
    }
}

fn check_point(index: usize, params: &CycleParams, acc: &mut Accumulator) {
    let result = run_cycle(params);
    let report = classify(params, &result);
    let hot = params.hot_point();
    let cold = params.cold_point();

    let mut checks: Vec<(Invariant, Check)> = vec![
        (
            Invariant::Normalization,
            normalization(&result.hot, &result.cold),
        ),
        (
            Invariant::SpectrumIdentities,
            spectrum_identities(&[hot, cold]),
        ),
        (
            Invariant::OracleEquivalence,
            oracle_equivalence(&[hot, cold]),
        ),
        (Invariant::PartialTrace, partial_trace(&[hot, cold])),
        (
            Invariant::FirstLaw,
            balance(
                result.work,
                result.heat_hot + result.heat_cold,
                &[result.work, result.heat_hot, result.heat_cold, result.leak],
                "W = Q1 + Q2",
            ),
        ),
        (Invariant::Locality, locality(&result)),
    ];
    if params.j() > 0.0 {
        checks.push((
            Invariant::LocalTemperatureElevation,
            local_temperature_elevation(params, &result),
        ));
    }

    let uncoupled = params.with_coupling(0.0).expect("J = 0 is valid");
    let uncoupled_result = run_cycle(&uncoupled);
    checks.push((
        Invariant::LocalTemperatureUncoupled,
        local_temperature_uncoupled(&uncoupled, &uncoupled_result),
    ));
    checks.push((
        Invariant::UncoupledEngineCriterion,
        uncoupled_engine_criterion(
            &uncoupled,
            &uncoupled_result,
            &classify(&uncoupled, &uncoupled_result),
        ),
    ));

    if report.is_engine {
        checks.push((Invariant::SecondLaw, second_law(&result)));
        checks.push((
            Invariant::LocalTemperaturePwc,
            local_temperature_pwc(params, &result, report.case),
        ));
        match report.case {
            FieldCase::FieldDecrease => {
                checks.push((Invariant::SignLink, sign_link(params, &result)));
            }
            FieldCase::FieldIncrease => {
                acc.field_increase_engines += 1;
                checks.push((
                    Invariant::FieldIncreaseConditions,
                    field_increase_conditions(params, &result),
                ));
            }
            FieldCase::Degenerate => {}
        }
    }
    if report.beats_uncoupled {
        checks.push((Invariant::AppendixChain, appendix_chain(params, &result)));
    }

    for (invariant, check) in checks {
        let violation = check.err().map(|(magnitude, detail)| Violation {
            index,
            params: *params,
            magnitude,
            detail,
        });
        acc.tallies[invariant.index()].record(violation);
    }
}

fn normalization(hot: &LevelProbabilities, cold: &LevelProbabilities) -> Check {
    within(hot.sum(), 1.0, NORMALIZATION_TOL, "sum p")?;
    within(cold.sum(), 1.0, NORMALIZATION_TOL, "sum p'")
}

fn spectrum_identities(points: &[ModelPoint]) -> Check {
    for point in points {
        let s = spectrum(point);
        within(
            s.e4 - s.e2,
            4.0 * point.field(),
            SPECTRUM_TOL,
            "e4 - e2 = 4B",
        )?;
        within(
            s.e3 - s.e1,
            8.0 * point.coupling(),
            SPECTRUM_TOL,
            "e3 - e1 = 8J",
        )?;
    }
    Ok(())
}

fn oracle_equivalence(points: &[ModelPoint]) -> Check {
    for point in points {
        let numeric = gibbs_state_oracle(point).level_populations();
        let closed = thermal_probs(point).as_array();
        for (n, c) in numeric.iter().zip(closed) {
            within(*n, c, ORACLE_TOL, "Gibbs population")?;
        }
    }
    Ok(())
}

fn partial_trace(points: &[ModelPoint]) -> Check {
    for point in points {
        let state = gibbs_state_oracle(point);
        let expected = reduced_state(&thermal_probs(point)).matrix();
        for reduced in [state.reduce_to_first(), state.reduce_to_second()] {
            let diff = (reduced - expected).abs().max();
            within(diff, 0.0, PARTIAL_TRACE_TOL, "reduced state")?;
        }
    }
    Ok(())
}

fn local_temperature_elevation(params: &CycleParams, result: &CycleResult) -> Check {
    let t1_local = result.t1_local.unwrap_or(f64::NAN);
    let t2_local = result.t2_local.unwrap_or(f64::NAN);
    less(params.t1(), t1_local, "T1 < T1'")?;
    less(params.t2(), t2_local, "T2 < T2'")
}

fn local_temperature_uncoupled(params: &CycleParams, result: &CycleResult) -> Check {
    let t1_local = result.t1_local.unwrap_or(f64::NAN);
    let t2_local = result.t2_local.unwrap_or(f64::NAN);
    within(
        t1_local,
        params.t1(),
        UNCOUPLED_TEMPERATURE_TOL * params.t1(),
        "T1' = T1 at J = 0",
    )?;
    within(
        t2_local,
        params.t2(),
        UNCOUPLED_TEMPERATURE_TOL * params.t2(),
        "T2' = T2 at J = 0",
    )
}

/// The uncoupled criterion is a statement about signs, so it is checked on
/// the exact signs of `W`, `Q1` and `Q2`; deep in the frozen regime the work
/// is far below the classification tolerance while still positive. The
/// tolerance-based flag must never claim an engine the criterion forbids.
fn uncoupled_engine_criterion(
    params: &CycleParams,
    result: &CycleResult,
    report: &RegimeReport,
) -> Check {
    let predicted = params.b1() > params.b2() && report.pwc_condition;
    let runs = result.work > 0.0 && result.heat_hot > 0.0 && result.heat_cold < 0.0;
    holds(
        runs == predicted,
        "J = 0: W > 0, Q1 > 0, Q2 < 0 iff B1 > B2 and B2/T2 > B1/T1",
    )?;
    holds(
        !report.is_engine || predicted,
        "J = 0: engine flag set outside B1 > B2 and B2/T2 > B1/T1",
    )
}

fn locality(r: &CycleResult) -> Check {
    balance(
        r.work,
        2.0 * r.spin_work,
        &[r.work, r.spin_heat_hot, r.spin_heat_cold],
        "W = 2w",
    )?;
    balance(
        r.heat_hot,
        r.leak + 2.0 * r.spin_heat_hot,
        &[r.heat_hot, r.leak, r.spin_heat_hot],
        "Q1 = leak + 2q1",
    )?;
    balance(
        r.heat_cold,
        -r.leak + 2.0 * r.spin_heat_cold,
        &[r.heat_cold, r.leak, r.spin_heat_cold],
        "Q2 = -leak + 2q2",
    )
}

fn second_law(r: &CycleResult) -> Check {
    less(r.eta.unwrap_or(f64::NAN), r.eta_carnot, "eta < 1 - T2/T1")
}

fn sign_link(params: &CycleParams, r: &CycleResult) -> Check {
    match crate::otto_cycle::sign_link(params, r) {
        Some(link) => holds(link.consistent(), "sign(eta0 - eta) = sign(p1' - p1)"),
        None => holds(false, "sign link undefined at a field-decrease engine"),
    }
}

fn appendix_chain(params: &CycleParams, r: &CycleResult) -> Check {
    holds(r.bound.is_some(), "bound defined (B1 > 4J)")?;
    let audit = bound_audit(params, r);
    holds(audit.scope == AuditScope::FieldDecrease, "audit applicable")?;
    let first_failure = audit.failures().next().map(|l| l.label);
    match first_failure {
        Some(label) => holds(false, label),
        None => Ok(()),
    }
}

/// Strict signs `q1 < 0`, `q2 > 0` are part of the audit; the `ε`-based
/// counter-flow flag is not required here since an engine can have `W > ε`
/// while `|q1| < ε` when `|B1 − B2|` is large.
fn field_increase_conditions(params: &CycleParams, r: &CycleResult) -> Check {
    let audit = bound_audit(params, r);
    holds(audit.scope == AuditScope::FieldIncrease, "audit applicable")?;
    let first_failure = audit.failures().next().map(|l| l.label);
    if let Some(label) = first_failure {
        return holds(false, label);
    }
    within(
        r.spin_work / r.spin_heat_cold,
        1.0 - params.b1() / params.b2(),
        LOCAL_EFFICIENCY_TOL,
        "w/q2 = 1 - B1/B2",
    )
}

fn local_temperature_pwc(params: &CycleParams, r: &CycleResult, case: FieldCase) -> Check {
    let t1_local = r.t1_local.unwrap_or(f64::NAN);
    let t2_local = r.t2_local.unwrap_or(f64::NAN);
    let hot_ratio = params.b1() / t1_local;
    let cold_ratio = params.b2() / t2_local;
    match case {
        FieldCase::FieldDecrease => {
            less(hot_ratio, cold_ratio, "B1/T1' < B2/T2'")?;
            less(t2_local, t1_local, "T2' < T1'")
        }
        FieldCase::FieldIncrease => {
            less(cold_ratio, hot_ratio, "B2/T2' < B1/T1'")?;
            less(t1_local, t2_local, "T1' < T2'")
        }
        FieldCase::Degenerate => holds(false, "degenerate cycle classified as engine"),
    }
}
