//! The four-stroke quantum Otto cycle run on the two-spin working medium.
//!
//! Stroke 1 thermalizes at `(B1, T1)`, stroke 2 changes the field to `B2` at
//! frozen populations, stroke 3 thermalizes at `(B2, T2)` and stroke 4
//! returns the field to `B1`. Heat is exchanged only on the thermalization
//! strokes and work only on the field strokes.
//!
//! Sign conventions: `Q1 > 0` is heat taken from the hot bath, `Q2 < 0` heat
//! released to the cold bath, `W > 0` work delivered by the engine.

use std::cmp::Ordering;

use crate::error::{require_finite, Error, Result};
use crate::spin_model::{
    local_temperature, population_shift, thermal_probs, LevelProbabilities, ModelPoint,
};

/// Absolute tolerance used to classify heats, work and efficiency gaps.
pub const CLASSIFICATION_TOLERANCE: f64 = 1e-12;

const EPS: f64 = CLASSIFICATION_TOLERANCE;

/// Engine parameters: coupling `J`, fields `B1`/`B2` at the hot/cold strokes
/// and bath temperatures `T1 > T2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleParams {
    j: f64,
    b1: f64,
    b2: f64,
    t1: f64,
    t2: f64,
}

impl CycleParams {
    pub fn new(j: f64, b1: f64, b2: f64, t1: f64, t2: f64) -> Result<Self> {
        let j = require_finite("J", j)?;
        let b1 = require_finite("B1", b1)?;
        let b2 = require_finite("B2", b2)?;
        let t1 = require_finite("T1", t1)?;
        let t2 = require_finite("T2", t2)?;
        if j < 0.0 {
            return Err(Error::Domain {
                param: "J",
                constraint: "J >= 0 (antiferromagnetic coupling)",
                value: j,
            });
        }
        for (param, value) in [("B1", b1), ("B2", b2)] {
            if value <= 0.0 {
                return Err(Error::Domain {
                    param,
                    constraint: "a field > 0",
                    value,
                });
            }
        }
        if t2 <= 0.0 {
            return Err(Error::Domain {
                param: "T2",
                constraint: "T2 > 0",
                value: t2,
            });
        }
        if t1 <= t2 {
            return Err(Error::TemperatureOrder { t1, t2 });
        }
        Ok(Self { j, b1, b2, t1, t2 })
    }

    pub fn j(&self) -> f64 {
        self.j
    }

    pub fn b1(&self) -> f64 {
        self.b1
    }

    pub fn b2(&self) -> f64 {
        self.b2
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn t2(&self) -> f64 {
        self.t2
    }

    /// Same parameters with a different coupling.
    pub fn with_coupling(&self, j: f64) -> Result<Self> {
        Self::new(j, self.b1, self.b2, self.t1, self.t2)
    }

    pub fn hot_point(&self) -> ModelPoint {
        ModelPoint::new(self.j, self.b1, self.t1).expect("validated cycle parameters")
    }

    pub fn cold_point(&self) -> ModelPoint {
        ModelPoint::new(self.j, self.b2, self.t2).expect("validated cycle parameters")
    }

    pub fn field_case(&self) -> FieldCase {
        match self.b1.partial_cmp(&self.b2) {
            Some(Ordering::Greater) => FieldCase::FieldDecrease,
            Some(Ordering::Less) => FieldCase::FieldIncrease,
            _ => FieldCase::Degenerate,
        }
    }

    /// Efficiency of the same cycle with uncoupled spins, `1 − B2/B1`.
    pub fn uncoupled_efficiency(&self) -> f64 {
        1.0 - self.b2 / self.b1
    }

    pub fn carnot_efficiency(&self) -> f64 {
        1.0 - self.t2 / self.t1
    }
}

/// Direction of the field change on the first work stroke.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldCase {
    /// `B1 > B2`
    FieldDecrease,
    /// `B2 > B1`; impossible as an engine without coupling.
    FieldIncrease,
    /// `B1 = B2`; no work.
    Degenerate,
}

impl FieldCase {
    pub fn label(&self) -> &'static str {
        match self {
            FieldCase::FieldDecrease => "field-decrease",
            FieldCase::FieldIncrease => "field-increase",
            FieldCase::Degenerate => "degenerate",
        }
    }
}

/// Heats, work and efficiencies of one cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleResult {
    /// Populations after thermalizing at `(B1, T1)`.
    pub hot: LevelProbabilities,
    /// Populations after thermalizing at `(B2, T2)`.
    pub cold: LevelProbabilities,
    /// `Q1`
    pub heat_hot: f64,
    /// `Q2`
    pub heat_cold: f64,
    /// `W`
    pub work: f64,
    /// Heat taken by one spin from the hot bath, `q1`.
    pub spin_heat_hot: f64,
    /// Heat taken by one spin from the cold bath, `q2`.
    pub spin_heat_cold: f64,
    /// Work by one spin, `w = q1 + q2`.
    pub spin_work: f64,
    /// Interaction heat `8J(p1′ − p1)`; it passes between the baths without
    /// producing work.
    pub leak: f64,
    /// `W/Q1`, defined only when `Q1 > ε`.
    pub eta: Option<f64>,
    /// Single-spin efficiency: `w/q1` for a field decrease, `w/q2` for a
    /// field increase.
    pub eta_local: Option<f64>,
    pub eta0: f64,
    pub eta_carnot: f64,
    pub bound: Option<f64>,
    pub t1_local: Option<f64>,
    pub t2_local: Option<f64>,
}

/// Evaluates the cycle in closed form.
pub fn run_cycle(params: &CycleParams) -> CycleResult {
    let hot = thermal_probs(&params.hot_point());
    let cold = thermal_probs(&params.cold_point());
    let (j, b1, b2) = (params.j, params.b1, params.b2);

    let delta = magnetization_shift(&hot, &cold);
    let leak = 8.0 * j * singlet_shift(&hot, &cold);

    let spin_heat_hot = b1 * delta;
    let spin_heat_cold = -b2 * delta;
    let spin_work = spin_heat_hot + spin_heat_cold;

    let heat_hot = leak + 2.0 * b1 * delta;
    let heat_cold = -leak - 2.0 * b2 * delta;
    let work = 2.0 * (b1 - b2) * delta;

    let eta = (heat_hot > EPS).then(|| work / heat_hot);
    let eta_local = match params.field_case() {
        FieldCase::FieldDecrease if spin_heat_hot.abs() > EPS => Some(spin_work / spin_heat_hot),
        FieldCase::FieldIncrease if spin_heat_cold.abs() > EPS => Some(spin_work / spin_heat_cold),
        _ => None,
    };

    CycleResult {
        hot,
        cold,
        heat_hot,
        heat_cold,
        work,
        spin_heat_hot,
        spin_heat_cold,
        spin_work,
        leak,
        eta,
        eta_local,
        eta0: params.uncoupled_efficiency(),
        eta_carnot: params.carnot_efficiency(),
        bound: efficiency_bound(params),
        t1_local: local_temperature(b1, &hot).ok(),
        t2_local: local_temperature(b2, &cold).ok(),
    }
}

/// Net shift of magnetic population between the thermal states,
/// `(p2′ − p4′) − (p2 − p4)`.
fn magnetization_shift(hot: &LevelProbabilities, cold: &LevelProbabilities) -> f64 {
    population_shift(hot, cold, 1) - population_shift(hot, cold, 3)
}

/// `p1′ − p1`.
fn singlet_shift(hot: &LevelProbabilities, cold: &LevelProbabilities) -> f64 {
    population_shift(hot, cold, 0)
}

/// Upper bound `η0 / (1 − 4J/B1)` on the efficiency of a coupled engine that
/// beats the uncoupled one. Undefined unless `B1 > 4J`.
///
/// For `B2 > B1` the same expression is returned verbatim; it is then
/// negative and only informational.
pub fn efficiency_bound(params: &CycleParams) -> Option<f64> {
    let ratio = 4.0 * params.j / params.b1;
    (ratio < 1.0).then(|| params.uncoupled_efficiency() / (1.0 - ratio))
}

/// Operating-regime flags for one cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegimeReport {
    /// `W > ε`, `Q1 > ε` and `Q2 < −ε`.
    pub is_engine: bool,
    pub case: FieldCase,
    /// `η > η0 + ε`; only ever set for field-decrease engines.
    pub beats_uncoupled: bool,
    /// Each spin takes heat from the cold bath and gives heat to the hot one.
    pub local_counterflow: bool,
    /// `η < η0/(1 − 4J/B1)`, judged by [`bound_gap`]; `None` unless this is a field-decrease engine
    /// that beats the uncoupled efficiency.
    pub bound_ok: Option<bool>,
    /// `η < 1 − T2/T1`; `None` when `η` is undefined.
    pub carnot_ok: Option<bool>,
    /// `B2/T2 > B1/T1`
    pub pwc_condition: bool,
    /// Every link of [`bound_audit`] holds (vacuously true when not applicable).
    pub appendix_ok: bool,
}

pub fn classify(params: &CycleParams, result: &CycleResult) -> RegimeReport {
    let is_engine = result.work > EPS && result.heat_hot > EPS && result.heat_cold < -EPS;
    let case = params.field_case();
    let beats_uncoupled = case == FieldCase::FieldDecrease
        && is_engine
        && result.eta.is_some_and(|eta| eta - result.eta0 > EPS);
    let bound_ok = beats_uncoupled.then(|| bound_gap(params, result).is_some_and(|gap| gap > 0.0));
    RegimeReport {
        is_engine,
        case,
        beats_uncoupled,
        local_counterflow: result.spin_heat_hot < -EPS && result.spin_heat_cold > EPS,
        bound_ok,
        carnot_ok: result.eta.map(|eta| eta < result.eta_carnot),
        pwc_condition: params.b2 / params.t2 > params.b1 / params.t1,
        appendix_ok: bound_audit(params, result).all_hold(),
    }
}

/// Which family of inequalities an audit checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuditScope {
    /// Not an engine, or a field-decrease engine that does not beat `η0`.
    NotApplicable,
    /// Field-decrease engine with `η > η0`: the full chain behind the bound.
    FieldDecrease,
    /// Field-increase engine: population orderings, local counter-flow and
    /// the Carnot inequality.
    FieldIncrease,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuditLink {
    pub label: &'static str,
    pub holds: bool,
}

/// Outcome of checking every inequality that leads to the efficiency bound.
/// Failures are reported, never raised.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundAudit {
    pub scope: AuditScope,
    pub links: Vec<AuditLink>,
    /// `η0/(1 − 4J/B1)` evaluated verbatim for field-increase engines.
    pub informational_bound: Option<f64>,
}

impl BoundAudit {
    pub fn all_hold(&self) -> bool {
        self.links.iter().all(|l| l.holds)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AuditLink> {
        self.links.iter().filter(|l| !l.holds)
    }
}

pub fn bound_audit(params: &CycleParams, result: &CycleResult) -> BoundAudit {
    let is_engine = result.work > EPS && result.heat_hot > EPS && result.heat_cold < -EPS;
    let beats = result.eta.is_some_and(|eta| eta - result.eta0 > EPS);
    match params.field_case() {
        FieldCase::FieldDecrease if is_engine && beats => field_decrease_audit(params, result),
        FieldCase::FieldIncrease if is_engine => field_increase_audit(params, result),
        _ => BoundAudit {
            scope: AuditScope::NotApplicable,
            links: Vec::new(),
            informational_bound: None,
        },
    }
}

fn field_decrease_audit(params: &CycleParams, result: &CycleResult) -> BoundAudit {
    let (p, q) = (&result.hot, &result.cold);
    let (j, b1, b2, t1, t2) = (params.j, params.b1, params.b2, params.t1, params.t2);
    // Shifts hot → cold, `p_k′ − p_k`.
    let shift = |k| population_shift(p, q, k);
    let bound = result.bound.unwrap_or(f64::NAN);

    let links = vec![
        link("p1 > p1'", shift(0) < 0.0),
        link("p3 > p3'", shift(2) < 0.0),
        link("p4 > p4'", shift(3) < 0.0),
        link("p2' > p2", shift(1) > 0.0),
        link("p2'/p1' > p2/p1", q.ln_ratio(1, 0) > p.ln_ratio(1, 0)),
        // exp is monotone: compare the exponents.
        link(
            "exp((B2-4J)/T2) > exp((B1-4J)/T1)",
            (b2 - 4.0 * j) / t2 > (b1 - 4.0 * j) / t1,
        ),
        link("B1 > 4J", b1 > 4.0 * j),
        link("B2 > 4J", b2 > 4.0 * j),
        link(
            "p1 - p1' < (p4 - p4') + (p2' - p2)",
            leak_margin(p, q) > 0.0,
        ),
        link(
            "eta < eta0/(1-4J/B1)",
            bound_gap(params, result).is_some_and(|g| g > 0.0),
        ),
        link("eta0/(1-4J/B1) < 1-T2/T1", bound < result.eta_carnot),
    ];
    BoundAudit {
        scope: AuditScope::FieldDecrease,
        links,
        informational_bound: None,
    }
}

/// `[(p4 − p4′) + (p2′ − p2)] − (p1 − p1′)`, rewritten through normalization
/// as `(p3 − p3′) + 2(p4 − p4′)` so that the margin is not lost when both
/// sides agree to many digits.
fn leak_margin(hot: &LevelProbabilities, cold: &LevelProbabilities) -> f64 {
    -population_shift(hot, cold, 2) - 2.0 * population_shift(hot, cold, 3)
}

/// `η0/(1 − 4J/B1) − η` for a field-decrease engine, evaluated without
/// subtracting the two nearly equal efficiencies.
///
/// With `a = 4J/B1`, `Δ = (p2′ − p4′) − (p2 − p4)` and `ρ = (p1 − p1′)/Δ`,
/// the efficiency is `η = η0/(1 − aρ)`, so the gap is
/// `η0 · a(1 − ρ) / ((1 − a)(1 − aρ))` with `1 − ρ = leak_margin/Δ`.
/// `None` when the bound is undefined or the cycle moves no magnetization.
pub fn bound_gap(params: &CycleParams, result: &CycleResult) -> Option<f64> {
    result.bound?;
    let delta = magnetization_shift(&result.hot, &result.cold);
    if delta <= 0.0 {
        return None;
    }
    let a = 4.0 * params.j / params.b1;
    let one_minus_rho = leak_margin(&result.hot, &result.cold) / delta;
    let one_minus_a_rho = (1.0 - a) + a * one_minus_rho;
    Some(result.eta0 * a * one_minus_rho / ((1.0 - a) * one_minus_a_rho))
}

fn field_increase_audit(_params: &CycleParams, result: &CycleResult) -> BoundAudit {
    let (p, q) = (&result.hot, &result.cold);
    let shift = |k| population_shift(p, q, k);
    let eta = result.eta.unwrap_or(f64::NAN);
    let links = vec![
        link("p4 > p4'", shift(3) < 0.0),
        link("p3 > p3'", shift(2) < 0.0),
        link("p2 > p2'", shift(1) < 0.0),
        link("p1' > p1", shift(0) > 0.0),
        link("q1 < 0", result.spin_heat_hot < 0.0),
        link("q2 > 0", result.spin_heat_cold > 0.0),
        link("eta < 1-T2/T1", eta < result.eta_carnot),
    ];
    BoundAudit {
        scope: AuditScope::FieldIncrease,
        links,
        informational_bound: result.bound,
    }
}

fn link(label: &'static str, holds: bool) -> AuditLink {
    AuditLink { label, holds }
}

/// Signs of the two sides of `8J(p1′ − p1) = Q1 (1 − η/η0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignLink {
    /// Sign of `p1′ − p1`.
    pub population_shift: Ordering,
    /// Sign of `η0 − η`.
    pub efficiency_gap: Ordering,
}

impl SignLink {
    pub fn consistent(&self) -> bool {
        self.population_shift == self.efficiency_gap
    }

    /// The common sign, when both sides agree.
    pub fn sign(&self) -> Option<Ordering> {
        self.consistent().then_some(self.population_shift)
    }
}

/// Relates the sign of the singlet population shift to whether coupling
/// raises or lowers the efficiency. Defined for field-decrease engines.
///
/// Both sides are normalized by `Q1` before the `ε` comparison, so they are
/// measured on the same scale.
pub fn sign_link(params: &CycleParams, result: &CycleResult) -> Option<SignLink> {
    let report = classify(params, result);
    if !(report.is_engine && report.case == FieldCase::FieldDecrease) {
        return None;
    }
    let eta = result.eta?;
    let population_shift = if params.j == 0.0 {
        Ordering::Equal
    } else {
        let shift = result.cold.p1() - result.hot.p1();
        sign_with_tolerance(8.0 * params.j * shift / result.heat_hot)
    };
    let efficiency_gap = sign_with_tolerance(1.0 - eta / result.eta0);
    Some(SignLink {
        population_shift,
        efficiency_gap,
    })
}

fn sign_with_tolerance(x: f64) -> Ordering {
    if x > EPS {
        Ordering::Greater
    } else if x < -EPS {
        Ordering::Less
    } else {
        Ordering::Equal
    }
}
