//! One-parameter sweeps of the cycle, crossover location and CSV output.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::otto_cycle::{classify, run_cycle, CycleParams, CycleResult, FieldCase, RegimeReport};

/// Header of the sweep CSV format.
pub const CSV_HEADER: &str = "var,Q1,Q2,W,eta,eta0,bound,eta_carnot,leak,q1,q2,t1_local,t2_local,is_engine,beats_uncoupled,local_counterflow";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    J,
    B1,
    B2,
    T1,
    T2,
}

impl SweepVariable {
    pub fn name(&self) -> &'static str {
        match self {
            SweepVariable::J => "J",
            SweepVariable::B1 => "B1",
            SweepVariable::B2 => "B2",
            SweepVariable::T1 => "T1",
            SweepVariable::T2 => "T2",
        }
    }

    /// `base` with this variable replaced by `value`, revalidated.
    pub fn apply(&self, base: &CycleParams, value: f64) -> Result<CycleParams> {
        let (mut j, mut b1, mut b2, mut t1, mut t2) =
            (base.j(), base.b1(), base.b2(), base.t1(), base.t2());
        match self {
            SweepVariable::J => j = value,
            SweepVariable::B1 => b1 = value,
            SweepVariable::B2 => b2 = value,
            SweepVariable::T1 => t1 = value,
            SweepVariable::T2 => t2 = value,
        }
        CycleParams::new(j, b1, b2, t1, t2)
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepVariable {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "J" => Ok(SweepVariable::J),
            "B1" => Ok(SweepVariable::B1),
            "B2" => Ok(SweepVariable::B2),
            "T1" => Ok(SweepVariable::T1),
            "T2" => Ok(SweepVariable::T2),
            _ => Err(format!(
                "unknown sweep variable `{s}` (expected J, B1, B2, T1 or T2)"
            )),
        }
    }
}

/// A uniform grid over one parameter, every point of which is valid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    points: Vec<(f64, CycleParams)>,
    variable: SweepVariable,
}

impl SweepSpec {
    /// `steps` uniformly spaced values from `lo` to `hi` inclusive. The value
    /// of `variable` in `base` is ignored.
    pub fn new(
        base: CycleParams,
        variable: SweepVariable,
        lo: f64,
        hi: f64,
        steps: usize,
    ) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidSweep(format!(
                "range endpoints must be finite (got {lo}, {hi})"
            )));
        }
        if lo >= hi {
            return Err(Error::InvalidSweep(format!(
                "range requires lo < hi (got {lo} >= {hi})"
            )));
        }
        if steps < 2 {
            return Err(Error::InvalidSweep(format!(
                "steps must be at least 2 (got {steps})"
            )));
        }
        let last = (steps - 1) as f64;
        let points = (0..steps)
            .map(|i| {
                let value = if i + 1 == steps {
                    hi
                } else {
                    lo + (hi - lo) * (i as f64 / last)
                };
                variable
                    .apply(&base, value)
                    .map(|p| (value, p))
                    .map_err(|source| Error::InvalidGridPoint {
                        variable: variable.name(),
                        value,
                        source: Box::new(source),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { points, variable })
    }

    pub fn variable(&self) -> SweepVariable {
        self.variable
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|(v, _)| *v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub params: CycleParams,
    pub result: CycleResult,
    pub report: RegimeReport,
}

/// Evaluates every grid point. Rows are computed in parallel and returned in
/// ascending grid order.
pub fn run_sweep(spec: &SweepSpec) -> Vec<SweepRow> {
    spec.points
        .par_iter()
        .map(|&(value, params)| {
            let result = run_cycle(&params);
            let report = classify(&params, &result);
            SweepRow {
                value,
                params,
                result,
                report,
            }
        })
        .collect()
}

/// Writes rows in the sweep CSV format: LF line endings, shortest
/// round-trip float representation, empty fields for undefined values.
pub fn write_csv<W: Write>(rows: &[SweepRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for row in rows {
        let r = &row.result;
        let fields = [
            num(row.value),
            num(r.heat_hot),
            num(r.heat_cold),
            num(r.work),
            opt(r.eta),
            num(r.eta0),
            opt(r.bound),
            num(r.eta_carnot),
            num(r.leak),
            num(r.spin_heat_hot),
            num(r.spin_heat_cold),
            opt(r.t1_local),
            opt(r.t2_local),
            row.report.is_engine.to_string(),
            row.report.beats_uncoupled.to_string(),
            row.report.local_counterflow.to_string(),
        ];
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

fn num(x: f64) -> String {
    // Debug formatting is the shortest string that parses back to `x`.
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:?}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Width below which crossover bisection stops.
pub const CROSSOVER_TOLERANCE: f64 = 1e-9;

/// Outcome of [`find_crossover`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Crossover {
    Found {
        /// Midpoint of the final bracket.
        coupling: f64,
        /// Final bracket: `η > η0` at the lower end, not at the upper end.
        bracket: (f64, f64),
        iterations: usize,
    },
    NotFound {
        reason: &'static str,
    },
}

impl Crossover {
    pub fn coupling(&self) -> Option<f64> {
        match self {
            Crossover::Found { coupling, .. } => Some(*coupling),
            Crossover::NotFound { .. } => None,
        }
    }
}

/// Locates the coupling `J*` beyond which the coupled efficiency falls back
/// below the uncoupled value `1 − B2/B1`. The coupling in `params` is ignored.
///
/// Since `η > η0` requires `B1 > 4J`, the root lies in `(0, B1/4)`. The
/// bracket is found by scanning geometrically towards both ends of that
/// interval, `J = (B1/4)·2^−k` and `J = (B1/4)(1 − 2^−k)` for `k = 1..=40`,
/// then refined by bisection. Points where `η` is undefined count as not
/// above `η0`.
pub fn find_crossover(params: &CycleParams) -> Crossover {
    if params.field_case() != FieldCase::FieldDecrease {
        return Crossover::NotFound {
            reason: "requires B1 > B2",
        };
    }
    let uncoupled = match params.with_coupling(0.0) {
        Ok(p) => p,
        Err(_) => unreachable!("J = 0 is always valid"),
    };
    if !classify(&uncoupled, &run_cycle(&uncoupled)).is_engine {
        return Crossover::NotFound {
            reason: "uncoupled configuration is not an engine",
        };
    }

    let quarter = params.b1() / 4.0;
    let scan = (1..=40)
        .rev()
        .map(|k| quarter * 0.5f64.powi(k))
        .chain((2..=40).map(|k| quarter * (1.0 - 0.5f64.powi(k))));

    let mut above: Option<f64> = None;
    let mut bracket = None;
    for j in scan {
        match (beats_uncoupled_at(params, j), above) {
            (true, _) => above = Some(j),
            (false, Some(lo)) => {
                bracket = Some((lo, j));
                break;
            }
            (false, None) => {}
        }
    }
    let Some((mut lo, mut hi)) = bracket else {
        return Crossover::NotFound {
            reason: if above.is_some() {
                "efficiency stays above the uncoupled value up to B1/4"
            } else {
                "efficiency never exceeds the uncoupled value"
            },
        };
    };

    let mut iterations = 0;
    while hi - lo >= CROSSOVER_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if beats_uncoupled_at(params, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Crossover::Found {
        coupling: 0.5 * (lo + hi),
        bracket: (lo, hi),
        iterations,
    }
}

/// `η(J) − η0`, or `None` where the cycle is not an engine.
pub fn efficiency_gap(params: &CycleParams, j: f64) -> Option<f64> {
    let p = params.with_coupling(j).ok()?;
    let r = run_cycle(&p);
    if !classify(&p, &r).is_engine {
        return None;
    }
    r.eta.map(|eta| eta - r.eta0)
}

fn beats_uncoupled_at(params: &CycleParams, j: f64) -> bool {
    efficiency_gap(params, j).is_some_and(|g| g > 0.0)
}
