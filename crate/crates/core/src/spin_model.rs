//! Closed-form physics of two spin-1/2 particles with isotropic Heisenberg
//! exchange in a uniform field along `z`.
//!
//! The Hamiltonian is `H = 2J σ¹·σ² + B(σ¹_z + σ²_z)` with `k_B = 1`. Its
//! four levels, in the fixed order used everywhere in this crate, are
//!
//! | index | eigenstate | energy   |
//! |-------|------------|----------|
//! | 1     | singlet ψ− | −6J      |
//! | 2     | \|00⟩      | 2J − 2B  |
//! | 3     | triplet ψ+ | 2J       |
//! | 4     | \|11⟩      | 2J + 2B  |
//!
//! Matrices are written in the natural basis `{|11⟩, |10⟩, |01⟩, |00⟩}`,
//! where `|0⟩` is the spin aligned with the field.
//!
//! Besides the closed forms, [`gibbs_state_oracle`] builds the thermal state
//! by numerically diagonalizing the explicit 4×4 Hamiltonian. It shares no
//! code with [`thermal_probs`] and exists to cross-check it.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2};

use nalgebra::{Matrix2, Matrix4, SymmetricEigen, Vector4};

use crate::error::{require_finite, Error, Result};

/// A point `(J, B, T)` of the model: exchange constant, field and bath
/// temperature, all in energy units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelPoint {
    j: f64,
    b: f64,
    t: f64,
}

impl ModelPoint {
    /// Validates `J ≥ 0`, `B ≥ 0` and `T > 0`, all finite.
    pub fn new(j: f64, b: f64, t: f64) -> Result<Self> {
        let j = require_finite("J", j)?;
        let b = require_finite("B", b)?;
        let t = require_finite("T", t)?;
        if j < 0.0 {
            return Err(Error::Domain {
                param: "J",
                constraint: "J >= 0 (antiferromagnetic coupling)",
                value: j,
            });
        }
        if b < 0.0 {
            return Err(Error::Domain {
                param: "B",
                constraint: "B >= 0",
                value: b,
            });
        }
        if t <= 0.0 {
            return Err(Error::Domain {
                param: "T",
                constraint: "T > 0",
                value: t,
            });
        }
        Ok(Self { j, b, t })
    }

    pub fn coupling(&self) -> f64 {
        self.j
    }

    pub fn field(&self) -> f64 {
        self.b
    }

    pub fn temperature(&self) -> f64 {
        self.t
    }
}

/// The four energy eigenvalues, in the order singlet, |00⟩, triplet, |11⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spectrum {
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub e4: f64,
}

impl Spectrum {
    pub fn levels(&self) -> [f64; 4] {
        [self.e1, self.e2, self.e3, self.e4]
    }
}

pub fn spectrum(point: &ModelPoint) -> Spectrum {
    let (j, b) = (point.j, point.b);
    Spectrum {
        e1: -6.0 * j,
        e2: 2.0 * j - 2.0 * b,
        e3: 2.0 * j,
        e4: 2.0 * j + 2.0 * b,
    }
}

/// Occupation probabilities of the four levels, indexed like [`Spectrum`].
///
/// The Boltzmann exponents are kept alongside the probabilities
/// (`ln p_i = exponent_i − ln_norm`) so that ratios and differences of
/// populations stay accurate when some populations underflow or when two
/// exponents nearly coincide.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelProbabilities {
    p: [f64; 4],
    exponents: [f64; 4],
    ln_norm: f64,
}

/// Tolerance on `Σ p_i = 1` for externally supplied probabilities.
const NORMALIZATION_TOLERANCE: f64 = 1e-12;

impl LevelProbabilities {
    /// Wraps an explicit distribution. Entries must lie in `[0, 1]` and sum to
    /// one within `1e-12`.
    pub fn from_probabilities(p: [f64; 4]) -> Result<Self> {
        if let Some(bad) = p.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::InvalidProbabilities(format!(
                "entry {bad} outside [0, 1]"
            )));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidProbabilities(format!(
                "entries sum to {sum}, not 1"
            )));
        }
        Ok(Self {
            p,
            exponents: p.map(f64::ln),
            ln_norm: 0.0,
        })
    }

    /// Normalizes Boltzmann exponents with a max shift, so no exponent
    /// overflows whatever the ratios `J/T` and `B/T`.
    fn from_exponents(exponents: [f64; 4]) -> Self {
        let max = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights = exponents.map(|x| (x - max).exp());
        let total: f64 = weights.iter().sum();
        Self {
            p: weights.map(|w| w / total),
            exponents,
            ln_norm: max + total.ln(),
        }
    }

    pub fn p1(&self) -> f64 {
        self.p[0]
    }

    pub fn p2(&self) -> f64 {
        self.p[1]
    }

    pub fn p3(&self) -> f64 {
        self.p[2]
    }

    pub fn p4(&self) -> f64 {
        self.p[3]
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.p
    }

    /// `ln p_i`, finite whenever the level has nonzero Boltzmann weight.
    pub fn ln_array(&self) -> [f64; 4] {
        self.exponents.map(|x| x - self.ln_norm)
    }

    /// `ln(p_a / p_b)` for zero-based level indices, free of the
    /// normalization.
    pub fn ln_ratio(&self, a: usize, b: usize) -> f64 {
        self.exponents[a] - self.exponents[b]
    }

    /// `1 − p_k` summed from the other three levels, exact to rounding even
    /// when `p_k` is close to one.
    pub fn complement(&self, k: usize) -> f64 {
        (0..4).filter(|&i| i != k).map(|i| self.p[i]).sum()
    }

    pub fn sum(&self) -> f64 {
        self.p.iter().sum()
    }
}

/// `to.p_k − from.p_k` for a zero-based level `k`. When the level holds most
/// of both distributions the difference is taken between the complements,
/// which carry full relative precision.
pub fn population_shift(from: &LevelProbabilities, to: &LevelProbabilities, k: usize) -> f64 {
    if from.p[k] > 0.5 && to.p[k] > 0.5 {
        from.complement(k) - to.complement(k)
    } else {
        to.p[k] - from.p[k]
    }
}

/// Gibbs occupation probabilities at `(J, B, T)`:
/// `p ∝ (e^{8J/T}, e^{2B/T}, 1, e^{−2B/T})`.
pub fn thermal_probs(point: &ModelPoint) -> LevelProbabilities {
    let (j, b, t) = (point.j, point.b, point.t);
    LevelProbabilities::from_exponents([8.0 * j / t, 2.0 * b / t, 0.0, -2.0 * b / t])
}

/// A real symmetric two-spin density matrix in the natural basis
/// `{|11⟩, |10⟩, |01⟩, |00⟩}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoSpinState(Matrix4<f64>);

impl TwoSpinState {
    /// The diagonal-in-eigenbasis state `Σ p_i |i⟩⟨i|` written out in the
    /// natural basis.
    pub fn from_probabilities(probs: &LevelProbabilities) -> Self {
        let [p1, p2, p3, p4] = probs.p;
        let mut rho = Matrix4::zeros();
        rho[(0, 0)] = p4;
        rho[(1, 1)] = 0.5 * (p1 + p3);
        rho[(2, 2)] = 0.5 * (p1 + p3);
        rho[(1, 2)] = 0.5 * (p3 - p1);
        rho[(2, 1)] = 0.5 * (p3 - p1);
        rho[(3, 3)] = p2;
        Self(rho)
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// `⟨v|ρ|v⟩` for a normalized vector `v`.
    pub fn population(&self, v: &Vector4<f64>) -> f64 {
        v.dot(&(self.0 * v))
    }

    /// Populations of the four Hamiltonian eigenvectors, in [`Spectrum`]
    /// order. Degenerate levels are resolved by the fixed eigenvectors, so
    /// the result is basis-independent.
    pub fn level_populations(&self) -> [f64; 4] {
        eigenbasis().map(|v| self.population(&v))
    }

    /// Reduced state of the first spin (trace over the second), in the local
    /// basis `{|1⟩, |0⟩}`.
    pub fn reduce_to_first(&self) -> Matrix2<f64> {
        let r = &self.0;
        Matrix2::new(
            r[(0, 0)] + r[(1, 1)],
            r[(0, 2)] + r[(1, 3)],
            r[(2, 0)] + r[(3, 1)],
            r[(2, 2)] + r[(3, 3)],
        )
    }

    /// Reduced state of the second spin (trace over the first).
    pub fn reduce_to_second(&self) -> Matrix2<f64> {
        let r = &self.0;
        Matrix2::new(
            r[(0, 0)] + r[(2, 2)],
            r[(0, 1)] + r[(2, 3)],
            r[(1, 0)] + r[(3, 2)],
            r[(1, 1)] + r[(3, 3)],
        )
    }
}

/// Eigenvectors of the Hamiltonian in [`Spectrum`] order: ψ−, |00⟩, ψ+, |11⟩.
fn eigenbasis() -> [Vector4<f64>; 4] {
    [
        Vector4::new(0.0, FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0),
        Vector4::new(0.0, 0.0, 0.0, 1.0),
        Vector4::new(0.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0),
        Vector4::new(1.0, 0.0, 0.0, 0.0),
    ]
}

/// The Hamiltonian as an explicit matrix in the natural basis.
pub fn hamiltonian(point: &ModelPoint) -> Matrix4<f64> {
    let (j, b) = (point.j, point.b);
    let mut h = Matrix4::zeros();
    h[(0, 0)] = 2.0 * j + 2.0 * b;
    h[(1, 1)] = -2.0 * j;
    h[(2, 2)] = -2.0 * j;
    h[(3, 3)] = 2.0 * j - 2.0 * b;
    h[(1, 2)] = 4.0 * j;
    h[(2, 1)] = 4.0 * j;
    h
}

/// Thermal state `exp(−H/T) / Tr exp(−H/T)` from a numerical
/// eigendecomposition of [`hamiltonian`].
pub fn gibbs_state_oracle(point: &ModelPoint) -> TwoSpinState {
    let eig = SymmetricEigen::new(hamiltonian(point));
    let ground = eig.eigenvalues.min();
    let weights = eig.eigenvalues.map(|e| (-(e - ground) / point.t).exp());
    let total = weights.sum();
    let rho = eig.eigenvectors
        * Matrix4::from_diagonal(&(weights / total))
        * eig.eigenvectors.transpose();
    TwoSpinState(rho.symmetric_part())
}

/// Diagonal reduced state of one spin in the local basis `{|1⟩, |0⟩}`.
/// `diag_up` is the population of `|1⟩` (anti-aligned with the field, local
/// energy `+B`), `diag_down` that of `|0⟩` (energy `−B`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleSpinState {
    pub diag_up: f64,
    pub diag_down: f64,
}

impl SingleSpinState {
    pub fn matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.diag_up, 0.0, 0.0, self.diag_down)
    }
}

/// Reduced state of either spin; both spins see the same field and the
/// global state is exchange-symmetric, so the two reductions coincide.
pub fn reduced_state(probs: &LevelProbabilities) -> SingleSpinState {
    let polarization = 0.5 * (probs.p2() - probs.p4());
    SingleSpinState {
        diag_up: 0.5 - polarization,
        diag_down: 0.5 + polarization,
    }
}

/// Effective temperature of one spin: the temperature of a two-level Gibbs
/// state with splitting `2B` and the same populations as the reduced state,
/// `2B / ln[2/(1 + p4 − p2) − 1]`.
pub fn local_temperature(b: f64, probs: &LevelProbabilities) -> Result<f64> {
    if !(b.is_finite() && b > 0.0) {
        return Err(Error::UndefinedLocalTemperature("requires field B > 0"));
    }
    if probs.exponents[1] == probs.exponents[3] {
        return Err(Error::UndefinedLocalTemperature(
            "spin is unpolarized (p2 = p4)",
        ));
    }
    let log_ratio = local_log_population_ratio(probs);
    if log_ratio.is_nan() {
        return Err(Error::UndefinedLocalTemperature(
            "local populations are undefined",
        ));
    }
    // A polarization below f64 resolution saturates to an infinite
    // temperature rather than an error.
    Ok(2.0 * b / log_ratio)
}

/// `ln(diag_down / diag_up)` of the reduced state.
///
/// With `s = (p1 + p3)/2`, `diag_down = p2 + s` and `diag_up = p4 + s`, all
/// handled through the Boltzmann exponents. Large ratios are taken directly
/// in the log domain; near-unit ratios go through `ln_1p` of
/// `(p2 − p4)/diag_up`, with `p2 − p4` formed from the exact exponent gap.
fn local_log_population_ratio(probs: &LevelProbabilities) -> f64 {
    let [x1, x2, x3, x4] = probs.exponents;
    let ln_shared = log_add_exp(x1, x3) - LN_2;
    let ln_down = log_add_exp(x2, ln_shared);
    let ln_up = log_add_exp(x4, ln_shared);
    let direct = ln_down - ln_up;
    if direct.abs() > 0.5 {
        return direct;
    }
    let (hi, lo, sign) = if x2 > x4 {
        (x2, x4, 1.0)
    } else {
        (x4, x2, -1.0)
    };
    let ln_gap = hi + (-(lo - hi).exp_m1()).ln();
    (sign * (ln_gap - ln_up).exp()).ln_1p()
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(j: f64, b: f64, t: f64) -> ModelPoint {
        ModelPoint::new(j, b, t).unwrap()
    }

    #[test]
    fn spectrum_listed_values() {
        assert_eq!(
            spectrum(&point(1.0, 2.0, 1.0)).levels(),
            [-6.0, -2.0, 2.0, 6.0]
        );
        assert_eq!(
            spectrum(&point(0.0, 4.0, 1.0)).levels(),
            [0.0, -8.0, 0.0, 8.0]
        );
        assert_eq!(
            spectrum(&point(0.5, 0.0, 1.0)).levels(),
            [-3.0, 1.0, 1.0, 1.0]
        );
    }

    #[test]
    fn rejects_out_of_domain_points() {
        assert!(matches!(
            ModelPoint::new(-0.1, 1.0, 1.0),
            Err(Error::Domain { param: "J", .. })
        ));
        assert!(matches!(
            ModelPoint::new(0.1, -1.0, 1.0),
            Err(Error::Domain { param: "B", .. })
        ));
        assert!(matches!(
            ModelPoint::new(0.1, 1.0, 0.0),
            Err(Error::Domain { param: "T", .. })
        ));
        assert!(ModelPoint::new(0.1, f64::NAN, 1.0).is_err());
        assert!(ModelPoint::new(0.1, 1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn degenerate_point_is_uniform() {
        let p = thermal_probs(&point(0.0, 0.0, 1.0));
        assert_eq!(p.as_array(), [0.25; 4]);
    }

    #[test]
    fn infinite_temperature_limit() {
        let p = thermal_probs(&point(0.0, 1.0, 1e9));
        for x in p.as_array() {
            assert!((x - 0.25).abs() < 1e-8);
        }
    }

    #[test]
    fn no_overflow_for_extreme_coupling() {
        // 8J/T = 1e4
        let p = thermal_probs(&point(1250.0, 3.0, 1.0));
        assert!((p.sum() - 1.0).abs() <= 1e-14);
        assert_eq!(p.p1(), 1.0);
        assert!(p.ln_array().iter().all(|x| x.is_finite()));
    }

    #[test]
    fn field_orders_magnetic_levels() {
        let p = thermal_probs(&point(0.7, 0.3, 2.0));
        assert!(p.p2() > p.p3() && p.p3() > p.p4());
    }

    #[test]
    fn product_state_diagonal_when_uncoupled() {
        let rho = gibbs_state_oracle(&point(0.0, 1.0, 1.0));
        let z = (-2.0f64).exp() + 2.0 + 2.0f64.exp();
        let expected = [(-2.0f64).exp() / z, 1.0 / z, 1.0 / z, 2.0f64.exp() / z];
        for (k, e) in expected.iter().enumerate() {
            assert!((rho.matrix()[(k, k)] - e).abs() < 1e-14);
        }
    }

    #[test]
    fn analytic_state_matches_block_structure() {
        let probs = thermal_probs(&point(0.3, 2.0, 0.7));
        let rho = TwoSpinState::from_probabilities(&probs);
        let m = rho.matrix();
        for r in 0..4 {
            for c in 0..4 {
                let structural = r == c || (r, c) == (1, 2) || (r, c) == (2, 1);
                if !structural {
                    assert_eq!(m[(r, c)], 0.0);
                }
            }
        }
        assert!((rho.trace() - 1.0).abs() < 1e-14);
        let populations = rho.level_populations();
        for (a, b) in populations.iter().zip(probs.as_array()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn reduced_state_examples() {
        let uniform = LevelProbabilities::from_probabilities([0.25; 4]).unwrap();
        assert_eq!(
            reduced_state(&uniform),
            SingleSpinState {
                diag_up: 0.5,
                diag_down: 0.5
            }
        );
        let polarized = LevelProbabilities::from_probabilities([0.2, 0.5, 0.2, 0.1]).unwrap();
        let s = reduced_state(&polarized);
        assert!((s.diag_up - 0.3).abs() < 1e-15);
        assert!((s.diag_down - 0.7).abs() < 1e-15);
    }

    #[test]
    fn rejects_malformed_probabilities() {
        assert!(LevelProbabilities::from_probabilities([0.5, 0.5, 0.5, -0.5]).is_err());
        assert!(LevelProbabilities::from_probabilities([0.5, 0.5, 0.5, 0.5]).is_err());
    }

    #[test]
    fn local_temperature_undefined_cases() {
        let p = thermal_probs(&point(0.2, 0.0, 1.0));
        assert!(matches!(
            local_temperature(0.0, &p),
            Err(Error::UndefinedLocalTemperature(_))
        ));
        let flat = LevelProbabilities::from_probabilities([0.4, 0.2, 0.2, 0.2]).unwrap();
        assert!(local_temperature(1.0, &flat).is_err());
    }

    #[test]
    fn local_temperature_equals_bath_when_uncoupled() {
        for &(b, t) in &[
            (4.0, 1.0),
            (3.0, 0.5),
            (1e-3, 10.0),
            (10.0, 0.05),
            (0.5, 7.0),
        ] {
            let tl = local_temperature(b, &thermal_probs(&point(0.0, b, t))).unwrap();
            assert!((tl - t).abs() <= 1e-10 * t, "B={b} T={t}: {tl}");
        }
    }

    #[test]
    fn local_temperature_rises_with_coupling() {
        let tl = local_temperature(4.0, &thermal_probs(&point(0.2, 4.0, 1.0))).unwrap();
        assert!(tl > 1.0);
    }

    #[test]
    fn local_temperature_inverts_two_level_gibbs() {
        let probs = thermal_probs(&point(0.4, 1.5, 0.8));
        let s = reduced_state(&probs);
        let tl = local_temperature(1.5, &probs).unwrap();
        let inverse = 2.0 * 1.5 / (s.diag_down / s.diag_up).ln();
        assert!((tl - inverse).abs() < 1e-12);
    }
}
