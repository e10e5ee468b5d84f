//! Deterministic local-hidden-variable strategies for the three-setting Bell
//! test, enumerated exhaustively.
//!
//! A strategy fixes the `±1` answer of each wing for each of the settings
//! `a`, `b`, `c` (2⁶ = 64 strategies). The test premise ties the wings
//! together: identical answers at equal settings, or opposite answers for the
//! anticorrelated variant. Only the 8 strategies meeting the premise can
//! reproduce perfect (anti)correlation, and none of those violates the
//! inequality.

use serde::{Deserialize, Serialize};

use super::bell::spin_probability;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BellForm {
    /// `1 − E(b,c) ≥ |E(a,b) − E(a,c)|`, for pairs with equal outcomes at
    /// equal settings.
    Identical,
    /// `1 + E(b,c) ≥ |E(a,b) − E(a,c)|`, for opposite outcomes at equal
    /// settings.
    Anticorrelated,
}

/// How far the inequality is satisfied; negative means violated.
pub fn evaluate_bell(e_ab: f64, e_ac: f64, e_bc: f64, form: BellForm) -> f64 {
    let lhs = match form {
        BellForm::Identical => 1.0 - e_bc,
        BellForm::Anticorrelated => 1.0 + e_bc,
    };
    lhs - (e_ab - e_ac).abs()
}

/// Correlation `cos 2Δ` of the entangled-pair model for equal-outcome pairs.
pub fn model_correlation(delta_degrees: f64) -> f64 {
    2.0 * spin_probability(delta_degrees) - 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Strategy {
    /// Wing-a answers at settings a, b, c.
    pub a: [i8; 3],
    /// Wing-b answers at settings a, b, c.
    pub b: [i8; 3],
}

impl Strategy {
    /// All 64 strategies.
    pub fn all() -> Vec<Strategy> {
        let sign = |bits: u32, k: u32| if bits >> k & 1 == 1 { -1 } else { 1 };
        (0..64u32)
            .map(|bits| Strategy {
                a: [sign(bits, 0), sign(bits, 1), sign(bits, 2)],
                b: [sign(bits, 3), sign(bits, 4), sign(bits, 5)],
            })
            .collect()
    }

    /// Product of the wing-a answer at setting `x` and wing-b at `y`.
    pub fn correlation(&self, x: usize, y: usize) -> f64 {
        f64::from(self.a[x] * self.b[y])
    }

    pub fn admissible(&self, form: BellForm) -> bool {
        match form {
            BellForm::Identical => self.a == self.b,
            BellForm::Anticorrelated => self.a == self.b.map(|v| -v),
        }
    }

    /// `|E(a,b) − E(a,c)| − (1 ∓ E(b,c))`: positive values violate.
    pub fn functional(&self, form: BellForm) -> f64 {
        0.0 - evaluate_bell(self.correlation(0, 1), self.correlation(0, 2), self.correlation(1, 2), form)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LhvReport {
    pub form: BellForm,
    pub angles: [f64; 3],
    pub strategies: usize,
    pub admissible: usize,
    /// Largest functional among admissible strategies (0 = tight bound).
    pub admissible_max: f64,
    /// Admissible strategies reaching equality.
    pub equality_cases: usize,
    /// Largest functional over all 64, premise ignored.
    pub unconstrained_max: f64,
    /// Margin the pair model predicts at `angles`.
    pub model_margin: f64,
}

impl LhvReport {
    pub fn admissible_violations(&self) -> bool {
        self.admissible_max > 0.0
    }
}

pub fn lhv_oracle(angles: [f64; 3], form: BellForm) -> LhvReport {
    let all = Strategy::all();
    let admissible: Vec<&Strategy> = all.iter().filter(|s| s.admissible(form)).collect();
    let fmax = |it: &mut dyn Iterator<Item = f64>| it.fold(f64::NEG_INFINITY, f64::max);
    let admissible_max = fmax(&mut admissible.iter().map(|s| s.functional(form)));
    let equality_cases = admissible.iter().filter(|s| s.functional(form) == 0.0).count();
    let unconstrained_max = fmax(&mut all.iter().map(|s| s.functional(form)));
    let sign = match form {
        BellForm::Identical => 1.0,
        BellForm::Anticorrelated => -1.0,
    };
    let e = |x: f64, y: f64| sign * model_correlation(y - x);
    let [a, b, c] = angles;
    LhvReport {
        form,
        angles,
        strategies: all.len(),
        admissible: admissible.len(),
        admissible_max,
        equality_cases,
        unconstrained_max,
        model_margin: evaluate_bell(e(a, b), e(a, c), e(b, c), form),
    }
}
