//! Closed-form necessary stability conditions and instability certificates.
//!
//! Each clause is evaluated from the agent parameters alone. A triggered clause
//! certifies that the periodic system is not linearly stable for large `N`;
//! no clause ever certifies stability.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{alphas_betas, Arrangement, Channel, FlockSpec};
use crate::spectral::diatomic_symbols;

/// Default absolute tolerance for "is zero" tests on condition values.
pub const DEFAULT_CONDITION_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConditionError {
    #[error("expected a {expected} spec, got {got}")]
    WrongArrangement { expected: Arrangement, got: Arrangement },
}

/// `D(a, b, c; t) = abc (e^{it} - 1) - (1+a)(1+b)(1+c)(e^{-it} - 1)`.
pub fn d_func(a: f64, b: f64, c: f64, t: f64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    (Complex64::from_polar(1.0, t) - one) * (a * b * c)
        - (Complex64::from_polar(1.0, -t) - one) * ((1.0 + a) * (1.0 + b) * (1.0 + c))
}

/// `dD/dt` at `t = 0`, which is `i [abc + (1+a)(1+b)(1+c)]`.
pub fn d_func_derivative_at_zero(a: f64, b: f64, c: f64) -> Complex64 {
    Complex64::new(0.0, a * b * c + (1.0 + a) * (1.0 + b) * (1.0 + c))
}

/// `E(a, b, c, d) = ab (1 + c + cd)`.
pub fn e_func(a: f64, b: f64, c: f64, d: f64) -> f64 {
    a * b * (1.0 + c + c * d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Overall {
    NecessaryConditionsHold,
    InstabilityCertified,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Clause {
    pub id: String,
    pub value: f64,
    pub triggered: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub arrangement: Arrangement,
    pub clauses: Vec<Clause>,
    /// Supporting quantities by name.
    pub values: BTreeMap<String, f64>,
    pub tol: f64,
    pub overall: Overall,
}

impl ConditionReport {
    fn new(arrangement: Arrangement, clauses: Vec<Clause>, values: BTreeMap<String, f64>, tol: f64) -> Self {
        let overall = if clauses.iter().any(|c| c.triggered) {
            Overall::InstabilityCertified
        } else {
            Overall::NecessaryConditionsHold
        };
        Self {
            arrangement,
            clauses,
            values,
            tol,
            overall,
        }
    }

    pub fn clause(&self, id: &str) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.id == id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn clause(id: &str, value: f64, triggered: bool) -> Clause {
    Clause {
        id: id.into(),
        value,
        triggered,
        note: None,
    }
}

/// `(sum beta, prod beta)` of the nearest-neighbor position weights.
fn triatomic_moments(spec: &FlockSpec) -> (f64, f64) {
    let ab = alphas_betas(spec);
    let betas: Vec<f64> = (0..3).map(|k| ab.beta(Channel::X, k, 1)).collect();
    (betas.iter().sum(), betas.iter().product())
}

fn diatomic_bracket(spec: &FlockSpec) -> f64 {
    let ab = alphas_betas(spec);
    let a = |k| ab.alpha(Channel::X, k, 1);
    let b = |k, j| ab.beta(Channel::X, k, j);
    a(1) * (b(0, 1) + 2.0 * b(0, 2)) + a(0) * (b(1, 1) + 2.0 * b(1, 2))
}

pub fn triatomic_conditions(spec: &FlockSpec, tol: f64) -> Result<ConditionReport, ConditionError> {
    if spec.arrangement() != Arrangement::TriatomicNN {
        return Err(ConditionError::WrongArrangement {
            expected: Arrangement::TriatomicNN,
            got: spec.arrangement(),
        });
    }
    let a = spec.agents();
    let g_prod = a[0].g_x * a[1].g_x * a[2].g_x;
    let any_zero_gain = a.iter().any(|x| x.g_x.abs() <= tol);
    let e_sum: f64 = (0..3)
        .map(|i| {
            let j = (i + 1) % 3;
            e_func(a[i].g_x, a[j].g_x, a[i].rho_x.get(1), a[j].rho_x.get(1))
        })
        .sum();
    let (sum_beta, prod_beta) = triatomic_moments(spec);
    let corrected = sum_beta + prod_beta;
    let clause_iii = g_prod * corrected;

    let mut values = BTreeMap::new();
    values.insert("g_x_product".into(), g_prod);
    values.insert("e_sum".into(), e_sum);
    values.insert("a2_at_zero".into(), -e_sum);
    values.insert("sum_beta".into(), sum_beta);
    values.insert("prod_beta".into(), prod_beta);
    values.insert("sum_plus_prod_beta".into(), corrected);

    let mut c1 = clause("i", g_prod, any_zero_gain);
    c1.note = Some("triggered when any position gain g_x vanishes".into());
    let mut c2 = clause("ii", e_sum, e_sum.abs() <= tol);
    c2.note = Some("triple zero eigenvalue at phi = 0 when the E-sum vanishes".into());
    let mut c3 = clause("iii", clause_iii, clause_iii.abs() > tol);
    c3.note = Some("g-product times (sum beta + prod beta); nonzero puts a root curve in the right half-plane".into());
    Ok(ConditionReport::new(
        Arrangement::TriatomicNN,
        vec![c1, c2, c3],
        values,
        tol,
    ))
}

pub fn diatomic_conditions(spec: &FlockSpec, tol: f64) -> Result<ConditionReport, ConditionError> {
    if spec.arrangement() != Arrangement::DiatomicNNN {
        return Err(ConditionError::WrongArrangement {
            expected: Arrangement::DiatomicNNN,
            got: spec.arrangement(),
        });
    }
    let a = spec.agents();
    let ab = alphas_betas(spec);
    let g_prod = a[0].g_x * a[1].g_x;
    let any_zero_gain = a.iter().any(|x| x.g_x.abs() <= tol);
    let x_sum = a[0].g_x * ab.alpha(Channel::X, 0, 1) + a[1].g_x * ab.alpha(Channel::X, 1, 1);
    let v_sum = a[0].g_v * ab.alpha(Channel::V, 0, 1) + a[1].g_v * ab.alpha(Channel::V, 1, 1);
    let bracket = diatomic_bracket(spec);
    let clause_iii = g_prod * bracket;

    // nu^2 coefficient at phi = 0 from the determinant expansion, which pairs
    // lambda_v^(1) with lambda_v^(2).
    let (_, mx1) = diatomic_symbols(spec, 0, Channel::X, 0.0);
    let (_, mx2) = diatomic_symbols(spec, 1, Channel::X, 0.0);
    let (lv1, mv1) = diatomic_symbols(spec, 0, Channel::V, 0.0);
    let (lv2, mv2) = diatomic_symbols(spec, 1, Channel::V, 0.0);
    let a2 = -(mx1 * a[0].g_x) - mx2 * a[1].g_x + (mv1 * mv2 - lv1 * lv2) * (a[0].g_v * a[1].g_v);

    let mut values = BTreeMap::new();
    values.insert("g_x_product".into(), g_prod);
    values.insert("g_alpha_x_sum".into(), x_sum);
    values.insert("g_alpha_v_sum".into(), v_sum);
    values.insert("moment_bracket".into(), bracket);
    values.insert("a2_at_zero".into(), a2.re);

    let mut c1 = clause("i", g_prod, any_zero_gain);
    c1.note = Some("triggered when g_x^(1) = 0 or g_x^(2) = 0; a zero gain factors nu out of a mode-matrix row".into());
    let mut c2x = clause("ii.x", x_sum, x_sum <= tol);
    c2x.note = Some("g_x^(1) alpha_x1^(1) + g_x^(2) alpha_x1^(2) <= 0".into());
    let mut c2v = clause("ii.v", v_sum, v_sum <= tol);
    c2v.note = Some("g_v^(1) alpha_v1^(1) + g_v^(2) alpha_v1^(2) <= 0".into());
    let mut c3 = clause("iii", clause_iii, clause_iii.abs() > tol);
    c3.note = Some("g-product times the alpha-weighted first moment of the betas".into());
    Ok(ConditionReport::new(
        Arrangement::DiatomicNNN,
        vec![c1, c2x, c2v, c3],
        values,
        tol,
    ))
}

/// Condition report for either arrangement.
pub fn conditions(spec: &FlockSpec, tol: f64) -> ConditionReport {
    match spec.arrangement() {
        Arrangement::TriatomicNN => triatomic_conditions(spec, tol),
        Arrangement::DiatomicNNN => diatomic_conditions(spec, tol),
    }
    .expect("dispatch matches arrangement")
}

/// The scalar whose vanishing is necessary for stability, without the
/// g-product prefactor: `sum beta + prod beta` (triatomic) or
/// `alpha^(2) (beta_1^(1) + 2 beta_2^(1)) + alpha^(1) (beta_1^(2) + 2 beta_2^(2))`
/// (diatomic).
pub fn necessary_condition_value(spec: &FlockSpec) -> f64 {
    match spec.arrangement() {
        Arrangement::TriatomicNN => {
            let (s, p) = triatomic_moments(spec);
            s + p
        }
        Arrangement::DiatomicNNN => diatomic_bracket(spec),
    }
}

/// Factor `k` with `d a_0/d phi (0) = i k * g_product * necessary_condition_value`.
pub fn derivative_factor(arrangement: Arrangement) -> f64 {
    match arrangement {
        Arrangement::TriatomicNN => 0.25,
        Arrangement::DiatomicNNN => -0.5,
    }
}
