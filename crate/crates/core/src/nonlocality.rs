//! Two-setting Bell functionals for qudits.
//!
//! All functionals act on 2x2-setting tables with setting indices 0 and 1
//! standing for the first and second measurement of each party.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::basis::MeasurementBasis;
use crate::correlations::{born_probabilities_pure, generalized_correlator, CorrelationTable};
use crate::error::{Error, Result};
use crate::linalg::{c64, cis, CVector, C64};
use crate::state::maximally_entangled;

/// Alice's phase offsets `theta_x`.
pub const THETA: [f64; 2] = [0.25, 0.75];
/// Bob's phase offsets `zeta_y`.
pub const ZETA: [f64; 2] = [0.5, 1.0];

/// Value of a Bell functional together with its reference bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellResult {
    pub value: f64,
    pub classical_bound: f64,
    pub tsirelson: f64,
    pub relative_violation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std: Option<f64>,
}

impl BellResult {
    fn new(value: f64, classical_bound: f64, tsirelson: f64) -> Self {
        let mut r = Self {
            value,
            classical_bound,
            tsirelson,
            relative_violation: None,
            std: None,
        };
        r.relative_violation = relative_violation(&r).ok();
        r
    }

    pub fn with_std(mut self, std: f64) -> Self {
        self.std = Some(std);
        self
    }
}

/// `(value - C) / (Q - C)`.
pub fn relative_violation(r: &BellResult) -> Result<f64> {
    let span = r.tsirelson - r.classical_bound;
    if !(span > 1e-12) {
        return Err(Error::DegenerateBounds);
    }
    Ok((r.value - r.classical_bound) / span)
}

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidDimension(format!("need d >= 2, got {d}")));
    }
    Ok(())
}

fn check_table(t: &CorrelationTable) -> Result<usize> {
    if t.settings() != (2, 2) {
        return Err(Error::InvalidTable(format!(
            "expected 2x2 settings, found {:?}",
            t.settings()
        )));
    }
    check_dim(t.d())?;
    Ok(t.d())
}

/// Optimal measurements: `|a>_x = sum_k e^{2 pi i k (a - theta_x)/d}|k>/sqrt d`
/// for Alice and `|b>_y = sum_k e^{2 pi i k (zeta_y - b)/d}|k>/sqrt d` for Bob.
pub fn satwap_bases(d: usize) -> Result<(Vec<MeasurementBasis>, Vec<MeasurementBasis>)> {
    check_dim(d)?;
    let norm = c64(1.0 / (d as f64).sqrt(), 0.0);
    let make = |sign: f64, offset: f64| {
        let vectors = (0..d)
            .map(|o| {
                CVector::from_iterator(
                    d,
                    (0..d).map(|k| {
                        cis(TAU * k as f64 * (sign * o as f64 + offset) / d as f64) * norm
                    }),
                )
            })
            .collect();
        MeasurementBasis::from_vectors(vectors)
    };
    let alice = THETA
        .iter()
        .map(|&t| make(1.0, -t))
        .collect::<Result<_>>()?;
    let bob = ZETA.iter().map(|&z| make(-1.0, z)).collect::<Result<_>>()?;
    Ok((alice, bob))
}

/// Exact table of `|psi+_d>` measured in the optimal bases.
pub fn ideal_table(d: usize) -> Result<CorrelationTable> {
    let (a, b) = satwap_bases(d)?;
    born_probabilities_pure(&maximally_entangled(d), &a, &b)
}

/// `[3 cot(pi/4d) - cot(3 pi/4d)] / 2 - 2`.
pub fn satwap_classical_bound(d: usize) -> f64 {
    let x = PI / (4.0 * d as f64);
    (3.0 / x.tan() - 1.0 / (3.0 * x).tan()) / 2.0 - 2.0
}

pub fn satwap_tsirelson(d: usize) -> f64 {
    2.0 * d as f64 - 2.0
}

/// Correlator form
/// `Re sum_l [a_l <A1^l B1^(d-l)> + a_l* w^l <A1^l B2^(d-l)>
///          + a_l <A2^l B2^(d-l)> + a_l* <A2^l B1^(d-l)>]`
/// with `a_l = w^((2l - d)/8) / sqrt 2`.
pub fn satwap_value(table: &CorrelationTable) -> Result<BellResult> {
    let d = check_table(table)?;
    let df = d as f64;
    let mut s = C64::new(0.0, 0.0);
    for l in 1..d {
        let a = cis(TAU * (2.0 * l as f64 - df) / (8.0 * df)) / 2f64.sqrt();
        let w_l = cis(TAU * l as f64 / df);
        let c = |x, y| generalized_correlator(table, x, y, l, d - l).map(|c| c.value);
        s += a * c(0, 0)? + a.conj() * w_l * c(0, 1)? + a * c(1, 1)? + a.conj() * c(1, 0)?;
    }
    Ok(BellResult::new(
        s.re,
        satwap_classical_bound(d),
        satwap_tsirelson(d),
    ))
}

/// `P(A_x = B_y + k) = sum_b p(b + k, b | x y)`.
fn p_a_eq_b_plus(t: &CorrelationTable, x: usize, y: usize, k: i64) -> f64 {
    let d = t.d() as i64;
    (0..d)
        .map(|b| t.p((b + k).rem_euclid(d) as usize, b as usize, x, y))
        .sum()
}

/// `P(B_y = A_x + k)`.
fn p_b_eq_a_plus(t: &CorrelationTable, x: usize, y: usize, k: i64) -> f64 {
    let d = t.d() as i64;
    (0..d)
        .map(|a| t.p(a as usize, (a + k).rem_euclid(d) as usize, x, y))
        .sum()
}

/// `sum_{k < floor(d/2)} (alpha_k P_k - beta_k Q_k)`.
fn probability_form<A, B>(t: &CorrelationTable, alpha: A, beta: B) -> f64
where
    A: Fn(usize) -> f64,
    B: Fn(usize) -> f64,
{
    let mut s = 0.0;
    for k in 0..t.d() / 2 {
        let ki = k as i64;
        let pk = p_a_eq_b_plus(t, 0, 0, ki)
            + p_b_eq_a_plus(t, 1, 0, ki)
            + p_a_eq_b_plus(t, 1, 1, ki)
            + p_b_eq_a_plus(t, 0, 1, ki + 1);
        let qk = p_a_eq_b_plus(t, 0, 0, -ki - 1)
            + p_b_eq_a_plus(t, 1, 0, -ki - 1)
            + p_a_eq_b_plus(t, 1, 1, -ki - 1)
            + p_b_eq_a_plus(t, 0, 1, -ki);
        s += alpha(k) * pk - beta(k) * qk;
    }
    s
}

/// SATWAP coefficient `g(k) = cot(pi (k + 1/4) / d)`.
pub fn satwap_g(d: usize, k: f64) -> f64 {
    1.0 / (PI * (k + 0.25) / d as f64).tan()
}

/// `(alpha_k, beta_k)` of the probability form.
pub fn satwap_alpha_beta(d: usize, k: usize) -> (f64, f64) {
    let df = d as f64;
    let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
    let t = (PI / (4.0 * df)).tan();
    (
        (satwap_g(d, k as f64) + sign * t) / (2.0 * df),
        (satwap_g(d, k as f64 + 0.5) - sign * t) / (2.0 * df),
    )
}

/// Probability form of the SATWAP functional. It relates to the correlator
/// form by `I = I_corr / d + w_d`, where `w_d` is the value on the flat table.
pub fn satwap_probability_form(table: &CorrelationTable) -> Result<f64> {
    let d = check_table(table)?;
    Ok(probability_form(
        table,
        |k| satwap_alpha_beta(d, k).0,
        |k| satwap_alpha_beta(d, k).1,
    ))
}

/// CGLMP functional: the probability form with `alpha_k = beta_k = 1 - 2k/(d-1)`.
///
/// The reported upper reference is the value reached by `|psi+_d>` in the
/// optimal bases.
pub fn cglmp_value(table: &CorrelationTable) -> Result<BellResult> {
    let d = check_table(table)?;
    let value = cglmp_raw(table, d);
    Ok(BellResult::new(value, 2.0, cglmp_max_entangled(d)?))
}

fn cglmp_raw(t: &CorrelationTable, d: usize) -> f64 {
    let c = |k: usize| 1.0 - 2.0 * k as f64 / (d as f64 - 1.0);
    probability_form(t, c, c)
}

/// CGLMP value of `|psi+_d>` in the optimal bases.
pub fn cglmp_max_entangled(d: usize) -> Result<f64> {
    Ok(cglmp_raw(&ideal_table(d)?, d))
}

/// Classical bound of the qutrit family `I_3(xi)`.
pub fn qutrit_classical_bound(xi: f64) -> f64 {
    if xi <= -1.0 {
        -4.0 * xi
    } else if xi <= 1.0 {
        3.0 - xi
    } else {
        2.0
    }
}

/// `I_3(xi) = P_0 - xi Q_0` on a qutrit table.
pub fn qutrit_family_value(table: &CorrelationTable, xi: f64) -> Result<BellResult> {
    if table.d() != 3 {
        return Err(Error::InvalidDimension(format!(
            "qutrit family needs d = 3, got {}",
            table.d()
        )));
    }
    check_table(table)?;
    let t = table;
    let p0 = p_a_eq_b_plus(t, 0, 0, 0)
        + p_a_eq_b_plus(t, 1, 1, 0)
        + p_a_eq_b_plus(t, 0, 1, -1)
        + p_a_eq_b_plus(t, 1, 0, 0);
    let q0 = p_a_eq_b_plus(t, 0, 0, -1)
        + p_a_eq_b_plus(t, 1, 1, -1)
        + p_a_eq_b_plus(t, 0, 1, 0)
        + p_a_eq_b_plus(t, 1, 0, 1);
    let value = p0 - xi * q0;
    let classical = qutrit_classical_bound(xi);
    let upper = qutrit_family_max(xi).map(|m| m.1).unwrap_or(classical);
    Ok(BellResult::new(value, classical, upper))
}

/// Optimal Schmidt coefficient `gamma_+` and the maximal value `I_max(xi)`
/// over states `|00> + gamma |11> + |22>`.
pub fn qutrit_family_max(xi: f64) -> Result<(f64, f64)> {
    if !(xi > -1.0) {
        return Err(Error::TrivialRegime(format!("xi = {xi} <= -1")));
    }
    let gamma = ((4.0 * xi * xi + 4.0 * xi + 25.0).sqrt() - 2.0 * xi - 1.0) / (2.0 * 3f64.sqrt());
    let i_max = (5.0 - 2.0 * xi + (25.0 + 4.0 * (xi + 1.0) * xi).sqrt()) / 3.0;
    Ok((gamma, i_max))
}

/// Largest value of `f` over all deterministic local strategies
/// `(a_0, a_1, b_0, b_1)`.
pub fn lhv_maximum<F>(d: usize, f: F) -> Result<f64>
where
    F: Fn(&CorrelationTable) -> Result<f64>,
{
    check_dim(d)?;
    let mut best = f64::NEG_INFINITY;
    let n = d * d * 4;
    for code in 0..d.pow(4) {
        let (a0, a1, b0, b1) = (
            code % d,
            code / d % d,
            code / (d * d) % d,
            code / (d * d * d),
        );
        let mut p = vec![0.0; n];
        for (x, a) in [a0, a1].into_iter().enumerate() {
            for (y, b) in [b0, b1].into_iter().enumerate() {
                p[((x * 2 + y) * d + a) * d + b] = 1.0;
            }
        }
        best = best.max(f(&CorrelationTable::new(d, 2, 2, p)?)?);
    }
    Ok(best)
}
