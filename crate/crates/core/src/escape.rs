//! Escape probabilities in the transient case `μ₀ < 0 < μ_n`.
//!
//! Notation: `m_j = μ_j/σ_j²`, `w_j = a_{j+1} − a_j`, and
//! `κ_j = m_j` if `μ_j ≠ 0`, else 1. The backward recursion is
//!
//! ```text
//! A_n = 1, B_n = 0
//! A_i = (m_n/κ_i)·exp(Σ_{ℓ=i}^{n−1} m_ℓ w_ℓ)
//! B_i = (A_{i+1} + B_{i+1} − (κ_{i+1}/κ_i)A_{i+1} + 2κ_{i+1}w_i A_{i+1}·1{μ_i=0})·e^{−m_i w_i}
//! ```
//!
//! Plain arithmetic is used; a non-finite result is reported as overflow.

use crate::error::{check_finite, Error, Result};
use crate::model::ThresholdModel;

#[derive(Debug, Clone, PartialEq)]
pub struct EscapeCoefficients {
    /// `A_1..A_n`.
    pub a: Vec<f64>,
    /// `B_1..B_n`.
    pub b: Vec<f64>,
    m: Vec<f64>,
    kappa: Vec<f64>,
}

fn slopes(model: &ThresholdModel) -> (Vec<f64>, Vec<f64>) {
    let m: Vec<f64> = (0..=model.n()).map(|j| model.drifts()[j] / model.var(j)).collect();
    let kappa = m.iter().zip(model.drifts()).map(|(&mj, &mu)| if mu != 0.0 { mj } else { 1.0 }).collect();
    (m, kappa)
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow(format!(
            "{what} is not representable; rescale the state variable so that |μ|·width/σ² is moderate"
        )))
    }
}

pub fn escape_coefficients(model: &ThresholdModel) -> Result<EscapeCoefficients> {
    let n = model.n();
    if !(model.drifts()[n] > 0.0) {
        return Err(Error::Precondition("the escape recursion requires μ_n > 0".into()));
    }
    let (m, kappa) = slopes(model);
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    a[n - 1] = 1.0;
    let mut tail = 0.0;
    for i in (1..n).rev() {
        let w = model.width(i);
        tail += m[i] * w;
        a[i - 1] = finite(m[n] / kappa[i] * tail.exp(), "A coefficient")?;
        let (an, bn) = (a[i], b[i]);
        let mut v = an + bn - kappa[i + 1] / kappa[i] * an;
        if model.drifts()[i] == 0.0 {
            v += 2.0 * kappa[i + 1] * w * an;
        }
        b[i - 1] = finite(v * (-m[i] * w).exp(), "B coefficient")?;
    }
    for i in 0..n {
        if !(a[i] + b[i] > 0.0) {
            return Err(Error::NumericInstability(format!("A_{0} + B_{0} = {1} is not positive", i + 1, a[i] + b[i])));
        }
    }
    Ok(EscapeCoefficients { a, b, m, kappa })
}

fn transient(model: &ThresholdModel) -> Result<()> {
    if !model.is_two_sided_transient() {
        return Err(Error::Precondition(
            "process is not two-sided transient: escape probabilities require μ₀ < 0 and μ_n > 0".into(),
        ));
    }
    Ok(())
}

impl EscapeCoefficients {
    fn denominator(&self) -> f64 {
        (1.0 - self.kappa[1] / self.m[0]) * self.a[0] + self.b[0]
    }

    /// `(A_i(y), B_i(y))` for `y ∈ (a_{i−1}, a_i]`.
    pub fn initial_pair(&self, model: &ThresholdModel, i: usize, y: f64) -> (f64, f64) {
        let zero = model.drifts()[i - 1] == 0.0;
        let (ai, bi) = (self.a[i - 1], self.b[i - 1]);
        let d = model.a(i) - y;
        let e = self.m[i - 1] * d;
        if zero {
            (0.0, ai + bi + 2.0 * self.kappa[i] * d * ai)
        } else {
            let r = self.kappa[i] / self.m[i - 1];
            (r * ai * e.exp(), (ai + bi - r * ai) * (-e).exp())
        }
    }

    /// Probability of `lim X_t = −∞` from `y`.
    pub fn minus_infinity(&self, model: &ThresholdModel, y: f64) -> Result<f64> {
        check_finite("y", y)?;
        let n = model.n();
        let d = self.denominator();
        let i = model.regime_index(y) + 1;
        let mut head = 0.0;
        for l in 1..i.min(n) {
            head += self.m[l] * model.width(l);
        }
        let v = if i > n {
            (-head - 2.0 * self.m[n] * (y - model.a(n))).exp() / d
        } else {
            let (ay, by) = self.initial_pair(model, i, y);
            (ay + by) / d * (self.m[i - 1] * (model.a(i) - y) - head).exp()
        };
        finite(v, "escape probability").map(|p| p.clamp(0.0, 1.0))
    }
}

/// `P_y{lim X_t = −∞}`.
pub fn escape_to_minus_infinity(model: &ThresholdModel, y: f64) -> Result<f64> {
    transient(model)?;
    escape_coefficients(model)?.minus_infinity(model, y)
}

/// `P_y{lim X_t = +∞}`.
pub fn escape_to_plus_infinity(model: &ThresholdModel, y: f64) -> Result<f64> {
    Ok(1.0 - escape_to_minus_infinity(model, y)?)
}

/// Limit of `c_i⁻` as `q → 0` in the transient case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoefficientLimit {
    /// `c_i⁻` itself converges to this value.
    Value(f64),
    /// `c_i⁻` diverges (when `μ_{i−1} = 0`) and `l_{i−1}·c_i⁻` converges to
    /// this value.
    Scaled(f64),
}

/// `lim_{q→0} c_i⁻`, `i = 1..n`, for `μ_n > 0`.
pub fn c_minus_limits_transient(model: &ThresholdModel) -> Result<Vec<CoefficientLimit>> {
    let ec = escape_coefficients(model)?;
    let n = model.n();
    let mut out = Vec::with_capacity(n);
    for i in 1..=n {
        let frac = ec.a[i - 1] / (ec.a[i - 1] + ec.b[i - 1]);
        let mu = model.drifts()[i - 1];
        let lim = if mu == 0.0 {
            CoefficientLimit::Scaled(-ec.kappa[i] * frac)
        } else {
            let r = ec.kappa[i] / ec.m[i - 1] * frac;
            CoefficientLimit::Value(if mu > 0.0 { 1.0 - r } else { r })
        };
        out.push(lim);
    }
    Ok(out)
}
