//! Scale function, speed density, the long-run law in the positive-recurrent
//! case, and the `q → 0` limit sequences `F_i`, `F̄_i`.
//!
//! Everything here is evaluated from explicit `q = 0` formulas. Tiny-`q`
//! evaluation of the resolvent machinery only appears in tests.

use crate::error::{check_finite, Error, Result};
use crate::model::ThresholdModel;
use crate::potential::{PiecewiseExpDensity, Segment, Term};

/// `∫₀^len e^{−k t} dt`, exact at `k = 0`.
pub(crate) fn exp_integral(k: f64, len: f64) -> f64 {
    if k == 0.0 {
        len
    } else {
        -(-k * len).exp_m1() / k
    }
}

/// `S(a_i) = Σ_{ℓ=1}^{i−1} 2μ_ℓ(a_{ℓ+1}−a_ℓ)/σ_ℓ²` for `i = 1..=n`
/// (index 0 unused and set to 0).
pub(crate) fn cumulative_exponents(model: &ThresholdModel) -> Vec<f64> {
    let n = model.n();
    let mut s = vec![0.0; n + 1];
    for i in 2..=n {
        s[i] = s[i - 1] + model.speed_slope(i - 1) * model.width(i - 1);
    }
    s
}

/// `S(z) = ∫_{a₁}^z 2b/σ²`.
pub fn speed_exponent(model: &ThresholdModel, z: f64) -> f64 {
    let i = model.regime_index(z);
    if i == 0 {
        model.speed_slope(0) * (z - model.a(1))
    } else {
        cumulative_exponents(model)[i] + model.speed_slope(i) * (z - model.a(i))
    }
}

/// `m(x) = e^{S(x)}/σ(x)²`.
pub fn speed_density(model: &ThresholdModel, x: f64) -> Result<f64> {
    check_finite("x", x)?;
    let v = speed_exponent(model, x).exp() / model.var(model.regime_index(x));
    if v.is_infinite() {
        return Err(Error::Overflow(format!("speed density at {x}")));
    }
    Ok(v)
}

/// `φ′(x) = e^{−S(x)}`.
pub fn scale_derivative(model: &ThresholdModel, x: f64) -> f64 {
    (-speed_exponent(model, x)).exp()
}

/// `φ(a_i)` for `i = 1..=n` (index 0 unused).
fn scale_at_thresholds(model: &ThresholdModel, s: &[f64]) -> Vec<f64> {
    let n = model.n();
    let mut phi = vec![0.0; n + 1];
    for i in 2..=n {
        phi[i] = phi[i - 1] + (-s[i - 1]).exp() * exp_integral(model.speed_slope(i - 1), model.width(i - 1));
    }
    phi
}

/// `φ(x) = ∫_{a₁}^x e^{−S(y)} dy`, so `φ(a₁) = 0`.
pub fn scale_function(model: &ThresholdModel, x: f64) -> Result<f64> {
    check_finite("x", x)?;
    let i = model.regime_index(x);
    if i == 0 {
        return Ok(-exp_integral(-model.speed_slope(0), model.a(1) - x));
    }
    let s = cumulative_exponents(model);
    let phi = scale_at_thresholds(model, &s);
    Ok(phi[i] + (-s[i]).exp() * exp_integral(model.speed_slope(i), x - model.a(i)))
}

/// `(φ(−∞), φ(+∞))`, either of which may be infinite.
pub fn scale_limits(model: &ThresholdModel) -> (f64, f64) {
    let n = model.n();
    let (k0, kn) = (model.speed_slope(0), model.speed_slope(n));
    let lo = if k0 < 0.0 { 1.0 / k0 } else { f64::NEG_INFINITY };
    let hi = if kn > 0.0 {
        let s = cumulative_exponents(model);
        let phi = scale_at_thresholds(model, &s);
        phi[n] + (-s[n]).exp() / kn
    } else {
        f64::INFINITY
    };
    (lo, hi)
}

fn positive_recurrent(model: &ThresholdModel) -> Result<()> {
    if !model.is_positive_recurrent() {
        return Err(Error::Precondition(
            "no stationary law for this model: the long-run law requires μ₀ > 0 and μ_n < 0".into(),
        ));
    }
    Ok(())
}

fn inv_nonzero(mu: f64) -> f64 {
    if mu != 0.0 {
        1.0 / mu
    } else {
        0.0
    }
}

/// `F̄₁`, equal to `2∫m`.
pub fn normalizer_fbar1(model: &ThresholdModel) -> Result<f64> {
    positive_recurrent(model)?;
    let n = model.n();
    let mu = model.drifts();
    let s = cumulative_exponents(model);
    let mut total = 0.0;
    for k in 1..=n {
        let mut bracket = inv_nonzero(mu[k - 1]) - inv_nonzero(mu[k]);
        if mu[k] == 0.0 {
            bracket += 2.0 * model.width(k) / model.var(k);
        }
        total += s[k].exp() * bracket;
    }
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::NumericInstability(format!("normalizer evaluated to {total}")));
    }
    Ok(total)
}

/// The stationary law `2m(z)/F̄₁` as explicit exponential segments.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryLaw {
    pub fbar1: f64,
    /// `S(a_i)`, `i = 1..=n`; entry 0 is 0.
    pub cumulative_exponents: Vec<f64>,
    /// Probability of each regime.
    pub regime_masses: Vec<f64>,
    pub density: PiecewiseExpDensity,
}

impl StationaryLaw {
    pub fn new(model: &ThresholdModel) -> Result<Self> {
        let fbar1 = normalizer_fbar1(model)?;
        let n = model.n();
        let s = cumulative_exponents(model);
        let mut segments = Vec::with_capacity(n + 1);
        let mut masses = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let (left, right, reference) = match i {
                0 => (f64::NEG_INFINITY, model.a(1), model.a(1)),
                _ if i == n => (model.a(n), f64::INFINITY, model.a(n)),
                _ => (model.a(i), model.a(i + 1), model.a(i)),
            };
            let amp = 2.0 * s[i.max(1)].exp() / (model.var(i) * fbar1);
            let seg = Segment { left, right, terms: vec![Term { amplitude: amp, rate: model.speed_slope(i), reference }] };
            let mass = seg.integral()?;
            if !(mass > 0.0) {
                return Err(Error::NumericInstability(format!("regime {i} has stationary mass {mass}")));
            }
            masses.push(mass);
            segments.push(seg);
        }
        Ok(Self { fbar1, cumulative_exponents: s, regime_masses: masses, density: PiecewiseExpDensity::new(segments) })
    }

    pub fn density_at(&self, z: f64) -> f64 {
        self.density.eval(z)
    }
}

pub fn stationary_density(model: &ThresholdModel, z: f64) -> Result<f64> {
    check_finite("z", z)?;
    let fbar1 = normalizer_fbar1(model)?;
    Ok(2.0 * speed_density(model, z)? / fbar1)
}

/// `∫m` from the closed-form regime integrals, independent of `F̄₁`.
pub fn speed_total(model: &ThresholdModel) -> Result<f64> {
    positive_recurrent(model)?;
    let n = model.n();
    let s = cumulative_exponents(model);
    let mut total = 1.0 / (model.speed_slope(0) * model.var(0));
    for i in 1..n {
        total += s[i].exp() / model.var(i) * exp_integral(-model.speed_slope(i), model.width(i));
    }
    total += -s[n].exp() / (model.speed_slope(n) * model.var(n));
    Ok(total)
}

/// `F_1..F_n` and `F̄_1..F̄_n`, each available only under its drift-sign
/// condition.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitSequences {
    pub f: Result<Vec<f64>>,
    pub fbar: Result<Vec<f64>>,
}

pub fn limit_sequences(model: &ThresholdModel) -> LimitSequences {
    LimitSequences { f: limit_f(model), fbar: limit_fbar(model) }
}

/// `F_i`; needs `μ₀ > 0`.
pub fn limit_f(model: &ThresholdModel) -> Result<Vec<f64>> {
    let mu = model.drifts();
    if !(mu[0] > 0.0) {
        return Err(Error::Precondition("the F sequence requires μ₀ > 0".into()));
    }
    let n = model.n();
    let mut f = vec![0.0; n];
    f[0] = 1.0 / mu[0] - inv_nonzero(mu[1]);
    for i in 2..=n {
        let (w, s2) = (model.width(i - 1), model.var(i - 1));
        let mut v = inv_nonzero(mu[i - 1]) - inv_nonzero(mu[i]);
        if mu[i - 1] == 0.0 {
            v += 2.0 * w / s2;
        }
        v += (-2.0 * mu[i - 1] * w / s2).exp() * f[i - 2];
        f[i - 1] = v;
    }
    Ok(f)
}

/// `F̄_i`; needs `μ_n < 0`.
pub fn limit_fbar(model: &ThresholdModel) -> Result<Vec<f64>> {
    let mu = model.drifts();
    let n = model.n();
    if !(mu[n] < 0.0) {
        return Err(Error::Precondition("the F̄ sequence requires μ_n < 0".into()));
    }
    let mut g = vec![0.0; n];
    g[n - 1] = inv_nonzero(mu[n - 1]) - 1.0 / mu[n];
    for i in (1..n).rev() {
        let (w, s2) = (model.width(i), model.var(i));
        let mut v = inv_nonzero(mu[i - 1]) - inv_nonzero(mu[i]);
        if mu[i] == 0.0 {
            v += 2.0 * w / s2;
        }
        v += (2.0 * mu[i] * w / s2).exp() * g[i];
        g[i - 1] = v;
    }
    Ok(g)
}

/// `lim_{q→0} c_i⁺` for `μ₀ > 0`: 1, ½, 0 as `μ_i` is negative, zero,
/// positive.
pub fn c_plus_limits(model: &ThresholdModel) -> Result<Vec<f64>> {
    if !(model.drifts()[0] > 0.0) {
        return Err(Error::Precondition("the limit of c⁺ requires μ₀ > 0".into()));
    }
    Ok(model.drifts()[1..].iter().map(|&m| sign_limit(-m)).collect())
}

/// `lim_{q→0} c_i⁻` for `μ_n < 0`: 0, ½, 1 as `μ_{i−1}` is negative, zero,
/// positive.
pub fn c_minus_limits(model: &ThresholdModel) -> Result<Vec<f64>> {
    let n = model.n();
    if !(model.drifts()[n] < 0.0) {
        return Err(Error::Precondition("this limit of c⁻ requires μ_n < 0".into()));
    }
    Ok(model.drifts()[..n].iter().map(|&m| sign_limit(m)).collect())
}

fn sign_limit(m: f64) -> f64 {
    if m > 0.0 {
        1.0
    } else if m < 0.0 {
        0.0
    } else {
        0.5
    }
}

/// The combination of `c_i⁺` whose ratio to `q` tends to `F_i`.
pub fn scaled_plus_deviation(model: &ThresholdModel, q: f64, i: usize, c: f64, l: f64) -> f64 {
    let target = sign_limit(-model.drifts()[i]);
    2.0 * l * (target - c) / q
}

/// The combination of `c_i⁻` whose ratio to `q` tends to `F̄_i`.
pub fn scaled_minus_deviation(model: &ThresholdModel, q: f64, i: usize, c: f64, l: f64) -> f64 {
    let target = sign_limit(model.drifts()[i - 1]);
    2.0 * l * (target - c) / q
}
