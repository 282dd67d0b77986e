//! Spectral parameters and the increasing/decreasing fundamental solutions
//! `g⁺`, `g⁻` of `½σ²g″ + bg′ = qg`.
//!
//! Each solution is stored per regime as `b·[(1−c)e^{r₁u} + c·e^{r₂u}]` with
//! `u` measured from one threshold. Only `log b` is kept, so evaluation never
//! forms the raw amplitudes, which grow like `e^{l·(a_n − a₁)}`.

use std::fmt::Write as _;

use crate::error::{check_finite, check_rate, Error, Result};
use crate::model::ThresholdModel;

/// Per-regime `(l, δ⁻, δ⁺)` at rate `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralParams {
    pub q: f64,
    pub l: Vec<f64>,
    pub delta_minus: Vec<f64>,
    pub delta_plus: Vec<f64>,
}

/// `q ≥ 0`. The smaller of `δ±` is formed as `2q/(√(2qσ²+μ²) + |μ|)` so it
/// keeps full relative precision when `q` is tiny.
pub fn spectral_params(model: &ThresholdModel, q: f64) -> Result<SpectralParams> {
    if !(q.is_finite() && q >= 0.0) {
        return Err(Error::InvalidArgument(format!("rate q must be finite and >= 0, got {q}")));
    }
    let k = model.n() + 1;
    let mut out = SpectralParams {
        q,
        l: Vec::with_capacity(k),
        delta_minus: Vec::with_capacity(k),
        delta_plus: Vec::with_capacity(k),
    };
    for i in 0..k {
        let (mu, s2) = (model.drifts()[i], model.var(i));
        let root = (2.0 * q * s2 + mu * mu).sqrt();
        let small = if root + mu.abs() > 0.0 { 2.0 * q / (root + mu.abs()) } else { 0.0 };
        let large = (root + mu.abs()) / s2;
        let (dm, dp) = if mu > 0.0 { (small, large) } else if mu < 0.0 { (large, small) } else { (root / s2, root / s2) };
        out.l.push(root / s2);
        out.delta_minus.push(dm);
        out.delta_plus.push(dp);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `g⁺`, increasing, vanishing at `−∞`.
    Plus,
    /// `g⁻`, decreasing, vanishing at `+∞`.
    Minus,
}

/// One exponential piece `exp(log_b)·[(1−c)e^{r1·u} + c·e^{r2·u}]`,
/// `u = x − anchor`. `r2 − r1 = ∓2l` so the second term is the decaying one
/// on the side of the anchor where the piece is used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Piece {
    pub anchor: f64,
    pub log_b: f64,
    pub c: f64,
    pub r1: f64,
    pub r2: f64,
    pub two_l: f64,
}

impl Piece {
    fn mix(&self, u: f64) -> f64 {
        if self.c == 0.0 {
            1.0
        } else {
            1.0 + self.c * (-self.two_l * u.abs()).exp_m1()
        }
    }

    fn log_value(&self, x: f64) -> Result<f64> {
        let u = x - self.anchor;
        let mix = self.mix(u);
        if !(mix > 0.0) {
            return Err(Error::NumericInstability(format!(
                "fundamental solution is not positive at x = {x}"
            )));
        }
        Ok(self.log_b + self.r1 * u + mix.ln())
    }

    /// `g^{(k)}(x)/g(x)`.
    fn log_derivative_ratio(&self, x: f64, k: i32) -> Result<f64> {
        let u = x - self.anchor;
        let mix = self.mix(u);
        if !(mix > 0.0) {
            return Err(Error::NumericInstability(format!(
                "fundamental solution is not positive at x = {x}"
            )));
        }
        let e = if self.c == 0.0 { 0.0 } else { (-self.two_l * u.abs()).exp() };
        let r1k = self.r1.powi(k);
        Ok((r1k + self.c * (self.r2.powi(k) * e - r1k)) / mix)
    }

    /// Weights and rates of the two terms.
    pub(crate) fn terms(&self) -> [(f64, f64); 2] {
        [(1.0 - self.c, self.r1), (self.c, self.r2)]
    }
}

/// `g⁺` or `g⁻` for a fixed model and rate `q > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalSolution {
    side: Side,
    spectral: SpectralParams,
    thresholds: Vec<f64>,
    log_b: Vec<f64>,
    c: Vec<f64>,
    pieces: Vec<Piece>,
}

/// Result of the diagnostics hook: one-sided value and derivative of `g` at a
/// threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneSided {
    pub value: (f64, f64),
    pub derivative: (f64, f64),
}

fn ln_mix(c: f64, two_l_w: f64, what: &str, i: usize) -> Result<f64> {
    let m = c * (-two_l_w).exp_m1();
    if !(m > -1.0) {
        return Err(Error::NumericInstability(format!(
            "{what} recursion lost positivity at threshold {i}"
        )));
    }
    Ok(m.ln_1p())
}

/// `(b₁⁺..b_n⁺, c₁⁺..c_n⁺)`. `b` is returned as `log b`.
pub fn plus_coefficients(model: &ThresholdModel, q: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    check_rate(q)?;
    let sp = spectral_params(model, q)?;
    let n = model.n();
    let (l, dm) = (&sp.l, &sp.delta_minus);
    let mut log_b = vec![0.0; n];
    let mut c = vec![0.0; n];
    c[0] = (dm[1] - dm[0]) / (2.0 * l[1]);
    for i in 2..=n {
        let w = model.a(i) - model.a(i - 1);
        let cp = c[i - 2];
        let e = (-2.0 * l[i - 1] * w).exp();
        let lm = ln_mix(cp, 2.0 * l[i - 1] * w, "plus", i)?;
        c[i - 1] = (dm[i] - dm[i - 1]) / (2.0 * l[i]) + (l[i - 1] / l[i]) * cp * e / lm.exp();
        log_b[i - 1] = log_b[i - 2] + dm[i - 1] * w + lm;
    }
    Ok((log_b, c))
}

/// `(b₁⁻..b_n⁻, c₁⁻..c_n⁻)`. `b` is returned as `log b`.
pub fn minus_coefficients(model: &ThresholdModel, q: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    check_rate(q)?;
    let sp = spectral_params(model, q)?;
    let n = model.n();
    let (l, dp) = (&sp.l, &sp.delta_plus);
    let mut log_b = vec![0.0; n];
    let mut c = vec![0.0; n];
    c[n - 1] = (dp[n - 1] - dp[n]) / (2.0 * l[n - 1]);
    for i in (1..n).rev() {
        let w = model.a(i + 1) - model.a(i);
        let cn = c[i];
        let e = (-2.0 * l[i] * w).exp();
        let lm = ln_mix(cn, 2.0 * l[i] * w, "minus", i)?;
        c[i - 1] = (dp[i - 1] - dp[i]) / (2.0 * l[i - 1]) + (l[i] / l[i - 1]) * cn * e / lm.exp();
        log_b[i - 1] = log_b[i] + dp[i] * w + lm;
    }
    Ok((log_b, c))
}

impl FundamentalSolution {
    pub fn new(model: &ThresholdModel, q: f64, side: Side) -> Result<Self> {
        let spectral = spectral_params(model, q)?;
        let n = model.n();
        let (log_b, c) = match side {
            Side::Plus => plus_coefficients(model, q)?,
            Side::Minus => minus_coefficients(model, q)?,
        };
        let (l, dm, dp) = (&spectral.l, &spectral.delta_minus, &spectral.delta_plus);
        let mut pieces = Vec::with_capacity(n + 1);
        for r in 0..=n {
            let p = match side {
                Side::Plus if r == 0 => Piece {
                    anchor: model.a(1),
                    log_b: 0.0,
                    c: 0.0,
                    r1: dm[0],
                    r2: -dp[0],
                    two_l: 2.0 * l[0],
                },
                Side::Plus => Piece {
                    anchor: model.a(r),
                    log_b: log_b[r - 1],
                    c: c[r - 1],
                    r1: dm[r],
                    r2: -dp[r],
                    two_l: 2.0 * l[r],
                },
                Side::Minus if r == n => Piece {
                    anchor: model.a(n),
                    log_b: 0.0,
                    c: 0.0,
                    r1: -dp[n],
                    r2: dm[n],
                    two_l: 2.0 * l[n],
                },
                Side::Minus => Piece {
                    anchor: model.a(r + 1),
                    log_b: log_b[r],
                    c: c[r],
                    r1: -dp[r],
                    r2: dm[r],
                    two_l: 2.0 * l[r],
                },
            };
            pieces.push(p);
        }
        Ok(Self { side, spectral, thresholds: model.thresholds().to_vec(), log_b, c, pieces })
    }

    pub fn plus(model: &ThresholdModel, q: f64) -> Result<Self> {
        Self::new(model, q, Side::Plus)
    }

    pub fn minus(model: &ThresholdModel, q: f64) -> Result<Self> {
        Self::new(model, q, Side::Minus)
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn q(&self) -> f64 {
        self.spectral.q
    }

    pub fn spectral(&self) -> &SpectralParams {
        &self.spectral
    }

    /// `b_i` for `i = 1..n`. May overflow to `inf` for wide models; prefer
    /// [`Self::log_b`].
    pub fn coeffs_b(&self) -> Vec<f64> {
        self.log_b.iter().map(|v| v.exp()).collect()
    }

    pub fn coeffs_c(&self) -> &[f64] {
        &self.c
    }

    /// `log b_i`, `i` one-based. Equals `log g(a_i)`.
    pub fn log_b(&self, i: usize) -> f64 {
        self.log_b[i - 1]
    }

    pub fn c(&self, i: usize) -> f64 {
        self.c[i - 1]
    }

    pub(crate) fn piece(&self, regime: usize) -> &Piece {
        &self.pieces[regime]
    }

    fn regime(&self, x: f64) -> usize {
        self.thresholds.partition_point(|&a| a < x)
    }

    pub fn eval_log_g(&self, x: f64) -> Result<f64> {
        check_finite("x", x)?;
        self.pieces[self.regime(x)].log_value(x)
    }

    pub fn eval_g(&self, x: f64) -> Result<f64> {
        let v = self.eval_log_g(x)?.exp();
        if v.is_infinite() {
            return Err(Error::Overflow(format!("g({x}) exceeds the f64 range; use eval_log_g")));
        }
        if v == 0.0 {
            return Err(Error::NumericInstability(format!("g({x}) underflows to zero; use eval_log_g")));
        }
        Ok(v)
    }

    /// `g′(x)/g(x)`.
    pub fn eval_dlog_g(&self, x: f64) -> Result<f64> {
        check_finite("x", x)?;
        self.pieces[self.regime(x)].log_derivative_ratio(x, 1)
    }

    pub fn eval_g_derivative(&self, x: f64) -> Result<f64> {
        Ok(self.eval_g(x)? * self.eval_dlog_g(x)?)
    }

    pub fn eval_g_second_derivative(&self, x: f64) -> Result<f64> {
        check_finite("x", x)?;
        let r = self.pieces[self.regime(x)].log_derivative_ratio(x, 2)?;
        Ok(self.eval_g(x)? * r)
    }

    /// `g″(x)/g(x)` taken from the piece of a given regime, so that one-sided
    /// second derivatives at thresholds are reachable.
    pub fn second_log_ratio_in(&self, regime: usize, x: f64) -> Result<f64> {
        self.pieces[regime].log_derivative_ratio(x, 2)
    }

    /// Left and right limits of `g` and `g′` at threshold `a_i` computed from
    /// the neighbouring pieces.
    pub fn one_sided(&self, i: usize) -> Result<OneSided> {
        let a = self.thresholds[i - 1];
        let (left, right) = (&self.pieces[i - 1], &self.pieces[i]);
        let (gl, gr) = (left.log_value(a)?.exp(), right.log_value(a)?.exp());
        Ok(OneSided {
            value: (gl, gr),
            derivative: (gl * left.log_derivative_ratio(a, 1)?, gr * right.log_derivative_ratio(a, 1)?),
        })
    }

    /// CSV rows `i,b_i,c_i,log_g_a_i`.
    pub fn csv_dump(&self) -> String {
        let mut s = String::from("i,b,c,log_g\n");
        for i in 1..=self.log_b.len() {
            let _ = writeln!(
                s,
                "{},{:.16e},{:.16e},{:.16e}",
                i,
                self.log_b[i - 1].exp(),
                self.c[i - 1],
                self.log_b[i - 1]
            );
        }
        s
    }
}
