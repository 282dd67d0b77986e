//! Density of `X` at an independent exponential time `e_q`, and the
//! exponential-segment representation used to integrate it exactly.
//!
//! On the regime `i` containing `z` the density is
//! `q·e^{k_i(z−r_i)}/(σ_i²·D_i) · g⁺(x∧z)·g⁻(x∨z)` with `k_i = 2μ_i/σ_i²` and
//! a regime constant `D_i`:
//!
//! | regime | `r_i` | `D_i` |
//! |---|---|---|
//! | `0` (`z ≤ a₁`) | `a₁` | `l₀(1−c₁⁻)b₁⁻` |
//! | `1..n−1` | `a_{i+1}` | `C_i·l_i·b_i⁺·b_{i+1}⁻` |
//! | `n` (`z > a_n`) | `a_n` | `l_n(1−c_n⁺)b_n⁺` |
//!
//! where `C_i = (1−c_i⁺)(1−c_{i+1}⁻)e^{δ_i⁻w_i} − c_i⁺c_{i+1}⁻e^{−δ_i⁺w_i}`.
//! All of it is assembled in log space.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{check_finite, check_rate, Error, Result};
use crate::fundamentals::FundamentalSolution;
use crate::model::ThresholdModel;

/// `amplitude·e^{rate·(z − reference)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub amplitude: f64,
    pub rate: f64,
    pub reference: f64,
}

/// Sum of terms on `(left, right]` (the first segment is `(−∞, right]`).
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub left: f64,
    pub right: f64,
    pub terms: Vec<Term>,
}

impl Segment {
    pub fn eval(&self, z: f64) -> f64 {
        self.terms.iter().map(|t| t.amplitude * (t.rate * (z - t.reference)).exp()).sum()
    }

    /// Exact integral over the segment.
    pub fn integral(&self) -> Result<f64> {
        let (l, r) = (self.left, self.right);
        let mut total = 0.0;
        for t in &self.terms {
            let v = match (l.is_finite(), r.is_finite()) {
                (true, true) if t.rate == 0.0 => t.amplitude * (r - l),
                // anchor at the end where the exponential is largest
                (true, true) if t.rate > 0.0 => {
                    t.amplitude * (t.rate * (r - t.reference)).exp() * -(-t.rate * (r - l)).exp_m1() / t.rate
                }
                (true, true) => t.amplitude * (t.rate * (l - t.reference)).exp() * (t.rate * (r - l)).exp_m1() / t.rate,
                (false, true) if t.rate > 0.0 => t.amplitude * (t.rate * (r - t.reference)).exp() / t.rate,
                (true, false) if t.rate < 0.0 => t.amplitude * (t.rate * (l - t.reference)).exp() / -t.rate,
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "term with rate {} is not integrable on ({l}, {r})",
                        t.rate
                    )))
                }
            };
            total += v;
        }
        Ok(total)
    }
}

static CLAMPED: AtomicU64 = AtomicU64::new(0);

/// Number of evaluations so far that came out in `[−1e−12, 0)` and were
/// reported as 0.
pub fn clamp_count() -> u64 {
    CLAMPED.load(Ordering::Relaxed)
}

/// A density on ℝ stored as exponential sums on consecutive segments.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseExpDensity {
    segments: Vec<Segment>,
}

impl PiecewiseExpDensity {
    pub fn new(segments: Vec<Segment>) -> Self {
        Self { segments }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        self.segments.iter().map(|s| s.right).filter(|r| r.is_finite()).collect()
    }

    fn segment_for(&self, z: f64) -> Option<&Segment> {
        let k = self.segments.partition_point(|s| s.right < z);
        self.segments.get(k).filter(|s| s.left < z || (s.left == z && k == 0))
    }

    /// Value at `z`; 0 outside the covered range. Small negative values from
    /// cancellation are clamped to 0 and counted.
    pub fn eval(&self, z: f64) -> f64 {
        let v = self.segment_for(z).map_or(0.0, |s| s.eval(z));
        if (-1e-12..0.0).contains(&v) {
            CLAMPED.fetch_add(1, Ordering::Relaxed);
            0.0
        } else {
            v
        }
    }

    /// Like [`Self::eval`] but errors on clearly negative values.
    pub fn checked_eval(&self, z: f64) -> Result<f64> {
        let v = self.eval(z);
        if v < 0.0 {
            return Err(Error::NumericInstability(format!("density is {v} at z = {z}")));
        }
        Ok(v)
    }

    pub fn total_mass(&self) -> Result<f64> {
        self.segments.iter().map(|s| s.integral()).sum()
    }

    /// Exact mass of `(lo, hi]`.
    pub fn mass_between(&self, lo: f64, hi: f64) -> Result<f64> {
        let mut total = 0.0;
        for s in &self.segments {
            let (l, r) = (s.left.max(lo), s.right.min(hi));
            if l < r {
                total += Segment { left: l, right: r, terms: s.terms.clone() }.integral()?;
            }
        }
        Ok(total)
    }

    /// CSV rows `left,right,amplitude,rate,reference`, one per term.
    pub fn csv(&self) -> String {
        let mut s = String::from("left,right,amplitude,rate,reference\n");
        for seg in &self.segments {
            for t in &seg.terms {
                s.push_str(&crate::cli::csv_row(&[seg.left, seg.right, t.amplitude, t.rate, t.reference]));
            }
        }
        s
    }
}

/// Both fundamental solutions and the regime constants of the density for
/// one `(model, q)`.
#[derive(Debug, Clone)]
pub struct Resolvent {
    model: ThresholdModel,
    q: f64,
    plus: FundamentalSolution,
    minus: FundamentalSolution,
    log_d: Vec<f64>,
    refs: Vec<f64>,
}

impl Resolvent {
    pub fn new(model: &ThresholdModel, q: f64) -> Result<Self> {
        check_rate(q)?;
        let plus = FundamentalSolution::plus(model, q)?;
        let minus = FundamentalSolution::minus(model, q)?;
        let n = model.n();
        let l = &plus.spectral().l;
        let mut log_d = Vec::with_capacity(n + 1);
        let mut refs = Vec::with_capacity(n + 1);
        let one_minus = |c: f64, what: &str| -> Result<f64> {
            if !(1.0 - c > 0.0) {
                return Err(Error::NumericInstability(format!("1 − {what} = {} is not positive", 1.0 - c)));
            }
            Ok((1.0 - c).ln())
        };
        log_d.push(l[0].ln() + one_minus(minus.c(1), "c₁⁻")? + minus.log_b(1));
        refs.push(model.a(1));
        for i in 1..n {
            let lc = log_c_const(&plus, &minus, model, i)?;
            log_d.push(lc + l[i].ln() + plus.log_b(i) + minus.log_b(i + 1));
            refs.push(model.a(i + 1));
        }
        log_d.push(l[n].ln() + one_minus(plus.c(n), "c_n⁺")? + plus.log_b(n));
        refs.push(model.a(n));
        Ok(Self { model: model.clone(), q, plus, minus, log_d, refs })
    }

    pub fn plus(&self) -> &FundamentalSolution {
        &self.plus
    }

    pub fn minus(&self) -> &FundamentalSolution {
        &self.minus
    }

    /// `C_i` for `1 ≤ i < n`.
    pub fn c_const(&self, i: usize) -> Result<f64> {
        Ok(log_c_const(&self.plus, &self.minus, &self.model, i)?.exp())
    }

    fn prefactor_log(&self, i: usize, z: f64) -> f64 {
        self.q.ln() + self.model.speed_slope(i) * (z - self.refs[i]) - self.model.var(i).ln() - self.log_d[i]
    }

    pub fn density(&self, x: f64, z: f64) -> Result<f64> {
        check_finite("x", x)?;
        check_finite("z", z)?;
        let i = self.model.regime_index(z);
        let (lo, hi) = if x <= z { (x, z) } else { (z, x) };
        let v = (self.prefactor_log(i, z) + self.plus.eval_log_g(lo)? + self.minus.eval_log_g(hi)?).exp();
        if v.is_infinite() {
            return Err(Error::Overflow(format!("density at x = {x}, z = {z}")));
        }
        Ok(v)
    }

    pub fn pieces(&self, x: f64) -> Result<PiecewiseExpDensity> {
        check_finite("x", x)?;
        let m = &self.model;
        let mut cuts: Vec<f64> = m.thresholds().to_vec();
        if !cuts.contains(&x) {
            cuts.push(x);
            cuts.sort_by(f64::total_cmp);
        }
        let (lg_plus_x, lg_minus_x) = (self.plus.eval_log_g(x)?, self.minus.eval_log_g(x)?);
        let mut bounds = vec![f64::NEG_INFINITY];
        bounds.extend(cuts);
        bounds.push(f64::INFINITY);
        let mut segments = Vec::with_capacity(bounds.len() - 1);
        for w in bounds.windows(2) {
            let (left, right) = (w[0], w[1]);
            let regime = if right.is_finite() { m.regime_index(right) } else { m.n() };
            let below_x = right <= x;
            let (piece, other) = if below_x {
                (self.plus.piece(regime), lg_minus_x)
            } else {
                (self.minus.piece(regime), lg_plus_x)
            };
            let k = m.speed_slope(regime);
            let base = self.prefactor_log(regime, piece.anchor) + other + piece.log_b;
            let terms = piece
                .terms()
                .iter()
                .filter(|(wt, _)| *wt != 0.0)
                .map(|&(wt, r)| Term { amplitude: wt * base.exp(), rate: k + r, reference: piece.anchor })
                .collect();
            segments.push(Segment { left, right, terms });
        }
        Ok(PiecewiseExpDensity::new(segments))
    }
}

fn log_c_const(plus: &FundamentalSolution, minus: &FundamentalSolution, model: &ThresholdModel, i: usize) -> Result<f64> {
    let sp = plus.spectral();
    let w = model.width(i);
    let (cp, cm) = (plus.c(i), minus.c(i + 1));
    let bracket = (1.0 - cp) * (1.0 - cm) - cp * cm * (-2.0 * sp.l[i] * w).exp();
    if !(bracket > 0.0) {
        return Err(Error::NumericInstability(format!("regime constant C_{i} is not positive")));
    }
    Ok(sp.delta_minus[i] * w + bracket.ln())
}

/// Density of `P_x{X_{e_q} ∈ dz}` per unit `z`.
pub fn potential_density(model: &ThresholdModel, q: f64, x: f64, z: f64) -> Result<f64> {
    Resolvent::new(model, q)?.density(x, z)
}

pub fn potential_pieces(model: &ThresholdModel, q: f64, x: f64) -> Result<PiecewiseExpDensity> {
    Resolvent::new(model, q)?.pieces(x)
}

pub fn total_mass(pieces: &PiecewiseExpDensity) -> Result<f64> {
    pieces.total_mass()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference;
    use crate::stationary::speed_density;
    use std::f64::consts::SQRT_2;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    fn three() -> ThresholdModel {
        ThresholdModel::new(vec![-1.0, 0.5, 2.0], vec![0.3, -1.0, 0.0, -0.2], vec![1.0, 0.5, 2.0, 1.5]).unwrap()
    }

    #[test]
    fn brownian_examples() {
        let m = ThresholdModel::uniform(vec![0.0], 0.0, 1.0).unwrap();
        assert!(rel(potential_density(&m, 0.5, 0.0, 0.0).unwrap(), 0.5) < 1e-15);
        assert!(rel(potential_density(&m, 0.5, 0.0, 2.0).unwrap(), 0.5 * (-2f64).exp()) < 1e-15);
        let p = potential_pieces(&m, 0.5, 0.0).unwrap();
        assert_eq!(p.segments().len(), 2);
        for s in p.segments() {
            assert_eq!(s.terms.len(), 1);
            assert!((s.terms[0].rate.abs() - 1.0).abs() < 1e-15);
        }
        assert!((p.total_mass().unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn small_q_approaches_laplace_law() {
        let m = ThresholdModel::new(vec![0.0], vec![1.0, -1.0], vec![SQRT_2, SQRT_2]).unwrap();
        let v = potential_density(&m, 1e-4, 0.0, 0.0).unwrap();
        assert!((v - 0.5).abs() < 1e-3, "{v}");
    }

    #[test]
    fn segments_follow_breakpoints() {
        let m = ThresholdModel::new(vec![0.0], vec![0.4, -0.3], vec![1.0, 2.0]).unwrap();
        let p = potential_pieces(&m, 1.0, 0.7).unwrap();
        assert_eq!(p.breakpoints(), vec![0.0, 0.7]);
        assert_eq!(p.segments().len(), 3);
        let p = potential_pieces(&m, 1.0, 0.0).unwrap();
        assert_eq!(p.breakpoints(), vec![0.0]);
    }

    #[test]
    fn green_function_oracle() {
        // 2q·g⁺(x∧z)g⁻(x∨z)/(σ(z)²W(z)) with the Wronskian from derivatives.
        let m = three();
        for q in [0.1, 1.0, 7.0] {
            let r = Resolvent::new(&m, q).unwrap();
            for x in [-2.0, -1.0, 0.0, 0.5, 1.3, 3.0] {
                for z in [-2.5, -1.0, -0.3, 0.5, 0.9, 2.0, 2.2, 4.0] {
                    let (lo, hi) = if x <= z { (x, z) } else { (z, x) };
                    let (gp, gm) = (r.plus(), r.minus());
                    let w = gp.eval_g(z).unwrap() * gm.eval_g(z).unwrap()
                        * (gp.eval_dlog_g(z).unwrap() - gm.eval_dlog_g(z).unwrap());
                    let want = 2.0 * q * gp.eval_g(lo).unwrap() * gm.eval_g(hi).unwrap() / (m.vol_at(z).powi(2) * w);
                    assert!(rel(r.density(x, z).unwrap(), want) < 1e-11, "q={q} x={x} z={z}");
                }
            }
        }
    }

    #[test]
    fn regime_constant_matches_wronskian() {
        let m = three();
        for q in [0.05, 1.0, 20.0] {
            let r = Resolvent::new(&m, q).unwrap();
            let l = &r.plus().spectral().l;
            for i in 1..m.n() {
                let a = m.a(i + 1);
                let (gp, gm) = (r.plus(), r.minus());
                let w = gp.eval_g(a).unwrap() * gm.eval_g(a).unwrap()
                    * (gp.eval_dlog_g(a).unwrap() - gm.eval_dlog_g(a).unwrap());
                let want = w / (2.0 * l[i] * gp.eval_g(m.a(i)).unwrap() * gm.eval_g(a).unwrap());
                assert!(rel(r.c_const(i).unwrap(), want) < 1e-12);
            }
        }
    }

    #[test]
    fn pieces_match_density_and_normalize() {
        let m = three();
        for q in [0.1, 1.0, 10.0] {
            let r = Resolvent::new(&m, q).unwrap();
            for x in [-3.0, -1.0, 0.2, 2.0, 2.5] {
                let p = r.pieces(x).unwrap();
                assert!((p.total_mass().unwrap() - 1.0).abs() < 1e-10);
                for z in [-4.0, -1.0, -0.99, 0.0, 0.5, 1.0, 2.0, 2.01, 5.0, x] {
                    assert!(rel(p.eval(z), r.density(x, z).unwrap()) < 1e-12, "x={x} z={z}");
                }
            }
        }
    }

    #[test]
    fn speed_normalized_symmetry() {
        let m = three();
        let r = Resolvent::new(&m, 0.7).unwrap();
        for x in [-2.0, 0.0, 1.5, 3.0] {
            for z in [-1.5, 0.5, 2.0, 2.8] {
                let a = r.density(x, z).unwrap() / speed_density(&m, z).unwrap();
                let b = r.density(z, x).unwrap() / speed_density(&m, x).unwrap();
                assert!(rel(a, b) < 1e-12);
            }
        }
    }

    #[test]
    fn single_regime_matches_linear() {
        let m = ThresholdModel::uniform(vec![-0.5, 1.0], 0.8, 1.7).unwrap();
        for x in [-2.0, 0.0, 1.5] {
            for z in [-3.0, -0.5, 0.2, 1.0, 4.0] {
                let want = reference::linear_resolvent_density(0.8, 1.7, 2.0, x, z).unwrap();
                assert!(rel(potential_density(&m, 2.0, x, z).unwrap(), want) < 1e-12);
            }
        }
    }

    #[test]
    fn manual_segment_integral() {
        let p = PiecewiseExpDensity::new(vec![
            Segment { left: f64::NEG_INFINITY, right: 0.0, terms: vec![] },
            Segment { left: 0.0, right: f64::INFINITY, terms: vec![Term { amplitude: 1.0, rate: -1.0, reference: 0.0 }] },
        ]);
        assert!((p.total_mass().unwrap() - 1.0).abs() < 1e-15);
        assert!((p.mass_between(0.0, 1.0).unwrap() - (1.0 - (-1f64).exp())).abs() < 1e-15);
        let bad = PiecewiseExpDensity::new(vec![Segment {
            left: 0.0,
            right: f64::INFINITY,
            terms: vec![Term { amplitude: 1.0, rate: 0.5, reference: 0.0 }],
        }]);
        assert!(bad.total_mass().is_err());
    }

    #[test]
    fn rejects_bad_rate() {
        let m = three();
        assert!(potential_density(&m, 0.0, 0.0, 0.0).is_err());
        assert!(potential_pieces(&m, -1.0, 0.0).is_err());
    }
}
