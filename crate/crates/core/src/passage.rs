//! Laplace transforms of first-passage times and `q = 0` exit probabilities.
//!
//! With `h = g⁺/g⁻` (increasing) the two-sided transforms become
//!
//! ```text
//! E_x[e^{−qτ_y}; τ_y < τ_z] = g⁻(x)/g⁻(y) · (1 − h(x)/h(z)) / (1 − h(y)/h(z))
//! E_x[e^{−qτ_z}; τ_z < τ_y] = g⁺(x)/g⁺(z) · (1 − h(y)/h(x)) / (1 − h(y)/h(z))
//! ```
//!
//! and every ratio is a difference of logs.

use crate::error::{check_finite, check_rate, Error, Result};
use crate::fundamentals::FundamentalSolution;
use crate::model::ThresholdModel;
use crate::stationary::scale_function;

/// `g⁺` and `g⁻` for one `(model, q)`, reusable across many queries.
#[derive(Debug, Clone)]
pub struct PassageKernel {
    plus: FundamentalSolution,
    minus: FundamentalSolution,
}

fn check_order(x: f64, y: f64, z: f64) -> Result<()> {
    check_finite("x", x)?;
    check_finite("y", y)?;
    check_finite("z", z)?;
    if !(y <= x && x <= z) {
        return Err(Error::InvalidArgument(format!("barriers must satisfy y <= x <= z, got y={y}, x={x}, z={z}")));
    }
    if y == z {
        return Err(Error::InvalidArgument("lower and upper barriers coincide".into()));
    }
    Ok(())
}

/// `1 − e^{d}` for `d ≤ 0`.
fn one_minus_exp(d: f64) -> f64 {
    -d.exp_m1()
}

impl PassageKernel {
    pub fn new(model: &ThresholdModel, q: f64) -> Result<Self> {
        check_rate(q)?;
        Ok(Self { plus: FundamentalSolution::plus(model, q)?, minus: FundamentalSolution::minus(model, q)? })
    }

    fn log_h(&self, x: f64) -> Result<f64> {
        Ok(self.plus.eval_log_g(x)? - self.minus.eval_log_g(x)?)
    }

    pub fn exit_down(&self, x: f64, y: f64, z: f64) -> Result<f64> {
        check_order(x, y, z)?;
        let (hx, hy, hz) = (self.log_h(x)?, self.log_h(y)?, self.log_h(z)?);
        let den = one_minus_exp(hy - hz);
        if !(den > 0.0) {
            return Err(Error::NumericInstability("two-sided exit denominator vanished".into()));
        }
        let ratio = (self.minus.eval_log_g(x)? - self.minus.eval_log_g(y)?).exp();
        Ok((ratio * one_minus_exp(hx - hz) / den).clamp(0.0, 1.0))
    }

    pub fn exit_up(&self, x: f64, y: f64, z: f64) -> Result<f64> {
        check_order(x, y, z)?;
        let (hx, hy, hz) = (self.log_h(x)?, self.log_h(y)?, self.log_h(z)?);
        let den = one_minus_exp(hy - hz);
        if !(den > 0.0) {
            return Err(Error::NumericInstability("two-sided exit denominator vanished".into()));
        }
        let ratio = (self.plus.eval_log_g(x)? - self.plus.eval_log_g(z)?).exp();
        Ok((ratio * one_minus_exp(hy - hx) / den).clamp(0.0, 1.0))
    }

    pub fn hit(&self, x: f64, target: f64) -> Result<f64> {
        check_finite("x", x)?;
        check_finite("target", target)?;
        let g = if x >= target { &self.minus } else { &self.plus };
        Ok((g.eval_log_g(x)? - g.eval_log_g(target)?).exp().min(1.0))
    }
}

/// `E_x[e^{−qτ_y}; τ_y < τ_z]` for `y ≤ x ≤ z`.
pub fn laplace_exit_down(model: &ThresholdModel, q: f64, x: f64, y: f64, z: f64) -> Result<f64> {
    PassageKernel::new(model, q)?.exit_down(x, y, z)
}

/// `E_x[e^{−qτ_z}; τ_z < τ_y]` for `y ≤ x ≤ z`.
pub fn laplace_exit_up(model: &ThresholdModel, q: f64, x: f64, y: f64, z: f64) -> Result<f64> {
    PassageKernel::new(model, q)?.exit_up(x, y, z)
}

/// `E_x[e^{−qτ_target}]`.
pub fn laplace_hit(model: &ThresholdModel, q: f64, x: f64, target: f64) -> Result<f64> {
    PassageKernel::new(model, q)?.hit(x, target)
}

/// `P_x{τ_y < τ_z}` for `y ≤ x ≤ z`.
pub fn exit_probability_down(model: &ThresholdModel, x: f64, y: f64, z: f64) -> Result<f64> {
    check_order(x, y, z)?;
    let (px, py, pz) = (scale_function(model, x)?, scale_function(model, y)?, scale_function(model, z)?);
    Ok(((pz - px) / (pz - py)).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bm() -> ThresholdModel {
        ThresholdModel::uniform(vec![0.0], 0.0, 1.0).unwrap()
    }

    fn three() -> ThresholdModel {
        ThresholdModel::new(vec![0.0, 1.0], vec![1.0, -0.5, -1.0], vec![1.0, 2.0, 1.0]).unwrap()
    }

    #[test]
    fn brownian_examples() {
        let m = bm();
        let want = 1f64.sinh() / 2f64.sinh();
        assert!((laplace_exit_down(&m, 0.5, 0.0, -1.0, 1.0).unwrap() - want).abs() < 1e-15);
        assert!((laplace_exit_up(&m, 0.5, 0.0, -1.0, 1.0).unwrap() - want).abs() < 1e-15);
        assert!((want - 0.324027).abs() < 1e-6);
        assert!((laplace_hit(&m, 0.5, 0.0, 1.0).unwrap() - (-1f64).exp()).abs() < 1e-15);
        assert!((exit_probability_down(&m, 0.0, -1.0, 3.0).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn endpoints() {
        let m = three();
        assert_eq!(laplace_exit_down(&m, 1.0, -1.0, -1.0, 2.0).unwrap(), 1.0);
        assert_eq!(laplace_exit_down(&m, 1.0, 2.0, -1.0, 2.0).unwrap(), 0.0);
        assert_eq!(laplace_exit_up(&m, 1.0, 2.0, -1.0, 2.0).unwrap(), 1.0);
        assert_eq!(laplace_exit_up(&m, 1.0, -1.0, -1.0, 2.0).unwrap(), 0.0);
        assert_eq!(laplace_hit(&m, 1.0, 0.3, 0.3).unwrap(), 1.0);
        assert_eq!(exit_probability_down(&m, -1.0, -1.0, 2.0).unwrap(), 1.0);
    }

    #[test]
    fn ordering_and_rate_errors() {
        let m = three();
        assert!(laplace_exit_down(&m, 1.0, 0.0, 1.0, 2.0).is_err());
        assert!(laplace_exit_up(&m, 1.0, 0.0, 0.0, 0.0).is_err());
        assert!(laplace_exit_down(&m, 0.0, 0.0, -1.0, 1.0).is_err());
        assert!(laplace_hit(&m, -1.0, 0.0, 1.0).is_err());
        assert!(exit_probability_down(&m, 3.0, -1.0, 2.0).is_err());
    }

    #[test]
    fn regime_zero_hit() {
        let m = ThresholdModel::new(vec![0.0], vec![0.0, 0.0], vec![1.0, 2.0]).unwrap();
        assert!((laplace_hit(&m, 0.5, -1.0, 0.0).unwrap() - (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn symmetric_exit_probability() {
        let m = ThresholdModel::new(vec![0.0], vec![-1.0, 1.0], vec![1.0, 1.0]).unwrap();
        assert!((exit_probability_down(&m, 0.0, -1.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sub_probability_and_barrier_recession() {
        let m = three();
        let k = PassageKernel::new(&m, 0.4).unwrap();
        for (x, y, z) in [(0.5, -1.0, 2.0), (0.0, -0.5, 0.1), (1.0, 0.9, 4.0)] {
            assert!(k.exit_down(x, y, z).unwrap() + k.exit_up(x, y, z).unwrap() <= 1.0 + 1e-15);
        }
        let hit = k.hit(0.5, -1.0).unwrap();
        let vals: Vec<f64> = [6.0, 21.0, 81.0].iter().map(|&z| k.exit_down(0.5, -1.0, z).unwrap()).collect();
        assert!(vals[0] <= vals[1] && vals[1] <= vals[2] && vals[2] <= hit);
        assert!((vals[2] - hit).abs() < 1e-10);
    }

    #[test]
    fn small_rate_tends_to_exit_probability() {
        let m = three();
        let p = exit_probability_down(&m, 0.5, -1.0, 2.0).unwrap();
        let e2 = (laplace_exit_down(&m, 1e-2, 0.5, -1.0, 2.0).unwrap() - p).abs();
        let e4 = (laplace_exit_down(&m, 1e-4, 0.5, -1.0, 2.0).unwrap() - p).abs();
        assert!(e4 < e2 / 30.0, "{e2} {e4}");
    }

    #[test]
    fn strong_markov_factorization() {
        let m = three();
        let k = PassageKernel::new(&m, 2.0).unwrap();
        for (x, w, y) in [(3.0, 0.5, -1.0), (1.0, 1.0, 0.0), (-0.5, -2.0, -2.5)] {
            let lhs = k.hit(x, y).unwrap();
            let rhs = k.hit(x, w).unwrap() * k.hit(w, y).unwrap();
            assert!((lhs - rhs).abs() / lhs < 1e-10);
            let lhs = k.hit(y, x).unwrap();
            let rhs = k.hit(y, w).unwrap() * k.hit(w, x).unwrap();
            assert!((lhs - rhs).abs() / lhs < 1e-10);
        }
    }
}
