//! Closed forms for the single-regime diffusion `x + μt + σB_t`.
//!
//! Ratios of `sinh` are formed through `s(A) = 1 − e^{−2A}`, so
//! `sinh A / sinh B = e^{A−B}·s(A)/s(B)` never overflows.

use crate::error::{check_finite, check_rate, Error, Result};

fn check_vol(sigma: f64) -> Result<()> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("volatility must be finite and positive, got {sigma}")));
    }
    Ok(())
}

fn spectral(mu: f64, sigma: f64, q: f64) -> Result<(f64, f64, f64, f64)> {
    check_finite("mu", mu)?;
    check_vol(sigma)?;
    check_rate(q)?;
    let s2 = sigma * sigma;
    let root = (2.0 * q * s2 + mu * mu).sqrt();
    let l = root / s2;
    let small = 2.0 * q / (root + mu.abs());
    let large = (root + mu.abs()) / s2;
    let (dm, dp) = if mu >= 0.0 { (small, large) } else { (large, small) };
    Ok((l, dm, dp, s2))
}

/// `s(A) = 1 − e^{−2A}`, `A ≥ 0`.
fn s(a: f64) -> f64 {
    -(-2.0 * a).exp_m1()
}

/// Density of `X*_{e_q}` at `z`.
pub fn linear_resolvent_density(mu: f64, sigma: f64, q: f64, x: f64, z: f64) -> Result<f64> {
    let (l, _, _, s2) = spectral(mu, sigma, q)?;
    Ok(q / (l * s2) * (mu * (z - x) / s2 - (z - x).abs() * l).exp())
}

/// `E_x[e^{−qτ_a}]`.
pub fn linear_fpt_laplace(mu: f64, sigma: f64, q: f64, x: f64, a: f64) -> Result<f64> {
    let (l, _, _, s2) = spectral(mu, sigma, q)?;
    Ok((mu * (a - x) / s2 - (a - x).abs() * l).exp())
}

/// Density of `τ_a` at time `t > 0`.
pub fn linear_fpt_density(mu: f64, sigma: f64, x: f64, a: f64, t: f64) -> Result<f64> {
    check_finite("mu", mu)?;
    check_vol(sigma)?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidArgument(format!("time must be finite and >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let d = a - x;
    let num = (-(d - mu * t).powi(2) / (2.0 * sigma * sigma * t)).exp();
    Ok(d.abs() / (sigma * (2.0 * std::f64::consts::PI * t.powi(3)).sqrt()) * num)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Barrier {
    Lower,
    Upper,
}

fn check_interval(a: f64, x: f64, b: f64) -> Result<()> {
    for (n, v) in [("a", a), ("x", x), ("b", b)] {
        check_finite(n, v)?;
    }
    if !(a <= x && x <= b && a < b) {
        return Err(Error::InvalidArgument(format!("need a <= x <= b with a < b, got a={a}, x={x}, b={b}")));
    }
    Ok(())
}

/// `E_x[e^{−qτ}; exit at the chosen barrier]` for `a ≤ x ≤ b`.
pub fn linear_two_sided_laplace(mu: f64, sigma: f64, q: f64, x: f64, a: f64, b: f64, hit: Barrier) -> Result<f64> {
    let (l, _, _, s2) = spectral(mu, sigma, q)?;
    check_interval(a, x, b)?;
    let big = (b - a) * l;
    let v = match hit {
        Barrier::Lower => {
            let small = (b - x) * l;
            (mu * (a - x) / s2 + small - big).exp() * s(small) / s(big)
        }
        Barrier::Upper => {
            let small = (x - a) * l;
            (mu * (b - x) / s2 + small - big).exp() * s(small) / s(big)
        }
    };
    Ok(v)
}

/// Density of `X*_{e_q}` on `{e_q < τ_a ∧ τ_b}`; zero outside `[a, b]`.
pub fn linear_killed_density(mu: f64, sigma: f64, q: f64, x: f64, a: f64, b: f64, z: f64) -> Result<f64> {
    let (l, _, _, s2) = spectral(mu, sigma, q)?;
    check_interval(a, x, b)?;
    check_finite("z", z)?;
    if z < a || z > b {
        return Ok(0.0);
    }
    let (lo, hi) = if x <= z { (x, z) } else { (z, x) };
    let (p, r, big) = ((lo - a) * l, (b - hi) * l, (b - a) * l);
    // sinh(P)·sinh(R)/sinh(B) = e^{P+R−B}·s(P)s(R)/(2s(B))
    let kernel = (p + r - big).exp() * s(p) * s(r) / (2.0 * s(big));
    Ok(2.0 * q / (l * s2) * kernel * (mu * (z - x) / s2).exp())
}

/// Density of `X*_{e_q}` on `{e_q < τ_a}`. The barrier may lie on either
/// side of `x`; the density is zero on the far side of it.
pub fn linear_killed_onesided_density(mu: f64, sigma: f64, q: f64, x: f64, a: f64, z: f64) -> Result<f64> {
    let (l, dm, dp, s2) = spectral(mu, sigma, q)?;
    check_finite("x", x)?;
    check_finite("a", a)?;
    check_finite("z", z)?;
    if x < a {
        // reflect: X ↦ −X turns μ into −μ and swaps δ⁻ and δ⁺
        return linear_killed_onesided_density(-mu, sigma, q, -x, -a, -z);
    }
    if z <= a {
        return Ok(0.0);
    }
    let c = q / (l * s2);
    let (u, v) = (x - a, z - a);
    let val = if z >= x {
        // (e^{δ⁻u} − e^{−δ⁺u})e^{−δ⁻v} = e^{−δ⁻(v−u)}(1 − e^{−2lu})
        c * (-dm * (v - u)).exp() * s(l * u)
    } else {
        c * (-dp * (u - v)).exp() * s(l * v)
    };
    Ok(val)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn resolvent_examples() {
        assert_eq!(linear_resolvent_density(0.0, 1.0, 0.5, 0.3, 0.3).unwrap(), 0.5);
        assert!(close(linear_resolvent_density(0.0, 1.0, 0.5, 0.0, 2.0).unwrap(), 0.5 * (-2f64).exp(), 1e-15));
        assert_eq!(
            linear_resolvent_density(0.0, 1.3, 0.5, 0.1, 1.7).unwrap(),
            linear_resolvent_density(0.0, 1.3, 0.5, 1.7, 0.1).unwrap()
        );
        assert!(linear_resolvent_density(0.0, 0.0, 0.5, 0.0, 0.0).is_err());
        assert!(linear_resolvent_density(0.0, 1.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn fpt_examples() {
        assert_eq!(linear_fpt_laplace(0.3, 1.0, 1.0, 2.0, 2.0).unwrap(), 1.0);
        assert!(close(linear_fpt_laplace(0.0, 1.0, 0.5, 0.0, 1.0).unwrap(), (-1f64).exp(), 1e-15));
        assert!(close(linear_fpt_laplace(1.0, 1.0, 1e-12, 0.0, 3.0).unwrap(), 1.0, 1e-9));
        let want = (-0.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
        assert!(close(linear_fpt_density(0.0, 1.0, 0.0, 1.0, 1.0).unwrap(), want, 1e-15));
        assert!((want - 0.241971).abs() < 1e-6);
        assert_eq!(linear_fpt_density(0.0, 1.0, 0.0, 1.0, 0.0).unwrap(), 0.0);
        assert!(linear_fpt_density(0.0, 1.0, 0.0, 1.0, 1e-4).unwrap() < 1e-100);
    }

    #[test]
    fn fpt_density_integrates_to_hitting_probability() {
        // drift toward the barrier: τ is a.s. finite, and E[e^{−qτ}] is the
        // Laplace transform of the density
        let (mu, sigma, x, a) = (0.8, 1.2, 0.0, 1.5);
        for q in [0.0, 0.7] {
            let (mut t, h, mut acc) = (0.0, 1e-3, 0.0);
            while t < 80.0 {
                let f = |t: f64| linear_fpt_density(mu, sigma, x, a, t).unwrap() * (-q * t).exp();
                acc += h / 6.0 * (f(t) + 4.0 * f(t + h / 2.0) + f(t + h));
                t += h;
            }
            let want = if q == 0.0 { 1.0 } else { linear_fpt_laplace(mu, sigma, q, x, a).unwrap() };
            assert!((acc - want).abs() < 1e-8, "{acc} vs {want}");
        }
    }

    #[test]
    fn two_sided_examples() {
        assert!(close(linear_two_sided_laplace(0.4, 1.0, 1.0, -1.0, -1.0, 1.0, Barrier::Lower).unwrap(), 1.0, 1e-15));
        let want = 1f64.sinh() / 2f64.sinh();
        for hit in [Barrier::Lower, Barrier::Upper] {
            assert!(close(linear_two_sided_laplace(0.0, 1.0, 0.5, 0.0, -1.0, 1.0, hit).unwrap(), want, 1e-15));
        }
        let lo = linear_two_sided_laplace(-0.7, 0.8, 0.3, 0.2, -1.0, 2.0, Barrier::Lower).unwrap();
        let up = linear_two_sided_laplace(-0.7, 0.8, 0.3, 0.2, -1.0, 2.0, Barrier::Upper).unwrap();
        assert!(lo + up <= 1.0);
        let wide = linear_two_sided_laplace(0.0, 1.0, 1.0, 0.0, -1000.0, 1000.0, Barrier::Lower).unwrap();
        assert!(wide.is_finite() && wide >= 0.0);
    }

    #[test]
    fn killed_examples() {
        assert_eq!(linear_killed_density(0.0, 1.0, 0.5, 0.0, -1.0, 1.0, 1.5).unwrap(), 0.0);
        let want = 2.0 * 0.5 * 1f64.sinh().powi(2) / 2f64.sinh();
        assert!(close(linear_killed_density(0.0, 1.0, 0.5, 0.0, -1.0, 1.0, 0.0).unwrap(), want, 1e-15));
        assert!((want - 0.380797).abs() < 1e-6);
    }

    #[test]
    fn killed_mass_plus_exit_is_one() {
        let (mu, sigma, q, a, x, b) = (0.6, 0.9, 1.3, -0.5, 0.4, 1.1);
        let k = 20000;
        let h = (b - a) / k as f64;
        let mut acc = 0.0;
        for j in 0..k {
            let z0 = a + j as f64 * h;
            let f = |z: f64| linear_killed_density(mu, sigma, q, x, a, b, z).unwrap();
            acc += h / 6.0 * (f(z0) + 4.0 * f(z0 + h / 2.0) + f(z0 + h));
        }
        let lo = linear_two_sided_laplace(mu, sigma, q, x, a, b, Barrier::Lower).unwrap();
        let up = linear_two_sided_laplace(mu, sigma, q, x, a, b, Barrier::Upper).unwrap();
        assert!((acc + lo + up - 1.0).abs() < 1e-9);
    }

    #[test]
    fn kernel_decomposition() {
        // resolvent = killed part + exit at each barrier followed by a fresh
        // resolvent from that barrier
        let (mu, sigma, q, a, b) = (-0.4, 1.1, 0.9, -1.0, 0.8);
        for (x, z) in [(0.0, 0.3), (0.5, -0.9), (-0.2, 2.0), (0.1, -3.0)] {
            let full = linear_resolvent_density(mu, sigma, q, x, z).unwrap();
            let killed = linear_killed_density(mu, sigma, q, x, a, b, z).unwrap();
            let lo = linear_two_sided_laplace(mu, sigma, q, x, a, b, Barrier::Lower).unwrap();
            let up = linear_two_sided_laplace(mu, sigma, q, x, a, b, Barrier::Upper).unwrap();
            let rest = lo * linear_resolvent_density(mu, sigma, q, a, z).unwrap()
                + up * linear_resolvent_density(mu, sigma, q, b, z).unwrap();
            assert!(close(killed + rest, full, 1e-10), "{x} {z}");
        }
    }

    #[test]
    fn onesided_examples() {
        assert_eq!(linear_killed_onesided_density(0.0, 1.0, 0.5, 1.0, 0.0, 0.0).unwrap(), 0.0);
        let want = 0.5 * (1.0 - (-2f64).exp());
        assert!(close(linear_killed_onesided_density(0.0, 1.0, 0.5, 1.0, 0.0, 1.0).unwrap(), want, 1e-15));
        assert!((want - 0.432332).abs() < 1e-6);
        // limit of the two-sided kernel as the upper barrier recedes
        for (x, z) in [(0.5, 1.5), (2.0, 0.3)] {
            let one = linear_killed_onesided_density(0.3, 0.7, 1.1, x, 0.0, z).unwrap();
            let two = linear_killed_density(0.3, 0.7, 1.1, x, 0.0, 200.0, z).unwrap();
            assert!(close(two, one, 1e-12));
        }
        // barrier above the start
        let one = linear_killed_onesided_density(0.3, 0.7, 1.1, -0.5, 0.0, -1.0).unwrap();
        let two = linear_killed_density(0.3, 0.7, 1.1, -0.5, -200.0, 0.0, -1.0).unwrap();
        assert!(close(two, one, 1e-12));
        assert_eq!(linear_killed_onesided_density(0.3, 0.7, 1.1, -0.5, 0.0, 0.5).unwrap(), 0.0);
    }
}
