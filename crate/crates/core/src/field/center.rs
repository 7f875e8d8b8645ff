//! Free evolution evaluated at the interaction center.

use super::datum::{InitialDatum, RegularProfile};
use crate::error::{domain, Error, Result};
use crate::quad::gauss_legendre;
use crate::specfun::{q_series, EvalPolicy, EULER_GAMMA};
use num_complex::Complex64;
use std::f64::consts::PI;

/// (U0(t) φ_{λ,0})(0) = ∫_0^∞ e^{-ip²t} φ̂(p) p dp.
pub fn free_regular_at_center(datum: &InitialDatum, t: f64) -> Result<Complex64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(domain("free_regular_at_center", format!("t = {t}")));
    }
    match &datum.regular {
        RegularProfile::Gaussian { a, b } => Ok(a / (2.0 * Complex64::new(*b, t))),
        RegularProfile::Sampled {
            p,
            values,
            decay_exponent,
        } => sampled_at_center(p, values, *decay_exponent, t),
    }
}

fn sampled_at_center(p: &[f64], values: &[Complex64], alpha: f64, t: f64) -> Result<Complex64> {
    let g = gauss_legendre(8);
    let phase = |x: f64| Complex64::new(0.0, -x * x * t).exp();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..p.len() - 1 {
        let (a, b) = (p[i], p[i + 1]);
        let pieces = (((b * b - a * a) * t / 2.0).ceil() as usize).max(1);
        for j in 0..pieces {
            let lo = a + (b - a) * j as f64 / pieces as f64;
            let hi = a + (b - a) * (j + 1) as f64 / pieces as f64;
            acc += g.integrate_c(lo, hi, |x| {
                let s = (x - a) / (b - a);
                (values[i] * (1.0 - s) + values[i + 1] * s) * phase(x) * x
            });
        }
    }
    // algebraic tail v (P/p)^α
    let pl = *p.last().unwrap();
    let vl = *values.last().unwrap();
    if vl.norm() > 0.0 {
        let want = 1e-12;
        let bound = |x: f64| vl.norm() * pl.powf(alpha) * x.powf(2.0 - alpha) / (alpha - 2.0);
        let mut top = pl * 2.0;
        while bound(top) > want && top < pl * 1e4 {
            top *= 2.0;
        }
        if bound(top) > 1e-8 {
            return Err(Error::TailBound(format!(
                "profile tail beyond p = {top:.3e} bounded only by {:.3e}",
                bound(top)
            )));
        }
        let mut lo = pl;
        while lo < top {
            let hi = (lo + (2.0 / (t * lo).max(1e-300)).min(lo)).min(top);
            acc += g.integrate_c(lo, hi, |x| vl * (pl / x).powf(alpha) * phase(x) * x);
            lo = hi;
        }
    }
    Ok(acc)
}

/// (U0(t) K0(√λ |·|))(0) split into its logarithmic and smooth parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularAtCenter {
    /// (1/2) e^{iλt} [-γ - ln t].
    pub log_part: Complex64,
    /// (1/2) e^{iλt} [-ln λ + Q(λ; t)/π].
    pub smooth: Complex64,
}

impl SingularAtCenter {
    pub fn total(&self) -> Complex64 {
        self.log_part + self.smooth
    }
}

pub fn free_singular_at_center(lambda: f64, t: f64, policy: &EvalPolicy) -> Result<SingularAtCenter> {
    if !(lambda > 0.0) || !(t > 0.0) || !t.is_finite() {
        return Err(domain("free_singular_at_center", format!("λ = {lambda}, t = {t}")));
    }
    let phase = Complex64::new(0.0, lambda * t).exp() * 0.5;
    let q = q_series(lambda, t, policy)?;
    Ok(SingularAtCenter {
        log_part: phase * (-EULER_GAMMA - t.ln()),
        smooth: phase * (q / PI - lambda.ln()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_closed_form() {
        let a = Complex64::new(1.5, -0.5);
        let d = InitialDatum::gaussian(Complex64::new(0.0, 0.0), a, 2.0).unwrap();
        let v0 = free_regular_at_center(&d, 0.0).unwrap();
        assert!((v0 - a / 4.0).norm() < 1e-15);
        let v = free_regular_at_center(&d, 3.0).unwrap();
        assert!((v.norm() - a.norm() / (2.0 * (4.0f64 + 9.0).sqrt())).abs() < 1e-15);
    }

    #[test]
    fn sampled_matches_gaussian() {
        let b = 0.8;
        let p: Vec<f64> = (0..=4000).map(|i| i as f64 * 0.002).collect();
        let values = p.iter().map(|&x| Complex64::new((-b * x * x).exp(), 0.0)).collect();
        let s = InitialDatum::new(
            1.0,
            Complex64::new(0.0, 0.0),
            RegularProfile::Sampled {
                p,
                values,
                decay_exponent: 40.0,
            },
        )
        .unwrap();
        let g = InitialDatum::gaussian(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), b).unwrap();
        for t in [0.0, 0.5, 2.0] {
            let x = free_regular_at_center(&s, t).unwrap();
            let y = free_regular_at_center(&g, t).unwrap();
            assert!((x - y).norm() < 1e-6, "t={t}: {x} {y}");
        }
    }

    #[test]
    fn singular_part_log_behaviour() {
        let p = EvalPolicy::default();
        for t in [1e-3, 1e-6, 1e-9] {
            let s = free_singular_at_center(1.0, t, &p).unwrap();
            let bounded = s.total() + 0.5 * t.ln();
            assert!(bounded.norm() < 3.0);
        }
        assert!(free_singular_at_center(1.0, 0.0, &p).is_err());
    }

    #[test]
    fn small_lambda_remainder() {
        let p = EvalPolicy::default();
        let lam = 1e-9;
        let s = free_singular_at_center(lam, 1.0, &p).unwrap();
        let r = s.smooth + 0.5 * lam.ln();
        assert!((r - Complex64::new(0.0, -PI / 4.0)).norm() < 1e-6);
    }
}
