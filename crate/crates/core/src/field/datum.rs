use crate::error::{invalid, Error, Result};
use crate::specfun::EULER_GAMMA;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI};

/// κ = -2 (ln 2 - γ + iπ/4), the constant linear part of the charge equation.
pub const KAPPA: Complex64 = Complex64::new(-2.0 * (LN_2 - EULER_GAMMA), -PI / 2.0);

/// (γ - ln 2) / 2π, the λ = 1 constant of the boundary condition.
pub const BOUNDARY_CONST: f64 = (EULER_GAMMA - LN_2) / (2.0 * PI);

/// Nonlinearity α(q) = β0 |q|^{2σ}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub sigma: f64,
    pub beta0: f64,
    /// Must be set to run with 0 < σ < 1/2, where well-posedness is not proven.
    #[serde(default)]
    pub allow_experimental_sigma: bool,
}

impl ModelParams {
    pub fn new(sigma: f64, beta0: f64) -> Self {
        Self {
            sigma,
            beta0,
            allow_experimental_sigma: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(invalid("sigma", format!("{} must be finite and ≥ 0", self.sigma)));
        }
        if !self.beta0.is_finite() {
            return Err(invalid("beta0", "must be finite"));
        }
        if self.is_experimental() && !self.allow_experimental_sigma {
            return Err(invalid(
                "sigma",
                format!(
                    "σ = {} lies in (0, 1/2), outside the proven range; set allow_experimental_sigma",
                    self.sigma
                ),
            ));
        }
        Ok(())
    }

    /// True for 0 < σ < 1/2. σ = 0 is the linear case and is covered by the theory.
    pub fn is_experimental(&self) -> bool {
        self.sigma > 0.0 && self.sigma < 0.5
    }

    /// 4π β0 |q|^{2σ} q + κ q.
    #[inline]
    pub fn h(&self, q: Complex64) -> Complex64 {
        q * (4.0 * PI * self.beta0 * pow_abs(q, self.sigma) + KAPPA)
    }

    /// Wirtinger derivatives (∂h/∂q, ∂h/∂q̄).
    #[inline]
    pub fn dh(&self, q: Complex64) -> (Complex64, Complex64) {
        let s = self.sigma;
        let c = 4.0 * PI * self.beta0;
        let r2 = q.norm_sqr();
        let dq = Complex64::new(c * (s + 1.0) * pow_abs(q, s), 0.0) + KAPPA;
        let dqb = if s == 0.0 || r2 == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            q * q * (c * s * r2.powf(s - 1.0))
        };
        (dq, dqb)
    }

    /// β0 |q|^{2σ} + (γ - ln 2)/2π, the coefficient in the boundary condition.
    pub fn boundary_coefficient(&self, q: Complex64) -> f64 {
        self.beta0 * pow_abs(q, self.sigma) + BOUNDARY_CONST
    }

    /// Charge part of the energy: (β0/(σ+1) |q|^{2σ} + (γ - ln 2)/2π) |q|².
    pub fn charge_energy(&self, q: Complex64) -> f64 {
        (self.beta0 / (self.sigma + 1.0) * pow_abs(q, self.sigma) + BOUNDARY_CONST) * q.norm_sqr()
    }
}

/// |q|^{2σ}, with 0^0 = 1.
#[inline]
pub(crate) fn pow_abs(q: Complex64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        1.0
    } else {
        q.norm_sqr().powf(sigma)
    }
}

/// Radial Fourier profile of the regular part φ_{λ,0}, symmetric convention
/// φ̂(p) = (1/2π) ∫ e^{-ipx} φ(x) d²x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularProfile {
    /// φ̂(p) = a e^{-b p²}.
    Gaussian { a: Complex64, b: f64 },
    /// Samples on an increasing p-grid starting at 0, linearly interpolated,
    /// continued past the last node as v_last (p_last / p)^decay_exponent.
    Sampled {
        p: Vec<f64>,
        values: Vec<Complex64>,
        decay_exponent: f64,
    },
}

impl RegularProfile {
    pub fn zero() -> Self {
        RegularProfile::Gaussian {
            a: Complex64::new(0.0, 0.0),
            b: 1.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            RegularProfile::Gaussian { a, .. } => a.norm() == 0.0,
            RegularProfile::Sampled { values, .. } => values.iter().all(|v| v.norm() == 0.0),
        }
    }

    pub fn eval(&self, p: f64) -> Complex64 {
        match self {
            RegularProfile::Gaussian { a, b } => a * (-b * p * p).exp(),
            RegularProfile::Sampled {
                p: nodes,
                values,
                decay_exponent,
            } => {
                let last = nodes.len() - 1;
                if p >= nodes[last] {
                    return values[last] * (nodes[last] / p).powf(*decay_exponent);
                }
                let i = nodes.partition_point(|&x| x <= p).max(1) - 1;
                let s = (p - nodes[i]) / (nodes[i + 1] - nodes[i]);
                values[i] * (1.0 - s) + values[i + 1] * s
            }
        }
    }
}

/// Initial datum ψ0 = φ_{λ,0} + (q0 / 2π) K0(√λ |x|).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialDatum {
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    pub q0: Complex64,
    pub regular: RegularProfile,
    /// Integrability exponent ε of (1 + p^ε) φ̂.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_lambda() -> f64 {
    1.0
}

fn default_epsilon() -> f64 {
    0.5
}

impl InitialDatum {
    pub fn new(lambda: f64, q0: Complex64, regular: RegularProfile) -> Result<Self> {
        let d = Self {
            lambda,
            q0,
            regular,
            epsilon: default_epsilon(),
        };
        d.validate()?;
        Ok(d)
    }

    pub fn gaussian(q0: Complex64, a: Complex64, b: f64) -> Result<Self> {
        Self::new(1.0, q0, RegularProfile::Gaussian { a, b })
    }

    /// λ = 1 Gaussian datum whose amplitude is fixed by the boundary condition
    /// at t = 0, so that ψ0 lies in the domain of the nonlinear operator:
    /// a / (2b) = (β0 |q0|^{2σ} + (γ - ln 2)/2π) q0.
    pub fn gaussian_in_domain(q0: Complex64, b: f64, params: &ModelParams) -> Result<Self> {
        let a = q0 * (2.0 * b * params.boundary_coefficient(q0));
        Self::gaussian(q0, a, b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(invalid("lambda", format!("{} must be positive", self.lambda)));
        }
        if !(self.q0.re.is_finite() && self.q0.im.is_finite()) {
            return Err(invalid("q0", "must be finite"));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(invalid("epsilon", "must be positive"));
        }
        match &self.regular {
            RegularProfile::Gaussian { a, b } => {
                if !(*b > 0.0 && b.is_finite()) {
                    return Err(invalid("regular.b", "Gaussian width must be positive"));
                }
                if !(a.re.is_finite() && a.im.is_finite()) {
                    return Err(invalid("regular.a", "must be finite"));
                }
            }
            RegularProfile::Sampled { p, values, .. } => {
                if p.len() < 2 || p.len() != values.len() {
                    return Err(invalid("regular.p", "need ≥ 2 nodes and matching values"));
                }
                if p[0] != 0.0 || p.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(invalid("regular.p", "must start at 0 and increase strictly"));
                }
                if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
                    return Err(invalid("regular.values", "must be finite"));
                }
                self.tail_bound()?;
            }
        }
        Ok(())
    }

    /// Bound on ∫_{p_last}^∞ (1 + p^ε) |φ̂(p)| p dp for the declared tail.
    pub fn tail_bound(&self) -> Result<f64> {
        match &self.regular {
            RegularProfile::Gaussian { .. } => Ok(0.0),
            RegularProfile::Sampled {
                p,
                values,
                decay_exponent: alpha,
            } => {
                let eps = self.epsilon;
                if !(*alpha > 2.0 + eps) {
                    return Err(Error::TailBound(format!(
                        "decay exponent {alpha} must exceed 2 + ε = {}",
                        2.0 + eps
                    )));
                }
                let pl = *p.last().unwrap();
                let v = values.last().unwrap().norm();
                Ok(v * pl * pl * (1.0 / (alpha - 2.0) + pl.powf(eps) / (alpha - 2.0 - eps)))
            }
        }
    }

    /// ψ̂0(p) = φ̂_{λ,0}(p) + q0 / (2π (p² + λ)).
    pub fn psi_hat(&self, p: f64) -> Complex64 {
        self.regular.eval(p) + self.q0 / (2.0 * PI * (p * p + self.lambda))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_value() {
        assert!((KAPPA.re + 2.0 * (LN_2 - EULER_GAMMA)).abs() < 1e-15);
        assert!((KAPPA.im + PI / 2.0).abs() < 1e-15);
        // iπ/2 + κ = 2(γ - ln 2)
        let s = KAPPA + Complex64::new(0.0, PI / 2.0);
        assert!((s.re - 2.0 * (EULER_GAMMA - LN_2)).abs() < 1e-15 && s.im.abs() < 1e-15);
    }

    #[test]
    fn wirtinger_derivatives_match_differences() {
        let p = ModelParams::new(1.3, -0.7);
        let q = Complex64::new(0.8, -0.4);
        let (a, b) = p.dh(q);
        let e = 1e-7;
        for dir in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
            let fd = (p.h(q + dir * e) - p.h(q - dir * e)) / (2.0 * e);
            let lin = a * dir + b * dir.conj();
            assert!((fd - lin).norm() < 1e-6);
        }
    }

    #[test]
    fn experimental_sigma_needs_flag() {
        assert!(ModelParams::new(0.25, 1.0).validate().is_err());
        let mut p = ModelParams::new(0.25, 1.0);
        p.allow_experimental_sigma = true;
        assert!(p.validate().is_ok());
        assert!(ModelParams::new(0.0, 1.0).validate().is_ok());
        assert!(ModelParams::new(-1.0, 1.0).validate().is_err());
    }

    #[test]
    fn datum_validation() {
        let q0 = Complex64::new(1.0, 0.0);
        assert!(InitialDatum::new(0.0, q0, RegularProfile::zero()).is_err());
        let bad = RegularProfile::Sampled {
            p: vec![0.0, 1.0, 2.0],
            values: vec![q0; 3],
            decay_exponent: 2.2,
        };
        assert!(matches!(InitialDatum::new(1.0, q0, bad), Err(Error::TailBound(_))));
        let ok = RegularProfile::Sampled {
            p: vec![0.0, 1.0, 2.0],
            values: vec![q0; 3],
            decay_exponent: 4.0,
        };
        let d = InitialDatum::new(1.0, q0, ok).unwrap();
        assert!(d.tail_bound().unwrap().is_finite());
        assert!((d.regular.eval(4.0) - q0 / 16.0).norm() < 1e-15);
    }

    #[test]
    fn in_domain_amplitude() {
        let p = ModelParams::new(1.0, 1.0);
        let d = InitialDatum::gaussian_in_domain(Complex64::new(1.0, 0.0), 1.0, &p).unwrap();
        match d.regular {
            RegularProfile::Gaussian { a, b } => {
                assert!((a.re / b - 2.0 * (1.0 + BOUNDARY_CONST)).abs() < 1e-14);
            }
            _ => unreachable!(),
        }
    }
}
