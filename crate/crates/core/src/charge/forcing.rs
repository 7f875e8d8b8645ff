//! The forcing term f(t) = 4π ∫_0^t I(t-τ) (U0(τ) ψ0)(0) dτ.
//!
//! With ψ0 = φ + (q0/2π) K0 the integrand splits into the regular evolution,
//! the logarithmic kernel J and smooth remainders. I applied to J is exactly 1,
//! so f = q0 + I[B] where B is bounded and continuous:
//!
//! ```text
//! B(τ) = 4π (U0 φ)(0) + q0 (e^{iλτ} - 1) J(τ) + q0 e^{iλτ} (Q(λ;τ)/π - ln λ)
//! ```

use crate::error::Result;
use crate::field::{free_regular_at_center, free_singular_at_center, InitialDatum};
use crate::ops::{SampledSignal, TimeGrid};
use crate::quad::gauss_legendre;
use crate::specfun::{q_series, EvalPolicy, VolterraKernel, EULER_GAMMA};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Levels of dyadic grading toward both ends of [0, t].
const DYADIC_LEVELS: i32 = 46;

/// Bounded integrand B(τ) of the forcing.
pub fn forcing_density(datum: &InitialDatum, tau: f64, policy: &EvalPolicy) -> Result<Complex64> {
    let lam = datum.lambda;
    let a1 = free_regular_at_center(datum, tau)? * (4.0 * PI);
    if datum.q0.norm() == 0.0 {
        return Ok(a1);
    }
    let a2 = if tau == 0.0 {
        let q = q_series(lam, 0.0, policy)?;
        q / PI - lam.ln()
    } else {
        let s = free_singular_at_center(lam, tau, policy)?;
        // (e^{iλτ} - 1) J(τ), with e^{iλτ} - 1 formed without cancellation
        let x = lam * tau;
        let em1 = Complex64::new(-2.0 * (0.5 * x).sin().powi(2), x.sin());
        em1 * (-EULER_GAMMA - tau.ln()) + s.smooth * 2.0
    };
    Ok(a1 + datum.q0 * a2)
}

/// f(t) at a single time.
pub fn forcing_at(
    datum: &InitialDatum,
    t: f64,
    kernel: &VolterraKernel,
    policy: &EvalPolicy,
) -> Result<Complex64> {
    if t == 0.0 {
        return Ok(datum.q0);
    }
    let g = gauss_legendre(8);
    // ∫_0^t I(u) B(t - u) du, panels graded dyadically toward u = 0 and u = t
    let mut breaks = Vec::with_capacity(2 * DYADIC_LEVELS as usize + 2);
    let eps = t * 0.5f64.powi(DYADIC_LEVELS);
    for j in (1..=DYADIC_LEVELS).rev() {
        breaks.push(t * 0.5f64.powi(j));
    }
    for j in 2..=DYADIC_LEVELS {
        breaks.push(t - t * 0.5f64.powi(j));
    }
    breaks.push(t);
    let mut acc = forcing_density(datum, t - 0.5 * eps, policy)? * kernel.n_unchecked(eps);
    for w in breaks.windows(2) {
        for (u, wt) in g.mapped(w[0], w[1]) {
            acc += forcing_density(datum, t - u, policy)? * (wt * kernel.i_unchecked(u));
        }
    }
    Ok(datum.q0 + acc)
}

/// f sampled on every node of a grid.
pub fn build_forcing(datum: &InitialDatum, grid: &TimeGrid, policy: &EvalPolicy) -> Result<SampledSignal> {
    datum.validate()?;
    policy.validate()?;
    let kernel = VolterraKernel::shared(policy.quad_nodes);
    let values: Result<Vec<Complex64>> = grid
        .nodes()
        .par_iter()
        .map(|&t| forcing_at(datum, t, &kernel, policy))
        .collect();
    SampledSignal::new(grid.clone(), values?)
}
