//! Integrated form of the inversion identity for a solved charge.
//!
//! J applied to q + I[h(q)] = f gives, since J∘I is integration,
//!
//! ```text
//! J[q](t) + ∫_0^t h(q) = 4π ∫_0^t (U0(τ) ψ0)(0) dτ
//! ```
//!
//! The right side is integrated directly from the free evolution at the
//! center, so the check does not reuse the forcing.

use super::solver::ChargeTrajectory;
use crate::error::Result;
use crate::field::{free_regular_at_center, free_singular_at_center, InitialDatum, ModelParams};
use crate::ops::{apply_j, cumulative, Rule};
use crate::quad::gauss_legendre;
use crate::specfun::EvalPolicy;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Dyadic levels toward τ = 0 in the first cell, where (U0 ψ0)(0) has a log singularity.
const FIRST_CELL_LEVELS: i32 = 40;

fn free_at_center(datum: &InitialDatum, tau: f64, policy: &EvalPolicy) -> Result<Complex64> {
    let mut v = free_regular_at_center(datum, tau)? * (4.0 * PI);
    if datum.q0.norm() > 0.0 {
        v += datum.q0 * 2.0 * free_singular_at_center(datum.lambda, tau, policy)?.total();
    }
    Ok(v)
}

/// max_n |J[q](t_n) + ∫_0^{t_n} h(q) - 4π ∫_0^{t_n} (U0 ψ0)(0)|.
pub fn inversion_identity_residual(
    datum: &InitialDatum,
    params: &ModelParams,
    traj: &ChargeTrajectory,
    policy: &EvalPolicy,
) -> Result<f64> {
    let q = &traj.q;
    let t = q.grid().nodes();
    if t.len() < 2 {
        return Ok(0.0);
    }
    let jq = apply_j(q, Rule::Linear)?;
    let hq = q.map(|v| params.h(v))?;
    let ih = cumulative(&hq, Rule::Linear);
    let g = gauss_legendre(8);
    let mut rhs = Complex64::new(0.0, 0.0);
    let mut worst: f64 = 0.0;
    for k in 0..t.len() - 1 {
        let (a, b) = (t[k], t[k + 1]);
        if k == 0 {
            let mut hi = b;
            for _ in 0..FIRST_CELL_LEVELS {
                let lo = 0.5 * hi;
                for (x, w) in g.mapped(lo, hi) {
                    rhs += free_at_center(datum, x, policy)? * w;
                }
                hi = lo;
            }
        } else {
            for (x, w) in g.mapped(a, b) {
                rhs += free_at_center(datum, x, policy)? * w;
            }
        }
        let lhs = jq.values()[k + 1] + ih[k + 1];
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}
