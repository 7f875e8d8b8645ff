//! Brute-force references. Everything here is built from defining integrals
//! and the adaptive Gauss-Kronrod rule in [`gk`], never from the evaluation
//! code it is meant to check.

pub mod gk;

use crate::error::{domain, Error, Result};
use crate::ops::{SampledSignal, TimeGrid};
use num_complex::Complex64;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;
use std::collections::HashMap;
use std::f64::consts::PI;

const GAMMA_E: f64 = 0.577_215_664_901_532_860_6;

/// Side-by-side record of an oracle value and the value under test.
#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub quantity: String,
    pub oracle: Complex64,
    pub main: Complex64,
    pub abs_err: f64,
    pub rel_err: f64,
    pub budget: usize,
}

impl OracleReport {
    pub fn new(quantity: impl Into<String>, oracle: Complex64, main: Complex64, budget: usize) -> Self {
        let abs_err = (oracle - main).norm();
        let rel_err = abs_err / oracle.norm().max(f64::MIN_POSITIVE);
        Self {
            quantity: quantity.into(),
            oracle,
            main,
            abs_err,
            rel_err,
            budget,
        }
    }

    pub fn real(quantity: impl Into<String>, oracle: f64, main: f64, budget: usize) -> Self {
        Self::new(quantity, Complex64::new(oracle, 0.0), Complex64::new(main, 0.0), budget)
    }

    pub fn passes(&self, rel_tol: f64) -> bool {
        self.rel_err <= rel_tol
    }
}

/// Integrate exp(g(s)) over s ∈ (0, ∞) where g is concave-ish with a single peak.
fn peaked_integral<G: Fn(f64) -> f64>(g: G, budget: usize) -> f64 {
    // locate the peak on a log grid
    let mut s_peak = 1e-8;
    let mut g_peak = f64::NEG_INFINITY;
    let mut s = 1e-8;
    while s < 5000.0 {
        let v = g(s);
        if v > g_peak {
            g_peak = v;
            s_peak = s;
        }
        s *= 1.02;
    }
    let mut breaks = vec![0.0];
    let mut b = s_peak * 1e-12;
    while b < s_peak {
        breaks.push(b);
        b *= 4.0;
    }
    breaks.push(s_peak);
    let mut step = s_peak.max(0.05);
    let mut hi = s_peak;
    loop {
        hi += step;
        breaks.push(hi);
        if g(hi) < g_peak - 80.0 {
            break;
        }
        step *= 1.5;
    }
    let scale = g_peak;
    let (v, _) = gk::integrate(|s| (g(s) - scale).exp(), &breaks, 0.0, 1e-14, budget);
    v * scale.exp()
}

/// I(t) = ∫_0^∞ t^{s-1} / Γ(s) ds by adaptive quadrature.
pub fn quad_defining_i(t: f64, budget: usize) -> Result<f64> {
    if !(t > 0.0) {
        return Err(domain("quad_defining_i", format!("t = {t}")));
    }
    let lt = t.ln();
    Ok(peaked_integral(|s| (s - 1.0) * lt - ln_gamma(s), budget))
}

/// N(t) = ∫_0^∞ t^s / Γ(s + 1) ds.
pub fn quad_defining_n(t: f64, budget: usize) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(domain("quad_defining_n", format!("t = {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let lt = t.ln();
    Ok(peaked_integral(|s| s * lt - ln_gamma(s + 1.0), budget))
}

/// ∫_0^t N = ∫_0^∞ t^{s+1} / Γ(s + 2) ds.
pub fn quad_defining_n2(t: f64, budget: usize) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(domain("quad_defining_n2", format!("t = {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let lt = t.ln();
    Ok(peaked_integral(|s| (s + 1.0) * lt - ln_gamma(s + 2.0), budget))
}

/// ∫_a^b I(s) ds by nested quadrature over the oracle I. The piece next to
/// s = 0 is handled by exchanging the order of integration.
pub fn nested_integral_i(a: f64, b: f64, budget: usize) -> Result<f64> {
    if !(0.0 <= a && a <= b) {
        return Err(domain("nested_integral_i", format!("[{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    let (lo, head) = if a == 0.0 {
        let delta = b * 1e-6;
        (delta, quad_defining_n(delta, budget)?)
    } else {
        (a, 0.0)
    };
    let mut breaks = vec![lo];
    let mut x = lo * 4.0;
    while x < b {
        breaks.push(x);
        x *= 4.0;
    }
    breaks.push(b);
    let (v, _) = gk::integrate(
        |s| quad_defining_i(s, budget).unwrap_or(f64::NAN),
        &breaks,
        0.0,
        1e-11,
        budget,
    );
    Ok(head + v)
}

/// (I f)(t) = ∫_0^t I(u) f(t - u) du by nested quadrature. The first piece
/// u ∈ [0, δ] uses f(t - δ/2) N(δ).
pub fn nested_apply_i<F: Fn(f64) -> Complex64>(f: F, t: f64, budget: usize) -> Result<Complex64> {
    if !(t > 0.0) {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let delta = t * 1e-10;
    let head = f(t - 0.5 * delta) * quad_defining_n(delta, budget)?;
    let mut breaks = vec![delta];
    let mut x = delta * 8.0;
    while x < 0.5 * t {
        breaks.push(x);
        x *= 8.0;
    }
    // grade toward u = t as well, where f may carry a τ log τ factor
    let mut tail = 0.5 * t;
    while tail > t * 1e-10 {
        breaks.push(t - tail);
        tail /= 8.0;
    }
    breaks.push(t);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let q = gk::integrate_c(
        |u| f(t - u) * quad_defining_i(u, budget).unwrap_or(f64::NAN),
        &breaks,
        0.0,
        1e-11,
        budget,
    );
    Ok(head + q.value)
}

/// K0(x) = ∫_0^∞ e^{-x cosh u} du.
pub fn k0_integral(x: f64, budget: usize) -> Result<f64> {
    if !(x > 0.0) {
        return Err(domain("k0_integral", format!("x = {x}")));
    }
    let upper = (1.0 + 60.0 / x).acosh();
    let mut breaks: Vec<f64> = (0..=16).map(|k| upper * k as f64 / 16.0).collect();
    breaks.dedup();
    let (v, _) = gk::integrate(|u| (-x * (u.cosh() - 1.0)).exp(), &breaks, 0.0, 1e-14, budget);
    Ok(v * (-x).exp())
}

/// (Si(x) - π/2, Ci(x)) from Si = ∫_0^x sin t / t, Ci = γ + ln x + ∫_0^x (cos t - 1)/t.
pub fn sici_integral(x: f64, budget: usize) -> Result<(f64, f64)> {
    if !(x > 0.0) {
        return Err(domain("sici_integral", format!("x = {x}")));
    }
    let n = (x / PI).ceil().max(1.0) as usize;
    let breaks: Vec<f64> = (0..=n).map(|k| x * k as f64 / n as f64).collect();
    let (s, _) = gk::integrate(
        |t| if t == 0.0 { 1.0 } else { t.sin() / t },
        &breaks,
        1e-16,
        1e-15,
        budget,
    );
    let (c, _) = gk::integrate(
        |t| if t == 0.0 { 0.0 } else { (t.cos() - 1.0) / t },
        &breaks,
        1e-16,
        1e-15,
        budget,
    );
    Ok((s - PI / 2.0, GAMMA_E + x.ln() + c))
}

/// ∫_{R²} e^{-ip²t} / (p² + λ) d²p for λ > 0, t > 0, by rotating the radial
/// contour onto the negative imaginary axis: -iπ ∫_0^∞ e^{-yt} / (λ - iy) dy.
pub fn momentum_resolvent_integral(lambda: f64, t: f64, budget: usize) -> Result<Complex64> {
    if !(lambda > 0.0 && t > 0.0) {
        return Err(domain("momentum_resolvent_integral", format!("λ = {lambda}, t = {t}")));
    }
    let top = 60.0 / t;
    let mut breaks = vec![0.0];
    let mut b = lambda.min(1.0 / t) * 1e-3;
    while b < top {
        breaks.push(b);
        b *= 3.0;
    }
    breaks.push(top);
    let q = gk::integrate_c(
        |y| Complex64::new((-y * t).exp(), 0.0) / Complex64::new(lambda, -y),
        &breaks,
        0.0,
        1e-14,
        budget,
    );
    Ok(Complex64::new(0.0, -PI) * q.value)
}

/// Q(λ; t) recovered from the momentum integral.
pub fn q_from_momentum(lambda: f64, t: f64, budget: usize) -> Result<Complex64> {
    let m = momentum_resolvent_integral(lambda, t, budget)?;
    let phase = Complex64::new(0.0, -lambda * t).exp();
    Ok(phase * m + PI * (GAMMA_E + lambda.ln() + t.ln()))
}

/// (U0(t) φ)(0) for φ̂(p) = a e^{-b p²} with the symmetric Fourier convention.
pub fn gaussian_free_evolution(a: Complex64, b: f64, t: f64) -> Complex64 {
    // (1/2π) ∫ e^{-(b + it) p²} d²p = 1 / (2 (b + it))
    a / (2.0 * Complex64::new(b, t))
}

/// Linear product weights built from oracle N and N2 values.
struct OracleWeights {
    n: HashMap<u64, (f64, f64)>,
    budget: usize,
}

impl OracleWeights {
    fn values(&mut self, d: f64) -> Result<(f64, f64)> {
        if d <= 0.0 {
            return Ok((0.0, 0.0));
        }
        if let Some(v) = self.n.get(&d.to_bits()) {
            return Ok(*v);
        }
        let v = (quad_defining_n(d, self.budget)?, quad_defining_n2(d, self.budget)?);
        self.n.insert(d.to_bits(), v);
        Ok(v)
    }

    /// Weights (on q_k, q_{k+1}) of cell [t_k, t_{k+1}] for target t_n.
    fn cell(&mut self, tn: f64, tk: f64, tk1: f64) -> Result<(f64, f64)> {
        let (n_a, n2_a) = self.values(tn - tk)?;
        let (n_b, n2_b) = self.values(tn - tk1)?;
        let h = tk1 - tk;
        let total = n_a - n_b;
        let right = (n2_a - n2_b - h * n_b) / h;
        Ok((total - right, right))
    }
}

/// Result of the global Picard iteration.
#[derive(Debug, Clone)]
pub struct PicardOutcome {
    pub q: SampledSignal,
    pub iterations: usize,
    /// Successive update norms, one per sweep.
    pub updates: Vec<f64>,
}

/// Solve q + c I[q] = f on the whole grid at once by Picard iteration of the
/// affine map q ↦ f - c I[q]. Uniform grids share one Toeplitz weight table.
pub fn picard_linear(
    f: &SampledSignal,
    c: Complex64,
    grid_dense: &TimeGrid,
    tol: f64,
    max_iter: usize,
) -> Result<PicardOutcome> {
    if f.grid().nodes() != grid_dense.nodes() {
        return Err(Error::GridMismatch("forcing must live on the dense grid".into()));
    }
    let t = grid_dense.nodes();
    let n = t.len();
    let budget = 400;
    let mut w = OracleWeights { n: HashMap::new(), budget };
    let steps: Vec<f64> = t.windows(2).map(|p| p[1] - p[0]).collect();
    let h0 = steps[0];
    let uniform = steps.iter().all(|h| (h - h0).abs() <= 1e-9 * h0);
    let rows = if uniform {
        // on a uniform grid cell weights only depend on the index distance
        let mut lr = Vec::with_capacity(n);
        for j in 1..n {
            lr.push(w.cell(j as f64 * h0, 0.0, h0)?);
        }
        Rows::Toeplitz(lr)
    } else {
        let mut rows = Vec::with_capacity(n);
        for m in 0..n {
            let mut row = vec![0.0; m + 1];
            for k in 0..m {
                let (l, r) = w.cell(t[m], t[k], t[k + 1])?;
                row[k] += l;
                row[k + 1] += r;
            }
            rows.push(row);
        }
        Rows::Dense(rows)
    };
    let fv = f.values();
    let mut q = fv.to_vec();
    let mut updates = Vec::new();
    let mut iterations = 0;
    // The diagonal weight alone gives |c w_mm| > 1, so the iteration runs on
    // the rescaled equation q_m = (f_m - c Σ_{k≠m} w_mk q_k) / (1 + c w_mm).
    // Its global transient is still huge, so it sweeps time blocks, each short
    // enough that the block map contracts by at least 1/2.
    let diag: Vec<Complex64> = (0..n).map(|m| 1.0 + c * rows.get(m, m)).collect();
    let mut start = 1;
    while start < n {
        let mut end = start + 1;
        while end < n {
            let worst = (start..=end)
                .map(|m| (start..m.min(end + 1)).map(|k| rows.get(m, k).abs()).sum::<f64>() / diag[m].norm())
                .fold(0.0, f64::max);
            if c.norm() * worst > 0.5 {
                break;
            }
            end += 1;
        }
        // history from already converged nodes stays fixed during the block
        let hist: Vec<Complex64> = (start..end)
            .map(|m| (0..start).map(|k| q[k] * rows.get(m, k)).sum())
            .collect();
        let mut converged = false;
        for _ in 0..max_iter {
            iterations += 1;
            let next: Vec<Complex64> = (start..end)
                .map(|m| {
                    let s: Complex64 = hist[m - start] + (start..m).map(|k| q[k] * rows.get(m, k)).sum::<Complex64>();
                    (fv[m] - c * s) / diag[m]
                })
                .collect();
            let upd = next
                .iter()
                .zip(&q[start..end])
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            q[start..end].copy_from_slice(&next);
            updates.push(upd);
            if !upd.is_finite() {
                break;
            }
            if upd <= tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Convergence {
                func: "picard_linear",
                achieved: updates.last().copied().unwrap_or(f64::NAN),
                requested: tol,
            });
        }
        start = end;
    }
    Ok(PicardOutcome {
        q: SampledSignal::new(grid_dense.clone(), q)?,
        iterations,
        updates,
    })
}

/// Node weights of the product rule, row m = target node.
enum Rows {
    /// Cell weights (left, right) indexed by n - k - 1.
    Toeplitz(Vec<(f64, f64)>),
    Dense(Vec<Vec<f64>>),
}

impl Rows {
    fn get(&self, m: usize, k: usize) -> f64 {
        match self {
            Rows::Dense(r) => r[m][k],
            Rows::Toeplitz(lr) => {
                if k > m || m == 0 {
                    return 0.0;
                }
                let j = m - k;
                let right = if j < m { lr[j].1 } else { 0.0 };
                let left = if j >= 1 { lr[j - 1].0 } else { 0.0 };
                // node m only receives the right weight of the last cell
                if j == 0 {
                    lr[0].1
                } else {
                    left + right
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defining_integrals_are_consistent() {
        // N' = I and N2' = N by central differences of the oracle itself
        let t = 0.7;
        let h = 1e-4;
        let i = quad_defining_i(t, 400).unwrap();
        let dn = (quad_defining_n(t + h, 400).unwrap() - quad_defining_n(t - h, 400).unwrap()) / (2.0 * h);
        assert!((dn - i).abs() < 1e-7 * i);
        let n = quad_defining_n(t, 400).unwrap();
        let dn2 = (quad_defining_n2(t + h, 400).unwrap() - quad_defining_n2(t - h, 400).unwrap()) / (2.0 * h);
        assert!((dn2 - n).abs() < 1e-7 * n);
    }

    #[test]
    fn k0_known_value() {
        assert!((k0_integral(1.0, 400).unwrap() - 0.421_024_438_240_708_3).abs() < 1e-13);
    }

    #[test]
    fn sici_known_value() {
        let (s, c) = sici_integral(1.0, 400).unwrap();
        assert!((s + PI / 2.0 - 0.946_083_070_367_183).abs() < 1e-13);
        assert!((c - 0.337_403_922_900_968_1).abs() < 1e-13);
    }

    #[test]
    fn gaussian_evolution_at_zero() {
        let a = Complex64::new(2.0, 0.0);
        assert!((gaussian_free_evolution(a, 1.0, 0.0) - 1.0).norm() < 1e-15);
    }

    #[test]
    fn picard_zero_forcing() {
        let g = TimeGrid::uniform(0.25, 33).unwrap();
        let f = SampledSignal::zeros(g.clone());
        let out = picard_linear(&f, Complex64::new(3.0, 1.0), &g, 1e-14, 10).unwrap();
        assert!(out.q.values().iter().all(|v| v.norm() == 0.0));
    }
}
