//! Momentum-space reconstruction of ψ_t from the charge and the conserved
//! quantities.
//!
//! ψ̂_t(p) = e^{-ip²t} ψ̂0(p) + (i/2π) ∫_0^t e^{-ip²(t-τ)} q(τ) dτ
//!
//! is advanced cell by cell: with q linear on a cell of width h and z = p²h,
//! the cell integral is h [q_{n+1} E0(z) + (q_n - q_{n+1}) E1(z)] where
//! E0 = ∫_0^1 e^{-izx} dx and E1 = ∫_0^1 x e^{-izx} dx. Momenta live on a grid
//! uniform in ρ = p² so that the oscillation per panel is bounded by ρ-width·t.

use super::datum::{InitialDatum, ModelParams};
use crate::charge::ChargeTrajectory;
use crate::error::{invalid, Error, Result};
use crate::ops::SampledSignal;
use crate::quad::gauss_legendre;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Largest accepted phase change ρ-width · t across one momentum panel.
const MAX_PANEL_PHASE: f64 = 4.0;
/// Momentum nodes per chunk in the parallel sweep. Fixed so sums do not
/// depend on the thread count.
const CHUNK: usize = 256;

/// Radial momentum grid: Gauss-Legendre panels uniform in ρ = p² on [0, ρ_max].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumGrid {
    pub p: Vec<f64>,
    /// Weights for ∫ g(p) p dp, i.e. dρ / 2.
    pub weights: Vec<f64>,
    pub rho_max: f64,
    pub panel_width: f64,
}

impl MomentumGrid {
    pub fn new(rho_max: f64, panel_width: f64, order: usize) -> Result<Self> {
        if !(rho_max > 0.0 && rho_max.is_finite()) {
            return Err(invalid("rho_max", "must be positive"));
        }
        if !(panel_width > 0.0 && panel_width <= rho_max) {
            return Err(invalid("panel_width", "must lie in (0, rho_max]"));
        }
        let panels = (rho_max / panel_width).ceil() as usize;
        let width = rho_max / panels as f64;
        let g = gauss_legendre(order.max(2));
        let mut p = Vec::with_capacity(panels * g.nodes.len());
        let mut weights = Vec::with_capacity(p.capacity());
        for k in 0..panels {
            let a = k as f64 * width;
            for (rho, w) in g.mapped(a, a + width) {
                p.push(rho.sqrt());
                weights.push(0.5 * w);
            }
        }
        Ok(Self {
            p,
            weights,
            rho_max,
            panel_width: width,
        })
    }

    /// Panels of width min(1, 2/t_max) with 8 nodes each.
    pub fn for_horizon(t_max: f64, rho_max: f64) -> Result<Self> {
        Self::new(rho_max, (2.0 / t_max.max(1e-300)).min(1.0), 8)
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    fn check_horizon(&self, t: f64) -> Result<()> {
        if self.panel_width * t > MAX_PANEL_PHASE {
            return Err(Error::Resolution(format!(
                "momentum panel width {:.3e} too coarse for t = {t}: phase per panel {:.2} > {MAX_PANEL_PHASE}",
                self.panel_width,
                self.panel_width * t
            )));
        }
        Ok(())
    }
}

/// Radial samples of ψ̂_t.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralField {
    pub t: f64,
    pub p_nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub values: Vec<Complex64>,
    pub q_at_t: Complex64,
    /// dq/dt at t, used only by the large-momentum tail corrections.
    pub q_dot: Complex64,
    pub rho_max: f64,
}

impl SpectralField {
    /// CSV `p,re,im` with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("p,re,im\n");
        for (p, v) in self.p_nodes.iter().zip(&self.values) {
            s.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", p, v.re, v.im));
        }
        s
    }

    fn phi1(&self, i: usize) -> Complex64 {
        let rho = self.p_nodes[i] * self.p_nodes[i];
        self.values[i] - self.q_at_t / (2.0 * PI * (rho + 1.0))
    }
}

/// E0(z) = (1 - e^{-iz})/(iz) and E1(z) = (E0 - e^{-iz})/(iz), by series for small z.
#[inline]
fn cell_factors(z: f64) -> (Complex64, Complex64, Complex64) {
    let e = Complex64::new(z.cos(), -z.sin());
    if z.abs() < 0.5 {
        let mz = Complex64::new(0.0, -z);
        let mut term = Complex64::new(1.0, 0.0);
        let mut e0 = Complex64::new(0.0, 0.0);
        let mut e1 = Complex64::new(0.0, 0.0);
        for k in 0..20 {
            e0 += term / (k as f64 + 1.0);
            e1 += term / (k as f64 + 2.0);
            term = term * mz / (k as f64 + 1.0);
        }
        (e, e0, e1)
    } else {
        let iz = Complex64::new(0.0, z);
        let e0 = (1.0 - e) / iz;
        let e1 = (e0 - e) / iz;
        (e, e0, e1)
    }
}

/// dq/dt for the tail corrections, or 0 where the large-momentum expansion
/// does not apply: before the oscillating start-up terms average out
/// (t ρ_max < 10) or when q varies faster than ρ_max allows.
fn q_dot_at(q: &SampledSignal, n: usize, rho_max: f64) -> Complex64 {
    let t = q.grid().nodes();
    let v = q.values();
    let zero = Complex64::new(0.0, 0.0);
    if n == 0 || t[n] * rho_max < 10.0 {
        return zero;
    }
    let d = (v[n] - v[n - 1]) / (t[n] - t[n - 1]);
    if d.norm() > 0.1 * rho_max * v[n].norm() {
        zero
    } else {
        d
    }
}

/// Advance ψ̂ at one momentum through every cell, calling `visit(n, value)` at each node.
fn sweep_one<F: FnMut(usize, Complex64)>(datum: &InitialDatum, q: &SampledSignal, upto: usize, p: f64, mut visit: F) {
    let t = q.grid().nodes();
    let v = q.values();
    let rho = p * p;
    let mut g = datum.psi_hat(p);
    visit(0, g);
    let c = Complex64::new(0.0, 1.0 / (2.0 * PI));
    for n in 0..upto {
        let h = t[n + 1] - t[n];
        let (e, e0, e1) = cell_factors(rho * h);
        g = e * g + c * h * (v[n + 1] * e0 + (v[n] - v[n + 1]) * e1);
        visit(n + 1, g);
    }
}

/// ψ̂ at grid node `node` of the trajectory.
pub fn reconstruct_spectral(
    datum: &InitialDatum,
    traj: &ChargeTrajectory,
    node: usize,
    grid: &MomentumGrid,
) -> Result<SpectralField> {
    let q = &traj.q;
    if node >= q.len() {
        return Err(Error::OutOfRange {
            index: node,
            valid: format!("0..{}", q.len()),
        });
    }
    let t = q.grid().nodes()[node];
    grid.check_horizon(t)?;
    let values: Vec<Complex64> = grid
        .p
        .par_iter()
        .map(|&p| {
            let mut out = Complex64::new(0.0, 0.0);
            sweep_one(datum, q, node, p, |n, g| {
                if n == node {
                    out = g
                }
            });
            out
        })
        .collect();
    Ok(SpectralField {
        t,
        p_nodes: grid.p.clone(),
        weights: grid.weights.clone(),
        values,
        q_at_t: q.values()[node],
        q_dot: q_dot_at(q, node, grid.rho_max),
        rho_max: grid.rho_max,
    })
}

/// Per-momentum sums accumulated at one time.
#[derive(Clone, Copy, Default)]
struct Sums {
    mass: f64,
    h1: f64,
    boundary: Complex64,
}

fn add_sums(s: &mut Sums, w: f64, rho: f64, g: Complex64, q: Complex64) {
    let phi1 = g - q / (2.0 * PI * (rho + 1.0));
    s.mass += w * g.norm_sqr();
    s.h1 += w * (1.0 + rho) * phi1.norm_sqr();
    s.boundary += phi1 * w;
}

fn finish_mass(s: f64, q: Complex64, qd: Complex64, rho_max: f64) -> f64 {
    let tail = q.norm_sqr() / (4.0 * PI * (rho_max + 1.0))
        + (q.conj() * (q + Complex64::new(0.0, 1.0) * qd)).re / (4.0 * PI * rho_max * rho_max);
    (2.0 * PI * s + tail).max(0.0).sqrt()
}

fn finish_h1(s: f64, q: Complex64, qd: Complex64, rho_max: f64) -> f64 {
    2.0 * PI * s + (q + Complex64::new(0.0, 1.0) * qd).norm_sqr() / (8.0 * PI * rho_max * rho_max)
}

fn finish_boundary(s: Complex64, q: Complex64, qd: Complex64, rho_max: f64, params: &ModelParams) -> Complex64 {
    let limit = s + (q + Complex64::new(0.0, 1.0) * qd) / (4.0 * PI * rho_max);
    limit - q * params.boundary_coefficient(q)
}

/// M(t) = ‖ψ_t‖₂ from 2π ∫ |ψ̂|² p dp plus the q/(2π p²) tail.
pub fn mass(field: &SpectralField) -> f64 {
    let s: f64 = field.values.iter().zip(&field.weights).map(|(v, w)| w * v.norm_sqr()).sum();
    finish_mass(s, field.q_at_t, field.q_dot, field.rho_max)
}

/// E(t) = ‖φ_{1,t}‖²_{H¹} + (β0/(σ+1) |q|^{2σ} + (γ - ln 2)/2π) |q|².
pub fn energy(field: &SpectralField, params: &ModelParams) -> f64 {
    let s: f64 = (0..field.values.len())
        .map(|i| {
            let rho = field.p_nodes[i] * field.p_nodes[i];
            field.weights[i] * (1.0 + rho) * field.phi1(i).norm_sqr()
        })
        .sum();
    finish_h1(s, field.q_at_t, field.q_dot, field.rho_max) + params.charge_energy(field.q_at_t)
}

/// lim_{x→0} φ_1(x) - (β0 |q|^{2σ} + (γ - ln 2)/2π) q, with the limit taken as ∫ φ̂_1 p dp.
pub fn boundary_residual(field: &SpectralField, params: &ModelParams) -> Complex64 {
    let s: Complex64 = (0..field.values.len()).map(|i| field.phi1(i) * field.weights[i]).sum();
    finish_boundary(s, field.q_at_t, field.q_dot, field.rho_max, params)
}

/// Observables at every node of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSeries {
    pub t: Vec<f64>,
    pub q: Vec<Complex64>,
    pub mass: Vec<f64>,
    pub energy: Vec<f64>,
    pub boundary: Vec<Complex64>,
}

impl ObservableSeries {
    /// max_t |M(t) - M(0)| / M(0).
    pub fn mass_drift(&self) -> f64 {
        relative_drift(&self.mass)
    }

    /// max_t |E(t) - E(0)| / |E(0)|.
    pub fn energy_drift(&self) -> f64 {
        relative_drift(&self.energy)
    }

    /// |boundary residual| at the node nearest to t.
    pub fn boundary_at(&self, t: f64) -> f64 {
        let i = self.t.partition_point(|&x| x < t).min(self.t.len() - 1);
        let i = if i > 0 && (self.t[i - 1] - t).abs() < (self.t[i] - t).abs() { i - 1 } else { i };
        self.boundary[i].norm()
    }
}

fn relative_drift(v: &[f64]) -> f64 {
    let v0 = v[0];
    let d = v.iter().map(|x| (x - v0).abs()).fold(0.0, f64::max);
    if v0 == 0.0 {
        d
    } else {
        d / v0.abs()
    }
}

/// One sweep over all momenta producing mass, energy and boundary residual at every node.
pub fn observe(
    datum: &InitialDatum,
    traj: &ChargeTrajectory,
    params: &ModelParams,
    grid: &MomentumGrid,
) -> Result<ObservableSeries> {
    let q = &traj.q;
    let nt = q.len();
    grid.check_horizon(q.grid().t_end())?;
    let qv = q.values();
    let partial: Vec<Vec<Sums>> = grid
        .p
        .par_chunks(CHUNK)
        .zip(grid.weights.par_chunks(CHUNK))
        .map(|(ps, ws)| {
            let mut acc = vec![Sums::default(); nt];
            for (&p, &w) in ps.iter().zip(ws) {
                let rho = p * p;
                sweep_one(datum, q, nt - 1, p, |n, g| add_sums(&mut acc[n], w, rho, g, qv[n]));
            }
            acc
        })
        .collect();
    let mut total = vec![Sums::default(); nt];
    for chunk in &partial {
        for (t, c) in total.iter_mut().zip(chunk) {
            t.mass += c.mass;
            t.h1 += c.h1;
            t.boundary += c.boundary;
        }
    }
    let mut out = ObservableSeries {
        t: q.grid().nodes().to_vec(),
        q: qv.to_vec(),
        mass: Vec::with_capacity(nt),
        energy: Vec::with_capacity(nt),
        boundary: Vec::with_capacity(nt),
    };
    for (n, s) in total.iter().enumerate() {
        let qd = q_dot_at(q, n, grid.rho_max);
        let qn = qv[n];
        out.mass.push(finish_mass(s.mass, qn, qd, grid.rho_max));
        out.energy
            .push(finish_h1(s.h1, qn, qd, grid.rho_max) + params.charge_energy(qn));
        out.boundary
            .push(finish_boundary(s.boundary, qn, qd, grid.rho_max, params));
    }
    Ok(out)
}

/// Squared Gagliardo seminorm ∬ |f(t) - f(s)|² / |t - s|^{1+2ν} of the
/// piecewise-linear interpolant of f. Diagonal cells are integrated exactly,
/// adjacent cells with 8×8 and all other pairs with 4×4 Gauss-Legendre points.
pub fn h_half_seminorm(f: &SampledSignal, nu: f64) -> Result<f64> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(invalid("nu", format!("{nu} not in (0, 1)")));
    }
    if f.len() < 4 {
        return Err(invalid("f", "need at least 4 nodes"));
    }
    let t = f.grid().nodes();
    let v = f.values();
    let cells = t.len() - 1;
    let g8 = gauss_legendre(8);
    let g4 = gauss_legendre(4);
    let expo = 1.0 + 2.0 * nu;
    let interp = |i: usize, x: f64| {
        let s = (x - t[i]) / (t[i + 1] - t[i]);
        v[i] * (1.0 - s) + v[i + 1] * s
    };
    let row = |i: usize| -> f64 {
        let h = t[i + 1] - t[i];
        let m = (v[i + 1] - v[i]) / h;
        let mut acc = m.norm_sqr() * 2.0 * h.powf(3.0 - 2.0 * nu) / ((2.0 - 2.0 * nu) * (3.0 - 2.0 * nu));
        // off-diagonal pairs counted twice by symmetry
        for j in i + 1..cells {
            let g = if j == i + 1 { &g8 } else { &g4 };
            let mut pair = 0.0;
            for (x, wx) in g.mapped(t[i], t[i + 1]) {
                let fx = interp(i, x);
                for (y, wy) in g.mapped(t[j], t[j + 1]) {
                    pair += wx * wy * (fx - interp(j, y)).norm_sqr() / (y - x).powf(expo);
                }
            }
            acc += 2.0 * pair;
        }
        acc
    };
    let total: f64 = (0..cells).into_par_iter().map(row).collect::<Vec<f64>>().iter().sum();
    Ok(total)
}
