//! Implicit product-integration marching for
//! q + I[4π β0 |q|^{2σ} q + κ q] = f.
//!
//! The piecewise-linear product rule puts the weight N2(h)/h on the unknown
//! q_n. That weight is not small enough for a contraction (it decays only
//! like h / ln(1/h) while |h'(q)| can be large), so each step is solved by
//! damped Newton on the real 2×2 system.

use super::forcing::{build_forcing, forcing_at};
use crate::error::{invalid, Error, Result};
use crate::field::{InitialDatum, ModelParams};
use crate::ops::{cell_moments, IKernel, SampledSignal, TimeGrid};
use crate::specfun::{EvalPolicy, VolterraKernel};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// First cell width at t = 0.
    pub step_init: f64,
    /// Floor for step halving in adaptive continuation.
    pub step_min: f64,
    /// Uniform step reached once the geometric start-up is over.
    pub step_max: f64,
    /// Growth factor of consecutive cells during start-up (> 1).
    pub step_growth: f64,
    /// Newton tolerance of the per-step solve.
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    /// |q| at which a run is declared blown up.
    pub blowup_threshold: f64,
    /// Number of refinement levels used by refinement studies.
    pub refinement_levels: usize,
    /// Largest accepted relative growth of |q| per step after start-up.
    pub max_rel_change: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            step_init: 1e-12,
            step_min: 1e-15,
            step_max: 2e-3,
            step_growth: 1.0 / 0.7,
            picard_tol: 1e-12,
            picard_max_iters: 60,
            blowup_threshold: 1e6,
            refinement_levels: 2,
            max_rel_change: 0.1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_min > 0.0) {
            return Err(invalid("step_min", "must be positive"));
        }
        if !(self.step_init >= self.step_min && self.step_init <= self.step_max) {
            return Err(invalid("step_init", "need step_min ≤ step_init ≤ step_max"));
        }
        if !(self.step_growth > 1.0 && self.step_growth.is_finite()) {
            return Err(invalid("step_growth", "must exceed 1"));
        }
        if !(self.picard_tol > 0.0 && self.picard_tol <= 1e-4) {
            return Err(invalid("picard_tol", "must lie in (0, 1e-4]"));
        }
        if self.picard_max_iters == 0 {
            return Err(invalid("picard_max_iters", "must be positive"));
        }
        if !(self.max_rel_change > 0.0 && self.max_rel_change <= 1.0) {
            return Err(invalid("max_rel_change", "must lie in (0, 1]"));
        }
        Ok(())
    }

    fn validate_for(&self, datum: &InitialDatum) -> Result<()> {
        self.validate()?;
        if !(self.blowup_threshold > 10.0 * datum.q0.norm()) {
            return Err(invalid("blowup_threshold", "must exceed 10 |q0|"));
        }
        Ok(())
    }

    /// Grid with geometric start-up from `step_init` and uniform `step_max` afterwards.
    pub fn grid(&self, t_end: f64) -> Result<TimeGrid> {
        self.validate()?;
        let cells = (t_end / self.step_max).ceil().max(1.0) as usize;
        let h = t_end / cells as f64;
        graded_by_step(t_end, h, 1.0 / self.step_growth, self.step_init.min(0.5 * h))
    }

    /// Every step parameter divided by `factor`, growth ratio taken to the 1/factor power.
    pub fn refined(&self, factor: usize) -> Self {
        let f = factor.max(1) as f64;
        Self {
            step_init: self.step_init / f,
            step_min: self.step_min / f,
            step_max: self.step_max / f,
            step_growth: self.step_growth.powf(1.0 / f),
            ..*self
        }
    }
}

fn graded_by_step(t_end: f64, h: f64, ratio: f64, floor: f64) -> Result<TimeGrid> {
    let cells = (t_end / h).round() as usize;
    let m = if h <= floor {
        0
    } else {
        ((floor / h).ln() / ratio.ln()).ceil() as usize
    };
    TimeGrid::graded_with_floor(t_end, cells + m + 1, ratio, floor)
}

/// Outcome of a solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolveStatus {
    Completed {
        t_end: f64,
    },
    /// |q| crossed the threshold, or the solution branch folded at every step
    /// down to the step floor while |q| was growing.
    BlowUp {
        /// Threshold crossing: reciprocal extrapolation of 1/|q| over its last
        /// decade. Fold: the time at which no step could be taken. NaN when
        /// not even the first step could be taken, so that T* lies below
        /// step_min.
        t_star: f64,
        window: [f64; 2],
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChargeTrajectory {
    pub q: SampledSignal,
    pub forcing: SampledSignal,
    pub status: SolveStatus,
    /// max_n |q_n + I_h[h(q)](t_n) - f(t_n)|, the fixed-point residual ‖G(q) - q‖∞.
    pub fixed_point_residual: f64,
    pub max_newton_iterations: usize,
    /// True when σ ∈ (0, 1/2), outside the proven range.
    pub experimental: bool,
}

impl ChargeTrajectory {
    pub fn grid(&self) -> &TimeGrid {
        self.q.grid()
    }

    pub fn sup_abs(&self) -> f64 {
        self.q.sup_norm()
    }

    pub fn is_completed(&self) -> bool {
        matches!(self.status, SolveStatus::Completed { .. })
    }
}

struct Run {
    start: usize,
    step: f64,
    table: Vec<(f64, f64)>,
}

/// The branch through the previous node folds before reaching the new right-hand side.
struct StepFailure;

/// Causal marching state shared by the fixed-grid and adaptive drivers.
struct Marcher<'a> {
    params: &'a ModelParams,
    kernel: IKernel,
    tol: f64,
    max_iter: usize,
    nodes: Vec<f64>,
    q: Vec<Complex64>,
    hq: Vec<Complex64>,
    f: Vec<Complex64>,
    run: Option<Run>,
    residual: f64,
    newton_max: usize,
}

impl<'a> Marcher<'a> {
    fn new(datum: &InitialDatum, params: &'a ModelParams, config: &SolverConfig, policy: &EvalPolicy) -> Result<Self> {
        let q0 = datum.q0;
        Ok(Self {
            params,
            kernel: IKernel::new(policy)?,
            tol: config.picard_tol,
            max_iter: config.picard_max_iters,
            nodes: vec![0.0],
            q: vec![q0],
            hq: vec![params.h(q0)],
            f: vec![q0],
            run: None,
            residual: 0.0,
            newton_max: 0,
        })
    }

    fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Node that continues the current run by one step of `h`, or t_last + h.
    fn next_time(&self, h: f64) -> f64 {
        match &self.run {
            Some(r) if r.step == h => self.nodes[r.start] + (self.len() - r.start) as f64 * h,
            _ => *self.nodes.last().unwrap() + h,
        }
    }

    fn general_cell(&self, t_new: f64, k: usize) -> (f64, f64) {
        let n = self.len();
        let (a, b) = (self.nodes[k], if k + 1 < n { self.nodes[k + 1] } else { t_new });
        let d_b = if k + 1 < n { t_new - b } else { 0.0 };
        let (tot, r) = cell_moments(&self.kernel, d_b, b - a);
        (tot - r, r)
    }

    /// History sum and diagonal weight for a candidate node t_new with step h.
    fn history(&mut self, t_new: f64, h: f64) -> (Complex64, f64) {
        let n = self.len();
        let in_run = matches!(&self.run, Some(r) if r.step == h);
        let run_start = if in_run { self.run.as_ref().unwrap().start } else { n - 1 };
        // make sure the run table covers index distances 0..n-1-run_start
        let need = n - run_start;
        let table: Vec<(f64, f64)> = if in_run {
            let r = self.run.as_mut().unwrap();
            while r.table.len() < need {
                let j = r.table.len();
                let (tot, rr) = cell_moments(&self.kernel, j as f64 * h, h);
                r.table.push((tot - rr, rr));
            }
            r.table.clone()
        } else {
            let (tot, rr) = cell_moments(&self.kernel, 0.0, h);
            vec![(tot - rr, rr)]
        };
        let hq = &self.hq;
        let general = |k: usize| -> Complex64 {
            let (l, r) = self.general_cell(t_new, k);
            hq[k] * l + hq[k + 1] * r
        };
        let split = run_start.min(n - 1);
        let mut acc: Complex64 = if split > 256 {
            // fixed chunks summed in order keep the result independent of the thread count
            let parts: Vec<Complex64> = (0..split)
                .collect::<Vec<usize>>()
                .par_chunks(128)
                .map(|ks| ks.iter().map(|&k| general(k)).sum())
                .collect();
            parts.iter().sum()
        } else {
            (0..split).map(general).sum()
        };
        for k in split..n - 1 {
            let (l, r) = table[n - 1 - k];
            acc += hq[k] * l + hq[k + 1] * r;
        }
        let (l, b) = table[0];
        acc += hq[n - 1] * l;
        (acc, b)
    }

    /// Root of q + b h(q) = rhs on the branch that continues from the identity map.
    ///
    /// Both the weight and the right-hand side are deformed,
    /// q + θ b h(q) = (1 - θ) q_prev + θ rhs, from θ = 0 (root q_prev) to
    /// θ = 1. Each θ-increment takes a tangent predictor and a Newton
    /// corrector that must contract. A fold (vanishing Jacobian determinant)
    /// or a non-contracting corrector shrinks the increment; below 1e-8 the
    /// step is reported as infeasible.
    fn newton(&self, rhs: Complex64, b: f64, q_prev: Complex64) -> std::result::Result<(Complex64, usize, f64), StepFailure> {
        let p = self.params;
        let scale = rhs.norm().max(q_prev.norm()).max(1.0);
        // J^{-1} v for the real-linear Jacobian v ↦ A v + B v̄ at weight w, if det > 0
        let solve = |q: Complex64, w: f64, v: Complex64| -> Option<Complex64> {
            let (dq, dqb) = p.dh(q);
            let a = Complex64::new(1.0, 0.0) + dq * w;
            let bb = dqb * w;
            let det = a.norm_sqr() - bb.norm_sqr();
            if !(det > 1e-14 * a.norm_sqr()) {
                return None;
            }
            Some((a.conj() * v - bb * v.conj()) / det)
        };
        let mut q = q_prev;
        let mut theta = 0.0;
        let mut d_theta = 1.0f64;
        let mut iters = 0;
        let mut last_resid = 0.0;
        while theta < 1.0 {
            d_theta = d_theta.min(1.0 - theta);
            let next = if theta + d_theta >= 1.0 { 1.0 } else { theta + d_theta };
            let w = next * b;
            let target = q_prev + (rhs - q_prev) * next;
            let tangent = rhs - q_prev - p.h(q) * b;
            let corrected = solve(q, theta * b, tangent * (next - theta)).and_then(|dq| {
                let mut x = q + dq;
                let mut prev_upd = f64::INFINITY;
                for _ in 0..self.max_iter.min(12) {
                    iters += 1;
                    let r = x + p.h(x) * w - target;
                    if r.norm() <= self.tol * scale {
                        solve(x, w, Complex64::new(0.0, 0.0))?;
                        return Some((x, r.norm()));
                    }
                    let upd = solve(x, w, -r)?;
                    if upd.norm() > 0.5 * prev_upd {
                        return None;
                    }
                    prev_upd = upd.norm();
                    x += upd;
                    if upd.norm() <= 1e-15 * x.norm() {
                        let r = x + p.h(x) * w - target;
                        return Some((x, r.norm()));
                    }
                }
                None
            });
            match corrected {
                Some((x, r)) => {
                    q = x;
                    theta = next;
                    last_resid = r;
                    d_theta *= 2.0;
                }
                None => {
                    d_theta *= 0.5;
                    if d_theta < 1e-8 {
                        return Err(StepFailure);
                    }
                }
            }
        }
        Ok((q, iters, last_resid))
    }

    /// Try one step; on success returns the new value without committing it.
    fn try_step(&mut self, t_new: f64, h: f64, f_new: Complex64) -> std::result::Result<(Complex64, usize, f64), StepFailure> {
        let (hist, b) = self.history(t_new, h);
        let rhs = f_new - hist;
        let guess = *self.q.last().unwrap();
        self.newton(rhs, b, guess)
    }

    fn commit(&mut self, t_new: f64, h: f64, f_new: Complex64, q: Complex64, iters: usize, resid: f64) {
        let continues = matches!(&self.run, Some(r) if r.step == h);
        if !continues {
            let (tot, rr) = cell_moments(&self.kernel, 0.0, h);
            self.run = Some(Run {
                start: self.len() - 1,
                step: h,
                table: vec![(tot - rr, rr)],
            });
        }
        self.nodes.push(t_new);
        self.q.push(q);
        self.hq.push(self.params.h(q));
        self.f.push(f_new);
        self.newton_max = self.newton_max.max(iters);
        self.residual = self.residual.max(resid);
    }
}

/// Estimate T* from the last decade of |q| by a least-squares line through 1/|q|.
pub fn estimate_blowup_time(t: &[f64], abs_q: &[f64]) -> (f64, [f64; 2]) {
    let n = t.len();
    if n < 2 {
        return (f64::NAN, [0.0, t.last().copied().unwrap_or(0.0)]);
    }
    let last = abs_q[n - 1];
    let mut first = n - 1;
    while first > 0 && abs_q[first - 1] >= last / 10.0 && abs_q[first - 1] <= abs_q[first] * 1.0001 {
        first -= 1;
    }
    if n - first < 2 {
        first = n - 2;
    }
    let xs = &t[first..];
    let ys: Vec<f64> = abs_q[first..].iter().map(|a| 1.0 / a).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let t_last = t[n - 1];
    let t_star = if slope < 0.0 { mx - my / slope } else { f64::NAN };
    let hi = if t_star.is_finite() { t_star.max(t_last) } else { t_last };
    (t_star, [t[first], hi])
}

fn finish(params: &ModelParams, m: Marcher<'_>, status: SolveStatus) -> Result<ChargeTrajectory> {
    let grid = if m.nodes.len() == 1 {
        TimeGrid::origin_only()
    } else {
        TimeGrid::from_nodes(m.nodes.clone(), crate::ops::Grading::Uniform)?
    };
    Ok(ChargeTrajectory {
        q: SampledSignal::new(grid.clone(), m.q)?,
        forcing: SampledSignal::new(grid, m.f)?,
        status,
        fixed_point_residual: m.residual,
        max_newton_iterations: m.newton_max,
        experimental: params.is_experimental(),
    })
}

/// March on a prescribed grid.
pub fn solve_charge(
    datum: &InitialDatum,
    params: &ModelParams,
    config: &SolverConfig,
    grid: &TimeGrid,
    policy: &EvalPolicy,
) -> Result<ChargeTrajectory> {
    datum.validate()?;
    params.validate()?;
    config.validate_for(datum)?;
    let forcing = build_forcing(datum, grid, policy)?;
    solve_with_forcing(datum, params, config, &forcing, policy)
}

/// March on the grid of a precomputed forcing.
pub fn solve_with_forcing(
    datum: &InitialDatum,
    params: &ModelParams,
    config: &SolverConfig,
    forcing: &SampledSignal,
    policy: &EvalPolicy,
) -> Result<ChargeTrajectory> {
    let grid = forcing.grid();
    let nodes = grid.nodes();
    let tail = grid.tail();
    let mut m = Marcher::new(datum, params, config, policy)?;
    let fv = forcing.values();
    for n in 1..grid.len() {
        // inside the uniform tail the step is the tail step so weights come from its table
        let h = match tail {
            Some(t) if n > t.start => t.step,
            _ => nodes[n] - nodes[n - 1],
        };
        let t_new = nodes[n];
        match m.try_step(t_new, h, fv[n]) {
            Ok((q, it, r)) => {
                if q.norm() >= config.blowup_threshold {
                    m.commit(t_new, h, fv[n], q, it, r);
                    return blowup(params, m);
                }
                m.commit(t_new, h, fv[n], q, it, r);
            }
            Err(_) => {
                return fail(params, m, t_new);
            }
        }
    }
    let t_end = grid.t_end();
    let mut traj = finish(params, m, SolveStatus::Completed { t_end })?;
    // keep the caller's grid (with its grading and tail) on success
    traj.q = SampledSignal::new(grid.clone(), traj.q.into_values())?;
    traj.forcing = forcing.clone();
    Ok(traj)
}

fn growing(m: &Marcher<'_>) -> bool {
    let n = m.q.len();
    n >= 3 && m.q[n - 1].norm() > m.q[n - 2].norm() && m.q[n - 2].norm() > m.q[n - 3].norm()
}

fn blowup(params: &ModelParams, m: Marcher<'_>) -> Result<ChargeTrajectory> {
    let abs: Vec<f64> = m.q.iter().map(|q| q.norm()).collect();
    let (t_star, window) = estimate_blowup_time(&m.nodes, &abs);
    finish(params, m, SolveStatus::BlowUp { t_star, window })
}

// Step failure: blow-up if |q| was growing (or nothing was resolved yet), stiffness otherwise.
fn fail(params: &ModelParams, m: Marcher<'_>, t_fail: f64) -> Result<ChargeTrajectory> {
    if m.len() == 1 {
        return finish(
            params,
            m,
            SolveStatus::BlowUp {
                t_star: f64::NAN,
                window: [0.0, t_fail],
            },
        );
    }
    if growing(&m) {
        // the branch folds: no continuation past t_fail at any resolved step
        let t_last = *m.nodes.last().unwrap();
        return finish(
            params,
            m,
            SolveStatus::BlowUp {
                t_star: t_fail,
                window: [t_last, t_fail],
            },
        );
    }
    Err(Error::Stiffness {
        t: t_fail,
        detail: "per-step Newton solve failed while |q| was not growing".into(),
    })
}

/// Adaptive continuation to `t_max`: geometric start-up, uniform steps, and
/// step halving when Newton fails, lands on the wrong branch, or |q| grows
/// faster than `max_rel_change` per step.
pub fn continue_until(
    datum: &InitialDatum,
    params: &ModelParams,
    config: &SolverConfig,
    t_max: f64,
    policy: &EvalPolicy,
) -> Result<ChargeTrajectory> {
    datum.validate()?;
    params.validate()?;
    config.validate_for(datum)?;
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(invalid("t_max", "must be positive"));
    }
    let vk: Arc<VolterraKernel> = VolterraKernel::shared(policy.quad_nodes);
    let mut m = Marcher::new(datum, params, config, policy)?;
    let mut h = config.step_init;
    let mut startup = true;
    let mut easy = 0usize;
    let mut t = 0.0;
    while t < t_max {
        let remaining = t_max - t;
        let h_try = if remaining <= h * (1.0 + 1e-9) { remaining } else { h };
        let t_new = if h_try == h { m.next_time(h) } else { t_max };
        let t_new = if t_new > t_max { t_max } else { t_new };
        let h_eff = if t_new == t_max && h_try != h { remaining } else { h };
        let f_new = forcing_at(datum, t_new, &vk, policy)?;
        let outcome = m.try_step(t_new, h_eff, f_new);
        let q_old = *m.q.last().unwrap();
        let ok = match &outcome {
            Ok((q, _, _)) => {
                startup || q.norm() <= (1.0 + config.max_rel_change) * q_old.norm() + 1e-300
            }
            Err(_) => false,
        };
        if !ok {
            let half = 0.5 * h_eff;
            if half < config.step_min {
                return fail(params, m, t_new);
            }
            h = half;
            startup = false;
            easy = 0;
            continue;
        }
        let (q, it, r) = outcome.ok().unwrap();
        let growth = q.norm() / q_old.norm().max(1e-300) - 1.0;
        m.commit(t_new, h_eff, f_new, q, it, r);
        t = t_new;
        if q.norm() >= config.blowup_threshold {
            return blowup(params, m);
        }
        if startup {
            let next = h * config.step_growth;
            if next >= config.step_max {
                h = config.step_max;
                startup = false;
            } else {
                h = next;
            }
        } else if h < config.step_max {
            if growth < 0.25 * config.max_rel_change {
                easy += 1;
            } else {
                easy = 0;
            }
            if easy >= 8 {
                h = (2.0 * h).min(config.step_max);
                easy = 0;
            }
        }
    }
    finish(params, m, SolveStatus::Completed { t_end: t_max })
}

/// One application of G(q) = f - I[4π β0 |q|^{2σ} q + κ q] with the linear product rule.
pub fn picard_map(
    q: &SampledSignal,
    f: &SampledSignal,
    params: &ModelParams,
    policy: &EvalPolicy,
) -> Result<SampledSignal> {
    if q.grid().nodes() != f.grid().nodes() {
        return Err(Error::GridMismatch("picard_map: q and f grids differ".into()));
    }
    let hq = q.map(|v| params.h(v))?;
    let ih = crate::ops::apply_i(&hq, crate::ops::Rule::Linear, policy)?;
    f.combine(Complex64::new(1.0, 0.0), &ih, Complex64::new(-1.0, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::RegularProfile;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn quick() -> SolverConfig {
        SolverConfig {
            step_max: 1e-2,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = SolverConfig {
            step_min: 0.0,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            picard_tol: 1e-3,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
        let d = InitialDatum::new(1.0, c(1e6, 0.0), RegularProfile::zero()).unwrap();
        assert!(SolverConfig::default().validate_for(&d).is_err());
    }

    #[test]
    fn zero_datum_gives_zero_charge() {
        let d = InitialDatum::new(1.0, c(0.0, 0.0), RegularProfile::zero()).unwrap();
        let p = ModelParams::new(1.0, -1.0);
        let cfg = quick();
        let g = cfg.grid(0.2).unwrap();
        let tr = solve_charge(&d, &p, &cfg, &g, &EvalPolicy::default()).unwrap();
        assert!(tr.is_completed());
        assert_eq!(tr.sup_abs(), 0.0);
    }

    #[test]
    fn fixed_point_certificate() {
        let p = ModelParams::new(1.0, 1.0);
        let d = InitialDatum::gaussian(c(0.7, 0.2), c(0.5, 0.0), 1.0).unwrap();
        let pol = EvalPolicy::default();
        let cfg = quick();
        let g = cfg.grid(0.3).unwrap();
        let tr = solve_charge(&d, &p, &cfg, &g, &pol).unwrap();
        assert_eq!(tr.q.values()[0], d.q0);
        assert!(tr.fixed_point_residual <= 10.0 * cfg.picard_tol);
        let gq = picard_map(&tr.q, &tr.forcing, &p, &pol).unwrap();
        assert!(gq.max_diff(&tr.q).unwrap() <= 10.0 * cfg.picard_tol, "{}", gq.max_diff(&tr.q).unwrap());
    }

    #[test]
    fn picard_map_of_zero_is_forcing() {
        let p = ModelParams::new(1.0, 1.0);
        let g = TimeGrid::uniform(0.1, 11).unwrap();
        let f = SampledSignal::from_fn(g.clone(), |t| c(1.0 + t, -t)).unwrap();
        let out = picard_map(&SampledSignal::zeros(g), &f, &p, &EvalPolicy::default()).unwrap();
        assert_eq!(out.max_diff(&f).unwrap(), 0.0);
    }

    #[test]
    fn adaptive_and_fixed_grid_agree() {
        let p = ModelParams::new(1.0, 1.0);
        let d = InitialDatum::gaussian_in_domain(c(1.0, 0.0), 1.0, &p).unwrap();
        let pol = EvalPolicy::default();
        let cfg = quick();
        let a = continue_until(&d, &p, &cfg, 0.3, &pol).unwrap();
        let b = solve_charge(&d, &p, &cfg, &cfg.grid(0.3).unwrap(), &pol).unwrap();
        assert!(a.is_completed());
        let qa = *a.q.values().last().unwrap();
        let qb = *b.q.values().last().unwrap();
        assert!((qa - qb).norm() < 1e-4, "{qa} {qb}");
    }

    #[test]
    fn linear_case_completes_for_either_sign() {
        let pol = EvalPolicy::default();
        for beta0 in [-1.0, 1.0] {
            let p = ModelParams::new(0.0, beta0);
            let d = InitialDatum::new(1.0, c(1.0, 0.0), RegularProfile::zero()).unwrap();
            let tr = continue_until(&d, &p, &quick(), 1.0, &pol).unwrap();
            assert!(tr.is_completed(), "β0 = {beta0}: {:?}", tr.status);
        }
    }

    #[test]
    fn unresolvable_fold_is_reported_without_estimate() {
        let p = ModelParams::new(1.0, -1.0);
        let d = InitialDatum::new(1.0, c(3.0, 0.0), RegularProfile::zero()).unwrap();
        let tr = continue_until(&d, &p, &quick(), 1.0, &EvalPolicy::default()).unwrap();
        match tr.status {
            SolveStatus::BlowUp { t_star, window } => {
                assert!(t_star.is_nan());
                assert!(window[0] == 0.0 && window[1] > 0.0 && window[1] < 1e-14);
            }
            s => panic!("{s:?}"),
        }
        assert_eq!(tr.q.len(), 1);
    }

    #[test]
    fn reciprocal_extrapolation() {
        let t: Vec<f64> = (0..50).map(|i| 0.9 + 0.001 * i as f64).collect();
        let a: Vec<f64> = t.iter().map(|x| 1.0 / (1.0 - x)).collect();
        let (ts, w) = estimate_blowup_time(&t, &a);
        assert!((ts - 1.0).abs() < 1e-10);
        assert!(w[0] <= *t.last().unwrap() && w[1] >= *t.last().unwrap());
    }
}
