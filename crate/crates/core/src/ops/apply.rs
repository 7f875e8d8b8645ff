use super::grid::{SampledSignal, TimeGrid};
use super::weights::{cell_moments, CellKernel, IKernel, JKernel, ProductRule, Rule};
use crate::error::Result;
use crate::specfun::EvalPolicy;
use num_complex::Complex64;

/// (I f)(t_n) = Σ_k w_k f(t_k*) with the chosen sampling rule.
pub fn apply_i(f: &SampledSignal, rule: Rule, policy: &EvalPolicy) -> Result<SampledSignal> {
    let r = ProductRule::new(f.grid(), IKernel::new(policy)?);
    SampledSignal::new(f.grid().clone(), r.apply(f.values(), rule))
}

/// (J f)(t_n) with exact cell integrals of -γ - ln(·).
pub fn apply_j(f: &SampledSignal, rule: Rule) -> Result<SampledSignal> {
    let r = ProductRule::new(f.grid(), JKernel);
    SampledSignal::new(f.grid().clone(), r.apply(f.values(), rule))
}

/// I applied to a function known in closed form.
///
/// Works like [`apply_i`] on the node samples, except that a function which
/// is not finite at t = 0 is integrated over the first cell by dyadic
/// sub-cells, interpolated linearly under `Rule::Linear` and sampled at
/// midpoints otherwise. The innermost sub-cell always uses its midpoint.
pub fn apply_i_fn<F>(grid: &TimeGrid, f: F, rule: Rule, policy: &EvalPolicy) -> Result<SampledSignal>
where
    F: Fn(f64) -> Complex64 + Sync,
{
    let kernel = IKernel::new(policy)?;
    let nodes = grid.nodes();
    let f0 = f(0.0);
    if f0.re.is_finite() && f0.im.is_finite() {
        let s = SampledSignal::from_fn(grid.clone(), &f)?;
        let r = ProductRule::new(grid, kernel);
        return SampledSignal::new(grid.clone(), r.apply(s.values(), rule));
    }
    // regular part: cells k ≥ 1 with node samples, the first cell excluded
    let mut samples: Vec<Complex64> = nodes.iter().map(|&t| f(t)).collect();
    samples[0] = Complex64::new(0.0, 0.0);
    let r = ProductRule::new(grid, kernel.clone());
    let t1 = nodes[1];
    let mut out = Vec::with_capacity(nodes.len());
    out.push(Complex64::new(0.0, 0.0));
    for n in 1..nodes.len() {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 1..n {
            let (l, rr) = r.cell(n, k);
            acc += match rule {
                Rule::Linear => samples[k] * l + samples[k + 1] * rr,
                Rule::Midpoint => (samples[k] + samples[k + 1]) * (0.5 * (l + rr)),
                Rule::Left => samples[k] * (l + rr),
            };
        }
        // first cell [0, t1] split at t1 2^{-j}
        let tn = nodes[n];
        let mut hi = t1;
        for _ in 0..60 {
            let lo = 0.5 * hi;
            acc += match rule {
                Rule::Linear => {
                    let (tot, right) = cell_moments(&kernel, tn - hi, hi - lo);
                    f(lo) * (tot - right) + f(hi) * right
                }
                _ => f(0.5 * (lo + hi)) * (kernel.k1(tn - lo) - kernel.k1(tn - hi)),
            };
            hi = lo;
        }
        let w = kernel.k1(tn) - kernel.k1(tn - hi);
        acc += f(0.5 * hi) * w;
        out.push(acc);
    }
    SampledSignal::new(grid.clone(), out)
}

/// Cumulative integral ∫_0^{t_n} f consistent with a rule: trapezoid for
/// `Linear` and `Midpoint`, left sums for `Left`.
pub fn cumulative(f: &SampledSignal, rule: Rule) -> Vec<Complex64> {
    let t = f.grid().nodes();
    let v = f.values();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut out = vec![acc];
    for k in 0..t.len() - 1 {
        let h = t[k + 1] - t[k];
        acc += match rule {
            Rule::Left => v[k] * h,
            _ => (v[k] + v[k + 1]) * (0.5 * h),
        };
        out.push(acc);
    }
    out
}

fn max_residual(a: &SampledSignal, b: &[Complex64]) -> f64 {
    a.values()
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// max_n |(J (I f))(t_n) - ∫_0^{t_n} f|.
pub fn check_inversion(f: &SampledSignal, rule: Rule, policy: &EvalPolicy) -> Result<f64> {
    let i = apply_i(f, rule, policy)?;
    let ji = apply_j(&i, rule)?;
    Ok(max_residual(&ji, &cumulative(f, rule)))
}

/// max_n |(I (J f))(t_n) - ∫_0^{t_n} f|, the other composition order.
pub fn check_inversion_ij(f: &SampledSignal, rule: Rule, policy: &EvalPolicy) -> Result<f64> {
    let j = apply_j(f, rule)?;
    let ij = apply_i(&j, rule, policy)?;
    Ok(max_residual(&ij, &cumulative(f, rule)))
}
