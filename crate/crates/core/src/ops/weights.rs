//! Product-integration weights for convolutions ∫_0^{t_n} K(t_n - τ) f(τ) dτ.

use super::grid::TimeGrid;
use crate::error::{Error, Result};
use crate::quad::gauss_legendre;
use crate::specfun::{EvalPolicy, VolterraKernel, EULER_GAMMA};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Sampling rule used inside each cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// f constant on a cell, equal to its left node value.
    Left,
    /// f constant on a cell, equal to the mean of its end values.
    Midpoint,
    /// f linear on each cell.
    #[default]
    Linear,
}

/// A convolution kernel with its first two antiderivatives (both vanishing at 0).
pub trait CellKernel: Send + Sync {
    fn k(&self, s: f64) -> f64;
    fn k1(&self, s: f64) -> f64;
    fn k2(&self, s: f64) -> f64;
}

/// The Volterra kernel I with antiderivatives N and N2.
#[derive(Debug, Clone)]
pub struct IKernel(pub Arc<VolterraKernel>);

impl IKernel {
    pub fn new(policy: &EvalPolicy) -> Result<Self> {
        policy.validate()?;
        Ok(Self(VolterraKernel::shared(policy.quad_nodes)))
    }
}

impl CellKernel for IKernel {
    fn k(&self, s: f64) -> f64 {
        self.0.i_unchecked(s)
    }
    fn k1(&self, s: f64) -> f64 {
        self.0.n_unchecked(s)
    }
    fn k2(&self, s: f64) -> f64 {
        self.0.n2_unchecked(s)
    }
}

/// The logarithmic kernel J(s) = -γ - ln s.
#[derive(Debug, Clone, Copy, Default)]
pub struct JKernel;

impl CellKernel for JKernel {
    fn k(&self, s: f64) -> f64 {
        -EULER_GAMMA - s.ln()
    }
    fn k1(&self, s: f64) -> f64 {
        if s == 0.0 {
            0.0
        } else {
            s * (1.0 - EULER_GAMMA - s.ln())
        }
    }
    fn k2(&self, s: f64) -> f64 {
        if s == 0.0 {
            0.0
        } else {
            s * s * (0.75 - 0.5 * EULER_GAMMA - 0.5 * s.ln())
        }
    }
}

/// (total, right) moments of K over distances [d_b, d_b + h]: the total integral
/// and the weight multiplying the later node under linear interpolation.
pub fn cell_moments<K: CellKernel + ?Sized>(kernel: &K, d_b: f64, h: f64) -> (f64, f64) {
    let d_a = d_b + h;
    if d_b < h {
        let k1b = kernel.k1(d_b);
        let total = kernel.k1(d_a) - k1b;
        let right = (kernel.k2(d_a) - kernel.k2(d_b) - h * k1b) / h;
        (total, right)
    } else {
        // separated from the singularity: Gauss-Legendre avoids dividing a
        // cancelling difference by h
        let order = if h < 0.05 * d_b { 4 } else { 10 };
        let g = gauss_legendre(order);
        let (mut total, mut right) = (0.0, 0.0);
        for (s, w) in g.mapped(d_b, d_a) {
            let v = w * kernel.k(s);
            total += v;
            right += v * (d_a - s) / h;
        }
        (total, right)
    }
}

/// Product rule for one kernel on one grid, with a Toeplitz table on the
/// uniform tail.
#[derive(Debug, Clone)]
pub struct ProductRule<K: CellKernel> {
    grid: TimeGrid,
    kernel: K,
    // (left, right) for tail cells at index distance j = n - k - 1
    toeplitz: Vec<(f64, f64)>,
}

impl<K: CellKernel> ProductRule<K> {
    pub fn new(grid: &TimeGrid, kernel: K) -> Self {
        let toeplitz = match grid.tail() {
            Some(t) => {
                let cells = grid.len() - 1 - t.start;
                (0..cells)
                    .into_par_iter()
                    .map(|j| {
                        let (tot, r) = cell_moments(&kernel, j as f64 * t.step, t.step);
                        (tot - r, r)
                    })
                    .collect()
            }
            None => Vec::new(),
        };
        Self {
            grid: grid.clone(),
            kernel,
            toeplitz,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn kernel(&self) -> &K {
        &self.kernel
    }

    /// (left, right) linear weights of cell k for target node n > k.
    #[inline]
    pub fn cell(&self, n: usize, k: usize) -> (f64, f64) {
        if let Some(t) = self.grid.tail() {
            if k >= t.start {
                return self.toeplitz[n - k - 1];
            }
        }
        let nodes = self.grid.nodes();
        let d_b = self.grid.distance(n, k + 1);
        let h = nodes[k + 1] - nodes[k];
        let (tot, r) = cell_moments(&self.kernel, d_b, h);
        (tot - r, r)
    }

    /// Node weights for target n (length n + 1) under the given rule.
    pub fn row(&self, n: usize, rule: Rule) -> Vec<f64> {
        let mut w = vec![0.0; n + 1];
        for k in 0..n {
            let (l, r) = self.cell(n, k);
            match rule {
                Rule::Linear => {
                    w[k] += l;
                    w[k + 1] += r;
                }
                Rule::Midpoint => {
                    let tot = l + r;
                    w[k] += 0.5 * tot;
                    w[k + 1] += 0.5 * tot;
                }
                Rule::Left => w[k] += l + r,
            }
        }
        w
    }

    /// Σ_k (weights of cell k) · f at node n.
    pub fn apply_at(&self, n: usize, f: &[Complex64], rule: Rule) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..n {
            let (l, r) = self.cell(n, k);
            acc += match rule {
                Rule::Linear => f[k] * l + f[k + 1] * r,
                Rule::Midpoint => (f[k] + f[k + 1]) * (0.5 * (l + r)),
                Rule::Left => f[k] * (l + r),
            };
        }
        acc
    }

    /// Apply to every node in parallel.
    pub fn apply(&self, f: &[Complex64], rule: Rule) -> Vec<Complex64> {
        (0..self.grid.len())
            .into_par_iter()
            .map(|n| self.apply_at(n, f, rule))
            .collect()
    }
}

/// Cell weights for target node n.
///
/// `Left` and `Midpoint` return the n cell integrals w_k = N(t_n - t_k) - N(t_n - t_{k+1});
/// `Linear` returns n + 1 node weights of the piecewise-linear rule.
pub fn product_weights(grid: &TimeGrid, n: usize, rule: Rule, policy: &EvalPolicy) -> Result<Vec<f64>> {
    if n < 1 || n >= grid.len() {
        return Err(Error::OutOfRange {
            index: n,
            valid: format!("1..{}", grid.len()),
        });
    }
    let kernel = IKernel::new(policy)?;
    match rule {
        Rule::Linear => Ok(ProductRule::new(&grid.truncated(n)?, kernel).row(n, Rule::Linear)),
        Rule::Left | Rule::Midpoint => {
            let nodes = grid.nodes();
            Ok((0..n)
                .map(|k| kernel.k1(nodes[n] - nodes[k]) - kernel.k1(nodes[n] - nodes[k + 1]))
                .collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kern() -> IKernel {
        IKernel::new(&EvalPolicy::default()).unwrap()
    }

    #[test]
    fn moments_agree_between_branches() {
        let k = kern();
        // d_b just below and just above h
        for &(d_b, h) in &[(0.099, 0.1), (0.1, 0.1), (2.0, 0.01), (1.0, 1e-9)] {
            let (t1, r1) = cell_moments(&k, d_b, h);
            let total = k.k1(d_b + h) - k.k1(d_b);
            assert!((t1 - total).abs() < 1e-9 * total.abs().max(1e-6), "{d_b} {h}");
            assert!(r1 > 0.0 && r1 < t1);
        }
    }

    #[test]
    fn j_antiderivatives() {
        let j = JKernel;
        let s = 0.37;
        let e = 1e-6;
        assert!(((j.k1(s + e) - j.k1(s - e)) / (2.0 * e) - j.k(s)).abs() < 1e-8);
        assert!(((j.k2(s + e) - j.k2(s - e)) / (2.0 * e) - j.k1(s)).abs() < 1e-8);
    }

    #[test]
    fn left_weights_telescope() {
        let g = TimeGrid::graded(1.0, 40, 0.5).unwrap();
        let p = EvalPolicy::default();
        let w = product_weights(&g, 30, Rule::Left, &p).unwrap();
        let s: f64 = w.iter().sum();
        let n = kern().k1(g.nodes()[30]);
        assert!((s - n).abs() < 1e-14 * n.max(1.0));
        assert!(w.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn linear_weights_sum_to_n() {
        let g = TimeGrid::graded(2.0, 60, 0.7).unwrap();
        let p = EvalPolicy::default();
        for n in [1, 5, 59] {
            let w = product_weights(&g, n, Rule::Linear, &p).unwrap();
            assert_eq!(w.len(), n + 1);
            let s: f64 = w.iter().sum();
            let want = kern().k1(g.nodes()[n]);
            assert!((s - want).abs() < 1e-11 * want, "n={n}: {s} vs {want}");
        }
    }

    #[test]
    fn uniform_single_cell() {
        let g = TimeGrid::uniform(1.0, 11).unwrap();
        let w = product_weights(&g, 1, Rule::Left, &EvalPolicy::default()).unwrap();
        assert_eq!(w.len(), 1);
        assert!((w[0] - kern().k1(0.1)).abs() < 1e-15);
    }

    #[test]
    fn out_of_range() {
        let g = TimeGrid::uniform(1.0, 11).unwrap();
        assert!(product_weights(&g, 0, Rule::Left, &EvalPolicy::default()).is_err());
        assert!(product_weights(&g, 11, Rule::Left, &EvalPolicy::default()).is_err());
    }
}
