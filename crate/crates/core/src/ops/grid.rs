use crate::error::{invalid, Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// How the nodes of a [`TimeGrid`] were laid out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grading {
    Uniform,
    /// Geometric cells toward t = 0 with the given ratio, uniform afterwards.
    Geometric { ratio: f64 },
}

/// Exactly uniform tail of a grid: nodes[j] = origin + (j - start) * step for j ≥ start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformTail {
    pub start: usize,
    pub origin: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    nodes: Vec<f64>,
    grading: Grading,
    tail: Option<UniformTail>,
}

/// Smallest first node of a graded grid, relative to its end time.
pub const DEFAULT_GRADING_FLOOR: f64 = 1e-12;

impl TimeGrid {
    /// Grid from explicit nodes. A uniform tail is detected when present.
    pub fn from_nodes(nodes: Vec<f64>, grading: Grading) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(invalid("nodes", "need at least 2 nodes"));
        }
        if nodes[0] != 0.0 {
            return Err(invalid("nodes", "first node must be 0"));
        }
        if nodes.iter().any(|t| !t.is_finite()) || nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("nodes", "nodes must be finite and strictly increasing"));
        }
        let tail = detect_tail(&nodes);
        Ok(Self { nodes, grading, tail })
    }

    /// The single node t = 0: the resolved part of a run that could not take a first step.
    pub fn origin_only() -> Self {
        Self {
            nodes: vec![0.0],
            grading: Grading::Uniform,
            tail: None,
        }
    }

    pub fn uniform(t_end: f64, n_nodes: usize) -> Result<Self> {
        check_end(t_end, n_nodes)?;
        let step = t_end / (n_nodes - 1) as f64;
        let nodes = (0..n_nodes).map(|j| j as f64 * step).collect();
        Ok(Self {
            nodes,
            grading: Grading::Uniform,
            tail: Some(UniformTail { start: 0, origin: 0.0, step }),
        })
    }

    /// Geometric cells shrinking by `ratio` toward 0 down to `DEFAULT_GRADING_FLOOR * t_end`,
    /// joined to a uniform tail whose step equals the largest geometric node.
    pub fn graded(t_end: f64, n_nodes: usize, ratio: f64) -> Result<Self> {
        Self::graded_with_floor(t_end, n_nodes, ratio, DEFAULT_GRADING_FLOOR * t_end)
    }

    pub fn graded_with_floor(t_end: f64, n_nodes: usize, ratio: f64, floor: f64) -> Result<Self> {
        check_end(t_end, n_nodes)?;
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(invalid("ratio", format!("{ratio} not in (0, 1)")));
        }
        if !(floor > 0.0 && floor < t_end) {
            return Err(invalid("floor", format!("{floor} not in (0, t_end)")));
        }
        // m geometric nodes below the uniform step h; k = n - 1 - m uniform nodes
        let mut m = 0usize;
        for _ in 0..50 {
            let k = n_nodes - 1 - m;
            let h = t_end / k as f64;
            let want = if h <= floor {
                0
            } else {
                ((floor / h).ln() / ratio.ln()).ceil() as usize
            };
            let want = want.min(n_nodes.saturating_sub(2));
            if want == m {
                break;
            }
            m = want;
        }
        let k = n_nodes - 1 - m;
        let h = t_end / k as f64;
        let mut nodes = Vec::with_capacity(n_nodes);
        nodes.push(0.0);
        for j in (1..=m).rev() {
            nodes.push(h * ratio.powi(j as i32));
        }
        let start = nodes.len();
        for j in 0..k {
            nodes.push(h + j as f64 * h);
        }
        Ok(Self {
            nodes,
            grading: Grading::Geometric { ratio },
            tail: Some(UniformTail { start, origin: h, step: h }),
        })
    }

    /// Every cell split into `factor` equal parts.
    pub fn refined(&self, factor: usize) -> Self {
        let factor = factor.max(1);
        let mut nodes = Vec::with_capacity((self.nodes.len() - 1) * factor + 1);
        nodes.push(0.0);
        let tail_start = self.tail.map(|t| t.start);
        let mut new_tail = None;
        for k in 0..self.nodes.len() - 1 {
            if Some(k) == tail_start {
                let t = self.tail.unwrap();
                new_tail = Some(UniformTail {
                    start: nodes.len() - 1,
                    origin: t.origin,
                    step: t.step / factor as f64,
                });
            }
            if let (Some(t), Some(s)) = (new_tail, tail_start) {
                if k >= s {
                    let base = (k - s) * factor;
                    for j in 1..=factor {
                        nodes.push(t.origin + (base + j) as f64 * t.step);
                    }
                    continue;
                }
            }
            let (a, b) = (self.nodes[k], self.nodes[k + 1]);
            for j in 1..factor {
                nodes.push(a + (b - a) * j as f64 / factor as f64);
            }
            nodes.push(b);
        }
        Self {
            nodes,
            grading: self.grading,
            tail: new_tail,
        }
    }

    /// Prefix of the grid up to and including node `last`.
    pub fn truncated(&self, last: usize) -> Result<Self> {
        if last < 1 || last >= self.nodes.len() {
            return Err(Error::OutOfRange {
                index: last,
                valid: format!("1..{}", self.nodes.len()),
            });
        }
        let tail = self.tail.filter(|t| t.start <= last);
        Ok(Self {
            nodes: self.nodes[..=last].to_vec(),
            grading: self.grading,
            tail,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn t_end(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn grading(&self) -> Grading {
        self.grading
    }

    pub fn tail(&self) -> Option<UniformTail> {
        self.tail
    }

    pub fn max_step(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Index of the node closest to `t`.
    pub fn nearest(&self, t: f64) -> usize {
        match self.nodes.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) if i >= self.nodes.len() => self.nodes.len() - 1,
            Err(i) => {
                if t - self.nodes[i - 1] <= self.nodes[i] - t {
                    i - 1
                } else {
                    i
                }
            }
        }
    }

    /// Distance t_n - t_k, exact on the uniform tail.
    #[inline]
    pub(crate) fn distance(&self, n: usize, k: usize) -> f64 {
        if let Some(t) = self.tail {
            if k >= t.start {
                return (n - k) as f64 * t.step;
            }
        }
        self.nodes[n] - self.nodes[k]
    }
}

fn check_end(t_end: f64, n_nodes: usize) -> Result<()> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(invalid("t_end", format!("{t_end} must be positive")));
    }
    if n_nodes < 2 {
        return Err(invalid("n_nodes", "need at least 2 nodes"));
    }
    Ok(())
}

fn detect_tail(nodes: &[f64]) -> Option<UniformTail> {
    let n = nodes.len();
    let step = nodes[n - 1] - nodes[n - 2];
    let tol = 1e-12 * nodes[n - 1];
    let mut start = n - 2;
    while start > 0 {
        let pred = nodes[n - 1] - (n - 1 - (start - 1)) as f64 * step;
        if (nodes[start - 1] - pred).abs() > tol {
            break;
        }
        start -= 1;
    }
    if n - 1 - start < 2 {
        return None;
    }
    Some(UniformTail {
        start,
        origin: nodes[n - 1] - (n - 1 - start) as f64 * step,
        step,
    })
}

/// Complex samples on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledSignal {
    grid: TimeGrid,
    values: Vec<Complex64>,
}

impl SampledSignal {
    pub fn new(grid: TimeGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(invalid("values", format!("non-finite entry at node {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn<F: FnMut(f64) -> Complex64>(grid: TimeGrid, mut f: F) -> Result<Self> {
        let values = grid.nodes().iter().map(|&t| f(t)).collect();
        Self::new(grid, values)
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        let values = vec![Complex64::new(0.0, 0.0); grid.len()];
        Self { grid, values }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// a·self + b·other on a common grid.
    pub fn combine(&self, a: Complex64, other: &SampledSignal, b: Complex64) -> Result<Self> {
        if self.grid.nodes() != other.grid.nodes() {
            return Err(Error::GridMismatch("combine".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Self::new(self.grid.clone(), values)
    }

    pub fn map<F: FnMut(Complex64) -> Complex64>(&self, f: F) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().copied().map(f).collect())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Max |self - other| over nodes.
    pub fn max_diff(&self, other: &SampledSignal) -> Result<f64> {
        if self.grid.nodes() != other.grid.nodes() {
            return Err(Error::GridMismatch("max_diff".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Piecewise-linear interpolant at time t inside the grid.
    pub fn interpolate(&self, t: f64) -> Complex64 {
        let nodes = self.grid.nodes();
        if t <= 0.0 {
            return self.values[0];
        }
        if t >= self.grid.t_end() {
            return *self.values.last().unwrap();
        }
        let i = nodes.partition_point(|&x| x <= t) - 1;
        let s = (t - nodes[i]) / (nodes[i + 1] - nodes[i]);
        self.values[i] * (1.0 - s) + self.values[i + 1] * s
    }

    /// Restriction to nodes 0..=last.
    pub fn truncated(&self, last: usize) -> Result<Self> {
        let grid = self.grid.truncated(last)?;
        Ok(Self {
            grid,
            values: self.values[..=last].to_vec(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_basics() {
        let g = TimeGrid::uniform(1.0, 11).unwrap();
        assert_eq!(g.len(), 11);
        assert!((g.t_end() - 1.0).abs() < 1e-15);
        assert!((g.distance(7, 3) - 0.4).abs() < 1e-15);
        assert!(TimeGrid::uniform(1.0, 1).is_err());
        assert!(TimeGrid::uniform(-1.0, 5).is_err());
    }

    #[test]
    fn graded_grid_has_requested_size_and_floor() {
        let g = TimeGrid::graded(2.0, 300, 0.7).unwrap();
        assert_eq!(g.len(), 300);
        assert!(g.nodes()[1] <= 2.0 * DEFAULT_GRADING_FLOOR * 1.0001);
        assert!(g.nodes()[1] > 0.0);
        let tail = g.tail().unwrap();
        let nodes = g.nodes();
        for j in tail.start..nodes.len() {
            let pred = tail.origin + (j - tail.start) as f64 * tail.step;
            assert_eq!(nodes[j], pred);
        }
        for w in nodes.windows(3).take(tail.start - 1).skip(1) {
            let r = (w[1] - w[0]) / (w[2] - w[1]);
            assert!((r - 0.7).abs() < 1e-9, "r = {r}");
        }
    }

    #[test]
    fn refinement_keeps_structure() {
        let g = TimeGrid::graded(1.0, 100, 0.7).unwrap();
        let r = g.refined(2);
        assert_eq!(r.len(), 2 * 99 + 1);
        for k in 0..g.len() {
            assert_eq!(g.nodes()[k], r.nodes()[2 * k]);
        }
        let t = r.tail().unwrap();
        assert_eq!(t.step, g.tail().unwrap().step / 2.0);
        assert_eq!(r.nodes()[t.start], t.origin);
    }

    #[test]
    fn from_nodes_validation() {
        assert!(TimeGrid::from_nodes(vec![0.0, 1.0, 0.5], Grading::Uniform).is_err());
        assert!(TimeGrid::from_nodes(vec![0.1, 1.0], Grading::Uniform).is_err());
        let g = TimeGrid::from_nodes(vec![0.0, 1e-3, 0.1, 0.2, 0.3, 0.4], Grading::Uniform).unwrap();
        let t = g.tail().unwrap();
        assert_eq!(t.start, 2);
    }

    #[test]
    fn signal_validation_and_interpolation() {
        let g = TimeGrid::uniform(1.0, 3).unwrap();
        assert!(SampledSignal::new(g.clone(), vec![Complex64::new(0.0, 0.0); 2]).is_err());
        let bad = vec![Complex64::new(f64::NAN, 0.0); 3];
        assert!(SampledSignal::new(g.clone(), bad).is_err());
        let s = SampledSignal::from_fn(g, |t| Complex64::new(2.0 * t, -t)).unwrap();
        let v = s.interpolate(0.3);
        assert!((v - Complex64::new(0.6, -0.3)).norm() < 1e-15);
    }
}
