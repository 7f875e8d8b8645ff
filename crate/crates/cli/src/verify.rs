//! Quick self-checks against the independent oracles. Each suite takes a few
//! seconds; the full acceptance runs live in the core test suite.

use crate::error::CliResult;
use clap::ValueEnum;
use num_complex::Complex64;
use pointnls::charge::{solve_charge, SolverConfig};
use pointnls::field::{observe, InitialDatum, ModelParams, MomentumGrid};
use pointnls::ops::{check_inversion, Rule, SampledSignal, TimeGrid};
use pointnls::oracle::{k0_integral, picard_linear, q_from_momentum, quad_defining_i, quad_defining_n, sici_integral};
use pointnls::specfun::{macdonald_k0, q_series, sici, volterra_i, volterra_n, EvalPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Kernels,
    Operators,
    Charge,
    Conservation,
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tol: f64,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tol,
        }
    }

    pub fn passed(&self) -> bool {
        self.value <= self.tol
    }
}

pub fn run(suite: Suite) -> CliResult<Vec<Check>> {
    let policy = EvalPolicy::default();
    match suite {
        Suite::Kernels => kernels(&policy),
        Suite::Operators => operators(&policy),
        Suite::Charge => charge(&policy),
        Suite::Conservation => conservation(&policy),
    }
}

pub fn render(suite: Suite, checks: &[Check]) -> String {
    let mut s = format!("{:<44} {:>12} {:>10}  result\n", format!("{suite:?}").to_lowercase(), "value", "tol");
    for c in checks {
        let verdict = if c.passed() { "PASS" } else { "FAIL" };
        s.push_str(&format!("{:<44} {:>12.3e} {:>10.1e}  {verdict}\n", c.name, c.value, c.tol));
    }
    s
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn kernels(p: &EvalPolicy) -> CliResult<Vec<Check>> {
    let budget = 200;
    let mut out = Vec::new();
    for t in [1e-6, 0.1, 2.0] {
        out.push(Check::new(format!("I({t:e}) vs defining integral"), rel(volterra_i(t, p)?, quad_defining_i(t, budget)?), 1e-7));
        out.push(Check::new(format!("N({t:e}) vs defining integral"), rel(volterra_n(t, p)?, quad_defining_n(t, budget)?), 1e-7));
    }
    for x in [0.5, 5.0] {
        out.push(Check::new(format!("K0({x}) vs integral"), rel(macdonald_k0(x, p)?, k0_integral(x, budget)?), 1e-7));
        let (s, c) = sici(x)?;
        let (so, co) = sici_integral(x, budget)?;
        out.push(Check::new(format!("si/ci({x}) vs integral"), rel(s, so).max(rel(c, co)), 1e-7));
    }
    let q = q_series(1.0, 0.7, p)?;
    let qo = q_from_momentum(1.0, 0.7, budget)?;
    out.push(Check::new("Q(1; 0.7) vs momentum integral", (q - qo).norm() / qo.norm(), 1e-7));
    Ok(out)
}

fn operators(p: &EvalPolicy) -> CliResult<Vec<Check>> {
    let residual = |n: usize| -> CliResult<f64> {
        let g = TimeGrid::uniform(1.0, n)?;
        let f = SampledSignal::from_fn(g, |t| Complex64::new(0.0, t).exp())?;
        Ok(check_inversion(&f, Rule::Linear, p)?)
    };
    let coarse = residual(129)?;
    let fine = residual(257)?;
    Ok(vec![
        Check::new("J∘I inversion, e^{it}, 257 nodes", fine, 1e-2),
        Check::new("inversion residual ratio fine/coarse", fine / coarse, 1.0 / 1.5),
    ])
}

fn charge(p: &EvalPolicy) -> CliResult<Vec<Check>> {
    let params = ModelParams::new(0.0, 1.0);
    let datum = InitialDatum::gaussian_in_domain(Complex64::new(1.0, 0.0), 1.0, &params)?;
    let grid = TimeGrid::uniform(0.25, 129)?;
    let traj = solve_charge(&datum, &params, &SolverConfig::default(), &grid, p)?;
    let c = params.h(Complex64::new(1.0, 0.0));
    let oracle = picard_linear(&traj.forcing, c, &grid, 1e-13, 500)?;
    Ok(vec![
        Check::new("σ=0 solve vs Picard oracle, same grid", oracle.q.max_diff(&traj.q)?, 1e-10),
        Check::new("fixed-point residual", traj.fixed_point_residual, 1e-9),
    ])
}

fn conservation(p: &EvalPolicy) -> CliResult<Vec<Check>> {
    let params = ModelParams::new(1.0, 1.0);
    let datum = InitialDatum::gaussian_in_domain(Complex64::new(1.0, 0.0), 1.0, &params)?;
    let cfg = SolverConfig::default();
    let t_end = 0.5;
    let traj = solve_charge(&datum, &params, &cfg, &cfg.grid(t_end)?, p)?;
    let obs = observe(&datum, &traj, &params, &MomentumGrid::for_horizon(t_end, 2000.0)?)?;
    Ok(vec![
        Check::new("mass drift, β0=1, T=0.5", obs.mass_drift(), 1e-3),
        Check::new("energy drift, β0=1, T=0.5", obs.energy_drift(), 1e-2),
        Check::new("boundary residual at T", obs.boundary_at(t_end), 5e-2),
    ])
}
