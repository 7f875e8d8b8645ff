use crate::error::{CliError, CliResult};
use crate::output::fmt17;
use clap::ValueEnum;
use num_complex::Complex64;
use pointnls::specfun::{macdonald_k0, q_series, sici, volterra_i, volterra_n, EvalPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Function {
    #[value(name = "I")]
    I,
    #[value(name = "N")]
    N,
    #[value(name = "K0")]
    K0,
    /// si in the real column, ci in the imaginary column.
    #[value(name = "sici")]
    Sici,
    #[value(name = "Q")]
    Q,
}

pub fn sample_points(tmin: f64, tmax: f64, points: usize, log: bool) -> CliResult<Vec<f64>> {
    if points == 0 || !(tmin.is_finite() && tmax.is_finite()) || tmax < tmin {
        return Err(CliError::Config(format!("need points ≥ 1 and tmin ≤ tmax; got {points}, [{tmin}, {tmax}]")));
    }
    if log && !(tmin > 0.0) {
        return Err(CliError::Config("log spacing needs tmin > 0".into()));
    }
    if points == 1 {
        return Ok(vec![tmin]);
    }
    let m = (points - 1) as f64;
    Ok((0..points)
        .map(|k| {
            let s = k as f64 / m;
            if k == points - 1 {
                tmax
            } else if log {
                (tmin.ln() + s * (tmax / tmin).ln()).exp()
            } else {
                tmin + s * (tmax - tmin)
            }
        })
        .collect())
}

pub fn evaluate(f: Function, t: f64, lambda: f64, policy: &EvalPolicy) -> CliResult<Complex64> {
    let v = match f {
        Function::I => Complex64::new(volterra_i(t, policy)?, 0.0),
        Function::N => Complex64::new(volterra_n(t, policy)?, 0.0),
        Function::K0 => Complex64::new(macdonald_k0(t, policy)?, 0.0),
        Function::Sici => {
            let (s, c) = sici(t)?;
            Complex64::new(s, c)
        }
        Function::Q => q_series(lambda, t, policy)?,
    };
    Ok(v)
}

/// Rows of `t,value_re,value_im`, header included.
pub fn table(f: Function, ts: &[f64], lambda: f64, policy: &EvalPolicy) -> CliResult<Vec<Vec<String>>> {
    let mut rows = vec![vec!["t".to_string(), "value_re".into(), "value_im".into()]];
    for &t in ts {
        let v = evaluate(f, t, lambda, policy)?;
        rows.push(vec![fmt17(t), fmt17(v.re), fmt17(v.im)]);
    }
    Ok(rows)
}
