//! `solve` and `scan`: run the charge solver, measure observables and write
//! per-run CSV and JSON files.

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::{fmt17, write_csv, write_json};
use pointnls::charge::{continue_until, solve_charge, ChargeTrajectory, SolveStatus};
use pointnls::field::{observe, reconstruct_spectral, MomentumGrid, ObservableSeries};
use rayon::prelude::*;
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize)]
pub struct Drift {
    pub mass: f64,
    pub energy: f64,
}

/// JSON summary of one run.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub name: String,
    /// "completed" or "blow_up".
    pub status: &'static str,
    pub t_end: f64,
    /// Present for blow-up; null when T* lies below the step floor.
    #[serde(rename = "T_star", skip_serializing_if = "Option::is_none")]
    pub t_star: Option<Option<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blowup_window: Option<[f64; 2]>,
    pub sup_q: f64,
    #[serde(rename = "E0")]
    pub e0: Option<f64>,
    pub drift: Option<Drift>,
    pub nodes: usize,
    pub fixed_point_residual: f64,
    pub experimental: bool,
    pub beta0: f64,
    pub sigma: f64,
    /// Files written for this run, relative to the output directory.
    pub files: Vec<String>,
}

pub fn solve_trajectory(cfg: &RunConfig) -> CliResult<ChargeTrajectory> {
    let datum = cfg.datum()?;
    let t = cfg.grid.t_end;
    let traj = if cfg.grid.adaptive {
        continue_until(&datum, &cfg.params, &cfg.solver, t, &cfg.policy)?
    } else {
        let grid = cfg.solver.grid(t)?;
        solve_charge(&datum, &cfg.params, &cfg.solver, &grid, &cfg.policy)?
    };
    Ok(traj)
}

/// Solve, measure and write `<name>.csv`, `<name>.json` and snapshots into `out_dir`.
pub fn run_one(cfg: &RunConfig, out_dir: &Path) -> CliResult<RunSummary> {
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let datum = cfg.datum()?;
    let traj = solve_trajectory(cfg)?;
    let t_last = traj.grid().t_end();
    let obs = if cfg.grid.observables {
        let mg = MomentumGrid::for_horizon(cfg.grid.t_end, cfg.grid.rho_max)?;
        Some(observe(&datum, &traj, &cfg.params, &mg)?)
    } else {
        None
    };
    let name = &cfg.outputs.name;
    let mut files = Vec::new();

    let csv_name = format!("{name}.csv");
    write_csv(&out_dir.join(&csv_name), &trajectory_rows(&traj, obs.as_ref()))?;
    files.push(csv_name);

    if !cfg.grid.snapshots.is_empty() {
        let mg = MomentumGrid::for_horizon(cfg.grid.t_end, cfg.grid.rho_max)?;
        for (i, &ts) in cfg.grid.snapshots.iter().enumerate() {
            if ts > t_last {
                continue;
            }
            let node = traj.grid().nearest(ts);
            let field = reconstruct_spectral(&datum, &traj, node, &mg)?;
            let snap = format!("{name}_snapshot{i}.csv");
            let path = out_dir.join(&snap);
            std::fs::write(&path, field.to_csv()).map_err(|e| CliError::io(&path, e))?;
            files.push(snap);
        }
    }

    let (status, t_star, window) = match traj.status {
        SolveStatus::Completed { .. } => ("completed", None, None),
        SolveStatus::BlowUp { t_star, window } => {
            ("blow_up", Some(t_star.is_finite().then_some(t_star)), Some(window))
        }
    };
    let json_name = format!("{name}.json");
    files.push(json_name.clone());
    let summary = RunSummary {
        name: name.clone(),
        status,
        t_end: t_last,
        t_star,
        blowup_window: window,
        sup_q: traj.sup_abs(),
        e0: obs.as_ref().map(|o| o.energy[0]),
        drift: obs.as_ref().map(|o| Drift {
            mass: o.mass_drift(),
            energy: o.energy_drift(),
        }),
        nodes: traj.q.len(),
        fixed_point_residual: traj.fixed_point_residual,
        experimental: traj.experimental,
        beta0: cfg.params.beta0,
        sigma: cfg.params.sigma,
        files,
    };
    write_json(&out_dir.join(&json_name), &summary)?;
    Ok(summary)
}

fn trajectory_rows(traj: &ChargeTrajectory, obs: Option<&ObservableSeries>) -> Vec<Vec<String>> {
    let mut rows = vec![["t", "q_re", "q_im", "abs_q", "mass", "energy", "residual"]
        .iter()
        .map(|s| s.to_string())
        .collect()];
    let nan = f64::NAN;
    for (n, (t, q)) in traj.grid().nodes().iter().zip(traj.q.values()).enumerate() {
        let (m, e, r) = match obs {
            Some(o) => (o.mass[n], o.energy[n], o.boundary[n].norm()),
            None => (nan, nan, nan),
        };
        rows.push([*t, q.re, q.im, q.norm(), m, e, r].iter().map(|v| fmt17(*v)).collect());
    }
    rows
}

/// One scan cell result: the summary or the error message with its exit code.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum CellOutcome {
    Ok(RunSummary),
    Failed { name: String, beta0: f64, sigma: f64, error: String, exit_code: i32 },
}

/// Run every (β0, σ) cell concurrently; each cell writes its own files.
pub fn scan(base: &RunConfig, beta0s: &[f64], sigmas: &[f64], out_dir: &Path) -> Vec<CellOutcome> {
    let cells: Vec<(f64, f64)> = beta0s
        .iter()
        .flat_map(|&b| sigmas.iter().map(move |&s| (b, s)))
        .collect();
    cells
        .par_iter()
        .map(|&(beta0, sigma)| {
            let mut cfg = base.clone();
            cfg.params.beta0 = beta0;
            cfg.params.sigma = sigma;
            cfg.outputs.name = format!("{}_beta{}_sigma{}", base.outputs.name, beta0, sigma);
            let name = cfg.outputs.name.clone();
            match cfg.params.validate().map_err(CliError::from).and_then(|_| run_one(&cfg, out_dir)) {
                Ok(s) => CellOutcome::Ok(s),
                Err(e) => CellOutcome::Failed {
                    name,
                    beta0,
                    sigma,
                    error: e.to_string(),
                    exit_code: e.exit_code(),
                },
            }
        })
        .collect()
}

/// Output directory: flag, then config, then `POINTNLS_OUT_DIR`, then `pointnls-out`.
pub fn resolve_out_dir(flag: Option<&Path>, cfg: Option<&RunConfig>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(d) = cfg.and_then(|c| c.outputs.directory.as_ref()) {
        return cfg.unwrap().base_dir.join(d);
    }
    default_out_dir().unwrap_or_else(|| PathBuf::from("pointnls-out"))
}

pub fn default_out_dir() -> Option<PathBuf> {
    std::env::var_os(crate::OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}
