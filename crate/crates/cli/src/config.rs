//! Run configuration. TOML is the primary format; a `.json` file with the
//! same structure is accepted as well. Unknown keys are rejected.

use crate::error::{CliError, CliResult};
use num_complex::Complex64;
use pointnls::charge::SolverConfig;
use pointnls::field::{InitialDatum, ModelParams, RegularProfile};
use pointnls::specfun::EvalPolicy;
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub datum: DatumConfig,
    pub params: ModelParams,
    #[serde(default)]
    pub solver: SolverConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub outputs: OutputsConfig,
    #[serde(default)]
    pub policy: EvalPolicy,
    /// Directory of the config file, for relative paths.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatumConfig {
    #[serde(default = "one")]
    pub lambda: f64,
    pub q0_re: f64,
    #[serde(default)]
    pub q0_im: f64,
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// Absent means φ ≡ 0.
    #[serde(default)]
    pub regular: Option<RegularConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum RegularConfig {
    Gaussian(GaussianConfig),
    Sampled(SampledConfig),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianConfig {
    /// Real number, `[re, im]`, or `"in_domain"` to satisfy the boundary condition at t = 0.
    pub a: Amplitude,
    pub b: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Amplitude {
    Real(f64),
    Complex([f64; 2]),
    Keyword(String),
}

/// CSV with columns `p,re,im`; the decay exponent is estimated from the last
/// two samples unless given.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SampledConfig {
    Path(PathBuf),
    Detailed {
        path: PathBuf,
        decay_exponent: Option<f64>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub t_end: f64,
    /// Adaptive continuation instead of the fixed graded grid.
    #[serde(default)]
    pub adaptive: bool,
    /// Momentum cutoff in ρ = p² for the observables.
    #[serde(default = "default_rho_max")]
    pub rho_max: f64,
    #[serde(default = "yes")]
    pub observables: bool,
    /// Times at which ψ̂ is exported as `p,re,im`.
    #[serde(default)]
    pub snapshots: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    #[serde(default)]
    pub directory: Option<PathBuf>,
    #[serde(default = "default_name")]
    pub name: String,
}

impl Default for OutputsConfig {
    fn default() -> Self {
        Self {
            directory: None,
            name: default_name(),
        }
    }
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

fn default_rho_max() -> f64 {
    2000.0
}

fn default_name() -> String {
    "run".into()
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let mut cfg = Self::parse(&text, is_json).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn parse(text: &str, json: bool) -> Result<Self, String> {
        let cfg: RunConfig = if json {
            serde_json::from_str(text).map_err(|e| e.to_string())?
        } else {
            toml::from_str(text).map_err(|e| e.to_string())?
        };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), String> {
        if !(self.grid.t_end > 0.0 && self.grid.t_end.is_finite()) {
            return Err("grid.t_end must be positive".into());
        }
        if !(self.grid.rho_max > 0.0) {
            return Err("grid.rho_max must be positive".into());
        }
        if let Some(t) = self.grid.snapshots.iter().find(|t| !(**t >= 0.0 && **t <= self.grid.t_end)) {
            return Err(format!("grid.snapshots: {t} outside [0, t_end]"));
        }
        if self.outputs.name.is_empty() || self.outputs.name.contains(['/', '\\']) {
            return Err("outputs.name must be a plain file stem".into());
        }
        self.params.validate().map_err(|e| e.to_string())?;
        self.solver.validate().map_err(|e| e.to_string())?;
        self.policy.validate().map_err(|e| e.to_string())?;
        Ok(())
    }

    /// Step parameters divided by 2^levels and ρ_max multiplied by 2^levels.
    pub fn refined(&self, levels: u32) -> Self {
        let f = 1usize << levels;
        let mut c = self.clone();
        c.solver = self.solver.refined(f);
        c.grid.rho_max *= f as f64;
        c
    }

    pub fn datum(&self) -> CliResult<InitialDatum> {
        let d = &self.datum;
        let q0 = Complex64::new(d.q0_re, d.q0_im);
        let regular = match &d.regular {
            None => RegularProfile::zero(),
            Some(RegularConfig::Gaussian(g)) => {
                let a = match &g.a {
                    Amplitude::Real(x) => Complex64::new(*x, 0.0),
                    Amplitude::Complex([re, im]) => Complex64::new(*re, *im),
                    Amplitude::Keyword(k) if k == "in_domain" => {
                        if d.lambda != 1.0 {
                            return Err(CliError::Config("a = \"in_domain\" requires lambda = 1".into()));
                        }
                        q0 * (2.0 * g.b * self.params.boundary_coefficient(q0))
                    }
                    Amplitude::Keyword(k) => {
                        return Err(CliError::Config(format!(
                            "datum.regular.gaussian.a: unknown keyword `{k}` (expected a number, [re, im] or \"in_domain\")"
                        )))
                    }
                };
                RegularProfile::Gaussian { a, b: g.b }
            }
            Some(RegularConfig::Sampled(s)) => {
                let (path, decay) = match s {
                    SampledConfig::Path(p) => (p, None),
                    SampledConfig::Detailed { path, decay_exponent } => (path, *decay_exponent),
                };
                read_profile(&self.base_dir.join(path), decay)?
            }
        };
        let mut datum = InitialDatum {
            lambda: d.lambda,
            q0,
            regular,
            epsilon: 0.5,
        };
        if let Some(e) = d.epsilon {
            datum.epsilon = e;
        }
        datum.validate()?;
        Ok(datum)
    }
}

fn read_profile(path: &Path, decay: Option<f64>) -> CliResult<RegularProfile> {
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
    let mut p = Vec::new();
    let mut values = Vec::new();
    for rec in rdr.deserialize::<(f64, f64, f64)>() {
        let (x, re, im) = rec.map_err(csv_err)?;
        p.push(x);
        values.push(Complex64::new(re, im));
    }
    let n = p.len();
    if n < 2 {
        return Err(CliError::Config(format!("{}: need at least 2 samples", path.display())));
    }
    let decay_exponent = match decay {
        Some(a) => a,
        None => {
            let (v0, v1) = (values[n - 2].norm(), values[n - 1].norm());
            if v0 > 0.0 && v1 > 0.0 && p[n - 2] > 0.0 {
                -(v1 / v0).ln() / (p[n - 1] / p[n - 2]).ln()
            } else {
                f64::INFINITY
            }
        }
    };
    // an identically vanishing tail decays faster than any power
    let decay_exponent = if decay_exponent.is_finite() { decay_exponent } else { 1e3 };
    Ok(RegularProfile::Sampled {
        p,
        values,
        decay_exponent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[datum]
q0_re = 1.0
regular = { gaussian = { a = "in_domain", b = 1.0 } }

[params]
sigma = 1.0
beta0 = 1.0

[grid]
t_end = 0.5
"#;

    #[test]
    fn minimal_toml() {
        let c = RunConfig::parse(MINIMAL, false).unwrap();
        let d = c.datum().unwrap();
        assert_eq!(d.q0, Complex64::new(1.0, 0.0));
        assert_eq!(c.outputs.name, "run");
        assert_eq!(c.solver, SolverConfig::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = MINIMAL.replace("t_end = 0.5", "t_end = 0.5\nt_ned = 1.0");
        let e = RunConfig::parse(&bad, false).unwrap_err();
        assert!(e.contains("t_ned"), "{e}");
        let bad = MINIMAL.replace("beta0 = 1.0", "beta0 = 1.0\ngamma = 2");
        assert!(RunConfig::parse(&bad, false).is_err());
    }

    #[test]
    fn json_equivalent() {
        let json = r#"{
            "datum": {"q0_re": 1.0, "regular": {"gaussian": {"a": [0.5, 0.1], "b": 2.0}}},
            "params": {"sigma": 1.0, "beta0": -1.0},
            "grid": {"t_end": 1.0, "adaptive": true}
        }"#;
        let c = RunConfig::parse(json, true).unwrap();
        match c.datum().unwrap().regular {
            RegularProfile::Gaussian { a, b } => {
                assert_eq!(a, Complex64::new(0.5, 0.1));
                assert_eq!(b, 2.0);
            }
            _ => panic!(),
        }
        assert!(c.grid.adaptive);
    }

    #[test]
    fn invariants_checked() {
        let bad = MINIMAL.replace("sigma = 1.0", "sigma = 0.25");
        assert!(RunConfig::parse(&bad, false).is_err());
        let bad = MINIMAL.replace("t_end = 0.5", "t_end = -1.0");
        assert!(RunConfig::parse(&bad, false).is_err());
        let bad = MINIMAL.replace("\"in_domain\"", "\"in_dommain\"");
        let c = RunConfig::parse(&bad, false).unwrap();
        assert!(c.datum().is_err());
    }

    #[test]
    fn refinement_scales_steps_and_cutoff() {
        let c = RunConfig::parse(MINIMAL, false).unwrap();
        let r = c.refined(1);
        assert_eq!(r.solver.step_max, c.solver.step_max / 2.0);
        assert_eq!(r.grid.rho_max, 2.0 * c.grid.rho_max);
    }
}
