//! TOML run configuration. Frequencies are ordinary frequencies (GHz, MHz),
//! times in μs for decoherence and ns for integration steps. Unknown keys
//! are rejected.

use std::path::{Path, PathBuf};

use crosskerr_core::experiments::{default_d_grid, default_heatmap_grid, RunOptions};
use crosskerr_core::{DecayRates, DeviceParams, HamiltonianKind, Tolerances};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Optional: which subcommand this file is meant for.
    #[serde(default)]
    pub experiment: Option<String>,
    pub device: DeviceSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub numerics: NumericsSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSection {
    pub omega_a_ghz: f64,
    pub omega_b_ghz: f64,
    pub delta_a_ghz: f64,
    pub delta_b_ghz: f64,
    pub g_mhz: f64,
    /// Solved from the gate condition when absent.
    #[serde(default)]
    pub mu_mhz: Option<f64>,
    #[serde(default)]
    pub g_ab_mhz: f64,
    #[serde(default = "one")]
    pub k: u32,
    /// Qutrit decoherence time scale; no qutrit loss when absent.
    #[serde(default)]
    pub gamma_us: Option<f64>,
    /// Resonator lifetime; no photon loss when absent.
    #[serde(default)]
    pub eta_us: Option<f64>,
}

fn one() -> u32 {
    1
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Gate sweep grid.
    #[serde(default)]
    pub delta_b_ghz: Option<Vec<f64>>,
    /// Heatmap grid axes.
    #[serde(default)]
    pub gamma_us: Option<Vec<f64>>,
    #[serde(default)]
    pub eta_us: Option<Vec<f64>>,
    /// Prepend the five quoted `(γ, η)` anchors to the heatmap.
    #[serde(default)]
    pub include_quoted: Option<bool>,
    /// Cat sweep grid.
    #[serde(default)]
    pub d_ratio: Option<Vec<f64>>,
    #[serde(default)]
    pub m: Option<Vec<usize>>,
    #[serde(default)]
    pub alpha_a: Option<f64>,
    #[serde(default)]
    pub beta_b: Option<f64>,
    /// Effective-model validation: photon sector and detuning scales.
    #[serde(default)]
    pub sector: Option<[usize; 2]>,
    #[serde(default)]
    pub scales: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    #[serde(default)]
    pub dim_a: Option<usize>,
    #[serde(default)]
    pub dim_b: Option<usize>,
    #[serde(default)]
    pub dt_ns: Option<f64>,
    #[serde(default)]
    pub monitor_every: Option<usize>,
    #[serde(default)]
    pub trace_tol: Option<f64>,
    #[serde(default)]
    pub hermiticity_tol: Option<f64>,
    #[serde(default)]
    pub positivity_tol: Option<f64>,
    #[serde(default)]
    pub global_error_tol: Option<f64>,
    /// `full`, `full+crosstalk` or `rotating-frame`.
    #[serde(default)]
    pub model: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let c: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        c.device_params()?.validate().map_err(|e| CliError::Config(e.to_string()))?;
        c.options(1)?;
        Ok(c)
    }

    pub fn rates(&self) -> DecayRates {
        let d = &self.device;
        let mut r = DecayRates::none();
        if let Some(g) = d.gamma_us {
            let q = DecayRates::from_times(g, 1.0);
            r.gamma_eg = q.gamma_eg;
            r.gamma_fe = q.gamma_fe;
            r.gamma_fg = q.gamma_fg;
            r.gamma_phi_e = q.gamma_phi_e;
            r.gamma_phi_f = q.gamma_phi_f;
        }
        if let Some(e) = d.eta_us {
            r.kappa_a = 1.0 / e;
            r.kappa_b = 1.0 / e;
        }
        r
    }

    /// Device parameters; a missing `mu_mhz` is solved from the gate
    /// condition at the configured `delta_b`.
    pub fn device_params(&self) -> Result<DeviceParams, CliError> {
        let d = &self.device;
        let mu = match d.mu_mhz {
            Some(mu) => mu,
            None => {
                crosskerr_core::solve_gate_parameters(d.g_mhz, d.delta_a_ghz, d.delta_b_ghz, d.k)
                    .map_err(|e| CliError::Config(format!("mu_mhz not given and cannot be solved: {e}")))?
                    .mu_mhz
            }
        };
        Ok(DeviceParams {
            omega_a_ghz: d.omega_a_ghz,
            omega_b_ghz: d.omega_b_ghz,
            delta_a_ghz: d.delta_a_ghz,
            delta_b_ghz: d.delta_b_ghz,
            g_mhz: d.g_mhz,
            mu_mhz: mu,
            g_ab_mhz: d.g_ab_mhz,
            k: d.k,
            rates: self.rates(),
        })
    }

    pub fn options(&self, workers: usize) -> Result<RunOptions, CliError> {
        let n = &self.numerics;
        let defaults = Tolerances::default();
        let kind = match n.model.as_deref() {
            None | Some("full+crosstalk") => HamiltonianKind::FullCrosstalk,
            Some("full") => HamiltonianKind::Full,
            Some("rotating-frame") => HamiltonianKind::RotatingFrame,
            Some(other) => return Err(CliError::Config(format!("unknown numerics.model '{other}'"))),
        };
        for (name, v) in [("dim_a", n.dim_a), ("dim_b", n.dim_b)] {
            if let Some(d) = v {
                if d < 2 {
                    return Err(CliError::Config(format!("numerics.{name} must be at least 2")));
                }
            }
        }
        if let Some(dt) = n.dt_ns {
            if !(dt > 0.0) {
                return Err(CliError::Config("numerics.dt_ns must be positive".into()));
            }
        }
        Ok(RunOptions {
            dim_a: n.dim_a,
            dim_b: n.dim_b,
            dt_ns: n.dt_ns,
            monitor_every: n.monitor_every.unwrap_or(100).max(1),
            tolerances: Tolerances {
                trace: n.trace_tol.unwrap_or(defaults.trace),
                hermiticity: n.hermiticity_tol.unwrap_or(defaults.hermiticity),
                positivity: n.positivity_tol.unwrap_or(defaults.positivity),
                global_error: n.global_error_tol.unwrap_or(defaults.global_error),
            },
            kind,
            workers,
        })
    }

    pub fn gate_grid(&self) -> Vec<f64> {
        self.sweep
            .delta_b_ghz
            .clone()
            .unwrap_or_else(|| (0..8).map(|i| 0.4 + 0.1 * i as f64).collect())
    }

    pub fn heatmap_pairs(&self) -> Vec<(f64, f64)> {
        let (dg, de) = default_heatmap_grid();
        let gammas = self.sweep.gamma_us.clone().unwrap_or(dg);
        let etas = self.sweep.eta_us.clone().unwrap_or(de);
        let mut pairs = Vec::new();
        if self.sweep.include_quoted.unwrap_or(true) {
            pairs.extend(crosskerr_core::experiments::QUOTED_DECOHERENCE);
        }
        pairs.extend(crosskerr_core::experiments::grid_pairs(&gammas, &etas));
        pairs
    }

    pub fn cat_grid(&self) -> (Vec<f64>, Vec<usize>) {
        (
            self.sweep.d_ratio.clone().unwrap_or_else(default_d_grid),
            self.sweep.m.clone().unwrap_or_else(|| vec![4, 5, 6, 7]),
        )
    }
}
