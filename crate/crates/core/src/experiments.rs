//! Protocol drivers: the controlled-phase gate sweep and decoherence
//! heatmap, the entangled-coherent-state sweep, and the effective-model
//! validation.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::device::{
    derive, solve_gate_parameters, DecayRates, DerivedParams, DeviceParams, HamiltonianKind, HamiltonianSpec,
};
use crate::dynamics::{evolve_unitary, fidelity, integrate, IntegratorConfig, LindbladModel, RunStatus, Tolerances};
use crate::error::{Error, Result};
use crate::operator::{CVector, HilbertSpace, Level, QState, C64};
use crate::states::{coherent_input, gate_input, ideal_cat_output, ideal_gate_output, CatTarget};

/// Numerical settings shared by all protocol drivers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Resonator truncations; `None` picks the protocol default.
    pub dim_a: Option<usize>,
    pub dim_b: Option<usize>,
    /// Step in ns; `None` uses the resolution rule.
    pub dt_ns: Option<f64>,
    pub monitor_every: usize,
    pub tolerances: Tolerances,
    /// Model integrated for the lossy branch.
    pub kind: HamiltonianKind,
    pub workers: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            dim_a: None,
            dim_b: None,
            dt_ns: None,
            monitor_every: 100,
            tolerances: Tolerances::default(),
            kind: HamiltonianKind::FullCrosstalk,
            workers: 1,
        }
    }
}

impl RunOptions {
    fn space(&self, default: usize) -> Result<HilbertSpace> {
        HilbertSpace::new(self.dim_a.unwrap_or(default), self.dim_b.unwrap_or(default))
    }

    fn config(&self, model: &LindbladModel, t_final: f64) -> Result<IntegratorConfig> {
        let c = match self.dt_ns {
            Some(dt) => IntegratorConfig::new(dt, t_final)?,
            None => IntegratorConfig::for_frequency(model.max_frequency(), t_final)?,
        };
        Ok(IntegratorConfig {
            tolerances: self.tolerances,
            ..c.with_monitor_every(self.monitor_every)
        })
    }

    /// Model used for the lossless pure-state branch.
    fn unitary_kind(&self) -> HamiltonianKind {
        self.kind
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers.max(1))
            .build()
            .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SweepInputs {
    Gate { delta_b_ghz: f64 },
    Decoherence { gamma_us: f64, eta_us: f64 },
    Cat { d_ratio: f64, m: usize },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Largest `P_e + P_f` seen at the monitor samples.
    pub max_excited_pop: f64,
    pub max_trace_deviation: f64,
    pub max_hermiticity_deviation: f64,
    pub min_eigenvalue: f64,
    /// Population outside the truncated space: the larger of the input
    /// truncation loss and the final top-Fock-level population.
    pub leakage: f64,
    pub error_estimate: f64,
    pub steps: usize,
    pub dt_ns: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub inputs: SweepInputs,
    pub params: DeviceParams,
    pub derived: DerivedParams,
    pub t_final_ns: f64,
    pub fidelity_lossless: Option<f64>,
    pub fidelity_lossy: Option<f64>,
    pub diagnostics: Diagnostics,
    pub status: RunStatus,
    pub wall_seconds: f64,
}

fn top_level_population(state: &QState) -> f64 {
    let s = *state.space();
    let rho = state.to_density_matrix();
    let (mut pa, mut pb) = (0.0, 0.0);
    for i in 0..s.total() {
        let (_, na, nb) = s.labels(i);
        if na + 1 == s.dim_a() {
            pa += rho[(i, i)].re;
        }
        if nb + 1 == s.dim_b() {
            pb += rho[(i, i)].re;
        }
    }
    f64::max(pa, pb)
}

/// Lossy run of one model; returns the trajectory diagnostics and final state.
fn lossy_run(
    spec: &HamiltonianSpec,
    input: &QState,
    t_final: f64,
    opts: &RunOptions,
) -> Result<(QState, Diagnostics, RunStatus)> {
    let model = LindbladModel::from_spec(spec)?;
    let config = opts.config(&model, t_final)?;
    let traj = integrate(&model, input, &config)?;
    let d = Diagnostics {
        max_excited_pop: traj.max_excited_population(),
        max_trace_deviation: traj.max_trace_deviation(),
        max_hermiticity_deviation: traj.max_hermiticity_deviation(),
        min_eigenvalue: traj.min_eigenvalue,
        leakage: top_level_population(&traj.final_state),
        error_estimate: traj.error_estimate,
        steps: traj.steps,
        dt_ns: traj.dt,
    };
    Ok((traj.final_state, d, traj.status))
}

fn lossless_run(spec: &HamiltonianSpec, input: &QState, t_final: f64, opts: &RunOptions) -> Result<QState> {
    let spec = HamiltonianSpec {
        kind: opts.unitary_kind(),
        ..spec.clone()
    };
    evolve_unitary(&spec, input, t_final, opts.dt_ns)
}

fn uniform_qubit() -> C64 {
    C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)
}

/// Gate parameters at `delta_b`: `μ` from the phase-matching solution.
pub fn gate_params(base: &DeviceParams, delta_b_ghz: f64) -> Result<DeviceParams> {
    let sol = solve_gate_parameters(base.g_mhz, base.delta_a_ghz, delta_b_ghz, base.k)?;
    let p = DeviceParams {
        delta_b_ghz,
        mu_mhz: sol.mu_mhz,
        ..base.clone()
    };
    p.validate()?;
    Ok(p)
}

/// One controlled-phase gate on `½(|0⟩+|1⟩)_a(|0⟩+|1⟩)_b|g⟩` run for one gate
/// time. The lossless branch is always computed; the lossy branch only when
/// `lossy` is set.
pub fn run_gate_point(base: &DeviceParams, delta_b_ghz: f64, lossy: bool, opts: &RunOptions) -> Result<SweepRecord> {
    let params = gate_params(base, delta_b_ghz)?;
    let mut rec = gate_record(&params, lossy, opts)?;
    rec.inputs = SweepInputs::Gate { delta_b_ghz };
    Ok(rec)
}

fn gate_record(params: &DeviceParams, lossy: bool, opts: &RunOptions) -> Result<SweepRecord> {
    let start = Instant::now();
    let derived = derive(params)?;
    let space = opts.space(4)?;
    let h = uniform_qubit();
    let input = gate_input(space, h, h, h, h)?;
    let ideal = ideal_gate_output(space, h, h, h, h)?;
    let t = derived.t_gate_ns;

    let spec = HamiltonianSpec::new(opts.kind, params.clone(), space)?;
    let lossless_state = lossless_run(&spec, &input, t, opts)?;
    let fidelity_lossless = fidelity(&ideal, &lossless_state)?;

    let (fidelity_lossy, diagnostics, status) = if lossy {
        let (state, d, status) = lossy_run(&spec, &input, t, opts)?;
        (Some(fidelity(&ideal, &state)?), d, status)
    } else {
        let d = Diagnostics {
            leakage: top_level_population(&lossless_state),
            ..Diagnostics::default()
        };
        (None, d, RunStatus::Ok)
    };
    Ok(SweepRecord {
        inputs: SweepInputs::Gate {
            delta_b_ghz: params.delta_b_ghz,
        },
        params: params.clone(),
        derived,
        t_final_ns: t,
        fidelity_lossless: Some(fidelity_lossless),
        fidelity_lossy,
        diagnostics,
        status,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Record for a point whose integration was rejected by a tolerance check.
fn failed_record(inputs: SweepInputs, params: DeviceParams, derived: DerivedParams, t: f64, reason: String) -> SweepRecord {
    SweepRecord {
        inputs,
        params,
        derived,
        t_final_ns: t,
        fidelity_lossless: None,
        fidelity_lossy: None,
        diagnostics: Diagnostics::default(),
        status: RunStatus::Failed(vec![reason]),
        wall_seconds: 0.0,
    }
}

/// Gate sweep over `delta_b` values, results in input order. Points that trip
/// a numerical tolerance come back as failed records.
pub fn run_gate_sweep(base: &DeviceParams, delta_bs: &[f64], opts: &RunOptions) -> Result<Vec<SweepRecord>> {
    opts.pool()?.install(|| {
        delta_bs
            .par_iter()
            .map(|&db| match run_gate_point(base, db, true, opts) {
                Err(Error::Tolerance(reason)) => {
                    let p = gate_params(base, db)?;
                    let d = derive(&p)?;
                    let t = d.t_gate_ns;
                    Ok(failed_record(SweepInputs::Gate { delta_b_ghz: db }, p, d, t, reason))
                }
                other => other,
            })
            .collect()
    })
}

/// `(γ, η)` pairs quoted as anchors for the decoherence heatmap, in μs.
pub const QUOTED_DECOHERENCE: [(f64, f64); 5] = [(0.1, 1.0), (0.3, 2.0), (0.5, 3.0), (0.7, 4.0), (1.0, 5.0)];

/// The quoted pairs followed by a 5×5 grid over γ ∈ [0.1, 1] μs, η ∈ [1, 5] μs.
pub fn default_heatmap_grid() -> (Vec<f64>, Vec<f64>) {
    let gammas = (0..5).map(|i| 0.1 + 0.225 * i as f64).collect();
    let etas = (0..5).map(|i| 1.0 + i as f64).collect();
    (gammas, etas)
}

/// Lossy gate fidelity at fixed `delta_b` for each `(γ, η)` pair.
pub fn run_gate_heatmap(
    base: &DeviceParams,
    delta_b_ghz: f64,
    pairs: &[(f64, f64)],
    opts: &RunOptions,
) -> Result<Vec<SweepRecord>> {
    let params = gate_params(base, delta_b_ghz)?;
    opts.pool()?.install(|| {
        pairs
            .par_iter()
            .map(|&(gamma_us, eta_us)| {
                let p = DeviceParams {
                    rates: DecayRates::from_times(gamma_us, eta_us),
                    ..params.clone()
                };
                let inputs = SweepInputs::Decoherence { gamma_us, eta_us };
                match gate_record(&p, true, opts) {
                    Ok(rec) => Ok(SweepRecord { inputs, ..rec }),
                    Err(Error::Tolerance(reason)) => {
                        let d = derive(&p)?;
                        let t = d.t_gate_ns;
                        Ok(failed_record(inputs, p, d, t, reason))
                    }
                    Err(e) => Err(e),
                }
            })
            .collect()
    })
}

/// All `(γ, η)` pairs of a rectangular grid, γ-major.
pub fn grid_pairs(gammas: &[f64], etas: &[f64]) -> Vec<(f64, f64)> {
    gammas.iter().flat_map(|&g| etas.iter().map(move |&e| (g, e))).collect()
}

/// Initial amplitudes of the cat protocol.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatAmplitudes {
    pub alpha_a: C64,
    pub beta_b: C64,
}

impl Default for CatAmplitudes {
    fn default() -> Self {
        Self {
            alpha_a: C64::new(0.5, 0.0),
            beta_b: C64::new(1.0, 0.0),
        }
    }
}

/// Cat-protocol parameters at `δ_b = D·μ`.
pub fn cat_params(base: &DeviceParams, d_ratio: f64) -> Result<DeviceParams> {
    let p = DeviceParams {
        delta_b_ghz: d_ratio * base.mu_mhz * 1e-3,
        ..base.clone()
    };
    p.validate()?;
    derive(&p)?;
    Ok(p)
}

/// Evolves `|α_a⟩|β_b⟩|g⟩` for `π/χ` at `δ_b = D·μ` and scores the final state
/// against the target expanded to each of `ms` Fock terms. One simulation is
/// shared by all `m`; the default truncation is `max(m) + 3`.
pub fn run_cat_points(
    base: &DeviceParams,
    d_ratio: f64,
    ms: &[usize],
    amps: CatAmplitudes,
    opts: &RunOptions,
) -> Result<Vec<SweepRecord>> {
    let start = Instant::now();
    let params = cat_params(base, d_ratio)?;
    let derived = derive(&params)?;
    let m_max = ms.iter().copied().max().unwrap_or(4);
    let space = opts.space(m_max + 3)?;
    let (input, input_leak) = coherent_input(space, amps.alpha_a, amps.beta_b)?;
    let t = derived.t_cat_ns;
    if !t.is_finite() {
        return Err(Error::InvalidParams("chi = 0: no cat-state time".into()));
    }
    let spec = HamiltonianSpec::new(opts.kind, params.clone(), space)?;
    let lossless = lossless_run(&spec, &input, t, opts)?;
    let (lossy, mut diag, status) = lossy_run(&spec, &input, t, opts)?;
    diag.leakage = diag.leakage.max(input_leak);
    let target = CatTarget {
        alpha_a: amps.alpha_a,
        beta_b: amps.beta_b,
        chi: derived.chi_mhz,
        g: params.g_mhz,
        delta_a: params.delta_a_ghz * 1e3,
    };
    let wall = start.elapsed().as_secs_f64();
    ms.iter()
        .map(|&m| {
            let ideal = ideal_cat_output(space, &target, Some(m))?;
            Ok(SweepRecord {
                inputs: SweepInputs::Cat { d_ratio, m },
                params: params.clone(),
                derived: derived.clone(),
                t_final_ns: t,
                fidelity_lossless: Some(fidelity(&ideal, &lossless)?),
                fidelity_lossy: Some(fidelity(&ideal, &lossy)?),
                diagnostics: diag.clone(),
                status: status.clone(),
                wall_seconds: wall,
            })
        })
        .collect()
}

pub fn run_cat_point(
    base: &DeviceParams,
    d_ratio: f64,
    m: usize,
    amps: CatAmplitudes,
    opts: &RunOptions,
) -> Result<SweepRecord> {
    Ok(run_cat_points(base, d_ratio, &[m], amps, opts)?.remove(0))
}

/// `D` grid from 6 to 10 in steps of 0.25 with 8.48 inserted.
pub fn default_d_grid() -> Vec<f64> {
    let mut v: Vec<f64> = (0..=16).map(|i| 6.0 + 0.25 * i as f64).collect();
    v.push(8.48);
    v.sort_by(f64::total_cmp);
    v
}

/// Cat sweep over `D`; each `D` is one simulation scored for every `m`.
/// Records are ordered by `D`, then by `m`.
pub fn run_cat_sweep(
    base: &DeviceParams,
    ds: &[f64],
    ms: &[usize],
    amps: CatAmplitudes,
    opts: &RunOptions,
) -> Result<Vec<SweepRecord>> {
    let per_d: Vec<Result<Vec<SweepRecord>>> = opts.pool()?.install(|| {
        ds.par_iter()
            .map(|&d| match run_cat_points(base, d, ms, amps, opts) {
                Err(Error::Tolerance(reason)) => {
                    let p = cat_params(base, d)?;
                    let derived = derive(&p)?;
                    let t = derived.t_cat_ns;
                    Ok(ms
                        .iter()
                        .map(|&m| {
                            let inputs = SweepInputs::Cat { d_ratio: d, m };
                            failed_record(inputs, p.clone(), derived.clone(), t, reason.clone())
                        })
                        .collect())
                }
                other => other,
            })
            .collect()
    });
    let mut out = Vec::new();
    for r in per_d {
        out.extend(r?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Effective-model validation

/// One link of the elimination chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelPair {
    pub reference: HamiltonianKind,
    pub approximation: HamiltonianKind,
}

pub const CHAIN: [ModelPair; 5] = [
    ModelPair {
        reference: HamiltonianKind::Full,
        approximation: HamiltonianKind::Effective3,
    },
    ModelPair {
        reference: HamiltonianKind::Effective3,
        approximation: HamiltonianKind::Effective4,
    },
    ModelPair {
        reference: HamiltonianKind::Effective4,
        approximation: HamiltonianKind::GroundEffective,
    },
    ModelPair {
        reference: HamiltonianKind::GroundEffective,
        approximation: HamiltonianKind::CrossKerr,
    },
    ModelPair {
        reference: HamiltonianKind::Full,
        approximation: HamiltonianKind::GroundEffective,
    },
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairDeficit {
    pub pair: ModelPair,
    /// Detuning scale factor relative to the input parameters.
    pub scale: f64,
    /// `max over probes of 1 − |⟨ψ_ref|ψ_approx⟩|²`.
    pub deficit: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub duration_ns: f64,
    pub sector: (usize, usize),
    pub entries: Vec<PairDeficit>,
}

impl ValidationReport {
    pub fn deficit(&self, pair: ModelPair, scale: f64) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.pair == pair && e.scale == scale)
            .map(|e| e.deficit)
    }
}

/// Detunings scaled by `s` at fixed couplings `g`, `μ`: every
/// coupling-to-detuning ratio shrinks by `1/s`.
pub fn scale_detunings(p: &DeviceParams, s: f64) -> DeviceParams {
    DeviceParams {
        delta_a_ghz: p.delta_a_ghz * s,
        delta_b_ghz: p.delta_b_ghz * s,
        ..p.clone()
    }
}

fn probes(space: HilbertSpace, sector: (usize, usize)) -> Vec<QState> {
    let mut out = Vec::new();
    let mut sum = CVector::zeros(space.total());
    for na in 0..=sector.0 {
        for nb in 0..=sector.1 {
            let s = QState::basis(space, Level::G, na, nb);
            sum += s.as_pure().expect("basis state is pure");
            out.push(s);
        }
    }
    out.push(QState::pure_normalized(space, sum).expect("nonzero superposition"));
    out
}

/// Propagates the `|g⟩` states with up to `sector` photons under each model
/// pair for `duration_ns` (one gate time of `params` by default) and reports
/// the worst overlap deficit at each detuning scale. The cross-Kerr model
/// carries no Stark shift, so that phase is removed from its reference.
pub fn validate_effective(
    params: &DeviceParams,
    sector: (usize, usize),
    scales: &[f64],
    duration_ns: Option<f64>,
    opts: &RunOptions,
) -> Result<ValidationReport> {
    let derived = derive(params)?;
    let t = match duration_ns {
        Some(t) => t,
        None if derived.t_gate_ns.is_finite() => derived.t_gate_ns,
        None => 100.0,
    };
    let space = HilbertSpace::new(
        opts.dim_a.unwrap_or(sector.0 + 2).max(sector.0 + 2),
        opts.dim_b.unwrap_or(sector.1 + 2).max(sector.1 + 2),
    )?;
    let tasks: Vec<(ModelPair, f64)> = CHAIN
        .iter()
        .flat_map(|&pair| scales.iter().map(move |&s| (pair, s)))
        .collect();
    let entries: Vec<Result<PairDeficit>> = opts.pool()?.install(|| {
        tasks
            .par_iter()
            .map(|&(pair, scale)| {
                let p = scale_detunings(params, scale);
                let reference = HamiltonianSpec::new(pair.reference, p.clone(), space)?;
                let approx = HamiltonianSpec::new(pair.approximation, p.clone(), space)?;
                let stark = if pair.approximation == HamiltonianKind::CrossKerr {
                    let a = p.angular();
                    -a.g * a.g / a.delta_a
                } else {
                    0.0
                };
                let mut deficit: f64 = 0.0;
                for psi in probes(space, sector) {
                    let r = evolve_unitary(&reference, &psi, t, opts.dt_ns)?;
                    let a = evolve_unitary(&approx, &psi, t, opts.dt_ns)?;
                    let mut r = r.as_pure().expect("pure").clone();
                    if stark != 0.0 {
                        for (i, c) in r.iter_mut().enumerate() {
                            let (_, na, _) = space.labels(i);
                            *c *= C64::from_polar(1.0, stark * na as f64 * t);
                        }
                    }
                    let ov = r.dotc(a.as_pure().expect("pure")).norm();
                    deficit = deficit.max((1.0 - ov).max(0.0));
                }
                Ok(PairDeficit { pair, scale, deficit })
            })
            .collect()
    });
    Ok(ValidationReport {
        duration_ns: t,
        sector,
        entries: entries.into_iter().collect::<Result<_>>()?,
    })
}
