//! Time evolution: pure-state (Schrödinger) and mixed-state (Lindblad master
//! equation) integration, plus the fidelity measure.
//!
//! The right-hand side is assembled from sparse per-term maps, so one
//! evaluation costs O(dim²) per term and no Liouvillian is ever formed.

mod kernel;
mod rk4;

use serde::{Deserialize, Serialize};

use crate::device::{
    build_rotating_frame, hamiltonian_terms, AngularParams, HamiltonianKind, HamiltonianSpec, RotatingFrame,
    TimeDependentOperator,
};
use crate::error::{Error, Result};
use crate::operator::{
    annihilation, expm_hermitian, hermiticity_deviation, identity, min_eigenvalue, qutrit_op, CMatrix, CVector,
    HilbertSpace, Level, QOperator, QState, StateKind, C64, I, ONE,
};

use kernel::{Generator, Jump, LindbladKernel, SchrodingerKernel};
use rk4::Rk4;

/// Largest `dt·ω_max` accepted by the integrator.
pub const MAX_PHASE_PER_STEP: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    pub label: String,
    pub operator: QOperator,
    /// Rate in 1/ns.
    pub rate: f64,
}

/// Loss channels of the device: photon decay of both resonators, the three
/// qutrit relaxation paths, and dephasing of `|e⟩` and `|f⟩`.
///
/// Dephasing uses `σ_jj ρ σ_jj − ½{σ_jj, ρ}` with coefficient `γ_φj`, i.e. the
/// same dissipator shape as the collapse channels.
pub fn device_channels(space: HilbertSpace, p: &AngularParams) -> Vec<Channel> {
    let (da, db) = (space.dim_a(), space.dim_b());
    let a = annihilation(da).expect("space dims validated");
    let b = annihilation(db).expect("space dims validated");
    let (ia, ib) = (identity(da), identity(db));
    let op = |q: CMatrix, fa: CMatrix, fb: CMatrix| QOperator::product(space, ONE, q, fa, fb).expect("shapes");
    vec![
        Channel {
            label: "a".into(),
            operator: op(identity(3), a, ib.clone()),
            rate: p.kappa_a,
        },
        Channel {
            label: "b".into(),
            operator: op(identity(3), ia.clone(), b),
            rate: p.kappa_b,
        },
        Channel {
            label: "sigma_eg".into(),
            operator: op(qutrit_op(Level::G, Level::E), ia.clone(), ib.clone()),
            rate: p.gamma_eg,
        },
        Channel {
            label: "sigma_fe".into(),
            operator: op(qutrit_op(Level::E, Level::F), ia.clone(), ib.clone()),
            rate: p.gamma_fe,
        },
        Channel {
            label: "sigma_fg".into(),
            operator: op(qutrit_op(Level::G, Level::F), ia.clone(), ib.clone()),
            rate: p.gamma_fg,
        },
        Channel {
            label: "dephasing_e".into(),
            operator: op(qutrit_op(Level::E, Level::E), ia.clone(), ib.clone()),
            rate: p.gamma_phi_e,
        },
        Channel {
            label: "dephasing_f".into(),
            operator: op(qutrit_op(Level::F, Level::F), ia, ib),
            rate: p.gamma_phi_f,
        },
    ]
}

#[derive(Clone, Debug, PartialEq)]
enum Drive {
    TimeDependent(TimeDependentOperator),
    Rotating(RotatingFrame),
}

/// Hamiltonian plus loss channels.
///
/// In a rotating-frame model the integrator evolves `V(t)†ρV(t)` under the
/// static Hamiltonian and maps back at the end; all reported states are in
/// the interaction picture.
#[derive(Clone, Debug, PartialEq)]
pub struct LindbladModel {
    space: HilbertSpace,
    drive: Drive,
    channels: Vec<Channel>,
}

impl LindbladModel {
    pub fn new(hamiltonian: TimeDependentOperator, channels: Vec<Channel>) -> Result<Self> {
        let space = *hamiltonian.space();
        Self::check_channels(&space, &channels)?;
        Ok(Self {
            space,
            drive: Drive::TimeDependent(hamiltonian),
            channels,
        })
    }

    pub fn rotating(frame: RotatingFrame, channels: Vec<Channel>) -> Result<Self> {
        let space = *frame.space();
        Self::check_channels(&space, &channels)?;
        Ok(Self {
            space,
            drive: Drive::Rotating(frame),
            channels,
        })
    }

    /// Model for a Hamiltonian spec with the device's own loss channels.
    /// `RotatingFrame` integrates the crosstalk model in its static frame.
    pub fn from_spec(spec: &HamiltonianSpec) -> Result<Self> {
        let channels = device_channels(spec.space, &spec.params.angular());
        match spec.kind {
            HamiltonianKind::RotatingFrame => Self::rotating(build_rotating_frame(spec)?, channels),
            _ => Self::new(hamiltonian_terms(spec)?, channels),
        }
    }

    fn check_channels(space: &HilbertSpace, channels: &[Channel]) -> Result<()> {
        for c in channels {
            c.operator.space().ensure_same(space)?;
            if !(c.rate >= 0.0) || !c.rate.is_finite() {
                return Err(Error::InvalidParams(format!("channel {} has rate {}", c.label, c.rate)));
            }
        }
        Ok(())
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn without_losses(&self) -> Self {
        Self {
            channels: Vec::new(),
            ..self.clone()
        }
    }

    pub fn rotating_frame(&self) -> Option<&RotatingFrame> {
        match &self.drive {
            Drive::Rotating(f) => Some(f),
            Drive::TimeDependent(_) => None,
        }
    }

    /// The operator actually integrated (static for rotating-frame models).
    pub fn integrated_hamiltonian(&self) -> &TimeDependentOperator {
        match &self.drive {
            Drive::TimeDependent(h) => h,
            Drive::Rotating(f) => f.static_operator(),
        }
    }

    /// Largest angular frequency the step size has to resolve, rad/ns.
    pub fn max_frequency(&self) -> f64 {
        self.integrated_hamiltonian().max_frequency()
    }

    fn kernel(&self) -> LindbladKernel {
        let mut generator = Generator::new(self.integrated_hamiltonian());
        let mut jumps = Vec::new();
        for c in &self.channels {
            if c.rate == 0.0 {
                continue;
            }
            let j = Jump::new(&c.operator, c.rate);
            generator.add_decay(&j);
            jumps.push(j);
        }
        LindbladKernel::new(generator, jumps)
    }
}

/// `dρ/dt` at time `t` through the structured kernel. `ρ` must be Hermitian.
/// For rotating-frame models this is the derivative of the frame state.
pub fn lindblad_rhs(model: &LindbladModel, rho: &CMatrix, t: f64) -> Result<CMatrix> {
    let n = model.space.total();
    if rho.nrows() != n || rho.ncols() != n {
        return Err(Error::Shape {
            expected: format!("{n}x{n}"),
            got: format!("{}x{}", rho.nrows(), rho.ncols()),
        });
    }
    let mut kernel = model.kernel();
    let mut out = CMatrix::zeros(n, n);
    kernel.eval(t, rho.as_slice(), out.as_mut_slice());
    Ok(out)
}

/// Reference `dρ/dt` through dense matrix products, used to cross-check
/// [`lindblad_rhs`].
pub fn lindblad_rhs_dense(model: &LindbladModel, rho: &CMatrix, t: f64) -> CMatrix {
    let h = model.integrated_hamiltonian().at(t).to_dense();
    let mut out = (&h * rho - rho * &h) * (-I);
    for c in &model.channels {
        let l = c.operator.to_dense();
        let ld = l.adjoint();
        let ldl = &ld * &l;
        out += (&l * rho * &ld - (&ldl * rho + rho * &ldl) * C64::new(0.5, 0.0)) * C64::new(c.rate, 0.0);
    }
    out
}

// ---------------------------------------------------------------------------
// Integration

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub trace: f64,
    pub hermiticity: f64,
    /// Most negative eigenvalue allowed at the final time.
    pub positivity: f64,
    /// Bound on the step-doubling global error estimate (Frobenius norm).
    pub global_error: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            trace: 1e-8,
            hermiticity: 1e-10,
            positivity: -1e-6,
            global_error: 1e-6,
        }
    }
}

/// Fixed-step RK4 settings. Times in ns.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_final: f64,
    /// Diagnostics and a step-doubling error sample are taken every this many steps.
    pub monitor_every: usize,
    pub tolerances: Tolerances,
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_final: f64) -> Result<Self> {
        let c = Self {
            dt,
            t_final,
            monitor_every: 100,
            tolerances: Tolerances::default(),
        };
        c.validate()?;
        Ok(c)
    }

    /// Step chosen so that `dt·ω_max` equals [`MAX_PHASE_PER_STEP`].
    pub fn for_frequency(max_frequency: f64, t_final: f64) -> Result<Self> {
        let dt = if max_frequency > 0.0 {
            MAX_PHASE_PER_STEP / max_frequency
        } else {
            t_final.max(1e-12) / 100.0
        };
        Self::new(dt.min(t_final.max(1e-12)), t_final)
    }

    pub fn with_monitor_every(mut self, every: usize) -> Self {
        self.monitor_every = every.max(1);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final >= 0.0) || !self.t_final.is_finite() {
            return Err(Error::InvalidConfig(format!("t_final must be non-negative, got {}", self.t_final)));
        }
        Ok(())
    }

    /// Number of steps and the actual step that lands exactly on `t_final`.
    pub fn steps(&self) -> (usize, f64) {
        if self.t_final == 0.0 {
            return (0, 0.0);
        }
        let n = (self.t_final / self.dt - 1e-9).ceil().max(1.0) as usize;
        (n, self.t_final / n as f64)
    }

    /// Rejects steps that under-resolve the fastest frequency.
    pub fn check_resolution(&self, max_frequency: f64) -> Result<()> {
        self.validate()?;
        let (_, h) = self.steps();
        if h * max_frequency > MAX_PHASE_PER_STEP * (1.0 + 1e-12) {
            return Err(Error::InvalidConfig(format!(
                "dt = {h:e} ns gives dt·ω_max = {:.4} > {MAX_PHASE_PER_STEP}",
                h * max_frequency
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub trace_deviation: f64,
    pub hermiticity_deviation: f64,
    pub p_e: f64,
    pub p_f: f64,
    pub n_a: f64,
    pub n_b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum RunStatus {
    Ok,
    Failed(Vec<String>),
}

impl RunStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, RunStatus::Ok)
    }

    pub fn label(&self) -> String {
        match self {
            RunStatus::Ok => "ok".to_string(),
            RunStatus::Failed(r) => format!("failed: {}", r.join("; ")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub final_state: QState,
    pub steps: usize,
    pub dt: f64,
    /// Accumulated step-doubling estimate of the global error.
    pub error_estimate: f64,
    pub min_eigenvalue: f64,
    pub status: RunStatus,
}

impl Trajectory {
    pub fn max_excited_population(&self) -> f64 {
        self.samples.iter().map(|s| s.p_e + s.p_f).fold(0.0, f64::max)
    }

    pub fn max_trace_deviation(&self) -> f64 {
        self.samples.iter().map(|s| s.trace_deviation).fold(0.0, f64::max)
    }

    pub fn max_hermiticity_deviation(&self) -> f64 {
        self.samples.iter().map(|s| s.hermiticity_deviation).fold(0.0, f64::max)
    }
}

fn sample(space: &HilbertSpace, rho: &CMatrix, t: f64) -> Sample {
    let mut s = Sample {
        t,
        trace_deviation: 0.0,
        hermiticity_deviation: hermiticity_deviation(rho),
        p_e: 0.0,
        p_f: 0.0,
        n_a: 0.0,
        n_b: 0.0,
    };
    let mut tr = C64::new(0.0, 0.0);
    for i in 0..space.total() {
        let d = rho[(i, i)];
        tr += d;
        let (q, na, nb) = space.labels(i);
        match q {
            Level::E => s.p_e += d.re,
            Level::F => s.p_f += d.re,
            Level::G => {}
        }
        s.n_a += na as f64 * d.re;
        s.n_b += nb as f64 * d.re;
    }
    s.trace_deviation = (tr - ONE).norm();
    s
}

/// Integrates the master equation from `rho0` (pure states are lifted to
/// density matrices). Tolerance violations mark the run failed; they do not
/// abort it.
pub fn integrate(model: &LindbladModel, rho0: &QState, config: &IntegratorConfig) -> Result<Trajectory> {
    model.space.ensure_same(rho0.space())?;
    config.check_resolution(model.max_frequency())?;
    let space = model.space;
    let n = space.total();
    let (steps, h) = config.steps();
    let every = config.monitor_every.max(1);

    let mut rho = rho0.to_density_matrix();
    let mut kernel = model.kernel();
    let mut rk = Rk4::new(n * n);
    let mut f = |t: f64, y: &[C64], dy: &mut [C64]| kernel.eval(t, y, dy);

    let mut samples = vec![sample(&space, &rho, 0.0)];
    let mut error_estimate = 0.0;
    for s in 0..steps {
        let t = s as f64 * h;
        let checkpoint = (s + 1) % every == 0 || s + 1 == steps;
        if checkpoint {
            let diff = rk.double_step(&mut f, t, h, rho.as_mut_slice());
            // Local error of one ordinary step ≈ (16/15)·|two halves − one full|;
            // this sample stands for the `every` steps around it.
            let span = if (s + 1) % every == 0 { every } else { (s + 1) % every };
            error_estimate += diff * 16.0 / 15.0 * span as f64;
            let mut frame_rho = rho.clone();
            if let Some(frame) = model.rotating_frame() {
                frame.to_interaction_density(&mut frame_rho, t + h);
            }
            samples.push(sample(&space, &frame_rho, t + h));
        } else {
            rk.step(&mut f, t, h, rho.as_mut_slice());
        }
    }
    if let Some(frame) = model.rotating_frame() {
        frame.to_interaction_density(&mut rho, config.t_final);
    }

    let min_eig = min_eigenvalue(&rho);
    let tol = &config.tolerances;
    let mut reasons = Vec::new();
    if rho.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        reasons.push("non-finite density matrix".to_string());
    }
    let worst_trace = samples.iter().map(|s| s.trace_deviation).fold(0.0, f64::max);
    if worst_trace > tol.trace {
        reasons.push(format!("trace deviation {worst_trace:e} > {:e}", tol.trace));
    }
    let worst_herm = samples.iter().map(|s| s.hermiticity_deviation).fold(0.0, f64::max);
    if worst_herm > tol.hermiticity {
        reasons.push(format!("hermiticity deviation {worst_herm:e} > {:e}", tol.hermiticity));
    }
    if min_eig < tol.positivity {
        reasons.push(format!("minimum eigenvalue {min_eig:e} < {:e}", tol.positivity));
    }
    if error_estimate > tol.global_error {
        reasons.push(format!("error estimate {error_estimate:e} > {:e}", tol.global_error));
    }
    let status = if reasons.is_empty() { RunStatus::Ok } else { RunStatus::Failed(reasons) };

    Ok(Trajectory {
        samples,
        final_state: QState::density_unchecked(space, rho),
        steps,
        dt: h,
        error_estimate,
        min_eigenvalue: min_eig,
        status,
    })
}

// ---------------------------------------------------------------------------
// Pure states

/// Norm drift accepted by [`evolve_unitary`].
pub const NORM_TOL: f64 = 1e-8;

/// Default `dt·ω_max` for pure-state stepping. RK4 loses norm as
/// `(ω dt)⁶` per step, and vectors are cheap, so this is finer than the
/// master-equation default.
pub const PURE_PHASE_PER_STEP: f64 = 0.05;

fn require_pure(state: &QState) -> Result<&CVector> {
    state
        .as_pure()
        .ok_or_else(|| Error::InvalidState("expected a pure state".into()))
}

fn diagonal_propagation(spec: &HamiltonianSpec, psi: &CVector, t: f64) -> Result<CVector> {
    let h = hamiltonian_terms(spec)?.at(0.0);
    let diag = h.to_dense().diagonal();
    Ok(CVector::from_iterator(
        psi.len(),
        psi.iter().zip(diag.iter()).map(|(c, e)| c * C64::from_polar(1.0, -e.re * t)),
    ))
}

/// Pure-state evolution for `t_final` ns.
///
/// Diagonal kinds use the closed-form phase `exp(−i H_ii t)`; the others are
/// stepped with RK4 (`dt = None` picks the default resolution rule). The
/// rotating-frame kind is stepped in its frame and mapped back.
pub fn evolve_unitary(spec: &HamiltonianSpec, psi0: &QState, t_final: f64, dt: Option<f64>) -> Result<QState> {
    spec.space.ensure_same(psi0.space())?;
    let psi = require_pure(psi0)?;
    if spec.kind.is_diagonal() {
        let out = diagonal_propagation(spec, psi, t_final)?;
        return Ok(QState::pure_unchecked(spec.space, out));
    }
    let frame = match spec.kind {
        HamiltonianKind::RotatingFrame => Some(build_rotating_frame(spec)?),
        _ => None,
    };
    let h = match &frame {
        Some(f) => f.static_operator().clone(),
        None => hamiltonian_terms(spec)?,
    };
    let out = step_pure(&h, psi, t_final, dt)?;
    let mut out = out;
    if let Some(f) = &frame {
        f.to_interaction_vector(out.as_mut_slice(), t_final);
    }
    let drift = (out.norm_squared() - 1.0).abs();
    if drift > NORM_TOL {
        return Err(Error::Tolerance(format!("norm drift {drift:e} > {NORM_TOL:e}")));
    }
    Ok(QState::pure_unchecked(spec.space, out))
}

/// RK4 stepping of `dψ/dt = −iH(t)ψ`.
pub fn step_pure(h: &TimeDependentOperator, psi: &CVector, t_final: f64, dt: Option<f64>) -> Result<CVector> {
    let fmax = h.max_frequency();
    let config = match dt {
        Some(dt) => IntegratorConfig::new(dt, t_final)?,
        None => IntegratorConfig::for_frequency(fmax * MAX_PHASE_PER_STEP / PURE_PHASE_PER_STEP, t_final)?,
    };
    config.check_resolution(fmax)?;
    let (steps, step) = config.steps();
    let mut kernel = SchrodingerKernel::new(h);
    let mut rk = Rk4::new(psi.len());
    let mut y = psi.clone();
    let mut f = |t: f64, y: &[C64], dy: &mut [C64]| kernel.eval(t, y, dy);
    for s in 0..steps {
        rk.step(&mut f, s as f64 * step, step, y.as_mut_slice());
    }
    Ok(y)
}

/// Exact propagation: closed form for diagonal kinds, `V(t)·exp(−i H_rot t)`
/// for the time-dependent kinds.
pub fn propagate_exact(spec: &HamiltonianSpec, psi0: &QState, t: f64) -> Result<QState> {
    spec.space.ensure_same(psi0.space())?;
    let psi = require_pure(psi0)?;
    let out = if spec.kind.is_diagonal() {
        diagonal_propagation(spec, psi, t)?
    } else {
        let frame = build_rotating_frame(spec)?;
        let u = expm_hermitian(&frame.hamiltonian().to_dense(), t);
        let mut v = u * psi;
        frame.to_interaction_vector(v.as_mut_slice(), t);
        v
    };
    Ok(QState::pure_unchecked(spec.space, out))
}

// ---------------------------------------------------------------------------
// Fidelity

/// `F = √⟨ψ_id|ρ|ψ_id⟩`, clamped to `[0, 1]`. A pure `state` is treated as
/// `|φ⟩⟨φ|`.
pub fn fidelity(ideal: &QState, state: &QState) -> Result<f64> {
    ideal.space().ensure_same(state.space())?;
    let psi = require_pure(ideal)?;
    let overlap = match state.kind() {
        StateKind::Pure(phi) => psi.dotc(phi).norm_sqr(),
        StateKind::Density(rho) => psi.dotc(&(rho * psi)).re,
    };
    Ok(overlap.clamp(0.0, 1.0).sqrt())
}
