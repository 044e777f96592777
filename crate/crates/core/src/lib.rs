//! Simulation of a qutrit-mediated cross-Kerr interaction between two
//! resonators: operators, device model, states, open-system dynamics and the
//! sweep experiments built on top of them.

pub mod device;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod operator;
pub mod states;

pub use device::{
    build_hamiltonian, build_rotating_frame, derive, hamiltonian_terms, solve_gate_parameters, DecayRates,
    DerivedParams, DeviceParams, GateSolution, HamiltonianKind, HamiltonianSpec, RegimeWarning, RotatingFrame,
    TimeDependentOperator,
};
pub use dynamics::{
    evolve_unitary, fidelity, integrate, lindblad_rhs, IntegratorConfig, LindbladModel, RunStatus, Tolerances,
    Trajectory,
};
pub use error::{Error, Result};
pub use operator::{CMatrix, CVector, HilbertSpace, Level, QOperator, QState, StateKind, C64};
