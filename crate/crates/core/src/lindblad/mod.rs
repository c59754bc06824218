//! Open-system propagation under decay and laser phase noise.

mod displaced;
mod experiments;
mod gate;
mod single_ion;

pub use displaced::noise_free_qubit_state;
pub use experiments::{
    fit_exponential_decay, rabi_experiment, ramsey_experiment, t1_experiment, RabiConfig, RamseyConfig, T1Config,
};
pub use gate::{evolve_two_ion_gate, propagate_gate, GateOptions, GateProblem, GateSnapshot, GateTrajectory};
pub use single_ion::{
    analytic_damped_rabi, evolve_single_ion, free_evolution, single_qubit_liouvillian, steady_state_population,
    strong_drive_regime, ExperimentResult, NoiseModel, RkOptions,
};
