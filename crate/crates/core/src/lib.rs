//! Parity-check detection of quantum-dot spin qubits in double-sided
//! microcavities, and the entanglement purification protocol built on it.
//!
//! Module layout:
//!
//! * [`qstate`]: dense states, density matrices and maps over small labeled
//!   tensor-product spaces.
//! * [`scattering`]: cavity coefficients and the spin-dependent single-photon
//!   scattering maps (ideal and with finite coupling / side leakage).
//! * [`pcd`]: the two-photon parity-check circuit, its heralds, conditional
//!   maps on the electrons, and Haar-averaged figures of merit.
//! * [`purification`]: Bell-diagonal purification recurrences, purification
//!   trees, and a Monte Carlo engine that runs the four-electron procedure.
//! * [`planner`]: crossover fidelities and cheapest arrangements for a
//!   target fidelity.

pub mod error;
pub mod pcd;
pub mod planner;
pub mod purification;
pub mod qstate;
pub mod rng;
pub mod scattering;
pub mod stats;
pub mod tol;

pub use error::{Error, Result};
pub use pcd::{
    pcd_average_figures, pcd_conditional_maps, pcd_figures_of_merit, pcd_ideal, pcd_input_state,
    pcd_practical, AverageFigures, DetectorId, FiguresOfMerit, Herald, PcdConditionalMap, PcdOutcome,
};
pub use planner::{crossover_fidelity, fidelity_after_n, figure4_table, minimal_plan, Plan, ThresholdQuery};
pub use purification::{
    convert_phase_to_bit, evaluate_tree, purify_round_bitflip, simulate_purification_mc, BellMixture,
    PurificationTree, RoundResult,
};
pub use qstate::{BellState, DensityMatrix, LinearMap, PureState, Space};
pub use scattering::{coefficients, ideal_scatter, practical_scatter, CavityParams, ScatterCoefficients};
