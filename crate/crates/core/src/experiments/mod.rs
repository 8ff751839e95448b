//! Calibration experiments: randomized benchmarking, state tomography with
//! maximum-likelihood reconstruction, and the reference-state preparations.

pub mod rb;
pub mod states;
pub mod tomography;

pub use rb::{
    clifford_group, depolarizing_kraus, fit_decay, run_rb, BlochAction, CliffordElement, DecayFit,
    ErrorInjection, InterleavedGate, RbConfig, RbPoint, RbResult,
};
pub use states::{
    ideal_preparation_fidelity, prepare_reference, simulated_state_fidelity, ReferenceState,
};
pub use tomography::{
    acquire_tomography, all_settings, mle_reconstruct, Axis, MleReport, SettingAxes, SettingRecord,
    TomographyRecord,
};
