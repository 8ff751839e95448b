//! Density-matrix simulator for a three-qubit superconducting processor
//! with all-to-all longitudinal coupling.
//!
//! The device exposes twelve individually addressable transitions; a drive
//! on any one of them is a controlled-controlled-rotation, and diagonal
//! phase gates are free software frame updates. This crate models the
//! calibrated device, compiles logical gates to native pulse schedules,
//! applies per-pulse decoherence from the measured T1/T2 values, simulates
//! the joint dispersive readout with its demarcation-line classifier, and
//! implements the calibration and algorithm experiments that run on such a
//! processor: randomized benchmarking, state tomography with maximum-
//! likelihood reconstruction, Deutsch-Jozsa, Bernstein-Vazirani, Grover
//! search, and the quantum Fourier transform.

pub mod algorithms;
pub mod channels;
pub mod device;
pub mod error;
pub mod experiments;
pub mod gates;
pub mod optim;
pub mod sampling;
pub mod state;

pub use device::{DeviceParams, FrequencyMode, QubitLabel, Transition};
pub use error::{Error, Result};
pub use gates::{NativeGate, PulseSchedule};
pub use state::{BasisIndex, DensityMatrix, KrausSet, Operator, PureState, C64};
