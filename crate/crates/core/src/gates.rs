//! Native gate engine and compiler.
//!
//! The device drives one transition at a time. A drive at transition `t`
//! with azimuthal angle `phi` and polar angle `theta` implements a
//! controlled-controlled-rotation: the identity everywhere except on
//! span{lower, upper}, where it rotates by `theta` about the equatorial
//! Bloch axis
//!
//!   axis(phi) = -sin(phi) x + cos(phi) y,
//!
//! so phi = 0 is a y-rotation and phi = -pi/2 is an x-rotation. Diagonal
//! phase gates cost nothing: in hardware they are frame updates applied by
//! re-phasing every subsequent pulse, which this engine models as exact
//! zero-duration diagonal unitaries (mathematically equivalent for any
//! schedule, and error-free either way).
//!
//! Pulse durations scale linearly with |theta| from the calibrated pi-pulse
//! lengths.

use num_complex::Complex;

use crate::device::{DeviceParams, QubitLabel, Transition};
use crate::error::{Error, Result};
use crate::state::{Mat8, Operator, PureState, C64, DIM};

/// Population threshold below which a state-aware compile drops a pulse.
pub const EPS_PRUNE: f64 = 1e-12;

/// One native gate: a real microwave pulse or a free diagonal phase.
#[derive(Debug, Clone, PartialEq)]
pub enum NativeGate {
    CcrPulse {
        transition: Transition,
        /// Azimuthal drive angle (radians).
        phi: f64,
        /// Rotation angle (radians).
        theta: f64,
        /// Pulse length (seconds), (|theta|/pi) * calibrated pi length.
        duration: f64,
    },
    VirtualPhase {
        /// Phase applied to each basis state (radians).
        phases: [f64; DIM],
    },
}

impl NativeGate {
    /// A CCR pulse with the duration implied by the device calibration.
    pub fn ccr(device: &DeviceParams, transition: Transition, phi: f64, theta: f64) -> Self {
        NativeGate::CcrPulse {
            transition,
            phi,
            theta,
            duration: theta.abs() / std::f64::consts::PI * device.pi_pulse(transition),
        }
    }

    pub fn virtual_phase(phases: [f64; DIM]) -> Self {
        NativeGate::VirtualPhase { phases }
    }

    /// Phase on a single basis state (a controlled-controlled-phase).
    pub fn phase_on(j: usize, phase: f64) -> Self {
        let mut phases = [0.0; DIM];
        phases[j] = phase;
        NativeGate::VirtualPhase { phases }
    }

    pub fn duration(&self) -> f64 {
        match self {
            NativeGate::CcrPulse { duration, .. } => *duration,
            NativeGate::VirtualPhase { .. } => 0.0,
        }
    }

    pub fn unitary(&self) -> Operator {
        match self {
            NativeGate::CcrPulse {
                transition,
                phi,
                theta,
                ..
            } => ccr_unitary(*transition, *phi, *theta),
            NativeGate::VirtualPhase { phases } => virtual_phase(*phases),
        }
    }
}

/// The controlled-controlled-rotation unitary on a transition's subspace.
///
/// On (lower, upper) the block is
///   [ cos(t/2)              -e^{-i phi} sin(t/2) ]
///   [ e^{i phi} sin(t/2)     cos(t/2)            ]
/// which is exp(-i t/2 (axis(phi) . sigma)).
pub fn ccr_unitary(t: Transition, phi: f64, theta: f64) -> Operator {
    let mut m = Mat8::identity();
    let lo = t.lower().index();
    let hi = t.upper().index();
    let c = C64::new((theta / 2.0).cos(), 0.0);
    let s = (theta / 2.0).sin();
    let e_pos = Complex::from_polar(1.0, phi);
    let e_neg = Complex::from_polar(1.0, -phi);
    m[(lo, lo)] = c;
    m[(lo, hi)] = -e_neg * s;
    m[(hi, lo)] = e_pos * s;
    m[(hi, hi)] = c;
    Operator::new(m)
}

/// diag(e^{i phi_0}, ..., e^{i phi_7}).
pub fn virtual_phase(phases: [f64; DIM]) -> Operator {
    let mut m = Mat8::zeros();
    for (j, &p) in phases.iter().enumerate() {
        m[(j, j)] = Complex::from_polar(1.0, p);
    }
    Operator::new(m)
}

/// An ordered list of native gates with duration accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSchedule {
    label: String,
    gates: Vec<NativeGate>,
}

impl PulseSchedule {
    pub fn new(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            gates: Vec::new(),
        }
    }

    pub fn with_gates(label: impl Into<String>, gates: Vec<NativeGate>) -> Self {
        Self {
            label: label.into(),
            gates,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn set_label(&mut self, label: impl Into<String>) {
        self.label = label.into();
    }

    pub fn gates(&self) -> &[NativeGate] {
        &self.gates
    }

    pub fn push(&mut self, gate: NativeGate) {
        self.gates.push(gate);
    }

    /// Append another schedule's gates.
    pub fn then(mut self, other: &PulseSchedule) -> Self {
        self.gates.extend(other.gates.iter().cloned());
        self
    }

    /// Number of real pulses; virtual phases are free and not counted.
    pub fn pulse_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| matches!(g, NativeGate::CcrPulse { .. }))
            .count()
    }

    /// Sum of CCR pulse durations (seconds).
    pub fn total_duration(&self) -> f64 {
        self.gates.iter().map(NativeGate::duration).sum()
    }

    /// Composed unitary; gates apply in list order.
    pub fn unitary(&self) -> Operator {
        let mut u = Mat8::identity();
        for g in &self.gates {
            u = g.unitary().matrix() * u;
        }
        Operator::new(u)
    }

    /// Copy with every pulse duration multiplied by `factor`.
    pub fn scaled_durations(&self, factor: f64) -> PulseSchedule {
        let gates = self
            .gates
            .iter()
            .map(|g| match g {
                NativeGate::CcrPulse {
                    transition,
                    phi,
                    theta,
                    duration,
                } => NativeGate::CcrPulse {
                    transition: *transition,
                    phi: *phi,
                    theta: *theta,
                    duration: duration * factor,
                },
                v => v.clone(),
            })
            .collect();
        PulseSchedule {
            label: self.label.clone(),
            gates,
        }
    }

    /// Line-oriented text dump, one gate per line:
    /// `CCR <transition> <phi_rad> <theta_rad> <duration_ns>` or
    /// `VPHASE <8 phases_rad>`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for g in &self.gates {
            match g {
                NativeGate::CcrPulse {
                    transition,
                    phi,
                    theta,
                    duration,
                } => {
                    out.push_str(&format!(
                        "CCR {} {:.9} {:.9} {:.3}\n",
                        transition,
                        phi,
                        theta,
                        duration * 1e9
                    ));
                }
                NativeGate::VirtualPhase { phases } => {
                    out.push_str("VPHASE");
                    for p in phases {
                        out.push_str(&format!(" {p:.9}"));
                    }
                    out.push('\n');
                }
            }
        }
        out
    }
}

/// Effective single-qubit rotation: the same (phi, theta) pulse on all four
/// of the qubit's transitions. The four subspaces are disjoint, so the
/// pulses commute and the product is R(phi, theta) on `qubit` tensored with
/// the identity on its partners.
pub fn compile_rotation(
    device: &DeviceParams,
    qubit: QubitLabel,
    phi: f64,
    theta: f64,
) -> PulseSchedule {
    let mut sched = PulseSchedule::new(format!("R({phi:.3},{theta:.3}) on {qubit}"));
    for t in qubit_transitions(qubit) {
        sched.push(NativeGate::ccr(device, t, phi, theta));
    }
    sched
}

/// The unitary a compiled rotation implements (duration-independent).
pub fn rotation_unitary(qubit: QubitLabel, phi: f64, theta: f64) -> Operator {
    let mut u = Mat8::identity();
    for t in qubit_transitions(qubit) {
        u = ccr_unitary(t, phi, theta).matrix() * u;
    }
    Operator::new(u)
}

fn qubit_transitions(qubit: QubitLabel) -> [Transition; 4] {
    [
        Transition::new(qubit, false, false),
        Transition::new(qubit, false, true),
        Transition::new(qubit, true, false),
        Transition::new(qubit, true, true),
    ]
}

/// Toffoli on one transition: a pi-pulse about x plus the phase correction
/// that turns the -iX block into the exact two-cycle permutation.
pub fn compile_ccnot(device: &DeviceParams, t: Transition) -> PulseSchedule {
    let mut phases = [0.0; DIM];
    phases[t.lower().index()] = std::f64::consts::FRAC_PI_2;
    phases[t.upper().index()] = std::f64::consts::FRAC_PI_2;
    PulseSchedule::with_gates(
        format!("CCNOT {t}"),
        vec![
            NativeGate::ccr(
                device,
                t,
                -std::f64::consts::FRAC_PI_2,
                std::f64::consts::PI,
            ),
            NativeGate::virtual_phase(phases),
        ],
    )
}

/// CNOT decomposed into two CCNOTs on the target's transitions with the
/// control bit set and the spectator taking both values.
pub fn compile_cnot(
    device: &DeviceParams,
    control: QubitLabel,
    target: QubitLabel,
) -> Result<PulseSchedule> {
    if control == target {
        return Err(Error::ControlEqualsTarget);
    }
    let (p1, p2) = target.partners();
    let mut sched = PulseSchedule::new(format!("CNOT {control}->{target}"));
    for spectator_bit in [false, true] {
        let t = if control == p1 {
            Transition::new(target, true, spectator_bit)
        } else {
            debug_assert_eq!(control, p2);
            Transition::new(target, spectator_bit, true)
        };
        sched = sched.then(&compile_ccnot(device, t));
    }
    Ok(sched)
}

/// Drop every pulse whose subspace carries less than `eps_prune` population
/// at its point in the schedule, tracking the known pure input as it
/// compiles. The result acts on `known_input` identically to the full
/// schedule.
pub fn compile_state_aware(
    sched: &PulseSchedule,
    known_input: &PureState,
    eps_prune: f64,
) -> PulseSchedule {
    let mut state = known_input.clone();
    let mut out = PulseSchedule::new(sched.label().to_string());
    for g in sched.gates() {
        match g {
            NativeGate::CcrPulse { transition, .. } => {
                let amps = state.amplitudes();
                let pop = amps[transition.lower().index()].norm_sqr()
                    + amps[transition.upper().index()].norm_sqr();
                if pop < eps_prune {
                    continue; // subspace unpopulated: the pulse acts as identity
                }
                state = state.apply(&g.unitary());
                out.push(g.clone());
            }
            NativeGate::VirtualPhase { .. } => {
                state = state.apply(&g.unitary());
                out.push(g.clone());
            }
        }
    }
    out
}
