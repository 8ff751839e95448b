//! Reference entangled-state preparations and their simulated fidelities.

use std::f64::consts::FRAC_PI_2;

use crate::channels::{evolve_schedule, NoiseModel};
use crate::device::{DeviceParams, QubitLabel, Transition};
use crate::error::Result;
use crate::experiments::tomography::{acquire_tomography, mle_reconstruct};
use crate::gates::{
    compile_ccnot, compile_rotation, compile_state_aware, NativeGate, PulseSchedule, EPS_PRUNE,
};
use crate::state::{uhlmann_fidelity, BasisIndex, DensityMatrix, PureState, C64};

/// The four benchmark states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceState {
    /// (|000> + |110>)/sqrt(2), 2 pulses.
    Bell,
    /// (|000> + i|111>)/sqrt(2), 3 pulses.
    Ghz,
    /// (|100> + |010> + |001>)/sqrt(3), 3 pulses.
    W,
    /// (|0> + |1>)^3 / (2 sqrt(2)), 7 pulses with state-aware pruning.
    EqualSuperposition,
}

impl ReferenceState {
    pub const ALL: [ReferenceState; 4] = [
        ReferenceState::Bell,
        ReferenceState::Ghz,
        ReferenceState::W,
        ReferenceState::EqualSuperposition,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ReferenceState::Bell => "bell",
            ReferenceState::Ghz => "ghz",
            ReferenceState::W => "w",
            ReferenceState::EqualSuperposition => "eqsup",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bell" => Ok(ReferenceState::Bell),
            "ghz" => Ok(ReferenceState::Ghz),
            "w" | "werner" => Ok(ReferenceState::W),
            "eqsup" | "equal" | "equal-superposition" => Ok(ReferenceState::EqualSuperposition),
            _ => Err(crate::error::Error::InvalidInput(format!(
                "unknown reference state {s:?}"
            ))),
        }
    }

    /// The ideal target state.
    pub fn target(self) -> PureState {
        let z = C64::new(0.0, 0.0);
        let mut amps = [z; 8];
        match self {
            ReferenceState::Bell => {
                let r = C64::new(1.0 / 2f64.sqrt(), 0.0);
                amps[0] = r;
                amps[6] = r;
            }
            ReferenceState::Ghz => {
                amps[0] = C64::new(1.0 / 2f64.sqrt(), 0.0);
                amps[7] = C64::new(0.0, 1.0 / 2f64.sqrt());
            }
            ReferenceState::W => {
                let r = C64::new(1.0 / 3f64.sqrt(), 0.0);
                amps[4] = r;
                amps[2] = r;
                amps[1] = r;
            }
            ReferenceState::EqualSuperposition => {
                let r = C64::new(1.0 / 8f64.sqrt(), 0.0);
                amps = [r; 8];
            }
        }
        PureState::from_amplitudes(amps).expect("reference targets are normalized")
    }

    /// Real pulses the preparation needs.
    pub fn pulse_count(self) -> usize {
        match self {
            ReferenceState::Bell => 2,
            ReferenceState::Ghz => 3,
            ReferenceState::W => 3,
            ReferenceState::EqualSuperposition => 7,
        }
    }
}

/// Compile the preparation schedule from |000>.
pub fn prepare_reference(device: &DeviceParams, state: ReferenceState) -> PulseSchedule {
    let t = |s: &str| Transition::parse(s).expect("static transition label");
    match state {
        ReferenceState::Bell => {
            // split A, then raise B conditioned on A
            let mut sched = PulseSchedule::new("bell");
            sched.push(NativeGate::ccr(device, t("AB0C0"), 0.0, FRAC_PI_2));
            sched.then(&compile_ccnot(device, t("BC0A1")))
        }
        ReferenceState::Ghz => {
            // Bell, raise C on the |110> branch, then a free phase for the
            // +i relative amplitude of the target
            let mut sched = prepare_reference(device, ReferenceState::Bell)
                .then(&compile_ccnot(device, t("CA1B1")));
            sched.push(NativeGate::phase_on(7, FRAC_PI_2));
            sched.set_label("ghz");
            sched
        }
        ReferenceState::W => {
            // put 1/sqrt(3) on |100>, split the rest equally between
            // |010> and (via CCNOT) |001>
            let theta1 = 2.0 * (1.0 / 3f64.sqrt()).asin();
            let mut sched = PulseSchedule::new("w");
            sched.push(NativeGate::ccr(device, t("AB0C0"), 0.0, theta1));
            sched.push(NativeGate::ccr(device, t("BC0A0"), 0.0, FRAC_PI_2));
            sched.then(&compile_ccnot(device, t("CA0B0")))
        }
        ReferenceState::EqualSuperposition => {
            let blind = compile_rotation(device, QubitLabel::A, 0.0, FRAC_PI_2)
                .then(&compile_rotation(device, QubitLabel::B, 0.0, FRAC_PI_2))
                .then(&compile_rotation(device, QubitLabel::C, 0.0, FRAC_PI_2));
            let mut sched = compile_state_aware(
                &blind,
                &PureState::basis(BasisIndex::new(0).expect("ground state")),
                EPS_PRUNE,
            );
            sched.set_label("eqsup");
            sched
        }
    }
}

/// Simulated state fidelity as the fidelity benchmark reports it: prepare
/// the state with per-pulse decoherence, run the 27-setting tomography with
/// noisy pre-rotation pulses and an ideal diagonal readout (measurement
/// errors stay out of the simulation), reconstruct by maximum likelihood,
/// and compare to the ideal target with the Uhlmann fidelity.
/// Deterministic (infinite-shot limit).
pub fn simulated_state_fidelity(
    state: ReferenceState,
    device: &DeviceParams,
    noise: &NoiseModel,
) -> Result<f64> {
    let prep = prepare_reference(device, state);
    let record = acquire_tomography(&prep, device, noise, None, 0, 0)?;
    let report = mle_reconstruct(&record)?;
    uhlmann_fidelity(&report.rho, &state.target().to_density())
}

/// Noiseless sanity value: fidelity of the compiled preparation against the
/// target, no decoherence anywhere.
pub fn ideal_preparation_fidelity(device: &DeviceParams, state: ReferenceState) -> Result<f64> {
    let prep = prepare_reference(device, state);
    let rho = evolve_schedule(
        &DensityMatrix::pure(BasisIndex::new(0).expect("ground state")),
        &prep,
        &NoiseModel::disabled(),
    )?;
    Ok(rho.fidelity_to_pure(&state.target()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn device() -> DeviceParams {
        DeviceParams::reference()
    }

    #[test]
    fn pulse_counts_match_the_calibration_table() {
        let dev = device();
        for s in ReferenceState::ALL {
            let sched = prepare_reference(&dev, s);
            assert_eq!(sched.pulse_count(), s.pulse_count(), "{}", s.name());
        }
    }

    #[test]
    fn noiseless_preparations_hit_their_targets() {
        let dev = device();
        for s in ReferenceState::ALL {
            let f = ideal_preparation_fidelity(&dev, s).unwrap();
            assert!(f > 1.0 - 1e-12, "{}: fidelity {f}", s.name());
        }
    }

    #[test]
    fn w_state_amplitudes_are_exactly_equal_real() {
        let dev = device();
        let sched = prepare_reference(&dev, ReferenceState::W);
        let out = PureState::basis(BasisIndex::new(0).unwrap()).apply(&sched.unitary());
        let r = 1.0 / 3f64.sqrt();
        for j in [4usize, 2, 1] {
            let a = out.amplitude(BasisIndex::new(j).unwrap());
            assert_abs_diff_eq!((a - C64::new(r, 0.0)).norm(), 0.0, epsilon = 1e-12);
        }
        for j in [0usize, 3, 5, 6, 7] {
            assert_abs_diff_eq!(
                out.amplitude(BasisIndex::new(j).unwrap()).norm(),
                0.0,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn w_populations_are_one_third() {
        let dev = device();
        let rho = evolve_schedule(
            &DensityMatrix::pure(BasisIndex::new(0).unwrap()),
            &prepare_reference(&dev, ReferenceState::W),
            &NoiseModel::disabled(),
        )
        .unwrap();
        let p = rho.populations();
        for j in [4usize, 2, 1] {
            assert_abs_diff_eq!(p[j], 1.0 / 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn ghz_has_the_plus_i_phase() {
        let dev = device();
        let sched = prepare_reference(&dev, ReferenceState::Ghz);
        let out = PureState::basis(BasisIndex::new(0).unwrap()).apply(&sched.unitary());
        let a7 = out.amplitude(BasisIndex::new(7).unwrap());
        let expect = C64::new(0.0, 1.0 / 2f64.sqrt());
        assert_abs_diff_eq!((a7 - expect).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn parse_names() {
        assert_eq!(ReferenceState::parse("GHZ").unwrap(), ReferenceState::Ghz);
        assert_eq!(ReferenceState::parse("werner").unwrap(), ReferenceState::W);
        assert!(ReferenceState::parse("xyz").is_err());
    }
}
