//! The algorithm suite compiled to the native gate set.
//!
//! All four routines are ancilla-free. Oracles that are diagonal in the
//! computational basis (every Deutsch-Jozsa balanced function, the Grover
//! markers, the controlled-phase ladder of the Fourier transform) cost
//! nothing: they compile to a single virtual phase gate. Only state
//! preparation, basis changes and the two constant-function cases spend
//! real pulses.
//!
//! Success probabilities follow each algorithm's definition: P(|000>) for
//! a constant function, 1 - P(|000>) for a balanced one, P(|c>) for the
//! hidden string, P(marked) for the search, and P(|8 phi / 2 pi>) for
//! phase estimation. Distributions are additionally compared against the
//! analytic targets with the squared statistical overlap
//! SSO = (sum_j sqrt(t_j e_j))^2.

use num_complex::Complex;

use crate::channels::{
    evolve_schedule, measure_populations, measure_populations_exact, NoiseModel, ReadoutModel,
};
use crate::device::{DeviceParams, QubitLabel};
use crate::error::{Error, Result};
use crate::gates::{
    compile_cnot, compile_rotation, compile_state_aware, NativeGate, PulseSchedule, EPS_PRUNE,
};
use crate::sampling;
use crate::state::{BasisIndex, DensityMatrix, Mat8, Operator, PureState, C64, DIM};

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

/// The ten balanced functions of the Deutsch-Jozsa oracle set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BalancedFunction {
    A,
    B,
    C,
    AXorB,
    BXorC,
    CXorA,
    AXorBC,
    BXorCA,
    CXorAB,
    AbXorBcXorCa,
}

impl BalancedFunction {
    pub const ALL: [BalancedFunction; 10] = [
        BalancedFunction::A,
        BalancedFunction::B,
        BalancedFunction::C,
        BalancedFunction::AXorB,
        BalancedFunction::BXorC,
        BalancedFunction::CXorA,
        BalancedFunction::AXorBC,
        BalancedFunction::BXorCA,
        BalancedFunction::CXorAB,
        BalancedFunction::AbXorBcXorCa,
    ];

    pub fn evaluate(self, j: BasisIndex) -> bool {
        let (a, b, c) = j.bits();
        match self {
            BalancedFunction::A => a,
            BalancedFunction::B => b,
            BalancedFunction::C => c,
            BalancedFunction::AXorB => a ^ b,
            BalancedFunction::BXorC => b ^ c,
            BalancedFunction::CXorA => c ^ a,
            BalancedFunction::AXorBC => a ^ (b & c),
            BalancedFunction::BXorCA => b ^ (c & a),
            BalancedFunction::CXorAB => c ^ (a & b),
            BalancedFunction::AbXorBcXorCa => (a & b) ^ (b & c) ^ (c & a),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BalancedFunction::A => "A",
            BalancedFunction::B => "B",
            BalancedFunction::C => "C",
            BalancedFunction::AXorB => "A+B",
            BalancedFunction::BXorC => "B+C",
            BalancedFunction::CXorA => "C+A",
            BalancedFunction::AXorBC => "A+BC",
            BalancedFunction::BXorCA => "B+CA",
            BalancedFunction::CXorAB => "C+AB",
            BalancedFunction::AbXorBcXorCa => "AB+BC+CA",
        }
    }
}

/// Deutsch-Jozsa oracle choice: two constants and ten balanced functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DjOracle {
    Constant0,
    Constant1,
    Balanced(BalancedFunction),
}

impl DjOracle {
    pub fn all() -> Vec<DjOracle> {
        let mut out = vec![DjOracle::Constant0, DjOracle::Constant1];
        out.extend(BalancedFunction::ALL.into_iter().map(DjOracle::Balanced));
        out
    }

    pub fn name(self) -> String {
        match self {
            DjOracle::Constant0 => "constant0".into(),
            DjOracle::Constant1 => "constant1".into(),
            DjOracle::Balanced(f) => f.name().into(),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let norm = s.to_ascii_uppercase();
        match norm.as_str() {
            "CONSTANT0" | "CONST0" => return Ok(DjOracle::Constant0),
            "CONSTANT1" | "CONST1" => return Ok(DjOracle::Constant1),
            _ => {}
        }
        for f in BalancedFunction::ALL {
            if f.name() == norm {
                return Ok(DjOracle::Balanced(f));
            }
        }
        Err(Error::InvalidInput(format!("unknown DJ oracle {s:?}")))
    }
}

/// Input preparations for the Fourier-transform protocols.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QftInput {
    /// Amplitude comb: equal weight on every index divisible by the period.
    Comb(u8),
    /// Product state with qubit k carrying phase e^{-i 2^k phi} on |1>.
    Phase(f64),
}

impl QftInput {
    pub fn name(self) -> String {
        match self {
            QftInput::Comb(p) => format!("comb{p}"),
            QftInput::Phase(phi) => format!("phase:{phi:.6}"),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        if let Some(p) = s.strip_prefix("comb") {
            let p: u8 = p
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad comb period {s:?}")))?;
            if ![1, 2, 4, 8].contains(&p) {
                return Err(Error::InvalidInput(format!(
                    "comb period must be 1, 2, 4 or 8, got {p}"
                )));
            }
            return Ok(QftInput::Comb(p));
        }
        if let Some(phi) = s.strip_prefix("phase:") {
            let phi: f64 = phi
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad phase value {s:?}")))?;
            return Ok(QftInput::Phase(phi));
        }
        Err(Error::InvalidInput(format!("unknown QFT input {s:?}")))
    }

    /// Ideal prepared amplitudes.
    pub fn amplitudes(self) -> [C64; DIM] {
        let mut amps = [C64::new(0.0, 0.0); DIM];
        match self {
            QftInput::Comb(p) => {
                let teeth = DIM / p as usize;
                let w = 1.0 / (teeth as f64).sqrt();
                for j in (0..DIM).step_by(p as usize) {
                    amps[j] = C64::new(w, 0.0);
                }
            }
            QftInput::Phase(phi) => {
                let w = 1.0 / (DIM as f64).sqrt();
                for (j, a) in amps.iter_mut().enumerate() {
                    *a = Complex::from_polar(w, -phi * j as f64);
                }
            }
        }
        amps
    }
}

/// One runnable algorithm instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Algorithm {
    Dj(DjOracle),
    Bv(BasisIndex),
    Grover(BasisIndex),
    Qft(QftInput),
}

impl Algorithm {
    pub fn kind_name(self) -> &'static str {
        match self {
            Algorithm::Dj(_) => "dj",
            Algorithm::Bv(_) => "bv",
            Algorithm::Grover(_) => "grover",
            Algorithm::Qft(_) => "qft",
        }
    }

    pub fn oracle_name(self) -> String {
        match self {
            Algorithm::Dj(o) => o.name(),
            Algorithm::Bv(c) => bits_string(c),
            Algorithm::Grover(m) => bits_string(m),
            Algorithm::Qft(i) => i.name(),
        }
    }

    /// The compiled circuit, measurement not included.
    pub fn schedule(self, device: &DeviceParams) -> Result<PulseSchedule> {
        match self {
            Algorithm::Dj(oracle) => Ok(build_dj(device, oracle)),
            Algorithm::Bv(c) => build_bv(device, c),
            Algorithm::Grover(m) => Ok(build_grover(device, m)),
            Algorithm::Qft(input) => Ok(qft_input_state(device, input)?.then(&build_qft(device))),
        }
    }

    /// Measured indices are relabeled A<->C after the Fourier transform.
    pub fn bit_reversed_readout(self) -> bool {
        matches!(self, Algorithm::Qft(_))
    }

    /// Ideal output distribution.
    pub fn analytic_distribution(self) -> [f64; DIM] {
        let mut t = [0.0; DIM];
        match self {
            Algorithm::Dj(DjOracle::Constant0) | Algorithm::Dj(DjOracle::Constant1) => {
                t[0] = 1.0;
            }
            Algorithm::Dj(DjOracle::Balanced(f)) => {
                // Walsh power spectrum of (-1)^f
                for (y, ty) in t.iter_mut().enumerate() {
                    let mut acc = 0i32;
                    for x in 0..DIM {
                        let sign = f.evaluate(BasisIndex::new(x).expect("index in range"))
                            ^ (((x & y).count_ones() & 1) == 1);
                        acc += if sign { -1 } else { 1 };
                    }
                    *ty = (acc as f64 / DIM as f64).powi(2);
                }
            }
            Algorithm::Bv(c) => t[c.index()] = 1.0,
            Algorithm::Grover(m) => {
                // single-iteration amplitudes: (2.5, 0.5, ..., 0.5)/sqrt(8)
                for (j, tj) in t.iter_mut().enumerate() {
                    *tj = if j == m.index() {
                        25.0 / 32.0
                    } else {
                        1.0 / 32.0
                    };
                }
            }
            Algorithm::Qft(input) => {
                let amps = input.amplitudes();
                let f = dft8();
                for (y, ty) in t.iter_mut().enumerate() {
                    let mut acc = C64::new(0.0, 0.0);
                    for (x, a) in amps.iter().enumerate() {
                        acc += f[(y, x)] * a;
                    }
                    *ty = acc.norm_sqr();
                }
            }
        }
        t
    }

    /// Success probability extracted from a measured distribution.
    pub fn success_probability(self, distribution: &[f64; DIM]) -> f64 {
        match self {
            Algorithm::Dj(DjOracle::Constant0) | Algorithm::Dj(DjOracle::Constant1) => {
                distribution[0]
            }
            Algorithm::Dj(DjOracle::Balanced(_)) => 1.0 - distribution[0],
            Algorithm::Bv(c) => distribution[c.index()],
            Algorithm::Grover(m) => distribution[m.index()],
            Algorithm::Qft(QftInput::Phase(phi)) => {
                // phi maps onto the nearest 3-bit state
                let target =
                    ((phi * DIM as f64 / (2.0 * PI)).round() as i64).rem_euclid(DIM as i64);
                distribution[target as usize]
            }
            Algorithm::Qft(QftInput::Comb(p)) => {
                // mass on the period's harmonics
                (0..DIM)
                    .step_by(DIM / p as usize)
                    .map(|j| distribution[j])
                    .sum()
            }
        }
    }

    /// Best classical single-query success rate, where defined.
    pub fn classical_bound(self) -> Option<f64> {
        match self {
            Algorithm::Dj(_) => Some(0.5),
            Algorithm::Bv(_) => Some(0.25),
            Algorithm::Grover(_) => Some(0.25),
            Algorithm::Qft(_) => None,
        }
    }
}

fn bits_string(j: BasisIndex) -> String {
    let (a, b, c) = j.bits();
    format!("{}{}{}", u8::from(a), u8::from(b), u8::from(c))
}

/// DFT kernel exp(+2 pi i x y / 8) / sqrt(8).
pub(crate) fn dft8() -> Mat8 {
    let mut f = Mat8::zeros();
    let w = 1.0 / (DIM as f64).sqrt();
    for y in 0..DIM {
        for x in 0..DIM {
            f[(y, x)] = Complex::from_polar(w, 2.0 * PI * (x * y) as f64 / DIM as f64);
        }
    }
    f
}

/// The permutation operator exchanging the roles of qubits A and C.
pub fn bit_reversal_operator() -> Operator {
    let mut m = Mat8::zeros();
    for j in BasisIndex::all() {
        m[(j.bit_reversed().index(), j.index())] = C64::new(1.0, 0.0);
    }
    Operator::new(m)
}

fn dj_prep(device: &DeviceParams) -> PulseSchedule {
    compile_rotation(device, QubitLabel::A, 0.0, FRAC_PI_2)
        .then(&compile_rotation(device, QubitLabel::B, 0.0, FRAC_PI_2))
        .then(&compile_rotation(device, QubitLabel::C, 0.0, -FRAC_PI_2))
}

fn dj_unprep(device: &DeviceParams) -> PulseSchedule {
    compile_rotation(device, QubitLabel::A, 0.0, -FRAC_PI_2)
        .then(&compile_rotation(device, QubitLabel::B, 0.0, -FRAC_PI_2))
        .then(&compile_rotation(device, QubitLabel::C, 0.0, FRAC_PI_2))
}

/// Deutsch-Jozsa circuit: prepare (|0>+|1>)(|0>+|1>)(|0>-|1>)/(2 sqrt 2),
/// apply the oracle, rotate back. |000> signals a constant function.
pub fn build_dj(device: &DeviceParams, oracle: DjOracle) -> PulseSchedule {
    let mut sched = dj_prep(device);
    sched.set_label(format!("dj {}", oracle.name()));
    match oracle {
        DjOracle::Constant0 => {}
        DjOracle::Constant1 => {
            // the only oracle that costs real pulses: X_pi on C
            sched = sched.then(&compile_rotation(device, QubitLabel::C, -FRAC_PI_2, PI));
        }
        DjOracle::Balanced(f) => {
            let mut phases = [0.0; DIM];
            for j in BasisIndex::all() {
                if f.evaluate(j) {
                    phases[j.index()] = PI;
                }
            }
            sched.push(NativeGate::virtual_phase(phases));
        }
    }
    sched.then(&dj_unprep(device))
}

/// Bernstein-Vazirani circuit for the hidden string c = (c_A, c_B, c_C):
/// CNOTs onto C for the A and B bits, a Y_pi on C for its own bit.
pub fn build_bv(device: &DeviceParams, c: BasisIndex) -> Result<PulseSchedule> {
    let (ca, cb, cc) = c.bits();
    let mut sched = dj_prep(device);
    sched.set_label(format!("bv {}", bits_string(c)));
    if ca {
        sched = sched.then(&compile_cnot(device, QubitLabel::A, QubitLabel::C)?);
    }
    if cb {
        sched = sched.then(&compile_cnot(device, QubitLabel::B, QubitLabel::C)?);
    }
    if cc {
        sched = sched.then(&compile_rotation(device, QubitLabel::C, 0.0, PI));
    }
    Ok(sched.then(&dj_unprep(device)))
}

/// Single-iteration Grover search: uniform superposition, a free phase flip
/// on the marked state, and the inversion-about-mean built from three
/// rotations around a phase flip on |000>.
pub fn build_grover(device: &DeviceParams, marked: BasisIndex) -> PulseSchedule {
    let plus = |dev: &DeviceParams| {
        compile_rotation(dev, QubitLabel::A, 0.0, FRAC_PI_2)
            .then(&compile_rotation(dev, QubitLabel::B, 0.0, FRAC_PI_2))
            .then(&compile_rotation(dev, QubitLabel::C, 0.0, FRAC_PI_2))
    };
    let minus = |dev: &DeviceParams| {
        compile_rotation(dev, QubitLabel::A, 0.0, -FRAC_PI_2)
            .then(&compile_rotation(dev, QubitLabel::B, 0.0, -FRAC_PI_2))
            .then(&compile_rotation(dev, QubitLabel::C, 0.0, -FRAC_PI_2))
    };
    let mut sched = plus(device);
    sched.set_label(format!("grover {}", bits_string(marked)));
    sched.push(NativeGate::phase_on(marked.index(), PI));
    let mut sched = sched.then(&minus(device));
    sched.push(NativeGate::phase_on(0, PI));
    sched.then(&plus(device))
}

/// The Fourier-transform block: three -Y_{pi/2} rotations with the
/// controlled-phase ladder as free diagonal gates (pi/2 on A.B, pi/4 on
/// A.C, pi/2 on B.C). Output indices are bit-reversed in software.
pub fn build_qft(device: &DeviceParams) -> PulseSchedule {
    let phase_pair = |w1: usize, w2: usize, phase: f64| {
        let mut phases = [0.0; DIM];
        for (j, p) in phases.iter_mut().enumerate() {
            if j & w1 != 0 && j & w2 != 0 {
                *p = phase;
            }
        }
        NativeGate::virtual_phase(phases)
    };
    let mut sched = compile_rotation(device, QubitLabel::A, 0.0, -FRAC_PI_2);
    sched.set_label("qft");
    sched.push(phase_pair(4, 2, FRAC_PI_2));
    sched.push(phase_pair(4, 1, FRAC_PI_4));
    let mut sched = sched.then(&compile_rotation(device, QubitLabel::B, 0.0, -FRAC_PI_2));
    sched.push(phase_pair(2, 1, FRAC_PI_2));
    sched.then(&compile_rotation(device, QubitLabel::C, 0.0, -FRAC_PI_2))
}

/// State preparation for the Fourier protocols: combs populate every
/// period-th index through minimal product rotations; phase inputs get a
/// uniform superposition plus a free z-phase of -phi per index step.
pub fn qft_input_state(device: &DeviceParams, input: QftInput) -> Result<PulseSchedule> {
    let rotated_qubits: &[QubitLabel] = match input {
        QftInput::Comb(8) => &[],
        QftInput::Comb(4) => &[QubitLabel::A],
        QftInput::Comb(2) => &[QubitLabel::A, QubitLabel::B],
        QftInput::Comb(1) | QftInput::Phase(_) => &[QubitLabel::A, QubitLabel::B, QubitLabel::C],
        QftInput::Comb(p) => {
            return Err(Error::InvalidInput(format!(
                "comb period must be 1, 2, 4 or 8, got {p}"
            )))
        }
    };
    let mut blind = PulseSchedule::new(format!("prep {}", input.name()));
    for &q in rotated_qubits {
        blind = blind.then(&compile_rotation(device, q, 0.0, FRAC_PI_2));
    }
    let mut sched = compile_state_aware(
        &blind,
        &PureState::basis(BasisIndex::new(0).expect("ground state")),
        EPS_PRUNE,
    );
    if let QftInput::Phase(phi) = input {
        let mut phases = [0.0; DIM];
        for (j, p) in phases.iter_mut().enumerate() {
            *p = -phi * j as f64;
        }
        sched.push(NativeGate::virtual_phase(phases));
    }
    Ok(sched)
}

/// Squared statistical overlap (sum_j sqrt(t_j e_j))^2 between two
/// probability vectors, each normalized within 1e-6.
pub fn sso(t: &[f64; DIM], e: &[f64; DIM]) -> Result<f64> {
    for (name, v) in [("first", t), ("second", e)] {
        let total: f64 = v.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidInput(format!(
                "{name} distribution sums to {total}, expected 1"
            )));
        }
        if v.iter().any(|&x| x < -1e-12) {
            return Err(Error::InvalidInput(format!(
                "{name} distribution has negative entries"
            )));
        }
    }
    let overlap: f64 = t
        .iter()
        .zip(e)
        .map(|(&tj, &ej)| (tj.max(0.0) * ej.max(0.0)).sqrt())
        .sum();
    Ok((overlap * overlap).clamp(0.0, 1.0))
}

/// Outcome of one algorithm run.
#[derive(Debug, Clone)]
pub struct AlgorithmResult {
    pub algorithm: String,
    pub oracle: String,
    /// Measured distribution, bit-reversed for the Fourier transform.
    pub distribution: [f64; DIM],
    pub success_probability: f64,
    pub sso: Option<f64>,
    pub classical_bound: Option<f64>,
    pub shots: u64,
    pub seed: u64,
    /// Mean across measurement rounds; zero without the readout protocol.
    pub discarded_fraction: f64,
}

/// Execute an algorithm. `noise` governs pulse decoherence; a readout model
/// routes measurement through the four-round demarcation protocol, `None`
/// reads the diagonal. `shots = 0` is the exact infinite-shot limit.
pub fn run_algorithm(
    algorithm: Algorithm,
    device: &DeviceParams,
    noise: &NoiseModel,
    readout: Option<&ReadoutModel>,
    shots: u64,
    seed: u64,
) -> Result<AlgorithmResult> {
    let sched = algorithm.schedule(device)?;
    let rho = evolve_schedule(
        &DensityMatrix::pure(BasisIndex::new(0).expect("ground state")),
        &sched,
        noise,
    )?;
    let mut discarded = 0.0;
    let mut distribution = match readout {
        Some(model) => {
            let est = if shots == 0 {
                measure_populations_exact(&rho, model, noise, device)?
            } else {
                let mut rng = sampling::stream_from_seed(seed);
                measure_populations(&rho, shots, model, noise, device, &mut rng)?
            };
            discarded = est.discarded_fraction.iter().sum::<f64>() / 4.0;
            est.p
        }
        None => {
            let pops = rho.populations();
            if shots == 0 {
                pops
            } else {
                let mut rng = sampling::stream_from_seed(seed);
                let mut counts = [0u64; DIM];
                for _ in 0..shots {
                    counts[sampling::sample_index(&pops, &mut rng)] += 1;
                }
                let mut est = [0.0; DIM];
                for (e, c) in est.iter_mut().zip(counts) {
                    *e = c as f64 / shots as f64;
                }
                est
            }
        }
    };
    if algorithm.bit_reversed_readout() {
        let mut swapped = [0.0; DIM];
        for j in BasisIndex::all() {
            swapped[j.bit_reversed().index()] = distribution[j.index()];
        }
        distribution = swapped;
    }
    let success_probability = algorithm.success_probability(&distribution);
    let analytic = algorithm.analytic_distribution();
    let sso_value = sso(&analytic, &distribution).ok();
    Ok(AlgorithmResult {
        algorithm: algorithm.kind_name().into(),
        oracle: algorithm.oracle_name(),
        distribution,
        success_probability,
        sso: sso_value,
        classical_bound: algorithm.classical_bound(),
        shots,
        seed,
        discarded_fraction: discarded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn device() -> DeviceParams {
        DeviceParams::reference()
    }

    fn run_ideal(algo: Algorithm) -> AlgorithmResult {
        run_algorithm(algo, &device(), &NoiseModel::disabled(), None, 0, 0).unwrap()
    }

    #[test]
    fn dj_constant_oracles_return_home() {
        for oracle in [DjOracle::Constant0, DjOracle::Constant1] {
            let r = run_ideal(Algorithm::Dj(oracle));
            assert_abs_diff_eq!(r.success_probability, 1.0, epsilon = 1e-9);
            assert_abs_diff_eq!(r.distribution[0], 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn dj_balanced_oracles_never_return_home() {
        for f in BalancedFunction::ALL {
            let r = run_ideal(Algorithm::Dj(DjOracle::Balanced(f)));
            assert_abs_diff_eq!(r.success_probability, 1.0, epsilon = 1e-9);
            assert!(
                r.distribution[0] < 1e-9,
                "{}: P(000) = {}",
                f.name(),
                r.distribution[0]
            );
        }
    }

    #[test]
    fn dj_linear_oracles_are_deterministic() {
        let r = run_ideal(Algorithm::Dj(DjOracle::Balanced(BalancedFunction::A)));
        assert_abs_diff_eq!(r.distribution[4], 1.0, epsilon = 1e-9);
        let r = run_ideal(Algorithm::Dj(DjOracle::Balanced(BalancedFunction::BXorC)));
        assert_abs_diff_eq!(r.distribution[3], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn dj_distributions_match_walsh_spectrum() {
        for f in BalancedFunction::ALL {
            let algo = Algorithm::Dj(DjOracle::Balanced(f));
            let r = run_ideal(algo);
            let t = algo.analytic_distribution();
            for (measured, expected) in r.distribution.iter().zip(&t) {
                assert_abs_diff_eq!(measured, expected, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn balanced_oracles_are_balanced() {
        // exactly four of eight diagonal phases flip sign
        for f in BalancedFunction::ALL {
            let count = BasisIndex::all().filter(|&j| f.evaluate(j)).count();
            assert_eq!(count, 4, "{}", f.name());
        }
    }

    #[test]
    fn dj_oracle_costs() {
        let dev = device();
        // balanced oracles are free: same pulse count as the empty oracle
        let baseline = build_dj(&dev, DjOracle::Constant0).pulse_count();
        for f in BalancedFunction::ALL {
            assert_eq!(
                build_dj(&dev, DjOracle::Balanced(f)).pulse_count(),
                baseline
            );
        }
        // the constant-1 oracle spends four real pulses on the X_pi
        assert_eq!(
            build_dj(&dev, DjOracle::Constant1).pulse_count(),
            baseline + 4
        );
    }

    #[test]
    fn bv_recovers_every_string() {
        for j in BasisIndex::all() {
            let r = run_ideal(Algorithm::Bv(j));
            assert_abs_diff_eq!(r.success_probability, 1.0, epsilon = 1e-9);
            assert_abs_diff_eq!(r.distribution[j.index()], 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn bv_000_needs_no_oracle_gates() {
        let dev = device();
        let empty = build_bv(&dev, BasisIndex::new(0).unwrap()).unwrap();
        assert_eq!(empty.pulse_count(), dj_prep(&dev).pulse_count() * 2);
    }

    #[test]
    fn grover_amplifies_every_marked_state() {
        for m in BasisIndex::all() {
            let r = run_ideal(Algorithm::Grover(m));
            assert_abs_diff_eq!(r.success_probability, 0.78125, epsilon = 1e-9);
        }
    }

    #[test]
    fn grover_without_marking_is_uniform() {
        // zero-phase oracle: drop the marked flip, keep the diffusion
        let dev = device();
        let algo = Algorithm::Grover(BasisIndex::new(5).unwrap());
        let mut gates = algo.schedule(&dev).unwrap().gates().to_vec();
        let oracle_pos = gates
            .iter()
            .position(|g| matches!(g, NativeGate::VirtualPhase { .. }))
            .unwrap();
        gates.remove(oracle_pos);
        let sched = PulseSchedule::with_gates("unmarked", gates);
        let rho = evolve_schedule(
            &DensityMatrix::pure(BasisIndex::new(0).unwrap()),
            &sched,
            &NoiseModel::disabled(),
        )
        .unwrap();
        for p in rho.populations() {
            assert_abs_diff_eq!(p, 0.125, epsilon = 1e-9);
        }
    }

    #[test]
    fn qft_of_ground_state_is_uniform() {
        let r = run_ideal(Algorithm::Qft(QftInput::Comb(8)));
        for p in r.distribution {
            assert_abs_diff_eq!(p, 0.125, epsilon = 1e-9);
        }
    }

    #[test]
    fn qft_period_two_comb_lands_on_harmonics() {
        let r = run_ideal(Algorithm::Qft(QftInput::Comb(2)));
        assert_abs_diff_eq!(r.distribution[0], 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(r.distribution[4], 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(r.success_probability, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn qft_integer_phase_is_deterministic() {
        for m in 0..8 {
            let phi = 2.0 * PI * m as f64 / 8.0;
            let r = run_ideal(Algorithm::Qft(QftInput::Phase(phi)));
            assert_abs_diff_eq!(r.distribution[m], 1.0, epsilon = 1e-9);
            assert_abs_diff_eq!(r.success_probability, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn qft_pulse_budget() {
        let dev = device();
        let sched = build_qft(&dev);
        assert_eq!(sched.pulse_count(), 12);
        let virtuals = sched.gates().len() - sched.pulse_count();
        assert_eq!(virtuals, 3);
    }

    #[test]
    fn qft_unitary_matches_independent_dft_oracle() {
        // independent oracle: build the 8-point DFT from its definition
        let dev = device();
        let mut oracle = Mat8::zeros();
        for y in 0..DIM {
            for x in 0..DIM {
                let angle = 2.0 * PI * (x as f64) * (y as f64) / 8.0;
                oracle[(y, x)] = C64::new(angle.cos() / 8f64.sqrt(), angle.sin() / 8f64.sqrt());
            }
        }
        let u_sched = build_qft(&dev).unitary();
        let u_full = bit_reversal_operator().compose(&u_sched);
        // convention map: diagonal output phases
        // exp(i (pi/4 y + pi/2 y_B + 3 pi/4 y_C))
        let mut expected = Mat8::zeros();
        for y in 0..DIM {
            let yb = f64::from(u8::from(y & 2 != 0));
            let yc = f64::from(u8::from(y & 1 != 0));
            let phase = FRAC_PI_4 * y as f64 + FRAC_PI_2 * yb + 3.0 * FRAC_PI_4 * yc;
            let d = Complex::from_polar(1.0, phase);
            for x in 0..DIM {
                expected[(y, x)] = d * oracle[(y, x)];
            }
        }
        let dev_max = crate::state::max_abs_diff(u_full.matrix(), &expected);
        assert!(dev_max < 1e-10, "max deviation {dev_max}");
    }

    #[test]
    fn sso_closed_forms() {
        let uniform = [0.125; 8];
        let mut delta = [0.0; 8];
        delta[3] = 1.0;
        assert_abs_diff_eq!(sso(&uniform, &uniform).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sso(&uniform, &delta).unwrap(), 0.125, epsilon = 1e-12);
        let mut other = [0.0; 8];
        other[5] = 1.0;
        assert_abs_diff_eq!(sso(&delta, &other).unwrap(), 0.0, epsilon = 1e-12);
        // symmetry
        assert_abs_diff_eq!(
            sso(&uniform, &delta).unwrap(),
            sso(&delta, &uniform).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn sso_rejects_unnormalized_input() {
        let bad = [0.2; 8];
        assert!(sso(&bad, &[0.125; 8]).is_err());
    }

    #[test]
    fn classical_bounds() {
        assert_eq!(
            Algorithm::Dj(DjOracle::Constant0).classical_bound(),
            Some(0.5)
        );
        assert_eq!(
            Algorithm::Bv(BasisIndex::new(3).unwrap()).classical_bound(),
            Some(0.25)
        );
        assert_eq!(
            Algorithm::Grover(BasisIndex::new(1).unwrap()).classical_bound(),
            Some(0.25)
        );
        assert_eq!(Algorithm::Qft(QftInput::Comb(1)).classical_bound(), None);
    }

    #[test]
    fn sampled_run_is_reproducible_and_close() {
        let algo = Algorithm::Grover(BasisIndex::new(5).unwrap());
        let dev = device();
        let a = run_algorithm(algo, &dev, &NoiseModel::disabled(), None, 20_000, 42).unwrap();
        let b = run_algorithm(algo, &dev, &NoiseModel::disabled(), None, 20_000, 42).unwrap();
        assert_eq!(a.distribution, b.distribution);
        let tol = 3.0 / (20_000f64).sqrt();
        assert_abs_diff_eq!(a.success_probability, 0.78125, epsilon = tol);
    }

    #[test]
    fn noisy_virtual_oracle_beats_pulsed_constant_one() {
        // the balanced oracles are free while constant-1 spends a real
        // X_pi; under noise the free oracle must come out ahead
        let dev = device();
        let noise = NoiseModel::from_device(&dev);
        let virt = run_algorithm(
            Algorithm::Dj(DjOracle::Balanced(BalancedFunction::BXorC)),
            &dev,
            &noise,
            None,
            0,
            0,
        )
        .unwrap();
        let pulsed =
            run_algorithm(Algorithm::Dj(DjOracle::Constant1), &dev, &noise, None, 0, 0).unwrap();
        assert!(
            pulsed.success_probability < virt.success_probability,
            "constant1 {} vs balanced {}",
            pulsed.success_probability,
            virt.success_probability
        );
    }
}
