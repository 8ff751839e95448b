//! Trimon device model: calibrated parameters and the transition algebra.
//!
//! Each of the three qubits has four transition frequencies, one per state
//! of its two partner qubits, for twelve addressable lines in total. The
//! additive model predicts each line from the partner-free frequencies and
//! the pairwise coupling strengths:
//!
//!   f(mu; n1, n2) = f00[mu] - J[mu,nu1]*n1 - J[mu,nu2]*n2
//!
//! where the J's are the tabulated couplings in ordinary-frequency units.
//! Measured line frequencies can be stored alongside and used verbatim.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{self, NmOptions};
use crate::state::BasisIndex;

/// One of the three qubit modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum QubitLabel {
    A,
    B,
    C,
}

impl QubitLabel {
    pub const ALL: [QubitLabel; 3] = [QubitLabel::A, QubitLabel::B, QubitLabel::C];

    /// Partner qubits in the fixed naming order: A->(B,C), B->(C,A), C->(A,B).
    pub fn partners(self) -> (QubitLabel, QubitLabel) {
        match self {
            QubitLabel::A => (QubitLabel::B, QubitLabel::C),
            QubitLabel::B => (QubitLabel::C, QubitLabel::A),
            QubitLabel::C => (QubitLabel::A, QubitLabel::B),
        }
    }

    /// Array index: A=0, B=1, C=2.
    pub fn idx(self) -> usize {
        match self {
            QubitLabel::A => 0,
            QubitLabel::B => 1,
            QubitLabel::C => 2,
        }
    }

    /// Bit weight in the basis index: A=4, B=2, C=1.
    pub fn bit_weight(self) -> usize {
        match self {
            QubitLabel::A => 4,
            QubitLabel::B => 2,
            QubitLabel::C => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            QubitLabel::A => "A",
            QubitLabel::B => "B",
            QubitLabel::C => "C",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(QubitLabel::A),
            "B" | "b" => Ok(QubitLabel::B),
            "C" | "c" => Ok(QubitLabel::C),
            _ => Err(Error::InvalidInput(format!("unknown qubit label {s:?}"))),
        }
    }
}

impl fmt::Display for QubitLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Unordered qubit pair, indexing the coupling table: AB=0, BC=1, CA=2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pair {
    AB,
    BC,
    CA,
}

impl Pair {
    pub fn of(a: QubitLabel, b: QubitLabel) -> Result<Pair> {
        use QubitLabel::*;
        match (a, b) {
            (A, B) | (B, A) => Ok(Pair::AB),
            (B, C) | (C, B) => Ok(Pair::BC),
            (C, A) | (A, C) => Ok(Pair::CA),
            _ => Err(Error::InvalidInput(format!(
                "no coupling between {a} and {b}"
            ))),
        }
    }

    pub fn idx(self) -> usize {
        match self {
            Pair::AB => 0,
            Pair::BC => 1,
            Pair::CA => 2,
        }
    }
}

/// One of the twelve addressable transitions: `qubit` flips between 0 and 1
/// while its partners sit in the fixed states `(partner1, partner2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Transition {
    pub qubit: QubitLabel,
    pub partner1: bool,
    pub partner2: bool,
}

impl Transition {
    pub fn new(qubit: QubitLabel, partner1: bool, partner2: bool) -> Self {
        Self {
            qubit,
            partner1,
            partner2,
        }
    }

    /// All twelve transitions in table order: qubit A's four lines first
    /// with partner bits ordered (0,0), (0,1), (1,0), (1,1), then B's, then C's.
    pub fn all() -> [Transition; 12] {
        let mut out = [Transition::new(QubitLabel::A, false, false); 12];
        let mut i = 0;
        for q in QubitLabel::ALL {
            for bits in 0..4u8 {
                out[i] = Transition::new(q, bits & 2 != 0, bits & 1 != 0);
                i += 1;
            }
        }
        out
    }

    /// Position in the `all()` ordering.
    pub fn index(self) -> usize {
        self.qubit.idx() * 4 + usize::from(self.partner1) * 2 + usize::from(self.partner2)
    }

    /// Basis state with the addressed qubit in 0 and partners as configured.
    pub fn lower(self) -> BasisIndex {
        let (p1, p2) = self.qubit.partners();
        let j = usize::from(self.partner1) * p1.bit_weight()
            + usize::from(self.partner2) * p2.bit_weight();
        BasisIndex::new(j).expect("partner bits fit in 0..8")
    }

    /// Basis state with the addressed qubit in 1.
    pub fn upper(self) -> BasisIndex {
        BasisIndex::new(self.lower().index() + self.qubit.bit_weight())
            .expect("upper index fits in 0..8")
    }

    /// Label in the device's naming scheme, e.g. "AB0C0" or "CA1B1".
    pub fn label(self) -> String {
        let (p1, p2) = self.qubit.partners();
        format!(
            "{}{}{}{}{}",
            self.qubit,
            p1,
            u8::from(self.partner1),
            p2,
            u8::from(self.partner2)
        )
    }

    pub fn parse(s: &str) -> Result<Self> {
        let bytes = s.as_bytes();
        if bytes.len() != 5 {
            return Err(Error::InvalidInput(format!("bad transition label {s:?}")));
        }
        let qubit = QubitLabel::parse(&s[0..1])?;
        let (p1, p2) = qubit.partners();
        let parse_bit = |b: u8| match b {
            b'0' => Ok(false),
            b'1' => Ok(true),
            _ => Err(Error::InvalidInput(format!("bad transition label {s:?}"))),
        };
        if &s[1..2] != p1.name() || &s[3..4] != p2.name() {
            return Err(Error::InvalidInput(format!(
                "bad transition label {s:?}: partners of {qubit} are {p1}, {p2}"
            )));
        }
        Ok(Transition::new(
            qubit,
            parse_bit(bytes[2])?,
            parse_bit(bytes[4])?,
        ))
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Enumerate the twelve transitions with their lower/upper basis states.
pub fn enumerate_transitions() -> Vec<(Transition, BasisIndex, BasisIndex)> {
    Transition::all()
        .into_iter()
        .map(|t| (t, t.lower(), t.upper()))
        .collect()
}

/// Which frequency the gate engine should use for a transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrequencyMode {
    /// Compute from {f00, J_pair} with the additive model.
    Additive,
    /// Return the stored measured value verbatim.
    Measured,
}

/// Calibrated parameters of one trimon device. Internally SI units
/// (Hz, seconds); the file format uses GHz/MHz/us/ns.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceParams {
    /// Transition frequency of each qubit with both partners in the ground
    /// state (Hz).
    pub f00: [f64; 3],
    /// Self-Kerr coupling in ordinary-frequency units (Hz); the qubit
    /// anharmonicity is -j_self.
    pub j_self: [f64; 3],
    /// Pairwise coupling (Hz), indexed AB, BC, CA. One excited partner
    /// lowers a transition by exactly this amount in the additive model.
    pub j_pair: [f64; 3],
    /// Dispersive shift of the readout cavity per qubit (Hz, signed).
    pub chi: [f64; 3],
    /// Relaxation times (s).
    pub t1: [f64; 3],
    /// Ramsey decay times (s).
    pub t2: [f64; 3],
    /// Pi-pulse lengths (s), indexed by `Transition::index()`.
    pub pi_pulse: [f64; 12],
    /// Measured line frequencies (Hz), indexed by `Transition::index()`.
    pub measured_freq: [Option<f64>; 12],
}

impl DeviceParams {
    /// The reference calibration bundled with the crate.
    pub fn reference() -> Self {
        let ghz = 1e9;
        let mhz = 1e6;
        let us = 1e-6;
        let ns = 1e-9;
        let params = Self {
            f00: [4.9278 * ghz, 4.5146 * ghz, 5.6864 * ghz],
            j_self: [107.9 * mhz, 113.1 * mhz, 138.0 * mhz],
            j_pair: [192.4 * mhz, 211.4 * mhz, 242.0 * mhz],
            chi: [-0.064 * mhz, -0.061 * mhz, -0.069 * mhz],
            t1: [43.7 * us, 43.5 * us, 26.3 * us],
            t2: [38.9 * us, 43.3 * us, 13.6 * us],
            pi_pulse: [
                125.0 * ns,
                226.0 * ns,
                230.0 * ns,
                316.0 * ns, // A lines
                617.0 * ns,
                257.0 * ns,
                293.0 * ns,
                333.0 * ns, // B lines
                319.0 * ns,
                311.0 * ns,
                295.0 * ns,
                333.0 * ns, // C lines
            ],
            measured_freq: [
                Some(4.9278 * ghz),
                Some(4.6858 * ghz),
                Some(4.7355 * ghz),
                Some(4.4837 * ghz),
                Some(4.5146 * ghz),
                Some(4.3222 * ghz),
                Some(4.3032 * ghz),
                Some(4.1011 * ghz),
                Some(5.6864 * ghz),
                Some(5.4750 * ghz),
                Some(5.4444 * ghz),
                Some(5.2232 * ghz),
            ],
        };
        params.validate().expect("reference calibration is valid");
        params
    }

    pub fn validate(&self) -> Result<()> {
        for q in QubitLabel::ALL {
            let i = q.idx();
            if self.t1[i] <= 0.0 || self.t2[i] <= 0.0 {
                return Err(Error::InvalidDevice(format!(
                    "qubit {q}: T1 and T2 must be positive"
                )));
            }
            if self.t2[i] > 2.0 * self.t1[i] {
                return Err(Error::InvalidDevice(format!(
                    "qubit {q}: T2 = {} exceeds 2*T1 = {}",
                    self.t2[i],
                    2.0 * self.t1[i]
                )));
            }
        }
        if let Some(t) = Transition::all()
            .iter()
            .find(|t| self.pi_pulse[t.index()] <= 0.0)
        {
            return Err(Error::InvalidDevice(format!(
                "transition {t}: pi-pulse length must be positive"
            )));
        }
        Ok(())
    }

    pub fn anharmonicity(&self, q: QubitLabel) -> f64 {
        -self.j_self[q.idx()]
    }

    pub fn pair_coupling(&self, a: QubitLabel, b: QubitLabel) -> Result<f64> {
        Ok(self.j_pair[Pair::of(a, b)?.idx()])
    }

    pub fn pi_pulse(&self, t: Transition) -> f64 {
        self.pi_pulse[t.index()]
    }

    /// Additive-model prediction for a transition (Hz).
    pub fn additive_frequency(&self, t: Transition) -> f64 {
        let (p1, p2) = t.qubit.partners();
        let mut f = self.f00[t.qubit.idx()];
        if t.partner1 {
            f -= self
                .pair_coupling(t.qubit, p1)
                .expect("partners always coupled");
        }
        if t.partner2 {
            f -= self
                .pair_coupling(t.qubit, p2)
                .expect("partners always coupled");
        }
        f
    }
}

/// Transition frequency in the requested mode (Hz).
pub fn transition_frequency(
    params: &DeviceParams,
    t: Transition,
    mode: FrequencyMode,
) -> Result<f64> {
    match mode {
        FrequencyMode::Additive => Ok(params.additive_frequency(t)),
        FrequencyMode::Measured => params.measured_freq[t.index()]
            .ok_or_else(|| Error::MissingMeasuredFrequency(t.label())),
    }
}

/// The frequency a pulse would be played at: the measured line when one is
/// stored, the additive-model prediction otherwise. The additive model is a
/// physics check; measured lines are the operating truth.
pub fn operating_frequency(params: &DeviceParams, t: Transition) -> f64 {
    params.measured_freq[t.index()].unwrap_or_else(|| params.additive_frequency(t))
}

/// A measurement fed into the spectrum fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitObservable {
    /// A line frequency (Hz).
    Line(Transition),
    /// A qubit anharmonicity (Hz, negative for these devices).
    Anharmonicity(QubitLabel),
}

/// Result of the downhill-simplex spectrum fit.
#[derive(Debug, Clone)]
pub struct FitReport {
    pub f00: [f64; 3],
    pub j_pair: [f64; 3],
    /// Present only when anharmonicity measurements were supplied.
    pub j_self: Option<[f64; 3]>,
    /// predicted - measured (Hz), in input order.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Simplex spread below which the spectrum fit is considered converged (Hz).
pub const FIT_SPREAD_TOL_HZ: f64 = 1e3;
/// Iteration cap for the spectrum fit.
pub const FIT_MAX_ITERS: usize = 10_000;

/// Fit {f00, J_pair} (and J_self when anharmonicities are given) to a set of
/// measured lines by minimizing the sum of squared residuals with a
/// downhill simplex.
pub fn fit_params(measured: &[(FitObservable, f64)]) -> Result<FitReport> {
    let with_self = measured
        .iter()
        .any(|(o, _)| matches!(o, FitObservable::Anharmonicity(_)));
    let n_params = if with_self { 9 } else { 6 };

    check_determined(measured, n_params)?;

    // Starting point: highest observed line per qubit for f00 (shifts are
    // all negative), a generic 200 MHz for the couplings, and the measured
    // values for the anharmonicities.
    let mut x0 = vec![0.0; n_params];
    for q in QubitLabel::ALL {
        let best = measured
            .iter()
            .filter_map(|(o, v)| match o {
                FitObservable::Line(t) if t.qubit == q => Some(*v),
                _ => None,
            })
            .fold(f64::MIN, f64::max);
        x0[q.idx()] = if best > f64::MIN { best } else { 5e9 };
    }
    x0[3] = 2e8;
    x0[4] = 2e8;
    x0[5] = 2e8;
    if with_self {
        for q in QubitLabel::ALL {
            let anh = measured
                .iter()
                .filter_map(|(o, v)| match o {
                    FitObservable::Anharmonicity(l) if *l == q => Some(*v),
                    _ => None,
                })
                .next()
                .unwrap_or(-1e8);
            x0[6 + q.idx()] = -anh;
        }
    }

    let objective = |x: &[f64]| -> f64 {
        measured
            .iter()
            .map(|(obs, v)| {
                let r = predict(x, obs) - v;
                r * r
            })
            .sum()
    };

    let steps = vec![10e6; n_params];
    let res = optim::minimize(
        objective,
        &x0,
        &steps,
        &NmOptions {
            x_tol: vec![FIT_SPREAD_TOL_HZ; n_params],
            max_iters: FIT_MAX_ITERS,
            restarts: 2,
        },
    );

    let residuals = measured
        .iter()
        .map(|(obs, v)| predict(&res.x, obs) - v)
        .collect();
    Ok(FitReport {
        f00: [res.x[0], res.x[1], res.x[2]],
        j_pair: [res.x[3], res.x[4], res.x[5]],
        j_self: with_self.then(|| [res.x[6], res.x[7], res.x[8]]),
        residuals,
        iterations: res.iterations,
        converged: res.converged,
    })
}

fn predict(x: &[f64], obs: &FitObservable) -> f64 {
    match obs {
        FitObservable::Line(t) => {
            let (p1, p2) = t.qubit.partners();
            let mut f = x[t.qubit.idx()];
            if t.partner1 {
                f -= x[3 + Pair::of(t.qubit, p1).expect("valid pair").idx()];
            }
            if t.partner2 {
                f -= x[3 + Pair::of(t.qubit, p2).expect("valid pair").idx()];
            }
            f
        }
        FitObservable::Anharmonicity(q) => -x[6 + q.idx()],
    }
}

/// The additive model is linear in the parameters, so identifiability is a
/// rank condition on the design matrix.
fn check_determined(measured: &[(FitObservable, f64)], n_params: usize) -> Result<()> {
    use nalgebra::DMatrix;
    let mut design = DMatrix::<f64>::zeros(measured.len(), n_params);
    for (row, (obs, _)) in measured.iter().enumerate() {
        match obs {
            FitObservable::Line(t) => {
                design[(row, t.qubit.idx())] = 1.0;
                let (p1, p2) = t.qubit.partners();
                if t.partner1 {
                    design[(row, 3 + Pair::of(t.qubit, p1).expect("valid pair").idx())] = -1.0;
                }
                if t.partner2 {
                    design[(row, 3 + Pair::of(t.qubit, p2).expect("valid pair").idx())] = -1.0;
                }
            }
            FitObservable::Anharmonicity(q) => {
                design[(row, 6 + q.idx())] = -1.0;
            }
        }
    }
    let rank = design.svd(false, false).rank(1e-9);
    if rank < n_params {
        return Err(Error::UnderDetermined {
            rank,
            params: n_params,
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Device parameter file (TOML, units of the calibration tables)
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct DeviceFile {
    qubit: BTreeMap<String, QubitSection>,
    coupling: CouplingSection,
    transition: BTreeMap<String, TransitionSection>,
}

#[derive(Debug, Serialize, Deserialize)]
struct QubitSection {
    f00_ghz: f64,
    anharmonicity_mhz: f64,
    t1_us: f64,
    t2_us: f64,
    chi_mhz: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct CouplingSection {
    ab_mhz: f64,
    bc_mhz: f64,
    ca_mhz: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct TransitionSection {
    pi_pulse_ns: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    freq_ghz: Option<f64>,
}

impl DeviceParams {
    /// Parse and validate the TOML device parameter format.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: DeviceFile =
            toml::from_str(text).map_err(|e| Error::InvalidDevice(e.to_string()))?;
        let mut params = DeviceParams {
            f00: [0.0; 3],
            j_self: [0.0; 3],
            j_pair: [0.0; 3],
            chi: [0.0; 3],
            t1: [0.0; 3],
            t2: [0.0; 3],
            pi_pulse: [0.0; 12],
            measured_freq: [None; 12],
        };
        for q in QubitLabel::ALL {
            let section = file
                .qubit
                .get(q.name())
                .ok_or_else(|| Error::InvalidDevice(format!("missing [qubit.{q}] section")))?;
            let i = q.idx();
            params.f00[i] = section.f00_ghz * 1e9;
            params.j_self[i] = -section.anharmonicity_mhz * 1e6;
            params.t1[i] = section.t1_us * 1e-6;
            params.t2[i] = section.t2_us * 1e-6;
            params.chi[i] = section.chi_mhz * 1e6;
        }
        params.j_pair = [
            file.coupling.ab_mhz * 1e6,
            file.coupling.bc_mhz * 1e6,
            file.coupling.ca_mhz * 1e6,
        ];
        for t in Transition::all() {
            let section = file
                .transition
                .get(&t.label())
                .ok_or_else(|| Error::InvalidDevice(format!("missing [transition.{t}] section")))?;
            params.pi_pulse[t.index()] = section.pi_pulse_ns * 1e-9;
            params.measured_freq[t.index()] = section.freq_ghz.map(|f| f * 1e9);
        }
        params.validate()?;
        Ok(params)
    }

    pub fn to_toml_string(&self) -> String {
        let mut qubit = BTreeMap::new();
        for q in QubitLabel::ALL {
            let i = q.idx();
            qubit.insert(
                q.name().to_string(),
                QubitSection {
                    f00_ghz: self.f00[i] / 1e9,
                    anharmonicity_mhz: self.anharmonicity(q) / 1e6,
                    t1_us: self.t1[i] / 1e-6,
                    t2_us: self.t2[i] / 1e-6,
                    chi_mhz: self.chi[i] / 1e6,
                },
            );
        }
        let mut transition = BTreeMap::new();
        for t in Transition::all() {
            transition.insert(
                t.label(),
                TransitionSection {
                    pi_pulse_ns: self.pi_pulse[t.index()] / 1e-9,
                    freq_ghz: self.measured_freq[t.index()].map(|f| f / 1e9),
                },
            );
        }
        let file = DeviceFile {
            qubit,
            coupling: CouplingSection {
                ab_mhz: self.j_pair[0] / 1e6,
                bc_mhz: self.j_pair[1] / 1e6,
                ca_mhz: self.j_pair[2] / 1e6,
            },
            transition,
        };
        toml::to_string_pretty(&file).expect("device file serializes")
    }
}
