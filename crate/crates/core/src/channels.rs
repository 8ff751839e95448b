//! Noise channels and the joint dispersive readout model.
//!
//! Decoherence: every real pulse is modeled as its instantaneous unitary
//! followed by amplitude damping and pure dephasing on all three qubits for
//! the pulse duration, with rates taken from the calibrated T1 and T2
//! values (1/Tphi = 1/T2 - 1/(2 T1)). Virtual phase gates take no time and
//! contribute no error.
//!
//! Readout: all three qubits share one cavity, so a measurement returns a
//! single voltage whose mean depends on the joint occupation through the
//! dispersive shifts chi. The |000> and |111> histograms sit at the two
//! extremes; two demarcation lines separate them from the overlapping
//! middle cluster and anything between the lines is discarded. Populations
//! of the remaining six states are reached by swapping them into the
//! readable pair with CCNOT pulses, four measurement rounds in total.
//! Excited qubits may relax during the readout window; that exposure is the
//! model's `readout_decay` parameter and is what makes reading |111> less
//! faithful than reading |000>.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::device::{DeviceParams, QubitLabel, Transition};
use crate::error::{Error, Result};
use crate::gates::{compile_ccnot, PulseSchedule};
use crate::sampling::{self, Stream};
use crate::state::{BasisIndex, DensityMatrix, KrausSet, Mat8, C64, DIM};

/// Readout cavity frequency (Hz); static metadata, never dynamical.
pub const CAVITY_FREQ_HZ: f64 = 7.2742e9;
/// Readout cavity bandwidth (Hz); static metadata.
pub const CAVITY_KAPPA_HZ: f64 = 3.3e6;

/// Per-qubit relaxation/dephasing rates for the per-pulse noise model.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    pub enabled: bool,
    t1: [f64; 3],
    t2: [f64; 3],
}

impl NoiseModel {
    pub fn from_device(device: &DeviceParams) -> Self {
        Self {
            enabled: true,
            t1: device.t1,
            t2: device.t2,
        }
    }

    pub fn disabled() -> Self {
        Self {
            enabled: false,
            t1: [1.0; 3],
            t2: [1.0; 3],
        }
    }

    pub fn t1(&self, q: QubitLabel) -> f64 {
        self.t1[q.idx()]
    }

    /// Pure dephasing time from 1/Tphi = 1/T2 - 1/(2 T1).
    pub fn tphi(&self, q: QubitLabel) -> Result<f64> {
        let i = q.idx();
        let rate = 1.0 / self.t2[i] - 1.0 / (2.0 * self.t1[i]);
        if rate <= 0.0 {
            return Err(Error::NonPositiveTphi(q.name()));
        }
        Ok(1.0 / rate)
    }
}

/// Amplitude damping composed with pure dephasing on one qubit for the
/// given idle duration, tensored with the identity on the partners.
pub fn decoherence_kraus(noise: &NoiseModel, qubit: QubitLabel, duration: f64) -> Result<KrausSet> {
    if duration < 0.0 {
        return Err(Error::InvalidInput(format!("negative duration {duration}")));
    }
    let t1 = noise.t1(qubit);
    let tphi = noise.tphi(qubit)?;
    let p = 1.0 - (-duration / t1).exp();
    let lambda = 1.0 - (-duration / tphi).exp();

    // single-qubit Kraus sets in the (|0>, |1>) basis
    let damp = [
        [[1.0, 0.0], [0.0, (1.0 - p).sqrt()]],
        [[0.0, p.sqrt()], [0.0, 0.0]],
    ];
    let deph = [
        [[1.0, 0.0], [0.0, (1.0 - lambda).sqrt()]],
        [[0.0, 0.0], [0.0, lambda.sqrt()]],
    ];
    let mut ops = Vec::with_capacity(4);
    for d in &deph {
        for a in &damp {
            // 2x2 product d*a, then embed on `qubit`
            let mut prod = [[0.0f64; 2]; 2];
            for r in 0..2 {
                for c in 0..2 {
                    prod[r][c] = d[r][0] * a[0][c] + d[r][1] * a[1][c];
                }
            }
            if prod.iter().flatten().any(|&x| x != 0.0) {
                ops.push(embed_single_qubit(qubit, &prod));
            }
        }
    }
    KrausSet::new_with(ops, 1e-12)
}

/// Embed a real 2x2 single-qubit operator at the qubit's bit position.
fn embed_single_qubit(qubit: QubitLabel, op: &[[f64; 2]; 2]) -> Mat8 {
    let w = qubit.bit_weight();
    let mut m = Mat8::zeros();
    for row in 0..DIM {
        for col in 0..DIM {
            // nonzero only where the partner bits agree
            if (row & !w) == (col & !w) {
                let rb = usize::from(row & w != 0);
                let cb = usize::from(col & w != 0);
                m[(row, col)] = C64::new(op[rb][cb], 0.0);
            }
        }
    }
    m
}

/// Run a schedule against a state: each real pulse applies its unitary and
/// then, when noise is enabled, idle decoherence on all three qubits for
/// the pulse duration. Virtual phases apply their unitary with no error.
pub fn evolve_schedule(
    state: &DensityMatrix,
    sched: &PulseSchedule,
    noise: &NoiseModel,
) -> Result<DensityMatrix> {
    let mut rho = state.clone();
    // pulse lengths repeat constantly, so cache the channels per duration
    let mut cache: HashMap<u64, [KrausSet; 3]> = HashMap::new();
    for gate in sched.gates() {
        rho = rho.evolved(&gate.unitary());
        let duration = gate.duration();
        if noise.enabled && duration > 0.0 {
            let sets = match cache.entry(duration.to_bits()) {
                std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
                std::collections::hash_map::Entry::Vacant(e) => e.insert([
                    decoherence_kraus(noise, QubitLabel::A, duration)?,
                    decoherence_kraus(noise, QubitLabel::B, duration)?,
                    decoherence_kraus(noise, QubitLabel::C, duration)?,
                ]),
            };
            for set in sets.iter() {
                rho = rho.evolved_kraus(set);
            }
        }
    }
    Ok(rho)
}

/// Classification of one readout voltage against the demarcation lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadoutClass {
    /// Below the lower line: counted as |000>.
    State000,
    /// Above the upper line: counted as |111>.
    State111,
    /// Between the lines: discarded.
    Discard,
}

/// Calibrated joint-readout model.
#[derive(Debug, Clone)]
pub struct ReadoutModel {
    /// Mean voltage per basis state, scaled so mean[0] = 0 and mean[7] = 1.
    pub mean_voltage: [f64; DIM],
    /// Gaussian noise width of a single voltage record.
    pub sigma: f64,
    /// Effective T1 exposure during the readout window (seconds).
    pub readout_decay: f64,
    /// Per-qubit probability of relaxing during readout.
    pub decay_prob: [f64; 3],
    /// Lower demarcation line.
    pub v_low: f64,
    /// Upper demarcation line.
    pub v_high: f64,
    /// Cavity frequency (Hz); informational.
    pub cavity_freq: f64,
    /// Cavity bandwidth (Hz); informational.
    pub cavity_kappa: f64,
}

impl ReadoutModel {
    /// Build a model from the device's dispersive shifts. Mean voltages are
    /// proportional to the summed chi of the excited qubits; demarcation
    /// lines sit at the midpoints between each extreme state's mean and its
    /// nearest middle-cluster neighbor (the equal-likelihood crossing of two
    /// equal-width Gaussians).
    pub fn from_device(device: &DeviceParams, sigma: f64, readout_decay: f64) -> Result<Self> {
        let total: f64 = device.chi.iter().sum();
        if total == 0.0 {
            return Err(Error::InvalidDevice(
                "all dispersive shifts are zero".into(),
            ));
        }
        let mut mean_voltage = [0.0; DIM];
        for j in BasisIndex::all() {
            let (a, b, c) = j.bits();
            let raw = f64::from(u8::from(a)) * device.chi[0]
                + f64::from(u8::from(b)) * device.chi[1]
                + f64::from(u8::from(c)) * device.chi[2];
            mean_voltage[j.index()] = raw / total;
        }
        let min_middle = mean_voltage[1..7].iter().cloned().fold(f64::MAX, f64::min);
        let max_middle = mean_voltage[1..7].iter().cloned().fold(f64::MIN, f64::max);
        let v_low = (mean_voltage[0] + min_middle) / 2.0;
        let v_high = (mean_voltage[7] + max_middle) / 2.0;
        let mut decay_prob = [0.0; 3];
        for q in QubitLabel::ALL {
            decay_prob[q.idx()] = 1.0 - (-readout_decay / device.t1[q.idx()]).exp();
        }
        Ok(Self {
            mean_voltage,
            sigma,
            readout_decay,
            decay_prob,
            v_low,
            v_high,
            cavity_freq: CAVITY_FREQ_HZ,
            cavity_kappa: CAVITY_KAPPA_HZ,
        })
    }

    /// Noiseless classifier: zero width, zero readout decay.
    pub fn ideal(device: &DeviceParams) -> Self {
        Self::from_device(device, 0.0, 0.0).expect("reference chi values are nonzero")
    }

    pub fn classify(&self, v: f64) -> ReadoutClass {
        if v < self.v_low {
            ReadoutClass::State000
        } else if v > self.v_high {
            ReadoutClass::State111
        } else {
            ReadoutClass::Discard
        }
    }

    /// (P[000], P[111], P[discard]) for a prepared basis state, enumerating
    /// the readout-decay branches exactly.
    pub fn class_probabilities(&self, j: BasisIndex) -> (f64, f64, f64) {
        let mut p_lo = 0.0;
        let mut p_hi = 0.0;
        for (prob, final_j) in self.decay_branches(j) {
            let mean = self.mean_voltage[final_j.index()];
            let (lo, hi) = if self.sigma > 0.0 {
                (
                    normal_cdf((self.v_low - mean) / self.sigma),
                    1.0 - normal_cdf((self.v_high - mean) / self.sigma),
                )
            } else {
                (
                    f64::from(u8::from(mean < self.v_low)),
                    f64::from(u8::from(mean > self.v_high)),
                )
            };
            p_lo += prob * lo;
            p_hi += prob * hi;
        }
        (p_lo, p_hi, (1.0 - p_lo - p_hi).max(0.0))
    }

    /// (probability, final state) over all readout-decay outcomes of `j`.
    fn decay_branches(&self, j: BasisIndex) -> Vec<(f64, BasisIndex)> {
        let excited: Vec<QubitLabel> = QubitLabel::ALL
            .into_iter()
            .filter(|q| j.index() & q.bit_weight() != 0)
            .collect();
        let mut out = Vec::with_capacity(1 << excited.len());
        for mask in 0..(1u8 << excited.len()) {
            let mut prob = 1.0;
            let mut final_j = j.index();
            for (k, q) in excited.iter().enumerate() {
                let d = self.decay_prob[q.idx()];
                if mask & (1 << k) != 0 {
                    prob *= d;
                    final_j &= !q.bit_weight();
                } else {
                    prob *= 1.0 - d;
                }
            }
            if prob > 0.0 {
                out.push((
                    prob,
                    BasisIndex::new(final_j).expect("masked index in range"),
                ));
            }
        }
        out
    }

    /// Analytic classification fidelities for prepared |000> and |111>.
    pub fn classification_fidelities(&self) -> (f64, f64) {
        let f000 = self
            .class_probabilities(BasisIndex::new(0).expect("0 < 8"))
            .0;
        let f111 = self
            .class_probabilities(BasisIndex::new(7).expect("7 < 8"))
            .1;
        (f000, f111)
    }
}

/// One simulated voltage record for a prepared basis state: excited qubits
/// may relax during the readout window, then the voltage is drawn from the
/// Gaussian centered on the final state's mean.
pub fn sample_voltage(basis: BasisIndex, model: &ReadoutModel, rng: &mut impl rand::Rng) -> f64 {
    let mut j = basis.index();
    for q in QubitLabel::ALL {
        if j & q.bit_weight() != 0 && rng.random::<f64>() < model.decay_prob[q.idx()] {
            j &= !q.bit_weight();
        }
    }
    model.mean_voltage[j] + model.sigma * sampling::standard_normal(rng)
}

/// Population estimate from the four-round protocol.
#[derive(Debug, Clone)]
pub struct PopulationEstimate {
    /// Renormalized populations.
    pub p: [f64; DIM],
    /// Per-round raw fractions: classified counts over that round's shots.
    pub raw: [f64; DIM],
    /// Fraction of shots falling between the demarcation lines, per round.
    pub discarded_fraction: [f64; 4],
    /// Shots spent in each round (0 in exact mode).
    pub shots_per_round: u64,
}

/// The swap pulses that bring round r's pair onto the readable extremes,
/// and the basis states those classifications report.
fn round_swaps(device: &DeviceParams, round: usize) -> (PulseSchedule, BasisIndex, BasisIndex) {
    let sched = |qubit| {
        let lo = compile_ccnot(device, Transition::new(qubit, false, false));
        let hi = compile_ccnot(device, Transition::new(qubit, true, true));
        lo.then(&hi)
    };
    let b = |j| BasisIndex::new(j).expect("round pair index in range");
    match round {
        0 => (PulseSchedule::new("round 1"), b(0), b(7)),
        1 => (sched(QubitLabel::C), b(1), b(6)),
        2 => (sched(QubitLabel::B), b(2), b(5)),
        3 => (sched(QubitLabel::A), b(4), b(3)),
        _ => unreachable!("four rounds"),
    }
}

/// Monte-Carlo four-round population measurement. Each round evolves the
/// state through its swap pulses (subject to noise), draws `shots`
/// voltages, classifies them against the demarcation lines and discards
/// everything between them. Raw per-round fractions are renormalized into
/// the final estimate.
pub fn measure_populations(
    state: &DensityMatrix,
    shots: u64,
    model: &ReadoutModel,
    noise: &NoiseModel,
    device: &DeviceParams,
    rng: &mut Stream,
) -> Result<PopulationEstimate> {
    if shots == 0 {
        return Err(Error::InvalidInput("shots must be >= 1".into()));
    }
    let mut raw = [0.0; DIM];
    let mut discarded = [0.0; 4];
    for (round, disc) in discarded.iter_mut().enumerate() {
        let (swaps, lo_state, hi_state) = round_swaps(device, round);
        let rho = evolve_schedule(state, &swaps, noise)?;
        let pops = rho.populations();
        let seed = sampling::derive_seed(rng);
        let batches = sampling::batch_sizes(shots);
        let counts: Vec<(u64, u64, u64)> = batches
            .par_iter()
            .enumerate()
            .map(|(i, &n)| {
                let mut brng = sampling::batch_stream(seed, i as u64);
                let mut lo = 0;
                let mut hi = 0;
                let mut disc = 0;
                for _ in 0..n {
                    let j = sampling::sample_index(&pops, &mut brng);
                    let v = sample_voltage(
                        BasisIndex::new(j).expect("population index"),
                        model,
                        &mut brng,
                    );
                    match model.classify(v) {
                        ReadoutClass::State000 => lo += 1,
                        ReadoutClass::State111 => hi += 1,
                        ReadoutClass::Discard => disc += 1,
                    }
                }
                (lo, hi, disc)
            })
            .collect();
        let (n_lo, n_hi, n_disc) = counts.iter().fold((0u64, 0u64, 0u64), |acc, c| {
            (acc.0 + c.0, acc.1 + c.1, acc.2 + c.2)
        });
        raw[lo_state.index()] = n_lo as f64 / shots as f64;
        raw[hi_state.index()] = n_hi as f64 / shots as f64;
        *disc = n_disc as f64 / shots as f64;
    }
    finish_estimate(raw, discarded, shots)
}

/// Deterministic infinite-shot limit of `measure_populations`: the
/// classification fractions are integrated in closed form.
pub fn measure_populations_exact(
    state: &DensityMatrix,
    model: &ReadoutModel,
    noise: &NoiseModel,
    device: &DeviceParams,
) -> Result<PopulationEstimate> {
    let mut raw = [0.0; DIM];
    let mut discarded = [0.0; 4];
    for (round, disc) in discarded.iter_mut().enumerate() {
        let (swaps, lo_state, hi_state) = round_swaps(device, round);
        let rho = evolve_schedule(state, &swaps, noise)?;
        let pops = rho.populations();
        let mut f_lo = 0.0;
        let mut f_hi = 0.0;
        let mut f_disc = 0.0;
        for j in BasisIndex::all() {
            let (lo, hi, disc) = model.class_probabilities(j);
            let w = pops[j.index()].max(0.0);
            f_lo += w * lo;
            f_hi += w * hi;
            f_disc += w * disc;
        }
        raw[lo_state.index()] = f_lo;
        raw[hi_state.index()] = f_hi;
        *disc = f_disc;
    }
    finish_estimate(raw, discarded, 0)
}

fn finish_estimate(raw: [f64; DIM], discarded: [f64; 4], shots: u64) -> Result<PopulationEstimate> {
    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidInput("every shot was discarded".into()));
    }
    let mut p = raw;
    for x in &mut p {
        *x /= total;
    }
    Ok(PopulationEstimate {
        p,
        raw,
        discarded_fraction: discarded,
        shots_per_round: shots,
    })
}

/// Fit (sigma, readout_decay) so the analytic classification fidelities
/// reproduce the targets; voltage means come from the dispersive shifts.
pub fn calibrate_readout(targets: (f64, f64), device: &DeviceParams) -> Result<ReadoutModel> {
    let (t000, t111) = targets;
    if !(0.0 < t000 && t000 <= 1.0 && 0.0 < t111 && t111 <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "targets must lie in (0, 1], got {targets:?}"
        )));
    }
    let objective = |x: &[f64]| -> f64 {
        let model = ReadoutModel::from_device(device, x[0].abs(), x[1].abs())
            .expect("chi validated before fitting");
        let (f000, f111) = model.classification_fidelities();
        (f000 - t000).powi(2) + (f111 - t111).powi(2)
    };
    let res = crate::optim::minimize(
        objective,
        &[0.08, 1.0e-6],
        &[0.02, 0.5e-6],
        &crate::optim::NmOptions {
            x_tol: vec![1e-8, 1e-13],
            max_iters: 10_000,
            restarts: 2,
        },
    );
    let model = ReadoutModel::from_device(device, res.x[0].abs(), res.x[1].abs())?;
    let (f000, f111) = model.classification_fidelities();
    if (f000 - t000).abs() > 5e-3 || (f111 - t111).abs() > 5e-3 {
        return Err(Error::NoConvergence(res.iterations));
    }
    Ok(model)
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

/// Error function, Abramowitz-Stegun 7.1.26 (|error| < 1.5e-7).
pub fn erf(x: f64) -> f64 {
    let sign = x.signum();
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    sign * (1.0 - poly * (-x * x).exp())
}

/// Binned voltage records, one series per prepared basis state.
#[derive(Debug, Clone)]
pub struct VoltageHistogram {
    pub bin_centers: Vec<f64>,
    /// counts[series][bin]
    pub counts: Vec<Vec<u64>>,
    pub prepared: Vec<BasisIndex>,
}

impl VoltageHistogram {
    /// CSV with columns (voltage_bin_center, count, prepared_state).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("voltage_bin_center,count,prepared_state\n");
        for (series, prepared) in self.prepared.iter().enumerate() {
            let (a, b, c) = prepared.bits();
            for (bin, center) in self.bin_centers.iter().enumerate() {
                out.push_str(&format!(
                    "{:.6},{},{}{}{}\n",
                    center,
                    self.counts[series][bin],
                    u8::from(a),
                    u8::from(b),
                    u8::from(c)
                ));
            }
        }
        out
    }
}

/// Draw `shots` voltages for each prepared basis state and bin them.
pub fn voltage_histogram(
    model: &ReadoutModel,
    prepared: &[BasisIndex],
    shots: u64,
    bins: usize,
    rng: &mut Stream,
) -> VoltageHistogram {
    let pad = 4.0 * model.sigma + 0.05;
    let lo = model.mean_voltage.iter().cloned().fold(f64::MAX, f64::min) - pad;
    let hi = model.mean_voltage.iter().cloned().fold(f64::MIN, f64::max) + pad;
    let width = (hi - lo) / bins as f64;
    let bin_centers: Vec<f64> = (0..bins).map(|i| lo + (i as f64 + 0.5) * width).collect();
    let mut counts = Vec::with_capacity(prepared.len());
    for &j in prepared {
        let seed = sampling::derive_seed(rng);
        let batches = sampling::batch_sizes(shots);
        let series: Vec<Vec<u64>> = batches
            .par_iter()
            .enumerate()
            .map(|(i, &n)| {
                let mut brng = sampling::batch_stream(seed, i as u64);
                let mut acc = vec![0u64; bins];
                for _ in 0..n {
                    let v = sample_voltage(j, model, &mut brng);
                    let bin = (((v - lo) / width).floor() as i64).clamp(0, bins as i64 - 1);
                    acc[bin as usize] += 1;
                }
                acc
            })
            .collect();
        let mut merged = vec![0u64; bins];
        for s in series {
            for (m, v) in merged.iter_mut().zip(s) {
                *m += v;
            }
        }
        counts.push(merged);
    }
    VoltageHistogram {
        bin_centers,
        counts,
        prepared: prepared.to_vec(),
    }
}
