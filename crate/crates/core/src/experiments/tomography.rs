//! 27-setting state tomography and maximum-likelihood reconstruction.
//!
//! Each qubit is measured along z directly, or along x/y after a pre-
//! rotation that maps the requested axis onto z: a -pi/2 rotation about y
//! for x, a +pi/2 rotation about x for y. All 3^3 = 27 axis combinations
//! together are informationally complete.
//!
//! Reconstruction parameterizes rho = T^dag T / Tr(T^dag T) with T lower
//! triangular (64 real parameters), which is positive semidefinite with
//! unit trace by construction, and maximizes the multinomial log-
//! likelihood of the recorded populations by projected gradient ascent
//! from a linear-inversion warm start.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::channels::{
    evolve_schedule, measure_populations, measure_populations_exact, NoiseModel, ReadoutModel,
};
use crate::device::{DeviceParams, QubitLabel};
use crate::error::{Error, Result};
use crate::gates::{compile_rotation, rotation_unitary, PulseSchedule};
use crate::sampling;
use crate::state::{hermitize, BasisIndex, DensityMatrix, Mat8, Operator, C64, DIM};

use std::f64::consts::FRAC_PI_2;

/// Measurement axis for one qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Z,
    X,
    Y,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::Z, Axis::X, Axis::Y];

    pub fn name(self) -> &'static str {
        match self {
            Axis::Z => "z",
            Axis::X => "x",
            Axis::Y => "y",
        }
    }

    /// (phi, theta) of the pre-rotation mapping this axis onto z.
    fn pre_rotation(self) -> Option<(f64, f64)> {
        match self {
            Axis::Z => None,
            Axis::X => Some((0.0, -FRAC_PI_2)), // -pi/2 about y
            Axis::Y => Some((-FRAC_PI_2, FRAC_PI_2)), // +pi/2 about x
        }
    }
}

/// Per-qubit axes of one tomography setting, in (A, B, C) order.
pub type SettingAxes = [Axis; 3];

/// All 27 settings in a fixed deterministic order.
pub fn all_settings() -> Vec<SettingAxes> {
    let mut out = Vec::with_capacity(27);
    for a in Axis::ALL {
        for b in Axis::ALL {
            for c in Axis::ALL {
                out.push([a, b, c]);
            }
        }
    }
    out
}

/// Compiled pre-rotation pulses for a setting (noisy when evolved).
pub fn pre_rotation_schedule(device: &DeviceParams, axes: &SettingAxes) -> PulseSchedule {
    let mut sched = PulseSchedule::new(format!(
        "pre-rotation {}{}{}",
        axes[0].name(),
        axes[1].name(),
        axes[2].name()
    ));
    for q in QubitLabel::ALL {
        if let Some((phi, theta)) = axes[q.idx()].pre_rotation() {
            sched = sched.then(&compile_rotation(device, q, phi, theta));
        }
    }
    sched
}

/// Ideal pre-rotation unitary used by the reconstruction model.
pub fn pre_rotation_unitary(axes: &SettingAxes) -> Operator {
    let mut u = Operator::identity();
    for q in QubitLabel::ALL {
        if let Some((phi, theta)) = axes[q.idx()].pre_rotation() {
            u = rotation_unitary(q, phi, theta).compose(&u);
        }
    }
    u
}

/// Measured populations for one setting.
#[derive(Debug, Clone)]
pub struct SettingRecord {
    pub axes: SettingAxes,
    pub populations: [f64; DIM],
    /// Shots behind the estimate; 0 means the exact infinite-shot limit.
    pub shots: u64,
}

/// A complete 27-setting tomography record.
#[derive(Debug, Clone)]
pub struct TomographyRecord {
    pub settings: Vec<SettingRecord>,
}

/// Run the tomography experiment on a preparation schedule. The prepared
/// state and the pre-rotation pulses evolve under `noise`. With a readout
/// model, measurement goes through the four-round demarcation protocol;
/// with `None` the diagonal is read directly (multinomial sampling, or the
/// exact populations when `shots = 0`).
pub fn acquire_tomography(
    prep: &PulseSchedule,
    device: &DeviceParams,
    noise: &NoiseModel,
    readout: Option<&ReadoutModel>,
    shots: u64,
    seed: u64,
) -> Result<TomographyRecord> {
    let rho = evolve_schedule(
        &DensityMatrix::pure(BasisIndex::new(0).expect("ground state")),
        prep,
        noise,
    )?;
    let settings = all_settings();
    let records: Result<Vec<SettingRecord>> = settings
        .par_iter()
        .enumerate()
        .map(|(i, axes)| {
            let rotated = evolve_schedule(&rho, &pre_rotation_schedule(device, axes), noise)?;
            let populations = match readout {
                Some(model) => {
                    if shots == 0 {
                        measure_populations_exact(&rotated, model, noise, device)?.p
                    } else {
                        let mut rng = sampling::batch_stream(seed, i as u64);
                        measure_populations(&rotated, shots, model, noise, device, &mut rng)?.p
                    }
                }
                None => {
                    if shots == 0 {
                        rotated.populations()
                    } else {
                        let mut rng = sampling::batch_stream(seed, i as u64);
                        let pops = rotated.populations();
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
            Ok(SettingRecord {
                axes: *axes,
                populations,
                shots,
            })
        })
        .collect();
    Ok(TomographyRecord { settings: records? })
}

/// Maximum-likelihood reconstruction output.
#[derive(Debug, Clone)]
pub struct MleReport {
    pub rho: DensityMatrix,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
}

const MLE_MAX_ITERS: usize = 2000;
const MLE_REL_TOL: f64 = 1e-12;

/// Reconstruct the most probable density matrix from a complete record.
pub fn mle_reconstruct(record: &TomographyRecord) -> Result<MleReport> {
    if record.settings.len() != 27 {
        return Err(Error::InvalidInput(format!(
            "tomography record has {} settings, expected 27",
            record.settings.len()
        )));
    }
    // measurement effects M_{s,j} = R_s^dag |j><j| R_s and their weights
    let mut effects: Vec<Mat8> = Vec::with_capacity(27 * DIM);
    let mut weights: Vec<f64> = Vec::with_capacity(27 * DIM);
    for s in &record.settings {
        let r = pre_rotation_unitary(&s.axes);
        let rm = r.matrix();
        for j in 0..DIM {
            // R^dag |j><j| R: outer product of the j-th row of R
            let row = rm.row(j);
            let mut m = Mat8::zeros();
            for a in 0..DIM {
                for b in 0..DIM {
                    m[(a, b)] = row[a].conj() * row[b];
                }
            }
            effects.push(m);
            let w = if s.shots == 0 { 1.0 } else { s.shots as f64 };
            weights.push(w * s.populations[j].max(0.0));
        }
    }

    let t0 = warm_start(record, &effects);
    Ok(ascend(t0, &effects, &weights))
}

/// Projected gradient ascent on the lower-triangular factor.
fn ascend(mut t: Mat8, effects: &[Mat8], weights: &[f64]) -> MleReport {
    let total_weight: f64 = weights.iter().sum();
    let mut ll = log_likelihood(&t, effects, weights);
    let mut step = 1e-3;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MLE_MAX_ITERS {
        iterations += 1;
        let grad = gradient(&t, effects, weights, total_weight);
        let mut accepted = false;
        for _ in 0..40 {
            let mut trial = t + grad * C64::new(step, 0.0);
            project_lower(&mut trial);
            let trial_ll = log_likelihood(&trial, effects, weights);
            if trial_ll > ll {
                let improvement = trial_ll - ll;
                t = trial;
                ll = trial_ll;
                step *= 1.25;
                accepted = true;
                if improvement < MLE_REL_TOL * ll.abs().max(1.0) {
                    converged = true;
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted || converged {
            converged = true;
            break;
        }
    }

    let rho = rho_from_t(&t);
    MleReport {
        rho: DensityMatrix::from_trusted(hermitize(&rho)),
        log_likelihood: ll,
        iterations,
        converged,
    }
}

fn rho_from_t(t: &Mat8) -> Mat8 {
    let g = t.adjoint() * t;
    let tau = g.trace().re;
    g * C64::new(1.0 / tau, 0.0)
}

fn log_likelihood(t: &Mat8, effects: &[Mat8], weights: &[f64]) -> f64 {
    let rho = rho_from_t(t);
    let mut ll = 0.0;
    for (m, &w) in effects.iter().zip(weights) {
        if w > 0.0 {
            let q = frobenius_inner(m, &rho).max(1e-15);
            ll += w * q.ln();
        }
    }
    ll
}

/// Wirtinger gradient of the log-likelihood with respect to T, restricted
/// to the lower triangle: 2 T (W - C/tau I) with W = sum (w_k/g_k) M_k.
fn gradient(t: &Mat8, effects: &[Mat8], weights: &[f64], total_weight: f64) -> Mat8 {
    let g = t.adjoint() * t;
    let tau = g.trace().re;
    let mut w_acc = Mat8::zeros();
    for (m, &w) in effects.iter().zip(weights) {
        if w > 0.0 {
            let gk = frobenius_inner(m, &g).max(1e-300);
            w_acc += m * C64::new(w / gk, 0.0);
        }
    }
    let mut grad = t * (w_acc - Mat8::identity() * C64::new(total_weight / tau, 0.0));
    grad *= C64::new(2.0, 0.0);
    project_lower(&mut grad);
    grad
}

/// Restrict to the parameterization's 64 real degrees of freedom: strictly
/// lower-triangular complex entries plus a real diagonal (diagonal phases
/// of T are pure gauge).
fn project_lower(m: &mut Mat8) {
    for r in 0..DIM {
        m[(r, r)] = C64::new(m[(r, r)].re, 0.0);
        for c in (r + 1)..DIM {
            m[(r, c)] = C64::new(0.0, 0.0);
        }
    }
}

/// Re(Tr(M X)) for Hermitian M, X.
fn frobenius_inner(m: &Mat8, x: &Mat8) -> f64 {
    (m * x).trace().re
}

/// Linear-inversion warm start: solve the (overdetermined) linear system
/// Tr(M_k rho) = q_k for Hermitian rho, project onto the PSD cone, and
/// factor the result.
fn warm_start(record: &TomographyRecord, effects: &[Mat8]) -> Mat8 {
    // real parameterization: 8 diagonal + 28 * (re, im) = 64 unknowns
    let n = DIM * DIM;
    let rows = effects.len() + 1;
    let pairs = param_index_pairs();
    let mut a = DMatrix::<f64>::zeros(rows, n);
    let mut b = DVector::<f64>::zeros(rows);
    for (k, m) in effects.iter().enumerate() {
        for (col, &(i, j)) in pairs.iter().enumerate() {
            // contribution of parameter `col` to Tr(M rho)
            a[(k, col)] = if i == j {
                m[(j, i)].re
            } else if col < DIM + 28 {
                // real part of rho_ij (and rho_ji)
                m[(j, i)].re + m[(i, j)].re
            } else {
                // imaginary part of rho_ij: rho_ij = .. + i v, rho_ji = -i v
                -m[(j, i)].im + m[(i, j)].im
            };
        }
        let s = &record.settings[k / DIM];
        b[k] = s.populations[k % DIM];
    }
    // unit-trace row, weighted to dominate
    let trace_row = effects.len();
    for col in 0..DIM {
        a[(trace_row, col)] = 10.0;
    }
    b[trace_row] = 10.0;

    let svd = a.svd(true, true);
    let v = svd.solve(&b, 1e-12).unwrap_or_else(|_| DVector::zeros(n));

    let mut rho = Mat8::zeros();
    for (col, &(i, j)) in pairs.iter().enumerate() {
        if i == j {
            rho[(i, i)] += C64::new(v[col], 0.0);
        } else if col < DIM + 28 {
            rho[(i, j)] += C64::new(v[col], 0.0);
            rho[(j, i)] += C64::new(v[col], 0.0);
        } else {
            rho[(i, j)] += C64::new(0.0, v[col]);
            rho[(j, i)] += C64::new(0.0, -v[col]);
        }
    }
    // PSD projection with a floor so the factorization exists
    let se = hermitize(&rho).symmetric_eigen();
    let mut clamped = Mat8::zeros();
    for i in 0..DIM {
        clamped[(i, i)] = C64::new(se.eigenvalues[i].max(1e-6), 0.0);
    }
    let rho_psd = se.eigenvectors * clamped * se.eigenvectors.adjoint();
    let trace = rho_psd.trace().re;
    lower_factor(&hermitize(&(rho_psd * C64::new(1.0 / trace, 0.0))))
}

/// Lower-triangular T with T^dag T = rho, for positive-definite rho.
///
/// The plain Cholesky gives rho = L L^dag, i.e. an upper-triangular factor
/// in this parameterization. Conjugating by the index-reversal permutation
/// turns it into the lower-triangular variant: with M = P rho P and
/// M = L L^dag, T = (P L P)^dag satisfies T^dag T = rho and is lower
/// triangular.
fn lower_factor(rho: &Mat8) -> Mat8 {
    let mut p = Mat8::zeros();
    for i in 0..DIM {
        p[(i, DIM - 1 - i)] = C64::new(1.0, 0.0);
    }
    let flipped = p * rho * p;
    match nalgebra::Cholesky::new(flipped) {
        Some(chol) => (p * chol.l() * p).adjoint(),
        None => Mat8::identity() * C64::new(1.0 / (DIM as f64).sqrt(), 0.0),
    }
}

/// Column order of the real parameterization: diagonals, then the real
/// parts of the strict upper triangle (row-major), then their imaginary
/// parts.
fn param_index_pairs() -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(DIM * DIM);
    for i in 0..DIM {
        pairs.push((i, i));
    }
    for i in 0..DIM {
        for j in (i + 1)..DIM {
            pairs.push((i, j));
        }
    }
    for i in 0..DIM {
        for j in (i + 1)..DIM {
            pairs.push((i, j));
        }
    }
    pairs
}
