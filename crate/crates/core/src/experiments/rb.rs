//! Standard and interleaved randomized benchmarking on one transition.
//!
//! Benchmarking is transition-selective: the Clifford group acts on the
//! two-level subspace a single line addresses, realized as at most two
//! native (phi, theta) pulses per element. Each element's action on the
//! Bloch sphere is a signed axis permutation, which gives an exact integer
//! representation for composition, inversion and recovery lookup.
//!
//! A sequence starts from |000>, raises the system into the transition's
//! lower state with up to two CCNOT pulses, runs the random Cliffords plus
//! the recovery pulse, undoes the initialization, and estimates the |000>
//! population as the sequence fidelity. Fitting A p^N + B over sequence
//! length N gives the decay rate p; the average gate fidelity is (1+p)/2,
//! and interleaving a target gate isolates its error through
//! r_G = (1 - p_G/p_ref)/2.

use std::collections::HashMap;
use std::sync::OnceLock;

use nalgebra::SMatrix;
use rayon::prelude::*;

use crate::channels::{evolve_schedule, sample_voltage, NoiseModel, ReadoutClass, ReadoutModel};
use crate::device::{DeviceParams, QubitLabel, Transition};
use crate::error::{Error, Result};
use crate::gates::{ccr_unitary, compile_ccnot, NativeGate, PulseSchedule};
use crate::sampling::{self, Stream};
use crate::state::{BasisIndex, DensityMatrix, KrausSet, Mat8, C64};

type Mat2 = SMatrix<C64, 2, 2>;

/// Signed axis permutation: the exact action of a Clifford on (x, y, z).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlochAction([[i8; 3]; 3]);

impl BlochAction {
    pub fn identity() -> Self {
        Self([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    }

    /// self applied after other.
    pub fn compose(&self, other: &BlochAction) -> BlochAction {
        let mut out = [[0i8; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                for k in 0..3 {
                    *cell += self.0[i][k] * other.0[k][j];
                }
            }
        }
        BlochAction(out)
    }

    pub fn inverse(&self) -> BlochAction {
        let mut out = [[0i8; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = self.0[j][i];
            }
        }
        BlochAction(out)
    }

    /// Extract the Bloch action of a 2x2 unitary if it is a signed
    /// permutation (i.e. the unitary is Clifford).
    fn from_unitary(u: &Mat2) -> Option<BlochAction> {
        let paulis = pauli_matrices();
        let mut out = [[0i8; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let r = 0.5 * (paulis[i] * u * paulis[j] * u.adjoint()).trace().re;
                let rounded = r.round();
                if (r - rounded).abs() > 1e-9 || !(-1.0..=1.0).contains(&rounded) {
                    return None;
                }
                out[i][j] = rounded as i8;
            }
        }
        let action = BlochAction(out);
        // orthogonality check in exact arithmetic
        let prod = action.compose(&action.inverse());
        (prod == BlochAction::identity()).then_some(action)
    }
}

fn pauli_matrices() -> [Mat2; 3] {
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    [
        Mat2::new(z, one, one, z),
        Mat2::new(z, -i, i, z),
        Mat2::new(one, z, z, -one),
    ]
}

fn rotation_2x2(phi: f64, theta: f64) -> Mat2 {
    let c = C64::new((theta / 2.0).cos(), 0.0);
    let s = (theta / 2.0).sin();
    let e_pos = C64::from_polar(1.0, phi);
    let e_neg = C64::from_polar(1.0, -phi);
    Mat2::new(c, -e_neg * s, e_pos * s, c)
}

/// One of the 24 subspace Cliffords with its native pulse realization.
#[derive(Debug, Clone)]
pub struct CliffordElement {
    pub index: usize,
    /// (phi, theta) pulses, applied in order; at most two.
    pub pulses: Vec<(f64, f64)>,
    pub bloch: BlochAction,
}

impl CliffordElement {
    /// The element's unitary on a transition's subspace.
    pub fn unitary_on(&self, t: Transition) -> crate::state::Operator {
        let mut u = Mat8::identity();
        for &(phi, theta) in &self.pulses {
            u = ccr_unitary(t, phi, theta).matrix() * u;
        }
        crate::state::Operator::new(u)
    }

    /// Pulse schedule realizing the element on a transition.
    pub fn schedule_on(&self, device: &DeviceParams, t: Transition) -> PulseSchedule {
        let gates = self
            .pulses
            .iter()
            .map(|&(phi, theta)| NativeGate::ccr(device, t, phi, theta))
            .collect();
        PulseSchedule::with_gates(format!("clifford {}", self.index), gates)
    }
}

struct CliffordTable {
    elements: Vec<CliffordElement>,
    by_action: HashMap<BlochAction, usize>,
}

static CLIFFORD_TABLE: OnceLock<CliffordTable> = OnceLock::new();

fn clifford_table() -> &'static CliffordTable {
    CLIFFORD_TABLE.get_or_init(build_clifford_table)
}

/// The 24 single-qubit Cliffords, found by closure search over sequences of
/// at most two native pulses with theta in {pi/2, -pi/2, pi} and phi on the
/// eighth-turn grid. Candidates are ranked by pulse count then total
/// rotation angle, so every element keeps its cheapest realization.
pub fn clifford_group() -> &'static [CliffordElement] {
    &clifford_table().elements
}

fn build_clifford_table() -> CliffordTable {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
    let mut primitives = Vec::new();
    for k in 0..8 {
        let phi = k as f64 * FRAC_PI_4 - PI; // cover [-pi, pi)
        for theta in [FRAC_PI_2, -FRAC_PI_2, PI] {
            primitives.push((phi, theta));
        }
    }
    let mut candidates: Vec<Vec<(f64, f64)>> = vec![vec![]];
    for &p in &primitives {
        candidates.push(vec![p]);
        for &q in &primitives {
            candidates.push(vec![p, q]);
        }
    }
    candidates.sort_by(|a, b| {
        let cost = |s: &Vec<(f64, f64)>| (s.len(), s.iter().map(|(_, t)| t.abs()).sum::<f64>());
        let (la, ca) = cost(a);
        let (lb, cb) = cost(b);
        la.cmp(&lb).then(ca.total_cmp(&cb))
    });

    let mut elements: Vec<CliffordElement> = Vec::new();
    let mut by_action: HashMap<BlochAction, usize> = HashMap::new();
    for pulses in candidates {
        let mut u = Mat2::identity();
        for &(phi, theta) in &pulses {
            u = rotation_2x2(phi, theta) * u;
        }
        if let Some(action) = BlochAction::from_unitary(&u) {
            if let std::collections::hash_map::Entry::Vacant(slot) = by_action.entry(action) {
                let index = elements.len();
                slot.insert(index);
                elements.push(CliffordElement {
                    index,
                    pulses,
                    bloch: action,
                });
            }
        }
    }
    assert_eq!(
        elements.len(),
        24,
        "single-qubit Clifford group has 24 elements"
    );
    CliffordTable {
        elements,
        by_action,
    }
}

/// Depolarizing channel of strength `d` on a transition's subspace: with
/// probability d the subspace Bloch vector is erased. Kraus weights are
/// sqrt(1 - 3d/4) on the identity and sqrt(d/4) on each embedded Pauli.
pub fn depolarizing_kraus(t: Transition, d: f64) -> Result<KrausSet> {
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::InvalidInput(format!(
            "depolarizing strength {d} outside [0, 1]"
        )));
    }
    let lo = t.lower().index();
    let hi = t.upper().index();
    let paulis = pauli_matrices();
    let mut ops = vec![Mat8::identity() * C64::new((1.0 - 0.75 * d).sqrt(), 0.0)];
    if d > 0.0 {
        for p in &paulis {
            let mut m = Mat8::identity();
            m[(lo, lo)] = p[(0, 0)];
            m[(lo, hi)] = p[(0, 1)];
            m[(hi, lo)] = p[(1, 0)];
            m[(hi, hi)] = p[(1, 1)];
            ops.push(m * C64::new((d / 4.0).sqrt(), 0.0));
        }
    }
    KrausSet::new_with(ops, 1e-12)
}

/// Error injection for self-consistency checks: a depolarizing kick after
/// every Clifford and, in interleaved runs, after every interleaved gate.
#[derive(Debug, Clone, Copy, Default)]
pub struct ErrorInjection {
    pub per_clifford: f64,
    pub per_interleaved: f64,
}

/// The gate interleaved between Cliffords, as a native (phi, theta) pulse
/// on the benchmarked transition. Must itself be Clifford.
#[derive(Debug, Clone, Copy)]
pub struct InterleavedGate {
    pub phi: f64,
    pub theta: f64,
}

impl InterleavedGate {
    /// The pi-pulse about x: the generalized Toffoli.
    pub fn toffoli() -> Self {
        Self {
            phi: -std::f64::consts::FRAC_PI_2,
            theta: std::f64::consts::PI,
        }
    }

    pub fn identity() -> Self {
        Self {
            phi: 0.0,
            theta: 0.0,
        }
    }
}

/// Randomized-benchmarking configuration.
#[derive(Debug, Clone)]
pub struct RbConfig {
    pub transition: Transition,
    /// Sequence lengths (number of Cliffords before recovery).
    pub lengths: Vec<u32>,
    pub sequences_per_length: u32,
    /// Shots per sequence-fidelity estimate; 0 reads the diagonal exactly
    /// (only meaningful without a readout model).
    pub shots: u64,
    pub interleaved: Option<InterleavedGate>,
    pub injection: ErrorInjection,
}

impl RbConfig {
    pub fn new(transition: Transition) -> Self {
        Self {
            transition,
            lengths: (1..=40).collect(),
            sequences_per_length: 10,
            shots: 30_000,
            interleaved: None,
            injection: ErrorInjection::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.lengths.contains(&0) {
            return Err(Error::InvalidInput(
                "sequence lengths must be positive".into(),
            ));
        }
        let mut distinct = self.lengths.clone();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() < 4 {
            return Err(Error::InvalidInput(format!(
                "the decay fit needs at least 4 distinct lengths, got {}",
                distinct.len()
            )));
        }
        if self.sequences_per_length == 0 {
            return Err(Error::InvalidInput(
                "sequences_per_length must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Mean sequence fidelity at one length.
#[derive(Debug, Clone, Copy)]
pub struct RbPoint {
    pub length: u32,
    pub mean: f64,
    pub stderr: f64,
}

/// Parameters of the fitted decay F = A p^N + B.
#[derive(Debug, Clone, Copy)]
pub struct DecayFit {
    pub a: f64,
    pub p: f64,
    pub b: f64,
    /// Set when the data was constant and p is unidentifiable.
    pub degenerate: bool,
}

/// Interleaved-run block of an RB result.
#[derive(Debug, Clone)]
pub struct InterleavedResult {
    pub points: Vec<RbPoint>,
    pub fit: DecayFit,
    /// Gate fidelity 1 - (1 - p_G/p_ref)/2.
    pub f_gate: f64,
}

/// Full RB result: the reference decay and, when configured, the
/// interleaved decay with the extracted gate fidelity.
#[derive(Debug, Clone)]
pub struct RbResult {
    pub transition: Transition,
    pub points: Vec<RbPoint>,
    pub fit: DecayFit,
    /// Average Clifford fidelity (1 + p)/2.
    pub f_avg: f64,
    pub interleaved: Option<InterleavedResult>,
}

/// Initialization pulses from |000> to the transition's lower state, raising
/// qubits in A, B, C order with the partner bits they see at that moment.
fn initialization_pulses(device: &DeviceParams, t: Transition) -> (PulseSchedule, PulseSchedule) {
    let lower = t.lower().index();
    let mut current = 0usize;
    let mut raises = Vec::new();
    for q in QubitLabel::ALL {
        if lower & q.bit_weight() != 0 {
            let (p1, p2) = q.partners();
            raises.push(Transition::new(
                q,
                current & p1.bit_weight() != 0,
                current & p2.bit_weight() != 0,
            ));
            current |= q.bit_weight();
        }
    }
    let mut init = PulseSchedule::new(format!("init {t}"));
    for tr in &raises {
        init = init.then(&compile_ccnot(device, *tr));
    }
    let mut uninit = PulseSchedule::new(format!("uninit {t}"));
    for tr in raises.iter().rev() {
        uninit = uninit.then(&compile_ccnot(device, *tr));
    }
    (init, uninit)
}

/// Run standard RB, and interleaved RB when configured. Deterministic for a
/// fixed rng state; sequences execute as independent seeded jobs merged in
/// job order.
pub fn run_rb(
    config: &RbConfig,
    device: &DeviceParams,
    noise: &NoiseModel,
    readout: Option<&ReadoutModel>,
    rng: &mut Stream,
) -> Result<RbResult> {
    config.validate()?;
    let reference_seed = sampling::derive_seed(rng);
    let (points, fit) = rb_pass(config, device, noise, readout, None, reference_seed)?;
    let f_avg = (1.0 + fit.p) / 2.0;

    let interleaved = match config.interleaved {
        None => None,
        Some(gate) => {
            let interleaved_seed = sampling::derive_seed(rng);
            let (ipoints, ifit) =
                rb_pass(config, device, noise, readout, Some(gate), interleaved_seed)?;
            let r_gate = (1.0 - ifit.p / fit.p) / 2.0;
            Some(InterleavedResult {
                points: ipoints,
                fit: ifit,
                f_gate: 1.0 - r_gate,
            })
        }
    };

    Ok(RbResult {
        transition: config.transition,
        points,
        fit,
        f_avg,
        interleaved,
    })
}

fn rb_pass(
    config: &RbConfig,
    device: &DeviceParams,
    noise: &NoiseModel,
    readout: Option<&ReadoutModel>,
    interleaved: Option<InterleavedGate>,
    seed: u64,
) -> Result<(Vec<RbPoint>, DecayFit)> {
    let table = clifford_table();
    let t = config.transition;
    let (init, uninit) = initialization_pulses(device, t);
    let cliff_scheds: Vec<PulseSchedule> = table
        .elements
        .iter()
        .map(|e| e.schedule_on(device, t))
        .collect();
    let cliff_depol = if config.injection.per_clifford > 0.0 {
        Some(depolarizing_kraus(t, config.injection.per_clifford)?)
    } else {
        None
    };
    let inter = match interleaved {
        None => None,
        Some(g) => {
            let u = rotation_2x2(g.phi, g.theta);
            let action = BlochAction::from_unitary(&u).ok_or_else(|| {
                Error::InvalidInput(format!(
                    "interleaved gate (phi={}, theta={}) is not Clifford",
                    g.phi, g.theta
                ))
            })?;
            let sched = PulseSchedule::with_gates(
                "interleaved".to_string(),
                vec![NativeGate::ccr(device, t, g.phi, g.theta)],
            );
            let depol = if config.injection.per_interleaved > 0.0 {
                Some(depolarizing_kraus(t, config.injection.per_interleaved)?)
            } else {
                None
            };
            Some((action, sched, depol))
        }
    };

    // independent job per (length, sequence)
    let jobs: Vec<(u32, u64)> = config
        .lengths
        .iter()
        .flat_map(|&n| (0..config.sequences_per_length).map(move |s| (n, s)))
        .enumerate()
        .map(|(i, (n, _))| (n, i as u64))
        .collect();

    let fidelities: Result<Vec<(u32, f64)>> = jobs
        .par_iter()
        .map(|&(length, job)| {
            let mut rng = sampling::batch_stream(seed, job);
            let fid = run_sequence(
                noise,
                readout,
                table,
                &init,
                &uninit,
                &cliff_scheds,
                cliff_depol.as_ref(),
                inter.as_ref(),
                length,
                config.shots,
                &mut rng,
            )?;
            Ok((length, fid))
        })
        .collect();
    let fidelities = fidelities?;

    let mut points = Vec::with_capacity(config.lengths.len());
    for &n in &config.lengths {
        let vals: Vec<f64> = fidelities
            .iter()
            .filter(|(l, _)| *l == n)
            .map(|(_, f)| *f)
            .collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var =
            vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len().max(2) - 1) as f64;
        points.push(RbPoint {
            length: n,
            mean,
            stderr: (var / vals.len() as f64).sqrt(),
        });
    }
    let fit = fit_decay(
        &points
            .iter()
            .map(|p| (p.length as f64, p.mean))
            .collect::<Vec<_>>(),
    )?;
    Ok((points, fit))
}

#[allow(clippy::too_many_arguments)]
fn run_sequence(
    noise: &NoiseModel,
    readout: Option<&ReadoutModel>,
    table: &CliffordTable,
    init: &PulseSchedule,
    uninit: &PulseSchedule,
    cliff_scheds: &[PulseSchedule],
    cliff_depol: Option<&KrausSet>,
    inter: Option<&(BlochAction, PulseSchedule, Option<KrausSet>)>,
    length: u32,
    shots: u64,
    rng: &mut Stream,
) -> Result<f64> {
    use rand::Rng;
    let mut rho = DensityMatrix::pure(BasisIndex::new(0).expect("ground state"));
    rho = evolve_schedule(&rho, init, noise)?;
    let mut net = BlochAction::identity();
    for _ in 0..length {
        let ci = rng.random_range(0..table.elements.len());
        rho = evolve_schedule(&rho, &cliff_scheds[ci], noise)?;
        if let Some(k) = cliff_depol {
            rho = rho.evolved_kraus(k);
        }
        net = table.elements[ci].bloch.compose(&net);
        if let Some((action, sched, depol)) = inter {
            rho = evolve_schedule(&rho, sched, noise)?;
            if let Some(k) = depol.as_ref() {
                rho = rho.evolved_kraus(k);
            }
            net = action.compose(&net);
        }
    }
    let recovery_idx = *table
        .by_action
        .get(&net.inverse())
        .expect("group closure guarantees the inverse exists");
    rho = evolve_schedule(&rho, &cliff_scheds[recovery_idx], noise)?;
    rho = evolve_schedule(&rho, uninit, noise)?;

    // sequence fidelity: population of |000>
    let pops = rho.populations();
    match readout {
        None => {
            if shots == 0 {
                Ok(pops[0].clamp(0.0, 1.0))
            } else {
                let mut hits = 0u64;
                for _ in 0..shots {
                    if sampling::sample_index(&pops, rng) == 0 {
                        hits += 1;
                    }
                }
                Ok(hits as f64 / shots as f64)
            }
        }
        Some(model) => {
            let shots = shots.max(1);
            let mut hits = 0u64;
            for _ in 0..shots {
                let j = sampling::sample_index(&pops, rng);
                let v = sample_voltage(BasisIndex::new(j).expect("population index"), model, rng);
                if model.classify(v) == ReadoutClass::State000 {
                    hits += 1;
                }
            }
            Ok(hits as f64 / shots as f64)
        }
    }
}

/// Least-squares fit of F = A p^N + B with 0 < p <= 1, A >= 0, B in [0,1].
///
/// For fixed p the model is linear in (A, B), so the fit scans p and
/// solves the 2x2 system in closed form, then refines the best bracket by
/// golden-section search. Deterministic and invariant under reordering of
/// the input points.
pub fn fit_decay(points: &[(f64, f64)]) -> Result<DecayFit> {
    // canonical point order makes the fit exactly reorder-invariant
    let mut points: Vec<(f64, f64)> = points.to_vec();
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let points = &points[..];
    let mut distinct: Vec<f64> = points.iter().map(|(n, _)| *n).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 4 {
        return Err(Error::InvalidInput(format!(
            "decay fit needs at least 4 distinct lengths, got {}",
            distinct.len()
        )));
    }
    let fmin = points.iter().map(|(_, f)| *f).fold(f64::MAX, f64::min);
    let fmax = points.iter().map(|(_, f)| *f).fold(f64::MIN, f64::max);
    if fmax - fmin < 1e-12 {
        // constant data: p is unidentifiable
        let mean = points.iter().map(|(_, f)| f).sum::<f64>() / points.len() as f64;
        return Ok(DecayFit {
            a: 0.0,
            p: 1.0,
            b: mean.clamp(0.0, 1.0),
            degenerate: true,
        });
    }

    let sse = |p: f64| solve_linear(points, p).1;
    // coarse scan, then golden-section refinement around the best cell
    let grid = 1000usize;
    let mut best_i = 0usize;
    let mut best = f64::MAX;
    for i in 0..=grid {
        let p = 1e-4 + (1.0 - 1e-4) * i as f64 / grid as f64;
        let v = sse(p);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let lo = 1e-4 + (1.0 - 1e-4) * best_i.saturating_sub(1) as f64 / grid as f64;
    let hi = 1e-4 + (1.0 - 1e-4) * (best_i + 1).min(grid) as f64 / grid as f64;
    let p = golden_section(sse, lo, hi, 1e-14);
    let (ab, _) = solve_linear(points, p);
    Ok(DecayFit {
        a: ab.0,
        p,
        b: ab.1,
        degenerate: false,
    })
}

/// Constrained linear solve for (A, B) at fixed p; returns ((A, B), SSE).
fn solve_linear(points: &[(f64, f64)], p: f64) -> ((f64, f64), f64) {
    let n = points.len() as f64;
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for &(len, f) in points {
        let x = p.powf(len);
        sx += x;
        sy += f;
        sxx += x * x;
        sxy += x * f;
    }
    let det = n * sxx - sx * sx;
    let (mut a, mut b) = if det.abs() < 1e-18 {
        (0.0, sy / n)
    } else {
        ((n * sxy - sx * sy) / det, (sy * sxx - sx * sxy) / det)
    };
    if a < 0.0 {
        a = 0.0;
        b = sy / n;
    }
    b = b.clamp(0.0, 1.0);
    let mut sse = 0.0;
    for &(len, f) in points {
        let r = a * p.powf(len) + b - f;
        sse += r * r;
    }
    ((a, b), sse)
}

fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while hi - lo > tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    let mid = 0.5 * (lo + hi);
    mid.clamp(1e-6, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::DIM;
    use approx::assert_abs_diff_eq;

    fn device() -> DeviceParams {
        DeviceParams::reference()
    }

    #[test]
    fn group_has_24_elements_with_cheap_realizations() {
        let group = clifford_group();
        assert_eq!(group.len(), 24);
        assert!(group.iter().all(|e| e.pulses.len() <= 2));
        // identity element realized with no pulses
        assert!(group.iter().any(|e| e.pulses.is_empty()));
    }

    #[test]
    fn group_is_closed_with_inverses() {
        let table = clifford_table();
        for a in &table.elements {
            assert!(
                table.by_action.contains_key(&a.bloch.inverse()),
                "missing inverse"
            );
            for b in &table.elements {
                let c = a.bloch.compose(&b.bloch);
                assert!(table.by_action.contains_key(&c), "not closed");
            }
        }
    }

    #[test]
    fn identity_composition_is_neutral() {
        let table = clifford_table();
        let id = BlochAction::identity();
        for e in &table.elements {
            assert_eq!(e.bloch.compose(&id), e.bloch);
            assert_eq!(id.compose(&e.bloch), e.bloch);
        }
    }

    #[test]
    fn elements_permute_the_cardinal_states() {
        // every column of the Bloch action has exactly one nonzero entry
        for e in clifford_group() {
            for j in 0..3 {
                let nonzero: i8 = (0..3).map(|i| e.bloch.0[i][j].abs()).sum();
                assert_eq!(nonzero, 1);
            }
        }
    }

    #[test]
    fn bloch_matches_unitary_action() {
        let t = Transition::parse("AB0C0").unwrap();
        let table = clifford_table();
        for e in &table.elements {
            let u = e.unitary_on(t);
            assert!(u.unitarity_deviation() < 1e-12);
            // recompute the action from the 2x2 block
            let m = u.matrix();
            let lo = t.lower().index();
            let hi = t.upper().index();
            let block = Mat2::new(m[(lo, lo)], m[(lo, hi)], m[(hi, lo)], m[(hi, hi)]);
            assert_eq!(BlochAction::from_unitary(&block), Some(e.bloch));
        }
    }

    #[test]
    fn depolarizing_channel_shrinks_the_subspace() {
        let t = Transition::parse("CA1B1").unwrap();
        let k = depolarizing_kraus(t, 0.5).unwrap();
        assert!(k.completeness_deviation() < 1e-12);
        // an equal superposition on the subspace loses half its coherence
        let mut amps = [C64::new(0.0, 0.0); DIM];
        amps[t.lower().index()] = C64::new(1.0 / 2f64.sqrt(), 0.0);
        amps[t.upper().index()] = C64::new(1.0 / 2f64.sqrt(), 0.0);
        let rho = crate::state::PureState::from_amplitudes(amps)
            .unwrap()
            .to_density();
        let out = rho.evolved_kraus(&k);
        let c = out.entry(t.lower(), t.upper());
        assert_abs_diff_eq!(c.re, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn initialization_follows_the_raise_order() {
        let dev = device();
        let t = Transition::parse("CA1B1").unwrap(); // lower state |110>
        let (init, uninit) = initialization_pulses(&dev, t);
        assert_eq!(init.pulse_count(), 2);
        let rho = DensityMatrix::pure(BasisIndex::new(0).unwrap());
        let up = evolve_schedule(&rho, &init, &NoiseModel::disabled()).unwrap();
        assert_abs_diff_eq!(up.populations()[6], 1.0, epsilon = 1e-12);
        let down = evolve_schedule(&up, &uninit, &NoiseModel::disabled()).unwrap();
        assert_abs_diff_eq!(down.populations()[0], 1.0, epsilon = 1e-12);
        // ground transition needs no initialization
        let (init, _) = initialization_pulses(&dev, Transition::parse("CA0B0").unwrap());
        assert_eq!(init.pulse_count(), 0);
    }

    #[test]
    fn noiseless_sequences_return_home() {
        let dev = device();
        let noise = NoiseModel::disabled();
        let mut rng = sampling::stream_from_seed(123);
        for t in Transition::all() {
            let mut config = RbConfig::new(t);
            config.lengths = vec![1, 5, 13, 40];
            config.sequences_per_length = 4;
            config.shots = 0; // exact diagonal read
            let result = run_rb(&config, &dev, &noise, None, &mut rng).unwrap();
            for pt in &result.points {
                assert!(pt.mean > 1.0 - 1e-10, "{t}: mean {}", pt.mean);
            }
            assert_abs_diff_eq!(result.f_avg, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn injected_depolarizing_error_sets_the_decay() {
        let dev = device();
        let noise = NoiseModel::disabled();
        let d = 0.02;
        let mut config = RbConfig::new(Transition::parse("AB0C0").unwrap());
        config.lengths = (1..=40).collect();
        config.sequences_per_length = 10;
        config.shots = 0; // exact estimator isolates the fit itself
        config.injection = ErrorInjection {
            per_clifford: d,
            per_interleaved: 0.0,
        };
        let mut rng = sampling::stream_from_seed(7);
        let result = run_rb(&config, &dev, &noise, None, &mut rng).unwrap();
        assert_abs_diff_eq!(result.fit.p, 1.0 - d, epsilon = 1e-3);
        assert_abs_diff_eq!(result.f_avg, 1.0 - d / 2.0, epsilon = 1e-3);
    }

    #[test]
    fn interleaving_the_identity_reproduces_the_reference_decay() {
        let dev = device();
        let noise = NoiseModel::disabled();
        let mut config = RbConfig::new(Transition::parse("BC0A1").unwrap());
        config.lengths = (1..=30).step_by(3).collect();
        config.sequences_per_length = 8;
        config.shots = 30_000;
        config.injection = ErrorInjection {
            per_clifford: 0.012,
            per_interleaved: 0.0,
        };
        config.interleaved = Some(InterleavedGate::identity());
        let mut rng = sampling::stream_from_seed(21);
        let result = run_rb(&config, &dev, &noise, None, &mut rng).unwrap();
        let inter = result.interleaved.unwrap();
        assert_abs_diff_eq!(inter.fit.p, result.fit.p, epsilon = 5e-3);
        assert_abs_diff_eq!(inter.f_gate, 1.0, epsilon = 5e-3);
    }

    #[test]
    fn fit_recovers_synthetic_decay_parameters() {
        let points: Vec<(f64, f64)> = (1..=40)
            .map(|n| (n as f64, 0.5 * 0.99f64.powi(n) + 0.5))
            .collect();
        let fit = fit_decay(&points).unwrap();
        assert_abs_diff_eq!(fit.p, 0.99, epsilon = 1e-6);
        assert_abs_diff_eq!(fit.a, 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(fit.b, 0.5, epsilon = 1e-6);
    }

    #[test]
    fn fit_is_order_invariant() {
        let mut points: Vec<(f64, f64)> = (1..=20)
            .map(|n| (n as f64, 0.4 * 0.97f64.powi(n) + 0.55))
            .collect();
        let a = fit_decay(&points).unwrap();
        points.reverse();
        points.swap(3, 11);
        let b = fit_decay(&points).unwrap();
        assert_eq!(a.p, b.p);
        assert_eq!(a.a, b.a);
    }

    #[test]
    fn constant_data_is_degenerate() {
        let points: Vec<(f64, f64)> = (1..=10).map(|n| (n as f64, 1.0)).collect();
        let fit = fit_decay(&points).unwrap();
        assert!(fit.degenerate);
        assert_eq!(fit.p, 1.0);
        assert_eq!(fit.b, 1.0);
        assert_abs_diff_eq!((1.0 + fit.p) / 2.0, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn fit_needs_four_distinct_lengths() {
        let points = vec![(1.0, 0.9), (2.0, 0.8), (3.0, 0.7)];
        assert!(fit_decay(&points).is_err());
        let mut config = RbConfig::new(Transition::parse("AB0C0").unwrap());
        config.lengths = vec![1, 2, 3];
        let mut rng = sampling::stream_from_seed(0);
        assert!(run_rb(&config, &device(), &NoiseModel::disabled(), None, &mut rng).is_err());
    }

    #[test]
    fn interleaved_formula_arithmetic() {
        // r_G = (1 - p_G/p_ref)/2 with the tabulated example values
        let p_ref = 0.988;
        let p_g = 0.986;
        let r_g = (1.0 - p_g / p_ref) / 2.0;
        assert_abs_diff_eq!(r_g, 1.01e-3, epsilon = 5e-6);
        assert_abs_diff_eq!(1.0 - r_g, 0.999, epsilon = 5e-5);
    }
}
