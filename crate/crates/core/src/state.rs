//! States and operators on the 8-dimensional computational space.
//!
//! The three qubits A, B, C span an 8-dimensional Hilbert space with basis
//! states |n_A n_B n_C> indexed by j = 4*n_A + 2*n_B + n_C (qubit A is the
//! most significant bit). Everything downstream (gates, noise channels,
//! measurement models) works on dense 8x8 complex matrices defined here.

use nalgebra::{SMatrix, SVector};
use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type Mat8 = SMatrix<C64, 8, 8>;
pub type Vec8 = SVector<C64, 8>;

pub const DIM: usize = 8;

/// Numerical tolerances used by the validating constructors.
///
/// The defaults are the contract values; pass a custom instance to the
/// `*_with` constructors to override them.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Max allowed |m_ij - conj(m_ji)| for Hermiticity checks.
    pub hermiticity: f64,
    /// Max allowed |Tr(rho) - 1|.
    pub trace: f64,
    /// Eigenvalues of a density matrix may be negative down to -psd.
    pub psd: f64,
    /// Max allowed deviation of U^dag U from the identity.
    pub unitarity: f64,
    /// Max allowed deviation of sum K^dag K from the identity.
    pub kraus: f64,
    /// Max allowed |1 - sum |amp|^2| for pure states.
    pub norm: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermiticity: 1e-12,
            trace: 1e-12,
            psd: 1e-10,
            unitarity: 1e-10,
            kraus: 1e-10,
            norm: 1e-12,
        }
    }
}

/// Index of a computational basis state, j = 4*n_A + 2*n_B + n_C.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisIndex(u8);

impl BasisIndex {
    pub fn new(j: usize) -> Result<Self> {
        if j < DIM {
            Ok(Self(j as u8))
        } else {
            Err(Error::BasisIndexOutOfRange(j))
        }
    }

    /// Encode an occupation triple; qubit A is the most significant bit.
    pub fn from_bits(n_a: bool, n_b: bool, n_c: bool) -> Self {
        Self((u8::from(n_a) << 2) | (u8::from(n_b) << 1) | u8::from(n_c))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Decode back to the occupation triple (n_A, n_B, n_C).
    pub fn bits(self) -> (bool, bool, bool) {
        (self.0 & 4 != 0, self.0 & 2 != 0, self.0 & 1 != 0)
    }

    /// All eight basis indices in increasing order.
    pub fn all() -> impl Iterator<Item = BasisIndex> {
        (0..DIM as u8).map(BasisIndex)
    }

    /// Number of excited qubits in this basis state.
    pub fn excitations(self) -> u32 {
        self.0.count_ones()
    }

    /// Index with the roles of A and C exchanged (software bit reversal).
    pub fn bit_reversed(self) -> Self {
        let (a, b, c) = self.bits();
        Self::from_bits(c, b, a)
    }
}

impl std::fmt::Display for BasisIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (a, b, c) = self.bits();
        write!(f, "|{}{}{}>", u8::from(a), u8::from(b), u8::from(c))
    }
}

/// A normalized state vector over the eight basis states.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: Vec8,
}

impl PureState {
    /// The computational basis state |j>.
    pub fn basis(j: BasisIndex) -> Self {
        let mut amps = Vec8::zeros();
        amps[j.index()] = C64::new(1.0, 0.0);
        Self { amps }
    }

    pub fn from_amplitudes(amps: [C64; DIM]) -> Result<Self> {
        Self::from_amplitudes_with(amps, &Tolerances::default())
    }

    pub fn from_amplitudes_with(amps: [C64; DIM], tol: &Tolerances) -> Result<Self> {
        let v = Vec8::from_iterator(amps);
        let n2: f64 = v.iter().map(|c| c.norm_sqr()).sum();
        if (n2 - 1.0).abs() > tol.norm {
            return Err(Error::NotNormalized(n2));
        }
        Ok(Self { amps: v })
    }

    /// Normalize an arbitrary non-zero amplitude vector.
    pub fn normalized(amps: [C64; DIM]) -> Result<Self> {
        let v = Vec8::from_iterator(amps);
        let n2: f64 = v.iter().map(|c| c.norm_sqr()).sum();
        if n2 <= 0.0 {
            return Err(Error::NotNormalized(n2));
        }
        Ok(Self {
            amps: v / C64::new(n2.sqrt(), 0.0),
        })
    }

    /// Extract the pure state from a density matrix; fails if the state is
    /// mixed (largest eigenvalue below 1 - 1e-9).
    pub fn from_density(rho: &DensityMatrix) -> Result<Self> {
        let se = rho.matrix().symmetric_eigen();
        let (imax, lmax) = se
            .eigenvalues
            .iter()
            .enumerate()
            .fold(
                (0, f64::MIN),
                |acc, (i, &l)| if l > acc.1 { (i, l) } else { acc },
            );
        if lmax < 1.0 - 1e-9 {
            return Err(Error::NotPure(lmax));
        }
        let col = se.eigenvectors.column(imax);
        let mut amps = [C64::new(0.0, 0.0); DIM];
        for (i, a) in amps.iter_mut().enumerate() {
            *a = col[i];
        }
        Self::from_amplitudes_with(
            amps,
            &Tolerances {
                norm: 1e-9,
                ..Tolerances::default()
            },
        )
    }

    pub fn amplitudes(&self) -> &Vec8 {
        &self.amps
    }

    pub fn amplitude(&self, j: BasisIndex) -> C64 {
        self.amps[j.index()]
    }

    /// <self|other>
    pub fn overlap(&self, other: &PureState) -> C64 {
        self.amps.dotc(&other.amps)
    }

    /// |<self|other>|^2
    pub fn overlap_sqr(&self, other: &PureState) -> f64 {
        self.overlap(other).norm_sqr()
    }

    pub fn apply(&self, op: &Operator) -> PureState {
        PureState {
            amps: op.matrix() * self.amps,
        }
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            m: self.amps * self.amps.adjoint(),
        }
    }
}

/// An 8x8 density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: Mat8,
}

impl DensityMatrix {
    /// Validating constructor.
    pub fn new(m: Mat8) -> Result<Self> {
        Self::new_with(m, &Tolerances::default())
    }

    pub fn new_with(m: Mat8, tol: &Tolerances) -> Result<Self> {
        let h = hermiticity_deviation(&m);
        if h > tol.hermiticity {
            return Err(Error::NotHermitian(h));
        }
        let tr = trace_re(&m);
        if (tr - 1.0).abs() > tol.trace {
            return Err(Error::TraceNotOne(tr));
        }
        let se = m.symmetric_eigen();
        if let Some(&l) = se.eigenvalues.iter().find(|&&l| l < -tol.psd) {
            return Err(Error::NegativeEigenvalue(l));
        }
        Ok(Self { m })
    }

    /// Constructor for matrices produced by trusted internal paths
    /// (unitary conjugation, Kraus maps, MLE output).
    pub(crate) fn from_trusted(m: Mat8) -> Self {
        Self { m }
    }

    pub fn pure(j: BasisIndex) -> Self {
        PureState::basis(j).to_density()
    }

    pub fn maximally_mixed() -> Self {
        Self {
            m: Mat8::identity() * C64::new(1.0 / DIM as f64, 0.0),
        }
    }

    pub fn matrix(&self) -> &Mat8 {
        &self.m
    }

    pub fn entry(&self, row: BasisIndex, col: BasisIndex) -> C64 {
        self.m[(row.index(), col.index())]
    }

    /// Diagonal in the measurement basis; sums to the trace.
    pub fn populations(&self) -> [f64; DIM] {
        let mut p = [0.0; DIM];
        for (i, pi) in p.iter_mut().enumerate() {
            *pi = self.m[(i, i)].re;
        }
        p
    }

    pub fn trace(&self) -> f64 {
        trace_re(&self.m)
    }

    /// Tr(rho^2); 1 for pure states.
    pub fn purity(&self) -> f64 {
        (self.m * self.m).trace().re
    }

    /// U rho U^dag.
    pub fn evolved(&self, u: &Operator) -> DensityMatrix {
        let m = u.matrix() * self.m * u.matrix().adjoint();
        DensityMatrix::from_trusted(hermitize(&m))
    }

    /// sum_k K_k rho K_k^dag.
    pub fn evolved_kraus(&self, k: &KrausSet) -> DensityMatrix {
        let mut out = Mat8::zeros();
        for op in &k.ops {
            out += op * self.m * op.adjoint();
        }
        DensityMatrix::from_trusted(hermitize(&out))
    }

    /// Fidelity of `self` against a pure target: sqrt(<psi|rho|psi>).
    pub fn fidelity_to_pure(&self, psi: &PureState) -> f64 {
        let v = psi.amplitudes();
        let q = (v.adjoint() * self.m * v)[(0, 0)].re;
        q.max(0.0).sqrt().min(1.0)
    }
}

/// An 8x8 operator; `unitary` validates the flag on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    m: Mat8,
}

impl Operator {
    pub fn new(m: Mat8) -> Self {
        Self { m }
    }

    pub fn unitary(m: Mat8) -> Result<Self> {
        Self::unitary_with(m, &Tolerances::default())
    }

    pub fn unitary_with(m: Mat8, tol: &Tolerances) -> Result<Self> {
        let dev = unitarity_deviation(&m);
        if dev > tol.unitarity {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Self { m })
    }

    pub fn identity() -> Self {
        Self {
            m: Mat8::identity(),
        }
    }

    pub fn matrix(&self) -> &Mat8 {
        &self.m
    }

    pub fn adjoint(&self) -> Operator {
        Operator {
            m: self.m.adjoint(),
        }
    }

    /// self * other (other acts first).
    pub fn compose(&self, other: &Operator) -> Operator {
        Operator {
            m: self.m * other.m,
        }
    }

    pub fn unitarity_deviation(&self) -> f64 {
        unitarity_deviation(&self.m)
    }
}

/// A set of Kraus operators forming a trace-preserving channel.
#[derive(Debug, Clone)]
pub struct KrausSet {
    ops: Vec<Mat8>,
}

impl KrausSet {
    pub fn new(ops: Vec<Mat8>) -> Result<Self> {
        Self::new_with(ops, Tolerances::default().kraus)
    }

    pub fn new_with(ops: Vec<Mat8>, tol: f64) -> Result<Self> {
        let dev = completeness_deviation(&ops);
        if dev > tol {
            return Err(Error::KrausIncomplete(dev));
        }
        Ok(Self { ops })
    }

    pub fn identity() -> Self {
        Self {
            ops: vec![Mat8::identity()],
        }
    }

    pub fn operators(&self) -> &[Mat8] {
        &self.ops
    }

    /// Channel composition: `self` applied after `other`.
    pub fn after(&self, other: &KrausSet) -> KrausSet {
        let mut ops = Vec::with_capacity(self.ops.len() * other.ops.len());
        for a in &self.ops {
            for b in &other.ops {
                ops.push(a * b);
            }
        }
        KrausSet { ops }
    }

    pub fn completeness_deviation(&self) -> f64 {
        completeness_deviation(&self.ops)
    }
}

/// Either side of the evolve operation: a unitary or a Kraus channel.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Evolution {
    Unitary(Operator),
    Channel(KrausSet),
}

/// Apply a unitary or channel to a state, validating the preconditions.
pub fn evolve(state: &DensityMatrix, evolution: &Evolution) -> Result<DensityMatrix> {
    let tol = Tolerances::default();
    match evolution {
        Evolution::Unitary(u) => {
            let dev = u.unitarity_deviation();
            if dev > tol.unitarity {
                return Err(Error::NotUnitary(dev));
            }
            Ok(state.evolved(u))
        }
        Evolution::Channel(k) => {
            let dev = k.completeness_deviation();
            if dev > tol.kraus {
                return Err(Error::KrausIncomplete(dev));
            }
            Ok(state.evolved_kraus(k))
        }
    }
}

/// Uhlmann fidelity Tr sqrt(sqrt(rho) sigma sqrt(rho)), clamped to [0, 1].
///
/// Square roots are taken by Hermitian eigendecomposition with eigenvalues
/// clamped at zero; eigenvalues below -1e-10 are an error since they signal
/// an invalid state rather than roundoff at the PSD boundary. The trace
/// norm is evaluated as the singular-value sum of sqrt(rho) sqrt(sigma),
/// which is the same quantity and keeps the result symmetric to roundoff.
pub fn uhlmann_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    let tol = Tolerances::default();
    let sqrt_rho = hermitian_sqrt(rho.matrix(), tol.psd)?;
    let sqrt_sigma = hermitian_sqrt(sigma.matrix(), tol.psd)?;
    let svd = (sqrt_rho * sqrt_sigma).svd(false, false);
    let f: f64 = svd.singular_values.iter().sum();
    Ok(f.clamp(0.0, 1.0))
}

/// Hermitian square root with eigenvalue clamping at zero.
pub(crate) fn hermitian_sqrt(m: &Mat8, psd_tol: f64) -> Result<Mat8> {
    let se = hermitize(m).symmetric_eigen();
    if let Some(&l) = se.eigenvalues.iter().find(|&&l| l < -psd_tol) {
        return Err(Error::NegativeEigenvalue(l));
    }
    let mut d = Mat8::zeros();
    for i in 0..DIM {
        d[(i, i)] = C64::new(se.eigenvalues[i].max(0.0).sqrt(), 0.0);
    }
    let v = &se.eigenvectors;
    Ok(v * d * v.adjoint())
}

/// (m + m^dag)/2, used to keep accumulated roundoff off the Hermitian axis.
pub fn hermitize(m: &Mat8) -> Mat8 {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

pub(crate) fn trace_re(m: &Mat8) -> f64 {
    m.trace().re
}

pub(crate) fn hermiticity_deviation(m: &Mat8) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..DIM {
        for j in 0..DIM {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

pub(crate) fn unitarity_deviation(m: &Mat8) -> f64 {
    let prod = m.adjoint() * m;
    max_abs_diff(&prod, &Mat8::identity())
}

fn completeness_deviation(ops: &[Mat8]) -> f64 {
    let mut sum = Mat8::zeros();
    for k in ops {
        sum += k.adjoint() * k;
    }
    max_abs_diff(&sum, &Mat8::identity())
}

pub fn max_abs_diff(a: &Mat8, b: &Mat8) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn basis_index_encoding() {
        assert_eq!(BasisIndex::from_bits(false, false, false).index(), 0);
        assert_eq!(BasisIndex::from_bits(true, true, true).index(), 7);
        assert_eq!(BasisIndex::from_bits(true, false, true).index(), 5);
    }

    #[test]
    fn basis_index_round_trip() {
        for j in BasisIndex::all() {
            let (a, b, c) = j.bits();
            assert_eq!(BasisIndex::from_bits(a, b, c), j);
        }
    }

    #[test]
    fn basis_index_rejects_out_of_range() {
        assert!(BasisIndex::new(8).is_err());
        assert!(BasisIndex::new(7).is_ok());
    }

    #[test]
    fn pure_state_norm_enforced() {
        let mut amps = [c(0.0, 0.0); 8];
        amps[0] = c(0.7, 0.0);
        assert!(PureState::from_amplitudes(amps).is_err());
        amps[0] = c(1.0, 0.0);
        assert!(PureState::from_amplitudes(amps).is_ok());
    }

    #[test]
    fn populations_of_basis_state() {
        let rho = DensityMatrix::pure(BasisIndex::new(0).unwrap());
        let p = rho.populations();
        assert_eq!(p[0], 1.0);
        assert!(p[1..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn populations_of_maximally_mixed() {
        let p = DensityMatrix::maximally_mixed().populations();
        for x in p {
            assert_abs_diff_eq!(x, 0.125, epsilon = 1e-15);
        }
    }

    #[test]
    fn populations_of_ghz() {
        // (|000> + i|111>)/sqrt(2)
        let mut amps = [c(0.0, 0.0); 8];
        amps[0] = c(1.0 / 2f64.sqrt(), 0.0);
        amps[7] = c(0.0, 1.0 / 2f64.sqrt());
        let rho = PureState::from_amplitudes(amps).unwrap().to_density();
        let p = rho.populations();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p[7], 0.5, epsilon = 1e-12);
        let sum: f64 = p.iter().sum();
        assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn evolve_identity_is_noop() {
        let rho = DensityMatrix::pure(BasisIndex::new(3).unwrap());
        let out = evolve(&rho, &Evolution::Unitary(Operator::identity())).unwrap();
        assert_eq!(out.populations(), rho.populations());
    }

    #[test]
    fn evolve_permutation_preserves_trace() {
        // X on the full space: j -> 7 - j
        let mut m = Mat8::zeros();
        for j in 0..8 {
            m[(7 - j, j)] = c(1.0, 0.0);
        }
        let u = Operator::unitary(m).unwrap();
        let rho = DensityMatrix::pure(BasisIndex::new(0).unwrap());
        let out = rho.evolved(&u);
        assert_abs_diff_eq!(out.trace(), 1.0, epsilon = 1e-12);
        assert_eq!(out.populations()[7], 1.0);
    }

    #[test]
    fn evolve_full_amplitude_damping() {
        // p = 1 amplitude damping on qubit A maps |100><100| to |000><000|.
        let mut k0 = Mat8::zeros();
        let mut k1 = Mat8::zeros();
        for j in 0..8usize {
            if j & 4 == 0 {
                k0[(j, j)] = c(1.0, 0.0); // ground rows survive
                k1[(j, j | 4)] = c(1.0, 0.0); // excited rows decay
            }
        }
        let ks = KrausSet::new(vec![k0, k1]).unwrap();
        let rho = DensityMatrix::pure(BasisIndex::new(4).unwrap());
        let out = rho.evolved_kraus(&ks);
        assert_abs_diff_eq!(out.populations()[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn evolve_rejects_incomplete_kraus() {
        let k = Mat8::identity() * c(0.5, 0.0);
        assert!(KrausSet::new(vec![k]).is_err());
    }

    #[test]
    fn uhlmann_identical_states() {
        let mut amps = [c(0.0, 0.0); 8];
        amps[0] = c(0.6, 0.0);
        amps[5] = c(0.0, 0.8);
        let rho = PureState::from_amplitudes(amps).unwrap().to_density();
        let f = uhlmann_fidelity(&rho, &rho).unwrap();
        assert_abs_diff_eq!(f, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn uhlmann_orthogonal_states() {
        let a = DensityMatrix::pure(BasisIndex::new(0).unwrap());
        let b = DensityMatrix::pure(BasisIndex::new(7).unwrap());
        let f = uhlmann_fidelity(&a, &b).unwrap();
        assert_abs_diff_eq!(f, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn uhlmann_mixed_vs_ghz() {
        // F(I/8, pure) = sqrt(1/8)
        let mut amps = [c(0.0, 0.0); 8];
        amps[0] = c(1.0 / 2f64.sqrt(), 0.0);
        amps[7] = c(0.0, 1.0 / 2f64.sqrt());
        let ghz = PureState::from_amplitudes(amps).unwrap().to_density();
        let f = uhlmann_fidelity(&DensityMatrix::maximally_mixed(), &ghz).unwrap();
        assert_abs_diff_eq!(f, 0.125f64.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn fidelity_to_pure_matches_uhlmann() {
        let mut amps = [c(0.0, 0.0); 8];
        amps[0] = c(1.0 / 2f64.sqrt(), 0.0);
        amps[7] = c(0.0, 1.0 / 2f64.sqrt());
        let psi = PureState::from_amplitudes(amps).unwrap();
        let mixed = DensityMatrix::maximally_mixed();
        let f1 = mixed.fidelity_to_pure(&psi);
        let f2 = uhlmann_fidelity(&mixed, &psi.to_density()).unwrap();
        assert_abs_diff_eq!(f1, f2, epsilon = 1e-9);
    }

    #[test]
    fn from_density_rejects_mixed() {
        assert!(PureState::from_density(&DensityMatrix::maximally_mixed()).is_err());
        let pure = DensityMatrix::pure(BasisIndex::new(2).unwrap());
        let psi = PureState::from_density(&pure).unwrap();
        assert_abs_diff_eq!(
            psi.amplitude(BasisIndex::new(2).unwrap()).norm(),
            1.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn density_matrix_validation() {
        let mut m = Mat8::zeros();
        m[(0, 0)] = c(0.5, 0.0);
        m[(7, 7)] = c(0.5, 0.0);
        m[(0, 7)] = c(0.0, 0.5);
        m[(7, 0)] = c(0.0, -0.5);
        assert!(DensityMatrix::new(m).is_ok());
        // break Hermiticity
        let mut bad = m;
        bad[(0, 7)] = c(0.4, 0.5);
        assert!(matches!(
            DensityMatrix::new(bad),
            Err(Error::NotHermitian(_))
        ));
        // break trace
        let mut bad = m;
        bad[(0, 0)] = c(0.6, 0.0);
        assert!(matches!(
            DensityMatrix::new(bad),
            Err(Error::TraceNotOne(_))
        ));
        // break positivity
        let mut bad = m;
        bad[(0, 7)] = c(0.0, 0.7);
        bad[(7, 0)] = c(0.0, -0.7);
        assert!(matches!(
            DensityMatrix::new(bad),
            Err(Error::NegativeEigenvalue(_))
        ));
    }
}
