use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("basis index {0} out of range 0..8")]
    BasisIndexOutOfRange(usize),
    #[error("state vector is not normalized: |psi|^2 = {0}")]
    NotNormalized(f64),
    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("trace is {0}, expected 1")]
    TraceNotOne(f64),
    #[error("matrix has negative eigenvalue {0:.3e} beyond tolerance")]
    NegativeEigenvalue(f64),
    #[error("operator is not unitary (max deviation {0:.3e})")]
    NotUnitary(f64),
    #[error("Kraus set is not trace-preserving (max deviation {0:.3e})")]
    KrausIncomplete(f64),
    #[error("density matrix is not pure (largest eigenvalue {0})")]
    NotPure(f64),
    #[error("pure dephasing time is not positive for qubit {0} (T2 > 2*T1?)")]
    NonPositiveTphi(&'static str),
    #[error("invalid device parameter: {0}")]
    InvalidDevice(String),
    #[error("no measured frequency stored for transition {0}")]
    MissingMeasuredFrequency(String),
    #[error("fit input is under-determined: rank {rank} < {params} free parameters")]
    UnderDetermined { rank: usize, params: usize },
    #[error("optimization did not converge after {0} iterations")]
    NoConvergence(usize),
    #[error("control and target qubits must differ")]
    ControlEqualsTarget,
    #[error("{0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
