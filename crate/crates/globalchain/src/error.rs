use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LayoutError {
    #[error("invalid layout config: {0}")]
    InvalidConfig(String),
    #[error("unknown code id `{0}`")]
    UnknownCode(String),
    #[error("n_comp = {n_comp} too small for code `{code}` (needs at least {min})")]
    BlockTooSmall { code: String, n_comp: usize, min: usize },
    #[error("index {index} out of range for chain of length {len}")]
    OutOfRange { index: usize, len: usize },
    #[error("bad species pattern `{0}`")]
    BadPattern(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PulseError {
    #[error("unknown pulse kind `{0}`")]
    UnknownKind(String),
    #[error("missing field `{0}`")]
    MissingField(String),
    #[error("non-finite angle")]
    NonFiniteAngle,
    #[error("malformed schedule: {0}")]
    Malformed(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompileError {
    #[error("decoupling conflict: {0}")]
    DecouplingConflict(String),
    #[error("empty species set")]
    EmptySpeciesSet,
    #[error("unknown subchain length {0}")]
    UnknownSubchainLength(usize),
    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),
    #[error("code `{0}` lacks transversal CZ")]
    NoTransversalCz(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("synthesis failed: {0}")]
    Synthesis(String),
    #[error(transparent)]
    Layout(#[from] LayoutError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("{0} qubits exceeds the dense ceiling of {1}")]
    TooManyQubits(usize, usize),
    #[error("schedule contains ResetC; no unitary exists")]
    NonUnitary,
    #[error("reset of entangled C cell {cell} (residual {residual:.3e})")]
    EntangledReset { cell: usize, residual: f64 },
    #[error("non-Clifford angle {0} rad")]
    NonClifford(f64),
    #[error("site-addressed pulse cannot be simulated")]
    SiteAddressed,
    #[error("readout at cell {cell} after {after} pulses is not deterministic in the noiseless reference")]
    NondeterministicReadout { cell: usize, after: usize },
    #[error("invalid simulation input: {0}")]
    Input(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QecError {
    #[error("unknown code `{0}`")]
    UnknownCode(String),
    #[error("syndrome length {got} does not match {want} generators")]
    SyndromeLength { got: usize, want: usize },
    #[error("invalid code: {0}")]
    InvalidCode(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThresholdError {
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("incomplete gadget set: {0}")]
    IncompleteGadgetSet(String),
    #[error("out of scope: {0}")]
    OutOfScope(String),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Qec(#[from] QecError),
}
