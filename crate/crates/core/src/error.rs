use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LieError {
    #[error("invalid matrix dimension k={0} (need k >= 2)")]
    InvalidDimension(usize),
    #[error("unknown flavor `{0}`")]
    UnknownFlavor(String),
    #[error("tensor shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("non-finite matrix entry")]
    NonFinite,
    #[error("matrix is singular")]
    Singular,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("determinant has modulus {0}, expected unit determinant")]
    NotUnimodular(f64),
}

/// First invariant violation found in a ciliated fat graph.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphViolation {
    #[error("end `{0}` is a fixed point of the involution")]
    FixedPoint(String),
    #[error("involution is not an involution at end `{0}`")]
    NotInvolutive(String),
    #[error("end `{0}` has no partner in the involution")]
    MissingPartner(String),
    #[error("end `{0}` violates the vertex partition")]
    Partition(String),
    #[error("end `{0}` is listed twice among the ends")]
    DuplicateEnd(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("invalid graph: {0}")]
    Invalid(#[from] GraphViolation),
    #[error("graph is not connected")]
    Disconnected,
    #[error("graph has no vertices")]
    Empty,
    #[error("internal error: non-integer genus from V={v}, E={e}, b={b}")]
    NonIntegerGenus { v: usize, e: usize, b: usize },
    #[error("unknown edge end `{0}`")]
    UnknownEnd(String),
    #[error("unknown vertex {0}")]
    UnknownVertex(usize),
    #[error("cannot contract loop edge at end `{0}`")]
    LoopEdge(String),
    #[error("vertex {vertex} is not an endpoint of the edge through `{end}`")]
    NotAnEndpoint { end: String, vertex: usize },
    #[error("valence mismatch: {0} vs {1}")]
    ValenceMismatch(usize, usize),
    #[error("cannot glue a vertex to itself")]
    SameVertex,
    #[error("gluing would close an edge onto itself without a vertex (through `{0}`)")]
    VertexlessCycle(String),
    #[error("position {position} out of range for vertex of valence {valence}")]
    BadPosition { position: usize, valence: usize },
    #[error("polyuble/polygon size must be at least 1")]
    BadSize,
    #[error("parse error: {0}")]
    Parse(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConnectionError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error("dimension mismatch: expected k={expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("gauge element does not match the graph's vertices")]
    GaugeShape,
    #[error("path is not edge-consecutive at step {0}")]
    NonConsecutivePath(usize),
    #[error("missing value for edge end `{0}`")]
    MissingValue(String),
    #[error("glue precondition violated: their r_a-matrices are opposite is required (max deviation {0:e})")]
    GluePrecondition(f64),
    #[error("parse error: {0}")]
    Parse(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BracketError {
    #[error(transparent)]
    Connection(#[from] ConnectionError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error("inconsistent structures: {0}")]
    Inconsistent(String),
    #[error("r-matrix at vertex {vertex} has symmetric part off the shared Casimir by {deviation:e}")]
    SymmetricPart { vertex: usize, deviation: f64 },
    #[error("observable backend produced a non-finite value")]
    NonFinite,
    #[error("graph does not realize configuration `{0}`")]
    ConfigurationMismatch(String),
    #[error("observable is not gauge invariant (deviation {0:e})")]
    NotGaugeInvariant(f64),
    #[error("face passes a cilium; fixed-monodromy submanifold check refused")]
    CiliumInFace,
    #[error("spin network: {0}")]
    SpinNetwork(String),
    #[error("operation not supported by this observable backend: {0}")]
    Unsupported(&'static str),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LeafError {
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error(transparent)]
    Bracket(#[from] BracketError),
    #[error("expected {expected} values, found {found}")]
    Length { expected: usize, found: usize },
    #[error("eigenvalues {i} and {j} coincide")]
    Degenerate { i: usize, j: usize },
    #[error("product of eigenvalues is {0}, not 1")]
    NotUnimodular(String),
    #[error("pole: lambda_{i}/lambda_{j} equals x")]
    Pole { i: usize, j: usize },
    #[error("leaf parameter x must be nonzero")]
    ZeroX,
    #[error("q_{0} must be nonzero")]
    ZeroQ(usize),
    #[error("branch point: vanishing factor for index {0}")]
    BranchPoint(usize),
    #[error("spectrum separation {0:e} below 1e-4")]
    NearDegenerate(f64),
    #[error("branch inconsistency: formula {formula} vs trace {trace}")]
    BranchInconsistent { formula: String, trace: String },
}
