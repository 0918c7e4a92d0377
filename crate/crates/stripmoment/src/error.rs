//! Error type shared by the whole crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("strip half-width must be finite and positive, got {r}")]
    InvalidStrip { r: f64 },

    #[error("measure has no atoms")]
    EmptyMeasure,

    #[error("atom {index} has non-positive weight {w}")]
    NonpositiveWeight { index: usize, w: f64 },

    #[error("atoms {i} and {j} coincide at ({x1}, {x2})")]
    DuplicateAtom { i: usize, j: usize, x1: f64, x2: f64 },

    #[error("atom {index} lies outside the strip: |{x2}| > {r}")]
    AtomOutsideStrip { index: usize, x2: f64, r: f64 },

    #[error("{what} is not finite")]
    NonFinite { what: String },

    #[error("non-negative integrand required: f({x1}, {x2}) = {value}")]
    NegativeDensity { x1: f64, x2: f64, value: f64 },

    #[error("quadrature needs at least one node per axis")]
    EmptyQuadrature,

    #[error(
        "moment table covers orders up to ({max_m}, {max_n}) but ({need_m}, {need_n}) is required"
    )]
    TableTooSmall {
        need_m: usize,
        need_n: usize,
        max_m: usize,
        max_n: usize,
    },

    #[error("moment table is missing entry ({m}, {n})")]
    MissingEntry { m: usize, n: usize },

    #[error("moment table entry ({m}, {n}) is not finite")]
    NonFiniteEntry { m: usize, n: usize },

    #[error("i/o failure on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("could not parse {path}: {message}")]
    Parse { path: String, message: String },

    #[error(
        "kernel matrix is not positive semidefinite: eigenvalue {min_eig} below -{tol}; \
         no representing measure exists at this order"
    )]
    NotPositive { min_eig: f64, tol: f64 },

    #[error("representation space is degenerate (rank 0)")]
    DegenerateSpace,

    #[error(
        "moment structure is not flat at this order (rank {rank_inner} inside vs {rank_outer} outside); \
         increase the truncation order or accept approximate extraction"
    )]
    NotFlat { rank_inner: usize, rank_outer: usize },

    #[error("compressed shift operators fail to commute (residual {residual}); \
             increase the truncation order or accept approximate extraction")]
    NotCommuting { residual: f64 },

    #[error("moment reproduction residual {residual} exceeds tolerance {tol}")]
    ResidualTooLarge { residual: f64, tol: f64 },

    #[error("deficiency indices ({n_plus}, {n_minus}) are unequal; no canonical extension exists")]
    UnequalDeficiency { n_plus: usize, n_minus: usize },

    #[error("operator block is not unitary: deviation {defect}")]
    NotUnitary { defect: f64 },

    #[error("parameter block must be a contraction: operator norm {norm} exceeds 1")]
    NotContraction { norm: f64 },

    #[error(
        "unitary operator has spectrum too close to 1 (gap {gap}); \
         its inverse Cayley transform is unbounded"
    )]
    SpectrumAtOne { gap: f64 },

    #[error("(A {sign} i) is not injective on the operator domain (min singular value {sigma_min})")]
    ShiftNotInjective { sign: char, sigma_min: f64 },

    #[error("conjugation does not exchange the defect subspaces (residual {residual})")]
    ConjugationMismatch { residual: f64 },

    #[error("domain decomposition is degenerate: smallest singular value {sigma_min}")]
    DegenerateDomain { sigma_min: f64 },

    #[error("resolvent undefined: {lambda} is in the spectrum of the extension")]
    SingularResolvent { lambda: num_complex::Complex<f64> },

    #[error("resolvent is only defined off the real axis, got {lambda}")]
    RealSpectralParameter { lambda: num_complex::Complex<f64> },

    #[error("simultaneous diagonalization failed after {attempts} attempts (residual {residual})")]
    JointDiagonalization { attempts: usize, residual: f64 },

    #[error("matrix has non-orthonormal columns (deviation {defect})")]
    NotOrthonormal { defect: f64 },

    #[error("operator is not symmetric on its domain (deviation {defect})")]
    NotSymmetric { defect: f64 },

    #[error("matrix of size {rows}x{cols} is not square")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("complex moment table violates Hermitian symmetry: residual {residual}")]
    NotHermitianTable { residual: f64 },

    #[error(
        "complex moments are inconsistent with a real measure in the plane: imaginary residue {residual}"
    )]
    ComplexInconsistent { residual: f64 },

    #[error(
        "requested order ({d1}, {d2}) needs conversion degree {needed} but the complex table only supports degree {degree}"
    )]
    DegreeTooSmall {
        d1: usize,
        d2: usize,
        needed: usize,
        degree: usize,
    },

    #[error("{message}")]
    Usage { message: String },
}

impl Error {
    pub(crate) fn usage(message: impl Into<String>) -> Self {
        Error::Usage {
            message: message.into(),
        }
    }

    pub(crate) fn non_finite(what: impl Into<String>) -> Self {
        Error::NonFinite { what: what.into() }
    }
}
