//! Power moment problems for measures supported on the horizontal strip
//! `{(x1, x2) : |x2| <= R}` of the plane.
//!
//! Given a finite table of prescribed moments `s_{m,n}`, the crate decides
//! whether a positive measure on the strip can produce them, and when it can,
//! constructs representing measures:
//!
//! * [`positivity`] builds the two structured symmetric forms whose positive
//!   semidefiniteness characterizes solvability, and classifies tables as
//!   feasible / marginal / infeasible.
//! * [`gns`] factorizes the moment kernel into a finite-dimensional inner
//!   product space carrying the two compressed coordinate-shift operators and
//!   a conjugation.
//! * [`extension`] holds the self-adjoint extension machinery for partially
//!   defined Hermitian operators: defect subspaces, Cayley transforms,
//!   conjugation factorizations of unitaries, quasiself-adjoint extensions,
//!   and generalized resolvents.
//! * [`solutions`] turns extensions into representing measures: exact atom
//!   extraction for flat tables and seeded sampling of the canonical solution
//!   family through the commutant of the second shift.
//! * [`complex_bridge`] converts between the real two-index moments and the
//!   complex moments `∫ z^m conj(z)^n dσ` of the same measures.
//! * [`moments`] and [`io`] supply the table/measure types, quadrature, and
//!   lossless JSON serialization used by all of the above.

pub mod complex_bridge;
pub mod error;
pub mod extension;
pub mod gns;
pub mod index;
pub mod io;
pub mod linalg;
pub mod moments;
pub mod positivity;
pub mod solutions;

pub use error::{Error, Result};
pub use index::MonomialIndex;
pub use moments::{
    gauss_legendre, moments_from_atoms, moments_from_density, Atom, AtomicMeasure, MomentTable,
    StripParams,
};
pub use positivity::{
    build_kernel_matrix, build_strip_matrix, check_solvability, Certificate, CertificateSource,
    MomentMatrixPair, SolvabilityReport, Verdict,
};
