//! Extension machinery for partially defined Hermitian operators on a
//! finite-dimensional complex space.
//!
//! An operator `A` given on a subspace `D` with `<Au, v> = <u, Av>` on `D`
//! generally has many Hermitian extensions. They are classified through the
//! Cayley transform: `V_A = (A+i)(A-i)^{-1}` maps `H1 = (A-i)D` isometrically
//! onto `H3 = (A+i)D`, and every unitary extension of `V_A` is `V_A` on `H1`
//! plus an arbitrary isometry from the defect subspace `H2 = H ⊖ H1` onto
//! `H4 = H ⊖ H3`. Inverting the Cayley transform (possible when 1 is not in
//! the spectrum) returns the Hermitian extensions themselves. Beyond the
//! unitary parameter, contractions `C: H2 -> H4` give quasiself-adjoint
//! extensions `A_C` and, through them, generalized resolvents with the
//! Nevanlinna property in the upper half-plane.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_defect, joint_diag_hermitian, max_abs_c, orthogonal_complement, orthonormal_range,
    sigma_min, unitary_defect, CMat, CVec, IM,
};

/// Hermitian operator defined on a subspace: `domain` holds an orthonormal
/// basis of `D` as columns, `action` the images of those basis vectors in
/// ambient coordinates.
#[derive(Debug, Clone)]
pub struct PartialHermitianOp {
    pub dim: usize,
    pub domain: CMat,
    pub action: CMat,
}

impl PartialHermitianOp {
    pub fn new(domain: CMat, action: CMat) -> Result<Self> {
        let dim = domain.nrows();
        if action.nrows() != dim || action.ncols() != domain.ncols() {
            return Err(Error::DimensionMismatch {
                expected: dim * domain.ncols(),
                got: action.nrows() * action.ncols(),
            });
        }
        if domain.ncols() > 0 {
            let ortho = unitary_defect(&domain);
            if ortho > 1e-8 {
                return Err(Error::NotOrthonormal { defect: ortho });
            }
            let compressed = domain.adjoint() * &action;
            let sym = hermitian_defect(&compressed);
            let scale = 1.0 + max_abs_c(&action);
            if sym > 1e-10 * scale {
                return Err(Error::NotSymmetric { defect: sym });
            }
        }
        Ok(PartialHermitianOp {
            dim,
            domain,
            action,
        })
    }

    /// Wraps an everywhere-defined Hermitian matrix.
    pub fn total(h: &CMat) -> Result<Self> {
        if h.nrows() != h.ncols() {
            return Err(Error::NotSquare {
                rows: h.nrows(),
                cols: h.ncols(),
            });
        }
        let defect = hermitian_defect(h);
        if defect > 1e-10 * (1.0 + max_abs_c(h)) {
            return Err(Error::NotSymmetric { defect });
        }
        let n = h.nrows();
        PartialHermitianOp::new(CMat::identity(n, n), h.clone())
    }

    pub fn domain_dim(&self) -> usize {
        self.domain.ncols()
    }

    pub fn is_total(&self) -> bool {
        self.domain_dim() == self.dim
    }

    /// How far `candidate` is from extending this operator: `||M F - X||`
    /// over the domain basis `F` with prescribed images `X`.
    pub fn extension_defect(&self, candidate: &CMat) -> f64 {
        (candidate * &self.domain - &self.action).norm()
    }
}

/// Antilinear map `v -> M conj(v)` with `M` unitary and `M conj(M) = I`,
/// i.e. a conjugation.
#[derive(Debug, Clone)]
pub struct AntilinearOp {
    m: CMat,
}

impl AntilinearOp {
    pub fn new(m: CMat) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        let u_defect = unitary_defect(&m);
        if u_defect > 1e-10 * (1.0 + m.nrows() as f64) {
            return Err(Error::NotUnitary { defect: u_defect });
        }
        let n = m.nrows();
        let inv_defect = (&m * m.map(|z| z.conj()) - CMat::identity(n, n)).norm();
        if inv_defect > 1e-10 * (1.0 + n as f64) {
            return Err(Error::NotUnitary { defect: inv_defect });
        }
        Ok(AntilinearOp { m })
    }

    /// Plain componentwise conjugation.
    pub fn identity(n: usize) -> Self {
        AntilinearOp {
            m: CMat::identity(n, n),
        }
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn apply(&self, v: &CVec) -> CVec {
        &self.m * v.map(|z| z.conj())
    }

    pub fn apply_to_columns(&self, cols: &CMat) -> CMat {
        &self.m * cols.map(|z| z.conj())
    }

    /// The (linear) composition `self ∘ other` of two antilinear maps.
    pub fn compose(&self, other: &AntilinearOp) -> CMat {
        &self.m * other.m.map(|z| z.conj())
    }
}

/// Defect subspaces of a partial Hermitian operator: orthonormal bases of
/// `H1 = (A-i)D`, `H3 = (A+i)D` and their orthogonal complements `H2`, `H4`.
#[derive(Debug, Clone)]
pub struct DefectData {
    pub h1: CMat,
    pub h2: CMat,
    pub h3: CMat,
    pub h4: CMat,
    pub n_plus: usize,
    pub n_minus: usize,
}

fn shifted_domains(op: &PartialHermitianOp) -> (CMat, CMat) {
    let fi = &op.domain * IM;
    (&op.action - &fi, &op.action + &fi)
}

/// Computes the four defect-related subspaces of `op`.
pub fn defect_subspaces(op: &PartialHermitianOp) -> Result<DefectData> {
    let r = op.dim;
    let k = op.domain_dim();
    let (m1, m3) = shifted_domains(op);
    let (h1, h3) = if k == 0 {
        (CMat::zeros(r, 0), CMat::zeros(r, 0))
    } else {
        let scale = 1.0 + max_abs_c(&op.action);
        let s1 = sigma_min(&m1);
        if s1 <= 1e-10 * scale {
            return Err(Error::ShiftNotInjective {
                sign: '-',
                sigma_min: s1,
            });
        }
        let s3 = sigma_min(&m3);
        if s3 <= 1e-10 * scale {
            return Err(Error::ShiftNotInjective {
                sign: '+',
                sigma_min: s3,
            });
        }
        (orthonormal_range(&m1, 1e-12), orthonormal_range(&m3, 1e-12))
    };
    let h2 = orthogonal_complement(&h1);
    let h4 = orthogonal_complement(&h3);
    Ok(DefectData {
        n_plus: h2.ncols(),
        n_minus: h4.ncols(),
        h1,
        h2,
        h3,
        h4,
    })
}

/// The Cayley transform of a partial Hermitian operator: an isometry from
/// `H1` onto `H3` with `V (A-i)f = (A+i)f`.
#[derive(Debug, Clone)]
pub struct CayleyTransform {
    /// Orthonormal basis of `H1`.
    pub q1: CMat,
    /// Images of the `q1` columns; orthonormal, spanning `H3`.
    pub map: CMat,
}

impl CayleyTransform {
    /// Ambient matrix acting as the isometry on `H1` and as zero on `H2`.
    pub fn ambient(&self) -> CMat {
        &self.map * self.q1.adjoint()
    }

    pub fn apply(&self, v: &CVec) -> CVec {
        &self.map * (self.q1.adjoint() * v)
    }
}

pub fn cayley_transform(op: &PartialHermitianOp) -> Result<CayleyTransform> {
    let r = op.dim;
    let k = op.domain_dim();
    if k == 0 {
        return Ok(CayleyTransform {
            q1: CMat::zeros(r, 0),
            map: CMat::zeros(r, 0),
        });
    }
    let (m1, m3) = shifted_domains(op);
    let scale = 1.0 + max_abs_c(&op.action);
    let s1 = sigma_min(&m1);
    if s1 <= 1e-10 * scale {
        return Err(Error::ShiftNotInjective {
            sign: '-',
            sigma_min: s1,
        });
    }
    let qr = m1.clone().qr();
    let q1 = qr.q();
    let r1 = qr.r();
    let r1_inv = r1.clone().try_inverse().ok_or(Error::ShiftNotInjective {
        sign: '-',
        sigma_min: s1,
    })?;
    let map = &m3 * r1_inv;
    let iso_defect = unitary_defect(&map);
    if iso_defect > 1e-8 * (1.0 + k as f64) {
        return Err(Error::NotOrthonormal { defect: iso_defect });
    }
    Ok(CayleyTransform { q1, map })
}

/// Cayley transform `(H + i)(H - i)^{-1}` of an everywhere-defined Hermitian
/// matrix; always unitary.
pub fn cayley_unitary(h: &CMat) -> Result<CMat> {
    if h.nrows() != h.ncols() {
        return Err(Error::NotSquare {
            rows: h.nrows(),
            cols: h.ncols(),
        });
    }
    let defect = hermitian_defect(h);
    if defect > 1e-8 * (1.0 + max_abs_c(h)) {
        return Err(Error::NotSymmetric { defect });
    }
    let n = h.nrows();
    let id = CMat::identity(n, n);
    let minus = h - &id * IM;
    let inv = minus
        .lu()
        .try_inverse()
        .expect("H - i is invertible for Hermitian H");
    Ok((h + &id * IM) * inv)
}

/// Eigendecomposition `U = W diag(lambda) W*` of a unitary matrix, via joint
/// diagonalization of its commuting Hermitian real and imaginary parts.
pub fn unitary_eigen(u: &CMat) -> Result<(CVec, CMat)> {
    if u.nrows() != u.ncols() {
        return Err(Error::NotSquare {
            rows: u.nrows(),
            cols: u.ncols(),
        });
    }
    let defect = unitary_defect(u);
    if defect > 1e-8 * (1.0 + u.nrows() as f64) {
        return Err(Error::NotUnitary { defect });
    }
    let n = u.nrows();
    if n == 0 {
        return Ok((CVec::zeros(0), CMat::zeros(0, 0)));
    }
    let re = (u + u.adjoint()) * Complex::new(0.5, 0.0);
    let im = (u - u.adjoint()) * Complex::new(0.0, -0.5);
    // The real and imaginary parts commute exactly when `u` is unitary, so
    // the joint diagonalization can be pushed near machine precision; inputs
    // that only just pass the unitarity gate get a proportionally looser
    // target instead of a failure.
    let tol = 1e-13_f64.max(10.0 * defect);
    // fixed seed: eigendecomposition of a given unitary is deterministic
    let mut rng = ChaCha12Rng::seed_from_u64(0x001d_d1a9);
    let jd = joint_diag_hermitian(&[&re, &im], tol, &mut rng, 8)?;
    let d = jd.basis.adjoint() * u * &jd.basis;
    let vals = CVec::from_fn(n, |i, _| d[(i, i)]);
    Ok((vals, jd.basis))
}

/// Inverse Cayley transform `i (U + I)(U - I)^{-1}` of a unitary without
/// spectrum at 1; the result is Hermitian.
pub fn inverse_cayley(u: &CMat) -> Result<CMat> {
    let (vals, _) = unitary_eigen(u)?;
    let gap = vals
        .iter()
        .map(|l| (l - Complex::new(1.0, 0.0)).norm())
        .fold(f64::INFINITY, f64::min);
    if gap <= 1e-8 {
        return Err(Error::SpectrumAtOne { gap });
    }
    let n = u.nrows();
    let id = CMat::identity(n, n);
    let inv = (u - &id)
        .lu()
        .try_inverse()
        .ok_or(Error::SpectrumAtOne { gap })?;
    let a = (u + &id) * inv * IM;
    let defect = hermitian_defect(&a);
    if defect > 1e-8 * (1.0 + max_abs_c(&a)) {
        return Err(Error::NotSymmetric { defect });
    }
    Ok((&a + a.adjoint()) * Complex::new(0.5, 0.0))
}

/// Factorizes a unitary into two conjugations, `U = K ∘ L`.
///
/// `L` conjugates componentwise in an eigenbasis `W` of `U` (matrix `W W^T`)
/// and `K` carries the eigenvalue phases (`W diag(λ/|λ|) W^T`), so
/// `K ∘ L = W diag(λ) W^* = U`. Building `K` from normalized phases rather
/// than as `U ∘ L` keeps both factors involutive to machine precision. The
/// factorization is not unique; this fixed choice keeps results
/// deterministic.
pub fn godic_lucenko_factor(u: &CMat) -> Result<(AntilinearOp, AntilinearOp)> {
    let (vals, w) = unitary_eigen(u)?;
    let m_l = &w * w.transpose();
    let phases = CVec::from_fn(vals.len(), |i, _| vals[i] / vals[i].norm());
    let m_k = &w * CMat::from_diagonal(&phases) * w.transpose();
    Ok((AntilinearOp::new(m_k)?, AntilinearOp::new(m_l)?))
}

/// Glues the Cayley transform on `H1` with an isometry `u24: H2 -> H4`
/// (given in `h2`/`h4` coordinates) into a unitary on the whole space.
pub fn assemble_extension(
    cayley: &CayleyTransform,
    defects: &DefectData,
    u24: &CMat,
) -> Result<CMat> {
    if defects.n_plus != defects.n_minus {
        return Err(Error::UnequalDeficiency {
            n_plus: defects.n_plus,
            n_minus: defects.n_minus,
        });
    }
    if u24.nrows() != defects.n_minus || u24.ncols() != defects.n_plus {
        return Err(Error::DimensionMismatch {
            expected: defects.n_minus * defects.n_plus,
            got: u24.nrows() * u24.ncols(),
        });
    }
    if defects.n_plus > 0 {
        let defect = unitary_defect(u24);
        if defect > 1e-8 * (1.0 + defects.n_plus as f64) {
            return Err(Error::NotUnitary { defect });
        }
    }
    let u = cayley.ambient() + &defects.h4 * u24 * defects.h2.adjoint();
    let defect = unitary_defect(&u);
    if defect > 1e-8 * (1.0 + u.nrows() as f64) {
        return Err(Error::NotUnitary { defect });
    }
    Ok(u)
}

fn hcat(a: &CMat, b: &CMat) -> CMat {
    debug_assert_eq!(a.nrows(), b.nrows());
    let mut out = CMat::zeros(a.nrows(), a.ncols() + b.ncols());
    for j in 0..a.ncols() {
        out.set_column(j, &a.column(j));
    }
    for j in 0..b.ncols() {
        out.set_column(a.ncols() + j, &b.column(j));
    }
    out
}

fn operator_norm(m: &CMat) -> f64 {
    if m.ncols() == 0 || m.nrows() == 0 {
        return 0.0;
    }
    let svd = m.clone().svd(false, false);
    svd.singular_values
        .iter()
        .fold(0.0_f64, |a, &s| a.max(s))
}

fn quasi_from_blocks(
    op: &PartialHermitianOp,
    dom_block: &CMat,
    act_block: &CMat,
) -> Result<CMat> {
    let r = op.dim;
    let k = op.domain_dim();
    if k + dom_block.ncols() != r {
        return Err(Error::DimensionMismatch {
            expected: r,
            got: k + dom_block.ncols(),
        });
    }
    let mdom = hcat(&op.domain, dom_block);
    let mact = hcat(&op.action, act_block);
    let smin = sigma_min(&mdom);
    let smax = operator_norm(&mdom);
    if smin <= 1e-10 * (1.0 + smax) {
        return Err(Error::DegenerateDomain { sigma_min: smin });
    }
    let inv = mdom
        .lu()
        .try_inverse()
        .ok_or(Error::DegenerateDomain { sigma_min: smin })?;
    Ok(mact * inv)
}

/// Quasiself-adjoint extension `A_C` for a contraction `C: H2 -> H4` (in
/// `h2`/`h4` coordinates): on `g = f + Cψ - ψ` it acts as
/// `A_C g = Af + iCψ + iψ`. For unitary `C` this is the Hermitian extension
/// matching [`assemble_extension`] + [`inverse_cayley`]; for `‖C‖ < 1` it is
/// a proper quasi-extension with spectrum in the lower half-plane.
pub fn quasi_extension(
    op: &PartialHermitianOp,
    defects: &DefectData,
    c: &CMat,
) -> Result<CMat> {
    if c.nrows() != defects.n_minus || c.ncols() != defects.n_plus {
        return Err(Error::DimensionMismatch {
            expected: defects.n_minus * defects.n_plus,
            got: c.nrows() * c.ncols(),
        });
    }
    let norm = operator_norm(c);
    if norm > 1.0 + 1e-8 {
        return Err(Error::NotContraction { norm });
    }
    let q4c = &defects.h4 * c;
    let dom = &q4c - &defects.h2;
    let act = (&q4c + &defects.h2) * IM;
    quasi_from_blocks(op, &dom, &act)
}

/// Mirror construction with a contraction `C': H4 -> H2`; realizes the
/// adjoints of the quasiself-adjoint extensions:
/// on `g = f + C'φ - φ` (φ in `H4`) it acts as `A g = Af - iC'φ - iφ`.
pub fn quasi_extension_adjoint(
    op: &PartialHermitianOp,
    defects: &DefectData,
    c_star: &CMat,
) -> Result<CMat> {
    if c_star.nrows() != defects.n_plus || c_star.ncols() != defects.n_minus {
        return Err(Error::DimensionMismatch {
            expected: defects.n_plus * defects.n_minus,
            got: c_star.nrows() * c_star.ncols(),
        });
    }
    let norm = operator_norm(c_star);
    if norm > 1.0 + 1e-8 {
        return Err(Error::NotContraction { norm });
    }
    let q2c = &defects.h2 * c_star;
    let dom = &q2c - &defects.h4;
    let act = (&q2c + &defects.h4) * (-IM);
    quasi_from_blocks(op, &dom, &act)
}

/// Generalized resolvent of `op` at `lambda` for a constant contraction
/// parameter `f_param: H2 -> H4`: the resolvent of the quasiself-adjoint
/// extension `A_F` in the upper half-plane and of its adjoint in the lower,
/// so that the whole family is a Nevanlinna (Herglotz) function of `lambda`.
pub fn generalized_resolvent(
    op: &PartialHermitianOp,
    defects: &DefectData,
    f_param: &CMat,
    lambda: Complex<f64>,
) -> Result<CMat> {
    if lambda.im == 0.0 {
        return Err(Error::RealSpectralParameter { lambda });
    }
    let a_c = if lambda.im > 0.0 {
        quasi_extension(op, defects, f_param)?
    } else {
        quasi_extension_adjoint(op, defects, &f_param.adjoint())?
    };
    let n = a_c.nrows();
    let shifted = &a_c - CMat::identity(n, n) * lambda;
    shifted
        .lu()
        .try_inverse()
        .ok_or(Error::SingularResolvent { lambda })
}
