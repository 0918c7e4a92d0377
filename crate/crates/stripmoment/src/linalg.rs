//! Dense linear-algebra helpers shared across the crate: complex promotion,
//! orthonormal ranges and complements, pseudo-inverses, Haar-random unitaries,
//! and simultaneous diagonalization of commuting Hermitian matrices.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const IM: C64 = Complex::new(0.0, 1.0);

pub fn promote(m: &RMat) -> CMat {
    CMat::from_fn(m.nrows(), m.ncols(), |i, j| Complex::new(m[(i, j)], 0.0))
}

pub fn promote_vec(v: &RVec) -> CVec {
    CVec::from_fn(v.len(), |i, _| Complex::new(v[i], 0.0))
}

pub fn max_abs(m: &RMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn max_abs_c(m: &CMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.norm()))
}

/// Frobenius distance from being Hermitian.
pub fn hermitian_defect(m: &CMat) -> f64 {
    (m - m.adjoint()).norm()
}

/// Frobenius distance of `U* U` from the identity.
pub fn unitary_defect(u: &CMat) -> f64 {
    let n = u.ncols();
    (u.adjoint() * u - CMat::identity(n, n)).norm()
}

/// Frobenius norm of the off-diagonal part.
pub fn offdiag_norm(m: &CMat) -> f64 {
    let mut acc = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j {
                acc += m[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Hermitian eigendecomposition with eigenvalues sorted ascending and the
/// eigenvector columns permuted to match (nalgebra returns an arbitrary order).
pub fn eigen_sorted(h: &CMat) -> (RVec, CMat) {
    let eig = h.clone().symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = RVec::from_fn(n, |i, _| eig.eigenvalues[perm[i]]);
    let vecs = CMat::from_fn(h.nrows(), n, |i, j| eig.eigenvectors[(i, perm[j])]);
    (vals, vecs)
}

/// Real symmetric counterpart of [`eigen_sorted`].
pub fn eigen_sorted_real(h: &RMat) -> (RVec, RMat) {
    let eig = h.clone().symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = RVec::from_fn(n, |i, _| eig.eigenvalues[perm[i]]);
    let vecs = RMat::from_fn(h.nrows(), n, |i, j| eig.eigenvectors[(i, perm[j])]);
    (vals, vecs)
}

/// Orthonormal basis of the column span of `m`: the left singular vectors
/// whose singular values exceed `rel_cutoff * sigma_max`.
pub fn orthonormal_range(m: &CMat, rel_cutoff: f64) -> CMat {
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("svd requested u");
    let smax = svd.singular_values.iter().fold(0.0_f64, |a, &s| a.max(s));
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > rel_cutoff * smax && s > 0.0)
        .count();
    u.columns(0, rank).into_owned()
}

/// Orthonormal basis of the orthogonal complement of the (orthonormal)
/// columns of `q` inside the ambient space.
pub fn orthogonal_complement(q: &CMat) -> CMat {
    let n = q.nrows();
    let proj = CMat::identity(n, n) - q * q.adjoint();
    let (vals, vecs) = eigen_sorted(&proj);
    // eigenvalues cluster at 0 (span of q) and 1 (complement)
    let keep: Vec<usize> = (0..n).filter(|&i| vals[i] > 0.5).collect();
    let mut out = CMat::zeros(n, keep.len());
    for (j, &i) in keep.iter().enumerate() {
        out.set_column(j, &vecs.column(i));
    }
    out
}

/// Moore-Penrose pseudo-inverse with singular values below
/// `rel_cutoff * sigma_max` treated as zero.
pub fn pinv_real(m: &RMat, rel_cutoff: f64) -> RMat {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd u");
    let vt = svd.v_t.expect("svd v_t");
    let smax = svd.singular_values.iter().fold(0.0_f64, |a, &s| a.max(s));
    let mut sinv = RMat::zeros(vt.nrows(), u.ncols());
    for i in 0..svd.singular_values.len() {
        let s = svd.singular_values[i];
        if s > rel_cutoff * smax && s > 0.0 {
            sinv[(i, i)] = 1.0 / s;
        }
    }
    vt.transpose() * sinv * u.transpose()
}

/// Smallest singular value of a matrix.
pub fn sigma_min(m: &CMat) -> f64 {
    let svd = m.clone().svd(false, false);
    svd.singular_values
        .iter()
        .fold(f64::INFINITY, |a, &s| a.min(s))
}

pub struct JointDiag {
    /// Common orthonormal eigenbasis (columns), ordered by ascending
    /// eigenvalue of the generic combination used internally.
    pub basis: CMat,
    /// Diagonal (real) parts of `basis* M_k basis`, one vector per input.
    pub diags: Vec<RVec>,
    /// Largest relative off-diagonal mass left in any conjugated input.
    pub residual: f64,
}

/// Simultaneously diagonalizes a family of (nearly) commuting Hermitian
/// matrices by eigendecomposing a generic real linear combination
/// `M_0 + t M_1 + t^2 M_2 + ...` and checking that the resulting basis
/// diagonalizes every input to `rel_tol`. The combination weight `t` is drawn
/// from `rng` in `[0.5, 2]`; on an eigenvalue collision the draw is retried
/// (`attempts` times in total) before giving up.
pub fn joint_diag_hermitian(
    mats: &[&CMat],
    rel_tol: f64,
    rng: &mut impl Rng,
    attempts: usize,
) -> Result<JointDiag> {
    assert!(!mats.is_empty());
    let n = mats[0].nrows();
    for m in mats {
        assert!(m.nrows() == n && m.ncols() == n);
    }
    let scales: Vec<f64> = mats.iter().map(|m| 1.0 + m.norm()).collect();
    let mut best = f64::INFINITY;
    for attempt in 0..attempts.max(1) {
        // first attempt is the plain sum; retries shake the combination
        let t: f64 = if attempt == 0 {
            1.0
        } else {
            rng.random_range(0.5..2.0)
        };
        let mut x = CMat::zeros(n, n);
        let mut coeff = 1.0;
        for m in mats {
            x += *m * Complex::new(coeff, 0.0);
            coeff *= t;
        }
        let x = (&x + x.adjoint()) * Complex::new(0.5, 0.0);
        let (_, basis) = eigen_sorted(&x);
        let mut residual = 0.0_f64;
        let mut diags = Vec::with_capacity(mats.len());
        for (m, scale) in mats.iter().zip(&scales) {
            let conj = basis.adjoint() * *m * &basis;
            residual = residual.max(offdiag_norm(&conj) / scale);
            diags.push(RVec::from_fn(n, |i, _| conj[(i, i)].re));
        }
        if residual <= rel_tol {
            return Ok(JointDiag {
                basis,
                diags,
                residual,
            });
        }
        best = best.min(residual);
    }
    Err(Error::JointDiagonalization {
        attempts: attempts.max(1),
        residual: best,
    })
}

/// Haar-distributed random unitary via QR of a complex Ginibre matrix.
pub fn haar_unitary(rng: &mut impl Rng, n: usize) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| {
        Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex::new(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random Hermitian matrix with independent normal entries of the given scale.
pub fn random_hermitian(rng: &mut impl Rng, n: usize, scale: f64) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| {
        Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    }) * Complex::new(scale, 0.0);
    (&g + g.adjoint()) * Complex::new(0.5, 0.0)
}

pub fn random_unit_vector(rng: &mut impl Rng, n: usize) -> CVec {
    loop {
        let v = CVec::from_fn(n, |_, _| {
            Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let norm = v.norm();
        if norm > 1e-8 {
            return v / Complex::new(norm, 0.0);
        }
    }
}

/// Deterministic named substream: a ChaCha generator keyed by
/// `(seed, label, index)` so independent sampling sites never share a stream.
pub fn substream(seed: u64, label: &str, index: u64) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&index.to_le_bytes());
    for (i, b) in label.bytes().enumerate() {
        key[16 + (i % 16)] ^= b.rotate_left((i / 16) as u32);
    }
    ChaCha12Rng::from_seed(key)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn complex_hermitian_eigendecomposition_reconstructs() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let h = random_hermitian(&mut rng, 6, 1.0);
        let (vals, vecs) = eigen_sorted(&h);
        let lambda = CMat::from_fn(6, 6, |i, j| {
            if i == j {
                Complex::new(vals[i], 0.0)
            } else {
                Complex::new(0.0, 0.0)
            }
        });
        let rebuilt = &vecs * lambda * vecs.adjoint();
        assert!((&h - rebuilt).norm() < 1e-10 * (1.0 + h.norm()));
        for i in 1..6 {
            assert!(vals[i] >= vals[i - 1]);
        }
        assert!(unitary_defect(&vecs) < 1e-10);
    }

    #[test]
    fn complement_spans_the_rest() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let u = haar_unitary(&mut rng, 7);
        let q = u.columns(0, 3).into_owned();
        let c = orthogonal_complement(&q);
        assert_eq!(c.ncols(), 4);
        assert!(unitary_defect(&c) < 1e-12);
        assert!((q.adjoint() * &c).norm() < 1e-12);
    }

    #[test]
    fn haar_unitaries_are_unitary() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for n in [1, 2, 5] {
            let u = haar_unitary(&mut rng, n);
            assert!(unitary_defect(&u) < 1e-12);
        }
    }

    #[test]
    fn pseudo_inverse_solves_consistent_systems() {
        let m = RMat::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 2.0, 1.0, 2.0]);
        let p = pinv_real(&m, 1e-12);
        let mpm = &m * &p * &m;
        assert!((mpm - &m).norm() < 1e-12);
    }

    #[test]
    fn joint_diagonalization_of_commuting_pair() {
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        // commuting pair: polynomials in one Hermitian matrix
        let h = random_hermitian(&mut rng, 5, 1.0);
        let a = &h * &h;
        let b = &h * Complex::new(2.0, 0.0) + CMat::identity(5, 5);
        let jd = joint_diag_hermitian(&[&a, &b], 1e-10, &mut rng, 4).unwrap();
        assert!(jd.residual <= 1e-10);
        // eigenvalue pairs must satisfy the same polynomial relations
        let (hv, _) = eigen_sorted(&h);
        let mut got: Vec<(f64, f64)> = (0..5).map(|i| (jd.diags[0][i], jd.diags[1][i])).collect();
        let mut want: Vec<(f64, f64)> = (0..5)
            .map(|i| (hv[i] * hv[i], 2.0 * hv[i] + 1.0))
            .collect();
        got.sort_by(|x, y| x.1.total_cmp(&y.1));
        want.sort_by(|x, y| x.1.total_cmp(&y.1));
        for (g, w) in got.iter().zip(&want) {
            assert_relative_eq!(g.0, w.0, epsilon = 1e-8);
            assert_relative_eq!(g.1, w.1, epsilon = 1e-8);
        }
    }

    #[test]
    fn joint_diagonalization_rejects_noncommuting() {
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        let a = random_hermitian(&mut rng, 4, 1.0);
        let b = random_hermitian(&mut rng, 4, 1.0);
        let r = joint_diag_hermitian(&[&a, &b], 1e-10, &mut rng, 4);
        assert!(matches!(r, Err(Error::JointDiagonalization { .. })));
    }

    #[test]
    fn substreams_differ_by_label_and_index() {
        let mut a = substream(7, "alpha", 0);
        let mut b = substream(7, "alpha", 1);
        let mut c = substream(7, "beta", 0);
        let mut a2 = substream(7, "alpha", 0);
        let xa: u64 = a.random();
        assert_ne!(xa, b.random::<u64>());
        assert_ne!(xa, c.random::<u64>());
        assert_eq!(xa, a2.random::<u64>());
    }
}
