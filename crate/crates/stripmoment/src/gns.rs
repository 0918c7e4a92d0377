//! Finite-dimensional realization of a positive semidefinite moment kernel:
//! an inner-product space spanned by vectors `x_{m,n}` with
//! `<x_{m,n}, x_{k,l}> = s_{m+k, n+l}`, carrying the two coordinate shifts
//! `A: x_{m,n} -> x_{m+1,n}` and `B: x_{m,n} -> x_{m,n+1}` and a conjugation
//! `J` fixing every `x_{m,n}`.
//!
//! The space is built by eigenfactorization of the kernel matrix; near-zero
//! eigenvalues are truncated at a relative cutoff and the rank decision is
//! recorded on the result, never silent. Shifts that leave the truncated
//! monomial rectangle are compressed back onto the span by least squares;
//! the positions where both shifts act exactly are listed in
//! [`OperatorBundle::domain_mask`] so callers can tell exact action from
//! compressed action.

use crate::error::{Error, Result};
use crate::extension::AntilinearOp;
use crate::index::MonomialIndex;
use crate::linalg::{eigen_sorted_real, max_abs, pinv_real, RMat, RVec};
use crate::moments::MomentTable;
use crate::positivity::build_kernel_matrix;

pub const DEFAULT_EIG_CUTOFF: f64 = 1e-10;

/// Coordinates for the span of the `x_{m,n}` at one truncation order.
#[derive(Debug, Clone)]
pub struct GnsSpace {
    /// Dimension kept after eigenvalue truncation.
    pub rank: usize,
    pub index: MonomialIndex,
    /// `rank x N` matrix whose column `i` holds the coordinates of the vector
    /// for the `i`-th monomial of `index`; satisfies `coords^T coords = G`
    /// up to the truncated eigenvalues.
    pub coords: RMat,
    pub eig_cutoff: f64,
    /// Kernel eigenvalues kept, in decreasing order (coords rows match).
    pub kept_eigenvalues: RVec,
    /// Number of eigenvalues truncated away.
    pub dropped: usize,
}

impl GnsSpace {
    /// Coordinate vector of `x_{0,0}`; its squared norm is `s_{0,0}`.
    pub fn x00(&self) -> RVec {
        let pos = self.index.position(0, 0).expect("(0,0) always indexed");
        self.coords.column(pos).into_owned()
    }

    /// Positions whose `x1`-shift stays inside the index.
    pub fn a_domain(&self) -> Vec<usize> {
        let (d1, d2) = self.index.order();
        if d1 == 0 {
            return Vec::new();
        }
        self.index.positions_within(d1 - 1, d2)
    }

    /// Positions whose `x2`-shift stays inside the index.
    pub fn b_domain(&self) -> Vec<usize> {
        let (d1, d2) = self.index.order();
        if d2 == 0 {
            return Vec::new();
        }
        self.index.positions_within(d1, d2 - 1)
    }

    /// Positions where both shifts act exactly.
    pub fn joint_domain(&self) -> Vec<usize> {
        let (d1, d2) = self.index.order();
        if d1 == 0 || d2 == 0 {
            return Vec::new();
        }
        self.index.positions_within(d1 - 1, d2 - 1)
    }
}

/// The two compressed shifts and the conjugation on a [`GnsSpace`].
#[derive(Debug, Clone)]
pub struct OperatorBundle {
    /// Compressed `x1`-shift; real symmetric.
    pub a: RMat,
    /// Compressed `x2`-shift; real symmetric, norm bounded by the strip
    /// half-width when the strip form of the source table is PSD.
    pub b: RMat,
    /// Conjugation `v -> J conj(v)`. With the real eigenfactorization used
    /// here its matrix part is the identity; it is carried explicitly so the
    /// extension machinery can stay agnostic about the coordinate choice.
    pub j: AntilinearOp,
    /// Monomial positions on which both `a` and `b` act exactly.
    pub domain_mask: Vec<usize>,
}

/// Eigenfactorizes the kernel matrix at `order` into coordinates.
///
/// Eigenvalues above `eig_cutoff * lambda_max` are kept; an eigenvalue below
/// `-eig_cutoff * scale` means the kernel is not PSD and construction fails
/// (run a solvability check first to get the full report).
pub fn build_gns(table: &MomentTable, order: (usize, usize), eig_cutoff: f64) -> Result<GnsSpace> {
    if !eig_cutoff.is_finite() || eig_cutoff <= 0.0 {
        return Err(Error::usage(format!(
            "eigenvalue cutoff must be positive, got {eig_cutoff}"
        )));
    }
    let g = build_kernel_matrix(table, order)?;
    let n = g.nrows();
    let scale = 1.0 + max_abs(&g);
    let (vals, vecs) = eigen_sorted_real(&g);
    if vals[0] < -eig_cutoff * scale {
        return Err(Error::NotPositive {
            min_eig: vals[0],
            tol: eig_cutoff * scale,
        });
    }
    let lambda_max = vals[n - 1];
    let threshold = eig_cutoff * lambda_max;
    // descending, so coords rows are ordered by importance
    let kept: Vec<usize> = (0..n)
        .rev()
        .filter(|&i| vals[i] > threshold && vals[i] > 0.0)
        .collect();
    let rank = kept.len();
    if rank == 0 {
        return Err(Error::DegenerateSpace);
    }
    let mut coords = RMat::zeros(rank, n);
    for (row, &i) in kept.iter().enumerate() {
        let sqrt_l = vals[i].sqrt();
        let col = vecs.column(i);
        // normalize the eigenvector sign so coordinates are reproducible
        let sign = col
            .iter()
            .find(|v| v.abs() > 1e-12)
            .map_or(1.0, |v| v.signum());
        for jj in 0..n {
            coords[(row, jj)] = sign * sqrt_l * col[jj];
        }
    }
    Ok(GnsSpace {
        rank,
        index: MonomialIndex::new(order.0, order.1),
        coords,
        eig_cutoff,
        kept_eigenvalues: RVec::from_fn(rank, |i, _| vals[kept[i]]),
        dropped: n - rank,
    })
}

/// Least-squares compression of the shift sending the masked columns to their
/// shifted columns, completed symmetrically off the domain span.
fn compress_shift(space: &GnsSpace, mask: &[usize], shift: impl Fn(usize, usize) -> (usize, usize)) -> RMat {
    let r = space.rank;
    if mask.is_empty() {
        return RMat::zeros(r, r);
    }
    let k = mask.len();
    let mut dom = RMat::zeros(r, k);
    let mut img = RMat::zeros(r, k);
    for (j, &pos) in mask.iter().enumerate() {
        let (m, n) = space.index.pair(pos);
        let (ms, ns) = shift(m, n);
        let target = space
            .index
            .position(ms, ns)
            .expect("mask keeps shifts inside the index");
        dom.set_column(j, &space.coords.column(pos));
        img.set_column(j, &space.coords.column(target));
    }
    let x = &img * pinv_real(&dom, 1e-12);
    // projector onto the domain span
    let svd = dom.clone().svd(true, false);
    let u = svd.u.expect("svd u");
    let smax = svd.singular_values.iter().fold(0.0_f64, |a, &s| a.max(s));
    let range_rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > 1e-12 * smax && s > 0.0)
        .count();
    let ur = u.columns(0, range_rank);
    let p = &ur * ur.transpose();
    // x vanishes on the orthocomplement of the span; fill it in with the
    // transpose so the completed operator is symmetric whenever the
    // compressed action is symmetric on the span
    &x + x.transpose() * (RMat::identity(r, r) - p)
}

/// Builds the shift operators and conjugation on a constructed space.
/// The table is the one the space came from; it is used to sanity-check that
/// the shifted inner products are available.
pub fn build_operators(space: &GnsSpace, table: &MomentTable) -> Result<OperatorBundle> {
    let (d1, d2) = space.index.order();
    table.require(2 * d1, 2 * d2)?;
    let a = compress_shift(space, &space.a_domain(), |m, n| (m + 1, n));
    let b = compress_shift(space, &space.b_domain(), |m, n| (m, n + 1));
    Ok(OperatorBundle {
        a,
        b,
        j: AntilinearOp::identity(space.rank),
        domain_mask: space.joint_domain(),
    })
}

/// `<A^m B^n x00, x00>`; equals `s_{m,n}` exactly on flat inputs.
pub fn reproduce_moment(space: &GnsSpace, ops: &OperatorBundle, m: usize, n: usize) -> f64 {
    let mut v = space.x00();
    for _ in 0..n {
        v = &ops.b * v;
    }
    for _ in 0..m {
        v = &ops.a * v;
    }
    v.dot(&space.x00())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{promote_vec, CVec};
    use crate::moments::{moments_from_atoms, Atom, AtomicMeasure};
    use approx::assert_relative_eq;
    use num_complex::Complex;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn measure(atoms: &[(f64, f64, f64)]) -> AtomicMeasure {
        AtomicMeasure::new(
            atoms
                .iter()
                .map(|&(x1, x2, w)| Atom { x1, x2, w })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn single_atom_space_is_one_dimensional() {
        let (a, b, w) = (2.0, 0.5, 1.5);
        let t = moments_from_atoms(&measure(&[(a, b, w)]), 2, 2).unwrap();
        let space = build_gns(&t, (1, 1), DEFAULT_EIG_CUTOFF).unwrap();
        assert_eq!(space.rank, 1);
        assert_eq!(space.dropped, 3);
        let x00 = space.x00();
        assert_relative_eq!(x00.norm_squared(), w, epsilon = 1e-12);
        // coordinates are w^(1/2) a^m b^n up to one global sign
        let base = space.coords[(0, 0)];
        for (i, (m, n)) in space.index.iter().enumerate() {
            let want = base * a.powi(m as i32) * b.powi(n as i32);
            assert_relative_eq!(space.coords[(0, i)], want, epsilon = 1e-10);
        }

        let ops = build_operators(&space, &t).unwrap();
        assert_relative_eq!(ops.a[(0, 0)], a, epsilon = 1e-10);
        assert_relative_eq!(ops.b[(0, 0)], b, epsilon = 1e-10);
    }

    #[test]
    fn sign_swap_pair_gives_offdiagonal_shift() {
        // two atoms at x1 = ±1 on the x2 = 0 line, order (1,0): multiplication
        // by x1 swaps the even and odd coordinate directions
        let t = moments_from_atoms(&measure(&[(1.0, 0.0, 1.0), (-1.0, 0.0, 1.0)]), 2, 0).unwrap();
        let space = build_gns(&t, (1, 0), DEFAULT_EIG_CUTOFF).unwrap();
        assert_eq!(space.rank, 2);
        let ops = build_operators(&space, &t).unwrap();
        // in the orthonormal basis (x00/|x00|, x10/|x10|) the shift is the swap
        let u = space.x00() / space.x00().norm();
        let pos10 = space.index.position(1, 0).unwrap();
        let v = space.coords.column(pos10) / space.coords.column(pos10).norm();
        let auu = (&ops.a * &u).dot(&u);
        let auv = (&ops.a * &u).dot(&v);
        let avv = (&ops.a * &v).dot(&v);
        assert_relative_eq!(auu, 0.0, epsilon = 1e-10);
        assert_relative_eq!(auv, 1.0, epsilon = 1e-10);
        assert_relative_eq!(avv, 0.0, epsilon = 1e-10);
        assert!((&ops.a - ops.a.transpose()).norm() < 1e-12);
    }

    #[test]
    fn gram_matrix_is_reproduced() {
        let t = moments_from_atoms(
            &measure(&[(1.0, 0.5, 1.0), (-2.0, -0.3, 3.0), (0.4, 0.9, 0.2)]),
            4,
            4,
        )
        .unwrap();
        let space = build_gns(&t, (2, 2), DEFAULT_EIG_CUTOFF).unwrap();
        assert_eq!(space.rank, 3);
        let g = build_kernel_matrix(&t, (2, 2)).unwrap();
        let rebuilt = space.coords.transpose() * &space.coords;
        assert!((&g - rebuilt).norm() <= 1e-8 * (1.0 + g.norm()));
    }

    #[test]
    fn zero_table_is_degenerate() {
        let t = MomentTable::zeros(2, 2);
        assert!(matches!(
            build_gns(&t, (1, 1), DEFAULT_EIG_CUTOFF),
            Err(Error::DegenerateSpace)
        ));
    }

    #[test]
    fn indefinite_kernel_is_rejected() {
        let mut t = MomentTable::zeros(2, 0);
        t.set(0, 0, 1.0);
        t.set(2, 0, -1.0);
        assert!(matches!(
            build_gns(&t, (1, 0), DEFAULT_EIG_CUTOFF),
            Err(Error::NotPositive { .. })
        ));
    }

    #[test]
    fn conjugation_is_an_antiunitary_involution() {
        let t = moments_from_atoms(&measure(&[(1.0, 0.5, 1.0), (-2.0, -0.3, 3.0)]), 4, 4).unwrap();
        let space = build_gns(&t, (2, 2), DEFAULT_EIG_CUTOFF).unwrap();
        let ops = build_operators(&space, &t).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for _ in 0..20 {
            let u = CVec::from_fn(space.rank, |_, _| {
                Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let v = CVec::from_fn(space.rank, |_, _| {
                Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let ju = ops.j.apply(&u);
            let jv = ops.j.apply(&v);
            // <Ju, Jv> = <v, u>
            let lhs = jv.dotc(&ju);
            let rhs = u.dotc(&v);
            assert!((lhs - rhs).norm() < 1e-12);
            // J(J u) = u
            assert!((ops.j.apply(&ju) - &u).norm() < 1e-12);
        }
        // J commutes with the real shifts
        let a = crate::linalg::promote(&ops.a);
        let x = crate::linalg::random_unit_vector(&mut rng, space.rank);
        let lhs = ops.j.apply(&(&a * &x));
        let rhs = &a * ops.j.apply(&x);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn shifts_commute_and_reproduce_moments_on_flat_input() {
        let atoms = [(1.0, 0.5, 1.0), (-2.0, -0.3, 3.0)];
        let t = moments_from_atoms(&measure(&atoms), 4, 4).unwrap();
        let space = build_gns(&t, (2, 2), DEFAULT_EIG_CUTOFF).unwrap();
        let ops = build_operators(&space, &t).unwrap();
        let scale = 1.0 + ops.a.norm().max(ops.b.norm());
        assert!((&ops.a * &ops.b - &ops.b * &ops.a).norm() <= 1e-10 * scale);
        assert!((&ops.a - ops.a.transpose()).norm() <= 1e-12 * scale);
        assert!((&ops.b - ops.b.transpose()).norm() <= 1e-12 * scale);
        for m in 0..=2usize {
            for n in 0..=2usize {
                let got = reproduce_moment(&space, &ops, m, n);
                let want = t.get(m, n);
                assert_relative_eq!(got, want, epsilon = 1e-8 * (1.0 + want.abs()));
            }
        }
    }

    #[test]
    fn second_shift_norm_is_bounded_by_strip_width() {
        let r = 1.0;
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        for _ in 0..10 {
            let k = rng.random_range(1..=5);
            let atoms: Vec<(f64, f64, f64)> = (0..k)
                .map(|_| {
                    (
                        rng.random_range(-3.0..3.0),
                        rng.random_range(-r..r),
                        rng.random_range(0.1..2.0),
                    )
                })
                .collect();
            let t = moments_from_atoms(&measure(&atoms), 4, 4).unwrap();
            let space = build_gns(&t, (2, 2), DEFAULT_EIG_CUTOFF).unwrap();
            let ops = build_operators(&space, &t).unwrap();
            let (vals, _) = eigen_sorted_real(&ops.b);
            let opnorm = vals[0].abs().max(vals[vals.len() - 1].abs());
            assert!(opnorm <= r + 1e-8, "norm {opnorm} exceeds {r}");
        }
    }

    #[test]
    fn domain_masks_follow_the_rectangle() {
        let t = moments_from_atoms(&measure(&[(1.0, 0.5, 1.0), (0.0, -0.5, 1.0)]), 4, 2).unwrap();
        let space = build_gns(&t, (2, 1), DEFAULT_EIG_CUTOFF).unwrap();
        let a_dom = space.a_domain();
        for &p in &a_dom {
            assert!(space.index.pair(p).0 <= 1);
        }
        assert_eq!(a_dom.len(), 4); // m in {0,1} x n in {0,1}
        let b_dom = space.b_domain();
        for &p in &b_dom {
            assert!(space.index.pair(p).1 == 0);
        }
        let ops = build_operators(&space, &t).unwrap();
        assert_eq!(ops.domain_mask, space.joint_domain());
    }

    #[test]
    fn x00_embeds_as_real_vector() {
        let t = moments_from_atoms(&measure(&[(0.5, 0.2, 2.0)]), 2, 2).unwrap();
        let space = build_gns(&t, (1, 1), DEFAULT_EIG_CUTOFF).unwrap();
        let x = promote_vec(&space.x00());
        assert!((x.norm() - space.x00().norm()).abs() < 1e-14);
    }
}
