//! Solvability of the truncated strip moment problem.
//!
//! A table `s` admits a representing measure on the strip `|x2| <= R` exactly
//! when two structured forms are positive semidefinite: the moment kernel
//! `G[(m,n),(k,l)] = s_{m+k, n+l}` and the strip form
//! `S[(m,n),(k,l)] = R^2 s_{m+k, n+l} - s_{m+k, n+l+2}`. This module builds
//! the two matrices at a truncation order and classifies the table as
//! feasible, marginal, or infeasible, with an eigenvector certificate in the
//! infeasible case. The decision is made at the given finite order only; PSD
//! at order `d` does not by itself certify solvability at higher orders, and
//! every report states the order it was computed at.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::MonomialIndex;
use crate::linalg::{eigen_sorted_real, max_abs, RMat};
use crate::moments::{MomentTable, StripParams};

/// The kernel matrix `G` and strip matrix `S` at one truncation order,
/// rows/columns labelled by [`MonomialIndex`].
#[derive(Debug, Clone)]
pub struct MomentMatrixPair {
    pub order: (usize, usize),
    pub index: MonomialIndex,
    pub g: RMat,
    pub s: RMat,
}

impl MomentMatrixPair {
    pub fn build(table: &MomentTable, strip: &StripParams, order: (usize, usize)) -> Result<Self> {
        Ok(MomentMatrixPair {
            order,
            index: MonomialIndex::new(order.0, order.1),
            g: build_kernel_matrix(table, order)?,
            s: build_strip_matrix(table, strip, order)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Feasible,
    Marginal,
    Infeasible,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Feasible => "feasible",
            Verdict::Marginal => "marginal",
            Verdict::Infeasible => "infeasible",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CertificateSource {
    Kernel,
    Strip,
}

/// Eigenvector witnessing infeasibility: a coefficient vector `alpha` (in
/// monomial order) whose quadratic form value is the negative eigenvalue.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Certificate {
    pub source: CertificateSource,
    pub eigenvalue: f64,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolvabilityReport {
    pub order: (usize, usize),
    pub min_eig_g: f64,
    pub min_eig_s: f64,
    /// `1 + max(|G|, |S|)` entrywise; tolerances scale with it.
    pub scale: f64,
    pub tol: f64,
    pub verdict: Verdict,
    pub certificate: Option<Certificate>,
}

impl SolvabilityReport {
    /// Whether a representing measure is still possible at this order
    /// (feasible or marginal).
    pub fn is_solvable(&self) -> bool {
        self.verdict != Verdict::Infeasible
    }
}

/// Kernel matrix `G[(m,n),(k,l)] = s_{m+k, n+l}` over monomials with
/// `m <= d1`, `n <= d2`. Needs the table up to `(2 d1, 2 d2)`.
pub fn build_kernel_matrix(table: &MomentTable, order: (usize, usize)) -> Result<RMat> {
    let (d1, d2) = order;
    table.require(2 * d1, 2 * d2)?;
    let index = MonomialIndex::new(d1, d2);
    let n = index.len();
    Ok(RMat::from_fn(n, n, |i, j| {
        let (m, nn) = index.pair(i);
        let (k, l) = index.pair(j);
        table.get(m + k, nn + l)
    }))
}

/// Strip matrix `S[(m,n),(k,l)] = R^2 s_{m+k, n+l} - s_{m+k, n+l+2}`.
/// Needs the table up to `(2 d1, 2 d2 + 2)`.
pub fn build_strip_matrix(
    table: &MomentTable,
    strip: &StripParams,
    order: (usize, usize),
) -> Result<RMat> {
    let (d1, d2) = order;
    table.require(2 * d1, 2 * d2 + 2)?;
    let index = MonomialIndex::new(d1, d2);
    let n = index.len();
    let r2 = strip.half_width() * strip.half_width();
    Ok(RMat::from_fn(n, n, |i, j| {
        let (m, nn) = index.pair(i);
        let (k, l) = index.pair(j);
        r2 * table.get(m + k, nn + l) - table.get(m + k, nn + l + 2)
    }))
}

/// Decides feasibility at `order` from the minimal eigenvalues of the two
/// forms. Infeasible strictly below `-tol*scale` (with certificate), marginal
/// inside the `±tol*scale` band, feasible above it.
pub fn check_solvability(
    table: &MomentTable,
    strip: &StripParams,
    order: (usize, usize),
    tol: f64,
) -> Result<SolvabilityReport> {
    if !tol.is_finite() || tol < 0.0 {
        return Err(Error::usage(format!(
            "tolerance must be finite and nonnegative, got {tol}"
        )));
    }
    let pair = MomentMatrixPair::build(table, strip, order)?;
    let scale = 1.0 + max_abs(&pair.g).max(max_abs(&pair.s));
    let (g_vals, g_vecs) = eigen_sorted_real(&pair.g);
    let (s_vals, s_vecs) = eigen_sorted_real(&pair.s);
    let min_eig_g = g_vals[0];
    let min_eig_s = s_vals[0];
    let min_all = min_eig_g.min(min_eig_s);

    let verdict = if min_all < -tol * scale {
        Verdict::Infeasible
    } else if min_all <= tol * scale {
        Verdict::Marginal
    } else {
        Verdict::Feasible
    };

    let certificate = if verdict == Verdict::Infeasible {
        let (source, eigenvalue, column) = if min_eig_g <= min_eig_s {
            (CertificateSource::Kernel, min_eig_g, g_vecs.column(0))
        } else {
            (CertificateSource::Strip, min_eig_s, s_vecs.column(0))
        };
        let mut vector: Vec<f64> = column.iter().copied().collect();
        // fix the overall sign so certificates are reproducible
        if let Some(first) = vector.iter().find(|v| v.abs() > 1e-14) {
            if *first < 0.0 {
                vector.iter_mut().for_each(|v| *v = -*v);
            }
        }
        Some(Certificate {
            source,
            eigenvalue,
            vector,
        })
    } else {
        None
    };

    Ok(SolvabilityReport {
        order,
        min_eig_g,
        min_eig_s,
        scale,
        tol,
        verdict,
        certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{moments_from_atoms, Atom, AtomicMeasure};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn atom(x1: f64, x2: f64, w: f64) -> AtomicMeasure {
        AtomicMeasure::new(vec![Atom { x1, x2, w }]).unwrap()
    }

    #[test]
    fn kernel_of_origin_point_mass_is_rank_one() {
        let t = moments_from_atoms(&atom(0.0, 0.0, 1.0), 2, 2).unwrap();
        let g = build_kernel_matrix(&t, (1, 1)).unwrap();
        assert_eq!(g.nrows(), 4);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == 0 && j == 0 { 1.0 } else { 0.0 };
                assert_relative_eq!(g[(i, j)], want);
            }
        }
    }

    #[test]
    fn kernel_of_single_atom_order_one_zero() {
        let t = moments_from_atoms(&atom(1.0, 0.5, 2.0), 2, 0).unwrap();
        let g = build_kernel_matrix(&t, (1, 0)).unwrap();
        assert_eq!(g, RMat::from_row_slice(2, 2, &[2.0, 2.0, 2.0, 2.0]));
    }

    #[test]
    fn indefinite_handmade_kernel() {
        // s_{0,0} = 1, s_{2,0} = -1, everything else 0
        let mut t = MomentTable::zeros(2, 0);
        t.set(0, 0, 1.0);
        t.set(2, 0, -1.0);
        let g = build_kernel_matrix(&t, (1, 0)).unwrap();
        assert_eq!(g, RMat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]));
        let (vals, _) = eigen_sorted_real(&g);
        assert_relative_eq!(vals[0], -1.0);
    }

    #[test]
    fn strip_matrix_scalar_cases() {
        let strip = StripParams::new(1.0).unwrap();
        let t = moments_from_atoms(&atom(0.0, 0.5, 1.0), 0, 2).unwrap();
        let s = build_strip_matrix(&t, &strip, (0, 0)).unwrap();
        assert_relative_eq!(s[(0, 0)], 0.75);

        let t = moments_from_atoms(&atom(0.0, 2.0, 1.0), 0, 2).unwrap();
        let s = build_strip_matrix(&t, &strip, (0, 0)).unwrap();
        assert_relative_eq!(s[(0, 0)], -3.0);

        // boundary atom: exact zero, no rounding slack needed
        for r in [0.5, 1.0, 3.0] {
            let strip = StripParams::new(r).unwrap();
            let t = moments_from_atoms(&atom(0.0, r, 1.0), 0, 2).unwrap();
            let s = build_strip_matrix(&t, &strip, (0, 0)).unwrap();
            assert_eq!(s[(0, 0)], 0.0);
        }
    }

    #[test]
    fn off_strip_atom_is_infeasible_with_certificate() {
        let strip = StripParams::new(1.0).unwrap();
        let t = moments_from_atoms(&atom(0.0, 2.0, 1.0), 0, 2).unwrap();
        let report = check_solvability(&t, &strip, (0, 0), 1e-10).unwrap();
        assert_eq!(report.verdict, Verdict::Infeasible);
        assert!(!report.is_solvable());
        let cert = report.certificate.expect("certificate");
        assert_eq!(cert.source, CertificateSource::Strip);
        assert_relative_eq!(cert.eigenvalue, -3.0);
        assert_eq!(cert.vector, vec![1.0]);
    }

    #[test]
    fn all_zero_table_is_marginal_and_solvable() {
        let t = MomentTable::zeros(2, 4);
        let strip = StripParams::new(1.0).unwrap();
        let report = check_solvability(&t, &strip, (1, 1), 1e-10).unwrap();
        assert_eq!(report.verdict, Verdict::Marginal);
        assert!(report.is_solvable());
        assert_relative_eq!(report.min_eig_g, 0.0);
        assert_relative_eq!(report.min_eig_s, 0.0);
        assert!(report.certificate.is_none());
    }

    fn random_measure(rng: &mut impl Rng, r: f64) -> AtomicMeasure {
        let k = rng.random_range(1..=8);
        let atoms = (0..k)
            .map(|_| Atom {
                x1: rng.random_range(-5.0..5.0),
                x2: rng.random_range(-r..r),
                w: rng.random_range(0.01..2.0),
            })
            .collect();
        AtomicMeasure::new(atoms).unwrap()
    }

    #[test]
    fn in_strip_measures_are_never_infeasible() {
        let strip = StripParams::new(1.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        for _ in 0..30 {
            let mu = random_measure(&mut rng, 1.0);
            let t = moments_from_atoms(&mu, 6, 8).unwrap();
            for order in [(0, 0), (1, 1), (2, 2), (3, 3), (3, 1)] {
                let report = check_solvability(&t, &strip, order, 1e-10).unwrap();
                assert!(
                    report.is_solvable(),
                    "measure {mu:?} at order {order:?}: {report:?}"
                );
                assert!(report.min_eig_g >= -1e-10 * report.scale);
                assert!(report.min_eig_s >= -1e-10 * report.scale);
            }
        }
    }

    #[test]
    fn quadratic_form_matches_direct_double_sum() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let t = MomentTable::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0));
        let (d1, d2) = (2, 2);
        let g = build_kernel_matrix(&t, (d1, d2)).unwrap();
        let index = MonomialIndex::new(d1, d2);
        for _ in 0..10 {
            let alpha: Vec<f64> = (0..index.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let av = nalgebra::DVector::from_vec(alpha.clone());
            let quad = (av.transpose() * &g * &av)[(0, 0)];
            let mut direct = 0.0;
            for (i, (m, n)) in index.iter().enumerate() {
                for (j, (k, l)) in index.iter().enumerate() {
                    direct += alpha[i] * alpha[j] * t.get(m + k, n + l);
                }
            }
            assert_relative_eq!(quad, direct, epsilon = 1e-12 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn infeasibility_is_monotone_in_order() {
        let strip = StripParams::new(1.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        let mut checked = 0;
        for _ in 0..40 {
            let t = MomentTable::from_fn(4, 6, |_, _| rng.random_range(-1.0..1.0));
            let small = check_solvability(&t, &strip, (1, 1), 1e-10).unwrap();
            if small.verdict == Verdict::Infeasible {
                let big = check_solvability(&t, &strip, (2, 2), 1e-10).unwrap();
                assert_eq!(big.verdict, Verdict::Infeasible);
                checked += 1;
            }
        }
        assert!(checked > 0, "no infeasible instance sampled");
    }

    #[test]
    fn boundary_atoms_classify_marginal_not_infeasible() {
        let strip = StripParams::new(1.0).unwrap();
        let mu = AtomicMeasure::new(vec![
            Atom {
                x1: 0.3,
                x2: 1.0,
                w: 1.0,
            },
            Atom {
                x1: -2.0,
                x2: -1.0,
                w: 0.5,
            },
        ])
        .unwrap();
        let t = moments_from_atoms(&mu, 4, 6).unwrap();
        let report = check_solvability(&t, &strip, (2, 2), 1e-10).unwrap();
        assert!(report.is_solvable(), "{report:?}");
    }

    #[test]
    fn table_too_small_is_reported() {
        let t = MomentTable::zeros(2, 2);
        let strip = StripParams::new(1.0).unwrap();
        assert!(matches!(
            build_kernel_matrix(&t, (2, 1)),
            Err(Error::TableTooSmall { need_m: 4, .. })
        ));
        assert!(matches!(
            build_strip_matrix(&t, &strip, (1, 1)),
            Err(Error::TableTooSmall { need_n: 4, .. })
        ));
    }
}
