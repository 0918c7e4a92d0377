//! Representing measures for truncated strip moment problems.
//!
//! Two routes are implemented. For *flat* data — kernel rank stable between
//! consecutive truncation orders — the compressed shifts multiply exactly,
//! their joint spectral decomposition is an atomic measure, and the solution
//! is unique: [`extract_atoms`]. Otherwise the compressed first-coordinate
//! shift is a genuinely partial Hermitian operator, and each of its
//! extensions that respects the conjugation and the second-coordinate
//! operator yields one *canonical* solution; that family is parameterized by
//! unitaries on the defect subspace commuting with the compressed
//! second-coordinate operator, and [`canonical_solutions`] samples it.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extension::{
    assemble_extension, cayley_transform, cayley_unitary, defect_subspaces,
    godic_lucenko_factor, inverse_cayley, CayleyTransform, DefectData, PartialHermitianOp,
};
use crate::gns::{build_gns, build_operators, GnsSpace, OperatorBundle, DEFAULT_EIG_CUTOFF};
use crate::linalg::{
    eigen_sorted, eigen_sorted_real, haar_unitary, hermitian_defect, joint_diag_hermitian,
    max_abs_c, orthonormal_range, promote, promote_vec, substream, unitary_defect, CMat, CVec,
    RMat,
};
use crate::moments::{moments_from_atoms, Atom, AtomicMeasure, MomentTable, StripParams};
use crate::positivity::build_kernel_matrix;

/// Where a solution came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    /// Flat truncation: the measure is forced by the data.
    Flat,
    /// Extension parameter sampled from the commutant family.
    CommutantSample { seed: u64, index: usize },
    /// Extension parameter given as an explicit angle.
    AngleParameter { phi: f64 },
}

/// Moment-reproduction quality of a measure against a table.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ResidualReport {
    /// Number of table entries compared.
    pub count: usize,
    /// Largest relative error `|Σ w·x₁ᵐx₂ⁿ − s_{m,n}| / (1 + |s_{m,n}|)`.
    pub max_rel: f64,
    pub mean_rel: f64,
}

impl ResidualReport {
    fn empty() -> Self {
        ResidualReport {
            count: 0,
            max_rel: 0.0,
            mean_rel: 0.0,
        }
    }
}

/// One representing measure with its reproduction residuals and the
/// parameters that produced it.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralSolution {
    pub measure: AtomicMeasure,
    pub residuals: ResidualReport,
    pub provenance: Provenance,
}

/// Compares the moments of `measure` against `table` over the index
/// rectangle `0..range.0 × 0..range.1` (exclusive counts, clamped to the
/// table). An empty range yields an empty report.
pub fn verify_solution(
    measure: &AtomicMeasure,
    table: &MomentTable,
    range: (usize, usize),
) -> Result<ResidualReport> {
    let m_count = range.0.min(table.max_m() + 1);
    let n_count = range.1.min(table.max_n() + 1);
    if m_count == 0 || n_count == 0 {
        return Ok(ResidualReport::empty());
    }
    let got = moments_from_atoms(measure, m_count - 1, n_count - 1)?;
    let mut max_rel = 0.0_f64;
    let mut sum = 0.0_f64;
    for m in 0..m_count {
        for n in 0..n_count {
            let want = table.get(m, n);
            let rel = (got.get(m, n) - want).abs() / (1.0 + want.abs());
            max_rel = max_rel.max(rel);
            sum += rel;
        }
    }
    let count = m_count * n_count;
    Ok(ResidualReport {
        count,
        max_rel,
        mean_rel: sum / count as f64,
    })
}

fn psd_rank(g: &RMat) -> usize {
    if g.nrows() == 0 {
        return 0;
    }
    let (vals, _) = eigen_sorted_real(g);
    let max = vals[vals.len() - 1].max(0.0);
    if max <= 0.0 {
        return 0;
    }
    vals.iter().filter(|&&v| v > 1e-10 * max).count()
}

/// Kernel ranks at the order below `order` and at `order` itself. Equality
/// is the flatness condition under which atom extraction is exact.
pub fn flatness_ranks(table: &MomentTable, order: (usize, usize)) -> Result<(usize, usize)> {
    let outer = build_kernel_matrix(table, order)?;
    let inner_order = (order.0.saturating_sub(1), order.1.saturating_sub(1));
    let inner = build_kernel_matrix(table, inner_order)?;
    Ok((psd_rank(&inner), psd_rank(&outer)))
}

pub fn is_flat(table: &MomentTable, order: (usize, usize)) -> Result<bool> {
    let (inner, outer) = flatness_ranks(table, order)?;
    Ok(inner == outer)
}

/// Atoms and weights from the joint spectral decomposition of two commuting
/// Hermitian matrices: eigenvector `v` contributes the atom at the Rayleigh
/// pair `(⟨a v, v⟩, ⟨b v, v⟩)` with weight `|⟨x₀₀, v⟩|²`. Weights below
/// `1e−12` of the total are dropped; coinciding atoms are merged; atoms are
/// sorted by position.
fn spectral_measure(
    a: &CMat,
    b: &CMat,
    x00: &CVec,
    rng: &mut ChaCha12Rng,
) -> Result<AtomicMeasure> {
    let jd = joint_diag_hermitian(&[a, b], 1e-8, rng, 4)?;
    let total = x00.norm_squared();
    let mut atoms = Vec::new();
    for j in 0..a.nrows() {
        let v = jd.basis.column(j).into_owned();
        let w = v.dotc(x00).norm_sqr();
        if w <= 1e-12 * total {
            continue;
        }
        atoms.push(Atom {
            x1: jd.diags[0][j],
            x2: jd.diags[1][j],
            w,
        });
    }
    atoms.sort_by(|p, q| p.x1.total_cmp(&q.x1).then(p.x2.total_cmp(&q.x2)));
    let mut merged: Vec<Atom> = Vec::new();
    for atom in atoms {
        if let Some(last) = merged.last_mut() {
            let ctol = 1e-9 * (1.0 + atom.x1.abs() + atom.x2.abs());
            if (last.x1 - atom.x1).abs() <= ctol && (last.x2 - atom.x2).abs() <= ctol {
                let w = last.w + atom.w;
                last.x1 = (last.x1 * last.w + atom.x1 * atom.w) / w;
                last.x2 = (last.x2 * last.w + atom.x2 * atom.w) / w;
                last.w = w;
                continue;
            }
        }
        merged.push(atom);
    }
    AtomicMeasure::new(merged)
}

/// Recovers the unique representing measure of a flat truncated table.
///
/// Requires kernel positivity and rank stability between `order` and the
/// order below (flatness); then the compressed shifts commute, multiply
/// exactly, and their joint eigendecomposition returns the atoms. The
/// resulting measure is verified against the whole table and rejected if
/// the worst relative error exceeds `tol`.
///
/// The strip parameters are feasibility context for the caller; extraction
/// itself places atoms wherever the operators dictate (on-strip whenever
/// the table satisfies the strip positivity condition).
pub fn extract_atoms(
    table: &MomentTable,
    _strip: &StripParams,
    order: (usize, usize),
    tol: f64,
) -> Result<SpectralSolution> {
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::usage(format!(
            "residual tolerance must be finite and non-negative, got {tol}"
        )));
    }
    let (rank_inner, rank_outer) = flatness_ranks(table, order)?;
    if rank_inner != rank_outer {
        return Err(Error::NotFlat {
            rank_inner,
            rank_outer,
        });
    }
    let space = build_gns(table, order, DEFAULT_EIG_CUTOFF)?;
    let ops = build_operators(&space, table)?;
    let scale = 1.0 + ops.a.norm() * ops.b.norm();
    let comm = (&ops.a * &ops.b - &ops.b * &ops.a).norm();
    if comm > 1e-8 * scale {
        return Err(Error::NotCommuting { residual: comm });
    }
    let a = promote(&ops.a);
    let b = promote(&ops.b);
    let x00 = promote_vec(&space.x00());
    let mut rng = ChaCha12Rng::seed_from_u64(0x0a70_35ed);
    let measure = spectral_measure(&a, &b, &x00, &mut rng)?;
    let residuals = verify_solution(&measure, table, (table.max_m() + 1, table.max_n() + 1))?;
    if residuals.max_rel > tol {
        return Err(Error::ResidualTooLarge {
            residual: residuals.max_rel,
            tol,
        });
    }
    Ok(SpectralSolution {
        measure,
        residuals,
        provenance: Provenance::Flat,
    })
}

/// Samples unitaries commuting with a fixed Hermitian matrix (the
/// second-coordinate operator compressed to the defect subspace), by drawing
/// independent Haar-distributed blocks over its eigenvalue clusters.
#[derive(Debug, Clone)]
pub struct CommutantSampler {
    seed: u64,
    eigvecs: CMat,
    /// `(start, len)` runs of clustered eigenvalues in ascending order.
    blocks: Vec<(usize, usize)>,
}

impl CommutantSampler {
    pub fn new(b2: &CMat, seed: u64) -> Result<Self> {
        if b2.nrows() != b2.ncols() {
            return Err(Error::NotSquare {
                rows: b2.nrows(),
                cols: b2.ncols(),
            });
        }
        let p = b2.nrows();
        if p == 0 {
            return Ok(CommutantSampler {
                seed,
                eigvecs: CMat::zeros(0, 0),
                blocks: Vec::new(),
            });
        }
        let defect = hermitian_defect(b2);
        if defect > 1e-8 * (1.0 + max_abs_c(b2)) {
            return Err(Error::NotSymmetric { defect });
        }
        let (vals, vecs) = eigen_sorted(b2);
        let span = vals.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
        let ctol = 1e-10 * (1.0 + span);
        let mut blocks = Vec::new();
        let mut start = 0;
        for i in 1..p {
            if vals[i] - vals[i - 1] > ctol {
                blocks.push((start, i - start));
                start = i;
            }
        }
        blocks.push((start, p - start));
        Ok(CommutantSampler {
            seed,
            eigvecs: vecs,
            blocks,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigvecs.nrows()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Joint-eigenspace dimensions, in ascending-eigenvalue order.
    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|&(_, len)| len).collect()
    }

    /// The `index`-th sampled unitary; deterministic in `(seed, index)`.
    pub fn sample(&self, index: usize) -> CMat {
        let p = self.dim();
        let mut rng = substream(self.seed, "u2hat", index as u64);
        let mut d = CMat::zeros(p, p);
        for &(start, len) in &self.blocks {
            let u = haar_unitary(&mut rng, len);
            d.view_mut((start, start), (len, len)).copy_from(&u);
        }
        &self.eigvecs * d * self.eigvecs.adjoint()
    }
}

/// Everything needed to produce canonical solutions: the cyclic vector, the
/// partial first-coordinate shift, the total second-coordinate operator,
/// the defect data, and the base isometry between the defect subspaces.
#[derive(Debug, Clone)]
pub struct CanonicalFamily {
    pub x00: CVec,
    pub a_op: PartialHermitianOp,
    pub b: CMat,
    pub defects: DefectData,
    pub cayley: CayleyTransform,
    /// Coordinate matrix (defect-basis to defect-basis) of the base
    /// isometry: componentwise conjugation composed with the conjugation
    /// factor of the second-coordinate Cayley unitary on the defect space.
    pub u24_base: CMat,
    /// Second-coordinate operator compressed to the defect subspace.
    pub b2: CMat,
    /// How far the compressed second-coordinate Cayley unitary was from
    /// unitary before re-unitarization (a truncation diagnostic).
    pub reunitarization_defect: f64,
}

/// Builds the canonical-solution scaffolding from explicit parts: the
/// cyclic vector, a partial Hermitian operator, and a commuting total
/// Hermitian matrix.
pub fn family_from_parts(
    x00: CVec,
    a_op: PartialHermitianOp,
    b: CMat,
) -> Result<CanonicalFamily> {
    let r = a_op.dim;
    if b.nrows() != r || b.ncols() != r {
        return Err(Error::DimensionMismatch {
            expected: r * r,
            got: b.nrows() * b.ncols(),
        });
    }
    if x00.len() != r {
        return Err(Error::DimensionMismatch {
            expected: r,
            got: x00.len(),
        });
    }
    let b_defect = hermitian_defect(&b);
    if b_defect > 1e-10 * (1.0 + max_abs_c(&b)) {
        return Err(Error::NotSymmetric { defect: b_defect });
    }
    let defects = defect_subspaces(&a_op)?;
    if defects.n_plus != defects.n_minus {
        return Err(Error::UnequalDeficiency {
            n_plus: defects.n_plus,
            n_minus: defects.n_minus,
        });
    }
    let cayley = cayley_transform(&a_op)?;
    let p = defects.n_plus;
    let (u24_base, b2, reunitarization_defect) = if p == 0 {
        (CMat::zeros(0, 0), CMat::zeros(0, 0), 0.0)
    } else {
        let u_b = cayley_unitary(&b)?;
        // compress the second-coordinate Cayley unitary to the defect
        // subspace; truncation can push it slightly off unitary, so take the
        // polar unitary factor and record the correction
        let raw = defects.h2.adjoint() * &u_b * &defects.h2;
        let svd = raw.clone().svd(true, true);
        let u_polar = svd.u.clone().expect("svd vectors requested")
            * svd.v_t.clone().expect("svd vectors requested");
        let reunit = (&raw - &u_polar).norm();
        let (k2, _l2) = godic_lucenko_factor(&u_polar)?;
        // componentwise conjugation maps the defect space at -i onto the one
        // at +i; composing with the conjugation factor K makes the map linear
        let base = defects.h4.adjoint()
            * defects.h2.map(|z| z.conj())
            * k2.matrix().map(|z| z.conj());
        let defect = unitary_defect(&base);
        if defect > 1e-8 * (1.0 + p as f64) {
            return Err(Error::ConjugationMismatch { residual: defect });
        }
        let b2 = defects.h2.adjoint() * &b * &defects.h2;
        (base, b2, reunit)
    };
    Ok(CanonicalFamily {
        x00,
        a_op,
        b,
        defects,
        cayley,
        u24_base,
        b2,
        reunitarization_defect,
    })
}

/// Builds the partial Hermitian operator realized by the first-coordinate
/// shift on the exactly shiftable part of a GNS space.
pub fn shift_operator_model(space: &GnsSpace, ops: &OperatorBundle) -> Result<PartialHermitianOp> {
    let r = space.rank;
    let positions = space.a_domain();
    if positions.is_empty() {
        return PartialHermitianOp::new(CMat::zeros(r, 0), CMat::zeros(r, 0));
    }
    let mut raw = CMat::zeros(r, positions.len());
    for (j, &pos) in positions.iter().enumerate() {
        for i in 0..r {
            raw[(i, j)] = Complex::new(space.coords[(i, pos)], 0.0);
        }
    }
    let domain = orthonormal_range(&raw, 1e-12);
    let action = promote(&ops.a) * &domain;
    PartialHermitianOp::new(domain, action)
}

/// GNS construction plus canonical-family scaffolding for a truncated table.
pub fn canonical_family(table: &MomentTable, order: (usize, usize)) -> Result<CanonicalFamily> {
    let space = build_gns(table, order, DEFAULT_EIG_CUTOFF)?;
    let ops = build_operators(&space, table)?;
    let a_op = shift_operator_model(&space, &ops)?;
    let b = promote(&ops.b);
    let x00 = promote_vec(&space.x00());
    family_from_parts(x00, a_op, b)
}

impl CanonicalFamily {
    pub fn defect(&self) -> (usize, usize) {
        (self.defects.n_plus, self.defects.n_minus)
    }

    pub fn sampler(&self, seed: u64) -> Result<CommutantSampler> {
        CommutantSampler::new(&self.b2, seed)
    }

    /// The one-angle slice of the parameter family: `e^{iφ}` times the base
    /// isometry.
    pub fn angle_parameter(&self, phi: f64) -> CMat {
        &self.u24_base * Complex::from_polar(1.0, phi)
    }

    /// Extension matrix for one isometry parameter `u24` (in defect-basis
    /// coordinates): assemble the unitary extension and invert its Cayley
    /// transform.
    pub fn extension_from_u24(&self, u24: &CMat) -> Result<CMat> {
        let u = assemble_extension(&self.cayley, &self.defects, u24)?;
        inverse_cayley(&u)
    }

    /// Measure carried by the extension for one isometry parameter: joint
    /// spectral decomposition of the extended first-coordinate operator with
    /// the second-coordinate operator, weighted by the cyclic vector.
    pub fn measure_from_u24(&self, u24: &CMat, rng: &mut ChaCha12Rng) -> Result<AtomicMeasure> {
        let a_u = self.extension_from_u24(u24)?;
        spectral_measure(&a_u, &self.b, &self.x00, rng)
    }

    /// Ambient matrix of the first-coordinate operator when it has no
    /// defect (total domain).
    fn total_action(&self) -> CMat {
        &self.a_op.action * self.a_op.domain.adjoint()
    }
}

/// A batch of canonical solutions: the emitted measures plus notes for the
/// sample indices that had to be skipped.
#[derive(Debug, Clone)]
pub struct CanonicalBatch {
    pub defect: (usize, usize),
    pub solutions: Vec<SpectralSolution>,
    /// `(sample index, explanation)` for parameters that produced no
    /// solution at this truncation.
    pub skipped: Vec<(usize, String)>,
}

/// Samples `count` canonical solutions of the truncated problem.
///
/// When the compressed shift has no defect the data admits exactly one
/// canonical solution and it is returned alone, regardless of `count`.
/// Otherwise each sample draws a commutant unitary, composes it with the
/// base isometry, extends, and extracts the spectral measure; samples whose
/// extension has spectrum at 1, fails to diagonalize jointly with the
/// second-coordinate operator, strays off the strip, or misses the moment
/// data by more than `tol` are skipped with a note.
pub fn canonical_solutions(
    table: &MomentTable,
    strip: &StripParams,
    order: (usize, usize),
    seed: u64,
    count: usize,
    tol: f64,
) -> Result<CanonicalBatch> {
    let family = canonical_family(table, order)?;
    // entries the truncated operators reproduce exactly
    let exact_range = (order.0 + 1, order.1 + 1);
    let defect = family.defect();
    if defect == (0, 0) {
        let mut rng = substream(seed, "flat", 0);
        let measure = spectral_measure(&family.total_action(), &family.b, &family.x00, &mut rng)?;
        let residuals = verify_solution(&measure, table, exact_range)?;
        if residuals.max_rel > tol {
            return Err(Error::ResidualTooLarge {
                residual: residuals.max_rel,
                tol,
            });
        }
        return Ok(CanonicalBatch {
            defect,
            solutions: vec![SpectralSolution {
                measure,
                residuals,
                provenance: Provenance::Flat,
            }],
            skipped: Vec::new(),
        });
    }
    let sampler = family.sampler(seed)?;
    let mut solutions = Vec::new();
    let mut skipped = Vec::new();
    for index in 0..count {
        let u2hat = sampler.sample(index);
        let u24 = &family.u24_base * u2hat;
        let mut rng = substream(seed, "jdiag", index as u64);
        let measure = match family.measure_from_u24(&u24, &mut rng) {
            Ok(m) => m,
            Err(Error::SpectrumAtOne { gap }) => {
                skipped.push((
                    index,
                    format!("extension has unitary spectrum at 1 (gap {gap:.3e})"),
                ));
                continue;
            }
            Err(Error::JointDiagonalization { residual, .. }) => {
                skipped.push((
                    index,
                    format!(
                        "extension does not diagonalize jointly with the \
                         second-coordinate operator (residual {residual:.3e})"
                    ),
                ));
                continue;
            }
            Err(other) => return Err(other),
        };
        let off_strip = measure
            .atoms
            .iter()
            .map(|a| a.x2.abs())
            .fold(0.0_f64, f64::max);
        if off_strip > strip.half_width() + 1e-8 {
            skipped.push((
                index,
                format!(
                    "an atom left the strip (|x2| = {off_strip:.6} > {})",
                    strip.half_width()
                ),
            ));
            continue;
        }
        let residuals = verify_solution(&measure, table, exact_range)?;
        if residuals.max_rel > tol {
            skipped.push((
                index,
                format!(
                    "moment reproduction residual {:.3e} exceeds {tol:.3e}",
                    residuals.max_rel
                ),
            ));
            continue;
        }
        solutions.push(SpectralSolution {
            measure,
            residuals,
            provenance: Provenance::CommutantSample { seed, index },
        });
    }
    Ok(CanonicalBatch {
        defect,
        solutions,
        skipped,
    })
}
