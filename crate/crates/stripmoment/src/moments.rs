//! Moment tables of measures on the horizontal strip `|x2| <= R`, together
//! with the two ways of producing them: finitely atomic measures and
//! densities integrated by Gauss-Legendre quadrature.
//!
//! The table entry at `(m, n)` is the power moment `∫ x1^m x2^n dμ`. All
//! moments of a positive measure on the strip are real; tables are stored as
//! `f64` and validated to be finite.

use crate::error::{Error, Result};
use serde::Serialize;

/// The strip `{(x1, x2) : |x2| <= R}` described by its half-width `R > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripParams {
    r: f64,
}

impl StripParams {
    pub fn new(r: f64) -> Result<Self> {
        if !r.is_finite() || r <= 0.0 {
            return Err(Error::InvalidStrip { r });
        }
        Ok(StripParams { r })
    }

    pub fn half_width(&self) -> f64 {
        self.r
    }

    /// Whether the point `(x1, x2)` lies on the strip.
    pub fn contains(&self, x2: f64) -> bool {
        x2.abs() <= self.r
    }
}

/// A point mass `w * δ_(x1, x2)` with `w > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub x1: f64,
    pub x2: f64,
    pub w: f64,
}

/// A finitely atomic positive measure on the plane.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct AtomicMeasure {
    pub atoms: Vec<Atom>,
}

impl AtomicMeasure {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        let measure = AtomicMeasure { atoms };
        measure.validate()?;
        Ok(measure)
    }

    /// Checks weights are positive and finite, coordinates finite, and no two
    /// atoms coincide exactly.
    pub fn validate(&self) -> Result<()> {
        if self.atoms.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        for (i, a) in self.atoms.iter().enumerate() {
            if !a.x1.is_finite() || !a.x2.is_finite() {
                return Err(Error::non_finite(format!("atom {i} position")));
            }
            if !a.w.is_finite() || a.w <= 0.0 {
                return Err(Error::NonpositiveWeight { index: i, w: a.w });
            }
        }
        for i in 0..self.atoms.len() {
            for j in (i + 1)..self.atoms.len() {
                if self.atoms[i].x1 == self.atoms[j].x1 && self.atoms[i].x2 == self.atoms[j].x2 {
                    return Err(Error::DuplicateAtom {
                        i,
                        j,
                        x1: self.atoms[i].x1,
                        x2: self.atoms[i].x2,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.w).sum()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Errors if any atom lies off the strip.
    pub fn check_on_strip(&self, strip: &StripParams) -> Result<()> {
        for (index, a) in self.atoms.iter().enumerate() {
            if !strip.contains(a.x2) {
                return Err(Error::AtomOutsideStrip {
                    index,
                    x2: a.x2,
                    r: strip.half_width(),
                });
            }
        }
        Ok(())
    }
}

/// Rectangular table of power moments `s_{m,n}` for `m <= max_m`, `n <= max_n`,
/// stored row-major with `m` as the row index.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    max_m: usize,
    max_n: usize,
    values: Vec<f64>,
}

impl MomentTable {
    pub fn zeros(max_m: usize, max_n: usize) -> Self {
        MomentTable {
            max_m,
            max_n,
            values: vec![0.0; (max_m + 1) * (max_n + 1)],
        }
    }

    /// Builds a table from row-major values; the length must be exactly
    /// `(max_m + 1) * (max_n + 1)` and every entry finite.
    pub fn from_values(max_m: usize, max_n: usize, values: Vec<f64>) -> Result<Self> {
        let expected = (max_m + 1) * (max_n + 1);
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: values.len(),
            });
        }
        let table = MomentTable {
            max_m,
            max_n,
            values,
        };
        table.check_finite()?;
        Ok(table)
    }

    pub fn from_fn(max_m: usize, max_n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut t = MomentTable::zeros(max_m, max_n);
        for m in 0..=max_m {
            for n in 0..=max_n {
                t.set(m, n, f(m, n));
            }
        }
        t
    }

    pub fn check_finite(&self) -> Result<()> {
        for m in 0..=self.max_m {
            for n in 0..=self.max_n {
                if !self.get(m, n).is_finite() {
                    return Err(Error::NonFiniteEntry { m, n });
                }
            }
        }
        Ok(())
    }

    pub fn max_m(&self) -> usize {
        self.max_m
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    /// Moment `s_{m,n}`. Panics if `(m, n)` is outside the table; use
    /// [`MomentTable::require`] first on untrusted orders.
    pub fn get(&self, m: usize, n: usize) -> f64 {
        assert!(
            m <= self.max_m && n <= self.max_n,
            "moment ({m}, {n}) outside table ({}, {})",
            self.max_m,
            self.max_n
        );
        self.values[m * (self.max_n + 1) + n]
    }

    pub fn set(&mut self, m: usize, n: usize, value: f64) {
        assert!(m <= self.max_m && n <= self.max_n);
        self.values[m * (self.max_n + 1) + n] = value;
    }

    /// Errors unless the table covers all orders up to `(need_m, need_n)`.
    pub fn require(&self, need_m: usize, need_n: usize) -> Result<()> {
        if need_m > self.max_m || need_n > self.max_n {
            return Err(Error::TableTooSmall {
                need_m,
                need_n,
                max_m: self.max_m,
                max_n: self.max_n,
            });
        }
        Ok(())
    }

    /// Row-major view of the raw values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The largest order `(d1, d2)` whose solvability check this table can
    /// feed: the check at `(d1, d2)` reads moments up to `(2 d1, 2 d2 + 2)`.
    /// `None` if `max_n < 2`.
    pub fn max_checkable_order(&self) -> Option<(usize, usize)> {
        if self.max_n < 2 {
            return None;
        }
        Some((self.max_m / 2, (self.max_n - 2) / 2))
    }
}

/// Moments of an atomic measure up to order `(max_m, max_n)`.
pub fn moments_from_atoms(
    measure: &AtomicMeasure,
    max_m: usize,
    max_n: usize,
) -> Result<MomentTable> {
    measure.validate()?;
    let mut table = MomentTable::zeros(max_m, max_n);
    for atom in &measure.atoms {
        let mut p1 = 1.0;
        for m in 0..=max_m {
            let mut term = atom.w * p1;
            for n in 0..=max_n {
                table.set(m, n, table.get(m, n) + term);
                term *= atom.x2;
            }
            p1 *= atom.x1;
        }
    }
    table.check_finite()?;
    Ok(table)
}

/// Moments of the measure `f(x1, x2) dx` on the box `[-x1_bound, x1_bound] x [-R, R]`,
/// computed with a tensor Gauss-Legendre rule of `nodes` points per axis.
///
/// Returns the moment table together with the discrete quadrature measure
/// that produced it, so downstream code can compare against an exactly
/// representable atomic stand-in. The rule is exact when `f` is a polynomial
/// of degree at most `2 * nodes - 1 - max(max_m, max_n)` on the box.
pub fn moments_from_density(
    f: impl Fn(f64, f64) -> f64,
    strip: &StripParams,
    x1_bound: f64,
    nodes: usize,
    max_m: usize,
    max_n: usize,
) -> Result<(MomentTable, AtomicMeasure)> {
    if nodes == 0 {
        return Err(Error::EmptyQuadrature);
    }
    if !x1_bound.is_finite() || x1_bound <= 0.0 {
        return Err(Error::non_finite(format!("integration bound {x1_bound}")));
    }
    let (t_nodes, t_weights) = gauss_legendre(nodes);
    let r = strip.half_width();
    let mut atoms = Vec::new();
    for (i, &ti) in t_nodes.iter().enumerate() {
        let x1 = x1_bound * ti;
        for (j, &tj) in t_nodes.iter().enumerate() {
            let x2 = r * tj;
            let value = f(x1, x2);
            if !value.is_finite() {
                return Err(Error::non_finite(format!("density at ({x1}, {x2})")));
            }
            if value < 0.0 {
                return Err(Error::NegativeDensity { x1, x2, value });
            }
            let w = x1_bound * r * t_weights[i] * t_weights[j] * value;
            if w > 0.0 {
                atoms.push(Atom { x1, x2, w });
            }
        }
    }
    let measure = AtomicMeasure::new(atoms)?;
    let table = moments_from_atoms(&measure, max_m, max_n)?;
    Ok((table, measure))
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`,
/// from the symmetric tridiagonal Jacobi matrix of the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut jacobi = nalgebra::DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let beta = k as f64 / ((4 * k * k - 1) as f64).sqrt();
        jacobi[(k - 1, k)] = beta;
        jacobi[(k, k - 1)] = beta;
    }
    let eig = jacobi.symmetric_eigen();
    let mut rule: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let node = eig.eigenvalues[j];
            let first = eig.eigenvectors[(0, j)];
            (node, 2.0 * first * first)
        })
        .collect();
    rule.sort_by(|a, b| a.0.total_cmp(&b.0));
    rule.into_iter().unzip()
}
