//! Python bindings: tables and measures cross the boundary as plain lists
//! and tuples, reports as dicts, complex entries as Python complex numbers.

use num_complex::Complex;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use stripmoment::complex_bridge::{
    check_complex_solvability, complex_to_real as bridge_c2r, real_to_complex as bridge_r2c,
    ComplexMomentTable,
};
use stripmoment::extension::{
    assemble_extension, cayley_transform, defect_subspaces, inverse_cayley, PartialHermitianOp,
};
use stripmoment::linalg::{haar_unitary, substream, CMat};
use stripmoment::solutions::{
    canonical_solutions, extract_atoms, verify_solution, Provenance, SpectralSolution,
};
use stripmoment::{
    check_solvability, moments_from_atoms, Atom, AtomicMeasure, CertificateSource, Error,
    MomentTable, SolvabilityReport, StripParams, Verdict,
};

fn py_err(e: Error) -> PyErr {
    match &e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn measure_from_py(atoms: Vec<(f64, f64, f64)>) -> PyResult<AtomicMeasure> {
    let atoms = atoms
        .into_iter()
        .map(|(x1, x2, w)| Atom { x1, x2, w })
        .collect();
    AtomicMeasure::new(atoms).map_err(py_err)
}

fn atoms_to_py(measure: &AtomicMeasure) -> Vec<(f64, f64, f64)> {
    measure.atoms.iter().map(|a| (a.x1, a.x2, a.w)).collect()
}

fn table_from_py(rows: Vec<Vec<f64>>) -> PyResult<MomentTable> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 {
        return Err(PyValueError::new_err("table needs at least one row and column"));
    }
    if rows.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err("table rows must have equal length"));
    }
    MomentTable::from_values(rows.len() - 1, cols - 1, rows.concat()).map_err(py_err)
}

fn table_to_py(table: &MomentTable) -> Vec<Vec<f64>> {
    (0..=table.max_m())
        .map(|m| (0..=table.max_n()).map(|n| table.get(m, n)).collect())
        .collect()
}

fn complex_table_from_py(rows: Vec<Vec<Complex<f64>>>) -> PyResult<ComplexMomentTable> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 {
        return Err(PyValueError::new_err("table needs at least one row and column"));
    }
    if rows.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err("table rows must have equal length"));
    }
    ComplexMomentTable::from_values(rows.len() - 1, cols - 1, rows.concat()).map_err(py_err)
}

fn complex_table_to_py(table: &ComplexMomentTable) -> Vec<Vec<Complex<f64>>> {
    (0..=table.max_m())
        .map(|m| (0..=table.max_n()).map(|n| table.get(m, n)).collect())
        .collect()
}

fn cmat_from_py(rows: Vec<Vec<Complex<f64>>>, what: &str) -> PyResult<CMat> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(PyValueError::new_err(format!("{what} rows must have equal length")));
    }
    Ok(CMat::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn cmat_to_py(m: &CMat) -> Vec<Vec<Complex<f64>>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn solvability_dict<'py>(
    py: Python<'py>,
    report: &SolvabilityReport,
) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("order", report.order)?;
    d.set_item("min_eig_g", report.min_eig_g)?;
    d.set_item("min_eig_s", report.min_eig_s)?;
    d.set_item("scale", report.scale)?;
    d.set_item("tol", report.tol)?;
    d.set_item("verdict", report.verdict.as_str())?;
    match &report.certificate {
        Some(cert) => {
            let cd = PyDict::new(py);
            cd.set_item(
                "source",
                match cert.source {
                    CertificateSource::Kernel => "kernel",
                    CertificateSource::Strip => "strip",
                },
            )?;
            cd.set_item("eigenvalue", cert.eigenvalue)?;
            cd.set_item("vector", cert.vector.clone())?;
            d.set_item("certificate", cd)?;
        }
        None => d.set_item("certificate", py.None())?,
    }
    Ok(d)
}

fn solution_dict<'py>(py: Python<'py>, sol: &SpectralSolution) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("atoms", atoms_to_py(&sol.measure))?;
    d.set_item("count", sol.residuals.count)?;
    d.set_item("max_rel", sol.residuals.max_rel)?;
    d.set_item("mean_rel", sol.residuals.mean_rel)?;
    let prov = PyDict::new(py);
    match &sol.provenance {
        Provenance::Flat => prov.set_item("kind", "flat")?,
        Provenance::CommutantSample { seed, index } => {
            prov.set_item("kind", "commutant_sample")?;
            prov.set_item("seed", *seed)?;
            prov.set_item("index", *index)?;
        }
        Provenance::AngleParameter { phi } => {
            prov.set_item("kind", "angle_parameter")?;
            prov.set_item("phi", *phi)?;
        }
    }
    d.set_item("provenance", prov)?;
    Ok(d)
}

/// Moments of an atomic measure: atoms are (x1, x2, w) triples, the result
/// is the (max_m+1) x (max_n+1) table of integrals of x1^m x2^n.
#[pyfunction]
fn moments(atoms: Vec<(f64, f64, f64)>, max_m: usize, max_n: usize) -> PyResult<Vec<Vec<f64>>> {
    let mu = measure_from_py(atoms)?;
    let table = moments_from_atoms(&mu, max_m, max_n).map_err(py_err)?;
    Ok(table_to_py(&table))
}

/// Solvability of the table on the strip |x2| <= r at order (d1, d2).
#[pyfunction]
#[pyo3(signature = (table, r, d1, d2, tol = 1e-10))]
fn check<'py>(
    py: Python<'py>,
    table: Vec<Vec<f64>>,
    r: f64,
    d1: usize,
    d2: usize,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let table = table_from_py(table)?;
    let strip = StripParams::new(r).map_err(py_err)?;
    let report = check_solvability(&table, &strip, (d1, d2), tol).map_err(py_err)?;
    solvability_dict(py, &report)
}

/// True when the verdict is feasible or marginal.
#[pyfunction]
#[pyo3(signature = (table, r, d1, d2, tol = 1e-10))]
fn is_solvable(table: Vec<Vec<f64>>, r: f64, d1: usize, d2: usize, tol: f64) -> PyResult<bool> {
    let table = table_from_py(table)?;
    let strip = StripParams::new(r).map_err(py_err)?;
    let report = check_solvability(&table, &strip, (d1, d2), tol).map_err(py_err)?;
    Ok(report.verdict != Verdict::Infeasible)
}

/// Recovers the unique representing measure of a flat table.
#[pyfunction]
#[pyo3(signature = (table, r, d1, d2, tol = 1e-8))]
fn extract<'py>(
    py: Python<'py>,
    table: Vec<Vec<f64>>,
    r: f64,
    d1: usize,
    d2: usize,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let table = table_from_py(table)?;
    let strip = StripParams::new(r).map_err(py_err)?;
    let solution = extract_atoms(&table, &strip, (d1, d2), tol).map_err(py_err)?;
    solution_dict(py, &solution)
}

/// Samples canonical representing measures of a truncated table.
#[pyfunction]
#[pyo3(signature = (table, r, d1, d2, seed, count, tol = 1e-8))]
#[allow(clippy::too_many_arguments)]
fn param_sample<'py>(
    py: Python<'py>,
    table: Vec<Vec<f64>>,
    r: f64,
    d1: usize,
    d2: usize,
    seed: u64,
    count: usize,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let table = table_from_py(table)?;
    let strip = StripParams::new(r).map_err(py_err)?;
    let batch = canonical_solutions(&table, &strip, (d1, d2), seed, count, tol).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("defect", batch.defect)?;
    let solutions = batch
        .solutions
        .iter()
        .map(|s| solution_dict(py, s))
        .collect::<PyResult<Vec<_>>>()?;
    d.set_item("solutions", solutions)?;
    d.set_item("skipped", batch.skipped)?;
    Ok(d)
}

/// Compares the moments of a measure against a table over its full range.
#[pyfunction]
fn verify<'py>(
    py: Python<'py>,
    atoms: Vec<(f64, f64, f64)>,
    table: Vec<Vec<f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let mu = measure_from_py(atoms)?;
    let table = table_from_py(table)?;
    let report = verify_solution(&mu, &table, (table.max_m() + 1, table.max_n() + 1))
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("count", report.count)?;
    d.set_item("max_rel", report.max_rel)?;
    d.set_item("mean_rel", report.mean_rel)?;
    Ok(d)
}

/// Real power moments to complex moments (integrals of z^m conj(z)^n).
#[pyfunction]
fn real_to_complex(table: Vec<Vec<f64>>) -> PyResult<Vec<Vec<Complex<f64>>>> {
    let table = table_from_py(table)?;
    Ok(complex_table_to_py(&bridge_r2c(&table)))
}

/// Complex moments back to real power moments.
#[pyfunction]
fn complex_to_real(table: Vec<Vec<Complex<f64>>>) -> PyResult<Vec<Vec<f64>>> {
    let table = complex_table_from_py(table)?;
    let real = bridge_c2r(&table).map_err(py_err)?;
    Ok(table_to_py(&real))
}

/// Solvability of the complex moment problem by reduction to the real one.
#[pyfunction]
#[pyo3(signature = (table, r, d1, d2, tol = 1e-10))]
fn check_complex<'py>(
    py: Python<'py>,
    table: Vec<Vec<Complex<f64>>>,
    r: f64,
    d1: usize,
    d2: usize,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let table = complex_table_from_py(table)?;
    let strip = StripParams::new(r).map_err(py_err)?;
    let report = check_complex_solvability(&table, &strip, (d1, d2), tol).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("order", report.order)?;
    d.set_item("degree", report.degree)?;
    d.set_item("hermitian_residual", report.hermitian_residual)?;
    d.set_item("consistency_residual", report.consistency_residual)?;
    d.set_item("verdict", report.verdict.as_str())?;
    d.set_item("reason", report.reason.clone())?;
    match &report.real_report {
        Some(real) => d.set_item("real_report", solvability_dict(py, real)?)?,
        None => d.set_item("real_report", py.None())?,
    }
    Ok(d)
}

/// Deficiency indices of the partial Hermitian operator given by orthonormal
/// `domain` columns and their images `action` (both as row-major matrices).
#[pyfunction]
fn deficiency(
    domain: Vec<Vec<Complex<f64>>>,
    action: Vec<Vec<Complex<f64>>>,
) -> PyResult<(usize, usize)> {
    let op = PartialHermitianOp::new(
        cmat_from_py(domain, "domain")?,
        cmat_from_py(action, "action")?,
    )
    .map_err(py_err)?;
    let defects = defect_subspaces(&op).map_err(py_err)?;
    Ok((defects.n_plus, defects.n_minus))
}

fn extend_impl<'py>(
    py: Python<'py>,
    domain: Vec<Vec<Complex<f64>>>,
    action: Vec<Vec<Complex<f64>>>,
    params: Vec<(Option<f64>, CMat)>,
) -> PyResult<Bound<'py, PyDict>> {
    let op = PartialHermitianOp::new(
        cmat_from_py(domain, "domain")?,
        cmat_from_py(action, "action")?,
    )
    .map_err(py_err)?;
    let defects = defect_subspaces(&op).map_err(py_err)?;
    let cayley = cayley_transform(&op).map_err(py_err)?;
    let mut emitted = Vec::new();
    let mut skipped = Vec::new();
    for (index, (phi, u24)) in params.into_iter().enumerate() {
        let unitary = assemble_extension(&cayley, &defects, &u24).map_err(py_err)?;
        match inverse_cayley(&unitary) {
            Ok(a_u) => {
                let entry = PyDict::new(py);
                entry.set_item("index", index)?;
                if let Some(phi) = phi {
                    entry.set_item("phi", phi)?;
                }
                let eigs = stripmoment::linalg::eigen_sorted(&a_u).0;
                entry.set_item("eigenvalues", eigs.iter().copied().collect::<Vec<f64>>())?;
                entry.set_item("matrix", cmat_to_py(&a_u))?;
                emitted.push(entry);
            }
            Err(Error::SpectrumAtOne { gap }) => {
                let entry = PyDict::new(py);
                entry.set_item("index", index)?;
                if let Some(phi) = phi {
                    entry.set_item("phi", phi)?;
                }
                entry.set_item("note", format!("unitary spectrum at 1 (gap {gap:.3e})"))?;
                skipped.push(entry);
            }
            Err(other) => return Err(py_err(other)),
        }
    }
    let d = PyDict::new(py);
    d.set_item("deficiency", (defects.n_plus, defects.n_minus))?;
    d.set_item("extensions", emitted)?;
    d.set_item("skipped", skipped)?;
    Ok(d)
}

/// Self-adjoint extensions for defect-space parameters e^{i phi} * I.
#[pyfunction]
fn extend_with_angles<'py>(
    py: Python<'py>,
    domain: Vec<Vec<Complex<f64>>>,
    action: Vec<Vec<Complex<f64>>>,
    phis: Vec<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let op = PartialHermitianOp::new(
        cmat_from_py(domain.clone(), "domain")?,
        cmat_from_py(action.clone(), "action")?,
    )
    .map_err(py_err)?;
    let defects = defect_subspaces(&op).map_err(py_err)?;
    let p = defects.n_plus;
    let params = phis
        .into_iter()
        .map(|phi| {
            let u = CMat::from_diagonal_element(p, p, Complex::from_polar(1.0, phi));
            (Some(phi), u)
        })
        .collect();
    extend_impl(py, domain, action, params)
}

/// Self-adjoint extensions for Haar-random defect-space parameters.
#[pyfunction]
fn extend_sampled<'py>(
    py: Python<'py>,
    domain: Vec<Vec<Complex<f64>>>,
    action: Vec<Vec<Complex<f64>>>,
    seed: u64,
    count: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let op = PartialHermitianOp::new(
        cmat_from_py(domain.clone(), "domain")?,
        cmat_from_py(action.clone(), "action")?,
    )
    .map_err(py_err)?;
    let defects = defect_subspaces(&op).map_err(py_err)?;
    let p = defects.n_plus;
    let params = (0..count)
        .map(|index| {
            let mut rng = substream(seed, "extend", index as u64);
            (None, haar_unitary(&mut rng, p))
        })
        .collect();
    extend_impl(py, domain, action, params)
}

#[pymodule]
fn stripmoment_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(moments, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(is_solvable, m)?)?;
    m.add_function(wrap_pyfunction!(extract, m)?)?;
    m.add_function(wrap_pyfunction!(param_sample, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(real_to_complex, m)?)?;
    m.add_function(wrap_pyfunction!(complex_to_real, m)?)?;
    m.add_function(wrap_pyfunction!(check_complex, m)?)?;
    m.add_function(wrap_pyfunction!(deficiency, m)?)?;
    m.add_function(wrap_pyfunction!(extend_with_angles, m)?)?;
    m.add_function(wrap_pyfunction!(extend_sampled, m)?)?;
    Ok(())
}
