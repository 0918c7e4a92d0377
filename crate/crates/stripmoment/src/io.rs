//! JSON serialization for moment tables, measures, complex tables, and
//! operator models.
//!
//! All floating-point numbers are written with 17 significant digits so that
//! every `f64` round-trips bit-exactly through its decimal form, and files
//! are written atomically (temp file + rename) so readers never observe a
//! partially written report.

use std::io::Write as _;
use std::path::Path;

use num_complex::Complex;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::complex_bridge::ComplexMomentTable;
use crate::error::{Error, Result};
use crate::extension::PartialHermitianOp;
use crate::linalg::CMat;
use crate::moments::{Atom, AtomicMeasure, MomentTable};

/// `serde_json` formatter that prints every `f64` in scientific notation
/// with 17 significant digits (1 leading + 16 fractional), enough to
/// reconstruct the exact bit pattern on parse.
#[derive(Clone, Copy, Default)]
struct SigDigitFormatter;

impl serde_json::ser::Formatter for SigDigitFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{:.16e}", value)
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{:.7e}", value)
    }
}

/// Serializes `value` as compact JSON with full-precision floats.
pub fn to_json_vec<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigDigitFormatter);
    value.serialize(&mut ser).map_err(|e| Error::Parse {
        path: "(in-memory value)".into(),
        message: e.to_string(),
    })?;
    Ok(out)
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let bytes = to_json_vec(value)?;
    Ok(String::from_utf8(bytes).expect("JSON serializer emits UTF-8"))
}

fn path_string(path: &Path) -> String {
    path.display().to_string()
}

/// Writes `value` as JSON to `path` through a sibling temp file and an
/// atomic rename, so a crash or error never leaves partial output behind.
pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = to_json_vec(value)?;
    bytes.push(b'\n');
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io_err = |source| Error::Io {
        path: path_string(path),
        source,
    };
    let mut tmp = tempfile::NamedTempFile::new_in(parent).map_err(io_err)?;
    tmp.write_all(&bytes).map_err(io_err)?;
    tmp.persist(path).map_err(|e| Error::Io {
        path: path_string(path),
        source: e.error,
    })?;
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path_string(path),
        source,
    })
}

fn parse_json<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        path: path_string(path),
        message: e.to_string(),
    })
}

/// A complex number on the wire: `{"re": ..., "im": ...}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ComplexEntry {
    pub re: f64,
    pub im: f64,
}

impl From<Complex<f64>> for ComplexEntry {
    fn from(z: Complex<f64>) -> Self {
        ComplexEntry { re: z.re, im: z.im }
    }
}

impl From<ComplexEntry> for Complex<f64> {
    fn from(e: ComplexEntry) -> Self {
        Complex::new(e.re, e.im)
    }
}

/// Renders a complex matrix as nested rows of `{"re","im"}` entries.
pub fn matrix_to_rows(m: &CMat) -> Vec<Vec<ComplexEntry>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].into()).collect())
        .collect()
}

/// Rebuilds a complex matrix from nested rows, requiring a consistent
/// rectangular shape.
pub fn rows_to_matrix(rows: &[Vec<ComplexEntry>]) -> Result<CMat> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    for row in rows {
        if row.len() != ncols {
            return Err(Error::DimensionMismatch {
                expected: ncols,
                got: row.len(),
            });
        }
    }
    Ok(CMat::from_fn(nrows, ncols, |i, j| rows[i][j].into()))
}

#[derive(Serialize, Deserialize)]
struct TableFile {
    max_m: usize,
    max_n: usize,
    values: Vec<Vec<f64>>,
}

pub fn read_table(path: &Path) -> Result<MomentTable> {
    let file: TableFile = parse_json(path, &read_text(path)?)?;
    if file.values.len() != file.max_m + 1 {
        return Err(Error::DimensionMismatch {
            expected: file.max_m + 1,
            got: file.values.len(),
        });
    }
    let mut flat = Vec::with_capacity((file.max_m + 1) * (file.max_n + 1));
    for (m, row) in file.values.iter().enumerate() {
        if row.len() < file.max_n + 1 {
            return Err(Error::MissingEntry { m, n: row.len() });
        }
        if row.len() > file.max_n + 1 {
            return Err(Error::DimensionMismatch {
                expected: file.max_n + 1,
                got: row.len(),
            });
        }
        flat.extend_from_slice(row);
    }
    MomentTable::from_values(file.max_m, file.max_n, flat)
}

pub fn write_table(path: &Path, table: &MomentTable) -> Result<()> {
    let values = (0..=table.max_m())
        .map(|m| (0..=table.max_n()).map(|n| table.get(m, n)).collect())
        .collect();
    write_json_atomic(
        path,
        &TableFile {
            max_m: table.max_m(),
            max_n: table.max_n(),
            values,
        },
    )
}

#[derive(Serialize, Deserialize)]
struct MeasureFile {
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    r: Option<f64>,
    atoms: Vec<AtomEntry>,
}

#[derive(Serialize, Deserialize)]
struct AtomEntry {
    x1: f64,
    x2: f64,
    w: f64,
}

/// A measure file: the atoms plus the optional strip half-width recorded
/// alongside them.
#[derive(Debug, Clone)]
pub struct MeasureSpec {
    pub r: Option<f64>,
    pub measure: AtomicMeasure,
}

pub fn read_measure(path: &Path) -> Result<MeasureSpec> {
    let file: MeasureFile = parse_json(path, &read_text(path)?)?;
    let atoms = file
        .atoms
        .into_iter()
        .map(|a| Atom {
            x1: a.x1,
            x2: a.x2,
            w: a.w,
        })
        .collect();
    Ok(MeasureSpec {
        r: file.r,
        measure: AtomicMeasure::new(atoms)?,
    })
}

pub fn write_measure(path: &Path, measure: &AtomicMeasure, r: Option<f64>) -> Result<()> {
    let atoms = measure
        .atoms
        .iter()
        .map(|a| AtomEntry {
            x1: a.x1,
            x2: a.x2,
            w: a.w,
        })
        .collect();
    write_json_atomic(path, &MeasureFile { r, atoms })
}

#[derive(Serialize, Deserialize)]
struct ComplexTableFile {
    max_m: usize,
    max_n: usize,
    values: Vec<Vec<ComplexEntry>>,
}

pub fn read_complex_table(path: &Path) -> Result<ComplexMomentTable> {
    let file: ComplexTableFile = parse_json(path, &read_text(path)?)?;
    if file.values.len() != file.max_m + 1 {
        return Err(Error::DimensionMismatch {
            expected: file.max_m + 1,
            got: file.values.len(),
        });
    }
    let mut flat = Vec::with_capacity((file.max_m + 1) * (file.max_n + 1));
    for (m, row) in file.values.iter().enumerate() {
        if row.len() < file.max_n + 1 {
            return Err(Error::MissingEntry { m, n: row.len() });
        }
        if row.len() > file.max_n + 1 {
            return Err(Error::DimensionMismatch {
                expected: file.max_n + 1,
                got: row.len(),
            });
        }
        flat.extend(row.iter().map(|&e| Complex::from(e)));
    }
    ComplexMomentTable::from_values(file.max_m, file.max_n, flat)
}

pub fn write_complex_table(path: &Path, table: &ComplexMomentTable) -> Result<()> {
    let values = (0..=table.max_m())
        .map(|m| {
            (0..=table.max_n())
                .map(|n| table.get(m, n).into())
                .collect()
        })
        .collect();
    write_json_atomic(
        path,
        &ComplexTableFile {
            max_m: table.max_m(),
            max_n: table.max_n(),
            values,
        },
    )
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    dim: usize,
    domain: Vec<Vec<ComplexEntry>>,
    action: Vec<Vec<ComplexEntry>>,
}

pub fn read_model(path: &Path) -> Result<PartialHermitianOp> {
    let file: ModelFile = parse_json(path, &read_text(path)?)?;
    let domain = rows_to_matrix(&file.domain)?;
    let action = rows_to_matrix(&file.action)?;
    if domain.nrows() != file.dim {
        return Err(Error::DimensionMismatch {
            expected: file.dim,
            got: domain.nrows(),
        });
    }
    if action.nrows() != file.dim {
        return Err(Error::DimensionMismatch {
            expected: file.dim,
            got: action.nrows(),
        });
    }
    PartialHermitianOp::new(domain, action)
}

pub fn write_model(path: &Path, op: &PartialHermitianOp) -> Result<()> {
    write_json_atomic(
        path,
        &ModelFile {
            dim: op.dim,
            domain: matrix_to_rows(&op.domain),
            action: matrix_to_rows(&op.action),
        },
    )
}
