//! File formats: POVM JSON, matrix encodings, and the flat CSV view of a
//! JSON report.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use qig_core::measurement::Povm;
use qig_core::{ComplexMatrix, HermitianOperator, RealMatrix, C64};

use crate::error::{CliError, CliResult};

/// `{"dim", "p", "K", "elements"}`; each element is a `dim × dim` matrix of
/// `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PovmFile {
    pub dim: usize,
    pub p: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub elements: Vec<Vec<Vec<[f64; 2]>>>,
}

impl PovmFile {
    pub fn from_povm(povm: &Povm) -> Self {
        PovmFile {
            dim: povm.dim(),
            p: povm.p(),
            k: povm.outcomes(),
            elements: povm
                .elements()
                .iter()
                .map(|m| complex_rows(m.matrix()))
                .collect(),
        }
    }

    pub fn to_povm(&self) -> CliResult<Povm> {
        if self.elements.len() != self.k {
            return Err(CliError::Config(format!(
                "POVM file declares K = {} but lists {} elements",
                self.k,
                self.elements.len()
            )));
        }
        let local = local_dim(self.dim, self.p)?;
        let elements = self
            .elements
            .iter()
            .map(|rows| {
                let m = complex_matrix(rows, self.dim)?;
                Ok(HermitianOperator::new(m)?)
            })
            .collect::<CliResult<Vec<_>>>()?;
        Ok(Povm::new(elements, local, self.p)?)
    }

    /// SHA-256 of the compact JSON encoding.
    pub fn digest(&self) -> String {
        let text = serde_json::to_string(self).expect("POVM serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: invalid POVM file: {e}", path.display())))
    }
}

/// `dim = local^p` solved for `local`.
fn local_dim(dim: usize, p: usize) -> CliResult<usize> {
    if p == 0 || dim == 0 {
        return Err(CliError::Config("POVM dim and p must be positive".into()));
    }
    (1..=dim)
        .find(|&l| l.checked_pow(p as u32) == Some(dim))
        .ok_or_else(|| CliError::Config(format!("POVM dim {dim} is not a {p}-th power")))
}

pub fn complex_rows(m: &ComplexMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.rows())
        .map(|i| m.row(i).iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

pub fn complex_matrix(rows: &[Vec<[f64; 2]>], dim: usize) -> CliResult<ComplexMatrix> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(CliError::Config(format!("POVM element is not {dim}x{dim}")));
    }
    let data = rows
        .iter()
        .flatten()
        .map(|&[re, im]| C64::new(re, im))
        .collect();
    Ok(ComplexMatrix::from_vec(dim, dim, data)?)
}

pub fn real_rows(m: &RealMatrix) -> Vec<Vec<f64>> {
    m.to_rows()
}

/// One `path,value` row per JSON leaf. Numbers keep the JSON spelling, so the
/// CSV carries exactly the numeric content of the JSON report.
pub fn flatten_csv(value: &Value) -> String {
    let mut out = String::from("path,value\n");
    let mut rows = Vec::new();
    flatten(value, String::new(), &mut rows);
    for (path, v) in rows {
        let _ = writeln!(out, "{},{}", csv_field(&path), csv_field(&v));
    }
    out
}

fn flatten(value: &Value, path: String, rows: &mut Vec<(String, String)>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let p = if path.is_empty() {
                    k.clone()
                } else {
                    format!("{path}.{k}")
                };
                flatten(v, p, rows);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(v, format!("{path}[{i}]"), rows);
            }
        }
        Value::Null => rows.push((path, String::new())),
        Value::Bool(b) => rows.push((path, b.to_string())),
        Value::Number(n) => rows.push((path, n.to_string())),
        Value::String(s) => rows.push((path, s.clone())),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use qig_core::measurement::random_povm;
    use qig_core::Limits;

    #[test]
    fn povm_file_round_trips() {
        let povm = random_povm(2, 3, 4, &Limits::default()).unwrap();
        let file = PovmFile::from_povm(&povm);
        let text = serde_json::to_string(&file).unwrap();
        let back: PovmFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back, file);
        let again = back.to_povm().unwrap();
        assert_eq!(PovmFile::from_povm(&again), file);
    }

    #[test]
    fn povm_file_rejects_inconsistent_shapes() {
        let mut file = PovmFile::from_povm(&Povm::computational_basis(4));
        file.p = 3;
        assert!(file.to_povm().is_err());
        file.p = 2;
        assert!(file.to_povm().is_ok());
        file.k = 5;
        assert!(file.to_povm().is_err());
    }

    #[test]
    fn csv_rows_follow_json_leaves() {
        let v: Value =
            serde_json::from_str(r#"{"a": [1.5, {"b": null}], "c": "x,y", "d": 1e-8}"#).unwrap();
        let csv = flatten_csv(&v);
        assert_eq!(csv, "path,value\na[0],1.5\na[1].b,\nc,\"x,y\"\nd,1e-8\n");
    }
}
