//! Text formats for kernels.
//!
//! * matrix CSV: `n` lines of `n` comma-separated decimals, no header, LF
//!   newlines, no trailing comma
//! * matrix JSON: `{"n": int, "entries": [[...], ...]}`
//! * density JSON: `{"family": str, "params": {...}, "domain": [lo, hi], "signed": bool}`

use std::fmt::Write as _;

use super::{DensityKernel, DensitySpec, MatrixKernel};
use crate::error::{Error, Result};

pub fn parse_matrix_csv(text: &str) -> Result<MatrixKernel> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::invalid(format!("csv line {}: {e}", i + 1)))?;
        let row = record
            .iter()
            .enumerate()
            .map(|(j, field)| {
                field.trim().parse::<f64>().map_err(|_| {
                    Error::invalid(format!(
                        "csv line {} field {}: `{field}` is not a number",
                        i + 1,
                        j + 1
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    MatrixKernel::from_rows(rows)
}

pub fn parse_matrix_json(text: &str) -> Result<MatrixKernel> {
    serde_json::from_str(text).map_err(|e| Error::invalid(format!("matrix json: {e}")))
}

pub fn parse_density_spec(text: &str) -> Result<DensitySpec> {
    serde_json::from_str(text).map_err(|e| Error::invalid(format!("density spec: {e}")))
}

/// Matrix as CSV, floats in shortest round-trip form.
pub fn matrix_to_csv(k: &MatrixKernel) -> String {
    let mut out = String::new();
    for i in 0..k.n() {
        for (j, v) in k.row(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// A kernel read from a file: either a finite matrix or a density spec.
#[derive(Debug, Clone)]
pub enum KernelInput {
    Matrix(MatrixKernel),
    Density {
        spec: DensitySpec,
        kernel: DensityKernel,
    },
}

/// Sniffs the format: JSON objects with a `family` key are density specs,
/// other JSON is a matrix, anything else is matrix CSV.
pub fn parse_kernel(text: &str) -> Result<KernelInput> {
    let trimmed = text.trim_start();
    if !trimmed.starts_with('{') {
        return parse_matrix_csv(text).map(KernelInput::Matrix);
    }
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("json: {e}")))?;
    if value.get("family").is_some() {
        let spec: DensitySpec = serde_json::from_value(value)
            .map_err(|e| Error::invalid(format!("density spec: {e}")))?;
        let kernel = spec.build()?;
        Ok(KernelInput::Density { spec, kernel })
    } else {
        serde_json::from_value(value)
            .map(KernelInput::Matrix)
            .map_err(|e| Error::invalid(format!("matrix json: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_parses() {
        let k = parse_matrix_csv("1,2\n3,4").unwrap();
        assert_eq!(k.to_rows(), vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        let k = parse_matrix_csv("0.5,1e-3\n-2,4\n").unwrap();
        assert_eq!(k.get(0, 1), 1e-3);
    }

    #[test]
    fn csv_rejects_bad_input() {
        assert!(matches!(
            parse_matrix_csv("1,2\n3"),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            parse_matrix_csv("1,x\n3,4"),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            parse_matrix_csv("1,2,\n3,4,"),
            Err(Error::InvalidArgument(_))
        ));
        assert!(parse_matrix_csv("").is_err());
    }

    #[test]
    fn csv_writer_is_exact() {
        let k = MatrixKernel::from_rows(vec![vec![1.0, 0.1], vec![-3.5, 1e-20]]).unwrap();
        let text = matrix_to_csv(&k);
        assert_eq!(text, "1,0.1\n-3.5,0.00000000000000000001\n");
        assert_eq!(parse_matrix_csv(&text).unwrap(), k);
    }

    #[test]
    fn sniffing() {
        assert!(matches!(
            parse_kernel("1,2\n3,4\n").unwrap(),
            KernelInput::Matrix(_)
        ));
        assert!(matches!(
            parse_kernel(r#"{"n":1,"entries":[[2]]}"#).unwrap(),
            KernelInput::Matrix(_)
        ));
        assert!(matches!(
            parse_kernel(r#"{"family":"f_example"}"#).unwrap(),
            KernelInput::Density { .. }
        ));
        assert!(matches!(
            parse_kernel(r#"{"family":"bogus"}"#),
            Err(Error::InvalidArgument(_))
        ));
    }
}
