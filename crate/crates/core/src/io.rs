//! Serialization helpers and file formats.
//!
//! Matrices are written as row-major nested arrays. `serde_json` prints
//! every `f64` with the shortest representation that parses back to the same
//! bits, so a save/load cycle is lossless.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DualModel, PrimalModel};
use crate::training::TrainReport;

/// `serde(with = ...)` adapter: `DMatrix<f64>` as `[[row0...], [row1...]]`.
pub mod matrix_rows {
    use nalgebra::DMatrix;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, ser: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
        // An n×0 matrix would lose its row count as `[[], []]`; keep the shape explicit.
        (m.nrows(), m.ncols(), rows).serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<DMatrix<f64>, D::Error> {
        let (nrows, ncols, rows) = <(usize, usize, Vec<Vec<f64>>)>::deserialize(de)?;
        if rows.len() != nrows {
            return Err(D::Error::custom(format!(
                "matrix declares {nrows} rows but holds {}",
                rows.len()
            )));
        }
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
            return Err(D::Error::custom(format!(
                "matrix row {i} has {} entries, expected {ncols}",
                r.len()
            )));
        }
        Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
    }
}

/// `serde(with = ...)` adapter: `DVector<f64>` as a flat array.
pub mod vector {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &DVector<f64>, ser: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<DVector<f64>, D::Error> {
        Ok(DVector::from_vec(Vec::<f64>::deserialize(de)?))
    }
}

/// `serde(with = ...)` adapter for `Vec<DVector<f64>>`.
pub mod vector_list {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[DVector<f64>], ser: S) -> Result<S::Ok, S::Error> {
        let lists: Vec<&[f64]> = v.iter().map(|x| x.as_slice()).collect();
        lists.serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<DVector<f64>>, D::Error> {
        Ok(Vec::<Vec<f64>>::deserialize(de)?
            .into_iter()
            .map(DVector::from_vec)
            .collect())
    }
}

/// `serde(with = ...)` adapter for `Vec<DMatrix<f64>>`.
pub mod matrix_list {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Wrapped(#[serde(with = "super::matrix_rows")] DMatrix<f64>);

    pub fn serialize<S: Serializer>(v: &[DMatrix<f64>], ser: S) -> Result<S::Ok, S::Error> {
        let wrapped: Vec<Wrapped> = v.iter().cloned().map(Wrapped).collect();
        wrapped.serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<DMatrix<f64>>, D::Error> {
        Ok(Vec::<Wrapped>::deserialize(de)?.into_iter().map(|w| w.0).collect())
    }
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// A trained model as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "setting", rename_all = "snake_case")]
pub enum ModelFile {
    Primal {
        format_version: u32,
        model: PrimalModel,
    },
    Dual {
        format_version: u32,
        model: DualModel,
    },
}

impl From<PrimalModel> for ModelFile {
    fn from(model: PrimalModel) -> Self {
        ModelFile::Primal {
            format_version: MODEL_FORMAT_VERSION,
            model,
        }
    }
}

impl From<DualModel> for ModelFile {
    fn from(model: DualModel) -> Self {
        ModelFile::Dual {
            format_version: MODEL_FORMAT_VERSION,
            model,
        }
    }
}

impl ModelFile {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        let version = match &file {
            ModelFile::Primal { format_version, .. } | ModelFile::Dual { format_version, .. } => {
                *format_version
            }
        };
        if version != MODEL_FORMAT_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported model format_version {version} (expected {MODEL_FORMAT_VERSION})"
            )));
        }
        match &file {
            ModelFile::Primal { model, .. } => model.validate()?,
            ModelFile::Dual { model, .. } => model.validate()?,
        }
        Ok(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Shortest text that parses back to the same `f64`: integers without a
/// fractional part, exponent notation for very small or large magnitudes.
pub fn format_value(v: f64) -> String {
    let s = format!("{v:?}");
    match s.strip_suffix(".0") {
        Some(int) => int.to_string(),
        None => s,
    }
}

/// Serializes a training report.
pub fn report_to_json(report: &TrainReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)?)
}

/// Components CSV: `sample_index,h_1,…,h_s`.
pub fn components_csv(h: &DMatrix<f64>) -> String {
    let mut out = String::from("sample_index");
    for k in 1..=h.ncols() {
        let _ = write!(out, ",h_{k}");
    }
    out.push('\n');
    for (i, row) in h.row_iter().enumerate() {
        let _ = write!(out, "{i}");
        for v in row.iter() {
            let _ = write!(out, ",{}", format_value(*v));
        }
        out.push('\n');
    }
    out
}

/// Forecast CSV: `step,predicted[,truth]`, followed by an `# mse=` comment
/// line when a truth sequence is supplied.
pub fn forecast_csv(predicted: &[f64], truth: Option<&[f64]>) -> Result<String> {
    let mut out = String::new();
    match truth {
        None => {
            out.push_str("step,predicted\n");
            for (k, p) in predicted.iter().enumerate() {
                let _ = writeln!(out, "{},{}", k + 1, format_value(*p));
            }
        }
        Some(truth) => {
            if truth.len() < predicted.len() {
                return Err(Error::DimensionMismatch {
                    context: "forecast truth length",
                    expected: predicted.len(),
                    found: truth.len(),
                });
            }
            out.push_str("step,predicted,truth\n");
            for (k, (p, t)) in predicted.iter().zip(truth).enumerate() {
                let _ = writeln!(out, "{},{},{}", k + 1, format_value(*p), format_value(*t));
            }
            if !predicted.is_empty() {
                let err = crate::forecasting::mse(predicted, &truth[..predicted.len()])?;
                let _ = writeln!(out, "# mse={}", format_value(err));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Holder(#[serde(with = "matrix_rows")] DMatrix<f64>);

    #[test]
    fn matrix_is_row_major() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let json = serde_json::to_string(&Holder(m.clone())).unwrap();
        assert_eq!(json, "[2,3,[[1.0,2.0,3.0],[4.0,5.0,6.0]]]");
        let back: Holder = serde_json::from_str(&json).unwrap();
        assert_eq!(back.0, m);
    }

    #[test]
    fn ragged_matrix_rejected() {
        let err = serde_json::from_str::<Holder>("[2,2,[[1.0,2.0],[3.0]]]").unwrap_err();
        assert!(err.to_string().contains("row 1"), "{err}");
    }

    #[test]
    fn csv_layouts() {
        let h = DMatrix::from_row_slice(2, 2, &[0.5, -0.5, 0.25, 1.0]);
        assert_eq!(components_csv(&h), "sample_index,h_1,h_2\n0,0.5,-0.5\n1,0.25,1\n");
        assert_eq!(forecast_csv(&[], None).unwrap(), "step,predicted\n");
        let text = forecast_csv(&[1.0, 2.0], Some(&[2.0, 4.0])).unwrap();
        assert_eq!(text, "step,predicted,truth\n1,1,2\n2,2,4\n# mse=2.5\n");
    }

    #[test]
    fn value_formatting_round_trips() {
        assert_eq!(format_value(1.0), "1");
        assert_eq!(format_value(-2.5), "-2.5");
        assert_eq!(format_value(8.992806499463768e-15), "8.992806499463768e-15");
        for v in [0.1 + 0.2, 1e300, -3.0e-308, 123456.789] {
            assert_eq!(format_value(v).parse::<f64>().unwrap(), v);
        }
    }
}
