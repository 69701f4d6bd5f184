//! Family file format: a single JSON document holding row-major matrices.
//!
//! Floats go through serde_json's shortest-round-trip encoder, so write →
//! read reproduces every entry bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FamilyMeta, MatrixFamily, SymMatrix};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct FamilyFile {
    version: u32,
    n: usize,
    d: usize,
    matrices: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    meta: Option<FamilyMeta>,
}

/// Serialize a family to the JSON document format.
pub fn family_to_json(family: &MatrixFamily) -> String {
    let file = FamilyFile {
        version: 1,
        n: family.len(),
        d: family.dim(),
        matrices: family
            .matrices()
            .iter()
            .map(|m| m.as_slice().to_vec())
            .collect(),
        meta: family.meta.clone(),
    };
    serde_json::to_string(&file).expect("family serialization cannot fail")
}

/// Parse a family from the JSON document format.
pub fn family_from_json(text: &str) -> Result<MatrixFamily> {
    let file: FamilyFile = serde_json::from_str(text).map_err(|e| Error::ParseError {
        context: format!("line {}, column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    if file.version != 1 {
        return Err(Error::ParseError {
            context: "version".into(),
            message: format!("unsupported version {}", file.version),
        });
    }
    if file.n == 0 || file.d == 0 {
        return Err(Error::ParseError {
            context: "header".into(),
            message: format!("degenerate family n={} d={}", file.n, file.d),
        });
    }
    if file.matrices.len() != file.n {
        return Err(Error::ShapeError(format!(
            "header says n={} but file holds {} matrices",
            file.n,
            file.matrices.len()
        )));
    }
    let mut matrices = Vec::with_capacity(file.n);
    for (i, entries) in file.matrices.iter().enumerate() {
        if entries.len() != file.d * file.d {
            return Err(Error::ShapeError(format!(
                "matrix {i} has {} entries, expected {}",
                entries.len(),
                file.d * file.d
            )));
        }
        matrices.push(SymMatrix::from_rows(file.d, entries)?);
    }
    let mut family = MatrixFamily::new(matrices)?;
    family.meta = file.meta;
    Ok(family)
}

pub fn write_family(path: &Path, family: &MatrixFamily) -> Result<()> {
    fs::write(path, family_to_json(family))?;
    Ok(())
}

pub fn read_family(path: &Path) -> Result<MatrixFamily> {
    let text = fs::read_to_string(path)?;
    family_from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{gen_family, FamilyKind};

    #[test]
    fn round_trip_is_bit_exact() {
        let fam = gen_family(FamilyKind::GaussianUnit, 4, 5, 99).unwrap();
        let text = family_to_json(&fam);
        let back = family_from_json(&text).unwrap();
        assert_eq!(back.len(), fam.len());
        for (a, b) in fam.matrices().iter().zip(back.matrices()) {
            assert_eq!(a.as_slice(), b.as_slice());
        }
        assert_eq!(back.meta, fam.meta);
        // and the re-serialization is byte-identical
        assert_eq!(family_to_json(&back), text);
    }

    #[test]
    fn empty_family_is_a_parse_error() {
        let r = family_from_json(r#"{"version":1,"n":0,"d":1,"matrices":[]}"#);
        assert!(matches!(r, Err(Error::ParseError { .. })));
    }

    #[test]
    fn hand_written_scalar_family() {
        let fam =
            family_from_json(r#"{"version":1,"n":1,"d":1,"matrices":[[2.0]]}"#).unwrap();
        assert_eq!(fam.len(), 1);
        assert_eq!(fam.per_spectral_norms()[0], 2.0);
    }

    #[test]
    fn dimension_mismatch_is_a_shape_error() {
        let r = family_from_json(r#"{"version":1,"n":1,"d":2,"matrices":[[1.0,0.0,0.0]]}"#);
        assert!(matches!(r, Err(Error::ShapeError(_))));
        let r = family_from_json(r#"{"version":1,"n":2,"d":1,"matrices":[[1.0]]}"#);
        assert!(matches!(r, Err(Error::ShapeError(_))));
    }

    #[test]
    fn malformed_json_reports_location() {
        let r = family_from_json("{\"version\":1,\n\"n\":oops}");
        match r {
            Err(Error::ParseError { context, .. }) => assert!(context.contains("line 2")),
            other => panic!("expected ParseError, got {other:?}"),
        }
    }
}
