//! Reference datasets bundled with the library and comparison against them.
//!
//! Each dataset is a JSON file compiled into the binary and pinned by its
//! SHA-256 digest. Rows of kind `ideal` or `bound` carry a tolerance and gate
//! a comparison. `measured` and `annotation` rows are reported but never gate.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowKind {
    Ideal,
    Bound,
    Measured,
    Annotation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceRow {
    pub quantity: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    /// Family parameter such as gamma or xi.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<f64>,
    /// Abscissa for curve rows (for example the violation a fidelity belongs to).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<f64>,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<[f64; 2]>,
    pub kind: RowKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceDataset {
    pub id: String,
    pub version: u32,
    pub caption: String,
    pub rows: Vec<ReferenceRow>,
}

struct Bundled {
    id: &'static str,
    json: &'static str,
    sha256: &'static str,
}

const BUNDLED: &[Bundled] = &[
    Bundled {
        id: "table1",
        json: include_str!("../data/table1.json"),
        sha256: "ec5baf51b7a108afb3461bc54ce27aec079d9e15b6812c24422a7e21332d55f7",
    },
    Bundled {
        id: "self-testing",
        json: include_str!("../data/self-testing.json"),
        sha256: "e02d737381a81cdab57c90c511c2d964222f4931264f012ef639a700e47bedc1",
    },
    Bundled {
        id: "self-testing-measured",
        json: include_str!("../data/self-testing-measured.json"),
        sha256: "9f6e2617c3665226dbc75606e18ce6c56768266fa7421165178f234353beba53",
    },
    Bundled {
        id: "witness",
        json: include_str!("../data/witness.json"),
        sha256: "a40e10fbf2e45b0cbccf2b740fa554a4cd7056813428d3e01c683ce030535081",
    },
    Bundled {
        id: "steering",
        json: include_str!("../data/steering.json"),
        sha256: "54982de5219f8a9cc2d4ddd006eb5e1946d69c3fdb5cd914a6afebf504b383b2",
    },
    Bundled {
        id: "randomness-1sdi",
        json: include_str!("../data/randomness-1sdi.json"),
        sha256: "787d0c096c84883f79f48f3d0e6661d10c57ae6ac66bea332bcebd43577f2222",
    },
    Bundled {
        id: "randomness-di",
        json: include_str!("../data/randomness-di.json"),
        sha256: "5824f5559abff63a921c7da627674c941cfdb2c30cc690ac02c458d167b2f959",
    },
    Bundled {
        id: "qkd",
        json: include_str!("../data/qkd.json"),
        sha256: "fb6f1fe4ec4a00d9eb3f3eba89ad93ae198b6b77165cba56bf84fb1790e45cc0",
    },
    Bundled {
        id: "diqkd",
        json: include_str!("../data/diqkd.json"),
        sha256: "a2b84cb5fbc911b06cad082ead424bc4caa03b5ec9ab0a8b041eb1292ffe749d",
    },
];

pub fn dataset_ids() -> Vec<&'static str> {
    BUNDLED.iter().map(|b| b.id).collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Parse a dataset after checking its digest against `expected`.
pub fn parse_dataset(json: &str, expected_sha256: &str) -> Result<ReferenceDataset> {
    let got = sha256_hex(json.as_bytes());
    if got != expected_sha256 {
        return Err(Error::InvalidInput(format!(
            "reference checksum mismatch: expected {expected_sha256}, got {got}"
        )));
    }
    serde_json::from_str(json).map_err(|e| Error::InvalidInput(format!("reference dataset: {e}")))
}

pub fn load_dataset(id: &str) -> Result<ReferenceDataset> {
    let b = BUNDLED
        .iter()
        .find(|b| b.id == id)
        .ok_or_else(|| Error::InvalidInput(format!("unknown reference dataset {id:?}")))?;
    let ds = parse_dataset(b.json, b.sha256)?;
    if ds.id != id {
        return Err(Error::InvalidInput(format!("dataset file {id} declares id {}", ds.id)));
    }
    Ok(ds)
}

/// One computed number to compare against a reference row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComputedValue {
    pub quantity: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<f64>,
    pub value: f64,
}

impl ComputedValue {
    pub fn new(quantity: &str, d: usize, value: f64) -> Self {
        ComputedValue {
            quantity: quantity.to_string(),
            d: Some(d),
            param: None,
            at: None,
            value,
        }
    }

    pub fn with_param(mut self, param: f64) -> Self {
        self.param = Some(param);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultSet {
    pub id: String,
    pub values: Vec<ComputedValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub quantity: String,
    pub d: Option<usize>,
    pub param: Option<f64>,
    pub kind: RowKind,
    pub reference: f64,
    pub computed: f64,
    pub delta: f64,
    pub tolerance: Option<f64>,
    /// `None` for rows that do not gate.
    pub passed: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub id: String,
    pub rows: Vec<ComparisonRow>,
    /// Gating reference rows with no computed counterpart.
    pub missing: usize,
    pub passed: bool,
}

fn same_param(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(x), Some(y)) => (x - y).abs() < 1e-6,
        _ => false,
    }
}

fn row_matches(r: &ReferenceRow, v: &ComputedValue) -> bool {
    r.quantity == v.quantity && r.d == v.d && same_param(r.param, v.param) && same_param(r.at, v.at)
}

/// Compare computed values with a dataset. Each computed value is paired with
/// the first reference row of the same quantity, d, param and abscissa.
pub fn compare_with_reference(results: &ResultSet, dataset: &ReferenceDataset) -> Result<ComparisonReport> {
    if results.id != dataset.id {
        return Err(Error::InvalidInput(format!(
            "results are for {:?}, dataset is {:?}",
            results.id, dataset.id
        )));
    }
    let mut rows = Vec::new();
    for v in &results.values {
        let Some(r) = dataset.rows.iter().find(|r| row_matches(r, v)) else {
            return Err(Error::InvalidInput(format!(
                "no reference row for {} (d = {:?}, param = {:?})",
                v.quantity, v.d, v.param
            )));
        };
        let delta = v.value - r.value;
        let gating = matches!(r.kind, RowKind::Ideal | RowKind::Bound);
        let passed = match (gating, r.tolerance) {
            (true, Some(t)) => Some(delta.abs() <= t),
            _ => None,
        };
        rows.push(ComparisonRow {
            quantity: v.quantity.clone(),
            d: v.d,
            param: v.param,
            kind: r.kind,
            reference: r.value,
            computed: v.value,
            delta,
            tolerance: r.tolerance,
            passed,
        });
    }
    let missing = dataset
        .rows
        .iter()
        .filter(|r| matches!(r.kind, RowKind::Ideal | RowKind::Bound))
        .filter(|r| !results.values.iter().any(|v| row_matches(r, v)))
        .count();
    let passed = rows.iter().all(|r| r.passed != Some(false));
    Ok(ComparisonReport {
        id: dataset.id.clone(),
        rows,
        missing,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_bundled_datasets_load() {
        for id in dataset_ids() {
            let ds = load_dataset(id).unwrap();
            assert!(!ds.rows.is_empty(), "{id}");
            for r in &ds.rows {
                if matches!(r.kind, RowKind::Ideal | RowKind::Bound) {
                    assert!(r.tolerance.is_some(), "{id} {}", r.quantity);
                }
            }
        }
        assert!(load_dataset("table9").is_err());
    }

    #[test]
    fn tampered_payload_is_rejected() {
        let b = &BUNDLED[0];
        let edited = b.json.replacen("2.828", "2.829", 1);
        assert!(matches!(parse_dataset(&edited, b.sha256), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn id_mismatch_is_invalid_input() {
        let ds = load_dataset("steering").unwrap();
        let rs = ResultSet {
            id: "table1".into(),
            values: vec![],
        };
        assert!(matches!(compare_with_reference(&rs, &ds), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn gating_uses_row_tolerance() {
        let ds = load_dataset("steering").unwrap();
        let good = ResultSet {
            id: "steering".into(),
            values: vec![
                ComputedValue::new("steering_lhs_bound", 2, 1.0 + 0.5f64.sqrt()),
                ComputedValue::new("steering_measured", 2, 1.5),
            ],
        };
        let rep = compare_with_reference(&good, &ds).unwrap();
        assert!(rep.passed);
        assert_eq!(rep.rows[1].passed, None);
        assert!((rep.rows[1].delta + 0.49).abs() < 1e-12);

        let bad = ResultSet {
            id: "steering".into(),
            values: vec![ComputedValue::new("steering_lhs_bound", 2, 1.8)],
        };
        assert!(!compare_with_reference(&bad, &ds).unwrap().passed);
    }

    #[test]
    fn unknown_quantity_is_rejected() {
        let ds = load_dataset("qkd").unwrap();
        let rs = ResultSet {
            id: "qkd".into(),
            values: vec![ComputedValue::new("key_rate_ideal", 3, 0.79)],
        };
        assert!(compare_with_reference(&rs, &ds).is_err());
    }
}
