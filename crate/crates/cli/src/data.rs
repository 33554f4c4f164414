//! Measurement CSV and truth-sidecar file formats.

use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use skewid::harness::TruthConfig;
use skewid::{Error, Result};

/// Sidecar describing how a simulated data set was generated.
#[derive(Debug, Serialize, Deserialize)]
pub struct TruthSidecar {
    pub n_ar: usize,
    pub n_z: usize,
    pub steps: usize,
    pub seed: u64,
    pub config_hash: String,
    pub coefficients: Vec<f64>,
    pub noise: TruthConfig,
}

impl TruthSidecar {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Validation(format!("truth sidecar serialization: {e}")))?;
        json.push('\n');
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Data {
            line: e.line(),
            message: format!("truth sidecar {}: {e}", path.display()),
        })
    }
}

/// Render measurements as CSV: comment header, then `k,z1,...,zn` rows.
pub fn measurements_csv(comment: &str, zs: &[DVector<f64>]) -> String {
    let n_z = zs.first().map(|z| z.len()).unwrap_or(0);
    let mut out = String::new();
    out.push_str(comment);
    out.push('\n');
    out.push('k');
    for i in 1..=n_z {
        out.push_str(&format!(",z{i}"));
    }
    out.push('\n');
    for (k, z) in zs.iter().enumerate() {
        out.push_str(&format!("{}", k + 1));
        for v in z.iter() {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

/// Parse a measurement CSV, skipping `#` comments; the header row defines
/// the measurement dimension. Malformed rows are reported with their line
/// number.
pub fn parse_measurements(text: &str) -> Result<Vec<DVector<f64>>> {
    let mut n_z: Option<usize> = None;
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        match n_z {
            None => {
                if fields.first() != Some(&"k") || fields.len() < 2 {
                    return Err(Error::Data {
                        line: line_no,
                        message: "expected header `k,z1,...`".to_string(),
                    });
                }
                n_z = Some(fields.len() - 1);
            }
            Some(n) => {
                if fields.len() != n + 1 {
                    return Err(Error::Data {
                        line: line_no,
                        message: format!("expected {} fields, found {}", n + 1, fields.len()),
                    });
                }
                let mut z = DVector::zeros(n);
                for (i, f) in fields[1..].iter().enumerate() {
                    z[i] = f.parse::<f64>().map_err(|_| Error::Data {
                        line: line_no,
                        message: format!("bad number `{f}`"),
                    })?;
                }
                rows.push(z);
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::Data {
            line: 0,
            message: "no measurement rows found".to_string(),
        });
    }
    Ok(rows)
}
