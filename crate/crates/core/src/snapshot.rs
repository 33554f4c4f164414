//! Checkpoint/restore of filter states in a versioned line-oriented text
//! format.
//!
//! Layout, one field per line, values space-separated and matrices
//! row-major:
//!
//! ```text
//! skewid-state 1
//! kind skew            # or: gaussian
//! n_ar 2
//! n_z 1
//! x <n_ar values>
//! p <n_ar*n_ar values>
//! delta <n_z*n_z values>    # skew only
//! v <n_z*n_z values>        # skew only
//! psi <n_z*n_z values>
//! nu <value>
//! ```
//!
//! Floats are written in exponent form with enough digits to round-trip
//! exactly.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::baseline::GaussianFilterState;
use crate::error::{Error, Result};
use crate::identifier::FilterState;
use crate::mvniw::MvniwParams;

const MAGIC: &str = "skewid-state";
const VERSION: u32 = 1;

/// A checkpointable state of either identification method.
#[derive(Debug, Clone)]
pub enum StateSnapshot {
    Skew(FilterState),
    Gaussian(GaussianFilterState),
}

/// Render a skew-filter state.
pub fn write_skew_state(state: &FilterState) -> String {
    let mut out = header("skew", state.n_ar(), state.n_z());
    push_vector(&mut out, "x", &state.x);
    push_matrix(&mut out, "p", &state.p);
    push_matrix(&mut out, "delta", &state.noise.delta_hat);
    push_matrix(&mut out, "v", &state.noise.v);
    push_matrix(&mut out, "psi", &state.noise.psi);
    let _ = writeln!(out, "nu {:e}", state.noise.nu);
    out
}

/// Render a Gaussian-baseline state.
pub fn write_gaussian_state(state: &GaussianFilterState) -> String {
    let mut out = header("gaussian", state.n_ar(), state.n_z());
    push_vector(&mut out, "x", &state.x);
    push_matrix(&mut out, "p", &state.p);
    push_matrix(&mut out, "psi", &state.psi);
    let _ = writeln!(out, "nu {:e}", state.nu);
    out
}

fn header(kind: &str, n_ar: usize, n_z: usize) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} {VERSION}");
    let _ = writeln!(out, "kind {kind}");
    let _ = writeln!(out, "n_ar {n_ar}");
    let _ = writeln!(out, "n_z {n_z}");
    out
}

fn push_vector(out: &mut String, name: &str, v: &DVector<f64>) {
    let _ = write!(out, "{name}");
    for x in v.iter() {
        let _ = write!(out, " {x:e}");
    }
    out.push('\n');
}

fn push_matrix(out: &mut String, name: &str, m: &DMatrix<f64>) {
    let _ = write!(out, "{name}");
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let _ = write!(out, " {:e}", m[(i, j)]);
        }
    }
    out.push('\n');
}

/// Parse a snapshot of either kind, re-validating every invariant.
pub fn read_state(text: &str) -> Result<StateSnapshot> {
    let mut parser = Parser::new(text);
    let (magic, version) = parser.pair("header")?;
    if magic != MAGIC {
        return Err(parser.fail(format!("expected `{MAGIC}` header, found `{magic}`")));
    }
    if version.parse::<u32>().map_err(|_| parser.fail("bad version"))? != VERSION {
        return Err(parser.fail(format!("unsupported snapshot version {version}")));
    }
    let (_, kind) = parser.named_pair("kind")?;
    let (_, n_ar) = parser.named_pair("n_ar")?;
    let (_, n_z) = parser.named_pair("n_z")?;
    let n_ar: usize = n_ar.parse().map_err(|_| parser.fail("bad n_ar"))?;
    let n_z: usize = n_z.parse().map_err(|_| parser.fail("bad n_z"))?;

    match kind.as_str() {
        "skew" => {
            let x = parser.vector("x", n_ar)?;
            let p = parser.matrix("p", n_ar, n_ar)?;
            let delta = parser.matrix("delta", n_z, n_z)?;
            let v = parser.matrix("v", n_z, n_z)?;
            let psi = parser.matrix("psi", n_z, n_z)?;
            let nu = parser.scalar("nu")?;
            let noise = MvniwParams::new(delta, v, psi, nu)?;
            Ok(StateSnapshot::Skew(FilterState::new(x, p, noise)?))
        }
        "gaussian" => {
            let x = parser.vector("x", n_ar)?;
            let p = parser.matrix("p", n_ar, n_ar)?;
            let psi = parser.matrix("psi", n_z, n_z)?;
            let nu = parser.scalar("nu")?;
            Ok(StateSnapshot::Gaussian(GaussianFilterState::new(
                x, p, psi, nu,
            )?))
        }
        other => Err(parser.fail(format!("unknown state kind `{other}`"))),
    }
}

struct Parser<'a> {
    lines: std::str::Lines<'a>,
    line_no: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            lines: text.lines(),
            line_no: 0,
        }
    }

    fn fail(&self, message: impl Into<String>) -> Error {
        Error::Data {
            line: self.line_no,
            message: message.into(),
        }
    }

    fn next_fields(&mut self, what: &str) -> Result<Vec<&'a str>> {
        loop {
            let line = self
                .lines
                .next()
                .ok_or_else(|| self.fail(format!("missing {what}")))?;
            self.line_no += 1;
            if !line.trim().is_empty() {
                return Ok(line.split_whitespace().collect());
            }
        }
    }

    fn pair(&mut self, what: &str) -> Result<(String, String)> {
        let fields = self.next_fields(what)?;
        if fields.len() != 2 {
            return Err(self.fail(format!("expected `{what}` with two fields")));
        }
        Ok((fields[0].to_string(), fields[1].to_string()))
    }

    fn named_pair(&mut self, name: &str) -> Result<(String, String)> {
        let (key, value) = self.pair(name)?;
        if key != name {
            return Err(self.fail(format!("expected field `{name}`, found `{key}`")));
        }
        Ok((key, value))
    }

    fn values(&mut self, name: &str, count: usize) -> Result<Vec<f64>> {
        let fields = self.next_fields(name)?;
        if fields.first() != Some(&name) {
            return Err(self.fail(format!("expected field `{name}`")));
        }
        if fields.len() != count + 1 {
            return Err(self.fail(format!(
                "field `{name}` needs {count} values, found {}",
                fields.len() - 1
            )));
        }
        fields[1..]
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| self.fail(format!("bad number `{f}` in `{name}`")))
            })
            .collect()
    }

    fn vector(&mut self, name: &str, len: usize) -> Result<DVector<f64>> {
        Ok(DVector::from_vec(self.values(name, len)?))
    }

    fn matrix(&mut self, name: &str, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
        let vals = self.values(name, rows * cols)?;
        Ok(DMatrix::from_fn(rows, cols, |i, j| vals[i * cols + j]))
    }

    fn scalar(&mut self, name: &str) -> Result<f64> {
        Ok(self.values(name, 1)?[0])
    }
}
