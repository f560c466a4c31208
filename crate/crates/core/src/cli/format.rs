//! Text formats: expectation files, matrix files and JSON helpers.
//!
//! Floats are written with Rust's shortest round-trip formatting, so
//! parsing and re-formatting a file reproduces it byte for byte.
//!
//! Expectation file:
//!
//! ```text
//! # format=tomo-expectations/1
//! # n_qubits=2
//! # seed=7
//! IX,0.0123,0.05
//! IY,-0.004,0.05
//! ```
//!
//! Matrix file (one matrix row per line, `re,im` pairs separated by spaces):
//!
//! ```text
//! # format=tomo-matrix/1
//! # dim=2
//! 0.5,0.0 0.5,0.0
//! 0.5,0.0 0.5,0.0
//! ```

use std::collections::HashSet;

use serde::Serialize;

use crate::error::{Result, TomoError};
use crate::linalg::{ComplexMatrix, C64};
use crate::pauli::PauliString;
use crate::sim::ExpectationSet;

pub const EXPECTATION_FORMAT: &str = "tomo-expectations/1";
pub const MATRIX_FORMAT: &str = "tomo-matrix/1";

/// Header comments that are not interpreted, kept in order.
pub type Meta = Vec<(String, String)>;

#[derive(Clone, Debug, PartialEq)]
pub struct ExpectationFile {
    pub default_sigma: Option<f64>,
    pub meta: Meta,
    pub set: ExpectationSet,
}

impl ExpectationFile {
    pub fn new(set: ExpectationSet) -> Self {
        Self {
            default_sigma: None,
            meta: Vec::new(),
            set,
        }
    }

    pub fn meta_value(&self, key: &str) -> Option<&str> {
        lookup(&self.meta, key)
    }

    pub fn format(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# format={EXPECTATION_FORMAT}\n"));
        out.push_str(&format!("# n_qubits={}\n", self.set.n_qubits()));
        if let Some(s) = self.default_sigma {
            out.push_str(&format!("# default_sigma={s:?}\n"));
        }
        push_meta(&mut out, &self.meta);
        for (p, r) in self.set.iter() {
            out.push_str(&format!("{p},{:?},{:?}\n", r.value, r.sigma));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut n_qubits: Option<usize> = None;
        let mut default_sigma = None;
        let mut meta = Vec::new();
        let mut rows: Vec<(usize, PauliString, f64, Option<f64>)> = Vec::new();
        let mut seen = HashSet::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some((key, value)) = header_entry(line) {
                match key {
                    "format" => {
                        if value != EXPECTATION_FORMAT {
                            return Err(parse_err(
                                line_no,
                                format!("unsupported format {value:?}"),
                            ));
                        }
                    }
                    "n_qubits" => n_qubits = Some(parse_num(value, line_no)?),
                    "default_sigma" => default_sigma = Some(parse_num(value, line_no)?),
                    _ => meta.push((key.to_string(), value.to_string())),
                }
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if !(2..=3).contains(&fields.len()) {
                return Err(parse_err(line_no, "expected label,value,sigma".into()));
            }
            let label: PauliString = fields[0]
                .parse()
                .map_err(|_| parse_err(line_no, format!("invalid label {:?}", fields[0])))?;
            if !seen.insert(label.clone()) {
                return Err(parse_err(line_no, format!("duplicate label {label}")));
            }
            let value = parse_num(fields[1], line_no)?;
            let sigma = fields.get(2).map(|s| parse_num(s, line_no)).transpose()?;
            rows.push((line_no, label, value, sigma));
        }

        let n_qubits = n_qubits.ok_or_else(|| parse_err(0, "missing n_qubits header".into()))?;
        let mut set = ExpectationSet::new(n_qubits);
        for (line_no, label, value, sigma) in rows {
            let sigma = sigma
                .or(default_sigma)
                .ok_or_else(|| parse_err(line_no, "no sigma and no default_sigma".into()))?;
            set.insert(label, value, sigma)
                .map_err(|e| parse_err(line_no, e.to_string()))?;
        }
        Ok(Self {
            default_sigma,
            meta,
            set,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixFile {
    pub meta: Meta,
    pub matrix: ComplexMatrix,
}

impl MatrixFile {
    pub fn new(matrix: ComplexMatrix) -> Self {
        Self {
            meta: Vec::new(),
            matrix,
        }
    }

    pub fn format(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# format={MATRIX_FORMAT}\n"));
        out.push_str(&format!("# dim={}\n", self.matrix.dim()));
        push_meta(&mut out, &self.meta);
        for i in 0..self.matrix.dim() {
            let row: Vec<String> = self
                .matrix
                .row(i)
                .iter()
                .map(|z| format!("{:?},{:?}", z.re, z.im))
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut dim: Option<usize> = None;
        let mut meta = Vec::new();
        let mut data = Vec::new();
        let mut rows = 0;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some((key, value)) = header_entry(line) {
                match key {
                    "format" => {
                        if value != MATRIX_FORMAT {
                            return Err(parse_err(
                                line_no,
                                format!("unsupported format {value:?}"),
                            ));
                        }
                    }
                    "dim" => dim = Some(parse_num(value, line_no)?),
                    _ => meta.push((key.to_string(), value.to_string())),
                }
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            let d = dim.ok_or_else(|| parse_err(line_no, "dim header must precede rows".into()))?;
            let entries = line
                .split_whitespace()
                .map(|pair| {
                    let (re, im) = pair
                        .split_once(',')
                        .ok_or_else(|| parse_err(line_no, format!("expected re,im in {pair:?}")))?;
                    Ok(C64::new(parse_num(re, line_no)?, parse_num(im, line_no)?))
                })
                .collect::<Result<Vec<_>>>()?;
            if entries.len() != d {
                return Err(parse_err(
                    line_no,
                    format!("expected {d} entries, found {}", entries.len()),
                ));
            }
            data.extend(entries);
            rows += 1;
        }
        let d = dim.ok_or_else(|| parse_err(0, "missing dim header".into()))?;
        if rows != d {
            return Err(parse_err(0, format!("expected {d} rows, found {rows}")));
        }
        Ok(Self {
            meta,
            matrix: ComplexMatrix::from_row_major(d, data)?,
        })
    }
}

fn lookup<'a>(meta: &'a Meta, key: &str) -> Option<&'a str> {
    meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

fn push_meta(out: &mut String, meta: &Meta) {
    for (k, v) in meta {
        out.push_str(&format!("# {k}={v}\n"));
    }
}

/// `# key=value` header line.
fn header_entry(line: &str) -> Option<(&str, &str)> {
    let body = line.strip_prefix('#')?.trim();
    let (k, v) = body.split_once('=')?;
    let k = k.trim();
    if k.is_empty() || k.contains(char::is_whitespace) {
        return None;
    }
    Some((k, v.trim()))
}

fn parse_num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| parse_err(line, format!("invalid number {s:?}")))
}

fn parse_err(line: usize, message: String) -> TomoError {
    TomoError::Parse { line, message }
}

/// Rounds to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

pub(crate) fn ser_f64<S: serde::Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(round_sig(*x))
}

pub(crate) fn ser_opt_f64<S: serde::Serializer>(
    x: &Option<f64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_some(&round_sig(*v)),
        None => s.serialize_none(),
    }
}

pub(crate) fn ser_vec_f64<S: serde::Serializer>(
    x: &[f64],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(x.len()))?;
    for v in x {
        seq.serialize_element(&round_sig(*v))?;
    }
    seq.end()
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types always serialize");
    s.push('\n');
    s
}
