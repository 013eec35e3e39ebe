//! Result envelope and byte-stable JSON/CSV emission.

use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const TOOL: &str = "ringlink";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Floats as 17 significant digits in lowercase e-notation (`1.9340000000000000e14`).
/// Non-finite values never reach it: serde_json writes them as `null`.
struct Fixed17<F>(F);

macro_rules! delegate {
    ($($name:ident),* $(,)?) => {
        $(
            fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
                self.0.$name(w)
            }
        )*
    };
}

macro_rules! delegate_first {
    ($($name:ident),* $(,)?) => {
        $(
            fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
                self.0.$name(w, first)
            }
        )*
    };
}

impl<F: Formatter> Formatter for Fixed17<F> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    delegate!(begin_array, end_array, end_array_value, begin_object, end_object, end_object_key, begin_object_value, end_object_value);
    delegate_first!(begin_array_value, begin_object_key);
}

/// Indented JSON with fixed float formatting.
pub fn to_pretty_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Fixed17(PrettyFormatter::with_indent(b"  ")));
    value.serialize(&mut ser).expect("in-memory JSON serialization");
    out.push(b'\n');
    out
}

/// Compact JSON with fixed float formatting; the form that is hashed.
pub fn to_canonical_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Fixed17(serde_json::ser::CompactFormatter));
    value.serialize(&mut ser).expect("in-memory JSON serialization");
    out
}

pub fn config_hash(config: &Value) -> String {
    hex::encode(Sha256::digest(to_canonical_bytes(config)))
}

/// Rows of numbers under named columns; `NaN` marks a missing value.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Long-format records, one object per row.
    pub fn records(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, &v)| (c.to_string(), num(v)))
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|v| if v.is_finite() { format!("{v:.16e}") } else { String::new() })
                .collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

/// JSON number, or `null` when not finite.
pub fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

pub fn opt(v: Option<f64>) -> Value {
    v.map_or(Value::Null, num)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultEnvelope {
    pub tool: String,
    pub tool_version: String,
    pub experiment: String,
    pub config_sha256: String,
    pub config: Value,
    pub scalars: Map<String, Value>,
    pub outputs: Map<String, Value>,
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp_unix_s: Option<u64>,
}

impl ResultEnvelope {
    pub fn hash_matches(&self) -> bool {
        config_hash(&self.config) == self.config_sha256
    }

    pub fn scalar(&self, key: &str) -> Option<f64> {
        self.scalars.get(key).and_then(Value::as_f64)
    }

    pub fn records(&self) -> &[Value] {
        self.outputs
            .get("records")
            .and_then(Value::as_array)
            .map_or(&[], Vec::as_slice)
    }

    /// Column `key` of the records, `NaN` where absent.
    pub fn column(&self, key: &str) -> Vec<f64> {
        self.records()
            .iter()
            .map(|r| r.get(key).and_then(Value::as_f64).unwrap_or(f64::NAN))
            .collect()
    }
}

/// Write `bytes` to `path` via a sibling temporary file, so a failed run
/// never leaves a partial output behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io_err = |e: io::Error| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    std::fs::write(&tmp, bytes).map_err(io_err)?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        io_err(e)
    })
}
