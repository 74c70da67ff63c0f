//! Structured output: the JSON report, the line-delimited run log and a
//! plain-text summary.
//!
//! Every float is written with 17 significant digits (`d.dddddddddddddddde±x`),
//! enough to round-trip an `f64`, so equal runs give equal bytes.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub tool_version: &'static str,
    pub scenario_hash: String,
    pub seed: u64,
    pub mode: &'static str,
    pub experiment: &'static str,
    pub results: Value,
    pub diagnostics: Vec<Value>,
}

pub fn scenario_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_float<W: ?Sized + Write>(w: &mut W, v: f64) -> io::Result<()> {
    if v.is_finite() {
        write!(w, "{v:.16e}")
    } else {
        w.write_all(b"null")
    }
}

/// Wraps another formatter, replacing float output.
struct Digits<F>(F);

macro_rules! forward {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(
            fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
                self.0.$name(w $(, $arg)*)
            }
        )*
    };
}

impl<F: Formatter> Formatter for Digits<F> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write_float(w, v)
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        write_float(w, v as f64)
    }

    forward!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        end_object_key(),
        begin_object_value(),
        end_object_value(),
    );
}

fn encode<T: Serialize, F: Formatter>(value: &T, formatter: F) -> Vec<u8> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Digits(formatter));
    value.serialize(&mut ser).expect("in-memory JSON serialization cannot fail");
    out
}

/// Indented JSON with a trailing newline.
pub fn to_pretty<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = encode(value, PrettyFormatter::with_indent(b"  "));
    out.push(b'\n');
    out
}

/// One compact JSON line, newline-terminated.
pub fn to_line<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = encode(value, CompactFormatter);
    out.push(b'\n');
    out
}

pub fn to_lines(values: &[Value]) -> Vec<u8> {
    values.iter().flat_map(to_line).collect()
}

/// `key: value` lines for the scalar entries of the results.
pub fn summary(report: &Report) -> String {
    let mut s = format!(
        "qrecords {}\nexperiment: {} ({})\nscenario: {}\nseed: {}\n",
        report.tool_version, report.experiment, report.mode, report.scenario_hash, report.seed
    );
    if let Value::Object(map) = &report.results {
        for (k, v) in map {
            let text = match v {
                Value::Number(n) => match n.as_f64() {
                    Some(f) if !n.is_i64() && !n.is_u64() => format!("{f:.16e}"),
                    _ => n.to_string(),
                },
                Value::Bool(b) => b.to_string(),
                Value::String(t) => t.clone(),
                _ => continue,
            };
            s.push_str(&format!("{k}: {text}\n"));
        }
    }
    s.push_str(&format!("diagnostics: {}\n", report.diagnostics.len()));
    s
}
