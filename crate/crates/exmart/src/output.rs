//! Machine-readable output files: the per-step trace (CSV), alarms
//! (line-delimited JSON) and generated streams (CSV).
//!
//! Trace floats are printed with 12 significant digits; the underlying
//! formatter rounds ties to even. Stream features use the shortest exact
//! representation so a written stream parses back to bit-identical f64s.

use std::io::{self, Write};

use crate::detector::Alarm;
use crate::nonconformity::Sample;
use crate::pipeline::StepRecord;

/// Fixed trace header; column order is part of the format.
pub const TRACE_HEADER: &str = "step,p_value,increment,martingale,alpha_hat,beta_hat,alarm";

/// Formats with 12 significant digits: positional while the exponent fits,
/// scientific otherwise.
pub fn format_sig12(x: f64) -> String {
    format_sig(x, 12)
}

pub fn format_sig(x: f64, digits: usize) -> String {
    debug_assert!(digits >= 1);
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let exponent = x.abs().log10().floor() as i64;
    if exponent < -4 || exponent >= digits as i64 {
        format!("{:.*e}", digits - 1, x)
    } else {
        let decimals = (digits as i64 - 1 - exponent).max(0) as usize;
        format!("{x:.decimals$}")
    }
}

pub fn write_trace_header<W: Write>(out: &mut W) -> io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")
}

pub fn write_trace_record<W: Write>(out: &mut W, record: &StepRecord) -> io::Result<()> {
    writeln!(
        out,
        "{},{},{},{},{},{},{}",
        record.step,
        format_sig12(record.p_value),
        format_sig12(record.increment),
        format_sig12(record.martingale),
        format_sig12(record.alpha_hat),
        format_sig12(record.beta_hat),
        u8::from(record.alarm),
    )
}

/// One alarm as a single JSON line.
pub fn write_alarm<W: Write>(out: &mut W, alarm: &Alarm) -> io::Result<()> {
    let line = serde_json::to_string(alarm).expect("alarm serializes");
    writeln!(out, "{line}")
}

/// Header `f1,…,fd` for a generated stream.
pub fn write_stream_header<W: Write>(out: &mut W, dim: usize) -> io::Result<()> {
    let names: Vec<String> = (1..=dim).map(|d| format!("f{d}")).collect();
    writeln!(out, "{}", names.join(","))
}

/// One sample row; features keep their shortest exact representation.
pub fn write_stream_row<W: Write>(out: &mut W, sample: &Sample) -> io::Result<()> {
    let mut first = true;
    for x in sample.features() {
        if !first {
            write!(out, ",")?;
        }
        write!(out, "{x}")?;
        first = false;
    }
    writeln!(out)
}
