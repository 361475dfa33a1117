//! Report records and byte-stable emission.
//!
//! Every suite reduces to a flat list of [`Record`]s: one two-route
//! comparison, bound check, or measured point per record, carrying enough
//! context to audit the run offline. Emission fixes the field order, the
//! record order, and the numeric print format, so a report is byte-identical
//! across runs with equal inputs regardless of thread count.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::CliError;

/// One verification record.
#[derive(Debug, Clone)]
pub struct Record {
    /// The command that produced the record, e.g. `verify-voronoi`.
    pub suite: &'static str,
    /// Stable slug naming the check this record instantiates.
    pub anchor: &'static str,
    /// Human-readable input description (`a=3 q=7 Y=400`); no commas.
    pub case: String,
    /// First route / measured value.
    pub lhs: Complex64,
    /// Second route / reference value.
    pub rhs: Complex64,
    /// The quantity the check constrains (usually a relative error).
    pub metric: f64,
    /// The acceptance threshold for `metric`, declared tails included.
    pub bound: f64,
    pub pass: bool,
    /// Free-form provenance: calibrated-constant references, tails, errors.
    pub note: String,
}

impl Record {
    /// Shorthand for bound-style records where only a scalar is compared.
    pub fn scalar(
        suite: &'static str,
        anchor: &'static str,
        case: String,
        metric: f64,
        bound: f64,
        note: String,
    ) -> Self {
        Record {
            suite,
            anchor,
            case,
            lhs: Complex64::new(metric, 0.0),
            rhs: Complex64::new(bound, 0.0),
            metric,
            bound,
            pass: metric <= bound,
            note,
        }
    }

    /// A check that could not be evaluated at all counts as failed.
    pub fn broken(suite: &'static str, anchor: &'static str, case: String, error: String) -> Self {
        Record {
            suite,
            anchor,
            case,
            lhs: Complex64::new(0.0, 0.0),
            rhs: Complex64::new(0.0, 0.0),
            metric: f64::INFINITY,
            bound: 0.0,
            pass: false,
            note: error,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "csv" => Some(ReportFormat::Csv),
            "json" => Some(ReportFormat::Json),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        }
    }
}

pub const CSV_HEADER: &str = "suite,anchor,case,lhs_re,lhs_im,rhs_re,rhs_im,metric,bound,pass,note";

/// Artifact-wide numeric print format: 12 significant digits.
fn num(x: f64) -> String {
    format!("{x:.11e}")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn json_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn render_csv(records: &[Record]) -> String {
    let mut out = String::from(CSV_HEADER);
    for r in records {
        out.push('\n');
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            csv_field(r.suite),
            csv_field(r.anchor),
            csv_field(&r.case),
            num(r.lhs.re),
            num(r.lhs.im),
            num(r.rhs.re),
            num(r.rhs.im),
            num(r.metric),
            num(r.bound),
            r.pass,
            csv_field(&r.note),
        );
    }
    out.push('\n');
    out
}

fn render_json(records: &[Record]) -> String {
    let mut out = String::from("{\n\"records\": [\n");
    for (i, r) in records.iter().enumerate() {
        if i > 0 {
            out.push_str(",\n");
        }
        let _ = write!(
            out,
            "{{\"suite\":{},\"anchor\":{},\"case\":{},\"lhs_re\":{},\"lhs_im\":{},\"rhs_re\":{},\"rhs_im\":{},\"metric\":{},\"bound\":{},\"pass\":{},\"note\":{}}}",
            json_string(r.suite),
            json_string(r.anchor),
            json_string(&r.case),
            num(r.lhs.re),
            num(r.lhs.im),
            num(r.rhs.re),
            num(r.rhs.im),
            num(r.metric),
            num(r.bound),
            r.pass,
            json_string(&r.note),
        );
    }
    out.push_str("\n]\n}\n");
    out
}

/// Render the records and, when a path is given, also write them to disk.
///
/// Records must be nonempty: an empty report would silently certify nothing.
pub fn emit_report(
    records: &[Record],
    format: ReportFormat,
    path: Option<&Path>,
) -> Result<String, CliError> {
    if records.is_empty() {
        return Err(CliError::EmptyReport);
    }
    let text = match format {
        ReportFormat::Csv => render_csv(records),
        ReportFormat::Json => render_json(records),
    };
    if let Some(p) = path {
        std::fs::write(p, &text)?;
    }
    Ok(text)
}
