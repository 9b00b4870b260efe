//! Report files: JSON with 17 significant digits per float, or a flat CSV.

use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::chen::{InequalityReport, TheoremId};
use crate::error::{Error, Result};
use crate::metric::DerivativeMode;
use crate::space_forms::{SpaceFormModel, StructureReport};
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            _ => Err(Error::InvalidArgument(format!("unknown report format `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub tool: String,
    pub version: String,
    pub config_name: String,
    pub config_hash: String,
    pub derivative_mode: DerivativeMode,
    pub tolerances: Tolerances,
    pub model: Option<SpaceFormModel>,
    pub theorems: Vec<TheoremId>,
    pub points: Vec<Vec<f64>>,
}

/// Validation residuals at one point. `errors` collects failures that
/// stopped a validation step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointValidation {
    pub point_index: usize,
    pub submersion_residual: Option<f64>,
    pub submersion_flagged: bool,
    pub frame_residual: Option<f64>,
    pub oneill_residual: Option<f64>,
    pub projector_jump: Option<f64>,
    pub structure: Option<StructureReport>,
    pub model_fit_residual: Option<f64>,
    pub model_fit_pass: Option<bool>,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremEntry {
    pub point_index: usize,
    pub theorem: TheoremId,
    pub report: Option<InequalityReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub metadata: RunMetadata,
    pub validation: Vec<PointValidation>,
    pub entries: Vec<TheoremEntry>,
}

/// Overall verdict of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    AllHold,
    Violated,
    Errors,
}

impl ReportFile {
    pub fn verdict(&self) -> Verdict {
        if self
            .entries
            .iter()
            .any(|e| e.report.as_ref().is_some_and(|r| !r.holds))
        {
            Verdict::Violated
        } else if self.entries.iter().any(|e| e.error.is_some()) {
            Verdict::Errors
        } else {
            Verdict::AllHold
        }
    }

    pub fn entry(&self, point_index: usize, theorem: TheoremId) -> Option<&TheoremEntry> {
        self.entries
            .iter()
            .find(|e| e.point_index == point_index && e.theorem == theorem)
    }
}

/// Render a float with 17 significant digits.
pub fn format_f64(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "NaN".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    let mag = v.abs().log10().floor() as i32;
    if (-5..16).contains(&mag) {
        let decimals = (16 - mag).max(1) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{v:.16e}")
    }
}

struct SigFormatter<'a> {
    pretty: PrettyFormatter<'a>,
}

impl Formatter for SigFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            w.write_all(format_f64(value).as_bytes())
        } else {
            w.write_all(b"null")
        }
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_object_value(w)
    }
}

/// Serialize any value as pretty JSON with 17-digit floats.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut buf,
        SigFormatter {
            pretty: PrettyFormatter::with_indent(b"  "),
        },
    );
    value.serialize(&mut ser)?;
    String::from_utf8(buf).map_err(|e| Error::Serialization(e.to_string()))
}

pub const CSV_COLUMNS: [&str; 8] = [
    "point_index",
    "theorem",
    "lhs",
    "rhs",
    "gap",
    "holds",
    "equality",
    "worst_equality_residual",
];

pub fn to_csv_string(report: &ReportFile) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS)?;
    for e in &report.entries {
        let (lhs, rhs, gap, holds, eq, worst) = match &e.report {
            Some(r) => (
                format_f64(r.lhs),
                format_f64(r.rhs),
                format_f64(r.gap),
                r.holds.to_string(),
                r.equality.to_string(),
                r.worst_equality_residual().map(format_f64).unwrap_or_default(),
            ),
            None => Default::default(),
        };
        w.write_record([e.point_index.to_string(), e.theorem.to_string(), lhs, rhs, gap, holds, eq, worst])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serialization(e.to_string()))
}

pub fn render(report: &ReportFile, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => to_json_string(report),
        ReportFormat::Csv => to_csv_string(report),
    }
}

pub fn emit_report(report: &ReportFile, format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    let text = render(report, format)?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn parse_report(text: &str) -> Result<ReportFile> {
    Ok(serde_json::from_str(text)?)
}
