use serde::Serialize;

use super::aliases::lookup_segment;
use super::qualitative::map_qualitative;
use crate::error::{Error, Result};
use crate::study::{Calcification, Dominance, Segment, SegmentFinding, SegmentLabelSet, Territory};

/// Non-fatal observation made while parsing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseWarning {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ParsedReport {
    pub labels: SegmentLabelSet,
    pub warnings: Vec<ParseWarning>,
}

#[derive(Default)]
struct LineFindings {
    percent: Option<f64>,
    qualitative: Option<f64>,
    calcification: Option<Calcification>,
    thrombus: bool,
    cto: bool,
}

fn col(line: &str, byte_offset: usize) -> usize {
    line[..byte_offset].chars().count() + 1
}

fn err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, column, message: message.into() }
}

fn parse_grade(tok: &str) -> Option<Calcification> {
    match tok {
        "none" | "no" => Some(Calcification::None),
        "mild" => Some(Calcification::Mild),
        "moderate" => Some(Calcification::Moderate),
        "severe" | "heavy" => Some(Calcification::Severe),
        _ => None,
    }
}

/// `"70%"` → 70, `"70-80%"` → 75 (range midpoint).
fn parse_percent(tok: &str) -> Option<std::result::Result<f64, String>> {
    let body = tok.strip_suffix('%')?;
    let int = |s: &str| -> std::result::Result<f64, String> {
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("'{tok}' is not an integer percentage"));
        }
        s.parse::<u32>().map(f64::from).map_err(|e| e.to_string())
    };
    let body = body.replace('–', "-");
    let value = match body.split_once('-') {
        Some((a, b)) => int(a).and_then(|a| int(b).map(|b| (a + b) / 2.0)),
        None => int(&body),
    };
    Some(value.and_then(|v| {
        if v > 100.0 {
            Err(format!("percentage {v} outside [0, 100]"))
        } else {
            Ok(v)
        }
    }))
}

fn parse_finding(raw: &str, acc: &mut LineFindings) -> std::result::Result<(), String> {
    let lower = raw.to_lowercase();
    let tokens: Vec<&str> = lower.split_whitespace().collect();
    match tokens.as_slice() {
        [] => Err("empty finding".into()),
        ["calcification", g] | [g, "calcification"] => {
            acc.calcification = Some(parse_grade(g).ok_or_else(|| format!("unknown calcification grade '{g}'"))?);
            Ok(())
        }
        ["thrombus"] => {
            acc.thrombus = true;
            Ok(())
        }
        ["cto"] => {
            acc.cto = true;
            Ok(())
        }
        [first, rest @ ..] if first.ends_with('%') => {
            if !(rest.is_empty() || rest == ["stenosis"]) {
                return Err(format!("unexpected text after '{first}'"));
            }
            acc.percent = Some(parse_percent(first).expect("ends with %")?);
            Ok(())
        }
        words => {
            let words = match words.split_last() {
                Some((&"stenosis", head)) if !head.is_empty() => head,
                _ => words,
            };
            let term = words.join(" ");
            acc.qualitative = Some(map_qualitative(&term).map_err(|e| e.to_string())?);
            Ok(())
        }
    }
}

/// Parses a report in the line grammar.
///
/// With `territory` set, every segment must belong to that territory under
/// `dominance`. A segment repeated on several lines keeps its last line and
/// records a warning.
pub fn parse_report(text: &str, territory: Option<Territory>, dominance: Dominance) -> Result<ParsedReport> {
    let mut out = ParsedReport::default();
    let mut seen: Vec<Segment> = Vec::new();
    for (i, full_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = full_line.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        let Some(colon) = line.find(':') else {
            let start = line.len() - line.trim_start().len();
            return Err(err(line_no, col(line, start), "expected '<segment>: <finding>'"));
        };
        let alias = &line[..colon];
        let alias_start = alias.len() - alias.trim_start().len();
        let segment = lookup_segment(alias.trim())
            .ok_or_else(|| err(line_no, col(line, alias_start), format!("unknown segment '{}'", alias.trim())))?;
        if let Some(t) = territory {
            if segment.territory(dominance) != t {
                return Err(err(
                    line_no,
                    col(line, alias_start),
                    format!("segment {segment} is not in the {t} territory"),
                ));
            }
        }
        let mut acc = LineFindings::default();
        let mut offset = colon + 1;
        for piece in line[colon + 1..].split(',') {
            let lead = piece.len() - piece.trim_start().len();
            parse_finding(piece.trim(), &mut acc).map_err(|m| err(line_no, col(line, offset + lead), m))?;
            offset += piece.len() + 1;
        }
        let finding = SegmentFinding {
            stenosis_pct: acc.percent.or(acc.qualitative),
            calcification: acc.calcification.unwrap_or_default(),
            thrombus: acc.thrombus,
            cto: acc.cto,
        };
        if seen.contains(&segment) {
            out.warnings.push(ParseWarning {
                line: line_no,
                message: format!("segment {segment} repeated; keeping this line"),
            });
        } else {
            seen.push(segment);
        }
        out.labels.insert(segment, finding).map_err(|e| err(line_no, 1, e.to_string()))?;
    }
    Ok(out)
}
