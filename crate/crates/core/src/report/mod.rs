//! Line grammar for territory reports: parsing to segment labels, the
//! qualitative-descriptor map, and templated rendering of predictions.
//!
//! ```text
//! line    := alias ":" finding ("," finding)* ["#" comment]
//! finding := INT "%" ["stenosis"] | INT "-" INT "%" ["stenosis"]
//!          | QUALITATIVE ["stenosis"]
//!          | "calcification" GRADE | GRADE "calcification"
//!          | "thrombus" | "CTO"
//! ```
//!
//! Keywords are case-insensitive. Blank lines and `#` comments are ignored.

mod aliases;
mod parse;
mod qualitative;
mod render;

pub use aliases::{alias_table, lookup_segment, AliasTable};
pub use parse::{parse_report, ParseWarning, ParsedReport};
pub use qualitative::{map_qualitative, qualitative_for};
pub use render::{
    prediction_from_labels, render_labels, render_report, OperatingThresholds, SegmentPrediction, StudyPrediction,
};
