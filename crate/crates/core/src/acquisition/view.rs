use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Angiographic projection class.
///
/// Primary angle: negative is RAO, positive is LAO. Secondary angle:
/// negative is caudal, positive is cranial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ViewClass {
    #[serde(rename = "RAO_Cranial")]
    RaoCranial,
    #[serde(rename = "AP_Cranial")]
    ApCranial,
    #[serde(rename = "LAO_Cranial")]
    LaoCranial,
    #[serde(rename = "RAO_Straight")]
    RaoStraight,
    #[serde(rename = "AP")]
    Ap,
    #[serde(rename = "RAO_Caudal")]
    RaoCaudal,
    #[serde(rename = "AP_Caudal")]
    ApCaudal,
    #[serde(rename = "LAO_Caudal")]
    LaoCaudal,
    #[serde(rename = "LAO_Straight")]
    LaoStraight,
    #[serde(rename = "LAO_Lateral")]
    LaoLateral,
    #[serde(rename = "RAO_Lateral")]
    RaoLateral,
    #[serde(rename = "Other")]
    Other,
}

impl ViewClass {
    pub const ALL: [ViewClass; 12] = [
        ViewClass::RaoCranial,
        ViewClass::ApCranial,
        ViewClass::LaoCranial,
        ViewClass::RaoStraight,
        ViewClass::Ap,
        ViewClass::RaoCaudal,
        ViewClass::ApCaudal,
        ViewClass::LaoCaudal,
        ViewClass::LaoStraight,
        ViewClass::LaoLateral,
        ViewClass::RaoLateral,
        ViewClass::Other,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ViewClass::RaoCranial => "RAO_Cranial",
            ViewClass::ApCranial => "AP_Cranial",
            ViewClass::LaoCranial => "LAO_Cranial",
            ViewClass::RaoStraight => "RAO_Straight",
            ViewClass::Ap => "AP",
            ViewClass::RaoCaudal => "RAO_Caudal",
            ViewClass::ApCaudal => "AP_Caudal",
            ViewClass::LaoCaudal => "LAO_Caudal",
            ViewClass::LaoStraight => "LAO_Straight",
            ViewClass::LaoLateral => "LAO_Lateral",
            ViewClass::RaoLateral => "RAO_Lateral",
            ViewClass::Other => "Other",
        }
    }
}

impl fmt::Display for ViewClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Interval on one angle axis with explicit endpoint ownership.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleRange {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl AngleRange {
    const fn new(lo: f64, lo_closed: bool, hi: f64, hi_closed: bool) -> Self {
        Self { lo, hi, lo_closed, hi_closed }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }
}

// Endpoint ownership. The central band of each axis is closed on both
// sides; the flanking bands are open toward the centre and closed at their
// outer end. Shared endpoints therefore belong to the central band.
//
//   primary:   RAO [-45,-15)   AP [-15,15]   LAO (15,45]
//              RAO lateral [-110,-70]        LAO lateral [70,110]
//   secondary: caudal [-45,-15)  straight [-15,15]  cranial (15,45]
const RAO: AngleRange = AngleRange::new(-45.0, true, -15.0, false);
const AP: AngleRange = AngleRange::new(-15.0, true, 15.0, true);
const LAO: AngleRange = AngleRange::new(15.0, false, 45.0, true);
const RAO_LAT: AngleRange = AngleRange::new(-110.0, true, -70.0, true);
const LAO_LAT: AngleRange = AngleRange::new(70.0, true, 110.0, true);
const CAUDAL: AngleRange = AngleRange::new(-45.0, true, -15.0, false);
const STRAIGHT: AngleRange = AngleRange::new(-15.0, true, 15.0, true);
const CRANIAL: AngleRange = AngleRange::new(15.0, false, 45.0, true);

/// The eleven named classes as (class, primary range, secondary range).
pub const VIEW_TABLE: [(ViewClass, AngleRange, AngleRange); 11] = [
    (ViewClass::RaoCranial, RAO, CRANIAL),
    (ViewClass::ApCranial, AP, CRANIAL),
    (ViewClass::LaoCranial, LAO, CRANIAL),
    (ViewClass::RaoStraight, RAO, STRAIGHT),
    (ViewClass::Ap, AP, STRAIGHT),
    (ViewClass::RaoCaudal, RAO, CAUDAL),
    (ViewClass::ApCaudal, AP, CAUDAL),
    (ViewClass::LaoCaudal, LAO, CAUDAL),
    (ViewClass::LaoStraight, LAO, STRAIGHT),
    (ViewClass::LaoLateral, LAO_LAT, STRAIGHT),
    (ViewClass::RaoLateral, RAO_LAT, STRAIGHT),
];

/// Every named class whose ranges contain the angle pair. The table is a
/// partition, so this has at most one element; audits use it to check that.
pub fn matching_views(primary_deg: f64, secondary_deg: f64) -> Vec<ViewClass> {
    VIEW_TABLE
        .iter()
        .filter(|(_, p, s)| p.contains(primary_deg) && s.contains(secondary_deg))
        .map(|(c, _, _)| *c)
        .collect()
}

/// Classifies a projection; angle pairs outside every named class map to
/// [`ViewClass::Other`].
pub fn classify_view(primary_deg: f64, secondary_deg: f64) -> Result<ViewClass> {
    if !primary_deg.is_finite() || !secondary_deg.is_finite() {
        return Err(Error::InvalidAngle);
    }
    Ok(matching_views(primary_deg, secondary_deg).first().copied().unwrap_or(ViewClass::Other))
}
