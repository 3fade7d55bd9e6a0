use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// The 18 coronary segments used for every per-segment label and prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Segment {
    LeftMain,
    ProxLad,
    MidLad,
    DistLad,
    D1,
    D2,
    Ramus,
    ProxLcx,
    MidLcx,
    DistLcx,
    Lvp,
    Om1,
    Om2,
    ProxRca,
    MidRca,
    DistRca,
    Pda,
    Posterolateral,
}

pub const N_SEGMENTS: usize = 18;

impl Segment {
    pub const ALL: [Segment; N_SEGMENTS] = [
        Segment::LeftMain,
        Segment::ProxLad,
        Segment::MidLad,
        Segment::DistLad,
        Segment::D1,
        Segment::D2,
        Segment::Ramus,
        Segment::ProxLcx,
        Segment::MidLcx,
        Segment::DistLcx,
        Segment::Lvp,
        Segment::Om1,
        Segment::Om2,
        Segment::ProxRca,
        Segment::MidRca,
        Segment::DistRca,
        Segment::Pda,
        Segment::Posterolateral,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Segment> {
        Self::ALL.get(i).copied()
    }

    pub fn id(self) -> &'static str {
        match self {
            Segment::LeftMain => "left_main",
            Segment::ProxLad => "prox_lad",
            Segment::MidLad => "mid_lad",
            Segment::DistLad => "dist_lad",
            Segment::D1 => "d1",
            Segment::D2 => "d2",
            Segment::Ramus => "ramus",
            Segment::ProxLcx => "prox_lcx",
            Segment::MidLcx => "mid_lcx",
            Segment::DistLcx => "dist_lcx",
            Segment::Lvp => "lvp",
            Segment::Om1 => "om1",
            Segment::Om2 => "om2",
            Segment::ProxRca => "prox_rca",
            Segment::MidRca => "mid_rca",
            Segment::DistRca => "dist_rca",
            Segment::Pda => "pda",
            Segment::Posterolateral => "posterolateral",
        }
    }

    /// Human-readable name used in rendered reports.
    pub fn display_name(self) -> &'static str {
        match self {
            Segment::LeftMain => "Left main",
            Segment::ProxLad => "Proximal LAD",
            Segment::MidLad => "Mid LAD",
            Segment::DistLad => "Distal LAD",
            Segment::D1 => "First diagonal",
            Segment::D2 => "Second diagonal",
            Segment::Ramus => "Ramus intermedius",
            Segment::ProxLcx => "Proximal LCX",
            Segment::MidLcx => "Mid LCX",
            Segment::DistLcx => "Distal LCX",
            Segment::Lvp => "Left ventricular posterior",
            Segment::Om1 => "First obtuse marginal",
            Segment::Om2 => "Second obtuse marginal",
            Segment::ProxRca => "Proximal RCA",
            Segment::MidRca => "Mid RCA",
            Segment::DistRca => "Distal RCA",
            Segment::Pda => "Posterior descending",
            Segment::Posterolateral => "Posterolateral",
        }
    }

    /// Stenosis percentage at or above which the segment counts as
    /// significantly narrowed.
    pub fn significance_threshold(self) -> f64 {
        if self == Segment::LeftMain {
            50.0
        } else {
            70.0
        }
    }

    /// Territory the segment belongs to under the given dominance.
    ///
    /// Co-dominant hearts use the right-dominant assignment.
    pub fn territory(self, dominance: Dominance) -> Territory {
        match self {
            Segment::ProxRca | Segment::MidRca | Segment::DistRca => Territory::Rca,
            Segment::Pda | Segment::Posterolateral => match dominance {
                Dominance::Left => Territory::Lca,
                _ => Territory::Rca,
            },
            _ => Territory::Lca,
        }
    }
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Segment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        Segment::ALL
            .iter()
            .copied()
            .find(|seg| seg.id() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown segment id '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Territory {
    #[serde(rename = "LCA", alias = "lca")]
    Lca,
    #[serde(rename = "RCA", alias = "rca")]
    Rca,
}

impl Territory {
    pub const BOTH: [Territory; 2] = [Territory::Lca, Territory::Rca];

    pub fn as_str(self) -> &'static str {
        match self {
            Territory::Lca => "LCA",
            Territory::Rca => "RCA",
        }
    }

    /// Segments of this territory, in canonical order.
    pub fn segments(self, dominance: Dominance) -> Vec<Segment> {
        Segment::ALL
            .iter()
            .copied()
            .filter(|s| s.territory(dominance) == self)
            .collect()
    }
}

impl fmt::Display for Territory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Territory {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "lca" | "left" => Ok(Territory::Lca),
            "rca" | "right" => Ok(Territory::Rca),
            _ => Err(Error::InvalidArgument(format!("unknown territory '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dominance {
    Right,
    Left,
    Co,
    /// Accepted by the schema so it can be rejected with a clear error.
    Unknown,
}

impl FromStr for Dominance {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "right" => Ok(Dominance::Right),
            "left" => Ok(Dominance::Left),
            "co" | "codominant" | "co-dominant" => Ok(Dominance::Co),
            "unknown" => Ok(Dominance::Unknown),
            _ => Err(Error::InvalidArgument(format!("unknown dominance '{s}'"))),
        }
    }
}
