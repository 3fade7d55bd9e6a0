use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::labels::SegmentLabelSet;
use super::segment::{Dominance, Territory};
use crate::acquisition::{Phase, ViewClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Equipment {
    #[default]
    None,
    Wire,
    Device,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Artery {
    #[serde(rename = "LCA", alias = "lca")]
    Lca,
    #[serde(rename = "RCA", alias = "rca")]
    Rca,
    #[serde(rename = "other")]
    Other,
}

impl Artery {
    pub fn territory(self) -> Option<Territory> {
        match self {
            Artery::Lca => Some(Territory::Lca),
            Artery::Rca => Some(Territory::Rca),
            Artery::Other => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Artery::Lca => "LCA",
            Artery::Rca => "RCA",
            Artery::Other => "other",
        }
    }
}

/// One angiographic acquisition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoRecord {
    pub video_id: String,
    /// Acquisition time in seconds; only the ordering matters.
    pub acquired_at: f64,
    pub primary_angle_deg: f64,
    pub secondary_angle_deg: f64,
    pub fps: f64,
    pub frame_count: u32,
    pub contrast: bool,
    #[serde(default)]
    pub equipment: Equipment,
    pub artery: Artery,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub view_class: Option<ViewClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<Phase>,
    /// Row of the cohort embedding store holding this video's embedding.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding_ref: Option<usize>,
}

/// Report text per territory.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TerritoryReports {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lca: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rca: Option<String>,
}

impl TerritoryReports {
    pub fn get(&self, t: Territory) -> Option<&str> {
        match t {
            Territory::Lca => self.lca.as_deref(),
            Territory::Rca => self.rca.as_deref(),
        }
    }
}

/// Ground-truth findings per territory.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TerritoryLabels {
    #[serde(default)]
    pub lca: SegmentLabelSet,
    #[serde(default)]
    pub rca: SegmentLabelSet,
}

impl TerritoryLabels {
    pub fn get(&self, t: Territory) -> &SegmentLabelSet {
        match t {
            Territory::Lca => &self.lca,
            Territory::Rca => &self.rca,
        }
    }

    /// All 18 segments in one set.
    pub fn combined(&self) -> SegmentLabelSet {
        self.lca.merged(&self.rca)
    }
}

/// Rows of the text-embedding store, per territory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TerritoryRefs {
    pub lca: usize,
    pub rca: usize,
}

impl TerritoryRefs {
    pub fn get(&self, t: Territory) -> usize {
        match t {
            Territory::Lca => self.lca,
            Territory::Rca => self.rca,
        }
    }
}

/// One catheterisation study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRecord {
    pub study_id: String,
    pub patient_id: String,
    pub dominance: Dominance,
    /// Study time in seconds, used to order a patient's studies.
    #[serde(default)]
    pub performed_at: f64,
    pub videos: Vec<VideoRecord>,
    #[serde(default)]
    pub reports: TerritoryReports,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<TerritoryLabels>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_embedding_refs: Option<TerritoryRefs>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "val" | "validation" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            _ => Err(crate::Error::InvalidArgument(format!("unknown split '{s}'"))),
        }
    }
}

/// Patient → split assignment.
pub type SplitMap = BTreeMap<String, Split>;
