use std::collections::HashMap;
use std::sync::OnceLock;

use crate::study::Segment;

const TABLE_SRC: &str = include_str!("../../data/segment_aliases.v1.txt");

/// Parsed alias table.
#[derive(Debug)]
pub struct AliasTable {
    pub version: u32,
    map: HashMap<String, Segment>,
}

impl AliasTable {
    pub fn lookup(&self, alias: &str) -> Option<Segment> {
        self.map.get(&normalize(alias)).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

pub(crate) fn normalize(s: &str) -> String {
    s.to_lowercase()
        .replace(['_', '-'], " ")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

fn build() -> AliasTable {
    let mut version = 0;
    let mut map = HashMap::new();
    for seg in Segment::ALL {
        map.insert(normalize(seg.id()), seg);
        map.insert(normalize(seg.display_name()), seg);
    }
    for line in TABLE_SRC.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, rest) = line.split_once(':').expect("alias table line without ':'");
        if key.trim() == "version" {
            version = rest.trim().parse().expect("alias table version");
            continue;
        }
        let seg: Segment = key.trim().parse().expect("alias table segment id");
        for alias in rest.split('|') {
            let prev = map.insert(normalize(alias), seg);
            assert!(prev.is_none_or(|p| p == seg), "alias '{alias}' maps to two segments");
        }
    }
    AliasTable { version, map }
}

pub fn alias_table() -> &'static AliasTable {
    static TABLE: OnceLock<AliasTable> = OnceLock::new();
    TABLE.get_or_init(build)
}

pub fn lookup_segment(alias: &str) -> Option<Segment> {
    alias_table().lookup(alias)
}
