use crate::error::{Error, Result};

const TABLE: &[(&str, f64)] = &[
    ("normal", 0.0),
    ("none", 0.0),
    ("mild", 30.0),
    ("moderate", 50.0),
    ("severe", 70.0),
    ("total occlusion", 100.0),
    ("totally occluded", 100.0),
    ("occluded", 100.0),
];

/// Maps a qualitative stenosis descriptor to a percentage.
pub fn map_qualitative(term: &str) -> Result<f64> {
    let t = super::aliases::normalize(term);
    TABLE
        .iter()
        .find(|(k, _)| *k == t)
        .map(|(_, v)| *v)
        .ok_or_else(|| Error::UnmappedDescriptor(term.to_string()))
}

/// Canonical descriptor for an anchor percentage, if there is one.
pub fn qualitative_for(pct: f64) -> Option<&'static str> {
    match pct {
        p if p == 0.0 => Some("normal"),
        p if p == 30.0 => Some("mild"),
        p if p == 50.0 => Some("moderate"),
        p if p == 70.0 => Some("severe"),
        p if p == 100.0 => Some("total occlusion"),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchors() {
        assert_eq!(map_qualitative("mild").unwrap(), 30.0);
        assert_eq!(map_qualitative("moderate").unwrap(), 50.0);
        assert_eq!(map_qualitative("Severe").unwrap(), 70.0);
        assert_eq!(map_qualitative("total occlusion").unwrap(), 100.0);
        assert_eq!(map_qualitative("normal").unwrap(), 0.0);
        assert!(matches!(map_qualitative("critical"), Err(Error::UnmappedDescriptor(_))));
    }

    #[test]
    fn remapping_rendered_output_is_idempotent() {
        for (term, _) in TABLE {
            let p = map_qualitative(term).unwrap();
            let back = qualitative_for(p).unwrap();
            assert_eq!(map_qualitative(back).unwrap(), p);
        }
    }
}
