use std::collections::BTreeMap;

use coro_core::acquisition::{classify_view, matching_views, phase_sequence, Phase, ViewClass};
use coro_core::numerics::Rng;
use coro_core::study::{Artery, Equipment};

/// Table lookup written out band by band, independent of the crate's ranges.
fn oracle_view(p: i32, s: i32) -> ViewClass {
    let primary = match p {
        -45..=-16 => Some("RAO"),
        -15..=15 => Some("AP"),
        16..=45 => Some("LAO"),
        -110..=-70 => Some("RAO_LAT"),
        70..=110 => Some("LAO_LAT"),
        _ => None,
    };
    let secondary = match s {
        -45..=-16 => Some("caudal"),
        -15..=15 => Some("straight"),
        16..=45 => Some("cranial"),
        _ => None,
    };
    match (primary, secondary) {
        (Some("RAO"), Some("cranial")) => ViewClass::RaoCranial,
        (Some("AP"), Some("cranial")) => ViewClass::ApCranial,
        (Some("LAO"), Some("cranial")) => ViewClass::LaoCranial,
        (Some("RAO"), Some("straight")) => ViewClass::RaoStraight,
        (Some("AP"), Some("straight")) => ViewClass::Ap,
        (Some("RAO"), Some("caudal")) => ViewClass::RaoCaudal,
        (Some("AP"), Some("caudal")) => ViewClass::ApCaudal,
        (Some("LAO"), Some("caudal")) => ViewClass::LaoCaudal,
        (Some("LAO"), Some("straight")) => ViewClass::LaoStraight,
        (Some("LAO_LAT"), Some("straight")) => ViewClass::LaoLateral,
        (Some("RAO_LAT"), Some("straight")) => ViewClass::RaoLateral,
        _ => ViewClass::Other,
    }
}

#[test]
fn one_degree_grid_is_a_partition() {
    let mut counts: BTreeMap<ViewClass, usize> = BTreeMap::new();
    for p in -180..=180 {
        for s in -90..=90 {
            let (pf, sf) = (p as f64, s as f64);
            let m = matching_views(pf, sf);
            assert!(m.len() <= 1, "({p}, {s}) matches {m:?}");
            let got = classify_view(pf, sf).unwrap();
            assert_eq!(got, oracle_view(p, s), "({p}, {s})");
            *counts.entry(got).or_default() += 1;
        }
    }
    for c in ViewClass::ALL {
        assert!(counts.get(&c).copied().unwrap_or(0) > 0, "{c} never realised");
    }
    assert_eq!(counts.values().sum::<usize>(), 361 * 181);
}

#[test]
fn spot_values() {
    assert_eq!(classify_view(-30.0, 30.0).unwrap(), ViewClass::RaoCranial);
    assert_eq!(classify_view(0.0, 0.0).unwrap(), ViewClass::Ap);
    assert_eq!(classify_view(95.0, 0.0).unwrap(), ViewClass::LaoLateral);
}

fn random_sequence(rng: &mut Rng) -> Vec<(Artery, Equipment)> {
    let n = 1 + rng.below(20);
    (0..n)
        .map(|_| {
            let artery = [Artery::Lca, Artery::Rca, Artery::Other][rng.below(3)];
            let equipment = if rng.bernoulli(0.2) { [Equipment::Wire, Equipment::Device][rng.below(2)] } else { Equipment::None };
            (artery, equipment)
        })
        .collect()
}

#[test]
fn phase_machine_invariants_on_random_sequences() {
    let mut rng = Rng::new(17);
    for _ in 0..10_000 {
        let seq = random_sequence(&mut rng);
        let phases = phase_sequence(&seq);
        assert_eq!(phases.len(), seq.len());
        for artery in [Artery::Lca, Artery::Rca, Artery::Other] {
            let mut seen_equipment = false;
            for (&(a, e), &ph) in seq.iter().zip(&phases) {
                if a != artery {
                    continue;
                }
                seen_equipment |= e != Equipment::None;
                if seen_equipment {
                    assert_ne!(ph, Phase::Diagnostic, "{seq:?}");
                }
                assert_eq!(ph == Phase::Interventional, e != Equipment::None);
            }
            // Phases of one artery depend only on that artery's videos.
            let own: Vec<(Artery, Equipment)> = seq.iter().copied().filter(|&(a, _)| a == artery).collect();
            let alone = phase_sequence(&own);
            let within: Vec<Phase> =
                seq.iter().zip(&phases).filter(|((a, _), _)| *a == artery).map(|(_, &p)| p).collect();
            assert_eq!(alone, within);
        }
    }
}
