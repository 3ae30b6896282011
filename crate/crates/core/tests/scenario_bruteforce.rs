use std::collections::BTreeMap;

use nightcast_core::scenario::missing_set;
use nightcast_core::{
    derive_nonvoters, generate_synthetic, make_scenario, Dataset, DeclarationState, Error,
    PartySet, StationRecord, SynthSpec,
};
use proptest::prelude::*;

fn dataset(electorates: &[u64]) -> Dataset {
    let recs = electorates
        .iter()
        .enumerate()
        .map(|(i, &e)| StationRecord {
            id: format!("s{i}"),
            name: String::new(),
            electorate_ref: e,
            electorate_cur: e,
            ref_votes: vec![e / 2],
            cur_votes: Some(vec![e / 3]),
            declared_rank: None,
        })
        .collect();
    Dataset::new(
        PartySet::new(&["A"], &["P"]).unwrap(),
        recs,
        BTreeMap::new(),
    )
    .unwrap()
}

/// Smallest achievable distance to the target over all subsets.
fn best_distance(electorates: &[u64], target: f64) -> (f64, u32) {
    let n = electorates.len();
    let mut best = (f64::INFINITY, 0);
    for mask in 0u32..(1 << n) {
        let s: u64 = (0..n)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| electorates[i])
            .sum();
        let d = (s as f64 - target).abs();
        if d < best.0 {
            best = (d, mask);
        }
    }
    best
}

#[test]
fn derive_nonvoters_examples() {
    assert_eq!(derive_nonvoters(&[60, 40], 200).unwrap(), vec![60, 40, 100]);
    assert_eq!(derive_nonvoters(&[0, 0], 50).unwrap(), vec![0, 0, 50]);
    assert_eq!(derive_nonvoters(&[30, 30], 60).unwrap(), vec![30, 30, 0]);
    assert!(matches!(
        derive_nonvoters(&[30, 31], 60),
        Err(Error::NegativeNonvoters { .. })
    ));
}

#[test]
fn late_city_example() {
    let e = [100, 100, 100, 700];
    let ds = dataset(&e);
    let (d, mask) = best_distance(&e, 0.7 * 1000.0);
    assert_eq!((d, mask), (0.0, 0b1000));
    let decl = make_scenario(&ds, 0.7, 9).unwrap();
    let declared: Vec<&str> = decl.declared_ids().collect();
    assert_eq!(declared, vec!["s0", "s1", "s2"]);
}

#[test]
fn extreme_fractions() {
    let ds = dataset(&[10, 20, 30]);
    assert_eq!(make_scenario(&ds, 0.0, 1).unwrap().len(), 3);
    assert!(make_scenario(&ds, 1.0, 1).unwrap().is_empty());
    assert!(make_scenario(&ds, 1.5, 1).is_err());
}

#[test]
fn requires_current_votes() {
    let recs = vec![
        StationRecord {
            id: "a".into(),
            electorate_ref: 10,
            electorate_cur: 10,
            ref_votes: vec![1],
            cur_votes: None,
            ..Default::default()
        },
        StationRecord {
            id: "b".into(),
            electorate_ref: 10,
            electorate_cur: 10,
            ref_votes: vec![1],
            cur_votes: Some(vec![2]),
            ..Default::default()
        },
    ];
    let ds = Dataset::new(
        PartySet::new(&["A"], &["P"]).unwrap(),
        recs,
        BTreeMap::new(),
    )
    .unwrap();
    assert!(matches!(
        make_scenario(&ds, 0.5, 0),
        Err(Error::MissingCurrentVotes(id)) if id == "a"
    ));
}

#[test]
fn synthetic_vectors_sum_to_electorate() {
    let syn = generate_synthetic(&SynthSpec {
        noise_sd: 4.0,
        seed: 2,
        ..SynthSpec::default()
    })
    .unwrap();
    for c in syn.dataset.constituencies() {
        assert_eq!(c.ref_votes().iter().sum::<u64>(), c.electorate_ref());
        assert_eq!(
            c.cur_votes().unwrap().iter().sum::<u64>(),
            c.electorate_cur()
        );
    }
    for m in &syn.true_matrices {
        for j in 0..m.entries.cols() {
            let s: f64 = (0..m.entries.rows()).map(|i| m.entries[(i, j)]).sum();
            assert!((s - 1.0).abs() <= 1e-12);
        }
    }
}

proptest! {
    #[test]
    fn missing_electorate_within_one_station(
        electorates in prop::collection::vec(1u64..2000, 2..=10),
        fraction in 0.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        let ds = dataset(&electorates);
        let total: u64 = electorates.iter().sum();
        let target = fraction * total as f64;
        let missing = missing_set(&ds, fraction, seed).unwrap();
        let achieved: u64 = electorates.iter().zip(&missing).filter(|(_, &m)| m).map(|(e, _)| e).sum();
        let largest = *electorates.iter().max().unwrap() as f64;
        let (optimum, _) = best_distance(&electorates, target);
        let d = (achieved as f64 - target).abs();
        prop_assert!(d <= largest, "achieved {} target {}", achieved, target);
        prop_assert!(d <= optimum + largest);

        let decl = make_scenario(&ds, fraction, seed).unwrap();
        prop_assert_eq!(decl.len(), missing.iter().filter(|m| !**m).count());
        prop_assert_eq!(&decl, &make_scenario(&ds, fraction, seed).unwrap());
        decl.validate(&ds).unwrap();
    }

    #[test]
    fn declared_votes_are_the_stored_ones(seed in any::<u64>(), fraction in 0.0f64..1.0) {
        let syn = generate_synthetic(&SynthSpec { n_groups: 2, stations_per_group: 5, seed, ..SynthSpec::default() }).unwrap();
        let decl: DeclarationState = make_scenario(&syn.dataset, fraction, seed).unwrap();
        for id in decl.declared_ids() {
            prop_assert_eq!(decl.votes(id), syn.dataset.station(id).unwrap().cur_votes());
        }
    }
}
