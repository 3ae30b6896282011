//! Simulated partial counts.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{Dataset, DeclarationState};
use crate::error::{Error, Result};

/// Builds a declaration state in which roughly `missing_electorate_fraction`
/// of the current electorate has not reported yet.
///
/// Stations are considered for the missing set in order of expected lateness:
/// by descending `declared_rank` when any station carries one (unranked
/// stations count as latest), otherwise by descending electorate. Ties are
/// broken by a seeded shuffle. A station joins the missing set when that
/// moves the missing electorate strictly closer to the target.
pub fn make_scenario(
    dataset: &Dataset,
    missing_electorate_fraction: f64,
    seed: u64,
) -> Result<DeclarationState> {
    if !(0.0..=1.0).contains(&missing_electorate_fraction) {
        return Err(Error::Config(alloc::format!(
            "missing electorate fraction {missing_electorate_fraction} outside [0, 1]"
        )));
    }
    let missing = missing_set(dataset, missing_electorate_fraction, seed)?;
    let declared = dataset
        .constituencies()
        .iter()
        .zip(&missing)
        .filter(|(_, &m)| !m)
        .map(|(c, _)| c.id());
    DeclarationState::from_stored(dataset, declared)
}

/// Flags per station, `true` = undeclared.
pub fn missing_set(dataset: &Dataset, fraction: f64, seed: u64) -> Result<Vec<bool>> {
    let cs = dataset.constituencies();
    if let Some(c) = cs.iter().find(|c| c.cur_votes().is_none()) {
        return Err(Error::MissingCurrentVotes(c.id().into()));
    }
    let n = cs.len();
    if fraction <= 0.0 {
        return Ok(alloc::vec![false; n]);
    }
    if fraction >= 1.0 {
        return Ok(alloc::vec![true; n]);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    if cs.iter().any(|c| c.declared_rank().is_some()) {
        order.sort_by_key(|&i| core::cmp::Reverse(cs[i].declared_rank().unwrap_or(u32::MAX)));
    } else {
        order.sort_by_key(|&i| core::cmp::Reverse(cs[i].electorate_cur()));
    }

    let target = fraction * dataset.total_electorate_cur() as f64;
    let mut acc = 0.0;
    let mut missing = alloc::vec![false; n];
    for i in order {
        let e = cs[i].electorate_cur() as f64;
        if libm::fabs(acc + e - target) < libm::fabs(acc - target) {
            acc += e;
            missing[i] = true;
        }
    }
    Ok(missing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{PartySet, StationRecord};
    use alloc::collections::BTreeMap;
    use alloc::format;

    fn dataset(electorates: &[u64]) -> Dataset {
        let recs = electorates
            .iter()
            .enumerate()
            .map(|(i, &e)| StationRecord {
                id: format!("s{i}"),
                name: format!("s{i}"),
                electorate_ref: e,
                electorate_cur: e,
                ref_votes: alloc::vec![e / 2],
                cur_votes: Some(alloc::vec![e / 3]),
                declared_rank: None,
            })
            .collect();
        Dataset::new(
            PartySet::new(&["A"], &["A"]).unwrap(),
            recs,
            BTreeMap::new(),
        )
        .unwrap()
    }

    #[test]
    fn extremes() {
        let d = dataset(&[10, 20, 30]);
        assert_eq!(make_scenario(&d, 0.0, 1).unwrap().len(), 3);
        assert_eq!(make_scenario(&d, 1.0, 1).unwrap().len(), 0);
        assert!(make_scenario(&d, 1.5, 1).is_err());
    }

    #[test]
    fn largest_station_missing() {
        let d = dataset(&[100, 100, 100, 700]);
        let s = make_scenario(&d, 0.7, 3).unwrap();
        assert!(!s.is_declared("s3"));
        assert!(s.is_declared("s0") && s.is_declared("s1") && s.is_declared("s2"));
    }

    #[test]
    fn ranks_override_size() {
        let recs = (0..4)
            .map(|i| StationRecord {
                id: format!("s{i}"),
                name: format!("s{i}"),
                electorate_ref: 100,
                electorate_cur: if i == 3 { 1000 } else { 100 },
                ref_votes: alloc::vec![10],
                cur_votes: Some(alloc::vec![10]),
                declared_rank: Some(4 - i as u32),
            })
            .collect();
        let d = Dataset::new(
            PartySet::new(&["A"], &["A"]).unwrap(),
            recs,
            BTreeMap::new(),
        )
        .unwrap();
        // size order would pick only the big, earliest-ranked s3
        let s = make_scenario(&d, 0.7, 0).unwrap();
        assert!(!s.is_declared("s0"));
        assert_eq!(s.len(), 0);
    }

    #[test]
    fn requires_current_votes() {
        let recs = (0..2)
            .map(|i| StationRecord {
                id: format!("s{i}"),
                name: format!("s{i}"),
                electorate_ref: 10,
                electorate_cur: 10,
                ref_votes: alloc::vec![1],
                cur_votes: None,
                declared_rank: None,
            })
            .collect();
        let d = Dataset::new(
            PartySet::new(&["A"], &["A"]).unwrap(),
            recs,
            BTreeMap::new(),
        )
        .unwrap();
        assert!(matches!(
            make_scenario(&d, 0.5, 0),
            Err(Error::MissingCurrentVotes(_))
        ));
    }
}
