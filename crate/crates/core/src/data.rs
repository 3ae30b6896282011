//! Election data model: parties, constituencies, datasets and declarations.
//!
//! Nonvoters are modelled as an ordinary trailing party `NV` whose count is
//! always derived as electorate minus valid votes. Full vote vectors (with
//! `NV`) therefore always sum exactly to the electorate.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{station_err, Error, Result};

/// Code of the synthetic nonvoter party.
pub const NONVOTER: &str = "NV";

/// Appends the nonvoter residual to a vote vector.
pub fn derive_nonvoters(votes: &[u64], electorate: u64) -> Result<Vec<u64>> {
    let sum: u64 = votes.iter().sum();
    if sum > electorate {
        return Err(Error::NegativeNonvoters { sum, electorate });
    }
    let mut full = Vec::with_capacity(votes.len() + 1);
    full.extend_from_slice(votes);
    full.push(electorate - sum);
    Ok(full)
}

/// Party lists of the reference and the current election, each ending in `NV`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartySet {
    ref_parties: Vec<String>,
    cur_parties: Vec<String>,
}

impl PartySet {
    /// Builds a party set from codes of the competing parties. A trailing
    /// `NV` is accepted and otherwise appended.
    pub fn new<S: AsRef<str>>(ref_parties: &[S], cur_parties: &[S]) -> Result<Self> {
        Ok(Self {
            ref_parties: normalize_party_list("reference", ref_parties)?,
            cur_parties: normalize_party_list("current", cur_parties)?,
        })
    }

    /// Reference-election codes including the trailing `NV`.
    pub fn ref_parties(&self) -> &[String] {
        &self.ref_parties
    }

    /// Current-election codes including the trailing `NV`.
    pub fn cur_parties(&self) -> &[String] {
        &self.cur_parties
    }

    pub fn n_ref(&self) -> usize {
        self.ref_parties.len()
    }

    pub fn n_cur(&self) -> usize {
        self.cur_parties.len()
    }
}

fn normalize_party_list<S: AsRef<str>>(which: &str, codes: &[S]) -> Result<Vec<String>> {
    let mut out: Vec<String> = codes.iter().map(|c| c.as_ref().to_string()).collect();
    if out.last().map(String::as_str) != Some(NONVOTER) {
        out.push(NONVOTER.to_string());
    }
    if out.len() < 2 {
        return Err(Error::Parties(format!(
            "{which} election needs at least one party besides {NONVOTER}"
        )));
    }
    let mut seen = BTreeSet::new();
    for (i, code) in out.iter().enumerate() {
        if code.is_empty() {
            return Err(Error::Parties(format!(
                "{which} election has an empty party code"
            )));
        }
        if code == NONVOTER && i + 1 != out.len() {
            return Err(Error::Parties(format!(
                "{which} election lists {NONVOTER} before the last position"
            )));
        }
        if !seen.insert(code.as_str()) {
            return Err(Error::Parties(format!(
                "{which} election lists party `{code}` twice"
            )));
        }
    }
    Ok(out)
}

/// A reporting unit. Vote vectors include the derived `NV` component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constituency {
    id: String,
    name: String,
    electorate_ref: u64,
    electorate_cur: u64,
    ref_votes: Vec<u64>,
    cur_votes: Option<Vec<u64>>,
    declared_rank: Option<u32>,
}

/// Raw station record with vote vectors excluding `NV`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StationRecord {
    pub id: String,
    pub name: String,
    pub electorate_ref: u64,
    pub electorate_cur: u64,
    pub ref_votes: Vec<u64>,
    pub cur_votes: Option<Vec<u64>>,
    pub declared_rank: Option<u32>,
}

impl Constituency {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn electorate_ref(&self) -> u64 {
        self.electorate_ref
    }

    pub fn electorate_cur(&self) -> u64 {
        self.electorate_cur
    }

    /// Reference votes including `NV`.
    pub fn ref_votes(&self) -> &[u64] {
        &self.ref_votes
    }

    /// Current votes including `NV`, when known.
    pub fn cur_votes(&self) -> Option<&[u64]> {
        self.cur_votes.as_deref()
    }

    pub fn declared_rank(&self) -> Option<u32> {
        self.declared_rank
    }

    /// Converts back to a record without the derived `NV` components.
    pub fn to_record(&self) -> StationRecord {
        let strip = |v: &[u64]| v[..v.len() - 1].to_vec();
        StationRecord {
            id: self.id.clone(),
            name: self.name.clone(),
            electorate_ref: self.electorate_ref,
            electorate_cur: self.electorate_cur,
            ref_votes: strip(&self.ref_votes),
            cur_votes: self.cur_votes.as_deref().map(strip),
            declared_rank: self.declared_rank,
        }
    }

    fn from_record(parties: &PartySet, rec: StationRecord) -> Result<Self> {
        let id = rec.id;
        if id.is_empty() {
            return Err(station_err("", "empty station id"));
        }
        let n_ref = parties.n_ref() - 1;
        if rec.ref_votes.len() != n_ref {
            return Err(station_err(
                &id,
                format!(
                    "expected {n_ref} reference vote columns, got {}",
                    rec.ref_votes.len()
                ),
            ));
        }
        let ref_votes = derive_nonvoters(&rec.ref_votes, rec.electorate_ref)
            .map_err(|e| station_err(&id, format!("reference election: {e}")))?;
        let cur_votes = match rec.cur_votes {
            None => None,
            Some(v) => {
                let n_cur = parties.n_cur() - 1;
                if v.len() != n_cur {
                    return Err(station_err(
                        &id,
                        format!("expected {n_cur} current vote columns, got {}", v.len()),
                    ));
                }
                Some(
                    derive_nonvoters(&v, rec.electorate_cur)
                        .map_err(|e| station_err(&id, format!("current election: {e}")))?,
                )
            }
        };
        if rec.declared_rank == Some(0) {
            return Err(station_err(&id, "declared_rank must be at least 1"));
        }
        Ok(Self {
            id,
            name: rec.name,
            electorate_ref: rec.electorate_ref,
            electorate_cur: rec.electorate_cur,
            ref_votes,
            cur_votes,
            declared_rank: rec.declared_rank,
        })
    }
}

/// A validated election dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    parties: PartySet,
    constituencies: Vec<Constituency>,
    metadata: BTreeMap<String, String>,
    index: BTreeMap<String, usize>,
}

impl Dataset {
    pub fn new(
        parties: PartySet,
        records: Vec<StationRecord>,
        metadata: BTreeMap<String, String>,
    ) -> Result<Self> {
        if records.len() < 2 {
            return Err(Error::TooFewStations(records.len()));
        }
        let mut index = BTreeMap::new();
        let mut constituencies = Vec::with_capacity(records.len());
        for (i, rec) in records.into_iter().enumerate() {
            let c = Constituency::from_record(&parties, rec)?;
            if index.insert(c.id.clone(), i).is_some() {
                return Err(Error::DuplicateStation(c.id));
            }
            constituencies.push(c);
        }
        Ok(Self {
            parties,
            constituencies,
            metadata,
            index,
        })
    }

    pub fn parties(&self) -> &PartySet {
        &self.parties
    }

    pub fn constituencies(&self) -> &[Constituency] {
        &self.constituencies
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn len(&self) -> usize {
        self.constituencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constituencies.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn station(&self, id: &str) -> Option<&Constituency> {
        self.index_of(id).map(|i| &self.constituencies[i])
    }

    /// True when every station carries current-election votes.
    pub fn has_current_votes(&self) -> bool {
        self.constituencies.iter().all(|c| c.cur_votes.is_some())
    }

    pub fn total_electorate_cur(&self) -> u64 {
        self.constituencies.iter().map(|c| c.electorate_cur).sum()
    }

    /// Actual current totals per party (incl. `NV`).
    pub fn true_totals(&self) -> Result<Vec<u64>> {
        let mut totals = alloc::vec![0u64; self.parties.n_cur()];
        for c in &self.constituencies {
            let v = c
                .cur_votes
                .as_ref()
                .ok_or_else(|| Error::MissingCurrentVotes(c.id.clone()))?;
            for (t, x) in totals.iter_mut().zip(v) {
                *t += x;
            }
        }
        Ok(totals)
    }

    /// Copy of the dataset with current votes taken from the declarations
    /// and cleared everywhere else.
    pub fn with_declared_votes(&self, declarations: &DeclarationState) -> Self {
        let mut out = self.clone();
        for c in &mut out.constituencies {
            c.cur_votes = declarations.votes(&c.id).map(<[u64]>::to_vec);
        }
        out
    }
}

/// Stations that have reported, with their full current vote vectors.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DeclarationState {
    votes: BTreeMap<String, Vec<u64>>,
}

/// Result of recording one declaration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeclareOutcome {
    Recorded,
    /// Identical votes were already on file.
    Unchanged,
}

impl DeclarationState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares every station using its stored current votes.
    pub fn all_declared(dataset: &Dataset) -> Result<Self> {
        Self::from_stored(
            dataset,
            dataset.constituencies.iter().map(|c| c.id.as_str()),
        )
    }

    /// Declares the given stations using their stored current votes.
    pub fn from_stored<'a>(
        dataset: &Dataset,
        ids: impl IntoIterator<Item = &'a str>,
    ) -> Result<Self> {
        let mut votes = BTreeMap::new();
        for id in ids {
            let c = dataset
                .station(id)
                .ok_or_else(|| Error::UnknownStation(id.to_string()))?;
            let v = c
                .cur_votes
                .clone()
                .ok_or_else(|| Error::MissingCurrentVotes(id.to_string()))?;
            votes.insert(id.to_string(), v);
        }
        Ok(Self { votes })
    }

    /// Records a station's current votes (excluding `NV`).
    pub fn declare(
        &mut self,
        dataset: &Dataset,
        id: &str,
        votes_excl_nv: &[u64],
    ) -> Result<DeclareOutcome> {
        let c = dataset
            .station(id)
            .ok_or_else(|| Error::UnknownStation(id.to_string()))?;
        let expected = dataset.parties.n_cur() - 1;
        if votes_excl_nv.len() != expected {
            return Err(Error::Dimension {
                expected,
                got: votes_excl_nv.len(),
            });
        }
        let full = derive_nonvoters(votes_excl_nv, c.electorate_cur)?;
        match self.votes.get(id) {
            Some(existing) if *existing == full => Ok(DeclareOutcome::Unchanged),
            Some(_) => Err(Error::ConflictingDeclaration(id.to_string())),
            None => {
                self.votes.insert(id.to_string(), full);
                Ok(DeclareOutcome::Recorded)
            }
        }
    }

    pub fn is_declared(&self, id: &str) -> bool {
        self.votes.contains_key(id)
    }

    /// Full vote vector (incl. `NV`) of a declared station.
    pub fn votes(&self, id: &str) -> Option<&[u64]> {
        self.votes.get(id).map(Vec::as_slice)
    }

    pub fn declared_ids(&self) -> impl Iterator<Item = &str> {
        self.votes.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.votes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.votes.is_empty()
    }

    /// Checks that every declared id exists and has a consistent vector.
    pub fn validate(&self, dataset: &Dataset) -> Result<()> {
        for (id, v) in &self.votes {
            let c = dataset
                .station(id)
                .ok_or_else(|| Error::UnknownStation(id.clone()))?;
            if v.len() != dataset.parties.n_cur() {
                return Err(Error::Dimension {
                    expected: dataset.parties.n_cur(),
                    got: v.len(),
                });
            }
            if v.iter().sum::<u64>() != c.electorate_cur {
                return Err(station_err(
                    id,
                    "declared votes do not sum to the electorate",
                ));
            }
        }
        Ok(())
    }

    /// Per-station view aligned with the dataset order.
    pub fn aligned<'a>(&'a self, dataset: &Dataset) -> Vec<Option<&'a [u64]>> {
        dataset
            .constituencies
            .iter()
            .map(|c| self.votes(&c.id))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn rec(id: &str, e: u64, r: Vec<u64>, c: Option<Vec<u64>>) -> StationRecord {
        StationRecord {
            id: id.into(),
            name: id.into(),
            electorate_ref: e,
            electorate_cur: e,
            ref_votes: r,
            cur_votes: c,
            declared_rank: None,
        }
    }

    #[test]
    fn nonvoter_residual() {
        assert_eq!(derive_nonvoters(&[60, 40], 200).unwrap(), vec![60, 40, 100]);
        assert_eq!(derive_nonvoters(&[0, 0], 50).unwrap(), vec![0, 0, 50]);
        assert_eq!(derive_nonvoters(&[30, 30], 60).unwrap(), vec![30, 30, 0]);
        assert_eq!(
            derive_nonvoters(&[30, 31], 60),
            Err(Error::NegativeNonvoters {
                sum: 61,
                electorate: 60
            })
        );
    }

    #[test]
    fn party_lists() {
        let p = PartySet::new(&["A", "B"], &["A", "C", "NV"]).unwrap();
        assert_eq!(p.ref_parties(), ["A", "B", "NV"]);
        assert_eq!(p.cur_parties(), ["A", "C", "NV"]);
        assert!(PartySet::new(&["A", "A"], &["B"]).is_err());
        assert!(PartySet::new(&["NV", "A"], &["B"]).is_err());
        let empty: [&str; 0] = [];
        assert!(PartySet::new(&empty, &["B"]).is_err());
    }

    #[test]
    fn votes_over_electorate_names_station() {
        let p = PartySet::new(&["A"], &["A"]).unwrap();
        let err = Dataset::new(
            p,
            vec![rec("ok", 10, vec![5], None), rec("bad", 10, vec![11], None)],
            BTreeMap::new(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Station { ref station, .. } if station == "bad"));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let p = PartySet::new(&["A"], &["A"]).unwrap();
        let err = Dataset::new(
            p,
            vec![rec("x", 10, vec![5], None), rec("x", 10, vec![1], None)],
            BTreeMap::new(),
        )
        .unwrap_err();
        assert_eq!(err, Error::DuplicateStation("x".into()));
    }

    #[test]
    fn declarations() {
        let p = PartySet::new(&["A"], &["A"]).unwrap();
        let d = Dataset::new(
            p,
            vec![rec("x", 10, vec![5], None), rec("y", 20, vec![1], None)],
            BTreeMap::new(),
        )
        .unwrap();
        let mut s = DeclarationState::new();
        assert_eq!(s.declare(&d, "x", &[4]).unwrap(), DeclareOutcome::Recorded);
        assert_eq!(s.declare(&d, "x", &[4]).unwrap(), DeclareOutcome::Unchanged);
        assert!(matches!(
            s.declare(&d, "x", &[3]),
            Err(Error::ConflictingDeclaration(_))
        ));
        assert!(matches!(
            s.declare(&d, "z", &[3]),
            Err(Error::UnknownStation(_))
        ));
        assert!(matches!(
            s.declare(&d, "y", &[21]),
            Err(Error::NegativeNonvoters { .. })
        ));
        assert_eq!(s.votes("x"), Some(&[4u64, 6][..]));
        s.validate(&d).unwrap();
    }
}
