//! Dataset and declaration files.
//!
//! Vote vectors on disk never carry the nonvoter column; it is derived on
//! load. Party lists are written without `NV`, and a trailing `NV` is
//! tolerated when reading.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nightcast_core::{Dataset, DeclarationState, PartySet, StationRecord, NONVOTER};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationDoc {
    pub id: String,
    #[serde(default)]
    pub name: String,
    pub electorate_ref: u64,
    pub electorate_cur: u64,
    pub ref_votes: Vec<u64>,
    #[serde(default)]
    pub cur_votes: Option<Vec<u64>>,
    #[serde(default)]
    pub declared_rank: Option<u32>,
}

/// On-disk dataset document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetDoc {
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
    pub ref_parties: Vec<String>,
    pub cur_parties: Vec<String>,
    pub stations: Vec<StationDoc>,
}

fn without_nv(parties: &[String]) -> Vec<String> {
    parties
        .iter()
        .filter(|p| p.as_str() != NONVOTER)
        .cloned()
        .collect()
}

impl DatasetDoc {
    pub fn from_dataset(ds: &Dataset) -> Self {
        let p = ds.parties();
        Self {
            meta: ds.metadata().clone(),
            ref_parties: without_nv(p.ref_parties()),
            cur_parties: without_nv(p.cur_parties()),
            stations: ds
                .constituencies()
                .iter()
                .map(|c| {
                    let r = c.to_record();
                    StationDoc {
                        id: r.id,
                        name: r.name,
                        electorate_ref: r.electorate_ref,
                        electorate_cur: r.electorate_cur,
                        ref_votes: r.ref_votes,
                        cur_votes: r.cur_votes,
                        declared_rank: r.declared_rank,
                    }
                })
                .collect(),
        }
    }

    pub fn into_dataset(self) -> nightcast_core::Result<Dataset> {
        let parties = PartySet::new(&self.ref_parties, &self.cur_parties)?;
        let records = self
            .stations
            .into_iter()
            .map(|s| StationRecord {
                id: s.id,
                name: s.name,
                electorate_ref: s.electorate_ref,
                electorate_cur: s.electorate_cur,
                ref_votes: s.ref_votes,
                cur_votes: s.cur_votes,
                declared_rank: s.declared_rank,
            })
            .collect();
        Dataset::new(parties, records, self.meta)
    }
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("serializable document");
    out.push(b'\n');
    out
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let bytes = read_file(path)?;
    serde_json::from_slice(&bytes).map_err(|e| Error::parse(path, e))
}

pub fn parse_dataset(bytes: &[u8]) -> std::result::Result<Dataset, String> {
    let doc: DatasetDoc = serde_json::from_slice(bytes).map_err(|e| e.to_string())?;
    doc.into_dataset().map_err(|e| e.to_string())
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let doc: DatasetDoc = read_json(path)?;
    doc.into_dataset()
        .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))
}

pub fn dataset_json(ds: &Dataset) -> Vec<u8> {
    to_json(&DatasetDoc::from_dataset(ds))
}

pub fn save_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    write_file(path, &dataset_json(ds))
}

/// One row of a CSV election file.
struct CsvRow {
    id: String,
    name: String,
    electorate: u64,
    votes: Option<Vec<u64>>,
}

/// Reads `id,name,electorate,<party>...`. A row whose party cells are all
/// empty has no votes yet.
fn read_election_csv(path: &Path) -> Result<(Vec<String>, Vec<CsvRow>)> {
    let bytes = read_file(path)?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    let header = rdr.headers().map_err(|e| Error::parse(path, e))?.clone();
    let cols: Vec<&str> = header.iter().collect();
    if cols.len() < 4 || cols[..3] != ["id", "name", "electorate"] {
        return Err(Error::parse(
            path,
            "header must be `id,name,electorate,<party>...` with at least one party",
        ));
    }
    let parties: Vec<String> = cols[3..].iter().map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::parse(path, e))?;
        let id = rec[0].to_string();
        let at = |what: &str| Error::parse(path, format!("row {} (`{id}`): {what}", line + 2));
        let electorate: u64 = rec[2]
            .parse()
            .map_err(|_| at("electorate is not a count"))?;
        let cells: Vec<&str> = rec.iter().skip(3).collect();
        let votes = if cells.iter().all(|c| c.is_empty()) {
            None
        } else {
            Some(
                cells
                    .iter()
                    .map(|c| c.parse::<u64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| at("vote cell is not a count"))?,
            )
        };
        rows.push(CsvRow {
            id,
            name: rec[1].to_string(),
            electorate,
            votes,
        });
    }
    Ok((parties, rows))
}

/// Merges a reference-election CSV and a current-election CSV on station id.
/// Station order follows the reference file. A station missing from the
/// current file keeps its reference electorate and has no current votes.
pub fn import_csv(reference: &Path, current: &Path) -> Result<Dataset> {
    let (ref_parties, ref_rows) = read_election_csv(reference)?;
    let (cur_parties, cur_rows) = read_election_csv(current)?;
    let mut cur: BTreeMap<String, CsvRow> = BTreeMap::new();
    for r in cur_rows {
        let id = r.id.clone();
        if cur.insert(id.clone(), r).is_some() {
            return Err(Error::Validation(format!(
                "{}: duplicate station id `{id}`",
                current.display()
            )));
        }
    }
    let mut records = Vec::with_capacity(ref_rows.len());
    for r in ref_rows {
        let ref_votes = r.votes.ok_or_else(|| {
            Error::Validation(format!(
                "{}: station `{}` has no reference votes",
                reference.display(),
                r.id
            ))
        })?;
        let (electorate_cur, cur_votes) = match cur.remove(&r.id) {
            Some(c) => (c.electorate, c.votes),
            None => (r.electorate, None),
        };
        records.push(StationRecord {
            id: r.id,
            name: r.name,
            electorate_ref: r.electorate,
            electorate_cur,
            ref_votes,
            cur_votes,
            declared_rank: None,
        });
    }
    if let Some(id) = cur.keys().next() {
        return Err(Error::Validation(format!(
            "{}: station `{id}` does not appear in {}",
            current.display(),
            reference.display()
        )));
    }
    let parties = PartySet::new(&ref_parties, &cur_parties)?;
    Dataset::new(parties, records, BTreeMap::new()).map_err(Error::from)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeclarationEntry {
    pub station_id: String,
    /// Current votes without `NV`.
    pub votes: Vec<u64>,
}

/// Declarations file: entries in dataset order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeclarationsDoc {
    pub declarations: Vec<DeclarationEntry>,
}

impl DeclarationsDoc {
    pub fn from_state(ds: &Dataset, state: &DeclarationState) -> Self {
        Self {
            declarations: ds
                .constituencies()
                .iter()
                .filter_map(|c| {
                    state.votes(c.id()).map(|v| DeclarationEntry {
                        station_id: c.id().to_string(),
                        votes: v[..v.len() - 1].to_vec(),
                    })
                })
                .collect(),
        }
    }

    pub fn to_state(&self, ds: &Dataset) -> nightcast_core::Result<DeclarationState> {
        let mut state = DeclarationState::new();
        for d in &self.declarations {
            state.declare(ds, &d.station_id, &d.votes)?;
        }
        Ok(state)
    }
}

pub fn load_declarations(path: &Path, ds: &Dataset) -> Result<DeclarationState> {
    let doc: DeclarationsDoc = read_json(path)?;
    doc.to_state(ds)
        .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))
}

/// Declarations implied by a dataset file: every station that carries
/// current votes counts as declared.
pub fn stored_declarations(ds: &Dataset) -> DeclarationState {
    DeclarationState::from_stored(
        ds,
        ds.constituencies()
            .iter()
            .filter(|c| c.cur_votes().is_some())
            .map(|c| c.id()),
    )
    .expect("stations with stored votes")
}
