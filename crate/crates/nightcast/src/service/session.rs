use std::sync::Arc;

use nightcast_core::{
    declared_group_profile, Dataset, DeclarationState, DeclareOutcome, Error as CoreError,
    ForecastContext, GroupProfile,
};
use serde::{Deserialize, Serialize};

use super::error::ApiError;
use crate::formats::{sha256_hex, ForecastDoc};
use crate::io::DatasetDoc;

/// One election session. Every mutation bumps `revision` and refreshes the
/// forecast snapshot before the lock is released.
#[derive(Debug, Clone)]
pub struct Session {
    pub id: String,
    pub dataset: Arc<Dataset>,
    pub grouping: Vec<u32>,
    pub declarations: DeclarationState,
    pub revision: u64,
    forecast: Option<(ForecastDoc, String)>,
}

/// Public view of a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionDoc {
    pub id: String,
    pub revision: u64,
    pub meta: std::collections::BTreeMap<String, String>,
    pub ref_parties: Vec<String>,
    pub cur_parties: Vec<String>,
    pub n_stations: usize,
    pub n_groups: usize,
    pub grouping: Vec<u32>,
    pub declared: Vec<String>,
    pub forecast_digest: Option<String>,
    pub active_job: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupsDoc {
    pub revision: u64,
    pub grouping: Vec<u32>,
    #[serde(flatten)]
    pub profile: GroupProfile,
}

pub fn n_groups(grouping: &[u32]) -> usize {
    grouping.iter().max().map_or(1, |m| *m as usize + 1)
}

impl Session {
    pub fn new(id: String, doc: DatasetDoc, grouping: Option<Vec<u32>>) -> Result<Self, ApiError> {
        let dataset = doc
            .into_dataset()
            .map_err(|e| ApiError::bad_request("invalid_dataset", e.to_string()))?;
        let grouping = grouping.unwrap_or_else(|| vec![0; dataset.len()]);
        check_grouping(&dataset, &grouping)
            .map_err(|m| ApiError::bad_request("invalid_grouping", m))?;
        Ok(Self {
            id,
            dataset: Arc::new(dataset),
            grouping,
            declarations: DeclarationState::new(),
            revision: 0,
            forecast: None,
        })
    }

    /// Records a declaration; identical re-submissions change nothing.
    pub fn declare(&mut self, station_id: &str, votes: &[i64]) -> Result<DeclareOutcome, ApiError> {
        if self.dataset.station(station_id).is_none() {
            return Err(ApiError::not_found(
                "unknown_station",
                format!("unknown station `{station_id}`"),
            ));
        }
        if let Some(v) = votes.iter().find(|v| **v < 0) {
            return Err(ApiError::unprocessable(
                "invalid_votes",
                format!("station `{station_id}`: negative vote count {v}"),
            ));
        }
        let votes: Vec<u64> = votes.iter().map(|&v| v as u64).collect();
        let outcome = self
            .declarations
            .declare(&self.dataset, station_id, &votes)
            .map_err(|e| match e {
                CoreError::ConflictingDeclaration(_) => {
                    ApiError::conflict("conflicting_declaration", e.to_string())
                }
                other => ApiError::unprocessable(
                    "invalid_votes",
                    format!("station `{station_id}`: {other}"),
                ),
            })?;
        if outcome == DeclareOutcome::Recorded {
            self.revision += 1;
            self.refresh();
        }
        Ok(outcome)
    }

    pub fn apply_grouping(&mut self, labels: Vec<u32>) -> Result<(), ApiError> {
        check_grouping(&self.dataset, &labels)
            .map_err(|m| ApiError::unprocessable("invalid_grouping", m))?;
        self.grouping = labels;
        self.revision += 1;
        self.refresh();
        Ok(())
    }

    fn refresh(&mut self) {
        self.forecast = if self.declarations.is_empty() {
            None
        } else {
            ForecastContext::new(&self.dataset, &self.declarations)
                .and_then(|ctx| ctx.forecast(&self.grouping))
                .ok()
                .map(|f| {
                    let doc = ForecastDoc::new(&self.dataset, &f);
                    let digest = sha256_hex(&serde_json::to_vec(&doc).expect("serializable"));
                    (doc, digest)
                })
        };
    }

    pub fn forecast(&self) -> Option<&ForecastDoc> {
        self.forecast.as_ref().map(|f| &f.0)
    }

    pub fn forecast_digest(&self) -> Option<&str> {
        self.forecast.as_ref().map(|f| f.1.as_str())
    }

    pub fn doc(&self, active_job: Option<String>) -> SessionDoc {
        let p = self.dataset.parties();
        SessionDoc {
            id: self.id.clone(),
            revision: self.revision,
            meta: self.dataset.metadata().clone(),
            ref_parties: p.ref_parties().to_vec(),
            cur_parties: p.cur_parties().to_vec(),
            n_stations: self.dataset.len(),
            n_groups: n_groups(&self.grouping),
            grouping: self.grouping.clone(),
            declared: self
                .dataset
                .constituencies()
                .iter()
                .filter(|c| self.declarations.is_declared(c.id()))
                .map(|c| c.id().to_string())
                .collect(),
            forecast_digest: self.forecast_digest().map(str::to_string),
            active_job,
        }
    }

    pub fn groups(&self) -> GroupsDoc {
        // Only declared results count; stored votes stay hidden until declared.
        let profile = declared_group_profile(&self.dataset, &self.declarations, &self.grouping)
            .expect("grouping checked");
        GroupsDoc {
            revision: self.revision,
            grouping: self.grouping.clone(),
            profile,
        }
    }
}

fn check_grouping(ds: &Dataset, grouping: &[u32]) -> Result<(), String> {
    if grouping.len() != ds.len() {
        return Err(format!(
            "grouping has {} labels for {} stations",
            grouping.len(),
            ds.len()
        ));
    }
    Ok(())
}
