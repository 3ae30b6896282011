//! Output documents shared by the CLI and the service.

use std::collections::BTreeMap;

use nightcast_core::evaluation::GroupProfile;
use nightcast_core::ga::{ConvergenceTrace, MultirunSummary};
use nightcast_core::{
    Dataset, DeviationSummary, ForecastResult, GaConfig, GroupingChromosome, Metric,
    TransitionMatrix,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Digest of the compact JSON form of a GA configuration.
pub fn config_digest(config: &GaConfig) -> String {
    sha256_hex(&serde_json::to_vec(config).expect("serializable config"))
}

/// Forecast document: vectors are aligned to `parties` (current parties
/// with `NV` last); `pct_vald` omits `NV` and is `null` when no valid
/// votes are forecast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastDoc {
    pub parties: Vec<String>,
    pub party_totals: Vec<f64>,
    pub declared_totals: Vec<f64>,
    pub pct_elec: Vec<f64>,
    pub pct_vald: Option<Vec<f64>>,
    pub declared_count: usize,
    pub undeclared_count: usize,
    /// Projected vote vectors of undeclared stations.
    pub per_station: BTreeMap<String, Vec<f64>>,
}

impl ForecastDoc {
    pub fn new(ds: &Dataset, f: &ForecastResult) -> Self {
        Self {
            parties: ds.parties().cur_parties().to_vec(),
            party_totals: f.party_totals.clone(),
            declared_totals: f.declared_totals.clone(),
            pct_elec: f
                .pct_elec()
                .unwrap_or_else(|_| vec![0.0; f.party_totals.len()]),
            pct_vald: f.pct_vald().ok(),
            declared_count: f.declared_count,
            undeclared_count: f.undeclared_count,
            per_station: f.station_projections.clone(),
        }
    }

    /// Parties and values in one metric.
    pub fn view(&self, metric: Metric) -> (Vec<String>, Vec<f64>) {
        match metric {
            Metric::Abs => (self.parties.clone(), self.party_totals.clone()),
            Metric::Elec => (self.parties.clone(), self.pct_elec.clone()),
            Metric::Vald => (
                self.parties[..self.parties.len() - 1].to_vec(),
                self.pct_vald.clone().unwrap_or_default(),
            ),
        }
    }
}

/// Chromosome file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChromosomeDoc {
    pub labels: Vec<u32>,
    pub fitness: Option<f64>,
    pub config_digest: Option<String>,
}

impl ChromosomeDoc {
    pub fn new(c: &GroupingChromosome, config: Option<&GaConfig>) -> Self {
        Self {
            labels: c.genes.clone(),
            fitness: c.fitness,
            config_digest: config.map(config_digest),
        }
    }
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn trace_csv(trace: &ConvergenceTrace) -> Vec<u8> {
    csv_bytes(
        &["generation", "best", "mean"],
        trace.records.iter().map(|r| {
            vec![
                r.generation.to_string(),
                r.best.to_string(),
                r.mean.to_string(),
            ]
        }),
    )
}

/// `indicator,mean,best` rows of the multi-run table.
pub fn multirun_csv(summary: &MultirunSummary) -> Vec<u8> {
    csv_bytes(
        &["indicator", "mean", "best"],
        summary
            .table()
            .iter()
            .map(|(name, m, b)| vec![name.to_string(), m.to_string(), b.to_string()]),
    )
}

/// Cross-run standard deviation per generation.
pub fn multirun_sd_csv(summary: &MultirunSummary) -> Vec<u8> {
    csv_bytes(
        &["generation", "sd_mean", "sd_best"],
        summary
            .per_generation_sd_mean
            .iter()
            .zip(&summary.per_generation_sd_best)
            .enumerate()
            .map(|(g, (m, b))| vec![g.to_string(), m.to_string(), b.to_string()]),
    )
}

/// `strategy,metric,party,deviation_pp` rows; absolute-vote deviations
/// are reported in votes under metric `abs`.
pub fn deviations_csv(summary: &DeviationSummary, metrics: &[Metric]) -> Vec<u8> {
    let mut rows = Vec::new();
    for s in &summary.strategies {
        for m in metrics {
            let Some(md) = s.metric(*m) else { continue };
            for (party, d) in &md.per_party {
                rows.push(vec![
                    s.strategy.clone(),
                    m.to_string(),
                    party.clone(),
                    d.to_string(),
                ]);
            }
        }
    }
    csv_bytes(&["strategy", "metric", "party", "deviation_pp"], rows)
}

/// Per strategy and metric: the distribution of per-party deviations.
pub fn deviation_stats_csv(summary: &DeviationSummary, metrics: &[Metric]) -> Vec<u8> {
    let mut rows = Vec::new();
    for s in &summary.strategies {
        for m in metrics {
            let Some(md) = s.metric(*m) else { continue };
            let x = &md.summary;
            rows.push(vec![
                s.strategy.clone(),
                m.to_string(),
                x.min.to_string(),
                x.median.to_string(),
                x.mean.to_string(),
                x.max.to_string(),
                x.sd.to_string(),
            ]);
        }
    }
    csv_bytes(
        &["strategy", "metric", "min", "median", "mean", "max", "sd"],
        rows,
    )
}

/// `group,party,mean_pct_vald,global_mean`; groups without valid votes
/// get an empty mean cell.
pub fn group_profile_csv(profile: &GroupProfile) -> Vec<u8> {
    let mut rows = Vec::new();
    for g in &profile.groups {
        for (k, party) in profile.parties.iter().enumerate() {
            rows.push(vec![
                g.group.to_string(),
                party.clone(),
                g.mean_pct_vald
                    .as_ref()
                    .map(|m| m[k].to_string())
                    .unwrap_or_default(),
                profile.global_mean[k].to_string(),
            ]);
        }
    }
    csv_bytes(&["group", "party", "mean_pct_vald", "global_mean"], rows)
}

/// Ground truth written by the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthMatricesDoc {
    pub ref_parties: Vec<String>,
    pub cur_parties: Vec<String>,
    /// One row-major matrix (current party × reference party) per group.
    pub matrices: Vec<Vec<Vec<f64>>>,
}

impl TruthMatricesDoc {
    pub fn new(ds: &Dataset, matrices: &[TransitionMatrix]) -> Self {
        Self {
            ref_parties: ds.parties().ref_parties().to_vec(),
            cur_parties: ds.parties().cur_parties().to_vec(),
            matrices: matrices.iter().map(|m| m.entries.to_rows()).collect(),
        }
    }
}
