//! Solution-quality reports: per-party forecast deviations and group
//! characteristics.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::{Constituency, Dataset, DeclarationState};
use crate::error::{Error, Result};
use crate::regression::{ForecastContext, Metric};
use crate::stats::Summary;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDeviation {
    pub metric: Metric,
    /// `(party, |forecast − truth|)`; percentage points for elec/vald.
    pub per_party: Vec<(String, f64)>,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyDeviation {
    pub strategy: String,
    pub metrics: Vec<MetricDeviation>,
}

impl StrategyDeviation {
    pub fn metric(&self, metric: Metric) -> Option<&MetricDeviation> {
        self.metrics.iter().find(|m| m.metric == metric)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationSummary {
    pub strategies: Vec<StrategyDeviation>,
}

impl DeviationSummary {
    pub fn strategy(&self, name: &str) -> Option<&StrategyDeviation> {
        self.strategies.iter().find(|s| s.strategy == name)
    }
}

/// Per-party deviations of each named grouping's forecast from the actual
/// result, in absolute votes, %Elec and %Vald.
pub fn deviation_summary(
    dataset: &Dataset,
    declarations: &DeclarationState,
    groupings: &[(String, Vec<u32>)],
) -> Result<DeviationSummary> {
    let truth: Vec<f64> = dataset.true_totals()?.iter().map(|&v| v as f64).collect();
    let ctx = ForecastContext::new(dataset, declarations)?;
    let parties = dataset.parties().cur_parties();
    let mut strategies = Vec::with_capacity(groupings.len());
    for (name, grouping) in groupings {
        let forecast = ctx.totals(grouping)?;
        let mut metrics = Vec::with_capacity(3);
        for metric in Metric::ALL {
            let f = metric.convert(&forecast)?;
            let t = metric.convert(&truth)?;
            let per_party: Vec<(String, f64)> = parties
                .iter()
                .zip(f.iter().zip(&t))
                .map(|(p, (a, b))| (p.clone(), libm::fabs(a - b)))
                .collect();
            let devs: Vec<f64> = per_party.iter().map(|(_, d)| *d).collect();
            metrics.push(MetricDeviation {
                metric,
                summary: Summary::of(&devs),
                per_party,
            });
        }
        strategies.push(StrategyDeviation {
            strategy: name.clone(),
            metrics,
        });
    }
    Ok(DeviationSummary { strategies })
}

/// Per-station absolute deviations of the projected undeclared stations.
pub fn station_breakdown(
    dataset: &Dataset,
    declarations: &DeclarationState,
    grouping: &[u32],
    metric: Metric,
) -> Result<Vec<(String, Vec<f64>)>> {
    let ctx = ForecastContext::new(dataset, declarations)?;
    let cs = dataset.constituencies();
    let mut out = Vec::new();
    for (i, p) in ctx.projections(grouping)? {
        let c = &cs[i];
        let truth: Vec<f64> = c
            .cur_votes()
            .ok_or_else(|| Error::MissingCurrentVotes(c.id().into()))?
            .iter()
            .map(|&v| v as f64)
            .collect();
        let (Ok(f), Ok(t)) = (metric.convert(&p), metric.convert(&truth)) else {
            continue;
        };
        out.push((
            c.id().into(),
            f.iter().zip(&t).map(|(a, b)| libm::fabs(a - b)).collect(),
        ));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    pub group: u32,
    pub members: usize,
    /// Electorate-weighted mean %Vald per party; `None` when no member has
    /// valid current votes.
    pub mean_pct_vald: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupProfile {
    /// Current parties without `NV`.
    pub parties: Vec<String>,
    pub groups: Vec<GroupRow>,
    pub global_mean: Vec<f64>,
}

struct Accumulator {
    weight: f64,
    sums: Vec<f64>,
}

impl Accumulator {
    fn new(n: usize) -> Self {
        Self {
            weight: 0.0,
            sums: vec![0.0; n],
        }
    }

    fn add(&mut self, w: f64, shares: &[f64]) {
        self.weight += w;
        for (s, x) in self.sums.iter_mut().zip(shares) {
            *s += w * x;
        }
    }

    fn mean(&self) -> Option<Vec<f64>> {
        (self.weight > 0.0).then(|| self.sums.iter().map(|s| s / self.weight).collect())
    }
}

/// Current-election %Vald per group, averaged over member stations with
/// electorate weights, plus the overall mean. Stations without current votes
/// or without valid votes count as members but do not enter the means.
pub fn group_profile(dataset: &Dataset, grouping: &[u32]) -> Result<GroupProfile> {
    profile_from(dataset, grouping, |c| c.cur_votes())
}

/// As [`group_profile`], but over declared votes only, for live sessions
/// where results arrive one station at a time.
pub fn declared_group_profile(
    dataset: &Dataset,
    declarations: &DeclarationState,
    grouping: &[u32],
) -> Result<GroupProfile> {
    profile_from(dataset, grouping, |c| declarations.votes(c.id()))
}

fn profile_from<'a>(
    dataset: &'a Dataset,
    grouping: &[u32],
    votes: impl Fn(&'a Constituency) -> Option<&'a [u64]>,
) -> Result<GroupProfile> {
    if grouping.len() != dataset.len() {
        return Err(Error::GroupingLength {
            expected: dataset.len(),
            got: grouping.len(),
        });
    }
    let cur = dataset.parties().cur_parties();
    let n_valid = cur.len() - 1;
    let n_groups = grouping.iter().copied().max().map_or(0, |g| g as usize + 1);
    let mut members = vec![0usize; n_groups];
    let mut acc: Vec<Accumulator> = (0..n_groups).map(|_| Accumulator::new(n_valid)).collect();
    let mut global = Accumulator::new(n_valid);
    for (c, &g) in dataset.constituencies().iter().zip(grouping) {
        members[g as usize] += 1;
        let Some(v) = votes(c) else { continue };
        let valid: u64 = v[..n_valid].iter().sum();
        if valid == 0 {
            continue;
        }
        let shares: Vec<f64> = v[..n_valid]
            .iter()
            .map(|&x| 100.0 * x as f64 / valid as f64)
            .collect();
        let w = c.electorate_cur() as f64;
        acc[g as usize].add(w, &shares);
        global.add(w, &shares);
    }
    Ok(GroupProfile {
        parties: cur[..n_valid].to_vec(),
        groups: acc
            .iter()
            .zip(members)
            .enumerate()
            .map(|(g, (a, m))| GroupRow {
                group: g as u32,
                members: m,
                mean_pct_vald: a.mean(),
            })
            .collect(),
        global_mean: global.mean().unwrap_or_else(|| vec![0.0; n_valid]),
    })
}
