//! Ecological regression and forecast assembly.
//!
//! Every current-election party's votes at a station are modelled as a
//! linear combination of all reference-election party votes at that
//! station, nonvoters included on both sides and without an intercept.
//! Coefficients are fitted jointly over the declared stations of a group
//! and applied to the group's undeclared stations.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, DeclarationState};
use crate::error::{Error, Result};
use crate::linalg::{lstsq_min_norm, Matrix};

/// Vote-share view used for comparing forecasts with results.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Absolute votes.
    #[default]
    Abs,
    /// Percent of the electorate, nonvoters included.
    Elec,
    /// Percent of valid votes, nonvoters excluded.
    Vald,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Abs, Metric::Elec, Metric::Vald];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Abs => "abs",
            Metric::Elec => "elec",
            Metric::Vald => "vald",
        }
    }

    /// Converts a vote vector (incl. `NV`) into this metric's view.
    pub fn convert(self, totals: &[f64]) -> Result<Vec<f64>> {
        match self {
            Metric::Abs => Ok(totals.to_vec()),
            Metric::Elec => to_elec_shares(totals),
            Metric::Vald => to_vald_shares(totals),
        }
    }
}

impl FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "abs" => Ok(Metric::Abs),
            "elec" => Ok(Metric::Elec),
            "vald" => Ok(Metric::Vald),
            other => Err(Error::UnknownMetric(other.to_string())),
        }
    }
}

impl core::fmt::Display for Metric {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

fn percentages(values: &[f64]) -> Result<Vec<f64>> {
    let sum: f64 = values.iter().sum();
    if sum.is_nan() || sum <= 0.0 {
        return Err(Error::ZeroTotal);
    }
    Ok(values.iter().map(|v| 100.0 * v / sum).collect())
}

/// Shares of the electorate in percent, over all entries including `NV`.
pub fn to_elec_shares(totals: &[f64]) -> Result<Vec<f64>> {
    percentages(totals)
}

/// Shares of valid votes in percent, over all entries except the trailing `NV`.
pub fn to_vald_shares(totals: &[f64]) -> Result<Vec<f64>> {
    match totals.split_last() {
        Some((_, valid)) if !valid.is_empty() => percentages(valid),
        _ => Err(Error::ZeroTotal),
    }
}

/// Root mean squared componentwise deviation in the given metric.
pub fn rmse(forecast: &[f64], truth: &[f64], metric: Metric) -> Result<f64> {
    if forecast.len() != truth.len() {
        return Err(Error::Dimension {
            expected: truth.len(),
            got: forecast.len(),
        });
    }
    let f = metric.convert(forecast)?;
    let t = metric.convert(truth)?;
    let ss: f64 = f.iter().zip(&t).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(libm::sqrt(ss / f.len() as f64))
}

/// Linear map from reference-election votes to current-election votes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    /// One row per current party, one column per reference party.
    pub entries: Matrix,
    /// Group label, `None` for the pooled global matrix.
    pub group_id: Option<u32>,
    pub n_stations_used: usize,
}

impl TransitionMatrix {
    /// Raw (unclipped) projection of a reference vote vector.
    pub fn apply(&self, ref_votes: &[f64]) -> Result<Vec<f64>> {
        self.entries.mul_vec(ref_votes)
    }
}

/// Least-squares fit over the given stations. Each `rows` entry pairs the
/// reference vector with the current vector, both including `NV`.
pub fn fit_transition<'a>(
    rows: impl IntoIterator<Item = (&'a [f64], &'a [f64])>,
    n_ref: usize,
    n_cur: usize,
) -> Result<TransitionMatrix> {
    let mut design = Vec::new();
    let mut response = Vec::new();
    let mut k = 0;
    for (r, c) in rows {
        if r.len() != n_ref {
            return Err(Error::Dimension {
                expected: n_ref,
                got: r.len(),
            });
        }
        if c.len() != n_cur {
            return Err(Error::Dimension {
                expected: n_cur,
                got: c.len(),
            });
        }
        design.extend_from_slice(r);
        response.extend_from_slice(c);
        k += 1;
    }
    if k == 0 {
        return Err(Error::NoDeclaredStations);
    }
    let a = matrix_from_flat(k, n_ref, design);
    let b = matrix_from_flat(k, n_cur, response);
    let coef = lstsq_min_norm(&a, &b)?;
    Ok(TransitionMatrix {
        entries: coef.transpose(),
        group_id: None,
        n_stations_used: k,
    })
}

fn matrix_from_flat(rows: usize, cols: usize, data: Vec<f64>) -> Matrix {
    let mut m = Matrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = data[i * cols + j];
        }
    }
    m
}

fn to_f64(v: &[u64]) -> Vec<f64> {
    v.iter().map(|&x| x as f64).collect()
}

/// Fits the transition matrix over the declared members of `member_ids`.
pub fn estimate_transition(
    dataset: &Dataset,
    declarations: &DeclarationState,
    member_ids: &[&str],
) -> Result<TransitionMatrix> {
    let mut pairs = Vec::new();
    let mut idx: Vec<usize> = Vec::with_capacity(member_ids.len());
    for id in member_ids {
        idx.push(
            dataset
                .index_of(id)
                .ok_or_else(|| Error::UnknownStation((*id).to_string()))?,
        );
    }
    idx.sort_unstable();
    idx.dedup();
    for i in idx {
        let c = &dataset.constituencies()[i];
        if let Some(cur) = declarations.votes(c.id()) {
            pairs.push((to_f64(c.ref_votes()), to_f64(cur)));
        }
    }
    let p = dataset.parties();
    fit_transition(
        pairs.iter().map(|(r, c)| (r.as_slice(), c.as_slice())),
        p.n_ref(),
        p.n_cur(),
    )
}

/// Pooled fit over every declared station.
pub fn global_transition(
    dataset: &Dataset,
    declarations: &DeclarationState,
) -> Result<TransitionMatrix> {
    let ids: Vec<&str> = declarations.declared_ids().collect();
    estimate_transition(dataset, declarations, &ids)
}

/// Projects one station, clipping components to `[0, electorate_cur]` and
/// rescaling so the vector sums to `electorate_cur`.
pub fn project_station(
    matrix: &TransitionMatrix,
    ref_votes: &[f64],
    electorate_cur: f64,
) -> Result<Vec<f64>> {
    let mut out = matrix.apply(ref_votes)?;
    clip_and_rescale(&mut out, electorate_cur);
    Ok(out)
}

pub(crate) fn clip_and_rescale(v: &mut [f64], electorate: f64) {
    for x in v.iter_mut() {
        *x = x.clamp(0.0, electorate);
        if x.is_nan() {
            *x = 0.0;
        }
    }
    let sum: f64 = v.iter().sum();
    if sum > 0.0 {
        let scale = electorate / sum;
        for x in v.iter_mut() {
            // Rounding may push a dominant component a hair past the bound.
            *x = (*x * scale).min(electorate);
        }
    } else if let Some(nv) = v.last_mut() {
        *nv = electorate;
    }
}

/// Forecast of the current election.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastResult {
    /// Absolute votes per current party incl. `NV`.
    pub party_totals: Vec<f64>,
    pub declared_totals: Vec<f64>,
    /// Projected vectors of the undeclared stations.
    pub station_projections: BTreeMap<String, Vec<f64>>,
    pub declared_count: usize,
    pub undeclared_count: usize,
}

impl ForecastResult {
    pub fn pct_elec(&self) -> Result<Vec<f64>> {
        to_elec_shares(&self.party_totals)
    }

    pub fn pct_vald(&self) -> Result<Vec<f64>> {
        to_vald_shares(&self.party_totals)
    }
}

/// Precomputed per-station vectors for repeated forecasts under varying
/// groupings over a fixed declaration state.
#[derive(Debug, Clone)]
pub struct ForecastContext {
    n_ref: usize,
    n_cur: usize,
    ids: Vec<String>,
    ref_rows: Vec<Vec<f64>>,
    electorate_cur: Vec<f64>,
    declared: Vec<Option<Vec<f64>>>,
    global: TransitionMatrix,
}

struct Assembled {
    declared_totals: Vec<f64>,
    projected_totals: Vec<f64>,
}

impl ForecastContext {
    pub fn new(dataset: &Dataset, declarations: &DeclarationState) -> Result<Self> {
        declarations.validate(dataset)?;
        let p = dataset.parties();
        let cs = dataset.constituencies();
        let ref_rows: Vec<Vec<f64>> = cs.iter().map(|c| to_f64(c.ref_votes())).collect();
        let declared: Vec<Option<Vec<f64>>> = declarations
            .aligned(dataset)
            .into_iter()
            .map(|v| v.map(to_f64))
            .collect();
        let global = fit_transition(
            ref_rows
                .iter()
                .zip(&declared)
                .filter_map(|(r, d)| d.as_ref().map(|d| (r.as_slice(), d.as_slice()))),
            p.n_ref(),
            p.n_cur(),
        )?;
        Ok(Self {
            n_ref: p.n_ref(),
            n_cur: p.n_cur(),
            ids: cs.iter().map(|c| c.id().to_string()).collect(),
            ref_rows,
            electorate_cur: cs.iter().map(|c| c.electorate_cur() as f64).collect(),
            declared,
            global,
        })
    }

    pub fn n_stations(&self) -> usize {
        self.ids.len()
    }

    pub fn n_cur(&self) -> usize {
        self.n_cur
    }

    pub fn is_declared(&self, station: usize) -> bool {
        self.declared[station].is_some()
    }

    pub fn global(&self) -> &TransitionMatrix {
        &self.global
    }

    /// Number of declared stations carrying each label.
    pub fn declared_per_group(&self, grouping: &[u32], n_groups: usize) -> Vec<usize> {
        let mut counts = vec![0usize; n_groups];
        for (g, d) in grouping.iter().zip(&self.declared) {
            if d.is_some() {
                if let Some(c) = counts.get_mut(*g as usize) {
                    *c += 1;
                }
            }
        }
        counts
    }

    pub fn check_grouping(&self, grouping: &[u32]) -> Result<()> {
        if grouping.len() != self.ids.len() {
            return Err(Error::GroupingLength {
                expected: self.ids.len(),
                got: grouping.len(),
            });
        }
        Ok(())
    }

    /// Matrices per label for groups with at least one undeclared station.
    fn group_matrices(&self, grouping: &[u32]) -> Vec<Option<TransitionMatrix>> {
        let n_groups = grouping.iter().copied().max().map_or(0, |g| g as usize + 1);
        let mut needs = vec![false; n_groups];
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_groups];
        for (i, &g) in grouping.iter().enumerate() {
            if self.declared[i].is_some() {
                members[g as usize].push(i);
            } else {
                needs[g as usize] = true;
            }
        }
        members
            .into_iter()
            .zip(needs)
            .enumerate()
            .map(|(g, (m, need))| {
                if !need {
                    return None;
                }
                let fitted = fit_transition(
                    m.iter().map(|&i| {
                        (
                            self.ref_rows[i].as_slice(),
                            self.declared[i].as_deref().unwrap_or(&[]),
                        )
                    }),
                    self.n_ref,
                    self.n_cur,
                );
                Some(match fitted {
                    Ok(mut t) => {
                        t.group_id = Some(g as u32);
                        t
                    }
                    Err(_) => self.global.clone(),
                })
            })
            .collect()
    }

    fn assemble(
        &self,
        grouping: &[u32],
        mut on_projection: impl FnMut(usize, &[f64]),
    ) -> Assembled {
        let matrices = self.group_matrices(grouping);
        let mut declared_totals = vec![0.0; self.n_cur];
        let mut projected_totals = vec![0.0; self.n_cur];
        for (i, &g) in grouping.iter().enumerate() {
            match &self.declared[i] {
                Some(v) => {
                    for (t, x) in declared_totals.iter_mut().zip(v) {
                        *t += x;
                    }
                }
                None => {
                    let m = matrices[g as usize]
                        .as_ref()
                        .expect("matrix exists for every group with undeclared stations");
                    let mut p = m
                        .apply(&self.ref_rows[i])
                        .expect("dimensions fixed by context");
                    clip_and_rescale(&mut p, self.electorate_cur[i]);
                    for (t, x) in projected_totals.iter_mut().zip(&p) {
                        *t += x;
                    }
                    on_projection(i, &p);
                }
            }
        }
        Assembled {
            declared_totals,
            projected_totals,
        }
    }

    /// Forecast party totals only.
    pub fn totals(&self, grouping: &[u32]) -> Result<Vec<f64>> {
        self.check_grouping(grouping)?;
        let a = self.assemble(grouping, |_, _| {});
        Ok(a.declared_totals
            .iter()
            .zip(&a.projected_totals)
            .map(|(d, p)| d + p)
            .collect())
    }

    /// Per-station projections of the undeclared stations, by index.
    pub fn projections(&self, grouping: &[u32]) -> Result<Vec<(usize, Vec<f64>)>> {
        self.check_grouping(grouping)?;
        let mut out = Vec::new();
        self.assemble(grouping, |i, p| out.push((i, p.to_vec())));
        Ok(out)
    }

    pub fn forecast(&self, grouping: &[u32]) -> Result<ForecastResult> {
        self.check_grouping(grouping)?;
        let mut station_projections = BTreeMap::new();
        let a = self.assemble(grouping, |i, p| {
            station_projections.insert(self.ids[i].clone(), p.to_vec());
        });
        let party_totals = a
            .declared_totals
            .iter()
            .zip(&a.projected_totals)
            .map(|(d, p)| d + p)
            .collect();
        let declared_count = self.declared.iter().filter(|d| d.is_some()).count();
        Ok(ForecastResult {
            party_totals,
            declared_totals: a.declared_totals,
            undeclared_count: station_projections.len(),
            station_projections,
            declared_count,
        })
    }
}

/// Full forecast: per-group regression (pooled global fallback for groups
/// without declared members), actual votes for declared stations and
/// projections for the rest.
pub fn assemble_forecast(
    dataset: &Dataset,
    declarations: &DeclarationState,
    grouping: &[u32],
) -> Result<ForecastResult> {
    if grouping.len() != dataset.len() {
        return Err(Error::GroupingLength {
            expected: dataset.len(),
            got: grouping.len(),
        });
    }
    ForecastContext::new(dataset, declarations)?.forecast(grouping)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn share_views() {
        let t = [60.0, 40.0, 100.0];
        assert_eq!(to_elec_shares(&t).unwrap(), vec![30.0, 20.0, 50.0]);
        assert_eq!(to_vald_shares(&t).unwrap(), vec![60.0, 40.0]);
        assert_eq!(to_elec_shares(&[7.0, 0.0]).unwrap(), vec![100.0, 0.0]);
        assert_eq!(to_vald_shares(&[7.0, 0.0]).unwrap(), vec![100.0]);
        assert_eq!(to_vald_shares(&[0.0, 0.0, 9.0]), Err(Error::ZeroTotal));
        assert_eq!(to_elec_shares(&[0.0, 0.0]), Err(Error::ZeroTotal));
    }

    #[test]
    fn rmse_examples() {
        for m in Metric::ALL {
            assert_eq!(rmse(&[3.0, 4.0, 5.0], &[3.0, 4.0, 5.0], m).unwrap(), 0.0);
        }
        assert_eq!(
            rmse(&[60.0, 90.0], &[50.0, 100.0], Metric::Abs).unwrap(),
            10.0
        );
        let a = rmse(&[60.0, 30.0, 10.0], &[50.0, 40.0, 10.0], Metric::Vald).unwrap();
        let b = rmse(&[60.0, 30.0, 510.0], &[50.0, 40.0, 510.0], Metric::Vald).unwrap();
        assert_eq!(a, b);
        assert!(matches!(
            rmse(&[1.0], &[1.0, 2.0], Metric::Abs),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn projection_examples() {
        let id = TransitionMatrix {
            entries: Matrix::identity(3),
            group_id: None,
            n_stations_used: 0,
        };
        assert_eq!(
            project_station(&id, &[60.0, 40.0, 100.0], 200.0).unwrap(),
            vec![60.0, 40.0, 100.0]
        );

        let x = TransitionMatrix {
            entries: Matrix::from_rows(&[vec![0.5, 0.2], vec![0.5, 0.8]]).unwrap(),
            group_id: None,
            n_stations_used: 0,
        };
        let p = project_station(&x, &[100.0, 50.0], 150.0).unwrap();
        assert!((p[0] - 60.0).abs() < 1e-12 && (p[1] - 90.0).abs() < 1e-12);

        let neg = TransitionMatrix {
            entries: Matrix::from_rows(&[vec![-1.0, 0.0], vec![1.0, 1.0]]).unwrap(),
            group_id: None,
            n_stations_used: 0,
        };
        let p = project_station(&neg, &[10.0, 20.0], 60.0).unwrap();
        assert_eq!(p[0], 0.0);
        assert!((p[1] - 60.0).abs() < 1e-12);

        let zero = TransitionMatrix {
            entries: Matrix::zeros(3, 2),
            group_id: None,
            n_stations_used: 0,
        };
        assert_eq!(
            project_station(&zero, &[1.0, 1.0], 9.0).unwrap(),
            vec![0.0, 0.0, 9.0]
        );
        assert!(matches!(
            project_station(&zero, &[1.0], 9.0),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn metric_parse() {
        assert_eq!("vald".parse::<Metric>().unwrap(), Metric::Vald);
        assert!("pct".parse::<Metric>().is_err());
    }
}
