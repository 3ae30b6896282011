//! Synthetic elections with a known grouping and known transition matrices.
//!
//! Matrix entries are multiples of `1/grain` and reference votes are
//! multiples of `grain`, so `X · ref_votes` is integral and a noiseless
//! dataset is exactly linear within each group.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, PartySet, StationRecord};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::regression::TransitionMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_groups: usize,
    pub stations_per_group: usize,
    /// Reference parties excluding `NV`.
    pub ref_party_count: usize,
    /// Current parties excluding `NV`.
    pub cur_party_count: usize,
    pub electorate_range: (u64, u64),
    /// Standard deviation of the per-component vote noise.
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_groups: 3,
            stations_per_group: 20,
            ref_party_count: 3,
            cur_party_count: 3,
            electorate_range: (200, 4_000),
            noise_sd: 0.0,
            seed: 0,
        }
    }
}

impl SynthSpec {
    /// Quantization step of matrix entries and reference votes.
    pub fn grain(&self) -> u64 {
        40u64.max(4 * (self.cur_party_count as u64 + 1))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.n_groups == 0 {
            return bad("n_groups must be at least 1");
        }
        if self.stations_per_group == 0 {
            return bad("stations_per_group must be at least 1");
        }
        if self.n_groups * self.stations_per_group < 2 {
            return bad("a dataset needs at least two stations");
        }
        if self.ref_party_count == 0 || self.cur_party_count == 0 {
            return bad("party counts must be at least 1");
        }
        let (lo, hi) = self.electorate_range;
        if lo > hi {
            return bad("electorate range minimum exceeds maximum");
        }
        if hi / self.grain() < lo.div_ceil(self.grain()).max(1) {
            return Err(Error::Config(format!(
                "electorate range must contain a positive multiple of {}",
                self.grain()
            )));
        }
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return bad("noise_sd must be a finite nonnegative number");
        }
        Ok(())
    }
}

/// Generated dataset plus ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticElection {
    pub dataset: Dataset,
    pub true_grouping: Vec<u32>,
    pub true_matrices: Vec<TransitionMatrix>,
}

/// Splits `total` into integer parts proportional to `weights` by largest
/// remainder (ties go to the lower index). An all-zero weight vector puts
/// everything on the last entry.
pub fn apportion(total: u64, weights: &[f64]) -> Vec<u64> {
    let sum: f64 = weights.iter().sum();
    let mut out = vec![0u64; weights.len()];
    if weights.is_empty() {
        return out;
    }
    if sum.is_nan() || sum <= 0.0 {
        *out.last_mut().unwrap() = total;
        return out;
    }
    let mut rems: Vec<(f64, usize)> = Vec::with_capacity(weights.len());
    let mut assigned = 0u64;
    for (i, w) in weights.iter().enumerate() {
        let exact = total as f64 * w / sum;
        let fl = libm::floor(exact) as u64;
        out[i] = fl;
        assigned += fl;
        rems.push((exact - fl as f64, i));
    }
    rems.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut left = total.saturating_sub(assigned);
    for &(_, i) in rems.iter().cycle() {
        if left == 0 {
            break;
        }
        out[i] += 1;
        left -= 1;
    }
    out
}

fn dirichlet(rng: &mut ChaCha8Rng, alpha: &[f64]) -> Vec<f64> {
    let draws: Vec<f64> = alpha
        .iter()
        .map(|&a| Gamma::new(a, 1.0).expect("positive shape").sample(rng))
        .collect();
    let s: f64 = draws.iter().sum();
    if s > 0.0 {
        draws.iter().map(|d| d / s).collect()
    } else {
        vec![1.0 / alpha.len() as f64; alpha.len()]
    }
}

/// Column-stochastic matrix with entries `k / grain`, `k ≥ 1`, returned as
/// integer numerators (rows = current parties incl. NV).
fn draw_numerators(rng: &mut ChaCha8Rng, n_cur: usize, n_ref: usize, grain: u64) -> Vec<Vec<u64>> {
    let mut num = vec![vec![0u64; n_ref]; n_cur];
    for j in 0..n_ref {
        let mut w: Vec<f64> = (0..n_cur).map(|_| Exp1.sample(rng)).collect();
        // same-position party (and NV→NV) retains part of its voters
        let loyal = if j + 1 == n_ref { n_cur - 1 } else { j };
        if loyal < n_cur {
            w[loyal] += 2.0;
        }
        let parts = apportion(grain - n_cur as u64, &w);
        for (row, part) in num.iter_mut().zip(&parts) {
            row[j] = 1 + part;
        }
    }
    num
}

/// Draws a synthetic election. Deterministic in `spec.seed`.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<SyntheticElection> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let grain = spec.grain();
    let n_ref = spec.ref_party_count + 1;
    let n_cur = spec.cur_party_count + 1;

    let numerators: Vec<Vec<Vec<u64>>> = (0..spec.n_groups)
        .map(|_| draw_numerators(&mut rng, n_cur, n_ref, grain))
        .collect();
    let profiles: Vec<Vec<f64>> = (0..spec.n_groups)
        .map(|_| dirichlet(&mut rng, &vec![2.0; n_ref]))
        .collect();

    let (lo, hi) = spec.electorate_range;
    let units_lo = lo.div_ceil(grain).max(1);
    let units_hi = hi / grain;
    let noise = if spec.noise_sd > 0.0 {
        Some(Normal::new(0.0, spec.noise_sd).map_err(|e| Error::Config(e.to_string()))?)
    } else {
        None
    };

    let mut stations: Vec<(u32, StationRecord)> = Vec::new();
    for (g, (num, profile)) in numerators.iter().zip(&profiles).enumerate() {
        for _ in 0..spec.stations_per_group {
            let units = rng.random_range(units_lo..=units_hi);
            let electorate = units * grain;
            let alpha: Vec<f64> = profile.iter().map(|p| 12.0 * p + 0.5).collect();
            let shares = dirichlet(&mut rng, &alpha);
            let ref_units = apportion(units, &shares);
            let mut cur: Vec<f64> = (0..n_cur)
                .map(|i| (0..n_ref).map(|j| (num[i][j] * ref_units[j]) as f64).sum())
                .collect();
            if let Some(n) = &noise {
                for c in cur.iter_mut() {
                    *c += n.sample(&mut rng);
                }
            }
            let cur_votes = integerize(&cur, electorate);
            let ref_votes: Vec<u64> = ref_units.iter().map(|u| u * grain).collect();
            stations.push((
                g as u32,
                StationRecord {
                    electorate_ref: electorate,
                    electorate_cur: electorate,
                    ref_votes: ref_votes[..n_ref - 1].to_vec(),
                    cur_votes: Some(cur_votes[..n_cur - 1].to_vec()),
                    ..StationRecord::default()
                },
            ));
        }
    }
    stations.shuffle(&mut rng);

    let width = stations.len().to_string().len().max(3);
    let mut true_grouping = Vec::with_capacity(stations.len());
    let mut records = Vec::with_capacity(stations.len());
    for (i, (g, mut rec)) in stations.into_iter().enumerate() {
        rec.id = format!("s{:0width$}", i + 1);
        rec.name = format!("Station {}", i + 1);
        true_grouping.push(g);
        records.push(rec);
    }

    let ref_codes: Vec<String> = (1..=spec.ref_party_count)
        .map(|i| format!("R{i}"))
        .collect();
    let cur_codes: Vec<String> = (1..=spec.cur_party_count)
        .map(|i| format!("C{i}"))
        .collect();
    let mut meta = BTreeMap::new();
    meta.insert("name".to_string(), "synthetic".to_string());
    meta.insert("seed".to_string(), spec.seed.to_string());
    let dataset = Dataset::new(PartySet::new(&ref_codes, &cur_codes)?, records, meta)?;

    let true_matrices = numerators
        .iter()
        .enumerate()
        .map(|(g, num)| {
            let mut m = Matrix::zeros(n_cur, n_ref);
            for i in 0..n_cur {
                for j in 0..n_ref {
                    m[(i, j)] = num[i][j] as f64 / grain as f64;
                }
            }
            TransitionMatrix {
                entries: m,
                group_id: Some(g as u32),
                n_stations_used: spec.stations_per_group,
            }
        })
        .collect();

    Ok(SyntheticElection {
        dataset,
        true_grouping,
        true_matrices,
    })
}

/// Rounds half away from zero, clips to `[0, electorate]` and rescales so
/// the integer vector sums to `electorate`.
pub fn integerize(values: &[f64], electorate: u64) -> Vec<u64> {
    let rounded: Vec<u64> = values
        .iter()
        .map(|&v| libm::round(v).clamp(0.0, electorate as f64) as u64)
        .collect();
    let sum: u64 = rounded.iter().sum();
    if sum == electorate {
        return rounded;
    }
    let w: Vec<f64> = rounded.iter().map(|&x| x as f64).collect();
    apportion(electorate, &w)
}
