//! Genetic optimization of station groupings.
//!
//! A chromosome assigns every station a group label. Each generation keeps
//! an elite slice unchanged, injects fully random chromosomes and fills the
//! rest with offspring of elite mixture breeding: parent one from the elite
//! slice, parent two from the reproduction-eligible slice, one- or
//! two-point crossover, then per-gene mutation.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;
use core::ops::ControlFlow;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, DeclarationState};
use crate::error::{Error, Result};
use crate::regression::{ForecastContext, Metric};
use crate::stats::{self, Summary};

/// Group labels, one per station.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupingChromosome {
    pub genes: Vec<u32>,
    /// Cached fitness, lower is better.
    #[serde(default)]
    pub fitness: Option<f64>,
}

impl GroupingChromosome {
    pub fn new(genes: Vec<u32>) -> Self {
        Self {
            genes,
            fitness: None,
        }
    }

    pub fn validate(&self, n_stations: usize, n_groups: usize) -> Result<()> {
        if self.genes.len() != n_stations {
            return Err(Error::GroupingLength {
                expected: n_stations,
                got: self.genes.len(),
            });
        }
        if let Some(&label) = self.genes.iter().find(|&&g| g as usize >= n_groups) {
            return Err(Error::LabelOutOfRange {
                label,
                n_groups: n_groups as u32,
            });
        }
        Ok(())
    }

    /// FNV-1a digest of the genes, used as a snapshot id in traces.
    pub fn snapshot_id(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for g in &self.genes {
            for b in g.to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operator {
    Mutation,
    Crossover,
    Reseed,
}

impl Operator {
    pub fn as_str(self) -> &'static str {
        match self {
            Operator::Mutation => "mutation",
            Operator::Crossover => "crossover",
            Operator::Reseed => "reseed",
        }
    }
}

impl FromStr for Operator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mutation" => Ok(Operator::Mutation),
            "crossover" => Ok(Operator::Crossover),
            "reseed" => Ok(Operator::Reseed),
            other => Err(Error::UnknownOperator(other.to_string())),
        }
    }
}

/// What the fitness compares the forecast against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Objective {
    /// Final totals known (historical simulation).
    #[default]
    Truth,
    /// Final totals unknown: hold out a share of the declared stations,
    /// forecast them from the rest and score the station-level error.
    HoldOut { fraction: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    #[serde(alias = "initial_population_size")]
    pub population_size: usize,
    pub generations: usize,
    #[serde(alias = "elite_proportion")]
    pub elite_fraction: f64,
    #[serde(alias = "reproduction_eligible_population_proportion")]
    pub eligible_fraction: f64,
    #[serde(alias = "mutation_probability")]
    pub mutation_prob: f64,
    #[serde(alias = "random_re_seeding_proportion")]
    pub reseed_fraction: f64,
    pub n_groups: usize,
    pub metric: Metric,
    /// `None`: number of reference parties (incl. NV) plus two.
    pub min_declared_per_group: Option<usize>,
    /// `None`: ten times the best raw error of generation 0.
    pub penalty_weight: Option<f64>,
    pub seed: u64,
    pub disabled_operators: Vec<Operator>,
    /// Stop when the best fitness improves by less than 0.1% over 100 generations.
    pub early_stop: bool,
    pub objective: Objective,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 100,
            generations: 500,
            elite_fraction: 0.1,
            eligible_fraction: 0.7,
            mutation_prob: 0.003,
            reseed_fraction: 0.1,
            n_groups: 10,
            metric: Metric::Abs,
            min_declared_per_group: None,
            penalty_weight: None,
            seed: 0,
            disabled_operators: Vec::new(),
            early_stop: false,
            objective: Objective::Truth,
        }
    }
}

/// Slice sizes of one generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenerationLayout {
    pub elite: usize,
    pub reseed: usize,
    pub eligible: usize,
    pub offspring: usize,
}

fn share(fraction: f64, n: usize) -> usize {
    libm::round(fraction * n as f64) as usize
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.population_size == 0 {
            return bad("population_size must be at least 1");
        }
        if self.n_groups == 0 || self.n_groups > u32::MAX as usize {
            return bad("n_groups must be at least 1");
        }
        for (name, v) in [
            ("elite_fraction", self.elite_fraction),
            ("eligible_fraction", self.eligible_fraction),
            ("mutation_prob", self.mutation_prob),
            ("reseed_fraction", self.reseed_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1]")));
            }
        }
        if self.elite_fraction + self.reseed_fraction >= 1.0 {
            return bad("elite_fraction + reseed_fraction must be below 1");
        }
        if self.eligible_fraction < self.elite_fraction {
            return bad("eligible_fraction must be at least elite_fraction");
        }
        if let Some(w) = self.penalty_weight {
            if !(w.is_finite() && w >= 0.0) {
                return bad("penalty_weight must be a finite nonnegative number");
            }
        }
        if let Objective::HoldOut { fraction } = self.objective {
            if !(fraction > 0.0 && fraction < 1.0) {
                return bad("hold-out fraction must lie in (0, 1)");
            }
        }
        Ok(())
    }

    pub fn is_enabled(&self, op: Operator) -> bool {
        !self.disabled_operators.contains(&op)
    }

    pub fn disable(&mut self, op: Operator) {
        if self.is_enabled(op) {
            self.disabled_operators.push(op);
            self.disabled_operators.sort();
        }
    }

    pub fn layout(&self) -> GenerationLayout {
        let n = self.population_size;
        let elite = share(self.elite_fraction, n).clamp(1, n);
        let reseed = if self.is_enabled(Operator::Reseed) {
            share(self.reseed_fraction, n).min(n - elite)
        } else {
            0
        };
        let eligible = share(self.eligible_fraction, n).clamp(elite, n);
        GenerationLayout {
            elite,
            reseed,
            eligible,
            offspring: n - elite - reseed,
        }
    }
}

/// Raw error and constraint shortfall of one chromosome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub raw: f64,
    /// Σ_g max(0, min_declared − declared_g).
    pub violation: u64,
}

impl Evaluation {
    pub fn fitness(&self, penalty_weight: f64) -> f64 {
        if self.violation == 0 {
            self.raw
        } else {
            self.raw + penalty_weight * self.violation as f64
        }
    }
}

#[derive(Debug, Clone)]
enum Target {
    Totals(Vec<f64>),
    Stations(BTreeMap<usize, Vec<f64>>),
}

/// Everything needed to score groupings for one scenario.
#[derive(Debug, Clone)]
pub struct FitnessContext {
    forecast: ForecastContext,
    target: Target,
    metric: Metric,
    min_declared: usize,
    n_groups: usize,
}

impl FitnessContext {
    pub fn new(
        dataset: &Dataset,
        declarations: &DeclarationState,
        config: &GaConfig,
    ) -> Result<Self> {
        config.validate()?;
        let min_declared = config
            .min_declared_per_group
            .unwrap_or(dataset.parties().n_ref() + 2);
        let (forecast, target) = match config.objective {
            Objective::Truth => {
                let truth = dataset.true_totals()?.iter().map(|&v| v as f64).collect();
                (
                    ForecastContext::new(dataset, declarations)?,
                    Target::Totals(truth),
                )
            }
            Objective::HoldOut { fraction } => {
                let (training, held) = split_holdout(dataset, declarations, fraction, config.seed)?;
                (
                    ForecastContext::new(dataset, &training)?,
                    Target::Stations(held),
                )
            }
        };
        Ok(Self {
            forecast,
            target,
            metric: config.metric,
            min_declared,
            n_groups: config.n_groups,
        })
    }

    pub fn n_stations(&self) -> usize {
        self.forecast.n_stations()
    }

    pub fn n_groups(&self) -> usize {
        self.n_groups
    }

    pub fn min_declared(&self) -> usize {
        self.min_declared
    }

    pub fn forecast_context(&self) -> &ForecastContext {
        &self.forecast
    }

    pub fn evaluate(&self, genes: &[u32]) -> Evaluation {
        let violation = self
            .forecast
            .declared_per_group(genes, self.n_groups)
            .into_iter()
            .map(|d| self.min_declared.saturating_sub(d) as u64)
            .sum();
        let raw = match &self.target {
            Target::Totals(truth) => self
                .forecast
                .totals(genes)
                .and_then(|t| crate::regression::rmse(&t, truth, self.metric))
                .unwrap_or(f64::INFINITY),
            Target::Stations(held) => self.holdout_error(genes, held),
        };
        Evaluation { raw, violation }
    }

    fn holdout_error(&self, genes: &[u32], held: &BTreeMap<usize, Vec<f64>>) -> f64 {
        let Ok(projections) = self.forecast.projections(genes) else {
            return f64::INFINITY;
        };
        let mut ss = 0.0;
        let mut n = 0usize;
        for (i, p) in projections {
            let Some(actual) = held.get(&i) else { continue };
            let (Ok(f), Ok(t)) = (self.metric.convert(&p), self.metric.convert(actual)) else {
                continue;
            };
            for (a, b) in f.iter().zip(&t) {
                ss += (a - b) * (a - b);
                n += 1;
            }
        }
        if n == 0 {
            f64::INFINITY
        } else {
            libm::sqrt(ss / n as f64)
        }
    }
}

/// Splits declarations into a training state and held-out station vectors.
fn split_holdout(
    dataset: &Dataset,
    declarations: &DeclarationState,
    fraction: f64,
    seed: u64,
) -> Result<(DeclarationState, BTreeMap<usize, Vec<f64>>)> {
    let mut declared: Vec<usize> = declarations
        .declared_ids()
        .filter_map(|id| dataset.index_of(id))
        .collect();
    declared.sort_unstable();
    if declared.len() < 2 {
        return Err(Error::Config(
            "hold-out objective needs at least two declared stations".to_string(),
        ));
    }
    declared.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x0068_6f6c_646f_7574));
    let k = (libm::ceil(fraction * declared.len() as f64) as usize).clamp(1, declared.len() - 1);
    let cs = dataset.constituencies();
    let mut held = BTreeMap::new();
    for &i in &declared[..k] {
        let v = declarations.votes(cs[i].id()).expect("declared");
        held.insert(i, v.iter().map(|&x| x as f64).collect());
    }
    let mut training = DeclarationState::new();
    for &i in &declared[k..] {
        let v = declarations.votes(cs[i].id()).expect("declared");
        training.declare(dataset, cs[i].id(), &v[..v.len() - 1])?;
    }
    Ok((training, held))
}

/// Fitness of one chromosome. An unset `penalty_weight` counts as zero
/// here; [`run`] calibrates it from generation 0.
pub fn fitness(
    chromosome: &GroupingChromosome,
    dataset: &Dataset,
    declarations: &DeclarationState,
    config: &GaConfig,
) -> Result<f64> {
    let ctx = FitnessContext::new(dataset, declarations, config)?;
    chromosome.validate(ctx.n_stations(), ctx.n_groups())?;
    Ok(ctx
        .evaluate(&chromosome.genes)
        .fitness(config.penalty_weight.unwrap_or(0.0)))
}

pub fn random_chromosome<R: Rng + ?Sized>(
    n_stations: usize,
    n_groups: usize,
    rng: &mut R,
) -> GroupingChromosome {
    GroupingChromosome::new(
        (0..n_stations)
            .map(|_| rng.random_range(0..n_groups as u32))
            .collect(),
    )
}

pub fn init_population<R: Rng + ?Sized>(
    config: &GaConfig,
    n_stations: usize,
    rng: &mut R,
) -> Vec<GroupingChromosome> {
    (0..config.population_size)
        .map(|_| random_chromosome(n_stations, config.n_groups, rng))
        .collect()
}

/// Crossover cut: the child takes parent B's genes on `[lo, hi)` and parent
/// A's elsewhere. A one-point cut at `p` is the segment `[p, len)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cut {
    One(usize),
    Two(usize, usize),
}

pub fn crossover_at(a: &[u32], b: &[u32], cut: Cut) -> Result<Vec<u32>> {
    if a.len() != b.len() {
        return Err(Error::GroupingLength {
            expected: a.len(),
            got: b.len(),
        });
    }
    let n = a.len();
    let (lo, hi) = match cut {
        Cut::One(p) => (p.min(n), n),
        Cut::Two(x, y) => (x.min(y).min(n), x.max(y).min(n)),
    };
    let mut child = a.to_vec();
    child[lo..hi].copy_from_slice(&b[lo..hi]);
    Ok(child)
}

/// One- or two-point crossover, chosen with equal probability.
pub fn crossover<R: Rng + ?Sized>(
    a: &GroupingChromosome,
    b: &GroupingChromosome,
    rng: &mut R,
) -> Result<GroupingChromosome> {
    let n = a.genes.len();
    let cut = if rng.random_bool(0.5) {
        Cut::One(rng.random_range(0..=n))
    } else {
        Cut::Two(rng.random_range(0..=n), rng.random_range(0..=n))
    };
    crossover_at(&a.genes, &b.genes, cut).map(GroupingChromosome::new)
}

/// Resamples each gene uniformly over all labels with probability `prob`.
pub fn mutate<R: Rng + ?Sized>(
    chromosome: &GroupingChromosome,
    prob: f64,
    n_groups: usize,
    rng: &mut R,
) -> GroupingChromosome {
    let mut genes = chromosome.genes.clone();
    let mut changed = false;
    if prob > 0.0 {
        for g in genes.iter_mut() {
            if rng.random::<f64>() < prob {
                let new = rng.random_range(0..n_groups as u32);
                changed |= new != *g;
                *g = new;
            }
        }
    }
    GroupingChromosome {
        genes,
        fitness: if changed { None } else { chromosome.fitness },
    }
}

/// Indices of `population` ordered by ascending fitness; unevaluated
/// chromosomes sort last and ties keep their original order.
pub fn ranking(population: &[GroupingChromosome]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..population.len()).collect();
    order.sort_by(|&i, &j| {
        let fi = population[i].fitness.unwrap_or(f64::INFINITY);
        let fj = population[j].fitness.unwrap_or(f64::INFINITY);
        fi.total_cmp(&fj).then(i.cmp(&j))
    });
    order
}

/// Builds the next generation from an evaluated population: elites, random
/// re-seeds, then offspring.
pub fn next_generation<R: Rng + ?Sized>(
    population: &[GroupingChromosome],
    config: &GaConfig,
    rng: &mut R,
) -> Vec<GroupingChromosome> {
    let n = population.len();
    if n == 0 {
        return Vec::new();
    }
    let n_stations = population[0].genes.len();
    let sized = GaConfig {
        population_size: n,
        ..config.clone()
    };
    let layout = sized.layout();
    let order = ranking(population);
    let mut next = Vec::with_capacity(n);
    for &i in &order[..layout.elite] {
        next.push(population[i].clone());
    }
    for _ in 0..layout.reseed {
        next.push(random_chromosome(n_stations, config.n_groups, rng));
    }
    let crossing = config.is_enabled(Operator::Crossover);
    let mutating = config.is_enabled(Operator::Mutation);
    for _ in 0..layout.offspring {
        let p1 = &population[order[rng.random_range(0..layout.elite)]];
        let mut child = if crossing {
            let p2 = &population[order[rng.random_range(0..layout.eligible)]];
            crossover(p1, p2, rng).expect("equal lengths within a population")
        } else {
            p1.clone()
        };
        if mutating {
            child = mutate(&child, config.mutation_prob, config.n_groups, rng);
        }
        next.push(child);
    }
    next
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
    /// Sample standard deviation of the population's fitness.
    pub spread: f64,
    pub best_id: u64,
}

/// One record per generation, generation 0 being the initial population.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub records: Vec<GenerationRecord>,
}

impl ConvergenceTrace {
    pub fn best(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.best).collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.mean).collect()
    }

    /// First generation whose best fitness is at or below `fraction` of the
    /// initial best.
    pub fn generation_reaching(&self, fraction: f64) -> Option<usize> {
        let first = self.records.first()?.best;
        self.records
            .iter()
            .find(|r| r.best <= fraction * first)
            .map(|r| r.generation)
    }
}

/// Scores a batch of chromosomes. Implementations must return results in
/// input order and independent of evaluation order.
pub trait BatchEvaluator {
    fn evaluate_batch(&self, ctx: &FitnessContext, batch: &[&[u32]]) -> Vec<Evaluation>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl BatchEvaluator for Sequential {
    fn evaluate_batch(&self, ctx: &FitnessContext, batch: &[&[u32]]) -> Vec<Evaluation> {
        batch.iter().map(|g| ctx.evaluate(g)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub best: GroupingChromosome,
    pub trace: ConvergenceTrace,
    pub penalty_weight: f64,
    /// Stopped before `config.generations` (early stop or observer).
    pub stopped_early: bool,
}

/// Evaluations of the current population, keyed by genes.
type Cache = BTreeMap<Vec<u32>, Evaluation>;

fn evaluate_population(
    ctx: &FitnessContext,
    population: &[GroupingChromosome],
    cache: &Cache,
    evaluator: &dyn BatchEvaluator,
) -> Cache {
    let mut fresh: Cache = BTreeMap::new();
    let mut pending: Vec<&[u32]> = Vec::new();
    for c in population {
        if let Some(e) = cache.get(&c.genes) {
            fresh.insert(c.genes.clone(), *e);
        } else if !fresh.contains_key(&c.genes) && !pending.contains(&c.genes.as_slice()) {
            pending.push(&c.genes);
        }
    }
    let results = evaluator.evaluate_batch(ctx, &pending);
    for (g, e) in pending.into_iter().zip(results) {
        fresh.insert(g.to_vec(), e);
    }
    fresh
}

fn record(generation: usize, population: &[GroupingChromosome]) -> GenerationRecord {
    let fits: Vec<f64> = population
        .iter()
        .map(|c| c.fitness.unwrap_or(f64::INFINITY))
        .collect();
    let best_idx = ranking(population)[0];
    GenerationRecord {
        generation,
        best: fits[best_idx],
        mean: stats::mean(&fits),
        spread: stats::sample_sd(&fits),
        best_id: population[best_idx].snapshot_id(),
    }
}

/// Runs the optimizer sequentially.
pub fn run(ctx: &FitnessContext, config: &GaConfig) -> Result<RunOutcome> {
    run_with(ctx, config, &Sequential, &mut |_| ControlFlow::Continue(()))
}

/// Runs the optimizer with a custom evaluator and a per-generation observer;
/// the observer may stop the run by returning `Break`.
pub fn run_with(
    ctx: &FitnessContext,
    config: &GaConfig,
    evaluator: &dyn BatchEvaluator,
    observer: &mut dyn FnMut(&GenerationRecord) -> ControlFlow<()>,
) -> Result<RunOutcome> {
    config.validate()?;
    if config.n_groups != ctx.n_groups() {
        return Err(Error::Config(format!(
            "fitness context built for {} groups, config has {}",
            ctx.n_groups(),
            config.n_groups
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut population = init_population(config, ctx.n_stations(), &mut rng);
    let mut cache = evaluate_population(ctx, &population, &Cache::new(), evaluator);

    let penalty_weight = config.penalty_weight.unwrap_or_else(|| {
        let best_raw = cache.values().map(|e| e.raw).fold(f64::INFINITY, f64::min);
        if best_raw.is_finite() && best_raw > 0.0 {
            10.0 * best_raw
        } else {
            1.0
        }
    });
    let assign = |pop: &mut [GroupingChromosome], cache: &Cache| {
        for c in pop.iter_mut() {
            c.fitness = Some(cache[&c.genes].fitness(penalty_weight));
        }
    };
    assign(&mut population, &cache);

    let mut trace = ConvergenceTrace::default();
    let first = record(0, &population);
    trace.records.push(first);
    let mut stopped_early = observer(&first).is_break();

    let mut generation = 1;
    while !stopped_early && generation <= config.generations {
        population = next_generation(&population, config, &mut rng);
        cache = evaluate_population(ctx, &population, &cache, evaluator);
        assign(&mut population, &cache);
        let rec = record(generation, &population);
        trace.records.push(rec);
        if observer(&rec).is_break() {
            stopped_early = true;
        }
        if config.early_stop && generation >= 100 {
            let old = trace.records[generation - 100].best;
            if rec.best >= old * (1.0 - 1e-3) {
                stopped_early = generation < config.generations;
                break;
            }
        }
        generation += 1;
    }

    let best = population[ranking(&population)[0]].clone();
    Ok(RunOutcome {
        best,
        trace,
        penalty_weight,
        stopped_early,
    })
}

/// Builds the fitness context and runs the optimizer.
pub fn optimize(
    dataset: &Dataset,
    declarations: &DeclarationState,
    config: &GaConfig,
) -> Result<RunOutcome> {
    let ctx = FitnessContext::new(dataset, declarations, config)?;
    run(&ctx, config)
}

/// Runs with one operator switched off for `generations` generations.
pub fn ablation_study(
    ctx: &FitnessContext,
    config: &GaConfig,
    operator: &str,
    generations: usize,
    evaluator: &dyn BatchEvaluator,
) -> Result<RunOutcome> {
    let op: Operator = operator.parse()?;
    let mut cfg = config.clone();
    cfg.disable(op);
    cfg.generations = generations;
    run_with(ctx, &cfg, evaluator, &mut |_| ControlFlow::Continue(()))
}

/// Indicator rows of the multi-run table.
pub const INDICATORS: [&str; 5] = ["Min", "Median", "Mean", "Max", "St.Dev."];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultirunSummary {
    pub seeds: Vec<u64>,
    /// Over all runs and generations: generational mean fitness.
    pub mean_fitness: Summary,
    /// Over all runs and generations: generational best fitness.
    pub best_fitness: Summary,
    /// Cross-run standard deviation per generation of the mean fitness.
    pub per_generation_sd_mean: Vec<f64>,
    /// Cross-run standard deviation per generation of the best fitness.
    pub per_generation_sd_best: Vec<f64>,
    pub final_best: Vec<f64>,
}

impl MultirunSummary {
    /// `(indicator, mean column, best column)` rows.
    pub fn table(&self) -> [(&'static str, f64, f64); 5] {
        let (m, b) = (&self.mean_fitness, &self.best_fitness);
        [
            (INDICATORS[0], m.min, b.min),
            (INDICATORS[1], m.median, b.median),
            (INDICATORS[2], m.mean, b.mean),
            (INDICATORS[3], m.max, b.max),
            (INDICATORS[4], m.sd, b.sd),
        ]
    }
}

/// Runs once per seed and summarizes the convergence behaviour.
pub fn multirun_stats(
    ctx: &FitnessContext,
    config: &GaConfig,
    seeds: &[u64],
    evaluator: &dyn BatchEvaluator,
) -> Result<(MultirunSummary, Vec<RunOutcome>)> {
    if seeds.len() < 2 {
        return Err(Error::Config(
            "multirun needs at least two runs".to_string(),
        ));
    }
    let mut runs = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let cfg = GaConfig {
            seed,
            ..config.clone()
        };
        runs.push(run_with(ctx, &cfg, evaluator, &mut |_| {
            ControlFlow::Continue(())
        })?);
    }
    let all_mean: Vec<f64> = runs.iter().flat_map(|r| r.trace.mean()).collect();
    let all_best: Vec<f64> = runs.iter().flat_map(|r| r.trace.best()).collect();
    let len = runs
        .iter()
        .map(|r| r.trace.records.len())
        .min()
        .unwrap_or(0);
    let per_gen = |f: fn(&GenerationRecord) -> f64| -> Vec<f64> {
        (0..len)
            .map(|g| {
                let xs: Vec<f64> = runs.iter().map(|r| f(&r.trace.records[g])).collect();
                stats::sample_sd(&xs)
            })
            .collect()
    };
    let summary = MultirunSummary {
        seeds: seeds.to_vec(),
        mean_fitness: Summary::of(&all_mean),
        best_fitness: Summary::of(&all_best),
        per_generation_sd_mean: per_gen(|r| r.mean),
        per_generation_sd_best: per_gen(|r| r.best),
        final_best: runs
            .iter()
            .map(|r| r.best.fitness.unwrap_or(f64::INFINITY))
            .collect(),
    };
    Ok((summary, runs))
}

/// Relabels groups in order of first appearance; fitness is invariant
/// under this map.
pub fn canonical_labels(genes: &[u32]) -> Vec<u32> {
    let mut map: BTreeMap<u32, u32> = BTreeMap::new();
    genes
        .iter()
        .map(|g| {
            let next = map.len() as u32;
            *map.entry(*g).or_insert(next)
        })
        .collect()
}
