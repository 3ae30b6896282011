use nightcast_core::ga::{
    crossover, crossover_at, init_population, mutate, next_generation, random_chromosome, ranking,
    Cut, Sequential,
};
use nightcast_core::{
    ablation_study, fitness, generate_synthetic, make_scenario, multirun_stats, run,
    DeclarationState, FitnessContext, GaConfig, GroupingChromosome, Metric, Operator, SynthSpec,
    SyntheticElection,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small(seed: u64, noise: f64) -> SyntheticElection {
    generate_synthetic(&SynthSpec {
        n_groups: 2,
        stations_per_group: 10,
        ref_party_count: 2,
        cur_party_count: 2,
        noise_sd: noise,
        seed,
        ..SynthSpec::default()
    })
    .unwrap()
}

fn cfg(n_groups: usize, seed: u64) -> GaConfig {
    GaConfig {
        population_size: 20,
        generations: 15,
        n_groups,
        seed,
        ..GaConfig::default()
    }
}

#[test]
fn crossover_examples() {
    let a = [1, 1, 1, 1];
    let b = [2, 2, 2, 2];
    assert_eq!(crossover_at(&a, &b, Cut::One(2)).unwrap(), vec![1, 1, 2, 2]);
    assert_eq!(
        crossover_at(&a, &b, Cut::Two(1, 3)).unwrap(),
        vec![1, 2, 2, 1]
    );
    assert!(crossover_at(&a, &b[..3], Cut::One(1)).is_err());
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let p = GroupingChromosome::new(vec![0, 3, 1, 2, 2]);
    for _ in 0..50 {
        assert_eq!(crossover(&p, &p, &mut rng).unwrap().genes, p.genes);
    }
}

#[test]
fn mutation_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let c = GroupingChromosome::new(vec![3, 1, 4, 1, 5]);
    assert_eq!(mutate(&c, 0.0, 10, &mut rng).genes, c.genes);
    let z = GroupingChromosome::new(vec![0; 40]);
    assert_eq!(mutate(&z, 1.0, 1, &mut rng).genes, z.genes);
}

#[test]
fn mutation_rate_statistics() {
    // With ~10^9 labels a resample virtually never reproduces the old
    // label, so changed genes count resampled genes.
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let expected = 542.0 * 0.003;
    for (n_groups, factor) in [(1usize << 30, 1.0), (10, 0.9)] {
        let base = random_chromosome(542, n_groups, &mut rng);
        let mut total = 0usize;
        for _ in 0..10_000 {
            let m = mutate(&base, 0.003, n_groups, &mut rng);
            total += m
                .genes
                .iter()
                .zip(&base.genes)
                .filter(|(a, b)| a != b)
                .count();
        }
        let mean = total as f64 / 10_000.0;
        let want = expected * factor;
        assert!(
            (mean - want).abs() <= 0.05 * want,
            "{n_groups} labels: {mean} vs {want}"
        );
    }
}

#[test]
fn init_population_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pop = init_population(&GaConfig::default(), 542, &mut rng);
    assert_eq!(pop.len(), 100);
    assert!(pop.iter().all(|c| c.genes.len() == 542));
    let one = GaConfig {
        n_groups: 1,
        ..GaConfig::default()
    };
    assert!(init_population(&one, 30, &mut rng)
        .iter()
        .all(|c| c.genes.iter().all(|&g| g == 0)));
    let a = init_population(&GaConfig::default(), 50, &mut ChaCha8Rng::seed_from_u64(9));
    let b = init_population(&GaConfig::default(), 50, &mut ChaCha8Rng::seed_from_u64(9));
    assert_eq!(a, b);
}

#[test]
fn default_generation_layout() {
    let l = GaConfig::default().layout();
    assert_eq!(
        (l.elite, l.reseed, l.offspring, l.eligible),
        (10, 10, 80, 70)
    );
    let mut c = GaConfig::default();
    c.disable(Operator::Reseed);
    let l = c.layout();
    assert_eq!((l.elite, l.reseed, l.offspring), (10, 0, 90));
}

#[test]
fn penalty_arithmetic() {
    let syn = small(4, 0.0);
    let ds = &syn.dataset;
    let decl = DeclarationState::all_declared(ds).unwrap();
    let zeros = GroupingChromosome::new(vec![0; ds.len()]);
    let weight = 3.5;
    let ten = GaConfig {
        n_groups: 10,
        min_declared_per_group: Some(5),
        penalty_weight: Some(weight),
        ..GaConfig::default()
    };
    let one = GaConfig {
        n_groups: 1,
        ..ten.clone()
    };
    let penalized = fitness(&zeros, ds, &decl, &ten).unwrap();
    let plain = fitness(&zeros, ds, &decl, &one).unwrap();
    assert!((penalized - plain - weight * 9.0 * 5.0).abs() < 1e-9);
}

#[test]
fn ground_truth_fitness_is_zero_without_noise() {
    let syn = generate_synthetic(&SynthSpec {
        seed: 8,
        ..SynthSpec::default()
    })
    .unwrap();
    let decl = make_scenario(&syn.dataset, 0.5, 8).unwrap();
    let c = GaConfig {
        n_groups: 3,
        min_declared_per_group: Some(0),
        ..GaConfig::default()
    };
    let truth = GroupingChromosome::new(syn.true_grouping.clone());
    for metric in Metric::ALL {
        let f = fitness(
            &truth,
            &syn.dataset,
            &decl,
            &GaConfig {
                metric,
                ..c.clone()
            },
        )
        .unwrap();
        assert!(f <= 1e-6, "{metric}: {f}");
    }
}

#[test]
fn frozen_population_keeps_its_best() {
    let syn = small(5, 1.0);
    let decl = make_scenario(&syn.dataset, 0.5, 5).unwrap();
    let mut c = cfg(2, 5);
    for op in [Operator::Mutation, Operator::Crossover, Operator::Reseed] {
        c.disable(op);
    }
    let ctx = FitnessContext::new(&syn.dataset, &decl, &c).unwrap();
    let out = run(&ctx, &c).unwrap();
    let best = out.trace.best();
    assert!(best.iter().all(|b| *b == best[0]));
}

#[test]
fn zero_generations_returns_initial_best() {
    let syn = small(6, 1.0);
    let decl = make_scenario(&syn.dataset, 0.5, 6).unwrap();
    let c = GaConfig {
        generations: 0,
        ..cfg(2, 6)
    };
    let ctx = FitnessContext::new(&syn.dataset, &decl, &c).unwrap();
    let out = run(&ctx, &c).unwrap();
    assert_eq!(out.trace.records.len(), 1);
    assert_eq!(out.best.fitness, Some(out.trace.records[0].best));
}

#[test]
fn ablation_rejects_unknown_operator() {
    let syn = small(7, 1.0);
    let decl = make_scenario(&syn.dataset, 0.5, 7).unwrap();
    let c = cfg(2, 7);
    let ctx = FitnessContext::new(&syn.dataset, &decl, &c).unwrap();
    assert!(ablation_study(&ctx, &c, "selection", 5, &Sequential).is_err());
    let out = ablation_study(&ctx, &c, "crossover", 5, &Sequential).unwrap();
    assert_eq!(out.trace.records.len(), 6);
}

#[test]
fn multirun_identical_seeds_have_no_spread() {
    let syn = small(8, 1.0);
    let decl = make_scenario(&syn.dataset, 0.5, 8).unwrap();
    let c = cfg(2, 0);
    let ctx = FitnessContext::new(&syn.dataset, &decl, &c).unwrap();
    let (summary, _) = multirun_stats(&ctx, &c, &[4, 4, 4], &Sequential).unwrap();
    assert!(summary.per_generation_sd_best.iter().all(|s| *s == 0.0));
    assert!(summary.per_generation_sd_mean.iter().all(|s| *s == 0.0));
    assert_eq!(summary.table().len(), 5);
    assert!(multirun_stats(&ctx, &c, &[1], &Sequential).is_err());
}

fn valid(c: &GroupingChromosome, n: usize, k: usize) -> bool {
    c.genes.len() == n && c.genes.iter().all(|&g| (g as usize) < k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn crossover_child_takes_parent_genes(
        pair in (1usize..60).prop_flat_map(|n| (
            prop::collection::vec(0u32..8, n),
            prop::collection::vec(0u32..8, n),
        )),
        seed in any::<u64>(),
    ) {
        let (a, b) = pair;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let child = crossover(&GroupingChromosome::new(a.clone()), &GroupingChromosome::new(b.clone()), &mut rng).unwrap();
        prop_assert_eq!(child.genes.len(), a.len());
        for i in 0..a.len() {
            prop_assert!(child.genes[i] == a[i] || child.genes[i] == b[i]);
        }
    }

    #[test]
    fn operators_preserve_validity(
        n in 1usize..80,
        k in 1usize..12,
        pop in 1usize..40,
        prob in 0.0f64..=1.0,
        disabled in prop::collection::vec(0usize..3, 0..3),
        seed in any::<u64>(),
    ) {
        let mut c = GaConfig { population_size: pop, n_groups: k, mutation_prob: prob, ..GaConfig::default() };
        for d in disabled {
            c.disable([Operator::Mutation, Operator::Crossover, Operator::Reseed][d]);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut population = init_population(&c, n, &mut rng);
        prop_assert_eq!(population.len(), pop);
        for round in 0..3 {
            for (i, ch) in population.iter_mut().enumerate() {
                ch.fitness = Some(((i * 7 + round) % 5) as f64);
            }
            population = next_generation(&population, &c, &mut rng);
            prop_assert_eq!(population.len(), pop);
            for ch in &population {
                prop_assert!(valid(ch, n, k));
            }
        }
        let m = mutate(&population[0], prob, k, &mut rng);
        prop_assert!(valid(&m, n, k));
        let x = crossover(&population[0], &population[pop - 1], &mut rng).unwrap();
        prop_assert!(valid(&x, n, k));
    }

    #[test]
    fn elites_survive_unchanged(seed in any::<u64>(), pop in 10usize..40) {
        let c = GaConfig { population_size: pop, n_groups: 4, ..GaConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut population = init_population(&c, 25, &mut rng);
        for ch in population.iter_mut() {
            ch.fitness = Some(rand::Rng::random::<f64>(&mut rng));
        }
        let order = ranking(&population);
        let next = next_generation(&population, &c, &mut rng);
        for (slot, &i) in order[..c.layout().elite].iter().enumerate() {
            prop_assert_eq!(&next[slot], &population[i]);
        }
    }

    #[test]
    fn fitness_ignores_label_names(seed in 0u64..1000, metric_idx in 0usize..3) {
        let syn = small(seed, 2.0);
        let ds = &syn.dataset;
        let decl = make_scenario(ds, 0.4, seed).unwrap();
        let c = GaConfig {
            n_groups: 4,
            metric: Metric::ALL[metric_idx],
            penalty_weight: Some(2.0),
            ..GaConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let genes = random_chromosome(ds.len(), 4, &mut rng);
        let mut perm: Vec<u32> = (0..4).collect();
        perm.shuffle(&mut rng);
        let relabeled = GroupingChromosome::new(genes.genes.iter().map(|&g| perm[g as usize]).collect());
        let f = fitness(&genes, ds, &decl, &c).unwrap();
        let g = fitness(&relabeled, ds, &decl, &c).unwrap();
        prop_assert_eq!(f, g);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn runs_are_elitist_and_deterministic(
        seed in any::<u64>(),
        disabled in prop::collection::vec(0usize..3, 0..3),
        metric_idx in 0usize..3,
    ) {
        let syn = small(seed % 50, 2.0);
        let decl = make_scenario(&syn.dataset, 0.5, seed).unwrap();
        let mut c = GaConfig { metric: Metric::ALL[metric_idx], ..cfg(3, seed) };
        for d in disabled {
            c.disable([Operator::Mutation, Operator::Crossover, Operator::Reseed][d]);
        }
        let ctx = FitnessContext::new(&syn.dataset, &decl, &c).unwrap();
        let a = run(&ctx, &c).unwrap();
        let b = run(&ctx, &c).unwrap();
        prop_assert_eq!(&a.trace, &b.trace);
        prop_assert_eq!(&a.best, &b.best);
        prop_assert_eq!(a.trace.records.len(), c.generations + 1);
        for w in a.trace.best().windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
        prop_assert!(valid(&a.best, syn.dataset.len(), 3));
        prop_assert_eq!(a.best.fitness, Some(*a.trace.best().last().unwrap()));
    }
}
