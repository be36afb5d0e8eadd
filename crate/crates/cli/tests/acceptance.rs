//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeSet;
use std::fs;
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use gomea_core::engine::parallel::{
    determine_and_insert_donor_genes, determine_improvements, parallel_partial_evaluations, Decision,
};
use gomea_core::engine::{run_parallel, run_serial, ModelKind, PopulationSizing, RunConfig, Termination};
use gomea_core::ims::{Generational, ImsConfig, ImsState, Interrupt};
use gomea_core::linkage::{learn_tree_upgma, weight_similarity};
use gomea_core::maxcut::{generate_complete, generate_torus};
use gomea_core::scheduling::group_stats;
use gomea_core::trace::{is_monotone, parse_trace};
use gomea_core::{
    apply_partial, build_lmig, build_vig, full_evaluate, partial_evaluate, welsh_powell, EvaluatedSolution, Fos,
    Genotype, MaxCutInstance, RngStream, WeightScheme,
};

type Check = (&'static str, Duration, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn random_graph(rng: &mut RngStream, min_vertices: usize, max_vertices: usize) -> MaxCutInstance<i64> {
    let n = min_vertices + rng.below(max_vertices - min_vertices + 1);
    let per_mille = 50 + rng.below(700);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.below(1000) < per_mille {
                edges.push((u, v, rng.below(21) as i64 - 8));
            }
        }
    }
    if edges.is_empty() {
        edges.push((0, 1, 3));
    }
    MaxCutInstance::new(n, edges).unwrap()
}

fn random_genotype(rng: &mut RngStream, len: usize) -> Genotype {
    Genotype((0..len).map(|_| rng.bit()).collect())
}

fn partial_evaluation_exactness() -> Outcome {
    let mut rng = RngStream::new(1);
    let mut exact = 0;
    let cases = 1000;
    for _ in 0..cases {
        let inst = random_graph(&mut rng, 2, 100);
        let problem = inst.as_graybox();
        let n = inst.num_vertices();
        let base = full_evaluate(&problem, &random_genotype(&mut rng, n)).unwrap();
        let k = 1 + rng.below(8.min(n));
        let modified: Vec<usize> = rng.permutation(n)[..k].to_vec();
        let values: Vec<u8> = (0..k).map(|_| rng.bit()).collect();
        let mut changed = base.genotype.clone();
        for (&u, &b) in modified.iter().zip(&values) {
            changed.0[u] = b;
        }
        let eval = partial_evaluate(&problem, &base, &modified, &values).unwrap();
        let truth = inst.cut_value(&changed).unwrap() - inst.cut_value(&base.genotype).unwrap();
        if eval.delta == truth {
            exact += 1;
        }
    }
    outcome(exact == cases, format!("{exact}/{cases} deltas exact"))
}

fn oracle_equivalence() -> Outcome {
    let mut rng = RngStream::new(2);
    let runs = 50;
    let mut matched = 0;
    for seed in 0..runs {
        let inst = random_graph(&mut rng, 2, 12);
        let (optimum, _) = inst.brute_force_optimum().unwrap();
        let termination = Termination {
            max_evaluations: Some(1e6),
            target_fitness: Some(optimum),
            ..Termination::default()
        };
        let mut config = RunConfig::new(
            PopulationSizing::Ims(ImsConfig::default()),
            ModelKind::Flt,
            seed,
            termination,
        );
        config.similarity = Some(weight_similarity(&inst));
        let result = run_serial(Arc::new(inst.as_graybox()), &config).unwrap();
        if result.best.fitness == optimum {
            matched += 1;
        }
    }
    outcome(
        matched >= 48,
        format!("{matched}/{runs} runs matched the exhaustive optimum (need 48)"),
    )
}

/// Edges of the example linkage-model interaction graph, 1-based set labels.
const FIGURE_EDGES: [(usize, usize); 22] = [
    (1, 2),
    (1, 3),
    (2, 3),
    (3, 4),
    (3, 5),
    (4, 5),
    (1, 6),
    (3, 6),
    (1, 8),
    (2, 8),
    (2, 6),
    (3, 8),
    (6, 8),
    (4, 7),
    (5, 7),
    (4, 8),
    (5, 8),
    (4, 6),
    (7, 8),
    (3, 7),
    (6, 7),
    (5, 6),
];

fn example_coloring() -> Outcome {
    let inst =
        MaxCutInstance::<i64>::new(5, [(0, 1, 1), (0, 2, 1), (1, 2, 1), (2, 3, 1), (2, 4, 1), (3, 4, 1)]).unwrap();
    let fos = Fos::from_sets(vec![
        vec![0],
        vec![1],
        vec![2],
        vec![3],
        vec![4],
        vec![0, 2],
        vec![3, 4],
        vec![0, 1, 2],
    ]);
    let lmig = build_lmig(&fos, &build_vig(&inst.as_graybox()));
    let got: BTreeSet<(usize, usize)> = lmig.edges().collect();
    let want: BTreeSet<(usize, usize)> = FIGURE_EDGES.iter().map(|&(a, b)| (a - 1, b - 1)).collect();
    let groups = welsh_powell(&lmig);
    let clique = (2..8).all(|a| (a + 1..8).all(|b| lmig.has_edge(a, b)));
    outcome(
        got == want && groups.len() == 6 && clique && groups.is_proper_partition(&lmig),
        format!(
            "{} edges ({} expected, identical: {}), {} groups, 6-clique certified: {clique}",
            got.len(),
            want.len(),
            got == want,
            groups.len()
        ),
    )
}

fn group_independence() -> Outcome {
    let mut rng = RngStream::new(4);
    let batches = 500;
    let orders = 20;
    let mut failures = 0;
    let mut accepted_steps = 0;
    for _ in 0..batches {
        let w = 3 + rng.below(8);
        let h = 3 + rng.below(8);
        let torus = generate_torus::<i64>(
            w,
            h,
            WeightScheme::UniformInt { lo: -4, hi: 6 },
            rng.below(1 << 20) as u64,
        )
        .unwrap();
        let problem = torus.as_graybox();
        let fos = learn_tree_upgma(&weight_similarity(&torus), Some(10)).unwrap();
        let groups = welsh_powell(&build_lmig(&fos, &build_vig(&problem)));
        let group = groups.group(rng.below(groups.len())).to_vec();
        let parents: Vec<EvaluatedSolution<i64>> = (0..2 + rng.below(10))
            .map(|_| full_evaluate(&problem, &random_genotype(&mut rng, w * h)).unwrap())
            .collect();
        let mut trial = parents.clone();
        let plan = determine_and_insert_donor_genes(&fos, &group, &parents, &parents, &mut trial, &mut rng);
        let batch = parallel_partial_evaluations(&problem, &fos, &group, &parents, &trial, &plan).unwrap();
        let acceptance = determine_improvements(&batch.delta, &parents, None);

        let mut ok = true;
        let mut finals: Option<Vec<Genotype>> = None;
        for round in 0..orders {
            let order = if round == 0 {
                (0..group.len()).collect()
            } else {
                rng.permutation(group.len())
            };
            let mut genotypes = Vec::with_capacity(parents.len());
            for (s, parent) in parents.iter().enumerate() {
                let mut current = parent.clone();
                for &j in &order {
                    if plan.is_skipped(s, j) {
                        ok &= batch.delta.get(s, j).is_none();
                        continue;
                    }
                    let set = fos.set(group[j]);
                    let values: Vec<u8> = set.iter().map(|&u| trial[s].genotype[u]).collect();
                    let eval = partial_evaluate(&problem, &current, set, &values).unwrap();
                    ok &= batch.delta.get(s, j) == Some(eval.delta);
                    if acceptance.get(s, j) == Decision::Accept {
                        accepted_steps += usize::from(round == 0);
                        current = apply_partial(current, set, &values, &eval).unwrap();
                    }
                }
                genotypes.push(current.genotype);
            }
            match &finals {
                None => finals = Some(genotypes),
                Some(first) => ok &= *first == genotypes,
            }
        }
        failures += usize::from(!ok);
    }
    outcome(
        failures == 0,
        format!("{failures}/{batches} batches violated independence ({accepted_steps} accepted steps, {orders} orders each)"),
    )
}

fn determinism_across_workers() -> Outcome {
    let torus = generate_torus::<i64>(40, 40, WeightScheme::Unit, 0).unwrap();
    let problem = Arc::new(torus.as_graybox());
    let mut traces = Vec::new();
    for workers in [1, 2, 8] {
        let termination = Termination {
            max_generations: Some(50),
            ..Termination::default()
        };
        let mut config = RunConfig::new(
            PopulationSizing::Ims(ImsConfig::default()),
            ModelKind::Bflt(10),
            7,
            termination,
        );
        config.workers = workers;
        config.similarity = Some(weight_similarity(&torus));
        let result = run_parallel(Arc::clone(&problem), &config).unwrap();
        let trace: Vec<(u64, u64, usize, i64)> = result
            .trace
            .iter()
            .map(|r| (r.evaluations.to_bits(), r.generation, r.population, r.fitness))
            .collect();
        traces.push((trace, result.best.genotype));
    }
    let identical = traces.windows(2).all(|w| w[0] == w[1]);
    outcome(
        identical,
        format!(
            "workers 1/2/8: {} trace records each, identical: {identical}",
            traces[0].0.len()
        ),
    )
}

fn structure_vs_parallelism() -> Outcome {
    let mut complete = Vec::new();
    let mut complete_ok = true;
    for n in [10, 20, 40] {
        let inst = generate_complete::<i64>(n, WeightScheme::Unit, 0).unwrap();
        let fos = learn_tree_upgma(&weight_similarity(&inst), None).unwrap();
        let groups = welsh_powell(&build_lmig(&fos, &build_vig(&inst.as_graybox())));
        complete_ok &= groups.len() == fos.len();
        complete.push(format!("n={n}: k={} m={}", groups.len(), fos.len()));
    }
    let mut ks = Vec::new();
    let mut widths = Vec::new();
    for side in [10, 20, 40] {
        let torus = generate_torus::<i64>(side, side, WeightScheme::Unit, 0).unwrap();
        let fos = learn_tree_upgma(&weight_similarity(&torus), Some(10)).unwrap();
        let groups = welsh_powell(&build_lmig(&fos, &build_vig(&torus.as_graybox())));
        ks.push(groups.len());
        widths.push(group_stats(&groups).mean_width);
    }
    let (lo, hi) = (*ks.iter().min().unwrap(), *ks.iter().max().unwrap());
    let torus_ok = hi <= 5 * 10 && ks[2] <= ks[0] && hi - lo <= 2;
    let widths_grow = widths.windows(2).all(|w| w[1] > 2.0 * w[0]);
    outcome(
        complete_ok && torus_ok && widths_grow,
        format!(
            "complete {}; torus BFLT-10 k={:?} for l=100/400/1600, mean group width {:.1?}",
            complete.join(", "),
            ks,
            widths
        ),
    )
}

struct Never;

impl Interrupt for Never {
    fn should_stop(&self) -> bool {
        false
    }
}

struct Dummy {
    size: usize,
    generations: u64,
}

impl Generational<Never> for Dummy {
    fn run_generation(&mut self, _: &mut Never) {
        self.generations += 1;
    }

    fn generations(&self) -> u64 {
        self.generations
    }

    fn population_size(&self) -> usize {
        self.size
    }
}

fn ims_schedule() -> Outcome {
    let config = ImsConfig {
        n_base: 16,
        c: 4,
        max_populations: 12,
    };
    let mut state: ImsState<Dummy> = ImsState::new(config);
    let mut spawn = |_: usize, size: usize, _: &mut Never| Dummy { size, generations: 0 };
    let mut ok = true;
    for t in 1..=100u64 {
        state.step(&mut Never, &mut spawn);
        let pops = state.populations();
        for (i, p) in pops.iter().enumerate() {
            ok &= p.size == 16 << i;
            ok &= p.generations == t / 4u64.pow(i as u32);
            if i > 0 {
                ok &= pops[i - 1].generations >= 4 * p.generations;
            }
        }
        ok &= pops.len() == 1 + (1..12u32).take_while(|&i| 4u64.pow(i) <= t).count();
    }
    let gens: Vec<u64> = state.populations().iter().map(|p| p.generations).collect();
    outcome(ok, format!("after 100 steps generations {gens:?}"))
}

fn cli_smoke() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let instance = dir.path().join("g800.txt");
    let trace = dir.path().join("trace.csv");
    // G-set style: 800 vertices, about 6% density, unit weights
    let mut rng = RngStream::new(800);
    let mut edges = Vec::new();
    for u in 1..=800 {
        for v in u + 1..=800 {
            if rng.below(1000) < 60 {
                edges.push(format!("{u} {v} 1"));
            }
        }
    }
    fs::write(&instance, format!("800 {}\n{}\n", edges.len(), edges.join("\n"))).unwrap();

    let started = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_gomea"))
        .args([
            "run",
            instance.to_str().unwrap(),
            "--engine",
            "parallel",
            "--model",
            "bflt:10",
            "--workers",
            "4",
        ])
        .args(["--max-seconds", "30", "--trace", trace.to_str().unwrap()])
        .output()
        .unwrap();
    let elapsed = started.elapsed();
    let records = fs::read_to_string(&trace)
        .ok()
        .and_then(|t| parse_trace::<i64>(&t).ok())
        .unwrap_or_default();
    let ok = out.status.success() && records.len() > 1 && is_monotone(&records) && elapsed < Duration::from_secs(45);
    outcome(
        ok,
        format!(
            "{} edges, exit {:?}, {} trace rows, final fitness {:?}, {:.1}s",
            edges.len(),
            out.status.code(),
            records.len(),
            records.last().map(|r| r.fitness),
            elapsed.as_secs_f64()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Check; 8] = [
        (
            "partial-evaluation exactness",
            Duration::from_secs(5),
            partial_evaluation_exactness,
        ),
        ("oracle equivalence", Duration::from_secs(120), oracle_equivalence),
        ("example LMIG and coloring", Duration::from_secs(1), example_coloring),
        ("group independence", Duration::from_secs(60), group_independence),
        (
            "determinism across workers",
            Duration::from_secs(120),
            determinism_across_workers,
        ),
        (
            "structure vs parallelism",
            Duration::from_secs(60),
            structure_vs_parallelism,
        ),
        ("IMS schedule", Duration::from_secs(1), ims_schedule),
        ("CLI smoke run on 800 vertices", Duration::from_secs(60), cli_smoke),
    ];
    let mut failed = 0;
    for (name, limit, check) in criteria {
        let started = Instant::now();
        let result = check();
        let elapsed = started.elapsed();
        let passed = result.passed && elapsed <= limit;
        failed += usize::from(!passed);
        println!(
            "{} {name}: {} [{:.2}s, limit {}s]",
            if passed { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
