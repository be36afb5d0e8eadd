#![allow(dead_code)]

use gomea_core::engine::parallel::{determine_and_insert_donor_genes, DonorPlan};
use gomea_core::linkage::{learn_tree_upgma, weight_similarity, SimilarityMatrix};
use gomea_core::{
    build_lmig, build_vig, full_evaluate, welsh_powell, EvaluatedSolution, Fos, Genotype, GrayBoxProblem,
    MaxCutInstance, RngStream, WeightScheme,
};

/// The five-vertex example graph (0-based labels).
pub fn example_graph() -> MaxCutInstance<i64> {
    let edges = [(0, 1), (0, 2), (1, 2), (2, 3), (2, 4), (3, 4)];
    MaxCutInstance::new(5, edges.iter().map(|&(u, v)| (u, v, 1))).unwrap()
}

/// Similarity whose average-linkage tree is {0,2}, {3,4}, {0,1,2} over the
/// singletons.
pub fn example_similarity() -> SimilarityMatrix {
    let mut s = SimilarityMatrix::zeros(5);
    for u in 0..5 {
        for v in u + 1..5 {
            s.set(u, v, 0.1);
        }
    }
    s.set(0, 2, 0.9);
    s.set(3, 4, 0.8);
    s.set(0, 1, 0.6);
    s.set(1, 2, 0.6);
    s
}

pub fn example_tree() -> Fos {
    learn_tree_upgma(&example_similarity(), None).unwrap()
}

/// The 22 interaction edges of the example linkage-model graph, 1-based.
pub const EXAMPLE_LMIG_EDGES: [(usize, usize); 22] = [
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

/// Random sparse graph with integer weights in -5..=9.
pub fn random_instance(rng: &mut RngStream, max_vertices: usize) -> MaxCutInstance<i64> {
    let n = 2 + rng.below(max_vertices - 1);
    let density = 0.15 + 0.7 * (rng.below(1000) as f64 / 1000.0);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if (rng.below(10_000) as f64) < density * 10_000.0 {
                edges.push((u, v, rng.below(15) as i64 - 5));
            }
        }
    }
    if edges.is_empty() {
        edges.push((0, 1, 1));
    }
    MaxCutInstance::new(n, edges).unwrap()
}

pub fn random_torus(rng: &mut RngStream) -> MaxCutInstance<i64> {
    let w = 3 + rng.below(6);
    let h = 3 + rng.below(6);
    let seed = rng.below(1 << 30) as u64;
    gomea_core::maxcut::generate_torus(w, h, WeightScheme::UniformInt { lo: -4, hi: 6 }, seed).unwrap()
}

pub fn random_genotype(rng: &mut RngStream, len: usize) -> Genotype {
    Genotype((0..len).map(|_| rng.bit()).collect())
}

/// One color group of a parallel GOM generation, with donors already
/// inserted into `trial`.
pub struct Batch {
    pub problem: GrayBoxProblem<i64>,
    pub fos: Fos,
    pub group: Vec<usize>,
    pub parents: Vec<EvaluatedSolution<i64>>,
    pub trial: Vec<EvaluatedSolution<i64>>,
    pub plan: DonorPlan,
}

/// Random torus, BFLT-10 model, random color group and random donors.
pub fn random_batch(rng: &mut RngStream) -> Batch {
    let torus = random_torus(rng);
    let problem = torus.as_graybox();
    let ell = problem.num_variables();
    let fos = learn_tree_upgma(&weight_similarity(&torus), Some(10)).unwrap();
    let groups = welsh_powell(&build_lmig(&fos, &build_vig(&problem)));
    let group = groups.group(rng.below(groups.len())).to_vec();
    let n = 2 + rng.below(10);
    let parents: Vec<EvaluatedSolution<i64>> = (0..n)
        .map(|_| full_evaluate(&problem, &random_genotype(rng, ell)).unwrap())
        .collect();
    let mut trial = parents.clone();
    let plan = determine_and_insert_donor_genes(&fos, &group, &parents, &parents, &mut trial, rng);
    Batch {
        problem,
        fos,
        group,
        parents,
        trial,
        plan,
    }
}

/// Apply the accepted steps of a batch one at a time, in `order` (indices
/// into the group), recomputing each delta against the current solution.
/// Returns the final solutions and the recomputed deltas per (solution, step).
pub fn apply_sequentially(
    batch: &Batch,
    accepted: &dyn Fn(usize, usize) -> bool,
    order: &[usize],
) -> (Vec<EvaluatedSolution<i64>>, Vec<Vec<Option<i64>>>) {
    let mut out = batch.parents.clone();
    let mut deltas = vec![vec![None; batch.group.len()]; out.len()];
    for (s, solution) in out.iter_mut().enumerate() {
        for &j in order {
            if !accepted(s, j) {
                continue;
            }
            let set = batch.fos.set(batch.group[j]);
            let values: Vec<u8> = set.iter().map(|&u| batch.trial[s].genotype[u]).collect();
            let eval = gomea_core::partial_evaluate(&batch.problem, solution, set, &values).unwrap();
            deltas[s][j] = Some(eval.delta);
            *solution = gomea_core::apply_partial(solution.clone(), set, &values, &eval).unwrap();
        }
    }
    (out, deltas)
}
