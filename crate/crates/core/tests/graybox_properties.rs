mod common;

use gomea_core::{apply_partial, build_vig, full_evaluate, partial_evaluate, GrayBoxProblem, RngStream};
use proptest::prelude::*;

use common::{random_genotype, random_instance};

#[test]
fn single_flip_matches_full_reevaluation() {
    let mut rng = RngStream::new(2024);
    for _ in 0..1000 {
        let inst = random_instance(&mut rng, 30);
        let problem = inst.as_graybox();
        let g = random_genotype(&mut rng, inst.num_vertices());
        let before = full_evaluate(&problem, &g).unwrap();
        let u = rng.below(inst.num_vertices());
        let mut flipped = g.clone();
        flipped[u] ^= 1;
        let after = full_evaluate(&problem, &flipped).unwrap();
        let pe = partial_evaluate(&problem, &before, &[u], &[flipped[u]]).unwrap();
        assert_eq!(after.fitness - before.fitness, pe.delta);
    }
}

/// Random subfunctions over three variables with a lookup-table evaluator.
fn table_problem(ell: usize, sets: Vec<Vec<usize>>, seed: u64) -> GrayBoxProblem<i64> {
    let mut rng = RngStream::new(seed);
    let tables: Vec<Vec<i64>> = sets
        .iter()
        .map(|s| (0..1usize << s.len()).map(|_| rng.below(21) as i64 - 10).collect())
        .collect();
    GrayBoxProblem::new(ell, sets, move |i: usize, x: &[u8]| {
        let idx = x.iter().fold(0usize, |acc, &b| acc * 2 + b as usize);
        tables[i][idx]
    })
    .unwrap()
}

fn problem_strategy() -> impl Strategy<Value = (usize, Vec<Vec<usize>>, u64)> {
    (3usize..20).prop_flat_map(|ell| {
        (
            Just(ell),
            prop::collection::vec(prop::collection::vec(0..ell, 1..4), 1..25),
            any::<u64>(),
        )
    })
}

proptest! {
    #[test]
    fn partial_and_full_agree_for_any_modification(
        (ell, sets, seed) in problem_strategy(),
        bits in prop::collection::vec(0u8..2, 20),
        flips in prop::collection::vec(any::<prop::sample::Index>(), 1..6),
    ) {
        let problem = table_problem(ell, sets, seed);
        let g = gomea_core::Genotype(bits[..ell].to_vec());
        let base = full_evaluate(&problem, &g).unwrap();
        let mut idx: Vec<usize> = flips.iter().map(|i| i.index(ell)).collect();
        idx.sort_unstable();
        idx.dedup();
        let values: Vec<u8> = idx.iter().map(|&u| g[u] ^ 1).collect();

        let calls = problem.evaluator_calls();
        let pe = partial_evaluate(&problem, &base, &idx, &values).unwrap();
        let touched = problem
            .all_subfunction_inputs()
            .iter()
            .filter(|s| s.iter().any(|u| idx.contains(u)))
            .count() as u64;
        prop_assert_eq!(problem.evaluator_calls() - calls, touched);

        let applied = apply_partial(base.clone(), &idx, &values, &pe).unwrap();
        let fresh = full_evaluate(&problem, &applied.genotype).unwrap();
        prop_assert_eq!(fresh.fitness - base.fitness, pe.delta);
        prop_assert_eq!(&fresh, &applied);
        prop_assert!(applied.cache_consistent());

        // undo
        let back_values: Vec<u8> = idx.iter().map(|&u| g[u]).collect();
        let undo = partial_evaluate(&problem, &applied, &idx, &back_values).unwrap();
        prop_assert_eq!(undo.delta + pe.delta, 0);
    }

    #[test]
    fn vig_is_symmetric_and_exact((ell, sets, seed) in problem_strategy()) {
        let problem = table_problem(ell, sets, seed);
        let vig = build_vig(&problem);
        prop_assert_eq!(&vig, &build_vig(&problem));
        for u in 0..ell {
            for v in 0..ell {
                let expected = u != v
                    && problem.all_subfunction_inputs().iter().any(|s| s.contains(&u) && s.contains(&v));
                prop_assert_eq!(vig.has_edge(u, v), expected);
            }
        }
    }
}
