//! Serial GOMEA: per-solution gene-pool optimal mixing with forced
//! improvement.

use std::cmp::Ordering;
use std::sync::Arc;

use crate::engine::{accepts, drive, ModelKind, RunConfig, RunContext, RunResult};
use crate::error::{invalid, Error, Result};
use crate::graybox::{full_evaluate, EvaluatedSolution, Genotype, GrayBoxProblem, TrialWorkspace};
use crate::ims::Generational;
use crate::linkage::{learn_tree_upgma, mi_similarity, Fos};
use crate::rng::RngStream;
use crate::scalar::Fitness;

/// Generations without improvement before forced improvement kicks in:
/// `1 + floor(log10(n))`.
pub fn stagnation_threshold(population_size: usize) -> u32 {
    1 + (population_size.max(1) as f64).log10().floor() as u32
}

/// Pick a donor by scanning `population` in uniform random order; the first
/// member that differs from `parent` on `set` wins.
pub fn select_donor<S>(
    population: &[EvaluatedSolution<S>],
    parent: &[u8],
    set: &[usize],
    rng: &mut RngStream,
) -> Option<usize> {
    let mut order = Vec::new();
    select_donor_with(&mut order, population, parent, set, rng)
}

/// [`select_donor`] reusing `order` as permutation storage.
pub(crate) fn select_donor_with<S>(
    order: &mut Vec<usize>,
    population: &[EvaluatedSolution<S>],
    parent: &[u8],
    set: &[usize],
    rng: &mut RngStream,
) -> Option<usize> {
    let n = population.len();
    if order.len() != n {
        *order = (0..n).collect();
    }
    // incremental Fisher-Yates; uniform regardless of the buffer's start order
    for k in 0..n {
        let pick = k + rng.below(n - k);
        order.swap(k, pick);
        let candidate = order[k];
        if !population[candidate].genotype.agrees_on(parent, set) {
            return Some(candidate);
        }
    }
    None
}

/// One GOM step: copy `donor[set]` into `o` and keep it if accepted.
///
/// `elitist` is the genotype used for the neutral-move rule.
pub fn gom_step<S: Fitness>(
    problem: &GrayBoxProblem<S>,
    o: &mut EvaluatedSolution<S>,
    donor: &[u8],
    set: &[usize],
    elitist: Option<&[u8]>,
) -> Result<bool> {
    if o.subfunction_values.is_none() {
        return Err(Error::Contract("GOM needs a solution with a subfunction cache".into()));
    }
    if donor.len() != o.genotype.len() || set.iter().any(|&u| u >= donor.len()) {
        return Err(invalid("donor or linkage set does not fit the solution"));
    }
    if o.genotype.agrees_on(donor, set) {
        return Err(Error::Contract("donor equals the parent on the linkage set".into()));
    }
    let mut ws = TrialWorkspace::new(problem.num_subfunctions());
    Ok(gom_step_with(&mut ws, problem, o, donor, set, elitist).0)
}

/// Returns (accepted, delta).
pub(crate) fn gom_step_with<S: Fitness>(
    ws: &mut TrialWorkspace<S>,
    problem: &GrayBoxProblem<S>,
    o: &mut EvaluatedSolution<S>,
    donor: &[u8],
    set: &[usize],
    elitist: Option<&[u8]>,
) -> (bool, S) {
    let parent_is_elitist = elitist.is_some_and(|e| *o.genotype == *e);
    let fitness = o.fitness;
    let delta = ws.try_insert(problem, o, donor, set);
    if accepts(fitness, delta, parent_is_elitist) {
        ws.commit(o, delta);
        (true, delta)
    } else {
        ws.revert(o, set);
        (false, delta)
    }
}

/// GOM with the elitist as donor over the FOS in random order, stopping at
/// the first strict improvement. Without one, `o` becomes a copy of the
/// elitist. Returns whether an improvement was found.
pub fn forced_improvement<S: Fitness>(
    problem: &GrayBoxProblem<S>,
    o: &mut EvaluatedSolution<S>,
    elitist: &EvaluatedSolution<S>,
    fos: &Fos,
    rng: &mut RngStream,
) -> bool {
    let mut ws = TrialWorkspace::new(problem.num_subfunctions());
    forced_improvement_with(&mut ws, problem, o, elitist, fos, rng)
}

pub(crate) fn forced_improvement_with<S: Fitness>(
    ws: &mut TrialWorkspace<S>,
    problem: &GrayBoxProblem<S>,
    o: &mut EvaluatedSolution<S>,
    elitist: &EvaluatedSolution<S>,
    fos: &Fos,
    rng: &mut RngStream,
) -> bool {
    for f in rng.permutation(fos.len()) {
        let set = fos.set(f);
        if o.genotype.agrees_on(&elitist.genotype, set) {
            continue;
        }
        let before = o.fitness;
        let (accepted, _) = gom_step_with(ws, problem, o, &elitist.genotype, set, Some(&elitist.genotype));
        if accepted && S::compare(o.fitness, before) == Ordering::Greater {
            return true;
        }
    }
    *o = elitist.clone();
    false
}

enum ModelSource {
    Learned(Option<usize>),
    Fixed(Arc<Fos>),
}

/// One serial GOMEA population.
pub struct SerialPopulation<S> {
    id: usize,
    problem: Arc<GrayBoxProblem<S>>,
    model: ModelSource,
    solutions: Vec<EvaluatedSolution<S>>,
    stagnation: Vec<u32>,
    threshold: u32,
    generation: u64,
    rng: RngStream,
    workspace: TrialWorkspace<S>,
    order: Vec<usize>,
}

impl<S: Fitness> SerialPopulation<S> {
    /// Uniformly random initial population; every member is offered to the
    /// run's elitist.
    pub fn new(
        id: usize,
        size: usize,
        problem: Arc<GrayBoxProblem<S>>,
        fixed_model: Option<Arc<Fos>>,
        learned_bound: Option<usize>,
        mut rng: RngStream,
        ctx: &mut RunContext<'_, S>,
    ) -> Self {
        let ell = problem.num_variables();
        let alphabet = problem.alphabet_size() as usize;
        let solutions: Vec<EvaluatedSolution<S>> = (0..size)
            .map(|_| {
                let g = Genotype((0..ell).map(|_| rng.below(alphabet) as u8).collect());
                full_evaluate(&problem, &g).expect("generated genotype fits the problem")
            })
            .collect();
        for s in &solutions {
            ctx.offer(s, id, 0);
        }
        let model = match fixed_model {
            Some(fos) => ModelSource::Fixed(fos),
            None => ModelSource::Learned(learned_bound),
        };
        Self {
            id,
            workspace: TrialWorkspace::new(problem.num_subfunctions()),
            problem,
            model,
            stagnation: vec![0; size],
            threshold: stagnation_threshold(size),
            solutions,
            generation: 0,
            rng,
            order: Vec::new(),
        }
    }

    pub fn solutions(&self) -> &[EvaluatedSolution<S>] {
        &self.solutions
    }

    fn current_model(&self) -> Arc<Fos> {
        match &self.model {
            ModelSource::Fixed(fos) => Arc::clone(fos),
            ModelSource::Learned(bound) => {
                let ell = self.problem.num_variables();
                if ell < 2 {
                    return Arc::new(Fos::univariate(ell));
                }
                let genotypes: Vec<Genotype> = self.solutions.iter().map(|s| s.genotype.clone()).collect();
                let similarity = mi_similarity(&genotypes).expect("population is non-empty and binary");
                Arc::new(learn_tree_upgma(&similarity, *bound).expect("at least two variables"))
            }
        }
    }
}

impl<'p, S: Fitness> Generational<RunContext<'p, S>> for SerialPopulation<S> {
    fn run_generation(&mut self, ctx: &mut RunContext<'p, S>) {
        let fos = self.current_model();
        let problem = Arc::clone(&self.problem);
        let next_gen = self.generation + 1;
        let mut offspring = Vec::with_capacity(self.solutions.len());
        for s in 0..self.solutions.len() {
            let mut o = self.solutions[s].clone();
            let mut accepted_any = false;
            for f in self.rng.permutation(fos.len()) {
                let set = fos.set(f);
                let Some(d) = select_donor_with(&mut self.order, &self.solutions, &o.genotype, set, &mut self.rng)
                else {
                    continue;
                };
                let (accepted, _) = gom_step_with(
                    &mut self.workspace,
                    &problem,
                    &mut o,
                    &self.solutions[d].genotype,
                    set,
                    ctx.elitist_genotype().map(|g| &g[..]),
                );
                if accepted {
                    accepted_any = true;
                    ctx.offer(&o, self.id, next_gen);
                }
            }
            if !accepted_any || self.stagnation[s] > self.threshold {
                if let Some(elitist) = ctx.elitist().cloned() {
                    forced_improvement_with(&mut self.workspace, &problem, &mut o, &elitist, &fos, &mut self.rng);
                    ctx.offer(&o, self.id, next_gen);
                }
            }
            if S::compare(o.fitness, self.solutions[s].fitness) == Ordering::Greater {
                self.stagnation[s] = 0;
            } else {
                self.stagnation[s] += 1;
            }
            offspring.push(o);
        }
        self.solutions = offspring;
        self.generation = next_gen;
        ctx.end_generation(self.id, self.generation);
    }

    fn generations(&self) -> u64 {
        self.generation
    }

    fn population_size(&self) -> usize {
        self.solutions.len()
    }

    fn is_converged(&self) -> bool {
        super::all_identical(&self.solutions)
    }
}

/// Run serial GOMEA until a termination rule fires.
pub fn run_serial<S: Fitness>(problem: Arc<GrayBoxProblem<S>>, config: &RunConfig<S>) -> Result<RunResult<S>> {
    config.validate(problem.num_variables())?;
    let fixed = config.fixed_model(&problem)?.map(Arc::new);
    let learned_bound = match config.model {
        ModelKind::LearnedLt(bound) => bound,
        _ => None,
    };
    let mut master = RngStream::new(config.seed);
    let handle = Arc::clone(&problem);
    Ok(drive(&handle, config, |id, size, ctx| {
        SerialPopulation::new(
            id,
            size,
            Arc::clone(&problem),
            fixed.clone(),
            learned_bound,
            master.fork(),
            ctx,
        )
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// x0 + 2·x1 as two univariate subfunctions.
    fn linear() -> GrayBoxProblem<i64> {
        GrayBoxProblem::new(2, vec![vec![0], vec![1]], |i: usize, x: &[u8]| {
            (i as i64 + 1) * i64::from(x[0])
        })
        .unwrap()
    }

    fn eval(p: &GrayBoxProblem<i64>, g: &[u8]) -> EvaluatedSolution<i64> {
        full_evaluate(p, &Genotype(g.to_vec())).unwrap()
    }

    #[test]
    fn gom_acceptance_cases() {
        let p = linear();
        let mut o = eval(&p, &[0, 0]);
        assert!(gom_step(&p, &mut o, &[0, 1], &[1], None).unwrap());
        assert_eq!(o.fitness, 2);

        let before = o.clone();
        assert!(!gom_step(&p, &mut o, &[1, 0], &[1], None).unwrap());
        assert_eq!(o, before);

        // neutral: swap to a genotype with equal fitness
        let q = GrayBoxProblem::new(2, vec![vec![0], vec![1]], |_: usize, x: &[u8]| i64::from(x[0])).unwrap();
        let mut o = eval(&q, &[1, 0]);
        let elitist = [1u8, 1];
        assert!(gom_step(&q, &mut o, &[0, 1], &[0, 1], Some(&elitist)).unwrap());
        assert_eq!(o.genotype.0, vec![0, 1]);
        // same neutral move from the elitist itself is refused
        let mut o = eval(&q, &[1, 0]);
        assert!(!gom_step(&q, &mut o, &[0, 1], &[0, 1], Some(&[1, 0])).unwrap());

        assert!(matches!(
            gom_step(&p, &mut o, &[1, 0], &[0], None),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn donor_selection_cases() {
        let p = linear();
        let same: Vec<_> = (0..5).map(|_| eval(&p, &[0, 0])).collect();
        let mut rng = RngStream::new(1);
        assert_eq!(select_donor(&same, &[0, 0], &[0, 1], &mut rng), None);

        let mut one = same.clone();
        one[3] = eval(&p, &[0, 1]);
        for seed in 0..20 {
            let mut rng = RngStream::new(seed);
            assert_eq!(select_donor(&one, &[0, 0], &[1], &mut rng), Some(3));
        }
    }

    #[test]
    fn forced_improvement_cases() {
        let p = linear();
        let elitist = eval(&p, &[1, 1]);
        let mut rng = RngStream::new(5);

        let mut o = elitist.clone();
        assert!(!forced_improvement(&p, &mut o, &elitist, &Fos::univariate(2), &mut rng));
        assert_eq!(o, elitist);

        // elitist better only on variable 1: exactly that change is made
        let mut o = eval(&p, &[1, 0]);
        assert!(forced_improvement(&p, &mut o, &elitist, &Fos::univariate(2), &mut rng));
        assert_eq!(o.genotype.0, vec![1, 1]);
        assert_eq!(o.fitness, 3);

        // the first improving set ends the procedure
        for seed in 0..10 {
            let mut rng = RngStream::new(seed);
            let mut o = eval(&p, &[0, 0]);
            assert!(forced_improvement(&p, &mut o, &elitist, &Fos::univariate(2), &mut rng));
            assert!(o.fitness == 1 || o.fitness == 2, "one change only, got {}", o.fitness);
        }
    }

    #[test]
    fn threshold_values() {
        assert_eq!(stagnation_threshold(1), 1);
        assert_eq!(stagnation_threshold(16), 2);
        assert_eq!(stagnation_threshold(100), 3);
    }
}
