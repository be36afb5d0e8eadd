//! Parallel GOMEA: GOM steps batched per color group.
//!
//! Each generation visits the color groups in random order. For a group,
//! every (solution, linkage set) pair receives donor genes in a trial buffer,
//! all trial steps are evaluated together through a keyed reduction, the
//! acceptance matrix is computed against a group-start snapshot, and the
//! buffers are synchronized again. Donor randomness is drawn sequentially
//! before the parallel phases, so results do not depend on the worker count.

use std::ops::Range;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::engine::reduce::reduce_by_key;
use crate::engine::serial::select_donor_with;
use crate::engine::{accepts, drive, ModelKind, RunConfig, RunContext, RunResult};
use crate::error::{invalid, Error, Result};
use crate::graybox::{build_vig, full_evaluate, EvaluatedSolution, Genotype, GrayBoxProblem};
use crate::ims::Generational;
use crate::linkage::Fos;
use crate::rng::RngStream;
use crate::scalar::Fitness;
use crate::scheduling::{build_lmig, welsh_powell, ColorGroups};

/// Where donors for a group's steps are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DonorSource {
    /// The offspring buffer as it stands at the start of the group.
    #[default]
    Offspring,
    /// The population from the start of the generation.
    Population,
}

/// Donor index per (solution, set) pair; `None` marks a skipped step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DonorPlan {
    cols: usize,
    donors: Vec<Option<usize>>,
}

impl DonorPlan {
    pub fn donor(&self, solution: usize, set: usize) -> Option<usize> {
        self.donors[solution * self.cols + set]
    }

    pub fn is_skipped(&self, solution: usize, set: usize) -> bool {
        self.donor(solution, set).is_none()
    }

    pub fn active_steps(&self) -> usize {
        self.donors.iter().filter(|d| d.is_some()).count()
    }
}

/// `n × |group|` fitness changes; `None` for skipped steps.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaMatrix<S> {
    rows: usize,
    cols: usize,
    entries: Vec<Option<S>>,
}

impl<S: Copy> DeltaMatrix<S> {
    pub fn from_rows(rows: Vec<Vec<Option<S>>>) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        Self {
            rows: rows.len(),
            cols,
            entries: rows.into_iter().flatten().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, solution: usize, set: usize) -> Option<S> {
        self.entries[solution * self.cols + set]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Accept,
    Reject,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AcceptanceMatrix {
    cols: usize,
    entries: Vec<Decision>,
}

impl AcceptanceMatrix {
    pub fn get(&self, solution: usize, set: usize) -> Decision {
        self.entries[solution * self.cols + set]
    }

    pub fn count(&self, decision: Decision) -> usize {
        self.entries.iter().filter(|&&d| d == decision).count()
    }
}

/// Flattened keyed subfunction contributions of one batch.
///
/// Entry `u` of solution `s` lives at `s * dependents.len() + u` and carries
/// key `labels[u] + s * stride`, so equal keys form one contiguous run per
/// (solution, linkage set) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyedContributions<S> {
    /// Dependent subfunctions, grouped by linkage set.
    pub dependents: Vec<usize>,
    /// Position within the group of the set each dependent belongs to.
    pub labels: Vec<usize>,
    /// Range of `dependents` belonging to each set of the group.
    pub segments: Vec<Range<usize>>,
    pub stride: usize,
    pub keys: Vec<usize>,
    /// Cached subfunction values of the parents.
    pub before: Vec<S>,
    /// Subfunction values after donor insertion.
    pub after: Vec<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchEvaluation<S> {
    pub delta: DeltaMatrix<S>,
    pub contributions: KeyedContributions<S>,
}

/// Choose a donor for every (solution, set) pair of `group` and copy its
/// genes into `trial`. All randomness is consumed here, sequentially.
pub fn determine_and_insert_donor_genes<S>(
    fos: &Fos,
    group: &[usize],
    parents: &[EvaluatedSolution<S>],
    donor_pool: &[EvaluatedSolution<S>],
    trial: &mut [EvaluatedSolution<S>],
    rng: &mut RngStream,
) -> DonorPlan {
    let cols = group.len();
    let mut order = Vec::new();
    let mut donors = Vec::with_capacity(parents.len() * cols);
    for (s, parent) in parents.iter().enumerate() {
        for &f in group {
            let set = fos.set(f);
            let donor = select_donor_with(&mut order, donor_pool, &parent.genotype, set, rng);
            if let Some(d) = donor {
                for &u in set {
                    trial[s].genotype[u] = donor_pool[d].genotype[u];
                }
            }
            donors.push(donor);
        }
    }
    DonorPlan { cols, donors }
}

fn dependents_of<S: Fitness>(problem: &GrayBoxProblem<S>, set: &[usize]) -> Vec<usize> {
    let mut deps: Vec<usize> = set
        .iter()
        .flat_map(|&u| problem.dependent_subfunctions(u).iter().copied())
        .collect();
    deps.sort_unstable();
    deps.dedup();
    deps
}

/// Evaluate every step of the batch at once.
///
/// Dependent subfunctions are listed per set, keyed per (solution, set),
/// evaluated on the trial buffer, and reduced by key on both sides; the
/// parent side is read from the subfunction cache.
pub fn parallel_partial_evaluations<S: Fitness>(
    problem: &GrayBoxProblem<S>,
    fos: &Fos,
    group: &[usize],
    parents: &[EvaluatedSolution<S>],
    trial: &[EvaluatedSolution<S>],
    plan: &DonorPlan,
) -> Result<BatchEvaluation<S>> {
    if cfg!(debug_assertions) {
        check_footprint(fos, group, parents, trial)?;
    }
    let n = parents.len();
    let cols = group.len();

    let mut dependents = Vec::new();
    let mut labels = Vec::new();
    let mut segments = Vec::with_capacity(cols);
    for (j, &f) in group.iter().enumerate() {
        let start = dependents.len();
        for dep in dependents_of(problem, fos.set(f)) {
            dependents.push(dep);
            labels.push(j);
        }
        segments.push(start..dependents.len());
    }
    let width = dependents.len();
    // a set without dependents contributes no entries, so the label range
    // can exceed the entry count
    let stride = width.max(cols).max(1);

    let keys: Vec<usize> = (0..n)
        .into_par_iter()
        .flat_map_iter(|s| labels.iter().map(move |&j| j + s * stride))
        .collect();

    let mut before = vec![S::zero(); n * width];
    let mut after = vec![S::zero(); n * width];
    if width > 0 {
        before
            .par_chunks_mut(width)
            .zip(after.par_chunks_mut(width))
            .enumerate()
            .for_each(|(s, (old, new))| {
                let cache = parents[s]
                    .subfunction_values
                    .as_ref()
                    .expect("engine solutions carry a subfunction cache");
                for (u, (&dep, &j)) in dependents.iter().zip(&labels).enumerate() {
                    old[u] = cache[dep];
                    new[u] = if plan.is_skipped(s, j) {
                        cache[dep]
                    } else {
                        problem.evaluate_subfunction(dep, &trial[s].genotype)
                    };
                }
            });
    }

    let (out_keys, sums_after) = reduce_by_key(&keys, &after);
    let (_, sums_before) = reduce_by_key(&keys, &before);

    let mut entries: Vec<Option<S>> = (0..n * cols)
        .map(|idx| (!plan.is_skipped(idx / cols, idx % cols)).then(S::zero))
        .collect();
    for ((&key, &a), &b) in out_keys.iter().zip(&sums_after).zip(&sums_before) {
        let (s, j) = (key / stride, key % stride);
        if let Some(slot) = entries[s * cols + j].as_mut() {
            *slot = a - b;
        }
    }

    Ok(BatchEvaluation {
        delta: DeltaMatrix { rows: n, cols, entries },
        contributions: KeyedContributions {
            dependents,
            labels,
            segments,
            stride,
            keys,
            before,
            after,
        },
    })
}

fn check_footprint<S>(
    fos: &Fos,
    group: &[usize],
    parents: &[EvaluatedSolution<S>],
    trial: &[EvaluatedSolution<S>],
) -> Result<()> {
    let Some(first) = parents.first() else { return Ok(()) };
    let mut inside = vec![false; first.genotype.len()];
    for &f in group {
        for &u in fos.set(f) {
            inside[u] = true;
        }
    }
    for (s, (p, t)) in parents.iter().zip(trial).enumerate() {
        if let Some(u) = (0..inside.len()).find(|&u| !inside[u] && p.genotype[u] != t.genotype[u]) {
            return Err(Error::Contract(format!(
                "trial solution {s} differs at variable {u}, outside the group's linkage sets"
            )));
        }
    }
    Ok(())
}

/// Acceptance decision per step, using the parents and elitist as they were
/// at the start of the group.
pub fn determine_improvements<S: Fitness>(
    delta: &DeltaMatrix<S>,
    parents: &[EvaluatedSolution<S>],
    elitist: Option<&Genotype>,
) -> AcceptanceMatrix {
    let cols = delta.cols;
    let parent_is_elitist: Vec<bool> = parents
        .iter()
        .map(|p| elitist.is_some_and(|e| p.genotype == *e))
        .collect();
    let entries = (0..delta.rows * cols)
        .map(|idx| {
            let s = idx / cols;
            match delta.entries[idx] {
                None => Decision::Skipped,
                Some(d) if accepts(parents[s].fitness, d, parent_is_elitist[s]) => Decision::Accept,
                Some(_) => Decision::Reject,
            }
        })
        .collect();
    AcceptanceMatrix { cols, entries }
}

/// Commit accepted steps into `offspring` and undo rejected ones in `trial`;
/// afterwards both buffers are identical.
pub fn apply_acceptance<S: Fitness>(
    fos: &Fos,
    group: &[usize],
    offspring: &mut [EvaluatedSolution<S>],
    trial: &mut [EvaluatedSolution<S>],
    acceptance: &AcceptanceMatrix,
    batch: &BatchEvaluation<S>,
) {
    let contributions = &batch.contributions;
    let width = contributions.dependents.len();
    offspring
        .par_iter_mut()
        .zip(trial.par_iter_mut())
        .enumerate()
        .for_each(|(s, (o, t))| {
            for (j, &f) in group.iter().enumerate() {
                let set = fos.set(f);
                match acceptance.get(s, j) {
                    Decision::Skipped => {}
                    Decision::Reject => {
                        for &u in set {
                            t.genotype[u] = o.genotype[u];
                        }
                    }
                    Decision::Accept => {
                        for &u in set {
                            o.genotype[u] = t.genotype[u];
                        }
                        let delta = batch.delta.get(s, j).expect("accepted steps have a delta");
                        o.fitness = o.fitness + delta;
                        let range = contributions.segments[j].clone();
                        for (dep, value) in contributions.dependents[range.clone()]
                            .iter()
                            .zip(&contributions.after[s * width + range.start..s * width + range.end])
                        {
                            if let Some(cache) = o.subfunction_values.as_mut() {
                                cache[*dep] = *value;
                            }
                            if let Some(cache) = t.subfunction_values.as_mut() {
                                cache[*dep] = *value;
                            }
                        }
                    }
                }
            }
            t.fitness = o.fitness;
        });
}

/// One parallel GOMEA population with a fixed model and coloring.
pub struct ParallelPopulation<S> {
    id: usize,
    problem: Arc<GrayBoxProblem<S>>,
    fos: Arc<Fos>,
    groups: Arc<ColorGroups>,
    population: Vec<EvaluatedSolution<S>>,
    generation: u64,
    rng: RngStream,
    pool: Arc<rayon::ThreadPool>,
    donor_source: DonorSource,
}

impl<S: Fitness> ParallelPopulation<S> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: usize,
        size: usize,
        problem: Arc<GrayBoxProblem<S>>,
        fos: Arc<Fos>,
        groups: Arc<ColorGroups>,
        pool: Arc<rayon::ThreadPool>,
        mut rng: RngStream,
        ctx: &mut RunContext<'_, S>,
    ) -> Self {
        let ell = problem.num_variables();
        let alphabet = problem.alphabet_size() as usize;
        let genotypes: Vec<Genotype> = (0..size)
            .map(|_| Genotype((0..ell).map(|_| rng.below(alphabet) as u8).collect()))
            .collect();
        let population: Vec<EvaluatedSolution<S>> = pool.install(|| {
            genotypes
                .par_iter()
                .map(|g| full_evaluate(&problem, g).expect("generated genotype fits the problem"))
                .collect()
        });
        for s in &population {
            ctx.offer(s, id, 0);
        }
        Self {
            id,
            problem,
            fos,
            groups,
            population,
            generation: 0,
            rng,
            pool,
            donor_source: DonorSource::default(),
        }
    }

    pub fn with_donor_source(mut self, source: DonorSource) -> Self {
        self.donor_source = source;
        self
    }

    pub fn solutions(&self) -> &[EvaluatedSolution<S>] {
        &self.population
    }
}

impl<'p, S: Fitness> Generational<RunContext<'p, S>> for ParallelPopulation<S> {
    fn run_generation(&mut self, ctx: &mut RunContext<'p, S>) {
        let next_gen = self.generation + 1;
        let mut offspring = self.population.clone();
        let mut trial = offspring.clone();
        for g in self.rng.permutation(self.groups.len()) {
            let group = self.groups.group(g);
            let started = Instant::now();
            let calls = self.problem.evaluator_calls();

            let plan = match self.donor_source {
                DonorSource::Offspring => determine_and_insert_donor_genes(
                    &self.fos,
                    group,
                    &offspring,
                    &offspring,
                    &mut trial,
                    &mut self.rng,
                ),
                DonorSource::Population => determine_and_insert_donor_genes(
                    &self.fos,
                    group,
                    &offspring,
                    &self.population,
                    &mut trial,
                    &mut self.rng,
                ),
            };
            let active = plan.active_steps();
            if active > 0 {
                let (problem, fos) = (&self.problem, &self.fos);
                let batch = self
                    .pool
                    .install(|| parallel_partial_evaluations(problem, fos, group, &offspring, &trial, &plan))
                    .expect("donor insertion stays inside the group's linkage sets");
                let acceptance = determine_improvements(&batch.delta, &offspring, ctx.elitist_genotype());
                self.pool
                    .install(|| apply_acceptance(fos, group, &mut offspring, &mut trial, &acceptance, &batch));
                if let Some(best) =
                    offspring
                        .iter()
                        .reduce(|a, b| if S::compare(b.fitness, a.fitness).is_gt() { b } else { a })
                {
                    ctx.offer(best, self.id, next_gen);
                }
            }

            let counter = ctx.group_counter(g, group.len());
            counter.batches += 1;
            counter.batch_width += active as u64;
            counter.evaluator_calls += self.problem.evaluator_calls() - calls;
            counter.seconds += started.elapsed().as_secs_f64();
        }
        self.population = offspring;
        self.generation = next_gen;
        ctx.end_generation(self.id, self.generation);
    }

    fn generations(&self) -> u64 {
        self.generation
    }

    fn population_size(&self) -> usize {
        self.population.len()
    }

    fn is_converged(&self) -> bool {
        super::all_identical(&self.population)
    }
}

/// Fixed model, coloring and worker pool for a parallel run.
pub struct ParallelSetup {
    pub fos: Arc<Fos>,
    pub groups: Arc<ColorGroups>,
    pub pool: Arc<rayon::ThreadPool>,
}

pub fn prepare_parallel<S: Fitness>(problem: &GrayBoxProblem<S>, config: &RunConfig<S>) -> Result<ParallelSetup> {
    config.validate(problem.num_variables())?;
    if matches!(config.model, ModelKind::LearnedLt(_)) {
        return Err(invalid(
            "the parallel engine needs a fixed linkage model (flt, bflt or univariate)",
        ));
    }
    let fos = config
        .fixed_model(problem)?
        .expect("fixed model kinds always produce a model");
    let groups = welsh_powell(&build_lmig(&fos, &build_vig(problem)));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?;
    Ok(ParallelSetup {
        fos: Arc::new(fos),
        groups: Arc::new(groups),
        pool: Arc::new(pool),
    })
}

/// Run parallel GOMEA until a termination rule fires.
pub fn run_parallel<S: Fitness>(problem: Arc<GrayBoxProblem<S>>, config: &RunConfig<S>) -> Result<RunResult<S>> {
    run_parallel_with(problem, config, DonorSource::default())
}

pub fn run_parallel_with<S: Fitness>(
    problem: Arc<GrayBoxProblem<S>>,
    config: &RunConfig<S>,
    donor_source: DonorSource,
) -> Result<RunResult<S>> {
    let setup = prepare_parallel(&problem, config)?;
    let mut master = RngStream::new(config.seed);
    let handle = Arc::clone(&problem);
    Ok(drive(&handle, config, |id, size, ctx| {
        ParallelPopulation::new(
            id,
            size,
            Arc::clone(&problem),
            Arc::clone(&setup.fos),
            Arc::clone(&setup.groups),
            Arc::clone(&setup.pool),
            master.fork(),
            ctx,
        )
        .with_donor_source(donor_source)
    }))
}
