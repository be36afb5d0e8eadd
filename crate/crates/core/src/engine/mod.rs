//! Run configuration, shared run state, and the two GOMEA engines.

use std::cmp::Ordering;
use std::time::{Duration, Instant};

use crate::error::{invalid, Result};
use crate::graybox::{build_vig, EvaluatedSolution, Genotype, GrayBoxProblem};
use crate::ims::{Generational, ImsConfig, ImsState, Interrupt};
use crate::linkage::{learn_tree_upgma, vig_similarity, Fos, SimilarityMatrix};
use crate::scalar::Fitness;

pub mod parallel;
pub mod reduce;
pub mod serial;

pub use parallel::{run_parallel, run_parallel_with, DonorSource, ParallelPopulation};
pub use serial::{forced_improvement, gom_step, run_serial, select_donor, SerialPopulation};

/// GOM acceptance: strict improvement, or a neutral change when the parent
/// is not the elitist.
pub fn accepts<S: Fitness>(fitness: S, delta: S, parent_is_elitist: bool) -> bool {
    match S::compare(fitness + delta, fitness) {
        Ordering::Greater => true,
        Ordering::Equal => !parent_is_elitist,
        Ordering::Less => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Linkage tree relearned from population mutual information each
    /// generation, optionally size-bounded. Serial engine only.
    LearnedLt(Option<usize>),
    /// Fixed linkage tree learned once from problem structure.
    Flt,
    /// Fixed linkage tree with a maximum set size.
    Bflt(usize),
    Univariate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PopulationSizing {
    Fixed(usize),
    Ims(ImsConfig),
}

impl PopulationSizing {
    fn schedule(&self) -> ImsConfig {
        match *self {
            PopulationSizing::Fixed(n) => ImsConfig {
                n_base: n,
                c: 1,
                max_populations: 1,
            },
            PopulationSizing::Ims(cfg) => cfg,
        }
    }
}

/// Stopping rules; the run ends when any configured rule fires.
#[derive(Debug, Clone, PartialEq)]
pub struct Termination<S> {
    /// Budget in full-evaluation equivalents (evaluator calls / q).
    pub max_evaluations: Option<f64>,
    pub max_seconds: Option<f64>,
    /// Stop once the elitist reaches this fitness.
    pub target_fitness: Option<S>,
    /// Total population-generations across all populations.
    pub max_generations: Option<u64>,
}

impl<S> Default for Termination<S> {
    fn default() -> Self {
        Self {
            max_evaluations: None,
            max_seconds: None,
            target_fitness: None,
            max_generations: None,
        }
    }
}

impl<S> Termination<S> {
    fn is_bounded(&self) -> bool {
        self.max_evaluations.is_some()
            || self.max_seconds.is_some()
            || self.target_fitness.is_some()
            || self.max_generations.is_some()
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig<S> {
    pub sizing: PopulationSizing,
    pub model: ModelKind,
    pub seed: u64,
    pub termination: Termination<S>,
    pub workers: usize,
    /// Extra trace record after this many seconds without one.
    pub heartbeat: Option<f64>,
    /// Similarity used for fixed trees; defaults to the 0/1 interaction graph.
    pub similarity: Option<SimilarityMatrix>,
}

impl<S> RunConfig<S> {
    pub fn new(sizing: PopulationSizing, model: ModelKind, seed: u64, termination: Termination<S>) -> Self {
        Self {
            sizing,
            model,
            seed,
            termination,
            workers: 1,
            heartbeat: None,
            similarity: None,
        }
    }

    fn validate(&self, num_variables: usize) -> Result<()> {
        let schedule = self.sizing.schedule();
        if schedule.n_base == 0 {
            return Err(invalid("population size must be positive"));
        }
        if schedule.c == 0 || schedule.max_populations == 0 {
            return Err(invalid("interleave factor and population cap must be positive"));
        }
        if self.workers == 0 {
            return Err(invalid("at least one worker is required"));
        }
        if !self.termination.is_bounded() {
            return Err(invalid("no termination criterion configured"));
        }
        if matches!(self.model, ModelKind::Bflt(0) | ModelKind::LearnedLt(Some(0))) {
            return Err(invalid("linkage set bound must be positive"));
        }
        if let Some(s) = &self.similarity {
            if s.size() != num_variables {
                return Err(invalid("similarity matrix does not match the problem size"));
            }
        }
        if self.heartbeat.is_some_and(|h| h.is_nan() || h <= 0.0) {
            return Err(invalid("heartbeat must be positive"));
        }
        Ok(())
    }

    /// Linkage model fixed before optimization, if the model kind has one.
    pub(crate) fn fixed_model<T: Fitness>(&self, problem: &GrayBoxProblem<T>) -> Result<Option<Fos>> {
        let ell = problem.num_variables();
        let bound = match self.model {
            ModelKind::LearnedLt(_) => return Ok(None),
            ModelKind::Univariate => return Ok(Some(Fos::univariate(ell))),
            ModelKind::Flt => None,
            ModelKind::Bflt(b) => Some(b),
        };
        if ell < 2 {
            return Ok(Some(Fos::univariate(ell)));
        }
        let owned;
        let similarity = match &self.similarity {
            Some(s) => s,
            None => {
                owned = vig_similarity(&build_vig(problem));
                &owned
            }
        };
        learn_tree_upgma(similarity, bound).map(Some)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord<S> {
    pub seconds: f64,
    pub evaluations: f64,
    pub generation: u64,
    pub population: usize,
    pub fitness: S,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    TargetReached,
    EvaluationBudget,
    TimeLimit,
    GenerationLimit,
    /// Every population allowed by the schedule exists and has collapsed
    /// to a single genotype.
    Converged,
}

/// Work done for one color group of the parallel engine over a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroupCounter {
    pub group_size: usize,
    pub batches: u64,
    /// Non-skipped steps, summed over batches.
    pub batch_width: u64,
    pub evaluator_calls: u64,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult<S> {
    pub best: EvaluatedSolution<S>,
    pub trace: Vec<TraceRecord<S>>,
    pub evaluations: f64,
    pub generations: u64,
    pub stop_reason: StopReason,
    /// Per color group; empty for the serial engine.
    pub group_counters: Vec<GroupCounter>,
}

impl<S: Fitness> RunResult<S> {
    pub fn reached(&self, target: S) -> bool {
        S::compare(self.best.fitness, target) != Ordering::Less
    }
}

/// Shared state of one run: elitist, budget accounting and trace.
pub struct RunContext<'a, S> {
    problem: &'a GrayBoxProblem<S>,
    termination: Termination<S>,
    started: Instant,
    calls_at_start: u64,
    elitist: Option<EvaluatedSolution<S>>,
    trace: Vec<TraceRecord<S>>,
    heartbeat: Option<Duration>,
    last_record: Duration,
    generations: u64,
    group_counters: Vec<GroupCounter>,
}

impl<'a, S: Fitness> RunContext<'a, S> {
    pub fn new(problem: &'a GrayBoxProblem<S>, termination: Termination<S>, heartbeat: Option<f64>) -> Self {
        Self {
            problem,
            termination,
            started: Instant::now(),
            calls_at_start: problem.evaluator_calls(),
            elitist: None,
            trace: Vec::new(),
            heartbeat: heartbeat.map(Duration::from_secs_f64),
            last_record: Duration::ZERO,
            generations: 0,
            group_counters: Vec::new(),
        }
    }

    /// Evaluations spent in this run, in full-evaluation equivalents.
    pub fn evaluations(&self) -> f64 {
        let q = self.problem.num_subfunctions().max(1);
        (self.problem.evaluator_calls() - self.calls_at_start) as f64 / q as f64
    }

    pub fn elitist(&self) -> Option<&EvaluatedSolution<S>> {
        self.elitist.as_ref()
    }

    pub fn elitist_genotype(&self) -> Option<&Genotype> {
        self.elitist.as_ref().map(|e| &e.genotype)
    }

    pub fn trace(&self) -> &[TraceRecord<S>] {
        &self.trace
    }

    pub fn total_generations(&self) -> u64 {
        self.generations
    }

    pub fn group_counter(&mut self, group: usize, group_size: usize) -> &mut GroupCounter {
        if self.group_counters.len() <= group {
            self.group_counters.resize(group + 1, GroupCounter::default());
        }
        let counter = &mut self.group_counters[group];
        counter.group_size = group_size;
        counter
    }

    /// Replace the elitist if `candidate` is strictly better; records a trace
    /// entry on improvement.
    pub fn offer(&mut self, candidate: &EvaluatedSolution<S>, population: usize, generation: u64) -> bool {
        let better = self
            .elitist
            .as_ref()
            .is_none_or(|e| S::compare(candidate.fitness, e.fitness) == Ordering::Greater);
        if better {
            self.elitist = Some(candidate.clone());
            self.record(population, generation);
        }
        better
    }

    fn record(&mut self, population: usize, generation: u64) {
        let Some(elitist) = &self.elitist else { return };
        let elapsed = self.started.elapsed();
        self.last_record = elapsed;
        let record = TraceRecord {
            seconds: elapsed.as_secs_f64(),
            evaluations: self.evaluations(),
            generation,
            population,
            fitness: elitist.fitness,
        };
        self.trace.push(record);
    }

    /// Called by engines after each completed population-generation.
    pub fn end_generation(&mut self, population: usize, generation: u64) {
        self.generations += 1;
        if let Some(period) = self.heartbeat {
            if self.started.elapsed().saturating_sub(self.last_record) >= period {
                self.record(population, generation);
            }
        }
    }

    pub fn stop_reason(&self) -> Option<StopReason> {
        let t = &self.termination;
        if let (Some(target), Some(e)) = (t.target_fitness, &self.elitist) {
            if S::compare(e.fitness, target) != Ordering::Less {
                return Some(StopReason::TargetReached);
            }
        }
        if t.max_evaluations.is_some_and(|m| self.evaluations() >= m) {
            return Some(StopReason::EvaluationBudget);
        }
        if t.max_generations.is_some_and(|m| self.generations >= m) {
            return Some(StopReason::GenerationLimit);
        }
        if t.max_seconds.is_some_and(|m| self.started.elapsed().as_secs_f64() >= m) {
            return Some(StopReason::TimeLimit);
        }
        None
    }

    fn finish(self, reason: StopReason) -> RunResult<S> {
        let evaluations = self.evaluations();
        RunResult {
            best: self.elitist.expect("populations are initialized before stopping"),
            trace: self.trace,
            evaluations,
            generations: self.generations,
            stop_reason: reason,
            group_counters: self.group_counters,
        }
    }
}

impl<S: Fitness> Interrupt for RunContext<'_, S> {
    fn should_stop(&self) -> bool {
        self.stop_reason().is_some()
    }
}

/// Drive populations produced by `spawn` under the configured schedule until
/// a termination rule fires.
fn all_identical<S>(solutions: &[EvaluatedSolution<S>]) -> bool {
    solutions.windows(2).all(|w| w[0].genotype == w[1].genotype)
}

pub(crate) fn drive<'p, S, P>(
    problem: &'p GrayBoxProblem<S>,
    config: &RunConfig<S>,
    mut spawn: impl FnMut(usize, usize, &mut RunContext<'p, S>) -> P,
) -> RunResult<S>
where
    S: Fitness,
    P: Generational<RunContext<'p, S>>,
{
    let mut ctx = RunContext::new(problem, config.termination.clone(), config.heartbeat);
    let mut ims: ImsState<P> = ImsState::new(config.sizing.schedule());
    loop {
        ims.step(&mut ctx, &mut spawn);
        if let Some(reason) = ctx.stop_reason() {
            return ctx.finish(reason);
        }
        let populations = ims.populations();
        if populations.len() == ims.config().max_populations && populations.iter().all(P::is_converged) {
            return ctx.finish(StopReason::Converged);
        }
    }
}
