//! Additively decomposable fitness functions with partial evaluation.
//!
//! A [`GrayBoxProblem`] is the sum of `q` subfunctions, each reading a small
//! sorted subset of the `ℓ` variables. Because the decomposition is known, a
//! change to a few variables only requires re-evaluating the subfunctions
//! that read them.

use std::ops::{Deref, DerefMut};
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{invalid, Error, Result};
use crate::scalar::Fitness;

/// Evaluates subfunction `index` on the variable values restricted to its
/// input set, in ascending variable order. Must be deterministic.
pub trait SubfunctionEvaluator<S>: Send + Sync {
    fn evaluate(&self, index: usize, values: &[u8]) -> S;
}

impl<S, F> SubfunctionEvaluator<S> for F
where
    F: Fn(usize, &[u8]) -> S + Send + Sync,
{
    fn evaluate(&self, index: usize, values: &[u8]) -> S {
        self(index, values)
    }
}

pub struct GrayBoxProblem<S> {
    num_variables: usize,
    alphabet_size: u8,
    inputs: Vec<Vec<usize>>,
    dependents: Vec<Vec<usize>>,
    evaluator: Box<dyn SubfunctionEvaluator<S>>,
    calls: AtomicU64,
}

impl<S> std::fmt::Debug for GrayBoxProblem<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GrayBoxProblem")
            .field("num_variables", &self.num_variables)
            .field("num_subfunctions", &self.inputs.len())
            .field("alphabet_size", &self.alphabet_size)
            .finish()
    }
}

impl<S: Fitness> GrayBoxProblem<S> {
    /// Build a binary problem. Input sets are sorted and deduplicated here.
    pub fn new(
        num_variables: usize,
        inputs: Vec<Vec<usize>>,
        evaluator: impl SubfunctionEvaluator<S> + 'static,
    ) -> Result<Self> {
        Self::with_alphabet(num_variables, 2, inputs, evaluator)
    }

    pub fn with_alphabet(
        num_variables: usize,
        alphabet_size: u8,
        mut inputs: Vec<Vec<usize>>,
        evaluator: impl SubfunctionEvaluator<S> + 'static,
    ) -> Result<Self> {
        if num_variables == 0 {
            return Err(invalid("a problem needs at least one variable"));
        }
        if alphabet_size < 2 {
            return Err(invalid("alphabet must have at least two symbols"));
        }
        let mut dependents = vec![Vec::new(); num_variables];
        for (i, set) in inputs.iter_mut().enumerate() {
            set.sort_unstable();
            set.dedup();
            if set.is_empty() {
                return Err(invalid(format!("subfunction {i} has no inputs")));
            }
            if let Some(&u) = set.iter().find(|&&u| u >= num_variables) {
                return Err(invalid(format!(
                    "subfunction {i} reads variable {u}, but there are only {num_variables}"
                )));
            }
            for &u in set.iter() {
                dependents[u].push(i);
            }
        }
        Ok(Self {
            num_variables,
            alphabet_size,
            inputs,
            dependents,
            evaluator: Box::new(evaluator),
            calls: AtomicU64::new(0),
        })
    }

    pub fn num_variables(&self) -> usize {
        self.num_variables
    }

    pub fn num_subfunctions(&self) -> usize {
        self.inputs.len()
    }

    pub fn alphabet_size(&self) -> u8 {
        self.alphabet_size
    }

    pub fn subfunction_inputs(&self, index: usize) -> &[usize] {
        &self.inputs[index]
    }

    pub fn all_subfunction_inputs(&self) -> &[Vec<usize>] {
        &self.inputs
    }

    /// Subfunctions reading variable `u`, ascending.
    pub fn dependent_subfunctions(&self, u: usize) -> &[usize] {
        &self.dependents[u]
    }

    /// Number of evaluator invocations since construction.
    pub fn evaluator_calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    /// Evaluator invocations expressed in full-evaluation equivalents.
    pub fn partial_evaluations(&self) -> f64 {
        let q = self.inputs.len().max(1);
        self.evaluator_calls() as f64 / q as f64
    }

    /// Evaluate one subfunction, reading variable values through `value_of`.
    pub fn evaluate_subfunction_with(&self, index: usize, value_of: impl Fn(usize) -> u8) -> S {
        let set = &self.inputs[index];
        self.calls.fetch_add(1, Ordering::Relaxed);
        let mut buf = [0u8; 16];
        if set.len() <= buf.len() {
            for (slot, &u) in buf.iter_mut().zip(set) {
                *slot = value_of(u);
            }
            self.evaluator.evaluate(index, &buf[..set.len()])
        } else {
            let values: Vec<u8> = set.iter().map(|&u| value_of(u)).collect();
            self.evaluator.evaluate(index, &values)
        }
    }

    pub fn evaluate_subfunction(&self, index: usize, genotype: &[u8]) -> S {
        self.evaluate_subfunction_with(index, |u| genotype[u])
    }

    pub fn check_genotype(&self, genotype: &[u8]) -> Result<()> {
        if genotype.len() != self.num_variables {
            return Err(invalid(format!(
                "genotype has length {}, problem has {} variables",
                genotype.len(),
                self.num_variables
            )));
        }
        if let Some(pos) = genotype.iter().position(|&v| v >= self.alphabet_size) {
            return Err(invalid(format!(
                "value {} at position {pos} is outside the alphabet of size {}",
                genotype[pos], self.alphabet_size
            )));
        }
        Ok(())
    }
}

/// Variable assignment `x = [x_0 .. x_{ℓ-1}]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Genotype(pub Vec<u8>);

impl Genotype {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0; len])
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.0
    }

    /// True when both genotypes agree on every index in `set`.
    pub fn agrees_on(&self, other: &[u8], set: &[usize]) -> bool {
        set.iter().all(|&u| self.0[u] == other[u])
    }
}

impl From<Vec<u8>> for Genotype {
    fn from(v: Vec<u8>) -> Self {
        Self(v)
    }
}

impl Deref for Genotype {
    type Target = [u8];

    fn deref(&self) -> &[u8] {
        &self.0
    }
}

impl DerefMut for Genotype {
    fn deref_mut(&mut self) -> &mut [u8] {
        &mut self.0
    }
}

/// A genotype with its cached fitness and per-subfunction values.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluatedSolution<S> {
    pub genotype: Genotype,
    pub fitness: S,
    pub subfunction_values: Option<Vec<S>>,
}

impl<S: Fitness> EvaluatedSolution<S> {
    /// Check that the cached fitness equals the sum of the cache.
    pub fn cache_consistent(&self) -> bool {
        match &self.subfunction_values {
            Some(values) => S::fitness_eq(values.iter().copied().sum(), self.fitness),
            None => true,
        }
    }
}

/// Evaluate every subfunction and populate the cache.
pub fn full_evaluate<S: Fitness>(problem: &GrayBoxProblem<S>, genotype: &Genotype) -> Result<EvaluatedSolution<S>> {
    problem.check_genotype(genotype)?;
    let values: Vec<S> = (0..problem.num_subfunctions())
        .map(|i| problem.evaluate_subfunction(i, genotype))
        .collect();
    Ok(EvaluatedSolution {
        genotype: genotype.clone(),
        fitness: values.iter().copied().sum(),
        subfunction_values: Some(values),
    })
}

/// Result of a partial evaluation: the fitness change and the new values of
/// every affected subfunction.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PartialEvaluation<S> {
    pub delta: S,
    pub affected: Vec<(usize, S)>,
}

/// Fitness change from setting `modified[k]` to `new_values[k]`, evaluating
/// only the subfunctions that read a modified variable. `base` is untouched.
pub fn partial_evaluate<S: Fitness>(
    problem: &GrayBoxProblem<S>,
    base: &EvaluatedSolution<S>,
    modified: &[usize],
    new_values: &[u8],
) -> Result<PartialEvaluation<S>> {
    let cache = base
        .subfunction_values
        .as_ref()
        .ok_or_else(|| Error::Contract("partial evaluation needs a subfunction cache".into()))?;
    if modified.len() != new_values.len() {
        return Err(invalid("modified indices and new values differ in length"));
    }
    let mut changes: Vec<(usize, u8)> = Vec::with_capacity(modified.len());
    for (&u, &v) in modified.iter().zip(new_values) {
        if u >= problem.num_variables() {
            return Err(invalid(format!("variable index {u} out of range")));
        }
        if v >= problem.alphabet_size() {
            return Err(invalid(format!("value {v} outside the alphabet")));
        }
        changes.push((u, v));
    }
    changes.sort_unstable_by_key(|&(u, _)| u);
    if changes.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(invalid("modified indices contain duplicates"));
    }

    let mut affected: Vec<usize> = changes
        .iter()
        .flat_map(|&(u, _)| problem.dependent_subfunctions(u).iter().copied())
        .collect();
    affected.sort_unstable();
    affected.dedup();

    let value_of = |u: usize| match changes.binary_search_by_key(&u, |&(w, _)| w) {
        Ok(k) => changes[k].1,
        Err(_) => base.genotype[u],
    };
    let mut delta = S::zero();
    let mut out = Vec::with_capacity(affected.len());
    for j in affected {
        let value = problem.evaluate_subfunction_with(j, value_of);
        delta = delta + (value - cache[j]);
        out.push((j, value));
    }
    Ok(PartialEvaluation { delta, affected: out })
}

/// Commit a partial evaluation produced by [`partial_evaluate`] on `base`.
pub fn apply_partial<S: Fitness>(
    mut base: EvaluatedSolution<S>,
    modified: &[usize],
    new_values: &[u8],
    evaluation: &PartialEvaluation<S>,
) -> Result<EvaluatedSolution<S>> {
    if modified.len() != new_values.len() {
        return Err(invalid("modified indices and new values differ in length"));
    }
    for (&u, &v) in modified.iter().zip(new_values) {
        let slot = base
            .genotype
            .get_mut(u)
            .ok_or_else(|| invalid(format!("variable index {u} out of range")))?;
        *slot = v;
    }
    base.fitness = base.fitness + evaluation.delta;
    if let Some(cache) = base.subfunction_values.as_mut() {
        for &(j, value) in &evaluation.affected {
            cache[j] = value;
        }
    }
    Ok(base)
}

/// Reusable scratch space for in-place trial modifications in the engines.
///
/// A trial writes donor values straight into the solution, evaluates the
/// affected subfunctions, and then either commits or reverts.
pub(crate) struct TrialWorkspace<S> {
    stamp: Vec<u32>,
    epoch: u32,
    affected: Vec<usize>,
    new_values: Vec<S>,
    saved: Vec<u8>,
}

impl<S: Fitness> TrialWorkspace<S> {
    pub(crate) fn new(num_subfunctions: usize) -> Self {
        Self {
            stamp: vec![0; num_subfunctions],
            epoch: 0,
            affected: Vec::new(),
            new_values: Vec::new(),
            saved: Vec::new(),
        }
    }

    /// Copy `source[set]` into `target`, returning the fitness change.
    /// The target is left modified; call [`Self::commit`] or [`Self::revert`].
    pub(crate) fn try_insert(
        &mut self,
        problem: &GrayBoxProblem<S>,
        target: &mut EvaluatedSolution<S>,
        source: &[u8],
        set: &[usize],
    ) -> S {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        self.affected.clear();
        self.saved.clear();
        for &u in set {
            self.saved.push(target.genotype[u]);
            target.genotype[u] = source[u];
            for &j in problem.dependent_subfunctions(u) {
                if self.stamp[j] != self.epoch {
                    self.stamp[j] = self.epoch;
                    self.affected.push(j);
                }
            }
        }
        let cache = target
            .subfunction_values
            .as_ref()
            .expect("engine solutions always carry a subfunction cache");
        self.new_values.clear();
        let mut delta = S::zero();
        for &j in &self.affected {
            let value = problem.evaluate_subfunction(j, &target.genotype);
            delta = delta + (value - cache[j]);
            self.new_values.push(value);
        }
        delta
    }

    pub(crate) fn commit(&self, target: &mut EvaluatedSolution<S>, delta: S) {
        target.fitness = target.fitness + delta;
        let cache = target.subfunction_values.as_mut().expect("cache present");
        for (&j, &value) in self.affected.iter().zip(&self.new_values) {
            cache[j] = value;
        }
    }

    pub(crate) fn revert(&self, target: &mut EvaluatedSolution<S>, set: &[usize]) {
        for (&u, &old) in set.iter().zip(&self.saved) {
            target.genotype[u] = old;
        }
    }
}

/// Variable interaction graph: `u ~ v` iff some subfunction reads both.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vig {
    adjacency: Vec<Vec<usize>>,
}

impl Vig {
    /// Build from an undirected edge list; duplicates and self-loops dropped.
    pub fn from_edges(num_vertices: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut adjacency = vec![Vec::new(); num_vertices];
        for (u, v) in edges {
            if u != v {
                adjacency[u].push(v);
                adjacency[v].push(u);
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Self { adjacency }
    }

    pub fn num_vertices(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adjacency[u]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges `(u, v)` with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }
}

pub fn build_vig<S: Fitness>(problem: &GrayBoxProblem<S>) -> Vig {
    let pairs = problem.all_subfunction_inputs().iter().flat_map(|set| {
        set.iter()
            .enumerate()
            .flat_map(move |(a, &u)| set[a + 1..].iter().map(move |&v| (u, v)))
    });
    Vig::from_edges(problem.num_variables(), pairs)
}
