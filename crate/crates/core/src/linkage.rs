//! Family-of-subsets linkage models built by average-linkage clustering.

use std::collections::HashMap;
use std::fmt;

use crate::error::{invalid, Result};
use crate::graybox::{Genotype, Vig};
use crate::maxcut::MaxCutInstance;
use crate::scalar::Fitness;

/// Ordered family of linkage sets over variable indices.
///
/// Tree-shaped models record, for every merged set, the two member sets it
/// was formed from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fos {
    sets: Vec<Vec<usize>>,
    children: Vec<Option<(usize, usize)>>,
}

impl Fos {
    /// Arbitrary family; sets are sorted and deduplicated.
    pub fn from_sets(sets: Vec<Vec<usize>>) -> Self {
        let sets: Vec<Vec<usize>> = sets
            .into_iter()
            .map(|mut s| {
                s.sort_unstable();
                s.dedup();
                s
            })
            .collect();
        let children = vec![None; sets.len()];
        Self { sets, children }
    }

    pub fn univariate(num_variables: usize) -> Self {
        Self::from_sets((0..num_variables).map(|u| vec![u]).collect())
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn set(&self, index: usize) -> &[usize] {
        &self.sets[index]
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    /// The two sets a merged set was built from, if recorded.
    pub fn children(&self, index: usize) -> Option<(usize, usize)> {
        self.children[index]
    }

    pub fn max_set_size(&self) -> usize {
        self.sets.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// One line per set, space-separated sorted indices.
impl fmt::Display for Fos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for set in &self.sets {
            let line: Vec<String> = set.iter().map(usize::to_string).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// Dense symmetric similarity matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    size: usize,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn zeros(size: usize) -> Self {
        Self {
            size,
            values: vec![0.0; size * size],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.values[u * self.size + v]
    }

    /// Sets both `(u,v)` and `(v,u)`. Diagonal writes are ignored.
    pub fn set(&mut self, u: usize, v: usize, value: f64) {
        if u != v {
            self.values[u * self.size + v] = value;
            self.values[v * self.size + u] = value;
        }
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.size).all(|u| self.get(u, u) == 0.0 && (0..u).all(|v| self.get(u, v) == self.get(v, u)))
    }
}

/// Empirical mutual information between every pair of binary columns.
pub fn mi_similarity(population: &[Genotype]) -> Result<SimilarityMatrix> {
    let first = population
        .first()
        .ok_or_else(|| invalid("mutual information needs a non-empty population"))?;
    let len = first.len();
    if population.iter().any(|g| g.len() != len) {
        return Err(invalid("genotypes differ in length"));
    }
    if population.iter().any(|g| g.iter().any(|&x| x > 1)) {
        return Err(invalid("mutual information is defined here for binary genotypes"));
    }
    let n = population.len() as f64;
    let ones: Vec<f64> = (0..len)
        .map(|u| population.iter().filter(|g| g[u] == 1).count() as f64)
        .collect();
    let mut matrix = SimilarityMatrix::zeros(len);
    for u in 0..len {
        for v in u + 1..len {
            let both = population.iter().filter(|g| g[u] == 1 && g[v] == 1).count() as f64;
            let joint = [[n - ones[u] - ones[v] + both, ones[v] - both], [ones[u] - both, both]];
            let marginal_u = [n - ones[u], ones[u]];
            let marginal_v = [n - ones[v], ones[v]];
            let mut mi = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    let p = joint[a][b] / n;
                    if p > 0.0 {
                        mi += p * (p / ((marginal_u[a] / n) * (marginal_v[b] / n))).ln();
                    }
                }
            }
            matrix.set(u, v, mi.max(0.0));
        }
    }
    Ok(matrix)
}

/// Absolute edge weight as similarity; zero for non-adjacent pairs.
pub fn weight_similarity<S: Fitness>(instance: &MaxCutInstance<S>) -> SimilarityMatrix {
    let mut matrix = SimilarityMatrix::zeros(instance.num_vertices());
    for e in instance.edges() {
        matrix.set(e.u, e.v, e.weight.abs().to_f64_lossy());
    }
    matrix
}

/// 0/1 similarity from variable interactions.
pub fn vig_similarity(vig: &Vig) -> SimilarityMatrix {
    let mut matrix = SimilarityMatrix::zeros(vig.num_vertices());
    for (u, v) in vig.edges() {
        matrix.set(u, v, 1.0);
    }
    matrix
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    score: f64,
    /// (smaller representative, larger representative)
    key: (usize, usize),
    partner: usize,
}

/// `a` should be merged before `b`: higher score, then lexicographically
/// smaller representative pair. Scores within rounding noise of the
/// incremental averaging count as ties.
fn precedes(a: &Candidate, b: &Candidate) -> bool {
    let scale = a.score.abs().max(b.score.abs()).max(1.0);
    if (a.score - b.score).abs() <= TIE_TOLERANCE * scale {
        return a.key < b.key;
    }
    a.score > b.score
}

const TIE_TOLERANCE: f64 = 1e-12;

struct Cluster {
    members: Vec<usize>,
    /// Smallest variable index in the cluster.
    rep: usize,
    fos_index: usize,
}

/// A merge executed during clustering, recorded for replay checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub score: f64,
}

/// Build a linkage tree by repeatedly merging the most similar pair of
/// clusters (mean similarity over all cross pairs).
///
/// With `size_bound`, merges that would exceed the bound are not taken and
/// clustering stops once no allowed merge remains. The set of all variables
/// is never included.
pub fn learn_tree_upgma(similarity: &SimilarityMatrix, size_bound: Option<usize>) -> Result<Fos> {
    learn_tree_upgma_traced(similarity, size_bound).map(|(fos, _)| fos)
}

/// As [`learn_tree_upgma`], also returning the merges in execution order
/// (indices refer to FOS positions).
pub fn learn_tree_upgma_traced(similarity: &SimilarityMatrix, size_bound: Option<usize>) -> Result<(Fos, Vec<Merge>)> {
    let ell = similarity.size();
    if ell < 2 {
        return Err(invalid("a linkage tree needs at least two variables"));
    }
    if size_bound == Some(0) {
        return Err(invalid("linkage set size bound must be positive"));
    }
    // the full variable set is never a linkage set
    let bound = size_bound.unwrap_or(ell - 1).min(ell - 1);

    let mut sets: Vec<Vec<usize>> = (0..ell).map(|u| vec![u]).collect();
    let mut children: Vec<Option<(usize, usize)>> = vec![None; ell];
    let mut merges = Vec::new();

    // cluster slots; `None` once merged away
    let mut clusters: Vec<Option<Cluster>> = (0..ell)
        .map(|u| {
            Some(Cluster {
                members: vec![u],
                rep: u,
                fos_index: u,
            })
        })
        .collect();
    // sim[a][b] between active slots, maintained by size-weighted averaging
    let mut sim: Vec<Vec<f64>> = (0..ell)
        .map(|u| (0..ell).map(|v| similarity.get(u, v)).collect())
        .collect();
    let size_of = |c: &Option<Cluster>| c.as_ref().map_or(0, |c| c.members.len());

    let best_partner = |slot: usize, clusters: &[Option<Cluster>], sim: &[Vec<f64>]| {
        let me = clusters[slot].as_ref()?;
        let mut best: Option<Candidate> = None;
        for (other, c) in clusters.iter().enumerate() {
            let Some(c) = c else { continue };
            if other == slot || me.members.len() + c.members.len() > bound {
                continue;
            }
            let cand = Candidate {
                score: sim[slot][other],
                key: (me.rep.min(c.rep), me.rep.max(c.rep)),
                partner: other,
            };
            if best.as_ref().is_none_or(|b| precedes(&cand, b)) {
                best = Some(cand);
            }
        }
        best
    };

    let mut best: Vec<Option<Candidate>> = (0..ell).map(|s| best_partner(s, &clusters, &sim)).collect();

    loop {
        let mut pick: Option<(usize, Candidate)> = None;
        for (slot, cand) in best.iter().enumerate() {
            if let Some(c) = cand {
                if pick.as_ref().is_none_or(|(_, p)| precedes(c, p)) {
                    pick = Some((slot, *c));
                }
            }
        }
        let Some((a, cand)) = pick else { break };
        let b = cand.partner;
        let (keep, gone) = (a.min(b), a.max(b));

        let ca = clusters[keep].take().expect("active");
        let cb = clusters[gone].take().expect("active");
        let (wa, wb) = (ca.members.len() as f64, cb.members.len() as f64);
        let mut members = ca.members;
        members.extend(cb.members);
        members.sort_unstable();
        let fos_index = sets.len();
        sets.push(members.clone());
        children.push(Some((ca.fos_index.min(cb.fos_index), ca.fos_index.max(cb.fos_index))));
        merges.push(Merge {
            left: ca.fos_index,
            right: cb.fos_index,
            score: cand.score,
        });

        for other in 0..ell {
            if other == keep || other == gone || clusters[other].is_none() {
                continue;
            }
            let merged = (wa * sim[keep][other] + wb * sim[gone][other]) / (wa + wb);
            sim[keep][other] = merged;
            sim[other][keep] = merged;
        }
        clusters[keep] = Some(Cluster {
            rep: ca.rep.min(cb.rep),
            members,
            fos_index,
        });
        best[gone] = None;

        let merged_size = size_of(&clusters[keep]);
        let merged_rep = clusters[keep].as_ref().map(|c| c.rep).unwrap_or(0);
        best[keep] = best_partner(keep, &clusters, &sim);
        for other in 0..ell {
            if other == keep || clusters[other].is_none() {
                continue;
            }
            let stale = best[other].is_none_or(|c| c.partner == keep || c.partner == gone);
            if stale {
                best[other] = best_partner(other, &clusters, &sim);
                continue;
            }
            if size_of(&clusters[other]) + merged_size <= bound {
                let rep = clusters[other].as_ref().map(|c| c.rep).unwrap_or(0);
                let cand = Candidate {
                    score: sim[other][keep],
                    key: (rep.min(merged_rep), rep.max(merged_rep)),
                    partner: keep,
                };
                if best[other].as_ref().is_none_or(|b| precedes(&cand, b)) {
                    best[other] = Some(cand);
                }
            }
        }
    }
    Ok((Fos { sets, children }, merges))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FosViolation {
    MissingVariable(usize),
    OutOfRange {
        set: usize,
        variable: usize,
    },
    EmptySet(usize),
    ContainsFullSet(usize),
    /// A set of size > 1 in a tree model without exactly one disjoint
    /// covering pair; holds the number of pairs found.
    NotBinaryMerge {
        set: usize,
        pairs: usize,
    },
    ExceedsBound {
        set: usize,
        size: usize,
    },
}

/// Check completeness, the full-set exclusion, tree structure (when the FOS
/// records merge links) and an optional size bound.
pub fn validate_fos(fos: &Fos, num_variables: usize, size_bound: Option<usize>) -> Vec<FosViolation> {
    let mut report = Vec::new();
    let mut covered = vec![false; num_variables];
    for (i, set) in fos.sets().iter().enumerate() {
        if set.is_empty() {
            report.push(FosViolation::EmptySet(i));
        }
        for &u in set {
            if u >= num_variables {
                report.push(FosViolation::OutOfRange { set: i, variable: u });
            } else {
                covered[u] = true;
            }
        }
        if set.len() == num_variables && set.iter().enumerate().all(|(k, &u)| k == u) {
            report.push(FosViolation::ContainsFullSet(i));
        }
        if let Some(bound) = size_bound {
            if set.len() > bound {
                report.push(FosViolation::ExceedsBound {
                    set: i,
                    size: set.len(),
                });
            }
        }
    }
    report.extend(
        covered
            .iter()
            .enumerate()
            .filter(|(_, &c)| !c)
            .map(|(u, _)| FosViolation::MissingVariable(u)),
    );

    if fos.children.iter().any(Option::is_some) {
        let index: HashMap<&[usize], usize> = fos.sets().iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();
        let mut mark = vec![false; num_variables];
        for (i, set) in fos.sets().iter().enumerate() {
            if set.len() < 2 {
                continue;
            }
            for &u in set.iter().filter(|&&u| u < num_variables) {
                mark[u] = true;
            }
            let mut pairs = 0;
            for (j, sub) in fos.sets().iter().enumerate() {
                if j == i || sub.len() >= set.len() || !sub.iter().all(|&u| u < num_variables && mark[u]) {
                    continue;
                }
                let rest: Vec<usize> = set.iter().copied().filter(|u| sub.binary_search(u).is_err()).collect();
                if index.contains_key(rest.as_slice()) {
                    pairs += 1;
                }
            }
            // each pair is seen from both sides
            let pairs = pairs / 2;
            if pairs != 1 {
                report.push(FosViolation::NotBinaryMerge { set: i, pairs });
            }
            for &u in set.iter().filter(|&&u| u < num_variables) {
                mark[u] = false;
            }
        }
    }
    report
}
