//! Grouping linkage sets into batches of mutually independent GOM steps.
//!
//! Two linkage sets interact when they share a variable or when a variable
//! interaction edge joins them. A proper coloring of that interaction graph
//! partitions the model into groups whose steps touch disjoint subfunctions.

use std::fmt;

use crate::graybox::Vig;
use crate::linkage::Fos;

/// Linkage model interaction graph: one vertex per linkage set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lmig {
    adjacency: Vec<Vec<usize>>,
}

impl Lmig {
    pub fn from_adjacency(mut adjacency: Vec<Vec<usize>>) -> Self {
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Self { adjacency }
    }

    pub fn num_vertices(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search(&j).is_ok()
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }
}

/// Connect sets that overlap or are bridged by an interaction edge.
pub fn build_lmig(fos: &Fos, vig: &Vig) -> Lmig {
    let ell = vig.num_vertices();
    let m = fos.len();
    let mut containing: Vec<Vec<usize>> = vec![Vec::new(); ell];
    for (i, set) in fos.sets().iter().enumerate() {
        for &u in set {
            containing[u].push(i);
        }
    }
    // sets touching u or any neighbor of u
    let mut near: Vec<Vec<usize>> = Vec::with_capacity(ell);
    for u in 0..ell {
        let mut list = containing[u].clone();
        for &v in vig.neighbors(u) {
            list.extend_from_slice(&containing[v]);
        }
        list.sort_unstable();
        list.dedup();
        near.push(list);
    }
    let mut stamp = vec![usize::MAX; m];
    let adjacency = fos
        .sets()
        .iter()
        .enumerate()
        .map(|(i, set)| {
            let mut list = Vec::new();
            for &u in set {
                for &j in &near[u] {
                    if j != i && stamp[j] != i {
                        stamp[j] = i;
                        list.push(j);
                    }
                }
            }
            list
        })
        .collect();
    Lmig::from_adjacency(adjacency)
}

/// Partition of linkage set indices by color; no group contains an LMIG edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorGroups {
    groups: Vec<Vec<usize>>,
}

impl ColorGroups {
    pub fn new(groups: Vec<Vec<usize>>) -> Self {
        Self { groups }
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn group(&self, index: usize) -> &[usize] {
        &self.groups[index]
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// True when the groups partition `0..num_sets` and form a proper
    /// coloring of `graph`.
    pub fn is_proper_partition(&self, graph: &Lmig) -> bool {
        let m = graph.num_vertices();
        let mut color = vec![usize::MAX; m];
        for (c, group) in self.groups.iter().enumerate() {
            for &i in group {
                if i >= m || color[i] != usize::MAX {
                    return false;
                }
                color[i] = c;
            }
        }
        color.iter().all(|&c| c != usize::MAX) && graph.edges().all(|(i, j)| color[i] != color[j])
    }
}

/// One line per group: space-separated linkage set indices.
impl fmt::Display for ColorGroups {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for group in &self.groups {
            let line: Vec<String> = group.iter().map(usize::to_string).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// Greedy Welsh-Powell coloring: vertices by non-increasing degree (ties by
/// index), each taking the smallest color unused by colored neighbors.
pub fn welsh_powell(graph: &Lmig) -> ColorGroups {
    let m = graph.num_vertices();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| graph.degree(b).cmp(&graph.degree(a)).then(a.cmp(&b)));

    let mut color = vec![usize::MAX; m];
    let mut taken = vec![usize::MAX; graph.max_degree() + 2];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &v in &order {
        for &w in graph.neighbors(v) {
            if color[w] != usize::MAX {
                taken[color[w]] = v;
            }
        }
        let c = (0..).find(|&c| taken[c] != v).expect("a free color exists");
        color[v] = c;
        if c == groups.len() {
            groups.push(Vec::new());
        }
        groups[c].push(v);
    }
    for group in &mut groups {
        group.sort_unstable();
    }
    ColorGroups { groups }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupStats {
    pub num_groups: usize,
    /// Group sizes, largest first.
    pub sizes: Vec<usize>,
    pub mean_width: f64,
}

pub fn group_stats(groups: &ColorGroups) -> GroupStats {
    let mut sizes: Vec<usize> = groups.groups().iter().map(Vec::len).collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    let total: usize = sizes.iter().sum();
    GroupStats {
        num_groups: sizes.len(),
        mean_width: if sizes.is_empty() {
            0.0
        } else {
            total as f64 / sizes.len() as f64
        },
        sizes,
    }
}

impl fmt::Display for GroupStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sizes: Vec<String> = self.sizes.iter().map(usize::to_string).collect();
        writeln!(f, "groups {}", self.num_groups)?;
        writeln!(f, "sizes {}", sizes.join(" "))?;
        writeln!(f, "mean_width {:.3}", self.mean_width)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Lmig {
        Lmig::from_adjacency(vec![vec![1, 2], vec![0, 2], vec![0, 1]])
    }

    #[test]
    fn coloring_small_graphs() {
        let groups = welsh_powell(&triangle());
        assert_eq!(groups.len(), 3);
        assert!(groups.is_proper_partition(&triangle()));

        let empty = Lmig::from_adjacency(vec![Vec::new(); 6]);
        let groups = welsh_powell(&empty);
        assert_eq!(groups.groups(), &[vec![0, 1, 2, 3, 4, 5]]);
    }

    #[test]
    fn lmig_rules() {
        let vig = Vig::from_edges(4, [(0, 1)]);
        let fos = Fos::from_sets(vec![vec![0], vec![1], vec![2], vec![3], vec![2, 3]]);
        let g = build_lmig(&fos, &vig);
        assert!(g.has_edge(0, 1), "bridged by an interaction edge");
        assert!(!g.has_edge(0, 2));
        assert!(!g.has_edge(2, 3));
        assert!(g.has_edge(2, 4) && g.has_edge(3, 4), "overlap");
    }

    #[test]
    fn stats_sorted() {
        let s = group_stats(&ColorGroups::new(vec![vec![0], vec![1, 2], vec![3]]));
        assert_eq!(s.num_groups, 3);
        assert_eq!(s.sizes, vec![2, 1, 1]);
        assert!((s.mean_width - 4.0 / 3.0).abs() < 1e-12);
    }
}
