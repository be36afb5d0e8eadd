//! Weighted Max-Cut: instances, generators, the edge-list format, and an
//! exhaustive oracle for small graphs.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::BufRead;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::graybox::{Genotype, GrayBoxProblem};
use crate::rng::RngStream;
use crate::scalar::Fitness;

/// Largest instance the exhaustive oracle accepts.
pub const ORACLE_MAX_VERTICES: usize = 26;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge<S> {
    pub u: usize,
    pub v: usize,
    pub weight: S,
}

/// Undirected weighted graph. Edges are stored with `u < v`, sorted, unique.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxCutInstance<S> {
    num_vertices: usize,
    edges: Vec<Edge<S>>,
}

impl<S: Fitness> MaxCutInstance<S> {
    pub fn new(num_vertices: usize, edges: impl IntoIterator<Item = (usize, usize, S)>) -> Result<Self> {
        let mut out = Vec::new();
        for (u, v, weight) in edges {
            if u >= num_vertices || v >= num_vertices {
                return Err(invalid(format!("edge ({u},{v}) outside {num_vertices} vertices")));
            }
            if u == v {
                return Err(invalid(format!("self-loop on vertex {u}")));
            }
            if !weight.is_finite_value() {
                return Err(invalid(format!("edge ({u},{v}) has a non-finite weight")));
            }
            let (u, v) = if u < v { (u, v) } else { (v, u) };
            out.push(Edge { u, v, weight });
        }
        out.sort_by_key(|e| (e.u, e.v));
        if let Some(w) = out.windows(2).find(|w| (w[0].u, w[0].v) == (w[1].u, w[1].v)) {
            return Err(invalid(format!("duplicate edge ({},{})", w[0].u, w[0].v)));
        }
        Ok(Self {
            num_vertices,
            edges: out,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge<S>] {
        &self.edges
    }

    pub fn degree(&self, vertex: usize) -> usize {
        self.edges.iter().filter(|e| e.u == vertex || e.v == vertex).count()
    }

    /// Total weight of edges whose endpoints lie on different sides.
    pub fn cut_value(&self, genotype: &[u8]) -> Result<S> {
        if genotype.len() != self.num_vertices {
            return Err(invalid(format!(
                "genotype has length {}, instance has {} vertices",
                genotype.len(),
                self.num_vertices
            )));
        }
        Ok(self
            .edges
            .iter()
            .filter(|e| genotype[e.u] != genotype[e.v])
            .map(|e| e.weight)
            .sum())
    }

    /// One subfunction per edge: `w_uv` if the endpoints are split, else 0.
    pub fn as_graybox(&self) -> GrayBoxProblem<S> {
        let inputs = self.edges.iter().map(|e| vec![e.u, e.v]).collect();
        let weights: Vec<S> = self.edges.iter().map(|e| e.weight).collect();
        GrayBoxProblem::new(self.num_vertices.max(1), inputs, move |i: usize, x: &[u8]| {
            if x[0] != x[1] {
                weights[i]
            } else {
                S::zero()
            }
        })
        .expect("validated instance always forms a valid problem")
    }

    /// Canonical text form: header then one `u v w` line per edge, 1-based.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.num_vertices, self.edges.len());
        for e in &self.edges {
            let _ = writeln!(out, "{} {} {}", e.u + 1, e.v + 1, e.weight);
        }
        out
    }

    /// Exact optimum by enumeration with vertex 0 fixed to side 0.
    ///
    /// Ties resolve to the lexicographically smallest genotype.
    pub fn brute_force_optimum(&self) -> Result<(S, Genotype)> {
        let n = self.num_vertices;
        if n > ORACLE_MAX_VERTICES {
            return Err(Error::TooLarge(format!(
                "exhaustive search is capped at {ORACLE_MAX_VERTICES} vertices, got {n}"
            )));
        }
        if n <= 1 {
            return Ok((S::zero(), Genotype::zeros(n)));
        }
        let mut adjacency: Vec<Vec<(usize, S)>> = vec![Vec::new(); n];
        for e in &self.edges {
            adjacency[e.u].push((e.v, e.weight));
            adjacency[e.v].push((e.u, e.weight));
        }
        // bit i of a mask is x_i; bit 0 stays clear
        let free = n - 1;
        let high_bits = free.min(6);
        let low_bits = free - high_bits;
        let best = (0u64..1 << high_bits)
            .into_par_iter()
            .map(|high| {
                let mut mask = high << (1 + low_bits);
                let mut value = self.mask_cut(mask);
                let mut best = (value, mask);
                for step in 1u64..1 << low_bits {
                    let bit = 1 + step.trailing_zeros() as usize;
                    let side = (mask >> bit) & 1;
                    for &(w, weight) in &adjacency[bit] {
                        if (mask >> w) & 1 == side {
                            value = value + weight;
                        } else {
                            value = value - weight;
                        }
                    }
                    mask ^= 1 << bit;
                    if better(value, mask, best.0, best.1) {
                        best = (value, mask);
                    }
                }
                best
            })
            .reduce_with(|a, b| if better(b.0, b.1, a.0, a.1) { b } else { a })
            .expect("at least one chunk");
        let genotype = Genotype((0..n).map(|i| ((best.1 >> i) & 1) as u8).collect());
        let value = self.cut_value(&genotype)?;
        Ok((value, genotype))
    }

    fn mask_cut(&self, mask: u64) -> S {
        self.edges
            .iter()
            .filter(|e| (mask >> e.u) & 1 != (mask >> e.v) & 1)
            .map(|e| e.weight)
            .sum()
    }
}

/// Is `(value, mask)` preferred over the incumbent?
fn better<S: Fitness>(value: S, mask: u64, best_value: S, best_mask: u64) -> bool {
    match S::compare(value, best_value) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => {
            let diff = mask ^ best_mask;
            // lexicographically smaller genotype has a 0 at the first difference
            diff != 0 && (best_mask >> diff.trailing_zeros()) & 1 == 1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightScheme {
    Unit,
    /// Uniform integer weights in `lo..=hi`.
    UniformInt {
        lo: i64,
        hi: i64,
    },
}

impl WeightScheme {
    fn draw<S: Fitness>(&self, rng: &mut RngStream) -> S {
        let w = match *self {
            WeightScheme::Unit => 1,
            WeightScheme::UniformInt { lo, hi } => lo + rng.below((hi - lo + 1) as usize) as i64,
        };
        S::from(w).expect("integer weight representable in the scalar type")
    }

    fn check(&self) -> Result<()> {
        match *self {
            WeightScheme::UniformInt { lo, hi } if lo > hi => Err(invalid(format!("empty weight range {lo}..={hi}"))),
            _ => Ok(()),
        }
    }
}

/// Complete graph on `n` vertices.
pub fn generate_complete<S: Fitness>(n: usize, scheme: WeightScheme, seed: u64) -> Result<MaxCutInstance<S>> {
    if n < 2 {
        return Err(invalid("a complete graph needs at least two vertices"));
    }
    scheme.check()?;
    let mut rng = RngStream::new(seed);
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for u in 0..n {
        for v in u + 1..n {
            edges.push((u, v, scheme.draw(&mut rng)));
        }
    }
    MaxCutInstance::new(n, edges)
}

/// `width × height` grid with wrap-around; every vertex has degree 4.
pub fn generate_torus<S: Fitness>(
    width: usize,
    height: usize,
    scheme: WeightScheme,
    seed: u64,
) -> Result<MaxCutInstance<S>> {
    if width < 3 || height < 3 {
        return Err(invalid(format!(
            "torus dimensions must be at least 3x3, got {width}x{height}"
        )));
    }
    scheme.check()?;
    let mut rng = RngStream::new(seed);
    let id = |r: usize, c: usize| r * width + c;
    let mut edges = Vec::with_capacity(2 * width * height);
    for r in 0..height {
        for c in 0..width {
            edges.push((id(r, c), id(r, (c + 1) % width), scheme.draw(&mut rng)));
            edges.push((id(r, c), id((r + 1) % height, c), scheme.draw(&mut rng)));
        }
    }
    MaxCutInstance::new(width * height, edges)
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Read the `<n> <m>` / `<u> <v> <w>` edge-list format (1-based vertices,
/// `#` comments).
pub fn load_edge_list<S: Fitness>(reader: impl BufRead) -> Result<MaxCutInstance<S>> {
    let mut header: Option<(usize, usize)> = None;
    let mut edges: Vec<(usize, usize, S)> = Vec::new();
    let mut seen = HashSet::new();
    let mut last_line = 0;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        last_line = lineno;
        let line = line.map_err(|e| parse_error(lineno, e.to_string()))?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = text.split_whitespace().collect();
        let Some((n, m)) = header else {
            let [n, m] = tokens[..] else {
                return Err(parse_error(lineno, "header must be '<num_vertices> <num_edges>'"));
            };
            let n = n
                .parse()
                .map_err(|_| parse_error(lineno, format!("bad vertex count '{n}'")))?;
            let m = m
                .parse()
                .map_err(|_| parse_error(lineno, format!("bad edge count '{m}'")))?;
            header = Some((n, m));
            continue;
        };
        let [u, v, w] = tokens[..] else {
            return Err(parse_error(lineno, "edge line must be '<u> <v> <w>'"));
        };
        if edges.len() == m {
            return Err(parse_error(lineno, format!("more than the declared {m} edges")));
        }
        let vertex = |t: &str| -> Result<usize> {
            let x: usize = t
                .parse()
                .map_err(|_| parse_error(lineno, format!("bad vertex '{t}'")))?;
            if x == 0 || x > n {
                return Err(parse_error(lineno, format!("vertex {x} outside 1..={n}")));
            }
            Ok(x - 1)
        };
        let (u, v) = (vertex(u)?, vertex(v)?);
        if u == v {
            return Err(parse_error(lineno, format!("self-loop on vertex {}", u + 1)));
        }
        let weight = S::parse_token(w).ok_or_else(|| parse_error(lineno, format!("bad weight '{w}'")))?;
        if !seen.insert((u.min(v), u.max(v))) {
            return Err(parse_error(lineno, format!("duplicate edge {} {}", u + 1, v + 1)));
        }
        edges.push((u, v, weight));
    }
    let Some((n, m)) = header else {
        return Err(parse_error(last_line.max(1), "missing header"));
    };
    if edges.len() != m {
        return Err(parse_error(
            last_line,
            format!("declared {m} edges, found {}", edges.len()),
        ));
    }
    MaxCutInstance::new(n, edges).map_err(|e| parse_error(last_line, e.to_string()))
}

pub fn parse_edge_list<S: Fitness>(text: &str) -> Result<MaxCutInstance<S>> {
    load_edge_list(text.as_bytes())
}
