use std::collections::HashSet;

use ndarray::Array1;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use super::link::sigmoid;
use super::{BtlError, ScoreVector};

/// Compared pair `j < m` (0-based) with `count` comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub j: usize,
    pub m: usize,
    pub count: u32,
}

/// Undirected comparison design.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonGraph {
    n: usize,
    edges: Vec<Edge>,
    /// Per item: `(neighbour, edge index)`.
    adjacency: Vec<Vec<(usize, usize)>>,
    component: Vec<usize>,
    components: usize,
}

impl ComparisonGraph {
    pub fn new(n: usize, edges: Vec<Edge>) -> Result<Self, BtlError> {
        let mut seen = HashSet::with_capacity(edges.len());
        let mut adjacency = vec![Vec::new(); n];
        for (k, e) in edges.iter().enumerate() {
            if e.j >= e.m || e.m >= n {
                return Err(BtlError::InvalidEdge { j: e.j, m: e.m, n });
            }
            if e.count == 0 {
                return Err(BtlError::EmptyEdge { j: e.j, m: e.m });
            }
            if !seen.insert((e.j, e.m)) {
                return Err(BtlError::DuplicateEdge { j: e.j, m: e.m });
            }
            adjacency[e.j].push((e.m, k));
            adjacency[e.m].push((e.j, k));
        }
        let (component, components) = label_components(n, &edges);
        Ok(Self {
            n,
            edges,
            adjacency,
            component,
            components,
        })
    }

    /// Every pair compared `count` times.
    pub fn complete(n: usize, count: u32) -> Result<Self, BtlError> {
        let edges = (0..n)
            .flat_map(|j| ((j + 1)..n).map(move |m| Edge { j, m, count }))
            .collect();
        Self::new(n, edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbours(&self, j: usize) -> &[(usize, usize)] {
        &self.adjacency[j]
    }

    pub fn degree(&self, j: usize) -> usize {
        self.adjacency[j].len()
    }

    pub fn is_connected(&self) -> bool {
        self.components <= 1
    }

    pub fn component_count(&self) -> usize {
        self.components
    }

    /// Component label of every item.
    pub fn components(&self) -> &[usize] {
        &self.component
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn label_components(n: usize, edges: &[Edge]) -> (Vec<usize>, usize) {
    let mut parent: Vec<usize> = (0..n).collect();
    for e in edges {
        let (a, b) = (find(&mut parent, e.j), find(&mut parent, e.m));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut roots = Vec::new();
    for (i, slot) in label.iter_mut().enumerate() {
        let r = find(&mut parent, i);
        let id = match roots.iter().position(|&x| x == r) {
            Some(id) => id,
            None => {
                roots.push(r);
                roots.len() - 1
            }
        };
        *slot = id;
    }
    (label, roots.len())
}

/// Comparison outcomes: `wins[k]` is the number of times `edges[k].j` beat
/// `edges[k].m`. Real-valued so that expected outcomes are representable.
#[derive(Debug, Clone, PartialEq)]
pub struct BtlObservation {
    graph: ComparisonGraph,
    wins: Vec<f64>,
}

impl BtlObservation {
    pub fn new(graph: ComparisonGraph, wins: Vec<f64>) -> Result<Self, BtlError> {
        if wins.len() != graph.edges().len() {
            return Err(BtlError::DimensionMismatch {
                expected: graph.edges().len(),
                got: wins.len(),
            });
        }
        for (e, &s) in graph.edges().iter().zip(&wins) {
            if !(s >= 0.0 && s <= e.count as f64) {
                return Err(BtlError::WinsOutOfRange {
                    j: e.j,
                    m: e.m,
                    wins: s,
                    count: e.count,
                });
            }
        }
        Ok(Self { graph, wins })
    }

    /// Outcomes replaced by their expectations `N sigma(truth_j - truth_m)`.
    pub fn expected(graph: ComparisonGraph, truth: &Array1<f64>) -> Result<Self, BtlError> {
        if truth.len() != graph.n() {
            return Err(BtlError::DimensionMismatch {
                expected: graph.n(),
                got: truth.len(),
            });
        }
        let wins = graph
            .edges()
            .iter()
            .map(|e| e.count as f64 * sigmoid(truth[e.j] - truth[e.m]))
            .collect();
        Ok(Self { graph, wins })
    }

    pub fn graph(&self) -> &ComparisonGraph {
        &self.graph
    }

    pub fn wins(&self) -> &[f64] {
        &self.wins
    }

    /// True when, inside every component, each item can reach every other
    /// item along "beat" relations, which is when the unpenalized MLE is
    /// finite up to a shift.
    pub fn wins_strongly_connected(&self) -> bool {
        let n = self.graph.n();
        let mut beat = vec![Vec::new(); n];
        let mut beaten = vec![Vec::new(); n];
        for (e, &s) in self.graph.edges().iter().zip(&self.wins) {
            if s > 0.0 {
                beat[e.j].push(e.m);
                beaten[e.m].push(e.j);
            }
            if s < e.count as f64 {
                beat[e.m].push(e.j);
                beaten[e.j].push(e.m);
            }
        }
        let reach = |adj: &Vec<Vec<usize>>, start: usize| {
            let mut seen = vec![false; n];
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            seen
        };
        let labels = self.graph.components();
        for c in 0..self.graph.component_count() {
            let members: Vec<usize> = (0..n).filter(|&i| labels[i] == c).collect();
            if members.len() < 2 {
                continue;
            }
            let fwd = reach(&beat, members[0]);
            let bwd = reach(&beaten, members[0]);
            if members.iter().any(|&i| !fwd[i] || !bwd[i]) {
                return false;
            }
        }
        true
    }
}

/// Erdos-Renyi design: each pair present independently with probability `p`
/// and compared `l` times.
pub fn sample_er_graph<R: Rng + ?Sized>(
    n: usize,
    p: f64,
    l: u32,
    rng: &mut R,
) -> Result<ComparisonGraph, BtlError> {
    if n < 2 {
        return Err(BtlError::InvalidParameter {
            name: "n",
            value: n as f64,
        });
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(BtlError::InvalidParameter {
            name: "p",
            value: p,
        });
    }
    if l == 0 {
        return Err(BtlError::InvalidParameter {
            name: "L",
            value: 0.0,
        });
    }
    let mut edges = Vec::new();
    for j in 0..n {
        for m in (j + 1)..n {
            if rng.random::<f64>() < p {
                edges.push(Edge { j, m, count: l });
            }
        }
    }
    ComparisonGraph::new(n, edges)
}

/// `S_jm ~ Binomial(N_jm, sigma(truth_j - truth_m))`, independent over edges.
pub fn sample_outcomes<R: Rng + ?Sized>(
    graph: &ComparisonGraph,
    truth: &ScoreVector,
    rng: &mut R,
) -> Result<BtlObservation, BtlError> {
    let t = truth.as_array();
    if t.len() != graph.n() {
        return Err(BtlError::DimensionMismatch {
            expected: graph.n(),
            got: t.len(),
        });
    }
    let wins = graph
        .edges()
        .iter()
        .map(|e| {
            let p = sigmoid(t[e.j] - t[e.m]);
            Binomial::new(e.count as u64, p)
                .map(|b| b.sample(rng) as f64)
                .map_err(|_| BtlError::InvalidParameter {
                    name: "win probability",
                    value: p,
                })
        })
        .collect::<Result<Vec<_>, _>>()?;
    BtlObservation::new(graph.clone(), wins)
}
