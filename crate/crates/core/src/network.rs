//! Graph environment: adjacency storage, deterministic seeded generators
//! (Erdős–Rényi, Watts–Strogatz, Barabási–Albert), and basic metrics.
//!
//! Nodes are `0..n-1` and stand for agent IDs. Generator visit orders are
//! part of the contract — lexicographic pair order for Erdős–Rényi, lane
//! then node for Watts–Strogatz, repeated-endpoint sampling for
//! Barabási–Albert — so identical (generator, parameters, seed) triples
//! produce identical adjacency on any implementation that follows them.
//! Graphs are immutable after generation and safe for concurrent reads.

use std::collections::BTreeMap;

use crate::error::{Result, SimError};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    directed: bool,
    adj: Vec<Vec<usize>>,
    /// Edge weights parallel to `adj`; storage only, metrics ignore them.
    weights: Option<Vec<Vec<f64>>>,
    edges: usize,
}

impl Graph {
    pub fn new(n: usize, directed: bool) -> Self {
        Graph {
            directed,
            adj: vec![Vec::new(); n],
            weights: None,
            edges: 0,
        }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    fn check_node(&self, v: usize) -> Result<()> {
        if v >= self.adj.len() {
            return Err(SimError::OutOfBounds(format!("node {v}")));
        }
        Ok(())
    }

    /// Insert an edge. Self-loops and parallel edges are rejected.
    pub fn add_edge(&mut self, a: usize, b: usize) -> Result<()> {
        self.insert_edge(a, b, None)
    }

    /// Insert a weighted edge (weight storage is allocated lazily).
    pub fn add_weighted_edge(&mut self, a: usize, b: usize, weight: f64) -> Result<()> {
        self.insert_edge(a, b, Some(weight))
    }

    fn insert_edge(&mut self, a: usize, b: usize, weight: Option<f64>) -> Result<()> {
        self.check_node(a)?;
        self.check_node(b)?;
        if a == b {
            return Err(SimError::InvalidArgument(format!("self-loop at node {a}")));
        }
        if self.has_edge(a, b) {
            return Err(SimError::InvalidArgument(format!("parallel edge ({a}, {b})")));
        }
        if weight.is_some() && self.weights.is_none() {
            // backfill earlier unweighted edges with unit weight
            self.weights = Some(self.adj.iter().map(|list| vec![1.0; list.len()]).collect());
        }
        let w = weight.unwrap_or(1.0);
        let attach = |from: usize, to: usize, g: &mut Graph| {
            let pos = g.adj[from].partition_point(|&x| x < to);
            g.adj[from].insert(pos, to);
            if let Some(ws) = &mut g.weights {
                ws[from].insert(pos, w);
            }
        };
        attach(a, b, self);
        if !self.directed {
            attach(b, a, self);
        }
        self.edges += 1;
        Ok(())
    }

    fn remove_edge(&mut self, a: usize, b: usize) {
        let detach = |from: usize, to: usize, g: &mut Graph| {
            if let Ok(pos) = g.adj[from].binary_search(&to) {
                g.adj[from].remove(pos);
                if let Some(ws) = &mut g.weights {
                    ws[from].remove(pos);
                }
            }
        };
        detach(a, b, self);
        if !self.directed {
            detach(b, a, self);
        }
        self.edges -= 1;
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj
            .get(a)
            .map(|list| list.binary_search(&b).is_ok())
            .unwrap_or(false)
    }

    /// Neighbors of a node, ascending.
    pub fn neighbors(&self, v: usize) -> Result<&[usize]> {
        self.check_node(v)?;
        Ok(&self.adj[v])
    }

    pub fn degree(&self, v: usize) -> Result<usize> {
        Ok(self.neighbors(v)?.len())
    }

    pub fn edge_weight(&self, a: usize, b: usize) -> Option<f64> {
        let ws = self.weights.as_ref()?;
        let pos = self.adj.get(a)?.binary_search(&b).ok()?;
        Some(ws[a][pos])
    }

    /// Histogram degree -> node count.
    pub fn degree_distribution(&self) -> BTreeMap<usize, usize> {
        let mut hist = BTreeMap::new();
        for list in &self.adj {
            *hist.entry(list.len()).or_insert(0) += 1;
        }
        hist
    }

    fn require_undirected(&self, what: &str) -> Result<()> {
        if self.directed {
            return Err(SimError::InvalidArgument(format!(
                "{what} is defined for undirected graphs"
            )));
        }
        Ok(())
    }

    /// Mean over nodes of the local clustering coefficient
    /// triangles / (deg choose 2), taking 0 for degree < 2.
    pub fn avg_clustering(&self) -> Result<f64> {
        self.require_undirected("clustering coefficient")?;
        let n = self.adj.len();
        if n == 0 {
            return Err(SimError::EmptyAggregate("clustering"));
        }
        let mut total = 0.0;
        for list in &self.adj {
            let deg = list.len();
            if deg < 2 {
                continue;
            }
            let mut triangles = 0usize;
            for i in 0..deg {
                for j in (i + 1)..deg {
                    if self.has_edge(list[i], list[j]) {
                        triangles += 1;
                    }
                }
            }
            total += triangles as f64 / (deg * (deg - 1) / 2) as f64;
        }
        Ok(total / n as f64)
    }

    /// Mean shortest-path length over all unordered node pairs, via
    /// breadth-first search from every node. Errors if the graph is
    /// disconnected.
    pub fn avg_path_length(&self) -> Result<f64> {
        self.require_undirected("path length")?;
        let n = self.adj.len();
        if n < 2 {
            return Err(SimError::EmptyAggregate("path length"));
        }
        let mut total: u64 = 0;
        let mut dist = vec![usize::MAX; n];
        let mut queue = std::collections::VecDeque::new();
        for source in 0..n {
            dist.fill(usize::MAX);
            dist[source] = 0;
            queue.clear();
            queue.push_back(source);
            let mut seen = 1usize;
            while let Some(u) = queue.pop_front() {
                for &v in &self.adj[u] {
                    if dist[v] == usize::MAX {
                        dist[v] = dist[u] + 1;
                        total += dist[v] as u64;
                        seen += 1;
                        queue.push_back(v);
                    }
                }
            }
            if seen != n {
                return Err(SimError::Disconnected);
            }
        }
        // each unordered pair counted from both endpoints
        let pairs = (n * (n - 1) / 2) as f64;
        Ok(total as f64 / 2.0 / pairs)
    }
}

/// G(n, p): every unordered pair (i < j), visited in lexicographic order,
/// becomes an edge iff the next uniform draw is < p.
pub fn erdos_renyi(n: usize, p: f64, rng: &mut Rng) -> Result<Graph> {
    if n < 1 {
        return Err(SimError::InvalidArgument("n must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(SimError::InvalidArgument("p must lie in [0, 1]".into()));
    }
    let mut graph = Graph::new(n, false);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.uniform() < p {
                graph.add_edge(i, j)?;
            }
        }
    }
    Ok(graph)
}

/// Watts–Strogatz: ring lattice (node i connected to i±1..i±k/2 mod n),
/// then each lattice edge (i, i+j) — visited lane j = 1..k/2, node
/// i = 0..n-1 — is rewired with probability beta to (i, u), where u is
/// redrawn uniformly until u != i and (i, u) is not already an edge. If no
/// valid target appears within n attempts the original edge is kept.
pub fn watts_strogatz(n: usize, k: usize, beta: f64, rng: &mut Rng) -> Result<Graph> {
    if k == 0 || k % 2 != 0 || k >= n {
        return Err(SimError::InvalidArgument(
            "ring degree k must be even with 0 < k < n".into(),
        ));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(SimError::InvalidArgument("beta must lie in [0, 1]".into()));
    }
    let mut graph = Graph::new(n, false);
    for i in 0..n {
        for j in 1..=(k / 2) {
            let other = (i + j) % n;
            if !graph.has_edge(i, other) {
                graph.add_edge(i, other)?;
            }
        }
    }
    for j in 1..=(k / 2) {
        for i in 0..n {
            let original = (i + j) % n;
            if rng.uniform() >= beta {
                continue;
            }
            for _ in 0..n {
                let u = rng.below(n as u64) as usize;
                if u != i && !graph.has_edge(i, u) {
                    graph.remove_edge(i, original);
                    graph.add_edge(i, u)?;
                    break;
                }
            }
        }
    }
    Ok(graph)
}

/// Barabási–Albert preferential attachment: complete seed graph on m+1
/// nodes, then each new node attaches to m distinct existing nodes sampled
/// by repeated draws from the degree-weighted distribution (duplicates
/// rejected and redrawn). The degree weighting is realized as a uniform
/// draw over a list holding each edge endpoint once per incidence.
pub fn barabasi_albert(n: usize, m: usize, rng: &mut Rng) -> Result<Graph> {
    if m < 1 || m + 1 > n {
        return Err(SimError::InvalidArgument(
            "attachment count m must satisfy 1 <= m <= n - 1".into(),
        ));
    }
    let mut graph = Graph::new(n, false);
    let mut endpoints: Vec<usize> = Vec::with_capacity(2 * (m + 1) * m / 2 + 2 * (n - m - 1) * m);
    for i in 0..=m {
        for j in (i + 1)..=m {
            graph.add_edge(i, j)?;
            endpoints.push(i);
            endpoints.push(j);
        }
    }
    for v in (m + 1)..n {
        let mut chosen: Vec<usize> = Vec::with_capacity(m);
        while chosen.len() < m {
            let t = endpoints[rng.below(endpoints.len() as u64) as usize];
            if !chosen.contains(&t) {
                chosen.push(t);
            }
        }
        for &t in &chosen {
            graph.add_edge(v, t)?;
            endpoints.push(v);
            endpoints.push(t);
        }
    }
    Ok(graph)
}
