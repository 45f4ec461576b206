//! Sparse undirected simple graphs.
//!
//! A [`Graph`] is stored in compressed sparse row form with every neighbor
//! list sorted ascending. Constructors simplify their input: self-loops are
//! dropped and both directions of an edge collapse into one undirected edge.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    m: usize,
}

impl Graph {
    /// Builds a simple graph on nodes `0..n` from an edge iterator.
    ///
    /// Loops are dropped and duplicate or reversed edges are merged. An edge
    /// touching a node `>= n` is an error.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (u, v) in edges {
            for node in [u, v] {
                if node >= n {
                    return Err(Error::NodeOutOfRange { node, n });
                }
            }
            if u != v {
                adjacency[u].push(v);
                adjacency[v].push(u);
            }
        }
        Ok(Self::from_adjacency(adjacency))
    }

    fn from_adjacency(mut adjacency: Vec<Vec<usize>>) -> Self {
        let mut offsets = Vec::with_capacity(adjacency.len() + 1);
        offsets.push(0);
        let mut neighbors = Vec::new();
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
            neighbors.extend_from_slice(list);
            offsets.push(neighbors.len());
        }
        let m = neighbors.len() / 2;
        Graph {
            offsets,
            neighbors,
            m,
        }
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Sum of all degrees, `2m`.
    pub fn total_degree(&self) -> usize {
        self.neighbors.len()
    }

    pub fn degree(&self, node: usize) -> usize {
        self.offsets[node + 1] - self.offsets[node]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n()).map(|i| self.degree(i)).collect()
    }

    pub fn average_degree(&self) -> f64 {
        if self.n() == 0 {
            0.0
        } else {
            self.total_degree() as f64 / self.n() as f64
        }
    }

    /// Sorted neighbor list of `node`.
    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[self.offsets[node]..self.offsets[node + 1]]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n() && v < self.n() && self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    /// `y = A x`.
    pub fn adjacency_matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n());
        debug_assert_eq!(y.len(), self.n());
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.neighbors(i).iter().map(|&j| x[j]).sum();
        }
    }

    /// Sum of degrees over `nodes`.
    pub fn volume(&self, nodes: &[usize]) -> Result<usize> {
        let n = self.n();
        nodes.iter().try_fold(0usize, |acc, &node| {
            if node >= n {
                Err(Error::NodeOutOfRange { node, n })
            } else {
                Ok(acc + self.degree(node))
            }
        })
    }

    /// Component id per node, numbered in order of each component's smallest node.
    pub fn components(&self) -> (usize, Vec<usize>) {
        let n = self.n();
        let mut comp = vec![usize::MAX; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for root in 0..n {
            if comp[root] != usize::MAX {
                continue;
            }
            comp[root] = count;
            stack.push(root);
            while let Some(u) = stack.pop() {
                for &v in self.neighbors(u) {
                    if comp[v] == usize::MAX {
                        comp[v] = count;
                        stack.push(v);
                    }
                }
            }
            count += 1;
        }
        (count, comp)
    }

    pub fn is_connected(&self) -> bool {
        self.n() > 0 && self.components().0 == 1
    }

    /// Induced subgraph on the largest connected component.
    ///
    /// Returns the subgraph and, for each new node id, the id it had in `self`.
    /// Among equally large components the one containing the smallest node id wins.
    pub fn largest_connected_component(&self) -> (Graph, Vec<usize>) {
        let (count, comp) = self.components();
        if count <= 1 {
            return (self.clone(), (0..self.n()).collect());
        }
        let mut sizes = vec![0usize; count];
        for &c in &comp {
            sizes[c] += 1;
        }
        // Components are numbered by smallest member, so the first maximum wins ties.
        let best = sizes
            .iter()
            .enumerate()
            .fold(0, |best, (c, &s)| if s > sizes[best] { c } else { best });
        let kept: Vec<usize> = (0..self.n()).filter(|&i| comp[i] == best).collect();
        (self.induced_subgraph(&kept), kept)
    }

    /// Subgraph induced by `nodes` (given as ascending, distinct ids); node `nodes[k]` becomes `k`.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Graph {
        let mut new_id = vec![usize::MAX; self.n()];
        for (k, &old) in nodes.iter().enumerate() {
            new_id[old] = k;
        }
        let adjacency = nodes
            .iter()
            .map(|&old| {
                self.neighbors(old)
                    .iter()
                    .filter_map(|&v| (new_id[v] != usize::MAX).then_some(new_id[v]))
                    .collect()
            })
            .collect();
        Self::from_adjacency(adjacency)
    }

    /// One `u v` line per edge, `u < v`.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::with_capacity(self.m * 12);
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }
}

/// How integer tokens in an edge list map to node ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IdMapping {
    /// Ids are relabeled `0..n` in order of first appearance.
    #[default]
    FirstAppearance,
    /// Ids are used as-is; nodes that never appear stay isolated.
    ZeroIndexed,
    /// As [`IdMapping::ZeroIndexed`] after subtracting one.
    OneIndexed,
}

#[derive(Debug, Clone)]
pub struct ParseOptions {
    pub comment_prefix: String,
    pub ids: IdMapping,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            comment_prefix: "#".to_string(),
            ids: IdMapping::FirstAppearance,
        }
    }
}

/// A parsed graph together with the original id of every node.
#[derive(Debug, Clone)]
pub struct ParsedGraph {
    pub graph: Graph,
    pub node_ids: Vec<i64>,
}

impl ParsedGraph {
    /// Lookup from original id to node index.
    pub fn index_of(&self) -> HashMap<i64, usize> {
        self.node_ids
            .iter()
            .enumerate()
            .map(|(i, &id)| (id, i))
            .collect()
    }

    /// Restricts to the largest connected component, keeping original ids.
    pub fn largest_connected_component(&self) -> ParsedGraph {
        let (graph, kept) = self.graph.largest_connected_component();
        let node_ids = kept.iter().map(|&i| self.node_ids[i]).collect();
        ParsedGraph { graph, node_ids }
    }
}

/// Splits a non-comment line into exactly two integer tokens.
pub(crate) fn parse_pair(line: &str, lineno: usize) -> Result<(i64, i64)> {
    let mut tokens = line.split_whitespace();
    let mut next = |what: &str| -> Result<i64> {
        let tok = tokens.next().ok_or_else(|| Error::Parse {
            line: lineno,
            message: format!("missing {what} token"),
        })?;
        tok.parse::<i64>().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("expected integer, found {tok:?}"),
        })
    };
    let a = next("first")?;
    let b = next("second")?;
    if tokens.next().is_some() {
        return Err(Error::Parse {
            line: lineno,
            message: "expected exactly two tokens".into(),
        });
    }
    Ok((a, b))
}

pub(crate) fn is_skipped(line: &str, comment_prefix: &str) -> bool {
    let trimmed = line.trim();
    trimmed.is_empty() || (!comment_prefix.is_empty() && trimmed.starts_with(comment_prefix))
}

/// Parses whitespace-separated edge-list text into a simplified graph.
pub fn parse_edge_list(text: &str, options: &ParseOptions) -> Result<ParsedGraph> {
    let mut raw = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if is_skipped(line, &options.comment_prefix) {
            continue;
        }
        raw.push(parse_pair(line, idx + 1)?);
    }

    let (n, node_ids, edges) = match options.ids {
        IdMapping::FirstAppearance => {
            let mut index: HashMap<i64, usize> = HashMap::new();
            let mut node_ids = Vec::new();
            let mut intern = |id: i64| {
                *index.entry(id).or_insert_with(|| {
                    node_ids.push(id);
                    node_ids.len() - 1
                })
            };
            let edges: Vec<(usize, usize)> =
                raw.iter().map(|&(a, b)| (intern(a), intern(b))).collect();
            (node_ids.len(), node_ids, edges)
        }
        IdMapping::ZeroIndexed | IdMapping::OneIndexed => {
            let base = if options.ids == IdMapping::OneIndexed {
                1
            } else {
                0
            };
            let mut edges = Vec::with_capacity(raw.len());
            let mut n = 0usize;
            for (idx, &(a, b)) in raw.iter().enumerate() {
                let (a, b) = (a - base, b - base);
                if a < 0 || b < 0 {
                    return Err(Error::Parse {
                        line: idx + 1,
                        message: format!("node id below index base {base}"),
                    });
                }
                n = n.max(a as usize + 1).max(b as usize + 1);
                edges.push((a as usize, b as usize));
            }
            let node_ids = (0..n as i64).map(|i| i + base).collect();
            (n, node_ids, edges)
        }
    };

    let graph = Graph::from_edges(n, edges)?;
    if graph.m() == 0 {
        return Err(Error::EmptyGraph);
    }
    Ok(ParsedGraph { graph, node_ids })
}
