//! Per-year directed association graph over author nuclei.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::rules::Rule;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(String, String),
    #[error("predicate needs two distinct nodes, got `{0}` twice")]
    SameNode(String),
    #[error("edge list line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Immutable directed graph. Node indices follow the sorted order of the
/// author names.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AssocGraph {
    year: i32,
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    out_adj: Vec<BTreeSet<usize>>,
    in_adj: Vec<BTreeSet<usize>>,
    n_edges: usize,
}

impl AssocGraph {
    /// One node per author appearing in a rule, one edge per rule.
    pub fn from_rules(rules: &[Rule], year: i32) -> Result<Self, GraphError> {
        let edges = rules.iter().map(|r| (r.antecedent.as_str(), r.consequent.as_str()));
        Self::build(year, std::iter::empty::<&str>(), edges, false)
    }

    /// Builds a graph from explicit nodes and edges. Edge endpoints are added
    /// as nodes; `nodes` may also list isolated nodes. Duplicate edges are
    /// rejected.
    pub fn from_parts<'a, N, E>(year: i32, nodes: N, edges: E) -> Result<Self, GraphError>
    where
        N: IntoIterator<Item = &'a str>,
        E: IntoIterator<Item = (&'a str, &'a str)>,
    {
        Self::build(year, nodes, edges, false)
    }

    /// Like [`AssocGraph::from_parts`] but with owned names. Repeated edges
    /// collapse into one.
    pub fn from_edge_pairs(year: i32, nodes: &[String], edges: &[(String, String)]) -> Result<Self, GraphError> {
        Self::build(
            year,
            nodes.iter().map(String::as_str),
            edges.iter().map(|(a, b)| (a.as_str(), b.as_str())),
            true,
        )
    }

    fn build<'a, N, E>(year: i32, nodes: N, edges: E, dedupe: bool) -> Result<Self, GraphError>
    where
        N: IntoIterator<Item = &'a str>,
        E: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let edges: Vec<(&str, &str)> = edges.into_iter().collect();
        let mut names: BTreeSet<&str> = nodes.into_iter().collect();
        for &(a, b) in &edges {
            if a == b {
                return Err(GraphError::SelfLoop(a.to_string()));
            }
            names.insert(a);
            names.insert(b);
        }
        let nodes: Vec<String> = names.into_iter().map(str::to_owned).collect();
        let index: HashMap<String, usize> = nodes.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        let mut out_adj = vec![BTreeSet::new(); nodes.len()];
        let mut in_adj = vec![BTreeSet::new(); nodes.len()];
        let mut n_edges = 0;
        for (a, b) in edges {
            let (i, j) = (index[a], index[b]);
            if !out_adj[i].insert(j) {
                if dedupe {
                    continue;
                }
                return Err(GraphError::DuplicateEdge(a.to_string(), b.to_string()));
            }
            in_adj[j].insert(i);
            n_edges += 1;
        }
        Ok(AssocGraph {
            year,
            nodes,
            index,
            out_adj,
            in_adj,
            n_edges,
        })
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    /// Sorted node names.
    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.n_edges
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, a: &str) -> bool {
        self.index.contains_key(a)
    }

    pub fn node_index(&self, a: &str) -> Result<usize, GraphError> {
        self.index
            .get(a)
            .copied()
            .ok_or_else(|| GraphError::UnknownNode(a.to_string()))
    }

    pub fn name(&self, i: usize) -> &str {
        &self.nodes[i]
    }

    /// Edges as `(from, to)` pairs in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        self.edge_indices().map(|(i, j)| (self.name(i), self.name(j)))
    }

    pub fn edge_indices(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out_adj
            .iter()
            .enumerate()
            .flat_map(|(i, outs)| outs.iter().map(move |&j| (i, j)))
    }

    pub fn successors(&self, i: usize) -> &BTreeSet<usize> {
        &self.out_adj[i]
    }

    pub fn predecessors(&self, i: usize) -> &BTreeSet<usize> {
        &self.in_adj[i]
    }

    pub fn has_edge_idx(&self, i: usize, j: usize) -> bool {
        self.out_adj[i].contains(&j)
    }

    pub fn has_edge(&self, a: &str, b: &str) -> bool {
        match (self.index.get(a), self.index.get(b)) {
            (Some(&i), Some(&j)) => self.has_edge_idx(i, j),
            _ => false,
        }
    }

    /// Union of successors and predecessors.
    pub fn neighbors(&self, i: usize) -> BTreeSet<usize> {
        self.out_adj[i].union(&self.in_adj[i]).copied().collect()
    }

    pub fn sbond_idx(&self, i: usize, j: usize) -> bool {
        self.has_edge_idx(i, j) != self.has_edge_idx(j, i)
    }

    pub fn dbond_idx(&self, i: usize, j: usize) -> bool {
        self.has_edge_idx(i, j) && self.has_edge_idx(j, i)
    }

    /// Has at least one incoming edge.
    pub fn reactorp(&self, a: &str) -> Result<bool, GraphError> {
        Ok(!self.in_adj[self.node_index(a)?].is_empty())
    }

    /// Has at least one outgoing edge.
    pub fn triggerp(&self, a: &str) -> Result<bool, GraphError> {
        Ok(!self.out_adj[self.node_index(a)?].is_empty())
    }

    /// Exactly one of `a -> b`, `b -> a` holds.
    pub fn sbond(&self, a: &str, b: &str) -> Result<bool, GraphError> {
        let (i, j) = self.distinct_pair(a, b)?;
        Ok(self.sbond_idx(i, j))
    }

    /// Both `a -> b` and `b -> a` hold.
    pub fn dbond(&self, a: &str, b: &str) -> Result<bool, GraphError> {
        let (i, j) = self.distinct_pair(a, b)?;
        Ok(self.dbond_idx(i, j))
    }

    /// No incoming and no outgoing edge.
    pub fn emptyp(&self, a: &str) -> Result<bool, GraphError> {
        let i = self.node_index(a)?;
        Ok(self.in_adj[i].is_empty() && self.out_adj[i].is_empty())
    }

    fn distinct_pair(&self, a: &str, b: &str) -> Result<(usize, usize), GraphError> {
        if a == b {
            return Err(GraphError::SameNode(a.to_string()));
        }
        Ok((self.node_index(a)?, self.node_index(b)?))
    }

    /// Subgraph on `members` (indices into this graph) with all edges
    /// between them.
    pub fn induced(&self, members: &[usize]) -> AssocGraph {
        let names: Vec<&str> = members.iter().map(|&i| self.name(i)).collect();
        let set: BTreeSet<usize> = members.iter().copied().collect();
        let edges: Vec<(&str, &str)> = members
            .iter()
            .flat_map(|&i| {
                self.out_adj[i]
                    .iter()
                    .filter(|j| set.contains(j))
                    .map(move |&j| (self.name(i), self.name(j)))
            })
            .collect();
        AssocGraph::build(self.year, names, edges, false).expect("subgraph of a valid graph")
    }
}

/// Parses the edge-list text format: one `from -> to` per line, a bare name
/// declares an isolated node, `#` starts a comment. Repeated edges collapse.
pub fn parse_edge_list(text: &str, year: i32) -> Result<AssocGraph, GraphError> {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |reason: &str| GraphError::Parse {
            line: idx + 1,
            reason: reason.to_string(),
        };
        match line.split_once("->") {
            Some((a, b)) => {
                let (a, b) = (a.trim(), b.trim());
                if a.is_empty() || b.is_empty() || b.contains("->") {
                    return Err(err("expected `from -> to`"));
                }
                if a == b {
                    return Err(err("self-loop"));
                }
                edges.push((a.to_string(), b.to_string()));
            }
            None => nodes.push(line.to_string()),
        }
    }
    AssocGraph::from_edge_pairs(year, &nodes, &edges)
}

/// Serialises a graph in the edge-list format (isolated nodes as bare
/// lines).
pub fn to_edge_list(g: &AssocGraph) -> String {
    let mut s = String::new();
    for i in 0..g.node_count() {
        if g.successors(i).is_empty() && g.predecessors(i).is_empty() {
            s.push_str(g.name(i));
            s.push('\n');
        }
    }
    for (a, b) in g.edges() {
        s.push_str(&format!("{a} -> {b}\n"));
    }
    s
}
