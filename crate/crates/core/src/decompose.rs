//! Molecular decomposition: stars, bridges and diamonds around a nucleus,
//! communities as weakly connected molecules, roles, motif classes and the
//! `(SB, BR, DI, NU, RE, TR)` attribute vector.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{AssocGraph, GraphError};

#[derive(Debug, Error, PartialEq)]
pub enum DecomposeError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("a community needs at least two members, got {0}")]
    TooSmall(usize),
    #[error("community members are not weakly connected")]
    Disconnected,
}

/// Nuclei joined to `a` by a single bond.
pub fn compute_star(g: &AssocGraph, a: &str) -> Result<BTreeSet<String>, GraphError> {
    let i = g.node_index(a)?;
    Ok(g.neighbors(i)
        .into_iter()
        .filter(|&j| g.sbond_idx(i, j))
        .map(|j| g.name(j).to_string())
        .collect())
}

/// Nuclei joined to `a` by a double bond.
pub fn compute_bridge(g: &AssocGraph, a: &str) -> Result<BTreeSet<String>, GraphError> {
    let i = g.node_index(a)?;
    Ok(bridge_indices(g, i).map(|j| g.name(j).to_string()).collect())
}

fn bridge_indices(g: &AssocGraph, i: usize) -> impl Iterator<Item = usize> + '_ {
    g.successors(i)
        .iter()
        .copied()
        .filter(move |&j| g.has_edge_idx(j, i))
}

/// Unordered pairs `{b, c}` (reported as `b < c`) closing a triangle of
/// double bonds with `a`.
pub fn compute_diamond(g: &AssocGraph, a: &str) -> Result<BTreeSet<(String, String)>, GraphError> {
    let i = g.node_index(a)?;
    let bridges: Vec<usize> = bridge_indices(g, i).collect();
    let mut out = BTreeSet::new();
    for (k, &b) in bridges.iter().enumerate() {
        for &c in &bridges[k + 1..] {
            if g.dbond_idx(b, c) {
                out.insert((g.name(b).to_string(), g.name(c).to_string()));
            }
        }
    }
    Ok(out)
}

/// A weakly connected molecule of at least two nuclei, with its induced
/// edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Community {
    id: usize,
    graph: AssocGraph,
}

impl Community {
    /// Wraps a graph as a community, checking size and weak connectivity.
    pub fn new(id: usize, graph: AssocGraph) -> Result<Self, DecomposeError> {
        if graph.node_count() < 2 {
            return Err(DecomposeError::TooSmall(graph.node_count()));
        }
        if weak_components(&graph).len() != 1 {
            return Err(DecomposeError::Disconnected);
        }
        Ok(Community { id, graph })
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn year(&self) -> i32 {
        self.graph.year()
    }

    /// Sorted member names.
    pub fn members(&self) -> &[String] {
        self.graph.nodes()
    }

    pub fn graph(&self) -> &AssocGraph {
        &self.graph
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        self.graph.edges()
    }
}

fn weak_components(g: &AssocGraph) -> Vec<Vec<usize>> {
    let n = g.node_count();
    let mut seen = vec![false; n];
    let mut comps = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for v in g.successors(u).iter().chain(g.predecessors(u)) {
                if !seen[*v] {
                    seen[*v] = true;
                    comp.push(*v);
                    queue.push_back(*v);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps
}

/// Weakly connected components with two or more members, ordered by their
/// least member and numbered from 0.
pub fn communities(g: &AssocGraph) -> Vec<Community> {
    // components come out ordered by their least index = least name
    weak_components(g)
        .into_iter()
        .filter(|c| c.len() >= 2)
        .enumerate()
        .map(|(id, members)| Community {
            id,
            graph: g.induced(&members),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct AttributeVector {
    #[serde(rename = "SB")]
    pub sb: u64,
    #[serde(rename = "BR")]
    pub br: u64,
    #[serde(rename = "DI")]
    pub di: u64,
    #[serde(rename = "NU")]
    pub nu: u64,
    #[serde(rename = "RE")]
    pub re: u64,
    #[serde(rename = "TR")]
    pub tr: u64,
}

impl AttributeVector {
    pub const fn new(sb: u64, br: u64, di: u64, nu: u64, re: u64, tr: u64) -> Self {
        AttributeVector { sb, br, di, nu, re, tr }
    }

    pub fn to_array(self) -> [u64; 6] {
        [self.sb, self.br, self.di, self.nu, self.re, self.tr]
    }
}

impl fmt::Display for AttributeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d, e, g] = self.to_array();
        write!(f, "({a},{b},{c},{d},{e},{g})")
    }
}

impl From<(u64, u64, u64, u64, u64, u64)> for AttributeVector {
    fn from(t: (u64, u64, u64, u64, u64, u64)) -> Self {
        AttributeVector::new(t.0, t.1, t.2, t.3, t.4, t.5)
    }
}

/// Number of triangles in the undirected graph whose edges are the double
/// bonds, each node triple counted once.
pub fn bridge_triangle_count(g: &AssocGraph) -> u64 {
    let n = g.node_count();
    let bridges: Vec<BTreeSet<usize>> = (0..n).map(|i| bridge_indices(g, i).collect()).collect();
    let mut count = 0;
    for u in 0..n {
        for &v in bridges[u].range(u + 1..) {
            count += bridges[v].range(v + 1..).filter(|w| bridges[u].contains(w)).count() as u64;
        }
    }
    count
}

pub fn attribute_vector(c: &Community) -> AttributeVector {
    graph_attribute_vector(&c.graph)
}

/// Attribute vector of a whole graph; for a community this is the same as
/// [`attribute_vector`].
pub fn graph_attribute_vector(g: &AssocGraph) -> AttributeVector {
    let mut v = AttributeVector {
        nu: g.node_count() as u64,
        di: bridge_triangle_count(g),
        ..Default::default()
    };
    for (i, j) in g.edge_indices() {
        if !g.has_edge_idx(j, i) {
            v.sb += 1;
        } else if i < j {
            v.br += 1;
        }
    }
    for i in 0..g.node_count() {
        v.re += u64::from(!g.predecessors(i).is_empty());
        v.tr += u64::from(!g.successors(i).is_empty());
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    TriggerOnly,
    ReactorOnly,
    Both,
}

impl Role {
    /// `None` for a nucleus with no bonds.
    pub fn from_flags(trigger: bool, reactor: bool) -> Option<Role> {
        match (trigger, reactor) {
            (true, true) => Some(Role::Both),
            (true, false) => Some(Role::TriggerOnly),
            (false, true) => Some(Role::ReactorOnly),
            (false, false) => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Role::TriggerOnly => "trigger-only",
            Role::ReactorOnly => "reactor-only",
            Role::Both => "both",
        }
    }
}

pub fn roles(c: &Community) -> BTreeMap<String, Role> {
    let g = &c.graph;
    (0..g.node_count())
        .map(|i| {
            let role = Role::from_flags(!g.successors(i).is_empty(), !g.predecessors(i).is_empty())
                .expect("community members always carry a bond");
            (g.name(i).to_string(), role)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MotifClass {
    Pair,
    BridgePair,
    StarIn,
    StarOut,
    StarMixed,
    Arrow,
    Triangle,
    Diamond,
    Complex,
}

impl MotifClass {
    pub const ALL: [MotifClass; 9] = [
        MotifClass::Pair,
        MotifClass::BridgePair,
        MotifClass::StarIn,
        MotifClass::StarOut,
        MotifClass::StarMixed,
        MotifClass::Arrow,
        MotifClass::Triangle,
        MotifClass::Diamond,
        MotifClass::Complex,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MotifClass::Pair => "pair",
            MotifClass::BridgePair => "bridge-pair",
            MotifClass::StarIn => "star-in",
            MotifClass::StarOut => "star-out",
            MotifClass::StarMixed => "star-mixed",
            MotifClass::Arrow => "arrow",
            MotifClass::Triangle => "triangle",
            MotifClass::Diamond => "diamond",
            MotifClass::Complex => "complex",
        }
    }

    /// Isolated author pairs, the molecular noise.
    pub fn is_noise(self) -> bool {
        matches!(self, MotifClass::Pair | MotifClass::BridgePair)
    }
}

impl fmt::Display for MotifClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MotifClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MotifClass::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown motif class `{s}`"))
    }
}

/// First matching class in the order pair, bridge-pair, diamond, triangle,
/// arrow, star-in/out/mixed, complex.
pub fn classify_motif(c: &Community) -> MotifClass {
    let g = &c.graph;
    let n = g.node_count();
    let v = graph_attribute_vector(g);
    let out_deg = |i: usize| g.successors(i).len();
    let in_deg = |i: usize| g.predecessors(i).len();

    if n == 2 {
        return if v.br == 1 { MotifClass::BridgePair } else { MotifClass::Pair };
    }
    if n == 3 {
        if v.br == 3 && v.sb == 0 {
            return MotifClass::Diamond;
        }
        if v.br == 0 && v.sb == 3 && (0..3).all(|i| out_deg(i) == 1 && in_deg(i) == 1) {
            return MotifClass::Triangle;
        }
        if v.br == 0 && v.sb == 2 && (0..3).any(|i| out_deg(i) == 1 && in_deg(i) == 1) {
            return MotifClass::Arrow;
        }
    }
    // star: all bonds single, one centre bonded to everyone, no leaf-leaf bond
    if v.br == 0 && v.sb == (n - 1) as u64 {
        if let Some(center) = (0..n).find(|&i| g.neighbors(i).len() == n - 1) {
            return if in_deg(center) == n - 1 {
                MotifClass::StarIn
            } else if out_deg(center) == n - 1 {
                MotifClass::StarOut
            } else {
                MotifClass::StarMixed
            };
        }
    }
    MotifClass::Complex
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Arity {
    #[serde(rename = "2-ary")]
    Binary,
    #[serde(rename = "n-ary")]
    NAry,
}

impl Arity {
    pub fn as_str(self) -> &'static str {
        match self {
            Arity::Binary => "2-ary",
            Arity::NAry => "n-ary",
        }
    }
}

impl fmt::Display for Arity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// 2-ary when no two neighbours of `center` share a bond.
pub fn star_arity(c: &Community, center: &str) -> Result<Arity, GraphError> {
    let g = &c.graph;
    let i = g.node_index(center)?;
    let nbrs: Vec<usize> = g.neighbors(i).into_iter().collect();
    for (k, &a) in nbrs.iter().enumerate() {
        if nbrs[k + 1..].iter().any(|&b| g.has_edge_idx(a, b) || g.has_edge_idx(b, a)) {
            return Ok(Arity::NAry);
        }
    }
    Ok(Arity::Binary)
}

/// Member with the most bonded neighbours, ties to the least name.
pub fn hub(c: &Community) -> &str {
    let g = &c.graph;
    let best = (0..g.node_count())
        .max_by(|&a, &b| g.neighbors(a).len().cmp(&g.neighbors(b).len()).then(b.cmp(&a)))
        .expect("community is non-empty");
    g.name(best)
}

/// Star arity taken at the community hub.
pub fn community_arity(c: &Community) -> Arity {
    star_arity(c, hub(c)).expect("hub is a member")
}

/// Everything the decomposition reports for one community.
#[derive(Debug, Clone, PartialEq)]
pub struct CommunityReport {
    pub community: Community,
    pub vector: AttributeVector,
    pub motif: MotifClass,
    pub arity: Arity,
    pub roles: BTreeMap<String, Role>,
}

impl CommunityReport {
    pub fn new(community: Community) -> Self {
        CommunityReport {
            vector: attribute_vector(&community),
            motif: classify_motif(&community),
            arity: community_arity(&community),
            roles: roles(&community),
            community,
        }
    }
}

pub fn decompose(g: &AssocGraph) -> Vec<CommunityReport> {
    communities(g).into_iter().map(CommunityReport::new).collect()
}

/// Serialised form of a community report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityRecord {
    pub id: usize,
    pub members: Vec<String>,
    pub edges: Vec<(String, String)>,
    pub vector: AttributeVector,
    pub motif: MotifClass,
    pub arity: Arity,
    pub roles: BTreeMap<String, Role>,
}

impl From<&CommunityReport> for CommunityRecord {
    fn from(r: &CommunityReport) -> Self {
        CommunityRecord {
            id: r.community.id,
            members: r.community.members().to_vec(),
            edges: r
                .community
                .edges()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect(),
            vector: r.vector,
            motif: r.motif,
            arity: r.arity,
            roles: r.roles.clone(),
        }
    }
}

impl CommunityRecord {
    /// Rebuilds the community from members and edges; derived fields are
    /// recomputed rather than trusted.
    pub fn to_community(&self, year: i32) -> Result<Community, DecomposeError> {
        let g = AssocGraph::from_edge_pairs(year, &self.members, &self.edges)?;
        Community::new(self.id, g)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearCommunities {
    pub year: i32,
    pub communities: Vec<CommunityRecord>,
}
