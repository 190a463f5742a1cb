//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use molecula::cluster::{cmp_distance, Linkage};
use molecula::decompose::Community;
use molecula::graph::{parse_edge_list, AssocGraph};
use molecula::rules::{Fraction, Thresholds};
use molecula::temporal::Lifecycle;
use rand::Rng;

/// Hand-built graphs with published attribute vectors.
pub const GOLDEN_ROWS: &[(&str, &str, [u64; 6])] = &[
    (
        "in-star",
        "L1 -> C\nL2 -> C\nL3 -> C\nL4 -> C\nL5 -> C\nL6 -> C\nL7 -> C\n",
        [7, 0, 0, 8, 1, 7],
    ),
    (
        "out-star",
        "C -> L1\nC -> L2\nC -> L3\nC -> L4\nC -> L5\nC -> L6\nC -> L7\n",
        [7, 0, 0, 8, 7, 1],
    ),
    ("diamond", "X -> Y\nY -> X\nY -> Z\nZ -> Y\nX -> Z\nZ -> X\n", [0, 3, 1, 3, 3, 3]),
    (
        "diamond-with-star",
        "X -> Y\nY -> X\nY -> Z\nZ -> Y\nX -> Z\nZ -> X\nX -> a\nX -> b\nX -> c\nX -> d\ne -> X\n",
        [5, 3, 1, 8, 7, 4],
    ),
    (
        "bridge-with-stars",
        "P -> Q\nQ -> P\nL1 -> P\nL2 -> P\nL3 -> P\nL4 -> P\nL5 -> Q\nP -> L5\nQ -> L6\n",
        [7, 1, 0, 8, 4, 7],
    ),
    (
        "four-diamonds",
        "A -> B\nB -> A\nA -> C\nC -> A\nA -> D\nD -> A\nB -> C\nC -> B\nB -> D\nD -> B\nC -> D\nD -> C\n",
        [0, 6, 4, 4, 4, 4],
    ),
];

pub fn golden_graph(edges: &str) -> AssocGraph {
    parse_edge_list(edges, 0).expect("golden edge list parses")
}

pub fn node_name(i: usize) -> String {
    format!("n{i:02}")
}

/// Directed graph on `n` nodes where each ordered pair is an edge with
/// probability `density`.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, density: f64) -> AssocGraph {
    let nodes: Vec<String> = (0..n).map(node_name).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.gen_bool(density) {
                edges.push((nodes[i].clone(), nodes[j].clone()));
            }
        }
    }
    AssocGraph::from_edge_pairs(0, &nodes, &edges).expect("valid random graph")
}

pub fn graph_from_adjacency(n: usize, adj: &[bool]) -> AssocGraph {
    let nodes: Vec<String> = (0..n).map(node_name).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && adj[i * n + j] {
                edges.push((nodes[i].clone(), nodes[j].clone()));
            }
        }
    }
    AssocGraph::from_edge_pairs(0, &nodes, &edges).expect("valid graph")
}

/// Triangles of double bonds, counted over every member triple.
pub fn brute_diamonds(c: &Community) -> u64 {
    let g = c.graph();
    let m = c.members();
    let bond = |a: &str, b: &str| g.has_edge(a, b) && g.has_edge(b, a);
    let mut count = 0;
    for i in 0..m.len() {
        for j in i + 1..m.len() {
            for k in j + 1..m.len() {
                if bond(&m[i], &m[j]) && bond(&m[j], &m[k]) && bond(&m[i], &m[k]) {
                    count += 1;
                }
            }
        }
    }
    count
}

/// Attribute vector from first principles: every unordered member pair is
/// inspected directly.
pub fn brute_vector(c: &Community) -> [u64; 6] {
    let g = c.graph();
    let m = c.members();
    let (mut sb, mut br) = (0, 0);
    for i in 0..m.len() {
        for j in i + 1..m.len() {
            match (g.has_edge(&m[i], &m[j]), g.has_edge(&m[j], &m[i])) {
                (true, true) => br += 1,
                (true, false) | (false, true) => sb += 1,
                _ => {}
            }
        }
    }
    let re = m.iter().filter(|a| m.iter().any(|b| g.has_edge(b, a))).count() as u64;
    let tr = m.iter().filter(|a| m.iter().any(|b| g.has_edge(a, b))).count() as u64;
    [sb, br, brute_diamonds(c), m.len() as u64, re, tr]
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRule {
    pub antecedent: String,
    pub consequent: String,
    pub support: f64,
    pub confidence: f64,
    pub lift: f64,
}

/// Ordered-pair enumeration with exact integer threshold tests.
pub fn brute_mine(transactions: &[Vec<String>], t: &Thresholds) -> Vec<OracleRule> {
    let sets: Vec<BTreeSet<&str>> = transactions
        .iter()
        .map(|tx| tx.iter().map(String::as_str).collect())
        .collect();
    let authors: BTreeSet<&str> = sets.iter().flatten().copied().collect();
    let n = sets.len() as u128;
    let count = |a: &str| sets.iter().filter(|s| s.contains(a)).count() as u128;
    let (sn, sd) = (t.min_support.numer(), t.min_support.denom());
    let (cn, cd) = (t.min_confidence.numer(), t.min_confidence.denom());
    let (ln, ld) = (t.min_lift.numer(), t.min_lift.denom());
    let mut out = Vec::new();
    for &a in &authors {
        for &b in &authors {
            if a == b {
                continue;
            }
            let pair = sets.iter().filter(|s| s.contains(a) && s.contains(b)).count() as u128;
            let (ca, cb) = (count(a), count(b));
            if pair == 0 {
                continue;
            }
            let support_ok = pair * sd >= sn * n;
            let confidence_ok = pair * cd >= cn * ca;
            let lift_ok = pair * n * ld > ln * ca * cb;
            if support_ok && confidence_ok && lift_ok {
                out.push(OracleRule {
                    antecedent: a.to_string(),
                    consequent: b.to_string(),
                    support: pair as f64 / n as f64,
                    confidence: pair as f64 / ca as f64,
                    lift: (pair * n) as f64 / (ca * cb) as f64,
                });
            }
        }
    }
    out
}

pub fn random_corpus<R: Rng>(rng: &mut R, max_tx: usize, max_authors: usize) -> Vec<Vec<String>> {
    let n_tx = rng.gen_range(1..=max_tx);
    let pool = rng.gen_range(1..=max_authors);
    (0..n_tx)
        .map(|_| {
            let size = rng.gen_range(1..=pool.min(4));
            let mut tx: Vec<String> = Vec::new();
            while tx.len() < size {
                let a = format!("a{}", rng.gen_range(0..pool));
                if !tx.contains(&a) {
                    tx.push(a);
                }
            }
            tx
        })
        .collect()
}

/// Threshold grid covering the defaults, zeros, ones and awkward decimals.
pub fn threshold_grid() -> Vec<Thresholds> {
    let f = |s: &str| s.parse::<Fraction>().expect("grid value parses");
    [
        ("0.001", "0.05", "1"),
        ("0", "0", "0"),
        ("0", "0", "1"),
        ("0.1", "0.5", "1"),
        ("0.25", "0.25", "1.5"),
        ("0.05", "1", "1"),
        ("0.5", "0.5", "0.5"),
        ("0.2", "0.4", "2"),
        ("0", "0.75", "1.25"),
        ("0.15", "0.3", "1.1"),
        ("0.3333", "0.6667", "1"),
        ("1", "1", "1"),
    ]
    .iter()
    .map(|(s, c, l)| Thresholds {
        min_support: f(s),
        min_confidence: f(c),
        min_lift: f(l),
    })
    .collect()
}

/// Naive agglomeration: recomputes every cluster-pair distance from leaf
/// distances at every step. Returns `(a, b, height)` per merge using the
/// leaves-then-merges id convention.
pub fn reference_hac(points: &[[f64; 6]], linkage: Linkage) -> Vec<(usize, usize, f64)> {
    let n = points.len();
    let d = |i: usize, j: usize| -> f64 {
        points[i]
            .iter()
            .zip(&points[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    };
    // (cluster id, leaves)
    let mut clusters: Vec<(usize, Vec<usize>)> = (0..n).map(|i| (i, vec![i])).collect();
    let mut merges = Vec::new();
    for step in 0..n.saturating_sub(1) {
        let mut best: Option<(usize, usize, f64, (usize, usize))> = None;
        for x in 0..clusters.len() {
            for y in x + 1..clusters.len() {
                let pairs: Vec<f64> = clusters[x]
                    .1
                    .iter()
                    .flat_map(|&i| clusters[y].1.iter().map(move |&j| (i, j)))
                    .map(|(i, j)| d(i, j))
                    .collect();
                let h = match linkage {
                    Linkage::Single => pairs.iter().copied().fold(f64::INFINITY, f64::min),
                    Linkage::Complete => pairs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    Linkage::Average => pairs.iter().sum::<f64>() / pairs.len() as f64,
                };
                let (mx, my) = (clusters[x].1[0], clusters[y].1[0]);
                let key = (mx.min(my), mx.max(my));
                let better = match &best {
                    None => true,
                    Some((_, _, bh, bk)) => match cmp_distance(h, *bh) {
                        Ordering::Less => true,
                        Ordering::Equal => key < *bk,
                        Ordering::Greater => false,
                    },
                };
                if better {
                    best = Some((x, y, h, key));
                }
            }
        }
        let (x, y, h, _) = best.expect("two clusters remain");
        let (ix, iy) = (clusters[x].0, clusters[y].0);
        merges.push((ix.min(iy), ix.max(iy), h));
        let mut leaves = clusters[x].1.clone();
        leaves.extend(&clusters[y].1);
        leaves.sort_unstable();
        clusters.remove(y);
        clusters[x] = (n + step, leaves);
    }
    merges
}

/// Partition as a set of leaf sets, independent of cluster numbering.
pub fn partition(labels: &[usize]) -> BTreeSet<BTreeSet<usize>> {
    let mut groups: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for (leaf, &c) in labels.iter().enumerate() {
        groups.entry(c).or_default().insert(leaf);
    }
    groups.into_values().collect()
}

pub fn brute_lifecycle(present: &BTreeSet<i32>, range: (i32, i32)) -> Lifecycle {
    let years: Vec<bool> = (range.0..=range.1).map(|y| present.contains(&y)).collect();
    if years.iter().all(|p| *p) {
        return Lifecycle::Constant;
    }
    let mut runs = 0;
    let mut prev = false;
    for &p in &years {
        if p && !prev {
            runs += 1;
        }
        prev = p;
    }
    if runs >= 2 {
        Lifecycle::Visiting
    } else {
        Lifecycle::Transient
    }
}

/// Reads back the subset of DOT produced by the exporter: quoted node
/// statements and quoted edges, optionally `[dir=both]`.
pub fn parse_dot(text: &str) -> (Vec<String>, Vec<(String, String)>) {
    fn quoted(s: &str) -> Option<(String, &str)> {
        let s = s.trim_start();
        let mut chars = s.strip_prefix('"')?.char_indices();
        let mut out = String::new();
        while let Some((i, c)) = chars.next() {
            match c {
                '\\' => match chars.next()?.1 {
                    'n' => out.push('\n'),
                    other => out.push(other),
                },
                '"' => return Some((out, &s[i + 2..])),
                _ => out.push(c),
            }
        }
        None
    }
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut lines = text.lines();
    assert!(lines.next().is_some_and(|l| l.starts_with("digraph ")));
    for line in lines {
        if line == "}" {
            break;
        }
        let (a, rest) = quoted(line).expect("quoted id");
        let rest = rest.trim_start();
        if let Some(rest) = rest.strip_prefix("->") {
            let (b, rest) = quoted(rest).expect("quoted target");
            if rest.trim_start().starts_with("[dir=both]") {
                edges.push((b.clone(), a.clone()));
            }
            edges.push((a, b));
        } else {
            assert_eq!(rest, ";");
            nodes.push(a);
        }
    }
    edges.sort();
    (nodes, edges)
}
