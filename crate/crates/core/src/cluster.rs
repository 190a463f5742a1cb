//! Agglomerative clustering of attribute vectors.
//!
//! Clusters are identified by their least leaf index. Each step merges the
//! closest pair; among pairs at the same distance the pair with the
//! lexicographically smallest `(least leaf, least leaf)` key wins. Distances
//! closer than a relative `1e-10` count as equal, so the merge order does not
//! depend on floating-point summation order.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decompose::AttributeVector;
use crate::format::fmt_g12;

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("nothing to cluster")]
    Empty,
    #[error("k = {k} outside 1..={n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("cut height must be a non-negative number, got {0}")]
    BadHeight(f64),
    #[error("merge heights decrease at step {step}: {prev} then {next}")]
    NonMonotone { step: usize, prev: f64, next: f64 },
    #[error("{labels} labels for {leaves} leaves")]
    LabelCount { labels: usize, leaves: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    Single,
    Complete,
    #[default]
    Average,
}

impl std::str::FromStr for Linkage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single" => Ok(Linkage::Single),
            "complete" => Ok(Linkage::Complete),
            "average" => Ok(Linkage::Average),
            other => Err(format!("unknown linkage `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClusterOptions {
    pub linkage: Linkage,
    /// Min-max scale each attribute to `[0, 1]` before measuring distance.
    pub normalize: bool,
}

pub const TIE_EPSILON: f64 = 1e-10;

/// Total order on distances with the relative tie tolerance.
pub fn cmp_distance(a: f64, b: f64) -> Ordering {
    let scale = a.abs().max(b.abs()).max(1.0);
    if (a - b).abs() <= TIE_EPSILON * scale {
        Ordering::Equal
    } else {
        a.total_cmp(&b)
    }
}

/// Euclidean distance over the raw sextuple.
pub fn distance(u: &AttributeVector, v: &AttributeVector) -> f64 {
    euclid(&as_point(u), &as_point(v))
}

fn as_point(v: &AttributeVector) -> [f64; 6] {
    v.to_array().map(|x| x as f64)
}

fn euclid(u: &[f64; 6], v: &[f64; 6]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Points used for distances: raw values, or min-max scaled per attribute
/// (constant attributes map to 0).
pub fn feature_points(vectors: &[AttributeVector], normalize: bool) -> Vec<[f64; 6]> {
    let mut pts: Vec<[f64; 6]> = vectors.iter().map(as_point).collect();
    if normalize && !pts.is_empty() {
        for d in 0..6 {
            let lo = pts.iter().map(|p| p[d]).fold(f64::INFINITY, f64::min);
            let hi = pts.iter().map(|p| p[d]).fold(f64::NEG_INFINITY, f64::max);
            let span = hi - lo;
            for p in &mut pts {
                p[d] = if span > 0.0 { (p[d] - lo) / span } else { 0.0 };
            }
        }
    }
    pts
}

/// One agglomeration step. Cluster ids follow the usual convention: leaves
/// are `0..n`, the cluster created by merge `i` is `n + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub n_leaves: usize,
    pub merges: Vec<Merge>,
}

/// Condensed symmetric matrix over `n` slots.
struct DistMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistMatrix {
    fn new(n: usize) -> Self {
        DistMatrix {
            n,
            data: vec![0.0; n * n.saturating_sub(1) / 2],
        }
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        i * (2 * self.n - i - 1) / 2 + (j - i - 1)
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    fn set(&mut self, i: usize, j: usize, d: f64) {
        let k = self.idx(i, j);
        self.data[k] = d;
    }
}

fn better(d: f64, key: (usize, usize), best_d: f64, best_key: (usize, usize)) -> bool {
    match cmp_distance(d, best_d) {
        Ordering::Less => true,
        Ordering::Equal => key < best_key,
        Ordering::Greater => false,
    }
}

fn pair_key(i: usize, j: usize) -> (usize, usize) {
    (i.min(j), i.max(j))
}

pub fn hcluster(vectors: &[AttributeVector], opts: &ClusterOptions) -> Result<Dendrogram, ClusterError> {
    hcluster_points(&feature_points(vectors, opts.normalize), opts.linkage)
}

/// Clusters arbitrary 6-d points. Slot `i` always holds the cluster whose
/// least leaf is `i`, so slot order is the tie-break order.
pub fn hcluster_points(points: &[[f64; 6]], linkage: Linkage) -> Result<Dendrogram, ClusterError> {
    let n = points.len();
    if n == 0 {
        return Err(ClusterError::Empty);
    }
    let mut dist = DistMatrix::new(n);
    for i in 0..n {
        for j in i + 1..n {
            dist.set(i, j, euclid(&points[i], &points[j]));
        }
    }

    let mut active = vec![true; n];
    let mut size = vec![1usize; n];
    let mut cluster_id: Vec<usize> = (0..n).collect();
    // nearest[i] = best partner of slot i among active slots
    let nearest_of = |i: usize, active: &[bool], dist: &DistMatrix| -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for j in (0..n).filter(|&j| j != i && active[j]) {
            let d = dist.get(i, j);
            if best.is_none_or(|(bj, bd)| better(d, pair_key(i, j), bd, pair_key(i, bj))) {
                best = Some((j, d));
            }
        }
        best
    };
    let mut nearest: Vec<Option<(usize, f64)>> = (0..n).map(|i| nearest_of(i, &active, &dist)).collect();

    let mut merges = Vec::with_capacity(n - 1);
    for step in 0..n - 1 {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in (0..n).filter(|&i| active[i]) {
            if let Some((j, d)) = nearest[i] {
                if best.is_none_or(|(bi, bj, bd)| better(d, pair_key(i, j), bd, pair_key(bi, bj))) {
                    best = Some((i, j, d));
                }
            }
        }
        let (i, j, height) = best.expect("at least two active clusters");
        let (keep, gone) = (i.min(j), i.max(j));

        let (a, b) = (cluster_id[keep], cluster_id[gone]);
        merges.push(Merge {
            a: a.min(b),
            b: a.max(b),
            height,
            size: size[keep] + size[gone],
        });

        for k in (0..n).filter(|&k| active[k] && k != keep && k != gone) {
            let (dk, dg) = (dist.get(keep, k), dist.get(gone, k));
            let d = match linkage {
                Linkage::Single => dk.min(dg),
                Linkage::Complete => dk.max(dg),
                Linkage::Average => {
                    (size[keep] as f64 * dk + size[gone] as f64 * dg) / (size[keep] + size[gone]) as f64
                }
            };
            dist.set(keep, k, d);
        }
        active[gone] = false;
        nearest[gone] = None;
        size[keep] += size[gone];
        cluster_id[keep] = n + step;

        nearest[keep] = nearest_of(keep, &active, &dist);
        for k in (0..n).filter(|&k| active[k] && k != keep) {
            match nearest[k] {
                // The merged cluster's key is smaller than either old one's,
                // so it stays (or becomes) nearest unless the distance grew.
                Some((m, md)) if m == keep || m == gone => {
                    let d = dist.get(k, keep);
                    nearest[k] = if cmp_distance(d, md) == Ordering::Greater {
                        nearest_of(k, &active, &dist)
                    } else {
                        Some((keep, d))
                    };
                }
                Some((m, md)) => {
                    let d = dist.get(k, keep);
                    if better(d, pair_key(k, keep), md, pair_key(k, m)) {
                        nearest[k] = Some((keep, d));
                    }
                }
                None => nearest[k] = nearest_of(k, &active, &dist),
            }
        }
    }

    let d = Dendrogram { n_leaves: n, merges };
    d.check_monotone()?;
    Ok(d)
}

impl Dendrogram {
    pub fn check_monotone(&self) -> Result<(), ClusterError> {
        for (step, w) in self.merges.windows(2).enumerate() {
            if cmp_distance(w[1].height, w[0].height) == Ordering::Less {
                return Err(ClusterError::NonMonotone {
                    step: step + 1,
                    prev: w[0].height,
                    next: w[1].height,
                });
            }
        }
        Ok(())
    }

    /// Applies the first `n_merges` merges; labels each leaf with the least
    /// leaf of its cluster.
    fn assignment_after(&self, n_merges: usize) -> Vec<usize> {
        let n = self.n_leaves;
        let mut min_leaf: Vec<usize> = (0..n).collect();
        min_leaf.reserve(self.merges.len());
        let mut parent: Vec<usize> = (0..n + self.merges.len()).collect();
        for (step, m) in self.merges.iter().enumerate() {
            min_leaf.push(min_leaf[m.a].min(min_leaf[m.b]));
            if step < n_merges {
                parent[m.a] = n + step;
                parent[m.b] = n + step;
            }
        }
        (0..n)
            .map(|leaf| {
                let mut c = leaf;
                while parent[c] != c {
                    c = parent[c];
                }
                min_leaf[c]
            })
            .collect()
    }

    /// `k` clusters: undo the last `k - 1` merges.
    pub fn cut_k(&self, k: usize) -> Result<Vec<usize>, ClusterError> {
        let n = self.n_leaves;
        if k == 0 || k > n {
            return Err(ClusterError::KOutOfRange { k, n });
        }
        Ok(self.assignment_after(n - k))
    }

    /// Applies every merge at or below `height`.
    pub fn cut_height(&self, height: f64) -> Result<Vec<usize>, ClusterError> {
        if height.is_nan() || height < 0.0 {
            return Err(ClusterError::BadHeight(height));
        }
        let applied = self
            .merges
            .iter()
            .take_while(|m| cmp_distance(m.height, height) != Ordering::Greater)
            .count();
        Ok(self.assignment_after(applied))
    }

    /// Newick string with branch lengths measured as height differences.
    pub fn to_newick(&self, labels: &[String]) -> Result<String, ClusterError> {
        let n = self.n_leaves;
        if labels.len() != n {
            return Err(ClusterError::LabelCount {
                labels: labels.len(),
                leaves: n,
            });
        }
        let height_of = |c: usize| if c < n { 0.0 } else { self.merges[c - n].height };
        let mut text: Vec<String> = labels.iter().map(|l| newick_label(l)).collect();
        for m in &self.merges {
            let mut s = String::new();
            write!(
                s,
                "({}:{},{}:{})",
                text[m.a],
                fmt_g12(m.height - height_of(m.a)),
                text[m.b],
                fmt_g12(m.height - height_of(m.b)),
            )
            .unwrap();
            text.push(s);
        }
        let mut out = text.pop().expect("at least one leaf");
        out.push(';');
        Ok(out)
    }
}

fn newick_label(s: &str) -> String {
    if s.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '.' || c == '-') && !s.is_empty() {
        s.to_string()
    } else {
        format!("'{}'", s.replace('\'', "''"))
    }
}
