//! Pattern identity across yearly snapshots, lifecycle classes and the
//! molecular-noise share.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decompose::{attribute_vector, classify_motif, AttributeVector, Community, MotifClass};

#[derive(Debug, Error, PartialEq)]
pub enum TemporalError {
    #[error("no snapshots")]
    NoSnapshots,
    #[error("jaccard threshold must lie in [0, 1], got {0}")]
    BadJaccard(f64),
    #[error("years {years:?} fall outside {start}..={end}")]
    OutOfRange { years: Vec<i32>, start: i32, end: i32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum IdentityMode {
    /// Same motif class and attribute vector.
    #[default]
    Structural,
    /// Same members, or Jaccard similarity of at least `tau` between
    /// communities of adjacent years.
    Membership { tau: f64 },
}

pub const DEFAULT_JACCARD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Signature {
    Structural { motif: MotifClass, vector: AttributeVector },
    Membership { members: Vec<String> },
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Signature::Structural { motif, vector } => write!(f, "{motif} {vector}"),
            Signature::Membership { members } => write!(f, "{{{}}}", members.join(", ")),
        }
    }
}

pub fn signature(c: &Community, mode: &IdentityMode) -> Signature {
    match mode {
        IdentityMode::Structural => Signature::Structural {
            motif: classify_motif(c),
            vector: attribute_vector(c),
        },
        IdentityMode::Membership { .. } => Signature::Membership {
            members: c.members().to_vec(),
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lifecycle {
    Constant,
    Visiting,
    Transient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternTimeline {
    pub signature: Signature,
    pub years_present: BTreeSet<i32>,
    pub lifecycle: Lifecycle,
}

/// Constant: every year of the range. Visiting: two or more maximal runs.
/// Transient: one run that does not cover the range.
pub fn classify_lifecycle(years_present: &BTreeSet<i32>, range: (i32, i32)) -> Result<Lifecycle, TemporalError> {
    let (start, end) = range;
    let outside: Vec<i32> = years_present
        .iter()
        .copied()
        .filter(|y| *y < start || *y > end)
        .collect();
    if !outside.is_empty() || years_present.is_empty() {
        return Err(TemporalError::OutOfRange {
            years: outside,
            start,
            end,
        });
    }
    let runs = 1 + years_present
        .iter()
        .zip(years_present.iter().skip(1))
        .filter(|(a, b)| **b != **a + 1)
        .count();
    let full = years_present.len() as i64 == (end as i64 - start as i64 + 1);
    Ok(if full {
        Lifecycle::Constant
    } else if runs >= 2 {
        Lifecycle::Visiting
    } else {
        Lifecycle::Transient
    })
}

fn jaccard(a: &[String], b: &[String]) -> f64 {
    // both sorted
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut c = x;
        while self.0[c] != r {
            let next = self.0[c];
            self.0[c] = r;
            c = next;
        }
        r
    }

    /// Keeps the smaller root so the earliest occurrence represents a group.
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.0[hi] = lo;
        }
    }
}

/// Groups communities of all snapshots into timelines. The analysis range
/// runs from the first to the last snapshot year; years inside it without a
/// snapshot entry count as absent. Timelines are ordered by first year, then
/// signature.
pub fn match_across_years(
    snapshots: &BTreeMap<i32, Vec<Community>>,
    mode: &IdentityMode,
) -> Result<Vec<PatternTimeline>, TemporalError> {
    let (Some(&start), Some(&end)) = (snapshots.keys().next(), snapshots.keys().next_back()) else {
        return Err(TemporalError::NoSnapshots);
    };
    if let IdentityMode::Membership { tau } = mode {
        if !(0.0..=1.0).contains(tau) {
            return Err(TemporalError::BadJaccard(*tau));
        }
    }

    // occurrences in (year, community id) order
    let mut occ: Vec<(i32, Signature)> = Vec::new();
    let mut year_slots: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
    for (&year, comms) in snapshots {
        let mut sorted: Vec<&Community> = comms.iter().collect();
        sorted.sort_by_key(|c| c.id());
        for c in sorted {
            year_slots.entry(year).or_default().push(occ.len());
            occ.push((year, signature(c, mode)));
        }
    }

    let mut uf = UnionFind((0..occ.len()).collect());
    let mut first_seen: HashMap<&Signature, usize> = HashMap::new();
    for (i, (_, sig)) in occ.iter().enumerate() {
        match first_seen.get(sig) {
            Some(&j) => uf.union(i, j),
            None => {
                first_seen.insert(sig, i);
            }
        }
    }
    if let IdentityMode::Membership { tau } = mode {
        for (&year, slots) in &year_slots {
            let Some(next) = year_slots.get(&(year + 1)) else { continue };
            for &a in slots {
                for &b in next {
                    if let (Signature::Membership { members: ma }, Signature::Membership { members: mb }) =
                        (&occ[a].1, &occ[b].1)
                    {
                        if jaccard(ma, mb) >= *tau {
                            uf.union(a, b);
                        }
                    }
                }
            }
        }
    }

    let mut groups: BTreeMap<usize, BTreeSet<i32>> = BTreeMap::new();
    for (i, (year, _)) in occ.iter().enumerate() {
        groups.entry(uf.find(i)).or_default().insert(*year);
    }
    let mut timelines = groups
        .into_iter()
        .map(|(root, years)| {
            let lifecycle = classify_lifecycle(&years, (start, end))?;
            Ok(PatternTimeline {
                signature: occ[root].1.clone(),
                years_present: years,
                lifecycle,
            })
        })
        .collect::<Result<Vec<_>, TemporalError>>()?;
    timelines.sort_by(|a, b| {
        (a.years_present.first(), &a.signature).cmp(&(b.years_present.first(), &b.signature))
    });
    Ok(timelines)
}

/// Share of communities that are isolated pairs (single or double bond).
pub fn noise_fraction(snapshot: &[Community]) -> f64 {
    if snapshot.is_empty() {
        return 0.0;
    }
    let noise = snapshot.iter().filter(|c| classify_motif(c).is_noise()).count();
    noise as f64 / snapshot.len() as f64
}
