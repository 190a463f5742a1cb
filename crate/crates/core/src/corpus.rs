//! Seeded synthetic corpora with planted molecular structures.
//!
//! Every planted structure is repeated in every year. Planted bonds are made
//! one-directional by giving the "receiving" side enough solo papers that the
//! reverse confidence stays under 5%; the remaining papers of each year are
//! background drawn from the non-planted authors.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::Publication;

#[derive(Debug, Error, PartialEq)]
pub enum CorpusError {
    #[error("profile plants {planted} authors but only {available} exist")]
    TooManyPlanted { planted: usize, available: usize },
    #[error("year {year}: {reason}")]
    Infeasible { year: i32, reason: String },
    #[error("invalid profile: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusProfile {
    /// Leaf counts of stars whose leaves point at the centre.
    pub in_stars: Vec<usize>,
    /// Leaf counts of stars whose centre points at the leaves.
    pub out_stars: Vec<usize>,
    /// Sizes of groups that always publish together (complete double bonds).
    pub bridge_cliques: Vec<usize>,
    /// Isolated single-bond pairs.
    pub noise_pairs: usize,
    /// Joint papers per planted bond per year.
    pub repeat: usize,
    /// Largest author count of a background paper.
    pub max_background_authors: usize,
}

impl Default for CorpusProfile {
    fn default() -> Self {
        CorpusProfile {
            in_stars: Vec::new(),
            out_stars: Vec::new(),
            bridge_cliques: Vec::new(),
            noise_pairs: 0,
            repeat: 2,
            max_background_authors: 1,
        }
    }
}

impl CorpusProfile {
    pub fn planted_authors(&self) -> usize {
        self.in_stars.iter().chain(&self.out_stars).map(|l| l + 1).sum::<usize>()
            + self.bridge_cliques.iter().sum::<usize>()
            + 2 * self.noise_pairs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub n_authors: usize,
    pub n_pubs: usize,
    pub years: (i32, i32),
    pub seed: u64,
    pub profile: CorpusProfile,
}

// confidence floor the planted structures are built against: 5%
const CONF_DEN: usize = 20;

fn author_name(i: usize) -> String {
    format!("author{i:05}")
}

/// Planted papers for one year plus the minimum bucket size each structure
/// needs for its lift to exceed 1.
struct Plan {
    papers: Vec<Vec<usize>>,
    min_n: usize,
}

fn plan_year(profile: &CorpusProfile) -> Plan {
    let k = profile.repeat;
    // papers of a receiving nucleus: k / dominant < 1 / CONF_DEN
    let dominant = CONF_DEN * k + 1;
    let mut papers: Vec<Vec<usize>> = Vec::new();
    let mut min_n = k + 1;
    let mut next = 0usize;
    let mut take = |n: usize| {
        let ids: Vec<usize> = (next..next + n).collect();
        next += n;
        ids
    };

    for &leaves in &profile.in_stars {
        let ids = take(leaves + 1);
        let center = ids[0];
        for &leaf in &ids[1..] {
            papers.extend(std::iter::repeat_n(vec![leaf, center], k));
        }
        let joint = leaves * k;
        let total = joint.max(dominant);
        papers.extend(std::iter::repeat_n(vec![center], total - joint));
        min_n = min_n.max(total + 1);
    }
    for &leaves in &profile.out_stars {
        let ids = take(leaves + 1);
        let center = ids[0];
        for &leaf in &ids[1..] {
            papers.extend(std::iter::repeat_n(vec![center, leaf], k));
            papers.extend(std::iter::repeat_n(vec![leaf], dominant - k));
        }
        min_n = min_n.max(leaves * dominant + 1);
    }
    for &size in &profile.bridge_cliques {
        let ids = take(size);
        papers.extend(std::iter::repeat_n(ids, k));
    }
    for _ in 0..profile.noise_pairs {
        let ids = take(2);
        papers.extend(std::iter::repeat_n(vec![ids[0], ids[1]], k));
        papers.extend(std::iter::repeat_n(vec![ids[1]], dominant - k));
        min_n = min_n.max(dominant + 1);
    }
    Plan { papers, min_n }
}

/// Generates a deterministic corpus for `spec`.
pub fn generate_corpus(spec: &CorpusSpec) -> Result<Vec<Publication>, CorpusError> {
    let profile = &spec.profile;
    let (start, end) = spec.years;
    if start > end || start <= 0 {
        return Err(CorpusError::Invalid(format!("year range {start}:{end}")));
    }
    if spec.n_pubs == 0 {
        return Ok(Vec::new());
    }
    if profile.repeat == 0 || profile.max_background_authors == 0 {
        return Err(CorpusError::Invalid("repeat and max_background_authors must be positive".into()));
    }
    if profile.in_stars.iter().chain(&profile.out_stars).any(|&l| l == 0) {
        return Err(CorpusError::Invalid("stars need at least one leaf".into()));
    }
    if let Some(&l) = profile.out_stars.iter().find(|&&l| l > CONF_DEN) {
        return Err(CorpusError::Invalid(format!(
            "an out-star with {l} leaves cannot reach 5% confidence per leaf"
        )));
    }
    if profile.bridge_cliques.iter().any(|&s| s < 2) {
        return Err(CorpusError::Invalid("bridge cliques need at least two members".into()));
    }
    let planted = profile.planted_authors();
    if planted > spec.n_authors {
        return Err(CorpusError::TooManyPlanted {
            planted,
            available: spec.n_authors,
        });
    }

    let plan = plan_year(profile);
    let background: Vec<usize> = (planted..spec.n_authors).collect();
    let n_years = (end - start + 1) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.n_pubs);

    for (yi, year) in (start..=end).enumerate() {
        let n_year = spec.n_pubs / n_years + usize::from(yi < spec.n_pubs % n_years);
        let infeasible = |reason: String| CorpusError::Infeasible { year, reason };
        if !plan.papers.is_empty() {
            if n_year < plan.papers.len() {
                return Err(infeasible(format!(
                    "{n_year} papers cannot hold {} planted papers",
                    plan.papers.len()
                )));
            }
            if n_year < plan.min_n {
                return Err(infeasible(format!(
                    "{n_year} papers are too few for lift > 1 (need {})",
                    plan.min_n
                )));
            }
            if profile.repeat * 1000 < n_year {
                return Err(infeasible(format!(
                    "{n_year} papers push planted support under 0.1%"
                )));
            }
        }
        let n_background = n_year - plan.papers.len().min(n_year);
        if n_background > 0 && background.is_empty() {
            return Err(infeasible("no background authors left".into()));
        }

        let mut papers = plan.papers.clone();
        for _ in 0..n_background {
            let max = profile.max_background_authors.min(background.len());
            let size = rng.gen_range(1..=max);
            papers.push(background.choose_multiple(&mut rng, size).copied().collect());
        }
        papers.shuffle(&mut rng);
        for (i, authors) in papers.into_iter().enumerate() {
            let names: Vec<String> = authors.into_iter().map(author_name).collect();
            out.push(
                Publication::new(format!("syn/{year}/{i:06}"), year, names)
                    .expect("generated papers have authors and a positive year"),
            );
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::{mine_rules, Thresholds};

    fn spec(profile: CorpusProfile, n_pubs: usize) -> CorpusSpec {
        CorpusSpec {
            n_authors: 60,
            n_pubs,
            years: (2000, 2000),
            seed: 11,
            profile,
        }
    }

    fn mined(pubs: &[Publication]) -> Vec<(String, String)> {
        let ts: Vec<&[String]> = pubs.iter().map(|p| p.authors.as_slice()).collect();
        mine_rules(&ts, &Thresholds::default())
            .into_iter()
            .map(|r| (r.antecedent, r.consequent))
            .collect()
    }

    #[test]
    fn planted_in_star_yields_leaf_to_center_rules() {
        let p = CorpusProfile {
            in_stars: vec![7],
            ..Default::default()
        };
        let rules = mined(&generate_corpus(&spec(p, 100)).unwrap());
        let expected: Vec<(String, String)> = (1..=7).map(|i| (author_name(i), author_name(0))).collect();
        assert_eq!(rules, expected);
    }

    #[test]
    fn planted_out_star_and_pair() {
        let p = CorpusProfile {
            out_stars: vec![3],
            noise_pairs: 1,
            ..Default::default()
        };
        let rules = mined(&generate_corpus(&spec(p, 200)).unwrap());
        let expected = vec![
            (author_name(0), author_name(1)),
            (author_name(0), author_name(2)),
            (author_name(0), author_name(3)),
            (author_name(4), author_name(5)),
        ];
        assert_eq!(rules, expected);
    }

    #[test]
    fn deterministic_and_empty() {
        let p = CorpusProfile {
            bridge_cliques: vec![3],
            max_background_authors: 3,
            ..Default::default()
        };
        let a = generate_corpus(&spec(p.clone(), 80)).unwrap();
        assert_eq!(a, generate_corpus(&spec(p.clone(), 80)).unwrap());
        let mut other = spec(p, 80);
        other.seed = 12;
        assert_ne!(a, generate_corpus(&other).unwrap());
        assert!(generate_corpus(&spec(CorpusProfile::default(), 0)).unwrap().is_empty());
    }

    #[test]
    fn impossible_profiles() {
        let p = CorpusProfile {
            in_stars: vec![70],
            ..Default::default()
        };
        assert!(matches!(
            generate_corpus(&spec(p, 100)),
            Err(CorpusError::TooManyPlanted { planted: 71, available: 60 })
        ));
        let p = CorpusProfile {
            in_stars: vec![7],
            ..Default::default()
        };
        assert!(matches!(generate_corpus(&spec(p.clone(), 30)), Err(CorpusError::Infeasible { .. })));
        assert!(matches!(generate_corpus(&spec(p, 5000)), Err(CorpusError::Infeasible { .. })));
        let p = CorpusProfile {
            out_stars: vec![21],
            ..Default::default()
        };
        assert!(matches!(generate_corpus(&spec(p, 100)), Err(CorpusError::Invalid(_))));
    }
}
