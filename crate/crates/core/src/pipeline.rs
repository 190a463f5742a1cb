//! End-to-end run: ingest, mine per year, decompose, cluster, track
//! timelines, and write every artifact plus a run manifest.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cluster::{hcluster, ClusterError, ClusterOptions, Linkage};
use crate::decompose::{decompose, CommunityReport};
use crate::export::{self, DendrogramDoc, TimelineDoc};
use crate::graph::AssocGraph;
use crate::ingest::{self, InputFormat, ParseMode, ParseOutcome, Publication};
use crate::rules::{self, Fraction, Thresholds};
use crate::temporal::{self, IdentityMode, DEFAULT_JACCARD};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Input {
        path: PathBuf,
        #[source]
        source: ingest::IngestError,
    },
    #[error("{path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("year {year}: {source}")]
    Year {
        year: i32,
        #[source]
        source: Box<PipelineError>,
    },
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl PipelineError {
    /// Process exit code: 1 input, 2 config, 3 invariant (output failures
    /// count as input/IO errors).
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Input { .. } | PipelineError::Output { .. } => 1,
            PipelineError::Year { source, .. } => source.exit_code(),
            PipelineError::Invariant(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IdentityKind {
    #[default]
    Structural,
    Membership,
}

impl std::str::FromStr for IdentityKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "structural" => Ok(IdentityKind::Structural),
            "membership" => Ok(IdentityKind::Membership),
            other => Err(format!("unknown identity mode `{other}`")),
        }
    }
}

/// Parses `min:max`.
pub fn parse_year_range(s: &str) -> Result<(i32, i32), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected <min>:<max>, got `{s}`"))?;
    let min = a.trim().parse().map_err(|_| format!("bad year `{a}`"))?;
    let max = b.trim().parse().map_err(|_| format!("bad year `{b}`"))?;
    if min > max {
        return Err(format!("empty year range {min}:{max}"));
    }
    Ok((min, max))
}

fn ser_years<S: serde::Serializer>(v: &Option<(i32, i32)>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some((a, b)) => s.serialize_some(&format!("{a}:{b}")),
        None => s.serialize_none(),
    }
}

fn de_years<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<(i32, i32)>, D::Error> {
    Option::<String>::deserialize(d)?
        .map(|s| parse_year_range(&s).map_err(serde::de::Error::custom))
        .transpose()
}

/// Every knob of a run. The JSON config file uses these field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: Vec<PathBuf>,
    pub format: InputFormat,
    #[serde(serialize_with = "ser_years", deserialize_with = "de_years")]
    pub years: Option<(i32, i32)>,
    pub strict: bool,
    pub min_support: Fraction,
    pub min_confidence: Fraction,
    pub min_lift: Fraction,
    pub sample: Option<f64>,
    pub seed: u64,
    pub linkage: Linkage,
    pub normalize: bool,
    pub k: Option<usize>,
    pub cut_height: Option<f64>,
    pub identity: IdentityKind,
    pub jaccard: f64,
    #[serde(skip_serializing)]
    pub out_dir: PathBuf,
    #[serde(skip_serializing)]
    pub threads: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let t = Thresholds::default();
        PipelineConfig {
            input: Vec::new(),
            format: InputFormat::default(),
            years: None,
            strict: false,
            min_support: t.min_support,
            min_confidence: t.min_confidence,
            min_lift: t.min_lift,
            sample: None,
            seed: 0,
            linkage: Linkage::default(),
            normalize: false,
            k: None,
            cut_height: None,
            identity: IdentityKind::default(),
            jaccard: DEFAULT_JACCARD,
            out_dir: PathBuf::from("out"),
            threads: None,
        }
    }
}

impl PipelineConfig {
    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            min_support: self.min_support,
            min_confidence: self.min_confidence,
            min_lift: self.min_lift,
        }
    }

    pub fn parse_mode(&self) -> ParseMode {
        if self.strict {
            ParseMode::Strict
        } else {
            ParseMode::Lenient
        }
    }

    pub fn identity_mode(&self) -> IdentityMode {
        match self.identity {
            IdentityKind::Structural => IdentityMode::Structural,
            IdentityKind::Membership => IdentityMode::Membership { tau: self.jaccard },
        }
    }

    pub fn cluster_options(&self) -> ClusterOptions {
        ClusterOptions {
            linkage: self.linkage,
            normalize: self.normalize,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let cfg = |m: String| Err(PipelineError::Config(m));
        let mut seen = HashSet::new();
        for p in &self.input {
            if !seen.insert(p) {
                return cfg(format!("input {} listed twice", p.display()));
            }
            if p == &self.out_dir {
                return cfg(format!("output directory {} is also an input", p.display()));
            }
        }
        if let Some((a, b)) = self.years {
            if a > b {
                return cfg(format!("empty year range {a}:{b}"));
            }
        }
        self.thresholds()
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        if let Some(s) = self.sample {
            if !(s > 0.0 && s <= 1.0) {
                return cfg(format!("sample fraction {s} outside (0, 1]"));
            }
        }
        if !(0.0..=1.0).contains(&self.jaccard) {
            return cfg(format!("jaccard threshold {} outside [0, 1]", self.jaccard));
        }
        if self.k == Some(0) {
            return cfg("k must be at least 1".into());
        }
        if let Some(h) = self.cut_height {
            if h.is_nan() || h < 0.0 {
                return cfg(format!("cut height {h} must be non-negative"));
            }
        }
        if self.threads == Some(0) {
            return cfg("threads must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearSummary {
    pub year: i32,
    pub transactions: usize,
    pub rules: usize,
    pub communities: usize,
    pub noise_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: PipelineConfig,
    pub input_sha256: String,
    pub publications: usize,
    pub skipped: usize,
    pub years: Vec<YearSummary>,
    pub generated_at: u64,
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const DENDROGRAM_FILE: &str = "dendrogram.json";
pub const TIMELINE_FILE: &str = "timeline.json";
pub const NOISE_FILE: &str = "noise.csv";

pub fn rules_file(year: i32) -> String {
    format!("rules_{year}.csv")
}
pub fn communities_file(year: i32) -> String {
    format!("communities_{year}.json")
}
pub fn attributes_file(year: i32) -> String {
    format!("attributes_{year}.csv")
}
pub fn dot_file(year: i32) -> String {
    format!("graph_{year}.dot")
}

/// Reads and parses all inputs (in parallel, results kept in argument
/// order) and returns them with a SHA-256 over their contents.
pub fn load_inputs(
    paths: &[PathBuf],
    format: InputFormat,
    mode: ParseMode,
) -> Result<(ParseOutcome, String), PipelineError> {
    let parsed: Vec<(Vec<u8>, ParseOutcome)> = paths
        .par_iter()
        .map(|path| {
            let input_err = |source| PipelineError::Input {
                path: path.clone(),
                source,
            };
            let bytes = fs::read(path).map_err(|e| input_err(e.into()))?;
            let outcome = ingest::parse(BufReader::new(bytes.as_slice()), format, mode).map_err(input_err)?;
            Ok((bytes, outcome))
        })
        .collect::<Result<_, PipelineError>>()?;
    let mut hasher = Sha256::new();
    let mut all = ParseOutcome::default();
    for (bytes, outcome) in parsed {
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(&bytes);
        all.extend(outcome);
    }
    let hash = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();
    Ok((all, hash))
}

fn write_file(dir: &Path, name: &str, contents: &[u8]) -> Result<(), PipelineError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| PipelineError::Output { path, source })
}

/// Per-year sampling seed derived from the run seed.
pub fn year_seed(seed: u64, year: i32) -> u64 {
    seed ^ (year as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

struct YearResult {
    summary: YearSummary,
    reports: Vec<CommunityReport>,
}

fn process_year(cfg: &PipelineConfig, year: i32, pubs: &[Publication]) -> Result<YearResult, PipelineError> {
    let mut transactions: Vec<&[String]> = pubs.iter().map(|p| p.authors.as_slice()).collect();
    if let Some(f) = cfg.sample {
        transactions = rules::sample_transactions(&transactions, f, year_seed(cfg.seed, year));
    }
    let rules = rules::mine_rules(&transactions, &cfg.thresholds());
    let graph = AssocGraph::from_rules(&rules, year).map_err(|e| PipelineError::Invariant(e.to_string()))?;
    let reports = decompose(&graph);

    let invariant = |e: String| PipelineError::Invariant(e);
    let mut rules_csv = Vec::new();
    rules::write_rules_csv(&mut rules_csv, &rules).map_err(|e| invariant(e.to_string()))?;
    let mut attrs_csv = Vec::new();
    export::write_attributes_csv(&mut attrs_csv, year, &reports).map_err(|e| invariant(e.to_string()))?;
    let comm_json = export::communities_json(year, &reports).map_err(|e| invariant(e.to_string()))?;
    let dot = export::export_dot(&graph, &format!("assoc_{year}"));

    let dir = &cfg.out_dir;
    write_file(dir, &rules_file(year), &rules_csv)?;
    write_file(dir, &attributes_file(year), &attrs_csv)?;
    write_file(dir, &communities_file(year), comm_json.as_bytes())?;
    write_file(dir, &dot_file(year), dot.as_bytes())?;

    let comms: Vec<_> = reports.iter().map(|r| r.community.clone()).collect();
    Ok(YearResult {
        summary: YearSummary {
            year,
            transactions: transactions.len(),
            rules: rules.len(),
            communities: reports.len(),
            noise_fraction: temporal::noise_fraction(&comms),
        },
        reports,
    })
}

/// Runs every stage and writes all artifacts into `cfg.out_dir`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunManifest, PipelineError> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out_dir).map_err(|source| PipelineError::Output {
        path: cfg.out_dir.clone(),
        source,
    })?;
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cfg.threads {
            b = b.num_threads(n);
        }
        b.build().map_err(|e| PipelineError::Config(e.to_string()))?
    };
    pool.install(|| run_in_pool(cfg))
}

fn run_in_pool(cfg: &PipelineConfig) -> Result<RunManifest, PipelineError> {
    let (parsed, input_sha256) = load_inputs(&cfg.input, cfg.format, cfg.parse_mode())?;
    let parse_skipped = parsed.skipped;
    let buckets = ingest::bucket_by_year(parsed.publications, cfg.years)
        .map_err(|e| PipelineError::Config(e.to_string()))?;

    let years: Vec<i32> = match (cfg.years, buckets.buckets.keys().next(), buckets.buckets.keys().next_back()) {
        (Some((a, b)), _, _) => (a..=b).collect(),
        (None, Some(&a), Some(&b)) => (a..=b).collect(),
        _ => Vec::new(),
    };

    let results: Vec<YearResult> = years
        .par_iter()
        .map(|&year| {
            process_year(cfg, year, buckets.get(year)).map_err(|e| PipelineError::Year {
                year,
                source: Box::new(e),
            })
        })
        .collect::<Result<_, _>>()?;

    // dendrogram over every community, ordered by (year, id)
    let mut labels = Vec::new();
    let mut vectors = Vec::new();
    for r in &results {
        for c in &r.reports {
            labels.push(format!("{}:{}", r.summary.year, c.community.id()));
            vectors.push(c.vector);
        }
    }
    let opts = cfg.cluster_options();
    let dendro = if vectors.is_empty() {
        None
    } else {
        Some(hcluster(&vectors, &opts).map_err(cluster_err)?)
    };
    let assignment = match (&dendro, cfg.k, cfg.cut_height) {
        (Some(d), Some(k), _) => Some(d.cut_k(k).map_err(cluster_err)?),
        (Some(d), None, Some(h)) => Some(d.cut_height(h).map_err(cluster_err)?),
        _ => None,
    };
    let doc = DendrogramDoc::new(&opts, labels, dendro.as_ref(), assignment).map_err(cluster_err)?;
    write_file(
        &cfg.out_dir,
        DENDROGRAM_FILE,
        doc.to_json().map_err(|e| PipelineError::Invariant(e.to_string()))?.as_bytes(),
    )?;

    let snapshots: BTreeMap<i32, Vec<_>> = results
        .iter()
        .map(|r| (r.summary.year, r.reports.iter().map(|c| c.community.clone()).collect()))
        .collect();
    let identity = cfg.identity_mode();
    let timelines = if snapshots.is_empty() {
        Vec::new()
    } else {
        temporal::match_across_years(&snapshots, &identity).map_err(|e| PipelineError::Invariant(e.to_string()))?
    };
    let range = years.first().zip(years.last()).map(|(a, b)| (*a, *b));
    let tdoc = TimelineDoc::new(identity, range, &timelines);
    write_file(
        &cfg.out_dir,
        TIMELINE_FILE,
        tdoc.to_json().map_err(|e| PipelineError::Invariant(e.to_string()))?.as_bytes(),
    )?;

    let noise_rows: Vec<(i32, f64, usize)> = results
        .iter()
        .map(|r| (r.summary.year, r.summary.noise_fraction, r.summary.communities))
        .collect();
    write_file(&cfg.out_dir, NOISE_FILE, export::noise_csv(&noise_rows).as_bytes())?;

    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        input_sha256,
        publications: buckets.total_count,
        skipped: parse_skipped + buckets.skipped_count,
        years: results.into_iter().map(|r| r.summary).collect(),
        generated_at: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    let mut json = serde_json::to_string_pretty(&manifest).map_err(|e| PipelineError::Invariant(e.to_string()))?;
    json.push('\n');
    write_file(&cfg.out_dir, MANIFEST_FILE, json.as_bytes())?;
    Ok(manifest)
}

fn cluster_err(e: ClusterError) -> PipelineError {
    match e {
        ClusterError::NonMonotone { .. } | ClusterError::LabelCount { .. } | ClusterError::Empty => {
            PipelineError::Invariant(e.to_string())
        }
        other => PipelineError::Config(other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn year_ranges() {
        assert_eq!(parse_year_range("1990:2007"), Ok((1990, 2007)));
        assert!(parse_year_range("2007:1990").is_err());
        assert!(parse_year_range("1990").is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let cfg: PipelineConfig = serde_json::from_str(
            r#"{"input":["a.jsonl"],"years":"1990:1992","min_lift":1.5,"identity":"membership","jaccard":0.3}"#,
        )
        .unwrap();
        assert_eq!(cfg.years, Some((1990, 1992)));
        assert_eq!(cfg.min_lift, "1.5".parse().unwrap());
        assert_eq!(cfg.min_support, Thresholds::default().min_support);
        assert_eq!(cfg.identity_mode(), IdentityMode::Membership { tau: 0.3 });
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains(r#""years":"1990:1992""#));
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"bogus":1}"#).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = PipelineConfig {
            input: vec!["a".into(), "a".into()],
            ..Default::default()
        };
        assert_eq!(cfg.validate().unwrap_err().exit_code(), 2);
        cfg.input = vec!["a".into()];
        cfg.sample = Some(0.0);
        assert!(cfg.validate().is_err());
        cfg.sample = Some(0.5);
        cfg.jaccard = 1.5;
        assert!(cfg.validate().is_err());
        cfg.jaccard = 0.5;
        assert!(cfg.validate().is_ok());
        cfg.out_dir = "a".into();
        assert!(cfg.validate().is_err());
    }
}
