use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use molecula::cluster::{hcluster, Linkage};
use molecula::corpus::{generate_corpus, CorpusProfile, CorpusSpec};
use molecula::decompose::{decompose, YearCommunities};
use molecula::export::{self, DendrogramDoc, TimelineDoc};
use molecula::graph::{parse_edge_list, AssocGraph};
use molecula::ingest::{self, InputFormat};
use molecula::pipeline::{self, parse_year_range, IdentityKind, PipelineConfig, PipelineError};
use molecula::rules::{self, Fraction};
use molecula::temporal;

#[derive(Parser)]
#[command(name = "molecula", version, about = "Molecular decomposition of co-authorship association graphs")]
struct Cli {
    /// JSON config file; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse inputs and write normalised JSONL.
    Ingest {
        #[command(flatten)]
        input: InputArgs,
        /// Output file (stdout when omitted).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Mine rules per year into rules_<year>.csv.
    Mine {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        mine: MineArgs,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Decompose one graph into communities, attributes and DOT.
    Decompose {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Cluster communities from attribute CSVs.
    Cluster {
        /// attributes_<year>.csv files.
        #[arg(long, num_args = 1.., required = true)]
        attributes: Vec<PathBuf>,
        #[command(flatten)]
        cluster: ClusterArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Track patterns across communities_<year>.json files.
    Timeline {
        #[arg(long, num_args = 1.., required = true)]
        communities: Vec<PathBuf>,
        #[command(flatten)]
        identity: IdentityArgs,
        /// Analysis range; defaults to the first..last year found.
        #[arg(long)]
        years: Option<String>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Write a graph as Graphviz DOT.
    ExportDot {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run every stage.
    Pipeline {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        mine: MineArgs,
        #[command(flatten)]
        cluster: ClusterArgs,
        #[command(flatten)]
        identity: IdentityArgs,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Generate a synthetic JSONL corpus with planted structures.
    GenCorpus {
        #[arg(long)]
        authors: usize,
        #[arg(long)]
        pubs: usize,
        #[arg(long)]
        years: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON profile file; the flags below add to it.
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long)]
        in_star: Vec<usize>,
        #[arg(long)]
        out_star: Vec<usize>,
        #[arg(long)]
        bridge_clique: Vec<usize>,
        #[arg(long)]
        noise_pairs: Option<usize>,
        #[arg(long)]
        repeat: Option<usize>,
        #[arg(long)]
        max_background_authors: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct InputArgs {
    #[arg(long, num_args = 1..)]
    input: Vec<PathBuf>,
    #[arg(long)]
    format: Option<InputFormat>,
    /// Inclusive year range `<min>:<max>`.
    #[arg(long)]
    years: Option<String>,
    /// Abort on the first malformed record.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct MineArgs {
    #[arg(long)]
    min_support: Option<String>,
    #[arg(long)]
    min_confidence: Option<String>,
    #[arg(long)]
    min_lift: Option<String>,
    /// Bernoulli sampling fraction per year.
    #[arg(long)]
    sample: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    linkage: Option<Linkage>,
    #[arg(long)]
    normalize: bool,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    cut_height: Option<f64>,
}

#[derive(Args)]
struct IdentityArgs {
    #[arg(long)]
    identity: Option<IdentityKind>,
    #[arg(long)]
    jaccard: Option<f64>,
}

#[derive(Args)]
struct GraphArgs {
    /// A rules CSV; the year is read from a `rules_<year>.csv` name.
    #[arg(long, conflicts_with = "edges", required_unless_present = "edges")]
    rules: Option<PathBuf>,
    /// An edge list (`from -> to` lines).
    #[arg(long)]
    edges: Option<PathBuf>,
    #[arg(long)]
    year: Option<i32>,
}

enum CliError {
    Input(String),
    Config(String),
    Pipeline(PipelineError),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Config(_) => 2,
            CliError::Pipeline(e) => e.exit_code() as u8,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) | CliError::Config(m) => f.write_str(m),
            CliError::Pipeline(e) => write!(f, "{e}"),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        CliError::Pipeline(e)
    }
}

type CliResult<T> = Result<T, CliError>;

fn input_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| input_err(path, e))
}

fn write_out(path: Option<&Path>, contents: &[u8]) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, contents).map_err(|e| input_err(p, e)),
        None => io::stdout()
            .write_all(contents)
            .map_err(|e| CliError::Input(e.to_string())),
    }
}

fn write_in(dir: &Path, name: &str, contents: &[u8]) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| input_err(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| input_err(&path, e))
}

fn load_config(path: Option<&Path>) -> CliResult<PipelineConfig> {
    match path {
        None => Ok(PipelineConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
        }
    }
}

fn fraction(flag: &str, s: &str) -> CliResult<Fraction> {
    s.parse().map_err(|e| CliError::Config(format!("--{flag}: {e}")))
}

impl InputArgs {
    fn apply(&self, cfg: &mut PipelineConfig) -> CliResult<()> {
        if !self.input.is_empty() {
            cfg.input = self.input.clone();
        }
        if let Some(f) = self.format {
            cfg.format = f;
        }
        if let Some(y) = &self.years {
            cfg.years = Some(parse_year_range(y).map_err(CliError::Config)?);
        }
        cfg.strict |= self.strict;
        if cfg.input.is_empty() {
            return Err(CliError::Config("no --input given".into()));
        }
        Ok(())
    }
}

impl MineArgs {
    fn apply(&self, cfg: &mut PipelineConfig) -> CliResult<()> {
        if let Some(s) = &self.min_support {
            cfg.min_support = fraction("min-support", s)?;
        }
        if let Some(s) = &self.min_confidence {
            cfg.min_confidence = fraction("min-confidence", s)?;
        }
        if let Some(s) = &self.min_lift {
            cfg.min_lift = fraction("min-lift", s)?;
        }
        if self.sample.is_some() {
            cfg.sample = self.sample;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(())
    }
}

impl ClusterArgs {
    fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(l) = self.linkage {
            cfg.linkage = l;
        }
        cfg.normalize |= self.normalize;
        if self.k.is_some() {
            cfg.k = self.k;
        }
        if self.cut_height.is_some() {
            cfg.cut_height = self.cut_height;
        }
    }
}

impl IdentityArgs {
    fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(i) = self.identity {
            cfg.identity = i;
        }
        if let Some(j) = self.jaccard {
            cfg.jaccard = j;
        }
    }
}

/// Year embedded in names like `rules_1994.csv`.
fn year_from_name(path: &Path) -> Option<i32> {
    let stem = path.file_stem()?.to_str()?;
    stem.rsplit('_').next()?.parse().ok()
}

impl GraphArgs {
    fn load(&self) -> CliResult<AssocGraph> {
        if let Some(p) = &self.rules {
            let year = self.year.or_else(|| year_from_name(p)).unwrap_or(0);
            let file = fs::File::open(p).map_err(|e| input_err(p, e))?;
            let rules = rules::read_rules_csv(io::BufReader::new(file)).map_err(|e| input_err(p, e))?;
            AssocGraph::from_rules(&rules, year).map_err(|e| input_err(p, e))
        } else {
            let p = self.edges.as_ref().expect("clap requires one source");
            let year = self.year.or_else(|| year_from_name(p)).unwrap_or(0);
            parse_edge_list(&read_text(p)?, year).map_err(|e| input_err(p, e))
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let mut cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Ingest { input, output } => {
            input.apply(&mut cfg)?;
            cfg.validate()?;
            let (parsed, _) = pipeline::load_inputs(&cfg.input, cfg.format, cfg.parse_mode())?;
            let skipped = parsed.skipped;
            let buckets = ingest::bucket_by_year(parsed.publications, cfg.years)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let pubs: Vec<_> = buckets.buckets.into_values().flatten().collect();
            let mut buf = Vec::new();
            ingest::write_jsonl(&mut buf, &pubs).map_err(|e| CliError::Input(e.to_string()))?;
            write_out(output.as_deref(), &buf)?;
            eprintln!(
                "{} publications, {} skipped",
                buckets.total_count,
                skipped + buckets.skipped_count
            );
        }
        Command::Mine { input, mine, out_dir } => {
            input.apply(&mut cfg)?;
            mine.apply(&mut cfg)?;
            cfg.validate()?;
            let out_dir = out_dir.unwrap_or(cfg.out_dir.clone());
            let (parsed, _) = pipeline::load_inputs(&cfg.input, cfg.format, cfg.parse_mode())?;
            let buckets = ingest::bucket_by_year(parsed.publications, cfg.years)
                .map_err(|e| CliError::Config(e.to_string()))?;
            for (year, pubs) in &buckets.buckets {
                let mut ts: Vec<&[String]> = pubs.iter().map(|p| p.authors.as_slice()).collect();
                if let Some(f) = cfg.sample {
                    ts = rules::sample_transactions(&ts, f, pipeline::year_seed(cfg.seed, *year));
                }
                let mined = rules::mine_rules(&ts, &cfg.thresholds());
                let mut buf = Vec::new();
                rules::write_rules_csv(&mut buf, &mined).map_err(|e| CliError::Input(e.to_string()))?;
                write_in(&out_dir, &pipeline::rules_file(*year), &buf)?;
                eprintln!("{year}: {} transactions, {} rules", ts.len(), mined.len());
            }
        }
        Command::Decompose { graph, out_dir } => {
            let g = graph.load()?;
            let out_dir = out_dir.unwrap_or(cfg.out_dir.clone());
            let year = g.year();
            let reports = decompose(&g);
            let mut attrs = Vec::new();
            export::write_attributes_csv(&mut attrs, year, &reports).map_err(|e| CliError::Input(e.to_string()))?;
            let json = export::communities_json(year, &reports).map_err(|e| CliError::Input(e.to_string()))?;
            write_in(&out_dir, &pipeline::attributes_file(year), &attrs)?;
            write_in(&out_dir, &pipeline::communities_file(year), json.as_bytes())?;
            write_in(
                &out_dir,
                &pipeline::dot_file(year),
                export::export_dot(&g, &format!("assoc_{year}")).as_bytes(),
            )?;
            eprintln!("{year}: {} communities", reports.len());
        }
        Command::Cluster {
            attributes,
            cluster,
            output,
        } => {
            cluster.apply(&mut cfg);
            cfg.validate()?;
            let mut rows = Vec::new();
            for p in &attributes {
                let file = fs::File::open(p).map_err(|e| input_err(p, e))?;
                rows.extend(export::read_attributes_csv(file).map_err(|e| input_err(p, e))?);
            }
            rows.sort_by_key(|r| (r.year, r.community_id));
            let labels: Vec<String> = rows.iter().map(|r| r.label()).collect();
            let vectors: Vec<_> = rows.iter().map(|r| r.vector).collect();
            let opts = cfg.cluster_options();
            let cluster_err = |e: molecula::cluster::ClusterError| CliError::Config(e.to_string());
            let d = if vectors.is_empty() {
                None
            } else {
                Some(hcluster(&vectors, &opts).map_err(cluster_err)?)
            };
            let assignment = match (&d, cfg.k, cfg.cut_height) {
                (Some(d), Some(k), _) => Some(d.cut_k(k).map_err(cluster_err)?),
                (Some(d), None, Some(h)) => Some(d.cut_height(h).map_err(cluster_err)?),
                _ => None,
            };
            let doc = DendrogramDoc::new(&opts, labels, d.as_ref(), assignment).map_err(cluster_err)?;
            let json = doc.to_json().map_err(|e| CliError::Input(e.to_string()))?;
            write_out(output.as_deref(), json.as_bytes())?;
        }
        Command::Timeline {
            communities,
            identity,
            years,
            out_dir,
        } => {
            identity.apply(&mut cfg);
            cfg.validate()?;
            let out_dir = out_dir.unwrap_or(cfg.out_dir.clone());
            let mut snaps: BTreeMap<i32, Vec<_>> = BTreeMap::new();
            for p in &communities {
                let doc: YearCommunities = serde_json::from_str(&read_text(p)?).map_err(|e| input_err(p, e))?;
                let list = snaps.entry(doc.year).or_default();
                for rec in &doc.communities {
                    list.push(rec.to_community(doc.year).map_err(|e| input_err(p, e))?);
                }
            }
            let range = match years {
                Some(y) => Some(parse_year_range(&y).map_err(CliError::Config)?),
                None => snaps.keys().next().zip(snaps.keys().next_back()).map(|(a, b)| (*a, *b)),
            };
            if let Some((a, b)) = range {
                if snaps.keys().any(|y| *y < a || *y > b) {
                    return Err(CliError::Config(format!("community files fall outside {a}:{b}")));
                }
                for y in a..=b {
                    snaps.entry(y).or_default();
                }
            }
            let mode = cfg.identity_mode();
            let timelines = if snaps.is_empty() {
                Vec::new()
            } else {
                temporal::match_across_years(&snaps, &mode).map_err(|e| CliError::Config(e.to_string()))?
            };
            let doc = TimelineDoc::new(mode, range, &timelines);
            let json = doc.to_json().map_err(|e| CliError::Input(e.to_string()))?;
            write_in(&out_dir, pipeline::TIMELINE_FILE, json.as_bytes())?;
            let rows: Vec<(i32, f64, usize)> = snaps
                .iter()
                .map(|(y, cs)| (*y, temporal::noise_fraction(cs), cs.len()))
                .collect();
            write_in(&out_dir, pipeline::NOISE_FILE, export::noise_csv(&rows).as_bytes())?;
        }
        Command::ExportDot { graph, output } => {
            let g = graph.load()?;
            let dot = export::export_dot(&g, &format!("assoc_{}", g.year()));
            write_out(output.as_deref(), dot.as_bytes())?;
        }
        Command::Pipeline {
            input,
            mine,
            cluster,
            identity,
            out_dir,
            threads,
        } => {
            input.apply(&mut cfg)?;
            mine.apply(&mut cfg)?;
            cluster.apply(&mut cfg);
            identity.apply(&mut cfg);
            if let Some(d) = out_dir {
                cfg.out_dir = d;
            }
            if threads.is_some() {
                cfg.threads = threads;
            }
            let manifest = pipeline::run_pipeline(&cfg)?;
            eprintln!(
                "{} publications over {} years written to {}",
                manifest.publications,
                manifest.years.len(),
                cfg.out_dir.display()
            );
        }
        Command::GenCorpus {
            authors,
            pubs,
            years,
            seed,
            profile,
            in_star,
            out_star,
            bridge_clique,
            noise_pairs,
            repeat,
            max_background_authors,
            output,
        } => {
            let mut prof: CorpusProfile = match profile {
                Some(p) => serde_json::from_str(&read_text(&p)?).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
                None => CorpusProfile::default(),
            };
            prof.in_stars.extend(in_star);
            prof.out_stars.extend(out_star);
            prof.bridge_cliques.extend(bridge_clique);
            if let Some(n) = noise_pairs {
                prof.noise_pairs = n;
            }
            if let Some(r) = repeat {
                prof.repeat = r;
            }
            if let Some(m) = max_background_authors {
                prof.max_background_authors = m;
            }
            let spec = CorpusSpec {
                n_authors: authors,
                n_pubs: pubs,
                years: parse_year_range(&years).map_err(CliError::Config)?,
                seed,
                profile: prof,
            };
            let corpus = generate_corpus(&spec).map_err(|e| CliError::Config(e.to_string()))?;
            let mut buf = Vec::new();
            ingest::write_jsonl(&mut buf, &corpus).map_err(|e| CliError::Input(e.to_string()))?;
            write_out(output.as_deref(), &buf)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
