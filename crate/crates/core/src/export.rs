//! Artifact serialisation: Graphviz DOT, attribute and noise CSVs, and the
//! JSON documents for communities, dendrograms and timelines.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cluster::{Dendrogram, Merge};
use crate::decompose::{AttributeVector, CommunityRecord, CommunityReport};
use crate::format::fmt_g12;
use crate::graph::AssocGraph;
use crate::temporal::{IdentityMode, Lifecycle, PatternTimeline, Signature};

fn dot_id(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

/// DOT digraph: nodes, then edges, both in lexicographic order. A double
/// bond becomes one `dir=both` edge from the smaller name.
pub fn export_dot(g: &AssocGraph, name: &str) -> String {
    let mut s = format!("digraph {} {{\n", dot_id(name));
    for n in g.nodes() {
        s.push_str(&format!("  {};\n", dot_id(n)));
    }
    for (i, j) in g.edge_indices() {
        let back = g.has_edge_idx(j, i);
        if back && j < i {
            continue;
        }
        s.push_str(&format!("  {} -> {}", dot_id(g.name(i)), dot_id(g.name(j))));
        if back {
            s.push_str(" [dir=both]");
        }
        s.push_str(";\n");
    }
    s.push_str("}\n");
    s
}

pub const ATTRIBUTES_CSV_HEADER: &str = "year,community_id,motif,arity,SB,BR,DI,NU,RE,TR";

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

pub fn write_attributes_csv<W: Write>(out: W, year: i32, reports: &[CommunityReport]) -> Result<(), csv::Error> {
    let mut w = csv_writer(out);
    w.write_record(ATTRIBUTES_CSV_HEADER.split(','))?;
    for r in reports {
        let mut row = vec![
            year.to_string(),
            r.community.id().to_string(),
            r.motif.to_string(),
            r.arity.to_string(),
        ];
        row.extend(r.vector.to_array().iter().map(u64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// One row of an attributes CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeRow {
    pub year: i32,
    pub community_id: usize,
    pub motif: String,
    pub arity: String,
    pub vector: AttributeVector,
}

impl AttributeRow {
    pub fn label(&self) -> String {
        format!("{}:{}", self.year, self.community_id)
    }
}

pub fn read_attributes_csv<R: std::io::Read>(input: R) -> Result<Vec<AttributeRow>, String> {
    let mut rdr = csv::Reader::from_reader(input);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| e.to_string())?
        .iter()
        .map(str::to_string)
        .collect();
    if header.join(",") != ATTRIBUTES_CSV_HEADER {
        return Err(format!("expected header `{ATTRIBUTES_CSV_HEADER}`"));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let bad = |field: &str| format!("row {}: bad {field}", i + 2);
        let int = |k: usize| rec[k].parse::<u64>().map_err(|_| bad(&header[k]));
        rows.push(AttributeRow {
            year: rec[0].parse().map_err(|_| bad("year"))?,
            community_id: rec[1].parse().map_err(|_| bad("community_id"))?,
            motif: rec[2].to_string(),
            arity: rec[3].to_string(),
            vector: AttributeVector::new(int(4)?, int(5)?, int(6)?, int(7)?, int(8)?, int(9)?),
        });
    }
    Ok(rows)
}

pub fn communities_json(year: i32, reports: &[CommunityReport]) -> serde_json::Result<String> {
    let doc = crate::decompose::YearCommunities {
        year,
        communities: reports.iter().map(CommunityRecord::from).collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DendrogramDoc {
    pub linkage: crate::cluster::Linkage,
    pub normalize: bool,
    pub leaves: Vec<String>,
    /// `[a, b, height]` triples; ids `>= leaves.len()` are merged clusters.
    pub merges: Vec<(usize, usize, f64)>,
    pub newick: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub assignment: Option<Vec<String>>,
}

impl DendrogramDoc {
    pub fn new(
        opts: &crate::cluster::ClusterOptions,
        leaves: Vec<String>,
        d: Option<&Dendrogram>,
        assignment: Option<Vec<usize>>,
    ) -> Result<Self, crate::cluster::ClusterError> {
        let newick = match d {
            Some(d) => d.to_newick(&leaves)?,
            None => ";".to_string(),
        };
        Ok(DendrogramDoc {
            linkage: opts.linkage,
            normalize: opts.normalize,
            merges: d
                .map(|d| d.merges.iter().map(|m: &Merge| (m.a, m.b, round12(m.height))).collect())
                .unwrap_or_default(),
            newick,
            assignment: assignment.map(|a| a.into_iter().map(|i| leaves[i].clone()).collect()),
            leaves,
        })
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineEntry {
    pub signature: Signature,
    pub description: String,
    pub years_present: Vec<i32>,
    pub lifecycle: Lifecycle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineDoc {
    pub identity: IdentityMode,
    pub range: Option<(i32, i32)>,
    pub timelines: Vec<TimelineEntry>,
}

impl TimelineDoc {
    pub fn new(identity: IdentityMode, range: Option<(i32, i32)>, timelines: &[PatternTimeline]) -> Self {
        TimelineDoc {
            identity,
            range,
            timelines: timelines
                .iter()
                .map(|t| TimelineEntry {
                    description: t.signature.to_string(),
                    signature: t.signature.clone(),
                    years_present: t.years_present.iter().copied().collect(),
                    lifecycle: t.lifecycle,
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// Rounds to 12 significant digits so JSON output matches the CSV precision.
fn round12(x: f64) -> f64 {
    fmt_g12(x).parse().unwrap_or(x)
}

pub const NOISE_CSV_HEADER: &str = "year,noise_fraction,n_communities";

pub fn noise_csv(rows: &[(i32, f64, usize)]) -> String {
    let mut s = format!("{NOISE_CSV_HEADER}\n");
    for (year, frac, n) in rows {
        s.push_str(&format!("{year},{},{n}\n", fmt_g12(*frac)));
    }
    s
}
