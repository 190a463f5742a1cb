//! Bibliographic ingestion: JSONL, CSV and DBLP-style XML into publication
//! transactions, plus grouping by year of appearance.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Record elements recognised in DBLP-style XML.
pub const DBLP_RECORD_ELEMENTS: &[&str] = &[
    "article",
    "inproceedings",
    "proceedings",
    "book",
    "incollection",
    "phdthesis",
    "mastersthesis",
    "www",
];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("xml error at byte {position}: {reason}")]
    Xml { position: u64, reason: String },
    #[error("csv header must be `id,year,authors`, found `{0}`")]
    Header(String),
    #[error("invalid year range {min}:{max}")]
    YearRange { min: i32, max: i32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How to react to a bad record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParseMode {
    /// Skip the record and count it.
    #[default]
    Lenient,
    /// Abort on the first bad record.
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum InputFormat {
    #[default]
    #[serde(rename = "jsonl")]
    Jsonl,
    #[serde(rename = "csv")]
    Csv,
    #[serde(rename = "dblp-xml")]
    DblpXml,
}

impl std::str::FromStr for InputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "jsonl" => Ok(InputFormat::Jsonl),
            "csv" => Ok(InputFormat::Csv),
            "dblp-xml" => Ok(InputFormat::DblpXml),
            other => Err(format!("unknown input format `{other}`")),
        }
    }
}

/// One bibliographic record, read as a transaction over its authors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Publication {
    pub id: String,
    pub year: i32,
    /// Distinct author names in order of first occurrence.
    pub authors: Vec<String>,
}

impl Publication {
    /// Normalises author names (trim, drop empties, dedupe keeping the first
    /// occurrence) and checks the record invariants.
    pub fn new<I, S>(id: impl Into<String>, year: i32, authors: I) -> Result<Self, String>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        if year <= 0 {
            return Err(format!("year must be positive, got {year}"));
        }
        let mut seen = HashSet::new();
        let mut list = Vec::new();
        for a in authors {
            let name = a.as_ref().trim();
            if name.is_empty() {
                continue;
            }
            if seen.insert(name.to_string()) {
                list.push(name.to_string());
            }
        }
        if list.is_empty() {
            return Err("record has no authors".into());
        }
        Ok(Publication {
            id: id.into(),
            year,
            authors: list,
        })
    }
}

/// Result of parsing one input: the accepted records and how many candidate
/// records were skipped in lenient mode.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParseOutcome {
    pub publications: Vec<Publication>,
    pub skipped: usize,
}

impl ParseOutcome {
    pub fn candidates(&self) -> usize {
        self.publications.len() + self.skipped
    }

    pub fn extend(&mut self, other: ParseOutcome) {
        self.publications.extend(other.publications);
        self.skipped += other.skipped;
    }

    fn reject(&mut self, mode: ParseMode, err: IngestError) -> Result<(), IngestError> {
        match mode {
            ParseMode::Strict => Err(err),
            ParseMode::Lenient => {
                self.skipped += 1;
                Ok(())
            }
        }
    }
}

#[derive(Deserialize)]
struct JsonRecord {
    id: String,
    year: i64,
    authors: Vec<String>,
}

pub fn parse_jsonl<R: BufRead>(input: R, mode: ParseMode) -> Result<ParseOutcome, IngestError> {
    let mut out = ParseOutcome::default();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<JsonRecord>(&line)
            .map_err(|e| e.to_string())
            .and_then(|r| {
                let year = i32::try_from(r.year).map_err(|_| format!("year {} out of range", r.year))?;
                Publication::new(r.id, year, r.authors)
            });
        match parsed {
            Ok(p) => out.publications.push(p),
            Err(reason) => out.reject(mode, IngestError::Malformed { line: lineno, reason })?,
        }
    }
    Ok(out)
}

pub fn parse_csv<R: BufRead>(input: R, mode: ParseMode) -> Result<ParseOutcome, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut out = ParseOutcome::default();
    let mut records = reader.records();

    match records.next() {
        None => return Ok(out),
        Some(header) => {
            let header = header.map_err(|e| csv_error(e, 1))?;
            let cols: Vec<&str> = header.iter().map(str::trim).collect();
            if cols != ["id", "year", "authors"] {
                return Err(IngestError::Header(cols.join(",")));
            }
        }
    }

    for rec in records {
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
                out.reject(mode, csv_error(e, line))?;
                continue;
            }
        };
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.len() == 1 && rec[0].trim().is_empty() {
            continue;
        }
        let parsed = if rec.len() != 3 {
            Err(format!("expected 3 columns, found {}", rec.len()))
        } else {
            rec[1]
                .trim()
                .parse::<i32>()
                .map_err(|_| format!("non-integer year `{}`", &rec[1]))
                .and_then(|year| Publication::new(rec[0].trim(), year, rec[2].split(';')))
        };
        match parsed {
            Ok(p) => out.publications.push(p),
            Err(reason) => out.reject(mode, IngestError::Malformed { line, reason })?,
        }
    }
    Ok(out)
}

fn csv_error(e: csv::Error, line: usize) -> IngestError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => IngestError::Io(io),
        other => IngestError::Malformed {
            line,
            reason: format!("{other:?}"),
        },
    }
}

/// Resolves the five XML built-in entities and numeric character
/// references. Any other `&name;` reference is kept verbatim.
pub fn unescape_xml_text(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut rest = raw;
    while let Some(pos) = rest.find('&') {
        out.push_str(&rest[..pos]);
        let tail = &rest[pos..];
        let Some(end) = tail.find(';') else {
            out.push_str(tail);
            return out;
        };
        let name = &tail[1..end];
        let resolved = match name {
            "lt" => Some('<'),
            "gt" => Some('>'),
            "amp" => Some('&'),
            "apos" => Some('\''),
            "quot" => Some('"'),
            _ => name
                .strip_prefix("#x")
                .or_else(|| name.strip_prefix("#X"))
                .and_then(|hex| u32::from_str_radix(hex, 16).ok())
                .or_else(|| name.strip_prefix('#').and_then(|d| d.parse::<u32>().ok()))
                .and_then(char::from_u32),
        };
        match resolved {
            Some(c) => out.push(c),
            None => out.push_str(&tail[..=end]),
        }
        rest = &tail[end + 1..];
    }
    out.push_str(rest);
    out
}

#[derive(Default)]
struct PendingRecord {
    key: Option<String>,
    authors: Vec<String>,
    year: Option<String>,
}

#[derive(Clone, Copy, PartialEq)]
enum Field {
    Author,
    Year,
}

/// Parses DBLP-style XML. Only `author` children count as authors; `editor`
/// elements are ignored.
pub fn parse_dblp_xml<R: BufRead>(input: R, mode: ParseMode) -> Result<ParseOutcome, IngestError> {
    let mut reader = Reader::from_reader(input);
    reader.config_mut().check_end_names = true;
    let mut buf = Vec::new();
    let mut out = ParseOutcome::default();

    let mut depth = 0usize;
    let mut record: Option<(usize, PendingRecord)> = None;
    let mut field: Option<(Field, String)> = None;

    let xml_err = |reader: &Reader<R>, reason: String| IngestError::Xml {
        position: reader.buffer_position(),
        reason,
    };

    loop {
        let event = reader
            .read_event_into(&mut buf)
            .map_err(|e| IngestError::Xml {
                position: reader.error_position(),
                reason: e.to_string(),
            })?;
        match event {
            Event::Start(ref e) => {
                depth += 1;
                let name = e.local_name();
                let name = name.as_ref();
                if record.is_none() {
                    if is_record_element(name) {
                        record = Some((depth, start_record(e)));
                    }
                } else if field.is_none() && depth == record.as_ref().map_or(0, |r| r.0) + 1 {
                    field = match name {
                        b"author" => Some((Field::Author, String::new())),
                        b"year" => Some((Field::Year, String::new())),
                        _ => None,
                    };
                }
            }
            Event::Empty(ref e) => {
                if record.is_none() && is_record_element(e.local_name().as_ref()) {
                    // a self-closing record carries neither authors nor year
                    out.reject(
                        mode,
                        xml_err(&reader, "record element without content".into()),
                    )?;
                }
            }
            Event::Text(ref t) => {
                if let Some((_, text)) = field.as_mut() {
                    let raw = std::str::from_utf8(t.as_ref())
                        .map_err(|e| xml_err(&reader, e.to_string()))?;
                    text.push_str(&unescape_xml_text(raw));
                }
            }
            Event::CData(ref t) => {
                if let Some((_, text)) = field.as_mut() {
                    let raw = std::str::from_utf8(t.as_ref())
                        .map_err(|e| xml_err(&reader, e.to_string()))?;
                    text.push_str(raw);
                }
            }
            Event::End(_) => {
                if depth == 0 {
                    return Err(xml_err(&reader, "unbalanced end tag".into()));
                }
                let record_depth = record.as_ref().map(|r| r.0);
                if let Some(rd) = record_depth {
                    if depth == rd + 1 {
                        if let (Some((kind, text)), Some((_, rec))) = (field.take(), record.as_mut()) {
                            match kind {
                                Field::Author => rec.authors.push(text),
                                Field::Year => rec.year = Some(text),
                            }
                        }
                    } else if depth == rd {
                        let (_, rec) = record.take().expect("record open");
                        match finish_record(rec) {
                            Ok(p) => out.publications.push(p),
                            Err(reason) => out.reject(mode, xml_err(&reader, reason))?,
                        }
                    }
                }
                depth -= 1;
            }
            Event::Eof => {
                if depth != 0 {
                    return Err(xml_err(&reader, "unexpected end of document".into()));
                }
                break;
            }
            _ => {}
        }
        buf.clear();
    }
    Ok(out)
}

fn is_record_element(name: &[u8]) -> bool {
    DBLP_RECORD_ELEMENTS.iter().any(|r| r.as_bytes() == name)
}

fn start_record(e: &BytesStart<'_>) -> PendingRecord {
    let key = e
        .attributes()
        .flatten()
        .find(|a| a.key.as_ref() == b"key")
        .and_then(|a| std::str::from_utf8(&a.value).ok().map(unescape_xml_text));
    PendingRecord {
        key,
        ..PendingRecord::default()
    }
}

fn finish_record(rec: PendingRecord) -> Result<Publication, String> {
    let key = rec.key.ok_or("record without key attribute")?;
    let year_text = rec.year.ok_or_else(|| format!("record {key} has no year"))?;
    let year = year_text
        .trim()
        .parse::<i32>()
        .map_err(|_| format!("record {key}: unparseable year `{}`", year_text.trim()))?;
    Publication::new(key.clone(), year, rec.authors).map_err(|e| format!("record {key}: {e}"))
}

pub fn parse<R: BufRead>(input: R, format: InputFormat, mode: ParseMode) -> Result<ParseOutcome, IngestError> {
    match format {
        InputFormat::Jsonl => parse_jsonl(input, mode),
        InputFormat::Csv => parse_csv(input, mode),
        InputFormat::DblpXml => parse_dblp_xml(input, mode),
    }
}

/// Writes publications as normalised JSONL, one object per line.
pub fn write_jsonl<W: Write>(mut out: W, pubs: &[Publication]) -> std::io::Result<()> {
    for p in pubs {
        serde_json::to_writer(&mut out, p)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct YearBuckets {
    pub buckets: BTreeMap<i32, Vec<Publication>>,
    pub total_count: usize,
    pub skipped_count: usize,
}

impl YearBuckets {
    pub fn get(&self, year: i32) -> &[Publication] {
        self.buckets.get(&year).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Groups publications by year, dropping (and counting) those outside the
/// optional inclusive range.
pub fn bucket_by_year(
    pubs: Vec<Publication>,
    range: Option<(i32, i32)>,
) -> Result<YearBuckets, IngestError> {
    if let Some((min, max)) = range {
        if min > max {
            return Err(IngestError::YearRange { min, max });
        }
    }
    let mut out = YearBuckets::default();
    for p in pubs {
        if range.is_some_and(|(min, max)| p.year < min || p.year > max) {
            out.skipped_count += 1;
            continue;
        }
        out.total_count += 1;
        out.buckets.entry(p.year).or_default().push(p);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jsonl(s: &str, mode: ParseMode) -> Result<ParseOutcome, IngestError> {
        parse_jsonl(s.as_bytes(), mode)
    }

    #[test]
    fn jsonl_direct_mapping() {
        let out = jsonl(r#"{"id":"p1","year":1994,"authors":["A","B"]}"#, ParseMode::Lenient).unwrap();
        assert_eq!(out.publications, vec![Publication::new("p1", 1994, ["A", "B"]).unwrap()]);
    }

    #[test]
    fn jsonl_dedupes_authors() {
        let out = jsonl(r#"{"id":"p2","year":1994,"authors":["A","A","B"]}"#, ParseMode::Lenient).unwrap();
        assert_eq!(out.publications[0].authors, vec!["A", "B"]);
    }

    #[test]
    fn jsonl_empty_authors_lenient_and_strict() {
        let line = r#"{"id":"p3","year":1994,"authors":[]}"#;
        let out = jsonl(line, ParseMode::Lenient).unwrap();
        assert!(out.publications.is_empty());
        assert_eq!(out.skipped, 1);
        let err = jsonl(line, ParseMode::Strict).unwrap_err();
        assert!(matches!(err, IngestError::Malformed { line: 1, .. }));
    }

    #[test]
    fn jsonl_blank_lines_and_bad_json() {
        let text = "\n{\"id\":\"a\",\"year\":2000,\"authors\":[\"X\"]}\n\nnot json\n";
        let out = jsonl(text, ParseMode::Lenient).unwrap();
        assert_eq!(out.publications.len(), 1);
        assert_eq!(out.skipped, 1);
        match jsonl(text, ParseMode::Strict) {
            Err(IngestError::Malformed { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn author_names_are_trimmed_only() {
        let p = Publication::new("x", 1, ["  Ana  ", "ana", "Ana"]).unwrap();
        assert_eq!(p.authors, vec!["Ana", "ana"]);
        assert!(Publication::new("x", 0, ["A"]).is_err());
    }

    #[test]
    fn csv_cases() {
        let out = parse_csv("id,year,authors\np1,1994,A;B;C\n".as_bytes(), ParseMode::Lenient).unwrap();
        assert_eq!(out.publications[0], Publication::new("p1", 1994, ["A", "B", "C"]).unwrap());

        let out = parse_csv("id,year,authors\np2,199x,A\n".as_bytes(), ParseMode::Lenient).unwrap();
        assert!(out.publications.is_empty());
        assert_eq!(out.skipped, 1);
        assert!(parse_csv("id,year,authors\np2,199x,A\n".as_bytes(), ParseMode::Strict).is_err());

        let out = parse_csv("id,year,authors\n".as_bytes(), ParseMode::Lenient).unwrap();
        assert_eq!(out, ParseOutcome::default());
    }

    #[test]
    fn csv_missing_column_and_bad_header() {
        let out = parse_csv("id,year,authors\np1,1994\np2,1995,A\n".as_bytes(), ParseMode::Lenient).unwrap();
        assert_eq!(out.publications.len(), 1);
        assert_eq!(out.skipped, 1);
        assert!(matches!(
            parse_csv("a,b,c\n".as_bytes(), ParseMode::Lenient),
            Err(IngestError::Header(_))
        ));
    }

    #[test]
    fn csv_quoted_authors() {
        let out = parse_csv("id,year,authors\n\"p,1\",2001,\"Doe, J.;Roe, R.\"\n".as_bytes(), ParseMode::Strict).unwrap();
        assert_eq!(out.publications[0].id, "p,1");
        assert_eq!(out.publications[0].authors, vec!["Doe, J.", "Roe, R."]);
    }

    #[test]
    fn dblp_single_article() {
        let xml = r#"<dblp><article key="x/Y94"><author>A</author><author>B</author><title>T</title><year>1994</year></article></dblp>"#;
        let out = parse_dblp_xml(xml.as_bytes(), ParseMode::Lenient).unwrap();
        assert_eq!(out.publications, vec![Publication::new("x/Y94", 1994, ["A", "B"]).unwrap()]);
    }

    #[test]
    fn dblp_skips_authorless_and_bad_year() {
        let xml = r#"<dblp>
            <article key="a"><title>no authors</title><year>1990</year></article>
            <inproceedings key="b"><author>A</author><year>1991</year></inproceedings>
            <book key="c"><author>B</author><year>19x1</year></book>
        </dblp>"#;
        let out = parse_dblp_xml(xml.as_bytes(), ParseMode::Lenient).unwrap();
        assert_eq!(out.publications.len(), 1);
        assert_eq!(out.skipped, 2);
        assert!(parse_dblp_xml(xml.as_bytes(), ParseMode::Strict).is_err());
    }

    #[test]
    fn dblp_two_records_one_malformed_year() {
        let xml = r#"<dblp><article key="a"><author>A</author><year>1994</year></article><article key="b"><author>B</author><year>n/a</year></article></dblp>"#;
        let out = parse_dblp_xml(xml.as_bytes(), ParseMode::Lenient).unwrap();
        assert_eq!(out.publications.len(), 1);
        assert_eq!(out.skipped, 1);
    }

    #[test]
    fn dblp_entities_and_editors() {
        let xml = r#"<?xml version="1.0"?>
<!DOCTYPE dblp SYSTEM "dblp.dtd">
<dblp><proceedings key="conf/x"><editor>Ed</editor><author>M&uuml;ller &amp; Co</author><author>&#233;mile</author><year> 2001 </year></proceedings></dblp>"#;
        let out = parse_dblp_xml(xml.as_bytes(), ParseMode::Strict).unwrap();
        assert_eq!(out.publications[0].authors, vec!["M&uuml;ller & Co", "émile"]);
        assert_eq!(out.publications[0].year, 2001);
    }

    #[test]
    fn dblp_not_well_formed() {
        let xml = "<dblp><article key=\"a\"><author>A</year></article></dblp>";
        assert!(matches!(
            parse_dblp_xml(xml.as_bytes(), ParseMode::Lenient),
            Err(IngestError::Xml { .. })
        ));
        let truncated = "<dblp><article key=\"a\"><author>A</author>";
        assert!(matches!(
            parse_dblp_xml(truncated.as_bytes(), ParseMode::Lenient),
            Err(IngestError::Xml { .. })
        ));
    }

    #[test]
    fn unescape_passes_unknown_entities() {
        assert_eq!(unescape_xml_text("a &lt;b&gt; &eacute; &#x41; & x"), "a <b> &eacute; A & x");
    }

    fn pubs(years: &[i32]) -> Vec<Publication> {
        years
            .iter()
            .enumerate()
            .map(|(i, y)| Publication::new(format!("p{i}"), *y, ["A"]).unwrap())
            .collect()
    }

    #[test]
    fn bucket_grouping_and_range() {
        let b = bucket_by_year(pubs(&[1994, 1994, 1995]), None).unwrap();
        assert_eq!(b.get(1994).len(), 2);
        assert_eq!(b.get(1995).len(), 1);
        assert_eq!(b.total_count, 3);

        let b = bucket_by_year(pubs(&[1994, 1994, 1995]), Some((1995, 1995))).unwrap();
        assert_eq!(b.buckets.len(), 1);
        assert_eq!(b.get(1995).len(), 1);
        assert_eq!(b.skipped_count, 2);

        let b = bucket_by_year(Vec::new(), None).unwrap();
        assert!(b.buckets.is_empty());
        assert!(bucket_by_year(Vec::new(), Some((2000, 1999))).is_err());
    }
}
