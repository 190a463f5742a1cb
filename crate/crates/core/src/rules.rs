//! Pairwise association rules `A => B` with support, confidence and lift.
//!
//! Counts are exact integers. Threshold tests are done by integer
//! cross-multiplication against thresholds held as exact decimal fractions,
//! so a rule sitting exactly on a boundary is classified the same way on
//! every platform. Reported values are doubles.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::format::fmt_g12;

#[derive(Debug, Error, PartialEq)]
pub enum RuleError {
    #[error("no transactions")]
    EmptyCorpus,
    #[error("author `{0}` never occurs as antecedent")]
    UnknownAntecedent(String),
    #[error("author `{0}` never occurs as consequent")]
    UnknownConsequent(String),
    #[error("invalid threshold `{0}`: {1}")]
    Threshold(String, &'static str),
    #[error("rules csv line {line}: {reason}")]
    Csv { line: usize, reason: String },
}

const MAX_DECIMALS: u32 = 12;

/// A non-negative decimal written with at most twelve fractional digits,
/// stored as an exact fraction `num / den`.
#[derive(Clone, Copy)]
pub struct Fraction {
    num: u128,
    den: u128,
}

impl Fraction {
    pub const ZERO: Fraction = Fraction { num: 0, den: 1 };
    pub const ONE: Fraction = Fraction { num: 1, den: 1 };

    pub fn new(num: u64, den: u64) -> Result<Self, RuleError> {
        if den == 0 {
            return Err(RuleError::Threshold(format!("{num}/{den}"), "zero denominator"));
        }
        Ok(Fraction {
            num: num as u128,
            den: den as u128,
        })
    }

    pub fn from_f64(x: f64) -> Result<Self, RuleError> {
        if !x.is_finite() {
            return Err(RuleError::Threshold(x.to_string(), "not finite"));
        }
        // Display gives the shortest decimal that round-trips
        format!("{x}").parse()
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn numer(self) -> u128 {
        self.num
    }

    pub fn denom(self) -> u128 {
        self.den
    }

    /// `lhs_num / lhs_den >= self`, exactly.
    fn le_ratio(self, lhs_num: u128, lhs_den: u128) -> bool {
        lhs_num * self.den >= self.num * lhs_den
    }

    fn lt_ratio(self, lhs_num: u128, lhs_den: u128) -> bool {
        lhs_num * self.den > self.num * lhs_den
    }
}

impl PartialEq for Fraction {
    fn eq(&self, other: &Self) -> bool {
        self.num * other.den == other.num * self.den
    }
}

impl Eq for Fraction {}

impl FromStr for Fraction {
    type Err = RuleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |why| RuleError::Threshold(s.to_string(), why);
        let t = s.trim();
        let (mantissa, exp) = match t.find(['e', 'E']) {
            Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| bad("bad exponent"))?),
            None => (t, 0),
        };
        if mantissa.starts_with('-') {
            return Err(bad("negative"));
        }
        let mantissa = mantissa.strip_prefix('+').unwrap_or(mantissa);
        let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad("empty"));
        }
        if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(bad("not a decimal number"));
        }
        let digits = format!("{int_part}{frac_part}");
        let digits = digits.trim_start_matches('0');
        let scale = frac_part.len() as i32 - exp;
        let mut num: u128 = if digits.is_empty() {
            0
        } else {
            digits.parse().map_err(|_| bad("too many digits"))?
        };
        let mut den: u128 = 1;
        if scale >= 0 {
            let mut scale = scale as u32;
            while scale > 0 && num.is_multiple_of(10) && num != 0 {
                num /= 10;
                scale -= 1;
            }
            if num == 0 {
                scale = 0;
            }
            if scale > MAX_DECIMALS {
                return Err(bad("more than 12 decimal places"));
            }
            den = 10u128.pow(scale);
        } else {
            num = num
                .checked_mul(10u128.checked_pow((-scale) as u32).ok_or_else(|| bad("too large"))?)
                .ok_or_else(|| bad("too large"))?;
        }
        if num > u64::MAX as u128 {
            return Err(bad("too large"));
        }
        Ok(Fraction { num, den })
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", fmt_g12(self.to_f64()))
    }
}

impl fmt::Debug for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl Serialize for Fraction {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.to_f64())
    }
}

impl<'de> Deserialize<'de> for Fraction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let x = f64::deserialize(d)?;
        Fraction::from_f64(x).map_err(serde::de::Error::custom)
    }
}

/// Mining thresholds. Support and confidence are minima (`>=`); lift must
/// strictly exceed `min_lift`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thresholds {
    pub min_support: Fraction,
    pub min_confidence: Fraction,
    pub min_lift: Fraction,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            min_support: Fraction { num: 1, den: 1000 },
            min_confidence: Fraction { num: 5, den: 100 },
            min_lift: Fraction::ONE,
        }
    }
}

impl Thresholds {
    pub fn new(min_support: f64, min_confidence: f64, min_lift: f64) -> Result<Self, RuleError> {
        let t = Thresholds {
            min_support: Fraction::from_f64(min_support)?,
            min_confidence: Fraction::from_f64(min_confidence)?,
            min_lift: Fraction::from_f64(min_lift)?,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), RuleError> {
        for (name, f) in [("min_support", self.min_support), ("min_confidence", self.min_confidence)] {
            if f.num > f.den {
                return Err(RuleError::Threshold(format!("{name}={f}"), "must be at most 1"));
            }
        }
        Ok(())
    }
}

/// Singleton and pair occurrence counts over one bucket of transactions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairCounts {
    n_transactions: u64,
    /// Sorted, distinct author names; indices below refer to this list.
    authors: Vec<String>,
    singleton: Vec<u64>,
    /// Keyed by `(i, j)` with `i < j`.
    pairs: HashMap<(u32, u32), u64>,
}

impl PairCounts {
    pub fn n_transactions(&self) -> u64 {
        self.n_transactions
    }

    pub fn authors(&self) -> &[String] {
        &self.authors
    }

    fn index(&self, author: &str) -> Option<u32> {
        self.authors
            .binary_search_by(|a| a.as_str().cmp(author))
            .ok()
            .map(|i| i as u32)
    }

    pub fn singleton_count(&self, author: &str) -> u64 {
        self.index(author).map_or(0, |i| self.singleton[i as usize])
    }

    pub fn pair_count(&self, a: &str, b: &str) -> u64 {
        match (self.index(a), self.index(b)) {
            (Some(i), Some(j)) if i != j => self.pairs.get(&(i.min(j), i.max(j))).copied().unwrap_or(0),
            _ => 0,
        }
    }

    /// Number of distinct co-occurring unordered pairs.
    pub fn n_pairs(&self) -> usize {
        self.pairs.len()
    }

    /// Co-occurring pairs as `(a, b, count)` with `a < b`, sorted.
    pub fn pairs(&self) -> Vec<(&str, &str, u64)> {
        let mut v: Vec<_> = self
            .pairs
            .iter()
            .map(|(&(i, j), &c)| (self.authors[i as usize].as_str(), self.authors[j as usize].as_str(), c))
            .collect();
        v.sort_unstable();
        v
    }
}

/// Counts singletons and unordered pairs. Each transaction is treated as a
/// set; repeated names inside one transaction count once.
pub fn count_pairs<T, S>(transactions: &[T]) -> PairCounts
where
    T: AsRef<[S]>,
    S: AsRef<str>,
{
    let mut names: Vec<&str> = transactions
        .iter()
        .flat_map(|t| t.as_ref().iter().map(AsRef::as_ref))
        .collect();
    names.sort_unstable();
    names.dedup();
    let index: HashMap<&str, u32> = names.iter().enumerate().map(|(i, n)| (*n, i as u32)).collect();

    let mut singleton = vec![0u64; names.len()];
    let mut pairs: HashMap<(u32, u32), u64> = HashMap::new();
    let mut ids: Vec<u32> = Vec::new();
    for t in transactions {
        ids.clear();
        ids.extend(t.as_ref().iter().map(|a| index[a.as_ref()]));
        ids.sort_unstable();
        ids.dedup();
        for (k, &i) in ids.iter().enumerate() {
            singleton[i as usize] += 1;
            for &j in &ids[k + 1..] {
                *pairs.entry((i, j)).or_insert(0) += 1;
            }
        }
    }

    PairCounts {
        n_transactions: transactions.len() as u64,
        authors: names.into_iter().map(str::to_owned).collect(),
        singleton,
        pairs,
    }
}

pub fn support(counts: &PairCounts, a: &str, b: &str) -> Result<f64, RuleError> {
    if counts.n_transactions == 0 {
        return Err(RuleError::EmptyCorpus);
    }
    Ok(counts.pair_count(a, b) as f64 / counts.n_transactions as f64)
}

pub fn confidence(counts: &PairCounts, antecedent: &str, consequent: &str) -> Result<f64, RuleError> {
    let na = counts.singleton_count(antecedent);
    if na == 0 {
        return Err(RuleError::UnknownAntecedent(antecedent.to_string()));
    }
    Ok(counts.pair_count(antecedent, consequent) as f64 / na as f64)
}

pub fn lift(counts: &PairCounts, antecedent: &str, consequent: &str) -> Result<f64, RuleError> {
    let conf = confidence(counts, antecedent, consequent)?;
    let nb = counts.singleton_count(consequent);
    if nb == 0 {
        return Err(RuleError::UnknownConsequent(consequent.to_string()));
    }
    Ok(conf / (nb as f64 / counts.n_transactions as f64))
}

/// A mined rule `antecedent => consequent`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub antecedent: String,
    pub consequent: String,
    pub support: f64,
    pub confidence: f64,
    pub lift: f64,
}

impl Rule {
    /// A rule carrying only its direction, for graphs built by hand.
    pub fn bare(antecedent: impl Into<String>, consequent: impl Into<String>) -> Self {
        Rule {
            antecedent: antecedent.into(),
            consequent: consequent.into(),
            support: 0.0,
            confidence: 0.0,
            lift: 0.0,
        }
    }
}

/// Tests one direction of a co-occurring pair against all three thresholds.
fn passes(t: &Thresholds, n: u64, pair: u64, n_ante: u64, n_cons: u64) -> bool {
    let (n, pair, na, nb) = (n as u128, pair as u128, n_ante as u128, n_cons as u128);
    // support = pair / n, confidence = pair / na, lift = pair * n / (na * nb)
    t.min_support.le_ratio(pair, n)
        && t.min_confidence.le_ratio(pair, na)
        && t.min_lift.lt_ratio(pair * n, na * nb)
}

pub fn mine_from_counts(counts: &PairCounts, t: &Thresholds) -> Vec<Rule> {
    let n = counts.n_transactions;
    let mut rules = Vec::new();
    let make = |a: u32, b: u32, pair: u64| {
        let (na, nb) = (counts.singleton[a as usize], counts.singleton[b as usize]);
        passes(t, n, pair, na, nb).then(|| {
            let confidence = pair as f64 / na as f64;
            Rule {
                antecedent: counts.authors[a as usize].clone(),
                consequent: counts.authors[b as usize].clone(),
                support: pair as f64 / n as f64,
                confidence,
                lift: confidence / (nb as f64 / n as f64),
            }
        })
    };
    // Pairs that never co-occur have lift 0, which never exceeds a
    // non-negative min_lift, so only co-occurring pairs are candidates.
    for (&(i, j), &pair) in &counts.pairs {
        rules.extend(make(i, j, pair));
        rules.extend(make(j, i, pair));
    }
    rules.sort_by(|x, y| (&x.antecedent, &x.consequent).cmp(&(&y.antecedent, &y.consequent)));
    rules
}

/// Mines every ordered pair `A => B` passing the thresholds, sorted by
/// `(antecedent, consequent)`.
pub fn mine_rules<T, S>(transactions: &[T], t: &Thresholds) -> Vec<Rule>
where
    T: AsRef<[S]>,
    S: AsRef<str>,
{
    mine_from_counts(&count_pairs(transactions), t)
}

/// Bernoulli sample: keeps each transaction independently with probability
/// `fraction`.
pub fn sample_transactions<T: Clone>(transactions: &[T], fraction: f64, seed: u64) -> Vec<T> {
    if fraction >= 1.0 {
        return transactions.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    transactions
        .iter()
        .filter(|_| rng.gen_bool(fraction.max(0.0)))
        .cloned()
        .collect()
}

pub const RULES_CSV_HEADER: &str = "antecedent,consequent,support,confidence,lift";

pub fn write_rules_csv<W: Write>(out: W, rules: &[Rule]) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(RULES_CSV_HEADER.split(','))?;
    for r in rules {
        w.write_record([
            r.antecedent.as_str(),
            r.consequent.as_str(),
            &fmt_g12(r.support),
            &fmt_g12(r.confidence),
            &fmt_g12(r.lift),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rules_csv<R: BufRead>(input: R) -> Result<Vec<Rule>, RuleError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header_ok = rdr
        .headers()
        .map(|h| h.iter().collect::<Vec<_>>().join(",") == RULES_CSV_HEADER)
        .unwrap_or(false);
    if !header_ok {
        return Err(RuleError::Csv {
            line: 1,
            reason: format!("expected header `{RULES_CSV_HEADER}`"),
        });
    }
    let mut rules = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| RuleError::Csv {
            line: e.position().map_or(0, |p| p.line() as usize),
            reason: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let num = |i: usize| {
            rec[i].parse::<f64>().map_err(|_| RuleError::Csv {
                line,
                reason: format!("`{}` is not a number", &rec[i]),
            })
        };
        rules.push(Rule {
            antecedent: rec[0].to_string(),
            consequent: rec[1].to_string(),
            support: num(2)?,
            confidence: num(3)?,
            lift: num(4)?,
        });
    }
    Ok(rules)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(ts: &[&[&str]]) -> Vec<Vec<String>> {
        ts.iter().map(|t| t.iter().map(|s| s.to_string()).collect()).collect()
    }

    fn abab_ac_b() -> Vec<Vec<String>> {
        corpus(&[&["A", "B"], &["A", "B"], &["A", "C"], &["B"]])
    }

    #[test]
    fn count_pairs_worked_example() {
        let c = count_pairs(&abab_ac_b());
        assert_eq!(c.n_transactions(), 4);
        assert_eq!(c.singleton_count("A"), 3);
        assert_eq!(c.singleton_count("B"), 3);
        assert_eq!(c.singleton_count("C"), 1);
        assert_eq!(c.pair_count("A", "B"), 2);
        assert_eq!(c.pair_count("B", "A"), 2);
        assert_eq!(c.pair_count("A", "C"), 1);
        assert_eq!(c.pair_count("B", "C"), 0);
        assert_eq!(c.n_pairs(), 2);
    }

    #[test]
    fn count_pairs_degenerate() {
        let empty: Vec<Vec<String>> = vec![];
        let c = count_pairs(&empty);
        assert_eq!(c.n_transactions(), 0);
        assert!(c.authors().is_empty());
        let c = count_pairs(&corpus(&[&["A"]]));
        assert_eq!(c.singleton_count("A"), 1);
        assert_eq!(c.n_pairs(), 0);
        // duplicates inside a transaction count once
        let c = count_pairs(&corpus(&[&["A", "A", "B"]]));
        assert_eq!(c.singleton_count("A"), 1);
        assert_eq!(c.pair_count("A", "B"), 1);
    }

    #[test]
    fn measures_worked_example() {
        let c = count_pairs(&abab_ac_b());
        assert_eq!(support(&c, "A", "B").unwrap(), 0.5);
        assert_eq!(support(&c, "B", "C").unwrap(), 0.0);
        assert_eq!(confidence(&c, "A", "B").unwrap(), 2.0 / 3.0);
        assert_eq!(confidence(&c, "B", "A").unwrap(), 2.0 / 3.0);
        assert!((lift(&c, "A", "B").unwrap() - 8.0 / 9.0).abs() < 1e-15);
        assert_eq!(confidence(&c, "C", "B").unwrap(), 0.0);

        let one = count_pairs(&corpus(&[&["A", "B"]]));
        assert_eq!(support(&one, "A", "B").unwrap(), 1.0);

        let c2 = count_pairs(&corpus(&[&["A", "B"], &["A", "B"], &["C"], &["C"]]));
        assert_eq!(lift(&c2, "A", "B").unwrap(), 2.0);
        // independence: P(B|A) = P(B)
        let ind = count_pairs(&corpus(&[&["A", "B"], &["A"], &["B"], &[]]));
        assert_eq!(lift(&ind, "A", "B").unwrap(), 1.0);
    }

    #[test]
    fn measure_errors() {
        let empty: Vec<Vec<String>> = vec![];
        assert_eq!(support(&count_pairs(&empty), "A", "B"), Err(RuleError::EmptyCorpus));
        let c = count_pairs(&abab_ac_b());
        assert!(matches!(confidence(&c, "Z", "A"), Err(RuleError::UnknownAntecedent(_))));
        assert!(matches!(lift(&c, "A", "Z"), Err(RuleError::UnknownConsequent(_))));
    }

    #[test]
    fn mining_examples() {
        let rules = mine_rules(&corpus(&[&["A", "B"], &["A", "B"], &["C"], &["C"]]), &Thresholds::default());
        assert_eq!(rules.len(), 2);
        assert_eq!((rules[0].antecedent.as_str(), rules[0].consequent.as_str()), ("A", "B"));
        assert_eq!((rules[1].antecedent.as_str(), rules[1].consequent.as_str()), ("B", "A"));
        for r in &rules {
            assert_eq!((r.support, r.confidence, r.lift), (0.5, 1.0, 2.0));
        }
        let rules = mine_rules(&abab_ac_b(), &Thresholds::default());
        assert!(!rules.iter().any(|r| r.antecedent == "A" && r.consequent == "B"));
        let empty: Vec<Vec<String>> = vec![];
        assert!(mine_rules(&empty, &Thresholds::default()).is_empty());
    }

    #[test]
    fn boundaries_are_exact() {
        // support exactly 1/1000 passes the default minimum
        let mut ts = vec![vec!["A".to_string(), "B".to_string()]];
        ts.extend((0..999).map(|i| vec![format!("x{i}")]));
        let rules = mine_rules(&ts, &Thresholds::default());
        assert_eq!(rules.len(), 2);
        // lift exactly 1 is rejected
        let c = corpus(&[&["A", "B"], &["A"], &["B"], &["C"]]);
        let t = Thresholds::new(0.0, 0.0, 1.0).unwrap();
        assert!(mine_rules(&c, &t).is_empty());
        let t = Thresholds::new(0.0, 0.0, 0.999).unwrap();
        assert_eq!(mine_rules(&c, &t).len(), 2);
    }

    #[test]
    fn fraction_parsing() {
        let f: Fraction = "0.001".parse().unwrap();
        assert_eq!((f.numer(), f.denom()), (1, 1000));
        let f: Fraction = "5e-2".parse().unwrap();
        assert_eq!(f, Fraction::new(1, 20).unwrap());
        let f: Fraction = "1.50".parse().unwrap();
        assert_eq!((f.numer(), f.denom()), (15, 10));
        assert_eq!("2E3".parse::<Fraction>().unwrap(), Fraction::new(2000, 1).unwrap());
        assert_eq!(Fraction::from_f64(0.05).unwrap(), "0.05".parse().unwrap());
        assert!("-1".parse::<Fraction>().is_err());
        assert!("0.0000000000001".parse::<Fraction>().is_err());
        assert!("abc".parse::<Fraction>().is_err());
        assert!(Thresholds::new(1.5, 0.1, 1.0).is_err());
    }

    #[test]
    fn sampling_is_seeded() {
        let ts: Vec<u32> = (0..1000).collect();
        let a = sample_transactions(&ts, 0.3, 7);
        assert_eq!(a, sample_transactions(&ts, 0.3, 7));
        assert!(a.len() > 200 && a.len() < 400);
        assert_eq!(sample_transactions(&ts, 1.0, 7).len(), 1000);
        assert!(sample_transactions(&ts, 0.0, 7).is_empty());
    }

    #[test]
    fn rules_csv_format() {
        let rules = mine_rules(&abab_ac_b(), &Thresholds::new(0.0, 0.0, 0.0).unwrap());
        let mut buf = Vec::new();
        write_rules_csv(&mut buf, &rules).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("antecedent,consequent,support,confidence,lift\nA,B,0.5,0.666666666667,0.888888888889\n"));
        let back = read_rules_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), rules.len());
        assert_eq!(back[0].antecedent, "A");
        assert!(read_rules_csv("a,b\n".as_bytes()).is_err());
    }
}
