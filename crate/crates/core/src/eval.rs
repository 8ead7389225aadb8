//! TREC-style evaluation: MAP, MRR, P@k and nDCG@k over graded judgments.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{FusionError, Result};
use crate::lines::{read_data_file, read_data_lines, DataLine};
use crate::ranking::RankedList;

/// Graded judgments: query id → object id → grade. Grade 0 means non-relevant.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Qrels {
    judgments: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, query: impl Into<String>, object: impl Into<String>, grade: u32) {
        self.judgments.entry(query.into()).or_default().insert(object.into(), grade);
    }

    pub fn queries(&self) -> impl Iterator<Item = &str> {
        self.judgments.keys().map(String::as_str)
    }

    pub fn grades(&self, query: &str) -> Option<&BTreeMap<String, u32>> {
        self.judgments.get(query)
    }

    pub fn contains_query(&self, query: &str) -> bool {
        self.judgments.contains_key(query)
    }

    /// Parses `query_id 0 object_id grade` lines.
    pub fn parse(lines: &[DataLine], source_name: &str) -> Result<Self> {
        let mut qrels = Qrels::new();
        for line in lines {
            let bad = |msg: &str| FusionError::parse(source_name, line.number, msg);
            let fields: Vec<&str> = line.text.split_whitespace().collect();
            let [query, _iter, object, grade] = fields.as_slice() else {
                return Err(bad("expected `query_id 0 object_id grade`"));
            };
            let grade: i64 = grade.parse().map_err(|_| bad("grade is not an integer"))?;
            let grade = u32::try_from(grade).map_err(|_| bad("grade must be a non-negative integer"))?;
            let per_query = qrels.judgments.entry((*query).to_owned()).or_default();
            match per_query.get(*object) {
                Some(&g) if g != grade => return Err(bad("conflicting judgment for the same object")),
                _ => {
                    per_query.insert((*object).to_owned(), grade);
                }
            }
        }
        Ok(qrels)
    }

    pub fn parse_str(input: &str) -> Result<Self> {
        let lines = read_data_lines(input.as_bytes(), "<qrels>")?;
        Self::parse(&lines, "<qrels>")
    }

    pub fn read(path: &Path) -> Result<Self> {
        let lines = read_data_file(path)?;
        Self::parse(&lines, &path.display().to_string())
    }
}

/// Ranked results per query.
pub type Run = BTreeMap<String, RankedList>;

/// Parses TREC run lines `query_id Q0 object_id rank score tag`.
///
/// Each query's results are re-sorted by descending score with ties broken by
/// ascending object id; the rank column is validated but not used for ordering.
pub fn parse_run(lines: &[DataLine], source_name: &str) -> Result<Run> {
    let mut per_query: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    for line in lines {
        let bad = |msg: &str| FusionError::parse(source_name, line.number, msg);
        let fields: Vec<&str> = line.text.split_whitespace().collect();
        let [query, _q0, object, rank, score, _tag] = fields.as_slice() else {
            return Err(bad("expected `query_id Q0 object_id rank score tag`"));
        };
        rank.parse::<u64>().map_err(|_| bad("rank is not a non-negative integer"))?;
        let score: f64 = score.parse().map_err(|_| bad("score is not a number"))?;
        if score.is_nan() {
            return Err(bad("score is NaN"));
        }
        if !seen.insert(((*query).to_owned(), (*object).to_owned())) {
            return Err(bad("object listed twice for the same query"));
        }
        per_query
            .entry((*query).to_owned())
            .or_default()
            .push(((*object).to_owned(), score));
    }
    Ok(per_query
        .into_iter()
        .map(|(q, scores)| (q, RankedList::from_scores(scores, None)))
        .collect())
}

pub fn parse_run_str(input: &str) -> Result<Run> {
    let lines = read_data_lines(input.as_bytes(), "<run>")?;
    parse_run(&lines, "<run>")
}

pub fn read_run(path: &Path) -> Result<Run> {
    let lines = read_data_file(path)?;
    parse_run(&lines, &path.display().to_string())
}

/// Fraction of the first `k` positions holding relevant objects. The
/// denominator is always `k`.
pub fn precision_at_k<'a, I>(ranking: I, relevant: &HashSet<&str>, k: usize) -> f64
where
    I: IntoIterator<Item = &'a str>,
{
    assert!(k >= 1, "precision cutoff must be positive");
    let hits = ranking.into_iter().take(k).filter(|id| relevant.contains(id)).count();
    hits as f64 / k as f64
}

pub fn reciprocal_rank<'a, I>(ranking: I, relevant: &HashSet<&str>) -> f64
where
    I: IntoIterator<Item = &'a str>,
{
    ranking
        .into_iter()
        .position(|id| relevant.contains(id))
        .map_or(0.0, |i| 1.0 / (i + 1) as f64)
}

/// Average precision; `None` when there are no relevant objects.
pub fn average_precision<'a, I>(ranking: I, relevant: &HashSet<&str>) -> Option<f64>
where
    I: IntoIterator<Item = &'a str>,
{
    if relevant.is_empty() {
        return None;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, id) in ranking.into_iter().enumerate() {
        if relevant.contains(id) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Some(sum / relevant.len() as f64)
}

/// Gain applied to a relevance grade in nDCG.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GainKind {
    /// `2^grade - 1`
    #[default]
    Exponential,
    /// `grade`
    Linear,
}

impl GainKind {
    fn gain(self, grade: u32) -> f64 {
        match self {
            GainKind::Exponential => 2f64.powi(grade as i32) - 1.0,
            GainKind::Linear => f64::from(grade),
        }
    }
}

impl FromStr for GainKind {
    type Err = FusionError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exponential" | "exp" => Ok(GainKind::Exponential),
            "linear" => Ok(GainKind::Linear),
            _ => Err(FusionError::InvalidParameter(format!("unknown gain `{s}`"))),
        }
    }
}

fn dcg(gains: impl Iterator<Item = f64>) -> f64 {
    gains
        .enumerate()
        .fold(0.0, |acc, (i, g)| acc + g / ((i + 2) as f64).log2())
}

/// nDCG at cutoff `k` with a `log2(i+1)` discount; `None` when no grade is positive.
pub fn ndcg_at_k<'a, I>(ranking: I, grades: &BTreeMap<String, u32>, k: usize, gain: GainKind) -> Option<f64>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut ideal: Vec<u32> = grades.values().copied().filter(|&g| g > 0).collect();
    if ideal.is_empty() {
        return None;
    }
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg = dcg(ideal.into_iter().take(k).map(|g| gain.gain(g)));
    let actual = dcg(
        ranking
            .into_iter()
            .take(k)
            .map(|id| gain.gain(grades.get(id).copied().unwrap_or(0))),
    );
    Some(actual / idcg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    AveragePrecision,
    ReciprocalRank,
    Precision(usize),
    Ndcg(usize),
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::AveragePrecision => f.write_str("map"),
            Metric::ReciprocalRank => f.write_str("mrr"),
            Metric::Precision(k) => write!(f, "P@{k}"),
            Metric::Ndcg(k) => write!(f, "ndcg@{k}"),
        }
    }
}

impl FromStr for Metric {
    type Err = FusionError;

    fn from_str(s: &str) -> Result<Self> {
        let cutoff = |k: &str| {
            k.parse::<usize>()
                .ok()
                .filter(|&k| k > 0)
                .ok_or_else(|| FusionError::InvalidParameter(format!("bad cutoff in metric `{s}`")))
        };
        match s {
            "map" => Ok(Metric::AveragePrecision),
            "mrr" => Ok(Metric::ReciprocalRank),
            _ => {
                if let Some(k) = s.strip_prefix("P@") {
                    Ok(Metric::Precision(cutoff(k)?))
                } else if let Some(k) = s.strip_prefix("ndcg@") {
                    Ok(Metric::Ndcg(cutoff(k)?))
                } else {
                    Err(FusionError::InvalidParameter(format!("unknown metric `{s}`")))
                }
            }
        }
    }
}

/// Which metrics to compute, in report order.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricConfig {
    pub metrics: Vec<Metric>,
    pub gain: GainKind,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            metrics: vec![
                Metric::AveragePrecision,
                Metric::ReciprocalRank,
                Metric::Precision(5),
                Metric::Precision(10),
                Metric::Ndcg(20),
            ],
            gain: GainKind::Exponential,
        }
    }
}

/// Per-query and mean metric values.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub metrics: Vec<Metric>,
    pub per_query: BTreeMap<String, BTreeMap<Metric, f64>>,
    pub means: BTreeMap<Metric, f64>,
    /// Number of queries averaged over.
    pub num_queries: usize,
    /// Judged queries without any relevant object, left out of the means.
    pub excluded_no_relevant: Vec<String>,
    /// Run queries that have no judgments.
    pub ignored_unjudged: Vec<String>,
}

impl MetricReport {
    pub fn mean(&self, metric: Metric) -> Option<f64> {
        self.means.get(&metric).copied()
    }

    pub fn value(&self, query: &str, metric: Metric) -> Option<f64> {
        self.per_query.get(query)?.get(&metric).copied()
    }

    /// `metric<TAB>query<TAB>value` lines, then `metric<TAB>all<TAB>mean`; four decimals.
    pub fn write<W: Write + ?Sized>(&self, out: &mut W) -> io::Result<()> {
        for (query, values) in &self.per_query {
            for m in &self.metrics {
                writeln!(out, "{m}\t{query}\t{:.4}", values[m])?;
            }
        }
        for m in &self.metrics {
            if let Some(v) = self.means.get(m) {
                writeln!(out, "{m}\tall\t{v:.4}")?;
            }
        }
        Ok(())
    }
}

/// Evaluates `run` against `qrels`.
///
/// Judged queries missing from the run score 0 on every metric.
pub fn evaluate_run(run: &Run, qrels: &Qrels, config: &MetricConfig) -> Result<MetricReport> {
    if run.is_empty() {
        return Err(FusionError::EmptyRun);
    }
    if !run.keys().any(|q| qrels.contains_query(q)) {
        return Err(FusionError::DisjointQueries);
    }

    let empty = RankedList::default();
    let mut per_query = BTreeMap::new();
    let mut excluded_no_relevant = Vec::new();
    for (query, grades) in &qrels.judgments {
        let relevant: HashSet<&str> = grades
            .iter()
            .filter(|(_, &g)| g > 0)
            .map(|(o, _)| o.as_str())
            .collect();
        if relevant.is_empty() {
            excluded_no_relevant.push(query.clone());
            continue;
        }
        let ranking = run.get(query).unwrap_or(&empty);
        let values: BTreeMap<Metric, f64> = config
            .metrics
            .iter()
            .map(|&m| {
                let v = match m {
                    Metric::AveragePrecision => average_precision(ranking.ids(), &relevant).unwrap_or(0.0),
                    Metric::ReciprocalRank => reciprocal_rank(ranking.ids(), &relevant),
                    Metric::Precision(k) => precision_at_k(ranking.ids(), &relevant, k),
                    Metric::Ndcg(k) => ndcg_at_k(ranking.ids(), grades, k, config.gain).unwrap_or(0.0),
                };
                (m, v)
            })
            .collect();
        per_query.insert(query.clone(), values);
    }

    let num_queries = per_query.len();
    let means = if num_queries == 0 {
        BTreeMap::new()
    } else {
        config
            .metrics
            .iter()
            .map(|&m| {
                let sum: f64 = per_query.values().map(|v: &BTreeMap<Metric, f64>| v[&m]).sum();
                (m, sum / num_queries as f64)
            })
            .collect()
    };
    let ignored_unjudged = run.keys().filter(|q| !qrels.contains_query(q)).cloned().collect();

    Ok(MetricReport {
        metrics: config.metrics.clone(),
        per_query,
        means,
        num_queries,
        excluded_no_relevant,
        ignored_unjudged,
    })
}
