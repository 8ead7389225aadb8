//! End-to-end pipelines behind the command-line tool: ranking a query file,
//! evaluating a run file, and sweeping the fusion × model × association grid.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::associations::{read_associations, AssocMode, AssociationTable, LoadReport};
use crate::early::ObjectIndex;
use crate::error::{FusionError, Result};
use crate::eval::{evaluate_run, read_run, Metric, MetricConfig, MetricReport, Qrels, Run};
use crate::late::{rank_objects_late, AggregationSpec, ScoreTransform, DEFAULT_TOP_K};
use crate::lines::{read_data_file, read_data_lines, split_tab_record, DataLine};
use crate::ranking::RankedList;
use crate::scoring::{ModelParams, RetrievalModel};
use crate::text::{DocumentIndex, Term, Tokenizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Fusion {
    /// Term-level aggregation into pseudo-objects.
    Early,
    /// Document-level score aggregation.
    Late,
}

impl Fusion {
    pub fn name(self) -> &'static str {
        match self {
            Fusion::Early => "early",
            Fusion::Late => "late",
        }
    }
}

impl fmt::Display for Fusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Fusion {
    type Err = FusionError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "early" => Ok(Fusion::Early),
            "late" => Ok(Fusion::Late),
            _ => Err(FusionError::InvalidParameter(format!("unknown fusion strategy `{s}`"))),
        }
    }
}

pub const DEFAULT_DEPTH: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub fusion: Fusion,
    pub model: RetrievalModel,
    pub assoc: AssocMode,
    pub params: ModelParams,
    /// Late fusion only.
    pub transform: ScoreTransform,
    /// Late fusion only: documents considered per query.
    pub top_k_docs: usize,
    /// Maximum results written per query.
    pub output_depth: usize,
    pub run_tag: String,
}

impl RunConfig {
    pub fn new(fusion: Fusion, model: RetrievalModel, assoc: AssocMode) -> Self {
        Self {
            fusion,
            model,
            assoc,
            params: ModelParams::default(),
            transform: ScoreTransform::Raw,
            top_k_docs: DEFAULT_TOP_K,
            output_depth: DEFAULT_DEPTH,
            run_tag: format!("{fusion}_{model}_{assoc}"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.top_k_docs == 0 || self.output_depth == 0 {
            return Err(FusionError::InvalidParameter("cutoffs must be positive".into()));
        }
        if self.run_tag.is_empty() || self.run_tag.chars().any(char::is_whitespace) {
            return Err(FusionError::InvalidParameter("run tag must be a non-empty word".into()));
        }
        Ok(())
    }

    fn aggregation(&self) -> AggregationSpec {
        AggregationSpec {
            transform: self.transform,
            top_k: Some(self.top_k_docs),
            mode: self.assoc,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::new(Fusion::Early, RetrievalModel::Lm, AssocMode::Binary)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub id: String,
    pub text: String,
}

/// Parses `query_id<TAB>query text` lines, keeping file order.
pub fn parse_queries(lines: &[DataLine], source_name: &str) -> Result<Vec<Query>> {
    let mut seen = std::collections::HashSet::new();
    lines
        .iter()
        .map(|line| {
            let (id, text) = split_tab_record(line, source_name)?;
            if !seen.insert(id.to_owned()) {
                return Err(FusionError::parse(source_name, line.number, format!("duplicate query id `{id}`")));
            }
            Ok(Query {
                id: id.to_owned(),
                text: text.to_owned(),
            })
        })
        .collect()
}

pub fn read_queries(path: &Path) -> Result<Vec<Query>> {
    let lines = read_data_file(path)?;
    parse_queries(&lines, &path.display().to_string())
}

pub fn parse_queries_str(input: &str) -> Result<Vec<Query>> {
    let lines = read_data_lines(input.as_bytes(), "<queries>")?;
    parse_queries(&lines, "<queries>")
}

/// A document collection together with its object associations.
#[derive(Debug)]
pub struct Collection {
    pub index: DocumentIndex,
    pub table: AssociationTable,
    pub tokenizer: Tokenizer,
    pub load_report: LoadReport,
}

impl Collection {
    pub fn load(corpus: &Path, associations: &Path, tokenizer: Tokenizer, lenient: bool) -> Result<Self> {
        let index = DocumentIndex::read_corpus(corpus, &tokenizer)?;
        let records = read_associations(associations)?;
        let (table, load_report) = AssociationTable::load(records, &index, lenient)?;
        Ok(Self {
            index,
            table,
            tokenizer,
            load_report,
        })
    }

    pub fn object_index(&self, mode: AssocMode) -> ObjectIndex<'_> {
        ObjectIndex::build(&self.index, &self.table, mode)
    }

    /// Ranks every query. `objects` must be supplied for early fusion and must
    /// have been built with `config.assoc`.
    pub fn rank_queries(
        &self,
        queries: &[Query],
        config: &RunConfig,
        objects: Option<&ObjectIndex<'_>>,
    ) -> Result<Vec<QueryOutcome>> {
        if config.fusion == Fusion::Early {
            let objects = objects.ok_or_else(|| FusionError::InvalidParameter("early fusion needs an object index".into()))?;
            if objects.mode() != config.assoc {
                return Err(FusionError::InvalidParameter(format!(
                    "object index built with {} associations, run asks for {}",
                    objects.mode(),
                    config.assoc
                )));
            }
        }
        queries
            .par_iter()
            .map(|q| {
                let terms = self.tokenizer.tokenize(&q.text);
                if terms.is_empty() {
                    return Ok(QueryOutcome::Empty);
                }
                let ranked = self.rank_terms(&terms, config, objects)?;
                Ok(if ranked.is_empty() {
                    QueryOutcome::NoMatch
                } else {
                    QueryOutcome::Ranked(ranked)
                })
            })
            .collect()
    }

    fn rank_terms(&self, terms: &[Term], config: &RunConfig, objects: Option<&ObjectIndex<'_>>) -> Result<RankedList> {
        let depth = Some(config.output_depth);
        match config.fusion {
            Fusion::Early => objects
                .expect("checked by rank_queries")
                .rank(terms, config.model, &config.params, depth),
            Fusion::Late => rank_objects_late(
                &self.index,
                &self.table,
                terms,
                config.model,
                &config.params,
                &config.aggregation(),
                depth,
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum QueryOutcome {
    Ranked(RankedList),
    /// The query has no terms after tokenization.
    Empty,
    /// No object matched any query term.
    NoMatch,
}

impl QueryOutcome {
    pub fn ranked(&self) -> Option<&RankedList> {
        match self {
            QueryOutcome::Ranked(r) => Some(r),
            _ => None,
        }
    }
}

/// Paths of the three ranking inputs.
#[derive(Debug, Clone)]
pub struct RankInputs {
    pub corpus: PathBuf,
    pub associations: PathBuf,
    pub queries: PathBuf,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RankSummary {
    pub ranked: usize,
    pub empty_queries: Vec<String>,
    pub unmatched_queries: Vec<String>,
}

fn report_load<D: Write + ?Sized>(collection: &Collection, diag: &mut D) -> Result<()> {
    let r = &collection.load_report;
    if r.dropped_unknown_docs > 0 {
        diag_line(diag, format_args!("warning: dropped {} edges naming unknown documents", r.dropped_unknown_docs))?;
    }
    Ok(())
}

fn diag_line<D: Write + ?Sized>(diag: &mut D, args: fmt::Arguments<'_>) -> Result<()> {
    writeln!(diag, "{args}").map_err(|e| FusionError::io("<diagnostics>", e))
}

fn out_err(e: std::io::Error) -> FusionError {
    FusionError::io("<output>", e)
}

/// Loads the early-fusion object index, going through `cache` when given: an
/// existing cache file is read, a missing one is written after building.
fn object_index_with_cache<'a, D: Write + ?Sized>(
    collection: &'a Collection,
    mode: AssocMode,
    cache: Option<&Path>,
    diag: &mut D,
) -> Result<ObjectIndex<'a>> {
    let objects = match cache {
        Some(path) if path.exists() => {
            let file = File::open(path).map_err(|e| FusionError::io(path, e))?;
            let objects = ObjectIndex::read_cache(BufReader::new(file), &collection.index)?;
            if objects.mode() != mode {
                return Err(FusionError::Cache(format!(
                    "{} holds {} associations, run asks for {mode}",
                    path.display(),
                    objects.mode()
                )));
            }
            objects
        }
        Some(path) => {
            let objects = collection.object_index(mode);
            let file = File::create(path).map_err(|e| FusionError::io(path, e))?;
            let mut w = BufWriter::new(file);
            objects.write_cache(&mut w)?;
            w.flush().map_err(|e| FusionError::io(path, e))?;
            objects
        }
        None => collection.object_index(mode),
    };
    if !objects.excluded().is_empty() {
        diag_line(
            diag,
            format_args!("objects without text, not ranked: {}", objects.excluded().join(" ")),
        )?;
    }
    Ok(objects)
}

/// Ranks every query of `inputs.queries` and writes TREC run lines to `out`.
pub fn cmd_rank<W: Write + ?Sized, D: Write + ?Sized>(
    inputs: &RankInputs,
    config: &RunConfig,
    tokenizer: Tokenizer,
    lenient: bool,
    cache: Option<&Path>,
    out: &mut W,
    diag: &mut D,
) -> Result<RankSummary> {
    config.validate()?;
    let collection = Collection::load(&inputs.corpus, &inputs.associations, tokenizer, lenient)?;
    report_load(&collection, diag)?;
    let queries = read_queries(&inputs.queries)?;

    let objects = match config.fusion {
        Fusion::Early => Some(object_index_with_cache(&collection, config.assoc, cache, diag)?),
        Fusion::Late => None,
    };
    let outcomes = collection.rank_queries(&queries, config, objects.as_ref())?;

    let mut summary = RankSummary::default();
    for (q, outcome) in queries.iter().zip(&outcomes) {
        match outcome {
            QueryOutcome::Ranked(list) => {
                list.write_trec(out, &q.id, &config.run_tag).map_err(out_err)?;
                summary.ranked += 1;
            }
            QueryOutcome::Empty => summary.empty_queries.push(q.id.clone()),
            QueryOutcome::NoMatch => summary.unmatched_queries.push(q.id.clone()),
        }
    }
    out.flush().map_err(out_err)?;

    if !summary.empty_queries.is_empty() {
        diag_line(diag, format_args!("queries empty after tokenization: {}", summary.empty_queries.join(" ")))?;
    }
    if !summary.unmatched_queries.is_empty() {
        diag_line(diag, format_args!("queries matching no object: {}", summary.unmatched_queries.join(" ")))?;
    }
    Ok(summary)
}

/// Evaluates a run file against a qrels file and writes the report to `out`.
pub fn cmd_eval<W: Write + ?Sized, D: Write + ?Sized>(
    run_path: &Path,
    qrels_path: &Path,
    config: &MetricConfig,
    out: &mut W,
    diag: &mut D,
) -> Result<MetricReport> {
    let run = read_run(run_path)?;
    let qrels = Qrels::read(qrels_path)?;
    let report = evaluate_run(&run, &qrels, config)?;
    report.write(out).map_err(out_err)?;
    out.flush().map_err(out_err)?;
    if !report.excluded_no_relevant.is_empty() {
        diag_line(
            diag,
            format_args!("judged queries without relevant objects: {}", report.excluded_no_relevant.join(" ")),
        )?;
    }
    if !report.ignored_unjudged.is_empty() {
        diag_line(diag, format_args!("unjudged queries ignored: {}", report.ignored_unjudged.join(" ")))?;
    }
    Ok(report)
}

/// Which metric columns the grid reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Task {
    #[default]
    Expert,
    Blog,
    Vertical,
}

impl Task {
    pub fn metrics(self) -> Vec<Metric> {
        match self {
            Task::Expert | Task::Blog => vec![Metric::AveragePrecision, Metric::ReciprocalRank, Metric::Precision(10)],
            Task::Vertical => vec![Metric::Ndcg(20), Metric::AveragePrecision, Metric::Precision(5)],
        }
    }
}

impl FromStr for Task {
    type Err = FusionError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "expert" => Ok(Task::Expert),
            "blog" => Ok(Task::Blog),
            "vertical" => Ok(Task::Vertical),
            _ => Err(FusionError::InvalidParameter(format!("unknown task `{s}`"))),
        }
    }
}

/// One row of the configuration grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub config: RunConfig,
    pub values: Vec<f64>,
}

/// The eight default configurations, in table order.
pub fn grid_configs() -> Vec<RunConfig> {
    let mut configs = Vec::with_capacity(8);
    for fusion in [Fusion::Early, Fusion::Late] {
        for model in [RetrievalModel::Lm, RetrievalModel::Bm25] {
            for assoc in [AssocMode::Binary, AssocMode::Uniform] {
                configs.push(RunConfig::new(fusion, model, assoc));
            }
        }
    }
    configs
}

/// Runs and evaluates every grid configuration on a loaded collection.
pub fn run_grid(collection: &Collection, queries: &[Query], qrels: &Qrels, task: Task) -> Result<Vec<GridRow>> {
    let metric_config = MetricConfig {
        metrics: task.metrics(),
        ..MetricConfig::default()
    };
    let binary = collection.object_index(AssocMode::Binary);
    let uniform = collection.object_index(AssocMode::Uniform);

    grid_configs()
        .into_iter()
        .map(|config| {
            let objects = match config.assoc {
                AssocMode::Uniform => &uniform,
                _ => &binary,
            };
            let outcomes = collection.rank_queries(queries, &config, Some(objects))?;
            let run: Run = queries
                .iter()
                .zip(outcomes)
                .map(|(q, outcome)| {
                    let list = match outcome {
                        QueryOutcome::Ranked(list) => list,
                        _ => RankedList::default(),
                    };
                    (q.id.clone(), list)
                })
                .collect();
            let report = evaluate_run(&run, qrels, &metric_config)?;
            let values = metric_config
                .metrics
                .iter()
                .map(|&m| report.mean(m).unwrap_or(0.0))
                .collect();
            Ok(GridRow { config, values })
        })
        .collect()
}

/// Tab-separated grid table; the best value of each metric column carries a `*`.
pub fn write_grid<W: Write + ?Sized>(rows: &[GridRow], task: Task, out: &mut W) -> std::io::Result<()> {
    let metrics = task.metrics();
    write!(out, "fusion\tmodel\tassoc")?;
    for m in &metrics {
        write!(out, "\t{m}")?;
    }
    writeln!(out)?;

    let formatted: Vec<Vec<String>> = rows
        .iter()
        .map(|r| r.values.iter().map(|v| format!("{v:.4}")).collect())
        .collect();
    let best: Vec<f64> = (0..metrics.len())
        .map(|c| rows.iter().map(|r| r.values[c]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let best_text: Vec<String> = best.iter().map(|v| format!("{v:.4}")).collect();

    for (row, cells) in rows.iter().zip(&formatted) {
        let c = &row.config;
        write!(out, "{}\t{}\t{}", c.fusion, c.model, c.assoc)?;
        for (col, cell) in cells.iter().enumerate() {
            let mark = if *cell == best_text[col] { "*" } else { "" };
            write!(out, "\t{cell}{mark}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Loads inputs, runs all eight configurations and writes the comparison table.
pub fn cmd_grid<W: Write + ?Sized, D: Write + ?Sized>(
    inputs: &RankInputs,
    qrels_path: &Path,
    task: Task,
    tokenizer: Tokenizer,
    lenient: bool,
    out: &mut W,
    diag: &mut D,
) -> Result<Vec<GridRow>> {
    let collection = Collection::load(&inputs.corpus, &inputs.associations, tokenizer, lenient)?;
    report_load(&collection, diag)?;
    let queries = read_queries(&inputs.queries)?;
    let qrels = Qrels::read(qrels_path)?;
    let rows = run_grid(&collection, &queries, &qrels, task)?;
    write_grid(&rows, task, out).map_err(out_err)?;
    out.flush().map_err(out_err)?;
    Ok(rows)
}
