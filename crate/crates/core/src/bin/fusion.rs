//! `fusion`: rank objects with early or late fusion, evaluate runs, sweep the configuration grid.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 on data errors.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fusion_retrieval::eval::{GainKind, Metric, MetricConfig};
use fusion_retrieval::late::ScoreTransform;
use fusion_retrieval::runner::{self, Fusion, RankInputs, RunConfig, Task};
use fusion_retrieval::{AssocMode, FusionError, ModelParams, RetrievalModel, Tokenizer};

#[derive(Parser)]
#[command(name = "fusion", version, about = "Fusion-based object retrieval")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rank objects for every query and write a TREC run file.
    Rank(RankArgs),
    /// Evaluate a TREC run file against qrels.
    Eval(EvalArgs),
    /// Run and evaluate all fusion x model x association configurations.
    Grid(GridArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Corpus file, `doc_id<TAB>text` per line
    #[arg(long)]
    corpus: PathBuf,
    /// Associations file, `doc_id<TAB>object_id[<TAB>weight]` per line
    #[arg(long)]
    assoc_file: PathBuf,
    /// Queries file, `query_id<TAB>text` per line
    #[arg(long)]
    queries: PathBuf,
    /// Stopword list, one word per line
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Drop associations that name unknown documents instead of failing
    #[arg(long)]
    lenient: bool,
}

#[derive(Args)]
struct RankArgs {
    #[command(flatten)]
    inputs: InputArgs,
    #[arg(long, default_value = "early", value_parser = parse_with::<Fusion>)]
    fusion: Fusion,
    #[arg(long, default_value = "lm", value_parser = parse_with::<RetrievalModel>)]
    model: RetrievalModel,
    #[arg(long, default_value = "binary", value_parser = parse_with::<AssocMode>)]
    assoc: AssocMode,
    /// Jelinek-Mercer smoothing weight
    #[arg(long, default_value_t = ModelParams::default().lambda)]
    lambda: f64,
    #[arg(long, default_value_t = ModelParams::default().k1)]
    k1: f64,
    #[arg(long, default_value_t = ModelParams::default().b)]
    b: f64,
    /// Late fusion: how document evidence is aggregated (raw or rr)
    #[arg(long, default_value = "raw", value_parser = parse_with::<ScoreTransform>)]
    transform: ScoreTransform,
    /// Late fusion: number of top documents aggregated per query
    #[arg(long, default_value_t = runner::DEFAULT_DEPTH)]
    topk_docs: usize,
    /// Maximum results per query
    #[arg(long, default_value_t = runner::DEFAULT_DEPTH)]
    depth: usize,
    /// Run tag (defaults to `<fusion>_<model>_<assoc>`)
    #[arg(long)]
    tag: Option<String>,
    /// Early fusion: object index cache, read when present and written otherwise
    #[arg(long)]
    index_cache: Option<PathBuf>,
    /// Output file (defaults to stdout)
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// TREC run file
    #[arg(long)]
    run: PathBuf,
    /// TREC qrels file
    #[arg(long)]
    qrels: PathBuf,
    /// Metrics to report, e.g. `map,mrr,P@10,ndcg@20`
    #[arg(long, value_delimiter = ',', value_parser = parse_with::<Metric>)]
    metrics: Option<Vec<Metric>>,
    /// nDCG gain: exponential (2^g - 1) or linear (g)
    #[arg(long, default_value = "exponential", value_parser = parse_with::<GainKind>)]
    gain: GainKind,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    inputs: InputArgs,
    /// TREC qrels file
    #[arg(long)]
    qrels: PathBuf,
    /// Metric columns: expert and blog (map, mrr, P@10) or vertical (ndcg@20, map, P@5)
    #[arg(long, default_value = "expert", value_parser = parse_with::<Task>)]
    task: Task,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn parse_with<T: std::str::FromStr<Err = FusionError>>(s: &str) -> Result<T, String> {
    s.parse().map_err(|e: FusionError| e.to_string())
}

enum Failure {
    Usage(String),
    Data(FusionError),
}

impl From<FusionError> for Failure {
    fn from(e: FusionError) -> Self {
        if e.is_usage() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Data(e)
        }
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => {
            let f = File::create(p).map_err(|e| FusionError::Io { path: p.to_owned(), source: e })?;
            Box::new(BufWriter::new(f))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn tokenizer(inputs: &InputArgs) -> Result<Tokenizer, Failure> {
    Ok(match &inputs.stopwords {
        Some(path) => Tokenizer::from_stopword_file(path)?,
        None => Tokenizer::new(),
    })
}

fn rank_inputs(inputs: &InputArgs) -> RankInputs {
    RankInputs {
        corpus: inputs.corpus.clone(),
        associations: inputs.assoc_file.clone(),
        queries: inputs.queries.clone(),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut diag = io::stderr().lock();
    match cli.command {
        Command::Rank(args) => {
            let mut config = RunConfig::new(args.fusion, args.model, args.assoc);
            config.params = ModelParams {
                lambda: args.lambda,
                k1: args.k1,
                b: args.b,
            };
            config.transform = args.transform;
            config.top_k_docs = args.topk_docs;
            config.output_depth = args.depth;
            if let Some(tag) = args.tag {
                config.run_tag = tag;
            }
            config.validate()?;
            let tok = tokenizer(&args.inputs)?;
            let mut out = open_output(args.output.as_deref())?;
            runner::cmd_rank(
                &rank_inputs(&args.inputs),
                &config,
                tok,
                args.inputs.lenient,
                args.index_cache.as_deref(),
                &mut out,
                &mut diag,
            )?;
        }
        Command::Eval(args) => {
            let mut config = MetricConfig {
                gain: args.gain,
                ..MetricConfig::default()
            };
            if let Some(metrics) = args.metrics {
                config.metrics = metrics;
            }
            let mut out = open_output(args.output.as_deref())?;
            runner::cmd_eval(&args.run, &args.qrels, &config, &mut out, &mut diag)?;
        }
        Command::Grid(args) => {
            let tok = tokenizer(&args.inputs)?;
            let mut out = open_output(args.output.as_deref())?;
            runner::cmd_grid(
                &rank_inputs(&args.inputs),
                &args.qrels,
                args.task,
                tok,
                args.inputs.lenient,
                &mut out,
                &mut diag,
            )?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
