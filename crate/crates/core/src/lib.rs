//! Object retrieval by fusing document evidence.
//!
//! Objects such as experts, blogs or search verticals have no text of their
//! own; they are reached through the documents associated with them. Two
//! strategies are provided:
//!
//! * [`early`] merges term counts of associated documents into one
//!   pseudo-document per object and ranks those directly.
//! * [`late`] ranks documents and sums their (weighted) scores per object.
//!
//! Both strategies share the scoring kernels in [`scoring`] (Jelinek-Mercer
//! smoothed query likelihood and BM25) and the association weights in
//! [`associations`]. [`eval`] computes MAP, MRR, P@k and nDCG@k over TREC
//! qrels, and [`runner`] wires everything into the `fusion` command-line tool.

pub mod associations;
pub mod early;
pub mod error;
pub mod eval;
pub mod late;
mod lines;
pub mod ranking;
pub mod runner;
pub mod scoring;
pub mod text;

pub use associations::{AssocMode, AssocRecord, AssociationTable, ObjIdx};
pub use early::{ObjectIndex, PseudoObject};
pub use error::{FusionError, Result};
pub use eval::{evaluate_run, Metric, MetricConfig, MetricReport, Qrels, Run};
pub use late::{aggregate_objects, score_documents, AggregationSpec, DocScoreList, ScoreTransform};
pub use ranking::RankedList;
pub use runner::{Collection, Fusion, RunConfig};
pub use scoring::{ModelParams, RetrievalModel};
pub use text::{tokenize, DocIdx, DocumentIndex, Term, TermId, Tokenizer};
