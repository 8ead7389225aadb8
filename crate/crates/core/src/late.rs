//! Late fusion: documents are ranked first, then each object collects the
//! weighted scores of its associated documents among the top `K`.

use std::fmt;
use std::str::FromStr;

use crate::associations::{AssocMode, AssociationTable};
use crate::error::{FusionError, Result};
use crate::ranking::{rank_order, RankedList};
use crate::scoring::{bm25_term_score, idf, lm_term_score, ModelParams, RetrievalModel};
use crate::text::{DocIdx, DocumentIndex, Term, TermId};

pub const DEFAULT_TOP_K: usize = 1000;

/// Scored documents, descending by score with ties by ascending document id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DocScoreList {
    entries: Vec<(DocIdx, f64)>,
}

impl DocScoreList {
    /// Builds a list from arbitrary scored documents, putting them in rank order.
    pub fn from_scores(entries: Vec<(DocIdx, f64)>, index: &DocumentIndex) -> Self {
        let mut list = Self { entries };
        list.sort(index);
        list
    }

    pub fn entries(&self) -> &[(DocIdx, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The list as a [`RankedList`] of external document ids.
    pub fn to_ranked_list(&self, index: &DocumentIndex) -> RankedList {
        RankedList::from_scores(
            self.entries.iter().map(|&(d, s)| (index.doc(d).id().to_owned(), s)),
            None,
        )
    }

    fn sort(&mut self, index: &DocumentIndex) {
        self.entries
            .sort_by(|a, b| rank_order((index.doc(a.0).id(), a.1), (index.doc(b.0).id(), b.1)));
    }
}

/// How document evidence is turned into an object's contribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScoreTransform {
    /// The document's retrieval score.
    Raw,
    /// `1 / rank(d)` within the retained document list.
    ReciprocalRank,
}

impl ScoreTransform {
    pub fn name(self) -> &'static str {
        match self {
            ScoreTransform::Raw => "raw",
            ScoreTransform::ReciprocalRank => "rr",
        }
    }
}

impl fmt::Display for ScoreTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScoreTransform {
    type Err = FusionError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(ScoreTransform::Raw),
            "rr" | "reciprocal-rank" => Ok(ScoreTransform::ReciprocalRank),
            _ => Err(FusionError::InvalidParameter(format!("unknown score transform `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregationSpec {
    pub transform: ScoreTransform,
    /// Number of top documents considered; `None` keeps all of them.
    pub top_k: Option<usize>,
    pub mode: AssocMode,
}

impl AggregationSpec {
    pub fn new(mode: AssocMode) -> Self {
        Self {
            transform: ScoreTransform::Raw,
            top_k: Some(DEFAULT_TOP_K),
            mode,
        }
    }
}

fn scorable_terms(index: &DocumentIndex, query: &[Term]) -> Vec<TermId> {
    index
        .resolve(query)
        .into_iter()
        .flatten()
        .filter(|&t| index.stats().doc_freq[t.index()] > 0)
        .collect()
}

fn additive_score(index: &DocumentIndex, doc: DocIdx, terms: &[TermId], model: RetrievalModel, params: &ModelParams) -> f64 {
    let d = index.doc(doc);
    let stats = index.stats();
    let len = d.len() as f64;
    terms
        .iter()
        .map(|&t| {
            let f = f64::from(d.freq(t));
            match model {
                RetrievalModel::Lm => {
                    lm_term_score(f, len, stats.background_prob(t), params.lambda).unwrap_or(f64::NEG_INFINITY)
                }
                RetrievalModel::Bm25 => {
                    let w = idf(stats.num_docs, stats.doc_freq[t.index()] as usize).unwrap_or(0.0);
                    bm25_term_score(f, len, stats.avg_doc_length, w, params.k1, params.b)
                }
            }
        })
        .fold(0.0, |acc, s| acc + s)
}

/// A single document's score on the model's additive scale: the query
/// log-likelihood for LM, the BM25 sum for BM25.
pub fn score_document(
    index: &DocumentIndex,
    doc: DocIdx,
    query: &[Term],
    model: RetrievalModel,
    params: &ModelParams,
) -> f64 {
    additive_score(index, doc, &scorable_terms(index, query), model, params)
}

/// Scores every document containing at least one query term.
///
/// LM scores are returned as query likelihoods in probability space so that they
/// can be summed across documents.
pub fn score_documents(
    index: &DocumentIndex,
    query: &[Term],
    model: RetrievalModel,
    params: &ModelParams,
) -> Result<DocScoreList> {
    if query.is_empty() {
        return Err(FusionError::EmptyQuery);
    }
    let terms = scorable_terms(index, query);
    let mut candidates: Vec<DocIdx> = terms.iter().flat_map(|&t| index.postings(t).iter().copied()).collect();
    candidates.sort_unstable();
    candidates.dedup();

    let entries = candidates
        .into_iter()
        .map(|d| {
            let s = additive_score(index, d, &terms, model, params);
            let s = match model {
                RetrievalModel::Lm => s.exp(),
                RetrievalModel::Bm25 => s,
            };
            (d, s)
        })
        .collect();
    let mut list = DocScoreList { entries };
    list.sort(index);
    Ok(list)
}

/// Aggregates document evidence into object scores.
///
/// Only the first `top_k` documents are used. Each retained document adds its
/// (transformed) score times `w(d,o)` to every object it is associated with;
/// objects with no nonzero-weight edge to a retained document are not ranked.
pub fn aggregate_objects(
    docs: &DocScoreList,
    table: &AssociationTable,
    spec: &AggregationSpec,
    depth: Option<usize>,
) -> RankedList {
    let retained = spec.top_k.map_or(docs.entries.len(), |k| k.min(docs.entries.len()));
    let mut acc: Vec<Option<f64>> = vec![None; table.num_objects()];

    for (rank0, &(d, score)) in docs.entries[..retained].iter().enumerate() {
        let evidence = match spec.transform {
            ScoreTransform::Raw => score,
            ScoreTransform::ReciprocalRank => 1.0 / (rank0 + 1) as f64,
        };
        for &o in table.objects_of(d) {
            let w = table.weight_idx(spec.mode, d, o);
            if w == 0.0 {
                continue;
            }
            let slot = &mut acc[o.index()];
            *slot = Some(slot.unwrap_or(0.0) + evidence * w);
        }
    }

    let scored = acc
        .into_iter()
        .enumerate()
        .filter_map(|(i, s)| s.map(|s| (table.objects()[i].clone(), s)));
    RankedList::from_scores(scored, depth)
}

/// Scores documents and aggregates them in one step.
pub fn rank_objects_late(
    index: &DocumentIndex,
    table: &AssociationTable,
    query: &[Term],
    model: RetrievalModel,
    params: &ModelParams,
    spec: &AggregationSpec,
    depth: Option<usize>,
) -> Result<RankedList> {
    let docs = score_documents(index, query, model, params)?;
    Ok(aggregate_objects(&docs, table, spec, depth))
}
