//! Brute-force reference evaluator and random instance generator.
//!
//! The oracle works from raw token lists and edge lists only: no vocabulary
//! interning, no postings, no pseudo-object index. It recomputes pseudo
//! frequencies, collection statistics and fused scores directly from their
//! definitions for every query.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use fusion_retrieval::{AssocMode, AssocRecord, AssociationTable, DocumentIndex, Tokenizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Lm,
    Bm25,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    Raw,
    ReciprocalRank,
}

#[derive(Debug, Clone, Copy)]
pub struct Params {
    pub lambda: f64,
    pub k1: f64,
    pub b: f64,
}

pub const DEFAULTS: Params = Params {
    lambda: 0.1,
    k1: 1.2,
    b: 0.75,
};

/// A toy collection: documents as token lists plus doc→object edges.
#[derive(Debug, Clone)]
pub struct Instance {
    pub docs: BTreeMap<String, Vec<String>>,
    pub edges: BTreeSet<(String, String)>,
    pub queries: Vec<Vec<String>>,
}

impl Instance {
    pub fn index(&self) -> DocumentIndex {
        DocumentIndex::from_records(
            self.docs.iter().map(|(id, toks)| (id.clone(), toks.join(" "))),
            &Tokenizer::new(),
        )
        .unwrap()
    }

    pub fn table(&self, index: &DocumentIndex) -> AssociationTable {
        let recs = self.edges.iter().map(|(d, o)| AssocRecord::new(d.clone(), o.clone()));
        AssociationTable::load(recs, index, false).unwrap().0
    }

    pub fn objects(&self) -> BTreeSet<String> {
        self.edges.iter().map(|(_, o)| o.clone()).collect()
    }

    fn docs_of(&self, object: &str) -> Vec<&str> {
        // BTreeSet order: ascending doc id for each object.
        let mut v: Vec<&str> = self
            .edges
            .iter()
            .filter(|(_, o)| o == object)
            .map(|(d, _)| d.as_str())
            .collect();
        v.sort();
        v
    }

    fn weight(&self, mode: AssocMode, doc: &str, object: &str) -> f64 {
        if !self.edges.contains(&(doc.to_owned(), object.to_owned())) {
            return 0.0;
        }
        match mode {
            AssocMode::Binary | AssocMode::Explicit => 1.0,
            AssocMode::Uniform => 1.0 / self.docs_of(object).len() as f64,
        }
    }

    fn count(&self, term: &str, doc: &str) -> usize {
        self.docs[doc].iter().filter(|t| *t == term).count()
    }

    fn total_tokens(&self) -> usize {
        self.docs.values().map(Vec::len).sum()
    }

    fn background(&self, term: &str) -> f64 {
        let cf: usize = self.docs.keys().map(|d| self.count(term, d)).sum();
        cf as f64 / self.total_tokens() as f64
    }

    fn in_collection(&self, term: &str) -> bool {
        self.docs.values().any(|toks| toks.iter().any(|t| t == term))
    }

    /// Pseudo term frequencies and length of each object with non-zero length.
    pub fn pseudo_objects(&self, mode: AssocMode) -> BTreeMap<String, (BTreeMap<String, f64>, f64)> {
        let mut out = BTreeMap::new();
        for object in self.objects() {
            let mut freqs: BTreeMap<String, f64> = BTreeMap::new();
            for doc in self.docs_of(&object) {
                let w = self.weight(mode, doc, &object);
                let mut terms: Vec<&String> = self.docs[doc].iter().collect();
                terms.sort();
                terms.dedup();
                for t in terms {
                    *freqs.entry(t.clone()).or_insert(0.0) += self.count(t, doc) as f64 * w;
                }
            }
            let length: f64 = freqs.values().sum();
            if length > 0.0 {
                out.insert(object, (freqs, length));
            }
        }
        out
    }

    /// Early-fusion scores of every candidate object.
    pub fn early_scores(&self, mode: AssocMode, model: Model, p: Params, query: &[String]) -> BTreeMap<String, f64> {
        let objects = self.pseudo_objects(mode);
        let n = objects.len();
        let avg = objects.values().map(|(_, len)| len).sum::<f64>() / n as f64;
        let object_df = |t: &str| objects.values().filter(|(f, _)| f.get(t).copied().unwrap_or(0.0) > 0.0).count();

        let terms: Vec<&String> = query
            .iter()
            .filter(|t| match model {
                Model::Lm => self.in_collection(t),
                Model::Bm25 => object_df(t) > 0,
            })
            .collect();

        let mut out = BTreeMap::new();
        for (id, (freqs, len)) in &objects {
            if !terms.iter().any(|t| freqs.get(*t).copied().unwrap_or(0.0) > 0.0) {
                continue;
            }
            let mut score = 0.0;
            for t in &terms {
                let f = freqs.get(*t).copied().unwrap_or(0.0);
                score += match model {
                    Model::Lm => ((1.0 - p.lambda) * f / len + p.lambda * self.background(t)).ln(),
                    Model::Bm25 => {
                        let idf = (n as f64 / object_df(t) as f64).ln();
                        bm25(f, *len, avg, idf, p)
                    }
                };
            }
            out.insert(id.clone(), score);
        }
        out
    }

    /// Per-document additive score (log-likelihood for LM) of every candidate document.
    pub fn doc_additive_scores(&self, model: Model, p: Params, query: &[String]) -> BTreeMap<String, f64> {
        let n = self.docs.len();
        let avg = self.total_tokens() as f64 / n as f64;
        let df = |t: &str| self.docs.keys().filter(|d| self.count(t, d) > 0).count();
        let terms: Vec<&String> = query.iter().filter(|t| df(t) > 0).collect();

        let mut out = BTreeMap::new();
        for (id, toks) in &self.docs {
            if !terms.iter().any(|t| toks.contains(t)) {
                continue;
            }
            let len = toks.len() as f64;
            let mut score = 0.0;
            for t in &terms {
                let f = self.count(t, id) as f64;
                score += match model {
                    Model::Lm => ((1.0 - p.lambda) * f / len + p.lambda * self.background(t)).ln(),
                    Model::Bm25 => bm25(f, len, avg, (n as f64 / df(t) as f64).ln(), p),
                };
            }
            out.insert(id.clone(), score);
        }
        out
    }

    /// Document scores ready for aggregation, in rank order.
    pub fn doc_ranking(&self, model: Model, p: Params, query: &[String]) -> Vec<(String, f64)> {
        let scored = self.doc_additive_scores(model, p, query).into_iter().map(|(d, s)| {
            let s = match model {
                Model::Lm => s.exp(),
                Model::Bm25 => s,
            };
            (d, s)
        });
        sort_ranking(scored.collect())
    }

    /// Late-fusion scores of every candidate object.
    pub fn late_scores(
        &self,
        mode: AssocMode,
        model: Model,
        transform: Transform,
        top_k: Option<usize>,
        p: Params,
        query: &[String],
    ) -> BTreeMap<String, f64> {
        let mut ranking = self.doc_ranking(model, p, query);
        if let Some(k) = top_k {
            ranking.truncate(k);
        }
        let mut out: BTreeMap<String, f64> = BTreeMap::new();
        for (i, (doc, score)) in ranking.iter().enumerate() {
            let evidence = match transform {
                Transform::Raw => *score,
                Transform::ReciprocalRank => 1.0 / (i + 1) as f64,
            };
            for object in self.objects() {
                let w = self.weight(mode, doc, &object);
                if w > 0.0 {
                    *out.entry(object).or_insert(0.0) += evidence * w;
                }
            }
        }
        out
    }
}

fn bm25(f: f64, len: f64, avg: f64, idf: f64, p: Params) -> f64 {
    if f == 0.0 {
        return 0.0;
    }
    idf * f * (p.k1 + 1.0) / (f + p.k1 * (1.0 - p.b + p.b * len / avg))
}

/// Descending score, ascending id.
pub fn sort_ranking(mut v: Vec<(String, f64)>) -> Vec<(String, f64)> {
    v.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    v
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    if a == b {
        return true;
    }
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

pub fn vocab_term(i: usize) -> String {
    format!("t{i:02}")
}

/// Random instance: ≤20 docs of length ≤15, ≤8 objects, vocabulary ≤30, docs
/// shared between objects, and a few queries (occasionally with unseen terms).
pub fn random_instance(seed: u64) -> Instance {
    let mut rng = StdRng::seed_from_u64(seed);
    let num_docs = rng.gen_range(1..=20);
    let vocab = rng.gen_range(1..=30);
    let num_objects = rng.gen_range(1..=8);

    let docs: BTreeMap<String, Vec<String>> = (0..num_docs)
        .map(|i| {
            let len = rng.gen_range(0..=15);
            let toks = (0..len).map(|_| vocab_term(rng.gen_range(0..vocab))).collect();
            (format!("d{i:02}"), toks)
        })
        .collect();
    let doc_ids: Vec<String> = docs.keys().cloned().collect();

    let mut edges = BTreeSet::new();
    for o in 0..num_objects {
        let k = rng.gen_range(1..=num_docs.min(5));
        for d in doc_ids.choose_multiple(&mut rng, k) {
            edges.insert((d.clone(), format!("o{o}")));
        }
    }

    let queries = (0..4)
        .map(|_| {
            let len = rng.gen_range(1..=4);
            (0..len)
                .map(|_| {
                    if rng.gen_bool(0.1) {
                        "unseen".to_owned()
                    } else {
                        vocab_term(rng.gen_range(0..vocab))
                    }
                })
                .collect()
        })
        .collect();

    Instance { docs, edges, queries }
}

/// Random instance where object `oNN` owns exactly document `dNN` and every document is non-empty.
pub fn bijection_instance(seed: u64) -> Instance {
    let mut rng = StdRng::seed_from_u64(seed ^ 0xB1);
    let n = rng.gen_range(1..=20);
    let vocab = rng.gen_range(2..=30);
    let docs: BTreeMap<String, Vec<String>> = (0..n)
        .map(|i| {
            let len = rng.gen_range(1..=15);
            (format!("d{i:02}"), (0..len).map(|_| vocab_term(rng.gen_range(0..vocab))).collect())
        })
        .collect();
    let edges = (0..n).map(|i| (format!("d{i:02}"), format!("o{i:02}"))).collect();
    let queries = (0..4)
        .map(|_| (0..rng.gen_range(1..=3)).map(|_| vocab_term(rng.gen_range(0..vocab))).collect())
        .collect();
    Instance { docs, edges, queries }
}

/// Thin wrappers running the library on an [`Instance`].
pub mod engine {
    use super::{Instance, Model, Params, Transform};
    use fusion_retrieval::late::{aggregate_objects, score_documents};
    use fusion_retrieval::{
        AggregationSpec, AssocMode, ModelParams, ObjectIndex, RankedList, RetrievalModel, ScoreTransform, Term,
    };

    pub fn model(m: Model) -> RetrievalModel {
        match m {
            Model::Lm => RetrievalModel::Lm,
            Model::Bm25 => RetrievalModel::Bm25,
        }
    }

    pub fn params(p: Params) -> ModelParams {
        ModelParams {
            lambda: p.lambda,
            k1: p.k1,
            b: p.b,
        }
    }

    pub fn terms(query: &[String]) -> Vec<Term> {
        fusion_retrieval::tokenize(&query.join(" "))
    }

    pub fn early(inst: &Instance, mode: AssocMode, m: Model, p: Params, query: &[String]) -> RankedList {
        let index = inst.index();
        let table = inst.table(&index);
        let objects = ObjectIndex::build(&index, &table, mode);
        objects.rank(&terms(query), model(m), &params(p), None).unwrap()
    }

    pub fn late(
        inst: &Instance,
        mode: AssocMode,
        m: Model,
        transform: Transform,
        top_k: Option<usize>,
        p: Params,
        query: &[String],
    ) -> RankedList {
        let index = inst.index();
        let table = inst.table(&index);
        let docs = score_documents(&index, &terms(query), model(m), &params(p)).unwrap();
        let spec = AggregationSpec {
            transform: match transform {
                Transform::Raw => ScoreTransform::Raw,
                Transform::ReciprocalRank => ScoreTransform::ReciprocalRank,
            },
            top_k,
            mode,
        };
        aggregate_objects(&docs, &table, &spec, None)
    }
}

pub const MODES: [AssocMode; 2] = [AssocMode::Binary, AssocMode::Uniform];
pub const MODELS: [Model; 2] = [Model::Lm, Model::Bm25];

fn compare(label: &str, got: &fusion_retrieval::RankedList, want: BTreeMap<String, f64>, tol: f64) -> Result<(), String> {
    let want = sort_ranking(want.into_iter().collect());
    let got_ids: Vec<&str> = got.ids().collect();
    let want_ids: Vec<&str> = want.iter().map(|(id, _)| id.as_str()).collect();
    if got_ids != want_ids {
        return Err(format!("{label}: ranking {got_ids:?} != oracle {want_ids:?}"));
    }
    for ((id, g), (_, w)) in got.entries().iter().zip(&want) {
        if !rel_close(*g, *w, tol) {
            return Err(format!("{label}: {id} scored {g} vs oracle {w}"));
        }
    }
    Ok(())
}

/// Checks all 8 fusion × model × association configurations (late fusion with
/// the raw transform) plus reciprocal-rank late fusion against the oracle.
pub fn check_against_oracle(seed: u64, inst: &Instance, tol: f64) -> Result<(), String> {
    for query in &inst.queries {
        for mode in MODES {
            for m in MODELS {
                let label = format!("seed {seed} early/{m:?}/{mode} q={query:?}");
                compare(&label, &engine::early(inst, mode, m, DEFAULTS, query), inst.early_scores(mode, m, DEFAULTS, query), tol)?;
                for transform in [Transform::Raw, Transform::ReciprocalRank] {
                    for top_k in [None, Some(3)] {
                        let label = format!("seed {seed} late/{m:?}/{mode}/{transform:?}/k={top_k:?} q={query:?}");
                        compare(
                            &label,
                            &engine::late(inst, mode, m, transform, top_k, DEFAULTS, query),
                            inst.late_scores(mode, m, transform, top_k, DEFAULTS, query),
                            tol,
                        )?;
                    }
                }
            }
        }
    }
    Ok(())
}
