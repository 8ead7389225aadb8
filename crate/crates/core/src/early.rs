//! Early fusion: term counts of associated documents are merged into one
//! pseudo-document per object, which is then ranked like an ordinary document.
//!
//! The pseudo-frequency of term `t` for object `o` is `Σ_d f(t,d)·w(d,o)` and
//! the object length is the sum of its pseudo-frequencies. LM scoring smooths
//! against the document collection's background model; BM25 takes its IDF and
//! average length from the object population.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::associations::{AssocMode, AssociationTable, ObjIdx};
use crate::error::{FusionError, Result};
use crate::ranking::RankedList;
use crate::scoring::{bm25_term_score, idf, lm_term_score, ModelParams, RetrievalModel};
use crate::text::{DocumentIndex, Term, TermId};

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoObject {
    id: String,
    /// Sorted by term id; every value is positive.
    freqs: Vec<(TermId, f64)>,
    length: f64,
}

impl PseudoObject {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn freqs(&self) -> &[(TermId, f64)] {
        &self.freqs
    }

    pub fn len(&self) -> f64 {
        self.length
    }

    pub fn is_empty(&self) -> bool {
        self.length == 0.0
    }

    pub fn freq(&self, term: TermId) -> f64 {
        self.freqs
            .binary_search_by_key(&term, |&(t, _)| t)
            .map(|i| self.freqs[i].1)
            .unwrap_or(0.0)
    }
}

/// Pseudo-objects plus object-level statistics. Borrows the document index it
/// was built from for the background language model.
#[derive(Debug, Clone)]
pub struct ObjectIndex<'a> {
    docs: &'a DocumentIndex,
    mode: AssocMode,
    objects: Vec<PseudoObject>,
    /// Per term id, positions in `objects` with a positive pseudo-frequency.
    postings: Vec<Vec<u32>>,
    avg_object_length: f64,
    excluded: Vec<String>,
}

impl<'a> ObjectIndex<'a> {
    /// Materializes every object of `table` under association `mode`.
    ///
    /// Objects whose pseudo-length comes out as zero are left out and listed in
    /// [`ObjectIndex::excluded`].
    pub fn build(docs: &'a DocumentIndex, table: &AssociationTable, mode: AssocMode) -> Self {
        let mut objects = Vec::with_capacity(table.num_objects());
        let mut excluded = Vec::new();
        let mut acc: BTreeMap<TermId, f64> = BTreeMap::new();

        for o in (0..table.num_objects() as u32).map(ObjIdx) {
            acc.clear();
            // Edges are ascending by document, which fixes the summation order.
            for edge in table.docs_of(o) {
                let w = table.edge_weight(mode, o, edge);
                if w == 0.0 {
                    continue;
                }
                for &(t, n) in docs.doc(edge.doc).freqs() {
                    *acc.entry(t).or_insert(0.0) += f64::from(n) * w;
                }
            }
            let freqs: Vec<(TermId, f64)> = acc.iter().filter(|(_, &f)| f > 0.0).map(|(&t, &f)| (t, f)).collect();
            let length: f64 = freqs.iter().map(|&(_, f)| f).sum();
            let id = table.object_id(o).to_owned();
            if length > 0.0 {
                objects.push(PseudoObject { id, freqs, length });
            } else {
                excluded.push(id);
            }
        }

        Self::assemble(docs, mode, objects, excluded)
    }

    fn assemble(docs: &'a DocumentIndex, mode: AssocMode, objects: Vec<PseudoObject>, excluded: Vec<String>) -> Self {
        let mut postings = vec![Vec::new(); docs.vocab().len()];
        for (i, obj) in objects.iter().enumerate() {
            for &(t, _) in &obj.freqs {
                postings[t.index()].push(i as u32);
            }
        }
        let avg_object_length = if objects.is_empty() {
            0.0
        } else {
            objects.iter().map(|o| o.length).sum::<f64>() / objects.len() as f64
        };
        Self {
            docs,
            mode,
            objects,
            postings,
            avg_object_length,
            excluded,
        }
    }

    pub fn mode(&self) -> AssocMode {
        self.mode
    }

    pub fn document_index(&self) -> &'a DocumentIndex {
        self.docs
    }

    pub fn objects(&self) -> &[PseudoObject] {
        &self.objects
    }

    pub fn object(&self, id: &str) -> Option<&PseudoObject> {
        self.position(id).map(|i| &self.objects[i])
    }

    fn position(&self, id: &str) -> Option<usize> {
        self.objects.binary_search_by(|o| o.id.as_str().cmp(id)).ok()
    }

    /// `N`, the number of scorable objects.
    pub fn num_objects(&self) -> usize {
        self.objects.len()
    }

    /// `|{o : f̃(t,o) > 0}|`.
    pub fn object_doc_freq(&self, term: TermId) -> usize {
        self.postings[term.index()].len()
    }

    pub fn avg_object_length(&self) -> f64 {
        self.avg_object_length
    }

    /// Objects dropped at build time because their pseudo-length was zero.
    pub fn excluded(&self) -> &[String] {
        &self.excluded
    }

    /// Query terms that contribute under `model`, in query order with multiplicity.
    fn scorable_terms(&self, query: &[Term], model: RetrievalModel) -> Vec<TermId> {
        self.docs
            .resolve(query)
            .into_iter()
            .flatten()
            .filter(|&t| match model {
                RetrievalModel::Lm => self.docs.stats().collection_freq[t.index()] > 0,
                RetrievalModel::Bm25 => self.object_doc_freq(t) > 0,
            })
            .collect()
    }

    fn score_at(&self, pos: usize, terms: &[TermId], model: RetrievalModel, params: &ModelParams) -> f64 {
        let obj = &self.objects[pos];
        let stats = self.docs.stats();
        terms
            .iter()
            .map(|&t| {
                let f = obj.freq(t);
                match model {
                    RetrievalModel::Lm => lm_term_score(f, obj.length, stats.background_prob(t), params.lambda)
                        .unwrap_or(f64::NEG_INFINITY),
                    RetrievalModel::Bm25 => {
                        let w = idf(self.num_objects(), self.object_doc_freq(t)).unwrap_or(0.0);
                        bm25_term_score(f, obj.length, self.avg_object_length, w, params.k1, params.b)
                    }
                }
            })
            .fold(0.0, |acc, s| acc + s)
    }

    /// Score of a single object: the sum of per-term scores over query term instances.
    ///
    /// With `lambda = 0` a query term missing from the object has zero likelihood
    /// and the LM score is negative infinity.
    pub fn score_object(
        &self,
        object: &str,
        query: &[Term],
        model: RetrievalModel,
        params: &ModelParams,
    ) -> Result<f64> {
        if query.is_empty() {
            return Err(FusionError::EmptyQuery);
        }
        let pos = self
            .position(object)
            .ok_or_else(|| FusionError::UnknownObject(object.to_owned()))?;
        let terms = self.scorable_terms(query, model);
        Ok(self.score_at(pos, &terms, model, params))
    }

    /// Ranks the objects containing at least one query term.
    pub fn rank(
        &self,
        query: &[Term],
        model: RetrievalModel,
        params: &ModelParams,
        depth: Option<usize>,
    ) -> Result<RankedList> {
        if query.is_empty() {
            return Err(FusionError::EmptyQuery);
        }
        let terms = self.scorable_terms(query, model);
        let mut candidates: Vec<u32> = terms
            .iter()
            .flat_map(|t| self.postings[t.index()].iter().copied())
            .collect();
        candidates.sort_unstable();
        candidates.dedup();

        let scored = candidates.into_iter().map(|pos| {
            let pos = pos as usize;
            (self.objects[pos].id.clone(), self.score_at(pos, &terms, model, params))
        });
        Ok(RankedList::from_scores(scored, depth))
    }

    /// Serializes the pseudo-objects. Floating-point values are stored bit-exactly.
    pub fn write_cache<W: Write>(&self, out: W) -> Result<()> {
        let file = CacheFile {
            magic: CACHE_MAGIC.to_owned(),
            version: CACHE_VERSION,
            mode: self.mode.name().to_owned(),
            num_docs: self.docs.num_docs() as u64,
            total_tokens: self.docs.stats().total_tokens,
            objects: self
                .objects
                .iter()
                .map(|o| CachedObject {
                    id: o.id.clone(),
                    freqs: o
                        .freqs
                        .iter()
                        .map(|&(t, f)| (self.docs.term(t).as_str().to_owned(), f))
                        .collect(),
                    length: o.length,
                })
                .collect(),
            excluded: self.excluded.clone(),
        };
        bincode::serialize_into(out, &file).map_err(|e| FusionError::Cache(e.to_string()))
    }

    /// Loads pseudo-objects written by [`ObjectIndex::write_cache`] for the same collection.
    pub fn read_cache<R: Read>(input: R, docs: &'a DocumentIndex) -> Result<Self> {
        let file: CacheFile = bincode::deserialize_from(input).map_err(|e| FusionError::Cache(e.to_string()))?;
        if file.magic != CACHE_MAGIC || file.version != CACHE_VERSION {
            return Err(FusionError::Cache("not an object index cache".into()));
        }
        if file.num_docs != docs.num_docs() as u64 || file.total_tokens != docs.stats().total_tokens {
            return Err(FusionError::Cache("built from a different collection".into()));
        }
        let mode: AssocMode = file.mode.parse().map_err(|_| FusionError::Cache("bad association mode".into()))?;

        let mut objects = Vec::with_capacity(file.objects.len());
        for cached in file.objects {
            let mut freqs = Vec::with_capacity(cached.freqs.len());
            for (term, f) in cached.freqs {
                let t = docs
                    .term_id(&term)
                    .ok_or_else(|| FusionError::Cache(format!("term `{term}` not in collection")))?;
                freqs.push((t, f));
            }
            freqs.sort_unstable_by_key(|&(t, _)| t);
            objects.push(PseudoObject {
                id: cached.id,
                freqs,
                length: cached.length,
            });
        }
        if objects.windows(2).any(|w| w[0].id >= w[1].id) {
            return Err(FusionError::Cache("objects out of order".into()));
        }
        Ok(Self::assemble(docs, mode, objects, file.excluded))
    }
}

const CACHE_MAGIC: &str = "fusion-object-index";
const CACHE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CacheFile {
    magic: String,
    version: u32,
    mode: String,
    num_docs: u64,
    total_tokens: u64,
    objects: Vec<CachedObject>,
    excluded: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct CachedObject {
    id: String,
    freqs: Vec<(String, f64)>,
    length: f64,
}
