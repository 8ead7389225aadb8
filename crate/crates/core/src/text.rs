//! Document ingestion: tokenization, per-document term counts and collection statistics.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::Path;

use crate::error::{FusionError, Result};
use crate::lines::{read_data_file, read_data_lines, split_tab_record, DataLine};

/// A normalized token: non-empty, lowercase, alphanumeric characters only.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term(String);

impl Term {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::borrow::Borrow<str> for Term {
    fn borrow(&self) -> &str {
        &self.0
    }
}

/// Lowercases `text` and splits it on every non-alphanumeric character.
///
/// Lowercasing happens before splitting, so any non-alphanumeric output of case
/// mapping (combining marks, for instance) also acts as a separator. That keeps
/// the function idempotent over its own output.
pub fn tokenize(text: &str) -> Vec<Term> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(|s| Term(s.to_owned()))
        .collect()
}

/// Tokenizer with an optional stopword list.
#[derive(Debug, Clone, Default)]
pub struct Tokenizer {
    stopwords: Option<HashSet<Term>>,
}

impl Tokenizer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stopwords are normalized with [`tokenize`]; an entry that splits into
    /// several terms contributes each of them.
    pub fn with_stopwords<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let set = words.into_iter().flat_map(|w| tokenize(w.as_ref())).collect();
        Self { stopwords: Some(set) }
    }

    /// Reads a stopword file: one word per line, `#` comments allowed.
    pub fn from_stopword_file(path: &Path) -> Result<Self> {
        let lines = read_data_file(path)?;
        Ok(Self::with_stopwords(lines.iter().map(|l| l.text.as_str())))
    }

    pub fn tokenize(&self, text: &str) -> Vec<Term> {
        let mut terms = tokenize(text);
        if let Some(stop) = &self.stopwords {
            terms.retain(|t| !stop.contains(t));
        }
        terms
    }
}

/// Dense term identifier; ids follow the lexicographic order of the vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermId(pub u32);

impl TermId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Dense document identifier; ids follow the lexicographic order of document ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DocIdx(pub u32);

impl DocIdx {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    id: String,
    /// Sorted by term id; every count is at least 1.
    freqs: Vec<(TermId, u32)>,
    length: u64,
}

impl Document {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn freqs(&self) -> &[(TermId, u32)] {
        &self.freqs
    }

    pub fn len(&self) -> u64 {
        self.length
    }

    pub fn is_empty(&self) -> bool {
        self.length == 0
    }

    pub fn freq(&self, term: TermId) -> u32 {
        self.freqs
            .binary_search_by_key(&term, |&(t, _)| t)
            .map(|i| self.freqs[i].1)
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollectionStats {
    pub total_tokens: u64,
    /// Indexed by [`TermId`].
    pub collection_freq: Vec<u64>,
    /// Indexed by [`TermId`].
    pub doc_freq: Vec<u32>,
    pub num_docs: usize,
    pub avg_doc_length: f64,
}

impl CollectionStats {
    /// Background probability `cf(t) / total_tokens`; 0 when the collection has no tokens.
    pub fn background_prob(&self, term: TermId) -> f64 {
        if self.total_tokens == 0 {
            return 0.0;
        }
        self.collection_freq[term.index()] as f64 / self.total_tokens as f64
    }
}

/// Immutable document collection.
#[derive(Debug, Clone)]
pub struct DocumentIndex {
    vocab: Vec<Term>,
    term_ids: HashMap<Term, TermId>,
    docs: Vec<Document>,
    doc_ids: HashMap<String, DocIdx>,
    postings: Vec<Vec<DocIdx>>,
    stats: CollectionStats,
}

impl DocumentIndex {
    /// Builds an index from `(doc id, text)` records.
    pub fn from_records<I, S, T>(records: I, tokenizer: &Tokenizer) -> Result<Self>
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: AsRef<str>,
    {
        let mut builder = IndexBuilder::new(tokenizer.clone());
        for (id, text) in records {
            builder.add(id, text.as_ref())?;
        }
        builder.finish()
    }

    /// Reads a `doc_id<TAB>text` corpus file.
    pub fn read_corpus(path: &Path, tokenizer: &Tokenizer) -> Result<Self> {
        let lines = read_data_file(path)?;
        Self::from_lines(&lines, &path.display().to_string(), tokenizer)
    }

    pub fn parse_corpus(input: &str, tokenizer: &Tokenizer) -> Result<Self> {
        let lines = read_data_lines(input.as_bytes(), "<corpus>")?;
        Self::from_lines(&lines, "<corpus>", tokenizer)
    }

    fn from_lines(lines: &[DataLine], source_name: &str, tokenizer: &Tokenizer) -> Result<Self> {
        let mut builder = IndexBuilder::new(tokenizer.clone());
        for line in lines {
            let (id, text) = split_tab_record(line, source_name)?;
            builder.add(id, text)?;
        }
        builder.finish()
    }

    /// Writes the collection back out in corpus-file form. Terms of a document are
    /// emitted grouped by term, so word order is lost but counts are preserved.
    pub fn write_corpus<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for doc in &self.docs {
            write!(out, "{}\t", doc.id)?;
            let mut first = true;
            for &(t, n) in &doc.freqs {
                for _ in 0..n {
                    if !first {
                        out.write_all(b" ")?;
                    }
                    out.write_all(self.vocab[t.index()].as_str().as_bytes())?;
                    first = false;
                }
            }
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn stats(&self) -> &CollectionStats {
        &self.stats
    }

    pub fn num_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn doc(&self, idx: DocIdx) -> &Document {
        &self.docs[idx.index()]
    }

    pub fn doc_idx(&self, id: &str) -> Option<DocIdx> {
        self.doc_ids.get(id).copied()
    }

    pub fn vocab(&self) -> &[Term] {
        &self.vocab
    }

    pub fn term_id(&self, term: &str) -> Option<TermId> {
        self.term_ids.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> &Term {
        &self.vocab[id.index()]
    }

    /// Documents containing `term`, ascending.
    pub fn postings(&self, term: TermId) -> &[DocIdx] {
        &self.postings[term.index()]
    }

    /// Background probability of a term given as text; 0 for unseen terms.
    pub fn background_prob(&self, term: &str) -> f64 {
        self.term_id(term).map_or(0.0, |t| self.stats.background_prob(t))
    }

    /// Resolves query terms against the vocabulary, keeping order and multiplicity.
    pub fn resolve(&self, query: &[Term]) -> Vec<Option<TermId>> {
        query.iter().map(|t| self.term_id(t.as_str())).collect()
    }
}

/// Single-writer ingestion phase for a [`DocumentIndex`].
#[derive(Debug, Default)]
pub struct IndexBuilder {
    tokenizer: Tokenizer,
    docs: BTreeMap<String, BTreeMap<Term, u32>>,
}

impl IndexBuilder {
    pub fn new(tokenizer: Tokenizer) -> Self {
        Self {
            tokenizer,
            docs: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, id: impl Into<String>, text: &str) -> Result<()> {
        let id = id.into();
        if self.docs.contains_key(&id) {
            return Err(FusionError::DuplicateDocument(id));
        }
        let mut counts = BTreeMap::new();
        for term in self.tokenizer.tokenize(text) {
            *counts.entry(term).or_insert(0u32) += 1;
        }
        self.docs.insert(id, counts);
        Ok(())
    }

    pub fn finish(self) -> Result<DocumentIndex> {
        if self.docs.is_empty() {
            return Err(FusionError::EmptyCorpus);
        }

        let vocab: Vec<Term> = {
            let mut all: Vec<&Term> = self.docs.values().flat_map(|c| c.keys()).collect();
            all.sort_unstable();
            all.dedup();
            all.into_iter().cloned().collect()
        };
        let term_ids: HashMap<Term, TermId> = vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), TermId(i as u32)))
            .collect();

        let mut docs = Vec::with_capacity(self.docs.len());
        let mut doc_ids = HashMap::with_capacity(self.docs.len());
        let mut postings = vec![Vec::new(); vocab.len()];
        let mut collection_freq = vec![0u64; vocab.len()];
        let mut total_tokens = 0u64;

        for (i, (id, counts)) in self.docs.into_iter().enumerate() {
            let idx = DocIdx(i as u32);
            let mut freqs: Vec<(TermId, u32)> =
                counts.into_iter().map(|(t, n)| (term_ids[&t], n)).collect();
            freqs.sort_unstable_by_key(|&(t, _)| t);
            let length: u64 = freqs.iter().map(|&(_, n)| u64::from(n)).sum();
            for &(t, n) in &freqs {
                postings[t.index()].push(idx);
                collection_freq[t.index()] += u64::from(n);
            }
            total_tokens += length;
            doc_ids.insert(id.clone(), idx);
            docs.push(Document { id, freqs, length });
        }

        let doc_freq = postings.iter().map(|p| p.len() as u32).collect();
        let num_docs = docs.len();
        let stats = CollectionStats {
            total_tokens,
            collection_freq,
            doc_freq,
            num_docs,
            avg_doc_length: total_tokens as f64 / num_docs as f64,
        };

        Ok(DocumentIndex {
            vocab,
            term_ids,
            docs,
            doc_ids,
            postings,
            stats,
        })
    }
}
