//! Ranked result lists and TREC run-file lines.

use std::cmp::Ordering;
use std::io::{self, Write};

/// Descending score, then ascending id.
pub fn rank_order(a: (&str, f64), b: (&str, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0))
}

/// Objects ordered by descending score, ties broken by ascending id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RankedList {
    entries: Vec<(String, f64)>,
}

impl RankedList {
    /// Sorts `scores` into rank order and keeps at most `depth` entries.
    pub fn from_scores<I>(scores: I, depth: Option<usize>) -> Self
    where
        I: IntoIterator<Item = (String, f64)>,
    {
        let mut entries: Vec<(String, f64)> = scores.into_iter().collect();
        entries.sort_by(|a, b| rank_order((&a.0, a.1), (&b.0, b.1)));
        if let Some(depth) = depth {
            entries.truncate(depth);
        }
        Self { entries }
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(id, _)| id.as_str())
    }

    pub fn score_of(&self, id: &str) -> Option<f64> {
        self.entries.iter().find(|(i, _)| i == id).map(|&(_, s)| s)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn truncate(&mut self, depth: usize) {
        self.entries.truncate(depth);
    }

    /// Writes `query_id Q0 object_id rank score run_tag` lines, scores with 6 decimals.
    pub fn write_trec<W: Write + ?Sized>(&self, out: &mut W, query_id: &str, run_tag: &str) -> io::Result<()> {
        for (i, (id, score)) in self.entries.iter().enumerate() {
            writeln!(out, "{query_id} Q0 {id} {} {score:.6} {run_tag}", i + 1)?;
        }
        Ok(())
    }
}
