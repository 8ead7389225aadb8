//! The document–object bipartite graph and association weights `w(d,o)`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{FusionError, Result};
use crate::lines::{read_data_file, read_data_lines, DataLine};
use crate::text::{DocIdx, DocumentIndex};

/// How an edge `(d, o)` is turned into a weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AssocMode {
    /// 1 for every associated document.
    Binary,
    /// `1 / len(o)` for every associated document.
    Uniform,
    /// The weight given in the association file, 1 when absent.
    Explicit,
}

impl AssocMode {
    pub fn name(self) -> &'static str {
        match self {
            AssocMode::Binary => "binary",
            AssocMode::Uniform => "uniform",
            AssocMode::Explicit => "explicit",
        }
    }
}

impl fmt::Display for AssocMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AssocMode {
    type Err = FusionError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(AssocMode::Binary),
            "uniform" => Ok(AssocMode::Uniform),
            "explicit" => Ok(AssocMode::Explicit),
            _ => Err(FusionError::InvalidParameter(format!("unknown association mode `{s}`"))),
        }
    }
}

/// Dense object identifier; ids follow the lexicographic order of object ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObjIdx(pub u32);

impl ObjIdx {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// One line of an association file.
#[derive(Debug, Clone, PartialEq)]
pub struct AssocRecord {
    pub doc: String,
    pub object: String,
    pub weight: Option<f64>,
}

impl AssocRecord {
    pub fn new(doc: impl Into<String>, object: impl Into<String>) -> Self {
        Self {
            doc: doc.into(),
            object: object.into(),
            weight: None,
        }
    }

    pub fn weighted(doc: impl Into<String>, object: impl Into<String>, weight: f64) -> Self {
        Self {
            doc: doc.into(),
            object: object.into(),
            weight: Some(weight),
        }
    }
}

/// Parses `doc_id<TAB>object_id[<TAB>weight]` lines.
pub fn parse_associations(lines: &[DataLine], source_name: &str) -> Result<Vec<AssocRecord>> {
    lines
        .iter()
        .map(|line| {
            let fields: Vec<&str> = line.text.split('\t').collect();
            let bad = |msg: &str| FusionError::parse(source_name, line.number, msg);
            match fields.as_slice() {
                [doc, object] | [doc, object, _] if doc.is_empty() || object.is_empty() => {
                    Err(bad("empty document or object id"))
                }
                [doc, object] => Ok(AssocRecord::new(*doc, *object)),
                [doc, object, w] => {
                    let weight: f64 = w.trim().parse().map_err(|_| bad("weight is not a number"))?;
                    if !weight.is_finite() {
                        return Err(bad("weight is not finite"));
                    }
                    Ok(AssocRecord::weighted(*doc, *object, weight))
                }
                _ => Err(bad("expected `doc_id<TAB>object_id[<TAB>weight]`")),
            }
        })
        .collect()
}

pub fn read_associations(path: &Path) -> Result<Vec<AssocRecord>> {
    let lines = read_data_file(path)?;
    parse_associations(&lines, &path.display().to_string())
}

pub fn parse_associations_str(input: &str) -> Result<Vec<AssocRecord>> {
    let lines = read_data_lines(input.as_bytes(), "<associations>")?;
    parse_associations(&lines, "<associations>")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub doc: DocIdx,
    pub explicit: Option<f64>,
}

/// Outcome of [`AssociationTable::load`] besides the table itself.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadReport {
    /// Edges dropped in lenient mode because their document is not in the index.
    pub dropped_unknown_docs: usize,
    /// Repeated edges that were collapsed.
    pub duplicate_edges: usize,
}

/// Immutable doc↔object association graph.
#[derive(Debug, Clone)]
pub struct AssociationTable {
    objects: Vec<String>,
    object_ids: HashMap<String, ObjIdx>,
    /// Per object, sorted by document.
    docs_of: Vec<Vec<Edge>>,
    /// Per document (indexed by [`DocIdx`]), sorted by object.
    objects_of: Vec<Vec<ObjIdx>>,
}

impl AssociationTable {
    /// Builds the table against an existing document index.
    ///
    /// In strict mode an edge naming a document missing from `index` is an error;
    /// with `lenient` such edges are dropped and counted. Objects left without any
    /// edge never enter the table.
    pub fn load<I>(records: I, index: &DocumentIndex, lenient: bool) -> Result<(Self, LoadReport)>
    where
        I: IntoIterator<Item = AssocRecord>,
    {
        let mut report = LoadReport::default();
        let mut edges: BTreeMap<String, BTreeMap<DocIdx, Option<f64>>> = BTreeMap::new();

        for rec in records {
            if let Some(w) = rec.weight {
                if w < 0.0 {
                    return Err(FusionError::NegativeWeight {
                        doc: rec.doc,
                        object: rec.object,
                        weight: w,
                    });
                }
            }
            let Some(doc) = index.doc_idx(&rec.doc) else {
                if lenient {
                    report.dropped_unknown_docs += 1;
                    continue;
                }
                return Err(FusionError::UnknownDocument(rec.doc));
            };
            let per_object = edges.entry(rec.object.clone()).or_default();
            match per_object.get(&doc) {
                None => {
                    per_object.insert(doc, rec.weight);
                }
                Some(&existing) if existing == rec.weight => report.duplicate_edges += 1,
                Some(_) => {
                    return Err(FusionError::ConflictingWeight {
                        doc: rec.doc,
                        object: rec.object,
                    })
                }
            }
        }

        if edges.is_empty() {
            return Err(FusionError::EmptyAssociations);
        }

        let mut objects = Vec::with_capacity(edges.len());
        let mut object_ids = HashMap::with_capacity(edges.len());
        let mut docs_of = Vec::with_capacity(edges.len());
        let mut objects_of = vec![Vec::new(); index.num_docs()];
        for (i, (object, per_doc)) in edges.into_iter().enumerate() {
            let o = ObjIdx(i as u32);
            let list: Vec<Edge> = per_doc
                .into_iter()
                .map(|(doc, explicit)| {
                    objects_of[doc.index()].push(o);
                    Edge { doc, explicit }
                })
                .collect();
            object_ids.insert(object.clone(), o);
            objects.push(object);
            docs_of.push(list);
        }

        Ok((
            Self {
                objects,
                object_ids,
                docs_of,
                objects_of,
            },
            report,
        ))
    }

    pub fn num_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    pub fn object_id(&self, o: ObjIdx) -> &str {
        &self.objects[o.index()]
    }

    pub fn object_idx(&self, id: &str) -> Option<ObjIdx> {
        self.object_ids.get(id).copied()
    }

    /// Associated documents of `o`, ascending by document id.
    pub fn docs_of(&self, o: ObjIdx) -> &[Edge] {
        &self.docs_of[o.index()]
    }

    /// Objects associated with `d`, ascending by object id.
    pub fn objects_of(&self, d: DocIdx) -> &[ObjIdx] {
        self.objects_of.get(d.index()).map_or(&[], Vec::as_slice)
    }

    /// `len(o)`: the number of documents associated with `o`.
    pub fn len_of(&self, o: ObjIdx) -> usize {
        self.docs_of[o.index()].len()
    }

    /// Weight of an edge known to exist, under `mode`.
    #[inline]
    pub fn edge_weight(&self, mode: AssocMode, o: ObjIdx, edge: &Edge) -> f64 {
        match mode {
            AssocMode::Binary => 1.0,
            AssocMode::Uniform => 1.0 / self.len_of(o) as f64,
            AssocMode::Explicit => edge.explicit.unwrap_or(1.0),
        }
    }

    /// `w(d,o)`; zero when `d` is not associated with `o`.
    pub fn weight_idx(&self, mode: AssocMode, d: DocIdx, o: ObjIdx) -> f64 {
        let edges = self.docs_of(o);
        match edges.binary_search_by_key(&d, |e| e.doc) {
            Ok(i) => self.edge_weight(mode, o, &edges[i]),
            Err(_) => 0.0,
        }
    }

    /// `w(d,o)` by external ids. Unknown documents simply have weight 0.
    pub fn weight(&self, index: &DocumentIndex, mode: AssocMode, doc: &str, object: &str) -> Result<f64> {
        let o = self
            .object_idx(object)
            .ok_or_else(|| FusionError::UnknownObject(object.to_owned()))?;
        Ok(index.doc_idx(doc).map_or(0.0, |d| self.weight_idx(mode, d, o)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::Tokenizer;

    fn toy_index() -> DocumentIndex {
        DocumentIndex::from_records(
            [("d1", "a a b"), ("d2", "b c"), ("d3", "c c c a")],
            &Tokenizer::new(),
        )
        .unwrap()
    }

    fn toy_table(index: &DocumentIndex) -> AssociationTable {
        let recs = [
            AssocRecord::new("d1", "o1"),
            AssocRecord::new("d2", "o1"),
            AssocRecord::new("d3", "o2"),
        ];
        AssociationTable::load(recs, index, false).unwrap().0
    }

    #[test]
    fn object_lengths() {
        let index = toy_index();
        let table = toy_table(&index);
        assert_eq!(table.len_of(table.object_idx("o1").unwrap()), 2);
        assert_eq!(table.len_of(table.object_idx("o2").unwrap()), 1);
    }

    #[test]
    fn duplicate_edges_are_stored_once() {
        let index = toy_index();
        let recs = [AssocRecord::new("d1", "o1"), AssocRecord::new("d1", "o1")];
        let (table, report) = AssociationTable::load(recs, &index, false).unwrap();
        assert_eq!(table.len_of(table.object_idx("o1").unwrap()), 1);
        assert_eq!(report.duplicate_edges, 1);
    }

    #[test]
    fn strict_mode_rejects_unknown_documents() {
        let index = toy_index();
        let err = AssociationTable::load([AssocRecord::new("d9", "o1")], &index, false).unwrap_err();
        assert!(err.to_string().contains("d9"));
    }

    #[test]
    fn lenient_mode_drops_unknown_documents() {
        let index = toy_index();
        let recs = [AssocRecord::new("d9", "o1"), AssocRecord::new("d1", "o1"), AssocRecord::new("d8", "o3")];
        let (table, report) = AssociationTable::load(recs, &index, true).unwrap();
        assert_eq!(report.dropped_unknown_docs, 2);
        assert_eq!(table.objects(), ["o1"]);
    }

    #[test]
    fn negative_weight_is_rejected() {
        let index = toy_index();
        let err = AssociationTable::load([AssocRecord::weighted("d1", "o1", -0.5)], &index, false).unwrap_err();
        assert!(matches!(err, FusionError::NegativeWeight { .. }));
    }

    #[test]
    fn conflicting_weights_are_rejected() {
        let index = toy_index();
        let recs = [AssocRecord::weighted("d1", "o1", 0.5), AssocRecord::weighted("d1", "o1", 0.7)];
        assert!(matches!(
            AssociationTable::load(recs, &index, false),
            Err(FusionError::ConflictingWeight { .. })
        ));
    }

    #[test]
    fn weight_modes() {
        let index = toy_index();
        let table = toy_table(&index);
        let w = |mode, d, o| table.weight(&index, mode, d, o).unwrap();
        assert_eq!(w(AssocMode::Binary, "d1", "o1"), 1.0);
        assert_eq!(w(AssocMode::Uniform, "d1", "o1"), 0.5);
        assert_eq!(w(AssocMode::Binary, "d3", "o1"), 0.0);
        assert_eq!(w(AssocMode::Uniform, "d3", "o1"), 0.0);
        assert_eq!(w(AssocMode::Explicit, "d1", "o1"), 1.0);
        assert!(matches!(
            table.weight(&index, AssocMode::Binary, "d1", "o7"),
            Err(FusionError::UnknownObject(_))
        ));
    }

    #[test]
    fn explicit_weights_are_used() {
        let index = toy_index();
        let recs = [AssocRecord::weighted("d1", "o1", 0.25), AssocRecord::new("d2", "o1")];
        let (table, _) = AssociationTable::load(recs, &index, false).unwrap();
        assert_eq!(table.weight(&index, AssocMode::Explicit, "d1", "o1").unwrap(), 0.25);
        assert_eq!(table.weight(&index, AssocMode::Explicit, "d2", "o1").unwrap(), 1.0);
    }

    #[test]
    fn inverse_maps_agree() {
        let index = toy_index();
        let table = toy_table(&index);
        for o in (0..table.num_objects() as u32).map(ObjIdx) {
            for e in table.docs_of(o) {
                assert!(table.objects_of(e.doc).contains(&o));
            }
        }
        let d1 = index.doc_idx("d1").unwrap();
        assert_eq!(table.objects_of(d1), [table.object_idx("o1").unwrap()]);
    }

    #[test]
    fn parses_association_lines() {
        let recs = parse_associations_str("# edges\nd1\to1\nd2\to1\t0.5\n").unwrap();
        assert_eq!(recs, vec![AssocRecord::new("d1", "o1"), AssocRecord::weighted("d2", "o1", 0.5)]);
        let err = parse_associations_str("d1\to1\nd2\n").unwrap_err();
        assert!(matches!(err, FusionError::Parse { line: 2, .. }));
        let err = parse_associations_str("d1\to1\tabc\n").unwrap_err();
        assert!(matches!(err, FusionError::Parse { line: 1, .. }));
    }
}
