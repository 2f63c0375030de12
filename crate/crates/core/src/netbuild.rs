//! Citation parsing, sliding time windows, and weighted co-citation
//! snapshot graphs.
//!
//! A co-citation between authors `a1` of document `D1` and `a2` of
//! document `D2` occurs whenever a third document cites both `D1` and
//! `D2` and both cited documents fall inside the inspected window. Edge
//! weights count such (citing document, cited pair, author pair) events.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::{AuthorId, DocId};

/// One citation relation: `citing_doc` cites `cited_doc`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CitationRecord {
    pub citing_doc: DocId,
    pub cited_doc: DocId,
}

/// Metadata for one document: publication year and its author list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentMeta {
    pub doc_id: DocId,
    pub year: i32,
    /// Ordered, duplicate-free author list.
    pub authors: Vec<AuthorId>,
}

/// An inclusive year range labelled "YYYY–YYYY" (or "YYYY" when degenerate).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TemporalWindow {
    pub start_year: i32,
    pub end_year: i32,
}

impl TemporalWindow {
    pub fn new(start_year: i32, end_year: i32) -> Self {
        assert!(start_year <= end_year, "window start after end");
        Self {
            start_year,
            end_year,
        }
    }

    pub fn label(&self) -> String {
        if self.start_year == self.end_year {
            format!("{}", self.start_year)
        } else {
            format!("{}\u{2013}{}", self.start_year, self.end_year)
        }
    }

    pub fn contains(&self, year: i32) -> bool {
        self.start_year <= year && year <= self.end_year
    }

    /// Number of years covered.
    pub fn span(&self) -> usize {
        (self.end_year - self.start_year + 1) as usize
    }
}

impl std::fmt::Display for TemporalWindow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.label())
    }
}

/// Weighted undirected author graph for one time window.
///
/// Nodes are indexed densely in ascending author-id order; the id/index
/// views are interchangeable. No self-loops, every stored weight > 0.
#[derive(Debug, Clone)]
pub struct SnapshotGraph {
    window: TemporalWindow,
    nodes: Vec<AuthorId>,
    index: BTreeMap<AuthorId, usize>,
    adj: Vec<BTreeMap<usize, f64>>,
}

impl SnapshotGraph {
    /// Builds a graph from accumulated pair weights. Pairs must be
    /// distinct authors; non-positive weights are rejected.
    pub fn from_weights(
        window: TemporalWindow,
        weights: &BTreeMap<(AuthorId, AuthorId), f64>,
    ) -> Result<Self> {
        let mut node_set = BTreeSet::new();
        for ((a, b), &w) in weights {
            if a == b {
                return Err(Error::InvalidConfig(format!("self-loop on author '{a}'")));
            }
            if w.is_nan() || w <= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "non-positive weight {w} on edge {a}--{b}"
                )));
            }
            node_set.insert(a.clone());
            node_set.insert(b.clone());
        }
        let nodes: Vec<AuthorId> = node_set.into_iter().collect();
        let index: BTreeMap<AuthorId, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
        let mut adj = vec![BTreeMap::new(); nodes.len()];
        for ((a, b), &w) in weights {
            let (i, j) = (index[a], index[b]);
            *adj[i].entry(j).or_insert(0.0) += w;
            *adj[j].entry(i).or_insert(0.0) += w;
        }
        Ok(Self {
            window,
            nodes,
            index,
            adj,
        })
    }

    pub fn window(&self) -> &TemporalWindow {
        &self.window
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(BTreeMap::len).sum::<usize>() / 2
    }

    /// Author ids, ascending.
    pub fn nodes(&self) -> &[AuthorId] {
        &self.nodes
    }

    pub fn node_set(&self) -> BTreeSet<AuthorId> {
        self.nodes.iter().cloned().collect()
    }

    pub fn author(&self, idx: usize) -> &AuthorId {
        &self.nodes[idx]
    }

    pub fn index_of(&self, author: &str) -> Option<usize> {
        self.index.get(author).copied()
    }

    pub fn contains(&self, author: &str) -> bool {
        self.index.contains_key(author)
    }

    /// Neighbors of a node with edge weights, ascending by neighbor index.
    pub fn neighbors(&self, idx: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.adj[idx].iter().map(|(&j, &w)| (j, w))
    }

    pub fn weight_between(&self, i: usize, j: usize) -> Option<f64> {
        self.adj[i].get(&j).copied()
    }

    /// Unordered edges, each pair reported once with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(i, nbrs)| nbrs.iter().filter_map(move |(&j, &w)| (i < j).then_some((i, j, w))))
    }

    /// Weighted degree of a node.
    pub fn strength(&self, idx: usize) -> f64 {
        self.adj[idx].values().sum()
    }

    /// Sum of all edge weights, each edge once.
    pub fn total_weight(&self) -> f64 {
        self.edges().map(|(_, _, w)| w).sum()
    }
}

/// Tallies of records dropped or merged while loading input files.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct LoadReport {
    /// Citation rows dropped because the pair was already seen.
    pub duplicate_citations: usize,
    /// Citation rows dropped because citing and cited id coincide.
    pub self_citations: usize,
    /// Citation records skipped during graph construction because the
    /// cited document has no metadata.
    pub missing_cited_meta: usize,
}

impl LoadReport {
    pub fn merge(&mut self, other: &LoadReport) {
        self.duplicate_citations += other.duplicate_citations;
        self.self_citations += other.self_citations;
        self.missing_cited_meta += other.missing_cited_meta;
    }
}

/// Materializes the sliding windows: starts at `first_year`, advancing by
/// `stride`, each clipped at `last_year` (trailing windows may be shorter).
pub fn build_windows(
    first_year: i32,
    last_year: i32,
    length: u32,
    stride: u32,
) -> Result<Vec<TemporalWindow>> {
    if length < 1 || stride < 1 {
        return Err(Error::InvalidConfig(format!(
            "window length and stride must be >= 1 (got length={length}, stride={stride})"
        )));
    }
    if first_year > last_year {
        return Err(Error::InvalidConfig(format!(
            "first year {first_year} is after last year {last_year}"
        )));
    }
    let mut windows = Vec::new();
    let mut start = first_year;
    while start <= last_year {
        let end = (start + length as i32 - 1).min(last_year);
        windows.push(TemporalWindow::new(start, end));
        start += stride as i32;
    }
    Ok(windows)
}

/// Builds the co-citation graph for one window.
///
/// For every citing document and every unordered pair of distinct cited
/// documents with both years inside the window, every cross-document
/// author pair gains weight 1. Citing documents carry no year
/// constraint. Records whose cited document lacks metadata are skipped
/// and tallied in the report.
pub fn build_cocitation(
    citations: &BTreeSet<CitationRecord>,
    docs: &BTreeMap<DocId, DocumentMeta>,
    window: &TemporalWindow,
) -> Result<(SnapshotGraph, LoadReport)> {
    let mut report = LoadReport::default();
    // Cited documents per citing document, restricted to the window.
    let mut cited_by: BTreeMap<&DocId, Vec<&DocumentMeta>> = BTreeMap::new();
    for rec in citations {
        match docs.get(&rec.cited_doc) {
            Some(meta) => {
                if window.contains(meta.year) {
                    cited_by.entry(&rec.citing_doc).or_default().push(meta);
                }
            }
            None => report.missing_cited_meta += 1,
        }
    }

    let mut weights: BTreeMap<(AuthorId, AuthorId), f64> = BTreeMap::new();
    for cited in cited_by.values() {
        for (x, d1) in cited.iter().enumerate() {
            for d2 in &cited[x + 1..] {
                for a1 in &d1.authors {
                    for a2 in &d2.authors {
                        if a1 == a2 {
                            continue;
                        }
                        let key = if a1 < a2 {
                            (a1.clone(), a2.clone())
                        } else {
                            (a2.clone(), a1.clone())
                        };
                        *weights.entry(key).or_insert(0.0) += 1.0;
                    }
                }
            }
        }
    }
    let graph = SnapshotGraph::from_weights(window.clone(), &weights)?;
    Ok((graph, report))
}

/// Citation count per author for CoCit normalization: the number of
/// citing documents that cite at least one of the author's in-window
/// documents, computed from the same record set as the graph.
pub fn author_citation_counts(
    citations: &BTreeSet<CitationRecord>,
    docs: &BTreeMap<DocId, DocumentMeta>,
    window: &TemporalWindow,
) -> BTreeMap<AuthorId, u64> {
    let mut citers: BTreeMap<&AuthorId, BTreeSet<&DocId>> = BTreeMap::new();
    for rec in citations {
        if let Some(meta) = docs.get(&rec.cited_doc) {
            if window.contains(meta.year) {
                for author in &meta.authors {
                    citers.entry(author).or_default().insert(&rec.citing_doc);
                }
            }
        }
    }
    citers
        .into_iter()
        .map(|(a, set)| (a.clone(), set.len() as u64))
        .collect()
}

/// Replaces each raw co-citation weight with the CoCit score
/// `cocit² / (min(cit_a, cit_b) × mean(cit_a, cit_b))`, which lies in
/// [0, 1] whenever the citation counts dominate the raw co-citations.
pub fn cocit_normalize(
    graph: &SnapshotGraph,
    citation_counts: &BTreeMap<AuthorId, u64>,
) -> Result<SnapshotGraph> {
    let mut weights = BTreeMap::new();
    for (i, j, cocit) in graph.edges() {
        let a = graph.author(i);
        let b = graph.author(j);
        let cit_a = *citation_counts
            .get(a)
            .ok_or_else(|| Error::MissingCitationCount(a.clone()))? as f64;
        let cit_b = *citation_counts
            .get(b)
            .ok_or_else(|| Error::MissingCitationCount(b.clone()))? as f64;
        if cocit > cit_a.min(cit_b) {
            return Err(Error::InvalidConfig(format!(
                "citation count below raw co-citation on edge {a}--{b} \
                 (cocit={cocit}, counts {cit_a}/{cit_b})"
            )));
        }
        let score = cocit * cocit / (cit_a.min(cit_b) * (cit_a + cit_b) / 2.0);
        if score > 0.0 {
            weights.insert((a.clone(), b.clone()), score);
        }
    }
    SnapshotGraph::from_weights(graph.window().clone(), &weights)
}

// ---------------------------------------------------------------------------
// File formats

fn format_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Parses `citations.tsv`: `citing_doc<TAB>cited_doc`, one record per
/// line, `#` comments ignored. Duplicates and self-citations are dropped
/// and tallied.
pub fn parse_citations<R: BufRead>(
    reader: R,
    path: &Path,
) -> Result<(BTreeSet<CitationRecord>, LoadReport)> {
    let mut records = BTreeSet::new();
    let mut report = LoadReport::default();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split('\t');
        let citing = cols.next().unwrap_or("");
        let cited = cols.next().unwrap_or("");
        if citing.is_empty() || cited.is_empty() || cols.next().is_some() {
            return Err(format_err(
                path,
                lineno + 1,
                "expected exactly two tab-separated columns: citing_doc<TAB>cited_doc",
            ));
        }
        if citing == cited {
            report.self_citations += 1;
            continue;
        }
        let inserted = records.insert(CitationRecord {
            citing_doc: citing.to_string(),
            cited_doc: cited.to_string(),
        });
        if !inserted {
            report.duplicate_citations += 1;
        }
    }
    Ok((records, report))
}

/// Parses `docs.tsv`: `doc_id<TAB>year<TAB>author1;author2;…`.
pub fn parse_docs<R: BufRead>(reader: R, path: &Path) -> Result<BTreeMap<DocId, DocumentMeta>> {
    let mut docs = BTreeMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(format_err(
                path,
                lineno + 1,
                "expected doc_id<TAB>year<TAB>authors",
            ));
        }
        let year: i32 = cols[1]
            .parse()
            .map_err(|_| format_err(path, lineno + 1, format!("invalid year '{}'", cols[1])))?;
        let mut authors = Vec::new();
        for a in cols[2].split(';') {
            let a = a.trim();
            if a.is_empty() {
                continue;
            }
            if !authors.iter().any(|x| x == a) {
                authors.push(a.to_string());
            }
        }
        if authors.is_empty() {
            return Err(format_err(path, lineno + 1, "document has no authors"));
        }
        let doc_id = cols[0].to_string();
        if docs
            .insert(
                doc_id.clone(),
                DocumentMeta {
                    doc_id,
                    year,
                    authors,
                },
            )
            .is_some()
        {
            return Err(format_err(
                path,
                lineno + 1,
                format!("duplicate doc_id '{}'", cols[0]),
            ));
        }
    }
    Ok(docs)
}

/// Writes `edges.tsv`: `author_a<TAB>author_b<TAB>weight` with
/// `author_a < author_b`, weights trimmed to at most 6 fractional digits.
pub fn write_edges<W: Write>(graph: &SnapshotGraph, mut out: W) -> Result<()> {
    for (i, j, w) in graph.edges() {
        writeln!(
            out,
            "{}\t{}\t{}",
            graph.author(i),
            graph.author(j),
            crate::format::weight(w)
        )?;
    }
    Ok(())
}

/// Reads `edges.tsv` back into a snapshot graph.
pub fn read_edges<R: BufRead>(
    reader: R,
    path: &Path,
    window: TemporalWindow,
) -> Result<SnapshotGraph> {
    let mut weights = BTreeMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(format_err(
                path,
                lineno + 1,
                "expected author_a<TAB>author_b<TAB>weight",
            ));
        }
        if cols[0] >= cols[1] {
            return Err(format_err(
                path,
                lineno + 1,
                "edge endpoints must satisfy author_a < author_b",
            ));
        }
        let w: f64 = cols[2]
            .parse()
            .map_err(|_| format_err(path, lineno + 1, format!("invalid weight '{}'", cols[2])))?;
        if w.is_nan() || w <= 0.0 {
            return Err(format_err(path, lineno + 1, "edge weight must be positive"));
        }
        if weights
            .insert((cols[0].to_string(), cols[1].to_string()), w)
            .is_some()
        {
            return Err(format_err(
                path,
                lineno + 1,
                format!("duplicate edge {}--{}", cols[0], cols[1]),
            ));
        }
    }
    SnapshotGraph::from_weights(window, &weights)
}
