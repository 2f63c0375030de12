//! Keyword stemming, per-window TF-IAF author vectors, community topic
//! centroids, and characterising keywords.
//!
//! TF-IAF is TF-IDF with authors as the document unit: the weight of a
//! stemmed term for an author is its raw count across the author's
//! in-window documents times `ln(|A_w| / af)`, where `A_w` is the set of
//! authors with any in-window document and `af` counts those whose pools
//! contain the term.

mod porter;

pub use porter::stem_token;

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::netbuild::{DocumentMeta, TemporalWindow};
use crate::{AuthorId, CommunityRef, DocId};

/// Raw keywords attached to one document (pre-stemming).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordAssignment {
    pub doc_id: DocId,
    pub keywords: Vec<String>,
}

/// A sparse term-weight vector over stemmed terms.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TermVector(BTreeMap<String, f64>);

impl TermVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, f64)>) -> Self {
        Self(pairs.into_iter().filter(|(_, w)| *w != 0.0).collect())
    }

    pub fn get(&self, term: &str) -> f64 {
        self.0.get(term).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(t, &w)| (t.as_str(), w))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.values().all(|&w| w == 0.0)
    }

    pub fn add_assign(&mut self, other: &TermVector) {
        for (term, w) in &other.0 {
            *self.0.entry(term.clone()).or_insert(0.0) += w;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for w in self.0.values_mut() {
            *w *= factor;
        }
    }

    pub fn dot(&self, other: &TermVector) -> f64 {
        // Iterate the smaller support.
        let (small, large) = if self.0.len() <= other.0.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .0
            .iter()
            .map(|(t, w)| w * large.get(t))
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.0.values().map(|w| w * w).sum::<f64>().sqrt()
    }
}

/// Cosine similarity in [0, 1] for non-negative vectors; defined as 0
/// when either vector is zero. Identical vectors score exactly 1.
pub fn cosine_similarity(u: &TermVector, v: &TermVector) -> f64 {
    let nu = u.norm();
    let nv = v.norm();
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    if u == v {
        return 1.0;
    }
    (u.dot(v) / (nu * nv)).clamp(0.0, 1.0)
}

/// Topic dissimilarity: `1 − cosine`. Either vector zero gives 1.
pub fn dissim(u: &TermVector, v: &TermVector) -> f64 {
    1.0 - cosine_similarity(u, v)
}

/// Tokenizes a raw keyword string: lowercase, split on non-alphanumerics,
/// dropping pure digits and single-character tokens.
pub fn tokenize(raw: &str) -> Vec<String> {
    raw.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() > 1 && !t.chars().all(|c| c.is_ascii_digit()))
        .map(str::to_string)
        .collect()
}

/// TF-IAF weights and raw term counts for one author in one window.
#[derive(Debug, Clone, PartialEq)]
pub struct AuthorTermVector {
    pub author: AuthorId,
    pub weights: TermVector,
    pub term_counts: BTreeMap<String, u64>,
}

/// All author vectors of one window, covering every author with an
/// in-window document (authors without keywords carry empty vectors).
#[derive(Debug, Clone)]
pub struct WindowVectors {
    window: TemporalWindow,
    vectors: BTreeMap<AuthorId, AuthorTermVector>,
}

impl WindowVectors {
    pub fn window(&self) -> &TemporalWindow {
        &self.window
    }

    pub fn get(&self, author: &str) -> Option<&AuthorTermVector> {
        self.vectors.get(author)
    }

    pub fn authors(&self) -> impl Iterator<Item = &AuthorId> {
        self.vectors.keys()
    }

    pub fn author_count(&self) -> usize {
        self.vectors.len()
    }
}

/// Builds the per-author TF-IAF vectors for one window. Keywords of
/// multi-author documents are pooled into every co-author's vector; every
/// occurrence across an author's in-window documents counts toward TF.
pub fn build_author_vectors(
    assignments: &[KeywordAssignment],
    docs: &BTreeMap<DocId, DocumentMeta>,
    window: &TemporalWindow,
) -> WindowVectors {
    // A_w: every author with an in-window document.
    let mut pools: BTreeMap<AuthorId, BTreeMap<String, u64>> = BTreeMap::new();
    for meta in docs.values() {
        if window.contains(meta.year) {
            for author in &meta.authors {
                pools.entry(author.clone()).or_default();
            }
        }
    }
    for assignment in assignments {
        let Some(meta) = docs.get(&assignment.doc_id) else {
            continue;
        };
        if !window.contains(meta.year) {
            continue;
        }
        for author in &meta.authors {
            let pool = pools.entry(author.clone()).or_default();
            for raw in &assignment.keywords {
                for token in tokenize(raw) {
                    *pool.entry(stem_token(&token)).or_insert(0) += 1;
                }
            }
        }
    }

    let author_count = pools.len() as f64;
    let mut author_freq: BTreeMap<&String, u64> = BTreeMap::new();
    for pool in pools.values() {
        for term in pool.keys() {
            *author_freq.entry(term).or_insert(0) += 1;
        }
    }
    let iaf: BTreeMap<String, f64> = author_freq
        .into_iter()
        .map(|(term, af)| (term.clone(), (author_count / af as f64).ln()))
        .collect();

    let vectors = pools
        .into_iter()
        .map(|(author, pool)| {
            let weights = TermVector::from_pairs(
                pool.iter()
                    .map(|(term, &tf)| (term.clone(), tf as f64 * iaf[term])),
            );
            (
                author.clone(),
                AuthorTermVector {
                    author,
                    weights,
                    term_counts: pool,
                },
            )
        })
        .collect();
    WindowVectors {
        window: window.clone(),
        vectors,
    }
}

/// A community topic signature: the term-wise mean of member vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Centroid {
    pub community: CommunityRef,
    pub weights: TermVector,
}

/// Term-wise mean of the members' TF-IAF vectors; members without a
/// vector contribute zero but still count in the denominator.
pub fn centroid(members: &BTreeSet<AuthorId>, vectors: &WindowVectors) -> Result<TermVector> {
    if members.is_empty() {
        return Err(Error::EmptyMembers);
    }
    let mut sum = TermVector::new();
    for author in members {
        if let Some(v) = vectors.get(author) {
            sum.add_assign(&v.weights);
        }
    }
    sum.scale(1.0 / members.len() as f64);
    Ok(sum)
}

/// Union of the top-k centroid terms by TF-IAF weight and the top-k terms
/// by raw community term frequency, ties broken lexicographically. The
/// result is lexicographically ordered and grows monotonically with k.
pub fn characterising_keywords(
    members: &BTreeSet<AuthorId>,
    vectors: &WindowVectors,
    k: usize,
) -> BTreeSet<String> {
    if members.is_empty() || k == 0 {
        return BTreeSet::new();
    }
    let mut centroid_weights: BTreeMap<String, f64> = BTreeMap::new();
    let mut community_tf: BTreeMap<String, u64> = BTreeMap::new();
    for author in members {
        if let Some(v) = vectors.get(author) {
            for (term, &tf) in &v.term_counts {
                *community_tf.entry(term.clone()).or_insert(0) += tf;
                centroid_weights.entry(term.clone()).or_insert(0.0);
            }
            for (term, w) in v.weights.iter() {
                *centroid_weights.entry(term.to_string()).or_insert(0.0) += w;
            }
        }
    }

    let mut by_weight: Vec<(&String, f64)> =
        centroid_weights.iter().map(|(t, &w)| (t, w)).collect();
    by_weight.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(b.0)));
    let mut by_tf: Vec<(&String, u64)> = community_tf.iter().map(|(t, &c)| (t, c)).collect();
    by_tf.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));

    let mut result = BTreeSet::new();
    for (term, _) in by_weight.into_iter().take(k) {
        result.insert(term.clone());
    }
    for (term, _) in by_tf.into_iter().take(k) {
        result.insert(term.clone());
    }
    result
}

/// Parses `keywords.tsv`: `doc_id<TAB>keyword1;keyword2;…`; repeated rows
/// for one document merge their keyword lists.
pub fn parse_keywords<R: BufRead>(reader: R, path: &Path) -> Result<Vec<KeywordAssignment>> {
    let mut merged: BTreeMap<DocId, Vec<String>> = BTreeMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 2 {
            return Err(Error::Format {
                path: path.display().to_string(),
                line: lineno + 1,
                message: "expected doc_id<TAB>keyword1;keyword2;…".into(),
            });
        }
        let keywords: Vec<String> = cols[1]
            .split(';')
            .map(str::trim)
            .filter(|k| !k.is_empty())
            .map(str::to_string)
            .collect();
        if keywords.is_empty() {
            return Err(Error::Format {
                path: path.display().to_string(),
                line: lineno + 1,
                message: "document row has no keywords".into(),
            });
        }
        merged.entry(cols[0].to_string()).or_default().extend(keywords);
    }
    Ok(merged
        .into_iter()
        .map(|(doc_id, keywords)| KeywordAssignment { doc_id, keywords })
        .collect())
}

/// Writes the centroid export: `window_idx<TAB>community_id<TAB>`
/// `term:weight,…`, terms sorted by descending weight (ties
/// lexicographic), weights to 4 decimals; zero-weight terms omitted.
pub fn write_centroids<W: Write>(centroids: &[Centroid], mut out: W) -> Result<()> {
    let mut sorted: Vec<&Centroid> = centroids.iter().collect();
    sorted.sort_by_key(|c| c.community);
    for c in sorted {
        let mut terms: Vec<(&str, f64)> = c.weights.iter().filter(|(_, w)| *w > 0.0).collect();
        terms.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(b.0)));
        let joined: Vec<String> = terms
            .iter()
            .map(|(t, w)| format!("{t}:{}", crate::format::real4(*w)))
            .collect();
        writeln!(
            out,
            "{}\t{}\t{}",
            c.community.window,
            c.community.community,
            joined.join(",")
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window() -> TemporalWindow {
        TemporalWindow::new(2000, 2002)
    }

    fn doc(id: &str, year: i32, authors: &[&str]) -> (DocId, DocumentMeta) {
        (
            id.to_string(),
            DocumentMeta {
                doc_id: id.to_string(),
                year,
                authors: authors.iter().map(|a| a.to_string()).collect(),
            },
        )
    }

    fn kw(doc_id: &str, keywords: &[&str]) -> KeywordAssignment {
        KeywordAssignment {
            doc_id: doc_id.to_string(),
            keywords: keywords.iter().map(|k| k.to_string()).collect(),
        }
    }

    fn vector(pairs: &[(&str, f64)]) -> TermVector {
        TermVector::from_pairs(pairs.iter().map(|(t, w)| (t.to_string(), *w)))
    }

    #[test]
    fn tokenize_lowercases_and_filters() {
        assert_eq!(
            tokenize("Semantic-Web search, 2009"),
            vec!["semantic", "web", "search"]
        );
        assert_eq!(tokenize("a 1 xy"), vec!["xy"]);
    }

    #[test]
    fn cosine_examples() {
        let u = vector(&[("a", 1.0), ("b", 1.0)]);
        assert_eq!(cosine_similarity(&u, &u), 1.0);
        assert_eq!(dissim(&u, &u), 0.0);

        let v = vector(&[("c", 2.0)]);
        assert_eq!(cosine_similarity(&u, &v), 0.0);
        assert_eq!(dissim(&u, &v), 1.0);

        let x = vector(&[("a", 1.0), ("b", 1.0)]);
        let y = vector(&[("b", 1.0), ("c", 1.0)]);
        assert!((cosine_similarity(&x, &y) - 0.5).abs() < 1e-12);

        let zero = TermVector::new();
        assert_eq!(cosine_similarity(&zero, &u), 0.0);
        assert_eq!(dissim(&zero, &u), 1.0);
    }

    #[test]
    fn iaf_zeroes_ubiquitous_terms() {
        let docs: BTreeMap<_, _> = [
            doc("D1", 2001, &["a"]),
            doc("D2", 2001, &["b"]),
        ]
        .into_iter()
        .collect();
        let assignments = vec![kw("D1", &["shared"]), kw("D2", &["shared"])];
        let vectors = build_author_vectors(&assignments, &docs, &window());
        assert_eq!(vectors.get("a").unwrap().weights.get("share"), 0.0);
        assert_eq!(vectors.get("a").unwrap().term_counts["share"], 1);
    }

    #[test]
    fn tf_iaf_matches_direct_evaluation() {
        // 4 in-window authors; term only in a's pool with tf = 2.
        let docs: BTreeMap<_, _> = [
            doc("D1", 2001, &["a"]),
            doc("D2", 2001, &["b"]),
            doc("D3", 2001, &["c"]),
            doc("D4", 2001, &["d"]),
        ]
        .into_iter()
        .collect();
        let assignments = vec![kw("D1", &["unique", "unique"])];
        let vectors = build_author_vectors(&assignments, &docs, &window());
        let w = vectors.get("a").unwrap().weights.get("uniqu");
        assert!((w - 2.0 * 4.0_f64.ln()).abs() < 1e-12);
        // Authors without keywords still exist with empty vectors.
        assert!(vectors.get("d").unwrap().weights.is_empty());
        assert_eq!(vectors.author_count(), 4);
    }

    #[test]
    fn multi_author_documents_share_keywords() {
        let docs: BTreeMap<_, _> = [doc("D1", 2001, &["a", "b"]), doc("D2", 2001, &["c"])]
            .into_iter()
            .collect();
        let assignments = vec![kw("D1", &["joint"])];
        let vectors = build_author_vectors(&assignments, &docs, &window());
        assert_eq!(vectors.get("a").unwrap().term_counts["joint"], 1);
        assert_eq!(vectors.get("b").unwrap().term_counts["joint"], 1);
        assert!(vectors.get("c").unwrap().term_counts.is_empty());
    }

    #[test]
    fn out_of_window_documents_are_ignored() {
        let docs: BTreeMap<_, _> = [doc("D1", 1990, &["a"]), doc("D2", 2001, &["a"])]
            .into_iter()
            .collect();
        let assignments = vec![kw("D1", &["old"]), kw("D2", &["new"])];
        let vectors = build_author_vectors(&assignments, &docs, &window());
        let v = vectors.get("a").unwrap();
        assert!(!v.term_counts.contains_key("old"));
        assert!(v.term_counts.contains_key("new"));
    }

    #[test]
    fn centroid_is_member_mean() {
        let docs: BTreeMap<_, _> = [
            doc("D1", 2001, &["a"]),
            doc("D2", 2001, &["b"]),
            doc("D3", 2001, &["c"]),
        ]
        .into_iter()
        .collect();
        // a: x twice, b: x and y once, c: nothing.
        let assignments = vec![kw("D1", &["xterm", "xterm"]), kw("D2", &["xterm", "ydata"])];
        let vectors = build_author_vectors(&assignments, &docs, &window());
        let members: BTreeSet<AuthorId> =
            ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let c = centroid(&members, &vectors).unwrap();
        let iaf_x = (3.0_f64 / 2.0).ln();
        let iaf_y = 3.0_f64.ln();
        assert!((c.get("xterm") - (2.0 * iaf_x + iaf_x) / 3.0).abs() < 1e-12);
        assert!((c.get("ydata") - iaf_y / 3.0).abs() < 1e-12);

        assert!(matches!(
            centroid(&BTreeSet::new(), &vectors),
            Err(Error::EmptyMembers)
        ));
    }

    #[test]
    fn characterising_keywords_unions_both_rankings() {
        // Author pools chosen so top TF-IAF and top TF disagree:
        // "common" has the highest community TF but zero IAF (every
        // author carries it), "rare" has the top TF-IAF weight.
        let docs: BTreeMap<_, _> = [
            doc("D1", 2001, &["a"]),
            doc("D2", 2001, &["b"]),
            doc("D3", 2001, &["c"]),
        ]
        .into_iter()
        .collect();
        let assignments = vec![
            kw("D1", &["common", "common", "rare"]),
            kw("D2", &["common"]),
            kw("D3", &["common"]),
        ];
        let vectors = build_author_vectors(&assignments, &docs, &window());
        let members: BTreeSet<AuthorId> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let keys = characterising_keywords(&members, &vectors, 1);
        assert!(keys.contains("rare"));
        assert!(keys.contains("common"));
        assert_eq!(keys.len(), 2);

        // With k >= distinct terms the result is exactly all terms.
        let all = characterising_keywords(&members, &vectors, 20);
        assert_eq!(all.len(), 2);

        // Monotone in k.
        assert!(keys.is_subset(&all));
    }

    #[test]
    fn centroid_export_format() {
        let c = Centroid {
            community: CommunityRef::new(1, 2),
            weights: vector(&[("beta", 0.25), ("alpha", 1.5)]),
        };
        let mut buf = Vec::new();
        write_centroids(&[c], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "1\t2\talpha:1.5000,beta:0.2500\n"
        );
    }

    #[test]
    fn keywords_parse_merges_rows() {
        let input = "D1\tsemantic web;ontology\nD1\trdf\n# c\n";
        let parsed = parse_keywords(
            std::io::BufReader::new(input.as_bytes()),
            Path::new("keywords.tsv"),
        )
        .unwrap();
        assert_eq!(parsed.len(), 1);
        assert_eq!(parsed[0].keywords, vec!["semantic web", "ontology", "rdf"]);

        assert!(parse_keywords(
            std::io::BufReader::new("D1\t;\n".as_bytes()),
            Path::new("keywords.tsv"),
        )
        .is_err());
    }
}
