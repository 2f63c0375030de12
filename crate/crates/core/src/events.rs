//! Community shift, shift/merge, and topic-change event detection, with
//! configurable research-field camps and inter-camp flagging.
//!
//! All three scores multiply a topical dissimilarity by a structural
//! term, so each lies in [0, 1]: shift uses the ancestor fraction,
//! shift/merge the descendant fraction, and topic change `1 − A` over
//! the match edge.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::Serialize;

use crate::detect::Partition;
use crate::error::{Error, Result};
use crate::lifecycle::author_entropy;
use crate::topics::{dissim, TermVector};
use crate::track::LineageGraph;
use crate::CommunityRef;

/// The detectable event kinds, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EventKind {
    Shift,
    ShiftMerge,
    TopicChange,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Shift => "shift",
            EventKind::ShiftMerge => "shift_merge",
            EventKind::TopicChange => "topic_change",
        }
    }
}

/// A detected event with its score decomposition and camp labels.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub kind: EventKind,
    pub source: CommunityRef,
    pub target: CommunityRef,
    /// `dissim × structural`, in [0, 1].
    pub score: f64,
    /// Number of shared authors between source and target.
    pub overlap: usize,
    pub dissim: f64,
    /// Ancestor fraction, descendant fraction, or `1 − A`.
    pub structural: f64,
    /// Union of the camp labels of both endpoints.
    pub camps: BTreeSet<String>,
    pub inter_camp: bool,
    /// On shift events: whether the target community's timeline ends in
    /// the next window (no outgoing match edge). None when the target
    /// window is the last one or the kind is not shift.
    pub vanishes_next: Option<bool>,
}

/// Detection thresholds and the minimum author overlap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub shift: f64,
    pub shift_merge: f64,
    pub topic_change: f64,
    pub min_overlap: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            shift: 0.5,
            shift_merge: 0.5,
            topic_change: 0.3,
            min_overlap: 5,
        }
    }
}

/// Research-field camps: a label per set of stemmed keywords.
#[derive(Debug, Clone, PartialEq)]
pub struct CampConfig(pub BTreeMap<String, BTreeSet<String>>);

impl Default for CampConfig {
    /// The built-in Semantic Web / Information Retrieval camps.
    fn default() -> Self {
        let mut camps = BTreeMap::new();
        camps.insert(
            "SW".to_string(),
            ["semant", "ontolog", "rdf"].iter().map(|s| s.to_string()).collect(),
        );
        camps.insert(
            "IR".to_string(),
            ["ir", "retriev"].iter().map(|s| s.to_string()).collect(),
        );
        Self(camps)
    }
}

/// Every camp whose keyword set intersects the community's
/// characterising keywords; possibly empty, possibly multiple.
pub fn classify_camps(characterising: &BTreeSet<String>, config: &CampConfig) -> BTreeSet<String> {
    config
        .0
        .iter()
        .filter(|(_, keywords)| !keywords.is_disjoint(characterising))
        .map(|(label, _)| label.clone())
        .collect()
}

/// Attaches endpoint camp labels to an event: the camp set becomes the
/// union, and `inter_camp` is true iff at least two distinct camps are
/// involved.
pub fn flag_inter_camp(
    mut event: EventRecord,
    source_camps: &BTreeSet<String>,
    target_camps: &BTreeSet<String>,
) -> EventRecord {
    let mut camps = source_camps.clone();
    camps.extend(target_camps.iter().cloned());
    event.inter_camp = camps.len() >= 2;
    event.camps = camps;
    event
}

/// Scoring context over one analysis run: the lineage (member sets and
/// match edges), the partitions and per-community centroids of every
/// window, and the camp labels of every community.
pub struct EventContext<'a> {
    lineage: &'a LineageGraph,
    partitions: &'a [Partition],
    centroids: &'a [Vec<TermVector>],
    camps: BTreeMap<CommunityRef, BTreeSet<String>>,
}

impl<'a> EventContext<'a> {
    pub fn new(
        lineage: &'a LineageGraph,
        partitions: &'a [Partition],
        centroids: &'a [Vec<TermVector>],
        camps: BTreeMap<CommunityRef, BTreeSet<String>>,
    ) -> Self {
        Self {
            lineage,
            partitions,
            centroids,
            camps,
        }
    }

    fn check_consecutive(&self, prev: CommunityRef, next: CommunityRef) -> Result<()> {
        if next.window != prev.window + 1 {
            return Err(Error::InvalidPair(format!(
                "{prev} and {next} are not in consecutive windows"
            )));
        }
        Ok(())
    }

    fn pair_dissim(&self, prev: CommunityRef, next: CommunityRef) -> Result<f64> {
        let cp = self
            .centroids
            .get(prev.window)
            .and_then(|w| w.get(prev.community))
            .ok_or(Error::DanglingRef(prev))?;
        let cn = self
            .centroids
            .get(next.window)
            .and_then(|w| w.get(next.community))
            .ok_or(Error::DanglingRef(next))?;
        Ok(dissim(cp, cn))
    }

    /// Community shift: `dissim × ancestor`, defined across lineage
    /// lines only.
    pub fn shift_score(&self, prev: CommunityRef, next: CommunityRef) -> Result<f64> {
        self.check_consecutive(prev, next)?;
        if self.lineage.same_line(prev, next) {
            return Err(Error::InvalidPair(format!(
                "{prev} matches {next}: shift requires different lineage lines"
            )));
        }
        let anc = crate::track::ancestor_fraction(
            self.lineage.members(prev)?,
            self.lineage.members(next)?,
        )?;
        Ok(self.pair_dissim(prev, next)? * anc)
    }

    /// Community shift/merge: `dissim × descendant`, across lines only.
    pub fn shift_merge_score(&self, prev: CommunityRef, next: CommunityRef) -> Result<f64> {
        self.check_consecutive(prev, next)?;
        if self.lineage.same_line(prev, next) {
            return Err(Error::InvalidPair(format!(
                "{prev} matches {next}: shift/merge requires different lineage lines"
            )));
        }
        let desc = crate::track::descendant_fraction(
            self.lineage.members(prev)?,
            self.lineage.members(next)?,
        )?;
        Ok(self.pair_dissim(prev, next)? * desc)
    }

    /// Community topic change: `dissim × (1 − A)` over the match edge of
    /// `prev`. Errors when `prev` has no match.
    pub fn topic_change_score(&self, prev: CommunityRef) -> Result<f64> {
        let m = self.lineage.match_from(prev).ok_or_else(|| {
            Error::InvalidPair(format!("{prev} has no match in the next window"))
        })?;
        let next = CommunityRef::new(prev.window + 1, m.to);
        let entropy = self.entropy_of_match(prev, next)?;
        Ok(self.pair_dissim(prev, next)? * (1.0 - entropy))
    }

    fn entropy_of_match(&self, prev: CommunityRef, next: CommunityRef) -> Result<f64> {
        let next_partition = self
            .partitions
            .get(next.window)
            .ok_or(Error::DanglingRef(next))?;
        Ok(author_entropy(self.lineage.members(prev)?, next_partition).value)
    }

    fn camps_of(&self, r: CommunityRef) -> BTreeSet<String> {
        self.camps.get(&r).cloned().unwrap_or_default()
    }

    fn overlap(&self, prev: CommunityRef, next: CommunityRef) -> Result<usize> {
        Ok(self
            .lineage
            .members(prev)?
            .intersection(self.lineage.members(next)?)
            .count())
    }
}

/// Scores all consecutive-window community pairs and emits the events
/// meeting their thresholds and the minimum overlap, ordered by
/// (window, kind, descending score, source, target).
pub fn detect_events(ctx: &EventContext, thresholds: &Thresholds) -> Result<Vec<EventRecord>> {
    let mut out = Vec::new();
    let lineage = ctx.lineage;
    let last_window = lineage.window_count().saturating_sub(1);
    for w in 0..last_window {
        for i in 0..lineage.community_count(w) {
            let prev = CommunityRef::new(w, i);
            for j in 0..lineage.community_count(w + 1) {
                let next = CommunityRef::new(w + 1, j);
                let overlap = ctx.overlap(prev, next)?;
                if overlap == 0 || overlap < thresholds.min_overlap {
                    continue;
                }
                let d = ctx.pair_dissim(prev, next)?;
                if lineage.same_line(prev, next) {
                    let structural = 1.0 - ctx.entropy_of_match(prev, next)?;
                    let score = d * structural;
                    if score >= thresholds.topic_change {
                        out.push(build_event(
                            ctx,
                            EventKind::TopicChange,
                            prev,
                            next,
                            score,
                            overlap,
                            d,
                            structural,
                            None,
                        ));
                    }
                } else {
                    let members_prev = lineage.members(prev)?;
                    let members_next = lineage.members(next)?;
                    let ancestor = crate::track::ancestor_fraction(members_prev, members_next)?;
                    let shift = d * ancestor;
                    if shift >= thresholds.shift {
                        let vanishes = if next.window == last_window {
                            None
                        } else {
                            Some(lineage.match_from(next).is_none())
                        };
                        out.push(build_event(
                            ctx,
                            EventKind::Shift,
                            prev,
                            next,
                            shift,
                            overlap,
                            d,
                            ancestor,
                            vanishes,
                        ));
                    }
                    let descendant =
                        crate::track::descendant_fraction(members_prev, members_next)?;
                    let merge = d * descendant;
                    if merge >= thresholds.shift_merge {
                        out.push(build_event(
                            ctx,
                            EventKind::ShiftMerge,
                            prev,
                            next,
                            merge,
                            overlap,
                            d,
                            descendant,
                            None,
                        ));
                    }
                }
            }
        }
    }
    out.sort_by(|a, b| {
        (a.source.window, a.kind)
            .cmp(&(b.source.window, b.kind))
            .then(b.score.partial_cmp(&a.score).unwrap())
            .then(a.source.cmp(&b.source))
            .then(a.target.cmp(&b.target))
    });
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn build_event(
    ctx: &EventContext,
    kind: EventKind,
    source: CommunityRef,
    target: CommunityRef,
    score: f64,
    overlap: usize,
    dissim: f64,
    structural: f64,
    vanishes_next: Option<bool>,
) -> EventRecord {
    let event = EventRecord {
        kind,
        source,
        target,
        score,
        overlap,
        dissim,
        structural,
        camps: BTreeSet::new(),
        inter_camp: false,
        vanishes_next,
    };
    flag_inter_camp(event, &ctx.camps_of(source), &ctx.camps_of(target))
}

#[derive(Serialize)]
struct EventRow<'a> {
    kind: &'static str,
    window_from: usize,
    window_to: usize,
    source_id: usize,
    target_id: usize,
    score: f64,
    dissim: f64,
    structural: f64,
    overlap: usize,
    camps: Vec<&'a str>,
    inter_camp: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    vanishes_next: Option<bool>,
}

/// Writes `events.jsonl`: one JSON object per line, scores rounded to 5
/// decimals, in the detector's deterministic order.
pub fn write_events_jsonl<W: Write>(events: &[EventRecord], mut out: W) -> Result<()> {
    for e in events {
        let row = EventRow {
            kind: e.kind.as_str(),
            window_from: e.source.window,
            window_to: e.target.window,
            source_id: e.source.community,
            target_id: e.target.community,
            score: crate::format::round5(e.score),
            dissim: crate::format::round5(e.dissim),
            structural: crate::format::round5(e.structural),
            overlap: e.overlap,
            camps: e.camps.iter().map(String::as_str).collect(),
            inter_camp: e.inter_camp,
            vanishes_next: e.vanishes_next,
        };
        serde_json::to_writer(&mut out, &row).map_err(std::io::Error::from)?;
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::Partition;
    use crate::netbuild::{DocumentMeta, TemporalWindow};
    use crate::topics::{build_author_vectors, centroid};
    use crate::track::build_lineage;
    use crate::DocId;

    /// Builds one window's partition and per-community centroids, where
    /// every member carries its community's keyword block.
    fn window_data(
        year: i32,
        communities: &[(&[&str], &[&str])], // (members, keywords)
    ) -> (Partition, Vec<TermVector>) {
        let window = TemporalWindow::new(year, year);
        let mut raw_assign = BTreeMap::new();
        let mut docs: BTreeMap<DocId, DocumentMeta> = BTreeMap::new();
        let mut keyword_rows = Vec::new();
        for (cid, (members, keywords)) in communities.iter().enumerate() {
            for a in members.iter() {
                raw_assign.insert(a.to_string(), cid);
                let doc_id = format!("d_{a}_{year}");
                docs.insert(
                    doc_id.clone(),
                    DocumentMeta {
                        doc_id: doc_id.clone(),
                        year,
                        authors: vec![a.to_string()],
                    },
                );
                keyword_rows.push(crate::topics::KeywordAssignment {
                    doc_id,
                    keywords: keywords.iter().map(|k| k.to_string()).collect(),
                });
            }
        }
        let partition = Partition::new(window.clone(), raw_assign);
        let vectors = build_author_vectors(&keyword_rows, &docs, &window);
        let centroids = partition
            .communities()
            .iter()
            .map(|members| centroid(members, &vectors).unwrap())
            .collect();
        (partition, centroids)
    }

    fn names(prefix: &str, range: std::ops::Range<usize>) -> Vec<String> {
        range.map(|i| format!("{prefix}{i:02}")).collect()
    }

    fn refs(v: &[String]) -> Vec<&str> {
        v.iter().map(String::as_str).collect()
    }

    #[test]
    fn scores_match_hand_computation() {
        // Window 0: a 30-member community (block alpha) and a bystander.
        // Window 1: 10 members split off under orthogonal keywords; the
        // 20-member continuation keeps the match, so the moved block is
        // a cross-line pair.
        let p = names("p", 0..30);
        let q = names("q", 0..4);
        let moved: Vec<String> = p[..10].to_vec();
        let stay: Vec<String> = p[10..].to_vec();
        let (p0, c0) =
            window_data(2000, &[(&refs(&p), &["alphaterm"]), (&refs(&q), &["betaterm"])]);
        let (p1, c1) = window_data(
            2001,
            &[(&refs(&moved), &["gammaterm"]), (&refs(&stay), &["alphaterm"])],
        );
        let parts = vec![p0, p1];
        let centroids = vec![c0, c1];
        let lineage = build_lineage(&parts, 0.0).unwrap();
        let ctx = EventContext::new(&lineage, &parts, &centroids, BTreeMap::new());

        let prev = CommunityRef::new(0, parts[0].community_of(&p[0]).unwrap());
        let next = CommunityRef::new(1, parts[1].community_of(&moved[0]).unwrap());
        // Orthogonal keywords: dissim = 1; the target formed entirely
        // from prev members, and 10 of prev's 30 moved.
        let shift = ctx.shift_score(prev, next).unwrap();
        assert!((shift - 1.0).abs() < 1e-12);
        let merge = ctx.shift_merge_score(prev, next).unwrap();
        assert!((merge - 10.0 / 30.0).abs() < 1e-12);
        // Ratio identity: P_S / P_SM = |c_prev| / |c_next|.
        assert!((shift / merge - 30.0 / 10.0).abs() < 1e-12);
    }

    #[test]
    fn same_line_and_unmatched_pairs_are_errors() {
        // A second community keeps the IAF weights of "xterm" positive.
        let a = names("a", 0..5);
        let b = names("b", 0..5);
        let (p0, c0) =
            window_data(2000, &[(&refs(&a), &["xterm"]), (&refs(&b), &["bterm"])]);
        let (p1, c1) =
            window_data(2001, &[(&refs(&a), &["xterm"]), (&refs(&b), &["bterm"])]);
        let parts = vec![p0, p1];
        let centroids = vec![c0, c1];
        let lineage = build_lineage(&parts, 0.0).unwrap();
        let ctx = EventContext::new(&lineage, &parts, &centroids, BTreeMap::new());
        let r0 = CommunityRef::new(0, 0);
        let r1 = CommunityRef::new(1, 0);
        assert!(matches!(ctx.shift_score(r0, r1), Err(Error::InvalidPair(_))));
        assert!(matches!(
            ctx.shift_merge_score(r0, r1),
            Err(Error::InvalidPair(_))
        ));
        // The matched line supports topic change instead; identical
        // topics and zero dispersion give score 0.
        assert_eq!(ctx.topic_change_score(r0).unwrap(), 0.0);
        // A community with no match has no topic-change score.
        assert!(matches!(
            ctx.topic_change_score(CommunityRef::new(1, 0)),
            Err(Error::InvalidPair(_))
        ));
    }

    #[test]
    fn topic_change_reproduces_reported_product() {
        // dissim × (1 − A) with A = 0 equals the dissimilarity itself.
        let a = names("a", 0..6);
        let b = names("b", 0..4);
        let (p0, c0) =
            window_data(2000, &[(&refs(&a), &["oldtopic"]), (&refs(&b), &["bterm"])]);
        let (p1, c1) =
            window_data(2001, &[(&refs(&a), &["newtopic"]), (&refs(&b), &["bterm"])]);
        let parts = vec![p0, p1];
        let centroids = vec![c0, c1];
        let lineage = build_lineage(&parts, 0.0).unwrap();
        let ctx = EventContext::new(&lineage, &parts, &centroids, BTreeMap::new());
        let score = ctx.topic_change_score(CommunityRef::new(0, 0)).unwrap();
        assert!((score - 1.0).abs() < 1e-12);
    }

    #[test]
    fn detector_emits_planted_shift_and_respects_min_overlap() {
        // 10 of 30 authors shift into an orthogonal community; the
        // 20-member continuation wins the match (J = 20/30 > 10/30), so
        // the moved block is a cross-line shift with P_S = 1 × 10/10.
        let p = names("p", 0..30);
        let moved: Vec<String> = p[..10].to_vec();
        let stay: Vec<String> = p[10..].to_vec();
        let extra = names("x", 0..12);
        let (p0, c0) =
            window_data(2000, &[(&refs(&p), &["alphaterm"]), (&refs(&extra), &["zeta"])]);
        let (p1, c1) = window_data(
            2001,
            &[
                (&refs(&moved), &["gammaterm"]),
                (&refs(&stay), &["alphaterm"]),
                (&refs(&extra), &["zeta"]),
            ],
        );
        let parts = vec![p0, p1];
        let centroids = vec![c0, c1];
        let lineage = build_lineage(&parts, 0.0).unwrap();
        let ctx = EventContext::new(&lineage, &parts, &centroids, BTreeMap::new());

        let events = detect_events(&ctx, &Thresholds::default()).unwrap();
        let shifts: Vec<&EventRecord> =
            events.iter().filter(|e| e.kind == EventKind::Shift).collect();
        assert_eq!(shifts.len(), 1);
        assert_eq!(shifts[0].overlap, 10);
        assert!((shifts[0].score - 1.0).abs() < 1e-12);

        // Raising the overlap floor suppresses it.
        let none = detect_events(
            &ctx,
            &Thresholds {
                min_overlap: 11,
                ..Thresholds::default()
            },
        )
        .unwrap();
        assert!(none.iter().all(|e| e.kind != EventKind::Shift));
    }

    #[test]
    fn empty_lineage_produces_no_events() {
        let a = names("a", 0..5);
        let (p0, c0) = window_data(2000, &[(&refs(&a), &["xterm"])]);
        let parts = vec![p0];
        let centroids = vec![c0];
        let lineage = build_lineage(&parts, 0.0).unwrap();
        let ctx = EventContext::new(&lineage, &parts, &centroids, BTreeMap::new());
        assert!(detect_events(&ctx, &Thresholds::default()).unwrap().is_empty());
    }

    #[test]
    fn camp_classification_rules() {
        let config = CampConfig::default();
        let kws = |items: &[&str]| -> BTreeSet<String> {
            items.iter().map(|s| s.to_string()).collect()
        };
        assert_eq!(
            classify_camps(&kws(&["semant", "web"]), &config),
            kws(&["SW"])
        );
        assert_eq!(
            classify_camps(&kws(&["retriev", "search"]), &config),
            kws(&["IR"])
        );
        assert_eq!(
            classify_camps(&kws(&["ontolog", "ir"]), &config),
            kws(&["IR", "SW"])
        );
        assert!(classify_camps(&kws(&["graph"]), &config).is_empty());
    }

    #[test]
    fn inter_camp_requires_two_camps() {
        let base = EventRecord {
            kind: EventKind::Shift,
            source: CommunityRef::new(0, 0),
            target: CommunityRef::new(1, 0),
            score: 0.8,
            overlap: 6,
            dissim: 1.0,
            structural: 0.8,
            camps: BTreeSet::new(),
            inter_camp: false,
            vanishes_next: None,
        };
        let sw: BTreeSet<String> = ["SW".to_string()].into_iter().collect();
        let ir: BTreeSet<String> = ["IR".to_string()].into_iter().collect();
        let none = BTreeSet::new();
        assert!(flag_inter_camp(base.clone(), &sw, &ir).inter_camp);
        assert!(!flag_inter_camp(base.clone(), &ir, &ir).inter_camp);
        assert!(!flag_inter_camp(base, &none, &sw).inter_camp);
    }

    #[test]
    fn jsonl_shape_and_rounding() {
        let event = EventRecord {
            kind: EventKind::TopicChange,
            source: CommunityRef::new(1, 54),
            target: CommunityRef::new(2, 54),
            score: 0.575839999,
            overlap: 12,
            dissim: 0.575839999,
            structural: 1.0,
            camps: ["SW".to_string()].into_iter().collect(),
            inter_camp: false,
            vanishes_next: None,
        };
        let mut buf = Vec::new();
        write_events_jsonl(&[event], &mut buf).unwrap();
        let line = String::from_utf8(buf).unwrap();
        assert_eq!(
            line,
            "{\"kind\":\"topic_change\",\"window_from\":1,\"window_to\":2,\
             \"source_id\":54,\"target_id\":54,\"score\":0.57584,\"dissim\":0.57584,\
             \"structural\":1.0,\"overlap\":12,\"camps\":[\"SW\"],\"inter_camp\":false}\n"
        );
    }
}
