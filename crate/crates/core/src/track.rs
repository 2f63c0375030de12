//! Cross-snapshot community matching and the lineage graph.
//!
//! Communities of consecutive windows are matched by highest Jaccard
//! overlap with a conflict-fallback rule; ancestor and descendant
//! fractions annotate the remaining cross-window relations.

use std::collections::BTreeSet;
use std::io::Write;

use crate::detect::Partition;
use crate::error::{Error, Result};
use crate::netbuild::TemporalWindow;
use crate::{AuthorId, CommunityId, CommunityRef};

/// Jaccard coefficient `|a ∩ b| / |a ∪ b|`; 0 when both sets are empty.
pub fn jaccard(a: &BTreeSet<AuthorId>, b: &BTreeSet<AuthorId>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Overlap relative to the later community: `|c_prev ∩ c_next| / |c_next|`.
pub fn ancestor_fraction(c_prev: &BTreeSet<AuthorId>, c_next: &BTreeSet<AuthorId>) -> Result<f64> {
    if c_next.is_empty() {
        return Err(Error::UndefinedFraction("ancestor of an empty community"));
    }
    Ok(c_prev.intersection(c_next).count() as f64 / c_next.len() as f64)
}

/// Overlap relative to the earlier community: `|c_prev ∩ c_next| / |c_prev|`.
pub fn descendant_fraction(
    c_prev: &BTreeSet<AuthorId>,
    c_next: &BTreeSet<AuthorId>,
) -> Result<f64> {
    if c_prev.is_empty() {
        return Err(Error::UndefinedFraction("descendant of an empty community"));
    }
    Ok(c_prev.intersection(c_next).count() as f64 / c_prev.len() as f64)
}

/// One-to-one match: community `from` of window t continues as `to` of
/// window t+1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchEdge {
    pub from: CommunityId,
    pub to: CommunityId,
    pub jaccard: f64,
}

/// Matches each earlier community to its highest-Jaccard later community.
///
/// Conflicting claims on one target resolve to the higher Jaccard (exact
/// ties to the lower earlier community id); losers fall back to their
/// next-highest overlap until stable. Implemented as a greedy pass over
/// all claims in descending Jaccard order, which yields the same stable
/// outcome. A community whose best overlap is 0 gets no match.
pub fn match_partitions(p_t: &Partition, p_t1: &Partition) -> Vec<MatchEdge> {
    match_partitions_with(p_t, p_t1, 0.0)
}

/// [`match_partitions`] with an optional minimum-Jaccard threshold
/// (matches strictly below it are discarded; 0 disables the filter).
pub fn match_partitions_with(p_t: &Partition, p_t1: &Partition, min_jaccard: f64) -> Vec<MatchEdge> {
    let mut claims: Vec<(f64, CommunityId, CommunityId)> = Vec::new();
    for (i, prev) in p_t.communities().iter().enumerate() {
        for (j, next) in p_t1.communities().iter().enumerate() {
            let jac = jaccard(prev, next);
            if jac > 0.0 && jac >= min_jaccard {
                claims.push((jac, i, j));
            }
        }
    }
    claims.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap()
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let mut from_taken = vec![false; p_t.community_count()];
    let mut to_taken = vec![false; p_t1.community_count()];
    let mut edges = Vec::new();
    for (jac, i, j) in claims {
        if !from_taken[i] && !to_taken[j] {
            from_taken[i] = true;
            to_taken[j] = true;
            edges.push(MatchEdge {
                from: i,
                to: j,
                jaccard: jac,
            });
        }
    }
    edges.sort_by_key(|e| e.from);
    edges
}

/// A cross-window relation annotated with its exact fraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionEdge {
    /// Index of the earlier window.
    pub window: usize,
    pub from: CommunityId,
    pub to: CommunityId,
    pub value: f64,
}

/// Match relation between windows `window` and `window + 1`, with the
/// exact ancestor/descendant fractions of the matched pair alongside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineageMatch {
    pub window: usize,
    pub from: CommunityId,
    pub to: CommunityId,
    pub jaccard: f64,
    pub ancestor: f64,
    pub descendant: f64,
}

/// Match/ancestor/descendant relations among communities across all
/// windows, with the member sets retained for downstream scoring.
#[derive(Debug, Clone)]
pub struct LineageGraph {
    windows: Vec<TemporalWindow>,
    members: Vec<Vec<BTreeSet<AuthorId>>>,
    matches: Vec<LineageMatch>,
    ancestors: Vec<FractionEdge>,
    descendants: Vec<FractionEdge>,
}

/// Knobs for [`build_lineage_with`].
#[derive(Debug, Clone, Copy)]
pub struct LineageOptions {
    /// Ancestor/descendant edges below this fraction are not stored.
    pub min_annotated_fraction: f64,
    /// Optional minimum Jaccard for match edges (0 disables).
    pub min_jaccard: f64,
}

impl Default for LineageOptions {
    fn default() -> Self {
        Self {
            min_annotated_fraction: 0.0,
            min_jaccard: 0.0,
        }
    }
}

/// Builds the lineage over a chronological partition sequence, storing
/// all match edges plus every ancestor/descendant edge with fraction
/// ≥ `min_annotated_fraction`.
pub fn build_lineage(partitions: &[Partition], min_annotated_fraction: f64) -> Result<LineageGraph> {
    build_lineage_with(
        partitions,
        LineageOptions {
            min_annotated_fraction,
            min_jaccard: 0.0,
        },
    )
}

pub fn build_lineage_with(partitions: &[Partition], opts: LineageOptions) -> Result<LineageGraph> {
    // Consecutive windows: strictly increasing starts with a uniform stride.
    let starts: Vec<i32> = partitions.iter().map(|p| p.window().start_year).collect();
    let mut stride = None;
    for pair in starts.windows(2) {
        let d = pair[1] - pair[0];
        if d <= 0 {
            return Err(Error::InvalidConfig(
                "partitions must be ordered over strictly advancing windows".into(),
            ));
        }
        if *stride.get_or_insert(d) != d {
            return Err(Error::InvalidConfig(format!(
                "non-consecutive windows: stride changes from {} to {d}",
                stride.unwrap()
            )));
        }
    }

    let mut matches = Vec::new();
    let mut ancestors = Vec::new();
    let mut descendants = Vec::new();
    for (w, pair) in partitions.windows(2).enumerate() {
        let (p_t, p_t1) = (&pair[0], &pair[1]);
        for m in match_partitions_with(p_t, p_t1, opts.min_jaccard) {
            let prev = &p_t.communities()[m.from];
            let next = &p_t1.communities()[m.to];
            matches.push(LineageMatch {
                window: w,
                from: m.from,
                to: m.to,
                jaccard: m.jaccard,
                ancestor: ancestor_fraction(prev, next)?,
                descendant: descendant_fraction(prev, next)?,
            });
        }
        for (i, prev) in p_t.communities().iter().enumerate() {
            for (j, next) in p_t1.communities().iter().enumerate() {
                let anc = ancestor_fraction(prev, next)?;
                if anc >= opts.min_annotated_fraction {
                    ancestors.push(FractionEdge {
                        window: w,
                        from: i,
                        to: j,
                        value: anc,
                    });
                }
                let desc = descendant_fraction(prev, next)?;
                if desc >= opts.min_annotated_fraction {
                    descendants.push(FractionEdge {
                        window: w,
                        from: i,
                        to: j,
                        value: desc,
                    });
                }
            }
        }
    }

    Ok(LineageGraph {
        windows: partitions.iter().map(|p| p.window().clone()).collect(),
        members: partitions.iter().map(|p| p.communities().to_vec()).collect(),
        matches,
        ancestors,
        descendants,
    })
}

impl LineageGraph {
    pub fn window_count(&self) -> usize {
        self.windows.len()
    }

    pub fn windows(&self) -> &[TemporalWindow] {
        &self.windows
    }

    /// Number of communities in a window.
    pub fn community_count(&self, window: usize) -> usize {
        self.members.get(window).map_or(0, Vec::len)
    }

    pub fn members(&self, r: CommunityRef) -> Result<&BTreeSet<AuthorId>> {
        self.members
            .get(r.window)
            .and_then(|cs| cs.get(r.community))
            .ok_or(Error::DanglingRef(r))
    }

    pub fn refs(&self) -> impl Iterator<Item = CommunityRef> + '_ {
        self.members.iter().enumerate().flat_map(|(w, cs)| {
            (0..cs.len()).map(move |c| CommunityRef::new(w, c))
        })
    }

    pub fn matches(&self) -> &[LineageMatch] {
        &self.matches
    }

    pub fn ancestors(&self) -> &[FractionEdge] {
        &self.ancestors
    }

    pub fn descendants(&self) -> &[FractionEdge] {
        &self.descendants
    }

    /// The match continuing `r` into the next window, if any.
    pub fn match_from(&self, r: CommunityRef) -> Option<&LineageMatch> {
        self.matches
            .iter()
            .find(|m| m.window == r.window && m.from == r.community)
    }

    /// The match that `r` continues from the previous window, if any.
    pub fn match_into(&self, r: CommunityRef) -> Option<&LineageMatch> {
        self.matches
            .iter()
            .find(|m| m.window + 1 == r.window && m.to == r.community)
    }

    /// True when the matched pair (prev, next) lies on one lineage line.
    pub fn same_line(&self, prev: CommunityRef, next: CommunityRef) -> bool {
        next.window == prev.window + 1
            && self
                .match_from(prev)
                .is_some_and(|m| m.to == next.community)
    }
}

/// Writes `lineage.tsv`:
/// `window_idx<TAB>community_id<TAB>relation<TAB>next_community_id<TAB>value`,
/// values to 4 decimal places, ordered by (window, community, relation).
pub fn write_lineage<W: Write>(lineage: &LineageGraph, mut out: W) -> Result<()> {
    let mut rows: Vec<(usize, CommunityId, u8, CommunityId, f64)> = Vec::new();
    for m in &lineage.matches {
        rows.push((m.window, m.from, 0, m.to, m.jaccard));
    }
    for e in &lineage.ancestors {
        rows.push((e.window, e.from, 1, e.to, e.value));
    }
    for e in &lineage.descendants {
        rows.push((e.window, e.from, 2, e.to, e.value));
    }
    rows.sort_by_key(|r| (r.0, r.1, r.2, r.3));
    for (w, from, rel, to, value) in rows {
        let relation = match rel {
            0 => "match",
            1 => "ancestor",
            _ => "descendant",
        };
        writeln!(
            out,
            "{w}\t{from}\t{relation}\t{to}\t{}",
            crate::format::real4(value)
        )?;
    }
    Ok(())
}
