//! Position-stable force-directed layouts and evolution diagrams in DOT.
//!
//! Layouts persist node positions across windows and color communities by
//! their match chain, so consecutive snapshots stay visually comparable.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::detect::Partition;
use crate::error::{Error, Result};
use crate::netbuild::SnapshotGraph;
use crate::track::LineageGraph;
use crate::{AuthorId, CommunityRef};

/// Node coordinates carried across windows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LayoutState {
    positions: BTreeMap<AuthorId, (f64, f64)>,
}

impl LayoutState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn position(&self, author: &str) -> Option<(f64, f64)> {
        self.positions.get(author).copied()
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&AuthorId, (f64, f64))> {
        self.positions.iter().map(|(a, &p)| (a, p))
    }
}

/// Seeds for the force model: area is normalized to `n × 10⁴` square
/// units, giving the natural length `k = √(area/n) = 100`.
const AREA_PER_NODE: f64 = 1e4;

/// Fruchterman-Reingold layout with position persistence.
///
/// Returning nodes start at their prior coordinates; new nodes are placed
/// uniformly at random inside the bounding box of their community's
/// already-placed members when one exists (else in the full frame).
/// Deterministic for fixed (graph, prior, partition, seed, iterations);
/// with zero iterations prior coordinates pass through bit-exactly.
pub fn fr_layout(
    graph: &SnapshotGraph,
    prior: &LayoutState,
    partition: Option<&Partition>,
    seed: u64,
    iterations: u32,
) -> LayoutState {
    let n = graph.node_count();
    if n == 0 {
        return LayoutState::new();
    }
    let area = n as f64 * AREA_PER_NODE;
    let frame = area.sqrt();
    let k = (area / n as f64).sqrt();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);

    // Bounding boxes of already-placed members per community.
    let mut boxes: BTreeMap<usize, (f64, f64, f64, f64)> = BTreeMap::new();
    if let Some(p) = partition {
        for author in graph.nodes() {
            if let (Some(c), Some((x, y))) = (p.community_of(author), prior.position(author)) {
                let entry = boxes.entry(c).or_insert((x, x, y, y));
                entry.0 = entry.0.min(x);
                entry.1 = entry.1.max(x);
                entry.2 = entry.2.min(y);
                entry.3 = entry.3.max(y);
            }
        }
    }

    let mut pos: Vec<(f64, f64)> = Vec::with_capacity(n);
    for author in graph.nodes() {
        let p = match prior.position(author) {
            Some(p) => p,
            None => {
                let community_box = partition
                    .and_then(|p| p.community_of(author))
                    .and_then(|c| boxes.get(&c).copied());
                let (x0, x1, y0, y1) = community_box.unwrap_or((0.0, frame, 0.0, frame));
                let x = if x1 > x0 { rng.gen_range(x0..=x1) } else { x0 };
                let y = if y1 > y0 { rng.gen_range(y0..=y1) } else { y0 };
                (x, y)
            }
        };
        pos.push(p);
    }

    let t0 = frame / 10.0;
    for it in 0..iterations {
        let temp = t0 * (1.0 - it as f64 / iterations as f64);
        let mut disp = vec![(0.0f64, 0.0f64); n];

        // Repulsion between all pairs.
        for v in 0..n {
            for u in v + 1..n {
                let (dx, dy, dist) = separation(pos[v], pos[u], v, u);
                let f = k * k / dist;
                disp[v].0 += dx / dist * f;
                disp[v].1 += dy / dist * f;
                disp[u].0 -= dx / dist * f;
                disp[u].1 -= dy / dist * f;
            }
        }
        // Attraction along edges.
        for (i, j, _w) in graph.edges() {
            let (dx, dy, dist) = separation(pos[i], pos[j], i, j);
            let f = dist * dist / k;
            disp[i].0 -= dx / dist * f;
            disp[i].1 -= dy / dist * f;
            disp[j].0 += dx / dist * f;
            disp[j].1 += dy / dist * f;
        }
        // Displace, capped by the temperature, clamped to the frame.
        for v in 0..n {
            let (dx, dy) = disp[v];
            let len = (dx * dx + dy * dy).sqrt();
            if len > 0.0 {
                let step = len.min(temp);
                pos[v].0 = (pos[v].0 + dx / len * step).clamp(0.0, frame);
                pos[v].1 = (pos[v].1 + dy / len * step).clamp(0.0, frame);
            }
        }
    }

    // Carry forward absent nodes' prior coordinates; current nodes win.
    let mut positions: BTreeMap<AuthorId, (f64, f64)> =
        prior.iter().map(|(a, p)| (a.clone(), p)).collect();
    for (author, p) in graph.nodes().iter().cloned().zip(pos) {
        positions.insert(author, p);
    }
    LayoutState { positions }
}

impl From<BTreeMap<AuthorId, (f64, f64)>> for LayoutState {
    fn from(positions: BTreeMap<AuthorId, (f64, f64)>) -> Self {
        Self { positions }
    }
}

/// Displacement vector with a deterministic separation for coincident
/// points (no RNG involved, keeping force passes order-independent).
fn separation(a: (f64, f64), b: (f64, f64), ia: usize, ib: usize) -> (f64, f64, f64) {
    let mut dx = a.0 - b.0;
    let mut dy = a.1 - b.1;
    let mut dist = (dx * dx + dy * dy).sqrt();
    if dist < 1e-9 {
        let sep = 1e-3 * (ia as f64 - ib as f64);
        dx = sep;
        dy = 0.7 * sep;
        dist = (dx * dx + dy * dy).sqrt();
    }
    (dx, dy, dist)
}

/// Assigns one color id per match chain: matched communities share their
/// line's color, new lines take the smallest unused id.
pub fn assign_colors(lineage: &LineageGraph) -> BTreeMap<CommunityRef, usize> {
    let mut colors: BTreeMap<CommunityRef, usize> = BTreeMap::new();
    let mut next = 0;
    for w in 0..lineage.window_count() {
        for c in 0..lineage.community_count(w) {
            let r = CommunityRef::new(w, c);
            let inherited = lineage
                .match_into(r)
                .and_then(|m| colors.get(&CommunityRef::new(w - 1, m.from)).copied());
            let color = inherited.unwrap_or_else(|| {
                let id = next;
                next += 1;
                id
            });
            colors.insert(r, color);
        }
    }
    colors
}

/// Writes `layout.tsv`: `author_id<TAB>x<TAB>y<TAB>size<TAB>color_id`
/// with `size = ln(1 + betweenness)`, one row per node, sorted by author.
pub fn emit_snapshot_layout<W: Write>(
    layout: &LayoutState,
    partition: &Partition,
    betweenness: &BTreeMap<AuthorId, f64>,
    community_colors: &[usize],
    mut out: W,
) -> Result<()> {
    for (author, cid) in partition.assignment() {
        let (x, y) = layout.position(author).ok_or_else(|| {
            Error::InvalidConfig(format!("layout is missing author '{author}'"))
        })?;
        let size = (1.0 + betweenness.get(author).copied().unwrap_or(0.0)).ln();
        let color = community_colors.get(*cid).copied().ok_or_else(|| {
            Error::InvalidConfig(format!("no color for community {cid}"))
        })?;
        writeln!(
            out,
            "{author}\t{}\t{}\t{}\t{color}",
            crate::format::weight(x),
            crate::format::weight(y),
            crate::format::weight(size),
        )?;
    }
    Ok(())
}

/// Selection parameters for an evolution diagram.
#[derive(Debug, Clone)]
pub struct DiagramSpec {
    pub focus: BTreeSet<CommunityRef>,
    /// Edges whose governing fraction falls below this are not drawn.
    pub min_fraction: f64,
    /// Inclusive window index range.
    pub window_range: (usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DotEdgeKind {
    Match,
    Ancestor,
    Merge,
}

struct DotEdge {
    from: CommunityRef,
    to: CommunityRef,
    kind: DotEdgeKind,
    label: String,
}

/// Emits a Fig-4-style evolution diagram: the subgraph reachable from the
/// focus communities, one rank per window. Match edges are solid and
/// ancestor edges dashed, both annotated with the ancestor percentage;
/// cross-line moves with a descendant fraction ≥ 0.5 are merge edges,
/// drawn dash-dotted and annotated "moved%(formed%)".
pub fn emit_evolution_dot(lineage: &LineageGraph, spec: &DiagramSpec) -> Result<String> {
    for r in &spec.focus {
        lineage.members(*r)?;
    }
    let (lo, hi) = spec.window_range;
    let hi = hi.min(lineage.window_count().saturating_sub(1));

    let mut edges: Vec<DotEdge> = Vec::new();
    for w in lo..hi {
        for i in 0..lineage.community_count(w) {
            let prev = CommunityRef::new(w, i);
            for j in 0..lineage.community_count(w + 1) {
                let next = CommunityRef::new(w + 1, j);
                let members_prev = lineage.members(prev)?;
                let members_next = lineage.members(next)?;
                if members_prev.intersection(members_next).next().is_none() {
                    continue;
                }
                let ancestor = crate::track::ancestor_fraction(members_prev, members_next)?;
                let descendant = crate::track::descendant_fraction(members_prev, members_next)?;
                if lineage.same_line(prev, next) {
                    if ancestor >= spec.min_fraction {
                        edges.push(DotEdge {
                            from: prev,
                            to: next,
                            kind: DotEdgeKind::Match,
                            label: crate::format::percent(ancestor),
                        });
                    }
                } else if descendant >= 0.5 {
                    if descendant >= spec.min_fraction {
                        edges.push(DotEdge {
                            from: prev,
                            to: next,
                            kind: DotEdgeKind::Merge,
                            label: format!(
                                "{}({})",
                                crate::format::percent(descendant),
                                crate::format::percent(ancestor)
                            ),
                        });
                    }
                } else if ancestor >= spec.min_fraction {
                    edges.push(DotEdge {
                        from: prev,
                        to: next,
                        kind: DotEdgeKind::Ancestor,
                        label: crate::format::percent(ancestor),
                    });
                }
            }
        }
    }

    // Keep the connected component(s) of the focus set.
    let mut adjacency: BTreeMap<CommunityRef, Vec<CommunityRef>> = BTreeMap::new();
    for e in &edges {
        adjacency.entry(e.from).or_default().push(e.to);
        adjacency.entry(e.to).or_default().push(e.from);
    }
    let mut reachable: BTreeSet<CommunityRef> = BTreeSet::new();
    let mut queue: VecDeque<CommunityRef> = spec
        .focus
        .iter()
        .filter(|r| lo <= r.window && r.window <= hi && adjacency.contains_key(r))
        .copied()
        .collect();
    reachable.extend(queue.iter().copied());
    while let Some(r) = queue.pop_front() {
        for &nbr in adjacency.get(&r).into_iter().flatten() {
            if reachable.insert(nbr) {
                queue.push_back(nbr);
            }
        }
    }
    edges.retain(|e| reachable.contains(&e.from) && reachable.contains(&e.to));

    let mut out = String::new();
    out.push_str("digraph evolution {\n");
    out.push_str("    rankdir=LR;\n");
    out.push_str("    node [shape=box];\n");
    for w in lo..=hi {
        let rank: Vec<CommunityRef> = reachable.iter().filter(|r| r.window == w).copied().collect();
        if rank.is_empty() {
            continue;
        }
        out.push_str("    { rank=same;");
        for r in rank {
            out.push_str(&format!(
                " \"{}\" [label=\"c{}\\n{}\"];",
                node_id(r),
                r.community,
                lineage.windows()[r.window].label()
            ));
        }
        out.push_str(" }\n");
    }
    for e in &edges {
        let style = match e.kind {
            DotEdgeKind::Match => "solid",
            DotEdgeKind::Ancestor => "dashed",
            DotEdgeKind::Merge => "dashed,dotted",
        };
        out.push_str(&format!(
            "    \"{}\" -> \"{}\" [style=\"{}\", label=\"{}\"];\n",
            node_id(e.from),
            node_id(e.to),
            style,
            e.label
        ));
    }
    out.push_str("}\n");
    Ok(out)
}

fn node_id(r: CommunityRef) -> String {
    format!("w{}_c{}", r.window, r.community)
}
