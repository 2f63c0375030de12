//! Community detection per snapshot: modularity, a seeded Louvain-style
//! optimizer, and import/export of externally produced partitions.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::netbuild::{SnapshotGraph, TemporalWindow};
use crate::{AuthorId, CommunityId};

/// Non-overlapping node-to-community assignment for one snapshot.
///
/// Community ids are dense from 0 and canonical: communities are ordered
/// by their smallest member author id. All constructors canonicalize, so
/// equal assignments compare equal regardless of input labelling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    window: TemporalWindow,
    assignment: BTreeMap<AuthorId, CommunityId>,
    communities: Vec<BTreeSet<AuthorId>>,
}

impl Partition {
    /// Builds a canonical partition from any labelling.
    pub fn new(window: TemporalWindow, raw: BTreeMap<AuthorId, usize>) -> Self {
        let mut groups: BTreeMap<usize, BTreeSet<AuthorId>> = BTreeMap::new();
        for (author, label) in raw {
            groups.entry(label).or_default().insert(author);
        }
        let mut communities: Vec<BTreeSet<AuthorId>> = groups.into_values().collect();
        // Canonical order: ascending smallest member.
        communities.sort_by(|a, b| a.iter().next().cmp(&b.iter().next()));
        let mut assignment = BTreeMap::new();
        for (cid, members) in communities.iter().enumerate() {
            for author in members {
                assignment.insert(author.clone(), cid);
            }
        }
        Self {
            window,
            assignment,
            communities,
        }
    }

    pub fn singletons(window: TemporalWindow, authors: impl IntoIterator<Item = AuthorId>) -> Self {
        let raw: BTreeMap<AuthorId, usize> =
            authors.into_iter().enumerate().map(|(i, a)| (a, i)).collect();
        Self::new(window, raw)
    }

    pub fn window(&self) -> &TemporalWindow {
        &self.window
    }

    pub fn community_of(&self, author: &str) -> Option<CommunityId> {
        self.assignment.get(author).copied()
    }

    pub fn assignment(&self) -> &BTreeMap<AuthorId, CommunityId> {
        &self.assignment
    }

    pub fn communities(&self) -> &[BTreeSet<AuthorId>] {
        &self.communities
    }

    pub fn members(&self, community: CommunityId) -> Option<&BTreeSet<AuthorId>> {
        self.communities.get(community)
    }

    pub fn community_count(&self) -> usize {
        self.communities.len()
    }

    pub fn node_count(&self) -> usize {
        self.assignment.len()
    }

    pub fn authors(&self) -> impl Iterator<Item = &AuthorId> {
        self.assignment.keys()
    }

    /// True when the partition assigns exactly the graph's node set.
    pub fn covers(&self, graph: &SnapshotGraph) -> bool {
        self.assignment.len() == graph.node_count()
            && graph.nodes().iter().all(|a| self.assignment.contains_key(a))
    }
}

/// Newman-Girvan modularity of a partition:
/// `Q = (1/2m) Σ_ij [w_ij − k_i k_j / 2m] δ(c_i, c_j)`.
///
/// A zero-total-weight graph has `Q = 0` by definition. Panics if the
/// partition does not cover exactly the graph's nodes.
pub fn modularity(graph: &SnapshotGraph, partition: &Partition) -> f64 {
    assert!(
        partition.covers(graph),
        "partition must cover exactly the graph's nodes"
    );
    let m = graph.total_weight();
    if m <= 0.0 {
        return 0.0;
    }
    let ncomm = partition.community_count();
    let mut internal = vec![0.0; ncomm];
    let mut tot = vec![0.0; ncomm];
    for (i, j, w) in graph.edges() {
        let ci = partition.community_of(graph.author(i)).unwrap();
        let cj = partition.community_of(graph.author(j)).unwrap();
        if ci == cj {
            internal[ci] += w;
        }
    }
    for idx in 0..graph.node_count() {
        let c = partition.community_of(graph.author(idx)).unwrap();
        tot[c] += graph.strength(idx);
    }
    (0..ncomm)
        .map(|c| internal[c] / m - (tot[c] / (2.0 * m)).powi(2))
        .sum()
}

/// Working graph for the optimizer; aggregation introduces self-loops.
struct WorkGraph {
    adj: Vec<BTreeMap<usize, f64>>,
    strength: Vec<f64>,
    two_m: f64,
}

impl WorkGraph {
    fn from_snapshot(graph: &SnapshotGraph) -> Self {
        let n = graph.node_count();
        let mut adj = vec![BTreeMap::new(); n];
        for (i, j, w) in graph.edges() {
            adj[i].insert(j, w);
            adj[j].insert(i, w);
        }
        Self::finish(adj)
    }

    fn finish(adj: Vec<BTreeMap<usize, f64>>) -> Self {
        let strength: Vec<f64> = adj
            .iter()
            .enumerate()
            .map(|(i, nbrs)| {
                nbrs.iter()
                    .map(|(&j, &w)| if j == i { 2.0 * w } else { w })
                    .sum()
            })
            .collect();
        let two_m = strength.iter().sum();
        Self {
            adj,
            strength,
            two_m,
        }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    /// Collapses communities into super-nodes. `assign` must be dense.
    fn aggregate(&self, assign: &[usize], ncomm: usize) -> Self {
        let mut adj = vec![BTreeMap::new(); ncomm];
        for (i, nbrs) in self.adj.iter().enumerate() {
            for (&j, &w) in nbrs {
                if j < i {
                    continue;
                }
                let (ci, cj) = (assign[i], assign[j]);
                let (lo, hi) = if ci <= cj { (ci, cj) } else { (cj, ci) };
                *adj[lo].entry(hi).or_insert(0.0) += w;
                if lo != hi {
                    *adj[hi].entry(lo).or_insert(0.0) += w;
                }
            }
        }
        Self::finish(adj)
    }
}

/// Greedy local moving from an initial assignment until no strictly
/// improving move remains. Returns the dense community labels and
/// whether any move happened.
fn local_moving(
    work: &WorkGraph,
    order: &[usize],
    resolution: f64,
    initial: &[usize],
) -> (Vec<usize>, usize, bool) {
    let n = work.len();
    let mut comm: Vec<usize> = initial.to_vec();
    let ncomm_init = comm.iter().max().map_or(0, |m| m + 1);
    let mut comm_tot: Vec<f64> = vec![0.0; ncomm_init.max(n)];
    for (node, &c) in comm.iter().enumerate() {
        comm_tot[c] += work.strength[node];
    }
    let mut improved = false;

    loop {
        let mut moved = false;
        for &node in order {
            let old = comm[node];
            let k = work.strength[node];
            comm_tot[old] -= k;

            // Weight from `node` to each adjacent community (self-loops
            // excluded: they move with the node).
            let mut links: BTreeMap<usize, f64> = BTreeMap::new();
            links.insert(old, 0.0);
            for (&nbr, &w) in &work.adj[node] {
                if nbr != node {
                    *links.entry(comm[nbr]).or_insert(0.0) += w;
                }
            }

            // Gain of joining community c (scaled by 2m, constant terms
            // dropped): w_node,c − γ · Σ_tot(c) · k / 2m.
            let gain = |c: usize, w: f64| w - resolution * comm_tot[c] * k / work.two_m;
            let base = gain(old, links[&old]);
            let mut best = (old, base);
            for (&c, &w) in &links {
                let g = gain(c, w);
                // Strictly-better only; ascending iteration makes ties
                // resolve to the lowest community id.
                if g > best.1 {
                    best = (c, g);
                }
            }

            comm_tot[best.0] += k;
            if best.0 != old {
                comm[node] = best.0;
                moved = true;
                improved = true;
            }
        }
        if !moved {
            break;
        }
    }

    // Renumber densely, preserving ascending label order.
    let labels: BTreeSet<usize> = comm.iter().copied().collect();
    let remap: BTreeMap<usize, usize> =
        labels.into_iter().enumerate().map(|(new, old)| (old, new)).collect();
    let ncomm = remap.len();
    for c in comm.iter_mut() {
        *c = remap[c];
    }
    (comm, ncomm, improved)
}

fn renumber_dense(labels: &mut [usize]) -> usize {
    let distinct: BTreeSet<usize> = labels.iter().copied().collect();
    let remap: BTreeMap<usize, usize> =
        distinct.into_iter().enumerate().map(|(new, old)| (old, new)).collect();
    for c in labels.iter_mut() {
        *c = remap[c];
    }
    remap.len()
}

/// Number of seeded restarts per detection run. Greedy local moving is
/// order-sensitive; a handful of visit orders drawn from the one seed
/// stream reliably reaches near-optimal modularity on snapshot-sized
/// graphs while staying fully deterministic.
const LOUVAIN_RESTARTS: usize = 10;

/// One full multilevel optimization with node-level refinement, iterated
/// until no move improves modularity. Returns the membership per node.
fn optimize_once(
    graph: &SnapshotGraph,
    base: &WorkGraph,
    rng: &mut ChaCha20Rng,
    resolution: f64,
) -> Vec<usize> {
    let n = graph.node_count();
    let mut membership: Vec<usize> = (0..n).collect();

    loop {
        let mut outer_improved = false;

        // Multilevel phase over the aggregate of the current communities.
        let ncomm = renumber_dense(&mut membership);
        let mut work = if ncomm == n {
            WorkGraph::from_snapshot(graph)
        } else {
            base.aggregate(&membership, ncomm)
        };
        // level_of[c]: current super-node of community c.
        let mut level_of: Vec<usize> = (0..work.len()).collect();
        loop {
            let mut order: Vec<usize> = (0..work.len()).collect();
            order.shuffle(rng);
            let singletons: Vec<usize> = (0..work.len()).collect();
            let (assign, agg_ncomm, improved) =
                local_moving(&work, &order, resolution, &singletons);
            if !improved {
                break;
            }
            outer_improved = true;
            for slot in level_of.iter_mut() {
                *slot = assign[*slot];
            }
            if agg_ncomm == work.len() {
                break;
            }
            work = work.aggregate(&assign, agg_ncomm);
        }
        for slot in membership.iter_mut() {
            *slot = level_of[*slot];
        }

        // Refinement: single-node moves on the original graph against
        // the final communities; escapes coarse local optima.
        renumber_dense(&mut membership);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let (refined, _, improved) = local_moving(base, &order, resolution, &membership);
        if improved {
            membership = refined;
            outer_improved = true;
        }

        if !outer_improved {
            break;
        }
    }
    membership
}

/// Detects communities by greedy modularity optimization: local moving
/// plus aggregation levels with node-level refinement, over several
/// restarts whose visit orders all derive from the one seed; the
/// highest-modularity result wins (ties keep the earliest restart).
///
/// Deterministic for a fixed seed and input: the node visit order is the
/// ascending-author-id order shuffled by a seeded generator, and gain
/// ties resolve toward the lowest community id. The result never scores
/// below the all-singletons baseline.
pub fn louvain_detect(graph: &SnapshotGraph, seed: u64, resolution: f64) -> Result<Partition> {
    let n = graph.node_count();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let base = WorkGraph::from_snapshot(graph);

    let mut best: Option<(f64, Partition)> = None;
    for _ in 0..LOUVAIN_RESTARTS {
        let membership = optimize_once(graph, &base, &mut rng, resolution);
        let raw: BTreeMap<AuthorId, usize> = membership
            .into_iter()
            .enumerate()
            .map(|(i, c)| (graph.author(i).clone(), c))
            .collect();
        let candidate = Partition::new(graph.window().clone(), raw);
        let q = modularity(graph, &candidate);
        if best.as_ref().is_none_or(|(best_q, _)| q > *best_q) {
            best = Some((q, candidate));
        }
    }
    Ok(best.expect("at least one restart").1)
}

/// Writes `partition.tsv`: `author_id<TAB>community_id`, sorted by author.
pub fn export_partition<W: Write>(partition: &Partition, mut out: W) -> Result<()> {
    for (author, cid) in partition.assignment() {
        writeln!(out, "{author}\t{cid}")?;
    }
    Ok(())
}

/// Reads a partition file over a known author universe.
///
/// Community ids are renumbered densely; authors in the universe that are
/// missing from the file become singleton communities. Conflicting rows
/// and unknown authors are format errors.
pub fn import_partition<R: BufRead>(
    reader: R,
    path: &Path,
    known_authors: &BTreeSet<AuthorId>,
    window: TemporalWindow,
) -> Result<Partition> {
    let mut raw: BTreeMap<AuthorId, usize> = BTreeMap::new();
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
                message: "expected author_id<TAB>community_id".into(),
            });
        }
        let cid: usize = cols[1].parse().map_err(|_| Error::Format {
            path: path.display().to_string(),
            line: lineno + 1,
            message: format!("invalid community id '{}'", cols[1]),
        })?;
        if !known_authors.contains(cols[0]) {
            return Err(Error::Format {
                path: path.display().to_string(),
                line: lineno + 1,
                message: format!("unknown author id '{}'", cols[0]),
            });
        }
        match raw.get(cols[0]) {
            Some(&prev) if prev != cid => {
                return Err(Error::Format {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    message: format!(
                        "author '{}' assigned to communities {prev} and {cid}",
                        cols[0]
                    ),
                });
            }
            _ => {
                raw.insert(cols[0].to_string(), cid);
            }
        }
    }
    // Uncovered known authors become fresh singletons.
    let mut next = raw.values().copied().max().map_or(0, |m| m + 1);
    for author in known_authors {
        if !raw.contains_key(author) {
            raw.insert(author.clone(), next);
            next += 1;
        }
    }
    Ok(Partition::new(window, raw))
}
