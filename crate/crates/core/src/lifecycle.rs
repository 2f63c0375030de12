//! Per-community life-cycle measures: size, average vertex betweenness,
//! author entropy, relative density, topic drift, and cluster content
//! ratio, plus whole-clustering assessments.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rayon::prelude::*;

use crate::detect::{modularity, Partition};
use crate::track::match_partitions;
use crate::error::{Error, Result};
use crate::netbuild::{SnapshotGraph, TemporalWindow};
use crate::topics::{centroid, cosine_similarity, TermVector, WindowVectors};
use crate::track::LineageGraph;
use crate::{AuthorId, CommunityRef};

/// Tolerance for equal shortest-path lengths; reciprocal weights make
/// exact float equality across different summation orders unreliable.
const DIST_EPS: f64 = 1e-12;

/// How edge weights translate to path lengths for betweenness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeLength {
    /// Length `1 / weight`: heavily co-cited pairs are close (default).
    ReciprocalWeight,
    /// Every edge has length 1 (sensitivity-check mode).
    UnitHops,
}

/// A measure value with a degenerate-input marker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measure {
    pub value: f64,
    pub degenerate: bool,
}

impl Measure {
    fn plain(value: f64) -> Self {
        Self {
            value,
            degenerate: false,
        }
    }

    fn degenerate(value: f64) -> Self {
        Self {
            value,
            degenerate: true,
        }
    }
}

/// Exact weighted shortest-path betweenness (unnormalized unordered pair
/// counts, even split across equal-length paths).
pub fn vertex_betweenness(graph: &SnapshotGraph) -> BTreeMap<AuthorId, f64> {
    vertex_betweenness_with(graph, EdgeLength::ReciprocalWeight)
}

pub fn vertex_betweenness_with(
    graph: &SnapshotGraph,
    mode: EdgeLength,
) -> BTreeMap<AuthorId, f64> {
    let n = graph.node_count();
    let length = |w: f64| match mode {
        EdgeLength::ReciprocalWeight => 1.0 / w,
        EdgeLength::UnitHops => 1.0,
    };

    // Per-source passes are independent; chunked so the final reduction
    // order is fixed regardless of thread count.
    let sources: Vec<usize> = (0..n).collect();
    let partials: Vec<Vec<f64>> = sources
        .par_chunks(32)
        .map(|chunk| {
            let mut local = vec![0.0; n];
            for &s in chunk {
                accumulate_from_source(graph, s, &length, &mut local);
            }
            local
        })
        .collect();

    let mut scores = vec![0.0; n];
    for local in partials {
        for (slot, v) in scores.iter_mut().zip(local) {
            *slot += v;
        }
    }
    // Each unordered pair was counted from both endpoints.
    graph
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, a)| (a.clone(), scores[i] / 2.0))
        .collect()
}

fn accumulate_from_source(
    graph: &SnapshotGraph,
    s: usize,
    length: &impl Fn(f64) -> f64,
    scores: &mut [f64],
) {
    let n = graph.node_count();
    // Dijkstra distances.
    let mut dist = vec![f64::INFINITY; n];
    dist[s] = 0.0;
    let mut heap = std::collections::BinaryHeap::new();
    heap.push(std::cmp::Reverse((ordered_float(0.0), s)));
    let mut settled = vec![false; n];
    while let Some(std::cmp::Reverse((d, v))) = heap.pop() {
        if settled[v] {
            continue;
        }
        settled[v] = true;
        let dv = f64::from_bits(d);
        for (w, weight) in graph.neighbors(v) {
            let cand = dv + length(weight);
            if cand < dist[w] - DIST_EPS {
                dist[w] = cand;
                heap.push(std::cmp::Reverse((ordered_float(cand), w)));
            }
        }
    }

    // Shortest-path DAG in ascending distance order.
    let mut order: Vec<usize> = (0..n).filter(|&v| dist[v].is_finite()).collect();
    order.sort_by(|&a, &b| dist[a].partial_cmp(&dist[b]).unwrap().then(a.cmp(&b)));
    let mut sigma = vec![0.0; n];
    sigma[s] = 1.0;
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &v in &order {
        for (w, weight) in graph.neighbors(v) {
            if (dist[v] + length(weight) - dist[w]).abs() <= DIST_EPS {
                sigma[w] += sigma[v];
                preds[w].push(v);
            }
        }
    }

    // Dependency accumulation in reverse distance order.
    let mut delta = vec![0.0; n];
    for &w in order.iter().rev() {
        for &v in &preds[w] {
            delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
        }
        if w != s {
            scores[w] += delta[w];
        }
    }
}

/// Monotone bit pattern for non-negative finite floats.
fn ordered_float(v: f64) -> u64 {
    v.to_bits()
}

/// Author entropy of a community wrt the next window's clustering:
/// the normalized dispersion of the surviving members.
///
/// 0 when the survivors land in at most one cluster; 0 with the
/// degenerate flag when no member survives.
pub fn author_entropy(c_prev: &BTreeSet<AuthorId>, p_next: &Partition) -> Measure {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for author in c_prev {
        if let Some(c) = p_next.community_of(author) {
            *counts.entry(c).or_insert(0) += 1;
        }
    }
    let survivors: usize = counts.values().sum();
    if survivors == 0 {
        return Measure::degenerate(0.0);
    }
    if counts.len() <= 1 {
        return Measure::plain(0.0);
    }
    let norm = (counts.len() as f64).ln();
    let sum: f64 = counts
        .values()
        .map(|&c| {
            let f = c as f64 / survivors as f64;
            f * f.ln()
        })
        .sum();
    Measure::plain((-sum / norm).clamp(0.0, 1.0))
}

/// Relative density: internal edge weight over total incident edge
/// weight, each edge counted once. A community with no incident edges is
/// self-referential by definition: ρ = 1.
pub fn relative_density(graph: &SnapshotGraph, members: &BTreeSet<AuthorId>) -> f64 {
    let (internal, boundary) = community_edge_weights(graph, members);
    if internal + boundary == 0.0 {
        1.0
    } else {
        internal / (internal + boundary)
    }
}

/// The degree-reading alternative of [`relative_density`]: internal
/// edges contribute to both endpoints' degrees and therefore count
/// twice, `ρ = 2·internal / (2·internal + boundary)`.
pub fn relative_density_degree(graph: &SnapshotGraph, members: &BTreeSet<AuthorId>) -> f64 {
    let (internal, boundary) = community_edge_weights(graph, members);
    if internal + boundary == 0.0 {
        1.0
    } else {
        2.0 * internal / (2.0 * internal + boundary)
    }
}

fn community_edge_weights(graph: &SnapshotGraph, members: &BTreeSet<AuthorId>) -> (f64, f64) {
    assert!(!members.is_empty(), "relative density of an empty community");
    let in_community: Vec<bool> = graph
        .nodes()
        .iter()
        .map(|a| members.contains(a))
        .collect();
    let mut internal = 0.0;
    let mut boundary = 0.0;
    for (i, j, w) in graph.edges() {
        match (in_community[i], in_community[j]) {
            (true, true) => internal += w,
            (true, false) | (false, true) => boundary += w,
            (false, false) => {}
        }
    }
    (internal, boundary)
}

/// Topic drift: cosine similarity of a community's centroid across two
/// consecutive windows (low drift value = large topical change). A zero
/// centroid makes the value 0 with the degenerate flag.
pub fn topic_drift(centroid_prev: &TermVector, centroid_next: &TermVector) -> Measure {
    if centroid_prev.is_zero() || centroid_next.is_zero() {
        return Measure::degenerate(0.0);
    }
    Measure::plain(cosine_similarity(centroid_prev, centroid_next))
}

/// Cluster content ratio `H = I / E`: mean member-to-centroid similarity
/// over the similarity between the community centroid and the network
/// centroid. `E = 0` yields an infinity sentinel with the degenerate flag.
pub fn cluster_content_ratio(
    members: &BTreeSet<AuthorId>,
    vectors: &WindowVectors,
    network_authors: &BTreeSet<AuthorId>,
) -> Result<Measure> {
    let c = centroid(members, vectors)?;
    let network = centroid(network_authors, vectors)?;
    let zero = TermVector::new();
    let intra: f64 = members
        .iter()
        .map(|a| {
            let v = vectors.get(a).map_or(&zero, |v| &v.weights);
            cosine_similarity(v, &c)
        })
        .sum::<f64>()
        / members.len() as f64;
    let extra = cosine_similarity(&c, &network);
    if extra == 0.0 {
        return Ok(Measure::degenerate(f64::INFINITY));
    }
    Ok(Measure::plain(intra / extra))
}

/// The per-community life-cycle bundle. Entropy and drift are absent for
/// first-window communities and communities without a match predecessor.
#[derive(Debug, Clone, PartialEq)]
pub struct LifecycleProfile {
    pub community: CommunityRef,
    pub size: usize,
    pub avg_betweenness: f64,
    pub entropy: Option<f64>,
    pub density: f64,
    pub drift: Option<f64>,
    pub content_ratio: f64,
}

/// Everything measure computation needs about one window.
#[derive(Debug, Clone)]
pub struct WindowContext {
    pub graph: SnapshotGraph,
    pub partition: Partition,
    pub vectors: WindowVectors,
    pub betweenness: BTreeMap<AuthorId, f64>,
    pub centroids: Vec<TermVector>,
    pub network_centroid: TermVector,
}

impl WindowContext {
    pub fn build(graph: SnapshotGraph, partition: Partition, vectors: WindowVectors) -> Result<Self> {
        let betweenness = vertex_betweenness(&graph);
        let centroids = partition
            .communities()
            .iter()
            .map(|members| centroid(members, &vectors))
            .collect::<Result<Vec<_>>>()?;
        let authors: BTreeSet<AuthorId> = graph.node_set();
        let network_centroid = if authors.is_empty() {
            TermVector::new()
        } else {
            centroid(&authors, &vectors)?
        };
        Ok(Self {
            graph,
            partition,
            vectors,
            betweenness,
            centroids,
            network_centroid,
        })
    }

    pub fn window(&self) -> &TemporalWindow {
        self.graph.window()
    }
}

/// Computes the full profile of one community. Entropy and drift are
/// taken wrt the previous window through the lineage's match edge.
pub fn lifecycle_profile(
    windows: &[WindowContext],
    lineage: &LineageGraph,
    r: CommunityRef,
) -> Result<LifecycleProfile> {
    let ctx = windows.get(r.window).ok_or(Error::DanglingRef(r))?;
    let members = ctx
        .partition
        .members(r.community)
        .ok_or(Error::DanglingRef(r))?;

    let avg_betweenness = members
        .iter()
        .map(|a| ctx.betweenness.get(a).copied().unwrap_or(0.0))
        .sum::<f64>()
        / members.len() as f64;
    let density = relative_density(&ctx.graph, members);
    let content_ratio = cluster_content_ratio(members, &ctx.vectors, &ctx.graph.node_set())?.value;

    let (entropy, drift) = match lineage.match_into(r) {
        Some(m) if r.window > 0 => {
            let prev = &windows[r.window - 1];
            let prev_members = prev
                .partition
                .members(m.from)
                .ok_or(Error::DanglingRef(CommunityRef::new(r.window - 1, m.from)))?;
            let a = author_entropy(prev_members, &ctx.partition).value;
            let t = topic_drift(&prev.centroids[m.from], &ctx.centroids[r.community]).value;
            (Some(a), Some(t))
        }
        _ => (None, None),
    };

    Ok(LifecycleProfile {
        community: r,
        size: members.len(),
        avg_betweenness,
        entropy,
        density,
        drift,
        content_ratio,
    })
}

/// Whole-clustering quality for one window: modularity plus the
/// population mean and variance of H (and of A when a previous partition
/// exists) over the window's communities.
#[derive(Debug, Clone)]
pub struct ClusteringAssessment {
    pub window: TemporalWindow,
    pub modularity: f64,
    pub mean_content_ratio: Option<f64>,
    pub var_content_ratio: Option<f64>,
    pub mean_entropy: Option<f64>,
    pub var_entropy: Option<f64>,
    pub community_count: usize,
    /// Raw per-community values, for pooled overall statistics.
    pub content_ratios: Vec<f64>,
    pub entropies: Vec<f64>,
}

fn mean_var(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Some((mean, var))
}

pub fn assess_clustering(
    graph: &SnapshotGraph,
    partition: &Partition,
    vectors: &WindowVectors,
    prev_partition: Option<&Partition>,
) -> Result<ClusteringAssessment> {
    let q = modularity(graph, partition);
    let authors = graph.node_set();
    let mut content_ratios = Vec::new();
    for members in partition.communities() {
        content_ratios.push(cluster_content_ratio(members, vectors, &authors)?.value);
    }
    let entropies: Vec<f64> = match prev_partition {
        Some(prev) => match_partitions(prev, partition)
            .iter()
            .map(|m| author_entropy(&prev.communities()[m.from], partition).value)
            .collect(),
        None => Vec::new(),
    };
    let (mean_h, var_h) = mean_var(&content_ratios).unzip();
    let (mean_a, var_a) = mean_var(&entropies).unzip();
    Ok(ClusteringAssessment {
        window: graph.window().clone(),
        modularity: q,
        mean_content_ratio: mean_h,
        var_content_ratio: var_h,
        mean_entropy: mean_a,
        var_entropy: var_a,
        community_count: partition.community_count(),
        content_ratios,
        entropies,
    })
}

fn opt5(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), crate::format::real5)
}

/// Writes `profiles.tsv`:
/// `window_idx<TAB>community_id<TAB>S<TAB>B<TAB>A<TAB>rho<TAB>T<TAB>H`,
/// reals to 5 decimals, `NA` for absent fields.
pub fn write_profiles<W: Write>(profiles: &[LifecycleProfile], mut out: W) -> Result<()> {
    let mut sorted: Vec<&LifecycleProfile> = profiles.iter().collect();
    sorted.sort_by_key(|p| p.community);
    for p in sorted {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            p.community.window,
            p.community.community,
            p.size,
            crate::format::real5(p.avg_betweenness),
            opt5(p.entropy),
            crate::format::real5(p.density),
            opt5(p.drift),
            crate::format::real5(p.content_ratio),
        )?;
    }
    Ok(())
}

/// Writes `assessment.tsv`: one row per window with columns
/// `window  Q  var_Q  mean_H  var_H  mean_A  var_A  communities`, plus a
/// final `overall` row with the mean/variance of Q across windows and the
/// pooled statistics of H and A over all communities.
pub fn write_assessment<W: Write>(assessments: &[ClusteringAssessment], mut out: W) -> Result<()> {
    for (idx, a) in assessments.iter().enumerate() {
        writeln!(
            out,
            "{idx}\t{}\tNA\t{}\t{}\t{}\t{}\t{}",
            crate::format::real5(a.modularity),
            opt5(a.mean_content_ratio),
            opt5(a.var_content_ratio),
            opt5(a.mean_entropy),
            opt5(a.var_entropy),
            a.community_count,
        )?;
    }
    let qs: Vec<f64> = assessments.iter().map(|a| a.modularity).collect();
    let pooled_h: Vec<f64> = assessments
        .iter()
        .flat_map(|a| a.content_ratios.iter().copied())
        .collect();
    let pooled_a: Vec<f64> = assessments
        .iter()
        .flat_map(|a| a.entropies.iter().copied())
        .collect();
    let (mean_q, var_q) = mean_var(&qs).unzip();
    let (mean_h, var_h) = mean_var(&pooled_h).unzip();
    let (mean_a, var_a) = mean_var(&pooled_a).unzip();
    let total: usize = assessments.iter().map(|a| a.community_count).sum();
    writeln!(
        out,
        "overall\t{}\t{}\t{}\t{}\t{}\t{}\t{total}",
        opt5(mean_q),
        opt5(var_q),
        opt5(mean_h),
        opt5(var_h),
        opt5(mean_a),
        opt5(var_a),
    )?;
    Ok(())
}
