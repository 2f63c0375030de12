//! Pipeline stages. Every stage reads the previous stage's files and
//! writes its own artifacts, so the monolithic run and the subcommand
//! chain produce byte-identical outputs.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use rayon::prelude::*;
use serde::Serialize;

use commtrace_core::detect::{export_partition, import_partition, louvain_detect, Partition};
use commtrace_core::events::{classify_camps, detect_events, EventContext};
use commtrace_core::lifecycle::{
    assess_clustering, lifecycle_profile, vertex_betweenness, WindowContext,
};
use commtrace_core::netbuild::{
    author_citation_counts, build_cocitation, cocit_normalize, parse_citations, parse_docs,
    read_edges, write_edges, CitationRecord, DocumentMeta, LoadReport, SnapshotGraph,
    TemporalWindow,
};
use commtrace_core::topics::{
    build_author_vectors, centroid, characterising_keywords, parse_keywords, write_centroids,
    Centroid, WindowVectors,
};
use commtrace_core::track::{build_lineage_with, write_lineage, LineageGraph, LineageOptions};
use commtrace_core::viz::{
    assign_colors, emit_evolution_dot, emit_snapshot_layout, fr_layout, DiagramSpec, LayoutState,
};
use commtrace_core::{derive_seed, CommunityRef, DocId};

use crate::config::{Detector, PipelineConfig, Weighting};

const SEED_STAGE_DETECT: u64 = 1;
const SEED_STAGE_LAYOUT: u64 = 2;

// ---------------------------------------------------------------------------
// Artifact locations

pub fn window_dir(out: &Path, idx: usize) -> PathBuf {
    out.join(format!("w{idx:03}"))
}

pub fn edges_path(out: &Path, idx: usize) -> PathBuf {
    window_dir(out, idx).join("edges.tsv")
}

pub fn partition_path(out: &Path, idx: usize) -> PathBuf {
    window_dir(out, idx).join("partition.tsv")
}

pub fn layout_path(out: &Path, idx: usize) -> PathBuf {
    window_dir(out, idx).join("layout.tsv")
}

pub fn lineage_path(out: &Path) -> PathBuf {
    out.join("lineage.tsv")
}

pub fn centroids_path(out: &Path) -> PathBuf {
    out.join("centroids.tsv")
}

pub fn profiles_path(out: &Path) -> PathBuf {
    out.join("profiles.tsv")
}

pub fn assessment_path(out: &Path) -> PathBuf {
    out.join("assessment.tsv")
}

pub fn events_path(out: &Path) -> PathBuf {
    out.join("events.jsonl")
}

pub fn diagrams_dir(out: &Path) -> PathBuf {
    out.join("diagrams")
}

pub fn manifest_path(out: &Path) -> PathBuf {
    out.join("manifest.json")
}

/// External partition file for one window inside `config.partitions`.
pub fn external_partition_path(dir: &Path, idx: usize) -> PathBuf {
    dir.join(format!("w{idx:03}.tsv"))
}

// ---------------------------------------------------------------------------
// Shared loaders

fn load_inputs(
    config: &PipelineConfig,
) -> anyhow::Result<(BTreeSet<CitationRecord>, BTreeMap<DocId, DocumentMeta>, LoadReport)> {
    let citations_file = fs::File::open(&config.citations)
        .with_context(|| format!("opening {}", config.citations.display()))?;
    let (citations, report) = parse_citations(BufReader::new(citations_file), &config.citations)?;
    let docs_file = fs::File::open(&config.docs)
        .with_context(|| format!("opening {}", config.docs.display()))?;
    let docs = parse_docs(BufReader::new(docs_file), &config.docs)?;
    Ok((citations, docs, report))
}

fn load_graphs(config: &PipelineConfig) -> anyhow::Result<Vec<SnapshotGraph>> {
    let windows = config.analysis_windows()?;
    windows
        .into_iter()
        .enumerate()
        .map(|(idx, window)| {
            let path = edges_path(&config.out, idx);
            let file = fs::File::open(&path)
                .with_context(|| format!("opening {} (run `build` first)", path.display()))?;
            Ok(read_edges(BufReader::new(file), &path, window)?)
        })
        .collect()
}

fn load_partitions(
    config: &PipelineConfig,
    graphs: &[SnapshotGraph],
) -> anyhow::Result<Vec<Partition>> {
    graphs
        .iter()
        .enumerate()
        .map(|(idx, graph)| {
            let path = partition_path(&config.out, idx);
            let file = fs::File::open(&path)
                .with_context(|| format!("opening {} (run `detect` first)", path.display()))?;
            Ok(import_partition(
                BufReader::new(file),
                &path,
                &graph.node_set(),
                graph.window().clone(),
            )?)
        })
        .collect()
}

fn load_vectors(config: &PipelineConfig) -> anyhow::Result<Vec<WindowVectors>> {
    let windows = config.analysis_windows()?;
    let docs_file = fs::File::open(&config.docs)?;
    let docs = parse_docs(BufReader::new(docs_file), &config.docs)?;
    let keywords_file = fs::File::open(&config.keywords)
        .with_context(|| format!("opening {}", config.keywords.display()))?;
    let assignments = parse_keywords(BufReader::new(keywords_file), &config.keywords)?;
    Ok(windows
        .par_iter()
        .map(|w| build_author_vectors(&assignments, &docs, w))
        .collect())
}

fn rebuild_lineage(
    config: &PipelineConfig,
    partitions: &[Partition],
) -> anyhow::Result<LineageGraph> {
    Ok(build_lineage_with(
        partitions,
        LineageOptions {
            min_annotated_fraction: config.lineage_min_fraction,
            min_jaccard: config.min_jaccard,
        },
    )?)
}

fn create_file(path: &Path) -> anyhow::Result<BufWriter<fs::File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(
        fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

// ---------------------------------------------------------------------------
// Stages

#[derive(Debug, Clone, Serialize)]
pub struct WindowStat {
    pub label: String,
    pub nodes: usize,
    pub edges: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BuildSummary {
    pub load: LoadReport,
    pub windows: Vec<WindowStat>,
}

/// Parses the citation and document inputs and writes one `edges.tsv`
/// per analysis window, CoCit-normalized when configured.
pub fn stage_build(config: &PipelineConfig) -> anyhow::Result<BuildSummary> {
    let windows = config.analysis_windows()?;
    let (citations, docs, mut load) = load_inputs(config)?;

    let built: Vec<(SnapshotGraph, LoadReport)> = windows
        .par_iter()
        .map(|window| {
            let (graph, report) = build_cocitation(&citations, &docs, window)?;
            let graph = match config.weighting {
                Weighting::Raw => graph,
                Weighting::Cocit => {
                    let counts = author_citation_counts(&citations, &docs, window);
                    cocit_normalize(&graph, &counts)?
                }
            };
            Ok((graph, report))
        })
        .collect::<commtrace_core::Result<_>>()?;

    let mut stats = Vec::new();
    for (idx, (graph, report)) in built.iter().enumerate() {
        load.merge(report);
        let mut out = create_file(&edges_path(&config.out, idx))?;
        write_edges(graph, &mut out)?;
        out.flush()?;
        stats.push(WindowStat {
            label: graph.window().label(),
            nodes: graph.node_count(),
            edges: graph.edge_count(),
        });
    }
    Ok(BuildSummary {
        load,
        windows: stats,
    })
}

/// Detects communities per window (or imports external partitions) and
/// writes one `partition.tsv` per window. Returns community counts.
pub fn stage_detect(config: &PipelineConfig) -> anyhow::Result<Vec<usize>> {
    let graphs = load_graphs(config)?;
    let partitions: Vec<Partition> = match config.detector {
        Detector::Builtin => graphs
            .par_iter()
            .enumerate()
            .map(|(idx, graph)| {
                if graph.node_count() == 0 {
                    return Ok(Partition::new(graph.window().clone(), BTreeMap::new()));
                }
                let seed = derive_seed(config.seed, SEED_STAGE_DETECT, idx as u64);
                louvain_detect(graph, seed, config.resolution)
            })
            .collect::<commtrace_core::Result<_>>()?,
        Detector::Imported => {
            let dir = config
                .partitions
                .as_ref()
                .context("detector 'imported' requires the partitions directory")?;
            graphs
                .iter()
                .enumerate()
                .map(|(idx, graph)| {
                    let path = external_partition_path(dir, idx);
                    let file = fs::File::open(&path)
                        .with_context(|| format!("opening {}", path.display()))?;
                    Ok(import_partition(
                        BufReader::new(file),
                        &path,
                        &graph.node_set(),
                        graph.window().clone(),
                    )?)
                })
                .collect::<anyhow::Result<_>>()?
        }
    };
    for (idx, partition) in partitions.iter().enumerate() {
        let mut out = create_file(&partition_path(&config.out, idx))?;
        export_partition(partition, &mut out)?;
        out.flush()?;
    }
    Ok(partitions.iter().map(Partition::community_count).collect())
}

/// Matches communities across consecutive windows and writes `lineage.tsv`.
pub fn stage_track(config: &PipelineConfig) -> anyhow::Result<()> {
    let graphs = load_graphs(config)?;
    let partitions = load_partitions(config, &graphs)?;
    let lineage = rebuild_lineage(config, &partitions)?;
    let mut out = create_file(&lineage_path(&config.out))?;
    write_lineage(&lineage, &mut out)?;
    out.flush()?;
    Ok(())
}

/// Builds TF-IAF vectors and community centroids; writes `centroids.tsv`.
pub fn stage_topics(config: &PipelineConfig) -> anyhow::Result<()> {
    let graphs = load_graphs(config)?;
    let partitions = load_partitions(config, &graphs)?;
    let vectors = load_vectors(config)?;
    let mut centroids = Vec::new();
    for (w, partition) in partitions.iter().enumerate() {
        for (cid, members) in partition.communities().iter().enumerate() {
            centroids.push(Centroid {
                community: CommunityRef::new(w, cid),
                weights: centroid(members, &vectors[w])?,
            });
        }
    }
    let mut out = create_file(&centroids_path(&config.out))?;
    write_centroids(&centroids, &mut out)?;
    out.flush()?;
    Ok(())
}

fn build_window_contexts(config: &PipelineConfig) -> anyhow::Result<Vec<WindowContext>> {
    let graphs = load_graphs(config)?;
    let partitions = load_partitions(config, &graphs)?;
    let vectors = load_vectors(config)?;
    graphs
        .into_iter()
        .zip(partitions)
        .zip(vectors)
        .map(|((graph, partition), vectors)| Ok(WindowContext::build(graph, partition, vectors)?))
        .collect()
}

/// Computes life-cycle profiles and clustering assessments; writes
/// `profiles.tsv` and `assessment.tsv`.
pub fn stage_measures(config: &PipelineConfig) -> anyhow::Result<()> {
    let contexts = build_window_contexts(config)?;
    let partitions: Vec<Partition> = contexts.iter().map(|c| c.partition.clone()).collect();
    let lineage = rebuild_lineage(config, &partitions)?;

    let mut profiles = Vec::new();
    for r in lineage.refs() {
        profiles.push(lifecycle_profile(&contexts, &lineage, r)?);
    }
    let mut out = create_file(&profiles_path(&config.out))?;
    commtrace_core::lifecycle::write_profiles(&profiles, &mut out)?;
    out.flush()?;

    let mut assessments = Vec::new();
    for (idx, ctx) in contexts.iter().enumerate() {
        let prev = idx.checked_sub(1).map(|p| &contexts[p].partition);
        assessments.push(assess_clustering(
            &ctx.graph,
            &ctx.partition,
            &ctx.vectors,
            prev,
        )?);
    }
    let mut out = create_file(&assessment_path(&config.out))?;
    commtrace_core::lifecycle::write_assessment(&assessments, &mut out)?;
    out.flush()?;
    Ok(())
}

/// Scores all consecutive community pairs and writes `events.jsonl`.
/// Returns the number of emitted events.
pub fn stage_events(config: &PipelineConfig) -> anyhow::Result<usize> {
    let graphs = load_graphs(config)?;
    let partitions = load_partitions(config, &graphs)?;
    let vectors = load_vectors(config)?;
    let lineage = rebuild_lineage(config, &partitions)?;

    let mut centroids: Vec<Vec<commtrace_core::topics::TermVector>> = Vec::new();
    let mut camps: BTreeMap<CommunityRef, BTreeSet<String>> = BTreeMap::new();
    let camp_config = config.camp_config();
    for (w, partition) in partitions.iter().enumerate() {
        let mut per_window = Vec::new();
        for (cid, members) in partition.communities().iter().enumerate() {
            per_window.push(centroid(members, &vectors[w])?);
            let keywords = characterising_keywords(members, &vectors[w], config.top_k);
            camps.insert(
                CommunityRef::new(w, cid),
                classify_camps(&keywords, &camp_config),
            );
        }
        centroids.push(per_window);
    }

    let ctx = EventContext::new(&lineage, &partitions, &centroids, camps);
    let events = detect_events(&ctx, &config.thresholds())?;
    let mut out = create_file(&events_path(&config.out))?;
    commtrace_core::events::write_events_jsonl(&events, &mut out)?;
    out.flush()?;
    Ok(events.len())
}

/// Emits one position-stable layout per window (`layout.tsv`).
pub fn stage_layout(config: &PipelineConfig) -> anyhow::Result<()> {
    let graphs = load_graphs(config)?;
    let partitions = load_partitions(config, &graphs)?;
    let lineage = rebuild_lineage(config, &partitions)?;
    let colors = assign_colors(&lineage);

    let mut prior = LayoutState::new();
    for (idx, (graph, partition)) in graphs.iter().zip(&partitions).enumerate() {
        let seed = derive_seed(config.seed, SEED_STAGE_LAYOUT, idx as u64);
        let layout = fr_layout(graph, &prior, Some(partition), seed, config.layout_iterations);
        let betweenness = vertex_betweenness(graph);
        let community_colors: Vec<usize> = (0..partition.community_count())
            .map(|cid| colors[&CommunityRef::new(idx, cid)])
            .collect();
        let mut out = create_file(&layout_path(&config.out, idx))?;
        emit_snapshot_layout(&layout, partition, &betweenness, &community_colors, &mut out)?;
        out.flush()?;
        prior = layout;
    }
    Ok(())
}

/// Options for the `diagram` stage.
#[derive(Debug, Clone, Default)]
pub struct DiagramOptions {
    /// Focus communities; empty means every community.
    pub focus: Vec<CommunityRef>,
    /// Overrides the config's lineage fraction filter.
    pub min_fraction: Option<f64>,
    /// Output name under `diagrams/` (without extension).
    pub name: Option<String>,
}

/// Emits a DOT evolution diagram; returns the written path.
pub fn stage_diagram(config: &PipelineConfig, opts: &DiagramOptions) -> anyhow::Result<PathBuf> {
    let graphs = load_graphs(config)?;
    let partitions = load_partitions(config, &graphs)?;
    let lineage = rebuild_lineage(config, &partitions)?;

    let focus: BTreeSet<CommunityRef> = if opts.focus.is_empty() {
        lineage.refs().collect()
    } else {
        opts.focus.iter().copied().collect()
    };
    let spec = DiagramSpec {
        focus,
        min_fraction: opts.min_fraction.unwrap_or(config.lineage_min_fraction),
        window_range: (0, lineage.window_count().saturating_sub(1)),
    };
    let dot = emit_evolution_dot(&lineage, &spec)?;
    let name = opts.name.clone().unwrap_or_else(|| {
        if opts.focus.is_empty() {
            "evolution".to_string()
        } else {
            let tags: Vec<String> = opts
                .focus
                .iter()
                .map(|r| format!("w{}_c{}", r.window, r.community))
                .collect();
            format!("focus_{}", tags.join("_"))
        }
    });
    let path = diagrams_dir(&config.out).join(format!("{name}.dot"));
    let mut out = create_file(&path)?;
    out.write_all(dot.as_bytes())?;
    out.flush()?;
    Ok(path)
}

// ---------------------------------------------------------------------------
// Full pipeline and the run manifest

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub status: String,
    pub errors: Vec<String>,
    pub config: PipelineConfig,
    pub windows: Vec<String>,
    pub load: Option<LoadReport>,
    pub window_stats: Vec<WindowStat>,
    pub community_counts: Vec<usize>,
    pub event_count: Option<usize>,
    pub timings_ms: BTreeMap<String, u64>,
    pub artifacts: Vec<String>,
}

fn write_manifest(config: &PipelineConfig, manifest: &Manifest) -> anyhow::Result<()> {
    let mut out = create_file(&manifest_path(&config.out))?;
    serde_json::to_writer_pretty(&mut out, manifest)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

/// Runs every stage in order, writing the manifest last. On failure the
/// manifest is still written with `status = "failed"` and the error list.
pub fn run_pipeline(config: &PipelineConfig) -> anyhow::Result<Manifest> {
    let validation = config.validate();
    if !validation.is_empty() {
        bail!(
            "configuration invalid:\n{}",
            serde_json::json!({ "errors": validation })
        );
    }
    let windows = config.analysis_windows()?;
    let mut manifest = Manifest {
        status: "running".into(),
        errors: Vec::new(),
        config: config.clone(),
        windows: windows.iter().map(TemporalWindow::label).collect(),
        load: None,
        window_stats: Vec::new(),
        community_counts: Vec::new(),
        event_count: None,
        timings_ms: BTreeMap::new(),
        artifacts: Vec::new(),
    };
    fs::create_dir_all(&config.out)?;

    let result = (|| -> anyhow::Result<()> {
        let mut timed = |name: &str, f: &mut dyn FnMut() -> anyhow::Result<()>| {
            let start = Instant::now();
            let r = f();
            manifest
                .timings_ms
                .insert(name.to_string(), start.elapsed().as_millis() as u64);
            log::info!("stage {name}: {:?}", start.elapsed());
            r
        };
        timed("build", &mut || {
            let summary = stage_build(config)?;
            manifest.load = Some(summary.load);
            manifest.window_stats = summary.windows;
            Ok(())
        })?;
        timed("detect", &mut || {
            manifest.community_counts = stage_detect(config)?;
            Ok(())
        })?;
        timed("track", &mut || stage_track(config))?;
        timed("topics", &mut || stage_topics(config))?;
        timed("measures", &mut || stage_measures(config))?;
        timed("events", &mut || {
            manifest.event_count = Some(stage_events(config)?);
            Ok(())
        })?;
        timed("layout", &mut || stage_layout(config))?;
        timed("diagram", &mut || {
            stage_diagram(config, &DiagramOptions::default()).map(|_| ())
        })?;
        Ok(())
    })();

    match result {
        Ok(()) => {
            manifest.status = "ok".into();
            manifest.artifacts = list_artifacts(config, windows.len());
            write_manifest(config, &manifest)?;
            Ok(manifest)
        }
        Err(e) => {
            manifest.status = "failed".into();
            manifest.errors.push(format!("{e:#}"));
            write_manifest(config, &manifest)?;
            Err(e)
        }
    }
}

fn list_artifacts(config: &PipelineConfig, window_count: usize) -> Vec<String> {
    let mut artifacts = Vec::new();
    for idx in 0..window_count {
        for path in [
            edges_path(&config.out, idx),
            partition_path(&config.out, idx),
            layout_path(&config.out, idx),
        ] {
            artifacts.push(relative_to_out(&config.out, &path));
        }
    }
    for path in [
        lineage_path(&config.out),
        centroids_path(&config.out),
        profiles_path(&config.out),
        assessment_path(&config.out),
        events_path(&config.out),
    ] {
        artifacts.push(relative_to_out(&config.out, &path));
    }
    if let Ok(entries) = fs::read_dir(diagrams_dir(&config.out)) {
        let mut dots: Vec<String> = entries
            .flatten()
            .map(|e| relative_to_out(&config.out, &e.path()))
            .collect();
        dots.sort();
        artifacts.extend(dots);
    }
    artifacts
}

fn relative_to_out(out: &Path, path: &Path) -> String {
    path.strip_prefix(out)
        .unwrap_or(path)
        .to_string_lossy()
        .into_owned()
}

/// Parses a `w<idx>:c<id>` community reference (CLI `--focus` syntax).
pub fn parse_community_ref(s: &str) -> anyhow::Result<CommunityRef> {
    let parts: Vec<&str> = s.split(':').collect();
    let err = || anyhow::anyhow!("invalid community reference '{s}' (expected w<idx>:c<id>)");
    if parts.len() != 2 {
        return Err(err());
    }
    let window = parts[0].strip_prefix('w').ok_or_else(err)?.parse().map_err(|_| err())?;
    let community = parts[1].strip_prefix('c').ok_or_else(err)?.parse().map_err(|_| err())?;
    Ok(CommunityRef::new(window, community))
}
