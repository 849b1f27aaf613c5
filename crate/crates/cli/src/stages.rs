//! The pipeline stages. Each reads its inputs from the artifact store,
//! writes its outputs through it and records their digests.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use old_core::analysis::{
    attitude_summary, combine_leaders, merge_same_ranker, temporal_overlap, write_attitude_csv, write_combined_csv,
    write_persistence_csv, AttitudeSummary, OutlierFilter, SnapshotRanking,
};
use old_core::embed::{
    generate_walks, read_embedding_csv, train_asne_lite, train_sgns, write_embedding_csv, AsneConfig, EmbeddingMatrix,
    SgnsConfig, WalkConfig, WalkStrategy,
};
use old_core::graph::{
    k_shell, load_attributes, load_edge_list, load_snapshots, read_graph_binary, write_graph_binary, AttributeTable,
    IngestReport, SnapshotManifest,
};
use old_core::rank::{
    asne_rank_with, leader_rank, nlc_rank, read_ranking_csv, top_n, write_ranking_csv, write_top_csv, RankingResult,
};
use old_core::seed::derive;
use old_core::sir::{evaluate_seeds, write_summary_csv, write_summary_json, SirConfig};
use old_core::{DirectedGraph, NodeId};
use serde::Serialize;
use serde_json::{json, Value};

use crate::cache::{read_attributes, write_attributes};
use crate::config::{resolve_input, EmbeddingMethod, PipelineConfig, Ranker};
use crate::error::CliError;
use crate::store::ArtifactStore;

const TAG_WALKS: u64 = 0x5741;
const TAG_SGNS: u64 = 0x5347;
const TAG_ASNE: u64 = 0xa54e;
const TAG_SIR: u64 = 0x5152;

const UNITS: &str = "units.json";

/// Everything a stage needs besides the store.
pub struct Context {
    pub cfg: PipelineConfig,
    pub config_dir: PathBuf,
    pub out: PathBuf,
    pub force: bool,
    pub timings: bool,
    /// SGNS worker count; 1 keeps training deterministic.
    pub workers: usize,
}

fn json_bytes<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("artifact serializes");
    v.push(b'\n');
    v
}

fn to_bytes(f: impl FnOnce(&mut Vec<u8>) -> old_core::Result<()>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

/// Attaches a file name to parse and validation errors, keeping the exit code.
fn at(path: &Path) -> impl Fn(old_core::Error) -> CliError + '_ {
    move |e| match e {
        old_core::Error::Parse { .. } | old_core::Error::Validation(_) => {
            CliError::Validation(format!("{}: {e}", path.display()))
        }
        other => CliError::Core(other),
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::io(path, e))
}

fn plain_name(kind: &str, name: &str) -> Result<(), CliError> {
    if name.is_empty() || name.starts_with('.') || name.contains(['/', '\\', ':']) {
        return Err(CliError::Validation(format!("{kind} {name:?} cannot be used as a directory name")));
    }
    Ok(())
}

fn run_stage(
    ctx: &Context,
    name: &str,
    body: impl FnOnce(&mut ArtifactStore) -> Result<(), CliError>,
) -> Result<(), CliError> {
    let mut store = ArtifactStore::open(&ctx.out, ctx.force)?;
    let start = Instant::now();
    store.begin_stage(name, ctx.cfg.echo())?;
    body(&mut store)?;
    let secs = start.elapsed().as_secs_f64();
    info!("{name}: done in {secs:.2}s");
    store.finish_stage(name, ctx.timings.then_some(secs))
}

fn units(store: &ArtifactStore) -> Result<Vec<String>, CliError> {
    let bytes = store.read(UNITS, "ingest")?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::Validation(format!("{UNITS}: {e}")))
}

fn graph(store: &ArtifactStore, unit: &str) -> Result<DirectedGraph, CliError> {
    let bytes = store.read(&format!("{unit}/graph.bin"), "ingest")?;
    Ok(read_graph_binary(bytes.as_slice())?)
}

fn attributes(store: &ArtifactStore, unit: &str, graph: &DirectedGraph) -> Result<Option<AttributeTable>, CliError> {
    let rel = format!("{unit}/attributes.csv");
    if !store.has(&rel) {
        return Ok(None);
    }
    read_attributes(&store.read(&rel, "ingest")?, graph).map(Some)
}

fn ranking(store: &ArtifactStore, unit: &str, label: &str, graph: &DirectedGraph) -> Result<RankingResult, CliError> {
    let bytes = store.read(&format!("{unit}/rankings/{label}.csv"), "rank")?;
    Ok(read_ranking_csv(bytes.as_slice(), graph)?)
}

struct Loaded {
    name: String,
    graph: DirectedGraph,
    report: IngestReport,
    attrs: Option<AttributeTable>,
    attr_info: Value,
}

pub fn ingest(ctx: &Context) -> Result<(), CliError> {
    let data = &ctx.cfg.data;
    let mut loaded = Vec::new();
    if let Some(edges) = &data.edges {
        let path = resolve_input(edges, &ctx.config_dir)?;
        let (graph, report) = load_edge_list(open(&path)?, &data.edge_format).map_err(at(&path))?;
        let (attrs, attr_info) = match &data.attributes {
            Some(a) => {
                let apath = resolve_input(a, &ctx.config_dir)?;
                let load = load_attributes(open(&apath)?, &graph, &data.attribute_format).map_err(at(&apath))?;
                let info = json!({
                    "columns": load.table.columns(),
                    "attitudes": load.table.has_attitudes(),
                    "nodes_without_row": load.missing_nodes.len(),
                    "rows_for_unknown_ids": load.unknown_ids.len(),
                });
                (Some(load.table), info)
            }
            None => (None, Value::Null),
        };
        loaded.push(Loaded {
            name: data.name.clone(),
            graph,
            report,
            attrs,
            attr_info,
        });
    } else if let Some(snap) = &data.snapshots {
        let path = resolve_input(snap, &ctx.config_dir)?;
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        let manifest = SnapshotManifest::from_toml_str(&text).map_err(at(&path))?;
        for s in &manifest.snapshots {
            plain_name("snapshot label", &s.label)?;
        }
        let base = path.parent().unwrap_or(Path::new("."));
        for s in load_snapshots(&manifest, base)?.snapshots {
            let attr_info = match &s.attributes {
                Some(t) => json!({ "columns": t.columns(), "attitudes": t.has_attitudes() }),
                None => Value::Null,
            };
            loaded.push(Loaded {
                name: s.label,
                graph: s.graph,
                report: s.report,
                attrs: s.attributes,
                attr_info,
            });
        }
    }

    run_stage(ctx, "ingest", |store| {
        let mut names = Vec::new();
        for mut unit in loaded {
            if data.symmetrize {
                unit.graph = unit.graph.symmetrized();
            }
            let g = &unit.graph;
            info!("ingest {}: {} nodes, {} edges", unit.name, unit.report.nodes, unit.report.edges);
            store.put("ingest", &format!("{}/graph.bin", unit.name), &to_bytes(|b| write_graph_binary(g, b))?)?;
            let report = json!({
                "unit": unit.name,
                "lines_read": unit.report.lines_read,
                "nodes": unit.report.nodes,
                "edges": unit.report.edges,
                "self_loops_dropped": unit.report.self_loops_dropped,
                "duplicate_edges_dropped": unit.report.duplicate_edges_dropped,
                "symmetrized": data.symmetrize,
                "stored_edges": g.edge_count(),
                "attributes": unit.attr_info,
            });
            store.put("ingest", &format!("{}/ingest.json", unit.name), &json_bytes(&report))?;
            if let Some(attrs) = &unit.attrs {
                store.put("ingest", &format!("{}/attributes.csv", unit.name), &write_attributes(attrs, g)?)?;
            }
            names.push(unit.name);
        }
        store.put("ingest", UNITS, &json_bytes(&names))
    })
}

fn method_index(m: EmbeddingMethod) -> u64 {
    match m {
        EmbeddingMethod::DeepWalk => 0,
        EmbeddingMethod::Node2vec => 1,
        EmbeddingMethod::AsneLite => 2,
    }
}

fn sgns_embedding(
    graph: &DirectedGraph,
    walks: WalkConfig,
    sgns: SgnsConfig,
    params: Value,
    method: &str,
) -> Result<(EmbeddingMatrix, Value), CliError> {
    let corpus = generate_walks(graph, &walks)?;
    let (emb, trace) = train_sgns(&corpus, &sgns)?;
    let meta = json!({
        "method": method,
        "params": params,
        "nodes": emb.node_count(),
        "dim": emb.dim(),
        "walks": corpus.len(),
        "tokens": corpus.token_count(),
        "truncated_walks": corpus.truncated(),
        "epoch_losses": trace.epoch_losses,
    });
    Ok((emb, meta))
}

pub fn embed(ctx: &Context) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let e = &cfg.embedding;
    let store = ArtifactStore::open(&ctx.out, ctx.force)?;
    let names = units(&store)?;
    if e.methods.contains(&EmbeddingMethod::AsneLite) {
        for u in &names {
            if !store.has(&format!("{u}/attributes.csv")) {
                return Err(CliError::Validation(format!(
                    "embedding method asne-lite needs node attributes, but unit {u:?} has none (set data.attributes)"
                )));
            }
        }
    }
    drop(store);

    run_stage(ctx, "embed", |store| {
        for u in &names {
            let g = graph(store, u)?;
            let attrs = attributes(store, u, &g)?;
            for &m in &e.methods {
                let k = method_index(m);
                info!("embed {u}: {}", m.as_str());
                let (emb, meta) = match m {
                    EmbeddingMethod::DeepWalk => {
                        let s = &e.deepwalk;
                        let walks = WalkConfig {
                            walk_length: s.walk_length,
                            num_walks: s.num_walks,
                            window: s.window,
                            strategy: WalkStrategy::Uniform,
                            direction: s.direction,
                            rng_seed: derive(cfg.rng_seed, &[TAG_WALKS, k]),
                        };
                        let sgns = SgnsConfig {
                            dim: s.dim,
                            window: s.window,
                            negatives: s.negatives,
                            epochs: s.epochs,
                            lr: s.lr,
                            rng_seed: derive(cfg.rng_seed, &[TAG_SGNS, k]),
                            workers: ctx.workers,
                        };
                        sgns_embedding(&g, walks, sgns, json!(s), m.as_str())?
                    }
                    EmbeddingMethod::Node2vec => {
                        let s = &e.node2vec;
                        let walks = WalkConfig {
                            walk_length: s.walk_length,
                            num_walks: s.num_walks,
                            window: s.window,
                            strategy: WalkStrategy::Biased { p: s.p, q: s.q },
                            direction: s.direction,
                            rng_seed: derive(cfg.rng_seed, &[TAG_WALKS, k]),
                        };
                        let sgns = SgnsConfig {
                            dim: s.dim,
                            window: s.window,
                            negatives: s.negatives,
                            epochs: s.epochs,
                            lr: s.lr,
                            rng_seed: derive(cfg.rng_seed, &[TAG_SGNS, k]),
                            workers: ctx.workers,
                        };
                        sgns_embedding(&g, walks, sgns, json!(s), m.as_str())?
                    }
                    EmbeddingMethod::AsneLite => {
                        let s = &e.asne;
                        let attrs = attrs.as_ref().expect("checked above");
                        let acfg = AsneConfig {
                            d_struct: s.d_struct,
                            d_attr_emb: s.d_attr_emb,
                            epochs: s.epochs,
                            batch: s.batch,
                            lr: s.lr,
                            negatives: s.negatives,
                            standardize: s.standardize,
                            rng_seed: derive(cfg.rng_seed, &[TAG_ASNE, k]),
                        };
                        let emb = train_asne_lite(&g, attrs, &acfg)?;
                        let meta = json!({
                            "method": m.as_str(),
                            "params": s,
                            "nodes": emb.node_count(),
                            "dim": emb.dim(),
                            "attribute_columns": attrs.columns(),
                        });
                        (emb, meta)
                    }
                };
                let base = format!("{u}/embeddings/{}", m.as_str());
                store.put("embed", &format!("{base}.csv"), &to_bytes(|b| write_embedding_csv(&emb, &g, b))?)?;
                store.put("embed", &format!("{base}.json"), &json_bytes(&meta))?;
            }
        }
        Ok(())
    })
}

/// Splits `deepwalk+nlcrank` into its parts; `leaderrank` has no embedding.
fn parse_label(label: &str) -> (Option<&str>, &str) {
    match label.split_once('+') {
        Some((e, r)) => (Some(e), r),
        None => (None, label),
    }
}

pub fn rank(ctx: &Context) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let labels = cfg.ranking_labels();
    if labels.is_empty() {
        return Err(CliError::Validation("no rankings configured".into()));
    }
    let store = ArtifactStore::open(&ctx.out, ctx.force)?;
    let names = units(&store)?;
    for u in &names {
        for label in &labels {
            if let (Some(e), _) = parse_label(label) {
                let rel = format!("{u}/embeddings/{e}.csv");
                if !store.has(&rel) {
                    return Err(CliError::Io(format!(
                        "ranking {label} needs embedding artifact {}: run `old embed` first",
                        store.path(&rel).display()
                    )));
                }
            }
        }
    }
    drop(store);

    let params = cfg.ranking.pagerank();
    run_stage(ctx, "rank", |store| {
        for u in &names {
            let g = graph(store, u)?;
            let metrics = cfg.ranking.methods.contains(&Ranker::NlcRank).then(|| k_shell(&g));
            let mut embeddings: BTreeMap<String, EmbeddingMatrix> = BTreeMap::new();
            for label in &labels {
                info!("rank {u}: {label}");
                let result = match parse_label(label) {
                    (None, _) => leader_rank(&g, params.tolerance, params.max_iter)?,
                    (Some(e), r) => {
                        if !embeddings.contains_key(e) {
                            let bytes = store.read(&format!("{u}/embeddings/{e}.csv"), "embed")?;
                            embeddings.insert(e.to_owned(), read_embedding_csv(bytes.as_slice(), &g)?);
                        }
                        let emb = &embeddings[e];
                        match r {
                            "nlcrank" => nlc_rank(&g, emb, metrics.as_ref().expect("computed for nlcrank"))?,
                            _ => asne_rank_with(&g, emb, &params, cfg.ranking.edge_score)?,
                        }
                    }
                }
                .with_method(label.as_str());
                let n = cfg.ranking.top_n.min(result.len());
                if n < cfg.ranking.top_n {
                    warn!("{u}: top_n {} capped at {n} nodes", cfg.ranking.top_n);
                }
                let base = format!("{u}/rankings/{label}");
                store.put("rank", &format!("{base}.csv"), &to_bytes(|b| write_ranking_csv(&result, &g, b))?)?;
                if n > 0 {
                    store.put("rank", &format!("{base}.top.csv"), &to_bytes(|b| write_top_csv(&result, &g, n, b))?)?;
                }
            }
        }
        Ok(())
    })
}

/// Filename-friendly rendering of a spreading rate.
pub fn tau_tag(tau: f64) -> String {
    format!("tau{tau}")
}

pub fn sir(ctx: &Context) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let s = &cfg.sir;
    let labels = cfg.ranking_labels();
    let store = ArtifactStore::open(&ctx.out, ctx.force)?;
    let names = units(&store)?;
    // Load everything first so a missing ranking fails before the stage starts.
    let mut work = Vec::new();
    for u in &names {
        let g = graph(&store, u)?;
        let mut seeds = Vec::new();
        for label in &labels {
            let r = ranking(&store, u, label, &g)?;
            let top = top_n(&r, s.n).map_err(|e| {
                CliError::Validation(format!("{u}: sir.n = {} seeds from {label}: {e}", s.n))
            })?;
            seeds.push((label.clone(), top));
        }
        work.push((u.clone(), g, seeds));
    }
    drop(store);

    run_stage(ctx, "sir", |store| {
        for (u, g, seeds) in &work {
            let mut table = String::from("method,tau,gamma,repetitions,seeds,mean_final,std_final\n");
            for (label, top) in seeds {
                for &tau in &s.taus {
                    let sc = SirConfig {
                        tau,
                        gamma: s.gamma,
                        seeds: top.clone(),
                        repetitions: s.repetitions,
                        rng_seed: derive(cfg.rng_seed, &[TAG_SIR]),
                        direction: s.direction,
                    };
                    let summary = evaluate_seeds(g, &sc)?;
                    info!("sir {u}: {label} tau={tau}: mean final {:.2}", summary.mean_final);
                    table.push_str(&format!(
                        "{label},{tau:?},{:?},{},{},{:?},{:?}\n",
                        s.gamma,
                        s.repetitions,
                        top.len(),
                        summary.mean_final,
                        summary.std_final
                    ));
                    let base = format!("{u}/sir/{label}_{}", tau_tag(tau));
                    store.put("sir", &format!("{base}.csv"), &to_bytes(|b| write_summary_csv(&summary, b))?)?;
                    let mut js = to_bytes(|b| write_summary_json(&summary, &sc, g, label, b))?;
                    js.push(b'\n');
                    store.put("sir", &format!("{base}.json"), &js)?;
                }
            }
            store.put("sir", &format!("{u}/sir/summary.csv"), table.as_bytes())?;
        }
        Ok(())
    })
}

fn family(cfg: &PipelineConfig, ranker: Ranker) -> Vec<String> {
    cfg.embedding
        .methods
        .iter()
        .map(|m| format!("{}+{}", m.as_str(), ranker.as_str()))
        .collect()
}

fn ids(graph: &DirectedGraph, nodes: &[NodeId]) -> Vec<String> {
    nodes.iter().map(|&v| graph.external_id(v).to_owned()).collect()
}

/// Mean attitude over the nodes that have one; `None` if none do.
fn attitudes_of(nodes: &[NodeId], attrs: &AttributeTable) -> Result<Option<AttitudeSummary>, CliError> {
    let known: Vec<NodeId> = nodes.iter().copied().filter(|&v| attrs.attitude(v).is_some()).collect();
    if known.is_empty() {
        return Ok(None);
    }
    Ok(Some(attitude_summary(&known, attrs)?))
}

pub fn combine(ctx: &Context) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let cc = cfg.combine.core();
    for r in [Ranker::AsneRank, Ranker::NlcRank] {
        if !cfg.ranking.methods.contains(&r) || cfg.embedding.methods.is_empty() {
            return Err(CliError::Validation(format!(
                "combine needs {} rankings: add it to ranking.methods and list an embedding",
                r.as_str()
            )));
        }
    }
    let asne_family = family(cfg, Ranker::AsneRank);
    let nlc_family = family(cfg, Ranker::NlcRank);

    let store = ArtifactStore::open(&ctx.out, ctx.force)?;
    let names = units(&store)?;
    let mut outputs = Vec::new();
    let mut series: BTreeMap<String, Vec<SnapshotRanking>> = BTreeMap::new();
    for u in &names {
        let g = graph(&store, u)?;
        let attrs = attributes(&store, u, &g)?;
        let load = |labels: &[String]| -> Result<Vec<RankingResult>, CliError> {
            labels.iter().map(|l| ranking(&store, u, l, &g)).collect()
        };
        let a = load(&asne_family)?;
        let b = load(&nlc_family)?;
        let filter = OutlierFilter::new(&g, cc.outlier_percentile)?;
        let ma = merge_same_ranker(&a.iter().collect::<Vec<_>>(), &filter)?;
        let mb = merge_same_ranker(&b.iter().collect::<Vec<_>>(), &filter)?;
        let leaders = combine_leaders(&ma, &mb, &cc).map_err(|e| CliError::Validation(format!("{u}: {e}")))?;

        let attitude = match attrs.as_ref().filter(|t| t.has_attitudes()) {
            Some(t) => {
                let all: Vec<NodeId> = leaders.all().collect();
                let mut groups = Vec::new();
                for (name, nodes) in [
                    ("asnerank", &leaders.asnerank_part),
                    ("nlcrank", &leaders.nlcrank_part),
                    ("combined", &all),
                ] {
                    if let Some(s) = attitudes_of(nodes, t)? {
                        groups.push((name.to_owned(), s));
                    }
                }
                Some(groups)
            }
            None => None,
        };
        let provenance: BTreeMap<&str, &Vec<String>> =
            leaders.provenance.iter().map(|(v, m)| (g.external_id(*v), m)).collect();
        let report = json!({
            "unit": u,
            "n": cc.n,
            "ratio": [cc.ratio.0, cc.ratio.1],
            "outlier_percentile": cc.outlier_percentile,
            "min_followers": filter.min_followers,
            "min_followees": filter.min_followees,
            "outliers": filter.outlier_count(),
            "asnerank_methods": ma.methods,
            "nlcrank_methods": mb.methods,
            "asnerank_part": ids(&g, &leaders.asnerank_part),
            "nlcrank_part": ids(&g, &leaders.nlcrank_part),
            "provenance": provenance,
            "attitudes": attitude.as_ref().map(|groups| {
                groups.iter().map(|(k, s)| (k.clone(), json!(s))).collect::<serde_json::Map<_, _>>()
            }),
        });
        let csv = to_bytes(|buf| write_combined_csv(&leaders, &g, buf))?;
        let attitude_csv = match &attitude {
            Some(groups) => Some(to_bytes(|buf| write_attitude_csv(groups, buf))?),
            None => None,
        };
        for label in cfg.ranking_labels() {
            let r = ranking(&store, u, &label, &g)?;
            series.entry(label).or_default().push(SnapshotRanking {
                label: u.clone(),
                ranked_ids: r.nodes().map(|v| g.external_id(v).to_owned()).collect(),
            });
        }
        outputs.push((u.clone(), csv, report, attitude_csv));
    }
    drop(store);

    let k = cfg.combine.persistence_k.unwrap_or(cfg.combine.n);
    let mut persistence = Vec::new();
    if names.len() > 1 {
        for (label, s) in &series {
            persistence.push((label.clone(), temporal_overlap(s, k)?));
        }
    }

    run_stage(ctx, "combine", |store| {
        for (u, csv, report, attitude_csv) in &outputs {
            store.put("combine", &format!("{u}/combine/combined.csv"), csv)?;
            store.put("combine", &format!("{u}/combine/combined.json"), &json_bytes(report))?;
            if let Some(a) = attitude_csv {
                store.put("combine", &format!("{u}/combine/attitudes.csv"), a)?;
            }
        }
        for (label, p) in &persistence {
            store.put("combine", &format!("persistence/{label}.csv"), &to_bytes(|b| write_persistence_csv(p, b))?)?;
            store.put("combine", &format!("persistence/{label}.json"), &json_bytes(p))?;
        }
        Ok(())
    })
}
