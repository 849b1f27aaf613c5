//! Consolidated JSON and text summary of whatever stages have run.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::error::CliError;
use crate::store::ArtifactStore;

pub const STAGES: [&str; 5] = ["ingest", "embed", "rank", "sir", "combine"];
const HEAD: usize = 10;

fn read_json(store: &ArtifactStore, rel: &str) -> Result<Value, CliError> {
    if !store.has(rel) {
        return Ok(Value::Null);
    }
    let bytes = store.read(rel, "report")?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::Validation(format!("{rel}: {e}")))
}

fn read_rows(store: &ArtifactStore, rel: &str) -> Result<Vec<csv::StringRecord>, CliError> {
    let bytes = store.read(rel, "report")?;
    csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(bytes.as_slice())
        .records()
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Validation(format!("{rel}: {e}")))
}

fn unit_section(store: &ArtifactStore, unit: &str) -> Result<Value, CliError> {
    let prefix = format!("{unit}/rankings/");
    let mut heads = Map::new();
    for rel in store.manifest.stages.get("rank").into_iter().flat_map(|s| s.files.keys()) {
        if let Some(label) = rel.strip_prefix(&prefix).and_then(|r| r.strip_suffix(".top.csv")) {
            let rows = read_rows(store, rel)?;
            let top: Vec<&str> = rows.iter().take(HEAD).map(|r| r.get(1).unwrap_or("")).collect();
            heads.insert(label.to_owned(), json!(top));
        }
    }
    let sir_rel = format!("{unit}/sir/summary.csv");
    let sir = if store.has(&sir_rel) {
        let rows = read_rows(store, &sir_rel)?;
        let parse = |s: &str| s.parse::<f64>().ok();
        Value::Array(
            rows.iter()
                .map(|r| {
                    json!({
                        "method": r.get(0),
                        "tau": r.get(1).and_then(parse),
                        "mean_final": r.get(5).and_then(parse),
                        "std_final": r.get(6).and_then(parse),
                    })
                })
                .collect(),
        )
    } else {
        Value::Null
    };
    Ok(json!({
        "ingest": read_json(store, &format!("{unit}/ingest.json"))?,
        "ranking_heads": if heads.is_empty() { Value::Null } else { Value::Object(heads) },
        "sir": sir,
        "combined": read_json(store, &format!("{unit}/combine/combined.json"))?,
    }))
}

/// Builds `report.json` from the manifest in `out`.
pub fn build(store: &ArtifactStore) -> Result<Value, CliError> {
    let mut stages = Map::new();
    for s in STAGES {
        let v = match store.manifest.stages.get(s) {
            Some(record) => json!({ "files": record.files }),
            None => Value::Null,
        };
        stages.insert(s.to_owned(), v);
    }
    let units: Vec<String> = match read_json(store, "units.json")? {
        Value::Null => Vec::new(),
        v => serde_json::from_value(v).map_err(|e| CliError::Validation(format!("units.json: {e}")))?,
    };
    let mut unit_map = Map::new();
    for u in &units {
        unit_map.insert(u.clone(), unit_section(store, u)?);
    }
    let mut persistence = Map::new();
    for rel in store.manifest.stages.get("combine").into_iter().flat_map(|s| s.files.keys()) {
        if let Some(label) = rel.strip_prefix("persistence/").and_then(|r| r.strip_suffix(".json")) {
            let p = read_json(store, rel)?;
            persistence.insert(label.to_owned(), json!({ "k": p["k"], "adjacent_jaccard": p["adjacent_jaccard"] }));
        }
    }
    let mut stale = store.verify();
    stale.retain(|f| !f.starts_with("report."));
    Ok(json!({
        "tool": store.manifest.tool,
        "version": store.manifest.version,
        "config": store.manifest.config,
        "stages": stages,
        "units": unit_map,
        "persistence": if persistence.is_empty() { Value::Null } else { Value::Object(persistence) },
        "digest_mismatches": stale,
    }))
}

fn num(v: &Value) -> String {
    v.as_f64().map_or_else(|| "n/a".into(), |x| format!("{x:.2}"))
}

pub fn render_text(report: &Value) -> String {
    let mut t = String::new();
    let _ = writeln!(t, "{} {}", report["tool"].as_str().unwrap_or(""), report["version"].as_str().unwrap_or(""));
    for s in STAGES {
        let status = match report["stages"][s]["files"].as_object() {
            Some(f) => format!("{} files", f.len()),
            None => "not run".into(),
        };
        let _ = writeln!(t, "  {s:<8} {status}");
    }
    if let Some(units) = report["units"].as_object() {
        for (name, u) in units {
            let _ = writeln!(t, "\n[{name}]");
            let ing = &u["ingest"];
            if !ing.is_null() {
                let _ = writeln!(
                    t,
                    "nodes {} edges {} (stored {})",
                    ing["nodes"], ing["edges"], ing["stored_edges"]
                );
            }
            if let Some(heads) = u["ranking_heads"].as_object() {
                let _ = writeln!(t, "top of each ranking:");
                for (label, ids) in heads {
                    let list: Vec<&str> = ids.as_array().into_iter().flatten().take(5).filter_map(|v| v.as_str()).collect();
                    let _ = writeln!(t, "  {label:<24} {}", list.join(" "));
                }
            }
            if let Some(rows) = u["sir"].as_array() {
                let _ = writeln!(t, "SIR mean final infected-ever:");
                for r in rows {
                    let _ = writeln!(
                        t,
                        "  {:<24} tau={:<6} {} (sd {})",
                        r["method"].as_str().unwrap_or(""),
                        r["tau"],
                        num(&r["mean_final"]),
                        num(&r["std_final"])
                    );
                }
            }
            let c = &u["combined"];
            if !c.is_null() {
                let join = |v: &Value| {
                    v.as_array().into_iter().flatten().filter_map(|x| x.as_str()).collect::<Vec<_>>().join(" ")
                };
                let _ = writeln!(t, "combined leaders:");
                let _ = writeln!(t, "  asnerank part: {}", join(&c["asnerank_part"]));
                let _ = writeln!(t, "  nlcrank part:  {}", join(&c["nlcrank_part"]));
                if c["attitudes"].is_null() {
                    let _ = writeln!(t, "  attitudes: absent");
                }
            }
        }
    }
    if let Some(p) = report["persistence"].as_object() {
        let _ = writeln!(t, "\nadjacent-snapshot Jaccard of top sets:");
        for (label, v) in p {
            let _ = writeln!(t, "  {label:<24} {}", v["adjacent_jaccard"]);
        }
    }
    if let Some(bad) = report["digest_mismatches"].as_array() {
        if !bad.is_empty() {
            let _ = writeln!(t, "\nWARNING: {} files differ from the manifest", bad.len());
        }
    }
    t
}

pub fn report(out: &Path, force: bool, timings: bool) -> Result<(), CliError> {
    let mut store = ArtifactStore::open_existing(out, force)?;
    if STAGES.iter().all(|s| !store.manifest.stages.contains_key(*s)) {
        return Err(CliError::Io(format!("{}: no stage artifacts to report on", out.display())));
    }
    let start = std::time::Instant::now();
    let value = build(&store)?;
    let mut bytes = serde_json::to_vec_pretty(&value).expect("report serializes");
    bytes.push(b'\n');
    let text = render_text(&value);
    let config = store.manifest.config.clone();
    store.begin_stage("report", config)?;
    store.put("report", "report.json", &bytes)?;
    store.put("report", "report.txt", text.as_bytes())?;
    store.finish_stage("report", timings.then(|| start.elapsed().as_secs_f64()))
}
