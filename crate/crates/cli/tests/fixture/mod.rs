//! Synthetic datasets and helpers for driving the `old` pipeline in tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use old_cli::store::sha256_hex;
use old_core::DirectedGraph;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const STAGES: [&str; 5] = ["ingest", "embed", "rank", "sir", "combine"];

pub fn write_edges(path: &Path, g: &DirectedGraph) {
    let mut s = String::from("from,to\n");
    for (u, v) in g.edges() {
        let _ = writeln!(s, "n{},n{}", u.index(), v.index());
    }
    fs::write(path, s).unwrap();
}

/// `id,days,views,mature[,support,reject,irrelevant]`; `mature` is a boolean.
pub fn write_attributes(path: &Path, n: usize, attitudes: bool, rng: &mut ChaCha8Rng) {
    let mut s = String::from("id,days,views,mature");
    if attitudes {
        s.push_str(",support,reject,irrelevant");
    }
    s.push('\n');
    for i in 0..n {
        let mature = if rng.random_bool(0.5) { "True" } else { "False" };
        let _ = write!(s, "n{i},{},{},{mature}", rng.random_range(1..2000), rng.random_range(0..100_000));
        if attitudes {
            let a: f64 = rng.random();
            let b: f64 = rng.random::<f64>() * (1.0 - a);
            let _ = write!(s, ",{a},{b},{}", 1.0 - a - b);
        }
        s.push('\n');
    }
    fs::write(path, s).unwrap();
}

/// Small, fast settings on top of the defaults.
pub fn base_config(attitudes: bool) -> toml::Table {
    let mut text = String::from(
        r#"
rng_seed = 11
output_dir = "out"

[data]
edges = "edges.csv"
attributes = "attrs.csv"

[data.edge_format]
header = true

[data.attribute_format]
feature_columns = ["days", "views", "mature"]

[embedding.deepwalk]
walk_length = 10
num_walks = 3
dim = 8

[embedding.node2vec]
walk_length = 10
num_walks = 3
dim = 8

[embedding.asne]
d_struct = 4
d_attr_emb = 4
epochs = 2

[ranking]
top_n = 5

[sir]
n = 10
repetitions = 10
"#,
    );
    if attitudes {
        text = text.replace(
            "feature_columns = [\"days\", \"views\", \"mature\"]",
            "feature_columns = [\"days\", \"views\", \"mature\"]\nattitude_columns = [\"support\", \"reject\", \"irrelevant\"]",
        );
    }
    toml::from_str(&text).unwrap()
}

pub fn set(table: &mut toml::Table, path: &str, value: toml::Value) {
    let mut parts: Vec<&str> = path.split('.').collect();
    let last = parts.pop().unwrap();
    let mut t = table;
    for p in parts {
        t = t
            .entry(p)
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .unwrap();
    }
    t.insert(last.to_owned(), value);
}

pub fn unset(table: &mut toml::Table, path: &str) {
    let mut parts: Vec<&str> = path.split('.').collect();
    let last = parts.pop().unwrap();
    let mut t = table;
    for p in parts {
        t = t.get_mut(p).unwrap().as_table_mut().unwrap();
    }
    t.remove(last);
}

pub fn write_config(dir: &Path, table: &toml::Table) -> PathBuf {
    let path = dir.join("old.toml");
    fs::write(&path, toml::to_string(table).unwrap()).unwrap();
    path
}

/// Graph, attributes and config in `dir`; returns the config path.
pub fn dataset(dir: &Path, g: &DirectedGraph, attitudes: bool, rng: &mut ChaCha8Rng) -> PathBuf {
    write_edges(&dir.join("edges.csv"), g);
    write_attributes(&dir.join("attrs.csv"), g.node_count(), attitudes, rng);
    write_config(dir, &base_config(attitudes))
}

pub fn old(args: &[&str]) -> i32 {
    let mut all = vec!["old"];
    all.extend_from_slice(args);
    old_cli::run(all)
}

/// Runs `stage` with `--config cfg` plus extra flags.
pub fn stage(cfg: &Path, stage: &str, extra: &[&str]) -> i32 {
    let c = cfg.to_str().unwrap();
    let mut args = vec![stage, "--config", c];
    args.extend_from_slice(extra);
    old(&args)
}

/// Every stage then `report`; returns the first non-zero exit code.
pub fn full_pipeline(cfg: &Path, extra: &[&str]) -> i32 {
    for s in STAGES.iter().copied().chain(["report"]) {
        let code = stage(cfg, s, extra);
        if code != 0 {
            return code;
        }
    }
    0
}

/// Relative path -> sha256 of every file under `root`.
pub fn tree_digests(root: &Path) -> BTreeMap<String, String> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, String>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, sha256_hex(&fs::read(&path).unwrap()));
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

pub fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

/// Data rows of a headered CSV.
pub fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .unwrap()
        .records()
        .map(|r| r.unwrap().iter().map(str::to_owned).collect())
        .collect()
}
