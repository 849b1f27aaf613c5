//! Pipeline configuration: TOML file layered over an optional named preset.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use old_core::analysis::CombineConfig;
use old_core::embed::WalkDirection;
use old_core::graph::{AttributeFormat, EdgeListFormat};
use old_core::rank::{EdgeScore, PageRankParams};
use old_core::sir::SirDirection;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DATA_DIR_ENV: &str = "OLD_DATA_DIR";

const TWITTER_STYLE: &str = r#"
[embedding.deepwalk]
walk_length = 80
num_walks = 10
window = 10
dim = 64

[embedding.node2vec]
walk_length = 80
num_walks = 10
window = 10
dim = 128
p = 0.25
q = 4.0

[embedding.asne]
d_struct = 20
d_attr_emb = 40
epochs = 20
batch = 128
lr = 0.001

[sir]
taus = [0.5, 0.015]
gamma = 1.0
repetitions = 50
n = 100

[combine]
n = 15
ratio = [1, 2]
outlier_percentile = 10.0
"#;

// Twitch is an undirected friendship graph with a four-column attribute file.
const TWITCH_STYLE: &str = r#"
[data]
symmetrize = true

[data.edge_format]
header = true

[data.attribute_format]
id_column = "new_id"
feature_columns = ["days", "mature", "views", "partner"]

[embedding.deepwalk]
walk_length = 40
num_walks = 80
window = 10
dim = 64

[embedding.node2vec]
walk_length = 40
num_walks = 80
window = 10
dim = 64
p = 0.25
q = 4.0

[embedding.asne]
d_struct = 60
d_attr_emb = 40
epochs = 30
batch = 128
lr = 0.001

[sir]
taus = [0.015]
gamma = 1.0
repetitions = 50
n = 100

[combine]
n = 15
ratio = [1, 2]
outlier_percentile = 10.0
"#;

pub const PRESETS: &[&str] = &["twitter-style", "twitch-style"];

fn preset_table(name: &str) -> Result<toml::Table, CliError> {
    let text = match name {
        "twitter-style" => TWITTER_STYLE,
        "twitch-style" => TWITCH_STYLE,
        other => {
            return Err(CliError::Validation(format!(
                "unknown preset {other:?} (expected one of {})",
                PRESETS.join(", ")
            )))
        }
    };
    Ok(toml::from_str(text).expect("built-in preset parses"))
}

/// Deep merge: tables merge key by key, anything else in `top` wins.
fn merge(base: &mut toml::Table, top: toml::Table) {
    for (key, value) in top {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => merge(b, t),
            (_, value) => {
                base.insert(key, value);
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EmbeddingMethod {
    #[serde(rename = "deepwalk")]
    DeepWalk,
    #[serde(rename = "node2vec")]
    Node2vec,
    #[serde(rename = "asne-lite")]
    AsneLite,
}

impl EmbeddingMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            EmbeddingMethod::DeepWalk => "deepwalk",
            EmbeddingMethod::Node2vec => "node2vec",
            EmbeddingMethod::AsneLite => "asne-lite",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ranker {
    NlcRank,
    AsneRank,
    LeaderRank,
}

impl Ranker {
    pub fn as_str(self) -> &'static str {
        match self {
            Ranker::NlcRank => "nlcrank",
            Ranker::AsneRank => "asnerank",
            Ranker::LeaderRank => "leaderrank",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    /// Unit name for a single-graph run; also the artifact subdirectory.
    pub name: String,
    pub edges: Option<PathBuf>,
    pub attributes: Option<PathBuf>,
    /// Snapshot manifest; mutually exclusive with `edges`.
    pub snapshots: Option<PathBuf>,
    pub edge_format: EdgeListFormat,
    pub attribute_format: AttributeFormat,
    /// Add the reverse of every edge after loading.
    pub symmetrize: bool,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            name: "main".into(),
            edges: None,
            attributes: None,
            snapshots: None,
            edge_format: EdgeListFormat::default(),
            attribute_format: AttributeFormat::default(),
            symmetrize: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeepWalkSection {
    pub walk_length: usize,
    pub num_walks: usize,
    pub window: usize,
    pub dim: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub lr: f64,
    pub direction: WalkDirection,
}

impl Default for DeepWalkSection {
    fn default() -> Self {
        DeepWalkSection {
            walk_length: 80,
            num_walks: 10,
            window: 10,
            dim: 64,
            negatives: 5,
            epochs: 1,
            lr: 0.025,
            direction: WalkDirection::OutEdges,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Node2vecSection {
    pub walk_length: usize,
    pub num_walks: usize,
    pub window: usize,
    pub dim: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub lr: f64,
    pub direction: WalkDirection,
    pub p: f64,
    pub q: f64,
}

impl Default for Node2vecSection {
    fn default() -> Self {
        Node2vecSection {
            walk_length: 80,
            num_walks: 10,
            window: 10,
            dim: 128,
            negatives: 5,
            epochs: 1,
            lr: 0.025,
            direction: WalkDirection::OutEdges,
            p: 0.25,
            q: 4.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AsneSection {
    pub d_struct: usize,
    pub d_attr_emb: usize,
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub negatives: usize,
    pub standardize: bool,
}

impl Default for AsneSection {
    fn default() -> Self {
        AsneSection {
            d_struct: 20,
            d_attr_emb: 40,
            epochs: 20,
            batch: 128,
            lr: 0.001,
            negatives: 5,
            standardize: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbeddingSection {
    pub methods: Vec<EmbeddingMethod>,
    pub deepwalk: DeepWalkSection,
    pub node2vec: Node2vecSection,
    pub asne: AsneSection,
}

impl Default for EmbeddingSection {
    fn default() -> Self {
        EmbeddingSection {
            methods: vec![EmbeddingMethod::DeepWalk, EmbeddingMethod::Node2vec, EmbeddingMethod::AsneLite],
            deepwalk: DeepWalkSection::default(),
            node2vec: Node2vecSection::default(),
            asne: AsneSection::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RankingSection {
    pub methods: Vec<Ranker>,
    pub damping: f64,
    pub tolerance: f64,
    pub max_iter: usize,
    pub edge_score: EdgeScore,
    /// Rows in each `.top.csv` extract.
    pub top_n: usize,
}

impl Default for RankingSection {
    fn default() -> Self {
        RankingSection {
            methods: vec![Ranker::NlcRank, Ranker::AsneRank, Ranker::LeaderRank],
            damping: 0.85,
            tolerance: 1e-10,
            max_iter: 1000,
            edge_score: EdgeScore::Dot,
            top_n: 100,
        }
    }
}

impl RankingSection {
    pub fn pagerank(&self) -> PageRankParams {
        PageRankParams {
            damping: self.damping,
            tolerance: self.tolerance,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SirSection {
    pub taus: Vec<f64>,
    pub gamma: f64,
    pub repetitions: usize,
    /// Seeds per ranking: its top `n` nodes.
    pub n: usize,
    pub direction: SirDirection,
}

impl Default for SirSection {
    fn default() -> Self {
        SirSection {
            taus: vec![0.5, 0.015],
            gamma: 1.0,
            repetitions: 50,
            n: 100,
            direction: SirDirection::Influence,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CombineSection {
    pub n: usize,
    pub ratio: [u32; 2],
    pub outlier_percentile: f64,
    /// Top-k used for snapshot persistence; defaults to `n`.
    pub persistence_k: Option<usize>,
}

impl Default for CombineSection {
    fn default() -> Self {
        CombineSection {
            n: 15,
            ratio: [1, 2],
            outlier_percentile: 10.0,
            persistence_k: None,
        }
    }
}

impl CombineSection {
    pub fn core(&self) -> CombineConfig {
        CombineConfig {
            n: self.n,
            ratio: (self.ratio[0], self.ratio[1]),
            outlier_percentile: self.outlier_percentile,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub preset: Option<String>,
    pub rng_seed: u64,
    pub output_dir: Option<PathBuf>,
    pub data: DataConfig,
    pub embedding: EmbeddingSection,
    pub ranking: RankingSection,
    pub sir: SirSection,
    pub combine: CombineSection,
}

fn unique<T: Eq + std::hash::Hash>(items: &[T]) -> bool {
    let mut seen = HashSet::new();
    items.iter().all(|x| seen.insert(x))
}

fn positive(name: &str, v: usize) -> Result<(), CliError> {
    if v == 0 {
        return Err(CliError::Validation(format!("{name} must be at least 1")));
    }
    Ok(())
}

fn positive_f(name: &str, v: f64) -> Result<(), CliError> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(CliError::Validation(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

impl PipelineConfig {
    /// Parses `text`, layering it over the preset named by `preset_override`
    /// or by its own `preset` key.
    pub fn from_toml_str(text: &str, preset_override: Option<&str>) -> Result<Self, CliError> {
        let file: toml::Table =
            toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))?;
        let preset = match preset_override {
            Some(p) => Some(p.to_owned()),
            None => match file.get("preset") {
                Some(toml::Value::String(s)) => Some(s.clone()),
                Some(_) => return Err(CliError::Validation("config: preset must be a string".into())),
                None => None,
            },
        };
        let mut table = match &preset {
            Some(name) => preset_table(name)?,
            None => toml::Table::new(),
        };
        merge(&mut table, file);
        if let Some(name) = preset {
            table.insert("preset".into(), toml::Value::String(name));
        }
        let cfg: PipelineConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Validation(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Numeric ranges and section consistency; paths are checked on use.
    pub fn validate(&self) -> Result<(), CliError> {
        let d = &self.data;
        match (&d.edges, &d.snapshots) {
            (Some(_), Some(_)) => {
                return Err(CliError::Validation("data: set either edges or snapshots, not both".into()))
            }
            (None, None) => return Err(CliError::Validation("data: edges or snapshots is required".into())),
            (None, Some(_)) if d.attributes.is_some() => {
                return Err(CliError::Validation(
                    "data: with snapshots, attributes belong in the snapshot manifest".into(),
                ))
            }
            _ => {}
        }
        if d.name.is_empty() || d.name.contains(['/', '\\']) || d.name.starts_with('.') {
            return Err(CliError::Validation(format!("data.name {:?} is not a plain directory name", d.name)));
        }

        let e = &self.embedding;
        if !unique(&e.methods) {
            return Err(CliError::Validation("embedding.methods lists a method twice".into()));
        }
        let dw = &e.deepwalk;
        let nv = &e.node2vec;
        for (prefix, len, walks, window, dim, neg, epochs, lr) in [
            ("deepwalk", dw.walk_length, dw.num_walks, dw.window, dw.dim, dw.negatives, dw.epochs, dw.lr),
            ("node2vec", nv.walk_length, nv.num_walks, nv.window, nv.dim, nv.negatives, nv.epochs, nv.lr),
        ] {
            positive(&format!("embedding.{prefix}.walk_length"), len)?;
            positive(&format!("embedding.{prefix}.num_walks"), walks)?;
            positive(&format!("embedding.{prefix}.window"), window)?;
            positive(&format!("embedding.{prefix}.dim"), dim)?;
            positive(&format!("embedding.{prefix}.negatives"), neg)?;
            positive(&format!("embedding.{prefix}.epochs"), epochs)?;
            positive_f(&format!("embedding.{prefix}.lr"), lr)?;
        }
        positive_f("embedding.node2vec.p", nv.p)?;
        positive_f("embedding.node2vec.q", nv.q)?;
        let a = &e.asne;
        positive("embedding.asne.d_struct", a.d_struct)?;
        positive("embedding.asne.d_attr_emb", a.d_attr_emb)?;
        positive("embedding.asne.epochs", a.epochs)?;
        positive("embedding.asne.batch", a.batch)?;
        positive("embedding.asne.negatives", a.negatives)?;
        positive_f("embedding.asne.lr", a.lr)?;

        let r = &self.ranking;
        if !unique(&r.methods) {
            return Err(CliError::Validation("ranking.methods lists a ranker twice".into()));
        }
        r.pagerank().validate()?;
        positive("ranking.top_n", r.top_n)?;

        let s = &self.sir;
        if s.taus.is_empty() {
            return Err(CliError::Validation("sir.taus is empty".into()));
        }
        if let Some(t) = s.taus.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(CliError::Validation(format!("sir.taus: {t} outside [0, 1]")));
        }
        if !(s.gamma > 0.0 && s.gamma <= 1.0) {
            return Err(CliError::Validation(format!("sir.gamma {} outside (0, 1]", s.gamma)));
        }
        positive("sir.repetitions", s.repetitions)?;
        positive("sir.n", s.n)?;

        self.combine.core().validate()?;
        if self.combine.persistence_k == Some(0) {
            return Err(CliError::Validation("combine.persistence_k must be at least 1".into()));
        }
        Ok(())
    }

    /// Every (embedding, ranker) label the rank stage produces, in a fixed order.
    pub fn ranking_labels(&self) -> Vec<String> {
        let mut out = Vec::new();
        for ranker in [Ranker::NlcRank, Ranker::AsneRank] {
            if !self.ranking.methods.contains(&ranker) {
                continue;
            }
            for m in &self.embedding.methods {
                out.push(format!("{}+{}", m.as_str(), ranker.as_str()));
            }
        }
        if self.ranking.methods.contains(&Ranker::LeaderRank) {
            out.push(Ranker::LeaderRank.as_str().to_owned());
        }
        out
    }

    /// JSON echo for the manifest; the output directory is left out so that
    /// runs into different directories stay comparable.
    pub fn echo(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("output_dir");
        }
        v
    }
}

/// Resolves relative paths against the config directory, then `OLD_DATA_DIR`.
pub fn resolve_input(path: &Path, config_dir: &Path) -> Result<PathBuf, CliError> {
    if path.is_absolute() {
        if path.exists() {
            return Ok(path.to_owned());
        }
        return Err(CliError::Io(format!("input not found: {}", path.display())));
    }
    let local = config_dir.join(path);
    if local.exists() {
        return Ok(local);
    }
    if let Some(dir) = std::env::var_os(DATA_DIR_ENV) {
        let fallback = Path::new(&dir).join(path);
        if fallback.exists() {
            return Ok(fallback);
        }
    }
    Err(CliError::Io(format!(
        "input not found: {} (looked in {} and ${DATA_DIR_ENV})",
        path.display(),
        config_dir.display()
    )))
}
