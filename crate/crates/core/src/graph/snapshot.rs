//! Ordered weekly (or otherwise time-sliced) graphs over one ID space.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{load_attributes, load_edge_list, AttributeFormat, AttributeTable, DirectedGraph, EdgeListFormat, IngestReport};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub label: String,
    pub edges: PathBuf,
    #[serde(default)]
    pub attributes: Option<PathBuf>,
}

/// Snapshot manifest, usually read from TOML:
///
/// ```toml
/// [edge_format]
/// header = true
///
/// [[snapshot]]
/// label = "week40"
/// edges = "w40.edges"
/// attributes = "w40.csv"
/// ```
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotManifest {
    #[serde(default)]
    pub edge_format: EdgeListFormat,
    #[serde(default)]
    pub attribute_format: AttributeFormat,
    #[serde(default, rename = "snapshot")]
    pub snapshots: Vec<SnapshotEntry>,
}

impl SnapshotManifest {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::validation(format!("snapshot manifest: {e}")))
    }

    /// Labels must be non-empty and unique; manifest order is time order.
    pub fn validate(&self) -> Result<()> {
        if self.snapshots.is_empty() {
            return Err(Error::validation("snapshot manifest lists no snapshots"));
        }
        let mut seen = HashSet::new();
        for entry in &self.snapshots {
            if entry.label.trim().is_empty() {
                return Err(Error::validation("snapshot with empty label"));
            }
            if !seen.insert(entry.label.as_str()) {
                return Err(Error::validation(format!("duplicate snapshot label {:?}", entry.label)));
            }
        }
        Ok(())
    }
}

/// Global external-ID registry shared by all snapshots of a series.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IdRegistry {
    ids: Vec<String>,
    index: HashMap<String, u32>,
}

impl IdRegistry {
    pub fn intern(&mut self, id: &str) -> u32 {
        if let Some(&g) = self.index.get(id) {
            return g;
        }
        let g = self.ids.len() as u32;
        self.ids.push(id.to_owned());
        self.index.insert(id.to_owned(), g);
        g
    }

    pub fn get(&self, id: &str) -> Option<u32> {
        self.index.get(id).copied()
    }

    pub fn external_id(&self, global: u32) -> &str {
        &self.ids[global as usize]
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub label: String,
    pub graph: DirectedGraph,
    pub attributes: Option<AttributeTable>,
    pub report: IngestReport,
    /// Registry index of each local node.
    pub global_ids: Vec<u32>,
}

#[derive(Clone, Debug, Default)]
pub struct SnapshotSeries {
    pub snapshots: Vec<Snapshot>,
    pub registry: IdRegistry,
}

impl SnapshotSeries {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.snapshots.iter().map(|s| s.label.as_str())
    }
}

fn open(label: &str, path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|source| Error::SnapshotIo {
        label: label.to_owned(),
        path: path.to_owned(),
        source,
    })
}

/// Loads every snapshot in the manifest. Relative paths resolve against `base_dir`.
pub fn load_snapshots(manifest: &SnapshotManifest, base_dir: &Path) -> Result<SnapshotSeries> {
    manifest.validate()?;
    let mut series = SnapshotSeries::default();
    for entry in &manifest.snapshots {
        let edges_path = base_dir.join(&entry.edges);
        let (graph, report) = load_edge_list(open(&entry.label, &edges_path)?, &manifest.edge_format)?;
        let attributes = match &entry.attributes {
            Some(p) => {
                let path = base_dir.join(p);
                Some(load_attributes(open(&entry.label, &path)?, &graph, &manifest.attribute_format)?.table)
            }
            None => None,
        };
        let global_ids = graph.external_ids().iter().map(|id| series.registry.intern(id)).collect();
        series.snapshots.push(Snapshot {
            label: entry.label.clone(),
            graph,
            attributes,
            report,
            global_ids,
        });
    }
    Ok(series)
}
