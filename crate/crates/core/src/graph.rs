//! Year-stamped directed supply-chain snapshots.
//!
//! An edge `(s, c)` means firm `s` supplies firm `c`. Snapshots are immutable
//! after loading and can be shared across threads without synchronization.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::Read;
use std::path::Path;

use thiserror::Error;

use crate::ingest::{self, IngestError};

pub const EDGE_HEADER: [&str; 3] = ["year", "supplier_id", "client_id"];

#[derive(Debug, Error)]
pub enum GraphError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("edge file row {row}: {reason}")]
    Malformed { row: usize, reason: String },
    #[error("edge file row {row}: self-loop on firm `{firm}`")]
    SelfLoop { row: usize, firm: String },
    #[error("no supply-chain snapshot for year {0}")]
    NoSnapshot(i32),
}

/// Directed supplier -> client edges recorded for one calendar year.
#[derive(Debug, Clone, Default)]
pub struct SupplyChainSnapshot {
    pub year: i32,
    edges: BTreeSet<(String, String)>,
    suppliers: HashMap<String, BTreeSet<String>>,
    clients: HashMap<String, BTreeSet<String>>,
}

impl SupplyChainSnapshot {
    pub fn new(year: i32) -> Self {
        SupplyChainSnapshot {
            year,
            ..Default::default()
        }
    }

    /// Inserts an edge; returns false if it was already present.
    ///
    /// Panics on a self-loop or an empty id; loaders check both first.
    pub fn insert(&mut self, supplier: &str, client: &str) -> bool {
        assert!(!supplier.is_empty() && !client.is_empty(), "empty firm id");
        assert_ne!(supplier, client, "self-loop");
        if !self
            .edges
            .insert((supplier.to_string(), client.to_string()))
        {
            return false;
        }
        self.clients
            .entry(supplier.to_string())
            .or_default()
            .insert(client.to_string());
        self.suppliers
            .entry(client.to_string())
            .or_default()
            .insert(supplier.to_string());
        true
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.edges.iter().map(|(s, c)| (s.as_str(), c.as_str()))
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn suppliers_of(&self, firm: &str) -> impl Iterator<Item = &str> {
        self.suppliers
            .get(firm)
            .into_iter()
            .flat_map(|s| s.iter().map(String::as_str))
    }

    pub fn clients_of(&self, firm: &str) -> impl Iterator<Item = &str> {
        self.clients
            .get(firm)
            .into_iter()
            .flat_map(|s| s.iter().map(String::as_str))
    }

    fn contains_node(&self, firm: &str) -> bool {
        self.suppliers.contains_key(firm) || self.clients.contains_key(firm)
    }
}

/// Degree summary of one snapshot, laid out like the yearly network tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NetworkStats {
    pub n_firms: usize,
    pub n_links: usize,
    pub max_indegree: usize,
    pub max_outdegree: usize,
}

#[derive(Debug, Clone, Default)]
pub struct SupplyChainGraph {
    snapshots: BTreeMap<i32, SupplyChainSnapshot>,
}

impl SupplyChainGraph {
    pub fn from_snapshots(snapshots: impl IntoIterator<Item = SupplyChainSnapshot>) -> Self {
        SupplyChainGraph {
            snapshots: snapshots.into_iter().map(|s| (s.year, s)).collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, GraphError> {
        let f = ingest::open(path)?;
        Self::from_reader(f, &path.display().to_string())
    }

    /// Parses an edge list. Any malformed row or self-loop rejects the whole
    /// file; duplicate rows collapse into one edge.
    pub fn from_reader<R: Read>(reader: R, file: &str) -> Result<Self, GraphError> {
        let table = ingest::read_table(reader, file, &EDGE_HEADER)?;
        let mut snapshots: BTreeMap<i32, SupplyChainSnapshot> = BTreeMap::new();
        for (row, fields) in table.rows {
            if fields.len() != EDGE_HEADER.len() {
                return Err(GraphError::Malformed {
                    row,
                    reason: format!("expected 3 columns, found {}", fields.len()),
                });
            }
            let year: i32 = fields[0].parse().map_err(|_| GraphError::Malformed {
                row,
                reason: format!("year `{}` is not an integer", fields[0]),
            })?;
            let (s, c) = (&fields[1], &fields[2]);
            if s.is_empty() || c.is_empty() {
                return Err(GraphError::Malformed {
                    row,
                    reason: "empty firm id".into(),
                });
            }
            if s == c {
                return Err(GraphError::SelfLoop {
                    row,
                    firm: s.clone(),
                });
            }
            snapshots
                .entry(year)
                .or_insert_with(|| SupplyChainSnapshot::new(year))
                .insert(s, c);
        }
        Ok(SupplyChainGraph { snapshots })
    }

    pub fn years(&self) -> impl Iterator<Item = i32> + '_ {
        self.snapshots.keys().copied()
    }

    pub fn snapshot(&self, year: i32) -> Result<&SupplyChainSnapshot, GraphError> {
        self.snapshots
            .get(&year)
            .ok_or(GraphError::NoSnapshot(year))
    }

    /// The snapshot in force during `year`: that year's, else the most recent
    /// earlier one.
    pub fn snapshot_at(&self, year: i32) -> Option<&SupplyChainSnapshot> {
        self.snapshots.range(..=year).next_back().map(|(_, s)| s)
    }

    pub fn suppliers_of(&self, firm: &str, year: i32) -> Result<BTreeSet<String>, GraphError> {
        Ok(self
            .snapshot(year)?
            .suppliers_of(firm)
            .map(str::to_string)
            .collect())
    }

    pub fn clients_of(&self, firm: &str, year: i32) -> Result<BTreeSet<String>, GraphError> {
        Ok(self
            .snapshot(year)?
            .clients_of(firm)
            .map(str::to_string)
            .collect())
    }

    /// Firm count, link count and degree maxima for `year`.
    ///
    /// With `firm_filter`, only edges with both endpoints in the filter are
    /// kept, and filtered firms that appear anywhere in the year's snapshot
    /// count toward `n_firms` even when every one of their edges was cut.
    pub fn network_stats(
        &self,
        year: i32,
        firm_filter: Option<&HashSet<String>>,
    ) -> Result<NetworkStats, GraphError> {
        let snap = self.snapshot(year)?;
        let keep = |f: &str| firm_filter.is_none_or(|set| set.contains(f));
        let mut indeg: HashMap<&str, usize> = HashMap::new();
        let mut outdeg: HashMap<&str, usize> = HashMap::new();
        let mut n_links = 0;
        for (s, c) in snap.edges() {
            if keep(s) && keep(c) {
                n_links += 1;
                *outdeg.entry(s).or_default() += 1;
                *indeg.entry(c).or_default() += 1;
            }
        }
        let mut nodes: HashSet<&str> = indeg.keys().chain(outdeg.keys()).copied().collect();
        if let Some(filter) = firm_filter {
            nodes.extend(
                filter
                    .iter()
                    .map(String::as_str)
                    .filter(|f| snap.contains_node(f)),
            );
        }
        Ok(NetworkStats {
            n_firms: nodes.len(),
            n_links,
            max_indegree: indeg.values().copied().max().unwrap_or(0),
            max_outdegree: outdeg.values().copied().max().unwrap_or(0),
        })
    }
}
