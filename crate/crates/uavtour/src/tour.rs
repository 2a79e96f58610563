//! Tours: an ordered list of (cluster, chosen head) pairs. The UAV starts at
//! the depot, hovers over each head in order, and returns to the depot.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{Instance, Point};

#[derive(Debug, Error)]
pub enum TourError {
    #[error("tour visits {got} clusters, instance has {want}")]
    WrongLength { got: usize, want: usize },
    #[error("cluster {0} visited more than once")]
    RepeatedCluster(usize),
    #[error("stop ({cluster}, {node}) is out of range")]
    OutOfRange { cluster: usize, node: usize },
    #[error("malformed tour string {0:?}, expected cluster:node pairs joined by '|'")]
    Malformed(String),
}

/// One stop: visit `cluster` hovering over its node `node`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stop {
    pub cluster: usize,
    pub node: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tour {
    pub stops: Vec<Stop>,
}

impl Tour {
    pub fn new(stops: Vec<Stop>) -> Self {
        Self { stops }
    }

    pub fn from_pairs(pairs: &[(usize, usize)]) -> Self {
        Self {
            stops: pairs
                .iter()
                .map(|&(cluster, node)| Stop { cluster, node })
                .collect(),
        }
    }

    /// Every cluster exactly once, all indices in range.
    pub fn validate(&self, instance: &Instance) -> Result<(), TourError> {
        let k = instance.num_clusters();
        if self.stops.len() != k {
            return Err(TourError::WrongLength {
                got: self.stops.len(),
                want: k,
            });
        }
        let mut seen = vec![false; k];
        for stop in &self.stops {
            if stop.cluster >= k || stop.node >= instance.nodes_per_cluster() {
                return Err(TourError::OutOfRange {
                    cluster: stop.cluster,
                    node: stop.node,
                });
            }
            if seen[stop.cluster] {
                return Err(TourError::RepeatedCluster(stop.cluster));
            }
            seen[stop.cluster] = true;
        }
        Ok(())
    }

    /// Hover points in visiting order (depot excluded).
    pub fn hover_points(&self, instance: &Instance) -> Vec<Point> {
        self.stops
            .iter()
            .map(|s| instance.node(s.cluster, s.node))
            .collect()
    }

    /// Head chosen for each cluster, indexed by cluster.
    pub fn heads_by_cluster(&self, k: usize) -> Vec<Option<usize>> {
        let mut heads = vec![None; k];
        for stop in &self.stops {
            if stop.cluster < k {
                heads[stop.cluster] = Some(stop.node);
            }
        }
        heads
    }

    /// Compact form `cluster:node|cluster:node|...` used in CSV reports.
    pub fn to_compact(&self) -> String {
        self.stops
            .iter()
            .map(|s| format!("{}:{}", s.cluster, s.node))
            .collect::<Vec<_>>()
            .join("|")
    }

    pub fn from_compact(text: &str) -> Result<Self, TourError> {
        let malformed = || TourError::Malformed(text.to_string());
        let mut stops = Vec::new();
        for part in text.split('|') {
            let (c, n) = part.split_once(':').ok_or_else(malformed)?;
            stops.push(Stop {
                cluster: c.trim().parse().map_err(|_| malformed())?,
                node: n.trim().parse().map_err(|_| malformed())?,
            });
        }
        Ok(Self { stops })
    }
}
