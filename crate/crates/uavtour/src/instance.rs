//! Problem instances: a depot plus K disjoint square clusters of N ground
//! nodes each, generated by seeded rejection sampling and persisted as
//! versioned JSON.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("invalid instance parameters: {0}")]
    BadParams(String),
    #[error("could not place {placed} disjoint clusters within {budget} samples (K={k}, zeta={zeta}, area={area})")]
    PackingFailed {
        k: usize,
        zeta: f64,
        area: f64,
        placed: usize,
        budget: usize,
    },
    #[error("instance violates invariants: {0}")]
    Invalid(String),
    #[error("unsupported instance file version {0}")]
    Version(u32),
    #[error("failed to parse instance file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Planar point in meters. Serializes as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point(pub f64, pub f64);

impl Point {
    pub fn x(&self) -> f64 {
        self.0
    }

    pub fn y(&self) -> f64 {
        self.1
    }

    pub fn dist(&self, other: Point) -> f64 {
        (self.0 - other.0).hypot(self.1 - other.1)
    }
}

/// One data-collection scenario.
///
/// `clusters[k]` holds the N candidate head positions of cluster k; every
/// node lies in the square of half-width `zeta` around its cluster center,
/// cluster squares are pairwise disjoint, and everything fits in
/// `[0, area] x [0, area]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub seed: u64,
    pub zeta: f64,
    pub area: f64,
    pub depot: Point,
    pub clusters: Vec<Vec<Point>>,
}

/// On-disk wrapper so the schema can evolve.
#[derive(Serialize, Deserialize)]
struct InstanceFile {
    version: u32,
    #[serde(flatten)]
    instance: Instance,
}

const FILE_VERSION: u32 = 1;
const RETRY_BUDGET: usize = 10_000;

pub const DEFAULT_AREA: f64 = 1000.0;
pub const DEFAULT_ZETA: f64 = 100.0;
pub const DEFAULT_DEPOT: Point = Point(500.0, 0.0);

impl Instance {
    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn nodes_per_cluster(&self) -> usize {
        self.clusters.first().map_or(0, Vec::len)
    }

    pub fn node(&self, cluster: usize, node: usize) -> Point {
        self.clusters[cluster][node]
    }

    /// Checks disjointness, bounds, box membership, and uniform cluster size.
    pub fn validate(&self) -> Result<(), InstanceError> {
        let err = |msg: String| Err(InstanceError::Invalid(msg));
        if self.clusters.is_empty() {
            return err("no clusters".into());
        }
        if self.zeta <= 0.0 || self.area <= 0.0 {
            return err(format!("zeta {} and area {} must be positive", self.zeta, self.area));
        }
        let n = self.clusters[0].len();
        if n < 2 {
            return err(format!("clusters need at least 2 nodes, got {}", n));
        }
        for (k, cluster) in self.clusters.iter().enumerate() {
            if cluster.len() != n {
                return err(format!(
                    "cluster {} has {} nodes, cluster 0 has {}",
                    k,
                    cluster.len(),
                    n
                ));
            }
            for p in cluster {
                if p.x() < 0.0 || p.x() > self.area || p.y() < 0.0 || p.y() > self.area {
                    return err(format!(
                        "node [{}, {}] of cluster {} outside [0, {}] bounds",
                        p.x(),
                        p.y(),
                        k,
                        self.area
                    ));
                }
            }
            let (lo_x, hi_x) = min_max(cluster.iter().map(Point::x));
            let (lo_y, hi_y) = min_max(cluster.iter().map(Point::y));
            // The generation center is unknown after a round trip, but the
            // tightest box containing the nodes must fit in a zeta box.
            if hi_x - lo_x > 2.0 * self.zeta || hi_y - lo_y > 2.0 * self.zeta {
                return err(format!(
                    "cluster {} spans more than 2*zeta = {}",
                    k,
                    2.0 * self.zeta
                ));
            }
        }
        for a in 0..self.clusters.len() {
            for b in (a + 1)..self.clusters.len() {
                // Node extents are contained in the generation boxes, so
                // overlapping extents prove the boxes overlapped.
                let (ca, cb) = (&self.clusters[a], &self.clusters[b]);
                let (a_lo_x, a_hi_x) = min_max(ca.iter().map(Point::x));
                let (a_lo_y, a_hi_y) = min_max(ca.iter().map(Point::y));
                let (b_lo_x, b_hi_x) = min_max(cb.iter().map(Point::x));
                let (b_lo_y, b_hi_y) = min_max(cb.iter().map(Point::y));
                let overlap_x = a_lo_x < b_hi_x && b_lo_x < a_hi_x;
                let overlap_y = a_lo_y < b_hi_y && b_lo_y < a_hi_y;
                if overlap_x && overlap_y {
                    return err(format!("clusters {} and {} overlap", a, b));
                }
            }
        }
        Ok(())
    }
}

fn min_max(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    vals.fold((f64::MAX, f64::MIN), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Generates an instance deterministically from its seed.
///
/// Cluster centers are drawn uniformly over the feasible center range
/// `[zeta, area - zeta]` and rejected while their squares overlap an already
/// accepted one; each cluster's nodes are drawn immediately after its center
/// is accepted. The stream is ChaCha8 keyed by `seed`, so results are stable
/// across platforms.
pub fn generate(
    k: usize,
    n: usize,
    zeta: f64,
    seed: u64,
    area: f64,
) -> Result<Instance, InstanceError> {
    if k < 1 || n < 2 {
        return Err(InstanceError::BadParams(format!(
            "need K >= 1 and N >= 2, got K={}, N={}",
            k, n
        )));
    }
    if zeta <= 0.0 || area <= 0.0 || 2.0 * zeta >= area {
        return Err(InstanceError::BadParams(format!(
            "need 0 < 2*zeta < area, got zeta={}, area={}",
            zeta, area
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = zeta;
    let hi = area - zeta;
    let mut centers: Vec<Point> = Vec::with_capacity(k);
    let mut clusters: Vec<Vec<Point>> = Vec::with_capacity(k);
    let mut attempts = 0;
    let mut stalled = 0;
    while centers.len() < k {
        if attempts >= RETRY_BUDGET {
            return Err(InstanceError::PackingFailed {
                k,
                zeta,
                area,
                placed: centers.len(),
                budget: RETRY_BUDGET,
            });
        }
        // Accepted boxes can strand the remaining ones; wipe the layout after
        // a long rejection run rather than burning the budget on a dead end.
        if stalled >= 200 {
            centers.clear();
            clusters.clear();
            stalled = 0;
        }
        attempts += 1;
        let c = Point(rng.gen_range(lo..hi), rng.gen_range(lo..hi));
        let disjoint = centers
            .iter()
            .all(|o| (c.x() - o.x()).abs() >= 2.0 * zeta || (c.y() - o.y()).abs() >= 2.0 * zeta);
        if !disjoint {
            stalled += 1;
            continue;
        }
        stalled = 0;
        let nodes = (0..n)
            .map(|_| {
                Point(
                    rng.gen_range(c.x() - zeta..c.x() + zeta),
                    rng.gen_range(c.y() - zeta..c.y() + zeta),
                )
            })
            .collect();
        centers.push(c);
        clusters.push(nodes);
    }
    Ok(Instance {
        seed,
        zeta,
        area,
        depot: DEFAULT_DEPOT,
        clusters,
    })
}

pub fn save(instance: &Instance, path: &Path) -> Result<(), InstanceError> {
    let file = InstanceFile {
        version: FILE_VERSION,
        instance: instance.clone(),
    };
    let body = serde_json::to_string_pretty(&file)?;
    fs::write(path, body).map_err(|source| InstanceError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load(path: &Path) -> Result<Instance, InstanceError> {
    let body = fs::read_to_string(path).map_err(|source| InstanceError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let file: InstanceFile = serde_json::from_str(&body)?;
    if file.version != FILE_VERSION {
        return Err(InstanceError::Version(file.version));
    }
    file.instance.validate()?;
    Ok(file.instance)
}
