//! Solver output: the tour, its energy breakdown, wall-clock time, and a
//! fingerprint tying the numbers to the exact inputs that produced them, so
//! every reported energy can be recomputed and checked.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::energy::{EnergyBreakdown, EnergyParams};
use crate::instance::Instance;
use crate::tour::Tour;

/// Which algorithm produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Exact,
    Brute,
    Greedy,
    Aco,
    Drl,
}

impl Solver {
    pub fn name(&self) -> &'static str {
        match self {
            Solver::Exact => "exact",
            Solver::Brute => "brute",
            Solver::Greedy => "greedy",
            Solver::Aco => "aco",
            Solver::Drl => "drl",
        }
    }
}

impl std::str::FromStr for Solver {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Solver::Exact),
            "brute" => Ok(Solver::Brute),
            "greedy" => Ok(Solver::Greedy),
            "aco" => Ok(Solver::Aco),
            "drl" => Ok(Solver::Drl),
            other => Err(format!(
                "unknown solver {:?}, expected exact|brute|greedy|aco|drl",
                other
            )),
        }
    }
}

/// Identifies the inputs of a run: instance seed, objective weight, and a
/// short hash of the full physical parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub instance_seed: u64,
    pub omega: f64,
    pub params_hash: String,
}

/// First 16 hex chars of the SHA-256 of the canonical JSON parameter dump.
pub fn params_hash(params: &EnergyParams) -> String {
    let body = serde_json::to_string(params).expect("params serialize");
    let digest = Sha256::digest(body.as_bytes());
    let mut out = String::with_capacity(16);
    for byte in digest.iter().take(8) {
        out.push_str(&format!("{:02x}", byte));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub solver: Solver,
    pub tour: Tour,
    pub breakdown: EnergyBreakdown,
    pub wall_clock: f64,
    pub fingerprint: Fingerprint,
}

impl SolveReport {
    pub fn new(
        solver: Solver,
        tour: Tour,
        breakdown: EnergyBreakdown,
        wall_clock: f64,
        instance: &Instance,
        params: &EnergyParams,
    ) -> Self {
        Self {
            solver,
            tour,
            breakdown,
            wall_clock,
            fingerprint: Fingerprint {
                instance_seed: instance.seed,
                omega: params.omega,
                params_hash: params_hash(params),
            },
        }
    }

    pub fn energy(&self) -> f64 {
        self.breakdown.total_weighted
    }
}
