//! Non-learning baselines: greedy nearest-choice construction and an ant
//! colony metaheuristic extended to one-node-per-cluster tours.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{self, EnergyParams};
use crate::instance::Instance;
use crate::report::{Solver, SolveReport};
use crate::tour::Tour;

/// Builds a tour by always taking the cheapest available (cluster, head)
/// extension from the current position; the step cost is the same edge
/// weight the exact solver uses. Deterministic, ties to the lowest indices.
pub fn solve_greedy(instance: &Instance, params: &EnergyParams) -> SolveReport {
    let started = Instant::now();
    let k = instance.num_clusters();
    let n = instance.nodes_per_cluster();
    let mut visited = vec![false; k];
    let mut at = instance.depot;
    let mut stops = Vec::with_capacity(k);
    for _ in 0..k {
        let mut best = f64::INFINITY;
        let mut pick = (usize::MAX, usize::MAX);
        for j in 0..k {
            if visited[j] {
                continue;
            }
            for v in 0..n {
                let cost = energy::edge_cost(params, at, &instance.clusters[j], v);
                if cost < best {
                    best = cost;
                    pick = (j, v);
                }
            }
        }
        visited[pick.0] = true;
        at = instance.node(pick.0, pick.1);
        stops.push(pick);
    }
    let tour = Tour::from_pairs(&stops);
    let breakdown =
        energy::total_weighted_energy(params, instance, &tour).expect("greedy tour is valid");
    SolveReport::new(
        Solver::Greedy,
        tour,
        breakdown,
        started.elapsed().as_secs_f64(),
        instance,
        params,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcoConfig {
    pub n_ants: usize,
    pub n_iterations: usize,
    /// Fraction of trail lost per iteration, in (0, 1).
    pub evaporation: f64,
    /// Exponent on the trail term.
    pub pheromone_weight: f64,
    /// Exponent on the inverse-cost term.
    pub visibility_weight: f64,
    pub rng_seed: u64,
}

impl Default for AcoConfig {
    fn default() -> Self {
        Self {
            n_ants: 30,
            n_iterations: 200,
            evaporation: 0.1,
            pheromone_weight: 1.0,
            visibility_weight: 5.0,
            rng_seed: 0,
        }
    }
}

impl AcoConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.n_ants < 1 || self.n_iterations < 1 {
            return Err(format!(
                "need n_ants >= 1 and n_iterations >= 1, got {} and {}",
                self.n_ants, self.n_iterations
            ));
        }
        if !(self.evaporation > 0.0 && self.evaporation < 1.0) {
            return Err(format!(
                "evaporation must lie in (0, 1), got {}",
                self.evaporation
            ));
        }
        Ok(())
    }
}

const TRAIL_FLOOR: f64 = 1e-12;

/// Trail intensities over all (depot + cluster-node) pairs.
pub struct PheromoneMatrix {
    size: usize,
    trail: Vec<f64>,
}

impl PheromoneMatrix {
    pub fn new(size: usize) -> Self {
        Self {
            size,
            trail: vec![1.0; size * size],
        }
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.trail[from * self.size + to]
    }

    pub fn deposit(&mut self, from: usize, to: usize, amount: f64) {
        self.trail[from * self.size + to] += amount;
    }

    pub fn evaporate(&mut self, rate: f64) {
        for t in &mut self.trail {
            *t = (*t * (1.0 - rate)).max(TRAIL_FLOOR);
        }
    }
}

/// Ant colony search over (cluster, node) cities with the depot as city 0.
///
/// Ants pick the next city with probability proportional to
/// trail^pheromone_weight * (1/edge_cost)^visibility_weight over all nodes
/// of unvisited clusters. Each iteration the best ant deposits Q/energy
/// along its tour, where Q is the mean edge cost of the instance, keeping
/// trail magnitudes comparable across omega scales. Returns the best tour
/// seen; deterministic for a fixed `rng_seed`.
pub fn solve_aco(instance: &Instance, params: &EnergyParams, config: &AcoConfig) -> SolveReport {
    config.validate().expect("valid AcoConfig");
    let started = Instant::now();
    let k = instance.num_clusters();
    let n = instance.nodes_per_cluster();
    let cities = 1 + k * n;
    let city = |j: usize, v: usize| 1 + j * n + v;
    let position = |id: usize| {
        if id == 0 {
            instance.depot
        } else {
            instance.node((id - 1) / n, (id - 1) % n)
        }
    };

    // cost[from][j*n + v]: weighted cost of entering (j, v) from city `from`.
    let mut cost = vec![0.0; cities * k * n];
    for from in 0..cities {
        let at = position(from);
        for j in 0..k {
            for v in 0..n {
                cost[from * k * n + j * n + v] =
                    energy::edge_cost(params, at, &instance.clusters[j], v);
            }
        }
    }
    let deposit_scale = cost.iter().sum::<f64>() / cost.len() as f64;
    let return_cost: Vec<f64> = (1..cities)
        .map(|id| (1.0 - params.omega) * energy::leg_energy(params, position(id), instance.depot))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut trails = PheromoneMatrix::new(cities);
    let mut best_energy = f64::INFINITY;
    let mut best_stops: Vec<(usize, usize)> = Vec::new();
    let mut weights = vec![0.0; k * n];

    for _ in 0..config.n_iterations {
        let mut iter_best = f64::INFINITY;
        let mut iter_stops: Vec<(usize, usize)> = Vec::new();
        for _ in 0..config.n_ants {
            let mut visited = 0usize;
            let mut here = 0;
            let mut total = 0.0;
            let mut stops = Vec::with_capacity(k);
            for _ in 0..k {
                let mut sum = 0.0;
                for j in 0..k {
                    if visited & (1 << j) != 0 {
                        for w in &mut weights[j * n..(j + 1) * n] {
                            *w = 0.0;
                        }
                        continue;
                    }
                    for v in 0..n {
                        let c = cost[here * k * n + j * n + v];
                        let w = trails.get(here, city(j, v)).powf(config.pheromone_weight)
                            * c.recip().powf(config.visibility_weight);
                        weights[j * n + v] = w;
                        sum += w;
                    }
                }
                let mut draw = rng.gen::<f64>() * sum;
                let mut chosen = usize::MAX;
                for (idx, &w) in weights.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    draw -= w;
                    chosen = idx;
                    if draw <= 0.0 {
                        break;
                    }
                }
                let (j, v) = (chosen / n, chosen % n);
                total += cost[here * k * n + chosen];
                here = city(j, v);
                visited |= 1 << j;
                stops.push((j, v));
            }
            total += return_cost[here - 1];
            if total < iter_best {
                iter_best = total;
                iter_stops = stops;
            }
        }
        if iter_best < best_energy {
            best_energy = iter_best;
            best_stops = iter_stops.clone();
        }
        trails.evaporate(config.evaporation);
        let amount = deposit_scale / iter_best;
        let mut from = 0;
        for &(j, v) in &iter_stops {
            let to = city(j, v);
            trails.deposit(from, to, amount);
            from = to;
        }
        trails.deposit(from, 0, amount);
    }

    let tour = Tour::from_pairs(&best_stops);
    let breakdown =
        energy::total_weighted_energy(params, instance, &tour).expect("ant tours are valid");
    SolveReport::new(
        Solver::Aco,
        tour,
        breakdown,
        started.elapsed().as_secs_f64(),
        instance,
        params,
    )
}
