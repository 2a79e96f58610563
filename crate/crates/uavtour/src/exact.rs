//! Exact solvers: subset dynamic programming over (visited clusters, last
//! head), and exhaustive enumeration as an independent oracle.
//!
//! Folding each cluster's ground and collection energy into the edge that
//! enters it makes the objective purely edge-additive, so the classic
//! bitmask DP applies with (cluster, node) pairs as cities. The closing leg
//! back to the depot is added when the final layer is resolved.

use std::time::Instant;

use itertools::Itertools;
use thiserror::Error;

use crate::energy::{self, EnergyParams};
use crate::instance::Instance;
use crate::report::{Solver, SolveReport};
use crate::tour::Tour;

/// Hard cap on the DP mask width.
pub const MAX_CLUSTERS: usize = 16;

/// Hard cap on enumerated tours for the brute-force oracle.
pub const MAX_BRUTE_TOURS: f64 = 1e7;

#[derive(Debug, Error)]
pub enum ExactError {
    #[error("{k} clusters exceed the subset-DP limit of {max}")]
    TooManyClusters { k: usize, max: usize },
    #[error("enumeration space of {tours:.3e} tours exceeds the {max:.0e} budget")]
    SearchSpace { tours: f64, max: f64 },
    #[error(transparent)]
    Energy(#[from] energy::EnergyError),
    #[error(transparent)]
    Instance(#[from] crate::instance::InstanceError),
}

/// Globally optimal tour by dynamic programming over cluster subsets.
///
/// State (mask, j, v): cheapest path from the depot that has visited exactly
/// the clusters in `mask` and currently hovers at node `v` of cluster `j`,
/// with all vertex costs of visited clusters paid. Ties resolve to the
/// lexicographically first (cluster, node) because relaxation is strict.
pub fn solve_exact(instance: &Instance, params: &EnergyParams) -> Result<SolveReport, ExactError> {
    instance.validate()?;
    params.validate()?;
    let k = instance.num_clusters();
    let n = instance.nodes_per_cluster();
    if k > MAX_CLUSTERS {
        return Err(ExactError::TooManyClusters {
            k,
            max: MAX_CLUSTERS,
        });
    }
    let started = Instant::now();

    let full: usize = (1 << k) - 1;
    let states = (1 << k) * k * n;
    let idx = |mask: usize, j: usize, v: usize| (mask * k + j) * n + v;
    let mut cost = vec![f64::INFINITY; states];
    // Packed predecessor (cluster, node); usize::MAX marks "entered from depot".
    let mut pred = vec![usize::MAX; states];

    for j in 0..k {
        let cluster = &instance.clusters[j];
        for v in 0..n {
            cost[idx(1 << j, j, v)] = energy::edge_cost(params, instance.depot, cluster, v);
        }
    }

    for mask in 1..=full {
        for j in 0..k {
            if mask & (1 << j) == 0 {
                continue;
            }
            for v in 0..n {
                let here = cost[idx(mask, j, v)];
                if !here.is_finite() {
                    continue;
                }
                let at = instance.node(j, v);
                for nj in 0..k {
                    if mask & (1 << nj) != 0 {
                        continue;
                    }
                    let next_mask = mask | (1 << nj);
                    let cluster = &instance.clusters[nj];
                    for nv in 0..n {
                        let cand = here + energy::edge_cost(params, at, cluster, nv);
                        let slot = idx(next_mask, nj, nv);
                        if cand < cost[slot] {
                            cost[slot] = cand;
                            pred[slot] = j * n + v;
                        }
                    }
                }
            }
        }
    }

    let mut best = f64::INFINITY;
    let mut best_end = (0, 0);
    for j in 0..k {
        for v in 0..n {
            let here = cost[idx(full, j, v)];
            if !here.is_finite() {
                continue;
            }
            let closing =
                (1.0 - params.omega) * energy::leg_energy(params, instance.node(j, v), instance.depot);
            let total = here + closing;
            if total < best {
                best = total;
                best_end = (j, v);
            }
        }
    }

    let mut stops_rev = Vec::with_capacity(k);
    let (mut j, mut v) = best_end;
    let mut mask = full;
    loop {
        stops_rev.push((j, v));
        let p = pred[idx(mask, j, v)];
        mask &= !(1 << j);
        if p == usize::MAX {
            break;
        }
        j = p / n;
        v = p % n;
    }
    debug_assert_eq!(mask, 0);
    stops_rev.reverse();
    let tour = Tour::from_pairs(&stops_rev);

    let breakdown = energy::total_weighted_energy(params, instance, &tour)?;
    debug_assert!((breakdown.total_weighted - best).abs() <= 1e-9 * best.abs().max(1.0));
    Ok(SolveReport::new(
        Solver::Exact,
        tour,
        breakdown,
        started.elapsed().as_secs_f64(),
        instance,
        params,
    ))
}

/// Exhaustive minimum over all cluster permutations and head assignments.
/// Test oracle for `solve_exact`; infeasible beyond tiny sizes.
pub fn brute_force(instance: &Instance, params: &EnergyParams) -> Result<SolveReport, ExactError> {
    instance.validate()?;
    params.validate()?;
    let k = instance.num_clusters();
    let n = instance.nodes_per_cluster();
    let tours = (1..=k).map(|x| x as f64).product::<f64>() * (n as f64).powi(k as i32);
    if tours > MAX_BRUTE_TOURS {
        return Err(ExactError::SearchSpace {
            tours,
            max: MAX_BRUTE_TOURS,
        });
    }
    let started = Instant::now();

    let mut best = f64::INFINITY;
    let mut best_tour: Option<Tour> = None;
    for perm in (0..k).permutations(k) {
        for heads in (0..k).map(|_| 0..n).multi_cartesian_product() {
            let mut total = 0.0;
            let mut at = instance.depot;
            for (&cluster, &head) in perm.iter().zip(&heads) {
                total += energy::edge_cost(params, at, &instance.clusters[cluster], head);
                at = instance.node(cluster, head);
            }
            total += (1.0 - params.omega) * energy::leg_energy(params, at, instance.depot);
            if total < best {
                best = total;
                best_tour = Some(Tour::from_pairs(
                    &perm.iter().copied().zip(heads.iter().copied()).collect::<Vec<_>>(),
                ));
            }
        }
    }

    let tour = best_tour.expect("K >= 1 guarantees at least one tour");
    let breakdown = energy::total_weighted_energy(params, instance, &tour)?;
    Ok(SolveReport::new(
        Solver::Brute,
        tour,
        breakdown,
        started.elapsed().as_secs_f64(),
        instance,
        params,
    ))
}
