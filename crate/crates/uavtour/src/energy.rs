//! Physical energy model: air-to-ground channel, rotor propulsion, the
//! first-order radio model for intra-cluster traffic, and the weighted
//! system objective that all solvers minimize.
//!
//! Geometry assumptions baked in: the UAV hovers directly above the chosen
//! head of each cluster at altitude `altitude`, so the elevation angle is 90
//! degrees and the link distance is the altitude itself. Flight legs are
//! horizontal distances between hover points flown at constant `v_uav`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{Instance, Point};
use crate::tour::{Tour, TourError};

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error("speed {v} outside [0, {v_full}]")]
    Speed { v: f64, v_full: f64 },
    #[error("invalid energy parameters: {0}")]
    BadParams(String),
    #[error("tour violates constraints: {0}")]
    Constraint(#[from] TourError),
    #[error("failed to parse energy config: {0}")]
    Parse(#[from] toml::de::Error),
}

/// Every knob of the physical model, in SI units.
///
/// Angles are degrees, powers watts, energies joules, distances meters.
/// `noise_density` is in dBm/Hz (the only non-SI field; it is universally
/// quoted that way). `omega` weighs ground energy against UAV energy in the
/// objective: 1 means ground only, 0 means UAV only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyParams {
    /// Environment constant of the LoS probability model.
    pub eta: f64,
    /// Environment constant of the LoS probability model, per degree.
    pub beta: f64,
    pub path_loss_exponent: f64,
    /// Carrier frequency in Hz.
    pub carrier_freq: f64,
    pub light_speed: f64,
    /// Extra path loss on LoS links, dB.
    pub mu_los: f64,
    /// Extra path loss on NLoS links, dB.
    pub mu_nlos: f64,
    /// Head transmit power towards the UAV, W.
    pub ch_tx_power: f64,
    /// Channel bandwidth, Hz.
    pub bandwidth: f64,
    /// Noise power spectral density, dBm/Hz.
    pub noise_density: f64,
    /// Hover altitude, m.
    pub altitude: f64,
    /// Take-off mass, kg.
    pub uav_mass: f64,
    pub gravity: f64,
    /// Propeller radius, m.
    pub prop_radius: f64,
    pub prop_count: u32,
    /// Air density, kg/m^3.
    pub air_density: f64,
    /// Propulsion power at full speed minus hover, W.
    pub p_full: f64,
    /// Static propulsion offset, W.
    pub p_static: f64,
    /// Maximum flight speed, m/s.
    pub v_full: f64,
    /// Cruise speed used for legs, m/s.
    pub v_uav: f64,
    /// Communication power while collecting, W.
    pub p_com: f64,
    /// Radio electronics energy per bit, J/bit.
    pub e_elec: f64,
    /// Free-space amplifier energy, J/bit/m^2.
    pub eps_fs: f64,
    /// Multipath amplifier energy, J/bit/m^4.
    pub eps_mp: f64,
    /// Message size per node, bits.
    pub msg_bits: f64,
    /// Ground-vs-UAV weight in the objective, in [0, 1].
    pub omega: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self {
            eta: 10.0,
            beta: 0.03,
            path_loss_exponent: 3.0,
            carrier_freq: 2.0e9,
            light_speed: 3.0e8,
            mu_los: 1.0,
            mu_nlos: 20.0,
            // 21 dBm.
            ch_tx_power: 10f64.powf(-0.9),
            bandwidth: 1.0e6,
            noise_density: -174.0,
            altitude: 50.0,
            uav_mass: 0.5,
            gravity: 9.8,
            prop_radius: 0.2,
            prop_count: 4,
            air_density: 1.225,
            p_full: 5.0,
            p_static: 0.0,
            v_full: 15.0,
            v_uav: 15.0,
            p_com: 0.0126,
            e_elec: 50.0e-9,
            eps_fs: 10.0e-12,
            eps_mp: 0.0013e-12,
            msg_bits: 8.0e6,
            omega: 0.5,
        }
    }
}

impl EnergyParams {
    pub fn validate(&self) -> Result<(), EnergyError> {
        let positive: [(&str, f64); 16] = [
            ("eta", self.eta),
            ("carrier_freq", self.carrier_freq),
            ("light_speed", self.light_speed),
            ("ch_tx_power", self.ch_tx_power),
            ("bandwidth", self.bandwidth),
            ("altitude", self.altitude),
            ("uav_mass", self.uav_mass),
            ("gravity", self.gravity),
            ("prop_radius", self.prop_radius),
            ("air_density", self.air_density),
            ("p_full", self.p_full),
            ("v_full", self.v_full),
            ("e_elec", self.e_elec),
            ("eps_fs", self.eps_fs),
            ("eps_mp", self.eps_mp),
            ("msg_bits", self.msg_bits),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(EnergyError::BadParams(format!(
                    "{} must be positive and finite, got {}",
                    name, v
                )));
            }
        }
        if self.prop_count == 0 {
            return Err(EnergyError::BadParams("prop_count must be positive".into()));
        }
        if self.p_static < 0.0 || self.beta < 0.0 || self.p_com < 0.0 {
            return Err(EnergyError::BadParams(
                "p_static, beta, and p_com must be non-negative".into(),
            ));
        }
        if !(self.omega >= 0.0 && self.omega <= 1.0) {
            return Err(EnergyError::BadParams(format!(
                "omega must lie in [0, 1], got {}",
                self.omega
            )));
        }
        if !(self.v_uav > 0.0 && self.v_uav <= self.v_full) {
            return Err(EnergyError::BadParams(format!(
                "v_uav must lie in (0, v_full={}], got {}",
                self.v_full, self.v_uav
            )));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("params serialize")
    }

    pub fn from_toml(text: &str) -> Result<Self, EnergyError> {
        let params: Self = toml::from_str(text)?;
        params.validate()?;
        Ok(params)
    }
}

/// Split of the weighted objective into its four physical parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    /// Member transmissions to their head plus head receive electronics, J.
    pub ground_intra: f64,
    /// Head transmissions up to the UAV, J.
    pub ground_ch_tx: f64,
    /// Propulsion over all legs including the return to the depot, J.
    pub uav_flight: f64,
    /// Hover plus communication while collecting at each cluster, J.
    pub uav_collect: f64,
    /// omega * ground + (1 - omega) * UAV.
    pub total_weighted: f64,
}

/// Probability of a line-of-sight link at 90 degrees elevation. Identical
/// for every head because hover points sit vertically above them.
pub fn los_probability(p: &EnergyParams) -> f64 {
    let tau = 90.0;
    1.0 / (1.0 + p.eta * (-p.beta * (tau - p.eta)).exp())
}

/// Expected air-to-ground path loss in dB, mixing LoS and NLoS.
pub fn avg_path_loss(p: &EnergyParams) -> f64 {
    let p_los = los_probability(p);
    let free_space = 10.0
        * p.path_loss_exponent
        * (4.0 * std::f64::consts::PI * p.carrier_freq * p.altitude / p.light_speed).log10();
    p_los * (free_space + p.mu_los) + (1.0 - p_los) * (free_space + p.mu_nlos)
}

/// Total noise power over the channel bandwidth, W.
fn noise_power(p: &EnergyParams) -> f64 {
    let dbm = p.noise_density + 10.0 * p.bandwidth.log10();
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Head-to-UAV data rate in bits/s. Head-independent by geometry.
pub fn data_rate(p: &EnergyParams) -> f64 {
    let loss_linear = 10f64.powf(avg_path_loss(p) / 10.0);
    let rx_power = p.ch_tx_power / loss_linear;
    p.bandwidth * (1.0 + rx_power / noise_power(p)).log2()
}

/// Propulsion power at horizontal speed `v`, W. Hover power is `move_power(p, 0)`.
pub fn move_power(p: &EnergyParams, v: f64) -> Result<f64, EnergyError> {
    if !(0.0..=p.v_full).contains(&v) {
        return Err(EnergyError::Speed { v, v_full: p.v_full });
    }
    let thrust = p.uav_mass * p.gravity;
    let disk = 2.0 * std::f64::consts::PI * p.prop_radius * p.prop_radius * p.prop_count as f64
        * p.air_density;
    let hover = (thrust.powi(3) / disk).sqrt();
    Ok(hover + (p.p_full - p.p_static) / p.v_full * v + p.p_static)
}

fn hover_power(p: &EnergyParams) -> f64 {
    move_power(p, 0.0).expect("0 is a valid speed")
}

/// Energy to hover over one head while it uploads its cluster's data, J.
/// Upload volume is (cluster_size - 1) messages; hover time equals transmit
/// time.
pub fn collection_energy(p: &EnergyParams, cluster_size: usize) -> f64 {
    debug_assert!(cluster_size >= 2);
    let bits = (cluster_size as f64 - 1.0) * p.msg_bits;
    bits / data_rate(p) * (hover_power(p) + p.p_com)
}

/// Propulsion energy for one straight leg at cruise speed, J.
pub fn leg_energy(p: &EnergyParams, from: Point, to: Point) -> f64 {
    let power = move_power(p, p.v_uav).expect("v_uav validated against v_full");
    from.dist(to) / p.v_uav * power
}

/// Distance where the radio model switches from d^2 to d^4 amplification.
pub fn crossover_distance(p: &EnergyParams) -> f64 {
    (p.eps_fs / p.eps_mp).sqrt()
}

/// Energy for one member to transmit one message over distance `d`, J.
fn member_tx_energy(p: &EnergyParams, d: f64) -> f64 {
    let amp = if d <= crossover_distance(p) {
        p.eps_fs * d * d
    } else {
        p.eps_mp * d.powi(4)
    };
    p.msg_bits * (p.e_elec + amp)
}

/// (intra, head transmit) energies for a cluster with head `ch`, J.
///
/// Intra = every other member transmits its message to the head + the head's
/// receive electronics per message. Head transmit = radiating the aggregated
/// data up to the UAV at `ch_tx_power` for the upload duration.
pub fn ground_cluster_parts(p: &EnergyParams, cluster: &[Point], ch: usize) -> (f64, f64) {
    let head = cluster[ch];
    let mut intra = 0.0;
    for (i, node) in cluster.iter().enumerate() {
        if i == ch {
            continue;
        }
        intra += member_tx_energy(p, node.dist(head));
        intra += p.msg_bits * p.e_elec;
    }
    let upload_bits = (cluster.len() as f64 - 1.0) * p.msg_bits;
    let ch_tx = p.ch_tx_power * upload_bits / data_rate(p);
    (intra, ch_tx)
}

/// Total ground-side energy of one cluster under head `ch`, J.
pub fn ground_cluster_energy(p: &EnergyParams, cluster: &[Point], ch: usize) -> f64 {
    let (intra, ch_tx) = ground_cluster_parts(p, cluster, ch);
    intra + ch_tx
}

/// Weighted cost of extending a partial tour from `from` by visiting
/// `cluster` at head `node`: the objective contribution of that move minus
/// the closing leg, which no single step owns.
///
/// Summing edge costs along a tour and adding (1 - omega) times the closing
/// leg reproduces `total_weighted_energy` exactly; every solver searches
/// over this same quantity.
pub fn edge_cost(p: &EnergyParams, from: Point, cluster: &[Point], node: usize) -> f64 {
    let to = cluster[node];
    p.omega * ground_cluster_energy(p, cluster, node)
        + (1.0 - p.omega) * (leg_energy(p, from, to) + collection_energy(p, cluster.len()))
}

/// Evaluates the full weighted objective for a closed tour.
pub fn total_weighted_energy(
    p: &EnergyParams,
    instance: &Instance,
    tour: &Tour,
) -> Result<EnergyBreakdown, EnergyError> {
    tour.validate(instance)?;
    let mut ground_intra = 0.0;
    let mut ground_ch_tx = 0.0;
    let mut uav_collect = 0.0;
    let mut uav_flight = 0.0;
    let mut at = instance.depot;
    for stop in &tour.stops {
        let cluster = &instance.clusters[stop.cluster];
        let (intra, ch_tx) = ground_cluster_parts(p, cluster, stop.node);
        ground_intra += intra;
        ground_ch_tx += ch_tx;
        uav_collect += collection_energy(p, cluster.len());
        let here = cluster[stop.node];
        uav_flight += leg_energy(p, at, here);
        at = here;
    }
    uav_flight += leg_energy(p, at, instance.depot);
    let total_weighted = p.omega * (ground_intra + ground_ch_tx)
        + (1.0 - p.omega) * (uav_flight + uav_collect);
    Ok(EnergyBreakdown {
        ground_intra,
        ground_ch_tx,
        uav_flight,
        uav_collect,
        total_weighted,
    })
}
