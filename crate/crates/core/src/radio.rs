//! Propagation, SINR and concurrent-transmission feasibility, plus the
//! interference-radius and spatial-reuse quantities derived from them.
//!
//! Received power from `s` at `r` is `f · k0 · Pt · l^-γ`, where `f` says
//! whether the two beams point at each other. All arithmetic is in linear
//! units; dB only appears in constructors.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{DirectionalLink, Point};
use crate::parallel;

#[derive(Debug, Error, PartialEq)]
pub enum RadioError {
    #[error("zero distance between transmitter and receiver")]
    ZeroDistance,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadioParams {
    /// Transmit power in watts.
    pub tx_power_w: f64,
    /// Reference scaling factor `10^(PL(d0)/10)`, d0 = 1 m.
    pub k0: f64,
    pub path_loss_exponent: f64,
    /// Multi-user interference factor ρ.
    pub mui_factor: f64,
    pub bandwidth_hz: f64,
    /// One-sided noise power spectral density, W/Hz.
    pub noise_psd: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self::from_units(0.1, 68.0, 2.0, 1.0, 1.76e9, -174.0)
    }
}

impl RadioParams {
    /// Builds parameters from the usual datasheet units.
    pub fn from_units(
        tx_power_mw: f64,
        reference_loss_db: f64,
        path_loss_exponent: f64,
        mui_factor: f64,
        bandwidth_hz: f64,
        noise_dbm_per_hz: f64,
    ) -> Self {
        Self {
            tx_power_w: tx_power_mw * 1e-3,
            k0: db_to_linear(reference_loss_db),
            path_loss_exponent,
            mui_factor,
            bandwidth_hz,
            noise_psd: db_to_linear(noise_dbm_per_hz - 30.0),
        }
    }

    pub fn noise_power(&self) -> f64 {
        self.bandwidth_hz * self.noise_psd
    }

    fn unit_power(&self) -> f64 {
        self.k0 * self.tx_power_w
    }
}

/// Minimum SINR (linear) needed to sustain each rate.
#[derive(Clone, Debug, PartialEq)]
pub struct MsTable {
    thresholds: BTreeMap<u32, f64>,
}

impl Default for MsTable {
    fn default() -> Self {
        Self::from_db(&[(1, 5.0), (2, 8.0), (3, 10.0)])
    }
}

impl MsTable {
    pub fn from_db(entries: &[(u32, f64)]) -> Self {
        Self { thresholds: entries.iter().map(|&(rate, db)| (rate, db_to_linear(db))).collect() }
    }

    /// Threshold for `rate`; an untabulated rate uses the next tabulated
    /// rate above it. `None` when the rate exceeds the table.
    pub fn min_sinr(&self, rate: u32) -> Option<f64> {
        self.thresholds.range(rate..).next().map(|(_, &v)| v)
    }

    pub fn is_monotone(&self) -> bool {
        let v: Vec<f64> = self.thresholds.values().copied().collect();
        v.windows(2).all(|w| w[0] <= w[1])
    }

    pub fn entries(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.thresholds.iter().map(|(&r, &v)| (r, v))
    }
}

/// Beam indicator model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BeamModel {
    /// Nonadjacent links never couple.
    Isolated,
    /// A transmitter couples into a foreign receiver when each lies inside
    /// the other's beam cone; cones are aimed along the nodes' own links.
    Cone { half_angle_rad: f64 },
}

fn within_cone(apex: Point, aim: Point, target: Point, half_angle: f64) -> bool {
    let (ax, ay) = (aim.x - apex.x, aim.y - apex.y);
    let (tx, ty) = (target.x - apex.x, target.y - apex.y);
    let (na, nt) = (ax.hypot(ay), tx.hypot(ty));
    if na == 0.0 || nt == 0.0 {
        return true;
    }
    let cos = ((ax * tx + ay * ty) / (na * nt)).clamp(-1.0, 1.0);
    cos.acos() <= half_angle + 1e-12
}

impl BeamModel {
    /// `f` for the transmitter of `interferer` and the receiver of `victim`.
    pub fn indicator(&self, interferer: &DirectionalLink, victim: &DirectionalLink, positions: &[Point]) -> bool {
        match *self {
            BeamModel::Isolated => false,
            BeamModel::Cone { half_angle_rad } => {
                let pos = |n: crate::model::NodeId| positions[n.index()];
                let (s, r_own) = (pos(interferer.tx), pos(interferer.rx));
                let (r, s_own) = (pos(victim.rx), pos(victim.tx));
                within_cone(s, r_own, r, half_angle_rad) && within_cone(r, s_own, s, half_angle_rad)
            }
        }
    }
}

/// Received power in watts.
pub fn received_power(beams_meet: bool, params: &RadioParams, distance: f64) -> Result<f64, RadioError> {
    if distance <= 0.0 {
        return Err(RadioError::ZeroDistance);
    }
    if !beams_meet {
        return Ok(0.0);
    }
    Ok(params.unit_power() * distance.powf(-params.path_loss_exponent))
}

/// SINR (linear) of `link` while `interferers` transmit concurrently.
pub fn sinr(
    link: &DirectionalLink,
    interferers: &[DirectionalLink],
    model: &BeamModel,
    params: &RadioParams,
    positions: &[Point],
) -> f64 {
    let pos = |n: crate::model::NodeId| positions[n.index()];
    let signal_d = pos(link.tx).distance(&pos(link.rx));
    let signal = match received_power(true, params, signal_d) {
        Ok(p) => p,
        Err(_) => return f64::INFINITY,
    };
    let mut interference = 0.0;
    for other in interferers {
        if !model.indicator(other, link, positions) {
            continue;
        }
        match received_power(true, params, pos(other.tx).distance(&pos(link.rx))) {
            Ok(p) => interference += p,
            Err(_) => return 0.0,
        }
    }
    signal / (params.noise_power() + params.mui_factor * interference)
}

/// Decides whether a set of pairwise nonadjacent links may share a stage.
pub trait ConcurrencyCheck: Sync {
    fn admits(&self, links: &[DirectionalLink]) -> bool;
}

/// Every nonadjacent link set is admissible.
#[derive(Clone, Copy, Debug, Default)]
pub struct AlwaysPass;

impl ConcurrencyCheck for AlwaysPass {
    fn admits(&self, _links: &[DirectionalLink]) -> bool {
        true
    }
}

/// SINR test of every link against `MS(rate)`.
#[derive(Clone, Debug)]
pub struct SinrCheck {
    pub params: RadioParams,
    pub ms: MsTable,
    pub model: BeamModel,
    pub positions: Vec<Point>,
}

impl SinrCheck {
    pub fn link_supported(&self, link: &DirectionalLink, others: &[DirectionalLink]) -> bool {
        let Some(threshold) = self.ms.min_sinr(link.rate) else {
            return false;
        };
        sinr(link, others, &self.model, &self.params, &self.positions) >= threshold
    }
}

impl ConcurrencyCheck for SinrCheck {
    fn admits(&self, links: &[DirectionalLink]) -> bool {
        let mut others = Vec::with_capacity(links.len());
        links.iter().enumerate().all(|(i, link)| {
            others.clear();
            others.extend(links.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, l)| *l));
            self.link_supported(link, &others)
        })
    }
}

pub fn stage_feasible(links: &[DirectionalLink], check: &dyn ConcurrencyCheck) -> bool {
    check.admits(links)
}

/// Largest `Σ f·l^-γ` over interferer distances that still leaves the link
/// at or above `min_sinr`. Negative when the link fails even in isolation.
pub fn spatial_reuse_budget(link_len: f64, min_sinr: f64, params: &RadioParams) -> f64 {
    let unit = params.unit_power();
    let gamma = params.path_loss_exponent;
    (unit * link_len.powf(-gamma) / min_sinr - params.noise_power()) / (params.mui_factor * unit)
}

/// Whether interferers at the given receiver distances stay inside the
/// spatial reuse region.
pub fn within_reuse_region(interferer_distances: &[f64], budget: f64, params: &RadioParams) -> bool {
    let load: f64 = interferer_distances.iter().map(|d| d.powf(-params.path_loss_exponent)).sum();
    load <= budget
}

/// Minimum distance `F` interfering transmitters must keep from the
/// receiver. Infinite when the link cannot meet `min_sinr` even alone.
pub fn interference_radius(link_len: f64, min_sinr: f64, interferers: u32, params: &RadioParams) -> f64 {
    let unit = params.unit_power();
    let gamma = params.path_loss_exponent;
    let margin = unit * link_len.powf(-gamma) / min_sinr - params.noise_power();
    if margin <= 0.0 {
        return f64::INFINITY;
    }
    let inv = 1.0 / gamma;
    (params.mui_factor * unit * f64::from(interferers)).powf(inv) / margin.powf(inv)
}

/// Monte-Carlo estimate of the probability that `interferers` transmitters,
/// each placed uniformly in a disk of `disk_radius` around the receiver and
/// all beamed at it, leave the link inside its reuse region.
pub fn reuse_probability(
    link_len: f64,
    min_sinr: f64,
    interferers: usize,
    disk_radius: f64,
    params: &RadioParams,
    samples: usize,
    seed: u64,
) -> f64 {
    const BLOCK: usize = 4096;
    let budget = spatial_reuse_budget(link_len, min_sinr, params);
    let blocks: Vec<(u64, usize)> = (0..samples.div_ceil(BLOCK))
        .map(|b| (b as u64, BLOCK.min(samples - b * BLOCK)))
        .collect();
    let hits = parallel::map_ordered(&blocks, |&(block, n)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(block);
        let mut distances = vec![0.0; interferers];
        (0..n)
            .filter(|_| {
                for d in distances.iter_mut() {
                    *d = disk_radius * rng.gen::<f64>().sqrt();
                }
                within_reuse_region(&distances, budget, params)
            })
            .count()
    });
    if samples == 0 {
        return 0.0;
    }
    hits.iter().sum::<usize>() as f64 / samples as f64
}
