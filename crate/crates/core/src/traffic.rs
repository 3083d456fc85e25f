//! Packet arrivals: Poisson and bursty (hyper-exponential) renewal
//! processes, and the conversions between offered load and arrival rate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TrafficError {
    #[error("branch probabilities must be non-negative and sum to 1, got ({0}, {1})")]
    BadProbabilities(f64, f64),
    #[error("arrival rates must be finite and non-negative")]
    BadRate,
}

/// Inter-arrival law of one flow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ArrivalProcess {
    /// Exponential intervals with rate `lambda` (packets/s).
    Poisson { lambda: f64 },
    /// With probability `p1` an interval is Exp(`lambda1`), otherwise Exp(`lambda2`).
    Ipp { lambda1: f64, lambda2: f64, p1: f64, p2: f64 },
}

/// How traffic is shaped, before a load is applied.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", deny_unknown_fields)]
pub enum TrafficMode {
    #[default]
    Poisson,
    Ipp {
        #[serde(default = "default_p1")]
        p1: f64,
        /// λ1 / λ2.
        #[serde(default = "default_ratio")]
        ratio: f64,
    },
}

fn default_p1() -> f64 {
    0.5
}
fn default_ratio() -> f64 {
    10.0
}


impl TrafficMode {
    pub fn label(&self) -> &'static str {
        match self {
            TrafficMode::Poisson => "poisson",
            TrafficMode::Ipp { .. } => "ipp",
        }
    }
}

/// Everything needed to turn a load into arrivals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrafficSpec {
    pub process: ArrivalProcess,
    pub packet_bits: u64,
    pub flow_count: usize,
    /// Reference PHY rate in bits/s used to define the load.
    pub reference_rate: f64,
    /// Each flow starts with uniform(0..=burst_max) packets at slot 0.
    pub burst_max: u32,
}

/// `λ = T_l · R / (L · N)`.
pub fn poisson_rate_for_load(load: f64, packet_bits: u64, flow_count: usize, reference_rate: f64) -> f64 {
    load * reference_rate / (packet_bits as f64 * flow_count as f64)
}

/// Mean of the two-branch hyper-exponential: `p1/λ1 + p2/λ2`.
pub fn ipp_mean_interval(lambda1: f64, lambda2: f64, p1: f64, p2: f64) -> f64 {
    p1 / lambda1 + p2 / lambda2
}

fn check_probabilities(p1: f64, p2: f64) -> Result<(), TrafficError> {
    if p1 < 0.0 || p2 < 0.0 || ((p1 + p2) - 1.0).abs() > 1e-9 {
        return Err(TrafficError::BadProbabilities(p1, p2));
    }
    Ok(())
}

/// Rates `(λ1, λ2)` with `λ1 / λ2 = ratio` whose mean interval gives load
/// `T_l = L · N / (E(X) · R)`.
pub fn ipp_scale_for_load(
    load: f64,
    ratio: f64,
    p1: f64,
    p2: f64,
    packet_bits: u64,
    flow_count: usize,
    reference_rate: f64,
) -> Result<(f64, f64), TrafficError> {
    check_probabilities(p1, p2)?;
    if !(ratio.is_finite() && ratio > 0.0 && load.is_finite() && load >= 0.0) {
        return Err(TrafficError::BadRate);
    }
    // E(X) = (p1/ratio + p2) / λ2 and E(X) = L·N / (T_l·R)
    let lambda2 = (p1 / ratio + p2) * load * reference_rate / (packet_bits as f64 * flow_count as f64);
    Ok((ratio * lambda2, lambda2))
}

impl TrafficSpec {
    pub fn for_load(
        mode: TrafficMode,
        load: f64,
        packet_bits: u64,
        flow_count: usize,
        reference_rate: f64,
        burst_max: u32,
    ) -> Result<Self, TrafficError> {
        let process = match mode {
            TrafficMode::Poisson => {
                let lambda = poisson_rate_for_load(load, packet_bits, flow_count, reference_rate);
                if !(lambda.is_finite() && lambda >= 0.0) {
                    return Err(TrafficError::BadRate);
                }
                ArrivalProcess::Poisson { lambda }
            }
            TrafficMode::Ipp { p1, ratio } => {
                let p2 = 1.0 - p1;
                let (lambda1, lambda2) = ipp_scale_for_load(load, ratio, p1, p2, packet_bits, flow_count, reference_rate)?;
                ArrivalProcess::Ipp { lambda1, lambda2, p1, p2 }
            }
        };
        Ok(Self { process, packet_bits, flow_count, reference_rate, burst_max })
    }

    /// Mean arrival rate of one flow in packets/s.
    pub fn mean_rate(&self) -> f64 {
        match self.process {
            ArrivalProcess::Poisson { lambda } => lambda,
            ArrivalProcess::Ipp { lambda1, lambda2, p1, p2 } => 1.0 / ipp_mean_interval(lambda1, lambda2, p1, p2),
        }
    }
}

/// One interval in seconds; infinite when the process never fires.
fn draw_interval(process: &ArrivalProcess, rng: &mut ChaCha8Rng) -> f64 {
    match *process {
        ArrivalProcess::Poisson { lambda } => {
            let e: f64 = Exp1.sample(rng);
            e / lambda
        }
        ArrivalProcess::Ipp { lambda1, lambda2, p1, .. } => {
            let first = rng.gen::<f64>() < p1;
            let e: f64 = Exp1.sample(rng);
            e / if first { lambda1 } else { lambda2 }
        }
    }
}

/// Arrival slots of one flow within `[0, horizon)`, non-decreasing.
///
/// Each flow draws from its own stream of the seeded generator, so the
/// arrivals of a flow do not depend on the other flows, and scaling the
/// rates up only pulls arrivals earlier.
pub fn flow_arrivals(spec: &TrafficSpec, flow_id: u32, horizon: u64, slot_seconds: f64, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::from(flow_id));
    let burst = rng.gen_range(0..=spec.burst_max);
    let mut out = Vec::new();
    if horizon == 0 {
        return out;
    }
    out.extend(std::iter::repeat_n(0, burst as usize));
    let mut t = 0.0;
    loop {
        let dt = draw_interval(&spec.process, &mut rng);
        if !dt.is_finite() {
            break;
        }
        t += dt;
        let slot = (t / slot_seconds).floor();
        if slot >= horizon as f64 {
            break;
        }
        out.push(slot as u64);
    }
    out
}

/// Arrivals for every flow id, in the given order.
pub fn generate_arrivals(spec: &TrafficSpec, flow_ids: &[u32], horizon: u64, slot_seconds: f64, seed: u64) -> Vec<Vec<u64>> {
    flow_ids.iter().map(|&id| flow_arrivals(spec, id, horizon, slot_seconds, seed)).collect()
}

/// CSV trace with one `flow,slot` row per arrival.
pub fn arrivals_csv(flow_ids: &[u32], arrivals: &[Vec<u64>]) -> String {
    let mut out = String::from("flow,slot\n");
    for (id, slots) in flow_ids.iter().zip(arrivals) {
        for s in slots {
            out.push_str(&format!("{id},{s}\n"));
        }
    }
    out
}
