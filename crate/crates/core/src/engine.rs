//! Frame-based simulation: poll queues, pick paths, schedule, then play the
//! stages out slot by slot, stamping deliveries and discarding stale
//! packets.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Flow, FlowClass, HopRef, Schedule};
use crate::optimal::{solve_exact, OptimalError, OptimalLimits};
use crate::pathsel::{select_all, PathError, PathPolicy};
use crate::radio::ConcurrencyCheck;
use crate::sched::{d2dmac_schedule, fdmac_e_schedule, SchedError, SchedulingInstance};

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("path selection failed: {0}")]
    Path(#[from] PathError),
    #[error("scheduling failed: {0}")]
    Sched(#[from] SchedError),
    #[error("exact scheduling failed: {0}")]
    Optimal(#[from] OptimalError),
    #[error("{flows} flows but {arrivals} arrival lists")]
    ArrivalMismatch { flows: usize, arrivals: usize },
    #[error("invalid frame configuration: {0}")]
    BadFrame(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrameConfig {
    pub slot_seconds: f64,
    /// Polling, computation and push time charged before every schedule.
    pub overhead_slots: u64,
    /// Packets older than this many slots are dropped from the queues.
    pub delay_threshold: u64,
    pub sim_seconds: f64,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self { slot_seconds: 5e-6, overhead_slots: 3, delay_threshold: 10_000, sim_seconds: 0.5 }
    }
}

impl FrameConfig {
    pub fn horizon_slots(&self) -> u64 {
        (self.sim_seconds / self.slot_seconds).round() as u64
    }

    fn check(&self) -> Result<(), EngineError> {
        if !(self.slot_seconds > 0.0 && self.slot_seconds.is_finite()) {
            return Err(EngineError::BadFrame("slot_seconds must be positive".into()));
        }
        if !(self.sim_seconds >= 0.0 && self.sim_seconds.is_finite()) {
            return Err(EngineError::BadFrame("sim_seconds must be non-negative".into()));
        }
        Ok(())
    }
}

/// Path selection plus scheduler.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Protocol {
    D2dmac { beta: f64 },
    /// Ordinary paths only, D2DMAC scheduling.
    Odmac,
    /// Random path per flow and frame, D2DMAC scheduling.
    Rpdmac,
    /// D2DMAC paths with β = 2, phased scheduling.
    FdmacE,
    /// Exact path choice and schedule every frame.
    Optimal,
}

impl Protocol {
    pub fn label(&self) -> &'static str {
        match self {
            Protocol::D2dmac { .. } => "d2dmac",
            Protocol::Odmac => "odmac",
            Protocol::Rpdmac => "rpdmac",
            Protocol::FdmacE => "fdmac_e",
            Protocol::Optimal => "optimal",
        }
    }

    pub fn beta(&self) -> Option<f64> {
        match self {
            Protocol::D2dmac { beta } => Some(*beta),
            Protocol::FdmacE => Some(2.0),
            _ => None,
        }
    }

    /// Paths and schedule for one frame; `flows` carry the polled demands.
    pub fn plan(
        &self,
        flows: &[Flow],
        node_count: usize,
        check: &dyn ConcurrencyCheck,
        frame_seed: u64,
        limits: &OptimalLimits,
    ) -> Result<Schedule, EngineError> {
        let policy = match *self {
            Protocol::D2dmac { beta } => PathPolicy::Beta(beta),
            Protocol::FdmacE => PathPolicy::Beta(2.0),
            Protocol::Odmac => PathPolicy::AlwaysOrdinary,
            Protocol::Rpdmac => PathPolicy::RandomPerFlow { seed: frame_seed },
            Protocol::Optimal => return Ok(solve_exact(flows, node_count, check, limits)?.schedule),
        };
        let busy: Vec<Flow> = flows.iter().filter(|f| f.demand > 0).cloned().collect();
        let choices = select_all(&busy, policy)?;
        let inst = SchedulingInstance::new(&busy, &choices, node_count)?;
        Ok(match self {
            Protocol::FdmacE => fdmac_e_schedule(&inst, check)?,
            _ => d2dmac_schedule(&inst, check)?,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PacketRecord {
    pub flow: u32,
    pub arrival_slot: u64,
    pub delivery_slot: Option<u64>,
    pub discarded: bool,
}

impl PacketRecord {
    pub fn delay(&self) -> Option<u64> {
        self.delivery_slot.map(|d| d - self.arrival_slot)
    }
}

/// What happened in one frame, for observers.
#[derive(Clone, Debug)]
pub struct FrameTrace<'a> {
    pub index: u64,
    /// Poll time; the first stage starts `overhead_slots` later.
    pub poll_slot: u64,
    /// Flows with their polled demands.
    pub flows: &'a [Flow],
    pub schedule: &'a Schedule,
    pub node_count: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MetricsReport {
    /// Mean delay of delivered packets, in slots.
    pub avg_delay: Option<f64>,
    /// Delivered packets with delay within the threshold.
    pub network_throughput: u64,
    pub flow_delay_bw: Option<f64>,
    pub flow_delay_in: Option<f64>,
    /// Mean per-flow throughput over flows between WNs.
    pub flow_throughput_bw: Option<f64>,
    pub flow_throughput_in: Option<f64>,
    pub arrivals: u64,
    pub delivered: u64,
    pub discarded: u64,
    /// Arrived but neither delivered nor discarded by the end.
    pub pending: u64,
}

fn mean(sum: u64, count: u64) -> Option<f64> {
    (count > 0).then(|| sum as f64 / count as f64)
}

/// Evaluates the delay and throughput metrics over a packet log.
pub fn compute_metrics(records: &[PacketRecord], flows: &[Flow], threshold: u64) -> MetricsReport {
    let class: BTreeMap<u32, FlowClass> = flows.iter().map(|f| (f.id, f.class)).collect();
    let members = |c: FlowClass| flows.iter().filter(|f| f.class == c).count() as u64;

    // [all, between WNs, Internet] x (delay sum, delivered, within threshold)
    let mut acc = [(0u64, 0u64, 0u64); 3];
    let mut report = MetricsReport { arrivals: records.len() as u64, ..MetricsReport::default() };
    for r in records {
        if r.discarded {
            report.discarded += 1;
            continue;
        }
        let Some(delay) = r.delay() else {
            report.pending += 1;
            continue;
        };
        let slot = match class.get(&r.flow) {
            Some(FlowClass::BetweenWns) => Some(1),
            Some(FlowClass::Internet) => Some(2),
            None => None,
        };
        for i in std::iter::once(0).chain(slot) {
            acc[i].0 += delay;
            acc[i].1 += 1;
            acc[i].2 += u64::from(delay <= threshold);
        }
    }
    report.delivered = acc[0].1;
    report.avg_delay = mean(acc[0].0, acc[0].1);
    report.network_throughput = acc[0].2;
    report.flow_delay_bw = mean(acc[1].0, acc[1].1);
    report.flow_delay_in = mean(acc[2].0, acc[2].1);
    report.flow_throughput_bw = mean(acc[1].2, members(FlowClass::BetweenWns));
    report.flow_throughput_in = mean(acc[2].2, members(FlowClass::Internet));
    report
}

#[derive(Clone, Debug)]
pub struct SimOutput {
    pub report: MetricsReport,
    pub records: Vec<PacketRecord>,
    pub frames: u64,
}

/// Per-frame seed for randomised path selection.
fn frame_seed(seed: u64, frame: u64) -> u64 {
    let mut z = seed ^ frame.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Everything a run needs besides the protocol.
pub struct SimSetup<'a> {
    pub flows: &'a [Flow],
    pub node_count: usize,
    /// Arrival slots per flow, parallel to `flows`, non-decreasing.
    pub arrivals: &'a [Vec<u64>],
    pub check: &'a dyn ConcurrencyCheck,
    pub frame: FrameConfig,
    pub limits: OptimalLimits,
    pub seed: u64,
}

pub fn run_simulation(setup: &SimSetup<'_>, protocol: Protocol) -> Result<SimOutput, EngineError> {
    run_simulation_with(setup, protocol, &mut |_| {})
}

/// Runs the frame loop, calling `observer` with every computed schedule.
pub fn run_simulation_with(
    setup: &SimSetup<'_>,
    protocol: Protocol,
    observer: &mut dyn FnMut(&FrameTrace<'_>),
) -> Result<SimOutput, EngineError> {
    let SimSetup { flows, node_count, arrivals, check, frame, ref limits, seed } = *setup;
    frame.check()?;
    if flows.len() != arrivals.len() {
        return Err(EngineError::ArrivalMismatch { flows: flows.len(), arrivals: arrivals.len() });
    }
    let horizon = frame.horizon_slots();

    // records grouped by flow, in arrival order
    let mut records: Vec<PacketRecord> = Vec::with_capacity(arrivals.iter().map(Vec::len).sum());
    let mut first_record = Vec::with_capacity(flows.len());
    for (f, slots) in flows.iter().zip(arrivals) {
        first_record.push(records.len());
        records.extend(slots.iter().filter(|&&s| s < horizon).map(|&s| PacketRecord {
            flow: f.id,
            arrival_slot: s,
            delivery_slot: None,
            discarded: false,
        }));
    }
    let arrived_count: Vec<usize> = arrivals.iter().map(|a| a.iter().filter(|&&s| s < horizon).count()).collect();

    let mut admitted = vec![0usize; flows.len()];
    let mut queues: Vec<VecDeque<usize>> = vec![VecDeque::new(); flows.len()];
    let mut demand_flows: Vec<Flow> = flows.to_vec();
    let index_of: BTreeMap<u32, usize> = flows.iter().enumerate().map(|(i, f)| (f.id, i)).collect();
    let mut t = 0u64;
    let mut frames = 0u64;

    while t < horizon {
        for i in 0..flows.len() {
            while admitted[i] < arrived_count[i] && records[first_record[i] + admitted[i]].arrival_slot <= t {
                queues[i].push_back(first_record[i] + admitted[i]);
                admitted[i] += 1;
            }
            while let Some(&p) = queues[i].front() {
                if t - records[p].arrival_slot <= frame.delay_threshold {
                    break;
                }
                records[p].discarded = true;
                queues[i].pop_front();
            }
            demand_flows[i].demand = queues[i].len() as u64;
        }

        if queues.iter().all(VecDeque::is_empty) {
            let next = (0..flows.len())
                .filter(|&i| admitted[i] < arrived_count[i])
                .map(|i| records[first_record[i] + admitted[i]].arrival_slot)
                .min();
            match next {
                Some(n) => t = n.max(t + frame.overhead_slots.max(1)),
                None => break,
            }
            continue;
        }

        let schedule = protocol.plan(&demand_flows, node_count, check, frame_seed(seed, frames), limits)?;
        observer(&FrameTrace { index: frames, poll_slot: t, flows: &demand_flows, schedule: &schedule, node_count });

        let mut cursor = t + frame.overhead_slots;
        for stage in &schedule.stages {
            for l in &stage.links {
                let i = index_of[&l.flow];
                let last = match l.hop {
                    HopRef::Direct => true,
                    HopRef::Ordinary(j) => j + 1 == flows[i].ordinary_path.len(),
                };
                if !last {
                    continue;
                }
                let rate = u64::from(l.link.rate);
                for q in 0..demand_flows[i].demand {
                    let p = queues[i].pop_front().expect("polled packets are queued");
                    let done = cursor + q / rate + 1;
                    if done <= horizon {
                        records[p].delivery_slot = Some(done);
                    }
                }
            }
            cursor += stage.slots;
        }
        frames += 1;
        t = cursor.max(t + 1);
    }

    let report = compute_metrics(&records, flows, frame.delay_threshold);
    Ok(SimOutput { report, records, frames })
}
