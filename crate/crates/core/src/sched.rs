//! Heuristic stage schedulers.
//!
//! [`d2dmac_schedule`] fills stages one at a time with the first
//! unscheduled hop of each path, heaviest first, skipping hops that touch a
//! node already busy in the stage or that break the concurrency check.
//! [`fdmac_e_schedule`] schedules uplink/direct links, backhaul links and
//! downlink links in three separate phases instead.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{hop_weight, DirectionalLink, Flow, HopRef, LinkKind, NodeId, Schedule, ScheduledLink, Stage};
use crate::pathsel::PathChoice;
use crate::radio::ConcurrencyCheck;

#[derive(Debug, Error, PartialEq)]
pub enum SchedError {
    #[error("flow {flow} hop {hop} uses a link with rate 0")]
    BlockedHop { flow: u32, hop: HopRef },
    #[error("flow {0} has demand but no path choice")]
    MissingChoice(u32),
    #[error("flow {0} chose a path it does not have")]
    MissingPath(u32),
    #[error("flow {flow} hop {hop} cannot be scheduled even alone in a stage")]
    Unschedulable { flow: u32, hop: HopRef },
    #[error("a stage needs at least two nodes")]
    TooFewNodes,
}

/// One hop of a chosen path together with its weight (slots needed).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PlannedHop {
    pub flow: u32,
    pub hop: HopRef,
    pub link: DirectionalLink,
    pub weight: u64,
}

impl PlannedHop {
    fn scheduled(&self) -> ScheduledLink {
        ScheduledLink { flow: self.flow, hop: self.hop, link: self.link }
    }
}

/// Chosen paths of all flows with demand, ordered by flow id.
#[derive(Clone, Debug, PartialEq)]
pub struct SchedulingInstance {
    pub paths: Vec<Vec<PlannedHop>>,
    pub node_count: usize,
}

/// Hops of `flow` along the chosen path, weighted by its demand.
pub fn plan_path(flow: &Flow, choice: PathChoice) -> Result<Vec<PlannedHop>, SchedError> {
    let plan = |hop: HopRef, link: DirectionalLink| {
        let weight = hop_weight(flow.demand, link.rate).map_err(|_| SchedError::BlockedHop { flow: flow.id, hop })?;
        Ok(PlannedHop { flow: flow.id, hop, link, weight })
    };
    match choice {
        PathChoice::Direct => {
            let link = flow.direct_link.ok_or(SchedError::MissingPath(flow.id))?;
            Ok(vec![plan(HopRef::Direct, link)?])
        }
        PathChoice::Ordinary => {
            if flow.ordinary_path.is_empty() {
                return Err(SchedError::MissingPath(flow.id));
            }
            flow.ordinary_path.iter().enumerate().map(|(j, l)| plan(HopRef::Ordinary(j), *l)).collect()
        }
    }
}

impl SchedulingInstance {
    /// Flows without demand are left out.
    pub fn new(flows: &[Flow], choices: &BTreeMap<u32, PathChoice>, node_count: usize) -> Result<Self, SchedError> {
        let mut sorted: Vec<&Flow> = flows.iter().filter(|f| f.demand > 0).collect();
        sorted.sort_by_key(|f| f.id);
        let paths = sorted
            .into_iter()
            .map(|f| {
                let choice = *choices.get(&f.id).ok_or(SchedError::MissingChoice(f.id))?;
                plan_path(f, choice)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { paths, node_count })
    }

    pub fn hop_total(&self) -> usize {
        self.paths.iter().map(Vec::len).sum()
    }
}

/// Stage-filling loop shared by D2DMAC and greedy colouring. Each inner
/// vector is a path whose hops must go to strictly increasing stages.
fn fill_stages(paths: &[Vec<PlannedHop>], node_count: usize, check: &dyn ConcurrencyCheck) -> Result<Vec<Stage>, SchedError> {
    let mut remaining: usize = paths.iter().map(Vec::len).sum();
    if remaining == 0 {
        return Ok(Vec::new());
    }
    let bound = node_count / 2;
    if bound == 0 {
        return Err(SchedError::TooFewNodes);
    }

    let mut next = vec![0usize; paths.len()];
    let mut stages = Vec::new();
    let mut links: Vec<DirectionalLink> = Vec::with_capacity(bound);
    let mut busy: Vec<NodeId> = Vec::with_capacity(2 * bound);

    while remaining > 0 {
        let mut visited: Vec<bool> = paths.iter().zip(&next).map(|(p, &n)| n >= p.len()).collect();
        let mut stage = Stage::default();
        links.clear();
        busy.clear();

        while stage.links.len() < bound {
            // heaviest first hop among unvisited paths, lowest path index on ties
            let Some(i) = (0..paths.len())
                .filter(|&i| !visited[i])
                .max_by(|&a, &b| paths[a][next[a]].weight.cmp(&paths[b][next[b]].weight).then(b.cmp(&a)))
            else {
                break;
            };
            let hop = paths[i][next[i]];
            if !busy.contains(&hop.link.tx) && !busy.contains(&hop.link.rx) {
                links.push(hop.link);
                if check.admits(&links) {
                    busy.push(hop.link.tx);
                    busy.push(hop.link.rx);
                    stage.links.push(hop.scheduled());
                    stage.slots = stage.slots.max(hop.weight);
                    next[i] += 1;
                    remaining -= 1;
                } else {
                    links.pop();
                }
            }
            visited[i] = true;
        }

        if stage.links.is_empty() {
            // nothing fits even alone: the heaviest pending hop is hopeless
            let (i, _) = paths.iter().enumerate().find(|(i, p)| next[*i] < p.len()).expect("remaining > 0");
            let hop = paths[i][next[i]];
            return Err(SchedError::Unschedulable { flow: hop.flow, hop: hop.hop });
        }
        stages.push(stage);
    }
    Ok(stages)
}

/// D2DMAC transmission scheduling over the chosen paths.
pub fn d2dmac_schedule(inst: &SchedulingInstance, check: &dyn ConcurrencyCheck) -> Result<Schedule, SchedError> {
    Ok(Schedule { stages: fill_stages(&inst.paths, inst.node_count, check)? })
}

/// Greedy colouring of a flat link set with no ordering between links.
pub fn greedy_coloring(
    links: &[PlannedHop],
    node_count: usize,
    check: &dyn ConcurrencyCheck,
) -> Result<Vec<Stage>, SchedError> {
    let singletons: Vec<Vec<PlannedHop>> = links.iter().map(|h| vec![*h]).collect();
    fill_stages(&singletons, node_count, check)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Up,
    Backhaul,
    Down,
}

fn phase_of(hop: &PlannedHop) -> Phase {
    match (hop.hop, hop.link.kind) {
        (HopRef::Direct, _) => Phase::Up,
        (_, LinkKind::Backhaul) => Phase::Backhaul,
        (HopRef::Ordinary(0), _) => Phase::Up,
        _ => Phase::Down,
    }
}

/// FDMAC-E: greedy colouring of WN-to-AP access and direct links, then one
/// backhaul link per stage in flow order, then greedy colouring of
/// AP-to-WN access links.
pub fn fdmac_e_schedule(inst: &SchedulingInstance, check: &dyn ConcurrencyCheck) -> Result<Schedule, SchedError> {
    let hops = || inst.paths.iter().flatten();
    let up: Vec<PlannedHop> = hops().filter(|h| phase_of(h) == Phase::Up).copied().collect();
    let down: Vec<PlannedHop> = hops().filter(|h| phase_of(h) == Phase::Down).copied().collect();

    let mut stages = greedy_coloring(&up, inst.node_count, check)?;
    for hop in hops().filter(|h| phase_of(h) == Phase::Backhaul) {
        if !check.admits(&[hop.link]) {
            return Err(SchedError::Unschedulable { flow: hop.flow, hop: hop.hop });
        }
        stages.push(Stage { links: vec![hop.scheduled()], slots: hop.weight });
    }
    stages.extend(greedy_coloring(&down, inst.node_count, check)?);
    Ok(Schedule { stages })
}
