//! Exact minimum-slot scheduling for small instances.
//!
//! The outer search walks path assignments in order of a lower bound and
//! stops once the bound reaches the best total found. For one assignment,
//! a memoised search over "next hop of every path" states tries every
//! admissible stage built from first unscheduled hops.

use std::collections::{BTreeMap, HashMap};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::model::{DirectionalLink, Flow, NodeId, Schedule, Stage};
use crate::pathsel::PathChoice;
use crate::radio::ConcurrencyCheck;
use crate::sched::{d2dmac_schedule, plan_path, PlannedHop, SchedError, SchedulingInstance};

#[derive(Debug, Error, PartialEq)]
pub enum OptimalError {
    #[error("instance exceeds solver limits: {0}")]
    LimitExceeded(String),
    #[error("flow {0} has demand but no usable path")]
    NoUsablePath(u32),
    #[error(transparent)]
    Sched(#[from] SchedError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimalLimits {
    pub max_flows: usize,
    /// Ceiling on the hop total of the longer path option of every flow.
    pub max_total_hops: usize,
    pub time_budget: Option<Duration>,
}

impl Default for OptimalLimits {
    fn default() -> Self {
        Self { max_flows: 12, max_total_hops: 36, time_budget: Some(Duration::from_secs(30)) }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactSolution {
    pub total_slots: u64,
    pub schedule: Schedule,
    pub choices: BTreeMap<u32, PathChoice>,
    /// False when the time budget ran out before the search finished.
    pub optimal: bool,
    pub assignments_searched: u64,
    pub states_expanded: u64,
}

/// Lower bound on the slots needed to finish `paths` from `next`: the
/// longest remaining chain, and the heaviest node load (links sharing a
/// node never share a stage).
fn lower_bound(paths: &[Vec<PlannedHop>], next: &[u8], loads: &mut HashMap<NodeId, u64>) -> u64 {
    loads.clear();
    let mut chain = 0;
    for (p, &n) in paths.iter().zip(next) {
        let rest = &p[n as usize..];
        chain = chain.max(rest.iter().map(|h| h.weight).sum());
        for h in rest {
            *loads.entry(h.link.tx).or_default() += h.weight;
            *loads.entry(h.link.rx).or_default() += h.weight;
        }
    }
    chain.max(loads.values().copied().max().unwrap_or(0))
}

struct Search<'a> {
    paths: &'a [Vec<PlannedHop>],
    bound: usize,
    check: &'a dyn ConcurrencyCheck,
    deadline: Option<Instant>,
    memo: HashMap<Vec<u8>, (u64, u64)>,
    loads: HashMap<NodeId, u64>,
    expanded: u64,
    timed_out: bool,
}

impl Search<'_> {
    fn out_of_time(&mut self) -> bool {
        if !self.timed_out && self.expanded.is_multiple_of(256) {
            if let Some(d) = self.deadline {
                self.timed_out = Instant::now() >= d;
            }
        }
        self.timed_out
    }

    /// Minimum slots to finish from `state`; the memo records the stage
    /// (as a bit mask over paths) that achieves it.
    fn solve(&mut self, state: &[u8]) -> u64 {
        if let Some(&(cost, _)) = self.memo.get(state) {
            return cost;
        }
        let candidates: Vec<usize> = (0..self.paths.len()).filter(|&i| (state[i] as usize) < self.paths[i].len()).collect();
        if candidates.is_empty() {
            return 0;
        }
        self.expanded += 1;
        if self.out_of_time() {
            return u64::MAX;
        }

        let mut stages = Vec::new();
        let mut chosen = Vec::new();
        let mut links = Vec::new();
        self.collect_stages(state, &candidates, 0, &mut chosen, &mut links, &mut stages);

        let mut best = (u64::MAX, 0u64);
        let mut next = state.to_vec();
        // cheap stages first so the local bound bites early
        stages.sort_by_key(|&(cost, mask)| (cost, mask));
        for (cost, mask) in stages {
            for &i in &candidates {
                next[i] = state[i] + u8::from(mask >> i & 1 == 1);
            }
            let mut loads = std::mem::take(&mut self.loads);
            let lb = lower_bound(self.paths, &next, &mut loads);
            self.loads = loads;
            if cost + lb >= best.0 {
                continue;
            }
            let rest = self.solve(&next);
            if self.timed_out {
                return u64::MAX;
            }
            if cost.saturating_add(rest) < best.0 {
                best = (cost + rest, mask);
            }
        }
        self.memo.insert(state.to_vec(), best);
        best.0
    }

    fn hop(&self, state: &[u8], i: usize) -> PlannedHop {
        self.paths[i][state[i] as usize]
    }

    /// Enumerates admissible, undominated stages over `candidates[from..]`.
    fn collect_stages(
        &self,
        state: &[u8],
        candidates: &[usize],
        from: usize,
        chosen: &mut Vec<usize>,
        links: &mut Vec<DirectionalLink>,
        out: &mut Vec<(u64, u64)>,
    ) {
        if !chosen.is_empty() && !self.dominated(state, candidates, chosen, links) {
            let cost = chosen.iter().map(|&i| self.hop(state, i).weight).max().unwrap_or(0);
            out.push((cost, chosen.iter().fold(0u64, |m, &i| m | 1 << i)));
        }
        if chosen.len() == self.bound {
            return;
        }
        for (pos, &i) in candidates.iter().enumerate().skip(from) {
            let link = self.hop(state, i).link;
            if links.iter().any(|l| l.touches(link.tx) || l.touches(link.rx)) {
                continue;
            }
            links.push(link);
            // removing links never hurts SINR, so failing sets stay failing when grown
            if self.check.admits(links) {
                chosen.push(i);
                self.collect_stages(state, candidates, pos + 1, chosen, links, out);
                chosen.pop();
            }
            links.pop();
        }
    }

    /// A stage is dominated when another first hop, no heavier than the
    /// stage, could join it: the larger stage costs the same and leaves
    /// less work.
    fn dominated(&self, state: &[u8], candidates: &[usize], chosen: &[usize], links: &mut Vec<DirectionalLink>) -> bool {
        if chosen.len() == self.bound {
            return false;
        }
        let cost = chosen.iter().map(|&i| self.hop(state, i).weight).max().unwrap_or(0);
        for &i in candidates {
            if chosen.contains(&i) {
                continue;
            }
            let hop = self.hop(state, i);
            if hop.weight > cost || links.iter().any(|l| l.touches(hop.link.tx) || l.touches(hop.link.rx)) {
                continue;
            }
            links.push(hop.link);
            let fits = self.check.admits(links);
            links.pop();
            if fits {
                return true;
            }
        }
        false
    }

    fn witness(&self, start: &[u8]) -> Schedule {
        let mut state = start.to_vec();
        let mut stages = Vec::new();
        while let Some(&(_, mask)) = self.memo.get(&state) {
            let mut stage = Stage::default();
            for i in 0..self.paths.len() {
                if mask >> i & 1 == 1 {
                    let hop = self.hop(&state, i);
                    stage.links.push(crate::model::ScheduledLink { flow: hop.flow, hop: hop.hop, link: hop.link });
                    stage.slots = stage.slots.max(hop.weight);
                    state[i] += 1;
                }
            }
            stages.push(stage);
        }
        Schedule { stages }
    }
}

/// Usable path options of a flow, direct first.
fn options(flow: &Flow) -> Result<Vec<(PathChoice, Vec<PlannedHop>)>, OptimalError> {
    let mut out = Vec::new();
    if flow.has_direct() {
        out.push((PathChoice::Direct, plan_path(flow, PathChoice::Direct)?));
    }
    if flow.has_ordinary() {
        out.push((PathChoice::Ordinary, plan_path(flow, PathChoice::Ordinary)?));
    }
    if out.is_empty() {
        return Err(OptimalError::NoUsablePath(flow.id));
    }
    Ok(out)
}

/// Minimum total slots over every path assignment and every valid stage
/// sequence, with a witness schedule.
pub fn solve_exact(
    flows: &[Flow],
    node_count: usize,
    check: &dyn ConcurrencyCheck,
    limits: &OptimalLimits,
) -> Result<ExactSolution, OptimalError> {
    let started = Instant::now();
    let mut active: Vec<&Flow> = flows.iter().filter(|f| f.demand > 0).collect();
    active.sort_by_key(|f| f.id);
    if active.len() > limits.max_flows.min(64) {
        return Err(OptimalError::LimitExceeded(format!(
            "{} flows with demand, limit {}",
            active.len(),
            limits.max_flows.min(64)
        )));
    }
    let hop_total: usize = active.iter().map(|f| f.hop_count()).sum();
    if hop_total > limits.max_total_hops {
        return Err(OptimalError::LimitExceeded(format!("{hop_total} hops, limit {}", limits.max_total_hops)));
    }
    if active.is_empty() {
        return Ok(ExactSolution {
            total_slots: 0,
            schedule: Schedule::default(),
            choices: BTreeMap::new(),
            optimal: true,
            assignments_searched: 0,
            states_expanded: 0,
        });
    }
    if node_count < 2 {
        return Err(SchedError::TooFewNodes.into());
    }
    let opts: Vec<Vec<(PathChoice, Vec<PlannedHop>)>> = active.iter().map(|f| options(f)).collect::<Result<_, _>>()?;

    // every assignment with its lower bound, cheapest bound first
    let mut assignments: Vec<(u64, Vec<usize>)> = Vec::new();
    let mut pick = vec![0usize; opts.len()];
    let mut loads = HashMap::new();
    loop {
        let paths: Vec<Vec<PlannedHop>> = pick.iter().zip(&opts).map(|(&p, o)| o[p].1.clone()).collect();
        let lb = lower_bound(&paths, &vec![0; paths.len()], &mut loads);
        assignments.push((lb, pick.clone()));
        let mut x = 0;
        while x < pick.len() && pick[x] + 1 == opts[x].len() {
            pick[x] = 0;
            x += 1;
        }
        if x == pick.len() {
            break;
        }
        pick[x] += 1;
    }
    assignments.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)));

    let deadline = limits.time_budget.map(|b| started + b);
    let mut best: Option<(u64, Schedule, Vec<usize>)> = None;
    let mut optimal = true;
    let mut searched = 0;
    let mut expanded = 0;

    for (lb, pick) in assignments {
        if best.as_ref().is_some_and(|b| lb >= b.0) {
            break;
        }
        let paths: Vec<Vec<PlannedHop>> = pick.iter().zip(&opts).map(|(&p, o)| o[p].1.clone()).collect();
        let inst = SchedulingInstance { paths, node_count };
        // the heuristic gives a cheap incumbent and a fallback if time runs out
        if let Ok(h) = d2dmac_schedule(&inst, check) {
            if best.as_ref().is_none_or(|b| h.total_slots() < b.0) {
                best = Some((h.total_slots(), h, pick.clone()));
            }
        }
        if best.as_ref().is_some_and(|b| lb >= b.0) {
            continue;
        }
        searched += 1;
        let mut search = Search {
            paths: &inst.paths,
            bound: node_count / 2,
            check,
            deadline,
            memo: HashMap::new(),
            loads: HashMap::new(),
            expanded: 0,
            timed_out: false,
        };
        let start = vec![0u8; inst.paths.len()];
        let total = search.solve(&start);
        expanded += search.expanded;
        if search.timed_out {
            optimal = false;
            break;
        }
        if total < u64::MAX && best.as_ref().is_none_or(|b| total < b.0) {
            best = Some((total, search.witness(&start), pick));
        }
    }

    let Some((total_slots, schedule, pick)) = best else {
        // no incumbent at all: only possible if every stage is rejected
        let f = active[0];
        return Err(SchedError::Unschedulable { flow: f.id, hop: opts[0][0].1[0].hop }.into());
    };
    let choices = active.iter().zip(pick.iter().zip(&opts)).map(|(f, (&p, o))| (f.id, o[p].0)).collect();
    Ok(ExactSolution { total_slots, schedule, choices, optimal, assignments_searched: searched, states_expanded: expanded })
}
