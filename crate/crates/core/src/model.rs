//! Core domain types: nodes, directional links, flows and schedules.
//!
//! Rates are integer packets per slot and demands are integer packet
//! counts, so every schedule quantity (hop weights, stage lengths, totals)
//! is exact integer arithmetic.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Identifier of a node. Node ids index position tables, so a deployment
/// with `n` nodes uses ids `0..n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Ap,
    Wn,
    /// An AP with a wired Internet uplink. Hosts the central controller.
    Gateway,
}

impl NodeKind {
    /// Gateways are APs too.
    pub fn is_ap(self) -> bool {
        matches!(self, NodeKind::Ap | NodeKind::Gateway)
    }
}

/// Planar position in meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub position: Point,
    /// Serving AP, set for WNs only.
    pub associated_ap: Option<NodeId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    Access,
    Backhaul,
    Direct,
}

/// A directional transmission from `tx` to `rx`. A rate of zero encodes an
/// unavailable (blocked) link.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DirectionalLink {
    pub tx: NodeId,
    pub rx: NodeId,
    pub rate: u32,
    pub kind: LinkKind,
}

impl DirectionalLink {
    pub fn new(tx: NodeId, rx: NodeId, rate: u32, kind: LinkKind) -> Self {
        debug_assert!(tx != rx, "link endpoints must differ");
        Self { tx, rx, rate, kind }
    }

    pub fn is_available(&self) -> bool {
        self.rate > 0
    }

    pub fn touches(&self, node: NodeId) -> bool {
        self.tx == node || self.rx == node
    }
}

impl fmt::Display for DirectionalLink {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}@{}", self.tx, self.rx, self.rate)
    }
}

/// True iff the two links share at least one endpoint. Nodes are half-duplex
/// with a single connection at a time, so adjacent links never share a stage.
pub fn are_adjacent(a: &DirectionalLink, b: &DirectionalLink) -> bool {
    a.touches(b.tx) || a.touches(b.rx)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("link has rate 0 and cannot carry traffic")]
    UnavailableLink,
}

/// Slots needed to push `demand` packets over a link of `rate` packets/slot.
pub fn hop_weight(demand: u64, rate: u32) -> Result<u64, ModelError> {
    if rate == 0 {
        return Err(ModelError::UnavailableLink);
    }
    Ok(demand.div_ceil(u64::from(rate)))
}

/// Traffic class used by the per-class flow metrics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowClass {
    /// Both endpoints are wireless nodes.
    BetweenWns,
    /// One endpoint is the gateway.
    Internet,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Flow {
    pub id: u32,
    pub src: NodeId,
    pub dst: NodeId,
    pub class: FlowClass,
    /// Chained hops through the APs. Empty when the flow has no multi-hop
    /// route (a WN talking to the gateway it is associated with).
    pub ordinary_path: Vec<DirectionalLink>,
    pub direct_link: Option<DirectionalLink>,
    /// Packets to move in the current frame.
    pub demand: u64,
}

impl Flow {
    /// Hop number of the ordinary path; 1 when there is none.
    pub fn hop_count(&self) -> usize {
        self.ordinary_path.len().max(1)
    }

    pub fn has_ordinary(&self) -> bool {
        !self.ordinary_path.is_empty() && self.ordinary_path.iter().all(|l| l.is_available())
    }

    pub fn has_direct(&self) -> bool {
        self.direct_link.is_some_and(|l| l.is_available())
    }

    pub fn with_demand(&self, demand: u64) -> Flow {
        Flow { demand, ..self.clone() }
    }

    /// Checks hop chaining and endpoint consistency.
    pub fn check_chained(&self) -> bool {
        let chained = self.ordinary_path.windows(2).all(|w| w[0].rx == w[1].tx);
        let ends = match (self.ordinary_path.first(), self.ordinary_path.last()) {
            (Some(first), Some(last)) => first.tx != last.rx,
            _ => true,
        };
        chained && ends
    }
}

/// Which hop of a flow a scheduled link carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HopRef {
    /// Zero-based hop index on the ordinary path.
    Ordinary(usize),
    Direct,
}

impl fmt::Display for HopRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HopRef::Ordinary(j) => write!(f, "h{}", j + 1),
            HopRef::Direct => write!(f, "d"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScheduledLink {
    pub flow: u32,
    pub hop: HopRef,
    pub link: DirectionalLink,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Stage {
    pub links: Vec<ScheduledLink>,
    pub slots: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Schedule {
    pub stages: Vec<Stage>,
}

impl Schedule {
    pub fn total_slots(&self) -> u64 {
        self.stages.iter().map(|s| s.slots).sum()
    }

    pub fn link_count(&self) -> usize {
        self.stages.iter().map(|s| s.links.len()).sum()
    }

    /// Plain-text dump, one stage per line: `index<TAB>slots<TAB>links`.
    /// Each link reads `flow:hop:tx->rx@rate`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (k, stage) in self.stages.iter().enumerate() {
            let links: Vec<String> = stage
                .links
                .iter()
                .map(|l| format!("{}:{}:{}", l.flow, l.hop, l.link))
                .collect();
            out.push_str(&format!("{}\t{}\t{}\n", k + 1, stage.slots, links.join(" ")));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// A scheduled link does not belong to its flow's paths.
    UnknownLink { stage: usize, flow: u32, hop: HopRef },
    /// Hop `hop` of a flow with demand is never served, or served too briefly.
    DemandNotCovered { flow: u32, hop: HopRef },
    /// A hop is activated more than once.
    RepeatedActivation { flow: u32, hop: HopRef },
    /// Both the direct link and ordinary hops of one flow are used.
    MixedPaths { flow: u32 },
    /// A flow without demand has scheduled links.
    UnexpectedTraffic { flow: u32 },
    Adjacent { stage: usize, first: (u32, HopRef), second: (u32, HopRef) },
    SamePath { stage: usize, flow: u32 },
    HopOrder { flow: u32, hop: usize },
    StageTooLarge { stage: usize, links: usize, bound: usize },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Structural check of a schedule against flows and demands: demand
/// coverage, single activation, adjacency, same-path exclusivity, hop
/// ordering and the `floor(n/2)` links-per-stage bound.
pub fn validate_schedule(schedule: &Schedule, flows: &[Flow], node_count: usize) -> ValidationReport {
    let mut violations = Vec::new();
    let by_id: BTreeMap<u32, &Flow> = flows.iter().map(|f| (f.id, f)).collect();
    let bound = node_count / 2;

    // (flow, hop) -> list of (stage index, slots)
    let mut served: BTreeMap<(u32, HopRef), Vec<(usize, u64)>> = BTreeMap::new();

    for (k, stage) in schedule.stages.iter().enumerate() {
        if stage.links.len() > bound {
            violations.push(Violation::StageTooLarge { stage: k, links: stage.links.len(), bound });
        }
        let mut flows_here = BTreeSet::new();
        for (x, a) in stage.links.iter().enumerate() {
            let known = by_id.get(&a.flow).and_then(|f| match a.hop {
                HopRef::Ordinary(j) => f.ordinary_path.get(j).copied(),
                HopRef::Direct => f.direct_link,
            });
            if known != Some(a.link) {
                violations.push(Violation::UnknownLink { stage: k, flow: a.flow, hop: a.hop });
            }
            if !flows_here.insert(a.flow) {
                violations.push(Violation::SamePath { stage: k, flow: a.flow });
            }
            for b in &stage.links[x + 1..] {
                if are_adjacent(&a.link, &b.link) {
                    violations.push(Violation::Adjacent {
                        stage: k,
                        first: (a.flow, a.hop),
                        second: (b.flow, b.hop),
                    });
                }
            }
            served.entry((a.flow, a.hop)).or_default().push((k, stage.slots));
        }
    }

    for flow in flows {
        let mine: Vec<_> = served.range((flow.id, HopRef::Ordinary(0))..=(flow.id, HopRef::Direct)).collect();
        if flow.demand == 0 {
            if !mine.is_empty() {
                violations.push(Violation::UnexpectedTraffic { flow: flow.id });
            }
            continue;
        }
        for (&(_, hop), uses) in &mine {
            if uses.len() > 1 {
                violations.push(Violation::RepeatedActivation { flow: flow.id, hop });
            }
        }
        let direct_used = served.contains_key(&(flow.id, HopRef::Direct));
        let ordinary_used = mine.iter().any(|(&(_, h), _)| matches!(h, HopRef::Ordinary(_)));
        if direct_used && ordinary_used {
            violations.push(Violation::MixedPaths { flow: flow.id });
        }

        let covers = |hop: HopRef, rate: u32| {
            served
                .get(&(flow.id, hop))
                .is_some_and(|uses| uses.iter().map(|&(_, slots)| slots * u64::from(rate)).sum::<u64>() >= flow.demand)
        };

        if direct_used && !ordinary_used {
            let rate = flow.direct_link.map_or(0, |l| l.rate);
            if !covers(HopRef::Direct, rate) {
                violations.push(Violation::DemandNotCovered { flow: flow.id, hop: HopRef::Direct });
            }
        } else {
            if flow.ordinary_path.is_empty() {
                violations.push(Violation::DemandNotCovered { flow: flow.id, hop: HopRef::Direct });
            }
            for (j, link) in flow.ordinary_path.iter().enumerate() {
                if !covers(HopRef::Ordinary(j), link.rate) {
                    violations.push(Violation::DemandNotCovered { flow: flow.id, hop: HopRef::Ordinary(j) });
                }
            }
            for j in 0..flow.ordinary_path.len().saturating_sub(1) {
                let first = |h| served.get(&(flow.id, HopRef::Ordinary(h))).map(|u: &Vec<(usize, u64)>| u[0].0);
                if let (Some(a), Some(b)) = (first(j), first(j + 1)) {
                    if a >= b {
                        violations.push(Violation::HopOrder { flow: flow.id, hop: j + 1 });
                    }
                }
            }
        }
    }

    ValidationReport { violations }
}
