//! Deployments: AP grid, WN placement and association, backhaul routing,
//! rate assignment and flow construction.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DirectionalLink, Flow, FlowClass, LinkKind, Node, NodeId, NodeKind, Point};

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("AP count {0} is not a positive perfect square")]
    NotASquare(usize),
    #[error("node {0} is not an AP")]
    NotAnAp(NodeId),
    #[error("no backhaul route from {0} to {1}")]
    Disconnected(NodeId, NodeId),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("WN {0} has no associated AP")]
    Unassociated(NodeId),
    #[error("flow endpoints must differ")]
    SelfFlow,
    #[error("deployment has no AP")]
    NoAp,
}

/// Shape of the AP-to-AP backhaul mesh.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackhaulTopology {
    /// 4-neighbour adjacency on the AP grid.
    #[default]
    Grid,
    /// APs joined in id order, closing the loop.
    Ring,
    /// Every AP linked to the gateway.
    Star,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Deployment {
    pub area_side: f64,
    pub nodes: Vec<Node>,
    /// Undirected AP pairs; each is usable in both directions.
    pub backhaul_edges: Vec<(NodeId, NodeId)>,
    pub gateway: NodeId,
}

/// Distance-to-rate mapping for access and direct links.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatePolicy {
    /// `(max distance m, rate)` sorted by distance. Links longer than the
    /// last breakpoint get rate 0.
    pub breakpoints: Vec<(f64, u32)>,
    pub backhaul_rate: u32,
}

impl Default for RatePolicy {
    fn default() -> Self {
        Self { breakpoints: vec![(15.0, 3), (35.0, 2), (f64::INFINITY, 1)], backhaul_rate: 3 }
    }
}

impl RatePolicy {
    pub fn rate_for_distance(&self, distance: f64) -> u32 {
        self.breakpoints.iter().find(|(max, _)| distance <= *max).map_or(0, |&(_, rate)| rate)
    }

    pub fn is_well_formed(&self) -> bool {
        self.breakpoints.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 >= w[1].1)
    }
}

impl Deployment {
    pub fn node(&self, id: NodeId) -> Result<&Node, TopologyError> {
        self.nodes.get(id.index()).filter(|n| n.id == id).ok_or(TopologyError::UnknownNode(id))
    }

    pub fn positions(&self) -> Vec<Point> {
        self.nodes.iter().map(|n| n.position).collect()
    }

    pub fn aps(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.kind.is_ap())
    }

    pub fn wns(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Wn)
    }

    pub fn distance(&self, a: NodeId, b: NodeId) -> Result<f64, TopologyError> {
        Ok(self.node(a)?.position.distance(&self.node(b)?.position))
    }

    fn neighbours(&self, ap: NodeId) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = self
            .backhaul_edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == ap {
                    Some(b)
                } else if b == ap {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// AP-side anchor of an endpoint: itself for APs, its serving AP for WNs.
    fn anchor(&self, id: NodeId) -> Result<NodeId, TopologyError> {
        let node = self.node(id)?;
        if node.kind.is_ap() {
            Ok(id)
        } else {
            node.associated_ap.ok_or(TopologyError::Unassociated(id))
        }
    }
}

/// Places `ap_count` APs on a square grid (cell centres), the gateway at the
/// centre-most AP, and `wn_count` WNs uniformly at random; WNs are then
/// associated with their nearest AP. APs take ids `0..ap_count`.
pub fn generate_deployment(
    ap_count: usize,
    wn_count: usize,
    area_side: f64,
    backhaul: BackhaulTopology,
    seed: u64,
) -> Result<Deployment, TopologyError> {
    let grid = (ap_count as f64).sqrt().round() as usize;
    if ap_count == 0 || grid * grid != ap_count {
        return Err(TopologyError::NotASquare(ap_count));
    }
    let cell = area_side / grid as f64;
    let centre = Point::new(area_side / 2.0, area_side / 2.0);

    let mut nodes: Vec<Node> = (0..ap_count)
        .map(|i| {
            let (row, col) = (i / grid, i % grid);
            Node {
                id: NodeId(i as u32),
                kind: NodeKind::Ap,
                position: Point::new((col as f64 + 0.5) * cell, (row as f64 + 0.5) * cell),
                associated_ap: None,
            }
        })
        .collect();

    let gateway_idx = (0..ap_count)
        .min_by(|&a, &b| {
            let da = nodes[a].position.distance(&centre);
            let db = nodes[b].position.distance(&centre);
            da.total_cmp(&db).then(a.cmp(&b))
        })
        .expect("at least one AP");
    nodes[gateway_idx].kind = NodeKind::Gateway;
    let gateway = NodeId(gateway_idx as u32);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..wn_count {
        let x = rng.gen_range(0.0..area_side);
        let y = rng.gen_range(0.0..area_side);
        nodes.push(Node {
            id: NodeId((ap_count + k) as u32),
            kind: NodeKind::Wn,
            position: Point::new(x, y),
            associated_ap: None,
        });
    }

    let id = |i: usize| NodeId(i as u32);
    let mut backhaul_edges = Vec::new();
    match backhaul {
        BackhaulTopology::Grid => {
            for i in 0..ap_count {
                let (row, col) = (i / grid, i % grid);
                if col + 1 < grid {
                    backhaul_edges.push((id(i), id(i + 1)));
                }
                if row + 1 < grid {
                    backhaul_edges.push((id(i), id(i + grid)));
                }
            }
        }
        BackhaulTopology::Ring if ap_count > 1 => {
            for i in 0..ap_count {
                let j = (i + 1) % ap_count;
                if i < j || ap_count > 2 {
                    backhaul_edges.push((id(i.min(j)), id(i.max(j))));
                }
            }
            backhaul_edges.sort_unstable();
            backhaul_edges.dedup();
        }
        BackhaulTopology::Star => {
            for i in (0..ap_count).filter(|&i| i != gateway_idx) {
                backhaul_edges.push((id(i.min(gateway_idx)), id(i.max(gateway_idx))));
            }
        }
        BackhaulTopology::Ring => {}
    }

    associate(Deployment { area_side, nodes, backhaul_edges, gateway })
}

/// Associates every WN with its nearest AP, lowest AP id on ties.
pub fn associate(mut deployment: Deployment) -> Result<Deployment, TopologyError> {
    let aps: Vec<(NodeId, Point)> = deployment.aps().map(|n| (n.id, n.position)).collect();
    if aps.is_empty() {
        return Err(TopologyError::NoAp);
    }
    for node in deployment.nodes.iter_mut().filter(|n| n.kind == NodeKind::Wn) {
        let mut best = aps[0];
        let mut best_d = node.position.distance(&best.1);
        for &(ap, pos) in &aps[1..] {
            let d = node.position.distance(&pos);
            if d < best_d || (d == best_d && ap < best.0) {
                best = (ap, pos);
                best_d = d;
            }
        }
        node.associated_ap = Some(best.0);
    }
    Ok(deployment)
}

/// Minimum-hop backhaul route between two APs. Among shortest routes the
/// lexicographically smallest node sequence wins.
pub fn backhaul_route(
    deployment: &Deployment,
    policy: &RatePolicy,
    src_ap: NodeId,
    dst_ap: NodeId,
) -> Result<Vec<DirectionalLink>, TopologyError> {
    for ap in [src_ap, dst_ap] {
        if !deployment.node(ap)?.kind.is_ap() {
            return Err(TopologyError::NotAnAp(ap));
        }
    }
    if src_ap == dst_ap {
        return Ok(Vec::new());
    }
    // hop distance to dst, then walk greedily from src through the smallest
    // neighbour one hop closer
    let n = deployment.nodes.len();
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    dist[dst_ap.index()] = 0;
    queue.push_back(dst_ap);
    while let Some(u) = queue.pop_front() {
        for v in deployment.neighbours(u) {
            if dist[v.index()] == usize::MAX {
                dist[v.index()] = dist[u.index()] + 1;
                queue.push_back(v);
            }
        }
    }
    if dist[src_ap.index()] == usize::MAX {
        return Err(TopologyError::Disconnected(src_ap, dst_ap));
    }
    let mut route = Vec::with_capacity(dist[src_ap.index()]);
    let mut at = src_ap;
    while at != dst_ap {
        let next = deployment
            .neighbours(at)
            .into_iter()
            .find(|v| dist[v.index()] + 1 == dist[at.index()])
            .expect("BFS layer has a predecessor");
        route.push(DirectionalLink::new(at, next, policy.backhaul_rate, LinkKind::Backhaul));
        at = next;
    }
    Ok(route)
}

/// Builds the ordinary and direct paths of a flow.
///
/// The ordinary path is uplink access, backhaul, downlink access, with
/// segments dropped when an endpoint is itself an AP. When that leaves a
/// single hop from `src` to `dst` (a WN and the gateway it is associated
/// with) the flow has no ordinary path and that hop is its direct link.
pub fn build_flow(
    deployment: &Deployment,
    policy: &RatePolicy,
    id: u32,
    src: NodeId,
    dst: NodeId,
    demand: u64,
) -> Result<Flow, TopologyError> {
    if src == dst {
        return Err(TopologyError::SelfFlow);
    }
    let src_ap = deployment.anchor(src)?;
    let dst_ap = deployment.anchor(dst)?;
    let access = |tx: NodeId, rx: NodeId| -> Result<DirectionalLink, TopologyError> {
        let rate = policy.rate_for_distance(deployment.distance(tx, rx)?);
        Ok(DirectionalLink::new(tx, rx, rate, LinkKind::Access))
    };

    let mut path = Vec::new();
    if src != src_ap {
        path.push(access(src, src_ap)?);
    }
    path.extend(backhaul_route(deployment, policy, src_ap, dst_ap)?);
    if dst != dst_ap {
        path.push(access(dst_ap, dst)?);
    }

    let direct_rate = policy.rate_for_distance(deployment.distance(src, dst)?);
    let direct = DirectionalLink::new(src, dst, direct_rate, LinkKind::Direct);
    if path.len() == 1 && path[0].tx == src && path[0].rx == dst {
        path.clear();
    }

    let class = if src == deployment.gateway || dst == deployment.gateway {
        FlowClass::Internet
    } else {
        FlowClass::BetweenWns
    };
    Ok(Flow { id, src, dst, class, ordinary_path: path, direct_link: Some(direct), demand })
}

/// Random flow set: `between_wns` distinct WN pairs and `internet` flows
/// between a random WN and the gateway in a random direction. Flow ids
/// start at 0; demands are zero.
pub fn random_flows(
    deployment: &Deployment,
    policy: &RatePolicy,
    between_wns: usize,
    internet: usize,
    seed: u64,
) -> Result<Vec<Flow>, TopologyError> {
    let wns: Vec<NodeId> = deployment.wns().map(|n| n.id).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut flows = Vec::with_capacity(between_wns + internet);
    if wns.len() >= 2 {
        for _ in 0..between_wns {
            let a = rng.gen_range(0..wns.len());
            let mut b = rng.gen_range(0..wns.len() - 1);
            if b >= a {
                b += 1;
            }
            let id = flows.len() as u32;
            flows.push(build_flow(deployment, policy, id, wns[a], wns[b], 0)?);
        }
    }
    if !wns.is_empty() {
        for _ in 0..internet {
            let wn = wns[rng.gen_range(0..wns.len())];
            let (src, dst) = if rng.gen_bool(0.5) { (wn, deployment.gateway) } else { (deployment.gateway, wn) };
            let id = flows.len() as u32;
            flows.push(build_flow(deployment, policy, id, src, dst, 0)?);
        }
    }
    Ok(flows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_grid(seed: u64) -> Deployment {
        generate_deployment(9, 30, 50.0, BackhaulTopology::Grid, seed).unwrap()
    }

    #[test]
    fn default_deployment_shape() {
        let d = paper_grid(7);
        assert_eq!(d.aps().count(), 9);
        assert_eq!(d.wns().count(), 30);
        let gw = d.node(d.gateway).unwrap();
        assert_eq!(gw.kind, NodeKind::Gateway);
        assert_eq!(gw.position, Point::new(25.0, 25.0));
        assert_eq!(d.nodes.iter().filter(|n| n.kind == NodeKind::Gateway).count(), 1);
        assert!(d.wns().all(|n| n.associated_ap.is_some()));
        assert!(d.nodes.iter().all(|n| (0.0..=50.0).contains(&n.position.x) && (0.0..=50.0).contains(&n.position.y)));
        assert_eq!(d.backhaul_edges.len(), 12);
    }

    #[test]
    fn degenerate_single_ap() {
        let d = generate_deployment(1, 0, 50.0, BackhaulTopology::Grid, 3).unwrap();
        assert_eq!(d.nodes.len(), 1);
        assert_eq!(d.gateway, NodeId(0));
        assert!(d.backhaul_edges.is_empty());
    }

    #[test]
    fn seeds_reproduce_positions() {
        assert_eq!(paper_grid(11), paper_grid(11));
        assert_ne!(paper_grid(11), paper_grid(12));
    }

    #[test]
    fn non_square_ap_count_rejected() {
        assert_eq!(
            generate_deployment(8, 3, 50.0, BackhaulTopology::Grid, 0).unwrap_err(),
            TopologyError::NotASquare(8)
        );
    }

    #[test]
    fn association_ties_and_exact_hits() {
        let mut d = generate_deployment(4, 0, 20.0, BackhaulTopology::Grid, 0).unwrap();
        // APs at (5,5) (15,5) (5,15) (15,15)
        let wn = |id, x, y| Node { id: NodeId(id), kind: NodeKind::Wn, position: Point::new(x, y), associated_ap: None };
        d.nodes.push(wn(4, 15.0, 15.0));
        d.nodes.push(wn(5, 10.0, 5.0));
        d.nodes.push(wn(6, 10.0, 10.0));
        let d = associate(d).unwrap();
        assert_eq!(d.nodes[4].associated_ap, Some(NodeId(3)));
        assert_eq!(d.nodes[5].associated_ap, Some(NodeId(0)));
        assert_eq!(d.nodes[6].associated_ap, Some(NodeId(0)));
    }

    #[test]
    fn association_matches_exhaustive_scan() {
        for seed in 0..20 {
            let d = paper_grid(seed);
            for wn in d.wns() {
                let best = d
                    .aps()
                    .map(|ap| (wn.position.distance(&ap.position), ap.id))
                    .fold((f64::INFINITY, NodeId(u32::MAX)), |acc, x| if x.0 < acc.0 { x } else { acc });
                assert_eq!(wn.associated_ap, Some(best.1));
            }
        }
    }

    #[test]
    fn routes() {
        let d = paper_grid(0);
        let p = RatePolicy::default();
        assert!(backhaul_route(&d, &p, NodeId(4), NodeId(4)).unwrap().is_empty());
        let one = backhaul_route(&d, &p, NodeId(0), NodeId(1)).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].rate, 3);
        // corner to corner: Manhattan distance 4, smallest ids first
        let r = backhaul_route(&d, &p, NodeId(0), NodeId(8)).unwrap();
        let seq: Vec<u32> = std::iter::once(0).chain(r.iter().map(|l| l.rx.0)).collect();
        assert_eq!(seq, vec![0, 1, 2, 5, 8]);
        assert!(matches!(backhaul_route(&d, &p, NodeId(9), NodeId(0)), Err(TopologyError::NotAnAp(_))));
    }

    #[test]
    fn disconnected_backhaul_is_an_error() {
        let mut d = paper_grid(0);
        d.backhaul_edges.retain(|&(a, b)| a != NodeId(8) && b != NodeId(8));
        let p = RatePolicy::default();
        assert_eq!(
            backhaul_route(&d, &p, NodeId(0), NodeId(8)).unwrap_err(),
            TopologyError::Disconnected(NodeId(0), NodeId(8))
        );
    }

    /// Hop count oracle: plain BFS over an adjacency matrix.
    fn bfs_hops(d: &Deployment, s: NodeId, t: NodeId) -> usize {
        let n = d.nodes.len();
        let mut adj = vec![vec![false; n]; n];
        for &(a, b) in &d.backhaul_edges {
            adj[a.index()][b.index()] = true;
            adj[b.index()][a.index()] = true;
        }
        let mut dist = vec![usize::MAX; n];
        dist[s.index()] = 0;
        let mut frontier = vec![s.index()];
        while !frontier.is_empty() {
            let mut next = vec![];
            for u in frontier {
                for v in 0..n {
                    if adj[u][v] && dist[v] == usize::MAX {
                        dist[v] = dist[u] + 1;
                        next.push(v);
                    }
                }
            }
            frontier = next;
        }
        dist[t.index()]
    }

    #[test]
    fn route_lengths_match_bfs_oracle() {
        let p = RatePolicy::default();
        for topo in [BackhaulTopology::Grid, BackhaulTopology::Ring, BackhaulTopology::Star] {
            let d = generate_deployment(16, 0, 50.0, topo, 0).unwrap();
            for s in 0..16 {
                for t in 0..16 {
                    let r = backhaul_route(&d, &p, NodeId(s), NodeId(t)).unwrap();
                    assert_eq!(r.len(), bfs_hops(&d, NodeId(s), NodeId(t)));
                    let mut seen: Vec<NodeId> = std::iter::once(NodeId(s)).chain(r.iter().map(|l| l.rx)).collect();
                    seen.sort_unstable();
                    seen.dedup();
                    assert_eq!(seen.len(), r.len() + 1, "no repeated nodes");
                    if topo == BackhaulTopology::Grid {
                        let (rs, cs, rt, ct) = (s / 4, s % 4, t / 4, t % 4);
                        assert_eq!(r.len() as u32, rs.abs_diff(rt) + cs.abs_diff(ct));
                    }
                }
            }
        }
    }

    #[test]
    fn flow_shapes() {
        let d = paper_grid(5);
        let p = RatePolicy::default();
        let wns: Vec<&Node> = d.wns().collect();
        // same serving AP -> two access hops
        let mut same = None;
        for a in &wns {
            for b in &wns {
                if a.id != b.id && a.associated_ap == b.associated_ap && a.associated_ap != Some(d.gateway) {
                    same = Some((a.id, b.id));
                }
            }
        }
        let (a, b) = same.expect("seed 5 has two WNs sharing an AP");
        let f = build_flow(&d, &p, 0, a, b, 3).unwrap();
        assert_eq!(f.ordinary_path.len(), 2);
        assert!(f.check_chained());
        assert_eq!(f.class, FlowClass::BetweenWns);

        // WN served by the gateway talking to the gateway: no ordinary path
        if let Some(local) = wns.iter().find(|n| n.associated_ap == Some(d.gateway)) {
            let f = build_flow(&d, &p, 1, local.id, d.gateway, 1).unwrap();
            assert!(f.ordinary_path.is_empty());
            assert_eq!(f.hop_count(), 1);
            assert!(f.has_direct());
            assert_eq!(f.class, FlowClass::Internet);
        }

        for (i, a) in wns.iter().enumerate() {
            for b in &wns[i + 1..] {
                let f = build_flow(&d, &p, 2, a.id, b.id, 1).unwrap();
                assert!(f.check_chained());
                assert_eq!(f.ordinary_path.first().unwrap().tx, a.id);
                assert_eq!(f.ordinary_path.last().unwrap().rx, b.id);
            }
        }
    }

    #[test]
    fn rate_policy_defaults() {
        let p = RatePolicy::default();
        assert!(p.is_well_formed());
        assert_eq!(p.rate_for_distance(3.0), 3);
        assert_eq!(p.rate_for_distance(15.0), 3);
        assert_eq!(p.rate_for_distance(15.5), 2);
        assert_eq!(p.rate_for_distance(35.0), 2);
        assert_eq!(p.rate_for_distance(60.0), 1);
        let capped = RatePolicy { breakpoints: vec![(10.0, 3)], backhaul_rate: 3 };
        assert_eq!(capped.rate_for_distance(11.0), 0);
    }
}
