#![allow(dead_code)]

use std::collections::HashMap;

use d2dmac::model::{DirectionalLink, Flow, FlowClass, LinkKind, NodeId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random abstract instance: up to `max_flows` flows over a handful of
/// nodes, ordinary paths of 1..=`max_hops` hops, optional direct links,
/// occasional blocked hops.
pub fn random_instance(seed: u64, max_flows: usize, max_hops: usize) -> (Vec<Flow>, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(max_hops + 1..=max_hops + 5);
    let flow_count = rng.gen_range(1..=max_flows);
    let mut flows = Vec::new();
    for id in 0..flow_count as u32 {
        let hops = rng.gen_range(1..=max_hops);
        let mut nodes: Vec<u32> = (0..n as u32).collect();
        nodes.shuffle(&mut rng);
        let route = &nodes[..=hops];
        let ordinary: Vec<DirectionalLink> = route
            .windows(2)
            .map(|w| {
                let rate = if rng.gen_bool(0.08) { 0 } else { rng.gen_range(1..=4) };
                DirectionalLink::new(NodeId(w[0]), NodeId(w[1]), rate, LinkKind::Access)
            })
            .collect();
        let (src, dst) = (NodeId(route[0]), NodeId(route[hops]));
        let mut direct = rng
            .gen_bool(0.7)
            .then(|| DirectionalLink::new(src, dst, rng.gen_range(1..=3), LinkKind::Direct));
        let ordinary_ok = ordinary.iter().all(|l| l.rate > 0);
        if !ordinary_ok && direct.is_none() {
            direct = Some(DirectionalLink::new(src, dst, 1, LinkKind::Direct));
        }
        flows.push(Flow {
            id,
            src,
            dst,
            class: FlowClass::BetweenWns,
            ordinary_path: ordinary,
            direct_link: direct,
            demand: rng.gen_range(1..=10),
        });
    }
    (flows, n)
}

fn ceil_div(d: u64, c: u32) -> u64 {
    d.div_ceil(u64::from(c))
}

/// Usable paths of a flow as (link, slots) lists.
pub fn path_options(f: &Flow) -> Vec<Vec<(DirectionalLink, u64)>> {
    let mut out = Vec::new();
    if let Some(d) = f.direct_link.filter(|l| l.rate > 0) {
        out.push(vec![(d, ceil_div(f.demand, d.rate))]);
    }
    if !f.ordinary_path.is_empty() && f.ordinary_path.iter().all(|l| l.rate > 0) {
        out.push(f.ordinary_path.iter().map(|l| (*l, ceil_div(f.demand, l.rate))).collect());
    }
    out
}

/// Minimum slots for fixed paths, trying every subset of remaining hops as
/// the next stage.
fn enumerate_paths(paths: &[Vec<(DirectionalLink, u64)>], n: usize) -> u64 {
    let hops: Vec<(usize, usize, DirectionalLink, u64)> = paths
        .iter()
        .enumerate()
        .flat_map(|(p, path)| path.iter().enumerate().map(move |(j, &(l, w))| (p, j, l, w)))
        .collect();
    assert!(hops.len() <= 20);
    let full: u32 = (1u32 << hops.len()) - 1;
    let mut memo: HashMap<u32, u64> = HashMap::new();

    fn go(rem: u32, hops: &[(usize, usize, DirectionalLink, u64)], n: usize, memo: &mut HashMap<u32, u64>) -> u64 {
        if rem == 0 {
            return 0;
        }
        if let Some(&v) = memo.get(&rem) {
            return v;
        }
        let mut best = u64::MAX;
        let mut sub = rem;
        while sub > 0 {
            let members: Vec<usize> = (0..hops.len()).filter(|&x| sub >> x & 1 == 1).collect();
            let ok = members.len() <= n / 2
                && members.iter().all(|&x| {
                    let (p, j, _, _) = hops[x];
                    // every earlier hop of the path is already done
                    (0..hops.len()).all(|y| !(hops[y].0 == p && hops[y].1 < j && rem >> y & 1 == 1))
                })
                && members.iter().enumerate().all(|(a, &x)| {
                    members[a + 1..].iter().all(|&y| {
                        let (l1, l2) = (hops[x].2, hops[y].2);
                        l1.tx != l2.tx && l1.tx != l2.rx && l1.rx != l2.tx && l1.rx != l2.rx
                    })
                });
            if ok {
                let cost = members.iter().map(|&x| hops[x].3).max().unwrap();
                let rest = go(rem & !sub, hops, n, memo);
                best = best.min(cost + rest);
            }
            sub = (sub - 1) & rem;
        }
        memo.insert(rem, best);
        best
    }
    go(full, &hops, n, &mut memo)
}

/// Exhaustive minimum over every path assignment and every valid schedule,
/// ignoring SINR (nonadjacent links never interfere).
pub fn exhaustive_optimum(flows: &[Flow], n: usize) -> u64 {
    let active: Vec<&Flow> = flows.iter().filter(|f| f.demand > 0).collect();
    let options: Vec<Vec<Vec<(DirectionalLink, u64)>>> = active.iter().map(|f| path_options(f)).collect();
    let mut best = u64::MAX;
    let combos: usize = options.iter().map(Vec::len).product();
    for mut code in 0..combos {
        let mut paths = Vec::new();
        for o in &options {
            paths.push(o[code % o.len()].clone());
            code /= o.len();
        }
        best = best.min(enumerate_paths(&paths, n));
    }
    if active.is_empty() {
        0
    } else {
        best
    }
}
