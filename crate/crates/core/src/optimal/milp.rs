//! The scheduling MILP after substituting `u = δ·b` and `v = δ·a`.
//!
//! Variable names: `delta_k`, `b_i_j_k` (hop `j` of flow `i` in stage `k`),
//! `a_i_k` (direct link of flow `i` in stage `k`), and the products
//! `u_i_j_k`, `v_i_k`. Flow ids are used verbatim, hops and stages count
//! from 1. Variables that are forced to zero are left out of the model.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{are_adjacent, hop_weight, DirectionalLink, Flow, HopRef, Schedule};
use crate::radio::SinrCheck;

#[derive(Debug, Error, PartialEq)]
pub enum MilpError {
    #[error("the model needs at least one stage")]
    NoStages,
    #[error("flow {0} has demand but no usable path")]
    NoUsablePath(u32),
    #[error("schedule uses {0} stages but the model only has {1}")]
    TooManyStages(usize, usize),
    #[error("schedule refers to a variable the model does not have: {0}")]
    MissingVariable(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Integer,
    Continuous,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    /// `None` means unbounded above.
    pub upper: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub name: String,
    /// `(variable index, coefficient)`, sorted by index.
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MilpModel {
    pub name: String,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    /// Minimised.
    pub objective: Vec<(usize, f64)>,
    index: BTreeMap<String, usize>,
}

impl MilpModel {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), ..Self::default() }
    }

    /// Adds a variable; returns the index of an existing one with that name.
    pub fn add_variable(&mut self, name: impl Into<String>, kind: VarKind, lower: f64, upper: Option<f64>) -> usize {
        let name = name.into();
        if let Some(&i) = self.index.get(&name) {
            return i;
        }
        let i = self.variables.len();
        self.index.insert(name.clone(), i);
        self.variables.push(Variable { name, kind, lower, upper });
        i
    }

    pub fn add_constraint(&mut self, name: impl Into<String>, mut terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        terms.sort_by_key(|t| t.0);
        self.constraints.push(Constraint { name: name.into(), terms, sense, rhs });
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().map(|&(i, c)| c * x[i]).sum()
    }

    pub fn count_kind(&self, kind: VarKind) -> usize {
        self.variables.iter().filter(|v| v.kind == kind).count()
    }

    /// Checks bounds, integrality and every constraint at the point `x`.
    pub fn check_point(&self, x: &[f64], tol: f64) -> Result<(), String> {
        if x.len() != self.variables.len() {
            return Err(format!("point has {} entries, model has {} variables", x.len(), self.variables.len()));
        }
        for (v, &val) in self.variables.iter().zip(x) {
            if val < v.lower - tol || v.upper.is_some_and(|u| val > u + tol) {
                return Err(format!("{} = {val} is out of bounds", v.name));
            }
            if v.kind != VarKind::Continuous && (val - val.round()).abs() > tol {
                return Err(format!("{} = {val} is not integral", v.name));
            }
        }
        for c in &self.constraints {
            let lhs: f64 = c.terms.iter().map(|&(i, a)| a * x[i]).sum();
            let scale = tol * (1.0 + c.rhs.abs());
            let ok = match c.sense {
                Sense::Le => lhs <= c.rhs + scale,
                Sense::Ge => lhs >= c.rhs - scale,
                Sense::Eq => (lhs - c.rhs).abs() <= scale,
            };
            if !ok {
                return Err(format!("{}: lhs {lhs} {} {}", c.name, c.sense.symbol(), c.rhs));
            }
        }
        Ok(())
    }

    pub(crate) fn rebuild_index(&mut self) {
        self.index = self.variables.iter().enumerate().map(|(i, v)| (v.name.clone(), i)).collect();
    }
}

/// A flow as the model sees it: usable ordinary hops (empty when the
/// ordinary path is missing or blocked), the hop range `1..=h` of the
/// per-hop constraints, and the usable direct link.
struct FlowTerms {
    id: u32,
    demand: u64,
    hops: Vec<DirectionalLink>,
    h: usize,
    direct: Option<DirectionalLink>,
}

fn flow_terms(flows: &[Flow]) -> Result<Vec<FlowTerms>, MilpError> {
    let mut out: Vec<FlowTerms> = flows
        .iter()
        .filter(|f| f.demand > 0)
        .map(|f| {
            let hops = if f.has_ordinary() { f.ordinary_path.clone() } else { Vec::new() };
            let direct = f.direct_link.filter(|l| l.is_available());
            if hops.is_empty() && direct.is_none() {
                return Err(MilpError::NoUsablePath(f.id));
            }
            Ok(FlowTerms { id: f.id, demand: f.demand, hops, h: f.hop_count(), direct })
        })
        .collect::<Result<_, _>>()?;
    out.sort_by_key(|f| f.id);
    Ok(out)
}

/// Stage count that can always hold an optimum: one stage per hop of each
/// flow's longer path option.
pub fn default_stage_count(flows: &[Flow]) -> usize {
    flows.iter().filter(|f| f.demand > 0).map(Flow::hop_count).sum::<usize>().max(1)
}

/// Largest number of slots a single stage can need.
pub fn delta_max(flows: &[Flow]) -> u64 {
    flow_terms(flows)
        .unwrap_or_default()
        .iter()
        .flat_map(|f| f.hops.iter().chain(f.direct.iter()).map(move |l| hop_weight(f.demand, l.rate).unwrap_or(0)))
        .max()
        .unwrap_or(0)
}

fn b_name(i: u32, j: usize, k: usize) -> String {
    format!("b_{i}_{j}_{k}")
}
fn a_name(i: u32, k: usize) -> String {
    format!("a_{i}_{k}")
}
fn u_name(i: u32, j: usize, k: usize) -> String {
    format!("u_{i}_{j}_{k}")
}
fn v_name(i: u32, k: usize) -> String {
    format!("v_{i}_{k}")
}
fn delta_name(k: usize) -> String {
    format!("delta_{k}")
}

/// Builds the linearised model with `k` stages. SINR rows are added only
/// when `sinr` is given; without it nonadjacent links never interfere.
pub fn build_milp(name: &str, flows: &[Flow], k: usize, sinr: Option<&SinrCheck>) -> Result<MilpModel, MilpError> {
    if k == 0 {
        return Err(MilpError::NoStages);
    }
    let terms = flow_terms(flows)?;
    let dmax = delta_max(flows) as f64;
    let mut m = MilpModel::new(name);
    let stages = 1..=k;

    let delta: Vec<usize> =
        stages.clone().map(|s| m.add_variable(delta_name(s), VarKind::Integer, 0.0, Some(dmax))).collect();
    m.objective = delta.iter().map(|&d| (d, 1.0)).collect();

    // b[f][j][k-1], a[f][k-1]
    let mut b: Vec<Vec<Vec<usize>>> = Vec::with_capacity(terms.len());
    for f in &terms {
        let per_hop = (1..=f.hops.len())
            .map(|j| stages.clone().map(|s| m.add_variable(b_name(f.id, j, s), VarKind::Binary, 0.0, Some(1.0))).collect())
            .collect();
        b.push(per_hop);
    }
    let mut a: Vec<Vec<usize>> = Vec::with_capacity(terms.len());
    for f in &terms {
        let vars = match f.direct {
            Some(_) => stages.clone().map(|s| m.add_variable(a_name(f.id, s), VarKind::Binary, 0.0, Some(1.0))).collect(),
            None => Vec::new(),
        };
        a.push(vars);
    }
    let mut u: Vec<Vec<Vec<usize>>> = Vec::with_capacity(terms.len());
    for f in &terms {
        let per_hop = (1..=f.hops.len())
            .map(|j| stages.clone().map(|s| m.add_variable(u_name(f.id, j, s), VarKind::Continuous, 0.0, None)).collect())
            .collect();
        u.push(per_hop);
    }
    let mut v: Vec<Vec<usize>> = Vec::with_capacity(terms.len());
    for f in &terms {
        let vars = match f.direct {
            Some(_) => stages.clone().map(|s| m.add_variable(v_name(f.id, s), VarKind::Continuous, 0.0, None)).collect(),
            None => Vec::new(),
        };
        v.push(vars);
    }

    // demand
    for (x, f) in terms.iter().enumerate() {
        for j in 0..f.h {
            let mut row = Vec::new();
            if let Some(hop) = f.hops.get(j) {
                row.extend(u[x][j].iter().map(|&var| (var, f64::from(hop.rate))));
            }
            if let Some(d) = f.direct {
                row.extend(v[x].iter().map(|&var| (var, f64::from(d.rate))));
            }
            m.add_constraint(format!("dem_{}_{}", f.id, j + 1), row, Sense::Ge, f.demand as f64);
        }
    }

    // each hop (or the direct link) exactly once
    for (x, f) in terms.iter().enumerate() {
        for j in 0..f.h {
            let mut row: Vec<(usize, f64)> = Vec::new();
            if j < f.hops.len() {
                row.extend(b[x][j].iter().map(|&var| (var, 1.0)));
            }
            row.extend(a[x].iter().map(|&var| (var, 1.0)));
            m.add_constraint(format!("act_{}_{}", f.id, j + 1), row, Sense::Eq, 1.0);
        }
    }

    // link catalogue: (flow index, hop) -> link, in model order
    let mut links: Vec<(usize, HopRef, DirectionalLink)> = Vec::new();
    for (x, f) in terms.iter().enumerate() {
        links.extend(f.hops.iter().enumerate().map(|(j, l)| (x, HopRef::Ordinary(j), *l)));
    }
    for (x, f) in terms.iter().enumerate() {
        links.extend(f.direct.iter().map(|l| (x, HopRef::Direct, *l)));
    }
    let var_of = |x: usize, hop: HopRef, s: usize| match hop {
        HopRef::Ordinary(j) => b[x][j][s],
        HopRef::Direct => a[x][s],
    };
    let label = |x: usize, hop: HopRef| match hop {
        HopRef::Ordinary(j) => format!("b{}_{}", terms[x].id, j + 1),
        HopRef::Direct => format!("a{}", terms[x].id),
    };

    // adjacent links never share a stage
    for s in 0..k {
        for p in 0..links.len() {
            for q in p + 1..links.len() {
                let (xp, hp, lp) = links[p];
                let (xq, hq, lq) = links[q];
                if are_adjacent(&lp, &lq) {
                    m.add_constraint(
                        format!("adj_{}_{}_{}", label(xp, hp), label(xq, hq), s + 1),
                        vec![(var_of(xp, hp, s), 1.0), (var_of(xq, hq, s), 1.0)],
                        Sense::Le,
                        1.0,
                    );
                }
            }
        }
    }

    // at most one hop of a path per stage
    for (x, f) in terms.iter().enumerate() {
        if f.hops.len() < 2 {
            continue;
        }
        for s in 0..k {
            let row = (0..f.hops.len()).map(|j| (b[x][j][s], 1.0)).collect();
            m.add_constraint(format!("path_{}_{}", f.id, s + 1), row, Sense::Le, 1.0);
        }
    }

    // hop j no later than hop j+1, for every stage prefix
    for (x, f) in terms.iter().enumerate() {
        for j in 0..f.hops.len().saturating_sub(1) {
            for prefix in 1..=k {
                let mut row: Vec<(usize, f64)> = (0..prefix).map(|s| (b[x][j][s], 1.0)).collect();
                row.extend((0..prefix).map(|s| (b[x][j + 1][s], -1.0)));
                m.add_constraint(format!("ord_{}_{}_{}", f.id, j + 1, prefix), row, Sense::Ge, 0.0);
            }
        }
    }

    // bound-factor products for u = δ·b and v = δ·a
    let rlt = |m: &mut MilpModel, tag: &str, bin: usize, prod: usize, s: usize| {
        let d = delta[s];
        m.add_constraint(format!("{tag}_1"), vec![(bin, dmax), (prod, -1.0)], Sense::Ge, 0.0);
        m.add_constraint(format!("{tag}_2"), vec![(d, 1.0), (prod, -1.0)], Sense::Ge, 0.0);
        m.add_constraint(format!("{tag}_3"), vec![(d, -1.0), (bin, -dmax), (prod, 1.0)], Sense::Ge, -dmax);
    };
    for (x, f) in terms.iter().enumerate() {
        for j in 0..f.hops.len() {
            for s in 0..k {
                rlt(&mut m, &format!("rltu_{}_{}_{}", f.id, j + 1, s + 1), b[x][j][s], u[x][j][s], s);
            }
        }
    }
    for (x, f) in terms.iter().enumerate() {
        for s in 0..a[x].len() {
            rlt(&mut m, &format!("rltv_{}_{}", f.id, s + 1), a[x][s], v[x][s], s);
        }
    }

    if let Some(check) = sinr {
        add_sinr_rows(&mut m, check, &links, &var_of, &label, k);
    }
    Ok(m)
}

/// SINR rows, normalised by the noise power. With `g` the interference of
/// a candidate over noise, a victim with SNR `snr` and threshold `ms`
/// needs `ms · (1 + Σ g·x) <= snr` whenever it is active; the big-M term
/// relaxes the row when it is not.
fn add_sinr_rows(
    m: &mut MilpModel,
    check: &SinrCheck,
    links: &[(usize, HopRef, DirectionalLink)],
    var_of: &dyn Fn(usize, HopRef, usize) -> usize,
    label: &dyn Fn(usize, HopRef) -> String,
    k: usize,
) {
    let noise = check.params.noise_power();
    let pos = |n: crate::model::NodeId| check.positions[n.index()];
    for &(xv, hv, victim) in links {
        let snr = crate::radio::sinr(&victim, &[], &crate::radio::BeamModel::Isolated, &check.params, &check.positions);
        let Some(ms) = check.ms.min_sinr(victim.rate).filter(|&ms| snr >= ms) else {
            for s in 0..k {
                m.add_constraint(format!("sinr_{}_{}", label(xv, hv), s + 1), vec![(var_of(xv, hv, s), 1.0)], Sense::Le, 0.0);
            }
            continue;
        };
        let gains: Vec<(usize, HopRef, f64)> = links
            .iter()
            .filter(|(x, h, l)| (*x, *h) != (xv, hv) && !are_adjacent(l, &victim))
            .filter(|(_, _, l)| check.model.indicator(l, &victim, &check.positions))
            .map(|&(x, h, l)| {
                let p = crate::radio::received_power(true, &check.params, pos(l.tx).distance(&pos(victim.rx)))
                    .unwrap_or(f64::INFINITY);
                (x, h, check.params.mui_factor * p / noise)
            })
            .collect();
        let worst = ms * (1.0 + gains.iter().map(|g| g.2).sum::<f64>()) - snr;
        if gains.is_empty() || worst <= 0.0 {
            continue;
        }
        for s in 0..k {
            let mut row: Vec<(usize, f64)> = gains.iter().map(|&(x, h, g)| (var_of(x, h, s), ms * g)).collect();
            row.push((var_of(xv, hv, s), worst));
            m.add_constraint(format!("sinr_{}_{}", label(xv, hv), s + 1), row, Sense::Le, snr - ms + worst);
        }
    }
}

/// The model point matching `schedule`: binaries from stage membership,
/// `δ` from stage lengths and `u`, `v` as the products.
pub fn point_from_schedule(m: &MilpModel, schedule: &Schedule, k: usize) -> Result<Vec<f64>, MilpError> {
    if schedule.stages.len() > k {
        return Err(MilpError::TooManyStages(schedule.stages.len(), k));
    }
    let mut x = vec![0.0; m.variables.len()];
    let mut set = |name: String, val: f64| -> Result<(), MilpError> {
        let i = m.var_index(&name).ok_or(MilpError::MissingVariable(name))?;
        x[i] = val;
        Ok(())
    };
    for (s, stage) in schedule.stages.iter().enumerate() {
        let kk = s + 1;
        let d = stage.slots as f64;
        set(delta_name(kk), d)?;
        for l in &stage.links {
            match l.hop {
                HopRef::Ordinary(j) => {
                    set(b_name(l.flow, j + 1, kk), 1.0)?;
                    set(u_name(l.flow, j + 1, kk), d)?;
                }
                HopRef::Direct => {
                    set(a_name(l.flow, kk), 1.0)?;
                    set(v_name(l.flow, kk), d)?;
                }
            }
        }
    }
    Ok(x)
}
