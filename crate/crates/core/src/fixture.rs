//! Instance files: a deployment plus flows with verbatim rates and demands.
//!
//! Schema (TOML):
//!
//! ```toml
//! name = "example"
//! area_side = 50.0
//! gateway = 0
//! backhaul = [[0, 1]]          # undirected AP pairs
//!
//! [[nodes]]                    # ids must be 0..n in order
//! id = 0
//! name = "AP1"                 # optional display name
//! kind = "gateway"             # "ap" | "wn" | "gateway"
//! x = 25.0
//! y = 25.0
//! ap = 1                       # serving AP, WNs only
//!
//! [[flows]]
//! id = 1
//! src = 3
//! dst = 4
//! demand = 5
//! ordinary = [[3, 1, 2], [1, 2, 3]]   # [tx, rx, rate] per hop
//! direct = [3, 4, 1]                  # optional [tx, rx, rate]
//! ```
//!
//! Link kinds are derived from node kinds: AP-to-AP hops are backhaul,
//! other ordinary hops are access links.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DirectionalLink, Flow, FlowClass, LinkKind, Node, NodeId, NodeKind, Point};
use crate::topology::Deployment;

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("serialize error: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("invalid instance: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeRecord {
    id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    kind: NodeKind,
    x: f64,
    y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ap: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlowRecord {
    id: u32,
    src: u32,
    dst: u32,
    demand: u64,
    #[serde(default)]
    ordinary: Vec<[u32; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    direct: Option<[u32; 3]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    name: String,
    area_side: f64,
    gateway: u32,
    #[serde(default)]
    backhaul: Vec<[u32; 2]>,
    nodes: Vec<NodeRecord>,
    #[serde(default)]
    flows: Vec<FlowRecord>,
}

/// A loaded instance: deployment, flows (with demands) and node names.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub name: String,
    pub deployment: Deployment,
    pub flows: Vec<Flow>,
    pub node_names: Vec<Option<String>>,
}

impl Instance {
    pub fn node_count(&self) -> usize {
        self.deployment.nodes.len()
    }

    pub fn node_label(&self, id: NodeId) -> String {
        self.node_names
            .get(id.index())
            .and_then(|n| n.clone())
            .unwrap_or_else(|| id.to_string())
    }

    pub fn from_toml(text: &str) -> Result<Self, FixtureError> {
        let file: InstanceFile = toml::from_str(text)?;
        file.try_into()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, FixtureError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| FixtureError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String, FixtureError> {
        let file = InstanceFile::from(self);
        Ok(toml::to_string(&file)?)
    }
}

impl TryFrom<InstanceFile> for Instance {
    type Error = FixtureError;

    fn try_from(file: InstanceFile) -> Result<Self, FixtureError> {
        let invalid = |msg: String| FixtureError::Invalid(msg);
        let mut nodes = Vec::with_capacity(file.nodes.len());
        let mut names = Vec::with_capacity(file.nodes.len());
        for (i, rec) in file.nodes.iter().enumerate() {
            if rec.id as usize != i {
                return Err(invalid(format!("node ids must be 0..n in order; found {} at position {i}", rec.id)));
            }
            nodes.push(Node {
                id: NodeId(rec.id),
                kind: rec.kind,
                position: Point::new(rec.x, rec.y),
                associated_ap: rec.ap.map(NodeId),
            });
            names.push(rec.name.clone());
        }
        let kind_of = |id: u32| -> Result<NodeKind, FixtureError> {
            nodes.get(id as usize).map(|n| n.kind).ok_or_else(|| invalid(format!("unknown node {id}")))
        };
        if kind_of(file.gateway)? != NodeKind::Gateway {
            return Err(invalid(format!("gateway {} is not marked kind = \"gateway\"", file.gateway)));
        }
        if nodes.iter().filter(|n| n.kind == NodeKind::Gateway).count() != 1 {
            return Err(invalid("exactly one gateway node is required".into()));
        }
        for n in &nodes {
            match (n.kind, n.associated_ap) {
                (NodeKind::Wn, Some(ap)) if kind_of(ap.0)?.is_ap() => {}
                (NodeKind::Wn, _) => return Err(invalid(format!("WN {} needs an AP in `ap`", n.id))),
                (_, Some(_)) => return Err(invalid(format!("AP {} must not set `ap`", n.id))),
                _ => {}
            }
        }
        for &[a, b] in &file.backhaul {
            if !kind_of(a)?.is_ap() || !kind_of(b)?.is_ap() || a == b {
                return Err(invalid(format!("backhaul edge [{a}, {b}] must join two distinct APs")));
            }
        }

        let make_link = |[tx, rx, rate]: [u32; 3], direct: bool| -> Result<DirectionalLink, FixtureError> {
            if tx == rx {
                return Err(invalid(format!("link {tx}->{rx} is a self-loop")));
            }
            let kind = if direct {
                LinkKind::Direct
            } else if kind_of(tx)?.is_ap() && kind_of(rx)?.is_ap() {
                LinkKind::Backhaul
            } else {
                LinkKind::Access
            };
            Ok(DirectionalLink::new(NodeId(tx), NodeId(rx), rate, kind))
        };

        let mut flows = Vec::with_capacity(file.flows.len());
        for rec in &file.flows {
            let ordinary =
                rec.ordinary.iter().map(|&l| make_link(l, false)).collect::<Result<Vec<_>, _>>()?;
            let direct = rec.direct.map(|l| make_link(l, true)).transpose()?;
            kind_of(rec.src)?;
            kind_of(rec.dst)?;
            let class = if rec.src == file.gateway || rec.dst == file.gateway {
                FlowClass::Internet
            } else {
                FlowClass::BetweenWns
            };
            let flow = Flow {
                id: rec.id,
                src: NodeId(rec.src),
                dst: NodeId(rec.dst),
                class,
                ordinary_path: ordinary,
                direct_link: direct,
                demand: rec.demand,
            };
            if !flow.check_chained() {
                return Err(invalid(format!("flow {}: ordinary hops are not chained", rec.id)));
            }
            if flows.iter().any(|f: &Flow| f.id == rec.id) {
                return Err(invalid(format!("duplicate flow id {}", rec.id)));
            }
            flows.push(flow);
        }

        let deployment = Deployment {
            area_side: file.area_side,
            nodes,
            backhaul_edges: file.backhaul.iter().map(|&[a, b]| (NodeId(a), NodeId(b))).collect(),
            gateway: NodeId(file.gateway),
        };
        Ok(Instance { name: file.name, deployment, flows, node_names: names })
    }
}

impl From<&Instance> for InstanceFile {
    fn from(inst: &Instance) -> Self {
        let triple = |l: &DirectionalLink| [l.tx.0, l.rx.0, l.rate];
        InstanceFile {
            name: inst.name.clone(),
            area_side: inst.deployment.area_side,
            gateway: inst.deployment.gateway.0,
            backhaul: inst.deployment.backhaul_edges.iter().map(|&(a, b)| [a.0, b.0]).collect(),
            nodes: inst
                .deployment
                .nodes
                .iter()
                .zip(&inst.node_names)
                .map(|(n, name)| NodeRecord {
                    id: n.id.0,
                    name: name.clone(),
                    kind: n.kind,
                    x: n.position.x,
                    y: n.position.y,
                    ap: n.associated_ap.map(|a| a.0),
                })
                .collect(),
            flows: inst
                .flows
                .iter()
                .map(|f| FlowRecord {
                    id: f.id,
                    src: f.src.0,
                    dst: f.dst.0,
                    demand: f.demand,
                    ordinary: f.ordinary_path.iter().map(triple).collect(),
                    direct: f.direct_link.as_ref().map(triple),
                })
                .collect(),
        }
    }
}

/// The three-cell example instance: four flows with demands 5, 6, 7, 8.
pub const SEC3_EXAMPLE: &str = include_str!("../fixtures/sec3-example.toml");

pub fn sec3_example() -> Instance {
    Instance::from_toml(SEC3_EXAMPLE).expect("bundled fixture parses")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_example_loads() {
        let inst = sec3_example();
        assert_eq!(inst.node_count(), 7);
        let demands: Vec<u64> = inst.flows.iter().map(|f| f.demand).collect();
        assert_eq!(demands, vec![5, 6, 7, 8]);
        let rates: Vec<Vec<u32>> =
            inst.flows.iter().map(|f| f.ordinary_path.iter().map(|l| l.rate).collect()).collect();
        assert_eq!(rates, vec![vec![2, 3, 2], vec![2, 4, 2], vec![4, 2], vec![]]);
        let direct: Vec<u32> = inst.flows.iter().map(|f| f.direct_link.unwrap().rate).collect();
        assert_eq!(direct, vec![1, 2, 3, 3]);
        let d_flow = &inst.flows[3];
        assert_eq!(d_flow.hop_count(), 1);
        assert_eq!(d_flow.class, FlowClass::Internet);
        assert_eq!(inst.flows[0].ordinary_path[1].kind, LinkKind::Backhaul);
        assert_eq!(inst.node_label(NodeId(3)), "A");
    }

    #[test]
    fn save_load_round_trip() {
        let inst = sec3_example();
        let text = inst.to_toml().unwrap();
        let again = Instance::from_toml(&text).unwrap();
        assert_eq!(again, inst);
        assert_eq!(again.to_toml().unwrap(), text);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = format!("{SEC3_EXAMPLE}\nextra = 1\n");
        assert!(matches!(Instance::from_toml(&text), Err(FixtureError::Parse(_))));
    }

    #[test]
    fn broken_chain_rejected() {
        let text = SEC3_EXAMPLE.replace("[[3, 1, 2], [1, 2, 3], [2, 4, 2]]", "[[3, 1, 2], [2, 4, 2]]");
        assert!(matches!(Instance::from_toml(&text), Err(FixtureError::Invalid(_))));
    }
}
