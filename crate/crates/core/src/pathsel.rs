//! Per-flow choice between the direct link and the ordinary path.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::Flow;

#[derive(Debug, Error, PartialEq)]
pub enum PathError {
    #[error("path is empty")]
    EmptyPath,
    #[error("path contains a blocked hop")]
    BlockedPath,
    #[error("flow {0} has neither an unblocked direct link nor an unblocked ordinary path")]
    Unschedulable(u32),
    #[error("path selection parameter must be >= 1, got {0}")]
    BadBeta(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PathChoice {
    Direct,
    Ordinary,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PathPolicy {
    /// Direct when `A(direct) / A(ordinary) >= beta`.
    Beta(f64),
    /// Ordinary path whenever one exists.
    AlwaysOrdinary,
    /// Fair coin between the available paths.
    RandomPerFlow { seed: u64 },
}

/// Transmission capability of a path: `1 / Σ 1/c_j`.
pub fn capability(rates: &[u32]) -> Result<f64, PathError> {
    if rates.is_empty() {
        return Err(PathError::EmptyPath);
    }
    if rates.contains(&0) {
        return Err(PathError::BlockedPath);
    }
    Ok(1.0 / rates.iter().map(|&c| 1.0 / f64::from(c)).sum::<f64>())
}

fn ordinary_rates(flow: &Flow) -> Vec<u32> {
    flow.ordinary_path.iter().map(|l| l.rate).collect()
}

/// The paths a flow can use, in (Direct, Ordinary) order.
fn available(flow: &Flow) -> Result<(bool, bool), PathError> {
    let pair = (flow.has_direct(), flow.has_ordinary());
    if pair == (false, false) {
        return Err(PathError::Unschedulable(flow.id));
    }
    Ok(pair)
}

pub fn select_path(flow: &Flow, beta: f64) -> Result<PathChoice, PathError> {
    if beta.is_nan() || beta < 1.0 {
        return Err(PathError::BadBeta(beta));
    }
    match available(flow)? {
        (true, false) => Ok(PathChoice::Direct),
        (false, true) => Ok(PathChoice::Ordinary),
        _ => {
            let direct = capability(&[flow.direct_link.expect("available").rate])?;
            let ordinary = capability(&ordinary_rates(flow))?;
            if direct / ordinary >= beta {
                Ok(PathChoice::Direct)
            } else {
                Ok(PathChoice::Ordinary)
            }
        }
    }
}

/// Applies a policy to every flow, keyed by flow id.
pub fn select_all(flows: &[Flow], policy: PathPolicy) -> Result<BTreeMap<u32, PathChoice>, PathError> {
    let mut rng = match policy {
        PathPolicy::RandomPerFlow { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };
    let mut out = BTreeMap::new();
    for flow in flows {
        let choice = match policy {
            PathPolicy::Beta(beta) => select_path(flow, beta)?,
            PathPolicy::AlwaysOrdinary => match available(flow)? {
                (_, true) => PathChoice::Ordinary,
                _ => PathChoice::Direct,
            },
            PathPolicy::RandomPerFlow { .. } => {
                let rng = rng.as_mut().expect("seeded above");
                match available(flow)? {
                    (true, true) => {
                        if rng.gen_bool(0.5) {
                            PathChoice::Direct
                        } else {
                            PathChoice::Ordinary
                        }
                    }
                    (true, false) => PathChoice::Direct,
                    _ => PathChoice::Ordinary,
                }
            }
        };
        out.insert(flow.id, choice);
    }
    Ok(out)
}
