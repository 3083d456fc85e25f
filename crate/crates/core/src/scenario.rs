//! Scenario configuration (TOML) and the parallel sweep driver.
//!
//! ```toml
//! [deployment]
//! ap_count = 9
//! wn_count = 30
//! area_side = 50.0
//! backhaul = "grid"            # "grid" | "ring" | "star"
//!
//! [flows]
//! count = 30                   # defaults to the WN count
//! internet_fraction = 0.2
//!
//! [rates]
//! breakpoints = [[15.0, 3], [35.0, 2], [inf, 1]]
//! backhaul_rate = 3
//!
//! [radio]
//! sinr = "off"                 # "off" | "cone"
//! beam_half_angle_deg = 30.0
//!
//! [protocols]
//! run = ["d2dmac", "odmac", "rpdmac", "fdmac_e"]
//! betas = [2.0]
//!
//! [traffic]
//! mode = "poisson"             # or "ipp" with p1, ratio
//! loads = [0.5, 1.0]
//!
//! [frame]
//! overhead_slots = 3
//!
//! [run]
//! seeds = [1, 2, 3]
//! ```
//!
//! Every section and key is optional; unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{run_simulation_with, EngineError, FrameTrace, FrameConfig, MetricsReport, Protocol, SimSetup};
use crate::model::Flow;
use crate::optimal::OptimalLimits;
use crate::parallel;
use crate::radio::{AlwaysPass, BeamModel, ConcurrencyCheck, MsTable, RadioParams, SinrCheck};
use crate::topology::{generate_deployment, random_flows, BackhaulTopology, Deployment, RatePolicy, TopologyError};
use crate::traffic::{generate_arrivals, TrafficError, TrafficMode, TrafficSpec};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("config error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Traffic(#[from] TrafficError),
    #[error("{cell}: {source}")]
    Run { cell: String, source: EngineError },
    #[error("writing csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeploymentConfig {
    pub ap_count: usize,
    pub wn_count: usize,
    pub area_side: f64,
    pub backhaul: BackhaulTopology,
}

impl Default for DeploymentConfig {
    fn default() -> Self {
        Self { ap_count: 9, wn_count: 30, area_side: 50.0, backhaul: BackhaulTopology::Grid }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowConfig {
    /// Number of flows; the WN count when absent.
    pub count: Option<usize>,
    /// Share of flows to or from the gateway.
    pub internet_fraction: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self { count: None, internet_fraction: 0.2 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SinrMode {
    /// Nonadjacent links never interfere.
    #[default]
    Off,
    /// SINR test with beam cones.
    Cone,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioConfig {
    pub tx_power_mw: f64,
    pub reference_loss_db: f64,
    pub path_loss_exponent: f64,
    pub mui_factor: f64,
    pub bandwidth_hz: f64,
    pub noise_dbm_per_hz: f64,
    /// `[rate, dB]` pairs.
    pub ms_db: Vec<(u32, f64)>,
    pub sinr: SinrMode,
    pub beam_half_angle_deg: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            tx_power_mw: 0.1,
            reference_loss_db: 68.0,
            path_loss_exponent: 2.0,
            mui_factor: 1.0,
            bandwidth_hz: 1.76e9,
            noise_dbm_per_hz: -174.0,
            ms_db: vec![(1, 5.0), (2, 8.0), (3, 10.0)],
            sinr: SinrMode::Off,
            beam_half_angle_deg: 30.0,
        }
    }
}

impl RadioConfig {
    pub fn params(&self) -> RadioParams {
        RadioParams::from_units(
            self.tx_power_mw,
            self.reference_loss_db,
            self.path_loss_exponent,
            self.mui_factor,
            self.bandwidth_hz,
            self.noise_dbm_per_hz,
        )
    }

    pub fn ms_table(&self) -> MsTable {
        MsTable::from_db(&self.ms_db)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolName {
    D2dmac,
    Odmac,
    Rpdmac,
    FdmacE,
    Optimal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolConfig {
    pub run: Vec<ProtocolName>,
    /// Path selection parameters tried for D2DMAC.
    pub betas: Vec<f64>,
    pub optimal_max_flows: usize,
    pub optimal_max_hops: usize,
    pub optimal_time_budget_s: f64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        let limits = OptimalLimits::default();
        Self {
            run: vec![ProtocolName::D2dmac, ProtocolName::Odmac, ProtocolName::Rpdmac, ProtocolName::FdmacE],
            betas: vec![2.0],
            optimal_max_flows: limits.max_flows,
            optimal_max_hops: limits.max_total_hops,
            optimal_time_budget_s: limits.time_budget.map_or(0.0, |d| d.as_secs_f64()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawTraffic", into = "RawTraffic")]
pub struct TrafficConfig {
    pub mode: TrafficMode,
    pub loads: Vec<f64>,
    pub packet_bits: u64,
    pub reference_rate_bps: f64,
    pub burst_max: u32,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        RawTraffic::default().into()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ModeName {
    #[default]
    Poisson,
    Ipp,
}

// flat on-disk form of the traffic section
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawTraffic {
    mode: ModeName,
    p1: f64,
    ratio: f64,
    loads: Vec<f64>,
    packet_bits: u64,
    reference_rate_bps: f64,
    burst_max: u32,
}

impl Default for RawTraffic {
    fn default() -> Self {
        Self {
            mode: ModeName::Poisson,
            p1: 0.5,
            ratio: 10.0,
            loads: vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0],
            packet_bits: 8000,
            reference_rate_bps: 2e9,
            burst_max: 5,
        }
    }
}

impl From<RawTraffic> for TrafficConfig {
    fn from(r: RawTraffic) -> Self {
        let mode = match r.mode {
            ModeName::Poisson => TrafficMode::Poisson,
            ModeName::Ipp => TrafficMode::Ipp { p1: r.p1, ratio: r.ratio },
        };
        Self { mode, loads: r.loads, packet_bits: r.packet_bits, reference_rate_bps: r.reference_rate_bps, burst_max: r.burst_max }
    }
}

impl From<TrafficConfig> for RawTraffic {
    fn from(t: TrafficConfig) -> Self {
        let (mode, p1, ratio) = match t.mode {
            TrafficMode::Poisson => (ModeName::Poisson, 0.5, 10.0),
            TrafficMode::Ipp { p1, ratio } => (ModeName::Ipp, p1, ratio),
        };
        Self { mode, p1, ratio, loads: t.loads, packet_bits: t.packet_bits, reference_rate_bps: t.reference_rate_bps, burst_max: t.burst_max }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seeds: Vec<u64>,
    /// WN counts to sweep; `deployment.wn_count` alone when empty.
    pub wn_counts: Vec<usize>,
    /// Worker threads, 0 for one per core.
    pub threads: usize,
    pub output: Option<String>,
    pub summary: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { seeds: (1..=10).collect(), wn_counts: Vec::new(), threads: 0, output: None, summary: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub deployment: DeploymentConfig,
    pub flows: FlowConfig,
    pub rates: RatePolicy,
    pub radio: RadioConfig,
    pub protocols: ProtocolConfig,
    pub traffic: TrafficConfig,
    pub frame: FrameConfig,
    pub run: RunConfig,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: &str| Err(ScenarioError::Invalid(m.to_string()));
        if self.deployment.ap_count == 0 {
            return bad("deployment.ap_count must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.flows.internet_fraction) {
            return bad("flows.internet_fraction must lie in [0, 1]");
        }
        if !self.rates.is_well_formed() {
            return bad("rates.breakpoints must have increasing distances and non-increasing rates");
        }
        if !self.radio.ms_table().is_monotone() {
            return bad("radio.ms_db must increase with rate");
        }
        if self.protocols.betas.iter().any(|b| b.is_nan() || *b < 1.0) {
            return bad("protocols.betas must all be >= 1");
        }
        if self.protocols.run.contains(&ProtocolName::D2dmac) && self.protocols.betas.is_empty() {
            return bad("protocols.betas is empty but d2dmac is selected");
        }
        if self.traffic.loads.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return bad("traffic.loads must be non-negative");
        }
        if let TrafficMode::Ipp { p1, ratio } = self.traffic.mode {
            if !(0.0..=1.0).contains(&p1) || !(ratio > 0.0 && ratio.is_finite()) {
                return bad("traffic.p1 must lie in [0, 1] and traffic.ratio must be positive");
            }
        }
        if self.frame.slot_seconds.is_nan() || self.frame.slot_seconds <= 0.0 || self.frame.sim_seconds < 0.0 {
            return bad("frame.slot_seconds must be positive and frame.sim_seconds non-negative");
        }
        Ok(())
    }

    pub fn wn_counts(&self) -> Vec<usize> {
        if self.run.wn_counts.is_empty() {
            vec![self.deployment.wn_count]
        } else {
            self.run.wn_counts.clone()
        }
    }

    /// Protocol variants in output order.
    pub fn protocols(&self) -> Vec<Protocol> {
        let mut out = Vec::new();
        for name in &self.protocols.run {
            match name {
                ProtocolName::D2dmac => out.extend(self.protocols.betas.iter().map(|&beta| Protocol::D2dmac { beta })),
                ProtocolName::Odmac => out.push(Protocol::Odmac),
                ProtocolName::Rpdmac => out.push(Protocol::Rpdmac),
                ProtocolName::FdmacE => out.push(Protocol::FdmacE),
                ProtocolName::Optimal => out.push(Protocol::Optimal),
            }
        }
        out
    }

    pub fn optimal_limits(&self) -> OptimalLimits {
        let budget = self.protocols.optimal_time_budget_s;
        OptimalLimits {
            max_flows: self.protocols.optimal_max_flows,
            max_total_hops: self.protocols.optimal_max_hops,
            time_budget: (budget > 0.0).then(|| std::time::Duration::from_secs_f64(budget)),
        }
    }

    pub fn concurrency_check(&self, deployment: &Deployment) -> Box<dyn ConcurrencyCheck> {
        match self.radio.sinr {
            SinrMode::Off => Box::new(AlwaysPass),
            SinrMode::Cone => Box::new(SinrCheck {
                params: self.radio.params(),
                ms: self.radio.ms_table(),
                model: BeamModel::Cone { half_angle_rad: self.radio.beam_half_angle_deg.to_radians() },
                positions: deployment.positions(),
            }),
        }
    }
}

/// A generated network with its flows; demands are zero.
#[derive(Clone, Debug)]
pub struct Network {
    pub deployment: Deployment,
    pub flows: Vec<Flow>,
}

/// Deployment and flow set for one WN count and seed; shared by every
/// protocol and load.
pub fn build_network(cfg: &ScenarioConfig, wn_count: usize, seed: u64) -> Result<Network, ScenarioError> {
    let d = &cfg.deployment;
    let deployment = generate_deployment(d.ap_count, wn_count, d.area_side, d.backhaul, seed)?;
    let total = cfg.flows.count.unwrap_or(wn_count);
    let internet = (total as f64 * cfg.flows.internet_fraction).round() as usize;
    let flows = random_flows(&deployment, &cfg.rates, total - internet, internet, seed ^ 0x5EED_F10F)?;
    Ok(Network { deployment, flows })
}

pub fn traffic_spec(cfg: &ScenarioConfig, load: f64, flow_count: usize) -> Result<TrafficSpec, ScenarioError> {
    let t = &cfg.traffic;
    Ok(TrafficSpec::for_load(t.mode, load, t.packet_bits, flow_count.max(1), t.reference_rate_bps, t.burst_max)?)
}

/// One sweep cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub protocol: Protocol,
    pub load: f64,
    pub wn_count: usize,
    pub seed: u64,
}

impl Cell {
    fn describe(&self) -> String {
        format!(
            "{} beta={:?} load={} wn={} seed={}",
            self.protocol.label(),
            self.protocol.beta(),
            self.load,
            self.wn_count,
            self.seed
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub cell: Cell,
    pub report: MetricsReport,
}

/// Cells in canonical order: protocol, load, WN count, seed.
pub fn cells(cfg: &ScenarioConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for protocol in cfg.protocols() {
        for &load in &cfg.traffic.loads {
            for wn_count in cfg.wn_counts() {
                for &seed in &cfg.run.seeds {
                    out.push(Cell { protocol, load, wn_count, seed });
                }
            }
        }
    }
    out
}

pub fn run_cell(cfg: &ScenarioConfig, cell: &Cell) -> Result<CellResult, ScenarioError> {
    run_cell_with(cfg, cell, &mut |_| {})
}

/// [`run_cell`] with a per-frame observer.
pub fn run_cell_with(
    cfg: &ScenarioConfig,
    cell: &Cell,
    observer: &mut dyn FnMut(&FrameTrace<'_>),
) -> Result<CellResult, ScenarioError> {
    let net = build_network(cfg, cell.wn_count, cell.seed)?;
    let spec = traffic_spec(cfg, cell.load, net.flows.len())?;
    let ids: Vec<u32> = net.flows.iter().map(|f| f.id).collect();
    let arrivals = generate_arrivals(&spec, &ids, cfg.frame.horizon_slots(), cfg.frame.slot_seconds, cell.seed);
    let check = cfg.concurrency_check(&net.deployment);
    let setup = SimSetup {
        flows: &net.flows,
        node_count: net.deployment.nodes.len(),
        arrivals: &arrivals,
        check: check.as_ref(),
        frame: cfg.frame,
        limits: cfg.optimal_limits(),
        seed: cell.seed,
    };
    let out = run_simulation_with(&setup, cell.protocol, observer).map_err(|source| ScenarioError::Run { cell: cell.describe(), source })?;
    Ok(CellResult { cell: *cell, report: out.report })
}

/// Runs every cell (in parallel with the `parallel` feature) and returns
/// the results in canonical order.
pub fn run_sweep(cfg: &ScenarioConfig) -> Result<Vec<CellResult>, ScenarioError> {
    let all = cells(cfg);
    parallel::with_threads(cfg.run.threads, || parallel::map_ordered(&all, |c| run_cell(cfg, c)))
        .into_iter()
        .collect()
}

/// Same as [`run_sweep`] on the calling thread only.
pub fn run_sweep_sequential(cfg: &ScenarioConfig) -> Result<Vec<CellResult>, ScenarioError> {
    cells(cfg).iter().map(|c| run_cell(cfg, c)).collect()
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub const CSV_HEADER: [&str; 12] = [
    "protocol",
    "beta",
    "load",
    "traffic_mode",
    "wn_count",
    "seed",
    "avg_delay_slots",
    "network_throughput",
    "flow_delay_bw",
    "flow_delay_in",
    "flow_tp_bw",
    "flow_tp_in",
];

/// One row per cell.
pub fn results_csv(cfg: &ScenarioConfig, results: &[CellResult]) -> Result<String, ScenarioError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in results {
        let m = &r.report;
        w.write_record([
            r.cell.protocol.label().to_string(),
            opt(r.cell.protocol.beta()),
            r.cell.load.to_string(),
            cfg.traffic.mode.label().to_string(),
            r.cell.wn_count.to_string(),
            r.cell.seed.to_string(),
            opt(m.avg_delay),
            m.network_throughput.to_string(),
            opt(m.flow_delay_bw),
            opt(m.flow_delay_in),
            opt(m.flow_throughput_bw),
            opt(m.flow_throughput_in),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?).expect("csv output is utf-8"))
}

/// Means over seeds of one (protocol, load, WN count) group.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub protocol: Protocol,
    pub load: f64,
    pub wn_count: usize,
    pub seeds: usize,
    pub avg_delay: Option<f64>,
    pub throughput_mean: f64,
    pub throughput_min: u64,
    pub throughput_max: u64,
    pub flow_delay_bw: Option<f64>,
    pub flow_delay_in: Option<f64>,
    pub flow_tp_bw: Option<f64>,
    pub flow_tp_in: Option<f64>,
}

fn mean_of(xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = xs.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

pub fn summarize(results: &[CellResult]) -> Vec<SummaryRow> {
    // group in first-seen order, which is canonical for sweep output
    let mut order: Vec<(String, usize)> = Vec::new();
    let mut groups: BTreeMap<(String, usize), Vec<&CellResult>> = BTreeMap::new();
    for r in results {
        let key = (format!("{:?}|{}", r.cell.protocol, r.cell.load), r.cell.wn_count);
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let g = &groups[&key];
            let tp: Vec<u64> = g.iter().map(|r| r.report.network_throughput).collect();
            SummaryRow {
                protocol: g[0].cell.protocol,
                load: g[0].cell.load,
                wn_count: g[0].cell.wn_count,
                seeds: g.len(),
                avg_delay: mean_of(g.iter().map(|r| r.report.avg_delay)),
                throughput_mean: tp.iter().sum::<u64>() as f64 / tp.len() as f64,
                throughput_min: *tp.iter().min().expect("group is non-empty"),
                throughput_max: *tp.iter().max().expect("group is non-empty"),
                flow_delay_bw: mean_of(g.iter().map(|r| r.report.flow_delay_bw)),
                flow_delay_in: mean_of(g.iter().map(|r| r.report.flow_delay_in)),
                flow_tp_bw: mean_of(g.iter().map(|r| r.report.flow_throughput_bw)),
                flow_tp_in: mean_of(g.iter().map(|r| r.report.flow_throughput_in)),
            }
        })
        .collect()
}

pub fn summary_csv(cfg: &ScenarioConfig, rows: &[SummaryRow]) -> Result<String, ScenarioError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "protocol",
        "beta",
        "load",
        "traffic_mode",
        "wn_count",
        "seeds",
        "avg_delay_slots",
        "network_throughput",
        "network_throughput_min",
        "network_throughput_max",
        "flow_delay_bw",
        "flow_delay_in",
        "flow_tp_bw",
        "flow_tp_in",
    ])?;
    for r in rows {
        w.write_record([
            r.protocol.label().to_string(),
            opt(r.protocol.beta()),
            r.load.to_string(),
            cfg.traffic.mode.label().to_string(),
            r.wn_count.to_string(),
            r.seeds.to_string(),
            opt(r.avg_delay),
            r.throughput_mean.to_string(),
            r.throughput_min.to_string(),
            r.throughput_max.to_string(),
            opt(r.flow_delay_bw),
            opt(r.flow_delay_in),
            opt(r.flow_tp_bw),
            opt(r.flow_tp_in),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ScenarioConfig {
        ScenarioConfig::from_toml(
            r#"
            [deployment]
            wn_count = 8
            [traffic]
            loads = [1.0]
            [frame]
            sim_seconds = 0.005
            [run]
            seeds = [1, 2]
            "#,
        )
        .unwrap()
    }

    #[test]
    fn defaults_match_the_paper_setup() {
        let cfg = ScenarioConfig::from_toml("").unwrap();
        assert_eq!(cfg.deployment.ap_count, 9);
        assert_eq!(cfg.deployment.wn_count, 30);
        assert_eq!(cfg.deployment.area_side, 50.0);
        assert_eq!(cfg.frame.slot_seconds, 5e-6);
        assert_eq!(cfg.frame.delay_threshold, 10_000);
        assert_eq!(cfg.frame.horizon_slots(), 100_000);
        assert_eq!(cfg.traffic.packet_bits, 8000);
        assert_eq!(cfg.run.seeds.len(), 10);
        assert_eq!(cfg.protocols().len(), 4);
    }

    #[test]
    fn unknown_keys_name_the_field() {
        let err = ScenarioConfig::from_toml("[deployment]\nap_cuont = 4\n").unwrap_err().to_string();
        assert!(err.contains("ap_cuont"), "{err}");
        let err = ScenarioConfig::from_toml("[traffic]\nloads = [-1.0]\n").unwrap_err().to_string();
        assert!(err.contains("traffic.loads"), "{err}");
    }

    #[test]
    fn ipp_mode_parses() {
        let cfg = ScenarioConfig::from_toml("[traffic]\nmode = \"ipp\"\np1 = 0.3\nratio = 5.0\n").unwrap();
        assert_eq!(cfg.traffic.mode, TrafficMode::Ipp { p1: 0.3, ratio: 5.0 });
        let dflt = ScenarioConfig::from_toml("[traffic]\nmode = \"ipp\"\n").unwrap();
        assert_eq!(dflt.traffic.mode, TrafficMode::Ipp { p1: 0.5, ratio: 10.0 });
    }

    #[test]
    fn config_round_trips() {
        let cfg = small();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(ScenarioConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn sweep_is_deterministic_and_ordered() {
        let cfg = small();
        let a = run_sweep(&cfg).unwrap();
        assert_eq!(a.len(), 8);
        assert_eq!(a, run_sweep_sequential(&cfg).unwrap());
        let text = results_csv(&cfg, &a).unwrap();
        assert_eq!(text, results_csv(&cfg, &run_sweep(&cfg).unwrap()).unwrap());
        assert!(text.starts_with("protocol,beta,load,traffic_mode,wn_count,seed,"));
        let protocols: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
        assert_eq!(protocols, ["d2dmac", "d2dmac", "odmac", "odmac", "rpdmac", "rpdmac", "fdmac_e", "fdmac_e"]);
        let summary = summarize(&a);
        assert_eq!(summary.len(), 4);
        assert!(summary.iter().all(|r| r.seeds == 2));
    }

    #[test]
    fn empty_seed_list_gives_header_only() {
        let mut cfg = small();
        cfg.run.seeds.clear();
        let r = run_sweep(&cfg).unwrap();
        assert!(r.is_empty());
        assert_eq!(results_csv(&cfg, &r).unwrap().lines().count(), 1);
    }

    #[test]
    fn network_is_shared_across_loads() {
        let cfg = small();
        let a = build_network(&cfg, 8, 3).unwrap();
        let b = build_network(&cfg, 8, 3).unwrap();
        assert_eq!(a.flows, b.flows);
        assert_eq!(a.flows.len(), 8);
        assert_eq!(a.flows.iter().filter(|f| f.class == crate::model::FlowClass::Internet).count(), 2);
    }
}
