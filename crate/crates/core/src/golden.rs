//! Named end-to-end checks against frozen fixtures.

use std::fmt;

use thiserror::Error;

use crate::fixture::{sec3_example, Instance};
use crate::model::{validate_schedule, Schedule};
use crate::optimal::{sec3_example_lp, solve_exact, OptimalLimits};
use crate::pathsel::{select_all, PathChoice, PathPolicy};
use crate::radio::{db_to_linear, interference_radius, AlwaysPass, RadioParams};
use crate::sched::{d2dmac_schedule, fdmac_e_schedule, SchedulingInstance};

pub const GOLDEN_NAMES: [&str; 3] = ["sec3-example", "fdmac-e-example", "radius-sweep"];

pub const SEC3_EXAMPLE_LP: &str = include_str!("../fixtures/sec3-example.lp");
pub const RADIUS_SWEEP_CSV: &str = include_str!("../fixtures/radius-sweep.csv");

#[derive(Debug, Error)]
pub enum GoldenError {
    #[error("unknown golden `{0}` (expected one of: sec3-example, fdmac-e-example, radius-sweep)")]
    Unknown(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GoldenCheck {
    pub what: String,
    pub expected: String,
    pub actual: String,
}

impl GoldenCheck {
    fn new(what: &str, expected: impl ToString, actual: impl ToString) -> Self {
        Self { what: what.to_string(), expected: expected.to_string(), actual: actual.to_string() }
    }

    pub fn passed(&self) -> bool {
        self.expected == self.actual
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GoldenReport {
    pub name: String,
    pub checks: Vec<GoldenCheck>,
}

impl GoldenReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(GoldenCheck::passed)
    }
}

impl fmt::Display for GoldenReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}: {}", self.name, if self.passed() { "PASS" } else { "FAIL" })?;
        for c in &self.checks {
            if c.passed() {
                writeln!(f, "  ok   {}", c.what)?;
            } else {
                writeln!(f, "  FAIL {}", c.what)?;
                writeln!(f, "       expected: {}", c.expected.replace('\n', "\n                 "))?;
                writeln!(f, "       actual:   {}", c.actual.replace('\n', "\n                 "))?;
            }
        }
        Ok(())
    }
}

pub fn run_golden(name: &str) -> Result<GoldenReport, GoldenError> {
    let checks = match name {
        "sec3-example" => sec3_checks(),
        "fdmac-e-example" => fdmac_e_checks(),
        "radius-sweep" => radius_checks(),
        other => return Err(GoldenError::Unknown(other.to_string())),
    };
    Ok(GoldenReport { name: name.to_string(), checks })
}

/// Stage listing with node names, e.g. `[A>AP2 B>C D>AP1] x3`.
pub fn named_stages(s: &Schedule, inst: &Instance) -> String {
    s.stages
        .iter()
        .map(|st| {
            let links: Vec<String> =
                st.links.iter().map(|l| format!("{}>{}", inst.node_label(l.link.tx), inst.node_label(l.link.rx))).collect();
            format!("[{}] x{}", links.join(" "), st.slots)
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn choices_text(c: &std::collections::BTreeMap<u32, PathChoice>) -> String {
    c.iter().map(|(id, ch)| format!("{id}:{ch:?}")).collect::<Vec<_>>().join(" ")
}

fn sec3_checks() -> Vec<GoldenCheck> {
    let inst = sec3_example();
    let n = inst.node_count();
    let mut out = Vec::new();
    let choices = match select_all(&inst.flows, PathPolicy::Beta(2.0)) {
        Ok(c) => c,
        Err(e) => return vec![GoldenCheck::new("path selection", "ok", e)],
    };
    out.push(GoldenCheck::new("path choices at beta 2", "1:Ordinary 2:Direct 3:Direct 4:Direct", choices_text(&choices)));

    let schedule = SchedulingInstance::new(&inst.flows, &choices, n)
        .and_then(|si| d2dmac_schedule(&si, &AlwaysPass));
    match schedule {
        Ok(s) => {
            out.push(GoldenCheck::new(
                "D2DMAC stages",
                "[A>AP2 B>C D>AP1] x3 [AP1>B AP2>AP3] x3 [AP3>B] x3",
                named_stages(&s, &inst),
            ));
            out.push(GoldenCheck::new("D2DMAC total slots", 9, s.total_slots()));
            out.push(GoldenCheck::new("D2DMAC schedule valid", true, validate_schedule(&s, &inst.flows, n).is_valid()));
        }
        Err(e) => out.push(GoldenCheck::new("D2DMAC schedule", "ok", e)),
    }

    match solve_exact(&inst.flows, n, &AlwaysPass, &OptimalLimits::default()) {
        Ok(sol) => {
            out.push(GoldenCheck::new("exact optimum", 9, sol.total_slots));
            out.push(GoldenCheck::new("exact search completed", true, sol.optimal));
            out.push(GoldenCheck::new(
                "exact witness valid",
                true,
                validate_schedule(&sol.schedule, &inst.flows, n).is_valid(),
            ));
        }
        Err(e) => out.push(GoldenCheck::new("exact optimum", 9, e)),
    }

    let lp = sec3_example_lp();
    out.push(GoldenCheck::new("LP export matches frozen file", true, lp == SEC3_EXAMPLE_LP));
    out.push(GoldenCheck::new("LP export repeatable", true, lp == sec3_example_lp()));
    out
}

fn fdmac_e_checks() -> Vec<GoldenCheck> {
    let inst = sec3_example();
    let n = inst.node_count();
    let schedule = select_all(&inst.flows, PathPolicy::Beta(2.0))
        .map_err(|e| e.to_string())
        .and_then(|c| SchedulingInstance::new(&inst.flows, &c, n).map_err(|e| e.to_string()))
        .and_then(|si| fdmac_e_schedule(&si, &AlwaysPass).map_err(|e| e.to_string()));
    match schedule {
        Ok(s) => {
            let slots: Vec<String> = s.stages.iter().map(|st| st.slots.to_string()).collect();
            vec![
                GoldenCheck::new("FDMAC-E stage lengths", "3 3 2 3", slots.join(" ")),
                GoldenCheck::new("FDMAC-E total slots", 11, s.total_slots()),
                GoldenCheck::new("FDMAC-E schedule valid", true, validate_schedule(&s, &inst.flows, n).is_valid()),
            ]
        }
        Err(e) => vec![GoldenCheck::new("FDMAC-E schedule", "ok", e)],
    }
}

/// One point of an interference-radius curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadiusRow {
    pub ms_db: f64,
    pub interferers: u32,
    pub radius_m: f64,
}

/// Radius for each MS value and `F = 1..=max_interferers`, MS-major.
pub fn radius_table(params: &RadioParams, link_len: f64, ms_db: &[f64], max_interferers: u32) -> Vec<RadiusRow> {
    ms_db
        .iter()
        .flat_map(|&ms| {
            (1..=max_interferers).map(move |f| RadiusRow {
                ms_db: ms,
                interferers: f,
                radius_m: interference_radius(link_len, db_to_linear(ms), f, params),
            })
        })
        .collect()
}

/// The table behind the radius golden: default radio, 2 m link,
/// MS of 5, 8 and 10 dB, one to ten interferers.
pub fn reference_radius_table() -> Vec<RadiusRow> {
    radius_table(&RadioParams::default(), 2.0, &[5.0, 8.0, 10.0], 10)
}

pub fn radius_csv(rows: &[RadiusRow]) -> String {
    let mut out = String::from("ms_db,F,radius_m\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.ms_db, r.interferers, r.radius_m));
    }
    out
}

fn parse_radius_csv(text: &str) -> Option<Vec<RadiusRow>> {
    text.lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|l| {
            let mut it = l.split(',');
            let row = RadiusRow {
                ms_db: it.next()?.parse().ok()?,
                interferers: it.next()?.parse().ok()?,
                radius_m: it.next()?.parse().ok()?,
            };
            it.next().is_none().then_some(row)
        })
        .collect()
}

fn radius_checks() -> Vec<GoldenCheck> {
    let table = reference_radius_table();
    let mut out = Vec::new();
    let frozen = parse_radius_csv(RADIUS_SWEEP_CSV).unwrap_or_default();
    let agree = frozen.len() == table.len()
        && frozen.iter().zip(&table).all(|(a, b)| {
            a.ms_db == b.ms_db
                && a.interferers == b.interferers
                && (a.radius_m - b.radius_m).abs() <= 1e-9 * b.radius_m.abs()
        });
    out.push(GoldenCheck::new("radius table matches frozen values", true, agree));
    let increasing_in_f = table.chunks(10).all(|c| c.windows(2).all(|w| w[1].radius_m > w[0].radius_m));
    out.push(GoldenCheck::new("radius increases with F", true, increasing_in_f));
    let increasing_in_ms = (0..10).all(|f| table[f].radius_m < table[10 + f].radius_m && table[10 + f].radius_m < table[20 + f].radius_m);
    out.push(GoldenCheck::new("radius increases with MS", true, increasing_in_ms));
    let finite = table.iter().all(|r| r.radius_m.is_finite() && r.radius_m > 0.0);
    out.push(GoldenCheck::new("radius finite and positive", true, finite));
    out
}
