mod common;

use d2dmac::model::{are_adjacent, validate_schedule, Flow, HopRef, Schedule, ScheduledLink, Stage};
use d2dmac::optimal::{
    build_milp, default_stage_count, export_lp, parse_lp, point_from_schedule, sec3_example_lp, solve_exact, OptimalLimits,
    VarKind,
};
use d2dmac::pathsel::{select_all, PathPolicy};
use d2dmac::radio::AlwaysPass;
use d2dmac::sched::{d2dmac_schedule, SchedulingInstance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{exhaustive_optimum, path_options, random_instance};

fn heuristic_total(flows: &[Flow], n: usize) -> u64 {
    let choices = select_all(flows, PathPolicy::Beta(2.0)).unwrap();
    let inst = SchedulingInstance::new(flows, &choices, n).unwrap();
    d2dmac_schedule(&inst, &AlwaysPass).unwrap().total_slots()
}

#[test]
fn exact_matches_exhaustive_enumeration() {
    for seed in 0..100 {
        let (flows, n) = random_instance(seed, 4, 2);
        let sol = solve_exact(&flows, n, &AlwaysPass, &OptimalLimits::default()).unwrap();
        assert!(sol.optimal);
        assert_eq!(sol.total_slots, exhaustive_optimum(&flows, n), "seed {seed}");
        assert_eq!(sol.schedule.total_slots(), sol.total_slots);
        assert!(validate_schedule(&sol.schedule, &flows, n).is_valid(), "seed {seed}");
    }
}

#[test]
fn exact_never_worse_than_heuristic() {
    for seed in 1000..1200 {
        let (flows, n) = random_instance(seed, 4, 3);
        let sol = solve_exact(&flows, n, &AlwaysPass, &OptimalLimits::default()).unwrap();
        assert!(sol.total_slots <= heuristic_total(&flows, n), "seed {seed}");
        assert!(validate_schedule(&sol.schedule, &flows, n).is_valid(), "seed {seed}");
    }
}

/// Places every hop of the chosen paths in a stage, in all possible ways,
/// and keeps the cheapest point the model accepts.
fn brute_force_model(flows: &[Flow], n: usize, k: usize) -> Option<u64> {
    let m = build_milp("brute", flows, k, None).unwrap();
    let options: Vec<_> = flows.iter().map(path_options).collect();
    let combos: usize = options.iter().map(Vec::len).product();
    let mut best: Option<u64> = None;
    for code in 0..combos {
        let mut c = code;
        let mut chosen = Vec::new();
        for (f, o) in flows.iter().zip(&options) {
            let idx = c % o.len();
            c /= o.len();
            let direct = o[idx].len() == 1 && f.direct_link.is_some() && o[idx][0].0 == f.direct_link.unwrap();
            for (j, &(link, w)) in o[idx].iter().enumerate() {
                let hop = if direct { HopRef::Direct } else { HopRef::Ordinary(j) };
                chosen.push((ScheduledLink { flow: f.id, hop, link }, w));
            }
        }
        let places = k.pow(chosen.len() as u32);
        for mut p in 0..places {
            let mut stages = vec![Stage::default(); k];
            for &(l, w) in &chosen {
                let s = p % k;
                p /= k;
                stages[s].links.push(l);
                stages[s].slots = stages[s].slots.max(w);
            }
            let sched = Schedule { stages };
            let x = point_from_schedule(&m, &sched, k).unwrap();
            if m.check_point(&x, 1e-9).is_ok() {
                let total = sched.total_slots();
                best = Some(best.map_or(total, |b| b.min(total)));
                // a δ one slot short anywhere must be rejected
                if let Some(s) = sched.stages.iter().position(|s| s.slots > 0) {
                    let mut y = x.clone();
                    y[m.var_index(&format!("delta_{}", s + 1)).unwrap()] -= 1.0;
                    assert!(m.check_point(&y, 1e-9).is_err());
                }
            }
        }
    }
    let _ = n;
    best
}

#[test]
fn model_optimum_matches_oracle_for_several_stage_counts() {
    for seed in 0..40 {
        let (flows, n) = random_instance(500 + seed, 2, 2);
        let exact = solve_exact(&flows, n, &AlwaysPass, &OptimalLimits::default()).unwrap().total_slots;
        let k0 = default_stage_count(&flows);
        for k in [k0, k0 + 1] {
            assert_eq!(brute_force_model(&flows, n, k), Some(exact), "seed {seed}, K = {k}");
        }
    }
}

#[test]
fn witness_fits_larger_models_unchanged() {
    for seed in 0..50 {
        let (flows, n) = random_instance(700 + seed, 4, 3);
        let sol = solve_exact(&flows, n, &AlwaysPass, &OptimalLimits::default()).unwrap();
        let k0 = default_stage_count(&flows);
        for k in [k0, k0 + 3] {
            let m = build_milp("w", &flows, k, None).unwrap();
            let x = point_from_schedule(&m, &sol.schedule, k).unwrap();
            m.check_point(&x, 1e-9).unwrap();
            assert_eq!(m.objective_value(&x), sol.total_slots as f64);
        }
    }
}

#[test]
fn rlt_rows_hold_at_product_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for seed in 0..30 {
        let (flows, _) = random_instance(900 + seed, 4, 3);
        let k = default_stage_count(&flows);
        let m = build_milp("rlt", &flows, k, None).unwrap();
        let dmax = m.variables[0].upper.unwrap();
        for _ in 0..50 {
            let mut x = vec![0.0; m.variables.len()];
            for (i, v) in m.variables.iter().enumerate() {
                match v.kind {
                    VarKind::Binary => x[i] = f64::from(u8::from(rng.gen_bool(0.5))),
                    VarKind::Integer => x[i] = f64::from(rng.gen_range(0..=dmax as u32)),
                    VarKind::Continuous => {}
                }
            }
            // u_i_j_k = delta_k * b_i_j_k, v_i_k = delta_k * a_i_k
            for (i, v) in m.variables.iter().enumerate() {
                let parts: Vec<&str> = v.name.split('_').collect();
                let (bin, stage) = match parts[0] {
                    "u" => (format!("b_{}_{}_{}", parts[1], parts[2], parts[3]), parts[3]),
                    "v" => (format!("a_{}_{}", parts[1], parts[2]), parts[2]),
                    _ => continue,
                };
                let d = x[m.var_index(&format!("delta_{stage}")).unwrap()];
                x[i] = d * x[m.var_index(&bin).unwrap()];
            }
            for c in m.constraints.iter().filter(|c| c.name.starts_with("rlt")) {
                let lhs: f64 = c.terms.iter().map(|&(i, a)| a * x[i]).sum();
                assert!(lhs >= c.rhs - 1e-9, "{} violated", c.name);
            }
        }
    }
}

#[test]
fn model_size_matches_index_sets() {
    for seed in 0..40 {
        let (flows, _) = random_instance(1500 + seed, 4, 3);
        let k = default_stage_count(&flows);
        let m = build_milp("count", &flows, k, None).unwrap();

        let usable_hops: Vec<usize> = flows
            .iter()
            .map(|f| if f.ordinary_path.iter().all(|l| l.rate > 0) { f.ordinary_path.len() } else { 0 })
            .collect();
        let has_direct: Vec<usize> = flows.iter().map(|f| usize::from(f.direct_link.is_some_and(|l| l.rate > 0))).collect();
        let nb: usize = usable_hops.iter().sum();
        let na: usize = has_direct.iter().sum();
        assert_eq!(m.variables.len(), k + 2 * k * (nb + na));
        assert_eq!(m.count_kind(VarKind::Binary), k * (nb + na));

        let links: Vec<_> = flows
            .iter()
            .zip(&usable_hops)
            .flat_map(|(f, &h)| f.ordinary_path[..h].iter().copied())
            .chain(flows.iter().filter_map(|f| f.direct_link.filter(|l| l.rate > 0)))
            .collect();
        let mut adjacent = 0;
        for p in 0..links.len() {
            for q in p + 1..links.len() {
                adjacent += usize::from(are_adjacent(&links[p], &links[q]));
            }
        }
        let h_rows: usize = flows.iter().map(|f| f.ordinary_path.len().max(1)).sum();
        let path_rows = usable_hops.iter().filter(|&&h| h >= 2).count();
        let order_rows: usize = usable_hops.iter().map(|h| h.saturating_sub(1)).sum();
        let expected = 2 * h_rows + k * adjacent + k * path_rows + k * order_rows + 3 * k * (nb + na);
        assert_eq!(m.constraints.len(), expected, "seed {seed}");
        // the growth stays within (F·H_max)^2·K
        let fh = flows.len() * 3;
        assert!(m.constraints.len() <= 8 * fh * fh * k);
    }
}

#[test]
fn lp_export_is_stable_and_round_trips() {
    let text = sec3_example_lp();
    assert_eq!(text, sec3_example_lp());
    assert_eq!(text, include_str!("../fixtures/sec3-example.lp"));
    let parsed = parse_lp(&text).unwrap();
    assert_eq!(export_lp(&parsed), text);
    for seed in 0..20 {
        let (flows, _) = random_instance(2000 + seed, 4, 3);
        let m = build_milp("rt", &flows, 3, None).unwrap();
        assert_eq!(parse_lp(&export_lp(&m)).unwrap(), m);
    }
}
