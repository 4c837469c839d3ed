//! Acceptance checks. Runs without the libtest harness so that each
//! criterion prints exactly one PASS/FAIL line.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use common::*;
use mechord::{
    affected_variables, bbn_to_sem, causal_ordering, check_equivalence, compare_marginals, intervene_bbn,
    is_triangularizable, roundtrip_check, sample, sem_structure, Assignment, Bbn, BbnNode, CausalOrdering, EquationId,
    StructureMatrix, VariableId,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 0x5eed_0001;

type Outcome = Result<(), String>;
type Criterion<'a> = (u32, Duration, Box<dyn Fn() -> Outcome + 'a>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Outcome {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn drunk_driving() -> StructureMatrix {
    StructureMatrix::from_named(&["m", "a", "d"], &[("e1", &["d"]), ("e2", &["a", "d"]), ("e3", &["m", "a"])]).unwrap()
}

fn nonstructural() -> StructureMatrix {
    StructureMatrix::from_named(&["m", "a", "d"], &[("e1", &["m", "a", "d"]), ("e2", &["a", "d"]), ("e3", &["m", "a"])])
        .unwrap()
}

fn seat_belts() -> StructureMatrix {
    StructureMatrix::from_named(
        &["m", "a", "d", "b"],
        &[("e1", &["d"]), ("e2", &["a", "d"]), ("e3", &["m", "a", "b"]), ("e4", &["b"])],
    )
    .unwrap()
}

fn xy() -> Bbn {
    Bbn::new(vec![
        BbnNode::new("x", &["X", "notX"], &[], vec![vec![0.4, 0.6]]),
        BbnNode::new("y", &["Y", "notY"], &[0], vec![vec![0.7, 0.3], vec![0.2, 0.8]]),
    ])
    .unwrap()
}

fn cluster_names(o: &CausalOrdering) -> Vec<(Vec<String>, usize)> {
    o.clusters
        .iter()
        .map(|c| (c.variables.iter().map(|&v| o.variable_name(v).to_string()).collect(), c.order))
        .collect()
}

fn edge_names(o: &CausalOrdering) -> BTreeSet<(String, String)> {
    o.variable_edges.iter().map(|&(u, v)| (o.variable_name(u).to_string(), o.variable_name(v).to_string())).collect()
}

fn named(pairs: &[(&str, &str)]) -> BTreeSet<(String, String)> {
    pairs.iter().map(|&(a, b)| (a.to_string(), b.to_string())).collect()
}

fn random_networks() -> Vec<Bbn> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    (0..500)
        .map(|_| {
            let n = rng.gen_range(1..=6);
            random_bbn(&mut rng, n, 4)
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let belts_order = causal_ordering(&seat_belts()).map_err(|e| e.to_string())?;
    let expected = vec![
        (vec!["d".to_string()], 0),
        (vec!["b".to_string()], 0),
        (vec!["a".to_string()], 1),
        (vec!["m".to_string()], 2),
    ];
    ensure(cluster_names(&belts_order) == expected, || {
        format!("seat-belt clusters {:?}", cluster_names(&belts_order))
    })?;
    ensure(edge_names(&belts_order) == named(&[("d", "a"), ("a", "m"), ("b", "m")]), || {
        format!("seat-belt edges {:?}", edge_names(&belts_order))
    })?;
    let base_order = causal_ordering(&drunk_driving()).map_err(|e| e.to_string())?;
    let chain = vec![(vec!["d".to_string()], 0), (vec!["a".to_string()], 1), (vec!["m".to_string()], 2)];
    ensure(cluster_names(&base_order) == chain, || format!("drunk-driving clusters {:?}", cluster_names(&base_order)))?;
    ensure(edge_names(&base_order) == named(&[("d", "a"), ("a", "m")]), || {
        format!("drunk-driving edges {:?}", edge_names(&base_order))
    })
}

fn criterion_2() -> Outcome {
    let m = nonstructural();
    let o = causal_ordering(&m).map_err(|e| e.to_string())?;
    ensure(o.clusters.len() == 1 && o.clusters[0].degree == 3, || format!("clusters {:?}", cluster_names(&o)))?;
    ensure(!is_triangularizable(&m).map_err(|e| e.to_string())?, || "nonstructural triangularized".into())
}

fn criterion_3(networks: &[Bbn]) -> Outcome {
    let mut worst = 0.0f64;
    for net in std::iter::once(&xy()).chain(networks) {
        let dev = check_equivalence(net, &bbn_to_sem(net)).map_err(|e| e.to_string())?;
        worst = worst.max(dev);
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:e}"))
}

fn criterion_4(networks: &[Bbn]) -> Outcome {
    for (k, net) in std::iter::once(&xy()).chain(networks).enumerate() {
        ensure(roundtrip_check(net), || format!("network {k}: roundtrip_check false"))?;
        let o = causal_ordering(&sem_structure(&bbn_to_sem(net))).map_err(|e| e.to_string())?;
        ensure(o.variable_edges == net.edges(), || format!("network {k}: recovered edges differ"))?;
    }
    Ok(())
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 5);
    let mut cyclic = 0;
    for k in 0..500 {
        let n = rng.gen_range(1..=10);
        let m = if k % 5 == 4 { random_acyclic(&mut rng, n) } else { random_self_contained(&mut rng, n, k % 2 == 0) };
        let o = causal_ordering(&m).map_err(|e| e.to_string())?;
        let all_degree_one = o.clusters.iter().all(|c| c.degree == 1);
        cyclic += usize::from(!all_degree_one);
        let tri = is_triangularizable(&m).map_err(|e| e.to_string())?;
        ensure(tri == all_degree_one, || format!("system {k}: triangularizable={tri}, degree one={all_degree_one}"))?;
        ensure(naive_ordering(&m).as_ref() == Some(&as_oracle(&o)), || {
            format!("system {k}: ordering differs from oracle")
        })?;
    }
    ensure(cyclic > 0, || "no cyclic systems generated".into())
}

fn criterion_6() -> Outcome {
    let names = |o: &CausalOrdering, set: BTreeSet<VariableId>| -> BTreeSet<String> {
        set.into_iter().map(|v| o.variable_name(v).to_string()).collect()
    };
    let set = |xs: &[&str]| -> BTreeSet<String> { xs.iter().map(|s| s.to_string()).collect() };
    let base_order = causal_ordering(&drunk_driving()).map_err(|e| e.to_string())?;
    let belts_order = causal_ordering(&seat_belts()).map_err(|e| e.to_string())?;
    let cases =
        [(&base_order, 2, set(&["m"])), (&base_order, 0, set(&["d", "a", "m"])), (&belts_order, 3, set(&["b", "m"]))];
    for (o, e, expected) in cases {
        let got = names(o, affected_variables(o, EquationId(e)).map_err(|e| e.to_string())?);
        ensure(got == expected, || format!("e{}: {got:?}", e + 1))?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 6);
    for k in 0..200 {
        let n = rng.gen_range(1..=6);
        let net = random_bbn(&mut rng, n, 4);
        let target = VariableId(rng.gen_range(0..n));
        let dist = random_distribution(&mut rng, net.node(target).cardinality());
        let after = intervene_bbn(&net, target, &dist).map_err(|e| e.to_string())?;
        let downstream = net.descendants(target);
        for (v, dev) in compare_marginals(&net, &after).map_err(|e| e.to_string())? {
            if v != target && !downstream.contains(&v) {
                ensure(dev <= 1e-12, || format!("pair {k}: node {} moved by {dev:e}", v.0))?;
            }
        }
    }
    Ok(())
}

fn criterion_7() -> Outcome {
    let net = xy();
    let sem = bbn_to_sem(&net);
    let draws = 200_000;
    let first = sample(&sem, 42, draws);
    for a in net.assignments().map_err(|e| e.to_string())? {
        let exact = net.joint_probability(&a).map_err(|e| e.to_string())?;
        let freq = first.frequency(&a);
        ensure((freq - exact).abs() <= 0.01, || format!("cell {:?}: {freq} vs {exact}", a.0))?;
    }
    ensure(first.counts.keys().all(|a: &Assignment| a.0.len() == 2), || "malformed tally".into())?;
    let second = sample(&sem, 42, draws);
    ensure(first == second, || "same seed gave different tallies".into())
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 8);
    for k in 0..200 {
        let n = rng.gen_range(1..=8);
        let m = random_self_contained(&mut rng, n, k % 2 == 0);
        let subset = |mask: u32| -> BTreeSet<EquationId> { bits(mask).into_iter().map(EquationId).collect() };
        let mut contained = Vec::new();
        for mask in 1u32..(1 << n) {
            if m.is_self_contained(&subset(mask)).map_err(|e| e.to_string())? {
                contained.push(mask);
            }
        }
        for &a in &contained {
            for &b in &contained {
                let both = a & b;
                if both != 0 && !brute_force_self_contained(&m, both) {
                    return Err(format!("system {k}: {:?} ∩ {:?} not self-contained", bits(a), bits(b)));
                }
            }
        }
    }
    Ok(())
}

fn main() {
    let networks = random_networks();
    let criteria: Vec<Criterion> = vec![
        (1, Duration::from_secs(1), Box::new(criterion_1)),
        (2, Duration::from_secs(1), Box::new(criterion_2)),
        (3, Duration::from_secs(30), Box::new(|| criterion_3(&networks))),
        (4, Duration::from_secs(30), Box::new(|| criterion_4(&networks))),
        (5, Duration::from_secs(60), Box::new(criterion_5)),
        (6, Duration::from_secs(30), Box::new(criterion_6)),
        (7, Duration::from_secs(5), Box::new(criterion_7)),
        (8, Duration::from_secs(30), Box::new(criterion_8)),
    ];
    let mut failed = 0;
    for (id, limit, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome =
            outcome.and_then(|()| ensure(elapsed < limit, || format!("took {:.2?}, limit {:?}", elapsed, limit)));
        match outcome {
            Ok(()) => println!("criterion {id}: PASS ({elapsed:.2?})"),
            Err(why) => {
                failed += 1;
                println!("criterion {id}: FAIL ({elapsed:.2?}) {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
