//! One PASS/FAIL line per acceptance criterion. Runs without the libtest
//! harness; exits non-zero if any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use schemgen::agent::{run_pipeline, verify_replay, Agent, AgentConfig, LoopStatus, MockBackend};
use schemgen::eval::{check_correctness, format_table, summarize_trials, TrialRecord};
use schemgen::netlist::{parse_netlist, NetClass, TerminalRole};
use schemgen::placement::{read_layout, write_layout, SchematicLayout};
use schemgen::render::{render_svg, RenderOptions};
use schemgen::substructure::{detect, SubstructureKind, SubstructureMatch};
use schemgen::wiring::{priority_order, route_net, ConnectionTask, RoutingGrid, TerminalPoint};

use common::*;

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn deterministic_pipeline() -> Result<String, String> {
    let start = Instant::now();
    let mut notes = Vec::new();
    for name in FIXTURES {
        let c = fixture(name);
        let o = run_pipeline(name, &c, &AgentConfig::default(), None, None).map_err(|e| format!("{name}: {e}"))?;
        let r = &o.report;
        ensure(r.correct, || format!("{name}: {}", r.summary()))?;
        ensure(
            r.connectivity_failures.is_empty() && r.overlap_violations.is_empty() && r.short_circuits.is_empty(),
            || format!("{name}: non-empty violation lists"),
        )?;
        notes.push(format!("{name} composite {:.3}", r.composite()));
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 5.0, || format!("took {secs:.2} s"))?;
    Ok(format!("{}; {secs:.2} s total", notes.join(", ")))
}

fn oracle_equivalence() -> Result<String, String> {
    let mut checked = 0;
    let mut correct = 0;
    for name in FIXTURES {
        let c = fixture(name);
        let l = wired(&c);
        let r = check_correctness(&l, &c);
        ensure(verdict_of(&r) == oracle(&l, &c), || format!("{name}: verdicts differ"))?;
        checked += 1;
        correct += r.correct as usize;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for i in 0..500 {
        let (c, l) = random_layout(&mut rng, 8);
        let r = check_correctness(&l, &c);
        let o = oracle(&l, &c);
        ensure(verdict_of(&r) == o, || {
            format!(
                "layout {i}: report {:?} vs oracle {o:?}\n{}\n{}",
                verdict_of(&r),
                c.to_netlist_text(),
                write_layout(&l)
            )
        })?;
        checked += 1;
        correct += r.correct as usize;
    }
    Ok(format!(
        "{checked} layouts agree ({correct} correct, {} incorrect)",
        checked - correct
    ))
}

/// Expected rank for each net: power first, ground second, then the best
/// terminal role among Gate, Drain, Source, Bulk, and anything else last.
const PRIORITY_TABLE: [(&str, &[(&str, u8)]); 20] = [
    ("M1 D G S B NMOS", &[("G", 2), ("D", 3), ("S", 4), ("B", 5)]),
    ("M1 D G VDD VDD PMOS", &[("VDD", 0), ("G", 2), ("D", 3)]),
    ("M1 D G GND GND NMOS", &[("GND", 1), ("G", 2), ("D", 3)]),
    ("M1 VDD G GND GND NMOS", &[("VDD", 0), ("GND", 1), ("G", 2)]),
    ("M1 X X GND GND NMOS", &[("GND", 1), ("X", 2)]),
    ("M1 D G S S NMOS", &[("G", 2), ("D", 3), ("S", 4)]),
    ("M1 D D D D NMOS", &[("D", 2)]),
    ("R1 A B 1k", &[("A", 6), ("B", 6)]),
    ("R1 VDD B 1k", &[("VDD", 0), ("B", 6)]),
    ("C1 GND B 1p", &[("GND", 1), ("B", 6)]),
    ("V1 VCC 0 1", &[("VCC", 0), ("0", 1)]),
    (
        "I1 AVDD X 1u\nM1 X G AGND AGND NMOS",
        &[("AVDD", 0), ("AGND", 1), ("G", 2), ("X", 3)],
    ),
    (
        "M1 X G S B NMOS\nR1 X Y 1k",
        &[("G", 2), ("X", 3), ("S", 4), ("B", 5), ("Y", 6)],
    ),
    ("M1 A B C B NMOS\nM2 C A B C NMOS", &[("A", 2), ("B", 2), ("C", 3)]),
    (
        "M1 OUT IN VDD VDD PMOS\nM2 OUT IN GND GND NMOS",
        &[("VDD", 0), ("GND", 1), ("IN", 2), ("OUT", 3)],
    ),
    (
        "M1 P Q R W NMOS\nC1 W Z 1p",
        &[("Q", 2), ("P", 3), ("R", 4), ("W", 5), ("Z", 6)],
    ),
    ("M1 X Y Z VDD! PMOS", &[("VDD!", 0), ("Y", 2), ("X", 3), ("Z", 4)]),
    ("M1 X Y Z GND! NMOS", &[("GND!", 1), ("Y", 2), ("X", 3), ("Z", 4)]),
    (
        "M1 S1 G1 VSS VSS NMOS\nM2 S2 G1 VSS VSS NMOS",
        &[("VSS", 1), ("G1", 2), ("S1", 3), ("S2", 3)],
    ),
    (
        "R1 N1 N2 1k\nM1 N2 N3 N4 N4 NMOS",
        &[("N3", 2), ("N2", 3), ("N4", 4), ("N1", 6)],
    ),
];

fn wiring_contract() -> Result<String, String> {
    for (i, (text, expected)) in PRIORITY_TABLE.iter().enumerate() {
        let c = parse_netlist(text).map_err(|e| format!("case {i}: {e}"))?;
        let got: Vec<(String, u8)> = priority_order(&c)
            .into_iter()
            .map(|t| (t.net, t.priority_rank))
            .collect();
        let mut want: Vec<(String, u8)> = expected.iter().map(|(n, r)| (n.to_string(), *r)).collect();
        want.sort_by(|a, b| (a.1, &a.0).cmp(&(b.1, &b.0)));
        ensure(got == want, || format!("case {i} `{text}`: {got:?} != {want:?}"))?;
        // terminal order inside a task: Gate, Drain, Source, Bulk, then the rest
        for t in priority_order(&c) {
            let ranks: Vec<u8> = t
                .terminals
                .iter()
                .map(|p| match p.role {
                    TerminalRole::Gate => 0,
                    TerminalRole::Drain => 1,
                    TerminalRole::Source => 2,
                    TerminalRole::Bulk => 3,
                    _ => 4,
                })
                .collect();
            ensure(ranks.windows(2).all(|w| w[0] <= w[1]), || {
                format!("case {i}: terminal order {ranks:?}")
            })?;
        }
        // power, ground and class tags agree with the netlist
        for (n, r) in expected.iter() {
            let class = c.net_class(n);
            ensure((*r == 0) == (class == Some(NetClass::Power)), || {
                format!("case {i}: {n} class {class:?}")
            })?;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for i in 0..200 {
        use rand::Rng;
        let a = schemgen::placement::Point::new(rng.gen_range(0..=32), rng.gen_range(0..=32));
        let mut b = a;
        while b == a {
            b = schemgen::placement::Point::new(rng.gen_range(0..=32), rng.gen_range(0..=32));
        }
        let task = ConnectionTask {
            net: "N".into(),
            terminals: [a, b]
                .iter()
                .enumerate()
                .map(|(k, p)| TerminalPoint {
                    device: format!("D{k}"),
                    role: TerminalRole::Pin,
                    net: "N".into(),
                    point: *p,
                })
                .collect(),
            priority_rank: 6,
        };
        let mut g = RoutingGrid::new(32, 32);
        let wires = route_net(&task, &mut g).map_err(|e| format!("instance {i}: {e}"))?;
        let len = wires.iter().map(|w| w.length()).sum::<i32>() as u32;
        let oracle = bfs_distance(32, 32, a, b, &BTreeSet::new()).ok_or("oracle found no path")?;
        ensure(len == oracle, || {
            format!("instance {i} {a:?}->{b:?}: routed {len}, shortest {oracle}")
        })?;
        ensure(
            wires.first().and_then(|w| w.points.first()) == Some(&a)
                && wires.last().and_then(|w| w.points.last()) == Some(&b),
            || format!("instance {i}: path does not join the terminals"),
        )?;
    }

    let mut shared = 0;
    for name in FIXTURES {
        let l = wired(&fixture(name));
        shared += shared_edges(&l).len();
    }
    ensure(shared == 0, || format!("{shared} shared unit edges"))?;
    Ok("20 priority cases, 200 routes at oracle length, 0 shared edges on fixtures".into())
}

/// Building-block rules, checked directly against device terminals.
fn table_rule(m: &SubstructureMatch, c: &schemgen::netlist::Circuit) -> bool {
    let net = |dev: &str, role: TerminalRole| -> Option<String> {
        c.devices
            .iter()
            .find(|d| d.name == dev)?
            .terminals
            .iter()
            .find(|t| t.role == role)
            .map(|t| t.net.clone())
    };
    let kind = |dev: &str| c.devices.iter().find(|d| d.name == dev).map(|d| d.kind);
    let names: Vec<&str> = m.members.iter().map(|(d, _)| d.as_str()).collect();
    let distinct: BTreeSet<&str> = names.iter().copied().collect();
    if distinct.len() != names.len() || names.iter().any(|d| !matches!(kind(d), Some(k) if k.is_mos())) {
        return false;
    }
    let diode = |d: &str| net(d, TerminalRole::Gate) == net(d, TerminalRole::Drain);
    let is_supply = |n: &Option<String>| {
        n.as_deref()
            .and_then(|n| c.net_class(n))
            .is_some_and(|k| matches!(k, NetClass::Power | NetClass::Ground))
    };
    match (m.kind, names.as_slice()) {
        (SubstructureKind::DiodeConnected, [d]) => diode(d),
        (SubstructureKind::SingleCascode, [_]) => true,
        (SubstructureKind::SingleCurrentSource, [d]) => {
            let g = net(d, TerminalRole::Gate);
            is_supply(&net(d, TerminalRole::Source))
                && c.devices.iter().all(|o| {
                    o.terminals
                        .iter()
                        .all(|t| Some(&t.net) != g.as_ref() || t.role == TerminalRole::Gate)
                })
        }
        (SubstructureKind::DifferentialPair, [a, b]) => {
            kind(a) == kind(b) && net(a, TerminalRole::Source) == net(b, TerminalRole::Source)
        }
        (SubstructureKind::CurrentMirror, [a, b]) => {
            kind(a) == kind(b) && net(a, TerminalRole::Gate) == net(b, TerminalRole::Gate) && (diode(a) != diode(b))
        }
        (SubstructureKind::TwoTransistorCascode, [a, b]) => {
            kind(a) == kind(b)
                && net(a, TerminalRole::Gate) != net(b, TerminalRole::Gate)
                && (net(a, TerminalRole::Drain) == net(b, TerminalRole::Source)
                    || net(b, TerminalRole::Drain) == net(a, TerminalRole::Source))
        }
        _ => false,
    }
}

fn substructure_matcher() -> Result<String, String> {
    let ota = detect(&fixture("ota5t"));
    let kinds: BTreeSet<SubstructureKind> = ota.iter().map(|m| m.kind).collect();
    let want: BTreeSet<SubstructureKind> = [
        SubstructureKind::DifferentialPair,
        SubstructureKind::CurrentMirror,
        SubstructureKind::SingleCurrentSource,
    ]
    .into();
    ensure(kinds == want && ota.len() == 3, || format!("5T-OTA matches {ota:?}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let mut emitted = 0;
    for i in 0..1000 {
        let c = random_circuit(&mut rng, 8, i % 2 == 0);
        let ms = detect(&c);
        for m in &ms {
            ensure(table_rule(m, &c), || {
                format!("circuit {i}: {m:?} fails\n{}", c.to_netlist_text())
            })?;
        }
        let covered: BTreeSet<&str> = ms
            .iter()
            .flat_map(|m| m.members.iter().map(|(d, _)| d.as_str()))
            .collect();
        for d in c.mos_devices() {
            ensure(covered.contains(d.name.as_str()), || {
                format!("circuit {i}: {} uncovered", d.name)
            })?;
        }
        emitted += ms.len();
    }
    Ok(format!(
        "5T-OTA = {{DP, CM, SCS}}; {emitted} matches on 1000 random circuits all sound"
    ))
}

fn agent_budgets() -> Result<String, String> {
    let c = fixture("ota5t");
    let start = wired(&c);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    for (label, accept, place_want, wire_want) in [("never", false, 10, 20), ("always", true, 1, 1)] {
        let mut backend = if accept {
            MockBackend::always_accept()
        } else {
            MockBackend::never_accept(5)
        };
        let run_dir = dir.path().join(label);
        let mut agent =
            Agent::new(AgentConfig::default(), &mut backend, Some(run_dir.clone())).map_err(|e| e.to_string())?;
        let (placed, tp) = agent
            .run_placement_loop("ota5t", &c, &start)
            .map_err(|e| e.to_string())?;
        let (_, tw) = agent.run_wiring_loop("ota5t", &c, &placed).map_err(|e| e.to_string())?;
        ensure(tp.iterations() == place_want && tw.iterations() == wire_want, || {
            format!("{label}: {} / {} iterations", tp.iterations(), tw.iterations())
        })?;
        let status = if accept {
            LoopStatus::Accepted
        } else {
            LoopStatus::BudgetExhausted
        };
        ensure(tp.status == status && tw.status == status, || {
            format!("{label}: {:?}/{:?}", tp.status, tw.status)
        })?;
        let mut images = 0;
        for phase in ["placement", "wiring"] {
            images += verify_replay(&run_dir.join("run/ota5t").join(phase)).map_err(|e| e.to_string())?;
        }
        ensure(images == place_want + wire_want + 2, || {
            format!("{label}: {images} images replayed")
        })?;
        out.push(format!(
            "{label}-accept {}/{} ({images} images replayed)",
            tp.iterations(),
            tw.iterations()
        ));
    }
    Ok(out.join(", "))
}

fn golden_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn determinism_and_golden() -> Result<String, String> {
    let run = |name: &str, seed: u64| -> Result<(String, String, String), String> {
        let c = fixture(name);
        let cfg = AgentConfig {
            seed,
            ..Default::default()
        };
        let mut b = MockBackend::seeded(seed);
        let o = run_pipeline(name, &c, &cfg, Some(&mut b), None).map_err(|e| e.to_string())?;
        Ok((write_layout(&o.layout), o.svg, o.report.to_json()))
    };
    for name in FIXTURES {
        for seed in [1, 2] {
            ensure(run(name, seed)? == run(name, seed)?, || {
                format!("{name} seed {seed}: runs differ")
            })?;
        }
    }
    let mut files = 0;
    for name in FIXTURES {
        let dir = golden_dir();
        let layout_text =
            std::fs::read_to_string(dir.join(format!("{name}.layout.json"))).map_err(|e| e.to_string())?;
        let svg_text = std::fs::read_to_string(dir.join(format!("{name}.svg"))).map_err(|e| e.to_string())?;
        let c = fixture(name);
        let fresh = wired(&c);
        ensure(write_layout(&fresh) == layout_text, || {
            format!("{name}: layout differs from golden")
        })?;
        let (stored, _) = read_layout(layout_text.as_bytes()).map_err(|e| e.to_string())?;
        let svg = render_svg(&stored, &RenderOptions::default()).map_err(|e| e.to_string())?;
        ensure(svg == svg_text, || format!("{name}: render differs from golden"))?;
        files += 2;
    }
    let empty = render_svg(&SchematicLayout::default(), &RenderOptions::default()).map_err(|e| e.to_string())?;
    let stored = std::fs::read_to_string(golden_dir().join("empty.svg")).map_err(|e| e.to_string())?;
    ensure(empty == stored, || "empty render differs from golden".into())?;
    Ok(format!(
        "seeded runs repeat byte for byte; {} golden files match",
        files + 1
    ))
}

fn trials_table() -> Result<String, String> {
    let mut rows = Vec::new();
    for name in FIXTURES {
        let c = fixture(name);
        let mut records = Vec::new();
        for t in 0..10u64 {
            let cfg = AgentConfig {
                seed: t,
                ..Default::default()
            };
            let mut b = MockBackend::seeded(t);
            let o = run_pipeline(name, &c, &cfg, Some(&mut b), None).map_err(|e| e.to_string())?;
            let (place_iters, wire_iters) = o.iterations();
            records.push(TrialRecord {
                completed: !o.backend_failed(),
                report: o.report,
                place_iters,
                wire_iters,
            });
        }
        rows.push(summarize_trials(name, &records));
    }
    let table = format_table(&rows);
    let header = table.lines().next().unwrap_or("");
    for col in [
        "Correctness",
        "Aesthetics proxy",
        "Avg. Iter. for Placement",
        "Avg. Iter. for Wiring",
    ] {
        ensure(header.contains(col), || format!("missing column {col}"))?;
    }
    ensure(table.lines().count() == 2 + FIXTURES.len(), || {
        "unexpected row count".into()
    })?;
    Ok(format!("10 mock trials per circuit\n{table}"))
}

fn metric_invariance() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut tried = 0;
    while tried < 100 {
        use rand::Rng;
        let (c, l) = random_layout(&mut rng, 8);
        let m = detect(&c);
        let base = schemgen::eval::evaluate(&l, &c, &m);
        // room to move inside the grid
        let xs = l
            .components
            .iter()
            .flat_map(|k| {
                let b = k.bbox();
                [b.x0, b.x1]
            })
            .chain(l.wires.iter().flat_map(|w| w.points.iter().map(|p| p.x)));
        let ys = l
            .components
            .iter()
            .flat_map(|k| {
                let b = k.bbox();
                [b.y0, b.y1]
            })
            .chain(l.wires.iter().flat_map(|w| w.points.iter().map(|p| p.y)));
        let (minx, maxx) = xs.fold((i32::MAX, i32::MIN), |(a, b), x| (a.min(x), b.max(x)));
        let (miny, maxy) = ys.fold((i32::MAX, i32::MIN), |(a, b), y| (a.min(y), b.max(y)));
        if minx < 0 || miny < 0 || maxx > l.grid.width || maxy > l.grid.height {
            continue;
        }
        let dx = rng.gen_range(-minx..=l.grid.width - maxx);
        let dy = rng.gen_range(-miny..=l.grid.height - maxy);
        let moved = schemgen::eval::evaluate(&l.translated(dx, dy), &c, &m);
        let want = base.map_points(|p| schemgen::placement::Point::new(p.x + dx, p.y + dy));
        ensure(moved == want, || {
            format!("translation ({dx},{dy}) changed the report\n{}", write_layout(&l))
        })?;

        let axis = l.grid.width / 2;
        let mirrored = schemgen::eval::evaluate(&l.reflected_about(axis), &c, &m);
        let want = base.map_points(|p| schemgen::placement::Point::new(2 * axis - p.x, p.y));
        ensure(mirrored == want, || {
            format!("mirror changed the report\n{}", write_layout(&l))
        })?;
        tried += 1;
    }
    Ok("100 layouts: translated and mirrored reports equal".into())
}

fn main() {
    let criteria: [(&str, Check); 8] = [
        ("deterministic pipeline correctness", deterministic_pipeline),
        ("connectivity oracle equivalence", oracle_equivalence),
        ("wiring algorithm contract", wiring_contract),
        ("substructure matcher", substructure_matcher),
        ("agent loop budgets", agent_budgets),
        ("determinism and golden files", determinism_and_golden),
        ("indicative trials table", trials_table),
        ("metric invariances", metric_invariance),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match result {
            Ok(detail) => println!("PASS {}. {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {}. {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
