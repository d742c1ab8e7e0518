//! Movement traces and their SVG rendering on a compiled circuit.

mod common;

use nacc::config::CompilerConfig;
use nacc::render::{parse_jsonl, render_svg, to_jsonl, trace_events, EventKind};
use nacc::{compile_qasm, CompileOptions};

use common::benchmarks;

#[test]
fn fredkin_alternates_home_and_mobile_configurations() {
    let src = benchmarks().into_iter().find(|(n, _)| n == "fredkin").unwrap().1;
    let config = CompilerConfig::default();
    let c = compile_qasm(&src, &config, &CompileOptions::default()).unwrap();
    let events = trace_events(&c.schedule, &config.hardware);
    assert_eq!(parse_jsonl(&to_jsonl(&events)).unwrap(), events);

    let moving = events.iter().find(|e| e.kind == EventKind::Move).expect("a move").layer;
    let still = (0..c.schedule.layers.len()).find(|l| events.iter().all(|e| e.layer != *l)).expect("a layer at home");
    let mobile = render_svg(&events, &c.topology, &c.aod, moving..moving + 1);
    let home = render_svg(&events, &c.topology, &c.aod, still..still + 1);
    // the move and its return
    let homings = events.iter().filter(|e| e.layer == moving && e.kind == EventKind::Homing).count();
    assert!(homings >= 1);
    assert!(mobile.matches("<line").count() > homings);
    assert!(mobile.contains("stroke-dasharray=\"4,2\""));
    assert_eq!(home.matches("<line").count(), 0);
    // same atoms and sites in both pictures
    let atoms = |s: &str| s.matches("font-size=\"10\">q").count();
    assert_eq!(atoms(&mobile), 3);
    assert_eq!(atoms(&home), 3);
}

#[test]
fn every_move_returns_home_when_homing() {
    let config = CompilerConfig::default();
    for (name, src) in benchmarks() {
        let c = compile_qasm(&src, &config, &CompileOptions::default()).unwrap();
        let events = trace_events(&c.schedule, &config.hardware);
        for e in events.iter().filter(|e| matches!(e.kind, EventKind::Move | EventKind::Induced)) {
            let back = events
                .iter()
                .any(|h| h.layer == e.layer && h.kind == EventKind::Homing && h.qubit == e.qubit && h.from == e.to && h.to == e.from);
            assert!(back, "{name}: q{} in layer {} stays away", e.qubit, e.layer);
        }
    }
}
