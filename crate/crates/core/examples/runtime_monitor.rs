//! Watches middleware objects against their declared outgoing protocol,
//! first on healthy runs and then on a recorded misbehaving one.

use behavior_types::fixtures;
use behavior_types::osgi::{monitor, parse_log, run_random, MonitorVerdict};

fn report(what: &str, v: &MonitorVerdict) {
    match v {
        MonitorVerdict::Conformant { events } => println!("{what}: conformant over {events} events"),
        MonitorVerdict::Violation { seq, label } => println!("{what}: {label} at event {seq} is not allowed"),
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let protocol = fixtures::middleware_outgoing();

    let def = fixtures::booking_osys();
    for seed in 0..3 {
        let log = run_random(&def, seed, 200)?.state.log;
        report(&format!("seed {seed}, core/mw1"), &monitor(&log, ("core", "mw1"), &protocol));
    }

    let recorded = parse_log(fixtures::text("middleware_misordered.log").unwrap_or_default())?;
    report("recorded log, core/mw1", &monitor(&recorded, ("core", "mw1"), &protocol));
    Ok(())
}
