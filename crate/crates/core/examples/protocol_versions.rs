//! A caller that speaks two protocol versions meets a callee that only
//! understands the new one. Compatibility checking finds the bad offer and
//! priority synthesis removes it.

use behavior_types::composition::{analyze, check_compatibility};
use behavior_types::fixtures;
use behavior_types::synthesis::{explain, synthesize};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let system = fixtures::fig3();

    let before = check_compatibility(&system)?;
    println!("before restriction: {} witness(es)", before.incompatibilities.len());
    for w in &before.incompatibilities {
        println!("  at {}: {} offers {} but {} refuses", w.state, w.sender, w.label, w.refuser);
    }

    let result = synthesize(&system, 3)?;
    print!("{}", explain(&result));

    let restricted = system.apply_priorities(&result.rules)?;
    let after = analyze(&restricted)?;
    println!(
        "after restriction: {} deadlock(s), {} witness(es)",
        after.deadlocks.len(),
        after.incompatibilities.len()
    );
    Ok(())
}
