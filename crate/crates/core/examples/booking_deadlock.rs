//! Two people each want seats on two connecting flights. If each grabs one
//! flight first, neither can finish and nobody lets go.

use behavior_types::composition::detect_deadlocks;
use behavior_types::fixtures;
use behavior_types::synthesis::synthesize;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let system = fixtures::booking_two_flights();
    let verdict = detect_deadlocks(&system);
    println!("components: {}", verdict.components.join(", "));
    println!("explored {} states", verdict.explored);
    for t in &verdict.traces {
        let steps: Vec<&str> = t.trace.iter().map(|s| s.label.as_str()).collect();
        println!("deadlock at {} after {}", t.state, steps.join("; "));
    }

    // priorities alone cannot rescue this system
    let result = synthesize(&system, 1)?;
    println!("synthesis with one rule: {:?}", result.status);
    Ok(())
}
