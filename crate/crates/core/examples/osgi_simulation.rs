//! Runs the booking system on the component runtime: one seeded random
//! run, then an exhaustive look at every short schedule.

use behavior_types::fixtures;
use behavior_types::osgi::{explore_exhaustive, run_random};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let def = fixtures::booking_osys();

    let run = run_random(&def, seed, 40)?;
    println!("seed {seed}: {} steps, stuck = {}", run.steps.len(), run.stuck);
    print!("{}", run.state.log_text());

    for depth in [2, 4, 6] {
        let ex = explore_exhaustive(&def, depth)?;
        println!(
            "depth {depth}: {} maximal traces, {} terminal, {} blocked, {} at the frontier",
            ex.traces.len(),
            ex.terminal,
            ex.blocked,
            ex.frontier
        );
    }
    Ok(())
}
