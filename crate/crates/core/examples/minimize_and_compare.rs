//! Completes, minimizes and normalizes a seat reservation protocol, then
//! checks refinement against the original.

use behavior_types::automaton::{complete, equals, minimize, normalize, refines};
use behavior_types::fixtures;
use behavior_types::model_io::{save, ModelDocument, Payload};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seat = fixtures::seat_reservation();
    println!("seat: {} locations, {} edges", seat.locations.len(), seat.edges.len());

    let completed = complete(&seat, &seat.alphabet)?;
    let minimal = normalize(&minimize(&completed)?);
    println!("completed: {} locations, minimal: {}", completed.locations.len(), minimal.locations.len());

    let same = equals(&completed, &minimal, false);
    println!("completed == minimal as languages? {}", same.equal);
    if let Some(d) = &same.first_difference {
        println!("  first structural difference: {d}");
    }
    println!("minimal refines seat? {}", refines(&minimal, &seat, None)?.equal);

    print!("{}", save(&ModelDocument::new(Payload::BehavioralType(minimal))));
    Ok(())
}
