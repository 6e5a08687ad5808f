//! Services publish behavior models in the registry. A client looks for
//! partners it can talk to and picks the protocol version to use.

use std::collections::BTreeMap;

use behavior_types::fixtures;
use behavior_types::registry::{adapt_protocol, PropertyValue, Registry, BEHAVIOR};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let registry = Registry::new();
    let caller = fixtures::fig3_caller();
    let offer = |bt| BTreeMap::from([(BEHAVIOR.to_string(), PropertyValue::Behavior(vec![bt]))]);

    registry.register("legacy", vec!["Session".into()], offer(caller.mirrored()))?;
    registry.register("modern", vec!["Session".into()], offer(fixtures::fig3_callee()))?;

    for d in registry.discover_compatible(&caller) {
        println!(
            "service {} from {}: {} witness(es)",
            d.record.service_id,
            d.record.owner,
            d.verdict.witness_count()
        );
    }

    let chosen = adapt_protocol(&caller, &fixtures::fig3_callee())?;
    let names: Vec<&str> = chosen.iter().map(|l| l.name.as_str()).collect();
    println!("with the modern service, use: {}", names.join(", "));
    Ok(())
}
