//! The bundled example corpus: the protocol-version pair, the flight
//! booking models and OSGi deployments, plus a manifest of the outcome each
//! CLI command is expected to produce on them. The files also live under
//! `fixtures/` in the crate directory.

use crate::automaton::BehavioralType;
use crate::composition::ComponentSystem;
use crate::model_io::{load, ModelDocument};
use crate::osgi::{Step, SystemDef};

macro_rules! corpus {
    ($($name:literal),* $(,)?) => {
        /// Every fixture file as `(file name, contents)`.
        pub const FILES: &[(&str, &str)] = &[$(($name, include_str!(concat!("../fixtures/", $name)))),*];
    };
}

corpus!(
    "fig3_caller.btype",
    "fig3_callee.btype",
    "fig3.bsys",
    "fig3_restricted.bsys",
    "seat_reservation.btype",
    "middleware_outgoing.btype",
    "booking_two_flights.bsys",
    "booking.osys",
    "middleware_misordered.osys",
    "middleware_misordered.bscript",
    "middleware_misordered.log",
    "manifest.json",
);

/// Contents of fixture `name`.
pub fn text(name: &str) -> Option<&'static str> {
    FILES.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Names of the fixtures in the model format.
pub fn model_files() -> impl Iterator<Item = &'static str> {
    FILES
        .iter()
        .map(|(n, _)| *n)
        .filter(|n| [".btype", ".bsys", ".osys", ".bscript"].iter().any(|e| n.ends_with(e)))
}

/// Loads fixture `name`; panics if it is missing or malformed.
pub fn document(name: &str) -> ModelDocument {
    let text = text(name).unwrap_or_else(|| panic!("no fixture {name}"));
    load(text).unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

pub fn behavioral_type(name: &str) -> BehavioralType {
    document(name).into_behavioral_type().expect("behavioral type fixture")
}

pub fn component_system(name: &str) -> ComponentSystem {
    document(name).into_component_system().expect("component system fixture")
}

pub fn system_def(name: &str) -> SystemDef {
    document(name).into_system_def().expect("system definition fixture")
}

pub fn script(name: &str) -> Vec<Step> {
    document(name).into_script().expect("script fixture")
}

pub fn fig3_caller() -> BehavioralType {
    behavioral_type("fig3_caller.btype")
}

pub fn fig3_callee() -> BehavioralType {
    behavioral_type("fig3_callee.btype")
}

pub fn fig3() -> ComponentSystem {
    component_system("fig3.bsys")
}

pub fn seat_reservation() -> BehavioralType {
    behavioral_type("seat_reservation.btype")
}

pub fn middleware_outgoing() -> BehavioralType {
    behavioral_type("middleware_outgoing.btype")
}

pub fn booking_two_flights() -> ComponentSystem {
    component_system("booking_two_flights.bsys")
}

pub fn booking_osys() -> SystemDef {
    system_def("booking.osys")
}
