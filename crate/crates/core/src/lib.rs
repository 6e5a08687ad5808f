pub mod automaton;
pub mod composition;
pub mod synthesis;
pub mod osgi;
pub mod registry;
pub mod model_io;
pub mod fixtures;
pub mod cli;
