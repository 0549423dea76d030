//! File formats and the command-line runner around `gridflow-core`.

pub mod case;
pub mod compare;
pub mod output;
pub mod scenario;

pub use case::{load_case, read_case, LoadError};
pub use scenario::{parse_scenario, read_scenario};
