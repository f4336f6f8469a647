//! Scenario definitions, the futurized multi-locality driver, metrics
//! collection, and output emission.

pub mod codec;
pub mod config;
pub mod driver;
pub mod error;
pub mod metrics;
pub mod output;
pub mod reference;
pub mod scenario;
pub mod world;

pub use config::RunConfig;
pub use driver::{run, RunOutput};
pub use error::HarnessError;
pub use scenario::{scenario_library, Scenario};
