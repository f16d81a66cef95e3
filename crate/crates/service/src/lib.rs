//! Service layer for the triplegate engine: configuration loading, the
//! JSON-over-HTTP facade, scripted scenarios and the command-line driver.

pub mod api;
pub mod cli;
pub mod config;
pub mod scenario;

pub use api::{router, Api, ApiError, ErrorCode};
pub use config::{build_engine, ConfigError, EngineConfig, LoadedInputs};
pub use scenario::{run_scenario, run_scenario_on, ScenarioReport, ScenarioScript, ScriptError};
