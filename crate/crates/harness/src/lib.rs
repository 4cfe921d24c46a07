//! Randomized verification suites, best-constant probes and scenario
//! configs on top of the `orlicz-lorentz` core, driven by the `olz` CLI.

pub mod best_constant;
pub mod error;
pub mod generate;
pub mod inputs;
pub mod scenario;
pub mod suites;

pub use best_constant::{estimate_best_constant, BestConstant};
pub use error::{HarnessError, Result};
pub use generate::{generate, GenKind, Generated, SizeParams};
pub use scenario::{parse_config, run_config, run_scenario, Config, Expect, Overrides, RunSummary, Scenario, SuiteId};
pub use suites::{verify_inequality_suite, Suite, SuiteResult};
