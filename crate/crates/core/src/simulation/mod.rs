//! Scenario-based data generation and Monte Carlo evaluation of familywise
//! error and local power.

mod scenario;
mod study;

pub use scenario::{builtin_scenario, builtin_scenarios, sample_scenario, EventLaw, Scenario, MAX_CENSORING};
pub use study::{
    binomial_band, run_data, run_study, ContrastRate, MethodSummary, SettingSummary, StudyConfig, StudyReport,
};
