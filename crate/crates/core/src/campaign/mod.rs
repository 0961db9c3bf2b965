//! Campaign configuration, seeded Monte Carlo runs and the self-check suite.

pub mod config;
pub mod run;
pub mod verify;

pub use config::{BackendChoice, CampaignConfig};
pub use run::{run_campaign, run_trial, CampaignReport, CampaignSummary, CellSummary, GammaFit, TreeStats, TrialRecord, TRIAL_CSV_HEADER};
pub use verify::{dijkstra_check, extraction_corpus, tree_corpus, verify_suite, CheckResult, VerifyLevel, VerifyReport};
