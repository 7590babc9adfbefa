//! Differential measurement of search-engine censorship.
//!
//! The crate is organised around the measurement pipeline:
//!
//! * [`corpus`] loads, merges and transcodes the word sets that drive a campaign.
//! * [`engine`] builds per-engine requests and parses result pages.
//! * [`crawler`] runs campaigns: pacing, failure classification, recovery and retries.
//! * [`store`] persists query records and run manifests as newline-delimited JSON.
//! * [`analyzer`] turns stored runs into hit-ratio, quotation, banner, reset,
//!   whitelist and blacklist findings.
//! * [`simnet`] is a simulated censoring ecosystem with planted policies, used as
//!   ground truth by the test suites and served over loopback HTTP by the CLI.
//! * [`cli`] binds the above into the `censorlab` command.

pub mod analyzer;
pub mod cli;
pub mod corpus;
pub mod crawler;
pub mod engine;
pub mod simnet;
pub mod store;

pub use corpus::{Category, CategoryLexicon, Corpus, Encoding, SetId, Word, WordSet};
pub use engine::{EngineId, EngineProfile, ParsedResponse, ResultEntry};
pub use store::{QueryRecord, RunManifest};
