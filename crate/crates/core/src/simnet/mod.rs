//! A simulated censoring ecosystem: self-censoring search engines over a
//! shared synthetic index, behind a keyword-triggered reset middlebox.
//!
//! Every policy is planted, so every detector in [`crate::analyzer`] has a
//! ground truth to recover. The network can be driven in process through
//! [`SimTransport`] on a simulated clock, or served over loopback HTTP by
//! [`SimServer`].

mod engine;
mod index;
mod middlebox;
mod oracle;
mod policy;
mod scenario;
mod server;
mod synth;

pub use engine::{render_page, serve_query, SimEngine, SimResponse, APOLOGY_TEXT, RATE_LIMIT_BODY};
pub use index::{generate_index, DocClass, Document, IndexSpec, ProbeDocument, SimIndex};
pub use middlebox::{gfw_filter, keyword_forms, FilterVerdict, Middlebox};
pub use oracle::{
    oracle_expected_report, BannerExpectation, BlacklistExpectation, ExpectedReport,
    OracleCampaign, QuotationExpectation, RatioExpectation, ResetExpectation,
};
pub use policy::{
    MiddleboxOverride, MiddleboxPolicy, PolicyOverride, RobotDetection, RobotPolicy, RobotReaction,
    SimPolicy, LOOSE_REORDER_FACTOR,
};
pub use scenario::{
    CorpusSource, EngineSpec, NetOutcome, Scenario, SimNetwork, SimTransport,
    DEFAULT_BANNER_NEEDLE, DEFAULT_BANNER_TEXT,
};
pub use server::SimServer;
pub use synth::synthetic_words;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Corpus(#[from] crate::corpus::CorpusError),
    #[error(transparent)]
    Engine(#[from] crate::engine::EngineError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
