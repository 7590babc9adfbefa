//! Campaign orchestration: worker lanes, pacing, failure classification,
//! recovery and retries.
//!
//! A campaign is a set of cells `(word, engine, quoted)`. Each worker owns
//! one lane per engine and a lane has at most one request in flight. A
//! single dispatcher owns the per-engine task queues and every state
//! transition; only the network exchange itself may run concurrently.

mod campaign;
mod clock;
mod failure;
mod pacing;
mod recovery;
mod transport;

pub use campaign::{run_campaign, Campaign, CampaignOutcome, QuotedMode, MAX_ATTEMPTS};
pub use clock::{Clock, SimClock, SystemClock};
pub use failure::{classify_exchange, classify_failure, FailureClass, TransportOutcome};
pub use pacing::{schedule_delay, PacingKind, PacingPolicy};
pub use recovery::{
    recover, recovery_intervals, ProbeStep, RecoveryReport, RecoveryState, RecoveryTiming,
    SENTINEL_QUERY,
};
pub use transport::{Exchange, HttpTransport, SourceId, Transport};

use thiserror::Error;

use crate::engine::EngineError;
use crate::store::StoreError;

#[derive(Debug, Error)]
pub enum CrawlError {
    #[error("invalid campaign: {0}")]
    Config(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("recovery deadline exceeded on {} after {} probes", .0.engine, .0.probes.len())]
    RecoveryDeadlineExceeded(Box<RecoveryReport>),
}
