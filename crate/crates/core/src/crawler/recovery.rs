use serde::{Deserialize, Serialize};

use super::pacing::PacingKind;
use super::transport::{SourceId, Transport};
use super::{classify_exchange, Clock, CrawlError, FailureClass};
use crate::engine::{build_request, EngineId, EngineProfile};

/// The innocuous query used to test whether an engine is reachable again.
pub const SENTINEL_QUERY: &str = "hello world";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecoveryTiming {
    /// Pause after a reset or timeout before the first probe.
    pub reset_wait_s: f64,
    /// Spacing of sentinel probes after a reset or timeout.
    pub probe_interval_s: f64,
    /// Pause after an HTTP 999 rate-limit response, and between probes.
    pub rate_limit_wait_s: f64,
    /// Give up on the engine when one incident lasts longer than this.
    pub deadline_s: f64,
}

impl Default for RecoveryTiming {
    fn default() -> Self {
        RecoveryTiming {
            reset_wait_s: 10.0,
            probe_interval_s: 10.0,
            rate_limit_wait_s: 300.0,
            deadline_s: 1800.0,
        }
    }
}

/// `(initial wait, probe interval)` for a failure class on an engine.
pub fn recovery_intervals(
    profile: &EngineProfile,
    failure: FailureClass,
    timing: &RecoveryTiming,
) -> (f64, f64) {
    let throttle = |wait: f64| match profile.pacing.kind {
        PacingKind::BurstUntilBlocked {
            resume_probe_interval_s,
        } => (wait, resume_probe_interval_s),
        _ => (wait, wait),
    };
    match failure {
        FailureClass::TcpReset | FailureClass::Timeout => {
            (timing.reset_wait_s, timing.probe_interval_s)
        }
        FailureClass::HttpError(999) => throttle(timing.rate_limit_wait_s),
        FailureClass::HttpError(_) | FailureClass::HtmlSoftBlock => {
            throttle(profile.pacing.cooldown_after_throttle_s)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub engine: EngineId,
    pub worker: u32,
    pub failure: FailureClass,
    pub blocked_since: f64,
    /// Send times of every sentinel probe, in order.
    pub probes: Vec<f64>,
    pub resumed_at: Option<f64>,
    pub deadline_exceeded: bool,
}

impl RecoveryReport {
    pub fn probes_sent(&self) -> usize {
        self.probes.len()
    }

    pub fn elapsed(&self) -> Option<f64> {
        self.resumed_at.map(|t| t - self.blocked_since)
    }
}

/// Recovery bookkeeping for one (worker, engine) incident.
#[derive(Debug, Clone)]
pub struct RecoveryState {
    pub engine: EngineId,
    pub worker: u32,
    pub failure: FailureClass,
    pub blocked_since: f64,
    pub probe_interval_s: f64,
    pub next_probe_at: f64,
    pub probes: Vec<f64>,
    deadline_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeStep {
    Continue,
    DeadlineExceeded,
}

impl RecoveryState {
    pub fn begin(
        profile: &EngineProfile,
        worker: u32,
        failure: FailureClass,
        at: f64,
        timing: &RecoveryTiming,
    ) -> Self {
        let (wait, interval) = recovery_intervals(profile, failure, timing);
        RecoveryState {
            engine: profile.id.clone(),
            worker,
            failure,
            blocked_since: at,
            probe_interval_s: interval,
            next_probe_at: at + wait,
            probes: Vec::new(),
            deadline_s: timing.deadline_s,
        }
    }

    pub fn deadline_passed(&self) -> bool {
        self.next_probe_at - self.blocked_since > self.deadline_s
    }

    /// Records a failed probe sent at `sent_at` and schedules the next one.
    /// A different failure class restarts the wait for that class.
    pub fn on_probe_failure(
        &mut self,
        profile: &EngineProfile,
        sent_at: f64,
        failure: FailureClass,
        timing: &RecoveryTiming,
    ) -> ProbeStep {
        self.probes.push(sent_at);
        if failure == self.failure {
            self.next_probe_at = sent_at + self.probe_interval_s;
        } else {
            let (wait, interval) = recovery_intervals(profile, failure, timing);
            self.failure = failure;
            self.probe_interval_s = interval;
            self.next_probe_at = sent_at + wait;
        }
        if self.deadline_passed() {
            ProbeStep::DeadlineExceeded
        } else {
            ProbeStep::Continue
        }
    }

    pub fn on_probe_success(mut self, sent_at: f64, finished_at: f64) -> RecoveryReport {
        self.probes.push(sent_at);
        self.report(Some(finished_at), false)
    }

    pub fn report(self, resumed_at: Option<f64>, deadline_exceeded: bool) -> RecoveryReport {
        RecoveryReport {
            engine: self.engine,
            worker: self.worker,
            failure: self.failure,
            blocked_since: self.blocked_since,
            probes: self.probes,
            resumed_at,
            deadline_exceeded,
        }
    }
}

/// Waits out a failure on `profile`, probing with the sentinel query until it
/// parses cleanly. Returns the recovery report, or `RecoveryDeadlineExceeded`.
pub fn recover(
    profile: &EngineProfile,
    worker: u32,
    failure: FailureClass,
    transport: &dyn Transport,
    clock: &dyn Clock,
    timing: &RecoveryTiming,
) -> Result<RecoveryReport, CrawlError> {
    let source = SourceId::worker(worker);
    let request = build_request(profile, SENTINEL_QUERY, false, 1)?;
    let mut state = RecoveryState::begin(profile, worker, failure, clock.now(), timing);
    if state.deadline_passed() {
        return Err(CrawlError::RecoveryDeadlineExceeded(Box::new(
            state.report(None, true),
        )));
    }
    loop {
        clock.sleep_until(state.next_probe_at);
        let sent_at = clock.now();
        let exchange = transport.exchange(&source, profile, &request, sent_at);
        let finished_at = sent_at + exchange.elapsed;
        clock.sleep_until(finished_at);
        match classify_exchange(profile, &exchange.outcome, 1) {
            Ok(_) => return Ok(state.on_probe_success(sent_at, finished_at)),
            Err(f) => {
                if state.on_probe_failure(profile, sent_at, f, timing)
                    == ProbeStep::DeadlineExceeded
                {
                    return Err(CrawlError::RecoveryDeadlineExceeded(Box::new(
                        state.report(None, true),
                    )));
                }
            }
        }
    }
}
