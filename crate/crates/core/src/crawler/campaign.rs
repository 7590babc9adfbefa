use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::path::PathBuf;
use std::sync::Arc;

use super::recovery::{ProbeStep, RecoveryReport, RecoveryState, RecoveryTiming, SENTINEL_QUERY};
use super::transport::{Exchange, SourceId, Transport};
use super::{classify_exchange, schedule_delay, Clock, CrawlError, TransportOutcome};
use crate::corpus::{Corpus, CorpusError};
use crate::engine::{
    build_request, EngineError, EngineId, EngineProfile, ParsedResponse, WireRequest,
};
use crate::store::{
    CampaignSnapshot, OutcomeCounts, QueryRecord, RecordOutcome, RunManifest, RunStore, RunWriter,
    SkipReason,
};

/// A keyword is tried at most this many times before it is given up.
pub const MAX_ATTEMPTS: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuotedMode {
    #[serde(alias = "false")]
    Unquoted,
    #[serde(alias = "true")]
    Quoted,
    Both,
}

impl QuotedMode {
    pub fn variants(self) -> &'static [bool] {
        match self {
            QuotedMode::Unquoted => &[false],
            QuotedMode::Quoted => &[true],
            QuotedMode::Both => &[false, true],
        }
    }
}

#[derive(Debug, Clone)]
pub struct Campaign {
    pub run_id: String,
    pub corpus: Arc<Corpus>,
    pub engines: Vec<EngineProfile>,
    pub quoted: QuotedMode,
    pub workers: u32,
    /// Result pages fetched per query, capped by each profile's `max_pages_fetched`.
    pub page_depth: u32,
    pub seed: u64,
    pub timing: RecoveryTiming,
    pub keep_bodies: bool,
}

impl Campaign {
    pub fn validate(&self) -> Result<(), CrawlError> {
        if self.workers < 1 {
            return Err(CrawlError::Config("workers must be at least 1".into()));
        }
        if self.page_depth < 1 {
            return Err(CrawlError::Config("page_depth must be at least 1".into()));
        }
        let mut ids: Vec<&EngineId> = self.engines.iter().map(|e| &e.id).collect();
        ids.sort();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(CrawlError::Config("engine ids must be unique".into()));
        }
        for e in &self.engines {
            e.validate()?;
        }
        Ok(())
    }

    pub fn snapshot(&self) -> CampaignSnapshot {
        CampaignSnapshot {
            corpus_hash: self.corpus.content_hash(),
            corpus_size: self.corpus.len() as u64,
            engines: self.engines.iter().map(|e| e.id.clone()).collect(),
            quoted: self.quoted,
            seed: self.seed,
            workers: self.workers,
            page_depth: self.page_depth,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CampaignOutcome {
    pub manifest: RunManifest,
    pub manifest_path: PathBuf,
    pub recoveries: Vec<RecoveryReport>,
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    word: usize,
    quoted: bool,
}

enum LaneState {
    Idle,
    Query {
        cell: Cell,
        attempt: u8,
        pages: Vec<ParsedResponse>,
        bodies: Vec<String>,
        started_at: f64,
    },
    Recover {
        pending: Option<(Cell, u8)>,
        state: Box<RecoveryState>,
    },
    Done,
}

struct Lane {
    worker: u32,
    engine: usize,
    source: SourceId,
    ready_at: f64,
    rng: ChaCha8Rng,
    state: LaneState,
}

struct Pending {
    lane: usize,
    request: WireRequest,
    page: u32,
    sent_at: f64,
}

struct Dispatcher<'a> {
    campaign: &'a Campaign,
    writer: RunWriter,
    clock: &'a dyn Clock,
    lanes: Vec<Lane>,
    queues: Vec<VecDeque<Cell>>,
    unavailable: Vec<bool>,
    counts: OutcomeCounts,
    recoveries: Vec<RecoveryReport>,
    last_finish: f64,
}

/// Runs one campaign to completion: every cell ends with exactly one
/// terminal record (parsed, gave-up or skipped) in the store.
pub fn run_campaign(
    campaign: &Campaign,
    store: &RunStore,
    transport: &dyn Transport,
    clock: &dyn Clock,
) -> Result<CampaignOutcome, CrawlError> {
    campaign.validate()?;
    let writer = store.create_run(&campaign.run_id)?;
    let started_at = clock.now();

    let mut queues = vec![VecDeque::new(); campaign.engines.len()];
    for queue in &mut queues {
        for word in 0..campaign.corpus.len() {
            for &quoted in campaign.quoted.variants() {
                queue.push_back(Cell { word, quoted });
            }
        }
    }
    let mut lanes = Vec::new();
    for worker in 0..campaign.workers {
        for engine in 0..campaign.engines.len() {
            let mut rng = ChaCha8Rng::seed_from_u64(campaign.seed);
            rng.set_stream(lanes.len() as u64);
            lanes.push(Lane {
                worker,
                engine,
                source: SourceId::worker(worker),
                ready_at: started_at,
                rng,
                state: LaneState::Idle,
            });
        }
    }

    let mut d = Dispatcher {
        campaign,
        writer,
        clock,
        lanes,
        queues,
        unavailable: vec![false; campaign.engines.len()],
        counts: OutcomeCounts::default(),
        recoveries: Vec::new(),
        last_finish: started_at,
    };
    d.run(transport)?;

    clock.sleep_until(d.last_finish);
    let manifest = RunManifest {
        run_id: campaign.run_id.clone(),
        snapshot: campaign.snapshot(),
        started_at,
        finished_at: d.last_finish.max(started_at),
        counts: d.counts.clone(),
        unavailable_engines: campaign
            .engines
            .iter()
            .zip(&d.unavailable)
            .filter(|(_, &u)| u)
            .map(|(e, _)| e.id.clone())
            .collect(),
    };
    let manifest_path = d.writer.write_manifest(&manifest)?;
    Ok(CampaignOutcome {
        manifest,
        manifest_path,
        recoveries: d.recoveries,
    })
}

impl Dispatcher<'_> {
    fn run(&mut self, transport: &dyn Transport) -> Result<(), CrawlError> {
        loop {
            let next = self
                .lanes
                .iter()
                .enumerate()
                .filter(|(_, l)| !matches!(l.state, LaneState::Done))
                .min_by(|a, b| a.1.ready_at.total_cmp(&b.1.ready_at).then(a.0.cmp(&b.0)));
            let Some((first, lane)) = next else {
                return Ok(());
            };
            self.clock.sleep_until(lane.ready_at);
            let now = self.clock.now();

            let batch: Vec<usize> = if transport.concurrent() {
                (0..self.lanes.len())
                    .filter(|&i| {
                        !matches!(self.lanes[i].state, LaneState::Done)
                            && self.lanes[i].ready_at <= now
                    })
                    .collect()
            } else {
                vec![first]
            };

            let mut pending = Vec::with_capacity(batch.len());
            for idx in batch {
                if let Some(p) = self.prepare(idx, now)? {
                    pending.push(p);
                }
            }
            let exchanges = self.exchange_all(transport, &pending);
            for (p, ex) in pending.into_iter().zip(exchanges) {
                self.apply(p, ex)?;
            }
        }
    }

    fn exchange_all(&self, transport: &dyn Transport, pending: &[Pending]) -> Vec<Exchange> {
        let send = |p: &Pending| {
            let lane = &self.lanes[p.lane];
            transport.exchange(
                &lane.source,
                &self.campaign.engines[lane.engine],
                &p.request,
                p.sent_at,
            )
        };
        if transport.concurrent() && pending.len() > 1 {
            std::thread::scope(|s| {
                let handles: Vec<_> = pending.iter().map(|p| s.spawn(move || send(p))).collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("transport thread panicked"))
                    .collect()
            })
        } else {
            pending.iter().map(send).collect()
        }
    }

    fn page_depth(&self, engine: usize) -> u32 {
        self.campaign
            .page_depth
            .min(self.campaign.engines[engine].max_pages_fetched)
            .max(1)
    }

    /// Moves a lane forward until it needs the network. Returns `None` when
    /// the lane finished without sending anything.
    fn prepare(&mut self, idx: usize, now: f64) -> Result<Option<Pending>, CrawlError> {
        loop {
            let engine = self.lanes[idx].engine;
            let profile = &self.campaign.engines[engine];
            let unavailable = self.unavailable[engine];
            let state = std::mem::replace(&mut self.lanes[idx].state, LaneState::Done);
            match state {
                LaneState::Done => return Ok(None),
                LaneState::Idle => {
                    if unavailable {
                        return Ok(None);
                    }
                    let Some(cell) = self.queues[engine].pop_front() else {
                        return Ok(None);
                    };
                    let word = &self.campaign.corpus.words[cell.word].text;
                    match build_request(profile, word, cell.quoted, 1) {
                        Ok(request) => {
                            self.lanes[idx].state = LaneState::Query {
                                cell,
                                attempt: 1,
                                pages: Vec::new(),
                                bodies: Vec::new(),
                                started_at: now,
                            };
                            return Ok(Some(Pending {
                                lane: idx,
                                request,
                                page: 1,
                                sent_at: now,
                            }));
                        }
                        Err(EngineError::Encoding(CorpusError::UnmappableCharacter {
                            ch,
                            encoding,
                        })) => {
                            let reason = SkipReason::Unmappable { ch, encoding };
                            self.emit(
                                idx,
                                cell,
                                1,
                                now,
                                now,
                                0,
                                RecordOutcome::Skipped { reason },
                                Vec::new(),
                            )?;
                            self.lanes[idx].state = LaneState::Idle;
                        }
                        Err(e) => return Err(e.into()),
                    }
                }
                LaneState::Query {
                    cell,
                    attempt,
                    pages,
                    bodies,
                    started_at,
                } => {
                    if unavailable {
                        self.skip_unavailable(idx, cell, attempt, now)?;
                        return Ok(None);
                    }
                    let page = pages.len() as u32 + 1;
                    let word = &self.campaign.corpus.words[cell.word].text;
                    let request = build_request(profile, word, cell.quoted, page)?;
                    let started_at = if pages.is_empty() { now } else { started_at };
                    self.lanes[idx].state = LaneState::Query {
                        cell,
                        attempt,
                        pages,
                        bodies,
                        started_at,
                    };
                    return Ok(Some(Pending {
                        lane: idx,
                        request,
                        page,
                        sent_at: now,
                    }));
                }
                LaneState::Recover { pending, state } => {
                    if unavailable {
                        if let Some((cell, attempt)) = pending {
                            self.skip_unavailable(idx, cell, attempt, now)?;
                        }
                        return Ok(None);
                    }
                    let request = build_request(profile, SENTINEL_QUERY, false, 1)?;
                    self.lanes[idx].state = LaneState::Recover { pending, state };
                    return Ok(Some(Pending {
                        lane: idx,
                        request,
                        page: 1,
                        sent_at: now,
                    }));
                }
            }
        }
    }

    fn apply(&mut self, p: Pending, ex: Exchange) -> Result<(), CrawlError> {
        let idx = p.lane;
        let engine = self.lanes[idx].engine;
        let worker = self.lanes[idx].worker;
        let profile = &self.campaign.engines[engine];
        let finished = p.sent_at + ex.elapsed;
        self.last_finish = self.last_finish.max(finished);
        let verdict = classify_exchange(profile, &ex.outcome, p.page);
        let state = std::mem::replace(&mut self.lanes[idx].state, LaneState::Done);

        match state {
            LaneState::Query {
                cell,
                attempt,
                mut pages,
                mut bodies,
                started_at,
            } => match verdict {
                Ok(parsed) => {
                    if self.campaign.keep_bodies {
                        if let TransportOutcome::Response { body, .. } = &ex.outcome {
                            bodies.push(self.writer.store_body(body)?);
                        }
                    }
                    pages.push(parsed);
                    let delay = schedule_delay(&profile.pacing, &mut self.lanes[idx].rng);
                    self.lanes[idx].ready_at = finished + delay;
                    if (pages.len() as u32) < self.page_depth(engine) {
                        self.lanes[idx].state = LaneState::Query {
                            cell,
                            attempt,
                            pages,
                            bodies,
                            started_at,
                        };
                    } else {
                        let n = pages.len() as u32;
                        self.emit(
                            idx,
                            cell,
                            attempt,
                            started_at,
                            finished,
                            n,
                            RecordOutcome::Parsed { pages },
                            bodies,
                        )?;
                        self.lanes[idx].state = LaneState::Idle;
                    }
                }
                Err(failure) => {
                    let n = pages.len() as u32;
                    self.emit(
                        idx,
                        cell,
                        attempt,
                        started_at,
                        finished,
                        n,
                        RecordOutcome::Failed { failure },
                        bodies,
                    )?;
                    let pending = if attempt >= MAX_ATTEMPTS {
                        self.emit(
                            idx,
                            cell,
                            attempt,
                            started_at,
                            finished,
                            n,
                            RecordOutcome::GaveUp,
                            Vec::new(),
                        )?;
                        None
                    } else {
                        Some((cell, attempt + 1))
                    };
                    let state = RecoveryState::begin(
                        profile,
                        worker,
                        failure,
                        finished,
                        &self.campaign.timing,
                    );
                    if state.deadline_passed() {
                        self.engine_unavailable(idx, pending, state, finished)?;
                    } else {
                        self.lanes[idx].ready_at = state.next_probe_at;
                        self.lanes[idx].state = LaneState::Recover {
                            pending,
                            state: Box::new(state),
                        };
                    }
                }
            },
            LaneState::Recover { pending, mut state } => match verdict {
                Ok(_) => {
                    let report = state.on_probe_success(p.sent_at, finished);
                    self.writer.append_recovery(&report)?;
                    self.recoveries.push(report);
                    match pending {
                        Some((cell, attempt)) => {
                            self.lanes[idx].ready_at = finished;
                            self.lanes[idx].state = LaneState::Query {
                                cell,
                                attempt,
                                pages: Vec::new(),
                                bodies: Vec::new(),
                                started_at: finished,
                            };
                        }
                        None => {
                            let delay = schedule_delay(&profile.pacing, &mut self.lanes[idx].rng);
                            self.lanes[idx].ready_at = finished + delay;
                            self.lanes[idx].state = LaneState::Idle;
                        }
                    }
                }
                Err(failure) => {
                    match state.on_probe_failure(profile, p.sent_at, failure, &self.campaign.timing)
                    {
                        ProbeStep::Continue => {
                            self.lanes[idx].ready_at = state.next_probe_at;
                            self.lanes[idx].state = LaneState::Recover { pending, state };
                        }
                        ProbeStep::DeadlineExceeded => {
                            self.engine_unavailable(idx, pending, *state, finished)?
                        }
                    }
                }
            },
            LaneState::Idle | LaneState::Done => {
                unreachable!("only querying or recovering lanes send requests")
            }
        }
        Ok(())
    }

    /// Marks the lane's engine unavailable for the rest of the run and skips every remaining cell.
    fn engine_unavailable(
        &mut self,
        idx: usize,
        pending: Option<(Cell, u8)>,
        state: RecoveryState,
        at: f64,
    ) -> Result<(), CrawlError> {
        let engine = self.lanes[idx].engine;
        log::warn!(
            "engine {} unavailable: recovery deadline exceeded",
            self.campaign.engines[engine].id
        );
        let report = state.report(None, true);
        self.writer.append_recovery(&report)?;
        self.recoveries.push(report);
        self.unavailable[engine] = true;
        if let Some((cell, attempt)) = pending {
            self.skip_unavailable(idx, cell, attempt, at)?;
        }
        while let Some(cell) = self.queues[engine].pop_front() {
            self.skip_unavailable(idx, cell, 1, at)?;
        }
        self.lanes[idx].state = LaneState::Done;
        Ok(())
    }

    fn skip_unavailable(
        &mut self,
        idx: usize,
        cell: Cell,
        attempt: u8,
        at: f64,
    ) -> Result<(), CrawlError> {
        let outcome = RecordOutcome::Skipped {
            reason: SkipReason::EngineUnavailable,
        };
        self.emit(idx, cell, attempt, at, at, 0, outcome, Vec::new())
    }

    #[allow(clippy::too_many_arguments)]
    fn emit(
        &mut self,
        idx: usize,
        cell: Cell,
        attempt: u8,
        started_at: f64,
        finished_at: f64,
        pages_fetched: u32,
        outcome: RecordOutcome,
        body_refs: Vec<String>,
    ) -> Result<(), CrawlError> {
        let lane = &self.lanes[idx];
        let record = QueryRecord {
            run_id: self.campaign.run_id.clone(),
            engine: self.campaign.engines[lane.engine].id.clone(),
            word: self.campaign.corpus.words[cell.word].text.clone(),
            quoted: cell.quoted,
            attempt,
            worker: lane.worker,
            started_at,
            finished_at,
            pages_fetched,
            outcome,
            body_refs,
        };
        self.counts.add(&record.outcome);
        self.last_finish = self.last_finish.max(finished_at);
        self.writer.append_record(&record)?;
        Ok(())
    }
}
