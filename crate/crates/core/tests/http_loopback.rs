mod common;

use std::collections::BTreeMap;
use std::io::Read;
use std::net::TcpListener;
use std::sync::Arc;
use std::time::Duration;

use censorlab::crawler::{
    classify_exchange, run_campaign, Campaign, FailureClass, HttpTransport, QuotedMode,
    RecoveryTiming, SourceId, SystemClock, Transport, TransportOutcome,
};
use censorlab::engine::{build_request, BannerStyle, EngineId};
use censorlab::simnet::{synthetic_words, SimServer};
use censorlab::store::{RecordOutcome, RunStore};

use common::*;

fn net_with_falun(block_s: f64) -> Arc<censorlab::simnet::SimNetwork> {
    let mut words = synthetic_words(4, 3);
    words.push("falun".into());
    let mut s = scenario(
        12,
        words,
        vec![
            engine(
                "cn",
                censoring([words_first()], BannerStyle::FirstPageAlways, 1),
            ),
            engine("com", clean(2)),
        ],
    );
    s.middlebox.keyword_reset_prob = BTreeMap::from([("falun".to_string(), 1.0)]);
    s.middlebox.block_window_s = block_s;
    Arc::new(s.build().unwrap())
}

fn words_first() -> String {
    synthetic_words(4, 3)[0].clone()
}

#[test]
fn loopback_crawl_matches_in_process_crawl() {
    let net = net_with_falun(1.0);
    let server = SimServer::start(Arc::clone(&net), 0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let store = RunStore::open(dir.path()).unwrap();
    let campaign = Campaign {
        run_id: "http".into(),
        corpus: Arc::clone(&net.corpus),
        engines: server.client_profiles(&net),
        quoted: QuotedMode::Unquoted,
        workers: 1,
        page_depth: 2,
        seed: 1,
        timing: RecoveryTiming {
            reset_wait_s: 0.4,
            probe_interval_s: 0.4,
            rate_limit_wait_s: 1.0,
            deadline_s: 30.0,
        },
        keep_bodies: true,
    };
    let transport = HttpTransport::new(Duration::from_secs(5));
    assert!(transport.concurrent());
    let out = run_campaign(
        &campaign,
        &store,
        &transport,
        &SystemClock::starting_at(0.0),
    )
    .unwrap();
    server.shutdown();

    let (_, records) = store.load_run("http").unwrap();
    for e in ["cn", "com"] {
        let falun: Vec<(u8, &str)> = records
            .iter()
            .filter(|r| r.engine.as_str() == e && r.word == "falun")
            .map(|r| (r.attempt, r.outcome.kind()))
            .collect();
        assert_eq!(
            falun,
            [(1, "failed"), (2, "failed"), (3, "failed"), (3, "gave-up")],
            "{e}"
        );
    }
    assert!(records
        .iter()
        .filter(|r| matches!(r.outcome, RecordOutcome::Failed { .. }))
        .all(|r| r.failure() == Some(FailureClass::TcpReset)));
    assert!(out
        .recoveries
        .iter()
        .all(|r| r.resumed_at.is_some() && r.elapsed().unwrap() >= 1.0));
    assert!(records.iter().any(|r| !r.body_refs.is_empty()));

    // Same index, same noise epoch: the in-process transport sees the same pages.
    let sim = crawl(&net, &plan(1, 86_400.0, QuotedMode::Unquoted, 2), 1, 1);
    let (_, sim_records) = sim.store.load_run(&run_id(0)).unwrap();
    for r in records
        .iter()
        .filter(|r| matches!(r.outcome, RecordOutcome::Parsed { .. }))
    {
        let s = sim_records
            .iter()
            .find(|s| s.engine == r.engine && s.word == r.word && s.outcome.is_terminal())
            .unwrap();
        assert_eq!(r.pages(), s.pages(), "{} {}", r.engine, r.word);
    }
    let banner = records
        .iter()
        .find(|r| r.engine.as_str() == "cn" && r.word == words_first())
        .unwrap();
    assert!(banner.pages()[0].banner_present);
}

#[test]
fn silent_server_times_out_and_closed_port_is_unreachable() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let hold = std::thread::spawn(move || {
        let (mut s, _) = listener.accept().unwrap();
        let mut buf = [0u8; 1024];
        let _ = s.read(&mut buf);
        std::thread::sleep(Duration::from_millis(800));
    });
    let net = net_with_falun(1.0);
    let profile = net
        .client_profile(&EngineId::new("cn"), &format!("http://{addr}"))
        .unwrap();
    let transport = HttpTransport::new(Duration::from_millis(300));
    let req = build_request(&profile, "你好", false, 1).unwrap();
    let ex = transport.exchange(&SourceId::worker(0), &profile, &req, 0.0);
    assert_eq!(ex.outcome, TransportOutcome::TimedOut);
    assert_eq!(
        classify_exchange(&profile, &ex.outcome, 1),
        Err(FailureClass::Timeout)
    );
    hold.join().unwrap();

    let closed = TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap();
    let profile = net
        .client_profile(&EngineId::new("cn"), &format!("http://{closed}"))
        .unwrap();
    let req = build_request(&profile, "你好", false, 1).unwrap();
    let ex = transport.exchange(&SourceId::worker(0), &profile, &req, 0.0);
    assert!(
        matches!(ex.outcome, TransportOutcome::Unreachable(_)),
        "{:?}",
        ex.outcome
    );
    assert_eq!(
        classify_exchange(&profile, &ex.outcome, 1),
        Err(FailureClass::Timeout)
    );
}
