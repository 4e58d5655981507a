use super::*;
use std::collections::HashSet;
use std::sync::atomic::Ordering;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use crate::instrument::InstrumentationMode;
use crate::logic::{ActionKind, EventInstance, PredicateTable, Value};
use crate::monitor::{attach, AttachOptions, Verdict};
use crate::oracle::EventScope;
use crate::runtime::{BoxFuture, Ctx, Hook, HookRegistration, Runtime, SubjectFilter};

fn preds() -> Arc<PredicateTable> {
    let mut t = PredicateTable::new();
    register_is_malicious(&mut t, MaliciousRules::default());
    Arc::new(t)
}

fn opts() -> AttachOptions {
    AttachOptions { scope: EventScope::Subject, preds: preds(), delay: None }
}

#[test]
fn each_connection_is_announced_once_and_replaced() {
    let rt = Runtime::deterministic();
    let server = start_server(&rt, &ServerConfig::default());
    let res = spawn_clients(&rt, &server, 1, 1, |_, r| HttpRequestScript::benign(r));
    rt.run_until_quiescent();
    assert_eq!(server.stats.connections.load(Ordering::SeqCst), 1);
    assert_eq!(server.stats.handlers_spawned.load(Ordering::SeqCst), 2);
    assert_eq!(res.finished(), 1);
}

#[test]
fn concurrent_connections_get_distinct_handlers() {
    let rt = Runtime::threaded(4);
    let server = start_server(&rt, &ServerConfig::default());
    let res = spawn_clients(&rt, &server, 40, 2, |c, r| HttpRequestScript::benign(c * 10 + r));
    assert!(res.wait_finished(40, Duration::from_secs(20)));
    let assigned = server.stats.assigned.lock().unwrap().clone();
    assert_eq!(assigned.len(), 40);
    assert_eq!(assigned.iter().collect::<HashSet<_>>().len(), 40);
    assert_eq!(server.stats.handlers_spawned.load(Ordering::SeqCst), 41);
    rt.shutdown();
}

struct Count(Mutex<Vec<String>>);

impl Hook for Count {
    fn on_event<'a>(&'a self, _: &'a Ctx, e: &'a EventInstance) -> BoxFuture<'a, ()> {
        Box::pin(async move { self.0.lock().unwrap().push(e.action.to_string()) })
    }
}

#[test]
fn a_request_is_read_through_eight_returns() {
    let rt = Runtime::deterministic();
    let rec = Arc::new(Count(Mutex::new(Vec::new())));
    rt.register_hook(HookRegistration { kinds: vec![ActionKind::Return], subjects: SubjectFilter::All, hook: rec.clone() });
    let server = start_server(&rt, &ServerConfig::default());
    let res = spawn_clients(&rt, &server, 1, 1, |_, r| HttpRequestScript::benign(r));
    rt.run_until_quiescent();
    let rets = rec.0.lock().unwrap();
    assert_eq!(rets.len(), 8);
    assert!(rets[0].contains("yaws:do_recv/3 {ok, {http_req, 'GET'"));
    assert!(rets[7].ends_with("{ok, http_eoh}"));
    assert_eq!(res.responses.lock().unwrap()[0].as_tuple().unwrap()[1], Value::Int(200));
}

#[test]
fn truncated_request_gets_an_error_response() {
    let rt = Runtime::deterministic();
    let server = start_server(&rt, &ServerConfig::default());
    let res = spawn_clients(&rt, &server, 1, 1, |_, r| HttpRequestScript { terminated: false, ..HttpRequestScript::benign(r) });
    // The client's close stands in for the missing terminator.
    rt.run_until_quiescent();
    let resp = res.responses.lock().unwrap().clone();
    assert_eq!(resp.len(), 1);
    assert_eq!(resp[0].as_tuple().unwrap()[1], Value::Int(400));
}

fn responses(mode: Option<InstrumentationMode>) -> (Vec<Value>, usize) {
    let rt = Runtime::deterministic();
    let mon = mode.map(|m| attach(&rt, &Preset::YawsHeadersSync.formula(), m, opts()).unwrap());
    let server = start_server(&rt, &ServerConfig::default());
    let res = spawn_clients(&rt, &server, 3, 4, |c, r| HttpRequestScript::benign(c * 4 + r));
    rt.run_until_quiescent();
    let mut out = res.responses.lock().unwrap().clone();
    out.sort_by_key(|v| v.to_string());
    (out, mon.map_or(0, |m| m.monitor.verdicts().len()))
}

#[test]
fn monitoring_is_transparent_on_benign_traffic() {
    let (base, _) = responses(None);
    assert_eq!(base.len(), 12);
    for m in [InstrumentationMode::Async, InstrumentationMode::Sync, InstrumentationMode::Hybrid] {
        let (got, violations) = responses(Some(m));
        assert_eq!(got, base, "{m}");
        assert_eq!(violations, 0, "{m}");
    }
}

#[test]
fn synchronous_detection_stops_the_malicious_handler() {
    for mode in [InstrumentationMode::Sync, InstrumentationMode::Hybrid] {
        let rt = Runtime::deterministic();
        let mon = attach(&rt, &Preset::YawsHeadersSync.formula(), mode, opts()).unwrap();
        let server = start_server(&rt, &ServerConfig::default());
        let res = spawn_clients(&rt, &server, 1, 1, |_, r| HttpRequestScript::malicious(r));
        rt.run_until_quiescent();
        let v = mon.monitor.verdicts();
        assert_eq!(v.len(), 1, "{mode}");
        assert!(matches!(v[0], Verdict::Violation { synchronous: true, .. }));
        assert_eq!(server.stats.side_effects.load(Ordering::SeqCst), 0, "{mode}");
        assert!(res.responses.lock().unwrap().is_empty());
    }
}

#[test]
fn hybrid_blocks_only_at_connections_and_the_last_header() {
    let rt = Runtime::deterministic();
    let mon = attach(&rt, &Preset::YawsHeadersSync.formula(), InstrumentationMode::Hybrid, opts()).unwrap();
    let server = start_server(&rt, &ServerConfig::default());
    spawn_clients(&rt, &server, 2, 3, |c, r| HttpRequestScript::benign(c * 3 + r));
    rt.run_until_quiescent();
    let s = mon.instrumenter.stats();
    // 2 connections + 6 requests at the sixth header; 6 * 8 returns in all.
    assert_eq!(s.sync_events.load(Ordering::SeqCst), 2 + 6);
    assert_eq!(s.async_events.load(Ordering::SeqCst), 6 * 8 - 6);
    assert_eq!(mon.monitor.stats().acks_sent.load(Ordering::SeqCst), 8);
}

#[test]
fn delayed_asynchronous_detection_comes_too_late() {
    let rt = Runtime::deterministic();
    let o = AttachOptions { delay: Some(Duration::from_millis(50)), ..opts() };
    let mon = attach(&rt, &Preset::YawsHeadersSync.formula(), InstrumentationMode::Async, o).unwrap();
    let server = start_server(&rt, &ServerConfig::default());
    spawn_clients(&rt, &server, 1, 1, |_, r| HttpRequestScript::malicious(r));
    rt.run_until_quiescent();
    assert!(matches!(mon.monitor.verdicts()[..], [Verdict::Violation { synchronous: false, .. }]));
    assert_eq!(server.stats.side_effects.load(Ordering::SeqCst), 1);
    assert_eq!(server.stats.responses.load(Ordering::SeqCst), 1);
}

#[test]
fn two_connections_leave_three_submonitors() {
    let rt = Runtime::deterministic();
    let mon = attach(&rt, &Preset::YawsHeaders.formula(), InstrumentationMode::Async, opts()).unwrap();
    rt.run_until_quiescent();
    assert_eq!(mon.monitor.live_submonitors(), 1);
    let server = start_server(&rt, &ServerConfig::default());
    spawn_clients(&rt, &server, 2, 2, |c, r| HttpRequestScript::benign(c * 2 + r));
    rt.run_until_quiescent();
    assert_eq!(mon.monitor.live_submonitors(), 3);
}

#[test]
fn faulty_successor_answers_are_caught_before_delivery_when_synchronous() {
    use InstrumentationMode::*;
    for (mode, delta, synchronous, answered) in [(Hybrid, 0, true, 2), (Hybrid, 2, true, 2), (Async, 2, false, 4)] {
        let rt = Runtime::deterministic();
        let mon = attach(&rt, &Preset::SuccServerHybrid.formula(), mode, opts()).unwrap();
        let res = start_succ(&rt, &SuccConfig { clients: 1, requests_per_client: 4, fault: Some((3, delta)) });
        rt.run_until_quiescent();
        let v = mon.monitor.verdicts();
        assert_eq!(v.len(), 1, "{v:?}");
        // The reply is the server's sixth reported event.
        assert!(matches!(v[0], Verdict::Violation { synchronous: s, event_index: 5, .. } if s == synchronous), "{v:?}");
        assert_eq!(res.responses.lock().unwrap().len(), answered);
    }
}
