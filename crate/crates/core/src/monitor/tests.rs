use super::*;
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::instrument::{emit_event, FreshNonce, MonitorMessage, Nonce};
use crate::logic::{ClosedAction, EventInstance, Pid, Substitution, Value};
use crate::syntax::parse;

const SUCC: &str = "max X. [server ? {succ, X1, Y}] [Y ! Z] ((if Z = X1+1 then X) & (if Z != X1+1 then ff))";

fn succ_trace(reply: i64) -> Vec<EventInstance> {
    let req = ClosedAction::input(Value::atom("server"), Value::tuple([Value::atom("succ"), Value::Int(5), Value::atom("cli")]));
    let rep = ClosedAction::output(Value::atom("cli"), Value::Int(reply));
    vec![EventInstance::new(req, Pid(1), 0), EventInstance::new(rep, Pid(1), 1)]
}

fn msg(event: EventInstance, nonce: Nonce) -> MonitorMessage {
    MonitorMessage { event, nonce }
}

fn fresh() -> Nonce {
    Nonce::Fresh(FreshNonce { pid: Pid(1), counter: 0 })
}

#[test]
fn matching_necessity_advances_without_ack() {
    let p = PredicateTable::new();
    let f = parse(SUCC).unwrap();
    let init = initial_states(&f, &p).unwrap();
    assert_eq!(init.len(), 1);
    let out = submonitor_step(&init[0], &msg(succ_trace(6)[0].clone(), Nonce::Null), EventScope::Global, &p).unwrap();
    assert_eq!(out.ack, AckDecision::NotRequired);
    assert!(out.verdicts.is_empty());
    assert_eq!(out.states.len(), 1);
    assert_eq!(out.states[0].sigma.get("X1"), Some(&Value::Int(5)));
    assert_eq!(out.states[0].sigma.get("Y"), Some(&Value::atom("cli")));
}

#[test]
fn synchronous_violation_withholds_the_ack() {
    let p = PredicateTable::new();
    let f = parse("[srv ! X] (if X > 3 then sff)").unwrap().mark_synchronous();
    let init = initial_states(&f, &p).unwrap();
    let ev = EventInstance::new(ClosedAction::output(Value::atom("srv"), Value::Int(9)), Pid(1), 4);
    let out = submonitor_step(&init[0], &msg(ev.clone(), fresh()), EventScope::Global, &p).unwrap();
    assert_eq!(out.ack, AckDecision::Withhold);
    assert!(out.states.is_empty());
    let mut w = Substitution::new();
    w.insert("X", Value::Int(9));
    assert_eq!(out.verdicts, vec![Verdict::Violation { event_index: 4, emitter: Pid(1), synchronous: true, witness: w }]);
    assert_eq!(out.verdicts[0].to_string(), "violation 4 sync {X=9}");
    let ok = EventInstance::new(ClosedAction::output(Value::atom("srv"), Value::Int(1)), Pid(1), 5);
    let out = submonitor_step(&init[0], &msg(ok, fresh()), EventScope::Global, &p).unwrap();
    assert_eq!(out.ack, AckDecision::Release);
    assert!(out.states.is_empty() && out.verdicts.is_empty());
}

#[test]
fn sff_and_synchronous_ff_compile_alike() {
    let p = PredicateTable::new();
    let a = parse("[srv ! X] sff").unwrap();
    let b = parse("[|srv ! X|] ff").unwrap();
    assert_eq!(synthesize(&a, &p).unwrap_err(), MonitorError::UnmarkedSff);
    assert_eq!(synthesize(&a.mark_synchronous(), &p).unwrap(), synthesize(&b, &p).unwrap());
}

fn play(rt: &Runtime, trace: Vec<EventInstance>, sync: bool, sink: Pid) -> Arc<AtomicUsize> {
    let emitted = Arc::new(AtomicUsize::new(0));
    let e = emitted.clone();
    rt.spawn(move |ctx| async move {
        for ev in trace {
            emit_event(&ctx, ev, sync, sink).await;
            e.fetch_add(1, Ordering::SeqCst);
        }
    });
    emitted
}

#[test]
fn network_flags_the_successor_violation() {
    for sync in [false, true] {
        let rt = Runtime::deterministic();
        let p = PredicateTable::new();
        let bp = synthesize(&parse(SUCC).unwrap(), &p).unwrap();
        let cfg = NetworkConfig { scope: EventScope::Global, ..NetworkConfig::default() };
        let good = spawn_network(&rt, &bp, cfg.clone());
        let bad = spawn_network(&rt, &bp, cfg);
        play(&rt, succ_trace(6), sync, good.router());
        let done = play(&rt, succ_trace(9), sync, bad.router());
        rt.run_until_quiescent();
        assert!(good.verdicts().is_empty());
        let v = bad.verdicts();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].event_index(), Some(1));
        assert_eq!(v[0].to_string(), format!("violation 1 {} {{X1=5, Y=cli, Z=9}}", if sync { "sync" } else { "async" }));
        // Synchronously, the offending emitter never completes its report.
        assert_eq!(done.load(Ordering::SeqCst), if sync { 1 } else { 2 });
        if sync {
            assert_eq!(good.stats().acks_sent.load(Ordering::SeqCst), 2);
            assert_eq!(bad.stats().acks_sent.load(Ordering::SeqCst), 1);
            assert_eq!(bad.stats().acks_withheld.load(Ordering::SeqCst), 1);
        } else {
            assert!(good.acks().is_empty() && bad.acks().is_empty());
        }
    }
}

#[test]
fn falsity_is_flagged_at_the_first_event() {
    let rt = Runtime::deterministic();
    let p = PredicateTable::new();
    let bp = synthesize(&parse("ff").unwrap(), &p).unwrap();
    let m = spawn_network(&rt, &bp, NetworkConfig::default());
    rt.run_until_quiescent();
    assert!(m.verdicts().is_empty());
    play(&rt, succ_trace(6), false, m.router());
    rt.run_until_quiescent();
    assert_eq!(m.verdicts().len(), 1);
    assert_eq!(m.verdicts()[0].event_index(), Some(0));
}

const HANDLERS: &str = "max X. [acceptor ! {H, next, _}] (X & max Y. [ret H m:r/1 = {ok, V}] \
                        ((if V = 0 then ff) & (if V != 0 then Y)))";

fn connect(h: u64) -> EventInstance {
    let a = ClosedAction::output(Value::atom("acceptor"), Value::tuple([Value::Pid(Pid(h)), Value::atom("next"), Value::Int(80)]));
    EventInstance::new(a, Pid(h), 0)
}

fn ret(h: u64, v: i64, seq: u64) -> EventInstance {
    let a = ClosedAction::ret(Value::Pid(Pid(h)), "m", "r", 1, Value::tuple([Value::atom("ok"), Value::Int(v)]));
    EventInstance::new(a, Pid(h), seq)
}

#[test]
fn each_connection_gets_its_own_submonitor() {
    let rt = Runtime::deterministic();
    rt.enable_audit();
    let p = PredicateTable::new();
    let bp = synthesize(&parse(HANDLERS).unwrap(), &p).unwrap();
    let m = spawn_network(&rt, &bp, NetworkConfig::default());
    rt.run_until_quiescent();
    assert_eq!(m.live_submonitors(), 1);
    play(&rt, vec![connect(100), connect(200)], false, m.router());
    rt.run_until_quiescent();
    assert_eq!(m.live_submonitors(), 3);
    // Events of handler 200 never advance handler 100's submonitor.
    play(&rt, vec![ret(200, 5, 1), ret(200, 0, 2), ret(100, 4, 1)], false, m.router());
    rt.run_until_quiescent();
    let v = m.verdicts();
    assert_eq!(v.len(), 1);
    let Verdict::Violation { emitter, witness, .. } = &v[0] else { panic!() };
    assert_eq!(*emitter, Pid(200));
    assert_eq!(witness.get("H"), Some(&Value::Pid(Pid(200))));
    assert_eq!(m.live_submonitors(), 2);
    // Submonitors only ever talk to the router.
    let members = m.submonitors();
    for e in rt.audit_log() {
        if members.contains(&e.from) {
            assert_eq!(e.to, m.router());
        }
    }
}

#[test]
fn attach_instruments_a_live_system() {
    let rt = Runtime::deterministic();
    let opts = AttachOptions::default();
    let mon = attach(&rt, &parse("[srv ? X] (if X > 3 then sff)").unwrap(), InstrumentationMode::Sync, opts).unwrap();
    let after = Arc::new(AtomicUsize::new(0));
    let a = after.clone();
    rt.spawn(move |ctx| async move {
        ctx.register("srv").unwrap();
        ctx.receive_any().await;
        a.fetch_add(1, Ordering::SeqCst);
    });
    rt.run_until_quiescent();
    rt.send("srv", Value::Int(7));
    rt.run_until_quiescent();
    assert_eq!(mon.monitor.verdicts().len(), 1);
    assert_eq!(after.load(Ordering::SeqCst), 0);
    assert_eq!(mon.instrumenter.stats().sync_events.load(Ordering::SeqCst), 1);
}
