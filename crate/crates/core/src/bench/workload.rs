use std::collections::VecDeque;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use super::malicious::MaliciousRules;
use crate::logic::{Pid, Value};
use crate::runtime::{Ctx, Runtime};

pub const ACCEPTOR: &str = "acceptor";
pub const SUCC_SERVER: &str = "server";

#[derive(Clone, Debug)]
pub struct ServerConfig {
    pub service_delay: Duration,
    pub rules: MaliciousRules,
    pub requests_per_client: usize,
    pub clients: usize,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            service_delay: Duration::from_millis(1),
            rules: MaliciousRules::default(),
            requests_per_client: 10,
            clients: 10,
        }
    }
}

/// One HTTP request as the handler sees it: a request line, six headers
/// and, unless truncated, a terminating `http_eoh`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HttpRequestScript {
    pub method: String,
    pub uri: String,
    pub headers: [String; 6],
    pub terminated: bool,
}

impl HttpRequestScript {
    pub fn benign(n: usize) -> Self {
        HttpRequestScript {
            method: "GET".into(),
            uri: format!("/page/{n}"),
            headers: [
                "Host: localhost".into(),
                "User-Agent: loadgen/1.0".into(),
                "Accept: text/html".into(),
                "Accept-Language: en".into(),
                "Connection: keep-alive".into(),
                format!("X-Request-Id: {n}"),
            ],
            terminated: true,
        }
    }

    /// A request whose last header attempts a directory traversal.
    pub fn malicious(n: usize) -> Self {
        let mut s = HttpRequestScript::benign(n);
        s.headers[5] = "Referer: /../../etc/passwd".into();
        s
    }

    pub fn messages(&self) -> Vec<Value> {
        let mut out = vec![Value::tuple([
            Value::atom("http_req"),
            Value::atom(&self.method),
            Value::string(&self.uri),
            Value::tuple([Value::Int(1), Value::Int(1)]),
        ])];
        out.extend(self.headers.iter().map(|h| Value::string(h)));
        if self.terminated {
            out.push(Value::atom("http_eoh"));
        }
        out
    }
}

/// Counters shared by the server actors.
#[derive(Debug, Default)]
pub struct ServerStats {
    /// `{Handler, next, Port}` messages handled by the acceptor.
    pub connections: AtomicUsize,
    pub handlers_spawned: AtomicUsize,
    /// Requests whose headers were all read; anything counted here happened
    /// after the sixth header was reported.
    pub side_effects: AtomicUsize,
    pub responses: AtomicUsize,
    pub assigned: Mutex<Vec<Pid>>,
}

pub struct ServerHandle {
    pub acceptor: Pid,
    pub port: Pid,
    pub stats: Arc<ServerStats>,
}

fn atom_is(v: &Value, a: &str) -> bool {
    v.as_atom() == Some(a)
}

/// Registers `yaws:do_recv/3`, which returns `{ok, Packet}` for its second
/// argument.
pub fn register_do_recv(rt: &Runtime) {
    rt.register_function("yaws", "do_recv", 3, |args| Ok(Value::tuple([Value::atom("ok"), args[1].clone()])));
}

/// Starts the port, the acceptor and one free handler.
pub fn start_server(rt: &Runtime, cfg: &ServerConfig) -> ServerHandle {
    register_do_recv(rt);
    let stats = Arc::new(ServerStats::default());
    let port = rt.spawn(port_actor);
    let (st, c) = (stats.clone(), cfg.clone());
    let acceptor = rt.spawn(move |ctx| acceptor_actor(ctx, port, c, st));
    rt.register(ACCEPTOR, acceptor).expect("acceptor name is free");
    let (st, c) = (stats.clone(), cfg.clone());
    stats.handlers_spawned.fetch_add(1, Ordering::SeqCst);
    rt.spawn(move |ctx| handler_actor(ctx, port, c, st));
    ServerHandle { acceptor, port, stats }
}

/// Pairs connecting clients with free handlers, in arrival order.
async fn port_actor(ctx: Ctx) {
    let mut clients: VecDeque<Pid> = VecDeque::new();
    let mut handlers: VecDeque<Pid> = VecDeque::new();
    loop {
        let m = ctx.receive_any().await;
        let Some([tag, who]) = m.as_tuple().and_then(|t| <&[Value; 2]>::try_from(t).ok()) else { continue };
        let Some(who) = who.as_pid() else { continue };
        if atom_is(tag, "accept") {
            handlers.push_back(who);
        } else if atom_is(tag, "connect") {
            clients.push_back(who);
        }
        while !clients.is_empty() && !handlers.is_empty() {
            let (c, h) = (clients.pop_front().expect("non-empty"), handlers.pop_front().expect("non-empty"));
            ctx.send(h, Value::tuple([Value::atom("connection"), Value::Pid(c), Value::Int(8080)])).await;
        }
    }
}

async fn acceptor_actor(ctx: Ctx, port: Pid, cfg: ServerConfig, stats: Arc<ServerStats>) {
    loop {
        let m = ctx.receive_any().await;
        let Some([h, next, _]) = m.as_tuple().and_then(|t| <&[Value; 3]>::try_from(t).ok()) else { continue };
        let (Some(h), true) = (h.as_pid(), atom_is(next, "next")) else { continue };
        stats.assigned.lock().expect("assigned").push(h);
        stats.connections.fetch_add(1, Ordering::SeqCst);
        stats.handlers_spawned.fetch_add(1, Ordering::SeqCst);
        let (st, c) = (stats.clone(), cfg.clone());
        ctx.spawn(move |ctx| handler_actor(ctx, port, c, st));
    }
}

async fn handler_actor(ctx: Ctx, port: Pid, cfg: ServerConfig, stats: Arc<ServerStats>) {
    ctx.send(port, Value::tuple([Value::atom("accept"), Value::Pid(ctx.pid())])).await;
    let conn = ctx.receive_any().await;
    let Some([_, client, port_no]) = conn.as_tuple().and_then(|t| <&[Value; 3]>::try_from(t).ok()) else { return };
    let Some(client) = client.as_pid() else { return };
    let port_no = port_no.clone();
    ctx.send(ACCEPTOR, Value::tuple([Value::Pid(ctx.pid()), Value::atom("next"), port_no.clone()])).await;
    ctx.send(client, Value::tuple([Value::atom("connected"), Value::Pid(ctx.pid())])).await;
    let do_recv = |packet: Value| {
        let port_no = port_no.clone();
        let ctx = &ctx;
        async move {
            ctx.call("yaws", "do_recv", vec![port_no, packet, Value::Int(30_000)]).await.expect("do_recv is registered")
        }
    };
    loop {
        let first = ctx.receive_any().await;
        if atom_is(&first, "close") {
            return;
        }
        let uri = first.as_tuple().and_then(|t| t.get(2).cloned()).unwrap_or(Value::atom("undefined"));
        do_recv(first).await;
        for _ in 0..6 {
            let h = ctx.receive_any().await;
            do_recv(h).await;
        }
        stats.side_effects.fetch_add(1, Ordering::SeqCst);
        let last = ctx.receive_any().await;
        let ok = atom_is(&last, "http_eoh");
        do_recv(last).await;
        let reply = if ok {
            ctx.sleep(cfg.service_delay).await;
            Value::tuple([Value::atom("response"), Value::Int(200), uri])
        } else {
            Value::tuple([Value::atom("response"), Value::Int(400), Value::atom("bad_request")])
        };
        stats.responses.fetch_add(1, Ordering::SeqCst);
        ctx.send(client, reply).await;
        if !ok {
            return;
        }
    }
}

/// What the clients observed.
#[derive(Debug, Default)]
pub struct ClientResults {
    pub latencies: Mutex<Vec<Duration>>,
    pub responses: Mutex<Vec<Value>>,
    pub finished: AtomicUsize,
    done_lock: Mutex<()>,
    done: Condvar,
}

impl ClientResults {
    pub fn finished(&self) -> usize {
        self.finished.load(Ordering::SeqCst)
    }

    fn finish_one(&self) {
        let _g = self.done_lock.lock().expect("done lock");
        self.finished.fetch_add(1, Ordering::SeqCst);
        self.done.notify_all();
    }

    /// Blocks until `n` clients have finished or the timeout elapses.
    pub fn wait_finished(&self, n: usize, timeout: Duration) -> bool {
        let g = self.done_lock.lock().expect("done lock");
        let (_g, r) = self.done.wait_timeout_while(g, timeout, |_| self.finished() < n).expect("done wait");
        !r.timed_out()
    }
}

/// Starts `clients` clients that each connect once and send
/// `requests` requests built by `script(client, request)`, one at a time.
pub fn spawn_clients(
    rt: &Runtime,
    server: &ServerHandle,
    clients: usize,
    requests: usize,
    script: impl Fn(usize, usize) -> HttpRequestScript + Send + Sync + 'static,
) -> Arc<ClientResults> {
    let results = Arc::new(ClientResults::default());
    let script = Arc::new(script);
    for c in 0..clients {
        let (res, script, port) = (results.clone(), script.clone(), server.port);
        rt.spawn(move |ctx| async move {
            ctx.send(port, Value::tuple([Value::atom("connect"), Value::Pid(ctx.pid())])).await;
            let connected = ctx.receive_any().await;
            let Some(handler) = connected.as_tuple().and_then(|t| t.get(1)).and_then(Value::as_pid) else { return };
            for r in 0..requests {
                let t0 = ctx.now();
                let script = script(c, r);
                for m in script.messages() {
                    ctx.send(handler, m).await;
                }
                if !script.terminated {
                    // Closing the connection mid-request.
                    ctx.send(handler, Value::atom("close")).await;
                }
                let resp = ctx.receive_any().await;
                res.latencies.lock().expect("latencies").push(ctx.now() - t0);
                let failed = resp.as_tuple().and_then(|t| t.get(1)).and_then(Value::as_int) != Some(200);
                res.responses.lock().expect("responses").push(resp);
                if failed {
                    break;
                }
            }
            ctx.send(handler, Value::atom("close")).await;
            res.finish_one();
        });
    }
    results
}

/// Configuration of the successor server workload.
#[derive(Clone, Debug)]
pub struct SuccConfig {
    pub clients: usize,
    pub requests_per_client: usize,
    /// `(n, d)`: the `n`th request (counting from 1) is answered with `X + d`.
    pub fault: Option<(usize, i64)>,
}

/// Starts a server registered as `server` answering `{succ, X, Client}` with
/// a reply to `Client`, and clients that check the answers.
pub fn start_succ(rt: &Runtime, cfg: &SuccConfig) -> Arc<ClientResults> {
    let fault = cfg.fault;
    let server = rt.spawn(move |ctx| async move {
        let mut n = 0usize;
        loop {
            let m = ctx.receive_any().await;
            let Some([_, x, client]) = m.as_tuple().and_then(|t| <&[Value; 3]>::try_from(t).ok()) else { continue };
            let (Some(x), Some(client)) = (x.as_int(), client.as_pid()) else { continue };
            n += 1;
            let answer = match fault {
                Some((at, d)) if at == n => x + d,
                _ => x + 1,
            };
            ctx.send(client, Value::Int(answer)).await;
        }
    });
    rt.register(SUCC_SERVER, server).expect("server name is free");
    let results = Arc::new(ClientResults::default());
    for c in 0..cfg.clients {
        let (res, requests) = (results.clone(), cfg.requests_per_client);
        rt.spawn(move |ctx| async move {
            for r in 0..requests {
                let x = (c * 1000 + r) as i64;
                let t0 = ctx.now();
                ctx.send(SUCC_SERVER, Value::tuple([Value::atom("succ"), Value::Int(x), Value::Pid(ctx.pid())])).await;
                let v = ctx.receive_any().await;
                res.latencies.lock().expect("latencies").push(ctx.now() - t0);
                res.responses.lock().expect("responses").push(v);
            }
            res.finish_one();
        });
    }
    results
}
