//! `actmon`: check traces, model-check finite systems, and run or benchmark
//! monitored workloads.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use actmon::bench::{
    self, formula_or_preset, register_is_malicious, run_benchmark, spawn_clients, start_server, start_succ, BenchConfig,
    BenchMode, CountingAlloc, HttpRequestScript, MaliciousRules, Preset, ServerConfig, SuccConfig,
};
use actmon::instrument::{InstrumentationMode, Instrumenter, StartGate};
use actmon::logic::{Formula, PredicateTable};
use actmon::monitor::{spawn_network, synthesize, NetworkConfig};
use actmon::oracle::{parse_lts, parse_trace, rejects_trace_scoped, satisfies, EventScope};
use actmon::runtime::{Runtime, SubjectFilter};

#[global_allocator]
static ALLOC: CountingAlloc = CountingAlloc;

#[derive(Parser)]
#[command(name = "actmon", version, about = "Runtime verification for actor systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scope {
    Global,
    Subject,
}

impl From<Scope> for EventScope {
    fn from(s: Scope) -> Self {
        match s {
            Scope::Global => EventScope::Global,
            Scope::Subject => EventScope::Subject,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Workload {
    /// Web server, benign requests.
    Yaws,
    /// Web server; the first request of every client has a traversal header.
    YawsMalicious,
    /// Successor server answering correctly.
    Succ,
    /// Successor server answering the third request with X + 2.
    SuccFaulty,
}

#[derive(Subcommand)]
enum Command {
    /// Check a trace file against a formula. Exit 0: no violation, 1: violation.
    Check {
        /// Formula file, or the name of a bundled preset.
        #[arg(long)]
        formula: String,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, value_enum, default_value = "global")]
        scope: Scope,
    },
    /// Run a workload under a monitor and stream verdicts.
    Monitor {
        #[arg(long)]
        formula: String,
        #[arg(long, value_enum)]
        workload: Workload,
        #[arg(long, value_parser = parse_mode)]
        mode: InstrumentationMode,
        #[arg(long, default_value_t = 2)]
        clients: usize,
        #[arg(long, default_value_t = 3)]
        requests: usize,
        /// Delay the monitor by this many milliseconds per event.
        #[arg(long)]
        delay_ms: Option<u64>,
        /// Write every reported event to this trace file.
        #[arg(long)]
        dump: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        workers: usize,
    },
    /// Measure latency, CPU time and allocation across instrumentation modes.
    Bench {
        #[arg(long)]
        formula: String,
        /// Comma-separated subset of none,async,sync,hybrid.
        #[arg(long, value_delimiter = ',', default_value = "none,async,hybrid,sync", value_parser = parse_bench_mode)]
        modes: Vec<BenchMode>,
        /// Comma-separated client loads.
        #[arg(long, value_delimiter = ',', default_value = "10,50,100")]
        clients: Vec<usize>,
        /// Requests per client.
        #[arg(long, default_value_t = 10)]
        requests: usize,
        #[arg(long, default_value_t = 3)]
        repetitions: usize,
        #[arg(long, default_value_t = 2)]
        workers: usize,
        /// Handler service delay in microseconds.
        #[arg(long, default_value_t = 1000)]
        service_us: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write plot-ready rows here.
        #[arg(long)]
        dat: Option<PathBuf>,
    },
    /// Decide whether a state of a finite LTS satisfies a formula.
    /// Exit 0: satisfied, 1: not satisfied.
    Oracle {
        #[arg(long)]
        formula: String,
        #[arg(long)]
        lts: PathBuf,
        #[arg(long)]
        state: String,
    },
}

fn parse_mode(s: &str) -> Result<InstrumentationMode, String> {
    s.parse()
}

fn parse_bench_mode(s: &str) -> Result<BenchMode, String> {
    s.parse()
}

fn load_formula(arg: &str) -> Result<Formula> {
    let path = Path::new(arg);
    if !path.exists() {
        if let Ok(p) = arg.parse::<Preset>() {
            return Ok(p.formula());
        }
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading formula {arg}"))?;
    formula_or_preset(&text).with_context(|| format!("in formula {arg}"))
}

fn predicates() -> PredicateTable {
    let mut t = PredicateTable::new();
    register_is_malicious(&mut t, MaliciousRules::default());
    t
}

fn check(formula: &str, trace: &Path, scope: Scope) -> Result<bool> {
    let f = load_formula(formula)?.mark_synchronous();
    let text = fs::read_to_string(trace).with_context(|| format!("reading trace {}", trace.display()))?;
    let events = parse_trace(&text).with_context(|| format!("in trace {}", trace.display()))?;
    match rejects_trace_scoped(&f, &events, &predicates(), scope.into())? {
        Some(i) => {
            println!("violation at index {i}");
            Ok(true)
        }
        None => {
            println!("no violation");
            Ok(false)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn monitor(
    formula: &str,
    workload: Workload,
    mode: InstrumentationMode,
    clients: usize,
    requests: usize,
    delay_ms: Option<u64>,
    dump: Option<&Path>,
    workers: usize,
) -> Result<bool> {
    let f = load_formula(formula)?;
    let marked = f.mark_synchronous();
    if mode == InstrumentationMode::Async && marked.necessities().iter().any(|(_, s)| *s) {
        eprintln!("warning: async mode ignores the synchronous markings of this formula");
    }
    let preds = Arc::new(predicates());
    let bp = synthesize(&marked, &preds)?;
    let rt = Runtime::threaded(workers);
    let gate = (mode == InstrumentationMode::Sync).then(StartGate::new);
    let cfg = NetworkConfig {
        scope: EventScope::Subject,
        preds,
        delay: delay_ms.map(Duration::from_millis),
        gate: gate.clone(),
    };
    let handle = spawn_network(&rt, &bp, cfg);
    let mut ins = Instrumenter::new(mode, bp.table.clone(), handle.router());
    if let Some(g) = gate {
        ins = ins.with_gate(g);
    }
    if let Some(path) = dump {
        let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        ins = ins.with_dump(Box::new(std::io::BufWriter::new(file)));
    }
    let ins = Arc::new(ins);
    ins.install(&rt, SubjectFilter::All);
    let results = match workload {
        Workload::Yaws | Workload::YawsMalicious => {
            let server = start_server(&rt, &ServerConfig::default());
            let malicious = matches!(workload, Workload::YawsMalicious);
            spawn_clients(&rt, &server, clients, requests, move |c, r| {
                if malicious && r == 0 {
                    HttpRequestScript::malicious(c * requests + r)
                } else {
                    HttpRequestScript::benign(c * requests + r)
                }
            })
        }
        Workload::Succ | Workload::SuccFaulty => {
            let fault = matches!(workload, Workload::SuccFaulty).then_some((3, 2));
            start_succ(&rt, &SuccConfig { clients, requests_per_client: requests, fault })
        }
    };
    let mut violations = 0usize;
    loop {
        let done = rt.wait_quiescent(Duration::from_millis(50));
        while let Some(v) = handle.recv_verdict(Duration::ZERO) {
            println!("{v}");
            violations += 1;
        }
        if done {
            break;
        }
    }
    ins.flush();
    let stats = handle.stats();
    eprintln!(
        "events {}  sync reports {}  acks {}  withheld {}  clients finished {}/{}",
        stats.events.load(std::sync::atomic::Ordering::Relaxed),
        ins.stats().sync_events.load(std::sync::atomic::Ordering::Relaxed),
        stats.acks_sent.load(std::sync::atomic::Ordering::Relaxed),
        stats.acks_withheld.load(std::sync::atomic::Ordering::Relaxed),
        results.finished(),
        clients,
    );
    for e in handle.errors() {
        eprintln!("monitor error: {e}");
    }
    rt.shutdown();
    Ok(violations > 0)
}

#[allow(clippy::too_many_arguments)]
fn bench_cmd(
    formula: &str,
    modes: Vec<BenchMode>,
    loads: Vec<usize>,
    requests: usize,
    repetitions: usize,
    workers: usize,
    service_us: u64,
    out: &Path,
    dat: Option<&Path>,
) -> Result<bool> {
    if loads.is_empty() || modes.is_empty() {
        bail!("need at least one mode and one load");
    }
    let mut cfg = BenchConfig::new(load_formula(formula)?);
    cfg.modes = modes;
    cfg.loads = loads;
    cfg.requests_per_client = requests;
    cfg.repetitions = repetitions;
    cfg.workers = workers;
    cfg.server.service_delay = Duration::from_micros(service_us);
    let report = run_benchmark(&cfg)?;
    let file = fs::File::create(out).with_context(|| format!("creating {}", out.display()))?;
    bench::write_csv(&report.rows, file)?;
    if let Some(d) = dat {
        let file = fs::File::create(d).with_context(|| format!("creating {}", d.display()))?;
        bench::write_dat(&report.rows, file)?;
    }
    println!("{:<7} {:>7} {:>12} {:>12} {:>12} {:>10} {:>14}", "mode", "clients", "mean_us", "median_us", "p95_us", "cpu_ms", "alloc_bytes");
    for r in &report.rows {
        println!(
            "{:<7} {:>7} {:>12.1} {:>12.1} {:>12.1} {:>10.1} {:>14}",
            r.mode, r.clients, r.mean_latency_us, r.median_latency_us, r.p95_latency_us, r.cpu_time_ms, r.alloc_bytes
        );
    }
    if let Some(why) = &report.invalid {
        eprintln!("report invalid: {why}");
        return Ok(false);
    }
    Ok(true)
}

fn oracle(formula: &str, lts: &Path, state: &str) -> Result<bool> {
    let f = load_formula(formula)?.mark_synchronous();
    let text = fs::read_to_string(lts).with_context(|| format!("reading {}", lts.display()))?;
    let lts = parse_lts(&text)?;
    let Some(s) = lts.state(state) else { bail!("no state {state:?} in the LTS") };
    let sat = satisfies(&lts, s, &f, &predicates())?;
    println!("{sat}");
    Ok(sat)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Check { formula, trace, scope } => check(&formula, &trace, scope).map(|violated| !violated),
        Command::Monitor { formula, workload, mode, clients, requests, delay_ms, dump, workers } => {
            monitor(&formula, workload, mode, clients, requests, delay_ms, dump.as_deref(), workers).map(|v| !v)
        }
        Command::Bench { formula, modes, clients, requests, repetitions, workers, service_us, out, dat } => {
            bench_cmd(&formula, modes, clients, requests, repetitions, workers, service_us, &out, dat.as_deref())
        }
        Command::Oracle { formula, lts, state } => oracle(&formula, &lts, &state),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
