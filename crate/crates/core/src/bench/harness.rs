use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::alloc::allocated_bytes;
use super::cpu::process_cpu_time;
use super::malicious::register_is_malicious;
use super::workload::{spawn_clients, start_server, HttpRequestScript, ServerConfig};
use crate::instrument::InstrumentationMode;
use crate::logic::{Formula, PredicateTable};
use crate::monitor::{attach, AttachOptions, MonitorError};
use crate::oracle::EventScope;
use crate::runtime::Runtime;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BenchMode {
    /// No instrumentation at all.
    Baseline,
    Monitored(InstrumentationMode),
}

impl fmt::Display for BenchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BenchMode::Baseline => f.write_str("none"),
            BenchMode::Monitored(m) => m.fmt(f),
        }
    }
}

impl FromStr for BenchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(BenchMode::Baseline),
            other => other.parse().map(BenchMode::Monitored).map_err(|_| format!("unknown mode {s:?} (expected none, async, sync or hybrid)")),
        }
    }
}

/// One CSV row: a mode at a client load, averaged over repetitions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub mode: String,
    pub clients: usize,
    pub requests: usize,
    pub mean_latency_us: f64,
    pub median_latency_us: f64,
    pub p95_latency_us: f64,
    pub cpu_time_ms: f64,
    pub alloc_bytes: u64,
    pub violations: u64,
}

#[derive(Clone, Debug, Default)]
pub struct MetricsReport {
    pub rows: Vec<MetricsRow>,
    /// Mean latency of each repetition, per row, in microseconds.
    pub repetition_means: Vec<Vec<f64>>,
    /// Set when a benign run flagged a violation or did not finish.
    pub invalid: Option<String>,
}

impl MetricsReport {
    pub fn is_valid(&self) -> bool {
        self.invalid.is_none()
    }

    pub fn row(&self, mode: BenchMode, clients: usize) -> Option<(&MetricsRow, &[f64])> {
        let name = mode.to_string();
        self.rows
            .iter()
            .zip(&self.repetition_means)
            .find(|(r, _)| r.mode == name && r.clients == clients)
            .map(|(r, m)| (r, m.as_slice()))
    }
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub formula: Formula,
    pub modes: Vec<BenchMode>,
    pub loads: Vec<usize>,
    pub requests_per_client: usize,
    pub repetitions: usize,
    /// Unmeasured passes over every mode at the first load.
    pub warmup: usize,
    pub workers: usize,
    pub server: ServerConfig,
    pub timeout: Duration,
}

impl BenchConfig {
    pub fn new(formula: Formula) -> Self {
        BenchConfig {
            formula,
            modes: vec![
                BenchMode::Baseline,
                BenchMode::Monitored(InstrumentationMode::Async),
                BenchMode::Monitored(InstrumentationMode::Hybrid),
                BenchMode::Monitored(InstrumentationMode::Sync),
            ],
            loads: vec![10, 50, 100],
            requests_per_client: 10,
            repetitions: 3,
            warmup: 1,
            workers: 2,
            server: ServerConfig::default(),
            timeout: Duration::from_secs(60),
        }
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Monitor(#[from] MonitorError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

struct Sample {
    latencies: Vec<Duration>,
    cpu: Duration,
    alloc: u64,
    violations: u64,
    finished: bool,
}

fn run_once(cfg: &BenchConfig, mode: BenchMode, clients: usize) -> Result<Sample, BenchError> {
    let rt = Runtime::threaded(cfg.workers);
    let mut preds = PredicateTable::new();
    register_is_malicious(&mut preds, cfg.server.rules.clone());
    let cpu0 = process_cpu_time();
    let alloc0 = allocated_bytes();
    let mon = match mode {
        BenchMode::Baseline => None,
        BenchMode::Monitored(m) => {
            let opts = AttachOptions { scope: EventScope::Subject, preds: Arc::new(preds), delay: None };
            Some(attach(&rt, &cfg.formula, m, opts)?)
        }
    };
    let server = start_server(&rt, &cfg.server);
    let requests = cfg.requests_per_client;
    let results = spawn_clients(&rt, &server, clients, requests, move |c, r| HttpRequestScript::benign(c * requests + r));
    let finished = results.wait_finished(clients, cfg.timeout);
    if finished {
        rt.run_until_quiescent();
    }
    let cpu = process_cpu_time().saturating_sub(cpu0);
    let alloc = allocated_bytes() - alloc0;
    let violations = mon.as_ref().map_or(0, |m| m.monitor.verdicts().len() as u64);
    rt.shutdown();
    let latencies = std::mem::take(&mut *results.latencies.lock().expect("latencies"));
    Ok(Sample { latencies, cpu, alloc, violations, finished })
}

fn micros(d: &Duration) -> f64 {
    d.as_secs_f64() * 1e6
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Nearest-rank percentile of already sorted values.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Runs every mode at every load, `repetitions` times, and averages.
/// Repetitions are interleaved across modes so that drift affects all modes alike.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<MetricsReport, BenchError> {
    let cells: Vec<(usize, BenchMode)> = cfg.loads.iter().flat_map(|&l| cfg.modes.iter().map(move |&m| (l, m))).collect();
    let mut samples: Vec<Vec<Sample>> = cells.iter().map(|_| Vec::new()).collect();
    if let Some(&load) = cfg.loads.first() {
        for _ in 0..cfg.warmup {
            for &mode in &cfg.modes {
                run_once(cfg, mode, load)?;
            }
        }
    }
    for _ in 0..cfg.repetitions.max(1) {
        for (i, &(load, mode)) in cells.iter().enumerate() {
            samples[i].push(run_once(cfg, mode, load)?);
        }
    }
    let mut report = MetricsReport::default();
    for ((load, mode), reps) in cells.into_iter().zip(samples) {
        if reps.iter().any(|s| !s.finished) {
            report.invalid.get_or_insert(format!("{mode} at {load} clients did not finish within {:?}", cfg.timeout));
        }
        if reps.iter().any(|s| s.violations > 0) {
            report.invalid.get_or_insert(format!("{mode} at {load} clients flagged a violation on benign traffic"));
        }
        let per_rep = |f: &dyn Fn(&Sample) -> f64| mean(&reps.iter().map(f).collect::<Vec<_>>());
        let rep_means: Vec<f64> = reps.iter().map(|s| mean(&s.latencies.iter().map(micros).collect::<Vec<_>>())).collect();
        let median = per_rep(&|s| {
            let mut v: Vec<f64> = s.latencies.iter().map(micros).collect();
            v.sort_by(f64::total_cmp);
            percentile(&v, 50.0)
        });
        let p95 = per_rep(&|s| {
            let mut v: Vec<f64> = s.latencies.iter().map(micros).collect();
            v.sort_by(f64::total_cmp);
            percentile(&v, 95.0)
        });
        report.rows.push(MetricsRow {
            mode: mode.to_string(),
            clients: load,
            requests: load * cfg.requests_per_client,
            mean_latency_us: mean(&rep_means),
            median_latency_us: median,
            p95_latency_us: p95,
            cpu_time_ms: per_rep(&|s| s.cpu.as_secs_f64() * 1e3),
            alloc_bytes: per_rep(&|s| s.alloc as f64).round() as u64,
            violations: reps.iter().map(|s| s.violations).sum(),
        });
        report.repetition_means.push(rep_means);
    }
    Ok(report)
}

pub fn write_csv(rows: &[MetricsRow], out: impl Write) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(input: impl Read) -> Result<Vec<MetricsRow>, BenchError> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<Result<Vec<MetricsRow>, _>>()?)
}

/// Whitespace-separated rows for plotting, one block per mode.
pub fn write_dat(rows: &[MetricsRow], mut out: impl Write) -> Result<(), BenchError> {
    writeln!(out, "# clients mean_latency_us median_latency_us p95_latency_us cpu_time_ms alloc_bytes violations")?;
    let mut modes: Vec<&str> = Vec::new();
    for r in rows {
        if !modes.contains(&r.mode.as_str()) {
            modes.push(&r.mode);
        }
    }
    for (i, m) in modes.iter().enumerate() {
        if i > 0 {
            writeln!(out, "\n")?;
        }
        writeln!(out, "# mode {m}")?;
        for r in rows.iter().filter(|r| r.mode == *m) {
            writeln!(
                out,
                "{} {:.1} {:.1} {:.1} {:.3} {} {}",
                r.clients, r.mean_latency_us, r.median_latency_us, r.p95_latency_us, r.cpu_time_ms, r.alloc_bytes, r.violations
            )?;
        }
    }
    Ok(())
}
