//! Benchmark workloads and the measurement harness.
//!
//! The web server mimics a connection-per-handler design: a port pairs
//! connecting clients with free handlers, each handler announces itself to
//! a registered acceptor (which spawns the next free handler) and reads
//! request lines and headers through traced `yaws:do_recv/3` calls.

mod alloc;
mod cpu;
mod harness;
mod malicious;
mod presets;
mod workload;

pub use alloc::{allocated_bytes, CountingAlloc};
pub use cpu::process_cpu_time;
pub use harness::{mean, percentile, read_csv, run_benchmark, write_csv, write_dat, BenchConfig, BenchError, BenchMode, MetricsReport, MetricsRow};
pub use malicious::{is_malicious, register_is_malicious, MaliciousRules};
pub use presets::{formula_or_preset, Preset};
pub use workload::{
    register_do_recv, spawn_clients, start_server, start_succ, ClientResults, HttpRequestScript, ServerConfig, ServerHandle,
    ServerStats, SuccConfig, ACCEPTOR, SUCC_SERVER,
};

#[cfg(test)]
mod tests;
