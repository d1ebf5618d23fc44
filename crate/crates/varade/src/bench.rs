//! Inference-throughput measurement on pre-built inputs; warm-up excluded.

use crate::error::{Result, VaradeError};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchConfig {
    pub iterations: usize,
    pub warmup: usize,
    /// Concurrent scoring threads over a shared immutable model; 1 pins the
    /// measurement to a single thread.
    pub threads: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            iterations: 100,
            warmup: 10,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub frequency_hz: f64,
    pub wall_clock_s: f64,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub p99_ms: f64,
    pub measured: usize,
    pub warmup_excluded: usize,
    pub threads: usize,
}

fn percentile(sorted_ms: &[f64], p: f64) -> f64 {
    let idx = ((sorted_ms.len() as f64 - 1.0) * p).round() as usize;
    sorted_ms[idx]
}

/// Runs `warmup` unmeasured calls of `score`, then `iterations` measured
/// ones, cycling through the pre-built inputs. Frequency is completed
/// inferences over measured wall-clock only.
pub fn bench_throughput<I, F>(inputs: &[I], mut score: F, cfg: &BenchConfig) -> Result<BenchReport>
where
    I: Sync,
    F: FnMut(&I) -> f64 + Send + Clone,
{
    if cfg.iterations == 0 {
        return Err(VaradeError::Config("iterations must be >= 1".into()));
    }
    if inputs.is_empty() {
        return Err(VaradeError::Config("need at least one pre-built input".into()));
    }
    if cfg.threads <= 1 {
        let mut sink = 0.0f64;
        for i in 0..cfg.warmup {
            sink += score(&inputs[i % inputs.len()]);
        }
        let mut latencies = Vec::with_capacity(cfg.iterations);
        let start = Instant::now();
        for i in 0..cfg.iterations {
            let t0 = Instant::now();
            sink += score(&inputs[i % inputs.len()]);
            latencies.push(t0.elapsed().as_secs_f64() * 1e3);
        }
        let wall = start.elapsed().as_secs_f64();
        std::hint::black_box(sink);
        latencies.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(BenchReport {
            frequency_hz: cfg.iterations as f64 / wall,
            wall_clock_s: wall,
            p50_ms: percentile(&latencies, 0.50),
            p95_ms: percentile(&latencies, 0.95),
            p99_ms: percentile(&latencies, 0.99),
            measured: cfg.iterations,
            warmup_excluded: cfg.warmup,
            threads: 1,
        })
    } else {
        let per_thread = cfg.iterations.div_ceil(cfg.threads);
        let start = Instant::now();
        let mut all_latencies: Vec<f64> = Vec::new();
        let mut completed = 0usize;
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..cfg.threads)
                .map(|_| {
                    let mut score = score.clone();
                    scope.spawn(move || {
                        let mut lat = Vec::with_capacity(per_thread);
                        let mut sink = 0.0f64;
                        for i in 0..cfg.warmup {
                            sink += score(&inputs[i % inputs.len()]);
                        }
                        for i in 0..per_thread {
                            let t0 = Instant::now();
                            sink += score(&inputs[i % inputs.len()]);
                            lat.push(t0.elapsed().as_secs_f64() * 1e3);
                        }
                        std::hint::black_box(sink);
                        lat
                    })
                })
                .collect();
            for h in handles {
                let lat = h.join().expect("bench thread");
                completed += lat.len();
                all_latencies.extend(lat);
            }
        });
        let wall = start.elapsed().as_secs_f64();
        all_latencies.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(BenchReport {
            frequency_hz: completed as f64 / wall,
            wall_clock_s: wall,
            p50_ms: percentile(&all_latencies, 0.50),
            p95_ms: percentile(&all_latencies, 0.95),
            p99_ms: percentile(&all_latencies, 0.99),
            measured: completed,
            warmup_excluded: cfg.warmup * cfg.threads,
            threads: cfg.threads,
        })
    }
}
