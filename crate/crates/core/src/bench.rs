//! Latency and throughput measurement for taggers: per-message timing with
//! percentile reporting, and a dynamic-batching throughput harness where a
//! dispatcher feeds batches to a pool of workers over a bounded queue.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::PaymentMessage;
use crate::eval::EntitySpan;
use crate::tagger::{TagError, Tagger};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("no messages to benchmark")]
    EmptyInput,
    #[error("reps must be >= 1")]
    ZeroReps,
    #[error("workers must be >= 1")]
    ZeroWorkers,
    #[error("batch size must be >= 1")]
    ZeroBatch,
    #[error("duration must be positive")]
    ZeroDuration,
    #[error("benchmark altered tagging output for message {0}")]
    OutputMismatch(String),
    #[error(transparent)]
    Tag(#[from] TagError),
}

/// Timing report. Latency percentiles are per message; `p95_batch_ms` is
/// filled by the throughput harness.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchReport {
    pub tagger: String,
    pub message_count: usize,
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub p99_ms: f64,
    pub throughput_msgs_per_sec: f64,
    pub batch_size: usize,
    pub workers: usize,
    pub wall_time_secs: f64,
    /// Best-effort peak resident set size; platform-dependent, approximate.
    pub peak_rss_bytes: Option<u64>,
    pub p95_batch_ms: Option<f64>,
}

impl BenchReport {
    /// One-line human summary.
    pub fn summary(&self) -> String {
        format!(
            "{}: {} msgs in {:.2}s | {:.0} msg/s | latency ms mean {:.3} p50 {:.3} p95 {:.3} p99 {:.3} | batch {} workers {}{}",
            self.tagger,
            self.message_count,
            self.wall_time_secs,
            self.throughput_msgs_per_sec,
            self.mean_ms,
            self.p50_ms,
            self.p95_ms,
            self.p99_ms,
            self.batch_size,
            self.workers,
            match self.peak_rss_bytes {
                Some(bytes) => format!(" | peak rss ~{} MiB", bytes / (1024 * 1024)),
                None => String::new(),
            }
        )
    }
}

/// Nearest-rank percentile of a sorted sample.
fn percentile(sorted_ms: &[f64], q: f64) -> f64 {
    let n = sorted_ms.len();
    let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
    sorted_ms[rank - 1]
}

fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

/// Times each message individually with a monotonic clock after untimed
/// warmup passes. Outputs are checked against a reference run so the
/// benchmark is guaranteed to exercise the real tagging path.
pub fn measure_latency(
    tagger: &dyn Tagger,
    messages: &[PaymentMessage],
    warmup: usize,
    reps: usize,
) -> Result<BenchReport, BenchError> {
    if messages.is_empty() {
        return Err(BenchError::EmptyInput);
    }
    if reps == 0 {
        return Err(BenchError::ZeroReps);
    }

    // Reference pass (untimed) plus any further warmup passes.
    let reference: Vec<Vec<EntitySpan>> = messages
        .iter()
        .map(|m| tagger.tag_message(m))
        .collect::<Result<_, _>>()?;
    for _ in 1..warmup {
        for message in messages {
            tagger.tag_message(message)?;
        }
    }

    let mut samples_ms = Vec::with_capacity(messages.len() * reps);
    let wall_start = Instant::now();
    for _ in 0..reps {
        for message in messages {
            let start = Instant::now();
            let spans = tagger.tag_message(message)?;
            samples_ms.push(start.elapsed().as_secs_f64() * 1e3);
            std::hint::black_box(&spans);
        }
    }
    let wall = wall_start.elapsed().as_secs_f64();

    spot_check(tagger, messages, &reference)?;

    samples_ms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let total = samples_ms.len();
    Ok(BenchReport {
        tagger: tagger.name().to_string(),
        message_count: total,
        mean_ms: samples_ms.iter().sum::<f64>() / total as f64,
        p50_ms: percentile(&samples_ms, 0.50),
        p95_ms: percentile(&samples_ms, 0.95),
        p99_ms: percentile(&samples_ms, 0.99),
        throughput_msgs_per_sec: total as f64 / wall,
        batch_size: 1,
        workers: 1,
        wall_time_secs: wall,
        peak_rss_bytes: peak_rss_bytes(),
        p95_batch_ms: None,
    })
}

fn spot_check(
    tagger: &dyn Tagger,
    messages: &[PaymentMessage],
    reference: &[Vec<EntitySpan>],
) -> Result<(), BenchError> {
    let step = (messages.len() / 10).max(1);
    for i in (0..messages.len()).step_by(step) {
        let spans = tagger.tag_message(&messages[i])?;
        if spans != reference[i] {
            return Err(BenchError::OutputMismatch(messages[i].id.clone()));
        }
    }
    Ok(())
}

/// Streams batches of messages to `workers` concurrent taggers for the
/// given wall-clock duration, cycling the corpus. A dispatcher thread forms
/// batches and hands them over a bounded queue, as a batching service
/// would; larger batches amortize the per-dispatch overhead.
pub fn measure_throughput(
    tagger: &dyn Tagger,
    messages: &[PaymentMessage],
    batch_size: usize,
    workers: usize,
    duration: Duration,
) -> Result<BenchReport, BenchError> {
    if messages.is_empty() {
        return Err(BenchError::EmptyInput);
    }
    if batch_size == 0 {
        return Err(BenchError::ZeroBatch);
    }
    if workers == 0 {
        return Err(BenchError::ZeroWorkers);
    }
    if duration.is_zero() {
        return Err(BenchError::ZeroDuration);
    }

    // Reference outputs for the post-run consistency check.
    let reference: Vec<Vec<EntitySpan>> = messages
        .iter()
        .map(|m| tagger.tag_message(m))
        .collect::<Result<_, _>>()?;

    let (batch_tx, batch_rx) = crossbeam_channel::bounded::<std::ops::Range<usize>>(workers * 2);
    let processed = AtomicUsize::new(0);
    let deadline = Instant::now() + duration;
    let wall_start = Instant::now();

    let batch_latencies: Vec<Vec<f64>> = std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(workers);
        for _ in 0..workers {
            let rx = batch_rx.clone();
            let processed = &processed;
            handles.push(scope.spawn(move || {
                let mut latencies_ms = Vec::new();
                while let Ok(range) = rx.recv() {
                    let start = Instant::now();
                    for offset in range.clone() {
                        let message = &messages[offset % messages.len()];
                        if let Ok(spans) = tagger.tag_message(message) {
                            std::hint::black_box(&spans);
                        }
                    }
                    latencies_ms.push(start.elapsed().as_secs_f64() * 1e3);
                    processed.fetch_add(range.len(), Ordering::Relaxed);
                }
                latencies_ms
            }));
        }
        drop(batch_rx);

        // Dispatcher: form batches until the deadline.
        let mut cursor = 0usize;
        while Instant::now() < deadline {
            let range = cursor..cursor + batch_size;
            cursor += batch_size;
            if batch_tx.send(range).is_err() {
                break;
            }
        }
        drop(batch_tx);

        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let wall = wall_start.elapsed().as_secs_f64();
    let total = processed.load(Ordering::Relaxed);

    spot_check(tagger, messages, &reference)?;

    let mut all_batches: Vec<f64> = batch_latencies.into_iter().flatten().collect();
    all_batches.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut per_message: Vec<f64> = all_batches.iter().map(|b| b / batch_size as f64).collect();
    per_message.sort_by(|a, b| a.partial_cmp(b).unwrap());

    Ok(BenchReport {
        tagger: tagger.name().to_string(),
        message_count: total,
        mean_ms: per_message.iter().sum::<f64>() / per_message.len().max(1) as f64,
        p50_ms: percentile(&per_message, 0.50),
        p95_ms: percentile(&per_message, 0.95),
        p99_ms: percentile(&per_message, 0.99),
        throughput_msgs_per_sec: total as f64 / wall,
        batch_size,
        workers,
        wall_time_secs: wall,
        peak_rss_bytes: peak_rss_bytes(),
        p95_batch_ms: Some(percentile(&all_batches, 0.95)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::RuleSet;
    use crate::corpus::{generate_corpus, GeneratorConfig};
    use crate::features::Gazetteers;
    use crate::tagger::RuleTagger;

    fn small_messages(n: usize) -> Vec<PaymentMessage> {
        generate_corpus(&GeneratorConfig::with_count_seed(n, 9))
            .unwrap()
            .into_iter()
            .map(|m| m.message)
            .collect()
    }

    #[test]
    fn zero_reps_and_workers_rejected() {
        let tagger = RuleTagger::new(RuleSet::default(), Gazetteers::builtin());
        let messages = small_messages(3);
        assert!(matches!(
            measure_latency(&tagger, &messages, 0, 0),
            Err(BenchError::ZeroReps)
        ));
        assert!(matches!(
            measure_latency(&tagger, &[], 0, 1),
            Err(BenchError::EmptyInput)
        ));
        assert!(matches!(
            measure_throughput(&tagger, &messages, 1, 0, Duration::from_millis(10)),
            Err(BenchError::ZeroWorkers)
        ));
        assert!(matches!(
            measure_throughput(&tagger, &messages, 0, 1, Duration::from_millis(10)),
            Err(BenchError::ZeroBatch)
        ));
        assert!(matches!(
            measure_throughput(&tagger, &messages, 1, 1, Duration::ZERO),
            Err(BenchError::ZeroDuration)
        ));
    }

    #[test]
    fn latency_report_is_self_consistent() {
        let tagger = RuleTagger::new(RuleSet::default(), Gazetteers::builtin());
        let messages = small_messages(20);
        let report = measure_latency(&tagger, &messages, 1, 2).unwrap();
        assert_eq!(report.message_count, 40);
        assert!(report.p50_ms <= report.p95_ms && report.p95_ms <= report.p99_ms);
        assert!(report.throughput_msgs_per_sec > 0.0);
        // message_count / wall_time tracks the reported throughput.
        let implied = report.message_count as f64 / report.wall_time_secs;
        assert!((implied - report.throughput_msgs_per_sec).abs() / implied < 0.05);
    }

    #[test]
    fn throughput_runs_and_reports() {
        let tagger = RuleTagger::new(RuleSet::default(), Gazetteers::builtin());
        let messages = small_messages(10);
        let report =
            measure_throughput(&tagger, &messages, 4, 2, Duration::from_millis(150)).unwrap();
        assert!(report.message_count > 0);
        assert!(report.throughput_msgs_per_sec > 0.0);
        assert_eq!(report.batch_size, 4);
        assert_eq!(report.workers, 2);
        assert!(report.p95_batch_ms.is_some());
    }

    #[test]
    fn percentiles_are_nearest_rank() {
        let sorted = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&sorted, 0.50), 2.0);
        assert_eq!(percentile(&sorted, 0.95), 4.0);
        assert_eq!(percentile(&sorted, 0.25), 1.0);
    }
}
