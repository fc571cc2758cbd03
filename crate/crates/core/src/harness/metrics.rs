//! Session scoring: nearest-rank p90 latency, per-batch latency samples from
//! the timestamp ledger, throughput, and the leaderboard ranking rule.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("no samples")]
    EmptySamples,
    #[error("session has not ended")]
    SessionNotEnded,
}

/// Per-batch instants from the harness's monotonic clock: when the batch
/// left, and when each result came back.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LedgerEntry {
    pub t_sent: u64,
    pub t_q1: Option<u64>,
    pub t_q2: Option<u64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub mean_ns: f64,
    pub p90_ns: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub name: String,
    /// Batches delivered.
    pub batches: u64,
    pub duration_ns: u64,
    pub throughput_batches_per_s: f64,
    pub q1_latency: LatencyStats,
    pub q2_latency: LatencyStats,
    /// Delivered batches missing at least one result at end.
    pub late_results: u64,
    pub incomplete: bool,
}

/// Nearest-rank 90th percentile: sort ascending, take the element at index
/// `ceil(0.9 * n) - 1`.
pub fn percentile_p90(samples: &[u64]) -> Result<u64, MetricsError> {
    if samples.is_empty() {
        return Err(MetricsError::EmptySamples);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    let rank = (9 * n).div_ceil(10);
    Ok(sorted[rank - 1])
}

fn stats(samples: &[u64]) -> LatencyStats {
    if samples.is_empty() {
        return LatencyStats::default();
    }
    LatencyStats {
        mean_ns: samples.iter().sum::<u64>() as f64 / samples.len() as f64,
        p90_ns: percentile_p90(samples).expect("non-empty"),
    }
}

/// Scores an ended session. Latency samples are `t_result - t_sent` per
/// answered batch; unanswered batches are excluded from latency and counted
/// as late. Throughput is fully answered batches over the run duration.
pub fn score_session(
    name: &str,
    ledger: &[LedgerEntry],
    t_start: u64,
    t_end: u64,
    ended: bool,
) -> Result<SessionSummary, MetricsError> {
    if !ended {
        return Err(MetricsError::SessionNotEnded);
    }
    let q1: Vec<u64> = ledger
        .iter()
        .filter_map(|e| e.t_q1.map(|t| t.saturating_sub(e.t_sent)))
        .collect();
    let q2: Vec<u64> = ledger
        .iter()
        .filter_map(|e| e.t_q2.map(|t| t.saturating_sub(e.t_sent)))
        .collect();
    let answered = ledger
        .iter()
        .filter(|e| e.t_q1.is_some() && e.t_q2.is_some())
        .count() as u64;
    let late_results = ledger.len() as u64 - answered;
    let duration_ns = t_end.saturating_sub(t_start);
    let throughput_batches_per_s = if duration_ns == 0 {
        0.0
    } else {
        answered as f64 / (duration_ns as f64 / 1e9)
    };
    Ok(SessionSummary {
        name: name.to_string(),
        batches: ledger.len() as u64,
        duration_ns,
        throughput_batches_per_s,
        q1_latency: stats(&q1),
        q2_latency: stats(&q2),
        late_results,
        incomplete: late_results > 0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeaderboardRow {
    pub final_rank: usize,
    pub name: String,
    pub rank_q1: usize,
    pub rank_q2: usize,
    pub mean_rank: f64,
    pub q1_p90_ns: u64,
    pub q2_p90_ns: u64,
    pub throughput_batches_per_s: f64,
}

/// Ranks solutions: each gets a per-query rank by ascending p90 latency, the
/// board orders by the mean of the two ranks, ties broken by higher
/// throughput, then by name.
pub fn rank(solutions: &[SessionSummary]) -> Vec<LeaderboardRow> {
    let n = solutions.len();
    let order_by = |p90: &dyn Fn(&SessionSummary) -> u64| -> Vec<usize> {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            p90(&solutions[a])
                .cmp(&p90(&solutions[b]))
                .then_with(|| solutions[a].name.cmp(&solutions[b].name))
        });
        let mut ranks = vec![0usize; n];
        for (position, &i) in order.iter().enumerate() {
            ranks[i] = position + 1;
        }
        ranks
    };
    let rank_q1 = order_by(&|s| s.q1_latency.p90_ns);
    let rank_q2 = order_by(&|s| s.q2_latency.p90_ns);

    let mut rows: Vec<LeaderboardRow> = solutions
        .iter()
        .enumerate()
        .map(|(i, s)| LeaderboardRow {
            final_rank: 0,
            name: s.name.clone(),
            rank_q1: rank_q1[i],
            rank_q2: rank_q2[i],
            mean_rank: (rank_q1[i] + rank_q2[i]) as f64 / 2.0,
            q1_p90_ns: s.q1_latency.p90_ns,
            q2_p90_ns: s.q2_latency.p90_ns,
            throughput_batches_per_s: s.throughput_batches_per_s,
        })
        .collect();
    rows.sort_by(|a, b| {
        a.mean_rank
            .total_cmp(&b.mean_rank)
            .then_with(|| {
                b.throughput_batches_per_s
                    .total_cmp(&a.throughput_batches_per_s)
            })
            .then_with(|| a.name.cmp(&b.name))
    });
    for (position, row) in rows.iter_mut().enumerate() {
        row.final_rank = position + 1;
    }
    rows
}
