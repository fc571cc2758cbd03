//! Benchmark harness: replays a dataset as pull-based batches over the wire
//! protocol, stamps a monotonic nanosecond ledger around every delivery and
//! result, generates reproducible dynamic subscriptions, and scores sessions.

mod metrics;
mod subscriptions;

pub use metrics::{
    percentile_p90, rank, score_session, LatencyStats, LeaderboardRow, LedgerEntry, MetricsError,
    SessionSummary,
};
pub use subscriptions::{SubscriptionSchedule, DEFAULT_P_CHANGE, DEFAULT_SUBSET_SIZE};

use std::collections::HashMap;
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::sync::atomic::{AtomicI64, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::dataset::{self, DatasetError};
use crate::marketdata::TickEvent;
use crate::wireproto::{
    canonical_batch_bytes, serve_connection, BenchmarkConfig, BenchmarkHandle, ChallengeApi,
    WireBatch, WireError, WireEvent, WireResultQ1, WireResultQ2,
};

/// Monotonic high-resolution clock; all ledger instants are nanoseconds from
/// its origin. Wall time is used only for report metadata.
pub struct MonoClock(Instant);

impl MonoClock {
    pub fn new() -> MonoClock {
        MonoClock(Instant::now())
    }

    pub fn now_ns(&self) -> u64 {
        u64::try_from(self.0.elapsed().as_nanos()).expect("uptime fits u64")
    }
}

impl Default for MonoClock {
    fn default() -> Self {
        MonoClock::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pace {
    /// Serve the next batch as soon as it is requested.
    #[default]
    Asap,
    /// Delay each batch by the event-time gap since the previous one.
    Realtime,
}

#[derive(Debug, Clone)]
pub struct HarnessConfig {
    /// Base seed for subscription schedules (`serve --seed`).
    pub subscription_seed: u64,
    pub p_change: f64,
    pub subscription_size: usize,
    /// Upper bound on per-session batch size; the size itself comes with
    /// `create_benchmark`.
    pub max_batch_size: u32,
    pub max_sessions: usize,
    pub session_timeout: Duration,
    pub pace: Pace,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            subscription_seed: 42,
            p_change: DEFAULT_P_CHANGE,
            subscription_size: DEFAULT_SUBSET_SIZE,
            max_batch_size: 100_000,
            max_sessions: 64,
            session_timeout: Duration::from_secs(600),
            pace: Pace::Asap,
        }
    }
}

/// Immutable replay source shared by all sessions.
pub struct Dataset {
    pub events: Vec<WireEvent>,
    pub universe: Arc<Vec<String>>,
    pub source: String,
}

impl Dataset {
    /// Universe order is first appearance in the stream, so it only depends
    /// on the data.
    pub fn from_events(events: &[TickEvent], source: impl Into<String>) -> Dataset {
        let mut seen = std::collections::HashSet::new();
        let mut universe = Vec::new();
        let wire_events = events
            .iter()
            .map(|ev| {
                let symbol = ev.symbol.to_string();
                if seen.insert(symbol.clone()) {
                    universe.push(symbol.clone());
                }
                WireEvent {
                    symbol,
                    sec_type: ev.sec_type,
                    last_price: ev.last_price.to_string(),
                    trading_ts_ns: ev.trading_ts.epoch_ns(),
                }
            })
            .collect();
        Dataset {
            events: wire_events,
            universe: Arc::new(universe),
            source: source.into(),
        }
    }

    pub fn load(path: &Path, header: bool) -> Result<Dataset, DatasetError> {
        let events = dataset::load_events(path, header)?;
        Ok(Dataset::from_events(&events, path.display().to_string()))
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SessionState {
    Created,
    Running,
    Ended,
}

struct Session {
    id: u64,
    token: String,
    name: String,
    dataset_seed: u64,
    batch_size: u32,
    state: SessionState,
    cursor: u64,
    ledger: Vec<LedgerEntry>,
    schedule: SubscriptionSchedule,
    batch_hash: Sha256,
    subs_hash: Sha256,
    t_start: u64,
    t_end: u64,
    last_activity: u64,
    prev_batch_event_ns: Option<u64>,
}

/// The reproducible identity of one replay: fixed (data, subscription seed,
/// batch size) must reproduce these bytes exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReplayManifest {
    pub batches: u64,
    pub batch_stream_sha256: String,
    pub subscriptions_sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SessionReport {
    pub benchmark_id: u64,
    pub name: String,
    pub dataset_source: String,
    pub dataset_events: u64,
    pub dataset_seed: u64,
    pub subscription_seed: u64,
    pub batch_size: u32,
    /// Wall-clock metadata only; scoring uses the monotonic ledger.
    pub started_at: String,
    pub summary: SessionSummary,
    pub replay: ReplayManifest,
}

type ReportSink = Box<dyn Fn(&SessionReport) + Send + Sync>;

pub struct HarnessService {
    config: HarnessConfig,
    dataset: Arc<Dataset>,
    clock: MonoClock,
    next_id: AtomicU64,
    active: AtomicI64,
    sessions: Mutex<HashMap<u64, Arc<Mutex<Session>>>>,
    reports: Mutex<Vec<SessionReport>>,
    report_sink: Option<ReportSink>,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn mix_seeds(a: u64, b: u64) -> u64 {
    splitmix64(a ^ splitmix64(b))
}

impl HarnessService {
    pub fn new(dataset: Arc<Dataset>, config: HarnessConfig) -> HarnessService {
        HarnessService {
            config,
            dataset,
            clock: MonoClock::new(),
            next_id: AtomicU64::new(1),
            active: AtomicI64::new(0),
            sessions: Mutex::new(HashMap::new()),
            reports: Mutex::new(Vec::new()),
            report_sink: None,
        }
    }

    pub fn with_report_sink(mut self, sink: ReportSink) -> HarnessService {
        self.report_sink = Some(sink);
        self
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    /// Reports of all ended sessions, in completion order.
    pub fn reports(&self) -> Vec<SessionReport> {
        self.reports.lock().expect("reports lock").clone()
    }

    /// Timestamp ledger of one session, for offline inspection.
    pub fn session_ledger(&self, benchmark_id: u64) -> Option<Vec<LedgerEntry>> {
        let session = self
            .sessions
            .lock()
            .expect("sessions lock")
            .get(&benchmark_id)
            .cloned()?;
        let session = session.lock().expect("session lock");
        Some(session.ledger.clone())
    }

    fn batch_count(&self, batch_size: u32) -> u64 {
        (self.dataset.events.len() as u64).div_ceil(u64::from(batch_size))
    }

    fn with_session<R>(
        &self,
        handle: &BenchmarkHandle,
        f: impl FnOnce(&mut Session) -> Result<R, WireError>,
    ) -> Result<R, WireError> {
        let session = {
            let sessions = self.sessions.lock().expect("sessions lock");
            sessions
                .get(&handle.id)
                .cloned()
                .ok_or_else(|| WireError::UnknownBenchmark(format!("id {}", handle.id)))?
        };
        let mut session = session.lock().expect("session lock");
        if session.token != handle.token {
            return Err(WireError::BadToken);
        }
        let now = self.clock.now_ns();
        if session.state != SessionState::Ended {
            let idle = now.saturating_sub(session.last_activity);
            if idle > self.config.session_timeout.as_nanos() as u64 {
                session.state = SessionState::Ended;
                self.active.fetch_sub(1, Ordering::SeqCst);
                return Err(WireError::SessionTimeout);
            }
        }
        session.last_activity = now;
        f(&mut session)
    }
}

impl ChallengeApi for HarnessService {
    fn create_benchmark(&self, config: &BenchmarkConfig) -> Result<BenchmarkHandle, WireError> {
        if config.batch_size == 0 {
            return Err(WireError::BadConfig("batch_size must be >= 1".into()));
        }
        if config.batch_size > self.config.max_batch_size {
            return Err(WireError::BadConfig(format!(
                "batch_size {} exceeds harness maximum {}",
                config.batch_size, self.config.max_batch_size
            )));
        }
        if self.active.load(Ordering::SeqCst) >= self.config.max_sessions as i64 {
            return Err(WireError::CapacityExhausted);
        }

        let id = self.next_id.fetch_add(1, Ordering::SeqCst);
        let token = format!("{:016x}", mix_seeds(self.config.subscription_seed, id));
        let schedule_seed = mix_seeds(self.config.subscription_seed, config.dataset_seed);
        let session = Session {
            id,
            token: token.clone(),
            name: config.name.clone(),
            dataset_seed: config.dataset_seed,
            batch_size: config.batch_size,
            state: SessionState::Created,
            cursor: 0,
            ledger: Vec::new(),
            schedule: SubscriptionSchedule::new(
                schedule_seed,
                self.config.p_change,
                self.config.subscription_size,
                Arc::clone(&self.dataset.universe),
            ),
            batch_hash: Sha256::new(),
            subs_hash: Sha256::new(),
            t_start: 0,
            t_end: 0,
            last_activity: self.clock.now_ns(),
            prev_batch_event_ns: None,
        };
        self.sessions
            .lock()
            .expect("sessions lock")
            .insert(id, Arc::new(Mutex::new(session)));
        self.active.fetch_add(1, Ordering::SeqCst);
        log::info!(
            "benchmark {id} ({}) created, batch size {}",
            config.name,
            config.batch_size
        );
        Ok(BenchmarkHandle { id, token })
    }

    fn start_benchmark(&self, handle: &BenchmarkHandle) -> Result<(), WireError> {
        self.with_session(handle, |session| {
            if session.state != SessionState::Created {
                return Err(WireError::OutOfOrderCall(
                    "start_benchmark requires state CREATED".into(),
                ));
            }
            session.state = SessionState::Running;
            session.t_start = self.clock.now_ns();
            Ok(())
        })
    }

    fn next_batch(&self, handle: &BenchmarkHandle) -> Result<WireBatch, WireError> {
        let pace = self.config.pace;
        self.with_session(handle, |session| {
            if session.state != SessionState::Running {
                return Err(WireError::OutOfOrderCall(
                    "next_batch requires state RUNNING".into(),
                ));
            }
            let total = self.batch_count(session.batch_size);
            if session.cursor >= total {
                return Err(WireError::OutOfOrderCall(
                    "all batches delivered (last batch already sent)".into(),
                ));
            }
            if let Some(prev) = session.ledger.last() {
                if prev.t_q1.is_none() || prev.t_q2.is_none() {
                    return Err(WireError::OutOfOrderCall(
                        "previous batch still unanswered (one outstanding batch allowed)".into(),
                    ));
                }
            }

            let seq_id = session.cursor;
            let start = (seq_id * u64::from(session.batch_size)) as usize;
            let end = (start + session.batch_size as usize).min(self.dataset.events.len());
            let lookup = session.schedule.subscriptions_for(seq_id);
            let batch = WireBatch {
                seq_id,
                last: seq_id + 1 == total,
                events: self.dataset.events[start..end].to_vec(),
                lookup_symbols: lookup.as_ref().clone(),
            };

            if pace == Pace::Realtime {
                if let (Some(prev), Some(first)) =
                    (session.prev_batch_event_ns, batch.events.first())
                {
                    let gap = first.trading_ts_ns.saturating_sub(prev);
                    std::thread::sleep(Duration::from_nanos(gap));
                }
            }
            session.prev_batch_event_ns = batch.events.first().map(|e| e.trading_ts_ns);

            session.batch_hash.update(canonical_batch_bytes(&batch));
            session.subs_hash.update(seq_id.to_le_bytes());
            for symbol in &batch.lookup_symbols {
                session.subs_hash.update(symbol.as_bytes());
                session.subs_hash.update(b"\n");
            }

            session.ledger.push(LedgerEntry {
                t_sent: self.clock.now_ns(),
                t_q1: None,
                t_q2: None,
            });
            session.cursor += 1;
            Ok(batch)
        })
    }

    fn result_q1(&self, handle: &BenchmarkHandle, result: &WireResultQ1) -> Result<(), WireError> {
        self.with_session(handle, |session| {
            record_result(
                session,
                result.benchmark_id,
                result.batch_seq_id,
                Query::Q1,
                self.clock.now_ns(),
            )
        })
    }

    fn result_q2(&self, handle: &BenchmarkHandle, result: &WireResultQ2) -> Result<(), WireError> {
        self.with_session(handle, |session| {
            record_result(
                session,
                result.benchmark_id,
                result.batch_seq_id,
                Query::Q2,
                self.clock.now_ns(),
            )
        })
    }

    fn end_benchmark(&self, handle: &BenchmarkHandle) -> Result<SessionSummary, WireError> {
        let report = self.with_session(handle, |session| {
            if session.state != SessionState::Running {
                return Err(WireError::OutOfOrderCall(
                    "end_benchmark requires state RUNNING".into(),
                ));
            }
            session.state = SessionState::Ended;
            session.t_end = self.clock.now_ns();
            self.active.fetch_sub(1, Ordering::SeqCst);

            let summary = score_session(
                &session.name,
                &session.ledger,
                session.t_start,
                session.t_end,
                true,
            )
            .expect("session is ended");
            Ok(SessionReport {
                benchmark_id: session.id,
                name: session.name.clone(),
                dataset_source: self.dataset.source.clone(),
                dataset_events: self.dataset.events.len() as u64,
                dataset_seed: session.dataset_seed,
                subscription_seed: session.schedule.seed(),
                batch_size: session.batch_size,
                started_at: chrono::Utc::now().to_rfc3339(),
                summary,
                replay: ReplayManifest {
                    batches: session.ledger.len() as u64,
                    batch_stream_sha256: hex(&session.batch_hash.clone().finalize()),
                    subscriptions_sha256: hex(&session.subs_hash.clone().finalize()),
                },
            })
        })?;

        log::info!(
            "benchmark {} ended: {} batches, q1 p90 {} ns, q2 p90 {} ns",
            report.benchmark_id,
            report.summary.batches,
            report.summary.q1_latency.p90_ns,
            report.summary.q2_latency.p90_ns
        );
        if let Some(sink) = &self.report_sink {
            sink(&report);
        }
        let summary = report.summary.clone();
        self.reports.lock().expect("reports lock").push(report);
        Ok(summary)
    }
}

enum Query {
    Q1,
    Q2,
}

fn record_result(
    session: &mut Session,
    benchmark_id: u64,
    seq_id: u64,
    query: Query,
    now: u64,
) -> Result<(), WireError> {
    if session.state != SessionState::Running {
        return Err(WireError::OutOfOrderCall(
            "results require state RUNNING".into(),
        ));
    }
    if benchmark_id != session.id {
        return Err(WireError::Protocol(format!(
            "result names benchmark {benchmark_id}, session is {}",
            session.id
        )));
    }
    if seq_id >= session.cursor {
        return Err(WireError::UnknownSeqId(format!(
            "seq {seq_id} not delivered"
        )));
    }
    let entry = &mut session.ledger[seq_id as usize];
    let slot = match query {
        Query::Q1 => &mut entry.t_q1,
        Query::Q2 => &mut entry.t_q2,
    };
    if slot.is_some() {
        return Err(WireError::DuplicateResult(format!("seq {seq_id}")));
    }
    *slot = Some(now);
    Ok(())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Accept loop: one thread per connection, sessions shared across them.
pub fn serve(listener: TcpListener, service: Arc<HarnessService>) -> std::io::Result<()> {
    for stream in listener.incoming() {
        let stream: TcpStream = stream?;
        let service = Arc::clone(&service);
        std::thread::spawn(move || {
            let peer = stream
                .peer_addr()
                .map(|a| a.to_string())
                .unwrap_or_default();
            if let Err(e) = serve_connection(stream, &*service) {
                log::warn!("connection {peer}: {e}");
            }
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marketdata::{Exchange, Price, SecurityType, Symbol, TickTimestamp};

    fn tick(name: &str, minute: u64) -> TickEvent {
        TickEvent {
            symbol: Symbol::new(name, Exchange::Etr).unwrap(),
            sec_type: SecurityType::Index,
            last_price: Price::parse("10.0").unwrap(),
            trading_ts: TickTimestamp::new(
                TickTimestamp::parse_date("08-11-2021").unwrap(),
                minute * 60 * 1_000_000_000,
            )
            .unwrap(),
        }
    }

    fn service_with(events: usize, config: HarnessConfig) -> HarnessService {
        let events: Vec<TickEvent> = (0..events)
            .map(|i| tick(&format!("S{}", i % 5), i as u64))
            .collect();
        HarnessService::new(Arc::new(Dataset::from_events(&events, "test")), config)
    }

    fn create_config() -> BenchmarkConfig {
        BenchmarkConfig {
            name: "t".into(),
            dataset_seed: 1,
            batch_size: 4,
        }
    }

    #[test]
    fn happy_path_session() {
        let service = service_with(10, HarnessConfig::default());
        let handle = service.create_benchmark(&create_config()).unwrap();
        service.start_benchmark(&handle).unwrap();
        let mut seen = 0;
        loop {
            let batch = service.next_batch(&handle).unwrap();
            assert_eq!(batch.seq_id, seen);
            seen += 1;
            service
                .result_q1(
                    &handle,
                    &WireResultQ1 {
                        benchmark_id: handle.id,
                        batch_seq_id: batch.seq_id,
                        indicators: vec![],
                    },
                )
                .unwrap();
            service
                .result_q2(
                    &handle,
                    &WireResultQ2 {
                        benchmark_id: handle.id,
                        batch_seq_id: batch.seq_id,
                        crossover_events: vec![],
                    },
                )
                .unwrap();
            if batch.last {
                break;
            }
        }
        assert_eq!(seen, 3); // 10 events, batch 4 -> 4+4+2
        let summary = service.end_benchmark(&handle).unwrap();
        assert_eq!(summary.batches, 3);
        assert_eq!(summary.late_results, 0);
        assert!(!summary.incomplete);
        assert!(summary.q1_latency.p90_ns > 0);
        // ledger instants are monotone
        let report = &service.reports()[0];
        assert_eq!(report.replay.batches, 3);
    }

    #[test]
    fn state_machine_rejections() {
        let service = service_with(10, HarnessConfig::default());
        let handle = service.create_benchmark(&create_config()).unwrap();

        // result before any batch
        assert!(matches!(
            service.result_q1(
                &handle,
                &WireResultQ1 {
                    benchmark_id: handle.id,
                    batch_seq_id: 0,
                    indicators: vec![]
                }
            ),
            Err(WireError::OutOfOrderCall(_))
        ));
        // next_batch before start
        assert!(matches!(
            service.next_batch(&handle),
            Err(WireError::OutOfOrderCall(_))
        ));
        service.start_benchmark(&handle).unwrap();
        // double start
        assert!(matches!(
            service.start_benchmark(&handle),
            Err(WireError::OutOfOrderCall(_))
        ));

        let batch = service.next_batch(&handle).unwrap();
        // unknown seq
        assert!(matches!(
            service.result_q1(
                &handle,
                &WireResultQ1 {
                    benchmark_id: handle.id,
                    batch_seq_id: 5,
                    indicators: vec![]
                }
            ),
            Err(WireError::UnknownSeqId(_))
        ));
        // pipelining: next before both results
        assert!(matches!(
            service.next_batch(&handle),
            Err(WireError::OutOfOrderCall(_))
        ));
        let q1 = WireResultQ1 {
            benchmark_id: handle.id,
            batch_seq_id: batch.seq_id,
            indicators: vec![],
        };
        service.result_q1(&handle, &q1).unwrap();
        // duplicate q1
        assert!(matches!(
            service.result_q1(&handle, &q1),
            Err(WireError::DuplicateResult(_))
        ));
        // bad token
        let forged = BenchmarkHandle {
            id: handle.id,
            token: "nope".into(),
        };
        assert!(matches!(
            service.next_batch(&forged),
            Err(WireError::BadToken)
        ));
        // unknown benchmark
        let ghost = BenchmarkHandle {
            id: 999,
            token: handle.token.clone(),
        };
        assert!(matches!(
            service.next_batch(&ghost),
            Err(WireError::UnknownBenchmark(_))
        ));
    }

    #[test]
    fn next_batch_after_last_rejected() {
        let service = service_with(3, HarnessConfig::default());
        let handle = service
            .create_benchmark(&BenchmarkConfig {
                batch_size: 3,
                ..create_config()
            })
            .unwrap();
        service.start_benchmark(&handle).unwrap();
        let batch = service.next_batch(&handle).unwrap();
        assert!(batch.last);
        service
            .result_q1(
                &handle,
                &WireResultQ1 {
                    benchmark_id: handle.id,
                    batch_seq_id: 0,
                    indicators: vec![],
                },
            )
            .unwrap();
        service
            .result_q2(
                &handle,
                &WireResultQ2 {
                    benchmark_id: handle.id,
                    batch_seq_id: 0,
                    crossover_events: vec![],
                },
            )
            .unwrap();
        assert!(matches!(
            service.next_batch(&handle),
            Err(WireError::OutOfOrderCall(_))
        ));
    }

    #[test]
    fn bad_config_rejected() {
        let service = service_with(10, HarnessConfig::default());
        assert!(matches!(
            service.create_benchmark(&BenchmarkConfig {
                batch_size: 0,
                ..create_config()
            }),
            Err(WireError::BadConfig(_))
        ));
        assert!(matches!(
            service.create_benchmark(&BenchmarkConfig {
                batch_size: 1_000_000,
                ..create_config()
            }),
            Err(WireError::BadConfig(_))
        ));
    }

    #[test]
    fn distinct_ids_and_capacity() {
        let service = service_with(
            10,
            HarnessConfig {
                max_sessions: 2,
                ..HarnessConfig::default()
            },
        );
        let a = service.create_benchmark(&create_config()).unwrap();
        let b = service.create_benchmark(&create_config()).unwrap();
        assert_ne!(a.id, b.id);
        assert!(matches!(
            service.create_benchmark(&create_config()),
            Err(WireError::CapacityExhausted)
        ));
        // ending a session frees capacity
        service.start_benchmark(&a).unwrap();
        service.end_benchmark(&a).unwrap();
        assert!(service.create_benchmark(&create_config()).is_ok());
    }

    #[test]
    fn unanswered_batches_mark_summary_incomplete() {
        let service = service_with(8, HarnessConfig::default());
        let handle = service.create_benchmark(&create_config()).unwrap();
        service.start_benchmark(&handle).unwrap();
        let _batch = service.next_batch(&handle).unwrap();
        let summary = service.end_benchmark(&handle).unwrap();
        assert_eq!(summary.batches, 1);
        assert_eq!(summary.late_results, 1);
        assert!(summary.incomplete);
    }

    #[test]
    fn session_timeout_fires() {
        let service = service_with(
            10,
            HarnessConfig {
                session_timeout: Duration::from_nanos(1),
                ..HarnessConfig::default()
            },
        );
        let handle = service.create_benchmark(&create_config()).unwrap();
        std::thread::sleep(Duration::from_millis(2));
        assert!(matches!(
            service.start_benchmark(&handle),
            Err(WireError::SessionTimeout)
        ));
        // and it stays dead
        assert!(matches!(
            service.next_batch(&handle),
            Err(WireError::SessionTimeout) | Err(WireError::OutOfOrderCall(_))
        ));
    }

    #[test]
    fn end_requires_running() {
        let service = service_with(10, HarnessConfig::default());
        let handle = service.create_benchmark(&create_config()).unwrap();
        assert!(matches!(
            service.end_benchmark(&handle),
            Err(WireError::OutOfOrderCall(_))
        ));
        service.start_benchmark(&handle).unwrap();
        service.end_benchmark(&handle).unwrap();
        assert!(matches!(
            service.end_benchmark(&handle),
            Err(WireError::OutOfOrderCall(_))
        ));
    }

    #[test]
    fn result_before_first_batch_is_unknown_seq() {
        let service = service_with(10, HarnessConfig::default());
        let handle = service.create_benchmark(&create_config()).unwrap();
        service.start_benchmark(&handle).unwrap();
        assert!(matches!(
            service.result_q1(
                &handle,
                &WireResultQ1 {
                    benchmark_id: handle.id,
                    batch_seq_id: 0,
                    indicators: vec![]
                }
            ),
            Err(WireError::UnknownSeqId(_))
        ));
    }

    #[test]
    fn replay_concatenation_equals_dataset() {
        let service = service_with(23, HarnessConfig::default());
        let handle = service.create_benchmark(&create_config()).unwrap();
        service.start_benchmark(&handle).unwrap();
        let mut replayed = Vec::new();
        loop {
            let batch = service.next_batch(&handle).unwrap();
            replayed.extend(batch.events.iter().cloned());
            service
                .result_q1(
                    &handle,
                    &WireResultQ1 {
                        benchmark_id: handle.id,
                        batch_seq_id: batch.seq_id,
                        indicators: vec![],
                    },
                )
                .unwrap();
            service
                .result_q2(
                    &handle,
                    &WireResultQ2 {
                        benchmark_id: handle.id,
                        batch_seq_id: batch.seq_id,
                        crossover_events: vec![],
                    },
                )
                .unwrap();
            if batch.last {
                break;
            }
        }
        assert_eq!(replayed, service.dataset().events);
    }

    #[test]
    fn realtime_pace_delays_batches() {
        // events 40 ms apart in event time, one per batch
        let events: Vec<TickEvent> = (0..4)
            .map(|i| TickEvent {
                symbol: Symbol::new("A", Exchange::Etr).unwrap(),
                sec_type: SecurityType::Index,
                last_price: Price::parse("10.0").unwrap(),
                trading_ts: TickTimestamp::new(
                    TickTimestamp::parse_date("08-11-2021").unwrap(),
                    i * 40_000_000,
                )
                .unwrap(),
            })
            .collect();
        let service = HarnessService::new(
            Arc::new(Dataset::from_events(&events, "test")),
            HarnessConfig {
                pace: Pace::Realtime,
                ..HarnessConfig::default()
            },
        );
        let handle = service
            .create_benchmark(&BenchmarkConfig {
                batch_size: 1,
                ..create_config()
            })
            .unwrap();
        service.start_benchmark(&handle).unwrap();
        let started = std::time::Instant::now();
        for seq in 0..4 {
            let batch = service.next_batch(&handle).unwrap();
            assert_eq!(batch.seq_id, seq);
            service
                .result_q1(
                    &handle,
                    &WireResultQ1 {
                        benchmark_id: handle.id,
                        batch_seq_id: seq,
                        indicators: vec![],
                    },
                )
                .unwrap();
            service
                .result_q2(
                    &handle,
                    &WireResultQ2 {
                        benchmark_id: handle.id,
                        batch_seq_id: seq,
                        crossover_events: vec![],
                    },
                )
                .unwrap();
        }
        // three inter-batch gaps of 40 ms each
        assert!(started.elapsed() >= Duration::from_millis(120));
    }

    #[test]
    fn concurrent_sessions_are_isolated() {
        let service = Arc::new(service_with(64, HarnessConfig::default()));
        let mut handles = Vec::new();
        for worker in 0..8u64 {
            let service = Arc::clone(&service);
            handles.push(std::thread::spawn(move || {
                let handle = service
                    .create_benchmark(&BenchmarkConfig {
                        name: format!("w{worker}"),
                        dataset_seed: worker,
                        batch_size: 4,
                    })
                    .expect("create");
                service.start_benchmark(&handle).expect("start");
                let mut batches = 0;
                loop {
                    let batch = service.next_batch(&handle).expect("next");
                    assert_eq!(batch.seq_id, batches);
                    batches += 1;
                    service
                        .result_q1(
                            &handle,
                            &WireResultQ1 {
                                benchmark_id: handle.id,
                                batch_seq_id: batch.seq_id,
                                indicators: vec![],
                            },
                        )
                        .expect("q1");
                    service
                        .result_q2(
                            &handle,
                            &WireResultQ2 {
                                benchmark_id: handle.id,
                                batch_seq_id: batch.seq_id,
                                crossover_events: vec![],
                            },
                        )
                        .expect("q2");
                    if batch.last {
                        break;
                    }
                }
                let summary = service.end_benchmark(&handle).expect("end");
                assert_eq!(summary.batches, 16); // 64 events / 4
                assert!(!summary.incomplete);
            }));
        }
        for h in handles {
            h.join().expect("worker");
        }
        assert_eq!(service.reports().len(), 8);
    }
}
