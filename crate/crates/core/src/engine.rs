//! The solution under test: consumes batches of tick events, keeps per-symbol
//! window/EMA state for *all* symbols, and answers Query 1 (latest EMA pair)
//! and Query 2 (last three advisories) for the currently subscribed subset.
//!
//! Window close is event-driven per symbol: a symbol's open window closes
//! when that symbol's next event arrives in a later window. Empty windows do
//! not advance the EMA sequence, and a symbol's final open window at stream
//! end is never closed. Out-of-order events that fall in an earlier window
//! are dropped and counted.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::indicators::{detect_crossover, ema_step, CrossoverAdvisory, CrossoverKind, EmaPair};
use crate::marketdata::{Symbol, TickEvent};
use crate::windowing::{window_of, WindowId, WindowSpec, WindowingError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("series retention is disabled; run with retention=full")]
    RetentionDisabled,
    #[error("bad engine config: {0}")]
    BadConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Retention {
    #[default]
    Off,
    Full,
}

/// Engine tunables; file form is `key = value` lines with `#` comments.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub window_minutes: u32,
    pub suppress_first_window_advice: bool,
    pub retention: Retention,
    pub shards: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            window_minutes: WindowSpec::DEFAULT_MINUTES,
            suppress_first_window_advice: false,
            retention: Retention::Off,
            shards: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

impl EngineConfig {
    pub fn parse(text: &str) -> Result<EngineConfig, EngineError> {
        let mut config = EngineConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                EngineError::BadConfig(format!("line {}: expected key = value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| EngineError::BadConfig(format!("{key}: {what}: {value:?}"));
            match key {
                "window_minutes" => {
                    config.window_minutes = value.parse().map_err(|_| bad("not an integer"))?;
                }
                "suppress_first_window_advice" => {
                    config.suppress_first_window_advice =
                        value.parse().map_err(|_| bad("not a bool"))?;
                }
                "retention" => {
                    config.retention = match value {
                        "off" => Retention::Off,
                        "full" => Retention::Full,
                        _ => return Err(bad("expected off|full")),
                    };
                }
                "shards" => {
                    config.shards = value.parse().map_err(|_| bad("not an integer"))?;
                    if config.shards == 0 {
                        return Err(bad("must be >= 1"));
                    }
                }
                _ => return Err(EngineError::BadConfig(format!("unknown key {key:?}"))),
            }
        }
        Ok(config)
    }
}

/// The symbols the harness currently wants answers for; replaced wholesale
/// on every batch, never merged.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SubscriptionSet {
    symbols: Vec<Symbol>,
}

impl SubscriptionSet {
    pub fn new(symbols: Vec<Symbol>) -> SubscriptionSet {
        SubscriptionSet { symbols }
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }
}

/// Most recent advisories of one symbol, capacity 3, oldest first.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdvisoryRing {
    entries: Vec<CrossoverAdvisory>,
}

impl AdvisoryRing {
    const CAPACITY: usize = 3;

    fn push(&mut self, advisory: CrossoverAdvisory) {
        if self.entries.len() == Self::CAPACITY {
            self.entries.remove(0);
        }
        self.entries.push(advisory);
    }

    pub fn as_slice(&self) -> &[CrossoverAdvisory] {
        &self.entries
    }
}

/// One retained per-window result row; also the engine dump row used by the
/// verification path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesRow {
    pub window: WindowId,
    pub close: f64,
    pub pair: EmaPair,
    pub advisory: Option<CrossoverKind>,
}

/// Per-symbol engine state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SymbolState {
    last_window: Option<WindowId>,
    pending_close: Option<f64>,
    prev_pair: EmaPair,
    curr_pair: EmaPair,
    advisories: AdvisoryRing,
    closed_windows: u64,
    history: Vec<SeriesRow>,
}

impl SymbolState {
    pub fn curr_pair(&self) -> EmaPair {
        self.curr_pair
    }

    pub fn prev_pair(&self) -> EmaPair {
        self.prev_pair
    }

    pub fn closed_windows(&self) -> u64 {
        self.closed_windows
    }

    pub fn advisories(&self) -> &[CrossoverAdvisory] {
        self.advisories.as_slice()
    }
}

/// Outcome of applying one event to a symbol's state.
#[derive(Debug, Clone, PartialEq)]
pub enum Ingest {
    Applied(Option<CrossoverAdvisory>),
    LateDropped,
}

struct IngestOptions {
    spec: WindowSpec,
    suppress_first_window_advice: bool,
    retain: bool,
}

/// Applies one event: same window updates the running close, a later window
/// closes the open one (one EMA step, crossover check, ring append) and
/// opens the new one, an earlier window is dropped as late data.
fn ingest_event(
    state: &mut SymbolState,
    symbol: &Symbol,
    event_window: WindowId,
    price: f64,
    opts: &IngestOptions,
) -> Ingest {
    let open_window = match state.last_window {
        None => {
            state.last_window = Some(event_window);
            state.pending_close = Some(price);
            return Ingest::Applied(None);
        }
        Some(w) => w,
    };

    if event_window == open_window {
        state.pending_close = Some(price);
        return Ingest::Applied(None);
    }
    if event_window < open_window {
        return Ingest::LateDropped;
    }

    // A later window arrived: evaluate the open window. Gap windows carry
    // no close price and therefore no EMA step of their own.
    let close = state.pending_close.expect("open window always has a close");
    let prior = state.curr_pair;
    let pair = ema_step(prior, close);
    let first = state.closed_windows == 0;
    let kind = if first && opts.suppress_first_window_advice {
        None
    } else {
        detect_crossover(prior, pair)
    };
    let advisory = kind.map(|kind| CrossoverAdvisory {
        symbol: symbol.clone(),
        kind,
        window: open_window,
        ema_pair: pair,
    });

    state.prev_pair = prior;
    state.curr_pair = pair;
    state.closed_windows += 1;
    if let Some(a) = &advisory {
        state.advisories.push(a.clone());
    }
    if opts.retain {
        state.history.push(SeriesRow {
            window: open_window,
            close,
            pair,
            advisory: kind,
        });
    }
    state.last_window = Some(event_window);
    state.pending_close = Some(price);
    Ingest::Applied(advisory)
}

/// One delivery unit: events in arrival order plus the subscription that
/// replaces the current one, and the end-of-stream flag.
#[derive(Debug, Clone, Default)]
pub struct Batch {
    pub events: Vec<TickEvent>,
    pub lookup_symbols: Vec<Symbol>,
    pub last: bool,
}

/// Per-batch answers: one Q1 entry per subscribed symbol with at least one
/// closed window, and the advisory ring (oldest first, possibly empty) per
/// subscribed symbol.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BatchResult {
    pub q1: Vec<(Symbol, EmaPair)>,
    pub q2: Vec<(Symbol, Vec<CrossoverAdvisory>)>,
}

/// Engine dump row for offline verification: one evaluated window of one
/// symbol, serialized as JSON lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpRow {
    pub symbol: String,
    pub day: i64,
    pub slot: u32,
    pub close: f64,
    pub ema38: f64,
    pub ema100: f64,
    pub advisory: Option<CrossoverKind>,
}

pub struct Engine {
    config: EngineConfig,
    spec: WindowSpec,
    shards: Vec<HashMap<Symbol, SymbolState>>,
    subscription: SubscriptionSet,
    late_events: u64,
}

impl Engine {
    pub fn new(config: EngineConfig) -> Result<Engine, WindowingError> {
        let spec = WindowSpec::new(config.window_minutes)?;
        let shards = config.shards.max(1);
        Ok(Engine {
            config,
            spec,
            shards: (0..shards).map(|_| HashMap::new()).collect(),
            subscription: SubscriptionSet::default(),
            late_events: 0,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn window_spec(&self) -> WindowSpec {
        self.spec
    }

    pub fn subscription(&self) -> &SubscriptionSet {
        &self.subscription
    }

    /// Out-of-order events dropped so far.
    pub fn late_events(&self) -> u64 {
        self.late_events
    }

    fn shard_of(&self, symbol: &Symbol) -> usize {
        (fnv1a(symbol) % self.shards.len() as u64) as usize
    }

    pub fn state(&self, symbol: &Symbol) -> Option<&SymbolState> {
        self.shards[self.shard_of(symbol)].get(symbol)
    }

    pub fn has_symbol(&self, symbol: &Symbol) -> bool {
        self.state(symbol).is_some()
    }

    /// Replaces the subscription with the batch's, applies every event
    /// (same-symbol order preserved, distinct symbols in parallel across
    /// shards), then answers both queries for the new subscription.
    pub fn process_batch(&mut self, batch: &Batch) -> BatchResult {
        self.subscription = SubscriptionSet::new(batch.lookup_symbols.clone());

        let shard_count = self.shards.len();
        let mut partitions: Vec<Vec<&TickEvent>> = vec![Vec::new(); shard_count];
        for event in &batch.events {
            partitions[(fnv1a(&event.symbol) % shard_count as u64) as usize].push(event);
        }

        let opts = IngestOptions {
            spec: self.spec,
            suppress_first_window_advice: self.config.suppress_first_window_advice,
            retain: self.config.retention == Retention::Full,
        };
        let late: u64 = self
            .shards
            .par_iter_mut()
            .zip(partitions)
            .map(|(shard, events)| {
                let mut late = 0u64;
                for event in events {
                    let window = window_of(event.trading_ts, opts.spec);
                    let state = shard.entry(event.symbol.clone()).or_default();
                    if ingest_event(state, &event.symbol, window, event.last_price_f64(), &opts)
                        == Ingest::LateDropped
                    {
                        late += 1;
                    }
                }
                late
            })
            .sum();
        self.late_events += late;

        let mut result = BatchResult::default();
        for symbol in self.subscription.symbols() {
            match self.state(symbol) {
                Some(state) => {
                    if state.closed_windows > 0 {
                        result.q1.push((symbol.clone(), state.curr_pair));
                    }
                    result
                        .q2
                        .push((symbol.clone(), state.advisories.as_slice().to_vec()));
                }
                // Subscribed but never seen: no Q1 entry, empty Q2 list.
                None => result.q2.push((symbol.clone(), Vec::new())),
            }
        }
        result
    }

    /// Convenience for non-batched ingestion (oracle comparisons, series
    /// export): feeds events without touching the subscription.
    pub fn ingest_all<'a>(&mut self, events: impl IntoIterator<Item = &'a TickEvent>) {
        let opts = IngestOptions {
            spec: self.spec,
            suppress_first_window_advice: self.config.suppress_first_window_advice,
            retain: self.config.retention == Retention::Full,
        };
        for event in events {
            let window = window_of(event.trading_ts, opts.spec);
            let shard = self.shard_of(&event.symbol);
            let state = self.shards[shard].entry(event.symbol.clone()).or_default();
            if ingest_event(state, &event.symbol, window, event.last_price_f64(), &opts)
                == Ingest::LateDropped
            {
                self.late_events += 1;
            }
        }
    }

    /// Chronological per-window series of one symbol. Unseen symbols yield
    /// an empty series.
    pub fn snapshot_series(&self, symbol: &Symbol) -> Result<&[SeriesRow], EngineError> {
        if self.config.retention != Retention::Full {
            return Err(EngineError::RetentionDisabled);
        }
        Ok(self.state(symbol).map_or(&[], |s| s.history.as_slice()))
    }

    /// Full retained history of every symbol, sorted by (symbol, window),
    /// in the shape the verifier consumes.
    pub fn dump_rows(&self) -> Result<Vec<DumpRow>, EngineError> {
        if self.config.retention != Retention::Full {
            return Err(EngineError::RetentionDisabled);
        }
        let mut rows = Vec::new();
        for shard in &self.shards {
            for (symbol, state) in shard {
                let name = symbol.to_string();
                rows.extend(state.history.iter().map(|r| DumpRow {
                    symbol: name.clone(),
                    day: r.window.day_ordinal,
                    slot: r.window.slot,
                    close: r.close,
                    ema38: r.pair.ema38,
                    ema100: r.pair.ema100,
                    advisory: r.advisory,
                }));
            }
        }
        rows.sort_by(|a, b| (&a.symbol, a.day, a.slot).cmp(&(&b.symbol, b.day, b.slot)));
        Ok(rows)
    }

    /// Iterates all tracked symbols with their state, shard by shard.
    pub fn symbols(&self) -> impl Iterator<Item = (&Symbol, &SymbolState)> {
        self.shards.iter().flat_map(|s| s.iter())
    }
}

// Fixed hash for shard routing so placement never depends on process state.
fn fnv1a(symbol: &Symbol) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    let mut step = |b: u8| {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    };
    for b in symbol.base().bytes() {
        step(b);
    }
    step(b'.');
    for b in symbol.exchange().code().bytes() {
        step(b);
    }
    hash
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marketdata::{Exchange, Price, TickTimestamp};

    fn sym(name: &str) -> Symbol {
        Symbol::new(name, Exchange::Fr).unwrap()
    }

    fn event(name: &str, price: &str, time: &str) -> TickEvent {
        TickEvent {
            symbol: sym(name),
            sec_type: crate::marketdata::SecurityType::Equity,
            last_price: Price::parse(price).unwrap(),
            trading_ts: TickTimestamp::new(
                TickTimestamp::parse_date("08-11-2021").unwrap(),
                TickTimestamp::parse_time(time).unwrap(),
            )
            .unwrap(),
        }
    }

    fn engine(shards: usize) -> Engine {
        Engine::new(EngineConfig {
            shards,
            ..EngineConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn first_event_opens_window_without_ema() {
        let mut eng = engine(1);
        eng.ingest_all([&event("A", "10.0", "09:00:00.0000")]);
        let state = eng.state(&sym("A")).unwrap();
        assert_eq!(state.closed_windows(), 0);
        assert_eq!(state.curr_pair(), EmaPair::ZERO);
    }

    #[test]
    fn last_write_wins_within_window() {
        let mut eng = engine(1);
        eng.ingest_all([
            &event("A", "10.0", "09:00:00.0000"),
            &event("A", "11.0", "09:04:59.9999"),
            &event("A", "12.0", "09:05:00.0000"), // closes the first window
        ]);
        let state = eng.state(&sym("A")).unwrap();
        assert_eq!(state.closed_windows(), 1);
        // closed with 11.0, the last price observed in the window
        assert_eq!(state.curr_pair(), ema_step(EmaPair::ZERO, 11.0));
    }

    #[test]
    fn gap_windows_do_not_step_the_ema() {
        let mut eng = engine(1);
        eng.ingest_all([
            &event("A", "10.0", "09:00:00.0000"),
            // two-window jump: 09:00–09:05 closes once, 09:05–09:10 is empty
            &event("A", "20.0", "09:12:00.0000"),
        ]);
        let state = eng.state(&sym("A")).unwrap();
        assert_eq!(state.closed_windows(), 1);
        assert_eq!(state.curr_pair(), ema_step(EmaPair::ZERO, 10.0));
    }

    #[test]
    fn late_events_are_dropped_and_counted() {
        let mut eng = engine(1);
        eng.ingest_all([
            &event("A", "10.0", "09:05:00.0000"),
            &event("A", "99.0", "09:00:00.0000"), // earlier window
        ]);
        assert_eq!(eng.late_events(), 1);
        let state = eng.state(&sym("A")).unwrap();
        assert_eq!(state.closed_windows(), 0);
        assert_eq!(state.pending_close, Some(10.0));
    }

    #[test]
    fn first_close_emits_buy_and_ring_caps_at_three() {
        let mut eng = engine(1);
        // alternate closes far apart to force a crossover on many windows
        let prices = ["100.0", "1.0", "100.0", "1.0", "100.0", "1.0", "100.0"];
        let events: Vec<TickEvent> = prices
            .iter()
            .enumerate()
            .map(|(i, p)| {
                event(
                    "A",
                    p,
                    &format!("{:02}:{:02}:00.0000", 9 + (i * 5) / 60, (i * 5) % 60),
                )
            })
            .collect();
        eng.ingest_all(events.iter());
        let state = eng.state(&sym("A")).unwrap();
        assert_eq!(state.closed_windows(), 6);
        let ring = state.advisories();
        assert!(ring.len() <= 3);
        // chronological: window ids strictly increasing
        for pair in ring.windows(2) {
            assert!(pair[0].window < pair[1].window);
        }
    }

    #[test]
    fn suppress_first_window_advice_flag() {
        let mut eng = Engine::new(EngineConfig {
            suppress_first_window_advice: true,
            shards: 1,
            ..EngineConfig::default()
        })
        .unwrap();
        eng.ingest_all([
            &event("A", "10.0", "09:00:00.0000"),
            &event("A", "10.0", "09:05:00.0000"),
        ]);
        assert!(eng.state(&sym("A")).unwrap().advisories().is_empty());
    }

    #[test]
    fn process_batch_replaces_subscription_and_answers() {
        let mut eng = engine(2);
        let batch = Batch {
            events: vec![
                event("A", "10.0", "09:00:00.0000"),
                event("A", "10.0", "09:05:00.0000"),
                event("B", "5.0", "09:01:00.0000"),
            ],
            lookup_symbols: vec![sym("A"), sym("B"), sym("C")],
            last: false,
        };
        let result = eng.process_batch(&batch);
        // A has a closed window; B is open-only; C is unseen.
        assert_eq!(result.q1.len(), 1);
        assert_eq!(result.q1[0].0, sym("A"));
        assert_eq!(result.q1[0].1, ema_step(EmaPair::ZERO, 10.0));
        assert_eq!(result.q2.len(), 3);
        assert_eq!(result.q2[0].1.len(), 1); // first-window buy
        assert!(result.q2[1].1.is_empty());
        assert!(result.q2[2].1.is_empty());
        assert_eq!(eng.subscription().symbols().len(), 3);

        // next batch subscription replaces, never merges
        let result = eng.process_batch(&Batch {
            lookup_symbols: vec![sym("B")],
            ..Batch::default()
        });
        assert_eq!(eng.subscription().symbols(), &[sym("B")]);
        assert!(result.q1.is_empty());
    }

    #[test]
    fn empty_batch_empty_subscription() {
        let mut eng = engine(1);
        let result = eng.process_batch(&Batch::default());
        assert_eq!(result, BatchResult::default());
    }

    #[test]
    fn unsubscribed_symbols_still_advance() {
        let mut eng = engine(2);
        eng.process_batch(&Batch {
            events: vec![
                event("A", "10.0", "09:00:00.0000"),
                event("A", "10.0", "09:05:00.0000"),
            ],
            lookup_symbols: vec![],
            last: false,
        });
        // subscribe late: the answer reflects all history
        let result = eng.process_batch(&Batch {
            lookup_symbols: vec![sym("A")],
            ..Batch::default()
        });
        assert_eq!(result.q1, vec![(sym("A"), ema_step(EmaPair::ZERO, 10.0))]);
    }

    #[test]
    fn snapshot_series_requires_retention() {
        let eng = engine(1);
        assert_eq!(
            eng.snapshot_series(&sym("A")),
            Err(EngineError::RetentionDisabled)
        );

        let mut eng = Engine::new(EngineConfig {
            retention: Retention::Full,
            shards: 1,
            ..EngineConfig::default()
        })
        .unwrap();
        assert_eq!(eng.snapshot_series(&sym("A")).unwrap(), &[]);
        eng.ingest_all([
            &event("A", "10.0", "09:00:00.0000"),
            &event("A", "10.0", "09:05:00.0000"),
            &event("A", "10.0", "09:10:00.0000"),
            &event("A", "10.0", "09:15:00.0000"),
        ]);
        let series = eng.snapshot_series(&sym("A")).unwrap();
        assert_eq!(series.len(), 3);
        assert!(series[0].pair.ema38 < series[1].pair.ema38);
        assert!(series[1].pair.ema38 < series[2].pair.ema38);
        assert_eq!(series[0].advisory, Some(CrossoverKind::Buy));
        assert_eq!(series[1].advisory, None);
    }

    #[test]
    fn shard_count_does_not_change_results() {
        let events: Vec<TickEvent> = (0..200)
            .map(|i| {
                event(
                    &format!("S{}", i % 17),
                    &format!("{}.5", 10 + i % 7),
                    &format!("{:02}:{:02}:{:02}.0000", 9 + i / 120, (i / 2) % 60, i % 60),
                )
            })
            .collect();
        let mut one = engine(1);
        let mut many = engine(7);
        one.ingest_all(events.iter());
        many.ingest_all(events.iter());
        for (symbol, state) in one.symbols() {
            assert_eq!(many.state(symbol), Some(state));
        }
    }

    #[test]
    fn config_parse_round_trip() {
        let text = "\n# engine tuning\nwindow_minutes = 10\nsuppress_first_window_advice = true\nretention = full\nshards = 3\n";
        let config = EngineConfig::parse(text).unwrap();
        assert_eq!(config.window_minutes, 10);
        assert!(config.suppress_first_window_advice);
        assert_eq!(config.retention, Retention::Full);
        assert_eq!(config.shards, 3);

        assert!(EngineConfig::parse("bogus = 1").is_err());
        assert!(EngineConfig::parse("retention = sometimes").is_err());
        assert!(EngineConfig::parse("shards = 0").is_err());
        assert_eq!(EngineConfig::parse("").unwrap(), EngineConfig::default());
    }
}
