//! Tick-data complex event processing stack: a streaming engine computing
//! dual EMAs over tumbling windows with buy/sell crossover advisories, a
//! batch-replay benchmark harness with latency/throughput scoring, a seeded
//! synthetic tick-data generator, and a brute-force oracle for correctness.

pub mod client;
pub mod datagen;
pub mod dataset;
pub mod engine;
pub mod harness;
pub mod indicators;
pub mod marketdata;
pub mod oracle;
pub mod windowing;
pub mod wireproto;

pub use engine::{Batch, BatchResult, Engine, EngineConfig, Retention, SubscriptionSet};
pub use indicators::{CrossoverAdvisory, CrossoverKind, EmaPair};
pub use marketdata::{Exchange, Price, RawRecord, SecurityType, Symbol, TickEvent, TickTimestamp};
pub use windowing::{WindowId, WindowSpec};
