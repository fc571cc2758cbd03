//! Session driver wrapping the engine: create, start, then pull batches and
//! answer both queries until the last-batch flag, then end and collect the
//! summary. Works against any [`ChallengeApi`] — remote TCP or in-process.

use thiserror::Error;

use crate::engine::{Batch, BatchResult, Engine};
use crate::harness::SessionSummary;
use crate::marketdata::{MarketDataError, Price, Symbol, TickEvent, TickTimestamp};
use crate::windowing::{window_close_instant, WindowSpec};
use crate::wireproto::{
    BenchmarkConfig, ChallengeApi, Indicator, WireBatch, WireCrossoverEvent, WireError,
    WireResultQ1, WireResultQ2,
};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("connection failed: {0}")]
    ConnectionFailed(#[from] std::io::Error),
    #[error("protocol violation: {0}")]
    Rpc(#[from] WireError),
    #[error("bad event on wire: {0}")]
    BadEvent(#[from] MarketDataError),
    #[error("bad event timestamp on wire: {0} ns")]
    BadTimestamp(u64),
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub name: String,
    pub dataset_seed: u64,
    pub batch_size: u32,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            name: "tickcep-engine".into(),
            dataset_seed: 0,
            batch_size: 1000,
        }
    }
}

fn decode_batch(wire: &WireBatch) -> Result<Batch, ClientError> {
    let mut events = Vec::with_capacity(wire.events.len());
    for ev in &wire.events {
        events.push(TickEvent {
            symbol: Symbol::parse(&ev.symbol)?,
            sec_type: ev.sec_type,
            last_price: Price::parse(&ev.last_price)?,
            trading_ts: TickTimestamp::from_epoch_ns(ev.trading_ts_ns)
                .ok_or(ClientError::BadTimestamp(ev.trading_ts_ns))?,
        });
    }
    let lookup_symbols = wire
        .lookup_symbols
        .iter()
        .map(|s| Symbol::parse(s))
        .collect::<Result<_, _>>()?;
    Ok(Batch {
        events,
        lookup_symbols,
        last: wire.last,
    })
}

fn q1_result(benchmark_id: u64, seq_id: u64, result: &BatchResult) -> WireResultQ1 {
    WireResultQ1 {
        benchmark_id,
        batch_seq_id: seq_id,
        indicators: result
            .q1
            .iter()
            .map(|(symbol, pair)| Indicator {
                symbol: symbol.to_string(),
                ema38: pair.ema38,
                ema100: pair.ema100,
            })
            .collect(),
    }
}

fn q2_result(
    benchmark_id: u64,
    seq_id: u64,
    result: &BatchResult,
    spec: WindowSpec,
) -> WireResultQ2 {
    WireResultQ2 {
        benchmark_id,
        batch_seq_id: seq_id,
        crossover_events: result
            .q2
            .iter()
            .flat_map(|(symbol, ring)| {
                ring.iter().map(move |advisory| WireCrossoverEvent {
                    symbol: symbol.to_string(),
                    kind: advisory.kind,
                    ts_ns: window_close_instant(advisory.window, spec).epoch_ns(),
                })
            })
            .collect(),
    }
}

pub fn run_session(
    api: &dyn ChallengeApi,
    engine: &mut Engine,
    opts: &SolveOptions,
) -> Result<SessionSummary, ClientError> {
    let spec = engine.window_spec();
    let handle = api.create_benchmark(&BenchmarkConfig {
        name: opts.name.clone(),
        dataset_seed: opts.dataset_seed,
        batch_size: opts.batch_size,
    })?;
    api.start_benchmark(&handle)?;

    loop {
        let wire_batch = api.next_batch(&handle)?;
        let batch = decode_batch(&wire_batch)?;
        let result = engine.process_batch(&batch);
        api.result_q1(&handle, &q1_result(handle.id, wire_batch.seq_id, &result))?;
        api.result_q2(
            &handle,
            &q2_result(handle.id, wire_batch.seq_id, &result, spec),
        )?;
        if wire_batch.last {
            break;
        }
    }
    Ok(api.end_benchmark(&handle)?)
}
