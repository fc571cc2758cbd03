//! Brute-force single-threaded reference for Query 1 and Query 2 over a whole
//! dataset, used as ground truth when verifying the engine. The window, EMA
//! and crossover math here is intentionally written out again rather than
//! calling into the streaming modules, so a bug on either side shows up as a
//! diff instead of cancelling out. Windows are kept as one linearized index
//! (`day * windows_per_day + slot`) instead of the engine's (day, slot) pair.

use std::collections::BTreeMap;
use std::fmt;

use crate::engine::DumpRow;
use crate::indicators::CrossoverKind;
use crate::marketdata::TickEvent;
use crate::windowing::WindowId;

#[derive(Debug, Clone, Copy)]
pub struct OracleConfig {
    pub window_minutes: u32,
    pub suppress_first_window_advice: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            window_minutes: 5,
            suppress_first_window_advice: false,
        }
    }
}

/// One evaluated window of one symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleRow {
    pub window: WindowId,
    pub close: f64,
    pub ema38: f64,
    pub ema100: f64,
    pub advisory: Option<CrossoverKind>,
}

/// Exhaustive per-window results for every symbol, keyed by symbol text.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OracleOutput {
    pub per_symbol: BTreeMap<String, Vec<OracleRow>>,
    pub late_events: u64,
}

/// Two-pass scan: group events by symbol in arrival order, then fold the
/// recurrence per symbol. Shares the engine's semantics by specification:
/// half-open windows, only event-bearing windows advance the EMA, events in
/// an earlier window than the open one are dropped, and the final open
/// window is never evaluated.
pub fn oracle_run(events: &[TickEvent], config: OracleConfig) -> OracleOutput {
    assert!(
        config.window_minutes > 0 && 1440 % config.window_minutes == 0,
        "window length must divide the day"
    );
    let window_ns = u64::from(config.window_minutes) * 60 * 1_000_000_000;
    let per_day = i64::from(1440 / config.window_minutes);

    let mut grouped: BTreeMap<String, Vec<&TickEvent>> = BTreeMap::new();
    for event in events {
        grouped
            .entry(event.symbol.to_string())
            .or_default()
            .push(event);
    }

    let alpha38 = 2.0 / (1.0 + 38.0);
    let alpha100 = 2.0 / (1.0 + 100.0);

    let mut output = OracleOutput::default();
    for (symbol, events) in grouped {
        let mut rows = Vec::new();
        let mut open: Option<(i64, f64)> = None; // (linear window index, running close)
        let mut ema38 = 0.0f64;
        let mut ema100 = 0.0f64;

        for event in events {
            let ts = event.trading_ts;
            let index = ts.day_ordinal() * per_day + (ts.time_of_day_ns() / window_ns) as i64;
            let price = event.last_price_f64();
            match open {
                None => open = Some((index, price)),
                Some((w, _)) if index == w => open = Some((w, price)),
                Some((w, _)) if index < w => output.late_events += 1,
                Some((w, close)) => {
                    let prev38 = ema38;
                    let prev100 = ema100;
                    ema38 = close * alpha38 + prev38 * (1.0 - alpha38);
                    ema100 = close * alpha100 + prev100 * (1.0 - alpha100);
                    let advisory = if rows.is_empty() && config.suppress_first_window_advice {
                        None
                    } else if ema38 > ema100 && prev38 <= prev100 {
                        Some(CrossoverKind::Buy)
                    } else if ema38 < ema100 && prev38 >= prev100 {
                        Some(CrossoverKind::Sell)
                    } else {
                        None
                    };
                    rows.push(OracleRow {
                        window: WindowId::new(w.div_euclid(per_day), w.rem_euclid(per_day) as u32),
                        close,
                        ema38,
                        ema100,
                        advisory,
                    });
                    open = Some((index, price));
                }
            }
        }
        output.per_symbol.insert(symbol, rows);
    }
    output
}

/// One field-level disagreement between oracle and engine output.
#[derive(Debug, Clone, PartialEq)]
pub struct Discrepancy {
    pub symbol: String,
    pub detail: String,
}

impl fmt::Display for Discrepancy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.symbol, self.detail)
    }
}

const EMA_REL_TOL: f64 = 1e-9;

fn ema_close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= EMA_REL_TOL * a.abs().max(b.abs())
}

/// Field-wise comparison of the oracle against an engine dump. EMAs compare
/// with relative tolerance 1e-9; windows, closes and advisories exactly.
pub fn diff(oracle: &OracleOutput, engine_rows: &[DumpRow]) -> Vec<Discrepancy> {
    let mut engine: BTreeMap<&str, Vec<&DumpRow>> = BTreeMap::new();
    for row in engine_rows {
        engine.entry(&row.symbol).or_default().push(row);
    }

    let mut out = Vec::new();
    fn push(out: &mut Vec<Discrepancy>, symbol: &str, detail: String) {
        out.push(Discrepancy {
            symbol: symbol.to_string(),
            detail,
        });
    }

    for symbol in engine.keys() {
        if !oracle.per_symbol.contains_key(*symbol) {
            push(
                &mut out,
                symbol,
                "engine tracks a symbol the oracle never saw".into(),
            );
        }
    }
    for (symbol, expected) in &oracle.per_symbol {
        let actual = engine.get(symbol.as_str()).cloned().unwrap_or_default();
        if expected.len() != actual.len() {
            if !(expected.is_empty() && actual.is_empty()) {
                push(
                    &mut out,
                    symbol,
                    format!(
                        "window count mismatch: oracle {}, engine {}",
                        expected.len(),
                        actual.len()
                    ),
                );
            }
            continue;
        }
        for (exp, act) in expected.iter().zip(actual) {
            let window = WindowId::new(act.day, act.slot);
            if exp.window != window {
                push(
                    &mut out,
                    symbol,
                    format!(
                        "window mismatch: oracle {:?}, engine {:?}",
                        exp.window, window
                    ),
                );
            } else if exp.close != act.close {
                push(
                    &mut out,
                    symbol,
                    format!(
                        "close mismatch at {:?}: oracle {}, engine {}",
                        exp.window, exp.close, act.close
                    ),
                );
            } else if !ema_close(exp.ema38, act.ema38) || !ema_close(exp.ema100, act.ema100) {
                push(
                    &mut out,
                    symbol,
                    format!(
                        "ema mismatch at {:?}: oracle ({}, {}), engine ({}, {})",
                        exp.window, exp.ema38, exp.ema100, act.ema38, act.ema100
                    ),
                );
            } else if exp.advisory != act.advisory {
                push(
                    &mut out,
                    symbol,
                    format!(
                        "advisory mismatch at {:?}: oracle {:?}, engine {:?}",
                        exp.window, exp.advisory, act.advisory
                    ),
                );
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marketdata::{Exchange, Price, SecurityType, Symbol, TickTimestamp};

    fn event(name: &str, price: &str, time: &str) -> TickEvent {
        TickEvent {
            symbol: Symbol::new(name, Exchange::Nl).unwrap(),
            sec_type: SecurityType::Index,
            last_price: Price::parse(price).unwrap(),
            trading_ts: TickTimestamp::new(
                TickTimestamp::parse_date("08-11-2021").unwrap(),
                TickTimestamp::parse_time(time).unwrap(),
            )
            .unwrap(),
        }
    }

    #[test]
    fn empty_dataset_empty_output() {
        let out = oracle_run(&[], OracleConfig::default());
        assert!(out.per_symbol.is_empty());
        assert_eq!(out.late_events, 0);
    }

    #[test]
    fn one_symbol_two_windows_constant_price() {
        let events = vec![
            event("A", "100.0", "09:00:00.0000"),
            event("A", "100.0", "09:05:00.0000"),
        ];
        let out = oracle_run(&events, OracleConfig::default());
        let rows = &out.per_symbol["A.NL"];
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].close, 100.0);
        assert_eq!(rows[0].ema38, 100.0 * (2.0 / 39.0));
        assert_eq!(rows[0].ema100, 100.0 * (2.0 / 101.0));
        assert_eq!(rows[0].advisory, Some(CrossoverKind::Buy));
        assert_eq!(rows[0].window.slot, 108); // 09:00 / 5 min
    }

    #[test]
    fn identical_outputs_diff_empty() {
        let events = vec![
            event("A", "10.0", "09:00:00.0000"),
            event("A", "12.0", "09:05:00.0000"),
            event("A", "9.0", "09:10:00.0000"),
            event("B", "5.0", "09:02:00.0000"),
        ];
        let out = oracle_run(&events, OracleConfig::default());
        let rows: Vec<DumpRow> = out
            .per_symbol
            .iter()
            .flat_map(|(symbol, rows)| {
                rows.iter().map(move |r| DumpRow {
                    symbol: symbol.clone(),
                    day: r.window.day_ordinal,
                    slot: r.window.slot,
                    close: r.close,
                    ema38: r.ema38,
                    ema100: r.ema100,
                    advisory: r.advisory,
                })
            })
            .collect();
        assert!(diff(&out, &rows).is_empty());

        // perturbing an EMA by 1e-6 relative must be flagged
        let mut perturbed = rows.clone();
        perturbed[0].ema38 *= 1.0 + 1e-6;
        let diffs = diff(&out, &perturbed);
        assert_eq!(diffs.len(), 1);
        assert!(diffs[0].detail.contains("ema mismatch"));

        // dropping a row must be flagged
        let mut missing = rows.clone();
        missing.pop();
        assert!(!diff(&out, &missing).is_empty());
    }

    #[test]
    fn late_events_are_dropped() {
        let events = vec![
            event("A", "10.0", "09:05:00.0000"),
            event("A", "99.0", "09:00:00.0000"),
            event("A", "11.0", "09:10:00.0000"),
        ];
        let out = oracle_run(&events, OracleConfig::default());
        assert_eq!(out.late_events, 1);
        let rows = &out.per_symbol["A.NL"];
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].close, 10.0);
    }

    // A mutant that assigns boundary instants to the *earlier* window (a
    // closed-interval end). The diff against the oracle must catch it on a
    // fixture with an event exactly on a window boundary.
    fn closed_boundary_mutant(events: &[TickEvent]) -> Vec<DumpRow> {
        let window_ns = 5 * 60 * 1_000_000_000u64;
        let mut rows = Vec::new();
        let mut open: Option<(i64, f64)> = None;
        let (mut e38, mut e100) = (0.0f64, 0.0f64);
        for ev in events {
            let ts = ev.trading_ts;
            let mut idx = ts.day_ordinal() * 288 + (ts.time_of_day_ns() / window_ns) as i64;
            if ts.time_of_day_ns() % window_ns == 0 && ts.time_of_day_ns() > 0 {
                idx -= 1; // the flipped boundary rule
            }
            let price = ev.last_price_f64();
            match open {
                None => open = Some((idx, price)),
                Some((w, _)) if idx == w => open = Some((w, price)),
                Some((w, _)) if idx < w => {}
                Some((w, close)) => {
                    let (p38, p100) = (e38, e100);
                    e38 = close * (2.0 / 39.0) + p38 * (1.0 - 2.0 / 39.0);
                    e100 = close * (2.0 / 101.0) + p100 * (1.0 - 2.0 / 101.0);
                    let advisory = if e38 > e100 && p38 <= p100 {
                        Some(CrossoverKind::Buy)
                    } else if e38 < e100 && p38 >= p100 {
                        Some(CrossoverKind::Sell)
                    } else {
                        None
                    };
                    rows.push(DumpRow {
                        symbol: ev.symbol.to_string(),
                        day: w.div_euclid(288),
                        slot: w.rem_euclid(288) as u32,
                        close,
                        ema38: e38,
                        ema100: e100,
                        advisory,
                    });
                    open = Some((idx, price));
                }
            }
        }
        rows
    }

    #[test]
    fn flipped_boundary_rule_is_caught() {
        // the middle event sits exactly on the 09:05 boundary
        let events = vec![
            event("A", "10.0", "09:00:00.0000"),
            event("A", "20.0", "09:05:00.0000"),
            event("A", "30.0", "09:10:00.0000"),
        ];
        let out = oracle_run(&events, OracleConfig::default());
        // half-open: two evaluated windows, closes 10 then 20
        assert_eq!(out.per_symbol["A.NL"].len(), 2);

        let mutant = closed_boundary_mutant(&events);
        assert!(
            !diff(&out, &mutant).is_empty(),
            "mutant slipped through the diff"
        );

        // on a boundary-free stream the mutant agrees and the diff is empty
        let clean = vec![
            event("A", "10.0", "09:00:01.0000"),
            event("A", "20.0", "09:05:01.0000"),
            event("A", "30.0", "09:10:01.0000"),
        ];
        let out = oracle_run(&clean, OracleConfig::default());
        assert!(diff(&out, &closed_boundary_mutant(&clean)).is_empty());
    }
}
