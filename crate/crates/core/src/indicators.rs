//! Query 1 and Query 2 math: the two-speed EMA recurrence over window close
//! prices and the crossover breakout detector on consecutive window pairs.
//!
//! The EMA of a window weights its close price by `2/(1+j)` against the EMA
//! of the previous evaluated window, with both sequences starting at zero:
//!
//! ```text
//! ema_j(i) = close(i) * (2/(1+j)) + ema_j(i-1) * (1 - 2/(1+j)),   ema_j(0-) = 0
//! ```
//!
//! with smoothing factors j = 38 (short) and j = 100 (long). A buy advisory
//! fires when the short EMA strictly overtakes the long one (prior window
//! had short <= long); a sell advisory mirrors it with strict `<` against a
//! prior `>=`.

use serde::{Deserialize, Serialize};

use crate::marketdata::Symbol;
use crate::windowing::WindowId;

pub const EMA_SHORT_J: u32 = 38;
pub const EMA_LONG_J: u32 = 100;

const ALPHA_SHORT: f64 = 2.0 / (1.0 + 38.0);
const ALPHA_LONG: f64 = 2.0 / (1.0 + 100.0);

/// The two EMAs of one symbol for one evaluated window. `(0, 0)` is the
/// sentinel state before any window closed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EmaPair {
    pub ema38: f64,
    pub ema100: f64,
}

impl EmaPair {
    pub const ZERO: EmaPair = EmaPair {
        ema38: 0.0,
        ema100: 0.0,
    };

    pub fn new(ema38: f64, ema100: f64) -> EmaPair {
        EmaPair { ema38, ema100 }
    }
}

/// One step of the EMA recurrence, evaluated in f64 in exactly the stated
/// operation order.
pub fn ema_step(prev: EmaPair, close: f64) -> EmaPair {
    EmaPair {
        ema38: close * ALPHA_SHORT + prev.ema38 * (1.0 - ALPHA_SHORT),
        ema100: close * ALPHA_LONG + prev.ema100 * (1.0 - ALPHA_LONG),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrossoverKind {
    Buy,
    Sell,
}

impl CrossoverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CrossoverKind::Buy => "buy",
            CrossoverKind::Sell => "sell",
        }
    }
}

/// Breakout detection between consecutive evaluated windows. Comparisons are
/// strict on the current window and inclusive on the prior one, exactly as
/// defined; equal EMAs in the current window never signal.
pub fn detect_crossover(prev: EmaPair, curr: EmaPair) -> Option<CrossoverKind> {
    if curr.ema38 > curr.ema100 && prev.ema38 <= prev.ema100 {
        Some(CrossoverKind::Buy)
    } else if curr.ema38 < curr.ema100 && prev.ema38 >= prev.ema100 {
        Some(CrossoverKind::Sell)
    } else {
        None
    }
}

/// A buy/sell advisory emitted when a symbol's window close detects a
/// crossover; carries the EMA values at detection.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossoverAdvisory {
    pub symbol: Symbol,
    pub kind: CrossoverKind,
    pub window: WindowId,
    pub ema_pair: EmaPair,
}
