//! Tumbling windows anchored at local midnight. A timestamp maps to the
//! unique half-open interval `[start, start + length)` containing it; an
//! event exactly on a boundary belongs to the next window. A window is
//! evaluated once the next one starts, so its close instant is the start of
//! its successor (rolling over midnight from the last slot of a day).

use thiserror::Error;

use crate::marketdata::TickTimestamp;

const MINUTES_PER_DAY: u32 = 24 * 60;
const NANOS_PER_MINUTE: u64 = 60 * 1_000_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WindowingError {
    #[error("window length {minutes} min must be positive and divide 1440")]
    InvalidLength { minutes: u32 },
}

/// Window geometry: length in whole minutes, anchor fixed at 00:00.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    length_minutes: u32,
}

impl WindowSpec {
    pub const DEFAULT_MINUTES: u32 = 5;

    pub fn new(length_minutes: u32) -> Result<WindowSpec, WindowingError> {
        if length_minutes == 0 || !MINUTES_PER_DAY.is_multiple_of(length_minutes) {
            return Err(WindowingError::InvalidLength {
                minutes: length_minutes,
            });
        }
        Ok(WindowSpec { length_minutes })
    }

    pub fn length_minutes(self) -> u32 {
        self.length_minutes
    }

    pub fn length_ns(self) -> u64 {
        u64::from(self.length_minutes) * NANOS_PER_MINUTE
    }

    pub fn windows_per_day(self) -> u32 {
        MINUTES_PER_DAY / self.length_minutes
    }
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec {
            length_minutes: WindowSpec::DEFAULT_MINUTES,
        }
    }
}

/// Window identity across days: ordering is lexicographic (day, slot), so a
/// week-long stream never aliases slot numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WindowId {
    pub day_ordinal: i64,
    pub slot: u32,
}

impl WindowId {
    pub fn new(day_ordinal: i64, slot: u32) -> WindowId {
        WindowId { day_ordinal, slot }
    }
}

/// The unique window containing `ts`.
pub fn window_of(ts: TickTimestamp, spec: WindowSpec) -> WindowId {
    WindowId {
        day_ordinal: ts.day_ordinal(),
        slot: (ts.time_of_day_ns() / spec.length_ns()) as u32,
    }
}

/// The window that starts where `w` ends.
pub fn successor(w: WindowId, spec: WindowSpec) -> WindowId {
    if w.slot + 1 < spec.windows_per_day() {
        WindowId::new(w.day_ordinal, w.slot + 1)
    } else {
        WindowId::new(w.day_ordinal + 1, 0)
    }
}

pub fn is_successor(a: WindowId, b: WindowId, spec: WindowSpec) -> bool {
    successor(a, spec) == b
}

pub fn window_start_instant(w: WindowId, spec: WindowSpec) -> TickTimestamp {
    TickTimestamp::from_day_ordinal(w.day_ordinal, u64::from(w.slot) * spec.length_ns())
        .expect("slot within day")
}

/// The instant at which `w` is evaluated: the start of the following window.
pub fn window_close_instant(w: WindowId, spec: WindowSpec) -> TickTimestamp {
    window_start_instant(successor(w, spec), spec)
}
