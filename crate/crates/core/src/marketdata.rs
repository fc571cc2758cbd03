//! Domain types for symbols and tick events, plus a bit-exact codec for the
//! 39-column flat CSV tick format (one file per day, comma-separated, no
//! quoting, empty field = NULL).

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use thiserror::Error;

/// Number of positional columns in one CSV record.
pub const COLUMN_COUNT: usize = 39;

/// 1-based column ids of the fields the engine actually consumes.
pub const COL_ID: usize = 1;
pub const COL_SEC_TYPE: usize = 2;
pub const COL_LAST: usize = 22;
pub const COL_TRADING_TIME: usize = 24;
pub const COL_TRADING_DATE: usize = 27;

const NANOS_PER_DAY: u64 = 86_400 * 1_000_000_000;
/// CSV time resolution: 100 microseconds.
const NANOS_PER_TICK: u64 = 100_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MarketDataError {
    #[error("expected {COLUMN_COUNT} fields, found {found}")]
    FieldCountMismatch { found: usize },
    #[error("column {column}: malformed value {value:?}: {reason}")]
    MalformedField {
        column: usize,
        value: String,
        reason: String,
    },
}

fn malformed(column: usize, value: &str, reason: impl Into<String>) -> MarketDataError {
    MarketDataError::MalformedField {
        column,
        value: value.to_string(),
        reason: reason.into(),
    }
}

/// Exchange a symbol trades on. The dataset covers exactly these three.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Exchange {
    Fr,
    Nl,
    Etr,
}

impl Exchange {
    pub const ALL: [Exchange; 3] = [Exchange::Etr, Exchange::Fr, Exchange::Nl];

    pub fn code(self) -> &'static str {
        match self {
            Exchange::Fr => "FR",
            Exchange::Nl => "NL",
            Exchange::Etr => "ETR",
        }
    }

    pub fn from_code(code: &str) -> Option<Exchange> {
        match code {
            "FR" => Some(Exchange::Fr),
            "NL" => Some(Exchange::Nl),
            "ETR" => Some(Exchange::Etr),
            _ => None,
        }
    }
}

impl fmt::Display for Exchange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Instrument instance identifier, canonical text form `<base>.<exchange>`
/// (e.g. `RDSA.NL`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol {
    base: String,
    exchange: Exchange,
}

impl Symbol {
    pub fn new(base: impl Into<String>, exchange: Exchange) -> Result<Symbol, MarketDataError> {
        let base = base.into();
        if base.is_empty() {
            return Err(malformed(COL_ID, &base, "empty symbol base"));
        }
        if base.contains('.') || base.chars().any(char::is_whitespace) {
            return Err(malformed(
                COL_ID,
                &base,
                "symbol base contains '.' or whitespace",
            ));
        }
        Ok(Symbol { base, exchange })
    }

    pub fn parse(text: &str) -> Result<Symbol, MarketDataError> {
        let (base, code) = text
            .rsplit_once('.')
            .ok_or_else(|| malformed(COL_ID, text, "missing '.' exchange separator"))?;
        let exchange = Exchange::from_code(code)
            .ok_or_else(|| malformed(COL_ID, text, format!("unknown exchange suffix {code:?}")))?;
        Symbol::new(base, exchange)
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    pub fn exchange(&self) -> Exchange {
        self.exchange
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.base, self.exchange.code())
    }
}

impl FromStr for Symbol {
    type Err = MarketDataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Symbol::parse(s)
    }
}

/// Security type, encoded `E`/`I` in the CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SecurityType {
    Equity,
    Index,
}

impl SecurityType {
    pub fn code(self) -> &'static str {
        match self {
            SecurityType::Equity => "E",
            SecurityType::Index => "I",
        }
    }

    pub fn from_code(code: &str) -> Option<SecurityType> {
        match code {
            "E" => Some(SecurityType::Equity),
            "I" => Some(SecurityType::Index),
            _ => None,
        }
    }
}

impl fmt::Display for SecurityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Fixed-point decimal price: `mantissa / 10^scale`. Keeps the CSV text exact
/// while EMA math runs on the `f64` value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Price {
    mantissa: i64,
    scale: u32,
}

/// Widest fractional-digit count the codec accepts (the format needs six).
pub const MAX_PRICE_SCALE: u32 = 12;

impl Price {
    pub fn new(mantissa: i64, scale: u32) -> Option<Price> {
        (scale <= MAX_PRICE_SCALE).then_some(Price { mantissa, scale })
    }

    pub fn parse(text: &str) -> Result<Price, MarketDataError> {
        let err = |reason: &str| malformed(COL_LAST, text, reason);
        let (negative, digits) = match text.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, text),
        };
        let (int_part, frac_part) = match digits.split_once('.') {
            Some((i, f)) => (i, f),
            None => (digits, ""),
        };
        if int_part.is_empty() || !int_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err("bad integer part"));
        }
        if digits.contains('.')
            && (frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()))
        {
            return Err(err("bad fractional part"));
        }
        if frac_part.len() as u32 > MAX_PRICE_SCALE {
            return Err(err("too many fractional digits"));
        }
        let mut mantissa: i64 = 0;
        for b in int_part.bytes().chain(frac_part.bytes()) {
            mantissa = mantissa
                .checked_mul(10)
                .and_then(|m| m.checked_add(i64::from(b - b'0')))
                .ok_or_else(|| err("value out of range"))?;
        }
        if negative {
            mantissa = -mantissa;
        }
        Ok(Price {
            mantissa,
            scale: frac_part.len() as u32,
        })
    }

    pub fn value(self) -> f64 {
        self.mantissa as f64 / 10f64.powi(self.scale as i32)
    }

    pub fn is_positive(self) -> bool {
        self.mantissa > 0
    }
}

impl fmt::Display for Price {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.scale == 0 {
            return write!(f, "{}", self.mantissa);
        }
        let sign = if self.mantissa < 0 { "-" } else { "" };
        let abs = self.mantissa.unsigned_abs();
        let pow = 10u64.pow(self.scale);
        write!(
            f,
            "{sign}{}.{:0width$}",
            abs / pow,
            abs % pow,
            width = self.scale as usize
        )
    }
}

/// Event timestamp: calendar date plus nanoseconds since local midnight.
/// The CSV carries `HH:MM:SS.ssss` (100 µs) and `DD-MM-YYYY`; the clock is
/// treated as opaque local time, no timezone arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TickTimestamp {
    date: NaiveDate,
    time_of_day_ns: u64,
}

impl TickTimestamp {
    pub fn new(date: NaiveDate, time_of_day_ns: u64) -> Option<TickTimestamp> {
        (time_of_day_ns < NANOS_PER_DAY).then_some(TickTimestamp {
            date,
            time_of_day_ns,
        })
    }

    pub fn date(&self) -> NaiveDate {
        self.date
    }

    pub fn time_of_day_ns(&self) -> u64 {
        self.time_of_day_ns
    }

    /// Days since 1970-01-01 of the date component.
    pub fn day_ordinal(&self) -> i64 {
        i64::from(self.date.num_days_from_ce()) - EPOCH_DAYS_FROM_CE
    }

    pub fn from_day_ordinal(day: i64, time_of_day_ns: u64) -> Option<TickTimestamp> {
        let date =
            NaiveDate::from_num_days_from_ce_opt(i32::try_from(day + EPOCH_DAYS_FROM_CE).ok()?)?;
        TickTimestamp::new(date, time_of_day_ns)
    }

    /// Absolute nanoseconds since the 1970-01-01 midnight of the data's clock.
    pub fn epoch_ns(&self) -> u64 {
        self.day_ordinal() as u64 * NANOS_PER_DAY + self.time_of_day_ns
    }

    pub fn from_epoch_ns(ns: u64) -> Option<TickTimestamp> {
        TickTimestamp::from_day_ordinal((ns / NANOS_PER_DAY) as i64, ns % NANOS_PER_DAY)
    }

    pub fn parse_time(text: &str) -> Result<u64, MarketDataError> {
        let err = |reason: &str| malformed(COL_TRADING_TIME, text, reason);
        let bytes = text.as_bytes();
        // strict HH:MM:SS.ssss
        if bytes.len() != 13 || bytes[2] != b':' || bytes[5] != b':' || bytes[8] != b'.' {
            return Err(err("expected HH:MM:SS.ssss"));
        }
        let num = |range: std::ops::Range<usize>| -> Result<u64, MarketDataError> {
            let s = &text[range];
            if !s.bytes().all(|b| b.is_ascii_digit()) {
                return Err(err("non-digit in time"));
            }
            Ok(s.parse().unwrap())
        };
        let (h, m, s, ticks) = (num(0..2)?, num(3..5)?, num(6..8)?, num(9..13)?);
        if h >= 24 || m >= 60 || s >= 60 {
            return Err(err("time component out of range"));
        }
        Ok(((h * 3600 + m * 60 + s) * 10_000 + ticks) * NANOS_PER_TICK)
    }

    pub fn format_time(time_of_day_ns: u64) -> String {
        let ticks = time_of_day_ns / NANOS_PER_TICK;
        let (secs, sub) = (ticks / 10_000, ticks % 10_000);
        format!(
            "{:02}:{:02}:{:02}.{:04}",
            secs / 3600,
            secs / 60 % 60,
            secs % 60,
            sub
        )
    }

    pub fn parse_date(text: &str) -> Result<NaiveDate, MarketDataError> {
        let err = |reason: &str| malformed(COL_TRADING_DATE, text, reason);
        let bytes = text.as_bytes();
        // strict DD-MM-YYYY
        if bytes.len() != 10 || bytes[2] != b'-' || bytes[5] != b'-' {
            return Err(err("expected DD-MM-YYYY"));
        }
        if !text[0..2].bytes().all(|b| b.is_ascii_digit())
            || !text[3..5].bytes().all(|b| b.is_ascii_digit())
            || !text[6..10].bytes().all(|b| b.is_ascii_digit())
        {
            return Err(err("non-digit in date"));
        }
        let day: u32 = text[0..2].parse().unwrap();
        let month: u32 = text[3..5].parse().unwrap();
        let year: i32 = text[6..10].parse().unwrap();
        NaiveDate::from_ymd_opt(year, month, day).ok_or_else(|| err("no such calendar date"))
    }

    pub fn format_date(date: NaiveDate) -> String {
        format!("{:02}-{:02}-{:04}", date.day(), date.month(), date.year())
    }
}

const EPOCH_DAYS_FROM_CE: i64 = 719_163; // 1970-01-01

impl fmt::Display for TickTimestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}",
            TickTimestamp::format_date(self.date),
            TickTimestamp::format_time(self.time_of_day_ns)
        )
    }
}

/// One price event: the starred subset of a CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct TickEvent {
    pub symbol: Symbol,
    pub sec_type: SecurityType,
    pub last_price: Price,
    pub trading_ts: TickTimestamp,
}

impl TickEvent {
    pub fn last_price_f64(&self) -> f64 {
        self.last_price.value()
    }
}

/// One CSV row: exactly 39 positional fields, `None` for NULL (empty field).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRecord {
    columns: Vec<Option<String>>,
}

impl RawRecord {
    pub fn empty() -> RawRecord {
        RawRecord {
            columns: vec![None; COLUMN_COUNT],
        }
    }

    pub fn from_fields(columns: Vec<Option<String>>) -> Result<RawRecord, MarketDataError> {
        if columns.len() != COLUMN_COUNT {
            return Err(MarketDataError::FieldCountMismatch {
                found: columns.len(),
            });
        }
        Ok(RawRecord { columns })
    }

    /// Field by 1-based column id; `None` means NULL.
    pub fn get(&self, column: usize) -> Option<&str> {
        self.columns[column - 1].as_deref()
    }

    pub fn set(&mut self, column: usize, value: impl Into<String>) {
        self.columns[column - 1] = Some(value.into());
    }

    pub fn clear(&mut self, column: usize) {
        self.columns[column - 1] = None;
    }
}

/// Classification of a raw record: a price event or anything else
/// (bid/ask/housekeeping rows keep streaming past the engine untyped).
#[derive(Debug, Clone, PartialEq)]
pub enum Classified {
    Price(TickEvent),
    NotAPriceEvent,
}

/// Splits one CSV line into its 39 positional fields. The format never quotes
/// or embeds separators, so this is a plain comma split.
pub fn parse_csv_line(line: &str) -> Result<RawRecord, MarketDataError> {
    let mut columns = Vec::with_capacity(COLUMN_COUNT);
    for field in line.split(',') {
        columns.push((!field.is_empty()).then(|| field.to_string()));
    }
    RawRecord::from_fields(columns)
}

/// Inverse of [`parse_csv_line`]; NULL renders as the empty field.
pub fn format_csv_line(record: &RawRecord) -> String {
    let mut out = String::new();
    for (i, col) in record.columns.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        if let Some(v) = col {
            out.push_str(v);
        }
    }
    out
}

/// Returns a [`TickEvent`] iff Last, Trading time and Trading date are all
/// populated; otherwise the row is not a price event. A price event whose
/// starred columns fail to parse (bad number/date/time, unknown exchange,
/// non-positive price) is malformed.
pub fn classify(record: &RawRecord) -> Result<Classified, MarketDataError> {
    let (last, time, date) = match (
        record.get(COL_LAST),
        record.get(COL_TRADING_TIME),
        record.get(COL_TRADING_DATE),
    ) {
        (Some(l), Some(t), Some(d)) => (l, t, d),
        _ => return Ok(Classified::NotAPriceEvent),
    };

    let last_price = Price::parse(last)?;
    if !last_price.is_positive() {
        return Err(malformed(COL_LAST, last, "price must be positive"));
    }
    let time_of_day = TickTimestamp::parse_time(time)?;
    let date = TickTimestamp::parse_date(date)?;
    let symbol = record
        .get(COL_ID)
        .ok_or_else(|| malformed(COL_ID, "", "price event without symbol"))
        .and_then(Symbol::parse)?;
    let sec_type = record
        .get(COL_SEC_TYPE)
        .and_then(SecurityType::from_code)
        .ok_or_else(|| {
            malformed(
                COL_SEC_TYPE,
                record.get(COL_SEC_TYPE).unwrap_or(""),
                "security type must be E or I",
            )
        })?;

    Ok(Classified::Price(TickEvent {
        symbol,
        sec_type,
        last_price,
        trading_ts: TickTimestamp::new(date, time_of_day).expect("parse_time bounds the value"),
    }))
}
