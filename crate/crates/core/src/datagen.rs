//! Seeded synthetic tick-data generator. Reproduces the published shape of
//! the real feed at configurable scale: a Zipf long tail of per-symbol event
//! counts, fixed exchange and security-type event shares, diurnal load with
//! open/close spikes and a midday lull, quiet nights and weekends, and
//! per-symbol geometric random-walk prices. Generation is a pure function of
//! the config; the same seed always yields byte-identical CSV.

use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::marketdata::{
    classify, format_csv_line, parse_csv_line, Classified, Exchange, Price, RawRecord,
    SecurityType, Symbol, TickTimestamp, COL_ID, COL_LAST, COL_SEC_TYPE, COL_TRADING_DATE,
    COL_TRADING_TIME,
};

#[derive(Debug, Error)]
pub enum DatagenError {
    #[error("bad generator config: {0}")]
    BadConfig(String),
    #[error("unreadable dataset: {0}")]
    Unreadable(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// System-timestamp columns; filled on every generated row.
const COL_SYS_DATE: usize = 3;
const COL_SYS_TIME: usize = 4;
const COL_ASK: usize = 5;
const COL_ASK_TIME: usize = 9;

/// Column titles of the 39-column format, used for the optional header row.
pub const COLUMN_TITLES: [&str; 39] = [
    "ID.[Exchange]",
    "SecType",
    "Date",
    "Time",
    "Ask",
    "Ask volume",
    "Bid",
    "Bid volume",
    "Ask time",
    "Day's high ask",
    "Close",
    "Currency",
    "Day's high ask time",
    "Day's high",
    "ISIN",
    "Auction price",
    "Day's low ask",
    "Day's low",
    "Day's low ask time",
    "Open",
    "Nominal value",
    "Last",
    "Last volume",
    "Trading time",
    "Total volume",
    "Mid price",
    "Trading date",
    "Profit",
    "Current price",
    "Related indices",
    "Day high bid time",
    "Day low bid time",
    "Open time",
    "Last price time",
    "Close time",
    "Day high time",
    "Day low time",
    "Bid time",
    "Auction time",
];

/// Target event shares per exchange (Frankfurt-heavy, purged profile).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExchangeMix {
    pub etr: f64,
    pub fr: f64,
    pub nl: f64,
}

impl Default for ExchangeMix {
    fn default() -> Self {
        ExchangeMix {
            etr: 0.54,
            fr: 0.36,
            nl: 0.10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceModel {
    /// Start prices are drawn log-uniformly from this range.
    pub start_min: f64,
    pub start_max: f64,
    /// Per-event log-return sigma, drawn once per symbol from this range.
    pub vol_min: f64,
    pub vol_max: f64,
}

impl Default for PriceModel {
    fn default() -> Self {
        PriceModel {
            start_min: 5.0,
            start_max: 500.0,
            vol_min: 5e-4,
            vol_max: 5e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub seed: u64,
    pub n_symbols: usize,
    pub days: u32,
    pub start_date: NaiveDate,
    pub total_events: u64,
    pub exchange_mix: ExchangeMix,
    pub index_share: f64,
    pub zipf_exponent: f64,
    pub price_model: PriceModel,
    /// Fraction of events scattered outside trading hours (nights, weekends).
    pub off_hours_trickle: f64,
    /// Non-price rows emitted per price row (0 = purged profile).
    pub nonprice_ratio: f64,
    pub header: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 42,
            n_symbols: 5504,
            days: 7,
            // the Monday the real capture week started on
            start_date: NaiveDate::from_ymd_opt(2021, 11, 8).unwrap(),
            total_events: 1_000_000,
            exchange_mix: ExchangeMix::default(),
            index_share: 0.82,
            zipf_exponent: 1.2,
            price_model: PriceModel::default(),
            off_hours_trickle: 0.005,
            nonprice_ratio: 0.0,
            header: false,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), DatagenError> {
        let bad = |msg: String| Err(DatagenError::BadConfig(msg));
        let mix = self.exchange_mix;
        let sum = mix.etr + mix.fr + mix.nl;
        if (sum - 1.0).abs() > 1e-9 {
            return bad(format!("exchange mix sums to {sum}, expected 1"));
        }
        for (name, share) in [
            ("etr", mix.etr),
            ("fr", mix.fr),
            ("nl", mix.nl),
            ("index_share", self.index_share),
            ("off_hours_trickle", self.off_hours_trickle),
        ] {
            if !(0.0..=1.0).contains(&share) {
                return bad(format!("{name} = {share} outside [0, 1]"));
            }
        }
        if self.n_symbols == 0 {
            return bad("n_symbols must be >= 1".into());
        }
        if self.days == 0 {
            return bad("days must be >= 1".into());
        }
        if self.total_events == 0 {
            return bad("total_events must be >= 1".into());
        }
        if self.zipf_exponent <= 0.0 {
            return bad(format!(
                "zipf_exponent = {} must be positive",
                self.zipf_exponent
            ));
        }
        let pm = self.price_model;
        if !(pm.start_min > 0.0 && pm.start_max >= pm.start_min) {
            return bad("price start range must be positive and ordered".into());
        }
        if !(pm.vol_min >= 0.0 && pm.vol_max >= pm.vol_min) {
            return bad("volatility range must be non-negative and ordered".into());
        }
        if self.nonprice_ratio < 0.0 {
            return bad("nonprice_ratio must be >= 0".into());
        }
        Ok(())
    }

    fn date_of_day(&self, day: u32) -> NaiveDate {
        self.start_date + chrono::Duration::days(i64::from(day))
    }
}

#[derive(Debug, Clone)]
pub struct SymbolInfo {
    pub symbol: Symbol,
    pub sec_type: SecurityType,
    start_price: f64,
    volatility: f64,
}

// Trading hours and intra-day shape. The published charts give shapes, not
// numbers; these constants are the pinned calibration.
const OPEN_MINUTE: u32 = 9 * 60;
const CLOSE_MINUTE: u32 = 17 * 60 + 30;
const MINUTES_PER_DAY: u32 = 1440;

/// Per-minute load for one generic trading day: an opening spike decaying to
/// the base rate, a midday lull, and a ramp into the closing spike. Zero
/// outside trading hours and on weekends; the off-hours trickle covers those.
pub fn minute_weight(minute: u32) -> f64 {
    if !(OPEN_MINUTE..CLOSE_MINUTE).contains(&minute) {
        return 0.0;
    }
    if minute < OPEN_MINUTE + 30 {
        5.0 - f64::from(minute - OPEN_MINUTE) * (3.5 / 30.0)
    } else if (12 * 60..14 * 60).contains(&minute) {
        0.6
    } else if minute >= CLOSE_MINUTE - 30 {
        1.5 + f64::from(minute - (CLOSE_MINUTE - 30)) * (4.5 / 30.0)
    } else {
        1.5
    }
}

fn is_weekend(date: NaiveDate) -> bool {
    matches!(date.weekday(), Weekday::Sat | Weekday::Sun)
}

/// Normalized sampling tables over the whole simulated period: weighted
/// trading-hour (day, minute) cells and the uniform off-hours complement.
struct IntensityCurve {
    active: Vec<(u32, u32)>,
    cumulative: Vec<f64>,
    off_hours: Vec<(u32, u32)>,
}

impl IntensityCurve {
    fn build(config: &GenConfig) -> Result<IntensityCurve, DatagenError> {
        let mut active = Vec::new();
        let mut weights = Vec::new();
        let mut off_hours = Vec::new();
        for day in 0..config.days {
            let weekend = is_weekend(config.date_of_day(day));
            for minute in 0..MINUTES_PER_DAY {
                let w = if weekend { 0.0 } else { minute_weight(minute) };
                if w > 0.0 {
                    active.push((day, minute));
                    weights.push(w);
                } else {
                    off_hours.push((day, minute));
                }
            }
        }
        if active.is_empty() {
            return Err(DatagenError::BadConfig(
                "no trading minutes in range (weekend-only period)".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for w in weights {
            acc += w / total;
            cumulative.push(acc);
        }
        Ok(IntensityCurve {
            active,
            cumulative,
            off_hours,
        })
    }

    fn sample(&self, rng: &mut ChaCha20Rng, trickle: f64) -> (u32, u32) {
        if !self.off_hours.is_empty() && rng.gen::<f64>() < trickle {
            self.off_hours[rng.gen_range(0..self.off_hours.len())]
        } else {
            let u = rng.gen::<f64>();
            let i = self.cumulative.partition_point(|&c| c < u);
            self.active[i.min(self.active.len() - 1)]
        }
    }
}

/// Bijective base-26 name: 0 -> A, 25 -> Z, 26 -> AA, ...
fn symbol_base(rank: usize) -> String {
    let mut n = rank as u64 + 1;
    let mut out = Vec::new();
    while n > 0 {
        n -= 1;
        out.push(b'A' + (n % 26) as u8);
        n /= 26;
    }
    out.reverse();
    let base = String::from_utf8(out).unwrap();
    // "ID." is reserved as the header-line marker
    if base == "ID" {
        "ID0".to_string()
    } else {
        base
    }
}

fn zipf_weights(n: usize, exponent: f64) -> Vec<f64> {
    (0..n)
        .map(|k| 1.0 / ((k + 1) as f64).powf(exponent))
        .collect()
}

/// Builds the symbol universe. Exchange and security type are fixed per
/// symbol; assignment walks the ranks in descending Zipf weight and picks the
/// category with the largest remaining share deficit, so the *event* shares
/// land on the configured targets rather than drifting with whichever
/// category the hottest symbols happened to get.
pub fn build_universe(config: &GenConfig, rng: &mut ChaCha20Rng) -> Vec<SymbolInfo> {
    let weights = zipf_weights(config.n_symbols, config.zipf_exponent);
    let total: f64 = weights.iter().sum();

    let exchanges = [Exchange::Etr, Exchange::Fr, Exchange::Nl];
    let mix = config.exchange_mix;
    let exchange_targets = [mix.etr, mix.fr, mix.nl];
    let mut exchange_assigned = [0.0f64; 3];
    let types = [SecurityType::Index, SecurityType::Equity];
    let type_targets = [config.index_share, 1.0 - config.index_share];
    let mut type_assigned = [0.0f64; 2];

    fn pick(assigned: &[f64], targets: &[f64]) -> usize {
        let mut best = 0;
        for i in 1..targets.len() {
            if targets[i] - assigned[i] > targets[best] - assigned[best] {
                best = i;
            }
        }
        best
    }

    let pm = config.price_model;
    let mut universe = Vec::with_capacity(config.n_symbols);
    for (rank, &w) in weights.iter().enumerate() {
        let share = w / total;
        let e = pick(&exchange_assigned, &exchange_targets);
        exchange_assigned[e] += share;
        let t = pick(&type_assigned, &type_targets);
        type_assigned[t] += share;

        let start_price =
            (rng.gen::<f64>() * (pm.start_max.ln() - pm.start_min.ln()) + pm.start_min.ln()).exp();
        let volatility = pm.vol_min + rng.gen::<f64>() * (pm.vol_max - pm.vol_min);
        universe.push(SymbolInfo {
            symbol: Symbol::new(symbol_base(rank), exchanges[e])
                .expect("generated bases are valid"),
            sec_type: types[t],
            start_price,
            volatility,
        });
    }
    universe
}

/// One generated CSV row tagged with its day index for per-day file output.
#[derive(Debug, Clone)]
pub struct GeneratedRow {
    pub day: u32,
    pub record: RawRecord,
}

/// Generates the full stream, sorted by timestamp globally.
pub fn generate(config: &GenConfig) -> Result<Vec<GeneratedRow>, DatagenError> {
    config.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let universe = build_universe(config, &mut rng);
    let curve = IntensityCurve::build(config)?;

    let weights = zipf_weights(config.n_symbols, config.zipf_exponent);
    let total: f64 = weights.iter().sum();
    let mut zipf_cumulative = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in &weights {
        acc += w / total;
        zipf_cumulative.push(acc);
    }

    let n_price = config.total_events;
    let n_nonprice = (n_price as f64 * config.nonprice_ratio).round() as u64;

    // Timestamps first (100 µs ticks within the drawn minute), then a stable
    // sort so per-symbol price walks can advance in stream order.
    let mut stamps: Vec<(u32, u64, bool)> = Vec::with_capacity((n_price + n_nonprice) as usize);
    for i in 0..n_price + n_nonprice {
        let (day, minute) = curve.sample(&mut rng, config.off_hours_trickle);
        let tick = u64::from(minute) * 600_000 + rng.gen_range(0..600_000u64);
        stamps.push((day, tick, i < n_price));
    }
    stamps.sort_by_key(|&(day, tick, _)| (day, tick));

    let mut prices: Vec<f64> = universe.iter().map(|s| s.start_price).collect();
    let mut rows = Vec::with_capacity(stamps.len());
    for (day, tick, is_price) in stamps {
        let u = rng.gen::<f64>();
        let idx = zipf_cumulative
            .partition_point(|&c| c < u)
            .min(universe.len() - 1);
        let info = &universe[idx];

        let date_text = TickTimestamp::format_date(config.date_of_day(day));
        let time_text = TickTimestamp::format_time(tick * 100_000);

        let mut record = RawRecord::empty();
        record.set(COL_ID, info.symbol.to_string());
        record.set(COL_SEC_TYPE, info.sec_type.code());
        record.set(COL_SYS_DATE, date_text.clone());
        record.set(COL_SYS_TIME, time_text.clone());
        if is_price {
            let z: f64 = rng.sample(StandardNormal);
            prices[idx] *= (info.volatility * z).exp();
            record.set(COL_LAST, format_price(prices[idx]));
            record.set(COL_TRADING_TIME, time_text);
            record.set(COL_TRADING_DATE, date_text);
        } else {
            // quote row: starred price columns stay NULL
            record.set(COL_ASK, format_price(prices[idx]));
            record.set(COL_ASK_TIME, time_text);
        }
        rows.push(GeneratedRow { day, record });
    }
    Ok(rows)
}

fn format_price(value: f64) -> String {
    let mantissa = ((value * 10_000.0).round() as i64).max(1);
    Price::new(mantissa, 4)
        .expect("scale 4 is valid")
        .to_string()
}

/// Convenience for in-memory use: generated rows classified into tick events
/// (quote rows from a non-zero `nonprice_ratio` are filtered out).
pub fn generate_events(
    config: &GenConfig,
) -> Result<Vec<crate::marketdata::TickEvent>, DatagenError> {
    let rows = generate(config)?;
    let mut events = Vec::with_capacity(rows.len());
    for row in rows {
        match classify(&row.record).map_err(|e| DatagenError::Unreadable(e.to_string()))? {
            Classified::Price(ev) => events.push(ev),
            Classified::NotAPriceEvent => {}
        }
    }
    Ok(events)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestFile {
    pub name: String,
    pub sha256: String,
    pub rows: u64,
}

/// Written next to the per-day CSV files; echoes the config and pins the
/// checksums a replay can be verified against.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub config: GenConfig,
    pub files: Vec<ManifestFile>,
    pub total_rows: u64,
}

pub const MANIFEST_NAME: &str = "manifest.json";

/// Writes one CSV per day (`YYYY-MM-DD.csv`, UTF-8, `\n` line endings, no
/// quoting) plus `manifest.json`.
pub fn write_dataset(config: &GenConfig, out_dir: &Path) -> Result<Manifest, DatagenError> {
    let rows = generate(config)?;
    fs::create_dir_all(out_dir)?;

    let mut files = Vec::new();
    let mut total_rows = 0u64;
    let mut cursor = 0usize;
    for day in 0..config.days {
        let name = format!("{}.csv", config.date_of_day(day).format("%Y-%m-%d"));
        let path = out_dir.join(&name);
        let mut hasher = Sha256::new();
        let mut file = BufWriter::new(fs::File::create(&path)?);
        let mut day_rows = 0u64;
        let write_line = |line: &str, file: &mut BufWriter<fs::File>, hasher: &mut Sha256| {
            hasher.update(line.as_bytes());
            hasher.update(b"\n");
            file.write_all(line.as_bytes())?;
            file.write_all(b"\n")
        };
        if config.header {
            write_line(&COLUMN_TITLES.join(","), &mut file, &mut hasher)?;
        }
        while cursor < rows.len() && rows[cursor].day == day {
            write_line(
                &format_csv_line(&rows[cursor].record),
                &mut file,
                &mut hasher,
            )?;
            cursor += 1;
            day_rows += 1;
        }
        file.flush()?;
        total_rows += day_rows;
        files.push(ManifestFile {
            name,
            sha256: hex(&hasher.finalize()),
            rows: day_rows,
        });
    }

    let manifest = Manifest {
        config: config.clone(),
        files,
        total_rows,
    };
    fs::write(
        out_dir.join(MANIFEST_NAME),
        serde_json::to_vec_pretty(&manifest).expect("manifest serializes"),
    )?;
    Ok(manifest)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn read_manifest(dir: &Path) -> Option<Manifest> {
    let bytes = fs::read(dir.join(MANIFEST_NAME)).ok()?;
    serde_json::from_slice(&bytes).ok()
}

// Declared tolerances for the distribution checks; the long-tail floor is a
// pinned calibration constant (defaults measure ~0.71).
pub const MIX_TOLERANCE: f64 = 0.02;
pub const SLOPE_TOLERANCE: f64 = 0.15;
pub const TOP1PCT_MIN_SHARE: f64 = 0.30;
/// Ranks with fewer observations than this are excluded from the log-log
/// fit; sparse tail counts otherwise bias the slope.
const SLOPE_MIN_COUNT: u64 = 5;

#[derive(Debug, Clone, Serialize)]
pub struct DistributionChecks {
    pub exchange_mix_ok: bool,
    pub type_mix_ok: bool,
    pub slope_ok: bool,
    pub long_tail_ok: bool,
}

impl DistributionChecks {
    pub fn all_ok(&self) -> bool {
        self.exchange_mix_ok && self.type_mix_ok && self.slope_ok && self.long_tail_ok
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DistributionReport {
    pub total_events: u64,
    pub distinct_symbols: usize,
    /// Observed event shares per exchange: (ETR, FR, NL).
    pub exchange_shares: (f64, f64, f64),
    pub index_share: f64,
    pub rank_frequency_slope: f64,
    pub top1pct_share: f64,
    pub diurnal_correlation: f64,
    pub checks: DistributionChecks,
}

/// Measures a dataset (file or directory of CSVs) against the config targets.
pub fn validate_distribution(
    path: &Path,
    targets: &GenConfig,
) -> Result<DistributionReport, DatagenError> {
    let files = dataset_files(path)?;
    let mut per_symbol: HashMap<String, u64> = HashMap::new();
    let mut exchange_counts = [0u64; 3];
    let mut type_counts = [0u64; 2];
    let mut minute_counts = vec![0u64; MINUTES_PER_DAY as usize];
    let mut total = 0u64;

    for file in &files {
        let text = fs::read_to_string(file)
            .map_err(|e| DatagenError::Unreadable(format!("{}: {e}", file.display())))?;
        for (lineno, line) in text.lines().enumerate() {
            if lineno == 0 && line.starts_with("ID.[Exchange]") {
                continue;
            }
            let bad = |e: &dyn std::fmt::Display| {
                DatagenError::Unreadable(format!("{}:{}: {e}", file.display(), lineno + 1))
            };
            let record = parse_csv_line(line).map_err(|e| bad(&e))?;
            let event = match classify(&record).map_err(|e| bad(&e))? {
                Classified::Price(ev) => ev,
                Classified::NotAPriceEvent => continue,
            };
            total += 1;
            *per_symbol.entry(event.symbol.to_string()).or_default() += 1;
            exchange_counts[match event.symbol.exchange() {
                Exchange::Etr => 0,
                Exchange::Fr => 1,
                Exchange::Nl => 2,
            }] += 1;
            type_counts[match event.sec_type {
                SecurityType::Index => 0,
                SecurityType::Equity => 1,
            }] += 1;
            if !is_weekend(event.trading_ts.date()) {
                let minute = event.trading_ts.time_of_day_ns() / 60_000_000_000;
                minute_counts[minute as usize] += 1;
            }
        }
    }
    if total == 0 {
        return Err(DatagenError::Unreadable(format!(
            "{}: no price events",
            path.display()
        )));
    }

    let share = |c: u64| c as f64 / total as f64;
    let exchange_shares = (
        share(exchange_counts[0]),
        share(exchange_counts[1]),
        share(exchange_counts[2]),
    );
    let index_share = share(type_counts[0]);

    let mut counts: Vec<u64> = per_symbol.values().copied().collect();
    counts.sort_unstable_by(|a, b| b.cmp(a));
    let rank_frequency_slope = log_log_slope(&counts);
    let top_n = (counts.len() / 100).max(1);
    let top1pct_share = counts.iter().take(top_n).sum::<u64>() as f64 / total as f64;

    let curve: Vec<f64> = (OPEN_MINUTE..CLOSE_MINUTE).map(minute_weight).collect();
    let observed: Vec<f64> = (OPEN_MINUTE..CLOSE_MINUTE)
        .map(|m| minute_counts[m as usize] as f64)
        .collect();
    let diurnal_correlation = pearson(&curve, &observed);

    let mix = targets.exchange_mix;
    let checks = DistributionChecks {
        exchange_mix_ok: (exchange_shares.0 - mix.etr).abs() <= MIX_TOLERANCE
            && (exchange_shares.1 - mix.fr).abs() <= MIX_TOLERANCE
            && (exchange_shares.2 - mix.nl).abs() <= MIX_TOLERANCE,
        type_mix_ok: (index_share - targets.index_share).abs() <= MIX_TOLERANCE,
        slope_ok: (rank_frequency_slope - (-targets.zipf_exponent)).abs() <= SLOPE_TOLERANCE,
        long_tail_ok: top1pct_share >= TOP1PCT_MIN_SHARE,
    };

    Ok(DistributionReport {
        total_events: total,
        distinct_symbols: counts.len(),
        exchange_shares,
        index_share,
        rank_frequency_slope,
        top1pct_share,
        diurnal_correlation,
        checks,
    })
}

fn dataset_files(path: &Path) -> Result<Vec<PathBuf>, DatagenError> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|ext| ext == "csv"))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(DatagenError::Unreadable(format!(
                "{}: no .csv files",
                path.display()
            )));
        }
        return Ok(files);
    }
    Err(DatagenError::Unreadable(format!(
        "{}: not a file or directory",
        path.display()
    )))
}

/// OLS slope of log10(count) on log10(rank) over ranks with enough mass.
fn log_log_slope(counts_desc: &[u64]) -> f64 {
    let points: Vec<(f64, f64)> = counts_desc
        .iter()
        .enumerate()
        .filter(|(_, &c)| c >= SLOPE_MIN_COUNT)
        .map(|(i, &c)| (((i + 1) as f64).log10(), (c as f64).log10()))
        .collect();
    if points.len() < 2 {
        return f64::NAN;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
    cov / (va.sqrt() * vb.sqrt())
}
