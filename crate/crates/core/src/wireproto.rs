//! Message schema and RPC contract between harness and solution.
//!
//! Transport is length-prefixed binary frames: a `u32` little-endian payload
//! length followed by the payload, whose first byte is the message type. All
//! integers are little-endian, `f64` travels as IEEE-754 bits, strings are a
//! `u16` length plus UTF-8 bytes, lists a `u32` count plus elements. The
//! frame schema is normative and documented in `docs/wire.md`; any transport
//! speaking it is conformant. An in-process loopback (calling the service
//! directly through [`ChallengeApi`]) serves tests.

use std::io::{self, Read, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::sync::Mutex;

use thiserror::Error;

use crate::harness::SessionSummary;
use crate::indicators::CrossoverKind;
use crate::marketdata::SecurityType;

pub const DEFAULT_PORT: u16 = 5023;
pub const ADDR_ENV_VAR: &str = "TICKCEP_ADDR";
pub const MAX_FRAME_LEN: usize = 64 << 20;

// request message types
const MSG_CREATE: u8 = 0x01;
const MSG_START: u8 = 0x02;
const MSG_NEXT_BATCH: u8 = 0x03;
const MSG_RESULT_Q1: u8 = 0x04;
const MSG_RESULT_Q2: u8 = 0x05;
const MSG_END: u8 = 0x06;
// response message types
const MSG_CREATED: u8 = 0x81;
const MSG_ACK: u8 = 0x82;
const MSG_BATCH: u8 = 0x83;
const MSG_SUMMARY: u8 = 0x84;
const MSG_ERROR: u8 = 0xFF;

/// Application-level failures crossing the wire as (code, message).
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WireError {
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error("harness session capacity exhausted")]
    CapacityExhausted,
    #[error("out-of-order call: {0}")]
    OutOfOrderCall(String),
    #[error("unknown batch seq id: {0}")]
    UnknownSeqId(String),
    #[error("duplicate result: {0}")]
    DuplicateResult(String),
    #[error("session timed out")]
    SessionTimeout,
    #[error("unknown benchmark: {0}")]
    UnknownBenchmark(String),
    #[error("bad session token")]
    BadToken,
    #[error("protocol error: {0}")]
    Protocol(String),
}

impl WireError {
    fn code(&self) -> u8 {
        match self {
            WireError::BadConfig(_) => 1,
            WireError::CapacityExhausted => 2,
            WireError::OutOfOrderCall(_) => 3,
            WireError::UnknownSeqId(_) => 4,
            WireError::DuplicateResult(_) => 5,
            WireError::SessionTimeout => 6,
            WireError::UnknownBenchmark(_) => 7,
            WireError::BadToken => 8,
            WireError::Protocol(_) => 9,
        }
    }

    fn detail(&self) -> String {
        match self {
            WireError::BadConfig(s)
            | WireError::OutOfOrderCall(s)
            | WireError::UnknownSeqId(s)
            | WireError::DuplicateResult(s)
            | WireError::UnknownBenchmark(s)
            | WireError::Protocol(s) => s.clone(),
            _ => String::new(),
        }
    }

    fn from_code(code: u8, detail: String) -> Result<WireError, FrameError> {
        Ok(match code {
            1 => WireError::BadConfig(detail),
            2 => WireError::CapacityExhausted,
            3 => WireError::OutOfOrderCall(detail),
            4 => WireError::UnknownSeqId(detail),
            5 => WireError::DuplicateResult(detail),
            6 => WireError::SessionTimeout,
            7 => WireError::UnknownBenchmark(detail),
            8 => WireError::BadToken,
            9 => WireError::Protocol(detail),
            _ => return Err(FrameError::Malformed(format!("unknown error code {code}"))),
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameError {
    #[error("truncated frame")]
    Truncated,
    #[error("malformed frame: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchmarkConfig {
    pub name: String,
    pub dataset_seed: u64,
    pub batch_size: u32,
}

/// Session identity returned by create; the token authenticates every
/// subsequent call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchmarkHandle {
    pub id: u64,
    pub token: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WireEvent {
    pub symbol: String,
    pub sec_type: SecurityType,
    /// Decimal text, exactly as in the CSV, so no precision is lost in flight.
    pub last_price: String,
    /// Absolute nanoseconds since the 1970-01-01 midnight of the data clock.
    pub trading_ts_ns: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WireBatch {
    pub seq_id: u64,
    pub last: bool,
    pub events: Vec<WireEvent>,
    pub lookup_symbols: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Indicator {
    pub symbol: String,
    pub ema38: f64,
    pub ema100: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WireResultQ1 {
    pub benchmark_id: u64,
    pub batch_seq_id: u64,
    pub indicators: Vec<Indicator>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WireCrossoverEvent {
    pub symbol: String,
    pub kind: CrossoverKind,
    /// Close instant of the window the crossover was detected in, epoch ns.
    pub ts_ns: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WireResultQ2 {
    pub benchmark_id: u64,
    pub batch_seq_id: u64,
    pub crossover_events: Vec<WireCrossoverEvent>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Request {
    Create(BenchmarkConfig),
    Start(BenchmarkHandle),
    NextBatch(BenchmarkHandle),
    ResultQ1(BenchmarkHandle, WireResultQ1),
    ResultQ2(BenchmarkHandle, WireResultQ2),
    End(BenchmarkHandle),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Response {
    Created(BenchmarkHandle),
    Ack,
    Batch(WireBatch),
    Summary(SessionSummary),
    Error(WireError),
}

/// The six-call benchmark surface. Served by the harness, implemented over
/// TCP by [`TcpApiClient`], and callable in-process as the loopback path.
pub trait ChallengeApi: Send + Sync {
    fn create_benchmark(&self, config: &BenchmarkConfig) -> Result<BenchmarkHandle, WireError>;
    fn start_benchmark(&self, handle: &BenchmarkHandle) -> Result<(), WireError>;
    fn next_batch(&self, handle: &BenchmarkHandle) -> Result<WireBatch, WireError>;
    fn result_q1(&self, handle: &BenchmarkHandle, result: &WireResultQ1) -> Result<(), WireError>;
    fn result_q2(&self, handle: &BenchmarkHandle, result: &WireResultQ2) -> Result<(), WireError>;
    fn end_benchmark(&self, handle: &BenchmarkHandle) -> Result<SessionSummary, WireError>;
}

// ---- framing ----

pub fn write_frame(w: &mut impl Write, payload: &[u8]) -> io::Result<()> {
    let len = u32::try_from(payload.len())
        .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "frame too large"))?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(payload)?;
    w.flush()
}

/// Reads one frame; `None` on clean EOF before a length prefix.
pub fn read_frame(r: &mut impl Read) -> io::Result<Option<Vec<u8>>> {
    let mut len_bytes = [0u8; 4];
    let mut filled = 0;
    while filled < 4 {
        match r.read(&mut len_bytes[filled..])? {
            0 if filled == 0 => return Ok(None),
            0 => return Err(io::ErrorKind::UnexpectedEof.into()),
            n => filled += n,
        }
    }
    let len = u32::from_le_bytes(len_bytes) as usize;
    if len > MAX_FRAME_LEN {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("frame of {len} bytes exceeds limit"),
        ));
    }
    let mut payload = vec![0u8; len];
    r.read_exact(&mut payload)?;
    Ok(Some(payload))
}

// ---- payload encode / decode ----

#[derive(Default)]
struct Enc {
    buf: Vec<u8>,
}

impl Enc {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn bool(&mut self, v: bool) {
        self.u8(v as u8);
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn str(&mut self, s: &str) {
        let len = u16::try_from(s.len()).expect("wire strings are short");
        self.buf.extend_from_slice(&len.to_le_bytes());
        self.buf.extend_from_slice(s.as_bytes());
    }
    fn len(&mut self, n: usize) {
        self.u32(u32::try_from(n).expect("list fits u32"));
    }
}

struct Dec<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Dec<'a> {
    fn new(buf: &'a [u8]) -> Dec<'a> {
        Dec { buf, pos: 0 }
    }
    fn take(&mut self, n: usize) -> Result<&'a [u8], FrameError> {
        let end = self.pos.checked_add(n).ok_or(FrameError::Truncated)?;
        if end > self.buf.len() {
            return Err(FrameError::Truncated);
        }
        let slice = &self.buf[self.pos..end];
        self.pos = end;
        Ok(slice)
    }
    fn u8(&mut self) -> Result<u8, FrameError> {
        Ok(self.take(1)?[0])
    }
    fn bool(&mut self) -> Result<bool, FrameError> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(FrameError::Malformed(format!("bad bool byte {v}"))),
        }
    }
    fn u32(&mut self) -> Result<u32, FrameError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, FrameError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64, FrameError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn str(&mut self) -> Result<String, FrameError> {
        let len = u16::from_le_bytes(self.take(2)?.try_into().unwrap());
        let bytes = self.take(len as usize)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|_| FrameError::Malformed("non-UTF-8 string".into()))
    }
    fn list_len(&mut self) -> Result<usize, FrameError> {
        let n = self.u32()? as usize;
        // each element takes at least one byte; cheap sanity bound
        if n > self.buf.len() - self.pos {
            return Err(FrameError::Truncated);
        }
        Ok(n)
    }
    fn finish(self) -> Result<(), FrameError> {
        if self.pos == self.buf.len() {
            Ok(())
        } else {
            Err(FrameError::Malformed("trailing bytes".into()))
        }
    }
}

fn enc_handle(e: &mut Enc, h: &BenchmarkHandle) {
    e.u64(h.id);
    e.str(&h.token);
}

fn dec_handle(d: &mut Dec) -> Result<BenchmarkHandle, FrameError> {
    Ok(BenchmarkHandle {
        id: d.u64()?,
        token: d.str()?,
    })
}

fn enc_batch(e: &mut Enc, b: &WireBatch) {
    e.u64(b.seq_id);
    e.bool(b.last);
    e.len(b.events.len());
    for ev in &b.events {
        e.str(&ev.symbol);
        e.u8(ev.sec_type.code().as_bytes()[0]);
        e.str(&ev.last_price);
        e.u64(ev.trading_ts_ns);
    }
    e.len(b.lookup_symbols.len());
    for s in &b.lookup_symbols {
        e.str(s);
    }
}

fn dec_batch(d: &mut Dec) -> Result<WireBatch, FrameError> {
    let seq_id = d.u64()?;
    let last = d.bool()?;
    let n = d.list_len()?;
    let mut events = Vec::with_capacity(n);
    for _ in 0..n {
        let symbol = d.str()?;
        let sec_type = match d.u8()? {
            b'E' => SecurityType::Equity,
            b'I' => SecurityType::Index,
            v => return Err(FrameError::Malformed(format!("bad security type byte {v}"))),
        };
        events.push(WireEvent {
            symbol,
            sec_type,
            last_price: d.str()?,
            trading_ts_ns: d.u64()?,
        });
    }
    let n = d.list_len()?;
    let mut lookup_symbols = Vec::with_capacity(n);
    for _ in 0..n {
        lookup_symbols.push(d.str()?);
    }
    Ok(WireBatch {
        seq_id,
        last,
        events,
        lookup_symbols,
    })
}

fn enc_kind(e: &mut Enc, kind: CrossoverKind) {
    e.u8(match kind {
        CrossoverKind::Buy => 0,
        CrossoverKind::Sell => 1,
    });
}

fn dec_kind(d: &mut Dec) -> Result<CrossoverKind, FrameError> {
    match d.u8()? {
        0 => Ok(CrossoverKind::Buy),
        1 => Ok(CrossoverKind::Sell),
        v => Err(FrameError::Malformed(format!("bad crossover kind {v}"))),
    }
}

pub fn encode_request(request: &Request) -> Vec<u8> {
    let mut e = Enc::default();
    match request {
        Request::Create(c) => {
            e.u8(MSG_CREATE);
            e.str(&c.name);
            e.u64(c.dataset_seed);
            e.u32(c.batch_size);
        }
        Request::Start(h) => {
            e.u8(MSG_START);
            enc_handle(&mut e, h);
        }
        Request::NextBatch(h) => {
            e.u8(MSG_NEXT_BATCH);
            enc_handle(&mut e, h);
        }
        Request::ResultQ1(h, r) => {
            e.u8(MSG_RESULT_Q1);
            enc_handle(&mut e, h);
            e.u64(r.benchmark_id);
            e.u64(r.batch_seq_id);
            e.len(r.indicators.len());
            for i in &r.indicators {
                e.str(&i.symbol);
                e.f64(i.ema38);
                e.f64(i.ema100);
            }
        }
        Request::ResultQ2(h, r) => {
            e.u8(MSG_RESULT_Q2);
            enc_handle(&mut e, h);
            e.u64(r.benchmark_id);
            e.u64(r.batch_seq_id);
            e.len(r.crossover_events.len());
            for c in &r.crossover_events {
                e.str(&c.symbol);
                enc_kind(&mut e, c.kind);
                e.u64(c.ts_ns);
            }
        }
        Request::End(h) => {
            e.u8(MSG_END);
            enc_handle(&mut e, h);
        }
    }
    e.buf
}

pub fn decode_request(payload: &[u8]) -> Result<Request, FrameError> {
    let mut d = Dec::new(payload);
    let request = match d.u8()? {
        MSG_CREATE => Request::Create(BenchmarkConfig {
            name: d.str()?,
            dataset_seed: d.u64()?,
            batch_size: d.u32()?,
        }),
        MSG_START => Request::Start(dec_handle(&mut d)?),
        MSG_NEXT_BATCH => Request::NextBatch(dec_handle(&mut d)?),
        MSG_RESULT_Q1 => {
            let h = dec_handle(&mut d)?;
            let benchmark_id = d.u64()?;
            let batch_seq_id = d.u64()?;
            let n = d.list_len()?;
            let mut indicators = Vec::with_capacity(n);
            for _ in 0..n {
                indicators.push(Indicator {
                    symbol: d.str()?,
                    ema38: d.f64()?,
                    ema100: d.f64()?,
                });
            }
            Request::ResultQ1(
                h,
                WireResultQ1 {
                    benchmark_id,
                    batch_seq_id,
                    indicators,
                },
            )
        }
        MSG_RESULT_Q2 => {
            let h = dec_handle(&mut d)?;
            let benchmark_id = d.u64()?;
            let batch_seq_id = d.u64()?;
            let n = d.list_len()?;
            let mut crossover_events = Vec::with_capacity(n);
            for _ in 0..n {
                crossover_events.push(WireCrossoverEvent {
                    symbol: d.str()?,
                    kind: dec_kind(&mut d)?,
                    ts_ns: d.u64()?,
                });
            }
            Request::ResultQ2(
                h,
                WireResultQ2 {
                    benchmark_id,
                    batch_seq_id,
                    crossover_events,
                },
            )
        }
        MSG_END => Request::End(dec_handle(&mut d)?),
        t => {
            return Err(FrameError::Malformed(format!(
                "unknown request type {t:#04x}"
            )))
        }
    };
    d.finish()?;
    Ok(request)
}

pub fn encode_response(response: &Response) -> Vec<u8> {
    let mut e = Enc::default();
    match response {
        Response::Created(h) => {
            e.u8(MSG_CREATED);
            enc_handle(&mut e, h);
        }
        Response::Ack => e.u8(MSG_ACK),
        Response::Batch(b) => {
            e.u8(MSG_BATCH);
            enc_batch(&mut e, b);
        }
        Response::Summary(s) => {
            e.u8(MSG_SUMMARY);
            e.str(&s.name);
            e.u64(s.batches);
            e.u64(s.duration_ns);
            e.f64(s.throughput_batches_per_s);
            e.f64(s.q1_latency.mean_ns);
            e.u64(s.q1_latency.p90_ns);
            e.f64(s.q2_latency.mean_ns);
            e.u64(s.q2_latency.p90_ns);
            e.u64(s.late_results);
            e.bool(s.incomplete);
        }
        Response::Error(err) => {
            e.u8(MSG_ERROR);
            e.u8(err.code());
            e.str(&err.detail());
        }
    }
    e.buf
}

pub fn decode_response(payload: &[u8]) -> Result<Response, FrameError> {
    use crate::harness::LatencyStats;
    let mut d = Dec::new(payload);
    let response = match d.u8()? {
        MSG_CREATED => Response::Created(dec_handle(&mut d)?),
        MSG_ACK => Response::Ack,
        MSG_BATCH => Response::Batch(dec_batch(&mut d)?),
        MSG_SUMMARY => Response::Summary(SessionSummary {
            name: d.str()?,
            batches: d.u64()?,
            duration_ns: d.u64()?,
            throughput_batches_per_s: d.f64()?,
            q1_latency: LatencyStats {
                mean_ns: d.f64()?,
                p90_ns: d.u64()?,
            },
            q2_latency: LatencyStats {
                mean_ns: d.f64()?,
                p90_ns: d.u64()?,
            },
            late_results: d.u64()?,
            incomplete: d.bool()?,
        }),
        MSG_ERROR => {
            let code = d.u8()?;
            let detail = d.str()?;
            Response::Error(WireError::from_code(code, detail)?)
        }
        t => {
            return Err(FrameError::Malformed(format!(
                "unknown response type {t:#04x}"
            )))
        }
    };
    d.finish()?;
    Ok(response)
}

/// Canonical bytes of a batch as it crosses the wire; the harness hashes
/// these for the replay manifest.
pub fn canonical_batch_bytes(batch: &WireBatch) -> Vec<u8> {
    let mut e = Enc::default();
    e.u8(MSG_BATCH);
    enc_batch(&mut e, batch);
    e.buf
}

// ---- server-side dispatch ----

pub fn dispatch(api: &dyn ChallengeApi, request: Request) -> Response {
    fn wrap<T>(result: Result<T, WireError>, ok: impl FnOnce(T) -> Response) -> Response {
        match result {
            Ok(v) => ok(v),
            Err(e) => Response::Error(e),
        }
    }
    match request {
        Request::Create(config) => wrap(api.create_benchmark(&config), Response::Created),
        Request::Start(h) => wrap(api.start_benchmark(&h), |()| Response::Ack),
        Request::NextBatch(h) => wrap(api.next_batch(&h), Response::Batch),
        Request::ResultQ1(h, r) => wrap(api.result_q1(&h, &r), |()| Response::Ack),
        Request::ResultQ2(h, r) => wrap(api.result_q2(&h, &r), |()| Response::Ack),
        Request::End(h) => wrap(api.end_benchmark(&h), Response::Summary),
    }
}

/// Serves one client connection until EOF. A frame that fails to decode gets
/// an error response and closes the connection (the stream may be desynced).
pub fn serve_connection(mut stream: TcpStream, api: &dyn ChallengeApi) -> io::Result<()> {
    loop {
        let payload = match read_frame(&mut stream)? {
            Some(p) => p,
            None => return Ok(()),
        };
        match decode_request(&payload) {
            Ok(request) => {
                let response = dispatch(api, request);
                write_frame(&mut stream, &encode_response(&response))?;
            }
            Err(e) => {
                let response = Response::Error(WireError::Protocol(e.to_string()));
                write_frame(&mut stream, &encode_response(&response))?;
                return Ok(());
            }
        }
    }
}

// ---- blocking TCP client ----

/// Blocking client speaking the frame protocol; calls are serialized on the
/// single connection, matching the one-outstanding-batch contract.
pub struct TcpApiClient {
    stream: Mutex<TcpStream>,
}

impl TcpApiClient {
    pub fn connect(addr: impl ToSocketAddrs) -> io::Result<TcpApiClient> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(TcpApiClient {
            stream: Mutex::new(stream),
        })
    }

    fn call(&self, request: &Request) -> Result<Response, WireError> {
        let io_err = |e: io::Error| WireError::Protocol(format!("transport: {e}"));
        let mut stream = self.stream.lock().expect("client lock");
        write_frame(&mut *stream, &encode_request(request)).map_err(io_err)?;
        let payload = read_frame(&mut *stream)
            .map_err(io_err)?
            .ok_or_else(|| WireError::Protocol("connection closed by harness".into()))?;
        decode_response(&payload).map_err(|e| WireError::Protocol(e.to_string()))
    }

    fn expect_ack(&self, request: &Request) -> Result<(), WireError> {
        match self.call(request)? {
            Response::Ack => Ok(()),
            Response::Error(e) => Err(e),
            other => Err(unexpected(&other)),
        }
    }
}

fn unexpected(response: &Response) -> WireError {
    WireError::Protocol(format!("unexpected response {response:?}"))
}

impl ChallengeApi for TcpApiClient {
    fn create_benchmark(&self, config: &BenchmarkConfig) -> Result<BenchmarkHandle, WireError> {
        match self.call(&Request::Create(config.clone()))? {
            Response::Created(h) => Ok(h),
            Response::Error(e) => Err(e),
            other => Err(unexpected(&other)),
        }
    }

    fn start_benchmark(&self, handle: &BenchmarkHandle) -> Result<(), WireError> {
        self.expect_ack(&Request::Start(handle.clone()))
    }

    fn next_batch(&self, handle: &BenchmarkHandle) -> Result<WireBatch, WireError> {
        match self.call(&Request::NextBatch(handle.clone()))? {
            Response::Batch(b) => Ok(b),
            Response::Error(e) => Err(e),
            other => Err(unexpected(&other)),
        }
    }

    fn result_q1(&self, handle: &BenchmarkHandle, result: &WireResultQ1) -> Result<(), WireError> {
        self.expect_ack(&Request::ResultQ1(handle.clone(), result.clone()))
    }

    fn result_q2(&self, handle: &BenchmarkHandle, result: &WireResultQ2) -> Result<(), WireError> {
        self.expect_ack(&Request::ResultQ2(handle.clone(), result.clone()))
    }

    fn end_benchmark(&self, handle: &BenchmarkHandle) -> Result<SessionSummary, WireError> {
        match self.call(&Request::End(handle.clone()))? {
            Response::Summary(s) => Ok(s),
            Response::Error(e) => Err(e),
            other => Err(unexpected(&other)),
        }
    }
}
