//! Binary wire codec, frame logs, CSV ingestion, and rate-controlled replay.
//!
//! A frame is 34 little-endian bytes: seq(4) | timestamp_us(4) | six
//! channels(4 each) | CRC-16/CCITT-FALSE(2) over the first 32 bytes. Channel
//! values carry 28 significant bits. Log files are an 8-byte header (magic
//! `FTIND\x01` + u16 LE format version) followed by concatenated frames.

use std::io::{BufRead, BufReader, Read, Write};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::time::{Duration, Instant};

use crossbeam::queue::ArrayQueue;
use serde::{Deserialize, Serialize};

use crate::coil::MAX_COUNTS;
use crate::error::{Error, Result};
use crate::synth::{Dataset, DatasetRow, Wrench, AXIS_NAMES};

/// Encoded frame length in bytes.
pub const FRAME_LEN: usize = 34;

/// Log file magic.
pub const LOG_MAGIC: [u8; 6] = *b"FTIND\x01";

/// Log format version.
pub const LOG_VERSION: u16 = 1;

/// Replay queue depth; the producer drops the oldest queued frame when the
/// consumer falls this far behind.
pub const REPLAY_QUEUE_CAPACITY: usize = 1024;

/// Tightest replay rate the 34-byte frame supports on the reference link
/// (Hz).
pub const MAX_REPLAY_RATE_HZ: f64 = 4080.0;

/// CRC-16/CCITT-FALSE: polynomial 0x1021, initial value 0xFFFF, no
/// reflection, no final XOR.
pub fn crc16_ccitt_false(bytes: &[u8]) -> u16 {
    let mut crc: u16 = 0xFFFF;
    for &b in bytes {
        crc ^= (b as u16) << 8;
        for _ in 0..8 {
            crc = if crc & 0x8000 != 0 { (crc << 1) ^ 0x1021 } else { crc << 1 };
        }
    }
    crc
}

/// One sample on the wire.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawFrame {
    pub seq: u32,
    /// Microseconds, wrapping at 2³² (~71.6 min); consumers track wrap via
    /// seq continuity.
    pub timestamp_us: u32,
    pub channels: [u32; 6],
}

/// Serializes a frame to its 34-byte wire form.
pub fn encode_frame(f: &RawFrame) -> Result<[u8; FRAME_LEN]> {
    for &c in &f.channels {
        if c > MAX_COUNTS {
            return Err(Error::ChannelOverflow(c));
        }
    }
    let mut out = [0u8; FRAME_LEN];
    out[0..4].copy_from_slice(&f.seq.to_le_bytes());
    out[4..8].copy_from_slice(&f.timestamp_us.to_le_bytes());
    for (i, &c) in f.channels.iter().enumerate() {
        out[8 + 4 * i..12 + 4 * i].copy_from_slice(&c.to_le_bytes());
    }
    let crc = crc16_ccitt_false(&out[..32]);
    out[32..34].copy_from_slice(&crc.to_le_bytes());
    Ok(out)
}

/// Parses and verifies one frame. The CRC is checked before any field is
/// trusted.
pub fn decode_frame(bytes: &[u8]) -> Result<RawFrame> {
    if bytes.len() != FRAME_LEN {
        return Err(Error::BadLength(bytes.len()));
    }
    let stored = u16::from_le_bytes([bytes[32], bytes[33]]);
    let computed = crc16_ccitt_false(&bytes[..32]);
    if stored != computed {
        return Err(Error::BadCrc { computed, stored });
    }
    let seq = u32::from_le_bytes(bytes[0..4].try_into().unwrap());
    let timestamp_us = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let mut channels = [0u32; 6];
    for (i, c) in channels.iter_mut().enumerate() {
        *c = u32::from_le_bytes(bytes[8 + 4 * i..12 + 4 * i].try_into().unwrap());
        if *c > MAX_COUNTS {
            return Err(Error::ChannelOverflow(*c));
        }
    }
    Ok(RawFrame { seq, timestamp_us, channels })
}

/// Converts a synthesized dataset to wire frames: seq is the row index and
/// timestamps wrap into 32 bits.
pub fn dataset_to_frames(ds: &Dataset) -> Vec<RawFrame> {
    ds.rows
        .iter()
        .enumerate()
        .map(|(i, row)| RawFrame {
            seq: i as u32,
            timestamp_us: (row.t_us % (1u64 << 32)) as u32,
            channels: row.channels,
        })
        .collect()
}

/// Writes a frame log: 8-byte header then concatenated frames.
pub fn write_log<W: Write>(frames: &[RawFrame], mut out: W) -> Result<()> {
    out.write_all(&LOG_MAGIC)?;
    out.write_all(&LOG_VERSION.to_le_bytes())?;
    for f in frames {
        out.write_all(&encode_frame(f)?)?;
    }
    Ok(())
}

/// Integrity summary of a read log.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogStats {
    pub frames: usize,
    /// Number of places where seq did not increment by exactly 1. Gaps are
    /// reported, not fatal.
    pub seq_gaps: usize,
}

/// Reads and verifies a frame log.
pub fn read_log<R: Read>(mut input: R) -> Result<(Vec<RawFrame>, LogStats)> {
    let mut header = [0u8; 8];
    input.read_exact(&mut header).map_err(|_| Error::Checksum("log header truncated".into()))?;
    if header[..6] != LOG_MAGIC {
        return Err(Error::Checksum("bad log magic".into()));
    }
    let version = u16::from_le_bytes([header[6], header[7]]);
    if version != LOG_VERSION {
        return Err(Error::VersionMismatch(format!(
            "log format version {version} (expected {LOG_VERSION})"
        )));
    }
    let mut body = Vec::new();
    input.read_to_end(&mut body)?;
    if body.len() % FRAME_LEN != 0 {
        return Err(Error::BadLength(body.len() % FRAME_LEN));
    }
    let mut frames = Vec::with_capacity(body.len() / FRAME_LEN);
    let mut seq_gaps = 0;
    for chunk in body.chunks_exact(FRAME_LEN) {
        let f = decode_frame(chunk)?;
        if let Some(prev) = frames.last() {
            let prev: &RawFrame = prev;
            if f.seq != prev.seq.wrapping_add(1) {
                seq_gaps += 1;
            }
        }
        frames.push(f);
    }
    let stats = LogStats { frames: frames.len(), seq_gaps };
    Ok((frames, stats))
}

/// Observed range of one CSV column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnRange {
    pub name: String,
    pub min: f64,
    pub max: f64,
}

/// Summary of an ingested CSV file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IngestStats {
    pub rows: usize,
    pub columns: Vec<ColumnRange>,
}

fn expected_columns() -> Vec<String> {
    let mut cols = vec!["t_us".to_string()];
    cols.extend(AXIS_NAMES.iter().map(|s| s.to_string()));
    cols.extend((0..6).map(|i| format!("ch{i}")));
    cols
}

fn check_header(headers: &csv::StringRecord) -> Result<()> {
    let expected = expected_columns();
    let got: Vec<&str> = headers.iter().collect();
    let missing: Vec<&str> = expected
        .iter()
        .map(String::as_str)
        .filter(|c| !got.contains(c))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Schema {
            line: 1,
            message: format!("missing column(s): {}", missing.join(", ")),
        });
    }
    if got != expected.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(Error::Schema {
            line: 1,
            message: format!(
                "column order mismatch: expected {}, got {}",
                expected.join(","),
                got.join(",")
            ),
        });
    }
    Ok(())
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

fn parse_row(record: &csv::StringRecord) -> Result<DatasetRow> {
    let line = record_line(record);
    if record.len() != 13 {
        return Err(Error::Schema {
            line,
            message: format!("expected 13 fields, got {}", record.len()),
        });
    }
    let field = |idx: usize| -> &str { record.get(idx).unwrap() };
    let t_us: u64 = field(0).parse().map_err(|_| Error::Value {
        line,
        message: format!("t_us is not an unsigned integer: '{}'", field(0)),
    })?;
    let mut wv = [0.0f64; 6];
    for (k, v) in wv.iter_mut().enumerate() {
        let s = field(1 + k);
        *v = s.parse().map_err(|_| Error::Value {
            line,
            message: format!("{} is not numeric: '{s}'", AXIS_NAMES[k]),
        })?;
        if !v.is_finite() {
            return Err(Error::Value {
                line,
                message: format!("{} is not finite: '{s}'", AXIS_NAMES[k]),
            });
        }
    }
    let mut channels = [0u32; 6];
    for (k, c) in channels.iter_mut().enumerate() {
        let s = field(7 + k);
        *c = s.parse().map_err(|_| Error::Value {
            line,
            message: format!("ch{k} is not an unsigned integer: '{s}'"),
        })?;
        if *c > MAX_COUNTS {
            return Err(Error::Value {
                line,
                message: format!("ch{k} exceeds the 28-bit range: {c}"),
            });
        }
    }
    Ok(DatasetRow {
        t_us,
        wrench: Wrench {
            fx: wv[0],
            fy: wv[1],
            fz: wv[2],
            tx: wv[3],
            ty: wv[4],
            tz: wv[5],
        },
        channels,
    })
}

struct RangeTracker {
    columns: Vec<ColumnRange>,
}

impl RangeTracker {
    fn new() -> Self {
        RangeTracker {
            columns: expected_columns()
                .into_iter()
                .map(|name| ColumnRange { name, min: f64::INFINITY, max: f64::NEG_INFINITY })
                .collect(),
        }
    }
    fn update(&mut self, row: &DatasetRow) {
        let mut vals = [0.0f64; 13];
        vals[0] = row.t_us as f64;
        let wv = row.wrench.to_vector();
        for k in 0..6 {
            vals[1 + k] = wv[k];
            vals[7 + k] = row.channels[k] as f64;
        }
        for (col, v) in self.columns.iter_mut().zip(vals) {
            col.min = col.min.min(v);
            col.max = col.max.max(v);
        }
    }
    fn finish(mut self, rows: usize) -> IngestStats {
        if rows == 0 {
            for col in &mut self.columns {
                col.min = 0.0;
                col.max = 0.0;
            }
        }
        IngestStats { rows, columns: self.columns }
    }
}

/// Estimated sample rate from the median timestamp delta (0 when fewer than
/// two rows).
fn infer_rate(rows: &[DatasetRow]) -> f64 {
    if rows.len() < 2 {
        return 0.0;
    }
    let mut deltas: Vec<u64> =
        rows.windows(2).map(|p| p[1].t_us.saturating_sub(p[0].t_us)).collect();
    deltas.sort_unstable();
    let dt = deltas[deltas.len() / 2];
    if dt == 0 {
        0.0
    } else {
        1e6 / dt as f64
    }
}

/// Parses a CSV acquisition in the canonical `synth` schema, returning the
/// dataset and per-column range statistics. The header must match exactly;
/// schema and value errors carry the offending 1-based line number.
pub fn ingest_csv<R: Read>(input: R) -> Result<(Dataset, IngestStats)> {
    let mut reader = csv::ReaderBuilder::new().from_reader(input);
    check_header(reader.headers()?)?;
    let mut rows = Vec::new();
    let mut tracker = RangeTracker::new();
    for record in reader.records() {
        let record = record?;
        let row = parse_row(&record)?;
        tracker.update(&row);
        rows.push(row);
    }
    let stats = tracker.finish(rows.len());
    Ok((Dataset { rate: infer_rate(&rows), rows }, stats))
}

/// Streaming variant of [`ingest_csv`] that verifies and summarizes without
/// retaining rows, so arbitrarily large files parse in a constant working
/// set.
pub fn ingest_csv_stats<R: Read>(input: R) -> Result<IngestStats> {
    let mut reader = csv::ReaderBuilder::new().from_reader(input);
    check_header(reader.headers()?)?;
    let mut tracker = RangeTracker::new();
    let mut rows = 0usize;
    let mut record = csv::StringRecord::new();
    while reader.read_record(&mut record)? {
        let row = parse_row(&record)?;
        tracker.update(&row);
        rows += 1;
    }
    Ok(tracker.finish(rows))
}

/// Opens `path` and ingests it, buffered.
pub fn ingest_csv_path(path: &std::path::Path) -> Result<(Dataset, IngestStats)> {
    let file = std::fs::File::open(path)?;
    ingest_csv(BufReader::new(file))
}

/// Outcome of a replay run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayStats {
    pub requested_hz: f64,
    /// Delivered frames divided by the elapsed time from start to the last
    /// delivery.
    pub achieved_hz: f64,
    pub delivered: u64,
    /// Frames displaced from the queue because the sink fell behind.
    pub dropped: u64,
    /// Worst deviation of an inter-delivery interval from the nominal period
    /// (µs).
    pub max_jitter_us: u64,
}

/// Plays `frames` to `sink` at `rate` Hz (1 ≤ rate ≤ 4080).
///
/// A timing thread paces frames into a bounded single-producer queue
/// (sleeping to within 200 µs of each deadline, then spinning); the sink
/// runs on the calling thread. When the sink falls more than
/// [`REPLAY_QUEUE_CAPACITY`] frames behind, the oldest queued frame is
/// dropped and counted. Frame order is never permuted.
pub fn replay<F: FnMut(&RawFrame)>(
    frames: &[RawFrame],
    rate: f64,
    mut sink: F,
) -> Result<ReplayStats> {
    if !(1.0..=MAX_REPLAY_RATE_HZ).contains(&rate) {
        return Err(Error::Rate(rate));
    }
    let period = Duration::from_secs_f64(1.0 / rate);
    let queue: ArrayQueue<RawFrame> = ArrayQueue::new(REPLAY_QUEUE_CAPACITY);
    let done = AtomicBool::new(false);
    let dropped = AtomicU64::new(0);

    let mut delivered = 0u64;
    let mut max_jitter = Duration::ZERO;
    let mut last_delivery: Option<Instant> = None;
    let start = Instant::now();
    let mut elapsed_at_last = Duration::ZERO;

    std::thread::scope(|scope| {
        scope.spawn(|| {
            const SPIN_MARGIN: Duration = Duration::from_micros(200);
            for (i, frame) in frames.iter().enumerate() {
                let deadline = start + period * i as u32;
                loop {
                    let now = Instant::now();
                    if now >= deadline {
                        break;
                    }
                    let remaining = deadline - now;
                    if remaining > SPIN_MARGIN {
                        std::thread::sleep(remaining - SPIN_MARGIN);
                    } else {
                        std::hint::spin_loop();
                    }
                }
                if queue.force_push(*frame).is_some() {
                    dropped.fetch_add(1, Ordering::Relaxed);
                }
            }
            done.store(true, Ordering::Release);
        });

        loop {
            match queue.pop() {
                Some(frame) => {
                    let now = Instant::now();
                    if let Some(prev) = last_delivery {
                        let delta = now - prev;
                        let jitter = if delta > period { delta - period } else { period - delta };
                        max_jitter = max_jitter.max(jitter);
                    }
                    last_delivery = Some(now);
                    elapsed_at_last = now - start;
                    sink(&frame);
                    delivered += 1;
                }
                None => {
                    if done.load(Ordering::Acquire) && queue.is_empty() {
                        break;
                    }
                    std::hint::spin_loop();
                }
            }
        }
    });

    let achieved_hz = if delivered > 0 && elapsed_at_last > Duration::ZERO {
        delivered as f64 / elapsed_at_last.as_secs_f64()
    } else {
        0.0
    };
    Ok(ReplayStats {
        requested_hz: rate,
        achieved_hz,
        delivered,
        dropped: dropped.load(Ordering::Relaxed),
        max_jitter_us: max_jitter.as_micros() as u64,
    })
}

/// Reads a frame log or CSV dataset by magic/extension sniffing: files
/// starting with the log magic parse as logs, anything else as CSV.
pub fn read_frames_auto(path: &std::path::Path) -> Result<Vec<RawFrame>> {
    let file = std::fs::File::open(path)?;
    let mut reader = BufReader::new(file);
    let peek = reader.fill_buf()?;
    if peek.len() >= LOG_MAGIC.len() && peek[..LOG_MAGIC.len()] == LOG_MAGIC {
        let (frames, _) = read_log(reader)?;
        Ok(frames)
    } else {
        let (ds, _) = ingest_csv(reader)?;
        Ok(dataset_to_frames(&ds))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn reference_crc(bytes: &[u8]) -> u16 {
        // independent implementation from the `crc` crate
        const REF: crc::Crc<u16> = crc::Crc::<u16>::new(&crc::CRC_16_IBM_3740);
        REF.checksum(bytes)
    }

    fn random_frame(rng: &mut ChaCha8Rng) -> RawFrame {
        let mut channels = [0u32; 6];
        for c in &mut channels {
            *c = rng.gen_range(0..=MAX_COUNTS);
        }
        RawFrame { seq: rng.gen(), timestamp_us: rng.gen(), channels }
    }

    #[test]
    fn crc_matches_reference_vectors() {
        // frozen independently computed vectors
        assert_eq!(crc16_ccitt_false(b"123456789"), 0x29B1);
        assert_eq!(crc16_ccitt_false(&[0u8; 32]), 0xF14C);
        assert_eq!(crc16_ccitt_false(b""), 0xFFFF);

        // cross-check against the reference implementation on random buffers
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for len in 0..64 {
            let buf: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
            assert_eq!(crc16_ccitt_false(&buf), reference_crc(&buf), "len {len}");
        }
    }

    #[test]
    fn all_zero_frame_layout() {
        let f = RawFrame { seq: 0, timestamp_us: 0, channels: [0; 6] };
        let bytes = encode_frame(&f).unwrap();
        assert!(bytes[..32].iter().all(|&b| b == 0));
        let crc = u16::from_le_bytes([bytes[32], bytes[33]]);
        assert_eq!(crc, reference_crc(&[0u8; 32]));
    }

    #[test]
    fn encode_decode_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let f = random_frame(&mut rng);
            let bytes = encode_frame(&f).unwrap();
            assert_eq!(bytes.len(), FRAME_LEN);
            assert_eq!(decode_frame(&bytes).unwrap(), f);
        }
    }

    #[test]
    fn channel_overflow_is_rejected_on_encode() {
        let mut f = RawFrame { seq: 1, timestamp_us: 2, channels: [0; 6] };
        f.channels[4] = 1 << 28;
        assert!(matches!(encode_frame(&f), Err(Error::ChannelOverflow(_))));
        f.channels[4] = MAX_COUNTS;
        assert!(encode_frame(&f).is_ok());
    }

    #[test]
    fn wrong_length_is_rejected() {
        let f = RawFrame { seq: 7, timestamp_us: 8, channels: [9; 6] };
        let bytes = encode_frame(&f).unwrap();
        assert!(matches!(decode_frame(&bytes[..33]), Err(Error::BadLength(33))));
        let mut long = bytes.to_vec();
        long.push(0);
        assert!(matches!(decode_frame(&long), Err(Error::BadLength(35))));
    }

    #[test]
    fn every_single_bit_flip_is_detected() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = random_frame(&mut rng);
        let bytes = encode_frame(&f).unwrap();
        for bit in 0..FRAME_LEN * 8 {
            let mut corrupted = bytes;
            corrupted[bit / 8] ^= 1 << (bit % 8);
            assert!(
                matches!(decode_frame(&corrupted), Err(Error::BadCrc { .. })),
                "bit {bit} not caught"
            );
        }
    }

    #[test]
    fn log_round_trip_and_gap_counting() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut frames: Vec<RawFrame> = (0..100)
            .map(|i| {
                let mut f = random_frame(&mut rng);
                f.seq = i;
                f
            })
            .collect();
        let mut buf = Vec::new();
        write_log(&frames, &mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 100 * FRAME_LEN);
        let (back, stats) = read_log(&buf[..]).unwrap();
        assert_eq!(back, frames);
        assert_eq!(stats, LogStats { frames: 100, seq_gaps: 0 });

        // drop two frames in the middle: two gap events
        frames.remove(60);
        frames.remove(30);
        let mut buf = Vec::new();
        write_log(&frames, &mut buf).unwrap();
        let (_, stats) = read_log(&buf[..]).unwrap();
        assert_eq!(stats.seq_gaps, 2);
    }

    #[test]
    fn malformed_logs_are_rejected() {
        let frames = vec![RawFrame { seq: 0, timestamp_us: 0, channels: [1; 6] }];
        let mut buf = Vec::new();
        write_log(&frames, &mut buf).unwrap();

        // bad magic
        let mut bad = buf.clone();
        bad[0] ^= 0xFF;
        assert!(matches!(read_log(&bad[..]), Err(Error::Checksum(_))));

        // unsupported version
        let mut bad = buf.clone();
        bad[6] = 2;
        assert!(matches!(read_log(&bad[..]), Err(Error::VersionMismatch(_))));

        // trailing partial frame
        let mut bad = buf.clone();
        bad.extend_from_slice(&[0u8; 10]);
        assert!(matches!(read_log(&bad[..]), Err(Error::BadLength(10))));

        // corrupted frame body
        let mut bad = buf;
        bad[12] ^= 0x40;
        assert!(matches!(read_log(&bad[..]), Err(Error::BadCrc { .. })));
    }

    fn sample_dataset() -> Dataset {
        use crate::synth::{generate_dataset, NoiseModel, SensorModel};
        let model = SensorModel::reference().unwrap();
        let schedule: Vec<Wrench> =
            (0..40).map(|i| Wrench::single_axis(2, i as f64 * 7.5)).collect();
        generate_dataset(
            &schedule,
            &model,
            &NoiseModel { count_sigma: 2.0, drift_per_second: 0.0 },
            500.0,
            9,
        )
        .unwrap()
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let ds = sample_dataset();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let (back, stats) = ingest_csv(&buf[..]).unwrap();
        assert_eq!(back.rows, ds.rows);
        assert_eq!(back.rate, 500.0);
        assert_eq!(stats.rows, 40);
        assert_eq!(stats.columns.len(), 13);
        assert_eq!(stats.columns[0].name, "t_us");
        assert_eq!(stats.columns[0].min, 0.0);
        // fz column spans the schedule
        assert_eq!(stats.columns[3].max, 39.0 * 7.5);
    }

    #[test]
    fn streaming_stats_match_full_parse() {
        let ds = sample_dataset();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let (_, full) = ingest_csv(&buf[..]).unwrap();
        let streamed = ingest_csv_stats(&buf[..]).unwrap();
        assert_eq!(full, streamed);
    }

    #[test]
    fn missing_column_is_a_schema_error() {
        let text = "t_us,fx,fy,fz,tx,ty,tz,ch0,ch1,ch2,ch4,ch5\n0,0,0,0,0,0,0,1,2,3,5,6\n";
        match ingest_csv(text.as_bytes()) {
            Err(Error::Schema { line, message }) => {
                assert_eq!(line, 1);
                assert!(message.contains("ch3"), "message: {message}");
            }
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn bad_cells_report_their_line() {
        let header = "t_us,fx,fy,fz,tx,ty,tz,ch0,ch1,ch2,ch3,ch4,ch5";
        let good = "2000,1,2,3,4,5,6,7,8,9,10,11,12";
        let text = format!("{header}\n{good}\nnope,1,2,3,4,5,6,7,8,9,10,11,12\n");
        match ingest_csv(text.as_bytes()) {
            Err(Error::Value { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("t_us"));
            }
            other => panic!("expected value error, got {other:?}"),
        }

        // channel overflow is a value error with line number
        let text = format!("{header}\n2000,1,2,3,4,5,6,7,8,9,{},11,12\n", 1u64 << 28);
        match ingest_csv(text.as_bytes()) {
            Err(Error::Value { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("ch3"), "message: {message}");
            }
            other => panic!("expected value error, got {other:?}"),
        }
    }

    #[test]
    fn replay_preserves_order_and_counts() {
        let frames: Vec<RawFrame> = (0..200)
            .map(|i| RawFrame { seq: i, timestamp_us: i * 245, channels: [i; 6] })
            .collect();
        let mut seen = Vec::new();
        let stats = replay(&frames, 4080.0, |f| seen.push(f.seq)).unwrap();
        assert_eq!(stats.delivered, 200);
        assert_eq!(stats.dropped, 0);
        assert_eq!(seen.len(), 200);
        for (i, s) in seen.iter().enumerate() {
            assert_eq!(*s, i as u32, "frame order broken at {i}");
        }
    }

    #[test]
    fn replay_rate_bounds() {
        let frames = vec![RawFrame { seq: 0, timestamp_us: 0, channels: [0; 6] }];
        assert!(matches!(replay(&frames, 0.5, |_| ()), Err(Error::Rate(_))));
        assert!(matches!(replay(&frames, 5000.0, |_| ()), Err(Error::Rate(_))));
        assert!(replay(&frames, 4080.0, |_| ()).is_ok());
        assert!(replay(&frames, 1.0, |_| ()).is_ok());
    }

    #[test]
    fn frames_auto_reader_handles_both_formats() {
        let ds = sample_dataset();
        let dir = tempfile::tempdir().unwrap();

        let csv_path = dir.path().join("data.csv");
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        std::fs::write(&csv_path, &buf).unwrap();

        let log_path = dir.path().join("data.ftlog");
        let frames = dataset_to_frames(&ds);
        let mut buf = Vec::new();
        write_log(&frames, &mut buf).unwrap();
        std::fs::write(&log_path, &buf).unwrap();

        let from_csv = read_frames_auto(&csv_path).unwrap();
        let from_log = read_frames_auto(&log_path).unwrap();
        assert_eq!(from_csv, from_log);
        assert_eq!(from_csv, frames);
    }
}
