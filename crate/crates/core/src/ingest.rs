//! Chunk ingestion: decode, validate, normalize, and window beacon records.
//!
//! Two wire formats are supported. `lines` is UTF-8 CSV with no header,
//! one record per line: `user_a,user_b,t_ms,distance_m,lat,lon`. `packed`
//! is a sequence of length-prefixed binary records in the same field
//! order: a little-endian `u32` length (always 96) followed by two
//! 32-byte hex ids, a little-endian `u64` millisecond timestamp and three
//! little-endian `f64` values (distance, lat, lon). Both formats are
//! bit-exact so corpora are portable.
//!
//! Validation is per record: a malformed record is dropped and counted,
//! never fatal for the chunk. Only an undecodable container is an error.
//! Duplicate records (same pair, timestamp, and distance) are removed,
//! since chunk retransmission is expected from store-and-forward devices.
//! Windowing is recomputed from the full record set on every run, so late
//! chunks simply land in their windows on the next pass.

use crate::error::Error;
use crate::types::{BeaconRecord, GeoPoint, Timestamp, UserId};

/// Record byte width in the `packed` format (2×32 id + u64 + 3×f64).
pub const PACKED_RECORD_LEN: usize = 96;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChunkFormat {
    Lines,
    Packed,
}

/// One decoded offload chunk, normalized: records are in canonical pair
/// order, sorted by timestamp, and deduplicated.
#[derive(Clone, Debug)]
pub struct Chunk {
    pub records: Vec<BeaconRecord>,
    pub source_id: String,
    pub received_at: Timestamp,
}

/// Per-chunk ingestion diagnostics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IngestStats {
    pub parsed: usize,
    pub dropped: usize,
    pub deduplicated: usize,
}

/// A half-open computation window `[start, end)` with the records that
/// fall inside it. `start` is aligned to a multiple of the window width.
#[derive(Clone, Debug)]
pub struct Window {
    pub start: Timestamp,
    pub end: Timestamp,
    pub records: Vec<BeaconRecord>,
}

/// Decodes a chunk in the declared format. `received_at` is taken from the
/// newest record so that repeated runs over the same bytes are identical.
pub fn parse_chunk(
    bytes: &[u8],
    format: ChunkFormat,
    source_id: &str,
) -> Result<(Chunk, IngestStats), Error> {
    let mut stats = IngestStats::default();
    let mut records = match format {
        ChunkFormat::Lines => parse_lines(bytes, &mut stats)?,
        ChunkFormat::Packed => parse_packed(bytes, &mut stats)?,
    };
    normalize(&mut records, &mut stats);
    stats.parsed = records.len();
    let received_at = records.last().map(|r| r.t).unwrap_or(Timestamp(0));
    Ok((
        Chunk { records, source_id: to_owned_source(source_id), received_at },
        stats,
    ))
}

fn to_owned_source(s: &str) -> String {
    s.to_string()
}

/// Sorts by (t, pair, distance, location) and removes records whose
/// (pair, t, distance) key repeats. Idempotent on normalized input.
pub fn normalize(records: &mut Vec<BeaconRecord>, stats: &mut IngestStats) {
    records.sort_by(|a, b| {
        a.t.cmp(&b.t)
            .then(a.pair().cmp(&b.pair()))
            .then(a.distance_m.total_cmp(&b.distance_m))
            .then(a.location.cmp_lat_lon(&b.location))
    });
    let before = records.len();
    records.dedup_by(|next, prev| {
        next.t == prev.t && next.pair() == prev.pair() && next.distance_m == prev.distance_m
    });
    stats.deduplicated += before - records.len();
}

fn parse_lines(bytes: &[u8], stats: &mut IngestStats) -> Result<Vec<BeaconRecord>, Error> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::ChunkFormat(format!("lines chunk is not UTF-8: {e}")))?;
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        match parse_line(line) {
            Ok(rec) => out.push(rec),
            Err(_) => stats.dropped += 1,
        }
    }
    Ok(out)
}

/// Parses one CSV line `user_a,user_b,t_ms,distance_m,lat,lon`.
pub fn parse_line(line: &str) -> Result<BeaconRecord, Error> {
    let mut fields = line.split(',');
    let mut next = || {
        fields
            .next()
            .ok_or_else(|| Error::InvalidQuery(format!("missing field in {line:?}")))
    };
    let a: UserId = next()?.parse()?;
    let b: UserId = next()?.parse()?;
    let t: u64 = next()?
        .parse()
        .map_err(|e| Error::InvalidQuery(format!("bad timestamp: {e}")))?;
    let d: f64 = next()?
        .parse()
        .map_err(|e| Error::InvalidQuery(format!("bad distance: {e}")))?;
    let lat: f64 = next()?
        .parse()
        .map_err(|e| Error::InvalidQuery(format!("bad latitude: {e}")))?;
    let lon: f64 = next()?
        .parse()
        .map_err(|e| Error::InvalidQuery(format!("bad longitude: {e}")))?;
    if fields.next().is_some() {
        return Err(Error::InvalidQuery(format!("trailing fields in {line:?}")));
    }
    BeaconRecord::new(a, b, Timestamp(t), d, GeoPoint { lat, lon })
}

/// Formats one record as a `lines` row.
pub fn format_line(r: &BeaconRecord) -> String {
    format!(
        "{},{},{},{},{},{}",
        r.user_a,
        r.user_b,
        r.t.as_millis(),
        r.distance_m,
        r.location.lat,
        r.location.lon
    )
}

/// Serializes records in the `lines` format, one row per record.
pub fn write_lines(records: &[BeaconRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&format_line(r));
        out.push('\n');
    }
    out
}

fn parse_packed(bytes: &[u8], stats: &mut IngestStats) -> Result<Vec<BeaconRecord>, Error> {
    let mut out = Vec::new();
    let mut off = 0usize;
    while off < bytes.len() {
        if bytes.len() - off < 4 {
            return Err(Error::ChunkFormat("truncated length prefix".into()));
        }
        let len = u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()) as usize;
        off += 4;
        if len != PACKED_RECORD_LEN {
            return Err(Error::ChunkFormat(format!(
                "bad record length {len}, expected {PACKED_RECORD_LEN}"
            )));
        }
        if bytes.len() - off < len {
            return Err(Error::ChunkFormat("truncated record body".into()));
        }
        match parse_packed_record(&bytes[off..off + len]) {
            Ok(rec) => out.push(rec),
            Err(_) => stats.dropped += 1,
        }
        off += len;
    }
    Ok(out)
}

fn parse_packed_record(body: &[u8]) -> Result<BeaconRecord, Error> {
    let id_str = |b: &[u8]| -> Result<UserId, Error> {
        std::str::from_utf8(b)
            .map_err(|e| Error::InvalidQuery(format!("id is not UTF-8: {e}")))?
            .parse()
    };
    let a = id_str(&body[0..32])?;
    let b = id_str(&body[32..64])?;
    let t = u64::from_le_bytes(body[64..72].try_into().unwrap());
    let d = f64::from_le_bytes(body[72..80].try_into().unwrap());
    let lat = f64::from_le_bytes(body[80..88].try_into().unwrap());
    let lon = f64::from_le_bytes(body[88..96].try_into().unwrap());
    BeaconRecord::new(a, b, Timestamp(t), d, GeoPoint { lat, lon })
}

/// Serializes records in the `packed` format.
pub fn write_packed(records: &[BeaconRecord]) -> Vec<u8> {
    let mut out = Vec::with_capacity(records.len() * (PACKED_RECORD_LEN + 4));
    for r in records {
        out.extend_from_slice(&(PACKED_RECORD_LEN as u32).to_le_bytes());
        out.extend_from_slice(r.user_a.to_hex().as_bytes());
        out.extend_from_slice(r.user_b.to_hex().as_bytes());
        out.extend_from_slice(&r.t.as_millis().to_le_bytes());
        out.extend_from_slice(&r.distance_m.to_le_bytes());
        out.extend_from_slice(&r.location.lat.to_le_bytes());
        out.extend_from_slice(&r.location.lon.to_le_bytes());
    }
    out
}

/// Partitions records into fixed windows keyed by `floor(t / window)`.
/// Every record lands in exactly one window; empty windows are omitted and
/// the output is sorted by window start.
pub fn window_records(records: &[BeaconRecord], window_s: u64) -> Vec<Window> {
    assert!(window_s > 0, "window width must be positive");
    let width_ms = window_s * 1000;
    let mut windows: std::collections::BTreeMap<u64, Vec<BeaconRecord>> =
        std::collections::BTreeMap::new();
    for r in records {
        let start = (r.t.as_millis() / width_ms) * width_ms;
        windows.entry(start).or_default().push(*r);
    }
    windows
        .into_iter()
        .map(|(start, records)| Window {
            start: Timestamp(start),
            end: Timestamp(start + width_ms),
            records,
        })
        .collect()
}
