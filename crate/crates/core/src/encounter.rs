//! Pairwise proximity-encounter detection.
//!
//! Within one computation window, a pair of users has an encounter when
//! two conditions hold over the set `S` of their in-range beacons (reported
//! distance at or below the proximity threshold): `|S| >= min_exchanges`,
//! and the span between the first and last in-range beacon is at least
//! `min_duration_s`. The encounter is tagged with the arithmetic mean of
//! the GPS fixes over `S`.
//!
//! A pair produces at most one encounter per window; repeated contact
//! within the window extends the same encounter and per-day deduplication
//! happens downstream. Out-of-range beacons never extend the span: the
//! first/last timestamps are taken over `S` only.
//!
//! The cumulative in-range time is estimated as `|S|` times the beacon
//! cadence, capped at the observed span plus one period. This feeds the
//! daily cumulative-contact alert rule, which the span alone cannot
//! express when contact is split across windows.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::ingest::Window;
use crate::types::{BeaconRecord, EngineConfig, GeoPoint, Timestamp, UserId};

/// A validated pairwise proximity encounter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Encounter {
    pub pair: (UserId, UserId),
    pub window_start: Timestamp,
    /// First in-range beacon time.
    pub first_in_range: Timestamp,
    /// Last in-range beacon time.
    pub last_in_range: Timestamp,
    /// Number of in-range beacons.
    pub in_range_count: usize,
    /// Mean latitude/longitude of the in-range GPS fixes.
    pub mean_location: GeoPoint,
    /// Estimated in-range contact time within this window, seconds.
    pub cumulative_in_range_s: u64,
}

/// Detects all encounters in one window. Output is sorted by
/// (pair, window_start).
pub fn detect_encounters(w: &Window, cfg: &EngineConfig) -> Vec<Encounter> {
    let mut by_pair: BTreeMap<(UserId, UserId), Vec<&BeaconRecord>> = BTreeMap::new();
    for r in &w.records {
        by_pair.entry(r.pair()).or_default().push(r);
    }
    let mut out = Vec::new();
    for (pair, records) in by_pair {
        if let Some(e) = qualify_pair(pair, &records, w.start, cfg) {
            out.push(e);
        }
    }
    out
}

fn qualify_pair(
    pair: (UserId, UserId),
    records: &[&BeaconRecord],
    window_start: Timestamp,
    cfg: &EngineConfig,
) -> Option<Encounter> {
    let mut count = 0usize;
    let mut first = u64::MAX;
    let mut last = 0u64;
    let mut lat_sum = 0.0;
    let mut lon_sum = 0.0;
    for r in records {
        if r.distance_m <= cfg.proximity_threshold_m {
            count += 1;
            first = first.min(r.t.as_millis());
            last = last.max(r.t.as_millis());
            lat_sum += r.location.lat;
            lon_sum += r.location.lon;
        }
    }
    if count < cfg.min_exchanges || last - first < cfg.min_duration_s * 1000 {
        return None;
    }
    let period_ms = cfg.beacon_period_s * 1000;
    let cum_ms = (count as u64 * period_ms).min(last - first + period_ms);
    Some(Encounter {
        pair,
        window_start,
        first_in_range: Timestamp(first),
        last_in_range: Timestamp(last),
        in_range_count: count,
        mean_location: GeoPoint {
            lat: lat_sum / count as f64,
            lon: lon_sum / count as f64,
        },
        cumulative_in_range_s: cum_ms / 1000,
    })
}

/// Pair-sharded variant: partitions the window's records by a stable hash
/// of the canonical pair, detects per shard on worker threads, then merges
/// with a deterministic sort. Element-for-element equal to
/// [`detect_encounters`] for every shard count.
pub fn detect_encounters_parallel(w: &Window, cfg: &EngineConfig, shards: usize) -> Vec<Encounter> {
    assert!(shards >= 1, "shard count must be at least 1");
    if shards == 1 || w.records.len() < 2 {
        return detect_encounters(w, cfg);
    }
    let mut parts: Vec<Vec<BeaconRecord>> = vec![Vec::new(); shards];
    for r in &w.records {
        parts[pair_shard(r.pair(), shards)].push(*r);
    }
    let mut out = Vec::new();
    std::thread::scope(|scope| {
        let handles: Vec<_> = parts
            .into_iter()
            .map(|records| {
                let window = Window { start: w.start, end: w.end, records };
                scope.spawn(move || detect_encounters(&window, cfg))
            })
            .collect();
        for h in handles {
            out.extend(h.join().expect("shard worker panicked"));
        }
    });
    out.sort_by(|a, b| a.pair.cmp(&b.pair).then(a.window_start.cmp(&b.window_start)));
    out
}

/// Stable FNV-1a shard routing over the pair's id bytes. Deliberately not
/// the std hasher so shard assignment never changes under us.
fn pair_shard(pair: (UserId, UserId), shards: usize) -> usize {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in pair.0.as_bytes().iter().chain(pair.1.as_bytes()) {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    (h % shards as u64) as usize
}

/// CSV header for the encounter table export.
pub const ENCOUNTER_CSV_HEADER: &str =
    "user_a,user_b,window_start_ms,t1_ms,t2_ms,count,mean_lat,mean_lon,cum_s";

/// Serializes encounters as the encounter-table CSV (with header).
pub fn write_encounters_csv(encounters: &[Encounter]) -> String {
    let mut out = String::from(ENCOUNTER_CSV_HEADER);
    out.push('\n');
    for e in encounters {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            e.pair.0,
            e.pair.1,
            e.window_start.as_millis(),
            e.first_in_range.as_millis(),
            e.last_in_range.as_millis(),
            e.in_range_count,
            e.mean_location.lat,
            e.mean_location.lon,
            e.cumulative_in_range_s
        ));
    }
    out
}

/// Parses an encounter-table CSV produced by [`write_encounters_csv`].
pub fn read_encounters_csv(text: &str) -> Result<Vec<Encounter>, Error> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line != ENCOUNTER_CSV_HEADER {
                return Err(Error::ChunkFormat(format!("unexpected encounter header {line:?}")));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(Error::ChunkFormat(format!("bad encounter row {line:?}")));
        }
        let num =
            |s: &str| s.parse::<u64>().map_err(|e| Error::ChunkFormat(format!("bad int: {e}")));
        let fnum =
            |s: &str| s.parse::<f64>().map_err(|e| Error::ChunkFormat(format!("bad float: {e}")));
        let location = GeoPoint { lat: fnum(f[6])?, lon: fnum(f[7])? };
        location.validate()?;
        out.push(Encounter {
            pair: (f[0].parse()?, f[1].parse()?),
            window_start: Timestamp(num(f[2])?),
            first_in_range: Timestamp(num(f[3])?),
            last_in_range: Timestamp(num(f[4])?),
            in_range_count: num(f[5])? as usize,
            mean_location: location,
            cumulative_in_range_s: num(f[8])?,
        });
    }
    Ok(out)
}
