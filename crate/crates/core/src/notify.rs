//! Daily per-user summaries and population aggregates.
//!
//! Hourly encounters repeat when the same pair stays together, so the
//! daily view first deduplicates: encounters sharing a pair and a
//! location key keep only the earliest. The location key is the hotspot
//! cluster the encounter belongs to, falling back to a fixed ~100 m
//! degree-grid cell for encounters outside every cluster. Summaries then
//! report per-user counts, the signed day-over-day delta, partners not
//! seen the previous day, and crowding visits that met the sojourn alert
//! threshold.
//!
//! The population metrics keep the encounter total and the active-user
//! count as integers, so the average is exact by construction; the JSON
//! export renders it as a float.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::crowding::Hotspot;
use crate::encounter::Encounter;
use crate::geo::{manhattan, project_local, M_PER_DEG_LAT, M_PER_DEG_LON};
use crate::types::{format_epoch_day, BeaconRecord, EngineConfig, Timestamp, UserId};

/// One user's digest of one UTC calendar day.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DailySummary {
    pub user: UserId,
    /// Days since the Unix epoch, UTC.
    pub day: u64,
    /// Deduplicated encounter events involving this user.
    pub unique_encounters: usize,
    /// Distinct partners seen today (differs from `unique_encounters`
    /// when a pair met at several locations).
    pub distinct_partners: usize,
    pub delta_vs_prev_day: i64,
    /// Partners present today and absent yesterday, ascending.
    pub new_partners: Vec<UserId>,
    /// Hotspot visits that met the sojourn threshold: (cluster_id, seconds).
    pub crowding_visits: Vec<(usize, u64)>,
}

/// Population-level aggregates for one day. The encounter total and the
/// user count are kept exact; the average is derived.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PopulationMetrics {
    pub day: u64,
    pub active_users: u64,
    pub total_unique_encounters: u64,
    pub largest_event_encounters: u64,
}

impl PopulationMetrics {
    /// Mean unique encounters per active user; 0 when nobody was active.
    pub fn avg_encounters_per_user(&self) -> f64 {
        if self.active_users == 0 {
            0.0
        } else {
            self.total_unique_encounters as f64 / self.active_users as f64
        }
    }
}

/// Location key used for daily deduplication.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum LocationKey {
    Cluster(usize),
    GridCell(i64, i64),
}

fn location_key(e: &Encounter, cluster_of: &BTreeMap<(Timestamp, (UserId, UserId)), usize>) -> LocationKey {
    if let Some(c) = cluster_of.get(&(e.window_start, e.pair)) {
        return LocationKey::Cluster(*c);
    }
    // ~100 m fixed degree grid; exact at the equator, narrower with
    // latitude, deterministic everywhere.
    let lat_cell = (e.mean_location.lat * M_PER_DEG_LAT / 100.0).floor() as i64;
    let lon_cell = (e.mean_location.lon * M_PER_DEG_LON / 100.0).floor() as i64;
    LocationKey::GridCell(lat_cell, lon_cell)
}

/// Keeps only the earliest encounter of each (pair, location-key) group.
/// Output is sorted by (pair, window_start); idempotent.
pub fn dedup_daily(encounters_of_day: &[Encounter], hotspots: &[Hotspot]) -> Vec<Encounter> {
    let mut cluster_of: BTreeMap<(Timestamp, (UserId, UserId)), usize> = BTreeMap::new();
    for h in hotspots {
        for m in &h.members {
            cluster_of.insert((m.window_start, m.pair), h.cluster_id);
        }
    }
    let mut earliest: BTreeMap<((UserId, UserId), LocationKey), Encounter> = BTreeMap::new();
    for e in encounters_of_day {
        let key = (e.pair, location_key(e, &cluster_of));
        earliest
            .entry(key)
            .and_modify(|kept| {
                if e.window_start < kept.window_start {
                    *kept = *e;
                }
            })
            .or_insert(*e);
    }
    let mut out: Vec<Encounter> = earliest.into_values().collect();
    out.sort_by(|a, b| a.pair.cmp(&b.pair).then(a.window_start.cmp(&b.window_start)));
    out
}

fn partners_of(user: UserId, encounters: &[Encounter]) -> BTreeSet<UserId> {
    encounters
        .iter()
        .filter_map(|e| {
            if e.pair.0 == user {
                Some(e.pair.1)
            } else if e.pair.1 == user {
                Some(e.pair.0)
            } else {
                None
            }
        })
        .collect()
}

/// Builds one user's summary from already-deduplicated day lists and the
/// user's hotspot visits.
pub fn daily_summary(
    user: UserId,
    day: u64,
    today: &[Encounter],
    yesterday: &[Encounter],
    visits: &[(usize, u64)],
    cfg: &EngineConfig,
) -> DailySummary {
    let today_count = today.iter().filter(|e| e.pair.0 == user || e.pair.1 == user).count();
    let yesterday_count =
        yesterday.iter().filter(|e| e.pair.0 == user || e.pair.1 == user).count();
    let today_partners = partners_of(user, today);
    let yesterday_partners = partners_of(user, yesterday);
    let new_partners: Vec<UserId> =
        today_partners.difference(&yesterday_partners).copied().collect();
    let crowding_visits: Vec<(usize, u64)> = visits
        .iter()
        .copied()
        .filter(|(_, sojourn_s)| *sojourn_s >= cfg.sojourn_alert_s)
        .collect();
    DailySummary {
        user,
        day,
        unique_encounters: today_count,
        distinct_partners: today_partners.len(),
        delta_vs_prev_day: today_count as i64 - yesterday_count as i64,
        new_partners,
        crowding_visits,
    }
}

/// Spans a user's GPS fixes over each hotspot: a fix is inside when its
/// Manhattan distance to the centroid (projected about the centroid) is
/// within `radius_m + eps_m`. The sojourn is the span between the first
/// and last inside fix; single-fix visits report zero and are filtered by
/// the alert threshold downstream.
pub fn sojourn_in_hotspots(
    user_records: &[BeaconRecord],
    hotspots: &[Hotspot],
    cfg: &EngineConfig,
) -> Vec<(usize, u64)> {
    let mut out = Vec::new();
    for h in hotspots {
        let reach = h.radius_m + cfg.eps_m;
        let mut first = u64::MAX;
        let mut last = 0u64;
        for r in user_records {
            let p = project_local(r.location, h.centroid);
            if manhattan(p, (0.0, 0.0)) <= reach {
                first = first.min(r.t.as_millis());
                last = last.max(r.t.as_millis());
            }
        }
        if first != u64::MAX {
            out.push((h.cluster_id, (last - first) / 1000));
        }
    }
    out.sort_unstable();
    out
}

/// Aggregates one day of summaries. `active_users` is the number of
/// summaries (one per user with any record that day);
/// `largest_event_encounters` is the maximum unique-encounter count over
/// designated hotspots.
pub fn population_metrics(day_summaries: &[DailySummary], hotspots: &[Hotspot]) -> PopulationMetrics {
    let day = day_summaries.first().map(|s| s.day).unwrap_or(0);
    PopulationMetrics {
        day,
        active_users: day_summaries.len() as u64,
        total_unique_encounters: day_summaries.iter().map(|s| s.unique_encounters as u64).sum(),
        largest_event_encounters: hotspots
            .iter()
            .filter(|h| h.is_hot)
            .map(|h| h.unique_encounters as u64)
            .max()
            .unwrap_or(0),
    }
}

/// CSV header for the daily summary export.
pub const SUMMARY_CSV_HEADER: &str =
    "user,date,unique_encounters,distinct_partners,delta_vs_prev_day,new_partners,crowding_visits";

/// Serializes one day of summaries. List fields are `;`-joined;
/// crowding visits are `cluster:sojourn_s` entries.
pub fn write_summaries_csv(summaries: &[DailySummary]) -> String {
    let mut out = String::from(SUMMARY_CSV_HEADER);
    out.push('\n');
    for s in summaries {
        let partners: Vec<String> = s.new_partners.iter().map(|u| u.to_hex()).collect();
        let visits: Vec<String> =
            s.crowding_visits.iter().map(|(c, t)| format!("{c}:{t}")).collect();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            s.user,
            format_epoch_day(s.day),
            s.unique_encounters,
            s.distinct_partners,
            s.delta_vs_prev_day,
            partners.join(";"),
            visits.join(";")
        ));
    }
    out
}

#[derive(Serialize)]
struct MetricsJson {
    date: String,
    active_users: u64,
    avg_encounters_per_user: f64,
    largest_event_encounters: u64,
}

/// Single-line JSON object for the population metrics export.
pub fn write_metrics_json(m: &PopulationMetrics) -> String {
    serde_json::to_string(&MetricsJson {
        date: format_epoch_day(m.day),
        active_users: m.active_users,
        avg_encounters_per_user: m.avg_encounters_per_user(),
        largest_event_encounters: m.largest_event_encounters,
    })
    .expect("metrics serialization")
}
