//! Independent reference implementations used by the validation suite.
//!
//! Everything here is written directly from the defining rules, on purpose
//! sharing no code with the production paths it checks: encounter
//! detection enumerates all user pairs and timestamps, clustering builds
//! the full pairwise distance matrix, and tracing is a plain filtered BFS.
//! Keep it that way; the value of these oracles is their independence.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::encounter::Encounter;
use crate::geo::manhattan;
use crate::ingest::Window;
use crate::tracing::HealthReport;
use crate::types::{EngineConfig, GeoPoint, Timestamp, UserId};

/// Brute-force encounter detection from the two-condition definition:
/// enumerate every unordered user pair, gather the timestamps of its
/// in-range beacons, and apply the count and span conditions literally.
pub fn encounters_by_definition(w: &Window, cfg: &EngineConfig) -> Vec<Encounter> {
    let mut users: BTreeSet<UserId> = BTreeSet::new();
    for r in &w.records {
        users.insert(r.user_a);
        users.insert(r.user_b);
    }
    let users: Vec<UserId> = users.into_iter().collect();
    let mut out = Vec::new();
    for i in 0..users.len() {
        for j in i + 1..users.len() {
            let pair = (users[i], users[j]);
            // all in-range beacons of this pair, matching either id order
            let in_range: Vec<_> = w
                .records
                .iter()
                .filter(|r| {
                    (r.user_a == pair.0 && r.user_b == pair.1
                        || r.user_a == pair.1 && r.user_b == pair.0)
                        && r.distance_m <= cfg.proximity_threshold_m
                })
                .collect();
            if in_range.len() < cfg.min_exchanges {
                continue;
            }
            let t1 = in_range.iter().map(|r| r.t).min().unwrap();
            let t2 = in_range.iter().map(|r| r.t).max().unwrap();
            if t2.as_millis() - t1.as_millis() < cfg.min_duration_s * 1000 {
                continue;
            }
            let n = in_range.len() as f64;
            let mean_location = GeoPoint {
                lat: in_range.iter().map(|r| r.location.lat).sum::<f64>() / n,
                lon: in_range.iter().map(|r| r.location.lon).sum::<f64>() / n,
            };
            let period_ms = cfg.beacon_period_s * 1000;
            let cum_ms = (in_range.len() as u64 * period_ms)
                .min(t2.as_millis() - t1.as_millis() + period_ms);
            out.push(Encounter {
                pair,
                window_start: w.start,
                first_in_range: t1,
                last_in_range: t2,
                in_range_count: in_range.len(),
                mean_location,
                cumulative_in_range_s: cum_ms / 1000,
            });
        }
    }
    out.sort_by(|a, b| a.pair.cmp(&b.pair).then(a.window_start.cmp(&b.window_start)));
    out
}

/// Textbook DBSCAN over a full pairwise Manhattan distance matrix.
/// Returns per-point labels in input order: `None` for noise, otherwise a
/// cluster id in discovery order.
pub fn dbscan_matrix(pts: &[(f64, f64)], eps: f64, min_points: usize) -> Vec<Option<usize>> {
    let n = pts.len();
    let mut dist = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in 0..n {
            dist[i][j] = manhattan(pts[i], pts[j]);
        }
    }
    let neighborhood = |i: usize| -> Vec<usize> {
        (0..n).filter(|&j| dist[i][j] <= eps).collect()
    };
    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut visited = vec![false; n];
    let mut cluster = 0usize;
    for i in 0..n {
        if visited[i] {
            continue;
        }
        visited[i] = true;
        let seeds = neighborhood(i);
        if seeds.len() < min_points {
            continue; // noise unless later claimed as a border point
        }
        labels[i] = Some(cluster);
        let mut queue: VecDeque<usize> = seeds.into_iter().collect();
        while let Some(q) = queue.pop_front() {
            if labels[q].is_none() {
                labels[q] = Some(cluster);
            } else if labels[q] != Some(cluster) {
                continue; // already claimed by an earlier cluster
            }
            if !visited[q] {
                visited[q] = true;
                let nq = neighborhood(q);
                if nq.len() >= min_points {
                    queue.extend(nq);
                }
            }
        }
        cluster += 1;
    }
    labels
}

/// Groups labels into a comparable form: the set of clusters as sorted
/// member-index sets, plus the noise set. Insensitive to cluster ids.
pub fn partition_of(labels: &[Option<usize>]) -> (BTreeSet<Vec<usize>>, BTreeSet<usize>) {
    let mut clusters: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut noise = BTreeSet::new();
    for (i, l) in labels.iter().enumerate() {
        match l {
            Some(c) => clusters.entry(*c).or_default().push(i),
            None => {
                noise.insert(i);
            }
        }
    }
    (clusters.into_values().collect(), noise)
}

/// Brute-force exposure tracing: filter the edge list by the lookback
/// window, then BFS layer by layer up to `max_hops`.
pub fn trace_by_bfs(
    edges: &[((UserId, UserId), Timestamp)],
    report: &HealthReport,
    cfg: &EngineConfig,
    max_hops: usize,
) -> Vec<(UserId, usize)> {
    let lookback_ms = cfg.lookback_days * 86_400_000;
    let lo = report.symptom_onset.as_millis().saturating_sub(lookback_ms);
    let hi = if cfg.include_post_onset {
        report.reported_at.as_millis()
    } else {
        report.symptom_onset.as_millis()
    };
    let in_window: Vec<&((UserId, UserId), Timestamp)> = edges
        .iter()
        .filter(|(_, t)| (lo..=hi).contains(&t.as_millis()))
        .collect();
    let mut seen: BTreeSet<UserId> = BTreeSet::new();
    seen.insert(report.user);
    let mut frontier: BTreeSet<UserId> = BTreeSet::new();
    frontier.insert(report.user);
    let mut out = Vec::new();
    for hop in 1..=max_hops {
        let mut next: BTreeSet<UserId> = BTreeSet::new();
        for ((a, b), _) in &in_window {
            if frontier.contains(a) && !seen.contains(b) {
                next.insert(*b);
            }
            if frontier.contains(b) && !seen.contains(a) {
                next.insert(*a);
            }
        }
        for u in &next {
            out.push((*u, hop));
            seen.insert(*u);
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_dbscan_matches_hand_example() {
        // two triangles of mutually close points plus one outlier
        let pts = vec![
            (0.0, 0.0),
            (1.0, 0.0),
            (0.0, 1.0),
            (100.0, 0.0),
            (101.0, 0.0),
            (100.0, 1.0),
            (500.0, 500.0),
        ];
        let labels = dbscan_matrix(&pts, 3.0, 3);
        let (clusters, noise) = partition_of(&labels);
        assert_eq!(clusters.len(), 2);
        assert!(clusters.contains(&vec![0, 1, 2]));
        assert!(clusters.contains(&vec![3, 4, 5]));
        assert_eq!(noise, BTreeSet::from([6]));
    }
}
