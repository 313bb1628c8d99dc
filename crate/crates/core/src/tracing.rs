//! Encounter graph and exposure queries for reported positive users.
//!
//! Users are nodes; each edge holds every encounter of a pair, so
//! multiplicity is preserved. A query walks the graph breadth-first from
//! the index case over edges restricted to encounters whose window start
//! falls inside the lookback interval anchored at symptom onset
//! (optionally extended to the report time with `include_post_onset`).
//! The same absolute interval applies at every hop. First-order tracing
//! is `max_hops = 1`; deeper traversal expands through already-exposed
//! users only.
//!
//! Exposure results are sensitive: the CSV export carries a
//! `# sensitive=true` marker line so downstream consumers can apply their
//! own handling.

use std::collections::{BTreeMap, BTreeSet};

use crate::encounter::Encounter;
use crate::error::Error;
use crate::types::{EngineConfig, Timestamp, UserId};

/// Users as nodes, per-pair encounter lists as edges. Append-only.
#[derive(Clone, Debug, Default)]
pub struct EncounterGraph {
    pub nodes: BTreeSet<UserId>,
    pub edges: BTreeMap<(UserId, UserId), Vec<Encounter>>,
}

impl EncounterGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Appends a batch of encounters, keeping edge multiplicity.
    pub fn append(&mut self, encounters: &[Encounter]) {
        for e in encounters {
            self.nodes.insert(e.pair.0);
            self.nodes.insert(e.pair.1);
            self.edges.entry(e.pair).or_default().push(*e);
        }
    }
}

/// A confirmed positive report, supplied by a testing agency.
#[derive(Clone, Copy, Debug)]
pub struct HealthReport {
    pub user: UserId,
    pub symptom_onset: Timestamp,
    pub reported_at: Timestamp,
}

impl HealthReport {
    pub fn new(user: UserId, symptom_onset: Timestamp, reported_at: Timestamp) -> Result<HealthReport, Error> {
        if symptom_onset > reported_at {
            return Err(Error::InvalidQuery(format!(
                "symptom onset {} after report time {}",
                symptom_onset.as_millis(),
                reported_at.as_millis()
            )));
        }
        Ok(HealthReport { user, symptom_onset, reported_at })
    }
}

/// One exposed user in a trace result.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Exposure {
    pub user: UserId,
    /// Graph distance from the index case (1 = direct contact).
    pub hop: usize,
    /// In-window encounters connecting this user to the previous hop.
    pub via_encounters: usize,
    pub earliest: Timestamp,
    pub latest: Timestamp,
}

/// Result of an exposure query; the index case itself is excluded.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExposureResult {
    pub exposed: Vec<Exposure>,
}

/// Builds the graph for a batch of encounters.
pub fn build_graph(encounters: &[Encounter]) -> EncounterGraph {
    let mut g = EncounterGraph::default();
    g.append(encounters);
    g
}

/// Breadth-first exposure query from `report.user`, restricted to
/// encounters inside the lookback interval. Output is ordered by
/// (hop, user) and is deterministic.
pub fn trace(
    g: &EncounterGraph,
    report: &HealthReport,
    cfg: &EngineConfig,
    max_hops: usize,
) -> Result<ExposureResult, Error> {
    if max_hops == 0 {
        return Err(Error::InvalidQuery("max_hops must be at least 1".into()));
    }
    let lookback_ms = cfg.lookback_days * 86_400_000;
    let lo = report.symptom_onset.as_millis().saturating_sub(lookback_ms);
    let hi = if cfg.include_post_onset {
        report.reported_at.as_millis()
    } else {
        report.symptom_onset.as_millis()
    };
    let in_window = |e: &Encounter| (lo..=hi).contains(&e.window_start.as_millis());

    let mut seen: BTreeSet<UserId> = BTreeSet::new();
    seen.insert(report.user);
    let mut frontier: BTreeSet<UserId> = BTreeSet::new();
    frontier.insert(report.user);
    let mut exposed = Vec::new();

    for hop in 1..=max_hops {
        // hits: newly reached user -> (via count, earliest, latest)
        let mut hits: BTreeMap<UserId, (usize, u64, u64)> = BTreeMap::new();
        for ((a, b), encounters) in &g.edges {
            let next = if frontier.contains(a) && !seen.contains(b) {
                *b
            } else if frontier.contains(b) && !seen.contains(a) {
                *a
            } else {
                continue;
            };
            for e in encounters.iter().filter(|e| in_window(e)) {
                let t = e.window_start.as_millis();
                let entry = hits.entry(next).or_insert((0, u64::MAX, 0));
                entry.0 += 1;
                entry.1 = entry.1.min(t);
                entry.2 = entry.2.max(t);
            }
        }
        if hits.is_empty() {
            break;
        }
        let mut next_frontier = BTreeSet::new();
        for (user, (via, earliest, latest)) in hits {
            exposed.push(Exposure {
                user,
                hop,
                via_encounters: via,
                earliest: Timestamp(earliest),
                latest: Timestamp(latest),
            });
            seen.insert(user);
            next_frontier.insert(user);
        }
        frontier = next_frontier;
    }
    Ok(ExposureResult { exposed })
}

/// Users whose cumulative in-range contact with `positive` over one
/// calendar day meets the alert threshold. Callers pass one day's
/// encounters; output is sorted by user id.
pub fn cumulative_contact_alert(
    encounters_of_day: &[Encounter],
    positive: UserId,
    cfg: &EngineConfig,
) -> Vec<UserId> {
    let mut totals: BTreeMap<UserId, u64> = BTreeMap::new();
    for e in encounters_of_day {
        let other = if e.pair.0 == positive {
            e.pair.1
        } else if e.pair.1 == positive {
            e.pair.0
        } else {
            continue;
        };
        *totals.entry(other).or_insert(0) += e.cumulative_in_range_s;
    }
    totals
        .into_iter()
        .filter(|(_, s)| *s >= cfg.sojourn_alert_s)
        .map(|(u, _)| u)
        .collect()
}

/// CSV header for the exposure export (after the sensitivity marker).
pub const EXPOSURE_CSV_HEADER: &str = "user,hop,via_encounters,earliest_ms,latest_ms";

/// Serializes an exposure result, marked sensitive.
pub fn write_exposure_csv(result: &ExposureResult) -> String {
    let mut out = String::from("# sensitive=true\n");
    out.push_str(EXPOSURE_CSV_HEADER);
    out.push('\n');
    for e in &result.exposed {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            e.user,
            e.hop,
            e.via_encounters,
            e.earliest.as_millis(),
            e.latest.as_millis()
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::GeoPoint;

    fn uid(i: u64) -> UserId {
        UserId::from_index(i)
    }

    /// Minimal encounter between two users at a window start.
    fn enc(a: u64, b: u64, window_start_ms: u64) -> Encounter {
        let (pa, pb) = crate::types::canonical_pair(uid(a), uid(b)).unwrap();
        Encounter {
            pair: (pa, pb),
            window_start: Timestamp(window_start_ms),
            first_in_range: Timestamp(window_start_ms),
            last_in_range: Timestamp(window_start_ms + 600_000),
            in_range_count: 31,
            mean_location: GeoPoint { lat: 35.0, lon: -90.0 },
            cumulative_in_range_s: 620,
        }
    }

    const DAY_MS: u64 = 86_400_000;

    #[test]
    fn graph_construction() {
        assert_eq!(build_graph(&[]).node_count(), 0);

        let g = build_graph(&[enc(1, 2, 0), enc(2, 3, 0)]);
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);

        let g = build_graph(&[enc(1, 2, 0), enc(1, 2, 3_600_000)]);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.edges[&(uid(1), uid(2))].len(), 2);
    }

    #[test]
    fn first_order_tracing_reaches_direct_contacts() {
        // chain 1-2-3-4, all encounters on the onset day; 2 reports positive
        let onset = Timestamp(10 * DAY_MS);
        let g = build_graph(&[
            enc(1, 2, 9 * DAY_MS),
            enc(2, 3, 9 * DAY_MS),
            enc(3, 4, 9 * DAY_MS),
        ]);
        let report = HealthReport::new(uid(2), onset, onset).unwrap();
        let got = trace(&g, &report, &EngineConfig::default(), 1).unwrap();
        let users: Vec<UserId> = got.exposed.iter().map(|e| e.user).collect();
        assert_eq!(users, vec![uid(1), uid(3)]);
        assert!(got.exposed.iter().all(|e| e.hop == 1 && e.via_encounters == 1));
    }

    #[test]
    fn stale_edges_are_filtered() {
        let onset = Timestamp(25 * DAY_MS);
        let g = build_graph(&[
            enc(1, 2, 24 * DAY_MS),
            enc(2, 3, 5 * DAY_MS), // 20 days before onset, outside lookback
            enc(3, 4, 24 * DAY_MS),
        ]);
        let report = HealthReport::new(uid(2), onset, onset).unwrap();
        let got = trace(&g, &report, &EngineConfig::default(), 1).unwrap();
        let users: Vec<UserId> = got.exposed.iter().map(|e| e.user).collect();
        assert_eq!(users, vec![uid(1)]);
    }

    #[test]
    fn multi_hop_expands_through_exposed_users() {
        let onset = Timestamp(10 * DAY_MS);
        let g = build_graph(&[
            enc(1, 2, 9 * DAY_MS),
            enc(2, 3, 9 * DAY_MS),
            enc(3, 4, 9 * DAY_MS),
        ]);
        let report = HealthReport::new(uid(2), onset, onset).unwrap();
        let got = trace(&g, &report, &EngineConfig::default(), 2).unwrap();
        let hops: Vec<(UserId, usize)> = got.exposed.iter().map(|e| (e.user, e.hop)).collect();
        assert_eq!(hops, vec![(uid(1), 1), (uid(3), 1), (uid(4), 2)]);
    }

    #[test]
    fn absent_index_case_yields_empty_result() {
        let g = build_graph(&[enc(1, 2, 0)]);
        let report =
            HealthReport::new(uid(9), Timestamp(DAY_MS), Timestamp(DAY_MS)).unwrap();
        let got = trace(&g, &report, &EngineConfig::default(), 1).unwrap();
        assert!(got.exposed.is_empty());
    }

    #[test]
    fn zero_hops_is_an_invalid_query() {
        let g = build_graph(&[enc(1, 2, 0)]);
        let report = HealthReport::new(uid(1), Timestamp(0), Timestamp(0)).unwrap();
        assert!(matches!(
            trace(&g, &report, &EngineConfig::default(), 0),
            Err(Error::InvalidQuery(_))
        ));
    }

    #[test]
    fn post_onset_window_extension() {
        let onset = Timestamp(10 * DAY_MS);
        let reported = Timestamp(12 * DAY_MS);
        let g = build_graph(&[enc(1, 2, 11 * DAY_MS)]); // after onset
        let report = HealthReport::new(uid(2), onset, reported).unwrap();
        let mut cfg = EngineConfig::default();
        let got = trace(&g, &report, &cfg, 1).unwrap();
        assert!(got.exposed.is_empty());
        cfg.include_post_onset = true;
        let got = trace(&g, &report, &cfg, 1).unwrap();
        assert_eq!(got.exposed.len(), 1);
    }

    #[test]
    fn cumulative_contact_alert_sums_over_the_day() {
        let mut e1 = enc(1, 2, 0);
        e1.cumulative_in_range_s = 400;
        let mut e2 = enc(1, 2, 3_600_000);
        e2.cumulative_in_range_s = 300;
        let mut e3 = enc(1, 3, 0);
        e3.cumulative_in_range_s = 400;
        let cfg = EngineConfig::default();
        // 400 + 300 >= 600 for user 2; user 3 stays below the threshold
        let got = cumulative_contact_alert(&[e1, e2, e3], uid(1), &cfg);
        assert_eq!(got, vec![uid(2)]);
        // no encounters with the positive user at all
        let got = cumulative_contact_alert(&[e3], uid(9), &cfg);
        assert!(got.is_empty());
    }

    #[test]
    fn exposure_csv_is_marked_sensitive() {
        let onset = Timestamp(10 * DAY_MS);
        let g = build_graph(&[enc(1, 2, 9 * DAY_MS)]);
        let report = HealthReport::new(uid(2), onset, onset).unwrap();
        let got = trace(&g, &report, &EngineConfig::default(), 1).unwrap();
        let csv = write_exposure_csv(&got);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("# sensitive=true"));
        assert_eq!(lines.next(), Some(EXPOSURE_CSV_HEADER));
        assert_eq!(lines.count(), 1);
    }
}
