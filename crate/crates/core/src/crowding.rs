//! Crowding hotspots: DBSCAN over encounter locations plus density scoring.
//!
//! Encounter mean locations are projected into a local plane (origin = the
//! centroid of the batch) and clustered with DBSCAN under the Manhattan
//! metric. Labeling is fully deterministic: points are processed in
//! ascending (lat, lon, pair, window) order, cluster ids are assigned in
//! discovery order, and a border point reachable from several clusters
//! goes to the cluster whose seed comes first in processing order.
//!
//! [`dbscan_parallel`] splits the plane into grid cells (side
//! `grid_cell_m`, which must exceed twice `eps_m`), computes every point's
//! neighborhood against the cell plus an eps-wide halo of surrounding
//! points, and merges cell-local results with a union-find over core-core
//! proximity. Because a point's full neighborhood is always visible inside
//! its cell's halo, core flags, the core-point partition, and the border
//! tie-break all reproduce the serial labeling exactly, for any worker
//! count. A looser centroid-radius merge heuristic
//! (`merge_centroid_radius`) is available for comparison; it trades the
//! exact-equivalence guarantee for merge decisions based only on cluster
//! centroids and radii.
//!
//! Each cluster is scored as unique encounters (distinct pairs) per
//! 10 m² of bounding-box area; clusters at or above the configured
//! density threshold are flagged as hotspots.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
use std::sync::Mutex;

use serde::Serialize;

use crate::encounter::Encounter;
use crate::error::Error;
use crate::geo::{manhattan, project_local};
use crate::types::{EngineConfig, GeoPoint};

/// Cluster assignment of a single point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Label {
    Noise,
    Cluster(usize),
}

/// Per-encounter labeling, with the canonicalized inputs it refers to.
#[derive(Clone, Debug)]
pub struct LabelMap {
    /// Input encounters in canonical processing order.
    pub points: Vec<Encounter>,
    /// Projected coordinates of each point, meters about `origin`.
    pub projected: Vec<(f64, f64)>,
    /// Projection origin: centroid of the batch.
    pub origin: GeoPoint,
    /// Label of each point, aligned with `points`.
    pub labels: Vec<Label>,
    pub n_clusters: usize,
}

/// A scored cluster of encounter locations.
#[derive(Clone, Debug)]
pub struct Hotspot {
    pub cluster_id: usize,
    /// Cluster members in canonical processing order.
    pub members: Vec<Encounter>,
    pub centroid: GeoPoint,
    /// Max Manhattan distance (projected meters) from the centroid to a member.
    pub radius_m: f64,
    /// Distinct pairs among the members.
    pub unique_encounters: usize,
    /// Bounding-box area in 10 m² units, floored at one unit.
    pub area_10m2: u64,
    /// unique_encounters / area_10m2.
    pub density: f64,
    pub is_hot: bool,
}

/// Serial DBSCAN over encounter mean locations. Returns the label map and
/// the scored clusters sorted by density descending.
pub fn dbscan(points: &[Encounter], cfg: &EngineConfig) -> Result<(LabelMap, Vec<Hotspot>), Error> {
    cfg.validate()?;
    let (points, projected, origin) = canonicalize(points)?;
    let (labels, n_clusters) = dbscan_labels(&projected, cfg.eps_m, cfg.min_points);
    let map = LabelMap { points, projected, origin, labels, n_clusters };
    let hotspots = score_hotspots(&map, cfg);
    Ok((map, hotspots))
}

/// Grid-partitioned DBSCAN. Identical output to [`dbscan`] for every
/// worker count (unless the centroid-radius merge heuristic is enabled).
pub fn dbscan_parallel(
    points: &[Encounter],
    cfg: &EngineConfig,
    workers: usize,
) -> Result<(LabelMap, Vec<Hotspot>), Error> {
    cfg.validate()?;
    if workers == 0 {
        return Err(Error::InvalidConfig("worker count must be at least 1".into()));
    }
    if cfg.grid_cell_m <= 2.0 * cfg.eps_m {
        return Err(Error::InvalidConfig(format!(
            "grid_cell_m ({}) must exceed twice eps_m ({})",
            cfg.grid_cell_m, cfg.eps_m
        )));
    }
    let (points, projected, origin) = canonicalize(points)?;
    let (labels, n_clusters) = if cfg.merge_centroid_radius {
        parallel_labels_centroid_merge(&projected, cfg, workers)
    } else {
        parallel_labels_exact(&projected, cfg, workers)
    };
    let map = LabelMap { points, projected, origin, labels, n_clusters };
    let hotspots = score_hotspots(&map, cfg);
    Ok((map, hotspots))
}

/// Sorts encounters into canonical processing order and projects them
/// about the batch centroid.
fn canonicalize(points: &[Encounter]) -> Result<(Vec<Encounter>, Vec<(f64, f64)>, GeoPoint), Error> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut points = points.to_vec();
    points.sort_by(|a, b| {
        a.mean_location
            .cmp_lat_lon(&b.mean_location)
            .then(a.pair.cmp(&b.pair))
            .then(a.window_start.cmp(&b.window_start))
    });
    let n = points.len() as f64;
    let origin = GeoPoint {
        lat: points.iter().map(|p| p.mean_location.lat).sum::<f64>() / n,
        lon: points.iter().map(|p| p.mean_location.lon).sum::<f64>() / n,
    };
    let projected = points.iter().map(|p| project_local(p.mean_location, origin)).collect();
    Ok((points, projected, origin))
}

const UNDEF: i64 = -2;
const NOISE: i64 = -1;

/// Textbook DBSCAN with queue-based expansion over points given in
/// processing order. Returns per-point labels and the cluster count.
fn dbscan_labels(pts: &[(f64, f64)], eps: f64, min_points: usize) -> (Vec<Label>, usize) {
    let n = pts.len();
    let mut lab = vec![UNDEF; n];
    let mut next_cluster: i64 = 0;
    let mut queue: VecDeque<usize> = VecDeque::new();
    for i in 0..n {
        if lab[i] != UNDEF {
            continue;
        }
        let neighbors = range_query(pts, i, eps);
        if neighbors.len() < min_points {
            lab[i] = NOISE;
            continue;
        }
        let cluster = next_cluster;
        next_cluster += 1;
        lab[i] = cluster;
        queue.extend(neighbors.iter().copied().filter(|&q| q != i));
        while let Some(q) = queue.pop_front() {
            if lab[q] == NOISE {
                lab[q] = cluster; // border point, claimed by first cluster
                continue;
            }
            if lab[q] != UNDEF {
                continue;
            }
            lab[q] = cluster;
            let nq = range_query(pts, q, eps);
            if nq.len() >= min_points {
                queue.extend(nq.into_iter().filter(|&r| lab[r] == UNDEF || lab[r] == NOISE));
            }
        }
    }
    let labels = lab
        .into_iter()
        .map(|l| if l == NOISE { Label::Noise } else { Label::Cluster(l as usize) })
        .collect();
    (labels, next_cluster as usize)
}

/// All indices within `eps` (Manhattan) of point `i`, itself included.
fn range_query(pts: &[(f64, f64)], i: usize, eps: f64) -> Vec<usize> {
    let p = pts[i];
    pts.iter()
        .enumerate()
        .filter(|(_, q)| manhattan(p, **q) <= eps)
        .map(|(j, _)| j)
        .collect()
}

type CellKey = (i64, i64);

fn cell_of(p: (f64, f64), cell_m: f64) -> CellKey {
    ((p.0 / cell_m).floor() as i64, (p.1 / cell_m).floor() as i64)
}

fn grid_cells(pts: &[(f64, f64)], cell_m: f64) -> BTreeMap<CellKey, Vec<usize>> {
    let mut cells: BTreeMap<CellKey, Vec<usize>> = BTreeMap::new();
    for (i, p) in pts.iter().enumerate() {
        cells.entry(cell_of(*p, cell_m)).or_default().push(i);
    }
    cells
}

/// Member indices of the 3x3 cell neighborhood around `key`; with
/// `grid_cell_m > 2*eps_m` this covers the eps-halo of the cell.
fn halo_candidates(cells: &BTreeMap<CellKey, Vec<usize>>, key: CellKey) -> Vec<usize> {
    let mut out = Vec::new();
    for dx in -1..=1 {
        for dy in -1..=1 {
            if let Some(members) = cells.get(&(key.0 + dx, key.1 + dy)) {
                out.extend_from_slice(members);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Runs `job` over the cell list on `workers` threads, collecting each
/// cell's result into a vector aligned with the cell order.
fn run_cells<T: Send>(
    n_cells: usize,
    workers: usize,
    job: impl Fn(usize) -> T + Sync,
) -> Vec<T> {
    let next = AtomicUsize::new(0);
    let collected: Mutex<Vec<(usize, T)>> = Mutex::new(Vec::with_capacity(n_cells));
    std::thread::scope(|scope| {
        for _ in 0..workers.min(n_cells.max(1)) {
            scope.spawn(|| {
                let mut local = Vec::new();
                loop {
                    let idx = next.fetch_add(1, AtomicOrdering::Relaxed);
                    if idx >= n_cells {
                        break;
                    }
                    local.push((idx, job(idx)));
                }
                collected.lock().expect("cell worker poisoned").extend(local);
            });
        }
    });
    let mut collected = collected.into_inner().expect("cell results poisoned");
    collected.sort_by_key(|(idx, _)| *idx);
    collected.into_iter().map(|(_, t)| t).collect()
}

/// Exact partitioned labeling: per-cell neighborhoods over members plus
/// halo, then a union-find over core-core proximity and the serial border
/// tie-break.
fn parallel_labels_exact(
    pts: &[(f64, f64)],
    cfg: &EngineConfig,
    workers: usize,
) -> (Vec<Label>, usize) {
    let n = pts.len();
    let cells = grid_cells(pts, cfg.grid_cell_m);
    let cell_list: Vec<(CellKey, Vec<usize>)> =
        cells.iter().map(|(k, v)| (*k, v.clone())).collect();

    // Phase 1: every member's full eps-neighborhood, computed cell-locally.
    let per_cell = run_cells(cell_list.len(), workers, |idx| {
        let (key, members) = &cell_list[idx];
        let candidates = halo_candidates(&cells, *key);
        members
            .iter()
            .map(|&i| {
                let p = pts[i];
                let neigh: Vec<usize> = candidates
                    .iter()
                    .copied()
                    .filter(|&j| manhattan(p, pts[j]) <= cfg.eps_m)
                    .collect();
                (i, neigh)
            })
            .collect::<Vec<_>>()
    });
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
    for cell in per_cell {
        for (i, neigh) in cell {
            neighbors[i] = neigh;
        }
    }
    let core: Vec<bool> = neighbors.iter().map(|nb| nb.len() >= cfg.min_points).collect();

    // Phase 2: merge core points across cells.
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        if !core[i] {
            continue;
        }
        for &j in &neighbors[i] {
            if core[j] {
                uf.union(i, j);
            }
        }
    }

    // Canonical cluster ids: ascending minimum core index per component,
    // which is exactly the serial discovery order.
    let mut component_min: BTreeMap<usize, usize> = BTreeMap::new();
    for i in 0..n {
        if core[i] {
            let root = uf.find(i);
            component_min.entry(root).and_modify(|m| *m = (*m).min(i)).or_insert(i);
        }
    }
    let mut seeds: Vec<(usize, usize)> = component_min.iter().map(|(r, m)| (*m, *r)).collect();
    seeds.sort_unstable();
    let cluster_of_root: BTreeMap<usize, usize> =
        seeds.iter().enumerate().map(|(id, (_, root))| (*root, id)).collect();

    let mut labels = vec![Label::Noise; n];
    for i in 0..n {
        if core[i] {
            labels[i] = Label::Cluster(cluster_of_root[&uf.find(i)]);
        } else {
            // Border points go to the earliest-discovered cluster that can
            // reach them, matching the serial first-claim rule.
            let best = neighbors[i]
                .iter()
                .filter(|&&j| core[j])
                .map(|&j| cluster_of_root[&uf.find(j)])
                .min();
            if let Some(c) = best {
                labels[i] = Label::Cluster(c);
            }
        }
    }
    (labels, seeds.len())
}

/// Heuristic merge path: clusters each cell's members independently, then
/// unions cell-local clusters whose centroid distance is within the sum of
/// their radii plus eps.
fn parallel_labels_centroid_merge(
    pts: &[(f64, f64)],
    cfg: &EngineConfig,
    workers: usize,
) -> (Vec<Label>, usize) {
    let cells = grid_cells(pts, cfg.grid_cell_m);
    let cell_list: Vec<Vec<usize>> = cells.values().cloned().collect();

    struct LocalCluster {
        members: Vec<usize>,
        centroid: (f64, f64),
        radius: f64,
    }

    let per_cell = run_cells(cell_list.len(), workers, |idx| {
        let members = &cell_list[idx];
        let local_pts: Vec<(f64, f64)> = members.iter().map(|&i| pts[i]).collect();
        let (labels, n_clusters) = dbscan_labels(&local_pts, cfg.eps_m, cfg.min_points);
        let mut clusters: Vec<LocalCluster> = Vec::with_capacity(n_clusters);
        for c in 0..n_clusters {
            let idxs: Vec<usize> = labels
                .iter()
                .enumerate()
                .filter(|(_, l)| **l == Label::Cluster(c))
                .map(|(k, _)| members[k])
                .collect();
            let m = idxs.len() as f64;
            let centroid = (
                idxs.iter().map(|&i| pts[i].0).sum::<f64>() / m,
                idxs.iter().map(|&i| pts[i].1).sum::<f64>() / m,
            );
            let radius = idxs
                .iter()
                .map(|&i| manhattan(pts[i], centroid))
                .fold(0.0f64, f64::max);
            clusters.push(LocalCluster { members: idxs, centroid, radius });
        }
        clusters
    });

    let locals: Vec<LocalCluster> = per_cell.into_iter().flatten().collect();
    let mut uf = UnionFind::new(locals.len());
    for i in 0..locals.len() {
        for j in i + 1..locals.len() {
            let d = manhattan(locals[i].centroid, locals[j].centroid);
            if d <= locals[i].radius + locals[j].radius + cfg.eps_m {
                uf.union(i, j);
            }
        }
    }
    let mut component_min: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, lc) in locals.iter().enumerate() {
        let root = uf.find(i);
        let min_member = *lc.members.iter().min().expect("cluster has members");
        component_min
            .entry(root)
            .and_modify(|m| *m = (*m).min(min_member))
            .or_insert(min_member);
    }
    let mut seeds: Vec<(usize, usize)> = component_min.iter().map(|(r, m)| (*m, *r)).collect();
    seeds.sort_unstable();
    let cluster_of_root: BTreeMap<usize, usize> =
        seeds.iter().enumerate().map(|(id, (_, root))| (*root, id)).collect();

    let mut labels = vec![Label::Noise; pts.len()];
    for (i, lc) in locals.iter().enumerate() {
        let id = cluster_of_root[&uf.find(i)];
        for &m in &lc.members {
            labels[m] = Label::Cluster(id);
        }
    }
    (labels, seeds.len())
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> UnionFind {
        UnionFind { parent: (0..n).collect(), rank: vec![0; n] }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

/// Scores every cluster in the label map. Output sorted by density
/// descending, then cluster id.
pub fn score_hotspots(map: &LabelMap, cfg: &EngineConfig) -> Vec<Hotspot> {
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); map.n_clusters];
    for (i, l) in map.labels.iter().enumerate() {
        if let Label::Cluster(c) = l {
            groups[*c].push(i);
        }
    }
    let mut hotspots = Vec::with_capacity(map.n_clusters);
    for (cluster_id, member_idx) in groups.into_iter().enumerate() {
        let members: Vec<Encounter> = member_idx.iter().map(|&i| map.points[i]).collect();
        let m = members.len() as f64;
        let centroid = GeoPoint {
            lat: members.iter().map(|e| e.mean_location.lat).sum::<f64>() / m,
            lon: members.iter().map(|e| e.mean_location.lon).sum::<f64>() / m,
        };
        let centroid_proj = project_local(centroid, map.origin);
        let radius_m = member_idx
            .iter()
            .map(|&i| manhattan(map.projected[i], centroid_proj))
            .fold(0.0f64, f64::max);
        let unique_encounters =
            members.iter().map(|e| e.pair).collect::<BTreeSet<_>>().len();
        let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
        for &i in &member_idx {
            let (x, y) = map.projected[i];
            min_x = min_x.min(x);
            max_x = max_x.max(x);
            min_y = min_y.min(y);
            max_y = max_y.max(y);
        }
        let area = ((max_x - min_x) * (max_y - min_y)).max(10.0);
        // The 1e-9 slack absorbs projection round-trip noise on exact
        // multiples of the 10 m² unit.
        let area_10m2 = ((area / 10.0) - 1e-9).ceil().max(1.0) as u64;
        let density = unique_encounters as f64 / area_10m2 as f64;
        hotspots.push(Hotspot {
            cluster_id,
            members,
            centroid,
            radius_m,
            unique_encounters,
            area_10m2,
            density,
            is_hot: density >= cfg.crowding_density_threshold,
        });
    }
    hotspots.sort_by(|a, b| b.density.total_cmp(&a.density).then(a.cluster_id.cmp(&b.cluster_id)));
    hotspots
}

#[derive(Serialize)]
struct GeoJsonGeometry {
    #[serde(rename = "type")]
    kind: &'static str,
    /// GeoJSON position order: [lon, lat].
    coordinates: [f64; 2],
}

#[derive(Serialize)]
struct GeoJsonProperties {
    cluster_id: usize,
    unique_encounters: usize,
    density: f64,
    radius_m: f64,
    is_hot: bool,
}

#[derive(Serialize)]
struct GeoJsonFeature {
    #[serde(rename = "type")]
    kind: &'static str,
    geometry: GeoJsonGeometry,
    properties: GeoJsonProperties,
}

#[derive(Serialize)]
struct GeoJsonFeatureCollection {
    #[serde(rename = "type")]
    kind: &'static str,
    features: Vec<GeoJsonFeature>,
}

/// Renders hotspots as a GeoJSON FeatureCollection of centroid points,
/// one feature per cluster, for direct display on a web map.
pub fn hotspots_geojson(hotspots: &[Hotspot]) -> String {
    let collection = GeoJsonFeatureCollection {
        kind: "FeatureCollection",
        features: hotspots
            .iter()
            .map(|h| GeoJsonFeature {
                kind: "Feature",
                geometry: GeoJsonGeometry {
                    kind: "Point",
                    coordinates: [h.centroid.lon, h.centroid.lat],
                },
                properties: GeoJsonProperties {
                    cluster_id: h.cluster_id,
                    unique_encounters: h.unique_encounters,
                    density: h.density,
                    radius_m: h.radius_m,
                    is_hot: h.is_hot,
                },
            })
            .collect(),
    };
    serde_json::to_string_pretty(&collection).expect("geojson serialization")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::unproject_local;
    use crate::types::{Timestamp, UserId};

    const ORIGIN: GeoPoint = GeoPoint { lat: 0.0, lon: 0.0 };

    /// Encounter pinned at a local (x, y) meter offset from ORIGIN.
    fn enc_at(pair_idx: u64, x: f64, y: f64) -> Encounter {
        Encounter {
            pair: (UserId::from_index(2 * pair_idx), UserId::from_index(2 * pair_idx + 1)),
            window_start: Timestamp(0),
            first_in_range: Timestamp(0),
            last_in_range: Timestamp(600_000),
            in_range_count: 31,
            mean_location: unproject_local(x, y, ORIGIN),
            cumulative_in_range_s: 620,
        }
    }

    fn cfg() -> EngineConfig {
        EngineConfig::default()
    }

    #[test]
    fn single_point_is_noise() {
        let (map, hotspots) = dbscan(&[enc_at(0, 0.0, 0.0)], &cfg()).unwrap();
        assert_eq!(map.labels, vec![Label::Noise]);
        assert!(hotspots.is_empty());
    }

    #[test]
    fn empty_input_errors() {
        assert_eq!(dbscan(&[], &cfg()).unwrap_err(), Error::EmptyInput);
        assert_eq!(dbscan_parallel(&[], &cfg(), 2).unwrap_err(), Error::EmptyInput);
    }

    #[test]
    fn two_separated_blobs_form_two_clusters() {
        let mut points = Vec::new();
        for i in 0..10u64 {
            points.push(enc_at(i, (i % 5) as f64 * 2.0, (i / 5) as f64 * 2.0));
        }
        for i in 0..10u64 {
            points.push(enc_at(100 + i, 500.0 + (i % 5) as f64 * 2.0, (i / 5) as f64 * 2.0));
        }
        let (map, hotspots) = dbscan(&points, &cfg()).unwrap();
        assert_eq!(map.n_clusters, 2);
        assert!(map.labels.iter().all(|l| *l != Label::Noise));
        assert_eq!(hotspots.len(), 2);
        assert!(hotspots.iter().all(|h| h.members.len() == 10));
    }

    #[test]
    fn far_point_is_noise() {
        let mut points: Vec<Encounter> = (0..10u64).map(|i| enc_at(i, i as f64, 0.0)).collect();
        points.push(enc_at(50, 200.0, 200.0));
        let (map, hotspots) = dbscan(&points, &cfg()).unwrap();
        assert_eq!(map.n_clusters, 1);
        assert_eq!(map.labels.iter().filter(|l| **l == Label::Noise).count(), 1);
        assert_eq!(hotspots[0].members.len(), 10);
    }

    #[test]
    fn epsilon_connectivity_holds_on_output() {
        let points: Vec<Encounter> =
            (0..40u64).map(|i| enc_at(i, (i as f64) * 11.0, 0.0)).collect();
        let (map, _) = dbscan(&points, &cfg()).unwrap();
        for (i, l) in map.labels.iter().enumerate() {
            if let Label::Cluster(c) = l {
                let close = map.labels.iter().enumerate().any(|(j, m)| {
                    i != j
                        && *m == Label::Cluster(*c)
                        && manhattan(map.projected[i], map.projected[j]) <= cfg().eps_m
                });
                assert!(close, "point {i} has no same-cluster neighbor within eps");
            }
        }
    }

    #[test]
    fn hotspot_scores_floor_small_areas() {
        // 7 distinct pairs inside a 3 m x 3 m patch
        let points: Vec<Encounter> = (0..7u64)
            .map(|i| enc_at(i, (i % 3) as f64 * 1.5, (i / 3) as f64 * 1.5))
            .collect();
        let (_, hotspots) = dbscan(&points, &cfg()).unwrap();
        assert_eq!(hotspots.len(), 1);
        let h = &hotspots[0];
        assert_eq!(h.unique_encounters, 7);
        assert_eq!(h.area_10m2, 1);
        assert_eq!(h.density, 7.0);
        assert!(h.is_hot);
    }

    #[test]
    fn hotspot_scores_medium_area() {
        // 10 distinct pairs spanning exactly 20 m x 25 m
        let mut points = Vec::new();
        for i in 0..10u64 {
            let x = (i % 5) as f64 * 5.0; // 0..20
            let y = (i / 5) as f64 * 25.0; // 0 or 25
            points.push(enc_at(i, x, y));
        }
        let (_, hotspots) = dbscan(&points, &cfg()).unwrap();
        assert_eq!(hotspots.len(), 1);
        let h = &hotspots[0];
        assert_eq!(h.unique_encounters, 10);
        assert_eq!(h.area_10m2, 50);
        assert_eq!(h.density, 0.2);
        assert!(!h.is_hot);
    }

    #[test]
    fn same_pair_counts_once_in_unique_encounters() {
        let mut points: Vec<Encounter> =
            (0..6u64).map(|i| enc_at(i, i as f64, 0.0)).collect();
        let mut dup = enc_at(0, 3.0, 3.0);
        dup.window_start = Timestamp(3_600_000);
        points.push(dup);
        let (_, hotspots) = dbscan(&points, &cfg()).unwrap();
        assert_eq!(hotspots.len(), 1);
        assert_eq!(hotspots[0].members.len(), 7);
        assert_eq!(hotspots[0].unique_encounters, 6);
    }

    #[test]
    fn parallel_small_input_equals_serial() {
        let points: Vec<Encounter> =
            (0..30u64).map(|i| enc_at(i, (i % 6) as f64 * 9.0, (i / 6) as f64 * 9.0)).collect();
        let (serial, hs) = dbscan(&points, &cfg()).unwrap();
        let (par, hp) = dbscan_parallel(&points, &cfg(), 1).unwrap();
        assert_eq!(serial.labels, par.labels);
        assert_eq!(hs.len(), hp.len());
    }

    #[test]
    fn parallel_merges_boundary_straddling_cluster() {
        // A chain of points every 10 m crossing a grid-cell boundary. Both
        // serial and parallel must see one cluster.
        let points: Vec<Encounter> =
            (0..60u64).map(|i| enc_at(i, 200.0 + (i as f64) * 10.0, 40.0)).collect();
        let c = cfg();
        let (serial, _) = dbscan(&points, &c).unwrap();
        assert_eq!(serial.n_clusters, 1);
        for workers in [1, 2, 4] {
            let (par, _) = dbscan_parallel(&points, &c, workers).unwrap();
            assert_eq!(par.labels, serial.labels);
            assert_eq!(par.n_clusters, 1);
        }
    }

    #[test]
    fn centroid_merge_heuristic_joins_straddling_cluster() {
        let points: Vec<Encounter> =
            (0..60u64).map(|i| enc_at(i, 200.0 + (i as f64) * 10.0, 40.0)).collect();
        let mut c = cfg();
        c.merge_centroid_radius = true;
        let (par, _) = dbscan_parallel(&points, &c, 4).unwrap();
        assert_eq!(par.n_clusters, 1);
        assert!(par.labels.iter().all(|l| *l == Label::Cluster(0)));
    }

    #[test]
    fn geojson_lists_one_feature_per_cluster() {
        let mut points = Vec::new();
        for i in 0..10u64 {
            points.push(enc_at(i, (i % 5) as f64 * 2.0, (i / 5) as f64 * 2.0));
        }
        for i in 0..10u64 {
            points.push(enc_at(100 + i, 700.0 + (i % 5) as f64 * 2.0, (i / 5) as f64 * 2.0));
        }
        let (_, hotspots) = dbscan(&points, &cfg()).unwrap();
        let text = hotspots_geojson(&hotspots);
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed["type"], "FeatureCollection");
        assert_eq!(parsed["features"].as_array().unwrap().len(), 2);
        assert_eq!(parsed["features"][0]["geometry"]["type"], "Point");
        assert!(parsed["features"][0]["properties"]["is_hot"].is_boolean());
    }
}
