//! Local planar projection and distance helpers.
//!
//! Clustering distances are computed as Manhattan distance in a local
//! equirectangular projection, which keeps the configured radii meaningful
//! in meters for points within a metropolitan-scale region of the origin.

use crate::types::GeoPoint;

/// Meters per degree of longitude at the equator.
pub const M_PER_DEG_LON: f64 = 111_320.0;
/// Meters per degree of latitude.
pub const M_PER_DEG_LAT: f64 = 110_540.0;

/// Projects `p` into meters east/north of `origin` (equirectangular).
pub fn project_local(p: GeoPoint, origin: GeoPoint) -> (f64, f64) {
    let x = (p.lon - origin.lon) * origin.lat.to_radians().cos() * M_PER_DEG_LON;
    let y = (p.lat - origin.lat) * M_PER_DEG_LAT;
    (x, y)
}

/// Inverse of [`project_local`] within its region of validity.
pub fn unproject_local(x: f64, y: f64, origin: GeoPoint) -> GeoPoint {
    GeoPoint {
        lat: origin.lat + y / M_PER_DEG_LAT,
        lon: origin.lon + x / (origin.lat.to_radians().cos() * M_PER_DEG_LON),
    }
}

/// Manhattan distance between two projected points, in meters.
pub fn manhattan(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).abs() + (a.1 - b.1).abs()
}

/// Great-circle distance in meters (haversine, spherical earth).
pub fn haversine_m(a: GeoPoint, b: GeoPoint) -> f64 {
    const EARTH_RADIUS_M: f64 = 6_371_009.0;
    let (lat1, lon1) = (a.lat.to_radians(), a.lon.to_radians());
    let (lat2, lon2) = (b.lat.to_radians(), b.lon.to_radians());
    let dlat = (lat2 - lat1) / 2.0;
    let dlon = (lon2 - lon1) / 2.0;
    let h = dlat.sin().powi(2) + lat1.cos() * lat2.cos() * dlon.sin().powi(2);
    2.0 * h.sqrt().asin() * EARTH_RADIUS_M
}
