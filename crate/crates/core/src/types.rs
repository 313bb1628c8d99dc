//! Shared domain model: identifiers, timestamps, geo coordinates, and the
//! record types every other module consumes.
//!
//! All types here are immutable value types and safe to share across
//! parallel workers without synchronization.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// Opaque pseudonymous user identifier: 32 lowercase hex characters,
/// stored as the 16 decoded bytes. Byte order equals hex-string order, so
/// the derived `Ord` is the canonical total order used for pair
/// normalization and tie-breaking.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UserId([u8; 16]);

impl UserId {
    /// Builds an id from a small integer; handy for tests and simulation.
    pub fn from_index(i: u64) -> UserId {
        let mut bytes = [0u8; 16];
        bytes[8..].copy_from_slice(&i.to_be_bytes());
        UserId(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; 16] {
        &self.0
    }

    /// The 32-character lowercase hex form used in all wire formats.
    pub fn to_hex(&self) -> String {
        let mut s = String::with_capacity(32);
        for b in self.0 {
            s.push(char::from_digit((b >> 4) as u32, 16).unwrap());
            s.push(char::from_digit((b & 0xf) as u32, 16).unwrap());
        }
        s
    }
}

impl FromStr for UserId {
    type Err = Error;

    fn from_str(s: &str) -> Result<UserId, Error> {
        if s.len() != 32 {
            return Err(Error::InvalidQuery(format!(
                "user id must be 32 hex chars, got {} in {s:?}",
                s.len()
            )));
        }
        let mut bytes = [0u8; 16];
        for (i, chunk) in s.as_bytes().chunks_exact(2).enumerate() {
            let hi = hex_val(chunk[0])?;
            let lo = hex_val(chunk[1])?;
            bytes[i] = (hi << 4) | lo;
        }
        Ok(UserId(bytes))
    }
}

fn hex_val(c: u8) -> Result<u8, Error> {
    match c {
        b'0'..=b'9' => Ok(c - b'0'),
        b'a'..=b'f' => Ok(c - b'a' + 10),
        _ => Err(Error::InvalidQuery(format!(
            "user id must be lowercase hex, found byte {c:#x}"
        ))),
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "UserId({})", self.to_hex())
    }
}

impl Serialize for UserId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for UserId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<UserId, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Milliseconds since the Unix epoch, UTC.
#[derive(
    Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize,
)]
pub struct Timestamp(pub u64);

impl Timestamp {
    pub fn from_secs(s: u64) -> Timestamp {
        Timestamp(s * 1000)
    }

    pub fn as_millis(&self) -> u64 {
        self.0
    }

    /// Calendar day (UTC) this instant falls in, as days since the epoch.
    pub fn epoch_day(&self) -> u64 {
        self.0 / 86_400_000
    }
}

/// Formats an epoch day index as `YYYY-MM-DD` (UTC).
pub fn format_epoch_day(day: u64) -> String {
    let ts = chrono::DateTime::from_timestamp((day * 86_400) as i64, 0)
        .expect("epoch day in chrono range");
    ts.format("%Y-%m-%d").to_string()
}

/// A WGS84 coordinate in degrees. Both components are finite and inside
/// their nominal ranges once validated.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<GeoPoint, Error> {
        let p = GeoPoint { lat, lon };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !self.lat.is_finite() || !(-90.0..=90.0).contains(&self.lat) {
            return Err(Error::InvalidQuery(format!("latitude out of range: {}", self.lat)));
        }
        if !self.lon.is_finite() || !(-180.0..=180.0).contains(&self.lon) {
            return Err(Error::InvalidQuery(format!("longitude out of range: {}", self.lon)));
        }
        Ok(())
    }

    /// Total order on (lat, lon); valid points are finite so this agrees
    /// with the usual comparison. Used for canonical processing order.
    pub fn cmp_lat_lon(&self, other: &GeoPoint) -> Ordering {
        self.lat
            .total_cmp(&other.lat)
            .then(self.lon.total_cmp(&other.lon))
    }
}

/// One beacon exchange between a pair of devices: the reported distance
/// plus the GPS fix sampled with it. Pair order is canonical
/// (`user_a < user_b`) after ingest normalization.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub struct BeaconRecord {
    pub user_a: UserId,
    pub user_b: UserId,
    pub t: Timestamp,
    pub distance_m: f64,
    pub location: GeoPoint,
}

impl BeaconRecord {
    pub fn new(
        a: UserId,
        b: UserId,
        t: Timestamp,
        distance_m: f64,
        location: GeoPoint,
    ) -> Result<BeaconRecord, Error> {
        if !distance_m.is_finite() || distance_m < 0.0 {
            return Err(Error::InvalidQuery(format!("distance out of range: {distance_m}")));
        }
        location.validate()?;
        let (user_a, user_b) = canonical_pair(a, b)?;
        Ok(BeaconRecord { user_a, user_b, t, distance_m, location })
    }

    pub fn pair(&self) -> (UserId, UserId) {
        (self.user_a, self.user_b)
    }
}

/// Returns the pair in canonical (ascending) order. Symmetric and
/// idempotent; rejects self-pairs.
pub fn canonical_pair(a: UserId, b: UserId) -> Result<(UserId, UserId), Error> {
    match a.cmp(&b) {
        Ordering::Less => Ok((a, b)),
        Ordering::Greater => Ok((b, a)),
        Ordering::Equal => Err(Error::SelfBeacon(a.to_hex())),
    }
}

/// Tunable parameters for every pipeline stage.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EngineConfig {
    /// Proximity threshold in meters: a beacon counts as in-range when its
    /// reported distance is at or below this.
    pub proximity_threshold_m: f64,
    /// Minimum span, in seconds, between the first and last in-range
    /// beacon of a pair for the contact to qualify as an encounter.
    pub min_duration_s: u64,
    /// Minimum number of in-range beacon exchanges for an encounter.
    pub min_exchanges: usize,
    /// DBSCAN neighborhood radius in meters (Manhattan, projected).
    pub eps_m: f64,
    /// DBSCAN minimum neighborhood size (the point itself included) for a
    /// core point.
    pub min_points: usize,
    /// Hotspot designation threshold: unique encounters per 10 m².
    pub crowding_density_threshold: f64,
    /// Contact-tracing lookback from symptom onset, in days.
    pub lookback_days: u64,
    /// Encounter computation window in seconds.
    pub window_s: u64,
    /// Nominal beacon exchange cadence in seconds.
    pub beacon_period_s: u64,
    /// Minimum sojourn (or cumulative contact) in seconds before an alert.
    pub sojourn_alert_s: u64,
    /// Grid cell side for the partitioned parallel clustering, in meters.
    pub grid_cell_m: f64,
    /// Merge partition-local clusters by the centroid-distance heuristic
    /// (`d ≤ r1 + r2 + eps`) instead of core-point proximity. The heuristic
    /// does not reproduce serial labels exactly.
    pub merge_centroid_radius: bool,
    /// Extend the tracing window past symptom onset up to the report time.
    pub include_post_onset: bool,
}

impl Default for EngineConfig {
    fn default() -> EngineConfig {
        EngineConfig {
            proximity_threshold_m: 12.0,
            min_duration_s: 600,
            min_exchanges: 10,
            eps_m: 50.0,
            min_points: 5,
            crowding_density_threshold: 1.0,
            lookback_days: 14,
            window_s: 3600,
            beacon_period_s: 20,
            sojourn_alert_s: 600,
            grid_cell_m: 500.0,
            merge_centroid_radius: false,
            include_post_onset: false,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), Error> {
        let positive_f = [
            ("proximity_threshold_m", self.proximity_threshold_m),
            ("eps_m", self.eps_m),
            ("crowding_density_threshold", self.crowding_density_threshold),
            ("grid_cell_m", self.grid_cell_m),
        ];
        for (name, v) in positive_f {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidConfig(format!("{name} must be strictly positive, got {v}")));
            }
        }
        let positive_u = [
            ("min_duration_s", self.min_duration_s),
            ("min_exchanges", self.min_exchanges as u64),
            ("min_points", self.min_points as u64),
            ("lookback_days", self.lookback_days),
            ("window_s", self.window_s),
            ("beacon_period_s", self.beacon_period_s),
            ("sojourn_alert_s", self.sojourn_alert_s),
        ];
        for (name, v) in positive_u {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be strictly positive")));
            }
        }
        if self.min_duration_s > self.window_s {
            return Err(Error::InvalidConfig(format!(
                "min_duration_s ({}) must not exceed window_s ({})",
                self.min_duration_s, self.window_s
            )));
        }
        if self.eps_m >= self.grid_cell_m {
            return Err(Error::InvalidConfig(format!(
                "eps_m ({}) must be smaller than grid_cell_m ({})",
                self.eps_m, self.grid_cell_m
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(c: char) -> UserId {
        let s: String = std::iter::repeat(c).take(32).collect();
        s.parse().unwrap()
    }

    #[test]
    fn canonical_pair_orders_and_is_symmetric() {
        let a = id('a');
        let b = id('b');
        assert_eq!(canonical_pair(a, b).unwrap(), (a, b));
        assert_eq!(canonical_pair(b, a).unwrap(), (a, b));
    }

    #[test]
    fn canonical_pair_rejects_self() {
        let c = id('c');
        assert_eq!(canonical_pair(c, c), Err(Error::SelfBeacon(c.to_hex())));
    }

    #[test]
    fn user_id_round_trips_and_orders_like_hex() {
        let s = "00112233445566778899aabbccddeeff";
        let u: UserId = s.parse().unwrap();
        assert_eq!(u.to_hex(), s);

        let lo: UserId = "0fffffffffffffffffffffffffffffff".parse().unwrap();
        let hi: UserId = "10000000000000000000000000000000".parse().unwrap();
        assert!(lo < hi);
        assert_eq!(lo.to_hex().cmp(&hi.to_hex()), std::cmp::Ordering::Less);
    }

    #[test]
    fn user_id_rejects_bad_input() {
        assert!("".parse::<UserId>().is_err());
        assert!("abc".parse::<UserId>().is_err());
        // uppercase and non-hex are rejected
        assert!("A0112233445566778899aabbccddeeff".parse::<UserId>().is_err());
        assert!("g0112233445566778899aabbccddeeff".parse::<UserId>().is_err());
    }

    #[test]
    fn geo_point_ranges() {
        assert!(GeoPoint::new(91.0, 0.0).is_err());
        assert!(GeoPoint::new(-91.0, 0.0).is_err());
        assert!(GeoPoint::new(0.0, 181.0).is_err());
        assert!(GeoPoint::new(f64::NAN, 0.0).is_err());
        assert!(GeoPoint::new(90.0, -180.0).is_ok());
    }

    #[test]
    fn config_default_is_valid() {
        EngineConfig::default().validate().unwrap();
    }

    #[test]
    fn config_rejects_bad_values() {
        let mut cfg = EngineConfig::default();
        cfg.min_duration_s = 7200;
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));

        let mut cfg = EngineConfig::default();
        cfg.eps_m = 600.0;
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));

        let mut cfg = EngineConfig::default();
        cfg.proximity_threshold_m = 0.0;
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));

        let mut cfg = EngineConfig::default();
        cfg.min_exchanges = 0;
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn epoch_day_formatting() {
        assert_eq!(format_epoch_day(0), "1970-01-01");
        assert_eq!(format_epoch_day(18444), "2020-07-01");
        assert_eq!(Timestamp::from_secs(86_400 * 2 + 100).epoch_day(), 2);
    }
}
