//! Geodesic primitives on a spherical Earth.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean Earth radius used for every distance in the game.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    #[error("latitude {0} is outside [-90, 90]")]
    LatitudeOutOfRange(f64),
    #[error("longitude {0} is not a finite number")]
    LongitudeNotFinite(f64),
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
}

/// A WGS84 coordinate in degrees.
///
/// Latitude is checked at construction and longitude is wrapped into
/// `[-180, 180)`, so every value of this type is valid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoint", into = "RawPoint")]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

#[derive(Serialize, Deserialize)]
struct RawPoint {
    lat: f64,
    lon: f64,
}

impl TryFrom<RawPoint> for GeoPoint {
    type Error = GeoError;

    fn try_from(raw: RawPoint) -> Result<Self, Self::Error> {
        GeoPoint::new(raw.lat, raw.lon)
    }
}

impl From<GeoPoint> for RawPoint {
    fn from(p: GeoPoint) -> Self {
        RawPoint {
            lat: p.lat,
            lon: p.lon,
        }
    }
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeoError> {
        if !(-90.0..=90.0).contains(&lat) {
            return Err(GeoError::LatitudeOutOfRange(lat));
        }
        if !lon.is_finite() {
            return Err(GeoError::LongitudeNotFinite(lon));
        }
        Ok(GeoPoint {
            lat,
            lon: normalize_longitude(lon),
        })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }
}

fn normalize_longitude(lon: f64) -> f64 {
    if (-180.0..180.0).contains(&lon) {
        return lon;
    }
    let wrapped = (lon + 180.0).rem_euclid(360.0) - 180.0;
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if wrapped >= 180.0 {
        wrapped - 360.0
    } else {
        wrapped
    }
}

/// Great-circle distance in meters (haversine form).
pub fn haversine_distance(a: GeoPoint, b: GeoPoint) -> f64 {
    let lat1 = a.lat.to_radians();
    let lat2 = b.lat.to_radians();
    let half_dlat = ((b.lat - a.lat).to_radians() / 2.0).sin();
    let half_dlon = ((b.lon - a.lon).to_radians() / 2.0).sin();

    let h = half_dlat * half_dlat + lat1.cos() * lat2.cos() * half_dlon * half_dlon;
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Strict geofence membership: `distance < radius`.
pub fn within_radius(user: GeoPoint, center: GeoPoint, radius_m: f64) -> Result<bool, GeoError> {
    if radius_m.is_nan() || radius_m <= 0.0 {
        return Err(GeoError::NonPositiveRadius(radius_m));
    }
    Ok(haversine_distance(user, center) < radius_m)
}

/// Anything with an id and a fixed position (POIs, parking spots).
pub trait Located {
    fn id(&self) -> &str;
    fn position(&self) -> GeoPoint;
}

/// Closest site to `user`. Equal distances resolve to the smallest id.
pub fn nearest_poi<T: Located>(user: GeoPoint, sites: &[T]) -> Option<(&str, f64)> {
    sites
        .iter()
        .map(|s| (s.id(), haversine_distance(user, s.position())))
        .min_by(|(id_a, d_a), (id_b, d_b)| d_a.total_cmp(d_b).then_with(|| id_a.cmp(id_b)))
}
