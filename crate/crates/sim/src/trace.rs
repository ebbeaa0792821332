use std::collections::BTreeSet;

use citytrail_core::content::PointOfInterest;
use citytrail_core::geo::{haversine_distance, EARTH_RADIUS_M};
use citytrail_core::GeoPoint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::SimError;

/// One position fix; `t` is seconds since the trace started.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedPoint {
    pub point: GeoPoint,
    pub t: f64,
}

/// Read a waypoints file: one `lat,lon` per line. Blank lines and lines
/// starting with `#` are skipped.
pub fn parse_route(text: &str) -> Result<Vec<GeoPoint>, SimError> {
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |message: String| SimError::Route {
            line: i + 1,
            message,
        };
        let (lat, lon) = line
            .split_once(',')
            .ok_or_else(|| bad(format!("expected `lat,lon`, got {line:?}")))?;
        let lat: f64 = lat
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad latitude {lat:?}")))?;
        let lon: f64 = lon
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad longitude {lon:?}")))?;
        points.push(GeoPoint::new(lat, lon).map_err(|e| bad(e.to_string()))?);
    }
    Ok(points)
}

type Vec3 = [f64; 3];

fn to_vec3(p: GeoPoint) -> Vec3 {
    let (lat, lon) = (p.lat().to_radians(), p.lon().to_radians());
    [lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin()]
}

fn from_vec3(v: Vec3) -> GeoPoint {
    let lat = v[2].clamp(-1.0, 1.0).asin().to_degrees();
    let lon = v[1].atan2(v[0]).to_degrees();
    GeoPoint::new(lat, lon).expect("unit vector maps to a valid point")
}

/// Point at arc fraction `f` along the great circle from `a` to `b`.
fn slerp(a: GeoPoint, b: GeoPoint, f: f64) -> GeoPoint {
    if f <= 0.0 {
        return a;
    }
    if f >= 1.0 {
        return b;
    }
    let (va, vb) = (to_vec3(a), to_vec3(b));
    let dot = (va[0] * vb[0] + va[1] * vb[1] + va[2] * vb[2]).clamp(-1.0, 1.0);
    let omega = dot.acos();
    if omega < 1e-15 {
        return a;
    }
    let (wa, wb) = (
        ((1.0 - f) * omega).sin() / omega.sin(),
        (f * omega).sin() / omega.sin(),
    );
    from_vec3([
        wa * va[0] + wb * vb[0],
        wa * va[1] + wb * vb[1],
        wa * va[2] + wb * vb[2],
    ])
}

/// Shift `p` by `north`/`east` metres in its local tangent plane.
fn offset(p: GeoPoint, north: f64, east: f64) -> GeoPoint {
    let lat = (p.lat() + (north / EARTH_RADIUS_M).to_degrees()).clamp(-90.0, 90.0);
    let cos_lat = p.lat().to_radians().cos().max(1e-12);
    let lon = p.lon() + (east / (EARTH_RADIUS_M * cos_lat)).to_degrees();
    GeoPoint::new(lat, lon).expect("clamped latitude")
}

/// Sample a trip along `waypoints` at `speed_mps`, one fix every
/// `sample_period_s`, with optional Gaussian noise of `noise_sigma_m` per
/// axis. The same arguments always give the same trace.
pub fn generate_trace(
    waypoints: &[GeoPoint],
    speed_mps: f64,
    sample_period_s: f64,
    noise_sigma_m: f64,
    seed: u64,
) -> Result<Vec<TimedPoint>, SimError> {
    if waypoints.len() < 2 {
        return Err(SimError::TooFewWaypoints(waypoints.len()));
    }
    if !(speed_mps > 0.0 && speed_mps.is_finite()) {
        return Err(SimError::InvalidParameter(format!(
            "speed must be positive, got {speed_mps}"
        )));
    }
    if !(sample_period_s > 0.0 && sample_period_s.is_finite()) {
        return Err(SimError::InvalidParameter(format!(
            "sample period must be positive, got {sample_period_s}"
        )));
    }
    if !(noise_sigma_m >= 0.0 && noise_sigma_m.is_finite()) {
        return Err(SimError::InvalidParameter(format!(
            "noise sigma must be non-negative, got {noise_sigma_m}"
        )));
    }

    let legs: Vec<f64> = waypoints
        .windows(2)
        .map(|w| haversine_distance(w[0], w[1]))
        .collect();
    let total: f64 = legs.iter().sum();
    let step = speed_mps * sample_period_s;
    // the epsilon keeps an exact multiple of `step` from losing its last sample
    let samples = (total / step + 1e-9).floor() as usize + 1;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal =
        (noise_sigma_m > 0.0).then(|| Normal::new(0.0, noise_sigma_m).expect("finite sigma"));

    let mut trace = Vec::with_capacity(samples);
    let mut leg = 0;
    let mut leg_start = 0.0;
    for k in 0..samples {
        let s = (k as f64 * step).min(total);
        while leg + 1 < legs.len() && s > leg_start + legs[leg] {
            leg_start += legs[leg];
            leg += 1;
        }
        let f = if legs[leg] > 0.0 {
            ((s - leg_start) / legs[leg]).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let mut point = slerp(waypoints[leg], waypoints[leg + 1], f);
        if let Some(n) = &normal {
            let (north, east) = (n.sample(&mut rng), n.sample(&mut rng));
            point = offset(point, north, east);
        }
        trace.push(TimedPoint {
            point,
            t: k as f64 * sample_period_s,
        });
    }
    Ok(trace)
}

/// Every POI that some fix lies strictly inside of, by exhaustive scan.
pub fn oracle_triggers(trace: &[TimedPoint], pois: &[PointOfInterest]) -> BTreeSet<String> {
    pois.iter()
        .filter(|poi| {
            trace
                .iter()
                .any(|tp| haversine_distance(tp.point, poi.position) < poi.trigger_radius_m)
        })
        .map(|poi| poi.id.clone())
        .collect()
}
