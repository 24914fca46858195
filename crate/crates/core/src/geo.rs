//! Geographic <-> local Cartesian transforms.
//!
//! The Cartesian frame is a local tangent plane anchored at a chosen
//! geographic point. `y` is the meridian arc from the anchor latitude and `x`
//! is the haversine arc along the parallel of the point itself, so both axes
//! are in meters and the inverse is closed form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Half-width, in degrees, of the window around the anchor where the local
/// plane is considered valid.
pub const VALIDITY_WINDOW_DEG: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    /// Builds a point, checking the latitude and wrapping the longitude into
    /// `[-180, 180)`.
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !lat.is_finite() || !lon.is_finite() {
            return Err(Error::InvalidInput(format!(
                "non-finite coordinate ({lat}, {lon})"
            )));
        }
        if !(-90.0..=90.0).contains(&lat) {
            return Err(Error::OutOfRange(format!(
                "latitude {lat} outside [-90, 90]"
            )));
        }
        Ok(GeoPoint {
            lat,
            lon: normalize_lon(lon),
        })
    }

    pub fn validate(&self) -> Result<()> {
        GeoPoint::new(self.lat, self.lon).map(|_| ())
    }
}

fn normalize_lon(lon: f64) -> f64 {
    if (-180.0..180.0).contains(&lon) {
        lon
    } else {
        (lon + 180.0).rem_euclid(360.0) - 180.0
    }
}

/// A point in the local metric plane (x east, y north).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CartPoint {
    pub x: f64,
    pub y: f64,
}

impl CartPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        CartPoint { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    #[inline]
    pub fn dist_sq(&self, other: &CartPoint) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    #[inline]
    pub fn dist(&self, other: &CartPoint) -> f64 {
        self.dist_sq(other).sqrt()
    }
}

/// Great-circle distance on a sphere of radius `radius_m`.
pub fn haversine_distance(a: GeoPoint, b: GeoPoint, radius_m: f64) -> Result<f64> {
    if ![a.lat, a.lon, b.lat, b.lon, radius_m]
        .iter()
        .all(|v| v.is_finite())
    {
        return Err(Error::InvalidInput("non-finite haversine input".into()));
    }
    if radius_m <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "radius {radius_m} must be > 0"
        )));
    }
    let phi1 = a.lat.to_radians();
    let phi2 = b.lat.to_radians();
    let dphi = phi2 - phi1;
    let dlambda = (b.lon - a.lon).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    // rounding can push h a hair outside [0, 1]
    let h = h.clamp(0.0, 1.0);
    Ok(2.0 * radius_m * h.sqrt().atan2((1.0 - h).sqrt()))
}

/// Forward/inverse transform pair between geographic and local coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    anchor: GeoPoint,
    earth_radius_m: f64,
}

impl Projection {
    pub fn new(anchor: GeoPoint) -> Result<Self> {
        Projection::with_radius(anchor, EARTH_RADIUS_M)
    }

    pub fn with_radius(anchor: GeoPoint, earth_radius_m: f64) -> Result<Self> {
        anchor.validate()?;
        if !(earth_radius_m.is_finite() && earth_radius_m > 0.0) {
            return Err(Error::InvalidInput(format!(
                "earth radius {earth_radius_m} must be finite and > 0"
            )));
        }
        if anchor.lat.abs() + VALIDITY_WINDOW_DEG >= 90.0 {
            return Err(Error::OutOfRange("anchor too close to a pole".into()));
        }
        Ok(Projection {
            anchor,
            earth_radius_m,
        })
    }

    pub fn anchor(&self) -> GeoPoint {
        self.anchor
    }

    pub fn earth_radius_m(&self) -> f64 {
        self.earth_radius_m
    }

    pub fn to_cartesian(&self, g: GeoPoint) -> Result<CartPoint> {
        let dlat = g.lat - self.anchor.lat;
        let dlon = g.lon - self.anchor.lon;
        if !(dlat.abs() <= VALIDITY_WINDOW_DEG && dlon.abs() <= VALIDITY_WINDOW_DEG) {
            return Err(Error::OutOfRange(format!(
                "({}, {}) is more than {VALIDITY_WINDOW_DEG} deg from the anchor",
                g.lat, g.lon
            )));
        }
        let r = self.earth_radius_m;
        let along_parallel = haversine_distance(
            GeoPoint {
                lat: g.lat,
                lon: self.anchor.lon,
            },
            g,
            r,
        )?;
        let along_meridian = haversine_distance(
            self.anchor,
            GeoPoint {
                lat: g.lat,
                lon: self.anchor.lon,
            },
            r,
        )?;
        Ok(CartPoint {
            x: along_parallel.copysign(dlon),
            y: along_meridian.copysign(dlat),
        })
    }

    pub fn to_geographic(&self, c: CartPoint) -> Result<GeoPoint> {
        if !c.is_finite() {
            return Err(Error::InvalidInput("non-finite Cartesian point".into()));
        }
        let r = self.earth_radius_m;
        let lat = self.anchor.lat + (c.y / r).to_degrees();
        if (lat - self.anchor.lat).abs() > VALIDITY_WINDOW_DEG {
            return Err(Error::OutOfRange(format!(
                "y = {} m leaves the valid window",
                c.y
            )));
        }
        // inverse of d = 2R asin(cos(lat) |sin(dlon/2)|)
        let s = (c.x.abs() / (2.0 * r)).sin() / lat.to_radians().cos();
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::OutOfRange(format!("x = {} m has no inverse", c.x)));
        }
        let dlon = (2.0 * s.asin()).to_degrees().copysign(c.x);
        if dlon.abs() > VALIDITY_WINDOW_DEG {
            return Err(Error::OutOfRange(format!(
                "x = {} m leaves the valid window",
                c.x
            )));
        }
        GeoPoint::new(lat, self.anchor.lon + dlon)
    }
}

/// Area centroid of a ring, treating degrees as planar. Falls back to the
/// vertex mean for zero-area rings.
pub fn geo_centroid(ring: &[GeoPoint]) -> Result<GeoPoint> {
    if ring.is_empty() {
        return Err(Error::InvalidInput("empty ring".into()));
    }
    let n = ring.len();
    let (mut a2, mut cx, mut cy) = (0.0, 0.0, 0.0);
    // work relative to the first vertex to keep the cross products small
    let o = ring[0];
    for i in 0..n {
        let p = ring[i];
        let q = ring[(i + 1) % n];
        let (x0, y0) = (p.lon - o.lon, p.lat - o.lat);
        let (x1, y1) = (q.lon - o.lon, q.lat - o.lat);
        let cross = x0 * y1 - x1 * y0;
        a2 += cross;
        cx += (x0 + x1) * cross;
        cy += (y0 + y1) * cross;
    }
    if a2.abs() < 1e-18 {
        let lat = ring.iter().map(|p| p.lat).sum::<f64>() / n as f64;
        let lon = ring.iter().map(|p| p.lon).sum::<f64>() / n as f64;
        return GeoPoint::new(lat, lon);
    }
    GeoPoint::new(o.lat + cy / (3.0 * a2), o.lon + cx / (3.0 * a2))
}
