use serde::{Deserialize, Serialize};

use super::polygon::Point;

/// Mean Earth radius in statute miles.
pub const EARTH_RADIUS_MI: f64 = 3958.7613;

/// Coordinate reference used to turn input coordinates into the planar mile
/// grid every other module works in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Projection {
    /// Input coordinates are already planar miles.
    PlanarMiles,
    /// Spherical Lambert azimuthal equal-area centered at (lon0, lat0).
    AzimuthalEqualArea { lon0: f64, lat0: f64 },
}

impl Projection {
    pub fn project(&self, p: Point) -> Point {
        match *self {
            Projection::PlanarMiles => p,
            Projection::AzimuthalEqualArea { lon0, lat0 } => {
                let (lam, phi) = (p.x.to_radians(), p.y.to_radians());
                let (lam0, phi0) = (lon0.to_radians(), lat0.to_radians());
                let dl = lam - lam0;
                let denom = 1.0 + phi0.sin() * phi.sin() + phi0.cos() * phi.cos() * dl.cos();
                let k = (2.0 / denom).sqrt();
                Point::new(
                    EARTH_RADIUS_MI * k * phi.cos() * dl.sin(),
                    EARTH_RADIUS_MI
                        * k
                        * (phi0.cos() * phi.sin() - phi0.sin() * phi.cos() * dl.cos()),
                )
            }
        }
    }

    pub fn unproject(&self, p: Point) -> Point {
        match *self {
            Projection::PlanarMiles => p,
            Projection::AzimuthalEqualArea { lon0, lat0 } => {
                let (lam0, phi0) = (lon0.to_radians(), lat0.to_radians());
                let (x, y) = (p.x / EARTH_RADIUS_MI, p.y / EARTH_RADIUS_MI);
                let rho = (x * x + y * y).sqrt();
                if rho == 0.0 {
                    return Point::new(lon0, lat0);
                }
                let c = 2.0 * (rho / 2.0).asin();
                let phi = (c.cos() * phi0.sin() + y * c.sin() * phi0.cos() / rho).asin();
                let lam = lam0
                    + (x * c.sin()).atan2(rho * phi0.cos() * c.cos() - y * phi0.sin() * c.sin());
                Point::new(lam.to_degrees(), phi.to_degrees())
            }
        }
    }

    /// Name written into the GeoJSON `crs` member for planar files.
    pub const PLANAR_CRS_NAME: &'static str = "urn:beatdesign:planar-miles";
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_near_center() {
        let proj = Projection::AzimuthalEqualArea {
            lon0: -84.6,
            lat0: 33.6,
        };
        let p = Point::new(-84.55, 33.65);
        let q = proj.unproject(proj.project(p));
        assert!((p.x - q.x).abs() < 1e-10 && (p.y - q.y).abs() < 1e-10);
    }

    #[test]
    fn one_degree_latitude_is_about_69_miles() {
        let proj = Projection::AzimuthalEqualArea { lon0: 0.0, lat0: 0.0 };
        let p = proj.project(Point::new(0.0, 1.0));
        assert!((p.y - 69.09).abs() < 0.05, "{}", p.y);
    }
}
