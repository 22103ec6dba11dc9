//! Circular two-body propagation and station geometry on a spherical Earth.

use chrono::{DateTime, TimeZone, Utc};

use super::{OrbitError, TleElements};
use crate::scenario::GroundStationSpec;

/// Earth gravitational parameter, m^3/s^2.
pub const MU_EARTH: f64 = 3.986_004_418e14;
/// Mean Earth radius used for all station geometry, m.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;
/// Elements older or younger than this are refused.
pub const MAX_ELEMENT_AGE_DAYS: i64 = 31;

pub type Vec3 = [f64; 3];

pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// Satellite state in the Earth-fixed frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoState {
    pub position_m: Vec3,
}

impl GeoState {
    pub fn radius_m(&self) -> f64 {
        norm(self.position_m)
    }

    pub fn latitude_deg(&self) -> f64 {
        (self.position_m[2] / self.radius_m()).asin().to_degrees()
    }

    pub fn longitude_deg(&self) -> f64 {
        self.position_m[1].atan2(self.position_m[0]).to_degrees()
    }

    pub fn altitude_m(&self) -> f64 {
        self.radius_m() - EARTH_RADIUS_M
    }

    /// Radius between 6,400 km and 9,000 km.
    pub fn is_leo(&self) -> bool {
        (6_400e3..=9_000e3).contains(&self.radius_m())
    }

    /// Point at the given spherical coordinates.
    pub fn from_geodetic(latitude_deg: f64, longitude_deg: f64, altitude_m: f64) -> Self {
        GeoState {
            position_m: spherical_to_ecef(latitude_deg, longitude_deg, EARTH_RADIUS_M + altitude_m),
        }
    }
}

pub(crate) fn spherical_to_ecef(latitude_deg: f64, longitude_deg: f64, radius_m: f64) -> Vec3 {
    let (lat, lon) = (latitude_deg.to_radians(), longitude_deg.to_radians());
    [
        radius_m * lat.cos() * lon.cos(),
        radius_m * lat.cos() * lon.sin(),
        radius_m * lat.sin(),
    ]
}

/// Circular-orbit radius from mean motion (Kepler's third law).
pub fn semi_major_axis_m(elements: &TleElements) -> f64 {
    let n = elements.mean_motion_rev_per_day * std::f64::consts::TAU / 86_400.0;
    (MU_EARTH / (n * n)).cbrt()
}

/// Greenwich mean sidereal angle in radians.
pub fn gmst_rad(at: DateTime<Utc>) -> f64 {
    let j2000 = Utc.with_ymd_and_hms(2000, 1, 1, 12, 0, 0).unwrap();
    let days = (at - j2000).num_microseconds().expect("date within range") as f64 / 86_400e6;
    let deg = 280.460_618_37 + 360.985_647_366_29 * days;
    deg.rem_euclid(360.0).to_radians()
}

fn check_age(elements: &TleElements, at: DateTime<Utc>) -> Result<f64, OrbitError> {
    let dt = at - elements.epoch;
    if dt.num_seconds().abs() > MAX_ELEMENT_AGE_DAYS * 86_400 {
        return Err(OrbitError::StaleElements {
            epoch: elements.epoch,
            at,
        });
    }
    Ok(dt.num_microseconds().expect("bounded by age check") as f64 * 1e-6)
}

/// Inertial position with the anomaly advanced `dt` seconds past epoch.
pub(crate) fn inertial_at_offset(elements: &TleElements, dt_seconds: f64) -> Vec3 {
    let a = semi_major_axis_m(elements);
    let n = elements.mean_motion_rev_per_day * std::f64::consts::TAU / 86_400.0;
    let u = (elements.arg_perigee_deg + elements.mean_anomaly_deg).to_radians() + n * dt_seconds;
    let (raan, inc) = (elements.raan_deg.to_radians(), elements.inclination_deg.to_radians());
    let (su, cu) = u.sin_cos();
    let (so, co) = raan.sin_cos();
    let (si, ci) = inc.sin_cos();
    [
        a * (co * cu - so * su * ci),
        a * (so * cu + co * su * ci),
        a * (su * si),
    ]
}

/// Position in the inertial frame (equator and equinox of date).
pub fn propagate_inertial(elements: &TleElements, at: DateTime<Utc>) -> Result<Vec3, OrbitError> {
    let dt = check_age(elements, at)?;
    Ok(inertial_at_offset(elements, dt))
}

/// Rotates an inertial vector into the Earth-fixed frame.
pub fn inertial_to_earth_fixed(r: Vec3, gmst: f64) -> Vec3 {
    let (s, c) = gmst.sin_cos();
    [c * r[0] + s * r[1], -s * r[0] + c * r[1], r[2]]
}

/// Earth-fixed satellite state at `at`.
pub fn propagate(elements: &TleElements, at: DateTime<Utc>) -> Result<GeoState, OrbitError> {
    let r = propagate_inertial(elements, at)?;
    Ok(GeoState {
        position_m: inertial_to_earth_fixed(r, gmst_rad(at)),
    })
}

pub fn station_position_m(station: &GroundStationSpec) -> Vec3 {
    spherical_to_ecef(
        station.latitude_deg,
        station.longitude_deg,
        EARTH_RADIUS_M + station.altitude_m,
    )
}

/// Elevation of the satellite above the station's local horizontal plane.
pub fn elevation_deg(sat: &GeoState, station: &GroundStationSpec) -> f64 {
    elevation_from(sat.position_m, station_position_m(station))
}

pub(crate) fn elevation_from(sat: Vec3, station: Vec3) -> f64 {
    let los = sub(sat, station);
    let range = norm(los);
    if range == 0.0 {
        return 90.0;
    }
    let up = norm(station);
    let vertical = dot(los, station) / up;
    let horizontal = norm(cross(los, station)) / up;
    vertical.atan2(horizontal).to_degrees()
}

pub fn slant_range_m(sat: &GeoState, station: &GroundStationSpec) -> f64 {
    norm(sub(sat.position_m, station_position_m(station)))
}

/// Slant range implied by an elevation angle for a satellite at radius
/// `sat_radius_m` seen from a station at radius `station_radius_m`.
pub fn slant_range_from_elevation(elevation_deg: f64, sat_radius_m: f64, station_radius_m: f64) -> f64 {
    let el = elevation_deg.to_radians();
    let rs = station_radius_m;
    (sat_radius_m.powi(2) - (rs * el.cos()).powi(2)).max(0.0).sqrt() - rs * el.sin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Duration;

    fn elements(inc: f64, raan: f64, m: f64, n: f64) -> TleElements {
        TleElements {
            inclination_deg: inc,
            raan_deg: raan,
            eccentricity: 0.0,
            arg_perigee_deg: 0.0,
            mean_anomaly_deg: m,
            mean_motion_rev_per_day: n,
            epoch: Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap(),
        }
    }

    fn station(lat: f64, lon: f64) -> GroundStationSpec {
        GroundStationSpec {
            id: "gs".into(),
            latitude_deg: lat,
            longitude_deg: lon,
            altitude_m: 0.0,
            antenna_count: 1,
            min_elevation_deg: 5.0,
        }
    }

    #[test]
    fn radius_matches_kepler_third_law() {
        let e = elements(53.0, 10.0, 30.0, 15.0);
        let period = 86_400.0 / 15.0;
        let oracle = (MU_EARTH * (period / std::f64::consts::TAU).powi(2)).cbrt();
        let r = propagate_inertial(&e, e.epoch).unwrap();
        assert!((norm(r) - oracle).abs() < 1e-6);
        // at epoch the argument of latitude equals the mean anomaly
        let expected = inertial_at_offset(&e, 0.0);
        assert_eq!(r, expected);
        assert!((r[2] / norm(r) - (30f64.to_radians().sin() * 53f64.to_radians().sin())).abs() < 1e-12);
    }

    #[test]
    fn one_period_returns_to_same_inertial_point() {
        let e = elements(97.5, 120.0, 200.0, 15.2);
        let p0 = propagate_inertial(&e, e.epoch).unwrap();
        let later = e.epoch + Duration::microseconds((e.period_seconds() * 1e6).round() as i64);
        let p1 = propagate_inertial(&e, later).unwrap();
        assert!(norm(sub(p0, p1)) < 1.0);
    }

    #[test]
    fn equatorial_orbit_stays_on_equator() {
        let e = elements(0.0, 0.0, 0.0, 15.0);
        let r = inertial_at_offset(&e, 0.0);
        let fixed = GeoState {
            position_m: inertial_to_earth_fixed(r, 0.0),
        };
        assert!(fixed.latitude_deg().abs() < 1e-12);
        assert!(fixed.longitude_deg().abs() < 1e-12);
        assert!(fixed.is_leo());
    }

    #[test]
    fn stale_elements_refused() {
        let e = elements(97.5, 0.0, 0.0, 15.0);
        assert!(matches!(
            propagate(&e, e.epoch + Duration::days(32)),
            Err(OrbitError::StaleElements { .. })
        ));
        assert!(propagate(&e, e.epoch - Duration::days(30)).is_ok());
    }

    #[test]
    fn zenith_and_antipode() {
        let st = station(40.0, -105.0);
        let above = GeoState::from_geodetic(40.0, -105.0, 550e3);
        assert!((elevation_deg(&above, &st) - 90.0).abs() < 1e-9);
        let antipode = GeoState::from_geodetic(-40.0, 75.0, 550e3);
        assert!(elevation_deg(&antipode, &st) < -45.0);
    }

    #[test]
    fn elevation_matches_spherical_triangle() {
        // 1000 km of ground range at 550 km altitude
        let h = 550e3;
        let gamma = 1000e3 / EARTH_RADIUS_M;
        let rho = EARTH_RADIUS_M / (EARTH_RADIUS_M + h);
        let oracle = ((gamma.cos() - rho) / gamma.sin()).atan().to_degrees();
        let st = station(0.0, 0.0);
        let sat = GeoState::from_geodetic(0.0, gamma.to_degrees(), h);
        assert!((elevation_deg(&sat, &st) - oracle).abs() < 0.1);
        assert!((elevation_deg(&sat, &st) - oracle).abs() < 1e-9);
        let range = slant_range_m(&sat, &st);
        let implied = slant_range_from_elevation(oracle, EARTH_RADIUS_M + h, EARTH_RADIUS_M);
        assert!((range - implied).abs() < 1e-3);
    }

    #[test]
    fn elevation_invariant_under_common_rotation() {
        let e = elements(70.0, 33.0, 12.0, 15.1);
        let st = station(35.0, 20.0);
        let sat = propagate(&e, e.epoch).unwrap();
        let base = elevation_deg(&sat, &st);
        let angle = 0.7;
        let rotated_sat = GeoState {
            position_m: inertial_to_earth_fixed(sat.position_m, angle),
        };
        let rotated_station = GroundStationSpec {
            longitude_deg: st.longitude_deg - angle.to_degrees(),
            ..st.clone()
        };
        assert!((elevation_deg(&rotated_sat, &rotated_station) - base).abs() < 1e-9);
    }
}
