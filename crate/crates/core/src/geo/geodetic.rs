//! WGS84 geodetic conversions.

use crate::error::{Error, Result};

/// WGS84 semi-major axis in meters.
pub const WGS84_SEMI_MAJOR_M: f64 = 6_378_137.0;
/// WGS84 flattening.
pub const WGS84_FLATTENING: f64 = 1.0 / 298.257_223_563;

fn check_lat_lon(lat_deg: f64, lon_deg: f64) -> Result<()> {
    if !(lat_deg.abs() <= 90.0) || !(lon_deg.abs() <= 180.0) {
        return Err(Error::LatLonOutOfRange {
            lat: lat_deg,
            lon: lon_deg,
        });
    }
    Ok(())
}

/// Geodetic latitude/longitude (degrees) and ellipsoidal height (meters) to
/// earth-centered earth-fixed coordinates.
pub fn geodetic_to_ecef(lat_deg: f64, lon_deg: f64, height_m: f64) -> Result<[f64; 3]> {
    check_lat_lon(lat_deg, lon_deg)?;
    let lat = lat_deg.to_radians();
    let lon = lon_deg.to_radians();
    let e2 = WGS84_FLATTENING * (2.0 - WGS84_FLATTENING);
    let sin_lat = lat.sin();
    let n = WGS84_SEMI_MAJOR_M / (1.0 - e2 * sin_lat * sin_lat).sqrt();
    Ok([
        (n + height_m) * lat.cos() * lon.cos(),
        (n + height_m) * lat.cos() * lon.sin(),
        (n * (1.0 - e2) + height_m) * sin_lat,
    ])
}

/// East/north/up basis at a geodetic origin, as rows.
fn enu_basis(lat_deg: f64, lon_deg: f64) -> [[f64; 3]; 3] {
    let lat = lat_deg.to_radians();
    let lon = lon_deg.to_radians();
    let (sin_lat, cos_lat) = lat.sin_cos();
    let (sin_lon, cos_lon) = lon.sin_cos();
    [
        [-sin_lon, cos_lon, 0.0],
        [-sin_lat * cos_lon, -sin_lat * sin_lon, cos_lat],
        [cos_lat * cos_lon, cos_lat * sin_lon, sin_lat],
    ]
}

/// ECEF point to local east/north/up coordinates around a geodetic origin.
pub fn ecef_to_enu(
    ecef: [f64; 3],
    origin_lat_deg: f64,
    origin_lon_deg: f64,
    origin_height_m: f64,
) -> Result<[f64; 3]> {
    let origin = geodetic_to_ecef(origin_lat_deg, origin_lon_deg, origin_height_m)?;
    let basis = enu_basis(origin_lat_deg, origin_lon_deg);
    let d = [ecef[0] - origin[0], ecef[1] - origin[1], ecef[2] - origin[2]];
    Ok([
        basis[0][0] * d[0] + basis[0][1] * d[1] + basis[0][2] * d[2],
        basis[1][0] * d[0] + basis[1][1] * d[1] + basis[1][2] * d[2],
        basis[2][0] * d[0] + basis[2][1] * d[1] + basis[2][2] * d[2],
    ])
}

/// Local east/north/up coordinates back to ECEF.
pub fn enu_to_ecef(
    enu: [f64; 3],
    origin_lat_deg: f64,
    origin_lon_deg: f64,
    origin_height_m: f64,
) -> Result<[f64; 3]> {
    let origin = geodetic_to_ecef(origin_lat_deg, origin_lon_deg, origin_height_m)?;
    let b = enu_basis(origin_lat_deg, origin_lon_deg);
    // The basis is orthonormal, so the inverse is the transpose. Summing
    // the small displacement before touching the large origin keeps the
    // roundtrip through ecef_to_enu at sub-nanometer error.
    let d = [
        b[0][0] * enu[0] + b[1][0] * enu[1] + b[2][0] * enu[2],
        b[0][1] * enu[0] + b[1][1] * enu[1] + b[2][1] * enu[2],
        b[0][2] * enu[0] + b[1][2] * enu[1] + b[2][2] * enu[2],
    ];
    Ok([origin[0] + d[0], origin[1] + d[1], origin[2] + d[2]])
}

/// Geodetic point to local east/north/up around a geodetic origin.
pub fn geodetic_to_enu(
    lat_deg: f64,
    lon_deg: f64,
    height_m: f64,
    origin_lat_deg: f64,
    origin_lon_deg: f64,
    origin_height_m: f64,
) -> Result<[f64; 3]> {
    ecef_to_enu(
        geodetic_to_ecef(lat_deg, lon_deg, height_m)?,
        origin_lat_deg,
        origin_lon_deg,
        origin_height_m,
    )
}
