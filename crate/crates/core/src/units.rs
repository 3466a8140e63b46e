//! Unit conversions. Internal state is SI except aircraft speed, which is
//! carried in knots.

pub const NM_TO_M: f64 = 1852.0;
pub const KT_TO_MS: f64 = 1852.0 / 3600.0;
pub const FT_TO_M: f64 = 0.3048;
pub const G0: f64 = 9.80665;

/// Wraps an angle in degrees into [0, 360).
pub fn wrap_360(deg: f64) -> f64 {
    let w = deg.rem_euclid(360.0);
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

/// Wraps an angle in degrees into (-180, 180].
pub fn wrap_180(deg: f64) -> f64 {
    let w = wrap_360(deg);
    if w > 180.0 {
        w - 360.0
    } else {
        w
    }
}
