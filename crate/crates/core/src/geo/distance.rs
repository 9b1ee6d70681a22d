use crate::Scalar;

/// Mean Earth radius in kilometres (IUGG).
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatLon<T> {
    pub lat: T,
    pub lon: T,
}

impl<T: Scalar> LatLon<T> {
    pub fn new(lat: T, lon: T) -> Self {
        LatLon { lat, lon }
    }

    pub fn is_valid(&self) -> bool {
        self.lat.abs() <= T::of(90.0) && self.lon.abs() <= T::of(180.0)
    }
}

/// Great-circle distance in kilometres.
pub fn haversine_km<T: Scalar>(a: LatLon<T>, b: LatLon<T>) -> T {
    let half = T::of(0.5);
    let dlat = (b.lat - a.lat).to_radians();
    let dlon = (b.lon - a.lon).to_radians();
    let s =
        (dlat * half).sin().powi(2) + a.lat.to_radians().cos() * b.lat.to_radians().cos() * (dlon * half).sin().powi(2);
    let s = s.min(T::one());
    T::of(2.0 * EARTH_RADIUS_KM) * s.sqrt().asin()
}
