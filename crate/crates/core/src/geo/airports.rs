use std::collections::HashSet;

use super::{haversine_km, GeoError, LatLon, EARTH_RADIUS_KM};

pub const DEFAULT_RADIUS_KM: f64 = 25.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Airport {
    pub code: String,
    pub latitude: f64,
    pub longitude: f64,
    pub country: String,
}

impl Airport {
    pub fn position(&self) -> LatLon<f64> {
        LatLon::new(self.latitude, self.longitude)
    }
}

fn split_fields(line: &str) -> Vec<&str> {
    let sep = if line.contains('\t') { '\t' } else { ',' };
    line.split(sep).map(str::trim).collect()
}

/// Parse a delimited airport inventory (`code, lat, lon, country`). A first
/// line whose latitude column is not numeric is treated as a header.
pub fn parse_airports(text: &str) -> Result<Vec<Airport>, GeoError> {
    let mut airports = Vec::new();
    let mut seen = HashSet::new();
    let mut first_record = true;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields = split_fields(line);
        let err = |message: String| GeoError::Inventory { line: i + 1, message };
        if fields.len() < 4 {
            return Err(err(format!("expected 4 fields, found {}", fields.len())));
        }
        let is_first = std::mem::replace(&mut first_record, false);
        let lat = match fields[1].parse::<f64>() {
            Ok(v) => v,
            Err(_) if is_first => continue,
            Err(e) => return Err(err(format!("latitude: {e}"))),
        };
        let lon = fields[2].parse::<f64>().map_err(|e| err(format!("longitude: {e}")))?;
        let airport = Airport {
            code: fields[0].to_string(),
            latitude: lat,
            longitude: lon,
            country: fields[3].to_string(),
        };
        if airport.code.is_empty() || airport.country.is_empty() {
            return Err(err("empty code or country".into()));
        }
        if !airport.position().is_valid() {
            return Err(err(format!("coordinates out of range: {lat}, {lon}")));
        }
        if !seen.insert(airport.code.clone()) {
            return Err(GeoError::DuplicateAirport(airport.code));
        }
        airports.push(airport);
    }
    Ok(airports)
}

/// Nearest-airport lookup restricted to a search radius.
///
/// Airports are kept sorted by latitude; a point can only be within `r`
/// kilometres of airports whose latitude differs by at most `r / R` radians,
/// so only that band is scanned.
#[derive(Debug, Clone)]
pub struct AirportIndex {
    by_lat: Vec<(f64, usize)>,
    airports: Vec<Airport>,
    radius_km: f64,
    band_deg: f64,
}

impl AirportIndex {
    pub fn new(airports: &[Airport], radius_km: f64) -> Self {
        let mut airports = airports.to_vec();
        airports.sort_by(|a, b| a.code.cmp(&b.code));
        let mut by_lat: Vec<(f64, usize)> = airports.iter().enumerate().map(|(i, a)| (a.latitude, i)).collect();
        by_lat.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        // Small slack so float rounding never drops a boundary candidate.
        let band_deg = (radius_km / EARTH_RADIUS_KM).to_degrees() * (1.0 + 1e-9) + 1e-9;
        AirportIndex {
            by_lat,
            airports,
            radius_km,
            band_deg,
        }
    }

    pub fn radius_km(&self) -> f64 {
        self.radius_km
    }

    /// Nearest airport within the radius; equal distances resolve to the
    /// lexicographically smallest code.
    pub fn assign(&self, point: LatLon<f64>) -> Option<&Airport> {
        let lo = self.by_lat.partition_point(|&(lat, _)| lat < point.lat - self.band_deg);
        let mut best: Option<(f64, usize)> = None;
        for &(lat, idx) in &self.by_lat[lo..] {
            if lat > point.lat + self.band_deg {
                break;
            }
            let d = haversine_km(point, self.airports[idx].position());
            if d > self.radius_km {
                continue;
            }
            best = match best {
                Some((bd, bi)) if bd < d || (bd == d && bi < idx) => Some((bd, bi)),
                _ => Some((d, idx)),
            };
        }
        best.map(|(_, i)| &self.airports[i])
    }
}
