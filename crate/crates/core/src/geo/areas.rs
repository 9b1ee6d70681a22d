use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{haversine_km, hdbscan, Airport, GeoError, HdbscanParams};

/// Area label written for airports that belong to no area.
pub const NOISE_LABEL: &str = "noise";

/// Country code to region name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionTable(BTreeMap<String, String>);

impl Default for RegionTable {
    /// The sixteen-country, seven-region layout used for the English survey.
    fn default() -> Self {
        let pairs = [
            ("ZA", "Africa, Southern"),
            ("ZW", "Africa, Southern"),
            ("KE", "Africa, Sub-Saharan"),
            ("NG", "Africa, Sub-Saharan"),
            ("CA", "North America"),
            ("US", "North America"),
            ("BD", "Asia, South"),
            ("IN", "Asia, South"),
            ("PK", "Asia, South"),
            ("ID", "Asia, Southeast"),
            ("MY", "Asia, Southeast"),
            ("PH", "Asia, Southeast"),
            ("IE", "Europe"),
            ("UK", "Europe"),
            ("GB", "Europe"),
            ("AU", "Oceania"),
            ("NZ", "Oceania"),
        ];
        RegionTable(pairs.iter().map(|(c, r)| (c.to_string(), r.to_string())).collect())
    }
}

impl RegionTable {
    pub fn new(map: BTreeMap<String, String>) -> Self {
        RegionTable(map)
    }

    pub fn region(&self, country: &str) -> Result<&str, GeoError> {
        self.0
            .get(country)
            .map(String::as_str)
            .ok_or_else(|| GeoError::UnknownCountry(country.to_string()))
    }

    pub fn with_overrides(mut self, extra: &BTreeMap<String, String>) -> Self {
        self.0.extend(extra.iter().map(|(k, v)| (k.clone(), v.clone())));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AreaInfo {
    pub country: String,
    pub region: String,
}

/// Airport-to-area mapping plus area labels.
#[derive(Debug, Clone, PartialEq)]
pub struct AreaAssignment {
    airports: BTreeMap<String, Airport>,
    airport_area: BTreeMap<String, Option<String>>,
    areas: BTreeMap<String, AreaInfo>,
}

/// Cluster airports into areas, independently per country.
///
/// Areas are named `<country>-<k>` with `k` counted from 1 in order of each
/// cluster's smallest airport code.
pub fn cluster_airports(
    airports: &[Airport],
    params: &HdbscanParams,
    regions: &RegionTable,
) -> Result<AreaAssignment, GeoError> {
    if params.min_cluster_size < 2 {
        return Err(GeoError::InvalidMinClusterSize(params.min_cluster_size));
    }
    let mut by_country: BTreeMap<&str, Vec<&Airport>> = BTreeMap::new();
    for a in airports {
        by_country.entry(a.country.as_str()).or_default().push(a);
    }
    for country in by_country.keys() {
        regions.region(country)?;
    }

    let per_country: Vec<Vec<(String, Option<String>)>> = by_country
        .par_iter()
        .map(|(country, members)| {
            let mut members = members.clone();
            members.sort_by(|a, b| a.code.cmp(&b.code));
            let n = members.len();
            let mut dist = vec![0.0f64; n * n];
            for i in 0..n {
                for j in (i + 1)..n {
                    let d = haversine_km(members[i].position(), members[j].position());
                    dist[i * n + j] = d;
                    dist[j * n + i] = d;
                }
            }
            // Members are sorted by code, so cluster k is the k-th by smallest code.
            hdbscan(&dist, n, params)
                .into_iter()
                .zip(&members)
                .map(|(label, a)| (a.code.clone(), label.map(|k| format!("{country}-{}", k + 1))))
                .collect()
        })
        .collect();

    let mut assignment = AreaAssignment {
        airports: airports.iter().map(|a| (a.code.clone(), a.clone())).collect(),
        airport_area: BTreeMap::new(),
        areas: BTreeMap::new(),
    };
    for (code, area) in per_country.into_iter().flatten() {
        if let Some(area) = &area {
            let country = assignment.airports[&code].country.clone();
            let region = regions.region(&country)?.to_string();
            assignment
                .areas
                .entry(area.clone())
                .or_insert(AreaInfo { country, region });
        }
        assignment.airport_area.insert(code, area);
    }
    Ok(assignment)
}

impl AreaAssignment {
    pub fn area_of(&self, airport: &str) -> Option<&str> {
        self.airport_area.get(airport)?.as_deref()
    }

    pub fn info(&self, area: &str) -> Option<&AreaInfo> {
        self.areas.get(area)
    }

    pub fn areas(&self) -> impl Iterator<Item = (&str, &AreaInfo)> {
        self.areas.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn area_count(&self) -> usize {
        self.areas.len()
    }

    pub fn noise(&self) -> Vec<&str> {
        self.airport_area
            .iter()
            .filter(|(_, a)| a.is_none())
            .map(|(c, _)| c.as_str())
            .collect()
    }

    pub fn members(&self, area: &str) -> Vec<&str> {
        self.airport_area
            .iter()
            .filter(|(_, a)| a.as_deref() == Some(area))
            .map(|(c, _)| c.as_str())
            .collect()
    }

    pub fn airports(&self) -> impl Iterator<Item = &Airport> {
        self.airports.values()
    }

    /// Apply manual corrections: each line maps an airport code to an area id
    /// (`code,area`, `code<TAB>area`, or `code -> area`); the area id
    /// `noise` removes the airport from every area.
    pub fn apply_overrides(&self, overrides: &str, regions: &RegionTable) -> Result<AreaAssignment, GeoError> {
        let mut out = self.clone();
        for (i, raw) in overrides.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (code, area) = ["->", "\u{2192}", "\t", ","]
                .iter()
                .find_map(|sep| line.split_once(sep))
                .map(|(c, a)| (c.trim(), a.trim()))
                .filter(|(c, a)| !c.is_empty() && !a.is_empty())
                .ok_or_else(|| GeoError::OverrideSyntax {
                    line: i + 1,
                    message: format!("expected `code,area_id`, got {line:?}"),
                })?;
            let airport = out
                .airports
                .get(code)
                .ok_or_else(|| GeoError::UnknownAirport(code.to_string()))?;
            if area == NOISE_LABEL {
                out.airport_area.insert(code.to_string(), None);
                continue;
            }
            match out.areas.get(area) {
                Some(info) if info.country != airport.country => {
                    return Err(GeoError::AreaSpansCountries {
                        area: area.to_string(),
                        first: info.country.clone(),
                        second: airport.country.clone(),
                    })
                }
                Some(_) => {}
                None => {
                    let region = regions.region(&airport.country)?.to_string();
                    out.areas.insert(
                        area.to_string(),
                        AreaInfo {
                            country: airport.country.clone(),
                            region,
                        },
                    );
                }
            }
            out.airport_area.insert(code.to_string(), Some(area.to_string()));
        }
        let used: std::collections::BTreeSet<&String> = out.airport_area.values().flatten().collect();
        let empty: Vec<String> = out.areas.keys().filter(|a| !used.contains(a)).cloned().collect();
        for a in empty {
            out.areas.remove(&a);
        }
        Ok(out)
    }

    /// Area manifest: `code,lat,lon,country,area,region`, one airport per line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("code,lat,lon,country,area,region\n");
        for (code, area) in &self.airport_area {
            let a = &self.airports[code];
            let (area, region) = match area {
                Some(area) => (area.as_str(), self.areas[area].region.as_str()),
                None => (NOISE_LABEL, ""),
            };
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                code,
                a.latitude,
                a.longitude,
                a.country,
                area,
                csv_field(region)
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<AreaAssignment, GeoError> {
        let mut out = AreaAssignment {
            airports: BTreeMap::new(),
            airport_area: BTreeMap::new(),
            areas: BTreeMap::new(),
        };
        for (i, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let err = |message: String| GeoError::Manifest { line: i + 1, message };
            let fields = split_csv(line);
            if fields.len() != 6 {
                return Err(err(format!("expected 6 fields, found {}", fields.len())));
            }
            let lat = fields[1].parse().map_err(|e| err(format!("latitude: {e}")))?;
            let lon = fields[2].parse().map_err(|e| err(format!("longitude: {e}")))?;
            let airport = Airport {
                code: fields[0].clone(),
                latitude: lat,
                longitude: lon,
                country: fields[3].clone(),
            };
            let area = (fields[4] != NOISE_LABEL).then(|| fields[4].clone());
            if let Some(area) = &area {
                let info = AreaInfo {
                    country: airport.country.clone(),
                    region: fields[5].clone(),
                };
                if let Some(prev) = out.areas.get(area) {
                    if prev.country != info.country {
                        return Err(GeoError::AreaSpansCountries {
                            area: area.clone(),
                            first: prev.country.clone(),
                            second: info.country,
                        });
                    }
                }
                out.areas.insert(area.clone(), info);
            }
            out.airport_area.insert(airport.code.clone(), area);
            out.airports.insert(airport.code.clone(), airport);
        }
        Ok(out)
    }
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn split_csv(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '"' if quoted && chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            '"' => quoted = !quoted,
            ',' if !quoted => fields.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    fields.push(cur);
    fields
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ap(code: &str, lat: f64, lon: f64, country: &str) -> Airport {
        Airport {
            code: code.into(),
            latitude: lat,
            longitude: lon,
            country: country.into(),
        }
    }

    /// Two tight groups of five (about 2-8 km apart internally, ~850 km from
    /// each other) and two remote airports.
    pub(crate) fn two_blobs() -> Vec<Airport> {
        let mut v = Vec::new();
        for i in 0..5 {
            v.push(ap(
                &format!("A{i}"),
                40.0 + 0.02 * i as f64,
                -100.0 + 0.03 * (i % 2) as f64,
                "US",
            ));
            v.push(ap(
                &format!("B{i}"),
                40.0 + 0.02 * i as f64,
                -90.0 + 0.03 * (i % 2) as f64,
                "US",
            ));
        }
        v.push(ap("X1", 30.0, -80.0, "US"));
        v.push(ap("X2", 48.0, -120.0, "US"));
        v
    }

    #[test]
    fn two_blob_fixture() {
        let a = cluster_airports(&two_blobs(), &HdbscanParams::default(), &RegionTable::default()).unwrap();
        assert_eq!(a.area_count(), 2);
        assert_eq!(a.members("US-1"), ["A0", "A1", "A2", "A3", "A4"]);
        assert_eq!(a.members("US-2"), ["B0", "B1", "B2", "B3", "B4"]);
        assert_eq!(a.noise(), ["X1", "X2"]);
        assert_eq!(a.info("US-1").unwrap().region, "North America");
    }

    #[test]
    fn clusters_never_cross_countries() {
        // Same coordinates in two countries: clustering is per country.
        let mut airports = two_blobs();
        airports.extend(two_blobs().into_iter().map(|mut a| {
            a.code = format!("C{}", a.code);
            a.country = "CA".into();
            a
        }));
        let a = cluster_airports(&airports, &HdbscanParams::default(), &RegionTable::default()).unwrap();
        assert_eq!(a.area_count(), 4);
        assert_eq!(a.members("CA-1"), ["CA0", "CA1", "CA2", "CA3", "CA4"]);
        assert_eq!(a.members("US-1"), ["A0", "A1", "A2", "A3", "A4"]);
        for (area, info) in a.areas() {
            assert!(area.starts_with(&info.country));
        }
    }

    #[test]
    fn small_country_is_all_noise() {
        let airports = vec![ap("A", 0.0, 0.0, "NZ"), ap("B", 0.0, 0.01, "NZ")];
        let a = cluster_airports(&airports, &HdbscanParams::default(), &RegionTable::default()).unwrap();
        assert_eq!(a.area_count(), 0);
        assert_eq!(a.noise().len(), 2);
    }

    #[test]
    fn unknown_country_errors() {
        let airports = vec![ap("A", 0.0, 0.0, "QQ")];
        assert!(matches!(
            cluster_airports(&airports, &HdbscanParams::default(), &RegionTable::default()),
            Err(GeoError::UnknownCountry(_))
        ));
    }

    #[test]
    fn overrides() {
        let regions = RegionTable::default();
        let a = cluster_airports(&two_blobs(), &HdbscanParams::default(), &regions).unwrap();
        assert_eq!(a.apply_overrides("", &regions).unwrap(), a);
        assert_eq!(a.apply_overrides("# nothing\n\n", &regions).unwrap(), a);

        let b = a.apply_overrides("X1,US-1\n", &regions).unwrap();
        assert_eq!(b.members("US-1").len(), 6);
        assert_eq!(b.noise(), ["X2"]);

        let c = a.apply_overrides("X2 -> US-9\nA0\tnoise\n", &regions).unwrap();
        assert_eq!(c.members("US-9"), ["X2"]);
        assert_eq!(c.area_count(), 3);
        assert_eq!(c.members("US-1").len(), 4);

        // Moving every member out removes the area.
        let d = a
            .apply_overrides("B0,US-1\nB1,US-1\nB2,US-1\nB3,US-1\nB4,US-1\n", &regions)
            .unwrap();
        assert_eq!(d.area_count(), 1);

        assert!(matches!(
            a.apply_overrides("ZZZ,US-1", &regions),
            Err(GeoError::UnknownAirport(_))
        ));
        assert!(matches!(
            a.apply_overrides("garbage", &regions),
            Err(GeoError::OverrideSyntax { .. })
        ));
    }

    #[test]
    fn override_cannot_span_countries() {
        let regions = RegionTable::default();
        let mut airports = two_blobs();
        airports.push(ap("C0", 45.0, -75.0, "CA"));
        let a = cluster_airports(&airports, &HdbscanParams::default(), &regions).unwrap();
        assert!(matches!(
            a.apply_overrides("C0,US-1", &regions),
            Err(GeoError::AreaSpansCountries { .. })
        ));
    }

    #[test]
    fn manifest_round_trip() {
        let regions = RegionTable::default();
        let a = cluster_airports(&two_blobs(), &HdbscanParams::default(), &regions).unwrap();
        let csv = a.to_csv();
        assert!(csv.contains("A0,40,-100,US,US-1,North America"));
        assert!(csv.contains("X1,30,-80,US,noise,"));
        assert_eq!(AreaAssignment::from_csv(&csv).unwrap(), a);
        let za = cluster_airports(
            &[
                ap("J1", -26.0, 28.0, "ZA"),
                ap("J2", -26.0, 28.01, "ZA"),
                ap("J3", -26.01, 28.0, "ZA"),
            ],
            &HdbscanParams::default(),
            &regions,
        )
        .unwrap();
        assert_eq!(AreaAssignment::from_csv(&za.to_csv()).unwrap(), za);
    }
}
