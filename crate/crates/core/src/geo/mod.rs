//! Urban proxies and local dialect areas.
//!
//! Documents are attached to the nearest airport within a radius; airports
//! are then grouped per country into contiguous areas with density-based
//! hierarchical clustering, optionally corrected by a manual override file.

mod airports;
mod areas;
mod distance;
mod hdbscan;

pub use airports::{parse_airports, Airport, AirportIndex, DEFAULT_RADIUS_KM};
pub use areas::{cluster_airports, AreaAssignment, AreaInfo, RegionTable, NOISE_LABEL};
pub use distance::{haversine_km, LatLon, EARTH_RADIUS_KM};
pub use hdbscan::{hdbscan, ClusterExtraction, HdbscanParams};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeoError {
    #[error("airport inventory line {line}: {message}")]
    Inventory { line: usize, message: String },
    #[error("duplicate airport code {0}")]
    DuplicateAirport(String),
    #[error("override line {line}: {message}")]
    OverrideSyntax { line: usize, message: String },
    #[error("override references unknown airport {0}")]
    UnknownAirport(String),
    #[error("area {area} would span countries {first} and {second}")]
    AreaSpansCountries {
        area: String,
        first: String,
        second: String,
    },
    #[error("no region configured for country {0}")]
    UnknownCountry(String),
    #[error("min_cluster_size must be at least 2, got {0}")]
    InvalidMinClusterSize(usize),
    #[error("area manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
}
