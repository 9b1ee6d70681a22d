use cxgvar_core::geo::{haversine_km, hdbscan, Airport, AirportIndex, HdbscanParams, LatLon, DEFAULT_RADIUS_KM};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn point() -> impl Strategy<Value = LatLon<f64>> {
    (-89.0f64..89.0, -179.0f64..179.0).prop_map(|(lat, lon)| LatLon::new(lat, lon))
}

/// Canonical form of a labelling: each point's label replaced by the
/// smallest index sharing it.
fn canonical(labels: &[Option<usize>]) -> Vec<Option<usize>> {
    labels
        .iter()
        .map(|l| l.map(|k| labels.iter().position(|x| *x == Some(k)).unwrap()))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn haversine_is_a_metric(a in point(), b in point(), c in point()) {
        let ab = haversine_km(a, b);
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - haversine_km(b, a)).abs() < 1e-9);
        prop_assert!(haversine_km(a, a) < 1e-9);
        prop_assert!(haversine_km(a, c) <= ab + haversine_km(b, c) + 1e-6);
        prop_assert!(ab <= 20_015.1);
    }

    #[test]
    fn haversine_matches_law_of_cosines(a in point(), b in point()) {
        let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
        let dl = (b.lon - a.lon).to_radians();
        let cos = (p1.sin() * p2.sin() + p1.cos() * p2.cos() * dl.cos()).clamp(-1.0, 1.0);
        let oracle = 6371.0088 * cos.acos();
        let h = haversine_km(a, b);
        // The cosine form loses precision for nearby points.
        if oracle > 1.0 {
            prop_assert!((h - oracle).abs() / oracle < 1e-3);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn hdbscan_ignores_input_order(seed in any::<u64>(), blobs in 1usize..4, per_blob in 3usize..12, noise in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts: Vec<(f64, f64)> = Vec::new();
        for b in 0..blobs {
            let (cx, cy) = (b as f64 * 10.0, rng.gen_range(-2.0..2.0));
            for _ in 0..per_blob {
                pts.push((cx + rng.gen_range(-0.5..0.5), cy + rng.gen_range(-0.5..0.5)));
            }
        }
        for _ in 0..noise {
            pts.push((rng.gen_range(-50.0..80.0), rng.gen_range(20.0..60.0)));
        }
        let n = pts.len();
        let dist = |p: &[(f64, f64)]| {
            let mut d = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    d[i * n + j] = ((p[i].0 - p[j].0).powi(2) + (p[i].1 - p[j].1).powi(2)).sqrt();
                }
            }
            d
        };
        let params = HdbscanParams::default();
        let labels = hdbscan(&dist(&pts), n, &params);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let shuffled: Vec<(f64, f64)> = order.iter().map(|&i| pts[i]).collect();
        let relabelled = hdbscan(&dist(&shuffled), n, &params);
        let mut back = vec![None; n];
        for (k, &i) in order.iter().enumerate() {
            back[i] = relabelled[k];
        }
        prop_assert_eq!(canonical(&labels), canonical(&back));
    }
}

#[test]
fn airport_assignment_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let airports: Vec<Airport> = (0..400)
        .map(|i| Airport {
            code: format!("P{i:03}"),
            latitude: rng.gen_range(30.0..60.0),
            longitude: rng.gen_range(-20.0..20.0),
            country: "UK".into(),
        })
        .collect();
    let index = AirportIndex::new(&airports, DEFAULT_RADIUS_KM);
    for _ in 0..2000 {
        let p = LatLon::new(rng.gen_range(29.0..61.0), rng.gen_range(-21.0..21.0));
        let brute = airports
            .iter()
            .map(|a| (haversine_km(p, a.position()), &a.code))
            .filter(|(d, _)| *d <= DEFAULT_RADIUS_KM)
            .min_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(y.1)))
            .map(|(_, c)| c.clone());
        assert_eq!(index.assign(p).map(|a| a.code.clone()), brute);
    }
}
