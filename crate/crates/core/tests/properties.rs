use corridor_tilt_core::channel::{
    azimuth_angle, elevation_angle, horizontal_gain, rss, vertical_gain,
};
use corridor_tilt_core::{
    bs_vat, centroid_tilts, compute_partition, discretize, finite_diff_check, gradient,
    gradient_ascent_inner, performance, random_partition, AntennaPattern, BaseStation,
    ChannelModel, Location, MixtureDensity, OptimizerConfig, Partition, PathlossParams, RectRegion,
    RegionTag, Scenario, Tilt, TiltVector,
};
use proptest::prelude::*;

fn pattern() -> AntennaPattern {
    AntennaPattern::new(14.0, 10.0, 65.0).unwrap()
}

fn ground() -> PathlossParams {
    PathlossParams::new(38.42, 30.0).unwrap()
}

fn uav() -> PathlossParams {
    PathlossParams::new(34.02, 22.0).unwrap()
}

fn station() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (-500.0..500.0, -500.0..500.0, 15.0..40.0, -180.0..=180.0)
}

fn stations(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<BaseStation>> {
    prop::collection::vec(station(), n).prop_map(|list| {
        list.into_iter()
            .enumerate()
            .map(|(i, (x, y, height, azimuth_deg))| BaseStation {
                id: i + 1,
                x,
                y,
                height,
                azimuth_deg,
                tx_power_dbm: 43.0,
            })
            .collect()
    })
}

fn rect() -> impl Strategy<Value = ((f64, f64), (f64, f64))> {
    (-600.0..400.0, -600.0..400.0, 40.0..200.0, 40.0..200.0)
        .prop_map(|(x, y, w, d)| ((x, x + w), (y, y + d)))
}

/// Small scenarios: one ground rectangle, one or two corridors, 3 to 8
/// stations and a few hundred grid points.
fn scenario() -> impl Strategy<Value = Scenario> {
    (
        stations(3..=8),
        rect(),
        prop::collection::vec((rect(), 50.0..200.0), 1..=2),
        0.0..=1.0,
    )
        .prop_map(|(stations, g, corridors, alpha)| {
            let mut regions = vec![RectRegion::new(g.0, g.1, 1.5, RegionTag::Ground).unwrap()];
            for (i, (r, h)) in corridors.into_iter().enumerate() {
                regions
                    .push(RectRegion::new(r.0, r.1, h, RegionTag::Corridor(i as u32 + 1)).unwrap());
            }
            let grid =
                discretize(&regions, MixtureDensity::new(alpha).unwrap(), 25.0, 20.0).unwrap();
            Scenario::new(stations, pattern(), Some(ground()), Some(uav()), grid).unwrap()
        })
}

fn tilts(n: usize) -> impl Strategy<Value = TiltVector> {
    prop::collection::vec(-30.0..30.0, n).prop_map(|t| TiltVector::new(t).unwrap())
}

fn scenario_and_tilts() -> impl Strategy<Value = (Scenario, TiltVector)> {
    scenario().prop_flat_map(|s| {
        let n = s.station_count();
        (Just(s), tilts(n))
    })
}

fn wrap(deg: f64) -> f64 {
    let w = (deg + 180.0).rem_euclid(360.0) - 180.0;
    if w == -180.0 {
        180.0
    } else {
        w
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gains_are_non_positive(mismatch in -180.0..180.0f64, tilt in -90.0..=90.0f64, elev in -90.0..=90.0f64) {
        let p = pattern();
        let hg = horizontal_gain(&p, 0.0, mismatch);
        prop_assert!(hg <= 0.0);
        prop_assert_eq!(hg == 0.0, mismatch == 0.0);
        let vg = vertical_gain(&p, Tilt::new(tilt).unwrap(), elev);
        prop_assert!(vg <= 0.0);
        prop_assert_eq!(vg == 0.0, elev == tilt);
    }

    #[test]
    fn azimuth_difference_is_wrapped(
        (x, y, h, az) in station(),
        (qx, qy) in (-800.0..800.0f64, -800.0..800.0f64),
    ) {
        let bs = BaseStation { id: 1, x, y, height: h, azimuth_deg: az, tx_power_dbm: 43.0 };
        let phi = azimuth_angle(&bs, &Location::new(qx, qy, 1.5));
        prop_assert!((-180.0..=180.0).contains(&(phi - az)), "{} - {}", phi, az);
    }

    #[test]
    fn rss_is_rigid_motion_invariant(
        (x, y, h, az) in station(),
        (qx, qy, qh) in (-800.0..800.0f64, -800.0..800.0f64, 1.0..200.0f64),
        tilt in -20.0..20.0f64,
        (tx, ty) in (-1000.0..1000.0f64, -1000.0..1000.0f64),
        turn in -180.0..180.0f64,
    ) {
        prop_assume!((qx - x).hypot(qy - y) > 1.0);
        let bs = BaseStation { id: 1, x, y, height: h, azimuth_deg: az, tx_power_dbm: 43.0 };
        let tilt = Tilt::new(tilt).unwrap();
        let base = rss(&bs, tilt, &pattern(), &ground(), &Location::new(qx, qy, qh)).unwrap();

        let shifted = BaseStation { x: x + tx, y: y + ty, ..bs };
        let moved = rss(&shifted, tilt, &pattern(), &ground(), &Location::new(qx + tx, qy + ty, qh)).unwrap();
        prop_assert!((moved - base).abs() < 1e-9, "translation {} vs {}", moved, base);

        let (s, c) = turn.to_radians().sin_cos();
        let rot = |px: f64, py: f64| (c * px - s * py, s * px + c * py);
        let (rx, ry) = rot(x, y);
        let (rqx, rqy) = rot(qx, qy);
        let rotated = BaseStation { x: rx, y: ry, azimuth_deg: wrap(az + turn), ..bs };
        let turned = rss(&rotated, tilt, &pattern(), &ground(), &Location::new(rqx, rqy, qh)).unwrap();
        prop_assert!((turned - base).abs() < 1e-9, "rotation {} vs {}", turned, base);
    }

    #[test]
    fn rss_is_concave_quadratic_in_tilt(
        (x, y, h, az) in station(),
        (qx, qy, qh) in (-800.0..800.0f64, -800.0..800.0f64, 1.0..200.0f64),
        tilt in -40.0..40.0f64,
        step in 0.5..5.0f64,
    ) {
        let bs = BaseStation { id: 1, x, y, height: h, azimuth_deg: az, tx_power_dbm: 43.0 };
        let loc = Location::new(qx, qy, qh);
        prop_assume!((qx - x).hypot(qy - y) > 1.0);
        let at = |t: f64| rss(&bs, Tilt::new(t).unwrap(), &pattern(), &uav(), &loc).unwrap();
        let second = (at(tilt + step) - 2.0 * at(tilt) + at(tilt - step)) / (step * step);
        let expected = -2.0 * pattern().vertical_coefficient();
        prop_assert!((second - expected).abs() < 1e-6 * (1.0 + at(tilt).abs() / (step * step)), "{}", second);
        // maximum exactly at the elevation angle
        let e = elevation_angle(&bs, &loc);
        prop_assert!(at(e) >= at(tilt));
    }

    #[test]
    fn optimal_partition_dominates((s, t) in scenario_and_tilts(), seed in any::<u64>()) {
        let model = ChannelModel::new(&s);
        let best = performance(&model, &compute_partition(&model, &t).unwrap(), &t).unwrap();
        for k in 0..5 {
            let other = random_partition(s.grid().len(), s.station_count(), seed.wrapping_add(k));
            prop_assert!(best >= performance(&model, &other, &t).unwrap());
        }
    }

    #[test]
    fn gradient_matches_finite_differences((s, t) in scenario_and_tilts()) {
        let model = ChannelModel::new(&s);
        let err = finite_diff_check(&model, &t, 1e-4).unwrap();
        prop_assert!(err < 1e-6, "relative error {}", err);
    }

    #[test]
    fn cached_and_direct_models_agree((s, t) in scenario_and_tilts()) {
        let cached = ChannelModel::new(&s);
        let direct = ChannelModel::uncached(&s);
        let pc = compute_partition(&cached, &t).unwrap();
        prop_assert_eq!(&pc, &compute_partition(&direct, &t).unwrap());
        prop_assert_eq!(
            performance(&cached, &pc, &t).unwrap().to_bits(),
            performance(&direct, &pc, &t).unwrap().to_bits()
        );
        prop_assert_eq!(gradient(&cached, &pc, &t).unwrap(), gradient(&direct, &pc, &t).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// With a schedule whose step sum is large enough for every cell, the
    /// inner loop converges to the per-cell mean elevation.
    #[test]
    fn inner_fixed_point_is_cell_centroid((s, t) in scenario_and_tilts()) {
        let model = ChannelModel::new(&s);
        let partition = compute_partition(&model, &t).unwrap();
        let config = OptimizerConfig {
            eta0: 0.9,
            kappa: 0.99999,
            eps1: 1e-300,
            eps2: 1e-300,
            max_inner_iters: 200_000,
            ..OptimizerConfig::default()
        };
        let (theta, _) = gradient_ascent_inner(&model, &partition, &t, &config).unwrap();
        let centroid = centroid_tilts(&model, &partition, &t).unwrap();
        let masses = partition.cell_masses(&model);
        for (n, &mass) in masses.iter().enumerate() {
            if mass > 0.0 {
                let gap = (theta.as_slice()[n] - centroid.as_slice()[n]).abs();
                prop_assert!(gap < 0.1, "station {} mass {} gap {}", n + 1, mass, gap);
            } else {
                prop_assert_eq!(theta.as_slice()[n], t.as_slice()[n]);
            }
        }
    }

    #[test]
    fn outer_performance_never_decreases(s in scenario(), seed in any::<u64>()) {
        let model = ChannelModel::new(&s);
        let config = OptimizerConfig { max_outer_iters: 40, seed, ..OptimizerConfig::default() };
        let out = bs_vat(&model, &config).unwrap();
        let phi = out.trace.outer_phi();
        for w in phi.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12, "{} -> {}", w[0], w[1]);
        }
        prop_assert_eq!(&out.partition, &compute_partition(&model, &out.tilts).unwrap());
        prop_assert_eq!(out.trace.final_phi, performance(&model, &out.partition, &out.tilts).unwrap());
    }
}

#[test]
fn bs_vat_is_deterministic_and_cache_independent() {
    let regions = [
        RectRegion::new((-300.0, 300.0), (-300.0, 300.0), 1.5, RegionTag::Ground).unwrap(),
        RectRegion::new(
            (-50.0, 50.0),
            (-300.0, 300.0),
            120.0,
            RegionTag::Corridor(1),
        )
        .unwrap(),
    ];
    let grid = discretize(&regions, MixtureDensity::new(0.5).unwrap(), 30.0, 20.0).unwrap();
    let stations =
        corridor_tilt_core::deployment::hex_deployment(250.0, 1, &[0.0, 120.0, -120.0], 25.0, 43.0)
            .unwrap();
    let s = Scenario::new(stations, pattern(), Some(ground()), Some(uav()), grid).unwrap();
    let config = OptimizerConfig {
        max_outer_iters: 30,
        seed: 3,
        ..OptimizerConfig::default()
    };
    let a = bs_vat(&ChannelModel::new(&s), &config).unwrap();
    let b = bs_vat(&ChannelModel::new(&s), &config).unwrap();
    let c = bs_vat(&ChannelModel::uncached(&s), &config).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
    let other = bs_vat(
        &ChannelModel::new(&s),
        &OptimizerConfig { seed: 4, ..config },
    )
    .unwrap();
    assert_ne!(other.trace.initial_phi, a.trace.initial_phi);
}

#[test]
fn single_point_partition_is_its_best_station() {
    let grid =
        corridor_tilt_core::QuadratureGrid::from_points(vec![corridor_tilt_core::GridPoint {
            loc: Location::new(120.0, 40.0, 1.5),
            weight: 1.0,
            tag: RegionTag::Ground,
        }])
        .unwrap();
    let stations =
        corridor_tilt_core::deployment::hex_deployment(500.0, 1, &[0.0, 120.0, -120.0], 25.0, 43.0)
            .unwrap();
    let s = Scenario::new(stations, pattern(), Some(ground()), None, grid).unwrap();
    let model = ChannelModel::new(&s);
    let t = TiltVector::zeros(s.station_count());
    let p = compute_partition(&model, &t).unwrap();
    let best = (0..s.station_count())
        .map(|n| {
            performance(
                &model,
                &Partition::new(vec![n], s.station_count()).unwrap(),
                &t,
            )
            .unwrap()
        })
        .fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(performance(&model, &p, &t).unwrap(), best);
}
