use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use corridor_tilt::config::{
    PathlossEntry, RegionConfig, RegionKind, StationConfig, StationsConfig,
};
use corridor_tilt::{case_study_preset, parse_config, serialize_config, ScenarioConfig};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_corridor-tilt"))
        .args(args)
        .env_remove("CORRIDOR_TILT_THREADS")
        .output()
        .unwrap()
}

fn stdout_value(out: &Output, key: &str) -> String {
    let text = String::from_utf8_lossy(&out.stdout);
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")).map(str::to_owned))
        .unwrap_or_else(|| panic!("no `{key}` in output:\n{text}"))
}

fn write_config(dir: &Path, config: &ScenarioConfig) -> String {
    let path = dir.join("scenario.toml");
    fs::write(&path, serialize_config(config)).unwrap();
    path.to_str().unwrap().to_owned()
}

fn coarse_case_study() -> ScenarioConfig {
    let mut c = case_study_preset();
    c.grid.ground_resolution_m = 50.0;
    c.grid.corridor_resolution_m = 20.0;
    c.optimizer.max_outer_iters = 30;
    c
}

/// One station at the origin facing east over four ground points at
/// (75|125, ±25), 1.5 m high, weight 0.25 each.
fn single_station() -> ScenarioConfig {
    let mut c = case_study_preset();
    c.alpha = 1.0;
    c.stations = StationsConfig::Explicit(vec![StationConfig {
        x_m: 0.0,
        y_m: 0.0,
        height_m: 25.0,
        azimuth_deg: 0.0,
        tx_power_dbm: 43.0,
    }]);
    c.regions = vec![RegionConfig {
        kind: RegionKind::Ground,
        x_m: [50.0, 150.0],
        y_m: [-50.0, 50.0],
        height_m: 1.5,
    }];
    c.pathloss.ground = Some(PathlossEntry {
        intercept_db: 38.42,
        slope: 30.0,
    });
    c.pathloss.uav = None;
    c.grid.ground_resolution_m = 50.0;
    c
}

#[test]
fn optimize_writes_every_table() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &coarse_case_study());
    let out = dir.path().join("out");
    let res = run(&[
        "optimize",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "5",
    ]);
    assert!(matches!(res.status.code(), Some(0 | 2)), "{res:?}");

    let expect = [
        ("tilts.csv", "station_id,x,y,azimuth_deg,tilt_deg,cell_mass"),
        ("partition.csv", "x,y,h,region_tag,weight,station_id,rss_dbm"),
        ("cdf_ground.csv", "rss_dbm,cdf"),
        ("cdf_uav.csv", "rss_dbm,cdf"),
        ("convergence.csv", "outer_iter,phi_dbm,inner_iters,max_centroid_gap_deg"),
        ("summary.csv", "phi_dbm,mean_rss_ground_dbm,mean_rss_uav_dbm,termination,outer_iterations,inner_iterations"),
    ];
    for (name, header) in expect {
        let text = fs::read_to_string(out.join(name)).unwrap();
        assert_eq!(text.lines().next(), Some(header), "{name}");
    }
    assert_eq!(
        fs::read_to_string(out.join("tilts.csv"))
            .unwrap()
            .lines()
            .count(),
        58
    );
    assert_eq!(
        fs::read_to_string(out.join("partition.csv"))
            .unwrap()
            .lines()
            .count(),
        1 + 900 + 320
    );

    let snapshot = parse_config(&fs::read_to_string(out.join("config.toml")).unwrap()).unwrap();
    let mut expected = coarse_case_study();
    expected.optimizer.seed = 5;
    assert_eq!(snapshot, expected);

    let convergence = fs::read_to_string(out.join("convergence.csv")).unwrap();
    let outer = stdout_value(&res, "outer_iterations")
        .parse::<usize>()
        .unwrap();
    assert_eq!(convergence.lines().count(), outer + 2);
    let code = res.status.code().unwrap();
    let termination = stdout_value(&res, "termination");
    assert_eq!(code == 2, termination == "cap");
    assert_eq!(code == 2, outer == 30);
}

#[test]
fn uav_only_case_study_uptilts() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &coarse_case_study());
    let out = dir.path().join("out");
    let res = run(&[
        "optimize",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
        "--override",
        "alpha=0",
    ]);
    assert!(matches!(res.status.code(), Some(0 | 2)), "{res:?}");
    let mut reader = csv::Reader::from_path(out.join("tilts.csv")).unwrap();
    let mut active = 0;
    for row in reader.records() {
        let row = row.unwrap();
        let (tilt, mass): (f64, f64) = (row[4].parse().unwrap(), row[5].parse().unwrap());
        if mass > 0.0 {
            active += 1;
            assert!(tilt > 0.0, "station {} tilt {tilt}", &row[0]);
        }
    }
    assert!(active > 0);
    // ground population absent: header only
    assert_eq!(
        fs::read_to_string(out.join("cdf_ground.csv")).unwrap(),
        "rss_dbm,cdf\n"
    );
    assert_eq!(stdout_value(&res, "mean_rss_ground_dbm"), "n/a");
}

#[test]
fn evaluate_reproduces_optimized_phi() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &coarse_case_study());
    let out = dir.path().join("opt");
    let opt = run(&[
        "optimize",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
    ]);
    let tilts = out.join("tilts.csv");
    let eval_dir = dir.path().join("eval");
    let eval = run(&[
        "evaluate",
        "--config",
        &config,
        "--tilts",
        tilts.to_str().unwrap(),
        "--out",
        eval_dir.to_str().unwrap(),
    ]);
    assert_eq!(eval.status.code(), Some(0), "{eval:?}");
    assert_eq!(
        stdout_value(&opt, "phi_dbm"),
        stdout_value(&eval, "phi_dbm")
    );
    for name in [
        "tilts.csv",
        "partition.csv",
        "cdf_ground.csv",
        "cdf_uav.csv",
    ] {
        assert_eq!(
            fs::read(out.join(name)).unwrap(),
            fs::read(eval_dir.join(name)).unwrap(),
            "{name}"
        );
    }
}

/// Independent evaluation of the channel for the single-station grid.
fn hand_rss(x: f64, y: f64) -> f64 {
    let (dh, r) = (1.5 - 25.0, (x * x + y * y).sqrt());
    let elevation = (dh / r).atan().to_degrees();
    let azimuth = y.atan2(x).to_degrees();
    let d = (r * r + dh * dh).sqrt();
    43.0 + 14.0
        - 12.0 * (elevation / 10.0).powi(2)
        - 12.0 * (azimuth / 65.0).powi(2)
        - (38.42 + 30.0 * d.log10())
}

#[test]
fn evaluate_single_station_matches_hand_computation() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &single_station());
    let tilts = dir.path().join("zero.csv");
    fs::write(&tilts, "station_id,tilt_deg\n1,0\n").unwrap();
    let out = dir.path().join("eval");
    let res = run(&[
        "evaluate",
        "--config",
        &config,
        "--tilts",
        tilts.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(0), "{res:?}");
    let phi: f64 = stdout_value(&res, "phi_dbm").parse().unwrap();
    let expected = 0.25
        * (hand_rss(75.0, -25.0)
            + hand_rss(125.0, -25.0)
            + hand_rss(75.0, 25.0)
            + hand_rss(125.0, 25.0));
    assert!((phi - expected).abs() < 1e-9, "{phi} vs {expected}");
    assert_eq!(
        fs::read_to_string(out.join("cdf_uav.csv")).unwrap(),
        "rss_dbm,cdf\n"
    );
    assert_eq!(stdout_value(&res, "mean_rss_uav_dbm"), "n/a");
}

#[test]
fn evaluate_rejects_wrong_tilt_count() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &single_station());
    let tilts = dir.path().join("two.csv");
    fs::write(&tilts, "station_id,tilt_deg\n1,0\n2,0\n").unwrap();
    let out = dir.path().join("eval");
    let res = run(&[
        "evaluate",
        "--config",
        &config,
        "--tilts",
        tilts.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("expected 1 tilts, found 2"));
    assert!(!out.exists());
}

#[test]
fn gradcheck_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &single_station());
    let res = run(&["gradcheck", "--config", &config, "--trials", "4"]);
    assert_eq!(res.status.code(), Some(0), "{res:?}");
    let err: f64 = stdout_value(&res, "max_rel_error").parse().unwrap();
    assert!(err < 1e-5);

    let mut point = single_station();
    point.regions[0] = RegionConfig {
        kind: RegionKind::Ground,
        x_m: [90.0, 110.0],
        y_m: [-10.0, 10.0],
        height_m: 1.5,
    };
    point.grid.ground_resolution_m = 100.0;
    let config = write_config(dir.path(), &point);
    assert_eq!(
        run(&["gradcheck", "--config", &config, "--step", "1e-4"])
            .status
            .code(),
        Some(0)
    );
    // truncation-free quadratic: even a 10 degree step only sees rounding
    let coarse = run(&["gradcheck", "--config", &config, "--step", "10"]);
    assert!(matches!(coarse.status.code(), Some(0 | 2)));
    assert_eq!(
        run(&["gradcheck", "--config", &config, "--step", "60"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn config_errors_exit_one_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &case_study_preset());
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();

    let res = run(&[
        "optimize",
        "--config",
        &config,
        "--out",
        out,
        "--override",
        "alpha=1.5",
    ]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("`alpha`"));

    let res = run(&[
        "optimize",
        "--config",
        &config,
        "--out",
        out,
        "--override",
        "optimizer.kapa=0.5",
    ]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("kapa"));

    let broken = dir.path().join("broken.toml");
    fs::write(&broken, "format_version = 1\nalpha = [\n").unwrap();
    let res = run(&[
        "optimize",
        "--config",
        broken.to_str().unwrap(),
        "--out",
        out,
    ]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("line"));

    let res = run(&[
        "optimize",
        "--config",
        &config,
        "--out",
        out,
        "--threads",
        "0",
    ]);
    assert_eq!(res.status.code(), Some(1));
    assert!(!Path::new(out).exists());
}

#[test]
fn preset_command_round_trips() {
    let res = run(&["preset"]);
    assert_eq!(res.status.code(), Some(0));
    let text = String::from_utf8(res.stdout).unwrap();
    assert_eq!(parse_config(&text).unwrap(), case_study_preset());
}
