//! Scenario configuration files.
//!
//! A configuration is a TOML document with a `format_version` key. Parsing
//! rejects unknown keys and validates every invariant, so a successfully
//! parsed [`ScenarioConfig`] always builds a [`Scenario`]. Serialization is
//! canonical: keys come out in declaration order and floats in their
//! shortest round-trip form.
//!
//! ```toml
//! format_version = 1
//! alpha = 0.5
//! initial_tilt_deg = 0.0
//! cache_budget_mb = 1024
//!
//! [stations.hex]
//! isd_m = 500.0
//! tiers = 2
//! sector_azimuths_deg = [0.0, 120.0, -120.0]
//! bs_height_m = 25.0
//! tx_power_dbm = 43.0
//!
//! [[regions]]
//! kind = "ground"
//! x_m = [-750.0, 750.0]
//! y_m = [-750.0, 750.0]
//! height_m = 1.5
//!
//! [antenna]
//! max_gain_dbi = 14.0
//! vertical_hpbw_deg = 10.0
//! horizontal_hpbw_deg = 65.0
//!
//! [pathloss.ground]
//! intercept_db = 38.42
//! slope = 30.0
//!
//! [grid]
//! ground_resolution_m = 10.0
//! corridor_resolution_m = 5.0
//!
//! [optimizer]
//! eta0 = 0.005
//! kappa = 0.999
//! eps1 = 1e-8
//! eps2 = 1e-9
//! max_inner_iters = 10000
//! max_outer_iters = 500
//! seed = 0
//! ```
//!
//! Stations are given either by `[stations.hex]` or as an explicit
//! `[[stations.explicit]]` list with `x_m`, `y_m`, `height_m`, `azimuth_deg`
//! and `tx_power_dbm`; ids are assigned 1..N in file order. Corridor regions
//! are numbered 1.. in file order.

use std::fmt;

use corridor_tilt_core::deployment::hex_deployment;
use corridor_tilt_core::{
    discretize, AntennaPattern, BaseStation, MixtureDensity, OptimizerConfig, PathlossParams,
    RectRegion, RegionTag, Scenario, TiltVector,
};
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub format_version: u32,
    /// Share of the user density on the ground population, in [0, 1].
    pub alpha: f64,
    pub initial_tilt_deg: f64,
    /// Memory budget of the precomputed link table.
    pub cache_budget_mb: u64,
    pub stations: StationsConfig,
    pub regions: Vec<RegionConfig>,
    pub antenna: AntennaConfig,
    pub pathloss: PathlossConfig,
    pub grid: GridConfig,
    pub optimizer: OptimizerSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum StationsConfig {
    Hex(HexConfig),
    Explicit(Vec<StationConfig>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HexConfig {
    pub isd_m: f64,
    pub tiers: usize,
    pub sector_azimuths_deg: Vec<f64>,
    pub bs_height_m: f64,
    pub tx_power_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationConfig {
    pub x_m: f64,
    pub y_m: f64,
    pub height_m: f64,
    pub azimuth_deg: f64,
    pub tx_power_dbm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionKind {
    Ground,
    Corridor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub kind: RegionKind,
    pub x_m: [f64; 2],
    pub y_m: [f64; 2],
    pub height_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AntennaConfig {
    pub max_gain_dbi: f64,
    pub vertical_hpbw_deg: f64,
    pub horizontal_hpbw_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathlossConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground: Option<PathlossEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uav: Option<PathlossEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathlossEntry {
    pub intercept_db: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub ground_resolution_m: f64,
    pub corridor_resolution_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    pub eta0: f64,
    pub kappa: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub max_inner_iters: usize,
    pub max_outer_iters: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    /// Malformed TOML, an unknown key, a bad override or a type error.
    Parse(String),
    /// A well-formed configuration that violates an invariant.
    Validation { field: String, reason: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse(msg) => write!(f, "config parse error: {msg}"),
            ConfigError::Validation { field, reason } => {
                write!(f, "invalid config value `{field}`: {reason}")
            }
        }
    }
}

impl std::error::Error for ConfigError {}

impl ConfigError {
    fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Field named by a validation error, if any.
    pub fn field(&self) -> Option<&str> {
        match self {
            ConfigError::Validation { field, .. } => Some(field),
            ConfigError::Parse(_) => None,
        }
    }
}

fn core_error(context: &str, err: corridor_tilt_core::Error) -> ConfigError {
    use corridor_tilt_core::Error;
    match err {
        Error::InvalidParameter { field, reason } => {
            ConfigError::invalid(format!("{context}{field}"), reason)
        }
        Error::InvalidMixture { missing } => ConfigError::invalid(
            "regions",
            format!("alpha puts mass on the {missing} population but it has no region"),
        ),
        Error::EmptyRegion { region } => ConfigError::invalid(
            format!("regions.{region}"),
            "no grid points at the configured resolution",
        ),
        other => ConfigError::invalid(context.trim_end_matches('.'), other.to_string()),
    }
}

/// The two-tier, 57-station case study with ground users and four UAV
/// corridors, at 10 m ground and 5 m corridor resolution.
pub fn case_study_preset() -> ScenarioConfig {
    let corridor = |x0: f64, x1: f64, h: f64| RegionConfig {
        kind: RegionKind::Corridor,
        x_m: [x0, x1],
        y_m: [-400.0, 400.0],
        height_m: h,
    };
    ScenarioConfig {
        format_version: FORMAT_VERSION,
        alpha: 0.5,
        initial_tilt_deg: 0.0,
        cache_budget_mb: 1024,
        stations: StationsConfig::Hex(HexConfig {
            isd_m: 500.0,
            tiers: 2,
            sector_azimuths_deg: vec![0.0, 120.0, -120.0],
            bs_height_m: 25.0,
            tx_power_dbm: 43.0,
        }),
        regions: vec![
            RegionConfig {
                kind: RegionKind::Ground,
                x_m: [-750.0, 750.0],
                y_m: [-750.0, 750.0],
                height_m: 1.5,
            },
            corridor(-320.0, -280.0, 150.0),
            corridor(-120.0, -80.0, 120.0),
            corridor(80.0, 120.0, 120.0),
            corridor(280.0, 320.0, 150.0),
        ],
        antenna: AntennaConfig {
            max_gain_dbi: 14.0,
            vertical_hpbw_deg: 10.0,
            horizontal_hpbw_deg: 65.0,
        },
        pathloss: PathlossConfig {
            ground: Some(PathlossEntry {
                intercept_db: 38.42,
                slope: 30.0,
            }),
            uav: Some(PathlossEntry {
                intercept_db: 34.02,
                slope: 22.0,
            }),
        },
        grid: GridConfig {
            ground_resolution_m: 10.0,
            corridor_resolution_m: 5.0,
        },
        optimizer: OptimizerSection::from(OptimizerConfig::default()),
    }
}

impl From<OptimizerConfig> for OptimizerSection {
    fn from(c: OptimizerConfig) -> Self {
        OptimizerSection {
            eta0: c.eta0,
            kappa: c.kappa,
            eps1: c.eps1,
            eps2: c.eps2,
            max_inner_iters: c.max_inner_iters,
            max_outer_iters: c.max_outer_iters,
            seed: c.seed,
        }
    }
}

impl From<&OptimizerSection> for OptimizerConfig {
    fn from(s: &OptimizerSection) -> Self {
        OptimizerConfig {
            eta0: s.eta0,
            kappa: s.kappa,
            eps1: s.eps1,
            eps2: s.eps2,
            max_inner_iters: s.max_inner_iters,
            max_outer_iters: s.max_outer_iters,
            seed: s.seed,
        }
    }
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    parse_with_overrides(text, &[])
}

/// Parses a configuration, applies `key=value` overrides to it, then
/// validates. Keys are dotted paths (`optimizer.seed`, `regions.1.height_m`);
/// values use TOML syntax, with bare words taken as strings.
pub fn parse_with_overrides(
    text: &str,
    overrides: &[String],
) -> Result<ScenarioConfig, ConfigError> {
    let mut doc: toml::Table =
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    for entry in overrides {
        apply_override(&mut doc, entry)?;
    }
    let config: ScenarioConfig = toml::Value::Table(doc)
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// Canonical text form; `parse_config` inverts it exactly.
pub fn serialize_config(config: &ScenarioConfig) -> String {
    toml::to_string(config).expect("config is always representable in TOML")
}

fn apply_override(doc: &mut toml::Table, entry: &str) -> Result<(), ConfigError> {
    let (key, raw) = entry
        .split_once('=')
        .ok_or_else(|| ConfigError::Parse(format!("override `{entry}` is not key=value")))?;
    let (key, raw) = (key.trim(), raw.trim());
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key present"),
        Err(_) => toml::Value::String(raw.to_owned()),
    };
    let path: Vec<&str> = key.split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::Parse(format!(
            "override key `{key}` is malformed"
        )));
    }
    let mut root = toml::Value::Table(std::mem::take(doc));
    let applied = set_path(&mut root, &path, value);
    if let toml::Value::Table(t) = root {
        *doc = t;
    }
    applied.ok_or_else(|| ConfigError::Parse(format!("override key `{key}` does not exist")))
}

/// Sets `path` below `node`. A new key is accepted in the last position so
/// that deserialization reports it by name.
fn set_path(node: &mut toml::Value, path: &[&str], value: toml::Value) -> Option<()> {
    let (head, rest) = path.split_first()?;
    if rest.is_empty() {
        match node {
            toml::Value::Table(t) => {
                t.insert((*head).to_owned(), value);
            }
            toml::Value::Array(a) => *a.get_mut(head.parse::<usize>().ok()?)? = value,
            _ => return None,
        }
        return Some(());
    }
    let child = match node {
        toml::Value::Table(t) => t.get_mut(*head)?,
        toml::Value::Array(a) => a.get_mut(head.parse::<usize>().ok()?)?,
        _ => return None,
    };
    set_path(child, rest, value)
}

fn finite(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::invalid(field, "must be finite"))
    }
}

impl ScenarioConfig {
    /// Checks every invariant without discretizing the grid.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.format_version != FORMAT_VERSION {
            return Err(ConfigError::invalid(
                "format_version",
                format!(
                    "unsupported version {}, expected {FORMAT_VERSION}",
                    self.format_version
                ),
            ));
        }
        MixtureDensity::new(self.alpha).map_err(|e| core_error("", e))?;
        corridor_tilt_core::Tilt::new(self.initial_tilt_deg)
            .map_err(|_| ConfigError::invalid("initial_tilt_deg", "must lie in [-90, 90]"))?;
        if self.cache_budget_mb > u64::MAX >> 20 {
            return Err(ConfigError::invalid("cache_budget_mb", "too large"));
        }
        self.station_list()?;
        AntennaPattern::new(
            self.antenna.max_gain_dbi,
            self.antenna.vertical_hpbw_deg,
            self.antenna.horizontal_hpbw_deg,
        )
        .map_err(|e| core_error("antenna.", e))?;
        for (name, entry) in [
            ("pathloss.ground", &self.pathloss.ground),
            ("pathloss.uav", &self.pathloss.uav),
        ] {
            if let Some(p) = entry {
                PathlossParams::new(p.intercept_db, p.slope)
                    .map_err(|e| core_error(&format!("{name}."), e))?;
            }
        }
        self.rect_regions()?;
        let has = |kind| self.regions.iter().any(|r| r.kind == kind);
        if self.alpha > 0.0 && !has(RegionKind::Ground) {
            return Err(ConfigError::invalid(
                "regions",
                "alpha > 0 needs a ground region",
            ));
        }
        if self.alpha < 1.0 && !has(RegionKind::Corridor) {
            return Err(ConfigError::invalid(
                "regions",
                "alpha < 1 needs a corridor region",
            ));
        }
        if self.alpha > 0.0 && self.pathloss.ground.is_none() {
            return Err(ConfigError::invalid(
                "pathloss.ground",
                "required when ground users carry mass",
            ));
        }
        if self.alpha < 1.0 && self.pathloss.uav.is_none() {
            return Err(ConfigError::invalid(
                "pathloss.uav",
                "required when corridor users carry mass",
            ));
        }
        for (field, res) in [
            ("grid.ground_resolution_m", self.grid.ground_resolution_m),
            (
                "grid.corridor_resolution_m",
                self.grid.corridor_resolution_m,
            ),
        ] {
            if !(res > 0.0 && res.is_finite()) {
                return Err(ConfigError::invalid(field, "must be positive and finite"));
            }
        }
        self.optimizer_config()
            .validate()
            .map_err(|e| core_error("optimizer.", e))?;
        let toml_int = |field: &str, v: u64| {
            if v > i64::MAX as u64 {
                Err(ConfigError::invalid(
                    field,
                    "must be at most 9223372036854775807 (TOML integer range)",
                ))
            } else {
                Ok(())
            }
        };
        toml_int("optimizer.seed", self.optimizer.seed)?;
        toml_int(
            "optimizer.max_inner_iters",
            self.optimizer.max_inner_iters as u64,
        )?;
        toml_int(
            "optimizer.max_outer_iters",
            self.optimizer.max_outer_iters as u64,
        )?;
        toml_int(
            "stations.hex.tiers",
            match &self.stations {
                StationsConfig::Hex(h) => h.tiers as u64,
                StationsConfig::Explicit(_) => 0,
            },
        )?;
        Ok(())
    }

    pub fn optimizer_config(&self) -> OptimizerConfig {
        OptimizerConfig::from(&self.optimizer)
    }

    pub fn cache_budget_bytes(&self) -> usize {
        usize::try_from(self.cache_budget_mb << 20).unwrap_or(usize::MAX)
    }

    /// Stations with ids 1..N.
    pub fn station_list(&self) -> Result<Vec<BaseStation>, ConfigError> {
        match &self.stations {
            StationsConfig::Hex(h) => {
                finite("stations.hex.bs_height_m", h.bs_height_m)?;
                for (i, az) in h.sector_azimuths_deg.iter().enumerate() {
                    if !(-180.0..=180.0).contains(az) {
                        return Err(ConfigError::invalid(
                            format!("stations.hex.sector_azimuths_deg.{i}"),
                            "must lie in [-180, 180]",
                        ));
                    }
                }
                hex_deployment(
                    h.isd_m,
                    h.tiers,
                    &h.sector_azimuths_deg,
                    h.bs_height_m,
                    h.tx_power_dbm,
                )
                .map_err(|e| core_error("stations.hex.", e))
            }
            StationsConfig::Explicit(list) => {
                if list.is_empty() {
                    return Err(ConfigError::invalid(
                        "stations.explicit",
                        "at least one station is required",
                    ));
                }
                list.iter()
                    .enumerate()
                    .map(|(i, s)| {
                        let station = BaseStation {
                            id: i + 1,
                            x: s.x_m,
                            y: s.y_m,
                            height: s.height_m,
                            azimuth_deg: s.azimuth_deg,
                            tx_power_dbm: s.tx_power_dbm,
                        };
                        station
                            .validate()
                            .map_err(|e| core_error(&format!("stations.explicit.{i}."), e))?;
                        Ok(station)
                    })
                    .collect()
            }
        }
    }

    pub fn rect_regions(&self) -> Result<Vec<RectRegion>, ConfigError> {
        let mut corridor = 0;
        self.regions
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let tag = match r.kind {
                    RegionKind::Ground => RegionTag::Ground,
                    RegionKind::Corridor => {
                        corridor += 1;
                        RegionTag::Corridor(corridor)
                    }
                };
                RectRegion::new((r.x_m[0], r.x_m[1]), (r.y_m[0], r.y_m[1]), r.height_m, tag)
                    .map_err(|e| core_error(&format!("regions.{i}."), e))
            })
            .collect()
    }

    /// Discretizes the density and assembles the optimization instance.
    pub fn build(&self) -> Result<Scenario, ConfigError> {
        self.validate()?;
        let stations = self.station_list()?;
        let pattern = AntennaPattern::new(
            self.antenna.max_gain_dbi,
            self.antenna.vertical_hpbw_deg,
            self.antenna.horizontal_hpbw_deg,
        )
        .map_err(|e| core_error("antenna.", e))?;
        let params = |p: &Option<PathlossEntry>| {
            p.map(|p| PathlossParams {
                intercept_db: p.intercept_db,
                slope: p.slope,
            })
        };
        let density = MixtureDensity::new(self.alpha).map_err(|e| core_error("", e))?;
        let grid = discretize(
            &self.rect_regions()?,
            density,
            self.grid.ground_resolution_m,
            self.grid.corridor_resolution_m,
        )
        .map_err(|e| core_error("grid.", e))?;
        let n = stations.len();
        let scenario = Scenario::new(
            stations,
            pattern,
            params(&self.pathloss.ground),
            params(&self.pathloss.uav),
            grid,
        )
        .map_err(|e| core_error("", e))?;
        let tilts = TiltVector::new(vec![self.initial_tilt_deg; n])
            .map_err(|e| core_error("initial_tilt_deg.", e))?;
        scenario
            .with_initial_tilts(tilts)
            .map_err(|e| core_error("", e))
    }
}
