//! Closed-form link model: antenna gains, elevation/azimuth geometry,
//! log-distance pathloss and received signal strength.
//!
//! All angles are in degrees. Gains and losses are in dB, powers in dBm.

use crate::error::{Error, Result};
use crate::math;

/// Sector antenna with a single parabolic main lobe in each plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntennaPattern {
    /// Boresight gain, dBi.
    pub max_gain_dbi: f64,
    /// Vertical half-power beamwidth, degrees.
    pub vertical_hpbw_deg: f64,
    /// Horizontal half-power beamwidth, degrees.
    pub horizontal_hpbw_deg: f64,
}

impl AntennaPattern {
    pub fn new(
        max_gain_dbi: f64,
        vertical_hpbw_deg: f64,
        horizontal_hpbw_deg: f64,
    ) -> Result<Self> {
        let pattern = AntennaPattern {
            max_gain_dbi,
            vertical_hpbw_deg,
            horizontal_hpbw_deg,
        };
        pattern.validate()?;
        Ok(pattern)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.max_gain_dbi.is_finite() {
            return Err(Error::InvalidParameter {
                field: "max_gain_dbi",
                reason: "must be finite",
            });
        }
        if !(self.vertical_hpbw_deg > 0.0 && self.vertical_hpbw_deg.is_finite()) {
            return Err(Error::InvalidParameter {
                field: "vertical_hpbw_deg",
                reason: "must be positive",
            });
        }
        if !(self.horizontal_hpbw_deg > 0.0 && self.horizontal_hpbw_deg.is_finite()) {
            return Err(Error::InvalidParameter {
                field: "horizontal_hpbw_deg",
                reason: "must be positive",
            });
        }
        Ok(())
    }

    /// `12 / θ3dB²`, the curvature of the vertical pattern.
    #[inline]
    pub fn vertical_coefficient(&self) -> f64 {
        12.0 / (self.vertical_hpbw_deg * self.vertical_hpbw_deg)
    }

    #[inline]
    fn horizontal_coefficient(&self) -> f64 {
        12.0 / (self.horizontal_hpbw_deg * self.horizontal_hpbw_deg)
    }
}

/// One sector of a site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseStation {
    /// 1-based station id.
    pub id: usize,
    pub x: f64,
    pub y: f64,
    /// Antenna height above ground, meters.
    pub height: f64,
    /// Horizontal boresight direction, degrees in [-180, 180].
    pub azimuth_deg: f64,
    pub tx_power_dbm: f64,
}

impl BaseStation {
    pub fn validate(&self) -> Result<()> {
        if !(self.x.is_finite() && self.y.is_finite()) {
            return Err(Error::InvalidParameter {
                field: "station position",
                reason: "must be finite",
            });
        }
        if !(self.height > 0.0 && self.height.is_finite()) {
            return Err(Error::InvalidParameter {
                field: "station height",
                reason: "must be positive",
            });
        }
        if !(-180.0..=180.0).contains(&self.azimuth_deg) {
            return Err(Error::InvalidParameter {
                field: "station azimuth",
                reason: "must lie in [-180, 180]",
            });
        }
        if !self.tx_power_dbm.is_finite() {
            return Err(Error::InvalidParameter {
                field: "station tx power",
                reason: "must be finite",
            });
        }
        Ok(())
    }
}

/// Vertical antenna tilt in degrees; positive is uptilt.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Tilt(f64);

impl Tilt {
    pub fn new(deg: f64) -> Result<Self> {
        if (-90.0..=90.0).contains(&deg) {
            Ok(Tilt(deg))
        } else {
            Err(Error::InvalidParameter {
                field: "tilt",
                reason: "must lie in [-90, 90]",
            })
        }
    }

    #[inline]
    pub fn deg(self) -> f64 {
        self.0
    }
}

/// User position: 2D coordinates plus height above ground.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location {
    pub x: f64,
    pub y: f64,
    pub height: f64,
}

impl Location {
    pub const fn new(x: f64, y: f64, height: f64) -> Self {
        Location { x, y, height }
    }
}

/// Log-distance pathloss `a + b·log10(d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathlossParams {
    /// Intercept `a`, dB.
    pub intercept_db: f64,
    /// Slope `b`, ten times the pathloss exponent.
    pub slope: f64,
}

impl PathlossParams {
    pub fn new(intercept_db: f64, slope: f64) -> Result<Self> {
        let params = PathlossParams {
            intercept_db,
            slope,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.intercept_db.is_finite() {
            return Err(Error::InvalidParameter {
                field: "pathloss intercept",
                reason: "must be finite",
            });
        }
        if !(self.slope > 0.0 && self.slope.is_finite()) {
            return Err(Error::InvalidParameter {
                field: "pathloss slope",
                reason: "must be positive",
            });
        }
        Ok(())
    }
}

#[inline]
fn horizontal_distance(bs: &BaseStation, loc: &Location) -> f64 {
    let dx = loc.x - bs.x;
    let dy = loc.y - bs.y;
    math::sqrt(dx * dx + dy * dy)
}

/// Straight-line distance between the antenna and the user.
#[inline]
pub fn distance_3d(bs: &BaseStation, loc: &Location) -> f64 {
    let dx = loc.x - bs.x;
    let dy = loc.y - bs.y;
    let dh = loc.height - bs.height;
    math::sqrt(dx * dx + dy * dy + dh * dh)
}

/// Elevation angle of the user seen from the antenna, in (-90, 90).
///
/// Directly above or below the antenna the limit ±90 is returned; at equal
/// heights the angle is 0.
pub fn elevation_angle(bs: &BaseStation, loc: &Location) -> f64 {
    let dh = loc.height - bs.height;
    let r = horizontal_distance(bs, loc);
    if r == 0.0 {
        return if dh > 0.0 {
            90.0
        } else if dh < 0.0 {
            -90.0
        } else {
            0.0
        };
    }
    math::atan_deg(dh / r)
}

/// Azimuth of the user seen from the station, unwrapped so that its
/// difference from the station boresight lies in [-180, 180].
///
/// Points on the vertical line through the station (`dx == 0`) get ±90 by the
/// sign of `dy`; a point at the station's own 2D position gets the boresight
/// itself.
pub fn azimuth_angle(bs: &BaseStation, loc: &Location) -> f64 {
    let dx = loc.x - bs.x;
    let dy = loc.y - bs.y;
    let raw = if dx > 0.0 {
        math::atan_deg(dy / dx)
    } else if dx < 0.0 {
        math::atan_deg(dy / dx) + 180.0
    } else if dy > 0.0 {
        90.0
    } else if dy < 0.0 {
        -90.0
    } else {
        return bs.azimuth_deg;
    };
    bs.azimuth_deg + wrap_half_turn(raw - bs.azimuth_deg)
}

/// Shifts `deg` by a multiple of 360 into (-180, 180].
#[inline]
fn wrap_half_turn(deg: f64) -> f64 {
    let turns = math::ceil((deg - 180.0) / 360.0);
    deg - 360.0 * turns
}

/// Vertical pattern gain in dB, `-12·((elev - tilt)/θ3dB)²`. Never positive.
#[inline]
pub fn vertical_gain(pattern: &AntennaPattern, tilt: Tilt, elevation_deg: f64) -> f64 {
    vertical_gain_deg(pattern, tilt.deg(), elevation_deg)
}

#[inline]
pub(crate) fn vertical_gain_deg(
    pattern: &AntennaPattern,
    tilt_deg: f64,
    elevation_deg: f64,
) -> f64 {
    let mismatch = elevation_deg - tilt_deg;
    -pattern.vertical_coefficient() * mismatch * mismatch
}

/// Horizontal pattern gain in dB. The caller passes an already unwrapped
/// user azimuth (see [`azimuth_angle`]).
#[inline]
pub fn horizontal_gain(pattern: &AntennaPattern, bs_azimuth_deg: f64, loc_azimuth_deg: f64) -> f64 {
    let mismatch = loc_azimuth_deg - bs_azimuth_deg;
    -pattern.horizontal_coefficient() * mismatch * mismatch
}

pub fn pathloss(params: &PathlossParams, bs: &BaseStation, loc: &Location) -> Result<f64> {
    let d = distance_3d(bs, loc);
    if d == 0.0 {
        return Err(Error::DegenerateGeometry { station: bs.id });
    }
    Ok(params.intercept_db + params.slope * math::log10(d))
}

/// The tilt-independent part of a station/location link.
///
/// Only the vertical gain depends on the tilt, so a link is fully described by
/// the elevation angle and the RSS it would have with zero vertical loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub elevation_deg: f64,
    /// `ρ + A_max + horizontal gain - pathloss`, dBm.
    pub base_dbm: f64,
}

impl Link {
    pub fn new(
        bs: &BaseStation,
        pattern: &AntennaPattern,
        params: &PathlossParams,
        loc: &Location,
    ) -> Result<Self> {
        let loss = pathloss(params, bs, loc)?;
        let h_gain = horizontal_gain(pattern, bs.azimuth_deg, azimuth_angle(bs, loc));
        Ok(Link {
            elevation_deg: elevation_angle(bs, loc),
            base_dbm: bs.tx_power_dbm + pattern.max_gain_dbi + h_gain - loss,
        })
    }

    /// RSS in dBm for the given tilt.
    #[inline]
    pub fn rss(&self, pattern: &AntennaPattern, tilt_deg: f64) -> f64 {
        self.base_dbm + vertical_gain_deg(pattern, tilt_deg, self.elevation_deg)
    }
}

/// Received signal strength in dBm from `bs` at `loc`.
pub fn rss(
    bs: &BaseStation,
    tilt: Tilt,
    pattern: &AntennaPattern,
    params: &PathlossParams,
    loc: &Location,
) -> Result<f64> {
    Ok(Link::new(bs, pattern, params, loc)?.rss(pattern, tilt.deg()))
}
