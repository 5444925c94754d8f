//! Hexagonal multi-sector site layouts.
//!
//! Sites lie on a pointy-top hexagonal lattice with the first ring-1 site due
//! east of the center. Site order is center first, then ring by ring,
//! counterclockwise starting from the eastern corner of each ring. Every site
//! emits one station per sector azimuth, all sharing the site position, so
//! with three sectors site `i` owns stations `3i-2`, `3i-1` and `3i`.

use alloc::vec::Vec;

use crate::channel::BaseStation;
use crate::error::{Error, Result};

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Unit vectors at 0°, 60°, …, 300°.
const HEX_DIRECTIONS: [(f64, f64); 6] = [
    (1.0, 0.0),
    (0.5, SQRT_3 / 2.0),
    (-0.5, SQRT_3 / 2.0),
    (-1.0, 0.0),
    (-0.5, -SQRT_3 / 2.0),
    (0.5, -SQRT_3 / 2.0),
];

/// Site centers for `tiers` rings around the origin, `1 + 3·tiers·(tiers+1)`
/// in total.
pub fn hex_sites(isd: f64, tiers: usize) -> Vec<(f64, f64)> {
    let mut sites = Vec::with_capacity(1 + 3 * tiers * (tiers + 1));
    sites.push((0.0, 0.0));
    for ring in 1..=tiers {
        // Lattice steps in units of isd; converted once per site so that every
        // coordinate is an exact small-integer combination of the basis.
        let (mut a, mut b) = (ring as f64, 0.0f64);
        for side in 0..6 {
            let (sx, sy) = HEX_DIRECTIONS[(side + 2) % 6];
            for _ in 0..ring {
                sites.push((a * isd, b * isd));
                a += sx;
                b += sy;
            }
        }
    }
    sites
}

/// Stations of a hexagonal deployment, ids starting at 1.
pub fn hex_deployment(
    isd: f64,
    tiers: usize,
    sector_azimuths_deg: &[f64],
    bs_height: f64,
    tx_power_dbm: f64,
) -> Result<Vec<BaseStation>> {
    if !(isd > 0.0 && isd.is_finite()) {
        return Err(Error::InvalidParameter {
            field: "isd",
            reason: "must be positive",
        });
    }
    if sector_azimuths_deg.is_empty() {
        return Err(Error::InvalidParameter {
            field: "sector_azimuths",
            reason: "must not be empty",
        });
    }
    let sites = hex_sites(isd, tiers);
    let mut stations = Vec::with_capacity(sites.len() * sector_azimuths_deg.len());
    for (x, y) in sites {
        for &azimuth_deg in sector_azimuths_deg {
            let station = BaseStation {
                id: stations.len() + 1,
                x,
                y,
                height: bs_height,
                azimuth_deg,
                tx_power_dbm,
            };
            station.validate()?;
            stations.push(station);
        }
    }
    Ok(stations)
}
