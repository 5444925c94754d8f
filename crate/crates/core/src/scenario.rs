use alloc::vec::Vec;

use crate::channel::{distance_3d, AntennaPattern, BaseStation, Link, PathlossParams};
use crate::error::{Error, Result};
use crate::grid::{QuadratureGrid, RegionTag};
use crate::partition::TiltVector;

/// A fully specified optimization instance: deployment, channel and the
/// discretized user density.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    stations: Vec<BaseStation>,
    pattern: AntennaPattern,
    pathloss_ground: Option<PathlossParams>,
    pathloss_uav: Option<PathlossParams>,
    grid: QuadratureGrid,
    initial_tilts: TiltVector,
}

impl Scenario {
    /// Validates the pieces and checks that no grid point coincides with a
    /// station antenna. Initial tilts default to zero.
    pub fn new(
        stations: Vec<BaseStation>,
        pattern: AntennaPattern,
        pathloss_ground: Option<PathlossParams>,
        pathloss_uav: Option<PathlossParams>,
        grid: QuadratureGrid,
    ) -> Result<Self> {
        if stations.is_empty() {
            return Err(Error::InvalidParameter {
                field: "stations",
                reason: "at least one station is required",
            });
        }
        for (index, station) in stations.iter().enumerate() {
            station.validate()?;
            if station.id != index + 1 {
                return Err(Error::InvalidParameter {
                    field: "station id",
                    reason: "ids must run 1..N in order",
                });
            }
        }
        pattern.validate()?;
        for params in pathloss_ground.iter().chain(pathloss_uav.iter()) {
            params.validate()?;
        }
        if grid.points().iter().any(|p| p.tag.is_ground()) && pathloss_ground.is_none() {
            return Err(Error::InvalidParameter {
                field: "pathloss_ground",
                reason: "required when ground users exist",
            });
        }
        if grid.points().iter().any(|p| !p.tag.is_ground()) && pathloss_uav.is_none() {
            return Err(Error::InvalidParameter {
                field: "pathloss_uav",
                reason: "required when corridor users exist",
            });
        }
        for point in grid.points() {
            for station in &stations {
                if distance_3d(station, &point.loc) == 0.0 {
                    return Err(Error::DegenerateGeometry {
                        station: station.id,
                    });
                }
            }
        }
        let initial_tilts = TiltVector::zeros(stations.len());
        Ok(Scenario {
            stations,
            pattern,
            pathloss_ground,
            pathloss_uav,
            grid,
            initial_tilts,
        })
    }

    pub fn with_initial_tilts(mut self, tilts: TiltVector) -> Result<Self> {
        if tilts.len() != self.stations.len() {
            return Err(Error::DimensionMismatch {
                what: "initial tilts",
                expected: self.stations.len(),
                found: tilts.len(),
            });
        }
        self.initial_tilts = tilts;
        Ok(self)
    }

    pub fn stations(&self) -> &[BaseStation] {
        &self.stations
    }

    pub fn station_count(&self) -> usize {
        self.stations.len()
    }

    pub fn pattern(&self) -> &AntennaPattern {
        &self.pattern
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    pub fn initial_tilts(&self) -> &TiltVector {
        &self.initial_tilts
    }

    /// Pathloss parameters for users in a region with `tag`.
    pub fn pathloss_for(&self, tag: RegionTag) -> Option<&PathlossParams> {
        match tag {
            RegionTag::Ground => self.pathloss_ground.as_ref(),
            RegionTag::Corridor(_) => self.pathloss_uav.as_ref(),
        }
    }

    pub fn pathloss_ground(&self) -> Option<&PathlossParams> {
        self.pathloss_ground.as_ref()
    }

    pub fn pathloss_uav(&self) -> Option<&PathlossParams> {
        self.pathloss_uav.as_ref()
    }

    /// Link between grid point `point` and station index `station` (0-based).
    pub fn link(&self, point: usize, station: usize) -> Link {
        let p = &self.grid.points()[point];
        let params = self
            .pathloss_for(p.tag)
            .expect("pathloss presence checked at construction");
        Link::new(&self.stations[station], &self.pattern, params, &p.loc)
            .expect("degenerate links rejected at construction")
    }
}

/// Scenario view used by the optimizer. Links are tilt independent, so they
/// are precomputed for every (point, station) pair when the table fits in the
/// memory budget, and recomputed on demand otherwise. Both paths produce
/// bit-identical values.
#[derive(Debug, Clone)]
pub struct ChannelModel<'a> {
    scenario: &'a Scenario,
    table: Option<Vec<Link>>,
}

impl<'a> ChannelModel<'a> {
    /// Default cache budget, 1 GiB.
    pub const DEFAULT_BUDGET_BYTES: usize = 1 << 30;

    pub fn new(scenario: &'a Scenario) -> Self {
        Self::with_budget(scenario, Self::DEFAULT_BUDGET_BYTES)
    }

    pub fn with_budget(scenario: &'a Scenario, budget_bytes: usize) -> Self {
        let n = scenario.station_count();
        let needed = scenario
            .grid()
            .len()
            .saturating_mul(n)
            .saturating_mul(core::mem::size_of::<Link>());
        let table = (needed <= budget_bytes).then(|| build_table(scenario));
        ChannelModel { scenario, table }
    }

    pub fn uncached(scenario: &'a Scenario) -> Self {
        ChannelModel {
            scenario,
            table: None,
        }
    }

    pub fn is_cached(&self) -> bool {
        self.table.is_some()
    }

    #[inline]
    pub fn scenario(&self) -> &'a Scenario {
        self.scenario
    }

    #[inline]
    pub fn pattern(&self) -> &'a AntennaPattern {
        self.scenario.pattern()
    }

    #[inline]
    pub fn grid(&self) -> &'a QuadratureGrid {
        self.scenario.grid()
    }

    #[inline]
    pub fn station_count(&self) -> usize {
        self.scenario.station_count()
    }

    #[inline]
    pub fn link(&self, point: usize, station: usize) -> Link {
        match &self.table {
            Some(table) => table[point * self.scenario.station_count() + station],
            None => self.scenario.link(point, station),
        }
    }

    /// Strongest station at `point` and its RSS; ties go to the lowest index.
    pub fn best_station(&self, point: usize, tilts: &[f64]) -> (usize, f64) {
        let pattern = self.pattern();
        let mut best = (0, self.link(point, 0).rss(pattern, tilts[0]));
        for (station, &tilt) in tilts.iter().enumerate().skip(1) {
            let rss = self.link(point, station).rss(pattern, tilt);
            if rss > best.1 {
                best = (station, rss);
            }
        }
        best
    }
}

fn build_table(scenario: &Scenario) -> Vec<Link> {
    let n = scenario.station_count();
    let len = scenario.grid().len() * n;
    let mut table = alloc::vec![Link { elevation_deg: 0.0, base_dbm: 0.0 }; len];
    let fill = |point: usize, row: &mut [Link]| {
        for (station, slot) in row.iter_mut().enumerate() {
            *slot = scenario.link(point, station);
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        table
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(point, row)| fill(point, row));
    }
    #[cfg(not(feature = "parallel"))]
    table
        .chunks_mut(n)
        .enumerate()
        .for_each(|(point, row)| fill(point, row));
    table
}
