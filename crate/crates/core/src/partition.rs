//! RSS-optimal cell partitions and the performance function.
//!
//! The performance of a partition is the density-weighted mean RSS in dBm,
//! `Φ = Σ_q w(q)·RSS^(V(q))(q)`, accumulated sequentially in grid order so the
//! value never depends on how the per-point work was scheduled.

use alloc::vec::Vec;

use crate::channel::Tilt;
use crate::error::{Error, Result};
use crate::grid::Population;
use crate::scenario::ChannelModel;

/// One tilt per station, degrees, indexed by 0-based station index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TiltVector(Vec<f64>);

impl TiltVector {
    pub fn new(tilts: Vec<f64>) -> Result<Self> {
        for &t in &tilts {
            Tilt::new(t)?;
        }
        Ok(TiltVector(tilts))
    }

    pub fn zeros(n: usize) -> Self {
        TiltVector(alloc::vec![0.0; n])
    }

    /// Wraps optimizer iterates; range is checked by the caller.
    pub(crate) fn from_raw(tilts: Vec<f64>) -> Self {
        TiltVector(tilts)
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, station: usize) -> Option<Tilt> {
        self.0
            .get(station)
            .map(|&t| Tilt::new(t).expect("tilts are range checked"))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Serving station (0-based index) of every grid point.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition(Vec<usize>);

impl Partition {
    pub fn new(assignment: Vec<usize>, station_count: usize) -> Result<Self> {
        if assignment.iter().any(|&s| s >= station_count) {
            return Err(Error::InvalidParameter {
                field: "partition",
                reason: "station index out of range",
            });
        }
        Ok(Partition(assignment))
    }

    /// Every point served by station 0.
    pub fn uniform(len: usize) -> Self {
        Partition(alloc::vec![0; len])
    }

    #[inline]
    pub fn assignment(&self) -> &[usize] {
        &self.0
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Probability mass of each station's cell.
    pub fn cell_masses(&self, model: &ChannelModel<'_>) -> Vec<f64> {
        let mut masses = alloc::vec![0.0; model.station_count()];
        for (point, &station) in model.grid().points().iter().zip(&self.0) {
            masses[station] += point.weight;
        }
        masses
    }
}

pub(crate) fn check_dims(
    model: &ChannelModel<'_>,
    partition: &Partition,
    tilts: &TiltVector,
) -> Result<()> {
    if partition.len() != model.grid().len() {
        return Err(Error::DimensionMismatch {
            what: "partition",
            expected: model.grid().len(),
            found: partition.len(),
        });
    }
    if tilts.len() != model.station_count() {
        return Err(Error::DimensionMismatch {
            what: "tilts",
            expected: model.station_count(),
            found: tilts.len(),
        });
    }
    if partition
        .assignment()
        .iter()
        .any(|&s| s >= model.station_count())
    {
        return Err(Error::InvalidParameter {
            field: "partition",
            reason: "station index out of range",
        });
    }
    Ok(())
}

/// RSS-maximizing serving station for every grid point, lowest index on ties.
pub fn compute_partition(model: &ChannelModel<'_>, tilts: &TiltVector) -> Result<Partition> {
    if tilts.len() != model.station_count() {
        return Err(Error::DimensionMismatch {
            what: "tilts",
            expected: model.station_count(),
            found: tilts.len(),
        });
    }
    let tilts = tilts.as_slice();
    let n_points = model.grid().len();
    #[cfg(feature = "parallel")]
    let assignment: Vec<usize> = {
        use rayon::prelude::*;
        (0..n_points)
            .into_par_iter()
            .map(|p| model.best_station(p, tilts).0)
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let assignment: Vec<usize> = (0..n_points)
        .map(|p| model.best_station(p, tilts).0)
        .collect();
    Ok(Partition(assignment))
}

/// RSS of every grid point from its assigned station, dBm.
pub fn rss_field(
    model: &ChannelModel<'_>,
    partition: &Partition,
    tilts: &TiltVector,
) -> Result<Vec<f64>> {
    check_dims(model, partition, tilts)?;
    let pattern = model.pattern();
    Ok(partition
        .assignment()
        .iter()
        .enumerate()
        .map(|(p, &s)| model.link(p, s).rss(pattern, tilts.as_slice()[s]))
        .collect())
}

/// Performance function: density-weighted mean RSS in dBm.
pub fn performance(
    model: &ChannelModel<'_>,
    partition: &Partition,
    tilts: &TiltVector,
) -> Result<f64> {
    check_dims(model, partition, tilts)?;
    Ok(performance_unchecked(
        model,
        partition.assignment(),
        tilts.as_slice(),
    ))
}

pub(crate) fn performance_unchecked(
    model: &ChannelModel<'_>,
    assignment: &[usize],
    tilts: &[f64],
) -> f64 {
    let pattern = model.pattern();
    let mut phi = 0.0;
    for ((p, point), &s) in model.grid().points().iter().enumerate().zip(assignment) {
        phi += point.weight * model.link(p, s).rss(pattern, tilts[s]);
    }
    phi
}

/// Mean RSS over one population, weights renormalized to that population.
pub fn population_mean(
    model: &ChannelModel<'_>,
    partition: &Partition,
    tilts: &TiltVector,
    population: Population,
) -> Result<f64> {
    let field = rss_field(model, partition, tilts)?;
    let (mut mass, mut sum) = (0.0, 0.0);
    for (point, rss) in model.grid().points().iter().zip(&field) {
        if population.contains(point.tag) {
            mass += point.weight;
            sum += point.weight * rss;
        }
    }
    if mass > 0.0 {
        Ok(sum / mass)
    } else {
        Err(Error::EmptyPopulation)
    }
}

/// Empirical CDF of the served RSS over one population.
pub fn rss_cdf(
    model: &ChannelModel<'_>,
    partition: &Partition,
    tilts: &TiltVector,
    population: Population,
) -> Result<Vec<(f64, f64)>> {
    let field = rss_field(model, partition, tilts)?;
    let samples = model
        .grid()
        .points()
        .iter()
        .zip(field)
        .filter(|(p, _)| population.contains(p.tag))
        .map(|(p, rss)| (rss, p.weight));
    crate::cdf::weighted_cdf(samples)
}
