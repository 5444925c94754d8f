//! Tilt optimization: analytic gradient of the performance function, decayed
//! step gradient ascent with the partition held fixed, and the alternating
//! partition/tilt loop.
//!
//! For a fixed partition the performance is a separable concave quadratic in
//! the tilts:
//!
//! ```text
//! ∂Φ/∂θ_n = (24 / θ3dB²) · Σ_{q ∈ V_n} w(q) · (elev_n(q) - θ_n)
//! ```
//!
//! The boundary terms of the derivative cancel because neighbouring cells
//! have equal RSS on their common boundary, so the same expression is the
//! gradient of the partition-optimized performance as well.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{self, Link, Tilt};
use crate::error::{Error, Result};
use crate::math;
use crate::partition::{
    check_dims, compute_partition, performance_unchecked, Partition, TiltVector,
};
use crate::scenario::ChannelModel;

/// Knobs of the alternating optimizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    /// Initial learning rate of each inner loop, in (0, 1).
    pub eta0: f64,
    /// Per-iteration learning-rate decay, in (0, 1).
    pub kappa: f64,
    /// Inner-loop relative-improvement threshold.
    pub eps1: f64,
    /// Outer-loop relative-improvement threshold.
    pub eps2: f64,
    pub max_inner_iters: usize,
    pub max_outer_iters: usize,
    /// Seed of the random initial partition.
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            eta0: 0.005,
            kappa: 0.999,
            eps1: 1e-8,
            eps2: 1e-9,
            max_inner_iters: 10_000,
            max_outer_iters: 500,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        if !open_unit(self.eta0) {
            return Err(Error::InvalidParameter {
                field: "eta0",
                reason: "must lie in (0, 1)",
            });
        }
        if !open_unit(self.kappa) {
            return Err(Error::InvalidParameter {
                field: "kappa",
                reason: "must lie in (0, 1)",
            });
        }
        if !(self.eps1 > 0.0 && self.eps1.is_finite()) {
            return Err(Error::InvalidParameter {
                field: "eps1",
                reason: "must be positive",
            });
        }
        if !(self.eps2 > 0.0 && self.eps2.is_finite()) {
            return Err(Error::InvalidParameter {
                field: "eps2",
                reason: "must be positive",
            });
        }
        if self.max_inner_iters == 0 {
            return Err(Error::InvalidParameter {
                field: "max_inner_iters",
                reason: "must be at least 1",
            });
        }
        if self.max_outer_iters == 0 {
            return Err(Error::InvalidParameter {
                field: "max_outer_iters",
                reason: "must be at least 1",
            });
        }
        Ok(())
    }

    /// Step size of inner iteration `t` (1-based): `η0·κ^t`.
    #[inline]
    pub fn learning_rate(&self, t: usize) -> f64 {
        self.eta0 * math::pow(self.kappa, t as f64)
    }
}

/// `(new - old) / |old|`; an exactly zero reference falls back to the
/// absolute change.
#[inline]
fn relative_improvement(old: f64, new: f64) -> f64 {
    let scale = math::abs(old);
    if scale > 0.0 {
        (new - old) / scale
    } else {
        new - old
    }
}

/// The links actually in use under a fixed partition, gathered in grid order.
struct FixedCells<'m> {
    model: &'m ChannelModel<'m>,
    stations: Vec<usize>,
    weights: Vec<f64>,
    links: Vec<Link>,
}

impl<'m> FixedCells<'m> {
    fn new(model: &'m ChannelModel<'m>, partition: &Partition) -> Self {
        let points = model.grid().points();
        let stations = partition.assignment().to_vec();
        let weights = points.iter().map(|p| p.weight).collect();
        let links = stations
            .iter()
            .enumerate()
            .map(|(p, &s)| model.link(p, s))
            .collect();
        FixedCells {
            model,
            stations,
            weights,
            links,
        }
    }

    /// Same arithmetic, in the same order, as `partition::performance`.
    fn phi(&self, tilts: &[f64]) -> f64 {
        let pattern = self.model.pattern();
        let mut phi = 0.0;
        for ((link, &w), &s) in self.links.iter().zip(&self.weights).zip(&self.stations) {
            phi += w * link.rss(pattern, tilts[s]);
        }
        phi
    }

    fn gradient(&self, tilts: &[f64]) -> Vec<f64> {
        let mut acc = alloc::vec![0.0; tilts.len()];
        for ((link, &w), &s) in self.links.iter().zip(&self.weights).zip(&self.stations) {
            acc[s] += w * (link.elevation_deg - tilts[s]);
        }
        let scale = 2.0 * self.model.pattern().vertical_coefficient();
        for g in &mut acc {
            *g *= scale;
        }
        acc
    }

    /// Per-station `(Σ w, Σ w·elev)`.
    fn moments(&self, n: usize) -> Vec<(f64, f64)> {
        let mut acc = alloc::vec![(0.0, 0.0); n];
        for ((link, &w), &s) in self.links.iter().zip(&self.weights).zip(&self.stations) {
            acc[s].0 += w;
            acc[s].1 += w * link.elevation_deg;
        }
        acc
    }

    fn centroids(&self, tilts: &[f64]) -> Vec<f64> {
        self.moments(tilts.len())
            .into_iter()
            .zip(tilts)
            .map(|((mass, first), &t)| if mass > 0.0 { first / mass } else { t })
            .collect()
    }
}

/// `∂Φ/∂θ_n` for every station under a fixed partition. Cells without mass
/// get a zero component.
pub fn gradient(
    model: &ChannelModel<'_>,
    partition: &Partition,
    tilts: &TiltVector,
) -> Result<Vec<f64>> {
    check_dims(model, partition, tilts)?;
    Ok(FixedCells::new(model, partition).gradient(tilts.as_slice()))
}

/// Stationary point of the fixed-partition performance: the mass-weighted
/// mean elevation angle of each cell. Cells without mass keep their tilt.
pub fn centroid_tilts(
    model: &ChannelModel<'_>,
    partition: &Partition,
    tilts: &TiltVector,
) -> Result<TiltVector> {
    check_dims(model, partition, tilts)?;
    let centroids = FixedCells::new(model, partition).centroids(tilts.as_slice());
    TiltVector::new(centroids)
}

/// Record of one inner gradient-ascent loop.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InnerTrace {
    /// Performance at loop entry.
    pub phi_start: f64,
    /// Performance after each step.
    pub phi: Vec<f64>,
    /// Euclidean norm of the gradient used by each step.
    pub grad_norm: Vec<f64>,
    /// Step size used by each step.
    pub learning_rates: Vec<f64>,
    /// True when the loop stopped on `max_inner_iters` rather than `eps1`.
    pub capped: bool,
}

impl InnerTrace {
    pub fn iterations(&self) -> usize {
        self.phi.len()
    }

    pub fn phi_end(&self) -> f64 {
        self.phi.last().copied().unwrap_or(self.phi_start)
    }
}

fn ascend(cells: &FixedCells<'_>, tilts: &mut [f64], config: &OptimizerConfig) -> InnerTrace {
    let mut trace = InnerTrace {
        phi_start: cells.phi(tilts),
        ..InnerTrace::default()
    };
    let mut phi_s = trace.phi_start;
    let mut t = 0;
    loop {
        t += 1;
        let grad = cells.gradient(tilts);
        let eta = config.learning_rate(t);
        for (theta, g) in tilts.iter_mut().zip(&grad) {
            *theta += eta * g;
        }
        let phi_e = cells.phi(tilts);
        trace.phi.push(phi_e);
        trace
            .grad_norm
            .push(math::sqrt(grad.iter().map(|g| g * g).sum()));
        trace.learning_rates.push(eta);
        if !(relative_improvement(phi_s, phi_e) >= config.eps1) {
            break;
        }
        if t >= config.max_inner_iters {
            trace.capped = true;
            break;
        }
        phi_s = phi_e;
    }
    trace
}

/// Gradient ascent on the tilts with the partition held fixed.
///
/// The step size restarts at `eta0` and is multiplied by `kappa` before every
/// step, so step `t` uses `eta0·kappa^t`. The loop runs at least once and
/// continues while the relative improvement `(Φ_e - Φ_s)/|Φ_s|` stays at or
/// above `eps1`.
pub fn gradient_ascent_inner(
    model: &ChannelModel<'_>,
    partition: &Partition,
    tilts: &TiltVector,
    config: &OptimizerConfig,
) -> Result<(TiltVector, InnerTrace)> {
    config.validate()?;
    check_dims(model, partition, tilts)?;
    let cells = FixedCells::new(model, partition);
    let mut theta = tilts.as_slice().to_vec();
    let trace = ascend(&cells, &mut theta, config);
    check_range(&theta)?;
    Ok((TiltVector::from_raw(theta), trace))
}

fn check_range(tilts: &[f64]) -> Result<()> {
    match tilts.iter().position(|&t| Tilt::new(t).is_err()) {
        Some(station) => Err(Error::TiltOutOfRange {
            station: station + 1,
            tilt: tilts[station],
        }),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Relative outer improvement fell below `eps2`.
    Threshold,
    /// `max_outer_iters` reached.
    Cap,
}

/// One pass of re-partitioning followed by an inner loop.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterRecord {
    /// Performance entering the iteration.
    pub phi_old: f64,
    /// Performance right after re-partitioning.
    pub phi_partitioned: f64,
    /// Performance after the inner loop.
    pub phi_new: f64,
    pub inner: InnerTrace,
    /// Tilts after the inner loop.
    pub tilts: Vec<f64>,
    /// Largest distance between a tilt and its cell's mean elevation angle,
    /// over cells with mass, after the inner loop.
    pub centroid_gap_deg: f64,
    /// Mass of each cell during the inner loop.
    pub cell_masses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTrace {
    /// Performance of the initial (random) partition and tilts.
    pub initial_phi: f64,
    pub outer: Vec<OuterRecord>,
    /// Performance of the returned tilts under their optimal partition.
    pub final_phi: f64,
    pub termination: Termination,
}

impl ConvergenceTrace {
    /// Initial performance followed by the performance after every outer
    /// iteration.
    pub fn outer_phi(&self) -> Vec<f64> {
        core::iter::once(self.initial_phi)
            .chain(self.outer.iter().map(|o| o.phi_new))
            .collect()
    }

    pub fn outer_iterations(&self) -> usize {
        self.outer.len()
    }

    pub fn inner_iterations(&self) -> usize {
        self.outer.iter().map(|o| o.inner.iterations()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VatOutcome {
    pub tilts: TiltVector,
    /// Optimal partition for the returned tilts.
    pub partition: Partition,
    pub trace: ConvergenceTrace,
}

/// Each grid point assigned to a uniformly drawn station.
pub fn random_partition(points: usize, stations: usize, seed: u64) -> Partition {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let assignment = (0..points).map(|_| rng.random_range(0..stations)).collect();
    Partition::new(assignment, stations).expect("indices drawn below the station count")
}

/// Alternating optimization of the cell partition and the vertical tilts.
///
/// Starts from the scenario's initial tilts and a seeded random partition,
/// then repeats: optimal re-partition, inner gradient ascent. Stops once the
/// relative improvement over an outer iteration drops below `eps2` or after
/// `max_outer_iters` iterations. The returned partition is re-optimized for
/// the final tilts.
pub fn bs_vat(model: &ChannelModel<'_>, config: &OptimizerConfig) -> Result<VatOutcome> {
    config.validate()?;
    let scenario = model.scenario();
    let n = model.station_count();
    let mut tilts = scenario.initial_tilts().clone();
    let mut partition = random_partition(model.grid().len(), n, config.seed);

    let initial_phi = performance_unchecked(model, partition.assignment(), tilts.as_slice());
    let mut phi_old = initial_phi;
    let mut outer = Vec::new();
    let termination = loop {
        partition = compute_partition(model, &tilts)?;
        let cells = FixedCells::new(model, &partition);
        let phi_partitioned = cells.phi(tilts.as_slice());

        let mut theta = tilts.into_inner();
        let inner = ascend(&cells, &mut theta, config);
        check_range(&theta)?;
        let phi_new = inner.phi_end();

        let moments = cells.moments(n);
        let centroid_gap_deg = theta
            .iter()
            .zip(&moments)
            .filter(|(_, m)| m.0 > 0.0)
            .map(|(&t, &(mass, first))| math::abs(t - first / mass))
            .fold(0.0, f64::max);
        let cell_masses = moments.iter().map(|m| m.0).collect();

        outer.push(OuterRecord {
            phi_old,
            phi_partitioned,
            phi_new,
            inner,
            tilts: theta.clone(),
            centroid_gap_deg,
            cell_masses,
        });
        tilts = TiltVector::from_raw(theta);

        if !(relative_improvement(phi_old, phi_new) >= config.eps2) {
            break Termination::Threshold;
        }
        if outer.len() >= config.max_outer_iters {
            break Termination::Cap;
        }
        phi_old = phi_new;
    };

    let partition = compute_partition(model, &tilts)?;
    let final_phi = performance_unchecked(model, partition.assignment(), tilts.as_slice());
    Ok(VatOutcome {
        tilts,
        partition,
        trace: ConvergenceTrace {
            initial_phi,
            outer,
            final_phi,
            termination,
        },
    })
}

/// Compares the analytic gradient with central differences of the
/// performance function, partition frozen at the optimum for `tilts`.
///
/// The numerical side is evaluated from the closed-form RSS of every point
/// (not the cached links), and the difference `Φ(θ+h) - Φ(θ-h)` is accumulated
/// point by point, which is the same sum reordered so rounding scales with the
/// change rather than with `|Φ|`. Returns the largest relative error over
/// stations whose analytic component exceeds `1e-12` in magnitude; a station
/// below that whose numerical component exceeds `1e-9` counts as an infinite
/// error.
pub fn finite_diff_check(
    model: &ChannelModel<'_>,
    tilts: &TiltVector,
    step_deg: f64,
) -> Result<f64> {
    if !(step_deg > 0.0 && step_deg.is_finite()) {
        return Err(Error::InvalidParameter {
            field: "step",
            reason: "must be positive",
        });
    }
    let partition = compute_partition(model, tilts)?;
    let analytic = gradient(model, &partition, tilts)?;

    let scenario = model.scenario();
    let pattern = scenario.pattern();
    let mut numeric = alloc::vec![0.0; tilts.len()];
    for (point, &s) in scenario.grid().points().iter().zip(partition.assignment()) {
        let bs = &scenario.stations()[s];
        let params = scenario
            .pathloss_for(point.tag)
            .expect("pathloss presence checked at construction");
        let theta = tilts.as_slice()[s];
        let up = channel::rss(
            bs,
            Tilt::new(theta + step_deg)?,
            pattern,
            params,
            &point.loc,
        )?;
        let down = channel::rss(
            bs,
            Tilt::new(theta - step_deg)?,
            pattern,
            params,
            &point.loc,
        )?;
        numeric[s] += point.weight * (up - down);
    }

    let mut worst: f64 = 0.0;
    for (a, d) in analytic.iter().zip(&numeric) {
        let fd = d / (2.0 * step_deg);
        if math::abs(*a) > 1e-12 {
            worst = worst.max(math::abs(a - fd) / math::abs(*a));
        } else if math::abs(fd) > 1e-9 {
            worst = f64::INFINITY;
        }
    }
    Ok(worst)
}
