//! User regions, the ground/UAV mixture density and its midpoint-rule
//! discretization.

use alloc::vec::Vec;

use crate::channel::Location;
use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegionTag {
    Ground,
    /// 1-based corridor number.
    Corridor(u32),
}

impl RegionTag {
    #[inline]
    pub fn is_ground(self) -> bool {
        matches!(self, RegionTag::Ground)
    }

    #[inline]
    pub fn population(self) -> Population {
        match self {
            RegionTag::Ground => Population::Ground,
            RegionTag::Corridor(_) => Population::Uav,
        }
    }
}

/// Selects grid points by user type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Population {
    Ground,
    Uav,
    All,
}

impl Population {
    #[inline]
    pub fn contains(self, tag: RegionTag) -> bool {
        match self {
            Population::All => true,
            p => tag.population() == p,
        }
    }
}

/// Axis-aligned rectangle of users flying (or standing) at one height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectRegion {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub height: f64,
    pub tag: RegionTag,
}

impl RectRegion {
    pub fn new(x: (f64, f64), y: (f64, f64), height: f64, tag: RegionTag) -> Result<Self> {
        let region = RectRegion {
            x_min: x.0,
            x_max: x.1,
            y_min: y.0,
            y_max: y.1,
            height,
            tag,
        };
        region.validate()?;
        Ok(region)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max, self.height]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter {
                field: "region",
                reason: "bounds and height must be finite",
            });
        }
        if !(self.x_min < self.x_max) {
            return Err(Error::InvalidParameter {
                field: "region x range",
                reason: "x_min must be below x_max",
            });
        }
        if !(self.y_min < self.y_max) {
            return Err(Error::InvalidParameter {
                field: "region y range",
                reason: "y_min must be below y_max",
            });
        }
        if self.height < 0.0 {
            return Err(Error::InvalidParameter {
                field: "region height",
                reason: "must be non-negative",
            });
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min) * (self.y_max - self.y_min)
    }

    pub fn contains(&self, loc: &Location) -> bool {
        (self.x_min..=self.x_max).contains(&loc.x)
            && (self.y_min..=self.y_max).contains(&loc.y)
            && loc.height == self.height
    }
}

/// `λ = α·λ_G + (1 - α)·λ_U` with both components uniform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureDensity {
    alpha: f64,
}

impl MixtureDensity {
    pub fn new(alpha: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&alpha) {
            Ok(MixtureDensity { alpha })
        } else {
            Err(Error::InvalidParameter {
                field: "alpha",
                reason: "must lie in [0, 1]",
            })
        }
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn mass(&self, population: Population) -> f64 {
        match population {
            Population::Ground => self.alpha,
            Population::Uav => 1.0 - self.alpha,
            Population::All => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub loc: Location,
    /// Probability mass of the lattice cell.
    pub weight: f64,
    pub tag: RegionTag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    points: Vec<GridPoint>,
    resolution_ground: f64,
    resolution_corridor: f64,
}

impl QuadratureGrid {
    /// Wraps explicit points, e.g. for hand-built test grids. Weights must be
    /// non-negative and sum to one within `1e-12`.
    pub fn from_points(points: Vec<GridPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter {
                field: "grid",
                reason: "must contain at least one point",
            });
        }
        if points
            .iter()
            .any(|p| !(p.weight >= 0.0 && p.weight.is_finite()))
        {
            return Err(Error::InvalidParameter {
                field: "grid weight",
                reason: "must be finite and non-negative",
            });
        }
        let total = math::compensated_sum(points.iter().map(|p| p.weight));
        if math::abs(total - 1.0) > 1e-12 {
            return Err(Error::InvalidParameter {
                field: "grid weights",
                reason: "must sum to one",
            });
        }
        Ok(QuadratureGrid {
            points,
            resolution_ground: 0.0,
            resolution_corridor: 0.0,
        })
    }

    #[inline]
    pub fn points(&self) -> &[GridPoint] {
        &self.points
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn resolution_ground(&self) -> f64 {
        self.resolution_ground
    }

    pub fn resolution_corridor(&self) -> f64 {
        self.resolution_corridor
    }

    /// Total weight of the points in `population` (compensated summation).
    pub fn mass(&self, population: Population) -> f64 {
        math::compensated_sum(
            self.points
                .iter()
                .filter(|p| population.contains(p.tag))
                .map(|p| p.weight),
        )
    }
}

/// Number of cells and cell width along one side of a region.
fn lattice_axis(lo: f64, hi: f64, resolution: f64) -> (usize, f64) {
    let count = math::ceil((hi - lo) / resolution);
    if !(count >= 1.0 && count.is_finite()) {
        return (0, 0.0);
    }
    let count = count as usize;
    (count, (hi - lo) / count as f64)
}

/// Midpoint-rule discretization of `λ` over `regions`.
///
/// Each region becomes a uniform lattice of cell centers with spacing at most
/// the resolution of its kind. Ground cells share mass `α` in proportion to
/// their area over the union of ground regions, corridor cells share `1 - α`
/// over the union of corridors. A population with zero mass is left out of
/// the grid entirely. Points are emitted row-major per region, regions in the
/// given order.
pub fn discretize(
    regions: &[RectRegion],
    density: MixtureDensity,
    resolution_ground: f64,
    resolution_corridor: f64,
) -> Result<QuadratureGrid> {
    for (res, field) in [
        (resolution_ground, "ground resolution"),
        (resolution_corridor, "corridor resolution"),
    ] {
        if !(res > 0.0) {
            return Err(Error::InvalidParameter {
                field,
                reason: "must be positive",
            });
        }
    }
    for region in regions {
        region.validate()?;
    }

    let alpha = density.alpha();
    let has_ground = regions.iter().any(|r| r.tag.is_ground());
    let has_corridor = regions.iter().any(|r| !r.tag.is_ground());
    if alpha > 0.0 && !has_ground {
        return Err(Error::InvalidMixture { missing: "ground" });
    }
    if alpha < 1.0 && !has_corridor {
        return Err(Error::InvalidMixture {
            missing: "corridor",
        });
    }

    let area_of = |pop: Population| -> f64 {
        regions
            .iter()
            .filter(|r| pop.contains(r.tag))
            .map(RectRegion::area)
            .sum()
    };
    let ground_area = area_of(Population::Ground);
    let corridor_area = area_of(Population::Uav);

    let mut points = Vec::new();
    for (index, region) in regions.iter().enumerate() {
        let population = region.tag.population();
        let mass = density.mass(population);
        if mass == 0.0 {
            continue;
        }
        let (resolution, total_area) = match population {
            Population::Ground => (resolution_ground, ground_area),
            _ => (resolution_corridor, corridor_area),
        };
        let (nx, dx) = lattice_axis(region.x_min, region.x_max, resolution);
        let (ny, dy) = lattice_axis(region.y_min, region.y_max, resolution);
        if nx == 0 || ny == 0 {
            return Err(Error::EmptyRegion { region: index });
        }
        let weight = mass * (dx * dy) / total_area;
        points.reserve(nx * ny);
        for j in 0..ny {
            let y = region.y_min + (j as f64 + 0.5) * dy;
            for i in 0..nx {
                let x = region.x_min + (i as f64 + 0.5) * dx;
                points.push(GridPoint {
                    loc: Location::new(x, y, region.height),
                    weight,
                    tag: region.tag,
                });
            }
        }
    }

    let total = math::compensated_sum(points.iter().map(|p| p.weight));
    for p in &mut points {
        p.weight /= total;
    }
    Ok(QuadratureGrid {
        points,
        resolution_ground,
        resolution_corridor,
    })
}
