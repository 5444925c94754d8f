use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A station and a user location coincide in 3D; the pathloss is singular.
    DegenerateGeometry { station: usize },
    /// A region produced no lattice points at the requested resolution.
    EmptyRegion { region: usize },
    /// The mixture puts mass on a population that has no region.
    InvalidMixture { missing: &'static str },
    /// A value violates a documented invariant.
    InvalidParameter {
        field: &'static str,
        reason: &'static str,
    },
    /// The selected population carries no probability mass.
    EmptyPopulation,
    /// Lengths of two collections that must agree do not.
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    /// An optimizer iterate left the physical tilt range.
    TiltOutOfRange { station: usize, tilt: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DegenerateGeometry { station } => {
                write!(f, "user location coincides with station {station} in 3D")
            }
            Error::EmptyRegion { region } => write!(f, "region {region} has no grid points"),
            Error::InvalidMixture { missing } => {
                write!(
                    f,
                    "mixture puts mass on the {missing} population but no {missing} region exists"
                )
            }
            Error::InvalidParameter { field, reason } => write!(f, "invalid {field}: {reason}"),
            Error::EmptyPopulation => f.write_str("selected population has no mass"),
            Error::DimensionMismatch {
                what,
                expected,
                found,
            } => {
                write!(f, "{what}: expected {expected} entries, found {found}")
            }
            Error::TiltOutOfRange { station, tilt } => {
                write!(f, "tilt of station {station} left [-90, 90]: {tilt}")
            }
        }
    }
}

impl core::error::Error for Error {}
