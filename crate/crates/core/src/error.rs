use alloc::string::String;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    InvalidAngularMomentum(f64),
    InvalidIndex { a: usize, b: usize, n: usize },
    NotHermitian(f64),
    DimensionMismatch { expected: usize, found: usize },
    InvalidParameter(&'static str),
    GridTooCoarse { dt: f64, limit: f64 },
    NoLevels,
    PerturbationTooStrong { time: f64, component: usize },
    CubicFailure,
    NoConvergence { iterations: usize },
    NotSymmetricGroundState(f64),
    InvariantBreach { name: &'static str, value: f64, time: f64 },
    StepSizeUnstable(f64),
    InsufficientWindow,
    GridMismatch,
    Other(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidAngularMomentum(j) => {
                write!(f, "angular momentum {j} is not a non-negative half-integer")
            }
            Error::InvalidIndex { a, b, n } => {
                write!(f, "invalid N operator indices ({a}, {b}) for dimension {n}")
            }
            Error::NotHermitian(d) => write!(f, "operator is not Hermitian (max deviation {d:e})"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::GridTooCoarse { dt, limit } => {
                write!(f, "time step {dt} a.u. does not resolve the carrier (limit {limit} a.u.)")
            }
            Error::NoLevels => write!(f, "intermediate level list is empty"),
            Error::PerturbationTooStrong { time, component } => write!(
                f,
                "perturbation too strong: amplitude of component {component} collapsed at t = {time} a.u."
            ),
            Error::CubicFailure => write!(f, "cubic solver failed to find three real roots"),
            Error::NoConvergence { iterations } => {
                write!(f, "self-consistent ground state did not converge in {iterations} iterations")
            }
            Error::NotSymmetricGroundState(r) => {
                write!(f, "lowest state is not of the (c, d, d, c) form (residual {r:e})")
            }
            Error::InvariantBreach { name, value, time } => {
                write!(f, "invariant {name} breached: {value:e} at t = {time} a.u.")
            }
            Error::StepSizeUnstable(d) => {
                write!(f, "step halving changed the endpoint by {d:e}")
            }
            Error::InsufficientWindow => write!(f, "post-pulse window too short for the phase average"),
            Error::GridMismatch => write!(f, "trajectories are sampled on different grids"),
            Error::Other(s) => f.write_str(s),
        }
    }
}
