use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("detector site {detector} is at the edge of a chain of {length} sites; model I needs both neighbours")]
    DetectorAtEdge { detector: usize, length: usize },

    #[error("hermitian propagator requested for a non-hermitian matrix (max |M - M^H| = {deviation:e})")]
    NonHermitian { deviation: f64 },

    #[error("matrix 1-norm {norm:e} needs {squarings} squarings, above the cap of {cap}")]
    ScalingOverflow {
        norm: f64,
        squarings: u32,
        cap: u32,
    },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("singular matrix in linear solve")]
    Singular,

    #[error(
        "ballistic front reaches the chain boundary: 2*n_max*tau = {reach} but only {room} sites of room (n_max = {n_max}, tau = {tau})"
    )]
    BoundaryContamination {
        n_max: usize,
        tau: f64,
        reach: f64,
        room: f64,
    },

    #[error("restart period r = {r} exceeds the {available} available base entries")]
    RestartTooLong { r: usize, available: usize },

    #[error("never detected under restart period r = {r}: P_det(r) = 0, mean first-detection time is infinite")]
    NeverDetected { r: usize },

    #[error("instant absorption at t_r = {t_r}: window survival is zero, alpha is infinite")]
    InstantAbsorption { t_r: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("no finite objective value on the grid")]
    NoFiniteObjective,

    #[error("numerical failure: {0}")]
    Numerical(String),
}
