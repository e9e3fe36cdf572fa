//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid physical constant {name} = {value}")]
    InvalidConstant { name: &'static str, value: f64 },
    #[error("invalid periodic path: {0}")]
    InvalidPath(String),
}

#[derive(Debug, Error)]
pub enum SourceError {
    #[error("superluminal source: max |rdot|/c = {beta_max} (must be < 1)")]
    Superluminal { beta_max: f64 },
    #[error("source trajectories intersect: min separation {min_separation} at t = {t}")]
    SeparationViolation { min_separation: f64, t: f64 },
    #[error("sources must share one period: got {0} and {1}")]
    PeriodMismatch(f64, f64),
    #[error("ensemble needs at least one source")]
    EmptyEnsemble,
    #[error("invalid source trajectory: {0}")]
    InvalidTrajectory(String),
}

#[derive(Debug, Error)]
pub enum RetardedTimeError {
    #[error("retarded-time iteration did not converge within {iterations} iterations")]
    MaxIterationsExceeded { iterations: u32 },
    #[error("probe within collision floor of a source: distance {distance} < {floor}")]
    CollisionProximity { distance: f64, floor: f64 },
}

#[derive(Debug, Error)]
pub enum FieldError {
    #[error(transparent)]
    Retarded(#[from] RetardedTimeError),
    #[error("probe within collision floor of a singular trajectory: distance {distance} < {floor}")]
    CollisionProximity { distance: f64, floor: f64 },
    #[error("model validation failed: {0}")]
    ValidationFailure(String),
}

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("collision proximity at t = {t}: {source}")]
    Collision { t: f64, source: FieldError },
    #[error("integration step at t = {t} produced non-finite values")]
    StepRejected { t: f64 },
    #[error("model is time-dependent; energy is only defined for autonomous models")]
    NotAutonomous,
    #[error("no circular orbit solves the balance equations for these parameters")]
    NoSolution,
}

#[derive(Debug, Error)]
pub enum ActionError {
    #[error("path is not strictly feasible: {0}")]
    InfeasiblePath(String),
}

#[derive(Debug, Error)]
pub enum OrbitError {
    #[error("solver did not converge: best norm {best_norm} after {iterations} iterations")]
    NoConvergence { best_norm: f64, iterations: usize },
    #[error("backtracking could not keep the iterate feasible")]
    StalledAtInfeasibility,
    #[error("no feasible seed for the given specification: {0}")]
    InfeasibleSeed(String),
    #[error("seed specification inconsistent with the model: {0}")]
    BadSeedSpec(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Action(#[from] ActionError),
}
