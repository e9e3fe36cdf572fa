//! Numerical toolkit for T-periodic orbits of a relativistic charged
//! particle: Liénard-Wiechert fields of periodically moving charges,
//! the Lorentz force equation in momentum form, the discrete action
//! functional, and periodic-orbit solvers (shooting and collocation).

pub mod action;
pub mod cli;
pub mod config;
pub mod constants;
pub mod dynamics;
pub mod error;
pub mod fields;
pub mod orbit;
pub mod path;
pub mod sources;
pub mod spectral;
pub mod vec3;

pub use constants::PhysicalConstants;
pub use path::PeriodicPath;
pub use vec3::Vec3;
