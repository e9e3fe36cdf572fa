//! Physical constants of the model.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::CoreError;

/// Constants of the test particle and of the medium.
///
/// The default nondimensional system has m = q = c = 1 and eps0 = 1/(4π),
/// so the Coulomb prefactor q_i/(4π eps0) reduces to q_i.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Speed of light.
    pub c: f64,
    /// Vacuum permittivity.
    pub eps0: f64,
    /// Test-particle mass.
    pub m: f64,
    /// Test-particle charge.
    pub q: f64,
}

impl PhysicalConstants {
    pub fn new(c: f64, eps0: f64, m: f64, q: f64) -> Result<Self, CoreError> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(CoreError::InvalidConstant { name: "c", value: c });
        }
        if !(eps0 > 0.0 && eps0.is_finite()) {
            return Err(CoreError::InvalidConstant { name: "eps0", value: eps0 });
        }
        if !(m > 0.0 && m.is_finite()) {
            return Err(CoreError::InvalidConstant { name: "m", value: m });
        }
        if q == 0.0 || !q.is_finite() {
            return Err(CoreError::InvalidConstant { name: "q", value: q });
        }
        Ok(Self { c, eps0, m, q })
    }

    /// Nondimensional defaults: m = q = c = 1, eps0 = 1/(4π).
    pub fn nondimensional() -> Self {
        Self { c: 1.0, eps0: 1.0 / (4.0 * PI), m: 1.0, q: 1.0 }
    }

    /// Same nondimensional system with a different speed of light.
    pub fn nondimensional_with_c(c: f64) -> Self {
        Self { c, ..Self::nondimensional() }
    }

    /// Coulomb prefactor q_src / (4π eps0) of a source charge.
    pub fn coulomb_prefactor(&self, source_charge: f64) -> f64 {
        source_charge / (4.0 * PI * self.eps0)
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::nondimensional()
    }
}
