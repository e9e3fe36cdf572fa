//! Discrete closed paths on a uniform time grid.

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::spectral;
use crate::vec3::Vec3;

/// A T-periodic path x: [0, T) -> R^3 sampled at N uniform nodes.
///
/// Node N wraps to node 0; the endpoint is not duplicated. N must be
/// even and at least 8 so the spectral derivative is well defined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicPath {
    period: f64,
    nodes: Vec<Vec3>,
}

impl PeriodicPath {
    pub const MIN_NODES: usize = 8;

    pub fn new(period: f64, nodes: Vec<Vec3>) -> Result<Self, CoreError> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(CoreError::InvalidPath(format!("period must be positive, got {period}")));
        }
        let n = nodes.len();
        if n < Self::MIN_NODES || !n.is_multiple_of(2) {
            return Err(CoreError::InvalidPath(format!(
                "node count must be even and >= {}, got {n}",
                Self::MIN_NODES
            )));
        }
        if let Some(bad) = nodes.iter().find(|v| !v.is_finite()) {
            return Err(CoreError::InvalidPath(format!("non-finite node {bad:?}")));
        }
        Ok(Self { period, nodes })
    }

    /// Samples a closed curve at the N uniform node times.
    pub fn from_fn(
        period: f64,
        n: usize,
        f: impl Fn(f64) -> Vec3,
    ) -> Result<Self, CoreError> {
        let nodes = (0..n).map(|k| f(k as f64 * period / n as f64)).collect();
        Self::new(period, nodes)
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    pub fn node(&self, k: usize) -> Vec3 {
        self.nodes[k]
    }

    /// Time of node k.
    pub fn node_time(&self, k: usize) -> f64 {
        k as f64 * self.period / self.nodes.len() as f64
    }

    /// Grid spacing T/N.
    pub fn dt(&self) -> f64 {
        self.period / self.nodes.len() as f64
    }

    /// max_k |x_k - y_k| between two paths on the same grid.
    pub fn uniform_distance(&self, other: &PeriodicPath) -> f64 {
        assert_eq!(self.len(), other.len(), "paths must share the grid");
        self.nodes
            .iter()
            .zip(other.nodes.iter())
            .map(|(a, b)| (*a - *b).norm())
            .fold(0.0, f64::max)
    }

    /// Diameter of the node set (max pairwise distance).
    pub fn diameter(&self) -> f64 {
        let mut d = 0.0f64;
        for i in 0..self.nodes.len() {
            for j in i + 1..self.nodes.len() {
                d = d.max((self.nodes[i] - self.nodes[j]).norm());
            }
        }
        d
    }

    /// Path with nodes cyclically shifted by s (gauge shift in time).
    pub fn shifted(&self, s: usize) -> PeriodicPath {
        let n = self.nodes.len();
        let nodes = (0..n).map(|k| self.nodes[(k + s) % n]).collect();
        PeriodicPath { period: self.period, nodes }
    }
}

/// Node velocities by trigonometric (FFT) differentiation of each
/// coordinate; exact for trigonometric polynomials of degree < N/2.
pub fn path_velocity(path: &PeriodicPath) -> Vec<Vec3> {
    spectral::derivative_vec3(path.nodes(), path.period())
}

/// Discrete proxy for the sup of |xdot|: max node speed.
pub fn max_speed(path: &PeriodicPath) -> f64 {
    path_velocity(path).iter().map(Vec3::norm).fold(0.0, f64::max)
}
