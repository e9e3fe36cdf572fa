//! The Lorentz force equation in momentum form and its integration.
//!
//! States carry the relativistic momentum p = m v / sqrt(1 - |v|^2/c^2),
//! so recovered velocities satisfy |v| < c for any finite p and the
//! right-hand side stays smooth.

use crate::constants::PhysicalConstants;
use crate::error::DynamicsError;
use crate::fields::ElectromagneticModel;
use crate::vec3::Vec3;
use std::f64::consts::PI;

/// Particle state (t, x, p) with relativistic momentum p.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleState {
    pub t: f64,
    pub x: Vec3,
    pub p: Vec3,
}

impl ParticleState {
    pub fn new(t: f64, x: Vec3, p: Vec3) -> Self {
        Self { t, x, p }
    }

    pub fn velocity(&self, constants: &PhysicalConstants) -> Vec3 {
        velocity_from_momentum(self.p, constants)
    }
}

/// v = c p / sqrt(m^2 c^2 + |p|^2); always |v| < c.
pub fn velocity_from_momentum(p: Vec3, constants: &PhysicalConstants) -> Vec3 {
    let mc = constants.m * constants.c;
    p * (constants.c / (mc * mc + p.norm_squared()).sqrt())
}

/// p = m v / sqrt(1 - |v|^2 / c^2); requires |v| < c.
pub fn momentum_from_velocity(v: Vec3, constants: &PhysicalConstants) -> Vec3 {
    let beta_sq = v.norm_squared() / (constants.c * constants.c);
    assert!(beta_sq < 1.0, "|v| must be below c");
    v * (constants.m / (1.0 - beta_sq).sqrt())
}

/// Right-hand side (dx/dt, dp/dt) of the Lorentz force equation:
/// dp/dt = q (E + v x B).
pub fn lorentz_rhs(
    model: &dyn ElectromagneticModel,
    state: &ParticleState,
) -> Result<(Vec3, Vec3), DynamicsError> {
    let constants = model.constants();
    let v = state.velocity(constants);
    let sample = model
        .sample(state.t, state.x)
        .map_err(|e| DynamicsError::Collision { t: state.t, source: e })?;
    let dpdt = (sample.e + v.cross(&sample.b)) * constants.q;
    Ok((v, dpdt))
}

/// Classical fixed-step RK4 on (x, p). Returns all states including the
/// initial one; `steps + 1` entries.
pub fn integrate(
    model: &dyn ElectromagneticModel,
    state0: ParticleState,
    t_end: f64,
    steps: usize,
) -> Result<Vec<ParticleState>, DynamicsError> {
    assert!(steps >= 1);
    let h = (t_end - state0.t) / steps as f64;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(state0);
    let mut s = state0;
    for _ in 0..steps {
        s = rk4_step(model, &s, h)?;
        if !s.x.is_finite() || !s.p.is_finite() {
            return Err(DynamicsError::StepRejected { t: s.t });
        }
        out.push(s);
    }
    Ok(out)
}

fn rk4_step(
    model: &dyn ElectromagneticModel,
    s: &ParticleState,
    h: f64,
) -> Result<ParticleState, DynamicsError> {
    let eval = |t: f64, x: Vec3, p: Vec3| {
        lorentz_rhs(model, &ParticleState::new(t, x, p))
    };
    let (k1x, k1p) = eval(s.t, s.x, s.p)?;
    let (k2x, k2p) = eval(s.t + 0.5 * h, s.x + k1x * (0.5 * h), s.p + k1p * (0.5 * h))?;
    let (k3x, k3p) = eval(s.t + 0.5 * h, s.x + k2x * (0.5 * h), s.p + k2p * (0.5 * h))?;
    let (k4x, k4p) = eval(s.t + h, s.x + k3x * h, s.p + k3p * h)?;
    Ok(ParticleState::new(
        s.t + h,
        s.x + (k1x + (k2x + k3x) * 2.0 + k4x) * (h / 6.0),
        s.p + (k1p + (k2p + k3p) * 2.0 + k4p) * (h / 6.0),
    ))
}

/// Conserved energy H = c sqrt(m^2 c^2 + |p|^2) + q V(x) of an
/// autonomous model.
pub fn energy(
    model: &dyn ElectromagneticModel,
    state: &ParticleState,
) -> Result<f64, DynamicsError> {
    if !model.is_autonomous() {
        return Err(DynamicsError::NotAutonomous);
    }
    let k = model.constants();
    let kinetic = k.c * ((k.m * k.c).powi(2) + state.p.norm_squared()).sqrt();
    let v = model
        .scalar_potential(state.t, state.x)
        .map_err(|e| DynamicsError::Collision { t: state.t, source: e })?;
    Ok(kinetic + k.q * v)
}

/// A circular orbit of the unforced Kepler preset, traversed k times
/// per period T.
#[derive(Debug, Clone, Copy)]
pub struct CircularOrbit {
    pub radius: f64,
    pub speed: f64,
    pub state0: ParticleState,
    /// Angular frequency 2π k / T.
    pub omega: f64,
}

impl CircularOrbit {
    /// Exact position at time t (orbit in the z = 0 plane starting on
    /// the +x axis).
    pub fn position(&self, t: f64) -> Vec3 {
        Vec3::new(
            self.radius * (self.omega * t).cos(),
            self.radius * (self.omega * t).sin(),
            0.0,
        )
    }
}

/// Solves the relativistic centripetal balance
/// m gamma v^2 / rho = alpha / rho^2 together with 2π rho / v = T / k
/// by bisection on v in (0, c). Assumes charge-to-mass ratio 1
/// (q = m), matching the Kepler preset.
pub fn kepler_circular_orbit(
    alpha: f64,
    k: u32,
    period: f64,
    constants: &PhysicalConstants,
) -> Result<CircularOrbit, DynamicsError> {
    if alpha <= 0.0 || k == 0 || period <= 0.0 {
        return Err(DynamicsError::NoSolution);
    }
    let c = constants.c;
    let m = constants.m;
    let target = 2.0 * PI * k as f64 * alpha / period;
    // f(v) = m v^3 / sqrt(1 - v^2/c^2) is increasing from 0 to infinity
    let f = |v: f64| m * v.powi(3) / (1.0 - (v / c).powi(2)).sqrt();
    let mut lo = 0.0;
    let mut hi = c * (1.0 - 1e-15);
    if f(hi) < target {
        return Err(DynamicsError::NoSolution);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let speed = 0.5 * (lo + hi);
    let omega = 2.0 * PI * k as f64 / period;
    let radius = speed / omega;
    let x0 = Vec3::new(radius, 0.0, 0.0);
    let v0 = Vec3::new(0.0, speed, 0.0);
    let p0 = momentum_from_velocity(v0, constants);
    Ok(CircularOrbit {
        radius,
        speed,
        state0: ParticleState::new(0.0, x0, p0),
        omega,
    })
}
