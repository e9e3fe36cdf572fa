//! T-periodic source trajectories and the retarded-time solver.

use crate::error::{RetardedTimeError, SourceError};
use crate::vec3::Vec3;
use std::f64::consts::PI;

const BETA_MAX_LIMIT: f64 = 1.0 - 1e-9;
const SPEED_SCAN_SAMPLES: usize = 4096;
const SEPARATION_SAMPLES: usize = 1024;

/// One Fourier harmonic of a trajectory: a cos(jωt) + b sin(jωt) per coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harmonic {
    pub cos: Vec3,
    pub sin: Vec3,
}

/// A T-periodic source path r(t) given by a truncated Fourier series.
///
/// The representation is smooth and exactly periodic, so the C^2
/// requirement on sources holds by construction. Construction rejects
/// trajectories with max |rdot| / c too close to 1.
#[derive(Debug, Clone)]
pub struct SourceTrajectory {
    period: f64,
    mean: Vec3,
    harmonics: Vec<Harmonic>,
    c: f64,
    beta_max: f64,
    collision_floor: f64,
    max_radius: f64,
}

impl SourceTrajectory {
    pub fn new(
        period: f64,
        mean: Vec3,
        harmonics: Vec<Harmonic>,
        c: f64,
    ) -> Result<Self, SourceError> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(SourceError::InvalidTrajectory(format!(
                "period must be positive, got {period}"
            )));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(SourceError::InvalidTrajectory(format!(
                "speed of light must be positive, got {c}"
            )));
        }
        let mut traj = Self {
            period,
            mean,
            harmonics,
            c,
            beta_max: 0.0,
            collision_floor: 0.0,
            max_radius: 0.0,
        };
        let max_speed = traj.estimate_max_speed();
        traj.beta_max = max_speed / c;
        if traj.beta_max >= BETA_MAX_LIMIT {
            return Err(SourceError::Superluminal { beta_max: traj.beta_max });
        }
        let (diameter, max_radius) = traj.scan_geometry();
        traj.max_radius = max_radius;
        // 1e-9 x bounding-box diameter; a tiny absolute fallback keeps the
        // floor positive for point-like (static) sources.
        traj.collision_floor =
            (1e-9 * diameter).max(1e-12 * (1.0 + mean.norm() + diameter));
        Ok(traj)
    }

    /// Static source fixed at `point`.
    pub fn fixed(period: f64, point: Vec3, c: f64) -> Result<Self, SourceError> {
        Self::new(period, point, Vec::new(), c)
    }

    /// Convenience: one harmonic a cos(ωt) + b sin(ωt) around `mean`.
    pub fn single_harmonic(
        period: f64,
        mean: Vec3,
        cos: Vec3,
        sin: Vec3,
        c: f64,
    ) -> Result<Self, SourceError> {
        Self::new(period, mean, vec![Harmonic { cos, sin }], c)
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn speed_of_light(&self) -> f64 {
        self.c
    }

    /// max_t |rdot(t)| / c, strictly below 1.
    pub fn beta_max(&self) -> f64 {
        self.beta_max
    }

    pub fn collision_floor(&self) -> f64 {
        self.collision_floor
    }

    /// max_t |r(t)| over a fine sample, used for far-field radii.
    pub fn max_radius(&self) -> f64 {
        self.max_radius
    }

    /// Position, velocity and acceleration at time t (exactly T-periodic).
    pub fn eval(&self, t: f64) -> (Vec3, Vec3, Vec3) {
        let omega = 2.0 * PI / self.period;
        let mut r = self.mean;
        let mut rdot = Vec3::zero();
        let mut rddot = Vec3::zero();
        for (idx, h) in self.harmonics.iter().enumerate() {
            let w = (idx + 1) as f64 * omega;
            let (s, cth) = (w * t).sin_cos();
            r += h.cos * cth + h.sin * s;
            rdot += h.sin * (w * cth) - h.cos * (w * s);
            rddot += (h.cos * cth + h.sin * s) * (-w * w);
        }
        (r, rdot, rddot)
    }

    pub fn position(&self, t: f64) -> Vec3 {
        self.eval(t).0
    }

    /// Retarded time t_i with t_i = t - |x - r(t_i)| / c, by fixed-point
    /// iteration; the contraction factor is bounded by beta_max.
    pub fn retarded_time(
        &self,
        t: f64,
        x: Vec3,
        tol: f64,
    ) -> Result<RetardedSolve, RetardedTimeError> {
        solve_retarded_time(
            |s| self.position(s),
            self.beta_max,
            self.c,
            self.period,
            t,
            x,
            tol,
            self.collision_floor,
        )
    }

    /// Default retarded-time tolerance, 1e-12 T.
    pub fn default_tol(&self) -> f64 {
        1e-12 * self.period
    }

    fn estimate_max_speed(&self) -> f64 {
        let speed_sq = |t: f64| self.eval(t).1.norm_squared();
        let mut best_t = 0.0;
        let mut best = 0.0f64;
        for k in 0..SPEED_SCAN_SAMPLES {
            let t = k as f64 * self.period / SPEED_SCAN_SAMPLES as f64;
            let s = speed_sq(t);
            if s > best {
                best = s;
                best_t = t;
            }
        }
        let dt = self.period / SPEED_SCAN_SAMPLES as f64;
        golden_section_max(&speed_sq, best_t - dt, best_t + dt)
            .max(best)
            .sqrt()
    }

    fn scan_geometry(&self) -> (f64, f64) {
        let mut min = [f64::INFINITY; 3];
        let mut max = [f64::NEG_INFINITY; 3];
        let mut max_radius = 0.0f64;
        for k in 0..SPEED_SCAN_SAMPLES {
            let t = k as f64 * self.period / SPEED_SCAN_SAMPLES as f64;
            let r = self.position(t);
            let a = r.to_array();
            for i in 0..3 {
                min[i] = min[i].min(a[i]);
                max[i] = max[i].max(a[i]);
            }
            max_radius = max_radius.max(r.norm());
        }
        let diameter = ((max[0] - min[0]).powi(2)
            + (max[1] - min[1]).powi(2)
            + (max[2] - min[2]).powi(2))
        .sqrt();
        (diameter, max_radius)
    }
}

/// Result of the retarded-time fixed point.
#[derive(Debug, Clone, Copy)]
pub struct RetardedSolve {
    pub t_ret: f64,
    pub iterations: u32,
    /// |x - r(t_ret)| at the solution.
    pub distance: f64,
}

/// Fixed-point solver t_{k+1} = t - |x - r(t_k)| / c for an arbitrary
/// position function. `time_scale` sizes the iteration budget (the
/// source period for periodic motions).
#[allow(clippy::too_many_arguments)]
pub fn solve_retarded_time(
    position: impl Fn(f64) -> Vec3,
    beta_max: f64,
    c: f64,
    time_scale: f64,
    t: f64,
    x: Vec3,
    tol: f64,
    collision_floor: f64,
) -> Result<RetardedSolve, RetardedTimeError> {
    assert!(tol > 0.0, "tolerance must be positive");
    let max_iters = retarded_iteration_budget(beta_max, tol, time_scale);

    let mut t_ret = t - (x - position(t)).norm() / c;
    let mut iterations = 0u32;
    loop {
        let next = t - (x - position(t_ret)).norm() / c;
        iterations += 1;
        let step = (next - t_ret).abs();
        t_ret = next;
        if step <= tol {
            break;
        }
        if iterations >= max_iters {
            return Err(RetardedTimeError::MaxIterationsExceeded { iterations });
        }
    }
    let distance = (x - position(t_ret)).norm();
    if distance < collision_floor {
        return Err(RetardedTimeError::CollisionProximity {
            distance,
            floor: collision_floor,
        });
    }
    Ok(RetardedSolve { t_ret, iterations, distance })
}

fn retarded_iteration_budget(beta_max: f64, tol: f64, time_scale: f64) -> u32 {
    let base = if beta_max <= 1e-12 {
        0.0
    } else {
        ((tol / time_scale).ln() / beta_max.ln()).ceil().max(0.0)
    };
    base as u32 + 64
}

/// A moving point charge.
#[derive(Debug, Clone)]
pub struct ChargeSource {
    pub trajectory: SourceTrajectory,
    pub charge: f64,
}

impl ChargeSource {
    pub fn new(trajectory: SourceTrajectory, charge: f64) -> Self {
        Self { trajectory, charge }
    }
}

/// A family of sources sharing one period, pairwise separated at all times.
#[derive(Debug, Clone)]
pub struct SourceEnsemble {
    sources: Vec<ChargeSource>,
    period: f64,
    collision_floor: f64,
    min_separation: f64,
}

impl SourceEnsemble {
    pub fn new(sources: Vec<ChargeSource>) -> Result<Self, SourceError> {
        let first = sources.first().ok_or(SourceError::EmptyEnsemble)?;
        let period = first.trajectory.period();
        for s in &sources {
            let p = s.trajectory.period();
            if (p - period).abs() > 1e-12 * period {
                return Err(SourceError::PeriodMismatch(period, p));
            }
        }

        // pairwise separation on a fine grid
        let mut min_separation = f64::INFINITY;
        let mut worst_t = 0.0;
        for k in 0..SEPARATION_SAMPLES {
            let t = k as f64 * period / SEPARATION_SAMPLES as f64;
            for i in 0..sources.len() {
                for j in i + 1..sources.len() {
                    let d = (sources[i].trajectory.position(t)
                        - sources[j].trajectory.position(t))
                    .norm();
                    if d < min_separation {
                        min_separation = d;
                        worst_t = t;
                    }
                }
            }
        }
        if sources.len() > 1 && min_separation <= 0.0 {
            return Err(SourceError::SeparationViolation {
                min_separation,
                t: worst_t,
            });
        }

        let collision_floor = sources
            .iter()
            .map(|s| s.trajectory.collision_floor())
            .fold(0.0f64, f64::max);

        Ok(Self { sources, period, collision_floor, min_separation })
    }

    pub fn sources(&self) -> &[ChargeSource] {
        &self.sources
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn collision_floor(&self) -> f64 {
        self.collision_floor
    }

    /// Min over the sample grid of inter-source distance; +inf for a
    /// single source.
    pub fn min_separation(&self) -> f64 {
        self.min_separation
    }

    /// max_i max_t |r_i(t)|, the far-field offset Theta.
    pub fn max_radius(&self) -> f64 {
        self.sources
            .iter()
            .map(|s| s.trajectory.max_radius())
            .fold(0.0f64, f64::max)
    }

    pub fn max_beta(&self) -> f64 {
        self.sources
            .iter()
            .map(|s| s.trajectory.beta_max())
            .fold(0.0f64, f64::max)
    }
}

fn golden_section_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..80 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    fc.max(fd)
}
