//! Electromagnetic models: Liénard-Wiechert ensembles, the forced
//! relativistic Kepler potential, user-supplied analytic potentials,
//! and sampled checkers for the structural assumptions (V), (AV1), (AV2).

use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constants::PhysicalConstants;
use crate::error::FieldError;
use crate::sources::{ChargeSource, SourceEnsemble, SourceTrajectory};
use crate::vec3::Vec3;

/// Potentials and fields at one spacetime point.
#[derive(Debug, Clone, Copy)]
pub struct FieldSample {
    pub v: f64,
    pub a: Vec3,
    pub e: Vec3,
    pub b: Vec3,
}

impl FieldSample {
    pub fn zero() -> Self {
        Self { v: 0.0, a: Vec3::zero(), e: Vec3::zero(), b: Vec3::zero() }
    }
}

/// An evaluator bundle (V, A, E, B) with its constants and singular set.
///
/// E and B must be consistent with V and A through E = -grad V - dA/dt,
/// B = curl A wherever the model is analytic.
pub trait ElectromagneticModel: Send + Sync {
    fn constants(&self) -> &PhysicalConstants;

    /// All four quantities at (t, x).
    fn sample(&self, t: f64, x: Vec3) -> Result<FieldSample, FieldError>;

    /// The trajectories generating the singular set of the potential.
    fn singular_trajectories(&self) -> &[SourceTrajectory];

    /// True when V and A do not depend on t.
    fn is_autonomous(&self) -> bool;

    /// Period of the time dependence (any positive value for autonomous
    /// models).
    fn period(&self) -> f64;

    /// Distance below which evaluations near a singularity are rejected.
    fn collision_floor(&self) -> f64;

    fn scalar_potential(&self, t: f64, x: Vec3) -> Result<f64, FieldError> {
        self.sample(t, x).map(|s| s.v)
    }

    fn vector_potential(&self, t: f64, x: Vec3) -> Result<Vec3, FieldError> {
        self.sample(t, x).map(|s| s.a)
    }

    fn electric_field(&self, t: f64, x: Vec3) -> Result<Vec3, FieldError> {
        self.sample(t, x).map(|s| s.e)
    }

    fn magnetic_field(&self, t: f64, x: Vec3) -> Result<Vec3, FieldError> {
        self.sample(t, x).map(|s| s.b)
    }

    /// Kepler coupling when the model is a Kepler preset.
    fn kepler_alpha(&self) -> Option<f64> {
        None
    }

    /// Min distance from x to any singular trajectory at time t.
    fn min_separation(&self, t: f64, x: Vec3) -> f64 {
        self.singular_trajectories()
            .iter()
            .map(|s| (x - s.position(t)).norm())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Retarded kinematic quantities of one source as seen from (t, x).
#[derive(Debug, Clone, Copy)]
pub struct RetardedFrame {
    pub t_ret: f64,
    pub r_ret: Vec3,
    pub rdot_ret: Vec3,
    pub rddot_ret: Vec3,
    /// Unit vector from the retarded source position to x.
    pub eta: Vec3,
    pub beta: Vec3,
    pub beta_dot: Vec3,
    pub dist: f64,
    /// 1 - eta . beta, bounded below by 1 - beta_max.
    pub doppler: f64,
}

/// Retarded frame of a single source; entry point for the per-source
/// potential and field formulas.
pub fn lw_frame(
    source: &ChargeSource,
    constants: &PhysicalConstants,
    t: f64,
    x: Vec3,
) -> Result<RetardedFrame, FieldError> {
    let traj = &source.trajectory;
    let sol = traj.retarded_time(t, x, traj.default_tol())?;
    let (r_ret, rdot_ret, rddot_ret) = traj.eval(sol.t_ret);
    let dist = (x - r_ret).norm();
    if dist < traj.collision_floor() {
        return Err(FieldError::CollisionProximity {
            distance: dist,
            floor: traj.collision_floor(),
        });
    }
    let eta = (x - r_ret) / dist;
    let beta = rdot_ret / constants.c;
    let beta_dot = rddot_ret / constants.c;
    let doppler = 1.0 - eta.dot(&beta);
    Ok(RetardedFrame {
        t_ret: sol.t_ret,
        r_ret,
        rdot_ret,
        rddot_ret,
        eta,
        beta,
        beta_dot,
        dist,
        doppler,
    })
}

/// Scalar and vector potentials of one source from its retarded frame.
pub fn lw_potentials(
    source: &ChargeSource,
    constants: &PhysicalConstants,
    frame: &RetardedFrame,
) -> (f64, Vec3) {
    let pref = constants.coulomb_prefactor(source.charge);
    let v = pref / (frame.doppler * frame.dist);
    let a = frame.beta * (v / constants.c);
    (v, a)
}

/// Electric and magnetic fields of one source from its retarded frame.
pub fn lw_fields(
    source: &ChargeSource,
    constants: &PhysicalConstants,
    frame: &RetardedFrame,
) -> (Vec3, Vec3) {
    let pref = constants.coulomb_prefactor(source.charge);
    let gamma_sq = 1.0 / (1.0 - frame.beta.norm_squared());
    let dop3 = frame.doppler.powi(3);
    let velocity_term =
        (frame.eta - frame.beta) * (1.0 / (gamma_sq * dop3 * frame.dist * frame.dist));
    let acceleration_term = frame
        .eta
        .cross(&(frame.eta - frame.beta).cross(&frame.beta_dot))
        * (1.0 / (constants.c * dop3 * frame.dist));
    let e = (velocity_term + acceleration_term) * pref;
    // a source at rest has a radial E, so eta x E is exactly zero;
    // computing the cross product would leave rounding residue
    let b = if frame.beta == Vec3::zero() && frame.beta_dot == Vec3::zero() {
        Vec3::zero()
    } else {
        (frame.eta / constants.c).cross(&e)
    };
    (e, b)
}

/// Liénard-Wiechert potentials and fields of an ensemble of moving
/// point charges.
pub struct LienardWiechertModel {
    ensemble: SourceEnsemble,
    constants: PhysicalConstants,
    singulars: Vec<SourceTrajectory>,
}

impl LienardWiechertModel {
    pub fn new(ensemble: SourceEnsemble, constants: PhysicalConstants) -> Self {
        let singulars = ensemble
            .sources()
            .iter()
            .map(|s| s.trajectory.clone())
            .collect();
        Self { ensemble, constants, singulars }
    }

    /// Rejects the model unless every source attracts the test charge
    /// (q q_i < 0), the setting of the existence theorem.
    pub fn validate_attractive(&self) -> Result<(), FieldError> {
        for (i, s) in self.ensemble.sources().iter().enumerate() {
            if self.constants.q * s.charge >= 0.0 {
                return Err(FieldError::ValidationFailure(format!(
                    "source {i} has charge {} with test charge {}; \
                     the attractive preset requires opposite signs",
                    s.charge, self.constants.q
                )));
            }
        }
        Ok(())
    }

    pub fn ensemble(&self) -> &SourceEnsemble {
        &self.ensemble
    }

    /// Per-source frame (retarded kinematics) for diagnostics and tests.
    pub fn frame(&self, index: usize, t: f64, x: Vec3) -> Result<RetardedFrame, FieldError> {
        lw_frame(&self.ensemble.sources()[index], &self.constants, t, x)
    }
}

impl ElectromagneticModel for LienardWiechertModel {
    fn constants(&self) -> &PhysicalConstants {
        &self.constants
    }

    fn sample(&self, t: f64, x: Vec3) -> Result<FieldSample, FieldError> {
        let mut out = FieldSample::zero();
        for source in self.ensemble.sources() {
            let frame = lw_frame(source, &self.constants, t, x)?;
            let (v, a) = lw_potentials(source, &self.constants, &frame);
            let (e, b) = lw_fields(source, &self.constants, &frame);
            out.v += v;
            out.a += a;
            out.e += e;
            out.b += b;
        }
        Ok(out)
    }

    fn singular_trajectories(&self) -> &[SourceTrajectory] {
        &self.singulars
    }

    fn is_autonomous(&self) -> bool {
        // static sources give time-independent potentials
        self.ensemble.sources().iter().all(|s| s.trajectory.beta_max() == 0.0)
    }

    fn period(&self) -> f64 {
        self.ensemble.period()
    }

    fn collision_floor(&self) -> f64 {
        self.ensemble.collision_floor()
    }
}

/// External forcing U(t, x) of the perturbed Kepler problem.
pub trait Forcing: Send + Sync {
    fn value(&self, t: f64, x: Vec3) -> f64;
    fn gradient(&self, t: f64, x: Vec3) -> Vec3;
    fn is_autonomous(&self) -> bool;
}

/// U = eps (1 + cos(2π t / T)) exp(-|x|^2), or the unmodulated
/// eps exp(-|x|^2) when `time_modulated` is off.
pub struct GaussianForcing {
    pub epsilon: f64,
    pub time_modulated: bool,
    pub period: f64,
}

impl Forcing for GaussianForcing {
    fn value(&self, t: f64, x: Vec3) -> f64 {
        let envelope = (-x.norm_squared()).exp();
        if self.time_modulated {
            self.epsilon * (1.0 + (2.0 * PI * t / self.period).cos()) * envelope
        } else {
            self.epsilon * envelope
        }
    }

    fn gradient(&self, t: f64, x: Vec3) -> Vec3 {
        x * (-2.0 * self.value(t, x))
    }

    fn is_autonomous(&self) -> bool {
        !self.time_modulated
    }
}

/// Relativistic Kepler model with optional forcing:
/// V = -alpha / (m |x|) - U / m, A = 0, singular trajectory r = 0.
pub struct KeplerModel {
    alpha: f64,
    forcing: Option<Box<dyn Forcing>>,
    constants: PhysicalConstants,
    period: f64,
    singulars: Vec<SourceTrajectory>,
}

impl KeplerModel {
    pub fn new(
        alpha: f64,
        forcing: Option<Box<dyn Forcing>>,
        constants: PhysicalConstants,
        period: f64,
    ) -> Result<Self, FieldError> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(FieldError::ValidationFailure(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        let origin = SourceTrajectory::fixed(period, Vec3::zero(), constants.c)
            .map_err(|e| FieldError::ValidationFailure(e.to_string()))?;
        Ok(Self { alpha, forcing, constants, period, singulars: vec![origin] })
    }

    /// Strict theorem-preset validation: U must be positive on a probe
    /// set (times x box), otherwise ValidationFailure.
    pub fn validate_positive_forcing(&self, probes: usize, seed: u64) -> Result<(), FieldError> {
        let Some(forcing) = &self.forcing else {
            return Err(FieldError::ValidationFailure(
                "theorem preset requires a forcing U > 0".into(),
            ));
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..probes {
            let t = rng.gen::<f64>() * self.period;
            let x = Vec3::new(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
            );
            let u = forcing.value(t, x);
            if u <= 0.0 {
                return Err(FieldError::ValidationFailure(format!(
                    "forcing U(t, x) = {u} <= 0 at t = {t}, x = {x:?}"
                )));
            }
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl ElectromagneticModel for KeplerModel {
    fn constants(&self) -> &PhysicalConstants {
        &self.constants
    }

    fn sample(&self, t: f64, x: Vec3) -> Result<FieldSample, FieldError> {
        let dist = x.norm();
        let floor = self.collision_floor();
        if dist < floor {
            return Err(FieldError::CollisionProximity { distance: dist, floor });
        }
        let m = self.constants.m;
        let (u, grad_u) = match &self.forcing {
            Some(f) => (f.value(t, x), f.gradient(t, x)),
            None => (0.0, Vec3::zero()),
        };
        let v = -self.alpha / (m * dist) - u / m;
        let e = x * (-self.alpha / (m * dist.powi(3))) + grad_u / m;
        Ok(FieldSample { v, a: Vec3::zero(), e, b: Vec3::zero() })
    }

    fn singular_trajectories(&self) -> &[SourceTrajectory] {
        &self.singulars
    }

    fn is_autonomous(&self) -> bool {
        self.forcing.as_ref().is_none_or(|f| f.is_autonomous())
    }

    fn period(&self) -> f64 {
        self.period
    }

    fn collision_floor(&self) -> f64 {
        self.singulars[0].collision_floor()
    }

    fn kepler_alpha(&self) -> Option<f64> {
        Some(self.alpha)
    }
}

/// The trivial model V = 0, A = 0 (free motion).
pub struct ZeroFieldModel {
    constants: PhysicalConstants,
    period: f64,
}

impl ZeroFieldModel {
    pub fn new(constants: PhysicalConstants, period: f64) -> Self {
        Self { constants, period }
    }
}

impl ElectromagneticModel for ZeroFieldModel {
    fn constants(&self) -> &PhysicalConstants {
        &self.constants
    }

    fn sample(&self, _t: f64, _x: Vec3) -> Result<FieldSample, FieldError> {
        Ok(FieldSample::zero())
    }

    fn singular_trajectories(&self) -> &[SourceTrajectory] {
        &[]
    }

    fn is_autonomous(&self) -> bool {
        true
    }

    fn period(&self) -> f64 {
        self.period
    }

    fn collision_floor(&self) -> f64 {
        0.0
    }
}

type ScalarFn = Box<dyn Fn(f64, Vec3) -> f64 + Send + Sync>;
type VectorFn = Box<dyn Fn(f64, Vec3) -> Vec3 + Send + Sync>;

/// A user-supplied analytic model. Registration probes the contract
/// E = -grad V - dA/dt by central finite differences.
pub struct UserModel {
    v: ScalarFn,
    a: VectorFn,
    e: VectorFn,
    b: VectorFn,
    constants: PhysicalConstants,
    period: f64,
    autonomous: bool,
    singulars: Vec<SourceTrajectory>,
    collision_floor: f64,
}

impl UserModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        v: ScalarFn,
        a: VectorFn,
        e: VectorFn,
        b: VectorFn,
        constants: PhysicalConstants,
        period: f64,
        autonomous: bool,
        singulars: Vec<SourceTrajectory>,
        probe_halfwidth: f64,
        seed: u64,
    ) -> Result<Self, FieldError> {
        let collision_floor = singulars
            .iter()
            .map(|s| s.collision_floor())
            .fold(0.0f64, f64::max);
        let model = Self {
            v,
            a,
            e,
            b,
            constants,
            period,
            autonomous,
            singulars,
            collision_floor,
        };
        model.consistency_probe(probe_halfwidth, seed)?;
        Ok(model)
    }

    fn consistency_probe(&self, halfwidth: f64, seed: u64) -> Result<(), FieldError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = 1e-6 * halfwidth.max(1.0);
        let ht = 1e-6 * self.period;
        for _ in 0..20 {
            let t = rng.gen::<f64>() * self.period;
            let x = Vec3::new(
                rng.gen_range(-halfwidth..halfwidth),
                rng.gen_range(-halfwidth..halfwidth),
                rng.gen_range(-halfwidth..halfwidth),
            );
            if self.min_separation(t, x) < 10.0 * h {
                continue;
            }
            let grad_v = Vec3::new(
                ((self.v)(t, x + Vec3::new(h, 0.0, 0.0)) - (self.v)(t, x - Vec3::new(h, 0.0, 0.0)))
                    / (2.0 * h),
                ((self.v)(t, x + Vec3::new(0.0, h, 0.0)) - (self.v)(t, x - Vec3::new(0.0, h, 0.0)))
                    / (2.0 * h),
                ((self.v)(t, x + Vec3::new(0.0, 0.0, h)) - (self.v)(t, x - Vec3::new(0.0, 0.0, h)))
                    / (2.0 * h),
            );
            let da_dt = ((self.a)(t + ht, x) - (self.a)(t - ht, x)) / (2.0 * ht);
            let expected = -grad_v - da_dt;
            let got = (self.e)(t, x);
            let scale = 1.0 + expected.norm();
            if (got - expected).norm() > 1e-5 * scale {
                return Err(FieldError::ValidationFailure(format!(
                    "E inconsistent with -grad V - dA/dt at t = {t}, x = {x:?}: \
                     got {got:?}, expected {expected:?}"
                )));
            }
        }
        Ok(())
    }
}

impl ElectromagneticModel for UserModel {
    fn constants(&self) -> &PhysicalConstants {
        &self.constants
    }

    fn sample(&self, t: f64, x: Vec3) -> Result<FieldSample, FieldError> {
        let sep = self.min_separation(t, x);
        if sep < self.collision_floor {
            return Err(FieldError::CollisionProximity {
                distance: sep,
                floor: self.collision_floor,
            });
        }
        Ok(FieldSample {
            v: (self.v)(t, x),
            a: (self.a)(t, x),
            e: (self.e)(t, x),
            b: (self.b)(t, x),
        })
    }

    fn singular_trajectories(&self) -> &[SourceTrajectory] {
        &self.singulars
    }

    fn is_autonomous(&self) -> bool {
        self.autonomous
    }

    fn period(&self) -> f64 {
        self.period
    }

    fn collision_floor(&self) -> f64 {
        self.collision_floor
    }
}

// ---------------------------------------------------------------------------
// Assumption checking
// ---------------------------------------------------------------------------

/// Sampling plan for the assumption checks.
#[derive(Debug, Clone)]
pub struct ProbeSpec {
    /// Outer shell radius for (V); default half the min inter-source
    /// separation (or 1 for a single source).
    pub delta: Option<f64>,
    /// Shell radii delta 2^-j for j = 0..shell_levels.
    pub shell_levels: usize,
    pub shell_times: usize,
    pub shell_directions: usize,
    pub bulk_samples: usize,
    /// Half-width of the bulk sampling box around the origin; default
    /// 2 (1 + Theta).
    pub bulk_halfwidth: Option<f64>,
    /// Far-sphere radii grow geometrically from this base; default
    /// max(Theta, 1).
    pub far_base: Option<f64>,
    /// Far radii base 2^j for j in far_level_range.
    pub far_levels: std::ops::RangeInclusive<u32>,
    pub far_times: usize,
    pub far_directions: usize,
    pub rng_seed: u64,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        Self {
            delta: None,
            shell_levels: 7,
            shell_times: 128,
            shell_directions: 256,
            bulk_samples: 256,
            bulk_halfwidth: None,
            far_base: None,
            far_levels: 2..=8,
            far_times: 32,
            far_directions: 64,
            rng_seed: 0,
        }
    }
}

/// A probe point together with its worst-case margin.
#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub t: f64,
    pub x: [f64; 3],
    pub margin: f64,
    pub source_index: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VCheckReport {
    pub pass: bool,
    /// Largest kappa for which V <= -kappa / |x - r_i(t)| held on the
    /// sampled shells.
    pub kappa: f64,
    pub delta: f64,
    pub worst: Option<Witness>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Av1Report {
    pub pass: bool,
    /// Smallest kappa' with |A| <= -(kappa'/c) V over all samples.
    pub kappa_prime: f64,
    pub worst: Option<Witness>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Av2Row {
    pub radius: f64,
    /// max over the sphere and sampled times of |V| + |E| + |B|.
    pub max_quantity: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Av2Report {
    pub pass: bool,
    pub rows: Vec<Av2Row>,
    pub monotone: bool,
    /// C with quantity <= C / (radius - Theta) over the sampled rows.
    pub fitted_c: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    pub v_check: VCheckReport,
    pub av1: Av1Report,
    pub av2: Av2Report,
    pub all_pass: bool,
}

/// Deterministic quasi-uniform directions on the unit sphere
/// (Fibonacci lattice), so witnesses are reproducible.
pub fn fibonacci_sphere(n: usize) -> Vec<Vec3> {
    let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = 2.0 * PI * (i as f64 / golden).fract();
            Vec3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

/// Samples the hypotheses of the existence theorem and reports
/// worst-case margins with witness points. Failures are report
/// entries, never errors.
pub fn check_assumptions(model: &dyn ElectromagneticModel, spec: &ProbeSpec) -> AssumptionReport {
    let period = model.period();
    let singulars = model.singular_trajectories();
    let c = model.constants().c;

    let min_separation = min_pairwise_separation(singulars, period);
    let delta = spec.delta.unwrap_or_else(|| {
        if min_separation.is_finite() { 0.5 * min_separation } else { 1.0 }
    });
    let theta = singulars
        .iter()
        .map(|s| s.max_radius())
        .fold(0.0f64, f64::max);

    let directions = fibonacci_sphere(spec.shell_directions);

    // (V): shells around each singular trajectory.
    let mut v_kappa = f64::INFINITY;
    let mut v_worst: Option<Witness> = None;
    let mut v_pass = !singulars.is_empty();
    for (i, traj) in singulars.iter().enumerate() {
        let shell_results: Vec<(f64, f64, Vec3)> = (0..spec.shell_times)
            .into_par_iter()
            .flat_map_iter(|kt| {
                let t = kt as f64 * period / spec.shell_times as f64;
                let center = traj.position(t);
                let mut local = Vec::new();
                for j in 0..spec.shell_levels {
                    let rho = delta * 0.5f64.powi(j as i32);
                    for d in &directions {
                        let x = center + *d * rho;
                        if let Ok(v) = model.scalar_potential(t, x) {
                            // margin: -V |x - r_i(t)|, must stay >= kappa > 0
                            local.push((t, -v * rho, x));
                        }
                    }
                }
                local
            })
            .collect();
        for (t, margin, x) in shell_results {
            if margin < v_kappa {
                v_kappa = margin;
                v_worst = Some(Witness {
                    t,
                    x: x.to_array(),
                    margin,
                    source_index: Some(i),
                });
            }
        }
    }
    if !v_kappa.is_finite() || v_kappa <= 0.0 {
        v_pass = false;
    }
    if singulars.is_empty() {
        v_kappa = 0.0;
    }

    // Bulk and far samples feed (AV1) and the global sign check.
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let halfwidth = spec.bulk_halfwidth.unwrap_or(2.0 * (1.0 + theta));
    let mut av1_samples: Vec<(f64, Vec3)> = Vec::new();
    for _ in 0..spec.bulk_samples {
        let t = rng.gen::<f64>() * period;
        let x = Vec3::new(
            rng.gen_range(-halfwidth..halfwidth),
            rng.gen_range(-halfwidth..halfwidth),
            rng.gen_range(-halfwidth..halfwidth),
        );
        av1_samples.push((t, x));
    }
    // shells participate too (inner region probes)
    for (i, traj) in singulars.iter().enumerate() {
        let _ = i;
        for kt in 0..spec.shell_times.min(16) {
            let t = kt as f64 * period / spec.shell_times.min(16) as f64;
            let center = traj.position(t);
            for j in 0..spec.shell_levels {
                let rho = delta * 0.5f64.powi(j as i32);
                for d in directions.iter().step_by(8) {
                    av1_samples.push((t, center + *d * rho));
                }
            }
        }
    }

    let mut kappa_prime = 0.0f64;
    let mut av1_worst: Option<Witness> = None;
    let mut av1_pass = true;
    for (t, x) in &av1_samples {
        let Ok(s) = model.sample(*t, *x) else { continue };
        if s.v >= 0.0 {
            av1_pass = false;
            av1_worst = Some(Witness {
                t: *t,
                x: x.to_array(),
                margin: s.v,
                source_index: None,
            });
            continue;
        }
        let ratio = c * s.a.norm() / (-s.v);
        if ratio > kappa_prime {
            kappa_prime = ratio;
            av1_worst = Some(Witness {
                t: *t,
                x: x.to_array(),
                margin: 1.0 - ratio,
                source_index: None,
            });
        }
    }
    if kappa_prime >= 1.0 {
        av1_pass = false;
    }

    // (AV2): decay of |V| + |E| + |B| on far spheres.
    let far_base = spec.far_base.unwrap_or_else(|| theta.max(1.0));
    let far_dirs = fibonacci_sphere(spec.far_directions);
    let mut rows = Vec::new();
    for j in spec.far_levels.clone() {
        let radius = far_base * 2.0f64.powi(j as i32);
        let mut max_quantity = 0.0f64;
        for kt in 0..spec.far_times {
            let t = kt as f64 * period / spec.far_times as f64;
            for d in &far_dirs {
                let x = *d * radius;
                if let Ok(s) = model.sample(t, x) {
                    let q = s.v.abs() + s.e.norm() + s.b.norm();
                    max_quantity = max_quantity.max(q);
                }
            }
        }
        rows.push(Av2Row { radius, max_quantity });
    }
    let monotone = rows.windows(2).all(|w| w[1].max_quantity < w[0].max_quantity);
    let fitted_c = rows
        .iter()
        .map(|r| r.max_quantity * (r.radius - theta))
        .fold(0.0f64, f64::max);
    let av2_pass = monotone;

    let all_pass = v_pass && av1_pass && av2_pass;
    AssumptionReport {
        v_check: VCheckReport { pass: v_pass, kappa: v_kappa, delta, worst: v_worst },
        av1: Av1Report { pass: av1_pass, kappa_prime, worst: av1_worst },
        av2: Av2Report { pass: av2_pass, rows, monotone, fitted_c, theta },
        all_pass,
    }
}

fn min_pairwise_separation(singulars: &[SourceTrajectory], period: f64) -> f64 {
    let mut min = f64::INFINITY;
    for k in 0..256 {
        let t = k as f64 * period / 256.0;
        for i in 0..singulars.len() {
            for j in i + 1..singulars.len() {
                min = min.min((singulars[i].position(t) - singulars[j].position(t)).norm());
            }
        }
    }
    min
}
