//! Periodic-orbit solvers: Newton shooting on the return map,
//! Levenberg-Marquardt collocation on the Euler-Lagrange residual,
//! seed generation, and multiplicity scans with deduplication.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::action::{el_residual, eval_action, min_separation, ActionEvaluation};
use crate::dynamics::{integrate, kepler_circular_orbit, momentum_from_velocity, ParticleState};
use crate::error::OrbitError;
use crate::fields::{ElectromagneticModel, FieldSample};
use crate::path::{path_velocity, PeriodicPath};
use crate::spectral;
use crate::vec3::Vec3;

/// How an orbit was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Shooting,
    Collocation,
}

/// A converged (or best-effort) periodic orbit.
#[derive(Debug, Clone)]
pub struct OrbitResult {
    pub path: PeriodicPath,
    pub residual_norm: f64,
    pub action: ActionEvaluation,
    /// |x(T) - x(0)| + |p(T) - p(0)| after re-integration.
    pub closure_error: f64,
    pub min_separation: f64,
    pub method: Method,
    pub seed_id: String,
    pub iterations: usize,
    pub converged: bool,
}

/// Seed construction recipes for the solvers.
#[derive(Debug, Clone)]
pub enum SeedSpec {
    /// x(t) = r_i(t) + scale (cos(2π k t / T) u + sin(2π k t / T) w),
    /// scale shrunk until the speed ratio is at most 0.9.
    LoopAroundSource {
        source_index: usize,
        scale: f64,
        winding: u32,
        /// Normal of the loop plane.
        normal: Vec3,
        n: usize,
    },
    /// k-fold covered circular orbit of the Kepler preset.
    KfoldCircle { k: u32, n: usize },
    Constant { point: Vec3, n: usize },
    ExplicitPath(PeriodicPath),
}

impl SeedSpec {
    pub fn id(&self) -> String {
        match self {
            SeedSpec::LoopAroundSource { source_index, scale, winding, .. } => {
                format!("loop:src{source_index}:scale{scale}:k{winding}")
            }
            SeedSpec::KfoldCircle { k, .. } => format!("kfold:{k}"),
            SeedSpec::Constant { point, .. } => {
                format!("constant:({},{},{})", point.x, point.y, point.z)
            }
            SeedSpec::ExplicitPath(_) => "explicit".to_string(),
        }
    }
}

/// Solver settings shared by shooting, collocation and the scan.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub tol_shoot: f64,
    pub tol_colloc: f64,
    pub max_iters: usize,
    pub speed_margin: f64,
    pub lm_lambda0: f64,
    /// RK4 steps for verification integrations.
    pub integrate_steps: usize,
    /// Collocation grid size.
    pub n: usize,
    pub dedup_tol_factor: f64,
    pub rng_seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol_shoot: 1e-10,
            tol_colloc: 1e-9,
            max_iters: 100,
            speed_margin: 0.995,
            lm_lambda0: 1e-3,
            integrate_steps: 10_240,
            n: 128,
            dedup_tol_factor: 1e-4,
            rng_seed: 0,
        }
    }
}

/// Two unit vectors spanning the plane orthogonal to `normal`.
fn plane_basis(normal: Vec3) -> (Vec3, Vec3) {
    let n = normal.normalized();
    let helper = if n.x.abs() < 0.9 {
        Vec3::new(1.0, 0.0, 0.0)
    } else {
        Vec3::new(0.0, 1.0, 0.0)
    };
    let u = helper.cross(&n).normalized();
    let w = n.cross(&u);
    (u, w)
}

/// Builds a feasible discrete seed path from a specification.
pub fn generate_seed(
    model: &dyn ElectromagneticModel,
    spec: &SeedSpec,
) -> Result<PeriodicPath, OrbitError> {
    let period = model.period();
    match spec {
        SeedSpec::LoopAroundSource { source_index, scale, winding, normal, n } => {
            let traj = model
                .singular_trajectories()
                .get(*source_index)
                .ok_or_else(|| {
                    OrbitError::BadSeedSpec(format!(
                        "source index {source_index} out of range"
                    ))
                })?;
            let (u, w) = plane_basis(*normal);
            let c = model.constants().c;
            let mut lambda = *scale;
            for _ in 0..200 {
                let path = PeriodicPath::from_fn(period, *n, |t| {
                    let phase = 2.0 * std::f64::consts::PI * *winding as f64 * t / period;
                    traj.position(t) + (u * phase.cos() + w * phase.sin()) * lambda
                })
                .map_err(|e| OrbitError::BadSeedSpec(e.to_string()))?;
                let ratio = crate::path::max_speed(&path) / c;
                if ratio <= 0.9 {
                    if min_separation(model, &path) <= model.collision_floor() {
                        return Err(OrbitError::InfeasibleSeed(
                            "loop seed collides with a source".into(),
                        ));
                    }
                    return Ok(path);
                }
                lambda *= 0.8;
            }
            Err(OrbitError::InfeasibleSeed(
                "no loop radius satisfies the speed bound".into(),
            ))
        }
        SeedSpec::KfoldCircle { k, n } => {
            let alpha = model.kepler_alpha().ok_or_else(|| {
                OrbitError::BadSeedSpec("k-fold circle seeds need the Kepler preset".into())
            })?;
            let orbit = kepler_circular_orbit(alpha, *k, period, model.constants())?;
            PeriodicPath::from_fn(period, *n, |t| orbit.position(t))
                .map_err(|e| OrbitError::BadSeedSpec(e.to_string()))
        }
        SeedSpec::Constant { point, n } => {
            let path = PeriodicPath::from_fn(period, *n, |_| *point)
                .map_err(|e| OrbitError::BadSeedSpec(e.to_string()))?;
            if min_separation(model, &path) <= model.collision_floor() {
                return Err(OrbitError::InfeasibleSeed(
                    "constant seed sits on a singular trajectory".into(),
                ));
            }
            Ok(path)
        }
        SeedSpec::ExplicitPath(path) => {
            let ratio = crate::path::max_speed(path) / model.constants().c;
            if ratio >= 1.0 || min_separation(model, path) <= model.collision_floor() {
                return Err(OrbitError::InfeasibleSeed("explicit path infeasible".into()));
            }
            Ok(path.clone())
        }
    }
}

// ---------------------------------------------------------------------------
// Shooting
// ---------------------------------------------------------------------------

fn flow_map(
    model: &dyn ElectromagneticModel,
    y: &[f64; 6],
    t0: f64,
    period: f64,
    steps: usize,
) -> Result<[f64; 6], OrbitError> {
    let state = ParticleState::new(
        t0,
        Vec3::new(y[0], y[1], y[2]),
        Vec3::new(y[3], y[4], y[5]),
    );
    let traj = integrate(model, state, t0 + period, steps)?;
    let end = traj.last().unwrap();
    Ok([end.x.x, end.x.y, end.x.z, end.p.x, end.p.y, end.p.z])
}

fn return_map_defect(
    model: &dyn ElectromagneticModel,
    y: &[f64; 6],
    t0: f64,
    period: f64,
    steps: usize,
) -> Result<DVector<f64>, OrbitError> {
    let end = flow_map(model, y, t0, period, steps)?;
    Ok(DVector::from_iterator(6, (0..6).map(|i| end[i] - y[i])))
}

/// Newton iteration on the time-T return map F(x0, p0) =
/// (x(T) - x0, p(T) - p0), with forward-difference Jacobian and damped
/// (halving) steps.
pub fn find_orbit_shooting(
    model: &dyn ElectromagneticModel,
    state0: ParticleState,
    period: f64,
    opts: &SolverOptions,
) -> Result<OrbitResult, OrbitError> {
    let steps = opts.integrate_steps.max(opts.n) / opts.n * opts.n;
    let t0 = state0.t;
    let mut y = [
        state0.x.x, state0.x.y, state0.x.z, state0.p.x, state0.p.y, state0.p.z,
    ];
    let mut defect = return_map_defect(model, &y, t0, period, steps)?;
    let mut norm = defect.norm();
    let mut iterations = 0usize;

    while norm > opts.tol_shoot {
        if iterations >= opts.max_iters {
            return Err(OrbitError::NoConvergence { best_norm: norm, iterations });
        }
        // forward-difference Jacobian, 6 extra integrations
        let mut jac = DMatrix::<f64>::zeros(6, 6);
        for i in 0..6 {
            let h = 1e-7 * (1.0 + y[i].abs());
            let mut yp = y;
            yp[i] += h;
            let dp = return_map_defect(model, &yp, t0, period, steps)?;
            for r in 0..6 {
                jac[(r, i)] = (dp[r] - defect[r]) / h;
            }
        }
        let delta = jac
            .lu()
            .solve(&(-&defect))
            .ok_or(OrbitError::NoConvergence { best_norm: norm, iterations })?;

        // damped step: halve until the defect shrinks
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..25 {
            let mut trial = y;
            for i in 0..6 {
                trial[i] += scale * delta[i];
            }
            match return_map_defect(model, &trial, t0, period, steps) {
                Ok(d) if d.norm() < norm => {
                    y = trial;
                    defect = d;
                    norm = defect.norm();
                    accepted = true;
                    break;
                }
                _ => scale *= 0.5,
            }
        }
        if !accepted {
            return Err(OrbitError::NoConvergence { best_norm: norm, iterations });
        }
        iterations += 1;
    }

    finish_shooting(model, y, t0, period, steps, opts, iterations, "state0")
}

#[allow(clippy::too_many_arguments)]
fn finish_shooting(
    model: &dyn ElectromagneticModel,
    y: [f64; 6],
    t0: f64,
    period: f64,
    steps: usize,
    opts: &SolverOptions,
    iterations: usize,
    seed_id: &str,
) -> Result<OrbitResult, OrbitError> {
    let state = ParticleState::new(
        t0,
        Vec3::new(y[0], y[1], y[2]),
        Vec3::new(y[3], y[4], y[5]),
    );
    let traj = integrate(model, state, t0 + period, steps)?;
    let end = traj.last().unwrap();
    let closure_error = (end.x - state.x).norm() + (end.p - state.p).norm();

    // resample onto the collocation grid and cross-validate
    let stride = steps / opts.n;
    let nodes: Vec<Vec3> = (0..opts.n).map(|k| traj[k * stride].x).collect();
    let path = PeriodicPath::new(period, nodes)
        .map_err(|e| OrbitError::BadSeedSpec(e.to_string()))?;
    let residual_norm = el_residual(model, &path, opts.speed_margin)
        .map(|(_, n)| n)
        .unwrap_or(f64::INFINITY);
    let action = eval_action(model, &path);
    let sep = min_separation(model, &path);

    Ok(OrbitResult {
        path,
        residual_norm,
        action,
        closure_error,
        min_separation: sep,
        method: Method::Shooting,
        seed_id: seed_id.to_string(),
        iterations,
        converged: true,
    })
}

// ---------------------------------------------------------------------------
// Collocation (Levenberg-Marquardt on the EL residual)
// ---------------------------------------------------------------------------

struct ResidualEval {
    /// Residual vector scaled by sqrt(T/N), so its 2-norm is the
    /// quadrature residual norm.
    f: DVector<f64>,
    fields: Vec<FieldSample>,
    velocities: Vec<Vec3>,
}

fn feasible(
    model: &dyn ElectromagneticModel,
    path: &PeriodicPath,
    margin: f64,
) -> bool {
    crate::path::max_speed(path) / model.constants().c <= margin
        && min_separation(model, path) > model.collision_floor()
}

fn residual_eval(
    model: &dyn ElectromagneticModel,
    path: &PeriodicPath,
) -> Result<ResidualEval, OrbitError> {
    let velocities = path_velocity(path);
    let mut fields = Vec::with_capacity(path.len());
    for k in 0..path.len() {
        let s = model
            .sample(path.node_time(k), path.node(k))
            .map_err(|e| OrbitError::InfeasibleSeed(e.to_string()))?;
        fields.push(s);
    }
    let f = assemble_residual(model, path, &velocities, &fields);
    Ok(ResidualEval { f, fields, velocities })
}

fn assemble_residual(
    model: &dyn ElectromagneticModel,
    path: &PeriodicPath,
    velocities: &[Vec3],
    fields: &[FieldSample],
) -> DVector<f64> {
    let constants = model.constants();
    let c = constants.c;
    let momenta: Vec<Vec3> = velocities
        .iter()
        .map(|v| *v * (constants.m / (1.0 - v.norm_squared() / (c * c)).sqrt()))
        .collect();
    let momentum_rate = spectral::derivative_vec3(&momenta, path.period());
    let weight = path.dt().sqrt();
    let n = path.len();
    let mut f = DVector::zeros(3 * n);
    for k in 0..n {
        let force = (fields[k].e + velocities[k].cross(&fields[k].b)) * constants.q;
        let r = (momentum_rate[k] - force) * weight;
        f[3 * k] = r.x;
        f[3 * k + 1] = r.y;
        f[3 * k + 2] = r.z;
    }
    f
}

/// Jacobian of the residual by forward differences. Fields at
/// unperturbed nodes are reused: the field at node k depends on x_k
/// only, so a bump of node j touches only entry j of the cache.
fn residual_jacobian(
    model: &dyn ElectromagneticModel,
    path: &PeriodicPath,
    base: &ResidualEval,
    impulse_derivative: &[f64],
) -> Result<DMatrix<f64>, OrbitError> {
    let n = path.len();
    let mut jac = DMatrix::zeros(3 * n, 3 * n);
    let mut fields = base.fields.clone();
    for j in 0..n {
        for a in 0..3 {
            let h = 1e-6 * (1.0 + path.node(j).to_array()[a].abs());
            let mut bump = [0.0; 3];
            bump[a] = h;
            let bump = Vec3::from_array(bump);
            let mut nodes = path.nodes().to_vec();
            nodes[j] += bump;
            let perturbed = PeriodicPath::new(path.period(), nodes)
                .map_err(|e| OrbitError::BadSeedSpec(e.to_string()))?;

            // incremental spectral velocity: v'_k = v_k + h D[delta_j] e_a
            let velocities: Vec<Vec3> = (0..n)
                .map(|k| {
                    let d = impulse_derivative[(n + k - j) % n];
                    let mut v = base.velocities[k];
                    match a {
                        0 => v.x += h * d,
                        1 => v.y += h * d,
                        _ => v.z += h * d,
                    }
                    v
                })
                .collect();

            let prev = fields[j];
            fields[j] = model
                .sample(perturbed.node_time(j), perturbed.node(j))
                .map_err(|e| OrbitError::InfeasibleSeed(e.to_string()))?;
            let f = assemble_residual(model, &perturbed, &velocities, &fields);
            fields[j] = prev;

            let col = 3 * j + a;
            for r in 0..3 * n {
                jac[(r, col)] = (f[r] - base.f[r]) / h;
            }
        }
    }
    Ok(jac)
}

/// Gauss-Newton / Levenberg-Marquardt minimization of the EL residual
/// over the 3N node positions. Backtracking keeps every accepted step
/// inside the speed margin and away from the collision floor.
pub fn find_orbit_collocation(
    model: &dyn ElectromagneticModel,
    seed: &PeriodicPath,
    opts: &SolverOptions,
) -> Result<OrbitResult, OrbitError> {
    find_orbit_collocation_tagged(model, seed, opts, "explicit")
}

pub fn find_orbit_collocation_tagged(
    model: &dyn ElectromagneticModel,
    seed: &PeriodicPath,
    opts: &SolverOptions,
    seed_id: &str,
) -> Result<OrbitResult, OrbitError> {
    if !feasible(model, seed, opts.speed_margin) {
        return Err(OrbitError::InfeasibleSeed(
            "collocation seed violates the feasibility margin".into(),
        ));
    }
    let n = seed.len();
    // spectral derivative of a unit impulse at node 0 (circulant column)
    let mut impulse = vec![0.0; n];
    impulse[0] = 1.0;
    let impulse_derivative = spectral::derivative(&impulse, seed.period());

    let mut path = seed.clone();
    let mut eval = residual_eval(model, &path)?;
    let mut norm = eval.f.norm();
    let mut lambda = opts.lm_lambda0;
    let mut iterations = 0usize;

    while norm > opts.tol_colloc {
        if iterations >= opts.max_iters {
            return Err(OrbitError::NoConvergence { best_norm: norm, iterations });
        }
        let jac = residual_jacobian(model, &path, &eval, &impulse_derivative)?;
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &eval.f;

        let mut accepted = false;
        for _ in 0..40 {
            let mut lhs = jtj.clone();
            for i in 0..3 * n {
                lhs[(i, i)] += lambda * jtj[(i, i)].max(1e-30);
            }
            let Some(delta) = lhs.lu().solve(&(-&g)) else {
                lambda *= 10.0;
                continue;
            };

            // backtrack the step until feasible
            let mut scale = 1.0;
            let mut candidate = None;
            for _ in 0..30 {
                let nodes: Vec<Vec3> = (0..n)
                    .map(|k| {
                        path.node(k)
                            + Vec3::new(
                                scale * delta[3 * k],
                                scale * delta[3 * k + 1],
                                scale * delta[3 * k + 2],
                            )
                    })
                    .collect();
                let trial = PeriodicPath::new(path.period(), nodes)
                    .map_err(|e| OrbitError::BadSeedSpec(e.to_string()))?;
                if feasible(model, &trial, opts.speed_margin) {
                    candidate = Some(trial);
                    break;
                }
                scale *= 0.5;
            }
            let Some(trial) = candidate else {
                return Err(OrbitError::StalledAtInfeasibility);
            };

            match residual_eval(model, &trial) {
                Ok(trial_eval) if trial_eval.f.norm() < norm => {
                    path = trial;
                    eval = trial_eval;
                    norm = eval.f.norm();
                    lambda = (lambda / 10.0).max(1e-14);
                    accepted = true;
                    break;
                }
                _ => lambda *= 10.0,
            }
            if lambda > 1e14 {
                break;
            }
        }
        if !accepted {
            return Err(OrbitError::NoConvergence { best_norm: norm, iterations });
        }
        iterations += 1;
    }

    // cross-validate by re-integration from the node-0 state
    let velocities = path_velocity(&path);
    let p0 = momentum_from_velocity(velocities[0], model.constants());
    let state0 = ParticleState::new(0.0, path.node(0), p0);
    let traj = integrate(model, state0, path.period(), opts.integrate_steps)?;
    let end = traj.last().unwrap();
    let closure_error = (end.x - state0.x).norm() + (end.p - state0.p).norm();

    let action = eval_action(model, &path);
    let sep = min_separation(model, &path);
    Ok(OrbitResult {
        residual_norm: norm,
        action,
        closure_error,
        min_separation: sep,
        method: Method::Collocation,
        seed_id: seed_id.to_string(),
        iterations,
        converged: true,
        path,
    })
}

// ---------------------------------------------------------------------------
// Multiplicity scan
// ---------------------------------------------------------------------------

/// Outcome of a scan: distinct converged orbits plus per-seed failures.
#[derive(Debug)]
pub struct ScanOutcome {
    pub orbits: Vec<OrbitResult>,
    pub failures: Vec<(String, String)>,
}

/// min over cyclic time shifts of the uniform node distance.
pub fn shift_distance(a: &PeriodicPath, b: &PeriodicPath) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let mut best = f64::INFINITY;
    for s in 0..n {
        let mut worst = 0.0f64;
        for k in 0..n {
            worst = worst.max((a.node(k) - b.node((k + s) % n)).norm());
            if worst >= best {
                break;
            }
        }
        best = best.min(worst);
    }
    best
}

/// Runs the collocation solver on every seed (falling back to shooting
/// from the seed's initial state), deduplicates by shifted path
/// distance, and sorts by action value.
pub fn multiplicity_scan(
    model: &dyn ElectromagneticModel,
    seeds: &[SeedSpec],
    opts: &SolverOptions,
) -> ScanOutcome {
    let results: Vec<Result<OrbitResult, (String, String)>> = seeds
        .par_iter()
        .map(|spec| {
            let seed_id = spec.id();
            let seed = generate_seed(model, spec).map_err(|e| (seed_id.clone(), e.to_string()))?;
            match find_orbit_collocation_tagged(model, &seed, opts, &seed_id) {
                Ok(orbit) => Ok(orbit),
                Err(colloc_err) => {
                    // fall back to shooting from the seed's initial state
                    let velocities = path_velocity(&seed);
                    let p0 = momentum_from_velocity(velocities[0], model.constants());
                    let state0 = ParticleState::new(0.0, seed.node(0), p0);
                    find_orbit_shooting(model, state0, seed.period(), opts)
                        .map(|mut o| {
                            o.seed_id = seed_id.clone();
                            o
                        })
                        .map_err(|shoot_err| {
                            (
                                seed_id,
                                format!(
                                    "collocation: {colloc_err}; shooting: {shoot_err}"
                                ),
                            )
                        })
                }
            }
        })
        .collect();

    let mut orbits = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(o) => orbits.push(o),
            Err(f) => failures.push(f),
        }
    }

    // dedup by time-shifted path distance
    let diameter = orbits
        .iter()
        .map(|o| o.path.diameter())
        .fold(0.0f64, f64::max);
    let tol = opts.dedup_tol_factor * diameter.max(1e-12);
    let mut distinct: Vec<OrbitResult> = Vec::new();
    for orbit in orbits {
        let duplicate = distinct.iter_mut().find(|d| {
            d.path.len() == orbit.path.len() && shift_distance(&d.path, &orbit.path) <= tol
        });
        match duplicate {
            Some(existing) => {
                if orbit.residual_norm < existing.residual_norm {
                    *existing = orbit;
                }
            }
            None => distinct.push(orbit),
        }
    }

    distinct.sort_by(|a, b| {
        a.action
            .total
            .partial_cmp(&b.action.total)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| {
                for k in 0..a.path.len().min(b.path.len()) {
                    let (na, nb) = (a.path.node(k), b.path.node(k));
                    for (ca, cb) in [(na.x, nb.x), (na.y, nb.y), (na.z, nb.z)] {
                        match ca.partial_cmp(&cb) {
                            Some(std::cmp::Ordering::Equal) | None => continue,
                            Some(o) => return o,
                        }
                    }
                }
                std::cmp::Ordering::Equal
            })
    });

    ScanOutcome { orbits: distinct, failures }
}
