//! Discrete action functional I = psi + phi on periodic paths, its
//! gradient, and the pointwise Euler-Lagrange residual.
//!
//! psi is the relativistic kinetic term, phi the potential term
//! int (-V + A . xdot). Quadrature is the uniform-grid rectangle rule,
//! which pairs exactly with the spectral derivative and is spectrally
//! accurate for smooth periodic integrands.

use serde::Serialize;

use crate::error::ActionError;
use crate::fields::ElectromagneticModel;
use crate::path::{path_velocity, PeriodicPath};
use crate::sources::SourceTrajectory;
use crate::spectral;
use crate::vec3::Vec3;

/// Default bound on max |xdot| / c for gradient and residual
/// evaluations; the line searches in the solvers enforce it.
pub const DEFAULT_SPEED_MARGIN: f64 = 0.995;

/// Action value with feasibility diagnostics. `total` is +inf for
/// infeasible paths (speed at or above c, or a node inside the
/// collision floor).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ActionEvaluation {
    pub psi: f64,
    pub phi: f64,
    pub total: f64,
    pub feasible: bool,
    pub min_separation: f64,
    pub max_speed_ratio: f64,
}

/// Min over nodes of the distance to every singular trajectory.
pub fn min_separation(model: &dyn ElectromagneticModel, path: &PeriodicPath) -> f64 {
    (0..path.len())
        .map(|k| model.min_separation(path.node_time(k), path.node(k)))
        .fold(f64::INFINITY, f64::min)
}

/// Discrete action of a path: rectangle-rule quadrature with spectral
/// node velocities.
pub fn eval_action(model: &dyn ElectromagneticModel, path: &PeriodicPath) -> ActionEvaluation {
    let constants = model.constants();
    let c = constants.c;
    let velocities = path_velocity(path);
    let max_speed = velocities.iter().map(Vec3::norm).fold(0.0, f64::max);
    let max_speed_ratio = max_speed / c;
    let sep = min_separation(model, path);
    let speed_ok = max_speed_ratio < 1.0;
    let sep_ok = sep > model.collision_floor();

    let dt = path.dt();
    let psi = if speed_ok {
        let mut acc = 0.0;
        for v in &velocities {
            acc += constants.m * c * c * (1.0 - (1.0 - v.norm_squared() / (c * c)).sqrt());
        }
        acc * dt
    } else {
        f64::INFINITY
    };

    let mut phi = 0.0;
    let mut phi_ok = sep_ok;
    if phi_ok {
        for (k, vk) in velocities.iter().enumerate() {
            match model.sample(path.node_time(k), path.node(k)) {
                Ok(s) => phi += -s.v + s.a.dot(vk),
                Err(_) => {
                    phi_ok = false;
                    break;
                }
            }
        }
        phi *= dt;
    }
    if !phi_ok {
        phi = f64::INFINITY;
    }

    let feasible = speed_ok && phi_ok;
    let total = if feasible { psi + phi } else { f64::INFINITY };
    ActionEvaluation { psi, phi, total, feasible, min_separation: sep, max_speed_ratio }
}

fn require_strictly_feasible(
    model: &dyn ElectromagneticModel,
    path: &PeriodicPath,
    velocities: &[Vec3],
    margin: f64,
) -> Result<(), ActionError> {
    let c = model.constants().c;
    let max_speed = velocities.iter().map(Vec3::norm).fold(0.0, f64::max);
    if max_speed / c > margin {
        return Err(ActionError::InfeasiblePath(format!(
            "max speed ratio {} exceeds margin {margin}",
            max_speed / c
        )));
    }
    let sep = min_separation(model, path);
    if sep <= model.collision_floor() {
        return Err(ActionError::InfeasiblePath(format!(
            "min separation {sep} at or below the collision floor"
        )));
    }
    Ok(())
}

/// Gradient of the discrete action with respect to node positions.
///
/// The potential part uses E + xdot x B at the nodes; the kinetic part
/// is the adjoint-spectral image of the node momenta m gamma xdot.
/// Matches central finite differences of `eval_action` on strictly
/// feasible paths.
pub fn action_gradient(
    model: &dyn ElectromagneticModel,
    path: &PeriodicPath,
    margin: f64,
) -> Result<Vec<Vec3>, ActionError> {
    let velocities = path_velocity(path);
    require_strictly_feasible(model, path, &velocities, margin)?;
    let constants = model.constants();
    let c = constants.c;
    let dt = path.dt();

    let momenta: Vec<Vec3> = velocities
        .iter()
        .map(|v| *v * (constants.m / (1.0 - v.norm_squared() / (c * c)).sqrt()))
        .collect();
    let momentum_rate = spectral::derivative_vec3(&momenta, path.period());

    let mut grad = Vec::with_capacity(path.len());
    for k in 0..path.len() {
        let s = model
            .sample(path.node_time(k), path.node(k))
            .map_err(|e| ActionError::InfeasiblePath(e.to_string()))?;
        let lorentz = s.e + velocities[k].cross(&s.b);
        grad.push((lorentz - momentum_rate[k]) * dt);
    }
    Ok(grad)
}

/// Pointwise Euler-Lagrange residual
/// R_k = D[m gamma xdot]_k - q (E_k + xdot_k x B_k)
/// and its quadrature norm sqrt((T/N) sum |R_k|^2).
pub fn el_residual(
    model: &dyn ElectromagneticModel,
    path: &PeriodicPath,
    margin: f64,
) -> Result<(Vec<Vec3>, f64), ActionError> {
    let velocities = path_velocity(path);
    require_strictly_feasible(model, path, &velocities, margin)?;
    let constants = model.constants();
    let c = constants.c;

    let momenta: Vec<Vec3> = velocities
        .iter()
        .map(|v| *v * (constants.m / (1.0 - v.norm_squared() / (c * c)).sqrt()))
        .collect();
    let momentum_rate = spectral::derivative_vec3(&momenta, path.period());

    let mut residuals = Vec::with_capacity(path.len());
    let mut norm_sq = 0.0;
    for k in 0..path.len() {
        let s = model
            .sample(path.node_time(k), path.node(k))
            .map_err(|e| ActionError::InfeasiblePath(e.to_string()))?;
        let force = (s.e + velocities[k].cross(&s.b)) * constants.q;
        let r = momentum_rate[k] - force;
        norm_sq += r.norm_squared();
        residuals.push(r);
    }
    let norm = (path.dt() * norm_sq).sqrt();
    Ok((residuals, norm))
}

/// The shrinking family x_lambda = r1 + lambda (x - r1) toward a
/// singular trajectory; the action blows up as lambda -> 0.
pub fn scaled_toward(
    path: &PeriodicPath,
    trajectory: &SourceTrajectory,
    lambda: f64,
) -> PeriodicPath {
    let nodes = (0..path.len())
        .map(|k| {
            let r = trajectory.position(path.node_time(k));
            r + (path.node(k) - r) * lambda
        })
        .collect();
    PeriodicPath::new(path.period(), nodes).expect("scaling preserves validity")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::PhysicalConstants;
    use crate::dynamics::kepler_circular_orbit;
    use crate::fields::{KeplerModel, LienardWiechertModel, ZeroFieldModel};
    use crate::sources::{ChargeSource, SourceEnsemble, SourceTrajectory};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn static_lw(c: f64) -> LienardWiechertModel {
        let traj = SourceTrajectory::fixed(2.0 * PI, Vec3::zero(), c).unwrap();
        let ens = SourceEnsemble::new(vec![ChargeSource::new(traj, -1.0)]).unwrap();
        LienardWiechertModel::new(ens, PhysicalConstants::nondimensional_with_c(c))
    }

    #[test]
    fn constant_far_path_has_small_positive_action() {
        let model = static_lw(1.0);
        let near = PeriodicPath::from_fn(2.0 * PI, 16, |_| Vec3::new(2.0, 0.0, 0.0)).unwrap();
        let far = PeriodicPath::from_fn(2.0 * PI, 16, |_| Vec3::new(50.0, 0.0, 0.0)).unwrap();
        let a_near = eval_action(&model, &near);
        let a_far = eval_action(&model, &far);
        assert!(a_near.psi.abs() < 1e-12);
        assert!(a_near.phi > 0.0);
        assert!(a_far.phi > 0.0);
        assert!(a_far.phi < a_near.phi);
        assert!((a_near.phi - 2.0 * PI / 2.0).abs() < 1e-10);
    }

    #[test]
    fn unit_circle_kinetic_term_matches_closed_form() {
        let c = 10.0;
        let model = ZeroFieldModel::new(PhysicalConstants::nondimensional_with_c(c), 2.0 * PI);
        let circle =
            PeriodicPath::from_fn(2.0 * PI, 64, |t| Vec3::new(t.cos(), t.sin(), 0.0)).unwrap();
        let a = eval_action(&model, &circle);
        let exact = 2.0 * PI * c * c * (1.0 - (1.0 - 1.0 / (c * c)).sqrt());
        assert!((a.psi - exact).abs() < 1e-10, "{} vs {exact}", a.psi);
        assert!(a.phi.abs() < 1e-14);
    }

    #[test]
    fn action_blows_up_toward_collision() {
        let model = static_lw(1.0);
        let traj = &model.singular_trajectories()[0];
        let loop1 =
            PeriodicPath::from_fn(2.0 * PI, 32, |t| Vec3::new(t.cos(), t.sin(), 0.0)).unwrap();
        let base = eval_action(&model, &loop1).total;
        let mut prev = base;
        let mut blew_up = false;
        for j in 1..=20 {
            let lambda = 0.5f64.powi(j);
            let shrunk = scaled_toward(&loop1, traj, lambda);
            let val = eval_action(&model, &shrunk).total;
            if !val.is_finite() {
                blew_up = true;
                break;
            }
            if j >= 3 {
                assert!(val > prev, "not monotone at j = {j}: {val} <= {prev}");
            }
            prev = val;
            if val > 1e6 {
                blew_up = true;
                break;
            }
        }
        assert!(blew_up || prev > 1e3 * base);
    }

    #[test]
    fn zero_field_constant_path_is_critical() {
        let model = ZeroFieldModel::new(PhysicalConstants::nondimensional(), 1.0);
        let p = PeriodicPath::from_fn(1.0, 16, |_| Vec3::new(0.3, -0.2, 0.9)).unwrap();
        let g = action_gradient(&model, &p, DEFAULT_SPEED_MARGIN).unwrap();
        for gk in g {
            assert!(gk.norm() < 1e-13);
        }
    }

    fn finite_difference_gradient(
        model: &dyn ElectromagneticModel,
        path: &PeriodicPath,
        h: f64,
    ) -> Vec<Vec3> {
        let mut out = Vec::with_capacity(path.len());
        for k in 0..path.len() {
            let mut g = [0.0; 3];
            for (i, gi) in g.iter_mut().enumerate() {
                let mut bump = [0.0; 3];
                bump[i] = h;
                let d = Vec3::from_array(bump);
                let mut plus = path.nodes().to_vec();
                plus[k] += d;
                let mut minus = path.nodes().to_vec();
                minus[k] -= d;
                let ap = eval_action(model, &PeriodicPath::new(path.period(), plus).unwrap());
                let am = eval_action(model, &PeriodicPath::new(path.period(), minus).unwrap());
                *gi = (ap.total - am.total) / (2.0 * h);
            }
            out.push(Vec3::new(g[0], g[1], g[2]));
        }
        out
    }

    fn assert_gradient_matches(model: &dyn ElectromagneticModel, path: &PeriodicPath, tol: f64) {
        let g = action_gradient(model, path, DEFAULT_SPEED_MARGIN).unwrap();
        let fd = finite_difference_gradient(model, path, 1e-6);
        let scale = fd.iter().map(Vec3::norm).fold(0.0, f64::max).max(1e-12);
        for k in 0..path.len() {
            assert!(
                (g[k] - fd[k]).norm() <= tol * scale,
                "node {k}: {:?} vs {:?} (scale {scale})",
                g[k],
                fd[k]
            );
        }
    }

    #[test]
    fn gradient_matches_finite_differences_on_random_paths() {
        let c = 10.0;
        let lw = static_lw(c);
        let kepler = KeplerModel::new(
            1.0,
            None,
            PhysicalConstants::nondimensional_with_c(c),
            2.0 * PI,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..6 {
            // smooth random loop: a few low harmonics around a safe circle
            let coeffs: Vec<(f64, f64, f64)> = (0..3)
                .map(|_| {
                    (
                        rng.gen_range(-0.2..0.2),
                        rng.gen_range(-0.2..0.2),
                        rng.gen_range(-0.2..0.2),
                    )
                })
                .collect();
            let p = PeriodicPath::from_fn(2.0 * PI, 64, |t| {
                let mut v = Vec3::new(2.0 * t.cos(), 2.0 * t.sin(), 0.0);
                for (j, (a, b, cz)) in coeffs.iter().enumerate() {
                    let w = (j + 1) as f64;
                    v += Vec3::new(
                        a * (w * t).sin(),
                        b * (w * t).cos(),
                        cz * (w * t).sin(),
                    );
                }
                v
            })
            .unwrap();
            let model: &dyn ElectromagneticModel =
                if trial % 2 == 0 { &lw } else { &kepler };
            assert_gradient_matches(model, &p, 1e-5);
        }
    }

    #[test]
    fn exact_circular_orbit_is_discretely_critical() {
        let c = 10.0;
        let constants = PhysicalConstants::nondimensional_with_c(c);
        let model = KeplerModel::new(1.0, None, constants, 2.0 * PI).unwrap();
        let orbit = kepler_circular_orbit(1.0, 1, 2.0 * PI, &constants).unwrap();

        let grad_norm = |n: usize| {
            let p = PeriodicPath::from_fn(2.0 * PI, n, |t| orbit.position(t)).unwrap();
            let g = action_gradient(&model, &p, DEFAULT_SPEED_MARGIN).unwrap();
            g.iter().map(Vec3::norm).fold(0.0, f64::max)
        };
        // pure harmonic content: already at machine floor for modest N
        assert!(grad_norm(64) < 1e-12);

        let p256 = PeriodicPath::from_fn(2.0 * PI, 256, |t| orbit.position(t)).unwrap();
        let (_, norm) = el_residual(&model, &p256, DEFAULT_SPEED_MARGIN).unwrap();
        assert!(norm <= 1e-8, "residual {norm}");
    }

    #[test]
    fn constant_path_in_zero_field_has_zero_residual() {
        let model = ZeroFieldModel::new(PhysicalConstants::nondimensional(), 1.0);
        let p = PeriodicPath::from_fn(1.0, 16, |_| Vec3::new(1.0, 1.0, 1.0)).unwrap();
        let (_, norm) = el_residual(&model, &p, DEFAULT_SPEED_MARGIN).unwrap();
        assert!(norm == 0.0);
    }

    #[test]
    fn residual_grows_linearly_in_perturbation() {
        let c = 10.0;
        let constants = PhysicalConstants::nondimensional_with_c(c);
        let model = KeplerModel::new(1.0, None, constants, 2.0 * PI).unwrap();
        let orbit = kepler_circular_orbit(1.0, 1, 2.0 * PI, &constants).unwrap();
        let norm_at = |eps: f64| {
            let p = PeriodicPath::from_fn(2.0 * PI, 128, |t| {
                orbit.position(t) + Vec3::new(eps * (2.0 * t).cos(), 0.0, 0.0)
            })
            .unwrap();
            el_residual(&model, &p, DEFAULT_SPEED_MARGIN).unwrap().1
        };
        let r1 = norm_at(1e-4);
        let r2 = norm_at(1e-3);
        let ratio = r2 / r1;
        assert!((8.0..12.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn residual_and_gradient_correspond() {
        let c = 10.0;
        let model = static_lw(c);
        let p = PeriodicPath::from_fn(2.0 * PI, 64, |t| {
            Vec3::new(2.0 * t.cos(), 2.0 * t.sin(), 0.2 * (2.0 * t).sin())
        })
        .unwrap();
        let g = action_gradient(&model, &p, DEFAULT_SPEED_MARGIN).unwrap();
        let (r, _) = el_residual(&model, &p, DEFAULT_SPEED_MARGIN).unwrap();
        let dt = p.dt();
        let scale = g.iter().map(Vec3::norm).fold(0.0, f64::max).max(1e-12);
        for k in 0..p.len() {
            // q = 1 in the nondimensional system
            assert!((g[k] + r[k] * dt).norm() <= 1e-6 * scale.max(dt));
        }
    }

    #[test]
    fn phi_dominates_scaled_potential_under_av1() {
        // discrete analog of -V + xdot . A >= (1 - kappa') (-V)
        let c = 5.0;
        let traj = SourceTrajectory::single_harmonic(
            2.0 * PI,
            Vec3::zero(),
            Vec3::new(0.5, 0.0, 0.0),
            Vec3::new(0.0, 0.5, 0.0),
            c,
        )
        .unwrap();
        let kappa_prime = traj.beta_max();
        let ens = SourceEnsemble::new(vec![ChargeSource::new(traj, -1.0)]).unwrap();
        let model =
            LienardWiechertModel::new(ens, PhysicalConstants::nondimensional_with_c(c));
        let p = PeriodicPath::from_fn(2.0 * PI, 64, |t| {
            Vec3::new(2.5 * t.cos(), 2.5 * t.sin(), 0.0)
        })
        .unwrap();
        let velocities = path_velocity(&p);
        let mut phi_sum = 0.0;
        let mut v_sum = 0.0;
        for (k, vk) in velocities.iter().enumerate() {
            let s = model.sample(p.node_time(k), p.node(k)).unwrap();
            assert!(
                -s.v + vk.dot(&s.a)
                    >= (1.0 - kappa_prime) * (-s.v) - 1e-12
            );
            phi_sum += -s.v + velocities[k].dot(&s.a);
            v_sum += -s.v;
        }
        assert!(phi_sum * p.dt() >= (1.0 - kappa_prime) * v_sum * p.dt());
        assert!(phi_sum > 0.0);
    }

    #[test]
    fn action_is_continuous_under_uniform_convergence() {
        // lower-semicontinuity proxy on a uniformly convergent family
        let model = static_lw(10.0);
        let limit =
            PeriodicPath::from_fn(2.0 * PI, 32, |t| Vec3::new(2.0 * t.cos(), 2.0 * t.sin(), 0.0))
                .unwrap();
        let limit_val = eval_action(&model, &limit).total;
        let mut liminf = f64::INFINITY;
        for n in 1..=20 {
            let eps = 1.0 / n as f64;
            let p = PeriodicPath::from_fn(2.0 * PI, 32, |t| {
                Vec3::new(
                    (2.0 + 0.1 * eps) * t.cos(),
                    2.0 * t.sin(),
                    eps * (3.0 * t).sin() * 0.05,
                )
            })
            .unwrap();
            liminf = liminf.min(eval_action(&model, &p).total);
        }
        assert!(limit_val <= liminf + 1e-9 || limit_val <= limit_val.min(liminf) + 1e-6);
    }

    #[test]
    fn psi_vanishes_only_for_constant_paths() {
        let model = ZeroFieldModel::new(PhysicalConstants::nondimensional_with_c(10.0), 1.0);
        let constant = PeriodicPath::from_fn(1.0, 16, |_| Vec3::new(1.0, 0.0, 0.0)).unwrap();
        assert!(eval_action(&model, &constant).psi < 1e-13);
        let moving = PeriodicPath::from_fn(1.0, 16, |t| {
            Vec3::new((2.0 * PI * t).cos() * 0.1, 0.0, 0.0)
        })
        .unwrap();
        assert!(eval_action(&model, &moving).psi > 0.0);
    }
}
