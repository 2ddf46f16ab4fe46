//! Torque objective, ground reactions and the walking constraints evaluated
//! on a uniform time grid.

use nalgebra::{Vector4, Vector5};
use serde::{Deserialize, Serialize};

use crate::error::{GaitError, Result};
use crate::impact::{impact_invariance_residual, RelabelMaps};
use crate::model::{bias_and_gravity, com_kinematics, mass_matrix, swing_foot_position, Point, RobotParams};
use crate::polynomial::PolynomialGait;

/// Violation reported when the impact map cannot be evaluated.
pub const INFEASIBLE_SENTINEL: f64 = 1e9;

/// Walking targets and bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaitProblemConfig {
    /// Upper bounds on stance and swing knee flexion, rad.
    pub knee_upper: [f64; 2],
    pub torque_max: f64,
    pub rate_max: f64,
    pub friction: f64,
    pub step_length: f64,
    pub velocity: f64,
    pub q_init: [f64; 5],
    pub q_final: [f64; 5],
    pub grid_size: usize,
    /// Required swing-foot height at interior grid points, m.
    pub clearance_margin: f64,
    /// Required normal force, N.
    pub normal_force_margin: f64,
    /// Largest admissible violation of any constraint.
    pub violation_threshold: f64,
}

impl Default for GaitProblemConfig {
    fn default() -> Self {
        Self {
            knee_upper: [0.6, 0.6],
            torque_max: 150.0,
            rate_max: 5.0,
            friction: 0.7,
            step_length: 0.5,
            velocity: 1.0,
            q_init: [-0.1681, 0.3073, -0.6499, 0.0064, 0.3073],
            q_final: [0.4754, 0.3073, -0.0064, 0.6499, 0.3073],
            grid_size: 51,
            clearance_margin: 1e-4,
            normal_force_margin: 1e-4,
            violation_threshold: 0.01,
        }
    }
}

impl GaitProblemConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("knee_upper[0]", self.knee_upper[0]),
            ("knee_upper[1]", self.knee_upper[1]),
            ("friction", self.friction),
            ("step_length", self.step_length),
            ("velocity", self.velocity),
            ("violation_threshold", self.violation_threshold),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(GaitError::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("torque_max", self.torque_max),
            ("rate_max", self.rate_max),
            ("clearance_margin", self.clearance_margin),
            ("normal_force_margin", self.normal_force_margin),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(GaitError::invalid(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.q_init.iter().chain(self.q_final.iter()).any(|v| !v.is_finite()) {
            return Err(GaitError::invalid("boundary configurations must be finite"));
        }
        if self.grid_size < 10 {
            return Err(GaitError::invalid(format!("grid_size must be at least 10, got {}", self.grid_size)));
        }
        Ok(())
    }

    /// Step duration `T = step_length / velocity`.
    pub fn duration(&self) -> f64 {
        self.step_length / self.velocity
    }

    pub fn q_init(&self) -> Vector5<f64> {
        Vector5::from(self.q_init)
    }

    pub fn q_final(&self) -> Vector5<f64> {
        Vector5::from(self.q_final)
    }
}

/// Row 1 of the equations of motion as a residual, rows 2–5 as torques.
pub fn inverse_dynamics_split(
    q: &Vector5<f64>,
    qdot: &Vector5<f64>,
    qddot: &Vector5<f64>,
    params: &RobotParams,
) -> (f64, Vector4<f64>) {
    let m = mass_matrix(q, params);
    let (c, g) = bias_and_gravity(q, qdot, params);
    let full = m * qddot + c * qdot + g;
    (full[0], Vector4::new(full[1], full[2], full[3], full[4]))
}

/// Horizontal and vertical force of the ground on the stance foot.
pub fn ground_reaction(
    q: &Vector5<f64>,
    qdot: &Vector5<f64>,
    qddot: &Vector5<f64>,
    params: &RobotParams,
) -> Point {
    let (_, _, acc) = com_kinematics(q, qdot, qddot, params);
    let m = params.total_mass();
    Point::new(m * acc.x, m * (acc.y + params.gravity))
}

/// Composite quadrature weights on `n` uniform points over `[0, duration]`:
/// Simpson when the interval count is even, otherwise Simpson followed by a
/// closing 3/8 panel.
pub fn quadrature_weights(n: usize, duration: f64) -> Vec<f64> {
    assert!(n >= 4, "quadrature needs at least four points");
    let h = duration / (n - 1) as f64;
    let mut w = vec![0.0; n];
    let intervals = n - 1;
    let simpson_end = if intervals.is_multiple_of(2) { intervals } else { intervals - 3 };
    for i in (0..simpson_end).step_by(2) {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
    }
    if simpson_end < intervals {
        let s = simpson_end;
        for (k, c) in [1.0, 3.0, 3.0, 1.0].into_iter().enumerate() {
            w[s + k] += 3.0 * h / 8.0 * c;
        }
    }
    w
}

/// Everything computed at one grid instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub t: f64,
    pub q: Vector5<f64>,
    pub qdot: Vector5<f64>,
    pub qddot: Vector5<f64>,
    pub zero_dynamics: f64,
    pub torques: Vector4<f64>,
    pub reaction: Point,
    pub swing_foot: Point,
}

pub fn sample_gait(gait: &PolynomialGait, params: &RobotParams, n: usize) -> Vec<GridPoint> {
    gait.grid(n)
        .into_iter()
        .map(|t| {
            let s = gait.eval_unchecked(t);
            let (zero_dynamics, torques) = inverse_dynamics_split(&s.q, &s.qdot, &s.qddot, params);
            GridPoint {
                t,
                q: s.q,
                qdot: s.qdot,
                qddot: s.qddot,
                zero_dynamics,
                torques,
                reaction: ground_reaction(&s.q, &s.qdot, &s.qddot, params),
                swing_foot: swing_foot_position(&s.q, params),
            }
        })
        .collect()
}

/// `∫₀ᵀ ‖τ(t)‖² dt` on an `n`-point grid.
pub fn objective(gait: &PolynomialGait, params: &RobotParams, n: usize) -> f64 {
    let w = quadrature_weights(n, gait.duration);
    sample_gait(gait, params, n)
        .iter()
        .zip(&w)
        .map(|(p, w)| w * p.torques.norm_squared())
        .sum()
}

/// Per-constraint maximum violations, all non-negative.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Violations {
    pub boundary: f64,
    pub knee: f64,
    pub clearance: f64,
    pub torque: f64,
    pub rate: f64,
    pub friction: f64,
    pub normal_force: f64,
    pub zero_dynamics: f64,
    pub impact_invariance: f64,
}

impl Violations {
    pub fn named(&self) -> [(&'static str, f64); 9] {
        [
            ("boundary", self.boundary),
            ("knee", self.knee),
            ("clearance", self.clearance),
            ("torque", self.torque),
            ("rate", self.rate),
            ("friction", self.friction),
            ("normal_force", self.normal_force),
            ("zero_dynamics", self.zero_dynamics),
            ("impact_invariance", self.impact_invariance),
        ]
    }

    pub fn max(&self) -> f64 {
        self.named().iter().map(|(_, v)| *v).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub violations: Violations,
    pub max_violation: f64,
    /// `∫ ‖τ‖² dt`, N²·m²·s.
    pub objective: f64,
    pub feasible: bool,
    pub threshold: f64,
    /// The impact map was singular at the end of the step.
    pub impact_degenerate: bool,
}

/// Raw constraint values for the penalty transformation.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintTerms {
    pub objective: f64,
    /// `sqrt(w_i) τ_{i,j}`, so that their squares sum to the objective.
    pub objective_residuals: Vec<f64>,
    /// Must vanish.
    pub equalities: Vec<f64>,
    /// Must be `≤ 0`; margins for strict inequalities are included.
    pub inequalities: Vec<f64>,
    pub impact_degenerate: bool,
}

fn positive(v: f64) -> f64 {
    v.max(0.0)
}

/// Evaluate the objective and every constraint, returning both the raw
/// terms used by the penalty and the summary report.
pub fn evaluate(
    gait: &PolynomialGait,
    params: &RobotParams,
    cfg: &GaitProblemConfig,
    maps: &RelabelMaps,
) -> (ConstraintTerms, ConstraintReport) {
    let n = cfg.grid_size;
    let points = sample_gait(gait, params, n);
    let w = quadrature_weights(n, gait.duration);
    let knees = [1usize, 4];

    let mut v = Violations::default();
    let mut objective = 0.0;
    let mut objective_residuals = Vec::with_capacity(4 * n);
    let mut equalities = Vec::with_capacity(n + 17);
    let mut inequalities = Vec::with_capacity(n * 20);

    let (first, last) = (&points[0], &points[n - 1]);
    for k in 0..5 {
        let d0 = first.q[k] - cfg.q_init[k];
        let d1 = last.q[k] - cfg.q_final[k];
        equalities.push(d0);
        equalities.push(d1);
        v.boundary = v.boundary.max(d0.abs()).max(d1.abs());
    }
    for end in [first, last] {
        equalities.push(end.swing_foot.y);
        v.clearance = v.clearance.max(end.swing_foot.y.abs());
    }

    for (i, p) in points.iter().enumerate() {
        objective += w[i] * p.torques.norm_squared();
        let sw = w[i].sqrt();
        objective_residuals.extend(p.torques.iter().map(|tau| sw * tau));

        equalities.push(p.zero_dynamics);
        v.zero_dynamics = v.zero_dynamics.max(p.zero_dynamics.abs());

        for (j, &k) in knees.iter().enumerate() {
            let lo = -p.q[k];
            let hi = p.q[k] - cfg.knee_upper[j];
            inequalities.push(lo);
            inequalities.push(hi);
            v.knee = v.knee.max(positive(lo)).max(positive(hi));
        }
        if i > 0 && i + 1 < n {
            inequalities.push(cfg.clearance_margin - p.swing_foot.y);
            v.clearance = v.clearance.max(positive(-p.swing_foot.y));
        }
        for tau in p.torques.iter() {
            let g = tau.abs() - cfg.torque_max;
            inequalities.push(g);
            v.torque = v.torque.max(positive(g));
        }
        for rate in p.qdot.iter() {
            let g = rate.abs() - cfg.rate_max;
            inequalities.push(g);
            v.rate = v.rate.max(positive(g));
        }
        let (fx, fy) = (p.reaction.x, p.reaction.y);
        let g = fx.abs() - cfg.friction * fy;
        inequalities.push(g);
        v.friction = v.friction.max(positive(g));
        inequalities.push(cfg.normal_force_margin - fy);
        v.normal_force = v.normal_force.max(positive(-fy));
    }

    let impact_degenerate = match impact_invariance_residual(gait, params, maps) {
        Ok(res) => {
            equalities.extend(res.iter().copied());
            v.impact_invariance = res.amax();
            false
        }
        Err(_) => {
            equalities.extend([INFEASIBLE_SENTINEL; 5]);
            v.impact_invariance = INFEASIBLE_SENTINEL;
            true
        }
    };

    let max_violation = v.max();
    let report = ConstraintReport {
        violations: v,
        max_violation,
        objective,
        feasible: max_violation <= cfg.violation_threshold,
        threshold: cfg.violation_threshold,
        impact_degenerate,
    };
    let terms = ConstraintTerms {
        objective,
        objective_residuals,
        equalities,
        inequalities,
        impact_degenerate,
    };
    (terms, report)
}

pub fn evaluate_constraints(
    gait: &PolynomialGait,
    params: &RobotParams,
    cfg: &GaitProblemConfig,
) -> ConstraintReport {
    evaluate(gait, params, cfg, &RelabelMaps::new()).1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{forward_dynamics, JointState};
    use crate::polynomial::{assemble_gait, Coefficients, FreeParams};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn stacked_rest_needs_no_torque() {
        let p = RobotParams::default();
        let z = Vector5::zeros();
        let (res, tau) = inverse_dynamics_split(&z, &z, &z, &p);
        assert!(res.abs() < 1e-12);
        assert!(tau.amax() < 1e-12);
    }

    #[test]
    fn forward_inverse_round_trip() {
        let p = RobotParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..1000 {
            let q = Vector5::from_fn(|_, _| rng.gen_range(-1.5..1.5));
            let qd = Vector5::from_fn(|_, _| rng.gen_range(-4.0..4.0));
            let u = Vector4::from_fn(|_, _| rng.gen_range(-150.0..150.0));
            let qdd = forward_dynamics(&JointState::new(q, qd), &u, &p);
            let (res, tau) = inverse_dynamics_split(&q, &qd, &qdd, &p);
            assert!(res.abs() <= 1e-9, "{res}");
            assert_relative_eq!(tau, u, epsilon = 1e-9);
        }
    }

    #[test]
    fn static_reaction_is_body_weight() {
        let p = RobotParams::default();
        let z = Vector5::zeros();
        let f = ground_reaction(&z, &z, &z, &p);
        assert_eq!(f.x, 0.0);
        assert_relative_eq!(f.y, 392.4, epsilon = 1e-9);
    }

    #[test]
    fn simpson_is_exact_on_cubics() {
        for n in [11, 12, 51, 52, 101] {
            let w = quadrature_weights(n, 0.5);
            let h = 0.5 / (n - 1) as f64;
            let integral: f64 = w.iter().enumerate().map(|(i, w)| {
                let t = i as f64 * h;
                w * (1.0 + t - 2.0 * t * t + 3.0 * t * t * t)
            }).sum();
            let exact = 0.5 + 0.125 - 2.0 / 3.0 * 0.125 + 0.75 * 0.0625;
            assert_relative_eq!(integral, exact, epsilon = 1e-13);
        }
    }

    #[test]
    fn objective_is_quadratic_in_torque() {
        // Scaling gravity scales every torque of a static gait.
        let mut p = RobotParams::default();
        let q = Vector5::new(0.1, 0.3, -0.2, 0.1, 0.3);
        let mut alpha = Coefficients::zeros();
        alpha.set_column(0, &q);
        let gait = PolynomialGait::new(alpha, 0.5).unwrap();
        let j1 = objective(&gait, &p, 51);
        assert!(j1 > 0.0);
        p.gravity *= 2.0;
        assert_relative_eq!(objective(&gait, &p, 51), 4.0 * j1, max_relative = 1e-12);
        p.gravity = 0.0;
        assert_eq!(objective(&gait, &p, 51), 0.0);
    }

    fn demo_config() -> GaitProblemConfig {
        GaitProblemConfig::default()
    }

    #[test]
    fn report_violations_are_nonnegative() {
        let p = RobotParams::default();
        let cfg = demo_config();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let z = FreeParams(nalgebra::SVector::from_fn(|_, _| rng.gen_range(-12.0..12.0)));
            let gait = assemble_gait(&z, &cfg.q_init(), &cfg.q_final(), cfg.duration()).unwrap();
            let r = evaluate_constraints(&gait, &p, &cfg);
            for (_, v) in r.violations.named() {
                assert!(v >= 0.0);
            }
            assert!(r.violations.boundary < 1e-12);
            assert_eq!(r.feasible, r.max_violation <= 0.01);
            assert!(r.violations.zero_dynamics > 0.0);
        }
    }

    #[test]
    fn clearance_violation_from_dip() {
        // Stacked legs with the swing foot lowered by bending nothing is
        // impossible, so build a pose whose swing foot sits 2 cm below the
        // stance foot: swing leg straight, stance knee flexed.
        let p = RobotParams::default();
        let knee: f64 = 2.0 * ((0.8 - 0.02) / 0.8_f64).acos();
        let q = Vector5::new(knee / 2.0, knee, -knee / 2.0, 0.0, 0.0);
        assert_relative_eq!(swing_foot_position(&q, &p).y, -0.02, epsilon = 1e-12);
        let mut alpha = Coefficients::zeros();
        alpha.set_column(0, &q);
        let gait = PolynomialGait::new(alpha, 0.5).unwrap();
        let cfg = GaitProblemConfig {
            q_init: q.into(),
            q_final: q.into(),
            ..demo_config()
        };
        let r = evaluate_constraints(&gait, &p, &cfg);
        assert_relative_eq!(r.violations.clearance, 0.02, epsilon = 1e-12);
    }

    #[test]
    fn torque_violation_above_limit() {
        // A static lean whose knee torque reaches 180 N·m.
        let p = RobotParams::default();
        let cfg = demo_config();
        let q = Vector5::new(0.0, 0.0, -1.2, 0.0, 0.0);
        let (_, tau) = inverse_dynamics_split(&q, &Vector5::zeros(), &Vector5::zeros(), &p);
        let mut alpha = Coefficients::zeros();
        alpha.set_column(0, &q);
        let scale = 180.0 / tau.amax();
        let scaled = RobotParams { gravity: p.gravity * scale, ..p };
        let gait = PolynomialGait::new(alpha, 0.5).unwrap();
        let r = evaluate_constraints(&gait, &scaled, &cfg);
        assert_relative_eq!(r.violations.torque, 30.0, epsilon = 1e-9);
    }

    #[test]
    fn invalid_configs() {
        let mut c = demo_config();
        c.grid_size = 9;
        assert!(c.validate().is_err());
        let mut c = demo_config();
        c.friction = 0.0;
        assert!(c.validate().is_err());
        let mut c = demo_config();
        c.torque_max = -1.0;
        assert!(c.validate().is_err());
        demo_config().validate().unwrap();
        assert_eq!(demo_config().duration(), 0.5);
    }
}
