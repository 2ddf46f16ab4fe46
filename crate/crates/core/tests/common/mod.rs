//! Independent reference computations shared by the integration tests.
//!
//! Everything here is written from the chain geometry alone: link centres of
//! mass are placed by walking the chain with plain trigonometry, velocities
//! come from finite differences of positions, and inertial quantities are
//! assembled from those. None of it calls the library's dynamics.

#![allow(dead_code)]

use biped_gait::model::{inverse_kinematics, Point, RobotParams};
use nalgebra::{DMatrix, DVector, Matrix5, Vector2, Vector5};
use rand::Rng;

/// Absolute link angles (clockwise from the upward vertical) from relative
/// joint angles: knees and hip accumulate negatively along the chain, the
/// swing knee positively.
pub fn absolute_angles(q: &Vector5<f64>) -> [f64; 5] {
    let t1 = q[0];
    let t2 = t1 - q[1];
    let t3 = t2 - q[2];
    let t4 = t3 - q[3];
    let t5 = t4 + q[4];
    [t1, t2, t3, t4, t5]
}

pub fn absolute_rates(qdot: &Vector5<f64>) -> [f64; 5] {
    absolute_angles(qdot)
}

fn unit(theta: f64) -> Vector2<f64> {
    Vector2::new(theta.sin(), theta.cos())
}

/// Joint positions: stance foot, stance knee, hip, trunk tip, swing knee,
/// swing foot.
pub fn joints(q: &Vector5<f64>, p: &RobotParams) -> [Vector2<f64>; 6] {
    let t = absolute_angles(q);
    let l = p.lengths;
    let foot = Vector2::zeros();
    let knee = foot + unit(t[0]) * l[0];
    let hip = knee + unit(t[1]) * l[1];
    let tip = hip + unit(t[2]) * l[2];
    let swing_knee = hip - unit(t[3]) * l[3];
    let swing_foot = swing_knee - unit(t[4]) * l[4];
    [foot, knee, hip, tip, swing_knee, swing_foot]
}

/// Link centres of mass; offsets are measured from the distal joint (knee
/// for the shins, hip for the thighs and the trunk).
pub fn link_coms(q: &Vector5<f64>, p: &RobotParams) -> [Vector2<f64>; 5] {
    let t = absolute_angles(q);
    let [_, knee, hip, _, swing_knee, _] = joints(q, p);
    let d = p.com_offsets;
    [
        knee - unit(t[0]) * d[0],
        hip - unit(t[1]) * d[1],
        hip + unit(t[2]) * d[2],
        hip - unit(t[3]) * d[3],
        swing_knee - unit(t[4]) * d[4],
    ]
}

/// Fourth-order accurate derivative of `f` at 0 (Richardson-extrapolated
/// central differences).
pub fn derivative<T, F>(f: F, h: f64) -> T
where
    F: Fn(f64) -> T,
    T: std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T> + Clone,
{
    let d1 = (f(h) - f(-h)) * (1.0 / (2.0 * h));
    let d2 = (f(0.5 * h) - f(-0.5 * h)) * (1.0 / h);
    d2.clone() * (4.0 / 3.0) + d1 * (-1.0 / 3.0)
}

/// Step for derivatives of closed-form quantities.
pub const FD_STEP: f64 = 1e-3;
/// Step for derivatives of quantities that are themselves finite
/// differences; larger to keep the nested roundoff small.
pub const OUTER_STEP: f64 = 1e-2;

/// Derivative of `f` along `dir` at `x`, with the step measured along the
/// unit-infinity-norm direction.
pub fn directional<T, F>(f: F, x: &Vector5<f64>, dir: &Vector5<f64>, h: f64) -> T
where
    F: Fn(&Vector5<f64>) -> T,
    T: std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T> + Clone,
{
    let scale = dir.amax();
    if scale == 0.0 {
        return f(x) * 0.0;
    }
    let unit = dir / scale;
    derivative(|e| f(&(x + unit * e)), h) * scale
}

/// Link COM velocities by differentiating positions along `qdot`.
pub fn com_velocities(q: &Vector5<f64>, qdot: &Vector5<f64>, p: &RobotParams) -> [Vector2<f64>; 5] {
    std::array::from_fn(|i| directional(|x| link_coms(x, p)[i], q, qdot, FD_STEP))
}

/// `T = ½ Σ (m ‖v‖² + I ω²)`.
pub fn kinetic_energy(q: &Vector5<f64>, qdot: &Vector5<f64>, p: &RobotParams) -> f64 {
    let v = com_velocities(q, qdot, p);
    let w = absolute_rates(qdot);
    (0..5).map(|i| 0.5 * (p.masses[i] * v[i].norm_squared() + p.inertias[i] * w[i] * w[i])).sum()
}

/// `V = g Σ m y`.
pub fn potential_energy(q: &Vector5<f64>, p: &RobotParams) -> f64 {
    link_coms(q, p).iter().zip(p.masses).map(|(c, m)| m * p.gravity * c.y).sum()
}

/// Mass matrix read off as the Hessian of the kinetic energy in the rates:
/// `M = Σ mᵢ Jᵢᵀ Jᵢ + Iᵢ aᵢᵀ aᵢ` with `Jᵢ` the COM Jacobians from finite
/// differences and `aᵢ` the rows of the angle accumulation.
pub fn mass_matrix(q: &Vector5<f64>, p: &RobotParams) -> Matrix5<f64> {
    let mut m = Matrix5::zeros();
    let cols: Vec<[Vector2<f64>; 5]> = (0..5).map(|k| com_velocities(q, &Vector5::ith(k, 1.0), p)).collect();
    let rows: Vec<[f64; 5]> = (0..5).map(|k| absolute_rates(&Vector5::ith(k, 1.0))).collect();
    for a in 0..5 {
        for b in 0..5 {
            m[(a, b)] = (0..5)
                .map(|i| p.masses[i] * cols[a][i].dot(&cols[b][i]) + p.inertias[i] * rows[a][i] * rows[b][i])
                .sum();
        }
    }
    m
}

/// Gradient of the potential energy.
pub fn gravity(q: &Vector5<f64>, p: &RobotParams) -> Vector5<f64> {
    Vector5::from_fn(|k, _| derivative(|e| potential_energy(&(q + Vector5::ith(k, e)), p), FD_STEP))
}

/// Velocity-product terms from the Lagrangian: `Ṁ q̇ − ∂T/∂q`.
pub fn coriolis_vector(q: &Vector5<f64>, qdot: &Vector5<f64>, p: &RobotParams) -> Vector5<f64> {
    let mdot = directional(|x| mass_matrix(x, p), q, qdot, OUTER_STEP);
    let dtdq = Vector5::from_fn(|k, _| {
        derivative(|e| 0.5 * qdot.dot(&(mass_matrix(&(q + Vector5::ith(k, e)), p) * qdot)), OUTER_STEP)
    });
    mdot * qdot - dtdq
}

/// Swing-foot Jacobian by differentiating the foot position.
pub fn foot_jacobian(q: &Vector5<f64>, p: &RobotParams) -> nalgebra::Matrix2x5<f64> {
    let mut j = nalgebra::Matrix2x5::zeros();
    for k in 0..5 {
        j.set_column(k, &derivative(|e| joints(&(q + Vector5::ith(k, e)), p)[5], FD_STEP));
    }
    j
}

/// Angular momentum of the chain about `point`.
pub fn angular_momentum(q: &Vector5<f64>, qdot: &Vector5<f64>, point: Vector2<f64>, p: &RobotParams) -> f64 {
    let r = link_coms(q, p);
    let v = com_velocities(q, qdot, p);
    let w = absolute_rates(qdot);
    (0..5)
        .map(|i| {
            let d = r[i] - point;
            p.masses[i] * (d.x * v[i].y - d.y * v[i].x) + p.inertias[i] * (-w[i])
        })
        .sum()
}

/// Linear momentum of the chain.
pub fn linear_momentum(q: &Vector5<f64>, qdot: &Vector5<f64>, p: &RobotParams) -> Vector2<f64> {
    com_velocities(q, qdot, p).iter().zip(p.masses).map(|(v, m)| v * m).sum()
}

/// Post-impact rates and impulse from the impulse–momentum equations
/// `M (q̇⁺ − q̇⁻) = Jᵀ F`, `J q̇⁺ = 0`, solved as one 7×7 linear system.
pub fn impact_by_linear_system(
    q: &Vector5<f64>,
    qdot_minus: &Vector5<f64>,
    m: &Matrix5<f64>,
    j: &nalgebra::Matrix2x5<f64>,
) -> (Vector5<f64>, Vector2<f64>) {
    let mut a = DMatrix::zeros(7, 7);
    let mut b = DVector::zeros(7);
    for r in 0..5 {
        for c in 0..5 {
            a[(r, c)] = m[(r, c)];
        }
        for c in 0..2 {
            a[(r, 5 + c)] = -j[(c, r)];
        }
    }
    for r in 0..2 {
        for c in 0..5 {
            a[(5 + r, c)] = j[(r, c)];
        }
    }
    b.rows_mut(0, 5).copy_from(&(m * qdot_minus));
    let _ = q;
    let x = a.lu().solve(&b).expect("impact system is regular");
    (Vector5::from_fn(|k, _| x[k]), Vector2::new(x[5], x[6]))
}

pub fn random_vector(rng: &mut impl Rng, range: f64) -> Vector5<f64> {
    Vector5::from_fn(|_, _| rng.gen_range(-range..range))
}

/// A configuration with the swing foot on the ground ahead of the stance
/// foot, built from random step geometry.
pub fn random_ground_contact(rng: &mut impl Rng, p: &RobotParams) -> Vector5<f64> {
    loop {
        let foot = Point::new(rng.gen_range(0.15..0.6), 0.0);
        let hip_x = rng.gen_range(0.0..foot.x);
        let hip = Point::new(hip_x, rng.gen_range(0.55..0.78));
        let trunk = rng.gen_range(-0.3..0.5);
        if let Ok(ik) = inverse_kinematics(hip, foot, trunk, p) {
            if !ik.singular {
                return ik.q;
            }
        }
    }
}

/// Largest absolute entry of a difference, relative to the reference's
/// largest absolute entry.
pub fn relative_error<const R: usize, const C: usize>(
    got: &nalgebra::SMatrix<f64, R, C>,
    reference: &nalgebra::SMatrix<f64, R, C>,
) -> f64 {
    (got - reference).amax() / reference.amax().max(f64::MIN_POSITIVE)
}
