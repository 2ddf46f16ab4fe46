//! Kinematics and single-support dynamics of the planar five-link biped.
//!
//! The stance foot is pinned at the origin, `x` points in the walking
//! direction and `y` points up. Joint coordinates are relative angles:
//!
//! * `q[0]` absolute angle of the stance shin, clockwise from the upward
//!   vertical (positive leans toward +x),
//! * `q[1]` stance knee flexion (shin angle minus thigh angle),
//! * `q[2]` stance hip (stance thigh angle minus trunk angle),
//! * `q[3]` swing hip (trunk angle minus swing thigh angle),
//! * `q[4]` swing knee flexion (swing shin angle minus swing thigh angle).
//!
//! Absolute link angles describe the direction from the lower joint of a
//! link to its upper joint (foot to knee, knee to hip, hip to trunk tip),
//! so the swing leg hangs along `-u(θ)`. With that choice the stacked
//! configuration `q = 0` puts both legs on top of each other and the
//! trunk upright.

use nalgebra::{Matrix2x5, Matrix5, Vector2, Vector4, Vector5};
use serde::{Deserialize, Serialize};

use crate::error::{GaitError, Result};

/// Planar point or vector, `(x, y)` in metres.
pub type Point = Vector2<f64>;

pub const NUM_LINKS: usize = 5;

/// Mass and geometry of the five links.
///
/// Link order is stance shin, stance thigh, trunk, swing thigh, swing shin.
/// `com_offsets` are measured from the knee for the shins and from the hip
/// for the thighs and the trunk, on both legs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotParams {
    pub masses: [f64; 5],
    pub inertias: [f64; 5],
    pub lengths: [f64; 5],
    pub com_offsets: [f64; 5],
    pub gravity: f64,
}

impl Default for RobotParams {
    /// RABBIT testbed values.
    fn default() -> Self {
        Self {
            masses: [3.2, 6.8, 20.0, 6.8, 3.2],
            inertias: [0.93, 1.08, 2.22, 1.08, 0.93],
            lengths: [0.4, 0.4, 0.625, 0.4, 0.4],
            com_offsets: [0.128, 0.163, 0.2, 0.163, 0.128],
            gravity: 9.81,
        }
    }
}

impl RobotParams {
    pub fn validate(&self) -> Result<()> {
        for i in 0..NUM_LINKS {
            let (m, inertia, l, d) = (
                self.masses[i],
                self.inertias[i],
                self.lengths[i],
                self.com_offsets[i],
            );
            if !(m.is_finite() && m > 0.0) {
                return Err(GaitError::invalid(format!("mass of link {} must be positive", i + 1)));
            }
            if !(l.is_finite() && l > 0.0) {
                return Err(GaitError::invalid(format!("length of link {} must be positive", i + 1)));
            }
            if !(inertia.is_finite() && inertia >= 0.0) {
                return Err(GaitError::invalid(format!(
                    "inertia of link {} must be non-negative",
                    i + 1
                )));
            }
            if !(d.is_finite() && (0.0..=l).contains(&d)) {
                return Err(GaitError::invalid(format!(
                    "COM offset of link {} must lie in [0, length]",
                    i + 1
                )));
            }
        }
        if !(self.gravity.is_finite() && self.gravity >= 0.0) {
            return Err(GaitError::invalid("gravity must be non-negative"));
        }
        Ok(())
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Lever arms: COM of link `i` is `Σ_j lever[i][j] · u(θ_j)`.
    fn levers(&self) -> [[f64; 5]; 5] {
        let [l1, l2, _, l4, _] = self.lengths;
        let [d1, d2, d3, d4, d5] = self.com_offsets;
        [
            [l1 - d1, 0.0, 0.0, 0.0, 0.0],
            [l1, l2 - d2, 0.0, 0.0, 0.0],
            [l1, l2, d3, 0.0, 0.0],
            [l1, l2, 0.0, -d4, 0.0],
            [l1, l2, 0.0, -l4, -d5],
        ]
    }

    /// Mass-weighted lever sums `Σ_i m_i lever[i][j]`; the total COM times
    /// the total mass is `Σ_j w_j u(θ_j)`.
    fn weighted_levers(&self) -> [f64; 5] {
        let levers = self.levers();
        let mut w = [0.0; 5];
        for (i, row) in levers.iter().enumerate() {
            for j in 0..NUM_LINKS {
                w[j] += self.masses[i] * row[j];
            }
        }
        w
    }

    /// Lever coefficients of the swing foot, `p_e = Σ_j e_j u(θ_j)`.
    fn foot_levers(&self) -> [f64; 5] {
        let [l1, l2, _, l4, l5] = self.lengths;
        [l1, l2, 0.0, -l4, -l5]
    }

    /// Coupling coefficients `Σ_i m_i lever[i][j] lever[i][k]` plus the link
    /// inertias on the diagonal.
    fn couplings(&self) -> [[f64; 5]; 5] {
        let levers = self.levers();
        let mut c = [[0.0; 5]; 5];
        for j in 0..NUM_LINKS {
            for k in 0..NUM_LINKS {
                c[j][k] = (0..NUM_LINKS)
                    .map(|i| self.masses[i] * levers[i][j] * levers[i][k])
                    .sum();
            }
            c[j][j] += self.inertias[j];
        }
        c
    }
}

/// Relative joint angles and rates of the stance-pinned chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointState {
    pub q: Vector5<f64>,
    pub qdot: Vector5<f64>,
}

impl JointState {
    pub fn new(q: Vector5<f64>, qdot: Vector5<f64>) -> Self {
        Self { q, qdot }
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.qdot.iter()).all(|v| v.is_finite())
    }
}

/// Joint, tip and COM positions of one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainGeometry {
    pub stance_foot: Point,
    pub stance_knee: Point,
    pub hip: Point,
    pub trunk_tip: Point,
    pub swing_knee: Point,
    pub swing_foot: Point,
    pub link_coms: [Point; 5],
    pub com: Point,
}

/// Unit direction of a link at absolute angle `theta`.
#[inline]
fn dir(theta: f64) -> Point {
    Point::new(theta.sin(), theta.cos())
}

/// Derivative of [`dir`] with respect to the angle.
#[inline]
fn dir_prime(theta: f64) -> Point {
    Point::new(theta.cos(), -theta.sin())
}

/// Matrix taking relative angles to absolute link angles, `θ = A q`.
pub fn accumulation_matrix() -> Matrix5<f64> {
    Matrix5::new(
        1.0, 0.0, 0.0, 0.0, 0.0, //
        1.0, -1.0, 0.0, 0.0, 0.0, //
        1.0, -1.0, -1.0, 0.0, 0.0, //
        1.0, -1.0, -1.0, -1.0, 0.0, //
        1.0, -1.0, -1.0, -1.0, 1.0,
    )
}

/// Inverse of [`accumulation_matrix`]: absolute link angles to relative
/// joint angles, `q = H θ`.
pub fn relative_from_absolute_matrix() -> Matrix5<f64> {
    Matrix5::new(
        1.0, 0.0, 0.0, 0.0, 0.0, //
        1.0, -1.0, 0.0, 0.0, 0.0, //
        0.0, 1.0, -1.0, 0.0, 0.0, //
        0.0, 0.0, 1.0, -1.0, 0.0, //
        0.0, 0.0, 0.0, -1.0, 1.0,
    )
}

pub fn relative_to_absolute(q_rel: &Vector5<f64>) -> Vector5<f64> {
    let q = q_rel;
    let t2 = q[0] - q[1];
    let t3 = t2 - q[2];
    let t4 = t3 - q[3];
    Vector5::new(q[0], t2, t3, t4, t4 + q[4])
}

pub fn absolute_to_relative(q_abs: &Vector5<f64>) -> Vector5<f64> {
    let t = q_abs;
    Vector5::new(t[0], t[0] - t[1], t[1] - t[2], t[2] - t[3], t[4] - t[3])
}

pub fn forward_kinematics(q: &Vector5<f64>, params: &RobotParams) -> ChainGeometry {
    let th = relative_to_absolute(q);
    let [l1, l2, l3, l4, l5] = params.lengths;
    let u: [Point; 5] = std::array::from_fn(|j| dir(th[j]));

    let stance_foot = Point::zeros();
    let stance_knee = u[0] * l1;
    let hip = stance_knee + u[1] * l2;
    let trunk_tip = hip + u[2] * l3;
    let swing_knee = hip - u[3] * l4;
    let swing_foot = swing_knee - u[4] * l5;

    let levers = params.levers();
    let link_coms: [Point; 5] =
        std::array::from_fn(|i| (0..NUM_LINKS).map(|j| u[j] * levers[i][j]).sum());
    let com = link_coms
        .iter()
        .zip(params.masses.iter())
        .map(|(p, m)| p * *m)
        .sum::<Point>()
        / params.total_mass();

    ChainGeometry {
        stance_foot,
        stance_knee,
        hip,
        trunk_tip,
        swing_knee,
        swing_foot,
        link_coms,
        com,
    }
}

/// Swing foot position `p_e(q)`.
pub fn swing_foot_position(q: &Vector5<f64>, params: &RobotParams) -> Point {
    let th = relative_to_absolute(q);
    params
        .foot_levers()
        .iter()
        .enumerate()
        .map(|(j, e)| dir(th[j]) * *e)
        .sum()
}

/// Total centre of mass position.
pub fn com_position(q: &Vector5<f64>, params: &RobotParams) -> Point {
    let th = relative_to_absolute(q);
    let w = params.weighted_levers();
    (0..NUM_LINKS).map(|j| dir(th[j]) * w[j]).sum::<Point>() / params.total_mass()
}

/// Absolute-coordinate mass matrix `Σ c_jk cos(θ_j − θ_k)`.
fn mass_matrix_abs(th: &Vector5<f64>, c: &[[f64; 5]; 5]) -> Matrix5<f64> {
    Matrix5::from_fn(|j, k| c[j][k] * (th[j] - th[k]).cos())
}

pub fn mass_matrix(q: &Vector5<f64>, params: &RobotParams) -> Matrix5<f64> {
    let a = accumulation_matrix();
    let th = a * q;
    a.transpose() * mass_matrix_abs(&th, &params.couplings()) * a
}

/// Partial derivatives `∂M/∂q_l`, one matrix per coordinate.
fn mass_matrix_partials(q: &Vector5<f64>, params: &RobotParams) -> [Matrix5<f64>; 5] {
    let a = accumulation_matrix();
    let at = a.transpose();
    let th = a * q;
    let c = params.couplings();
    // ∂M_abs[j][k]/∂θ_p = −c_jk sin(θ_j − θ_k) (δ_pj − δ_pk)
    let dabs: [Matrix5<f64>; 5] = std::array::from_fn(|p| {
        Matrix5::from_fn(|j, k| {
            let delta = (p == j) as i32 as f64 - (p == k) as i32 as f64;
            if delta == 0.0 {
                0.0
            } else {
                -c[j][k] * (th[j] - th[k]).sin() * delta
            }
        })
    });
    std::array::from_fn(|l| {
        let dabs_l = (0..NUM_LINKS)
            .map(|p| dabs[p] * a[(p, l)])
            .fold(Matrix5::zeros(), |acc, m| acc + m);
        at * dabs_l * a
    })
}

/// Time derivative of the mass matrix along `qdot`.
pub fn mass_matrix_rate(q: &Vector5<f64>, qdot: &Vector5<f64>, params: &RobotParams) -> Matrix5<f64> {
    let dm = mass_matrix_partials(q, params);
    (0..NUM_LINKS).fold(Matrix5::zeros(), |acc, l| acc + dm[l] * qdot[l])
}

/// Coriolis matrix from the Christoffel symbols of the mass matrix, and the
/// gravity vector `∂V/∂q`.
pub fn bias_and_gravity(
    q: &Vector5<f64>,
    qdot: &Vector5<f64>,
    params: &RobotParams,
) -> (Matrix5<f64>, Vector5<f64>) {
    let dm = mass_matrix_partials(q, params);
    let coriolis = Matrix5::from_fn(|j, k| {
        (0..NUM_LINKS)
            .map(|l| 0.5 * (dm[l][(j, k)] + dm[k][(j, l)] - dm[j][(k, l)]) * qdot[l])
            .sum()
    });
    (coriolis, gravity_vector(q, params))
}

pub fn gravity_vector(q: &Vector5<f64>, params: &RobotParams) -> Vector5<f64> {
    let a = accumulation_matrix();
    let th = a * q;
    let w = params.weighted_levers();
    let g_abs = Vector5::from_fn(|j, _| -params.gravity * w[j] * th[j].sin());
    a.transpose() * g_abs
}

/// Gravitational potential energy of the five links, zero at ground level.
pub fn potential_energy(q: &Vector5<f64>, params: &RobotParams) -> f64 {
    params.total_mass() * params.gravity * com_position(q, params).y
}

pub fn kinetic_energy(q: &Vector5<f64>, qdot: &Vector5<f64>, params: &RobotParams) -> f64 {
    0.5 * qdot.dot(&(mass_matrix(q, params) * qdot))
}

pub fn total_energy(state: &JointState, params: &RobotParams) -> f64 {
    kinetic_energy(&state.q, &state.qdot, params) + potential_energy(&state.q, params)
}

/// `J = ∂p_e/∂q`, so that `J q̇` is the swing foot velocity.
pub fn swing_foot_jacobian(q: &Vector5<f64>, params: &RobotParams) -> Matrix2x5<f64> {
    let a = accumulation_matrix();
    let th = a * q;
    let e = params.foot_levers();
    let mut j_abs = Matrix2x5::zeros();
    for j in 0..NUM_LINKS {
        j_abs.set_column(j, &(dir_prime(th[j]) * e[j]));
    }
    j_abs * a
}

/// `M q̈ = (0, uᵀ)ᵀ − C q̇ − G`.
pub fn forward_dynamics(state: &JointState, torques: &Vector4<f64>, params: &RobotParams) -> Vector5<f64> {
    let m = mass_matrix(&state.q, params);
    let (c, g) = bias_and_gravity(&state.q, &state.qdot, params);
    let rhs = actuated_force(torques) - c * state.qdot - g;
    // M is symmetric positive definite for valid parameters.
    m.cholesky()
        .expect("mass matrix is positive definite")
        .solve(&rhs)
}

/// Generalized force vector `(0, uᵀ)ᵀ`: the stance ankle is unactuated.
pub fn actuated_force(torques: &Vector4<f64>) -> Vector5<f64> {
    Vector5::new(0.0, torques[0], torques[1], torques[2], torques[3])
}

/// Position, velocity and acceleration of the total COM.
pub fn com_kinematics(
    q: &Vector5<f64>,
    qdot: &Vector5<f64>,
    qddot: &Vector5<f64>,
    params: &RobotParams,
) -> (Point, Point, Point) {
    let a = accumulation_matrix();
    let th = a * q;
    let thd = a * qdot;
    let thdd = a * qddot;
    let w = params.weighted_levers();
    let m = params.total_mass();
    let mut pos = Point::zeros();
    let mut vel = Point::zeros();
    let mut acc = Point::zeros();
    for j in 0..NUM_LINKS {
        let u = dir(th[j]);
        let up = dir_prime(th[j]);
        pos += u * w[j];
        vel += up * (w[j] * thd[j]);
        acc += (up * thdd[j] - u * (thd[j] * thd[j])) * w[j];
    }
    (pos / m, vel / m, acc / m)
}

/// Result of [`inverse_kinematics`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkSolution {
    pub q: Vector5<f64>,
    /// A leg is fully stretched, so the two knee branches coincide.
    pub singular: bool,
}

const IK_REACH_TOL: f64 = 1e-12;
const IK_SINGULAR_TOL: f64 = 1e-9;

/// Two-link leg solve. `span` runs from the foot to the hip; returns the
/// shin angle and knee flexion with the knee bent toward +x.
fn solve_leg(span: Point, shin: f64, thigh: f64) -> Result<(f64, f64, bool)> {
    let reach = span.norm();
    if reach > shin + thigh + IK_REACH_TOL || reach < (shin - thigh).abs() - IK_REACH_TOL {
        return Err(GaitError::Unreachable { distance: reach, max_reach: shin + thigh });
    }
    let cos_knee = ((reach * reach - shin * shin - thigh * thigh) / (2.0 * shin * thigh)).clamp(-1.0, 1.0);
    let knee = cos_knee.acos();
    let singular = knee < IK_SINGULAR_TOL;
    let leg_angle = span.x.atan2(span.y);
    let cos_foot = if reach > 0.0 {
        ((shin * shin + reach * reach - thigh * thigh) / (2.0 * shin * reach)).clamp(-1.0, 1.0)
    } else {
        1.0
    };
    // The shin leans to the +x side of the leg line when the knee flexes.
    let shin_angle = leg_angle + cos_foot.acos();
    Ok((shin_angle, knee, singular))
}

/// Joint angles placing the hip and swing foot at the requested points with
/// the trunk at `trunk_angle` (absolute, clockwise from vertical).
///
/// Of the four knee branches the one with both knees flexed forward
/// (`q[1]`, `q[4]` in `[0, π)`) is returned.
pub fn inverse_kinematics(
    hip: Point,
    swing_foot: Point,
    trunk_angle: f64,
    params: &RobotParams,
) -> Result<IkSolution> {
    let [l1, l2, _, l4, l5] = params.lengths;
    let (stance_shin, stance_knee, s1) = solve_leg(hip, l1, l2)?;
    let (swing_shin, swing_knee, s2) = solve_leg(hip - swing_foot, l5, l4)?;
    let abs = Vector5::new(
        stance_shin,
        stance_shin - stance_knee,
        trunk_angle,
        swing_shin - swing_knee,
        swing_shin,
    );
    Ok(IkSolution { q: absolute_to_relative(&abs), singular: s1 || s2 })
}
