//! Forward simulation of one step: integrate the single-support dynamics
//! driven by a gait's feed-forward torques until the swing foot strikes the
//! ground, then apply the impact and the leg relabeling.

use nalgebra::{Vector4, Vector5};
use serde::{Deserialize, Serialize};

use crate::constraints::inverse_dynamics_split;
use crate::error::{GaitError, Result};
use crate::impact::{impact_velocity_map, relabel_state, RelabelMaps};
use crate::model::{forward_dynamics, swing_foot_position, JointState, RobotParams};
use crate::polynomial::PolynomialGait;

/// Secant iterations used to locate the ground crossing inside a step.
const CROSSING_ITERATIONS: usize = 60;
/// Swing-foot height accepted as the crossing point, m.
const CROSSING_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    /// Fixed RK4 step, s.
    pub dt: f64,
    /// Give up when no impact occurs within this multiple of the step
    /// duration.
    pub horizon_factor: f64,
    /// Record every this many integration steps in the trajectory.
    pub record_every: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self { dt: 1e-4, horizon_factor: 2.0, record_every: 50 }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(GaitError::invalid("simulation.dt must be positive"));
        }
        if !(self.horizon_factor.is_finite() && self.horizon_factor > 0.0) {
            return Err(GaitError::invalid("simulation.horizon_factor must be positive"));
        }
        if self.record_every == 0 {
            return Err(GaitError::invalid("simulation.record_every must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimSample {
    pub t: f64,
    pub state: JointState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSimulation {
    pub impact_time: f64,
    /// The gait's own state at `t = 0`, where the simulation starts.
    pub initial: JointState,
    pub pre_impact: JointState,
    /// Post-impact state expressed in the new stance leg's chart.
    pub post_impact: JointState,
    /// Ground impulse at the new contact, N·s.
    pub impulse: [f64; 2],
    /// `post_impact − initial`, angles then rates.
    pub deviation: [f64; 10],
    pub max_deviation: f64,
    pub trajectory: Vec<SimSample>,
}

/// Feed-forward torques of the gait at time `t`; the polynomial is
/// extrapolated past the nominal step end.
pub fn feedforward_torques(gait: &PolynomialGait, params: &RobotParams, t: f64) -> Vector4<f64> {
    let s = gait.eval_unchecked(t);
    inverse_dynamics_split(&s.q, &s.qdot, &s.qddot, params).1
}

/// One classical Runge–Kutta step of the single-support dynamics.
pub fn rk4_step<F>(state: &JointState, t: f64, dt: f64, params: &RobotParams, torques: &F) -> JointState
where
    F: Fn(f64) -> Vector4<f64>,
{
    let deriv = |s: &JointState, t: f64| -> (Vector5<f64>, Vector5<f64>) {
        (s.qdot, forward_dynamics(s, &torques(t), params))
    };
    let shifted = |k: &(Vector5<f64>, Vector5<f64>), h: f64| JointState::new(state.q + k.0 * h, state.qdot + k.1 * h);
    let k1 = deriv(state, t);
    let k2 = deriv(&shifted(&k1, 0.5 * dt), t + 0.5 * dt);
    let k3 = deriv(&shifted(&k2, 0.5 * dt), t + 0.5 * dt);
    let k4 = deriv(&shifted(&k3, dt), t + dt);
    JointState::new(
        state.q + (k1.0 + (k2.0 + k3.0) * 2.0 + k4.0) * (dt / 6.0),
        state.qdot + (k1.1 + (k2.1 + k3.1) * 2.0 + k4.1) * (dt / 6.0),
    )
}

/// Simulate one step of `gait` from its own initial state.
pub fn simulate_step(gait: &PolynomialGait, params: &RobotParams, cfg: &SimulationConfig) -> Result<StepSimulation> {
    cfg.validate()?;
    let start = gait.eval_unchecked(0.0);
    let initial = JointState::new(start.q, start.qdot);
    let torques = |t: f64| feedforward_torques(gait, params, t);
    let height = |s: &JointState| swing_foot_position(&s.q, params).y;
    let horizon = cfg.horizon_factor * gait.duration;

    let mut state = initial;
    let mut t = 0.0;
    let mut h = height(&state);
    let mut trajectory = vec![SimSample { t, state }];
    let mut steps = 0usize;

    while t < horizon {
        let dt = cfg.dt.min(horizon - t);
        let next = rk4_step(&state, t, dt, params, &torques);
        if !next.is_finite() {
            return Err(GaitError::NoImpact { horizon });
        }
        let h_next = height(&next);
        let forward = swing_foot_position(&next.q, params).x > 0.0;
        if h > 0.0 && h_next <= 0.0 && forward {
            // Linear interpolation gives the first estimate; regula falsi on
            // partial RK4 steps pins the crossing to the ground.
            let (mut a, mut ga) = (0.0, h);
            let (mut b, mut gb) = (dt, h_next);
            let mut s = dt * h / (h - h_next);
            let mut hit = rk4_step(&state, t, s, params, &torques);
            let mut side = 0i8;
            for _ in 0..CROSSING_ITERATIONS {
                let g = height(&hit);
                if g.abs() <= CROSSING_TOLERANCE {
                    break;
                }
                if g > 0.0 {
                    a = s;
                    ga = g;
                    if side == 1 {
                        gb *= 0.5;
                    }
                    side = 1;
                } else {
                    b = s;
                    gb = g;
                    if side == -1 {
                        ga *= 0.5;
                    }
                    side = -1;
                }
                s = a + (b - a) * ga / (ga - gb);
                hit = rk4_step(&state, t, s, params, &torques);
            }
            let impact_time = t + s;
            let outcome = impact_velocity_map(&hit.q, &hit.qdot, params)?;
            let (q_plus, qdot_plus) = relabel_state(&hit.q, &outcome.qdot_plus, &RelabelMaps::new());
            let post = JointState::new(q_plus, qdot_plus);
            trajectory.push(SimSample { t: impact_time, state: hit });
            let mut deviation = [0.0; 10];
            for k in 0..5 {
                deviation[k] = post.q[k] - initial.q[k];
                deviation[5 + k] = post.qdot[k] - initial.qdot[k];
            }
            let max_deviation = deviation.iter().fold(0.0f64, |m, d| m.max(d.abs()));
            return Ok(StepSimulation {
                impact_time,
                initial,
                pre_impact: hit,
                post_impact: post,
                impulse: [outcome.impulse.x, outcome.impulse.y],
                deviation,
                max_deviation,
                trajectory,
            });
        }
        state = next;
        t += dt;
        h = h_next;
        steps += 1;
        if steps.is_multiple_of(cfg.record_every) {
            trajectory.push(SimSample { t, state });
        }
    }
    Err(GaitError::NoImpact { horizon })
}
