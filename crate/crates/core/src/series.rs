//! Tabular series derived from a gait: the sampled trajectory, phase
//! portraits, ground reactions, torques, swing-foot path and stick-figure
//! frames. Tables are plain numbers with one header line, written as CSV.

use std::fmt::Write as _;

use crate::constraints::sample_gait;
use crate::model::{forward_kinematics, RobotParams};
use crate::polynomial::PolynomialGait;

/// Stick-figure frames per step.
pub const STICK_FRAMES: usize = 26;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File stem, e.g. `trajectory`.
    pub name: &'static str,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(name: &'static str, header: Vec<String>) -> Self {
        Self { name, header, rows: Vec::new() }
    }

    /// Comma-separated text with a single header line. Numbers use the
    /// shortest representation that round-trips exactly.
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write!(out, "{v}").expect("writing to a string");
            }
            out.push('\n');
        }
        out
    }
}

fn indexed(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |k| format!("{prefix}{k}"))
}

/// All series for `gait` sampled on `n` uniform grid points.
pub fn gait_series(gait: &PolynomialGait, params: &RobotParams, n: usize) -> Vec<Table> {
    let grid = sample_gait(gait, params, n);

    let mut header = vec!["t".to_string()];
    header.extend(indexed("q", 5));
    header.extend(indexed("qdot", 5));
    header.extend(indexed("qddot", 5));
    header.extend(indexed("tau", 4));
    header.extend(["fx", "fy", "swing_x", "swing_y", "zero_dynamics"].map(String::from));
    let mut trajectory = Table::new("trajectory", header);

    let mut header = vec!["t".to_string()];
    for k in 1..=5 {
        header.push(format!("q{k}"));
        header.push(format!("qdot{k}"));
    }
    let mut phase = Table::new("phase", header);
    let mut ground = Table::new("ground_reaction", ["t", "fx", "fy", "friction_ratio"].map(String::from).to_vec());
    let mut torques = Table::new("torques", std::iter::once("t".to_string()).chain(indexed("tau", 4)).collect());
    let mut swing = Table::new("swing_foot", ["t", "x", "y"].map(String::from).to_vec());

    for p in &grid {
        let mut row = vec![p.t];
        row.extend(p.q.iter());
        row.extend(p.qdot.iter());
        row.extend(p.qddot.iter());
        row.extend(p.torques.iter());
        row.extend([p.reaction.x, p.reaction.y, p.swing_foot.x, p.swing_foot.y, p.zero_dynamics]);
        trajectory.rows.push(row);

        let mut row = vec![p.t];
        for k in 0..5 {
            row.push(p.q[k]);
            row.push(p.qdot[k]);
        }
        phase.rows.push(row);

        let ratio = if p.reaction.y > 0.0 { p.reaction.x.abs() / p.reaction.y } else { f64::INFINITY };
        ground.rows.push(vec![p.t, p.reaction.x, p.reaction.y, ratio]);
        torques.rows.push(std::iter::once(p.t).chain(p.torques.iter().copied()).collect());
        swing.rows.push(vec![p.t, p.swing_foot.x, p.swing_foot.y]);
    }

    vec![trajectory, phase, ground, torques, swing, stick_frames(gait, params)]
}

/// Joint coordinates of the chain at evenly spaced instants over the step.
pub fn stick_frames(gait: &PolynomialGait, params: &RobotParams) -> Table {
    let mut header = vec!["frame".to_string(), "t".to_string()];
    for joint in ["stance_foot", "stance_knee", "hip", "trunk_tip", "swing_knee", "swing_foot"] {
        header.push(format!("{joint}_x"));
        header.push(format!("{joint}_y"));
    }
    let mut table = Table::new("stick_frames", header);
    for (i, t) in gait.grid(STICK_FRAMES).into_iter().enumerate() {
        let g = forward_kinematics(&gait.eval_unchecked(t).q, params);
        let mut row = vec![i as f64, t];
        for p in [g.stance_foot, g.stance_knee, g.hip, g.trunk_tip, g.swing_knee, g.swing_foot] {
            row.push(p.x);
            row.push(p.y);
        }
        table.rows.push(row);
    }
    table
}
