//! Planar serial arms: forward kinematics, link–circle collision checks,
//! and the reaching / motion-planning costs built on them.

use serde::{Deserialize, Serialize};

use super::basis::BasisEncoding;

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: Point,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarArm {
    pub link_lengths: Vec<f64>,
    #[serde(default)]
    pub base: Point,
}

/// Joint positions from the base to the tip; `joints.len() == links + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmPose {
    pub joints: Vec<Point>,
}

impl ArmPose {
    pub fn eef(&self) -> Point {
        *self.joints.last().expect("pose has a base point")
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.joints.windows(2).map(|w| (w[0], w[1]))
    }
}

impl PlanarArm {
    pub fn new(link_lengths: Vec<f64>) -> Self {
        Self {
            link_lengths,
            base: [0.0, 0.0],
        }
    }

    pub fn dof(&self) -> usize {
        self.link_lengths.len()
    }

    pub fn reach(&self) -> f64 {
        self.link_lengths.iter().sum()
    }

    /// Chained rotations: link `i` points along the sum of the first `i + 1` angles.
    pub fn fk(&self, q: &[f64]) -> ArmPose {
        assert_eq!(q.len(), self.dof(), "joint vector length must equal link count");
        let mut joints = Vec::with_capacity(q.len() + 1);
        let mut p = self.base;
        let mut heading = 0.0;
        joints.push(p);
        for (len, angle) in self.link_lengths.iter().zip(q) {
            heading += angle;
            p = [p[0] + len * heading.cos(), p[1] + len * heading.sin()];
            joints.push(p);
        }
        ArmPose { joints }
    }

    /// Per-link collision flags against a set of circles.
    pub fn collisions(&self, pose: &ArmPose, obstacles: &[Circle]) -> Vec<bool> {
        pose.segments()
            .map(|(a, b)| obstacles.iter().any(|c| segment_hits_circle(a, b, c)))
            .collect()
    }
}

pub fn fk_planar(arm: &PlanarArm, q: &[f64]) -> ArmPose {
    arm.fk(q)
}

fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Distance from a point to a closed segment.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let len_sq = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len_sq > 0.0 {
        (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len_sq).clamp(0.0, 1.0)
    } else {
        0.0
    };
    dist(p, [a[0] + t * ab[0], a[1] + t * ab[1]])
}

/// Touching counts as a collision.
pub fn segment_hits_circle(a: Point, b: Point, circle: &Circle) -> bool {
    point_segment_distance(circle.center, a, b) <= circle.radius
}

/// `50 |eef(q) - target| + sum_i collides_i(q)`.
pub fn ik_cost(arm: &PlanarArm, q: &[f64], target: Point, obstacles: &[Circle]) -> f64 {
    let pose = arm.fk(q);
    let hits = arm.collisions(&pose, obstacles).into_iter().filter(|&h| h).count();
    50.0 * dist(pose.eef(), target) + hits as f64
}

pub const CONTROL_EPS: f64 = 1e-6;

/// Breakdown of the motion-planning cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionCost {
    pub goal: f64,
    pub collisions: usize,
    pub control: f64,
}

impl MotionCost {
    pub fn total(&self) -> f64 {
        50.0 * self.goal + self.collisions as f64 + 0.1 * self.control
    }
}

/// Joint trajectory `q_0 = q0`, `q_t = q0 + Psi_t w` for `t = 1..T`, with
/// weights laid out joint-major (`weights[j * B + b]`).
pub fn decode_trajectory(q0: &[f64], weights: &[f64], encoding: &BasisEncoding) -> Vec<Vec<f64>> {
    let b = encoding.count();
    assert_eq!(weights.len(), b * q0.len(), "one weight block per joint");
    let mut traj = Vec::with_capacity(encoding.horizon() + 1);
    traj.push(q0.to_vec());
    for t in 0..encoding.horizon() {
        let row = encoding.row(t);
        traj.push(
            q0.iter()
                .enumerate()
                .map(|(j, &q)| {
                    q + row
                        .iter()
                        .zip(&weights[j * b..(j + 1) * b])
                        .map(|(p, w)| p * w)
                        .sum::<f64>()
                })
                .collect(),
        );
    }
    traj
}

pub fn mp_cost_terms(
    arm: &PlanarArm,
    q0: &[f64],
    weights: &[f64],
    target: Point,
    obstacles: &[Circle],
    encoding: &BasisEncoding,
) -> MotionCost {
    let traj = decode_trajectory(q0, weights, encoding);
    let mut collisions = 0;
    let mut path = 0.0;
    for t in 1..traj.len() {
        let pose = arm.fk(&traj[t]);
        if arm.collisions(&pose, obstacles).into_iter().any(|h| h) {
            collisions += 1;
        }
        path += l2(&traj[t], &traj[t - 1]);
    }
    let last = traj.last().expect("trajectory has q0");
    let goal = dist(arm.fk(last).eef(), target);
    let control = path / (l2(last, &traj[0]) + CONTROL_EPS);
    MotionCost {
        goal,
        collisions,
        control,
    }
}

/// `50 c_goal + c_obst + 0.1 c_control`.
pub fn mp_cost(
    arm: &PlanarArm,
    q0: &[f64],
    weights: &[f64],
    target: Point,
    obstacles: &[Circle],
    encoding: &BasisEncoding,
) -> f64 {
    mp_cost_terms(arm, q0, weights, target, obstacles, encoding).total()
}

fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn close(a: Point, b: Point) -> bool {
        dist(a, b) < 1e-12
    }

    #[test]
    fn fk_examples() {
        let arm = PlanarArm::new(vec![1.0, 1.0, 1.0]);
        assert!(close(arm.fk(&[0.0, 0.0, 0.0]).eef(), [3.0, 0.0]));
        assert!(close(arm.fk(&[FRAC_PI_2, 0.0, 0.0]).eef(), [0.0, 3.0]));
        assert!(close(arm.fk(&[FRAC_PI_2, -FRAC_PI_2, 0.0]).eef(), [2.0, 1.0]));
        assert!(close(arm.fk(&[FRAC_PI_2, -FRAC_PI_2, -FRAC_PI_2]).eef(), [1.0, 0.0]));
    }

    #[test]
    fn fk_zero_configuration_is_horizontal() {
        let arm = PlanarArm::new(vec![0.5, 0.3, 0.2]);
        let pose = arm.fk(&[0.0; 3]);
        for (j, p) in pose.joints.iter().enumerate() {
            assert_eq!(p[1], 0.0, "joint {j}");
        }
    }

    #[test]
    fn ik_cost_zero_at_target() {
        let arm = PlanarArm::new(vec![1.0, 1.0, 1.0]);
        let q = [0.3, -0.4, 0.9];
        let target = arm.fk(&q).eef();
        assert!(ik_cost(&arm, &q, target, &[]) < 1e-12);
    }

    #[test]
    fn obstacle_on_link_two_collides() {
        let arm = PlanarArm::new(vec![1.0, 1.0, 1.0]);
        let obstacle = Circle {
            center: [1.5, 0.0],
            radius: 0.05,
        };
        let c = ik_cost(&arm, &[0.0; 3], [3.0, 0.0], &[obstacle]);
        assert!(c >= 1.0);
    }

    #[test]
    fn touching_counts() {
        let c = Circle {
            center: [0.5, 1.0],
            radius: 1.0,
        };
        assert!(segment_hits_circle([0.0, 0.0], [1.0, 0.0], &c));
        let c = Circle {
            center: [0.5, 1.0],
            radius: 0.999,
        };
        assert!(!segment_hits_circle([0.0, 0.0], [1.0, 0.0], &c));
    }
}
