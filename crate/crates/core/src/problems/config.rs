//! JSON problem descriptions (`"schema": "ttts-problem/1"`).
//!
//! ```json
//! { "schema": "ttts-problem/1", "kind": "ik",
//!   "arm": { "link_lengths": [1, 1, 1] }, "target": [1.5, 1.0],
//!   "obstacles": [{ "center": [1.0, -0.5], "radius": 0.2 }] }
//! ```
//!
//! Every kind-specific field except the geometry has a default; `transform`
//! overrides the kind's default cost-to-density map.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::arm::{Circle, PlanarArm, Point};
use super::basis::BasisEncoding;
use super::push::{Pose, PushParams, PushTask};
use super::{ActionDim, IkTask, MpTask, Problem, F1, F2};
use crate::error::{Error, Result};
use crate::tt::UniformGrid;
use crate::ttgo::MonotoneTransform;

pub const PROBLEM_SCHEMA: &str = "ttts-problem/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub schema: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(flatten)]
    pub kind: ProblemKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<MonotoneTransform>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetGrid {
    pub x: UniformGrid,
    pub y: UniformGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProblemKind {
    F1 {
        #[serde(default = "f1_points")]
        grid_points: usize,
    },
    F2 {
        #[serde(default = "f1_points")]
        grid_points: usize,
    },
    Ik {
        arm: PlanarArm,
        target: Point,
        #[serde(default)]
        obstacles: Vec<Circle>,
        #[serde(default = "arm_points")]
        grid_points: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target_grid: Option<TargetGrid>,
    },
    Mp {
        arm: PlanarArm,
        q0: Vec<f64>,
        target: Point,
        #[serde(default)]
        obstacles: Vec<Circle>,
        #[serde(default = "basis_per_joint")]
        basis_per_joint: usize,
        #[serde(default = "mp_horizon")]
        horizon: usize,
        #[serde(default = "arm_points")]
        grid_points: usize,
        #[serde(default = "weight_range")]
        weight_range: f64,
    },
    Push {
        #[serde(default)]
        params: PushParams,
        start: Pose,
        target: Pose,
        #[serde(default = "push_stages")]
        stages: usize,
        #[serde(default = "push_steps")]
        steps_per_stage: usize,
        #[serde(default = "push_basis")]
        basis_per_stage: usize,
        #[serde(default = "push_points")]
        grid_points: usize,
        #[serde(default = "push_dt")]
        dt: f64,
        #[serde(default = "push_u_max")]
        u_max: f64,
    },
}

fn f1_points() -> usize {
    100
}
fn arm_points() -> usize {
    20
}
fn basis_per_joint() -> usize {
    5
}
fn mp_horizon() -> usize {
    50
}
fn weight_range() -> f64 {
    PI
}
fn push_stages() -> usize {
    2
}
fn push_steps() -> usize {
    10
}
fn push_basis() -> usize {
    1
}
fn push_points() -> usize {
    50
}
fn push_dt() -> f64 {
    0.1
}
fn push_u_max() -> f64 {
    0.1
}

impl ProblemKind {
    pub fn label(&self) -> &'static str {
        match self {
            ProblemKind::F1 { .. } => "f1",
            ProblemKind::F2 { .. } => "f2",
            ProblemKind::Ik { .. } => "ik",
            ProblemKind::Mp { .. } => "mp",
            ProblemKind::Push { .. } => "push",
        }
    }

    /// Cost-to-density map used when the config does not name one.
    pub fn default_transform(&self) -> MonotoneTransform {
        let beta = match self {
            ProblemKind::F1 { .. } | ProblemKind::F2 { .. } => 1.0,
            ProblemKind::Ik { .. } => 0.1,
            ProblemKind::Mp { .. } => 0.1,
            ProblemKind::Push { .. } => 20.0,
        };
        MonotoneTransform::NegExp { beta }
    }

    /// Default TT rank cap for the cost model of this kind.
    pub fn default_max_rank(&self) -> usize {
        match self {
            ProblemKind::F1 { .. } | ProblemKind::F2 { .. } => 2,
            ProblemKind::Ik { .. } => 21,
            ProblemKind::Mp { .. } | ProblemKind::Push { .. } => 41,
        }
    }
}

impl ProblemConfig {
    pub fn new(kind: ProblemKind) -> Self {
        Self {
            schema: PROBLEM_SCHEMA.to_string(),
            name: None,
            kind,
            transform: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ProblemConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.schema != PROBLEM_SCHEMA {
            return Err(Error::Config(format!(
                "unsupported problem schema {:?}, expected {PROBLEM_SCHEMA:?}",
                cfg.schema
            )));
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn name(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.kind.label().to_string())
    }

    pub fn transform(&self) -> MonotoneTransform {
        self.transform.unwrap_or_else(|| self.kind.default_transform())
    }

    pub fn build(&self) -> Result<Problem> {
        let transform = self.transform();
        transform.validate()?;
        let problem = match &self.kind {
            ProblemKind::F1 { grid_points } => {
                let g = grid(-5.0, 5.0, *grid_points)?;
                Problem::new(self.name(), vec![], vec![g, g], Arc::new(F1))
            }
            ProblemKind::F2 { grid_points } => Problem::new(
                self.name(),
                vec![ActionDim::range(0, 10)],
                vec![grid(-5.0, 5.0, *grid_points)?],
                Arc::new(F2),
            ),
            ProblemKind::Ik {
                arm,
                target,
                obstacles,
                grid_points,
                target_grid,
            } => {
                check_arm(arm)?;
                check_obstacles(obstacles)?;
                let g = grid(-PI, PI, *grid_points)?;
                let task = IkTask {
                    arm: arm.clone(),
                    target: *target,
                    obstacles: obstacles.clone(),
                };
                let p = Problem::new(self.name(), vec![], vec![g; arm.dof()], Arc::new(task));
                match target_grid {
                    Some(tg) => p.with_condition(vec![tg.x, tg.y], target.to_vec()),
                    None => p,
                }
            }
            ProblemKind::Mp {
                arm,
                q0,
                target,
                obstacles,
                basis_per_joint,
                horizon,
                grid_points,
                weight_range,
            } => {
                check_arm(arm)?;
                check_obstacles(obstacles)?;
                if q0.len() != arm.dof() {
                    return Err(Error::Config(format!(
                        "q0 has {} entries for a {}-link arm",
                        q0.len(),
                        arm.dof()
                    )));
                }
                if !(*weight_range > 0.0) {
                    return Err(Error::Config("weight_range must be positive".into()));
                }
                let basis = BasisEncoding::new(*horizon, *basis_per_joint)?;
                let g = grid(-weight_range, *weight_range, *grid_points)?;
                let task = MpTask {
                    arm: arm.clone(),
                    q0: q0.clone(),
                    target: *target,
                    obstacles: obstacles.clone(),
                    basis,
                };
                Problem::new(
                    self.name(),
                    vec![],
                    vec![g; arm.dof() * basis_per_joint],
                    Arc::new(task),
                )
                .with_meta(1, *horizon)
            }
            ProblemKind::Push {
                params,
                start,
                target,
                stages,
                steps_per_stage,
                basis_per_stage,
                grid_points,
                dt,
                u_max,
            } => {
                if *stages == 0 {
                    return Err(Error::Config("push task needs at least one stage".into()));
                }
                if !(*dt > 0.0) || !(*u_max > 0.0) || !(params.half_size > 0.0) || !(params.c_ellipsoid > 0.0) {
                    return Err(Error::Config(
                        "push dt, u_max, half_size and c_ellipsoid must be positive".into(),
                    ));
                }
                let basis = BasisEncoding::new(*steps_per_stage, *basis_per_stage)?;
                let normal = grid(0.0, *u_max, *grid_points)?;
                let tangent = grid(-u_max, *u_max, *grid_points)?;
                let mut weights = Vec::new();
                for _ in 0..*stages {
                    weights.extend(std::iter::repeat_n(normal, *basis_per_stage));
                    weights.extend(std::iter::repeat_n(tangent, *basis_per_stage));
                }
                let task = PushTask {
                    params: *params,
                    start: *start,
                    target: *target,
                    stages: *stages,
                    basis,
                    dt: *dt,
                    u_max: *u_max,
                };
                Problem::new(
                    self.name(),
                    vec![ActionDim::range(1, 4); *stages],
                    weights,
                    Arc::new(task),
                )
                .with_meta(*stages, *stages * *steps_per_stage)
            }
        };
        let problem = problem.with_transform(transform);
        problem.check_grid()?;
        Ok(problem)
    }
}

fn grid(lo: f64, hi: f64, points: usize) -> Result<UniformGrid> {
    UniformGrid::new(lo, hi, points).map_err(|e| Error::Config(e.to_string()))
}

fn check_arm(arm: &PlanarArm) -> Result<()> {
    if arm.link_lengths.is_empty() || arm.link_lengths.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::Config("arm link lengths must be positive and nonempty".into()));
    }
    Ok(())
}

fn check_obstacles(obstacles: &[Circle]) -> Result<()> {
    if obstacles.iter().any(|c| !(c.radius >= 0.0)) {
        return Err(Error::Config("obstacle radii must be nonnegative".into()));
    }
    Ok(())
}

/// Names of the built-in problem configs.
pub const BUILTIN: [&str; 5] = ["f1", "f2", "ik", "mp", "push"];

/// Built-in configs registered by name.
pub fn builtin(name: &str) -> Option<ProblemConfig> {
    let kind = match name {
        "f1" => ProblemKind::F1 { grid_points: 100 },
        "f2" => ProblemKind::F2 { grid_points: 100 },
        "ik" => ProblemKind::Ik {
            arm: PlanarArm::new(vec![1.0, 1.0, 1.0]),
            target: [1.5, 1.2],
            obstacles: vec![Circle {
                center: [1.3, -0.4],
                radius: 0.25,
            }],
            grid_points: 20,
            target_grid: None,
        },
        "mp" => ProblemKind::Mp {
            arm: PlanarArm::new(vec![1.0, 1.0, 1.0]),
            q0: vec![-PI / 2.0, 0.0, 0.0],
            target: [2.0, 1.0],
            obstacles: vec![
                Circle {
                    center: [2.2, -0.9],
                    radius: 0.35,
                },
                Circle {
                    center: [0.9, 1.9],
                    radius: 0.35,
                },
            ],
            basis_per_joint: 3,
            horizon: 50,
            grid_points: 20,
            weight_range: PI,
        },
        "push" => ProblemKind::Push {
            params: PushParams::default(),
            start: Pose {
                x: 0.0,
                y: 0.0,
                theta: 0.0,
            },
            target: Pose {
                x: 0.1,
                y: 0.05,
                theta: PI / 4.0,
            },
            stages: 2,
            steps_per_stage: 10,
            basis_per_stage: 1,
            grid_points: 10,
            dt: 0.1,
            u_max: 0.1,
        },
        _ => return None,
    };
    let mut cfg = ProblemConfig::new(kind);
    cfg.name = Some(name.to_string());
    Some(cfg)
}
