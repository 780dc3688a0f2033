//! Benchmark problems in the common mixed discrete/continuous form: optional
//! task (conditioning) variables `z`, `K` discrete action layers and `B`
//! gridded continuous weights. A tree branch lists action indices first,
//! then weight grid indices.

pub mod arm;
pub mod basis;
pub mod config;
pub mod push;
pub mod toy;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tt::UniformGrid;
use crate::ttgo::MonotoneTransform;

use arm::{Circle, PlanarArm, Point};
use basis::BasisEncoding;

/// Cost model of a problem. Implementations are pure.
pub trait Objective: Send + Sync {
    fn cost(&self, z: &[f64], actions: &[i64], weights: &[f64]) -> Result<f64>;

    /// Task-level error reported alongside the cost (reaching error, state
    /// error); defaults to the cost itself.
    fn error_metric(&self, z: &[f64], actions: &[i64], weights: &[f64]) -> Result<f64> {
        self.cost(z, actions, weights)
    }

    /// Modes reachable from `mode` by taking `action`.
    fn transition(&self, _mode: i64, action: i64) -> Vec<i64> {
        vec![action]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionDim {
    pub labels: Vec<i64>,
}

impl ActionDim {
    pub fn new(labels: Vec<i64>) -> Self {
        Self { labels }
    }

    pub fn range(lo: i64, hi: i64) -> Self {
        Self::new((lo..=hi).collect())
    }
}

#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub condition_dims: Vec<UniformGrid>,
    pub default_condition: Vec<f64>,
    pub action_dims: Vec<ActionDim>,
    pub weight_dims: Vec<UniformGrid>,
    pub stages: usize,
    pub horizon: usize,
    pub transform: MonotoneTransform,
    objective: Arc<dyn Objective>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("tree_shape", &self.tree_shape())
            .field("condition_dims", &self.condition_dims.len())
            .finish()
    }
}

impl Problem {
    pub fn new(
        name: impl Into<String>,
        action_dims: Vec<ActionDim>,
        weight_dims: Vec<UniformGrid>,
        objective: Arc<dyn Objective>,
    ) -> Self {
        Self {
            name: name.into(),
            condition_dims: Vec::new(),
            default_condition: Vec::new(),
            action_dims,
            weight_dims,
            stages: 1,
            horizon: 1,
            transform: MonotoneTransform::default(),
            objective,
        }
    }

    pub fn with_condition(mut self, dims: Vec<UniformGrid>, default: Vec<f64>) -> Self {
        self.condition_dims = dims;
        self.default_condition = default;
        self
    }

    pub fn with_transform(mut self, transform: MonotoneTransform) -> Self {
        self.transform = transform;
        self
    }

    pub fn with_meta(mut self, stages: usize, horizon: usize) -> Self {
        self.stages = stages;
        self.horizon = horizon;
        self
    }

    pub fn objective(&self) -> &Arc<dyn Objective> {
        &self.objective
    }

    /// Mode sizes of the decision tree (actions, then weights).
    pub fn tree_shape(&self) -> Vec<usize> {
        self.action_dims
            .iter()
            .map(|a| a.labels.len())
            .chain(self.weight_dims.iter().map(|g| g.points))
            .collect()
    }

    /// Tree shape with the conditioning modes in front.
    pub fn augmented_shape(&self) -> Vec<usize> {
        self.condition_dims
            .iter()
            .map(|g| g.points)
            .chain(self.tree_shape())
            .collect()
    }

    pub fn branch_count(&self) -> u128 {
        self.tree_shape().iter().map(|&n| n as u128).product()
    }

    pub fn check_grid(&self) -> Result<()> {
        let shape = self.augmented_shape();
        if shape.is_empty() {
            return Err(Error::InfeasibleGrid(format!(
                "problem {} has no decision modes",
                self.name
            )));
        }
        if let Some(k) = shape.iter().position(|&n| n == 0) {
            return Err(Error::InfeasibleGrid(format!(
                "mode {k} of problem {} has size 0",
                self.name
            )));
        }
        if self.default_condition.len() != self.condition_dims.len() {
            return Err(Error::Config(format!(
                "problem {} has {} condition grids but {} default values",
                self.name,
                self.condition_dims.len(),
                self.default_condition.len()
            )));
        }
        Ok(())
    }

    pub fn weight_bounds(&self) -> Vec<(f64, f64)> {
        self.weight_dims.iter().map(|g| (g.lo, g.hi)).collect()
    }

    pub fn weight_spacings(&self) -> Vec<f64> {
        self.weight_dims.iter().map(UniformGrid::spacing).collect()
    }

    /// Splits a branch into action labels and weight values.
    pub fn decode(&self, branch: &[usize]) -> Result<(Vec<i64>, Vec<f64>)> {
        let k = self.action_dims.len();
        let shape = self.tree_shape();
        if branch.len() != shape.len() {
            return Err(Error::DimensionMismatch(format!(
                "branch of length {} for a tree of depth {}",
                branch.len(),
                shape.len()
            )));
        }
        for (layer, (&i, &n)) in branch.iter().zip(&shape).enumerate() {
            if i >= n {
                return Err(Error::IndexOutOfRange {
                    layer,
                    index: i,
                    size: n,
                });
            }
        }
        let actions = branch[..k]
            .iter()
            .zip(&self.action_dims)
            .map(|(&i, a)| a.labels[i])
            .collect();
        let weights = branch[k..]
            .iter()
            .zip(&self.weight_dims)
            .map(|(&i, g)| g.value(i))
            .collect();
        Ok((actions, weights))
    }

    pub fn cost(&self, z: &[f64], actions: &[i64], weights: &[f64]) -> Result<f64> {
        let c = self.objective.cost(z, actions, weights)?;
        if !c.is_finite() {
            return Err(Error::Domain(format!("non-finite cost {c} in problem {}", self.name)));
        }
        Ok(c)
    }

    pub fn error_metric(&self, z: &[f64], actions: &[i64], weights: &[f64]) -> Result<f64> {
        self.objective.error_metric(z, actions, weights)
    }

    pub fn branch_cost(&self, z: &[f64], branch: &[usize]) -> Result<f64> {
        let (a, w) = self.decode(branch)?;
        self.cost(z, &a, &w)
    }

    /// Cost at an index of the augmented grid (condition indices first).
    pub fn augmented_cost(&self, index: &[usize]) -> Result<f64> {
        let m = self.condition_dims.len();
        if index.len() < m {
            return Err(Error::DimensionMismatch(
                "augmented index shorter than condition block".into(),
            ));
        }
        let z: Vec<f64> = index[..m]
            .iter()
            .zip(&self.condition_dims)
            .map(|(&i, g)| g.value(i))
            .collect();
        self.branch_cost(&z, &index[m..])
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct F1;

impl Objective for F1 {
    fn cost(&self, _z: &[f64], _a: &[i64], w: &[f64]) -> Result<f64> {
        if w.len() != 2 {
            return Err(Error::DimensionMismatch(format!("f1 takes 2 weights, got {}", w.len())));
        }
        Ok(toy::f1(w[0], w[1]))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct F2;

impl Objective for F2 {
    fn cost(&self, _z: &[f64], a: &[i64], w: &[f64]) -> Result<f64> {
        if a.len() != 1 || w.len() != 1 {
            return Err(Error::DimensionMismatch("f2 takes one action and one weight".into()));
        }
        toy::f2(a[0] as f64, w[0])
    }
}

/// Reaching a target with a planar arm; `z`, when given, overrides the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IkTask {
    pub arm: PlanarArm,
    pub target: Point,
    #[serde(default)]
    pub obstacles: Vec<Circle>,
}

impl IkTask {
    fn target_for(&self, z: &[f64]) -> Point {
        match z {
            [x, y, ..] => [*x, *y],
            _ => self.target,
        }
    }
}

impl Objective for IkTask {
    fn cost(&self, z: &[f64], _a: &[i64], w: &[f64]) -> Result<f64> {
        check_len("joint angles", w.len(), self.arm.dof())?;
        Ok(arm::ik_cost(&self.arm, w, self.target_for(z), &self.obstacles))
    }

    fn error_metric(&self, z: &[f64], _a: &[i64], w: &[f64]) -> Result<f64> {
        check_len("joint angles", w.len(), self.arm.dof())?;
        let t = self.target_for(z);
        let e = self.arm.fk(w).eef();
        Ok((e[0] - t[0]).hypot(e[1] - t[1]))
    }
}

/// Basis-encoded joint trajectory from `q0` to a task-space target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpTask {
    pub arm: PlanarArm,
    pub q0: Vec<f64>,
    pub target: Point,
    #[serde(default)]
    pub obstacles: Vec<Circle>,
    pub basis: BasisEncoding,
}

impl MpTask {
    pub fn terms(&self, w: &[f64]) -> Result<arm::MotionCost> {
        check_len("weights", w.len(), self.arm.dof() * self.basis.count())?;
        Ok(arm::mp_cost_terms(
            &self.arm,
            &self.q0,
            w,
            self.target,
            &self.obstacles,
            &self.basis,
        ))
    }
}

impl Objective for MpTask {
    fn cost(&self, _z: &[f64], _a: &[i64], w: &[f64]) -> Result<f64> {
        Ok(self.terms(w)?.total())
    }

    fn error_metric(&self, _z: &[f64], _a: &[i64], w: &[f64]) -> Result<f64> {
        Ok(self.terms(w)?.goal)
    }
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::DimensionMismatch(format!("expected {want} {what}, got {got}")));
    }
    Ok(())
}
