//! Quasi-static pusher-slider with sticking contact at a face midpoint.
//!
//! The slider is a square of half-size `h`. A push `u = (u_n, u_t)` is given
//! in the contact frame of the active face: `u_n` along the inward normal and
//! `u_t` along the face tangent. With contact point `p` and body-frame
//! velocity `v`, the body twist follows the ellipsoidal limit surface
//! `omega = (p_x v_y - p_y v_x) / (c^2 + |p|^2)`. A non-positive normal
//! component breaks contact and leaves the slider at rest.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::basis::BasisEncoding;
use super::Objective;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PushParams {
    pub half_size: f64,
    pub c_ellipsoid: f64,
}

impl Default for PushParams {
    fn default() -> Self {
        Self {
            half_size: 0.05,
            c_ellipsoid: 0.03,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PushState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub face: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Contact point, inward normal and tangent of a face in the body frame.
fn face_frame(face: u8, h: f64) -> Result<([f64; 2], [f64; 2], [f64; 2])> {
    match face {
        1 => Ok(([-h, 0.0], [1.0, 0.0], [0.0, 1.0])),
        2 => Ok(([0.0, -h], [0.0, 1.0], [-1.0, 0.0])),
        3 => Ok(([h, 0.0], [-1.0, 0.0], [0.0, -1.0])),
        4 => Ok(([0.0, h], [0.0, -1.0], [1.0, 0.0])),
        f => Err(Error::Domain(format!("push face must be in 1..=4, got {f}"))),
    }
}

/// Body twist `(v_x, v_y, omega)` produced by pushing `face` with `u`.
pub fn body_twist(face: u8, u: [f64; 2], params: &PushParams) -> Result<[f64; 3]> {
    let (p, n, t) = face_frame(face, params.half_size)?;
    if u[0] <= 0.0 {
        return Ok([0.0; 3]);
    }
    let v = [u[0] * n[0] + u[1] * t[0], u[0] * n[1] + u[1] * t[1]];
    let c2 = params.c_ellipsoid * params.c_ellipsoid;
    let omega = (p[0] * v[1] - p[1] * v[0]) / (c2 + p[0] * p[0] + p[1] * p[1]);
    Ok([v[0], v[1], omega])
}

/// One explicit Euler step of length `dt`.
pub fn push_step(s: PushState, face: u8, u: [f64; 2], dt: f64, params: &PushParams) -> Result<PushState> {
    let [vx, vy, omega] = body_twist(face, u, params)?;
    let (sin, cos) = s.theta.sin_cos();
    Ok(PushState {
        x: s.x + (cos * vx - sin * vy) * dt,
        y: s.y + (sin * vx + cos * vy) * dt,
        theta: wrap_angle(s.theta + omega * dt),
        face,
    })
}

pub fn state_error(s: &PushState, target: &Pose) -> f64 {
    let pos = ((s.x - target.x).powi(2) + (s.y - target.y).powi(2)).sqrt();
    pos + 0.1 * wrap_angle(s.theta - target.theta).abs()
}

/// `c_state(final) + 0.01 sum_t |u_t|`.
pub fn push_cost(trajectory: &[PushState], controls: &[[f64; 2]], target: &Pose) -> f64 {
    let last = trajectory.last().expect("push trajectory must be nonempty");
    let effort: f64 = controls.iter().map(|u| u[0].hypot(u[1])).sum();
    state_error(last, target) + 0.01 * effort
}

/// Number of stage boundaries where the contact face changes.
pub fn face_switches(faces: &[i64]) -> usize {
    faces.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Multi-stage pushing task: one face per stage and a basis-encoded
/// `(u_n, u_t)` profile per stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PushTask {
    pub params: PushParams,
    pub start: Pose,
    pub target: Pose,
    pub stages: usize,
    pub basis: BasisEncoding,
    pub dt: f64,
    pub u_max: f64,
}

pub struct Rollout {
    pub states: Vec<PushState>,
    pub controls: Vec<[f64; 2]>,
}

impl PushTask {
    pub fn weights_per_stage(&self) -> usize {
        2 * self.basis.count()
    }

    pub fn rollout(&self, faces: &[i64], weights: &[f64]) -> Result<Rollout> {
        let per = self.weights_per_stage();
        if faces.len() != self.stages || weights.len() != per * self.stages {
            return Err(Error::DimensionMismatch(format!(
                "push task with {} stages needs {} faces and {} weights, got {} and {}",
                self.stages,
                self.stages,
                per * self.stages,
                faces.len(),
                weights.len()
            )));
        }
        let b = self.basis.count();
        let first = u8::try_from(faces[0]).map_err(|_| Error::Domain(format!("bad face {}", faces[0])))?;
        let mut s = PushState {
            x: self.start.x,
            y: self.start.y,
            theta: wrap_angle(self.start.theta),
            face: first,
        };
        let mut states = vec![s];
        let mut controls = Vec::with_capacity(self.stages * self.basis.horizon());
        for (k, &face) in faces.iter().enumerate() {
            let face = u8::try_from(face).map_err(|_| Error::Domain(format!("bad face {face}")))?;
            let w = &weights[k * per..(k + 1) * per];
            let un = self.basis.decode(&w[..b]);
            let ut = self.basis.decode(&w[b..]);
            for (&n, &t) in un.iter().zip(&ut) {
                let u = [n, t];
                s = push_step(s, face, u, self.dt, &self.params)?;
                states.push(s);
                controls.push(u);
            }
        }
        Ok(Rollout { states, controls })
    }
}

impl Objective for PushTask {
    fn cost(&self, _z: &[f64], actions: &[i64], weights: &[f64]) -> Result<f64> {
        let r = self.rollout(actions, weights)?;
        Ok(push_cost(&r.states, &r.controls, &self.target))
    }

    fn error_metric(&self, _z: &[f64], actions: &[i64], weights: &[f64]) -> Result<f64> {
        let r = self.rollout(actions, weights)?;
        Ok(state_error(r.states.last().expect("nonempty"), &self.target))
    }
}
