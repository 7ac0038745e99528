//! World/drone data model, kinematic stepping, collision detection, and the
//! closed-loop episode runner.
//!
//! The simulator is a planar kinematic unicycle at fixed forward speed: the
//! only control is the yaw rate, applied turn-first then translate, so traces
//! are reproducible bit for bit. All operations are pure functions of their
//! inputs; `World` and `DroneState` are immutable value types that are safe
//! to share between concurrent episodes.

mod episode;
mod shape;
mod world;

pub use episode::{
    check_collision, clearance, goal_met, goal_reached, run_episode, time_to_collision_steps,
    Controller, EpisodeConfig, EpisodeResult, ObsCtx, StepObserver, Termination, TraceStep,
};
pub use shape::{Aabb, RayHit, Shape, Vec2};
pub use world::{EnvKind, GoalKind, GoalSpec, World};

use crate::{Error, Result};

/// Planar pose: position in meters plus heading in radians
/// (counterclockwise-positive, 0 = +x axis, normalized to `(-pi, pi]`).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Pose {
        Pose {
            x,
            y,
            heading: normalize_angle(heading),
        }
    }

    pub fn origin() -> Pose {
        Pose {
            x: 0.0,
            y: 0.0,
            heading: 0.0,
        }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.heading.is_finite()
    }
}

/// Wrap an angle into `(-pi, pi]`.
pub fn normalize_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let two_pi = 2.0 * PI;
    let mut r = a % two_pi;
    if r <= -PI {
        r += two_pi;
    } else if r > PI {
        r -= two_pi;
    }
    r
}

/// Drone state: pose plus the fixed motion parameters.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct DroneState {
    pub pose: Pose,
    /// Constant forward speed in m/s.
    pub forward_speed: f64,
    /// Collision disc radius in meters.
    pub body_radius: f64,
}

impl Default for DroneState {
    fn default() -> Self {
        DroneState {
            pose: Pose::origin(),
            forward_speed: 1.3,
            body_radius: 0.25,
        }
    }
}

impl DroneState {
    pub fn with_pose(self, pose: Pose) -> DroneState {
        DroneState { pose, ..self }
    }
}

/// Scalar yaw-rate command in rad/s; positive turns left (counterclockwise).
/// Clamped to `[-1, 1]` before application.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Action {
    pub yaw_rate: f64,
}

impl Action {
    pub fn new(yaw_rate: f64) -> Action {
        Action { yaw_rate }
    }

    pub fn clamped(&self) -> f64 {
        self.yaw_rate.clamp(-1.0, 1.0)
    }
}

/// Advance the drone by one timestep: the (clamped) yaw turn is applied
/// first, then the drone translates `v * dt` along the new heading.
pub fn step(drone: &DroneState, action: Action, dt: f64) -> Result<DroneState> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::invalid(format!("step: dt must be positive and finite, got {dt}")));
    }
    if !action.yaw_rate.is_finite() {
        return Err(Error::invalid("step: non-finite yaw rate".to_string()));
    }
    if !drone.pose.is_finite() {
        return Err(Error::invalid("step: non-finite pose".to_string()));
    }
    let heading = normalize_angle(drone.pose.heading + action.clamped() * dt);
    let ds = drone.forward_speed * dt;
    let pose = Pose {
        x: drone.pose.x + ds * heading.cos(),
        y: drone.pose.y + ds * heading.sin(),
        heading,
    };
    Ok(DroneState { pose, ..*drone })
}
