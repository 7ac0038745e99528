//! Collision tests, goal rules, and the closed-loop episode runner.

use super::{step, Action, DroneState, Pose, Vec2, World};
use crate::render::{raycast, render_frame_from_scan, CameraModel, DepthScan, Frame};
use crate::sim::GoalKind;
use crate::{Error, Result};

/// Minimum distance from a point to any obstacle or to the bounds boundary
/// (negative once outside / inside a solid).
pub fn clearance(world: &World, p: Vec2) -> f64 {
    let mut d = world.bounds.inner_distance(p);
    for s in &world.obstacles {
        d = d.min(s.distance(p));
    }
    d
}

/// True iff the drone's body disc intersects any shape or exits the bounds.
pub fn check_collision(world: &World, drone: &DroneState) -> bool {
    clearance(world, drone.pose.position()) < drone.body_radius
}

/// True iff the goal rule holds at `pose`.
pub fn goal_met(world: &World, pose: &Pose) -> bool {
    match world.goal.kind {
        GoalKind::AxialDistance => pose.x >= world.goal.threshold,
        GoalKind::RadialDistance => pose.position().norm() >= world.goal.threshold,
    }
}

/// True iff the goal rule holds at the final pose of a nonempty trace.
pub fn goal_reached(world: &World, trace: &[TraceStep]) -> bool {
    trace.last().map_or(false, |t| goal_met(world, &t.pose))
}

/// Number of simulator steps until straight flight from `pose` collides, up
/// to `horizon` steps. `None` means no collision within the horizon.
pub fn time_to_collision_steps(
    world: &World,
    pose: &Pose,
    drone: &DroneState,
    dt: f64,
    horizon: usize,
) -> Option<usize> {
    let mut probe = drone.with_pose(*pose);
    for k in 1..=horizon {
        probe = step(&probe, Action::new(0.0), dt).ok()?;
        if check_collision(world, &probe) {
            return Some(k);
        }
    }
    None
}

/// Why an episode ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Success,
    Collision,
    Timeout,
}

/// One executed step: the pose reached after applying `action` (so the trace
/// poses are exactly the states the runner checked for collision/goal).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceStep {
    pub pose: Pose,
    pub action: Action,
    /// Expert action at the observation pose, when a demonstration recorder
    /// filled it in.
    pub expert: Option<Action>,
}

/// Outcome of one closed-loop episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    /// Path arc length in meters (constant speed: `steps * v * dt`).
    pub distance_traveled: f64,
    pub termination: Termination,
    pub steps: usize,
    pub trace: Vec<TraceStep>,
}

#[derive(Debug, Clone, Copy)]
pub struct EpisodeConfig {
    pub dt: f64,
    pub max_steps: usize,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        // dt matches the 20 fps recording rate; 1200 steps = 60 s allows
        // 78 m at 1.3 m/s, beyond every goal threshold.
        EpisodeConfig {
            dt: 0.05,
            max_steps: 1200,
        }
    }
}

/// Everything a controller may observe at one step. Learned policies must
/// only look at `frame`; the ground-truth expert reads `scan` (the exact
/// depth scan the frame was rendered from).
pub struct ObsCtx<'a> {
    pub world: &'a World,
    pub pose: &'a Pose,
    pub cam: &'a CameraModel,
    pub frame: &'a Frame,
    pub scan: &'a DepthScan,
}

/// A closed-loop controller: maps the current observation to a yaw action.
pub trait Controller {
    fn act(&mut self, ctx: &ObsCtx<'_>) -> Action;
    /// Called at episode start so stateful controllers reset frame history.
    fn reset(&mut self) {}
}

/// Observer hook used by dataset recorders.
pub trait StepObserver {
    fn on_step(&mut self, step_index: usize, ctx: &ObsCtx<'_>, action: Action);
}

/// Run one closed-loop episode: render the observation at the current pose,
/// query the controller, step, then check collision / goal / timeout (first
/// satisfied condition wins; collision is checked before goal). Identical
/// inputs produce bit-identical results.
pub fn run_episode(
    world: &World,
    cam: &CameraModel,
    start: &DroneState,
    controller: &mut dyn Controller,
    cfg: &EpisodeConfig,
    mut observer: Option<&mut dyn StepObserver>,
) -> Result<EpisodeResult> {
    if !(cfg.dt > 0.0) {
        return Err(Error::invalid("episode dt must be positive"));
    }
    controller.reset();
    let mut drone = *start;
    let mut trace: Vec<TraceStep> = Vec::new();

    for step_index in 0..cfg.max_steps {
        let scan = raycast(world, &drone.pose, cam);
        let frame = render_frame_from_scan(world, &scan, cam);
        let ctx = ObsCtx {
            world,
            pose: &drone.pose,
            cam,
            frame: &frame,
            scan: &scan,
        };
        let action = controller.act(&ctx);
        if !action.yaw_rate.is_finite() {
            return Err(Error::numeric(format!(
                "controller returned non-finite action at step {step_index}"
            )));
        }
        if let Some(obs) = observer.as_deref_mut() {
            obs.on_step(step_index, &ctx, action);
        }
        drone = step(&drone, action, cfg.dt)?;
        trace.push(TraceStep {
            pose: drone.pose,
            action,
            expert: None,
        });

        let steps = step_index + 1;
        if check_collision(world, &drone) {
            return Ok(result(Termination::Collision, steps, trace, start, cfg));
        }
        if goal_met(world, &drone.pose) {
            return Ok(result(Termination::Success, steps, trace, start, cfg));
        }
    }

    let steps = cfg.max_steps;
    Ok(result(Termination::Timeout, steps, trace, start, cfg))
}

fn result(
    termination: Termination,
    steps: usize,
    trace: Vec<TraceStep>,
    start: &DroneState,
    cfg: &EpisodeConfig,
) -> EpisodeResult {
    EpisodeResult {
        distance_traveled: start.forward_speed * cfg.dt * steps as f64,
        termination,
        steps,
        trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::render::{StyleDef, StylePalette, TextureKind};
    use crate::sim::{Aabb, EnvKind, GoalSpec, Shape};

    pub(crate) fn test_palette() -> StylePalette {
        StylePalette {
            floor_shade: 40,
            ceiling_shade: 220,
            styles: vec![StyleDef {
                id: 0,
                base_shade: 150,
                texture: TextureKind::Flat,
                period: 1.0,
            }],
        }
    }

    fn straight_canyon() -> World {
        World {
            env_kind: EnvKind::Canyon,
            seed: 0,
            bounds: Aabb::new(Vec2::new(-5.0, -5.0), Vec2::new(120.0, 5.0)),
            goal: GoalSpec {
                kind: GoalKind::AxialDistance,
                threshold: 45.0,
            },
            style: test_palette(),
            obstacles: vec![
                Shape::Polyline {
                    points: vec![Vec2::new(-3.0, 1.5), Vec2::new(110.0, 1.5)],
                    style_id: 0,
                },
                Shape::Polyline {
                    points: vec![Vec2::new(-3.0, -1.5), Vec2::new(110.0, -1.5)],
                    style_id: 0,
                },
            ],
        }
    }

    struct Zero;
    impl Controller for Zero {
        fn act(&mut self, _ctx: &ObsCtx<'_>) -> Action {
            Action::new(0.0)
        }
    }

    #[test]
    fn straight_flight_down_straight_canyon_succeeds_at_45m() {
        let world = straight_canyon();
        let cam = CameraModel::default();
        let res = run_episode(
            &world,
            &cam,
            &DroneState::default(),
            &mut Zero,
            &EpisodeConfig::default(),
            None,
        )
        .unwrap();
        assert_eq!(res.termination, Termination::Success);
        assert!((res.distance_traveled - 45.0).abs() <= 1.3 * 0.05 + 1e-9);
        assert_eq!(res.trace.len(), res.steps);
        assert!(goal_reached(&world, &res.trace));
    }

    #[test]
    fn wall_one_meter_ahead_collides_at_roughly_three_quarters() {
        let mut world = straight_canyon();
        world.obstacles.push(Shape::Polyline {
            points: vec![Vec2::new(1.0, -1.5), Vec2::new(1.0, 1.5)],
            style_id: 0,
        });
        let cam = CameraModel::default();
        let res = run_episode(
            &world,
            &cam,
            &DroneState::default(),
            &mut Zero,
            &EpisodeConfig::default(),
            None,
        )
        .unwrap();
        assert_eq!(res.termination, Termination::Collision);
        // Stops once clearance dips under the body radius: ~0.75 m, within
        // one step's travel.
        assert!((res.distance_traveled - 0.75).abs() <= 1.3 * 0.05 + 1e-9);
    }

    #[test]
    fn collision_is_flagged_only_at_the_final_state() {
        let mut world = straight_canyon();
        world.obstacles.push(Shape::Polyline {
            points: vec![Vec2::new(8.0, -1.5), Vec2::new(8.0, 1.5)],
            style_id: 0,
        });
        let cam = CameraModel::default();
        let res = run_episode(
            &world,
            &cam,
            &DroneState::default(),
            &mut Zero,
            &EpisodeConfig::default(),
            None,
        )
        .unwrap();
        assert_eq!(res.termination, Termination::Collision);
        let drone = DroneState::default();
        for (i, t) in res.trace.iter().enumerate() {
            let colliding = check_collision(&world, &drone.with_pose(t.pose));
            assert_eq!(colliding, i == res.trace.len() - 1, "step {i}");
        }
    }

    #[test]
    fn non_finite_controller_aborts_with_error() {
        struct Nan;
        impl Controller for Nan {
            fn act(&mut self, _ctx: &ObsCtx<'_>) -> Action {
                Action::new(f64::NAN)
            }
        }
        let world = straight_canyon();
        let cam = CameraModel::default();
        let err = run_episode(
            &world,
            &cam,
            &DroneState::default(),
            &mut Nan,
            &EpisodeConfig::default(),
            None,
        );
        assert!(matches!(err, Err(Error::Numeric(_))));
    }

    #[test]
    fn identical_inputs_give_bit_identical_results() {
        let world = straight_canyon();
        let cam = CameraModel::default();
        let run = || {
            struct Weave(usize);
            impl Controller for Weave {
                fn act(&mut self, _ctx: &ObsCtx<'_>) -> Action {
                    self.0 += 1;
                    Action::new(0.3 * ((self.0 as f64) * 0.11).sin())
                }
            }
            run_episode(
                &world,
                &cam,
                &DroneState::default(),
                &mut Weave(0),
                &EpisodeConfig::default(),
                None,
            )
            .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a, b);
        for (x, y) in a.trace.iter().zip(&b.trace) {
            assert_eq!(x.pose.x.to_bits(), y.pose.x.to_bits());
            assert_eq!(x.pose.y.to_bits(), y.pose.y.to_bits());
        }
    }

    #[test]
    fn distance_bound_holds() {
        let world = straight_canyon();
        let cam = CameraModel::default();
        let cfg = EpisodeConfig::default();
        let drone = DroneState::default();
        let res = run_episode(&world, &cam, &drone, &mut Zero, &cfg, None).unwrap();
        assert!(
            res.distance_traveled <= drone.forward_speed * res.steps as f64 * cfg.dt + 1e-9
        );
    }

    #[test]
    fn goal_rules() {
        let mut world = straight_canyon();
        assert!(goal_met(&world, &Pose::new(45.2, 0.0, 0.0)));
        assert!(!goal_met(&world, &Pose::new(44.9, 0.0, 0.0)));
        world.goal = GoalSpec {
            kind: GoalKind::RadialDistance,
            threshold: 7.0,
        };
        assert!(goal_met(&world, &Pose::new(5.0, 5.0, 0.0)));
        assert!(!goal_met(&world, &Pose::new(4.0, 4.0, 0.0)));
    }

    #[test]
    fn clearance_in_canyon_center() {
        let world = straight_canyon();
        // Canyon width 3: clearance 1.5 from either wall at the centerline.
        let c = clearance(&world, Vec2::new(10.0, 0.0));
        assert!((c - 1.5).abs() < 1e-12);
        let drone = DroneState::default().with_pose(Pose::new(10.0, 0.0, 0.0));
        assert!(!check_collision(&world, &drone));
    }

    #[test]
    fn collision_against_close_wall_and_far_wall() {
        let world = straight_canyon();
        let drone = DroneState::default();
        // 0.2 m from the wall with body radius 0.25: colliding.
        assert!(check_collision(&world, &drone.with_pose(Pose::new(10.0, 1.3, 0.0))));
        // 5 m from the nearest wall: clear (wider canyon below).
        let wide = World {
            obstacles: vec![Shape::Polyline {
                points: vec![Vec2::new(-3.0, 5.0), Vec2::new(110.0, 5.0)],
                style_id: 0,
            }],
            ..world
        };
        assert!(!check_collision(&wide, &drone.with_pose(Pose::new(10.0, 0.0, 0.0))));
    }

    #[test]
    fn ttc_straight_flight() {
        let mut world = straight_canyon();
        world.obstacles.push(Shape::Polyline {
            points: vec![Vec2::new(2.0, -1.5), Vec2::new(2.0, 1.5)],
            style_id: 0,
        });
        let drone = DroneState::default();
        // Wall 2 m ahead; collision when x + 0.25 >= 2, i.e. after ~1.35 s.
        let k = time_to_collision_steps(&world, &Pose::origin(), &drone, 0.05, 40).unwrap();
        assert!((k as f64 * 0.05 - 1.35).abs() < 0.1, "k = {k}");
        // Clear horizon when the wall is far.
        assert!(time_to_collision_steps(&world, &Pose::new(0.0, 0.0, std::f64::consts::PI), &drone, 0.05, 30).is_none());
    }
}
