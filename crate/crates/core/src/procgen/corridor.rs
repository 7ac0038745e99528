//! The fixed held-out validation corridor.
//!
//! A ~91 m building corridor of width 2.5 m with two 90-degree turns, door
//! recesses along the walls, and the held-out visual palette. The layout is a
//! compile-time constant (no randomness). The reverse direction is the same
//! geometry rigidly transformed so the far-end spawn maps onto the origin
//! facing +x; both directions therefore share geometry exactly.

use super::styles;
use crate::sim::{EnvKind, GoalKind, GoalSpec, Shape, Vec2, World};

#[derive(Debug, Clone, Copy, Default, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct CorridorParams {
    /// Fly the corridor from the far end back toward the start.
    pub reverse: bool,
}

pub const CORRIDOR_GOAL: f64 = 75.0;
/// Centerline length from start cap to end cap.
pub const CORRIDOR_NAVIGABLE_LENGTH: f64 = 91.0;

const HALF_W: f64 = 1.25;
/// Corner points of the centerline: start cap, two turns, end cap.
const TURN1_X: f64 = 30.0;
const LEG3_Y: f64 = 10.0;
const START_X: f64 = -2.0;
const END_X: f64 = 79.0;
/// Reverse spawn anchor: 2 m short of the end cap on the last leg.
const REV_ANCHOR: Vec2 = Vec2 { x: 77.0, y: 10.0 };

const RECESS_HALF: f64 = 0.6;
const RECESS_DEPTH: f64 = 0.6;

const STYLE_WALL: u32 = 100;
const STYLE_DOOR: u32 = 101;
const STYLE_CAP: u32 = 102;
const STYLE_FAR: u32 = 103;

pub fn build(seed: u64, params: &CorridorParams) -> World {
    let mut obstacles = Vec::new();

    // Outer wall: right side of leg 1, outer corner of turn 1, right side of
    // leg 2 (x = TURN1_X + HALF_W), then the lower wall of leg 3.
    let mut outer = x_wall(START_X, TURN1_X + HALF_W, -HALF_W, -1.0, &[8.0, 16.0, 24.0]);
    outer.push(Vec2::new(TURN1_X + HALF_W, LEG3_Y - HALF_W));
    obstacles.push(Shape::Polyline {
        points: outer,
        style_id: STYLE_WALL,
    });
    obstacles.push(Shape::Polyline {
        points: x_wall(
            TURN1_X + HALF_W,
            END_X,
            LEG3_Y - HALF_W,
            -1.0,
            &[40.0, 52.0, 64.0],
        ),
        style_id: STYLE_FAR,
    });

    // Inner wall: left side of leg 1 with one recess, inner corner, left side
    // of leg 2, then the upper wall of leg 3.
    let mut inner = x_wall(START_X, TURN1_X - HALF_W, HALF_W, 1.0, &[12.0]);
    inner.push(Vec2::new(TURN1_X - HALF_W, LEG3_Y + HALF_W));
    obstacles.push(Shape::Polyline {
        points: inner,
        style_id: STYLE_WALL,
    });
    obstacles.push(Shape::Polyline {
        points: x_wall(
            TURN1_X - HALF_W,
            END_X,
            LEG3_Y + HALF_W,
            1.0,
            &[46.0, 58.0, 70.0],
        ),
        style_id: STYLE_FAR,
    });

    // End caps.
    obstacles.push(Shape::Polyline {
        points: vec![Vec2::new(START_X, -HALF_W), Vec2::new(START_X, HALF_W)],
        style_id: STYLE_CAP,
    });
    obstacles.push(Shape::Polyline {
        points: vec![
            Vec2::new(END_X, LEG3_Y - HALF_W),
            Vec2::new(END_X, LEG3_Y + HALF_W),
        ],
        style_id: STYLE_CAP,
    });

    // Dark door panels just proud of each recess back wall.
    for (x, y, dy) in [
        (8.0, -HALF_W, -1.0),
        (16.0, -HALF_W, -1.0),
        (24.0, -HALF_W, -1.0),
        (12.0, HALF_W, 1.0),
        (40.0, LEG3_Y - HALF_W, -1.0),
        (52.0, LEG3_Y - HALF_W, -1.0),
        (64.0, LEG3_Y - HALF_W, -1.0),
        (46.0, LEG3_Y + HALF_W, 1.0),
        (58.0, LEG3_Y + HALF_W, 1.0),
        (70.0, LEG3_Y + HALF_W, 1.0),
    ] {
        let back = y + dy * RECESS_DEPTH;
        let (y_lo, y_hi) = if dy < 0.0 {
            (back + 0.01, back + 0.05)
        } else {
            (back - 0.05, back - 0.01)
        };
        obstacles.push(Shape::Rect {
            min: Vec2::new(x - 0.5, y_lo),
            max: Vec2::new(x + 0.5, y_hi),
            style_id: STYLE_DOOR,
        });
    }

    if params.reverse {
        obstacles = obstacles.iter().map(point_reflect_shape).collect();
    }

    let mut bounds = obstacles[0].aabb();
    for s in &obstacles[1..] {
        bounds = bounds.union(&s.aabb());
    }

    World {
        env_kind: EnvKind::Corridor,
        seed,
        bounds: bounds.grow(1.0),
        goal: GoalSpec {
            kind: GoalKind::AxialDistance,
            threshold: CORRIDOR_GOAL,
        },
        style: styles::corridor_palette(),
        obstacles,
    }
}

/// A wall along +x at height `y` with door recesses drilled outward (`dy` is
/// +-1) at the given x stations.
fn x_wall(x0: f64, x1: f64, y: f64, dy: f64, recesses: &[f64]) -> Vec<Vec2> {
    let mut pts = vec![Vec2::new(x0, y)];
    for &rx in recesses {
        let back = y + dy * RECESS_DEPTH;
        pts.push(Vec2::new(rx - RECESS_HALF, y));
        pts.push(Vec2::new(rx - RECESS_HALF, back));
        pts.push(Vec2::new(rx + RECESS_HALF, back));
        pts.push(Vec2::new(rx + RECESS_HALF, y));
    }
    pts.push(Vec2::new(x1, y));
    pts
}

/// Rigid point reflection about the reverse spawn anchor: maps the far-end
/// spawn onto the origin and heading pi onto heading 0.
fn point_reflect(p: Vec2) -> Vec2 {
    Vec2::new(REV_ANCHOR.x - p.x, REV_ANCHOR.y - p.y)
}

fn point_reflect_shape(s: &Shape) -> Shape {
    match s {
        Shape::Polyline { points, style_id } => Shape::Polyline {
            points: points.iter().map(|p| point_reflect(*p)).collect(),
            style_id: *style_id,
        },
        Shape::Circle {
            center,
            radius,
            style_id,
        } => Shape::Circle {
            center: point_reflect(*center),
            radius: *radius,
            style_id: *style_id,
        },
        Shape::Rect { min, max, style_id } => Shape::Rect {
            min: point_reflect(*max),
            max: point_reflect(*min),
            style_id: *style_id,
        },
        Shape::Polygon { points, style_id } => Shape::Polygon {
            points: points.iter().map(|p| point_reflect(*p)).collect(),
            style_id: *style_id,
        },
    }
}

/// Straight-ahead clearance from the forward spawn to the first wall (the
/// outer wall of the first turn), for evaluation fixtures.
pub fn forward_zero_action_clearance() -> f64 {
    TURN1_X + HALF_W
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::clearance;

    #[test]
    fn both_directions_spawn_clear_and_feasible() {
        for reverse in [false, true] {
            let w = build(0, &CorridorParams { reverse });
            assert!(clearance(&w, Vec2::new(0.0, 0.0)) >= 0.5, "reverse {reverse}");
            assert!(super::super::feasible(&w), "reverse {reverse}");
            w.validate().unwrap();
        }
    }

    #[test]
    fn layout_is_identical_across_calls() {
        assert_eq!(build(0, &CorridorParams::default()), build(0, &CorridorParams::default()));
    }

    #[test]
    fn goal_sits_before_the_end_cap_in_both_directions() {
        // Forward: axial goal 75 with end cap at 79. Reverse: the original
        // start cap lands at x = 79 after the reflection.
        let rev = build(0, &CorridorParams { reverse: true });
        let max_x = rev
            .obstacles
            .iter()
            .map(|s| s.aabb().max.x)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((max_x - (REV_ANCHOR.x - START_X)).abs() < 1e-9);
        assert!(CORRIDOR_GOAL < max_x);
    }
}
