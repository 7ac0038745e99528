//! Sandbox: a 20x20 m walled box with 13 parametric objects spread around.
//!
//! The object templates span the visual cue families: cylinders and pillars
//! (vertical lines), boxes and walls (perspective lines), and assorted convex
//! polygons (strange shapes).

use libm::{cos, sin};

use super::styles::TrainingStyles;
use crate::rng::{self, stream, SplitMix64};
use crate::sim::{Aabb, EnvKind, GoalKind, GoalSpec, Shape, Vec2, World};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SandboxParams {
    /// Number of objects placed inside the box.
    pub object_count: usize,
    /// Minimum surface distance from the spawn point, meters.
    pub min_spawn_clearance: f64,
}

impl Default for SandboxParams {
    fn default() -> Self {
        SandboxParams {
            object_count: 13,
            min_spawn_clearance: 2.0,
        }
    }
}

/// The box is fixed at 20x20 m centered on the spawn point.
pub const BOX_HALF: f64 = 10.0;
pub const SANDBOX_GOAL: f64 = 7.0;
const PLACEMENT_TRIES: usize = 400;

pub fn build(seed: u64, draw_seed: u64, p: &SandboxParams) -> Result<World> {
    let mut styles = TrainingStyles::new(rng::derive(draw_seed, stream::STYLE));
    let corners = [
        Vec2::new(-BOX_HALF, -BOX_HALF),
        Vec2::new(BOX_HALF, -BOX_HALF),
        Vec2::new(BOX_HALF, BOX_HALF),
        Vec2::new(-BOX_HALF, BOX_HALF),
    ];
    // Four walls in varying styles.
    let mut obstacles: Vec<Shape> = (0..4)
        .map(|i| Shape::Polyline {
            points: vec![corners[i], corners[(i + 1) % 4]],
            style_id: styles.next(),
        })
        .collect();

    let mut rng = SplitMix64::new(draw_seed);
    let mut placed: Vec<(Vec2, f64)> = Vec::new(); // center + bounding radius
    for k in 0..p.object_count {
        let style_id = styles.next();
        let template = k % TEMPLATE_COUNT;
        let mut ok = false;
        for _ in 0..PLACEMENT_TRIES {
            let (shape, bound_r) = instantiate(template, style_id, &mut rng);
            let margin = BOX_HALF - bound_r - 0.6;
            let c = Vec2::new(
                rng.next_range(-margin, margin),
                rng.next_range(-margin, margin),
            );
            if c.norm() < p.min_spawn_clearance + bound_r {
                continue;
            }
            if placed
                .iter()
                .any(|(oc, or)| (*oc - c).norm() < or + bound_r + 0.5)
            {
                continue;
            }
            obstacles.push(translate(shape, c));
            placed.push((c, bound_r));
            ok = true;
            break;
        }
        if !ok {
            return Err(Error::Generation(format!("could not place object {k}")));
        }
    }

    let bounds = Aabb::new(
        Vec2::new(-BOX_HALF, -BOX_HALF),
        Vec2::new(BOX_HALF, BOX_HALF),
    )
    .grow(0.5);
    Ok(World {
        env_kind: EnvKind::Sandbox,
        seed,
        bounds,
        goal: GoalSpec {
            kind: GoalKind::RadialDistance,
            threshold: SANDBOX_GOAL,
        },
        style: styles.into_palette(),
        obstacles,
    })
}

const TEMPLATE_COUNT: usize = 13;

/// Instantiate template `k` at the origin with seeded scale/rotation jitter;
/// returns the shape and its bounding radius.
fn instantiate(k: usize, style_id: u32, rng: &mut SplitMix64) -> (Shape, f64) {
    let s = rng.next_range(0.85, 1.25); // uniform scale jitter
    let rot = rng.next_range(0.0, std::f64::consts::TAU);
    match k {
        // Cylinders of three characters: standard, wide, thin pillar.
        0 => circle(0.5 * s, style_id),
        1 => circle(0.9 * s, style_id),
        2 => circle(0.15, style_id),
        // Axis-aligned boxes.
        3 => rect(0.5 * s, 0.5 * s, style_id),
        4 => rect(1.2 * s, 0.25 * s, style_id),
        5 => rect(0.3 * s, 0.3 * s, style_id),
        // Convex polygons.
        6 => ngon(3, 0.75 * s, rot, style_id),
        7 => ngon(4, 0.7 * s, rot, style_id),
        8 => ngon(5, 0.8 * s, rot, style_id),
        9 => ngon(6, 0.7 * s, rot, style_id),
        10 => wedge(1.6 * s, 0.9 * s, rot, style_id),
        // Thin walls.
        11 => lwall(2.0 * s, rot, style_id),
        12 => wall(2.5 * s, rot, style_id),
        _ => unreachable!(),
    }
}

fn circle(r: f64, style_id: u32) -> (Shape, f64) {
    (
        Shape::Circle {
            center: Vec2::new(0.0, 0.0),
            radius: r,
            style_id,
        },
        r,
    )
}

fn rect(hx: f64, hy: f64, style_id: u32) -> (Shape, f64) {
    (
        Shape::Rect {
            min: Vec2::new(-hx, -hy),
            max: Vec2::new(hx, hy),
            style_id,
        },
        (hx * hx + hy * hy).sqrt(),
    )
}

fn rotated(p: Vec2, rot: f64) -> Vec2 {
    let (c, s) = (cos(rot), sin(rot));
    Vec2::new(c * p.x - s * p.y, s * p.x + c * p.y)
}

/// Regular n-gon of circumradius `r`, counterclockwise.
fn ngon(n: usize, r: f64, rot: f64, style_id: u32) -> (Shape, f64) {
    let points = (0..n)
        .map(|i| {
            let a = rot + std::f64::consts::TAU * i as f64 / n as f64;
            Vec2::new(r * cos(a), r * sin(a))
        })
        .collect();
    (Shape::Polygon { points, style_id }, r)
}

fn wedge(w: f64, h: f64, rot: f64, style_id: u32) -> (Shape, f64) {
    let pts = [
        Vec2::new(-w / 2.0, -h / 2.0),
        Vec2::new(w / 2.0, -h / 2.0),
        Vec2::new(-w / 2.0, h / 2.0),
    ];
    let points = pts.iter().map(|p| rotated(*p, rot)).collect();
    (
        Shape::Polygon { points, style_id },
        (w * w + h * h).sqrt() / 2.0,
    )
}

fn lwall(arm: f64, rot: f64, style_id: u32) -> (Shape, f64) {
    let pts = [
        Vec2::new(-arm / 2.0, -arm / 2.0),
        Vec2::new(arm / 2.0, -arm / 2.0),
        Vec2::new(arm / 2.0, arm / 2.0),
    ];
    let points = pts.iter().map(|p| rotated(*p, rot)).collect();
    (
        Shape::Polyline { points, style_id },
        arm * std::f64::consts::SQRT_2 / 2.0,
    )
}

fn wall(len: f64, rot: f64, style_id: u32) -> (Shape, f64) {
    let points = vec![
        rotated(Vec2::new(-len / 2.0, 0.0), rot),
        rotated(Vec2::new(len / 2.0, 0.0), rot),
    ];
    (Shape::Polyline { points, style_id }, len / 2.0)
}

fn translate(shape: Shape, by: Vec2) -> Shape {
    match shape {
        Shape::Polyline { points, style_id } => Shape::Polyline {
            points: points.into_iter().map(|p| p + by).collect(),
            style_id,
        },
        Shape::Circle {
            center,
            radius,
            style_id,
        } => Shape::Circle {
            center: center + by,
            radius,
            style_id,
        },
        Shape::Rect { min, max, style_id } => Shape::Rect {
            min: min + by,
            max: max + by,
            style_id,
        },
        Shape::Polygon { points, style_id } => Shape::Polygon {
            points: points.into_iter().map(|p| p + by).collect(),
            style_id,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn objects_keep_spawn_clearance() {
        let p = SandboxParams::default();
        for seed in 0..15u64 {
            let w = build(seed, seed, &p).unwrap();
            for s in w.obstacles.iter().skip(4) {
                let d = s.distance(Vec2::new(0.0, 0.0));
                assert!(d >= p.min_spawn_clearance - 1e-9, "seed {seed}: {d}");
            }
        }
    }

    #[test]
    fn all_templates_are_valid_shapes() {
        let mut rng = SplitMix64::new(5);
        for k in 0..TEMPLATE_COUNT {
            let (shape, _) = instantiate(k, 0, &mut rng);
            shape.validate().unwrap();
        }
    }
}
