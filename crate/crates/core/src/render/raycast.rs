//! Per-column ground-truth depth via exact ray / shape intersection.

use super::CameraModel;
use crate::sim::{Pose, Vec2, World};

/// Ground-truth depth scan: one planar-corrected distance per image column.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthScan {
    /// Corrected distance per column, in `(0, max_range]`.
    pub distances: Vec<f64>,
    /// Style id of the hit shape, `None` where the ray reached max range.
    pub styles: Vec<Option<u32>>,
    /// Boundary arc-length coordinate of the hit (texture u), 0 on miss.
    pub hit_u: Vec<f64>,
    /// Relative ray angle per column (positive = left of heading).
    pub angles: Vec<f64>,
}

impl DepthScan {
    pub fn width(&self) -> usize {
        self.distances.len()
    }
}

/// Cast one ray per image column and record the exact distance to the
/// nearest shape, corrected by `cos(rel_angle)` for a planar (non-fisheye)
/// projection. Misses clamp to `max_range`.
pub fn raycast(world: &World, pose: &Pose, cam: &CameraModel) -> DepthScan {
    let w = cam.image_width;
    let table = cam.column_table();
    let (sin_h, cos_h) = pose.heading.sin_cos();
    let origin = pose.position();

    let mut distances = Vec::with_capacity(w);
    let mut styles = Vec::with_capacity(w);
    let mut hit_u = Vec::with_capacity(w);
    let mut angles = Vec::with_capacity(w);

    for &(rel, cos_r, sin_r) in &table {
        // dir = rot(heading) * (cos_r, sin_r); composing from the mirrored
        // column table keeps mirrored worlds bitwise symmetric.
        let dir = Vec2::new(cos_h * cos_r - sin_h * sin_r, sin_h * cos_r + cos_h * sin_r);
        let mut best_t = f64::INFINITY;
        let mut best: Option<(u32, f64)> = None;
        for shape in &world.obstacles {
            if let Some(hit) = shape.ray_hit(origin, dir) {
                if hit.t < best_t {
                    best_t = hit.t;
                    best = Some((shape.style_id(), hit.u));
                }
            }
        }
        let corrected = best_t * cos_r;
        if best.is_some() && corrected < cam.max_range {
            let (sid, u) = best.unwrap();
            distances.push(corrected);
            styles.push(Some(sid));
            hit_u.push(u);
        } else {
            distances.push(cam.max_range);
            styles.push(None);
            hit_u.push(0.0);
        }
        angles.push(rel);
    }

    DepthScan {
        distances,
        styles,
        hit_u,
        angles,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::render::{StyleDef, StylePalette, TextureKind};
    use crate::sim::{Aabb, EnvKind, GoalKind, GoalSpec, Shape};

    fn palette() -> StylePalette {
        StylePalette {
            floor_shade: 40,
            ceiling_shade: 220,
            styles: vec![StyleDef {
                id: 0,
                base_shade: 128,
                texture: TextureKind::Flat,
                period: 1.0,
            }],
        }
    }

    fn box_world() -> World {
        // 20x20 box centered at the origin, modeled with four wall segments.
        let pts = [
            Vec2::new(-10.0, -10.0),
            Vec2::new(10.0, -10.0),
            Vec2::new(10.0, 10.0),
            Vec2::new(-10.0, 10.0),
        ];
        let mut obstacles = Vec::new();
        for i in 0..4 {
            obstacles.push(Shape::Polyline {
                points: vec![pts[i], pts[(i + 1) % 4]],
                style_id: 0,
            });
        }
        World {
            env_kind: EnvKind::Sandbox,
            seed: 0,
            bounds: Aabb::new(Vec2::new(-10.5, -10.5), Vec2::new(10.5, 10.5)),
            goal: GoalSpec {
                kind: GoalKind::RadialDistance,
                threshold: 7.0,
            },
            style: palette(),
            obstacles,
        }
    }

    #[test]
    fn center_of_box_sees_half_width_ahead() {
        let world = box_world();
        let cam = CameraModel::default();
        let scan = raycast(&world, &Pose::origin(), &cam);
        // The two middle columns of a 148-wide image straddle the axis.
        for c in [73usize, 74] {
            // Raw distance 10 / cos(rel), corrected back by cos(rel).
            assert!((scan.distances[c] - 10.0).abs() < 1e-9, "col {c}");
        }
        let _ = scan.styles[73].unwrap();
    }

    #[test]
    fn planar_correction_at_45_degrees() {
        let world = box_world();
        // Widen the fov so a column sits near 45 degrees.
        let cam = CameraModel {
            horizontal_fov: 1.5 * std::f64::consts::FRAC_PI_2,
            ..CameraModel::default()
        };
        let scan = raycast(&world, &Pose::origin(), &cam);
        for c in 0..cam.image_width {
            let rel = scan.angles[c];
            if rel.abs() < std::f64::consts::FRAC_PI_4 - 1e-9 {
                // Rays within +-45 degrees hit the front wall at x = 10:
                // raw = 10/cos(rel), corrected = 10.
                assert!(
                    (scan.distances[c] - 10.0).abs() < 1e-9,
                    "col {c} rel {rel} d {}",
                    scan.distances[c]
                );
            }
        }
    }

    #[test]
    fn moving_toward_wall_reduces_center_depth_by_exactly_delta() {
        let world = box_world();
        let cam = CameraModel::default();
        let d0 = raycast(&world, &Pose::origin(), &cam).distances[73];
        let delta = 1.7;
        let d1 = raycast(&world, &Pose::new(delta, 0.0, 0.0), &cam).distances[73];
        assert!((d0 - d1 - delta).abs() < 1e-9);
    }

    #[test]
    fn mirror_symmetry_reverses_scan_exactly() {
        // World asymmetric about the x axis; mirroring it must reverse the
        // scan column order bit for bit.
        let mut world = box_world();
        world.obstacles.push(Shape::Circle {
            center: Vec2::new(4.0, 2.5),
            radius: 0.8,
            style_id: 0,
        });
        world.obstacles.push(Shape::Rect {
            min: Vec2::new(2.0, -5.0),
            max: Vec2::new(3.0, -4.0),
            style_id: 0,
        });
        let mirrored = World {
            obstacles: world
                .obstacles
                .iter()
                .map(|s| mirror_shape(s))
                .collect(),
            ..world.clone()
        };
        let cam = CameraModel::default();
        let a = raycast(&world, &Pose::origin(), &cam);
        let b = raycast(&mirrored, &Pose::origin(), &cam);
        let w = cam.image_width;
        for c in 0..w {
            assert_eq!(
                a.distances[c].to_bits(),
                b.distances[w - 1 - c].to_bits(),
                "col {c}"
            );
            assert_eq!(a.styles[c], b.styles[w - 1 - c]);
        }
    }

    fn mirror_shape(s: &Shape) -> Shape {
        let flip = |p: Vec2| Vec2::new(p.x, -p.y);
        match s {
            Shape::Polyline { points, style_id } => Shape::Polyline {
                points: points.iter().map(|p| flip(*p)).collect(),
                style_id: *style_id,
            },
            Shape::Circle {
                center,
                radius,
                style_id,
            } => Shape::Circle {
                center: flip(*center),
                radius: *radius,
                style_id: *style_id,
            },
            Shape::Rect { min, max, style_id } => Shape::Rect {
                min: Vec2::new(min.x, -max.y),
                max: Vec2::new(max.x, -min.y),
                style_id: *style_id,
            },
            Shape::Polygon { points, style_id } => {
                // Reverse to keep counterclockwise winding after the flip.
                Shape::Polygon {
                    points: points.iter().rev().map(|p| flip(*p)).collect(),
                    style_id: *style_id,
                }
            }
        }
    }
}
