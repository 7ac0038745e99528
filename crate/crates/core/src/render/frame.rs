//! Column-projection rendering of the grayscale policy observation.

use super::{raycast, CameraModel};
use crate::sim::{Pose, World};

/// Focal constant: a wall at 1 m fills the image height.
pub const K_PROJ: f64 = 1.0;
/// A wall slice spans this many meters of world height for texture sampling.
const WALL_HEIGHT_M: f64 = 2.0;

/// 8-bit grayscale image, row-major, `height x width`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl Frame {
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }
}

/// Render the drone's view: per column, a wall slice of height
/// `clamp(height * K_PROJ / d, 0, height)` shaded from the hit style's
/// texture and attenuated by `max(0.25, 1 - d / max_range)`; ceiling above,
/// floor below. Columns whose ray reached max range show no wall slice.
pub fn render_frame(world: &World, pose: &Pose, cam: &CameraModel) -> Frame {
    let scan = raycast(world, pose, cam);
    render_frame_from_scan(world, &scan, cam)
}

/// Same as [`render_frame`] but reusing an existing scan of the same pose.
pub fn render_frame_from_scan(world: &World, scan: &super::DepthScan, cam: &CameraModel) -> Frame {
    let w = cam.image_width;
    let h = cam.image_height;
    let mut pixels = vec![0u8; w * h];
    let pal = &world.style;

    for c in 0..w {
        let d = scan.distances[c];
        let (slice_h, top) = match scan.styles[c] {
            Some(_) => {
                let sh = (h as f64 * K_PROJ / d).clamp(0.0, h as f64);
                (sh, (h as f64 - sh) / 2.0)
            }
            None => (0.0, h as f64 / 2.0),
        };
        let bottom = top + slice_h;
        let atten = (1.0 - d / cam.max_range).max(0.25);
        let style = scan.styles[c].and_then(|id| pal.resolve(id));

        for r in 0..h {
            let y = r as f64 + 0.5;
            let shade = if y < top {
                pal.ceiling_shade as f64
            } else if y < bottom {
                match style {
                    Some(st) => {
                        // Height coordinate in meters across the slice.
                        let v = (y - top) / slice_h * WALL_HEIGHT_M;
                        pal.sample(st, scan.hit_u[c], v) * atten
                    }
                    None => 0.0,
                }
            } else {
                pal.floor_shade as f64
            };
            pixels[r * w + c] = shade.round().clamp(0.0, 255.0) as u8;
        }
    }

    Frame {
        width: w,
        height: h,
        pixels,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::render::{StyleDef, StylePalette, TextureKind};
    use crate::sim::{Aabb, EnvKind, GoalKind, GoalSpec, Shape, Vec2};

    fn flat_palette() -> StylePalette {
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

    fn world_with(obstacles: Vec<Shape>) -> World {
        World {
            env_kind: EnvKind::Canyon,
            seed: 0,
            bounds: Aabb::new(Vec2::new(-100.0, -100.0), Vec2::new(100.0, 100.0)),
            goal: GoalSpec {
                kind: GoalKind::AxialDistance,
                threshold: 45.0,
            },
            style: flat_palette(),
            obstacles,
        }
    }

    fn slice_height(frame: &Frame, col: usize, pal: &StylePalette) -> usize {
        (0..frame.height)
            .filter(|&r| {
                let p = frame.get(r, col);
                p != pal.ceiling_shade && p != pal.floor_shade
            })
            .count()
    }

    #[test]
    fn facing_wall_gives_identical_columns() {
        // A long wall perpendicular to the heading: every column sees the
        // same corrected distance, so identical slice height and shade.
        let world = world_with(vec![Shape::Polyline {
            points: vec![Vec2::new(5.0, -200.0), Vec2::new(5.0, 200.0)],
            style_id: 0,
        }]);
        let cam = CameraModel::default();
        let frame = render_frame(&world, &Pose::origin(), &cam);
        for c in 1..cam.image_width {
            for r in 0..cam.image_height {
                assert_eq!(frame.get(r, c), frame.get(r, 0), "col {c} row {r}");
            }
        }
    }

    #[test]
    fn straight_canyon_slices_grow_from_center_outward() {
        let world = world_with(vec![
            Shape::Polyline {
                points: vec![Vec2::new(-2.0, 1.5), Vec2::new(300.0, 1.5)],
                style_id: 0,
            },
            Shape::Polyline {
                points: vec![Vec2::new(-2.0, -1.5), Vec2::new(300.0, -1.5)],
                style_id: 0,
            },
        ]);
        let cam = CameraModel::default();
        let frame = render_frame(&world, &Pose::origin(), &cam);
        let pal = &world.style;
        let mid = cam.image_width / 2;
        let mut prev = slice_height(&frame, mid, pal);
        for c in mid + 1..cam.image_width {
            let h = slice_height(&frame, c, pal);
            assert!(h >= prev, "col {c}: {h} < {prev}");
            prev = h;
        }
        let mut prev = slice_height(&frame, mid - 1, pal);
        for c in (0..mid - 1).rev() {
            let h = slice_height(&frame, c, pal);
            assert!(h >= prev, "col {c}: {h} < {prev}");
            prev = h;
        }
    }

    #[test]
    fn rendering_is_deterministic() {
        let world = world_with(vec![Shape::Circle {
            center: Vec2::new(6.0, 1.0),
            radius: 1.0,
            style_id: 0,
        }]);
        let cam = CameraModel::default();
        let pose = Pose::new(0.3, -0.2, 0.1);
        assert_eq!(render_frame(&world, &pose, &cam), render_frame(&world, &pose, &cam));
    }
}
