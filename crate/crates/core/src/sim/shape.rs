//! Planar geometry substrate: vectors, obstacle shapes, distances, and ray
//! intersections.
//!
//! All obstacle kinds reduce to two primitives for raycasting (segments and
//! circles) and carry a boundary arc-length coordinate `u` at the hit point
//! so the renderer can sample surface textures continuously.

use crate::{Error, Result};

/// 2D vector / point in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub fn new(x: f64, y: f64) -> Vec2 {
        Vec2 { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// Perp product (z component of the 3D cross product).
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        Vec2::new(self.x / n, self.y / n)
    }

    /// Counterclockwise perpendicular.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl std::ops::Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

// Serialized as a plain [x, y] pair.
impl serde::Serialize for Vec2 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        (self.x, self.y).serialize(s)
    }
}

impl<'de> serde::Deserialize<'de> for Vec2 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Vec2, D::Error> {
        let (x, y) = <(f64, f64)>::deserialize(d)?;
        Ok(Vec2::new(x, y))
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Aabb {
    pub min: Vec2,
    pub max: Vec2,
}

impl Aabb {
    pub fn new(min: Vec2, max: Vec2) -> Aabb {
        Aabb { min, max }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    /// Distance from an interior point to the nearest boundary edge; negative
    /// when the point lies outside the box.
    pub fn inner_distance(&self, p: Vec2) -> f64 {
        let dx = (p.x - self.min.x).min(self.max.x - p.x);
        let dy = (p.y - self.min.y).min(self.max.y - p.y);
        dx.min(dy)
    }

    pub fn grow(&self, margin: f64) -> Aabb {
        Aabb::new(
            Vec2::new(self.min.x - margin, self.min.y - margin),
            Vec2::new(self.max.x + margin, self.max.y + margin),
        )
    }

    pub fn union(&self, o: &Aabb) -> Aabb {
        Aabb::new(
            Vec2::new(self.min.x.min(o.min.x), self.min.y.min(o.min.y)),
            Vec2::new(self.max.x.max(o.max.x), self.max.y.max(o.max.y)),
        )
    }
}

/// Obstacle shape. Polylines are infinitely thin walls; circles, boxes and
/// convex polygons are solid.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// Open chain of wall segments (at least 2 vertices).
    Polyline { points: Vec<Vec2>, style_id: u32 },
    /// Solid disc.
    Circle {
        center: Vec2,
        radius: f64,
        style_id: u32,
    },
    /// Solid axis-aligned box.
    Rect { min: Vec2, max: Vec2, style_id: u32 },
    /// Solid convex polygon, counterclockwise winding.
    Polygon { points: Vec<Vec2>, style_id: u32 },
}

/// Nearest intersection of a ray with a shape boundary.
#[derive(Debug, Clone, Copy)]
pub struct RayHit {
    /// Distance along the (unit) ray direction.
    pub t: f64,
    /// Arc-length coordinate along the shape boundary at the hit point.
    pub u: f64,
}

const RAY_EPS: f64 = 1e-12;

/// Ray / segment intersection. Returns `(t, s)` with `t` the ray parameter
/// and `s in [0,1]` the position along the segment.
pub fn ray_segment(origin: Vec2, dir: Vec2, a: Vec2, b: Vec2) -> Option<(f64, f64)> {
    let e = b - a;
    let w = a - origin;
    let den = dir.cross(e);
    if den.abs() < 1e-15 {
        return None; // parallel (collinear overlap ignored: walls have area zero)
    }
    let t = w.cross(e) / den;
    let s = w.cross(dir) / den;
    if t > RAY_EPS && (0.0..=1.0).contains(&s) {
        Some((t, s))
    } else {
        None
    }
}

/// Ray / circle intersection; returns the smallest positive ray parameter.
pub fn ray_circle(origin: Vec2, dir: Vec2, center: Vec2, radius: f64) -> Option<f64> {
    let l = origin - center;
    let b = l.dot(dir);
    let c = l.dot(l) - radius * radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let t1 = -b - sq;
    if t1 > RAY_EPS {
        return Some(t1);
    }
    let t2 = -b + sq;
    if t2 > RAY_EPS {
        return Some(t2);
    }
    None
}

/// Distance from a point to a segment.
pub fn dist_point_segment(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let e = b - a;
    let len2 = e.dot(e);
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let s = ((p - a).dot(e) / len2).clamp(0.0, 1.0);
    (p - (a + e * s)).norm()
}

impl Shape {
    pub fn style_id(&self) -> u32 {
        match self {
            Shape::Polyline { style_id, .. }
            | Shape::Circle { style_id, .. }
            | Shape::Rect { style_id, .. }
            | Shape::Polygon { style_id, .. } => *style_id,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Shape::Polyline { points, .. } => {
                if points.len() < 2 {
                    return Err(Error::invalid("polyline needs at least 2 vertices"));
                }
                if points.iter().any(|p| !p.is_finite()) {
                    return Err(Error::invalid("polyline has non-finite vertex"));
                }
            }
            Shape::Circle { radius, center, .. } => {
                if !(*radius > 0.0) || !center.is_finite() {
                    return Err(Error::invalid("circle needs positive radius"));
                }
            }
            Shape::Rect { min, max, .. } => {
                if !(max.x > min.x && max.y > min.y) {
                    return Err(Error::invalid("box corners must be ordered"));
                }
            }
            Shape::Polygon { points, .. } => {
                if points.len() < 3 {
                    return Err(Error::invalid("polygon needs at least 3 vertices"));
                }
                // Convex and counterclockwise: every consecutive cross product
                // must be nonnegative, with at least one strictly positive.
                let n = points.len();
                let mut any_pos = false;
                for i in 0..n {
                    let a = points[i];
                    let b = points[(i + 1) % n];
                    let c = points[(i + 2) % n];
                    let cr = (b - a).cross(c - b);
                    if cr < -1e-12 {
                        return Err(Error::invalid("polygon must be convex and counterclockwise"));
                    }
                    if cr > 1e-12 {
                        any_pos = true;
                    }
                }
                if !any_pos {
                    return Err(Error::invalid("polygon is degenerate"));
                }
            }
        }
        Ok(())
    }

    /// Boundary edges as (start, end, cumulative arc length at start).
    fn edges(&self) -> Vec<(Vec2, Vec2, f64)> {
        match self {
            Shape::Polyline { points, .. } => {
                let mut out = Vec::with_capacity(points.len() - 1);
                let mut acc = 0.0;
                for w in points.windows(2) {
                    out.push((w[0], w[1], acc));
                    acc += (w[1] - w[0]).norm();
                }
                out
            }
            Shape::Rect { min, max, .. } => {
                let c = [
                    *min,
                    Vec2::new(max.x, min.y),
                    *max,
                    Vec2::new(min.x, max.y),
                ];
                let mut out = Vec::with_capacity(4);
                let mut acc = 0.0;
                for i in 0..4 {
                    let a = c[i];
                    let b = c[(i + 1) % 4];
                    out.push((a, b, acc));
                    acc += (b - a).norm();
                }
                out
            }
            Shape::Polygon { points, .. } => {
                let n = points.len();
                let mut out = Vec::with_capacity(n);
                let mut acc = 0.0;
                for i in 0..n {
                    let a = points[i];
                    let b = points[(i + 1) % n];
                    out.push((a, b, acc));
                    acc += (b - a).norm();
                }
                out
            }
            Shape::Circle { .. } => Vec::new(),
        }
    }

    /// Nearest boundary intersection along a unit-direction ray.
    pub fn ray_hit(&self, origin: Vec2, dir: Vec2) -> Option<RayHit> {
        match self {
            Shape::Circle { center, radius, .. } => {
                let t = ray_circle(origin, dir, *center, *radius)?;
                let h = origin + dir * t;
                let ang = (h.y - center.y).atan2(h.x - center.x);
                Some(RayHit {
                    t,
                    u: (ang + std::f64::consts::PI) * radius,
                })
            }
            _ => {
                let mut best: Option<RayHit> = None;
                for (a, b, u0) in self.edges() {
                    if let Some((t, s)) = ray_segment(origin, dir, a, b) {
                        if best.map_or(true, |h| t < h.t) {
                            best = Some(RayHit {
                                t,
                                u: u0 + s * (b - a).norm(),
                            });
                        }
                    }
                }
                best
            }
        }
    }

    /// Signed distance from a point: negative inside solid shapes, plain
    /// distance to the nearest segment for thin polylines.
    pub fn distance(&self, p: Vec2) -> f64 {
        match self {
            Shape::Polyline { points, .. } => points
                .windows(2)
                .map(|w| dist_point_segment(p, w[0], w[1]))
                .fold(f64::INFINITY, f64::min),
            Shape::Circle { center, radius, .. } => (p - *center).norm() - radius,
            Shape::Rect { min, max, .. } => {
                let qx = (min.x - p.x).max(p.x - max.x);
                let qy = (min.y - p.y).max(p.y - max.y);
                if qx <= 0.0 && qy <= 0.0 {
                    qx.max(qy)
                } else {
                    let ox = qx.max(0.0);
                    let oy = qy.max(0.0);
                    (ox * ox + oy * oy).sqrt()
                }
            }
            Shape::Polygon { points, .. } => {
                let n = points.len();
                let mut inside = true;
                let mut max_plane = f64::NEG_INFINITY;
                for i in 0..n {
                    let a = points[i];
                    let b = points[(i + 1) % n];
                    // Outward normal of a counterclockwise edge points right.
                    let nrm = Vec2::new(b.y - a.y, a.x - b.x).normalized();
                    let d = (p - a).dot(nrm);
                    max_plane = max_plane.max(d);
                    if d > 0.0 {
                        inside = false;
                    }
                }
                if inside {
                    max_plane
                } else {
                    (0..n)
                        .map(|i| dist_point_segment(p, points[i], points[(i + 1) % n]))
                        .fold(f64::INFINITY, f64::min)
                }
            }
        }
    }

    pub fn aabb(&self) -> Aabb {
        match self {
            Shape::Polyline { points, .. } | Shape::Polygon { points, .. } => {
                let mut bb = Aabb::new(points[0], points[0]);
                for p in points {
                    bb.min.x = bb.min.x.min(p.x);
                    bb.min.y = bb.min.y.min(p.y);
                    bb.max.x = bb.max.x.max(p.x);
                    bb.max.y = bb.max.y.max(p.y);
                }
                bb
            }
            Shape::Circle { center, radius, .. } => Aabb::new(
                Vec2::new(center.x - radius, center.y - radius),
                Vec2::new(center.x + radius, center.y + radius),
            ),
            Shape::Rect { min, max, .. } => Aabb::new(*min, *max),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ray_hits_segment_midpoint() {
        let (t, s) = ray_segment(
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(2.0, -1.0),
            Vec2::new(2.0, 1.0),
        )
        .unwrap();
        assert!((t - 2.0).abs() < 1e-12);
        assert!((s - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ray_misses_segment_behind() {
        assert!(ray_segment(
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(-2.0, -1.0),
            Vec2::new(-2.0, 1.0),
        )
        .is_none());
    }

    #[test]
    fn ray_circle_from_outside_and_inside() {
        let c = Vec2::new(5.0, 0.0);
        let t = ray_circle(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), c, 1.0).unwrap();
        assert!((t - 4.0).abs() < 1e-12);
        let t_in = ray_circle(c, Vec2::new(1.0, 0.0), c, 1.0).unwrap();
        assert!((t_in - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rect_signed_distance() {
        let r = Shape::Rect {
            min: Vec2::new(0.0, 0.0),
            max: Vec2::new(2.0, 2.0),
            style_id: 0,
        };
        assert!((r.distance(Vec2::new(3.0, 1.0)) - 1.0).abs() < 1e-12);
        assert!((r.distance(Vec2::new(1.0, 1.0)) + 1.0).abs() < 1e-12);
        assert!((r.distance(Vec2::new(3.0, 3.0)) - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn polygon_validation_rejects_clockwise() {
        let cw = Shape::Polygon {
            points: vec![Vec2::new(0.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(1.0, 0.0)],
            style_id: 0,
        };
        assert!(cw.validate().is_err());
        let ccw = Shape::Polygon {
            points: vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)],
            style_id: 0,
        };
        assert!(ccw.validate().is_ok());
    }

    #[test]
    fn polygon_distance_inside_is_negative() {
        let tri = Shape::Polygon {
            points: vec![Vec2::new(0.0, 0.0), Vec2::new(4.0, 0.0), Vec2::new(0.0, 4.0)],
            style_id: 0,
        };
        assert!(tri.distance(Vec2::new(0.5, 0.5)) < 0.0);
        assert!((tri.distance(Vec2::new(-1.0, 0.5)) - 1.0).abs() < 1e-12);
    }

    proptest! {
        // Distance-to-polyline cross check against a dense sampling oracle.
        #[test]
        fn polyline_distance_matches_sampling_oracle(
            px in -5.0f64..5.0, py in -5.0f64..5.0,
            ax in -3.0f64..3.0, ay in -3.0f64..3.0,
            bx in -3.0f64..3.0, by in -3.0f64..3.0,
        ) {
            prop_assume!((ax - bx).abs() + (ay - by).abs() > 1e-3);
            let line = Shape::Polyline {
                points: vec![Vec2::new(ax, ay), Vec2::new(bx, by)],
                style_id: 0,
            };
            let p = Vec2::new(px, py);
            let d = line.distance(p);
            let a = Vec2::new(ax, ay);
            let b = Vec2::new(bx, by);
            let oracle = (0..=4000)
                .map(|i| {
                    let s = i as f64 / 4000.0;
                    (p - (a + (b - a) * s)).norm()
                })
                .fold(f64::INFINITY, f64::min);
            // The sampled minimum can only overestimate the true distance.
            prop_assert!(d <= oracle + 1e-9);
            prop_assert!(oracle - d < 1e-3);
        }

        // A ray that reports a hit really does land on the circle boundary.
        #[test]
        fn ray_circle_hit_is_on_boundary(
            ox in -10.0f64..10.0, oy in -10.0f64..10.0,
            ang in 0.0f64..6.28, cx in -5.0f64..5.0, cy in -5.0f64..5.0,
            r in 0.1f64..3.0,
        ) {
            let o = Vec2::new(ox, oy);
            let d = Vec2::new(ang.cos(), ang.sin());
            let c = Vec2::new(cx, cy);
            if let Some(t) = ray_circle(o, d, c, r) {
                let h = o + d * t;
                prop_assert!(((h - c).norm() - r).abs() < 1e-9);
            }
        }
    }
}
