//! Randomly bending canyon: two offset wall polylines around a segmented
//! centerline, sealed behind the spawn point.

use libm::{cos, sin};

use super::styles::TrainingStyles;
use crate::rng::{self, stream, SplitMix64};
use crate::sim::{EnvKind, GoalKind, GoalSpec, Shape, Vec2, World};
use crate::Result;

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct CanyonParams {
    /// Wall-to-wall width in meters.
    pub width: f64,
    /// Centerline segment length in meters.
    pub segment_length: f64,
    /// Bends are i.i.d. uniform over `[-bend_range, +bend_range]` radians.
    pub bend_range: f64,
    /// Centerline length past the spawn point in meters.
    pub total_length: f64,
}

impl Default for CanyonParams {
    fn default() -> Self {
        CanyonParams {
            width: 3.0,
            segment_length: 4.0,
            bend_range: 0.5,
            total_length: 55.0,
        }
    }
}

pub const CANYON_GOAL: f64 = 45.0;

/// Segments past the two straight lead-in segments.
fn bent_segment_count(p: &CanyonParams) -> usize {
    ((p.total_length / p.segment_length).ceil() as usize).saturating_sub(2)
}

/// The raw i.i.d. uniform bend draws for one seed (exposed for distribution
/// tests).
pub fn draw_bends(draw_seed: u64, p: &CanyonParams) -> Vec<f64> {
    let mut rng = SplitMix64::new(draw_seed);
    (0..bent_segment_count(p))
        .map(|_| rng.next_range(-p.bend_range, p.bend_range))
        .collect()
}

pub fn build(seed: u64, draw_seed: u64, p: &CanyonParams) -> Result<World> {
    if !(p.width > SPAWN_DIAMETER + 0.4) {
        return Err(crate::Error::invalid(format!(
            "canyon width {} leaves no room for the drone",
            p.width
        )));
    }
    if p.total_length <= CANYON_GOAL {
        return Err(crate::Error::invalid(
            "canyon total_length must exceed the 45 m goal",
        ));
    }

    // Centerline: one segment behind the spawn, one ahead, then bends.
    let mut points = vec![Vec2::new(-p.segment_length, 0.0), Vec2::new(0.0, 0.0)];
    let mut heading = 0.0f64;
    points.push(Vec2::new(p.segment_length, 0.0));
    for bend in draw_bends(draw_seed, p) {
        heading += bend;
        let last = *points.last().unwrap();
        points.push(last + Vec2::new(cos(heading), sin(heading)) * p.segment_length);
    }

    let mut styles = TrainingStyles::new(rng::derive(draw_seed, stream::STYLE));
    let left_style = styles.next();
    let right_style = styles.next();
    let cap_style = styles.next();

    let (left, right) = offset_walls(&points, p.width / 2.0);
    let cap = Shape::Polyline {
        points: vec![left[0], right[0]],
        style_id: cap_style,
    };
    let obstacles = vec![
        Shape::Polyline {
            points: left,
            style_id: left_style,
        },
        Shape::Polyline {
            points: right,
            style_id: right_style,
        },
        cap,
    ];

    let mut bounds = obstacles[0].aabb();
    for s in &obstacles[1..] {
        bounds = bounds.union(&s.aabb());
    }

    Ok(World {
        env_kind: EnvKind::Canyon,
        seed,
        bounds: bounds.grow(1.0),
        goal: GoalSpec {
            kind: GoalKind::AxialDistance,
            threshold: CANYON_GOAL,
        },
        style: styles.into_palette(),
        obstacles,
    })
}

const SPAWN_DIAMETER: f64 = 0.5;

/// Offset a centerline into left/right wall polylines with miter joins so
/// the perpendicular wall distance stays `half_width` along every segment.
fn offset_walls(center: &[Vec2], half_width: f64) -> (Vec<Vec2>, Vec<Vec2>) {
    let n = center.len();
    let dirs: Vec<Vec2> = center
        .windows(2)
        .map(|w| (w[1] - w[0]).normalized())
        .collect();
    let mut left = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    for i in 0..n {
        let (normal, scale) = if i == 0 {
            (dirs[0].perp(), 1.0)
        } else if i == n - 1 {
            (dirs[n - 2].perp(), 1.0)
        } else {
            let bisector = (dirs[i - 1] + dirs[i]).normalized();
            let cos_half = bisector.dot(dirs[i]);
            (bisector.perp(), 1.0 / cos_half)
        };
        left.push(center[i] + normal * (half_width * scale));
        right.push(center[i] + normal * (-half_width * scale));
    }
    (left, right)
}
