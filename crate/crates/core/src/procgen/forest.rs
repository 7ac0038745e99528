//! Forest strip: random cylinders between two visible boundary walls.

use super::styles::TrainingStyles;
use crate::rng::{self, stream, SplitMix64};
use crate::sim::{Aabb, EnvKind, GoalKind, GoalSpec, Shape, Vec2, World};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub strip_length: f64,
    pub strip_width: f64,
    pub trunk_radius_min: f64,
    pub trunk_radius_max: f64,
    pub trunk_count: usize,
    /// Minimum surface-to-surface separation between trunks, meters.
    pub min_clearance: f64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            strip_length: 55.0,
            strip_width: 12.0,
            trunk_radius_min: 0.2,
            trunk_radius_max: 0.5,
            trunk_count: 60,
            min_clearance: 1.2,
        }
    }
}

pub const FOREST_GOAL: f64 = 45.0;
const PLACEMENT_TRIES: usize = 400;

pub fn build(seed: u64, draw_seed: u64, p: &ForestParams) -> Result<World> {
    if p.trunk_radius_min <= 0.0 || p.trunk_radius_max < p.trunk_radius_min {
        return Err(Error::invalid("forest trunk radius range is invalid"));
    }
    if p.strip_length <= FOREST_GOAL {
        return Err(Error::invalid("forest strip_length must exceed the 45 m goal"));
    }

    let hw = p.strip_width / 2.0;
    let x0 = -3.0;
    let x1 = p.strip_length + 1.0;

    let mut styles = TrainingStyles::new(rng::derive(draw_seed, stream::STYLE));
    let wall_style = styles.next();
    let cap_style = styles.next();
    let trunk_style_a = styles.next();
    let trunk_style_b = styles.next();

    let mut obstacles = vec![
        Shape::Polyline {
            points: vec![Vec2::new(x0, hw), Vec2::new(x1, hw)],
            style_id: wall_style,
        },
        Shape::Polyline {
            points: vec![Vec2::new(x0, -hw), Vec2::new(x1, -hw)],
            style_id: wall_style,
        },
        Shape::Polyline {
            points: vec![Vec2::new(x0, -hw), Vec2::new(x0, hw)],
            style_id: cap_style,
        },
    ];

    let mut rng = SplitMix64::new(draw_seed);
    let mut trunks: Vec<(Vec2, f64)> = Vec::with_capacity(p.trunk_count);
    for k in 0..p.trunk_count {
        let mut placed = false;
        for _ in 0..PLACEMENT_TRIES {
            let r = rng.next_range(p.trunk_radius_min, p.trunk_radius_max);
            let x = rng.next_range(4.0, p.strip_length - 1.0);
            let y_margin = hw - r - 0.8;
            let y = rng.next_range(-y_margin, y_margin);
            let c = Vec2::new(x, y);
            if c.norm() < 2.5 + r {
                continue;
            }
            let clear = trunks
                .iter()
                .all(|(oc, or)| (*oc - c).norm() >= or + r + p.min_clearance);
            if clear {
                trunks.push((c, r));
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::Generation(format!(
                "could not place trunk {k} of {}",
                p.trunk_count
            )));
        }
    }
    for (i, (c, r)) in trunks.into_iter().enumerate() {
        obstacles.push(Shape::Circle {
            center: c,
            radius: r,
            style_id: if i % 2 == 0 { trunk_style_a } else { trunk_style_b },
        });
    }

    let bounds = Aabb::new(Vec2::new(x0, -hw), Vec2::new(x1, hw)).grow(1.0);
    Ok(World {
        env_kind: EnvKind::Forest,
        seed,
        bounds,
        goal: GoalSpec {
            kind: GoalKind::AxialDistance,
            threshold: FOREST_GOAL,
        },
        style: styles.into_palette(),
        obstacles,
    })
}
