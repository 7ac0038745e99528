//! Immutable scene description and its JSON interchange format.

use serde::{Deserialize, Serialize};

use super::{Aabb, Shape, Vec2};
use crate::render::StylePalette;
use crate::{Error, Result};

/// Environment family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    Canyon,
    Forest,
    Sandbox,
    Corridor,
}

impl EnvKind {
    pub const ALL: [EnvKind; 4] = [
        EnvKind::Canyon,
        EnvKind::Forest,
        EnvKind::Sandbox,
        EnvKind::Corridor,
    ];

    /// The three basic training families.
    pub const TRAINING: [EnvKind; 3] = [EnvKind::Canyon, EnvKind::Forest, EnvKind::Sandbox];

    pub fn name(&self) -> &'static str {
        match self {
            EnvKind::Canyon => "canyon",
            EnvKind::Forest => "forest",
            EnvKind::Sandbox => "sandbox",
            EnvKind::Corridor => "corridor",
        }
    }

    pub fn index(&self) -> u64 {
        match self {
            EnvKind::Canyon => 0,
            EnvKind::Forest => 1,
            EnvKind::Sandbox => 2,
            EnvKind::Corridor => 3,
        }
    }
}

impl std::fmt::Display for EnvKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for EnvKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<EnvKind> {
        match s {
            "canyon" => Ok(EnvKind::Canyon),
            "forest" => Ok(EnvKind::Forest),
            "sandbox" => Ok(EnvKind::Sandbox),
            "corridor" => Ok(EnvKind::Corridor),
            other => Err(Error::invalid(format!("unknown env kind '{other}'"))),
        }
    }
}

/// How an episode succeeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalKind {
    /// Progress along the environment's nominal +x axis.
    AxialDistance,
    /// Euclidean distance from the spawn point (0, 0).
    RadialDistance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalSpec {
    pub kind: GoalKind,
    /// Meters; must be positive.
    pub threshold: f64,
}

/// Immutable scene: obstacles, bounds, goal rule, and visual style.
///
/// The spawn point is always `(0, 0)` with heading 0; generators guarantee it
/// is collision-free with margin at least twice the drone body radius.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub env_kind: EnvKind,
    pub seed: u64,
    pub bounds: Aabb,
    pub goal: GoalSpec,
    pub style: StylePalette,
    pub obstacles: Vec<Shape>,
}

impl World {
    pub fn validate(&self) -> Result<()> {
        if !(self.goal.threshold > 0.0) {
            return Err(Error::invalid("goal threshold must be positive"));
        }
        for (i, s) in self.obstacles.iter().enumerate() {
            s.validate()
                .map_err(|e| Error::invalid(format!("obstacle {i}: {e}")))?;
            let bb = s.aabb();
            if !self.bounds.contains(bb.min) || !self.bounds.contains(bb.max) {
                return Err(Error::invalid(format!("obstacle {i} exceeds world bounds")));
            }
            if self.style.resolve(s.style_id()).is_none() {
                return Err(Error::invalid(format!(
                    "obstacle {i} references unknown style id {}",
                    s.style_id()
                )));
            }
        }
        Ok(())
    }

    /// Serialize to the canonical JSON document; floats carry 17 significant
    /// digits so reloading is bit-exact.
    pub fn to_json_bytes(&self) -> Result<Vec<u8>> {
        crate::util::to_json_vec(&WorldDoc::from(self))
    }

    pub fn from_json_bytes(bytes: &[u8]) -> Result<World> {
        let doc: WorldDoc = crate::util::from_json_slice(bytes)?;
        let world = doc.into_world()?;
        world.validate()?;
        Ok(world)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<World> {
        World::from_json_bytes(&std::fs::read(path)?)
    }
}

// --- JSON document model -------------------------------------------------
// {env_kind, seed, bounds, goal, style, obstacles:[{type, params, style_id}]}

#[derive(Serialize, Deserialize)]
struct WorldDoc {
    env_kind: EnvKind,
    seed: u64,
    bounds: Aabb,
    goal: GoalSpec,
    style: StylePalette,
    obstacles: Vec<ObstacleDoc>,
}

#[derive(Serialize, Deserialize)]
struct ObstacleDoc {
    #[serde(flatten)]
    shape: ShapeParams,
    style_id: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", content = "params", rename_all = "snake_case")]
enum ShapeParams {
    Polyline { points: Vec<Vec2> },
    Circle { center: Vec2, radius: f64 },
    Box { min: Vec2, max: Vec2 },
    Polygon { points: Vec<Vec2> },
}

impl From<&World> for WorldDoc {
    fn from(w: &World) -> WorldDoc {
        WorldDoc {
            env_kind: w.env_kind,
            seed: w.seed,
            bounds: w.bounds,
            goal: w.goal,
            style: w.style.clone(),
            obstacles: w.obstacles.iter().map(obstacle_doc).collect(),
        }
    }
}

fn obstacle_doc(s: &Shape) -> ObstacleDoc {
    let (shape, style_id) = match s {
        Shape::Polyline { points, style_id } => (
            ShapeParams::Polyline {
                points: points.clone(),
            },
            *style_id,
        ),
        Shape::Circle {
            center,
            radius,
            style_id,
        } => (
            ShapeParams::Circle {
                center: *center,
                radius: *radius,
            },
            *style_id,
        ),
        Shape::Rect { min, max, style_id } => (
            ShapeParams::Box {
                min: *min,
                max: *max,
            },
            *style_id,
        ),
        Shape::Polygon { points, style_id } => (
            ShapeParams::Polygon {
                points: points.clone(),
            },
            *style_id,
        ),
    };
    ObstacleDoc { shape, style_id }
}

impl WorldDoc {
    fn into_world(self) -> Result<World> {
        let obstacles = self
            .obstacles
            .into_iter()
            .map(|o| match o.shape {
                ShapeParams::Polyline { points } => Shape::Polyline {
                    points,
                    style_id: o.style_id,
                },
                ShapeParams::Circle { center, radius } => Shape::Circle {
                    center,
                    radius,
                    style_id: o.style_id,
                },
                ShapeParams::Box { min, max } => Shape::Rect {
                    min,
                    max,
                    style_id: o.style_id,
                },
                ShapeParams::Polygon { points } => Shape::Polygon {
                    points,
                    style_id: o.style_id,
                },
            })
            .collect();
        Ok(World {
            env_kind: self.env_kind,
            seed: self.seed,
            bounds: self.bounds,
            goal: self.goal,
            style: self.style,
            obstacles,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::render::{StyleDef, StylePalette, TextureKind};

    fn sample_world() -> World {
        World {
            env_kind: EnvKind::Sandbox,
            seed: 99,
            bounds: Aabb::new(Vec2::new(-10.5, -10.5), Vec2::new(10.5, 10.5)),
            goal: GoalSpec {
                kind: GoalKind::RadialDistance,
                threshold: 7.0,
            },
            style: StylePalette {
                floor_shade: 44,
                ceiling_shade: 201,
                styles: vec![
                    StyleDef {
                        id: 0,
                        base_shade: 120,
                        texture: TextureKind::Checker,
                        period: 1.25,
                    },
                    StyleDef {
                        id: 3,
                        base_shade: 90,
                        texture: TextureKind::Flat,
                        period: 1.0,
                    },
                ],
            },
            obstacles: vec![
                Shape::Polyline {
                    points: vec![Vec2::new(-10.0, -10.0), Vec2::new(10.0, -10.0)],
                    style_id: 0,
                },
                Shape::Circle {
                    center: Vec2::new(3.0, 4.0),
                    radius: 0.7,
                    style_id: 3,
                },
                Shape::Rect {
                    min: Vec2::new(-5.0, -5.0),
                    max: Vec2::new(-4.0, -3.5),
                    style_id: 0,
                },
                Shape::Polygon {
                    points: vec![
                        Vec2::new(5.0, 5.0),
                        Vec2::new(6.0, 5.0),
                        Vec2::new(5.5, 6.2),
                    ],
                    style_id: 3,
                },
            ],
        }
    }

    #[test]
    fn world_json_round_trip_is_exact() {
        let world = sample_world();
        let bytes = world.to_json_bytes().unwrap();
        let back = World::from_json_bytes(&bytes).unwrap();
        assert_eq!(back, world);
        // Re-serializing produces identical bytes.
        assert_eq!(back.to_json_bytes().unwrap(), bytes);
    }

    #[test]
    fn obstacle_schema_shape() {
        let world = sample_world();
        let bytes = world.to_json_bytes().unwrap();
        let v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        let obs = &v["obstacles"][1];
        assert_eq!(obs["type"], "circle");
        assert_eq!(obs["style_id"], 3);
        assert!(obs["params"]["center"].is_array());
        for key in ["env_kind", "seed", "bounds", "goal", "style", "obstacles"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn validate_rejects_unresolved_style() {
        let mut world = sample_world();
        world.obstacles.push(Shape::Circle {
            center: Vec2::new(0.0, 5.0),
            radius: 0.5,
            style_id: 77,
        });
        assert!(world.validate().is_err());
    }

    #[test]
    fn validate_rejects_out_of_bounds_obstacle() {
        let mut world = sample_world();
        world.obstacles.push(Shape::Circle {
            center: Vec2::new(50.0, 0.0),
            radius: 0.5,
            style_id: 0,
        });
        assert!(world.validate().is_err());
    }
}
