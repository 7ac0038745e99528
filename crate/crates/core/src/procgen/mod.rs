//! Seeded procedural generation of the training environment families and the
//! fixed held-out validation corridor.
//!
//! Generation is deterministic in `(kind, seed, params)`: all randomness
//! comes from splitmix64 sub-streams and all transcendental math goes through
//! `libm`, so the same inputs produce byte-identical worlds on every
//! platform. Infeasible draws (blocked spawn, no path to the goal) retry with
//! derived sub-seeds up to 32 attempts before reporting a generation error.

mod canyon;
mod corridor;
mod feasible;
mod forest;
mod sandbox;
pub mod styles;

pub use canyon::CanyonParams;
pub use corridor::{forward_zero_action_clearance, CorridorParams, CORRIDOR_GOAL, CORRIDOR_NAVIGABLE_LENGTH};
pub use feasible::feasible;
pub use forest::ForestParams;
pub use sandbox::SandboxParams;

use crate::rng::{self, stream};
use crate::sim::{EnvKind, World};
use crate::{Error, Result};

/// Parameters for all four environment families.
#[derive(Debug, Clone, Default, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct GenParams {
    pub canyon: CanyonParams,
    pub forest: ForestParams,
    pub sandbox: SandboxParams,
    pub corridor: CorridorParams,
}

const MAX_ATTEMPTS: u64 = 32;

/// Margin required around the spawn point, twice the default body radius.
pub const SPAWN_CLEARANCE: f64 = 0.5;

/// Generate a world. Canyon/forest worlds carry an axial 45 m goal, sandboxes
/// a radial 7 m goal, and the corridor an axial 75 m goal; the three training
/// families draw styles from the training pool, the corridor from the
/// disjoint held-out pool.
pub fn generate(kind: EnvKind, seed: u64, params: &GenParams) -> Result<World> {
    if kind == EnvKind::Corridor {
        // Fixed layout: no randomness, no retries.
        let world = corridor::build(seed, &params.corridor);
        debug_assert!(world.validate().is_ok());
        return Ok(world);
    }

    for attempt in 0..MAX_ATTEMPTS {
        let draw_seed = if attempt == 0 {
            seed
        } else {
            rng::derive3(seed, stream::RETRY, attempt, 0)
        };
        let world = match kind {
            EnvKind::Canyon => canyon::build(seed, draw_seed, &params.canyon)?,
            EnvKind::Forest => match forest::build(seed, draw_seed, &params.forest) {
                Ok(w) => w,
                Err(Error::Generation(_)) => continue,
                Err(e) => return Err(e),
            },
            EnvKind::Sandbox => match sandbox::build(seed, draw_seed, &params.sandbox) {
                Ok(w) => w,
                Err(Error::Generation(_)) => continue,
                Err(e) => return Err(e),
            },
            EnvKind::Corridor => unreachable!(),
        };
        if accept(&world) {
            world.validate()?;
            return Ok(world);
        }
    }
    Err(Error::Generation(format!(
        "no feasible {kind} world for seed {seed} within {MAX_ATTEMPTS} attempts"
    )))
}

/// A candidate world is accepted when the spawn is clear, no wall
/// self-intersects, and a path to the goal exists.
fn accept(world: &World) -> bool {
    let spawn_clear = crate::sim::clearance(world, crate::sim::Vec2::new(0.0, 0.0));
    if spawn_clear < SPAWN_CLEARANCE {
        return false;
    }
    if walls_self_intersect(world) {
        return false;
    }
    feasible(world)
}

/// Check every pair of non-adjacent wall segments for intersection.
fn walls_self_intersect(world: &World) -> bool {
    use crate::sim::{Shape, Vec2};
    let mut segments: Vec<(Vec2, Vec2, usize)> = Vec::new();
    for (si, s) in world.obstacles.iter().enumerate() {
        if let Shape::Polyline { points, .. } = s {
            for w in points.windows(2) {
                segments.push((w[0], w[1], si));
            }
        }
    }
    for i in 0..segments.len() {
        for j in i + 1..segments.len() {
            let (a1, b1, s1) = segments[i];
            let (a2, b2, s2) = segments[j];
            // Consecutive segments of one polyline share an endpoint.
            if s1 == s2 && (j == i + 1) {
                continue;
            }
            if segments_cross(a1, b1, a2, b2) {
                return true;
            }
        }
    }
    false
}

fn segments_cross(
    a: crate::sim::Vec2,
    b: crate::sim::Vec2,
    c: crate::sim::Vec2,
    d: crate::sim::Vec2,
) -> bool {
    let orient = |p: crate::sim::Vec2, q: crate::sim::Vec2, r: crate::sim::Vec2| (q - p).cross(r - p);
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::Shape;

    #[test]
    fn generation_is_deterministic_and_serializes_identically() {
        let params = GenParams::default();
        for kind in EnvKind::ALL {
            let a = generate(kind, 7, &params).unwrap();
            let b = generate(kind, 7, &params).unwrap();
            assert_eq!(a, b, "{kind}");
            assert_eq!(
                a.to_json_bytes().unwrap(),
                b.to_json_bytes().unwrap(),
                "{kind}"
            );
        }
    }

    #[test]
    fn different_seeds_give_different_training_worlds() {
        let params = GenParams::default();
        for kind in EnvKind::TRAINING {
            let a = generate(kind, 1, &params).unwrap();
            let b = generate(kind, 2, &params).unwrap();
            assert_ne!(a.obstacles, b.obstacles, "{kind}");
        }
    }

    #[test]
    fn sandbox_has_13_objects_plus_4_walls() {
        let params = GenParams::default();
        for seed in [0u64, 1, 5, 99, 1234] {
            let w = generate(EnvKind::Sandbox, seed, &params).unwrap();
            let walls = w
                .obstacles
                .iter()
                .filter(|s| matches!(s, Shape::Polyline { .. }))
                .count();
            assert_eq!(w.obstacles.len(), 17, "seed {seed}");
            assert!(walls >= 4, "seed {seed}: {walls} walls");
        }
    }

    #[test]
    fn generated_worlds_pass_feasibility_and_spawn_clearance() {
        let params = GenParams::default();
        for kind in EnvKind::ALL {
            for seed in 0..10u64 {
                let w = generate(kind, seed, &params).unwrap();
                assert!(feasible(&w), "{kind} seed {seed}");
                assert!(
                    crate::sim::clearance(&w, crate::sim::Vec2::new(0.0, 0.0))
                        >= SPAWN_CLEARANCE,
                    "{kind} seed {seed}"
                );
            }
        }
    }

    #[test]
    fn training_and_held_out_style_pools_are_disjoint() {
        let params = GenParams::default();
        let mut training_ids = std::collections::BTreeSet::new();
        for kind in EnvKind::TRAINING {
            for seed in 0..5u64 {
                let w = generate(kind, seed, &params).unwrap();
                for s in &w.style.styles {
                    training_ids.insert(s.id);
                    assert!(
                        styles::is_training_id(s.id),
                        "{kind} used non-training style {}",
                        s.id
                    );
                }
            }
        }
        let corridor = generate(EnvKind::Corridor, 0, &params).unwrap();
        for s in &corridor.style.styles {
            assert!(styles::is_held_out_id(s.id), "corridor style {}", s.id);
            assert!(!training_ids.contains(&s.id));
        }
    }

    #[test]
    fn canyon_bend_draws_are_uniform_over_range() {
        // The raw bend draws are i.i.d. uniform over [-bend_range, bend_range];
        // check the empirical distribution of the draw function.
        let params = CanyonParams::default();
        let mut lo = 0usize;
        let mut hi = 0usize;
        let mut all = Vec::new();
        for seed in 0..400u64 {
            let bends = canyon::draw_bends(seed, &params);
            for b in bends {
                assert!(b.abs() <= params.bend_range + 1e-12);
                if b < 0.0 {
                    lo += 1;
                } else {
                    hi += 1;
                }
                all.push(b);
            }
        }
        let n = (lo + hi) as f64;
        assert!((lo as f64 / n - 0.5).abs() < 0.03, "lo {lo} hi {hi}");
        let mean: f64 = all.iter().sum::<f64>() / n;
        assert!(mean.abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn blocked_canyon_is_infeasible() {
        let params = GenParams::default();
        let mut w = generate(EnvKind::Canyon, 3, &params).unwrap();
        assert!(feasible(&w));
        // Drop a full-width wall at x = 10.
        let style = w.style.styles[0].id;
        w.obstacles.push(Shape::Polyline {
            points: vec![
                crate::sim::Vec2::new(10.0, -40.0),
                crate::sim::Vec2::new(10.0, 40.0),
            ],
            style_id: style,
        });
        w.bounds = w.bounds.grow(1.0);
        assert!(!feasible(&w));
    }

    #[test]
    fn corridor_forward_and_reverse_share_geometry() {
        let params = GenParams::default();
        let fwd = generate(EnvKind::Corridor, 0, &params).unwrap();
        let rev = generate(
            EnvKind::Corridor,
            0,
            &GenParams {
                corridor: CorridorParams { reverse: true },
                ..params
            },
        )
        .unwrap();
        assert_eq!(fwd.obstacles.len(), rev.obstacles.len());
        assert_ne!(fwd.obstacles, rev.obstacles);
        assert!(feasible(&rev));
        // Same total wall length either way.
        let total = |w: &World| -> f64 {
            w.obstacles
                .iter()
                .map(|s| match s {
                    Shape::Polyline { points, .. } => points
                        .windows(2)
                        .map(|p| (p[1] - p[0]).norm())
                        .sum::<f64>(),
                    _ => 0.0,
                })
                .sum()
        };
        assert!((total(&fwd) - total(&rev)).abs() < 1e-9);
    }
}
