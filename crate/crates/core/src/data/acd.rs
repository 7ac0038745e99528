//! Synthetic almost-collision set.
//!
//! Short image sequences that end just before a collision, each labeled with
//! the single control that avoids it. Seven fixed "locations" (mini-scenes in
//! the held-out palette) cover the three visual cue families: dead ends and
//! doorways (perspective lines), pillar fields and rows (vertical lines), and
//! polygon clutter (strange shapes). The expert flies each scene until the
//! straight-flight time-to-collision drops under 1.5 s; the final 3-ish
//! seconds of frames are kept and the label comes from the avoidance labeler
//! at the final pose. Left-labeled scenes are mirrored to produce their
//! right-labeled twins, so the left/right composition is balanced by
//! construction.

use std::path::Path;

use crate::expert::{label_avoidance, pilot, AvoidLabel, ExpertParams};
use crate::procgen::styles::acd_palette;
use crate::render::{raycast, read_pgm_seq, render_frame_from_scan, write_pgm, CameraModel, Frame};
use crate::rng::{derive3, stream, SplitMix64};
use crate::sim::{
    step, time_to_collision_steps, Aabb, DroneState, EnvKind, EpisodeConfig, GoalKind,
    GoalSpec, Pose, Shape, Vec2, World,
};
use crate::{Error, Result};

/// Visual cue family of a location.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cue {
    Perspective,
    Vertical,
    Strange,
}

impl Cue {
    pub fn name(&self) -> &'static str {
        match self {
            Cue::Perspective => "perspective",
            Cue::Vertical => "vertical",
            Cue::Strange => "strange",
        }
    }
}

impl std::fmt::Display for Cue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

pub const LOCATION_COUNT: u32 = 7;

/// Cue family of each location id (1-based).
pub fn location_cue(location_id: u32) -> Cue {
    match location_id {
        1..=3 => Cue::Perspective,
        4 | 5 => Cue::Vertical,
        _ => Cue::Strange,
    }
}

/// Straight-flight time-to-collision threshold: strictly under 1.5 s at the
/// final frame of every trajectory.
pub const TTC_LIMIT_STEPS: usize = 30; // 30 * 0.05 s = 1.5 s

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct AcdTrajectoryMeta {
    pub dir: String,
    pub label: AvoidLabel,
    pub location_id: u32,
    pub cue: Cue,
    pub frames: usize,
    pub fps: f64,
    pub camera: CameraModel,
    pub final_pose: Pose,
    /// Straight-flight time-to-collision at the final pose, in steps.
    pub ttc_steps: usize,
    /// Pose at which each kept frame was rendered.
    pub poses: Vec<Pose>,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct AcdIndex {
    pub master_seed: u64,
    pub total_frames: usize,
    pub left: usize,
    pub right: usize,
    pub straight: usize,
    pub trajectories: Vec<AcdTrajectoryMeta>,
}

/// A loaded trajectory ready for classification.
#[derive(Debug, Clone)]
pub struct AcdTrajectory {
    pub meta: AcdTrajectoryMeta,
    pub frames: Vec<Frame>,
}

#[derive(Debug)]
pub struct AcdSet {
    pub index: AcdIndex,
    pub trajectories: Vec<AcdTrajectory>,
}

impl AcdSet {
    pub fn load(root: &Path) -> Result<AcdSet> {
        let index: AcdIndex = crate::util::from_json_slice(&std::fs::read(root.join("acd.json"))?)?;
        let mut trajectories = Vec::with_capacity(index.trajectories.len());
        for meta in &index.trajectories {
            let frames = read_pgm_seq(&std::fs::read(root.join(&meta.dir).join("frames.pgm.seq"))?)?;
            if frames.len() != meta.frames {
                return Err(Error::Format(format!(
                    "{}: expected {} frames, found {}",
                    meta.dir,
                    meta.frames,
                    frames.len()
                )));
            }
            trajectories.push(AcdTrajectory {
                meta: meta.clone(),
                frames,
            });
        }
        Ok(AcdSet {
            index,
            trajectories,
        })
    }
}

/// Generation settings; defaults mirror the benchmark protocol.
#[derive(Debug, Clone)]
pub struct AcdConfig {
    pub master_seed: u64,
    pub trajectories: usize,
    pub expert: ExpertParams,
    pub cam: CameraModel,
    pub episode: EpisodeConfig,
    pub drone: DroneState,
}

impl Default for AcdConfig {
    fn default() -> Self {
        AcdConfig {
            master_seed: 0,
            trajectories: 25,
            expert: ExpertParams::default(),
            cam: CameraModel::default(),
            episode: EpisodeConfig::default(),
            drone: DroneState::default(),
        }
    }
}

/// The planned (location, label) of trajectory `i`: trajectory 0 is the
/// single straight case; the rest alternate left/right over the locations
/// round-robin, keeping left and right counts within one of each other.
pub fn plan(i: usize) -> (u32, AvoidLabel) {
    if i == 0 {
        (1, AvoidLabel::Straight)
    } else {
        let location = 1 + (i as u32 % LOCATION_COUNT);
        let label = if i % 2 == 1 {
            AvoidLabel::Left
        } else {
            AvoidLabel::Right
        };
        (location, label)
    }
}

const MAX_ATTEMPTS: u64 = 32;
const MAX_FLIGHT_STEPS: usize = 600;
const MIN_KEEP: usize = 60;

/// Generate the synthetic almost-collision set under `out_root`.
pub fn gen_almost_collision(cfg: &AcdConfig, out_root: &Path) -> Result<AcdIndex> {
    std::fs::create_dir_all(out_root)?;
    let mut metas = Vec::with_capacity(cfg.trajectories);
    let mut total_frames = 0;
    let (mut left, mut right, mut straight) = (0, 0, 0);

    for i in 0..cfg.trajectories {
        let (location_id, label) = plan(i);
        let (frames, final_pose, ttc, kept_poses) =
            build_trajectory(cfg, i, location_id, label, out_root)?;
        total_frames += frames;
        match label {
            AvoidLabel::Left => left += 1,
            AvoidLabel::Right => right += 1,
            AvoidLabel::Straight => straight += 1,
        }
        metas.push(AcdTrajectoryMeta {
            dir: traj_dir_name(i),
            label,
            location_id,
            cue: location_cue(location_id),
            frames,
            fps: 1.0 / cfg.episode.dt,
            camera: cfg.cam,
            final_pose,
            ttc_steps: ttc,
            poses: kept_poses,
        });
    }

    let index = AcdIndex {
        master_seed: cfg.master_seed,
        total_frames,
        left,
        right,
        straight,
        trajectories: metas,
    };
    std::fs::write(out_root.join("acd.json"), crate::util::to_json_vec(&index)?)?;
    Ok(index)
}

fn traj_dir_name(i: usize) -> String {
    format!("traj_{i:03}")
}

/// Build, verify, and persist one trajectory; retries with derived jitter
/// seeds until the scene produces the planned label.
fn build_trajectory(
    cfg: &AcdConfig,
    index: usize,
    location_id: u32,
    label: AvoidLabel,
    out_root: &Path,
) -> Result<(usize, Pose, usize, Vec<Pose>)> {
    for attempt in 0..MAX_ATTEMPTS {
        let seed = derive3(cfg.master_seed, stream::ACD, index as u64, attempt);
        let mut rng = SplitMix64::new(seed);
        let world = build_scene(location_id, label, &mut rng);

        let flight = match fly_until_near_collision(cfg, &world) {
            Ok(f) => f,
            Err(_) => continue,
        };
        let (frames, poses, cut, ttc) = flight;
        if cut + 1 < MIN_KEEP {
            continue;
        }
        let got = label_avoidance(&world, &poses[cut], &cfg.cam, &cfg.expert);
        if got != label {
            continue;
        }

        let keep = MIN_KEEP + (rng.next_below(9) as usize); // 3.0 .. 3.4 s
        let keep = keep.min(cut + 1);
        let start = cut + 1 - keep;
        let dir = out_root.join(traj_dir_name(index));
        std::fs::create_dir_all(&dir)?;
        let mut pgm = Vec::new();
        for f in &frames[start..=cut] {
            write_pgm(&mut pgm, f)?;
        }
        std::fs::write(dir.join("frames.pgm.seq"), pgm)?;
        world.save(&dir.join("world.json"))?;
        return Ok((keep, poses[cut], ttc, poses[start..=cut].to_vec()));
    }
    Err(Error::Generation(format!(
        "location {location_id} could not produce a '{label}' trajectory for index {index}"
    )))
}

/// Fly the expert until straight-flight TTC drops under the limit; returns
/// all frames, observation poses, the cut index, and the TTC at the cut.
#[allow(clippy::type_complexity)]
fn fly_until_near_collision(
    cfg: &AcdConfig,
    world: &World,
) -> Result<(Vec<Frame>, Vec<Pose>, usize, usize)> {
    let mut drone = cfg.drone;
    let mut frames = Vec::new();
    let mut poses = Vec::new();
    for _ in 0..MAX_FLIGHT_STEPS {
        let pose = drone.pose;
        let ttc = time_to_collision_steps(world, &pose, &cfg.drone, cfg.episode.dt, TTC_LIMIT_STEPS);
        let scan = raycast(world, &pose, &cfg.cam);
        frames.push(render_frame_from_scan(world, &scan, &cfg.cam));
        poses.push(pose);
        if let Some(k) = ttc {
            if k < TTC_LIMIT_STEPS {
                let cut = poses.len() - 1;
                return Ok((frames, poses, cut, k));
            }
        }
        let action = pilot(&scan, &cfg.cam, &cfg.expert);
        drone = step(&drone, action, cfg.episode.dt)?;
        if crate::sim::check_collision(world, &drone) {
            return Err(Error::Generation("expert collided before the cut".into()));
        }
    }
    Err(Error::Generation(
        "no near-collision within the flight budget".into(),
    ))
}

// --- Scene construction -----------------------------------------------------

const STYLE_WALL: u32 = 104;
const STYLE_PILLAR: u32 = 105;
const STYLE_BLOCK: u32 = 106;
const STYLE_DOOR: u32 = 107;

/// Build the scene for one (location, label). Left-form scenes are mirrored
/// about the flight axis for right labels; the doorway scene centers its
/// door for the straight label.
fn build_scene(location_id: u32, label: AvoidLabel, rng: &mut SplitMix64) -> World {
    let left_form = build_left_scene(location_id, label == AvoidLabel::Straight, rng);
    match label {
        AvoidLabel::Right => mirror_world(&left_form),
        _ => left_form,
    }
}

struct SceneBuilder {
    shapes: Vec<Shape>,
    /// Lane length from spawn to the scene anchor.
    lane_len: f64,
    /// Lane half width.
    hw: f64,
}

impl SceneBuilder {
    fn new(rng: &mut SplitMix64) -> SceneBuilder {
        SceneBuilder {
            shapes: Vec::new(),
            lane_len: rng.next_range(9.5, 11.5),
            hw: rng.next_range(1.3, 1.45),
        }
    }

    /// Two lane walls from behind the spawn to `x_end`.
    fn lane(&mut self, x_end: f64) {
        for side in [-1.0, 1.0] {
            self.shapes.push(Shape::Polyline {
                points: vec![
                    Vec2::new(-2.0, side * self.hw),
                    Vec2::new(x_end, side * self.hw),
                ],
                style_id: STYLE_WALL,
            });
        }
        // Cap behind the spawn.
        self.shapes.push(Shape::Polyline {
            points: vec![Vec2::new(-2.0, -self.hw), Vec2::new(-2.0, self.hw)],
            style_id: STYLE_DOOR,
        });
    }

    fn wall(&mut self, pts: Vec<Vec2>, style: u32) {
        self.shapes.push(Shape::Polyline {
            points: pts,
            style_id: style,
        });
    }

    fn pillar(&mut self, x: f64, y: f64, r: f64) {
        self.shapes.push(Shape::Circle {
            center: Vec2::new(x, y),
            radius: r,
            style_id: STYLE_PILLAR,
        });
    }

    fn finish(self, bounds_pad: f64) -> World {
        let mut bounds = self.shapes[0].aabb();
        for s in &self.shapes[1..] {
            bounds = bounds.union(&s.aabb());
        }
        World {
            env_kind: EnvKind::Sandbox,
            seed: 0,
            bounds: bounds.grow(bounds_pad),
            goal: GoalSpec {
                kind: GoalKind::AxialDistance,
                // Unreachable on purpose: these scenes end near a collision.
                threshold: 1000.0,
            },
            style: acd_palette(),
            obstacles: self.shapes,
        }
    }
}

#[doc(hidden)]
pub fn debug_scene(location_id: u32, straight: bool, rng: &mut SplitMix64) -> World {
    build_left_scene(location_id, straight, rng)
}

fn build_left_scene(location_id: u32, straight: bool, rng: &mut SplitMix64) -> World {
    match location_id {
        1 => doorway(straight, rng),
        2 => l_bend(rng),
        3 => dead_end_pocket(rng),
        4 => pillar_field(rng),
        5 => pillar_row(rng),
        6 => polygon_cluster(rng),
        _ => wedge_block(rng),
    }
}

/// Location 1 (perspective): a lane ending in a wall with a door gap. The
/// straight variant centers the door and lets the world end just past it, so
/// straight flight stays correct while collision is imminent on both sides.
fn doorway(straight: bool, rng: &mut SplitMix64) -> World {
    let mut b = SceneBuilder::new(rng);
    let end = b.lane_len;
    b.lane(end);
    let door_w = 0.9;
    let door_center = if straight { 0.0 } else { b.hw - 0.5 };
    let lo = door_center - door_w / 2.0;
    let hi = door_center + door_w / 2.0;
    b.wall(
        vec![Vec2::new(end, -b.hw), Vec2::new(end, lo)],
        STYLE_DOOR,
    );
    b.wall(vec![Vec2::new(end, hi), Vec2::new(end, b.hw)], STYLE_DOOR);
    if !straight {
        // A short exit corridor behind the door keeps the left rays deep.
        b.wall(
            vec![Vec2::new(end, lo), Vec2::new(end + 5.0, lo)],
            STYLE_WALL,
        );
    }
    // Bounds end 1 m past the wall: the straight variant's near-collision is
    // the world edge beyond the open door.
    b.finish(1.0)
}

/// Location 2 (perspective): a blind 90-degree left bend; the exit corridor
/// opens flush against the end wall, so it only becomes visible up close.
fn l_bend(rng: &mut SplitMix64) -> World {
    let mut b = SceneBuilder::new(rng);
    let end = b.lane_len;
    let hw = b.hw;
    let gap_w = rng.next_range(1.35, 1.55);
    let exit_len = rng.next_range(6.0, 8.0);
    // Right wall and the end wall block the straight path.
    b.wall(vec![Vec2::new(-2.0, -hw), Vec2::new(end, -hw)], STYLE_WALL);
    b.shapes.push(Shape::Polyline {
        points: vec![
            Vec2::new(end, -hw),
            Vec2::new(end, hw + exit_len),
        ],
        style_id: STYLE_WALL,
    });
    // Left wall stops short of the corner; the exit corridor runs upward.
    b.shapes.push(Shape::Polyline {
        points: vec![
            Vec2::new(-2.0, hw),
            Vec2::new(end - gap_w, hw),
            Vec2::new(end - gap_w, hw + exit_len),
        ],
        style_id: STYLE_WALL,
    });
    b.wall(
        vec![Vec2::new(-2.0, -hw), Vec2::new(-2.0, hw)],
        STYLE_DOOR,
    );
    b.finish(1.0)
}

/// Location 3 (perspective): dead-end pocket with a side opening on the left
/// just before the end wall.
fn dead_end_pocket(rng: &mut SplitMix64) -> World {
    let mut b = SceneBuilder::new(rng);
    let end = b.lane_len;
    let hw = b.hw;
    let gap_w = rng.next_range(1.4, 1.6);
    let gap_far = end - 0.5;
    let gap_near = gap_far - gap_w;
    // Right wall and end wall are solid.
    b.wall(vec![Vec2::new(-2.0, -hw), Vec2::new(end, -hw)], STYLE_WALL);
    b.wall(vec![Vec2::new(end, -hw), Vec2::new(end, hw)], STYLE_DOOR);
    // Left wall has the opening with a short exit corridor.
    b.wall(vec![Vec2::new(-2.0, hw), Vec2::new(gap_near, hw)], STYLE_WALL);
    b.wall(vec![Vec2::new(gap_far, hw), Vec2::new(end, hw)], STYLE_WALL);
    b.wall(
        vec![Vec2::new(gap_near, hw), Vec2::new(gap_near, hw + 6.0)],
        STYLE_WALL,
    );
    b.wall(
        vec![Vec2::new(gap_far, hw), Vec2::new(gap_far, hw + 6.0)],
        STYLE_WALL,
    );
    b.wall(
        vec![Vec2::new(-2.0, -hw), Vec2::new(-2.0, hw)],
        STYLE_DOOR,
    );
    b.finish(1.0)
}

/// Location 4 (vertical): the lane flares into a hall with a pillar cluster
/// blocking the center and right; the left channel stays clear.
fn pillar_field(rng: &mut SplitMix64) -> World {
    let mut b = SceneBuilder::new(rng);
    let end = b.lane_len;
    let hw = b.hw;
    let hall_hw = hw + 1.8;
    let hall_len = 8.0;
    for side in [-1.0, 1.0] {
        b.shapes.push(Shape::Polyline {
            points: vec![
                Vec2::new(-2.0, side * hw),
                Vec2::new(end, side * hw),
                Vec2::new(end + 1.0, side * hall_hw),
                Vec2::new(end + hall_len, side * hall_hw),
            ],
            style_id: STYLE_WALL,
        });
    }
    b.wall(
        vec![
            Vec2::new(end + hall_len, -hall_hw),
            Vec2::new(end + hall_len, hall_hw),
        ],
        STYLE_DOOR,
    );
    b.wall(
        vec![Vec2::new(-2.0, -hw), Vec2::new(-2.0, hw)],
        STYLE_DOOR,
    );
    // Blocking pillar dead ahead plus clutter on the right half.
    let r = rng.next_range(0.14, 0.2);
    b.pillar(end + 2.5, rng.next_range(-0.1, 0.1), r);
    b.pillar(end + 1.8, -1.1 + rng.next_range(-0.15, 0.15), r);
    b.pillar(end + 3.4, -1.8 + rng.next_range(-0.15, 0.15), r);
    b.pillar(end + 4.4, -0.6 + rng.next_range(-0.15, 0.15), r);
    b.pillar(end + 4.0, -2.6 + rng.next_range(-0.15, 0.15), r);
    b.pillar(end + 5.6, -1.4 + rng.next_range(-0.15, 0.15), r);
    b.finish(1.0)
}

/// Location 5 (vertical): a row of pillars across the lane with the only
/// passable gap next to the left wall.
fn pillar_row(rng: &mut SplitMix64) -> World {
    let mut b = SceneBuilder::new(rng);
    let end = b.lane_len;
    let hw = b.hw;
    b.lane(end + 6.0);
    b.wall(
        vec![Vec2::new(end + 6.0, -hw), Vec2::new(end + 6.0, hw)],
        STYLE_DOOR,
    );
    let r = rng.next_range(0.13, 0.17);
    // Pillars every ~0.55 m from the right wall upward, leaving a gap of
    // ~1.0 m at the left wall.
    let mut y = -hw + 0.35;
    while y < hw - 1.05 {
        b.pillar(end + rng.next_range(-0.05, 0.05), y, r);
        y += 0.55;
    }
    b.finish(1.0)
}

/// Location 6 (strange): odd convex shapes cluttering the center and right
/// of a flared hall.
fn polygon_cluster(rng: &mut SplitMix64) -> World {
    let mut b = SceneBuilder::new(rng);
    let end = b.lane_len;
    let hw = b.hw;
    let hall_hw = hw + 1.6;
    let hall_len = 8.0;
    for side in [-1.0, 1.0] {
        b.shapes.push(Shape::Polyline {
            points: vec![
                Vec2::new(-2.0, side * hw),
                Vec2::new(end, side * hw),
                Vec2::new(end + 1.0, side * hall_hw),
                Vec2::new(end + hall_len, side * hall_hw),
            ],
            style_id: STYLE_WALL,
        });
    }
    b.wall(
        vec![
            Vec2::new(end + hall_len, -hall_hw),
            Vec2::new(end + hall_len, hall_hw),
        ],
        STYLE_DOOR,
    );
    b.wall(
        vec![Vec2::new(-2.0, -hw), Vec2::new(-2.0, hw)],
        STYLE_DOOR,
    );
    // Wedge dead ahead.
    let cx = end + 2.6;
    let j = rng.next_range(-0.1, 0.1);
    b.shapes.push(Shape::Polygon {
        points: vec![
            Vec2::new(cx, j - 0.5),
            Vec2::new(cx + 1.2, j - 0.1),
            Vec2::new(cx + 0.2, j + 0.6),
        ],
        style_id: STYLE_BLOCK,
    });
    // Pentagon lower right.
    let py = -1.7 + rng.next_range(-0.1, 0.1);
    let pr = 0.7;
    b.shapes.push(Shape::Polygon {
        points: (0..5)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / 5.0 + 0.3;
                Vec2::new(cx + 1.6 + pr * libm::cos(a), py + pr * libm::sin(a))
            })
            .collect(),
        style_id: STYLE_BLOCK,
    });
    b.finish(1.0)
}

/// Location 7 (strange): one large diamond blocking the flared hall with the
/// pass on the left.
fn wedge_block(rng: &mut SplitMix64) -> World {
    let mut b = SceneBuilder::new(rng);
    let end = b.lane_len;
    let hw = b.hw;
    let hall_hw = hw + 1.4;
    let hall_len = 7.5;
    for side in [-1.0, 1.0] {
        b.shapes.push(Shape::Polyline {
            points: vec![
                Vec2::new(-2.0, side * hw),
                Vec2::new(end, side * hw),
                Vec2::new(end + 1.0, side * hall_hw),
                Vec2::new(end + hall_len, side * hall_hw),
            ],
            style_id: STYLE_WALL,
        });
    }
    b.wall(
        vec![
            Vec2::new(end + hall_len, -hall_hw),
            Vec2::new(end + hall_len, hall_hw),
        ],
        STYLE_DOOR,
    );
    b.wall(
        vec![Vec2::new(-2.0, -hw), Vec2::new(-2.0, hw)],
        STYLE_DOOR,
    );
    let cx = end + 3.0;
    let cy = -0.4 + rng.next_range(-0.1, 0.1);
    let w = rng.next_range(1.0, 1.3);
    b.shapes.push(Shape::Polygon {
        points: vec![
            Vec2::new(cx - w, cy),
            Vec2::new(cx, cy - 1.6),
            Vec2::new(cx + w, cy),
            Vec2::new(cx, cy + 1.1),
        ],
        style_id: STYLE_BLOCK,
    });
    b.finish(1.0)
}

/// Mirror a world about the flight axis (y -> -y).
pub fn mirror_world(world: &World) -> World {
    let flip = |p: Vec2| Vec2::new(p.x, -p.y);
    let obstacles = world
        .obstacles
        .iter()
        .map(|s| match s {
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
            Shape::Polygon { points, style_id } => Shape::Polygon {
                points: points.iter().rev().map(|p| flip(*p)).collect(),
                style_id: *style_id,
            },
        })
        .collect();
    World {
        bounds: Aabb::new(
            Vec2::new(world.bounds.min.x, -world.bounds.max.y),
            Vec2::new(world.bounds.max.x, -world.bounds.min.y),
        ),
        obstacles,
        ..world.clone()
    }
}
