//! Ground-truth-depth heuristic pilot: attraction toward the deepest view
//! direction, repulsion away from close obstacles.
//!
//! Used to collect behavioral-cloning demonstrations and to label avoidance
//! directions. The arithmetic is arranged so that mirroring the scan negates
//! the output bit-exactly: window sums pair symmetric columns before adding,
//! and the repulsion term sums left-right differences pairwise.

use crate::render::{raycast, CameraModel, DepthScan};
use crate::sim::{Action, Controller, ObsCtx, Pose, World};

/// Gains of the attraction/repulsion pilot. Outputs clamp to `[-1, 1]`.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct ExpertParams {
    /// Distance under which obstacles start to repel, meters.
    pub d_safe: f64,
    /// Gain on the deepest-direction attraction term.
    pub k_attract: f64,
    /// Gain on the close-obstacle repulsion term.
    pub k_repulse: f64,
    /// Angular window over which depth is averaged when scoring directions,
    /// radians.
    pub smoothing_window: f64,
}

impl Default for ExpertParams {
    fn default() -> Self {
        ExpertParams {
            d_safe: 3.0,
            k_attract: 0.6,
            k_repulse: 4.0,
            smoothing_window: 0.26,
        }
    }
}

/// Avoidance direction label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AvoidLabel {
    Left,
    Straight,
    Right,
}

impl AvoidLabel {
    pub fn name(&self) -> &'static str {
        match self {
            AvoidLabel::Left => "left",
            AvoidLabel::Straight => "straight",
            AvoidLabel::Right => "right",
        }
    }
}

impl std::fmt::Display for AvoidLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Depth averaged over the smoothing window around every column.
///
/// Windows are summed center-out in mirror pairs so that a mirrored scan
/// yields the exact mirrored smoothed values.
fn smoothed_depth(scan: &DepthScan, cam: &CameraModel, window: f64) -> Vec<f64> {
    let w = scan.width();
    let col_step = cam.horizontal_fov / w as f64;
    let half = ((window / 2.0) / col_step).floor() as usize;
    let d = &scan.distances;

    (0..w)
        .map(|c| {
            let mut acc = d[c];
            let mut count = 1usize;
            for k in 1..=half {
                let lo = c.checked_sub(k);
                let hi = if c + k < w { Some(c + k) } else { None };
                match (lo, hi) {
                    (Some(l), Some(h)) => {
                        acc += d[l] + d[h];
                        count += 2;
                    }
                    (Some(l), None) => {
                        acc += d[l];
                        count += 1;
                    }
                    (None, Some(h)) => {
                        acc += d[h];
                        count += 1;
                    }
                    (None, None) => {}
                }
            }
            acc / count as f64
        })
        .collect()
}

/// Direction of the deepest (window-averaged) view, relative to the heading.
///
/// Ties resolve to the angle closest to zero; an exactly tied symmetric pair
/// resolves to 0, which makes the pilot's mirror antisymmetry exact.
fn deepest_direction(scan: &DepthScan, smoothed: &[f64]) -> f64 {
    let w = scan.width();
    let best = smoothed.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // Closest-to-center candidate on each side (columns < w/2 look left).
    let mut left: Option<f64> = None; // positive angles, pick smallest |angle|
    let mut right: Option<f64> = None;
    for c in 0..w {
        if smoothed[c] == best {
            let a = scan.angles[c];
            if a > 0.0 {
                if left.map_or(true, |cur| a < cur) {
                    left = Some(a);
                }
            } else if right.map_or(true, |cur| a > cur) {
                right = Some(a);
            }
        }
    }
    match (left, right) {
        (Some(l), Some(r)) => {
            if l < -r {
                l
            } else if -r < l {
                r
            } else {
                0.0
            }
        }
        (Some(l), None) => l,
        (None, Some(r)) => r,
        (None, None) => 0.0,
    }
}

/// Signed repulsion: positive when close obstacles crowd the left half.
///
/// `R = (1/N) * sum_c sign(angle_c) * max(0, 1 - d_c / d_safe)`, accumulated
/// as pairwise left-right differences for exact mirror antisymmetry.
fn repulsion(scan: &DepthScan, d_safe: f64) -> f64 {
    let w = scan.width();
    let m = |c: usize| (1.0 - scan.distances[c] / d_safe).max(0.0);
    let mut acc = 0.0;
    for c in 0..w / 2 {
        acc += m(c) - m(w - 1 - c);
    }
    acc / w as f64
}

/// Compute the pilot's yaw command from a ground-truth depth scan:
/// `clamp(k_attract * theta_star - k_repulse * R, -1, 1)`.
pub fn pilot(scan: &DepthScan, cam: &CameraModel, p: &ExpertParams) -> Action {
    let smoothed = smoothed_depth(scan, cam, p.smoothing_window);
    let theta_star = deepest_direction(scan, &smoothed);
    let r = repulsion(scan, p.d_safe);
    Action::new((p.k_attract * theta_star - p.k_repulse * r).clamp(-1.0, 1.0))
}

/// Label the control required to avoid collision at this pose.
///
/// Straight iff the center third of the view is deeper than `d_safe`
/// everywhere; otherwise the side with more integrated free space wins
/// (5% hysteresis), falling back to the side of the deepest direction.
pub fn label_avoidance(
    world: &World,
    pose: &Pose,
    cam: &CameraModel,
    p: &ExpertParams,
) -> AvoidLabel {
    let scan = raycast(world, pose, cam);
    label_from_scan(&scan, cam, p)
}

pub fn label_from_scan(scan: &DepthScan, cam: &CameraModel, p: &ExpertParams) -> AvoidLabel {
    let w = scan.width();
    let third = cam.horizontal_fov / 6.0;
    let center_min = (0..w)
        .filter(|&c| scan.angles[c].abs() <= third)
        .map(|c| scan.distances[c])
        .fold(f64::INFINITY, f64::min);
    if center_min > p.d_safe {
        return AvoidLabel::Straight;
    }
    // Sum each half center-out so mirrored scans swap the sums exactly.
    let mut free_left = 0.0;
    for c in (0..w / 2).rev() {
        free_left += scan.distances[c];
    }
    let mut free_right = 0.0;
    for c in w / 2..w {
        free_right += scan.distances[c];
    }
    const EPS: f64 = 0.05;
    if free_left > free_right * (1.0 + EPS) {
        AvoidLabel::Left
    } else if free_right > free_left * (1.0 + EPS) {
        AvoidLabel::Right
    } else {
        let smoothed = smoothed_depth(scan, cam, p.smoothing_window);
        let theta = deepest_direction(scan, &smoothed);
        if theta > 0.0 {
            AvoidLabel::Left
        } else if theta < 0.0 {
            AvoidLabel::Right
        } else {
            AvoidLabel::Straight
        }
    }
}

/// Closed-loop controller wrapping the pilot; reads ground-truth depth from
/// the world (privileged observation, used only to generate demonstrations).
#[derive(Debug, Clone)]
pub struct ExpertController {
    pub params: ExpertParams,
}

impl ExpertController {
    pub fn new(params: ExpertParams) -> Self {
        ExpertController { params }
    }
}

impl Controller for ExpertController {
    fn act(&mut self, ctx: &ObsCtx<'_>) -> Action {
        pilot(ctx.scan, ctx.cam, &self.params)
    }
}
