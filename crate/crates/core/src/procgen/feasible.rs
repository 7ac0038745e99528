//! Goal reachability check on an occupancy grid.

use std::collections::VecDeque;

use crate::sim::{clearance, GoalKind, Vec2, World};

const CELL: f64 = 0.25;
/// Obstacle inflation radius: the default drone body radius.
const INFLATE: f64 = 0.25;

/// True iff a path exists from the spawn point (0, 0) to the goal set on an
/// occupancy grid of 0.25 m cells with obstacles inflated by the body radius.
pub fn feasible(world: &World) -> bool {
    let b = &world.bounds;
    let nx = ((b.max.x - b.min.x) / CELL).ceil() as usize + 1;
    let ny = ((b.max.y - b.min.y) / CELL).ceil() as usize + 1;
    if nx == 0 || ny == 0 || nx * ny > 4_000_000 {
        return false;
    }

    let center = |ix: usize, iy: usize| {
        Vec2::new(
            b.min.x + (ix as f64 + 0.5) * CELL,
            b.min.y + (iy as f64 + 0.5) * CELL,
        )
    };
    let goal_hit = |p: Vec2| match world.goal.kind {
        GoalKind::AxialDistance => p.x >= world.goal.threshold,
        GoalKind::RadialDistance => p.norm() >= world.goal.threshold,
    };

    let start_ix = ((0.0 - b.min.x) / CELL).floor() as isize;
    let start_iy = ((0.0 - b.min.y) / CELL).floor() as isize;
    if start_ix < 0 || start_iy < 0 || start_ix as usize >= nx || start_iy as usize >= ny {
        return false;
    }
    let start = (start_ix as usize, start_iy as usize);
    if clearance(world, center(start.0, start.1)) < INFLATE {
        return false;
    }

    let mut visited = vec![false; nx * ny];
    let mut queue = VecDeque::new();
    visited[start.1 * nx + start.0] = true;
    queue.push_back(start);

    while let Some((ix, iy)) = queue.pop_front() {
        let p = center(ix, iy);
        if goal_hit(p) {
            return true;
        }
        let neighbors = [
            (ix.wrapping_sub(1), iy),
            (ix + 1, iy),
            (ix, iy.wrapping_sub(1)),
            (ix, iy + 1),
        ];
        for (jx, jy) in neighbors {
            if jx >= nx || jy >= ny || visited[jy * nx + jx] {
                continue;
            }
            visited[jy * nx + jx] = true;
            if clearance(world, center(jx, jy)) >= INFLATE {
                queue.push_back((jx, jy));
            }
        }
    }
    false
}
