//! The downsampled depth training target.

use super::frame::K_PROJ;
use super::{raycast, CameraModel};
use crate::sim::{Pose, World};

pub const DEPTH_ROWS: usize = 55;
pub const DEPTH_COLS: usize = 74;

/// Depth target: 32-bit floats, `DEPTH_ROWS x DEPTH_COLS`, row-major,
/// normalized to `[0, 1]` by the camera max range.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthFrame {
    pub data: Vec<f32>,
}

impl DepthFrame {
    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.data[row * DEPTH_COLS + col]
    }
}

/// Raycast at `DEPTH_COLS` columns over the same field of view, replicate
/// each column's normalized depth down the wall-slice extent, and fill the
/// remaining rows with 1.0 (max range).
pub fn render_depth(world: &World, pose: &Pose, cam: &CameraModel) -> DepthFrame {
    let depth_cam = cam.with_grid(DEPTH_COLS, DEPTH_ROWS);
    let scan = raycast(world, pose, &depth_cam);
    let mut data = vec![1.0f32; DEPTH_ROWS * DEPTH_COLS];

    for c in 0..DEPTH_COLS {
        let d = scan.distances[c];
        let nd = (d / cam.max_range).clamp(0.0, 1.0) as f32;
        let rows = DEPTH_ROWS as f64;
        let slice_h = (rows * K_PROJ / d).clamp(0.0, rows);
        let top = (rows - slice_h) / 2.0;
        let bottom = top + slice_h;
        for r in 0..DEPTH_ROWS {
            let y = r as f64 + 0.5;
            if y >= top && y < bottom {
                data[r * DEPTH_COLS + c] = nd;
            }
        }
    }

    DepthFrame { data }
}
