//! Pseudo-3D raycast rendering: the grayscale policy observation, per-ray
//! ground-truth depth, and the downsampled depth training target.
//!
//! One ray is cast per image column; wall slices are projected with a planar
//! (non-fisheye) correction so straight walls render as straight perspective
//! lines. Everything is a pure function of `(World, Pose, CameraModel)`.

mod depth;
mod frame;
mod pgm;
mod raycast;

pub use depth::{render_depth, DepthFrame, DEPTH_COLS, DEPTH_ROWS};
pub use frame::{render_frame, render_frame_from_scan, Frame};
pub use pgm::{read_pgm_seq, write_pgm};
pub use raycast::{raycast, DepthScan};

use crate::{Error, Result};

/// Pinhole-style camera: horizontal field of view and image grid.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct CameraModel {
    /// Horizontal field of view in radians.
    pub horizontal_fov: f64,
    pub image_width: usize,
    pub image_height: usize,
    /// Depth clamp in meters; rays that hit nothing closer report this.
    pub max_range: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        CameraModel {
            horizontal_fov: 1.57,
            image_width: 148,
            image_height: 110,
            max_range: 25.0,
        }
    }
}

impl CameraModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizontal_fov > 0.0 && self.horizontal_fov < std::f64::consts::PI) {
            return Err(Error::invalid("camera fov must be in (0, pi)"));
        }
        if self.image_width == 0 || self.image_height == 0 {
            return Err(Error::invalid("camera image dimensions must be positive"));
        }
        if !(self.max_range > 0.0) {
            return Err(Error::invalid("camera max range must be positive"));
        }
        Ok(())
    }

    /// Same camera resampled onto a different pixel grid (used for the
    /// low-resolution depth target).
    pub fn with_grid(&self, width: usize, height: usize) -> CameraModel {
        CameraModel {
            image_width: width,
            image_height: height,
            ..*self
        }
    }

    /// Ray angle of column `c` relative to the heading:
    /// `fov * (0.5 - (c + 0.5) / width)`, computed as an exact integer ratio
    /// so that mirrored columns carry exactly opposite angles.
    pub fn rel_angle(&self, c: usize) -> f64 {
        let w = self.image_width as i64;
        let num = (w - 1 - 2 * c as i64) as f64;
        self.horizontal_fov * (num / (2 * w) as f64)
    }

    /// Per-column `(rel_angle, cos, sin)` table. The cosine/sine pairs are
    /// mirrored explicitly so that column `c` and column `width-1-c` carry
    /// bitwise-symmetric directions.
    pub fn column_table(&self) -> Vec<(f64, f64, f64)> {
        let w = self.image_width;
        let mut table = vec![(0.0, 0.0, 0.0); w];
        for c in 0..w.div_ceil(2) {
            let m = w - 1 - c;
            let a = self.rel_angle(c);
            let (s, cos) = a.sin_cos();
            table[c] = (a, cos, s);
            if m != c {
                table[m] = (-a, cos, -s);
            }
        }
        table
    }
}

/// Procedural wall texture kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextureKind {
    Flat,
    VerticalStripe,
    Checker,
    Gradient,
}

/// Appearance of one style id.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StyleDef {
    pub id: u32,
    /// Base gray shade, 0-255.
    pub base_shade: u8,
    pub texture: TextureKind,
    /// Texture period in meters along the wall surface.
    pub period: f64,
}

/// Visual style of a world: per-id wall styles plus floor and ceiling shades.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StylePalette {
    pub floor_shade: u8,
    pub ceiling_shade: u8,
    /// Sorted by id.
    pub styles: Vec<StyleDef>,
}

impl StylePalette {
    pub fn resolve(&self, id: u32) -> Option<&StyleDef> {
        self.styles.iter().find(|s| s.id == id)
    }

    /// Sample the texture shade (before distance attenuation) at boundary
    /// coordinate `u` and wall-height coordinate `v`, both in meters.
    pub fn sample(&self, style: &StyleDef, u: f64, v: f64) -> f64 {
        let base = style.base_shade as f64;
        match style.texture {
            TextureKind::Flat => base,
            TextureKind::VerticalStripe => {
                if (u / style.period).floor().rem_euclid(2.0) == 0.0 {
                    base
                } else {
                    base * 0.55
                }
            }
            TextureKind::Checker => {
                let cell = (u / style.period).floor() + (v / style.period).floor();
                if cell.rem_euclid(2.0) == 0.0 {
                    base
                } else {
                    base * 0.55
                }
            }
            TextureKind::Gradient => {
                let f = (u / style.period).rem_euclid(1.0);
                base * (0.6 + 0.4 * f)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rel_angles_are_exactly_antisymmetric() {
        let cam = CameraModel::default();
        let table = cam.column_table();
        let w = cam.image_width;
        for c in 0..w {
            let (a, cos, sin) = table[c];
            let (am, cosm, sinm) = table[w - 1 - c];
            assert_eq!(a.to_bits(), (-am).to_bits());
            assert_eq!(cos.to_bits(), cosm.to_bits());
            assert_eq!(sin.to_bits(), (-sinm).to_bits());
        }
        // Leftmost column looks left (positive angle).
        assert!(table[0].0 > 0.0);
    }

    #[test]
    fn rel_angle_matches_definition() {
        let cam = CameraModel::default();
        for c in 0..cam.image_width {
            let expect = cam.horizontal_fov
                * (0.5 - (c as f64 + 0.5) / cam.image_width as f64);
            assert!((cam.rel_angle(c) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn palette_sampling_is_periodic() {
        let style = StyleDef {
            id: 0,
            base_shade: 200,
            texture: TextureKind::VerticalStripe,
            period: 1.0,
        };
        let pal = StylePalette {
            floor_shade: 40,
            ceiling_shade: 220,
            styles: vec![style],
        };
        assert_eq!(pal.sample(&style, 0.5, 0.0), 200.0);
        assert!((pal.sample(&style, 1.5, 0.0) - 110.0).abs() < 1e-9);
        assert_eq!(pal.sample(&style, 2.5, 0.0), 200.0);
    }
}
