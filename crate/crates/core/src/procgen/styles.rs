//! Style pools: training worlds draw varied palettes from ids 0..=15; the
//! held-out corridor and almost-collision scenes use fixed palettes from the
//! disjoint id range 100..=107 with shades and texture periods outside the
//! training draw ranges. That separation is what creates the visual domain
//! shift between training and validation.

use crate::render::{StyleDef, StylePalette, TextureKind};
use crate::rng::SplitMix64;

pub const TRAINING_ID_BASE: u32 = 0;
pub const TRAINING_ID_COUNT: u32 = 24;
pub const HELD_OUT_ID_BASE: u32 = 100;
pub const HELD_OUT_ID_COUNT: u32 = 8;

pub fn is_training_id(id: u32) -> bool {
    (TRAINING_ID_BASE..TRAINING_ID_BASE + TRAINING_ID_COUNT).contains(&id)
}

pub fn is_held_out_id(id: u32) -> bool {
    (HELD_OUT_ID_BASE..HELD_OUT_ID_BASE + HELD_OUT_ID_COUNT).contains(&id)
}

/// Per-world allocator for training styles: each call mints the next id in
/// the training range with seeded shade / texture / period draws.
pub struct TrainingStyles {
    rng: SplitMix64,
    defs: Vec<StyleDef>,
}

impl TrainingStyles {
    pub fn new(style_seed: u64) -> Self {
        TrainingStyles {
            rng: SplitMix64::new(style_seed),
            defs: Vec::new(),
        }
    }

    /// Draw the next wall style. Training shades live in [70, 185] and
    /// periods in [0.9, 2.7]; the held-out palettes sit outside both ranges.
    pub fn next(&mut self) -> u32 {
        let id = TRAINING_ID_BASE + self.defs.len() as u32;
        assert!(
            id < TRAINING_ID_BASE + TRAINING_ID_COUNT,
            "training style pool exhausted"
        );
        let base_shade = 70 + self.rng.next_below(116) as u8;
        let texture = match self.rng.next_below(4) {
            0 => TextureKind::Flat,
            1 => TextureKind::VerticalStripe,
            2 => TextureKind::Checker,
            _ => TextureKind::Gradient,
        };
        let period = self.rng.next_range(0.9, 2.7);
        self.defs.push(StyleDef {
            id,
            base_shade,
            texture,
            period,
        });
        id
    }

    /// Finish: floor and ceiling shades drawn from the training ranges.
    pub fn into_palette(mut self) -> StylePalette {
        let floor_shade = 35 + self.rng.next_below(31) as u8;
        let ceiling_shade = 140 + self.rng.next_below(46) as u8;
        StylePalette {
            floor_shade,
            ceiling_shade,
            styles: self.defs,
        }
    }
}

/// The fixed held-out palette used by the corridor.
pub fn corridor_palette() -> StylePalette {
    StylePalette {
        floor_shade: 18,
        ceiling_shade: 244,
        styles: vec![
            // Main corridor walls: bright flat paint.
            StyleDef {
                id: 100,
                base_shade: 212,
                texture: TextureKind::Flat,
                period: 1.0,
            },
            // Door recesses: dark, short-period stripes.
            StyleDef {
                id: 101,
                base_shade: 38,
                texture: TextureKind::VerticalStripe,
                period: 0.55,
            },
            // End caps.
            StyleDef {
                id: 102,
                base_shade: 226,
                texture: TextureKind::Gradient,
                period: 0.7,
            },
            // Skirting walls after the turns.
            StyleDef {
                id: 103,
                base_shade: 198,
                texture: TextureKind::Checker,
                period: 0.6,
            },
        ],
    }
}

/// The fixed held-out palette used by almost-collision scenes.
pub fn acd_palette() -> StylePalette {
    StylePalette {
        floor_shade: 22,
        ceiling_shade: 240,
        styles: vec![
            StyleDef {
                id: 104,
                base_shade: 205,
                texture: TextureKind::Flat,
                period: 1.0,
            },
            StyleDef {
                id: 105,
                base_shade: 45,
                texture: TextureKind::VerticalStripe,
                period: 0.6,
            },
            StyleDef {
                id: 106,
                base_shade: 218,
                texture: TextureKind::Checker,
                period: 0.65,
            },
            StyleDef {
                id: 107,
                base_shade: 30,
                texture: TextureKind::Gradient,
                period: 0.75,
            },
        ],
    }
}
