//! Deterministic synthetic RGBD plate scenes with exact ground truth, and
//! the Bernoulli trial oracle that stands in for a physical robot.
//!
//! Scenes are rendered top-down orthographically: a dark table, a raised
//! white plate with a rim ring, optional pale-green base pads for stacked
//! items, and colored superellipse food items. Everything is a pure function
//! of (config, seed).

mod generate;
mod io;
mod oracle;

pub use generate::{derive_env_labels, generate_scene, render};
pub use io::{
    load_oracle_csv, load_scene, read_pgm16, read_ppm, save_scene, write_oracle_csv, write_pgm16,
    write_ppm, LoadedScene, SceneTruth,
};
pub use oracle::{default_oracle, generate_trial_dataset, sample_trial, OracleTable};

use crate::domain::{EnvClass, FoodCategory};
use crate::perception::{
    BBox, DepthImage, EnvParams, PlateCircle, RgbImage, SegmentMask, SkeweringAxis, TablePlane,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("could not pack {requested} items after {attempts} attempts")]
    Packing { requested: usize, attempts: usize },
    #[error("scene config invalid: {0}")]
    BadConfig(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed {what}: {detail}")]
    Malformed { what: &'static str, detail: String },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Geometry and appearance of one synthetic food item.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ItemSpec {
    pub category: FoodCategory,
    pub color: [u8; 3],
    /// Superellipse semi-axes in pixels, `a >= b`.
    pub a: f64,
    pub b: f64,
    /// Superellipse squareness exponent (2 = ellipse).
    pub squareness: f64,
    /// Extrusion height in mm; domes peak at this height.
    pub height_mm: f64,
    /// Dome profile instead of flat extrusion (non-flat items).
    pub dome: bool,
    /// Ragged boundary harmonics (leafy items): phases of 3 sine terms.
    pub ragged_phases: Option<[f64; 3]>,
    pub cx: f64,
    pub cy: f64,
    /// Rotation of the `a` axis, radians in [0, pi).
    pub theta: f64,
    /// Index into the scene's pad list when stacked.
    pub on_pad: Option<usize>,
    pub env_label: EnvClass,
}

impl ItemSpec {
    /// Superellipse radial coordinate of a pixel; <= 1 is inside, with the
    /// ragged modulation applied for leafy boundaries.
    pub fn radial(&self, x: f64, y: f64) -> f64 {
        let dx = x - self.cx;
        let dy = y - self.cy;
        let (s, c) = (self.theta.sin(), self.theta.cos());
        let u = (c * dx + s * dy) / self.a;
        let v = (-s * dx + c * dy) / self.b;
        let n = self.squareness;
        let base = (u.abs().powf(n) + v.abs().powf(n)).powf(1.0 / n);
        match self.ragged_phases {
            Some([p0, p1, p2]) => {
                let phi = dy.atan2(dx);
                let m = 1.0
                    + 0.18
                        * (0.5 * (3.0 * phi + p0).sin()
                            + 0.3 * (5.0 * phi + p1).sin()
                            + 0.2 * (9.0 * phi + p2).sin());
                base / m.max(0.55)
            }
            None => base,
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.radial(x, y) <= 1.0
    }

    /// Height of the item surface above its base at a pixel, 0 outside.
    pub fn profile_mm(&self, x: f64, y: f64) -> f64 {
        let s = self.radial(x, y);
        if s > 1.0 {
            0.0
        } else if self.dome {
            self.height_mm * (1.0 - s * s).max(0.0).sqrt()
        } else {
            self.height_mm
        }
    }
}

/// Raised base layer (stacked scenes): a disk on the plate surface.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pad {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
    pub height_mm: f64,
    pub color: [u8; 3],
}

/// One placed item with its rendered ground truth.
#[derive(Clone, Debug)]
pub struct SceneItem {
    pub id: usize,
    pub spec: ItemSpec,
    pub mask: SegmentMask,
    pub bbox: BBox,
    pub axis: SkeweringAxis,
    pub env: EnvClass,
}

/// A fully rendered synthetic scene plus exact ground truth.
#[derive(Clone, Debug)]
pub struct Scene {
    pub seed: u64,
    pub config: SceneConfig,
    pub plate: PlateCircle,
    pub plane: TablePlane,
    pub pads: Vec<Pad>,
    pub items: Vec<SceneItem>,
    pub rgb: RgbImage,
    /// Rendered depth including configured noise.
    pub depth: DepthImage,
    /// Noise-free rendered depth (the ground truth).
    pub clean_depth: DepthImage,
    /// Bumped on every re-render so noise streams never repeat.
    pub revision: u64,
}

/// Static appearance constants of the synthetic world.
pub mod world {
    pub const TABLE_COLOR: [u8; 3] = [60, 60, 60];
    pub const PLATE_COLOR: [u8; 3] = [235, 235, 235];
    pub const RIM_COLOR: [u8; 3] = [222, 222, 222];
    pub const PAD_COLOR: [u8; 3] = [150, 220, 150];
    pub const PLATE_SURFACE_MM: f64 = 3.0;
    pub const RIM_HEIGHT_MM: f64 = 14.0;
    pub const RIM_WIDTH_PX: f64 = 5.0;
    pub const PAD_HEIGHT_MM: f64 = 15.0;

    /// Category base colors sit on a straight, equally spaced line in RGB
    /// (red, rust, olive, green) so appearance varies smoothly across the
    /// category ordering non-flat, long, flat, leafy.
    pub fn base_color(category: crate::domain::FoodCategory) -> [u8; 3] {
        use crate::domain::FoodCategory::*;
        match category {
            NonFlat => [210, 45, 42],
            Long => [172, 92, 46],
            Flat => [134, 139, 50],
            Leafy => [96, 186, 54],
        }
    }
}

/// Everything [`generate_scene`] needs besides the seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub width: usize,
    pub height: usize,
    /// Exact requested environment labels; their sum is the item count.
    pub env_counts: BTreeMap<EnvClass, usize>,
    /// Explicit per-item categories; `None` cycles through all four.
    pub categories: Option<Vec<FoodCategory>>,
    /// Gaussian depth noise sigma in mm (0 = clean).
    pub noise_sigma_mm: f64,
    /// Fraction of depth pixels dropped to invalid (0).
    pub invalid_fraction: f64,
    /// Classifier geometry the generator realizes labels against.
    pub env_params: EnvParams,
    /// Placement attempts per item before the scene is retried.
    pub max_attempts: usize,
    /// Whole-scene retries before giving up with a packing error.
    pub max_scene_retries: usize,
}

impl Default for SceneConfig {
    fn default() -> Self {
        let mut env_counts = BTreeMap::new();
        env_counts.insert(EnvClass::Iso, 3);
        env_counts.insert(EnvClass::Wall, 2);
        env_counts.insert(EnvClass::Stack, 1);
        SceneConfig {
            width: 480,
            height: 480,
            env_counts,
            categories: None,
            noise_sigma_mm: 0.0,
            invalid_fraction: 0.0,
            env_params: EnvParams::default(),
            max_attempts: 400,
            max_scene_retries: 12,
        }
    }
}

impl SceneConfig {
    pub fn n_items(&self) -> usize {
        self.env_counts.values().sum()
    }
}
