//! Classical-CV plate perception: plate detection on depth, table-plane
//! fitting, height maps, color segmentation, environment classification, and
//! skewering-axis extraction.
//!
//! Every operation is a pure function of its inputs; scenes can be processed
//! in parallel from multiple threads.

mod axis;
mod envclass;
mod plane;
mod plate;
mod segment;

pub use axis::skewering_axis;
pub use envclass::classify_environment;
pub use plane::{fit_table_plane, height_map};
pub use plate::detect_plate;
pub use segment::{rgb_to_lab, segment_items};

pub use crate::domain::EnvClass;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PerceptionError {
    #[error("only {valid_fraction:.2} of depth pixels are valid (need {needed:.2})")]
    TooManyInvalid { valid_fraction: f64, needed: f64 },
    #[error("no circle above the accumulator threshold in radius range [{r_min}, {r_max}]")]
    PlateNotFound { r_min: f64, r_max: f64 },
    #[error("annulus holds {found} valid pixels, need at least {needed}")]
    TooFewAnnulusPixels { found: usize, needed: usize },
    #[error("plane fit residual {rms:.2} mm exceeds the {limit:.2} mm bound")]
    PlaneFitPoor { rms: f64, limit: f64 },
    #[error("region of interest lies outside the image")]
    RoiOutsideImage,
    #[error("mask with {area} pixels is too small for an axis")]
    DegenerateMask { area: usize },
    #[error("{0}")]
    BadInput(String),
}

/// 8-bit RGB image, row-major, three bytes per pixel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize) -> Self {
        RgbImage { width, height, data: vec![0; width * height * 3] }
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }
}

/// 16-bit depth in millimeters; 0 marks an invalid measurement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepthImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u16>,
}

impl DepthImage {
    pub fn new(width: usize, height: usize) -> Self {
        DepthImage { width, height, data: vec![0; width * height] }
    }

    pub fn get(&self, x: usize, y: usize) -> Option<u16> {
        let v = self.data[y * self.width + x];
        (v != 0).then_some(v)
    }

    pub fn set(&mut self, x: usize, y: usize, mm: u16) {
        self.data[y * self.width + x] = mm;
    }

    pub fn valid_fraction(&self) -> f64 {
        let valid = self.data.iter().filter(|&&v| v != 0).count();
        valid as f64 / self.data.len().max(1) as f64
    }
}

/// Height above the fitted table in millimeters; NaN where depth was invalid.
#[derive(Clone, Debug)]
pub struct HeightMap {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl HeightMap {
    pub fn get(&self, x: usize, y: usize) -> Option<f32> {
        let v = self.data[y * self.width + x];
        v.is_finite().then_some(v)
    }
}

/// Detected plate: center and radius in pixels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlateCircle {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
}

impl PlateCircle {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let dx = x - self.cx;
        let dy = y - self.cy;
        dx * dx + dy * dy <= self.r * self.r
    }

    pub fn distance_from_center(&self, x: f64, y: f64) -> f64 {
        ((x - self.cx).powi(2) + (y - self.cy).powi(2)).sqrt()
    }
}

/// Table plane `z = a*x + b*y + c` with z in depth millimeters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TablePlane {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// RMS residual of the fit over the annulus pixels, in mm.
    pub rms_residual: f64,
}

impl TablePlane {
    pub fn z(&self, x: f64, y: f64) -> f64 {
        self.a * x + self.b * y + self.c
    }
}

/// Integer bounding box, inclusive of `x0,y0`, exclusive of `x1,y1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl BBox {
    pub fn width(&self) -> usize {
        self.x1 - self.x0
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x0 + self.x1) as f64 / 2.0, (self.y0 + self.y1) as f64 / 2.0)
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }
}

/// Connected pixel mask of one segmented item, stored bbox-local.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentMask {
    pub bbox: BBox,
    /// Row-major bbox-local occupancy, length `bbox.width() * bbox.height()`.
    pub pixels: Vec<bool>,
    pub area: usize,
    pub centroid: (f64, f64),
}

impl SegmentMask {
    /// Build from global pixel coordinates; the bbox is tight by construction.
    pub fn from_pixels(points: &[(usize, usize)]) -> Option<Self> {
        if points.is_empty() {
            return None;
        }
        let x0 = points.iter().map(|p| p.0).min().unwrap();
        let x1 = points.iter().map(|p| p.0).max().unwrap() + 1;
        let y0 = points.iter().map(|p| p.1).min().unwrap();
        let y1 = points.iter().map(|p| p.1).max().unwrap() + 1;
        let bbox = BBox { x0, y0, x1, y1 };
        let mut pixels = vec![false; bbox.width() * bbox.height()];
        let mut sx = 0.0;
        let mut sy = 0.0;
        for &(x, y) in points {
            pixels[(y - y0) * bbox.width() + (x - x0)] = true;
            sx += x as f64;
            sy += y as f64;
        }
        let n = points.len() as f64;
        Some(SegmentMask { bbox, pixels, area: points.len(), centroid: (sx / n, sy / n) })
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.bbox.contains(x, y) && self.pixels[(y - self.bbox.y0) * self.bbox.width() + (x - self.bbox.x0)]
    }

    /// Iterate global pixel coordinates in row-major order.
    pub fn iter_pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let bbox = self.bbox;
        self.pixels
            .iter()
            .enumerate()
            .filter_map(move |(i, &on)| on.then(|| (bbox.x0 + i % bbox.width(), bbox.y0 + i / bbox.width())))
    }
}

/// Major-axis segment of an item mask; `p0` is the smaller-x endpoint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkeweringAxis {
    pub p0: (f64, f64),
    pub p1: (f64, f64),
}

impl SkeweringAxis {
    /// Angle of the axis in degrees, folded into [0, 180).
    pub fn angle_degrees(&self) -> f64 {
        let mut deg = (self.p1.1 - self.p0.1).atan2(self.p1.0 - self.p0.0).to_degrees();
        if deg < 0.0 {
            deg += 180.0;
        }
        if deg >= 180.0 {
            deg -= 180.0;
        }
        deg
    }

    pub fn midpoint(&self) -> (f64, f64) {
        ((self.p0.0 + self.p1.0) / 2.0, (self.p0.1 + self.p1.1) / 2.0)
    }
}

/// Tunables for the whole pipeline; every default is spelled out here.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerceptionParams {
    pub hough: HoughParams,
    pub plane: PlaneParams,
    pub segment: SegmentParams,
    pub env: EnvParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HoughParams {
    pub r_min: f64,
    pub r_max: f64,
    /// Depth-gradient magnitude (mm per pixel) above which a pixel counts as
    /// an edge.
    pub edge_threshold: f64,
    /// Minimum fraction of valid depth pixels required to attempt detection.
    pub min_valid_fraction: f64,
    /// Minimum accumulator score (summed gradient magnitude per circumference
    /// pixel) for a circle to count as found.
    pub min_score: f64,
}

impl Default for HoughParams {
    fn default() -> Self {
        HoughParams {
            r_min: 140.0,
            r_max: 230.0,
            edge_threshold: 4.0,
            min_valid_fraction: 0.5,
            min_score: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlaneParams {
    /// Annulus radii as multiples of the plate radius.
    pub annulus_inner: f64,
    pub annulus_outer: f64,
    pub min_pixels: usize,
    /// Fit is rejected when the RMS residual exceeds this bound (mm).
    pub max_rms_mm: f64,
}

impl Default for PlaneParams {
    fn default() -> Self {
        PlaneParams { annulus_inner: 1.05, annulus_outer: 1.30, min_pixels: 100, max_rms_mm: 5.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentParams {
    /// Number of background color clusters fitted to the plate interior.
    pub k_background: usize,
    /// Lab distance beyond every background cluster for a pixel to count as
    /// food.
    pub color_threshold: f64,
    pub min_area: usize,
    /// Clusters smaller than this fraction of the plate interior are not
    /// treated as background.
    pub min_bg_fraction: f64,
    /// Clusters with a larger mean within-cluster Lab distance are not
    /// treated as background (they are mixtures, not surfaces).
    pub max_bg_spread: f64,
    pub kmeans_iters: usize,
    /// Pixels within this many px of the rim are not part of the interior.
    pub rim_margin_px: f64,
}

impl Default for SegmentParams {
    fn default() -> Self {
        SegmentParams {
            k_background: 3,
            color_threshold: 15.0,
            min_area: 60,
            min_bg_fraction: 0.08,
            max_bg_spread: 12.0,
            kmeans_iters: 12,
            rim_margin_px: 8.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvParams {
    /// ROI is the item bbox inflated by this factor about its center.
    pub roi_scale: f64,
    /// Grid resolution; the center cell is the item's own and is excluded.
    pub grid: usize,
    /// A sub-region with median surrounding height above this is occupied.
    pub occupy_height_mm: f64,
    /// Fraction of ring cells that decides ISO (unoccupied) or STACK
    /// (occupied); anything in between is WALL.
    pub supermajority: f64,
    /// Width of the rim band; cells reaching within this of the rim count as
    /// touching the plate boundary.
    pub rim_margin_px: f64,
}

impl Default for EnvParams {
    fn default() -> Self {
        EnvParams {
            roi_scale: 1.5,
            grid: 3,
            occupy_height_mm: 10.0,
            supermajority: 2.0 / 3.0,
            rim_margin_px: 8.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_mask_bbox_is_tight() {
        let mask = SegmentMask::from_pixels(&[(3, 4), (4, 4), (5, 4), (4, 5)]).unwrap();
        assert_eq!(mask.bbox, BBox { x0: 3, y0: 4, x1: 6, y1: 6 });
        assert_eq!(mask.area, 4);
        assert!(mask.contains(4, 5));
        assert!(!mask.contains(3, 5));
        assert_eq!(mask.iter_pixels().count(), 4);
    }

    #[test]
    fn axis_angle_wraps_mod_180() {
        let axis = SkeweringAxis { p0: (0.0, 0.0), p1: (1.0, -1.0) };
        assert!((axis.angle_degrees() - 135.0).abs() < 1e-9);
    }
}
