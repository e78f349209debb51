//! Environment classification by sub-region occupancy voting.
//!
//! The item's bbox is inflated into an ROI and divided into a grid; the
//! center cell belongs to the item and is excluded, and the item's own mask
//! pixels are excluded from the height medians so the vote measures only the
//! surroundings. A ring cell is occupied when it reaches into the rim band
//! (or off the plate) or when the median surrounding height clears the
//! occupancy threshold.

use super::{EnvClass, EnvParams, HeightMap, PerceptionError, PlateCircle, SegmentMask};

pub fn classify_environment(
    mask: &SegmentMask,
    heights: &HeightMap,
    plate: &PlateCircle,
    params: &EnvParams,
) -> Result<EnvClass, PerceptionError> {
    let (w, h) = (heights.width as f64, heights.height as f64);
    let (cx, cy) = mask.bbox.center();
    let half_w = mask.bbox.width() as f64 / 2.0 * params.roi_scale;
    let half_h = mask.bbox.height() as f64 / 2.0 * params.roi_scale;
    let x0 = cx - half_w;
    let x1 = cx + half_w;
    let y0 = cy - half_h;
    let y1 = cy + half_h;
    if x1 <= 0.0 || y1 <= 0.0 || x0 >= w || y0 >= h {
        return Err(PerceptionError::RoiOutsideImage);
    }

    let grid = params.grid.max(3) | 1; // odd, so a center cell exists
    let center = grid / 2;
    let inner_r = plate.r - params.rim_margin_px;

    let mut occupied = 0usize;
    let mut total = 0usize;
    for gy in 0..grid {
        for gx in 0..grid {
            if gx == center && gy == center {
                continue;
            }
            let cell_x0 = x0 + (x1 - x0) * gx as f64 / grid as f64;
            let cell_x1 = x0 + (x1 - x0) * (gx + 1) as f64 / grid as f64;
            let cell_y0 = y0 + (y1 - y0) * gy as f64 / grid as f64;
            let cell_y1 = y0 + (y1 - y0) * (gy + 1) as f64 / grid as f64;
            total += 1;

            // Touching the rim band or leaving the plate marks the cell
            // occupied regardless of height.
            let far_corner = [
                (cell_x0, cell_y0),
                (cell_x1, cell_y0),
                (cell_x0, cell_y1),
                (cell_x1, cell_y1),
            ]
            .into_iter()
            .map(|(px, py)| plate.distance_from_center(px, py))
            .fold(0.0f64, f64::max);
            if far_corner > inner_r {
                occupied += 1;
                continue;
            }

            // Median height over valid, non-item pixels in the cell.
            let px0 = cell_x0.floor().max(0.0) as usize;
            let px1 = (cell_x1.ceil() as usize).min(heights.width);
            let py0 = cell_y0.floor().max(0.0) as usize;
            let py1 = (cell_y1.ceil() as usize).min(heights.height);
            let mut samples: Vec<f32> = Vec::new();
            for py in py0..py1 {
                for px in px0..px1 {
                    if mask.contains(px, py) {
                        continue;
                    }
                    if let Some(v) = heights.get(px, py) {
                        samples.push(v);
                    }
                }
            }
            if !samples.is_empty() {
                samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let median = samples[samples.len() / 2];
                if median as f64 > params.occupy_height_mm {
                    occupied += 1;
                }
            }
        }
    }

    let occupied_frac = occupied as f64 / total as f64;
    let unoccupied_frac = 1.0 - occupied_frac;
    let eps = 1e-9;
    if unoccupied_frac + eps >= params.supermajority {
        Ok(EnvClass::Iso)
    } else if occupied_frac + eps >= params.supermajority {
        Ok(EnvClass::Stack)
    } else {
        Ok(EnvClass::Wall)
    }
}
