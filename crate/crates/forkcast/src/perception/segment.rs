//! Color segmentation of food items inside the plate.
//!
//! The plate interior is clustered in CIELAB; compact, large clusters form
//! the background palette (plate surface, and the base layer in stacked
//! scenes). Pixels far from every background color are food, grouped by
//! 4-connectivity. Two touching items of the same color may merge into one
//! mask; that is documented behavior, not an error.

use super::{PerceptionError, PlateCircle, RgbImage, SegmentMask, SegmentParams};

/// sRGB (8-bit) to CIELAB under D65.
pub fn rgb_to_lab(rgb: [u8; 3]) -> [f32; 3] {
    fn lin(u: f32) -> f32 {
        if u <= 0.04045 {
            u / 12.92
        } else {
            ((u + 0.055) / 1.055).powf(2.4)
        }
    }
    let r = lin(rgb[0] as f32 / 255.0);
    let g = lin(rgb[1] as f32 / 255.0);
    let b = lin(rgb[2] as f32 / 255.0);

    let x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    let y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    let z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;

    // D65 white point
    let (xn, yn, zn) = (0.95047f32, 1.0f32, 1.08883f32);
    fn f(t: f32) -> f32 {
        if t > 0.008856 {
            t.cbrt()
        } else {
            7.787 * t + 16.0 / 116.0
        }
    }
    let (fx, fy, fz) = (f(x / xn), f(y / yn), f(z / zn));
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

fn lab_dist(a: [f32; 3], b: [f32; 3]) -> f32 {
    let d0 = a[0] - b[0];
    let d1 = a[1] - b[1];
    let d2 = a[2] - b[2];
    (d0 * d0 + d1 * d1 + d2 * d2).sqrt()
}

/// Segment food items inside the detected plate, sorted by area descending
/// (ties by bbox origin). An empty plate yields an empty list.
pub fn segment_items(
    rgb: &RgbImage,
    plate: &PlateCircle,
    params: &SegmentParams,
) -> Result<Vec<SegmentMask>, PerceptionError> {
    let (w, h) = (rgb.width, rgb.height);
    let interior_r = plate.r - params.rim_margin_px;
    if interior_r <= 0.0 {
        return Err(PerceptionError::BadInput("plate interior vanishes after rim margin".into()));
    }

    // Interior pixels and their Lab colors.
    let x_lo = ((plate.cx - interior_r).floor().max(0.0)) as usize;
    let x_hi = ((plate.cx + interior_r).ceil().min(w as f64 - 1.0)) as usize;
    let y_lo = ((plate.cy - interior_r).floor().max(0.0)) as usize;
    let y_hi = ((plate.cy + interior_r).ceil().min(h as f64 - 1.0)) as usize;
    let mut coords: Vec<(usize, usize)> = Vec::new();
    let mut labs: Vec<[f32; 3]> = Vec::new();
    for y in y_lo..=y_hi {
        for x in x_lo..=x_hi {
            if plate.distance_from_center(x as f64, y as f64) <= interior_r {
                coords.push((x, y));
                labs.push(rgb_to_lab(rgb.get(x, y)));
            }
        }
    }
    if coords.is_empty() {
        return Ok(Vec::new());
    }

    let clusters = kmeans_lab(&labs, params.k_background, params.kmeans_iters);

    // Background palette: clusters that are both large and compact.
    let min_size = (params.min_bg_fraction * coords.len() as f64) as usize;
    let mut background: Vec<[f32; 3]> = clusters
        .iter()
        .filter(|c| c.size >= min_size && c.mean_spread <= params.max_bg_spread as f32)
        .map(|c| c.center)
        .collect();
    if background.is_empty() {
        // Degenerate palette; fall back to the largest cluster so a fully
        // covered plate still behaves sensibly.
        if let Some(biggest) = clusters.iter().max_by_key(|c| c.size) {
            background.push(biggest.center);
        }
    }

    // Food pixels, then 4-connected components in scan order.
    let mut food = vec![false; w * h];
    for (i, &(x, y)) in coords.iter().enumerate() {
        let near_bg = background
            .iter()
            .any(|&c| lab_dist(labs[i], c) <= params.color_threshold as f32);
        if !near_bg {
            food[y * w + x] = true;
        }
    }

    let mut seen = vec![false; w * h];
    let mut masks: Vec<SegmentMask> = Vec::new();
    let mut stack = Vec::new();
    for &(x, y) in &coords {
        let idx = y * w + x;
        if !food[idx] || seen[idx] {
            continue;
        }
        let mut component = Vec::new();
        seen[idx] = true;
        stack.push((x, y));
        while let Some((px, py)) = stack.pop() {
            component.push((px, py));
            let neighbors = [
                (px.wrapping_sub(1), py),
                (px + 1, py),
                (px, py.wrapping_sub(1)),
                (px, py + 1),
            ];
            for (nx, ny) in neighbors {
                if nx < w && ny < h {
                    let ni = ny * w + nx;
                    if food[ni] && !seen[ni] {
                        seen[ni] = true;
                        stack.push((nx, ny));
                    }
                }
            }
        }
        if component.len() >= params.min_area {
            masks.push(SegmentMask::from_pixels(&component).expect("component is non-empty"));
        }
    }

    masks.sort_by(|a, b| {
        b.area
            .cmp(&a.area)
            .then(a.bbox.y0.cmp(&b.bbox.y0))
            .then(a.bbox.x0.cmp(&b.bbox.x0))
    });
    Ok(masks)
}

struct LabCluster {
    center: [f32; 3],
    size: usize,
    mean_spread: f32,
}

/// Deterministic k-means: seeds are the k most frequent quantized colors
/// (ties by bin index), followed by fixed Lloyd iterations.
fn kmeans_lab(labs: &[[f32; 3]], k: usize, iters: usize) -> Vec<LabCluster> {
    let k = k.max(1).min(labs.len());

    // Histogram over 8x8x8-quantized Lab space for seeding.
    use std::collections::BTreeMap;
    let quant = |lab: [f32; 3]| -> (i32, i32, i32) {
        ((lab[0] / 8.0) as i32, (lab[1] / 8.0) as i32, (lab[2] / 8.0) as i32)
    };
    let mut bins: BTreeMap<(i32, i32, i32), (usize, [f64; 3])> = BTreeMap::new();
    for &lab in labs {
        let e = bins.entry(quant(lab)).or_insert((0, [0.0; 3]));
        e.0 += 1;
        for (s, v) in e.1.iter_mut().zip(lab) {
            *s += v as f64;
        }
    }
    let mut ranked: Vec<(&(i32, i32, i32), &(usize, [f64; 3]))> = bins.iter().collect();
    ranked.sort_by(|a, b| b.1 .0.cmp(&a.1 .0).then(a.0.cmp(b.0)));
    let mut centers: Vec<[f32; 3]> = ranked
        .iter()
        .take(k)
        .map(|(_, (n, sum))| {
            [
                (sum[0] / *n as f64) as f32,
                (sum[1] / *n as f64) as f32,
                (sum[2] / *n as f64) as f32,
            ]
        })
        .collect();
    while centers.len() < k {
        centers.push(centers[0]);
    }

    let mut assign = vec![0usize; labs.len()];
    for _ in 0..iters {
        for (i, &lab) in labs.iter().enumerate() {
            let mut best = 0usize;
            let mut best_d = f32::INFINITY;
            for (c, &center) in centers.iter().enumerate() {
                let d = lab_dist(lab, center);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            assign[i] = best;
        }
        let mut sums = vec![[0.0f64; 3]; centers.len()];
        let mut counts = vec![0usize; centers.len()];
        for (i, &lab) in labs.iter().enumerate() {
            counts[assign[i]] += 1;
            for (s, v) in sums[assign[i]].iter_mut().zip(lab) {
                *s += v as f64;
            }
        }
        for (c, center) in centers.iter_mut().enumerate() {
            if counts[c] > 0 {
                *center = [
                    (sums[c][0] / counts[c] as f64) as f32,
                    (sums[c][1] / counts[c] as f64) as f32,
                    (sums[c][2] / counts[c] as f64) as f32,
                ];
            }
        }
    }

    let mut spread_sums = vec![0.0f64; centers.len()];
    let mut counts = vec![0usize; centers.len()];
    for (i, &lab) in labs.iter().enumerate() {
        counts[assign[i]] += 1;
        spread_sums[assign[i]] += lab_dist(lab, centers[assign[i]]) as f64;
    }
    centers
        .into_iter()
        .enumerate()
        .map(|(c, center)| LabCluster {
            center,
            size: counts[c],
            mean_spread: if counts[c] > 0 { (spread_sums[c] / counts[c] as f64) as f32 } else { 0.0 },
        })
        .collect()
}
