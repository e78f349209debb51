//! Plate detection: Hough circle transform on the depth-gradient edge map.
//!
//! Rasterized rims give noisy gradient directions, and at plate radii a few
//! degrees of angular error moves a voted center by many pixels. Detection
//! therefore runs in two stages: edge pixels first vote coarsely for the
//! center along their gradient rays, then the center is refined on a 1-px
//! grid by sharpening the edge-distance histogram, which does not depend on
//! gradient direction at all. Votes are weighted by gradient magnitude so
//! the circle with the deeper rim contrast wins when sizes tie; scores are
//! normalized by circumference so large circles do not win by pixel count
//! alone.

use super::{DepthImage, HoughParams, PerceptionError, PlateCircle};

const COARSE_BIN: usize = 4;
const REFINE_RADIUS: i64 = 8;

struct Edge {
    x: f64,
    y: f64,
    nx: f64,
    ny: f64,
    mag: f64,
}

pub fn detect_plate(depth: &DepthImage, params: &HoughParams) -> Result<PlateCircle, PerceptionError> {
    let valid_fraction = depth.valid_fraction();
    if valid_fraction < params.min_valid_fraction {
        return Err(PerceptionError::TooManyInvalid {
            valid_fraction,
            needed: params.min_valid_fraction,
        });
    }
    let (w, h) = (depth.width, depth.height);
    if w < 8 || h < 8 {
        return Err(PerceptionError::BadInput(format!("depth image {w}x{h} too small")));
    }

    let edges = edge_pixels(depth, params.edge_threshold);
    if edges.is_empty() {
        return Err(PerceptionError::PlateNotFound { r_min: params.r_min, r_max: params.r_max });
    }

    let not_found = || PerceptionError::PlateNotFound { r_min: params.r_min, r_max: params.r_max };
    let candidates = coarse_centers(&edges, w, h, params);
    let mut best: Option<(f64, f64, f64, f64)> = None; // score, cx, cy, r
    for (cand_x, cand_y) in candidates {
        if let Some((score, cx, cy, r)) = refine(&edges, cand_x, cand_y, w, h, params) {
            if best.map_or(true, |(s, ..)| score > s) {
                best = Some((score, cx, cy, r));
            }
        }
    }
    match best {
        Some((score, cx, cy, r)) if score >= params.min_score => Ok(PlateCircle { cx, cy, r }),
        _ => Err(not_found()),
    }
}

/// Central-difference gradient over valid neighbors, thresholded.
fn edge_pixels(depth: &DepthImage, threshold: f64) -> Vec<Edge> {
    let (w, h) = (depth.width, depth.height);
    let mut edges = Vec::new();
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let (Some(l), Some(r), Some(u), Some(d)) =
                (depth.get(x - 1, y), depth.get(x + 1, y), depth.get(x, y - 1), depth.get(x, y + 1))
            else {
                continue;
            };
            let gx = (r as f64 - l as f64) / 2.0;
            let gy = (d as f64 - u as f64) / 2.0;
            let mag = (gx * gx + gy * gy).sqrt();
            if mag >= threshold {
                edges.push(Edge { x: x as f64, y: y as f64, nx: gx / mag, ny: gy / mag, mag });
            }
        }
    }
    edges
}

/// Magnitude-weighted coarse center votes along each gradient ray. Returns up
/// to three well-separated candidate centers, strongest first.
fn coarse_centers(edges: &[Edge], w: usize, h: usize, params: &HoughParams) -> Vec<(f64, f64)> {
    let cw = w.div_ceil(COARSE_BIN);
    let ch = h.div_ceil(COARSE_BIN);
    let mut acc = vec![0.0f32; cw * ch];
    let t_lo = params.r_min.max(1.0) as usize;
    let t_hi = params.r_max as usize;
    for e in edges {
        for sign in [-1.0f64, 1.0] {
            let mut t = t_lo;
            while t <= t_hi {
                let cx = e.x + sign * e.nx * t as f64;
                let cy = e.y + sign * e.ny * t as f64;
                if cx >= 0.0 && cy >= 0.0 && (cx as usize) < w && (cy as usize) < h {
                    acc[(cy as usize / COARSE_BIN) * cw + cx as usize / COARSE_BIN] += e.mag as f32;
                }
                t += COARSE_BIN;
            }
        }
    }

    // 3x3-smoothed scores, then greedy peak picking with separation.
    let smoothed = |x: usize, y: usize| -> f32 {
        let mut s = 0.0f32;
        for dy in y.saturating_sub(1)..=(y + 1).min(ch - 1) {
            for dx in x.saturating_sub(1)..=(x + 1).min(cw - 1) {
                s += acc[dy * cw + dx];
            }
        }
        s
    };
    let mut scored: Vec<(f32, usize, usize)> = Vec::with_capacity(cw * ch);
    for y in 0..ch {
        for x in 0..cw {
            let s = smoothed(x, y);
            if s > 0.0 {
                scored.push((s, x, y));
            }
        }
    }
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let min_sep = (params.r_min / COARSE_BIN as f64 / 2.0).max(2.0);
    let mut picks: Vec<(f64, f64)> = Vec::new();
    for &(_, x, y) in &scored {
        if picks.len() >= 3 {
            break;
        }
        let center = (
            (x * COARSE_BIN + COARSE_BIN / 2) as f64,
            (y * COARSE_BIN + COARSE_BIN / 2) as f64,
        );
        let separated = picks.iter().all(|p| {
            let dx = (p.0 - center.0) / COARSE_BIN as f64;
            let dy = (p.1 - center.1) / COARSE_BIN as f64;
            (dx * dx + dy * dy).sqrt() >= min_sep
        });
        if separated {
            picks.push(center);
        }
    }
    picks
}

/// Search a 1-px grid around the candidate center for the sharpest
/// edge-distance histogram; the peak bin gives the radius.
fn refine(
    edges: &[Edge],
    cand_x: f64,
    cand_y: f64,
    w: usize,
    h: usize,
    params: &HoughParams,
) -> Option<(f64, f64, f64, f64)> {
    let r_lo = params.r_min.max(4.0) as usize;
    let r_hi = params.r_max as usize;
    let mut hist = vec![0.0f64; r_hi + 2];
    let mut best: Option<(f64, f64, f64, f64)> = None;

    for dy in -REFINE_RADIUS..=REFINE_RADIUS {
        for dx in -REFINE_RADIUS..=REFINE_RADIUS {
            let cx = cand_x + dx as f64;
            let cy = cand_y + dy as f64;
            hist.iter_mut().for_each(|v| *v = 0.0);
            for e in edges {
                let d = ((e.x - cx).powi(2) + (e.y - cy).powi(2)).sqrt().round() as usize;
                if d >= r_lo && d <= r_hi {
                    hist[d] += e.mag;
                }
            }
            for r in r_lo..=r_hi {
                let mass = hist[r - 1] + hist[r] + hist[r + 1];
                let rf = r as f64;
                // keep the circle inside the image (small clamping margin)
                let inside = cx - rf >= -2.0
                    && cy - rf >= -2.0
                    && cx + rf <= w as f64 + 2.0
                    && cy + rf <= h as f64 + 2.0;
                if !inside {
                    continue;
                }
                let score = mass / (2.0 * std::f64::consts::PI * rf);
                if best.map_or(true, |(s, ..)| score > s) {
                    best = Some((score, cx, cy, rf));
                }
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Flat table at `base` mm with a raised plate disk and rim ring.
    pub fn synthetic_plate(
        w: usize,
        h: usize,
        cx: f64,
        cy: f64,
        r: f64,
        rim_mm: u16,
        base: u16,
    ) -> DepthImage {
        let mut depth = DepthImage::new(w, h);
        for y in 0..h {
            for x in 0..w {
                let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
                let height = if d <= r - 5.0 {
                    3
                } else if d <= r {
                    rim_mm
                } else {
                    0
                };
                depth.set(x, y, base - height);
            }
        }
        depth
    }

    #[test]
    fn recovers_known_circle_within_3px() {
        let depth = synthetic_plate(480, 480, 243.0, 238.0, 185.0, 14, 800);
        let plate = detect_plate(&depth, &HoughParams::default()).unwrap();
        assert!((plate.cx - 243.0).abs() <= 3.0, "cx {}", plate.cx);
        assert!((plate.cy - 238.0).abs() <= 3.0, "cy {}", plate.cy);
        assert!((plate.r - 185.0).abs() <= 3.0, "r {}", plate.r);
    }

    #[test]
    fn uniform_depth_has_no_plate() {
        let mut depth = DepthImage::new(240, 240);
        depth.data.fill(800);
        let params = HoughParams { r_min: 40.0, r_max: 100.0, ..HoughParams::default() };
        assert!(matches!(
            detect_plate(&depth, &params),
            Err(PerceptionError::PlateNotFound { .. })
        ));
    }

    #[test]
    fn mostly_invalid_depth_is_rejected() {
        let mut depth = DepthImage::new(100, 100);
        for i in 0..1000 {
            depth.data[i] = 700;
        }
        assert!(matches!(
            detect_plate(&depth, &HoughParams::default()),
            Err(PerceptionError::TooManyInvalid { .. })
        ));
    }

    #[test]
    fn stronger_rim_wins_between_two_circles() {
        // Two same-size plates side by side; the right one has double rim
        // contrast and must win.
        let mut depth = DepthImage::new(560, 280);
        for y in 0..280 {
            for x in 0..560 {
                let d1 = ((x as f64 - 140.0).powi(2) + (y as f64 - 140.0).powi(2)).sqrt();
                let d2 = ((x as f64 - 420.0).powi(2) + (y as f64 - 140.0).powi(2)).sqrt();
                let mut height = 0;
                if d1 <= 90.0 {
                    height = if d1 > 85.0 { 8 } else { 3 };
                }
                if d2 <= 90.0 {
                    height = if d2 > 85.0 { 16 } else { 3 };
                }
                depth.set(x, y, 800 - height);
            }
        }
        let params = HoughParams { r_min: 60.0, r_max: 120.0, ..HoughParams::default() };
        let plate = detect_plate(&depth, &params).unwrap();
        assert!((plate.cx - 420.0).abs() <= 3.0, "stronger rim at x=420, got {}", plate.cx);
    }

    #[test]
    fn survives_depth_noise() {
        use rand::{Rng, SeedableRng};
        let mut depth = synthetic_plate(480, 480, 240.0, 240.0, 180.0, 14, 800);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for v in depth.data.iter_mut() {
            let noise: f64 = rng.sample::<f64, _>(rand_distr::StandardNormal) * 2.0;
            *v = (*v as f64 + noise).round().clamp(1.0, 65535.0) as u16;
        }
        let plate = detect_plate(&depth, &HoughParams::default()).unwrap();
        assert!((plate.cx - 240.0).abs() <= 3.0);
        assert!((plate.cy - 240.0).abs() <= 3.0);
        assert!((plate.r - 180.0).abs() <= 3.0);
    }
}
