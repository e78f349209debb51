//! Skewering-axis extraction from mask moments.
//!
//! The axis is the principal eigenvector of the second central moments;
//! endpoints sit at the 2-sigma extent of the major eigenvalue, clipped to
//! the bbox inflated by one pixel so they always stay near the item.

use super::{PerceptionError, SegmentMask, SkeweringAxis};

pub fn skewering_axis(mask: &SegmentMask) -> Result<SkeweringAxis, PerceptionError> {
    if mask.area < 2 {
        return Err(PerceptionError::DegenerateMask { area: mask.area });
    }
    let (mx, my) = mask.centroid;
    let mut mu20 = 0.0f64;
    let mut mu02 = 0.0f64;
    let mut mu11 = 0.0f64;
    for (x, y) in mask.iter_pixels() {
        let dx = x as f64 - mx;
        let dy = y as f64 - my;
        mu20 += dx * dx;
        mu02 += dy * dy;
        mu11 += dx * dy;
    }
    let n = mask.area as f64;
    mu20 /= n;
    mu02 /= n;
    mu11 /= n;

    let theta = 0.5 * (2.0 * mu11).atan2(mu20 - mu02);
    let (dx, dy) = (theta.cos(), theta.sin());
    let major = (mu20 + mu02) / 2.0 + (((mu20 - mu02) / 2.0).powi(2) + mu11 * mu11).sqrt();
    let mut half = 2.0 * major.sqrt();

    // Clip symmetric extent to the 1-px-inflated bbox so both endpoints stay
    // inside it and the centroid remains the midpoint.
    let x_lo = mask.bbox.x0 as f64 - 1.0;
    let x_hi = (mask.bbox.x1 - 1) as f64 + 1.0;
    let y_lo = mask.bbox.y0 as f64 - 1.0;
    let y_hi = (mask.bbox.y1 - 1) as f64 + 1.0;
    if dx.abs() > 1e-12 {
        let limit = ((x_hi - mx) / dx).abs().min(((x_lo - mx) / dx).abs());
        half = half.min(limit);
    }
    if dy.abs() > 1e-12 {
        let limit = ((y_hi - my) / dy).abs().min(((y_lo - my) / dy).abs());
        half = half.min(limit);
    }

    let p0 = (mx - half * dx, my - half * dy);
    let p1 = (mx + half * dx, my + half * dy);
    let (p0, p1) = if p1.0 < p0.0 || (p1.0 == p0.0 && p1.1 < p0.1) { (p1, p0) } else { (p0, p1) };
    Ok(SkeweringAxis { p0, p1 })
}
