//! Table-plane fitting over the annulus just outside the plate, and the
//! height map derived from it.

use super::{DepthImage, HeightMap, PerceptionError, PlaneParams, PlateCircle, TablePlane};

/// Least-squares plane `z = a*x + b*y + c` over valid depth pixels in the
/// annulus `[inner*r, outer*r]` around the plate.
pub fn fit_table_plane(
    depth: &DepthImage,
    plate: &PlateCircle,
    params: &PlaneParams,
) -> Result<TablePlane, PerceptionError> {
    let inner = params.annulus_inner * plate.r;
    let outer = params.annulus_outer * plate.r;

    let mut pts: Vec<(f64, f64, f64)> = Vec::new();
    let x_lo = ((plate.cx - outer).floor().max(0.0)) as usize;
    let x_hi = ((plate.cx + outer).ceil().min(depth.width as f64 - 1.0)) as usize;
    let y_lo = ((plate.cy - outer).floor().max(0.0)) as usize;
    let y_hi = ((plate.cy + outer).ceil().min(depth.height as f64 - 1.0)) as usize;
    for y in y_lo..=y_hi {
        for x in x_lo..=x_hi {
            let d = plate.distance_from_center(x as f64, y as f64);
            if d < inner || d > outer {
                continue;
            }
            if let Some(z) = depth.get(x, y) {
                pts.push((x as f64, y as f64, z as f64));
            }
        }
    }
    if pts.len() < params.min_pixels {
        return Err(PerceptionError::TooFewAnnulusPixels { found: pts.len(), needed: params.min_pixels });
    }

    // Center coordinates for conditioning, solve the 3x3 normal equations.
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy, mut sx, mut sy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut sxz, mut syz, mut sz) = (0.0, 0.0, 0.0);
    for &(x, y, z) in &pts {
        let (u, v) = (x - mx, y - my);
        sxx += u * u;
        sxy += u * v;
        syy += v * v;
        sx += u;
        sy += v;
        sxz += u * z;
        syz += v * z;
        sz += z;
    }
    let m = [[sxx, sxy, sx], [sxy, syy, sy], [sx, sy, n]];
    let rhs = [sxz, syz, sz];
    let sol = solve3(m, rhs).ok_or_else(|| {
        PerceptionError::BadInput("annulus is degenerate; cannot fit a plane".to_string())
    })?;
    let (a, b) = (sol[0], sol[1]);
    let c = sol[2] - a * mx - b * my;

    let mut sq = 0.0;
    for &(x, y, z) in &pts {
        let r = z - (a * x + b * y + c);
        sq += r * r;
    }
    let rms = (sq / n).sqrt();
    if rms > params.max_rms_mm {
        return Err(PerceptionError::PlaneFitPoor { rms, limit: params.max_rms_mm });
    }
    Ok(TablePlane { a, b, c, rms_residual: rms })
}

fn solve3(mut m: [[f64; 3]; 3], mut rhs: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())?;
        if m[pivot][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut out = [0.0; 3];
    for row in (0..3).rev() {
        let mut acc = rhs[row];
        for k in row + 1..3 {
            acc -= m[row][k] * out[k];
        }
        out[row] = acc / m[row][row];
    }
    Some(out)
}

/// Height above the table: `plane_z(x, y) - depth(x, y)` for a camera looking
/// down. Invalid depth propagates as NaN.
pub fn height_map(depth: &DepthImage, plane: &TablePlane) -> HeightMap {
    let mut data = vec![f32::NAN; depth.width * depth.height];
    for y in 0..depth.height {
        for x in 0..depth.width {
            if let Some(z) = depth.get(x, y) {
                data[y * depth.width + x] = (plane.z(x as f64, y as f64) - z as f64) as f32;
            }
        }
    }
    HeightMap { width: depth.width, height: depth.height, data }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plate() -> PlateCircle {
        PlateCircle { cx: 160.0, cy: 160.0, r: 100.0 }
    }

    fn depth_from_plane(w: usize, h: usize, a: f64, b: f64, c: f64) -> DepthImage {
        let mut depth = DepthImage::new(w, h);
        for y in 0..h {
            for x in 0..w {
                let z = a * x as f64 + b * y as f64 + c;
                depth.set(x, y, z.round() as u16);
            }
        }
        depth
    }

    #[test]
    fn exact_flat_plane_is_recovered() {
        let depth = depth_from_plane(320, 320, 0.0, 0.0, 800.0);
        let plane = fit_table_plane(&depth, &plate(), &PlaneParams::default()).unwrap();
        assert!(plane.a.abs() < 1e-9);
        assert!(plane.b.abs() < 1e-9);
        assert!((plane.c - 800.0).abs() < 1e-9);
        assert!(plane.rms_residual < 1e-9);
    }

    #[test]
    fn tilted_plane_coefficients_within_tolerance() {
        // Rounding to u16 keeps the fit within a fraction of a millimeter.
        let depth = depth_from_plane(320, 320, 0.1, -0.05, 700.0);
        let plane = fit_table_plane(&depth, &plate(), &PlaneParams::default()).unwrap();
        assert!((plane.a - 0.1).abs() < 1e-3, "a = {}", plane.a);
        assert!((plane.b + 0.05).abs() < 1e-3, "b = {}", plane.b);
    }

    #[test]
    fn invalid_annulus_is_an_error() {
        let mut depth = depth_from_plane(320, 320, 0.0, 0.0, 800.0);
        for y in 0..320 {
            for x in 0..320 {
                let d = plate().distance_from_center(x as f64, y as f64);
                if d >= 100.0 {
                    depth.data[y * 320 + x] = 0;
                }
            }
        }
        assert!(matches!(
            fit_table_plane(&depth, &plate(), &PlaneParams::default()),
            Err(PerceptionError::TooFewAnnulusPixels { .. })
        ));
    }

    #[test]
    fn height_map_is_zero_on_table_and_invalid_propagates() {
        let mut depth = depth_from_plane(320, 320, 0.0, 0.0, 800.0);
        depth.set(5, 5, 0);
        depth.set(10, 10, 780); // a 20 mm extrusion
        let plane = fit_table_plane(&depth, &plate(), &PlaneParams::default()).unwrap();
        let hm = height_map(&depth, &plane);
        assert!(hm.get(5, 5).is_none());
        assert!((hm.get(10, 10).unwrap() - 20.0).abs() < 0.5);
        assert!(hm.get(200, 200).unwrap().abs() < 0.5);
    }
}
