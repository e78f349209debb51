//! Scene construction: placement under label guarantees, and rendering.
//!
//! Requested environment labels are realized geometrically and then verified
//! against the exact classifier predicate on noise-free geometry, with
//! decisiveness margins (rim distances clear the band by 4 px, cell height
//! medians clear the occupancy threshold by 2 mm) so the perception pipeline
//! reproduces every label from rendered, quantized, possibly noisy data.

use super::{world, ItemSpec, Pad, Scene, SceneConfig, SceneError, SceneItem};
use crate::domain::{EnvClass, FoodCategory};
use crate::perception::{
    classify_environment, skewering_axis, BBox, DepthImage, EnvParams, HeightMap, PlateCircle,
    RgbImage, SegmentMask, TablePlane,
};
use crate::seeds;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const RIM_DECISIVE_PX: f64 = 4.0;
const HEIGHT_DECISIVE_MM: f64 = 2.0;
/// Clearance stamped around every placed item's ROI and pad.
const EXCLUSION_MARGIN: f64 = 6.0;
/// Minimum gap between the footprints of a wall pair.
const PAIR_GAP: (f64, f64) = (4.0, 9.0);

pub fn generate_scene(config: &SceneConfig, seed: u64) -> Result<Scene, SceneError> {
    if let Some(cats) = &config.categories {
        if cats.len() != config.n_items() {
            return Err(SceneError::BadConfig(format!(
                "{} categories for {} items",
                cats.len(),
                config.n_items()
            )));
        }
    }
    if config.width < 320 || config.height < 320 {
        return Err(SceneError::BadConfig("scene must be at least 320x320".into()));
    }
    let mut attempts_total = 0usize;
    for retry in 0..config.max_scene_retries {
        let mut rng = seeds::rng(seed, "scene", retry as u64);
        match try_generate(config, seed, &mut rng) {
            Some(scene) => return Ok(scene),
            None => attempts_total += config.max_attempts,
        }
    }
    Err(SceneError::Packing { requested: config.n_items(), attempts: attempts_total })
}

fn try_generate(config: &SceneConfig, seed: u64, rng: &mut ChaCha8Rng) -> Option<Scene> {
    let (w, h) = (config.width, config.height);
    let max_r = (w.min(h) as f64 / 2.0 - 18.0).min(195.0);
    let plate = PlateCircle {
        cx: w as f64 / 2.0 + rng.gen_range(-8.0..8.0),
        cy: h as f64 / 2.0 + rng.gen_range(-8.0..8.0),
        r: rng.gen_range(max_r - 20.0..max_r),
    };
    let plane = TablePlane { a: 0.0, b: 0.0, c: 800.0, rms_residual: 0.0 };

    // Slot order: stacks reserve pad space first, then walls, then iso.
    let mut slots: Vec<EnvClass> = Vec::new();
    for env in [EnvClass::Stack, EnvClass::Wall, EnvClass::Iso] {
        for _ in 0..config.env_counts.get(&env).copied().unwrap_or(0) {
            slots.push(env);
        }
    }
    let categories: Vec<FoodCategory> = match &config.categories {
        Some(c) => c.clone(),
        None => {
            let mut cycled: Vec<FoodCategory> =
                (0..slots.len()).map(|i| FoodCategory::ALL[i % 4]).collect();
            for i in (1..cycled.len()).rev() {
                cycled.swap(i, rng.gen_range(0..=i));
            }
            cycled
        }
    };

    let mut placed: Vec<(ItemSpec, SegmentMask)> = Vec::new();
    let mut pads: Vec<Pad> = Vec::new();
    let mut blocked = Blocked::new(w, h);

    let mut i = 0usize;
    while i < slots.len() {
        let env = slots[i];
        let tall = |c: FoodCategory| matches!(c, FoodCategory::Long | FoodCategory::Flat);
        let pair = env == EnvClass::Wall
            && i + 1 < slots.len()
            && slots[i + 1] == EnvClass::Wall
            && tall(categories[i])
            && tall(categories[i + 1])
            && rng.gen_bool(0.5);
        let ok = if pair {
            place_wall_pair(
                config, &plate, &pads, &mut placed, &mut blocked, categories[i], categories[i + 1], rng,
            )
        } else {
            place_single(config, &plate, &mut pads, &mut placed, &mut blocked, env, categories[i], rng)
        };
        if !ok {
            return None;
        }
        i += if pair { 2 } else { 1 };
    }

    // Final verification: every label must re-derive exactly as requested.
    let specs: Vec<ItemSpec> = placed.iter().map(|(s, _)| s.clone()).collect();
    let masks: Vec<SegmentMask> = placed.iter().map(|(_, m)| m.clone()).collect();
    let labels = derive_labels_inner(w, h, &plate, &pads, &specs, &masks, &config.env_params);
    for ((spec, _), label) in placed.iter().zip(&labels) {
        if *label != spec.env_label {
            return None;
        }
    }

    let items: Vec<SceneItem> = placed
        .into_iter()
        .enumerate()
        .map(|(id, (spec, mask))| {
            let axis = skewering_axis(&mask).expect("placed masks have area >= 2");
            let env = spec.env_label;
            SceneItem { id, spec, bbox: mask.bbox, axis, env, mask }
        })
        .collect();

    let (rgb, clean_depth) = render(w, h, &plate, &plane, &pads, &items);
    let depth = apply_noise(&clean_depth, config, seed, 0);
    Some(Scene {
        seed,
        config: config.clone(),
        plate,
        plane,
        pads,
        items,
        rgb,
        depth,
        clean_depth,
        revision: 0,
    })
}

// ── Placement ────────────────────────────────────────────────────────

struct Blocked {
    w: usize,
    h: usize,
    cells: Vec<bool>,
}

impl Blocked {
    fn new(w: usize, h: usize) -> Self {
        Blocked { w, h, cells: vec![false; w * h] }
    }

    fn stamp_rect(&mut self, x0: f64, y0: f64, x1: f64, y1: f64) {
        let xa = x0.floor().max(0.0) as usize;
        let xb = (x1.ceil().max(0.0) as usize).min(self.w);
        let ya = y0.floor().max(0.0) as usize;
        let yb = (y1.ceil().max(0.0) as usize).min(self.h);
        for y in ya..yb {
            for x in xa..xb {
                self.cells[y * self.w + x] = true;
            }
        }
    }

    fn rect_free(&self, x0: f64, y0: f64, x1: f64, y1: f64) -> bool {
        let xa = x0.floor().max(0.0) as usize;
        let xb = (x1.ceil().max(0.0) as usize).min(self.w);
        let ya = y0.floor().max(0.0) as usize;
        let yb = (y1.ceil().max(0.0) as usize).min(self.h);
        for y in ya..yb {
            for x in xa..xb {
                if self.cells[y * self.w + x] {
                    return false;
                }
            }
        }
        true
    }
}

fn sample_geometry(cat: FoodCategory, rng: &mut ChaCha8Rng) -> (f64, f64, f64, f64, bool, Option<[f64; 3]>) {
    match cat {
        FoodCategory::Long => {
            let a = rng.gen_range(36.0..46.0);
            let aspect = rng.gen_range(2.6..3.4);
            (a, a / aspect, rng.gen_range(2.5..4.0), 12.0, false, None)
        }
        FoodCategory::NonFlat => {
            let a = rng.gen_range(19.0..25.0);
            let aspect = rng.gen_range(1.0..1.3);
            (a, a / aspect, 2.0, 24.0, true, None)
        }
        FoodCategory::Flat => {
            let a = rng.gen_range(26.0..34.0);
            let aspect = rng.gen_range(1.4..2.2);
            (a, a / aspect, 2.0, 12.0, false, None)
        }
        FoodCategory::Leafy => {
            let a = rng.gen_range(26.0..34.0);
            let aspect = rng.gen_range(1.0..1.6);
            let phases = [
                rng.gen_range(0.0..std::f64::consts::TAU),
                rng.gen_range(0.0..std::f64::consts::TAU),
                rng.gen_range(0.0..std::f64::consts::TAU),
            ];
            (a, a / aspect, 2.0, 5.0, false, Some(phases))
        }
    }
}

fn sample_color(cat: FoodCategory, rng: &mut ChaCha8Rng) -> [u8; 3] {
    let base = world::base_color(cat);
    let mut c = [0u8; 3];
    for (out, b) in c.iter_mut().zip(base) {
        *out = (b as i32 + rng.gen_range(-8..=8)).clamp(0, 255) as u8;
    }
    c
}

fn new_spec(cat: FoodCategory, env: EnvClass, cx: f64, cy: f64, rng: &mut ChaCha8Rng) -> ItemSpec {
    let (a, b, squareness, height_mm, dome, ragged_phases) = sample_geometry(cat, rng);
    ItemSpec {
        category: cat,
        color: sample_color(cat, rng),
        a,
        b,
        squareness,
        height_mm,
        dome,
        ragged_phases,
        cx,
        cy,
        theta: rng.gen_range(0.0..std::f64::consts::PI),
        on_pad: None,
        env_label: env,
    }
}

fn rasterize(spec: &ItemSpec, w: usize, h: usize) -> Option<SegmentMask> {
    let extent = spec.a * 1.35 + 2.0;
    let x0 = (spec.cx - extent).floor().max(0.0) as usize;
    let x1 = ((spec.cx + extent).ceil() as usize).min(w.saturating_sub(1));
    let y0 = (spec.cy - extent).floor().max(0.0) as usize;
    let y1 = ((spec.cy + extent).ceil() as usize).min(h.saturating_sub(1));
    let mut pts = Vec::new();
    for y in y0..=y1 {
        for x in x0..=x1 {
            if spec.contains(x as f64, y as f64) {
                pts.push((x, y));
            }
        }
    }
    SegmentMask::from_pixels(&pts)
}

/// ROI rectangle of a mask under the classifier's inflation rule.
fn roi_rect(mask: &SegmentMask, params: &EnvParams) -> (f64, f64, f64, f64) {
    let (cx, cy) = mask.bbox.center();
    let hw = mask.bbox.width() as f64 / 2.0 * params.roi_scale;
    let hh = mask.bbox.height() as f64 / 2.0 * params.roi_scale;
    (cx - hw, cy - hh, cx + hw, cy + hh)
}

/// Exact ground height (no items): table, plate surface, rim ring, pads.
fn ground_height(x: f64, y: f64, plate: &PlateCircle, pads: &[Pad]) -> f64 {
    let d = plate.distance_from_center(x, y);
    if d > plate.r {
        return 0.0;
    }
    for pad in pads {
        let dx = x - pad.cx;
        let dy = y - pad.cy;
        if dx * dx + dy * dy <= pad.r * pad.r {
            return world::PLATE_SURFACE_MM + pad.height_mm;
        }
    }
    if d > plate.r - world::RIM_WIDTH_PX {
        world::RIM_HEIGHT_MM
    } else {
        world::PLATE_SURFACE_MM
    }
}

fn item_base(spec: &ItemSpec, pads: &[Pad]) -> f64 {
    match spec.on_pad {
        Some(i) => world::PLATE_SURFACE_MM + pads[i].height_mm,
        None => world::PLATE_SURFACE_MM,
    }
}

/// Exact surface height including items.
fn total_height(
    x: f64,
    y: f64,
    plate: &PlateCircle,
    pads: &[Pad],
    specs: &[ItemSpec],
    masks: &[SegmentMask],
) -> f64 {
    let mut best = ground_height(x, y, plate, pads);
    let (xi, yi) = (x as usize, y as usize);
    for (spec, mask) in specs.iter().zip(masks) {
        if mask.contains(xi, yi) {
            let v = item_base(spec, pads) + spec.profile_mm(x, y);
            if v > best {
                best = v;
            }
        }
    }
    best
}

/// The classifier predicate on exact geometry, with decisiveness margins.
/// Returns `(label, decisive)`.
#[allow(clippy::too_many_arguments)]
fn exact_classify(
    mask: &SegmentMask,
    w: usize,
    h: usize,
    plate: &PlateCircle,
    pads: &[Pad],
    specs: &[ItemSpec],
    masks: &[SegmentMask],
    params: &EnvParams,
) -> (EnvClass, bool) {
    let (x0, y0, x1, y1) = roi_rect(mask, params);
    let grid = params.grid.max(3) | 1;
    let center = grid / 2;
    let inner_r = plate.r - params.rim_margin_px;

    let mut occupied = 0usize;
    let mut total = 0usize;
    let mut decisive = true;
    for gy in 0..grid {
        for gx in 0..grid {
            if gx == center && gy == center {
                continue;
            }
            total += 1;
            let cx0 = x0 + (x1 - x0) * gx as f64 / grid as f64;
            let cx1 = x0 + (x1 - x0) * (gx + 1) as f64 / grid as f64;
            let cy0 = y0 + (y1 - y0) * gy as f64 / grid as f64;
            let cy1 = y0 + (y1 - y0) * (gy + 1) as f64 / grid as f64;

            let far = [(cx0, cy0), (cx1, cy0), (cx0, cy1), (cx1, cy1)]
                .into_iter()
                .map(|(px, py)| plate.distance_from_center(px, py))
                .fold(0.0f64, f64::max);
            if (far - inner_r).abs() <= RIM_DECISIVE_PX {
                decisive = false;
            }
            if far > inner_r {
                occupied += 1;
                continue;
            }

            let px0 = cx0.floor().max(0.0) as usize;
            let px1 = (cx1.ceil().max(0.0) as usize).min(w);
            let py0 = cy0.floor().max(0.0) as usize;
            let py1 = (cy1.ceil().max(0.0) as usize).min(h);
            let mut samples: Vec<f64> = Vec::new();
            for py in py0..py1 {
                for px in px0..px1 {
                    if mask.contains(px, py) {
                        continue;
                    }
                    samples.push(total_height(px as f64, py as f64, plate, pads, specs, masks));
                }
            }
            if samples.is_empty() {
                continue;
            }
            samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let median = samples[samples.len() / 2];
            if (median - params.occupy_height_mm).abs() <= HEIGHT_DECISIVE_MM {
                decisive = false;
            }
            if median > params.occupy_height_mm {
                occupied += 1;
            }
        }
    }

    let frac = occupied as f64 / total as f64;
    let label = if 1.0 - frac + 1e-9 >= params.supermajority {
        EnvClass::Iso
    } else if frac + 1e-9 >= params.supermajority {
        EnvClass::Stack
    } else {
        EnvClass::Wall
    };
    // WALL additionally requires headroom from both boundaries of the band.
    let wall_safe = label != EnvClass::Wall || (occupied >= 3 && occupied + 3 <= total);
    (label, decisive && wall_safe)
}

#[allow(clippy::too_many_arguments)]
fn place_single(
    config: &SceneConfig,
    plate: &PlateCircle,
    pads: &mut Vec<Pad>,
    placed: &mut Vec<(ItemSpec, SegmentMask)>,
    blocked: &mut Blocked,
    env: EnvClass,
    cat: FoodCategory,
    rng: &mut ChaCha8Rng,
) -> bool {
    let (w, h) = (config.width, config.height);
    let params = &config.env_params;
    let interior = plate.r - world::RIM_WIDTH_PX - 10.0;

    for _ in 0..config.max_attempts {
        let (cx, cy) = match env {
            EnvClass::Wall => {
                // near the rim along a random bearing
                let ang = rng.gen_range(0.0..std::f64::consts::TAU);
                let d = rng.gen_range(0.45..0.92) * interior;
                (plate.cx + d * ang.cos(), plate.cy + d * ang.sin())
            }
            _ => {
                let ang = rng.gen_range(0.0..std::f64::consts::TAU);
                let d = rng.gen_range(0.0..0.75) * interior;
                (plate.cx + d * ang.cos(), plate.cy + d * ang.sin())
            }
        };
        let mut spec = new_spec(cat, env, cx, cy, rng);
        let Some(mask) = rasterize(&spec, w, h) else { continue };

        // Footprint must stay inside the segmented interior with margin.
        let max_d = mask
            .iter_pixels()
            .map(|(x, y)| plate.distance_from_center(x as f64, y as f64))
            .fold(0.0f64, f64::max);
        if max_d > plate.r - world::RIM_WIDTH_PX - 6.0 {
            continue;
        }

        let (rx0, ry0, rx1, ry1) = roi_rect(&mask, params);
        let m = EXCLUSION_MARGIN;
        if !blocked.rect_free(rx0 - m, ry0 - m, rx1 + m, ry1 + m) {
            continue;
        }

        let mut trial_pads = pads.clone();
        if env == EnvClass::Stack {
            // Pad large enough that every ring cell sits on it.
            let (bcx, bcy) = mask.bbox.center();
            let roi_cr = ((rx1 - rx0).powi(2) + (ry1 - ry0).powi(2)).sqrt() / 2.0;
            let pad_r = roi_cr + 8.0;
            if plate.distance_from_center(bcx, bcy) + pad_r > plate.r - world::RIM_WIDTH_PX - 6.0 {
                continue;
            }
            spec.on_pad = Some(trial_pads.len());
            trial_pads.push(Pad {
                cx: bcx,
                cy: bcy,
                r: pad_r,
                height_mm: world::PAD_HEIGHT_MM,
                color: world::PAD_COLOR,
            });
        }

        let specs: Vec<ItemSpec> = placed.iter().map(|(s, _)| s.clone()).collect();
        let masks: Vec<SegmentMask> = placed.iter().map(|(_, m)| m.clone()).collect();
        let (label, decisive) =
            exact_classify(&mask, w, h, plate, &trial_pads, &specs, &masks, params);
        if label != env || !decisive {
            continue;
        }

        if env == EnvClass::Stack {
            let pad = trial_pads.last().unwrap();
            blocked.stamp_rect(
                pad.cx - pad.r - EXCLUSION_MARGIN,
                pad.cy - pad.r - EXCLUSION_MARGIN,
                pad.cx + pad.r + EXCLUSION_MARGIN,
                pad.cy + pad.r + EXCLUSION_MARGIN,
            );
            *pads = trial_pads;
        } else {
            blocked.stamp_rect(rx0 - m, ry0 - m, rx1 + m, ry1 + m);
        }
        placed.push((spec, mask));
        return true;
    }
    false
}

/// Place two wall items supporting each other away from the rim.
#[allow(clippy::too_many_arguments)]
fn place_wall_pair(
    config: &SceneConfig,
    plate: &PlateCircle,
    pads: &[Pad],
    placed: &mut Vec<(ItemSpec, SegmentMask)>,
    blocked: &mut Blocked,
    cat_a: FoodCategory,
    cat_b: FoodCategory,
    rng: &mut ChaCha8Rng,
) -> bool {
    let (w, h) = (config.width, config.height);
    let params = &config.env_params;
    let interior = plate.r - world::RIM_WIDTH_PX - 10.0;

    for _ in 0..config.max_attempts {
        let ang = rng.gen_range(0.0..std::f64::consts::TAU);
        let d = rng.gen_range(0.0..0.55) * interior;
        let (ax, ay) = (plate.cx + d * ang.cos(), plate.cy + d * ang.sin());
        let spec_a = new_spec(cat_a, EnvClass::Wall, ax, ay, rng);
        let Some(mask_a) = rasterize(&spec_a, w, h) else { continue };

        // Partner sits beside the first item along a random bearing with a
        // small air gap between footprints.
        let bearing = rng.gen_range(0.0..std::f64::consts::TAU);
        let gap = rng.gen_range(PAIR_GAP.0..PAIR_GAP.1);
        let mut spec_b = new_spec(cat_b, EnvClass::Wall, ax, ay, rng);
        // move outward until the footprint gap clears `gap`
        let mut ok_b: Option<SegmentMask> = None;
        for step in 0..60 {
            let dist = spec_a.b.min(spec_a.a) + spec_b.b.min(spec_b.a) + gap + step as f64;
            spec_b.cx = ax + dist * bearing.cos();
            spec_b.cy = ay + dist * bearing.sin();
            let Some(mask_b) = rasterize(&spec_b, w, h) else { break };
            let min_gap = footprint_gap(&mask_a, &mask_b);
            if min_gap >= PAIR_GAP.0 && min_gap <= PAIR_GAP.1 + 2.0 {
                ok_b = Some(mask_b);
                break;
            }
            if min_gap > PAIR_GAP.1 + 2.0 {
                break;
            }
        }
        let Some(mask_b) = ok_b else { continue };

        // Both footprints inside the interior.
        let inside = |mask: &SegmentMask| {
            mask.iter_pixels()
                .map(|(x, y)| plate.distance_from_center(x as f64, y as f64))
                .fold(0.0f64, f64::max)
                <= plate.r - world::RIM_WIDTH_PX - 6.0
        };
        if !inside(&mask_a) || !inside(&mask_b) {
            continue;
        }

        let (ax0, ay0, ax1, ay1) = roi_rect(&mask_a, params);
        let (bx0, by0, bx1, by1) = roi_rect(&mask_b, params);
        let m = EXCLUSION_MARGIN;
        let ux0 = ax0.min(bx0) - m;
        let uy0 = ay0.min(by0) - m;
        let ux1 = ax1.max(bx1) + m;
        let uy1 = ay1.max(by1) + m;
        if !blocked.rect_free(ux0, uy0, ux1, uy1) {
            continue;
        }

        let mut specs: Vec<ItemSpec> = placed.iter().map(|(s, _)| s.clone()).collect();
        let mut masks: Vec<SegmentMask> = placed.iter().map(|(_, m)| m.clone()).collect();
        specs.push(spec_b.clone());
        masks.push(mask_b.clone());
        let (label_a, dec_a) = exact_classify(&mask_a, w, h, plate, pads, &specs, &masks, params);
        specs.pop();
        masks.pop();
        specs.push(spec_a.clone());
        masks.push(mask_a.clone());
        let (label_b, dec_b) = exact_classify(&mask_b, w, h, plate, pads, &specs, &masks, params);
        if label_a != EnvClass::Wall || label_b != EnvClass::Wall || !dec_a || !dec_b {
            continue;
        }

        blocked.stamp_rect(ux0, uy0, ux1, uy1);
        placed.push((spec_a, mask_a));
        placed.push((spec_b, mask_b));
        return true;
    }
    false
}

/// Minimum pixel distance between two masks, restricted to the band where
/// their bboxes approach each other (pair candidates are already adjacent).
fn footprint_gap(a: &SegmentMask, b: &SegmentMask) -> f64 {
    let band = PAIR_GAP.1 as usize + 3;
    let near = |mask: &SegmentMask, other: &SegmentMask| -> Vec<(usize, usize)> {
        let x0 = other.bbox.x0.saturating_sub(band);
        let x1 = other.bbox.x1 + band;
        let y0 = other.bbox.y0.saturating_sub(band);
        let y1 = other.bbox.y1 + band;
        mask.iter_pixels()
            .filter(|&(x, y)| x >= x0 && x < x1 && y >= y0 && y < y1)
            .collect()
    };
    let pa = near(a, b);
    let pb = near(b, a);
    let mut best = f64::INFINITY;
    for &(ax, ay) in &pa {
        for &(bx, by) in &pb {
            let d = ((ax as f64 - bx as f64).powi(2) + (ay as f64 - by as f64).powi(2)).sqrt();
            if d < best {
                best = d;
                if best < PAIR_GAP.0 {
                    return best;
                }
            }
        }
    }
    best
}

// ── Labels and rendering ─────────────────────────────────────────────

/// Ground-truth environment labels re-derived from current geometry with the
/// actual classifier over an exact synthetic height map.
pub fn derive_env_labels(scene: &Scene) -> Vec<EnvClass> {
    let specs: Vec<ItemSpec> = scene.items.iter().map(|i| i.spec.clone()).collect();
    let masks: Vec<SegmentMask> = scene.items.iter().map(|i| i.mask.clone()).collect();
    derive_labels_inner(
        scene.config.width,
        scene.config.height,
        &scene.plate,
        &scene.pads,
        &specs,
        &masks,
        &scene.config.env_params,
    )
}

fn derive_labels_inner(
    w: usize,
    h: usize,
    plate: &PlateCircle,
    pads: &[Pad],
    specs: &[ItemSpec],
    masks: &[SegmentMask],
    params: &EnvParams,
) -> Vec<EnvClass> {
    masks
        .iter()
        .map(|mask| exact_classify(mask, w, h, plate, pads, specs, masks, params).0)
        .collect()
}

/// Render RGB and clean depth from scene geometry.
pub fn render(
    w: usize,
    h: usize,
    plate: &PlateCircle,
    plane: &TablePlane,
    pads: &[Pad],
    items: &[SceneItem],
) -> (RgbImage, DepthImage) {
    let mut rgb = RgbImage::new(w, h);
    let mut height = vec![0.0f32; w * h];

    // Background pass: table, plate, rim, pads.
    for y in 0..h {
        for x in 0..w {
            let (xf, yf) = (x as f64, y as f64);
            let d = plate.distance_from_center(xf, yf);
            let (color, hh) = if d > plate.r {
                (world::TABLE_COLOR, 0.0)
            } else {
                let mut c = (world::PLATE_COLOR, world::PLATE_SURFACE_MM);
                if d > plate.r - world::RIM_WIDTH_PX {
                    c = (world::RIM_COLOR, world::RIM_HEIGHT_MM);
                }
                for pad in pads {
                    let dx = xf - pad.cx;
                    let dy = yf - pad.cy;
                    if dx * dx + dy * dy <= pad.r * pad.r {
                        c = (pad.color, world::PLATE_SURFACE_MM + pad.height_mm);
                        break;
                    }
                }
                c
            };
            rgb.set(x, y, color);
            height[y * w + x] = hh as f32;
        }
    }

    // Item pass over stored masks.
    for item in items {
        let base = item_base(&item.spec, pads);
        for (x, y) in item.mask.iter_pixels() {
            let profile = item.spec.profile_mm(x as f64, y as f64);
            let total = base + profile;
            let mut color = item.spec.color;
            if item.spec.dome {
                // radial shading makes the dome read as non-flat
                let f = 0.72 + 0.43 * (profile / item.spec.height_mm).clamp(0.0, 1.0);
                for ch in color.iter_mut() {
                    *ch = ((*ch as f64) * f).round().clamp(0.0, 255.0) as u8;
                }
            }
            rgb.set(x, y, color);
            let cell = &mut height[y * w + x];
            if total as f32 > *cell {
                *cell = total as f32;
            }
        }
    }

    let mut depth = DepthImage::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let z = plane.z(x as f64, y as f64) - height[y * w + x] as f64;
            depth.set(x, y, z.round().clamp(1.0, 65535.0) as u16);
        }
    }
    (rgb, depth)
}

/// Gaussian depth noise plus invalid-pixel dropout, on a derived stream.
pub(super) fn apply_noise(clean: &DepthImage, config: &SceneConfig, seed: u64, revision: u64) -> DepthImage {
    if config.noise_sigma_mm <= 0.0 && config.invalid_fraction <= 0.0 {
        return clean.clone();
    }
    let mut rng = seeds::rng(seed, "depth-noise", revision);
    let mut out = clean.clone();
    for v in out.data.iter_mut() {
        if config.invalid_fraction > 0.0 && rng.gen::<f64>() < config.invalid_fraction {
            *v = 0;
            continue;
        }
        if config.noise_sigma_mm > 0.0 {
            let noise: f64 = rng.sample::<f64, _>(rand_distr::StandardNormal);
            *v = (*v as f64 + noise * config.noise_sigma_mm).round().clamp(1.0, 65535.0) as u16;
        }
    }
    out
}

impl Scene {
    /// Remove an item (a successful acquisition), re-derive the remaining
    /// labels from the new geometry, and re-render.
    pub fn remove_item(&mut self, id: usize) {
        self.items.retain(|i| i.id != id);
        self.revision += 1;
        let labels = derive_env_labels(self);
        for (item, label) in self.items.iter_mut().zip(labels) {
            item.env = label;
        }
        let (rgb, clean) = render(
            self.config.width,
            self.config.height,
            &self.plate,
            &self.plane,
            &self.pads,
            &self.items,
        );
        self.rgb = rgb;
        self.depth = apply_noise(&clean, &self.config, self.seed, self.revision);
        self.clean_depth = clean;
    }
}
