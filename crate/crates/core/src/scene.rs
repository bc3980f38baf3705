//! Deterministic synthetic crowd scenes.
//!
//! A scene is a textured background with head-like shaded ellipses, the head
//! centre points, and a Gaussian density map whose mass equals the head count.
//! Every scene is a pure function of `(master_seed, index)`, so a dataset can
//! be regenerated bit-for-bit from its [`DatasetSpec`].

use crate::jpeg::PlanarImage;
use alloc::vec;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SceneError {
    #[error("density sigma must be positive, got {0}")]
    InvalidSigma(f64),
    #[error("invalid dataset spec: {0}")]
    InvalidSpec(&'static str),
    #[error("scene index {index} out of range for {count} scenes")]
    IndexOutOfRange { index: usize, count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadAnnotation {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Split> {
        match s {
            "train" => Some(Split::Train),
            "val" => Some(Split::Val),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

/// Per-pixel crowd density; `values` is row-major `width × height`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
    pub sigma: f64,
}

impl DensityMap {
    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Sums `factor × factor` boxes, so the total mass is unchanged.
    ///
    /// Panics if the dimensions are not multiples of `factor`.
    pub fn box_sum(&self, factor: usize) -> Vec<f64> {
        assert!(
            factor > 0 && self.width.is_multiple_of(factor) && self.height.is_multiple_of(factor),
            "density {}x{} not divisible by {factor}",
            self.width,
            self.height
        );
        let (ow, oh) = (self.width / factor, self.height / factor);
        let mut out = vec![0.0; ow * oh];
        for y in 0..self.height {
            let row = &self.values[y * self.width..(y + 1) * self.width];
            let orow = &mut out[(y / factor) * ow..(y / factor + 1) * ow];
            for (x, v) in row.iter().enumerate() {
                orow[x / factor] += v;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub scene_count: usize,
    pub width: usize,
    pub height: usize,
    /// Inclusive head-count range per scene.
    pub count_range: (u32, u32),
    /// Inclusive head radius range in pixels.
    pub head_radius_range: (f64, f64),
    /// Cell size of the background value noise, in pixels.
    pub background_texture_scale: f64,
    /// Train / validation / test fractions.
    pub split_fractions: [f64; 3],
    pub master_seed: u64,
    pub density_sigma: f64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec {
            scene_count: 280,
            width: 256,
            height: 256,
            count_range: (10, 120),
            head_radius_range: (3.0, 6.0),
            background_texture_scale: 32.0,
            split_fractions: [200.0 / 280.0, 30.0 / 280.0, 50.0 / 280.0],
            master_seed: 2022,
            density_sigma: 4.0,
        }
    }
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<(), SceneError> {
        let bad = |m| Err(SceneError::InvalidSpec(m));
        if self.width < 8 || self.height < 8 {
            return bad("image dimensions must be at least 8x8");
        }
        if self.count_range.0 > self.count_range.1 {
            return bad("count range min exceeds max");
        }
        let (r0, r1) = self.head_radius_range;
        if !(r0 > 0.0 && r0 <= r1 && r1.is_finite()) {
            return bad("head radius range must be positive and ordered");
        }
        if !(self.background_texture_scale > 0.0 && self.background_texture_scale.is_finite()) {
            return bad("background texture scale must be positive");
        }
        if self.split_fractions.iter().any(|f| !(*f >= 0.0)) {
            return bad("split fractions must be non-negative");
        }
        if (self.split_fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad("split fractions must sum to 1");
        }
        if !(self.density_sigma > 0.0 && self.density_sigma.is_finite()) {
            return Err(SceneError::InvalidSigma(self.density_sigma));
        }
        Ok(())
    }

    /// Number of scenes in each split, in train/val/test order.
    pub fn split_sizes(&self) -> [usize; 3] {
        let n = self.scene_count as f64;
        let train = (libm::round(n * self.split_fractions[0]) as usize).min(self.scene_count);
        let val = (libm::round(n * self.split_fractions[1]) as usize).min(self.scene_count - train);
        [train, val, self.scene_count - train - val]
    }

    /// Split of every scene index, from a seeded permutation.
    pub fn split_assignment(&self) -> Vec<Split> {
        let mut order: Vec<usize> = (0..self.scene_count).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(u64::MAX);
        order.shuffle(&mut rng);
        let [train, val, _] = self.split_sizes();
        let mut out = vec![Split::Test; self.scene_count];
        for (rank, &idx) in order.iter().enumerate() {
            out[idx] = if rank < train {
                Split::Train
            } else if rank < train + val {
                Split::Val
            } else {
                Split::Test
            };
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub index: usize,
    pub seed: u64,
    pub image: PlanarImage,
    pub annotations: Vec<HeadAnnotation>,
    pub density: DensityMap,
}

/// Sum of one truncated, renormalized Gaussian per head.
///
/// Each kernel covers pixel centres within `4σ` of the head that fall inside
/// the image and is scaled to unit mass over those pixels.
pub fn density_from_annotations(
    annotations: &[HeadAnnotation],
    width: usize,
    height: usize,
    sigma: f64,
) -> Result<DensityMap, SceneError> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(SceneError::InvalidSigma(sigma));
    }
    let mut values = vec![0.0f64; width * height];
    let radius = 4.0 * sigma;
    let inv_two_var = 1.0 / (2.0 * sigma * sigma);
    let mut kernel: Vec<(usize, f64)> = Vec::new();
    for head in annotations {
        kernel.clear();
        let x0 = libm::floor(head.x - radius).max(0.0) as usize;
        let y0 = libm::floor(head.y - radius).max(0.0) as usize;
        let x1 = (libm::ceil(head.x + radius).max(0.0) as usize).min(width);
        let y1 = (libm::ceil(head.y + radius).max(0.0) as usize).min(height);
        let mut mass = 0.0;
        for py in y0..y1 {
            let dy = py as f64 + 0.5 - head.y;
            for px in x0..x1 {
                let dx = px as f64 + 0.5 - head.x;
                let d2 = dx * dx + dy * dy;
                if d2 <= radius * radius {
                    let w = libm::exp(-d2 * inv_two_var);
                    mass += w;
                    kernel.push((py * width + px, w));
                }
            }
        }
        if mass > 0.0 {
            for &(i, w) in &kernel {
                values[i] += w / mass;
            }
        } else {
            // Kernel narrower than a pixel: all mass on the containing pixel.
            let px = (head.x as usize).min(width - 1);
            let py = (head.y as usize).min(height - 1);
            values[py * width + px] += 1.0;
        }
    }
    Ok(DensityMap {
        width,
        height,
        values,
        sigma,
    })
}

/// Renders scene `index` of the dataset.
pub fn generate_scene(spec: &DatasetSpec, index: usize) -> Result<Scene, SceneError> {
    spec.validate()?;
    if index >= spec.scene_count {
        return Err(SceneError::IndexOutOfRange {
            index,
            count: spec.scene_count,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.master_seed);
    rng.set_stream(index as u64);

    let (w, h) = (spec.width, spec.height);
    let mut rgb = background(&mut rng, w, h, spec.background_texture_scale);

    let n = rng.gen_range(spec.count_range.0..=spec.count_range.1) as usize;
    let mut annotations = Vec::with_capacity(n);
    let (r0, r1) = spec.head_radius_range;
    for _ in 0..n {
        let x = rng.gen_range(0.0..w as f64);
        let y = rng.gen_range(0.0..h as f64);
        let rx = rng.gen_range(r0..=r1);
        let ry = rx * rng.gen_range(0.85..1.2);
        let tone: f64 = rng.gen_range(-18.0..18.0);
        let color = [
            40.0 + tone + rng.gen_range(-8.0..8.0),
            32.0 + tone + rng.gen_range(-8.0..8.0),
            28.0 + tone + rng.gen_range(-8.0..8.0),
        ];
        draw_head(&mut rgb, w, h, x, y, rx, ry, color);
        annotations.push(HeadAnnotation { x, y });
    }

    let density = density_from_annotations(&annotations, w, h, spec.density_sigma)?;
    let image = PlanarImage::from_rgb_interleaved(w, h, &rgb).expect("buffer sized from dims");
    Ok(Scene {
        index,
        seed: spec.master_seed,
        image,
        annotations,
        density,
    })
}

/// Two octaves of bilinear value noise around a random base colour.
fn background(rng: &mut ChaCha8Rng, w: usize, h: usize, scale: f64) -> Vec<u8> {
    let base = [
        rng.gen_range(110.0..190.0),
        rng.gen_range(110.0..190.0),
        rng.gen_range(100.0..180.0),
    ];
    let coarse = NoiseGrid::new(rng, w, h, scale);
    let fine = NoiseGrid::new(rng, w, h, scale / 4.0);
    let tint: [f64; 3] = [
        rng.gen_range(0.8..1.2),
        rng.gen_range(0.8..1.2),
        rng.gen_range(0.8..1.2),
    ];
    let mut out = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            let n = 40.0 * coarse.sample(x as f64, y as f64) + 12.0 * fine.sample(x as f64, y as f64);
            for c in 0..3 {
                out.push((base[c] + n * tint[c]).clamp(0.0, 255.0) as u8);
            }
        }
    }
    out
}

struct NoiseGrid {
    cols: usize,
    values: Vec<f64>,
    scale: f64,
}

impl NoiseGrid {
    fn new(rng: &mut ChaCha8Rng, w: usize, h: usize, scale: f64) -> Self {
        let scale = scale.max(1.0);
        let cols = (w as f64 / scale) as usize + 2;
        let rows = (h as f64 / scale) as usize + 2;
        let values = (0..cols * rows).map(|_| rng.gen_range(-1.0..1.0)).collect();
        NoiseGrid { cols, values, scale }
    }

    fn sample(&self, x: f64, y: f64) -> f64 {
        let (gx, gy) = (x / self.scale, y / self.scale);
        let (ix, iy) = (gx as usize, gy as usize);
        let (fx, fy) = (smooth(gx - ix as f64), smooth(gy - iy as f64));
        let v = |cx: usize, cy: usize| self.values[cy * self.cols + cx];
        let top = v(ix, iy) * (1.0 - fx) + v(ix + 1, iy) * fx;
        let bottom = v(ix, iy + 1) * (1.0 - fx) + v(ix + 1, iy + 1) * fx;
        top * (1.0 - fy) + bottom * fy
    }
}

fn smooth(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

#[allow(clippy::too_many_arguments)]
fn draw_head(rgb: &mut [u8], w: usize, h: usize, cx: f64, cy: f64, rx: f64, ry: f64, color: [f64; 3]) {
    let x0 = libm::floor(cx - rx - 1.0).max(0.0) as usize;
    let y0 = libm::floor(cy - ry - 1.0).max(0.0) as usize;
    let x1 = (libm::ceil(cx + rx + 1.0) as usize).min(w);
    let y1 = (libm::ceil(cy + ry + 1.0) as usize).min(h);
    let rmin = rx.min(ry);
    for py in y0..y1 {
        for px in x0..x1 {
            let dx = (px as f64 + 0.5 - cx) / rx;
            let dy = (py as f64 + 0.5 - cy) / ry;
            let d = libm::sqrt(dx * dx + dy * dy);
            let alpha = ((1.0 - d) * rmin + 0.5).clamp(0.0, 1.0);
            if alpha <= 0.0 {
                continue;
            }
            // Lit from the upper left.
            let hx = dx + 0.35;
            let hy = dy + 0.35;
            let light = 0.75 + 0.6 * (1.0 - (hx * hx + hy * hy)).max(0.0);
            let i = (py * w + px) * 3;
            for c in 0..3 {
                let head = (color[c] * light).clamp(0.0, 255.0);
                let bg = rgb[i + c] as f64;
                rgb[i + c] = (bg + (head - bg) * alpha).clamp(0.0, 255.0) as u8;
            }
        }
    }
}
