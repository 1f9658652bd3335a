//! Synthetic labeled data: 1D noisy sequences with planted instantaneous
//! events, and 2D canvases of non-overlapping glyphs scanned into
//! sequences along a Hilbert curve.
//!
//! Generation is a pure function of (config, seed). Each sample carries
//! its event locations as hidden ground truth for evaluation only; the
//! training path consumes a [`TrainView`], a type that simply has no
//! truth field.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::hilbert::{scan_image, HilbertCurve};
use crate::loss::CountLabel;
use crate::mat::{Image, Mat};

const PLACEMENT_RETRIES: usize = 1000;

/// Derives a stream-and-index specific seed from a base seed.
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    let mut z = base
        ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15)
        ^ index.wrapping_mul(0xd1b5_4a32_d192_ed03);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One ground-truth event: a time step, and for image tasks the true
/// glyph center in pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct EventTruth {
    pub time: usize,
    pub center_px: Option<(f64, f64)>,
}

/// What the trainer is allowed to see: features and counts, nothing else.
#[derive(Debug, Clone)]
pub struct TrainView {
    pub features: Mat<f64>,
    pub counts: CountLabel,
}

/// A generated sample: features, count labels, and hidden event truth.
#[derive(Debug, Clone)]
pub struct SampleRecord {
    pub features: Mat<f64>,
    pub counts: CountLabel,
    hidden_truth: Vec<Vec<EventTruth>>,
    pub seed: u64,
}

impl SampleRecord {
    pub fn new(
        features: Mat<f64>,
        counts: CountLabel,
        hidden_truth: Vec<Vec<EventTruth>>,
        seed: u64,
    ) -> Result<Self> {
        if hidden_truth.len() != counts.channels() {
            return Err(Error::invalid_input("truth channels differ from label channels"));
        }
        for (c, events) in hidden_truth.iter().enumerate() {
            if events.len() != counts.count(c) {
                return Err(Error::invalid_input(format!(
                    "channel {c}: {} truth events but count label {}",
                    events.len(),
                    counts.count(c)
                )));
            }
        }
        Ok(SampleRecord {
            features,
            counts,
            hidden_truth,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.rows() == 0
    }

    /// Evaluation-only access to the planted event locations.
    pub fn hidden_truth(&self) -> &[Vec<EventTruth>] {
        &self.hidden_truth
    }

    /// The training-path projection of this sample.
    pub fn train_view(&self) -> TrainView {
        TrainView {
            features: self.features.clone(),
            counts: self.counts.clone(),
        }
    }
}

/// 1D sequence generator parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub t_min: usize,
    pub t_max: usize,
    pub channels: usize,
    /// Per-step event probability per channel; expected count ≈ rate · T.
    pub event_rate: f64,
    /// Minimum step distance between two events of the same channel.
    pub min_separation: usize,
    /// Pulse support half-width in steps; the Gaussian sigma is width/3.
    pub pulse_width: usize,
    pub pulse_amplitude: f64,
    pub noise_std: f64,
    /// Per-step rate of non-target rectangular pulses.
    pub distractor_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            t_min: 200,
            t_max: 400,
            channels: 2,
            event_rate: 0.01,
            min_separation: 5,
            pulse_width: 3,
            pulse_amplitude: 1.0,
            noise_std: 0.2,
            distractor_rate: 0.0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t_min == 0 || self.t_min > self.t_max {
            return Err(Error::invalid_input("need 1 <= t_min <= t_max"));
        }
        if self.channels == 0 {
            return Err(Error::invalid_input("need at least one channel"));
        }
        if self.min_separation == 0 {
            return Err(Error::invalid_input("min_separation must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.event_rate) {
            return Err(Error::invalid_input("event_rate must be in [0, 1]"));
        }
        if self.pulse_width == 0 {
            return Err(Error::invalid_input("pulse_width must be >= 1"));
        }
        if self.noise_std < 0.0 || self.distractor_rate < 0.0 {
            return Err(Error::invalid_input("noise and distractor rates must be >= 0"));
        }
        Ok(())
    }

    /// Feature dimension: one band per channel plus an edge band on each
    /// side, so channel signatures overlap but stay distinguishable.
    pub fn feature_dim(&self) -> usize {
        self.channels + 2
    }

    /// Spectral profile of a channel across the feature bands, peaked at
    /// band c+1.
    fn band_profile(&self, channel: usize) -> Vec<f64> {
        let center = (channel + 1) as f64;
        (0..self.feature_dim())
            .map(|j| {
                let d = j as f64 - center;
                (-d * d / (2.0 * 0.6 * 0.6)).exp()
            })
            .collect()
    }
}

/// Draw `count` event times in [0, t_len) with pairwise separation at
/// least `min_sep`, by bounded rejection.
fn place_events(
    rng: &mut ChaCha8Rng,
    count: usize,
    t_len: usize,
    min_sep: usize,
) -> Result<Vec<usize>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let capacity = (t_len - 1) / min_sep + 1;
    if count > capacity {
        return Err(Error::Generation(format!(
            "{count} events cannot fit in {t_len} steps at separation {min_sep}"
        )));
    }
    for _ in 0..PLACEMENT_RETRIES {
        let mut times: Vec<usize> = (0..count).map(|_| rng.gen_range(0..t_len)).collect();
        times.sort_unstable();
        if times.windows(2).all(|w| w[1] - w[0] >= min_sep) {
            return Ok(times);
        }
    }
    Err(Error::Generation(format!(
        "no valid placement of {count} events after {PLACEMENT_RETRIES} tries \
         (event_rate x min_separation too dense)"
    )))
}

/// Generates one labeled 1D sequence, deterministic in (cfg, seed).
pub fn gen_sequence(cfg: &SynthConfig, seed: u64) -> Result<SampleRecord> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t_len = rng.gen_range(cfg.t_min..=cfg.t_max);
    let dim = cfg.feature_dim();

    let mut features = Mat::zeros(t_len, dim);
    if cfg.noise_std > 0.0 {
        let noise = Normal::new(0.0, cfg.noise_std)
            .map_err(|e| Error::Generation(format!("noise distribution: {e}")))?;
        for v in features.data_mut() {
            *v = noise.sample(&mut rng);
        }
    }

    let sigma = cfg.pulse_width as f64 / 3.0;
    let half = cfg.pulse_width as i64;
    let mut truth = Vec::with_capacity(cfg.channels);
    let mut counts = Vec::with_capacity(cfg.channels);
    for c in 0..cfg.channels {
        let drawn = (0..t_len)
            .filter(|_| rng.gen::<f64>() < cfg.event_rate)
            .count();
        let times = place_events(&mut rng, drawn, t_len, cfg.min_separation)?;
        let profile = cfg.band_profile(c);
        for &e in &times {
            for dt in -half..=half {
                let t = e as i64 + dt;
                if t < 0 || t >= t_len as i64 {
                    continue;
                }
                let shape = cfg.pulse_amplitude
                    * (-(dt as f64) * (dt as f64) / (2.0 * sigma * sigma)).exp();
                let row = features.row_mut(t as usize);
                for (f, &b) in row.iter_mut().zip(&profile) {
                    *f += shape * b;
                }
            }
        }
        counts.push(times.len());
        truth.push(
            times
                .into_iter()
                .map(|time| EventTruth {
                    time,
                    center_px: None,
                })
                .collect(),
        );
    }

    // Distractors: flat temporal shape, flat band profile, so they share
    // neither signature with real events.
    if cfg.distractor_rate > 0.0 {
        let n_distract = (0..t_len)
            .filter(|_| rng.gen::<f64>() < cfg.distractor_rate)
            .count();
        for _ in 0..n_distract {
            let e = rng.gen_range(0..t_len) as i64;
            for dt in -half..=half {
                let t = e + dt;
                if t < 0 || t >= t_len as i64 {
                    continue;
                }
                for f in features.row_mut(t as usize) {
                    *f += 0.7 * cfg.pulse_amplitude;
                }
            }
        }
    }

    SampleRecord::new(features, CountLabel::new(counts)?, truth, seed)
}

/// IDX-backed or synthetic canvas parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CanvasConfig {
    pub width: usize,
    pub height: usize,
    /// Side of the square scan window in pixels; width and height must be
    /// multiples covered by a power-of-two grid.
    pub window: usize,
    pub classes: usize,
    pub glyphs_min: usize,
    pub glyphs_max: usize,
    pub glyph_size: usize,
    pub noise_std: f64,
}

impl Default for CanvasConfig {
    fn default() -> Self {
        CanvasConfig {
            width: 64,
            height: 64,
            window: 8,
            classes: 2,
            glyphs_min: 1,
            glyphs_max: 3,
            glyph_size: 11,
            noise_std: 0.1,
        }
    }
}

impl CanvasConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.window == 0 {
            return Err(Error::invalid_input("canvas and window sizes must be positive"));
        }
        if self.glyph_size > self.width || self.glyph_size > self.height {
            return Err(Error::invalid_input("glyph larger than canvas"));
        }
        if self.classes == 0 {
            return Err(Error::invalid_input("need at least one glyph class"));
        }
        if self.glyphs_min > self.glyphs_max {
            return Err(Error::invalid_input("glyphs_min > glyphs_max"));
        }
        Ok(())
    }

    /// Curve covering the canvas; the grid side must be a power of two.
    pub fn curve(&self) -> Result<HilbertCurve> {
        let cells_x = self.width.div_ceil(self.window);
        let cells_y = self.height.div_ceil(self.window);
        let side = cells_x.max(cells_y).max(2).next_power_of_two();
        let order = side.trailing_zeros();
        HilbertCurve::new(order, self.window, self.window)
    }
}

/// A composed canvas with its per-class counts and hidden glyph centers.
#[derive(Debug, Clone)]
pub struct CanvasRecord {
    pub image: Image<f64>,
    pub counts: CountLabel,
    centers: Vec<Vec<(f64, f64)>>,
    pub seed: u64,
}

impl CanvasRecord {
    /// Evaluation-only access to glyph bounding-box centers per class.
    pub fn centers(&self) -> &[Vec<(f64, f64)>] {
        &self.centers
    }
}

/// Filled disk glyph.
pub fn glyph_disk(size: usize, intensity: f64) -> Image<f64> {
    let mut img = Image::zeros(size, size, 1);
    let c = (size as f64 - 1.0) / 2.0;
    let radius = size as f64 * 0.42;
    for y in 0..size {
        for x in 0..size {
            let d = ((x as f64 - c).powi(2) + (y as f64 - c).powi(2)).sqrt();
            if d <= radius {
                img.set(x, y, 0, intensity);
            }
        }
    }
    img
}

/// Hollow ring glyph: same footprint as the disk but with an empty core.
pub fn glyph_ring(size: usize, intensity: f64) -> Image<f64> {
    let mut img = Image::zeros(size, size, 1);
    let c = (size as f64 - 1.0) / 2.0;
    let outer = size as f64 * 0.46;
    let inner = size as f64 * 0.24;
    for y in 0..size {
        for x in 0..size {
            let d = ((x as f64 - c).powi(2) + (y as f64 - c).powi(2)).sqrt();
            if d <= outer && d >= inner {
                img.set(x, y, 0, intensity);
            }
        }
    }
    img
}

/// Plus-shaped glyph for experiments with more than two classes.
pub fn glyph_cross(size: usize, intensity: f64) -> Image<f64> {
    let mut img = Image::zeros(size, size, 1);
    let arm = (size / 3).max(1);
    let lo = (size - arm) / 2;
    let hi = lo + arm;
    for y in 0..size {
        for x in 0..size {
            if (lo..hi).contains(&x) || (lo..hi).contains(&y) {
                img.set(x, y, 0, intensity);
            }
        }
    }
    img
}

/// Canonical glyph for a class index.
pub fn glyph_for_class(class: usize, size: usize) -> Image<f64> {
    match class % 3 {
        0 => glyph_disk(size, 1.0),
        1 => glyph_ring(size, 1.0),
        _ => glyph_cross(size, 1.0),
    }
}

/// Places the given class-labeled glyphs on a blank canvas uniformly at
/// random with non-overlapping bounding boxes, deterministic in `seed`.
pub fn compose_canvas(
    glyphs: &[(usize, Image<f64>)],
    cfg: &CanvasConfig,
    seed: u64,
) -> Result<CanvasRecord> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut image = Image::zeros(cfg.width, cfg.height, 1);
    let mut boxes: Vec<(usize, usize, usize, usize)> = Vec::new();
    let mut centers = vec![Vec::new(); cfg.classes];
    let mut counts = vec![0usize; cfg.classes];

    for (class, glyph) in glyphs {
        if *class >= cfg.classes {
            return Err(Error::invalid_input(format!(
                "glyph class {class} outside {} classes",
                cfg.classes
            )));
        }
        let (gw, gh) = (glyph.width(), glyph.height());
        if gw > cfg.width || gh > cfg.height {
            return Err(Error::invalid_input("glyph larger than canvas"));
        }
        let mut placed = false;
        for _ in 0..PLACEMENT_RETRIES {
            let x0 = rng.gen_range(0..=cfg.width - gw);
            let y0 = rng.gen_range(0..=cfg.height - gh);
            let overlaps = boxes
                .iter()
                .any(|&(bx, by, bw, bh)| x0 < bx + bw && bx < x0 + gw && y0 < by + bh && by < y0 + gh);
            if overlaps {
                continue;
            }
            for y in 0..gh {
                for x in 0..gw {
                    image.add(x0 + x, y0 + y, 0, glyph.get(x, y, 0));
                }
            }
            boxes.push((x0, y0, gw, gh));
            centers[*class].push((x0 as f64 + gw as f64 / 2.0, y0 as f64 + gh as f64 / 2.0));
            counts[*class] += 1;
            placed = true;
            break;
        }
        if !placed {
            return Err(Error::Generation(format!(
                "no non-overlapping position for glyph after {PLACEMENT_RETRIES} tries"
            )));
        }
    }

    if cfg.noise_std > 0.0 {
        let noise = Normal::new(0.0, cfg.noise_std)
            .map_err(|e| Error::Generation(format!("noise distribution: {e}")))?;
        for v in image.data_mut() {
            *v += noise.sample(&mut rng);
        }
    }

    Ok(CanvasRecord {
        image,
        counts: CountLabel::new(counts)?,
        centers,
        seed,
    })
}

/// Generates a full 2D sample: draws glyph classes, composes a canvas,
/// scans it along the Hilbert curve, and records curve-index events with
/// their pixel centers. Retries composition until no two same-class
/// glyphs share a cell, so counts and event times stay consistent.
pub fn gen_canvas_sample(cfg: &CanvasConfig, seed: u64) -> Result<SampleRecord> {
    cfg.validate()?;
    let curve = cfg.curve()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 11, 0));
    let n_glyphs = rng.gen_range(cfg.glyphs_min..=cfg.glyphs_max);
    let glyphs: Vec<(usize, Image<f64>)> = (0..n_glyphs)
        .map(|_| {
            let class = rng.gen_range(0..cfg.classes);
            (class, glyph_for_class(class, cfg.glyph_size))
        })
        .collect();

    for attempt in 0..PLACEMENT_RETRIES {
        let canvas = compose_canvas(&glyphs, cfg, derive_seed(seed, 13, attempt as u64))?;
        let mut truth: Vec<Vec<EventTruth>> = Vec::with_capacity(cfg.classes);
        let mut distinct = true;
        'classes: for class_centers in canvas.centers() {
            let mut events: Vec<EventTruth> = Vec::with_capacity(class_centers.len());
            for &(cx, cy) in class_centers {
                let time = curve.index_of_pixel(cx, cy)?;
                if events.iter().any(|e| e.time == time) {
                    distinct = false;
                    break 'classes;
                }
                events.push(EventTruth {
                    time,
                    center_px: Some((cx, cy)),
                });
            }
            events.sort_by_key(|e| e.time);
            truth.push(events);
        }
        if !distinct {
            continue;
        }
        let scan = scan_image(&canvas.image, &curve)?;
        return SampleRecord::new(scan.features, canvas.counts, truth, seed);
    }
    Err(Error::Generation(
        "could not place glyphs in distinct cells".into(),
    ))
}
