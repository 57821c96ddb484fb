//! Well photographs: decoding, well localisation and per-channel statistics.
//!
//! Segmentation runs on the green channel, which carries the fluorescein and
//! GFP emission. A percentile of the green histogram seeds a threshold that
//! is then refined by iterative intermeans (the threshold settles midway
//! between the mean of the pixels below it and the mean of the pixels above
//! it). The largest 8-connected foreground blob is the well; its centroid and
//! equal-area radius define the ROI. Statistics are taken only inside
//! `radius * wall_exclusion` so the bright rim seen from off-axis viewpoints
//! stays out of the reading.

use std::io::Cursor;

use image::{ColorType, DynamicImage, ImageDecoder, ImageFormat, ImageReader, Limits};
use thiserror::Error;

/// Smallest accepted image edge, in pixels.
pub const MIN_DIMENSION: u32 = 32;
/// Largest accepted image edge when decoding untrusted files.
pub const MAX_DIMENSION: u32 = 16_384;
/// Minimum number of pixels inside the sampling disk.
pub const MIN_ROI_PIXELS: u64 = 16;
/// Fraction of each channel's sorted values dropped at either end.
pub const TRIM_FRACTION: f64 = 0.10;
/// Foreground larger than this share of the frame is a failed segmentation.
pub const MAX_FOREGROUND_FRACTION: f64 = 0.95;

pub const DEFAULT_THRESHOLD_PERCENTILE: f64 = 0.90;
pub const DEFAULT_WALL_EXCLUSION: f64 = 0.80;

pub type Rgb = [u8; 3];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImagingError {
    #[error("cannot decode image: {0}")]
    Decode(String),
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("image is {width}x{height}, both edges must be at least {MIN_DIMENSION} px")]
    TooSmall { width: u32, height: u32 },
    #[error("pixel buffer holds {actual} pixels, {width}x{height} needs {expected}")]
    DimensionMismatch {
        width: u32,
        height: u32,
        expected: usize,
        actual: usize,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no well found: {0}")]
    NoWellFound(String),
    #[error("sampling disk (center {center_x:.1},{center_y:.1}, radius {radius:.1}) leaves the {width}x{height} frame")]
    RoiOutOfBounds {
        center_x: f64,
        center_y: f64,
        radius: f64,
        width: u32,
        height: u32,
    },
    #[error("sampling disk holds {0} pixels, at least {MIN_ROI_PIXELS} required")]
    TooFewPixels(u64),
}

/// An 8-bit RGB image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: u32,
    height: u32,
    pixels: Vec<Rgb>,
}

impl RasterImage {
    pub fn new(width: u32, height: u32, pixels: Vec<Rgb>) -> Result<Self, ImagingError> {
        let expected = width as usize * height as usize;
        if pixels.len() != expected {
            return Err(ImagingError::DimensionMismatch {
                width,
                height,
                expected,
                actual: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: u32, height: u32, rgb: Rgb) -> Self {
        Self {
            width,
            height,
            pixels: vec![rgb; width as usize * height as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    pub fn pixel(&self, x: u32, y: u32) -> Rgb {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn set_pixel(&mut self, x: u32, y: u32, rgb: Rgb) {
        self.pixels[y as usize * self.width as usize + x as usize] = rgb;
    }

    /// Lossless PNG encoding (8-bit RGB).
    pub fn to_png(&self) -> Vec<u8> {
        let flat: Vec<u8> = self.pixels.iter().flatten().copied().collect();
        let buffer = image::RgbImage::from_raw(self.width, self.height, flat)
            .expect("buffer length checked at construction");
        let mut out = Cursor::new(Vec::new());
        DynamicImage::ImageRgb8(buffer)
            .write_to(&mut out, ImageFormat::Png)
            .expect("in-memory PNG encoding");
        out.into_inner()
    }
}

/// Decodes a PNG or baseline JPEG. Gray images are promoted to RGB and alpha
/// is dropped; 16-bit and float images are refused.
pub fn load_image(bytes: &[u8]) -> Result<RasterImage, ImagingError> {
    let mut reader = ImageReader::new(Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| ImagingError::Decode(e.to_string()))?;
    match reader.format() {
        Some(ImageFormat::Png | ImageFormat::Jpeg) => {}
        Some(other) => {
            return Err(ImagingError::UnsupportedFormat(format!("{other:?}")));
        }
        None => return Err(ImagingError::Decode("unrecognised file signature".into())),
    }
    let mut limits = Limits::default();
    limits.max_image_width = Some(MAX_DIMENSION);
    limits.max_image_height = Some(MAX_DIMENSION);
    limits.max_alloc = Some(512 * 1024 * 1024);
    reader.limits(limits);

    let decoder = reader
        .into_decoder()
        .map_err(|e| ImagingError::Decode(e.to_string()))?;
    let color = decoder.color_type();
    if !matches!(
        color,
        ColorType::L8 | ColorType::La8 | ColorType::Rgb8 | ColorType::Rgba8
    ) {
        return Err(ImagingError::UnsupportedFormat(format!("{color:?}")));
    }
    let (width, height) = decoder.dimensions();
    if width < MIN_DIMENSION || height < MIN_DIMENSION {
        return Err(ImagingError::TooSmall { width, height });
    }
    let decoded =
        DynamicImage::from_decoder(decoder).map_err(|e| ImagingError::Decode(e.to_string()))?;
    let rgb = decoded.into_rgb8();
    let pixels = rgb.pixels().map(|p| p.0).collect();
    RasterImage::new(width, height, pixels)
}

/// Circular sampling region for one well.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WellRoi {
    pub center_x: f64,
    pub center_y: f64,
    pub radius: f64,
    pub wall_exclusion: f64,
}

impl WellRoi {
    pub fn new(
        center_x: f64,
        center_y: f64,
        radius: f64,
        wall_exclusion: f64,
    ) -> Result<Self, ImagingError> {
        if !(center_x.is_finite() && center_y.is_finite()) {
            return Err(ImagingError::InvalidParameter("ROI center must be finite".into()));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(ImagingError::InvalidParameter(format!(
                "ROI radius must be positive, got {radius}"
            )));
        }
        check_wall_exclusion(wall_exclusion)?;
        Ok(Self {
            center_x,
            center_y,
            radius,
            wall_exclusion,
        })
    }

    pub fn effective_radius(&self) -> f64 {
        self.radius * self.wall_exclusion
    }

    /// Whether the pixel centred at integer `(x, y)` is sampled.
    pub fn contains(&self, x: u32, y: u32) -> bool {
        let dx = f64::from(x) - self.center_x;
        let dy = f64::from(y) - self.center_y;
        let r = self.effective_radius();
        dx * dx + dy * dy <= r * r
    }

    /// Pixel `(x, y)` covers `[x - 0.5, x + 0.5]`; the sampling disk must lie
    /// inside the union of all pixel squares.
    pub fn fits_within(&self, width: u32, height: u32) -> bool {
        let r = self.effective_radius();
        self.center_x - r >= -0.5
            && self.center_y - r >= -0.5
            && self.center_x + r <= f64::from(width) - 0.5
            && self.center_y + r <= f64::from(height) - 0.5
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentationParams {
    pub threshold_percentile: f64,
    pub wall_exclusion: f64,
}

impl Default for SegmentationParams {
    fn default() -> Self {
        Self {
            threshold_percentile: DEFAULT_THRESHOLD_PERCENTILE,
            wall_exclusion: DEFAULT_WALL_EXCLUSION,
        }
    }
}

impl SegmentationParams {
    pub fn validate(&self) -> Result<(), ImagingError> {
        check_percentile(self.threshold_percentile)?;
        check_wall_exclusion(self.wall_exclusion)
    }
}

fn check_percentile(p: f64) -> Result<(), ImagingError> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(ImagingError::InvalidParameter(format!(
            "threshold percentile must be in (0, 1), got {p}"
        )))
    }
}

fn check_wall_exclusion(w: f64) -> Result<(), ImagingError> {
    if w > 0.0 && w <= 1.0 {
        Ok(())
    } else {
        Err(ImagingError::InvalidParameter(format!(
            "wall exclusion must be in (0, 1], got {w}"
        )))
    }
}

fn green_histogram(image: &RasterImage) -> [u64; 256] {
    let mut hist = [0u64; 256];
    for p in image.pixels() {
        hist[p[1] as usize] += 1;
    }
    hist
}

/// Smallest value whose cumulative count reaches `p * n`.
fn histogram_quantile(hist: &[u64; 256], p: f64) -> u8 {
    let total: u64 = hist.iter().sum();
    let target = ((p * total as f64).ceil() as u64).clamp(1, total);
    let mut seen = 0;
    for (value, &count) in hist.iter().enumerate() {
        seen += count;
        if seen >= target {
            return value as u8;
        }
    }
    255
}

fn class_mean(hist: &[u64; 256], range: std::ops::RangeInclusive<usize>) -> Option<f64> {
    let (mut n, mut sum) = (0u64, 0u64);
    for v in range {
        n += hist[v];
        sum += hist[v] * v as u64;
    }
    (n > 0).then(|| sum as f64 / n as f64)
}

/// Intermeans refinement starting from `seed`. Foreground is `green > t`.
fn refine_threshold(hist: &[u64; 256], seed: u8) -> Option<u8> {
    let min = hist.iter().position(|&c| c > 0)?;
    let max = hist.iter().rposition(|&c| c > 0)?;
    if min == max {
        return None;
    }
    let mut t = usize::from(seed).min(max - 1);
    for _ in 0..256 {
        let low = class_mean(hist, 0..=t)?;
        let high = class_mean(hist, t + 1..=255)?;
        let next = (((low + high) / 2.0).floor() as usize).clamp(min, max - 1);
        if next == t {
            break;
        }
        t = next;
    }
    Some(t as u8)
}

/// Pixel indices of the largest 8-connected component of `mask`.
fn largest_component(mask: &[bool], width: usize, height: usize) -> Vec<usize> {
    let mut seen = vec![false; mask.len()];
    let mut best: Vec<usize> = Vec::new();
    let mut stack = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        let mut component = Vec::new();
        seen[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            component.push(i);
            let (x, y) = ((i % width) as isize, (i / width) as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= width as isize || ny >= height as isize {
                        continue;
                    }
                    let j = ny as usize * width + nx as usize;
                    if mask[j] && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        if component.len() > best.len() {
            best = component;
        }
    }
    best
}

/// Finds the single well in `image`.
pub fn locate_well_roi(
    image: &RasterImage,
    threshold_percentile: f64,
    wall_exclusion: f64,
) -> Result<WellRoi, ImagingError> {
    check_percentile(threshold_percentile)?;
    check_wall_exclusion(wall_exclusion)?;

    let hist = green_histogram(image);
    let seed = histogram_quantile(&hist, threshold_percentile);
    let threshold = refine_threshold(&hist, seed)
        .ok_or_else(|| ImagingError::NoWellFound("green channel has no contrast".into()))?;

    let (width, height) = (image.width() as usize, image.height() as usize);
    let mask: Vec<bool> = image.pixels().iter().map(|p| p[1] > threshold).collect();
    let blob = largest_component(&mask, width, height);
    if blob.is_empty() {
        return Err(ImagingError::NoWellFound("empty foreground".into()));
    }
    let total = mask.len() as f64;
    if blob.len() as f64 > MAX_FOREGROUND_FRACTION * total {
        return Err(ImagingError::NoWellFound(format!(
            "foreground covers {:.1}% of the frame",
            100.0 * blob.len() as f64 / total
        )));
    }

    let (mut sx, mut sy) = (0u64, 0u64);
    for &i in &blob {
        sx += (i % width) as u64;
        sy += (i / width) as u64;
    }
    let n = blob.len() as f64;
    let (cx, cy) = (sx as f64 / n, sy as f64 / n);
    let radius = (n / std::f64::consts::PI).sqrt();
    WellRoi::new(cx, cy, radius, wall_exclusion)
}

/// Per-channel statistics of the pixels inside a sampling disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbProfile {
    /// 10% two-sided trimmed mean per channel.
    pub mean: [f64; 3],
    pub median: [f64; 3],
    /// Population standard deviation over all sampled pixels.
    pub stddev: [f64; 3],
    pub pixel_count: u64,
    /// Share of sampled pixels with at least one channel at 255.
    pub saturation_fraction: f64,
}

impl RgbProfile {
    /// The per-well "green value" used as the fluorescence reading.
    pub fn green(&self) -> f64 {
        self.mean[1]
    }
}

/// Walks a histogram in value order, yielding the value at each rank.
fn value_at_rank(hist: &[u64; 256], rank: u64) -> f64 {
    let mut seen = 0;
    for (value, &count) in hist.iter().enumerate() {
        seen += count;
        if seen > rank {
            return value as f64;
        }
    }
    255.0
}

fn trimmed_mean(hist: &[u64; 256], n: u64) -> f64 {
    let k = (TRIM_FRACTION * n as f64).floor() as u64;
    let (lo, hi) = (k, n - k);
    let (mut seen, mut sum) = (0u64, 0u64);
    for (value, &count) in hist.iter().enumerate() {
        let start = seen.max(lo);
        let end = (seen + count).min(hi);
        if end > start {
            sum += (end - start) * value as u64;
        }
        seen += count;
    }
    sum as f64 / (hi - lo) as f64
}

fn median(hist: &[u64; 256], n: u64) -> f64 {
    if n % 2 == 1 {
        value_at_rank(hist, n / 2)
    } else {
        (value_at_rank(hist, n / 2 - 1) + value_at_rank(hist, n / 2)) / 2.0
    }
}

/// Statistics over pixels within `roi.radius * roi.wall_exclusion` of the
/// ROI center.
pub fn extract_profile(image: &RasterImage, roi: &WellRoi) -> Result<RgbProfile, ImagingError> {
    let r = roi.effective_radius();
    if !roi.fits_within(image.width(), image.height()) {
        return Err(ImagingError::RoiOutOfBounds {
            center_x: roi.center_x,
            center_y: roi.center_y,
            radius: r,
            width: image.width(),
            height: image.height(),
        });
    }
    let x0 = (roi.center_x - r).floor().max(0.0) as u32;
    let y0 = (roi.center_y - r).floor().max(0.0) as u32;
    let x1 = ((roi.center_x + r).ceil() as u32).min(image.width() - 1);
    let y1 = ((roi.center_y + r).ceil() as u32).min(image.height() - 1);

    let mut hist = [[0u64; 256]; 3];
    let mut sums = [0u64; 3];
    let mut squares = [0u64; 3];
    let (mut n, mut saturated) = (0u64, 0u64);
    for y in y0..=y1 {
        for x in x0..=x1 {
            if !roi.contains(x, y) {
                continue;
            }
            let p = image.pixel(x, y);
            n += 1;
            if p.contains(&255) {
                saturated += 1;
            }
            for c in 0..3 {
                let v = u64::from(p[c]);
                hist[c][p[c] as usize] += 1;
                sums[c] += v;
                squares[c] += v * v;
            }
        }
    }
    if n < MIN_ROI_PIXELS {
        return Err(ImagingError::TooFewPixels(n));
    }

    let mut profile = RgbProfile {
        mean: [0.0; 3],
        median: [0.0; 3],
        stddev: [0.0; 3],
        pixel_count: n,
        saturation_fraction: saturated as f64 / n as f64,
    };
    for c in 0..3 {
        profile.mean[c] = trimmed_mean(&hist[c], n);
        profile.median[c] = median(&hist[c], n);
        // n * sum(x^2) - (sum x)^2 is exact in integers
        let spread = u128::from(n) * u128::from(squares[c]) - u128::from(sums[c]).pow(2);
        profile.stddev[c] = (spread as f64).sqrt() / n as f64;
    }
    Ok(profile)
}

/// Decode, locate, measure.
pub fn analyze_well_image(
    bytes: &[u8],
    params: &SegmentationParams,
) -> Result<RgbProfile, ImagingError> {
    params.validate()?;
    let image = load_image(bytes)?;
    let roi = locate_well_roi(&image, params.threshold_percentile, params.wall_exclusion)?;
    extract_profile(&image, &roi)
}
