//! Colour appearance of emission wavelengths and a seeded well renderer.
//!
//! The renderer produces images with known geometry and channel levels and is
//! the ground truth the imaging tests measure against.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::imaging::{RasterImage, Rgb, MIN_DIMENSION};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhotometryError {
    #[error("wavelength {0} nm is outside the table range [{1}, {2}] nm")]
    OutOfGamutRange(f64, f64, f64),
    #[error("invalid colour matching table: {0}")]
    InvalidTable(String),
    #[error("emission {emission} nm must exceed excitation {excitation} nm by 10-150 nm")]
    InvalidStokesShift { excitation: f64, emission: f64 },
    #[error("intensity must be finite and non-negative, got {0}")]
    InvalidIntensity(f64),
    #[error("render spec out of bounds: {0}")]
    SpecOutOfBounds(String),
}

/// One row of a colour matching function table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CmfSample {
    pub wavelength_nm: f64,
    pub x_bar: f64,
    pub y_bar: f64,
    pub z_bar: f64,
}

// CIE 1931 2-degree standard observer, 380-780 nm in 5 nm steps.
#[rustfmt::skip]
const CIE_1931_2DEG: [[f64; 3]; 81] = [
    [0.001368, 0.000039, 0.006450], [0.002236, 0.000064, 0.010550],
    [0.004243, 0.000120, 0.020050], [0.007650, 0.000217, 0.036210],
    [0.014310, 0.000396, 0.067850], [0.023190, 0.000640, 0.110200],
    [0.043510, 0.001210, 0.207400], [0.077630, 0.002180, 0.371300],
    [0.134380, 0.004000, 0.645600], [0.214770, 0.007300, 1.039050],
    [0.283900, 0.011600, 1.385600], [0.328500, 0.016840, 1.622960],
    [0.348280, 0.023000, 1.747060], [0.348060, 0.029800, 1.782600],
    [0.336200, 0.038000, 1.772110], [0.318700, 0.048000, 1.744100],
    [0.290800, 0.060000, 1.669200], [0.251100, 0.073900, 1.528100],
    [0.195360, 0.090980, 1.287640], [0.142100, 0.112600, 1.041900],
    [0.095640, 0.139020, 0.812950], [0.057950, 0.169300, 0.616200],
    [0.032010, 0.208020, 0.465180], [0.014700, 0.258600, 0.353300],
    [0.004900, 0.323000, 0.272000], [0.002400, 0.407300, 0.212300],
    [0.009300, 0.503000, 0.158200], [0.029100, 0.608200, 0.111700],
    [0.063270, 0.710000, 0.078250], [0.109600, 0.793200, 0.057250],
    [0.165500, 0.862000, 0.042160], [0.225750, 0.914850, 0.029840],
    [0.290400, 0.954000, 0.020300], [0.359700, 0.980300, 0.013400],
    [0.433450, 0.994950, 0.008750], [0.512050, 1.000000, 0.005750],
    [0.594500, 0.995000, 0.003900], [0.678400, 0.978600, 0.002750],
    [0.762100, 0.952000, 0.002100], [0.842500, 0.915400, 0.001800],
    [0.916300, 0.870000, 0.001650], [0.978600, 0.816300, 0.001400],
    [1.026300, 0.757000, 0.001100], [1.056700, 0.694900, 0.001000],
    [1.062200, 0.631000, 0.000800], [1.045600, 0.566800, 0.000600],
    [1.002600, 0.503000, 0.000340], [0.938400, 0.441200, 0.000240],
    [0.854450, 0.381000, 0.000190], [0.751400, 0.321000, 0.000100],
    [0.642400, 0.265000, 0.000050], [0.541900, 0.217000, 0.000030],
    [0.447900, 0.175000, 0.000020], [0.360800, 0.138200, 0.000010],
    [0.283500, 0.107000, 0.000000], [0.218700, 0.081600, 0.000000],
    [0.164900, 0.061000, 0.000000], [0.121200, 0.044580, 0.000000],
    [0.087400, 0.032000, 0.000000], [0.063600, 0.023200, 0.000000],
    [0.046770, 0.017000, 0.000000], [0.032900, 0.011920, 0.000000],
    [0.022700, 0.008210, 0.000000], [0.015840, 0.005723, 0.000000],
    [0.011359, 0.004102, 0.000000], [0.008111, 0.002929, 0.000000],
    [0.005790, 0.002091, 0.000000], [0.004109, 0.001484, 0.000000],
    [0.002899, 0.001047, 0.000000], [0.002049, 0.000740, 0.000000],
    [0.001440, 0.000520, 0.000000], [0.001000, 0.000361, 0.000000],
    [0.000690, 0.000249, 0.000000], [0.000476, 0.000172, 0.000000],
    [0.000332, 0.000120, 0.000000], [0.000235, 0.000085, 0.000000],
    [0.000166, 0.000060, 0.000000], [0.000117, 0.000042, 0.000000],
    [0.000083, 0.000030, 0.000000], [0.000059, 0.000021, 0.000000],
    [0.000042, 0.000015, 0.000000],
];

/// XYZ (D65) to linear sRGB.
const XYZ_TO_LINEAR_SRGB: [[f64; 3]; 3] = [
    [3.2406, -1.5372, -0.4986],
    [-0.9689, 1.8758, 0.0415],
    [0.0557, -0.2040, 1.0570],
];

pub const DISPLAY_GAMMA: f64 = 2.2;

/// Colour matching functions sampled at increasing wavelengths.
#[derive(Debug, Clone, PartialEq)]
pub struct CmfTable {
    samples: Vec<CmfSample>,
}

impl CmfTable {
    pub fn new(samples: Vec<CmfSample>) -> Result<Self, PhotometryError> {
        if samples.len() < 2 {
            return Err(PhotometryError::InvalidTable("need at least two samples".into()));
        }
        for pair in samples.windows(2) {
            if !(pair[1].wavelength_nm > pair[0].wavelength_nm) {
                return Err(PhotometryError::InvalidTable(format!(
                    "wavelengths must increase: {} follows {}",
                    pair[1].wavelength_nm, pair[0].wavelength_nm
                )));
            }
        }
        for s in &samples {
            let weights = [s.x_bar, s.y_bar, s.z_bar];
            if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                return Err(PhotometryError::InvalidTable(format!(
                    "negative or non-finite weight at {} nm",
                    s.wavelength_nm
                )));
            }
        }
        Ok(Self { samples })
    }

    /// The CIE 1931 2-degree observer at 5 nm resolution.
    pub fn cie1931() -> Self {
        let samples = CIE_1931_2DEG
            .iter()
            .enumerate()
            .map(|(i, w)| CmfSample {
                wavelength_nm: 380.0 + 5.0 * i as f64,
                x_bar: w[0],
                y_bar: w[1],
                z_bar: w[2],
            })
            .collect();
        Self { samples }
    }

    pub fn samples(&self) -> &[CmfSample] {
        &self.samples
    }

    pub fn range(&self) -> (f64, f64) {
        (
            self.samples[0].wavelength_nm,
            self.samples[self.samples.len() - 1].wavelength_nm,
        )
    }

    /// Linearly interpolated tristimulus weights at `wavelength_nm`.
    pub fn tristimulus(&self, wavelength_nm: f64) -> Result<[f64; 3], PhotometryError> {
        let (lo, hi) = self.range();
        if !(wavelength_nm >= lo && wavelength_nm <= hi) {
            return Err(PhotometryError::OutOfGamutRange(wavelength_nm, lo, hi));
        }
        let upper = self
            .samples
            .partition_point(|s| s.wavelength_nm < wavelength_nm)
            .max(1);
        let (a, b) = (&self.samples[upper - 1], &self.samples[upper]);
        let t = (wavelength_nm - a.wavelength_nm) / (b.wavelength_nm - a.wavelength_nm);
        let lerp = |u: f64, v: f64| u + t * (v - u);
        Ok([
            lerp(a.x_bar, b.x_bar),
            lerp(a.y_bar, b.y_bar),
            lerp(a.z_bar, b.z_bar),
        ])
    }
}

/// Apparent 8-bit colour of monochromatic light, normalised to full
/// brightness (brightest channel at 255).
pub fn wavelength_to_rgb(wavelength_nm: f64, table: &CmfTable) -> Result<Rgb, PhotometryError> {
    let xyz = table.tristimulus(wavelength_nm)?;
    let mut linear = [0.0; 3];
    for (out, row) in linear.iter_mut().zip(XYZ_TO_LINEAR_SRGB) {
        *out = (row[0] * xyz[0] + row[1] * xyz[1] + row[2] * xyz[2]).max(0.0);
    }
    let peak = linear.iter().copied().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Ok([0, 0, 0]);
    }
    Ok(linear.map(|c| (255.0 * (c / peak).powf(1.0 / DISPLAY_GAMMA)).round() as u8))
}

/// Camera green response to emission intensity:
/// `round(255 * (1 - exp(-gain * intensity)))`.
///
/// Non-positive gain or intensity reads as dark; non-finite intensity
/// saturates.
pub fn intensity_to_green(intensity: f64, gain: f64) -> u8 {
    if intensity.is_nan() || !(gain > 0.0) || intensity <= 0.0 {
        return 0;
    }
    let response = 1.0 - (-gain * intensity).exp();
    (255.0 * response).round().clamp(0.0, 255.0) as u8
}

/// Default excitation wavelength of the UV LED array.
pub const DEFAULT_EXCITATION_NM: f64 = 400.0;
pub const MIN_STOKES_SHIFT_NM: f64 = 10.0;
pub const MAX_STOKES_SHIFT_NM: f64 = 150.0;

/// A fluorophore emitting at `emission_nm` when excited at `excitation_nm`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmissionModel {
    excitation_nm: f64,
    emission_nm: f64,
    intensity: f64,
}

impl EmissionModel {
    pub fn new(excitation_nm: f64, emission_nm: f64, intensity: f64) -> Result<Self, PhotometryError> {
        let shift = emission_nm - excitation_nm;
        if !(MIN_STOKES_SHIFT_NM..=MAX_STOKES_SHIFT_NM).contains(&shift) {
            return Err(PhotometryError::InvalidStokesShift {
                excitation: excitation_nm,
                emission: emission_nm,
            });
        }
        if !(intensity.is_finite() && intensity >= 0.0) {
            return Err(PhotometryError::InvalidIntensity(intensity));
        }
        Ok(Self {
            excitation_nm,
            emission_nm,
            intensity,
        })
    }

    pub fn excitation_nm(&self) -> f64 {
        self.excitation_nm
    }

    pub fn emission_nm(&self) -> f64 {
        self.emission_nm
    }

    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    pub fn stokes_shift_nm(&self) -> f64 {
        self.emission_nm - self.excitation_nm
    }

    /// Hue of the emission line scaled by the camera response at this
    /// intensity.
    pub fn apparent_rgb(&self, table: &CmfTable, gain: f64) -> Result<Rgb, PhotometryError> {
        let hue = wavelength_to_rgb(self.emission_nm, table)?;
        let level = f64::from(intensity_to_green(self.intensity, gain)) / 255.0;
        Ok(hue.map(|c| (f64::from(c) * level).round() as u8))
    }
}

/// Relative width of the wall ring annulus, measured inward from the disk edge.
pub const WALL_RING_WIDTH: f64 = 0.15;
pub const MAX_NOISE_STDDEV: f64 = 30.0;

/// Geometry and levels of a synthetic single-well photograph.
///
/// Noise: a ChaCha8 stream seeded with `seed` drives a standard normal
/// sampler; one draw per channel (r, g, b) per pixel in row-major order,
/// scaled by `noise_stddev`, added to the nominal level, rounded and clamped
/// to [0, 255]. No draws are made when `noise_stddev` is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderSpec {
    pub width: u32,
    pub height: u32,
    pub disk_center: (f64, f64),
    pub disk_radius: f64,
    pub interior_rgb: Rgb,
    pub wall_ring_rgb: Option<Rgb>,
    pub noise_stddev: f64,
    pub seed: u64,
}

impl Default for RenderSpec {
    fn default() -> Self {
        Self {
            width: 200,
            height: 200,
            disk_center: (100.0, 100.0),
            disk_radius: 50.0,
            interior_rgb: [0, 200, 0],
            wall_ring_rgb: None,
            noise_stddev: 0.0,
            seed: 42,
        }
    }
}

impl RenderSpec {
    pub fn validate(&self) -> Result<(), PhotometryError> {
        let fail = |msg: String| Err(PhotometryError::SpecOutOfBounds(msg));
        if self.width < MIN_DIMENSION || self.height < MIN_DIMENSION {
            return fail(format!(
                "frame {}x{} is smaller than {MIN_DIMENSION} px",
                self.width, self.height
            ));
        }
        if self.width > crate::imaging::MAX_DIMENSION || self.height > crate::imaging::MAX_DIMENSION {
            return fail(format!("frame {}x{} is too large", self.width, self.height));
        }
        let (cx, cy) = self.disk_center;
        let r = self.disk_radius;
        if !(cx.is_finite() && cy.is_finite() && r.is_finite() && r > 0.0) {
            return fail("disk center and radius must be finite, radius positive".into());
        }
        let inside = cx - r >= -0.5
            && cy - r >= -0.5
            && cx + r <= f64::from(self.width) - 0.5
            && cy + r <= f64::from(self.height) - 0.5;
        if !inside {
            return fail(format!(
                "disk at ({cx}, {cy}) radius {r} leaves the {}x{} frame",
                self.width, self.height
            ));
        }
        if !(self.noise_stddev >= 0.0 && self.noise_stddev <= MAX_NOISE_STDDEV) {
            return fail(format!(
                "noise stddev {} outside [0, {MAX_NOISE_STDDEV}]",
                self.noise_stddev
            ));
        }
        Ok(())
    }

    /// Radius inside which pixels carry `interior_rgb`.
    pub fn interior_radius(&self) -> f64 {
        match self.wall_ring_rgb {
            Some(_) => self.disk_radius * (1.0 - WALL_RING_WIDTH),
            None => self.disk_radius,
        }
    }

    /// Number of pixels painted with the interior level.
    pub fn interior_pixel_count(&self) -> u64 {
        let (cx, cy) = self.disk_center;
        let r = self.interior_radius();
        let mut n = 0;
        for y in 0..self.height {
            for x in 0..self.width {
                let (dx, dy) = (f64::from(x) - cx, f64::from(y) - cy);
                if dx * dx + dy * dy <= r * r {
                    n += 1;
                }
            }
        }
        n
    }
}

/// Renders `spec` deterministically.
pub fn render_well_image(spec: &RenderSpec) -> Result<RasterImage, PhotometryError> {
    spec.validate()?;
    let (cx, cy) = spec.disk_center;
    let outer2 = spec.disk_radius * spec.disk_radius;
    let inner = spec.interior_radius();
    let inner2 = inner * inner;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let sigma = spec.noise_stddev;

    let mut pixels = Vec::with_capacity(spec.width as usize * spec.height as usize);
    for y in 0..spec.height {
        for x in 0..spec.width {
            let (dx, dy) = (f64::from(x) - cx, f64::from(y) - cy);
            let d2 = dx * dx + dy * dy;
            let base = if d2 <= inner2 {
                spec.interior_rgb
            } else if d2 <= outer2 {
                spec.wall_ring_rgb.unwrap_or(spec.interior_rgb)
            } else {
                [0, 0, 0]
            };
            let pixel = if sigma > 0.0 {
                base.map(|c| {
                    let noisy = f64::from(c) + sigma * normal.sample(&mut rng);
                    noisy.round().clamp(0.0, 255.0) as u8
                })
            } else {
                base
            };
            pixels.push(pixel);
        }
    }
    Ok(RasterImage::new(spec.width, spec.height, pixels).expect("sized from spec"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{extract_profile, WellRoi};
    use proptest::prelude::*;

    #[test]
    fn cie_table_shape() {
        let table = CmfTable::cie1931();
        assert_eq!(table.samples().len(), 81);
        assert_eq!(table.range(), (380.0, 780.0));
        let peak = table
            .samples()
            .iter()
            .max_by(|a, b| a.y_bar.total_cmp(&b.y_bar))
            .unwrap();
        assert!((550.0..=560.0).contains(&peak.wavelength_nm));
        // equal-energy white: the three functions integrate to the same area
        let sums = table.samples().iter().fold([0.0; 3], |acc, s| {
            [acc[0] + s.x_bar, acc[1] + s.y_bar, acc[2] + s.z_bar]
        });
        assert!((sums[1] - 21.371).abs() < 0.01, "{sums:?}");
        assert!((sums[0] - sums[1]).abs() / sums[1] < 0.002, "{sums:?}");
        assert!((sums[2] - sums[1]).abs() / sums[1] < 0.002, "{sums:?}");
        assert!(CmfTable::new(table.samples().to_vec()).is_ok());
    }

    #[test]
    fn table_validation() {
        let s = |w, y| CmfSample {
            wavelength_nm: w,
            x_bar: 0.0,
            y_bar: y,
            z_bar: 0.0,
        };
        assert!(CmfTable::new(vec![s(400.0, 0.1)]).is_err());
        assert!(CmfTable::new(vec![s(400.0, 0.1), s(400.0, 0.2)]).is_err());
        assert!(CmfTable::new(vec![s(400.0, 0.1), s(405.0, -0.2)]).is_err());
    }

    #[test]
    fn interpolation_hits_table_rows_and_midpoints() {
        let table = CmfTable::cie1931();
        assert_eq!(table.tristimulus(555.0).unwrap(), [0.512050, 1.0, 0.005750]);
        assert_eq!(table.tristimulus(380.0).unwrap(), [0.001368, 0.000039, 0.006450]);
        let mid = table.tristimulus(552.5).unwrap();
        assert!((mid[1] - (0.994950 + 1.0) / 2.0).abs() < 1e-12);
    }

    /// Independent route: direct lookup at a tabulated wavelength, matrix
    /// written out by hand.
    fn oracle_rgb(row: usize) -> [f64; 3] {
        let [x, y, z] = CIE_1931_2DEG[row];
        [
            (3.2406 * x - 1.5372 * y - 0.4986 * z).max(0.0),
            (-0.9689 * x + 1.8758 * y + 0.0415 * z).max(0.0),
            (0.0557 * x - 0.2040 * y + 1.0570 * z).max(0.0),
        ]
    }

    #[test]
    fn dominant_channels() {
        let table = CmfTable::cie1931();
        let [r, g, b] = wavelength_to_rgb(400.0, &table).unwrap();
        assert!(b > g && b > r, "{r} {g} {b}");
        let [r, g, b] = wavelength_to_rgb(520.0, &table).unwrap();
        assert!(g > r && g > b, "{r} {g} {b}");
        let [r, g, b] = wavelength_to_rgb(700.0, &table).unwrap();
        assert!(r > g && r > b, "{r} {g} {b}");

        for (nm, row) in [(400.0, 4), (520.0, 28), (700.0, 64)] {
            let lin = oracle_rgb(row);
            let oracle_dominant = (0..3).max_by(|&a, &b| lin[a].total_cmp(&lin[b])).unwrap();
            let rgb = wavelength_to_rgb(nm, &table).unwrap();
            assert_eq!(rgb[oracle_dominant], 255);
        }
    }

    #[test]
    fn out_of_range_wavelengths() {
        let table = CmfTable::cie1931();
        for nm in [379.9, 780.1, f64::NAN, -1.0] {
            assert!(matches!(
                wavelength_to_rgb(nm, &table),
                Err(PhotometryError::OutOfGamutRange(..))
            ));
        }
    }

    #[test]
    fn green_response_values() {
        assert_eq!(intensity_to_green(0.0, 3.0), 0);
        assert_eq!(intensity_to_green(f64::INFINITY, 1.0), 255);
        assert_eq!(intensity_to_green(1e6, 1.0), 255);
        assert_eq!(intensity_to_green(1.0, 1.0), 161);
        assert_eq!(intensity_to_green(1.0, 0.0), 0);
    }

    #[test]
    fn stokes_shift_rules() {
        assert!(EmissionModel::new(400.0, 400.0, 1.0).is_err());
        assert!(EmissionModel::new(400.0, 390.0, 1.0).is_err());
        assert!(EmissionModel::new(400.0, 405.0, 1.0).is_err());
        assert!(EmissionModel::new(400.0, 551.0, 1.0).is_err());
        assert!(EmissionModel::new(400.0, 510.0, -1.0).is_err());
        let fluorescein = EmissionModel::new(DEFAULT_EXCITATION_NM, 520.0, 1.0).unwrap();
        assert_eq!(fluorescein.stokes_shift_nm(), 120.0);
        let rgb = fluorescein.apparent_rgb(&CmfTable::cie1931(), 1.0).unwrap();
        assert_eq!(rgb[1], 161);
        assert!(rgb[1] > rgb[0] && rgb[1] > rgb[2]);
    }

    #[test]
    fn noiseless_render_is_exact() {
        let spec = RenderSpec::default();
        let img = render_well_image(&spec).unwrap();
        let (cx, cy) = spec.disk_center;
        for y in 0..img.height() {
            for x in 0..img.width() {
                let d2 = (f64::from(x) - cx).powi(2) + (f64::from(y) - cy).powi(2);
                let expect = if d2 <= 2500.0 { [0, 200, 0] } else { [0, 0, 0] };
                assert_eq!(img.pixel(x, y), expect);
            }
        }
        let roi = WellRoi::new(cx, cy, spec.disk_radius, 1.0).unwrap();
        assert_eq!(extract_profile(&img, &roi).unwrap().mean, [0.0, 200.0, 0.0]);
    }

    #[test]
    fn render_is_deterministic() {
        let spec = RenderSpec {
            noise_stddev: 7.0,
            seed: 9,
            wall_ring_rgb: Some([30, 250, 30]),
            ..RenderSpec::default()
        };
        assert_eq!(render_well_image(&spec).unwrap(), render_well_image(&spec).unwrap());
        let other = RenderSpec { seed: 10, ..spec.clone() };
        assert_ne!(render_well_image(&spec).unwrap(), render_well_image(&other).unwrap());
    }

    #[test]
    fn noisy_interior_mean_is_unbiased() {
        // sigma 5 over n pixels: 3 sigma / sqrt(n) < 0.5 once n > 900
        let spec = RenderSpec {
            width: 260,
            height: 260,
            disk_center: (130.0, 130.0),
            disk_radius: 60.0,
            interior_rgb: [0, 150, 0],
            noise_stddev: 5.0,
            seed: 1234,
            ..RenderSpec::default()
        };
        let n = spec.interior_pixel_count();
        assert!(n >= 10_000, "{n}");
        let bound = 3.0 * spec.noise_stddev / (n as f64).sqrt();
        assert!(bound <= 0.5);
        let img = render_well_image(&spec).unwrap();
        let (cx, cy) = spec.disk_center;
        let mut sum = 0.0;
        for y in 0..img.height() {
            for x in 0..img.width() {
                if (f64::from(x) - cx).powi(2) + (f64::from(y) - cy).powi(2) <= 3600.0 {
                    sum += f64::from(img.pixel(x, y)[1]);
                }
            }
        }
        let mean = sum / n as f64;
        assert!((mean - 150.0).abs() <= bound, "{mean}");
    }

    #[test]
    fn spec_bounds() {
        let off = RenderSpec {
            disk_center: (20.0, 100.0),
            ..RenderSpec::default()
        };
        assert!(matches!(render_well_image(&off), Err(PhotometryError::SpecOutOfBounds(_))));
        let loud = RenderSpec {
            noise_stddev: 31.0,
            ..RenderSpec::default()
        };
        assert!(render_well_image(&loud).is_err());
        let tiny = RenderSpec {
            width: 16,
            ..RenderSpec::default()
        };
        assert!(render_well_image(&tiny).is_err());
    }

    proptest! {
        #[test]
        fn rgb_channels_normalised(nm in 380.0f64..=780.0) {
            let rgb = wavelength_to_rgb(nm, &CmfTable::cie1931()).unwrap();
            prop_assert!(rgb.contains(&255) || rgb == [0, 0, 0]);
        }

        #[test]
        fn green_response_is_monotone(a in 0.0f64..50.0, b in 0.0f64..50.0, gain in 0.01f64..10.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(intensity_to_green(lo, gain) <= intensity_to_green(hi, gain));
        }

        #[test]
        fn noiseless_oracle_closure(
            cx in 60.0f64..140.0,
            cy in 60.0f64..140.0,
            r in 8.0f64..50.0,
            rgb in any::<[u8; 3]>(),
        ) {
            let spec = RenderSpec {
                disk_center: (cx, cy),
                disk_radius: r,
                interior_rgb: rgb,
                ..RenderSpec::default()
            };
            let img = render_well_image(&spec).unwrap();
            let roi = WellRoi::new(cx, cy, r, 1.0).unwrap();
            let p = extract_profile(&img, &roi).unwrap();
            prop_assert_eq!(p.mean, rgb.map(f64::from));
        }
    }
}
