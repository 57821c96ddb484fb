//! Fluorescence quantification from photographs of well-plate wells.
//!
//! The pipeline:
//!
//! 1. [`plate`] describes the row: dilution series, controls, blanks.
//! 2. [`imaging`] decodes one photo per well, finds the well and reduces it
//!    to an [`imaging::RgbProfile`]; the green trimmed mean is the reading.
//! 3. [`quant`] turns readings into detection decisions and a limit of
//!    detection, checks cross-group ordering and ranks a device against a
//!    reference plate reader.
//! 4. [`report`] and [`commands`] read and write the CSV/SVG artifacts.
//!
//! [`photometry`] renders synthetic wells with known levels; the imaging
//! tests measure against it.

pub mod commands;
pub mod config;
pub mod fixtures;
pub mod imaging;
pub mod photometry;
pub mod plate;
pub mod quant;
pub mod report;

pub use config::RunConfig;
pub use imaging::{analyze_well_image, RasterImage, RgbProfile, SegmentationParams, WellRoi};
pub use plate::{MolarConcentration, PlateLayout, RelativeFactor, SampleLevel, WellRole};
pub use quant::{DetectionCriterion, DetectionResult, MeasurementSeries, SeriesRecord};
