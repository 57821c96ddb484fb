//! The `analyze`, `lod`, `compare`, `render` and `fixtures` commands.
//!
//! Each command reads its inputs, writes its artifacts under the configured
//! output directory and returns the summary line and in-memory results.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::fixtures::{fixture_csv, KNOWN_FIXTURES};
use crate::imaging::{analyze_well_image, ImagingError, RgbProfile};
use crate::photometry::{render_well_image, PhotometryError, RenderSpec};
use crate::plate::PlateLayout;
use crate::quant::{
    compare_with_reference, detect_vs_control, detection_limit, exclude_saturated, ComparisonReport,
    DetectionResult, MeasurementSeries, QuantError, SeriesRecord,
};
use crate::report::{
    comparison_summary, lod_summary, parse_series_csv, render_svg, write_comparison_csv,
    write_detection_csv, write_profile_csv, write_series_csv, CsvError, PlotError, PlotSeries,
    PlotSpec,
};

pub const PROFILES_FILE: &str = "profiles.csv";
pub const SERIES_FILE: &str = "series.csv";
pub const DETECTION_FILE: &str = "detection.csv";
pub const PLOT_FILE: &str = "detection.svg";
pub const COMPARISON_FILE: &str = "comparison.csv";

#[derive(Debug, Error)]
pub enum CommandError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("layout has {expected} wells but {found} images were given; no image for well {missing_well}")]
    MissingImage {
        expected: usize,
        found: usize,
        missing_well: u32,
    },
    #[error("layout has {expected} wells but {found} images were given")]
    TooManyImages { expected: usize, found: usize },
    #[error("well {well} ({path}): cannot read image: {source}")]
    UnreadableImage {
        well: u32,
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("well {well} ({path}): {source}")]
    Image {
        well: u32,
        path: PathBuf,
        #[source]
        source: ImagingError,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: CsvError,
    },
    #[error(transparent)]
    Quant(#[from] QuantError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Plot(#[from] PlotError),
    #[error(transparent)]
    Render(#[from] PhotometryError),
    #[error("unknown fixture {name:?}; known fixtures: {}", KNOWN_FIXTURES.join(", "))]
    UnknownFixture { name: String },
}

fn read_text(path: &Path) -> Result<String, CommandError> {
    fs::read_to_string(path).map_err(|source| CommandError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CommandError> {
    let io = |source| CommandError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io)?;
    }
    fs::write(path, contents).map_err(io)
}

fn instrument_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "series".into())
}

/// Reads and validates a series CSV file.
pub fn load_series(path: &Path) -> Result<MeasurementSeries, CommandError> {
    let text = read_text(path)?;
    parse_series_csv(&instrument_name(path), &text).map_err(|source| CommandError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeOutput {
    pub series: MeasurementSeries,
    pub profiles: Vec<(u32, RgbProfile)>,
    pub profile_csv: String,
    pub series_csv: String,
}

/// Measures one image per layout well (in well order). The reading of each
/// well is its trimmed-mean green value. Writes `profiles.csv` and
/// `series.csv` to the output directory.
pub fn cmd_analyze(
    image_paths: &[PathBuf],
    layout: &PlateLayout,
    config: &RunConfig,
) -> Result<AnalyzeOutput, CommandError> {
    config.validate()?;
    let wells = layout.wells();
    if image_paths.len() < wells.len() {
        return Err(CommandError::MissingImage {
            expected: wells.len(),
            found: image_paths.len(),
            missing_well: wells[image_paths.len()].index,
        });
    }
    if image_paths.len() > wells.len() {
        return Err(CommandError::TooManyImages {
            expected: wells.len(),
            found: image_paths.len(),
        });
    }
    let params = config.segmentation();
    let profiles: Vec<Result<RgbProfile, CommandError>> = wells
        .par_iter()
        .zip(image_paths.par_iter())
        .map(|(well, path)| {
            let bytes = fs::read(path).map_err(|source| CommandError::UnreadableImage {
                well: well.index,
                path: path.clone(),
                source,
            })?;
            analyze_well_image(&bytes, &params).map_err(|source| CommandError::Image {
                well: well.index,
                path: path.clone(),
                source,
            })
        })
        .collect();
    let profiles: Vec<(u32, RgbProfile)> = wells
        .iter()
        .map(|w| w.index)
        .zip(profiles)
        .map(|(well, p)| p.map(|p| (well, p)))
        .collect::<Result<_, _>>()?;

    let records = wells
        .iter()
        .zip(&profiles)
        .map(|(well, (_, profile))| SeriesRecord {
            well_index: well.index,
            role: well.role.clone(),
            reading: profile.green(),
            saturation_fraction: Some(profile.saturation_fraction),
        })
        .collect();
    let series = MeasurementSeries::new("device", records)?;
    let profile_csv = write_profile_csv(&profiles);
    let series_csv = write_series_csv(&series, &[]);
    write_file(&config.output_dir.join(PROFILES_FILE), &profile_csv)?;
    write_file(&config.output_dir.join(SERIES_FILE), &series_csv)?;
    Ok(AnalyzeOutput {
        series,
        profiles,
        profile_csv,
        series_csv,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LodOutput {
    pub series: MeasurementSeries,
    pub result: DetectionResult,
    pub summary: String,
    pub report_csv: String,
    pub svg: String,
}

/// Detection limit of an in-memory series: saturation/range exclusion, then
/// blank-relative detection, or control-relative when there is no blank.
pub fn lod_for_series(series: &MeasurementSeries, config: &RunConfig) -> Result<LodOutput, CommandError> {
    config.validate()?;
    let series = exclude_saturated(series, config.device_max_conc, config.saturation_threshold);
    let criterion = config.criterion();
    let result = if series.blank().is_none() && series.control().is_some() {
        detect_vs_control(&series, &criterion)?
    } else {
        detection_limit(&series, &criterion)?
    };
    let plot = PlotSpec {
        title: format!("{} detection (margin {})", series.instrument(), criterion.margin()),
        y_label: "reading".into(),
        series: vec![PlotSeries::from_measurements(&series, Some(&result))],
        blank_marker: true,
        threshold: Some(result.baseline * (1.0 + criterion.margin())),
    };
    Ok(LodOutput {
        summary: lod_summary(&result),
        report_csv: write_detection_csv(&result),
        svg: render_svg(&plot)?,
        series,
        result,
    })
}

/// `lod` on a series CSV file; writes `detection.csv` and `detection.svg`.
pub fn cmd_lod(series_csv: &Path, config: &RunConfig) -> Result<LodOutput, CommandError> {
    let series = load_series(series_csv)?;
    let out = lod_for_series(&series, config)?;
    write_file(&config.output_dir.join(DETECTION_FILE), &out.report_csv)?;
    write_file(&config.output_dir.join(PLOT_FILE), &out.svg)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareOutput {
    pub report: ComparisonReport,
    pub summary: String,
    pub report_csv: String,
}

/// Rank agreement of two series CSV files; writes `comparison.csv`.
pub fn cmd_compare(
    device_csv: &Path,
    reference_csv: &Path,
    config: &RunConfig,
) -> Result<CompareOutput, CommandError> {
    let device = load_series(device_csv)?;
    let reference = load_series(reference_csv)?;
    let report = compare_with_reference(&device, &reference)?;
    let report_csv = write_comparison_csv(&report);
    write_file(&config.output_dir.join(COMPARISON_FILE), &report_csv)?;
    Ok(CompareOutput {
        summary: comparison_summary(&report),
        report,
        report_csv,
    })
}

/// Series CSV of an embedded fixture.
pub fn cmd_fixtures(name: &str) -> Result<String, CommandError> {
    fixture_csv(name).ok_or_else(|| CommandError::UnknownFixture {
        name: name.to_string(),
    })
}

/// Renders a synthetic well and writes it as PNG. Returns the PNG bytes.
pub fn cmd_render(spec: &RenderSpec, output: &Path) -> Result<Vec<u8>, CommandError> {
    let png = render_well_image(spec)?.to_png();
    write_file(output, &png)?;
    Ok(png)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plate::fluorescein_layout;

    #[test]
    fn unknown_fixture_lists_known_names() {
        let err = cmd_fixtures("bogus").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("victor-fluorescein") && msg.contains("device-fluorescein"), "{msg}");
    }

    #[test]
    fn arity_errors_name_the_missing_well() {
        let dir = tempfile::tempdir().unwrap();
        let config = RunConfig {
            output_dir: dir.path().to_path_buf(),
            ..RunConfig::default()
        };
        let paths: Vec<PathBuf> = (0..11).map(|i| dir.path().join(format!("{i}.png"))).collect();
        match cmd_analyze(&paths, &fluorescein_layout(), &config) {
            Err(CommandError::MissingImage { missing_well, .. }) => assert_eq!(missing_well, 12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn control_only_series_uses_control_baseline() {
        let layout = crate::plate::gfp_layout("m").unwrap();
        let readings = [50.0, 40.0, 30.0, 20.0, 10.0, 25.0, 5.0];
        let series = MeasurementSeries::from_layout("gfp", &layout, &readings).unwrap();
        let records: Vec<_> = series
            .records()
            .iter()
            .filter(|r| r.role != crate::plate::WellRole::Blank)
            .cloned()
            .collect();
        let no_blank = MeasurementSeries::new("gfp", records).unwrap();
        let out = lod_for_series(&no_blank, &RunConfig::default()).unwrap();
        assert_eq!(out.summary, "lod=m/100");
        // with a blank the blank wins
        let out = lod_for_series(&series, &RunConfig::default()).unwrap();
        assert_eq!(out.result.baseline_well, 7);
    }
}
