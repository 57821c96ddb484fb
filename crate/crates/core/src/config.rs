//! Run configuration: defaults, a flat `key = value` file, then CLI flags.

use std::path::PathBuf;

use thiserror::Error;

use crate::imaging::{SegmentationParams, DEFAULT_THRESHOLD_PERCENTILE, DEFAULT_WALL_EXCLUSION};
use crate::plate::MolarConcentration;
use crate::quant::{DetectionCriterion, DEFAULT_MARGIN, DEFAULT_SATURATION_THRESHOLD};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("config line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{key} = {value} is outside {range}")]
    OutOfRange {
        key: &'static str,
        value: f64,
        range: &'static str,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub margin: f64,
    pub threshold_percentile: f64,
    pub wall_exclusion: f64,
    pub device_max_conc: Option<MolarConcentration>,
    pub saturation_threshold: f64,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            margin: DEFAULT_MARGIN,
            threshold_percentile: DEFAULT_THRESHOLD_PERCENTILE,
            wall_exclusion: DEFAULT_WALL_EXCLUSION,
            device_max_conc: None,
            saturation_threshold: DEFAULT_SATURATION_THRESHOLD,
            output_dir: PathBuf::from("."),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let check = |key, value: f64, ok: bool, range| {
            if ok {
                Ok(())
            } else {
                Err(ConfigError::OutOfRange { key, value, range })
            }
        };
        check("margin", self.margin, self.margin > 0.0 && self.margin < 1.0, "(0, 1)")?;
        check(
            "percentile",
            self.threshold_percentile,
            self.threshold_percentile > 0.0 && self.threshold_percentile < 1.0,
            "(0, 1)",
        )?;
        check(
            "wall_exclusion",
            self.wall_exclusion,
            self.wall_exclusion > 0.0 && self.wall_exclusion <= 1.0,
            "(0, 1]",
        )?;
        check(
            "saturation_threshold",
            self.saturation_threshold,
            (0.0..=1.0).contains(&self.saturation_threshold),
            "[0, 1]",
        )
    }

    pub fn criterion(&self) -> DetectionCriterion {
        DetectionCriterion::new(self.margin, true).unwrap_or_default()
    }

    pub fn segmentation(&self) -> SegmentationParams {
        SegmentationParams {
            threshold_percentile: self.threshold_percentile,
            wall_exclusion: self.wall_exclusion,
        }
    }
}

/// Values that override a [`RunConfig`]; unset fields leave it alone.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigOverrides {
    pub margin: Option<f64>,
    pub threshold_percentile: Option<f64>,
    pub wall_exclusion: Option<f64>,
    pub device_max_conc: Option<MolarConcentration>,
    pub saturation_threshold: Option<f64>,
    pub output_dir: Option<PathBuf>,
}

impl ConfigOverrides {
    pub fn apply_to(&self, config: &mut RunConfig) {
        if let Some(v) = self.margin {
            config.margin = v;
        }
        if let Some(v) = self.threshold_percentile {
            config.threshold_percentile = v;
        }
        if let Some(v) = self.wall_exclusion {
            config.wall_exclusion = v;
        }
        if let Some(v) = self.device_max_conc {
            config.device_max_conc = Some(v);
        }
        if let Some(v) = self.saturation_threshold {
            config.saturation_threshold = v;
        }
        if let Some(v) = &self.output_dir {
            config.output_dir = v.clone();
        }
    }
}

/// Parses a flat config file:
///
/// ```text
/// # detection
/// margin = 0.05
/// percentile = 0.9
/// wall_exclusion = 0.8
/// max_conc = 1e-3
/// saturation_threshold = 0.01
/// out = results
/// ```
pub fn parse_config_file(text: &str) -> Result<ConfigOverrides, ConfigError> {
    let mut out = ConfigOverrides::default();
    for (number, raw) in text.lines().enumerate() {
        let line = number + 1;
        let syntax = |message: String| ConfigError::Syntax { line, message };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| syntax(format!("expected `key = value`, found {content:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        let number = || -> Result<f64, ConfigError> {
            value
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| syntax(format!("{key}: invalid number {value:?}")))
        };
        match key {
            "margin" => out.margin = Some(number()?),
            "percentile" | "threshold_percentile" => out.threshold_percentile = Some(number()?),
            "wall_exclusion" | "wall-exclusion" => out.wall_exclusion = Some(number()?),
            "saturation_threshold" | "saturation-threshold" => {
                out.saturation_threshold = Some(number()?)
            }
            "max_conc" | "max-conc" | "device_max_conc" => {
                out.device_max_conc = Some(
                    MolarConcentration::parse_molar(value).map_err(|e| syntax(e.to_string()))?,
                )
            }
            "out" | "output_dir" => {
                if value.is_empty() {
                    return Err(syntax("out: empty path".into()));
                }
                out.output_dir = Some(PathBuf::from(value))
            }
            other => return Err(syntax(format!("unknown key {other:?}"))),
        }
    }
    Ok(out)
}
