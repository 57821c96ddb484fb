//! CSV and SVG emitters and the series CSV reader.

use std::fmt::Write as _;

use thiserror::Error;

use crate::imaging::RgbProfile;
use crate::plate::{RoleKind, SampleLevel, WellRole};
use crate::quant::{ComparisonReport, DetectionResult, MeasurementSeries, SeriesRecord};

pub const SERIES_HEADER: [&str; 4] = ["well_index", "role", "concentration_molar", "reading"];
pub const SATURATION_COLUMN: &str = "saturation_fraction";
pub const PROFILE_HEADER: &str =
    "well_index,mean_r,mean_g,mean_b,median_g,stddev_g,pixel_count,saturation_fraction";
pub const DETECTION_HEADER: &str = "well_index,reading,relative_excess,detected";
pub const COMPARISON_HEADER: &str =
    "well_index,device_reading,reference_reading,device_rank,reference_rank";

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct CsvError {
    pub line: u64,
    pub message: String,
}

/// Series CSV: `well_index,role,concentration_molar,reading`, optionally
/// followed by a `saturation_fraction` column. Lines starting with `#` are
/// comments. Output is deterministic.
pub fn write_series_csv(series: &MeasurementSeries, comments: &[&str]) -> String {
    let with_saturation = series
        .records()
        .iter()
        .any(|r| r.saturation_fraction.is_some());
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    out.push_str(&SERIES_HEADER.join(","));
    if with_saturation {
        let _ = write!(out, ",{SATURATION_COLUMN}");
    }
    out.push('\n');
    for r in series.records() {
        let conc = r.role.level().map(SampleLevel::to_field).unwrap_or_default();
        let _ = write!(out, "{},{},{},{}", r.well_index, r.role.kind(), conc, r.reading);
        if with_saturation {
            match r.saturation_fraction {
                Some(s) => {
                    let _ = write!(out, ",{s}");
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

/// Parses a series CSV. Errors carry the 1-based line number.
pub fn parse_series_csv(instrument: &str, text: &str) -> Result<MeasurementSeries, CsvError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());

    let mut rows = reader.records();
    let header = loop {
        match rows.next() {
            Some(Ok(row)) if row.iter().all(str::is_empty) => continue,
            Some(Ok(row)) => break row,
            Some(Err(e)) => return Err(csv_error(&e)),
            None => {
                return Err(CsvError {
                    line: 1,
                    message: "missing header".into(),
                })
            }
        }
    };
    let header_line = header.position().map_or(1, |p| p.line());
    let names: Vec<&str> = header.iter().collect();
    let with_saturation = match names.as_slice() {
        [a, b, c, d] if [*a, *b, *c, *d] == SERIES_HEADER => false,
        [a, b, c, d, e] if [*a, *b, *c, *d] == SERIES_HEADER && *e == SATURATION_COLUMN => true,
        _ => {
            return Err(CsvError {
                line: header_line,
                message: format!(
                    "expected header `{}`, found `{}`",
                    SERIES_HEADER.join(","),
                    names.join(",")
                ),
            })
        }
    };
    let width = if with_saturation { 5 } else { 4 };

    let mut records = Vec::new();
    for row in rows {
        let row = row.map_err(|e| csv_error(&e))?;
        let line = row.position().map_or(0, |p| p.line());
        let err = |message: String| CsvError { line, message };
        if row.iter().all(str::is_empty) {
            continue;
        }
        if row.len() != width {
            return Err(err(format!("expected {width} fields, found {}", row.len())));
        }
        let well_index: u32 = row[0]
            .parse()
            .map_err(|_| err(format!("invalid well_index {:?}", &row[0])))?;
        let kind = RoleKind::parse(&row[1]).ok_or_else(|| err(format!("unknown role {:?}", &row[1])))?;
        let role = match (kind, row[2].is_empty()) {
            (RoleKind::Sample, false) => {
                WellRole::Sample(SampleLevel::parse(&row[2]).map_err(|e| err(e.to_string()))?)
            }
            (RoleKind::Sample, true) => return Err(err("sample row needs a concentration".into())),
            (_, false) => return Err(err(format!("{kind} row must leave concentration empty"))),
            (RoleKind::Control, true) => WellRole::Control,
            (RoleKind::Blank, true) => WellRole::Blank,
        };
        let reading: f64 = row[3]
            .parse()
            .map_err(|_| err(format!("invalid reading {:?}", &row[3])))?;
        let saturation_fraction = if with_saturation && !row[4].is_empty() {
            Some(
                row[4]
                    .parse::<f64>()
                    .map_err(|_| err(format!("invalid saturation_fraction {:?}", &row[4])))?,
            )
        } else {
            None
        };
        records.push((
            line,
            SeriesRecord {
                well_index,
                role,
                reading,
                saturation_fraction,
            },
        ));
    }
    let last_line = records.last().map_or(header_line, |(l, _)| *l);
    let records = records.into_iter().map(|(_, r)| r).collect();
    MeasurementSeries::new(instrument, records).map_err(|e| CsvError {
        line: last_line,
        message: e.to_string(),
    })
}

fn csv_error(e: &csv::Error) -> CsvError {
    CsvError {
        line: e.position().map_or(0, |p| p.line()),
        message: e.to_string(),
    }
}

pub fn profile_csv_row(well_index: u32, p: &RgbProfile) -> String {
    format!(
        "{well_index},{:.2},{:.2},{:.2},{:.2},{:.2},{},{:.4}",
        p.mean[0], p.mean[1], p.mean[2], p.median[1], p.stddev[1], p.pixel_count, p.saturation_fraction
    )
}

pub fn write_profile_csv(profiles: &[(u32, RgbProfile)]) -> String {
    let mut out = format!("{PROFILE_HEADER}\n");
    for (well, p) in profiles {
        out.push_str(&profile_csv_row(*well, p));
        out.push('\n');
    }
    out
}

pub fn write_detection_csv(result: &DetectionResult) -> String {
    let mut out = format!("{DETECTION_HEADER}\n");
    for w in &result.per_well {
        let _ = writeln!(
            out,
            "{},{},{:.6},{}",
            w.well_index, w.reading, w.relative_excess, w.detected
        );
    }
    out
}

/// `lod=1e-7`, `lod=n/100` or `lod=none`.
pub fn lod_summary(result: &DetectionResult) -> String {
    match &result.lod {
        Some(level) => format!("lod={}", level.to_field()),
        None => "lod=none".to_string(),
    }
}

pub fn write_comparison_csv(report: &ComparisonReport) -> String {
    let mut out = format!("{COMPARISON_HEADER}\n");
    for w in &report.per_well {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            w.well_index, w.device_reading, w.reference_reading, w.device_rank, w.reference_rank
        );
    }
    out
}

pub fn comparison_summary(report: &ComparisonReport) -> String {
    format!("rho={:.3} n={}", report.rho, report.n)
}

/// One plotted well.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotPoint {
    pub well_index: u32,
    /// log10 concentration; blank and control wells sit one decade past
    /// their predecessor.
    pub x: f64,
    pub y: f64,
    pub role: RoleKind,
    pub detected: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub label: String,
    pub points: Vec<PlotPoint>,
}

impl PlotSeries {
    /// Points in well order. Sample wells sit at their log10 level.
    pub fn from_measurements(series: &MeasurementSeries, detection: Option<&DetectionResult>) -> Self {
        let first_sample_x = series
            .records()
            .iter()
            .find_map(|r| r.role.level().map(SampleLevel::log10_position));
        let mut previous: Option<f64> = None;
        let mut points = Vec::new();
        for r in series.records() {
            let x = match r.role.level() {
                Some(level) => level.log10_position(),
                None => match previous {
                    Some(p) => p - 1.0,
                    None => first_sample_x.map_or(0.0, |f| f + 1.0),
                },
            };
            previous = Some(x);
            let detected = detection.and_then(|d| d.well(r.well_index)).map(|w| w.detected);
            points.push(PlotPoint {
                well_index: r.well_index,
                x,
                y: r.reading,
                role: r.role.kind(),
                detected,
            });
        }
        Self {
            label: series.instrument().to_string(),
            points,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlotError {
    #[error("a plot takes one or two series, got {0}")]
    SeriesCount(usize),
    #[error("series {0:?} has no points")]
    Empty(String),
    #[error("series {label:?}: x must decrease along well order (well {well})")]
    NotDecreasing { label: String, well: u32 },
}

/// Log-concentration plot of one or two reading series.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub title: String,
    pub y_label: String,
    pub series: Vec<PlotSeries>,
    /// Paint blank wells grey.
    pub blank_marker: bool,
    /// Horizontal dashed line, e.g. the detection threshold.
    pub threshold: Option<f64>,
}

impl PlotSpec {
    pub fn validate(&self) -> Result<(), PlotError> {
        if !(1..=2).contains(&self.series.len()) {
            return Err(PlotError::SeriesCount(self.series.len()));
        }
        for s in &self.series {
            if s.points.is_empty() {
                return Err(PlotError::Empty(s.label.clone()));
            }
            for pair in s.points.windows(2) {
                if !(pair[1].x < pair[0].x) {
                    return Err(PlotError::NotDecreasing {
                        label: s.label.clone(),
                        well: pair[1].well_index,
                    });
                }
            }
        }
        Ok(())
    }
}

const SVG_WIDTH: f64 = 640.0;
const SVG_HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;
const SERIES_COLORS: [&str; 2] = ["#2ca02c", "#1f77b4"];
const BLANK_COLOR: &str = "#999999";

fn xml_escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Step between y ticks: 1, 2 or 5 times a power of ten.
fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let magnitude = 10f64.powf(raw.log10().floor());
    let m = raw / magnitude;
    let factor = if m <= 1.0 {
        1.0
    } else if m <= 2.0 {
        2.0
    } else if m <= 5.0 {
        5.0
    } else {
        10.0
    };
    factor * magnitude
}

/// SVG 1.1 document. The x axis runs from high concentration on the left to
/// low on the right, matching well order.
pub fn render_svg(spec: &PlotSpec) -> Result<String, PlotError> {
    spec.validate()?;
    let all = spec.series.iter().flat_map(|s| s.points.iter());
    let (mut x_hi, mut x_lo) = (f64::MIN, f64::MAX);
    let (mut y_lo, mut y_hi) = (f64::MAX, f64::MIN);
    for p in all {
        x_hi = x_hi.max(p.x);
        x_lo = x_lo.min(p.x);
        y_lo = y_lo.min(p.y);
        y_hi = y_hi.max(p.y);
    }
    if let Some(t) = spec.threshold {
        y_lo = y_lo.min(t);
        y_hi = y_hi.max(t);
    }
    x_hi += 0.5;
    x_lo -= 0.5;
    if y_hi - y_lo < 1e-9 {
        y_hi += 1.0;
        y_lo -= 1.0;
    }
    let step = nice_step(y_hi - y_lo);
    let y_lo = (y_lo / step).floor() * step;
    let y_hi = (y_hi / step).ceil() * step;

    let plot_w = SVG_WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = SVG_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let px = |x: f64| MARGIN_LEFT + (x_hi - x) / (x_hi - x_lo) * plot_w;
    let py = |y: f64| MARGIN_TOP + (y_hi - y) / (y_hi - y_lo) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        SVG_WIDTH / 2.0,
        xml_escape(&spec.title)
    );

    // axes
    let (left, right) = (MARGIN_LEFT, SVG_WIDTH - MARGIN_RIGHT);
    let (top, bottom) = (MARGIN_TOP, SVG_HEIGHT - MARGIN_BOTTOM);
    let _ = writeln!(
        svg,
        r#"<path d="M{left:.2},{top:.2} L{left:.2},{bottom:.2} L{right:.2},{bottom:.2}" fill="none" stroke="black"/>"#
    );
    let mut decade = x_hi.floor();
    while decade >= x_lo.ceil() {
        let x = px(decade);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{bottom:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{}</text>"#,
            bottom + 5.0,
            bottom + 18.0,
            decade as i64
        );
        decade -= 1.0;
    }
    let mut tick = y_lo;
    while tick <= y_hi + step * 1e-9 {
        let y = py(tick);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{left:.2}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            left - 5.0,
            left - 8.0,
            y + 4.0,
            format_tick(tick, step)
        );
        tick += step;
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">log10 concentration (M)</text>"#,
        (left + right) / 2.0,
        SVG_HEIGHT - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        (top + bottom) / 2.0,
        (top + bottom) / 2.0,
        xml_escape(&spec.y_label)
    );

    if let Some(t) = spec.threshold {
        let y = py(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{left:.2}" y1="{y:.2}" x2="{right:.2}" y2="{y:.2}" stroke="#d62728" stroke-dasharray="6,4"/>"##
        );
    }

    for (i, series) in spec.series.iter().enumerate() {
        let color = SERIES_COLORS[i];
        let path: Vec<String> = series
            .points
            .iter()
            .map(|p| format!("{:.2},{:.2}", px(p.x), py(p.y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            path.join(" ")
        );
        for p in &series.points {
            let is_blank = spec.blank_marker && p.role == RoleKind::Blank;
            let stroke = if is_blank { BLANK_COLOR } else { color };
            let fill = match (is_blank, p.detected) {
                (true, _) => BLANK_COLOR,
                (false, Some(false)) => "white",
                _ => color,
            };
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{fill}" stroke="{stroke}"><title>well {} ({}): {}</title></circle>"#,
                px(p.x),
                py(p.y),
                p.well_index,
                p.role,
                p.y
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" fill="{color}" text-anchor="end">{}</text>"#,
            right,
            top + 14.0 * (i as f64 + 1.0),
            xml_escape(&series.label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn format_tick(value: f64, step: f64) -> String {
    let decimals = if step >= 1.0 {
        0
    } else {
        (-step.log10().floor()) as usize
    };
    format!("{value:.decimals$}")
}
