//! Detection decisions over per-well readings.
//!
//! Everything here is baseline-relative: a well counts as detected when its
//! reading exceeds the blank (or control) by a relative margin, so the same
//! rule applies to photomultiplier counts and 8-bit green values alike.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::plate::{check_samples_decreasing, MolarConcentration, PlateLayout, RoleKind, SampleLevel, WellRole};

pub const DEFAULT_MARGIN: f64 = 0.05;
pub const DEFAULT_SATURATION_THRESHOLD: f64 = 0.01;
pub const MIN_COMPARISON_WELLS: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantError {
    #[error("invalid measurement series: {0}")]
    InvalidSeries(String),
    #[error("margin must be in (0, 1), got {0}")]
    InvalidMargin(f64),
    #[error("series has no blank well")]
    NoBlank,
    #[error("series has no control well")]
    NoControl,
    #[error("blank reading must be positive, got {0}")]
    NonPositiveBlank(f64),
    #[error("control reading must be positive, got {0}")]
    NonPositiveControl(f64),
    #[error("every sample well is excluded")]
    AllExcluded,
    #[error("series shapes differ: {0}")]
    ShapeMismatch(String),
    #[error("only {found} common wells, at least {MIN_COMPARISON_WELLS} required")]
    TooFewCommonWells { found: usize },
    #[error("{0} readings are constant over the common wells; rank correlation is undefined")]
    ConstantReadings(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRecord {
    pub well_index: u32,
    pub role: WellRole,
    pub reading: f64,
    /// Present when the reading came from an image profile.
    pub saturation_fraction: Option<f64>,
}

impl SeriesRecord {
    pub fn new(well_index: u32, role: WellRole, reading: f64) -> Self {
        Self {
            well_index,
            role,
            reading,
            saturation_fraction: None,
        }
    }

    pub fn concentration(&self) -> Option<&SampleLevel> {
        self.role.level()
    }
}

/// Readings from one instrument, one record per well, in well order.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSeries {
    instrument: String,
    records: Vec<SeriesRecord>,
    excluded: BTreeSet<u32>,
}

impl MeasurementSeries {
    pub fn new(instrument: impl Into<String>, records: Vec<SeriesRecord>) -> Result<Self, QuantError> {
        let bad = |msg: String| Err(QuantError::InvalidSeries(msg));
        for pair in records.windows(2) {
            if pair[1].well_index <= pair[0].well_index {
                return bad(format!(
                    "well {} follows well {}; records must be sorted by well index",
                    pair[1].well_index, pair[0].well_index
                ));
            }
        }
        for r in &records {
            if !(r.reading.is_finite() && r.reading >= 0.0) {
                return bad(format!("well {} reading {} is not a non-negative number", r.well_index, r.reading));
            }
            if let Some(s) = r.saturation_fraction {
                if !(0.0..=1.0).contains(&s) {
                    return bad(format!("well {} saturation fraction {s} outside [0, 1]", r.well_index));
                }
            }
        }
        for kind in [RoleKind::Blank, RoleKind::Control] {
            if records.iter().filter(|r| r.role.kind() == kind).count() > 1 {
                return bad(format!("more than one {kind} well"));
            }
        }
        check_samples_decreasing(records.iter().map(|r| (r.well_index, &r.role)))
            .map_err(QuantError::InvalidSeries)?;
        Ok(Self {
            instrument: instrument.into(),
            records,
            excluded: BTreeSet::new(),
        })
    }

    /// Pairs `readings` with the layout's wells in order.
    pub fn from_layout(
        instrument: impl Into<String>,
        layout: &PlateLayout,
        readings: &[f64],
    ) -> Result<Self, QuantError> {
        if readings.len() != layout.len() {
            return Err(QuantError::InvalidSeries(format!(
                "{} readings for a {}-well layout",
                readings.len(),
                layout.len()
            )));
        }
        let records = layout
            .wells()
            .iter()
            .zip(readings)
            .map(|(w, &reading)| SeriesRecord::new(w.index, w.role.clone(), reading))
            .collect();
        Self::new(instrument, records)
    }

    pub fn instrument(&self) -> &str {
        &self.instrument
    }

    pub fn records(&self) -> &[SeriesRecord] {
        &self.records
    }

    pub fn excluded(&self) -> &BTreeSet<u32> {
        &self.excluded
    }

    pub fn is_excluded(&self, well_index: u32) -> bool {
        self.excluded.contains(&well_index)
    }

    pub fn with_excluded(mut self, wells: impl IntoIterator<Item = u32>) -> Self {
        self.excluded.extend(wells);
        self
    }

    pub fn record(&self, well_index: u32) -> Option<&SeriesRecord> {
        self.records.iter().find(|r| r.well_index == well_index)
    }

    fn single(&self, kind: RoleKind) -> Option<&SeriesRecord> {
        self.records.iter().find(|r| r.role.kind() == kind)
    }

    pub fn blank(&self) -> Option<&SeriesRecord> {
        self.single(RoleKind::Blank)
    }

    pub fn control(&self) -> Option<&SeriesRecord> {
        self.single(RoleKind::Control)
    }

    /// Non-excluded sample records, highest concentration first.
    pub fn active_samples(&self) -> impl Iterator<Item = &SeriesRecord> {
        self.records
            .iter()
            .filter(|r| r.role.kind() == RoleKind::Sample && !self.excluded.contains(&r.well_index))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionCriterion {
    margin: f64,
    pub require_contiguity: bool,
}

impl Default for DetectionCriterion {
    fn default() -> Self {
        Self {
            margin: DEFAULT_MARGIN,
            require_contiguity: true,
        }
    }
}

impl DetectionCriterion {
    pub fn new(margin: f64, require_contiguity: bool) -> Result<Self, QuantError> {
        if !(margin > 0.0 && margin < 1.0) {
            return Err(QuantError::InvalidMargin(margin));
        }
        Ok(Self {
            margin,
            require_contiguity,
        })
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WellDetection {
    pub well_index: u32,
    pub reading: f64,
    /// `(reading - baseline) / baseline`.
    pub relative_excess: f64,
    pub detected: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub baseline_well: u32,
    pub baseline: f64,
    /// One entry per non-excluded sample well, in well order.
    pub per_well: Vec<WellDetection>,
    /// Lowest detected concentration on the detected prefix.
    pub lod: Option<SampleLevel>,
}

impl DetectionResult {
    pub fn detected_wells(&self) -> Vec<u32> {
        self.per_well
            .iter()
            .filter(|w| w.detected)
            .map(|w| w.well_index)
            .collect()
    }

    pub fn well(&self, well_index: u32) -> Option<&WellDetection> {
        self.per_well.iter().find(|w| w.well_index == well_index)
    }
}

fn detect_against(
    series: &MeasurementSeries,
    baseline: &SeriesRecord,
    criterion: &DetectionCriterion,
) -> Result<DetectionResult, QuantError> {
    let b = baseline.reading;
    let mut per_well = Vec::new();
    let mut lod = None;
    let mut run_intact = true;
    for record in series.active_samples() {
        let excess = (record.reading - b) / b;
        let passes = excess >= criterion.margin;
        let detected = passes && (run_intact || !criterion.require_contiguity);
        run_intact &= passes;
        if detected {
            lod = record.concentration().cloned();
        }
        per_well.push(WellDetection {
            well_index: record.well_index,
            reading: record.reading,
            relative_excess: excess,
            detected,
        });
    }
    if per_well.is_empty() {
        return Err(QuantError::AllExcluded);
    }
    Ok(DetectionResult {
        baseline_well: baseline.well_index,
        baseline: b,
        per_well,
        lod,
    })
}

/// Detection against the blank (water) well.
pub fn detection_limit(
    series: &MeasurementSeries,
    criterion: &DetectionCriterion,
) -> Result<DetectionResult, QuantError> {
    let blank = series.blank().ok_or(QuantError::NoBlank)?;
    if !(blank.reading > 0.0) {
        return Err(QuantError::NonPositiveBlank(blank.reading));
    }
    detect_against(series, blank, criterion)
}

/// Detection against the non-fluorescent control well.
pub fn detect_vs_control(
    series: &MeasurementSeries,
    criterion: &DetectionCriterion,
) -> Result<DetectionResult, QuantError> {
    let control = series.control().ok_or(QuantError::NoControl)?;
    if !(control.reading > 0.0) {
        return Err(QuantError::NonPositiveControl(control.reading));
    }
    detect_against(series, control, criterion)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrderingValidation {
    pub valid_prefix_len: usize,
    pub first_violation: Option<u32>,
}

/// Checks that the higher-stock group reads strictly above the lower-stock
/// group well by well. Ties are violations.
pub fn validate_group_ordering(
    high: &MeasurementSeries,
    low: &MeasurementSeries,
) -> Result<OrderingValidation, QuantError> {
    let shape = |s: &MeasurementSeries| -> Vec<(u32, RoleKind)> {
        s.records().iter().map(|r| (r.well_index, r.role.kind())).collect()
    };
    if shape(high) != shape(low) {
        return Err(QuantError::ShapeMismatch(format!(
            "{} and {} cover different wells or roles",
            high.instrument(),
            low.instrument()
        )));
    }
    let mut valid_prefix_len = 0;
    for (h, l) in high.records().iter().zip(low.records()) {
        if h.role.kind() != RoleKind::Sample {
            continue;
        }
        if h.reading > l.reading {
            valid_prefix_len += 1;
        } else {
            return Ok(OrderingValidation {
                valid_prefix_len,
                first_violation: Some(h.well_index),
            });
        }
    }
    Ok(OrderingValidation {
        valid_prefix_len,
        first_violation: None,
    })
}

/// Marks wells above the instrument's range, or with too many saturated
/// pixels, as excluded. Readings are kept.
pub fn exclude_saturated(
    series: &MeasurementSeries,
    device_max_conc: Option<MolarConcentration>,
    saturation_threshold: f64,
) -> MeasurementSeries {
    let mut out = series.clone();
    for r in &series.records {
        let over_range = match (device_max_conc, r.concentration()) {
            (Some(max), Some(SampleLevel::Molar(c))) => *c > max,
            _ => false,
        };
        let saturated = r.saturation_fraction.is_some_and(|s| s > saturation_threshold);
        if over_range || saturated {
            out.excluded.insert(r.well_index);
        }
    }
    out
}

/// Average ranks (1-based); tied values share the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end share their mean
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation with average-rank ties. `None` when either
/// side is constant or the inputs differ in length.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparedWell {
    pub well_index: u32,
    pub device_reading: f64,
    pub reference_reading: f64,
    pub device_rank: f64,
    pub reference_rank: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub rho: f64,
    pub n: usize,
    pub per_well: Vec<ComparedWell>,
}

/// Rank agreement between a device series and a reference instrument over
/// their common non-excluded sample and blank wells.
pub fn compare_with_reference(
    device: &MeasurementSeries,
    reference: &MeasurementSeries,
) -> Result<ComparisonReport, QuantError> {
    let usable = |s: &MeasurementSeries, r: &SeriesRecord| {
        matches!(r.role.kind(), RoleKind::Sample | RoleKind::Blank) && !s.is_excluded(r.well_index)
    };
    let mut pairs = Vec::new();
    for d in device.records().iter().filter(|r| usable(device, r)) {
        let Some(r) = reference.record(d.well_index) else {
            continue;
        };
        if !usable(reference, r) {
            continue;
        }
        if r.role.kind() != d.role.kind() {
            return Err(QuantError::ShapeMismatch(format!(
                "well {} is {} in {} but {} in {}",
                d.well_index,
                d.role.kind(),
                device.instrument(),
                r.role.kind(),
                reference.instrument()
            )));
        }
        pairs.push((d.well_index, d.reading, r.reading));
    }
    if pairs.len() < MIN_COMPARISON_WELLS {
        return Err(QuantError::TooFewCommonWells { found: pairs.len() });
    }
    let dev: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let refr: Vec<f64> = pairs.iter().map(|p| p.2).collect();
    let dev_ranks = average_ranks(&dev);
    let ref_ranks = average_ranks(&refr);
    let rho = pearson(&dev_ranks, &ref_ranks).ok_or_else(|| {
        let which = if dev_ranks.iter().all(|&r| r == dev_ranks[0]) {
            device.instrument()
        } else {
            reference.instrument()
        };
        QuantError::ConstantReadings(which.to_string())
    })?;
    let per_well = pairs
        .iter()
        .enumerate()
        .map(|(i, &(well_index, device_reading, reference_reading))| ComparedWell {
            well_index,
            device_reading,
            reference_reading,
            device_rank: dev_ranks[i],
            reference_rank: ref_ranks[i],
        })
        .collect();
    Ok(ComparisonReport {
        rho,
        n: pairs.len(),
        per_well,
    })
}
