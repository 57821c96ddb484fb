//! Plate layouts, molar concentrations and fold-N dilution series.
//!
//! Concentrations are kept on a log10 mol/L scale. Decade values (100 mM is
//! `-1`, 100 pM is `-10`) are integers and stay exact under any power-of-ten
//! dilution, so the eleven-decade fluorescein series never accumulates
//! rounding error.

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

/// Highest well index on a standard 96-well plate.
pub const MAX_WELL_INDEX: u32 = 96;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlateError {
    #[error("dilution fold must be at least 2, got {0}")]
    InvalidFold(u32),
    #[error("dilution series needs at least one member")]
    EmptySeries,
    #[error("concentration must be positive and finite, got {0}")]
    InvalidConcentration(String),
    #[error("relative factor divisor {divisor} overflows or is not a power of fold {fold}")]
    InvalidDivisor { divisor: u64, fold: u32 },
    #[error("invalid relative factor symbol {0:?}")]
    InvalidSymbol(String),
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
}

/// A molar concentration stored as log10(mol/L).
#[derive(Debug, Clone, Copy)]
pub struct MolarConcentration {
    log10_molar: f64,
}

impl MolarConcentration {
    pub fn from_log10(log10_molar: f64) -> Result<Self, PlateError> {
        if !log10_molar.is_finite() {
            return Err(PlateError::InvalidConcentration(log10_molar.to_string()));
        }
        Ok(Self { log10_molar })
    }

    /// Exact decade concentration, `10^decade` mol/L.
    pub fn from_decade(decade: i32) -> Self {
        Self {
            log10_molar: f64::from(decade),
        }
    }

    pub fn from_molar(molar: f64) -> Result<Self, PlateError> {
        if !(molar.is_finite() && molar > 0.0) {
            return Err(PlateError::InvalidConcentration(molar.to_string()));
        }
        Ok(Self {
            log10_molar: snap_log10(molar),
        })
    }

    /// Parses a plain or scientific-notation number in mol/L (`1e-7`,
    /// `2.5E-8`, `0.001`). Decade values come out exact.
    pub fn parse_molar(text: &str) -> Result<Self, PlateError> {
        let text = text.trim();
        let bad = || PlateError::InvalidConcentration(text.to_string());
        let (mantissa, exponent) = match text.find(['e', 'E']) {
            Some(pos) => {
                let exp: i32 = text[pos + 1..].parse().map_err(|_| bad())?;
                (&text[..pos], exp)
            }
            None => (text, 0),
        };
        let mantissa: f64 = mantissa.parse().map_err(|_| bad())?;
        if !(mantissa.is_finite() && mantissa > 0.0) {
            return Err(bad());
        }
        let log10_molar = snap_log10(mantissa) + f64::from(exponent);
        Self::from_log10(log10_molar).map_err(|_| bad())
    }

    pub fn log10_molar(self) -> f64 {
        self.log10_molar
    }

    pub fn molar(self) -> f64 {
        10f64.powf(self.log10_molar)
    }

    /// True when the concentration is an exact power of ten.
    pub fn is_decade(self) -> bool {
        self.log10_molar.fract() == 0.0
    }

    /// Scientific notation as used in CSV and config files: `1e-7`, `2.5e-8`.
    pub fn to_scientific(self) -> String {
        if self.is_decade() {
            return format!("1e{}", self.log10_molar as i64);
        }
        let mut exponent = self.log10_molar.floor();
        let mut mantissa = 10f64.powf(self.log10_molar - exponent);
        let mut digits = format!("{mantissa:.12}");
        if digits.starts_with("10") {
            exponent += 1.0;
            mantissa /= 10.0;
            digits = format!("{mantissa:.12}");
        }
        let digits = digits.trim_end_matches('0').trim_end_matches('.');
        format!("{digits}e{}", exponent as i64)
    }

    /// Divides by `fold^steps`.
    pub fn diluted(self, fold: u32, steps: u32) -> Result<Self, PlateError> {
        if fold < 2 {
            return Err(PlateError::InvalidFold(fold));
        }
        Self::from_log10(self.log10_molar - f64::from(steps) * fold_log10(fold))
    }
}

impl PartialEq for MolarConcentration {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for MolarConcentration {}

impl PartialOrd for MolarConcentration {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MolarConcentration {
    fn cmp(&self, other: &Self) -> Ordering {
        self.log10_molar.total_cmp(&other.log10_molar)
    }
}

impl fmt::Display for MolarConcentration {
    /// Laboratory units: `100 mM`, `10 pM`, `2.5 nM`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const UNITS: [(i32, &str); 6] = [
            (0, "M"),
            (-3, "mM"),
            (-6, "uM"),
            (-9, "nM"),
            (-12, "pM"),
            (-15, "fM"),
        ];
        let (scale, unit) = UNITS
            .iter()
            .copied()
            .find(|&(scale, _)| self.log10_molar >= f64::from(scale) - 1e-9)
            .unwrap_or(UNITS[UNITS.len() - 1]);
        let value = 10f64.powf(self.log10_molar - f64::from(scale));
        let text = format!("{value:.3}");
        let text = text.trim_end_matches('0').trim_end_matches('.');
        write!(f, "{text} {unit}")
    }
}

/// log10 of an integer fold, exact for powers of ten.
fn fold_log10(fold: u32) -> f64 {
    let mut rest = fold;
    let mut decades = 0u32;
    while rest > 1 && rest.is_multiple_of(10) {
        rest /= 10;
        decades += 1;
    }
    if rest == 1 {
        f64::from(decades)
    } else {
        f64::from(fold).log10()
    }
}

/// log10 that returns an exact integer for exact powers of ten.
fn snap_log10(value: f64) -> f64 {
    let raw = value.log10();
    let rounded = raw.round();
    if (raw - rounded).abs() < 1e-12 && 10f64.powi(rounded as i32) == value {
        rounded
    } else {
        raw
    }
}

/// An unquantified stock symbol divided by a whole number, e.g. `m/1000`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RelativeFactor {
    symbol: String,
    divisor: u64,
}

impl RelativeFactor {
    /// The undiluted stock `symbol`.
    pub fn stock(symbol: &str) -> Result<Self, PlateError> {
        Self::with_divisor(symbol, 1)
    }

    /// `symbol / fold^steps`.
    pub fn new(symbol: &str, fold: u32, steps: u32) -> Result<Self, PlateError> {
        if fold < 2 {
            return Err(PlateError::InvalidFold(fold));
        }
        let divisor = u64::from(fold)
            .checked_pow(steps)
            .ok_or(PlateError::InvalidDivisor { divisor: u64::MAX, fold })?;
        Self::with_divisor(symbol, divisor)
    }

    pub fn with_divisor(symbol: &str, divisor: u64) -> Result<Self, PlateError> {
        let valid = !symbol.is_empty()
            && symbol.chars().next().is_some_and(|c| c.is_alphabetic())
            && symbol.chars().all(|c| c.is_alphanumeric() || c == '_');
        if !valid {
            return Err(PlateError::InvalidSymbol(symbol.to_string()));
        }
        if divisor == 0 {
            return Err(PlateError::InvalidDivisor { divisor, fold: 0 });
        }
        Ok(Self {
            symbol: symbol.to_string(),
            divisor,
        })
    }

    /// Parses `m` or `m/1000`.
    pub fn parse(text: &str) -> Result<Self, PlateError> {
        let text = text.trim();
        match text.split_once('/') {
            Some((symbol, divisor)) => {
                let divisor: u64 = divisor
                    .trim()
                    .parse()
                    .map_err(|_| PlateError::InvalidSymbol(text.to_string()))?;
                Self::with_divisor(symbol.trim(), divisor)
            }
            None => Self::stock(text),
        }
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn divisor(&self) -> u64 {
        self.divisor
    }

    /// Number of fold steps from the stock, if the divisor is a power of `fold`.
    pub fn fold_steps(&self, fold: u32) -> Option<u32> {
        if fold < 2 {
            return None;
        }
        let mut rest = self.divisor;
        let mut steps = 0;
        while rest > 1 {
            if !rest.is_multiple_of(u64::from(fold)) {
                return None;
            }
            rest /= u64::from(fold);
            steps += 1;
        }
        Some(steps)
    }

    pub fn diluted(&self, fold: u32, steps: u32) -> Result<Self, PlateError> {
        if fold < 2 {
            return Err(PlateError::InvalidFold(fold));
        }
        let divisor = u64::from(fold)
            .checked_pow(steps)
            .and_then(|d| d.checked_mul(self.divisor))
            .ok_or(PlateError::InvalidDivisor {
                divisor: self.divisor,
                fold,
            })?;
        Self::with_divisor(&self.symbol, divisor)
    }
}

impl fmt::Display for RelativeFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.divisor == 1 {
            write!(f, "{}", self.symbol)
        } else {
            write!(f, "{}/{}", self.symbol, self.divisor)
        }
    }
}

/// Concentration of a sample well: absolute or relative to a symbolic stock.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleLevel {
    Molar(MolarConcentration),
    Relative(RelativeFactor),
}

impl SampleLevel {
    /// Parses either a number in mol/L or a relative factor like `n/100`.
    pub fn parse(text: &str) -> Result<Self, PlateError> {
        let text = text.trim();
        let starts_numeric = text
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_digit() || c == '.' || c == '+' || c == '-');
        if starts_numeric {
            MolarConcentration::parse_molar(text).map(Self::Molar)
        } else {
            RelativeFactor::parse(text).map(Self::Relative)
        }
    }

    pub fn as_molar(&self) -> Option<MolarConcentration> {
        match self {
            Self::Molar(c) => Some(*c),
            Self::Relative(_) => None,
        }
    }

    /// Position on a log10 axis: log10 mol/L, or -log10(divisor) for
    /// relative factors.
    pub fn log10_position(&self) -> f64 {
        match self {
            Self::Molar(c) => c.log10_molar(),
            Self::Relative(r) => -(r.divisor() as f64).log10(),
        }
    }

    /// Representation used in CSV and layout files.
    pub fn to_field(&self) -> String {
        match self {
            Self::Molar(c) => c.to_scientific(),
            Self::Relative(r) => r.to_string(),
        }
    }

    pub fn diluted(&self, fold: u32, steps: u32) -> Result<Self, PlateError> {
        match self {
            Self::Molar(c) => c.diluted(fold, steps).map(Self::Molar),
            Self::Relative(r) => r.diluted(fold, steps).map(Self::Relative),
        }
    }
}

impl PartialOrd for SampleLevel {
    /// Molar levels compare by value; relative levels compare only when they
    /// share a symbol (larger divisor means lower concentration).
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Self::Molar(a), Self::Molar(b)) => Some(a.cmp(b)),
            (Self::Relative(a), Self::Relative(b)) if a.symbol == b.symbol => {
                Some(b.divisor.cmp(&a.divisor))
            }
            _ => None,
        }
    }
}

impl fmt::Display for SampleLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Molar(c) => c.fmt(f),
            Self::Relative(r) => r.fmt(f),
        }
    }
}

impl From<MolarConcentration> for SampleLevel {
    fn from(c: MolarConcentration) -> Self {
        Self::Molar(c)
    }
}

impl From<RelativeFactor> for SampleLevel {
    fn from(r: RelativeFactor) -> Self {
        Self::Relative(r)
    }
}

/// Anything that can be divided by an integer fold.
pub trait Dilutable: Sized {
    fn dilute(&self, fold: u32, steps: u32) -> Result<Self, PlateError>;
}

impl Dilutable for MolarConcentration {
    fn dilute(&self, fold: u32, steps: u32) -> Result<Self, PlateError> {
        self.diluted(fold, steps)
    }
}

impl Dilutable for RelativeFactor {
    fn dilute(&self, fold: u32, steps: u32) -> Result<Self, PlateError> {
        self.diluted(fold, steps)
    }
}

impl Dilutable for SampleLevel {
    fn dilute(&self, fold: u32, steps: u32) -> Result<Self, PlateError> {
        self.diluted(fold, steps)
    }
}

/// `[stock, stock/fold, stock/fold^2, ...]`, `count` members.
pub fn make_dilution_series<C: Dilutable>(
    stock: &C,
    fold: u32,
    count: u32,
) -> Result<Vec<C>, PlateError> {
    if fold < 2 {
        return Err(PlateError::InvalidFold(fold));
    }
    if count == 0 {
        return Err(PlateError::EmptySeries);
    }
    (0..count).map(|step| stock.dilute(fold, step)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum WellRole {
    Sample(SampleLevel),
    Control,
    Blank,
}

impl WellRole {
    pub fn kind(&self) -> RoleKind {
        match self {
            Self::Sample(_) => RoleKind::Sample,
            Self::Control => RoleKind::Control,
            Self::Blank => RoleKind::Blank,
        }
    }

    pub fn level(&self) -> Option<&SampleLevel> {
        match self {
            Self::Sample(level) => Some(level),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RoleKind {
    Sample,
    Control,
    Blank,
}

impl RoleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Sample => "sample",
            Self::Control => "control",
            Self::Blank => "blank",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text.trim().to_ascii_lowercase().as_str() {
            "sample" => Some(Self::Sample),
            "control" => Some(Self::Control),
            "blank" | "water" => Some(Self::Blank),
            _ => None,
        }
    }
}

impl fmt::Display for RoleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Well {
    pub index: u32,
    pub role: WellRole,
}

/// One row of a plate: wells in increasing index order and the dilution fold.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateLayout {
    wells: Vec<Well>,
    fold: u32,
}

impl PlateLayout {
    /// Validates well ordering, the single-blank rule and that samples
    /// decrease in concentration along the row.
    pub fn new(wells: Vec<Well>, fold: u32) -> Result<Self, PlateError> {
        if fold < 2 {
            return Err(PlateError::InvalidFold(fold));
        }
        if wells.is_empty() {
            return Err(PlateError::InvalidLayout("layout has no wells".into()));
        }
        for well in &wells {
            if !(1..=MAX_WELL_INDEX).contains(&well.index) {
                return Err(PlateError::InvalidLayout(format!(
                    "well index {} outside 1..={MAX_WELL_INDEX}",
                    well.index
                )));
            }
        }
        for pair in wells.windows(2) {
            if pair[1].index <= pair[0].index {
                return Err(PlateError::InvalidLayout(format!(
                    "well indices must increase: {} follows {}",
                    pair[1].index, pair[0].index
                )));
            }
        }
        if wells.iter().filter(|w| w.role == WellRole::Blank).count() > 1 {
            return Err(PlateError::InvalidLayout("more than one blank well".into()));
        }
        check_samples_decreasing(wells.iter().map(|w| (w.index, &w.role)))
            .map_err(PlateError::InvalidLayout)?;
        for well in &wells {
            if let WellRole::Sample(SampleLevel::Relative(r)) = &well.role {
                if r.fold_steps(fold).is_none() {
                    return Err(PlateError::InvalidDivisor {
                        divisor: r.divisor(),
                        fold,
                    });
                }
            }
        }
        Ok(Self { wells, fold })
    }

    pub fn wells(&self) -> &[Well] {
        &self.wells
    }

    pub fn fold(&self) -> u32 {
        self.fold
    }

    pub fn len(&self) -> usize {
        self.wells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wells.is_empty()
    }

    pub fn well(&self, index: u32) -> Option<&Well> {
        self.wells.iter().find(|w| w.index == index)
    }

    pub fn role(&self, index: u32) -> Option<&WellRole> {
        self.well(index).map(|w| &w.role)
    }
}

/// Checks that sample levels strictly decrease with well index. Shared with
/// measurement series validation.
pub(crate) fn check_samples_decreasing<'a>(
    roles: impl Iterator<Item = (u32, &'a WellRole)>,
) -> Result<(), String> {
    let mut previous: Option<(u32, &SampleLevel)> = None;
    for (index, role) in roles {
        let WellRole::Sample(level) = role else {
            continue;
        };
        if let Some((prev_index, prev_level)) = previous {
            match level.partial_cmp(prev_level) {
                Some(Ordering::Less) => {}
                Some(_) => {
                    return Err(format!(
                        "sample at well {index} ({level}) is not below well {prev_index} ({prev_level})"
                    ))
                }
                None => {
                    return Err(format!(
                        "sample at well {index} ({level}) is not comparable with well {prev_index} ({prev_level})"
                    ))
                }
            }
        }
        previous = Some((index, level));
    }
    Ok(())
}

/// Fluorescein row: 100 mM stock diluted ten-fold across wells 1-11, water
/// in well 12.
pub fn fluorescein_layout() -> PlateLayout {
    let stock = MolarConcentration::from_decade(-1);
    let series = make_dilution_series(&stock, 10, 11).expect("fixed protocol");
    let mut wells: Vec<Well> = series
        .into_iter()
        .zip(1..)
        .map(|(c, index)| Well {
            index,
            role: WellRole::Sample(c.into()),
        })
        .collect();
    wells.push(Well {
        index: 12,
        role: WellRole::Blank,
    });
    PlateLayout::new(wells, 10).expect("fixed protocol")
}

/// GFP yeast row for stock symbol `group_label`: five ten-fold dilutions,
/// yeast control in well 6, water in well 7.
pub fn gfp_layout(group_label: &str) -> Result<PlateLayout, PlateError> {
    let stock = RelativeFactor::stock(group_label)?;
    let series = make_dilution_series(&stock, 10, 5)?;
    let mut wells: Vec<Well> = series
        .into_iter()
        .zip(1..)
        .map(|(r, index)| Well {
            index,
            role: WellRole::Sample(r.into()),
        })
        .collect();
    wells.push(Well {
        index: 6,
        role: WellRole::Control,
    });
    wells.push(Well {
        index: 7,
        role: WellRole::Blank,
    });
    PlateLayout::new(wells, 10)
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("layout line {line}: {message}")]
pub struct LayoutParseError {
    pub line: usize,
    pub message: String,
}

/// Parses the line-oriented layout format:
///
/// ```text
/// fold,10
/// well,1,sample,1e-1
/// well,6,control
/// well,12,blank
/// ```
///
/// `#` starts a comment; blank lines are ignored.
pub fn parse_layout_config(text: &str) -> Result<PlateLayout, LayoutParseError> {
    let mut fold: Option<u32> = None;
    let mut wells = Vec::new();
    let mut last_line = 0;
    for (number, raw) in text.lines().enumerate() {
        let line = number + 1;
        last_line = line;
        let err = |message: String| LayoutParseError { line, message };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split(',').map(str::trim).collect();
        match fields[0] {
            "fold" => {
                if fold.is_some() {
                    return Err(err("duplicate fold line".into()));
                }
                if fields.len() != 2 {
                    return Err(err("expected `fold,<n>`".into()));
                }
                let value: u32 = fields[1]
                    .parse()
                    .map_err(|_| err(format!("invalid fold {:?}", fields[1])))?;
                if value < 2 {
                    return Err(err(format!("fold must be at least 2, got {value}")));
                }
                fold = Some(value);
            }
            "well" => {
                if !(3..=4).contains(&fields.len()) {
                    return Err(err("expected `well,<index>,<role>[,<conc>]`".into()));
                }
                let index: u32 = fields[1]
                    .parse()
                    .map_err(|_| err(format!("invalid well index {:?}", fields[1])))?;
                let kind = RoleKind::parse(fields[2])
                    .ok_or_else(|| err(format!("unknown role {:?}", fields[2])))?;
                let conc = fields.get(3).copied().filter(|s| !s.is_empty());
                let role = match (kind, conc) {
                    (RoleKind::Sample, Some(text)) => WellRole::Sample(
                        SampleLevel::parse(text).map_err(|e| err(e.to_string()))?,
                    ),
                    (RoleKind::Sample, None) => {
                        return Err(err("sample well needs a concentration".into()))
                    }
                    (_, Some(_)) => {
                        return Err(err(format!("{kind} well takes no concentration")))
                    }
                    (RoleKind::Control, None) => WellRole::Control,
                    (RoleKind::Blank, None) => WellRole::Blank,
                };
                wells.push(Well { index, role });
            }
            other => return Err(err(format!("unknown record type {other:?}"))),
        }
    }
    let fold = fold.ok_or(LayoutParseError {
        line: last_line.max(1),
        message: "missing `fold,<n>` line".into(),
    })?;
    PlateLayout::new(wells, fold).map_err(|e| LayoutParseError {
        line: last_line.max(1),
        message: e.to_string(),
    })
}

/// Inverse of [`parse_layout_config`].
pub fn format_layout_config(layout: &PlateLayout) -> String {
    let mut out = format!("fold,{}\n", layout.fold());
    for well in layout.wells() {
        match &well.role {
            WellRole::Sample(level) => {
                out.push_str(&format!("well,{},sample,{}\n", well.index, level.to_field()))
            }
            WellRole::Control => out.push_str(&format!("well,{},control\n", well.index)),
            WellRole::Blank => out.push_str(&format!("well,{},blank\n", well.index)),
        }
    }
    out
}
