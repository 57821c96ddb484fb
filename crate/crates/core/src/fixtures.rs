//! Published fluorescein readings, embedded as series.
//!
//! Only numbers stated in the text are embedded. Readings visible only in
//! plotted curves are left out.

use crate::plate::{MolarConcentration, WellRole};
use crate::quant::{MeasurementSeries, SeriesRecord};
use crate::report::write_series_csv;

pub const VICTOR_FLUORESCEIN: &str = "victor-fluorescein";
pub const DEVICE_FLUORESCEIN: &str = "device-fluorescein";
pub const KNOWN_FIXTURES: [&str; 2] = [VICTOR_FLUORESCEIN, DEVICE_FLUORESCEIN];

/// Plate reader counts for fluorescein wells 9-11 and the water well.
const VICTOR_READINGS: [(u32, f64); 4] = [(9, 1364.0), (10, 1205.0), (11, 1028.0), (12, 1083.0)];

/// Phone-camera green values for wells 7-11 and the water well. Well 7 is
/// only reported as above 100; 100.0 is its lower bound.
const DEVICE_READINGS: [(u32, f64); 6] = [
    (7, 100.0),
    (8, 98.45),
    (9, 96.89),
    (10, 88.95),
    (11, 87.31),
    (12, 93.85),
];

const DEVICE_NOTE: &str = "well 7 reading 100.0 is a lower bound: the reported green value is only stated as higher than 100";

/// The fluorescein row: well i holds 10^-i M, well 12 is water.
fn fluorescein_record(well: u32, reading: f64) -> SeriesRecord {
    let role = if well == 12 {
        WellRole::Blank
    } else {
        WellRole::Sample(MolarConcentration::from_decade(-(well as i32)).into())
    };
    SeriesRecord::new(well, role, reading)
}

fn build(instrument: &str, readings: &[(u32, f64)]) -> MeasurementSeries {
    let records = readings
        .iter()
        .map(|&(well, reading)| fluorescein_record(well, reading))
        .collect();
    MeasurementSeries::new(instrument, records).expect("embedded fixture is well formed")
}

/// Looks up an embedded fixture by name.
pub fn fixture_series(name: &str) -> Option<MeasurementSeries> {
    match name {
        VICTOR_FLUORESCEIN => Some(build("victor", &VICTOR_READINGS)),
        DEVICE_FLUORESCEIN => Some(build("device", &DEVICE_READINGS)),
        _ => None,
    }
}

/// Fixture as series CSV text, with provenance comments.
pub fn fixture_csv(name: &str) -> Option<String> {
    let series = fixture_series(name)?;
    let comments: Vec<&str> = match name {
        VICTOR_FLUORESCEIN => vec!["fluorescein dilution, plate reader counts, wells 9-12"],
        _ => vec!["fluorescein dilution, phone camera green values, wells 7-12", DEVICE_NOTE],
    };
    Some(write_series_csv(&series, &comments))
}
