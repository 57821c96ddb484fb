#![no_main]

use libfuzzer_sys::fuzz_target;
use wellfluor::quant::{detection_limit, DetectionCriterion};
use wellfluor::report::{parse_series_csv, write_series_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(series) = parse_series_csv("fuzz", text) {
        let again = parse_series_csv("fuzz", &write_series_csv(&series, &[]))
            .expect("written series must parse");
        assert_eq!(series.records(), again.records());
        let _ = detection_limit(&series, &DetectionCriterion::default());
    }
});
