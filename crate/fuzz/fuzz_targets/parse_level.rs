#![no_main]

use libfuzzer_sys::fuzz_target;
use wellfluor::plate::{MolarConcentration, RelativeFactor, SampleLevel};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(level) = SampleLevel::parse(text) {
        assert_eq!(SampleLevel::parse(&level.to_field()).ok(), Some(level));
    }
    let _ = MolarConcentration::parse_molar(text);
    let _ = RelativeFactor::parse(text);
});
