#![no_main]

use libfuzzer_sys::fuzz_target;
use wellfluor::plate::{format_layout_config, parse_layout_config};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(layout) = parse_layout_config(text) {
        let again = parse_layout_config(&format_layout_config(&layout))
            .expect("formatted layout must parse");
        assert_eq!(layout, again);
    }
});
