#![no_main]

use libfuzzer_sys::fuzz_target;
use wellfluor::imaging::{analyze_well_image, load_image, SegmentationParams};

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = load_image(data) {
        assert_eq!(img.pixels().len(), img.width() as usize * img.height() as usize);
        let _ = analyze_well_image(data, &SegmentationParams::default());
    }
});
