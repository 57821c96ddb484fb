#![no_main]

use libfuzzer_sys::fuzz_target;
use wellfluor::config::parse_config_file;
use wellfluor::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(overrides) = parse_config_file(text) {
        let mut config = RunConfig::default();
        overrides.apply_to(&mut config);
        let _ = config.validate();
    }
});
