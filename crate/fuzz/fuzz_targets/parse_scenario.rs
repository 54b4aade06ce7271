#![no_main]

use drm_stackelberg::scenario_io::{parse_scenario, scenario_to_json};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(s) = parse_scenario(text) {
        // anything accepted must survive a write and re-read unchanged
        let again = parse_scenario(&scenario_to_json(&s)).expect("emitted scenario parses");
        assert_eq!(again, s);
    }
});
