#![no_main]

use drm_stackelberg::scenario_io::parse_sweep_spec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(spec) = parse_sweep_spec(text) {
        for &v in spec.values.iter().take(8) {
            let _ = spec.materialize(v);
        }
    }
});
