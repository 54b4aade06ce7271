#![no_main]

use drm_stackelberg::leader::solve_stackelberg;
use drm_stackelberg::scenario_io::parse_scenario;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(s) = parse_scenario(text) else {
        return;
    };
    if s.num_slots() > 4096 || s.num_users > 4096 {
        return;
    }
    if let Ok(sol) = solve_stackelberg(&s) {
        assert!(sol.prices.as_slice().iter().all(|p| *p > 0.0));
    }
});
