#![no_main]

use blockade_cluster::cli::config::parse_axis;
use libfuzzer_sys::fuzz_target;

const MAX_POINTS: usize = 10_000;

fuzz_target!(|data: &[u8]| {
    let Ok(raw) = std::str::from_utf8(data) else { return };
    if let Ok(axis) = parse_axis(raw, MAX_POINTS) {
        assert!(!axis.name.is_empty());
        assert!(!axis.values.is_empty() && axis.values.len() <= MAX_POINTS);
        assert!(axis.values.iter().all(|v| v.is_finite()));
    }
});
