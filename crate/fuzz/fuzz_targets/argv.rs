#![no_main]

use blockade_cluster::cli::config::{parse_args, Params};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let args: Vec<&str> = text.split('\0').collect();
    if let Ok(inv) = parse_args(&args) {
        let mut params = Params::from_entries(inv.entries);
        let _ = params.take_or("eta", 0.3f64);
        let _ = params.take_str("output");
    }
});
