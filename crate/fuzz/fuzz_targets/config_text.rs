#![no_main]

use blockade_cluster::cli::config::{parse_config_text, Params};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(entries) = parse_config_text(text) {
        for (k, _) in &entries {
            assert!(!k.is_empty());
            assert_eq!(k.as_str(), k.to_lowercase().replace('_', "-"));
        }
        let mut params = Params::from_entries(entries);
        let _ = params.take_or("seed", 0u64);
        let _ = params.take_all("vary");
    }
});
