#![no_main]

use blockade_cluster::cli::output::Document;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(doc) = serde_json::from_slice::<Document>(data) {
        let text = serde_json::to_string(&doc).expect("documents serialize");
        let again: Document = serde_json::from_str(&text).expect("serialized documents parse");
        assert_eq!(serde_json::to_string(&again).unwrap(), text);
    }
});
