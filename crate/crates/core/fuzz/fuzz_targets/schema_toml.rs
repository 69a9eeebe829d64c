#![no_main]

use fairwrap::io::SchemaConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(schema) = SchemaConfig::from_toml(text) {
            assert!(schema.clip_b > 0.0);
        }
    }
});
