#![no_main]

use fairwrap::io::ModelFile;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(model) = ModelFile::from_json(text) {
        // Anything accepted must re-encode and decode to the same model.
        if let Ok(again) = model.to_json() {
            assert_eq!(ModelFile::from_json(&again).unwrap(), model);
        }
    }
});
