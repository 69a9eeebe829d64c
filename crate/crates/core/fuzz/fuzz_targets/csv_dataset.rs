#![no_main]

use fairwrap::io::{load_dataset_from_reader, SchemaConfig};
use libfuzzer_sys::fuzz_target;

const SCHEMA: &str = r#"
label_column = "y"
positive_labels = ["1"]
negative_labels = ["0"]
group_column = "s"
score_column = "q"
target_column = "eta"
weight_column = "w"
clip_b = 2.0

[[features]]
name = "x"
kind = "numeric"

[[features]]
name = "c"
kind = "categorical"
"#;

fuzz_target!(|data: &[u8]| {
    let schema = SchemaConfig::from_toml(SCHEMA).unwrap();
    if let Ok(ds) = load_dataset_from_reader(data, &schema) {
        let (lo, hi) = ds.clip().interval();
        for s in ds.scores() {
            assert!(s.value() >= lo && s.value() <= hi);
        }
    }
});
