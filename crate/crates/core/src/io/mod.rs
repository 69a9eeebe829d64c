//! File formats: TOML schemas, CSV datasets, JSON model files, fold plans.

mod model_file;
mod schema;
mod split;

pub use model_file::{ModelFile, Provenance, FORMAT_VERSION, MAX_DEPTH};
pub use schema::{load_dataset, load_dataset_from_reader, FeatureColumn, SchemaConfig};
pub use split::{split_plan, Role, SplitPlan};
