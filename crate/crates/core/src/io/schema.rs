//! Column roles for CSV ingestion, read from TOML.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FeatureKind, Label, RawRow, RawValue};
use crate::error::{Error, Result};
use crate::model::ClipBound;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureColumn {
    pub name: String,
    pub kind: FeatureKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaConfig {
    pub label_column: String,
    pub positive_labels: Vec<String>,
    pub negative_labels: Vec<String>,
    pub group_column: String,
    pub score_column: String,
    #[serde(default)]
    pub target_column: Option<String>,
    #[serde(default)]
    pub weight_column: Option<String>,
    pub clip_b: f64,
    #[serde(default)]
    pub features: Vec<FeatureColumn>,
}

impl SchemaConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SchemaConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        ClipBound::new(self.clip_b)?;
        if self.positive_labels.is_empty() || self.negative_labels.is_empty() {
            return Err(Error::Config(
                "both label mappings need at least one value".into(),
            ));
        }
        if let Some(v) = self
            .positive_labels
            .iter()
            .find(|v| self.negative_labels.contains(v))
        {
            return Err(Error::Config(format!(
                "label value `{v}` maps to both classes"
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        for f in &self.features {
            if !seen.insert(f.name.as_str()) {
                return Err(Error::Config(format!("feature `{}` listed twice", f.name)));
            }
        }
        Ok(())
    }

    pub fn clip(&self) -> ClipBound {
        ClipBound::new(self.clip_b).expect("validated")
    }
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::Config(format!("column `{name}` not found in header")))
}

fn parse_f64(raw: &str, what: &str, row: usize) -> Result<f64> {
    raw.trim().parse::<f64>().map_err(|_| Error::Row {
        row,
        message: format!("{what} `{raw}` is not a number"),
    })
}

/// Reads a CSV with a header row. Scores are clipped to the schema's bound.
/// Row numbers in errors count data rows from 1.
pub fn load_dataset_from_reader<R: Read>(reader: R, schema: &SchemaConfig) -> Result<Dataset> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let label_col = column(&headers, &schema.label_column)?;
    let group_col = column(&headers, &schema.group_column)?;
    let score_col = column(&headers, &schema.score_column)?;
    let target_col = schema
        .target_column
        .as_deref()
        .map(|c| column(&headers, c))
        .transpose()?;
    let weight_col = schema
        .weight_column
        .as_deref()
        .map(|c| column(&headers, c))
        .transpose()?;
    let features: Vec<&FeatureColumn> = schema
        .features
        .iter()
        .filter(|f| f.name != schema.group_column)
        .collect();
    let feature_cols: Vec<usize> = features
        .iter()
        .map(|f| column(&headers, &f.name))
        .collect::<Result<_>>()?;

    let mut builder = Dataset::builder(schema.clip()).group_feature(&schema.group_column);
    for f in &features {
        builder = match f.kind {
            FeatureKind::Numeric => builder.numeric(&f.name),
            FeatureKind::Categorical => builder.categorical(&f.name),
        };
    }
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec?;
        let field = |c: usize| rec.get(c).unwrap_or("");
        let raw_label = field(label_col).trim();
        let label = if schema.positive_labels.iter().any(|v| v == raw_label) {
            Label::Positive
        } else if schema.negative_labels.iter().any(|v| v == raw_label) {
            Label::Negative
        } else {
            return Err(Error::Row {
                row,
                message: format!("label value `{raw_label}` is not mapped"),
            });
        };
        let mut values = Vec::with_capacity(features.len());
        for (f, &c) in features.iter().zip(&feature_cols) {
            values.push(match f.kind {
                FeatureKind::Numeric => RawValue::Numeric(parse_f64(field(c), &f.name, row)?),
                FeatureKind::Categorical => RawValue::Categorical(field(c).trim().to_string()),
            });
        }
        let mut raw = RawRow::new(
            values,
            label,
            field(group_col).trim(),
            parse_f64(field(score_col), "score", row)?,
        );
        if let Some(c) = target_col {
            raw = raw.target(parse_f64(field(c), "target", row)?);
        }
        if let Some(c) = weight_col {
            raw = raw.weight(parse_f64(field(c), "weight", row)?);
        }
        builder.push(raw);
    }
    builder.build()
}

pub fn load_dataset(path: &Path, schema: &SchemaConfig) -> Result<Dataset> {
    load_dataset_from_reader(std::fs::File::open(path)?, schema)
}
