//! In-memory datasets: typed feature columns, labels, groups and black-box scores.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::model::{clip_score, ClipBound, FeatureValue, Record, Score};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    /// Sorted modalities; empty for numeric features.
    pub levels: Vec<String>,
}

#[derive(Debug, Clone)]
pub(crate) enum Column {
    Numeric(Vec<f64>),
    Categorical(Vec<u32>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }
}

/// Group membership of every row, by index into `names`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grouping {
    pub codes: Vec<usize>,
    pub names: Vec<String>,
}

impl Grouping {
    pub fn n_groups(&self) -> usize {
        self.names.len()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownGroup(name.to_string()))
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    features: Vec<FeatureSpec>,
    columns: Vec<Column>,
    index: HashMap<String, usize>,
    labels: Vec<Label>,
    grouping: Grouping,
    group_feature: usize,
    scores: Vec<Score>,
    target: Option<Vec<f64>>,
    weights: Vec<f64>,
    clip: ClipBound,
}

/// Borrowed row, routable through a tree.
#[derive(Debug, Clone, Copy)]
pub struct RowRef<'a> {
    ds: &'a Dataset,
    row: usize,
}

impl Record for RowRef<'_> {
    fn feature(&self, name: &str) -> Option<FeatureValue<'_>> {
        let j = *self.ds.index.get(name)?;
        Some(self.ds.value(self.row, j))
    }
}

impl Dataset {
    pub fn builder(clip: ClipBound) -> DatasetBuilder {
        DatasetBuilder::new(clip)
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn features(&self) -> &[FeatureSpec] {
        &self.features
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Index of the categorical feature carrying the sensitive attribute.
    pub fn group_feature(&self) -> usize {
        self.group_feature
    }

    pub fn value(&self, row: usize, feature: usize) -> FeatureValue<'_> {
        match &self.columns[feature] {
            Column::Numeric(v) => FeatureValue::Numeric(v[row]),
            Column::Categorical(v) => {
                FeatureValue::Categorical(&self.features[feature].levels[v[row] as usize])
            }
        }
    }

    pub(crate) fn column(&self, feature: usize) -> &Column {
        &self.columns[feature]
    }

    pub fn row(&self, row: usize) -> RowRef<'_> {
        RowRef { ds: self, row }
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn grouping(&self) -> &Grouping {
        &self.grouping
    }

    /// Clipped black-box scores.
    pub fn scores(&self) -> &[Score] {
        &self.scores
    }

    pub fn target(&self) -> Option<&[f64]> {
        self.target.as_deref()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn clip(&self) -> ClipBound {
        self.clip
    }

    /// Same rows with different black-box scores, clipped on the way in.
    pub fn with_scores(&self, scores: &[Score]) -> Result<Dataset> {
        if scores.len() != self.n_rows() {
            return Err(Error::Config(format!(
                "expected {} scores, got {}",
                self.n_rows(),
                scores.len()
            )));
        }
        let mut out = self.clone();
        out.scores = scores.iter().map(|&q| clip_score(q, self.clip)).collect();
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RawValue {
    Numeric(f64),
    Categorical(String),
}

/// One row before encoding. `score` is the unclipped black-box output.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRow {
    pub features: Vec<RawValue>,
    pub label: Label,
    pub group: String,
    pub score: f64,
    pub target: Option<f64>,
    pub weight: f64,
}

impl RawRow {
    pub fn new(features: Vec<RawValue>, label: Label, group: &str, score: f64) -> Self {
        RawRow {
            features,
            label,
            group: group.to_string(),
            score,
            target: None,
            weight: 1.0,
        }
    }

    pub fn target(mut self, eta: f64) -> Self {
        self.target = Some(eta);
        self
    }

    pub fn weight(mut self, w: f64) -> Self {
        self.weight = w;
        self
    }
}

/// Collects declared features and raw rows, then encodes them.
#[derive(Debug, Clone)]
pub struct DatasetBuilder {
    clip: ClipBound,
    decls: Vec<(String, FeatureKind)>,
    group_feature: String,
    rows: Vec<RawRow>,
}

impl DatasetBuilder {
    pub fn new(clip: ClipBound) -> Self {
        DatasetBuilder {
            clip,
            decls: Vec::new(),
            group_feature: "group".to_string(),
            rows: Vec::new(),
        }
    }

    pub fn numeric(mut self, name: &str) -> Self {
        self.decls.push((name.to_string(), FeatureKind::Numeric));
        self
    }

    pub fn categorical(mut self, name: &str) -> Self {
        self.decls
            .push((name.to_string(), FeatureKind::Categorical));
        self
    }

    /// Name under which the group is exposed as a categorical feature.
    pub fn group_feature(mut self, name: &str) -> Self {
        self.group_feature = name.to_string();
        self
    }

    pub fn push(&mut self, row: RawRow) {
        self.rows.push(row);
    }

    pub fn row(mut self, row: RawRow) -> Self {
        self.rows.push(row);
        self
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn build(self) -> Result<Dataset> {
        let n = self.rows.len();
        if n == 0 {
            return Err(Error::EmptyMeasure("dataset has no rows".into()));
        }
        let mut names = BTreeSet::new();
        for (name, _) in &self.decls {
            if !names.insert(name.as_str()) || *name == self.group_feature {
                return Err(Error::Config(format!("duplicate feature `{name}`")));
            }
        }
        let d = self.decls.len();
        let row_err = |r: usize, message: String| Error::Row {
            row: r + 1,
            message,
        };

        let mut levels: Vec<BTreeSet<&str>> = vec![BTreeSet::new(); d];
        let mut group_levels = BTreeSet::new();
        let has_target = self.rows[0].target.is_some();
        for (r, row) in self.rows.iter().enumerate() {
            if row.features.len() != d {
                return Err(row_err(
                    r,
                    format!("expected {d} feature values, got {}", row.features.len()),
                ));
            }
            for (j, v) in row.features.iter().enumerate() {
                match (self.decls[j].1, v) {
                    (FeatureKind::Numeric, RawValue::Numeric(x)) if x.is_finite() => {}
                    (FeatureKind::Numeric, RawValue::Numeric(x)) => {
                        return Err(row_err(r, format!("feature `{}` is {x}", self.decls[j].0)))
                    }
                    (FeatureKind::Categorical, RawValue::Categorical(s)) => {
                        levels[j].insert(s);
                    }
                    _ => {
                        return Err(row_err(
                            r,
                            format!("feature `{}` has the wrong kind", self.decls[j].0),
                        ))
                    }
                }
            }
            group_levels.insert(row.group.as_str());
            if !(row.weight.is_finite() && row.weight > 0.0) {
                return Err(row_err(
                    r,
                    format!("weight {} must be positive", row.weight),
                ));
            }
            if row.target.is_some() != has_target {
                return Err(row_err(r, "target present on some rows only".into()));
            }
            if let Some(t) = row.target {
                if !(0.0..=1.0).contains(&t) {
                    return Err(row_err(r, format!("target {t} outside [0, 1]")));
                }
            }
        }

        let mut features = Vec::with_capacity(d + 1);
        let mut columns = Vec::with_capacity(d + 1);
        for (j, (name, kind)) in self.decls.iter().enumerate() {
            match kind {
                FeatureKind::Numeric => {
                    let col = self
                        .rows
                        .iter()
                        .map(|row| match row.features[j] {
                            RawValue::Numeric(x) => x,
                            RawValue::Categorical(_) => unreachable!(),
                        })
                        .collect();
                    features.push(FeatureSpec {
                        name: name.clone(),
                        kind: *kind,
                        levels: Vec::new(),
                    });
                    columns.push(Column::Numeric(col));
                }
                FeatureKind::Categorical => {
                    let lv: Vec<String> = levels[j].iter().map(|s| s.to_string()).collect();
                    let col = self
                        .rows
                        .iter()
                        .map(|row| match &row.features[j] {
                            RawValue::Categorical(s) => lv.binary_search(s).unwrap() as u32,
                            RawValue::Numeric(_) => unreachable!(),
                        })
                        .collect();
                    features.push(FeatureSpec {
                        name: name.clone(),
                        kind: *kind,
                        levels: lv,
                    });
                    columns.push(Column::Categorical(col));
                }
            }
        }

        let group_names: Vec<String> = group_levels.iter().map(|s| s.to_string()).collect();
        let codes: Vec<usize> = self
            .rows
            .iter()
            .map(|row| group_names.binary_search(&row.group).unwrap())
            .collect();
        features.push(FeatureSpec {
            name: self.group_feature.clone(),
            kind: FeatureKind::Categorical,
            levels: group_names.clone(),
        });
        columns.push(Column::Categorical(
            codes.iter().map(|&c| c as u32).collect(),
        ));

        let mut scores = Vec::with_capacity(n);
        for (r, row) in self.rows.iter().enumerate() {
            let q = Score::new(row.score).map_err(|e| row_err(r, e.to_string()))?;
            scores.push(clip_score(q, self.clip));
        }

        let index = features
            .iter()
            .enumerate()
            .map(|(j, f)| (f.name.clone(), j))
            .collect();
        let target = has_target.then(|| self.rows.iter().map(|r| r.target.unwrap()).collect());

        Ok(Dataset {
            group_feature: d,
            features,
            columns,
            index,
            labels: self.rows.iter().map(|r| r.label).collect(),
            grouping: Grouping {
                codes,
                names: group_names,
            },
            scores,
            target,
            weights: self.rows.iter().map(|r| r.weight).collect(),
            clip: self.clip,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn small() -> Dataset {
        Dataset::builder(ClipBound::new(1.0).unwrap())
            .numeric("x")
            .categorical("c")
            .row(RawRow::new(
                vec![RawValue::Numeric(0.5), RawValue::Categorical("u".into())],
                Label::Positive,
                "b",
                1.0,
            ))
            .row(RawRow::new(
                vec![RawValue::Numeric(1.5), RawValue::Categorical("t".into())],
                Label::Negative,
                "a",
                0.4,
            ))
            .build()
            .unwrap()
    }

    #[test]
    fn encodes_levels_sorted() {
        let ds = small();
        assert_eq!(ds.features()[1].levels, vec!["t", "u"]);
        assert_eq!(ds.grouping().names, vec!["a", "b"]);
        assert_eq!(ds.grouping().codes, vec![1, 0]);
        assert_eq!(ds.features()[ds.group_feature()].name, "group");
        assert_eq!(ds.row(0).feature("c"), Some(FeatureValue::Categorical("u")));
        assert_eq!(
            ds.row(1).feature("group"),
            Some(FeatureValue::Categorical("a"))
        );
    }

    #[test]
    fn clips_scores_on_build() {
        let ds = small();
        assert_abs_diff_eq!(ds.scores()[0].value(), 0.731059, epsilon = 1e-6);
        assert_eq!(ds.scores()[1].value(), 0.4);
    }

    #[test]
    fn rejects_bad_rows() {
        let b = Dataset::builder(ClipBound::new(1.0).unwrap()).numeric("x");
        let bad = b
            .clone()
            .row(RawRow::new(
                vec![RawValue::Numeric(f64::NAN)],
                Label::Positive,
                "a",
                0.5,
            ))
            .build();
        assert!(matches!(bad, Err(Error::Row { row: 1, .. })));
        let bad = b
            .clone()
            .row(RawRow::new(vec![RawValue::Numeric(1.0)], Label::Positive, "a", 0.5).weight(0.0))
            .build();
        assert!(bad.is_err());
        assert!(b.build().is_err());
    }
}
