//! Append-only per-iteration metric log.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub metric: String,
    pub group: Option<String>,
    pub value: f64,
    pub event: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    rows: Vec<TraceRow>,
}

impl RunTrace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a row. Iterations never go backwards.
    pub fn push(&mut self, iteration: usize, metric: &str, group: Option<&str>, value: f64) {
        self.push_row(TraceRow {
            iteration,
            metric: metric.to_string(),
            group: group.map(str::to_string),
            value,
            event: None,
        });
    }

    pub fn event(&mut self, iteration: usize, event: &str, group: Option<&str>) {
        self.push_row(TraceRow {
            iteration,
            metric: "event".to_string(),
            group: group.map(str::to_string),
            value: 0.0,
            event: Some(event.to_string()),
        });
    }

    fn push_row(&mut self, row: TraceRow) {
        if let Some(last) = self.rows.last() {
            assert!(
                row.iteration >= last.iteration,
                "trace iteration went from {} back to {}",
                last.iteration,
                row.iteration
            );
        }
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    /// Values of one metric (and optionally one group), in order.
    pub fn series(&self, metric: &str, group: Option<&str>) -> Vec<(usize, f64)> {
        self.rows
            .iter()
            .filter(|r| r.metric == metric && r.group.as_deref() == group)
            .map(|r| (r.iteration, r.value))
            .collect()
    }

    pub fn events(&self, event: &str) -> Vec<&TraceRow> {
        self.rows
            .iter()
            .filter(|r| r.event.as_deref() == Some(event))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,metric,group,value,event\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.iteration,
                r.metric,
                r.group.as_deref().unwrap_or(""),
                r.value,
                r.event.as_deref().unwrap_or("")
            );
        }
        out
    }
}
