//! Columnar per-step metrics table: a `t` column plus one f64 column per
//! collected metric. The first pushed row fixes the column set.

use crate::error::{Result, SimError};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsTable {
    names: Vec<String>,
    t: Vec<u64>,
    cols: Vec<Vec<f64>>,
}

impl MetricsTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Append one row. Metric names and order must match the first row.
    pub fn push_row(&mut self, t: u64, row: &[(String, f64)]) -> Result<()> {
        if self.t.is_empty() && self.names.is_empty() {
            if row.iter().any(|(name, _)| name == "t") {
                return Err(SimError::MetricMismatch("metric may not be named `t`".into()));
            }
            self.names = row.iter().map(|(name, _)| name.clone()).collect();
            self.cols = vec![Vec::new(); row.len()];
        } else if row.len() != self.names.len()
            || row.iter().zip(&self.names).any(|((name, _), expect)| name != expect)
        {
            return Err(SimError::MetricMismatch(format!(
                "row columns {:?} != table columns {:?}",
                row.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>(),
                self.names
            )));
        }
        self.t.push(t);
        for (col, (_, value)) in self.cols.iter_mut().zip(row) {
            col.push(*value);
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Metric names, excluding `t`.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn t(&self) -> &[u64] {
        &self.t
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        let idx = self
            .names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| SimError::UnknownAttribute(name.to_string()))?;
        Ok(&self.cols[idx])
    }

    /// Final value of a metric, if any rows were collected.
    pub fn last(&self, name: &str) -> Result<Option<f64>> {
        Ok(self.column(name)?.last().copied())
    }
}
