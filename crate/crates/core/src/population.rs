//! Columnar agent state: every attribute is one contiguous typed column and
//! the population is the single home of all agent state.
//!
//! Rows correspond to agents. Removal is tombstone-based: a removed agent's
//! row is masked dead and its values are retained until [`Population::compact`]
//! physically drops dead rows. Agent IDs are assigned sequentially and never
//! reused, so they stay valid across removal and compaction.
//!
//! Vectorized updates ([`Population::update_column`], [`Population::update_where`])
//! have snapshot semantics: every transform and predicate sees pre-update
//! values, outputs are staged and committed in one step, so the result is
//! independent of row evaluation order. With the `parallel` feature the
//! staging pass fans out across row chunks; transforms must be pure.
//! Aggregations stay sequential so floating-point reductions are bit-stable
//! regardless of thread count.
//!
//! A population is single-writer. Concurrent reads are safe while no batch
//! is open and no mutation is in flight.

use std::collections::HashMap;
use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Result, SimError};
use crate::value::{AgentId, AttributeType, Value};

/// Row count below which the staging pass stays sequential even with the
/// `parallel` feature enabled.
#[cfg(feature = "parallel")]
const PAR_MIN_ROWS: usize = 4096;

/// One typed attribute column.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    name: String,
    dtype: AttributeType,
    data: ColumnData,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum ColumnData {
    I64(Vec<i64>),
    F64(Vec<f64>),
    Bool(Vec<bool>),
    Cat(Vec<u32>),
}

impl ColumnData {
    fn new(dtype: &AttributeType) -> Self {
        match dtype {
            AttributeType::Int64 => ColumnData::I64(Vec::new()),
            AttributeType::Float64 => ColumnData::F64(Vec::new()),
            AttributeType::Bool => ColumnData::Bool(Vec::new()),
            AttributeType::Categorical(_) => ColumnData::Cat(Vec::new()),
        }
    }

    fn len(&self) -> usize {
        match self {
            ColumnData::I64(v) => v.len(),
            ColumnData::F64(v) => v.len(),
            ColumnData::Bool(v) => v.len(),
            ColumnData::Cat(v) => v.len(),
        }
    }

    fn get(&self, row: usize) -> Value {
        match self {
            ColumnData::I64(v) => Value::Int(v[row]),
            ColumnData::F64(v) => Value::Float(v[row]),
            ColumnData::Bool(v) => Value::Bool(v[row]),
            ColumnData::Cat(v) => Value::Cat(v[row]),
        }
    }

    /// Caller guarantees the value kind matches the storage.
    fn set(&mut self, row: usize, value: Value) {
        match (self, value) {
            (ColumnData::I64(v), Value::Int(x)) => v[row] = x,
            (ColumnData::F64(v), Value::Float(x)) => v[row] = x,
            (ColumnData::Bool(v), Value::Bool(x)) => v[row] = x,
            (ColumnData::Cat(v), Value::Cat(x)) => v[row] = x,
            _ => unreachable!("dtype validated before write"),
        }
    }

    fn push(&mut self, value: Value) {
        match (self, value) {
            (ColumnData::I64(v), Value::Int(x)) => v.push(x),
            (ColumnData::F64(v), Value::Float(x)) => v.push(x),
            (ColumnData::Bool(v), Value::Bool(x)) => v.push(x),
            (ColumnData::Cat(v), Value::Cat(x)) => v.push(x),
            _ => unreachable!("dtype validated before push"),
        }
    }

    /// Drop rows where `keep` is false, preserving order.
    fn retain_rows(&mut self, keep: &[bool]) {
        fn retain<T: Copy>(v: &mut Vec<T>, keep: &[bool]) {
            let mut w = 0;
            for r in 0..v.len() {
                if keep[r] {
                    v[w] = v[r];
                    w += 1;
                }
            }
            v.truncate(w);
        }
        match self {
            ColumnData::I64(v) => retain(v, keep),
            ColumnData::F64(v) => retain(v, keep),
            ColumnData::Bool(v) => retain(v, keep),
            ColumnData::Cat(v) => retain(v, keep),
        }
    }
}

impl Column {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dtype(&self) -> &AttributeType {
        &self.dtype
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.len() == 0
    }

    /// Raw storage view, including dead rows.
    pub fn as_i64(&self) -> Option<&[i64]> {
        match &self.data {
            ColumnData::I64(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<&[f64]> {
        match &self.data {
            ColumnData::F64(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<&[bool]> {
        match &self.data {
            ColumnData::Bool(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_cat(&self) -> Option<&[u32]> {
        match &self.data {
            ColumnData::Cat(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregateKind {
    Sum,
    Mean,
    Min,
    Max,
    Count,
}

impl AggregateKind {
    fn name(&self) -> &'static str {
        match self {
            AggregateKind::Sum => "sum",
            AggregateKind::Mean => "mean",
            AggregateKind::Min => "min",
            AggregateKind::Max => "max",
            AggregateKind::Count => "count",
        }
    }
}

#[derive(Debug, Clone)]
struct StagedWrite {
    row: usize,
    col: usize,
    value: Value,
}

/// Columnar table of agent state.
#[derive(Debug, Clone)]
pub struct Population {
    columns: Vec<Column>,
    by_name: HashMap<String, usize>,
    alive: Vec<bool>,
    live: usize,
    /// Row of each ever-assigned ID; `None` once the agent is dead.
    row_of: Vec<Option<usize>>,
    /// Inverse mapping for rows (dead rows keep their last owner).
    id_of_row: Vec<AgentId>,
    next_id: u64,
    staged: Option<Vec<StagedWrite>>,
}

impl Population {
    /// Create an empty population with the given column schema. Names must
    /// be unique and non-empty; the schema is fixed for the table's lifetime.
    pub fn new(schema: &[(&str, AttributeType)]) -> Result<Self> {
        if schema.is_empty() {
            return Err(SimError::EmptySchema);
        }
        let mut columns = Vec::with_capacity(schema.len());
        let mut by_name = HashMap::with_capacity(schema.len());
        for (name, dtype) in schema {
            if name.is_empty() {
                return Err(SimError::InvalidArgument("empty column name".into()));
            }
            dtype.validate()?;
            if by_name.insert(name.to_string(), columns.len()).is_some() {
                return Err(SimError::DuplicateColumn(name.to_string()));
            }
            columns.push(Column {
                name: name.to_string(),
                dtype: dtype.clone(),
                data: ColumnData::new(dtype),
            });
        }
        Ok(Population {
            columns,
            by_name,
            alive: Vec::new(),
            live: 0,
            row_of: Vec::new(),
            id_of_row: Vec::new(),
            next_id: 0,
            staged: None,
        })
    }

    /// Physical row count, counting dead rows not yet compacted.
    pub fn rows(&self) -> usize {
        self.alive.len()
    }

    /// Number of live agents.
    pub fn live_count(&self) -> usize {
        self.live
    }

    pub fn is_empty(&self) -> bool {
        self.live == 0
    }

    /// Declared columns, in schema order.
    pub fn columns(&self) -> impl Iterator<Item = &Column> {
        self.columns.iter()
    }

    pub fn has_attr(&self, attr: &str) -> bool {
        self.by_name.contains_key(attr)
    }

    pub fn dtype(&self, attr: &str) -> Result<&AttributeType> {
        Ok(&self.columns[self.col_index(attr)?].dtype)
    }

    /// Alive mask over physical rows.
    pub fn alive_mask(&self) -> &[bool] {
        &self.alive
    }

    pub fn batch_open(&self) -> bool {
        self.staged.is_some()
    }

    /// Row currently backing `id`.
    pub fn row_index(&self, id: AgentId) -> Result<usize> {
        self.row_of
            .get(id.0 as usize)
            .copied()
            .flatten()
            .ok_or(SimError::NotAlive(id))
    }

    /// Live IDs in strictly ascending order. The borrow prevents mutation
    /// while the iterator is alive, so it always reflects liveness at
    /// iteration start.
    pub fn live_ids(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.row_of
            .iter()
            .enumerate()
            .filter(|(_, row)| row.is_some())
            .map(|(raw, _)| AgentId(raw as u64))
    }

    fn col_index(&self, attr: &str) -> Result<usize> {
        self.by_name
            .get(attr)
            .copied()
            .ok_or_else(|| SimError::UnknownAttribute(attr.to_string()))
    }

    fn check_value(&self, col: usize, value: &Value) -> Result<()> {
        let column = &self.columns[col];
        if !column.dtype.accepts(value) {
            return Err(SimError::TypeMismatch {
                attr: column.name.clone(),
                expected: column.dtype.to_string(),
                got: value.to_string(),
            });
        }
        Ok(())
    }

    pub(crate) fn ensure_no_batch(&self, op: &'static str) -> Result<()> {
        if self.staged.is_some() {
            return Err(SimError::BatchPending(op));
        }
        Ok(())
    }

    /// Append `n` live agents. Each column takes its default from
    /// `defaults`, falling back to the dtype zero value. Returns the new IDs,
    /// a contiguous ascending range.
    pub fn add_agents(&mut self, n: usize, defaults: &[(&str, Value)]) -> Result<Vec<AgentId>> {
        self.ensure_no_batch("add_agents")?;
        if n == 0 {
            return Err(SimError::InvalidArgument("add_agents requires n >= 1".into()));
        }
        let mut fill: Vec<Value> = self.columns.iter().map(|c| c.dtype.zero()).collect();
        for (name, value) in defaults {
            let col = self.col_index(name)?;
            self.check_value(col, value)?;
            fill[col] = *value;
        }
        let first = self.next_id;
        for offset in 0..n {
            let row = self.alive.len();
            for (col, value) in fill.iter().enumerate() {
                self.columns[col].data.push(*value);
            }
            self.alive.push(true);
            self.id_of_row.push(AgentId(first + offset as u64));
            self.row_of.push(Some(row));
        }
        self.live += n;
        self.next_id += n as u64;
        Ok((first..self.next_id).map(AgentId).collect())
    }

    /// Mark the given agents dead. Validates the whole set first, so a
    /// failed call leaves the population unchanged. Values are retained
    /// until [`Population::compact`].
    pub fn remove_agents(&mut self, ids: &[AgentId]) -> Result<()> {
        self.ensure_no_batch("remove_agents")?;
        let mut rows = Vec::with_capacity(ids.len());
        for (i, &id) in ids.iter().enumerate() {
            if ids[..i].contains(&id) {
                return Err(SimError::NotAlive(id));
            }
            rows.push((id, self.row_index(id)?));
        }
        for (id, row) in rows {
            self.alive[row] = false;
            self.row_of[id.0 as usize] = None;
            self.live -= 1;
        }
        Ok(())
    }

    /// Physically drop dead rows. Live agents keep their IDs; returns the
    /// new row of every live ID.
    pub fn compact(&mut self) -> Result<HashMap<AgentId, usize>> {
        self.ensure_no_batch("compact")?;
        let keep = self.alive.clone();
        for column in &mut self.columns {
            column.data.retain_rows(&keep);
        }
        let mut id_of_row = Vec::with_capacity(self.live);
        let mut mapping = HashMap::with_capacity(self.live);
        for (row, &kept) in keep.iter().enumerate() {
            if kept {
                let id = self.id_of_row[row];
                self.row_of[id.0 as usize] = Some(id_of_row.len());
                mapping.insert(id, id_of_row.len());
                id_of_row.push(id);
            }
        }
        self.id_of_row = id_of_row;
        self.alive = vec![true; self.live];
        Ok(mapping)
    }

    /// Current committed value of one cell. While a batch is open this is
    /// the pre-batch value; staged writes are invisible until apply.
    pub fn get_value(&self, id: AgentId, attr: &str) -> Result<Value> {
        let row = self.row_index(id)?;
        let col = self.col_index(attr)?;
        Ok(self.columns[col].data.get(row))
    }

    /// Write one cell. Commits immediately, or stages the write when a
    /// batch is open. Dtype and liveness are validated either way.
    pub fn set_value(&mut self, id: AgentId, attr: &str, value: Value) -> Result<()> {
        let row = self.row_index(id)?;
        let col = self.col_index(attr)?;
        self.check_value(col, &value)?;
        match &mut self.staged {
            Some(staged) => staged.push(StagedWrite { row, col, value }),
            None => self.columns[col].data.set(row, value),
        }
        Ok(())
    }

    /// Label-aware write to a categorical column.
    pub fn set_label(&mut self, id: AgentId, attr: &str, label: &str) -> Result<()> {
        let col = self.col_index(attr)?;
        let code = self.columns[col].dtype.code_of(label).ok_or_else(|| {
            SimError::UnknownLabel {
                attr: attr.to_string(),
                label: label.to_string(),
            }
        })?;
        self.set_value(id, attr, Value::Cat(code))
    }

    /// Label of a categorical cell.
    pub fn get_label(&self, id: AgentId, attr: &str) -> Result<&str> {
        let row = self.row_index(id)?;
        let col = self.col_index(attr)?;
        let code = match self.columns[col].data.get(row) {
            Value::Cat(code) => code,
            _ => {
                return Err(SimError::TypeMismatch {
                    attr: attr.to_string(),
                    expected: "Categorical".into(),
                    got: self.columns[col].dtype.to_string(),
                })
            }
        };
        Ok(self.columns[col].dtype.label_of(code).expect("code in range"))
    }

    /// Open a batch. Until [`Population::apply_batch`], `set_value` calls
    /// stage writes instead of committing and reads keep observing pre-batch
    /// values. At most one batch may be open.
    pub fn begin_batch(&mut self) -> Result<()> {
        if self.staged.is_some() {
            return Err(SimError::BatchAlreadyOpen);
        }
        self.staged = Some(Vec::new());
        Ok(())
    }

    /// Commit all staged writes in staging order (so the last write to a
    /// cell wins) and close the batch. Returns the number of writes applied.
    pub fn apply_batch(&mut self) -> Result<usize> {
        let staged = self.staged.take().ok_or(SimError::NoBatchOpen)?;
        let count = staged.len();
        for write in staged {
            self.columns[write.col].data.set(write.row, write.value);
        }
        Ok(count)
    }

    /// Discard all staged writes and close the batch.
    pub fn abort_batch(&mut self) -> Result<()> {
        if self.staged.take().is_none() {
            return Err(SimError::NoBatchOpen);
        }
        Ok(())
    }

    /// Apply a pure element-wise transform of `inputs` to `output` for every
    /// live row. All reads see the pre-update snapshot; outputs commit in
    /// one step, so the result is row-order independent.
    pub fn update_column<F>(&mut self, inputs: &[&str], output: &str, transform: F) -> Result<()>
    where
        F: Fn(&[Value]) -> Value + Sync,
    {
        self.update_where(&[], |_| true, inputs, output, transform)
            .map(|_| ())
    }

    /// Like [`Population::update_column`], restricted to live rows where
    /// `predicate` holds on the pre-update snapshot. Returns the number of
    /// rows updated.
    pub fn update_where<P, F>(
        &mut self,
        predicate_inputs: &[&str],
        predicate: P,
        inputs: &[&str],
        output: &str,
        transform: F,
    ) -> Result<usize>
    where
        P: Fn(&[Value]) -> bool + Sync,
        F: Fn(&[Value]) -> Value + Sync,
    {
        self.ensure_no_batch("update_where")?;
        let pred_cols = predicate_inputs
            .iter()
            .map(|a| self.col_index(a))
            .collect::<Result<Vec<_>>>()?;
        let input_cols = inputs
            .iter()
            .map(|a| self.col_index(a))
            .collect::<Result<Vec<_>>>()?;
        let out_col = self.col_index(output)?;
        let staged = self.stage_transform(&pred_cols, &predicate, &input_cols, &transform, out_col)?;
        let count = staged.len();
        for (row, value) in staged {
            self.columns[out_col].data.set(row, value);
        }
        Ok(count)
    }

    /// Evaluate predicate and transform over live rows against the current
    /// (pre-update) column contents and return the staged writes. Nothing is
    /// written here, which is what makes the commit atomic: a dtype error
    /// surfaces before any cell changes.
    fn stage_transform<P, F>(
        &self,
        pred_cols: &[usize],
        predicate: &P,
        input_cols: &[usize],
        transform: &F,
        out_col: usize,
    ) -> Result<Vec<(usize, Value)>>
    where
        P: Fn(&[Value]) -> bool + Sync,
        F: Fn(&[Value]) -> Value + Sync,
    {
        let rows = self.alive.len();
        let run_range = |range: Range<usize>| -> Result<Vec<(usize, Value)>> {
            let mut pred_args = Vec::with_capacity(pred_cols.len());
            let mut args = Vec::with_capacity(input_cols.len());
            let mut out = Vec::new();
            for row in range {
                if !self.alive[row] {
                    continue;
                }
                pred_args.clear();
                for &col in pred_cols {
                    pred_args.push(self.columns[col].data.get(row));
                }
                if !predicate(&pred_args) {
                    continue;
                }
                args.clear();
                for &col in input_cols {
                    args.push(self.columns[col].data.get(row));
                }
                let value = transform(&args);
                self.check_value(out_col, &value)?;
                out.push((row, value));
            }
            Ok(out)
        };

        #[cfg(feature = "parallel")]
        if rows >= PAR_MIN_ROWS {
            let chunk = rows.div_ceil(rayon::current_num_threads().max(1) * 4);
            let ranges: Vec<Range<usize>> = (0..rows)
                .step_by(chunk.max(1))
                .map(|start| start..(start + chunk).min(rows))
                .collect();
            let parts = ranges
                .into_par_iter()
                .map(run_range)
                .collect::<Result<Vec<_>>>()?;
            return Ok(parts.into_iter().flatten().collect());
        }

        run_range(0..rows)
    }

    /// Aggregate over live rows. `Count` ignores the column's contents;
    /// `Sum`/`Mean`/`Min`/`Max` require a numeric column. Sum over an empty
    /// live set is the dtype zero; mean/min/max over an empty set error.
    /// Accumulation is sequential in row order, so float results are
    /// bit-stable.
    pub fn aggregate(&self, attr: &str, kind: AggregateKind) -> Result<Value> {
        let col = self.col_index(attr)?;
        if kind == AggregateKind::Count {
            return Ok(Value::Int(self.live as i64));
        }
        let column = &self.columns[col];
        match &column.data {
            ColumnData::I64(values) => self.aggregate_i64(values, kind),
            ColumnData::F64(values) => self.aggregate_f64(values, kind),
            _ => Err(SimError::NonNumericAggregate {
                attr: attr.to_string(),
            }),
        }
    }

    fn aggregate_i64(&self, values: &[i64], kind: AggregateKind) -> Result<Value> {
        let live = self
            .alive
            .iter()
            .zip(values)
            .filter(|(&a, _)| a)
            .map(|(_, &v)| v);
        match kind {
            AggregateKind::Sum | AggregateKind::Mean => {
                let mut sum: i128 = 0;
                let mut count: u64 = 0;
                for v in live {
                    sum += v as i128;
                    count += 1;
                }
                if kind == AggregateKind::Sum {
                    let sum = i64::try_from(sum)
                        .map_err(|_| SimError::NumericOverflow("sum aggregate"))?;
                    Ok(Value::Int(sum))
                } else if count == 0 {
                    Err(SimError::EmptyAggregate("mean"))
                } else {
                    Ok(Value::Float(sum as f64 / count as f64))
                }
            }
            AggregateKind::Min => live
                .min()
                .map(Value::Int)
                .ok_or(SimError::EmptyAggregate("min")),
            AggregateKind::Max => live
                .max()
                .map(Value::Int)
                .ok_or(SimError::EmptyAggregate("max")),
            AggregateKind::Count => unreachable!(),
        }
    }

    fn aggregate_f64(&self, values: &[f64], kind: AggregateKind) -> Result<Value> {
        let mut acc: Option<f64> = None;
        let mut count: u64 = 0;
        for (row, &v) in values.iter().enumerate() {
            if !self.alive[row] {
                continue;
            }
            count += 1;
            acc = Some(match (kind, acc) {
                (_, None) => v,
                (AggregateKind::Sum | AggregateKind::Mean, Some(a)) => a + v,
                (AggregateKind::Min, Some(a)) => {
                    if v < a {
                        v
                    } else {
                        a
                    }
                }
                (AggregateKind::Max, Some(a)) => {
                    if v > a {
                        v
                    } else {
                        a
                    }
                }
                (AggregateKind::Count, _) => unreachable!(),
            });
        }
        match kind {
            AggregateKind::Sum => Ok(Value::Float(acc.unwrap_or(0.0))),
            AggregateKind::Mean => {
                if count == 0 {
                    Err(SimError::EmptyAggregate("mean"))
                } else {
                    Ok(Value::Float(acc.unwrap() / count as f64))
                }
            }
            AggregateKind::Min | AggregateKind::Max => {
                acc.map(Value::Float).ok_or(SimError::EmptyAggregate(kind.name()))
            }
            AggregateKind::Count => unreachable!(),
        }
    }

    /// Raw column view including dead rows; vectorized callers must respect
    /// [`Population::alive_mask`].
    pub fn i64s(&self, attr: &str) -> Result<&[i64]> {
        let col = self.col_index(attr)?;
        self.columns[col].as_i64().ok_or_else(|| self.view_mismatch(col, "Int64"))
    }

    pub fn f64s(&self, attr: &str) -> Result<&[f64]> {
        let col = self.col_index(attr)?;
        self.columns[col].as_f64().ok_or_else(|| self.view_mismatch(col, "Float64"))
    }

    pub fn bools(&self, attr: &str) -> Result<&[bool]> {
        let col = self.col_index(attr)?;
        self.columns[col].as_bool().ok_or_else(|| self.view_mismatch(col, "Bool"))
    }

    pub fn cats(&self, attr: &str) -> Result<&[u32]> {
        let col = self.col_index(attr)?;
        self.columns[col].as_cat().ok_or_else(|| self.view_mismatch(col, "Categorical"))
    }

    /// Mutable raw column view. Not allowed while a batch is open, since it
    /// would bypass staging.
    pub fn i64s_mut(&mut self, attr: &str) -> Result<&mut [i64]> {
        self.ensure_no_batch("mutable column view")?;
        let col = self.col_index(attr)?;
        if !matches!(self.columns[col].data, ColumnData::I64(_)) {
            return Err(self.view_mismatch(col, "Int64"));
        }
        match &mut self.columns[col].data {
            ColumnData::I64(v) => Ok(v),
            _ => unreachable!(),
        }
    }

    pub fn f64s_mut(&mut self, attr: &str) -> Result<&mut [f64]> {
        self.ensure_no_batch("mutable column view")?;
        let col = self.col_index(attr)?;
        if !matches!(self.columns[col].data, ColumnData::F64(_)) {
            return Err(self.view_mismatch(col, "Float64"));
        }
        match &mut self.columns[col].data {
            ColumnData::F64(v) => Ok(v),
            _ => unreachable!(),
        }
    }

    pub fn cats_mut(&mut self, attr: &str) -> Result<&mut [u32]> {
        self.ensure_no_batch("mutable column view")?;
        let col = self.col_index(attr)?;
        if !matches!(self.columns[col].data, ColumnData::Cat(_)) {
            return Err(self.view_mismatch(col, "Categorical"));
        }
        match &mut self.columns[col].data {
            ColumnData::Cat(v) => Ok(v),
            _ => unreachable!(),
        }
    }

    fn view_mismatch(&self, col: usize, expected: &str) -> SimError {
        SimError::TypeMismatch {
            attr: self.columns[col].name.clone(),
            expected: expected.to_string(),
            got: self.columns[col].dtype.to_string(),
        }
    }

    /// Debug invariant: every column shares one length and the live counter
    /// matches the mask.
    pub fn check_invariants(&self) -> Result<()> {
        let rows = self.alive.len();
        for column in &self.columns {
            if column.len() != rows {
                return Err(SimError::InvalidArgument(format!(
                    "column `{}` has {} rows, expected {rows}",
                    column.name,
                    column.len()
                )));
            }
        }
        let popcount = self.alive.iter().filter(|&&a| a).count();
        if popcount != self.live {
            return Err(SimError::InvalidArgument(format!(
                "live counter {} != mask popcount {popcount}",
                self.live
            )));
        }
        for (raw, row) in self.row_of.iter().enumerate() {
            if let Some(row) = *row {
                if !self.alive[row] || self.id_of_row[row].0 != raw as u64 {
                    return Err(SimError::InvalidArgument(format!(
                        "id {raw} maps to row {row} inconsistently"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wealth_pop(values: &[i64]) -> Population {
        let mut pop = Population::new(&[("wealth", AttributeType::Int64)]).unwrap();
        for &v in values {
            pop.add_agents(1, &[("wealth", Value::Int(v))]).unwrap();
        }
        pop
    }

    #[test]
    fn empty_construction() {
        let pop = Population::new(&[("wealth", AttributeType::Int64)]).unwrap();
        assert_eq!(pop.live_count(), 0);
        assert_eq!(pop.columns().count(), 1);
        let pop = Population::new(&[(
            "state",
            AttributeType::Categorical(vec!["S".into(), "I".into(), "R".into()]),
        )])
        .unwrap();
        assert_eq!(pop.live_count(), 0);
        assert!(pop.has_attr("state"));
    }

    #[test]
    fn duplicate_and_empty_schema() {
        let err = Population::new(&[
            ("x", AttributeType::Float64),
            ("x", AttributeType::Int64),
        ])
        .unwrap_err();
        assert!(matches!(err, SimError::DuplicateColumn(name) if name == "x"));
        assert!(matches!(Population::new(&[]), Err(SimError::EmptySchema)));
    }

    #[test]
    fn add_agents_sequential_ids() {
        let mut pop = wealth_pop(&[]);
        let ids = pop.add_agents(3, &[("wealth", Value::Int(1))]).unwrap();
        assert_eq!(ids, vec![AgentId(0), AgentId(1), AgentId(2)]);
        assert_eq!(pop.i64s("wealth").unwrap(), &[1, 1, 1]);
    }

    #[test]
    fn ids_never_reused() {
        let mut pop = wealth_pop(&[1, 1, 1]);
        pop.remove_agents(&[AgentId(1)]).unwrap();
        let ids = pop.add_agents(1, &[]).unwrap();
        assert_eq!(ids, vec![AgentId(3)]);
    }

    #[test]
    fn default_dtype_mismatch() {
        let mut pop = wealth_pop(&[]);
        let err = pop.add_agents(2, &[("wealth", Value::Float(1.5))]).unwrap_err();
        assert!(matches!(err, SimError::TypeMismatch { .. }));
        assert_eq!(pop.live_count(), 0);
    }

    #[test]
    fn dtype_zero_defaults() {
        let mut pop = Population::new(&[
            ("i", AttributeType::Int64),
            ("f", AttributeType::Float64),
            ("b", AttributeType::Bool),
            ("c", AttributeType::Categorical(vec!["a".into(), "b".into()])),
        ])
        .unwrap();
        let ids = pop.add_agents(1, &[]).unwrap();
        assert_eq!(pop.get_value(ids[0], "i").unwrap(), Value::Int(0));
        assert_eq!(pop.get_value(ids[0], "f").unwrap(), Value::Float(0.0));
        assert_eq!(pop.get_value(ids[0], "b").unwrap(), Value::Bool(false));
        assert_eq!(pop.get_value(ids[0], "c").unwrap(), Value::Cat(0));
    }

    #[test]
    fn remove_semantics() {
        let mut pop = wealth_pop(&[1, 2, 3]);
        pop.remove_agents(&[AgentId(1)]).unwrap();
        assert_eq!(pop.live_count(), 2);
        let ids: Vec<_> = pop.live_ids().collect();
        assert_eq!(ids, vec![AgentId(0), AgentId(2)]);
        // second removal errors
        assert!(matches!(
            pop.remove_agents(&[AgentId(1)]),
            Err(SimError::NotAlive(AgentId(1)))
        ));
        // remove all
        pop.remove_agents(&[AgentId(0), AgentId(2)]).unwrap();
        assert_eq!(pop.live_count(), 0);
        assert_eq!(
            pop.aggregate("wealth", AggregateKind::Sum).unwrap(),
            Value::Int(0)
        );
        assert!(matches!(
            pop.aggregate("wealth", AggregateKind::Mean),
            Err(SimError::EmptyAggregate("mean"))
        ));
    }

    #[test]
    fn remove_is_atomic() {
        let mut pop = wealth_pop(&[1, 2, 3]);
        let err = pop.remove_agents(&[AgentId(0), AgentId(9)]).unwrap_err();
        assert!(matches!(err, SimError::NotAlive(AgentId(9))));
        assert_eq!(pop.live_count(), 3, "failed removal must not change state");
    }

    #[test]
    fn compact_keeps_ids() {
        let mut pop = wealth_pop(&[10, 20, 30]);
        pop.remove_agents(&[AgentId(1)]).unwrap();
        let mapping = pop.compact().unwrap();
        assert_eq!(mapping[&AgentId(0)], 0);
        assert_eq!(mapping[&AgentId(2)], 1);
        assert_eq!(pop.rows(), 2);
        assert_eq!(pop.get_value(AgentId(2), "wealth").unwrap(), Value::Int(30));
        // identity case
        let mapping = pop.compact().unwrap();
        assert_eq!(mapping.len(), 2);
        assert_eq!(mapping[&AgentId(0)], 0);
        // all dead
        pop.remove_agents(&[AgentId(0), AgentId(2)]).unwrap();
        let mapping = pop.compact().unwrap();
        assert!(mapping.is_empty());
        assert_eq!(pop.rows(), 0);
        pop.check_invariants().unwrap();
    }

    #[test]
    fn get_set_roundtrip() {
        let mut pop = wealth_pop(&[7]);
        assert_eq!(pop.get_value(AgentId(0), "wealth").unwrap(), Value::Int(7));
        pop.set_value(AgentId(0), "wealth", Value::Int(9)).unwrap();
        assert_eq!(pop.get_value(AgentId(0), "wealth").unwrap(), Value::Int(9));
        assert!(matches!(
            pop.get_value(AgentId(5), "wealth"),
            Err(SimError::NotAlive(_))
        ));
        assert!(matches!(
            pop.get_value(AgentId(0), "nope"),
            Err(SimError::UnknownAttribute(_))
        ));
    }

    #[test]
    fn categorical_label_domain() {
        let mut pop = Population::new(&[(
            "state",
            AttributeType::Categorical(vec!["S".into(), "I".into()]),
        )])
        .unwrap();
        pop.add_agents(1, &[]).unwrap();
        assert!(pop.set_label(AgentId(0), "state", "I").is_ok());
        assert_eq!(pop.get_label(AgentId(0), "state").unwrap(), "I");
        assert!(matches!(
            pop.set_label(AgentId(0), "state", "X"),
            Err(SimError::UnknownLabel { .. })
        ));
        assert!(matches!(
            pop.set_value(AgentId(0), "state", Value::Cat(2)),
            Err(SimError::TypeMismatch { .. })
        ));
    }

    #[test]
    fn batch_snapshot_reads_and_atomic_apply() {
        let mut pop = wealth_pop(&[7, 7]);
        pop.begin_batch().unwrap();
        pop.set_value(AgentId(0), "wealth", Value::Int(9)).unwrap();
        pop.set_value(AgentId(1), "wealth", Value::Int(4)).unwrap();
        // reads observe pre-batch values
        assert_eq!(pop.get_value(AgentId(0), "wealth").unwrap(), Value::Int(7));
        assert_eq!(pop.apply_batch().unwrap(), 2);
        assert_eq!(pop.get_value(AgentId(0), "wealth").unwrap(), Value::Int(9));
        assert_eq!(pop.get_value(AgentId(1), "wealth").unwrap(), Value::Int(4));
    }

    #[test]
    fn batch_abort_discards() {
        let mut pop = wealth_pop(&[7]);
        pop.begin_batch().unwrap();
        pop.set_value(AgentId(0), "wealth", Value::Int(9)).unwrap();
        pop.abort_batch().unwrap();
        assert_eq!(pop.get_value(AgentId(0), "wealth").unwrap(), Value::Int(7));
        assert!(matches!(pop.abort_batch(), Err(SimError::NoBatchOpen)));
    }

    #[test]
    fn batch_single_open_rule() {
        let mut pop = wealth_pop(&[1]);
        pop.begin_batch().unwrap();
        assert!(matches!(pop.begin_batch(), Err(SimError::BatchAlreadyOpen)));
        pop.apply_batch().unwrap();
        assert!(matches!(pop.apply_batch(), Err(SimError::NoBatchOpen)));
    }

    #[test]
    fn batch_last_write_wins() {
        let mut pop = wealth_pop(&[1]);
        pop.begin_batch().unwrap();
        pop.set_value(AgentId(0), "wealth", Value::Int(5)).unwrap();
        pop.set_value(AgentId(0), "wealth", Value::Int(8)).unwrap();
        assert_eq!(pop.apply_batch().unwrap(), 2);
        assert_eq!(pop.get_value(AgentId(0), "wealth").unwrap(), Value::Int(8));
    }

    #[test]
    fn structural_ops_blocked_while_batch_open() {
        let mut pop = wealth_pop(&[1]);
        pop.begin_batch().unwrap();
        assert!(matches!(pop.add_agents(1, &[]), Err(SimError::BatchPending(_))));
        assert!(matches!(
            pop.remove_agents(&[AgentId(0)]),
            Err(SimError::BatchPending(_))
        ));
        assert!(matches!(pop.compact(), Err(SimError::BatchPending(_))));
        assert!(matches!(
            pop.update_column(&["wealth"], "wealth", |v| v[0]),
            Err(SimError::BatchPending(_))
        ));
        assert!(matches!(pop.i64s_mut("wealth"), Err(SimError::BatchPending(_))));
    }

    #[test]
    fn update_column_all_rows() {
        let mut pop = wealth_pop(&[1, 1, 1]);
        pop.update_column(&["wealth"], "wealth", |v| Value::Int(v[0].int() + 10))
            .unwrap();
        assert_eq!(pop.i64s("wealth").unwrap(), &[11, 11, 11]);
    }

    #[test]
    fn update_column_identity_and_dead_rows() {
        let mut pop = wealth_pop(&[1, 2, 3]);
        pop.remove_agents(&[AgentId(1)]).unwrap();
        pop.update_column(&["wealth"], "wealth", |v| v[0]).unwrap();
        assert_eq!(pop.i64s("wealth").unwrap(), &[1, 2, 3]);
        pop.update_column(&["wealth"], "wealth", |v| Value::Int(v[0].int() * 2))
            .unwrap();
        // dead row retains its tombstoned value
        assert_eq!(pop.i64s("wealth").unwrap(), &[2, 2, 6]);
    }

    #[test]
    fn update_column_result_dtype_checked_atomically() {
        let mut pop = wealth_pop(&[1, 2, 3]);
        let err = pop
            .update_column(&["wealth"], "wealth", |v| {
                if v[0].int() == 3 {
                    Value::Float(0.0)
                } else {
                    Value::Int(0)
                }
            })
            .unwrap_err();
        assert!(matches!(err, SimError::TypeMismatch { .. }));
        assert_eq!(pop.i64s("wealth").unwrap(), &[1, 2, 3], "no partial write");
    }

    #[test]
    fn update_where_examples() {
        let mut pop = wealth_pop(&[0, 5, 9]);
        let count = pop
            .update_where(
                &["wealth"],
                |v| v[0].int() >= 5,
                &["wealth"],
                "wealth",
                |v| Value::Int(v[0].int() - 5),
            )
            .unwrap();
        assert_eq!(count, 2);
        assert_eq!(pop.i64s("wealth").unwrap(), &[0, 0, 4]);

        let count = pop
            .update_where(&[], |_| false, &["wealth"], "wealth", |v| v[0])
            .unwrap();
        assert_eq!(count, 0);
        assert_eq!(pop.i64s("wealth").unwrap(), &[0, 0, 4]);
    }

    #[test]
    fn update_where_predicate_sees_snapshot() {
        // Predicate depends on the output column: all predicates must be
        // evaluated on pre-update values, so a cascade never happens.
        let mut pop = wealth_pop(&[1, 2, 4]);
        let count = pop
            .update_where(
                &["wealth"],
                |v| v[0].int() == 2,
                &["wealth"],
                "wealth",
                |_| Value::Int(4),
            )
            .unwrap();
        assert_eq!(count, 1);
        assert_eq!(pop.i64s("wealth").unwrap(), &[1, 4, 4]);
    }

    #[test]
    fn aggregate_examples() {
        let pop = wealth_pop(&[1, 2, 3]);
        assert_eq!(pop.aggregate("wealth", AggregateKind::Sum).unwrap(), Value::Int(6));
        assert_eq!(
            pop.aggregate("wealth", AggregateKind::Mean).unwrap(),
            Value::Float(2.0)
        );
        assert_eq!(pop.aggregate("wealth", AggregateKind::Min).unwrap(), Value::Int(1));
        assert_eq!(pop.aggregate("wealth", AggregateKind::Max).unwrap(), Value::Int(3));
        assert_eq!(pop.aggregate("wealth", AggregateKind::Count).unwrap(), Value::Int(3));
    }

    #[test]
    fn aggregate_respects_mask() {
        let mut pop = wealth_pop(&[1, 2, 3]);
        pop.remove_agents(&[AgentId(1)]).unwrap();
        assert_eq!(pop.aggregate("wealth", AggregateKind::Sum).unwrap(), Value::Int(4));
        let mut pop = wealth_pop(&[0, 0, 0, 0, 0]);
        pop.remove_agents(&[AgentId(0), AgentId(4)]).unwrap();
        assert_eq!(pop.aggregate("wealth", AggregateKind::Count).unwrap(), Value::Int(3));
    }

    #[test]
    fn aggregate_non_numeric() {
        let mut pop = Population::new(&[("flag", AttributeType::Bool)]).unwrap();
        pop.add_agents(2, &[]).unwrap();
        assert!(matches!(
            pop.aggregate("flag", AggregateKind::Sum),
            Err(SimError::NonNumericAggregate { .. })
        ));
        assert_eq!(pop.aggregate("flag", AggregateKind::Count).unwrap(), Value::Int(2));
    }

    #[test]
    fn float_aggregates() {
        let mut pop = Population::new(&[("x", AttributeType::Float64)]).unwrap();
        for v in [1.5, -0.5, 2.0] {
            pop.add_agents(1, &[("x", Value::Float(v))]).unwrap();
        }
        assert_eq!(pop.aggregate("x", AggregateKind::Sum).unwrap(), Value::Float(3.0));
        assert_eq!(pop.aggregate("x", AggregateKind::Mean).unwrap(), Value::Float(1.0));
        assert_eq!(pop.aggregate("x", AggregateKind::Min).unwrap(), Value::Float(-0.5));
        assert_eq!(pop.aggregate("x", AggregateKind::Max).unwrap(), Value::Float(2.0));
    }

    #[test]
    fn live_ids_iteration() {
        let mut pop = wealth_pop(&[1, 1, 1]);
        pop.remove_agents(&[AgentId(1)]).unwrap();
        assert_eq!(pop.live_ids().collect::<Vec<_>>(), vec![AgentId(0), AgentId(2)]);
        let empty = wealth_pop(&[]);
        assert_eq!(empty.live_ids().count(), 0);
        let before: Vec<_> = pop.live_ids().collect();
        pop.compact().unwrap();
        assert_eq!(pop.live_ids().collect::<Vec<_>>(), before);
    }
}
