//! Parameter-space definition and Cartesian expansion.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Result, SimError};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
}

impl ParamValue {
    pub fn as_i64(self) -> Option<i64> {
        match self {
            ParamValue::Int(v) => Some(v),
            _ => None,
        }
    }

    /// Numeric view; integers widen losslessly for moderate magnitudes.
    pub fn as_f64(self) -> f64 {
        match self {
            ParamValue::Int(v) => v as f64,
            ParamValue::Float(v) => v,
        }
    }
}

impl std::fmt::Display for ParamValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Float(v) => write!(f, "{v}"),
        }
    }
}

pub type ParamMap = BTreeMap<String, ParamValue>;

/// One dimension of a parameter space.
#[derive(Debug, Clone, PartialEq)]
pub enum ParameterSpec {
    /// Explicit discrete value list.
    Sample { name: String, values: Vec<ParamValue> },
    /// Integers lo, lo+step, ... <= hi.
    IntRange { name: String, lo: i64, hi: i64, step: i64 },
    /// Continuous interval; only optimizers may sample it.
    FloatRange { name: String, lo: f64, hi: f64 },
}

impl ParameterSpec {
    pub fn name(&self) -> &str {
        match self {
            ParameterSpec::Sample { name, .. } => name,
            ParameterSpec::IntRange { name, .. } => name,
            ParameterSpec::FloatRange { name, .. } => name,
        }
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self, ParameterSpec::FloatRange { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ParameterSpec::Sample { name, values } => {
                if values.is_empty() {
                    return Err(SimError::InvalidArgument(format!(
                        "sample list `{name}` is empty"
                    )));
                }
            }
            ParameterSpec::IntRange { name, lo, hi, step } => {
                if *step < 1 || lo > hi {
                    return Err(SimError::InvalidArgument(format!(
                        "int range `{name}` requires step >= 1 and lo <= hi"
                    )));
                }
            }
            ParameterSpec::FloatRange { name, lo, hi } => {
                if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
                    return Err(SimError::InvalidArgument(format!(
                        "float range `{name}` requires finite lo < hi"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Number of discrete values; `None` for continuous specs.
    pub fn cardinality(&self) -> Option<usize> {
        match self {
            ParameterSpec::Sample { values, .. } => Some(values.len()),
            ParameterSpec::IntRange { lo, hi, step, .. } => {
                Some(((hi - lo) / step) as usize + 1)
            }
            ParameterSpec::FloatRange { .. } => None,
        }
    }

    /// Expanded discrete values; `None` for continuous specs.
    pub fn values(&self) -> Option<Vec<ParamValue>> {
        match self {
            ParameterSpec::Sample { values, .. } => Some(values.clone()),
            ParameterSpec::IntRange { lo, hi: _, step, .. } => Some(
                (0..self.cardinality().unwrap())
                    .map(|i| ParamValue::Int(lo + i as i64 * step))
                    .collect(),
            ),
            ParameterSpec::FloatRange { .. } => None,
        }
    }

    /// Draw one value. Discrete specs use one `below` draw over their
    /// cardinality; continuous specs use one uniform draw. Exactly one draw
    /// per spec keeps streams aligned across search strategies.
    pub fn sample(&self, rng: &mut Rng) -> ParamValue {
        match self {
            ParameterSpec::Sample { values, .. } => values[rng.below(values.len() as u64) as usize],
            ParameterSpec::IntRange { lo, step, .. } => {
                let idx = rng.below(self.cardinality().unwrap() as u64) as i64;
                ParamValue::Int(lo + idx * step)
            }
            ParameterSpec::FloatRange { lo, hi, .. } => {
                ParamValue::Float(lo + rng.uniform() * (hi - lo))
            }
        }
    }
}

pub(crate) fn validate_space(space: &[ParameterSpec]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for spec in space {
        spec.validate()?;
        if !seen.insert(spec.name().to_string()) {
            return Err(SimError::DuplicateParam(spec.name().to_string()));
        }
    }
    Ok(())
}

/// Sample every spec independently, consuming draws in spec order.
pub fn sample_point(space: &[ParameterSpec], rng: &mut Rng) -> ParamMap {
    space
        .iter()
        .map(|spec| (spec.name().to_string(), spec.sample(rng)))
        .collect()
}

/// Cartesian product of a discrete space, row-major over the spec list
/// (the last spec varies fastest). Continuous specs are rejected.
pub fn cartesian(space: &[ParameterSpec]) -> Result<Vec<ParamMap>> {
    validate_space(space)?;
    if let Some(cont) = space.iter().find(|s| s.is_continuous()) {
        return Err(SimError::ContinuousParam(cont.name().to_string()));
    }
    let expanded: Vec<(String, Vec<ParamValue>)> = space
        .iter()
        .map(|spec| (spec.name().to_string(), spec.values().unwrap()))
        .collect();
    let total: usize = expanded.iter().map(|(_, v)| v.len()).product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; expanded.len()];
    for _ in 0..total {
        let map: ParamMap = expanded
            .iter()
            .zip(&idx)
            .map(|((name, values), &i)| (name.clone(), values[i]))
            .collect();
        out.push(map);
        for pos in (0..idx.len()).rev() {
            idx[pos] += 1;
            if idx[pos] < expanded[pos].1.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
    Ok(out)
}
