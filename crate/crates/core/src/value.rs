//! Agent identifiers, column dtypes, and the dynamic cell value.

use std::fmt;

use crate::error::{Result, SimError};

/// Stable identifier of an agent. IDs are assigned sequentially by a
/// population and never reused within its lifetime, so they survive
/// removal and compaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentId(pub u64);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

impl From<u64> for AgentId {
    fn from(raw: u64) -> Self {
        AgentId(raw)
    }
}

/// Dtype of one attribute column.
///
/// Categorical values are stored as `u32` codes indexing into the label set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AttributeType {
    Int64,
    Float64,
    Bool,
    Categorical(Vec<String>),
}

impl AttributeType {
    pub fn kind_name(&self) -> &'static str {
        match self {
            AttributeType::Int64 => "Int64",
            AttributeType::Float64 => "Float64",
            AttributeType::Bool => "Bool",
            AttributeType::Categorical(_) => "Categorical",
        }
    }

    /// Default cell value used when `add_agents` receives no explicit one:
    /// 0, 0.0, false, or the first label.
    pub fn zero(&self) -> Value {
        match self {
            AttributeType::Int64 => Value::Int(0),
            AttributeType::Float64 => Value::Float(0.0),
            AttributeType::Bool => Value::Bool(false),
            AttributeType::Categorical(_) => Value::Cat(0),
        }
    }

    /// Whether `value` lies in this dtype's domain (kind and, for
    /// categoricals, code range).
    pub fn accepts(&self, value: &Value) -> bool {
        match (self, value) {
            (AttributeType::Int64, Value::Int(_)) => true,
            (AttributeType::Float64, Value::Float(_)) => true,
            (AttributeType::Bool, Value::Bool(_)) => true,
            (AttributeType::Categorical(labels), Value::Cat(code)) => {
                (*code as usize) < labels.len()
            }
            _ => false,
        }
    }

    /// Label sets must be non-empty and duplicate-free.
    pub fn validate(&self) -> Result<()> {
        if let AttributeType::Categorical(labels) = self {
            if labels.is_empty() {
                return Err(SimError::InvalidArgument(
                    "categorical label set is empty".into(),
                ));
            }
            for (i, a) in labels.iter().enumerate() {
                if labels[..i].contains(a) {
                    return Err(SimError::InvalidArgument(format!(
                        "duplicate categorical label `{a}`"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Resolve a label to its code.
    pub fn code_of(&self, label: &str) -> Option<u32> {
        match self {
            AttributeType::Categorical(labels) => {
                labels.iter().position(|l| l == label).map(|i| i as u32)
            }
            _ => None,
        }
    }

    /// Resolve a code to its label.
    pub fn label_of(&self, code: u32) -> Option<&str> {
        match self {
            AttributeType::Categorical(labels) => labels.get(code as usize).map(|s| s.as_str()),
            _ => None,
        }
    }
}

impl fmt::Display for AttributeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttributeType::Categorical(labels) => {
                write!(f, "Categorical{{{}}}", labels.join(","))
            }
            other => f.write_str(other.kind_name()),
        }
    }
}

/// One cell value. `Cat` carries the categorical code, not the label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Bool(bool),
    Cat(u32),
}

impl Value {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "Int64",
            Value::Float(_) => "Float64",
            Value::Bool(_) => "Bool",
            Value::Cat(_) => "Categorical",
        }
    }

    pub fn as_i64(self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_f64(self) -> Option<f64> {
        match self {
            Value::Float(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_bool(self) -> Option<bool> {
        match self {
            Value::Bool(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_cat(self) -> Option<u32> {
        match self {
            Value::Cat(v) => Some(v),
            _ => None,
        }
    }

    /// Panicking accessor for transform bodies where the dtype is known.
    pub fn int(self) -> i64 {
        self.as_i64().expect("expected an Int64 value")
    }

    /// Panicking accessor for transform bodies where the dtype is known.
    pub fn float(self) -> f64 {
        self.as_f64().expect("expected a Float64 value")
    }

    /// Panicking accessor for transform bodies where the dtype is known.
    pub fn truth(self) -> bool {
        self.as_bool().expect("expected a Bool value")
    }

    /// Panicking accessor for transform bodies where the dtype is known.
    pub fn cat(self) -> u32 {
        self.as_cat().expect("expected a Categorical value")
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Float(v) => write!(f, "{v}"),
            Value::Bool(v) => write!(f, "{v}"),
            Value::Cat(v) => write!(f, "cat:{v}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn categorical_domain() {
        let dtype = AttributeType::Categorical(vec!["S".into(), "I".into(), "R".into()]);
        assert!(dtype.accepts(&Value::Cat(2)));
        assert!(!dtype.accepts(&Value::Cat(3)));
        assert!(!dtype.accepts(&Value::Int(0)));
        assert_eq!(dtype.code_of("I"), Some(1));
        assert_eq!(dtype.label_of(2), Some("R"));
        assert_eq!(dtype.zero(), Value::Cat(0));
    }

    #[test]
    fn label_set_validation() {
        assert!(AttributeType::Categorical(vec![]).validate().is_err());
        assert!(
            AttributeType::Categorical(vec!["a".into(), "a".into()])
                .validate()
                .is_err()
        );
        assert!(
            AttributeType::Categorical(vec!["a".into(), "b".into()])
                .validate()
                .is_ok()
        );
    }
}
