//! Total functions `ω → ω` used as family members and catch outputs.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone)]
pub struct NatFn(Arc<dyn Fn(u64) -> u64 + Send + Sync>);

impl NatFn {
    pub fn new(f: impl Fn(u64) -> u64 + Send + Sync + 'static) -> Self {
        NatFn(Arc::new(f))
    }

    pub fn at(&self, n: u64) -> u64 {
        (self.0)(n)
    }

    pub fn prefix(&self, len: u64) -> Vec<u64> {
        (0..len).map(|n| self.at(n)).collect()
    }
}

impl fmt::Debug for NatFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("NatFn")
    }
}

/// File-describable functions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum FnSpec {
    Constant {
        value: u64,
    },
    /// `n ↦ mul·n + add`, saturating.
    Affine {
        mul: u64,
        add: u64,
    },
    /// `n ↦ values[n mod len]`
    Periodic {
        values: Vec<u64>,
    },
    /// `n ↦ values[n]`, then `default`.
    Table {
        values: Vec<u64>,
        default: u64,
    },
}

impl FnSpec {
    pub fn compile(&self) -> Result<NatFn> {
        Ok(match self.clone() {
            FnSpec::Constant { value } => NatFn::new(move |_| value),
            FnSpec::Affine { mul, add } => NatFn::new(move |n| mul.saturating_mul(n).saturating_add(add)),
            FnSpec::Periodic { values } => {
                if values.is_empty() {
                    return Err(Error::Schema("periodic function needs at least one value".into()));
                }
                NatFn::new(move |n| values[(n % values.len() as u64) as usize])
            }
            FnSpec::Table { values, default } => {
                NatFn::new(move |n| usize::try_from(n).ok().and_then(|i| values.get(i)).copied().unwrap_or(default))
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compiled_values() {
        let f = FnSpec::Affine { mul: 3, add: 1 }.compile().unwrap();
        assert_eq!(f.prefix(4), vec![1, 4, 7, 10]);
        let p = FnSpec::Periodic { values: vec![5, 6] }.compile().unwrap();
        assert_eq!(p.prefix(3), vec![5, 6, 5]);
        let t = FnSpec::Table { values: vec![9], default: 2 }.compile().unwrap();
        assert_eq!(t.prefix(3), vec![9, 2, 2]);
        assert!(FnSpec::Periodic { values: vec![] }.compile().is_err());
    }

    #[test]
    fn json_shape() {
        let spec: FnSpec = serde_json::from_str(r#"{"kind":"affine","params":{"mul":2,"add":1000}}"#).unwrap();
        assert_eq!(spec, FnSpec::Affine { mul: 2, add: 1000 });
    }
}
