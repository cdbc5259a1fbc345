//! Input file formats.

use std::path::Path;

use anyhow::Context;
use medsacks_core::codes::{eval_prefix, Code, ConstantCode, TableSpec, TransducerSpec};
use medsacks_core::product::MemberSpec;
use medsacks_core::sampling::address;
use medsacks_core::{CodeSpec, FnSpec, NatFn};
use num_bigint::BigUint;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

pub fn load<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Like [`load`], but reports the error of the variant the file looks like
/// instead of the untagged-enum catch-all.
pub fn load_code(path: &Path) -> anyhow::Result<CodeSpec> {
    let value: Value = load(path)?;
    let parsed = match &value {
        Value::Object(m) if m.contains_key("states") => TransducerSpec::deserialize(&value).map(CodeSpec::Transducer),
        Value::Object(m) if m.contains_key("table") => TableSpec::deserialize(&value).map(CodeSpec::Table),
        Value::Object(m) if m.contains_key("constant") => ConstantCode::deserialize(&value).map(CodeSpec::Constant),
        _ => CodeSpec::deserialize(&value),
    };
    parsed.with_context(|| format!("{} is not a transducer, table or constant code", path.display()))
}

/// `{arity, code, family:[{kind, params, certBound}…], searchCap, depth, seed}`
#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ProductManifest {
    pub arity: usize,
    pub code: CodeSpec,
    #[serde(default)]
    pub family: Vec<MemberSpec>,
    pub search_cap: usize,
    pub depth: usize,
    #[serde(default)]
    pub seed: u64,
}

/// `{codes:[…], family:[…], searchCap, depth, seed}`; stage `ξ` catches
/// `codes[ξ]`, whose arity may vary.
#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct GreedyManifest {
    pub codes: Vec<CodeSpec>,
    #[serde(default)]
    pub family: Vec<MemberSpec>,
    pub search_cap: usize,
    pub depth: usize,
    #[serde(default)]
    pub seed: u64,
}

/// A closed-form function, or a single-branch code evaluated along the
/// seeded branch of the full tree.
#[derive(Deserialize)]
#[serde(untagged)]
pub enum FunctionInput {
    Closed(FnSpec),
    Coded {
        code: CodeSpec,
        #[serde(default)]
        seed: u64,
    },
}

impl FunctionInput {
    /// The function, exact on `[0, len)`.
    pub fn compile(&self, len: u64) -> anyhow::Result<NatFn> {
        match self {
            FunctionInput::Closed(spec) => Ok(spec.compile()?),
            FunctionInput::Coded { code, seed } => {
                let code = code.build()?;
                let code = code.as_code()?;
                let len = usize::try_from(len)?;
                let out = eval_prefix(code, &address(*seed, Code::modulus(code, len)));
                anyhow::ensure!(out.len() >= len, "code emits only {} of {len} values", out.len());
                let values = out.0;
                Ok(NatFn::new(move |n| values.get(n as usize).copied().unwrap_or(0)))
            }
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncodeInput {
    pub h: FunctionInput,
    pub z: FunctionInput,
}

/// Decimal strings, or plain numbers for small entries.
#[derive(Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Number(u64),
    Text(String),
}

pub fn parse_entries(entries: &[Entry]) -> anyhow::Result<Vec<BigUint>> {
    entries
        .iter()
        .enumerate()
        .map(|(i, e)| match e {
            Entry::Number(n) => Ok(BigUint::from(*n)),
            Entry::Text(s) => s.parse().with_context(|| format!("entry {i} is not a natural number: {s:?}")),
        })
        .collect()
}
