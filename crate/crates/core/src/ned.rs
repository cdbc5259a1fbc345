//! Agreeing with `f` wherever `h*` does while escaping a family blockwise.
//!
//! Given `f`, a family `F₀ = ⟨f_j⟩` with certificates `B(j)` (`f(n) ≠ f_j(n)`
//! for every `n ≥ B(j)`), a function `h*`, and an increasing `g*`, the
//! output `h` copies `h*` on the block `[g*(k), g*(k+1))` except where
//! `h*(n)` hits some `f_j(n)` with `j ≤ k`, where it takes the least value
//! missing from `{f_0(n), …, f_k(n)}`. When `g*(k) ≥ m_k` for the
//! thresholds computed by [`compute_m_seq`], every `n` with `h*(n) = f(n)`
//! keeps `h(n) = f(n)`.

use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func::{FnSpec, NatFn};
use crate::report::Report;

/// Rule for positions below `g*(0)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BelowFirstBlock {
    /// Copy `h*`.
    #[default]
    Copy,
    /// Treat as block 0, avoiding `f_0`.
    FirstBlock,
}

#[derive(Clone, Debug)]
pub struct NedInput {
    pub f: NatFn,
    pub family: Vec<NatFn>,
    /// `B(j)`
    pub bounds: Vec<u64>,
    pub h_star: NatFn,
    pub g_star: NatFn,
    pub below_first_block: BelowFirstBlock,
    /// Length of the direct certificate check `[B(j), B(j) + H)`.
    pub spot_horizon: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NedMemberSpec {
    #[serde(rename = "fn")]
    pub function: FnSpec,
    #[serde(rename = "B")]
    pub bound: u64,
}

/// `{f, family:[{fn, B}…], hStar, gStar, horizon}`
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NedSpec {
    pub f: FnSpec,
    pub family: Vec<NedMemberSpec>,
    pub h_star: FnSpec,
    pub g_star: FnSpec,
    pub horizon: u64,
    #[serde(default)]
    pub below_first_block: BelowFirstBlock,
    #[serde(default = "default_spot_horizon")]
    pub spot_horizon: u64,
}

fn default_spot_horizon() -> u64 {
    1000
}

impl NedSpec {
    pub fn build(&self) -> Result<NedInput> {
        Ok(NedInput {
            f: self.f.compile()?,
            family: self.family.iter().map(|m| m.function.compile()).collect::<Result<_>>()?,
            bounds: self.family.iter().map(|m| m.bound).collect(),
            h_star: self.h_star.compile()?,
            g_star: self.g_star.compile()?,
            below_first_block: self.below_first_block,
            spot_horizon: self.spot_horizon,
        })
    }
}

impl NedInput {
    fn members_up_to(&self, k: usize) -> &[NatFn] {
        &self.family[..self.family.len().min(k + 1)]
    }

    /// Direct check of certificate `j` on `[B(j), B(j) + H)`.
    fn spot_check(&self, j: usize) -> Result<()> {
        let b = self.bounds[j];
        match (b..b.saturating_add(self.spot_horizon)).find(|&n| self.f.at(n) == self.family[j].at(n)) {
            Some(n) => Err(Error::Certificate { member: j, n, bound: b }),
            None => Ok(()),
        }
    }
}

/// `m_k` for `k ≤ K`: the least `m ∉ {m_l : l < k}` with
/// `f(n) ∉ {f_0(n), …, f_k(n)}` for every `n ≥ m`. Beyond
/// `M_k = max_{j≤k} B(j)` this holds by certificate; below it the last
/// collision is found directly.
pub fn compute_m_seq(input: &NedInput, last: usize) -> Result<Vec<u64>> {
    if input.bounds.len() != input.family.len() {
        return Err(Error::Schema("one certificate bound per family member is required".into()));
    }
    let mut used = HashSet::new();
    let mut out = Vec::with_capacity(last + 1);
    let mut valid_from = 0u64;
    let mut checked = 0usize;
    for k in 0..=last {
        let members = input.members_up_to(k);
        while checked < members.len() {
            input.spot_check(checked)?;
            checked += 1;
        }
        let big_m = input.bounds[..members.len()].iter().copied().max().unwrap_or(0);
        // valid m form an upward-closed set, growing with k
        let collision = (valid_from..big_m).rev().find(|&n| members.iter().any(|g| g.at(n) == input.f.at(n)));
        if let Some(c) = collision {
            valid_from = c + 1;
        }
        let mut m = valid_from;
        while used.contains(&m) {
            m += 1;
        }
        used.insert(m);
        out.push(m);
    }
    Ok(out)
}

/// `g*(0), …` up to the first value `≥ horizon`, checked strictly increasing.
fn block_starts(input: &NedInput, horizon: u64) -> Result<Vec<u64>> {
    let mut starts = vec![input.g_star.at(0)];
    while *starts.last().unwrap() < horizon {
        let k = starts.len();
        let g = input.g_star.at(k as u64);
        if g <= starts[k - 1] {
            return Err(Error::NotIncreasing { k });
        }
        starts.push(g);
    }
    Ok(starts)
}

/// Checks `g*(k) ≥ m_k` for every block starting below `horizon`.
pub fn check_domination(input: &NedInput, horizon: u64) -> Result<Vec<u64>> {
    let starts = block_starts(input, horizon)?;
    let ms = compute_m_seq(input, starts.len() - 1)?;
    for (k, (&g, &m)) in starts.iter().zip(&ms).enumerate() {
        if g < m {
            return Err(Error::Domination { k, g, m });
        }
    }
    Ok(ms)
}

/// The blockwise `h`, after checking certificates, monotonicity of `g*`,
/// and domination on blocks starting below `horizon`.
pub fn build_h(input: &NedInput, horizon: u64) -> Result<NatFn> {
    check_domination(input, horizon)?;
    let input = Arc::new(input.clone());
    Ok(NatFn::new(move |n| {
        let Some(k) = block_index(&input, n) else {
            return input.h_star.at(n);
        };
        let avoid: Vec<u64> = input.members_up_to(k).iter().map(|g| g.at(n)).collect();
        let v = input.h_star.at(n);
        if !avoid.contains(&v) {
            return v;
        }
        (0..).find(|c| !avoid.contains(c)).unwrap()
    }))
}

/// `k` with `g*(k) ≤ n < g*(k+1)`; below `g*(0)` per the configured rule.
fn block_index(input: &NedInput, n: u64) -> Option<usize> {
    if n < input.g_star.at(0) {
        return match input.below_first_block {
            BelowFirstBlock::Copy => None,
            BelowFirstBlock::FirstBlock => Some(0),
        };
    }
    let mut k = 0;
    while input.g_star.at(k as u64 + 1) <= n {
        k += 1;
    }
    Some(k)
}

/// `agreement`: `h(n) = f(n)` wherever `h*(n) = f(n)`, `n < horizon`;
/// `block-avoidance`: `h(n) ≠ f_j(n)` for `g*(j) ≤ n < horizon`;
/// `preconditions`: certificates, monotonicity of `g*`, and domination.
pub fn verify_ned(h: &NatFn, input: &NedInput, horizon: u64) -> Report {
    let mut report = Report::new();
    report.record("preconditions", check_domination(input, horizon).err().map(|e| e.to_string()));

    let agreement = (0..horizon).find_map(|n| {
        let f = input.f.at(n);
        (input.h_star.at(n) == f && h.at(n) != f).then(|| format!("n={n}: h*(n) = f(n) = {f}, h(n) = {}", h.at(n)))
    });
    report.record("agreement", agreement);

    let avoidance = input.family.iter().enumerate().find_map(|(j, g)| {
        (input.g_star.at(j as u64)..horizon)
            .find(|&n| h.at(n) == g.at(n))
            .map(|n| format!("j={j}, n={n}: h(n) = f_j(n) = {}", h.at(n)))
    });
    report.record("block-avoidance", avoidance);
    report
}

/// `{n < horizon : h*(n) = f(n)}`
pub fn agreement_set(input: &NedInput, horizon: u64) -> Vec<u64> {
    (0..horizon).filter(|&n| input.h_star.at(n) == input.f.at(n)).collect()
}
