//! Interleaving a function with a witness.
//!
//! `g_{h,z}(2k) = h(k)` and `g_{h,z}(n) = pair_code(h↾n, z↾n)` for odd `n`.
//! The odd entries carry growing prefixes of both `h` and `z`, so a prefix
//! of `g` determines longer prefixes of `h` and `z` than its even entries
//! alone, and agreements of `h` with `f(2·)` become agreements of `g` with
//! `f` at even positions.

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::func::NatFn;
use crate::orders::{big, pair_code, pair_decode, FinWord};
use crate::report::Report;

pub fn encode_g(h: &NatFn, z: &NatFn, n: u64) -> Result<BigUint> {
    if n.is_multiple_of(2) {
        Ok(big(h.at(n / 2)))
    } else {
        pair_code(&h.prefix(n), &z.prefix(n))
    }
}

/// `⟨g(0), …, g(len−1)⟩`
pub fn encode_prefix(h: &NatFn, z: &NatFn, len: u64) -> Result<Vec<BigUint>> {
    let (hs, zs) = (h.prefix(len), z.prefix(len));
    (0..len)
        .map(|n| {
            let n = n as usize;
            if n.is_multiple_of(2) {
                Ok(big(hs[n / 2]))
            } else {
                pair_code(&hs[..n], &zs[..n])
            }
        })
        .collect()
}

/// Recovers `(h↾(2m−1), z↾(2m−1))` from a coherent prefix of length `2m`,
/// read off `g(2m−1)`.
pub fn decode_g(prefix: &[BigUint]) -> Result<(FinWord, FinWord)> {
    if !prefix.len().is_multiple_of(2) {
        return Err(Error::Coherence(format!("odd prefix length {}", prefix.len())));
    }
    if let Some(w) = coherence_witness(prefix) {
        return Err(Error::Coherence(w));
    }
    Ok(match prefix.last() {
        Some(last) => pair_decode(last),
        None => (FinWord::empty(), FinWord::empty()),
    })
}

/// First reason `prefix` is not an initial segment of some `g_{h,z}`:
///
/// * `c_i(g(n))` has length `n` at each odd `n`;
/// * `c_i(g(n)) ⊆ c_i(g(n′))` for odd `n < n′`;
/// * `c₀(g(n))(k) = g(2k)` for each even `2k` and odd `n > k`.
pub fn coherence_witness(prefix: &[BigUint]) -> Option<String> {
    let mut prev: Option<(usize, FinWord, FinWord)> = None;
    for n in (1..prefix.len()).step_by(2) {
        let (c0, c1) = pair_decode(&prefix[n]);
        if c0.len() != n {
            return Some(format!("g({n}) codes components of length {} ≠ {n}", c0.len()));
        }
        if let Some((pn, p0, p1)) = &prev {
            if !p0.is_prefix_of(&c0) || !p1.is_prefix_of(&c1) {
                return Some(format!("components of g({pn}) are not initial segments of those of g({n})"));
            }
        }
        // earlier entries are covered through the chain
        let from = prev.as_ref().map_or(0, |(pn, _, _)| pn + 1);
        for even in (from..prefix.len()).filter(|e| e % 2 == 0) {
            let k = even / 2;
            if k < n && big(c0[k]) != prefix[even] {
                return Some(format!("g({even}) = {} but c₀(g({n}))({k}) = {}", prefix[even], c0[k]));
            }
        }
        prev = Some((n, c0, c1));
    }
    None
}

pub fn coherence_check(prefix: &[BigUint]) -> bool {
    coherence_witness(prefix).is_none()
}

/// Coherence plus a caller-supplied relation on the decoded prefixes (the
/// witness relation is not computable in general).
pub fn membership_check(prefix: &[BigUint], relation: &dyn Fn(&FinWord, &FinWord) -> bool) -> bool {
    let even = prefix.len() - prefix.len() % 2;
    match decode_g(&prefix[..even]) {
        Ok((h, z)) => coherence_check(prefix) && relation(&h, &z),
        Err(_) => false,
    }
}

pub fn coherence_report(prefix: &[BigUint]) -> Report {
    let mut report = Report::new();
    report.record("coherence", coherence_witness(prefix));
    report
}

/// `n ↦ f(2n)`
pub fn even_restriction(f: &NatFn) -> NatFn {
    let f = f.clone();
    NatFn::new(move |n| f.at(n.saturating_mul(2)))
}

/// Even positions `2n < horizon` with `h(n) = f(2n)`; each is a position
/// where `g_{h,z}` agrees with `f`.
pub fn transfer_agreement(h: &NatFn, z: &NatFn, f: &NatFn, horizon: u64) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for pos in (0..horizon).step_by(2) {
        if encode_g(h, z, pos)? == big(f.at(pos)) {
            out.push(pos);
        }
    }
    Ok(out)
}
