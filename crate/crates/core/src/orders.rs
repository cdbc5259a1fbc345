//! Finite binary strings, finite words over ℕ, the orderings on them, and
//! the coding bijections used by the constructions.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Deref;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A finite sequence of binary digits.
///
/// `Ord` is the lexicographic order with a proper prefix placed before its
/// extensions, which is a total extension of the strict lexicographic order
/// on incomparable pairs.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FinBits(Vec<u8>);

impl FinBits {
    pub fn empty() -> Self {
        FinBits(Vec::new())
    }

    /// Panics if an entry is not 0 or 1.
    pub fn from_digits(digits: impl IntoIterator<Item = u8>) -> Self {
        let v: Vec<u8> = digits.into_iter().collect();
        assert!(v.iter().all(|&d| d <= 1), "binary digits must be 0 or 1");
        FinBits(v)
    }

    pub fn zeros(n: usize) -> Self {
        FinBits(vec![0; n])
    }

    pub fn digits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, bit: u8) {
        assert!(bit <= 1);
        self.0.push(bit);
    }

    /// `self ⌢ bit`
    pub fn child(&self, bit: u8) -> Self {
        let mut out = self.clone();
        out.push(bit);
        out
    }

    /// `self ⌢ other`
    pub fn concat(&self, other: &FinBits) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        FinBits(v)
    }

    pub fn truncate(&self, n: usize) -> Self {
        FinBits(self.0[..n.min(self.0.len())].to_vec())
    }

    /// The suffix of `self` after the first `n` digits.
    pub fn suffix(&self, n: usize) -> Self {
        FinBits(self.0[n.min(self.0.len())..].to_vec())
    }

    /// `self ⊆ other` as functions, i.e. `self` is an initial segment of `other`.
    pub fn is_prefix_of(&self, other: &FinBits) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn comparable(&self, other: &FinBits) -> bool {
        self.is_prefix_of(other) || other.is_prefix_of(self)
    }

    /// All strings of length exactly `n`, in lexicographic order.
    pub fn all_of_len(n: usize) -> impl Iterator<Item = FinBits> {
        assert!(n < 64, "enumeration limited to lengths below 64");
        (0..(1u64 << n)).map(move |v| FinBits((0..n).rev().map(|i| ((v >> i) & 1) as u8).collect()))
    }

    /// All strings of length `≤ d`, shorter strings first.
    pub fn all_up_to(d: usize) -> impl Iterator<Item = FinBits> {
        (0..=d).flat_map(FinBits::all_of_len)
    }
}

impl Deref for FinBits {
    type Target = [u8];
    fn deref(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for FinBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "⟨{self}⟩")
    }
}

impl fmt::Display for FinBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.0 {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for FinBits {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|ch| match ch {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::Schema(format!("invalid binary digit {other:?} in {s:?}"))),
            })
            .collect::<Result<Vec<u8>>>()
            .map(FinBits)
    }
}

// Serialized as a string of '0'/'1' characters; the empty string is ∅.
impl Serialize for FinBits {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for FinBits {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A finite sequence of naturals.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FinWord(pub Vec<u64>);

impl FinWord {
    pub fn empty() -> Self {
        FinWord(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<u64> {
        self.0.get(i).copied()
    }

    pub fn is_prefix_of(&self, other: &FinWord) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn truncate(&self, n: usize) -> Self {
        FinWord(self.0[..n.min(self.0.len())].to_vec())
    }
}

impl Deref for FinWord {
    type Target = [u64];
    fn deref(&self) -> &[u64] {
        &self.0
    }
}

impl From<Vec<u64>> for FinWord {
    fn from(v: Vec<u64>) -> Self {
        FinWord(v)
    }
}

impl fmt::Debug for FinWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "⟨")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "⟩")
    }
}

pub fn lex_compare(a: &FinBits, b: &FinBits) -> Ordering {
    a.cmp(b)
}

/// Maximolexicographic comparison: shorter sequences first, equal lengths
/// compared at the first differing index.
pub fn maxlex_compare<T: Ord>(a: &[T], b: &[T]) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

/// Maximolexicographic comparison of tuples whose entries are themselves
/// compared lexicographically.
pub fn maxlex_compare_tuples(a: &[FinBits], b: &[FinBits]) -> Ordering {
    maxlex_compare(a, b)
}

/// Diagonal enumeration of ℕ×ℕ: `(n+k+1)(n+k)/2 + n`.
///
/// Panics on overflow of `u64`.
pub fn delta(n: u64, k: u64) -> u64 {
    let s = n.checked_add(k).expect("delta: overflow");
    let tri = (s as u128 + 1) * s as u128 / 2;
    u64::try_from(tri + n as u128).expect("delta: overflow")
}

pub fn delta_inv(m: u64) -> (u64, u64) {
    let w = triangular_root(m);
    let n = m - w * (w + 1) / 2;
    (n, w - n)
}

/// Largest `w` with `w(w+1)/2 ≤ m`.
fn triangular_root(m: u64) -> u64 {
    let disc = 8u128 * m as u128 + 1;
    let mut w = ((disc.isqrt() - 1) / 2) as u64;
    while (w as u128) * (w as u128 + 1) / 2 > m as u128 {
        w -= 1;
    }
    while (w as u128 + 1) * (w as u128 + 2) / 2 <= m as u128 {
        w += 1;
    }
    w
}

/// Length-lexicographic index of a binary string: `∅ ↦ 0`, `0 ↦ 1`, `1 ↦ 2`,
/// `00 ↦ 3`, …
///
/// Panics for strings of length 64 or more.
pub fn node_index(c: &FinBits) -> u64 {
    assert!(c.len() < 64, "node_index: length {} out of range", c.len());
    let value = c.iter().fold(0u64, |acc, &d| (acc << 1) | d as u64);
    ((1u64 << c.len()) - 1) + value
}

pub fn node_unindex(m: u64) -> FinBits {
    let len = 63 - (m + 1).leading_zeros() as usize;
    let value = m + 1 - (1u64 << len);
    FinBits((0..len).rev().map(|i| ((value >> i) & 1) as u8).collect())
}

pub fn cantor_pair(a: u64, b: u64) -> u128 {
    let s = a as u128 + b as u128;
    s * (s + 1) / 2 + a as u128
}

pub fn cantor_unpair(m: u128) -> (u128, u128) {
    // w = floor((sqrt(8m+1) - 1) / 2), computed in integers.
    let mut w = ((m.saturating_mul(8).saturating_add(1)).isqrt().saturating_sub(1)) / 2;
    while w * (w + 1) / 2 > m {
        w -= 1;
    }
    while (w + 1) * (w + 2) / 2 <= m {
        w += 1;
    }
    let a = m - w * (w + 1) / 2;
    (a, w - a)
}

/// Bijection `ω^{<ω} → ℕ`.
///
/// The word `⟨a₀,…,a_{k-1}⟩` maps to the number whose set bits sit at
/// positions `a₀, a₀+a₁+1, …, Σᵢ aᵢ + (k-1)`, so `∅ ↦ 0`, `⟨0⟩ ↦ 1`,
/// `⟨1⟩ ↦ 2`, `⟨0,0⟩ ↦ 3`. The code has `Σ aᵢ + k` bits.
///
/// # Panics
///
/// If the code would exceed [`MAX_CODE_BITS`].
pub fn seq_code(w: &[u64]) -> BigUint {
    seq_code_wide(w.iter().map(|&a| a as u128)).expect("seq_code: entries too large")
}

/// Codes longer than this many bits are refused rather than allocated.
pub const MAX_CODE_BITS: u64 = 1 << 28;

fn seq_code_wide(entries: impl Iterator<Item = u128>) -> Result<BigUint> {
    let mut out = BigUint::zero();
    let mut pos: u128 = 0;
    let mut first = true;
    for a in entries {
        pos = if first { a } else { pos + a + 1 };
        first = false;
        let bit = u64::try_from(pos)
            .ok()
            .filter(|&b| b < MAX_CODE_BITS)
            .ok_or(Error::Overflow("sequence code longer than MAX_CODE_BITS"))?;
        out.set_bit(bit, true);
    }
    Ok(out)
}

pub fn seq_decode(m: &BigUint) -> FinWord {
    let mut out = Vec::new();
    let mut prev: Option<u64> = None;
    for (i, mut word) in m.iter_u64_digits().enumerate() {
        while word != 0 {
            let pos = 64 * i as u64 + word.trailing_zeros() as u64;
            word &= word - 1;
            out.push(match prev {
                None => pos,
                Some(p) => pos - p - 1,
            });
            prev = Some(pos);
        }
    }
    FinWord(out)
}

/// Bijection from equal-length pairs of words to ℕ: the sequence code of the
/// componentwise Cantor pairing.
pub fn pair_code(s0: &[u64], s1: &[u64]) -> Result<BigUint> {
    if s0.len() != s1.len() {
        return Err(Error::LengthMismatch { left: s0.len(), right: s1.len() });
    }
    seq_code_wide(s0.iter().zip(s1).map(|(&a, &b)| cantor_pair(a, b)))
}

/// Inverse of [`pair_code`]: returns `(c₀(m), c₁(m))`.
pub fn pair_decode(m: &BigUint) -> (FinWord, FinWord) {
    let (mut left, mut right) = (Vec::new(), Vec::new());
    for entry in seq_decode(m).iter() {
        let (a, b) = cantor_unpair(*entry as u128);
        // entries of a decoded sequence are bounded by the bit length of m
        left.push(a.to_u64().expect("component fits u64"));
        right.push(b.to_u64().expect("component fits u64"));
    }
    (FinWord(left), FinWord(right))
}

/// `c_i(m)` for `i ∈ {0, 1}`.
pub fn pair_component(m: &BigUint, i: usize) -> FinWord {
    let (a, b) = pair_decode(m);
    if i == 0 {
        a
    } else {
        b
    }
}

/// `BigUint` shorthand used by tests and callers.
pub fn big(n: u64) -> BigUint {
    BigUint::from(n)
}
