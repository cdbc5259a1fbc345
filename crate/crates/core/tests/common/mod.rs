//! Seeded generators and reference implementations shared by the
//! integration tests. The reference implementations avoid the library's
//! code paths on purpose.

#![allow(dead_code)]

use medsacks_core::codes::{TransducerCode, TransitionRow};
use medsacks_core::trees::AutomatonTree;
use medsacks_core::FinBits;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_bits(rng: &mut ChaCha8Rng, len: usize) -> FinBits {
    FinBits::from_digits((0..len).map(|_| rng.gen_range(0..2u8)))
}

pub fn random_automaton_tree(rng: &mut ChaCha8Rng) -> AutomatonTree {
    let states = rng.gen_range(1..=4);
    let stem_len = rng.gen_range(0..=3);
    AutomatonTree {
        stem: random_bits(rng, stem_len),
        next: (0..states).map(|_| [rng.gen_range(0..states), rng.gen_range(0..states)]).collect(),
        gap: (0..states)
            .map(|_| {
                let (a, b) = (rng.gen_range(0..=2), rng.gen_range(0..=2));
                [random_bits(rng, a), random_bits(rng, b)]
            })
            .collect(),
    }
}

/// A transducer table with outputs of length in `out_len` and values below
/// `values`, shifted by `offset`, together with the built code. Tables with
/// a reachable silent cycle are redrawn.
pub fn random_transducer(
    rng: &mut ChaCha8Rng,
    arity: usize,
    max_states: usize,
    out_len: std::ops::RangeInclusive<usize>,
    values: u64,
    offset: u64,
) -> (Vec<TransitionRow>, TransducerCode) {
    loop {
        let states = rng.gen_range(1..=max_states);
        let word = |rng: &mut ChaCha8Rng| {
            let len = rng.gen_range(out_len.clone());
            (0..len).map(|_| offset + rng.gen_range(0..values)).collect::<Vec<u64>>()
        };
        let table: Vec<TransitionRow> = (0..states)
            .map(|_| {
                let a = (rng.gen_range(0..states), word(rng));
                let b = (rng.gen_range(0..states), word(rng));
                [a, b]
            })
            .collect();
        if has_silent_cycle(&table) {
            continue;
        }
        let code = TransducerCode::from_table(arity, table.clone()).expect("well-formed table");
        return (table, code);
    }
}

/// Any cycle of empty-output transitions (reachable or not).
pub fn has_silent_cycle(table: &[TransitionRow]) -> bool {
    let n = table.len();
    // silent reachability closure by repeated squaring of the relation
    let mut reach = vec![vec![false; n]; n];
    for (q, row) in table.iter().enumerate() {
        for (to, out) in row {
            if out.is_empty() {
                reach[q][*to] = true;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    (0..n).any(|q| reach[q][q])
}

/// Runs a transducer table from state 0.
pub fn run_table(table: &[TransitionRow], stream: impl IntoIterator<Item = u8>) -> Vec<u64> {
    let mut q = 0;
    let mut out = Vec::new();
    for b in stream {
        let (to, word) = &table[q][b as usize];
        out.extend(word.iter().copied());
        q = *to;
    }
    out
}

/// `x_0(0), …, x_{α−1}(0), x_0(1), …` over the common length; empty when
/// fewer than `arity` coordinates are given.
pub fn interleave(tuple: &[FinBits], arity: usize) -> Vec<u8> {
    if tuple.len() < arity || arity == 0 {
        return Vec::new();
    }
    let len = tuple.iter().map(|t| t.len()).min().unwrap_or(0);
    let mut out = Vec::new();
    for i in 0..len {
        for t in tuple {
            out.push(t.digits()[i]);
        }
    }
    out
}

/// Position of `c` in the length-then-lexicographic enumeration.
pub fn length_lex_position(c: &FinBits) -> u64 {
    let value = c.digits().iter().fold(0u64, |acc, &b| 2 * acc + b as u64);
    (1u64 << c.len()) - 1 + value
}
