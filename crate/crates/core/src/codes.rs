//! Codes for continuous functions `2^ω → ω^ω` and `(2^ω)^α → ω^ω`.
//!
//! A code is a monotone map on finite inputs with an explicit properness
//! modulus `D`: every input of length at least `D(n)` produces at least `n`
//! output symbols. The induced function on branches is the union of the
//! outputs along the branch.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orders::{FinBits, FinWord};
use crate::report::Report;

pub trait Code: Send + Sync {
    fn apply(&self, s: &FinBits) -> FinWord;

    /// `D(n)`: inputs of length `≥ D(n)` yield at least `n` outputs.
    fn modulus(&self, n: usize) -> usize;

    /// Exact minimum output length over all inputs of the given length, when
    /// the backend can compute it without enumeration.
    fn min_output_len(&self, _input_len: usize) -> Option<usize> {
        None
    }

    /// Backend-specific defects, as `(check name, witness)`.
    fn structural_defects(&self) -> Vec<(String, String)> {
        Vec::new()
    }
}

/// Code on finite tuples of binary strings.
///
/// Tuples are ordered by `s̄ ⊑ s̄′` iff `lh(s̄) ≤ lh(s̄′)` and each `s̄(k)` is an
/// initial segment of `s̄′(k)`; `apply_tuple` is monotone for `⊑`. The
/// modulus bounds the minimum coordinate length of full-arity tuples.
pub trait ProductCode: Send + Sync {
    fn arity(&self) -> usize;

    /// Callers guarantee `s.len() ≤ arity()`.
    fn apply_tuple(&self, s: &[FinBits]) -> FinWord;

    fn modulus(&self, n: usize) -> usize;
}

pub fn eval_prefix(code: &dyn Code, s: &FinBits) -> FinWord {
    code.apply(s)
}

/// The first `n` values of `f*(x)`, where `branch(d)` is `x↾d`.
pub fn eval_star(code: &dyn Code, branch: &dyn Fn(usize) -> FinBits, n: usize) -> Result<FinWord> {
    let d = code.modulus(n);
    let out = code.apply(&branch(d));
    if out.len() < n {
        return Err(Error::Modulus { context: format!("output length {} < {n} at input depth {d}", out.len()) });
    }
    Ok(out.truncate(n))
}

pub fn eval_product_prefix(code: &dyn ProductCode, s: &[FinBits]) -> Result<FinWord> {
    if s.len() > code.arity() {
        return Err(Error::Arity { arity: code.arity(), got: s.len() });
    }
    Ok(code.apply_tuple(s))
}

/// The first `n` values of `f*(x̄)` evaluated on the square prefix
/// `⟨x̄(0)↾D(n), …, x̄(α−1)↾D(n)⟩`.
pub fn eval_product_star(code: &dyn ProductCode, branch: &dyn Fn(usize) -> Vec<FinBits>, n: usize) -> Result<FinWord> {
    let d = code.modulus(n);
    let square = branch(d);
    let out = eval_product_prefix(code, &square)?;
    if out.len() < n {
        return Err(Error::Modulus {
            context: format!("product output length {} < {n} at square depth {d}", out.len()),
        });
    }
    Ok(out.truncate(n))
}

/// Exhaustive inputs are only enumerated up to this length.
const EXHAUSTIVE_LIMIT: usize = 20;

/// Checks monotonicity on all `s ⊆ s⌢i` with `lh(s) < depth` and modulus
/// soundness for `n ≤ depth`.
pub fn validate_code(code: &dyn Code, depth: usize) -> Report {
    let mut report = Report::new();
    for (name, witness) in code.structural_defects() {
        report.fail(name, witness);
    }

    let mut monotone = None;
    'outer: for s in FinBits::all_up_to(depth.saturating_sub(1)) {
        let out = code.apply(&s);
        for i in 0..2u8 {
            let ext = s.child(i);
            if !out.is_prefix_of(&code.apply(&ext)) {
                monotone = Some(format!("({s:?},{ext:?})"));
                break 'outer;
            }
        }
    }
    if report.failed("monotone").is_none() {
        report.record("monotone", monotone);
    }

    let mut modulus = None;
    for n in 0..=depth {
        let d = code.modulus(n);
        let min = match code.min_output_len(d) {
            Some(m) => m,
            None if d <= EXHAUSTIVE_LIMIT => FinBits::all_of_len(d).map(|s| code.apply(&s).len()).min().unwrap_or(0),
            None => continue,
        };
        if min < n {
            modulus = Some(format!("n={n}: inputs of length D(n)={d} reach only {min} outputs"));
            break;
        }
    }
    report.record("modulus", modulus);
    report
}

/// Monotonicity of a product code along square prefixes of a tuple of
/// branches, plus the arity-extension steps `s̄ ⊑ s̄⌢⟨…⟩`.
pub fn validate_product_code(code: &dyn ProductCode, branches: &[FinBits], depth: usize) -> Report {
    let mut report = Report::new();
    let mut witness = None;
    let mut prev: Option<(Vec<FinBits>, FinWord)> = None;
    for d in 0..=depth {
        for len in 0..=code.arity().min(branches.len()) {
            let s: Vec<FinBits> = branches[..len].iter().map(|b| b.truncate(d)).collect();
            let out = code.apply_tuple(&s);
            if let Some((ps, pout)) = &prev {
                let below = ps.len() <= s.len() && ps.iter().zip(&s).all(|(a, b)| a.is_prefix_of(b));
                if below && !pout.is_prefix_of(&out) {
                    witness = Some(format!("({ps:?},{s:?})"));
                }
            }
            prev = Some((s, out));
        }
    }
    report.record("monotone", witness);
    report
}

/// A finite-state transducer reading bits and emitting words over ℕ.
///
/// With `arity > 1` it acts on tuples by reading the square prefix
/// bit-major: `x̄(0)(0), …, x̄(α−1)(0), x̄(0)(1), …`. Tuples shorter than the
/// arity read nothing.
/// Transitions of one state on bits 0 and 1: `(target, output)`.
pub type TransitionRow = [(usize, Vec<u64>); 2];

#[derive(Clone, Debug)]
pub struct TransducerCode {
    arity: usize,
    start: usize,
    names: Vec<u32>,
    trans: Vec<TransitionRow>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct TransitionSpec {
    pub from: u32,
    pub bit: u8,
    pub to: u32,
    pub out: Vec<u64>,
}

/// `{states:[…], start, arity, trans:[{from, bit, to, out:[…]}…]}`
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct TransducerSpec {
    pub states: Vec<u32>,
    pub start: u32,
    #[serde(default = "one")]
    pub arity: usize,
    pub trans: Vec<TransitionSpec>,
}

fn one() -> usize {
    1
}

impl TransducerCode {
    pub fn from_spec(spec: &TransducerSpec) -> Result<Self> {
        let index: HashMap<u32, usize> = spec.states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        if index.len() != spec.states.len() || spec.states.is_empty() {
            return Err(Error::Schema("transducer states must be non-empty and distinct".into()));
        }
        let lookup =
            |s: u32| index.get(&s).copied().ok_or_else(|| Error::Schema(format!("unknown transducer state {s}")));
        let start = lookup(spec.start)?;
        let mut table = vec![[None, None]; spec.states.len()];
        for t in &spec.trans {
            if t.bit > 1 {
                return Err(Error::Schema(format!("transition bit {} is not binary", t.bit)));
            }
            let slot = &mut table[lookup(t.from)?][t.bit as usize];
            if slot.is_some() {
                return Err(Error::Schema(format!("duplicate transition from {} on {}", t.from, t.bit)));
            }
            *slot = Some((lookup(t.to)?, t.out.clone()));
        }
        let trans = table
            .into_iter()
            .enumerate()
            .map(|(i, [a, b])| match (a, b) {
                (Some(a), Some(b)) => Ok([a, b]),
                _ => Err(Error::Schema(format!("state {} lacks a transition", spec.states[i]))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TransducerCode { arity: spec.arity, start, names: spec.states.clone(), trans })
    }

    pub fn to_spec(&self) -> TransducerSpec {
        let mut trans = Vec::new();
        for (q, row) in self.trans.iter().enumerate() {
            for (bit, (to, out)) in row.iter().enumerate() {
                trans.push(TransitionSpec {
                    from: self.names[q],
                    bit: bit as u8,
                    to: self.names[*to],
                    out: out.clone(),
                });
            }
        }
        TransducerSpec { states: self.names.clone(), start: self.names[self.start], arity: self.arity, trans }
    }

    /// Builds a transducer from a dense table `trans[state][bit] = (to, out)`
    /// with states named `0..`.
    pub fn from_table(arity: usize, trans: Vec<TransitionRow>) -> Result<Self> {
        let names = (0..trans.len() as u32).collect::<Vec<_>>();
        let spec = TransducerSpec {
            states: names.clone(),
            start: 0,
            arity,
            trans: trans
                .iter()
                .enumerate()
                .flat_map(|(q, row)| {
                    row.iter().enumerate().map(move |(b, (to, out))| TransitionSpec {
                        from: q as u32,
                        bit: b as u8,
                        to: *to as u32,
                        out: out.clone(),
                    })
                })
                .collect(),
        };
        Self::from_spec(&spec)
    }

    /// Emits each input bit.
    pub fn echo(arity: usize) -> Self {
        Self::from_table(arity, vec![[(0, vec![0]), (0, vec![1])]]).expect("valid echo")
    }

    /// Emits one `value` per input bit.
    pub fn constant(arity: usize, value: u64) -> Self {
        Self::from_table(arity, vec![[(0, vec![value]), (0, vec![value])]]).expect("valid constant")
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn num_states(&self) -> usize {
        self.trans.len()
    }

    pub fn run(&self, stream: impl IntoIterator<Item = u8>) -> FinWord {
        let mut q = self.start;
        let mut out = Vec::new();
        for b in stream {
            let (to, word) = &self.trans[q][b as usize];
            out.extend_from_slice(word);
            q = *to;
        }
        FinWord(out)
    }

    /// States reachable from the start.
    fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.trans.len()];
        let mut stack = vec![self.start];
        while let Some(q) = stack.pop() {
            if std::mem::replace(&mut seen[q], true) {
                continue;
            }
            stack.extend(self.trans[q].iter().map(|(to, _)| *to));
        }
        seen
    }

    /// A reachable cycle of transitions emitting nothing, as a state list.
    pub fn silent_cycle(&self) -> Option<Vec<u32>> {
        let reachable = self.reachable();
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut color = vec![0u8; self.trans.len()];
        let mut path = Vec::new();
        fn dfs(me: &TransducerCode, q: usize, color: &mut [u8], path: &mut Vec<usize>) -> Option<Vec<usize>> {
            color[q] = 1;
            path.push(q);
            for (to, out) in &me.trans[q] {
                if !out.is_empty() {
                    continue;
                }
                if color[*to] == 1 {
                    let at = path.iter().position(|&p| p == *to).unwrap();
                    return Some(path[at..].to_vec());
                }
                if color[*to] == 0 {
                    if let Some(c) = dfs(me, *to, color, path) {
                        return Some(c);
                    }
                }
            }
            path.pop();
            color[q] = 2;
            None
        }
        (0..self.trans.len())
            .filter(|&q| reachable[q])
            .find_map(|q| if color[q] == 0 { dfs(self, q, &mut color, &mut path) } else { None })
            .map(|cycle| cycle.into_iter().map(|q| self.names[q]).collect())
    }

    /// Minimum number of emitted symbols over all streams of this length.
    pub fn min_stream_output(&self, len: usize) -> usize {
        let inf = usize::MAX / 2;
        let mut best = vec![inf; self.trans.len()];
        best[self.start] = 0;
        for _ in 0..len {
            let mut next = vec![inf; self.trans.len()];
            for (q, &cost) in best.iter().enumerate() {
                if cost >= inf {
                    continue;
                }
                for (to, out) in &self.trans[q] {
                    next[*to] = next[*to].min(cost + out.len());
                }
            }
            best = next;
        }
        best.into_iter().min().unwrap_or(0)
    }

    /// Least stream length whose every path emits `n` symbols. Without
    /// silent cycles each run of `states` bits emits, so `states · n`
    /// bounds the search; with one, that bound is returned unchecked.
    fn stream_modulus(&self, n: usize) -> usize {
        let cap = n * self.trans.len();
        let inf = usize::MAX / 2;
        let mut best = vec![inf; self.trans.len()];
        best[self.start] = 0;
        for len in 0..cap {
            if best.iter().all(|&c| c >= n) {
                return len;
            }
            let mut next = vec![inf; self.trans.len()];
            for (q, &cost) in best.iter().enumerate() {
                if cost < inf {
                    for (to, out) in &self.trans[q] {
                        next[*to] = next[*to].min(cost + out.len());
                    }
                }
            }
            best = next;
        }
        cap
    }
}

impl Code for TransducerCode {
    fn apply(&self, s: &FinBits) -> FinWord {
        self.run(s.iter().copied())
    }

    fn modulus(&self, n: usize) -> usize {
        self.stream_modulus(n)
    }

    fn min_output_len(&self, input_len: usize) -> Option<usize> {
        Some(self.min_stream_output(input_len))
    }

    fn structural_defects(&self) -> Vec<(String, String)> {
        match self.silent_cycle() {
            Some(cycle) => vec![("cycle-emission".into(), format!("silent cycle through states {cycle:?}"))],
            None => Vec::new(),
        }
    }
}

impl ProductCode for TransducerCode {
    fn arity(&self) -> usize {
        self.arity
    }

    fn apply_tuple(&self, s: &[FinBits]) -> FinWord {
        if s.len() < self.arity || self.arity == 0 {
            return FinWord::empty();
        }
        let square = s.iter().map(|b| b.len()).min().unwrap_or(0);
        self.run((0..square).flat_map(|i| s.iter().map(move |b| b[i])))
    }

    fn modulus(&self, n: usize) -> usize {
        if self.arity == 0 {
            return 0;
        }
        self.stream_modulus(n).div_ceil(self.arity)
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum TailRule {
    /// Each bit past the table depth appends a copy of the last symbol
    /// (0 for an empty word).
    RepeatLast,
    /// Each bit past the table depth appends 0.
    Zeros,
}

/// `{depth, table:[[s, w]…], tail}`
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct TableSpec {
    pub depth: usize,
    pub table: Vec<(FinBits, FinWord)>,
    pub tail: TailRule,
}

/// A finite table of outputs for inputs of length `≤ depth`; inputs missing
/// from the table inherit the value of their longest tabled prefix (∅ if
/// none), and deeper inputs follow the tail rule.
#[derive(Clone, Debug)]
pub struct TableCode {
    depth: usize,
    table: BTreeMap<FinBits, FinWord>,
    tail: TailRule,
}

impl TableCode {
    pub fn from_spec(spec: &TableSpec) -> Result<Self> {
        let mut table = BTreeMap::new();
        for (s, w) in &spec.table {
            if s.len() > spec.depth {
                return Err(Error::Schema(format!("table entry {s:?} deeper than depth {}", spec.depth)));
            }
            if table.insert(s.clone(), w.clone()).is_some() {
                return Err(Error::Schema(format!("duplicate table entry {s:?}")));
            }
        }
        Ok(TableCode { depth: spec.depth, table, tail: spec.tail })
    }

    pub fn to_spec(&self) -> TableSpec {
        TableSpec {
            depth: self.depth,
            table: self.table.iter().map(|(s, w)| (s.clone(), w.clone())).collect(),
            tail: self.tail,
        }
    }

    fn lookup(&self, s: &FinBits) -> FinWord {
        (0..=s.len()).rev().find_map(|len| self.table.get(&s.truncate(len))).cloned().unwrap_or_default()
    }

    /// Pairs of tabled inputs `s ⊆ s′` whose outputs do not nest.
    pub fn table_violations(&self) -> Vec<(FinBits, FinBits)> {
        let mut out = Vec::new();
        for (s, w) in &self.table {
            for (s2, w2) in self.table.range(s.clone()..) {
                if s != s2 && s.is_prefix_of(s2) && !w.is_prefix_of(w2) {
                    out.push((s.clone(), s2.clone()));
                }
            }
        }
        out
    }
}

impl Code for TableCode {
    fn apply(&self, s: &FinBits) -> FinWord {
        let head = s.truncate(self.depth);
        let mut w = self.lookup(&head).0;
        for _ in self.depth..s.len() {
            let sym = match self.tail {
                TailRule::Zeros => 0,
                TailRule::RepeatLast => w.last().copied().unwrap_or(0),
            };
            w.push(sym);
        }
        FinWord(w)
    }

    fn modulus(&self, n: usize) -> usize {
        self.depth + n
    }

    fn structural_defects(&self) -> Vec<(String, String)> {
        self.table_violations().into_iter().map(|(a, b)| ("monotone".to_string(), format!("({a:?},{b:?})"))).collect()
    }
}

impl ProductCode for TableCode {
    fn arity(&self) -> usize {
        1
    }

    fn apply_tuple(&self, s: &[FinBits]) -> FinWord {
        self.apply(s.first().unwrap_or(&FinBits::empty()))
    }

    fn modulus(&self, n: usize) -> usize {
        Code::modulus(self, n)
    }
}

/// A code ignoring its input. Only meaningful as the degenerate arity-0
/// case, where the single input is the empty tuple.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ConstantCode {
    pub constant: FinWord,
    #[serde(default)]
    pub arity: usize,
}

impl ProductCode for ConstantCode {
    fn arity(&self) -> usize {
        self.arity
    }

    fn apply_tuple(&self, _s: &[FinBits]) -> FinWord {
        self.constant.clone()
    }

    fn modulus(&self, _n: usize) -> usize {
        0
    }
}

/// Any file-describable code.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(untagged)]
pub enum CodeSpec {
    Transducer(TransducerSpec),
    Table(TableSpec),
    Constant(ConstantCode),
}

#[derive(Clone, Debug)]
pub enum AnyCode {
    Transducer(TransducerCode),
    Table(TableCode),
    Constant(ConstantCode),
}

impl CodeSpec {
    pub fn build(&self) -> Result<AnyCode> {
        Ok(match self {
            CodeSpec::Transducer(t) => AnyCode::Transducer(TransducerCode::from_spec(t)?),
            CodeSpec::Table(t) => AnyCode::Table(TableCode::from_spec(t)?),
            CodeSpec::Constant(c) => AnyCode::Constant(c.clone()),
        })
    }
}

impl AnyCode {
    /// The same code viewed on single branches; arity must be 1.
    pub fn as_code(&self) -> Result<&dyn Code> {
        match self {
            AnyCode::Transducer(t) if t.arity() == 1 => Ok(t),
            AnyCode::Table(t) => Ok(t),
            other => {
                Err(Error::Schema(format!("expected a single-branch code, got arity {}", other.as_product().arity())))
            }
        }
    }

    pub fn as_product(&self) -> &dyn ProductCode {
        match self {
            AnyCode::Transducer(t) => t,
            AnyCode::Table(t) => t,
            AnyCode::Constant(c) => c,
        }
    }

    /// Owned form of [`AnyCode::as_code`].
    pub fn shared(&self) -> Result<Arc<dyn Code>> {
        self.as_code()?;
        Ok(match self.clone() {
            AnyCode::Transducer(t) => Arc::new(t),
            AnyCode::Table(t) => Arc::new(t),
            AnyCode::Constant(_) => unreachable!("rejected by as_code"),
        })
    }

    pub fn shared_product(&self) -> Arc<dyn ProductCode> {
        match self.clone() {
            AnyCode::Transducer(t) => Arc::new(t),
            AnyCode::Table(t) => Arc::new(t),
            AnyCode::Constant(c) => Arc::new(c),
        }
    }
}
