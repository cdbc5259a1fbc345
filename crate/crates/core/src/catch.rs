//! Catching a single code on a perfect tree.
//!
//! From a code `f` and a tree `p` this builds a subtree `q ≤ p` with
//! skeleton `c ↦ t_c` and a partial `h` such that
//! `h(node_index(c)) = f(t_c)(node_index(c))` for every `c`. Every branch of
//! `q` passes through infinitely many `t_c`, so `h` agrees with `f*(x)`
//! infinitely often on each branch `x ∈ [q]`.
//!
//! The node `t_c` is chosen among the splitting nodes of `p` above a base
//! (the root for `∅`, the `i`-th successor of `t_{c'}` for `c = c'⌢i`) as
//! the first one along the leftmost path whose output covers
//! `node_index(c)`. That is the least candidate in prefix-first
//! lexicographic order.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::codes::{eval_star, Code};
use crate::error::{Error, Result};
use crate::orders::{node_index, node_unindex, FinBits};
use crate::report::Report;
use crate::sampling::{derive_seed, SampledBranch};
use crate::trees::SkeletonTree;

#[derive(Clone, Debug, PartialEq, Eq)]
struct CaughtNode {
    /// Index of `t_c` in the skeleton of `p`.
    p_index: FinBits,
    t: FinBits,
    value: u64,
}

/// One row `(c, t_c, node_index(c), f(t_c)(node_index(c)))`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatchTrace {
    pub c: FinBits,
    pub t_c: FinBits,
    pub index: u64,
    pub value: u64,
}

/// Lazily computed, memoized output of [`catch_single`].
#[derive(Clone)]
pub struct CatchResult {
    p: SkeletonTree,
    f: Arc<dyn Code>,
    memo: Arc<RwLock<HashMap<FinBits, CaughtNode>>>,
}

impl std::fmt::Debug for CatchResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CatchResult").field("p", &self.p).finish_non_exhaustive()
    }
}

pub fn catch_single(p: SkeletonTree, f: Arc<dyn Code>) -> CatchResult {
    CatchResult { p, f, memo: Arc::new(RwLock::new(HashMap::new())) }
}

impl CatchResult {
    fn caught(&self, c: &FinBits) -> Result<CaughtNode> {
        if let Some(node) = self.memo.read().unwrap().get(c) {
            return Ok(node.clone());
        }
        let base = match c.len() {
            0 => FinBits::empty(),
            n => {
                let parent = self.caught(&c.truncate(n - 1))?;
                parent.p_index.child(c[n - 1])
            }
        };
        let node = self.search(&base, node_index(c))?;
        self.memo.write().unwrap().insert(c.clone(), node.clone());
        Ok(node)
    }

    /// First `k` such that `f(p.skel(base⌢0^k))` reaches `index`. Node
    /// lengths grow with `k` and `f` is monotone, so the predicate is
    /// monotone and a galloping search finds the same `k`.
    fn search(&self, base: &FinBits, index: u64) -> Result<CaughtNode> {
        let need = index as usize + 1;
        let bound = self.f.modulus(need);
        let probe = |k: usize| {
            let t = self.p.skeleton(&base.concat(&FinBits::zeros(k)));
            let out = self.f.apply(&t);
            (t, out)
        };
        let violation = |t: &FinBits, outputs: usize| Error::Modulus {
            context: format!("f({t:?}) has {outputs} values but lh = {} ≥ D({need}) = {bound}", t.len()),
        };
        // invariant: probe(lo) misses, probe(hi) hits
        let (mut lo, mut hi) = (None, 0usize);
        loop {
            let (t, out) = probe(hi);
            if out.len() > index as usize {
                break;
            }
            if t.len() >= bound {
                return Err(violation(&t, out.len()));
            }
            lo = Some(hi);
            hi = 2 * hi + 1;
        }
        if let Some(mut miss) = lo {
            while hi - miss > 1 {
                let mid = miss + (hi - miss) / 2;
                if probe(mid).1.len() > index as usize {
                    hi = mid;
                } else {
                    miss = mid;
                }
            }
            let (t, out) = probe(miss);
            if t.len() >= bound {
                return Err(violation(&t, out.len()));
            }
        }
        let (t, out) = probe(hi);
        let value = out.get(index as usize).expect("probe hit");
        Ok(CaughtNode { p_index: base.concat(&FinBits::zeros(hi)), t, value })
    }

    /// `t_c`
    pub fn node(&self, c: &FinBits) -> Result<FinBits> {
        Ok(self.caught(c)?.t)
    }

    /// `h(n)`; every `n` is `node_index(c)` for exactly one `c`.
    pub fn h(&self, n: u64) -> Result<u64> {
        Ok(self.caught(&node_unindex(n))?.value)
    }

    /// The caught subtree, with skeleton `c ↦ t_c`.
    ///
    /// # Panics
    ///
    /// Queries panic where the construction fails; [`CatchResult::trace`]
    /// reports those failures as errors.
    pub fn q(&self) -> SkeletonTree {
        let me = self.clone();
        SkeletonTree::from_rule(move |c: &FinBits| me.node(c).expect("catch construction failed"))
    }

    /// Rows for every `c` with `lh(c) ≤ depth`, in length-lexicographic order.
    pub fn trace(&self, depth: usize) -> Result<Vec<CatchTrace>> {
        FinBits::all_up_to(depth)
            .map(|c| {
                let node = self.caught(&c)?;
                Ok(CatchTrace { index: node_index(&c), t_c: node.t, value: node.value, c })
            })
            .collect()
    }
}

/// Checks the construction to `depth`; see [`verify_trace`].
pub fn verify_catch(result: &CatchResult, p: &SkeletonTree, f: &dyn Code, depth: usize) -> Report {
    match result.trace(depth) {
        Ok(rows) => verify_trace(&rows, p, f),
        Err(e) => {
            let mut report = Report::new();
            report.fail("construction", e.to_string());
            report
        }
    }
}

/// Checks a trace against `p` and `f`: each `t_c` is a splitting node of
/// `p`, `t_{c⌢i} ⊇ t_c⌢i`, `node_index(c) ∈ dom f(t_c)`, and the recorded
/// value is `f(t_c)(node_index(c))`.
pub fn verify_trace(rows: &[CatchTrace], p: &SkeletonTree, f: &dyn Code) -> Report {
    let by_c: HashMap<&FinBits, &CatchTrace> = rows.iter().map(|r| (&r.c, r)).collect();
    let mut splitting = None;
    let mut successor = None;
    let mut domain = None;
    let mut agreement = None;
    for row in rows {
        if splitting.is_none() && !p.is_splitting(&row.t_c) {
            splitting = Some(format!("c={:?}: {:?} is not a splitting node", row.c, row.t_c));
        }
        if let Some(n) = row.c.len().checked_sub(1) {
            let parent = by_c.get(&row.c.truncate(n));
            let ok = parent.is_some_and(|par| par.t_c.child(row.c[n]).is_prefix_of(&row.t_c));
            if successor.is_none() && !ok {
                successor = Some(format!("c={:?}", row.c));
            }
        }
        let out = f.apply(&row.t_c);
        if domain.is_none() && (row.index != node_index(&row.c) || out.get(row.index as usize).is_none()) {
            domain = Some(format!("c={:?}: index {} vs output length {}", row.c, row.index, out.len()));
        }
        if agreement.is_none() {
            if let Some(v) = out.get(row.index as usize) {
                if v != row.value {
                    agreement = Some(format!("c={:?}: h({}) = {} but f(t_c) gives {v}", row.c, row.index, row.value));
                }
            }
        }
    }
    let mut report = Report::new();
    report.record("splitting", splitting);
    report.record("successor", successor);
    report.record("domain", domain);
    report.record("agreement", agreement);
    report
}

/// For `samples` seeded branches `x` of `q`: `h(node_index(c)) = f*(x)(node_index(c))`
/// at every `c` with `lh(c) ≤ depth` on the branch address.
pub fn verify_branches(result: &CatchResult, f: &dyn Code, depth: usize, samples: usize, seed: u64) -> Report {
    let q = result.q();
    let mut witness = None;
    'outer: for k in 0..samples {
        let branch = SampledBranch::new(q.clone(), derive_seed(seed, k as u64));
        let address = branch.address(depth);
        for n in 0..=depth {
            let c = address.truncate(n);
            let index = node_index(&c);
            let star = match eval_star(f, &|len| branch.prefix(len), index as usize + 1) {
                Ok(w) => w,
                Err(e) => {
                    witness = Some(format!("branch {k}: {e}"));
                    break 'outer;
                }
            };
            let h = match result.h(index) {
                Ok(v) => v,
                Err(e) => {
                    witness = Some(format!("branch {k}: {e}"));
                    break 'outer;
                }
            };
            if star.get(index as usize) != Some(h) {
                witness =
                    Some(format!("branch {k}, c={c:?}: h({index}) = {h}, f*(x) = {:?}", star.get(index as usize)));
                break 'outer;
            }
        }
    }
    let mut report = Report::new();
    report.record("branch-agreement", witness);
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::TransducerCode;

    fn bits(s: &str) -> FinBits {
        s.parse().unwrap()
    }

    #[test]
    fn echo_on_full_tree() {
        let r = catch_single(SkeletonTree::full(), Arc::new(TransducerCode::echo(1)));
        assert_eq!(r.node(&bits("")).unwrap(), bits("0"));
        assert_eq!(r.node(&bits("0")).unwrap(), bits("00"));
        assert_eq!(r.node(&bits("1")).unwrap(), bits("010"));
        assert_eq!((r.h(0).unwrap(), r.h(1).unwrap(), r.h(2).unwrap()), (0, 0, 0));
        let echo = TransducerCode::echo(1);
        assert!(verify_catch(&r, &SkeletonTree::full(), &echo, 6).passed());
        assert!(verify_branches(&r, &echo, 6, 10, 7).passed());
    }

    #[test]
    fn constant_code() {
        let zero = TransducerCode::constant(1, 0);
        let r = catch_single(SkeletonTree::full(), Arc::new(zero));
        for row in r.trace(4).unwrap() {
            assert_eq!(row.value, 0);
        }
    }

    #[test]
    fn planted_defects() {
        let echo = TransducerCode::echo(1);
        let p = SkeletonTree::full();
        let r = catch_single(p.clone(), Arc::new(echo.clone()));
        let mut rows = r.trace(3).unwrap();
        rows[0].value += 1;
        let report = verify_trace(&rows, &p, &echo);
        assert_eq!(report.failed("agreement").unwrap().witness.as_deref().map(|w| w.starts_with("c=⟨⟩")), Some(true));

        let mut rows = r.trace(3).unwrap();
        let one = rows.iter_mut().find(|row| row.c == bits("1")).unwrap();
        one.t_c = bits("001");
        let report = verify_trace(&rows, &p, &echo);
        assert_eq!(report.failed("successor").unwrap().witness.as_deref(), Some("c=⟨1⟩"));
    }

    #[test]
    fn trace_is_deterministic() {
        let code =
            TransducerCode::from_table(1, vec![[(1, vec![]), (0, vec![4])], [(0, vec![2, 2]), (1, vec![1])]]).unwrap();
        let p = SkeletonTree::full().restrict(&bits("10")).unwrap();
        let a = catch_single(p.clone(), Arc::new(code.clone())).trace(5).unwrap();
        let b = catch_single(p.clone(), Arc::new(code.clone())).trace(5).unwrap();
        assert_eq!(a, b);
        let r = catch_single(p.clone(), Arc::new(code.clone()));
        assert!(verify_catch(&r, &p, &code, 6).passed());
        let q = r.q();
        assert!(q.validate(5).is_ok());
        for s in FinBits::all_up_to(8).filter(|s| q.contains(s)) {
            assert!(p.contains(&s));
        }
    }
}
