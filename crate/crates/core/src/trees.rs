//! Perfect subtrees of `2^{<ω}` represented by their splitting skeleton.
//!
//! A tree is a rule `c ↦ t_c` on binary strings. The represented tree is the
//! downward closure of the image and its splitting nodes are exactly the
//! values `t_c`. Every operation here is a query against that rule, so
//! trees built as fusion limits can be inspected to any finite depth.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orders::{node_index, FinBits};
use crate::report::Report;

/// A splitting-skeleton rule. Implementations must be deterministic.
pub trait SkeletonRule: Send + Sync {
    fn node(&self, c: &FinBits) -> FinBits;
}

impl<F> SkeletonRule for F
where
    F: Fn(&FinBits) -> FinBits + Send + Sync,
{
    fn node(&self, c: &FinBits) -> FinBits {
        self(c)
    }
}

#[derive(Clone)]
pub struct SkeletonTree {
    rule: Arc<dyn SkeletonRule>,
}

impl fmt::Debug for SkeletonTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SkeletonTree").field("stem", &self.skeleton(&FinBits::empty())).finish()
    }
}

struct Full;

impl SkeletonRule for Full {
    fn node(&self, c: &FinBits) -> FinBits {
        c.clone()
    }
}

struct Memo {
    inner: Arc<dyn SkeletonRule>,
    cache: RwLock<HashMap<FinBits, FinBits>>,
}

impl SkeletonRule for Memo {
    fn node(&self, c: &FinBits) -> FinBits {
        if let Some(t) = self.cache.read().unwrap().get(c) {
            return t.clone();
        }
        let t = self.inner.node(c);
        self.cache.write().unwrap().entry(c.clone()).or_insert(t).clone()
    }
}

struct Restricted {
    base: SkeletonTree,
    stem: FinBits,
}

impl SkeletonRule for Restricted {
    fn node(&self, c: &FinBits) -> FinBits {
        self.base.skeleton(&self.stem.concat(c))
    }
}

struct Pullback {
    outer: SkeletonTree,
    inner: SkeletonTree,
}

impl SkeletonRule for Pullback {
    fn node(&self, c: &FinBits) -> FinBits {
        self.outer.skeleton(&self.inner.skeleton(c))
    }
}

/// A tree obtained from `base` by replacing skeleton cones.
///
/// Each graft `key ↦ target` makes the subtree above index `key` equal to
/// the subtree of `base` above index `target` (which must extend `key`).
/// Lookups use the longest grafted key that is a prefix of the query.
#[derive(Clone)]
pub struct Grafted {
    base: SkeletonTree,
    grafts: Arc<HashMap<FinBits, FinBits>>,
}

impl Grafted {
    /// Skeleton index in `base` of the node at index `c`.
    pub fn base_index(grafts: &HashMap<FinBits, FinBits>, c: &FinBits) -> FinBits {
        for len in (0..=c.len()).rev() {
            if let Some(target) = grafts.get(&c.truncate(len)) {
                return target.concat(&c.suffix(len));
            }
        }
        c.clone()
    }
}

impl SkeletonRule for Grafted {
    fn node(&self, c: &FinBits) -> FinBits {
        self.base.skeleton(&Grafted::base_index(&self.grafts, c))
    }
}

/// Skeleton driven by a finite automaton reading the index `c`.
///
/// `t_∅ = stem`; reading bit `i` in state `q` moves to `next[q][i]` and sets
/// `t_{c⌢i} = t_c ⌢ i ⌢ gap[q][i]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AutomatonTree {
    pub stem: FinBits,
    pub next: Vec<[usize; 2]>,
    pub gap: Vec<[FinBits; 2]>,
}

impl SkeletonRule for AutomatonTree {
    fn node(&self, c: &FinBits) -> FinBits {
        let mut t = self.stem.clone();
        let mut q = 0usize;
        for &b in c.iter() {
            t.push(b);
            t = t.concat(&self.gap[q][b as usize]);
            q = self.next[q][b as usize];
        }
        t
    }
}

/// A finite skeleton table `c ↦ t_c` for `lh(c) ≤ depth`, extended above
/// depth by the full tree: `t_{c⌢r} = t_c ⌢ r` for `lh(c) = depth`.
struct PrefixTable {
    depth: usize,
    table: HashMap<FinBits, FinBits>,
}

impl SkeletonRule for PrefixTable {
    fn node(&self, c: &FinBits) -> FinBits {
        if c.len() <= self.depth {
            self.table[c].clone()
        } else {
            self.table[&c.truncate(self.depth)].concat(&c.suffix(self.depth))
        }
    }
}

impl SkeletonTree {
    /// `2^{<ω}` itself: the identity skeleton.
    pub fn full() -> Self {
        SkeletonTree { rule: Arc::new(Full) }
    }

    pub fn from_rule(rule: impl SkeletonRule + 'static) -> Self {
        SkeletonTree { rule: Arc::new(rule) }
    }

    /// Caches skeleton values; observationally the same tree.
    pub fn memoized(self) -> Self {
        SkeletonTree { rule: Arc::new(Memo { inner: self.rule, cache: RwLock::new(HashMap::new()) }) }
    }

    /// Tree with cone replacements `key ↦ target` applied over `base`.
    pub fn grafted(base: SkeletonTree, grafts: HashMap<FinBits, FinBits>) -> Self {
        SkeletonTree::from_rule(Grafted { base, grafts: Arc::new(grafts) })
    }

    /// Builds a tree from a finite prefix table; every `c` with
    /// `lh(c) ≤ depth` must be present.
    pub fn from_prefix(prefix: &TreePrefix) -> Result<Self> {
        let table: HashMap<FinBits, FinBits> = prefix.skeleton.iter().cloned().collect();
        if let Some(c) = FinBits::all_up_to(prefix.depth).find(|c| !table.contains_key(c)) {
            return Err(Error::Schema(format!("skeleton table is missing index {c:?}")));
        }
        Ok(SkeletonTree::from_rule(PrefixTable { depth: prefix.depth, table }))
    }

    /// `t_c`.
    pub fn skeleton(&self, c: &FinBits) -> FinBits {
        self.rule.node(c)
    }

    pub fn stem(&self) -> FinBits {
        self.skeleton(&FinBits::empty())
    }

    /// Walks the skeleton along `s`; returns the last index `c` reached and
    /// whether `s` is a member of the tree.
    fn walk(&self, s: &FinBits) -> (FinBits, bool) {
        let mut c = FinBits::empty();
        loop {
            let t = self.skeleton(&c);
            if s.is_prefix_of(&t) {
                return (c, true);
            }
            if !t.is_prefix_of(s) {
                return (c, false);
            }
            c.push(s[t.len()]);
        }
    }

    pub fn contains(&self, s: &FinBits) -> bool {
        self.walk(s).1
    }

    /// The least-length index `c` with `t ⊆ t_c`.
    pub fn stem_index(&self, t: &FinBits) -> Result<FinBits> {
        match self.walk(t) {
            (c, true) => Ok(c),
            _ => Err(Error::NotInTree(t.clone())),
        }
    }

    /// `p_t`: the nodes of the tree comparable with `t`.
    pub fn restrict(&self, t: &FinBits) -> Result<SkeletonTree> {
        let stem = self.stem_index(t)?;
        Ok(SkeletonTree::from_rule(Restricted { base: self.clone(), stem }))
    }

    /// `c ↦ self.skel(inner.skel(c))`; the branch set is the preimage of
    /// `[inner]` under the homeomorphism `[self] → 2^ω`.
    pub fn pullback(&self, inner: &SkeletonTree) -> SkeletonTree {
        SkeletonTree::from_rule(Pullback { outer: self.clone(), inner: inner.clone() })
    }

    /// The longest `c` with `t_c ⊆ s` (∅ when `s` lies below the stem).
    pub fn homeo_prefix(&self, s: &FinBits) -> Result<FinBits> {
        if !self.contains(s) {
            return Err(Error::NotInTree(s.clone()));
        }
        let mut c = FinBits::empty();
        if !self.skeleton(&c).is_prefix_of(s) {
            return Ok(c);
        }
        loop {
            let t = self.skeleton(&c);
            if t.len() == s.len() {
                return Ok(c);
            }
            let next = c.child(s[t.len()]);
            if self.skeleton(&next).is_prefix_of(s) {
                c = next;
            } else {
                return Ok(c);
            }
        }
    }

    /// Is `s` a splitting node, i.e. in the image of the skeleton?
    pub fn is_splitting(&self, s: &FinBits) -> bool {
        match self.homeo_prefix(s) {
            Ok(c) => &self.skeleton(&c) == s,
            Err(_) => false,
        }
    }

    /// `p_n`: the `n`-th splitting nodes, in lexicographic order.
    pub fn nth_splitting_front(&self, n: usize) -> Vec<FinBits> {
        FinBits::all_of_len(n).map(|c| self.skeleton(&c)).collect()
    }

    /// Immediate successors of the `n`-th splitting nodes.
    pub fn succ_of_nth_front(&self, n: usize) -> Vec<FinBits> {
        self.nth_splitting_front(n).into_iter().flat_map(|t| [t.child(0), t.child(1)]).collect()
    }

    /// Dumps `c ↦ t_c` for every `c` of length `≤ depth`.
    pub fn prefix_table(&self, depth: usize) -> TreePrefix {
        TreePrefix {
            depth,
            skeleton: FinBits::all_up_to(depth)
                .map(|c| {
                    let t = self.skeleton(&c);
                    (c, t)
                })
                .collect(),
        }
    }

    /// Checks the skeleton invariants for all indices of length `≤ depth`.
    pub fn validate(&self, depth: usize) -> TreeReport {
        let mut violations = Vec::new();
        // listed in length-lexicographic order, so `c` sits at `node_index(c)`
        let indices: Vec<FinBits> = FinBits::all_up_to(depth).collect();
        let skel: Vec<FinBits> = indices.iter().map(|c| self.skeleton(c)).collect();
        let at = |c: &FinBits| &skel[node_index(c) as usize];

        for c in indices.iter().filter(|c| c.len() < depth) {
            let t = at(c);
            for i in 0..2u8 {
                let child = at(&c.child(i));
                if !t.is_prefix_of(child) {
                    violations.push(Violation::new(TreeInvariant::Monotone, format!("{c:?}")));
                }
                if !t.child(i).is_prefix_of(child) {
                    violations.push(Violation::new(TreeInvariant::SplittingFaithful, format!("{:?}", c.child(i))));
                }
            }
        }

        for (i, a) in indices.iter().enumerate() {
            for (j, b) in indices.iter().enumerate().skip(i + 1) {
                if a.comparable(b) {
                    continue;
                }
                if a.cmp(b) != skel[i].cmp(&skel[j]) || skel[i].comparable(&skel[j]) {
                    violations.push(Violation::new(TreeInvariant::LexPreserving, format!("({a:?},{b:?})")));
                }
            }
        }

        for n in 0..=depth {
            let front: Vec<&FinBits> = FinBits::all_of_len(n).map(|c| at(&c)).collect();
            let bad = front.iter().enumerate().find_map(|(i, a)| {
                front[i + 1..].iter().find(|b| a.comparable(b)).map(|b| (a.to_owned(), b.to_owned()))
            });
            if let Some((a, b)) = bad {
                violations
                    .push(Violation::new(TreeInvariant::Front, format!("level {n}: {a:?} and {b:?} are comparable")));
            }
        }
        TreeReport { depth, violations }
    }
}

/// Serialized finite-depth view of a skeleton: `{depth, skeleton:[[c, t_c]…]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreePrefix {
    pub depth: usize,
    pub skeleton: Vec<(FinBits, FinBits)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TreeInvariant {
    Monotone,
    SplittingFaithful,
    LexPreserving,
    Front,
}

impl TreeInvariant {
    pub fn name(self) -> &'static str {
        match self {
            TreeInvariant::Monotone => "monotone",
            TreeInvariant::SplittingFaithful => "splitting-faithful",
            TreeInvariant::LexPreserving => "lex-preserving",
            TreeInvariant::Front => "front",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub invariant: TreeInvariant,
    pub witness: String,
}

impl Violation {
    fn new(invariant: TreeInvariant, witness: String) -> Self {
        Violation { invariant, witness }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeReport {
    pub depth: usize,
    pub violations: Vec<Violation>,
}

impl TreeReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, invariant: TreeInvariant) -> bool {
        self.violations.iter().any(|v| v.invariant == invariant)
    }

    pub fn to_report(&self) -> Report {
        let mut report = Report::new();
        for inv in [
            TreeInvariant::Monotone,
            TreeInvariant::SplittingFaithful,
            TreeInvariant::LexPreserving,
            TreeInvariant::Front,
        ] {
            let first = self.violations.iter().find(|v| v.invariant == inv);
            report.record(inv.name(), first.map(|v| v.witness.clone()));
        }
        report
    }
}

/// File description of a tree.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TreeSpec {
    Full,
    Restrict { base: Box<TreeSpec>, at: FinBits },
    Pullback { outer: Box<TreeSpec>, inner: Box<TreeSpec> },
    Automaton(AutomatonTree),
    Prefix(TreePrefix),
}

impl TreeSpec {
    pub fn build(&self) -> Result<SkeletonTree> {
        Ok(match self {
            TreeSpec::Full => SkeletonTree::full(),
            TreeSpec::Restrict { base, at } => base.build()?.restrict(at)?,
            TreeSpec::Pullback { outer, inner } => outer.build()?.pullback(&inner.build()?),
            TreeSpec::Automaton(a) => {
                if a.next.is_empty() || a.next.len() != a.gap.len() {
                    return Err(Error::Schema("automaton tree needs matching next/gap tables".into()));
                }
                if a.next.iter().flatten().any(|&q| q >= a.next.len()) {
                    return Err(Error::Schema("automaton tree references an unknown state".into()));
                }
                SkeletonTree::from_rule(a.clone()).memoized()
            }
            TreeSpec::Prefix(p) => SkeletonTree::from_prefix(p)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(s: &str) -> FinBits {
        s.parse().unwrap()
    }

    #[test]
    fn full_tree_basics() {
        let full = SkeletonTree::full();
        assert_eq!(full.skeleton(&FinBits::empty()), FinBits::empty());
        assert_eq!(full.skeleton(&bits("01")), bits("01"));
        assert!(FinBits::all_up_to(10).all(|s| full.contains(&s)));
        assert_eq!(full.nth_splitting_front(0), vec![FinBits::empty()]);
        assert_eq!(full.nth_splitting_front(1), vec![bits("0"), bits("1")]);
        assert_eq!(full.succ_of_nth_front(0), vec![bits("0"), bits("1")]);
        assert_eq!(full.succ_of_nth_front(1), vec![bits("00"), bits("01"), bits("10"), bits("11")]);
        assert!(full.validate(8).is_ok());
    }

    #[test]
    fn restrict_examples() {
        let full = SkeletonTree::full();
        let r = full.restrict(&FinBits::empty()).unwrap();
        assert!(FinBits::all_up_to(5).all(|c| r.skeleton(&c) == c));
        let r0 = full.restrict(&bits("0")).unwrap();
        assert_eq!(r0.stem(), bits("0"));
        let r1 = full.restrict(&bits("1")).unwrap();
        assert_eq!(r1.stem(), bits("1"));
        assert!(!r1.contains(&bits("0")));
        assert!(r1.contains(&bits("1")));
        assert!(r1.contains(&FinBits::empty()));
        assert!(matches!(r1.restrict(&bits("00")), Err(Error::NotInTree(_))));
    }

    #[test]
    fn restrict_inside_a_sparse_tree() {
        // t_c = c with every bit doubled
        let doubled = SkeletonTree::from_rule(|c: &FinBits| FinBits::from_digits(c.iter().flat_map(|&b| [b, b])));
        assert!(doubled.validate(5).is_ok());
        assert!(doubled.contains(&bits("0")));
        assert!(!doubled.contains(&bits("01")));
        // ⟨0⟩ lies below the splitting node ⟨0,0⟩ = t_⟨0⟩
        let r = doubled.restrict(&bits("0")).unwrap();
        assert_eq!(r.stem(), bits("00"));
        assert_eq!(r.skeleton(&bits("1")), bits("0011"));
        assert_eq!(doubled.homeo_prefix(&bits("0011")).unwrap(), bits("01"));
        assert_eq!(doubled.homeo_prefix(&bits("001")).unwrap(), bits("0"));
        assert!(doubled.is_splitting(&bits("0011")));
        assert!(!doubled.is_splitting(&bits("001")));
    }

    #[test]
    fn pullback_identities() {
        let doubled = SkeletonTree::from_rule(|c: &FinBits| FinBits::from_digits(c.iter().flat_map(|&b| [b, b])));
        let full = SkeletonTree::full();
        let a = doubled.pullback(&full);
        let b = full.pullback(&doubled);
        for c in FinBits::all_up_to(6) {
            assert_eq!(a.skeleton(&c), doubled.skeleton(&c));
            assert_eq!(b.skeleton(&c), doubled.skeleton(&c));
        }
    }

    #[test]
    fn homeo_inverts_skeleton() {
        let t = SkeletonTree::full().restrict(&bits("10")).unwrap();
        for c in FinBits::all_up_to(6) {
            assert_eq!(t.homeo_prefix(&t.skeleton(&c)).unwrap(), c);
        }
        assert_eq!(t.homeo_prefix(&bits("1")).unwrap(), FinBits::empty());
        assert!(t.homeo_prefix(&bits("0")).is_err());
    }

    #[test]
    fn planted_defect_is_reported() {
        let bad =
            SkeletonTree::from_rule(|c: &FinBits| if c.len() == 1 { FinBits::empty().child(0) } else { c.clone() });
        let report = bad.validate(2);
        assert!(report.has(TreeInvariant::LexPreserving));
        assert!(report
            .violations
            .iter()
            .any(|v| v.invariant == TreeInvariant::LexPreserving && v.witness == "(⟨0⟩,⟨1⟩)"));
        assert!(!report.to_report().passed());
    }

    #[test]
    fn prefix_roundtrip() {
        let t = SkeletonTree::from_rule(AutomatonTree {
            stem: bits("1"),
            next: vec![[1, 0], [0, 1]],
            gap: vec![[bits(""), bits("0")], [bits("11"), bits("")]],
        });
        let prefix = t.prefix_table(3);
        assert_eq!(prefix.skeleton.len(), 15);
        let json = serde_json::to_string(&prefix).unwrap();
        let back: TreePrefix = serde_json::from_str(&json).unwrap();
        let rebuilt = SkeletonTree::from_prefix(&back).unwrap();
        for c in FinBits::all_up_to(3) {
            assert_eq!(rebuilt.skeleton(&c), t.skeleton(&c));
        }
        assert!(rebuilt.validate(6).is_ok());
    }

    #[test]
    fn grafts_replace_cones() {
        let mut grafts = HashMap::new();
        grafts.insert(bits("1"), bits("1010"));
        let g = SkeletonTree::grafted(SkeletonTree::full(), grafts);
        assert_eq!(g.skeleton(&bits("0")), bits("0"));
        assert_eq!(g.skeleton(&bits("1")), bits("1010"));
        assert_eq!(g.skeleton(&bits("11")), bits("10101"));
        assert!(g.validate(5).is_ok());
    }

    #[test]
    fn memo_is_invisible() {
        let t = SkeletonTree::full().restrict(&bits("01")).unwrap();
        let m = t.clone().memoized();
        for _ in 0..2 {
            for c in FinBits::all_up_to(4) {
                assert_eq!(m.skeleton(&c), t.skeleton(&c));
            }
        }
    }
}
