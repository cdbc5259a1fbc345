//! Fusion over finite products of perfect trees.
//!
//! [`catch_product`] builds, stage by stage, a decreasing sequence of
//! product conditions together with a partial `h₀`. Stage `n` walks the
//! `n`-th splitting fronts of the first `min(n, α)` coordinates; for each
//! front tuple `t̄` it finds an extension `ū` and a fresh position `m` where
//! `f(ū)` has a value `m′` that avoids every family member `F₀[j]` with
//! `j ≤ m`, records `#̄(t̄) = m`, `h₀(m) = m′`, and narrows the condition
//! above `t̄` to `ū`. Stage `n` changes only splitting levels `≥ n`, so the
//! stages fuse. Off `dom(h₀)` the function is totalized to
//! `1 + max{F₀[j](n) : j ≤ n}`, which keeps `h(n) ≠ F₀[j](n)` for all
//! `n ≥ j`.
//!
//! Within a front tuple, candidates are tried by extension depth `e`
//! (`ū(k)` is the node at index `base_k ⌢ 0^e` of coordinate `k`, with
//! `base_k` the index of `t̄(k)`, or the root for coordinates not yet in the
//! front), then by position `m` ascending.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::codes::{eval_product_star, ProductCode};
use crate::error::{Error, Result};
use crate::func::{FnSpec, NatFn};
use crate::orders::FinBits;
use crate::report::Report;
use crate::sampling::{derive_seed, sample_tuple, tuple_prefix};
use crate::trees::{Grafted, SkeletonTree};

#[derive(Clone, Debug)]
pub struct ProductCondition {
    pub coords: Vec<SkeletonTree>,
}

impl ProductCondition {
    pub fn full(arity: usize) -> Self {
        ProductCondition { coords: vec![SkeletonTree::full(); arity] }
    }

    pub fn arity(&self) -> usize {
        self.coords.len()
    }

    /// Skeleton indices of the tuples in [`ProductCondition::tuple_front`].
    pub fn tuple_front_indices(&self, n: usize) -> Vec<Vec<FinBits>> {
        let width = n.min(self.arity());
        let level: Vec<FinBits> = FinBits::all_of_len(n).collect();
        let mut tuples = vec![Vec::new()];
        for _ in 0..width {
            tuples = tuples
                .into_iter()
                .flat_map(|t: Vec<FinBits>| {
                    level.iter().map(move |c| {
                        let mut next = t.clone();
                        next.push(c.clone());
                        next
                    })
                })
                .collect();
        }
        tuples
    }

    /// Tuples `t̄` with `t̄(k)` an `n`-th splitting node of coordinate `k`
    /// for `k < min(n, α)`, in lexicographic order.
    pub fn tuple_front(&self, n: usize) -> Vec<Vec<FinBits>> {
        self.tuple_front_indices(n)
            .into_iter()
            .map(|idx| idx.iter().zip(&self.coords).map(|(c, t)| t.skeleton(c)).collect())
            .collect()
    }

    /// Restricts coordinate `k` to `ū(k)` for each given pair.
    pub fn with_tuple(&self, u: &[(usize, FinBits)]) -> Result<Self> {
        let mut coords = self.coords.clone();
        for (k, node) in u {
            let tree = coords.get(*k).ok_or(Error::Arity { arity: self.arity(), got: k + 1 })?;
            coords[*k] = tree.restrict(node).map_err(|_| Error::NotAccepted { coord: *k, node: node.clone() })?;
        }
        Ok(ProductCondition { coords })
    }
}

/// `q̃ ≤^S_n p̃`, checked on skeleton indices of length `≤ depth`.
pub fn refines_mod(q: &ProductCondition, p: &ProductCondition, s: &[usize], n: usize, depth: usize) -> bool {
    if q.arity() != p.arity() {
        return false;
    }
    let subtree =
        q.coords.iter().zip(&p.coords).all(|(qk, pk)| FinBits::all_up_to(depth).all(|c| pk.contains(&qk.skeleton(&c))));
    subtree
        && s.iter().all(|&k| k < q.arity() && q.coords[k].nth_splitting_front(n) == p.coords[k].nth_splitting_front(n))
}

/// `{kind, params, certBound}`
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberSpec {
    #[serde(flatten)]
    pub function: FnSpec,
    #[serde(rename = "certBound")]
    pub cert_bound: u64,
}

/// A list of functions with per-member certificate bounds. Members `j` and
/// `j′` are asserted to differ at every `n ≥ max(bound_j, bound_j′)`.
#[derive(Clone, Debug, Default)]
pub struct EdFamily {
    members: Vec<NatFn>,
    bounds: Vec<u64>,
}

impl EdFamily {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_specs(specs: &[MemberSpec]) -> Result<Self> {
        let mut family = EdFamily::new();
        for spec in specs {
            family.push(spec.function.compile()?, spec.cert_bound);
        }
        Ok(family)
    }

    pub fn push(&mut self, f: NatFn, cert_bound: u64) {
        self.members.push(f);
        self.bounds.push(cert_bound);
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn member(&self, j: usize) -> &NatFn {
        &self.members[j]
    }

    pub fn members(&self) -> &[NatFn] {
        &self.members
    }

    pub fn certificate(&self, j: usize, j2: usize) -> u64 {
        self.bounds[j].max(self.bounds[j2])
    }

    /// Evaluates every pair on `[b, b + horizon)` for its certificate `b`.
    pub fn verify_certificates(&self, horizon: u64) -> Report {
        let mut witness = None;
        'outer: for j in 0..self.len() {
            for j2 in j + 1..self.len() {
                let b = self.certificate(j, j2);
                if let Some(n) =
                    (b..b.saturating_add(horizon)).find(|&n| self.members[j].at(n) == self.members[j2].at(n))
                {
                    witness = Some(format!("members {j},{j2} agree at n={n} ≥ bound {b}"));
                    break 'outer;
                }
            }
        }
        let mut report = Report::new();
        report.record("certificates", witness);
        report
    }
}

/// Bookkeeping for one processed front tuple.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrontRecord {
    pub stage: usize,
    /// Skeleton indices of `t̄`.
    pub index: Vec<FinBits>,
    /// `t̄` in the condition of the previous stage.
    pub tuple: Vec<FinBits>,
    /// The extension `ū` at which the value was found.
    pub witness: Vec<FinBits>,
    pub extension: usize,
    /// `#̄(t̄)`
    pub m: u64,
    /// `h₀(m)`
    pub value: u64,
    /// `d(t̄)`: the stage-end tuple above `t̄`, of full arity.
    pub d: Vec<FinBits>,
}

#[derive(Clone, Debug)]
pub struct ProductCatchResult {
    pub arity: usize,
    pub records: Vec<FrontRecord>,
    pub h0: BTreeMap<u64, u64>,
    /// Condition at the end of each stage.
    pub stages: Vec<ProductCondition>,
    /// Condition the construction started from.
    pub initial: ProductCondition,
    pub family: EdFamily,
}

fn totalize(h0: &BTreeMap<u64, u64>, family: &EdFamily, n: u64) -> u64 {
    if let Some(&v) = h0.get(&n) {
        return v;
    }
    let members = family.len().min(n.saturating_add(1) as usize);
    family.members[..members].iter().map(|f| f.at(n).saturating_add(1)).max().unwrap_or(0)
}

impl ProductCatchResult {
    pub fn h(&self, n: u64) -> u64 {
        totalize(&self.h0, &self.family, n)
    }

    pub fn h_fn(&self) -> NatFn {
        let h0 = Arc::new(self.h0.clone());
        let family = self.family.clone();
        NatFn::new(move |n| totalize(&h0, &family, n))
    }

    /// The last stage's condition: the fusion limit on every processed level.
    pub fn condition(&self) -> &ProductCondition {
        self.stages.last().unwrap_or(&self.initial)
    }

    /// Last processed front level, if any.
    pub fn depth(&self) -> Option<usize> {
        self.stages.len().checked_sub(1)
    }
}

/// Coordinate trees of the condition under construction, as cone grafts
/// over the initial trees.
struct Narrowing {
    base: Vec<SkeletonTree>,
    grafts: Vec<HashMap<FinBits, FinBits>>,
}

impl Narrowing {
    fn node(&self, k: usize, c: &FinBits) -> FinBits {
        self.base[k].skeleton(&Grafted::base_index(&self.grafts[k], c))
    }

    /// Replaces the cone at `key` by the cone at `target` (current indices).
    fn graft(&mut self, k: usize, key: FinBits, target: &FinBits) {
        if &key != target {
            let resolved = Grafted::base_index(&self.grafts[k], target);
            self.grafts[k].insert(key, resolved);
        }
    }

    fn snapshot(&self) -> ProductCondition {
        ProductCondition {
            coords: self
                .base
                .iter()
                .zip(&self.grafts)
                .map(|(b, g)| SkeletonTree::grafted(b.clone(), g.clone()).memoized())
                .collect(),
        }
    }
}

/// Positions in use, with a low-water mark below which all are taken.
#[derive(Default)]
struct UsedPositions {
    used: HashSet<u64>,
    low: u64,
}

impl UsedPositions {
    fn contains(&self, m: u64) -> bool {
        m < self.low || self.used.contains(&m)
    }

    fn insert(&mut self, m: u64) {
        self.used.insert(m);
        while self.used.remove(&self.low) {
            self.low += 1;
        }
    }
}

fn show_tuple(t: &[FinBits]) -> String {
    format!("⟨{}⟩", t.iter().map(|s| format!("{s:?}")).collect::<Vec<_>>().join(","))
}

/// Runs the fusion for stages `0..=depth` starting from the full product.
pub fn catch_product(
    arity: usize,
    f: &dyn ProductCode,
    family: &EdFamily,
    search_cap: usize,
    depth: usize,
) -> Result<ProductCatchResult> {
    catch_product_from(&ProductCondition::full(arity), f, family, search_cap, depth)
}

/// [`catch_product`] below an arbitrary starting condition.
pub fn catch_product_from(
    start: &ProductCondition,
    f: &dyn ProductCode,
    family: &EdFamily,
    search_cap: usize,
    depth: usize,
) -> Result<ProductCatchResult> {
    let arity = start.arity();
    if f.arity() != arity {
        return Err(Error::Arity { arity: f.arity(), got: arity });
    }
    let mut cur = Narrowing { base: start.coords.clone(), grafts: vec![HashMap::new(); arity] };
    let mut used = UsedPositions::default();
    let mut records = Vec::new();
    let mut h0 = BTreeMap::new();
    let mut stages = Vec::new();

    for n in 0..=depth {
        let width = n.min(arity);
        let front = ProductCondition::full(width).tuple_front_indices(n);
        let mut stage_records = Vec::with_capacity(front.len());
        for index in front {
            let tuple: Vec<FinBits> = (0..width).map(|k| cur.node(k, &index[k])).collect();
            let base: Vec<FinBits> = (0..arity).map(|k| index.get(k).cloned().unwrap_or_else(FinBits::empty)).collect();
            let (e, witness, m, value) = (0..=search_cap)
                .find_map(|e| {
                    let targets: Vec<FinBits> = base.iter().map(|b| b.concat(&FinBits::zeros(e))).collect();
                    let u: Vec<FinBits> = (0..arity).map(|k| cur.node(k, &targets[k])).collect();
                    let out = f.apply_tuple(&u);
                    (used.low..out.len() as u64)
                        .find(|&m| {
                            !used.contains(m) && {
                                let v = out[m as usize];
                                let members = family.len().min(m.saturating_add(1) as usize);
                                family.members[..members].iter().all(|g| g.at(m) != v)
                            }
                        })
                        .map(|m| (e, u, m, out[m as usize]))
                })
                .ok_or_else(|| Error::SearchExhausted { stage: n, tuple: show_tuple(&tuple), depth: search_cap })?;
            for (k, b) in base.iter().enumerate() {
                cur.graft(k, b.clone(), &b.concat(&FinBits::zeros(e)));
            }
            used.insert(m);
            h0.insert(m, value);
            stage_records.push(FrontRecord { stage: n, index, tuple, witness, extension: e, m, value, d: Vec::new() });
        }
        for rec in &mut stage_records {
            rec.d = (0..arity).map(|k| cur.node(k, rec.index.get(k).unwrap_or(&FinBits::empty()))).collect();
        }
        records.extend(stage_records);
        stages.push(cur.snapshot());
    }

    Ok(ProductCatchResult { arity, records, h0, stages, initial: start.clone(), family: family.clone() })
}

/// Checks a fusion result:
///
/// * `catches`: `f(d(t̄))(#̄(t̄)) = h(#̄(t̄))` on every record;
/// * `injective`: `#̄` and `d` are injective;
/// * `avoidance`: `h(n) ≠ F₀[j](n)` for `j ≤ n < horizon`;
/// * `front`: the `d` values of stage `n` are exactly the `n`-th front
///   tuples of the final condition, with the remaining coordinates below
///   its stems;
/// * `fusion`: stage `n` refines stage `n−1` keeping fronts `n−1` of the
///   first `min(n−1, α)` coordinates;
/// * `branch-agreement`: along `samples` seeded branch tuples of the final
///   condition, `h` agrees with `f*` at `#̄(t̄)` for the front tuple at
///   every processed level.
pub fn verify_product_catch(
    result: &ProductCatchResult,
    f: &dyn ProductCode,
    family: &EdFamily,
    horizon: u64,
    samples: usize,
    seed: u64,
) -> Report {
    let mut report = Report::new();
    let h = |n: u64| totalize(&result.h0, family, n);

    let catches = result.records.iter().find_map(|r| {
        let out = f.apply_tuple(&r.d);
        (out.get(r.m as usize) != Some(h(r.m))).then(|| {
            format!("t̄={}: f(d(t̄))({}) = {:?}, h = {}", show_tuple(&r.tuple), r.m, out.get(r.m as usize), h(r.m))
        })
    });
    report.record("catches", catches);

    let mut seen_m = HashMap::new();
    let mut seen_d = HashMap::new();
    let mut injective = None;
    for r in &result.records {
        if let Some(prev) = seen_m.insert(r.m, &r.tuple) {
            injective = Some(format!("#̄({}) = #̄({}) = {}", show_tuple(prev), show_tuple(&r.tuple), r.m));
            break;
        }
        if let Some(prev) = seen_d.insert(r.d.clone(), &r.tuple).filter(|prev| *prev != &r.tuple) {
            injective = Some(format!("d({}) = d({})", show_tuple(prev), show_tuple(&r.tuple)));
            break;
        }
    }
    report.record("injective", injective);

    let avoidance = (0..horizon).find_map(|n| {
        let members = family.len().min(n.saturating_add(1) as usize);
        let v = h(n);
        (0..members).find(|&j| family.member(j).at(n) == v).map(|j| format!("h({n}) = F₀[{j}]({n}) = {v}"))
    });
    report.record("avoidance", avoidance);

    let limit = result.condition();
    let mut front = None;
    for (n, _) in result.stages.iter().enumerate() {
        let width = n.min(result.arity);
        let mut expected = limit.tuple_front(n);
        let mut got: Vec<Vec<FinBits>> =
            result.records.iter().filter(|r| r.stage == n).map(|r| r.d[..width].to_vec()).collect();
        expected.sort();
        got.sort();
        if expected != got {
            front = Some(format!("stage {n}: d-range differs from the front"));
            break;
        }
        let outside = result.records.iter().filter(|r| r.stage == n).find_map(|r| {
            (width..result.arity)
                .find(|&k| !r.d[k].is_prefix_of(&limit.coords[k].stem()))
                .map(|k| format!("stage {n}, t̄={}: coordinate {k} above the stem", show_tuple(&r.tuple)))
        });
        if outside.is_some() {
            front = outside;
            break;
        }
    }
    report.record("front", front);

    let mut fusion = None;
    for (n, stage) in result.stages.iter().enumerate() {
        let (prev, keep, level) = match n {
            0 => (&result.initial, Vec::new(), 0),
            _ => (&result.stages[n - 1], (0..(n - 1).min(result.arity)).collect(), n - 1),
        };
        if !refines_mod(stage, prev, &keep, level, n + 1) {
            fusion = Some(format!("stage {n} does not refine stage {} mod level {level}", n as i64 - 1));
            break;
        }
    }
    report.record("fusion", fusion);

    let by_index: HashMap<(usize, &[FinBits]), &FrontRecord> =
        result.records.iter().map(|r| ((r.stage, r.index.as_slice()), r)).collect();
    let mut branch = None;
    'samples: for s in 0..samples {
        let branches = sample_tuple(&limit.coords, derive_seed(seed, s as u64));
        for n in 0..result.stages.len() {
            let idx: Vec<FinBits> = branches.iter().take(n.min(result.arity)).map(|b| b.address(n)).collect();
            let Some(r) = by_index.get(&(n, idx.as_slice())) else {
                branch = Some(format!("branch {s}: no record at stage {n}"));
                break 'samples;
            };
            match eval_product_star(f, &|len| tuple_prefix(&branches, len), r.m as usize + 1) {
                Ok(w) if w.get(r.m as usize) == Some(h(r.m)) => {}
                Ok(w) => {
                    branch = Some(format!(
                        "branch {s}, stage {n}: f*(x̄)({}) = {:?}, h = {}",
                        r.m,
                        w.get(r.m as usize),
                        h(r.m)
                    ));
                    break 'samples;
                }
                Err(e) => {
                    branch = Some(format!("branch {s}: {e}"));
                    break 'samples;
                }
            }
        }
    }
    report.record("branch-agreement", branch);
    report
}

/// Iterated catching: stage `ξ` catches `codes[ξ]` against
/// `[h_0, …, h_{ξ−1}] ++ seed`, so `h_ξ` differs from `h_η` at every
/// `n ≥ η` and from seed member `i` at every `n ≥ ξ + i`.
pub fn greedy_med_stage(
    codes: &[Arc<dyn ProductCode>],
    seed: &EdFamily,
    search_cap: usize,
    depth: usize,
) -> Result<Vec<ProductCatchResult>> {
    let mut out: Vec<ProductCatchResult> = Vec::new();
    for (xi, code) in codes.iter().enumerate() {
        let mut family = EdFamily::new();
        for prev in &out {
            family.push(prev.h_fn(), 0);
        }
        for (f, b) in seed.members.iter().zip(&seed.bounds) {
            family.push(f.clone(), *b);
        }
        let result = catch_product(code.arity(), code.as_ref(), &family, search_cap, depth)
            .map_err(|e| Error::GreedyStage { stage: xi, source: Box::new(e) })?;
        out.push(result);
    }
    Ok(out)
}

/// Seed members followed by the stage functions, `h_ξ` with bound
/// `ξ + |seed|`.
pub fn greedy_family(seed: &EdFamily, stages: &[ProductCatchResult]) -> EdFamily {
    let mut family = seed.clone();
    for (xi, r) in stages.iter().enumerate() {
        family.push(r.h_fn(), (xi + seed.len()) as u64);
    }
    family
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{ConstantCode, TransducerCode};
    use crate::orders::FinWord;

    fn bits(s: &str) -> FinBits {
        s.parse().unwrap()
    }

    fn succ_family() -> EdFamily {
        let mut fam = EdFamily::new();
        fam.push(NatFn::new(|n| n + 1), 0);
        fam
    }

    #[test]
    fn tuple_fronts() {
        let p = ProductCondition::full(2);
        assert_eq!(p.tuple_front(1), vec![vec![bits("0")], vec![bits("1")]]);
        assert_eq!(p.tuple_front(0), vec![Vec::<FinBits>::new()]);
        for n in 0..=3 {
            assert_eq!(p.tuple_front(n).len(), 1 << (n * n.min(2)));
        }
    }

    #[test]
    fn with_tuple_and_refines() {
        let p = ProductCondition::full(2);
        assert_eq!(p.with_tuple(&[]).unwrap().tuple_front(2), p.tuple_front(2));
        let q = p.with_tuple(&[(0, bits("1"))]).unwrap();
        assert_eq!(q.coords[0].stem(), bits("1"));
        assert_eq!(q.coords[1].stem(), bits(""));
        assert!(refines_mod(&q, &p, &[], 0, 4));
        assert!(refines_mod(&p, &p, &[0, 1], 2, 4));
        assert!(!refines_mod(&q, &p, &[0], 1, 4));
        assert!(!refines_mod(&p, &q, &[], 0, 4));
    }

    #[test]
    fn echo_against_successor() {
        let echo = TransducerCode::echo(1);
        let fam = succ_family();
        let r = catch_product(1, &echo, &fam, 128, 5).unwrap();
        let report = verify_product_catch(&r, &echo, &fam, 1000, 10, 3);
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn empty_product() {
        let w = ConstantCode { constant: FinWord((0..20).collect()), arity: 0 };
        let r = catch_product(0, &w, &succ_family(), 4, 3).unwrap();
        for (&m, &v) in &r.h0 {
            assert_eq!(v, w.constant[m as usize]);
        }
        assert!(verify_product_catch(&r, &w, &succ_family(), 100, 2, 0).passed());
        let short = ConstantCode { constant: FinWord(vec![7, 7]), arity: 0 };
        assert!(catch_product(0, &short, &EdFamily::new(), 4, 3).unwrap_err().is_search_exhausted());
    }

    #[test]
    fn pair_products() {
        let echo = TransducerCode::echo(2);
        let r = catch_product(2, &echo, &EdFamily::new(), 256, 3).unwrap();
        let report = verify_product_catch(&r, &echo, &EdFamily::new(), 100, 8, 1);
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn planted_defects() {
        let echo = TransducerCode::echo(1);
        let fam = succ_family();
        let r = catch_product(1, &echo, &fam, 16, 3).unwrap();
        let mut bad = r.clone();
        let m = bad.records[2].m;
        *bad.h0.get_mut(&m).unwrap() += 5;
        let report = verify_product_catch(&bad, &echo, &fam, 100, 2, 0);
        let check = report.failed("catches").unwrap();
        assert!(check.witness.as_ref().unwrap().contains(&show_tuple(&bad.records[2].tuple)));

        let mut bad = r.clone();
        bad.records[3].m = bad.records[1].m;
        assert!(verify_product_catch(&bad, &echo, &fam, 100, 2, 0).failed("injective").is_some());
    }

    #[test]
    fn greedy_two_stages() {
        let codes: Vec<Arc<dyn ProductCode>> =
            vec![Arc::new(TransducerCode::echo(1)), Arc::new(TransducerCode::echo(1))];
        assert!(greedy_med_stage(&[], &succ_family(), 8, 3).unwrap().is_empty());
        let runs = greedy_med_stage(&codes, &succ_family(), 128, 4).unwrap();
        let (h0, h1) = (runs[0].h_fn(), runs[1].h_fn());
        assert!((0..1000).all(|n| h0.at(n) != n + 1));
        assert!((1..1000).all(|n| h1.at(n) != h0.at(n)));
        assert!(greedy_family(&succ_family(), &runs).verify_certificates(1000).passed());
    }

    #[test]
    fn member_spec_json() {
        let m: MemberSpec =
            serde_json::from_str(r#"{"kind":"affine","params":{"mul":1,"add":1},"certBound":0}"#).unwrap();
        assert_eq!(m.cert_bound, 0);
        assert_eq!(EdFamily::from_specs(&[m]).unwrap().member(0).at(4), 5);
    }
}
