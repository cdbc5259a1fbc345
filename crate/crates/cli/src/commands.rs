use std::path::PathBuf;
use std::sync::Arc;

use anyhow::anyhow;
use clap::Args;
use medsacks_core::catch::verify_branches;
use medsacks_core::codes::{validate_code as check_code, validate_product_code};
use medsacks_core::encode::{coherence_report, decode_g, encode_prefix};
use medsacks_core::ned::{agreement_set, check_domination};
use medsacks_core::orders::{
    big, delta, delta_inv, node_index, node_unindex, pair_code, pair_decode, seq_code, seq_decode,
};
use medsacks_core::product::{greedy_family, ProductCatchResult};
use medsacks_core::sampling::{address, derive_seed};
use medsacks_core::{
    build_h, catch_product as run_product, catch_single as run_single, greedy_med_stage, verify_catch, verify_ned,
    verify_product_catch, EdFamily, NedSpec, ProductCode, Report, SkeletonTree, TreeSpec,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::inputs::{load, load_code, parse_entries, EncodeInput, Entry, GreedyManifest, ProductManifest};
use crate::{Failure, Outcome, Sampling};

type Run = Result<Outcome, Failure>;

fn outcome(report: Report, result: Value) -> Outcome {
    Outcome { report, result, notes: Vec::new() }
}

#[derive(Args, Serialize)]
pub struct SelftestArgs {
    /// Check every code value below this bound.
    #[arg(long, default_value_t = 1000)]
    pub max: u64,
}

pub fn orders_selftest(args: &SelftestArgs) -> Run {
    let mut report = Report::new();
    let range = || 0..args.max;
    report.record(
        "delta",
        range().find_map(|m| {
            let (n, k) = delta_inv(m);
            (delta(n, k) != m).then(|| format!("m={m}: delta{:?} = {}", (n, k), delta(n, k)))
        }),
    );
    report.record(
        "node-index",
        range().find_map(|m| {
            let c = node_unindex(m);
            (node_index(&c) != m).then(|| format!("m={m}: node_index({c:?}) = {}", node_index(&c)))
        }),
    );
    report.record(
        "seq-code",
        range().find_map(|m| {
            let w = seq_decode(&big(m));
            (seq_code(&w.0) != big(m)).then(|| format!("m={m}: decodes to {:?}", w.0))
        }),
    );
    report.record(
        "pair-code",
        range().find_map(|m| {
            let (a, b) = pair_decode(&big(m));
            match pair_code(&a.0, &b.0) {
                Ok(back) if back == big(m) => None,
                _ => Some(format!("m={m}: decodes to ({:?}, {:?})", a.0, b.0)),
            }
        }),
    );
    Ok(outcome(report, json!({ "max": args.max, "roundTrips": 4 * args.max })))
}

#[derive(Args, Serialize)]
pub struct ValidateTreeArgs {
    #[arg(long)]
    pub tree: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub depth: usize,
}

pub fn validate_tree(args: &ValidateTreeArgs) -> Run {
    let tree = load::<TreeSpec>(&args.tree)?.build()?;
    let tree_report = tree.validate(args.depth);
    let result = json!({ "stem": tree.stem(), "violations": tree_report.violations });
    Ok(outcome(tree_report.to_report(), result))
}

#[derive(Args, Serialize)]
pub struct ValidateCodeArgs {
    #[arg(long)]
    pub code: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub depth: usize,
    /// Seed for the branch tuple of multi-branch codes.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn validate_code(args: &ValidateCodeArgs) -> Run {
    let code = load_code(&args.code)?.build()?;
    let product = code.as_product();
    let arity = product.arity();
    let report = match code.as_code() {
        Ok(single) if arity == 1 => check_code(single, args.depth),
        _ => {
            let branches: Vec<_> = (0..arity).map(|k| address(derive_seed(args.seed, k as u64), args.depth)).collect();
            validate_product_code(product, &branches, args.depth)
        }
    };
    let modulus: Vec<usize> = (0..=args.depth).map(|n| product.modulus(n)).collect();
    Ok(outcome(report, json!({ "arity": arity, "modulus": modulus })))
}

#[derive(Args, Serialize)]
pub struct CatchSingleArgs {
    #[arg(long)]
    pub code: PathBuf,
    /// Tree to catch inside; the full tree when absent.
    #[arg(long)]
    pub tree: Option<PathBuf>,
    #[arg(long, default_value_t = 6)]
    pub depth: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub sampling: Sampling,
}

pub fn catch_single(args: &CatchSingleArgs) -> Run {
    let code = load_code(&args.code)?.build()?.shared()?;
    let p = match &args.tree {
        Some(path) => load::<TreeSpec>(path)?.build()?,
        None => SkeletonTree::full(),
    };
    let result = run_single(p.clone(), code.clone());
    let rows = match result.trace(args.depth) {
        Ok(rows) => rows,
        Err(e) => {
            let mut report = Report::new();
            report.fail("construction", e.to_string());
            return Ok(outcome(report, Value::Null));
        }
    };
    let mut report = verify_catch(&result, &p, code.as_ref(), args.depth);
    report.extend(verify_branches(&result, code.as_ref(), args.depth, args.sampling.samples, args.sampling.seed));
    let mut out = outcome(report, json!({ "trace": rows }));
    out.notes.push(format!("{} trace rows to depth {}", rows.len(), args.depth));
    Ok(out)
}

#[derive(Args, Serialize)]
pub struct ManifestArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Positions checked for avoidance and certificates.
    #[arg(long, default_value_t = 200)]
    pub horizon: u64,
    #[arg(long, default_value_t = 8)]
    pub samples: usize,
}

fn product_result(r: &ProductCatchResult) -> Value {
    let h0: Vec<[u64; 2]> = r.h0.iter().map(|(&m, &v)| [m, v]).collect();
    json!({ "h0": h0, "frontTraces": r.records })
}

pub fn catch_product(args: &ManifestArgs) -> Run {
    let manifest: ProductManifest = load(&args.manifest)?;
    let code = manifest.code.build()?;
    let code = code.as_product();
    if code.arity() != manifest.arity {
        let msg = anyhow!("manifest arity {} but the code has arity {}", manifest.arity, code.arity());
        return Err(msg.into());
    }
    let family = EdFamily::from_specs(&manifest.family)?;
    let result = run_product(manifest.arity, code, &family, manifest.search_cap, manifest.depth)?;
    let mut report = family.verify_certificates(args.horizon);
    report.extend(verify_product_catch(&result, code, &family, args.horizon, args.samples, manifest.seed));
    let mut out = outcome(report, product_result(&result));
    out.notes.push(format!("{} front tuples over {} stages", result.records.len(), result.stages.len()));
    Ok(out)
}

pub fn greedy(args: &ManifestArgs) -> Run {
    let manifest: GreedyManifest = load(&args.manifest)?;
    let codes: Vec<Arc<dyn ProductCode>> =
        manifest.codes.iter().map(|c| Ok(c.build()?.shared_product())).collect::<Result<_, medsacks_core::Error>>()?;
    let seed = EdFamily::from_specs(&manifest.family)?;
    let stages = greedy_med_stage(&codes, &seed, manifest.search_cap, manifest.depth)?;

    let mut report = seed.verify_certificates(args.horizon);
    for (xi, (stage, code)) in stages.iter().zip(&codes).enumerate() {
        let stage_report =
            verify_product_catch(stage, code.as_ref(), &stage.family, args.horizon, args.samples, manifest.seed);
        for mut check in stage_report.checks {
            check.name = format!("stage {xi} {}", check.name);
            report.checks.push(check);
        }
    }
    let family = greedy_family(&seed, &stages);
    let mut pairwise = family.verify_certificates(args.horizon);
    pairwise.checks.iter_mut().for_each(|c| c.name = format!("family {}", c.name));
    report.extend(pairwise);

    let result: Vec<Value> = stages.iter().map(product_result).collect();
    let mut out = outcome(report, json!({ "stages": result }));
    out.notes.push(format!("{} stages, family of {}", stages.len(), family.len()));
    Ok(out)
}

#[derive(Args, Serialize)]
pub struct EncodeArgs {
    /// `{h, z}`, each a function spec or `{code, seed}`.
    #[arg(long)]
    pub input: PathBuf,
    /// Number of encoded entries.
    #[arg(long, default_value_t = 20)]
    pub len: u64,
}

pub fn encode(args: &EncodeArgs) -> Run {
    let input: EncodeInput = load(&args.input)?;
    let (h, z) = (input.h.compile(args.len)?, input.z.compile(args.len)?);
    let prefix = encode_prefix(&h, &z, args.len)?;
    let mut report = coherence_report(&prefix);
    let even = prefix.len() - prefix.len() % 2;
    let round_trip = match decode_g(&prefix[..even]) {
        Ok((dh, dz)) => {
            let n = dh.len() as u64;
            (dh.0 != h.prefix(n) || dz.0 != z.prefix(n)).then(|| format!("decoded prefixes of length {n} differ"))
        }
        Err(e) => Some(e.to_string()),
    };
    report.record("round-trip", round_trip);
    let prefix: Vec<String> = prefix.iter().map(|v| v.to_string()).collect();
    Ok(outcome(report, json!({ "prefix": prefix, "h": h.prefix(args.len), "z": z.prefix(args.len) })))
}

#[derive(Args, Serialize)]
pub struct DecodeArgs {
    /// JSON array of entries, as numbers or decimal strings.
    #[arg(long)]
    pub input: PathBuf,
}

pub fn decode(args: &DecodeArgs) -> Run {
    let entries: Vec<Entry> = load(&args.input)?;
    let prefix = parse_entries(&entries)?;
    let report = coherence_report(&prefix);
    let even = prefix.len() - prefix.len() % 2;
    let result = match decode_g(&prefix[..even]) {
        Ok((h, z)) => json!({ "h": h, "z": z }),
        Err(_) => Value::Null,
    };
    Ok(outcome(report, result))
}

#[derive(Args, Serialize)]
pub struct NedArgs {
    /// `{f, family:[{fn, B}…], hStar, gStar, horizon}`
    #[arg(long)]
    pub instance: PathBuf,
    /// Overrides the instance horizon.
    #[arg(long)]
    pub horizon: Option<u64>,
}

pub fn ned(args: &NedArgs) -> Run {
    let spec: NedSpec = load(&args.instance)?;
    let horizon = args.horizon.unwrap_or(spec.horizon);
    let input = spec.build()?;
    if input.bounds.len() != input.family.len() {
        return Err(anyhow!("one bound per family member is required").into());
    }
    let h = match build_h(&input, horizon) {
        Ok(h) => h,
        Err(e) => {
            let mut report = Report::new();
            report.fail("preconditions", e.to_string());
            return Ok(outcome(report, Value::Null));
        }
    };
    let report = verify_ned(&h, &input, horizon);
    let m = check_domination(&input, horizon)?;
    let agreements = agreement_set(&input, horizon);
    let mut out = outcome(report, json!({ "h": h.prefix(horizon), "N": agreements, "m": m }));
    out.notes.push(format!("{} agreements with f below {horizon}", agreements.len()));
    Ok(out)
}
