//! Checks that a run recovers the demand at the claimed rate and that a
//! single server's query does not depend on which messages are demanded.
//!
//! Privacy evidence comes in two forms. Structural checks verify the
//! mechanism directly: every candidate support is realized by exactly one
//! function, each support admits exactly `q-1` dependency vectors, and plan
//! shapes do not depend on the desired function. The statistical check
//! compares signature distributions of sampled queries between demands.

use std::collections::{BTreeMap, HashMap};

use num_rational::BigRational;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::capacity::{format_ratio, plt_capacity_l1};
use crate::engine::{prepare_run, RunOptions, Transcript};
use crate::error::{PltError, Result};
use crate::field::{Fe, PrimeField};
use crate::grs::{binomial, enumerate_subsets, support_of, Demand, FunctionTable, SuperMessageSpec};
use crate::linalg;
use crate::pc::{build_mask, eliminate_redundancy, generate_full_blocks, KeepOrder, PcPlan};
use crate::rng;

/// Outcome of one deterministic check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub check: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl Finding {
    fn new(check: &'static str, pass: bool, detail: impl Into<String>) -> Self {
        Finding { check, pass, detail: detail.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StructuralReport {
    pub pass: bool,
    pub findings: Vec<Finding>,
}

impl StructuralReport {
    fn from(findings: Vec<Finding>) -> Self {
        StructuralReport { pass: findings.iter().all(|f| f.pass), findings }
    }
}

/// Number of nonzero `β` whose combination of the rows of `spec` has support exactly `subset`.
fn beta_count(field: &PrimeField, spec: &SuperMessageSpec, subset: &[usize]) -> Option<u64> {
    let r = spec.r();
    // β must annihilate every column outside the subset
    let outside: Vec<Vec<Fe>> = (0..spec.k())
        .filter(|j| !subset.contains(j))
        .map(|j| spec.q_vectors.iter().map(|row| row[j]).collect())
        .collect();
    let basis = linalg::null_space(field, &outside, r);
    let q = field.modulus();
    let exact = |beta: &[Fe]| support_of(&spec.combine(field, beta)) == subset;
    match basis.len() {
        0 => Some(0),
        // the line through one vector: all or none of its q-1 multiples qualify
        1 => Some(if exact(&basis[0]) { q - 1 } else { 0 }),
        dim => {
            let total = q.checked_pow(dim as u32).filter(|&t| t <= 1 << 20)?;
            let mut count = 0;
            for idx in 1..total {
                let mut coeffs = Vec::with_capacity(dim);
                let mut x = idx;
                for _ in 0..dim {
                    coeffs.push(field.elem(x % q));
                    x /= q;
                }
                if exact(&linalg::combine(field, &coeffs, &basis)) {
                    count += 1;
                }
            }
            Some(count)
        }
    }
}

/// Every `β` in `F_q^r`, tallied by support of its combination.
fn enumerate_beta_supports(field: &PrimeField, spec: &SuperMessageSpec) -> HashMap<Vec<usize>, u64> {
    let q = field.modulus();
    let r = spec.r();
    let mut tally = HashMap::new();
    for idx in 1..q.pow(r as u32) {
        let mut beta = Vec::with_capacity(r);
        let mut x = idx;
        for _ in 0..r {
            beta.push(field.elem(x % q));
            x /= q;
        }
        *tally.entry(support_of(&spec.combine(field, &beta))).or_insert(0) += 1;
    }
    tally
}

/// Support bijection and the `q-1` count of dependency vectors per support.
pub fn check_support_structure(field: &PrimeField, spec: &SuperMessageSpec, table: &FunctionTable) -> StructuralReport {
    let k = spec.k();
    let d = table.subsets.first().map_or(0, Vec::len);
    let all = enumerate_subsets(k, d);
    let q = field.modulus();
    let mut findings = Vec::new();

    let supports: Vec<Vec<usize>> = table.betas.iter().map(|b| support_of(&spec.combine(field, b))).collect();
    let mut sorted = supports.clone();
    sorted.sort();
    let bijective = sorted == all && supports == table.subsets;
    findings.push(Finding::new(
        "support-bijection",
        bijective,
        format!("{} functions onto {} candidate supports of size {d}", supports.len(), all.len()),
    ));

    let counts: Vec<Option<u64>> = all.iter().map(|s| beta_count(field, spec, s)).collect();
    let bad: Vec<String> = all
        .iter()
        .zip(&counts)
        .filter(|(_, c)| **c != Some(q - 1))
        .map(|(s, c)| format!("{s:?}: {}", c.map_or("too many to count".into(), |c| c.to_string())))
        .collect();
    findings.push(Finding::new(
        "beta-count",
        bad.is_empty(),
        if bad.is_empty() { format!("{} dependency vectors for each of {} supports", q - 1, all.len()) } else { bad.join(", ") },
    ));

    if spec.r() <= 3 && q <= 7 {
        let tally = enumerate_beta_supports(field, spec);
        let agree = all.iter().zip(&counts).all(|(s, c)| Some(tally.get(s).copied().unwrap_or(0)) == *c);
        findings.push(Finding::new(
            "beta-count-exhaustive",
            agree,
            format!("enumerated all {} vectors", q.pow(spec.r() as u32)),
        ));
    }
    StructuralReport::from(findings)
}

/// What a server can see about a plan apart from symbol indices and coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PlanShape {
    /// Per server: kept count per round.
    pub kept: Vec<Vec<usize>>,
    /// Per server: dropped count per round.
    pub dropped: Vec<Vec<usize>>,
    /// Per server: sorted function sets of the sent expressions.
    pub function_sets: Vec<Vec<Vec<u32>>>,
}

pub fn plan_shape(plan: &PcPlan) -> PlanShape {
    let kept = plan
        .full
        .servers
        .iter()
        .map(|rounds| rounds.iter().map(|b| b.exprs.iter().filter(|e| e.kept).count()).collect())
        .collect();
    let function_sets = plan
        .per_server
        .iter()
        .map(|exprs| {
            let mut sets: Vec<Vec<u32>> = exprs.iter().map(|e| e.terms.iter().map(|t| t.func).collect()).collect();
            sets.sort();
            sets
        })
        .collect();
    PlanShape { kept, dropped: plan.drop_counts.clone(), function_sets }
}

/// `F x r` dependency rows of rank `r` with no zero row.
pub fn random_dependency_rows(field: &PrimeField, f: usize, r: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<Fe>> {
    loop {
        let b: Vec<Vec<Fe>> = (0..f).map(|_| (0..r).map(|_| field.random(rng)).collect()).collect();
        if b.iter().all(|row| row.iter().any(|c| !c.is_zero())) && linalg::rank(field, &b) == r {
            return b;
        }
    }
}

/// For each seed, builds the plan for every choice of desired function with
/// the same dependency rows and mask, and compares their shapes.
pub fn check_shape_independence(
    field: &PrimeField,
    n: usize,
    f: usize,
    r: usize,
    seeds: &[u64],
    order: KeepOrder,
) -> Result<StructuralReport> {
    if r == 0 || r > f {
        return Err(PltError::InvalidParams(format!("need 1 <= r <= F, got r={r} F={f}")));
    }
    let s = crate::pc::symbols_for(n, f, r, &Default::default())?;
    let mut findings = Vec::new();
    for &seed in seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let betas = random_dependency_rows(field, f, r, &mut rng);
        let mask = build_mask(s, &mut rng);
        let shapes = (0..f)
            .map(|f_star| {
                let blocks = generate_full_blocks(n, f, f_star, mask.clone())?;
                Ok(plan_shape(&eliminate_redundancy(field, blocks, &betas, order)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let same = shapes.windows(2).all(|w| w[0] == w[1]);
        let detail = format!(
            "seed {seed}: {} desired choices, kept per server {:?}, dropped per round {:?}",
            f,
            shapes[0].kept.iter().map(|k| k.iter().sum::<usize>()).collect::<Vec<_>>(),
            shapes[0].dropped[0]
        );
        findings.push(Finding::new("shape-independence", same, detail));
    }
    Ok(StructuralReport::from(findings))
}

/// Deliberately broken variants, used to show the auditor notices them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mutant {
    /// Multipliers outside the support fixed to 1.
    ConstantAlpha,
    /// The desired function's scalar fixed to 1.
    FixedDesiredScalar,
    /// Redundancy elimination visits sums with the desired function first.
    DesiredFirstKeepOrder,
}

impl Mutant {
    pub const ALL: [Mutant; 3] = [Mutant::ConstantAlpha, Mutant::FixedDesiredScalar, Mutant::DesiredFirstKeepOrder];

    /// Run options that realize this mutant for a demand with the given support.
    pub fn options(self, field: &PrimeField, k: usize, support: &[usize]) -> RunOptions {
        let mut opts = RunOptions::default();
        match self {
            Mutant::ConstantAlpha => {
                for j in (0..k).filter(|j| !support.contains(j)) {
                    opts.overrides.alphas.insert(j, field.one());
                }
            }
            Mutant::FixedDesiredScalar => {
                let star = enumerate_subsets(k, support.len()).iter().position(|s| s == support).expect("support is a subset");
                opts.overrides.scalars.insert(star, field.one());
            }
            Mutant::DesiredFirstKeepOrder => opts.keep_order = KeepOrder::DesiredFirst,
        }
        opts
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TvParams {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub q: u64,
}

/// Signature components. The mask is quotiented out entirely (only function
/// sets of sent sums are kept); user scalars appear only as the leading
/// coefficient of each dependency vector.
const COMPONENTS: [&str; 4] = ["alpha", "omega", "beta-scalars", "kept-shape"];

fn fmt_ratio<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64((v * 1e6).round() / 1e6)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairTv {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub server: usize,
    pub component: &'static str,
    #[serde(serialize_with = "fmt_ratio")]
    pub tv: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrivacyReport {
    pub structural_pass: bool,
    pub structural: Vec<Finding>,
    #[serde(serialize_with = "fmt_ratio")]
    pub tv_estimate: f64,
    pub samples: usize,
    pub threshold: f64,
    pub mutant: Option<Mutant>,
    pub pairs: Vec<PairTv>,
}

impl PrivacyReport {
    pub fn tv_pass(&self) -> bool {
        self.tv_estimate < self.threshold
    }

    pub fn pass(&self) -> bool {
        self.structural_pass && self.tv_pass()
    }
}

pub const TV_THRESHOLD: f64 = 0.05;

type Signature = [Vec<u64>; 4];

fn signature(field: &PrimeField, params: &TvParams, support: &[usize], seed: u64, mutant: Option<Mutant>) -> Result<Vec<Signature>> {
    let mut drng = rng::stream(seed, rng::DEMAND_STREAM);
    let demand = Demand::random_with_support(field, params.k, support, &mut drng)?;
    let opts = mutant.map_or_else(RunOptions::default, |m| m.options(field, params.k, support));
    let prep = prepare_run(field, params.k, params.n, &demand, seed, &opts)?;
    let b = &prep.bundles[0];
    let alpha: Vec<u64> = b.q_vectors[0].iter().map(|x| x.value()).collect();
    // ω_j = Q_2[j] / Q_1[j] when r >= 2; with r = 1 the query carries no ω at all
    let omega: Vec<u64> = if b.r() >= 2 {
        (0..params.k).map(|j| field.div(b.q_vectors[1][j], b.q_vectors[0][j]).map(|x| x.value())).collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let scalars: Vec<u64> = b.betas.iter().map(|beta| beta[b.r() - 1].value()).collect();
    let shape = plan_shape(&prep.plan);
    Ok((0..params.n)
        .map(|n| {
            let mut flat = Vec::new();
            for set in &shape.function_sets[n] {
                flat.push(set.len() as u64);
                flat.extend(set.iter().map(|&f| f as u64));
            }
            [alpha.clone(), omega.clone(), scalars.clone(), flat]
        })
        .collect())
}

fn falling(q: u64, k: usize) -> Option<u64> {
    (0..k as u64).try_fold(1u64, |acc, i| acc.checked_mul(q.checked_sub(i)?))
}

/// Monte-Carlo total-variation distance between single-server signature
/// distributions for each pair of supports. Coefficients are drawn uniformly
/// per sample; trials run in parallel with seeds derived from `root_seed`.
pub fn tv_privacy_test(
    params: &TvParams,
    pairs: &[(Vec<usize>, Vec<usize>)],
    samples: usize,
    root_seed: u64,
    mutant: Option<Mutant>,
) -> Result<PrivacyReport> {
    let field = PrimeField::new(params.q)?;
    let f = binomial(params.k as u64, params.d as u64);
    let limit = 1u64 << 20;
    let sizes = [
        (params.q - 1).checked_pow(params.k as u32),
        falling(params.q, params.k),
        (params.q - 1).checked_pow(f as u32),
    ];
    if sizes.iter().any(|s| s.is_none_or(|s| s > limit)) {
        return Err(PltError::ParamsTooLarge(format!(
            "K={} D={} q={} gives more than 2^20 signatures per component",
            params.k, params.d, params.q
        )));
    }

    let mut supports: Vec<Vec<usize>> = pairs.iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect();
    supports.sort();
    supports.dedup();
    // one independent sample set per side of each pair, so identical supports are compared across fresh draws
    type Hist = Vec<[HashMap<Vec<u64>, u32>; 4]>;
    let sample_hist = |support: &Vec<usize>, stream: u64| -> Result<Hist> {
        let sigs: Vec<Vec<Signature>> = (0..samples as u64)
            .into_par_iter()
            .map(|i| signature(&field, params, support, rng::trial_seed(root_seed ^ stream, i), mutant))
            .collect::<Result<_>>()?;
        let mut hist: Hist = (0..params.n).map(|_| Default::default()).collect();
        for per_server in sigs {
            for (n, sig) in per_server.into_iter().enumerate() {
                for (c, key) in sig.into_iter().enumerate() {
                    *hist[n][c].entry(key).or_insert(0) += 1;
                }
            }
        }
        Ok(hist)
    };
    let mut cache: BTreeMap<(Vec<usize>, u64), Hist> = BTreeMap::new();
    for (a, b) in pairs {
        for (s, stream) in [(a, 1u64), (b, if a == b { 2 } else { 1 })] {
            if !cache.contains_key(&(s.clone(), stream)) {
                let h = sample_hist(s, stream.wrapping_mul(0x9e37_79b9))?;
                cache.insert((s.clone(), stream), h);
            }
        }
    }

    let mut results = Vec::new();
    for (a, b) in pairs {
        let ha = &cache[&(a.clone(), 1)];
        let hb = &cache[&(b.clone(), if a == b { 2 } else { 1 })];
        for n in 0..params.n {
            for (c, name) in COMPONENTS.iter().enumerate() {
                let (x, y) = (&ha[n][c], &hb[n][c]);
                let mut diff = 0u64;
                for (key, &cx) in x {
                    diff += (cx as i64 - *y.get(key).unwrap_or(&0) as i64).unsigned_abs();
                }
                for (key, &cy) in y {
                    if !x.contains_key(key) {
                        diff += cy as u64;
                    }
                }
                let tv = diff as f64 / (2.0 * samples as f64);
                results.push(PairTv { a: a.clone(), b: b.clone(), server: n, component: name, tv });
            }
        }
    }
    let tv_estimate = results.iter().map(|p| p.tv).fold(0.0, f64::max);

    // structural checks on one instance built the same way as the samples
    let probe = pairs.first().map(|p| p.0.clone()).unwrap_or_else(|| (0..params.d).collect());
    let mut drng = rng::stream(root_seed, rng::DEMAND_STREAM);
    let demand = Demand::random_with_support(&field, params.k, &probe, &mut drng)?;
    let opts = mutant.map_or_else(RunOptions::default, |m| m.options(&field, params.k, &probe));
    let prep = prepare_run(&field, params.k, params.n, &demand, root_seed, &opts)?;
    let mut structural = check_support_structure(&field, &prep.tables.spec, &prep.tables.table).findings;
    let seeds: Vec<u64> = (0..5).map(|i| rng::trial_seed(root_seed, i)).collect();
    structural.extend(
        check_shape_independence(&field, params.n, f as usize, params.k - params.d + 1, &seeds, opts.keep_order)?.findings,
    );
    Ok(PrivacyReport {
        structural_pass: structural.iter().all(|f| f.pass),
        structural,
        tv_estimate,
        samples,
        threshold: TV_THRESHOLD,
        mutant,
        pairs: results,
    })
}

/// All unordered pairs of distinct `d`-subsets of `0..k`.
pub fn all_support_pairs(k: usize, d: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
    let subsets = enumerate_subsets(k, d);
    let mut out = Vec::new();
    for i in 0..subsets.len() {
        for j in i + 1..subsets.len() {
            out.push((subsets[i].clone(), subsets[j].clone()));
        }
    }
    out
}

fn ser_rational<S: Serializer>(v: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format_ratio(v))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RateReport {
    #[serde(serialize_with = "ser_rational")]
    pub measured: BigRational,
    #[serde(serialize_with = "ser_rational")]
    pub capacity: BigRational,
    pub equal: bool,
}

/// `S / total downloaded` against the capacity for the run's parameters.
pub fn measure_rate(t: &Transcript) -> Result<RateReport> {
    let measured = t.rate();
    let capacity = plt_capacity_l1(t.params.n as u64, t.params.k as u64, t.params.d as u64)?.value;
    Ok(RateReport { equal: measured == capacity, measured, capacity })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::ratio;
    use crate::engine::{run_plt, Database};
    use crate::grs::{build_tables, GrsOverrides};

    fn gf(q: u64) -> PrimeField {
        PrimeField::new(q).unwrap()
    }

    fn example1_tables(f: &PrimeField) -> crate::grs::GrsTables {
        let d = Demand::new(f, 4, &[0, 1, 2], &[f.elem(2), f.one(), f.one()]).unwrap();
        let ov = GrsOverrides {
            omegas: Some((0..4).map(|x| f.elem(x)).collect()),
            alphas: BTreeMap::from([(3, f.elem(2))]),
            scalars: BTreeMap::new(),
        };
        build_tables(f, 4, &d, &ov, &mut rng::stream(1, 0)).unwrap()
    }

    #[test]
    fn example1_support_structure() {
        let f = gf(5);
        let t = example1_tables(&f);
        let rep = check_support_structure(&f, &t.spec, &t.table);
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.findings.len(), 3);
        assert!(rep.findings[1].detail.starts_with("4 dependency vectors for each of 4"));
        // the β for support {1,2,3} is a multiple of [2, 1]
        assert_eq!(beta_count(&f, &t.spec, &[0, 1, 2]), Some(4));
    }

    #[test]
    fn full_support_single_row() {
        let f = gf(7);
        let d = Demand::new(&f, 3, &[0, 1, 2], &[f.one(); 3]).unwrap();
        let t = build_tables(&f, 3, &d, &GrsOverrides::default(), &mut rng::stream(2, 0)).unwrap();
        let rep = check_support_structure(&f, &t.spec, &t.table);
        assert!(rep.pass);
        assert_eq!(t.table.f(), 1);
    }

    #[test]
    fn random_instance_exhaustive() {
        let f = gf(7);
        let mut r = rng::stream(3, 0);
        let d = Demand::random(&f, 5, 3, &mut r).unwrap();
        let t = build_tables(&f, 5, &d, &GrsOverrides::default(), &mut r).unwrap();
        let tally = enumerate_beta_supports(&f, &t.spec);
        let three: Vec<_> = tally.iter().filter(|(s, _)| s.len() == 3).collect();
        assert_eq!(three.len(), 10);
        assert!(three.iter().all(|(_, &c)| c == 6));
        assert!(check_support_structure(&f, &t.spec, &t.table).pass);
    }

    #[test]
    fn broken_structure_is_reported() {
        let f = gf(5);
        let mut t = example1_tables(&f);
        t.table.betas.swap(0, 1);
        assert!(!check_support_structure(&f, &t.spec, &t.table).findings[0].pass);
        // repeated evaluation points break the q-1 count
        let mut t = example1_tables(&f);
        for row in t.spec.q_vectors.iter_mut() {
            row[1] = row[0];
        }
        assert!(!check_support_structure(&f, &t.spec, &t.table).pass);
    }

    #[test]
    fn shape_examples() {
        let f = gf(11);
        let rep = check_shape_independence(&f, 2, 4, 2, &[1, 2, 3], KeepOrder::Canonical).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.findings[0].detail.contains("kept per server [12, 12]"));
        assert!(rep.findings[0].detail.contains("[2, 1, 0, 0]"));
        assert!(check_shape_independence(&f, 2, 1, 1, &[1], KeepOrder::Canonical).unwrap().pass);
        let seeds: Vec<u64> = (0..20).collect();
        assert!(check_shape_independence(&f, 2, 3, 2, &seeds, KeepOrder::Canonical).unwrap().pass);
        assert!(!check_shape_independence(&f, 2, 3, 2, &seeds, KeepOrder::DesiredFirst).unwrap().pass);
    }

    #[test]
    fn rate_examples() {
        let f = gf(5);
        let db = Database::random(f, 4, 16, 1);
        let d = Demand::new(&f, 4, &[0, 1, 2], &[f.elem(2), f.one(), f.one()]).unwrap();
        let (t, _) = run_plt(&db, &d, 2, 1, &RunOptions::default()).unwrap();
        let rep = measure_rate(&t).unwrap();
        assert!(rep.equal);
        assert_eq!(rep.measured, ratio(2, 3));

        let db = Database::random(f, 4, 64, 1);
        let d = Demand::new(&f, 4, &[1, 3], &[f.one(), f.one()]).unwrap();
        let (t, _) = run_plt(&db, &d, 2, 1, &RunOptions::default()).unwrap();
        assert_eq!(t.total_downloaded, 112);
        assert_eq!(measure_rate(&t).unwrap().measured, ratio(4, 7));

        let db = Database::random(f, 3, 2, 1);
        let d = Demand::new(&f, 3, &[0, 1, 2], &[f.one(); 3]).unwrap();
        let (t, _) = run_plt(&db, &d, 2, 1, &RunOptions::default()).unwrap();
        assert_eq!(measure_rate(&t).unwrap().measured, ratio(1, 1));
    }

    #[test]
    fn tv_rejects_large_params() {
        let p = TvParams { n: 2, k: 9, d: 4, q: 11 };
        assert!(matches!(tv_privacy_test(&p, &[], 10, 1, None), Err(PltError::ParamsTooLarge(_))));
    }

    #[test]
    fn tv_small_sample_smoke() {
        let p = TvParams { n: 2, k: 3, d: 2, q: 5 };
        let pairs = all_support_pairs(3, 2);
        assert_eq!(pairs.len(), 3);
        let honest = tv_privacy_test(&p, &pairs, 4000, 7, None).unwrap();
        assert!(honest.structural_pass);
        assert!(honest.tv_estimate < 0.1, "{}", honest.tv_estimate);
        for m in Mutant::ALL {
            let rep = tv_privacy_test(&p, &pairs, 4000, 7, Some(m)).unwrap();
            assert!(rep.tv_estimate > 0.2, "{m:?}: {}", rep.tv_estimate);
        }
    }
}
