//! Private retrieval of one function out of `F` dependent functions of `r`
//! independent super-messages, each `S = N^F` symbols long.
//!
//! The plan follows the symmetric round structure of capacity-achieving PIR:
//! round `t` at every server asks for `t`-sums over distinct functions. A
//! `t`-sum containing the desired function pairs a fresh desired symbol with
//! a `(t-1)`-sum of interference that another server returned in round
//! `t-1`; a `t`-sum without the desired function consists of fresh
//! interference symbols only. With `N > 2` servers each round is split into
//! `(N-1)^{t-1}` labels; label `(o, l')` takes its side information from
//! server `n + o` (mod `N`), round `t-1`, label `l'`.
//!
//! Symbols live in virtual slots `0..S`. Every desired `t`-sum owns a fresh
//! slot; an interference sum over `U` uses, for each `x` in `U`, the slot of
//! the desired sum over `U \ {x}` with the same label. Interference signs
//! alternate in sorted function order. Because all functions are linear in
//! `r` super-messages, symbols sharing a slot are linearly dependent, and the
//! alternating signs make `C(F-r, t)` of the `C(F, t)` sums in every round
//! block redundant. The user drops those before sending anything.
//!
//! Slots are mapped through a private mask (permutation plus signs) before
//! they reach a server.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{PltError, Result};
use crate::field::{Fe, PrimeField};
use crate::grs::{binomial, enumerate_subsets};
use crate::linalg::RowSpace;

/// Private permutation and signs applied to symbol positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolMask {
    /// Slot `i` is the raw symbol `perm[i]`.
    pub perm: Vec<u32>,
    /// `+1` or `-1` per slot.
    pub signs: Vec<i8>,
}

impl SymbolMask {
    pub fn identity(s: usize) -> Self {
        SymbolMask { perm: (0..s as u32).collect(), signs: vec![1; s] }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }
}

/// Uniform permutation (Fisher-Yates) followed by independent uniform signs.
pub fn build_mask<R: Rng + ?Sized>(s: usize, rng: &mut R) -> SymbolMask {
    let mut perm: Vec<u32> = (0..s as u32).collect();
    perm.shuffle(rng);
    let signs = (0..s).map(|_| if rng.random::<bool>() { -1 } else { 1 }).collect();
    SymbolMask { perm, signs }
}

/// One term of a query expression as the server sees it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Term {
    pub func: u32,
    pub symbol: u32,
    pub coeff: Fe,
}

/// A linear combination of function symbols over distinct functions.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Expression {
    pub terms: Vec<Term>,
}

impl Expression {
    /// Round index = number of distinct functions involved.
    pub fn round(&self) -> usize {
        self.terms.len()
    }
}

/// A term before masking: `sign · u_func(slot)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SlotTerm {
    pub func: u32,
    pub slot: u32,
    pub sign: i8,
}

/// Location of an expression inside [`FullBlocks`]; `round` is 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExprRef {
    pub server: u32,
    pub round: u32,
    pub index: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlannedExpr {
    /// Sorted by function index.
    pub terms: Vec<SlotTerm>,
    /// Interference expression reused as side information, subtracted here.
    pub side: Option<ExprRef>,
    pub kept: bool,
}

/// All `t`-sums of one server in one round, laid out label-major with the
/// `C(F, t)` function sets of each label in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundBlock {
    pub round: usize,
    pub labels: usize,
    pub exprs: Vec<PlannedExpr>,
}

/// The plan before redundancy elimination.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FullBlocks {
    pub n_servers: usize,
    pub n_funcs: usize,
    pub f_star: usize,
    pub mask: SymbolMask,
    /// `servers[n][t - 1]`
    pub servers: Vec<Vec<RoundBlock>>,
}

impl FullBlocks {
    pub fn symbols(&self) -> usize {
        self.mask.len()
    }

    pub fn expr(&self, at: ExprRef) -> &PlannedExpr {
        &self.servers[at.server as usize][at.round as usize - 1].exprs[at.index as usize]
    }

    /// Expressions of one server and round before masking, written with
    /// letters for functions and 1-based slots, e.g. `a9-b7+c6`.
    pub fn render(&self, server: usize, round: usize) -> Vec<String> {
        self.servers[server][round - 1].exprs.iter().map(render_expr).collect()
    }
}

fn render_expr(e: &PlannedExpr) -> String {
    let mut s = String::new();
    for (i, t) in e.terms.iter().enumerate() {
        if t.sign < 0 {
            s.push('-');
        } else if i > 0 {
            s.push('+');
        }
        let name = if t.func < 26 {
            char::from(b'a' + t.func as u8).to_string()
        } else {
            format!("y{}_", t.func + 1)
        };
        s.push_str(&format!("{name}{}", t.slot + 1));
    }
    s
}

/// Bounds on plan size.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PlanLimits {
    pub max_functions: usize,
    /// Bound on `r · S · 8` bytes of super-message symbols.
    pub max_bytes: u64,
}

impl Default for PlanLimits {
    fn default() -> Self {
        PlanLimits { max_functions: 20, max_bytes: 256 << 20 }
    }
}

/// `S = N^F` after checking the size guard.
pub fn symbols_for(n: usize, f: usize, r: usize, limits: &PlanLimits) -> Result<usize> {
    if f > limits.max_functions {
        return Err(PltError::SizeGuard(format!("{f} functions exceed the limit of {}", limits.max_functions)));
    }
    let s = (n as u64)
        .checked_pow(f as u32)
        .filter(|&s| s <= u32::MAX as u64)
        .ok_or_else(|| PltError::SizeGuard(format!("{n}^{f} symbols per message overflow")))?;
    let bytes = (r as u64).saturating_mul(s).saturating_mul(8);
    if bytes > limits.max_bytes {
        return Err(PltError::SizeGuard(format!(
            "{r} super-messages of {s} symbols need {bytes} bytes, limit is {}",
            limits.max_bytes
        )));
    }
    Ok(s as usize)
}

/// Per-server download after elimination: `S · sum_{t=1}^{r} N^{-t}`.
pub fn expected_download(n: usize, f: usize, r: usize) -> usize {
    (1..=r).map(|t| n.pow((f - t) as u32)).sum()
}

/// The part of a round's structure shared by every server and label.
#[derive(Clone, Debug)]
struct RoundTemplate {
    /// All `t`-subsets of functions, lexicographic.
    sets: Vec<Vec<usize>>,
    /// Number of fresh slots per label: one per `(t-1)`-subset of interference functions.
    slots: usize,
    /// `(func, local slot, sign)` for the fresh part of each set.
    local: Vec<Vec<(usize, usize, i8)>>,
    /// For sets containing the desired function (and `t >= 2`): position of
    /// the remaining functions among the `(t-1)`-subsets of all functions.
    side_set: Vec<Option<usize>>,
    desired: Vec<bool>,
}

impl RoundTemplate {
    fn new(n_funcs: usize, f_star: usize, t: usize) -> Self {
        let sets = enumerate_subsets(n_funcs, t);
        let others: Vec<usize> = (0..n_funcs).filter(|&f| f != f_star).collect();
        let prev: HashMap<Vec<usize>, usize> = enumerate_subsets(others.len(), t - 1)
            .into_iter()
            .enumerate()
            .map(|(p, idx)| (idx.into_iter().map(|i| others[i]).collect(), p))
            .collect();
        let all_prev: HashMap<Vec<usize>, usize> = enumerate_subsets(n_funcs, t - 1)
            .into_iter()
            .enumerate()
            .map(|(i, s)| (s, i))
            .collect();
        let mut local = Vec::with_capacity(sets.len());
        let mut side_set = Vec::with_capacity(sets.len());
        let mut desired = Vec::with_capacity(sets.len());
        for set in &sets {
            if set.contains(&f_star) {
                let rest: Vec<usize> = set.iter().copied().filter(|&f| f != f_star).collect();
                local.push(vec![(f_star, prev[&rest], 1)]);
                side_set.push((t >= 2).then(|| all_prev[&rest]));
                desired.push(true);
            } else {
                let terms = set
                    .iter()
                    .enumerate()
                    .map(|(pos, &x)| {
                        let rest: Vec<usize> = set.iter().copied().filter(|&f| f != x).collect();
                        (x, prev[&rest], if pos % 2 == 0 { 1 } else { -1 })
                    })
                    .collect();
                local.push(terms);
                side_set.push(None);
                desired.push(false);
            }
        }
        RoundTemplate { sets, slots: prev.len(), local, side_set, desired }
    }

    /// Fresh part of every set as a functional on the `slots · r` local unknowns.
    fn local_rows(&self, field: &PrimeField, betas: &[Vec<Fe>]) -> Vec<Vec<Fe>> {
        let r = betas[0].len();
        self.local
            .iter()
            .map(|terms| {
                let mut row = vec![Fe::ZERO; self.slots * r];
                for &(func, p, sign) in terms {
                    let s = field.from_i64(sign as i64);
                    for (j, &b) in betas[func].iter().enumerate() {
                        row[p * r + j] = field.mul_add(row[p * r + j], s, b);
                    }
                }
                row
            })
            .collect()
    }
}

fn labels_in_round(n: usize, t: usize) -> usize {
    (n - 1).pow((t - 1) as u32)
}

/// Builds every server's full set of `t`-sums for rounds `1..=F`.
pub fn generate_full_blocks(n_servers: usize, n_funcs: usize, f_star: usize, mask: SymbolMask) -> Result<FullBlocks> {
    if n_servers == 0 || n_funcs == 0 || f_star >= n_funcs {
        return Err(PltError::InvalidParams(format!(
            "need N >= 1, F >= 1 and desired index below F, got N={n_servers} F={n_funcs} f*={f_star}"
        )));
    }
    let s = (n_servers as u64).checked_pow(n_funcs as u32);
    if s != Some(mask.len() as u64) {
        return Err(PltError::DimensionMismatch(format!(
            "mask covers {} symbols but N^F = {n_servers}^{n_funcs}",
            mask.len()
        )));
    }
    let mut servers: Vec<Vec<RoundBlock>> = vec![Vec::with_capacity(n_funcs); n_servers];
    let mut next_slot = 0u32;
    for t in 1..=n_funcs {
        let tmpl = RoundTemplate::new(n_funcs, f_star, t);
        let labels = labels_in_round(n_servers, t);
        let prev_labels = if t >= 2 { labels_in_round(n_servers, t - 1) } else { 0 };
        let prev_sets = binomial(n_funcs as u64, t as u64 - 1) as usize;
        for n in 0..n_servers {
            let slot_base = next_slot;
            next_slot += (labels * tmpl.slots) as u32;
            let mut exprs = Vec::with_capacity(labels * tmpl.sets.len());
            for l in 0..labels {
                for si in 0..tmpl.sets.len() {
                    let mut terms: Vec<SlotTerm> = tmpl.local[si]
                        .iter()
                        .map(|&(func, p, sign)| SlotTerm {
                            func: func as u32,
                            slot: slot_base + (l * tmpl.slots + p) as u32,
                            sign,
                        })
                        .collect();
                    let side = tmpl.side_set[si].map(|set_idx| {
                        let offset = l / prev_labels + 1;
                        let prev_label = l % prev_labels;
                        ExprRef {
                            server: ((n + offset) % n_servers) as u32,
                            round: (t - 1) as u32,
                            index: (prev_label * prev_sets + set_idx) as u32,
                        }
                    });
                    if let Some(at) = side {
                        let src = &servers[at.server as usize][t - 2].exprs[at.index as usize];
                        debug_assert!(src.side.is_none());
                        terms.extend(src.terms.iter().map(|st| SlotTerm { sign: -st.sign, ..*st }));
                        terms.sort_by_key(|st| st.func);
                    }
                    exprs.push(PlannedExpr { terms, side, kept: true });
                }
            }
            servers[n].push(RoundBlock { round: t, labels, exprs });
        }
    }
    if next_slot as usize != mask.len() {
        return Err(PltError::InternalInvariant(format!("used {next_slot} slots, expected {}", mask.len())));
    }
    Ok(FullBlocks { n_servers, n_funcs, f_star, mask, servers })
}

/// Order in which the greedy elimination visits a round's function sets.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum KeepOrder {
    /// Lexicographic function sets; independent of the desired index.
    #[default]
    Canonical,
    /// Sets containing the desired function first. Leaks the desired index
    /// through which sums are dropped; exists so audits can check they catch it.
    DesiredFirst,
}

/// The plan after elimination, with what each server is asked for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PcPlan {
    pub full: FullBlocks,
    pub per_server: Vec<Vec<Expression>>,
    /// `drop_counts[n][t - 1]`
    pub drop_counts: Vec<Vec<usize>>,
}

impl PcPlan {
    pub fn download_per_server(&self) -> Vec<usize> {
        self.per_server.iter().map(Vec::len).collect()
    }
}

fn mask_expr(field: &PrimeField, mask: &SymbolMask, e: &PlannedExpr) -> Expression {
    Expression {
        terms: e
            .terms
            .iter()
            .map(|st| {
                let slot = st.slot as usize;
                Term {
                    func: st.func,
                    symbol: mask.perm[slot],
                    coeff: field.from_i64(st.sign as i64 * mask.signs[slot] as i64),
                }
            })
            .collect(),
    }
}

/// Marks redundant sums and masks the rest.
///
/// Within a round every server and label has the same structure relative to
/// what earlier rounds already determine, so the greedy rank test runs once
/// per round on the fresh unknowns and its outcome is applied everywhere.
pub fn eliminate_redundancy(
    field: &PrimeField,
    mut blocks: FullBlocks,
    betas: &[Vec<Fe>],
    order: KeepOrder,
) -> Result<PcPlan> {
    let (n_servers, n_funcs) = (blocks.n_servers, blocks.n_funcs);
    if betas.len() != n_funcs || betas.is_empty() {
        return Err(PltError::DimensionMismatch(format!("{} dependency rows for {n_funcs} functions", betas.len())));
    }
    let r = betas[0].len();
    if r == 0 || betas.iter().any(|b| b.len() != r) {
        return Err(PltError::DimensionMismatch("dependency rows have unequal lengths".into()));
    }
    let mut drop_counts = vec![vec![0usize; n_funcs]; n_servers];
    for t in 1..=n_funcs {
        let tmpl = RoundTemplate::new(n_funcs, blocks.f_star, t);
        let rows = tmpl.local_rows(field, betas);
        let mut visit: Vec<usize> = (0..tmpl.sets.len()).collect();
        if order == KeepOrder::DesiredFirst {
            visit.sort_by_key(|&si| !tmpl.desired[si]);
        }
        let mut space = RowSpace::new(*field, tmpl.slots * r);
        let mut keep = vec![false; tmpl.sets.len()];
        for &si in &visit {
            keep[si] = space.insert(&rows[si]);
        }
        let dropped = keep.iter().filter(|k| !**k).count();
        for (n, server) in blocks.servers.iter_mut().enumerate() {
            let block = &mut server[t - 1];
            for (i, e) in block.exprs.iter_mut().enumerate() {
                e.kept = keep[i % tmpl.sets.len()];
            }
            drop_counts[n][t - 1] = dropped * block.labels;
        }
    }
    let per_server: Vec<Vec<Expression>> = blocks
        .servers
        .iter()
        .map(|rounds| {
            rounds
                .iter()
                .flat_map(|b| b.exprs.iter())
                .filter(|e| e.kept)
                .map(|e| mask_expr(field, &blocks.mask, e))
                .collect()
        })
        .collect();
    let expected = expected_download(n_servers, n_funcs, r);
    for (n, exprs) in per_server.iter().enumerate() {
        if exprs.len() != expected {
            return Err(PltError::InternalInvariant(format!(
                "server {n} keeps {} sums, expected {expected} for N={n_servers} F={n_funcs} r={r}",
                exprs.len()
            )));
        }
    }
    Ok(PcPlan { full: blocks, per_server, drop_counts })
}

/// Evaluates each expression against the function symbol streams `functions[f][s]`.
pub fn pc_answer(field: &PrimeField, exprs: &[Expression], functions: &[Vec<Fe>]) -> Result<Vec<Fe>> {
    exprs
        .iter()
        .map(|e| {
            e.terms.iter().try_fold(Fe::ZERO, |acc, t| {
                let v = functions
                    .get(t.func as usize)
                    .and_then(|row| row.get(t.symbol as usize))
                    .ok_or_else(|| PltError::BadIndex(format!("function {} symbol {}", t.func, t.symbol)))?;
                Ok(field.mul_add(acc, t.coeff, *v))
            })
        })
        .collect()
}

/// Recovers all `S` symbols of the desired function from the servers' answers.
///
/// Rounds are processed in order. In each round block the values of dropped
/// sums are rebuilt from kept ones using relations among their fresh parts,
/// which makes every interference sum available as side information for the
/// next round; desired symbols are then the desired sums minus their side
/// information.
pub fn pc_decode(field: &PrimeField, plan: &PcPlan, answers: &[Vec<Fe>], betas: &[Vec<Fe>]) -> Result<Vec<Fe>> {
    let full = &plan.full;
    if answers.len() != full.n_servers {
        return Err(PltError::DimensionMismatch(format!("{} answers for {} servers", answers.len(), full.n_servers)));
    }
    for (n, (a, p)) in answers.iter().zip(&plan.per_server).enumerate() {
        if a.len() != p.len() {
            return Err(PltError::DimensionMismatch(format!(
                "server {n} returned {} symbols for {} expressions",
                a.len(),
                p.len()
            )));
        }
    }
    if betas.len() != full.n_funcs {
        return Err(PltError::DimensionMismatch(format!("{} dependency rows for {} functions", betas.len(), full.n_funcs)));
    }
    let s = full.symbols();
    let f_star = full.f_star as u32;
    let mut out: Vec<Option<Fe>> = vec![None; s];
    let mut values: Vec<Vec<Vec<Fe>>> = vec![Vec::with_capacity(full.n_funcs); full.n_servers];
    let mut cursor = vec![0usize; full.n_servers];
    for t in 1..=full.n_funcs {
        let tmpl = RoundTemplate::new(full.n_funcs, full.f_star, t);
        let rows = tmpl.local_rows(field, betas);
        let nsets = tmpl.sets.len();
        let keep: Vec<bool> = full.servers[0][t - 1].exprs[..nsets.min(full.servers[0][t - 1].exprs.len())]
            .iter()
            .map(|e| e.kept)
            .collect();
        let labels = full.servers[0][t - 1].labels;
        // relations for dropped sets over kept sets
        let mut space = RowSpace::new(*field, tmpl.slots * tmpl_r(betas));
        let mut accepted = Vec::new();
        for si in 0..keep.len() {
            if keep[si] && space.insert(&rows[si]) {
                accepted.push(si);
            }
        }
        let mut relations: Vec<Option<Vec<(usize, Fe)>>> = vec![None; keep.len()];
        for si in 0..keep.len() {
            if keep[si] {
                continue;
            }
            let combo = space.express(&rows[si]).ok_or_else(|| {
                PltError::Undecodable(format!("round {t}: sum {:?} is not determined by the kept sums", tmpl.sets[si]))
            })?;
            relations[si] = Some(
                accepted
                    .iter()
                    .zip(combo)
                    .filter(|(_, c)| !c.is_zero())
                    .map(|(&k, c)| (k, c))
                    .collect(),
            );
        }
        for n in 0..full.n_servers {
            let block = &full.servers[n][t - 1];
            let mut vals = vec![Fe::ZERO; block.exprs.len()];
            let side_value = |e: &PlannedExpr, values: &Vec<Vec<Vec<Fe>>>| -> Fe {
                match e.side {
                    Some(at) => field.neg(values[at.server as usize][at.round as usize - 1][at.index as usize]),
                    None => Fe::ZERO,
                }
            };
            for l in 0..labels {
                let base = l * nsets;
                for si in 0..nsets {
                    if block.exprs[base + si].kept {
                        vals[base + si] = answers[n][cursor[n]];
                        cursor[n] += 1;
                    }
                }
                for si in 0..nsets {
                    let Some(rel) = &relations[si] else { continue };
                    let e = &block.exprs[base + si];
                    let mut v = side_value(e, &values);
                    for &(k, c) in rel {
                        let fresh = field.sub(vals[base + k], side_value(&block.exprs[base + k], &values));
                        v = field.mul_add(v, c, fresh);
                    }
                    vals[base + si] = v;
                }
                for si in 0..nsets {
                    if !tmpl.desired[si] {
                        continue;
                    }
                    let e = &block.exprs[base + si];
                    let desired = field.sub(vals[base + si], side_value(e, &values));
                    let term = e
                        .terms
                        .iter()
                        .find(|st| st.func == f_star)
                        .ok_or_else(|| PltError::InternalInvariant("desired sum without desired term".into()))?;
                    let slot = term.slot as usize;
                    // u(slot) = sign · σ · Y(π(slot)) with the desired term's sign +1
                    let y = if full.mask.signs[slot] * term.sign < 0 { field.neg(desired) } else { desired };
                    out[full.mask.perm[slot] as usize] = Some(y);
                }
            }
            values[n].push(vals);
        }
    }
    out.into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| PltError::Undecodable(format!("symbol {i} of the desired function not covered"))))
        .collect()
}

fn tmpl_r(betas: &[Vec<Fe>]) -> usize {
    betas.first().map_or(0, Vec::len)
}
