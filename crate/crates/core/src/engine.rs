//! End-to-end runs: the user builds one query bundle per server, servers
//! answer independently, the user decodes the demanded combination.
//!
//! Also hosts the side-information wrapper that turns a linear-transformation
//! protocol into a retrieval protocol with private side information.

use std::time::{Duration, Instant};

use num_rational::BigRational;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::capacity::ratio;
use crate::error::{PltError, Result};
use crate::field::{Fe, PrimeField};
use crate::grs::{binomial, build_tables, enumerate_subsets, Demand, GrsOverrides, GrsTables};
use crate::linalg::{self, gaussian_solve};
use crate::pc::{
    build_mask, eliminate_redundancy, generate_full_blocks, pc_answer, pc_decode, symbols_for, Expression, KeepOrder,
    PcPlan, PlanLimits,
};
use crate::rng;
use crate::wire;

/// `K` messages of `S` symbols each.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Database {
    field: PrimeField,
    symbols: Vec<Vec<Fe>>,
    s: usize,
}

impl Database {
    pub fn new(field: PrimeField, symbols: Vec<Vec<Fe>>) -> Result<Self> {
        let s = symbols.first().map_or(0, Vec::len);
        if symbols.iter().any(|m| m.len() != s) {
            return Err(PltError::DimensionMismatch("messages have unequal lengths".into()));
        }
        if let Some(bad) = symbols.iter().flatten().find(|x| x.value() >= field.modulus()) {
            return Err(PltError::Malformed(format!("symbol {bad} is not reduced modulo {}", field.modulus())));
        }
        Ok(Database { field, symbols, s })
    }

    /// Uniform symbols from the database stream of `seed`.
    pub fn random(field: PrimeField, k: usize, s: usize, seed: u64) -> Self {
        let mut rng = rng::stream(seed, rng::DATABASE_STREAM);
        let symbols = (0..k).map(|_| (0..s).map(|_| field.random(&mut rng)).collect()).collect();
        Database { field, symbols, s }
    }

    pub fn field(&self) -> &PrimeField {
        &self.field
    }

    pub fn k(&self) -> usize {
        self.symbols.len()
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn message(&self, j: usize) -> &[Fe] {
        &self.symbols[j]
    }

    pub fn messages(&self) -> &[Vec<Fe>] {
        &self.symbols
    }

    /// `sum_j coeffs[j] X_j` over all messages.
    pub fn combine(&self, coeffs: &[Fe]) -> Vec<Fe> {
        linalg::combine(&self.field, coeffs, &self.symbols)
    }

    /// `V · X_W` computed directly.
    pub fn evaluate_demand(&self, demand: &Demand) -> Vec<Fe> {
        let coeffs: Vec<Fe> = (0..self.k()).map(|j| demand.coeff_of(j)).collect();
        self.combine(&coeffs)
    }
}

/// Everything one server receives.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryBundle {
    pub field: PrimeField,
    pub k: usize,
    pub s: usize,
    /// `r x K`
    pub q_vectors: Vec<Vec<Fe>>,
    /// `F x r`
    pub betas: Vec<Vec<Fe>>,
    pub expressions: Vec<Expression>,
}

impl QueryBundle {
    pub fn r(&self) -> usize {
        self.q_vectors.len()
    }

    pub fn f(&self) -> usize {
        self.betas.len()
    }
}

/// Knobs for reproducing fixed instances and for audit mutants.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub overrides: GrsOverrides,
    pub keep_order: KeepOrder,
    pub limits: PlanLimits,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RunParams {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub q: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ServerCounts {
    pub query_bytes: usize,
    pub answer_symbols: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transcript {
    pub params: RunParams,
    pub seed: u64,
    pub servers: Vec<ServerCounts>,
    /// Symbols per message.
    pub s: usize,
    pub total_downloaded: usize,
    pub recovered: Vec<Fe>,
    pub elapsed: Duration,
}

#[derive(Serialize)]
struct RateJson {
    num: String,
    den: String,
}

#[derive(Serialize)]
struct TranscriptJson<'a> {
    params: &'a RunParams,
    servers: &'a [ServerCounts],
    rate: RateJson,
    seed: u64,
}

impl Transcript {
    /// `S / total downloaded`, reduced.
    pub fn rate(&self) -> BigRational {
        ratio(self.s as u64, self.total_downloaded as u64)
    }

    pub fn strip_timing(mut self) -> Self {
        self.elapsed = Duration::ZERO;
        self
    }

    /// One JSON object without a trailing newline.
    pub fn to_json_line(&self) -> String {
        let rate = self.rate();
        serde_json::to_string(&TranscriptJson {
            params: &self.params,
            servers: &self.servers,
            rate: RateJson { num: rate.numer().to_string(), den: rate.denom().to_string() },
            seed: self.seed,
        })
        .expect("transcript serializes")
    }
}

/// The user's state between sending queries and decoding answers.
#[derive(Clone, Debug)]
pub struct PreparedRun {
    pub field: PrimeField,
    pub params: RunParams,
    pub seed: u64,
    pub s: usize,
    pub tables: GrsTables,
    pub plan: PcPlan,
    pub bundles: Vec<QueryBundle>,
}

impl PreparedRun {
    pub fn query_frames(&self) -> Result<Vec<Vec<u8>>> {
        self.bundles.iter().map(wire::encode_query).collect()
    }
}

/// User side before any server is contacted: tables, plan and one bundle per server.
pub fn prepare_run(
    field: &PrimeField,
    k: usize,
    n_servers: usize,
    demand: &Demand,
    seed: u64,
    opts: &RunOptions,
) -> Result<PreparedRun> {
    if n_servers == 0 {
        return Err(PltError::InvalidParams("need at least one server".into()));
    }
    let d = demand.size();
    if d > k {
        return Err(PltError::InvalidDemand(format!("support size {d} exceeds {k} messages")));
    }
    if (field.modulus() as usize) < k {
        return Err(PltError::FieldTooSmall { q: field.modulus(), k });
    }
    let r = k - d + 1;
    let f = binomial(k as u64, d as u64);
    if f > opts.limits.max_functions as u64 {
        return Err(PltError::SizeGuard(format!("C({k},{d}) = {f} functions exceed the limit of {}", opts.limits.max_functions)));
    }
    let s = symbols_for(n_servers, f as usize, r, &opts.limits)?;
    let mut rng = rng::stream(seed, rng::PROTOCOL_STREAM);
    let tables = build_tables(field, k, demand, &opts.overrides, &mut rng)?;
    let mask = build_mask(s, &mut rng);
    let blocks = generate_full_blocks(n_servers, f as usize, tables.table.star_index, mask)?;
    let plan = eliminate_redundancy(field, blocks, &tables.table.betas, opts.keep_order)?;
    let bundles = plan
        .per_server
        .iter()
        .map(|exprs| QueryBundle {
            field: *field,
            k,
            s,
            q_vectors: tables.spec.q_vectors.clone(),
            betas: tables.table.betas.clone(),
            expressions: exprs.clone(),
        })
        .collect();
    Ok(PreparedRun { field: *field, params: RunParams { n: n_servers, k, d, q: field.modulus() }, seed, s, tables, plan, bundles })
}

/// User side once all answers are in: decode the desired function and rescale.
pub fn finish_run(prep: &PreparedRun, answers: &[Vec<Fe>]) -> Result<Vec<Fe>> {
    let y = pc_decode(&prep.field, &prep.plan, answers, &prep.tables.table.betas)?;
    recover_demand(&prep.field, &y, prep.tables.table.star_scalar)
}

pub fn build_transcript(prep: &PreparedRun, answers: &[Vec<Fe>], recovered: Vec<Fe>, elapsed: Duration) -> Result<Transcript> {
    let frames = prep.query_frames()?;
    let servers: Vec<ServerCounts> = frames
        .iter()
        .zip(answers)
        .map(|(q, a)| ServerCounts { query_bytes: q.len(), answer_symbols: a.len() })
        .collect();
    Ok(Transcript {
        params: prep.params,
        seed: prep.seed,
        total_downloaded: servers.iter().map(|c| c.answer_symbols).sum(),
        servers,
        s: prep.s,
        recovered,
        elapsed,
    })
}

/// A complete in-process run. Server answers are computed concurrently.
pub fn run_plt(
    db: &Database,
    demand: &Demand,
    n_servers: usize,
    seed: u64,
    opts: &RunOptions,
) -> Result<(Transcript, Vec<Fe>)> {
    let start = Instant::now();
    let prep = prepare_run(db.field(), db.k(), n_servers, demand, seed, opts)?;
    if db.s() != prep.s {
        return Err(PltError::InvalidParams(format!(
            "messages have {} symbols, the protocol needs exactly {}",
            db.s(),
            prep.s
        )));
    }
    let answers: Vec<Vec<Fe>> = prep.bundles.par_iter().map(|b| server_answer(db, b)).collect::<Result<_>>()?;
    let recovered = finish_run(&prep, &answers)?;
    let transcript = build_transcript(&prep, &answers, recovered.clone(), start.elapsed())?;
    Ok((transcript, recovered))
}

/// Forms the super-messages, then the functions, then evaluates each expression.
pub fn server_answer(db: &Database, bundle: &QueryBundle) -> Result<Vec<Fe>> {
    let field = db.field();
    if bundle.field != *field || bundle.k != db.k() || bundle.s != db.s() {
        return Err(PltError::DimensionMismatch(format!(
            "query for q={} K={} S={} sent to a database with q={} K={} S={}",
            bundle.field.modulus(),
            bundle.k,
            bundle.s,
            field.modulus(),
            db.k(),
            db.s()
        )));
    }
    let r = bundle.r();
    if bundle.q_vectors.iter().any(|q| q.len() != db.k()) || bundle.betas.iter().any(|b| b.len() != r) {
        return Err(PltError::DimensionMismatch("query matrices have inconsistent shapes".into()));
    }
    if bundle.expressions.is_empty() {
        return Ok(Vec::new());
    }
    let supers: Vec<Vec<Fe>> = bundle.q_vectors.iter().map(|q| db.combine(q)).collect();
    let functions: Vec<Vec<Fe>> = bundle.betas.iter().map(|b| linalg::combine(field, b, &supers)).collect();
    pc_answer(field, &bundle.expressions, &functions)
}

/// `δ^{-1} · y`
pub fn recover_demand(field: &PrimeField, y: &[Fe], star_scalar: Fe) -> Result<Vec<Fe>> {
    let inv = field.inv(star_scalar)?;
    Ok(y.iter().map(|&v| field.mul(v, inv)).collect())
}

/// Every maximal square submatrix of `v` (rows `L`, columns `D >= L`) is invertible.
pub fn mds_check(field: &PrimeField, v: &[Vec<Fe>]) -> bool {
    let l = v.len();
    let Some(d) = v.first().map(Vec::len) else { return true };
    if l > d || v.iter().any(|row| row.len() != d) {
        return false;
    }
    enumerate_subsets(d, l).iter().all(|cols| {
        let sub: Vec<Vec<Fe>> = v.iter().map(|row| cols.iter().map(|&c| row[c]).collect()).collect();
        linalg::rank(field, &sub) == l
    })
}

/// User holds `side_values` for `side_indices` and wants the messages in `wanted`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SideInfoInstance {
    pub wanted: Vec<usize>,
    pub side_indices: Vec<usize>,
    pub side_values: Vec<Vec<Fe>>,
}

impl SideInfoInstance {
    /// Instance whose side information is read from `db`.
    pub fn from_db(db: &Database, wanted: Vec<usize>, side_indices: Vec<usize>) -> Self {
        let side_values = side_indices.iter().map(|&j| db.message(j).to_vec()).collect();
        SideInfoInstance { wanted, side_indices, side_values }
    }

    fn validate(&self, db: &Database) -> Result<()> {
        let k = db.k();
        let mut all: Vec<usize> = self.wanted.iter().chain(&self.side_indices).copied().collect();
        if self.wanted.is_empty() || all.iter().any(|&j| j >= k) {
            return Err(PltError::InvalidParams(format!("indices must be in 0..{k} with at least one wanted")));
        }
        all.sort_unstable();
        if all.windows(2).any(|w| w[0] == w[1]) {
            return Err(PltError::InvalidParams("wanted and side indices must be distinct".into()));
        }
        if self.side_values.len() != self.side_indices.len() {
            return Err(PltError::DimensionMismatch("side values do not match side indices".into()));
        }
        for (&j, v) in self.side_indices.iter().zip(&self.side_values) {
            if v.as_slice() != db.message(j) {
                return Err(PltError::InvalidParams(format!("side information for message {j} disagrees with the database")));
            }
        }
        Ok(())
    }
}

/// What a linear-transformation protocol hands back.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PltOutcome {
    /// `L x S`: the rows of `V · X_W`.
    pub rows: Vec<Vec<Fe>>,
    pub downloaded: usize,
}

/// A protocol retrieving `L = dimension()` combinations of the messages in
/// `support` with coefficient matrix `v` (`L x |support|`).
pub trait PltProtocol {
    fn dimension(&self) -> usize;
    fn retrieve(&self, db: &Database, support: &[usize], v: &[Vec<Fe>], n_servers: usize, seed: u64) -> Result<PltOutcome>;
}

/// The dimension-one protocol of this crate.
#[derive(Clone, Debug, Default)]
pub struct GrsPlt {
    pub opts: RunOptions,
}

impl PltProtocol for GrsPlt {
    fn dimension(&self) -> usize {
        1
    }

    fn retrieve(&self, db: &Database, support: &[usize], v: &[Vec<Fe>], n_servers: usize, seed: u64) -> Result<PltOutcome> {
        let [row] = v else {
            return Err(PltError::NoProtocol(v.len()));
        };
        let demand = Demand::new(db.field(), db.k(), support, row)?;
        let (t, recovered) = run_plt(db, &demand, n_servers, seed, &self.opts)?;
        Ok(PltOutcome { rows: vec![recovered], downloaded: t.total_downloaded })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SideInfoOutcome {
    /// One message per wanted index, in the instance's order.
    pub messages: Vec<Vec<Fe>>,
    pub downloaded: usize,
    /// `P·S / downloaded`
    pub rate: BigRational,
}

/// Retrieval with side information through a linear-transformation protocol
/// of dimension `P`: draw an MDS coefficient matrix over wanted and side
/// messages, retrieve the combinations, strip the side information and solve
/// the remaining `P x P` system.
pub fn mpir_psi_wrapper(
    protocol: &dyn PltProtocol,
    db: &Database,
    instance: &SideInfoInstance,
    n_servers: usize,
    seed: u64,
) -> Result<SideInfoOutcome> {
    let l = instance.wanted.len();
    if protocol.dimension() != l {
        return Err(PltError::NoProtocol(l));
    }
    instance.validate(db)?;
    let field = db.field();
    let mut support: Vec<usize> = instance.wanted.iter().chain(&instance.side_indices).copied().collect();
    support.sort_unstable();
    let col = |j: usize| support.iter().position(|&x| x == j).expect("index in support");

    let mut rng = rng::stream(seed, rng::WRAPPER_STREAM);
    let v = loop {
        let v: Vec<Vec<Fe>> = (0..l)
            .map(|_| (0..support.len()).map(|_| field.random_nonzero(&mut rng)).collect())
            .collect();
        if mds_check(field, &v) {
            break v;
        }
    };
    let out = protocol.retrieve(db, &support, &v, n_servers, rng.random())?;
    if out.rows.len() != l || out.rows.iter().any(|r| r.len() != db.s()) {
        return Err(PltError::DimensionMismatch("protocol returned the wrong number of symbols".into()));
    }

    let mut reduced = out.rows;
    for (row, z) in v.iter().zip(reduced.iter_mut()) {
        for (&j, xj) in instance.side_indices.iter().zip(&instance.side_values) {
            let c = field.neg(row[col(j)]);
            for (a, &b) in z.iter_mut().zip(xj) {
                *a = field.mul_add(*a, c, b);
            }
        }
    }
    let a: Vec<Vec<Fe>> = v.iter().map(|row| instance.wanted.iter().map(|&j| row[col(j)]).collect()).collect();
    let units: Vec<Vec<Fe>> = (0..l)
        .map(|p| (0..l).map(|i| if i == p { field.one() } else { Fe::ZERO }).collect())
        .collect();
    let sol = gaussian_solve(field, &a, &units);
    let messages = sol
        .solutions
        .into_iter()
        .map(|c| {
            let c = c.ok_or_else(|| PltError::InternalInvariant("MDS block is singular".into()))?;
            Ok(linalg::combine(field, &c, &reduced))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SideInfoOutcome {
        messages,
        downloaded: out.downloaded,
        rate: ratio((l * db.s()) as u64, out.downloaded as u64),
    })
}

/// Single-message retrieval with `D - 1` side messages via the dimension-one protocol.
pub fn run_pir_psi_via_plt(
    db: &Database,
    instance: &SideInfoInstance,
    n_servers: usize,
    seed: u64,
) -> Result<(Vec<Fe>, BigRational)> {
    if instance.wanted.len() != 1 {
        return Err(PltError::NoProtocol(instance.wanted.len()));
    }
    let out = mpir_psi_wrapper(&GrsPlt::default(), db, instance, n_servers, seed)?;
    Ok((out.messages.into_iter().next().expect("one message"), out.rate))
}
