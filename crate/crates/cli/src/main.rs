use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use plt_core::audit::{self, Mutant, TvParams};
use plt_core::capacity::{baseline_rates, format_ratio, plt_capacity_l1, plt_upper_bound, Baseline};
use plt_core::engine::{run_plt, Database};
use plt_core::grs::{binomial, build_tables};
use plt_core::pc::{symbols_for, PlanLimits};
use plt_core::{net, rng, wire, CapacityQuery, Demand, Fe, GrsOverrides, PltError, PrimeField, RunOptions, Transcript};

/// Private linear transformation toolkit.
#[derive(Parser)]
#[command(name = "plt", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the protocol once, in process or against TCP servers.
    Run(RunArgs),
    /// Start one server.
    Serve(ServeArgs),
    /// Print capacity values and bounds.
    Capacity(CapacityArgs),
    /// Structural, statistical and rate audits.
    Audit {
        #[command(subcommand)]
        check: AuditCommand,
    },
    /// Reproduce the four-message worked example with fixed choices.
    Example1,
}

#[derive(Args)]
struct RunArgs {
    /// Number of servers (defaults to the number of --tcp endpoints).
    #[arg(long)]
    servers: Option<usize>,
    #[arg(long)]
    messages: usize,
    /// Support size D (defaults to the length of --demand).
    #[arg(long)]
    support: Option<usize>,
    #[arg(long)]
    q: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// 1-based message indices of the demand.
    #[arg(long, value_delimiter = ',')]
    demand: Option<Vec<usize>>,
    /// Demand coefficients, one per index in --demand.
    #[arg(long, value_delimiter = ',', requires = "demand")]
    coeffs: Option<Vec<u64>>,
    /// Append the transcript as one JSON line.
    #[arg(long)]
    transcript: Option<PathBuf>,
    /// Server endpoints; the run goes over TCP instead of in process.
    #[arg(long, value_delimiter = ',')]
    tcp: Option<Vec<String>>,
    /// Database file (LoadDb payload layout) instead of the seed-derived one.
    #[arg(long)]
    db: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    /// Bind address; defaults to $PLT_BIND or 127.0.0.1:7311.
    #[arg(long)]
    bind: Option<String>,
    #[arg(long, conflicts_with = "random")]
    db: Option<PathBuf>,
    /// Generate the database from --seed, as `run` does.
    #[arg(long)]
    random: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    messages: Option<usize>,
    #[arg(long)]
    q: Option<u64>,
    /// Symbols per message; or give --servers and --support to use N^C(K,D).
    #[arg(long)]
    symbols: Option<usize>,
    #[arg(long)]
    servers: Option<usize>,
    #[arg(long)]
    support: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Args)]
struct CapacityArgs {
    /// Servers (comma-separated list allowed).
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<u64>,
    #[arg(long, value_delimiter = ',', required = true)]
    k: Vec<u64>,
    /// Demand dimension.
    #[arg(long, value_delimiter = ',', required = true)]
    l: Vec<u64>,
    /// Support size.
    #[arg(long, value_delimiter = ',', required = true)]
    d: Vec<u64>,
    #[arg(long)]
    baselines: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Subcommand)]
enum AuditCommand {
    /// Support bijection and dependency-vector counts for one seeded instance.
    Structure {
        #[arg(long)]
        messages: usize,
        #[arg(long)]
        support: usize,
        #[arg(long)]
        q: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Plan shapes across all choices of the desired function.
    Shape {
        #[arg(long)]
        servers: usize,
        #[arg(long)]
        functions: usize,
        #[arg(long)]
        rank: usize,
        #[arg(long, default_value_t = 11)]
        q: u64,
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        #[arg(long, value_enum)]
        mutant: Option<MutantArg>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Total-variation test between demands.
    Tv {
        #[arg(long, default_value_t = 2)]
        servers: usize,
        #[arg(long, default_value_t = 3)]
        messages: usize,
        #[arg(long, default_value_t = 2)]
        support: usize,
        #[arg(long, default_value_t = 5)]
        q: u64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum)]
        mutant: Option<MutantArg>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Measured rate of one run against capacity.
    Rate {
        #[arg(long)]
        servers: usize,
        #[arg(long)]
        messages: usize,
        #[arg(long)]
        support: usize,
        #[arg(long)]
        q: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MutantArg {
    ConstantAlpha,
    FixedDesiredScalar,
    DesiredFirstKeepOrder,
}

impl From<MutantArg> for Mutant {
    fn from(m: MutantArg) -> Self {
        match m {
            MutantArg::ConstantAlpha => Mutant::ConstantAlpha,
            MutantArg::FixedDesiredScalar => Mutant::FixedDesiredScalar,
            MutantArg::DesiredFirstKeepOrder => Mutant::DesiredFirstKeepOrder,
        }
    }
}

/// Failure of a subcommand: protocol errors exit 1, usage errors exit 2.
enum Failure {
    Protocol(PltError),
    Usage(String),
    Check(String),
}

impl From<PltError> for Failure {
    fn from(e: PltError) -> Self {
        Failure::Protocol(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Protocol(e.into())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Serve(a) => cmd_serve(a),
        Command::Capacity(a) => cmd_capacity(a),
        Command::Audit { check } => cmd_audit(check),
        Command::Example1 => cmd_example1(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Protocol(e)) => {
            eprintln!("error: {}: {e}", e.name());
            ExitCode::from(1)
        }
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn field(q: u64) -> Result<PrimeField, Failure> {
    Ok(PrimeField::new(q)?)
}

fn show(v: &[Fe]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("[{}]", parts.join(","))
}

fn show_prefix(v: &[Fe], n: usize) -> String {
    if v.len() <= n {
        show(v)
    } else {
        format!("{} ... ({} symbols)", show(&v[..n]).trim_end_matches(']'), v.len())
    }
}

fn resolve_demand(a: &RunArgs, f: &PrimeField) -> Result<Demand, Failure> {
    let mut drng = rng::stream(a.seed, rng::DEMAND_STREAM);
    match &a.demand {
        None => {
            let d = a.support.ok_or_else(|| Failure::Usage("give --support or --demand".into()))?;
            Ok(Demand::random(f, a.messages, d, &mut drng)?)
        }
        Some(idx) => {
            if let Some(d) = a.support {
                if d != idx.len() {
                    return Err(Failure::Usage(format!("--support {d} but --demand lists {} indices", idx.len())));
                }
            }
            if idx.contains(&0) {
                return Err(Failure::Usage("--demand indices are 1-based".into()));
            }
            let zero_based: Vec<usize> = idx.iter().map(|i| i - 1).collect();
            match &a.coeffs {
                None => Ok(Demand::random_with_support(f, a.messages, &zero_based, &mut drng)?),
                Some(c) => {
                    if c.len() != idx.len() {
                        return Err(Failure::Usage(format!("{} coefficients for {} indices", c.len(), idx.len())));
                    }
                    let coeffs = c.iter().map(|&x| f.try_elem(x)).collect::<Result<Vec<_>, _>>()?;
                    Ok(Demand::new(f, a.messages, &zero_based, &coeffs)?)
                }
            }
        }
    }
}

fn load_db(path: &PathBuf) -> Result<Database, Failure> {
    Ok(wire::parse_db_payload(&std::fs::read(path)?)?)
}

fn print_transcript(t: &Transcript, capacity: &str) {
    let p = &t.params;
    println!("parameters: N={} K={} D={} q={} seed={}", p.n, p.k, p.d, p.q, t.seed);
    println!("symbols per message: {}", t.s);
    for (n, c) in t.servers.iter().enumerate() {
        println!("server {}: query {} bytes, answer {} symbols", n + 1, c.query_bytes, c.answer_symbols);
    }
    println!("downloaded: {}", t.total_downloaded);
    println!("rate: {} (capacity {capacity})", format_ratio(&t.rate()));
    println!("recovered: {}", show_prefix(&t.recovered, 16));
}

fn cmd_run(a: RunArgs) -> Outcome {
    let f = field(a.q)?;
    let n = match (&a.tcp, a.servers) {
        (Some(eps), Some(n)) if eps.len() != n => {
            return Err(Failure::Usage(format!("--servers {n} but {} --tcp endpoints", eps.len())))
        }
        (Some(eps), _) => eps.len(),
        (None, Some(n)) => n,
        (None, None) => return Err(Failure::Usage("give --servers or --tcp".into())),
    };
    let demand = resolve_demand(&a, &f)?;
    let opts = RunOptions::default();
    let (t, _) = match &a.tcp {
        Some(eps) => net::client_run(eps, &f, a.messages, &demand, a.seed, &opts)?,
        None => {
            let db = match &a.db {
                Some(p) => load_db(p)?,
                None => {
                    let fcount = binomial(a.messages as u64, demand.size() as u64) as usize;
                    let s = symbols_for(n, fcount, a.messages - demand.size() + 1, &PlanLimits::default())?;
                    Database::random(f, a.messages, s, a.seed)
                }
            };
            let out = run_plt(&db, &demand, n, a.seed, &opts)?;
            if out.1 != db.evaluate_demand(&demand) {
                return Err(Failure::Check("recovered symbols differ from the direct evaluation".into()));
            }
            out
        }
    };
    let cap = plt_capacity_l1(n as u64, a.messages as u64, demand.size() as u64)?;
    let idx: Vec<String> = demand.support().iter().map(|i| (i + 1).to_string()).collect();
    println!("demand: indices {{{}}} coefficients {}", idx.join(","), show(demand.coeffs()));
    print_transcript(&t, &format_ratio(&cap.value));
    if a.tcp.is_none() {
        println!("check: recovered equals direct evaluation");
    }
    if let Some(path) = &a.transcript {
        let mut file = OpenOptions::new().create(true).append(true).open(path)?;
        writeln!(file, "{}", t.to_json_line())?;
    }
    Ok(())
}

fn cmd_serve(a: ServeArgs) -> Outcome {
    let db = if let Some(p) = &a.db {
        Some(load_db(p)?)
    } else if a.random {
        let (Some(k), Some(q)) = (a.messages, a.q) else {
            return Err(Failure::Usage("--random needs --messages and --q".into()));
        };
        let s = match (a.symbols, a.servers, a.support) {
            (Some(s), _, _) => s,
            (None, Some(n), Some(d)) if d >= 1 && d <= k => {
                symbols_for(n, binomial(k as u64, d as u64) as usize, k - d + 1, &PlanLimits::default())?
            }
            _ => return Err(Failure::Usage("--random needs --symbols, or --servers and --support".into())),
        };
        Some(Database::random(field(q)?, k, s, a.seed))
    } else {
        None
    };
    let bind = a.bind.unwrap_or_else(net::default_bind);
    let handle = net::serve(db, &bind)?;
    println!("listening on {}", handle.local_addr());
    std::io::stdout().flush()?;
    handle.wait();
    Ok(())
}

fn cmd_capacity(a: CapacityArgs) -> Outcome {
    let mut rows = Vec::new();
    for &n in &a.n {
        for &k in &a.k {
            for &l in &a.l {
                for &d in &a.d {
                    if let Ok(q) = CapacityQuery::new(n, k, l, d) {
                        rows.push(q);
                    }
                }
            }
        }
    }
    if rows.is_empty() {
        return Err(Failure::Usage("no valid (n, k, l, d) combination; need n,k >= 1 and 1 <= l <= d <= k".into()));
    }
    let baseline_names = ["mm-pir", "pc-full", "mpir-then-combine"];
    let mut header = vec!["n", "k", "l", "d", "upper_bound", "kind", "formula", "capacity_l1"];
    if a.baselines {
        header.extend(baseline_names);
    }
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|q| {
            let ub = plt_upper_bound(q);
            let l1 = if q.dimension == 1 {
                plt_capacity_l1(q.n_servers, q.k_messages, q.support).map_or("-".into(), |c| format_ratio(&c.value))
            } else {
                "-".into()
            };
            let tag = |v: serde_json::Value| v.as_str().unwrap_or_default().to_string();
            let mut row = vec![
                q.n_servers.to_string(),
                q.k_messages.to_string(),
                q.dimension.to_string(),
                q.support.to_string(),
                format_ratio(&ub.value),
                tag(serde_json::to_value(ub.kind).expect("serializable")),
                tag(serde_json::to_value(ub.formula).expect("serializable")),
                l1,
            ];
            if a.baselines {
                let b: BTreeMap<&str, Baseline> = baseline_rates(q);
                for name in baseline_names {
                    row.push(match &b[name] {
                        Baseline::Covered(r) => format_ratio(&r.value),
                        Baseline::NotCovered => "n/a".into(),
                    });
                }
            }
            row
        })
        .collect();
    match a.format {
        Format::Csv => {
            println!("{}", header.join(","));
            for row in &table {
                println!("{}", row.join(","));
            }
        }
        Format::Json => {
            let objs: Vec<BTreeMap<&str, &String>> =
                table.iter().map(|row| header.iter().copied().zip(row).collect()).collect();
            println!("{}", serde_json::to_string_pretty(&objs).expect("serializable"));
        }
        Format::Text => {
            let widths: Vec<usize> = (0..header.len())
                .map(|c| table.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap())
                .collect();
            let line = |cells: Vec<&str>| {
                let padded: Vec<String> = cells.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect();
                println!("{}", padded.join("  ").trim_end());
            };
            line(header.clone());
            for row in &table {
                line(row.iter().map(String::as_str).collect());
            }
        }
    }
    Ok(())
}

fn print_findings(findings: &[audit::Finding]) {
    for f in findings {
        println!("{} {}: {}", if f.pass { "PASS" } else { "FAIL" }, f.check, f.detail);
    }
}

fn cmd_audit(check: AuditCommand) -> Outcome {
    match check {
        AuditCommand::Structure { messages, support, q, seed, format } => {
            let f = field(q)?;
            let mut r = rng::stream(seed, rng::DEMAND_STREAM);
            let demand = Demand::random(&f, messages, support, &mut r)?;
            let t = build_tables(&f, messages, &demand, &GrsOverrides::default(), &mut rng::stream(seed, rng::PROTOCOL_STREAM))?;
            let rep = audit::check_support_structure(&f, &t.spec, &t.table);
            if format == Format::Json {
                println!("{}", serde_json::to_string_pretty(&rep).expect("serializable"));
            } else {
                print_findings(&rep.findings);
            }
            verdict(rep.pass)
        }
        AuditCommand::Shape { servers, functions, rank, q, seeds, mutant, format } => {
            let f = field(q)?;
            let order = mutant.map_or_else(Default::default, |m| Mutant::from(m).options(&f, 1, &[0]).keep_order);
            let seeds: Vec<u64> = (0..seeds).collect();
            let rep = audit::check_shape_independence(&f, servers, functions, rank, &seeds, order)?;
            if format == Format::Json {
                println!("{}", serde_json::to_string_pretty(&rep).expect("serializable"));
            } else {
                print_findings(&rep.findings);
            }
            verdict(rep.pass)
        }
        AuditCommand::Tv { servers, messages, support, q, samples, seed, mutant, format } => {
            let p = TvParams { n: servers, k: messages, d: support, q };
            let pairs = audit::all_support_pairs(messages, support);
            let rep = audit::tv_privacy_test(&p, &pairs, samples, seed, mutant.map(Mutant::from))?;
            if format == Format::Json {
                println!("{}", serde_json::to_string_pretty(&rep).expect("serializable"));
            } else {
                print_findings(&rep.structural);
                for pair in &rep.pairs {
                    println!(
                        "tv {:?} vs {:?} server {} {}: {:.4}",
                        pair.a.iter().map(|i| i + 1).collect::<Vec<_>>(),
                        pair.b.iter().map(|i| i + 1).collect::<Vec<_>>(),
                        pair.server + 1,
                        pair.component,
                        pair.tv
                    );
                }
                println!(
                    "{} max tv {:.4} over {} samples (threshold {})",
                    if rep.tv_pass() { "PASS" } else { "FAIL" },
                    rep.tv_estimate,
                    rep.samples,
                    rep.threshold
                );
            }
            verdict(rep.pass())
        }
        AuditCommand::Rate { servers, messages, support, q, seed, format } => {
            let f = field(q)?;
            let mut r = rng::stream(seed, rng::DEMAND_STREAM);
            let demand = Demand::random(&f, messages, support, &mut r)?;
            let fcount = binomial(messages as u64, support as u64) as usize;
            let s = symbols_for(servers, fcount, messages - support + 1, &PlanLimits::default())?;
            let db = Database::random(f, messages, s, seed);
            let (t, rec) = run_plt(&db, &demand, servers, seed, &RunOptions::default())?;
            let rep = audit::measure_rate(&t)?;
            let recovered = rec == db.evaluate_demand(&demand);
            if format == Format::Json {
                let mut v = serde_json::to_value(&rep).expect("serializable");
                v["recovered"] = recovered.into();
                println!("{}", serde_json::to_string_pretty(&v).expect("serializable"));
            } else {
                println!(
                    "{} rate {} = {}/{}, capacity {}",
                    if rep.equal { "PASS" } else { "FAIL" },
                    format_ratio(&rep.measured),
                    t.s,
                    t.total_downloaded,
                    format_ratio(&rep.capacity)
                );
                println!("{} recovered equals direct evaluation", if recovered { "PASS" } else { "FAIL" });
            }
            verdict(rep.equal && recovered)
        }
    }
}

fn verdict(pass: bool) -> Outcome {
    if pass {
        Ok(())
    } else {
        Err(Failure::Check("audit failed".into()))
    }
}

fn cmd_example1() -> Outcome {
    let f = field(5)?;
    let e = |v: &[u64]| -> Vec<Fe> { v.iter().map(|&x| f.elem(x)).collect() };
    let demand = Demand::new(&f, 4, &[0, 1, 2], &e(&[2, 1, 1]))?;
    let opts = RunOptions {
        overrides: GrsOverrides {
            omegas: Some(e(&[0, 1, 2, 3])),
            alphas: BTreeMap::from([(3, f.elem(2))]),
            scalars: BTreeMap::from([(0, f.elem(2)), (1, f.elem(1)), (2, f.elem(4)), (3, f.elem(3))]),
        },
        ..RunOptions::default()
    };
    let tables = build_tables(&f, 4, &demand, &opts.overrides, &mut rng::stream(0, rng::PROTOCOL_STREAM))?;
    let db = Database::random(f, 4, 16, 0);
    let (t, rec) = run_plt(&db, &demand, 2, 0, &opts)?;

    let mut checks: Vec<(String, bool)> = Vec::new();
    let mut check = |label: String, ok: bool| {
        println!("{label}");
        checks.push((label, ok));
    };
    check(format!("p(x) coefficients, low first: {}", show(tables.secret.p_poly.coeffs())), tables.secret.p_poly.coeffs() == e(&[2, 1]));
    check(format!("alpha = {}", show(&tables.secret.alphas)), tables.secret.alphas == e(&[1, 2, 4, 2]));
    let want_q = [e(&[1, 2, 4, 2]), e(&[0, 2, 3, 1])];
    for (i, q) in tables.spec.q_vectors.iter().enumerate() {
        check(format!("Q_{} = {}", i + 1, show(q)), want_q.get(i) == Some(q));
    }
    let want_y = [e(&[4, 2, 2, 0]), e(&[3, 3, 0, 2]), e(&[1, 0, 1, 1]), e(&[0, 1, 4, 3])];
    for (i, beta) in tables.table.betas.iter().enumerate() {
        let y = tables.spec.combine(&f, beta);
        check(format!("beta_{} = {}  Y_{} coefficients = {}", i + 1, show(beta), i + 1, show(&y)), want_y.get(i) == Some(&y));
    }
    let delta = tables.table.star_scalar;
    let inv = f.inv(delta)?;
    let y_star = tables.spec.combine(&f, &tables.table.betas[tables.table.star_index]);
    let scaled: Vec<Fe> = y_star.iter().map(|&x| f.mul(inv, x)).collect();
    check(format!("delta = {delta}, demand = {inv} * Y_{} = {}", tables.table.star_index + 1, show(&scaled)), delta == f.elem(2) && scaled == e(&[2, 1, 1, 0]));
    for (n, c) in t.servers.iter().enumerate() {
        check(format!("server {} returns {} symbols", n + 1, c.answer_symbols), c.answer_symbols == 12);
    }
    check(format!("rate = {}/{} = {}", t.s, t.total_downloaded, format_ratio(&t.rate())), t.s == 16 && t.total_downloaded == 24);
    check("recovered = 2 X_1 + X_2 + X_3 symbolwise".into(), rec == db.evaluate_demand(&demand));

    let pass = checks.iter().all(|c| c.1);
    for (label, ok) in &checks {
        if !ok {
            println!("mismatch: {label}");
        }
    }
    println!("{}", if pass { "PASS" } else { "FAIL" });
    verdict(pass)
}
