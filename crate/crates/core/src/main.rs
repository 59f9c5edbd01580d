use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Deserialize;

use atcws::dsl::{self, Env, Query, TgndcQuerySpec};
use atcws::equivalence::{simulates, SimOptions};
use atcws::lts::{explore_raw, run_trace, time_violations, ExploreOptions};
use atcws::protocols::{self, Params};
use atcws::report::{CheckReport, Verdict};
use atcws::syntax::Network;
use atcws::tgndc::{check_tgndc, check_tgndc_compositional, split_parts, Bounds};

const USAGE_ERROR: u8 = 3;

#[derive(Parser)]
#[command(
    name = "atcws",
    version,
    about = "Bounded verification of timed broadcast networks"
)]
struct Cli {
    /// TOML file with default bounds and protocol parameters.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Clock ticks to explore.
    #[arg(long, global = true)]
    max_sigma: Option<usize>,
    /// Constructor depth of attacker candidates.
    #[arg(long, global = true)]
    depth: Option<usize>,
    /// Internal steps allowed between two observable actions.
    #[arg(long, global = true)]
    tau_bound: Option<usize>,
    /// State budget; exceeding it makes a check inconclusive.
    #[arg(long, global = true)]
    max_states: Option<usize>,
    /// Key chain length of bundled protocols.
    #[arg(long, global = true)]
    n: Option<u32>,
    /// Key buffer size of bundled protocols.
    #[arg(long, global = true)]
    s: Option<u32>,
    /// Receivers in authenticated broadcast.
    #[arg(long, global = true)]
    h: Option<u32>,
    /// Worker threads for independent queries.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Well-formedness, scoping and syntactic well-timedness of a network.
    CheckWf { net: String },
    /// Explores the transition system up to the clock bound.
    Explore {
        net: String,
        /// Writes the state graph in DOT format.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Replays a trace file on a network.
    Trace { net: String, trace: PathBuf },
    /// Clock determinism, patience, maximal progress, well-formedness
    /// preservation and bounded instantaneous runs on every reachable state.
    TimeProps {
        net: String,
        #[arg(long, default_value_t = 1000)]
        budget: usize,
    },
    /// Whether `spec` weakly simulates `imp`.
    Sim { imp: String, spec: String },
    /// Runs every check in a query file.
    Tgndc {
        query: PathBuf,
        /// Splits tgndc checks into one part per protocol node.
        #[arg(long)]
        compositional: bool,
    },
    /// Replays the published attack on a bundled protocol.
    Attack { protocol: String },
    /// Exhaustive timing-gap check of a bundled instance's abstraction.
    Gaps {
        protocol: String,
        variant: String,
        #[arg(long, default_value_t = 3)]
        rounds: usize,
    },
    /// Lists the bundled protocol encodings.
    ListProtocols,
    /// Prints a bundled instance as a model file.
    EmitProtocol {
        protocol: String,
        variant: String,
        /// Prints the query file for a model at this path instead.
        #[arg(long)]
        query_for: Option<String>,
        /// Prints the instance's reference trace instead.
        #[arg(long)]
        trace: bool,
    },
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct Config {
    max_sigma: Option<usize>,
    candidate_depth: Option<usize>,
    deduction_depth: Option<usize>,
    tau_bound: Option<usize>,
    max_states: Option<usize>,
    jobs: Option<usize>,
    #[serde(default)]
    params: ParamConfig,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ParamConfig {
    n: Option<u32>,
    s: Option<u32>,
    h: Option<u32>,
}

struct Settings {
    bounds: Bounds,
    /// Bounds given on the command line beat those in query files.
    sigma_forced: bool,
    depth_forced: bool,
    params: Params,
    jobs: usize,
}

#[derive(Debug)]
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Failure {
        Failure(e.to_string())
    }
}

type Res<T> = Result<T, Failure>;

fn settings(cli: &Cli) -> Res<Settings> {
    let cfg: Config = match &cli.config {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).map_err(|e| Failure(format!("{}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| Failure(format!("{}: {e}", p.display())))?
        }
        None => Config::default(),
    };
    let mut b = Bounds::default();
    let d = Params::default();
    b.max_sigma = cli.max_sigma.or(cfg.max_sigma).unwrap_or(b.max_sigma);
    b.candidate_depth = cli
        .depth
        .or(cfg.candidate_depth)
        .unwrap_or(b.candidate_depth);
    b.deduction_depth = cfg.deduction_depth.unwrap_or(b.deduction_depth);
    b.tau_bound = cli.tau_bound.or(cfg.tau_bound).unwrap_or(b.tau_bound);
    b.max_states = cli.max_states.or(cfg.max_states).unwrap_or(b.max_states);
    Ok(Settings {
        bounds: b,
        sigma_forced: cli.max_sigma.is_some(),
        depth_forced: cli.depth.is_some(),
        params: Params {
            n: cli.n.or(cfg.params.n).unwrap_or(d.n),
            s: cli.s.or(cfg.params.s).unwrap_or(d.s),
            h: cli.h.or(cfg.params.h).unwrap_or(d.h),
        },
        jobs: cli.jobs.or(cfg.jobs).unwrap_or(1).max(1),
    })
}

/// `path[#name]` for a network in a model file, or `@protocol/variant[#name]`
/// for a bundled instance (`system`, `abstraction` or `attacked`). Without a
/// name a file must hold exactly one network.
fn load_network(spec: &str, st: &Settings) -> Res<(Network, Env)> {
    let (src, want) = match spec.split_once('#') {
        Some((s, n)) => (s, Some(n)),
        None => (spec, None),
    };
    if let Some(builtin) = src.strip_prefix('@') {
        let (p, v) = builtin
            .split_once('/')
            .ok_or_else(|| Failure(format!("expected @protocol/variant, got {spec}")))?;
        let inst = protocols::build(p, v, &st.params)?;
        let m = dsl::instance_model(&inst);
        let mut env = Env::default();
        env.absorb(&m);
        let net = match want.unwrap_or("system") {
            // The system wired to its attackers and the scripted replay attacker.
            "attacked" => {
                let wired = atcws::tgndc::wire_observed(&inst.system, &inst.wiring)?;
                wired.compose(&protocols::scripted_attacker(p)?)
            }
            name => env.network(name)?.clone(),
        };
        return Ok((net, env));
    }
    let (m, env) = dsl::load(Path::new(src))?;
    let net = match want {
        Some(n) => env.network(n)?.clone(),
        None => match m.networks.as_slice() {
            [(_, net)] => net.clone(),
            nets => {
                let names: Vec<&str> = nets.iter().map(|(n, _)| &**n).collect();
                return Err(Failure(format!(
                    "{src} declares {} networks; pick one with #name ({})",
                    nets.len(),
                    names.join(", ")
                )));
            }
        },
    };
    Ok((net, env))
}

fn check_wf(net: &Network) -> CheckReport {
    let mut rep = CheckReport::new("check-wf");
    let wf = net.check_well_formed();
    let scope = net.check_scoping();
    let timed = net.is_well_timed_syntax();
    rep.line(format!("well-formedness: {}", wf.verdict));
    rep.body.extend(wf.body.iter().map(|l| format!("  {l}")));
    rep.line(format!("scoping: {}", scope.verdict));
    rep.body.extend(scope.body.iter().map(|l| format!("  {l}")));
    rep.line(format!(
        "time-guarded recursion: {}",
        if timed { "yes" } else { "no" }
    ));
    rep.verdict = wf.verdict.and(scope.verdict);
    if !timed {
        rep.verdict = rep.verdict.and(Verdict::Fails);
    }
    rep
}

fn explore_report(label: &str, net: &Network, b: &Bounds, dot: Option<&Path>) -> Res<CheckReport> {
    let mut opts = ExploreOptions::new(b.max_sigma);
    opts.max_states = b.max_states;
    let mut ex = explore_raw(net, &opts)?;
    let mut rep = CheckReport::new(format!("explore {label}"));
    rep.bound("max_sigma", b.max_sigma);
    rep.line(format!("states: {}", ex.order.len()));
    rep.line(format!("transitions: {}", ex.edges.len()));
    rep.line(format!(
        "deepest slot: {}",
        ex.layer.iter().max().copied().unwrap_or(0)
    ));
    rep.line(format!("states at the clock bound: {}", ex.frontier.len()));
    if ex.incomplete {
        rep.verdict = Verdict::Inconclusive;
        rep.qualifier = Some("state budget exhausted".into());
    }
    if let Some(path) = dot {
        std::fs::write(path, ex.to_graph().to_dot())
            .map_err(|e| Failure(format!("{}: {e}", path.display())))?;
        rep.line(format!("graph written to {}", path.display()));
    }
    Ok(rep)
}

fn trace_report(net: &Network, env: &Env, path: &Path, st: &Settings) -> Res<CheckReport> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    let mut env = env.clone();
    let inferred = Env::of_network(net);
    env.atoms.extend(inferred.atoms);
    env.chains.extend(inferred.chains);
    let t =
        dsl::parse_trace(&text, &env).map_err(|e| Failure(format!("{}:{e}", path.display())))?;
    let r = run_trace(net, &t, st.bounds.tau_bound)?;
    let mut rep = CheckReport::new(format!("trace {}", path.display()));
    rep.bound("tau_bound", st.bounds.tau_bound);
    rep.line(format!(
        "steps: {} ({} clock ticks)",
        t.steps.len(),
        t.sigma_count()
    ));
    rep.line(format!("reachable end states: {}", r.states.len()));
    if r.states.is_empty() {
        rep.verdict = if r.truncated {
            Verdict::Inconclusive
        } else {
            Verdict::Fails
        };
        // Report how far the network follows.
        let mut ok = 0;
        for k in 1..=t.steps.len() {
            let pre = atcws::lts::Trace::new(t.steps[..k].to_vec());
            if run_trace(net, &pre, st.bounds.tau_bound)?.states.is_empty() {
                break;
            }
            ok = k;
        }
        rep.line(format!(
            "longest accepted prefix: {ok} steps; blocked at: {}",
            t.steps[ok]
        ));
    }
    Ok(rep)
}

fn time_report(net: &Network, st: &Settings, budget: usize) -> Res<CheckReport> {
    let v = time_violations(net, st.bounds.max_sigma, budget)?;
    let mut rep = CheckReport::new("time-props");
    rep.bound("max_sigma", st.bounds.max_sigma);
    rep.bound("step_budget", budget);
    rep.line(format!("states: {}", v.states));
    let show = |xs: &[usize]| {
        let v: Vec<String> = xs.iter().take(8).map(|x| format!("s{x}")).collect();
        if xs.is_empty() {
            "ok".to_string()
        } else {
            format!("{} violations ({})", xs.len(), v.join(","))
        }
    };
    rep.line(format!("clock determinism: {}", show(&v.sigma_uniqueness)));
    rep.line(format!("patience: {}", show(&v.patience)));
    rep.line(format!("maximal progress: {}", show(&v.maximal_progress)));
    rep.line(format!(
        "well-formedness preserved: {}",
        show(&v.well_formedness)
    ));
    rep.line(format!(
        "instantaneous runs: {} (longest {})",
        show(&v.instantaneous),
        v.longest_instantaneous
    ));
    if v.total() > 0 {
        rep.verdict = Verdict::Fails;
    } else if v.incomplete {
        rep.verdict = Verdict::Inconclusive;
        rep.qualifier = Some("state budget exhausted".into());
    }
    Ok(rep)
}

fn sim_report(label: &str, imp: &Network, spec: &Network, b: &Bounds) -> Res<CheckReport> {
    let mut opts = SimOptions::new(b.max_sigma);
    opts.tau_bound = b.tau_bound;
    opts.max_states = b.max_states;
    let r = simulates(spec, imp, &opts)?;
    let mut rep = CheckReport::new(format!("sim {label}"));
    rep.bound("max_sigma", b.max_sigma);
    rep.verdict = r.verdict;
    rep.line(format!("pairs explored: {}", r.explored_pairs));
    if let Some((t, l)) = &r.counterexample {
        rep.line(format!(
            "{} counterexample ({} steps), blocked at: {l}",
            if r.branching { "branching" } else { "trace" },
            t.steps.len()
        ));
        rep.attach("counterexample.trace", t.render());
    }
    for n in &r.notes {
        rep.note(n.clone());
    }
    Ok(rep)
}

fn query_bounds(st: &Settings, bound: Option<usize>, depth: Option<usize>) -> Bounds {
    let mut b = st.bounds.clone();
    if !st.sigma_forced {
        b.max_sigma = bound.unwrap_or(b.max_sigma);
    }
    if !st.depth_forced {
        b.candidate_depth = depth.unwrap_or(b.candidate_depth);
    }
    b
}

fn tgndc_report(
    q: &TgndcQuerySpec,
    env: &Env,
    st: &Settings,
    force_comp: bool,
) -> Res<CheckReport> {
    let b = query_bounds(st, q.bound, q.depth);
    let query = env.tgndc_query(q, &b)?;
    if q.compositional || force_comp {
        let parts = split_parts(&query.system, &query.spec, &query.wiring)?;
        Ok(check_tgndc_compositional(
            &query.name,
            &query.system,
            &query.wiring,
            &parts,
            &query.phi,
            &b,
        )?)
    } else {
        Ok(check_tgndc(&query)?.report)
    }
}

fn attack_report(proto: &str, st: &Settings) -> Res<CheckReport> {
    if proto == "mutesla-auth" {
        // No scripted attacker exists for this protocol; the bounded check
        // against the most general attacker stands in.
        let inst = protocols::build(proto, "integrity", &st.params)?;
        let mut rep = inst
            .check_compositional(&st.bounds)?
            .ok_or_else(|| Failure("instance has no abstraction".into()))?;
        rep.note(
            "no published attack for this protocol; ran the bounded non-interference check instead",
        );
        return Ok(rep);
    }
    Ok(protocols::replay_attack(
        proto,
        &st.params,
        st.bounds.tau_bound,
    )?)
}

fn run_query(q: &Query, env: &Env, st: &Settings, force_comp: bool) -> Res<CheckReport> {
    match q {
        Query::Tgndc(t) => tgndc_report(t, env, st, force_comp),
        Query::Sim { imp, spec, bound } => {
            let b = query_bounds(st, *bound, None);
            sim_report(
                &format!("{imp} against {spec}"),
                env.network(imp)?,
                env.network(spec)?,
                &b,
            )
        }
        Query::Explore { net, bound } => explore_report(
            net,
            env.network(net)?,
            &query_bounds(st, *bound, None),
            None,
        ),
        Query::Attack { protocol } => attack_report(protocol, st),
    }
}

/// Runs the queries on up to `jobs` threads; results keep file order.
fn run_queries(qs: &[Query], env: &Env, st: &Settings, force_comp: bool) -> Vec<Res<CheckReport>> {
    let mut out: Vec<Option<Res<CheckReport>>> = (0..qs.len()).map(|_| None).collect();
    let next = std::sync::atomic::AtomicUsize::new(0);
    let results = std::sync::Mutex::new(&mut out);
    std::thread::scope(|s| {
        for _ in 0..st.jobs.min(qs.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= qs.len() {
                    break;
                }
                let r = run_query(&qs[i], env, st, force_comp);
                results
                    .lock()
                    .expect("no worker panics while holding the lock")[i] = Some(r);
            });
        }
    });
    out.into_iter()
        .map(|r| r.expect("every query ran"))
        .collect()
}

fn print_reports(reports: &[CheckReport]) -> Verdict {
    let mut v = Verdict::Holds;
    for (i, r) in reports.iter().enumerate() {
        if i > 0 {
            println!();
        }
        print!("{}", r.render());
        v = v.and(r.verdict);
    }
    v
}

fn run(cli: &Cli) -> Res<Verdict> {
    let st = settings(cli)?;
    let reports = match &cli.cmd {
        Cmd::CheckWf { net } => vec![check_wf(&load_network(net, &st)?.0)],
        Cmd::Explore { net, dot } => {
            let (n, _) = load_network(net, &st)?;
            vec![explore_report(net, &n, &st.bounds, dot.as_deref())?]
        }
        Cmd::Trace { net, trace } => {
            let (n, env) = load_network(net, &st)?;
            vec![trace_report(&n, &env, trace, &st)?]
        }
        Cmd::TimeProps { net, budget } => {
            vec![time_report(&load_network(net, &st)?.0, &st, *budget)?]
        }
        Cmd::Sim { imp, spec } => {
            let (i, _) = load_network(imp, &st)?;
            let (s, _) = load_network(spec, &st)?;
            vec![sim_report(
                &format!("{imp} against {spec}"),
                &i,
                &s,
                &st.bounds,
            )?]
        }
        Cmd::Tgndc {
            query,
            compositional,
        } => {
            let (m, env) = dsl::load(query)?;
            if m.queries.is_empty() {
                return Err(Failure(format!(
                    "{}: no check declarations",
                    query.display()
                )));
            }
            run_queries(&m.queries, &env, &st, *compositional)
                .into_iter()
                .collect::<Res<Vec<_>>>()?
        }
        Cmd::Attack { protocol } => vec![attack_report(protocol, &st)?],
        Cmd::Gaps {
            protocol,
            variant,
            rounds,
        } => {
            let inst = protocols::build(protocol, variant, &st.params)?;
            vec![protocols::gap_suite(&inst, *rounds)?]
        }
        Cmd::ListProtocols => {
            for (p, v, d) in protocols::list() {
                println!("{p:<14} {v:<10} {d}");
            }
            return Ok(Verdict::Holds);
        }
        Cmd::EmitProtocol {
            protocol,
            variant,
            query_for,
            trace,
        } => {
            let inst = protocols::build(protocol, variant, &st.params)?;
            if *trace {
                let t = inst.expected.as_ref().ok_or_else(|| {
                    Failure(format!("{protocol} {variant} has no reference trace"))
                })?;
                print!("{}", dsl::emit_trace(t));
            } else if let Some(path) = query_for {
                print!(
                    "{}",
                    dsl::emit(&dsl::instance_queries(&inst, path, &st.bounds))
                );
            } else {
                print!("{}", dsl::emit(&dsl::instance_model(&inst)));
            }
            return Ok(Verdict::Holds);
        }
    };
    Ok(print_reports(&reports))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE_ERROR } else { 0 });
        }
    };
    match run(&cli) {
        Ok(v) => ExitCode::from(v.exit_code() as u8),
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(USAGE_ERROR)
        }
    }
}
