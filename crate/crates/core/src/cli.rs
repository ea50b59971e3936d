//! The `twinlog` command line.

use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::agents::{AgentError, SolveStrategy, TruckReduction};
use crate::gridworld::MarkerId;
use crate::messaging::http::HttpServer;
use crate::messaging::nameserver::NameserverServer;
use crate::messaging::nds::{self, Nds, NdsClient};
use crate::messaging::ClockMode;
use crate::scenario::Scenario;
use crate::solver::{self, Instance, Mode, Plan, SolverError};
use crate::twin::gateway::{self, Gateway, GatewayConfig, NAMESERVER_NICK};
use crate::twin::{
    fold, load_frames, new_run, run_scenario, save, FrameBody, NetworkConfig, RunConfig,
    RunError, Snapshot, TransportMode,
};
use crate::Alias;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_RUN: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "twinlog", version, about = "Collaborative logistics testbed with a digital twin")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario end to end and print the route table.
    Run(RunArgs),
    /// Plan a scenario without running it.
    Solve(SolveArgs),
    /// Fold a recorded frame log back into its final snapshot.
    Replay(ReplayArgs),
    /// Check a scenario file.
    Validate(ScenarioArg),
    /// Serve the gateway API and stream.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransportArg {
    Local,
    Tcp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClockArg {
    Sim,
    Wall,
}

impl From<ClockArg> for ClockMode {
    fn from(c: ClockArg) -> Self {
        match c {
            ClockArg::Sim => ClockMode::Simulated,
            ClockArg::Wall => ClockMode::WallClock,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArg {
    /// Scenario JSON file; the bundled showcase when omitted.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct StrategyArgs {
    /// Exact search only (fails beyond desk scale).
    #[arg(long, conflicts_with = "heuristic")]
    pub exact: bool,
    /// Construction heuristic plus 2-opt only.
    #[arg(long)]
    pub heuristic: bool,
}

impl StrategyArgs {
    fn strategy(&self) -> SolveStrategy {
        if self.exact {
            SolveStrategy::Exact
        } else if self.heuristic {
            SolveStrategy::Heuristic
        } else {
            SolveStrategy::Auto
        }
    }
}

fn parse_speed(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err("speed must be a finite number ≥ 0".into())
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub scenario: ScenarioArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Ticks per wall-clock second; 0 runs as fast as possible.
    #[arg(long, default_value = "0", value_parser = parse_speed)]
    pub speed: f64,
    /// Also serve the gateway on this address while running.
    #[arg(long)]
    pub serve: Option<SocketAddr>,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
    #[command(flatten)]
    pub strategy: StrategyArgs,
    #[arg(long, value_enum, default_value = "tcp")]
    pub transport: TransportArg,
    #[arg(long, value_enum, default_value = "sim")]
    pub clock: ClockArg,
    #[arg(long, default_value = "runs")]
    pub runs_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub scenario: ScenarioArg,
    #[command(flatten)]
    pub strategy: StrategyArgs,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    /// A frames.ndjson file or the run directory holding it.
    pub log: PathBuf,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub serve: SocketAddr,
    #[arg(long, default_value = "0", value_parser = parse_speed)]
    pub speed: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub strategy: StrategyArgs,
    #[arg(long, value_enum, default_value = "local")]
    pub transport: TransportArg,
    #[arg(long, value_enum, default_value = "sim")]
    pub clock: ClockArg,
    #[arg(long)]
    pub runs_dir: Option<PathBuf>,
    /// Persist NDS entries to this file.
    #[arg(long)]
    pub nds_file: Option<PathBuf>,
}

/// Per-truck row shared by the table and JSON renderings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteRow {
    pub truck: Alias,
    pub before_route: Vec<MarkerId>,
    pub after_route: Vec<MarkerId>,
    pub before_blocks: u32,
    pub after_blocks: u32,
}

impl From<&TruckReduction> for RouteRow {
    fn from(t: &TruckReduction) -> Self {
        RouteRow {
            truck: t.truck.clone(),
            before_route: t.before_route.clone(),
            after_route: t.after_route.clone(),
            before_blocks: t.before_blocks,
            after_blocks: t.after_blocks,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteSummary {
    pub trucks: Vec<RouteRow>,
    pub pre_total: u32,
    pub post_total: u32,
    pub reduction_blocks: i64,
    pub relative_reduction: Option<f64>,
}

impl RouteSummary {
    pub fn from_plans(pre: &Plan, post: &Plan) -> Self {
        let trucks = post
            .tours
            .values()
            .map(|after| {
                let before = pre.tour(&after.truck);
                RouteRow {
                    truck: after.truck.clone(),
                    before_route: before.map(|b| b.route.clone()).unwrap_or_default(),
                    after_route: after.route.clone(),
                    before_blocks: before.map_or(0, |b| b.blocks),
                    after_blocks: after.blocks,
                }
            })
            .collect();
        RouteSummary {
            trucks,
            pre_total: pre.total_blocks,
            post_total: post.total_blocks,
            reduction_blocks: i64::from(pre.total_blocks) - i64::from(post.total_blocks),
            relative_reduction: solver::synergy(pre, post).ok(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummaryOut {
    pub run_id: String,
    pub seed: u64,
    pub ticks: u64,
    pub run_dir: Option<PathBuf>,
    pub milestones: Vec<String>,
    pub failed_stops: Vec<String>,
    #[serde(flatten)]
    pub routes: RouteSummary,
}

pub fn format_route(route: &[MarkerId]) -> String {
    route
        .iter()
        .map(|m| m.0.to_string())
        .collect::<Vec<_>>()
        .join("→")
}

pub fn format_percent(r: Option<f64>) -> String {
    match r {
        Some(r) => format!("{:.1}%", r * 100.0),
        None => "n/a".into(),
    }
}

/// Route table in the layout: truck, route before, route after, reduction.
pub fn render_table(s: &RouteSummary) -> String {
    let header = [
        "Truck".to_owned(),
        "Route before collaboration".to_owned(),
        "Route after collaboration".to_owned(),
        "Distance reduction".to_owned(),
    ];
    let rows: Vec<[String; 4]> = s
        .trucks
        .iter()
        .map(|r| {
            [
                r.truck.to_string(),
                format_route(&r.before_route),
                format_route(&r.after_route),
                format!("from {} to {} blocks", r.before_blocks, r.after_blocks),
            ]
        })
        .collect();
    let mut widths = [0usize; 4];
    for row in std::iter::once(&header).chain(&rows) {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |row: &[String; 4]| {
        let cells: Vec<String> = row
            .iter()
            .zip(widths)
            .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        format!("{}\n", cells.join(" | ").trim_end())
    };
    let mut out = line(&header);
    out.push_str(&format!(
        "{}\n",
        widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("-+-")
    ));
    for row in &rows {
        out.push_str(&line(row));
    }
    out.push_str(&format!(
        "Total: from {} to {} blocks, reduction {} blocks ({})\n",
        s.pre_total,
        s.post_total,
        s.reduction_blocks,
        format_percent(s.relative_reduction)
    ));
    out
}

fn load_scenario(arg: &ScenarioArg) -> Result<Scenario, String> {
    match &arg.scenario {
        Some(p) => Scenario::from_path(p).map_err(|e| e.to_string()),
        None => Ok(crate::scenario::showcase()),
    }
}

fn emit_json<T: Serialize>(out: &mut dyn Write, v: &T) {
    let _ = writeln!(out, "{}", serde_json::to_string_pretty(v).expect("output serialises"));
}

/// Services the networked deployment needs: an NDS and a nameserver that
/// has published itself there.
struct Infra {
    _nds_server: Option<HttpServer>,
    _nameserver: NameserverServer,
    net: NetworkConfig,
}

fn start_infra(nds_url: Option<String>) -> Result<Infra, String> {
    let (nds_server, url) = match nds_url {
        Some(u) => (None, u),
        None => {
            let server = HttpServer::spawn("127.0.0.1:0", nds::router(Arc::new(Nds::in_memory())))
                .map_err(|e| format!("cannot start NDS: {e}"))?;
            let url = server.url();
            (Some(server), url)
        }
    };
    let nameserver =
        NameserverServer::spawn("127.0.0.1:0").map_err(|e| format!("cannot start nameserver: {e}"))?;
    let net = NetworkConfig::new(url.clone());
    nameserver
        .announce(&NdsClient::new(url), &net.nameserver)
        .map_err(|e| e.to_string())?;
    Ok(Infra {
        _nds_server: nds_server,
        _nameserver: nameserver,
        net,
    })
}

fn cmd_run(args: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let scenario = match load_scenario(&args.scenario) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INPUT;
        }
    };
    // 1. gateway (optional) with its embedded NDS
    let nds_store = Arc::new(Nds::in_memory());
    let config = RunConfig {
        strategy: args.strategy.strategy(),
        clock: args.clock.into(),
        speed: args.speed,
        seed: args.seed,
        ..RunConfig::default()
    };
    let gw = Gateway::new(
        GatewayConfig {
            run: config.clone(),
            ..GatewayConfig::default()
        },
        nds_store,
    );
    let server = match args.serve {
        Some(addr) => match HttpServer::spawn(&addr.to_string(), gateway::router(gw.clone())) {
            Ok(s) => {
                let _ = writeln!(err, "gateway listening on {}", s.url());
                Some(s)
            }
            Err(e) => {
                let _ = writeln!(err, "error: cannot serve on {addr}: {e}");
                return EXIT_INPUT;
            }
        },
        None => None,
    };
    // 2-3. NDS and nameserver
    let infra = match args.transport {
        TransportArg::Local => None,
        TransportArg::Tcp => match start_infra(server.as_ref().map(|s| s.url())) {
            Ok(i) => Some(i),
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                return EXIT_RUN;
            }
        },
    };
    let mode = match &infra {
        Some(i) => TransportMode::Tcp(i.net.clone()),
        None => TransportMode::Local,
    };
    // 4-5. agents launch inside run_scenario, trucks last
    let shared = new_run(&scenario, args.seed);
    gw.attach(shared.clone());
    let art = run_scenario(&scenario, &config, &mode, shared);
    let run_dir = match save(&args.runs_dir, &scenario, &art.shared) {
        Ok(d) => Some(d),
        Err(e) => {
            let _ = writeln!(err, "warning: cannot write run logs: {e}");
            None
        }
    };
    drop(server);
    let report = match art.result {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: run failed: {e}");
            return match e {
                RunError::Agent(AgentError::SolverInfeasible(_)) => EXIT_INFEASIBLE,
                _ => EXIT_RUN,
            };
        }
    };
    let record = art.shared.record();
    let milestones = art
        .shared
        .frames
        .all()
        .into_iter()
        .filter_map(|f| match f.body {
            FrameBody::Milestone(m) => Some(format!("[tick {}] {}", f.tick, m.text)),
            _ => None,
        })
        .collect();
    let summary = RunSummaryOut {
        run_id: record.run_id.clone(),
        seed: record.seed,
        ticks: record.ended_tick.unwrap_or(0),
        run_dir,
        milestones,
        failed_stops: report.failed_stops.iter().map(|o| o.to_string()).collect(),
        routes: RouteSummary {
            trucks: report.per_truck.iter().map(RouteRow::from).collect(),
            pre_total: report.pre_total,
            post_total: report.post_total,
            reduction_blocks: report.reduction_blocks,
            relative_reduction: report.relative_reduction,
        },
    };
    match args.format {
        Format::Json => emit_json(out, &summary),
        Format::Table => {
            for m in &summary.milestones {
                let _ = writeln!(out, "{m}");
            }
            let _ = write!(out, "{}", render_table(&summary.routes));
            let _ = writeln!(out, "Run {} completed in {} ticks", summary.run_id, summary.ticks);
            if !summary.failed_stops.is_empty() {
                let _ = writeln!(out, "Failed stops: {}", summary.failed_stops.join(", "));
            }
            if let Some(d) = &summary.run_dir {
                let _ = writeln!(out, "Logs: {}", d.display());
            }
        }
    }
    EXIT_OK
}

fn cmd_solve(args: &SolveArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let scenario = match load_scenario(&args.scenario) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INPUT;
        }
    };
    let strategy = args.strategy.strategy();
    let inst = Instance::from_scenario(&scenario, Mode::Collaborative);
    let plans = strategy
        .solve(&inst.with_mode(Mode::Baseline))
        .and_then(|pre| strategy.solve(&inst).map(|post| (pre, post)));
    let (pre, post) = match plans {
        Ok(p) => p,
        Err(e @ SolverError::Infeasible(_)) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INFEASIBLE;
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INPUT;
        }
    };
    let summary = RouteSummary::from_plans(&pre, &post);
    match args.format {
        Format::Json => emit_json(out, &summary),
        Format::Table => {
            let _ = write!(out, "{}", render_table(&summary));
        }
    }
    EXIT_OK
}

pub fn render_snapshot(s: &Snapshot) -> String {
    let mut out = format!(
        "Status: {:?} at tick {} (seq {}, {} messages, {} deliveries)\n",
        s.status,
        s.tick,
        s.last_seq,
        s.message_count,
        s.deliveries.len()
    );
    for t in s.trucks.values() {
        out.push_str(&format!("{}: {:?} at {}, cargo {}\n", t.truck, t.phase, t.at, t.cargo));
    }
    if let Some(r) = &s.report {
        out.push_str(&render_table(&RouteSummary {
            trucks: r.per_truck.iter().map(RouteRow::from).collect(),
            pre_total: r.pre_total,
            post_total: r.post_total,
            reduction_blocks: r.reduction_blocks,
            relative_reduction: r.relative_reduction,
        }));
    }
    out
}

fn cmd_replay(args: &ReplayArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let frames = match load_frames(&args.log) {
        Ok(f) => f,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INPUT;
        }
    };
    let snap = fold(&frames);
    match args.format {
        Format::Json => emit_json(out, &snap),
        Format::Table => {
            let _ = write!(out, "{}", render_snapshot(&snap));
        }
    }
    EXIT_OK
}

fn cmd_validate(args: &ScenarioArg, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match load_scenario(args) {
        Ok(s) => {
            let f = s.file();
            let _ = writeln!(
                out,
                "ok: {}x{} grid, {} depots, {} trucks, {} customers, digest {}",
                f.grid.width,
                f.grid.height,
                f.depots.len(),
                s.fleet().len(),
                f.customers.len(),
                s.digest()
            );
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INPUT
        }
    }
}

fn cmd_serve(args: &ServeArgs, err: &mut dyn Write) -> i32 {
    let nds_store = match &args.nds_file {
        Some(p) => match Nds::open(p) {
            Ok(n) => n,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                return EXIT_INPUT;
            }
        },
        None => Nds::in_memory(),
    };
    let nds_store = Arc::new(nds_store);
    let run = RunConfig {
        strategy: args.strategy.strategy(),
        clock: args.clock.into(),
        speed: args.speed,
        seed: args.seed,
        ..RunConfig::default()
    };
    let url = format!("http://{}", args.serve);
    // the nameserver needs the NDS up first, which is the gateway itself
    let transport_needs_infra = args.transport == TransportArg::Tcp;
    let mut config = GatewayConfig {
        run,
        runs_dir: args.runs_dir.clone(),
        ..GatewayConfig::default()
    };
    let nameserver = if transport_needs_infra {
        let ns = match NameserverServer::spawn("127.0.0.1:0") {
            Ok(ns) => ns,
            Err(e) => {
                let _ = writeln!(err, "error: cannot start nameserver: {e}");
                return EXIT_RUN;
            }
        };
        let nick = Alias::new(NAMESERVER_NICK).expect("valid alias");
        if let Err(e) = nds_store.put(&nick, &ns.addr().to_string()) {
            let _ = writeln!(err, "error: {e}");
            return EXIT_RUN;
        }
        config.transport = TransportMode::Tcp(NetworkConfig::new(url.clone()));
        Some(ns)
    } else {
        None
    };
    let gw = Gateway::new(config, nds_store);
    let server = match HttpServer::spawn(&args.serve.to_string(), gateway::router(gw)) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: cannot serve on {}: {e}", args.serve);
            return EXIT_INPUT;
        }
    };
    let _ = writeln!(err, "gateway listening on {}", server.url());
    server.wait();
    drop(nameserver);
    EXIT_OK
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = write!(err, "{e}");
            return code;
        }
    };
    match &cli.command {
        Command::Run(a) => cmd_run(a, out, err),
        Command::Solve(a) => cmd_solve(a, out, err),
        Command::Replay(a) => cmd_replay(a, out, err),
        Command::Validate(a) => cmd_validate(a, out, err),
        Command::Serve(a) => cmd_serve(a, err),
    }
}

pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
