use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use jcc_core::market::auction;
use jcc_core::offload::{partition_with, PartitionMode};
use jcc_core::oracles::{CrossEntropyParams, DEFAULT_EXACT_CAP};
use jcc_core::scenario::{generate, Scenario, ScenarioConfig};
use jcc_core::{LinkConfig, Method, PricingMode};
use jcc_harness::bench::{loglog_slope, run_bench};
use jcc_harness::experiment::{run_experiment, solve, ExperimentSpec, SweepVar};
use jcc_harness::reports::{mean_normalized, occupancy_rows, pick_bidders, probe_rows, user_demand, OffloadMethod};
use jcc_harness::verify::{run_all, Level};
use jcc_harness::{input, write_rows, Format, HarnessError};

/// Threads for parallel sweeps; defaults to all cores.
const THREADS_ENV: &str = "JCC_THREADS";

#[derive(Parser)]
#[command(name = "jcc", version, about = "Edge offloading and admission experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Seed for generated scenarios and randomized methods.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Scenario file; without it a default scenario is generated from --seed.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Output file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Pricing::Definitional)]
    pricing_mode: Pricing,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Include wall-clock runtimes (makes output nondeterministic).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Pricing {
    Definitional,
    Literal,
}

impl From<Pricing> for PricingMode {
    fn from(p: Pricing) -> Self {
        match p {
            Pricing::Definitional => PricingMode::Definitional,
            Pricing::Literal => PricingMode::Literal,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Partitioner {
    Joint,
    Literal,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a scenario and compute every user's demand.
    Gen {
        /// JSON scenario config; missing fields take defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        users: Option<usize>,
        #[arg(long)]
        stations: Option<usize>,
        #[arg(long)]
        clouds: Option<usize>,
        /// Leave demands out of the file.
        #[arg(long)]
        no_demands: bool,
    },
    /// Partition one user's task graph.
    Partition {
        #[arg(long, default_value_t = 0)]
        user: usize,
        /// Subchannels; defaults to the user's demand, else all of them.
        #[arg(long)]
        q: Option<usize>,
        /// VM type index; defaults to the user's demand, else the largest.
        #[arg(long)]
        vm: Option<usize>,
        #[arg(long, value_enum, default_value_t = Partitioner::Joint)]
        mode: Partitioner,
    },
    /// Least-occupancy demand per user.
    Demand {
        #[arg(long)]
        user: Option<usize>,
        #[arg(long, value_enum, default_value_t = OffloadMethod::Ours)]
        method: OffloadMethod,
    },
    /// Greedy admission with critical-value payments.
    Auction,
    /// Solve admission with one method.
    Oracle {
        #[arg(long, default_value = "exact")]
        method: String,
        #[arg(long, default_value_t = DEFAULT_EXACT_CAP)]
        cap: usize,
    },
    /// Sweep methods over generated scenarios.
    Run {
        /// JSON experiment spec; overrides the flags below.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = SweepVar::NUsers)]
        sweep: SweepVar,
        #[arg(long, value_delimiter = ',', default_value = "50,100,200")]
        values: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "greedy,ce,coarse,random")]
        methods: Vec<String>,
        /// Seed list `a,b,c` or half-open range `a..b`.
        #[arg(long, default_value = "0..20")]
        seeds: String,
        #[arg(long)]
        baseline: Option<String>,
    },
    /// Per-user occupancy under each offloading rule, normalized to all-offload.
    Occupancy {
        #[arg(long, value_enum, value_delimiter = ',', default_value = "ours,all-offload,odessa")]
        methods: Vec<OffloadMethod>,
    },
    /// Utility of misreported claims.
    Probe {
        /// Users to probe; default picks --count bidders by seed.
        #[arg(long, value_delimiter = ',')]
        users: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        count: usize,
        #[arg(long, default_value_t = 21)]
        points: usize,
    },
    /// Run the acceptance checks.
    Verify {
        #[arg(long, value_enum, default_value_t = Level::Quick)]
        level: Level,
    },
    /// Time greedy admission against cross-entropy.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "100,400,1000,4000,10000")]
        sizes: Vec<usize>,
        #[arg(long, default_value = "0..3")]
        seeds: String,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        /// Largest size at which cross-entropy is timed.
        #[arg(long, default_value_t = 10_000)]
        ce_max: usize,
    },
}

fn parse_seeds(s: &str) -> Result<Vec<u64>, HarnessError> {
    let num = |x: &str| x.trim().parse::<u64>().map_err(|e| input(format!("bad seed {x:?}: {e}")));
    if let Some((a, b)) = s.split_once("..") {
        Ok((num(a)?..num(b)?).collect())
    } else {
        s.split(',').map(num).collect()
    }
}

fn parse_method(s: &str) -> Result<Method, HarnessError> {
    s.parse().map_err(input)
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>, HarnessError> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(value: &T, out: &Option<PathBuf>) -> Result<(), HarnessError> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| HarnessError::Io(e.into()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn scenario(cli: &Cli) -> Result<Scenario, HarnessError> {
    let mut s = match &cli.scenario {
        Some(p) => Scenario::load(p).map_err(input)?,
        None => generate(&ScenarioConfig { seed: cli.seed, ..ScenarioConfig::default() }).map_err(input)?,
    };
    if s.users.iter().all(|u| u.demand.is_none()) {
        s.compute_demands();
    }
    Ok(s)
}

#[derive(Serialize)]
struct DemandRow {
    user: usize,
    method: &'static str,
    status: &'static str,
    q: Option<usize>,
    s: Option<usize>,
    phi: Option<f64>,
}

#[derive(Serialize)]
struct BidderRow {
    user: usize,
    q: usize,
    s: usize,
    claimed: f64,
    winner: bool,
    payment: f64,
}

fn execute(cli: &Cli) -> Result<(), HarnessError> {
    let mode: PricingMode = cli.pricing_mode.into();
    match &cli.cmd {
        Cmd::Gen { config, users, stations, clouds, no_demands } => {
            let mut c: ScenarioConfig = match config {
                Some(p) => read_json(p)?,
                None => ScenarioConfig::default(),
            };
            c.seed = cli.seed;
            c.n_users = users.unwrap_or(c.n_users);
            c.n_stations = stations.unwrap_or(c.n_stations);
            c.n_clouds = clouds.unwrap_or(c.n_clouds);
            let mut s = generate(&c).map_err(input)?;
            if !no_demands {
                s.compute_demands();
            }
            match &cli.out {
                Some(p) => s.save(p).map_err(|e| HarnessError::Io(io::Error::other(e)))?,
                None => println!("{}", s.to_json()),
            }
        }
        Cmd::Partition { user, q, vm, mode: pm } => {
            let s = scenario(cli)?;
            let u = s.users.get(*user).ok_or_else(|| input(format!("no user {user}")))?;
            let t = s.link_template(*user);
            let cat = s.catalog();
            let q = q.or(u.demand.map(|d| d.q)).unwrap_or(t.station_subchannels);
            let vm_index = vm.or(u.demand.map(|d| d.s)).unwrap_or(cat.len() - 1);
            let vm_hz = cat.capability(vm_index).map_err(input)?;
            let pm = match pm {
                Partitioner::Joint => PartitionMode::Joint,
                Partitioner::Literal => PartitionMode::Literal,
            };
            let plan = partition_with(pm, &u.graph, &u.device, &LinkConfig::with_subchannels(&t, q), vm_hz);
            #[derive(Serialize)]
            struct Out<'a> {
                user: usize,
                q: usize,
                vm_hz: f64,
                meets_deadline: bool,
                plan: &'a jcc_core::PartitionPlan,
            }
            let meets_deadline = plan.meets(u.device.deadline);
            write_json(&Out { user: *user, q, vm_hz, meets_deadline, plan: &plan }, &cli.out)?;
        }
        Cmd::Demand { user, method } => {
            let s = scenario(cli)?;
            let users: Vec<usize> = match user {
                Some(u) if *u < s.users.len() => vec![*u],
                Some(u) => return Err(input(format!("no user {u}"))),
                None => (0..s.users.len()).collect(),
            };
            let rows: Vec<DemandRow> = users
                .into_iter()
                .map(|u| {
                    let o = user_demand(&s, u, *method);
                    let d = o.demand();
                    DemandRow {
                        user: u,
                        method: method.tag(),
                        status: match o {
                            jcc_core::DemandOutcome::Offload(_) => "offload",
                            jcc_core::DemandOutcome::NoOffloadNeeded => "no_offload_needed",
                            jcc_core::DemandOutcome::Infeasible => "infeasible",
                        },
                        q: d.map(|d| d.q),
                        s: d.map(|d| d.s),
                        phi: d.map(|d| d.phi),
                    }
                })
                .collect();
            write_rows(&rows, cli.format, sink(&cli.out)?)?;
        }
        Cmd::Auction => {
            let s = scenario(cli)?;
            let d = s.demand_profiles();
            let r = auction(&d, &s.topology, &s.catalog(), mode).map_err(input)?;
            match cli.format {
                Format::Json => write_json(&r, &cli.out)?,
                Format::Csv => {
                    let rows: Vec<BidderRow> = d
                        .iter()
                        .map(|b| BidderRow {
                            user: b.user,
                            q: b.q,
                            s: b.s,
                            claimed: b.claimed,
                            winner: r.is_winner(b.user),
                            payment: r.payment(b.user),
                        })
                        .collect();
                    write_rows(&rows, Format::Csv, sink(&cli.out)?)?;
                }
            }
        }
        Cmd::Oracle { method, cap } => {
            let s = scenario(cli)?;
            let m = parse_method(method)?;
            let ce = CrossEntropyParams::default();
            let mut r = solve(m, &s.demand_profiles(), &s.topology, &s.catalog(), cli.seed, &ce, *cap).map_err(input)?;
            if !cli.timing {
                r.runtime_s = None;
            }
            write_json(&r, &cli.out)?;
        }
        Cmd::Run { spec, sweep, values, methods, seeds, baseline } => {
            let spec: ExperimentSpec = match spec {
                Some(p) => read_json(p)?,
                None => ExperimentSpec {
                    base: ScenarioConfig::default(),
                    sweep: *sweep,
                    values: values.clone(),
                    methods: methods.iter().map(|m| parse_method(m)).collect::<Result<_, _>>()?,
                    seeds: parse_seeds(seeds)?,
                    baseline: baseline.as_deref().map(parse_method).transpose()?,
                    ce: CrossEntropyParams::default(),
                    exact_cap: DEFAULT_EXACT_CAP,
                },
            };
            let rows = run_experiment(&spec, cli.timing)?;
            write_rows(&rows, cli.format, sink(&cli.out)?)?;
            if let Some(bad) = rows.iter().find(|r| r.status != "ok") {
                return Err(input(format!("cell {} / seed {} failed: {}", bad.sweep_value, bad.seed, bad.status)));
            }
        }
        Cmd::Occupancy { methods } => {
            let s = scenario(cli)?;
            let rows = occupancy_rows(&s, methods);
            write_rows(&rows, cli.format, sink(&cli.out)?)?;
            for (m, mean, n) in mean_normalized(&rows, methods) {
                eprintln!("{}: mean normalized occupancy {mean:.4} over {n} users", m.tag());
            }
        }
        Cmd::Probe { users, count, points } => {
            let s = scenario(cli)?;
            let users = if users.is_empty() { pick_bidders(&s, *count, cli.seed) } else { users.clone() };
            let rows = probe_rows(&s, &users, *points, mode)?;
            write_rows(&rows, cli.format, sink(&cli.out)?)?;
        }
        Cmd::Verify { level } => {
            let reports = run_all(*level);
            let mut w = sink(&cli.out)?;
            for r in &reports {
                writeln!(w, "{r}")?;
            }
            w.flush()?;
            let failed: Vec<&str> = reports.iter().filter(|r| !r.passed()).map(|r| r.id).collect();
            if !failed.is_empty() {
                return Err(HarnessError::Verification(failed.join(", ")));
            }
        }
        Cmd::Bench { sizes, seeds, reps, ce_max } => {
            let rows = run_bench(sizes, &parse_seeds(seeds)?, *reps, &CrossEntropyParams::default(), *ce_max);
            write_rows(&rows, cli.format, sink(&cli.out)?)?;
            let pts: Vec<(f64, f64)> = sizes
                .iter()
                .map(|&n| {
                    let t: Vec<f64> =
                        rows.iter().filter(|r| r.n_users == n && r.method == "greedy").map(|r| r.median_s).collect();
                    (n as f64, jcc_harness::median(&t))
                })
                .collect();
            if pts.len() >= 2 {
                eprintln!("greedy runtime grows as N^{:.2} (N log N would fit slightly above 1)", loglog_slope(&pts));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(n) = std::env::var(THREADS_ENV) {
        match n.parse::<usize>() {
            Ok(n) => {
                rayon::ThreadPoolBuilder::new().num_threads(n).build_global().ok();
            }
            Err(_) => {
                eprintln!("error: {THREADS_ENV} must be a thread count, got {n:?}");
                return ExitCode::from(2);
            }
        }
    }
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
