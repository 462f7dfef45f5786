//! Command-line front end: synthesis runs from TOML configs, closed-loop
//! simulation of saved controllers, a side-by-side comparison against the
//! grid-abstraction baseline, and small automaton / finite-system tools.
//!
//! Exit codes: 0 success or PASS verdict, 1 acceptance-condition FAIL,
//! 2 validation error, 3 I/O error, 4 start state outside the winning set,
//! 5 abstraction memory cap exceeded.

mod config;

use std::fs;
use std::io::{BufReader, BufWriter, Write as _};
use std::path::{Path, PathBuf};
use std::process;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::RunConfig;
use winset::automaton::{parse_dba, parse_nba, render, trim_nba, Dba};
use winset::controller::{self, check_buchi, Controller, DisturbanceMode};
use winset::oracle::{abstract_and_solve, finite_buchi, FiniteTS};
use winset::synthesis::{
    export_winning_csv, render_stats, synthesize, SynthesisOptions, WinningVector,
};
use winset::system::{sample_controls, SystemSpec};
use winset::Error;

#[derive(Parser)]
#[command(
    name = "winset",
    version,
    about = "Winning-set controller synthesis for sampled nonlinear systems"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Synthesize a controller and write artifacts to the output directory
    Synth(SynthArgs),
    /// Run a saved controller in closed loop and check its acceptance condition
    Simulate(SimulateArgs),
    /// Run the paver engine and the grid-abstraction baseline side by side
    Compare(CompareArgs),
    /// Parse an automaton file and check determinism and totality
    ValidateDba { path: PathBuf },
    /// Prune a nondeterministic automaton to an equivalent deterministic one
    TrimNba {
        path: PathBuf,
        /// Write the result here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a finite transition system against an automaton
    Oracle(OracleArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    config: PathBuf,
    /// Override the config's state-space resolution
    #[arg(long)]
    eps: Option<f64>,
    /// Override the config's control-grid pitch
    #[arg(long)]
    mu: Option<f64>,
    /// Override the config's preprocess flag
    #[arg(long)]
    preprocess: Option<bool>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Seed stored in the controller for later simulation
    #[arg(long)]
    seed: Option<u64>,
    /// Automaton file overriding the config's path
    #[arg(long)]
    automaton: Option<PathBuf>,
    /// Classify sequentially even when compiled with the parallel feature
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// Controller container written by synth
    controller: PathBuf,
    /// Comma-separated start state, e.g. "0.15" or "4.0,5.0,0.0"
    #[arg(long)]
    x0: String,
    #[arg(long)]
    steps: usize,
    #[arg(long, value_enum, default_value_t = Mode::None)]
    mode: Mode,
    /// Override the seed stored in the controller
    #[arg(long)]
    seed: Option<u64>,
    /// Trajectory CSV path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Accepting visits required for a PASS verdict
    #[arg(long, default_value_t = 1)]
    min_visits: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    /// No disturbance
    None,
    /// Adversarial corner of the disturbance box
    Worst,
    /// Uniform in the disturbance box
    Random,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    config: PathBuf,
    /// Successor-record cap; the baseline reports N/A beyond it
    #[arg(long, default_value_t = 50_000_000)]
    cap: usize,
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct OracleArgs {
    /// Finite transition system file (state/trans lines)
    #[arg(long)]
    ts: PathBuf,
    #[arg(long)]
    dba: PathBuf,
}

struct Fail {
    code: u8,
    msg: String,
}

fn code_of(e: &Error) -> u8 {
    match e {
        Error::Io(_) => 3,
        Error::OutOfWinningSet { .. } => 4,
        Error::MemoryCap { .. } => 5,
        _ => 2,
    }
}

/// Tag an engine error with the stage it came from.
fn stage(name: &'static str) -> impl Fn(Error) -> Fail {
    move |e| Fail {
        code: code_of(&e),
        msg: format!("{name}: {e}"),
    }
}

fn io_fail(what: &str, path: &Path, e: std::io::Error) -> Fail {
    Fail {
        code: 3,
        msg: format!("{what} {}: {e}", path.display()),
    }
}

fn read(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| io_fail("reading", path, e))
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => process::exit(code as i32),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            process::exit(f.code as i32);
        }
    }
}

fn run(cli: Cli) -> Result<u8, Fail> {
    match cli.cmd {
        Cmd::Synth(a) => cmd_synth(a),
        Cmd::Simulate(a) => cmd_simulate(a),
        Cmd::Compare(a) => cmd_compare(a),
        Cmd::ValidateDba { path } => cmd_validate_dba(&path),
        Cmd::TrimNba { path, out } => cmd_trim_nba(&path, out.as_deref()),
        Cmd::Oracle(a) => cmd_oracle(a),
    }
}

fn load_problem(cfg: &RunConfig, config_path: &Path) -> Result<(SystemSpec, Dba), Fail> {
    let spec = cfg.build_spec().map_err(stage("system"))?;
    let aut_path = cfg.automaton_path(config_path);
    let dba = parse_dba(&read(&aut_path)?).map_err(stage("automaton"))?;
    Ok((spec, dba))
}

fn initial_coverage(vector: &WinningVector, dba: &Dba, spec: &SystemSpec) -> f64 {
    let vol = vector
        .paver_of_state(dba.initial)
        .map(|p| p.winning_volume())
        .unwrap_or(0.0);
    100.0 * vol / spec.state_space.volume()
}

fn cmd_synth(a: SynthArgs) -> Result<u8, Fail> {
    let mut cfg = RunConfig::parse(&read(&a.config)?).map_err(stage("config"))?;
    if let Some(v) = a.eps {
        cfg.run.eps = v;
    }
    if let Some(v) = a.mu {
        cfg.run.mu = v;
    }
    if let Some(v) = a.preprocess {
        cfg.run.preprocess = v;
    }
    if let Some(v) = a.out_dir {
        cfg.run.out_dir = v;
    }
    if let Some(v) = a.seed {
        cfg.run.seed = v;
    }
    if let Some(v) = a.automaton {
        cfg.run.automaton = v;
    }

    let (spec, dba) = load_problem(&cfg, &a.config)?;
    let options = SynthesisOptions {
        preprocess: cfg.run.preprocess,
        parallel: !a.sequential && SynthesisOptions::default().parallel,
    };
    let (vector, stats) = synthesize(&dba, &spec, cfg.run.eps, cfg.run.mu, &options)
        .map_err(stage("synthesis"))?;
    let coverage = initial_coverage(&vector, &dba, &spec);

    let out = &cfg.run.out_dir;
    fs::create_dir_all(out).map_err(|e| io_fail("creating", out, e))?;
    let grid = sample_controls(&spec, cfg.run.mu).map_err(stage("system"))?;
    let ctl = Controller {
        dba,
        vector,
        grid,
        spec,
        rng_seed: cfg.run.seed,
    };

    let ctl_path = out.join("controller.wsct");
    {
        let file = fs::File::create(&ctl_path).map_err(|e| io_fail("creating", &ctl_path, e))?;
        let mut w = BufWriter::new(file);
        controller::save(&ctl, &mut w).map_err(stage("controller"))?;
        w.flush().map_err(|e| io_fail("writing", &ctl_path, e))?;
    }

    let csv_path = out.join("winning.csv");
    {
        let file = fs::File::create(&csv_path).map_err(|e| io_fail("creating", &csv_path, e))?;
        let mut w = BufWriter::new(file);
        export_winning_csv(&ctl.vector, &mut w).map_err(|e| io_fail("writing", &csv_path, e))?;
        w.flush().map_err(|e| io_fail("writing", &csv_path, e))?;
    }

    let stats_path = out.join("stats.txt");
    fs::write(&stats_path, render_stats(&stats, coverage))
        .map_err(|e| io_fail("writing", &stats_path, e))?;

    println!("coverage = {coverage:.6} % of the state space");
    println!("robustness margin = {}", stats.robustness_margin);
    println!(
        "peak memory, model estimate = {} bytes (paver trees + control grid)",
        stats.model_bytes
    );
    println!(
        "peak memory, observed = {}",
        vm_hwm().unwrap_or_else(|| "unavailable".into())
    );
    for p in [&ctl_path, &csv_path, &stats_path] {
        println!("wrote {}", p.display());
    }
    Ok(0)
}

fn parse_x0(s: &str) -> Result<Vec<f64>, Fail> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>().map_err(|e| Fail {
                code: 2,
                msg: format!("x0: `{t}`: {e}"),
            })
        })
        .collect()
}

fn cmd_simulate(a: SimulateArgs) -> Result<u8, Fail> {
    let file = fs::File::open(&a.controller).map_err(|e| io_fail("opening", &a.controller, e))?;
    let mut ctl = controller::load(&mut BufReader::new(file)).map_err(stage("controller"))?;
    if let Some(s) = a.seed {
        ctl.rng_seed = s;
    }
    let x0 = parse_x0(&a.x0)?;
    let mode = match a.mode {
        Mode::None => DisturbanceMode::None,
        Mode::Worst => DisturbanceMode::WorstSample,
        Mode::Random => DisturbanceMode::Random,
    };
    let traj = ctl
        .simulate(&x0, a.steps, mode)
        .map_err(stage("simulation"))?;

    if let Some(out) = &a.out {
        let file = fs::File::create(out).map_err(|e| io_fail("creating", out, e))?;
        let mut w = BufWriter::new(file);
        controller::export_trajectory_csv(&traj, &mut w)
            .map_err(|e| io_fail("writing", out, e))?;
        w.flush().map_err(|e| io_fail("writing", out, e))?;
        println!("wrote {}", out.display());
    }

    let visits = traj
        .automaton_states
        .iter()
        .filter(|q| ctl.dba.accepting.contains(q))
        .count();
    let pass = check_buchi(&traj, &ctl.dba.accepting, a.min_visits);
    if traj.left_winning_set {
        println!("note: stopped early, the next disturbed step could have left the winning set");
    }
    println!("steps taken = {}", traj.controls.len());
    println!("accepting visits = {visits} (required {})", a.min_visits);
    println!("verdict = {}", if pass { "PASS" } else { "FAIL" });
    Ok(if pass { 0 } else { 1 })
}

fn cmd_compare(a: CompareArgs) -> Result<u8, Fail> {
    let cfg = RunConfig::parse(&read(&a.config)?).map_err(stage("config"))?;
    let (spec, dba) = load_problem(&cfg, &a.config)?;
    let (eps, mu) = (cfg.run.eps, cfg.run.mu);

    let options = SynthesisOptions {
        preprocess: cfg.run.preprocess,
        parallel: !a.sequential && SynthesisOptions::default().parallel,
    };
    let (vector, stats) =
        synthesize(&dba, &spec, eps, mu, &options).map_err(stage("synthesis"))?;
    let paver_cov = initial_coverage(&vector, &dba, &spec);
    let paver_inner: Vec<String> = stats.inner_iterations.iter().map(|i| i.to_string()).collect();

    let started = Instant::now();
    let baseline = abstract_and_solve(&spec, &dba, eps, mu, Some(a.cap));
    let abs_wall = started.elapsed();

    println!(
        "{:<12} {:>12} {:>9} {:>14} {:>26}  iterations",
        "engine", "coverage_%", "wall_s", "model_bytes", "structure"
    );
    println!(
        "{:<12} {:>12.6} {:>9.3} {:>14} {:>26}  outer={} inner={}",
        "paver",
        paver_cov,
        stats.wall.as_secs_f64(),
        stats.model_bytes,
        format!("{} tree nodes", stats.peak_nodes),
        stats.outer_iterations,
        paver_inner.join(",")
    );
    match baseline {
        Ok((abs, win, _strategy, fstats)) => {
            let cell_vol: f64 = abs.sides.iter().product();
            let abs_cov =
                100.0 * win[dba.initial].len() as f64 * cell_vol / spec.state_space.volume();
            // Declared model: 8 B per successor record, 16 B per cell for
            // the adjacency headers.
            let abs_bytes = abs.stats.n_records * 8 + abs.stats.n_cells * 16;
            let abs_inner: Vec<String> =
                fstats.inner_iterations.iter().map(|i| i.to_string()).collect();
            println!(
                "{:<12} {:>12.6} {:>9.3} {:>14} {:>26}  outer={} inner={}",
                "abstraction",
                abs_cov,
                abs_wall.as_secs_f64(),
                abs_bytes,
                format!("{} successor records", abs.stats.n_records),
                fstats.outer_iterations,
                abs_inner.join(",")
            );
        }
        Err(e @ Error::MemoryCap { .. }) => {
            println!(
                "{:<12} {:>12} {:>9.3} {:>14} {:>26}  cap {} hit",
                "abstraction",
                "N/A",
                abs_wall.as_secs_f64(),
                "N/A",
                "N/A",
                a.cap
            );
            eprintln!("note: baseline aborted: {e}");
        }
        Err(e) => return Err(stage("abstraction")(e)),
    }
    println!(
        "peak memory, observed (both engines) = {}",
        vm_hwm().unwrap_or_else(|| "unavailable".into())
    );
    Ok(0)
}

fn cmd_validate_dba(path: &Path) -> Result<u8, Fail> {
    let dba = parse_dba(&read(path)?).map_err(stage("automaton"))?;
    let accepting: Vec<String> = dba.accepting.iter().map(|q| format!("q{q}")).collect();
    println!(
        "ok: {} states, {} propositions, initial q{}, accepting {}",
        dba.n_states,
        dba.aps.len(),
        dba.initial,
        accepting.join(" ")
    );
    Ok(0)
}

fn cmd_trim_nba(path: &Path, out: Option<&Path>) -> Result<u8, Fail> {
    let nba = parse_nba(&read(path)?).map_err(stage("automaton"))?;
    let dba = trim_nba(&nba).map_err(stage("automaton"))?;
    let text = render(&dba);
    match out {
        Some(p) => {
            fs::write(p, text).map_err(|e| io_fail("writing", p, e))?;
            println!("wrote {}", p.display());
        }
        None => print!("{text}"),
    }
    Ok(0)
}

fn cmd_oracle(a: OracleArgs) -> Result<u8, Fail> {
    let ts = FiniteTS::parse(&read(&a.ts)?).map_err(stage("oracle"))?;
    let dba = parse_dba(&read(&a.dba)?).map_err(stage("automaton"))?;
    let (win, _strategy, fstats) = finite_buchi(&ts, &dba).map_err(stage("oracle"))?;
    for (q, states) in win.iter().enumerate() {
        let names: Vec<&str> = states.iter().map(|&s| ts.states[s].as_str()).collect();
        println!(
            "q{q}: {}",
            if names.is_empty() {
                "(empty)".to_string()
            } else {
                names.join(" ")
            }
        );
    }
    let inner: Vec<String> = fstats.inner_iterations.iter().map(|i| i.to_string()).collect();
    println!("outer iterations = {}", fstats.outer_iterations);
    println!("inner iterations = {}", inner.join(" "));
    Ok(0)
}

fn vm_hwm() -> Option<String> {
    let status = fs::read_to_string("/proc/self/status").ok()?;
    status
        .lines()
        .find(|l| l.starts_with("VmHWM:"))
        .map(|l| format!("VmHWM {}", l.trim_start_matches("VmHWM:").trim()))
}
