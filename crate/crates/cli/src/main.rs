use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use clawpath::filippov::{write_paths_csv, DEFAULT_PATH_SAMPLES};
use clawpath::riemann::{particle_velocity_with, verify_squeeze, SampledRiemann, DEFAULT_SAMPLES};
use clawpath::scenario::{parse_config, presets, run_scenario, Scenario, ScenarioConfig};
use clawpath::FluxSpec;

#[derive(Parser)]
#[command(name = "clawpath", version, about = "Particle paths of scalar conservation laws")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Front-track a scenario and write solution snapshots.
    Solve(ScenarioArgs),
    /// Solve one Riemann problem and print the particle velocity for c.
    Riemann(RiemannArgs),
    /// Trace particle paths of a scenario.
    Trace(ScenarioArgs),
    /// Run the checks of a scenario and write report.json.
    Verify(ScenarioArgs),
    /// List the built-in presets.
    Presets,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file (JSON).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario to run instead of a file.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory; overrides the one in the file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized sweeps.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RiemannArgs {
    /// Flux: burgers, cubic, monomial:p or poly:[a0,a1,...].
    #[arg(long, default_value = "burgers")]
    flux: String,
    #[arg(long, allow_negative_numbers = true)]
    ul: f64,
    #[arg(long, allow_negative_numbers = true)]
    ur: f64,
    #[arg(long, allow_negative_numbers = true)]
    c: f64,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    /// Number of (xi, u) rows in the printed fan.
    #[arg(long, default_value_t = 201)]
    points: usize,
}

impl ScenarioArgs {
    fn load(&self) -> Result<ScenarioConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                parse_config(&text).with_context(|| format!("invalid scenario {}", path.display()))?
            }
            (None, Some(name)) => presets::scenario(name).with_context(|| {
                format!("unknown preset {name:?}; available presets: {}", presets::names().join(", "))
            })?,
            (None, None) => bail!("give --config FILE or --preset NAME"),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output = Some(out.clone());
        }
        Ok(cfg)
    }
}

fn out_dir(cfg: &ScenarioConfig) -> PathBuf {
    cfg.output.clone().unwrap_or_else(|| PathBuf::from("out").join(&cfg.name))
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<fs::File>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn solve(args: &ScenarioArgs) -> Result<ExitCode> {
    let cfg = args.load()?;
    let scenario = Scenario::build(&cfg)?;
    let dir = out_dir(&cfg);
    let mut w = create(&dir, "solution.csv")?;
    scenario.solution.write_snapshot_csv(&cfg.snapshot_times, &mut w)?;
    w.flush()?;
    println!(
        "{}: {} fronts, {} interaction times, wrote {}",
        cfg.name,
        scenario.solution.tracked_fronts().len(),
        scenario.solution.event_times().len(),
        dir.join("solution.csv").display()
    );
    Ok(ExitCode::SUCCESS)
}

fn trace(args: &ScenarioArgs) -> Result<ExitCode> {
    let cfg = args.load()?;
    let scenario = Scenario::build(&cfg)?;
    let paths = scenario.trace_all()?;
    let dir = out_dir(&cfg);
    let mut w = create(&dir, "paths.csv")?;
    write_paths_csv(&paths, DEFAULT_PATH_SAMPLES, &mut w)?;
    w.flush()?;
    let n = scenario.starts().len();
    for (id, p) in paths.iter().enumerate() {
        let c = cfg.c_list[id / n.max(1)];
        println!(
            "path {id}: c = {c}, start ({}, {}) -> x({}) = {:.6}",
            p.start.0,
            p.start.1,
            p.end_time(),
            p.end_position()
        );
    }
    println!("wrote {}", dir.join("paths.csv").display());
    Ok(ExitCode::SUCCESS)
}

fn verify(args: &ScenarioArgs) -> Result<ExitCode> {
    let cfg = args.load()?;
    let dir = out_dir(&cfg);
    let run = run_scenario(&cfg, Some(&dir))?;
    for rec in &run.report.checks {
        let status = if rec.pass { "pass" } else { "FAIL" };
        let note = rec.note.as_deref().map(|n| format!("  ({n})")).unwrap_or_default();
        println!("{status}  {:<15} value {:+.3e}  tolerance {:.1e}{note}", rec.name, rec.value, rec.tolerance);
    }
    println!("wrote {}", dir.join("report.json").display());
    Ok(if run.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn riemann(args: &RiemannArgs) -> Result<ExitCode> {
    let spec: FluxSpec = args.flux.parse()?;
    let lo = args.ul.min(args.ur).min(args.c);
    let hi = args.ul.max(args.ur).max(args.c);
    let (lo, hi) = if lo < hi { (lo, hi) } else { (lo - 1.0, hi + 1.0) };
    let f = spec.build(lo, hi)?;
    let pv = particle_velocity_with(&f, args.ul, args.ur, args.c, args.samples)?;
    let margin = verify_squeeze(&f, &pv)?;
    let solved = SampledRiemann::new(&f, args.ul, args.ur, args.samples, &pv.extra_nodes)?;
    let fan = solved.fan();

    let stdout = io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "# V = {:.15e}", pv.velocity)?;
    writeln!(out, "# case = {:?}, slope = {:?}, squeeze margin = {margin:.3e}", pv.case, pv.slope)?;
    writeln!(out, "xi,u")?;
    let speeds = fan.wave_speeds();
    let (a, b) = match (speeds.first(), speeds.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => (0.0, 0.0),
    };
    let pad = 0.25 * (b - a).max(1.0);
    let n = args.points.max(2);
    for i in 0..n {
        let xi = a - pad + (b - a + 2.0 * pad) * i as f64 / (n - 1) as f64;
        writeln!(out, "{xi:.12e},{:.12e}", fan.evaluate(xi).1)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn list_presets() -> Result<ExitCode> {
    for name in presets::names() {
        let p = presets::initial_data(name).expect("listed presets exist");
        println!("{name:<22} {:<11} {}", p.flux, p.description);
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => solve(a),
        Command::Riemann(a) => riemann(a),
        Command::Trace(a) => trace(a),
        Command::Verify(a) => verify(a),
        Command::Presets => list_presets(),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
