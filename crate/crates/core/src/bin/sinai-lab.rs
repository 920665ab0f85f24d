use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use sinai_lab::environment::{DistributionSpec, Environment, Window};
use sinai_lab::experiments::{annealed_frequencies, run_campaign, CampaignConfig, Mode, Params, Report};
use sinai_lab::landscape::{landscape_svg, potential, potential_csv, stable_landscape, SvgOptions, TimeScale};
use sinai_lab::walker::{advance, Trajectory, WalkState};
use sinai_lab::{Error, Result};

#[derive(Parser, Serialize)]
#[command(name = "sinai-lab", version, about = "Random walks in random environment in Sinai's regime")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "lowercase")]
enum Command {
    /// Sample an environment and write it as JSON (or its potential as CSV).
    Generate(GenerateArgs),
    /// Stable points, peaks, wells and landmarks of an environment's potential.
    Landscape(LandscapeArgs),
    /// Walks on an environment up to time t or until a target is hit.
    Simulate(SimulateArgs),
    /// Run the verification campaign for one claim, or all of them.
    Verify(VerifyArgs),
    /// Frequencies of the Γ-sets over many environments.
    Annealed(AnnealedArgs),
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum FamilyArg {
    TwoPoint,
    LogUniform,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ModeArg {
    Surrogate,
    Coupled,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Surrogate => Mode::Surrogate,
            ModeArg::Coupled => Mode::Coupled,
        }
    }
}

#[derive(Args, Serialize)]
struct EnvSource {
    /// Environment file written by `generate`.
    #[arg(long)]
    env: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value = "two-point")]
    family: FamilyArg,
    /// Parameter `c` of the site law.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Sample on `[-R, R]` when no file is given.
    #[arg(long, default_value_t = 1000)]
    half_width: i64,
}

impl EnvSource {
    fn spec(&self) -> Result<DistributionSpec> {
        match self.family {
            FamilyArg::TwoPoint => DistributionSpec::two_point(self.c),
            FamilyArg::LogUniform => DistributionSpec::log_uniform(self.c),
        }
    }

    fn load(&self) -> Result<Environment> {
        match &self.env {
            Some(path) => Environment::from_json(&fs::read_to_string(path)?),
            None => Ok(Environment::sample(&self.spec()?, self.seed, Window::symmetric(self.half_width))),
        }
    }
}

#[derive(Args, Serialize)]
struct Output {
    /// Directory for output files; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args, Serialize)]
struct GenerateArgs {
    #[command(flatten)]
    source: EnvSource,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Serialize)]
struct LandscapeArgs {
    #[command(flatten)]
    source: EnvSource,
    /// Time scale: `e10`, `e^10` or a plain value of t.
    #[arg(long, value_parser = parse_log_t)]
    t: f64,
    /// Shade `N(m±)` with radius ε log t in the SVG.
    #[arg(long)]
    eps: Option<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Serialize)]
struct SimulateArgs {
    #[command(flatten)]
    source: EnvSource,
    #[arg(long, value_parser = parse_log_t)]
    t: f64,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    start: i64,
    /// Stop a walk at the first visit to any of these sites.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    targets: Vec<i64>,
    #[arg(long, default_value_t = 1)]
    trials: u64,
    /// Seed of the walks; the environment seed when absent.
    #[arg(long)]
    walk_seed: Option<u64>,
    /// Transitions kept for the CSV trajectory of the first walk.
    #[arg(long, default_value_t = 100_000)]
    keep: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Serialize)]
struct ParamArgs {
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    #[arg(long = "M", default_value_t = 3.0)]
    m: f64,
    #[arg(long, default_value_t = 1.0)]
    kappa_hat: f64,
    #[arg(long, value_enum, default_value = "surrogate")]
    mode: ModeArg,
}

impl ParamArgs {
    fn params(&self) -> Params {
        Params { eps: self.eps, delta: self.delta, m: self.m, kappa_hat: self.kappa_hat, mode: self.mode.into() }
    }
}

#[derive(Args, Serialize)]
struct VerifyArgs {
    /// ruin, gamma, events, localization, lemma1 to lemma4, scaling,
    /// annealed, corollary or all.
    claim: String,
    /// Repeat the run recorded in a report (its embedded configuration).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated time scales.
    #[arg(long, value_delimiter = ',', value_parser = parse_log_t)]
    t: Vec<f64>,
    #[command(flatten)]
    params: ParamArgs,
    /// Walks per environment and time scale.
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    lemma_trials: Option<u64>,
    #[arg(long)]
    members: Option<usize>,
    #[arg(long)]
    envs: Option<usize>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Serialize)]
struct AnnealedArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_delimiter = ',', value_parser = parse_log_t, default_value = "e8,e10,e12")]
    t: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.1,0.05")]
    eps: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    #[arg(long = "M", default_value_t = 3.0)]
    m: f64,
    #[arg(long, default_value_t = 200)]
    envs: usize,
    #[arg(long, value_enum, default_value = "two-point")]
    family: FamilyArg,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[command(flatten)]
    output: Output,
}

/// `e10` and `e^10` give log t = 10; anything else is t itself.
fn parse_log_t(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    let log_t = if let Some(rest) = s.strip_prefix("e^").or_else(|| s.strip_prefix('e')) {
        rest.parse::<f64>().map_err(|e| format!("bad exponent in {s:?}: {e}"))?
    } else {
        let t: f64 = s.parse().map_err(|e| format!("bad time {s:?}: {e}"))?;
        if !(t > 0.0) {
            return Err(format!("time must be positive, got {t}"));
        }
        t.ln()
    };
    if !log_t.is_finite() {
        return Err(format!("time {s:?} is not finite"));
    }
    Ok(log_t)
}

fn provenance(invocation: &Value) -> Value {
    json!({ "tool": "sinai-lab", "version": env!("CARGO_PKG_VERSION"), "invocation": invocation })
}

fn timestamp() -> String {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    format!("{secs}")
}

fn emit(output: &Output, name: &str, body: &str) -> Result<()> {
    match &output.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let path = dir.join(name);
            fs::write(&path, body)?;
            eprintln!("wrote {}", path.display());
        }
        None => match std::io::stdout().lock().write_all(body.as_bytes()) {
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
            r => r?,
        },
    }
    Ok(())
}

fn pretty<T: Serialize>(x: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(x)?;
    s.push('\n');
    Ok(s)
}

fn generate(args: &GenerateArgs) -> Result<bool> {
    let env = args.source.load()?;
    match args.output.format {
        Format::Csv => emit(&args.output, "potential.csv", &potential_csv(&env))?,
        Format::Json => emit(&args.output, "environment.json", &(env.to_json()? + "\n"))?,
        Format::Svg => {
            let svg = landscape_svg(&potential(&env), None, &SvgOptions::default());
            emit(&args.output, "potential.svg", &svg)?
        }
    }
    Ok(env.validate().is_valid())
}

fn landscape(args: &LandscapeArgs, invocation: &Value) -> Result<bool> {
    let env = args.source.load()?;
    let t = TimeScale::from_log(args.t)?;
    let f = potential(&env);
    let ls = stable_landscape(&f, t)?;
    match args.output.format {
        Format::Json => {
            let body = json!({ "provenance": provenance(invocation), "window": env.window(), "landscape": ls });
            emit(&args.output, "landscape.json", &pretty(&body)?)?;
        }
        Format::Svg => {
            let opts = SvgOptions {
                title: Some(format!("log t = {}", args.t)),
                neighborhood_radius: args.eps.map(|e| e * args.t),
                ..SvgOptions::default()
            };
            emit(&args.output, "landscape.svg", &landscape_svg(&f, Some(&ls), &opts))?;
        }
        Format::Csv => {
            let mut s = String::from("kind,position,value\n");
            for &x in &ls.stable_points {
                s.push_str(&format!("stable,{x},{}\n", f.at(x).unwrap_or(f64::NAN)));
            }
            for &x in &ls.peaks {
                s.push_str(&format!("peak,{x},{}\n", f.at(x).unwrap_or(f64::NAN)));
            }
            emit(&args.output, "landscape.csv", &s)?;
        }
    }
    Ok(true)
}

#[derive(Serialize)]
struct WalkOutcome {
    trial: u64,
    final_time: f64,
    final_position: i64,
    /// First target reached, if any.
    target: Option<i64>,
}

fn simulate(args: &SimulateArgs, invocation: &Value) -> Result<bool> {
    let env = args.source.load()?;
    let horizon = TimeScale::from_log(args.t)?.t();
    let seed = args.walk_seed.unwrap_or(env.seed());
    let mut outcomes = Vec::new();
    let mut trajectory = Trajectory::new(args.keep);
    trajectory.push(0.0, args.start);
    for i in 0..args.trials {
        let mut state = WalkState::for_trial(seed, i, args.start);
        let mut target = None;
        advance(&env, &mut state, horizon, |time, x| {
            if i == 0 {
                trajectory.push(time, x);
            }
            if args.targets.contains(&x) {
                target = Some(x);
                return true;
            }
            false
        })?;
        outcomes.push(WalkOutcome { trial: i, final_time: state.clock, final_position: state.position, target });
    }
    match args.output.format {
        Format::Csv => emit(&args.output, "trajectory.csv", &trajectory.to_csv())?,
        _ => {
            let body = json!({ "provenance": provenance(invocation), "horizon": horizon, "walks": outcomes });
            emit(&args.output, "simulation.json", &pretty(&body)?)?;
        }
    }
    Ok(true)
}

fn verify(args: &VerifyArgs, invocation: &Value) -> Result<bool> {
    let (config, claim) = match &args.config {
        Some(path) => {
            let report: Report = serde_json::from_str(&fs::read_to_string(path)?)?;
            (report.provenance.config, report.provenance.claim)
        }
        None => {
            let mut c = CampaignConfig { params: args.params.params(), ..CampaignConfig::default() };
            if let Some(seed) = args.seed {
                c.seed = seed;
            }
            if !args.t.is_empty() {
                c.log_t = args.t.clone();
                c.corollary_log_t = args.t[0];
            }
            if let Some(n) = args.trials {
                c.localization_trials = n;
                c.event_trials = n;
            }
            if let Some(n) = args.lemma_trials {
                c.lemma_trials = n;
            }
            if let Some(n) = args.members {
                c.members = n;
            }
            if let Some(n) = args.envs {
                c.annealed_envs = n;
                c.corollary_envs = n;
            }
            (c, args.claim.clone())
        }
    };
    let mut report = run_campaign(&config, &claim)?;
    report.provenance.invocation = Some(invocation.clone());
    report.generated_at = Some(timestamp());
    for line in report.verdict_lines() {
        eprintln!("{line}");
    }
    emit(&args.output, "report.json", &pretty(&report)?)?;
    Ok(report.pass)
}

fn annealed(args: &AnnealedArgs, invocation: &Value) -> Result<bool> {
    let spec = match args.family {
        FamilyArg::TwoPoint => DistributionSpec::two_point(args.c)?,
        FamilyArg::LogUniform => DistributionSpec::log_uniform(args.c)?,
    };
    let eps0 = args.eps.iter().copied().fold(f64::INFINITY, f64::min);
    let params = Params { eps: eps0, delta: args.delta, m: args.m, ..Params::default() };
    let table = annealed_frequencies(&spec, &args.t, &args.eps, args.envs, args.seed, &params)?;
    match args.output.format {
        Format::Csv => emit(&args.output, "annealed.csv", &table.to_csv())?,
        _ => {
            let body = json!({ "provenance": provenance(invocation), "table": table });
            emit(&args.output, "annealed.json", &pretty(&body)?)?;
        }
    }
    for tr in &table.trends {
        eprintln!("{} {}: {}", if tr.holds { "holds" } else { "FAILS" }, tr.name, tr.detail);
    }
    Ok(table.trends.iter().all(|t| t.holds))
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("SINAI_LAB_THREADS") {
        let n: usize = v.parse().map_err(|_| Error::InvalidArgument(format!("SINAI_LAB_THREADS={v:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<bool> {
    configure_threads()?;
    let invocation = serde_json::to_value(cli)?;
    match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Landscape(a) => landscape(a, &invocation),
        Command::Simulate(a) => simulate(a, &invocation),
        Command::Verify(a) => verify(a, &invocation),
        Command::Annealed(a) => annealed(a, &invocation),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
