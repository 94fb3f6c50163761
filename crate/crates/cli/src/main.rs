//! `lyap`: run Lyapunov-exponent estimators and spanning verifiers from
//! TOML configs.
//!
//! Exit status: 0 on success, 1 on a computation error (artifacts written so
//! far are kept, plus a `FAILED` marker), 2 on a usage or config error.

mod artifacts;
mod catalog;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lyap_core::config::{Command, ConfigError, DistinctnessSection, ModelSpec, OutputSection, RunConfig};
use lyap_core::rational::parse_rational;
use lyap_core::spanning::triple_count;

use artifacts::OutDir;
use commands::Failure;

#[derive(Parser)]
#[command(name = "lyap", version, about = "Lyapunov exponents and spanning checks for bilinear SDEs")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run whatever command the config names.
    Run(RunArgs),
    /// Integrate the SDE and write the trajectory and energy budget.
    Simulate(RunArgs),
    /// QR Lyapunov spectrum across seeds.
    Spectrum(RunArgs),
    /// lambda_1 / eps over a decreasing list of eps.
    Sweep(RunArgs),
    /// Moment Lyapunov exponents Lambda(p).
    Moment(RunArgs),
    /// Closed-form Gaussian Fisher information against eps tr A.
    FisherCheck(RunArgs),
    /// H^k family and its exact Lie closure.
    VerifyHk(RunArgs),
    /// Exhaustive distinctness scan for Galerkin Navier-Stokes.
    VerifyDistinctness(RunArgs),
    /// Forcing propagation Z^n.
    VerifyZn(RunArgs),
    /// Shear lower bound on the conservative flow.
    ShearCheck(RunArgs),
    /// List bundled example configs, or print one.
    ListExamples {
        /// Print this example's TOML.
        #[arg(long)]
        show: Option<String>,
    },
    /// Print a gnuplot script describing the columns of a CSV artifact.
    Gnuplot {
        csv: PathBuf,
    },
}

#[derive(Args, Default)]
struct RunArgs {
    /// TOML config file.
    #[arg(long, conflicts_with = "example")]
    config: Option<PathBuf>,
    /// Bundled example config (see list-examples).
    #[arg(long)]
    example: Option<String>,
    /// Base seed; run i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Damping strength; a comma list for sweeps.
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    /// Galerkin truncation.
    #[arg(long = "N")]
    truncation: Option<usize>,
    /// Aspect ratio as "p" or "p/q".
    #[arg(long)]
    r: Option<String>,
    /// Horizon T, burn-in included.
    #[arg(long = "T")]
    horizon: Option<f64>,
    /// Time step.
    #[arg(long)]
    dt: Option<f64>,
    /// Allow distinctness scans with N > 8.
    #[arg(long)]
    allow_large: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            eprintln!("error: cannot size worker pool: {e}");
            return ExitCode::from(2);
        }
    }
    let (forced, args) = match cli.command {
        Cmd::ListExamples { show } => return list_examples(show.as_deref()),
        Cmd::Gnuplot { csv } => return gnuplot(&csv),
        Cmd::Run(a) => (None, a),
        Cmd::Simulate(a) => (Some(Command::Simulate), a),
        Cmd::Spectrum(a) => (Some(Command::Spectrum), a),
        Cmd::Sweep(a) => (Some(Command::Sweep), a),
        Cmd::Moment(a) => (Some(Command::Moment), a),
        Cmd::FisherCheck(a) => (Some(Command::FisherCheck), a),
        Cmd::VerifyHk(a) => (Some(Command::VerifyHk), a),
        Cmd::VerifyDistinctness(a) => (Some(Command::VerifyDistinctness), a),
        Cmd::VerifyZn(a) => (Some(Command::VerifyZn), a),
        Cmd::ShearCheck(a) => (Some(Command::ShearCheck), a),
    };
    let cfg = match load(forced, &args) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    if let Some(sec) = &cfg.distinctness {
        if cfg.command == Command::VerifyDistinctness && sec.truncation > 8 && !args.allow_large {
            eprintln!("{}", cost_estimate(sec.truncation));
            eprintln!("error: N > 8 needs --allow-large");
            return ExitCode::from(2);
        }
    }
    run(&cfg)
}

fn load(forced: Option<Command>, args: &RunArgs) -> Result<RunConfig, String> {
    let text = if let Some(path) = &args.config {
        Some(std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?)
    } else if let Some(name) = &args.example {
        Some(
            catalog::find(name)
                .ok_or_else(|| format!("no bundled example `{name}` (see list-examples)"))?
                .text
                .to_string(),
        )
    } else {
        None
    };
    let mut cfg = match text {
        Some(t) => {
            let mut cfg: RunConfig = toml::from_str(&t).map_err(|e| e.to_string())?;
            if let Some(c) = forced {
                cfg.command = c;
            }
            cfg
        }
        None => match forced {
            Some(Command::VerifyDistinctness) => RunConfig {
                command: Command::VerifyDistinctness,
                seed: 0,
                model: None,
                integrator: None,
                spectrum: None,
                sweep: None,
                moment: None,
                shear: None,
                closure: None,
                distinctness: None,
                output: OutputSection::default(),
            },
            _ => return Err("a config is required: pass --config FILE or --example NAME".into()),
        },
    };
    apply_overrides(&mut cfg, args).map_err(|e| e.to_string())?;
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn apply_overrides(cfg: &mut RunConfig, args: &RunArgs) -> Result<(), ConfigError> {
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = &args.out {
        cfg.output.dir = o.display().to_string();
    }
    let r = match &args.r {
        Some(s) => Some(parse_rational(s).map_err(|e| ConfigError::Invalid(e.to_string()))?),
        None => None,
    };
    if cfg.command == Command::VerifyDistinctness {
        if args.truncation.is_some() || r.is_some() || cfg.distinctness.is_none() {
            let cur = cfg.distinctness.take();
            let truncation = args
                .truncation
                .or(cur.as_ref().map(|c| c.truncation))
                .ok_or_else(|| ConfigError::Invalid("verify-distinctness needs --N".into()))?;
            let r = r
                .clone()
                .or(cur.as_ref().map(|c| c.r.clone()))
                .unwrap_or_else(|| lyap_core::rational::int(1));
            cfg.distinctness = Some(DistinctnessSection {
                truncation,
                r,
                allow_large: args.allow_large || cur.is_some_and(|c| c.allow_large),
            });
        }
    } else if let Some(ModelSpec::Gnse { truncation, r: ratio, .. }) = &mut cfg.model {
        if let Some(n) = args.truncation {
            *truncation = n;
        }
        if let Some(v) = r {
            *ratio = v;
        }
    }
    if let Some(eps) = &args.eps {
        if cfg.command == Command::Sweep {
            if let Some(s) = &mut cfg.sweep {
                s.epsilons = eps.clone();
            }
        } else {
            let [e] = eps.as_slice() else {
                return Err(ConfigError::Invalid("--eps takes a single value for this command".into()));
            };
            if let Some(m) = &mut cfg.model {
                m.set_epsilon(*e);
            }
        }
    }
    if cfg.command == Command::ShearCheck {
        if let Some(s) = &mut cfg.shear {
            if let Some(t) = args.horizon {
                s.horizon = t;
            }
            if let Some(dt) = args.dt {
                s.dt = dt;
            }
        }
    } else if let Some(i) = &mut cfg.integrator {
        if let Some(t) = args.horizon {
            if i.burn_in.is_some_and(|b| b >= t) {
                i.burn_in = Some(0.1 * t);
            }
            i.horizon = t;
        }
        if let Some(dt) = args.dt {
            i.dt = Some(dt);
        }
    }
    Ok(())
}

fn run(cfg: &RunConfig) -> ExitCode {
    let text = cfg.to_toml();
    let dir = PathBuf::from(&cfg.output.dir);
    let mut blank = cfg.clone();
    blank.output.dir.clear();
    let mut out = match OutDir::create(&dir, &blank.to_toml(), cfg.seed) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: cannot create {}: {e}", dir.display());
            return ExitCode::from(1);
        }
    };
    let result = commands::execute(cfg, &mut out);
    let (code, error) = match &result {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(summary).expect("json"));
            (0, None)
        }
        Err(Failure::Config(m)) => (2, Some(m.clone())),
        Err(Failure::Compute(m)) => (1, Some(m.clone())),
    };
    if let Some(m) = &error {
        eprintln!("error: {m}");
    }
    if let Err(e) = out.finish(cfg.command.name(), &text, error.as_deref()) {
        eprintln!("error: cannot write manifest: {e}");
        return ExitCode::from(1);
    }
    ExitCode::from(code)
}

fn cost_estimate(n: usize) -> String {
    let triples = triple_count(n);
    let ratio = triples as f64 / triple_count(8) as f64;
    format!(
        "distinctness at N = {n}: {triples} (i, j, l) triples, about {ratio:.1}x the N = 8 scan \
         (a few seconds on one core at N = 8)"
    )
}

fn list_examples(show: Option<&str>) -> ExitCode {
    match show {
        Some(name) => match catalog::find(name) {
            Some(e) => {
                print!("{}", e.text);
                ExitCode::SUCCESS
            }
            None => {
                eprintln!("error: no bundled example `{name}`");
                ExitCode::from(2)
            }
        },
        None => {
            for e in catalog::EXAMPLES {
                println!("{:<18} {}", e.name, e.description);
            }
            ExitCode::SUCCESS
        }
    }
}

fn gnuplot(csv: &std::path::Path) -> ExitCode {
    let text = match std::fs::read_to_string(csv) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", csv.display());
            return ExitCode::from(2);
        }
    };
    let Some(header) = text.lines().find(|l| !l.starts_with('#')) else {
        eprintln!("error: {} has no header line", csv.display());
        return ExitCode::from(2);
    };
    let cols: Vec<&str> = header.split(',').collect();
    println!("set datafile separator ','");
    println!("set key autotitle columnhead");
    for (i, c) in cols.iter().enumerate() {
        println!("# column {}: {c}", i + 1);
    }
    let file = csv.display();
    let plots: Vec<String> = (2..=cols.len())
        .filter(|&i| cols[i - 1] != "stderr")
        .map(|i| format!("'{file}' using 1:{i} with linespoints"))
        .collect();
    println!("set xlabel '{}'", cols[0]);
    println!("plot {}", plots.join(", \\\n     "));
    ExitCode::SUCCESS
}
