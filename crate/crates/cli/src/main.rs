use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use curvlab_cli::config::{schema, ExperimentConfig, Kind};
use curvlab_cli::{run, write_outputs, CliError, RunOptions};

const AFTER_HELP: &str = "\
Outputs (in --out DIR):
  result.json  config hash, version, RNG identity, timestamp, estimates
  data.csv     columns parameter,quantity,mean,stderr,ci95_lo,ci95_hi,ci99_lo,ci99_hi,m
               (floats with 17 significant digits; parameter is N, r or a step; empty if none)
  trace.csv    columns step,l2_distance (bt-converge only)

Exit codes: 0 ok, 2 --assert failed, 64 bad config, 65 non-proper spherical data,
70 rejection sampler too inefficient, 74 I/O error.";

#[derive(Parser)]
#[command(name = "curvlab", version, about = "Stochastic geometry experiments on constant-curvature spaces", after_help = AFTER_HELP)]
struct Cli {
    /// Print the JSON schema of experiment configs and exit.
    #[arg(long)]
    print_schema: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on this).
    #[arg(long, env = "CURVLAB_WORKERS")]
    workers: Option<usize>,
    /// Exit with status 2 unless the configured inequality holds at 99%.
    #[arg(long = "assert")]
    assert_: bool,
    /// Output directory (default: config `output`, else ./curvlab-out).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// U1 of geodesic balls: closed form, optional boundary Monte Carlo.
    U1Ball(Common),
    /// U1 of the hull of explicit points.
    U1Polytope(Common),
    /// E U1 of N random points, optionally swept over N.
    ExpectU1(Common),
    /// Paired E U1[K]_N - E U1[B_K]_N.
    UrysohnPaired(Common),
    /// Paired E vol([C_K]_N^*) - E vol([K]_N^*) on the sphere.
    SantaloPaired(Common),
    /// One two-point symmetrization of a grid function.
    Symmetrize(Common),
    /// Symmetric decreasing rearrangement of a grid function.
    Rearrange(Common),
    /// Random two-point symmetrizations towards the rearrangement.
    BtConverge(Common),
    /// Closed-form anchors and the spherical polar identity.
    SelfTest(Common),
}

impl Command {
    fn split(self) -> (Kind, Common) {
        match self {
            Command::U1Ball(c) => (Kind::U1Ball, c),
            Command::U1Polytope(c) => (Kind::U1Polytope, c),
            Command::ExpectU1(c) => (Kind::ExpectU1, c),
            Command::UrysohnPaired(c) => (Kind::UrysohnPaired, c),
            Command::SantaloPaired(c) => (Kind::SantaloPaired, c),
            Command::Symmetrize(c) => (Kind::Symmetrize, c),
            Command::Rearrange(c) => (Kind::Rearrange, c),
            Command::BtConverge(c) => (Kind::BtConverge, c),
            Command::SelfTest(c) => (Kind::SelfTest, c),
        }
    }
}

fn execute(kind: Kind, c: Common) -> Result<i32, CliError> {
    let text = std::fs::read_to_string(&c.config).map_err(|e| CliError::Io {
        path: c.config.display().to_string(),
        source: e,
    })?;
    let cfg = ExperimentConfig::parse(&text)?;
    let opts = RunOptions {
        seed: c.seed,
        workers: c.workers,
        assert: c.assert_,
    };
    let out = run(&cfg, kind, &opts)?;
    let dir = c
        .out
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("curvlab-out"));
    for p in write_outputs(&dir, &out)? {
        eprintln!("wrote {}", p.display());
    }
    // a closed stdout (e.g. piped into `head`) is not an error
    let mut stdout = std::io::stdout().lock();
    for row in &out.record.estimates {
        let p = row.parameter.map(|p| format!("[{p}]")).unwrap_or_default();
        let _ = writeln!(stdout, "{}{p} = {:.10} +- {:.3e}", row.quantity, row.mean, row.stderr);
    }
    if let Some(a) = &out.record.assertion {
        let _ = writeln!(stdout, "{}: {}", if a.passed { "PASS" } else { "FAIL" }, a.statement);
    }
    Ok(out.exit_code(opts.assert))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.print_schema {
        let text = serde_json::to_string_pretty(&schema()).expect("schema serialises");
        let _ = writeln!(std::io::stdout(), "{text}");
        return ExitCode::SUCCESS;
    }
    let Some(cmd) = cli.command else {
        eprintln!("curvlab: a subcommand is required (see --help)");
        return ExitCode::from(64);
    };
    let (kind, common) = cmd.split();
    match execute(kind, common) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("curvlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
