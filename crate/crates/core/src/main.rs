use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hopm::bench::{self, EmitFormat, SweepSpec};
use hopm::fixtures::{Fixture, FixtureName};
use hopm::solvers::{solve, Method, SolveReport, SolverConfig};
use hopm::{condition_report, gen_random_tensor, io, Error, PageRankProblem, ProbVector, StochasticTensor};

#[derive(Parser)]
#[command(name = "hopm", version, about = "Stationary distributions of higher-order Markov chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve x = Px^{m-1} and print the report as JSON.
    Solve {
        #[command(flatten)]
        opts: SolveOpts,
        #[command(flatten)]
        input: TensorInput,
    },
    /// Solve a multilinear PageRank problem built on the tensor.
    Pagerank {
        #[arg(long, default_value_t = 0.85)]
        theta: f64,
        /// `uniform` or a file of nonnegative weights.
        #[arg(long, default_value = "uniform")]
        teleport: String,
        #[command(flatten)]
        opts: SolveOpts,
        #[command(flatten)]
        input: TensorInput,
    },
    /// Write a random column-stochastic tensor.
    Gen {
        #[arg(long, default_value_t = 3)]
        order: usize,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        density: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `.json` for JSON, anything else for the text format.
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the tensor invariants; exits 1 on violations.
    Validate {
        /// Tensor file, or `fixture:<i|ii|iii|iv>`.
        tensor: String,
    },
    /// Print delta_m, eta_m and the derived bounds as JSON.
    Conditions {
        #[command(flatten)]
        input: TensorInput,
    },
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Subcommand)]
enum BenchCommand {
    /// All methods on the four built-in fixtures.
    Table1 {
        #[command(flatten)]
        out: OutputOpts,
        /// Exit with status 2 when a row misses its reference.
        #[arg(long)]
        strict: bool,
    },
    /// Damping sweep over seeded random PageRank instances.
    Pagerank {
        /// `a..b` (inclusive) or a comma-separated list.
        #[arg(long, default_value = "0..28")]
        seeds: String,
        #[arg(long, value_delimiter = ',', default_value = "0.7,0.85,0.9,0.95,0.99")]
        thetas: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "hopm,rhopm,qehopm")]
        methods: Vec<String>,
        #[arg(long, default_value_t = 3)]
        order: usize,
        #[arg(long, value_delimiter = ',', default_value = "3,4,6")]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 0.5)]
        density: f64,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        eta: Option<f64>,
        #[command(flatten)]
        out: OutputOpts,
    },
}

#[derive(Args)]
struct TensorInput {
    /// Tensor file, or `fixture:<i|ii|iii|iv>`.
    tensor: String,
    /// Renormalize columns that do not sum to one.
    #[arg(long)]
    repair: bool,
}

#[derive(Args)]
struct SolveOpts {
    #[arg(long, default_value = "qehopm")]
    method: String,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    tau: f64,
    #[arg(long)]
    period: Option<usize>,
    /// Write `iteration,step_norm,residual` rows here.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct OutputOpts {
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// json, csv or md-table; defaults to the extension of --out, else md-table.
    #[arg(long)]
    format: Option<String>,
    /// Leave wall-clock timings out of the report.
    #[arg(long)]
    no_wall_time: bool,
}

struct Loaded {
    tensor: StochasticTensor,
    fixture: Option<Fixture>,
}

fn load(spec: &str, repair: bool) -> Result<Loaded, Error> {
    if let Some(name) = spec.strip_prefix("fixture:") {
        let name = FixtureName::parse(name)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown fixture '{name}'")))?;
        let fixture = Fixture::load(name)?;
        return Ok(Loaded {
            tensor: fixture.tensor.clone(),
            fixture: Some(fixture),
        });
    }
    let raw = io::load_tensor(spec)?;
    let report = raw.validate();
    let tensor = if report.is_ok() {
        raw
    } else if repair {
        raw.repaired()?
    } else {
        return report.into_result().map(|_| unreachable!()).map_err(|e| {
            Error::InvalidConfig(format!("{e}; rerun with --repair to renormalize columns"))
        });
    };
    Ok(Loaded {
        tensor,
        fixture: None,
    })
}

fn config(opts: &SolveOpts, fixture: Option<&Fixture>) -> Result<SolverConfig, Error> {
    let method: Method = opts.method.parse()?;
    let mut cfg = match fixture {
        Some(f) => f.config(method),
        None => SolverConfig::new(method),
    };
    cfg.tol = opts.tol;
    cfg.max_iter = opts.max_iter;
    cfg.tau = opts.tau;
    cfg.period = opts.period;
    if let Some(b) = opts.beta {
        cfg.beta = Some(b);
    }
    if let Some(e) = opts.eta {
        cfg.eta = Some(e);
    }
    if let Some(g) = opts.gamma {
        cfg.gamma = g;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn finish_solve(report: &SolveReport, trace: Option<&Path>) -> Result<(), Error> {
    if let Some(path) = trace {
        std::fs::write(path, report.trace_csv()).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
    }
    out(&serde_json::to_string_pretty(report)?);
    Ok(())
}

fn emit(report: &bench::BenchReport, out: &OutputOpts) -> Result<(), Error> {
    let format = match (&out.format, &out.out) {
        (Some(f), _) => f.parse()?,
        (None, Some(p)) => match p.extension().and_then(|e| e.to_str()) {
            Some("json") => EmitFormat::Json,
            Some("csv") => EmitFormat::Csv,
            _ => EmitFormat::Markdown,
        },
        (None, None) => EmitFormat::Markdown,
    };
    match &out.out {
        Some(path) => bench::emit(report, format, !out.no_wall_time, path),
        None => {
            write_stdout(&bench::render(report, format, !out.no_wall_time)?);
            Ok(())
        }
    }
}

/// Writes to stdout, exiting quietly if the reader has gone away.
fn write_stdout(text: &str) {
    let mut stdout = std::io::stdout().lock();
    if let Err(e) = stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
        if e.kind() == ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: writing to stdout: {e}");
        std::process::exit(1);
    }
}

fn out(text: &str) {
    write_stdout(text);
    write_stdout("\n");
}

fn parse_seeds(s: &str) -> Result<Vec<u64>, Error> {
    let bad = || Error::InvalidConfig(format!("bad seed list '{s}'"));
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse().map_err(|_| bad()))
        .collect()
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Solve { opts, input } => {
            let loaded = load(&input.tensor, input.repair)?;
            let cfg = config(&opts, loaded.fixture.as_ref())?;
            let report = solve(&loaded.tensor, &cfg)?;
            finish_solve(&report, opts.trace.as_deref())?;
        }
        Command::Pagerank {
            theta,
            teleport,
            opts,
            input,
        } => {
            let loaded = load(&input.tensor, input.repair)?;
            let v = if teleport == "uniform" {
                ProbVector::uniform(loaded.tensor.dim())
            } else {
                io::load_vector(&teleport)?
            };
            let problem = PageRankProblem::new(loaded.tensor, v, theta)?;
            let cfg = config(&opts, None)?;
            let report = solve(&problem, &cfg)?;
            finish_solve(&report, opts.trace.as_deref())?;
        }
        Command::Gen {
            order,
            dim,
            density,
            seed,
            out,
        } => {
            let t = gen_random_tensor(order, dim, density, seed)?;
            io::save_tensor(&t, &out)?;
        }
        Command::Validate { tensor } => {
            let t = match tensor.strip_prefix("fixture:") {
                Some(_) => load(&tensor, false)?.tensor,
                None => io::load_tensor(&tensor)?,
            };
            let report = t.validate();
            out(&serde_json::to_string_pretty(&report)?);
            if !report.is_ok() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Conditions { input } => {
            let loaded = load(&input.tensor, input.repair)?;
            let report = condition_report(&loaded.tensor)?;
            out(&serde_json::to_string_pretty(&report)?);
        }
        Command::Bench(BenchCommand::Table1 { out, strict }) => {
            let report = bench::run_table1()?;
            emit(&report, &out)?;
            let failures = report.failures();
            for row in &failures {
                eprintln!(
                    "mismatch: ({}) {} IT {} vs {:?}, RR {:e}",
                    row.fixture,
                    row.method.label(),
                    row.iterations,
                    row.expected_iterations,
                    row.residual
                );
            }
            if strict && !failures.is_empty() {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Bench(BenchCommand::Pagerank {
            seeds,
            thetas,
            methods,
            order,
            dims,
            density,
            beta,
            eta,
            out,
        }) => {
            let spec = SweepSpec {
                seeds: parse_seeds(&seeds)?,
                thetas,
                methods: methods
                    .iter()
                    .map(|m| m.parse())
                    .collect::<Result<Vec<Method>, Error>>()?,
                order,
                dims,
                density,
                beta,
                eta,
                ..SweepSpec::default()
            };
            let report = bench::run_pagerank_sweep(&spec)?;
            emit(&report, &out)?;
            for theta in &spec.thetas {
                let counts: Vec<String> = spec
                    .methods
                    .iter()
                    .map(|m| format!("{} {}", m.label(), report.converged_count(*theta, *m)))
                    .collect();
                eprintln!(
                    "theta {theta}: converged {} / {}",
                    counts.join(", "),
                    spec.seeds.len()
                );
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
