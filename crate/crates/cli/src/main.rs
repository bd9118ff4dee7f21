use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use adia_core::acceptance::run_all;
use adia_core::apt::{analyze, bc_expansion, AptOptions};
use adia_core::grover::{closed_tradeoff, J0Source};
use adia_core::sim::{propagate, Integrator, SimOptions};
use adia_core::sweep::{family_for, run_sweep, Model, ResolvedConfig, RunConfig};
use adia_core::{Error, ScheduleKind};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

#[derive(Parser)]
#[command(name = "adia-tradeoff", version, about = "Error versus run-time trade-offs of adiabatic evolutions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep run times and write the v1 CSV (and optionally a JSON summary).
    Sweep(ConfigArgs),
    /// Print validity times and validity errors as JSON.
    ClosedForms {
        #[command(flatten)]
        config: ConfigArgs,
        /// Use the fitted large-N expression for J_0 in beta schedules.
        #[arg(long)]
        j0_approx: bool,
    },
    /// Run the acceptance checks and report each one.
    Verify(ConfigArgs),
    /// Dump a single propagation as CSV.
    Trace {
        #[command(flatten)]
        config: ConfigArgs,
        /// Run time.
        #[arg(long)]
        t: f64,
        /// Number of sample intervals along s.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Include real and imaginary state components.
        #[arg(long)]
        components: bool,
    },
}

/// Every key of the TOML config file as a flag; flags win over the file.
#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<Model>,
    /// Database sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long)]
    marked: Option<usize>,
    #[arg(long)]
    matrix_file: Option<PathBuf>,
    #[arg(long)]
    schedule: Option<ScheduleKind>,
    #[arg(long)]
    p: Option<u32>,
    #[arg(long)]
    c: Option<f64>,
    /// Run times, comma separated.
    #[arg(long, value_delimiter = ',')]
    t_list: Option<Vec<f64>>,
    #[arg(long)]
    t_min: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    t_count: Option<usize>,
    #[arg(long)]
    quad_tol: Option<f64>,
    #[arg(long)]
    integrator_tol: Option<f64>,
    #[arg(long)]
    integrator: Option<Integrator>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 1 runs sequentially.
    #[arg(long, env = "ADIA_JOBS")]
    jobs: Option<usize>,
}

impl ConfigArgs {
    fn load(&self) -> Result<(RunConfig, ResolvedConfig), Error> {
        let base = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        let flags = RunConfig {
            model: self.model,
            n: self.n.clone(),
            marked: self.marked,
            matrix_file: self.matrix_file.clone(),
            schedule: self.schedule,
            p: self.p,
            c: self.c,
            t_list: self.t_list.clone(),
            t_min: self.t_min,
            t_max: self.t_max,
            t_count: self.t_count,
            quad_tol: self.quad_tol,
            integrator_tol: self.integrator_tol,
            integrator: self.integrator,
            csv: self.csv.clone(),
            json: self.json.clone(),
            seed: self.seed,
            jobs: self.jobs,
            series: Vec::new(),
        };
        let merged = base.merge(flags);
        let resolved = merged.resolve()?;
        Ok((merged, resolved))
    }
}

enum Failure {
    Config(Error),
    Runtime(Error),
    Io(io::Error),
    Verification(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config() {
            Failure::Config(e)
        } else {
            Failure::Runtime(e)
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

fn output(path: Option<&PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn sweep(args: &ConfigArgs) -> Result<(), Failure> {
    let (raw, config) = args.load()?;
    let out = run_sweep(&config)?;
    let mut csv = output(raw.csv.as_ref())?;
    csv.write_all(out.csv_string().as_bytes())?;
    csv.flush()?;
    if let Some(path) = &raw.json {
        std::fs::write(path, out.summary_json() + "\n")?;
    }
    eprintln!("{} records for {} curve(s)", out.records.len(), out.summary.curves.len());
    Ok(())
}

fn closed_forms(args: &ConfigArgs, j0_approx: bool) -> Result<(), Failure> {
    let (raw, config) = args.load()?;
    let source = if j0_approx { J0Source::Approximate } else { J0Source::Exact };
    let mut rows = Vec::new();
    for &n in &config.ns {
        for s in &config.series {
            let closed = config.model != Model::CustomMatrixFile && s.kind != ScheduleKind::Custom;
            let result = if closed {
                closed_tradeoff(n, s.kind, s.c, s.p, source, config.quad_tol)?
            } else {
                let family = family_for(&config, n, *s)?;
                let opts = AptOptions { quad_tol: config.quad_tol };
                let e = if s.p == 0 { analyze(&family, 1.0, opts)? } else { bc_expansion(&family, s.p, opts)? };
                e.tradeoff(s.c)?
            };
            rows.push(json!({
                "N": n,
                "schedule": s.kind.to_string(),
                "p": s.p,
                "C": s.c,
                "source": if closed { "closed-form" } else { "numeric" },
                "T_val": result.t_val,
                "eps_tilde": result.eps_tilde,
                "coefficient": result.coefficient,
            }));
        }
    }
    let mut out = output(raw.json.as_ref())?;
    writeln!(out, "{}", serde_json::to_string_pretty(&rows).expect("rows serialize"))?;
    out.flush()?;
    Ok(())
}

fn verify(args: &ConfigArgs) -> Result<(), Failure> {
    let (raw, config) = args.load()?;
    let reports = run_all(config.exec);
    let mut stdout = io::stdout().lock();
    for r in &reports {
        writeln!(stdout, "{}", r.line())?;
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    writeln!(stdout, "verify: {} passed, {failed} failed", reports.len() - failed)?;
    if let Some(path) = &raw.json {
        std::fs::write(path, serde_json::to_string_pretty(&reports).expect("reports serialize") + "\n")?;
    }
    if failed > 0 {
        return Err(Failure::Verification(failed));
    }
    Ok(())
}

fn trace(args: &ConfigArgs, t: f64, samples: usize, components: bool) -> Result<(), Failure> {
    let (raw, config) = args.load()?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Failure::Config(Error::Config { field: "t".into(), message: format!("must be positive, got {t}") }));
    }
    if samples == 0 {
        return Err(Failure::Config(Error::Config { field: "samples".into(), message: "must be at least 1".into() }));
    }
    let family = family_for(&config, config.ns[0], config.series[0])?;
    let opts = SimOptions { tol: config.integrator_tol, integrator: config.integrator, samples, ..SimOptions::default() };
    let trace = propagate(&family, t, opts).map_err(|e| e.context(format!("T={t}")))?;
    let mut out = output(raw.csv.as_ref())?;
    trace.write_csv(&mut out, components)?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Sweep(args) => sweep(args),
        Command::ClosedForms { config, j0_approx } => closed_forms(config, *j0_approx),
        Command::Verify(args) => verify(args),
        Command::Trace { config, t, samples, components } => trace(config, *t, *samples, *components),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(n)) => {
            eprintln!("error: {n} acceptance check(s) failed");
            ExitCode::from(1)
        }
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
