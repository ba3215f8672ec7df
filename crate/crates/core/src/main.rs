use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::json;

use fracqjc::mlf::{self, MlRequest};
use fracqjc::run::{self, NMax, Observable, RunConfig};
use fracqjc::Error;

#[derive(Parser, Debug)]
#[command(name = "fracqjc", version, about = "Unitary fractional-time Jaynes-Cummings dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evolve the atom-excited coherent state and write a CSV time series.
    Simulate(RunArgs),
    /// Check a configuration without running it.
    Validate(RunArgs),
    #[command(hide = true, subcommand)]
    Mlf(MlfCommand),
}

#[derive(Subcommand, Debug)]
enum MlfCommand {
    /// Evaluate E_alpha(re + i im).
    Eval {
        #[arg(long)]
        alpha: f64,
        #[arg(long, allow_hyphen_values = true)]
        re: f64,
        #[arg(long, allow_hyphen_values = true)]
        im: f64,
        #[arg(long, default_value_t = mlf::DEFAULT_TOL)]
        tol: f64,
    },
}

/// Every flag overrides the matching field of `--config` (or the default).
#[derive(Args, Debug, Default)]
struct RunArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    beta_re: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta_im: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    t_max: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// `auto` or an integer.
    #[arg(long)]
    n_max: Option<NMax>,
    #[arg(long)]
    tail_tol: Option<f64>,
    #[arg(long)]
    ml_tol: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    kappa0: Option<f64>,
    /// Real and imaginary part, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
    lambda0: Option<Vec<f64>>,
    #[arg(long = "Lambda0", allow_hyphen_values = true)]
    big_lambda0: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    observables: Option<Vec<Observable>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn into_config(self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_toml_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.alpha {
            cfg.alphas = v;
        }
        if let Some(v) = self.beta_re {
            cfg.beta_re = v;
        }
        if let Some(v) = self.beta_im {
            cfg.beta_im = v;
        }
        if let Some(v) = self.mu {
            cfg.mu = v;
        }
        if let Some(v) = self.t_max {
            cfg.t_max = v;
        }
        if let Some(v) = self.steps {
            cfg.steps = v;
        }
        if let Some(v) = self.n_max {
            cfg.n_max = v;
        }
        if let Some(v) = self.tail_tol {
            cfg.tail_tol = v;
        }
        if let Some(v) = self.ml_tol {
            cfg.ml_tol = v;
        }
        if let Some(v) = self.kappa0 {
            cfg.dyson0.kappa0 = v;
        }
        if let Some(v) = self.lambda0 {
            let [re, im] = v[..] else {
                return Err(Error::InvalidConfig(format!("--lambda0 expects 're,im', got {} values", v.len())));
            };
            cfg.dyson0.lambda0_re = re;
            cfg.dyson0.lambda0_im = im;
        }
        if let Some(v) = self.big_lambda0 {
            cfg.dyson0.big_lambda0 = v;
        }
        if let Some(v) = self.observables {
            cfg.observables = v.into_iter().collect();
        }
        if let Some(v) = self.out {
            cfg.output_path = v;
        }
        Ok(cfg)
    }
}

fn configure_threads() -> Result<(), Error> {
    let Ok(raw) = std::env::var("FRACQJC_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidConfig(format!("FRACQJC_THREADS = '{raw}' is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::InvalidConfig(e.to_string()))
}

fn simulate(args: RunArgs) -> Result<(), Error> {
    let cfg = args.into_config()?;
    let series = run::run(&cfg)?;
    let mut w = BufWriter::new(File::create(&cfg.output_path)?);
    series.write_csv(&mut w)?;
    w.flush()?;
    if cfg.wants(Observable::Amplitudes) {
        let mut w = BufWriter::new(File::create(run::amplitude_path(&cfg.output_path))?);
        series.write_amplitudes_csv(&mut w)?;
        w.flush()?;
    }
    log::info!("wrote {} rows to {}", series.rows.len(), cfg.output_path.display());
    Ok(())
}

fn validate(args: RunArgs) -> Result<bool, Error> {
    let cfg = args.into_config()?;
    let findings = cfg.validate();
    println!("{}", serde_json::to_string_pretty(&findings).expect("findings serialize"));
    Ok(findings.is_empty())
}

fn error_record(e: &Error) -> serde_json::Value {
    let (alpha, t) = e.point().unzip();
    json!({
        "error": e.kind(),
        "message": e.to_string(),
        "alpha": alpha,
        "n": e.block(),
        "t": t,
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = configure_threads().and_then(|()| match cli.command {
        Command::Simulate(args) => simulate(args).map(|()| true),
        Command::Validate(args) => validate(args),
        Command::Mlf(MlfCommand::Eval { alpha, re, im, tol }) => {
            let r = MlRequest::new(alpha, Complex64::new(re, im), tol)?.evaluate()?;
            println!(
                "{}",
                json!({
                    "re": r.value.re,
                    "im": r.value.im,
                    "est_error": r.est_error,
                    "method": r.method,
                })
            );
            Ok(true)
        }
    });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{}", error_record(&e));
            ExitCode::from(2)
        }
    }
}
