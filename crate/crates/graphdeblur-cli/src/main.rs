//! Batch command-line front end for the graphdeblur pipeline.
//!
//! Four subcommands mirror the stages of the method: `blur` makes synthetic
//! data, `graph` builds the Laplacian regularizer, `deblur` runs a
//! reconstruction method, and `sweep-mu` tunes the regularization weight
//! against ground truth. Flags override config-file values, which override
//! the built-in defaults. Exit codes: 0 on success, 3 when the solver
//! diverges, 1 for every other error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use graphdeblur::harness::{
    cmd_blur, cmd_deblur, cmd_graph, cmd_sweep_mu, ExperimentConfig, PsfSpec,
};
use graphdeblur::{Error, Method, Result};

#[derive(Parser)]
#[command(name = "graphdeblur", version, about = "Image deblurring with a graph-Laplacian regularizer")]
struct Cli {
    /// TOML config file; flags override its values
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Blur an image and add seeded Gaussian noise
    Blur(BlurArgs),
    /// Reconstruct an image from blurred data
    Deblur(DeblurArgs),
    /// Build the graph Laplacian, either via the full pipeline or from a given image
    Graph(GraphArgs),
    /// Run one method over a list of mu values and tabulate quality metrics
    SweepMu(SweepArgs),
}

/// PSF selection, shared by all subcommands.
#[derive(Args, Clone, Default)]
struct PsfOpts {
    /// PSF kernel image file (GLF1 or PGM)
    #[arg(long, value_name = "PATH")]
    psf: Option<PathBuf>,

    /// Generated Gaussian PSF, written as STD:SIZE (e.g. 1.5:9)
    #[arg(long, value_name = "STD:SIZE")]
    psf_gaussian: Option<String>,

    /// Generated SIZE x SIZE averaging PSF
    #[arg(long, value_name = "SIZE")]
    psf_average: Option<usize>,

    /// Generated horizontal motion PSF of length LEN
    #[arg(long, value_name = "LEN")]
    psf_motion: Option<usize>,
}

impl PsfOpts {
    /// The PSF named by flags, if any.
    fn spec(&self) -> Result<Option<PsfSpec>> {
        let mut chosen = Vec::new();
        if let Some(path) = &self.psf {
            chosen.push(PsfSpec::File { path: path.clone() });
        }
        if let Some(text) = &self.psf_gaussian {
            let (std_text, size_text) = text.split_once(':').ok_or_else(|| {
                Error::Config(format!("--psf-gaussian expects STD:SIZE, got '{text}'"))
            })?;
            let std = std_text
                .parse()
                .map_err(|_| Error::Config(format!("invalid Gaussian std '{std_text}'")))?;
            let size = size_text
                .parse()
                .map_err(|_| Error::Config(format!("invalid Gaussian size '{size_text}'")))?;
            chosen.push(PsfSpec::Gaussian { std, size });
        }
        if let Some(size) = self.psf_average {
            chosen.push(PsfSpec::Average { size });
        }
        if let Some(len) = self.psf_motion {
            chosen.push(PsfSpec::Motion { len });
        }
        if chosen.len() > 1 {
            return Err(Error::Config("more than one PSF flag given".into()));
        }
        Ok(chosen.pop())
    }
}

/// Solver and experiment parameters, shared by the compute subcommands.
#[derive(Args, Clone, Default)]
struct ParamOpts {
    /// Graph neighborhood radius (Chebyshev)
    #[arg(long = "R", value_name = "R")]
    r: Option<usize>,

    /// Graph weight bandwidth sigma
    #[arg(long)]
    sigma: Option<f64>,

    /// ADMM penalty parameter rho
    #[arg(long)]
    rho: Option<f64>,

    /// Relative-change stopping tolerance tau (0 disables early stopping)
    #[arg(long)]
    tau: Option<f64>,

    /// Maximum number of ADMM iterations
    #[arg(long = "maxit", value_name = "K")]
    max_iter: Option<usize>,

    /// Regularization weight mu (required for tv_l1, graph, graph_oracle)
    #[arg(long)]
    mu: Option<f64>,
}

#[derive(Args)]
struct BlurArgs {
    /// Ground-truth input image
    #[arg(long, value_name = "PATH")]
    image: Option<PathBuf>,

    #[command(flatten)]
    psf: PsfOpts,

    /// Noise level as a fraction of the blurred image norm
    #[arg(long = "noise", value_name = "LEVEL")]
    noise_level: Option<f64>,

    /// Noise generator seed
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DeblurArgs {
    /// Blurred data image
    #[arg(long, value_name = "PATH")]
    image: Option<PathBuf>,

    #[command(flatten)]
    psf: PsfOpts,

    /// Reconstruction method
    #[arg(long, value_name = "NAME")]
    method: Option<String>,

    #[command(flatten)]
    params: ParamOpts,

    /// Ground-truth image for quality metrics (required by graph_oracle)
    #[arg(long, value_name = "PATH")]
    truth: Option<PathBuf>,

    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GraphArgs {
    /// Blurred data image (input to the full pipeline)
    #[arg(long, value_name = "PATH")]
    image: Option<PathBuf>,

    #[command(flatten)]
    psf: PsfOpts,

    /// Build the Laplacian directly from this image, skipping the reference
    /// reconstruction
    #[arg(long, value_name = "PATH")]
    from_image: Option<PathBuf>,

    #[command(flatten)]
    params: ParamOpts,

    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Blurred data image
    #[arg(long, value_name = "PATH")]
    image: Option<PathBuf>,

    #[command(flatten)]
    psf: PsfOpts,

    /// Reconstruction method to sweep
    #[arg(long, value_name = "NAME")]
    method: Option<String>,

    /// Comma-separated list of mu values to try
    #[arg(long = "mu-list", value_name = "A,B,...", allow_hyphen_values = true)]
    mu_list: String,

    #[command(flatten)]
    params: ParamOpts,

    /// Ground-truth image for the metric table
    #[arg(long, value_name = "PATH")]
    truth: Option<PathBuf>,

    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

fn file_config(path: Option<&PathBuf>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Io {
                path: p.clone(),
                source: e,
            })?;
            ExperimentConfig::from_toml_str(&text)
        }
        None => Ok(ExperimentConfig::default()),
    }
}

fn require<T>(value: Option<T>, what: &str) -> Result<T> {
    value.ok_or_else(|| Error::Config(format!("missing {what}: pass the flag or set it in the config file")))
}

fn require_psf(cfg: &ExperimentConfig) -> Result<PsfSpec> {
    require(cfg.psf.clone(), "PSF (--psf, --psf-gaussian, --psf-average, or --psf-motion)")
}

fn parse_mu_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::Config(format!("invalid mu value '{t}' in --mu-list")))
        })
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    let base = file_config(cli.config.as_ref())?;
    match cli.command {
        Command::Blur(args) => {
            let cfg = ExperimentConfig {
                image: args.image,
                psf: args.psf.spec()?,
                noise_level: args.noise_level,
                seed: args.seed,
                out: args.out,
                ..Default::default()
            }
            .merged_over(base);
            let params = cfg.params()?;
            let image = require(cfg.image.clone(), "input image (--image)")?;
            let psf = require_psf(&cfg)?;
            let out = require(cfg.out.clone(), "output directory (--out)")?;
            let outputs = cmd_blur(&image, &psf, params.noise_level, params.seed, &out)?;
            println!("blurred image: {}", outputs.blurred.display());
            println!("sidecar:       {}", outputs.sidecar.display());
            println!("delta = {:.6e}", outputs.delta);
            Ok(())
        }
        Command::Deblur(args) => {
            let method: Method = require(args.method, "method (--method)")?.parse()?;
            let cfg = ExperimentConfig {
                image: args.image,
                psf: args.psf.spec()?,
                r: args.params.r,
                sigma: args.params.sigma,
                rho: args.params.rho,
                tau: args.params.tau,
                max_iter: args.params.max_iter,
                mu: args.params.mu,
                truth: args.truth,
                out: args.out,
                ..Default::default()
            }
            .merged_over(base);
            let params = cfg.params()?;
            let image = require(cfg.image.clone(), "blurred data image (--image)")?;
            let psf = require_psf(&cfg)?;
            let out = require(cfg.out.clone(), "output directory (--out)")?;
            let outputs = cmd_deblur(&image, &psf, method, &params, cfg.truth.as_deref(), &out)?;
            println!("reconstruction: {}", outputs.reconstruction.display());
            if let Some(trace) = &outputs.trace {
                println!("trace:          {}", trace.display());
            }
            if let Some(mu_gcv) = outputs.mu_gcv {
                println!("mu_gcv = {mu_gcv:.6e}");
            }
            if let Some(m) = &outputs.metrics {
                println!("rre = {:.6e}  psnr = {:.4}  ssim = {:.6}", m.rre, m.psnr, m.ssim);
            }
            Ok(())
        }
        Command::Graph(args) => {
            let from_image = args.from_image.is_some();
            let cfg = ExperimentConfig {
                image: args.from_image.or(args.image),
                psf: args.psf.spec()?,
                r: args.params.r,
                sigma: args.params.sigma,
                out: args.out,
                ..Default::default()
            }
            .merged_over(base);
            let params = cfg.params()?;
            let image = require(cfg.image.clone(), "input image (--image or --from-image)")?;
            let out = require(cfg.out.clone(), "output directory (--out)")?;
            let outputs = cmd_graph(&image, cfg.psf.as_ref(), &params, from_image, &out)?;
            println!("laplacian: {}", outputs.laplacian.display());
            if let Some(x_star) = &outputs.x_star {
                println!("reference: {}", x_star.display());
            }
            if let Some(mu_gcv) = outputs.mu_gcv {
                println!("mu_gcv = {mu_gcv:.6e}");
            }
            Ok(())
        }
        Command::SweepMu(args) => {
            let method: Method = require(args.method, "method (--method)")?.parse()?;
            let mu_list = parse_mu_list(&args.mu_list)?;
            let cfg = ExperimentConfig {
                image: args.image,
                psf: args.psf.spec()?,
                r: args.params.r,
                sigma: args.params.sigma,
                rho: args.params.rho,
                tau: args.params.tau,
                max_iter: args.params.max_iter,
                truth: args.truth,
                out: args.out,
                ..Default::default()
            }
            .merged_over(base);
            let params = cfg.params()?;
            let image = require(cfg.image.clone(), "blurred data image (--image)")?;
            let psf = require_psf(&cfg)?;
            let truth = require(cfg.truth.clone(), "ground-truth image (--truth)")?;
            let out = require(cfg.out.clone(), "output directory (--out)")?;
            let outputs =
                cmd_sweep_mu(&image, &psf, method, &params, &mu_list, &truth, &out)?;
            println!("{:>13} {:>13} {:>9} {:>9}  best", "mu", "rre", "psnr", "ssim");
            for row in &outputs.rows {
                let best = if row.mu == outputs.best_mu { "*" } else { "" };
                println!(
                    "{:>13.6e} {:>13.6e} {:>9.4} {:>9.6}  {best}",
                    row.mu, row.report.rre, row.report.psnr, row.report.ssim
                );
            }
            println!("table: {}", outputs.csv.display());
            println!("best mu = {:.6e}", outputs.best_mu);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Divergence { .. } => ExitCode::from(3),
                _ => ExitCode::from(1),
            }
        }
    }
}
