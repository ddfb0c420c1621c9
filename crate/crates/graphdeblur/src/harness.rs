//! Batch experiment orchestration shared by the command-line front end and
//! the integration tests: configuration merging, synthetic data generation,
//! and the blur / deblur / graph / sweep pipelines with all file outputs.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::admm::{run_method, AdmmConfig, Method};
use crate::error::{Error, Result};
use crate::gcv::compute_reference;
use crate::graph::{build_adjacency, build_laplacian, GraphConfig};
use crate::image::{Image, Psf};
use crate::io::{read_glf, read_pgm, write_glf, write_matrix_market, write_pgm};
use crate::metrics::MetricsReport;
use crate::noise::{add_noise, GENERATOR_ID};
use crate::spectral::{bccb_apply, psf_to_spectrum};

/// How a PSF is specified: loaded from an image file or generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PsfSpec {
    File { path: PathBuf },
    Gaussian { std: f64, size: usize },
    Average { size: usize },
    Motion { len: usize },
}

impl PsfSpec {
    /// Materializes the kernel. File-based kernels are read like images
    /// (GLF1 or PGM by extension) and renormalized to sum 1.
    pub fn load(&self) -> Result<Psf> {
        match self {
            PsfSpec::File { path } => {
                let img = read_image_auto(path)?;
                let n = img.side();
                Psf::centered(n, n, img.into_data())
            }
            PsfSpec::Gaussian { std, size } => Psf::gaussian(*std, *size),
            PsfSpec::Average { size } => Psf::average(*size),
            PsfSpec::Motion { len } => Psf::motion(*len),
        }
    }

    /// Compact descriptor recorded in sidecars.
    pub fn describe(&self) -> String {
        match self {
            PsfSpec::File { path } => format!("file:{}", path.display()),
            PsfSpec::Gaussian { std, size } => format!("gaussian:{std}:{size}"),
            PsfSpec::Average { size } => format!("average:{size}"),
            PsfSpec::Motion { len } => format!("motion:{len}"),
        }
    }
}

/// Experiment settings as they appear in a config file or on the command
/// line. Every field is optional; [`ExperimentConfig::params`] applies the
/// reference defaults (R=10, sigma=1e-2, rho=0.1, tau=1e-4, K=3000).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub image: Option<PathBuf>,
    pub psf: Option<PsfSpec>,
    pub noise_level: Option<f64>,
    pub seed: Option<u64>,
    pub methods: Option<Vec<String>>,
    #[serde(rename = "R")]
    pub r: Option<usize>,
    pub sigma: Option<f64>,
    pub rho: Option<f64>,
    pub tau: Option<f64>,
    pub max_iter: Option<usize>,
    pub mu: Option<f64>,
    pub truth: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Parses a TOML config file body.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("config file: {e}")))
    }

    /// Field-wise overlay: any value set in `self` wins over `base`.
    pub fn merged_over(self, base: ExperimentConfig) -> ExperimentConfig {
        ExperimentConfig {
            image: self.image.or(base.image),
            psf: self.psf.or(base.psf),
            noise_level: self.noise_level.or(base.noise_level),
            seed: self.seed.or(base.seed),
            methods: self.methods.or(base.methods),
            r: self.r.or(base.r),
            sigma: self.sigma.or(base.sigma),
            rho: self.rho.or(base.rho),
            tau: self.tau.or(base.tau),
            max_iter: self.max_iter.or(base.max_iter),
            mu: self.mu.or(base.mu),
            truth: self.truth.or(base.truth),
            out: self.out.or(base.out),
        }
    }

    /// Solver parameters with defaults applied and invariants checked.
    pub fn params(&self) -> Result<ResolvedParams> {
        let p = ResolvedParams {
            r: self.r.unwrap_or(10),
            sigma: self.sigma.unwrap_or(1e-2),
            rho: self.rho.unwrap_or(0.1),
            tau: self.tau.unwrap_or(1e-4),
            max_iter: self.max_iter.unwrap_or(3000),
            mu: self.mu,
            noise_level: self.noise_level.unwrap_or(0.0),
            seed: self.seed.unwrap_or(0),
        };
        p.validate()?;
        Ok(p)
    }
}

/// Fully resolved solver and experiment parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolvedParams {
    pub r: usize,
    pub sigma: f64,
    pub rho: f64,
    pub tau: f64,
    pub max_iter: usize,
    pub mu: Option<f64>,
    pub noise_level: f64,
    pub seed: u64,
}

impl Default for ResolvedParams {
    fn default() -> Self {
        ResolvedParams {
            r: 10,
            sigma: 1e-2,
            rho: 0.1,
            tau: 1e-4,
            max_iter: 3000,
            mu: None,
            noise_level: 0.0,
            seed: 0,
        }
    }
}

impl ResolvedParams {
    pub fn validate(&self) -> Result<()> {
        GraphConfig::new(self.r, self.sigma)?;
        AdmmConfig {
            rho: self.rho,
            tau: self.tau,
            max_iter: self.max_iter,
            mu: self.mu.unwrap_or(1.0),
        }
        .validate()?;
        if let Some(mu) = self.mu {
            if !(mu > 0.0) || !mu.is_finite() {
                return Err(Error::Config(format!("mu must be positive, got {mu}")));
            }
        }
        if !(self.noise_level >= 0.0) || !self.noise_level.is_finite() {
            return Err(Error::Config(format!(
                "noise_level must be nonnegative, got {}",
                self.noise_level
            )));
        }
        Ok(())
    }

    pub fn graph_config(&self) -> Result<GraphConfig> {
        GraphConfig::new(self.r, self.sigma)
    }

    /// ADMM settings; errors when `mu` was never supplied.
    pub fn admm_config(&self) -> Result<AdmmConfig> {
        let mu = self.mu.ok_or_else(|| {
            Error::Config("mu is required for the l1-regularized methods".into())
        })?;
        Ok(AdmmConfig {
            rho: self.rho,
            tau: self.tau,
            max_iter: self.max_iter,
            mu,
        })
    }
}

/// Reads an image, dispatching on the file extension: `.glf` is the
/// lossless float format, everything else is parsed as PGM.
pub fn read_image_auto(path: &Path) -> Result<Image> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("glf") => read_glf(path),
        _ => read_pgm(path),
    }
}

/// Worker cap for embarrassingly parallel stages: the `GRAPHDEBLUR_THREADS`
/// variable when set (minimum 1), otherwise the machine's parallelism.
pub fn thread_cap() -> usize {
    if let Ok(s) = std::env::var("GRAPHDEBLUR_THREADS") {
        if let Ok(v) = s.trim().parse::<usize>() {
            return v.max(1);
        }
    }
    std::thread::available_parallelism().map_or(1, |v| v.get())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Config(format!("serializing {}: {e}", path.display())))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Writes both the lossless file and an 8-bit preview next to it.
fn write_image_pair(dir: &Path, stem: &str, image: &Image) -> Result<PathBuf> {
    let glf = dir.join(format!("{stem}.glf"));
    write_glf(&glf, image)?;
    write_pgm(&dir.join(format!("{stem}.pgm")), image)?;
    Ok(glf)
}

#[derive(Debug, Serialize)]
struct BlurSidecar {
    n: usize,
    psf: String,
    noise_level: f64,
    seed: u64,
    delta: f64,
    generator: &'static str,
}

/// Outputs of the `blur` command.
#[derive(Debug)]
pub struct BlurOutputs {
    pub blurred: PathBuf,
    pub sidecar: PathBuf,
    pub delta: f64,
}

/// Blurs a ground-truth image and adds seeded noise of relative level
/// `noise_level`; writes `blurred.glf`, a preview, and a JSON sidecar.
pub fn cmd_blur(
    image_path: &Path,
    psf_spec: &PsfSpec,
    noise_level: f64,
    seed: u64,
    out_dir: &Path,
) -> Result<BlurOutputs> {
    ensure_dir(out_dir)?;
    let x = read_image_auto(image_path)?;
    let psf = psf_spec.load()?;
    let sigma = psf_to_spectrum(&psf, x.side())?;
    let b = bccb_apply(&sigma, &x)?;
    let b_delta = add_noise(&b, noise_level, seed)?;
    let delta = noise_level * b.norm();
    let blurred = write_image_pair(out_dir, "blurred", &b_delta)?;
    let sidecar = out_dir.join("blur_sidecar.json");
    write_json(
        &sidecar,
        &BlurSidecar {
            n: x.side(),
            psf: psf_spec.describe(),
            noise_level,
            seed,
            delta,
            generator: GENERATOR_ID,
        },
    )?;
    Ok(BlurOutputs {
        blurred,
        sidecar,
        delta,
    })
}

#[derive(Debug, Serialize)]
struct DeblurSidecar {
    method: String,
    n: usize,
    mu: Option<f64>,
    mu_gcv: Option<f64>,
    rho: f64,
    tau: f64,
    max_iter: usize,
    iterations: Option<usize>,
    lsqr_warnings: usize,
}

/// Outputs of the `deblur` command.
#[derive(Debug)]
pub struct DeblurOutputs {
    pub reconstruction: PathBuf,
    pub trace: Option<PathBuf>,
    pub metrics: Option<MetricsReport>,
    pub mu_gcv: Option<f64>,
}

fn append_metrics_row(path: &Path, method: &str, report: &MetricsReport) -> Result<()> {
    let new = !path.exists();
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut text = String::new();
    if new {
        text.push_str("method,rre,psnr,ssim\n");
    }
    text.push_str(&format!(
        "{method},{:.17e},{:.17e},{:.17e}\n",
        report.rre, report.psnr, report.ssim
    ));
    file.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

fn gcv_probes_csv(evaluations: &[(f64, f64)]) -> String {
    let mut text = String::from("mu,g\n");
    for (mu, g) in evaluations {
        text.push_str(&format!("{mu:.17e},{g:.17e}\n"));
    }
    text
}

/// Runs one reconstruction method on stored data; writes the
/// reconstruction pair, the iteration trace for ADMM methods, and appends a
/// row to `metrics.csv` when ground truth is available.
pub fn cmd_deblur(
    data_path: &Path,
    psf_spec: &PsfSpec,
    method: Method,
    params: &ResolvedParams,
    truth_path: Option<&Path>,
    out_dir: &Path,
) -> Result<DeblurOutputs> {
    ensure_dir(out_dir)?;
    let b_delta = read_image_auto(data_path)?;
    let psf = psf_spec.load()?;
    let truth = truth_path.map(read_image_auto).transpose()?;

    let admm_cfg = match method {
        Method::Tikhonov => None,
        _ => Some(params.admm_config()?),
    };
    let graph_cfg = params.graph_config()?;
    let run = run_method(
        method,
        &psf,
        &b_delta,
        admm_cfg.as_ref(),
        Some(&graph_cfg),
        truth.as_ref(),
    )?;

    let stem = format!("x_{method}");
    let reconstruction = write_image_pair(out_dir, &stem, &run.image)?;

    let trace_path = match &run.trace {
        Some(trace) => {
            let p = out_dir.join(format!("trace_{method}.csv"));
            std::fs::write(&p, trace.to_csv()).map_err(|e| Error::io(&p, e))?;
            Some(p)
        }
        None => None,
    };
    if let Some(reference) = &run.reference {
        let p = out_dir.join(format!("gcv_probes_{method}.csv"));
        std::fs::write(&p, gcv_probes_csv(&reference.evaluations))
            .map_err(|e| Error::io(&p, e))?;
    }

    let metrics = match &truth {
        Some(t) => {
            let report = MetricsReport::compute(&run.image, t)?;
            append_metrics_row(&out_dir.join("metrics.csv"), method.name(), &report)?;
            Some(report)
        }
        None => None,
    };

    write_json(
        &out_dir.join(format!("deblur_{method}.json")),
        &DeblurSidecar {
            method: method.to_string(),
            n: b_delta.side(),
            mu: admm_cfg.map(|c| c.mu),
            mu_gcv: run.reference.as_ref().map(|r| r.mu_gcv),
            rho: params.rho,
            tau: params.tau,
            max_iter: params.max_iter,
            iterations: run.trace.as_ref().map(|t| t.len()),
            lsqr_warnings: run.trace.as_ref().map_or(0, |t| t.inner_warnings.len()),
        },
    )?;

    Ok(DeblurOutputs {
        reconstruction,
        trace: trace_path,
        metrics,
        mu_gcv: run.reference.map(|r| r.mu_gcv),
    })
}

#[derive(Debug, Serialize)]
struct GraphReport {
    n: usize,
    r: usize,
    sigma: f64,
    mu_gcv: Option<f64>,
    g_value: Option<f64>,
    laplacian_nnz: usize,
    from_image: bool,
}

/// Outputs of the `graph` command.
#[derive(Debug)]
pub struct GraphOutputs {
    pub laplacian: PathBuf,
    pub x_star: Option<PathBuf>,
    pub mu_gcv: Option<f64>,
}

/// Builds the graph Laplacian. With `from_image` the weights come directly
/// from the given image; otherwise the full pipeline runs on blurred data:
/// reference reconstruction by generalized cross validation, then graph
/// construction from the reference.
pub fn cmd_graph(
    data_path: &Path,
    psf_spec: Option<&PsfSpec>,
    params: &ResolvedParams,
    from_image: bool,
    out_dir: &Path,
) -> Result<GraphOutputs> {
    ensure_dir(out_dir)?;
    let input = read_image_auto(data_path)?;
    let gcfg = params.graph_config()?;

    let (weights_source, reference) = if from_image {
        (input, None)
    } else {
        let psf = psf_spec
            .ok_or_else(|| Error::Config("graph command needs a PSF unless --from-image is used".into()))?
            .load()?;
        let gcv = compute_reference(&psf, &input)?;
        (gcv.x_star.clone(), Some(gcv))
    };

    let laplacian = build_laplacian(&build_adjacency(&weights_source, &gcfg)?)?;
    let lap_path = out_dir.join("laplacian.mtx");
    write_matrix_market(&lap_path, &laplacian)?;

    let mut x_star_path = None;
    if let Some(gcv) = &reference {
        x_star_path = Some(write_image_pair(out_dir, "x_star", &gcv.x_star)?);
        let p = out_dir.join("gcv_probes.csv");
        std::fs::write(&p, gcv_probes_csv(&gcv.evaluations)).map_err(|e| Error::io(&p, e))?;
    }
    write_json(
        &out_dir.join("graph_report.json"),
        &GraphReport {
            n: weights_source.side(),
            r: params.r,
            sigma: params.sigma,
            mu_gcv: reference.as_ref().map(|g| g.mu_gcv),
            g_value: reference.as_ref().map(|g| g.g_value),
            laplacian_nnz: laplacian.nnz(),
            from_image,
        },
    )?;

    Ok(GraphOutputs {
        laplacian: lap_path,
        x_star: x_star_path,
        mu_gcv: reference.map(|g| g.mu_gcv),
    })
}

/// One row of a `sweep-mu` run.
#[derive(Debug, Clone, Copy)]
pub struct SweepRow {
    pub mu: f64,
    pub report: MetricsReport,
}

/// Outputs of the `sweep-mu` command.
#[derive(Debug)]
pub struct SweepOutputs {
    pub csv: PathBuf,
    pub rows: Vec<SweepRow>,
    pub best_mu: f64,
}

/// Runs one method across a list of regularization weights, in parallel up
/// to [`thread_cap`] workers, and tabulates RRE/PSNR/SSIM against the
/// ground truth. The row minimizing RRE is flagged in the CSV.
pub fn cmd_sweep_mu(
    data_path: &Path,
    psf_spec: &PsfSpec,
    method: Method,
    params: &ResolvedParams,
    mu_list: &[f64],
    truth_path: &Path,
    out_dir: &Path,
) -> Result<SweepOutputs> {
    ensure_dir(out_dir)?;
    if mu_list.is_empty() {
        return Err(Error::Config("sweep-mu needs at least one mu value".into()));
    }
    if method == Method::Tikhonov {
        return Err(Error::Config(
            "sweep-mu applies to the l1-regularized methods; tikhonov picks mu itself".into(),
        ));
    }
    let b_delta = read_image_auto(data_path)?;
    let psf = psf_spec.load()?;
    let truth = read_image_auto(truth_path)?;
    let graph_cfg = params.graph_config()?;

    let workers = thread_cap().min(mu_list.len()).max(1);
    let run_one = |mu: f64| -> Result<MetricsReport> {
        let mut p = *params;
        p.mu = Some(mu);
        let cfg = p.admm_config()?;
        let run = run_method(method, &psf, &b_delta, Some(&cfg), Some(&graph_cfg), Some(&truth))?;
        MetricsReport::compute(&run.image, &truth)
    };

    // Round-robin work split; each worker owns its output slots, so the
    // result order (and every CSV byte) is independent of the worker count.
    let mut reports: Vec<Option<Result<MetricsReport>>> =
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let run_one = &run_one;
                    scope.spawn(move || {
                        (w..mu_list.len())
                            .step_by(workers)
                            .map(|i| (i, run_one(mu_list[i])))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            let mut out: Vec<Option<Result<MetricsReport>>> =
                (0..mu_list.len()).map(|_| None).collect();
            for handle in handles {
                for (i, report) in handle.join().expect("sweep worker panicked") {
                    out[i] = Some(report);
                }
            }
            out
        });

    let mut rows = Vec::with_capacity(mu_list.len());
    for (i, report) in reports.iter_mut().enumerate() {
        let report = report.take().expect("worker filled every slot")?;
        rows.push(SweepRow {
            mu: mu_list[i],
            report,
        });
    }
    let best = rows
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.report.rre.total_cmp(&b.report.rre))
        .map(|(i, _)| i)
        .expect("nonempty rows");

    let mut csv = String::from("mu,rre,psnr,ssim,best\n");
    for (i, row) in rows.iter().enumerate() {
        csv.push_str(&format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{}\n",
            row.mu,
            row.report.rre,
            row.report.psnr,
            row.report.ssim,
            if i == best { 1 } else { 0 }
        ));
    }
    let csv_path = out_dir.join(format!("sweep_{method}.csv"));
    std::fs::write(&csv_path, csv).map_err(|e| Error::io(&csv_path, e))?;

    Ok(SweepOutputs {
        csv: csv_path,
        best_mu: rows[best].mu,
        rows,
    })
}
