//! Command-line front end.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

use crate::band::BandedSymmetricMatrix;
use crate::domain::{domain_mesh, EtaFloor, SpectralDomain, SpectralParameter};
use crate::error::{Error, Result};
use crate::harness::{run_to_dir, selftest::run_selftest, ExperimentConfig, ExperimentKind};
use crate::models::{beta_limit_matrix, green_closed_form, laplacian_1d, laplacian_trace};
use crate::noise::{build_noise_seeded, NoiseFamily, NoiseSpec};
use crate::resolvent::GreenReport;
use crate::spectrum::{
    delocalization_report_with, empirical_vs_arcsine, reduce_to_tridiagonal, rigidity_report, wegner_check_with,
    DelocalizationReport, RigidityReport, SpectralDecomposition, WegnerCheck,
};

#[derive(Parser, Debug)]
#[command(name = "heavyband", version, about = "Green functions and spectra of 1d operators with heavy-tailed banded noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Green-function entries and trace of one matrix over a z-mesh, as JSON.
    Green(GreenArgs),
    /// Eigenvalues (CSV) and spectral statistics (JSON) of one matrix.
    Spectrum(SpectrumArgs),
    /// Run or list Monte Carlo experiments.
    Experiment {
        #[command(subcommand)]
        action: ExperimentAction,
    },
    /// Run the deterministic invariant suite.
    Selftest,
}

#[derive(Subcommand, Debug)]
enum ExperimentAction {
    /// Run an experiment; writes trials.jsonl, report.json and summary.csv.
    Run {
        name: String,
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// List the available experiments.
    List,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Model {
    Laplacian,
    #[value(name = "beta_limit")]
    BetaLimit,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Family {
    Zero,
    Pareto,
    #[value(name = "stable_cms")]
    StableCms,
    Truncated,
    #[value(name = "heavier_moment")]
    HeavierMoment,
}

#[derive(Args, Debug)]
struct MatrixArgs {
    #[arg(long, value_enum, default_value = "laplacian")]
    model: Model,
    #[arg(long = "N")]
    n: usize,
    #[arg(long, value_enum, default_value = "zero")]
    family: Family,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long = "K", default_value_t = 0)]
    bandwidth: usize,
    #[arg(long, default_value_t = 0.25)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Truncation parameter for the truncated family.
    #[arg(long)]
    q: Option<f64>,
}

impl MatrixArgs {
    fn noise(&self) -> NoiseSpec {
        let family = match self.family {
            Family::Zero => NoiseFamily::Zero,
            Family::Pareto => NoiseFamily::Pareto,
            Family::StableCms => NoiseFamily::StableCms,
            Family::Truncated => NoiseFamily::Truncated,
            Family::HeavierMoment => NoiseFamily::HeavierMoment,
        };
        let mut spec = NoiseSpec::new(family, self.alpha, self.bandwidth)
            .with_sigma(self.sigma)
            .with_delta(self.delta)
            .with_seed(self.seed);
        if family == NoiseFamily::Truncated {
            spec = match self.q {
                Some(q) => spec.with_q(q),
                None => spec.with_omega(0.4),
            };
        }
        spec
    }

    fn base(&self) -> Result<BandedSymmetricMatrix> {
        if self.n == 0 {
            return Err(Error::Config("--N must be positive".into()));
        }
        Ok(match self.model {
            Model::Laplacian => laplacian_1d(self.n),
            Model::BetaLimit => beta_limit_matrix(self.n),
        })
    }

    /// Model matrix plus noise, and whether the noise vanishes.
    fn build(&self) -> Result<(BandedSymmetricMatrix, bool)> {
        let a = build_noise_seeded(self.n, &self.noise())?;
        Ok((self.base()?.add(&a)?, a.is_zero()))
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum EntrySelection {
    Diagonal,
    Band,
    Full,
}

#[derive(Args, Debug)]
struct GreenArgs {
    #[command(flatten)]
    matrix: MatrixArgs,
    /// Energies; with --eta forms the z-mesh. Without them the domain mesh is used.
    #[arg(long = "E", num_args = 1.., allow_negative_numbers = true)]
    energies: Vec<f64>,
    #[arg(long = "eta", num_args = 1..)]
    etas: Vec<f64>,
    #[arg(long, default_value_t = 0.4)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.5)]
    kappa: f64,
    #[arg(long, default_value_t = 9)]
    n_e: usize,
    #[arg(long, default_value_t = 6)]
    n_eta: usize,
    #[arg(long, value_enum, default_value = "diagonal")]
    entries: EntrySelection,
    /// Write the JSON here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[command(flatten)]
    matrix: MatrixArgs,
    #[arg(long, default_value_t = 0.4)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.5)]
    kappa: f64,
    #[arg(long, default_value_t = 3)]
    p: u32,
    #[arg(long)]
    output_dir: PathBuf,
    /// Also write every eigenvector to eigenvectors.bin.
    #[arg(long)]
    eigenvectors: bool,
}

#[derive(Serialize)]
struct SpectrumSummary {
    #[serde(rename = "N")]
    n: usize,
    model: &'static str,
    noise: NoiseSpec,
    eigenvalues_file: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    eigenvectors_file: Option<String>,
    arcsine_distance: f64,
    rigidity: RigidityReport,
    wegner: Vec<WegnerEntry>,
    delocalization: DelocalizationReport,
}

#[derive(Serialize)]
struct WegnerEntry {
    z: SpectralParameter,
    #[serde(flatten)]
    check: WegnerCheck,
}

fn green(args: &GreenArgs) -> Result<String> {
    let (h, _) = args.matrix.build()?;
    let n = h.n();
    let zs: Vec<SpectralParameter> = if args.energies.is_empty() && args.etas.is_empty() {
        domain_mesh(&SpectralDomain::new(args.epsilon, args.kappa), n, args.n_e, args.n_eta)?
    } else {
        if args.energies.is_empty() || args.etas.is_empty() {
            return Err(Error::Config("--E and --eta must be given together".into()));
        }
        let mut zs = Vec::new();
        for &e in &args.energies {
            for &eta in &args.etas {
                zs.push(SpectralParameter::new(e, eta)?);
            }
        }
        zs
    };
    let width = h.bandwidth().max(1);
    let pairs: Vec<(usize, usize)> = match args.entries {
        EntrySelection::Diagonal => (0..n).map(|i| (i, i)).collect(),
        EntrySelection::Band => (0..n).flat_map(|i| (i..=(i + width).min(n - 1)).map(move |j| (i, j))).collect(),
        EntrySelection::Full => (0..n).flat_map(|j| (0..n).map(move |i| (i, j))).collect(),
    };
    let laplacian = args.matrix.model == Model::Laplacian;
    let mut reports = Vec::with_capacity(zs.len());
    for z in zs {
        let closed = move |i: usize, j: usize| -> Result<Complex64> { green_closed_form(n, z, i, j) };
        let reference: Option<&dyn Fn(usize, usize) -> Result<Complex64>> = if laplacian { Some(&closed) } else { None };
        let trace_reference = if laplacian { Some(laplacian_trace(n, z)?) } else { None };
        reports.push(GreenReport::compute(&h, z, &pairs, reference, trace_reference)?);
    }
    Ok(serde_json::to_string_pretty(&reports)?)
}

fn spectrum(args: &SpectrumArgs) -> Result<String> {
    let (h, _) = args.matrix.build()?;
    let n = h.n();
    let domain = SpectralDomain::new(args.epsilon, args.kappa)
        .with_scaling(args.matrix.sigma, args.matrix.alpha, EtaFloor::Trace)
        .with_removal(args.matrix.bandwidth, args.p);
    domain.validate()?;
    std::fs::create_dir_all(&args.output_dir)?;
    let t = reduce_to_tridiagonal(&h);
    let mut dec = SpectralDecomposition {
        eigenvalues: crate::spectrum::eigenvalues_bisection(&t, None),
        eigenvectors: Vec::new(),
    };
    let eig_path = args.output_dir.join("eigenvalues.csv");
    dec.write_csv(&eig_path)?;
    let eigenvectors_file = if args.eigenvectors {
        let all: Vec<usize> = (0..n).collect();
        dec = dec.with_eigenvectors(&h, &all, args.matrix.seed)?;
        let path = args.output_dir.join("eigenvectors.bin");
        dec.write_eigenvectors(&path)?;
        Some("eigenvectors.bin".to_string())
    } else {
        None
    };
    let mut wegner = Vec::new();
    for z in domain_mesh(&domain, n, 9, 6)? {
        wegner.push(WegnerEntry {
            z,
            check: wegner_check_with(&t, &h, z)?,
        });
    }
    let summary = SpectrumSummary {
        n,
        model: match args.matrix.model {
            Model::Laplacian => "laplacian",
            Model::BetaLimit => "beta_limit",
        },
        noise: args.matrix.noise(),
        eigenvalues_file: "eigenvalues.csv".into(),
        eigenvectors_file,
        arcsine_distance: empirical_vs_arcsine(&dec.eigenvalues, n, args.kappa),
        rigidity: rigidity_report(&dec.eigenvalues, n, args.kappa)?,
        wegner,
        delocalization: delocalization_report_with(
            &h,
            &dec.eigenvalues,
            args.kappa,
            &domain.removal_set(),
            domain.eta_floor(n),
            args.matrix.seed,
        )?,
    };
    let text = serde_json::to_string_pretty(&summary)?;
    std::fs::write(args.output_dir.join("spectrum.json"), format!("{text}\n"))?;
    Ok(format!(
        "wrote {} and {}",
        eig_path.display(),
        args.output_dir.join("spectrum.json").display()
    ))
}

fn experiment_run(name: &str, config: &Path, output_dir: &Option<PathBuf>) -> Result<String> {
    let mut cfg = ExperimentConfig::load(config)?;
    if ExperimentKind::from_name(name).is_none() {
        return Err(Error::Config(format!("unknown experiment '{name}'")));
    }
    if cfg.experiment != name {
        return Err(Error::Config(format!(
            "config is for experiment '{}', not '{name}'",
            cfg.experiment
        )));
    }
    if let Some(dir) = output_dir {
        cfg.output_dir = dir.clone();
    }
    let (report, out) = run_to_dir(&cfg, &cfg.output_dir)?;
    let mut text = String::new();
    for v in &report.verdicts {
        text.push_str(&format!("{} {}: {}\n", if v.passed { "PASS" } else { "FAIL" }, v.criterion, v.detail));
    }
    text.push_str(&format!(
        "wrote {}, {}, {}",
        out.trials.display(),
        out.report.display(),
        out.summary.display()
    ));
    Ok(text)
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code: 0 on success, 1 on usage or validation errors, 2 when
/// the self-test fails.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Green(a) => green(a).map(|s| match &a.output {
            Some(path) => std::fs::write(path, s + "\n").map(|_| String::new()).map_err(Error::from),
            None => Ok(s),
        }),
        Command::Spectrum(a) => spectrum(a).map(Ok),
        Command::Experiment { action } => match action {
            ExperimentAction::Run {
                name,
                config,
                output_dir,
            } => experiment_run(name, config, output_dir).map(Ok),
            ExperimentAction::List => Ok(Ok(ExperimentKind::ALL
                .iter()
                .map(|k| format!("{:<20} {}", k.name(), k.description()))
                .collect::<Vec<_>>()
                .join("\n"))),
        },
        Command::Selftest => {
            let results = run_selftest();
            for r in &results {
                println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
            }
            return if results.iter().all(|r| r.passed) { 0 } else { 2 };
        }
    };
    match result.and_then(|r| r) {
        Ok(s) => {
            if !s.is_empty() {
                println!("{s}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
