mod io;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use levelstat_core::chain::{Couplings, Parity, Sector};
use levelstat_core::equilibration::Observable;
use levelstat_core::pipeline::{self, QStatsParams, SpectrumSource};
use levelstat_core::qsum::{build_qsum_with, QSumOptions, Strategy, DEFAULT_SUM_CAP};
use levelstat_core::resonance;
use levelstat_core::rmt::sample_spectrum;
use levelstat_core::spectral::{bulk, spacings, unfold, BULK_TRIM};
use levelstat_core::stats::{self, Histogram};
use levelstat_core::{ChainSpec, EnsembleKind, EnsembleSpec, Spectrum, UnfoldingConfig};
use serde::Serialize;

use io::{dir_manifest, invalid, read_observable, read_spectrum, read_state, write_csv, write_json, Invalid};
use manifest::{manifest_path_for, ManifestBuilder};

#[derive(Parser)]
#[command(name = "levelstat", version, about = "Level statistics of q-sum spectra, equilibration bounds and spectral form factors")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Diagonalize one symmetry sector of the spin chain.
    ChainSpectrum(ChainArgs),
    /// Sample a GOE/GUE matrix and write its spectrum.
    RmtSpectrum(RmtArgs),
    /// Unfold a spectrum to unit mean spacing.
    Unfold(UnfoldArgs),
    /// Sorted sums of q distinct levels.
    Qsum(QsumArgs),
    /// Ratio and spacing statistics of a level sequence.
    Stats(StatsArgs),
    /// Violations of the q no-resonance condition.
    Resonance(ResonanceArgs),
    /// Equilibration moment and bounds for a state and observable.
    Equilibrate(EquilibrateArgs),
    /// Monte Carlo spectral form factor.
    Sff(SffArgs),
    /// End-to-end pipelines writing a directory of outputs.
    #[command(subcommand)]
    Pipeline(PipelineCommand),
}

#[derive(Args, Clone)]
#[command(allow_negative_numbers = true)]
struct ChainArgs {
    #[arg(long)]
    sites: usize,
    #[arg(long, default_value_t = 0)]
    mz: i32,
    /// Momentum index k; omit to leave translations unresolved.
    #[arg(long)]
    k: Option<usize>,
    /// Reflection parity (+1 or -1).
    #[arg(long)]
    p: Option<i8>,
    /// Spin-inversion parity (+1 or -1).
    #[arg(long)]
    z: Option<i8>,
    #[arg(long, default_value_t = Couplings::default().j1)]
    j1: f64,
    #[arg(long, default_value_t = Couplings::default().g1)]
    g1: f64,
    #[arg(long, default_value_t = Couplings::default().j2)]
    j2: f64,
    #[arg(long, default_value_t = Couplings::default().g2)]
    g2: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RmtArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long = "n", alias = "N")]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Ensemble member drawn from the seed's stream.
    #[arg(long, default_value_t = 0)]
    sample: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct UnfoldArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = UnfoldingConfig::default().alpha)]
    alpha: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct QsumArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    q: usize,
    #[arg(long, default_value_t = DEFAULT_SUM_CAP)]
    cap: u128,
    #[arg(long, value_enum, default_value_t = StrategyArg::Materialize)]
    strategy: StrategyArg,
    /// Compensated (Neumaier) summation.
    #[arg(long)]
    compensated: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Unfold before computing spacings (ratios do not need it).
    #[arg(long)]
    unfold: bool,
    #[arg(long, default_value_t = UnfoldingConfig::default().alpha)]
    alpha: usize,
    #[arg(long, default_value_t = 200)]
    bootstrap: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Summary JSON; histograms go next to it as `<stem>.ratios.csv` and
    /// `<stem>.spacings.csv`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct ResonanceArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    q: usize,
    /// Absolute tolerance; defaults to 1e-12 times the spectral width.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SUM_CAP)]
    cap: u128,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EquilibrateArgs {
    #[arg(long)]
    spectrum: PathBuf,
    /// `random` or a JSON file of amplitudes in the energy eigenbasis.
    #[arg(long, default_value = "random")]
    state: String,
    /// `random` or a JSON file with the observable in the energy eigenbasis.
    #[arg(long, default_value = "random")]
    obs: String,
    #[arg(long, default_value_t = 2)]
    q: u32,
    #[arg(long = "T", alias = "t-final", default_value_t = 1e4)]
    t_final: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SffArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long = "N", alias = "n")]
    n: usize,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 0.1)]
    tmin: f64,
    #[arg(long, default_value_t = 2000.0)]
    tmax: f64,
    #[arg(long, default_value_t = 200)]
    points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Curve CSV; the summary is written to `<out>.summary.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum PipelineCommand {
    /// Spectrum → q-sums → ratio/spacing statistics, histograms and
    /// reference curves.
    Qstats(PipelineQstatsArgs),
    /// Spectrum → random state and observable → moment and bounds.
    Equilibration(PipelineEquilibrationArgs),
    /// Sampled spectra → empirical and analytic form factor.
    Sff(PipelineSffArgs),
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct SourceArgs {
    #[arg(long, value_enum)]
    source: SourceKind,
    /// Matrix side for goe/gue sources.
    #[arg(long = "n", alias = "N")]
    n: Option<usize>,
    /// Ensemble members for goe/gue sources.
    #[arg(long, default_value_t = 1)]
    samples: usize,
    /// Chain length for the chain source (maximally resolved sector).
    #[arg(long)]
    sites: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct PipelineQstatsArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, default_value_t = 1)]
    q: usize,
    #[arg(long)]
    unfold_input: bool,
    #[arg(long, default_value_t = UnfoldingConfig::default().alpha)]
    alpha: usize,
    #[arg(long, default_value_t = 200)]
    bootstrap: usize,
    #[arg(long, default_value_t = 401)]
    reference_points: usize,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct PipelineEquilibrationArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, default_value_t = 2)]
    q: u32,
    #[arg(long = "T", alias = "t-final", default_value_t = 1e3)]
    t_final: f64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct PipelineSffArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long = "N", alias = "n")]
    n: usize,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 0.1)]
    tmin: f64,
    #[arg(long, default_value_t = 2000.0)]
    tmax: f64,
    #[arg(long, default_value_t = 200)]
    points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Goe,
    Gue,
}

impl From<Kind> for EnsembleKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Goe => EnsembleKind::Goe,
            Kind::Gue => EnsembleKind::Gue,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SourceKind {
    Chain,
    Goe,
    Gue,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Materialize,
    HeapMerge,
}

fn parity(v: Option<i8>, name: &str) -> Result<Option<Parity>> {
    v.map(|x| Parity::try_from(x).map_err(|e| invalid(format!("--{name}: {e}"))))
        .transpose()
}

impl ChainArgs {
    fn spec(&self) -> Result<ChainSpec> {
        let couplings = Couplings {
            j1: self.j1,
            g1: self.g1,
            j2: self.j2,
            g2: self.g2,
        };
        let sector = Sector {
            mz: self.mz,
            momentum: self.k,
            reflection: parity(self.p, "p")?,
            spin_flip: parity(self.z, "z")?,
        };
        Ok(ChainSpec::new(self.sites, couplings, sector)?)
    }
}

impl SourceArgs {
    fn source(&self) -> Result<SpectrumSource> {
        match self.source {
            SourceKind::Chain => {
                let sites = self.sites.ok_or_else(|| invalid("--sites is required for the chain source"))?;
                Ok(SpectrumSource::Chain {
                    spec: ChainSpec::maximally_resolved(sites)?,
                })
            }
            SourceKind::Goe | SourceKind::Gue => {
                let kind = if matches!(self.source, SourceKind::Goe) {
                    EnsembleKind::Goe
                } else {
                    EnsembleKind::Gue
                };
                let n = self.n.ok_or_else(|| invalid("--n is required for goe/gue sources"))?;
                Ok(SpectrumSource::Ensemble {
                    spec: EnsembleSpec::new(kind, n, self.seed)?,
                    samples: self.samples,
                })
            }
        }
    }
}

fn finish(manifest: ManifestBuilder, out: &Path) -> Result<()> {
    manifest.finish(&manifest_path_for(out))?;
    Ok(())
}

fn chain_spectrum(args: &ChainArgs) -> Result<()> {
    let mut m = ManifestBuilder::new();
    let spectrum = pipeline::chain_spectrum(&args.spec()?)?;
    write_json(&args.out, &spectrum, &args.out, &mut m)?;
    finish(m, &args.out)
}

fn rmt_spectrum(args: &RmtArgs) -> Result<()> {
    let mut m = ManifestBuilder::new();
    m.seed(args.seed);
    let spec = EnsembleSpec::new(args.kind.into(), args.n, args.seed)?;
    let spectrum = sample_spectrum(&spec, args.sample)?;
    write_json(&args.out, &spectrum, &args.out, &mut m)?;
    finish(m, &args.out)
}

fn unfold_cmd(args: &UnfoldArgs) -> Result<()> {
    let mut m = ManifestBuilder::new();
    let spectrum = read_spectrum(&args.input, &mut m)?;
    let unfolded = unfold(&spectrum, UnfoldingConfig::with_alpha(args.alpha))?;
    write_json(&args.out, &unfolded, &args.out, &mut m)?;
    finish(m, &args.out)
}

fn qsum_cmd(args: &QsumArgs) -> Result<()> {
    let mut m = ManifestBuilder::new();
    let spectrum = read_spectrum(&args.input, &mut m)?;
    let options = QSumOptions {
        cap: args.cap,
        strategy: match args.strategy {
            StrategyArg::Materialize => Strategy::Materialize,
            StrategyArg::HeapMerge => Strategy::HeapMerge,
        },
        compensated: args.compensated,
    };
    let sums = build_qsum_with(&spectrum, args.q, &options)?.to_spectrum();
    write_json(&args.out, &sums, &args.out, &mut m)?;
    finish(m, &args.out)
}

#[derive(Serialize)]
struct StatsSummary {
    levels: usize,
    unfolded: bool,
    ratio_count: usize,
    zero_pairs: usize,
    mean_ratio: f64,
    mean_ratio_stderr: f64,
    ks_goe_ratio: Option<f64>,
    ks_poisson_ratio: Option<f64>,
    spacing_count: usize,
    ks_wigner_spacing: Option<f64>,
    ks_poisson_spacing: Option<f64>,
    references: stats::MeanRatioReferences,
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.{suffix}"))
}

fn ks_if_enough(samples: &[f64], cdf: fn(f64) -> f64) -> Result<Option<f64>> {
    if samples.len() < stats::KS_MIN_SAMPLES {
        return Ok(None);
    }
    Ok(Some(stats::ks_distance(samples, cdf)?))
}

fn stats_cmd(args: &StatsArgs) -> Result<()> {
    let mut m = ManifestBuilder::new();
    m.seed(args.seed);
    let spectrum = read_spectrum(&args.input, &mut m)?;
    let levels = if args.unfold {
        unfold(&spectrum, UnfoldingConfig::with_alpha(args.alpha))?.epsilons
    } else {
        spectrum.energies.clone()
    };
    let gaps = spacings(&levels);
    let trimmed = bulk(&gaps, BULK_TRIM);
    let r = stats::ratios(trimmed)?;
    let boot = stats::bootstrap_mean(&r.ratios, args.bootstrap.max(2), args.seed)?;
    let summary = StatsSummary {
        levels: levels.len(),
        unfolded: args.unfold,
        ratio_count: r.count(),
        zero_pairs: r.zero_pairs,
        mean_ratio: r.mean,
        mean_ratio_stderr: boot.stderr,
        ks_goe_ratio: ks_if_enough(&r.ratios, stats::goe_ratio_cdf)?,
        ks_poisson_ratio: ks_if_enough(&r.ratios, stats::poisson_ratio_cdf)?,
        spacing_count: trimmed.len(),
        ks_wigner_spacing: if args.unfold { ks_if_enough(trimmed, stats::wigner_cdf)? } else { None },
        ks_poisson_spacing: if args.unfold { ks_if_enough(trimmed, stats::poisson_spacing_cdf)? } else { None },
        references: stats::mean_ratio_references(),
    };
    write_json(&args.out, &summary, &args.out, &mut m)?;
    write_csv(&sibling(&args.out, "ratios.csv"), &Histogram::ratios(&r.ratios)?.to_csv(), &args.out, &mut m)?;
    if args.unfold {
        write_csv(&sibling(&args.out, "spacings.csv"), &Histogram::spacings(trimmed)?.to_csv(), &args.out, &mut m)?;
    }
    finish(m, &args.out)
}

#[derive(Serialize)]
struct ResonanceReport {
    q: usize,
    tolerance: f64,
    violations: usize,
    exceptional: resonance::ViolatorMultiplicity,
    pairs: Vec<resonance::ViolationPair>,
}

fn resonance_cmd(args: &ResonanceArgs) -> Result<()> {
    let mut m = ManifestBuilder::new();
    let spectrum = read_spectrum(&args.input, &mut m)?;
    let tol = args.tol.unwrap_or_else(|| resonance::default_tolerance(&spectrum));
    let set = resonance::find_violations_capped(&spectrum, args.q, tol, args.cap)?;
    let report = ResonanceReport {
        q: set.q,
        tolerance: set.tolerance,
        violations: set.cardinality(),
        exceptional: resonance::exceptional_multiplicity(&set),
        pairs: set.pairs,
    };
    write_json(&args.out, &report, &args.out, &mut m)?;
    finish(m, &args.out)
}

fn equilibrate_cmd(args: &EquilibrateArgs) -> Result<()> {
    let mut m = ManifestBuilder::new();
    m.seed(args.seed);
    let spectrum = read_spectrum(&args.spectrum, &mut m)?;
    let state = match args.state.as_str() {
        "random" => None,
        path => Some(read_state(Path::new(path), &mut m)?),
    };
    let observable = match args.obs.as_str() {
        "random" => None,
        path => Some(Observable::new(read_observable(Path::new(path), &mut m)?)?),
    };
    let report = pipeline::equilibration(&spectrum.energies, state, observable, args.q, args.t_final, args.seed)?;
    write_json(&args.out, &report, &args.out, &mut m)?;
    finish(m, &args.out)
}

fn sff_run(
    kind: Kind,
    n: usize,
    samples: usize,
    (tmin, tmax, points): (f64, f64, usize),
    seed: u64,
    curve_out: &Path,
    summary_out: &Path,
    manifest_for: &Path,
) -> Result<()> {
    let mut m = ManifestBuilder::new();
    m.seed(seed);
    let spec = EnsembleSpec::new(kind.into(), n, seed)?;
    let times = levelstat_core::formfactor::linear_grid(tmin, tmax, points)?;
    let (curve, summary) = pipeline::sff(&spec, &times, samples)?;
    write_csv(curve_out, &curve.to_csv(), manifest_for, &mut m)?;
    write_json(summary_out, &summary, manifest_for, &mut m)?;
    finish(m, manifest_for)
}

fn sff_cmd(args: &SffArgs) -> Result<()> {
    let summary = sibling(&args.out, "summary.json");
    sff_run(
        args.kind,
        args.n,
        args.samples,
        (args.tmin, args.tmax, args.points),
        args.seed,
        &args.out,
        &summary,
        &args.out,
    )
}

fn pipeline_qstats(args: &PipelineQstatsArgs) -> Result<()> {
    let mut m = ManifestBuilder::new();
    m.seed(args.source.seed);
    let anchor = dir_manifest(&args.out_dir);
    let spectra = args.source.source()?.spectra()?;
    let params = QStatsParams {
        q: args.q,
        unfold_input: args.unfold_input,
        alpha: args.alpha,
        bootstrap_resamples: args.bootstrap,
        seed: args.source.seed,
    };
    let out = pipeline::qstats(&spectra, &params)?;
    let dir = &args.out_dir;
    write_json(&dir.join("summary.json"), &out.summary, &anchor, &mut m)?;
    write_csv(&dir.join("ratio_histogram.csv"), &out.ratio_histogram.to_csv(), &anchor, &mut m)?;
    write_csv(&dir.join("spacing_histogram.csv"), &out.spacing_histogram.to_csv(), &anchor, &mut m)?;
    let (spacing_ref, ratio_ref) = pipeline::reference_curves(args.reference_points)?;
    write_csv(&dir.join("reference_spacing.csv"), &spacing_ref, &anchor, &mut m)?;
    write_csv(&dir.join("reference_ratio.csv"), &ratio_ref, &anchor, &mut m)?;
    finish(m, &anchor)
}

fn pipeline_equilibration(args: &PipelineEquilibrationArgs) -> Result<()> {
    let mut m = ManifestBuilder::new();
    m.seed(args.source.seed);
    let anchor = dir_manifest(&args.out_dir);
    let spectra = args.source.source()?.spectra()?;
    let spectrum: &Spectrum = spectra.first().ok_or_else(|| invalid("no spectrum produced"))?;
    let report = pipeline::equilibration(&spectrum.energies, None, None, args.q, args.t_final, args.source.seed)?;
    write_json(&args.out_dir.join("spectrum.json"), spectrum, &anchor, &mut m)?;
    write_json(&args.out_dir.join("summary.json"), &report, &anchor, &mut m)?;
    finish(m, &anchor)
}

fn pipeline_sff(args: &PipelineSffArgs) -> Result<()> {
    let anchor = dir_manifest(&args.out_dir);
    sff_run(
        args.kind,
        args.n,
        args.samples,
        (args.tmin, args.tmax, args.points),
        args.seed,
        &args.out_dir.join("sff.csv"),
        &args.out_dir.join("summary.json"),
        &anchor,
    )
}

fn run(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(invalid("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match &cli.command {
        Command::ChainSpectrum(a) => chain_spectrum(a),
        Command::RmtSpectrum(a) => rmt_spectrum(a),
        Command::Unfold(a) => unfold_cmd(a),
        Command::Qsum(a) => qsum_cmd(a),
        Command::Stats(a) => stats_cmd(a),
        Command::Resonance(a) => resonance_cmd(a),
        Command::Equilibrate(a) => equilibrate_cmd(a),
        Command::Sff(a) => sff_cmd(a),
        Command::Pipeline(PipelineCommand::Qstats(a)) => pipeline_qstats(a),
        Command::Pipeline(PipelineCommand::Equilibration(a)) => pipeline_equilibration(a),
        Command::Pipeline(PipelineCommand::Sff(a)) => pipeline_sff(a),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Invalid>().is_some() {
        return 2;
    }
    match err.downcast_ref::<levelstat_core::Error>() {
        Some(e) if e.is_validation() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
