//! `icct`: sideband thermometry of trapped-ion crystals from the command line.

mod output;

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use icct_core::coefficients::{coefficient_set, verify_tables};
use icct_core::crystal::{Axis, ModeSpec};
use icct_core::dynamics::{exact_flop, CrystalModel, ExcitationModel, SidebandKind, SingleIonModel};
use icct_core::estimators::bichromatic::{estimate_bichromatic, BichromaticData};
use icct_core::estimators::fisher::{crb_curves, estimator_sigma, fisher_binary, single_ion_blue_fisher_zeros};
use icct_core::estimators::fit::{fit_estimator, red_points, FitResult};
use icct_core::estimators::heating::{heating_fit, HeatingPoint};
use icct_core::estimators::{estimate_sideband_ratio_with, EstimateReport, MeasurementSet, RatioOptions, SidebandRecord};
use icct_core::figures;
use icct_core::ratio::RatioPolynomial;
use icct_core::sampling::{
    cutoff_time_with, naive_vs_global_demo, sample_campaign, validate_estimator_moments, CampaignConfig, CutoffOptions,
    CUTOFF_GT_MAX,
};
use icct_core::{Error, Result};
use output::Output;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "icct", version, about = "Temperature estimation for trapped-ion crystals from sideband data")]
struct Cli {
    /// Worker threads for parallel sections.
    #[arg(long, global = true, env = "ICCT_THREADS")]
    threads: Option<usize>,

    /// Seed for commands that draw random numbers.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory receiving result files and manifest.json.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Normal modes of a linear chain as mode objects.
    Modes(ModesArgs),
    /// The 22 coefficients and the ratio polynomial of a mode.
    Coeffs(ModeArg),
    /// R_t(n̄) versus gt.
    RatioTable(RatioTableArgs),
    /// Exact sideband flop, optionally sampled into a measurement file.
    Simulate(SimulateArgs),
    /// Temperature from a measurement file.
    Estimate(EstimateArgs),
    /// Weighted least-squares fit of the red sideband flop.
    Fit(FitArgs),
    /// Maximum-likelihood estimate from bichromatic single-ion data.
    Bichromatic(BichromaticArgs),
    /// Monte Carlo check of the estimator bias and variance.
    Montecarlo(MontecarloArgs),
    /// Largest gt for which the ratio polynomial stays within epsilon.
    Cutoff(CutoffArgs),
    /// Fisher information of the sideband measurement versus gt.
    Fisher(FisherArgs),
    /// Estimator uncertainty and Cramér–Rao bounds versus n̄.
    Crb(CrbArgs),
    /// Mean-excitation ratio against the global-probability ratio.
    DemoNaive(DemoNaiveArgs),
    /// Weighted linear fit of n̄ against delay.
    HeatingFit(HeatingArgs),
    /// CSV data for the figures, with schema files.
    Figures(FiguresArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AxisArg {
    Axial,
    Transverse,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Ratio,
    Fit,
    Bichromatic,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Figure {
    Fig2,
    Fig3,
    Fig4,
    Fig6,
    All,
}

#[derive(Debug, Args)]
struct ModeArg {
    /// Mode file (JSON).
    #[arg(long)]
    mode: PathBuf,
}

#[derive(Debug, Args)]
struct ModesArgs {
    #[arg(long)]
    n: usize,
    /// Radial over axial trap frequency.
    #[arg(long, default_value_t = 10.0)]
    anisotropy: f64,
    #[arg(long, value_enum, default_value = "transverse")]
    axis: AxisArg,
    /// Sideband Rabi frequency g in rad/s written into each mode.
    #[arg(long, default_value_t = 1.0)]
    g: f64,
}

#[derive(Debug, Args)]
struct RatioTableArgs {
    #[arg(long)]
    mode: PathBuf,
    #[arg(long)]
    nbar: f64,
    #[arg(long)]
    gt_max: f64,
    #[arg(long, default_value_t = 200)]
    points: usize,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    mode: PathBuf,
    #[arg(long)]
    nbar: f64,
    /// r or b.
    #[arg(long, default_value = "r")]
    sideband: SidebandKind,
    /// `start:stop:count` or a comma-separated list of gt values.
    #[arg(long, value_parser = parse_grid)]
    gt_grid: GtGrid,
    /// Shots per sideband; with --measurements, draws binomial counts.
    #[arg(long)]
    shots: Option<u64>,
    /// Measurement file written from the sampled counts.
    #[arg(long, requires = "shots")]
    measurements: Option<PathBuf>,
    /// CSV destination instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[arg(long)]
    data: PathBuf,
    /// Upper gt limit; derived from the data when absent.
    #[arg(long)]
    cutoff_gt: Option<f64>,
    #[arg(long, value_enum, default_value = "ratio")]
    method: Method,
    /// Per-time estimates as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Drop per-time estimates this many sample deviations from the mean.
    #[arg(long)]
    outlier_sigma: Option<f64>,
    #[command(flatten)]
    cutoff: CutoffFlags,
    /// Upper end of the n̄ search for the fit.
    #[arg(long, default_value_t = 5.0)]
    nbar_max: f64,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 5.0)]
    nbar_max: f64,
}

#[derive(Debug, Args)]
struct BichromaticArgs {
    #[arg(long)]
    data: PathBuf,
}

#[derive(Debug, Args)]
struct MontecarloArgs {
    /// Campaign configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Args)]
struct CutoffFlags {
    /// Tolerance on |R_t inversion − n̄|.
    #[arg(long, default_value_t = 5e-3)]
    epsilon: f64,
    /// Treat epsilon as relative to n̄.
    #[arg(long)]
    epsilon_relative: bool,
    /// Upper end of the cutoff scan in gt.
    #[arg(long, default_value_t = CUTOFF_GT_MAX)]
    scan_max: f64,
}

impl CutoffFlags {
    fn options(&self) -> CutoffOptions {
        CutoffOptions {
            epsilon: self.epsilon,
            relative: self.epsilon_relative,
            gt_max: self.scan_max,
            ..CutoffOptions::default()
        }
    }
}

#[derive(Debug, Args)]
struct CutoffArgs {
    #[arg(long)]
    mode: PathBuf,
    #[arg(long)]
    nbar: f64,
    #[command(flatten)]
    flags: CutoffFlags,
}

#[derive(Debug, Args)]
struct FisherArgs {
    #[arg(long)]
    mode: PathBuf,
    #[arg(long)]
    nbar: f64,
    #[arg(long, default_value_t = TAU)]
    gt_max: f64,
    #[arg(long, default_value_t = 400)]
    points: usize,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CrbArgs {
    #[arg(long)]
    mode: PathBuf,
    /// Comma-separated n̄ values.
    #[arg(long, value_delimiter = ',', required = true)]
    nbar: Vec<f64>,
    #[command(flatten)]
    cutoff: CutoffFlags,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DemoNaiveArgs {
    #[arg(long, default_value_t = 19)]
    n: usize,
    #[arg(long, default_value_t = 5.0)]
    nbar: f64,
    #[arg(long, default_value_t = 4.0)]
    gt_max: f64,
    #[arg(long, default_value_t = 400)]
    points: usize,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct HeatingArgs {
    /// `DELAY_S:REPORT.json`, repeatable; reports as written by `estimate`.
    #[arg(long = "report")]
    reports: Vec<String>,
    /// JSON list of {delay_s, nbar, sigma}.
    #[arg(long)]
    points: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FiguresArgs {
    #[arg(long, value_enum, default_value = "all")]
    which: Figure,
    /// n̄ values for fig6.
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.02,0.05,0.1,0.2,0.5,1,1.5,2,3,4,6")]
    nbar: Vec<f64>,
}

#[derive(Debug, Clone)]
struct GtGrid(Vec<f64>);

fn parse_grid(s: &str) -> std::result::Result<GtGrid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let values = if parts.len() == 3 {
        let start: f64 = parts[0].trim().parse().map_err(|e| format!("start: {e}"))?;
        let stop: f64 = parts[1].trim().parse().map_err(|e| format!("stop: {e}"))?;
        let count: usize = parts[2].trim().parse().map_err(|e| format!("count: {e}"))?;
        match count {
            0 => return Err("count must be positive".into()),
            1 => vec![start],
            _ => (0..count).map(|k| start + (stop - start) * k as f64 / (count - 1) as f64).collect(),
        }
    } else {
        s.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}")))
            .collect::<std::result::Result<Vec<_>, _>>()?
    };
    if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err("gt values must be finite and non-negative".into());
    }
    Ok(GtGrid(values))
}

fn load_mode(out: &mut Output, path: &Path) -> Result<ModeSpec> {
    out.input(path);
    ModeSpec::load(path)
}

fn read_json<T: serde::de::DeserializeOwned>(out: &mut Output, path: &Path) -> Result<T> {
    out.input(path);
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    Ok(serde_json::from_str(&text)?)
}

fn model_for(mode: &ModeSpec, nbar_max: f64, gt_max: f64) -> Result<Box<dyn ExcitationModel>> {
    if mode.n_ions() == 1 {
        Ok(Box::new(SingleIonModel))
    } else {
        Ok(Box::new(CrystalModel::new(mode, nbar_max, gt_max)?))
    }
}

#[derive(Serialize)]
struct Coeffs {
    label: String,
    n_ions: usize,
    #[serde(rename = "A")]
    a: f64,
    #[serde(rename = "B1")]
    b1: f64,
    #[serde(rename = "B2")]
    b2: f64,
    #[serde(rename = "C")]
    c: [f64; 5],
    #[serde(rename = "D")]
    d: [f64; 14],
    /// Ascending coefficients in n̄ of P2, P3, P4.
    p2: Vec<f64>,
    p3: Vec<f64>,
    p4: Vec<f64>,
}

fn coeffs(out: &mut Output, a: &ModeArg) -> Result<()> {
    let mode = load_mode(out, &a.mode)?;
    let c = coefficient_set(&mode);
    let poly = RatioPolynomial::for_mode(&mode);
    out.json(
        "coeffs",
        &Coeffs {
            label: mode.label.clone(),
            n_ions: mode.n_ions(),
            a: c.a,
            b1: c.b1,
            b2: c.b2,
            c: c.c,
            d: c.d,
            p2: poly.p2_poly().coeffs().to_vec(),
            p3: poly.p3_poly().coeffs().to_vec(),
            p4: poly.p4_poly().coeffs().to_vec(),
        },
    )
}

#[derive(Serialize)]
struct RatioRow {
    gt: f64,
    ratio: f64,
    ratio_over_nbar: f64,
}

fn ratio_table(out: &mut Output, a: &RatioTableArgs) -> Result<()> {
    let mode = load_mode(out, &a.mode)?;
    if a.points < 2 || !(a.gt_max > 0.0) {
        return Err(Error::InvalidInput("need points >= 2 and gt-max > 0".into()));
    }
    let poly = RatioPolynomial::for_mode(&mode);
    let rows: Vec<RatioRow> = (0..a.points)
        .map(|k| {
            let gt = a.gt_max * k as f64 / (a.points - 1) as f64;
            let r = poly.value(a.nbar, gt);
            RatioRow {
                gt,
                ratio: r,
                ratio_over_nbar: r / a.nbar,
            }
        })
        .collect();
    out.csv("ratio_table", &rows, None, true)
}

#[derive(Serialize)]
struct FlopRow {
    gt: f64,
    t_s: f64,
    p_global: f64,
    p_mean: f64,
}

fn simulate(out: &mut Output, a: &SimulateArgs, seed: u64) -> Result<()> {
    let mode = load_mode(out, &a.mode)?;
    let grid = &a.gt_grid.0;
    let flop = exact_flop(&mode, a.sideband, a.nbar, grid)?;
    let rows: Vec<FlopRow> = grid
        .iter()
        .enumerate()
        .map(|(k, &gt)| FlopRow {
            gt,
            t_s: gt / mode.g,
            p_global: flop.p_global[k],
            p_mean: flop.p_mean[k],
        })
        .collect();
    out.csv("flop", &rows, a.csv.as_deref(), true)?;
    if let (Some(shots), Some(path)) = (a.shots, &a.measurements) {
        let gt_max = grid.iter().fold(0.0f64, |m, x| m.max(*x));
        let model = model_for(&mode, a.nbar, gt_max.max(1e-6))?;
        let config = CampaignConfig {
            mode: mode.clone(),
            nbar_true: a.nbar,
            gt_grid: grid.clone(),
            shots_per_sideband: shots,
            seed,
            trials: 1,
        };
        let records = sample_campaign(&config, model.as_ref(), 0)?;
        let set = MeasurementSet { mode, records };
        out.file(path, &(serde_json::to_string_pretty(&set)? + "\n"))?;
    }
    Ok(())
}

fn load_measurements(out: &mut Output, path: &Path) -> Result<MeasurementSet> {
    out.input(path);
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    if text.trim().is_empty() {
        return Err(Error::NoUsableRecords(format!("{} is empty", path.display())));
    }
    let set = MeasurementSet::from_json_str(&text)?;
    if set.records.is_empty() {
        return Err(Error::NoUsableRecords(format!("{} has no records", path.display())));
    }
    Ok(set)
}

const CUTOFF_PASSES: usize = 8;

/// Ratio estimate with the cutoff either given or iterated to consistency
/// with the estimate.
fn ratio_estimate(
    mode: &ModeSpec,
    records: &[SidebandRecord],
    cutoff_gt: Option<f64>,
    flags: &CutoffFlags,
    options: &RatioOptions,
) -> Result<EstimateReport> {
    if let Some(c) = cutoff_gt {
        return estimate_sideband_ratio_with(mode, records, c, options);
    }
    let opts = flags.options();
    let poly = RatioPolynomial::for_mode(mode);
    let mut cut = opts.gt_max;
    let mut report = estimate_sideband_ratio_with(mode, records, cut, options)?;
    for _ in 0..CUTOFF_PASSES {
        let nbar = report.nbar_final.max(1e-3);
        let model = model_for(mode, nbar, opts.gt_max)?;
        let next = cutoff_time_with(model.as_ref(), &poly, &mode.label, nbar, &opts)?.gt_star;
        if (next - cut).abs() <= opts.tolerance {
            break;
        }
        cut = next;
        report = estimate_sideband_ratio_with(mode, records, cut, options)?;
    }
    Ok(report)
}

fn fit_records(mode: &ModeSpec, records: &[SidebandRecord], nbar_max: f64) -> Result<FitResult> {
    let points = red_points(mode.g, records);
    let gt_max = points.iter().fold(0.0f64, |m, p| m.max(p.gt));
    let model = model_for(mode, nbar_max, gt_max.max(1e-6))?;
    fit_estimator(|gt, n| model.probabilities(n, gt).map(|p| p.0), &points, (0.0, nbar_max))
}

fn estimate(out: &mut Output, a: &EstimateArgs) -> Result<()> {
    if let Method::Bichromatic = a.method {
        return bichromatic(out, &BichromaticArgs { data: a.data.clone() });
    }
    let set = load_measurements(out, &a.data)?;
    match a.method {
        Method::Ratio => {
            let options = RatioOptions {
                outlier_sigma: a.outlier_sigma,
            };
            let report = ratio_estimate(&set.mode, &set.records, a.cutoff_gt, &a.cutoff, &options)?;
            out.csv("per_time", &report.per_time, a.csv.as_deref(), false)?;
            out.json("estimate", &report)
        }
        Method::Fit => out.json("fit", &fit_records(&set.mode, &set.records, a.nbar_max)?),
        Method::Bichromatic => unreachable!(),
    }
}

fn fit(out: &mut Output, a: &FitArgs) -> Result<()> {
    let set = load_measurements(out, &a.data)?;
    out.json("fit", &fit_records(&set.mode, &set.records, a.nbar_max)?)
}

fn bichromatic(out: &mut Output, a: &BichromaticArgs) -> Result<()> {
    out.input(&a.data);
    let data = BichromaticData::from_json_str(&std::fs::read_to_string(&a.data)?)?;
    out.json("bichromatic", &estimate_bichromatic(data.eta(), &data.points())?)
}

fn montecarlo(out: &mut Output, a: &MontecarloArgs, seed: Option<u64>) -> Result<()> {
    let mut config: CampaignConfig = read_json(out, &a.config)?;
    config.mode = config.mode.validated()?;
    if let Some(s) = seed {
        config.seed = s;
    }
    let gt_max = config.gt_grid.iter().fold(0.0f64, |m, x| m.max(*x));
    let model = model_for(&config.mode, config.nbar_true, gt_max.max(1e-6))?;
    let rows = validate_estimator_moments(&config, model.as_ref())?;
    out.csv("moments", &rows, a.csv.as_deref(), false)?;
    out.json("montecarlo", &rows)
}

fn cutoff(out: &mut Output, a: &CutoffArgs) -> Result<()> {
    let mode = load_mode(out, &a.mode)?;
    let opts = a.flags.options();
    let model = model_for(&mode, a.nbar, opts.gt_max)?;
    let poly = RatioPolynomial::for_mode(&mode);
    out.json("cutoff", &cutoff_time_with(model.as_ref(), &poly, &mode.label, a.nbar, &opts)?)
}

#[derive(Serialize)]
struct FisherRow {
    gt: f64,
    p_red: f64,
    p_blue: f64,
    fisher_red: f64,
    fisher_blue: f64,
    fisher_sideband: f64,
    /// Ratio estimator σ·√(total shots); absent where the estimate fails.
    estimator_sigma: Option<f64>,
}

#[derive(Serialize)]
struct FisherSummary {
    nbar: f64,
    best_gt: f64,
    best_fisher: f64,
    crb_sigma_sqrt_shots: f64,
    /// Zeros of ∂P_b/∂n̄, single ion only.
    blue_fisher_zeros: Option<Vec<f64>>,
}

fn fisher(out: &mut Output, a: &FisherArgs) -> Result<()> {
    let mode = load_mode(out, &a.mode)?;
    if a.points < 2 || !(a.gt_max > 0.0) {
        return Err(Error::InvalidInput("need points >= 2 and gt-max > 0".into()));
    }
    let model = model_for(&mode, a.nbar, a.gt_max)?;
    let poly = RatioPolynomial::for_mode(&mode);
    let rows: Vec<FisherRow> = (1..=a.points)
        .map(|k| {
            let gt = a.gt_max * k as f64 / a.points as f64;
            let (pr, pb) = model.probabilities(a.nbar, gt)?;
            let (dr, db) = model.derivatives(a.nbar, gt)?;
            let fr = fisher_binary(pr, dr).unwrap_or(0.0);
            let fb = fisher_binary(pb, db).unwrap_or(0.0);
            Ok(FisherRow {
                gt,
                p_red: pr,
                p_blue: pb,
                fisher_red: fr,
                fisher_blue: fb,
                fisher_sideband: 0.5 * (fr + fb),
                estimator_sigma: estimator_sigma(model.as_ref(), &poly, a.nbar, gt).ok(),
            })
        })
        .collect::<Result<_>>()?;
    let best = rows
        .iter()
        .max_by(|x, y| x.fisher_sideband.total_cmp(&y.fisher_sideband))
        .expect("at least two rows");
    let summary = FisherSummary {
        nbar: a.nbar,
        best_gt: best.gt,
        best_fisher: best.fisher_sideband,
        crb_sigma_sqrt_shots: best.fisher_sideband.powf(-0.5),
        blue_fisher_zeros: if mode.n_ions() == 1 {
            Some(single_ion_blue_fisher_zeros(a.nbar, a.gt_max)?)
        } else {
            None
        },
    };
    out.csv("fisher", &rows, a.csv.as_deref(), false)?;
    out.json("fisher", &summary)
}

fn crb(out: &mut Output, a: &CrbArgs) -> Result<()> {
    let mode = load_mode(out, &a.mode)?;
    let opts = a.cutoff.options();
    let nbar_max = a.nbar.iter().fold(0.0f64, |m, x| m.max(*x));
    let model = model_for(&mode, nbar_max, TAU.max(opts.gt_max))?;
    let poly = RatioPolynomial::for_mode(&mode);
    let cut = |nbar: f64| Ok(cutoff_time_with(model.as_ref(), &poly, &mode.label, nbar, &opts)?.gt_star);
    let rows = crb_curves(model.as_ref(), &poly, &a.nbar, cut, TAU)?;
    out.csv("crb", &rows, a.csv.as_deref(), false)?;
    out.json("crb", &rows)
}

#[derive(Serialize)]
struct NaiveSummary {
    n_ions: usize,
    nbar: f64,
    /// First maximum of the mean blue excitation.
    first_fringe_gt: Option<f64>,
    naive_ratio_at_fringe: Option<f64>,
    cutoff_gt: f64,
    /// Global-probability inversions at gt ≤ cutoff.
    max_relative_error_below_cutoff: Option<f64>,
}

fn demo_naive(out: &mut Output, a: &DemoNaiveArgs) -> Result<()> {
    if a.points < 3 || !(a.gt_max > 0.0) {
        return Err(Error::InvalidInput("need points >= 3 and gt-max > 0".into()));
    }
    let grid: Vec<f64> = (1..=a.points).map(|k| a.gt_max * k as f64 / a.points as f64).collect();
    let rows = naive_vs_global_demo(a.n, a.nbar, &grid)?;
    let fringe = (1..rows.len() - 1)
        .find(|&i| rows[i].p_blue_mean >= rows[i - 1].p_blue_mean && rows[i].p_blue_mean > rows[i + 1].p_blue_mean);
    let mode = icct_core::crystal::com(a.n, 1.0);
    let model = CrystalModel::new(&mode, a.nbar, CUTOFF_GT_MAX)?;
    let poly = RatioPolynomial::for_mode(&mode);
    let cut = cutoff_time_with(&model, &poly, &mode.label, a.nbar, &CutoffOptions::default())?.gt_star;
    let worst = rows
        .iter()
        .filter(|r| r.gt <= cut)
        .filter_map(|r| r.global_estimate)
        .map(|e| ((e - a.nbar) / a.nbar).abs())
        .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))));
    out.csv("demo_naive", &rows, a.csv.as_deref(), false)?;
    out.json(
        "demo_naive",
        &NaiveSummary {
            n_ions: a.n,
            nbar: a.nbar,
            first_fringe_gt: fringe.map(|i| rows[i].gt),
            naive_ratio_at_fringe: fringe.map(|i| rows[i].naive_ratio),
            cutoff_gt: cut,
            max_relative_error_below_cutoff: worst,
        },
    )
}

fn heating(out: &mut Output, a: &HeatingArgs) -> Result<()> {
    let mut points: Vec<HeatingPoint> = match &a.points {
        Some(p) => read_json(out, p)?,
        None => Vec::new(),
    };
    for spec in &a.reports {
        let (delay, path) = spec
            .split_once(':')
            .ok_or_else(|| Error::InvalidInput(format!("--report {spec:?} is not DELAY_S:PATH")))?;
        let delay_s: f64 = delay
            .parse()
            .map_err(|e| Error::InvalidInput(format!("--report delay {delay:?}: {e}")))?;
        let report: EstimateReport = read_json(out, Path::new(path))?;
        points.push(HeatingPoint {
            delay_s,
            nbar: report.nbar_final,
            sigma: report.sigma_final,
        });
    }
    out.json("heating_fit", &heating_fit(&points)?)
}

fn export_figures(out: &mut Output, a: &FiguresArgs) -> Result<()> {
    let want = |f: Figure| matches!(a.which, Figure::All) || std::mem::discriminant(&a.which) == std::mem::discriminant(&f);
    let mut written = Vec::new();
    let mut emit = |out: &mut Output, name: &str, csv: String| -> Result<()> {
        if let Some(s) = figures::schema(name) {
            out.text(&format!("{name}.schema.txt"), s)?;
        }
        out.text(&format!("{name}.csv"), &csv)?;
        written.push(name.to_string());
        Ok(())
    };
    if want(Figure::Fig2) {
        emit(out, "fig2", output::to_csv(&figures::fig2(19, 5.0, 4.0, 400)?)?)?;
    }
    if want(Figure::Fig3) {
        emit(out, "fig3", output::to_csv(&figures::fig3(&[0.1, 0.5], TAU, 400))?)?;
    }
    if want(Figure::Fig4) {
        emit(out, "fig4", output::to_csv(&figures::fig4(4..=12, 10.0, 0.1, &CutoffOptions::default())?)?)?;
    }
    if want(Figure::Fig6) {
        emit(out, "fig6", output::to_csv(&figures::fig6(10, &a.nbar, &CutoffOptions::default())?)?)?;
    }
    out.json("figures", &written)
}

fn run(cli: Cli) -> Result<()> {
    verify_tables()?;
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    }
    let name = match &cli.command {
        Command::Modes(_) => "modes",
        Command::Coeffs(_) => "coeffs",
        Command::RatioTable(_) => "ratio-table",
        Command::Simulate(_) => "simulate",
        Command::Estimate(_) => "estimate",
        Command::Fit(_) => "fit",
        Command::Bichromatic(_) => "bichromatic",
        Command::Montecarlo(_) => "montecarlo",
        Command::Cutoff(_) => "cutoff",
        Command::Fisher(_) => "fisher",
        Command::Crb(_) => "crb",
        Command::DemoNaive(_) => "demo-naive",
        Command::HeatingFit(_) => "heating-fit",
        Command::Figures(_) => "figures",
    };
    if matches!(cli.command, Command::Figures(_)) && cli.out.is_none() {
        return Err(Error::InvalidInput("figures needs --out".into()));
    }
    let mut out = Output::new(name, cli.out.clone(), format!("{:?}", cli.command), cli.seed)?;
    match &cli.command {
        Command::Modes(a) => {
            let axis = match a.axis {
                AxisArg::Axial => Axis::Axial,
                AxisArg::Transverse => Axis::Transverse,
            };
            out.json("modes", &figures::chain_mode_specs(a.n, a.anisotropy, axis, a.g)?)?;
        }
        Command::Coeffs(a) => coeffs(&mut out, a)?,
        Command::RatioTable(a) => ratio_table(&mut out, a)?,
        Command::Simulate(a) => simulate(&mut out, a, cli.seed.unwrap_or(0))?,
        Command::Estimate(a) => estimate(&mut out, a)?,
        Command::Fit(a) => fit(&mut out, a)?,
        Command::Bichromatic(a) => bichromatic(&mut out, a)?,
        Command::Montecarlo(a) => montecarlo(&mut out, a, cli.seed)?,
        Command::Cutoff(a) => cutoff(&mut out, a)?,
        Command::Fisher(a) => fisher(&mut out, a)?,
        Command::Crb(a) => crb(&mut out, a)?,
        Command::DemoNaive(a) => demo_naive(&mut out, a)?,
        Command::HeatingFit(a) => heating(&mut out, a)?,
        Command::Figures(a) => export_figures(&mut out, a)?,
    }
    out.finish()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{body}");
            ExitCode::from(2)
        }
    }
}
