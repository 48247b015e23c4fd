//! `wfa`: wavelet functional ANOVA from the command line.
//!
//! Exit status: 0 on success, 2 on usage or input errors, 3 when a numerical
//! routine fails to converge.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::builder::{PossibleValuesParser, TypedValueParser};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use wfa_core::dist::{kappa_moments, pi_nonzero, DfMode, KappaDist, Moments, Quadrature};
use wfa_core::dwt::{dwt_forward, dwt_inverse, Decomposition, Wavelet};
use wfa_core::kappa::{degrees, null_law, run_test, TestConfig, TestMethod};
use wfa_core::mc::{adequacy, simulate_null, AdequacyReport, SimSpec, SurvivorTally};
use wfa_core::profiles::{load_profiles_path, PadMode, RhoPolicy};

const QUAD_TOL_VAR: &str = "WFA_QUAD_TOL";

#[derive(Parser)]
#[command(name = "wfa", version, about = "Wavelet-based test for equality of treatment mean curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test a profile CSV for equal treatment means.
    Test(TestArgs),
    /// Evaluate the null law of κ.
    Dist(DistArgs),
    /// Simulate κ under the null and compare it with the analytic laws.
    Simulate(SimulateArgs),
    /// Decompose a single curve.
    Dwt(DwtArgs),
}

fn choice<T>(values: &'static [&'static str]) -> impl TypedValueParser<Value = T>
where
    T: std::str::FromStr + Clone + Send + Sync + 'static,
    T::Err: std::fmt::Debug,
{
    PossibleValuesParser::new(values).map(|s| s.parse::<T>().expect("validated by clap"))
}

#[derive(Args)]
struct OutputArg {
    /// Write JSON here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long, default_value = "haar", value_parser = choice::<Wavelet>(&["haar", "d4", "d8"]))]
    wavelet: Wavelet,
    /// Number of finest detail levels to threshold; all of them by default.
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long, default_value = "fractional", value_parser = choice::<DfMode>(&["ceil", "fractional"]))]
    df_mode: DfMode,
}

#[derive(Args)]
struct TestArgs {
    /// Profile CSV: header `treatment,replicate,x1..xn`, one curve per row
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    out: OutputArg,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long, default_value = "exact", value_parser = choice::<TestMethod>(&METHODS))]
    method: TestMethod,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value = "reflect", value_parser = choice::<PadMode>(&["none", "zero", "reflect"]))]
    pad: PadMode,
    #[arg(long, default_value = "zero", value_parser = choice::<RhoPolicy>(&["zero", "empirical"]))]
    rho: RhoPolicy,
}

const METHODS: [&str; 5] = ["exact", "normal", "chisq", "binom-normal", "binom-chisq"];

#[derive(Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum DistOp {
    Pdf,
    Cdf,
    Sf,
    Quantile,
    Moments,
}

impl std::str::FromStr for DistOp {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "pdf" => Self::Pdf,
            "cdf" => Self::Cdf,
            "sf" => Self::Sf,
            "quantile" => Self::Quantile,
            "moments" => Self::Moments,
            _ => return Err(format!("unknown op `{s}`")),
        })
    }
}

#[derive(Args)]
struct DistArgs {
    /// Truncated degrees of freedom.
    #[arg(long)]
    p: f64,
    /// Untruncated degrees of freedom.
    #[arg(long)]
    q: f64,
    /// Threshold on the standardized scale
    #[arg(long)]
    lambda: f64,
    #[arg(long, value_parser = choice::<DistOp>(&["pdf", "cdf", "sf", "quantile", "moments"]))]
    op: DistOp,
    /// Evaluation point; a probability for `quantile`.
    #[arg(long, allow_negative_numbers = true)]
    at: Option<f64>,
    #[command(flatten)]
    out: OutputArg,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 3)]
    treatments: usize,
    #[arg(long, default_value_t = 10)]
    replicates: usize,
    /// Curve length n (a power of two).
    #[arg(long, default_value_t = 256)]
    length: usize,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long, default_value_t = 2000)]
    reps: usize,
    #[arg(long, default_value_t = SimSpec::default().seed)]
    seed: u64,
    /// Compare against this law only; all five by default.
    #[arg(long, value_parser = choice::<TestMethod>(&METHODS))]
    method: Option<TestMethod>,
    /// Also write the simulated κ values, one per line.
    #[arg(long)]
    samples: Option<PathBuf>,
    #[command(flatten)]
    out: OutputArg,
}

#[derive(Args)]
struct DwtArgs {
    /// CSV holding one curve as a row of numbers, optionally under a header.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "haar", value_parser = choice::<Wavelet>(&["haar", "d4", "d8"]))]
    wavelet: Wavelet,
    /// Coarsest retained level.
    #[arg(long, default_value_t = 0)]
    j0: usize,
    #[arg(long, default_value = "none", value_parser = choice::<PadMode>(&["none", "zero", "reflect"]))]
    pad: PadMode,
    /// Invert the transform and report the reconstruction error.
    #[arg(long)]
    roundtrip: bool,
    #[command(flatten)]
    out: OutputArg,
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Numeric(String),
}

impl From<wfa_core::Error> for Failure {
    fn from(e: wfa_core::Error) -> Self {
        if e.is_numeric() {
            Failure::Numeric(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

type CmdResult = Result<(), Failure>;

fn quad_tol() -> Result<Option<f64>, Failure> {
    match std::env::var(QUAD_TOL_VAR) {
        Err(_) => Ok(None),
        Ok(raw) => match raw.trim().parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(Some(v)),
            _ => Err(Failure::Input(format!("{QUAD_TOL_VAR} must be a positive number, got `{raw}`"))),
        },
    }
}

fn quadrature() -> Result<Quadrature, Failure> {
    Ok(quad_tol()?.map(Quadrature::with_abs_tol).unwrap_or_default())
}

fn cmd_test(a: TestArgs) -> CmdResult {
    let cfg = TestConfig {
        wavelet: a.pipeline.wavelet,
        levels: a.pipeline.levels,
        method: a.method,
        alpha: a.alpha,
        df_mode: a.pipeline.df_mode,
        rho_policy: a.rho,
        quad_tol: quad_tol()?,
    };
    cfg.validate()?;
    let ps = load_profiles_path(&a.input, a.pad)?;
    let report = run_test(&ps, &cfg)?;
    output::emit_json(&report, a.out.output.as_deref())
}

#[derive(Serialize)]
struct DistOutput {
    op: DistOp,
    p: f64,
    q: f64,
    lambda: f64,
    lower: f64,
    at: Option<f64>,
    value: Option<f64>,
    moments: Option<Moments>,
}

fn cmd_dist(a: DistArgs) -> CmdResult {
    let d = KappaDist::with_quadrature(a.p, a.q, a.lambda, quadrature()?)?;
    let at = || a.at.ok_or_else(|| Failure::Input("--at is required for this op".into()));
    let (value, moments) = match a.op {
        DistOp::Pdf => (Some(d.pdf(at()?)), None),
        DistOp::Cdf => (Some(d.cdf(at()?)?), None),
        DistOp::Sf => (Some(d.sf(at()?)?), None),
        DistOp::Quantile => (Some(d.quantile(at()?)?), None),
        DistOp::Moments => (None, Some(kappa_moments(&d)?)),
    };
    output::emit_json(
        &DistOutput {
            op: a.op,
            p: a.p,
            q: a.q,
            lambda: a.lambda,
            lower: d.lower(),
            at: a.at,
            value,
            moments,
        },
        a.out.output.as_deref(),
    )
}

#[derive(Serialize)]
struct MethodReport {
    method: TestMethod,
    p: f64,
    q: f64,
    report: AdequacyReport,
}

#[derive(Serialize)]
struct SimulateOutput {
    spec: SimSpec,
    lambda: f64,
    survivor_probability: f64,
    kappa_mean: f64,
    kappa_variance: f64,
    reports: Vec<MethodReport>,
}

fn cmd_simulate(a: SimulateArgs) -> CmdResult {
    let spec = SimSpec {
        treatments: a.treatments,
        replicates: a.replicates,
        n: a.length,
        wavelet: a.pipeline.wavelet,
        levels: a.pipeline.levels,
        reps: a.reps,
        seed: a.seed,
    };
    spec.validate()?;
    let quad = quadrature()?;
    let samples = simulate_null(&spec)?;
    let kappas: Vec<f64> = samples.iter().map(|s| s.kappa).collect();
    let (p_slots, _) = spec.slots()?;
    let pi = pi_nonzero(spec.n)?;
    let tally = SurvivorTally::from_samples(&samples, p_slots, pi);
    let lambda = (2.0 * (spec.n as f64).ln()).sqrt();

    let methods: Vec<TestMethod> = match a.method {
        Some(m) => vec![m],
        None => TestMethod::ALL.to_vec(),
    };
    let reports = methods
        .into_iter()
        .map(|method| {
            let cfg = TestConfig { method, df_mode: a.pipeline.df_mode, ..spec.config() };
            let (p, q) = degrees(&cfg, spec.treatments, spec.n)?;
            let law = null_law(method, p, q, lambda, cfg.df_mode, quad)?;
            Ok(MethodReport { method, p, q, report: adequacy(&kappas, law.as_ref(), Some(tally))? })
        })
        .collect::<Result<Vec<_>, wfa_core::Error>>()?;

    let n = kappas.len() as f64;
    let mean = kappas.iter().sum::<f64>() / n;
    let variance = if kappas.len() > 1 {
        kappas.iter().map(|k| (k - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    // samples first, so a failed report never leaves a stale sample file
    if let Some(path) = &a.samples {
        output::write_atomic(path, output::sample_lines(&kappas).as_bytes())?;
    }
    output::emit_json(
        &SimulateOutput {
            spec,
            lambda,
            survivor_probability: pi,
            kappa_mean: mean,
            kappa_variance: variance,
            reports,
        },
        a.out.output.as_deref(),
    )
}

#[derive(Serialize)]
struct DetailBlock {
    level: usize,
    coefficients: Vec<f64>,
}

#[derive(Serialize)]
struct DwtOutput {
    wavelet: Wavelet,
    length: usize,
    padded_from: Option<usize>,
    levels: usize,
    j0: usize,
    details: Vec<DetailBlock>,
    scaling: Vec<f64>,
    flattened: Vec<f64>,
    energy: f64,
    roundtrip_max_error: Option<f64>,
}

fn read_curve(path: &Path, pad: PadMode) -> Result<(Vec<f64>, Option<usize>), Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Failure::Input(e.to_string()))?;
        rows.push(record);
    }
    let numeric = |r: &csv::StringRecord| r.iter().all(|c| c.parse::<f64>().is_ok());
    if rows.first().is_some_and(|r| !numeric(r)) {
        rows.remove(0);
    }
    let [row] = rows.as_slice() else {
        return Err(Failure::Input(format!("expected exactly one curve row, found {}", rows.len())));
    };
    let curve = row
        .iter()
        .map(|c| c.parse::<f64>().map_err(|_| Failure::Input(format!("`{c}` is not a number"))))
        .collect::<Result<Vec<f64>, _>>()?;
    if curve.is_empty() || curve.iter().any(|v| !v.is_finite()) {
        return Err(Failure::Input("curve must hold finite numbers".into()));
    }
    // Reuse the profile padding rules through a throwaway two-group set.
    let groups = vec![
        wfa_core::profiles::TreatmentGroup::new("curve", vec![curve]),
        wfa_core::profiles::TreatmentGroup::new("pad", vec![vec![0.0; row.len()]]),
    ];
    let ps = wfa_core::ProfileSet::new(groups, pad)?;
    Ok((ps.groups()[0].curves[0].clone(), ps.padded_from()))
}

fn cmd_dwt(a: DwtArgs) -> CmdResult {
    let (curve, padded_from) = read_curve(&a.input, a.pad)?;
    let filter = a.wavelet.filter();
    let d: Decomposition = dwt_forward(&curve, &filter, a.j0)?;
    let roundtrip_max_error = if a.roundtrip {
        let back = dwt_inverse(&d, &filter)?;
        Some(curve.iter().zip(&back).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
    } else {
        None
    };
    let levels = d.levels();
    output::emit_json(
        &DwtOutput {
            wavelet: a.wavelet,
            length: curve.len(),
            padded_from,
            levels,
            j0: a.j0,
            details: d
                .details()
                .iter()
                .enumerate()
                .map(|(i, block)| DetailBlock { level: levels - 1 - i, coefficients: block.clone() })
                .collect(),
            scaling: d.scaling().to_vec(),
            flattened: d.flatten(),
            energy: d.energy(),
            roundtrip_max_error,
        },
        a.out.output.as_deref(),
    )
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Test(a) => cmd_test(a),
        Command::Dist(a) => cmd_dist(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Dwt(a) => cmd_dwt(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
