//! Command-line front end: argument parsing, file I/O and verb dispatch.
//!
//! Every verb writes its primary artifact either to `--out` or to standard
//! output. JSON artifacts carry `"schema": "v1"`. Exit codes: `0` success,
//! `1` domain error (a JSON object `{"schema", "error", "message"}` is written
//! to standard error), `2` usage error. Randomized verbs take `--seed` and are
//! byte-reproducible for a fixed argument vector.
//!
//! Units are dimensionless: frequencies are in units of a reference spectral
//! width and delays in the inverse unit.

use crate::characterization::{
    bootstrap, characterize, derive_seed, read_bundle, write_bundle, write_result, BootstrapConfig, BundleManifest,
    DEFAULT_SIGN_THRESHOLD,
};
use crate::csd::{cost_report, decompose, reconstruct, DecompositionPlan, PlanJson};
use crate::error::Error;
use crate::harness::{
    run_trials, simulate_dataset, CurveSet, NoiseModel, SpectraSource, TrialConfig, Variant,
};
use crate::immanant::{
    abc_matrix_elements, abc_via_dfunctions, delayed_photon_coincidence, immanant, kostant_lhs_rhs,
    littlewood_relation, permanent, submatrix_conjecture_check, submatrix_immanant_identity,
    three_photon_coincidence, three_photon_quadrature, Partition, SubmatrixTable,
};
use crate::matrix::{haar_random_unitary, lu_det, ComplexMatrix, MatrixJson, UnitaryMatrix, C64};
use crate::sun::{canonical_basis, dfunction_matrix, irrep_dimension, state_to_gt, IrrepLabel, Omega};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

/// Default tolerance for unitarity checks of input matrices.
pub const DEFAULT_UNITARITY_TOL: f64 = 1e-9;

/// Default residual bound for identity checks.
pub const DEFAULT_IDENTITY_TOL: f64 = 1e-10;

/// Residual bound for the Littlewood relation, which sums several
/// immanants of order 3 and 4 and so accumulates more rounding.
pub const DEFAULT_LITTLEWOOD_TOL: f64 = 1e-9;

/// Top-level arguments.
#[derive(Debug, Parser)]
#[command(
    name = "interf",
    version,
    about = "Linear-optical interferometer design, characterization and SU(n) simulation",
    long_about = "Linear-optical interferometer design, characterization and SU(n) simulation.\n\n\
        Matrices are JSON objects {\"schema\": \"v1\", \"rows\", \"cols\", \"re\": [row-major], \"im\": [row-major]}.\n\
        Units are dimensionless: frequencies in units of a reference spectral width, delays in the inverse unit.\n\
        Exit codes: 0 success, 1 domain error (JSON on stderr), 2 usage error."
)]
pub struct Cli {
    /// Verb to run.
    #[command(subcommand)]
    pub command: Command,
    /// Maximum number of worker threads (default: one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Tolerance override (unitarity checks of inputs, identity residual bounds).
    #[arg(long, global = true, env = "INTERF_TOL")]
    pub tol: Option<f64>,
    /// Format of tabular outputs (`trials`, `dfunc`); other verbs only write JSON.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

/// Output format.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// JSON document.
    Json,
    /// Comma-separated table with a header row.
    Csv,
}

/// Verbs.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Realize a unitary as beam splitters and internal elements.
    #[command(long_about = "Realize an (n_s·n_p)×(n_s·n_p) unitary as balanced beam splitters between spatial modes and \
        elements acting on the internal modes of one spatial mode.\n\n\
        Input: matrix JSON. Output: plan JSON {\"schema\", \"n_s\", \"n_p\", \"order\": \"rightmost-first\", \
        \"elements\": [{\"kind\": \"BS\"|\"IU\"|\"IP\", \"mode\" (1-based), \"adjoint\"?, \"matrix\"?, \"phases\"? (radians)}]}.")]
    Decompose(DecomposeArgs),
    /// Multiply a plan back into its unitary.
    #[command(long_about = "Multiply the elements of a plan JSON (as written by `decompose`) into a matrix JSON.")]
    Reconstruct(ReconstructArgs),
    /// Element counts of a realization and the comparison with a triangular mesh.
    Cost(CostArgs),
    /// Simulate a characterization experiment and write it as a data bundle.
    #[command(long_about = "Simulate single-photon counts, two-photon coincidence curves and a beam-splitter \
        calibration run for a unitary (given, or Haar-random from the seed).\n\n\
        Bundle layout: manifest.json {\"m\", \"repetitions\", \"units\", \"seed\"}; counts.csv i,j,b,count; \
        coincidence/<i>_<i'>_<j>_<j'>.csv tau,count; spectra/<j>.csv omega,f; calibration.csv tau,count; \
        calibration_counts.csv i,j,b,count; truth.json (matrix JSON of the simulated unitary). Ports are 1-based.")]
    Simulate(SimulateArgs),
    /// Characterize an interferometer from a data bundle.
    #[command(long_about = "Estimate the interferometer matrix from a data bundle (layout as written by `simulate`) \
        with bootstrap error bars.\n\n\
        Output: {\"schema\", \"w\": matrix JSON (real nonnegative first row and column), \"sigma_re\", \"sigma_im\" \
        (row-major), \"gamma\", \"gamma_sigma\", \"diagnostics\", \"replicates\", \"failures\"}. \
        The bootstrap seed defaults to the bundle manifest's seed.\n\
        --plot writes x,y,series CSV of the measured coincidence curves and their fits.")]
    Characterize(CharacterizeArgs),
    /// Run a batch of synthetic characterization trials.
    #[command(long_about = "Simulate and characterize Haar-random interferometers and report the trace-distance \
        errors.\n\nOutput: {\"schema\", \"variant\", \"trials\", \"mean_error\", \"std_dev\", \"std_error\", \
        \"failures\", \"per_trial\": [{\"trial\", \"error\", \"failure\"?}]}; with --format csv the per-trial table \
        trial,error,failure.\n--plot writes x,y,series CSV (trial, error, variant).")]
    Trials(TrialsArgs),
    /// Dump the canonical basis states of an SU(n) irrep.
    #[command(long_about = "List the canonical basis states of the SU(n) irrep with Dynkin label K.\n\n\
        Output: {\"schema\", \"n\", \"K\", \"dimension\", \"states\": [{\"label\", \"gt\", \"monomials\": \
        [{\"occupations\": [[per species] per site], \"coeff_re\", \"coeff_im\"}]}]}. \
        The request may also be given as a file {\"n\": …, \"K\": […]}.")]
    Basis(BasisArgs),
    /// D-matrix of an SU(n) irrep at a group element.
    #[command(long_about = "Evaluate the D-matrix of the irrep K at a group element given by angles, by a \
        unitary matrix file, or drawn Haar-randomly from a seed. Rows and columns follow the order of `basis`.\n\n\
        Output: matrix JSON, or with --format csv the table row,col,re,im (0-based).")]
    Dfunc(DfuncArgs),
    /// Immanants of a square matrix.
    #[command(long_about = "Evaluate the immanant of a square matrix JSON for one partition, or for every \
        partition of its order.\n\nOutput: {\"schema\", \"n\", \"values\": [{\"partition\", \"re\", \"im\"}]}.")]
    Immanant(ImmanantArgs),
    /// Check the immanant / D-function identities on random group elements.
    #[command(long_about = "Check, on Haar-random SU(n) elements, the identities linking immanants of the \
        fundamental matrix and its submatrices to sums of D-functions: the full-matrix identity for every \
        partition of n, every principal submatrix, the tabulated non-principal instances, and (SU(3)) the \
        three-photon amplitudes, (SU(4)) the Littlewood relation.\n\n\
        Output: {\"schema\", \"group\", \"trials\", \"seed\", \"passed\", \"max_residual\", \"checks\": \
        [{\"identity\", \"trial\", \"detail\", \"lhs\": [re, im], \"rhs\": [re, im], \"residual\", \"tolerance\"}], \
        \"exploratory\": [...]}. Exit 1 if any check exceeds its tolerance. --explore adds the unproven \
        pairing rule for all (n−1)×(n−1) submatrices to \"exploratory\" (not counted in \"passed\").")]
    VerifyIdentities(VerifyArgs),
    /// Coincidence probability of three photons with delays.
    #[command(long_about = "Coincidence probability of three photons entering inputs 1, 2, 3 of a 3×3 transfer \
        matrix with delays τ_j and a common Gaussian power spectrum of standard deviation σ.\n\n\
        Output: {\"schema\", \"taus\", \"sigma\", \"probability\", \"permanent_sqr\", \"distinguishable\", \
        \"a\", \"b\", \"c\", \"quadrature\"?}.")]
    ThreePhoton(ThreePhotonArgs),
}

/// `decompose` arguments.
#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// Input matrix JSON.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Number of spatial modes.
    #[arg(long)]
    pub ns: usize,
    /// Number of internal modes per spatial mode.
    #[arg(long)]
    pub np: usize,
    /// Output plan JSON (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// `reconstruct` arguments.
#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// Input plan JSON.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output matrix JSON (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// `cost` arguments.
#[derive(Debug, Args)]
pub struct CostArgs {
    /// Number of spatial modes.
    #[arg(long)]
    pub ns: usize,
    /// Number of internal modes per spatial mode.
    #[arg(long)]
    pub np: usize,
    /// Output JSON (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Synthetic-experiment settings shared by `simulate` and `trials`.
#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Number of modes.
    #[arg(long, default_value_t = 3)]
    pub m: usize,
    /// Mean detected events per setting, repetition and delay point.
    #[arg(long, default_value_t = 1e5)]
    pub budget: f64,
    /// True mode-matching parameter γ ∈ [0, 1].
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Source spectrum: `double-peak`, `gaussian:CENTER,WIDTH` or `file:PATH` (CSV omega,f).
    #[arg(long, default_value = "double-peak", value_parser = parse_spectrum)]
    pub spectrum: SpectraSource,
    /// Single-photon counting repetitions.
    #[arg(long, default_value_t = 10)]
    pub repetitions: usize,
    /// Delay points per coincidence curve.
    #[arg(long, default_value_t = 41)]
    pub tau_points: usize,
    /// Shot-noise model.
    #[arg(long, value_enum, default_value_t = NoiseArg::Poisson)]
    pub noise: NoiseArg,
    /// Record every coincidence curve or only the required ones.
    #[arg(long, value_enum, default_value_t = CurvesArg::All)]
    pub curves: CurvesArg,
    /// Master seed.
    #[arg(long)]
    pub seed: u64,
}

/// `simulate` arguments.
#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Experiment settings.
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Unitary to simulate (matrix JSON); default: Haar-random from the seed.
    #[arg(long)]
    pub unitary: Option<PathBuf>,
    /// Bundle directory to write.
    #[arg(long)]
    pub out: PathBuf,
}

/// `characterize` arguments.
#[derive(Debug, Args)]
pub struct CharacterizeArgs {
    /// Bundle directory.
    #[arg(long)]
    pub data: PathBuf,
    /// Output result JSON (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Bootstrap seed (default: the manifest's seed).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Bootstrap replicates.
    #[arg(long, default_value_t = 200)]
    pub replicates: usize,
    /// Pipeline variant.
    #[arg(long, value_enum, default_value_t = VariantArg::Full)]
    pub variant: VariantArg,
    /// Sign-decision threshold (radians); 0 disables re-derivation.
    #[arg(long, default_value_t = DEFAULT_SIGN_THRESHOLD)]
    pub threshold: f64,
    /// Plot-ready CSV (x,y,series) of curves and fits.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

/// `trials` arguments.
#[derive(Debug, Args)]
pub struct TrialsArgs {
    /// Experiment settings.
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Number of trials.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Pipeline variant.
    #[arg(long, value_enum, default_value_t = VariantArg::Full)]
    pub variant: VariantArg,
    /// Sign-decision threshold (radians).
    #[arg(long, default_value_t = DEFAULT_SIGN_THRESHOLD)]
    pub threshold: f64,
    /// Output report (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Plot-ready CSV (x,y,series).
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

/// Irrep selection shared by `basis` and `dfunc`.
#[derive(Debug, Args)]
pub struct IrrepArgs {
    /// Group rank parameter n of SU(n).
    #[arg(long)]
    pub n: Option<usize>,
    /// Dynkin label, comma-separated (trailing zeros may be omitted).
    #[arg(long = "k", value_delimiter = ',')]
    pub k: Option<Vec<u32>>,
    /// Request file {"n": …, "K": […]} instead of --n/--k.
    #[arg(long, conflicts_with_all = ["n", "k"])]
    pub request: Option<PathBuf>,
}

/// `basis` arguments.
#[derive(Debug, Args)]
pub struct BasisArgs {
    /// Irrep.
    #[command(flatten)]
    pub irrep: IrrepArgs,
    /// Output JSON (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// `dfunc` arguments.
#[derive(Debug, Args)]
pub struct DfuncArgs {
    /// Irrep.
    #[command(flatten)]
    pub irrep: IrrepArgs,
    /// Group element as n²−1 comma-separated angles (radians).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with_all = ["unitary", "seed"])]
    pub omega: Option<Vec<f64>>,
    /// Group element as a unitary matrix JSON.
    #[arg(long, conflicts_with = "seed")]
    pub unitary: Option<PathBuf>,
    /// Draw a Haar-random SU(n) element from this seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// `immanant` arguments.
#[derive(Debug, Args)]
pub struct ImmanantArgs {
    /// Square matrix JSON.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Partition such as `2,1` (default: all partitions of the order).
    #[arg(long)]
    pub partition: Option<Partition>,
    /// Output JSON (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// `verify-identities` arguments.
#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Group: su2, su3, su4 or su5.
    #[arg(long, value_parser = parse_group)]
    pub group: usize,
    /// Number of random group elements.
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    /// Master seed.
    #[arg(long)]
    pub seed: u64,
    /// Also test the (unproven) pairing rule on all (n−1)×(n−1) submatrices.
    #[arg(long)]
    pub explore: bool,
    /// Output report (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// `three-photon` arguments.
#[derive(Debug, Args)]
pub struct ThreePhotonArgs {
    /// 3×3 transfer matrix JSON (row = input, column = output).
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Delays of photons 1, 2, 3, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 1, default_value = "0,0,0")]
    pub taus: Vec<f64>,
    /// Standard deviation of the common Gaussian power spectrum.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Also integrate numerically with this many Gauss–Hermite nodes per frequency.
    #[arg(long)]
    pub quadrature: Option<usize>,
    /// Output JSON (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Pipeline variant names on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    /// Calibrated γ, measured spectra.
    Full,
    /// γ = 1, measured spectra.
    NoCalibration,
    /// Calibrated γ, moment-matched Gaussian spectra.
    GaussianFit,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Full => Variant::Full,
            VariantArg::NoCalibration => Variant::NoCalibration,
            VariantArg::GaussianFit => Variant::GaussianFit,
        }
    }
}

/// Noise model names on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum NoiseArg {
    /// Poisson shot noise.
    Poisson,
    /// Expected counts.
    Noiseless,
}

/// Curve-set names on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CurvesArg {
    /// Only the curves the sign sweep consumes.
    Required,
    /// Every port tuple.
    All,
}

fn parse_spectrum(s: &str) -> std::result::Result<SpectraSource, String> {
    if s == "double-peak" {
        return Ok(SpectraSource::DoublePeak);
    }
    if let Some(rest) = s.strip_prefix("gaussian:") {
        let v: Vec<f64> = rest
            .split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|e| format!("bad number '{x}': {e}")))
            .collect::<std::result::Result<_, _>>()?;
        if let [center, width] = v[..] {
            return Ok(SpectraSource::Gaussian { center, width });
        }
        return Err("expected gaussian:CENTER,WIDTH".into());
    }
    if let Some(path) = s.strip_prefix("file:") {
        return Ok(SpectraSource::File { path: PathBuf::from(path) });
    }
    Err(format!("unknown spectrum '{s}' (double-peak, gaussian:CENTER,WIDTH or file:PATH)"))
}

fn parse_group(s: &str) -> std::result::Result<usize, String> {
    let n: usize = s
        .strip_prefix("su")
        .or_else(|| s.strip_prefix("SU"))
        .and_then(|d| d.parse().ok())
        .ok_or_else(|| format!("expected su2 … su5, got '{s}'"))?;
    if (2..=5).contains(&n) {
        Ok(n)
    } else {
        Err(format!("supported groups are su2 … su5, got '{s}'"))
    }
}

/// Failure of a CLI run.
#[derive(Debug)]
pub enum CliError {
    /// Bad invocation (exit 2).
    Usage(String),
    /// Error from the toolkit (exit 1).
    Domain(Error),
    /// A verification ran but some check failed (exit 1).
    Verification(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Domain(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Domain(Error::Io(format!("{}: {e}", path.display())))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Domain(Error::ParseError { line: e.line(), message: format!("{}: {e}", path.display()) }))
}

fn read_matrix(path: &Path) -> CliResult<ComplexMatrix> {
    Ok(ComplexMatrix::from_json(&read_json::<MatrixJson>(path)?)?)
}

/// Serializes with a `"schema": "v1"` entry added to top-level objects.
fn versioned<T: Serialize>(value: &T) -> CliResult<String> {
    let mut v = serde_json::to_value(value).map_err(Error::from)?;
    if let Value::Object(map) = &mut v {
        map.insert("schema".into(), Value::String("v1".into()));
    }
    Ok(serde_json::to_string_pretty(&v).map_err(Error::from)? + "\n")
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| io_error(path, e)),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Domain(Error::Io(e.to_string()))),
    }
}

fn write_plot(path: &Path, rows: impl IntoIterator<Item = (f64, f64, String)>) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_error(path, e))?;
    w.write_record(["x", "y", "series"]).map_err(|e| io_error(path, e))?;
    for (x, y, s) in rows {
        w.write_record([x.to_string(), y.to_string(), s]).map_err(|e| io_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

fn tolerance(cli_tol: Option<f64>, default: f64) -> CliResult<f64> {
    match cli_tol {
        None => Ok(default),
        Some(t) if t.is_finite() && t > 0.0 => Ok(t),
        Some(t) => Err(CliError::Usage(format!("tolerance must be positive and finite, got {t}"))),
    }
}

/// Haar-random element of `SU(n)`: a Haar unitary divided by an `n`-th root
/// of its determinant.
pub fn random_special_unitary(n: usize, seed: u64) -> crate::Result<UnitaryMatrix> {
    let u = haar_random_unitary(n, seed)?.into_matrix();
    let det = lu_det(&u)?;
    let root = C64::from_polar(1.0, -det.arg() / n as f64);
    UnitaryMatrix::new(u.scale(root), 1e-9)
}

impl ExperimentArgs {
    fn config(&self, variant: Variant, trials: usize, threshold: f64) -> TrialConfig {
        TrialConfig {
            m: self.m,
            photon_budget: self.budget,
            gamma_true: self.gamma,
            spectra: self.spectrum.clone(),
            variant,
            trials,
            seed: self.seed,
            repetitions: self.repetitions,
            tau_points: self.tau_points,
            threshold,
            noise: match self.noise {
                NoiseArg::Poisson => NoiseModel::Poisson,
                NoiseArg::Noiseless => NoiseModel::Noiseless,
            },
            curves: match self.curves {
                CurvesArg::Required => CurveSet::Required,
                CurvesArg::All => CurveSet::All,
            },
            ..TrialConfig::default()
        }
    }
}

impl IrrepArgs {
    fn label(&self) -> CliResult<IrrepLabel> {
        #[derive(Deserialize)]
        struct Request {
            n: usize,
            #[serde(rename = "K")]
            k: Vec<u32>,
        }
        let (n, k) = match (&self.request, self.n, &self.k) {
            (Some(path), _, _) => {
                let r: Request = read_json(path)?;
                (r.n, r.k)
            }
            (None, Some(n), Some(k)) => (n, k.clone()),
            _ => return Err(CliError::Usage("give --n and --k, or --request".into())),
        };
        Ok(IrrepLabel::padded(n, &k)?)
    }
}

fn run_decompose(cli: &Cli, a: &DecomposeArgs) -> CliResult<()> {
    let u = UnitaryMatrix::new(read_matrix(&a.input)?, tolerance(cli.tol, DEFAULT_UNITARITY_TOL)?)?;
    let plan = decompose(&u, a.ns, a.np)?;
    emit(a.out.as_deref(), &(serde_json::to_string_pretty(&plan.to_json()).map_err(Error::from)? + "\n"))
}

fn run_reconstruct(a: &ReconstructArgs) -> CliResult<()> {
    let plan = DecompositionPlan::from_json(&read_json::<PlanJson>(&a.input)?)?;
    let u = reconstruct(&plan)?;
    emit(a.out.as_deref(), &(serde_json::to_string_pretty(&u.matrix().to_json()).map_err(Error::from)? + "\n"))
}

fn run_simulate(cli: &Cli, a: &SimulateArgs) -> CliResult<()> {
    let e = &a.experiment;
    let config = e.config(Variant::Full, 1, DEFAULT_SIGN_THRESHOLD);
    let u = match &a.unitary {
        Some(p) => UnitaryMatrix::new(read_matrix(p)?, tolerance(cli.tol, DEFAULT_UNITARITY_TOL)?)?,
        None => haar_random_unitary(e.m, derive_seed(e.seed, &[0]))?,
    };
    let dataset = simulate_dataset(&u, &config, derive_seed(e.seed, &[1]))?;
    let manifest = BundleManifest {
        m: e.m,
        repetitions: e.repetitions,
        units: "dimensionless: omega in units of a reference spectral width, tau in the inverse unit".into(),
        seed: Some(e.seed),
    };
    write_bundle(&a.out, &manifest, &dataset)?;
    let truth = a.out.join("truth.json");
    fs::write(&truth, serde_json::to_string_pretty(&u.matrix().to_json()).map_err(Error::from)? + "\n")
        .map_err(|err| io_error(&truth, err))?;
    #[derive(Serialize)]
    struct Summary {
        bundle: String,
        m: usize,
        curves: usize,
        seed: u64,
    }
    let s = Summary { bundle: a.out.display().to_string(), m: e.m, curves: dataset.curves().len(), seed: e.seed };
    emit(None, &versioned(&s)?)
}

fn run_characterize(a: &CharacterizeArgs) -> CliResult<()> {
    let (manifest, dataset) = read_bundle(&a.data)?;
    let seed = a
        .seed
        .or(manifest.seed)
        .ok_or_else(|| CliError::Usage("the bundle records no seed; pass --seed for the bootstrap".into()))?;
    let pipeline = Variant::from(a.variant).pipeline(a.threshold);
    let point = characterize(&dataset, &pipeline)?;
    let config = BootstrapConfig { replicates: a.replicates, seed, ..BootstrapConfig::default() };
    let result = bootstrap(&dataset, &point, &pipeline, &config)?;
    if let Some(plot) = &a.plot {
        let mut rows = Vec::new();
        for (ports, curve) in dataset.curves() {
            let name = format!("{}_{}_{}_{}", ports[0], ports[1], ports[2], ports[3]);
            rows.extend(curve.tau.iter().zip(&curve.values).map(|(t, v)| (*t, *v, format!("{name} data"))));
            if let Some(fit) = point.fits.get(ports) {
                rows.extend(curve.tau.iter().zip(&fit.fitted).map(|(t, v)| (*t, *v, format!("{name} fit"))));
            }
        }
        write_plot(plot, rows)?;
    }
    match &a.out {
        Some(path) => Ok(write_result(path, &result)?),
        None => emit(None, &(serde_json::to_string_pretty(&result).map_err(Error::from)? + "\n")),
    }
}

fn run_trials_verb(cli: &Cli, a: &TrialsArgs) -> CliResult<()> {
    let variant = Variant::from(a.variant);
    let report = run_trials(&a.experiment.config(variant, a.trials, a.threshold))?;
    if let Some(plot) = &a.plot {
        write_plot(
            plot,
            report.per_trial.iter().filter_map(|o| Some((o.trial as f64, o.error?, variant.label().to_string()))),
        )?;
    }
    let text = match cli.format {
        Format::Json => versioned(&report)?,
        Format::Csv => {
            let mut s = String::from("trial,error,failure\n");
            for o in &report.per_trial {
                let err = o.error.map(|e| e.to_string()).unwrap_or_default();
                let _ = writeln!(s, "{},{},{}", o.trial, err, o.failure.as_deref().unwrap_or(""));
            }
            s
        }
    };
    emit(a.out.as_deref(), &text)
}

fn run_basis(a: &BasisArgs) -> CliResult<()> {
    let k = a.irrep.label()?;
    let basis = canonical_basis(&k)?;
    #[derive(Serialize)]
    struct MonomialOut {
        occupations: Vec<Vec<u8>>,
        coeff_re: f64,
        coeff_im: f64,
    }
    #[derive(Serialize)]
    struct StateOut {
        label: String,
        gt: Vec<Vec<i64>>,
        monomials: Vec<MonomialOut>,
    }
    #[derive(Serialize)]
    struct BasisOut {
        n: usize,
        #[serde(rename = "K")]
        k: Vec<u32>,
        dimension: String,
        states: Vec<StateOut>,
    }
    let n = k.n();
    let species = n - 1;
    let mut states = Vec::with_capacity(basis.len());
    for s in basis.states() {
        let monomials = s
            .polynomial
            .normalized_coefficients()
            .into_iter()
            .map(|(m, c)| MonomialOut { occupations: m.chunks(species).map(<[u8]>::to_vec).collect(), coeff_re: c, coeff_im: 0.0 })
            .collect();
        states.push(StateOut { label: s.label.to_string(), gt: state_to_gt(&s.label)?.rows().to_vec(), monomials });
    }
    let out = BasisOut { n, k: k.kappas().to_vec(), dimension: irrep_dimension(&k).to_string(), states };
    emit(a.out.as_deref(), &versioned(&out)?)
}

fn run_dfunc(cli: &Cli, a: &DfuncArgs) -> CliResult<()> {
    let k = a.irrep.label()?;
    let n = k.n();
    let omega = match (&a.omega, &a.unitary, a.seed) {
        (Some(angles), _, _) => Omega::Angles(angles.clone()),
        (None, Some(path), _) => {
            Omega::Matrix(UnitaryMatrix::new(read_matrix(path)?, tolerance(cli.tol, DEFAULT_UNITARITY_TOL)?)?)
        }
        (None, None, Some(seed)) => Omega::Matrix(random_special_unitary(n, seed)?),
        (None, None, None) => return Err(CliError::Usage("give --omega, --unitary or --seed".into())),
    };
    let d = dfunction_matrix(n, &omega, &k)?;
    let text = match cli.format {
        Format::Json => serde_json::to_string_pretty(&d.matrix().to_json()).map_err(Error::from)? + "\n",
        Format::Csv => {
            let m = d.matrix();
            let mut s = String::from("row,col,re,im\n");
            for r in 0..m.rows() {
                for c in 0..m.cols() {
                    let _ = writeln!(s, "{r},{c},{},{}", m[(r, c)].re, m[(r, c)].im);
                }
            }
            s
        }
    };
    emit(a.out.as_deref(), &text)
}

fn run_immanant(a: &ImmanantArgs) -> CliResult<()> {
    let t = read_matrix(&a.input)?;
    if !t.is_square() {
        return Err(Error::ShapeError(format!("immanants need a square matrix, got {}×{}", t.rows(), t.cols())).into());
    }
    let partitions = match &a.partition {
        Some(p) => vec![p.clone()],
        None => Partition::all(t.rows()),
    };
    #[derive(Serialize)]
    struct Entry {
        partition: String,
        re: f64,
        im: f64,
    }
    #[derive(Serialize)]
    struct Out {
        n: usize,
        values: Vec<Entry>,
    }
    let values = partitions
        .iter()
        .map(|p| {
            let v = immanant(&t, p)?;
            Ok(Entry { partition: p.to_string(), re: v.re, im: v.im })
        })
        .collect::<crate::Result<Vec<_>>>()?;
    emit(a.out.as_deref(), &versioned(&Out { n: t.rows(), values })?)
}

/// One identity check in a verification report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    /// Identity name.
    pub identity: String,
    /// Index of the random group element.
    pub trial: usize,
    /// Partition, rows and columns involved.
    pub detail: String,
    /// Immanant side `[re, im]`.
    pub lhs: [f64; 2],
    /// `D`-function side `[re, im]`.
    pub rhs: [f64; 2],
    /// `|lhs − rhs|`.
    pub residual: f64,
    /// Bound the residual is compared with.
    pub tolerance: f64,
}

impl CheckRecord {
    fn new(identity: &str, trial: usize, detail: String, lhs: C64, rhs: C64, tolerance: f64) -> Self {
        Self {
            identity: identity.into(),
            trial,
            detail,
            lhs: [lhs.re, lhs.im],
            rhs: [rhs.re, rhs.im],
            residual: (lhs - rhs).norm(),
            tolerance,
        }
    }

    /// Residual within tolerance.
    pub fn passed(&self) -> bool {
        self.residual <= self.tolerance
    }
}

/// Report of `verify-identities`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    /// Group label, e.g. `su3`.
    pub group: String,
    /// Number of random group elements.
    pub trials: usize,
    /// Master seed.
    pub seed: u64,
    /// Every check passed.
    pub passed: bool,
    /// Largest residual over the checks.
    pub max_residual: f64,
    /// Individual checks.
    pub checks: Vec<CheckRecord>,
    /// Exploratory checks of the unproven pairing rule (not counted in `passed`).
    pub exploratory: Vec<CheckRecord>,
}

fn subsets(n: usize, size: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .filter(|mask| mask.count_ones() as usize == size)
        .map(|mask| (1..=n).filter(|i| mask & (1 << (i - 1)) != 0).collect())
        .collect()
}

/// Runs the identity checks for `SU(n)` on `trials` Haar-random elements.
pub fn verify_identities(
    n: usize,
    trials: usize,
    seed: u64,
    tol: Option<f64>,
    explore: bool,
) -> crate::Result<VerificationReport> {
    let id_tol = tol.unwrap_or(DEFAULT_IDENTITY_TOL);
    let lw_tol = tol.unwrap_or(DEFAULT_LITTLEWOOD_TOL);
    let table = SubmatrixTable::bundled()?;
    let fmt_idx = |v: &[usize]| v.iter().map(usize::to_string).collect::<String>();
    let mut checks = Vec::new();
    let mut exploratory = Vec::new();
    for trial in 0..trials {
        let v = random_special_unitary(n, derive_seed(seed, &[n as u64, trial as u64]))?;
        let t = v.matrix().clone();
        let omega = Omega::Matrix(v);
        for p in Partition::all(n) {
            let c = kostant_lhs_rhs(&omega, &p, n)?;
            checks.push(CheckRecord::new("full_matrix", trial, p.to_string(), c.immanant, c.dfunction_sum, id_tol));
        }
        for size in 1..n {
            for k in subsets(n, size) {
                for p in Partition::all(size) {
                    let c = submatrix_immanant_identity(&omega, &p, &k, &k, n)?;
                    let detail = format!("{p} rows={} cols={}", fmt_idx(&k), fmt_idx(&k));
                    checks.push(CheckRecord::new("principal_submatrix", trial, detail, c.immanant, c.dfunction_sum, id_tol));
                }
            }
        }
        for inst in table.instances().iter().filter(|i| i.n == n) {
            let c = submatrix_immanant_identity(&omega, &inst.partition, &inst.rows, &inst.cols, n)?;
            let detail = format!("{} rows={} cols={}", inst.partition, fmt_idx(&inst.rows), fmt_idx(&inst.cols));
            checks.push(CheckRecord::new("tabulated_submatrix", trial, detail, c.immanant, c.dfunction_sum, id_tol));
        }
        if n == 3 {
            let (a, b, c) = abc_via_dfunctions(&omega)?;
            let (ea, eb, ec) = abc_matrix_elements(&t)?;
            for (name, d, e) in [("A", a, ea), ("B", b, eb), ("C", c, ec)] {
                checks.push(CheckRecord::new("three_photon_amplitude", trial, name.into(), e, d, id_tol));
            }
        }
        if n == 4 {
            let r = littlewood_relation(&omega)?;
            checks.push(CheckRecord::new("littlewood_immanants", trial, String::new(), r.immanant_lhs, r.immanant_rhs, lw_tol));
            checks.push(CheckRecord::new("littlewood_dfunctions", trial, String::new(), r.dfunction_lhs, r.dfunction_rhs, lw_tol));
        }
        if explore && n >= 3 {
            for rows in subsets(n, n - 1) {
                for cols in subsets(n, n - 1) {
                    for p in Partition::all(n - 1) {
                        let c = submatrix_conjecture_check(&omega, &p, &rows, &cols, n)?;
                        let detail = format!("{p} rows={} cols={}", fmt_idx(&rows), fmt_idx(&cols));
                        exploratory.push(CheckRecord::new("pairing_rule", trial, detail, c.immanant, c.dfunction_sum, id_tol));
                    }
                }
            }
        }
    }
    let max_residual = checks.iter().map(|c| c.residual).fold(0.0, f64::max);
    Ok(VerificationReport {
        group: format!("su{n}"),
        trials,
        seed,
        passed: checks.iter().all(CheckRecord::passed),
        max_residual,
        checks,
        exploratory,
    })
}

fn run_verify(cli: &Cli, a: &VerifyArgs) -> CliResult<()> {
    let tol = cli.tol.map(|t| tolerance(Some(t), t)).transpose()?;
    let report = verify_identities(a.group, a.trials, a.seed, tol, a.explore)?;
    emit(a.out.as_deref(), &versioned(&report)?)?;
    if report.passed {
        Ok(())
    } else {
        let failed = report.checks.iter().filter(|c| !c.passed()).count();
        Err(CliError::Verification(format!("{failed} of {} checks exceeded their tolerance", report.checks.len())))
    }
}

fn run_three_photon(a: &ThreePhotonArgs) -> CliResult<()> {
    let u = read_matrix(&a.input)?;
    let taus: [f64; 3] =
        a.taus.clone().try_into().map_err(|_| CliError::Usage("--taus needs exactly three values".into()))?;
    let (ca, cb, cc) = abc_matrix_elements(&u)?;
    #[derive(Serialize)]
    struct Out {
        taus: [f64; 3],
        sigma: f64,
        probability: f64,
        permanent_sqr: f64,
        distinguishable: f64,
        a: [f64; 2],
        b: [f64; 2],
        c: [f64; 2],
        #[serde(skip_serializing_if = "Option::is_none")]
        quadrature: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        single_delay_formula: Option<f64>,
    }
    let distinguishable = {
        let mut s = 0.0;
        for p in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
            s += (u[(0, p[0])] * u[(1, p[1])] * u[(2, p[2])]).norm_sqr();
        }
        s
    };
    let single = if taus[1] == taus[2] {
        Some(delayed_photon_coincidence(&u, taus[0] - taus[1], a.sigma)?)
    } else {
        None
    };
    let out = Out {
        taus,
        sigma: a.sigma,
        probability: three_photon_coincidence(&u, taus, a.sigma)?,
        permanent_sqr: permanent(&u)?.norm_sqr(),
        distinguishable,
        a: [ca.re, ca.im],
        b: [cb.re, cb.im],
        c: [cc.re, cc.im],
        quadrature: a.quadrature.map(|nodes| three_photon_quadrature(&u, taus, a.sigma, nodes)).transpose()?,
        single_delay_formula: single,
    };
    emit(a.out.as_deref(), &versioned(&out)?)
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        // Fails only if a pool already exists (e.g. repeated in-process runs).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let csv_ok = matches!(cli.command, Command::Trials(_) | Command::Dfunc(_));
    if cli.format == Format::Csv && !csv_ok {
        return Err(CliError::Usage("--format csv is only available for `trials` and `dfunc`".into()));
    }
    match &cli.command {
        Command::Decompose(a) => run_decompose(cli, a),
        Command::Reconstruct(a) => run_reconstruct(a),
        Command::Cost(a) => emit(a.out.as_deref(), &versioned(&cost_report(a.ns, a.np)?)?),
        Command::Simulate(a) => run_simulate(cli, a),
        Command::Characterize(a) => run_characterize(a),
        Command::Trials(a) => run_trials_verb(cli, a),
        Command::Basis(a) => run_basis(a),
        Command::Dfunc(a) => run_dfunc(cli, a),
        Command::Immanant(a) => run_immanant(a),
        Command::VerifyIdentities(a) => run_verify(cli, a),
        Command::ThreePhoton(a) => run_three_photon(a),
    }
}

fn error_json(code: &str, message: &str) -> String {
    serde_json::json!({ "schema": "v1", "error": code, "message": message }).to_string()
}

/// Parses `argv` (including the program name), runs the verb and returns
/// the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(CliError::Domain(e)) => {
            eprintln!("{}", error_json(e.code(), &e.to_string()));
            1
        }
        Err(CliError::Verification(msg)) => {
            eprintln!("{}", error_json("VerificationFailed", &msg));
            1
        }
    }
}
