//! The `decathlon` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

use std::collections::BTreeMap;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use super::api::{Api, ApiConfig};
use super::server;
use crate::basis::{fit_knots, BasisKind};
use crate::dataset::{self, FilterConfig, Protocol};
use crate::evaluate::{
    cross_validate, parameter_recovery, posterior_predictive_correlations, ModelChoice, RecoveryConfig,
};
use crate::events::{EventId, N_EVENTS};
use crate::inference::{self, load_fit, save_fit, Family, ModelSpec, SamplerConfig};
use crate::posterior::{preset, profile_of, Profile};
use crate::rng::{self, Purpose};
use crate::scoring::{display_mark, ScoringTable};
use crate::simulate::{simulate_career_draws, subsample_draws, CareerGrid, DEFAULT_THRESHOLD};
use crate::synthetic::{Design, TruthParams};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "decathlon", version, about = "Bayesian age-curve models for decathlon performance")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score a CSV of marks (columns m100..m1500, optional label).
    Score(ScoreArgs),
    /// Fit a model family to a results CSV and save the draws.
    Fit(FitArgs),
    /// Print athletes' latent-skill profiles from a saved fit.
    Profile(ProfileArgs),
    /// Simulate careers for a skill profile and report the break probability.
    Simulate(SimulateArgs),
    /// Validation studies.
    #[command(subcommand)]
    Evaluate(EvaluateCommand),
    /// Serve a saved fit over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    pub marks: PathBuf,
    /// Scoring table CSV (event,kind,unit,a,b,c); defaults to the built-in table.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args, Clone, Copy)]
pub struct SamplerArgs {
    #[arg(long, default_value_t = 4)]
    pub chains: usize,
    #[arg(long, default_value_t = 2000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 1000)]
    pub burn_in: usize,
    #[arg(long)]
    pub seed: u64,
}

impl SamplerArgs {
    fn config(&self) -> SamplerConfig {
        SamplerConfig {
            chains: self.chains,
            iterations: self.iterations,
            burn_in: self.burn_in,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Args, Clone, Copy)]
pub struct FilterArgs {
    #[arg(long, default_value_t = 6400)]
    pub min_points: i64,
    #[arg(long, default_value_t = 4)]
    pub min_count: usize,
    /// Keep every record.
    #[arg(long)]
    pub no_filter: bool,
}

impl FilterArgs {
    fn config(&self) -> Option<FilterConfig> {
        (!self.no_filter).then_some(FilterConfig {
            min_points: self.min_points,
            min_count: self.min_count,
            ..FilterConfig::default()
        })
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "compositional")]
    pub family: Family,
    #[arg(long, default_value = "cubic")]
    pub basis: BasisKind,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    #[command(flatten)]
    pub filter: FilterArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    #[arg(long)]
    pub fit: PathBuf,
    /// Athlete ids; every athlete when omitted.
    #[arg(long = "athlete")]
    pub athletes: Vec<String>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub fit: PathBuf,
    /// Profile JSON file ({label, quantiles}).
    #[arg(long, group = "subject")]
    pub profile: Option<PathBuf>,
    /// Built-in profile: mayer, eaton, sebrle, warner, dvorak, day1, day2, excellent, good.
    #[arg(long, group = "subject")]
    pub preset: Option<String>,
    /// Ten comma-separated quantiles.
    #[arg(long, group = "subject", value_delimiter = ',')]
    pub quantiles: Option<Vec<f64>>,
    /// Profile of an athlete in the fit.
    #[arg(long, group = "subject")]
    pub athlete: Option<String>,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, default_value_t = 2)]
    pub per_year: u32,
    /// Use a seeded subsample of this many posterior draws.
    #[arg(long)]
    pub draws: Option<usize>,
    #[arg(long)]
    pub seed: u64,
    /// Write the summary as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write every simulated decathlon as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum EvaluateCommand {
    /// Cross-validated SMSE of model families and bases.
    Cv(CvArgs),
    /// Credible-interval coverage when refitting data simulated from a known truth.
    Recovery(RecoveryArgs),
    /// Posterior-predictive correlations between events.
    Ppc(PpcArgs),
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "general")]
    pub protocol: Protocol,
    /// Models as family:basis, e.g. baseline:cubic,compositional:spline; all six by default.
    #[arg(long, value_delimiter = ',')]
    pub models: Vec<String>,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    #[command(flatten)]
    pub filter: FilterArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RecoveryArgs {
    /// Take the truth from this fit's posterior means and the design from
    /// --data; otherwise draw a synthetic truth from the prior.
    #[arg(long, requires = "data")]
    pub fit: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub athletes: usize,
    #[arg(long, default_value_t = 500)]
    pub records: usize,
    #[arg(long, default_value_t = 20)]
    pub replicates: usize,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    #[command(flatten)]
    pub filter: FilterArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PpcArgs {
    #[arg(long)]
    pub fit: PathBuf,
    /// The data the fit was trained on.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 2000)]
    pub datasets: usize,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub filter: FilterArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub fit: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    #[arg(long, default_value_t = 4)]
    pub workers: usize,
    /// Most simulated decathlons (draws × ages) per request.
    #[arg(long, default_value_t = ApiConfig::default().budget)]
    pub budget: usize,
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Run(e)) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_data_error() {
                EXIT_DATA
            } else {
                EXIT_NUMERICAL
            }
        }
    }
}

enum CliError {
    Usage(String),
    Run(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Run(Error::io("<stdout>", e))
    }
}

type CliResult = std::result::Result<(), CliError>;

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    match command {
        Command::Score(a) => score(a, out),
        Command::Fit(a) => fit(a, out, err),
        Command::Profile(a) => profile(a, out),
        Command::Simulate(a) => simulate(a, out),
        Command::Evaluate(EvaluateCommand::Cv(a)) => cv(a, out, err),
        Command::Evaluate(EvaluateCommand::Recovery(a)) => recovery(a, out, err),
        Command::Evaluate(EvaluateCommand::Ppc(a)) => ppc(a, out, err),
        Command::Serve(a) => serve(a, out),
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Rows of a marks file: optional label plus the ten mark columns.
pub fn read_marks(path: &Path) -> Result<Vec<(String, [Option<f64>; N_EVENTS])>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let label = find("label");
    let columns: Vec<usize> = EventId::ALL
        .iter()
        .map(|e| find(e.csv_column()).ok_or_else(|| Error::Schema(format!("{}: missing column `{}`", path.display(), e.csv_column()))))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (n, row) in reader.records().enumerate() {
        let row = row?;
        let mut marks = [None; N_EVENTS];
        for (e, &c) in columns.iter().enumerate() {
            let field = row.get(c).unwrap_or("");
            if !field.is_empty() {
                marks[e] = Some(field.parse::<f64>().map_err(|_| {
                    Error::Schema(format!("{}: row {}: unparseable {} `{field}`", path.display(), n + 2, EventId::ALL[e].csv_column()))
                })?);
            }
        }
        let name = label.and_then(|l| row.get(l)).map_or_else(|| format!("row {}", n + 1), str::to_string);
        rows.push((name, marks));
    }
    Ok(rows)
}

#[derive(serde::Serialize)]
struct ScoredRow {
    label: String,
    points: BTreeMap<String, u32>,
    total: u32,
}

fn score(a: ScoreArgs, out: &mut dyn Write) -> CliResult {
    let table = match &a.table {
        Some(p) => ScoringTable::from_csv_path(p)?,
        None => ScoringTable::default(),
    };
    let mut scored = Vec::new();
    for (label, marks) in read_marks(&a.marks)? {
        let missing: Vec<EventId> = EventId::ALL.into_iter().filter(|e| marks[e.index()].is_none()).collect();
        if !missing.is_empty() {
            return Err(Error::IncompleteDecathlon { missing }.into());
        }
        let mut points = [0u32; N_EVENTS];
        for e in EventId::ALL {
            points[e.index()] = table.points(crate::scoring::Mark::new(e, marks[e.index()].unwrap())?)?;
        }
        scored.push((label, marks.map(Option::unwrap), points));
    }
    if a.json {
        let rows: Vec<ScoredRow> = scored
            .iter()
            .map(|(label, _, points)| ScoredRow {
                label: label.clone(),
                points: EventId::ALL.iter().map(|e| (e.label().to_string(), points[e.index()])).collect(),
                total: points.iter().sum(),
            })
            .collect();
        writeln!(out, "{}", serde_json::to_string_pretty(&rows).map_err(Error::from)?)?;
        return Ok(());
    }
    for (label, marks, points) in &scored {
        writeln!(out, "{label}")?;
        for e in EventId::ALL {
            writeln!(
                out,
                "  {:<6} {:>10} {:>6}",
                e.label(),
                display_mark(e, marks[e.index()]),
                points[e.index()]
            )?;
        }
        writeln!(out, "  {:<6} {:>10} {:>6}", "Total", "", points.iter().sum::<u32>())?;
    }
    Ok(())
}

fn load_data(path: &Path, filter: &FilterArgs, err: &mut dyn Write) -> Result<Vec<dataset::DecathlonRecord>> {
    let report = dataset::load(path)?;
    if !report.rejects.is_empty() {
        let _ = writeln!(err, "{}: {} rows rejected", path.display(), report.rejects.len());
        for r in report.rejects.iter().take(5) {
            let _ = writeln!(err, "  line {}: {}", r.line, r.reason);
        }
    }
    if !report.flagged.is_empty() {
        let _ = writeln!(
            err,
            "{}: {} rows whose stated points differ from the rescored total by more than {}",
            path.display(),
            report.flagged.len(),
            dataset::POINTS_SLACK
        );
    }
    Ok(match filter.config() {
        Some(f) => dataset::filter_athletes(&report.records, &f),
        None => report.records,
    })
}

fn fit(a: FitArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let config = a.sampler.config();
    config.validate()?;
    let records = load_data(&a.data, &a.filter, err)?;
    let data = dataset::standardize(&records)?;
    let spec = ModelSpec::new(a.family, a.basis, &data)?;
    writeln!(
        out,
        "fitting {} {} to {} records of {} athletes (seed {})",
        a.family.label(),
        a.basis.label(),
        data.len(),
        data.athletes.len(),
        config.seed
    )?;
    let mut result = inference::fit(&spec, &data, &config)?;
    result.dataset.filter = a.filter.config();
    save_fit(&result, &a.out)?;
    if let Some(d) = &result.diagnostics {
        writeln!(
            out,
            "{} parameters, max split-R̂ {}, min ESS {}, {} flagged",
            d.n_parameters,
            d.max_rhat.map_or("n/a".into(), |r| format!("{r:.4}")),
            d.min_ess.map_or("n/a".into(), |e| format!("{e:.0}")),
            d.n_flagged
        )?;
    }
    writeln!(out, "saved {} draws to {}", result.n_draws(), a.out.display())?;
    Ok(())
}

fn profile(a: ProfileArgs, out: &mut dyn Write) -> CliResult {
    let fit = load_fit(&a.fit)?;
    let ids = if a.athletes.is_empty() { fit.athletes().to_vec() } else { a.athletes };
    let profiles = ids.iter().map(|id| profile_of(&fit, id)).collect::<Result<Vec<_>>>()?;
    if a.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&profiles).map_err(Error::from)?)?;
    } else {
        writeln!(out, "{}", Profile::table_header())?;
        for p in &profiles {
            writeln!(out, "{}", p.table_row())?;
        }
    }
    Ok(())
}

fn simulate(a: SimulateArgs, out: &mut dyn Write) -> CliResult {
    let fit = load_fit(&a.fit)?;
    let profile = if let Some(path) = &a.profile {
        Profile::load(path)?
    } else if let Some(name) = &a.preset {
        preset(name).ok_or_else(|| CliError::Usage(format!("unknown preset `{name}`")))?
    } else if let Some(q) = &a.quantiles {
        let q: [f64; N_EVENTS] = q
            .as_slice()
            .try_into()
            .map_err(|_| CliError::Usage(format!("--quantiles needs {N_EVENTS} values, got {}", q.len())))?;
        Profile::new("custom", q)?
    } else if let Some(id) = &a.athlete {
        profile_of(&fit, id)?
    } else {
        return Err(CliError::Usage("give one of --profile, --preset, --quantiles or --athlete".into()));
    };
    let grid = CareerGrid::per_year(19, 30, a.per_year)?;
    let draws = match a.draws {
        Some(0) => return Err(CliError::Usage("--draws must be positive".into())),
        Some(n) => subsample_draws(fit.n_draws(), n, a.seed),
        None => (0..fit.n_draws()).collect(),
    };
    let career = simulate_career_draws(&fit, &profile, &grid, a.seed, &draws)?;
    let summary = career.summary(a.threshold);
    writeln!(out, "{}", Profile::table_header())?;
    writeln!(out, "{}", profile.table_row())?;
    writeln!(
        out,
        "seed {}, {} draws, {} decathlons per career",
        a.seed,
        summary.n_draws,
        grid.len()
    )?;
    writeln!(
        out,
        "mean career best {:.1}, median {:.0}, 95% interval [{:.0}, {:.0}]",
        summary.max_score_mean,
        summary.max_score_quantiles.q50,
        summary.max_score_quantiles.q025,
        summary.max_score_quantiles.q975
    )?;
    writeln!(
        out,
        "break probability (> {}): {:.4}",
        a.threshold, summary.break_probability
    )?;
    if let Some(path) = &a.out {
        write_json(path, &summary)?;
    }
    if let Some(path) = &a.csv {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        career.write_csv(std::io::BufWriter::new(file))?;
    }
    Ok(())
}

fn parse_model(s: &str) -> std::result::Result<ModelChoice, String> {
    let (family, basis) = s.split_once(':').unwrap_or((s, "cubic"));
    Ok(ModelChoice::new(family.parse()?, basis.parse()?))
}

fn cv(a: CvArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let models = if a.models.is_empty() {
        ModelChoice::all()
    } else {
        a.models.iter().map(|m| parse_model(m)).collect::<std::result::Result<_, _>>().map_err(CliError::Usage)?
    };
    let records = load_data(&a.data, &a.filter, err)?;
    writeln!(out, "cross-validating {} models on {} records (seed {})", models.len(), records.len(), a.sampler.seed)?;
    let study = cross_validate(&records, &models, a.protocol, a.sampler.seed, &a.sampler.config())?;
    write!(out, "{}", study.table())?;
    if let Some(path) = &a.out {
        write_json(path, &study)?;
    }
    Ok(())
}

fn recovery(a: RecoveryArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let seed = a.sampler.seed;
    let (truth, design) = match (&a.fit, &a.data) {
        (Some(fit_dir), Some(data_path)) => {
            let fit = load_fit(fit_dir)?;
            if fit.family() != Family::Compositional {
                return Err(Error::UnsupportedFamily {
                    family: fit.family().label(),
                    operation: "parameter recovery (needs a compositional fit)",
                }
                .into());
            }
            let records = load_data(data_path, &a.filter, err)?;
            let data = dataset::StandardizedDataset::with_scales(&records, fit.dataset.scales.clone());
            let design = Design::of(&data);
            let truth = TruthParams::from_fit_mean(&fit);
            if design.athletes != fit.dataset.athletes {
                return Err(Error::Schema("--data does not hold the fit's athletes in order".into()).into());
            }
            (truth, design)
        }
        _ => {
            let mut rng = rng::stream(seed, Purpose::Synthetic, 0, 0);
            let design = Design::random(a.athletes, a.records, &mut rng);
            let basis = fit_knots(BasisKind::CubicPolynomial, &design.ages())?;
            let spec = ModelSpec::with_basis(Family::Compositional, basis);
            (TruthParams::draw_from_prior(&spec, a.athletes, &mut rng), design)
        }
    };
    writeln!(
        out,
        "{} replicates of {} records (seed {})",
        a.replicates,
        design.rows.len(),
        seed
    )?;
    let config = RecoveryConfig {
        n_replicates: a.replicates,
        seed,
        sampler: a.sampler.config(),
        ..RecoveryConfig::default()
    };
    let report = parameter_recovery(&truth, &design, &config)?;
    write!(out, "{}", report.table())?;
    writeln!(out, "{} failed replicates", report.n_failed)?;
    if let Some(path) = &a.out {
        write_json(path, &report)?;
    }
    Ok(())
}

fn ppc(a: PpcArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let fit = load_fit(&a.fit)?;
    let records = load_data(&a.data, &a.filter, err)?;
    let data = dataset::StandardizedDataset::with_scales(&records, fit.dataset.scales.clone());
    writeln!(out, "{} predictive datasets (seed {})", a.datasets, a.seed)?;
    let report = posterior_predictive_correlations(&fit, &data, a.datasets, a.seed)?;
    write!(out, "{}", report.table())?;
    writeln!(out, "{} of {} pairs inside the 95% band", report.n_contained(), report.pairs.len())?;
    if let Some(path) = &a.out {
        write_json(path, &report)?;
    }
    Ok(())
}

fn serve(a: ServeArgs, out: &mut dyn Write) -> CliResult {
    let fit = load_fit(&a.fit)?;
    let api = Api::new(
        fit,
        ApiConfig {
            workers: a.workers,
            budget: a.budget,
        },
    )?;
    server::serve(api, a.addr, |addr| {
        let _ = writeln!(out, "listening on http://{addr}");
        let _ = out.flush();
    })?;
    Ok(())
}
