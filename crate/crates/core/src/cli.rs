//! Command-line front end. `run` parses arguments, executes one subcommand
//! and returns the process exit code: 0 success, 2 parameter or validation
//! error, 3 schema or I/O error.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::econometrics::{
    fit, replicate_suite, ClusterBy, LagMode, Outcome, Reference, RegressionSpec, SplitKind, Subsample, SuiteCell, SuiteData, SuiteMenu,
    SuiteResults, Variant,
};
use crate::error::{Error, Result};
use crate::ingest::{
    attach_openness, build_panel, expand_years, read_epr, read_polity, validate_dataset, Aggregation, EprColumns, OpennessOptions,
    PanelBuildOptions, PeriodGrid, PolityColumns, ReferenceTargets,
};
use crate::model::{interior_grid, phase_grid, sweep_delta, thresholds, write_phase_csv, write_sweep_csv, ModelParams};
use crate::panel::Panel;
use crate::plot::{phase_svg, scatter_quadratic_svg, sweep_svg};
use crate::synth::{generate, truth_report, DgpMode, QuadraticDgp, Range, SynthConfig};

#[derive(Debug, Parser)]
#[command(name = "powersharing", version, about = "Group size and access to power: model sweeps, synthetic panels, ingestion and estimation")]
pub struct Cli {
    /// Print progress to stderr (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the incumbent's decision over a grid of group sizes.
    Sweep(SweepArgs),
    /// Generate a synthetic panel with known ground truth.
    Synth(SynthArgs),
    /// Build a panel from EPR Core and Polity CSV files.
    Ingest(IngestArgs),
    /// Fit one or more ladder columns on a panel.
    Estimate(EstimateArgs),
    /// Run the full specification suite and emit figures.
    Replicate(ReplicateArgs),
    /// Render a results JSON file as markdown tables.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.1)]
    pub a1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Number of interior grid points i/(n+1).
    #[arg(long, default_value_t = 99)]
    pub grid: usize,
    /// Also compute and write the closed-form thresholds (requires the assumption to hold).
    #[arg(long)]
    pub thresholds: bool,
    /// Also write a phase diagram with this many gamma levels in [0, 1].
    #[arg(long, default_value_t = 0)]
    pub phase: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Model,
    Quadratic,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    pub countries: usize,
    /// Groups per country: `k` or `lo-hi`.
    #[arg(long, default_value = "1-4")]
    pub groups: String,
    #[arg(long, default_value_t = 20)]
    pub periods: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Model)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub beta1: f64,
    #[arg(long, default_value_t = -2.0, allow_negative_numbers = true)]
    pub beta2: f64,
    /// Country x period effect scale (quadratic mode).
    #[arg(long, default_value_t = 0.5)]
    pub cp_sd: f64,
    /// Group effect scale (quadratic mode).
    #[arg(long, default_value_t = 0.5)]
    pub group_sd: f64,
    #[arg(long, default_value_t = 0.35)]
    pub sigma: f64,
    /// Model parameters as `x` or `lo:hi` uniform ranges (model mode).
    #[arg(long, default_value = "0.5")]
    pub lambda: String,
    #[arg(long, default_value = "0.1")]
    pub a1: String,
    #[arg(long, default_value = "1")]
    pub gamma: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FreqArg {
    #[value(name = "10")]
    Ten,
    #[value(name = "5")]
    Five,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AggArg {
    Mean,
    First,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OutcomeArg {
    Ordinal,
    Binary,
}

impl From<OutcomeArg> for Outcome {
    fn from(o: OutcomeArg) -> Self {
        match o {
            OutcomeArg::Ordinal => Outcome::Ordinal,
            OutcomeArg::Binary => Outcome::Binary,
        }
    }
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub epr: PathBuf,
    #[arg(long)]
    pub polity: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FreqArg::Ten)]
    pub freq: FreqArg,
    #[arg(long, value_enum, default_value_t = AggArg::Mean)]
    pub agg: AggArg,
    /// Outcome summarized in the ingest metadata for downstream estimation.
    #[arg(long, value_enum, default_value_t = OutcomeArg::Ordinal)]
    pub outcome: OutcomeArg,
    /// Keep only group-periods with aggregated score at most 2.
    #[arg(long)]
    pub restrict: bool,
    #[arg(long)]
    pub drop_irrelevant: bool,
    /// Drop records with unrecognized status labels instead of failing.
    #[arg(long)]
    pub skip_unknown_status: bool,
    /// EPR header override `field=header`; fields: group_id, country_id, from, to, group, size, status.
    #[arg(long = "epr-column", value_name = "FIELD=HEADER")]
    pub epr_columns: Vec<String>,
    /// Polity header override `field=header`; fields: country_id, year, xropen, xrcomp.
    #[arg(long = "polity-column", value_name = "FIELD=HEADER")]
    pub polity_columns: Vec<String>,
    #[arg(long, default_value_t = 1e-9)]
    pub openness_tol: f64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LagArg {
    None,
    Lag,
    Iv,
}

impl From<LagArg> for LagMode {
    fn from(l: LagArg) -> Self {
        match l {
            LagArg::None => LagMode::Contemporaneous,
            LagArg::Lag => LagMode::Lagged,
            LagArg::Iv => LagMode::IvLagged,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    None,
    Openness,
    Competitiveness,
    Both,
}

impl SplitArg {
    fn kinds(self) -> Vec<SplitKind> {
        match self {
            SplitArg::None => vec![],
            SplitArg::Openness => vec![SplitKind::Openness],
            SplitArg::Competitiveness => vec![SplitKind::Competitiveness],
            SplitArg::Both => vec![SplitKind::Openness, SplitKind::Competitiveness],
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ClusterArg {
    Country,
    Observation,
}

#[derive(Debug, Args)]
pub struct InferenceArgs {
    #[arg(long, value_enum, default_value_t = ClusterArg::Country)]
    pub cluster: ClusterArg,
    /// Apply the G/(G-1) (N-1)/(N-K) covariance factor.
    #[arg(long)]
    pub cr1: bool,
    /// Use t(G-1) and F(q, G-1) reference distributions.
    #[arg(long)]
    pub small_sample: bool,
    /// Keep rows with access score at most this value.
    #[arg(long)]
    pub max_access: Option<f64>,
}

impl InferenceArgs {
    fn reference(&self) -> Reference {
        if self.small_sample {
            Reference::SmallSample
        } else {
            Reference::Asymptotic
        }
    }
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub panel: PathBuf,
    /// Ladder columns: `k`, `lo-hi` or a comma list.
    #[arg(long, default_value = "1-5")]
    pub spec_ladder: String,
    #[arg(long, value_enum, default_value_t = LagArg::None)]
    pub lag_mode: LagArg,
    #[arg(long, value_enum, default_value_t = SplitArg::None)]
    pub split: SplitArg,
    #[arg(long, value_enum, default_value_t = OutcomeArg::Ordinal)]
    pub outcome: OutcomeArg,
    /// Add the presence-abroad covariate.
    #[arg(long)]
    pub covariate: bool,
    #[command(flatten)]
    pub inference: InferenceArgs,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplicateArgs {
    #[arg(long)]
    pub panel: PathBuf,
    /// 5-year panel for the frequency robustness variant.
    #[arg(long)]
    pub five_year_panel: Option<PathBuf>,
    /// First-observation panel for the sampling robustness variant.
    #[arg(long)]
    pub first_obs_panel: Option<PathBuf>,
    #[arg(long, default_value = "1-5")]
    pub spec_ladder: String,
    /// Restrict the suite to one regressor timing; default runs every variant.
    #[arg(long, value_enum)]
    pub lag_mode: Option<LagArg>,
    /// Default: every split whose flags are present in the panel.
    #[arg(long, value_enum)]
    pub split: Option<SplitArg>,
    #[command(flatten)]
    pub inference: InferenceArgs,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// `results.json` written by estimate or replicate.
    #[arg(long)]
    pub results: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            if code == 0 {
                let _ = e.print();
            } else {
                let msg = e.to_string();
                eprintln!("error: {}", msg.trim_start_matches("error: ").trim_end());
            }
            return code;
        }
    };
    let verbose = cli.verbose;
    let result = match cli.command {
        Command::Sweep(a) => sweep_cmd(&a),
        Command::Synth(a) => synth_cmd(&a),
        Command::Ingest(a) => ingest_cmd(&a),
        Command::Estimate(a) => estimate_cmd(&a),
        Command::Replicate(a) => replicate_cmd(&a),
        Command::Report(a) => report_cmd(&a),
    };
    match result {
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            if verbose > 0 {
                for f in &outcome.files {
                    eprintln!("wrote {}", f.display());
                }
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Files written and non-fatal warnings.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

struct Out {
    dir: PathBuf,
    done: RunOutput,
}

impl Out {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), done: RunOutput::default() })
    }

    fn write(&mut self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
        let path = self.dir.join(name);
        let mut w = BufWriter::new(File::create(&path)?);
        f(&mut w)?;
        w.flush()?;
        self.done.files.push(path);
        Ok(())
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        self.write(name, |w| Ok(w.write_all(body.as_bytes())?))
    }

    fn json<T: serde::Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            Ok(writeln!(w)?)
        })
    }
}

fn sweep_cmd(a: &SweepArgs) -> Result<RunOutput> {
    let params = ModelParams::new(a.lambda, a.a1, a.gamma)?;
    let th = if a.thresholds { Some(thresholds(&params)?) } else { None };
    let rows = sweep_delta(&params, &interior_grid(a.grid))?;
    let mut out = Out::new(&a.out)?;
    out.write("sweep.csv", |w| write_sweep_csv(w, &rows))?;
    out.text("sweep.svg", &sweep_svg(&rows, th.as_ref()))?;
    if let Some(t) = &th {
        out.json("thresholds.json", t)?;
    }
    if a.phase > 0 {
        let gammas: Vec<f64> = if a.phase == 1 { vec![a.gamma] } else { (0..a.phase).map(|i| i as f64 / (a.phase - 1) as f64).collect() };
        let cells = phase_grid(&params, &interior_grid(a.grid), &gammas)?;
        out.write("phase.csv", |w| write_phase_csv(w, &cells))?;
        let gs = (params.a1() > 0.0).then(|| crate::model::gamma_star(&params));
        out.text("phase.svg", &phase_svg(&cells, gs))?;
    }
    Ok(out.done)
}

fn parse_range(s: &str, name: &str) -> Result<Range> {
    let bad = || Error::InvalidParameter(format!("{name}: expected `x` or `lo:hi`, got `{s}`"));
    match s.split_once(':') {
        Some((lo, hi)) => Ok(Range::new(lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?)),
        None => Ok(Range::fixed(s.trim().parse().map_err(|_| bad())?)),
    }
}

fn parse_groups(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::InvalidParameter(format!("groups: expected `k` or `lo-hi`, got `{s}`"));
    match s.split_once('-') {
        Some((lo, hi)) => Ok((lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?)),
        None => {
            let k = s.trim().parse().map_err(|_| bad())?;
            Ok((k, k))
        }
    }
}

/// `k`, `lo-hi` or `a,b,c`, each in 1..=5.
pub fn parse_ladder(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidParameter(format!("spec-ladder: expected columns in 1-5, got `{s}`"));
    let mut cols = Vec::new();
    for part in s.split(',') {
        match part.split_once('-') {
            Some((lo, hi)) => {
                let (lo, hi): (usize, usize) = (lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?);
                if lo > hi {
                    return Err(bad());
                }
                cols.extend(lo..=hi);
            }
            None => cols.push(part.trim().parse().map_err(|_| bad())?),
        }
    }
    if cols.is_empty() || cols.iter().any(|&c| !(1..=5).contains(&c)) {
        return Err(bad());
    }
    Ok(cols)
}

fn synth_cmd(a: &SynthArgs) -> Result<RunOutput> {
    let mut cfg = SynthConfig {
        n_countries: a.countries,
        groups_per_country: parse_groups(&a.groups)?,
        n_periods: a.periods,
        noise_sigma: a.sigma,
        seed: a.seed,
        ..SynthConfig::default()
    };
    cfg.params_prior.lambda = parse_range(&a.lambda, "lambda")?;
    cfg.params_prior.a1 = parse_range(&a.a1, "a1")?;
    cfg.params_prior.gamma = parse_range(&a.gamma, "gamma")?;
    if let ModeArg::Quadratic = a.mode {
        cfg.mode = DgpMode::Quadratic(QuadraticDgp {
            alpha: a.alpha,
            beta1: a.beta1,
            beta2: a.beta2,
            country_period_fe_sd: a.cp_sd,
            group_fe_sd: a.group_sd,
        });
    }
    let synth = generate(&cfg)?;
    let report = truth_report(&synth)?;
    let mut out = Out::new(&a.out)?;
    out.write("panel.csv", |w| synth.panel.write_csv(w))?;
    out.write("truth.json", |w| synth.write_truth_json(w))?;
    out.json("truth_report.json", &report)?;
    Ok(out.done)
}

fn apply_overrides(pairs: &[String], apply: &mut dyn FnMut(&str, String) -> bool) -> Result<()> {
    for p in pairs {
        let (k, v) = p.split_once('=').ok_or_else(|| Error::InvalidParameter(format!("column override `{p}` is not FIELD=HEADER")))?;
        if !apply(k.trim(), v.trim().to_string()) {
            return Err(Error::InvalidParameter(format!("unknown column field `{k}`")));
        }
    }
    Ok(())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn ingest_cmd(a: &IngestArgs) -> Result<RunOutput> {
    let mut cols = EprColumns { skip_unknown_status: a.skip_unknown_status, ..EprColumns::default() };
    apply_overrides(&a.epr_columns, &mut |k, v| {
        let slot = match k {
            "group_id" => &mut cols.group_id,
            "country_id" => &mut cols.country_id,
            "from" => &mut cols.from,
            "to" => &mut cols.to,
            "group" => &mut cols.group,
            "size" => &mut cols.size,
            "status" => &mut cols.status,
            _ => return false,
        };
        *slot = vec![v];
        true
    })?;
    let mut pcols = PolityColumns::default();
    apply_overrides(&a.polity_columns, &mut |k, v| {
        let slot = match k {
            "country_id" => &mut pcols.country_id,
            "year" => &mut pcols.year,
            "xropen" => &mut pcols.xropen,
            "xrcomp" => &mut pcols.xrcomp,
            _ => return false,
        };
        *slot = vec![v];
        true
    })?;

    let epr = read_epr(open(&a.epr)?, &cols)?;
    let polity = a.polity.as_ref().map(|p| read_polity(open(p)?, &pcols)).transpose()?;
    let mut warnings = epr.warnings.clone();
    let (annual, w) = expand_years(&epr.records)?;
    warnings.extend(w);

    let grid = if a.freq == FreqArg::Ten { PeriodGrid::TEN_YEAR } else { PeriodGrid::FIVE_YEAR };
    let aggregation = match a.agg {
        AggArg::Mean => Aggregation::Mean,
        AggArg::First => Aggregation::First,
    };
    let opts = PanelBuildOptions { grid, aggregation, restrict_score_leq_2: false, drop_irrelevant: a.drop_irrelevant };
    let full = build_panel(&annual, &opts)?;
    warnings.extend(full.warnings.iter().cloned());
    let mut panel = full.panel.clone();
    if a.restrict {
        let restricted = build_panel(&annual, &PanelBuildOptions { restrict_score_leq_2: true, ..opts.clone() })?;
        warnings.extend(restricted.warnings.into_iter().filter(|w| w.contains("no observations")));
        panel = restricted.panel;
    }
    let oopts = OpennessOptions { grid, tolerance: a.openness_tol, ..OpennessOptions::default() };
    let openness = match &polity {
        Some(recs) => {
            let s = attach_openness(&mut panel, recs, &oopts)?;
            warnings.extend(s.warnings.iter().cloned());
            Some(s)
        }
        None => None,
    };

    let baseline = a.freq == FreqArg::Ten && matches!(a.agg, AggArg::Mean) && !a.drop_irrelevant;
    let targets = ReferenceTargets::epr_core_2018();
    let report = validate_dataset(&full.panel, baseline.then_some(&targets));

    let mut out = Out::new(&a.out)?;
    out.write("panel.csv", |w| panel.write_csv(w))?;
    out.text("validation.txt", &report.to_text())?;
    out.json("validation.json", &report)?;
    let meta = serde_json::json!({
        "build": opts,
        "restrict_score_leq_2": a.restrict,
        "outcome": Outcome::from(a.outcome),
        "openness": oopts,
        "polity_medians": openness.as_ref().map(|s| &s.medians),
        "missing_polity_countries": openness.as_ref().map(|s| &s.missing_countries),
        "rows": panel.len(),
        "warnings": &warnings,
    });
    out.json("ingest.json", &meta)?;
    out.done.warnings = warnings;
    Ok(out.done)
}

fn read_panel(path: &Path) -> Result<Panel> {
    let p = Panel::read_csv(open(path)?)?;
    if p.is_empty() {
        return Err(Error::EmptyPanel);
    }
    Ok(p)
}

fn require_flags(panel: &Panel, kinds: &[SplitKind]) -> Result<()> {
    for k in kinds {
        let (present, column) = match k {
            SplitKind::Openness => (panel.rows.iter().any(|r| r.high_openness.is_some()), "high_openness"),
            SplitKind::Competitiveness => (panel.rows.iter().any(|r| r.high_competitiveness.is_some()), "high_competitiveness"),
        };
        if !present {
            return Err(Error::MissingColumn(format!("{column} (split requested but the panel has no polity flags)")));
        }
    }
    Ok(())
}

fn write_results(out: &mut Out, results: &SuiteResults) -> Result<()> {
    out.write("results.csv", |w| results.write_csv(w))?;
    out.write("results.json", |w| {
        results.write_json(&mut *w)?;
        Ok(writeln!(w)?)
    })
}

fn estimate_cmd(a: &EstimateArgs) -> Result<RunOutput> {
    let columns = parse_ladder(&a.spec_ladder)?;
    let panel = read_panel(&a.panel)?;
    let kinds = a.split.kinds();
    require_flags(&panel, &kinds)?;
    let lag: LagMode = a.lag_mode.into();
    let variant = match (lag, Outcome::from(a.outcome), a.covariate) {
        (LagMode::Lagged, ..) => Variant::Lagged,
        (LagMode::IvLagged, ..) => Variant::Iv,
        (_, Outcome::Binary, _) => Variant::Dichotomous,
        (_, _, true) => Variant::Covariate,
        _ => Variant::Contemporaneous,
    };
    let mut splits: Vec<Option<(SplitKind, bool)>> = vec![None];
    if !kinds.is_empty() {
        splits = kinds.iter().flat_map(|&k| [Some((k, true)), Some((k, false))]).collect();
    }
    let mut cells = Vec::new();
    for split in splits {
        for &column in &columns {
            let mut spec = RegressionSpec::ladder(column).expect("validated column").with_lag_mode(lag);
            spec.outcome = a.outcome.into();
            spec.include_presence_abroad = a.covariate;
            spec.cluster_by = match a.inference.cluster {
                ClusterArg::Country => ClusterBy::Country,
                ClusterArg::Observation => ClusterBy::Observation,
            };
            spec.max_access = a.inference.max_access;
            spec.small_sample_correction = a.inference.cr1;
            spec.reference = a.inference.reference();
            spec.subsample = split.map(|(k, high)| match k {
                SplitKind::Openness => Subsample::Openness { high },
                SplitKind::Competitiveness => Subsample::Competitiveness { high },
            });
            let outcome = fit(&panel, &spec).map_err(|e| e.to_string());
            cells.push(SuiteCell { variant, column, split: split.map(|(k, h)| k.label(h)), spec, outcome });
        }
    }
    let results = SuiteResults { cells };
    let mut out = Out::new(&a.out)?;
    write_results(&mut out, &results)?;
    print!("{}", summary_table(&results));
    out.done.warnings = failure_warnings(&results);
    Ok(out.done)
}

fn failure_warnings(results: &SuiteResults) -> Vec<String> {
    results
        .cells
        .iter()
        .filter_map(|c| c.outcome.as_ref().err().map(|e| (c, e)))
        .map(|(c, e)| format!("{} column {}{}: {e}", c.variant.label(), c.column, c.split.as_ref().map_or(String::new(), |s| format!(" [{s}]"))))
        .collect()
}

fn summary_table(results: &SuiteResults) -> String {
    let mut s = String::from("variant            col split                   beta1 (se)              beta2 (se)              peak      n\n");
    for c in &results.cells {
        let split = c.split.as_deref().unwrap_or("-");
        match &c.outcome {
            Ok(f) => s.push_str(&format!(
                "{:<18} {:<3} {:<22} {:>9.4} ({:.4})    {:>9.4} ({:.4})    {:<9} {}\n",
                c.variant.label(),
                c.column,
                split,
                f.beta1(),
                f.se1(),
                f.beta2(),
                f.se2(),
                f.peak.map_or("-".to_string(), |p| format!("{:.3}", p.peak)),
                f.n_obs
            )),
            Err(e) => s.push_str(&format!("{:<18} {:<3} {:<22} failed: {e}\n", c.variant.label(), c.column, split)),
        }
    }
    s
}

/// Column (1) quadratic on a panel: `(const, b1, b2)`.
fn pooled_quadratic(panel: &Panel) -> Option<(f64, f64, f64)> {
    let f = fit(panel, &RegressionSpec::default()).ok()?;
    Some((f.coefficient("const")?, f.beta1(), f.beta2()))
}

fn scatter_outputs(out: &mut Out, stem: &str, panel: &Panel, title: &str) -> Result<()> {
    let curve = pooled_quadratic(panel);
    out.write(&format!("{stem}.csv"), |w| {
        writeln!(w, "size,access,fitted")?;
        for r in &panel.rows {
            let fitted = curve.map_or(String::new(), |(a, b1, b2)| crate::fmt::sig(a + b1 * r.size + b2 * r.size_sq, 9));
            writeln!(w, "{},{},{}", crate::fmt::sig(r.size, 9), crate::fmt::sig(r.access, 9), fitted)?;
        }
        Ok(())
    })?;
    let points: Vec<(f64, f64)> = panel.rows.iter().map(|r| (r.size, r.access)).collect();
    out.text(&format!("{stem}.svg"), &scatter_quadratic_svg(&points, curve, title))
}

fn replicate_cmd(a: &ReplicateArgs) -> Result<RunOutput> {
    let columns = parse_ladder(&a.spec_ladder)?;
    let panel = read_panel(&a.panel)?;
    let five = a.five_year_panel.as_deref().map(read_panel).transpose()?;
    let first = a.first_obs_panel.as_deref().map(read_panel).transpose()?;
    let mut warnings = Vec::new();
    let kinds = match a.split {
        Some(s) => {
            let k = s.kinds();
            require_flags(&panel, &k)?;
            k
        }
        None => SplitArg::Both.kinds().into_iter().filter(|k| require_flags(&panel, &[*k]).is_ok()).collect(),
    };

    let mut menu = SuiteMenu::full();
    menu.columns = columns.clone();
    menu.iv_columns = columns.clone();
    menu.split_columns = columns.iter().copied().filter(|c| [4, 5].contains(c)).collect();
    if menu.split_columns.is_empty() {
        menu.split_columns = columns.clone();
    }
    menu.splits = kinds.clone();
    menu.max_access = a.inference.max_access;
    menu.small_sample_correction = a.inference.cr1;
    menu.reference = a.inference.reference();
    if let Some(lag) = a.lag_mode {
        let keep = match lag {
            LagArg::None => Variant::Contemporaneous,
            LagArg::Lag => Variant::Lagged,
            LagArg::Iv => Variant::Iv,
        };
        menu.variants.retain(|v| *v == keep || (keep == Variant::Contemporaneous && !matches!(v, Variant::Lagged | Variant::Iv)));
    }
    if five.is_none() {
        menu.variants.retain(|v| *v != Variant::FiveYear);
        warnings.push("no --five-year-panel; five-year variant skipped".to_string());
    }
    if first.is_none() {
        menu.variants.retain(|v| *v != Variant::FirstObservation);
        warnings.push("no --first-obs-panel; first-observation variant skipped".to_string());
    }
    let data = SuiteData { baseline: &panel, five_year: five.as_ref(), first_obs: first.as_ref() };
    let results = replicate_suite(data, &menu);

    if results.cells.iter().all(|c| c.outcome.is_err()) {
        let first_err = results.cells.first().and_then(|c| c.outcome.as_ref().err()).cloned().unwrap_or_default();
        return Err(Error::InvalidConfig(format!("every specification failed; first error: {first_err}")));
    }

    let mut out = Out::new(&a.out)?;
    write_results(&mut out, &results)?;
    let sample = match a.inference.max_access {
        Some(m) => panel.filter(|r| r.access <= m),
        None => panel.clone(),
    };
    scatter_outputs(&mut out, "figure_size_access", &sample, "access to power against relative size")?;
    for k in &kinds {
        for high in [true, false] {
            let label = k.label(high);
            let sub = sample.filter(|r| match k {
                SplitKind::Openness => r.high_openness == Some(high),
                SplitKind::Competitiveness => r.high_competitiveness == Some(high),
            });
            scatter_outputs(&mut out, &format!("figure_{label}"), &sub, &label.replace('_', " "))?;
        }
    }
    out.text("summary.txt", &summary_table(&results))?;
    print!("{}", summary_table(&results));
    warnings.extend(failure_warnings(&results));
    out.done.warnings = warnings;
    Ok(out.done)
}

fn stars(p: f64) -> &'static str {
    match p {
        p if p < 0.01 => "***",
        p if p < 0.05 => "**",
        p if p < 0.10 => "*",
        p if p < 0.15 => "†",
        _ => "",
    }
}

/// Markdown tables from a results JSON value, one per (variant, split).
pub fn render_report(json: &serde_json::Value) -> Result<String> {
    let cells = json.get("cells").and_then(|c| c.as_array()).ok_or_else(|| Error::MissingColumn("cells".into()))?;
    let mut groups: Vec<(String, Vec<&serde_json::Value>)> = Vec::new();
    for c in cells {
        let key = format!(
            "{}{}",
            c["variant"].as_str().unwrap_or("?"),
            c["split"].as_str().map_or(String::new(), |s| format!(" / {s}"))
        );
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(c),
            None => groups.push((key, vec![c])),
        }
    }
    let num = |v: &serde_json::Value| v.as_f64().map_or("-".to_string(), |x| format!("{x:.3}"));
    let mut s = String::new();
    for (key, cells) in groups {
        s.push_str(&format!("## {key}\n\n|  |"));
        for c in &cells {
            s.push_str(&format!(" ({}) |", c["column"]));
        }
        s.push_str("\n|---|");
        s.push_str(&"---|".repeat(cells.len()));
        s.push('\n');
        let row = |label: &str, f: &dyn Fn(&serde_json::Value) -> String| {
            let mut r = format!("| {label} |");
            for c in &cells {
                let fit = &c["outcome"]["fit"];
                let v = if c["outcome"]["status"] == "ok" { f(fit) } else { "failed".into() };
                r.push_str(&format!(" {v} |"));
            }
            r.push('\n');
            r
        };
        for (label, k) in [("size", 0usize), ("size²", 1)] {
            s.push_str(&row(label, &|fit| {
                let j = fit["focal"][k].as_u64().unwrap_or(0) as usize;
                let p = fit["p_values"][j].as_f64().unwrap_or(1.0);
                format!("{}{}", num(&fit["beta"][j]), stars(p))
            }));
            s.push_str(&row("", &|fit| {
                let j = fit["focal"][k].as_u64().unwrap_or(0) as usize;
                format!("({})", num(&fit["std_errors"][j]))
            }));
        }
        s.push_str(&row("peak", &|fit| num(&fit["peak"]["peak"])));
        s.push_str(&row("peak percentile", &|fit| num(&fit["peak"]["percentile"])));
        s.push_str(&row("joint Wald p", &|fit| num(&fit["wald_joint"]["p_value"])));
        s.push_str(&row("observations", &|fit| fit["n_obs"].to_string()));
        s.push_str(&row("clusters", &|fit| fit["n_clusters"].to_string()));
        let fe_row = |label: &str, get: &dyn Fn(&serde_json::Value) -> bool| {
            let mut r = format!("| {label} |");
            for c in &cells {
                r.push_str(if get(&c["spec"]) { " yes |" } else { " no |" });
            }
            r.push('\n');
            r
        };
        s.push_str(&fe_row("country FE", &|sp| sp["fe"]["country"] == true));
        s.push_str(&fe_row("period FE", &|sp| sp["fe"]["period"] == true));
        s.push_str(&fe_row("country × period FE", &|sp| sp["fe"]["country_period"] == true));
        s.push_str(&fe_row("group FE", &|sp| sp["fe"]["group"] == true));
        s.push_str(&fe_row("group trends", &|sp| sp["group_trends"] == true));
        s.push('\n');
    }
    s.push_str("Cluster-robust standard errors by country in parentheses. † 15%, * 10%, ** 5%, *** 1%.\n");
    Ok(s)
}

fn report_cmd(a: &ReportArgs) -> Result<RunOutput> {
    let json: serde_json::Value = serde_json::from_reader(open(&a.results)?)?;
    let text = render_report(&json)?;
    let mut out = Out::new(&a.out)?;
    out.text("report.md", &text)?;
    print!("{text}");
    Ok(out.done)
}
