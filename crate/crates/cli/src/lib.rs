//! Command-line pipeline: simulate, fit, bootstrap, tail curves,
//! conditional maps and simulation studies.

use clap::{Parser, Subcommand, ValueEnum};
use scalemix::gaussian::sites::SiteSet;
use scalemix::inference::study::{write_envelope_csv, write_table_csv};
use scalemix::inference::{
    block_bootstrap, fit, rank_transform, simulation_study, BootstrapConfig, CensorConfig, FitOptions, FitResult,
    LikelihoodConfig, OptimConfig, Scenario, StudyConfig,
};
use scalemix::mixture::{Family, ParamVector};
use scalemix::simulation::{conditional_quantile_map, simulate, McmcConfig, QuantileMapSpec};
use scalemix::taildep::{empirical_curve, parametric_curve, TailCurve, TailMeasure};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or input files (exit code 2).
    Config(String),
    /// The numerics failed (exit code 3).
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<scalemix::Error> for CliError {
    fn from(e: scalemix::Error) -> Self {
        use scalemix::Error as E;
        match e {
            E::InvalidParameter(_) | E::InvalidData(_) | E::Io(_) | E::Csv(_) | E::Json(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

fn config_err<E: std::fmt::Display>(ctx: &str) -> impl FnOnce(E) -> CliError + '_ {
    move |e| CliError::Config(format!("{ctx}: {e}"))
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn parse_kv(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, found '{s}'"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("cannot parse '{v}' as a number"))?;
    Ok((k.trim().to_string(), v))
}

fn parse_list(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| CliError::Config(format!("cannot parse '{t}' as a number"))))
        .collect()
}

#[derive(Debug, Parser)]
#[command(name = "scalemix", version, about = "Gaussian scale mixture copulas for spatial extremes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Model family: gauss, student, rayleigh, slash, gpd, model2, model3.
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// Marginal censoring threshold applied at every site.
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// TOML file with defaults; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Parameter value, `name=value` (start value when fitting).
    #[arg(long = "param", global = true, value_parser = parse_kv)]
    pub params: Vec<(String, f64)>,
    /// Parameter held fixed, `name=value`.
    #[arg(long = "fix", global = true, value_parser = parse_kv)]
    pub fixed: Vec<(String, f64)>,
    /// Geometric anisotropy (adds aniso_ratio and angle).
    #[arg(long, global = true)]
    pub anisotropic: bool,
    #[arg(long, global = true)]
    pub starts: Option<usize>,
    #[arg(long, global = true)]
    pub max_iter: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StudyKind {
    Table,
    Figure1,
    Figure3,
    All,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw replicates of the model at the given sites.
    Simulate {
        #[arg(long)]
        sites: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit by censored pseudo-likelihood.
    Fit {
        #[arg(long)]
        sites: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Number of block bootstrap replicates for intervals.
        #[arg(long)]
        bootstrap: Option<usize>,
        #[arg(long)]
        block_length: Option<i64>,
    },
    /// Block bootstrap of the fitted parameters.
    Bootstrap {
        #[arg(long)]
        sites: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        block_length: i64,
    },
    /// Tail dependence curves for one pair of sites.
    Chi {
        #[arg(long)]
        sites: PathBuf,
        /// Observations for empirical curves.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Fit result whose parameters give the model curves.
        #[arg(long)]
        fit: Option<PathBuf>,
        /// Two site labels, `a,b`.
        #[arg(long)]
        pair: String,
        /// Comma-separated levels; default 0.90, 0.91, ..., 0.99, 0.995, 0.999.
        #[arg(long)]
        levels: Option<String>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Conditional quantile maps given values at some sites.
    Condsim {
        #[arg(long)]
        sites: PathBuf,
        /// CSV `label,value` of conditioning values.
        #[arg(long)]
        values: PathBuf,
        #[arg(long)]
        fit: Option<PathBuf>,
        /// CSV `label,x,y` of target points.
        #[arg(long)]
        grid: Option<PathBuf>,
        /// Regular `k×k` grid over the bounding box of the sites.
        #[arg(long)]
        grid_size: Option<usize>,
        #[arg(long, default_value = "0.25,0.75")]
        probs: String,
        #[arg(long, default_value_t = 500)]
        n: usize,
        /// Conditioning values are on the uniform scale.
        #[arg(long)]
        uniform_input: bool,
        /// Report quantiles on the uniform scale.
        #[arg(long)]
        uniform_scale: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Repeated simulate and fit experiments.
    Study {
        #[arg(long, value_enum, default_value_t = StudyKind::Figure1)]
        scenario: StudyKind,
        #[arg(long, default_value_t = 10)]
        d: usize,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long, default_value_t = 500)]
        envelope_reps: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub model: Option<String>,
    pub threshold: Option<f64>,
    /// Per-site thresholds, in site order.
    pub thresholds: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub anisotropic: Option<bool>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub fixed: BTreeMap<String, f64>,
    pub optim: Option<OptimConfig>,
    pub likelihood: Option<LikelihoodConfig>,
    pub mcmc: Option<McmcConfig>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(config_err(&path.display().to_string()))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Settings after merging flags, config file and defaults.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub psi: ParamVector,
    pub threshold: f64,
    pub thresholds: Option<Vec<f64>>,
    pub seed: u64,
    pub threads: Option<usize>,
    pub optim: OptimConfig,
    pub likelihood: LikelihoodConfig,
    pub mcmc: McmcConfig,
}

impl RunConfig {
    pub fn resolve(cli: &Cli) -> CliResult<Self> {
        let file = match &cli.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let model = cli.model.clone().or(file.model.clone()).unwrap_or_else(|| "model2".into());
        let family: Family = model.parse().map_err(|e: scalemix::Error| CliError::Config(e.to_string()))?;
        let aniso = cli.anisotropic || file.anisotropic.unwrap_or(false);
        let mut psi = ParamVector::new(family, aniso);
        let mut params = file.params.clone();
        params.extend(cli.params.iter().cloned());
        let mut fixed = file.fixed.clone();
        fixed.extend(cli.fixed.iter().cloned());
        for (k, v) in &params {
            psi.set(k, *v)?;
        }
        for (k, v) in &fixed {
            psi.fix(k, *v)?;
        }
        let threshold = cli.threshold.or(file.threshold).unwrap_or(0.95);
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(CliError::Config(format!("threshold {threshold} outside (0,1)")));
        }
        let mut optim = file.optim.unwrap_or_default();
        if let Some(s) = cli.starts {
            optim.starts = s;
        }
        if let Some(m) = cli.max_iter {
            optim.max_iter = m;
        }
        if optim.starts == 0 || optim.max_iter == 0 {
            return Err(CliError::Config("starts and max_iter must be positive".into()));
        }
        let mcmc = file.mcmc.unwrap_or_default();
        mcmc.validate()?;
        let threads = cli.threads.or(file.threads);
        if threads == Some(0) {
            return Err(CliError::Config("threads must be positive".into()));
        }
        Ok(Self {
            psi,
            threshold,
            // a flag overrides per-site values from the file
            thresholds: if cli.threshold.is_some() { None } else { file.thresholds },
            seed: cli.seed.or(file.seed).unwrap_or(0),
            threads,
            optim,
            likelihood: file.likelihood.unwrap_or_default(),
            mcmc,
        })
    }

    pub fn censor(&self, d: usize) -> CliResult<CensorConfig> {
        let c = match &self.thresholds {
            Some(t) => CensorConfig { thresholds: t.clone() },
            None => CensorConfig::uniform(d, self.threshold)?,
        };
        c.validate(d)?;
        Ok(c)
    }

    pub fn fit_options(&self, d: usize) -> CliResult<FitOptions> {
        let mut o = FitOptions::new(self.censor(d)?);
        o.optim = self.optim;
        o.likelihood = self.likelihood.clone();
        o.seed = self.seed;
        Ok(o)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationMeta {
    pub psi: ParamVector,
    pub n: usize,
    pub seed: u64,
    pub version: String,
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(config_err(&dir.display().to_string()))?;
        }
    }
    File::create(path).map(BufWriter::new).map_err(config_err(&path.display().to_string()))
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(config_err(&path.display().to_string()))
}

fn read_sites(path: &Path) -> CliResult<SiteSet> {
    scalemix::io::read_sites(open(path)?).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn read_data(path: &Path, sites: &SiteSet) -> CliResult<scalemix::inference::Dataset> {
    scalemix::io::read_observations(open(path)?, sites).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn read_fit(path: &Path) -> CliResult<FitResult> {
    serde_json::from_reader(open(path)?).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Config(e.to_string()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(config_err(&path.display().to_string()))
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn cmd_simulate(cfg: &RunConfig, sites: &Path, n: usize, out: &Path) -> CliResult<()> {
    let sites = read_sites(sites)?;
    let model = cfg.psi.model(&sites)?;
    let x = simulate(&model, n, cfg.seed)?;
    scalemix::io::write_observations(&sites, &x, None, create(out)?)?;
    let meta = SimulationMeta { psi: cfg.psi.clone(), n, seed: cfg.seed, version: env!("CARGO_PKG_VERSION").into() };
    write_json(&sidecar_path(out), &meta)
}

#[derive(Debug, Serialize)]
struct FailureTrace<'a> {
    error: &'a str,
    seed: u64,
    start: &'a ParamVector,
}

fn cmd_fit(cfg: &RunConfig, sites: &Path, data: &Path, out: &Path, bootstrap: Option<usize>, block_length: Option<i64>) -> CliResult<()> {
    let sites = read_sites(sites)?;
    let data = read_data(data, &sites)?;
    let opts = cfg.fit_options(sites.len())?;
    let mut result = match fit(&data, &cfg.psi, &opts) {
        Ok(r) => r,
        Err(e) => {
            let err = CliError::from(e);
            let msg = err.to_string();
            write_json(out, &FailureTrace { error: &msg, seed: cfg.seed, start: &cfg.psi })?;
            return Err(err);
        }
    };
    if let Some(reps) = bootstrap {
        let bc = BootstrapConfig::new(block_length.unwrap_or(1), reps, cfg.seed);
        let b = block_bootstrap(&data, &cfg.psi, &opts, &bc)?;
        if b.intervals.is_none() {
            log::warn!("{} of {reps} bootstrap refits failed; no intervals", b.failures.len());
        }
        result.intervals = b.intervals;
    } else if block_length.is_some() {
        return Err(CliError::Config("--block-length needs --bootstrap".into()));
    }
    write_json(out, &result)
}

fn cmd_bootstrap(cfg: &RunConfig, sites: &Path, data: &Path, out: &Path, reps: usize, block_length: i64) -> CliResult<()> {
    let sites = read_sites(sites)?;
    let data = read_data(data, &sites)?;
    let opts = cfg.fit_options(sites.len())?;
    let b = block_bootstrap(&data, &cfg.psi, &opts, &BootstrapConfig::new(block_length, reps, cfg.seed))?;
    write_json(out, &b)
}

fn write_curves(path: &Path, curves: &[TailCurve]) -> CliResult<()> {
    let mut w = create(path)?;
    writeln!(w, "u,value,lo,hi,estimator").map_err(config_err(&path.display().to_string()))?;
    for c in curves {
        let mut buf = Vec::new();
        c.write_csv(&mut buf)?;
        let text = String::from_utf8(buf).map_err(|e| CliError::Config(e.to_string()))?;
        for line in text.lines().skip(1) {
            writeln!(w, "{line}").map_err(config_err(&path.display().to_string()))?;
        }
    }
    w.flush().map_err(config_err(&path.display().to_string()))
}

pub fn default_levels() -> Vec<f64> {
    scalemix::inference::study::default_levels()
}

#[allow(clippy::too_many_arguments)]
fn cmd_chi(cfg: &RunConfig, sites: &Path, data: Option<&Path>, fit_path: Option<&Path>, pair: &str, levels: Option<&str>, out_dir: &Path) -> CliResult<()> {
    let sites = read_sites(sites)?;
    let (a, b) = pair.split_once(',').ok_or_else(|| CliError::Config(format!("--pair expects 'a,b', found '{pair}'")))?;
    let idx = |l: &str| sites.index_of(l.trim()).ok_or_else(|| CliError::Config(format!("unknown site '{l}'")));
    let (ia, ib) = (idx(a)?, idx(b)?);
    if ia == ib {
        return Err(CliError::Config("--pair needs two distinct sites".into()));
    }
    let levels = match levels {
        Some(s) => parse_list(s)?,
        None => default_levels(),
    };
    let psi = match fit_path {
        Some(p) => read_fit(p)?.psi,
        None => cfg.psi.clone(),
    };
    let pair_sites = sites.subset(&[ia, ib])?;
    let model = psi.model(&pair_sites)?;
    let empirical = match data {
        Some(p) => {
            let d = read_data(p, &sites)?;
            Some(rank_transform(&d)?.pairs(ia, ib))
        }
        None => None,
    };
    fs::create_dir_all(out_dir).map_err(config_err(&out_dir.display().to_string()))?;
    for (measure, name) in [(TailMeasure::Chi, "chi"), (TailMeasure::Chibar, "chibar"), (TailMeasure::CondExceed, "cond_exceed")] {
        let mut curves = vec![parametric_curve(&model, measure, &levels)?];
        if let Some(p) = &empirical {
            curves.push(empirical_curve(p, measure, &levels)?);
        }
        write_curves(&out_dir.join(format!("{name}.csv")), &curves)?;
    }
    Ok(())
}

fn regular_grid(sites: &SiteSet, k: usize) -> CliResult<SiteSet> {
    if k < 1 {
        return Err(CliError::Config("grid size must be positive".into()));
    }
    let c = sites.coords();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in c {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    let step = |lo: f64, hi: f64, i: usize| if k == 1 { 0.5 * (lo + hi) } else { lo + (hi - lo) * i as f64 / (k - 1) as f64 };
    let mut coords = Vec::with_capacity(k * k);
    let mut labels = Vec::with_capacity(k * k);
    for j in 0..k {
        for i in 0..k {
            coords.push([step(x0, x1, i), step(y0, y1, j)]);
            labels.push(format!("g{}_{}", i, j));
        }
    }
    Ok(SiteSet::new(coords, labels)?)
}

fn read_values(path: &Path, sites: &SiteSet) -> CliResult<(Vec<usize>, Vec<f64>)> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open(path)?);
    let header: Vec<String> = rd.headers().map_err(config_err("values"))?.iter().map(String::from).collect();
    if header != ["label", "value"] {
        return Err(CliError::Config(format!("{}: line 1: header must be 'label,value'", path.display())));
    }
    let mut idx = Vec::new();
    let mut vals = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(config_err(&path.display().to_string()))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let k = sites
            .index_of(&rec[0])
            .ok_or_else(|| CliError::Config(format!("{}: line {line}: unknown site '{}'", path.display(), &rec[0])))?;
        if idx.contains(&k) {
            return Err(CliError::Config(format!("{}: line {line}: site '{}' repeated", path.display(), &rec[0])));
        }
        let v: f64 = rec[1]
            .parse()
            .map_err(|_| CliError::Config(format!("{}: line {line}: cannot parse value '{}'", path.display(), &rec[1])))?;
        idx.push(k);
        vals.push(v);
    }
    if idx.is_empty() {
        return Err(CliError::Config(format!("{}: no conditioning values", path.display())));
    }
    Ok((idx, vals))
}

#[allow(clippy::too_many_arguments)]
fn cmd_condsim(
    cfg: &RunConfig,
    sites: &Path,
    values: &Path,
    fit_path: Option<&Path>,
    grid: Option<&Path>,
    grid_size: Option<usize>,
    probs: &str,
    n: usize,
    uniform_input: bool,
    uniform_scale: bool,
    out: &Path,
) -> CliResult<()> {
    let sites = read_sites(sites)?;
    let (idx, mut x1) = read_values(values, &sites)?;
    let psi = match fit_path {
        Some(p) => read_fit(p)?.psi,
        None => cfg.psi.clone(),
    };
    let given = sites.subset(&idx)?;
    if uniform_input {
        let m = psi.model(&given)?;
        for v in x1.iter_mut() {
            if !(*v > 0.0 && *v < 1.0) {
                return Err(CliError::Config(format!("uniform value {v} outside (0,1)")));
            }
            *v = m.marginal_quantile(0, *v)?;
        }
    }
    let grid = match (grid, grid_size) {
        (Some(p), None) => read_sites(p)?,
        (None, Some(k)) => regular_grid(&sites, k)?,
        (None, None) => regular_grid(&sites, 20)?,
        (Some(_), Some(_)) => return Err(CliError::Config("give either --grid or --grid-size".into())),
    };
    let spec = QuantileMapSpec {
        probabilities: parse_list(probs)?,
        n,
        mcmc: cfg.mcmc,
        uniform_scale,
        seed: cfg.seed,
    };
    let map = conditional_quantile_map(psi.radial_law()?, &psi.correlation_model()?, &given, &x1, &grid, &spec)?;
    scalemix::io::write_quantile_map(&grid, &map, create(out)?)?;
    Ok(())
}

fn cmd_study(cfg: &RunConfig, kind: StudyKind, d: usize, n: usize, reps: usize, envelope_reps: usize, out_dir: &Path) -> CliResult<()> {
    let mut scenarios = Vec::new();
    if matches!(kind, StudyKind::Table | StudyKind::All) {
        scenarios.extend(Scenario::table_grid(d, n));
    }
    if matches!(kind, StudyKind::Figure1 | StudyKind::All) {
        scenarios.push(Scenario::model2(1.0, 1.0, d, n));
    }
    if matches!(kind, StudyKind::Figure3 | StudyKind::All) {
        scenarios.push(Scenario::misspecified_student(10.0, 0.5, d, n));
    }
    for s in scenarios.iter_mut() {
        s.threshold = cfg.threshold;
    }
    let mut sc = StudyConfig::new(reps, cfg.seed);
    sc.fit.optim = cfg.optim;
    sc.fit.likelihood = cfg.likelihood.clone();
    sc.truth_envelope_reps = envelope_reps;
    let cells = simulation_study(&scenarios, &sc)?;
    fs::create_dir_all(out_dir).map_err(config_err(&out_dir.display().to_string()))?;
    write_table_csv(&cells, create(&out_dir.join("table.csv"))?)?;
    write_envelope_csv(&cells, create(&out_dir.join("envelopes.csv"))?)?;
    write_json(&out_dir.join("cells.json"), &cells)
}

pub fn run(cli: Cli) -> CliResult<()> {
    let cfg = RunConfig::resolve(&cli)?;
    if let Some(t) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            log::debug!("thread pool already configured: {e}");
        }
    }
    match &cli.command {
        Command::Simulate { sites, n, out } => cmd_simulate(&cfg, sites, *n, out),
        Command::Fit { sites, data, out, bootstrap, block_length } => cmd_fit(&cfg, sites, data, out, *bootstrap, *block_length),
        Command::Bootstrap { sites, data, out, reps, block_length } => cmd_bootstrap(&cfg, sites, data, out, *reps, *block_length),
        Command::Chi { sites, data, fit, pair, levels, out_dir } => {
            cmd_chi(&cfg, sites, data.as_deref(), fit.as_deref(), pair, levels.as_deref(), out_dir)
        }
        Command::Condsim { sites, values, fit, grid, grid_size, probs, n, uniform_input, uniform_scale, out } => cmd_condsim(
            &cfg,
            sites,
            values,
            fit.as_deref(),
            grid.as_deref(),
            *grid_size,
            probs,
            *n,
            *uniform_input,
            *uniform_scale,
            out,
        ),
        Command::Study { scenario, d, n, reps, envelope_reps, out_dir } => cmd_study(&cfg, *scenario, *d, *n, *reps, *envelope_reps, out_dir),
    }
}
