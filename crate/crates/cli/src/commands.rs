use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Subcommand, ValueEnum};
use serde_json::{json, Value};

use ergokit::diagnostics::{
    birkhoff_divergence_check, check_evc, check_lbc, check_tightness, check_uniform_integrability, default_k_grid,
    lyapunov_report, stability_report, DiagnosticReport, Equivalence, EvcVariant, IfsStructural, Lbc, LimitGridSpec,
    LyapunovSpec, StabilityConfig, StructuralLaws, DEFAULT_EVC_TOLERANCE, DEFAULT_LBC_FLOOR, DEFAULT_TIGHTNESS_LEVEL,
    DEFAULT_UI_TOLERANCE,
};
use ergokit::distances::{tv_distance, wasserstein_exact, weighted_tv};
use ergokit::markov::{propagate, simulate_path, simulate_paths, Engine, SharedFn, SparseDistribution, StateFn};
use ergokit::models::{self, ModelDescriptor, FAMILY_IDS};
use ergokit::reproduce::{reproduce, ReproduceOptions, DEFAULT_REPRODUCE_SEED, TABLE_IDS};
use ergokit::stats::stream_rng;
use ergokit::State;

use crate::artifacts::ArtifactSet;
use crate::config::ExperimentConfig;
use crate::{Cli, CliError, Command, Format, GlobalArgs, ListKind, Status};

/// Stdout writes that stop quietly when the reader goes away.
macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = write!(std::io::stdout().lock(), $($t)*);
    }};
}
macro_rules! outln {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($t)*);
    }};
}

pub const DEFAULT_SAMPLES: usize = 2_000;
pub const DEFAULT_DISCRETE_HORIZON: f64 = 40.0;
pub const DEFAULT_JUMP_HORIZON: f64 = 200.0;
/// Grid points used when only a horizon is given for a jump chain.
const JUMP_GRID_POINTS: usize = 20;

/// Global flags merged with the config file.
pub struct Settings {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub horizon: Option<f64>,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub force: bool,
    pub config: ExperimentConfig,
}

impl Settings {
    fn new(g: &GlobalArgs) -> Result<Self, CliError> {
        let config = match &g.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        Ok(Settings {
            seed: g.seed.or(config.experiment.seed),
            samples: g.samples.or(config.grid.samples),
            horizon: g.horizon.or(config.experiment.horizon),
            output: g.output.clone().or_else(|| config.output.path.clone()),
            format: g.format.or(config.output.format).unwrap_or_default(),
            force: g.force,
            config,
        })
    }

    /// Refuses early, before any computation, when the output directory holds
    /// a run with a different configuration.
    fn preflight(&self, spec: &Value) -> Result<(), CliError> {
        match &self.output {
            Some(dir) if !self.force => crate::artifacts::check_manifest(dir, spec),
            _ => Ok(()),
        }
    }

    fn seed(&self, why: &str) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::Usage(format!("--seed is required for {why}")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum EngineChoice {
    /// Exact propagation when the model has a countable kernel.
    #[default]
    Auto,
    MonteCarlo,
}

#[derive(Args, Clone, Debug, Default)]
pub struct ModelArgs {
    #[arg(long)]
    pub model: Option<String>,
    /// Start state, e.g. `4`, `2^3`, `(1, 0)` or `(1,0,1)`.
    #[arg(long = "x", allow_hyphen_values = true)]
    pub x: Option<String>,
    /// Integer grid `1..=steps`.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub t_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub radii: Vec<f64>,
    #[arg(long, value_enum)]
    pub engine: Option<EngineChoice>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum LbcChoice {
    C1,
    C2,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum VariantChoice {
    Plain,
    Cesaro,
    Uniform,
    UniformCesaro,
}

impl From<VariantChoice> for EvcVariant {
    fn from(v: VariantChoice) -> Self {
        match v {
            VariantChoice::Plain => EvcVariant::Plain,
            VariantChoice::Cesaro => EvcVariant::Cesaro,
            VariantChoice::Uniform => EvcVariant::Uniform,
            VariantChoice::UniformCesaro => EvcVariant::UniformCesaro,
        }
    }
}

#[derive(Subcommand, Clone, Debug)]
pub enum Diagnostic {
    /// Lower bound condition: mass of a ball around `--z`.
    Lbc {
        #[command(flatten)]
        m: ModelArgs,
        #[arg(long, allow_hyphen_values = true)]
        z: Option<String>,
        #[arg(long, value_enum)]
        condition: Option<LbcChoice>,
        #[arg(long)]
        floor: Option<f64>,
    },
    /// Eventual continuity at `--x`.
    Evc {
        #[command(flatten)]
        m: ModelArgs,
        #[arg(long)]
        family: Option<String>,
        #[arg(long, value_enum)]
        variant: Option<VariantChoice>,
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Uniform integrability of `f` along `P_t f(x)`.
    Ui {
        #[command(flatten)]
        m: ModelArgs,
        /// `V`, `V^a`, `min(V,c)` or a constant.
        #[arg(long)]
        f: Option<String>,
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Comparison ODE `f' = C − φ(f)`.
    Lyapunov {
        /// `linear`, `log1p` or `power:p`.
        #[arg(long)]
        phi: Option<String>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        u0: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
    },
    /// Mass of balls around the start.
    Tightness {
        #[command(flatten)]
        m: ModelArgs,
        #[arg(long)]
        level: Option<f64>,
    },
    /// Time averages of `f` along one sampled path.
    Birkhoff {
        #[command(flatten)]
        m: ModelArgs,
        #[arg(long)]
        f: Option<String>,
        #[arg(long, value_delimiter = ',')]
        checkpoints: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        thresholds: Vec<f64>,
    },
}

impl Diagnostic {
    fn id(&self) -> &'static str {
        match self {
            Diagnostic::Lbc { .. } => "lbc",
            Diagnostic::Evc { .. } => "evc",
            Diagnostic::Ui { .. } => "ui",
            Diagnostic::Lyapunov { .. } => "lyapunov",
            Diagnostic::Tightness { .. } => "tightness",
            Diagnostic::Birkhoff { .. } => "birkhoff",
        }
    }

    /// The diagnostic with every option left to config and defaults.
    fn from_id(id: &str) -> Result<Self, CliError> {
        let m = ModelArgs::default();
        Ok(match id {
            "lbc" => Diagnostic::Lbc {
                m,
                z: None,
                condition: None,
                floor: None,
            },
            "evc" => Diagnostic::Evc {
                m,
                family: None,
                variant: None,
                tolerance: None,
            },
            "ui" => Diagnostic::Ui {
                m,
                f: None,
                tolerance: None,
            },
            "lyapunov" => Diagnostic::Lyapunov {
                phi: None,
                c: None,
                u0: None,
                step: None,
            },
            "tightness" => Diagnostic::Tightness { m, level: None },
            "birkhoff" => Diagnostic::Birkhoff {
                m,
                f: None,
                checkpoints: Vec::new(),
                thresholds: Vec::new(),
            },
            other => return Err(CliError::Usage(format!("unknown diagnostic `{other}`"))),
        })
    }
}

#[derive(Args, Clone, Debug)]
pub struct ReportArgs {
    pub model: String,
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long, value_enum)]
    pub equivalence: Option<EquivalenceChoice>,
    /// Uniform convergence over the family.
    #[arg(long)]
    pub uniform: bool,
    /// Probe state; repeat for several.
    #[arg(long = "probe", allow_hyphen_values = true)]
    pub probes: Vec<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub z: Option<String>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub t_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub radii: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub lbc_radii: Vec<f64>,
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum EquivalenceChoice {
    Asymptotic,
    MeanErgodic,
}

#[derive(Args, Clone, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long = "x", allow_hyphen_values = true)]
    pub x: Option<String>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum DistanceKind {
    Tv,
    Weighted,
    Wasserstein,
}

#[derive(Args, Clone, Debug)]
pub struct DistanceArgs {
    #[arg(long)]
    pub model: Option<String>,
    /// Atoms `state@weight` separated by `;`, e.g. `0@0.5;2^3@0.5`.
    #[arg(long, allow_hyphen_values = true)]
    pub mu: String,
    #[arg(long, allow_hyphen_values = true)]
    pub nu: String,
    #[arg(long, value_enum, default_value = "tv")]
    pub kind: DistanceKind,
    /// Order of the Wasserstein distance.
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    /// Propagate both measures this many steps first.
    #[arg(long)]
    pub steps: Option<usize>,
}

pub fn execute(cli: Cli) -> Result<Status, CliError> {
    let s = Settings::new(&cli.global)?;
    match cli.command {
        Command::List { what } => {
            list(what);
            Ok(Status::Done)
        }
        Command::Reproduce { table } => run_reproduce(&table, &s),
        Command::Diagnose { which } => {
            let (report, spec) = diagnose(&which, &s, true)?;
            emit_report(&report, spec, &s, &format!("diagnose {}", which.id()))
        }
        Command::Report(args) => {
            let (report, spec) = report(&args, &s)?;
            emit_report(&report, spec, &s, "report")
        }
        Command::Simulate(args) => simulate(&args, &s),
        Command::Distance(args) => distance(&args, &s),
        Command::Run => run_config(&cli.global, &s),
    }
}

fn list(what: ListKind) {
    match what {
        ListKind::Models => {
            for m in models::registry() {
                outln!("{}\t{}", m.id, m.description);
            }
        }
        ListKind::Families => FAMILY_IDS.iter().for_each(|f| outln!("{f}")),
        ListKind::Tables => TABLE_IDS.iter().for_each(|t| outln!("{t}")),
    }
}

fn parse_state(raw: &str, what: &str) -> Result<State, CliError> {
    raw.parse::<State>()
        .map_err(|e| CliError::Usage(format!("{what}: {e}")))
}

fn load_model(flag: Option<&str>, s: &Settings) -> Result<ModelDescriptor, CliError> {
    let id = flag.or(s.config.experiment.model.as_deref()).unwrap_or("dyadic");
    Ok(models::model(id)?)
}

fn is_discrete(m: &ModelDescriptor) -> bool {
    m.countable.is_some()
}

fn start_state(m: &ModelDescriptor, flag: Option<&str>, s: &Settings) -> Result<State, CliError> {
    match flag.or(s.config.experiment.start.as_deref()) {
        Some(raw) => parse_state(raw, "--x"),
        None => Ok(m.default_start.clone()),
    }
}

fn default_family(m: &ModelDescriptor) -> &'static str {
    match m.id {
        "dyadic" => "alpha:0.5",
        "ifs-torus" => "weighted",
        _ => "supnorm",
    }
}

fn default_evc_radii(m: &ModelDescriptor) -> Vec<f64> {
    match m.id {
        "dyadic" => vec![16.0, 8.0, 4.0],
        "ifs-torus" => vec![2.0, 1.0, 0.5],
        _ => vec![4.0, 2.0, 1.0],
    }
}

/// Time grid, radii, sample count and seed with flag > config > default
/// precedence. Monte Carlo runs need a seed.
fn build_grid(
    m: &ModelDescriptor,
    steps: Option<usize>,
    t_grid: &[f64],
    radii: &[f64],
    default_radii: Vec<f64>,
    monte_carlo: bool,
    s: &Settings,
) -> Result<LimitGridSpec, CliError> {
    let g = &s.config.grid;
    let times: Vec<f64> = if !t_grid.is_empty() {
        t_grid.to_vec()
    } else if let Some(n) = steps.filter(|_| g.t_grid.is_none() || steps.is_some()) {
        (1..=n).map(|k| k as f64).collect()
    } else if let Some(t) = &g.t_grid {
        t.clone()
    } else if let Some(n) = g.steps {
        (1..=n).map(|k| k as f64).collect()
    } else if is_discrete(m) {
        let h = s.horizon.unwrap_or(DEFAULT_DISCRETE_HORIZON).floor().max(1.0) as usize;
        (1..=h).map(|k| k as f64).collect()
    } else {
        let h = s.horizon.unwrap_or(DEFAULT_JUMP_HORIZON);
        (1..=JUMP_GRID_POINTS).map(|k| h * k as f64 / JUMP_GRID_POINTS as f64).collect()
    };
    let radii = if !radii.is_empty() {
        radii.to_vec()
    } else {
        g.probe_radii.clone().unwrap_or(default_radii)
    };
    let seed = if monte_carlo { s.seed("Monte Carlo runs")? } else { s.seed.unwrap_or(0) };
    let grid = LimitGridSpec::new(times, radii, s.samples.unwrap_or(DEFAULT_SAMPLES), seed)?;
    Ok(match g.tail_fraction {
        Some(f) => grid.with_tail_fraction(f)?,
        None => grid,
    })
}

fn uses_monte_carlo(m: &ModelDescriptor, choice: Option<EngineChoice>) -> bool {
    !is_discrete(m) || choice == Some(EngineChoice::MonteCarlo)
}

fn engine<'a>(m: &'a ModelDescriptor, monte_carlo: bool, grid: &LimitGridSpec) -> Engine<'a> {
    if monte_carlo {
        m.monte_carlo(grid.mc())
    } else {
        m.engine(grid.mc())
    }
}

/// `V`, `V^a`, `min(V,c)` or a constant, in terms of the model's `V`.
fn parse_fn(raw: &str, m: &ModelDescriptor) -> Result<SharedFn, CliError> {
    let v = m.v.clone();
    let raw = raw.replace(' ', "");
    let bad = || CliError::Usage(format!("--f: cannot parse `{raw}`; use V, V^a, min(V,c) or a number"));
    if raw == "V" {
        return Ok(v);
    }
    if let Some(a) = raw.strip_prefix("V^") {
        let a: f64 = a.parse().map_err(|_| bad())?;
        return Ok(Arc::new(move |s: &State| v(s).powf(a)));
    }
    if let Some(c) = raw.strip_prefix("min(V,").and_then(|r| r.strip_suffix(')')) {
        let c: f64 = c.parse().map_err(|_| bad())?;
        return Ok(Arc::new(move |s: &State| v(s).min(c)));
    }
    let c: f64 = raw.parse().map_err(|_| bad())?;
    Ok(Arc::new(move |_: &State| c))
}

fn diagnose(which: &Diagnostic, s: &Settings, check: bool) -> Result<(DiagnosticReport, Value), CliError> {
    let mut report;
    let spec;
    match which {
        Diagnostic::Lyapunov { phi, c, u0, step } => {
            let phi = phi.clone().unwrap_or_else(|| "linear".into());
            let (c, u0, step) = (c.unwrap_or(1.0), u0.unwrap_or(5.0), step.unwrap_or(0.1));
            let t_max = s.horizon.unwrap_or(30.0);
            let spec_ode = match phi.as_str() {
                "linear" => LyapunovSpec::linear(c, u0),
                "log1p" => LyapunovSpec::log1p(c, u0),
                other => match other.strip_prefix("power:").and_then(|p| p.parse::<f64>().ok()) {
                    Some(p) => LyapunovSpec::power(p, c, u0),
                    None => return Err(CliError::Usage(format!("--phi: unknown `{other}`"))),
                },
            };
            spec = json!({"diagnostic": "lyapunov", "phi": phi, "c": c, "u0": u0, "step": step, "horizon": t_max});
            if check {
                s.preflight(&spec)?;
            }
            report = lyapunov_report(&spec_ode, t_max, step)?;
        }
        Diagnostic::Lbc { m: a, z, condition, floor } => {
            let m = load_model(a.model.as_deref(), s)?;
            let x = start_state(&m, a.x.as_deref(), s)?;
            let z = match z {
                Some(raw) => parse_state(raw, "--z")?,
                None => m.default_center.clone(),
            };
            let mc = uses_monte_carlo(&m, a.engine);
            let grid = build_grid(&m, a.steps, &a.t_grid, &[], vec![], mc, s)?;
            let radii = if a.radii.is_empty() { vec![0.5, 1.0] } else { a.radii.clone() };
            let (which, name) = match condition.unwrap_or(LbcChoice::C1) {
                LbcChoice::C1 => (Lbc::C1, "c1"),
                LbcChoice::C2 => (Lbc::C2, "c2"),
            };
            let floor = floor.unwrap_or(DEFAULT_LBC_FLOOR);
            spec = json!({"diagnostic": "lbc", "model": m.id, "x": x, "z": z, "radii": radii,
                "condition": name, "floor": floor, "grid": grid, "monte_carlo": mc});
            if check {
                s.preflight(&spec)?;
            }
            let e = engine(&m, mc, &grid);
            report = check_lbc(&e, m.metric.as_ref(), &z, &radii, std::slice::from_ref(&x), &grid, which, floor)?;
            report.model = Some(m.id.into());
        }
        Diagnostic::Evc { m: a, family, variant, tolerance } => {
            let m = load_model(a.model.as_deref(), s)?;
            let x = match a.x.as_deref().or(s.config.experiment.start.as_deref()) {
                Some(raw) => parse_state(raw, "--x")?,
                None => m.default_center.clone(),
            };
            let fam_id = family.clone().or_else(|| s.config.experiment.family.clone()).unwrap_or_else(|| default_family(&m).into());
            let fam = models::parse_family(&fam_id, m.metric.clone(), m.v.clone(), &m.default_center)?;
            let variant: EvcVariant = variant.unwrap_or(VariantChoice::Plain).into();
            let mc = uses_monte_carlo(&m, a.engine);
            let grid = build_grid(&m, a.steps, &a.t_grid, &a.radii, default_evc_radii(&m), mc, s)?;
            let tol = tolerance.unwrap_or(DEFAULT_EVC_TOLERANCE);
            let ifs = (m.id == "ifs-torus").then(|| IfsStructural::new(grid.mc()));
            let structural = ifs.as_ref().map(|i| i as &dyn StructuralLaws);
            spec = json!({"diagnostic": "evc", "model": m.id, "x": x, "family": fam_id, "variant": variant,
                "tolerance": tol, "grid": grid, "monte_carlo": mc});
            if check {
                s.preflight(&spec)?;
            }
            let e = engine(&m, mc, &grid);
            report = check_evc(&e, &fam, &x, &m.neighbors, &grid, variant, structural, tol)?;
            report.model = Some(m.id.into());
        }
        Diagnostic::Ui { m: a, f, tolerance } => {
            let m = load_model(a.model.as_deref(), s)?;
            let x = start_state(&m, a.x.as_deref(), s)?;
            let f_id = f.clone().unwrap_or_else(|| "V".into());
            let func = parse_fn(&f_id, &m)?;
            let mc = uses_monte_carlo(&m, a.engine);
            let grid = build_grid(&m, a.steps, &a.t_grid, &[], vec![], mc, s)?;
            let tol = tolerance.unwrap_or(DEFAULT_UI_TOLERANCE);
            let k = default_k_grid();
            spec = json!({"diagnostic": "ui", "model": m.id, "x": x, "f": f_id, "tolerance": tol,
                "k_grid": k, "grid": grid, "monte_carlo": mc});
            if check {
                s.preflight(&spec)?;
            }
            let e = engine(&m, mc, &grid);
            report = check_uniform_integrability(&e, &x, func.as_ref(), &k, &grid, tol)?;
            report.model = Some(m.id.into());
        }
        Diagnostic::Tightness { m: a, level } => {
            let m = load_model(a.model.as_deref(), s)?;
            let x = start_state(&m, a.x.as_deref(), s)?;
            let mc = uses_monte_carlo(&m, a.engine);
            let grid = build_grid(&m, a.steps, &a.t_grid, &[], vec![], mc, s)?;
            let radii = if a.radii.is_empty() { vec![1.0, 2.0, 4.0, 8.0, 16.0] } else { a.radii.clone() };
            let level = level.unwrap_or(DEFAULT_TIGHTNESS_LEVEL);
            spec = json!({"diagnostic": "tightness", "model": m.id, "x": x, "radii": radii, "level": level,
                "grid": grid, "monte_carlo": mc});
            if check {
                s.preflight(&spec)?;
            }
            let e = engine(&m, mc, &grid);
            report = check_tightness(&e, m.exhaustion_metric.as_ref(), &x, &x, &radii, &grid, level)?;
            report.model = Some(m.id.into());
        }
        Diagnostic::Birkhoff { m: a, f, checkpoints, thresholds } => {
            let m = load_model(a.model.as_deref(), s)?;
            let x = start_state(&m, a.x.as_deref(), s)?;
            let seed = s.seed("sampled paths")?;
            let horizon = s.horizon.unwrap_or(1024.0);
            let f_id = f.clone().unwrap_or_else(|| "V".into());
            let func = parse_fn(&f_id, &m)?;
            let checkpoints = if checkpoints.is_empty() {
                (0..).map(|k: i32| 2f64.powi(k)).take_while(|c| *c <= horizon).collect()
            } else {
                checkpoints.clone()
            };
            let thresholds = if thresholds.is_empty() { vec![1e6] } else { thresholds.clone() };
            spec = json!({"diagnostic": "birkhoff", "model": m.id, "x": x, "f": f_id, "horizon": horizon,
                "seed": seed, "checkpoints": checkpoints, "thresholds": thresholds});
            if check {
                s.preflight(&spec)?;
            }
            let mut rng = stream_rng(seed, 0);
            let path = simulate_path(m.sampling.as_ref(), &x, horizon, &mut rng)?;
            let check = birkhoff_divergence_check(&path, func.as_ref(), &checkpoints, &thresholds)?;
            report = check.report("monte-carlo");
            report.model = Some(m.id.into());
            report.seed = Some(seed);
        }
    }
    Ok((report, spec))
}

fn default_probes(m: &ModelDescriptor) -> Vec<State> {
    match m.id {
        "dyadic" => vec![State::dyadic(1), State::dyadic(2), State::dyadic(4)],
        "ifs-torus" => vec![
            State::torus(1.0, 0.0).expect("valid"),
            State::torus(2.0, 1.0).expect("valid"),
            State::torus(0.5, 3.0).expect("valid"),
        ],
        _ => vec![m.default_start.clone()],
    }
}

fn report(a: &ReportArgs, s: &Settings) -> Result<(DiagnosticReport, Value), CliError> {
    let m = models::model(&a.model)?;
    let fam_id = a.family.clone().or_else(|| s.config.experiment.family.clone()).unwrap_or_else(|| default_family(&m).into());
    let family = models::parse_family(&fam_id, m.metric.clone(), m.v.clone(), &m.default_center)?;
    let discrete = is_discrete(&m);
    let equivalence = match a.equivalence {
        Some(EquivalenceChoice::Asymptotic) => Equivalence::Asymptotic,
        Some(EquivalenceChoice::MeanErgodic) => Equivalence::MeanErgodic,
        None if discrete => Equivalence::Asymptotic,
        None => Equivalence::MeanErgodic,
    };
    let probes = if a.probes.is_empty() {
        default_probes(&m)
    } else {
        a.probes.iter().map(|p| parse_state(p, "--probe")).collect::<Result<_, _>>()?
    };
    let z = match &a.z {
        Some(raw) => parse_state(raw, "--z")?,
        None => m.default_center.clone(),
    };
    let t_grid: Vec<f64> = if a.t_grid.is_empty() && a.steps.is_none() && !discrete && s.config.grid.t_grid.is_none() {
        (2..=20).map(|k| f64::from(k * 50)).collect()
    } else {
        a.t_grid.clone()
    };
    let grid = build_grid(&m, a.steps, &t_grid, &a.radii, default_evc_radii(&m), !discrete, s)?;
    let lbc_grid = if discrete {
        None
    } else {
        let t: Vec<f64> = (1..=5).map(|k| f64::from(k * 20)).collect();
        Some(LimitGridSpec::new(t, vec![], grid.samples, grid.seed.wrapping_add(1))?)
    };
    let lbc_radii = if a.lbc_radii.is_empty() { vec![0.5, 1.0] } else { a.lbc_radii.clone() };
    let tolerance = a.tolerance.unwrap_or(if discrete { 1e-2 } else { 0.05 });
    let ifs = (m.id == "ifs-torus").then(|| IfsStructural::new(grid.mc()));
    let cfg = StabilityConfig {
        equivalence,
        uniform: a.uniform,
        family,
        probes: probes.clone(),
        z: z.clone(),
        grid: grid.clone(),
        lbc_radii: lbc_radii.clone(),
        lbc_grid: lbc_grid.clone(),
        k_grid: default_k_grid(),
        tolerance,
        structural: ifs.as_ref().map(|i| i as &dyn StructuralLaws),
    };
    let spec = json!({"report": m.id, "family": fam_id, "equivalence": format!("{equivalence:?}"),
        "uniform": a.uniform, "probes": probes, "z": z, "grid": grid, "lbc_grid": lbc_grid,
        "lbc_radii": lbc_radii, "tolerance": tolerance});
    s.preflight(&spec)?;
    let mut r = stability_report(&m, &cfg)?;
    r.model = Some(m.id.into());
    Ok((r, spec))
}

fn curves_csv(r: &DiagnosticReport) -> Result<String, CliError> {
    let mut buf = Vec::new();
    r.write_curves_csv(&mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

fn emit_report(r: &DiagnosticReport, spec: Value, s: &Settings, command: &str) -> Result<Status, CliError> {
    match &s.output {
        Some(dir) => {
            let mut set = ArtifactSet::new(dir.clone(), spec, s.force);
            set.json("report.json", "report", r)?;
            set.csv("curves.csv", &curves_csv(r)?);
            set.write(command, r.seed.or(s.seed))?;
            outln!("{}: {}", r.condition, r.verdict.as_str());
        }
        None => match s.format {
            Format::Json => outln!("{}", r.to_json()?),
            Format::Csv => out!("{}", curves_csv(r)?),
        },
    }
    Ok(Status::Verdict(r.verdict))
}

fn run_reproduce(table: &str, s: &Settings) -> Result<Status, CliError> {
    if !TABLE_IDS.contains(&table) {
        return Err(CliError::Usage(format!("unknown table `{table}`; see `ergokit list tables`")));
    }
    // tables are defined at a fixed seed; --seed replaces it
    let seed = s.seed.unwrap_or(DEFAULT_REPRODUCE_SEED);
    let t = reproduce(table, ReproduceOptions { seed, samples: s.samples })?;
    let csv = t.to_csv()?;
    match &s.output {
        Some(dir) => {
            let spec = json!({"reproduce": table, "seed": t.seed, "samples": s.samples});
            let mut set = ArtifactSet::new(dir.clone(), spec, s.force);
            set.csv(&format!("{table}.csv"), &csv);
            set.json(&format!("{table}.json"), "table", &t)?;
            set.write(&format!("reproduce {table}"), t.seed)?;
            let failed = t.failures().count();
            outln!("{table}: {} rows, {failed} failing", t.rows.len());
        }
        None => match s.format {
            Format::Csv => out!("{csv}"),
            Format::Json => outln!("{}", serde_json::to_string_pretty(&t).map_err(|e| CliError::Runtime(e.to_string()))?),
        },
    }
    Ok(Status::Table(t.all_pass()))
}

fn simulate(a: &SimulateArgs, s: &Settings) -> Result<Status, CliError> {
    let m = load_model(a.model.as_deref(), s)?;
    let x = start_state(&m, a.x.as_deref(), s)?;
    let seed = s.seed("sampled paths")?;
    let horizon = s.horizon.unwrap_or(if is_discrete(&m) { DEFAULT_DISCRETE_HORIZON } else { 20.0 });
    let n = s.samples.unwrap_or(10);
    let paths = simulate_paths(m.sampling.as_ref(), &x, horizon, n, seed)?;
    let mut jsonl = String::new();
    let mut csv = String::from("path,time,state\n");
    for (k, p) in paths.iter().enumerate() {
        for r in p.records(m.sampling.as_ref()) {
            jsonl.push_str(&json!({"path": k, "time": r.time, "state": r.state}).to_string());
            jsonl.push('\n');
            csv.push_str(&format!("{k},{},\"{}\"\n", ergokit::diagnostics::report::format_number(r.time), r.state));
        }
    }
    match &s.output {
        Some(dir) => {
            let spec = json!({"simulate": m.id, "x": x, "horizon": horizon, "paths": n, "seed": seed});
            let mut set = ArtifactSet::new(dir.clone(), spec, s.force);
            set.json_lines("paths.jsonl", &jsonl);
            set.csv("paths.csv", &csv);
            set.write("simulate", Some(seed))?;
            outln!("{n} paths written");
        }
        None => match s.format {
            Format::Json => out!("{jsonl}"),
            Format::Csv => out!("{csv}"),
        },
    }
    Ok(Status::Done)
}

fn parse_measure(raw: &str, what: &str) -> Result<SparseDistribution, CliError> {
    let mut atoms = Vec::new();
    for part in raw.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (st, w) = part
            .rsplit_once('@')
            .ok_or_else(|| CliError::Usage(format!("{what}: atom `{part}` needs `state@weight`")))?;
        let w: f64 = w
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{what}: bad weight in `{part}`")))?;
        atoms.push((parse_state(st, what)?, w));
    }
    SparseDistribution::new(atoms).map_err(|e| CliError::Usage(format!("{what}: {e}")))
}

fn distance(a: &DistanceArgs, s: &Settings) -> Result<Status, CliError> {
    let m = load_model(a.model.as_deref(), s)?;
    let mut mu = parse_measure(&a.mu, "--mu")?;
    let mut nu = parse_measure(&a.nu, "--nu")?;
    if let Some(n) = a.steps {
        let k = m
            .countable
            .as_ref()
            .ok_or_else(|| CliError::Usage(format!("--steps needs a countable kernel; `{}` has none", m.id)))?;
        mu = propagate(k.as_ref(), &mu, n)?;
        nu = propagate(k.as_ref(), &nu, n)?;
    }
    let (name, value) = match a.kind {
        DistanceKind::Tv => ("tv", tv_distance(&mu, &nu)),
        DistanceKind::Weighted => ("weighted", weighted_tv(&mu, &nu, m.v.as_ref() as &StateFn)?),
        DistanceKind::Wasserstein => ("wasserstein", wasserstein_exact(&mu, &nu, a.p, m.metric.as_ref())?.value),
    };
    let spec = json!({"distance": name, "model": m.id, "mu": a.mu, "nu": a.nu, "p": a.p, "steps": a.steps});
    let csv = format!("kind,value\n{name},{}\n", ergokit::diagnostics::report::format_number(value));
    match &s.output {
        Some(dir) => {
            let mut set = ArtifactSet::new(dir.clone(), spec.clone(), s.force);
            set.json("distance.json", "result", &json!({"kind": name, "value": value}))?;
            set.csv("distance.csv", &csv);
            set.write("distance", None)?;
            outln!("{name}: {value}");
        }
        None => match s.format {
            Format::Json => outln!("{}", json!({"kind": name, "value": value, "input": spec})),
            Format::Csv => out!("{csv}"),
        },
    }
    Ok(Status::Done)
}

/// Runs every diagnostic listed in the config; the worst verdict decides.
fn run_config(g: &GlobalArgs, s: &Settings) -> Result<Status, CliError> {
    if g.config.is_none() {
        return Err(CliError::Usage("`run` needs --config".into()));
    }
    let ids = &s.config.experiment.diagnostics;
    if ids.is_empty() {
        return Err(CliError::Usage("config: experiment.diagnostics: must list at least one diagnostic".into()));
    }
    if s.seed.is_none() {
        return Err(CliError::Usage("config: experiment.seed: required".into()));
    }
    let mut reports = Vec::new();
    let mut specs = Vec::new();
    for id in ids {
        let (r, spec) = diagnose(&Diagnostic::from_id(id)?, s, false)?;
        reports.push((id.clone(), r));
        specs.push(spec);
    }
    let verdict = ergokit::diagnostics::Verdict::all(reports.iter().map(|(_, r)| r.verdict));
    let spec = json!({"run": specs});
    match &s.output {
        Some(dir) => {
            let mut set = ArtifactSet::new(dir.clone(), spec, s.force);
            for (id, r) in &reports {
                set.json(&format!("{id}.json"), "report", r)?;
                set.csv(&format!("{id}.csv"), &curves_csv(r)?);
            }
            set.write("run", s.seed)?;
        }
        None if s.format == Format::Csv => {
            for (_, r) in &reports {
                out!("{}", curves_csv(r)?);
            }
        }
        None => {
            let all: Vec<&DiagnosticReport> = reports.iter().map(|(_, r)| r).collect();
            outln!("{}", serde_json::to_string_pretty(&all).map_err(|e| CliError::Runtime(e.to_string()))?);
        }
    }
    for (id, r) in &reports {
        eprintln!("{id}: {}", r.verdict.as_str());
    }
    Ok(Status::Verdict(verdict))
}
