//! Command-line front end: configuration, run orchestration and plain-text
//! outputs (CSV tables with a `#` header, one JSON report per run).
//!
//! Exit status: 0 when every check passes, 2 on any failure, 3 when some
//! check is inconclusive and none fails, 1 on configuration or runtime
//! errors.

mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub use config::{ExperimentConfig, GridConfig, MassConfig, OutputConfig, PotentialConfig, VerifyConfig};

use crate::density::{asymmetry, equal_mass_annulus_outer, make_profile, ProfileKind, RadialGrid};
use crate::energy::EnergyModel;
use crate::error::{FlockError, Result};
use crate::radial_kernel::{ball_potential, ball_potential_derivative, ball_volume, combined_ball_potential};
use crate::solver::{minimize_with, SolverReport};
use crate::verify::{
    check_el_ball, check_shell_potential_bound, competitor_suite, dyadic_accounting, gap_suites, scaling_study,
    shell_deficit_suite, Check, Verdict, VerifyRecord,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "flocking", version, about = "Ball minimizers of the attractive-repulsive interaction energy")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML experiment configuration; defaults are used for missing keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Grid cells of every run (overrides all cell counts of the config).
    #[arg(long, global = true)]
    pub cells: Option<usize>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Tabulate the ball potentials and their derivatives.
    Potential,
    /// One solver run at `mass.radius`.
    Minimize,
    /// Minimizer ladder over `mass.ladder`.
    Scaling,
    /// Inequality suites by statement id.
    Verify {
        #[arg(long, value_enum, default_value_t = Statement::All)]
        statement: Statement,
    },
    /// Euler–Lagrange sign pattern of the ball over `verify.el_radii`.
    ElCheck,
    /// Competitor properties and dyadic accounting.
    Competitor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Statement {
    AttractiveGap,
    RepulsiveGap,
    ShellDeficit,
    ShellPotential,
    ElBall,
    Scaling,
    Dyadic,
    Competitor,
    All,
}

impl Statement {
    pub fn id(&self) -> &'static str {
        match self {
            Statement::AttractiveGap => "attractive-gap",
            Statement::RepulsiveGap => "repulsive-gap",
            Statement::ShellDeficit => "shell-deficit",
            Statement::ShellPotential => "shell-potential",
            Statement::ElBall => "el-ball",
            Statement::Scaling => "scaling",
            Statement::Dyadic => "dyadic",
            Statement::Competitor => "competitor",
            Statement::All => "all",
        }
    }

    fn needs_seed(&self) -> bool {
        matches!(
            self,
            Statement::AttractiveGap | Statement::RepulsiveGap | Statement::Competitor | Statement::All
        )
    }
}

/// What a subcommand produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub verdict: Verdict,
    pub files: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        match self.verdict {
            Verdict::Pass => 0,
            Verdict::Fail => 2,
            Verdict::Inconclusive => 3,
        }
    }
}

/// Parse arguments, run, print a one-line summary per file and return the
/// exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(out) => {
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            println!("verdict: {}", out.verdict);
            out.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Effective configuration: file (or defaults) with the flag overrides.
pub fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| FlockError::Io(format!("{}: {e}", path.display())))?;
            ExperimentConfig::from_toml(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = Some(s);
    }
    if let Some(dir) = &cli.out {
        cfg.output.dir = dir.to_string_lossy().into_owned();
    }
    if let Some(c) = cli.cells {
        cfg.set_cells(c);
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<RunOutcome> {
    let cfg = load_config(cli)?;
    let mut out = Output::new(&cfg, command_name(&cli.command))?;
    match &cli.command {
        Command::Potential => run_potential(&cfg, &mut out)?,
        Command::Minimize => run_minimize(&cfg, &mut out)?,
        Command::Scaling => {
            let rec = scaling_record(&cfg)?;
            out.record(rec)?;
        }
        Command::Verify { statement } => {
            if statement.needs_seed() {
                cfg.require_seed()?;
            }
            for rec in verify_records(&cfg, *statement).map_err(|e| with_context(statement.id(), e))? {
                out.record(rec)?;
            }
        }
        Command::ElCheck => {
            let rec = check_el_ball(&cfg.params, &cfg.verify.el_radii, cfg.verify.el_samples, &cfg.quadrature)?;
            out.record(rec)?;
        }
        Command::Competitor => {
            let seed = cfg.require_seed()?;
            let rec = competitor_suite(
                &cfg.params,
                cfg.verify.competitor_count,
                cfg.verify.competitor_cells,
                seed,
                &cfg.quadrature,
            )?;
            out.record(rec)?;
            for rec in dyadic_records(&cfg)? {
                out.record(rec)?;
            }
        }
    }
    out.finish()
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Potential => "potential",
        Command::Minimize => "minimize",
        Command::Scaling => "scaling",
        Command::Verify { .. } => "verify",
        Command::ElCheck => "el-check",
        Command::Competitor => "competitor",
    }
}

fn grid_for(cfg: &ExperimentConfig, radius: f64) -> Result<RadialGrid> {
    RadialGrid::uniform(cfg.params.dim, cfg.grid.r_max_factor * radius, cfg.grid.cells)
}

fn solve(cfg: &ExperimentConfig, radius: f64) -> Result<SolverReport> {
    let grid = grid_for(cfg, radius)?;
    let model = EnergyModel::assemble(&cfg.params, &grid, &cfg.quadrature)?;
    minimize_with(&model, ball_volume(cfg.params.dim, radius), &cfg.solver)
}

fn run_potential(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let p = &cfg.params;
    let q = &cfg.quadrature;
    let n = cfg.potential.points;
    let mut rows = Vec::with_capacity(n);
    let radius = cfg.mass.radius;
    // derivatives that diverge at the surface are reported as NaN
    let deriv = |mu: f64, r: f64| ball_potential_derivative(mu, r, p.dim, q).unwrap_or(f64::NAN);
    for k in 0..n {
        let r = cfg.potential.r_max * k as f64 / (n - 1) as f64;
        rows.push(vec![
            r,
            ball_potential(p.alpha, r, p.dim, q)?,
            ball_potential(-p.lambda, r, p.dim, q)?,
            combined_ball_potential(p, radius, r * radius, q)?,
            deriv(p.alpha, r),
            deriv(-p.lambda, r),
        ]);
    }
    let mut rec = VerifyRecord::new(
        "potential",
        &["r", "phi_alpha", "phi_minus_lambda", "combined_at_r_times_radius", "dphi_alpha", "dphi_minus_lambda"],
    );
    rec.input("params", p).input("radius", radius).input("quadrature", q);
    rec.rows = rows;
    out.record(rec)
}

fn run_minimize(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let radius = cfg.mass.radius;
    let report = solve(cfg, radius)?;
    let grid = report.profile.grid().clone();
    let mut rec = VerifyRecord::new("minimize", &["iteration", "energy", "residual", "multiplier", "damping"]);
    rec.input("params", cfg.params).input("radius", radius).input("cells", grid.len());
    rec.input("r_max", grid.r_max()).input("solver", &cfg.solver);
    rec.budget = grid.max_width() / radius;
    for k in 0..report.energy_trace.len() {
        rec.rows.push(vec![
            k as f64,
            report.energy_trace[k],
            report.residual_trace.get(k).copied().unwrap_or(f64::NAN),
            report.multiplier_trace.get(k).copied().unwrap_or(f64::NAN),
            if k == 0 { f64::NAN } else { report.damping_trace[k - 1] },
        ]);
    }
    let (a, _) = asymmetry(&report.profile)?;
    rec.fit("asymmetry", a).fit("final_residual", report.final_residual());
    rec.fit("final_energy", report.final_energy()).fit("iterations", report.iterations as f64);
    rec.fit("outer_mass_fraction", report.outer_mass_fraction);
    rec.check(Check::holds("converged", report.converged));
    rec.check(Check::at_most("energy_monotone", report.worst_energy_increase().max(0.0), 0.0, 1e-12));
    rec.check(Check::at_most("el_residual", report.final_residual(), cfg.solver.el_tol, 0.0));
    rec.check(Check::at_most("asymmetry", a, 2.0 * rec.budget, 0.0));
    rec.note(report.stop_reason.clone());
    let provenance = vec![
        format!("command minimize radius {radius}"),
        format!("config_sha256 {}", out.hash),
    ];
    out.text("profile.txt", &report.profile.to_text(&cfg.params, &provenance))?;
    out.record(rec)
}

fn scaling_record(cfg: &ExperimentConfig) -> Result<VerifyRecord> {
    let (rec, _) = scaling_study(&cfg.params, &cfg.mass.ladder, cfg.grid.cells, &cfg.solver, &cfg.quadrature)?;
    Ok(rec)
}

/// Dyadic accounting on the minimizer at `mass.radius` (levels must be
/// frozen) and on the annulus `(R/2, b)` of the same mass.
fn dyadic_records(cfg: &ExperimentConfig) -> Result<Vec<VerifyRecord>> {
    let radius = cfg.mass.radius;
    let report = solve(cfg, radius)?;
    let levels = cfg.verify.dyadic_levels;
    let mut frozen = dyadic_accounting(&report.profile, &cfg.params, levels, true, &cfg.quadrature)?.record;
    frozen.input("radius", radius);
    let grid = grid_for(cfg, radius)?;
    let kind = ProfileKind::Annulus {
        inner: 0.5 * radius,
        outer: equal_mass_annulus_outer(cfg.params.dim, radius, 0.5 * radius),
    };
    let ann = make_profile(&kind, &grid)?;
    let mut split = dyadic_accounting(&ann, &cfg.params, levels, false, &cfg.quadrature)?.record;
    split.statement = "dyadic-annulus".into();
    split.input("radius", radius);
    Ok(vec![frozen, split])
}

/// Records of a `verify` statement, in a fixed order.
pub fn verify_records(cfg: &ExperimentConfig, statement: Statement) -> Result<Vec<VerifyRecord>> {
    let p = &cfg.params;
    let q = &cfg.quadrature;
    let v = &cfg.verify;
    let mut recs = Vec::new();
    let all = statement == Statement::All;
    if all || matches!(statement, Statement::AttractiveGap | Statement::RepulsiveGap) {
        let (a, r) = gap_suites(p, &v.family, v.family_cells, cfg.require_seed()?, q)?;
        if all || statement == Statement::AttractiveGap {
            recs.push(a);
        }
        if all || statement == Statement::RepulsiveGap {
            recs.push(r);
        }
    }
    if all || statement == Statement::ShellDeficit {
        recs.push(shell_deficit_suite(p, v.shell_cells, q)?);
    }
    if all || statement == Statement::ShellPotential {
        recs.push(check_shell_potential_bound(&v.shell_potential_thetas, p, ball_volume(p.dim, 1.0), q)?);
    }
    if all || statement == Statement::ElBall {
        recs.push(check_el_ball(p, &v.el_radii, v.el_samples, q)?);
    }
    if all || statement == Statement::Scaling {
        recs.push(scaling_record(cfg)?);
    }
    if all || statement == Statement::Dyadic {
        recs.extend(dyadic_records(cfg)?);
    }
    if all || statement == Statement::Competitor {
        recs.push(competitor_suite(p, v.competitor_count, v.competitor_cells, cfg.require_seed()?, q)?);
    }
    Ok(recs)
}

#[derive(Serialize)]
struct Report<'a> {
    schema: u32,
    command: &'a str,
    config_sha256: &'a str,
    config: &'a ExperimentConfig,
    verdict: Verdict,
    records: &'a [VerifyRecord],
}

/// Collects records and writes `<command>-<statement>.csv` per record plus
/// `<command>.json` for the run.
struct Output {
    dir: PathBuf,
    command: &'static str,
    hash: String,
    cfg: ExperimentConfig,
    records: Vec<VerifyRecord>,
    files: Vec<PathBuf>,
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let canonical = serde_json::to_string(cfg).unwrap_or_default();
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x}")
    }
}

impl Output {
    fn new(cfg: &ExperimentConfig, command: &'static str) -> Result<Self> {
        let dir = PathBuf::from(&cfg.output.dir);
        std::fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            command,
            hash: config_hash(cfg),
            cfg: cfg.clone(),
            records: Vec::new(),
            files: Vec::new(),
        })
    }

    fn header(&self, rec: &VerifyRecord) -> String {
        let p = &self.cfg.params;
        let mut h = String::new();
        let _ = writeln!(h, "# flocking {} {}", self.command, rec.statement);
        let _ = writeln!(h, "# schema {SCHEMA_VERSION}");
        let _ = writeln!(h, "# config_sha256 {}", self.hash);
        let _ = writeln!(h, "# params N={} alpha={} lambda={}", p.dim, p.alpha, p.lambda);
        let cells = rec.inputs.get("cells").map(|c| c.to_string()).unwrap_or_else(|| self.cfg.grid.cells.to_string());
        let _ = writeln!(h, "# cells {cells}");
        let _ = writeln!(h, "# budget {}", fmt_num(rec.budget));
        let _ = writeln!(h, "# seed {}", self.cfg.seed.map(|s| s.to_string()).unwrap_or_else(|| "none".into()));
        for (k, v) in &rec.fits {
            let _ = writeln!(h, "# fit {k} {}", fmt_num(*v));
        }
        for c in &rec.checks {
            let _ = writeln!(
                h,
                "# check {} measured={} bound={} budget={} {}",
                c.name,
                fmt_num(c.measured),
                fmt_num(c.bound),
                fmt_num(c.budget),
                c.verdict
            );
        }
        let _ = writeln!(h, "# verdict {}", rec.verdict);
        h
    }

    fn record(&mut self, rec: VerifyRecord) -> Result<()> {
        let mut text = self.header(&rec);
        text.push_str(&rec.columns.join(","));
        text.push('\n');
        for row in &rec.rows {
            let cells: Vec<String> = row.iter().map(|x| fmt_num(*x)).collect();
            text.push_str(&cells.join(","));
            text.push('\n');
        }
        let name = if rec.statement == self.command {
            format!("{}.csv", self.command)
        } else {
            format!("{}-{}.csv", self.command, rec.statement)
        };
        self.text(&name, &text)?;
        self.records.push(rec);
        Ok(())
    }

    fn text(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        write_file(&path, contents)?;
        self.files.push(path);
        Ok(())
    }

    fn finish(mut self) -> Result<RunOutcome> {
        let verdict = Verdict::combine(self.records.iter().map(|r| r.verdict));
        let report = Report {
            schema: SCHEMA_VERSION,
            command: self.command,
            config_sha256: &self.hash,
            config: &self.cfg,
            verdict,
            records: &self.records,
        };
        let json = serde_json::to_string_pretty(&report).map_err(|e| FlockError::Io(e.to_string()))?;
        let name = format!("{}.json", self.command);
        self.text(&name, &(json + "\n"))?;
        Ok(RunOutcome { verdict, files: self.files })
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| FlockError::Io(format!("{}: {e}", path.display())))
}

/// Prefix regime errors with the statement that hit them.
fn with_context(id: &str, e: FlockError) -> FlockError {
    match e {
        FlockError::Regime(m) => FlockError::Regime(format!("{id}: {m}")),
        other => other,
    }
}
