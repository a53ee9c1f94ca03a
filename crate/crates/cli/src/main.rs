//! `pelab`: adaptive partitions, partition functions and bound checks from
//! the command line.
//!
//! Exit codes: 0 success, 1 a check failed, 2 configuration error, 3 a
//! resource guard tripped.

mod args;
mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use pelab::partition::{
    adaptive_partition, birman_solomjak, bs_bound_check, bs_products, dual_table, dyadic_schedule,
    entropy_estimate, geometric_schedule, PartitionDoc,
};
use pelab::rational::parse_rational;
use pelab::spectra::{
    bounds_report, c_shifted, critical_exponents, tau_table, BoundsConfig, F_estimates,
};
use pelab::table::{SpectrumTable, TableKind};
use pelab::{CubeId, Evaluator64, GridScheme, Partition, SetFunctionSpec, Threshold64};

#[derive(Parser)]
#[command(
    name = "pelab",
    version,
    about = "Adaptive dyadic partitions and partition-function estimators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum GridArg {
    Classical,
    Interior,
}

#[derive(Args)]
struct Common {
    /// Set function spec: a JSON file, or inline JSON starting with `{`.
    #[arg(long, env = "PELAB_SPEC")]
    spec: String,
    #[arg(long, value_enum, default_value = "classical", env = "PELAB_GRID")]
    grid: GridArg,
    /// Output directory.
    #[arg(long, default_value = ".", env = "PELAB_OUT")]
    out: PathBuf,
    /// Recorded in the outputs; the computations themselves are deterministic.
    #[arg(long, default_value_t = 0, env = "PELAB_SEED")]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Minimal good partitions for one or more thresholds `t = 1/x`.
    Partition {
        #[command(flatten)]
        common: Common,
        /// Comma-separated thresholds, e.g. `1e-3,1/10000`.
        #[arg(long, env = "PELAB_THRESHOLD")]
        threshold: String,
        /// Also tabulate `M(x)` for these `log2 x` values.
        #[arg(long, env = "PELAB_X_LOG2")]
        x_log2: Option<String>,
    },
    /// Partition functions `τ_n(q)` and per-level critical exponents.
    Spectra {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "1..20", env = "PELAB_LEVELS")]
        levels: String,
        #[arg(long, default_value = "0:4:0.25", env = "PELAB_Q_GRID")]
        q_grid: String,
    },
    /// Coarse multifractal counts, `F̄`/`F̲` and the shifted function `c(q)`.
    Multifractal {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "1..20", env = "PELAB_LEVELS")]
        levels: String,
        #[arg(long, default_value = "0.5:4:0.5", env = "PELAB_ALPHA_GRID")]
        alpha_grid: String,
        #[arg(
            long,
            default_value = "-1:1:0.125",
            env = "PELAB_Q_GRID",
            allow_hyphen_values = true
        )]
        q_grid: String,
    },
    /// Optimal values `γ_n` of the dual problem.
    Dual {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "2^1..2^12", env = "PELAB_BUDGET")]
        budget: String,
    },
    /// Birman–Solomjak subdivision for `J Λ^a`.
    Bs {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "1", env = "PELAB_A")]
        a: String,
        #[arg(long, default_value_t = 10, env = "PELAB_STEPS")]
        steps: usize,
    },
    /// Checks every inequality chain; exit code 1 when one fails.
    Bounds {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "1..60", env = "PELAB_LEVELS")]
        levels: String,
        #[arg(long, default_value_t = pelab::spectra::report::DEFAULT_TOL, env = "PELAB_TOL", allow_hyphen_values = true)]
        tol: f64,
        #[arg(long, env = "PELAB_BUDGET")]
        budget: Option<String>,
        #[arg(long, env = "PELAB_X_LOG2")]
        x_log2: Option<String>,
        #[arg(long, env = "PELAB_ALPHA_GRID")]
        alpha_grid: Option<String>,
    },
    /// Renders partition JSON files as SVG layers, first file lightest.
    Render {
        /// Comma-separated partition JSON files.
        #[arg(long, env = "PELAB_PARTITION")]
        partition: String,
        /// Output SVG file.
        #[arg(long, default_value = "partition.svg", env = "PELAB_OUT")]
        out: PathBuf,
    },
}

enum Failure {
    Check(String),
    Config(String),
    Guard(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Check(_) => 1,
            Failure::Config(_) => 2,
            Failure::Guard(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Check(m) | Failure::Config(m) | Failure::Guard(m) => m,
        }
    }
}

impl From<pelab::Error> for Failure {
    fn from(e: pelab::Error) -> Self {
        if e.is_resource_guard() {
            Failure::Guard(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

fn config(msg: impl Into<String>) -> Failure {
    Failure::Config(msg.into())
}

fn load_spec(text: &str) -> Result<SetFunctionSpec, Failure> {
    let json = if text.trim_start().starts_with('{') {
        text.to_string()
    } else {
        fs::read_to_string(text).map_err(|e| config(format!("reading spec {text}: {e}")))?
    };
    Ok(SetFunctionSpec::from_json(&json)?)
}

struct Setup {
    eval: Evaluator64,
    grid: GridScheme,
    out: PathBuf,
    seed: u64,
}

fn setup(c: &Common) -> Result<Setup, Failure> {
    let eval = Evaluator64::new(&load_spec(&c.spec)?)?;
    let grid = match c.grid {
        GridArg::Classical => GridScheme::classical(eval.dim()),
        GridArg::Interior => GridScheme::interior(eval.dim()),
    };
    fs::create_dir_all(&c.out)?;
    Ok(Setup {
        eval,
        grid,
        out: c.out.clone(),
        seed: c.seed,
    })
}

fn write_table(s: &Setup, name: &str, table: &mut SpectrumTable) -> Result<(), Failure> {
    table.meta.insert("grid".into(), s.grid.name().into());
    table.meta.insert("seed".into(), s.seed.to_string());
    table.validate()?;
    let csv = fs::File::create(s.out.join(format!("{name}.csv")))?;
    table.write_csv(csv)?;
    fs::write(s.out.join(format!("{name}.json")), table.to_json() + "\n")?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| config(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn print_summary(table: &SpectrumTable) {
    for (k, v) in &table.summary {
        println!("{k:<18} {v}");
    }
}

fn cmd_partition(c: &Common, threshold: &str, x_log2: Option<&str>) -> Result<(), Failure> {
    let s = setup(c)?;
    let mut ts = Vec::new();
    for t in threshold
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
    {
        ts.push((t.to_string(), Threshold64::parse(t)?));
    }
    if ts.is_empty() {
        return Err(config("no thresholds given"));
    }
    let xs = x_log2.map(args::parse_reals).transpose().map_err(config)?;
    // Coarse (large t) first, so layers go from light to dark.
    ts.sort_by(|a, b| b.1.log2.partial_cmp(&a.1.log2).expect("finite thresholds"));
    let mut layers = Vec::new();
    for (i, (text, t)) in ts.iter().enumerate() {
        let r = adaptive_partition(&s.eval, &s.grid, t)?;
        let doc = PartitionDoc::from_result(&r)?;
        fs::write(
            s.out.join(format!("partition_{i}.json")),
            doc.to_json() + "\n",
        )?;
        println!(
            "t={text} cubes={} max_log2={:.6} levels={:?}",
            r.count(),
            r.max_value_log2,
            r.histogram
        );
        if let Some(w) = &r.warning {
            eprintln!("warning: {w}");
        }
        layers.push(r.partition.cubes);
    }
    if s.eval.dim() == 2 {
        fs::write(
            s.out.join("partition.svg"),
            svg::render(&layers).map_err(config)?,
        )?;
    }
    if let Some(xs) = xs {
        let schedule = if xs.iter().all(|x| x.fract() == 0.0) {
            xs.iter()
                .flat_map(|&k| dyadic_schedule(k as i64, k as i64, 1))
                .collect()
        } else {
            geometric_schedule(&xs)
        };
        let e = entropy_estimate(&s.eval, &s.grid, &schedule)?;
        let mut table = SpectrumTable::new(TableKind::MOfX, "log2_x", e.log2_x.clone());
        table.push_column(
            "log2_M",
            e.counts.iter().map(pelab::num::log2_biguint).collect(),
        );
        table.push_column("ratio", e.ratios.clone());
        table.summary.insert("h_upper".into(), e.upper);
        table.summary.insert("h_lower".into(), e.lower);
        if let Some(slope) = e.slope() {
            table.summary.insert("h_slope".into(), slope);
        }
        write_table(&s, "m_of_x", &mut table)?;
        print_summary(&table);
    }
    Ok(())
}

fn cmd_spectra(c: &Common, levels: &str, q_grid: &str) -> Result<(), Failure> {
    let levels = args::parse_levels(levels).map_err(config)?;
    let q_grid = args::parse_reals(q_grid).map_err(config)?;
    if q_grid.iter().any(|&q| q < 0.0) {
        return Err(config("tau_n needs q >= 0"));
    }
    let s = setup(c)?;
    let mut tau = tau_table(&s.eval, &s.grid, &levels, &q_grid)?;
    write_table(&s, "tau", &mut tau)?;
    let ce = critical_exponents(&s.eval, &s.grid, &levels, &[])?;
    let mut per_level = ce.levels_table();
    write_table(&s, "levels", &mut per_level)?;
    for w in &ce.warnings {
        eprintln!("warning: {w}");
    }
    print_summary(&per_level);
    Ok(())
}

fn cmd_multifractal(
    c: &Common,
    levels: &str,
    alpha_grid: &str,
    q_grid: &str,
) -> Result<(), Failure> {
    let levels = args::parse_levels(levels).map_err(config)?;
    let alpha_grid = args::parse_reals(alpha_grid).map_err(config)?;
    let q_grid = args::parse_reals(q_grid).map_err(config)?;
    if alpha_grid.iter().any(|&a| a <= 0.0) {
        return Err(config("alpha values must be positive"));
    }
    let s = setup(c)?;
    let f = F_estimates(&s.eval, &s.grid, &levels, &alpha_grid)?;
    write_table(&s, "n_alpha", &mut f.n_alpha_table())?;
    let mut ft = f.f_table();
    write_table(&s, "f_alpha", &mut ft)?;
    print_summary(&ft);
    let cs = c_shifted(&s.eval, &s.grid, &levels, &q_grid)?;
    let mut ct = cs.table();
    write_table(&s, "c_shifted", &mut ct)?;
    print_summary(&ct);
    Ok(())
}

fn cmd_dual(c: &Common, budget: &str) -> Result<(), Failure> {
    let budgets = args::parse_budgets(budget).map_err(config)?;
    let s = setup(c)?;
    let r = dual_table(&s.eval, &s.grid, &budgets)?;
    let mut t = SpectrumTable::new(
        TableKind::Gamma,
        "n",
        budgets.iter().map(|&b| b as f64).collect(),
    );
    t.push_column("log2_gamma", r.rows.iter().map(|r| r.gamma_log2).collect());
    t.push_column("card", r.rows.iter().map(|r| r.card as f64).collect());
    t.push_column("depth", r.rows.iter().map(|r| r.depth as f64).collect());
    t.push_column(
        "threshold_log2",
        r.rows.iter().map(|r| r.threshold_log2).collect(),
    );
    let exact: Vec<String> = r
        .rows
        .iter()
        .map(|r| {
            r.gamma_exact
                .as_ref()
                .map_or_else(String::new, pelab::rational::format_rational)
        })
        .collect();
    if exact.iter().any(|e| !e.is_empty()) {
        t.meta.insert("gamma_exact".into(), exact.join(","));
    }
    if let Some(a) = &r.alpha {
        t.summary.insert("alpha_upper".into(), a.upper);
        t.summary.insert("alpha_lower".into(), a.lower);
        if let Some(f) = a.fit {
            t.summary.insert("alpha_slope".into(), f.slope);
        }
    }
    t.summary.insert("min_card".into(), r.min_card as f64);
    write_table(&s, "gamma", &mut t)?;
    print_summary(&t);
    Ok(())
}

fn cmd_bs(c: &Common, a: &str, steps: usize) -> Result<(), Failure> {
    let a = parse_rational(a)?;
    let s = setup(c)?;
    if !s.grid.is_classical() {
        return Err(config("subdivision runs on the classical grid"));
    }
    let d = s.eval.dim();
    let initial = Partition::new(vec![CubeId::root(d)], GridScheme::classical(d));
    let traj = birman_solomjak::<f64>(s.eval.spec(), &a, &initial, steps)?;
    let products = bs_products(&traj);
    let mut t = SpectrumTable::new(
        TableKind::Levels,
        "k",
        traj.steps.iter().map(|st| st.step as f64).collect(),
    );
    t.push_column("card", traj.steps.iter().map(|st| st.card as f64).collect());
    t.push_column(
        "log2_eta",
        traj.steps.iter().map(|st| st.eta_log2).collect(),
    );
    t.push_column(
        "log2_product",
        traj.steps
            .iter()
            .map(|st| {
                products
                    .iter()
                    .find(|p| p.0 == st.step)
                    .map_or(f64::NEG_INFINITY, |p| p.1)
            })
            .collect(),
    );
    let root = s.eval.root_log2().log2();
    t.summary
        .insert("bound_ratio".into(), bs_bound_check(&traj, root, 1.0));
    t.summary.insert(
        "eta_nonincreasing".into(),
        if traj.eta_nonincreasing { 1.0 } else { 0.0 },
    );
    write_table(&s, "bs", &mut t)?;
    let doc = PartitionDoc::from_partition(&traj.final_partition, None)?;
    fs::write(s.out.join("bs_partition.json"), doc.to_json() + "\n")?;
    if d == 2 {
        fs::write(
            s.out.join("bs_partition.svg"),
            svg::render(&[traj.final_partition.cubes]).map_err(config)?,
        )?;
    }
    print_summary(&t);
    Ok(())
}

fn cmd_bounds(
    c: &Common,
    levels: &str,
    tol: f64,
    budget: Option<&str>,
    x_log2: Option<&str>,
    alpha_grid: Option<&str>,
) -> Result<(), Failure> {
    let mut cfg = BoundsConfig::new(args::parse_levels(levels).map_err(config)?);
    cfg.tol = tol;
    cfg.budgets = budget
        .map(args::parse_budgets)
        .transpose()
        .map_err(config)?;
    cfg.x_log2 = x_log2.map(args::parse_reals).transpose().map_err(config)?;
    cfg.alpha_grid = alpha_grid
        .map(args::parse_reals)
        .transpose()
        .map_err(config)?
        .unwrap_or_default();
    let s = setup(c)?;
    let report = bounds_report(&s.eval, &s.grid, &cfg)?;
    let text = report.to_text();
    fs::write(s.out.join("bounds.txt"), &text)?;
    write_json(&s.out.join("bounds.json"), &report)?;
    print!("{text}");
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Check("at least one bound check failed".into()))
    }
}

fn cmd_render(files: &str, out: &Path) -> Result<(), Failure> {
    let mut layers = Vec::new();
    for f in files.split(',').map(str::trim).filter(|f| !f.is_empty()) {
        let text = fs::read_to_string(f).map_err(|e| config(format!("reading {f}: {e}")))?;
        layers.push(PartitionDoc::from_json(&text)?.to_partition()?.cubes);
    }
    if layers.is_empty() {
        return Err(config("no partition files given"));
    }
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(out, svg::render(&layers).map_err(config)?)?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Partition {
            common,
            threshold,
            x_log2,
        } => cmd_partition(common, threshold, x_log2.as_deref()),
        Command::Spectra {
            common,
            levels,
            q_grid,
        } => cmd_spectra(common, levels, q_grid),
        Command::Multifractal {
            common,
            levels,
            alpha_grid,
            q_grid,
        } => cmd_multifractal(common, levels, alpha_grid, q_grid),
        Command::Dual { common, budget } => cmd_dual(common, budget),
        Command::Bs { common, a, steps } => cmd_bs(common, a, *steps),
        Command::Bounds {
            common,
            levels,
            tol,
            budget,
            x_log2,
            alpha_grid,
        } => cmd_bounds(
            common,
            levels,
            *tol,
            budget.as_deref(),
            x_log2.as_deref(),
            alpha_grid.as_deref(),
        ),
        Command::Render { partition, out } => cmd_render(partition, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
