//! Command-line front end: `solve`, `discover`, `datagen` and `bench`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::assembly::{assemble, Weights};
use crate::datagen::{Dataset, GeneratorConfig};
use crate::discovery::{add_noise, train, DiscoveryReport, PdeTemplate, TrainConfig};
use crate::error::{Error, Result};
use crate::fgmres::{fgmres_solve, FgmresConfig};
use crate::multigrid::{GridHierarchy, MultigridConfig};
use crate::neurlp::{solve_forward, SolverConfig};
use crate::problem::ProblemSpec;
use crate::sparse::norm2;

#[derive(Parser, Debug)]
#[command(name = "mechpde", version, about = "Differentiable PDE solving and sparse PDE discovery")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for batch solves.
    #[arg(long, global = true, env = "MECHPDE_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, env = "MECHPDE_OUT")]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Assemble and solve a linear PDE.
    Solve,
    /// Learn a PDE from data.
    Discover,
    /// Generate a reference dataset.
    Datagen,
    /// Sweep solver settings on the Laplace problem.
    Bench,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub solve: Option<SolveSection>,
    #[serde(default)]
    pub discover: Option<DiscoverSection>,
    #[serde(default)]
    pub datagen: Option<DatagenSection>,
    #[serde(default)]
    pub bench: Option<BenchSection>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSection {
    pub problem: ProblemSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub weights: Weights,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscoverSection {
    /// Dataset container; exclusive with `generate`.
    #[serde(default)]
    pub dataset: Option<PathBuf>,
    #[serde(default)]
    pub generate: Option<GeneratorConfig>,
    pub template: PathBuf,
    /// Noise levels `σ_NR`; one report per level.
    #[serde(default = "zero_noise")]
    pub noise: Vec<f64>,
    #[serde(default)]
    pub train: TrainConfig,
}

fn zero_noise() -> Vec<f64> {
    vec![0.0]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatagenSection {
    pub generator: GeneratorConfig,
    #[serde(default)]
    pub noise: f64,
    #[serde(default = "default_dataset_name")]
    pub name: String,
    /// Also write every field as CSV.
    #[serde(default = "yes")]
    pub csv: bool,
}

fn default_dataset_name() -> String {
    "dataset".into()
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchSection {
    pub sizes: Vec<usize>,
    pub iterations: Vec<usize>,
    pub v_cycles: Vec<usize>,
    pub sweeps: Vec<usize>,
    pub restart: usize,
    pub smoother: crate::multigrid::Smoother,
}

impl Default for BenchSection {
    fn default() -> Self {
        Self {
            sizes: vec![32],
            iterations: vec![1, 5, 10, 20, 40],
            v_cycles: vec![1, 4],
            sweeps: vec![2],
            restart: 20,
            smoother: crate::multigrid::Smoother::Pointwise,
        }
    }
}

/// Parsed configuration plus resolved options.
pub struct Context {
    pub config: RunConfig,
    pub base: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
}

impl Context {
    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    fn write(&self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let path = self.out.join(name);
        fs::write(&path, contents)?;
        Ok(path)
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))
}

fn section<'a, T>(s: &'a Option<T>, name: &str) -> Result<&'a T> {
    s.as_ref()
        .ok_or_else(|| Error::Config(format!("missing key `{name}` (the [{name}] section)")))
}

/// Runs one command; the caller maps errors to a nonzero exit code.
pub fn run(cli: &Cli) -> Result<()> {
    let cfg_path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config <path> is required".into()))?;
    let config = load_config(cfg_path)?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be >= 1".into()));
        }
        // a second initialisation in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let base = cfg_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let out = cli
        .out
        .clone()
        .or_else(|| config.out.as_ref().map(|o| base.join(o)))
        .unwrap_or_else(|| PathBuf::from("mechpde-out"));
    fs::create_dir_all(&out)?;
    let ctx = Context {
        seed: cli.seed.or(config.seed).unwrap_or(0),
        config,
        base,
        out,
    };
    match cli.command {
        Command::Solve => cmd_solve(&ctx),
        Command::Discover => cmd_discover(&ctx),
        Command::Datagen => cmd_datagen(&ctx),
        Command::Bench => cmd_bench(&ctx),
    }
}

#[derive(Debug, Serialize)]
pub struct SolveSummary {
    pub n_v: usize,
    pub n_c: usize,
    pub path: String,
    pub iterations: usize,
    pub residual: f64,
    pub wall_time_s: f64,
}

pub fn cmd_solve(ctx: &Context) -> Result<()> {
    let s = section(&ctx.config.solve, "solve")?;
    s.solver.fgmres.validate()?;
    let problem = s.problem.build()?;
    let t0 = Instant::now();
    let sys = assemble(&problem.spec, &problem.mset, &problem.fields, s.weights)?;
    let res = solve_forward(&sys, &s.solver)?;
    let wall = t0.elapsed().as_secs_f64();

    let mut ds = Dataset::new(problem.spec.sizes().to_vec(), problem.spec.steps().to_vec())?;
    ds.push_field("u", res.field(0).to_vec())?;
    ds.meta.insert("command".into(), "solve".into());
    ds.save(&ctx.out.join("solution.bin"))?;
    let mut csv = Vec::new();
    ds.write_csv("u", &mut csv)?;
    ctx.write("solution.csv", csv)?;
    let mut hist = String::from("iteration,relative_residual\n");
    for (i, r) in res.telemetry.history.iter().enumerate() {
        hist.push_str(&format!("{i},{r:e}\n"));
    }
    ctx.write("residual_history.csv", hist)?;
    let summary = SolveSummary {
        n_v: sys.n_v(),
        n_c: sys.n_c(),
        path: format!("{:?}", res.path()).to_lowercase(),
        iterations: res.telemetry.iterations,
        residual: res.residual_norm,
        wall_time_s: wall,
    };
    ctx.write("summary.json", serde_json::to_string_pretty(&summary).expect("summary serializes"))?;
    Ok(())
}

fn noise_tag(level: f64) -> String {
    format!("{level}").replace('.', "p")
}

pub fn cmd_discover(ctx: &Context) -> Result<()> {
    let s = section(&ctx.config.discover, "discover")?;
    let template = PdeTemplate::load(&ctx.resolve(&s.template))?;
    let clean = match (&s.dataset, &s.generate) {
        (Some(p), None) => Dataset::load(&ctx.resolve(p))?,
        (None, Some(g)) => g.generate()?,
        _ => return Err(Error::Config("discover needs exactly one of `dataset` or `generate`".into())),
    };
    if s.noise.iter().any(|n| !(0.0..=1.0).contains(n)) {
        return Err(Error::Config("noise levels must lie in [0, 1]".into()));
    }
    let mut cfg = s.train.clone();
    cfg.seed = ctx.seed;
    cfg.validate()?;
    for &level in &s.noise {
        let mut data = clean.clone();
        for (_, f) in data.fields.iter_mut() {
            add_noise(f, level, ctx.seed.wrapping_add(1));
        }
        let report = train(&data, &template, &cfg)?;
        write_report(ctx, &report, &noise_tag(level))?;
    }
    Ok(())
}

fn write_report(ctx: &Context, r: &DiscoveryReport, tag: &str) -> Result<()> {
    ctx.write(
        &format!("report_noise{tag}.json"),
        serde_json::to_string_pretty(r).expect("report serializes"),
    )?;
    let mut loss = String::from("epoch,loss\n");
    for (e, l) in r.loss_history.iter().enumerate() {
        loss.push_str(&format!("{e},{l:e}\n"));
    }
    ctx.write(&format!("loss_noise{tag}.csv"), loss)?;
    let mut table = String::from("term,learned,true\n");
    let mut keys: Vec<&String> = r.equation.keys().chain(r.truth.keys()).collect();
    keys.sort();
    keys.dedup();
    for k in keys {
        let l = r.equation.get(k).copied().unwrap_or(0.0);
        let t = r.truth.get(k).copied().unwrap_or(0.0);
        table.push_str(&format!("{k},{l},{t}\n"));
    }
    for (k, t) in &r.truth_params {
        if let Some(v) = r.params.get(k) {
            table.push_str(&format!("param:{k},{v},{t}\n"));
        }
    }
    ctx.write(&format!("coefficients_noise{tag}.csv"), table)?;
    ctx.write(&format!("equation_noise{tag}.txt"), format!("{}\n", r.equation_text))?;
    Ok(())
}

pub fn cmd_datagen(ctx: &Context) -> Result<()> {
    let s = section(&ctx.config.datagen, "datagen")?;
    if !(0.0..=1.0).contains(&s.noise) {
        return Err(Error::Config("noise must lie in [0, 1]".into()));
    }
    let mut d = s.generator.generate()?;
    for (_, f) in d.fields.iter_mut() {
        add_noise(f, s.noise, ctx.seed);
    }
    d.meta.insert("seed".into(), ctx.seed.to_string());
    d.meta.insert("noise".into(), s.noise.to_string());
    d.save(&ctx.out.join(format!("{}.bin", s.name)))?;
    if s.csv {
        for (name, _) in &d.fields {
            let mut buf = Vec::new();
            d.write_csv(name, &mut buf)?;
            ctx.write(&format!("{}_{name}.csv", s.name), buf)?;
        }
    }
    Ok(())
}

/// Peak resident set size of this process in KiB, where the platform
/// reports it.
pub fn peak_rss_kib() -> Option<u64> {
    let status = fs::read_to_string("/proc/self/status").ok()?;
    status
        .lines()
        .find(|l| l.starts_with("VmHWM:"))?
        .split_whitespace()
        .nth(1)?
        .parse()
        .ok()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub grid: usize,
    pub iterations: usize,
    pub v_cycles: usize,
    pub sweeps: usize,
    pub relative_residual: f64,
    pub relative_error: f64,
    pub wall_time_s: f64,
    pub peak_rss_kib: Option<u64>,
}

/// FGMRES on the Laplace normal system for every combination of the sweep
/// axes. `relative_error` is measured against a direct solve.
pub fn bench_rows(s: &BenchSection) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for &n in &s.sizes {
        let problem = ProblemSpec::laplace(n).build()?;
        let sys = assemble(&problem.spec, &problem.mset, &problem.fields, Weights::default())?;
        let normal = sys.a.ata()?;
        let rhs = sys.a.spmv_transpose(&sys.d)?;
        let exact = crate::dense::SkylineCholesky::factor(&normal)?.solve(&rhs);
        let xnorm = norm2(&exact);
        for &sweeps in &s.sweeps {
            for &cycles in &s.v_cycles {
                let mg = MultigridConfig {
                    pre_sweeps: sweeps,
                    post_sweeps: sweeps,
                    cycles,
                    smoother: s.smoother,
                    ..MultigridConfig::default()
                };
                let h = GridHierarchy::from_normal(&sys, normal.clone(), mg)?;
                for &it in &s.iterations {
                    let cfg = FgmresConfig {
                        restart: s.restart,
                        max_restarts: it.div_ceil(s.restart).max(1),
                        tol: 1e-14,
                        max_iterations: Some(it),
                    };
                    let t0 = Instant::now();
                    let out = fgmres_solve(&normal, &h, &rhs, None, &cfg)?;
                    let wall = t0.elapsed().as_secs_f64();
                    let err: Vec<f64> = out.x.iter().zip(&exact).map(|(a, b)| a - b).collect();
                    rows.push(BenchRow {
                        grid: n,
                        iterations: it,
                        v_cycles: cycles,
                        sweeps,
                        relative_residual: out.residual,
                        relative_error: norm2(&err) / xnorm,
                        wall_time_s: wall,
                        peak_rss_kib: peak_rss_kib(),
                    });
                }
            }
        }
    }
    Ok(rows)
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut s = String::from("device,grid,iterations,v_cycles,sweeps,relative_residual,relative_error,wall_time_s,peak_rss_kib\n");
    for r in rows {
        s.push_str(&format!(
            "cpu,{},{},{},{},{:e},{:e},{:.6},{}\n",
            r.grid,
            r.iterations,
            r.v_cycles,
            r.sweeps,
            r.relative_residual,
            r.relative_error,
            r.wall_time_s,
            r.peak_rss_kib.map_or(String::new(), |k| k.to_string())
        ));
    }
    s
}

pub fn cmd_bench(ctx: &Context) -> Result<()> {
    let s = section(&ctx.config.bench, "bench")?;
    if s.sizes.is_empty() || s.iterations.is_empty() || s.v_cycles.is_empty() || s.sweeps.is_empty() {
        return Err(Error::Config("bench sweep axes must be non-empty".into()));
    }
    let rows = bench_rows(s)?;
    ctx.write("bench.csv", bench_csv(&rows))?;
    Ok(())
}

/// Entry point for the binary: returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            1
        }
    }
}
