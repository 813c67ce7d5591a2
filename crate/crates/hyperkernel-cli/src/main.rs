//! Command-line front end: one subcommand per experiment. Parameters come
//! from an optional key=value config file plus flags (flags win); every run
//! writes its CSV artifacts and a `manifest.csv` of resolved parameters
//! into the output directory.

use clap::{Args, Parser, Subcommand};
use hyperkernel::correlation::{scaling_probe_k, scaling_probe_t, KProbeConfig, TProbeConfig};
use hyperkernel::data::{
    build_task, load_idx, synthetic_images, write_task_csv, FourierSpec, ImageSet, TaskMode,
};
use hyperkernel::duals::{dual_relu, dual_relu_dot, mc_dual, CovPair};
use hyperkernel::experiments::{
    converge_experiment, drift_medians, kernel_drift_experiment, large_lr_experiment,
    regress_experiment, sgd_baseline, BaselineConfig, ConvergeConfig, DriftConfig, LargeLrConfig,
    RegressConfig, TrainOutcome,
};
use hyperkernel::kernels::{hyper_nngp, hyper_ntk, mlp_nngp, HyperKernelConfig};
use hyperkernel::linalg::stream_rng;
use hyperkernel::{RNG_VERSION, VERSION};
use rand::Rng;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

#[derive(Debug)]
enum CliError {
    Config(String),
    Runtime(String),
}

fn runtime(e: impl Display) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Parser)]
#[command(name = "hyperkernel", version, about = "Infinite-width kernel experiments")]
struct Cli {
    /// Key=value config file; explicit flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for CSV artifacts and the run manifest.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker cap; computation is sequential and results never depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compare analytic ReLU duals against Monte Carlo estimates.
    DualsCheck(DualsArgs),
    /// Evaluate analytic kernels on an input file of example pairs.
    Kernel(KernelArgs),
    /// Empirical-hyperkernel convergence over a width grid.
    Converge(ConvergeArgs),
    /// Kernel drift after one SGD step across widths.
    Drift(DriftArgs),
    /// Scaling of the correlation term T^r with MLP width.
    CorrScaling(CorrArgs),
    /// Scaling of the order term K^(r) with meta width.
    OrderScaling(OrderArgs),
    /// Kernel ridge regression on a pixel task.
    Regress(RegressArgs),
    /// SGD hypernetwork baseline on the same pixel task.
    TrainBaseline(BaselineArgs),
    /// Two-layer MLP training at learning rate sqrt(width).
    LargeLr(LargeLrArgs),
}

/// Key=value settings from the config file, with key-usage tracking so
/// unknown keys can be rejected by name.
struct Settings {
    map: BTreeMap<String, String>,
    used: BTreeSet<String>,
    manifest: Vec<(String, String)>,
}

impl Settings {
    fn load(path: Option<&Path>) -> Result<Settings, CliError> {
        let mut map = BTreeMap::new();
        if let Some(p) = path {
            let text = fs::read_to_string(p).map_err(|e| {
                CliError::Config(format!("cannot read config {}: {}", p.display(), e))
            })?;
            for (i, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (k, v) = line.split_once('=').ok_or_else(|| {
                    CliError::Config(format!("config line {} is not key=value: {:?}", i + 1, line))
                })?;
                map.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        Ok(Settings {
            map,
            used: BTreeSet::new(),
            manifest: Vec::new(),
        })
    }

    fn record(&mut self, key: &str, value: impl Display) {
        self.manifest.push((key.to_string(), value.to_string()));
    }

    fn get<T: FromStr + Display>(
        &mut self,
        key: &str,
        flag: Option<T>,
        default: T,
    ) -> Result<T, CliError> {
        self.used.insert(key.to_string());
        let value = if let Some(f) = flag {
            f
        } else if let Some(s) = self.map.get(key) {
            s.parse().map_err(|_| {
                CliError::Config(format!("invalid value for {}: {:?}", key, s))
            })?
        } else {
            default
        };
        self.record(key, &value);
        Ok(value)
    }

    fn get_list(
        &mut self,
        key: &str,
        flag: Option<String>,
        default: &[usize],
    ) -> Result<Vec<usize>, CliError> {
        self.used.insert(key.to_string());
        let raw = flag
            .or_else(|| self.map.get(key).cloned())
            .unwrap_or_else(|| {
                default
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            });
        let list: Vec<usize> = raw
            .split(',')
            .map(|s| {
                s.trim().parse().map_err(|_| {
                    CliError::Config(format!("invalid value for {}: {:?}", key, raw))
                })
            })
            .collect::<Result<_, _>>()?;
        if list.is_empty() {
            return Err(CliError::Config(format!("{} must be nonempty", key)));
        }
        self.record(key, &raw);
        Ok(list)
    }

    fn get_path(&mut self, key: &str, flag: Option<PathBuf>) -> Option<PathBuf> {
        self.used.insert(key.to_string());
        let value = flag.or_else(|| self.map.get(key).map(PathBuf::from));
        self.record(
            key,
            value
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
        );
        value
    }

    fn get_mode(&mut self, flag: Option<String>) -> Result<TaskMode, CliError> {
        let raw = self.get("mode", flag, "representation".to_string())?;
        match raw.as_str() {
            "representation" => Ok(TaskMode::Representation),
            "inpainting" => Ok(TaskMode::Inpainting),
            other => Err(CliError::Config(format!(
                "invalid value for mode: {:?} (expected representation or inpainting)",
                other
            ))),
        }
    }

    /// Rejects config keys that the subcommand never consumed.
    fn finish(&self) -> Result<(), CliError> {
        for k in self.map.keys() {
            if !self.used.contains(k) {
                return Err(CliError::Config(format!("unknown config key: {}", k)));
            }
        }
        Ok(())
    }

    fn write_manifest(&self, dir: &Path) -> Result<(), CliError> {
        let mut text = String::from("key,value\n");
        for (k, v) in &self.manifest {
            text.push_str(&format!("{},{}\n", k, v));
        }
        fs::write(dir.join("manifest.csv"), text).map_err(runtime)
    }
}

fn write_csv(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    fs::write(dir.join(name), text).map_err(runtime)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(m)) => {
            eprintln!("config error: {}", m);
            ExitCode::from(2)
        }
        Err(CliError::Runtime(m)) => {
            eprintln!("error: {}", m);
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.threads == 0 {
        return Err(CliError::Config("threads must be at least 1".into()));
    }
    fs::create_dir_all(&cli.out).map_err(runtime)?;
    let mut settings = Settings::load(cli.config.as_deref())?;
    let name = match &cli.cmd {
        Cmd::DualsCheck(_) => "duals-check",
        Cmd::Kernel(_) => "kernel",
        Cmd::Converge(_) => "converge",
        Cmd::Drift(_) => "drift",
        Cmd::CorrScaling(_) => "corr-scaling",
        Cmd::OrderScaling(_) => "order-scaling",
        Cmd::Regress(_) => "regress",
        Cmd::TrainBaseline(_) => "train-baseline",
        Cmd::LargeLr(_) => "large-lr",
    };
    settings.record("subcommand", name);
    settings.record("version", VERSION);
    settings.record("rng_version", RNG_VERSION);
    settings.record("threads", cli.threads);
    match cli.cmd {
        Cmd::DualsCheck(a) => cmd_duals(a, &mut settings, &cli.out),
        Cmd::Kernel(a) => cmd_kernel(a, &mut settings, &cli.out),
        Cmd::Converge(a) => cmd_converge(a, &mut settings, &cli.out),
        Cmd::Drift(a) => cmd_drift(a, &mut settings, &cli.out),
        Cmd::CorrScaling(a) => cmd_corr(a, &mut settings, &cli.out),
        Cmd::OrderScaling(a) => cmd_order(a, &mut settings, &cli.out),
        Cmd::Regress(a) => cmd_regress(a, &mut settings, &cli.out),
        Cmd::TrainBaseline(a) => cmd_baseline(a, &mut settings, &cli.out),
        Cmd::LargeLr(a) => cmd_large_lr(a, &mut settings, &cli.out),
    }
}

#[derive(Args)]
struct DualsArgs {
    /// Number of random covariance pairs.
    #[arg(long)]
    pairs: Option<usize>,
    /// Monte Carlo samples per pair.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

fn cmd_duals(a: DualsArgs, s: &mut Settings, out: &Path) -> Result<(), CliError> {
    let pairs = s.get("pairs", a.pairs, 50)?;
    let samples = s.get("samples", a.samples, 1_000_000)?;
    let seed = s.get("seed", a.seed, 1)?;
    s.finish()?;
    s.write_manifest(out)?;

    let mut rng = stream_rng(seed, 0);
    let mut text =
        String::from("s11,s12,s22,dual,mc_mean,mc_stderr,dual_dot,mc_dot,mc_dot_stderr,pass\n");
    let mut failures = 0usize;
    for i in 0..pairs {
        let s11: f64 = rng.gen_range(0.1..2.0);
        let s22: f64 = rng.gen_range(0.1..2.0);
        let c: f64 = rng.gen_range(-1.0..1.0);
        let pair = CovPair::new(s11, c * (s11 * s22).sqrt(), s22).map_err(runtime)?;
        let dual = dual_relu(pair).map_err(runtime)?;
        let dual_dot = dual_relu_dot(pair).map_err(runtime)?;
        let (mc, se, mc_dot, se_dot) =
            mc_dual(pair, samples, seed.wrapping_add(i as u64 + 1)).map_err(runtime)?;
        let pass = (dual - mc).abs() <= 3.0 * se && (dual_dot - mc_dot).abs() <= 3.0 * se_dot;
        if !pass {
            failures += 1;
        }
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            pair.s11, pair.s12, pair.s22, dual, mc, se, dual_dot, mc_dot, se_dot, pass
        ));
    }
    write_csv(out, "duals.csv", &text)?;
    if failures > 0 {
        return Err(CliError::Runtime(format!(
            "{} of {} dual pairs outside the 3-stderr gate",
            failures, pairs
        )));
    }
    println!("duals-check: {} pairs pass", pairs);
    Ok(())
}

#[derive(Args)]
struct KernelArgs {
    /// mlp-nngp, mlp-ntk, hyper-nngp, or hyper-ntk.
    #[arg(long)]
    kind: Option<String>,
    /// Input file: one pair per line, whitespace-separated numbers
    /// (x x' for MLP kinds; x z x' z' for hyper kinds).
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    meta_depth: Option<usize>,
    #[arg(long)]
    primary_depth: Option<usize>,
    #[arg(long)]
    n0: Option<usize>,
    #[arg(long)]
    m0: Option<usize>,
}

fn cmd_kernel(a: KernelArgs, s: &mut Settings, out: &Path) -> Result<(), CliError> {
    let kind = s.get("kind", a.kind, "hyper-ntk".to_string())?;
    let input = s
        .get_path("input", a.input)
        .ok_or_else(|| CliError::Config("kernel requires an input file".into()))?;
    let meta_depth = s.get("meta_depth", a.meta_depth, 3)?;
    let primary_depth = s.get("primary_depth", a.primary_depth, 2)?;
    let n0 = s.get("n0", a.n0, 4)?;
    let m0 = s.get("m0", a.m0, 2)?;
    if !matches!(kind.as_str(), "mlp-nngp" | "mlp-ntk" | "hyper-nngp" | "hyper-ntk") {
        return Err(CliError::Config(format!("invalid value for kind: {:?}", kind)));
    }
    s.finish()?;
    s.write_manifest(out)?;

    let text = fs::read_to_string(&input)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {}", input.display(), e)))?;
    let cfg = HyperKernelConfig {
        meta_depth,
        primary_depth,
        n0,
        m0,
    };
    let expected = if kind.starts_with("mlp") {
        2 * n0
    } else {
        2 * (n0 + m0)
    };
    let mut rows = String::from(match kind.as_str() {
        "mlp-nngp" => "pair,s_final\n",
        "mlp-ntk" => "pair,theta_f\n",
        "hyper-nngp" => "pair,lambda_h\n",
        _ => "pair,theta_h,theta_f,theta_g\n",
    });
    let mut pair_idx = 0usize;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let nums: Vec<f64> = line
            .split_whitespace()
            .map(|t| {
                t.parse().map_err(|_| {
                    CliError::Runtime(format!("bad number on input line {}: {:?}", i + 1, t))
                })
            })
            .collect::<Result<_, _>>()?;
        if nums.len() != expected {
            return Err(CliError::Runtime(format!(
                "input line {} has {} numbers, expected {}",
                i + 1,
                nums.len(),
                expected
            )));
        }
        match kind.as_str() {
            "mlp-nngp" => {
                let traj = mlp_nngp(&nums[..n0], &nums[n0..], meta_depth).map_err(runtime)?;
                rows.push_str(&format!("{},{}\n", pair_idx, traj.final_offdiag()));
            }
            "mlp-ntk" => {
                let v = hyperkernel::kernels::mlp_ntk(&nums[..n0], &nums[n0..], meta_depth)
                    .map_err(runtime)?;
                rows.push_str(&format!("{},{}\n", pair_idx, v));
            }
            "hyper-nngp" => {
                let (x, z) = (&nums[..n0], &nums[n0..n0 + m0]);
                let (xp, zp) = (&nums[n0 + m0..2 * n0 + m0], &nums[2 * n0 + m0..]);
                let traj = hyper_nngp(x, z, xp, zp, cfg).map_err(runtime)?;
                rows.push_str(&format!("{},{}\n", pair_idx, traj.nngp_kernel()));
            }
            _ => {
                let (x, z) = (&nums[..n0], &nums[n0..n0 + m0]);
                let (xp, zp) = (&nums[n0 + m0..2 * n0 + m0], &nums[2 * n0 + m0..]);
                let (h, f, g) = hyper_ntk(x, z, xp, zp, cfg).map_err(runtime)?;
                rows.push_str(&format!("{},{},{},{}\n", pair_idx, h, f, g));
            }
        }
        pair_idx += 1;
    }
    write_csv(out, "kernel.csv", &rows)?;
    println!("kernel: {} pairs evaluated", pair_idx);
    Ok(())
}

#[derive(Args)]
struct ConvergeArgs {
    /// Comma-separated meta widths.
    #[arg(long)]
    widths_f: Option<String>,
    /// Comma-separated primary widths.
    #[arg(long)]
    widths_g: Option<String>,
    #[arg(long)]
    meta_depth: Option<usize>,
    #[arg(long)]
    primary_depth: Option<usize>,
    #[arg(long)]
    n0: Option<usize>,
    /// Number of evenly spaced angles in [-pi/2, pi/2].
    #[arg(long)]
    n_thetas: Option<usize>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

fn theta_grid(n: usize) -> Vec<f64> {
    use std::f64::consts::{FRAC_PI_2, PI};
    (0..n)
        .map(|i| -FRAC_PI_2 + i as f64 * PI / (n - 1).max(1) as f64)
        .collect()
}

fn cmd_converge(a: ConvergeArgs, s: &mut Settings, out: &Path) -> Result<(), CliError> {
    let d = ConvergeConfig::default();
    let cfg = ConvergeConfig {
        widths_f: s.get_list("widths_f", a.widths_f, &d.widths_f)?,
        widths_g: s.get_list("widths_g", a.widths_g, &d.widths_g)?,
        meta_depth: s.get("meta_depth", a.meta_depth, d.meta_depth)?,
        primary_depth: s.get("primary_depth", a.primary_depth, d.primary_depth)?,
        n0: s.get("n0", a.n0, d.n0)?,
        thetas: theta_grid(s.get("n_thetas", a.n_thetas, d.thetas.len())?),
        n_seeds: s.get("seeds", a.seeds, d.n_seeds)?,
        seed: s.get("seed", a.seed, d.seed)?,
    };
    s.finish()?;
    s.write_manifest(out)?;

    let cells = converge_experiment(&cfg).map_err(runtime)?;
    let mut text = String::from("width_f,width_g,theta,mean_k,var_k,n_seeds\n");
    for c in &cells {
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            c.width_f, c.width_g, c.theta, c.mean_k, c.var_k, c.n_seeds
        ));
    }
    write_csv(out, "converge.csv", &text)?;
    println!("converge: {} cells written", cells.len());
    Ok(())
}

#[derive(Args)]
struct DriftArgs {
    #[arg(long)]
    widths: Option<String>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    meta_depth: Option<usize>,
    #[arg(long)]
    primary_depth: Option<usize>,
    #[arg(long)]
    n0: Option<usize>,
    #[arg(long)]
    m0: Option<usize>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    n_probes: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

fn cmd_drift(a: DriftArgs, s: &mut Settings, out: &Path) -> Result<(), CliError> {
    let d = DriftConfig::default();
    let cfg = DriftConfig {
        widths: s.get_list("widths", a.widths, &d.widths)?,
        n_seeds: s.get("seeds", a.seeds, d.n_seeds)?,
        meta_depth: s.get("meta_depth", a.meta_depth, d.meta_depth)?,
        primary_depth: s.get("primary_depth", a.primary_depth, d.primary_depth)?,
        n0: s.get("n0", a.n0, d.n0)?,
        m0: s.get("m0", a.m0, d.m0)?,
        mu: s.get("mu", a.mu, d.mu)?,
        n_train: s.get("n_train", a.n_train, d.n_train)?,
        n_probes: s.get("n_probes", a.n_probes, d.n_probes)?,
        seed: s.get("seed", a.seed, d.seed)?,
    };
    s.finish()?;
    s.write_manifest(out)?;

    let rows = kernel_drift_experiment(&cfg).map_err(runtime)?;
    let mut text = String::from("width,seed,rel_change\n");
    for r in &rows {
        text.push_str(&format!("{},{},{}\n", r.width, r.seed_index, r.rel_change));
    }
    write_csv(out, "drift.csv", &text)?;
    let mut med = String::from("width,median_rel_change\n");
    for (w, m) in drift_medians(&cfg.widths, &rows) {
        med.push_str(&format!("{},{}\n", w, m));
    }
    write_csv(out, "drift_medians.csv", &med)?;
    println!("drift: {} rows written", rows.len());
    Ok(())
}

fn write_scaling(
    out: &Path,
    prefix: &str,
    summary: &hyperkernel::correlation::ScalingSummary,
) -> Result<(), CliError> {
    let mut rows = String::from("width,seed,term_value\n");
    for r in &summary.rows {
        rows.push_str(&format!("{},{},{}\n", r.width, r.seed, r.value));
    }
    write_csv(out, &format!("{}_rows.csv", prefix), &rows)?;
    let mut agg = String::from("width,mean_abs,sd,n\n");
    for a in &summary.aggregates {
        agg.push_str(&format!("{},{},{},{}\n", a.width, a.mean_abs, a.sd, a.n));
    }
    write_csv(out, &format!("{}_agg.csv", prefix), &agg)?;
    let f = &summary.mean_fit;
    let fit = format!(
        "slope,intercept,r2,ci_low,ci_high\n{},{},{},{},{}\n",
        f.slope, f.intercept, f.r2, f.ci_low, f.ci_high
    );
    write_csv(out, &format!("{}_fit.csv", prefix), &fit)?;
    println!(
        "{}: slope {:.3} (95% CI {:.3}..{:.3}, r2 {:.3})",
        prefix, f.slope, f.ci_low, f.ci_high, f.r2
    );
    Ok(())
}

#[derive(Args)]
struct CorrArgs {
    /// Order of the correlation term.
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    n0: Option<usize>,
    #[arg(long)]
    widths: Option<String>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Whether all gradient outputs match the base output.
    #[arg(long)]
    matched: Option<bool>,
}

fn cmd_corr(a: CorrArgs, s: &mut Settings, out: &Path) -> Result<(), CliError> {
    let cfg = TProbeConfig {
        r: s.get("r", a.r, 2)?,
        depth: s.get("depth", a.depth, 3)?,
        n0: s.get("n0", a.n0, 4)?,
        widths: s.get_list("widths", a.widths, &[64, 128, 256, 512])?,
        seeds: s.get("seeds", a.seeds, 200)?,
        base_seed: s.get("seed", a.seed, 7)?,
        matched: s.get("matched", a.matched, true)?,
    };
    if cfg.r < 1 || cfg.r > cfg.depth {
        return Err(CliError::Config(format!(
            "r must be in 1..=depth, got r={} depth={}",
            cfg.r, cfg.depth
        )));
    }
    s.finish()?;
    s.write_manifest(out)?;
    let summary = scaling_probe_t(&cfg);
    write_scaling(out, "corr", &summary)
}

#[derive(Args)]
struct OrderArgs {
    /// Order of the kernel term.
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    primary_depth: Option<usize>,
    #[arg(long)]
    meta_depth: Option<usize>,
    #[arg(long)]
    n0: Option<usize>,
    #[arg(long)]
    widths: Option<String>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

fn cmd_order(a: OrderArgs, s: &mut Settings, out: &Path) -> Result<(), CliError> {
    let cfg = KProbeConfig {
        r: s.get("r", a.r, 2)?,
        primary_depth: s.get("primary_depth", a.primary_depth, 1)?,
        meta_depth: s.get("meta_depth", a.meta_depth, 2)?,
        n0: s.get("n0", a.n0, 4)?,
        widths: s.get_list("widths", a.widths, &[64, 128, 256, 512])?,
        seeds: s.get("seeds", a.seeds, 200)?,
        base_seed: s.get("seed", a.seed, 11)?,
    };
    if cfg.r < 1 || cfg.r > 4 || cfg.primary_depth > 3 {
        return Err(CliError::Config(format!(
            "supported ranges: r in 1..=4 and primary_depth in 1..=3, got r={} primary_depth={}",
            cfg.r, cfg.primary_depth
        )));
    }
    s.finish()?;
    s.write_manifest(out)?;
    let summary = scaling_probe_k(&cfg);
    write_scaling(out, "order", &summary)
}

/// Shared task keys for `regress` and `train-baseline`.
struct TaskSetup {
    images: ImageSet,
    cfg: RegressConfig,
}

#[derive(Args)]
struct TaskArgs {
    /// IDX3 image file; a synthetic rectangle corpus is used when omitted.
    #[arg(long)]
    images: Option<PathBuf>,
    /// Synthetic corpus size (ignored when --images is given).
    #[arg(long)]
    n_images: Option<usize>,
    /// Synthetic image side length.
    #[arg(long)]
    image_size: Option<usize>,
    #[arg(long)]
    data_seed: Option<u64>,
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    pixels_per_image: Option<usize>,
    #[arg(long)]
    n_test_images: Option<usize>,
    /// representation or inpainting.
    #[arg(long)]
    mode: Option<String>,
    /// Fourier feature count for the coordinate input; 0 disables the lift.
    #[arg(long)]
    fourier_k: Option<usize>,
    #[arg(long)]
    fourier_scale: Option<f64>,
    #[arg(long)]
    fourier_seed: Option<u64>,
    #[arg(long)]
    meta_depth: Option<usize>,
    #[arg(long)]
    primary_depth: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

fn resolve_task(a: TaskArgs, s: &mut Settings) -> Result<TaskSetup, CliError> {
    let d = RegressConfig::default();
    let images_path = s.get_path("images", a.images);
    let n_images = s.get("n_images", a.n_images, 500)?;
    let image_size = s.get("image_size", a.image_size, 8)?;
    let data_seed = s.get("data_seed", a.data_seed, 1)?;
    let fourier_k = s.get("fourier_k", a.fourier_k, 64)?;
    let fourier_scale = s.get(
        "fourier_scale",
        a.fourier_scale,
        hyperkernel::data::DEFAULT_FOURIER_SCALE,
    )?;
    let fourier_seed = s.get("fourier_seed", a.fourier_seed, 0x666f7572)?;
    let cfg = RegressConfig {
        n_train: s.get("n_train", a.n_train, d.n_train)?,
        pixels_per_image: s.get("pixels_per_image", a.pixels_per_image, d.pixels_per_image)?,
        n_test_images: s.get("n_test_images", a.n_test_images, d.n_test_images)?,
        mode: s.get_mode(a.mode)?,
        fourier: if fourier_k == 0 {
            None
        } else {
            Some(FourierSpec {
                k: fourier_k,
                scale: fourier_scale,
                seed: fourier_seed,
            })
        },
        meta_depth: s.get("meta_depth", a.meta_depth, d.meta_depth)?,
        primary_depth: s.get("primary_depth", a.primary_depth, d.primary_depth)?,
        eps: s.get("eps", a.eps, d.eps)?,
        seed: s.get("seed", a.seed, d.seed)?,
    };
    let images = match images_path {
        Some(p) => load_idx(&p).map_err(runtime)?,
        None => synthetic_images(n_images, image_size, data_seed),
    };
    if images.count <= cfg.n_test_images {
        return Err(CliError::Config(format!(
            "need more than {} images, have {}",
            cfg.n_test_images, images.count
        )));
    }
    Ok(TaskSetup { images, cfg })
}

fn export_task(setup: &TaskSetup, out: &Path) -> Result<(), CliError> {
    let train_images = setup
        .images
        .subset(0, setup.images.count - setup.cfg.n_test_images);
    let task = build_task(
        &train_images,
        setup.cfg.n_train,
        setup.cfg.pixels_per_image,
        setup.cfg.mode,
        setup.cfg.fourier,
        setup.cfg.seed,
    )
    .map_err(runtime)?;
    write_task_csv(&task, &out.join("task.csv")).map_err(runtime)
}

#[derive(Args)]
struct RegressArgs {
    #[command(flatten)]
    task: TaskArgs,
}

fn cmd_regress(a: RegressArgs, s: &mut Settings, out: &Path) -> Result<(), CliError> {
    let setup = resolve_task(a.task, s)?;
    s.finish()?;
    s.write_manifest(out)?;
    export_task(&setup, out)?;
    let r = regress_experiment(&setup.images, &setup.cfg).map_err(runtime)?;
    let text = format!(
        "kernel,mse,n_train,n_test\nnngp,{},{},{}\nntk,{},{},{}\nmean,{},{},{}\n",
        r.mse_nngp, r.n_train, r.n_test, r.mse_ntk, r.n_train, r.n_test, r.mse_mean, r.n_train,
        r.n_test
    );
    write_csv(out, "regress.csv", &text)?;
    println!(
        "regress: nngp {:.5} ntk {:.5} mean {:.5}",
        r.mse_nngp, r.mse_ntk, r.mse_mean
    );
    Ok(())
}

#[derive(Args)]
struct BaselineArgs {
    #[command(flatten)]
    task: TaskArgs,
    #[arg(long)]
    meta_width: Option<usize>,
    #[arg(long)]
    primary_width: Option<usize>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    /// Loss exponent p (1 or 2).
    #[arg(long)]
    loss_p: Option<u32>,
    #[arg(long)]
    baseline_seed: Option<u64>,
}

fn cmd_baseline(a: BaselineArgs, s: &mut Settings, out: &Path) -> Result<(), CliError> {
    let setup = resolve_task(a.task, s)?;
    let d = BaselineConfig::default();
    let bl = BaselineConfig {
        meta_width: s.get("meta_width", a.meta_width, d.meta_width)?,
        primary_width: s.get("primary_width", a.primary_width, d.primary_width)?,
        mu: s.get("mu", a.mu, d.mu)?,
        epochs: s.get("epochs", a.epochs, d.epochs)?,
        batch: s.get("batch", a.batch, d.batch)?,
        loss_exponent: s.get("loss_p", a.loss_p, d.loss_exponent)?,
        seed: s.get("baseline_seed", a.baseline_seed, d.seed)?,
    };
    if bl.loss_exponent != 1 && bl.loss_exponent != 2 {
        return Err(CliError::Config(format!(
            "loss_p must be 1 or 2, got {}",
            bl.loss_exponent
        )));
    }
    s.finish()?;
    s.write_manifest(out)?;
    let mse = sgd_baseline(&setup.images, &setup.cfg, &bl).map_err(runtime)?;
    let text = format!(
        "test_mse,mu,epochs,batch,loss_p\n{},{},{},{},{}\n",
        mse, bl.mu, bl.epochs, bl.batch, bl.loss_exponent
    );
    write_csv(out, "baseline.csv", &text)?;
    println!("train-baseline: test mse {:.5}", mse);
    Ok(())
}

#[derive(Args)]
struct LargeLrArgs {
    #[arg(long)]
    widths: Option<String>,
    #[arg(long)]
    input_dim: Option<usize>,
    #[arg(long)]
    input_scale: Option<f64>,
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    n_test: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    /// Loss exponent p (1 or 2).
    #[arg(long)]
    loss_p: Option<u32>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

fn cmd_large_lr(a: LargeLrArgs, s: &mut Settings, out: &Path) -> Result<(), CliError> {
    let d = LargeLrConfig::default();
    let cfg = LargeLrConfig {
        widths: s.get_list("widths", a.widths, &d.widths)?,
        input_dim: s.get("input_dim", a.input_dim, d.input_dim)?,
        input_scale: s.get("input_scale", a.input_scale, d.input_scale)?,
        n_train: s.get("n_train", a.n_train, d.n_train)?,
        n_test: s.get("n_test", a.n_test, d.n_test)?,
        epochs: s.get("epochs", a.epochs, d.epochs)?,
        batch: s.get("batch", a.batch, d.batch)?,
        loss_exponent: s.get("loss_p", a.loss_p, d.loss_exponent)?,
        n_seeds: s.get("seeds", a.seeds, d.n_seeds)?,
        seed: s.get("seed", a.seed, d.seed)?,
    };
    if cfg.loss_exponent != 1 && cfg.loss_exponent != 2 {
        return Err(CliError::Config(format!(
            "loss_p must be 1 or 2, got {}",
            cfg.loss_exponent
        )));
    }
    s.finish()?;
    s.write_manifest(out)?;
    let rows = large_lr_experiment(&cfg).map_err(runtime)?;
    let mut text = String::from("width,seed,mu,outcome,final_train_loss,test_loss,diverged_step\n");
    for r in &rows {
        match &r.outcome {
            TrainOutcome::Finished {
                final_train_loss,
                test_loss,
            } => text.push_str(&format!(
                "{},{},{},finished,{},{},\n",
                r.width, r.seed_index, r.mu, final_train_loss, test_loss
            )),
            TrainOutcome::Diverged { step } => text.push_str(&format!(
                "{},{},{},diverged,,,{}\n",
                r.width, r.seed_index, r.mu, step
            )),
        }
    }
    write_csv(out, "large_lr.csv", &text)?;
    println!("large-lr: {} rows written", rows.len());
    Ok(())
}
