//! Command-line interface: simulate → fit → predict → score pipelines plus
//! the covariance / cluster / weight-map table emitters.

use crate::config::{HyperPriors, McmcConfig};
use crate::data::{validate_dataset, SpaceTimeDomain, SpaceTimePoint};
use crate::datagen::{self, CovModelSpec, TimeMode};
use crate::io::{self, fmt_f64, RunManifest};
use crate::kernels::{KernelKind, KernelParams};
use crate::mcmc;
use crate::predict;
use crate::stickbreak::{self, PriorSpec};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(name = "stsb", version, about = "Spatio-temporal stick-breaking mixtures: simulation, inference, prediction")]
struct Cli {
    /// Seed for every stochastic step; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Flat key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker-thread cap for parallel sections.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory receiving every output file.
    #[arg(long = "out-dir", global = true, default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic dataset CSV.
    Simulate(SimulateArgs),
    /// Fit the mixture by blocked Gibbs and write the trace CSV.
    Fit(FitArgs),
    /// Posterior predictive summaries at new points from a stored trace.
    Predict(PredictArgs),
    /// Kernel-mass ratio and co-clustering tables over distance and time.
    Covariance(CovarianceArgs),
    /// Expected occupied-component counts against sample size.
    Clusters(ClustersArgs),
    /// Stick-weight maps over a spatial grid.
    Weights(WeightsArgs),
    /// Squared prediction error of a predictions file against truth.
    Score(ScoreArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// scenario41 | gaussian | exp-trend | stable | zonal | stein | nonsep
    #[arg(long)]
    model: String,
    /// Stations per time point (scenario41 only).
    #[arg(long, default_value_t = 200)]
    n: usize,
    /// Number of time points.
    #[arg(long = "T", visible_alias = "t-max", default_value_t = 24)]
    t_max: u32,
    /// Spatial correlation lengthscale (scenario41 only).
    #[arg(long, default_value_t = 0.2)]
    rho: f64,
    /// Thomas parent intensity (station models).
    #[arg(long, default_value_t = 10.0)]
    omega: f64,
    /// Thomas mean daughters per parent.
    #[arg(long, default_value_t = 20.0)]
    delta: f64,
    /// Thomas cluster disk radius.
    #[arg(long, default_value_t = 0.1)]
    radius: f64,
    /// replicate | redraw: how purely spatial fields cover the time grid.
    #[arg(long = "time-mode", default_value = "redraw")]
    time_mode: String,
    #[arg(long, default_value = "dataset.csv")]
    out: String,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[arg(long)]
    input: PathBuf,
    /// separable | gneiting | constant; overrides the config file.
    #[arg(long)]
    kernel: Option<String>,
    /// Run the varying-atoms sampler.
    #[arg(long = "varying-atoms")]
    varying_atoms: bool,
    #[arg(long, default_value = "trace.csv")]
    out: String,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    trace: PathBuf,
    /// Dataset-format CSV naming the prediction points (y may be empty).
    #[arg(long)]
    points: PathBuf,
    #[arg(long, default_value = "predictions.csv")]
    out: String,
    /// Also emit the posterior predictive density curve at this 1-based
    /// point row (covariate-free fits).
    #[arg(long = "density-at")]
    density_at: Option<usize>,
    #[arg(long = "density-out", default_value = "density.csv")]
    density_out: String,
}

#[derive(Args, Debug)]
struct CovarianceArgs {
    #[arg(long, default_value = "gneiting")]
    kernel: String,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    #[arg(long = "n-mc", default_value_t = 50_000)]
    n_mc: usize,
    #[arg(long = "T", visible_alias = "t-max", default_value_t = 6)]
    t_max: u32,
    #[arg(long, default_value = "covariance.csv")]
    out: String,
}

#[derive(Args, Debug)]
struct ClustersArgs {
    #[arg(long, default_value = "gneiting")]
    kernel: String,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    #[arg(long, default_value_t = 100)]
    truncation: usize,
    #[arg(long = "T", visible_alias = "t-max", default_value_t = 10)]
    t_max: u32,
    #[arg(long = "n-list", default_value = "10,100,1000")]
    n_list: String,
    #[arg(long, default_value_t = 20)]
    reps: usize,
    #[arg(long, default_value = "clusters.csv")]
    out: String,
}

#[derive(Args, Debug)]
struct WeightsArgs {
    #[arg(long, default_value = "gneiting")]
    kernel: String,
    /// 1-based component indices to tabulate; 0 rows carry the remainder.
    #[arg(long, default_value = "1,2")]
    components: String,
    #[arg(long, default_value_t = 20)]
    grid: usize,
    #[arg(long, default_value_t = 1)]
    t: u32,
    #[arg(long, default_value_t = 20)]
    truncation: usize,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    #[arg(long = "T", visible_alias = "t-max", default_value_t = 10)]
    t_max: u32,
    #[arg(long, default_value = "weights.csv")]
    out: String,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    #[arg(long)]
    predictions: PathBuf,
    /// Dataset-format CSV with the held-out responses.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, default_value = "espe.csv")]
    out: String,
}

/// Entry point behind the binary: parses argv, dispatches, and maps errors
/// to exit codes (2 for usage, 1 for runtime failures).
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return if code == 0 { 0 } else { 2 };
        }
    };
    if let Some(threads) = cli.threads {
        // ignore the error when a pool already exists (repeat invocations)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(msg) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), String> {
    std::fs::create_dir_all(&cli.out_dir)
        .map_err(|e| format!("out-dir {}: {e}", cli.out_dir.display()))?;
    let (hyper, mut config) = match &cli.config {
        Some(path) => io::parse_config(path).map_err(|e| format!("parse_config: {e}"))?,
        None => (HyperPriors::default(), McmcConfig::default()),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let started = std::time::Instant::now();
    let mut manifest = match &cli.command {
        Command::Simulate(args) => cmd_simulate(cli, args, &config)?,
        Command::Fit(args) => cmd_fit(cli, args, &hyper, config.clone())?,
        Command::Predict(args) => cmd_predict(cli, args, &config)?,
        Command::Covariance(args) => cmd_covariance(cli, args, &config)?,
        Command::Clusters(args) => cmd_clusters(cli, args, &config)?,
        Command::Weights(args) => cmd_weights(cli, args, &config)?,
        Command::Score(args) => cmd_score(cli, args, &config)?,
    };
    manifest.duration_secs = started.elapsed().as_secs_f64();
    let name = match &cli.command {
        Command::Simulate(_) => "simulate_manifest.txt",
        Command::Fit(_) => "fit_manifest.txt",
        Command::Predict(_) => "predict_manifest.txt",
        Command::Covariance(_) => "covariance_manifest.txt",
        Command::Clusters(_) => "clusters_manifest.txt",
        Command::Weights(_) => "weights_manifest.txt",
        Command::Score(_) => "score_manifest.txt",
    };
    io::write_manifest(&cli.out_dir.join(name), &manifest).map_err(|e| format!("write_manifest: {e}"))
}

fn station_model(name: &str) -> Option<(CovModelSpec, bool)> {
    // (spec, purely spatial)
    match name {
        "gaussian" | "model1" => Some((CovModelSpec::GaussianCov { tau2: 1.0, h: 0.4 }, true)),
        "exp-trend" | "model2" => Some((
            CovModelSpec::ExpNuggetTrend { tau2: 4.0, h: 10.0, nugget: 0.2, trend_mean: 0.5 },
            true,
        )),
        "stable" | "model3" => Some((CovModelSpec::Stable { tau2: 1.0, h: 0.4, alpha: 1.9 }, true)),
        "zonal" | "model4" => Some((
            CovModelSpec::ZonalAnisotropyNugget { tau2: 1.0, h: 0.3, nugget: 0.2, long_axis: 0 },
            true,
        )),
        "stein" | "model5" => Some((CovModelSpec::Stein { nu: 1.5 }, false)),
        "nonsep" | "model6" => Some((CovModelSpec::NonSeparable, false)),
        _ => None,
    }
}

fn cmd_simulate(cli: &Cli, args: &SimulateArgs, config: &McmcConfig) -> Result<RunManifest, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut manifest = RunManifest::new(format!("simulate --model {}", args.model), config.seed);
    manifest.echo("model", &args.model);
    manifest.echo("T", args.t_max);

    let dataset = if args.model == "scenario41" {
        manifest.echo("n_per_t", args.n);
        manifest.echo("rho", args.rho);
        datagen::scenario_regime(args.n, args.t_max, args.rho, &mut rng)
            .map_err(|e| format!("simulate: {e}"))?
    } else {
        let (spec, spatial_only) =
            station_model(&args.model).ok_or_else(|| format!("simulate: unknown model {}", args.model))?;
        let mode = match args.time_mode.as_str() {
            "replicate" => TimeMode::Replicate,
            "redraw" => TimeMode::Redraw,
            other => return Err(format!("simulate: unknown time mode {other}")),
        };
        manifest.echo("omega", args.omega);
        manifest.echo("delta", args.delta);
        manifest.echo("radius", args.radius);
        if spatial_only {
            manifest.echo("time_mode", mode.name());
        }
        let window = SpaceTimeDomain::unit(args.t_max);
        // a zero-daughter realization is retried on the same stream
        let mut locations = None;
        for _ in 0..10 {
            match datagen::thomas_process(args.omega, args.delta, args.radius, &window, &mut rng) {
                Ok(pts) => {
                    locations = Some(pts);
                    break;
                }
                Err(datagen::DatagenError::EmptyRealization) => continue,
                Err(e) => return Err(format!("simulate: {e}")),
            }
        }
        let locations = locations.ok_or("simulate: thomas process kept coming up empty")?;
        manifest.echo("n_locations", locations.len());
        datagen::simulate_spacetime(&spec, &locations, args.t_max, mode, &mut rng)
            .map_err(|e| format!("simulate: {e}"))?
    };

    let out = cli.out_dir.join(&args.out);
    io::write_dataset_csv(&out, &dataset).map_err(|e| format!("simulate: {e}"))?;
    manifest.add_digest("output", &out).map_err(|e| format!("simulate: {e}"))?;
    println!("simulate: wrote {} observations to {}", dataset.len(), out.display());
    Ok(manifest)
}

fn echo_mcmc(manifest: &mut RunManifest, config: &McmcConfig) {
    manifest.echo("truncation", config.truncation);
    manifest.echo("n_iter", config.n_iter);
    manifest.echo("n_burn", config.n_burn);
    manifest.echo("thin", config.thin);
    manifest.echo("kernel", config.kernel_kind.name());
    manifest.echo("varying_atoms", config.varying_atoms);
}

fn cmd_fit(cli: &Cli, args: &FitArgs, hyper: &HyperPriors, mut config: McmcConfig) -> Result<RunManifest, String> {
    if let Some(kernel) = &args.kernel {
        config.kernel_kind = kernel.parse().map_err(|e| format!("fit: {e}"))?;
    }
    if args.varying_atoms {
        config.varying_atoms = true;
    }
    let raw = io::load_csv(&args.input).map_err(|e| format!("fit/load_csv: {e}"))?;
    let (dataset, report) = validate_dataset(raw).map_err(|e| format!("fit: {e}"))?;
    if !report.duplicate_points.is_empty() {
        eprintln!("fit: note: {} duplicate (s, t) points retained as replicates", report.duplicate_points.len());
    }
    let trace = if config.varying_atoms {
        crate::gp_atoms::run_chain_va(&dataset, &config, hyper)
    } else {
        mcmc::run_chain(&dataset, &config, hyper)
    }
    .map_err(|e| format!("fit: {e}"))?;

    let out = cli.out_dir.join(&args.out);
    io::write_trace_csv(&out, &trace).map_err(|e| format!("fit: {e}"))?;
    let mut manifest = RunManifest::new(format!("fit --input {}", args.input.display()), config.seed);
    echo_mcmc(&mut manifest, &config);
    manifest.add_digest("input", &args.input).map_err(|e| format!("fit: {e}"))?;
    manifest.add_digest("output", &out).map_err(|e| format!("fit: {e}"))?;
    println!(
        "fit: {} kept iterations ({} kernel) written to {}",
        trace.records.len(),
        trace.kind.name(),
        out.display()
    );
    Ok(manifest)
}

fn cmd_predict(cli: &Cli, args: &PredictArgs, config: &McmcConfig) -> Result<RunManifest, String> {
    let trace = io::load_trace_csv(&args.trace).map_err(|e| format!("predict: {e}"))?;
    let target = io::load_csv(&args.points).map_err(|e| format!("predict/load_csv: {e}"))?;
    let points: Vec<SpaceTimePoint> = target.observations.iter().map(|o| o.point).collect();
    let covariates: Option<Vec<Vec<f64>>> = if trace.covariate_dim > 0 {
        Some(
            target
                .observations
                .iter()
                .map(|o| o.x.clone().unwrap_or_default())
                .collect(),
        )
    } else {
        None
    };
    let pred = predict::posterior_predictive(&trace, &points, covariates.as_deref(), config.seed)
        .map_err(|e| format!("predict: {e}"))?;
    let out = cli.out_dir.join(&args.out);
    io::write_predictions_csv(&out, &pred).map_err(|e| format!("predict: {e}"))?;
    let mut manifest = RunManifest::new(format!("predict --trace {}", args.trace.display()), config.seed);
    manifest.echo("n_points", points.len());
    if let Some(row) = args.density_at {
        if row == 0 || row > points.len() {
            return Err(format!("predict: --density-at row {row} out of range"));
        }
        let p = &points[row - 1];
        // grid spanning ±6 predictive sd around the predictive mean
        let (m, sd) = (pred.mean[row - 1], pred.sd[row - 1].max(1e-6));
        let grid: Vec<f64> = (0..401).map(|i| m - 6.0 * sd + i as f64 * 12.0 * sd / 400.0).collect();
        let density = predict::predictive_density(&trace, p, &grid, config.seed)
            .map_err(|e| format!("predict: {e}"))?;
        let dpath = cli.out_dir.join(&args.density_out);
        io::write_density_csv(&dpath, &grid, &density).map_err(|e| format!("predict: {e}"))?;
        manifest.echo("density_at", row);
        manifest.add_digest("density", &dpath).map_err(|e| format!("predict: {e}"))?;
    }
    manifest.add_digest("trace", &args.trace).map_err(|e| format!("predict: {e}"))?;
    manifest.add_digest("points", &args.points).map_err(|e| format!("predict: {e}"))?;
    manifest.add_digest("output", &out).map_err(|e| format!("predict: {e}"))?;
    println!("predict: wrote {} rows to {}", points.len(), out.display());
    Ok(manifest)
}

fn parse_kernel(name: &str) -> Result<KernelKind, String> {
    name.parse::<KernelKind>()
}

fn covariance_kernel_template(gamma: f64, lambda: f64, t_max: u32) -> KernelParams {
    let domain = SpaceTimeDomain::unit(t_max);
    let (h1, h2, ht) = mcmc::derive_bandwidths(&HyperPriors::default(), &domain);
    KernelParams {
        psi: (0.0, 0.0),
        zeta: 1.0,
        h: Some((h1, h2)),
        h_t: Some(ht),
        gamma,
        lambda,
    }
}

fn cmd_covariance(cli: &Cli, args: &CovarianceArgs, config: &McmcConfig) -> Result<RunManifest, String> {
    let kind = parse_kernel(&args.kernel)?;
    let domain = SpaceTimeDomain::unit(args.t_max);
    let kernel = covariance_kernel_template(args.gamma, args.lambda, args.t_max);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let s = (0.25, 0.5);
    let distances = [0.0, 0.15, 0.3, 0.45, 0.6, 0.75];
    let t_pairs = [(1.0, 1.0), (1.0, 3.0), (1.0, 5.0), (3.0, 5.0)];
    let mut rows = Vec::new();
    for &d in &distances {
        for &(t, t2) in &t_pairs {
            let s2 = (s.0 + d, s.1);
            let (g_mc, se) = stickbreak::g_mc(kind, &kernel, &domain, s, s2, t, t2, args.n_mc, &mut rng)
                .map_err(|e| format!("covariance: {e}"))?;
            let g_closed = match kind {
                KernelKind::Gneiting => fmt_f64(stickbreak::g_gneiting(s, s2, t, t2, args.gamma, args.lambda)),
                _ => String::new(),
            };
            let cocluster = stickbreak::coclustering_closed_form(args.a, args.b, g_mc.clamp(0.0, 1.0))
                .map_err(|e| format!("covariance: {e}"))?;
            rows.push(vec![
                fmt_f64(d),
                fmt_f64(t),
                fmt_f64(t2),
                g_closed,
                fmt_f64(g_mc),
                fmt_f64(se),
                fmt_f64(cocluster),
            ]);
        }
    }
    let out = cli.out_dir.join(&args.out);
    io::write_table_csv(&out, "s_dist,t,t_prime,g_closed,g_mc,g_mc_se,cocluster", &rows)
        .map_err(|e| format!("covariance: {e}"))?;
    let mut manifest = RunManifest::new(format!("covariance --kernel {}", args.kernel), config.seed);
    manifest.echo("gamma", args.gamma);
    manifest.echo("lambda", args.lambda);
    manifest.echo("n_mc", args.n_mc);
    manifest.add_digest("output", &out).map_err(|e| format!("covariance: {e}"))?;
    println!("covariance: wrote {} rows to {}", rows.len(), out.display());
    Ok(manifest)
}

fn prior_spec_for(kind: KernelKind, args_gamma: f64, args_lambda: f64, a: f64, b: f64, truncation: usize, t_max: u32) -> PriorSpec {
    let domain = SpaceTimeDomain::unit(t_max);
    let mut spec = PriorSpec::new(kind, domain);
    spec.truncation = truncation;
    spec.a = a;
    spec.b = b;
    spec.kernel = covariance_kernel_template(args_gamma, args_lambda, t_max);
    spec
}

fn cmd_clusters(cli: &Cli, args: &ClustersArgs, config: &McmcConfig) -> Result<RunManifest, String> {
    let kind = parse_kernel(&args.kernel)?;
    let sizes: Vec<usize> = args
        .n_list
        .split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|_| format!("clusters: bad n-list entry {s}")))
        .collect::<Result<_, _>>()?;
    let spec = prior_spec_for(kind, args.gamma, args.lambda, args.a, args.b, args.truncation, args.t_max);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let means = stickbreak::expected_cluster_count_curve(&spec, &sizes, args.reps, &mut rng);
    let rows: Vec<Vec<String>> = sizes
        .iter()
        .zip(&means)
        .map(|(n, m)| vec![n.to_string(), fmt_f64(*m)])
        .collect();
    let out = cli.out_dir.join(&args.out);
    io::write_table_csv(&out, "n,mean_occupied", &rows).map_err(|e| format!("clusters: {e}"))?;
    let mut manifest = RunManifest::new(format!("clusters --kernel {}", args.kernel), config.seed);
    manifest.echo("a", args.a);
    manifest.echo("b", args.b);
    manifest.echo("reps", args.reps);
    manifest.add_digest("output", &out).map_err(|e| format!("clusters: {e}"))?;
    println!("clusters: wrote {} rows to {}", rows.len(), out.display());
    Ok(manifest)
}

fn cmd_weights(cli: &Cli, args: &WeightsArgs, config: &McmcConfig) -> Result<RunManifest, String> {
    let kind = parse_kernel(&args.kernel)?;
    let components: Vec<usize> = args
        .components
        .split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|_| format!("weights: bad component index {s}")))
        .collect::<Result<_, _>>()?;
    if components.iter().any(|&k| k == 0 || k > args.truncation) {
        return Err("weights: component indices are 1-based and bounded by the truncation".into());
    }
    let spec = prior_spec_for(kind, args.gamma, args.lambda, 1.0, 1.0, args.truncation, args.t_max);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let draw = stickbreak::sample_prior(&spec, &mut rng);
    let mut grid = Vec::with_capacity(args.grid * args.grid);
    for i in 0..args.grid {
        for j in 0..args.grid {
            let step = 1.0 / (args.grid.max(2) - 1) as f64;
            grid.push(SpaceTimePoint::new(i as f64 * step, j as f64 * step, args.t));
        }
    }
    let map = stickbreak::weight_map(&draw.sticks, &grid);
    let mut rows = Vec::new();
    for (i, p) in map.points.iter().enumerate() {
        for &k in &components {
            rows.push(vec![
                fmt_f64(p.s1),
                fmt_f64(p.s2),
                p.t.to_string(),
                k.to_string(),
                fmt_f64(map.weights[i][k - 1]),
            ]);
        }
        rows.push(vec![
            fmt_f64(p.s1),
            fmt_f64(p.s2),
            p.t.to_string(),
            "0".to_string(),
            fmt_f64(map.remainders[i]),
        ]);
    }
    let out = cli.out_dir.join(&args.out);
    io::write_table_csv(&out, "s1,s2,t,component,weight", &rows).map_err(|e| format!("weights: {e}"))?;
    let mut manifest = RunManifest::new(format!("weights --kernel {}", args.kernel), config.seed);
    manifest.echo("grid", args.grid);
    manifest.echo("t", args.t);
    manifest.add_digest("output", &out).map_err(|e| format!("weights: {e}"))?;
    println!("weights: wrote {} rows to {}", rows.len(), out.display());
    Ok(manifest)
}

fn cmd_score(cli: &Cli, args: &ScoreArgs, config: &McmcConfig) -> Result<RunManifest, String> {
    let pred = io::load_predictions_csv(&args.predictions).map_err(|e| format!("score: {e}"))?;
    let truth_ds = io::load_csv(&args.truth).map_err(|e| format!("score/load_csv: {e}"))?;
    if truth_ds.len() != pred.points.len() {
        return Err(format!(
            "score: {} predictions against {} truth rows",
            pred.points.len(),
            truth_ds.len()
        ));
    }
    for (i, (p, o)) in pred.points.iter().zip(&truth_ds.observations).enumerate() {
        if p != &o.point {
            return Err(format!("score: point mismatch at row {}", i + 1));
        }
    }
    let truth: Vec<f64> = truth_ds
        .observations
        .iter()
        .map(|o| o.y.ok_or("score: truth rows must carry responses"))
        .collect::<Result<_, _>>()?;
    let (sum_form, mean_form) = predict::espe(&pred, &truth).map_err(|e| format!("score: {e}"))?;
    let out = cli.out_dir.join(&args.out);
    io::write_table_csv(
        &out,
        "sum_form,mean_form,n",
        &[vec![fmt_f64(sum_form), fmt_f64(mean_form), truth.len().to_string()]],
    )
    .map_err(|e| format!("score: {e}"))?;
    println!("score: espe sum = {sum_form:.6}, mean = {mean_form:.6} over {} points", truth.len());
    let mut manifest = RunManifest::new(format!("score --predictions {}", args.predictions.display()), config.seed);
    manifest.echo("n_points", truth.len());
    manifest.add_digest("predictions", &args.predictions).map_err(|e| format!("score: {e}"))?;
    manifest.add_digest("truth", &args.truth).map_err(|e| format!("score: {e}"))?;
    manifest.add_digest("output", &out).map_err(|e| format!("score: {e}"))?;
    Ok(manifest)
}
