mod grid;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use auditlab_core::access::{LocalAccess, PlatformAccess};
use auditlab_core::census::{
    ingest_census_csv, run_census_audit, synthetic_census, train_logistic, AttributeProxy, CensusSchema,
    IngestOptions, NameTable, TabularDataset, TrainParams,
};
use auditlab_core::engine::{
    full_scrape_audit, manipulation_sweep, pareto_sweep, run_budgeted_audit, AuditResult, BudgetPlan, ParetoConfig,
    PlatformSource, SweepConfig,
};
use auditlab_core::platform::{generate_platform, GeneratorConfig, PlatformState, VideoCountLaw};
use auditlab_core::proxy::{PopularityOnlyScorer, ProxySpec};
use auditlab_core::seeds::{derive_seed, Stream};
use auditlab_core::sources::{ManipulatedApi, StrategyKind, StrategySpec};
use auditlab_net::{serve, RemoteAccess, ServerConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "auditlab", version, about = "Seeded audit experiments on a simulated creator platform")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a platform and write it as JSON.
    Gen(GenArgs),
    /// Parity through the API and the scrape interface as manipulation grows.
    Sweep(SweepArgs),
    /// Margin error and detection probability across budget splits.
    Pareto(ParetoArgs),
    /// One budgeted audit, in-process or against a server.
    Audit(AuditArgs),
    /// Disparate impact of an income classifier, with true and proxied sex.
    Census(CensusArgs),
    /// Run the platform as a network service.
    Serve(ServeArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
enum ProxyChoice {
    Perfect,
    Poor,
    PopularityOnly,
}

#[derive(Args, Debug, Clone)]
struct PlatformArgs {
    /// Platform JSON written by `gen`; otherwise one is generated.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n_creators: Option<usize>,
    /// Video count law, e.g. `reversed-exponential:rate=3` or `exponential:mean=3`.
    #[arg(long)]
    video_law: Option<VideoCountLaw>,
}

impl PlatformArgs {
    fn generator(&self, seed: u64) -> GeneratorConfig {
        let mut g = GeneratorConfig::with_seed(seed);
        if let Some(n) = self.n_creators {
            g.n_creators = n;
        }
        if let Some(law) = self.video_law.clone() {
            g.video_count_law = law;
        }
        g
    }

    /// The fixed platform of a run: loaded, or generated from the seed.
    fn load(&self, seed: u64) -> Result<Arc<PlatformState>> {
        Ok(Arc::new(match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                PlatformState::from_json(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => generate_platform(&self.generator(derive_seed(seed, Stream::Platform, 0)))?,
        }))
    }
}

#[derive(Args, Debug, Clone)]
struct OutputArgs {
    /// Output file; a `.manifest.json` is written beside it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl OutputArgs {
    fn resolve(&self, stem: &str, default: Format) -> (PathBuf, Format) {
        let format = self.format.unwrap_or(default);
        let ext = match format {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        (self.out.clone().unwrap_or_else(|| PathBuf::from(format!("{stem}.{ext}"))), format)
    }
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    platform: PlatformArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Strategy family: demote-privileged, promote-regular or bubble-swap.
    #[arg(long)]
    strategy: StrategyKind,
    #[arg(long, value_parser = grid::parse_unit_grid, default_value = "0:1:0.1")]
    xs: grid::Grid,
    #[arg(long, default_value_t = 50)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    platform: PlatformArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone)]
struct ProxyArgs {
    #[arg(long, value_enum, default_value_t = ProxyChoice::Perfect)]
    proxy: ProxyChoice,
    /// Consistency threshold; defaults to 0.5, or to the constant score of
    /// the poor proxy.
    #[arg(long)]
    zeta: Option<f64>,
}

impl ProxyArgs {
    /// `input_space_size` counts creators plus videos.
    fn build(&self, input_space_size: usize) -> Result<ProxySpec> {
        Ok(match self.proxy {
            ProxyChoice::Perfect => match self.zeta {
                Some(z) => ProxySpec::intermediate("perfect", Arc::new(auditlab_core::proxy::PerfectScorer), z)?,
                None => ProxySpec::perfect(),
            },
            ProxyChoice::Poor => ProxySpec::poor(
                input_space_size,
                self.zeta.unwrap_or(1.0 / input_space_size as f64),
            )?,
            ProxyChoice::PopularityOnly => {
                ProxySpec::intermediate("popularity-only", Arc::new(PopularityOnlyScorer), self.zeta.unwrap_or(0.5))?
            }
        })
    }
}

#[derive(Args, Debug)]
struct ParetoArgs {
    #[arg(long, default_value_t = 200)]
    t: u64,
    /// Strategy descriptor, e.g. `demote-privileged:x=0.2`.
    #[arg(long, default_value = "demote-privileged:x=0.2")]
    strategy: StrategySpec,
    #[arg(long, value_parser = grid::parse_unit_grid, default_value = "0:1:0.05")]
    betas: grid::Grid,
    #[arg(long, default_value_t = 500)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    proxy: ProxyArgs,
    #[command(flatten)]
    platform: PlatformArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct AuditArgs {
    #[arg(long, default_value_t = 200)]
    t: u64,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    #[arg(long, default_value = "none")]
    strategy: StrategySpec,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Audit a running server instead of an in-process platform.
    #[arg(long)]
    remote: Option<String>,
    /// Scrape everything and estimate parity from the scrape interface;
    /// `--t` must cover every creator and video.
    #[arg(long)]
    full_scrape: bool,
    #[command(flatten)]
    proxy: ProxyArgs,
    #[command(flatten)]
    platform: PlatformArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct CensusArgs {
    /// Directory holding `adult.data` and `adult.test`.
    #[arg(long, conflicts_with_all = ["train", "synthetic"])]
    data_dir: Option<PathBuf>,
    #[arg(long, requires = "test")]
    train: Option<PathBuf>,
    #[arg(long, requires = "train")]
    test: Option<PathBuf>,
    #[arg(long, default_value = "uci-adult")]
    schema: CensusSchema,
    /// Use this many synthetic rows (split 2:1 into train and test).
    #[arg(long, conflicts_with = "train")]
    synthetic: Option<usize>,
    /// Log-odds bonus of men in the synthetic rows.
    #[arg(long, default_value_t = 1.5)]
    bias: f64,
    /// Error rate of the noisy-channel proxy.
    #[arg(long, default_value_t = 0.309, conflicts_with = "names")]
    proxy_error: f64,
    /// `name,p_male` table; rows get names drawn from it and the proxy
    /// reads sex off the name.
    #[arg(long)]
    names: Option<PathBuf>,
    #[arg(long, default_value_t = 300)]
    epochs: usize,
    #[arg(long, default_value_t = 0.5)]
    learning_rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:7878")]
    bind: String,
    #[arg(long, default_value = "none")]
    strategy: StrategySpec,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    budget_limit: Option<u64>,
    /// Data requests per second per session.
    #[arg(long)]
    rate_limit: Option<f64>,
    #[command(flatten)]
    platform: PlatformArgs,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Writes `<stem>.manifest.json`: the argv and resolved configuration that
/// regenerate `outputs`.
fn write_manifest(main: &Path, command: &str, config: serde_json::Value, outputs: &[&Path]) -> Result<()> {
    let manifest = json!({
        "tool": "auditlab",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "argv": std::env::args().skip(1).collect::<Vec<_>>(),
        "config": config,
        "outputs": outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    });
    write_json(&sibling(main, ".manifest.json"), &manifest)
}

fn platform_config_json(args: &PlatformArgs, state: &PlatformState) -> serde_json::Value {
    match &args.config {
        Some(path) => json!({ "file": path.display().to_string() }),
        None => json!({ "generator": state.config() }),
    }
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let config = args.platform.generator(args.seed);
    let state = match &args.platform.config {
        Some(_) => bail!("gen writes a platform; --config is for the other commands"),
        None => generate_platform(&config)?,
    };
    let (out, _) = args.output.resolve("platform", Format::Json);
    let mut w = create(&out)?;
    w.write_all(state.to_json()?.as_bytes())?;
    w.flush()?;
    write_manifest(&out, "gen", json!({ "generator": config }), &[&out])?;
    let parity = state.true_parity()?;
    println!(
        "{} creators, {} videos, economic parity {:.4} ({})",
        state.creators().len(),
        state.videos().len(),
        parity.value,
        if parity.decision { "holds" } else { "violated" }
    );
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    if args.strategy == StrategyKind::None {
        bail!("sweep needs a manipulative strategy");
    }
    let platform = match &args.platform.config {
        Some(_) => PlatformSource::Fixed(args.platform.load(args.seed)?),
        None => PlatformSource::Generated(args.platform.generator(0)),
    };
    let config = SweepConfig {
        platform,
        strategy: args.strategy,
        xs: args.xs.0.clone(),
        runs: args.runs,
        seed: args.seed,
    };
    let curve = manipulation_sweep(&config)?;
    let (out, format) = args.output.resolve("sweep", Format::Csv);
    let mut w = create(&out)?;
    match format {
        Format::Csv => curve.write_csv(&mut w)?,
        Format::Json => serde_json::to_writer_pretty(&mut w, &curve)?,
    }
    w.flush()?;
    let threshold = sibling(&out, ".threshold.json");
    write_json(&threshold, &curve.threshold_report())?;
    let platform_json = match &config.platform {
        PlatformSource::Fixed(state) => platform_config_json(&args.platform, state),
        PlatformSource::Generated(g) => json!({ "generator_per_run": g }),
    };
    write_manifest(
        &out,
        "sweep",
        json!({
            "strategy": args.strategy, "xs": args.xs.0, "runs": args.runs, "seed": args.seed,
            "platform": platform_json, "format": format,
        }),
        &[&out, &threshold],
    )?;
    println!("x\tparity_A\tparity_B");
    for ((x, a), b) in curve.xs.iter().zip(&curve.curve_a).zip(&curve.curve_b) {
        println!("{x}\t{:.4}\t{:.4}", a.median, b.median);
    }
    match curve.x_star {
        Some(x) => println!("API parity first exceeds 0.8 at x = {x}"),
        None => println!("API parity never exceeds 0.8 on this grid"),
    }
    Ok(())
}

fn cmd_pareto(args: ParetoArgs) -> Result<()> {
    let state = args.platform.load(args.seed)?;
    let strategy = args.strategy.resolve(derive_seed(args.seed, Stream::Strategy, 0))?;
    let proxy = args.proxy.build(state.input_space_size())?;
    let config = ParetoConfig {
        api: Arc::new(ManipulatedApi::new(state.clone(), strategy)?),
        proxy,
        t: args.t,
        betas: args.betas.0.clone(),
        runs: args.runs,
        seed: args.seed,
    };
    let sweep = pareto_sweep(&config)?;
    let (out, format) = args.output.resolve("pareto", Format::Csv);
    let mut w = create(&out)?;
    match format {
        Format::Csv => sweep.write_csv(&mut w)?,
        Format::Json => serde_json::to_writer_pretty(&mut w, &sweep)?,
    }
    w.flush()?;
    write_manifest(
        &out,
        "pareto",
        json!({
            "t": args.t, "strategy": strategy, "betas": args.betas.0, "runs": args.runs, "seed": args.seed,
            "proxy": args.proxy.proxy, "zeta": config.proxy.zeta(),
            "platform": platform_config_json(&args.platform, &state), "format": format,
        }),
        &[&out],
    )?;
    println!("beta\tepsilon\tp_detect\tfrontier");
    for p in &sweep.points {
        println!("{}\t{:.4}\t{:.3}\t{}", p.beta, p.epsilon_mean, p.p_detect, if p.on_frontier { "*" } else { "" });
    }
    Ok(())
}

fn cmd_audit(args: AuditArgs) -> Result<()> {
    let plan = BudgetPlan::new(args.t, args.beta, args.seed);
    let (result, platform_json, strategy_json, proxy): (AuditResult, _, _, ProxySpec) = match &args.remote {
        Some(addr) => {
            let mut access = RemoteAccess::connect(addr.as_str()).with_context(|| format!("connecting to {addr}"))?;
            let catalog = access.catalog()?;
            let proxy = args.proxy.build(catalog.n_creators() + catalog.n_videos())?;
            let result = if args.full_scrape {
                full_scrape_audit(&mut access, &proxy, args.t)?
            } else {
                run_budgeted_audit(&mut access, &plan, &proxy)?
            };
            (result, json!({ "remote": addr }), json!("server-side"), proxy)
        }
        None => {
            let state = args.platform.load(args.seed)?;
            let strategy = args.strategy.resolve(derive_seed(args.seed, Stream::Strategy, 0))?;
            let proxy = args.proxy.build(state.input_space_size())?;
            let api = Arc::new(ManipulatedApi::new(state.clone(), strategy)?);
            let mut access = LocalAccess::new(api);
            let result = if args.full_scrape {
                full_scrape_audit(&mut access, &proxy, args.t)?
            } else {
                run_budgeted_audit(&mut access, &plan, &proxy)?
            };
            (result, platform_config_json(&args.platform, &state), json!(strategy), proxy)
        }
    };

    let (out, format) = args.output.resolve("audit", Format::Json);
    let mut w = create(&out)?;
    match format {
        Format::Json => serde_json::to_writer_pretty(&mut w, &result)?,
        Format::Csv => {
            let mut c = csv::Writer::from_writer(&mut w);
            c.write_record([
                "parity", "decision", "t_a", "epsilon", "detected", "arm1_pulls", "arm2_pulls", "rechecks", "spent_a",
                "spent_b",
            ])?;
            c.write_record([
                result.parity.map_or(String::new(), |p| p.value.to_string()),
                result.parity.map_or(String::new(), |p| p.decision.to_string()),
                result.t_a().to_string(),
                result.accuracy.epsilon.to_string(),
                result.detected().to_string(),
                result.arm1_pulls.to_string(),
                result.arm2_pulls.to_string(),
                result.rechecks.to_string(),
                result.ledger.spent_a.to_string(),
                result.ledger.spent_b.to_string(),
            ])?;
            c.flush()?;
        }
    }
    w.flush()?;
    let flags = sibling(&out, ".flags.csv");
    let mut fw = create(&flags)?;
    result.consistency.write_flags_csv(&mut fw)?;
    fw.flush()?;
    write_manifest(
        &out,
        "audit",
        json!({
            "plan": plan, "full_scrape": args.full_scrape, "strategy": strategy_json,
            "proxy": args.proxy.proxy, "zeta": proxy.zeta(), "platform": platform_json, "format": format,
        }),
        &[&out, &flags],
    )?;
    match result.parity {
        Some(p) => println!(
            "parity {:.4} ± {:.4} ({}), t_A = {}",
            p.value,
            result.accuracy.epsilon,
            if p.decision { "holds" } else { "violated" },
            result.t_a()
        ),
        None => println!("no comparable creator pairs, t_A = {}", result.t_a()),
    }
    println!(
        "{} inconsistent declarations among {} checked creators",
        result.consistency.flags.len(),
        result.consistency.checked_creators.len()
    );
    Ok(())
}

fn cmd_census(args: CensusArgs) -> Result<()> {
    let options = IngestOptions {
        schema: args.schema,
        ..IngestOptions::default()
    };
    let (train, test, source): (TabularDataset, TabularDataset, serde_json::Value) =
        match (&args.data_dir, &args.train, &args.test, args.synthetic) {
            (Some(dir), ..) => {
                let (train, rt) = ingest_census_csv(&dir.join("adult.data"), &options)?;
                let (test, rs) = ingest_census_csv(&dir.join("adult.test"), &options)?;
                eprintln!("ingested {} + {} rows, dropped {} + {}", rt.kept_rows, rs.kept_rows, rt.dropped_rows, rs.dropped_rows);
                (train, test, json!({ "data_dir": dir.display().to_string(), "schema": args.schema }))
            }
            (None, Some(tr), Some(te), _) => {
                let (train, rt) = ingest_census_csv(tr, &options)?;
                let (test, rs) = ingest_census_csv(te, &options)?;
                eprintln!("ingested {} + {} rows, dropped {} + {}", rt.kept_rows, rs.kept_rows, rt.dropped_rows, rs.dropped_rows);
                (
                    train,
                    test,
                    json!({ "train": tr.display().to_string(), "test": te.display().to_string(), "schema": args.schema }),
                )
            }
            (None, None, None, Some(n)) => {
                let data = synthetic_census(n, args.bias, derive_seed(args.seed, Stream::Platform, 0));
                let cut = n * 2 / 3;
                let mut rows = data.rows;
                let test = rows.split_off(cut);
                (
                    TabularDataset { rows },
                    TabularDataset { rows: test },
                    json!({ "synthetic_rows": n, "bias": args.bias }),
                )
            }
            _ => bail!("give --data-dir, --train/--test, or --synthetic"),
        };

    let params = TrainParams {
        learning_rate: args.learning_rate,
        epochs: args.epochs,
        ..TrainParams::default()
    };
    let model = train_logistic(&train, &params, derive_seed(args.seed, Stream::Training, 0))?;
    let mut test = test;
    let proxy = match &args.names {
        Some(path) => {
            let table = NameTable::from_path(path)?;
            table.assign_names(&mut test, derive_seed(args.seed, Stream::Proxy, 1))?;
            AttributeProxy::Table { names: table }
        }
        None => AttributeProxy::noisy(args.proxy_error, derive_seed(args.seed, Stream::Proxy, 0))?,
    };
    let report = run_census_audit(&model, &test, &proxy, args.seed)?;

    let (out, format) = args.output.resolve("census", Format::Csv);
    let mut w = create(&out)?;
    match format {
        Format::Csv => report.write_csv(&mut w)?,
        Format::Json => serde_json::to_writer_pretty(&mut w, &report)?,
    }
    w.flush()?;
    write_manifest(
        &out,
        "census",
        json!({
            "data": source, "train_params": params, "seed": args.seed,
            "proxy": match &args.names {
                Some(p) => json!({ "names": p.display().to_string() }),
                None => json!({ "noisy_channel_error": args.proxy_error }),
            },
            "format": format,
        }),
        &[&out],
    )?;
    println!("training accuracy {:.4}", model.training_accuracy);
    println!("DI with recorded sex {:.4}{}", report.truth.di, if report.truth.violation { " (violation)" } else { "" });
    println!(
        "DI with proxied sex  {:.4}{} (proxy agreement {:.1}%, relative error {:.1}%)",
        report.proxied.di,
        if report.proxied.violation { " (violation)" } else { "" },
        100.0 * report.proxy_agreement,
        100.0 * report.relative_error
    );
    Ok(())
}

fn cmd_serve(args: ServeArgs) -> Result<()> {
    let state = args.platform.load(args.seed)?;
    let strategy = args.strategy.resolve(derive_seed(args.seed, Stream::Strategy, 0))?;
    let api = Arc::new(ManipulatedApi::new(state, strategy)?);
    let config = ServerConfig {
        budget_limit: args.budget_limit,
        rate_limit: args.rate_limit,
    };
    let handle = serve(api, args.bind.as_str(), config).with_context(|| format!("binding {}", args.bind))?;
    println!("listening on {} (strategy {strategy})", handle.addr());
    io::stdout().flush()?;
    handle.wait();
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code().clamp(0, 255) as u8);
        }
    };
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Pareto(a) => cmd_pareto(a),
        Command::Audit(a) => cmd_audit(a),
        Command::Census(a) => cmd_census(a),
        Command::Serve(a) => cmd_serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
