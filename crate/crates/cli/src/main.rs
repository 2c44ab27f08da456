use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use asymembed::classifier::{check_membership, derive_params, ClassParams, ClassReport, Overrides};
use asymembed::decomposition::{
    build_decomposition, chart_dense_part, verify_decomposition, Decomposition,
};
use asymembed::embedding::{assemble_asymptotic_kernel, recheck_certificate, AssembleOptions};
use asymembed::experiments::{
    classify_batch, pipeline_run, run_montecarlo, ExperimentConfig, ExperimentMode, Statistic,
};
use asymembed::kernel::{is_cnd, is_pt, schoenberg_transform, Kernel};
use asymembed::random_regular::{sample_indexed, SamplerConfig, DEFAULT_MAX_REJECTIONS};
use asymembed::report::{cell, fmt_g12, to_json_string, Table};
use asymembed::{parse_graph, Error, Graph};

#[derive(Parser, Debug)]
#[command(
    name = "asymembed",
    version,
    about = "Random regular graph experiments and certified embedding kernels"
)]
struct Cli {
    /// Master seed; per-sample streams are derived from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file (default: standard output).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a uniform simple d-regular graph and print its edge list.
    Sample {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        d: usize,
        /// Sample index within the seed's stream family.
        #[arg(long, default_value_t = 0)]
        index: u64,
        #[arg(long, default_value_t = DEFAULT_MAX_REJECTIONS)]
        max_rejections: u64,
    },
    /// Check the four class conditions on one graph.
    Classify {
        #[command(flatten)]
        source: GraphSource,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Delete one edge per short cycle and verify the decomposition claims.
    Decompose {
        #[command(flatten)]
        source: GraphSource,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Test a kernel table for conditional negativity, optionally after a
    /// Schoenberg transform.
    Kernel {
        /// CSV kernel table: header `label,<v0>,<v1>,...`, then one row per vertex.
        #[arg(long)]
        input: PathBuf,
        /// Check `exp(-t K)` for positive type instead.
        #[arg(long)]
        schoenberg: Option<f64>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Certify one graph, or classify and certify a sampled batch.
    Pipeline {
        /// Certify this graph; without it a batch is sampled.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[command(flatten)]
        experiment: ExperimentArgs,
        /// CSV table written for batches.
        #[arg(long, value_enum, default_value_t = PipelineTable::Certificates)]
        table: PipelineTable,
    },
    /// Batch Monte Carlo statistics or batch classification.
    Montecarlo {
        #[command(flatten)]
        experiment: ExperimentArgs,
        /// CSV table to write.
        #[arg(long, value_enum, default_value_t = McTable::Rows)]
        table: McTable,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PipelineTable {
    Certificates,
    Envelopes,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum McTable {
    Rows,
    Samples,
    Trend,
}

#[derive(Args, Debug)]
struct GraphSource {
    /// Edge-list file (`-` for standard input).
    #[arg(long, conflicts_with = "n")]
    graph: Option<PathBuf>,
    /// Sample a graph of this order instead.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 3)]
    d: usize,
    #[arg(long, default_value_t = 0)]
    index: u64,
}

#[derive(Args, Debug, Clone, Default)]
struct ParamArgs {
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    m: Option<f64>,
    #[command(flatten)]
    overrides: OverrideArgs,
}

/// Scaled-parameter overrides.
#[derive(Args, Debug, Clone, Default)]
struct OverrideArgs {
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    size_threshold: Option<f64>,
    #[arg(long)]
    cycle_bound: Option<f64>,
    /// Kernel scale R.
    #[arg(long)]
    r: Option<f64>,
}

impl OverrideArgs {
    fn apply(&self, o: &mut Overrides) {
        o.t = self.t.or(o.t);
        o.delta = self.delta.or(o.delta);
        o.size_threshold = self.size_threshold.or(o.size_threshold);
        o.cycle_bound = self.cycle_bound.or(o.cycle_bound);
        o.r = self.r.or(o.r);
    }
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Graph orders (repeat or comma-separate for a grid).
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[command(flatten)]
    params: ParamArgs,
    /// Cycle lengths counted by the cycle experiment.
    #[arg(long, value_delimiter = ',')]
    cycle_lengths: Vec<usize>,
    /// Statistics computed by the cycle experiment.
    #[arg(long, value_delimiter = ',', value_enum)]
    statistics: Vec<StatArg>,
    #[arg(long)]
    sample_budget: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    z: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Cycles,
    Classify,
    Pipeline,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StatArg {
    Cycles,
    Diameter,
    SpectralGap,
    Expansion,
    Sparsity,
}

/// Configuration or runtime failure (exit code 2).
#[derive(Debug)]
struct Failure(String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure(e.to_string())
    }
}

type Outcome = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let start = Instant::now();
    let result = run(&cli);
    eprintln!("runtime: {:.3} s", start.elapsed().as_secs_f64());
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::Sample {
            n,
            d,
            index,
            max_rejections,
        } => {
            let cfg = SamplerConfig {
                n: *n,
                d: *d,
                seed,
                max_rejections: *max_rejections,
            };
            let s = sample_indexed(&cfg, *index)?;
            eprintln!(
                "attempts: {} ({} with loops, {} with parallel edges)",
                s.attempts, s.loops, s.multi
            );
            write_out(cli.out.as_deref(), &s.graph.to_edge_list())?;
            Ok(true)
        }
        Command::Classify { source, params } => {
            let g = load_graph(source, seed)?;
            let p = class_params(cli, params, &g)?;
            let report = check_membership(&g, &p)?;
            let text = match cli.format {
                Format::Json => to_json_string(&report)?,
                Format::Csv => class_csv(&report),
            };
            write_out(cli.out.as_deref(), &text)?;
            Ok(report.member == asymembed::classifier::Verdict::Pass)
        }
        Command::Decompose { source, params } => {
            let g = load_graph(source, seed)?;
            let p = class_params(cli, params, &g)?;
            let dec = build_decomposition(&g, &p)?;
            let report = verify_decomposition(&dec);
            let chart = chart_dense_part(&dec, p.delta)?;
            let text = match cli.format {
                Format::Json => to_json_string(&serde_json::json!({
                    "decomposition": summary(&dec),
                    "report": report,
                    "chart": chart,
                }))?,
                Format::Csv => {
                    let mut t = Table::new(["claim", "pass", "detail"]);
                    for (name, c) in [
                        ("lebesgue", &report.lebesgue),
                        ("girth", &report.girth),
                        ("quasi_isometry", &report.quasi_isometry),
                        ("separation", &report.separation),
                        ("pruned_connected", &report.pruned_connected),
                    ] {
                        t.push(vec![name.into(), c.pass.to_string(), c.detail.clone()]);
                    }
                    t.to_csv()
                }
            };
            write_out(cli.out.as_deref(), &text)?;
            Ok(report.all_pass)
        }
        Command::Kernel {
            input,
            schoenberg,
            tol,
        } => {
            let k = Kernel::from_csv(&read_input(input)?)?;
            let (check, transformed) = match schoenberg {
                None => (is_cnd(&k, *tol)?, None),
                Some(t) => {
                    let pk = schoenberg_transform(&k, *t)?;
                    (is_pt(&pk, *tol)?, Some(pk))
                }
            };
            let text = match (cli.format, &transformed) {
                (Format::Csv, Some(pk)) => pk.to_csv(),
                (Format::Csv, None) => {
                    let mut t = Table::new(["holds", "min_eigenvalue", "threshold", "form_value"]);
                    t.push(vec![
                        check.holds.to_string(),
                        fmt_g12(check.min_eigenvalue),
                        fmt_g12(check.threshold),
                        cell(check.form_value),
                    ]);
                    t.to_csv()
                }
                (Format::Json, _) => to_json_string(&serde_json::json!({
                    "property": if schoenberg.is_some() { "positive_type" } else { "conditionally_negative" },
                    "t": schoenberg,
                    "size": k.m(),
                    "check": check,
                }))?,
            };
            write_out(cli.out.as_deref(), &text)?;
            Ok(check.holds)
        }
        Command::Pipeline {
            graph: Some(path),
            experiment,
            ..
        } => {
            let g = read_graph(path)?;
            let mut cfg =
                experiment_config(cli, experiment, ExperimentMode::Pipeline, Some(g.n()))?;
            cfg.d = g.regular_degree().unwrap_or(cfg.d);
            let p = cfg.params(g.n())?;
            let opts = AssembleOptions {
                sample_budget: cfg.sample_budget,
                seed: cfg.seed,
                tol: cfg.tol,
                r: None,
            };
            let cert = assemble_asymptotic_kernel(&g, &p, &opts)?;
            let recheck = recheck_certificate(&cert)?;
            let text = match cli.format {
                Format::Json => {
                    to_json_string(&serde_json::json!({ "certificate": cert, "recheck": recheck }))?
                }
                Format::Csv => match &cert.kernel {
                    Some(k) => k.to_csv(),
                    None => "label\n".into(),
                },
            };
            write_out(out_path(cli, &cfg).as_deref(), &text)?;
            Ok(cert.valid && recheck.valid)
        }
        Command::Pipeline {
            graph: None,
            experiment,
            table,
        } => {
            let cfg = experiment_config(cli, experiment, ExperimentMode::Pipeline, None)?;
            let rep = pipeline_run(&cfg)?;
            let text = match (cli.format, table) {
                (Format::Json, _) => rep.to_json()?,
                (Format::Csv, PipelineTable::Certificates) => rep.certificates_csv(),
                (Format::Csv, PipelineTable::Envelopes) => rep.envelopes_csv(),
            };
            write_out(out_path(cli, &cfg).as_deref(), &text)?;
            Ok(rep.all_pass)
        }
        Command::Montecarlo { experiment, table } => {
            let cfg = experiment_config(cli, experiment, ExperimentMode::Cycles, None)?;
            let path = out_path(cli, &cfg);
            if cfg.mode == ExperimentMode::Pipeline {
                let rep = pipeline_run(&cfg)?;
                let text = match cli.format {
                    Format::Json => rep.to_json()?,
                    Format::Csv => rep.certificates_csv(),
                };
                write_out(path.as_deref(), &text)?;
                return Ok(rep.all_pass);
            }
            let rep = match cfg.mode {
                ExperimentMode::Classify => classify_batch(&cfg)?.0,
                _ => run_montecarlo(&cfg)?,
            };
            let text = match (cli.format, table) {
                (Format::Json, _) => rep.to_json()?,
                (Format::Csv, McTable::Rows) => rep.rows_csv(),
                (Format::Csv, McTable::Samples) => rep.samples_csv(),
                (Format::Csv, McTable::Trend) => trend_csv(&rep),
            };
            write_out(path.as_deref(), &text)?;
            Ok(rep.all_pass)
        }
    }
}

fn summary(dec: &Decomposition) -> serde_json::Value {
    serde_json::json!({
        "n": dec.graph.n(),
        "t": dec.t,
        "short_cycles": dec.cycles.cycles().len(),
        "removed": dec.removed,
        "v1": dec.v1,
        "v2": dec.v2,
        "lebesgue": dec.lebesgue,
        "girth_pruned": dec.girth_pruned,
        "separated": dec.separated,
        "violations": dec.violations,
    })
}

fn class_csv(r: &ClassReport) -> String {
    let mut t = Table::new(["condition", "verdict", "value", "bound"]);
    t.push(vec![
        "sparsity".into(),
        r.sparsity.verdict.as_str().into(),
        String::new(),
        fmt_g12(r.sparsity.delta),
    ]);
    t.push(vec![
        "diameter".into(),
        r.diameter.verdict.as_str().into(),
        r.diameter
            .diameter
            .value()
            .map(|d| d.to_string())
            .unwrap_or_else(|| "inf".into()),
        fmt_g12(r.diameter.bound),
    ]);
    t.push(vec![
        "cycles".into(),
        r.cycles.verdict.as_str().into(),
        r.cycles.count.to_string(),
        fmt_g12(r.cycles.bound),
    ]);
    t.push(vec![
        "expansion".into(),
        r.expansion.verdict.as_str().into(),
        fmt_g12(r.expansion.value),
        fmt_g12(r.expansion.bound),
    ]);
    t.push(vec![
        "member".into(),
        r.member.as_str().into(),
        String::new(),
        String::new(),
    ]);
    t.to_csv()
}

fn trend_csv(rep: &asymembed::experiments::MCReport) -> String {
    let mut t = Table::new([
        "condition",
        "n_from",
        "n_to",
        "rate_from",
        "rate_to",
        "z",
        "critical",
        "pass",
    ]);
    for r in &rep.trend {
        t.push(vec![
            r.condition.clone(),
            r.n_from.to_string(),
            r.n_to.to_string(),
            fmt_g12(r.rate_from),
            fmt_g12(r.rate_to),
            fmt_g12(r.z),
            fmt_g12(r.critical),
            r.pass.to_string(),
        ]);
    }
    t.to_csv()
}

fn read_input(path: &Path) -> Result<String, Failure> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        return Ok(s);
    }
    fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn read_graph(path: &Path) -> Result<Graph, Failure> {
    let parsed = parse_graph(&read_input(path)?, false)?;
    for w in &parsed.warnings {
        eprintln!("warning: {w}");
    }
    Ok(parsed.graph)
}

fn load_graph(src: &GraphSource, seed: u64) -> Result<Graph, Failure> {
    match (&src.graph, src.n) {
        (Some(path), _) => read_graph(path),
        (None, Some(n)) => {
            Ok(sample_indexed(&SamplerConfig::new(n, src.d, seed), src.index)?.graph)
        }
        (None, None) => Err(Failure("either --graph or --n is required".into())),
    }
}

fn load_config(cli: &Cli) -> Result<Option<ExperimentConfig>, Failure> {
    let Some(path) = &cli.config else {
        return Ok(None);
    };
    let text = read_input(path)?;
    toml::from_str(&text)
        .map(Some)
        .map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn class_params(cli: &Cli, args: &ParamArgs, g: &Graph) -> Result<ClassParams, Failure> {
    let base = load_config(cli)?;
    let d = g
        .regular_degree()
        .or(base.as_ref().map(|c| c.d))
        .unwrap_or(3);
    let mut overrides = base
        .as_ref()
        .map(|c| c.overrides.clone())
        .unwrap_or_default();
    args.overrides.apply(&mut overrides);
    let epsilon = args
        .epsilon
        .or(base.as_ref().map(|c| c.epsilon))
        .unwrap_or(0.1);
    let m = args.m.or(base.as_ref().map(|c| c.m)).unwrap_or(10.0);
    Ok(derive_params(d, epsilon, m, g.n() as u64, overrides)?)
}

fn experiment_config(
    cli: &Cli,
    args: &ExperimentArgs,
    default_mode: ExperimentMode,
    order: Option<usize>,
) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match load_config(cli)? {
        Some(c) => c,
        None => {
            let n = if args.n.is_empty() {
                order.into_iter().collect()
            } else {
                args.n.clone()
            };
            if n.is_empty() {
                return Err(Failure("no graph order given (use --n or --config)".into()));
            }
            ExperimentConfig::new(default_mode, n, 3, 1, 0)
        }
    };
    if let Some(m) = args.mode {
        cfg.mode = match m {
            ModeArg::Cycles => ExperimentMode::Cycles,
            ModeArg::Classify => ExperimentMode::Classify,
            ModeArg::Pipeline => ExperimentMode::Pipeline,
        };
    }
    if !args.n.is_empty() {
        cfg.n = args.n.clone();
    }
    if let Some(n) = order {
        cfg.n = vec![n];
    }
    cfg.d = args.d.unwrap_or(cfg.d);
    cfg.samples = args.samples.unwrap_or(cfg.samples);
    cfg.seed = cli.seed.unwrap_or(cfg.seed);
    cfg.epsilon = args.params.epsilon.unwrap_or(cfg.epsilon);
    cfg.m = args.params.m.unwrap_or(cfg.m);
    args.params.overrides.apply(&mut cfg.overrides);
    if !args.cycle_lengths.is_empty() {
        cfg.cycle_lengths = args.cycle_lengths.clone();
    }
    if !args.statistics.is_empty() {
        cfg.statistics = args
            .statistics
            .iter()
            .map(|s| match s {
                StatArg::Cycles => Statistic::Cycles,
                StatArg::Diameter => Statistic::Diameter,
                StatArg::SpectralGap => Statistic::SpectralGap,
                StatArg::Expansion => Statistic::Expansion,
                StatArg::Sparsity => Statistic::Sparsity,
            })
            .collect();
    }
    cfg.sample_budget = args.sample_budget.unwrap_or(cfg.sample_budget);
    cfg.tol = args.tol.unwrap_or(cfg.tol);
    cfg.z = args.z.unwrap_or(cfg.z);
    if order.is_none() {
        cfg.validate()?;
    }
    Ok(cfg)
}

fn out_path(cli: &Cli, cfg: &ExperimentConfig) -> Option<PathBuf> {
    cli.out
        .clone()
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure(format!("{}: {e}", p.display()))),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}
