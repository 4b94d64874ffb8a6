//! Command-line interface.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fsr_core::{
    conditional_context_sampling, coverage_radius, explain, optimal_covering_radius, prune,
    CoverageReport, IndexSet, PruneConfig, RelevanceMode, SaliencyMode, TokenMatrix,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bench::{
    aggregate_quality, run_quality_sweep, run_throughput_grid, scaling_ratios, write_quality_csv,
    BenchError, BenchSummary, QualityConfig,
};
use crate::document::{DocumentError, PruneResultDocument};
use crate::tensor::{read_tensor, write_tensor, FormatError, Tensor};

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<DocumentError> for CliError {
    fn from(e: DocumentError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        CliError::Data(e.to_string())
    }
}

fn engine_error(e: fsr_core::Error) -> CliError {
    match e {
        // config violations come from flag values
        fsr_core::Error::InvalidConfig(_) => CliError::Usage(e.to_string()),
        fsr_core::Error::BudgetTooLarge { .. } | fsr_core::Error::OracleTooLarge { .. } => {
            CliError::Usage(e.to_string())
        }
        other => CliError::Data(other.to_string()),
    }
}

#[derive(Parser)]
#[command(
    name = "fsr",
    version,
    about = "Budgeted token pruning: focus on salient evidence, scan for \
             complementary context, refine anchors by weighted merging"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Prune a token matrix to a fixed budget and write a result document.
    Prune(PruneArgs),
    /// Check the greedy coverage ratio against the exhaustive optimum on
    /// random small instances.
    Oracle(OracleArgs),
    /// Run the synthetic quality sweep and throughput grid.
    Bench(BenchArgs),
    /// Print the report for a saved result document.
    Explain(ExplainArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SaliencyModeArg {
    /// Mean over heads of [CLS]-to-token attention (kind-1 tensors).
    #[value(name = "cls-attention", alias = "cls")]
    ClsAttention,
    /// Column mean of a head-aggregated self-attention map (kind-2 tensors).
    #[value(name = "self-attention-aggregate", alias = "self-agg")]
    SelfAttentionAggregate,
}

impl From<SaliencyModeArg> for SaliencyMode {
    fn from(a: SaliencyModeArg) -> Self {
        match a {
            SaliencyModeArg::ClsAttention => SaliencyMode::ClsAttention,
            SaliencyModeArg::SelfAttentionAggregate => SaliencyMode::SelfAttentionAggregate,
        }
    }
}

#[derive(Args)]
struct PruneArgs {
    /// Token matrix file (kind 0).
    #[arg(long)]
    tokens: PathBuf,
    /// Attention file (kind 1 or 2).
    #[arg(long)]
    attn: PathBuf,
    /// Query embedding file (kind 3).
    #[arg(long, conflicts_with = "no_query")]
    query: Option<PathBuf>,
    /// Disable the relevance pathway entirely.
    #[arg(long)]
    no_query: bool,
    /// Number of tokens to keep.
    #[arg(long)]
    budget: usize,
    /// Exponent on the normalized relevance score.
    #[arg(long, default_value_t = 3.0)]
    alpha: f64,
    /// Exponent on the normalized saliency score.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Priority-mass fraction the focus set must cover.
    #[arg(long, default_value_t = 0.9)]
    rho: f64,
    /// Refine budget multiplier (M = floor(kappa * K_S)).
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    /// Saliency mode; inferred from the attention file kind when omitted.
    #[arg(long, value_enum)]
    saliency_mode: Option<SaliencyModeArg>,
    /// Skip coverage-radius computation in the stats.
    #[arg(long)]
    no_stats: bool,
    /// Output path for the JSON result document.
    #[arg(long)]
    out: PathBuf,
    /// Optional binary sidecar (kind 0) holding the kept vectors.
    #[arg(long)]
    vectors_out: Option<PathBuf>,
    /// Print the full per-stage report to stdout.
    #[arg(long)]
    report: bool,
}

#[derive(Args)]
struct OracleArgs {
    /// Number of tokens per instance.
    #[arg(long)]
    n: usize,
    /// Embedding dimension.
    #[arg(long)]
    d: usize,
    /// Total budget (focus size + scan picks); must be at least 2.
    #[arg(long)]
    budget: usize,
    #[arg(long, default_value_t = 200)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    /// Quality-sweep trials (scenes).
    #[arg(long, default_value_t = 100)]
    trials: u64,
    #[arg(long, default_value_t = 3)]
    clusters: usize,
    #[arg(long, default_value_t = 16)]
    tokens_per_cluster: usize,
    #[arg(long, default_value_t = 32)]
    dim: usize,
    #[arg(long, default_value_t = 0.34)]
    salient_fraction: f64,
    #[arg(long, default_value_t = 0.15)]
    noise_sigma: f64,
    /// Quality-sweep budget as a fraction of N.
    #[arg(long, default_value_t = 0.25)]
    budget_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Throughput grid: token counts.
    #[arg(long, value_delimiter = ',', default_value = "288,576,1152")]
    n_list: Vec<usize>,
    /// Throughput grid: embedding dimensions.
    #[arg(long, value_delimiter = ',', default_value = "64")]
    d_list: Vec<usize>,
    /// Throughput grid: budgets.
    #[arg(long, value_delimiter = ',', default_value = "64")]
    k_list: Vec<usize>,
    /// Timed repetitions per grid point (median reported).
    #[arg(long, default_value_t = 9)]
    repeats: u32,
    /// CSV output, one row per (trial, method).
    #[arg(long)]
    out_csv: PathBuf,
    /// Optional JSON summary (aggregates, throughput, scaling ratios).
    #[arg(long)]
    summary_json: Option<PathBuf>,
}

#[derive(Args)]
struct ExplainArgs {
    /// A result document written by `prune`.
    #[arg(long)]
    result: PathBuf,
}

pub fn run() -> i32 {
    run_from(std::env::args_os())
}

pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Prune(args) => cmd_prune(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Explain(args) => cmd_explain(args),
    };
    match outcome {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

fn cmd_prune(args: PruneArgs) -> Result<(), CliError> {
    if args.budget == 0 {
        return Err(CliError::Usage("--budget must be at least 1".into()));
    }
    if args.query.is_none() && !args.no_query {
        return Err(CliError::Usage(
            "either --query <file> or --no-query is required".into(),
        ));
    }

    let tokens = read_tensor(&args.tokens)?.into_token_matrix()?;
    let attn = read_tensor(&args.attn)?.into_attention()?;
    let query = match &args.query {
        Some(path) => Some(read_tensor(path)?.into_query()?),
        None => None,
    };

    let config = PruneConfig {
        budget_k: args.budget,
        alpha: args.alpha,
        beta: args.beta,
        rho: args.rho,
        kappa: args.kappa,
        saliency_mode: args.saliency_mode.map(Into::into).unwrap_or_else(|| attn.mode()),
        relevance_mode: if args.no_query { RelevanceMode::None } else { RelevanceMode::Query },
        compute_stats: !args.no_stats,
    };
    config.validate().map_err(engine_error)?;

    let result = prune(&tokens, &attn, query.as_ref(), &config).map_err(engine_error)?;

    let vectors_file = match &args.vectors_out {
        Some(path) => {
            write_tensor(path, &Tensor::from_token_matrix(&result.kept_vectors)?)?;
            Some(path.display().to_string())
        }
        None => None,
    };

    let document = PruneResultDocument::from_result(&result, &config, vectors_file);
    std::fs::write(&args.out, document.to_json_pretty())
        .map_err(|e| CliError::Data(format!("writing {}: {e}", args.out.display())))?;

    println!(
        "kept {} of {} tokens (K_F={}, K_S={}, M={}) -> {}",
        result.kept_indices.len(),
        tokens.rows(),
        result.stats.k_f,
        result.stats.k_s,
        result.stats.m,
        args.out.display()
    );
    if args.report {
        print!("{}", explain(&result));
    }
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> Result<(), CliError> {
    if args.n < 2 || args.d == 0 || args.trials == 0 {
        return Err(CliError::Usage("oracle needs n >= 2, d >= 1, trials >= 1".into()));
    }
    if args.budget < 2 || args.budget > args.n {
        return Err(CliError::Usage(
            "--budget must be in [2, n] so at least one scan pick happens".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut max_ratio: f64 = 0.0;
    let mut ratio_sum = 0.0;
    let mut ratio_count = 0u64;
    let mut violations_2x = 0u64;
    let mut violations_4x = 0u64;
    let mut exact_covers = 0u64;

    for _ in 0..args.trials {
        let data: Vec<f64> = (0..args.n * args.d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let tokens = TokenMatrix::new(args.n, args.d, data).map_err(engine_error)?;

        let focus_size = rng.random_range(1..args.budget);
        let k_s = args.budget - focus_size;
        let mut pool: Vec<usize> = (0..args.n).collect();
        for i in (1..pool.len()).rev() {
            pool.swap(i, rng.random_range(0..=i));
        }
        pool.truncate(focus_size);
        let focus = IndexSet::new(pool, args.n).map_err(engine_error)?;

        let scan = conditional_context_sampling(&tokens, &focus, k_s).map_err(engine_error)?;
        let kept = focus.union_disjoint(&scan.scan_set).map_err(engine_error)?;
        let report = CoverageReport {
            radius: coverage_radius(&tokens, &kept).map_err(engine_error)?,
            optimal_radius: Some(optimal_covering_radius(&tokens, &focus, k_s).map_err(engine_error)?),
        };
        let optimal = report.optimal_radius.unwrap();

        if optimal > 0.0 {
            let ratio = report.radius / optimal;
            max_ratio = max_ratio.max(ratio);
            ratio_sum += ratio;
            ratio_count += 1;
            if report.bound_holds() == Some(false) {
                violations_2x += 1;
            }
            if report.radius > 4.0 * optimal + 1e-12 {
                violations_4x += 1;
            }
        } else if report.radius <= 1e-12 {
            exact_covers += 1;
        } else {
            violations_2x += 1;
            violations_4x += 1;
        }
    }

    println!(
        "oracle: n={} d={} budget={} trials={} seed={}",
        args.n, args.d, args.budget, args.trials, args.seed
    );
    println!("max ratio (coverage / R_opt): {max_ratio:.6}");
    if ratio_count > 0 {
        println!("mean ratio: {:.6}", ratio_sum / ratio_count as f64);
    }
    if exact_covers > 0 {
        println!("exact covers (R_opt = 0): {exact_covers}");
    }
    println!("violations of the 2x bound: {violations_2x} of {}", args.trials);
    println!("violations of the provable 4x bound: {violations_4x} of {}", args.trials);
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    if args.trials == 0 || args.repeats == 0 {
        return Err(CliError::Usage("bench needs trials >= 1 and repeats >= 1".into()));
    }
    if !(args.budget_fraction > 0.0 && args.budget_fraction <= 1.0) {
        return Err(CliError::Usage("--budget-fraction must be in (0, 1]".into()));
    }

    let config = QualityConfig {
        trials: args.trials,
        clusters: args.clusters,
        tokens_per_cluster: args.tokens_per_cluster,
        dim: args.dim,
        salient_fraction: args.salient_fraction,
        noise_sigma: args.noise_sigma,
        budget_fraction: args.budget_fraction,
        seed: args.seed,
    };
    let rows = run_quality_sweep(&config).map_err(|e| match e {
        BenchError::Engine(err) => engine_error(err),
        other => other.into(),
    })?;
    write_quality_csv(&args.out_csv, &rows)?;

    let quality = aggregate_quality(&rows);
    println!("quality over {} scenes (K = {:.0}% of N):", args.trials, args.budget_fraction * 100.0);
    println!("  {:<16} {:>10} {:>10} {:>10} {:>10}", "method", "coverage", "mass", "recall", "micros");
    for a in &quality {
        println!(
            "  {:<16} {:>10.4} {:>10.4} {:>10.4} {:>10.1}",
            a.method,
            a.mean_coverage_radius,
            a.mean_retained_priority_mass,
            a.mean_cluster_recall,
            a.mean_micros
        );
    }

    let throughput = run_throughput_grid(&args.n_list, &args.d_list, &args.k_list, args.repeats, args.seed)
        .map_err(|e| match e {
            BenchError::Engine(err) => engine_error(err),
            other => other.into(),
        })?;
    let scaling = scaling_ratios(&throughput);
    println!("throughput (median of {} repeats):", args.repeats);
    for p in &throughput {
        println!("  n={:<6} d={:<4} k={:<4} {:>8} us", p.n, p.d, p.k, p.median_micros);
    }
    for s in &scaling {
        println!(
            "  scaling n {} -> {} at d={}, k={}: x{:.2}",
            s.n_from, s.n_to, s.d, s.k, s.ratio
        );
    }

    if let Some(path) = &args.summary_json {
        let summary = BenchSummary { quality, throughput, scaling };
        let mut json = serde_json::to_string_pretty(&summary)
            .map_err(|e| CliError::Data(e.to_string()))?;
        json.push('\n');
        std::fs::write(path, json)
            .map_err(|e| CliError::Data(format!("writing {}: {e}", path.display())))?;
    }
    println!("csv rows: {} -> {}", rows.len(), args.out_csv.display());
    Ok(())
}

fn cmd_explain(args: ExplainArgs) -> Result<(), CliError> {
    let document = PruneResultDocument::load(&args.result)?;
    print!("{}", document.render());
    Ok(())
}
