//! Command-line surface: exact LCI computations, limit analysis, the
//! correction-functional oracle, limit-law sampling, and convergence
//! experiments.

use std::fs;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use lci_core::analysis::{blocks_analysis, classify_case, emax_grid_oracle};
use lci_core::exact::{lc_blocks_length, lci_length, lcs_length, BlockOrder};
use lci_core::harness::{converge, write_samples_csv};
use lci_core::mfunc::{m_closed, m_lp_oracle, Perturbation};
use lci_core::model::{sample_word, Instance, RngConfig, Word};
use lci_core::sampler::{sample_limit, sample_limit_blocks, LimitParams};

#[derive(Parser)]
#[command(name = "lci", about = "Longest common weakly-increasing subsequences of random words", version)]
struct Cli {
    /// RNG seed shared by all randomized subcommands.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// RNG stream id (use distinct streams for parallel campaigns).
    #[arg(long, global = true, default_value_t = 0)]
    stream: u64,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Limit analysis of an instance: e_max, case, constants, active set.
    Analyze(AnalyzeArgs),
    /// Exact LCI of two words (or of a freshly sampled random pair).
    Lci(LciArgs),
    /// Correction functional: closed form, optionally the LP oracle.
    Mfunc(MfuncArgs),
    /// Monte Carlo samples of the limiting distribution.
    SampleLimit(SampleLimitArgs),
    /// Convergence table: empirical Z_n against the sampled limit.
    Converge(ConvergeArgs),
    /// Block-order analysis and block-aligned LCS of words.
    Blocks(BlocksArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Instance JSON file: {"pX": [...], "pY": [...]}; fraction strings
    /// such as "3/8" select exact arithmetic.
    #[arg(long)]
    instance: PathBuf,
    /// Analyze the block order alpha (comma-separated letters).
    #[arg(long)]
    blocks: Option<String>,
    /// Cross-check e_max against the brute-force grid at this resolution.
    #[arg(long)]
    oracle_r: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LciArgs {
    /// First word ("1122"; comma-separated for alphabets past 9).
    #[arg(long, conflicts_with = "random")]
    x: Option<String>,
    /// Second word.
    #[arg(long, conflicts_with = "random")]
    y: Option<String>,
    /// Sample the two words instead of reading them.
    #[arg(long)]
    random: bool,
    /// Random word length.
    #[arg(long, default_value_t = 20)]
    n: usize,
    /// Alphabet size (for words given inline, or uniform random letters).
    #[arg(long, default_value_t = 2)]
    m: usize,
    /// Letter distributions for --random (uniform over m otherwise).
    #[arg(long)]
    instance: Option<PathBuf>,
}

#[derive(Args)]
struct MfuncArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Perturbation JSON file: {"nuX": [...], "nuY": [...]}.
    #[arg(long)]
    nu: PathBuf,
    /// Also run the adaptive-box LP oracle and print the gap.
    #[arg(long)]
    oracle: bool,
}

#[derive(Args)]
struct SampleLimitArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Sample the block-order variant for this alpha.
    #[arg(long)]
    blocks: Option<String>,
    #[arg(long)]
    reps: usize,
    #[arg(long, default_value_t = 4096)]
    path_steps: usize,
    #[arg(long, default_value_t = 64)]
    grid_r: usize,
    /// Skip the per-replicate local refinement (pure grid maximization,
    /// biased low at coarse resolutions).
    #[arg(long)]
    no_refine: bool,
    /// Output CSV (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConvergeArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Word lengths, comma separated, e.g. 500,5000,20000.
    #[arg(long)]
    n_list: String,
    /// Replicates per word length.
    #[arg(long)]
    reps: usize,
    /// Replicates of the limit sampler.
    #[arg(long, default_value_t = 10_000)]
    limit_reps: usize,
    #[arg(long, default_value_t = 4096)]
    path_steps: usize,
    #[arg(long, default_value_t = 64)]
    grid_r: usize,
    /// Skip the per-replicate local refinement of the limit sampler.
    #[arg(long)]
    no_refine: bool,
    /// Fail (nonzero exit) unless the KS trend is nonincreasing.
    #[arg(long)]
    check: bool,
    /// Emit a plain column layout ready to pipe into gnuplot.
    #[arg(long)]
    gnuplot: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BlocksArgs {
    /// Block order, comma separated, e.g. 2,1,2.
    #[arg(long)]
    alpha: String,
    /// Instance for block-order limit analysis.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Words for the exact block-aligned length.
    #[arg(long)]
    x: Option<String>,
    #[arg(long)]
    y: Option<String>,
    #[arg(long, default_value_t = 2)]
    m: usize,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().ok();
    }
    let rng = RngConfig::new(cli.seed, cli.stream);
    match cli.command {
        Command::Analyze(args) => run_analyze(args),
        Command::Lci(args) => run_lci(args, &rng),
        Command::Mfunc(args) => run_mfunc(args),
        Command::SampleLimit(args) => run_sample_limit(args, &rng),
        Command::Converge(args) => run_converge(args, &rng),
        Command::Blocks(args) => run_blocks(args),
    }
}

fn load_instance(path: &PathBuf) -> Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Instance::from_json_str(&text)?)
}

fn parse_alpha(spec: &str, m: usize) -> Result<BlockOrder> {
    let slots: Result<Vec<u8>, _> = spec.split(',').map(|t| t.trim().parse::<u8>()).collect();
    Ok(BlockOrder::new(slots.context("parsing alpha")?, m)?)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            if text.ends_with('\n') {
                print!("{text}");
            } else {
                println!("{text}");
            }
            Ok(())
        }
    }
}

fn run_analyze(args: AnalyzeArgs) -> Result<()> {
    let inst = load_instance(&args.instance)?;
    let report = match &args.blocks {
        Some(spec) => blocks_analysis(&inst, &parse_alpha(spec, inst.m())?)?,
        None => classify_case(&inst)?,
    };
    let mut json = report.to_json();
    if let Some(r) = args.oracle_r {
        let (qx, qy) = inst.masses_f64();
        let oracle = emax_grid_oracle(&qx, &qy, r)?;
        let gap = report.e_max_f64() - oracle;
        json["oracle"] = serde_json::json!({ "r": r, "value": oracle, "gap": gap });
    }
    emit(&args.out, &serde_json::to_string_pretty(&json)?)
}

fn run_lci(args: LciArgs, rng: &RngConfig) -> Result<()> {
    let (x, y) = if args.random {
        let (px, py) = match &args.instance {
            Some(path) => {
                let inst = load_instance(path)?;
                (inst.px.clone(), inst.py.clone())
            }
            None => {
                let uniform = lci_core::model::Pmf::from_weights(&vec![1; args.m])?;
                (uniform.clone(), uniform)
            }
        };
        let x = sample_word(&px, args.n, &rng.substream(1));
        let y = sample_word(&py, args.n, &rng.substream(2));
        (x, y)
    } else {
        let xs = args.x.ok_or_else(|| anyhow!("--x and --y (or --random) required"))?;
        let ys = args.y.ok_or_else(|| anyhow!("--x and --y (or --random) required"))?;
        (Word::parse(&xs, args.m)?, Word::parse(&ys, args.m)?)
    };
    let lci = lci_length(&x, &y)?;
    let lcs = lcs_length(&x, &y);
    println!("x = {x}");
    println!("y = {y}");
    println!("lci = {lci}");
    println!("lcs = {lcs}");
    Ok(())
}

fn run_mfunc(args: MfuncArgs) -> Result<()> {
    let inst = load_instance(&args.instance)?;
    let an = classify_case(&inst)?.to_f64();
    let text = fs::read_to_string(&args.nu)?;
    let v: serde_json::Value = serde_json::from_str(&text)?;
    let read = |key: &str| -> Result<Vec<f64>> {
        v[key]
            .as_array()
            .ok_or_else(|| anyhow!("missing {key}"))?
            .iter()
            .map(|e| e.as_f64().ok_or_else(|| anyhow!("bad entry in {key}")))
            .collect()
    };
    let nu = Perturbation::new(read("nuX")?, read("nuY")?, &an)?;
    let closed = m_closed(&an, &nu)?;
    println!("m_closed = {closed}");
    if args.oracle {
        let oracle = m_lp_oracle(&an, &nu)?;
        println!("m_oracle = {oracle}");
        println!("gap = {:e}", (closed - oracle).abs());
    }
    Ok(())
}

fn run_sample_limit(args: SampleLimitArgs, rng: &RngConfig) -> Result<()> {
    let inst = load_instance(&args.instance)?;
    let params =
        LimitParams { path_steps: args.path_steps, grid_r: args.grid_r, refine: !args.no_refine };
    let set = match &args.blocks {
        Some(spec) => {
            let an = blocks_analysis(&inst, &parse_alpha(spec, inst.m())?)?.to_f64();
            sample_limit_blocks(&an, &params, args.reps, rng)?
        }
        None => {
            let an = classify_case(&inst)?.to_f64();
            sample_limit(&an, &params, args.reps, rng)?
        }
    };
    let csv = write_samples_csv(
        &set.samples,
        &[
            ("case", format!("{:?}", set.case)),
            ("reps", set.reps.to_string()),
            ("path_steps", set.path_steps.to_string()),
            ("grid_r", set.grid_r.to_string()),
            ("seed", set.seed.to_string()),
            ("stream", set.stream.to_string()),
        ],
    );
    emit(&args.out, &csv)
}

fn run_converge(args: ConvergeArgs, rng: &RngConfig) -> Result<()> {
    let inst = load_instance(&args.instance)?;
    let report = classify_case(&inst)?;
    let ns: Result<Vec<usize>, _> = args.n_list.split(',').map(|t| t.trim().parse()).collect();
    let ns = ns.context("parsing --n-list")?;
    let params =
        LimitParams { path_steps: args.path_steps, grid_r: args.grid_r, refine: !args.no_refine };
    let rep = converge(&inst, &report, &ns, args.reps, args.limit_reps, &params, rng)?;
    let text = if args.gnuplot {
        let mut t = String::from("# n mean_zn ks_d p_value\n");
        for row in &rep.rows {
            t.push_str(&format!(
                "{} {} {} {}\n",
                row.n, row.mean_zn, row.ks.statistic, row.ks.p_value
            ));
        }
        t
    } else {
        serde_json::to_string_pretty(&rep.to_json())?
    };
    emit(&args.out, &text)?;
    if args.check && !rep.trend_ok {
        bail!("KS distance did not shrink from the first to the last n");
    }
    Ok(())
}

fn run_blocks(args: BlocksArgs) -> Result<()> {
    let mut did_something = false;
    if let (Some(xs), Some(ys)) = (&args.x, &args.y) {
        let m = args.m;
        let alpha = parse_alpha(&args.alpha, m)?;
        let x = Word::parse(xs, m)?;
        let y = Word::parse(ys, m)?;
        println!("lc_blocks = {}", lc_blocks_length(&x, &y, &alpha)?);
        did_something = true;
    }
    if let Some(path) = &args.instance {
        let inst = load_instance(path)?;
        let alpha = parse_alpha(&args.alpha, inst.m())?;
        let report = blocks_analysis(&inst, &alpha)?;
        println!("{}", serde_json::to_string_pretty(&report.to_json())?);
        did_something = true;
    }
    if !did_something {
        bail!("blocks needs --instance and/or both --x and --y");
    }
    Ok(())
}
