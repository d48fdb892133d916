//! `dsmseq`: solve, generate, verify and benchmark activity sequencing
//! instances.
//!
//! Exit codes: 0 success, 1 input error, 2 timeout, 3 resource limit,
//! 4 internal invariant violation (including a verify mismatch).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use dsmseq_core::harness::{
    ablation_run, ablations_to_json, format_ablations, format_table, run_grid, to_json, GridSpec,
};
use dsmseq_core::oracle::brute_force_optimum;
use dsmseq_core::solver::SolveReport;
use dsmseq_core::{
    complement_address, generate_instance, rank_subset, read_dsm, solve, unrank_subset, write_dsm, write_solution,
    BinomialTable, Error, HashAddress, SolverConfig, Variant,
};

#[derive(Parser)]
#[command(
    name = "dsmseq",
    version,
    about = "Exact feedback-length minimization for design structure matrices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one DSM file to optimality.
    Solve(SolveArgs),
    /// Write seeded random DSM files.
    Generate(GenerateArgs),
    /// Solve with both the solver and exhaustive enumeration and compare.
    Verify {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Hash address of a subset of activities.
    Rank {
        #[arg(long)]
        n: usize,
        /// Comma-separated 1-based activity ids.
        #[arg(long, value_delimiter = ',', required = true)]
        subset: Vec<usize>,
        /// Also print the address of the complementary subset.
        #[arg(long)]
        complement: bool,
    },
    /// Subset at a hash address.
    Unrank {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        ha: u64,
        /// Print the complementary subset's address and members instead.
        #[arg(long)]
        complement: bool,
    },
    /// Run an instance grid and write bench_<timestamp>.txt / .json.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SearchArgs {
    /// Worker threads; capped at the machine's parallelism.
    #[arg(long, env = "DSMSEQ_CORES", default_value_t = 8)]
    cores: usize,
    /// Split row where the two trees meet; clamped into [2, n-2].
    #[arg(long, default_value_t = 5)]
    na: usize,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    search: SearchArgs,
    /// Solution file to write (JSON).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    /// Fraction of off-diagonal cells that are nonzero.
    #[arg(long)]
    density: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    count: u64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "8,10,12")]
    n_list: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.5,1.0")]
    densities: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    instances: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    search: SearchArgs,
    /// Cross-check objectives by exhaustive enumeration (n <= 10).
    #[arg(long)]
    verify: bool,
    /// Compare the full solver against these variants; `all` selects every one.
    #[arg(long, value_delimiter = ',')]
    ablation: Vec<String>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Timeout(_) => 2,
            Error::Resource { .. } => 3,
            Error::Invariant(_) => 4,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

type CmdResult = Result<(), Failure>;

/// `x` with six significant digits.
fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    if (-4..6).contains(&magnitude) {
        let decimals = (5 - magnitude).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.5e}")
    }
}

fn available_cores() -> usize {
    std::thread::available_parallelism().map_or(1, |c| c.get())
}

fn solver_config(args: &SearchArgs, n: usize) -> Result<SolverConfig, Failure> {
    if args.cores == 0 {
        return Err(input_error("--cores must be at least 1"));
    }
    let mut config = SolverConfig::default()
        .with_cores(args.cores.min(available_cores()))
        .with_na(args.na);
    if let Some(secs) = args.time_limit {
        let limit =
            Duration::try_from_secs_f64(secs).map_err(|_| input_error(format!("invalid --time-limit {secs}")))?;
        config = config.with_time_limit(limit);
    }
    if n >= 4 {
        let clamped = config.clamped_na(n);
        if clamped != args.na {
            eprintln!(
                "warning: na = {} is outside [2, {}] for n = {n}; using na = {clamped}",
                args.na,
                n - 2
            );
        }
    }
    Ok(config)
}

fn print_report(report: &SolveReport) {
    let c = &report.counters;
    println!("objective: {}", sig6(report.objective));
    println!("sequence: {}", report.sequence);
    println!(
        "na: {}  cores: {}  time: {} ms",
        report.na,
        report.cores_used,
        sig6(report.timings.total.as_secs_f64() * 1e3)
    );
    println!(
        "expanded: {}  pruned: {}  transferred: {}  comparisons: {}  combined: {}",
        c.expanded(),
        c.pruned(),
        c.transferred_records(),
        c.similar_comparisons(),
        c.combination_pairs
    );
}

fn cmd_solve(args: SolveArgs) -> CmdResult {
    let dsm = read_dsm(&args.input)?;
    let config = solver_config(&args.search, dsm.n())?;
    let report = solve(&dsm, &config)?;
    print_report(&report);
    if let Some(path) = &args.output {
        write_solution(&report.to_solution_file(), path)?;
        println!("solution written to {}", path.display());
    }
    Ok(())
}

fn density_tag(density: f64) -> String {
    format!("{density}")
}

fn cmd_generate(args: GenerateArgs) -> CmdResult {
    fs::create_dir_all(&args.out_dir)
        .map_err(|e| input_error(format!("cannot create {}: {e}", args.out_dir.display())))?;
    for i in 0..args.count {
        let seed = args.seed + i;
        let dsm = generate_instance(args.n, args.density, seed)?;
        let path = args
            .out_dir
            .join(format!("dsm_n{}_d{}_s{seed}.txt", args.n, density_tag(args.density)));
        write_dsm(&dsm, &path)?;
        println!("{} ({} nonzeros)", path.display(), dsm.nonzero_count());
    }
    Ok(())
}

fn cmd_verify(input: &Path, search: &SearchArgs) -> CmdResult {
    let dsm = read_dsm(input)?;
    let config = solver_config(search, dsm.n())?;
    let (oracle_seq, oracle_value) = brute_force_optimum(&dsm)?;
    let report = solve(&dsm, &config)?;
    println!("solver:     {} {}", sig6(report.objective), report.sequence);
    println!("exhaustive: {} {}", sig6(oracle_value), oracle_seq);
    if report.objective == oracle_value {
        println!("match");
        Ok(())
    } else {
        Err(Failure {
            code: 4,
            message: format!("mismatch: solver {} vs exhaustive {oracle_value}", report.objective),
        })
    }
}

fn cmd_rank(n: usize, subset: &[usize], complement: bool) -> CmdResult {
    let table = BinomialTable::new(n)?;
    let addr = rank_subset(subset, n, &table)?;
    println!("{}", addr.ha);
    if complement {
        if addr.p == n {
            return Err(input_error("the full set has no complement to rank"));
        }
        println!("complement: {}", complement_address(addr, &table)?.ha);
    }
    Ok(())
}

fn cmd_unrank(n: usize, p: usize, ha: u64, complement: bool) -> CmdResult {
    let table = BinomialTable::new(n)?;
    let join = |ids: Vec<usize>| ids.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
    if complement {
        if p == n {
            return Err(input_error("the full set has no complement"));
        }
        let dual = complement_address(HashAddress { ha, n, p }, &table)?;
        println!("{}", dual.ha);
        println!("{}", join(unrank_subset(dual.ha, n, dual.p, &table)?));
    } else {
        println!("{}", join(unrank_subset(ha, n, p, &table)?));
    }
    Ok(())
}

fn write_report(dir: &Path, stem: &str, text: &str, json: &str) -> CmdResult {
    fs::create_dir_all(dir).map_err(|e| input_error(format!("cannot create {}: {e}", dir.display())))?;
    for (ext, body) in [("txt", text), ("json", json)] {
        let path = dir.join(format!("{stem}.{ext}"));
        fs::write(&path, body).map_err(|e| input_error(format!("cannot write {}: {e}", path.display())))?;
        println!("report written to {}", path.display());
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> CmdResult {
    let variants = if args.ablation.iter().any(|v| v == "all") {
        Variant::ALL.iter().copied().filter(|&v| v != Variant::Full).collect()
    } else {
        args.ablation
            .iter()
            .map(|name| Variant::from_name(name).ok_or_else(|| input_error(format!("unknown variant `{name}`"))))
            .collect::<Result<Vec<_>, _>>()?
    };
    let mut spec = GridSpec::new(args.n_list.clone(), args.densities.clone(), args.instances);
    spec.seed_base = args.seed;
    spec.verify = args.verify;
    // Grid sizes vary, so the per-instance clamp stays silent here.
    spec.config = solver_config(&args.search, 0)?;
    spec.time_limit = spec.config.time_limit;

    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let stem = format!("bench_{stamp}");
    if variants.is_empty() {
        let cells = run_grid(&spec)?;
        let table = format_table(&cells);
        print!("{table}");
        write_report(&args.out_dir, &stem, &table, &to_json(&cells))
    } else {
        let results = variants
            .into_iter()
            .map(|v| ablation_run(&spec, v))
            .collect::<Result<Vec<_>, _>>()?;
        let mut text = String::new();
        for r in &results {
            text += &format!(
                "# full\n{}# {}\n{}",
                format_table(&r.full),
                r.variant,
                format_table(&r.ablated)
            );
        }
        text += &format_ablations(&results);
        print!("{text}");
        write_report(&args.out_dir, &stem, &text, &ablations_to_json(&results))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Generate(args) => cmd_generate(args),
        Command::Verify { input, search } => cmd_verify(&input, &search),
        Command::Rank { n, subset, complement } => cmd_rank(n, &subset, complement),
        Command::Unrank { n, p, ha, complement } => cmd_unrank(n, p, ha, complement),
        Command::Bench(args) => cmd_bench(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::sig6;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(1.0), "1");
        assert_eq!(sig6(1.23456789), "1.23457");
        assert_eq!(sig6(123456.7), "123457");
        assert_eq!(sig6(1234567.0), "1.23457e6");
        assert_eq!(sig6(0.000123456789), "0.000123457");
        assert_eq!(sig6(42.5), "42.5");
    }
}
