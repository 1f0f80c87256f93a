use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ctlstar_cli::{
    cmd_bench, cmd_hues, cmd_solve, parse_mode, BenchArgs, Budget, CliError, ModelFormat, Series, SolveArgs,
    EXIT_USAGE,
};

#[derive(Parser)]
#[command(name = "ctlstar", version, about = "CTL* satisfiability by hue tableau")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide satisfiability of one formula or a file of formulas.
    Solve(SolveCmd),
    /// Run one of the asymptotic benchmark series.
    Bench(BenchCmd),
    /// Print closure size and hue count of a formula.
    Hues(HuesCmd),
}

#[derive(Args)]
struct BudgetArgs {
    /// bounded or complete
    #[arg(long, default_value = "bounded")]
    mode: String,
    #[arg(long, default_value_t = Budget::default().branch_bound)]
    branch_bound: usize,
    #[arg(long, default_value_t = Budget::default().node_bound)]
    node_bound: usize,
    /// Most phues per node
    #[arg(long, default_value_t = Budget::default().phue_bound)]
    phue_bound: usize,
    /// Hue enumeration limit, as a power of two
    #[arg(long, default_value_t = Budget::default().hue_cap)]
    hue_cap: u32,
    #[arg(long)]
    timeout_ms: Option<u64>,
    #[arg(long)]
    rep_cut: bool,
    #[arg(long)]
    assume_bound_sufficient: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl BudgetArgs {
    fn budget(&self) -> Result<Budget, CliError> {
        Ok(Budget {
            mode: parse_mode(&self.mode)?,
            branch_bound: self.branch_bound,
            node_bound: self.node_bound,
            phue_bound: self.phue_bound,
            hue_cap: self.hue_cap,
            timeout_ms: self.timeout_ms,
            rep_cut: self.rep_cut,
            assume_bound_sufficient: self.assume_bound_sufficient,
            seed: self.seed,
        })
    }
}

#[derive(Args)]
struct SolveCmd {
    #[arg(long, conflicts_with = "file")]
    formula: Option<String>,
    /// One formula per line; `#` starts a comment line
    #[arg(long)]
    file: Option<PathBuf>,
    #[command(flatten)]
    budget: BudgetArgs,
    /// Write the model: `--emit-model json out.json` or `--emit-model dot out.dot`
    #[arg(long, num_args = 2, value_names = ["FORMAT", "PATH"])]
    emit_model: Option<Vec<String>>,
    #[arg(long)]
    emit_tableau: Option<PathBuf>,
    #[arg(long)]
    stats: bool,
}

#[derive(Args)]
struct BenchCmd {
    /// 101, 201, 301 or 401
    #[arg(long)]
    series: String,
    #[arg(long, default_value_t = 3)]
    max_i: u32,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    budget: BudgetArgs,
}

#[derive(Args)]
struct HuesCmd {
    #[arg(long)]
    formula: String,
    #[arg(long, default_value_t = Budget::default().hue_cap)]
    hue_cap: u32,
    /// Also list every hue
    #[arg(long)]
    list: bool,
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let mut stdout = std::io::stdout().lock();
    match cli.command {
        Command::Solve(c) => {
            let emit_model = match c.emit_model {
                Some(v) => Some((v[0].parse::<ModelFormat>()?, PathBuf::from(&v[1]))),
                None => None,
            };
            let args = SolveArgs {
                formula: c.formula,
                file: c.file,
                budget: c.budget.budget()?,
                emit_model,
                emit_tableau: c.emit_tableau,
                stats: c.stats,
            };
            cmd_solve(&args, &mut stdout)
        }
        Command::Bench(c) => {
            let args = BenchArgs {
                series: c.series.parse::<Series>()?,
                max_i: c.max_i,
                csv: c.csv,
                budget: c.budget.budget()?,
            };
            cmd_bench(&args, &mut stdout)
        }
        Command::Hues(c) => cmd_hues(&c.formula, c.hue_cap, c.list, &mut stdout),
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE as u8)
        }
    }
}
