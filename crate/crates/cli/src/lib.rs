//! Front-end plumbing for the `ctlstar` binary: solving, benchmark series
//! and hue counts.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use ctlstar_core::closure::Closure;
use ctlstar_core::formula::{parse_formula_file, FormulaId, FormulaTable};
use ctlstar_core::hue::{enumerate_hues, HueCap, HueError};
use ctlstar_core::search::{solve, SearchConfig, SearchMode, Verdict, VerdictKind};

pub const EXIT_SAT: i32 = 0;
pub const EXIT_UNSAT: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_USAGE: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_owned(),
            source,
        }
    }
}

pub fn exit_code(kind: &VerdictKind) -> i32 {
    match kind {
        VerdictKind::Sat => EXIT_SAT,
        VerdictKind::Unsat => EXIT_UNSAT,
        VerdictKind::Unknown(_) => EXIT_UNKNOWN,
    }
}

/// Display form used on standard output.
pub fn verdict_label(kind: &VerdictKind) -> String {
    match kind {
        VerdictKind::Sat => "SAT".into(),
        VerdictKind::Unsat => "UNSAT".into(),
        VerdictKind::Unknown(r) => format!("UNKNOWN ({r})"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFormat {
    Json,
    Dot,
}

impl FromStr for ModelFormat {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ModelFormat::Json),
            "dot" => Ok(ModelFormat::Dot),
            other => Err(CliError::Usage(format!("unknown model format {other:?} (json|dot)"))),
        }
    }
}

/// Search settings shared by `solve` and `bench`.
#[derive(Debug, Clone)]
pub struct Budget {
    pub mode: SearchMode,
    pub branch_bound: usize,
    pub node_bound: usize,
    pub phue_bound: usize,
    pub hue_cap: u32,
    pub timeout_ms: Option<u64>,
    pub rep_cut: bool,
    pub assume_bound_sufficient: bool,
    pub seed: u64,
}

impl Default for Budget {
    fn default() -> Self {
        let d = SearchConfig::default();
        Budget {
            mode: d.mode,
            branch_bound: d.branch_bound,
            node_bound: d.node_bound,
            phue_bound: d.phue_bound,
            hue_cap: d.hue_cap.0,
            timeout_ms: None,
            rep_cut: d.rep_cut,
            assume_bound_sufficient: d.assume_bound_sufficient,
            seed: d.seed,
        }
    }
}

impl Budget {
    pub fn config(&self) -> SearchConfig {
        SearchConfig {
            mode: self.mode,
            branch_bound: self.branch_bound,
            node_bound: self.node_bound,
            phue_bound: self.phue_bound,
            hue_cap: HueCap(self.hue_cap),
            timeout: self.timeout_ms.map(Duration::from_millis),
            assume_bound_sufficient: self.assume_bound_sufficient,
            rep_cut: self.rep_cut,
            seed: self.seed,
            check_integrity: false,
        }
    }
}

pub fn parse_mode(s: &str) -> Result<SearchMode, CliError> {
    match s {
        "bounded" => Ok(SearchMode::Bounded),
        "complete" => Ok(SearchMode::Complete),
        other => Err(CliError::Usage(format!("unknown mode {other:?} (bounded|complete)"))),
    }
}

#[derive(Debug, Clone, Default)]
pub struct SolveArgs {
    pub formula: Option<String>,
    pub file: Option<PathBuf>,
    pub budget: Budget,
    pub emit_model: Option<(ModelFormat, PathBuf)>,
    pub emit_tableau: Option<PathBuf>,
    pub stats: bool,
}

/// Formulas to solve, each with a label (source line for files).
fn load_formulas(args: &SolveArgs, table: &mut FormulaTable) -> Result<Vec<(Option<usize>, FormulaId)>, CliError> {
    match (&args.formula, &args.file) {
        (Some(src), None) => {
            let f = table.parse(src).map_err(|e| CliError::Parse(e.to_string()))?;
            Ok(vec![(None, f)])
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let fs = parse_formula_file(table, &text)
                .map_err(|(line, e)| CliError::Parse(format!("{}:{line}: {e}", path.display())))?;
            if fs.is_empty() {
                return Err(CliError::Usage(format!("{}: no formulas", path.display())));
            }
            Ok(fs.into_iter().map(|(line, f)| (Some(line), f)).collect())
        }
        _ => Err(CliError::Usage("give exactly one of --formula or --file".into())),
    }
}

/// `out.json` becomes `out-7.json` for the formula on line 7.
fn numbered(path: &Path, line: Option<usize>, many: bool) -> PathBuf {
    match line {
        Some(n) if many => {
            let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let name = match path.extension() {
                Some(ext) => format!("{stem}-{n}.{}", ext.to_string_lossy()),
                None => format!("{stem}-{n}"),
            };
            path.with_file_name(name)
        }
        _ => path.to_owned(),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn write_outputs(args: &SolveArgs, v: &Verdict, line: Option<usize>, many: bool) -> Result<(), CliError> {
    if let (Some((format, path)), Some(m)) = (&args.emit_model, &v.model) {
        let text = match format {
            ModelFormat::Json => serde_json::to_string_pretty(&m.to_json(v.witness.as_ref())).expect("json value"),
            ModelFormat::Dot => m.to_dot(v.witness.as_ref()),
        };
        write_file(&numbered(path, line, many), &text)?;
    }
    if let (Some(path), Some(tab)) = (&args.emit_tableau, &v.tableau) {
        write_file(&numbered(path, line, many), tab)?;
    }
    Ok(())
}

/// Solves every formula, prints one verdict line each and returns the exit
/// code: the worst code over all formulas.
pub fn cmd_solve(args: &SolveArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let mut table = FormulaTable::new();
    let formulas = load_formulas(args, &mut table)?;
    let many = formulas.len() > 1;
    let cfg = args.budget.config();
    let mut code = EXIT_SAT;
    for (line, f) in formulas {
        let v = solve(&mut table, f, &cfg);
        let label = verdict_label(&v.kind);
        let io = |e| CliError::io(Path::new("<stdout>"), e);
        match line {
            Some(n) if many => writeln!(out, "{n}: {label}").map_err(io)?,
            _ => writeln!(out, "{label}").map_err(io)?,
        }
        if args.stats {
            for (k, val) in v.stats.to_map() {
                writeln!(out, "  {k}: {val}").map_err(io)?;
            }
        }
        write_outputs(args, &v, line, many)?;
        code = code.max(exit_code(&v.kind));
    }
    Ok(code)
}

/// The four formula families of the asymptotic benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Series {
    S101,
    S201,
    S301,
    S401,
}

impl Series {
    pub fn id(self) -> u32 {
        match self {
            Series::S101 => 101,
            Series::S201 => 201,
            Series::S301 => 301,
            Series::S401 => 401,
        }
    }
}

impl FromStr for Series {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "101" => Ok(Series::S101),
            "201" => Ok(Series::S201),
            "301" => Ok(Series::S301),
            "401" => Ok(Series::S401),
            other => Err(CliError::Usage(format!("unknown series {other:?} (101|201|301|401)"))),
        }
    }
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.id())
    }
}

/// `α_i` and `β_i` as source text, for `i ≥ 1`.
pub fn alpha_beta(i: u32) -> (String, String) {
    assert!(i >= 1, "series index starts at 1");
    let mut a = "A F G q".to_string();
    let mut b = "A F A G q".to_string();
    for _ in 1..i {
        a = format!("A F G ({a})");
        b = format!("A F A G ({b})");
    }
    (a, b)
}

pub fn series_formula(series: Series, i: u32) -> String {
    let (a, b) = alpha_beta(i);
    match series {
        Series::S101 => format!("({a}) -> ({b})"),
        Series::S201 => format!("~(({a}) -> ({b}))"),
        Series::S301 => format!("({b}) -> ({a})"),
        Series::S401 => format!("~(({b}) -> ({a}))"),
    }
}

#[derive(Debug, Clone)]
pub struct BenchRow {
    pub id: String,
    pub formula: String,
    pub length: u64,
    pub verdict: VerdictKind,
    pub millis: u64,
    pub stats: BTreeMap<&'static str, u64>,
}

impl BenchRow {
    pub fn verdict_word(&self) -> &'static str {
        match self.verdict {
            VerdictKind::Sat => "sat",
            VerdictKind::Unsat => "unsat",
            VerdictKind::Unknown(_) => "unknown",
        }
    }
}

pub fn bench_row(series: Series, i: u32, budget: &Budget) -> BenchRow {
    let mut table = FormulaTable::new();
    let f = table
        .parse(&series_formula(series, i))
        .expect("series formulas parse");
    let start = Instant::now();
    let v = solve(&mut table, f, &budget.config());
    let millis = start.elapsed().as_millis() as u64;
    BenchRow {
        id: (series.id() + i - 1).to_string(),
        formula: table.render(f),
        length: table.size(f),
        verdict: v.kind,
        millis,
        stats: v.stats.to_map(),
    }
}

pub fn run_bench(series: Series, max_i: u32, budget: &Budget) -> Vec<BenchRow> {
    (1..=max_i).map(|i| bench_row(series, i, budget)).collect()
}

pub fn write_csv<W: Write>(rows: &[BenchRow], w: W) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(w);
    let stat_keys: Vec<&str> = rows.first().map(|r| r.stats.keys().copied().collect()).unwrap_or_default();
    let mut header = vec!["id", "formula", "length", "verdict", "millis"];
    header.extend(stat_keys.iter().copied());
    out.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.id.clone(),
            r.formula.clone(),
            r.length.to_string(),
            r.verdict_word().to_string(),
            r.millis.to_string(),
        ];
        rec.extend(stat_keys.iter().map(|k| r.stats[k].to_string()));
        out.write_record(&rec)?;
    }
    out.flush().map_err(|e| CliError::io(Path::new("<csv>"), e))?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct BenchArgs {
    pub series: Series,
    pub max_i: u32,
    pub csv: Option<PathBuf>,
    pub budget: Budget,
}

/// Runs a series and writes CSV to the file, or to `out` when no file is
/// given. Unknown rows are reported in the CSV, not as a failure.
pub fn cmd_bench(args: &BenchArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let rows = run_bench(args.series, args.max_i, &args.budget);
    match &args.csv {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
            write_csv(&rows, file)?;
            for r in &rows {
                writeln!(out, "{} {} {} ms", r.id, r.verdict_word(), r.millis)
                    .map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
            }
        }
        None => write_csv(&rows, out)?,
    }
    Ok(EXIT_SAT)
}

#[derive(Debug, Clone)]
pub struct HueReport {
    pub closure_size: usize,
    pub formula_length: u64,
    pub hues: Vec<Vec<String>>,
}

pub fn hue_report(src: &str, cap: u32) -> Result<Result<HueReport, HueError>, CliError> {
    let mut table = FormulaTable::new();
    let f = table.parse(src).map_err(|e| CliError::Parse(e.to_string()))?;
    let length = table.size(f);
    let c = Closure::new(&mut table, f);
    Ok(enumerate_hues(&c, HueCap(cap)).map(|hs| HueReport {
        closure_size: c.len(),
        formula_length: length,
        hues: hs
            .iter()
            .map(|h| h.iter().map(|m| c.describe(&table, m)).collect())
            .collect(),
    }))
}

/// Prints `|cl|` and the hue count; exit 2 when the cap is exceeded.
pub fn cmd_hues(src: &str, cap: u32, list: bool, out: &mut dyn Write) -> Result<i32, CliError> {
    let io = |e| CliError::io(Path::new("<stdout>"), e);
    match hue_report(src, cap)? {
        Err(e) => {
            eprintln!("{e}");
            Ok(EXIT_UNKNOWN)
        }
        Ok(r) => {
            let bound = 1u128.checked_shl(r.formula_length as u32).unwrap_or(u128::MAX);
            assert!(r.hues.len() as u128 <= bound, "hue count exceeds 2^|φ|");
            assert!(r.closure_size as u64 <= 2 * r.formula_length, "closure exceeds 2|φ|");
            writeln!(out, "|cl| = {}", r.closure_size).map_err(io)?;
            writeln!(out, "length = {}", r.formula_length).map_err(io)?;
            writeln!(out, "hues = {}", r.hues.len()).map_err(io)?;
            if list {
                for h in &r.hues {
                    writeln!(out, "  {{{}}}", h.join(", ")).map_err(io)?;
                }
            }
            Ok(EXIT_SAT)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_texts() {
        assert_eq!(series_formula(Series::S101, 1), "(A F G q) -> (A F A G q)");
        assert_eq!(series_formula(Series::S301, 2), "(A F A G (A F A G q)) -> (A F G (A F G q))");
        assert_eq!(alpha_beta(3).0, "A F G (A F G (A F G q))");
    }

    #[test]
    fn row_ids_follow_series() {
        let budget = Budget {
            timeout_ms: Some(10_000),
            ..Budget::default()
        };
        let rows = run_bench(Series::S201, 2, &budget);
        let ids: Vec<&str> = rows.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["201", "202"]);
    }

    #[test]
    fn numbered_paths() {
        assert_eq!(numbered(Path::new("d/m.json"), Some(7), true), Path::new("d/m-7.json"));
        assert_eq!(numbered(Path::new("d/m.json"), Some(7), false), Path::new("d/m.json"));
    }
}
