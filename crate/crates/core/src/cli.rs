//! The `bcode` command line: construct, verify, search, decode, simulate.
//!
//! [`run`] never touches the process (no exit, no printing) so it can be
//! driven from tests; the binary is a thin wrapper around it.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::confusion::{ConfusionFile, ConfusionMatrix};
use crate::construct::{Recipe, DEFAULT_SEARCH_MAX_ROWS};
use crate::decoder::{AttackerPrior, Decoder, DecoderConfig, DEFAULT_ATTACK_THRESHOLD};
use crate::error::{invalid, Error, Result};
use crate::format::CodeFile;
use crate::search::exhaustive_min;
use crate::simulator::{
    self, DataSplit, SweepConfig, DEFAULT_KAPPA, DEFAULT_MAX_ACCURACY,
};
use crate::verify::{self, CodeKind};

pub const EXIT_OK: i32 = 0;
/// A well-formed question answered "no": verification failed, nothing
/// found, or the decoder saw impossible evidence.
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

/// Largest attacker count in the default decoder prior.
const DEFAULT_PRIOR_MAX: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommandOutcome {
    pub status: i32,
    pub stdout: String,
    pub stderr: String,
}

impl CommandOutcome {
    fn ok(stdout: String) -> Self {
        Self { status: EXIT_OK, stdout, stderr: String::new() }
    }

    fn from_error(err: &Error) -> Self {
        let status = match err {
            Error::InvalidArgument(_) | Error::Parse { .. } | Error::Io(_) => EXIT_USAGE,
            Error::ResourceLimit(_) | Error::ConstructionFailure { .. } => EXIT_RESOURCE,
            Error::DegenerateEvidence(_) => EXIT_NEGATIVE,
        };
        Self { status, stdout: String::new(), stderr: format!("error: {err}\n") }
    }
}

#[derive(Parser, Debug)]
#[command(name = "bcode", version, about = "Backdoor-robust subset codes: build, check, search, decode, simulate")]
struct Cli {
    /// Worker threads (default: available parallelism). Results do not
    /// depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a code matrix and write it as a .bcode file.
    Construct(ConstructArgs),
    /// Check a .bcode file against a code property.
    Verify(VerifyArgs),
    /// Find the fewest rows for a code property by exhaustive search.
    Search(SearchArgs),
    /// Decode one vector of model predictions.
    Decode(DecodeArgs),
    /// Monte-Carlo accuracy and tracking sweep with synthetic models.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ConstructKind {
    MinimalBdc,
    MinimalBcc,
    Bcc,
    Btc,
    Partition,
    Random,
}

#[derive(Args, Debug)]
struct ConstructArgs {
    #[arg(long, value_enum)]
    kind: ConstructKind,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    row_weight: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Row budget for the separable part of a tracking code.
    #[arg(long, default_value_t = DEFAULT_SEARCH_MAX_ROWS)]
    max_rows: usize,
    /// Output file; the code goes to stdout when omitted.
    #[arg(short = 'o', long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum VerifyKind {
    Bdc,
    Bcc,
    Btc,
    Separable,
}

impl From<VerifyKind> for CodeKind {
    fn from(k: VerifyKind) -> Self {
        match k {
            VerifyKind::Bdc => CodeKind::Bdc,
            VerifyKind::Bcc => CodeKind::Bcc,
            VerifyKind::Btc => CodeKind::Btc,
            VerifyKind::Separable => CodeKind::Separable,
        }
    }
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    kind: VerifyKind,
    #[arg(long)]
    k: usize,
    /// Required row weight; ignored for `separable`.
    #[arg(long)]
    r: Option<usize>,
    file: PathBuf,
}

#[derive(Args, Debug)]
struct SearchArgs {
    #[arg(long, value_enum)]
    kind: VerifyKind,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    r: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    max_m: usize,
}

#[derive(Args, Debug)]
struct DecodeArgs {
    #[arg(long)]
    code: PathBuf,
    /// Comma-separated predicted class per model, e.g. `1,0,1`.
    #[arg(long)]
    outputs: String,
    /// `id`, `synth:<alpha|iid>`, or a JSON confusion file.
    #[arg(long, default_value = "id")]
    confusion: String,
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long, default_value_t = 0.99)]
    success_rate: f64,
    #[arg(long, default_value_t = 0.5)]
    attack_rate: f64,
    /// Attacker-count prior `uniform:<lo>:<hi>` (default `uniform:0:3`,
    /// capped at the number of users).
    #[arg(long)]
    q: Option<String>,
    #[arg(long, default_value_t = DEFAULT_ATTACK_THRESHOLD)]
    threshold: f64,
    /// Seed for `synth:` confusions.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the full result as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    code: PathBuf,
    /// Dirichlet concentration of the user data, or `iid`.
    #[arg(long, default_value = "iid")]
    alpha: String,
    #[arg(long, default_value_t = 10)]
    classes: usize,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 10)]
    runs: usize,
    /// Comma-separated attacker counts, one sweep point each.
    #[arg(long, default_value = "0,1,2,3")]
    attackers: String,
    #[arg(long, default_value_t = 0.99)]
    success_rate: f64,
    #[arg(long, default_value_t = 0.5)]
    attack_rate: f64,
    #[arg(long)]
    q: Option<String>,
    #[arg(long, default_value_t = DEFAULT_MAX_ACCURACY)]
    a_max: f64,
    #[arg(long, default_value_t = DEFAULT_KAPPA)]
    kappa: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON report path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV report path.
    #[arg(long)]
    csv: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I) -> CommandOutcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                CommandOutcome { status: EXIT_USAGE, stdout: String::new(), stderr: text }
            } else {
                CommandOutcome::ok(text)
            };
        }
    };
    let result = match cli.threads {
        Some(0) => Err(invalid("--threads must be positive")),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| invalid(e.to_string()))
            .and_then(|pool| pool.install(|| dispatch(cli.command))),
        None => dispatch(cli.command),
    };
    result.unwrap_or_else(|e| CommandOutcome::from_error(&e))
}

fn dispatch(cmd: Command) -> Result<CommandOutcome> {
    match cmd {
        Command::Construct(a) => construct(a),
        Command::Verify(a) => verify_file(a),
        Command::Search(a) => search(a),
        Command::Decode(a) => decode(a),
        Command::Simulate(a) => simulate(a),
    }
}

fn need(value: Option<usize>, flag: &str, kind: &str) -> Result<usize> {
    value.ok_or_else(|| invalid(format!("--{flag} is required for --kind {kind}")))
}

fn construct(a: ConstructArgs) -> Result<CommandOutcome> {
    let kind = a.kind.to_possible_value().expect("no skipped variants").get_name().to_owned();
    let need = |v, flag| need(v, flag, &kind);
    let recipe = match a.kind {
        ConstructKind::MinimalBdc => Recipe::MinimalBdc { k: need(a.k, "k")?, r: need(a.r, "r")? },
        ConstructKind::MinimalBcc => Recipe::MinimalBcc { k: need(a.k, "k")?, r: need(a.r, "r")? },
        ConstructKind::Bcc => Recipe::GeneralBcc { k: need(a.k, "k")?, r: need(a.r, "r")?, n: need(a.n, "n")? },
        ConstructKind::Btc => Recipe::Btc {
            k: need(a.k, "k")?,
            r: need(a.r, "r")?,
            n: need(a.n, "n")?,
            seed: a.seed,
            max_rows: a.max_rows,
        },
        ConstructKind::Partition => Recipe::Partition { m: need(a.m, "m")?, n: need(a.n, "n")? },
        ConstructKind::Random => Recipe::Random {
            m: need(a.m, "m")?,
            n: need(a.n, "n")?,
            row_weight: need(a.row_weight, "row-weight")?,
            seed: a.seed,
        },
    };
    if let Some(p) = recipe.guarantee() {
        p.validate()?;
    }
    let matrix = recipe.build()?;
    let mut summary = String::new();
    if let Some(seed) = recipe.seed() {
        writeln!(summary, "seed={seed}").unwrap();
    }
    writeln!(
        summary,
        "m={} n={} minRowWeight={}",
        matrix.rows(),
        matrix.cols(),
        matrix.min_row_weight()
    )
    .unwrap();
    if let Some(p) = recipe.guarantee() {
        if let Some(v) = verify::check(&matrix, &p)? {
            return Err(Error::ConstructionFailure {
                reason: format!("built matrix is not {p}: {v}"),
                last_rows: Some(matrix.rows()),
            });
        }
        writeln!(summary, "verified {p}: PASS").unwrap();
    }
    let file = recipe.to_file(matrix);
    match a.output {
        Some(path) => {
            file.write(&path)?;
            writeln!(summary, "wrote {}", path.display()).unwrap();
            Ok(CommandOutcome::ok(summary))
        }
        None => Ok(CommandOutcome { status: EXIT_OK, stdout: file.to_string(), stderr: summary }),
    }
}

fn verify_file(a: VerifyArgs) -> Result<CommandOutcome> {
    let file = CodeFile::read(&a.file)?;
    let kind = CodeKind::from(a.kind);
    let r = match (kind, a.r) {
        (_, Some(r)) => r,
        (CodeKind::Separable, None) => 1,
        (_, None) => return Err(invalid("--r is required unless --kind separable")),
    };
    let label = match kind {
        CodeKind::Separable => format!("{}(k={})", kind.name(), a.k),
        _ => format!("{}(k={},r={})", kind.name(), a.k, r),
    };
    match verify::check_kind(&file.matrix, kind, a.k, r)? {
        None => Ok(CommandOutcome::ok(format!("{label}: PASS\n"))),
        Some(v) => Ok(CommandOutcome {
            status: EXIT_NEGATIVE,
            stdout: format!("{label}: FAIL\nwitness: {v}\n"),
            stderr: String::new(),
        }),
    }
}

fn search(a: SearchArgs) -> Result<CommandOutcome> {
    let kind = CodeKind::from(a.kind);
    let res = exhaustive_min(kind, a.k, a.r, a.n, a.max_m)?;
    let mut out = String::new();
    match res.min_rows {
        Some(m) => writeln!(out, "minRows={m}, classes={}", res.classes()).unwrap(),
        None => writeln!(out, "minRows=none (searched m <= {}), classes=0", a.max_m).unwrap(),
    }
    writeln!(out, "explored={}", res.explored).unwrap();
    for code in &res.codes {
        let file = CodeFile::new(crate::format::FileKind::Code(kind), a.k, a.r, code.clone());
        write!(out, "\n{file}").unwrap();
    }
    let status = if res.min_rows.is_some() { EXIT_OK } else { EXIT_NEGATIVE };
    Ok(CommandOutcome { status, stdout: out, stderr: String::new() })
}

/// `uniform:<lo>:<hi>`, or `uniform:0:3` capped at `users` when absent.
fn parse_prior(arg: Option<&str>, users: usize) -> Result<AttackerPrior> {
    let Some(arg) = arg else {
        return AttackerPrior::uniform(0, DEFAULT_PRIOR_MAX.min(users));
    };
    let parts: Vec<&str> = arg.split(':').collect();
    match parts.as_slice() {
        ["uniform", lo, hi] => {
            let lo = lo.parse().map_err(|_| invalid(format!("bad lower bound in --q {arg:?}")))?;
            let hi = hi.parse().map_err(|_| invalid(format!("bad upper bound in --q {arg:?}")))?;
            AttackerPrior::uniform(lo, hi)
        }
        _ => Err(invalid(format!("--q must look like uniform:<lo>:<hi>, got {arg:?}"))),
    }
}

fn parse_list(text: &str, flag: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|t| t.trim().parse().map_err(|_| invalid(format!("--{flag}: {t:?} is not a class index"))))
        .collect()
}

fn load_confusions(
    arg: &str,
    code: &crate::matrix::BitMatrix,
    classes: Option<usize>,
    seed: u64,
) -> Result<(usize, Vec<ConfusionMatrix>)> {
    let m = code.rows();
    let require_classes = || classes.ok_or_else(|| invalid("--classes is required unless a confusion file is given"));
    if arg == "id" {
        let c = require_classes()?;
        return Ok((c, vec![ConfusionMatrix::identity(c)?; m]));
    }
    if let Some(split) = arg.strip_prefix("synth:") {
        let c = require_classes()?;
        let profile = split.parse::<DataSplit>()?.profile(code.cols(), c, seed)?;
        let models = simulator::synth_confusion(code, &profile, DEFAULT_MAX_ACCURACY, DEFAULT_KAPPA)?;
        return Ok((c, models));
    }
    let file = ConfusionFile::read(Path::new(arg))?;
    if let Some(c) = classes.filter(|&c| c != file.c) {
        return Err(invalid(format!("--classes {c} disagrees with c={} in {arg}", file.c)));
    }
    Ok((file.c, file.models))
}

fn fmt_probs(probs: &[f64]) -> String {
    let items: Vec<String> = probs.iter().map(|p| format!("{p:.6}")).collect();
    format!("[{}]", items.join(", "))
}

fn fmt_set(items: &[usize]) -> String {
    let items: Vec<String> = items.iter().map(usize::to_string).collect();
    format!("{{{}}}", items.join(","))
}

fn decode(a: DecodeArgs) -> Result<CommandOutcome> {
    let code = CodeFile::read(&a.code)?.matrix;
    let (classes, confusions) = load_confusions(&a.confusion, &code, a.classes, a.seed)?;
    let cfg = DecoderConfig {
        attack_rate: a.attack_rate,
        success_rate: a.success_rate,
        prior: parse_prior(a.q.as_deref(), code.cols())?,
        confusions,
        classes,
        code,
    };
    let y = parse_list(&a.outputs, "outputs")?;
    let res = Decoder::new(&cfg)?.decode(&y, a.threshold)?;

    let mut out = String::new();
    if a.confusion.starts_with("synth:") {
        writeln!(out, "seed={}", a.seed).unwrap();
    }
    writeln!(out, "attackPosterior={:.6}", res.attack_posterior).unwrap();
    writeln!(out, "labelPosterior={}", fmt_probs(&res.label_posterior)).unwrap();
    writeln!(out, "label={}", res.decoded_label).unwrap();
    writeln!(out, "attackers={}", fmt_set(&res.decoded_attackers)).unwrap();
    if let Some(path) = a.out {
        fs::write(&path, serde_json::to_string_pretty(&res).expect("result serializes") + "\n")?;
        writeln!(out, "wrote {}", path.display()).unwrap();
    }
    Ok(CommandOutcome::ok(out))
}

fn simulate(a: SimulateArgs) -> Result<CommandOutcome> {
    let code = CodeFile::read(&a.code)?.matrix;
    let name = a
        .code
        .file_stem()
        .map_or_else(|| "code".to_owned(), |s| s.to_string_lossy().into_owned());
    let sc = SweepConfig {
        split: a.alpha.parse()?,
        classes: a.classes,
        trials: a.trials,
        runs: a.runs,
        attacker_counts: parse_list(&a.attackers, "attackers")?,
        success_rate: a.success_rate,
        attack_rate: a.attack_rate,
        prior: parse_prior(a.q.as_deref(), code.cols())?,
        a_max: a.a_max,
        kappa: a.kappa,
        seed: a.seed,
    };
    let report = simulator::sweep(&code, &name, &sc)?;

    let mut out = String::new();
    writeln!(out, "seed={}", a.seed).unwrap();
    writeln!(
        out,
        "code={} alpha={} classes={} trials={} runs={}",
        report.code, report.alpha, report.classes, report.trials, report.runs
    )
    .unwrap();
    writeln!(out, "attackers  decode          majority        TP              FP").unwrap();
    for p in &report.points {
        writeln!(
            out,
            "{:<10} {:.4}+-{:.4}  {:.4}+-{:.4}  {:.4}+-{:.4}  {:.4}+-{:.4}",
            p.attackers,
            p.decode_accuracy.mean,
            p.decode_accuracy.sd,
            p.majority_accuracy.mean,
            p.majority_accuracy.sd,
            p.tracking_tp.mean,
            p.tracking_tp.sd,
            p.tracking_fp.mean,
            p.tracking_fp.sd
        )
        .unwrap();
    }
    let degenerate: usize = report.points.iter().map(|p| p.degenerate).sum();
    if degenerate > 0 {
        writeln!(out, "degenerate trials: {degenerate}").unwrap();
    }
    if let Some(path) = &a.out {
        fs::write(path, report.to_json())?;
        writeln!(out, "wrote {}", path.display()).unwrap();
    }
    if let Some(path) = &a.csv {
        fs::write(path, report.to_csv())?;
        writeln!(out, "wrote {}", path.display()).unwrap();
    }
    Ok(CommandOutcome::ok(out))
}
