//! The `pcmmap` command line.
//!
//! Exit status is 0 on success, 1 for usage errors and 2 for validation,
//! numeric or I/O failures. Files are written atomically.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::circuit::{random_circuit, Circuit};
use crate::display::sig6;
use crate::error::{Error, Result};
use crate::eval::{
    compare, contingency, generate_problems, label_with_hill_climb, percent_diff, problems_from_dataset,
    random_partition, Baseline, EvalReport, HillClimbSolver, ProblemMode, ProblemSet, Solver, SsmpSolver,
};
use crate::io::write_atomic;
use crate::mmap::{hill_climb, MmapProblem, VariablePartition};
use crate::neural::{cross_validate_alpha, train_ssmp, train_supervised, MlpModel, SupervisedLoss, TrainConfig, ALPHA_GRID};
use crate::sampler::{generate_dataset, sample_many, substream, EvidenceDataset};

#[derive(Debug, Parser)]
#[command(name = "pcmmap", version, about = "Marginal MAP inference in probabilistic circuits")]
struct Cli {
    /// Worker threads (defaults to the number of logical cores).
    #[arg(long, env = "PCMMAP_THREADS", global = true)]
    threads: Option<usize>,
    /// Machine-readable output with full precision.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a circuit file for structural validity.
    Validate(CircuitArg),
    /// Probability of a partial assignment.
    Marginal {
        #[command(flatten)]
        circuit: CircuitArg,
        /// Assignment such as X3=1,X4=0.
        #[arg(long)]
        assign: String,
    },
    /// Draw samples and write them as CSV.
    Sample(SampleArgs),
    /// Solve one MMAP problem.
    Solve(SolveArgs),
    /// Train a network solver.
    Train(TrainArgs),
    /// Pick the entropy weight by k-fold cross-validation.
    CvAlpha(CvArgs),
    /// Compare methods on a generated problem set.
    Eval(EvalArgs),
    /// Contingency table and percentage differences over saved reports.
    Report(ReportArgs),
    /// Write a seeded random circuit.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
struct CircuitArg {
    #[arg(value_name = "CIRCUIT", required_unless_present = "circuit")]
    path: Option<PathBuf>,
    #[arg(long, value_name = "FILE", conflicts_with = "path")]
    circuit: Option<PathBuf>,
}

impl CircuitArg {
    fn load(&self) -> Result<Circuit> {
        let path = self.path.as_ref().or(self.circuit.as_ref()).expect("clap enforces one");
        Circuit::from_path(path)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Mpe,
    Mmap,
}

impl From<Mode> for ProblemMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Mpe => ProblemMode::Mpe,
            Mode::Mmap => ProblemMode::Mmap,
        }
    }
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[command(flatten)]
    circuit: CircuitArg,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Project onto the evidence variables of this partition.
    #[arg(long, conflicts_with = "qr")]
    partition: Option<PathBuf>,
    /// Generate a partition with this query ratio and project onto its evidence.
    #[arg(long, requires = "partition_out")]
    qr: Option<f64>,
    #[arg(long, value_enum, default_value_t = Mode::Mmap)]
    mode: Mode,
    /// Where to write the generated partition.
    #[arg(long, requires = "qr")]
    partition_out: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Max,
    Ml,
    Seq,
    Bruteforce,
    Hillclimb,
    Ssmp,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    circuit: CircuitArg,
    #[arg(long, value_enum)]
    method: Method,
    #[arg(long)]
    partition: PathBuf,
    /// Evidence values, e.g. X1=1,X2=0.
    #[arg(long, default_value = "")]
    evidence: String,
    #[arg(long, required_if_eq("method", "ssmp"))]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Objective {
    Ssmp,
    Mse,
    Mae,
}

#[derive(Debug, Args)]
struct TrainOpts {
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long = "lr", default_value_t = 1e-3)]
    learning_rate: f64,
    #[arg(long = "batch", default_value_t = 128)]
    batch_size: usize,
    /// Hidden layer widths, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [64usize, 64])]
    hidden: Vec<usize>,
    #[arg(long, default_value_t = 0.0)]
    dropout: f64,
    #[arg(long, default_value_t = 0.0)]
    validation: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl TrainOpts {
    fn config(&self) -> TrainConfig {
        TrainConfig {
            alpha: self.alpha,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            hidden: self.hidden.clone(),
            dropout: self.dropout,
            validation_fraction: self.validation,
            seed: self.seed,
            ..TrainConfig::default()
        }
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    circuit: CircuitArg,
    #[arg(long)]
    partition: PathBuf,
    /// Evidence CSV; supervised objectives label it by hill climbing.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value_t = Objective::Ssmp)]
    objective: Objective,
    /// Hill-climbing rounds per label for supervised objectives.
    #[arg(long, default_value_t = 1000)]
    iters: usize,
    #[command(flatten)]
    opts: TrainOpts,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CvArgs {
    #[command(flatten)]
    circuit: CircuitArg,
    #[arg(long)]
    partition: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    #[command(flatten)]
    opts: TrainOpts,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    circuit: CircuitArg,
    /// Fixed partition; otherwise one is generated from --qr and --mode.
    #[arg(long, conflicts_with = "qr")]
    partition: Option<PathBuf>,
    #[arg(long, required_unless_present = "partition")]
    qr: Option<f64>,
    #[arg(long, value_enum, default_value_t = Mode::Mmap)]
    mode: Mode,
    /// Evidence CSV to use instead of sampled evidence.
    #[arg(long, requires = "partition")]
    data: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Method::Max, Method::Ml, Method::Seq])]
    methods: Vec<Method>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    iters: usize,
    /// Report JSON; a CSV with the same stem is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Report JSON files, one per dataset.
    #[arg(required = true)]
    reports: Vec<PathBuf>,
    /// Print 100 * (A - B) / |B| of mean log-likelihoods for methods A,B.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    percent_diff: Option<Vec<String>>,
    /// Contingency matrix CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long)]
    vars: usize,
    #[arg(long, default_value_t = 3)]
    depth: usize,
    #[arg(long, default_value_t = 2)]
    fanout: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// Parse `argv` (including the program name), run the subcommand and return
/// the exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout(), &mut std::io::stderr())
}

pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: cannot start worker pool: {e}");
            return 2;
        }
    };
    let mut buf = Vec::new();
    let result = pool.install(|| execute(&cli, &mut buf));
    let _ = out.write_all(&buf);
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

fn emit(out: &mut dyn Write, text: impl AsRef<str>) -> Result<()> {
    out.write_all(text.as_ref().as_bytes())?;
    Ok(())
}

fn emit_json(out: &mut dyn Write, v: &serde_json::Value) -> Result<()> {
    writeln!(out, "{}", serde_json::to_string_pretty(v)?)?;
    Ok(())
}

fn read_partition(c: &Circuit, path: &Path) -> Result<VariablePartition> {
    VariablePartition::from_json(c, &std::fs::read_to_string(path)?)
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::Validate(arg) => validate(arg, cli.json, out),
        Command::Marginal { circuit, assign } => {
            let c = circuit.load()?;
            let q = c.parse_assignment(assign)?;
            let p = c.marginal(&q)?;
            if cli.json {
                emit_json(out, &json!({ "assignment": c.format_assignment(&q), "value": p, "log_value": c.log_marginal(&q)? }))?;
            } else {
                emit(out, format!("{}\n", sig6(p)))?;
            }
            Ok(0)
        }
        Command::Sample(a) => sample(a, cli.json, out),
        Command::Solve(a) => solve(a, cli.json, out),
        Command::Train(a) => train(a, cli.json, out),
        Command::CvAlpha(a) => cv_alpha(a, cli.json, out),
        Command::Eval(a) => eval(a, cli.json, out),
        Command::Report(a) => report(a, cli.json, out),
        Command::Generate(a) => {
            let c = random_circuit(a.vars, a.depth, a.fanout, a.seed)?;
            write_atomic(&a.out, c.to_json().as_bytes())?;
            let n = c.counts();
            if cli.json {
                emit_json(out, &json!({ "sum": n.sum, "product": n.product, "leaf": n.leaf, "hash": c.content_hash() }))?;
            } else {
                emit(out, format!("wrote {} ({} nodes)\n", a.out.display(), c.len()))?;
            }
            Ok(0)
        }
    }
}

fn validate(arg: &CircuitArg, as_json: bool, out: &mut dyn Write) -> Result<i32> {
    let path = arg.path.as_ref().or(arg.circuit.as_ref()).expect("clap enforces one");
    let doc = crate::circuit::CircuitDoc::from_json(&std::fs::read_to_string(path)?)?;
    let report = crate::circuit::validate(&doc);
    if as_json {
        emit_json(out, &serde_json::to_value(&report)?)?;
    } else {
        emit(out, report.to_string())?;
    }
    Ok(if report.is_ok() { 0 } else { 2 })
}

fn sample(a: &SampleArgs, as_json: bool, out: &mut dyn Write) -> Result<i32> {
    let c = a.circuit.load()?;
    let part = match (&a.partition, a.qr) {
        (Some(p), _) => Some(read_partition(&c, p)?),
        (None, Some(qr)) => {
            let part = random_partition(c.n_vars(), qr, a.mode.into(), a.seed)?;
            let doc = serde_json::to_string_pretty(&part.to_doc(&c))?;
            write_atomic(a.partition_out.as_ref().expect("clap enforces it"), doc.as_bytes())?;
            Some(part)
        }
        (None, None) => None,
    };
    let data = match &part {
        Some(part) => generate_dataset(&c, part, a.n, a.seed)?,
        None => {
            if a.n == 0 {
                return Err(Error::InvalidSpec("dataset size must be at least 1".into()));
            }
            EvidenceDataset {
                variables: c.variables().to_vec(),
                rows: sample_many(&c, a.n, a.seed)?,
                provenance: None,
            }
        }
    };
    write_atomic(&a.out, data.to_csv_string().as_bytes())?;
    if as_json {
        emit_json(out, &json!({ "rows": data.len(), "columns": data.variables, "seed": a.seed, "circuit_hash": c.content_hash() }))?;
    } else {
        emit(out, format!("wrote {} rows over {} variables to {}\n", data.len(), data.variables.len(), a.out.display()))?;
    }
    Ok(0)
}

fn solve(a: &SolveArgs, as_json: bool, out: &mut dyn Write) -> Result<i32> {
    let c = Arc::new(a.circuit.load()?);
    let part = Arc::new(read_partition(&c, &a.partition)?);
    let evidence = c.parse_assignment(&a.evidence)?;
    let p = MmapProblem::new(Arc::clone(&c), part, evidence)?;
    let s = match a.method {
        Method::Max => Baseline::Max.solve(&p)?,
        Method::Ml => Baseline::Ml.solve(&p)?,
        Method::Seq => Baseline::Seq.solve(&p)?,
        Method::Bruteforce => Baseline::BruteForce.solve(&p)?,
        Method::Hillclimb => {
            let mut rng = substream(a.seed, 0);
            let init = crate::eval::random_query(&p, &mut rng);
            hill_climb(&p, &init, a.iters, a.seed)?
        }
        Method::Ssmp => {
            let model = MlpModel::from_path(a.model.as_ref().expect("clap enforces it"))?;
            SsmpSolver { model }.solve(&p)?
        }
    };
    if as_json {
        emit_json(out, &serde_json::to_value(s.to_doc(&c))?)?;
    } else {
        emit(
            out,
            format!(
                "q={}\nlog_score={} (p={})\nmethod={}\n",
                c.format_assignment(&s.q),
                sig6(s.log_score),
                sig6(s.log_score.exp()),
                s.method
            ),
        )?;
    }
    Ok(0)
}

fn train(a: &TrainArgs, as_json: bool, out: &mut dyn Write) -> Result<i32> {
    let c = Arc::new(a.circuit.load()?);
    let part = Arc::new(read_partition(&c, &a.partition)?);
    let data = EvidenceDataset::from_path(&a.data)?;
    let cfg = a.opts.config();
    let (mut model, history) = match a.objective {
        Objective::Ssmp => train_ssmp(&c, &part, &data, &cfg)?,
        Objective::Mse | Objective::Mae => {
            let ps = problems_from_dataset(Arc::clone(&c), Arc::clone(&part), &data)?;
            let labeled = label_with_hill_climb(&ps, a.iters, cfg.seed)?;
            let kind = if a.objective == Objective::Mse { SupervisedLoss::Mse } else { SupervisedLoss::Mae };
            train_supervised(&c, &part, &labeled, kind, &cfg)?
        }
    };
    model.meta.seed = Some(cfg.seed);
    if let Some(path) = a.model.as_ref().or(a.out.as_ref()) {
        write_atomic(path, model.to_json().as_bytes())?;
    }
    if as_json {
        emit_json(out, &serde_json::to_value(&history)?)?;
    } else {
        let mut text = String::from("epoch  loss        nll         entropy     grad_norm   val_ll\n");
        for e in &history.epochs {
            text += &format!(
                "{:>5}  {:<10}  {:<10}  {:<10}  {:<10}  {}\n",
                e.epoch,
                sig6(e.loss),
                sig6(e.nll),
                sig6(e.entropy),
                sig6(e.grad_norm),
                e.val_ll.map_or("-".into(), sig6)
            );
        }
        emit(out, text)?;
    }
    Ok(0)
}

fn cv_alpha(a: &CvArgs, as_json: bool, out: &mut dyn Write) -> Result<i32> {
    let c = a.circuit.load()?;
    let part = read_partition(&c, &a.partition)?;
    let data = EvidenceDataset::from_path(&a.data)?;
    let grid = a.grid.clone().unwrap_or_else(|| ALPHA_GRID.to_vec());
    let r = cross_validate_alpha(&c, &part, &data, &grid, a.folds, &a.opts.config())?;
    if let Some(path) = &a.out {
        write_atomic(path, serde_json::to_string_pretty(&r)?.as_bytes())?;
    }
    if as_json {
        emit_json(out, &serde_json::to_value(&r)?)?;
    } else {
        let mut text = String::new();
        for s in &r.scores {
            text += &format!("alpha={:<8} mean_ll={}\n", sig6(s.alpha), sig6(s.mean_ll));
        }
        text += &format!("best alpha={}\n", sig6(r.best_alpha));
        emit(out, text)?;
    }
    Ok(0)
}

fn eval(a: &EvalArgs, as_json: bool, out: &mut dyn Write) -> Result<i32> {
    let c = Arc::new(a.circuit.load()?);
    let ps: ProblemSet = match (&a.partition, &a.data) {
        (Some(p), Some(d)) => {
            let part = Arc::new(read_partition(&c, p)?);
            problems_from_dataset(Arc::clone(&c), part, &EvidenceDataset::from_path(d)?)?
        }
        (Some(p), None) => {
            let part = Arc::new(read_partition(&c, p)?);
            let data = generate_dataset(&c, &part, a.n, a.seed)?;
            let mut ps = problems_from_dataset(Arc::clone(&c), part, &data)?;
            ps.meta.seed = a.seed;
            ps
        }
        (None, _) => generate_problems(Arc::clone(&c), a.qr.expect("clap enforces it"), a.mode.into(), a.n, a.seed)?,
    };
    let model = match &a.model {
        Some(p) => Some(MlpModel::from_path(p)?),
        None if a.methods.contains(&Method::Ssmp) => {
            return Err(Error::InvalidSpec("method ssmp needs --model".into()));
        }
        None => None,
    };
    let hc = HillClimbSolver {
        iters: a.iters,
        seed: a.seed,
    };
    let ssmp = model.map(|model| SsmpSolver { model });
    let solvers: Vec<&dyn Solver> = a
        .methods
        .iter()
        .map(|m| -> &dyn Solver {
            match m {
                Method::Max => &Baseline::Max,
                Method::Ml => &Baseline::Ml,
                Method::Seq => &Baseline::Seq,
                Method::Bruteforce => &Baseline::BruteForce,
                Method::Hillclimb => &hc,
                Method::Ssmp => ssmp.as_ref().expect("checked above"),
            }
        })
        .collect();
    let r = compare(&solvers, &ps)?;
    if let Some(path) = &a.out {
        write_atomic(path, r.to_json().as_bytes())?;
        write_atomic(path.with_extension("csv"), r.to_csv()?.as_bytes())?;
    }
    if as_json {
        emit_json(out, &serde_json::to_value(&r)?)?;
    } else {
        emit(out, r.to_string())?;
    }
    Ok(0)
}

fn report(a: &ReportArgs, as_json: bool, out: &mut dyn Write) -> Result<i32> {
    let reports = a.reports.iter().map(EvalReport::from_path).collect::<Result<Vec<_>>>()?;
    let table = contingency(&reports)?;
    if let Some(path) = &a.out {
        write_atomic(path, table.to_csv()?.as_bytes())?;
    }
    let mut diffs = Vec::new();
    if let Some(pair) = &a.percent_diff {
        let [x, y] = pair.as_slice() else {
            return Err(Error::InvalidSpec("--percent-diff takes two method names".into()));
        };
        let find = |r: &EvalReport, name: &str| {
            r.methods
                .iter()
                .find(|m| m.method == name)
                .map(|m| m.mean_or_neg_inf())
                .ok_or_else(|| Error::InvalidSpec(format!("method {name} is not in the reports")))
        };
        for (path, r) in a.reports.iter().zip(&reports) {
            diffs.push((path.display().to_string(), percent_diff(find(r, x)?, find(r, y)?)?));
        }
    }
    if as_json {
        let diffs: Vec<_> = diffs.iter().map(|(p, d)| json!({ "report": p, "percent_diff": d })).collect();
        emit_json(out, &json!({ "contingency": table, "percent_diff": diffs }))?;
    } else {
        let mut text = table.to_string();
        for (p, d) in &diffs {
            text += &format!("{p}: {}%\n", sig6(*d));
        }
        emit(out, text)?;
    }
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture(name: &str) -> String {
        format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
    }

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut argv = vec!["pcmmap"];
        argv.extend(args);
        let code = run_with(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn validate_fig1() {
        let (code, out, _) = run_capture(&["validate", &fixture("fig1.json")]);
        assert_eq!(code, 0);
        assert!(out.contains("smooth: ok") && out.contains("decomposable: ok"), "{out}");
    }

    #[test]
    fn marginal_fig1() {
        let (code, out, _) = run_capture(&["marginal", &fixture("fig1.json"), "--assign", "X3=1,X4=0"]);
        assert_eq!(code, 0);
        assert_eq!(out.trim(), "0.0778");
        let (_, out, _) = run_capture(&["--json", "marginal", "--circuit", &fixture("fig1.json"), "--assign", "X3=1,X4=0"]);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!((v["value"].as_f64().unwrap() - 0.0778).abs() < 1e-15);
    }

    #[test]
    fn solve_bruteforce() {
        let (code, out, _) = run_capture(&[
            "solve",
            &fixture("fig1.json"),
            "--method",
            "bruteforce",
            "--partition",
            &fixture("q34.json"),
        ]);
        assert_eq!(code, 0);
        assert!(out.contains("q=(X3=0,X4=1)"), "{out}");
        assert!(out.contains(&format!("log_score={}", sig6(0.4798f64.ln()))), "{out}");
    }

    #[test]
    fn usage_and_validation_codes() {
        assert_eq!(run_capture(&["solve", &fixture("fig1.json")]).0, 1);
        assert_eq!(run_capture(&["frobnicate"]).0, 1);
        assert_eq!(
            run_capture(&["solve", &fixture("fig1.json"), "--method", "ssmp", "--partition", &fixture("q34.json")]).0,
            1
        );
        assert_eq!(run_capture(&["--help"]).0, 0);
        let (code, _, err) = run_capture(&["marginal", &fixture("fig1.json"), "--assign", "X9=1"]);
        assert_eq!(code, 2);
        assert!(err.contains("X9"));
        assert_eq!(run_capture(&["validate", "/nonexistent/circuit.json"]).0, 2);
    }

    #[test]
    fn invalid_circuit_exits_two() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.json");
        std::fs::write(
            &p,
            r#"{"variables":["A","B"],"nodes":[
            {"id":1,"kind":"leaf","var":"A","negated":false},
            {"id":2,"kind":"leaf","var":"B","negated":false},
            {"id":3,"kind":"sum","children":[{"id":1,"weight":0.5},{"id":2,"weight":0.5}]}],"root":3}"#,
        )
        .unwrap();
        let (code, out, _) = run_capture(&["validate", p.to_str().unwrap()]);
        assert_eq!(code, 2);
        assert!(out.contains("smooth: FAIL") || out.contains("smooth: fail"), "{out}");
    }
}
