use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use super::generate::{gen_random_nfa, gen_random_reduced, NfaShape};
use super::harness::{instance, run_experiment, to_csv, Algorithm, BenchmarkConfig};
use crate::automata::text::{format_mealy, format_nfa, mealy_to_dot, nfa_to_dot, parse_mealy, parse_nfa};
use crate::automata::{composite_product, image_automaton, ContextNfa, MealyMachine};
use crate::compat::{direct_simulation, Preorder};
use crate::oracle::{completeness_check, mutant_kill_rate, MutantSpec};
use crate::suite::{parse_suite, SuiteTree};
use crate::testgen::{baseline_tail_guarded, complex_with, simple_with, GenError, GenOptions, DEFAULT_MAX_TESTS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INSTANCE: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "greybox", version, about = "Conformance testing of Mealy machines in a restricted context")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw random machines.
    #[command(subcommand)]
    Gen(GenKind),
    /// Write the image automaton of a head machine.
    Image {
        #[arg(long)]
        mealy: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Write the composite machine T∘H.
    Product {
        #[arg(long)]
        head: PathBuf,
        #[arg(long)]
        tail: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Generate a suite with the simple algorithm.
    Simple(GenArgs),
    /// Generate a suite using a simulation preorder on the context.
    Complex {
        #[command(flatten)]
        args: GenArgs,
        #[arg(long, value_enum, default_value_t = PreorderKind::Simulation)]
        preorder: PreorderKind,
    },
    /// W-method on the cascade, mapped through the head.
    Baseline {
        #[arg(long)]
        head: PathBuf,
        #[arg(long)]
        tail: PathBuf,
        #[arg(short)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_TESTS)]
        max_tests: usize,
        #[command(flatten)]
        suite: SuiteOutput,
    },
    /// Check a suite for k-completeness by enumeration.
    Verify {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long)]
        suite: PathBuf,
    },
    /// Fraction of random mutants a suite kills.
    Kill {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long)]
        suite: PathBuf,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the cascade benchmark and write CSV.
    Bench(BenchArgs),
}

#[derive(Debug, Subcommand)]
enum GenKind {
    /// A reduced connected Mealy machine.
    Mealy {
        #[arg(long)]
        states: usize,
        #[arg(long)]
        inputs: usize,
        #[arg(long)]
        outputs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: Output,
    },
    /// A context automaton with all states reachable.
    Nfa {
        #[arg(long)]
        states: usize,
        #[arg(long)]
        symbols: usize,
        #[arg(long, default_value_t = 0.8)]
        edge: f64,
        #[arg(long, default_value_t = 0.3)]
        branch: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: Output,
    },
    /// The head and tail of one benchmark instance, as `head.txt` and `tail.txt`.
    Cascade {
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        dir: PathBuf,
    },
}

#[derive(Debug, Args)]
struct Output {
    /// Write here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Graphviz instead of the text format.
    #[arg(long)]
    dot: bool,
}

#[derive(Debug, Args)]
struct InstanceArgs {
    #[arg(long)]
    mealy: PathBuf,
    #[arg(long)]
    nfa: PathBuf,
    #[arg(short)]
    k: usize,
}

#[derive(Debug, Args)]
struct SuiteOutput {
    /// Suite file; without it the suite goes to stdout and the metrics to stderr.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Also write the metrics JSON here.
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Follow each test with its expected outputs.
    #[arg(long)]
    with_outputs: bool,
    #[arg(long)]
    omit_timing: bool,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    /// Seconds before giving up.
    #[arg(long, default_value_t = 180)]
    timeout: u64,
    /// Check certificate and preservation invariants while generating.
    #[arg(long)]
    check: bool,
    #[command(flatten)]
    suite: SuiteOutput,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PreorderKind {
    Identity,
    Simulation,
}

#[derive(Debug, Args)]
struct ShapeArgs {
    #[arg(long, default_value_t = 5)]
    head_states: usize,
    #[arg(long, default_value_t = 2)]
    tail_states: usize,
    #[arg(long, default_value_t = 6)]
    head_inputs: usize,
    /// Outputs of the head and inputs of the tail.
    #[arg(long, default_value_t = 3)]
    shared: usize,
    #[arg(long, default_value_t = 3)]
    tail_outputs: usize,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    shape: ShapeArgs,
    #[arg(long, default_value_t = 0)]
    extra: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, value_delimiter = ',', default_value = "simple,complex,advanced,baseline")]
    algos: Vec<Algorithm>,
    /// Seconds per instance and algorithm.
    #[arg(long, default_value_t = 180)]
    timeout: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_TESTS)]
    max_tests: usize,
    /// Write zeros in the millis column so runs are byte-identical.
    #[arg(long)]
    omit_timing: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

impl ShapeArgs {
    fn config(&self, extra: usize, seed: u64, count: usize) -> BenchmarkConfig {
        BenchmarkConfig {
            head_states: self.head_states,
            tail_states: self.tail_states,
            head_inputs: self.head_inputs,
            shared_alphabet: self.shared,
            tail_outputs: self.tail_outputs,
            extra_states: extra,
            seed,
            count,
            ..Default::default()
        }
    }
}

#[derive(Debug, Serialize)]
struct Metrics {
    algorithm: &'static str,
    #[serde(rename = "nH")]
    nh: Option<usize>,
    #[serde(rename = "nT")]
    nt: Option<usize>,
    #[serde(rename = "nM")]
    nm: usize,
    #[serde(rename = "nA")]
    na: usize,
    k: usize,
    e: i64,
    tests: usize,
    symbols: usize,
    millis: u128,
}

/// A failure with its exit code.
struct Failure {
    code: i32,
    message: String,
}

fn instance_error(message: impl ToString) -> Failure {
    Failure { code: EXIT_INSTANCE, message: message.to_string() }
}

type CliResult = Result<i32, Failure>;

/// Runs the command line `argv` (program name first) and returns the exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| instance_error(format!("{}: {e}", path.display())))
}

fn load_mealy(path: &Path) -> Result<MealyMachine, Failure> {
    parse_mealy(&read(path)?).map_err(|e| instance_error(format!("{}: {e}", path.display())))
}

fn load_nfa(path: &Path) -> Result<ContextNfa, Failure> {
    parse_nfa(&read(path)?).map_err(|e| instance_error(format!("{}: {e}", path.display())))
}

fn load_suite(path: &Path, m: &MealyMachine, a: &ContextNfa) -> Result<SuiteTree, Failure> {
    let words = parse_suite(&read(path)?).map_err(|e| instance_error(format!("{}: {e}", path.display())))?;
    SuiteTree::from_words(m, a, &words).map_err(|e| instance_error(format!("{}: {e}", path.display())))
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| instance_error(format!("{}: {e}", p.display()))),
        None => {
            let _ = std::io::stdout().write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn emit_machine(out: &Output, text: String, dot: String) -> CliResult {
    emit(out.output.as_deref(), if out.dot { &dot } else { &text })?;
    Ok(EXIT_OK)
}

fn gen_error(e: GenError) -> Failure {
    instance_error(e)
}

fn emit_suite(suite: &SuiteTree, opts: &SuiteOutput, mut metrics: Metrics) -> CliResult {
    if opts.omit_timing {
        metrics.millis = 0;
    }
    let json = serde_json::to_string(&metrics).expect("metrics serialize");
    emit(opts.output.as_deref(), &suite.to_text(opts.with_outputs))?;
    if let Some(p) = &opts.metrics {
        emit(Some(p), &format!("{json}\n"))?;
    }
    if opts.output.is_some() {
        println!("{json}");
    } else {
        eprintln!("{json}");
    }
    Ok(EXIT_OK)
}

fn generate(args: &GenArgs, preorder: Option<PreorderKind>) -> CliResult {
    let m = load_mealy(&args.inst.mealy)?;
    let a = load_nfa(&args.inst.nfa)?;
    let k = args.inst.k;
    let options =
        GenOptions { check_invariants: args.check, deadline: Some(Instant::now() + Duration::from_secs(args.timeout)) };
    let start = Instant::now();
    let (algorithm, generated) = match preorder {
        None => ("simple", simple_with(&m, &a, k, &options, None)),
        Some(kind) => {
            let pre = match kind {
                PreorderKind::Identity => Preorder::identity(a.num_states()),
                PreorderKind::Simulation => direct_simulation(&a),
            };
            ("complex", complex_with(&m, &a, &pre, k, &options, None))
        }
    };
    let generated = generated.map_err(gen_error)?;
    let metrics = Metrics {
        algorithm,
        nh: None,
        nt: None,
        nm: m.num_states(),
        na: a.num_states(),
        k,
        e: generated.stats.extra,
        tests: generated.suite.num_tests(),
        symbols: generated.suite.symbol_count(),
        millis: start.elapsed().as_millis(),
    };
    emit_suite(&generated.suite, &args.suite, metrics)
}

fn run(command: Command) -> CliResult {
    match command {
        Command::Gen(GenKind::Mealy { states, inputs, outputs, seed, out }) => {
            let m = gen_random_reduced(states, inputs, outputs, seed).map_err(instance_error)?;
            emit_machine(&out, format_mealy(&m), mealy_to_dot(&m))
        }
        Command::Gen(GenKind::Nfa { states, symbols, edge, branch, seed, out }) => {
            if !(0.0..=1.0).contains(&edge) || !(0.0..=1.0).contains(&branch) {
                return Err(Failure { code: EXIT_USAGE, message: "probabilities must lie in [0, 1]".into() });
            }
            let a = gen_random_nfa(NfaShape { states, symbols, edge, branch }, seed).map_err(instance_error)?;
            emit_machine(&out, format_nfa(&a), nfa_to_dot(&a))
        }
        Command::Gen(GenKind::Cascade { shape, seed, dir }) => {
            let inst = instance(&shape.config(0, seed, 1), 0).map_err(instance_error)?;
            fs::create_dir_all(&dir).map_err(|e| instance_error(format!("{}: {e}", dir.display())))?;
            emit(Some(&dir.join("head.txt")), &format_mealy(&inst.head))?;
            emit(Some(&dir.join("tail.txt")), &format_mealy(&inst.tail))?;
            Ok(EXIT_OK)
        }
        Command::Image { mealy, out } => {
            let a = image_automaton(&load_mealy(&mealy)?);
            emit_machine(&out, format_nfa(&a), nfa_to_dot(&a))
        }
        Command::Product { head, tail, out } => {
            let p = composite_product(&load_mealy(&head)?, &load_mealy(&tail)?).map_err(instance_error)?;
            emit_machine(&out, format_mealy(&p), mealy_to_dot(&p))
        }
        Command::Simple(args) => generate(&args, None),
        Command::Complex { args, preorder } => generate(&args, Some(preorder)),
        Command::Baseline { head, tail, k, max_tests, suite } => {
            let (h, t) = (load_mealy(&head)?, load_mealy(&tail)?);
            let start = Instant::now();
            let base = baseline_tail_guarded(&h, &t, k, max_tests).map_err(gen_error)?;
            let metrics = Metrics {
                algorithm: "baseline",
                nh: Some(h.num_states()),
                nt: Some(t.num_states()),
                nm: t.num_states(),
                na: h.num_states(),
                k,
                e: base.product.extra as i64,
                tests: base.suite.num_tests(),
                symbols: base.suite.symbol_count(),
                millis: start.elapsed().as_millis(),
            };
            emit_suite(&base.suite, &suite, metrics)
        }
        Command::Verify { inst, suite } => {
            let m = load_mealy(&inst.mealy)?;
            let a = load_nfa(&inst.nfa)?;
            let tree = load_suite(&suite, &m, &a)?;
            match completeness_check(&m, &a, &tree, inst.k) {
                Ok(verdict) => {
                    println!("{}", verdict.to_json());
                    Ok(if verdict.is_complete() { EXIT_OK } else { EXIT_VERIFY })
                }
                Err(e) => Err(instance_error(e)),
            }
        }
        Command::Kill { inst, suite, trials, seed } => {
            let m = load_mealy(&inst.mealy)?;
            let a = load_nfa(&inst.nfa)?;
            let tree = load_suite(&suite, &m, &a)?;
            let rate = mutant_kill_rate(&m, &a, &tree, &MutantSpec::new(inst.k), trials, seed).map_err(instance_error)?;
            println!("{}", serde_json::json!({ "trials": trials, "seed": seed, "kill_rate": rate }));
            Ok(if rate < 1.0 { EXIT_VERIFY } else { EXIT_OK })
        }
        Command::Bench(args) => {
            let mut cfg = args.shape.config(args.extra, args.seed, args.count);
            cfg.timeout = Duration::from_secs(args.timeout);
            cfg.max_tests = args.max_tests;
            let mut algos = args.algos.clone();
            algos.dedup();
            let rows = run_experiment(&cfg, &algos).map_err(instance_error)?;
            emit(args.output.as_deref(), &to_csv(&rows, args.omit_timing))?;
            Ok(EXIT_OK)
        }
    }
}
