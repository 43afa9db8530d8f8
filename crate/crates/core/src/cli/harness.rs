//! Cascade experiments: random heads and tails, one CSV row per instance and algorithm.

use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::generate::{gen_random_reduced_with, GenerateError};
use crate::automata::{image_automaton, ContextNfa, MealyMachine};
use crate::compat::{direct_simulation, quotient_by_simulation};
use crate::testgen::{baseline_tail_guarded, complex_with, simple_with, GenError, GenOptions, DEFAULT_MAX_TESTS};

pub const CSV_HEADER: &str = "seed,algo,nH,nT,nM,nA,k,e,tests,symbols,millis,status";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Simple,
    Complex,
    /// Quotient by simulation, then `complex` if the simulation is still nontrivial, else `simple`.
    Advanced,
    Baseline,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Simple, Algorithm::Complex, Algorithm::Advanced, Algorithm::Baseline];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Simple => "simple",
            Algorithm::Complex => "complex",
            Algorithm::Advanced => "advanced",
            Algorithm::Baseline => "baseline",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown algorithm `{s}` (expected simple, complex, advanced or baseline)"))
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkConfig {
    pub head_states: usize,
    pub tail_states: usize,
    pub head_inputs: usize,
    /// Outputs of the head, inputs of the tail.
    pub shared_alphabet: usize,
    pub tail_outputs: usize,
    /// `k = tail_states + extra_states`
    pub extra_states: usize,
    pub seed: u64,
    pub count: usize,
    pub timeout: Duration,
    /// Upper limit on the baseline's test count.
    pub max_tests: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            head_states: 5,
            tail_states: 2,
            head_inputs: 6,
            shared_alphabet: 3,
            tail_outputs: 3,
            extra_states: 0,
            seed: 0,
            count: 10,
            timeout: Duration::from_secs(180),
            max_tests: DEFAULT_MAX_TESTS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Timeout,
    OomGuard,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Ok => "ok",
            Status::Timeout => "timeout",
            Status::OomGuard => "oom-guard",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchRow {
    pub seed: u64,
    pub algo: Algorithm,
    pub nh: usize,
    pub nt: usize,
    pub nm: usize,
    pub na: usize,
    pub k: usize,
    pub e: i64,
    pub tests: Option<usize>,
    pub symbols: Option<usize>,
    pub millis: u128,
    pub status: Status,
}

/// A cascade drawn for one benchmark instance.
#[derive(Debug, Clone)]
pub struct Instance {
    pub seed: u64,
    pub head: MealyMachine,
    pub tail: MealyMachine,
}

/// The `j`-th instance of a configuration.
pub fn instance(cfg: &BenchmarkConfig, j: usize) -> Result<Instance, GenerateError> {
    let seed = cfg.seed.wrapping_add(j as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let head = gen_random_reduced_with(cfg.head_states, cfg.head_inputs, cfg.shared_alphabet, &mut rng)?;
    let tail = gen_random_reduced_with(cfg.tail_states, cfg.shared_alphabet, cfg.tail_outputs, &mut rng)?;
    Ok(Instance { seed, head, tail })
}

/// The context and preorder used by the `advanced` pipeline, and whether
/// the preorder is nontrivial.
pub fn advanced_context(context: &ContextNfa) -> (ContextNfa, crate::compat::Preorder) {
    let sim = direct_simulation(context);
    let reduced = quotient_by_simulation(context, &sim);
    let sim = direct_simulation(&reduced);
    (reduced, sim)
}

pub fn run_algorithm(inst: &Instance, algo: Algorithm, cfg: &BenchmarkConfig) -> BenchRow {
    let k = cfg.tail_states + cfg.extra_states;
    let context = image_automaton(&inst.head);
    let options = GenOptions { check_invariants: false, deadline: Some(Instant::now() + cfg.timeout) };
    let start = Instant::now();
    let mut na = context.num_states();
    let outcome: Result<(usize, usize, i64), GenError> = match algo {
        Algorithm::Simple => {
            simple_with(&inst.tail, &context, k, &options, None).map(|g| (g.suite.num_tests(), g.suite.symbol_count(), g.stats.extra))
        }
        Algorithm::Complex => {
            let sim = direct_simulation(&context);
            complex_with(&inst.tail, &context, &sim, k, &options, None)
                .map(|g| (g.suite.num_tests(), g.suite.symbol_count(), g.stats.extra))
        }
        Algorithm::Advanced => {
            let (reduced, sim) = advanced_context(&context);
            na = reduced.num_states();
            let generated = if sim.is_trivial() {
                simple_with(&inst.tail, &reduced, k, &options, None)
            } else {
                complex_with(&inst.tail, &reduced, &sim, k, &options, None)
            };
            generated.map(|g| (g.suite.num_tests(), g.suite.symbol_count(), g.stats.extra))
        }
        Algorithm::Baseline => baseline_tail_guarded(&inst.head, &inst.tail, k, cfg.max_tests)
            .map(|b| (b.suite.num_tests(), b.suite.symbol_count(), b.product.extra as i64)),
    };
    let millis = start.elapsed().as_millis();
    let mut row = BenchRow {
        seed: inst.seed,
        algo,
        nh: inst.head.num_states(),
        nt: inst.tail.num_states(),
        nm: inst.tail.num_states(),
        na,
        k,
        e: 0,
        tests: None,
        symbols: None,
        millis,
        status: Status::Ok,
    };
    match outcome {
        Ok((tests, symbols, e)) => {
            row.tests = Some(tests);
            row.symbols = Some(symbols);
            row.e = e;
        }
        Err(GenError::Timeout) => row.status = Status::Timeout,
        Err(GenError::ResourceGuard { .. }) => row.status = Status::OomGuard,
        Err(other) => panic!("generation failed on instance {}: {other}", inst.seed),
    }
    row
}

fn thread_pool() -> rayon::ThreadPool {
    let threads = std::env::var("GREYBOX_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).unwrap_or(0);
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool")
}

/// Rows in instance order, then algorithm order.
pub fn run_experiment(cfg: &BenchmarkConfig, algorithms: &[Algorithm]) -> Result<Vec<BenchRow>, GenerateError> {
    let instances = (0..cfg.count).map(|j| instance(cfg, j)).collect::<Result<Vec<_>, _>>()?;
    let rows = thread_pool().install(|| {
        instances
            .par_iter()
            .map(|inst| algorithms.iter().map(|&algo| run_algorithm(inst, algo, cfg)).collect::<Vec<_>>())
            .collect::<Vec<_>>()
    });
    Ok(rows.into_iter().flatten().collect())
}

/// Linear interpolation between closest ranks; `q` in `[0, 1]`.
pub fn percentile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    if lo == hi || sorted[lo] == sorted[hi] {
        return Some(sorted[lo]);
    }
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64))
}

/// Median of a column where unfinished runs count as infinitely large.
pub fn median_of(rows: &[BenchRow], algo: Algorithm, column: impl Fn(&BenchRow) -> Option<f64>) -> Option<f64> {
    let values: Vec<f64> = rows.iter().filter(|r| r.algo == algo).map(|r| column(r).unwrap_or(f64::INFINITY)).collect();
    percentile(&values, 0.5)
}

fn fmt_stat(v: Option<f64>) -> String {
    match v {
        None => "-".into(),
        Some(x) if x.is_infinite() => "inf".into(),
        Some(x) if x.fract() == 0.0 => format!("{x:.0}"),
        Some(x) => format!("{x:.1}"),
    }
}

pub fn to_csv(rows: &[BenchRow], omit_timing: bool) -> String {
    let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut csv = format!("{CSV_HEADER}\n");
    for r in rows {
        let millis = if omit_timing { 0 } else { r.millis };
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.seed,
            r.algo,
            r.nh,
            r.nt,
            r.nm,
            r.na,
            r.k,
            r.e,
            opt(r.tests),
            opt(r.symbols),
            millis,
            r.status
        );
    }
    let mut algos: Vec<Algorithm> = rows.iter().map(|r| r.algo).collect();
    algos.sort();
    algos.dedup();
    for algo in algos {
        let of = |col: &dyn Fn(&BenchRow) -> Option<f64>| {
            let values: Vec<f64> =
                rows.iter().filter(|r| r.algo == algo).map(|r| col(r).unwrap_or(f64::INFINITY)).collect();
            [0.25, 0.5, 0.75].map(|q| fmt_stat(percentile(&values, q))).join("/")
        };
        let ok = rows.iter().filter(|r| r.algo == algo && r.status == Status::Ok).count();
        let total = rows.iter().filter(|r| r.algo == algo).count();
        let millis = if omit_timing { "-".to_string() } else { of(&|r| Some(r.millis as f64)) };
        let _ = writeln!(
            csv,
            "# {algo}: ok {ok}/{total}; p25/p50/p75 tests {}; symbols {}; millis {}",
            of(&|r| r.tests.map(|x| x as f64)),
            of(&|r| r.symbols.map(|x| x as f64)),
            millis
        );
    }
    csv
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> BenchmarkConfig {
        BenchmarkConfig { head_states: 3, tail_states: 2, head_inputs: 3, count: 3, seed: 42, ..Default::default() }
    }

    #[test]
    fn empty_run_is_header_only() {
        let cfg = BenchmarkConfig { count: 0, ..small() };
        let rows = run_experiment(&cfg, &Algorithm::ALL).unwrap();
        assert_eq!(to_csv(&rows, true), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn identical_seeds_give_identical_rows() {
        let cfg = small();
        let a = to_csv(&run_experiment(&cfg, &Algorithm::ALL).unwrap(), true);
        let b = to_csv(&run_experiment(&cfg, &Algorithm::ALL).unwrap(), true);
        assert_eq!(a, b);
        assert_eq!(a.lines().filter(|l| !l.starts_with('#')).count(), 1 + 3 * 4);
    }

    #[test]
    fn percentiles_interpolate() {
        let v = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(percentile(&v, 0.5), Some(2.5));
        assert_eq!(percentile(&v, 0.0), Some(1.0));
        assert_eq!(percentile(&v, 1.0), Some(4.0));
        assert_eq!(percentile(&[1.0, f64::INFINITY, f64::INFINITY], 0.5), Some(f64::INFINITY));
        assert_eq!(percentile(&[], 0.5), None);
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("h-method".parse::<Algorithm>().is_err());
    }
}
