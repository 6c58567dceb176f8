//! `gearsyn` command-line front end.
//!
//! Exit codes: 0 success, 1 domain failure (invalid sequence, failed search,
//! bad parameters), 2 environment failure (I/O, unreachable completer).

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use gearsyn_core::catalogue::CATALOGUE_VERSION;
use gearsyn_core::datasetgen::{generate_dataset, read_records, split, write_splits, DEFAULT_TEST_FRAC, DEFAULT_VAL_FRAC};
use gearsyn_core::dsl::{vocabulary_hash, vocabulary_text, weight_coefficients, MAX_COMPONENTS};
use gearsyn_core::search::{
    benchmark_problems, fitness_breakdown, random_search, run_benchmark, serve, BenchmarkConfig, CompleterError,
    Method, RandomCompleter, RequirementObjective, StreamCompleter,
};
use gearsyn_core::{
    check_interference, eda_search, evaluate_set, load_catalogue, mcts_search, simulate, Catalogue, CatalogueError,
    Completer, DatasetConfig, DatasetError, EvalReport, FitnessWeights, GearSequence, Grammar, Interference,
    Requirements, SearchConfig, SearchError, SimResult,
};

#[derive(Parser, Debug)]
#[command(name = "gearsyn", version, about = "Gear-train sequence grammar, simulation, datasets and search")]
struct Cli {
    /// Parts catalogue file; the built-in catalogue is used when absent.
    #[arg(long, global = true, env = "GEARSYN_CATALOGUE")]
    catalogue: Option<PathBuf>,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Size of the evaluation thread pool (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Check each line of a sequence file against the grammar.
    Validate { file: PathBuf },
    /// Simulate each line of a sequence file.
    Simulate {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Generate a dataset of feasible sequences with their requirement vectors.
    GenDataset {
        #[arg(long, short)]
        n: usize,
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long, default_value_t = MAX_COMPONENTS)]
        max_components: usize,
    },
    /// Shuffle a dataset into train/val/test files.
    Split {
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = DEFAULT_VAL_FRAC)]
        val_frac: f64,
        #[arg(long, default_value_t = DEFAULT_TEST_FRAC)]
        test_frac: f64,
    },
    /// Search for a sequence meeting one or more requirement vectors.
    Search {
        #[arg(long, default_value = "eda")]
        method: Method,
        /// Eight values: tau_in tau_out s px py pz m_index m_sign.
        #[arg(long, num_args = 1..=8, allow_negative_numbers = true, conflicts_with = "req_file", required_unless_present = "req_file")]
        req: Vec<String>,
        /// One requirement vector per line (dataset lines are accepted too).
        #[arg(long)]
        req_file: Option<PathBuf>,
        #[arg(long)]
        budget: Option<usize>,
        #[command(flatten)]
        tuning: Tuning,
        /// `random`, `exec:PROGRAM [ARGS]` or `HOST:PORT`.
        #[arg(long)]
        completer: Option<String>,
        /// Emit one JSON object per problem.
        #[arg(long)]
        json: bool,
    },
    /// Compare methods on a fixed problem set.
    Benchmark {
        /// Comma-separated methods; defaults to eda,mcts,random plus the
        /// hybrids when a completer is given.
        #[arg(long, value_delimiter = ',')]
        methods: Vec<Method>,
        #[arg(long, default_value_t = 10)]
        problems: usize,
        /// Component limit of the generated problems.
        #[arg(long, default_value_t = 6)]
        problem_components: usize,
        /// Seed of the problem sampler (independent of --seed).
        #[arg(long, default_value_t = 0)]
        problem_seed: u64,
        /// Use these requirement vectors instead of generated problems.
        #[arg(long)]
        req_file: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        pure_budget: usize,
        #[arg(long, default_value_t = 1_000)]
        hybrid_budget: usize,
        #[command(flatten)]
        tuning: Tuning,
        #[arg(long)]
        completer: Option<String>,
        /// Also write the full reports as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Score predictions given as `requirements | sequence` lines.
    Eval {
        input: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Print the token vocabulary file.
    Vocab {
        /// Print only its SHA-256.
        #[arg(long, conflicts_with = "weights")]
        hash: bool,
        /// Print `token<TAB>weight_kg` per id instead (zero for non-parts).
        #[arg(long)]
        weights: bool,
    },
    /// Serve the random completer over the completer protocol.
    ServeRandom {
        /// Listen on this TCP address instead of stdin/stdout.
        #[arg(long)]
        listen: Option<String>,
        /// Exit after the first connection.
        #[arg(long)]
        once: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Record,
}

#[derive(clap::Args, Debug, Clone, Copy)]
struct Tuning {
    #[arg(long, default_value_t = 6)]
    prefix_len: usize,
    #[arg(long, default_value_t = 100)]
    population: usize,
    #[arg(long, default_value_t = 0.2)]
    elite_frac: f64,
    #[arg(long, default_value_t = 0.1)]
    smoothing: f64,
    /// UCB exploration constant.
    #[arg(long, default_value_t = 1.4)]
    c: f64,
    #[arg(long, default_value_t = MAX_COMPONENTS)]
    max_components: usize,
}

impl Tuning {
    fn config(&self, budget: usize, seed: u64) -> SearchConfig {
        SearchConfig {
            budget,
            prefix_len: self.prefix_len,
            population: self.population,
            elite_frac: self.elite_frac,
            smoothing: self.smoothing,
            c: self.c,
            max_components: self.max_components,
            seed,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

/// 2 when any cause is an I/O or connectivity failure, 1 otherwise.
fn exit_code(err: &anyhow::Error) -> u8 {
    let env = err.chain().any(|cause| {
        cause.is::<io::Error>()
            || matches!(cause.downcast_ref::<CatalogueError>(), Some(CatalogueError::Io(_)))
            || matches!(
                cause.downcast_ref::<DatasetError>(),
                Some(DatasetError::Io(_) | DatasetError::OutputUnwritable(_))
            )
            || matches!(
                cause.downcast_ref::<CompleterError>(),
                Some(CompleterError::Unreachable(_) | CompleterError::Io(_))
            )
            || matches!(
                cause.downcast_ref::<SearchError>(),
                Some(SearchError::Completer(CompleterError::Unreachable(_) | CompleterError::Io(_)))
            )
    });
    if env {
        2
    } else {
        1
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.workers {
        if n == 0 {
            bail!("--workers must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("cannot size the worker pool")?;
    }
    let cat = match &cli.catalogue {
        Some(path) => load_catalogue(path).with_context(|| format!("loading catalogue {}", path.display()))?,
        None => Catalogue::builtin(),
    };
    let ctx = Ctx { cat: &cat, seed: cli.seed };
    match cli.cmd {
        Cmd::Validate { file } => ctx.validate(&file),
        Cmd::Simulate { file, format } => ctx.simulate(&file, format),
        Cmd::GenDataset { n, out, max_components } => ctx.gen_dataset(n, &out, max_components),
        Cmd::Split { input, out_dir, val_frac, test_frac } => ctx.split(&input, &out_dir, val_frac, test_frac),
        Cmd::Search { method, req, req_file, budget, tuning, completer, json } => {
            let problems = match req_file {
                Some(path) => read_requirements(&path)?,
                None => vec![req.join(" ").parse::<Requirements>().context("parsing --req")?],
            };
            ctx.search(method, &problems, budget, tuning, completer.as_deref(), json)
        }
        Cmd::Benchmark {
            methods,
            problems,
            problem_components,
            problem_seed,
            req_file,
            pure_budget,
            hybrid_budget,
            tuning,
            completer,
            json,
        } => {
            let reqs = match req_file {
                Some(path) => read_requirements(&path)?,
                None => {
                    let ps = benchmark_problems(problems, problem_components, problem_seed, &cat);
                    if ps.len() < problems {
                        bail!("only {} distinct feasible problems could be drawn", ps.len());
                    }
                    ps.into_iter().map(|(r, _)| r).collect()
                }
            };
            let cfg = BenchmarkConfig {
                search: tuning.config(pure_budget, cli.seed),
                pure_budget,
                hybrid_budget,
                weights: FitnessWeights::default(),
            };
            ctx.benchmark(&reqs, methods, &cfg, completer.as_deref(), json.as_deref())
        }
        Cmd::Eval { input, json } => ctx.eval(&input, json),
        Cmd::Vocab { hash, weights } => {
            if hash {
                println!("{}", vocabulary_hash());
            } else if weights {
                for (token, w) in vocabulary_text().lines().zip(weight_coefficients(&cat)) {
                    println!("{token}\t{w}");
                }
            } else {
                print!("{}", vocabulary_text());
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::ServeRandom { listen, once } => ctx.serve_random(listen.as_deref(), once),
    }
}

struct Ctx<'c> {
    cat: &'c Catalogue,
    seed: u64,
}

/// Non-blank, non-comment lines with their 1-based line numbers.
fn content_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.with_context(|| format!("reading {}", path.display()))?;
        let trimmed = line.trim();
        if !trimmed.is_empty() && !trimmed.starts_with('#') {
            out.push((i + 1, trimmed.to_string()));
        }
    }
    Ok(out)
}

/// Requirement vectors, one per line; for `requirements | sequence` lines
/// only the part before the separator is used.
fn read_requirements(path: &Path) -> Result<Vec<Requirements>> {
    let lines = content_lines(path)?;
    if lines.is_empty() {
        bail!("{} holds no requirement vectors", path.display());
    }
    lines
        .into_iter()
        .map(|(n, line)| {
            let head = line.split('|').next().unwrap_or("");
            head.parse::<Requirements>().with_context(|| format!("{}:{n}", path.display()))
        })
        .collect()
}

fn vec3(v: [f64; 3]) -> String {
    format!("({}, {}, {})", v[0], v[1], v[2])
}

fn describe(res: &SimResult) -> String {
    format!(
        "s={} p={} m={} tau_in={} tau_out={} weight_kg={}",
        res.s,
        vec3(res.p),
        res.m,
        res.tau_in.code(),
        res.tau_out.code(),
        res.weight_kg
    )
}

impl Ctx<'_> {
    fn header(&self, out: &mut impl Write, cmd: &str, extra: &str) -> io::Result<()> {
        write!(out, "# gearsyn {cmd} seed={} catalogue={}", self.seed, self.cat.version())?;
        if !extra.is_empty() {
            write!(out, " {extra}")?;
        }
        writeln!(out)
    }

    fn validate(&self, path: &Path) -> Result<ExitCode> {
        let lines = content_lines(path)?;
        let grammar = Grammar::new(self.cat);
        let mut out = BufWriter::new(io::stdout().lock());
        self.header(&mut out, "validate", "")?;
        let mut failures = 0;
        for (n, line) in lines {
            let verdict = match line.parse::<GearSequence>() {
                Err(e) => Err(e.to_string()),
                Ok(seq) => grammar.validate(&seq).map_err(|v| v.to_string()),
            };
            match verdict {
                Ok(()) => writeln!(out, "{n}: ok")?,
                Err(e) => {
                    failures += 1;
                    writeln!(out, "{n}: {e}")?;
                }
            }
        }
        out.flush()?;
        Ok(if failures == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
    }

    fn simulate(&self, path: &Path, format: Format) -> Result<ExitCode> {
        let mut results = Vec::new();
        let mut bad = Vec::new();
        for (n, line) in content_lines(path)? {
            let sim = line
                .parse::<GearSequence>()
                .map_err(|e| e.to_string())
                .and_then(|seq| simulate(&seq, self.cat).map_err(|e| e.to_string()));
            match sim {
                Ok(res) => results.push((n, res)),
                Err(e) => bad.push(format!("line {n}: {e}")),
            }
        }
        if !bad.is_empty() {
            for b in &bad {
                eprintln!("{b}");
            }
            bail!("{} invalid line(s) in {}", bad.len(), path.display());
        }
        let mut out = BufWriter::new(io::stdout().lock());
        self.header(&mut out, "simulate", "")?;
        for (n, res) in results {
            let feasible = check_interference(&res.placements);
            match format {
                Format::Table => {
                    let f = match feasible {
                        Interference::Feasible => "feasible".to_string(),
                        Interference::Collision(i, j) => format!("collision {i}-{j}"),
                    };
                    writeln!(out, "{n}: {} {f}", describe(&res))?;
                }
                Format::Record => writeln!(out, "{}", serde_json::to_string(&res.to_record())?)?,
            }
        }
        out.flush()?;
        Ok(ExitCode::SUCCESS)
    }

    fn gen_dataset(&self, n: usize, out: &Path, max_components: usize) -> Result<ExitCode> {
        let cfg = DatasetConfig { n_target: n, max_components, seed: self.seed };
        let m = generate_dataset(cfg, self.cat, out)?;
        let mut so = io::stdout().lock();
        self.header(&mut so, "gen-dataset", &format!("vocab={}", m.vocab_hash))?;
        writeln!(
            so,
            "wrote {} records to {} ({} draws: {} infeasible, {} duplicate, {} invalid rejected)",
            m.accepted,
            out.display(),
            m.draws,
            m.rejected_infeasible,
            m.rejected_duplicate,
            m.rejected_invalid
        )?;
        Ok(ExitCode::SUCCESS)
    }

    fn split(&self, input: &Path, dir: &Path, val: f64, test: f64) -> Result<ExitCode> {
        let records = read_records(input)?;
        let s = split(records, val, test, self.seed)?;
        write_splits(dir, &s)?;
        let mut so = io::stdout().lock();
        self.header(&mut so, "split", "")?;
        writeln!(so, "train={} val={} test={} in {}", s.train.len(), s.val.len(), s.test.len(), dir.display())?;
        Ok(ExitCode::SUCCESS)
    }

    fn completer(&self, spec: &str) -> Result<Box<dyn Completer + '_>> {
        if spec == "random" {
            return Ok(Box::new(RandomCompleter::new(self.cat, self.seed)));
        }
        if let Some(cmd) = spec.strip_prefix("exec:") {
            let mut words = cmd.split_whitespace().map(String::from);
            let program = words.next().ok_or_else(|| anyhow!("exec: needs a program"))?;
            let args: Vec<String> = words.collect();
            return Ok(Box::new(StreamCompleter::spawn(&program, &args)?));
        }
        Ok(Box::new(StreamCompleter::connect(spec)?))
    }

    fn search(
        &self,
        method: Method,
        problems: &[Requirements],
        budget: Option<usize>,
        tuning: Tuning,
        completer: Option<&str>,
        json: bool,
    ) -> Result<ExitCode> {
        let mut comp = match (method.needs_completer(), completer) {
            (true, Some(spec)) => Some(self.completer(spec)?),
            (true, None) => bail!("method {method} needs --completer"),
            (false, _) => None,
        };
        let defaults = BenchmarkConfig::default();
        let budget = budget.unwrap_or(defaults.budget(method));
        let cfg = tuning.config(budget, self.seed);
        let weights = FitnessWeights::default();
        let mut out = BufWriter::new(io::stdout().lock());
        if !json {
            self.header(&mut out, "search", &format!("method={method} budget={budget}"))?;
        }
        let mut missing = 0;
        for (i, req) in problems.iter().enumerate() {
            let objective = RequirementObjective::new(*req, weights, self.cat);
            let c = comp.as_deref_mut().map(|c| c as &mut dyn Completer);
            let outcome = match method {
                Method::Eda | Method::EdaCompleter => eda_search(&objective, &cfg, self.cat, c)?,
                Method::Mcts | Method::MctsCompleter => mcts_search(&objective, &cfg, self.cat, c)?,
                Method::Random => random_search(&objective, &cfg, self.cat)?,
                Method::Completer => {
                    let mut bm = run_benchmark(
                        std::slice::from_ref(req),
                        &[Method::Completer],
                        &BenchmarkConfig { search: cfg, ..defaults },
                        self.cat,
                        c,
                    )?;
                    let p = bm.remove(0).problems.remove(0);
                    let seq = p.best.as_deref().map(|s| s.parse::<GearSequence>()).transpose()?;
                    self.print_best(&mut out, i, req, seq.as_ref(), p.score, p.evaluations, 0.0, json)?;
                    missing += usize::from(seq.is_none());
                    continue;
                }
            };
            let best = outcome.best.as_ref();
            self.print_best(
                &mut out,
                i,
                req,
                best.map(|b| &b.sequence),
                best.map(|b| b.eval.score),
                outcome.evaluations,
                outcome.elapsed.as_secs_f64(),
                json,
            )?;
            missing += usize::from(best.is_none());
        }
        out.flush()?;
        Ok(if missing == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
    }

    #[allow(clippy::too_many_arguments)]
    fn print_best(
        &self,
        out: &mut impl Write,
        index: usize,
        req: &Requirements,
        seq: Option<&GearSequence>,
        score: Option<f64>,
        evaluations: usize,
        seconds: f64,
        json: bool,
    ) -> Result<()> {
        let sim = seq.and_then(|s| simulate(s, self.cat).ok());
        let breakdown = seq.and_then(|s| fitness_breakdown(req, s, self.cat));
        if json {
            let v = serde_json::json!({
                "problem": index,
                "seed": self.seed,
                "catalogue": self.cat.version(),
                "requirements": req.to_array(),
                "best": seq.map(|s| s.to_string()),
                "score": score,
                "feasible": breakdown.map(|b| !b.infeasible),
                "result": sim.as_ref().map(|r| r.to_record()),
                "breakdown": breakdown,
                "evaluations": evaluations,
                "wall_seconds": seconds,
            });
            writeln!(out, "{v}")?;
            return Ok(());
        }
        writeln!(out, "problem {index}: {req}")?;
        match (seq, sim, breakdown) {
            (Some(seq), Some(sim), Some(b)) => {
                writeln!(out, "  best: {seq}")?;
                writeln!(out, "  score: {} feasible: {}", score.unwrap_or(f64::NAN), !b.infeasible)?;
                writeln!(out, "  result: {}", describe(&sim))?;
                writeln!(
                    out,
                    "  breakdown: pos_err={} speed_err={} motvec_err={} inmot_mismatch={} outmot_mismatch={} infeasible={} weight_kg={}",
                    b.pos_err, b.speed_err, b.motvec_err, b.inmot_mismatch, b.outmot_mismatch, b.infeasible, b.weight_kg
                )?;
            }
            _ => writeln!(out, "  best: none (no valid candidate)")?,
        }
        writeln!(out, "  evaluations: {evaluations} wall_seconds: {seconds:.3}")?;
        Ok(())
    }

    fn benchmark(
        &self,
        problems: &[Requirements],
        methods: Vec<Method>,
        cfg: &BenchmarkConfig,
        completer: Option<&str>,
        json: Option<&Path>,
    ) -> Result<ExitCode> {
        let methods = if methods.is_empty() {
            let mut m = vec![Method::Eda, Method::Mcts, Method::Random];
            if completer.is_some() {
                m.splice(0..0, [Method::Completer, Method::EdaCompleter, Method::MctsCompleter]);
            }
            m
        } else {
            methods
        };
        if let Some(m) = methods.iter().find(|m| m.needs_completer()) {
            if completer.is_none() {
                bail!("method {m} needs --completer");
            }
        }
        let mut comp = completer.map(|spec| self.completer(spec)).transpose()?;
        let reports = run_benchmark(problems, &methods, cfg, self.cat, comp.as_deref_mut().map(|c| c as &mut dyn Completer))?;

        let mut out = BufWriter::new(io::stdout().lock());
        self.header(
            &mut out,
            "benchmark",
            &format!("problems={} pure_budget={} hybrid_budget={}", problems.len(), cfg.pure_budget, cfg.hybrid_budget),
        )?;
        writeln!(out, "{} {:>9} {:>10} {:>10}", EvalReport::header_line(10), "Feasible", "Cand", "s/cand")?;
        for r in &reports {
            writeln!(
                out,
                "{} {:>9} {:>10} {:>10.2e}",
                r.report.row_line(r.method.name(), 10),
                format!("{}/{}", r.feasible_best, problems.len()),
                r.candidates_per_problem,
                r.seconds_per_candidate
            )?;
        }
        out.flush()?;
        if let Some(path) = json {
            let v = serde_json::json!({
                "seed": self.seed,
                "catalogue": self.cat.version(),
                "requirements": problems.iter().map(|r| r.to_array()).collect::<Vec<_>>(),
                "reports": reports,
            });
            std::fs::write(path, serde_json::to_string_pretty(&v)? + "\n")
                .with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(ExitCode::SUCCESS)
    }

    fn eval(&self, input: &Path, json: bool) -> Result<ExitCode> {
        let pairs: Vec<_> = read_records(input)?.into_iter().map(|r| (r.requirements, r.sequence)).collect();
        let report = evaluate_set(&pairs, self.cat);
        let mut out = io::stdout().lock();
        if json {
            let v = serde_json::json!({ "seed": self.seed, "catalogue": self.cat.version(), "report": report });
            writeln!(out, "{v}")?;
        } else {
            self.header(&mut out, "eval", "")?;
            writeln!(out, "{}", EvalReport::header_line(10))?;
            writeln!(out, "{}", report.row_line(&format!("n={}", report.n_total), 10))?;
        }
        Ok(ExitCode::SUCCESS)
    }

    fn serve_random(&self, listen: Option<&str>, once: bool) -> Result<ExitCode> {
        let mut completer = RandomCompleter::new(self.cat, self.seed);
        let Some(addr) = listen else {
            // stdout carries the protocol, so no header here
            let stats = serve(&mut io::stdin().lock(), &mut io::stdout().lock(), &mut completer)?;
            eprintln!("served {} requests, {} completions", stats.requests, stats.completions);
            return Ok(ExitCode::SUCCESS);
        };
        let listener = TcpListener::bind(addr).with_context(|| format!("binding {addr}"))?;
        {
            let mut so = io::stdout().lock();
            self.header(&mut so, "serve-random", &format!("catalogue_expected={CATALOGUE_VERSION}"))?;
            writeln!(so, "listening on {}", listener.local_addr()?)?;
            so.flush()?;
        }
        for stream in listener.incoming() {
            let stream = stream?;
            let mut reader = BufReader::new(stream.try_clone()?);
            let mut writer = stream;
            match serve(&mut reader, &mut writer, &mut completer) {
                Ok(s) => eprintln!("session done: {} requests, {} completions", s.requests, s.completions),
                Err(e) => eprintln!("session ended: {e}"),
            }
            if once {
                break;
            }
        }
        Ok(ExitCode::SUCCESS)
    }
}
