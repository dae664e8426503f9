use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use recon_core::logic::{canonicalize, Sentence, Symbol};
use recon_core::oracle::DEFAULT_WORK_LIMIT;
use recon_core::{
    assess, check_miner, check_round_trip, decode_sentence, encode_theory, extract_theory,
    flatten_layers, greedy_invent, parse_bias, parse_definitions, parse_kb, parse_theory, stack,
    DefinitionSet, Error, Invention, InventionConfig, KnowledgeBase, LanguageBias, LayerConfig,
    Measure, ObjectiveParams, Result as CoreResult, Theory,
};

/// Mine relational patterns, invent hidden predicates, and measure how well
/// they reconstruct the mined theory.
#[derive(Parser, Debug)]
#[command(name = "recon", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Extract every bias-conforming sentence true in a KB.
    Mine {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long)]
        bias: Option<PathBuf>,
        /// Theory file to write; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        jobs: Jobs,
    },
    /// Greedily invent hidden predicates for a mined or supplied theory.
    Invent {
        #[arg(long)]
        kb: Option<PathBuf>,
        /// Use these sentences as the theory instead of mining one.
        #[arg(long)]
        theory: Option<PathBuf>,
        #[command(flatten)]
        invention: InventionArgs,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        jobs: Jobs,
    },
    /// Rewrite a theory over hidden predicates; uncovered sentences go to stderr.
    Encode {
        #[arg(long)]
        theory: PathBuf,
        #[arg(long)]
        defs: PathBuf,
        #[arg(long)]
        hidden_bias: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        jobs: Jobs,
    },
    /// Expand a hidden theory back into the observed vocabulary.
    Decode {
        #[arg(long)]
        theory: PathBuf,
        #[arg(long)]
        defs: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the reconstruction report of a theory under given definitions.
    Eval {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long)]
        theory: PathBuf,
        #[arg(long)]
        defs: PathBuf,
        #[arg(long)]
        hidden_bias: Option<PathBuf>,
        #[command(flatten)]
        objective: ObjectiveArgs,
        #[command(flatten)]
        jobs: Jobs,
    },
    /// Repeat mining and invention over successive hidden KBs.
    Stack {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long, default_value_t = 2)]
        layers: usize,
        #[command(flatten)]
        invention: InventionArgs,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        jobs: Jobs,
    },
    /// Compare the miner with the exhaustive oracle and check codec round-trips
    /// on seeded random instances.
    OracleCheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        instances: usize,
        #[arg(long, default_value_t = 100)]
        round_trips: usize,
        /// Check a deliberately broken miner instead (the run must fail).
        #[arg(long, hide = true)]
        mutate: bool,
        #[command(flatten)]
        jobs: Jobs,
    },
}

#[derive(Args, Debug, Clone)]
struct Jobs {
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct ObjectiveArgs {
    /// Weight of spurious sentences in the loss.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Weight of definition body atoms under mdl.
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    /// Weight per definition under sparsity.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// mdl, sparsity or fact_compression.
    #[arg(long, default_value = "mdl")]
    measure: String,
}

#[derive(Args, Debug, Clone)]
struct InventionArgs {
    /// Mining bias (first layer).
    #[arg(long)]
    bias: Option<PathBuf>,
    /// Bias for definition bodies.
    #[arg(long)]
    def_bias: Option<PathBuf>,
    /// Bias for hidden sentences; also the mining bias of upper layers.
    #[arg(long)]
    hidden_bias: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    objective: ObjectiveArgs,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn bias(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
    fn config(message: impl Into<String>) -> Self {
        Failure {
            code: 3,
            message: message.into(),
        }
    }
    fn invariant(message: impl Into<String>) -> Self {
        Failure {
            code: 4,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Syntax { .. }
            | Error::ArityConflict { .. }
            | Error::NonGroundFact { .. }
            | Error::VocabularyMismatch(_)
            | Error::UnknownHiddenPredicate(_)
            | Error::ArityMismatch { .. }
            | Error::InvalidDefinition(_) => 1,
            Error::InvalidBias(_) => 2,
            Error::UnknownMeasure(_)
            | Error::InvalidConfig(_)
            | Error::WorkLimitExceeded { .. } => 3,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

type Outcome<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Outcome {
    let jobs = match &command {
        Command::Mine { jobs, .. }
        | Command::Invent { jobs, .. }
        | Command::Encode { jobs, .. }
        | Command::Eval { jobs, .. }
        | Command::Stack { jobs, .. }
        | Command::OracleCheck { jobs, .. } => jobs.jobs,
        Command::Decode { .. } => None,
    };
    if jobs == Some(0) {
        return Err(Failure::config("--jobs must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Failure::config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| dispatch(command))
}

fn dispatch(command: Command) -> Outcome {
    match command {
        Command::Mine { kb, bias, out, .. } => cmd_mine(&kb, bias.as_deref(), out.as_deref()),
        Command::Invent {
            kb,
            theory,
            invention,
            out,
            ..
        } => cmd_invent(kb.as_deref(), theory.as_deref(), &invention, &out),
        Command::Encode {
            theory,
            defs,
            hidden_bias,
            out,
            ..
        } => cmd_encode(&theory, &defs, hidden_bias.as_deref(), out.as_deref()),
        Command::Decode { theory, defs, out } => cmd_decode(&theory, &defs, out.as_deref()),
        Command::Eval {
            kb,
            theory,
            defs,
            hidden_bias,
            objective,
            ..
        } => cmd_eval(&kb, &theory, &defs, hidden_bias.as_deref(), &objective),
        Command::Stack {
            kb,
            layers,
            invention,
            out,
            ..
        } => cmd_stack(&kb, layers, &invention, &out),
        Command::OracleCheck {
            seed,
            instances,
            round_trips,
            mutate,
            ..
        } => cmd_oracle_check(seed, instances, round_trips, mutate),
    }
}

fn read(path: &Path) -> Outcome<String> {
    fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Outcome {
    fs::write(path, contents)
        .map_err(|e| Failure::config(format!("cannot write {}: {e}", path.display())))
}

fn emit(out: Option<&Path>, contents: &str) -> Outcome {
    match out {
        Some(p) => write(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn in_file<T>(path: &Path, r: CoreResult<T>) -> Outcome<T> {
    r.map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    })
}

fn load_kb(path: &Path) -> Outcome<KnowledgeBase> {
    in_file(path, parse_kb(&read(path)?))
}

fn load_bias(path: Option<&Path>, default: LanguageBias) -> Outcome<LanguageBias> {
    match path {
        Some(p) => in_file(p, parse_bias(&read(p)?)),
        None => Ok(default),
    }
}

fn load_defs(path: &Path) -> Outcome<DefinitionSet> {
    in_file(path, parse_definitions(&read(path)?))
}

fn load_sentences(path: &Path) -> Outcome<Vec<Sentence>> {
    in_file(path, parse_theory(&read(path)?))
}

fn theory_text(t: &Theory) -> String {
    t.lines().into_iter().map(|l| l + "\n").collect()
}

fn sentence_lines<'a>(sentences: impl IntoIterator<Item = &'a Sentence>) -> String {
    let mut lines: Vec<String> = sentences.into_iter().map(|s| s.to_string()).collect();
    lines.sort();
    lines.dedup();
    lines.into_iter().map(|l| l + "\n").collect()
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}

impl ObjectiveArgs {
    fn params(&self) -> Outcome<ObjectiveParams> {
        let params = ObjectiveParams {
            lambda: self.lambda,
            gamma: self.gamma,
            alpha: self.alpha,
            measure: self.measure.parse::<Measure>()?,
        };
        params.validate()?;
        Ok(params)
    }
}

fn default_mining_bias() -> LanguageBias {
    LanguageBias::default()
}

struct Resolved {
    mining_bias: LanguageBias,
    config: InventionConfig,
}

impl InventionArgs {
    fn resolve(&self) -> Outcome<Resolved> {
        let defaults = InventionConfig::default();
        let config = InventionConfig {
            def_bias: load_bias(self.def_bias.as_deref(), defaults.def_bias)?,
            hidden_bias: load_bias(self.hidden_bias.as_deref(), defaults.hidden_bias)?,
            budget: self.budget,
            objective: self.objective.params()?,
            seed: self.seed,
        };
        config.validate()?;
        Ok(Resolved {
            mining_bias: load_bias(self.bias.as_deref(), default_mining_bias())?,
            config,
        })
    }
}

/// Everything that determines a run's outputs; worker count and output
/// location are deliberately absent.
#[derive(Serialize)]
struct RunManifest {
    command: &'static str,
    kb: Option<String>,
    theory: Option<String>,
    bias: Option<String>,
    def_bias: Option<String>,
    hidden_bias: Option<String>,
    mining_bias_effective: String,
    def_bias_effective: String,
    hidden_bias_effective: String,
    lambda: f64,
    gamma: f64,
    alpha: f64,
    measure: String,
    budget: usize,
    layers: usize,
    seed: u64,
}

impl RunManifest {
    fn new(
        command: &'static str,
        kb: Option<&Path>,
        theory: Option<&Path>,
        args: &InventionArgs,
        r: &Resolved,
        layers: usize,
    ) -> Self {
        let shown = |p: Option<&Path>| p.map(|p| p.display().to_string());
        let o = &r.config.objective;
        RunManifest {
            command,
            kb: shown(kb),
            theory: shown(theory),
            bias: shown(args.bias.as_deref()),
            def_bias: shown(args.def_bias.as_deref()),
            hidden_bias: shown(args.hidden_bias.as_deref()),
            mining_bias_effective: r.mining_bias.summary(),
            def_bias_effective: r.config.def_bias.summary(),
            hidden_bias_effective: r.config.hidden_bias.summary(),
            lambda: o.lambda,
            gamma: o.gamma,
            alpha: o.alpha,
            measure: o.measure.to_string(),
            budget: r.config.budget,
            layers,
            seed: r.config.seed,
        }
    }
}

fn cmd_mine(kb: &Path, bias: Option<&Path>, out: Option<&Path>) -> Outcome {
    let kb = load_kb(kb)?;
    let bias = load_bias(bias, default_mining_bias())?;
    let t = extract_theory(&kb, &bias, &kb.predicate_names())?;
    emit(out, &theory_text(&t))?;
    eprintln!("{} sentences", t.len());
    Ok(())
}

/// Theory-revision input: sentences must already fit the mining bias.
fn supplied_theory(path: &Path, bias: &LanguageBias) -> Outcome<Theory> {
    let t = Theory::from_sentences(load_sentences(path)?);
    if let Some(s) = t.iter().find(|s| !bias.conforms(s)) {
        return Err(Failure::bias(format!(
            "{}: `{s}` does not conform to the bias",
            path.display()
        )));
    }
    Ok(t)
}

fn check_emitted(defs: &DefinitionSet) -> Outcome {
    match defs.iter().find(|d| d.body().len() < 2) {
        Some(d) => Err(Failure::invariant(format!(
            "definition with a body under two atoms: {d}"
        ))),
        None => Ok(()),
    }
}

fn check_trace(inv: &Invention) -> Outcome {
    let mut last = inv.initial.objective;
    for r in &inv.trace {
        if r.objective >= last {
            return Err(Failure::invariant(
                "objective trace is not strictly decreasing",
            ));
        }
        last = r.objective;
    }
    Ok(())
}

fn write_invention(dir: &Path, theory: &Theory, inv: &Invention) -> Outcome {
    check_emitted(&inv.definitions)?;
    check_trace(inv)?;
    fs::create_dir_all(dir)
        .map_err(|e| Failure::config(format!("cannot create {}: {e}", dir.display())))?;
    write(&dir.join("theory.thy"), &theory_text(theory))?;
    write(&dir.join("definitions.def"), &inv.definitions.to_text())?;
    write(&dir.join("hidden.kb"), &inv.hidden_kb.kb().to_fact_text())?;
    write(&dir.join("trace.json"), &json(&inv.trace))?;
    write(&dir.join("report.json"), &json(&inv.report))
}

fn cmd_invent(
    kb: Option<&Path>,
    theory: Option<&Path>,
    args: &InventionArgs,
    out: &Path,
) -> Outcome {
    let Some(kb_path) = kb else {
        let hint = if theory.is_some() {
            "--theory also needs --kb"
        } else {
            "give --kb (and optionally --theory)"
        };
        return Err(Failure::config(hint));
    };
    let resolved = args.resolve()?;
    let kb = load_kb(kb_path)?;
    let t = match theory {
        Some(p) => supplied_theory(p, &resolved.mining_bias)?,
        None => extract_theory(&kb, &resolved.mining_bias, &kb.predicate_names())?,
    };
    let inv = greedy_invent(&kb, &t, &resolved.config)?;
    write_invention(out, &t, &inv)?;
    let manifest = RunManifest::new("invent", Some(kb_path), theory, args, &resolved, 1);
    write(&out.join("run.json"), &json(&manifest))?;
    eprintln!(
        "{} definitions, loss {}, objective {}",
        inv.definitions.len(),
        inv.report.loss,
        inv.report.objective
    );
    Ok(())
}

fn cmd_encode(
    theory: &Path,
    defs: &Path,
    hidden_bias: Option<&Path>,
    out: Option<&Path>,
) -> Outcome {
    let t = Theory::from_sentences(load_sentences(theory)?);
    let defs = load_defs(defs)?;
    let hidden_bias = load_bias(hidden_bias, InventionConfig::default().hidden_bias)?;
    let enc = encode_theory(&t, &defs, &hidden_bias);
    emit(out, &sentence_lines(enc.encoded.values()))?;
    for s in &enc.uncovered {
        eprintln!("uncovered: {s}");
    }
    Ok(())
}

fn cmd_decode(theory: &Path, defs: &Path, out: Option<&Path>) -> Outcome {
    let hidden = load_sentences(theory)?;
    let defs = load_defs(defs)?;
    let decoded: BTreeSet<Sentence> = hidden
        .iter()
        .map(|e| decode_sentence(&canonicalize(e), &defs))
        .collect::<CoreResult<_>>()?;
    emit(out, &sentence_lines(&decoded))
}

fn cmd_eval(
    kb: &Path,
    theory: &Path,
    defs: &Path,
    hidden_bias: Option<&Path>,
    objective: &ObjectiveArgs,
) -> Outcome {
    let params = objective.params()?;
    let kb = load_kb(kb)?;
    let t = Theory::from_sentences(load_sentences(theory)?);
    let defs = load_defs(defs)?;
    let hidden_bias = load_bias(hidden_bias, InventionConfig::default().hidden_bias)?;
    let eval = assess(&kb, &t, &defs, &hidden_bias, &params)?;
    print!("{}", json(&eval.report));
    Ok(())
}

fn cmd_stack(kb_path: &Path, layers: usize, args: &InventionArgs, out: &Path) -> Outcome {
    if layers == 0 {
        return Err(Failure::config("--layers must be at least 1"));
    }
    let resolved = args.resolve()?;
    let kb = load_kb(kb_path)?;
    let configs: Vec<LayerConfig> = (0..layers)
        .map(|l| LayerConfig {
            mining_bias: if l == 0 {
                resolved.mining_bias.clone()
            } else {
                resolved.config.hidden_bias.clone()
            },
            invention: resolved.config.clone(),
        })
        .collect();
    let built = stack(&kb, &configs)?;
    for (l, layer) in built.iter().enumerate() {
        write_invention(
            &out.join(format!("layer{}", l + 1)),
            &layer.theory,
            &layer.invention,
        )?;
    }
    let sets: Vec<DefinitionSet> = built
        .iter()
        .map(|l| l.invention.definitions.clone())
        .collect();
    write(
        &out.join("flattened.def"),
        &flatten_layers(&sets)?.to_text(),
    )?;
    let manifest = RunManifest::new("stack", Some(kb_path), None, args, &resolved, layers);
    write(&out.join("run.json"), &json(&manifest))?;
    for (l, layer) in built.iter().enumerate() {
        eprintln!(
            "layer {}: {} sentences, {} definitions, objective {}",
            l + 1,
            layer.theory.len(),
            layer.invention.definitions.len(),
            layer.invention.report.objective
        );
    }
    Ok(())
}

/// Stand-in for a faulty miner: loses the last sentence of every theory.
fn mutated_miner(
    kb: &KnowledgeBase,
    bias: &LanguageBias,
    vocab: &BTreeSet<Symbol>,
) -> CoreResult<Theory> {
    let t = extract_theory(kb, bias, vocab)?;
    let mut kept: Vec<Sentence> = t.iter().cloned().collect();
    kept.pop();
    Ok(Theory::from_sentences(kept))
}

fn work_limit() -> Outcome<u64> {
    match std::env::var("RECON_WORK_LIMIT") {
        Ok(v) => v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            Failure::config(format!(
                "RECON_WORK_LIMIT must be a positive integer, got `{v}`"
            ))
        }),
        Err(_) => Ok(DEFAULT_WORK_LIMIT),
    }
}

fn cmd_oracle_check(seed: u64, instances: usize, round_trips: usize, mutate: bool) -> Outcome {
    if instances == 0 {
        return Err(Failure::config("--instances must be at least 1"));
    }
    let limit = work_limit()?;
    let miner: recon_core::harness::Miner = if mutate {
        mutated_miner
    } else {
        extract_theory
    };
    let mined = check_miner(seed, instances, miner, limit);
    println!("miner vs oracle: {mined}");
    let trips = check_round_trip(seed, round_trips);
    println!("round trip: {trips}");
    let failures: Vec<&String> = mined.failures.iter().chain(&trips.failures).collect();
    for f in failures.iter().take(10) {
        eprintln!("  {f}");
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::invariant(format!(
            "{} failing instances",
            failures.len()
        )))
    }
}
