//! The `monolog` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 unreadable or malformed input, 3 scorer failure in
//! strict mode.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::chunker::all_chunks;
use crate::config::FileConfig;
use crate::conllu::{check_tree, parse_conllu};
use crate::contradiction::{check_contradiction, DisjointActions};
use crate::error::Error;
use crate::eval::{attach_parses, evaluate, load, DatasetKind};
use crate::graph::{build_graph, recommend, Module};
use crate::kb::{KnowledgeBase, LexicalRelationKind, Provenance, QuantifierScale};
use crate::scoring::{OfflineScorer, ParaphraseTable, RemoteConfig, RemoteScorer, Scorer};
use crate::search::{Engine, EngineConfig};
use crate::sentence::Sentence;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SCORER: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "monolog", version, about = "Natural-logic inference over dependency parses")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Settings file with `key = value` lines
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Extra knowledge-base dump (lemma, POS, relation, lemma); repeatable
    #[arg(long, global = true)]
    kb: Vec<PathBuf>,
    /// Do not load the bundled lexicon
    #[arg(long, global = true)]
    no_bundled_kb: bool,
    /// Paraphrase table for the offline scorer (phrase, phrase, probability)
    #[arg(long, global = true)]
    paraphrase_table: Option<PathBuf>,
    /// Disjoint-action list replacing the bundled one
    #[arg(long, global = true)]
    disjoint_actions: Option<PathBuf>,
    /// Model-server base URL; defaults to $MONOLOG_SCORER_URL, else the offline scorer
    #[arg(long, global = true)]
    scorer_url: Option<String>,
    /// Fail instead of falling back when the scorer errors
    #[arg(long, global = true)]
    strict: bool,
    /// Which scorer to use; `remote` needs a model-server URL
    #[arg(long, global = true, value_enum)]
    scorer: Option<ScorerArg>,
    /// States kept per search level [default: 10]
    #[arg(long, alias = "beam", global = true)]
    beam_width: Option<usize>,
    /// Maximum number of rewrite steps [default: 7]
    #[arg(long, global = true)]
    max_depth: Option<usize>,
    /// Disable the syntactic-variation generator
    #[arg(long, global = true)]
    no_synvar: bool,
    /// Disable the lexical and phrasal generators
    #[arg(long, global = true)]
    no_monotonicity: bool,
    /// Emit JSON instead of text
    #[arg(long, global = true)]
    json: bool,
    /// More logging (repeatable)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print polarity marks for every sentence of a CoNLL-U file
    Annotate(FileArgs),
    /// Print the phrase chunks of every sentence
    Chunk(FileArgs),
    /// Align a premise with a hypothesis and show the recommended generators
    Align(PairArgs),
    /// Show the one-step rewrites of the premise towards the hypothesis
    Generate {
        #[command(flatten)]
        pair: PairArgs,
        /// Run one generator regardless of the alignment's recommendation
        #[arg(long, value_enum)]
        module: Option<ModuleArg>,
    },
    /// Run only the contradiction test
    Contradict(PairArgs),
    /// Classify a pair as ENTAIL, CONTRADICT or NEUTRAL
    Infer(PairArgs),
    /// Evaluate on a SICK- or MED-format TSV file
    Eval(EvalArgs),
    /// Inspect the knowledge base
    Kb {
        #[command(subcommand)]
        cmd: KbCommand,
    },
}

#[derive(Debug, Args)]
struct FileArgs {
    /// CoNLL-U file
    #[arg(required_unless_present = "conllu", conflicts_with = "conllu")]
    file: Option<PathBuf>,
    #[arg(long)]
    conllu: Option<PathBuf>,
}

impl FileArgs {
    fn path(&self) -> &Path {
        self.file.as_deref().or(self.conllu.as_deref()).unwrap()
    }
}

#[derive(Debug, Args)]
struct PairArgs {
    /// One CoNLL-U file holding premise then hypothesis, or two single-sentence files
    #[arg(num_args = 0..=2)]
    files: Vec<PathBuf>,
    /// Premise file (or sentence with --text)
    #[arg(long = "premise-conllu", alias = "premise", requires = "hypothesis")]
    premise: Option<PathBuf>,
    /// Hypothesis file (or sentence with --text)
    #[arg(long = "hypothesis-conllu", alias = "hypothesis", requires = "premise")]
    hypothesis: Option<PathBuf>,
    /// Treat the arguments as raw sentences, parsed by the model server
    #[arg(long)]
    text: bool,
}

impl PairArgs {
    fn inputs(&self) -> Result<Vec<PathBuf>, Failure> {
        let mut v = self.files.clone();
        v.extend(self.premise.iter().chain(&self.hypothesis).cloned());
        if v.is_empty() || v.len() > 2 {
            return Err(usage("give one CoNLL-U file with both sentences, or a premise and a hypothesis"));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScorerArg {
    Offline,
    Remote,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModuleArg {
    Lexical,
    Phrasal,
    Synvar,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DatasetArg {
    Sick,
    Med,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long, value_enum)]
    dataset: DatasetArg,
    /// Dataset TSV
    #[arg(required_unless_present = "file_flag", conflicts_with = "file_flag")]
    file: Option<PathBuf>,
    #[arg(long = "file", id = "file_flag")]
    file_flag: Option<PathBuf>,
    /// Directory with `<id>.conllu` parses; without it sentences go to the model server
    #[arg(long)]
    parses: Option<PathBuf>,
    /// Write the JSON report here
    #[arg(long, alias = "out")]
    report: Option<PathBuf>,
    /// Worker threads (0 = one per core)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum KbCommand {
    /// Related lemmas of one word
    Query {
        lemma: String,
        #[arg(default_value = "NOUN")]
        pos: String,
        /// hypernym, hyponym, synonym or antonym; all four when omitted
        relation: Option<String>,
    },
}

struct Failure {
    code: i32,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Scoring(_) => EXIT_SCORER,
            _ => EXIT_INPUT,
        };
        Failure { code, msg: e.to_string() }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, msg: msg.into() }
}

struct Setup {
    engine: Engine,
    threads: usize,
}

fn build(g: &GlobalArgs) -> Result<Setup, Failure> {
    let file = match &g.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let mut kb = if g.no_bundled_kb || file.no_bundled_kb.unwrap_or(false) {
        KnowledgeBase::new()
    } else {
        KnowledgeBase::bundled()
    };
    for p in file.kb.iter().flatten().chain(&g.kb) {
        kb.extend_from_path(p, Provenance::WordnetDump).map_err(Error::from)?;
    }
    let kb = Arc::new(kb);

    let mut cfg = EngineConfig::default();
    cfg.search.beam_width = g.beam_width.or(file.beam_width).unwrap_or(cfg.search.beam_width);
    cfg.search.max_depth = g.max_depth.or(file.max_depth).unwrap_or(cfg.search.max_depth);
    cfg.strict = g.strict || file.strict.unwrap_or(false);
    cfg.syntactic_variation = !g.no_synvar && file.syntactic_variation.unwrap_or(true);
    cfg.monotonicity = !g.no_monotonicity && file.monotonicity.unwrap_or(true);
    cfg.align_threshold = file.align_threshold.unwrap_or(cfg.align_threshold);
    cfg.paraphrase_threshold = file.paraphrase_threshold.unwrap_or(cfg.paraphrase_threshold);
    if cfg.search.beam_width == 0 {
        return Err(usage("--beam-width must be at least 1"));
    }

    let url = g
        .scorer_url
        .clone()
        .or_else(|| std::env::var("MONOLOG_SCORER_URL").ok().filter(|s| !s.is_empty()))
        .or(file.scorer_url.clone());
    let url = match g.scorer {
        Some(ScorerArg::Offline) => None,
        Some(ScorerArg::Remote) if url.is_none() => {
            return Err(usage("--scorer remote needs --scorer-url or MONOLOG_SCORER_URL"))
        }
        _ => url,
    };
    let scorer: Arc<dyn Scorer> = match url {
        Some(u) => {
            let mut rc = RemoteConfig::new(&u);
            if let Some(t) = file.scorer_timeout_secs {
                rc.timeout = Duration::from_secs(t);
            }
            Arc::new(RemoteScorer::new(rc))
        }
        None => {
            let mut s = OfflineScorer::new(kb.clone());
            if let Some(p) = g.paraphrase_table.as_ref().or(file.paraphrase_table.as_ref()) {
                s = s.with_table(ParaphraseTable::load(p).map_err(Error::from)?);
            }
            Arc::new(s)
        }
    };
    let mut engine = Engine::new(kb, scorer, cfg);
    if let Some(p) = g.disjoint_actions.as_ref().or(file.disjoint_actions.as_ref()) {
        engine = engine.with_disjoint_actions(DisjointActions::load(p).map_err(Error::from)?);
    }
    Ok(Setup { engine, threads: file.threads.unwrap_or(0) })
}

fn read_sentences(path: &Path) -> Result<Vec<Sentence>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let v = parse_conllu(&text).map_err(|e| Failure { code: EXIT_INPUT, msg: format!("{}: {}", path.display(), e) })?;
    for s in &v {
        check_tree(s).map_err(|e| Failure { code: EXIT_INPUT, msg: format!("{}: `{}`: {}", path.display(), s.text, e) })?;
    }
    Ok(v)
}

fn read_pair(args: &PairArgs, engine: &Engine) -> Result<(Sentence, Sentence), Failure> {
    let files = args.inputs()?;
    if args.text {
        if files.len() != 2 {
            return Err(usage("--text needs a premise and a hypothesis"));
        }
        let p = engine.parse_text(&files[0].to_string_lossy())?;
        let h = engine.parse_text(&files[1].to_string_lossy())?;
        return Ok((p, h));
    }
    let mut all = Vec::new();
    for f in &files {
        all.extend(read_sentences(f)?);
    }
    if all.len() != 2 {
        return Err(Failure { code: EXIT_INPUT, msg: format!("expected a premise and a hypothesis, found {} sentence(s)", all.len()) });
    }
    let h = all.pop().unwrap();
    Ok((all.pop().unwrap(), h))
}

fn emit(out: &mut dyn Write, s: &str) -> Result<(), Failure> {
    writeln!(out, "{}", s).map_err(|e| Failure { code: EXIT_INPUT, msg: format!("cannot write output: {}", e) })
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), Failure> {
    let g = &cli.global;
    let setup = build(g)?;
    let engine = &setup.engine;
    match cli.command {
        Command::Annotate(file) => {
            for s in read_sentences(file.path())? {
                let pt = engine.polarize(&s)?;
                if g.json {
                    let marks: Vec<String> = pt.token_marks().iter().map(|m| m.symbol().to_string()).collect();
                    emit(out, &json!({"text": s.text, "tree": pt.tree.render(), "marks": marks}).to_string())?;
                } else {
                    emit(out, &pt.annotate())?;
                }
            }
        }
        Command::Chunk(file) => {
            for (i, s) in read_sentences(file.path())?.iter().enumerate() {
                let chunks = all_chunks(&build_graph(s));
                if g.json {
                    emit(out, &json!({"text": s.text, "chunks": chunks}).to_string())?;
                } else {
                    if i > 0 {
                        emit(out, "")?;
                    }
                    emit(out, &format!("# {}", s.text))?;
                    for c in &chunks {
                        emit(out, &c.text)?;
                    }
                }
            }
        }
        Command::Align(args) => {
            let (p, h) = read_pair(&args, engine)?;
            let (gp, gh, a) = engine.align(&p, &h)?;
            let rec = recommend(&gp, &gh, &a);
            if g.json {
                emit(out, &serde_json::to_string_pretty(&json!({"alignment": a, "modules": rec.modules()})).unwrap())?;
            } else {
                for pair in a.pairs() {
                    let (x, y) = (p.tok(pair.premise), h.tok(pair.hypothesis));
                    emit(out, &format!("{} ~ {}\t{:.2}\t{}", x.form, y.form, pair.score, rec.premise_directive(pair.premise)))?;
                }
                for (id, d) in &rec.premise {
                    if a.partner_of_premise(*id).is_none() {
                        emit(out, &format!("{} ~ ∅\t\t{}", p.tok(*id).form, d))?;
                    }
                }
                for (id, d) in &rec.hypothesis {
                    if a.partner_of_hypothesis(*id).is_none() {
                        emit(out, &format!("∅ ~ {}\t\t{}", h.tok(*id).form, d))?;
                    }
                }
            }
        }
        Command::Generate { pair, module } => {
            let (p, h) = read_pair(&pair, engine)?;
            let pt = engine.polarize(&p)?;
            let target = engine.target(&h)?;
            let generated = match module {
                None => engine.successors(&pt, &target)?,
                Some(m) => {
                    let m = match m {
                        ModuleArg::Lexical => Module::Lexical,
                        ModuleArg::Phrasal => Module::Phrasal,
                        ModuleArg::Synvar => Module::SyntacticVariation,
                    };
                    engine.generate(m, &pt, &target)?
                }
            };
            for gsent in generated {
                emit(out, &format!("{}\t{}", gsent.edit, gsent.sentence().text))?;
            }
        }
        Command::Contradict(args) => {
            let (p, h) = read_pair(&args, engine)?;
            let pt = engine.polarize(&p)?;
            engine.target(&h)?;
            let (gp, gh, a) = engine.align(&p, &h)?;
            let lx = engine.lexicons();
            let check = check_contradiction(&gp, &gh, &a, &pt, lx);
            if g.json {
                emit(out, &serde_json::to_string_pretty(&check).unwrap())?;
            } else {
                emit(out, if check.contradiction { "CONTRADICT" } else { "NOT CONTRADICT" })?;
                for s in &check.detected {
                    let kept = check.surviving.contains(s);
                    emit(out, &format!("  {}\t{}{}", s.kind, s.detail, if kept { "" } else { "\t(cancelled)" }))?;
                }
            }
        }
        Command::Infer(args) => {
            let (p, h) = read_pair(&args, engine)?;
            let r = engine.classify(&p, &h)?;
            if g.json {
                emit(out, &serde_json::to_string_pretty(&r).unwrap())?;
            } else {
                emit(out, r.label.as_str())?;
                for (i, e) in r.trace.iter().enumerate() {
                    emit(out, &format!("  {}. {}\t{}", i + 1, e, r.path[i + 1]))?;
                }
                for w in &r.warnings {
                    emit(out, &format!("warning: {}", w))?;
                }
            }
        }
        Command::Eval(args) => {
            let kind = match args.dataset {
                DatasetArg::Sick => DatasetKind::Sick,
                DatasetArg::Med => DatasetKind::Med,
            };
            let path = args.file.as_ref().or(args.file_flag.as_ref()).unwrap();
            let mut pairs = load(kind, path).map_err(Error::from)?;
            if let Some(dir) = &args.parses {
                for (id, problem) in attach_parses(&mut pairs, dir) {
                    log::warn!("pair {}: {}", id, problem);
                }
            }
            let report = evaluate(kind, &pairs, engine, args.threads.unwrap_or(setup.threads))?;
            if let Some(path) = &args.report {
                std::fs::write(path, report.to_json()).map_err(|source| Error::Io { path: path.clone(), source })?;
            }
            emit(out, &if g.json { report.to_json() } else { report.summary() })?;
        }
        Command::Kb { cmd: KbCommand::Query { lemma, pos, relation } } => {
            let kinds: Vec<LexicalRelationKind> = match relation {
                Some(r) => vec![r.parse().map_err(usage)?],
                None => vec![
                    LexicalRelationKind::Hypernym,
                    LexicalRelationKind::Hyponym,
                    LexicalRelationKind::Synonym,
                    LexicalRelationKind::Antonym,
                ],
            };
            for k in kinds {
                let related: Vec<String> = engine.kb().query(&lemma, &pos, k).into_iter().collect();
                emit(out, &format!("{}\t{}", k, related.join(", ")))?;
            }
            let scale = QuantifierScale::default();
            if scale.contains(&lemma) {
                emit(out, &format!("scale\t{}", lemma))?;
            }
        }
    }
    Ok(())
}

/// Runs the CLI on `args` (program name first) and returns the process exit code.
pub fn run(args: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = write!(out, "{}", e);
                    if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                        EXIT_USAGE
                    } else {
                        EXIT_OK
                    }
                }
                _ => {
                    let _ = write!(err, "{}", e);
                    EXIT_USAGE
                }
            };
        }
    };
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match execute(cli, out) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.msg);
            f.code
        }
    }
}
