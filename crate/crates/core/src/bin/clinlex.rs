use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use clinlex::brat::{self, BratError};
use clinlex::context_rules::{parse_rules_with_window, ContextRule, DEFAULT_WINDOW};
use clinlex::eval::{self, Corpus, EvalError, Index, NerOptions, ScoreReport};
use clinlex::fuzzy::{self, FuzzyParams, LexiconStrings};
use clinlex::lexicon::{load_cache, save_cache, CacheError, CompiledLexicon, LexEntry, LexiconInputs, PrimaryEntity};
use clinlex::transform::{parse_transform_rules, SecondaryOptions, TransformRule, DEFAULT_ENUMERATION_LIMIT};
use clinlex::{annotate_corpus, index_concepts};

/// Dictionary and rule based annotator for clinical text.
#[derive(Parser)]
#[command(name = "clinlex", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the lexicon and save it to the cache.
    Compile {
        #[command(flatten)]
        resources: Resources,
    },
    /// Annotate every .txt file of a directory.
    Annotate {
        #[command(flatten)]
        resources: Resources,
        /// Directory of <doc_id>.txt files.
        #[arg(long)]
        input: PathBuf,
        /// Directory for <doc_id>.ann files and index.tsv.
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        jobs: Jobs,
    },
    /// Mine misspelled variants of lexicon strings from a corpus.
    FuzzyScan {
        #[command(flatten)]
        resources: Resources,
        /// Directory of <doc_id>.txt files.
        #[arg(long)]
        input: PathBuf,
        /// Common vocabulary, one word per line.
        #[arg(long)]
        vocab: PathBuf,
        /// Candidate TSV to write.
        #[arg(long)]
        output: PathBuf,
        /// Longest word sequence considered.
        #[arg(long, default_value_t = 3)]
        max_words: usize,
        /// Shortest candidate, in characters.
        #[arg(long, default_value_t = 4)]
        min_length: usize,
        #[command(flatten)]
        jobs: Jobs,
    },
    /// Score system annotations against gold annotations.
    Eval {
        /// Directory of gold <doc_id>.ann files (and optionally .txt files).
        #[arg(long)]
        gold: PathBuf,
        /// Directory of system <doc_id>.ann files.
        #[arg(long)]
        sys: PathBuf,
        #[arg(long, value_enum, default_value_t = Task::All)]
        task: Task,
        /// Count a span as correct regardless of its class.
        #[arg(long)]
        offsets_only: bool,
        /// Gold concept index TSV; derived from the gold notes when absent.
        #[arg(long)]
        gold_index: Option<PathBuf>,
        /// System concept index TSV; derived from the system notes when absent.
        #[arg(long)]
        sys_index: Option<PathBuf>,
        /// Write the categorized disagreements to this TSV.
        #[arg(long)]
        diff: Option<PathBuf>,
        #[command(flatten)]
        jobs: Jobs,
    },
    /// Parse a contextual rule file and report what it holds.
    CheckRules {
        #[arg(long)]
        rules: PathBuf,
        /// Local context window, in characters.
        #[arg(long, default_value_t = DEFAULT_WINDOW)]
        window: usize,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Task {
    Ner,
    Index,
    All,
}

#[derive(Args)]
struct Jobs {
    /// Worker threads; 0 uses every available core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Args)]
struct Resources {
    /// Primary entities TSV: term, class, concept id, rank.
    #[arg(long)]
    lexicon: PathBuf,
    /// Transformation rules TSV: id, match, template, priority.
    #[arg(long)]
    transforms: Option<PathBuf>,
    /// Contextual rules file.
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Compiled lexicon cache; reused while the resources are unchanged.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Local context window, in characters.
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: usize,
    /// Cap on strings enumerated from one regexp entry.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_LIMIT)]
    limit: usize,
    /// Do not generate plural forms.
    #[arg(long)]
    no_plurals: bool,
    /// Fuzzy candidate TSV whose accepted variants join the lexicon.
    #[arg(long, requires = "fuzzy_decisions")]
    fuzzy_candidates: Option<PathBuf>,
    /// Accept/reject decisions for the fuzzy candidates.
    #[arg(long, requires = "fuzzy_candidates")]
    fuzzy_decisions: Option<PathBuf>,
}

/// Exit code 1 for bad input, 2 for internal failures.
enum Failure {
    Input(String),
    Internal(String),
}

type Outcome<T> = Result<T, Failure>;

fn input<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Input(e.to_string())
}

fn read(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, content: &str) -> Outcome<()> {
    fs::write(path, content).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn require_dir(path: &Path) -> Outcome<()> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(Failure::Input(format!("{}: not a directory", path.display())))
    }
}

fn brat_error(e: BratError) -> Failure {
    input(e)
}

fn set_jobs(jobs: &Jobs) -> Outcome<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.jobs)
        .build_global()
        .map_err(|e| Failure::Internal(format!("thread pool: {e}")))
}

struct Loaded {
    primaries: Vec<PrimaryEntity>,
    transforms: Vec<TransformRule>,
    rules: Vec<ContextRule>,
    fuzzy: Vec<LexEntry>,
    options: SecondaryOptions,
}

impl Loaded {
    fn inputs(&self) -> LexiconInputs<'_> {
        LexiconInputs::new(&self.primaries, &self.transforms)
            .with_rules(&self.rules)
            .with_fuzzy(&self.fuzzy)
            .with_options(self.options)
    }
}

fn load_resources(r: &Resources) -> Outcome<Loaded> {
    let primaries = clinlex::load_primary_entities(&read(&r.lexicon)?).map_err(input)?;
    let transforms = match &r.transforms {
        Some(p) => parse_transform_rules(&read(p)?).map_err(input)?,
        None => Vec::new(),
    };
    let rules = match &r.rules {
        Some(p) => parse_rules_with_window(&read(p)?, r.window).map_err(|e| input(format!("{}: {e}", p.display())))?,
        None => Vec::new(),
    };
    let options = SecondaryOptions {
        pluralize: !r.no_plurals,
    };
    let mut loaded = Loaded {
        primaries,
        transforms,
        rules,
        fuzzy: Vec::new(),
        options,
    };
    if let (Some(cands), Some(decisions)) = (&r.fuzzy_candidates, &r.fuzzy_decisions) {
        let candidates = fuzzy::parse_candidates(&read(cands)?).map_err(input)?;
        let decisions = fuzzy::parse_decisions(&read(decisions)?).map_err(input)?;
        let base = loaded.inputs().build().map_err(input)?;
        let strings = LexiconStrings::from_lexicon(&base, r.limit);
        loaded.fuzzy = fuzzy::promote_candidates(&candidates, &decisions, &strings).map_err(input)?;
        log::info!("{} fuzzy variants promoted", loaded.fuzzy.len());
    }
    Ok(loaded)
}

/// Loads the cached lexicon when it is current, otherwise builds it and
/// refreshes the cache. The flag reports a cache hit.
fn obtain_lexicon(r: &Resources, loaded: &Loaded) -> Outcome<(CompiledLexicon, bool)> {
    let inputs = loaded.inputs();
    let fingerprint = inputs.fingerprint();
    if let Some(path) = r.cache.as_deref().filter(|p| p.exists()) {
        match load_cache(path, &fingerprint) {
            Ok(lex) => return Ok((lex, true)),
            Err(CacheError::Stale { .. }) => log::info!("cache {} is stale; rebuilding", path.display()),
            Err(e) => log::warn!("{e}; rebuilding"),
        }
    }
    let lex = inputs.build().map_err(input)?;
    if let Some(path) = &r.cache {
        save_cache(&lex, path).map_err(input)?;
    }
    Ok((lex, false))
}

fn compile(resources: &Resources) -> Outcome<()> {
    if resources.cache.is_none() {
        return Err(Failure::Input("compile needs --cache".into()));
    }
    let started = Instant::now();
    let loaded = load_resources(resources)?;
    let (lex, hit) = obtain_lexicon(resources, &loaded)?;
    let stats = lex.stats();
    println!("primary entities\t{}", stats.primary);
    println!("secondary entries\t{}", stats.secondary);
    println!("fuzzy entries\t{}", stats.fuzzy);
    println!("lexicon entries\t{}", lex.len());
    println!("fingerprint\t{}", lex.fingerprint());
    println!("cache\t{}", if hit { "hit" } else { "written" });
    log::info!("compile finished in {:?}", started.elapsed());
    Ok(())
}

fn annotate(resources: &Resources, input_dir: &Path, output: &Path, jobs: &Jobs) -> Outcome<()> {
    require_dir(input_dir)?;
    set_jobs(jobs)?;
    let loaded = load_resources(resources)?;
    let (lex, _) = obtain_lexicon(resources, &loaded)?;
    let docs = brat::read_documents(input_dir).map_err(brat_error)?;
    fs::create_dir_all(output).map_err(|e| Failure::Input(format!("{}: {e}", output.display())))?;
    let annotated = annotate_corpus(&docs, &lex, &loaded.rules);
    let mut index = String::new();
    let mut total = 0;
    for (doc, anns) in docs.iter().zip(&annotated) {
        brat::write_annotations(output, &doc.doc_id, anns).map_err(brat_error)?;
        index.push_str(&brat::write_index(&doc.doc_id, &index_concepts(anns)));
        total += anns.len();
    }
    write(&output.join("index.tsv"), &index)?;
    log::info!("{} documents, {total} annotations", docs.len());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn fuzzy_scan(
    resources: &Resources,
    input_dir: &Path,
    vocab: &Path,
    output: &Path,
    max_words: usize,
    min_length: usize,
    jobs: &Jobs,
) -> Outcome<()> {
    require_dir(input_dir)?;
    set_jobs(jobs)?;
    let loaded = load_resources(resources)?;
    let (lex, _) = obtain_lexicon(resources, &loaded)?;
    let strings = LexiconStrings::from_lexicon(&lex, resources.limit);
    let vocabulary: HashSet<String> = fuzzy::parse_vocabulary(&read(vocab)?);
    let docs = brat::read_documents(input_dir).map_err(brat_error)?;
    let params = FuzzyParams {
        max_words,
        min_length,
        ..FuzzyParams::default()
    };
    let candidates = fuzzy::scan(&docs, &strings, &vocabulary, &params).map_err(input)?;
    write(output, &fuzzy::write_candidates(&candidates))?;
    log::info!("{} candidates from {} documents", candidates.len(), docs.len());
    Ok(())
}

fn eval_error(e: EvalError) -> Failure {
    match e {
        EvalError::CorpusMismatch(_) => input(e),
        EvalError::Inconsistent(_) => Failure::Internal(e.to_string()),
    }
}

fn index_of(corpus: &Corpus, file: Option<&Path>) -> Outcome<Index> {
    match file {
        Some(p) => brat::parse_index(&read(p)?).map_err(brat_error),
        None => Ok(corpus
            .iter()
            .map(|(doc, anns)| (doc.clone(), index_concepts(anns)))
            .collect()),
    }
}

#[allow(clippy::too_many_arguments)]
fn evaluate(
    gold_dir: &Path,
    sys_dir: &Path,
    task: Task,
    offsets_only: bool,
    gold_index: Option<&Path>,
    sys_index: Option<&Path>,
    diff: Option<&Path>,
    jobs: &Jobs,
) -> Outcome<()> {
    require_dir(gold_dir)?;
    require_dir(sys_dir)?;
    set_jobs(jobs)?;
    let texts = brat::read_documents(gold_dir).map_err(brat_error)?;
    let gold = brat::read_annotations(gold_dir, &texts).map_err(brat_error)?;
    let sys = brat::read_annotations(sys_dir, &texts).map_err(brat_error)?;
    let mut rows: Vec<(&str, ScoreReport)> = Vec::new();
    if task != Task::Index {
        rows.push(("ner", eval::score_ner(&gold, &sys, NerOptions { offsets_only }).map_err(eval_error)?));
    }
    if task != Task::Ner {
        let g = index_of(&gold, gold_index)?;
        let s = index_of(&sys, sys_index)?;
        rows.push(("index", eval::score_indexing(&g, &s).map_err(eval_error)?));
    }
    print!("{}", eval::format_report(&rows));
    if let Some(path) = diff {
        write(path, &eval::write_diff(&eval::diff_report(&gold, &sys)))?;
    }
    Ok(())
}

fn check_rules(path: &Path, window: usize) -> Outcome<()> {
    let rules = parse_rules_with_window(&read(path)?, window).map_err(|e| input(format!("{}: {e}", path.display())))?;
    let defaults = rules.iter().filter(|r| r.is_default()).count();
    println!(
        "{} rules ({} contextual, {} default)",
        rules.len(),
        rules.len() - defaults,
        defaults
    );
    Ok(())
}

fn run(cli: Cli) -> Outcome<()> {
    match &cli.command {
        Command::Compile { resources } => compile(resources),
        Command::Annotate {
            resources,
            input,
            output,
            jobs,
        } => annotate(resources, input, output, jobs),
        Command::FuzzyScan {
            resources,
            input,
            vocab,
            output,
            max_words,
            min_length,
            jobs,
        } => fuzzy_scan(resources, input, vocab, output, *max_words, *min_length, jobs),
        Command::Eval {
            gold,
            sys,
            task,
            offsets_only,
            gold_index,
            sys_index,
            diff,
            jobs,
        } => evaluate(
            gold,
            sys,
            *task,
            *offsets_only,
            gold_index.as_deref(),
            sys_index.as_deref(),
            diff.as_deref(),
            jobs,
        ),
        Command::CheckRules { rules, window } => check_rules(rules, *window),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(2)
        }
    }
}
