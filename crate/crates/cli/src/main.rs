use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tomsim::epistemics::QuestionKind;
use tomsim::eval::{
    aggregate, read_responses, read_scored, report_to_string, score_dataset, write_report, write_scored, EvalError,
    Interval, Label, Mention, RefusalList, ScoreOptions, ScoredResult,
};
use tomsim::modelgw::{run_dataset, BotKind, ChatTransformer, Client, EndpointConfig, GatewayError, Responder, RunOptions};
use tomsim::render::{Identity, ParaphraseOptions, TextTransformer};
use tomsim::storyboard::EnvironmentTag;
use tomsim::suites::{
    add_paraphrased, gen_character_suite, gen_mislead_suite, gen_sally_anne, gen_tom_wm_triad, read_dataset,
    validate_record, write_dataset, CharacterConfig, Dataset, MisleadConfig, SallyAnneConfig, Suite, SuiteError,
    TriadConfig,
};

const EXIT_PARAMS: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_AUTH: u8 = 4;
const EXIT_MISMATCH: u8 = 5;

#[derive(Parser)]
#[command(name = "tomsim", version, about = "Generate false-belief story datasets, collect answers, and score them")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset file.
    Generate(GenerateArgs),
    /// Collect responses from a model endpoint or a built-in bot.
    Run(RunArgs),
    /// Label each response against its record.
    Score(ScoreArgs),
    /// Aggregate labels into an accuracy table.
    Report(ReportArgs),
    /// Re-check every record against its storyboard and the belief oracle.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// mislead, triad, characters or sally-anne.
    #[arg(long)]
    suite: Suite,
    /// Belief order of the mislead suite (1 or 2).
    #[arg(long, default_value_t = 1)]
    order: u8,
    /// Mislead distances (mislead suite).
    #[arg(long, value_delimiter = ',', default_value = "1,10,20,30,40,50,60,70,80")]
    distances: Vec<u32>,
    /// Cast sizes (characters suite).
    #[arg(long, value_delimiter = ',', default_value = "8,16,32,64")]
    counts: Vec<usize>,
    /// Question kinds (characters suite): tom1, wm.
    #[arg(long, value_delimiter = ',', default_value = "tom1,wm")]
    kinds: Vec<QuestionKind>,
    /// Mislead distance of the characters suite.
    #[arg(long, default_value_t = 30)]
    distance: u32,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Base seed; every record seed is derived from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// hallways_doors, holes_field or conference_call.
    #[arg(long, default_value = "hallways_doors")]
    environment: EnvironmentTag,
    /// Prompt template id (1-12).
    #[arg(long, default_value_t = 1)]
    template: u32,
    /// Name the Sally-Anne characters Sally and Anne in every trial.
    #[arg(long)]
    classic_names: bool,
    /// Also emit a paraphrased copy of every record.
    #[arg(long, requires = "transformer")]
    paraphrase: bool,
    /// Endpoint config for paraphrasing, or `identity`.
    #[arg(long)]
    transformer: Option<String>,
    #[arg(long, default_value_t = 1.3)]
    paraphrase_temperature: f64,
    /// Attempts per sentence before keeping the template sentence.
    #[arg(long, default_value_t = 3)]
    paraphrase_attempts: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    data: PathBuf,
    /// oracle, last_location, first_common_location, refusal or truncator.
    #[arg(long, conflicts_with = "endpoint", required_unless_present = "endpoint")]
    bot: Option<BotKind>,
    /// Endpoint config file (TOML).
    #[arg(long)]
    endpoint: Option<PathBuf>,
    /// Requests in flight; defaults to the endpoint's max_in_flight.
    #[arg(long)]
    concurrency: Option<usize>,
    /// Keep answers already in --out and only ask for the rest.
    #[arg(long)]
    resume: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MentionArg {
    Last,
    First,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    responses: PathBuf,
    /// Which location mention counts as the answer.
    #[arg(long, value_enum, default_value = "last")]
    mention: MentionArg,
    /// Refusal phrase file, one phrase per line.
    #[arg(long)]
    refusals: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum IntervalArg {
    Wilson,
    Normal,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    data: PathBuf,
    /// Scored results from `score`.
    #[arg(long, required_unless_present = "responses", conflicts_with = "responses")]
    scored: Option<PathBuf>,
    /// Raw responses, scored on the fly with default options.
    #[arg(long)]
    responses: Option<PathBuf>,
    /// Fields to group by: record fields, `model`, or meta keys.
    #[arg(long, value_delimiter = ',', default_value = "kind,mislead_distance")]
    group_by: Vec<String>,
    #[arg(long, value_enum, default_value = "wilson")]
    interval: IntervalArg,
    /// Output CSV; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    data: PathBuf,
    /// Exit with status 5 if any record fails.
    #[arg(long)]
    strict: bool,
    /// Require every record to have this many events.
    #[arg(long)]
    expect_horizon: Option<u32>,
    #[arg(long)]
    expect_characters: Option<usize>,
    #[arg(long)]
    expect_locations: Option<usize>,
    /// Print every failing record, not just the first ten.
    #[arg(long)]
    verbose: bool,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Display) -> Self {
        Self {
            code,
            message: message.to_string(),
        }
    }
}

impl From<SuiteError> for Failure {
    fn from(e: SuiteError) -> Self {
        let code = match e {
            SuiteError::InvalidParams(_) | SuiteError::Generation { .. } | SuiteError::Render(_) => EXIT_PARAMS,
            SuiteError::Io(_) | SuiteError::Parse { .. } => EXIT_IO,
            SuiteError::ManifestMismatch(_) => EXIT_MISMATCH,
        };
        Failure::new(code, e)
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        let code = match e {
            EvalError::RecordMismatch(_) | EvalError::DuplicateResponse(_) => EXIT_MISMATCH,
            EvalError::UnknownField(_) => EXIT_PARAMS,
            EvalError::Io(_) | EvalError::Parse { .. } | EvalError::Csv(_) => EXIT_IO,
        };
        Failure::new(code, e)
    }
}

impl From<GatewayError> for Failure {
    fn from(e: GatewayError) -> Self {
        let code = match e {
            GatewayError::MissingKey { .. } | GatewayError::Auth(_) => EXIT_AUTH,
            GatewayError::Config(_) => EXIT_PARAMS,
            GatewayError::Io(_) | GatewayError::Responses(_) => EXIT_IO,
            GatewayError::Transport { .. } | GatewayError::MalformedReply(_) => EXIT_IO,
        };
        Failure::new(code, e)
    }
}

type CmdResult = Result<(), Failure>;

fn load(path: &Path) -> Result<Dataset, Failure> {
    read_dataset(path).map_err(|e| {
        let f = Failure::from(e);
        Failure::new(f.code, format!("{}: {}", path.display(), f.message))
    })
}

fn transformer(spec: &str) -> Result<Box<dyn TextTransformer>, Failure> {
    if spec == "identity" {
        return Ok(Box::new(Identity));
    }
    let cfg = EndpointConfig::load(Path::new(spec))?;
    Ok(Box::new(ChatTransformer::new(Client::http(cfg)?)))
}

fn generate(a: GenerateArgs) -> CmdResult {
    let mut ds = match a.suite {
        Suite::Mislead => gen_mislead_suite(&MisleadConfig {
            environment: a.environment,
            template_id: a.template,
            ..MisleadConfig::new(a.order, a.distances, a.trials, a.seed)
        })?,
        Suite::Triad => gen_tom_wm_triad(&TriadConfig {
            environment: a.environment,
            template_id: a.template,
            ..TriadConfig::new(a.trials, a.seed)
        })?,
        Suite::Characters => gen_character_suite(&CharacterConfig {
            mislead_distance: a.distance,
            environment: a.environment,
            template_id: a.template,
            ..CharacterConfig::new(a.counts, a.trials, a.seed, a.kinds)
        })?,
        Suite::SallyAnne => gen_sally_anne(&SallyAnneConfig {
            classic_names: a.classic_names,
            template_id: a.template,
            ..SallyAnneConfig::new(a.trials, a.seed)
        })?,
    };
    if a.paraphrase {
        let tx = transformer(a.transformer.as_deref().unwrap_or("identity"))?;
        let opts = ParaphraseOptions {
            temperature: a.paraphrase_temperature,
            max_attempts: a.paraphrase_attempts,
            ..ParaphraseOptions::default()
        };
        ds = add_paraphrased(&ds, tx.as_ref(), &opts)?;
    }
    write_dataset(&ds, &a.out)?;
    let m = &ds.manifest;
    println!("wrote {} records to {}", m.record_count, a.out.display());
    println!(
        "suite={} base_seed={} trials={} grid_cells={} engine={}",
        m.suite,
        m.base_seed,
        m.trials,
        m.grid.len(),
        m.engine_version
    );
    Ok(())
}

fn run(a: RunArgs) -> CmdResult {
    let ds = load(&a.data)?;
    let (responder, default_concurrency) = match (a.bot, &a.endpoint) {
        (Some(bot), _) => (Responder::Bot(bot), 1),
        (None, Some(path)) => {
            let cfg = EndpointConfig::load(path)?;
            let n = cfg.max_in_flight;
            (Responder::Model(Client::http(cfg)?), n)
        }
        (None, None) => return Err(Failure::new(EXIT_PARAMS, "one of --bot or --endpoint is required")),
    };
    let concurrency = a.concurrency.unwrap_or(default_concurrency);
    if concurrency == 0 {
        return Err(Failure::new(EXIT_PARAMS, "--concurrency must be at least 1"));
    }
    let opts = RunOptions {
        concurrency,
        out: Some(a.out.clone()),
        resume: a.resume,
    };
    let responses = run_dataset(&responder, &ds, &opts)?;
    let failed = responses
        .iter()
        .filter(|r| r.finish_reason == tomsim::eval::FinishReason::TransportError)
        .count();
    println!("wrote {} responses from {} to {}", responses.len(), responder.name(), a.out.display());
    if failed > 0 {
        println!("{failed} requests failed and were recorded as transport errors");
    }
    Ok(())
}

fn label_summary(results: &[ScoredResult]) -> String {
    Label::ALL
        .iter()
        .map(|&l| format!("{l}={}", results.iter().filter(|r| r.label == l).count()))
        .collect::<Vec<_>>()
        .join(" ")
}

fn score_options(mention: MentionArg, refusals: Option<&Path>) -> Result<ScoreOptions, Failure> {
    let refusals = match refusals {
        Some(p) => RefusalList::from_text(
            &std::fs::read_to_string(p).map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", p.display())))?,
        ),
        None => RefusalList::default(),
    };
    let mention = match mention {
        MentionArg::Last => Mention::Last,
        MentionArg::First => Mention::First,
    };
    Ok(ScoreOptions { mention, refusals })
}

fn score(a: ScoreArgs) -> CmdResult {
    let ds = load(&a.data)?;
    let responses = read_responses(&a.responses)?;
    let opts = score_options(a.mention, a.refusals.as_deref())?;
    let scored = score_dataset(&ds, &responses, &opts)?;
    write_scored(&scored.results, &a.out)?;
    println!("scored {} responses: {}", scored.results.len(), label_summary(&scored.results));
    if !scored.missing.is_empty() {
        println!("{} records have no response", scored.missing.len());
        for id in scored.missing.iter().take(10) {
            println!("  missing {id}");
        }
    }
    Ok(())
}

fn report(a: ReportArgs) -> CmdResult {
    let ds = load(&a.data)?;
    let results = match (&a.scored, &a.responses) {
        (Some(path), _) => read_scored(path)?,
        (None, Some(path)) => score_dataset(&ds, &read_responses(path)?, &ScoreOptions::default())?.results,
        (None, None) => return Err(Failure::new(EXIT_PARAMS, "one of --scored or --responses is required")),
    };
    let group_by: Vec<String> = a.group_by.into_iter().filter(|g| !g.is_empty()).collect();
    let interval = match a.interval {
        IntervalArg::Wilson => Interval::Wilson,
        IntervalArg::Normal => Interval::Normal,
    };
    let rows = aggregate(&ds, &results, &group_by, interval)?;
    match &a.out {
        Some(path) => {
            write_report(&group_by, &rows, path)?;
            println!("wrote {} rows to {}", rows.len(), path.display());
        }
        None => print!("{}", report_to_string(&group_by, &rows)?),
    }
    Ok(())
}

fn validate(a: ValidateArgs) -> CmdResult {
    let ds = load(&a.data)?;
    let mut ok = 0;
    let mut shown = 0;
    for record in &ds.records {
        let mut report = validate_record(record);
        let mut expect = |what: &str, got: String, want: Option<String>| {
            if let Some(want) = want.filter(|w| *w != got) {
                report.problems.push(format!("{what} is {got}, expected {want}"));
            }
        };
        expect("horizon", record.events.len().to_string(), a.expect_horizon.map(|x| x.to_string()));
        expect("character count", record.num_characters.to_string(), a.expect_characters.map(|x| x.to_string()));
        expect("location count", record.num_locations.to_string(), a.expect_locations.map(|x| x.to_string()));
        if report.is_ok() {
            ok += 1;
        } else if a.verbose || shown < 10 {
            shown += 1;
            eprint!("{report}");
        }
    }
    let n = ds.records.len();
    println!("{ok} of {n} stories satisfy the Storyboard");
    if a.strict && ok != n {
        return Err(Failure::new(EXIT_MISMATCH, format!("{} records failed validation", n - ok)));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Run(a) => run(a),
        Command::Score(a) => score(a),
        Command::Report(a) => report(a),
        Command::Validate(a) => validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
