use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use guessgame_core::analysis::sweep::{default_alpha_grid, default_prune_grid, default_tau_grid};
use guessgame_core::analysis::{
    analyze, sweep_alpha_prune, sweep_tau, AftMode, AnalysisOptions, SweepReport,
};
use guessgame_core::conceptnet::{ingest, RelationWhitelist};
use guessgame_core::io::{open_text, read_ig_records, read_transcripts, write_ig_records};
use guessgame_core::manifest::{unix_now, AgentsSpec, EmbedderSpec, HashedPath, RunManifest};
use guessgame_core::model::{GameConfig, IgRecord, Transcript};
use guessgame_core::pipeline::{agents_from_spec, entropy_context, execute, write_outputs};
use guessgame_core::scoring::{score_transcript, EntropyContext, ScorerFactory};
use guessgame_core::taxonomy::DEFAULT_ENUMERATION_THRESHOLD;
use guessgame_service::{build_state, serve, ServiceConfig};

/// Share of errored games above which `run` exits with status 3.
const MAX_ERRORED_FRACTION: f64 = 0.10;

#[derive(Parser)]
#[command(
    name = "guessgame",
    version,
    about = "Play, score and analyze twenty-questions style games between agents"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play one game per corpus object and write transcripts, IG traces and a report.
    Run(RunArgs),
    /// Parse a ConceptNet dump (plain or gzip) into an index file.
    Ingest(IngestArgs),
    /// Summary, IG-by-type, correlation and survival analysis of a recorded run.
    Analyze(AnalyzeArgs),
    /// Re-score a recorded run over a parameter grid.
    Sweep(SweepArgs),
    /// Score recorded transcripts without replaying the Oracle or Guesser.
    Score(ScoreArgs),
    /// Re-score recorded transcripts and check them against recorded IG traces.
    Replay(ReplayArgs),
    /// Start the HTTP service.
    Serve(ServeArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Run manifest (JSON). Paths inside resolve against its directory.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Object list, when no manifest is given.
    #[arg(long, conflicts_with = "config")]
    corpus: Option<PathBuf>,
    /// ConceptNet dump or index, when no manifest is given.
    #[arg(long, conflicts_with = "config")]
    index: Option<PathBuf>,
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    parallelism: Option<usize>,
    /// Play only the first N objects.
    #[arg(long)]
    sample: Option<usize>,
    #[command(flatten)]
    analysis: AnalysisFlags,
}

#[derive(Args, Clone, Copy)]
struct AnalysisFlags {
    /// Fit the survival model on successful games only.
    #[arg(long)]
    successes_only: bool,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_THRESHOLD)]
    enumeration_threshold: f64,
}

impl AnalysisFlags {
    fn options(self) -> AnalysisOptions {
        AnalysisOptions {
            aft_mode: self.mode(),
            enumeration_threshold: self.enumeration_threshold,
        }
    }

    fn mode(self) -> AftMode {
        if self.successes_only {
            AftMode::SuccessesOnly
        } else {
            AftMode::Censored
        }
    }
}

#[derive(Args)]
struct IngestArgs {
    dump: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    /// Comma-separated relation names; defaults to the standard set.
    #[arg(long, value_delimiter = ',')]
    relations: Vec<String>,
}

#[derive(Args)]
struct Recorded {
    #[arg(long)]
    transcripts: PathBuf,
    #[arg(long)]
    ig: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    recorded: Recorded,
    #[command(flatten)]
    analysis: AnalysisFlags,
    /// Also write the report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

/// Where scoring agents and the index come from.
#[derive(Args)]
struct ScoringSource {
    /// Run manifest supplying agents, index and embedder.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// ConceptNet dump or index; overrides the manifest's.
    #[arg(long)]
    index: Option<PathBuf>,
    /// Embedding table (`label<TAB>v1,v2,...`) instead of the hashing embedder.
    #[arg(long)]
    embeddings: Option<PathBuf>,
}

struct Scoring {
    agents: AgentsSpec,
    entropy: Option<Arc<EntropyContext>>,
}

impl ScoringSource {
    fn load(&self, require_index: bool) -> anyhow::Result<Scoring> {
        let (mut agents, mut index, mut embedder, base) = match &self.config {
            Some(path) => {
                let m = RunManifest::load(path)?;
                let base = base_of(path);
                m.verify_inputs(&base)?;
                (m.agents, m.index, m.embedder, base)
            }
            None => (
                AgentsSpec::default(),
                None,
                EmbedderSpec::default(),
                PathBuf::from("."),
            ),
        };
        if let Some(p) = &self.index {
            index = Some(HashedPath::new(absolute(p)?));
        }
        if let Some(p) = &self.embeddings {
            embedder = EmbedderSpec::Table {
                path: HashedPath::new(absolute(p)?),
            };
        }
        if require_index && index.is_none() {
            return Err(anyhow!(
                "an index is required (--index or a manifest with one)"
            ));
        }
        agents.apply_overrides(env);
        let entropy = entropy_context(index.as_ref(), &embedder, &base)?;
        Ok(Scoring { agents, entropy })
    }
}

#[derive(Args)]
struct SweepArgs {
    #[arg(value_enum)]
    kind: SweepKindArg,
    #[arg(long)]
    transcripts: PathBuf,
    #[command(flatten)]
    source: ScoringSource,
    /// Similarity thresholds for the tau sweep.
    #[arg(long, value_delimiter = ',')]
    taus: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    /// Pruning fractions for the alpha-prune sweep.
    #[arg(long, value_delimiter = ',')]
    prunes: Option<Vec<f64>>,
    #[arg(long)]
    successes_only: bool,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepKindArg {
    Tau,
    AlphaPrune,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    transcripts: PathBuf,
    #[command(flatten)]
    source: ScoringSource,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct ReplayArgs {
    #[command(flatten)]
    recorded: Recorded,
    #[command(flatten)]
    source: ScoringSource,
}

#[derive(Args)]
struct ServeArgs {
    /// Service config (TOML).
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    listen: Option<String>,
}

enum Failure {
    Usage(String),
    Data(anyhow::Error),
    Partial(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

fn env(key: &str) -> Option<String> {
    std::env::var(key).ok().filter(|v| !v.is_empty())
}

fn base_of(path: &Path) -> PathBuf {
    path.parent()
        .map_or_else(|| PathBuf::from("."), Path::to_path_buf)
}

fn absolute(p: &Path) -> anyhow::Result<PathBuf> {
    std::path::absolute(p).with_context(|| format!("resolving {}", p.display()))
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let (mut manifest, base) = match (&args.config, &args.corpus) {
        (Some(path), _) => (
            RunManifest::load(path).map_err(anyhow::Error::from)?,
            base_of(path),
        ),
        (None, Some(corpus)) => {
            let mut m = RunManifest::new(GameConfig::default(), absolute(corpus)?);
            if let Some(index) = &args.index {
                m.index = Some(HashedPath::new(absolute(index)?));
            }
            (m, PathBuf::from("."))
        }
        (None, None) => return Err(Failure::Usage("run needs --config or --corpus".into())),
    };
    if let Some(seed) = args.seed {
        manifest.config.seed = seed;
    }
    if let Some(n) = args.sample {
        manifest.sample = Some(n);
    }
    manifest.agents.apply_overrides(env);
    manifest.started_at = Some(unix_now());
    let workers = args
        .parallelism
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let output =
        execute(&manifest, &base, workers, args.analysis.options()).map_err(anyhow::Error::from)?;
    write_outputs(&args.out, &manifest, &output).map_err(anyhow::Error::from)?;
    match &output.report {
        Ok(report) => print!("{}", report.render_text()),
        Err(e) => eprintln!("analysis skipped: {e}"),
    }
    let errored = output.errored_fraction();
    if errored > MAX_ERRORED_FRACTION {
        return Err(Failure::Partial(format!(
            "{} of {} games errored",
            output.errored(),
            output.runs.len()
        )));
    }
    Ok(())
}

fn cmd_ingest(args: IngestArgs) -> anyhow::Result<()> {
    let whitelist = if args.relations.is_empty() {
        RelationWhitelist::default()
    } else {
        RelationWhitelist::new(&args.relations)
    };
    let reader = open_text(&args.dump)?;
    let (index, report) =
        ingest(reader, &whitelist).with_context(|| format!("ingesting {}", args.dump.display()))?;
    index.save(&args.out)?;
    println!(
        "rows {}  kept {}  duplicates {}",
        report.rows, report.kept, report.duplicates
    );
    println!(
        "filtered: relation {}  language {}  malformed {}",
        report.filtered_relation,
        report.filtered_language,
        report.malformed.len()
    );
    for d in &report.malformed {
        println!("  line {}: {}", d.line, d.reason);
    }
    for (relation, n) in &report.per_relation {
        println!("{relation}\t{n}");
    }
    println!(
        "objects {}  index hash {}",
        index.objects().len(),
        index.content_hash()
    );
    Ok(())
}

fn load_recorded(r: &Recorded) -> anyhow::Result<(Vec<Transcript>, Vec<IgRecord>)> {
    Ok((read_transcripts(&r.transcripts)?, read_ig_records(&r.ig)?))
}

fn cmd_analyze(args: AnalyzeArgs) -> anyhow::Result<()> {
    let (transcripts, records) = load_recorded(&args.recorded)?;
    let report = analyze(&transcripts, &records, args.analysis.options())?;
    print!("{}", report.render_text());
    if let Some(path) = &args.json {
        std::fs::write(path, report.to_json()).with_context(|| path.display().to_string())?;
    }
    Ok(())
}

fn non_empty(grid: Option<Vec<f64>>, default: Vec<f64>, name: &str) -> Result<Vec<f64>, Failure> {
    match grid {
        None => Ok(default),
        Some(g) if g.is_empty() => Err(Failure::Usage(format!("--{name} grid is empty"))),
        Some(g) => Ok(g),
    }
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Failure> {
    let transcripts = read_transcripts(&args.transcripts).map_err(anyhow::Error::from)?;
    let base = transcripts
        .first()
        .map(|t| t.config.clone())
        .ok_or_else(|| anyhow!("no transcripts in {}", args.transcripts.display()))?;
    let mode = if args.successes_only {
        AftMode::SuccessesOnly
    } else {
        AftMode::Censored
    };
    let report: SweepReport = match args.kind {
        SweepKindArg::Tau => {
            let taus = non_empty(args.taus, default_tau_grid(), "taus")?;
            let scoring = args.source.load(true)?;
            let ctx = scoring.entropy.expect("index required");
            sweep_tau(&transcripts, &base, ctx, &taus, mode).map_err(anyhow::Error::from)?
        }
        SweepKindArg::AlphaPrune => {
            let alphas = non_empty(args.alphas, default_alpha_grid(), "alphas")?;
            let prunes = non_empty(args.prunes, default_prune_grid(), "prunes")?;
            let scoring = args.source.load(false)?;
            let agents = agents_from_spec(&scoring.agents, &base).map_err(anyhow::Error::from)?;
            sweep_alpha_prune(
                &transcripts,
                &base,
                agents.interpreter(),
                &alphas,
                &prunes,
                mode,
            )
            .map_err(anyhow::Error::from)?
        }
    };
    print!("{}", report.render_text());
    if let Some(path) = &args.csv {
        std::fs::write(path, report.to_csv()).with_context(|| path.display().to_string())?;
    }
    if let Some(path) = &args.json {
        std::fs::write(path, report.to_json()).with_context(|| path.display().to_string())?;
    }
    Ok(())
}

/// Scores each transcript under its own recorded config.
fn rescore(transcripts: &[Transcript], scoring: &Scoring) -> anyhow::Result<Vec<IgRecord>> {
    let mut records = Vec::new();
    for t in transcripts {
        let agents = agents_from_spec(&scoring.agents, &t.config)?;
        let factory = ScorerFactory::new(&t.config, agents.interpreter(), scoring.entropy.clone());
        records.extend(score_transcript(t, &factory));
    }
    Ok(records)
}

fn cmd_score(args: ScoreArgs) -> anyhow::Result<()> {
    let transcripts = read_transcripts(&args.transcripts)?;
    let records = rescore(&transcripts, &args.source.load(false)?)?;
    write_ig_records(&records, &args.out)?;
    println!(
        "{} games, {} turns scored",
        transcripts.len(),
        records.len()
    );
    Ok(())
}

fn cmd_replay(args: ReplayArgs) -> anyhow::Result<()> {
    let (transcripts, recorded) = load_recorded(&args.recorded)?;
    let replayed = rescore(&transcripts, &args.source.load(false)?)?;
    if replayed.len() != recorded.len() {
        return Err(anyhow!(
            "replay produced {} records, {} recorded",
            replayed.len(),
            recorded.len()
        ));
    }
    if let Some(i) = replayed.iter().zip(&recorded).position(|(a, b)| a != b) {
        return Err(anyhow!(
            "record {} ({} turn {}) differs:\n  recorded {:?}\n  replayed {:?}",
            i + 1,
            recorded[i].game_id,
            recorded[i].t,
            recorded[i],
            replayed[i]
        ));
    }
    println!("{} records match", recorded.len());
    Ok(())
}

fn cmd_serve(args: ServeArgs) -> anyhow::Result<()> {
    let (mut config, base) = match &args.config {
        Some(path) => (ServiceConfig::load(path)?, base_of(path)),
        None => (ServiceConfig::default(), PathBuf::from(".")),
    };
    config.apply_env(env);
    if let Some(listen) = args.listen {
        config.listen = listen;
    }
    let state = build_state(&config, &base)?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?;
    runtime.block_on(serve(state, &config.listen))?;
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Ingest(a) => cmd_ingest(a).map_err(Failure::from),
        Command::Analyze(a) => cmd_analyze(a).map_err(Failure::from),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Score(a) => cmd_score(a).map_err(Failure::from),
        Command::Replay(a) => cmd_replay(a).map_err(Failure::from),
        Command::Serve(a) => cmd_serve(a).map_err(Failure::from),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Partial(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
