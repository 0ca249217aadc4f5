//! Command-line front end: segmentation runs, coverage statistics, sampling
//! verification and the review server.

pub mod serve;

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use olseg_core::metadata::{fetch_directory, load_directory, API_BASE_ENV, DEFAULT_API_BASE};
use olseg_core::model::read_segmented_stream;
use olseg_core::pipeline::{run_segment, RunCounts, RunManifest};
use olseg_core::stats::CoverageCounts;
use olseg_core::verification::{
    plan, SamplingPlan, SessionStore, VerificationError, VerificationSession, DEFAULT_ASSUMED_P,
};
use olseg_core::{GeoDirectory, ReferenceExtractor};

#[derive(Debug, Parser)]
#[command(
    name = "olseg",
    version,
    about = "Segment German court decisions into their sections"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment a raw JSONL dump into sectioned records.
    Segment(SegmentArgs),
    /// Print section coverage of a segmented corpus.
    Stats(StatsArgs),
    /// Sample-based verification of the segmentation.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Maintain the state/city snapshot files.
    #[command(subcommand)]
    Geo(GeoCommand),
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    /// Raw dump, one decision per line.
    #[arg(long)]
    pub input: PathBuf,
    /// Segmented output; the run manifest goes to `<output>.manifest.json`.
    #[arg(long)]
    pub output: PathBuf,
    /// State snapshot (JSON array of {id, name}).
    #[arg(long, env = "OLSEG_STATES", requires = "cities")]
    pub states: Option<PathBuf>,
    /// City snapshot (JSON array of {id, name, state}).
    #[arg(long, env = "OLSEG_CITIES", requires = "states")]
    pub cities: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, env = "OLSEG_JOBS")]
    pub jobs: Option<usize>,
    /// Extra statute code abbreviations, one per line.
    #[arg(long, env = "OLSEG_CODES")]
    pub codes: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Segmented corpus.
    #[arg(long)]
    pub input: PathBuf,
    /// Emit JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args, Clone)]
pub struct PlanArgs {
    /// Population size N; `verify sample` defaults it to the corpus size.
    #[arg(long)]
    pub population: Option<u64>,
    #[arg(long, env = "OLSEG_CONFIDENCE", default_value_t = 0.95)]
    pub confidence: f64,
    #[arg(long, env = "OLSEG_MARGIN", default_value_t = 0.05)]
    pub margin: f64,
    #[arg(long = "assumed-p", env = "OLSEG_ASSUMED_P", default_value_t = DEFAULT_ASSUMED_P)]
    pub assumed_p: f64,
}

#[derive(Debug, Subcommand)]
pub enum VerifyCommand {
    /// Print the required sample size.
    Plan {
        #[command(flatten)]
        plan: PlanArgs,
        #[arg(long)]
        json: bool,
    },
    /// Draw a sample from a segmented corpus into a new session file.
    Sample {
        #[command(flatten)]
        plan: PlanArgs,
        #[arg(long, env = "OLSEG_SEED")]
        seed: u64,
        #[arg(long, env = "OLSEG_CORPUS")]
        corpus: PathBuf,
        #[arg(long, env = "OLSEG_SESSION")]
        session: PathBuf,
        /// Replace an existing session file (its judgments are lost).
        #[arg(long)]
        force: bool,
    },
    /// Serve the review API and UI for a session.
    Serve {
        #[arg(long, env = "OLSEG_SESSION")]
        session: PathBuf,
        #[arg(long, env = "OLSEG_CORPUS")]
        corpus: PathBuf,
        #[arg(long, env = "OLSEG_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "OLSEG_HOST", default_value = "127.0.0.1")]
        host: String,
        /// Directory holding the built review UI; a placeholder page is
        /// served when absent.
        #[arg(long, env = "OLSEG_ASSETS")]
        assets: Option<PathBuf>,
    },
    /// Print the final estimate of a completed session.
    Report {
        #[arg(long, env = "OLSEG_SESSION")]
        session: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum GeoCommand {
    /// Download the state and city lists and write snapshot files.
    Fetch {
        #[arg(long, env = API_BASE_ENV, default_value = DEFAULT_API_BASE)]
        api_base: String,
        #[arg(long)]
        states: PathBuf,
        #[arg(long)]
        cities: PathBuf,
    },
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Segment(args) => cmd_segment(&args),
        Command::Stats(args) => cmd_stats(&args),
        Command::Verify(cmd) => cmd_verify(cmd),
        Command::Geo(GeoCommand::Fetch {
            api_base,
            states,
            cities,
        }) => {
            let dir = fetch_directory(&api_base, &states, &cities)?;
            eprintln!(
                "wrote {} states to {} and {} cities to {}",
                dir.state_count(),
                states.display(),
                dir.city_count(),
                cities.display()
            );
            Ok(())
        }
    }
}

/// `<output>.manifest.json`
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut p = output.as_os_str().to_owned();
    p.push(".manifest.json");
    PathBuf::from(p)
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

pub fn cmd_segment(args: &SegmentArgs) -> anyhow::Result<()> {
    let jobs = args
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if jobs == 0 {
        bail!("--jobs must be at least 1");
    }
    let mut manifest = RunManifest {
        input: args.input.clone(),
        output: args.output.clone(),
        states: args.states.clone(),
        cities: args.cities.clone(),
        jobs,
        counts: RunCounts::default(),
        started: now(),
        finished: String::new(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        fatal_error: None,
    };
    let result = segment_inner(args, jobs);
    manifest.finished = now();
    let outcome = match result {
        Ok(counts) => {
            manifest.counts = counts;
            Ok(())
        }
        Err((counts, err)) => {
            manifest.counts = counts;
            manifest.fatal_error = Some(format!("{err:#}"));
            Err(err)
        }
    };
    let mpath = manifest_path(&args.output);
    let json = serde_json::to_string_pretty(&manifest)?;
    fs::write(&mpath, json + "\n").with_context(|| format!("cannot write {}", mpath.display()))?;
    let c = manifest.counts;
    eprintln!(
        "read {}, segmented {}, skipped {}, errors {}",
        c.read, c.segmented, c.skipped, c.errors
    );
    outcome
}

fn segment_inner(args: &SegmentArgs, jobs: usize) -> Result<RunCounts, (RunCounts, anyhow::Error)> {
    let fail = |e: anyhow::Error| (RunCounts::default(), e);
    let dir = match (&args.states, &args.cities) {
        (Some(s), Some(c)) => load_directory(s, c).map_err(|e| fail(e.into()))?,
        _ => {
            log::warn!("no state/city snapshots given; court locations will be Unspecified");
            GeoDirectory::default()
        }
    };
    let extractor = match &args.codes {
        Some(p) => ReferenceExtractor::from_file(p)
            .with_context(|| format!("cannot read code list {}", p.display()))
            .map_err(fail)?,
        None => ReferenceExtractor::default(),
    };
    let input = File::open(&args.input)
        .with_context(|| format!("cannot open input {}", args.input.display()))
        .map_err(fail)?;
    let output = File::create(&args.output)
        .with_context(|| format!("cannot create output {}", args.output.display()))
        .map_err(fail)?;
    run_segment(
        BufReader::new(input),
        BufWriter::new(output),
        &dir,
        &extractor,
        jobs,
        |e| log::error!("{}: {e}", args.input.display()),
    )
    .map_err(|e| (e.counts, anyhow::Error::new(e.source)))
}

pub fn cmd_stats(args: &StatsArgs) -> anyhow::Result<()> {
    let file =
        File::open(&args.input).with_context(|| format!("cannot open {}", args.input.display()))?;
    let mut counts = CoverageCounts::default();
    let mut skipped = 0u64;
    for rec in read_segmented_stream(BufReader::new(file)) {
        match rec {
            Ok(d) => counts.add(&d),
            Err(e) if e.is_fatal() => {
                return Err(e).context(format!("reading {}", args.input.display()))
            }
            Err(e) => {
                skipped += 1;
                log::error!("{}: {e}", args.input.display());
            }
        }
    }
    if skipped > 0 {
        eprintln!("skipped {skipped} unreadable records");
    }
    let report = counts.report();
    let mut out = std::io::stdout().lock();
    if args.json {
        serde_json::to_writer_pretty(&mut out, &report)?;
        writeln!(out)?;
    } else {
        write!(out, "{}", report.to_table())?;
    }
    Ok(())
}

fn corpus_ids(corpus: &Path) -> anyhow::Result<Vec<i64>> {
    let file =
        File::open(corpus).with_context(|| format!("cannot open corpus {}", corpus.display()))?;
    let mut ids = Vec::new();
    for rec in read_segmented_stream(BufReader::new(file)) {
        match rec {
            Ok(d) => ids.push(d.id),
            Err(e) if e.is_fatal() => {
                return Err(e).context(format!("reading {}", corpus.display()))
            }
            Err(e) => log::error!("{}: {e}", corpus.display()),
        }
    }
    Ok(ids)
}

fn build_plan(args: &PlanArgs, default_population: Option<u64>) -> anyhow::Result<SamplingPlan> {
    let population = args
        .population
        .or(default_population)
        .context("--population is required")?;
    Ok(plan(
        population,
        args.confidence,
        args.margin,
        args.assumed_p,
    )?)
}

pub fn cmd_verify(cmd: VerifyCommand) -> anyhow::Result<()> {
    match cmd {
        VerifyCommand::Plan { plan, json } => {
            let p = build_plan(&plan, None)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&p)?);
            } else {
                println!("{p}");
            }
            Ok(())
        }
        VerifyCommand::Sample {
            plan,
            seed,
            corpus,
            session,
            force,
        } => {
            if session.exists() && !force {
                bail!(
                    "session file {} already exists; pass --force to replace it",
                    session.display()
                );
            }
            let ids = corpus_ids(&corpus)?;
            let p = build_plan(&plan, Some(ids.len() as u64))?;
            if p.n > ids.len() as u64 {
                bail!(
                    "sample size {} exceeds the {} decisions in {}",
                    p.n,
                    ids.len(),
                    corpus.display()
                );
            }
            let s = VerificationSession::sample(p, seed, &ids)?;
            let n = s.sampled_ids.len();
            SessionStore::create(&session, s)?;
            eprintln!(
                "sampled {n} of {} decisions into {}",
                ids.len(),
                session.display()
            );
            Ok(())
        }
        VerifyCommand::Serve {
            session,
            corpus,
            port,
            host,
            assets,
        } => {
            if !session.exists() {
                bail!("session file {} does not exist", session.display());
            }
            let state = serve::ReviewState::load(&session, &corpus)?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(serve::run(state, assets, &format!("{host}:{port}")))
        }
        VerifyCommand::Report { session, json } => {
            if !session.exists() {
                bail!("session file {} does not exist", session.display());
            }
            let store = SessionStore::open(&session)?;
            let report = match store.session().report() {
                Ok(r) => r,
                Err(e @ VerificationError::Incomplete { .. }) => {
                    bail!("{e}; finish the review before reporting")
                }
                Err(e) => return Err(e.into()),
            };
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                println!("{report}");
            }
            Ok(())
        }
    }
}
