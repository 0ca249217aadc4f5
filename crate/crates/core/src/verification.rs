//! Statistical audit of the segmentation.
//!
//! A [`SamplingPlan`] sizes the review sample with Cochran's formula and the
//! finite population correction, [`draw_sample`] picks the decisions
//! reproducibly, a [`VerificationSession`] collects the reviewer's verdicts
//! and [`VerificationSession::report`] turns them into a point estimate with
//! a normal-approximation confidence interval.

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

/// The interval shown while reviewing is labelled interim below this many
/// judgments.
pub const INTERIM_THRESHOLD: usize = 30;

#[derive(Debug, Error)]
pub enum VerificationError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("decision {0} is not part of the sample")]
    UnknownId(i64),
    #[error("incomplete review: {missing} of {total} sampled decisions have no judgment")]
    Incomplete {
        missing: usize,
        total: usize,
        missing_ids: Vec<i64>,
    },
    #[error("session file {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("session file {path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
}

fn domain(msg: impl Into<String>) -> VerificationError {
    VerificationError::Domain(msg.into())
}

pub type Result<T> = std::result::Result<T, VerificationError>;

/// Two-sided standard-normal critical value.
///
/// 0.90, 0.95 and 0.99 return the customary table values 1.645, 1.96 and
/// 2.576; other levels use the exact quantile.
pub fn critical_value(confidence: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(domain(format!("confidence {confidence} outside (0, 1)")));
    }
    for (level, z) in [(0.90, 1.645), (0.95, 1.96), (0.99, 2.576)] {
        if (confidence - level).abs() < 1e-12 {
            return Ok(z);
        }
    }
    let normal = Normal::standard();
    Ok(normal.inverse_cdf(1.0 - (1.0 - confidence) / 2.0))
}

/// Infinite-population sample size `z² p (1 − p) / e²`.
pub fn cochran_n0(z: f64, p: f64, e: f64) -> Result<f64> {
    if z.is_nan() || z <= 0.0 {
        return Err(domain(format!("critical value {z} must be positive")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(domain(format!("proportion {p} outside [0, 1]")));
    }
    if !(e > 0.0 && e < 1.0) {
        return Err(domain(format!("margin of error {e} outside (0, 1)")));
    }
    Ok(z * z * p * (1.0 - p) / (e * e))
}

/// Finite population correction `n0 / (1 + (n0 − 1) / N)`.
pub fn fpc_sample_size(n0: f64, population_n: u64) -> Result<f64> {
    if population_n == 0 {
        return Err(domain("population size must be at least 1"));
    }
    if n0.is_nan() || n0 < 0.0 {
        return Err(domain(format!("initial sample size {n0} is negative")));
    }
    if n0 == 0.0 {
        return Ok(0.0);
    }
    Ok(n0 / (1.0 + (n0 - 1.0) / population_n as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub population_n: u64,
    pub confidence: f64,
    pub margin_e: f64,
    pub assumed_p: f64,
    pub z: f64,
    pub n0: f64,
    pub n_real: f64,
    pub n: u64,
}

pub const DEFAULT_ASSUMED_P: f64 = 0.5;

/// Composes the critical value, Cochran's `n0` and the finite population
/// correction; the final size is rounded up.
pub fn plan(
    population_n: u64,
    confidence: f64,
    margin: f64,
    assumed_p: f64,
) -> Result<SamplingPlan> {
    let z = critical_value(confidence)?;
    let n0 = cochran_n0(z, assumed_p, margin)?;
    let n_real = fpc_sample_size(n0, population_n)?;
    // Absorb float noise so an exact integer is not bumped up by one.
    let n = (n_real - 1e-9).ceil().max(0.0) as u64;
    if n > population_n {
        return Err(domain(format!(
            "sample size {n} exceeds population {population_n}"
        )));
    }
    Ok(SamplingPlan {
        population_n,
        confidence,
        margin_e: margin,
        assumed_p,
        z,
        n0,
        n_real,
        n,
    })
}

impl std::fmt::Display for SamplingPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "population N     {}", self.population_n)?;
        writeln!(f, "confidence       {}", self.confidence)?;
        writeln!(f, "margin e         {}", self.margin_e)?;
        writeln!(f, "assumed p        {}", self.assumed_p)?;
        writeln!(f, "critical z       {}", self.z)?;
        writeln!(f, "n0               {:.2}", self.n0)?;
        writeln!(f, "n (FPC)          {:.2}", self.n_real)?;
        write!(f, "sample size n    {}", self.n)
    }
}

/// Uniform sample of `n` ids without replacement, in draw order.
///
/// Shuffle-prefix: for `i` in `0..n` swap position `i` with a uniformly
/// chosen position in `i..len`, using ChaCha8 seeded from `seed`. The result
/// depends only on the order of `ids`, `n` and `seed`.
pub fn draw_sample(ids: &[i64], n: usize, seed: u64) -> Result<Vec<i64>> {
    if n > ids.len() {
        return Err(domain(format!("cannot draw {n} from {} ids", ids.len())));
    }
    let mut seen = HashSet::with_capacity(ids.len());
    if let Some(dup) = ids.iter().find(|id| !seen.insert(**id)) {
        return Err(domain(format!("duplicate id {dup} in population")));
    }
    let mut pool = ids.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..n {
        let j = rng.random_range(i..pool.len());
        pool.swap(i, j);
    }
    pool.truncate(n);
    Ok(pool)
}

/// Confidence interval for a proportion: normal approximation with finite
/// population correction, clipped to [0, 1].
pub fn proportion_ci(
    k_correct: u64,
    n: u64,
    population_n: u64,
    confidence: f64,
) -> Result<(f64, f64)> {
    let (lo, hi, _) = proportion_ci_with_half_width(k_correct, n, population_n, confidence)?;
    Ok((lo, hi))
}

fn proportion_ci_with_half_width(
    k: u64,
    n: u64,
    population_n: u64,
    confidence: f64,
) -> Result<(f64, f64, f64)> {
    if n == 0 {
        return Err(domain("sample size must be positive"));
    }
    if k > n || n > population_n {
        return Err(domain(format!(
            "need k <= n <= N, got k={k} n={n} N={population_n}"
        )));
    }
    let z = critical_value(confidence)?;
    let p_hat = k as f64 / n as f64;
    let fpc = if population_n > 1 {
        ((population_n - n) as f64 / (population_n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let half = z * (p_hat * (1.0 - p_hat) / n as f64).sqrt() * fpc;
    Ok(((p_hat - half).max(0.0), (p_hat + half).min(1.0), half))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Correct,
    Incorrect,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgment {
    pub verdict: Verdict,
    pub note: String,
    /// RFC 3339, UTC.
    pub timestamp: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub n: u64,
    pub k_correct: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub half_width: f64,
    pub confidence: f64,
    pub population_n: u64,
}

impl std::fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "reviewed         {} of N = {}",
            self.n, self.population_n
        )?;
        writeln!(f, "correct          {}", self.k_correct)?;
        writeln!(
            f,
            "p_hat            {:.4} ({:.2}%)",
            self.p_hat,
            100.0 * self.p_hat
        )?;
        writeln!(
            f,
            "half-width       {:.4} (±{:.2}%)",
            self.half_width,
            100.0 * self.half_width
        )?;
        write!(
            f,
            "{:.0}% CI           ({:.4}, {:.4})",
            100.0 * self.confidence,
            self.ci_low,
            self.ci_high
        )
    }
}

/// Progress summary served to the review UI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Progress {
    pub judged: usize,
    pub total: usize,
    pub k_correct: u64,
    /// Estimate over the judged cases so far; absent before the first judgment.
    pub estimate: Option<InterimEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterimEstimate {
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// True while fewer than [`INTERIM_THRESHOLD`] cases are judged.
    pub interim: bool,
}

/// The drawn sample and the judgments recorded for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationSession {
    pub plan: SamplingPlan,
    pub seed: u64,
    pub sampled_ids: Vec<i64>,
    pub judgments: BTreeMap<i64, Judgment>,
}

impl VerificationSession {
    /// Draws `plan.n` ids from the corpus ids (sorted first, so input order
    /// does not matter).
    pub fn sample(plan: SamplingPlan, seed: u64, corpus_ids: &[i64]) -> Result<Self> {
        let mut ids = corpus_ids.to_vec();
        ids.sort_unstable();
        let n = usize::try_from(plan.n).map_err(|_| domain("sample size too large"))?;
        let sampled_ids = draw_sample(&ids, n, seed)?;
        Ok(VerificationSession {
            plan,
            seed,
            sampled_ids,
            judgments: BTreeMap::new(),
        })
    }

    pub fn contains(&self, id: i64) -> bool {
        self.sampled_ids.contains(&id)
    }

    /// Upserts a verdict for a sampled decision.
    pub fn record_judgment(
        &mut self,
        id: i64,
        verdict: Verdict,
        note: &str,
        timestamp: String,
    ) -> Result<()> {
        if !self.contains(id) {
            return Err(VerificationError::UnknownId(id));
        }
        self.judgments.insert(
            id,
            Judgment {
                verdict,
                note: note.to_string(),
                timestamp,
            },
        );
        Ok(())
    }

    pub fn missing_ids(&self) -> Vec<i64> {
        self.sampled_ids
            .iter()
            .copied()
            .filter(|id| !self.judgments.contains_key(id))
            .collect()
    }

    pub fn k_correct(&self) -> u64 {
        self.judgments
            .values()
            .filter(|j| j.verdict == Verdict::Correct)
            .count() as u64
    }

    pub fn progress(&self) -> Progress {
        let judged = self.judgments.len();
        let k = self.k_correct();
        let estimate = (judged > 0)
            .then(|| {
                proportion_ci(
                    k,
                    judged as u64,
                    self.plan.population_n.max(judged as u64),
                    self.plan.confidence,
                )
                .ok()
                .map(|(ci_low, ci_high)| InterimEstimate {
                    p_hat: k as f64 / judged as f64,
                    ci_low,
                    ci_high,
                    interim: judged < INTERIM_THRESHOLD,
                })
            })
            .flatten();
        Progress {
            judged,
            total: self.sampled_ids.len(),
            k_correct: k,
            estimate,
        }
    }

    /// Final estimate; every sampled id must be judged.
    pub fn report(&self) -> Result<VerificationReport> {
        let missing_ids = self.missing_ids();
        if !missing_ids.is_empty() {
            return Err(VerificationError::Incomplete {
                missing: missing_ids.len(),
                total: self.sampled_ids.len(),
                missing_ids,
            });
        }
        let n = self.sampled_ids.len() as u64;
        let k = self.k_correct();
        let (ci_low, ci_high, half_width) =
            proportion_ci_with_half_width(k, n, self.plan.population_n, self.plan.confidence)?;
        Ok(VerificationReport {
            n,
            k_correct: k,
            p_hat: k as f64 / n as f64,
            ci_low,
            ci_high,
            half_width,
            confidence: self.plan.confidence,
            population_n: self.plan.population_n,
        })
    }
}

pub fn now_timestamp() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

#[derive(Serialize, Deserialize)]
struct JournalEntry {
    id: i64,
    #[serde(flatten)]
    judgment: Judgment,
}

/// A session backed by a JSON file plus an append-only journal.
///
/// Each judgment is appended to `<session>.journal` and synced before the
/// in-memory session changes. Every [`SessionStore::COMPACT_EVERY`] entries
/// the full session is rewritten atomically and the journal truncated.
/// Opening replays the journal, ignoring a torn final line.
#[derive(Debug)]
pub struct SessionStore {
    path: PathBuf,
    journal: PathBuf,
    session: VerificationSession,
    journal_entries: usize,
}

impl SessionStore {
    pub const COMPACT_EVERY: usize = 64;

    fn journal_path(path: &Path) -> PathBuf {
        let mut p = path.as_os_str().to_owned();
        p.push(".journal");
        PathBuf::from(p)
    }

    /// Writes a fresh session file, replacing any previous one and its journal.
    pub fn create(path: &Path, session: VerificationSession) -> Result<Self> {
        let journal = Self::journal_path(path);
        write_session_file(path, &session)?;
        match fs::remove_file(&journal) {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::NotFound => {}
            Err(source) => {
                return Err(VerificationError::Io {
                    path: journal,
                    source,
                })
            }
        }
        Ok(SessionStore {
            path: path.to_owned(),
            journal,
            session,
            journal_entries: 0,
        })
    }

    pub fn open(path: &Path) -> Result<Self> {
        let io_err = |p: &Path| {
            let p = p.to_owned();
            move |source| VerificationError::Io { path: p, source }
        };
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let mut session: VerificationSession =
            serde_json::from_str(&text).map_err(|source| VerificationError::Json {
                path: path.to_owned(),
                source,
            })?;
        let journal = Self::journal_path(path);
        let mut journal_entries = 0;
        match File::open(&journal) {
            Ok(f) => {
                let lines: Vec<String> = BufReader::new(f)
                    .lines()
                    .collect::<io::Result<_>>()
                    .map_err(io_err(&journal))?;
                let last = lines.len().saturating_sub(1);
                for (i, line) in lines.iter().enumerate() {
                    if line.trim().is_empty() {
                        continue;
                    }
                    match serde_json::from_str::<JournalEntry>(line) {
                        Ok(e) => {
                            if session.contains(e.id) {
                                session.judgments.insert(e.id, e.judgment);
                                journal_entries += 1;
                            } else {
                                warn!("journal entry for unsampled id {} ignored", e.id);
                            }
                        }
                        Err(_) if i == last => warn!("ignoring torn final journal line"),
                        Err(source) => {
                            return Err(VerificationError::Json {
                                path: journal,
                                source,
                            })
                        }
                    }
                }
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => {}
            Err(source) => {
                return Err(VerificationError::Io {
                    path: journal,
                    source,
                })
            }
        }
        Ok(SessionStore {
            path: path.to_owned(),
            journal,
            session,
            journal_entries,
        })
    }

    pub fn session(&self) -> &VerificationSession {
        &self.session
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Validates, persists, then applies the judgment.
    pub fn record_judgment(&mut self, id: i64, verdict: Verdict, note: &str) -> Result<()> {
        if !self.session.contains(id) {
            return Err(VerificationError::UnknownId(id));
        }
        let entry = JournalEntry {
            id,
            judgment: Judgment {
                verdict,
                note: note.to_string(),
                timestamp: now_timestamp(),
            },
        };
        let mut line = serde_json::to_string(&entry).expect("journal entry serializes");
        line.push('\n');
        let append = || -> io::Result<()> {
            let mut f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(&self.journal)?;
            f.write_all(line.as_bytes())?;
            f.sync_data()
        };
        append().map_err(|source| VerificationError::Io {
            path: self.journal.clone(),
            source,
        })?;
        self.session.judgments.insert(id, entry.judgment);
        self.journal_entries += 1;
        if self.journal_entries >= Self::COMPACT_EVERY {
            if let Err(e) = self.compact() {
                warn!("compaction deferred: {e}");
            }
        }
        Ok(())
    }

    /// Folds the journal into the session file.
    pub fn compact(&mut self) -> Result<()> {
        write_session_file(&self.path, &self.session)?;
        match fs::remove_file(&self.journal) {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::NotFound => {}
            Err(source) => {
                return Err(VerificationError::Io {
                    path: self.journal.clone(),
                    source,
                })
            }
        }
        self.journal_entries = 0;
        Ok(())
    }
}

/// Pretty JSON written to a temporary sibling and renamed into place.
pub fn write_session_file(path: &Path, session: &VerificationSession) -> Result<()> {
    let io_err = |source| VerificationError::Io {
        path: path.to_owned(),
        source,
    };
    let mut json = serde_json::to_string_pretty(session).expect("session serializes");
    json.push('\n');
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = File::create(&tmp).map_err(io_err)?;
        f.write_all(json.as_bytes()).map_err(io_err)?;
        f.sync_all().map_err(io_err)?;
    }
    fs::rename(&tmp, path).map_err(io_err)
}
