//! End-to-end processing of a raw dump into segmented records.

use std::io::{BufRead, Write};
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::html_extract::extract_texts;
use crate::metadata::{normalize_court, GeoDirectory};
use crate::model::{read_raw_stream, write_record, RawDecision, RecordError, SegmentedDecision};
use crate::references::ReferenceExtractor;
use crate::segmenter::{segment, SectionMarker};

/// Records handed to the worker pool at a time. Output order is restored per
/// batch, so memory stays bounded by the batch, not the corpus.
pub const BATCH_SIZE: usize = 512;

/// Per-record observations worth logging.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RecordNotes {
    pub repeated_headers: Vec<SectionMarker>,
}

pub fn process_decision(
    raw: &RawDecision,
    dir: &GeoDirectory,
    extractor: &ReferenceExtractor,
) -> SegmentedDecision {
    process_with_notes(raw, dir, extractor).0
}

pub fn process_with_notes(
    raw: &RawDecision,
    dir: &GeoDirectory,
    extractor: &ReferenceExtractor,
) -> (SegmentedDecision, RecordNotes) {
    let lines = extract_texts(&raw.content);
    let segments = segment(&lines);
    let references = extractor.extract(&lines);
    let decision = SegmentedDecision {
        id: raw.id,
        file_number: raw.file_number.clone(),
        date: raw.date.clone(),
        decision_type: raw.decision_type.clone(),
        ecli: raw.ecli.clone(),
        court: normalize_court(&raw.court_raw, dir),
        tenor: segments.tenor.join("\n"),
        tatbestand: segments.tatbestand.join("\n"),
        entscheidungsgruende: segments.entscheidungsgruende.join("\n"),
        rechtsmittelbelehrung: segments.rechtsmittelbelehrung.join("\n"),
        references,
    };
    let notes = RecordNotes {
        repeated_headers: segments.repeated_headers,
    };
    (decision, notes)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunCounts {
    /// Non-blank input lines.
    pub read: u64,
    pub segmented: u64,
    /// Input lines that did not yield a record.
    pub skipped: u64,
    /// Per-record errors logged.
    pub errors: u64,
}

/// Written next to the output of every `segment` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub input: PathBuf,
    pub output: PathBuf,
    pub states: Option<PathBuf>,
    pub cities: Option<PathBuf>,
    pub jobs: usize,
    pub counts: RunCounts,
    pub started: String,
    pub finished: String,
    pub tool_version: String,
    /// Set when the run stopped early.
    pub fatal_error: Option<String>,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("reading input failed: {0}")]
    Read(RecordError),
    #[error("writing output failed: {0}")]
    Write(std::io::Error),
    #[error("cannot start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

/// Error with the counts reached before the run stopped.
#[derive(Debug, Error)]
#[error("{source}")]
pub struct RunError {
    pub counts: RunCounts,
    #[source]
    pub source: PipelineError,
}

/// Streams `input` through the pipeline into `output` on `jobs` workers.
///
/// Output order equals input order regardless of `jobs`. Malformed records
/// are passed to `on_error` and skipped; read/write I/O failures stop the
/// run.
pub fn run_segment<R, W, F>(
    input: R,
    mut output: W,
    dir: &GeoDirectory,
    extractor: &ReferenceExtractor,
    jobs: usize,
    mut on_error: F,
) -> Result<RunCounts, RunError>
where
    R: BufRead,
    W: Write,
    F: FnMut(&RecordError),
{
    let mut counts = RunCounts::default();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| RunError {
            counts,
            source: e.into(),
        })?;
    let mut stream = read_raw_stream(input);
    let mut batch: Vec<RawDecision> = Vec::with_capacity(BATCH_SIZE);
    loop {
        batch.clear();
        let mut fatal = None;
        for item in stream.by_ref() {
            match item {
                Ok(rec) => {
                    counts.read += 1;
                    batch.push(rec);
                    if batch.len() == BATCH_SIZE {
                        break;
                    }
                }
                Err(e) if e.is_fatal() => {
                    fatal = Some(e);
                    break;
                }
                Err(e) => {
                    counts.read += 1;
                    counts.skipped += 1;
                    counts.errors += 1;
                    on_error(&e);
                }
            }
        }
        let processed: Vec<(SegmentedDecision, RecordNotes)> = pool.install(|| {
            batch
                .par_iter()
                .map(|raw| process_with_notes(raw, dir, extractor))
                .collect()
        });
        for (decision, notes) in &processed {
            if !notes.repeated_headers.is_empty() {
                log::info!(
                    "decision {}: repeated headers {:?}",
                    decision.id,
                    notes.repeated_headers
                );
            }
            write_record(&mut output, decision).map_err(|e| RunError {
                counts,
                source: PipelineError::Write(e),
            })?;
            counts.segmented += 1;
        }
        if let Some(e) = fatal {
            return Err(RunError {
                counts,
                source: PipelineError::Read(e),
            });
        }
        if batch.len() < BATCH_SIZE {
            break;
        }
    }
    output.flush().map_err(|e| RunError {
        counts,
        source: PipelineError::Write(e),
    })?;
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CourtRaw;
    use std::io::Cursor;

    fn raw(id: i64, content: &str) -> RawDecision {
        RawDecision {
            id,
            file_number: "1 O 1/20".into(),
            date: None,
            decision_type: Some("Urteil".into()),
            ecli: None,
            court_raw: CourtRaw {
                court_id: 1,
                name: "LG Bonn".into(),
                state_id: None,
                city_id: None,
            },
            content: content.into(),
        }
    }

    #[test]
    fn blank_content_yields_empty_sections() {
        let d = process_decision(
            &raw(1, ""),
            &GeoDirectory::default(),
            &ReferenceExtractor::default(),
        );
        assert!(d.tenor.is_empty() && d.tatbestand.is_empty());
        assert!(d.entscheidungsgruende.is_empty() && d.rechtsmittelbelehrung.is_empty());
        assert!(d.references.is_empty());
        assert_eq!(d.court.state, "Unspecified");
    }

    #[test]
    fn full_decision() {
        let html = "<p>Tenor</p><p>Die Klage wird abgewiesen.</p><p>Die Kosten trägt der Kläger.</p>\
                    <h2>Tatbestand</h2><p>Die Parteien streiten.</p>\
                    <h2>Entscheidungsgründe</h2><p>Die Klage ist nach § 543 Abs. 2 BGB unbegründet.</p>";
        let d = process_decision(
            &raw(2, html),
            &GeoDirectory::default(),
            &ReferenceExtractor::default(),
        );
        assert_eq!(
            d.tenor,
            "Die Klage wird abgewiesen.\nDie Kosten trägt der Kläger."
        );
        assert_eq!(d.tatbestand, "Die Parteien streiten.");
        assert_eq!(
            d.entscheidungsgruende,
            "Die Klage ist nach § 543 Abs. 2 BGB unbegründet."
        );
        assert_eq!(d.references.len(), 1);
        assert_eq!(d.references[0].raw_text, "§ 543 Abs. 2 BGB");
    }

    fn corpus(n: i64) -> String {
        let mut s = String::new();
        for i in 0..n {
            let content = format!(
                "<p>Tenor</p><p>Urteil {i}</p><p>Gründe</p><p>I.</p><p>Fakt {i}</p><p>II.</p><p>§ {i} BGB</p>"
            );
            s.push_str(
                &serde_json::to_string(&serde_json::json!({"id": i, "content": content})).unwrap(),
            );
            s.push('\n');
            if i % 97 == 0 {
                s.push_str("garbage\n");
            }
        }
        s
    }

    #[test]
    fn parallel_equals_sequential() {
        let input = corpus(1500);
        let run = |jobs| {
            let mut out = Vec::new();
            let mut errs = 0;
            let counts = run_segment(
                Cursor::new(input.as_bytes()),
                &mut out,
                &GeoDirectory::default(),
                &ReferenceExtractor::default(),
                jobs,
                |_| errs += 1,
            )
            .unwrap();
            (out, counts, errs)
        };
        let (seq, c1, e1) = run(1);
        let (par, c8, e8) = run(8);
        assert_eq!(seq, par);
        assert_eq!(c1, c8);
        assert_eq!(e1, e8);
        assert_eq!(c1.segmented, 1500);
        assert_eq!(c1.skipped, 16);
        assert_eq!(c1.read, c1.segmented + c1.skipped);
    }

    #[test]
    fn empty_input() {
        let mut out = Vec::new();
        let c = run_segment(
            Cursor::new(""),
            &mut out,
            &GeoDirectory::default(),
            &ReferenceExtractor::default(),
            2,
            |_| {},
        )
        .unwrap();
        assert_eq!(c, RunCounts::default());
        assert!(out.is_empty());
    }
}
