//! Record types for the input dump and the segmented output, plus streaming
//! JSONL readers and writers.

use std::collections::HashSet;
use std::fmt;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Court metadata as it appears in the raw dump.
///
/// The dump nests `{id, name, state, city}` under `court`; the `*_id`
/// spellings are accepted as well.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CourtRaw {
    #[serde(rename = "id", alias = "court_id", default)]
    pub court_id: i64,
    #[serde(default, deserialize_with = "null_as_empty")]
    pub name: String,
    #[serde(rename = "state", alias = "state_id", default)]
    pub state_id: Option<i64>,
    #[serde(rename = "city", alias = "city_id", default)]
    pub city_id: Option<i64>,
}

/// One record of the raw input dump.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawDecision {
    pub id: i64,
    pub file_number: String,
    pub date: Option<String>,
    pub decision_type: Option<String>,
    pub ecli: Option<String>,
    pub court_raw: CourtRaw,
    pub content: String,
}

// Wire shape of the dump. Everything but `id` and `content` is optional and
// unknown keys are ignored.
#[derive(Deserialize)]
struct RawRecord {
    id: i64,
    content: Option<String>,
    #[serde(default, deserialize_with = "null_as_empty")]
    file_number: String,
    #[serde(default)]
    date: Option<String>,
    #[serde(rename = "type", default)]
    decision_type: Option<String>,
    #[serde(default)]
    ecli: Option<String>,
    #[serde(default)]
    court: Option<CourtRaw>,
}

fn null_as_empty<'de, D: serde::Deserializer<'de>>(d: D) -> Result<String, D::Error> {
    Ok(Option::<String>::deserialize(d)?.unwrap_or_default())
}

fn non_blank(s: Option<String>) -> Option<String> {
    s.filter(|s| !s.trim().is_empty())
}

/// Normalized court metadata. No field is ever empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Court {
    pub name: String,
    pub state: String,
    pub city: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RefType {
    Law,
    Case,
}

impl fmt::Display for RefType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RefType::Law => "law",
            RefType::Case => "case",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParsedReference {
    pub code: Option<String>,
    pub section: Option<String>,
    pub docket: Option<String>,
}

/// A typed citation found in the decision text.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LegalReference {
    pub ref_type: RefType,
    pub raw_text: String,
    pub parsed: Option<ParsedReference>,
}

impl LegalReference {
    pub fn law(raw_text: impl Into<String>, code: Option<String>, section: Option<String>) -> Self {
        LegalReference {
            ref_type: RefType::Law,
            raw_text: raw_text.into(),
            parsed: Some(ParsedReference {
                code,
                section,
                docket: None,
            }),
        }
    }

    pub fn case(raw_text: impl Into<String>, docket: impl Into<String>) -> Self {
        LegalReference {
            ref_type: RefType::Case,
            raw_text: raw_text.into(),
            parsed: Some(ParsedReference {
                code: None,
                section: None,
                docket: Some(docket.into()),
            }),
        }
    }

    pub fn code(&self) -> Option<&str> {
        self.parsed.as_ref().and_then(|p| p.code.as_deref())
    }

    pub fn section(&self) -> Option<&str> {
        self.parsed.as_ref().and_then(|p| p.section.as_deref())
    }

    pub fn docket(&self) -> Option<&str> {
        self.parsed.as_ref().and_then(|p| p.docket.as_deref())
    }
}

/// Output record. Field order here is the serialized key order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentedDecision {
    pub id: i64,
    pub file_number: String,
    pub date: Option<String>,
    #[serde(rename = "type")]
    pub decision_type: Option<String>,
    pub ecli: Option<String>,
    pub court: Court,
    pub tenor: String,
    pub tatbestand: String,
    pub entscheidungsgruende: String,
    pub rechtsmittelbelehrung: String,
    pub references: Vec<LegalReference>,
}

impl SegmentedDecision {
    pub fn has_tenor(&self) -> bool {
        !self.tenor.is_empty()
    }

    pub fn has_tatbestand(&self) -> bool {
        !self.tatbestand.is_empty()
    }

    pub fn has_entscheidungsgruende(&self) -> bool {
        !self.entscheidungsgruende.is_empty()
    }

    pub fn has_rechtsmittelbelehrung(&self) -> bool {
        !self.rechtsmittelbelehrung.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum RecordErrorKind {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("duplicate id {0}")]
    DuplicateId(i64),
    #[error("missing field `content`")]
    MissingContent,
    #[error("read failed: {0}")]
    Io(#[from] io::Error),
}

/// A per-line failure while reading a JSONL stream. Line numbers are 1-based.
#[derive(Debug, Error)]
#[error("line {line}: {kind}")]
pub struct RecordError {
    pub line: usize,
    pub kind: RecordErrorKind,
}

impl RecordError {
    /// I/O errors end the stream; everything else is skip-and-report.
    pub fn is_fatal(&self) -> bool {
        matches!(self.kind, RecordErrorKind::Io(_))
    }
}

/// Line iterator shared by both readers: skips blank lines, stops after the
/// first I/O error.
struct JsonLines<R> {
    reader: R,
    line_no: usize,
    buf: String,
    done: bool,
}

impl<R: BufRead> JsonLines<R> {
    fn new(reader: R) -> Self {
        JsonLines {
            reader,
            line_no: 0,
            buf: String::new(),
            done: false,
        }
    }

    fn next_line(&mut self) -> Option<Result<(usize, &str), RecordError>> {
        loop {
            if self.done {
                return None;
            }
            self.buf.clear();
            self.line_no += 1;
            match self.reader.read_line(&mut self.buf) {
                Ok(0) => {
                    self.done = true;
                    return None;
                }
                Ok(_) => {
                    if self.buf.trim().is_empty() {
                        continue;
                    }
                    return Some(Ok((self.line_no, self.buf.as_str())));
                }
                Err(e) => {
                    self.done = true;
                    return Some(Err(RecordError {
                        line: self.line_no,
                        kind: e.into(),
                    }));
                }
            }
        }
    }
}

/// Streaming reader over a raw dump. See [`read_raw_stream`].
pub struct RawStream<R> {
    lines: JsonLines<R>,
    seen: HashSet<i64>,
}

impl<R: BufRead> Iterator for RawStream<R> {
    type Item = Result<RawDecision, RecordError>;

    fn next(&mut self) -> Option<Self::Item> {
        let (line, text) = match self.lines.next_line()? {
            Ok(v) => v,
            Err(e) => return Some(Err(e)),
        };
        let err = |kind: RecordErrorKind| Some(Err(RecordError { line, kind }));
        let rec: RawRecord = match serde_json::from_str(text) {
            Ok(r) => r,
            Err(e) => return err(e.into()),
        };
        let Some(content) = rec.content else {
            return err(RecordErrorKind::MissingContent);
        };
        if !self.seen.insert(rec.id) {
            return err(RecordErrorKind::DuplicateId(rec.id));
        }
        Some(Ok(RawDecision {
            id: rec.id,
            file_number: rec.file_number,
            date: non_blank(rec.date),
            decision_type: non_blank(rec.decision_type),
            ecli: non_blank(rec.ecli),
            court_raw: rec.court.unwrap_or_default(),
            content,
        }))
    }
}

/// Reads newline-delimited raw decisions in file order.
///
/// Malformed lines, records without `id`/`content` and repeated ids are
/// yielded as [`RecordError`]s and iteration continues; an I/O error ends
/// the stream. Only the set of seen ids is retained between records.
pub fn read_raw_stream<R: BufRead>(reader: R) -> RawStream<R> {
    RawStream {
        lines: JsonLines::new(reader),
        seen: HashSet::new(),
    }
}

/// Streaming reader over segmented output. See [`read_segmented_stream`].
pub struct SegmentedStream<R> {
    lines: JsonLines<R>,
}

impl<R: BufRead> Iterator for SegmentedStream<R> {
    type Item = Result<SegmentedDecision, RecordError>;

    fn next(&mut self) -> Option<Self::Item> {
        let (line, text) = match self.lines.next_line()? {
            Ok(v) => v,
            Err(e) => return Some(Err(e)),
        };
        Some(serde_json::from_str(text).map_err(|e| RecordError {
            line,
            kind: e.into(),
        }))
    }
}

pub fn read_segmented_stream<R: BufRead>(reader: R) -> SegmentedStream<R> {
    SegmentedStream {
        lines: JsonLines::new(reader),
    }
}

#[derive(Debug, Error)]
#[error("write failed after {written} records: {source}")]
pub struct WriteError {
    pub written: usize,
    #[source]
    pub source: io::Error,
}

/// Serializes one record as a single JSON line (trailing newline included).
pub fn write_record<W: Write>(out: &mut W, record: &SegmentedDecision) -> io::Result<()> {
    serde_json::to_writer(&mut *out, record)?;
    out.write_all(b"\n")
}

/// Writes one JSON object per line and returns the number of records written.
pub fn write_segmented_stream<I, W>(records: I, mut out: W) -> Result<usize, WriteError>
where
    I: IntoIterator<Item = SegmentedDecision>,
    W: Write,
{
    let mut written = 0;
    for rec in records {
        write_record(&mut out, &rec).map_err(|source| WriteError { written, source })?;
        written += 1;
    }
    out.flush()
        .map_err(|source| WriteError { written, source })?;
    Ok(written)
}
