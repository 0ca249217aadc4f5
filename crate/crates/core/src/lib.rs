//! Segmentation toolkit for German court decision dumps.
//!
//! Raw decisions (JSONL records with an HTML `content` field) are turned into
//! line sequences, split into Tenor / Tatbestand / Entscheidungsgründe /
//! Rechtsmittelbelehrung, annotated with statute and docket references and
//! written back out as JSONL. The [`verification`] module plans and evaluates
//! the manual sampling audit of that segmentation.

pub mod html_extract;
pub mod metadata;
pub mod model;
pub mod pipeline;
pub mod references;
pub mod segmenter;
pub mod stats;
pub mod verification;

pub use html_extract::{extract_lines, normalize_line, ExtractedLine, SourceTag};
pub use metadata::{normalize_court, GeoDirectory, UNSPECIFIED};
pub use model::{
    read_raw_stream, read_segmented_stream, write_segmented_stream, Court, CourtRaw,
    LegalReference, ParsedReference, RawDecision, RecordError, RefType, SegmentedDecision,
};
pub use pipeline::{process_decision, RunManifest};
pub use references::{extract_references, ReferenceExtractor};
pub use segmenter::{match_header, segment, split_gruende, SectionMarker, Segments};
pub use stats::{coverage, CoverageReport};
pub use verification::{
    critical_value, draw_sample, plan, proportion_ci, SamplingPlan, Verdict, VerificationReport,
    VerificationSession,
};
