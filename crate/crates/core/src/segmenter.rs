//! Section boundary detection.
//!
//! A cursor starts in the Tenor. Every line that is exactly a section header
//! (compact `Tenor:` or spaced-letter `T e n o r` form, any case, optional
//! trailing colons) moves the cursor and is consumed; every other line is
//! appended to the section under the cursor. Lines gathered under a
//! `Gründe` header are split afterwards by [`split_gruende`].

use std::fmt;
use std::sync::LazyLock;

use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SectionMarker {
    Tenor,
    Tatbestand,
    Entscheidungsgruende,
    Gruende,
    Rechtsmittelbelehrung,
}

impl SectionMarker {
    pub const ALL: [SectionMarker; 5] = [
        SectionMarker::Tenor,
        SectionMarker::Tatbestand,
        SectionMarker::Entscheidungsgruende,
        SectionMarker::Gruende,
        SectionMarker::Rechtsmittelbelehrung,
    ];

    /// The header word as it is written in decisions.
    pub fn word(self) -> &'static str {
        match self {
            SectionMarker::Tenor => "tenor",
            SectionMarker::Tatbestand => "tatbestand",
            SectionMarker::Entscheidungsgruende => "entscheidungsgründe",
            SectionMarker::Gruende => "gründe",
            SectionMarker::Rechtsmittelbelehrung => "rechtsmittelbelehrung",
        }
    }
}

impl fmt::Display for SectionMarker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.word())
    }
}

/// One of the four output fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Section {
    Tenor,
    Tatbestand,
    Entscheidungsgruende,
    Rechtsmittelbelehrung,
}

/// Where an input line ended up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LineRole {
    Body(Section),
    Header(SectionMarker),
    /// A Roman-numeral subdivision marker of the Gründe consumed by the split.
    Numeral,
}

struct HeaderPattern {
    marker: SectionMarker,
    compact: Regex,
    spaced: Regex,
}

fn header_regex(body: &str) -> Regex {
    RegexBuilder::new(&format!(r"^\s*{body}\s*:*$"))
        .case_insensitive(true)
        .build()
        .expect("header pattern")
}

static HEADERS: LazyLock<Vec<HeaderPattern>> = LazyLock::new(|| {
    SectionMarker::ALL
        .iter()
        .map(|&marker| {
            let chars: Vec<String> = marker
                .word()
                .chars()
                .map(|c| regex::escape(&c.to_string()))
                .collect();
            HeaderPattern {
                marker,
                compact: header_regex(&chars.concat()),
                spaced: header_regex(&chars.join(r"\s+")),
            }
        })
        .collect()
});

static ROMAN: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^\s*(I|II|III|IV|V|VI|VII|VIII|IX|X)\s*\.?\s*$").expect("numeral pattern")
});

/// Returns the marker if the whole line is a section header.
pub fn match_header(line: &str) -> Option<SectionMarker> {
    HEADERS
        .iter()
        .find(|h| h.compact.is_match(line) || h.spaced.is_match(line))
        .map(|h| h.marker)
}

/// Value of a full-line Roman-numeral marker ("I.", "II", " IV . ").
pub fn roman_marker(line: &str) -> Option<u8> {
    let caps = ROMAN.captures(line)?;
    Some(match &caps[1] {
        "I" => 1,
        "II" => 2,
        "III" => 3,
        "IV" => 4,
        "V" => 5,
        "VI" => 6,
        "VII" => 7,
        "VIII" => 8,
        "IX" => 9,
        _ => 10,
    })
}

/// Role of each Gründe line after splitting; indices match the input.
pub fn split_gruende_roles(lines: &[&str]) -> Vec<LineRole> {
    let first = lines.iter().position(|l| roman_marker(l) == Some(1));
    let second = first.and_then(|i| {
        lines[i + 1..]
            .iter()
            .position(|l| roman_marker(l) == Some(2))
            .map(|j| i + 1 + j)
    });
    let (Some(first), Some(second)) = (first, second) else {
        return vec![LineRole::Body(Section::Entscheidungsgruende); lines.len()];
    };
    lines
        .iter()
        .enumerate()
        .map(|(i, line)| {
            if i == first || i == second {
                LineRole::Numeral
            } else if i < second {
                // Anything before "I." is introductory and belongs with the facts.
                LineRole::Body(Section::Tatbestand)
            } else if roman_marker(line).is_some_and(|n| n >= 3) {
                LineRole::Numeral
            } else {
                LineRole::Body(Section::Entscheidungsgruende)
            }
        })
        .collect()
}

/// Splits lines collected under a `Gründe` header.
///
/// With a full-line "I." followed later by "II.", the lines in between become
/// Tatbestand and the lines from "II." on become Entscheidungsgründe; the "I."
/// and "II." markers and any later "III."-"X." markers are dropped. Without
/// that pair the whole block is Entscheidungsgründe, markers included.
pub fn split_gruende<S: AsRef<str>>(lines: &[S]) -> (Vec<String>, Vec<String>) {
    let refs: Vec<&str> = lines.iter().map(AsRef::as_ref).collect();
    let mut tatbestand = Vec::new();
    let mut gruende = Vec::new();
    for (line, role) in refs.iter().zip(split_gruende_roles(&refs)) {
        match role {
            LineRole::Body(Section::Tatbestand) => tatbestand.push(line.to_string()),
            LineRole::Body(_) => gruende.push(line.to_string()),
            _ => {}
        }
    }
    (tatbestand, gruende)
}

/// Result of segmenting one decision.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Segments {
    pub tenor: Vec<String>,
    pub tatbestand: Vec<String>,
    pub entscheidungsgruende: Vec<String>,
    pub rechtsmittelbelehrung: Vec<String>,
    /// One entry per input line.
    pub roles: Vec<LineRole>,
    /// Headers seen more than once, in order of their repeat.
    pub repeated_headers: Vec<SectionMarker>,
}

impl Segments {
    pub fn section(&self, section: Section) -> &[String] {
        match section {
            Section::Tenor => &self.tenor,
            Section::Tatbestand => &self.tatbestand,
            Section::Entscheidungsgruende => &self.entscheidungsgruende,
            Section::Rechtsmittelbelehrung => &self.rechtsmittelbelehrung,
        }
    }

    fn section_mut(&mut self, section: Section) -> &mut Vec<String> {
        match section {
            Section::Tenor => &mut self.tenor,
            Section::Tatbestand => &mut self.tatbestand,
            Section::Entscheidungsgruende => &mut self.entscheidungsgruende,
            Section::Rechtsmittelbelehrung => &mut self.rechtsmittelbelehrung,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.tenor.is_empty()
            && self.tatbestand.is_empty()
            && self.entscheidungsgruende.is_empty()
            && self.rechtsmittelbelehrung.is_empty()
    }
}

enum Cursor {
    Section(Section),
    Gruende,
}

/// Assigns every line to a section or consumes it as a header.
///
/// Repeated headers switch the cursor again and their content accrues to the
/// same section in input order. All Gründe blocks of a decision are split
/// together. Each output list preserves input order.
pub fn segment<S: AsRef<str>>(lines: &[S]) -> Segments {
    let mut roles = Vec::with_capacity(lines.len());
    let mut gruende_idx = Vec::new();
    let mut seen = Vec::new();
    let mut repeated_headers = Vec::new();
    let mut cursor = Cursor::Section(Section::Tenor);

    for (i, line) in lines.iter().enumerate() {
        if let Some(marker) = match_header(line.as_ref()) {
            if seen.contains(&marker) {
                repeated_headers.push(marker);
            } else {
                seen.push(marker);
            }
            cursor = match marker {
                SectionMarker::Tenor => Cursor::Section(Section::Tenor),
                SectionMarker::Tatbestand => Cursor::Section(Section::Tatbestand),
                SectionMarker::Entscheidungsgruende => {
                    Cursor::Section(Section::Entscheidungsgruende)
                }
                SectionMarker::Rechtsmittelbelehrung => {
                    Cursor::Section(Section::Rechtsmittelbelehrung)
                }
                SectionMarker::Gruende => Cursor::Gruende,
            };
            roles.push(LineRole::Header(marker));
            continue;
        }
        match cursor {
            Cursor::Section(s) => roles.push(LineRole::Body(s)),
            Cursor::Gruende => {
                gruende_idx.push(i);
                // Placeholder, resolved below.
                roles.push(LineRole::Body(Section::Entscheidungsgruende));
            }
        }
    }

    let gruende_lines: Vec<&str> = gruende_idx.iter().map(|&i| lines[i].as_ref()).collect();
    for (&i, role) in gruende_idx.iter().zip(split_gruende_roles(&gruende_lines)) {
        roles[i] = role;
    }

    let mut out = Segments {
        repeated_headers,
        ..Segments::default()
    };
    for (line, role) in lines.iter().zip(&roles) {
        if let LineRole::Body(s) = role {
            out.section_mut(*s).push(line.as_ref().to_string());
        }
    }
    out.roles = roles;
    out
}
