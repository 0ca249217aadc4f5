//! Statute and case citation extraction.
//!
//! Statute citations start with `§`, `§§`, `Art.` or `Artikel`, continue with
//! one or more section numbers and their `Abs.`/`Satz`/`Nr.`/`lit.` qualifiers
//! and end with a code token such as `BGB` or `SGB V`. Enumerations expand
//! into one reference per section number. Case citations are docket numbers
//! (`VIII ZR 21/19`, `1 BvR 1234/20`, `B 12 KR 1/19 R`) and ECLI strings.

use std::collections::HashMap;
use std::io;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;

use crate::model::{LegalReference, RefType};

/// Codes recognized with full confidence. Anything else that looks like an
/// abbreviation still matches, flagged as unknown.
pub const DEFAULT_CODES: &[&str] = &[
    "BGB", "ZPO", "StGB", "StPO", "GG", "VwGO", "SGB", "HGB", "AO", "UrhG", "AktG", "ArbGG",
    "AsylG", "AufenthG", "BauGB", "BetrVG", "BVerfGG", "EGBGB", "EStG", "FamFG", "FGO", "GKG",
    "GmbHG", "GVG", "InsO", "KSchG", "MarkenG", "OWiG", "PatG", "RVG", "SGG", "StVG", "StVO",
    "TzBfG", "UStG", "UWG", "VwVfG", "WEG", "ZVG",
];

static STATUTE_PREFIX: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"§§|§|\bArt\.|\bArtikel\b").unwrap());
static WS: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s+").unwrap());
static NUMBER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\d+(?:[a-z]\b)?").unwrap());
static LETTER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^[a-z]\b\)?").unwrap());
static QUALIFIER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"^(?:Abs\.|Absatz\b|Satz\b|S\.|Nrn?\.|Nummer\b|lit\.|Buchst\.|Alt\.|Halbs\.|Hs\.|Var\.)",
    )
    .unwrap()
});
static SEPARATOR: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(?:,|und\b|sowie\b|bis\b|oder\b|-|–)").unwrap());
static CODE_TOKEN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[A-ZÄÖÜ][A-Za-zÄÖÜäöüß]{1,9}\b").unwrap());
static BOOK_NUMERAL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^\s(?:XIV|XIII|XII|XI|IX|X|VIII|VII|VI|V|IV|III|II|I)\b").unwrap()
});
static CHAIN: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^\s*(?:i\.\s?V\.\s?m\.|iVm\.?|in Verbindung mit|,|und|sowie|bzw\.)\s*$").unwrap()
});
static CASE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(concat!(
        r"\bECLI:DE:[A-Z]+:\d{4}:[0-9A-Za-z.]*[0-9A-Za-z]",
        r"|\bB\s\d{1,2}\s[A-Z]{1,3}\s\d{1,5}/\d{2}\s[RB]\b",
        r"|\b(?:L\s\d{1,2}|\d{1,3}|[IVX]{1,5})\s[A-Z][A-Za-z]{0,4}\s\d{1,6}/\d{2}\b(?:\.[A-Z]{1,3}\b)?",
    ))
    .unwrap()
});

/// A reference plus extraction metadata that is not part of the output
/// record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Citation {
    pub reference: LegalReference,
    /// Number of times this exact reference occurred in the input.
    pub occurrences: usize,
    /// False when a statute's code token is not in the known-codes list.
    pub known_code: bool,
}

#[derive(Debug, Clone)]
struct Match {
    start: usize,
    end: usize,
    refs: Vec<LegalReference>,
    known_code: bool,
}

/// Citation extractor configured with a known-codes list.
#[derive(Debug, Clone)]
pub struct ReferenceExtractor {
    // Longest first so "SGB" never shadows a longer code with the same prefix.
    codes: Vec<String>,
}

impl Default for ReferenceExtractor {
    fn default() -> Self {
        Self::with_codes(DEFAULT_CODES.iter().copied())
    }
}

impl ReferenceExtractor {
    pub fn with_codes<I, S>(codes: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut codes: Vec<String> = codes.into_iter().map(Into::into).collect();
        codes.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        codes.dedup();
        ReferenceExtractor { codes }
    }

    /// Loads a known-codes list, one code per line; blank lines and `#`
    /// comments are ignored.
    pub fn from_file(path: &Path) -> io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(Self::with_codes(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        ))
    }

    pub fn codes(&self) -> &[String] {
        &self.codes
    }

    /// References in order of first occurrence, deduplicated.
    pub fn extract<S: AsRef<str>>(&self, lines: &[S]) -> Vec<LegalReference> {
        self.extract_citations(lines)
            .into_iter()
            .map(|c| c.reference)
            .collect()
    }

    /// Like [`Self::extract`] but keeps occurrence counts and the known-code flag.
    pub fn extract_citations<S: AsRef<str>>(&self, lines: &[S]) -> Vec<Citation> {
        let mut out: Vec<Citation> = Vec::new();
        let mut index: HashMap<LegalReference, usize> = HashMap::new();
        for line in lines {
            for m in self.scan_line(line.as_ref()) {
                for r in m.refs {
                    match index.get(&r) {
                        Some(&i) => out[i].occurrences += 1,
                        None => {
                            index.insert(r.clone(), out.len());
                            out.push(Citation {
                                reference: r,
                                occurrences: 1,
                                known_code: m.known_code,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    fn scan_line(&self, line: &str) -> Vec<Match> {
        let mut candidates: Vec<Match> = STATUTE_PREFIX
            .find_iter(line)
            .filter_map(|p| self.parse_statute(line, p.start(), p.end()))
            .collect();
        inherit_chained_codes(line, &mut candidates);
        candidates.extend(CASE.find_iter(line).map(|m| {
            let raw = m.as_str();
            Match {
                start: m.start(),
                end: m.end(),
                refs: vec![LegalReference::case(raw, raw)],
                known_code: true,
            }
        }));
        resolve_overlaps(candidates)
    }

    fn match_code(&self, rest: &str) -> Option<(usize, String, bool)> {
        let token = CODE_TOKEN.find(rest)?;
        let word = token.as_str();
        let known = self.codes.iter().any(|c| c == word);
        if !known && word.chars().filter(|c| c.is_uppercase()).count() < 2 {
            return None;
        }
        let mut len = token.end();
        let mut code = word.to_string();
        if word == "SGB" {
            if let Some(book) = BOOK_NUMERAL.find(&rest[len..]) {
                code.push_str(book.as_str());
                len += book.end();
            }
        }
        Some((len, code, known))
    }

    fn parse_statute(&self, line: &str, start: usize, prefix_end: usize) -> Option<Match> {
        let plural = &line[start..prefix_end] == "§§";
        let mut pos = prefix_end;
        let skip_ws = |pos: usize| pos + WS.find(&line[pos..]).map_or(0, |m| m.end());

        pos = skip_ws(pos);
        let first = NUMBER.find(&line[pos..])?;
        let mut sections = vec![first.as_str().to_string()];
        pos += first.end();
        let mut end = pos;
        let mut has_qualifier = false;
        let mut pending_sep = false;
        let mut pending_qualifier: Option<bool> = None; // Some(letter value allowed)
        let mut code = None;
        let mut known_code = true;

        loop {
            let p = skip_ws(pos);
            let rest = &line[p..];
            if let Some(q) = pending_qualifier {
                let value = NUMBER
                    .find(rest)
                    .or_else(|| q.then(|| LETTER.find(rest)).flatten());
                let Some(v) = value else { break };
                pos = p + v.end();
                end = pos;
                pending_qualifier = None;
                has_qualifier = true;
                continue;
            }
            if let Some(q) = QUALIFIER.find(rest) {
                pending_qualifier = Some(matches!(q.as_str(), "lit." | "Buchst."));
                pending_sep = false;
                pos = p + q.end();
                continue;
            }
            if let Some(s) = SEPARATOR.find(rest) {
                if pending_sep {
                    break;
                }
                pending_sep = true;
                pos = p + s.end();
                continue;
            }
            if let Some(n) = NUMBER.find(rest) {
                if !pending_sep {
                    break;
                }
                if plural || !has_qualifier {
                    sections.push(n.as_str().to_string());
                    has_qualifier = false;
                }
                pending_sep = false;
                pos = p + n.end();
                end = pos;
                continue;
            }
            if !pending_sep && p > end {
                if let Some((len, c, known)) = self.match_code(rest) {
                    end = p + len;
                    code = Some(c);
                    known_code = known;
                }
            }
            break;
        }

        let raw = &line[start..end];
        let refs = sections
            .into_iter()
            .map(|s| LegalReference::law(raw, code.clone(), Some(s)))
            .collect();
        Some(Match {
            start,
            end,
            refs,
            known_code,
        })
    }
}

/// "§ 280 Abs. 1 i.V.m. § 241 BGB": a codeless citation chained to a later
/// one takes over its code.
fn inherit_chained_codes(line: &str, statutes: &mut [Match]) {
    for i in (0..statutes.len().saturating_sub(1)).rev() {
        let (head, tail) = statutes.split_at_mut(i + 1);
        let (cur, next) = (&mut head[i], &tail[0]);
        if cur.refs.iter().any(|r| r.code().is_some()) || next.start < cur.end {
            continue;
        }
        let Some(code) = next.refs.first().and_then(|r| r.code()) else {
            continue;
        };
        if !CHAIN.is_match(&line[cur.end..next.start]) {
            continue;
        }
        let code = code.to_string();
        cur.known_code = next.known_code;
        for r in &mut cur.refs {
            if let Some(p) = r.parsed.as_mut() {
                p.code = Some(code.clone());
            }
        }
    }
}

/// Keeps the longest of overlapping matches; earlier start wins ties.
fn resolve_overlaps(mut candidates: Vec<Match>) -> Vec<Match> {
    candidates.sort_by(|a, b| {
        (b.end - b.start)
            .cmp(&(a.end - a.start))
            .then(a.start.cmp(&b.start))
    });
    let mut kept: Vec<Match> = Vec::new();
    for c in candidates {
        if kept.iter().all(|k| c.end <= k.start || c.start >= k.end) {
            kept.push(c);
        }
    }
    kept.sort_by_key(|m| m.start);
    kept
}

/// Extracts references with the default known-codes list.
pub fn extract_references<S: AsRef<str>>(lines: &[S]) -> Vec<LegalReference> {
    static DEFAULT: LazyLock<ReferenceExtractor> = LazyLock::new(ReferenceExtractor::default);
    DEFAULT.extract(lines)
}

/// True when `r` satisfies the typing invariants of an extracted reference.
pub fn is_well_typed(r: &LegalReference) -> bool {
    let law_prefix = ["§", "Art.", "Artikel"]
        .iter()
        .any(|p| r.raw_text.starts_with(p));
    match r.ref_type {
        RefType::Law => law_prefix && (r.code().is_some() || r.section().is_some()),
        RefType::Case => !law_prefix && r.docket().is_some(),
    }
}
