//! Section coverage and structural composition over a segmented corpus.

use std::fmt::{self, Write as _};
use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

use crate::model::SegmentedDecision;

/// A count and its share of the corpus in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Share {
    pub count: u64,
    pub percent: f64,
}

impl Share {
    fn of(count: u64, total: u64) -> Self {
        Share {
            count,
            percent: rounded_percent(count, total),
        }
    }
}

/// 100·count/total to one decimal, or two decimals below 5 %; 0 when the
/// corpus is empty.
pub fn rounded_percent(count: u64, total: u64) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let pct = 100.0 * count as f64 / total as f64;
    let scale = if pct < 5.0 { 100.0 } else { 10.0 };
    (pct * scale).round() / scale
}

impl fmt::Display for Share {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let decimals = if self.percent < 5.0 && self.percent != 0.0 {
            2
        } else {
            1
        };
        write!(
            f,
            "{} ({:.*}%)",
            group_thousands(self.count),
            decimals,
            self.percent
        )
    }
}

fn group_thousands(n: u64) -> String {
    let digits = n.to_string();
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}

/// Raw counters. Associative and commutative, so partial counts from
/// parallel workers merge with `+=`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageCounts {
    pub total: u64,
    pub tenor: u64,
    pub tatbestand: u64,
    pub entscheidungsgruende: u64,
    pub rechtsmittelbelehrung: u64,
    pub all_three: u64,
    pub tenor_and_eg_only: u64,
    pub tenor_only: u64,
    pub all_absent: u64,
}

impl CoverageCounts {
    pub fn add(&mut self, d: &SegmentedDecision) {
        let (t, tb, eg, rm) = (
            d.has_tenor(),
            d.has_tatbestand(),
            d.has_entscheidungsgruende(),
            d.has_rechtsmittelbelehrung(),
        );
        self.total += 1;
        self.tenor += t as u64;
        self.tatbestand += tb as u64;
        self.entscheidungsgruende += eg as u64;
        self.rechtsmittelbelehrung += rm as u64;
        self.all_three += (t && tb && eg) as u64;
        self.tenor_and_eg_only += (t && !tb && eg) as u64;
        self.tenor_only += (t && !tb && !eg) as u64;
        self.all_absent += (!t && !tb && !eg && !rm) as u64;
    }

    pub fn report(&self) -> CoverageReport {
        let n = self.total;
        let categorized =
            self.all_three + self.tenor_and_eg_only + self.tenor_only + self.all_absent;
        CoverageReport {
            total: n,
            tenor: Share::of(self.tenor, n),
            tatbestand: Share::of(self.tatbestand, n),
            entscheidungsgruende: Share::of(self.entscheidungsgruende, n),
            rechtsmittelbelehrung: Share::of(self.rechtsmittelbelehrung, n),
            all_three: Share::of(self.all_three, n),
            tenor_and_eg_only: Share::of(self.tenor_and_eg_only, n),
            tenor_only: Share::of(self.tenor_only, n),
            all_absent: Share::of(self.all_absent, n),
            other: Share::of(n - categorized, n),
        }
    }
}

impl AddAssign for CoverageCounts {
    fn add_assign(&mut self, o: Self) {
        self.total += o.total;
        self.tenor += o.tenor;
        self.tatbestand += o.tatbestand;
        self.entscheidungsgruende += o.entscheidungsgruende;
        self.rechtsmittelbelehrung += o.rechtsmittelbelehrung;
        self.all_three += o.all_three;
        self.tenor_and_eg_only += o.tenor_and_eg_only;
        self.tenor_only += o.tenor_only;
        self.all_absent += o.all_absent;
    }
}

/// Coverage of the three main sections, the appeal notice, and the
/// composition categories. `other` holds decisions outside the four
/// composition categories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub total: u64,
    pub tenor: Share,
    pub tatbestand: Share,
    pub entscheidungsgruende: Share,
    pub rechtsmittelbelehrung: Share,
    pub all_three: Share,
    pub tenor_and_eg_only: Share,
    pub tenor_only: Share,
    pub all_absent: Share,
    pub other: Share,
}

/// Counts every decision; a section is present iff its text is non-empty.
pub fn coverage<'a, I>(decisions: I) -> CoverageReport
where
    I: IntoIterator<Item = &'a SegmentedDecision>,
{
    let mut counts = CoverageCounts::default();
    for d in decisions {
        counts.add(d);
    }
    counts.report()
}

impl CoverageReport {
    pub fn rows(&self) -> [(&'static str, Share); 9] {
        [
            ("Tenor", self.tenor),
            ("Tatbestand", self.tatbestand),
            ("Entscheidungsgründe", self.entscheidungsgruende),
            ("Rechtsmittelbelehrung", self.rechtsmittelbelehrung),
            ("All three sections", self.all_three),
            ("Only Tenor + Ent.", self.tenor_and_eg_only),
            ("Only Tenor", self.tenor_only),
            ("All sections absent", self.all_absent),
            ("Other combinations", self.other),
        ]
    }

    /// Aligned plain-text table.
    pub fn to_table(&self) -> String {
        let rows = self.rows();
        let cells: Vec<(&str, String)> = rows.iter().map(|(k, s)| (*k, s.to_string())).collect();
        let w0 = cells
            .iter()
            .map(|(k, _)| k.chars().count())
            .max()
            .unwrap_or(0);
        let w1 = cells.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
        let mut out = format!("Decisions: {}\n", group_thousands(self.total));
        for (i, (k, v)) in cells.iter().enumerate() {
            if i == 4 {
                out.push_str(&format!("{}\n", "-".repeat(w0 + w1 + 2)));
            }
            let pad = w0 - k.chars().count();
            let _ = writeln!(out, "{k}{}  {v:>w1$}", " ".repeat(pad));
        }
        out
    }
}
