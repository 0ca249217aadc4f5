//! Acceptance suite: one PASS/FAIL/SKIP line per criterion. Tolerances are
//! fixed here; the process exits nonzero if any criterion fails.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use olseg_core::model::LegalReference;
use olseg_core::references::{extract_references, is_well_typed};
use olseg_core::segmenter::{segment, LineRole, Section};
use olseg_core::verification::{plan, proportion_ci};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const PLAN_TOL: f64 = 0.01;
const CI_TOL: f64 = 0.0005;
const SEGMENTATION_DOCS: usize = 10_000;
const CITATION_MIN_RATE: f64 = 0.95;
const SHUFFLES: usize = 10;
const FULL_CORPUS_REL_TOL: f64 = 0.02;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn olseg(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_olseg"))
        .args(args)
        .output()
        .map_err(|e| format!("cannot run olseg: {e}"))?;
    if !out.status.success() {
        return Err(format!(
            "olseg {} failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(out.stdout)
}

fn close(got: f64, want: f64, tol: f64) -> bool {
    (got - want).abs() <= tol
}

fn cochran() -> Outcome {
    let p = plan(251_038, 0.95, 0.05, 0.5).map_err(|e| e.to_string())?;
    let msg = format!("n0={:.4} n_real={:.4} n={}", p.n0, p.n_real, p.n);
    if close(p.n0, 384.16, PLAN_TOL) && close(p.n_real, 383.58, PLAN_TOL) && p.n == 384 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn confidence_interval() -> Outcome {
    let (lo, hi) = proportion_ci(374, 384, 251_038, 0.95).map_err(|e| e.to_string())?;
    let p_hat = 374.0 / 384.0;
    let half = (hi - lo) / 2.0;
    let msg = format!("p_hat={p_hat:.4} ci=({lo:.4}, {hi:.4}) half-width={half:.4}");
    let ok = close(lo, 0.9581, CI_TOL)
        && close(hi, 0.9899, CI_TOL)
        && close(p_hat, 0.9740, 0.00005)
        && close(half, 0.0159, CI_TOL);
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

// ---------------------------------------------------------------------------
// Randomized segmentation documents with a known expected role per line.

#[derive(Clone, Copy)]
enum Block {
    Tenor,
    Tatbestand,
    Entscheidungsgruende,
    Rechtsmittelbelehrung,
    Gruende,
}

const WORDS: [(&str, Block); 5] = [
    ("Tenor", Block::Tenor),
    ("Tatbestand", Block::Tatbestand),
    ("Entscheidungsgründe", Block::Entscheidungsgruende),
    ("Rechtsmittelbelehrung", Block::Rechtsmittelbelehrung),
    ("Gründe", Block::Gruende),
];

const CONTENT: [&str; 14] = [
    "Die Klage wird abgewiesen.",
    "Der Tenor lautet wie folgt.",
    "Gründe für eine Zulassung der Revision liegen nicht vor.",
    "Die Kosten des Verfahrens trägt der Kläger gemäß § 91 ZPO.",
    "I. Zivilsenat",
    "Tatbestand und Entscheidungsgründe werden abgekürzt.",
    "Die Berufung ist zulässig.",
    "Entscheidungsgründe:",
    "1.",
    "a)",
    "Rechtsmittelbelehrung siehe unten.",
    "Der Beklagte beantragt, die Klage abzuweisen.",
    "Vgl. BGH, Urteil vom 1. Juli 2020 - VIII ZR 21/19.",
    "Im Übrigen wird auf die Schriftsätze verwiesen.",
];

fn header_variant(word: &str, rng: &mut ChaCha8Rng) -> String {
    let cased = match rng.random_range(0..3) {
        0 => word.to_string(),
        1 => word.to_uppercase(),
        _ => word.to_lowercase(),
    };
    let spaced = if rng.random_bool(0.3) {
        let sep = if rng.random_bool(0.5) { " " } else { "  " };
        cased
            .chars()
            .map(String::from)
            .collect::<Vec<_>>()
            .join(sep)
    } else {
        cased
    };
    match rng.random_range(0..4) {
        0 => format!("{spaced}:"),
        1 => format!("{spaced} :"),
        _ => spaced,
    }
}

fn content(rng: &mut ChaCha8Rng, allow_numeral: bool) -> String {
    if allow_numeral && rng.random_bool(0.05) {
        return ["I.", "II.", "III"][rng.random_range(0..3)].to_string();
    }
    let base = CONTENT[rng.random_range(0..CONTENT.len())];
    // "Entscheidungsgründe:" alone is a header; keep content unambiguous.
    if base.ends_with(':') {
        format!("Siehe {base}")
    } else {
        base.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Expect {
    Header,
    Numeral,
    Body(Section),
}

fn section_of(b: Block) -> Section {
    match b {
        Block::Tenor => Section::Tenor,
        Block::Tatbestand => Section::Tatbestand,
        Block::Entscheidungsgruende | Block::Gruende => Section::Entscheidungsgruende,
        Block::Rechtsmittelbelehrung => Section::Rechtsmittelbelehrung,
    }
}

fn random_document(rng: &mut ChaCha8Rng) -> Vec<(String, Expect)> {
    let mut doc = Vec::new();
    for _ in 0..rng.random_range(0..3) {
        doc.push((content(rng, true), Expect::Body(Section::Tenor)));
    }
    let mut gruende_used = false;
    for _ in 0..rng.random_range(0..7) {
        let (word, block) = WORDS[rng.random_range(0..WORDS.len())];
        if matches!(block, Block::Gruende) {
            if gruende_used {
                continue;
            }
            gruende_used = true;
        }
        doc.push((header_variant(word, rng), Expect::Header));
        if !matches!(block, Block::Gruende) {
            for _ in 0..rng.random_range(0..5) {
                doc.push((content(rng, true), Expect::Body(section_of(block))));
            }
            continue;
        }
        let eg = Expect::Body(Section::Entscheidungsgruende);
        let tat = Expect::Body(Section::Tatbestand);
        match rng.random_range(0..3) {
            // Undivided: everything is Entscheidungsgründe.
            0 => {
                for _ in 0..rng.random_range(0..5) {
                    doc.push((content(rng, false), eg));
                }
            }
            // I. ... II. ... [III. ...]
            1 => {
                for _ in 0..rng.random_range(0..2) {
                    doc.push((content(rng, false), tat));
                }
                doc.push((["I.", "I"][rng.random_range(0..2)].into(), Expect::Numeral));
                for _ in 0..rng.random_range(0..4) {
                    doc.push((content(rng, false), tat));
                }
                doc.push((
                    ["II.", "II", " II . "][rng.random_range(0..3)].into(),
                    Expect::Numeral,
                ));
                for _ in 0..rng.random_range(0..4) {
                    doc.push((content(rng, false), eg));
                }
                if rng.random_bool(0.4) {
                    doc.push(("III.".into(), Expect::Numeral));
                    for _ in 0..rng.random_range(0..3) {
                        doc.push((content(rng, false), eg));
                    }
                }
            }
            // A lone "I." does not split and stays in the text.
            _ => {
                doc.push(("I.".into(), eg));
                for _ in 0..rng.random_range(0..4) {
                    doc.push((content(rng, false), eg));
                }
            }
        }
    }
    doc
}

fn segmentation_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e6);
    let started = Instant::now();
    let mut lines_total = 0;
    for d in 0..SEGMENTATION_DOCS {
        let doc = random_document(&mut rng);
        let lines: Vec<&str> = doc.iter().map(|(l, _)| l.as_str()).collect();
        lines_total += lines.len();
        let seg = segment(&lines);
        if seg.roles.len() != lines.len() {
            return Err(format!(
                "doc {d}: {} roles for {} lines",
                seg.roles.len(),
                lines.len()
            ));
        }
        let mut expected_sections: HashMap<Section, Vec<&str>> = HashMap::new();
        for (i, ((line, want), got)) in doc.iter().zip(&seg.roles).enumerate() {
            let got = match got {
                LineRole::Body(s) => Expect::Body(*s),
                LineRole::Header(_) => Expect::Header,
                LineRole::Numeral => Expect::Numeral,
            };
            if got != *want {
                return Err(format!(
                    "doc {d} line {i} {line:?}: expected {want:?}, got {got:?}\n{lines:#?}"
                ));
            }
            if let Expect::Body(s) = want {
                expected_sections.entry(*s).or_default().push(line);
            }
        }
        let body = seg
            .roles
            .iter()
            .filter(|r| matches!(r, LineRole::Body(_)))
            .count();
        let placed = seg.tenor.len()
            + seg.tatbestand.len()
            + seg.entscheidungsgruende.len()
            + seg.rechtsmittelbelehrung.len();
        if body != placed {
            return Err(format!("doc {d}: {body} body lines but {placed} placed"));
        }
        for s in [
            Section::Tenor,
            Section::Tatbestand,
            Section::Entscheidungsgruende,
            Section::Rechtsmittelbelehrung,
        ] {
            let want = expected_sections.remove(&s).unwrap_or_default();
            if seg.section(s) != want.as_slice() {
                return Err(format!("doc {d}: section {s:?} differs"));
            }
        }
    }
    Ok(format!(
        "{SEGMENTATION_DOCS} documents, {lines_total} lines, {:.1}s",
        started.elapsed().as_secs_f64()
    ))
}

// ---------------------------------------------------------------------------

fn segment_mini(dir: &Path, name: &str, jobs: &str) -> Result<Vec<u8>, String> {
    let out = dir.join(name);
    olseg(&[
        "segment",
        "--input",
        data("mini_corpus.jsonl").to_str().unwrap(),
        "--output",
        out.to_str().unwrap(),
        "--states",
        data("states.json").to_str().unwrap(),
        "--cities",
        data("cities.json").to_str().unwrap(),
        "--jobs",
        jobs,
    ])?;
    fs::read(&out).map_err(|e| e.to_string())
}

fn golden(tmp: &Path) -> Outcome {
    let got = segment_mini(tmp, "golden_check.jsonl", "4")?;
    let want = fs::read(data("mini_corpus.golden.jsonl")).map_err(|e| e.to_string())?;
    let records = want.iter().filter(|&&b| b == b'\n').count();
    if got == want {
        Ok(format!("{records} records byte-identical"))
    } else {
        let first = got
            .split(|&b| b == b'\n')
            .zip(want.split(|&b| b == b'\n'))
            .position(|(a, b)| a != b);
        Err(format!(
            "output differs from golden (first differing line: {first:?})"
        ))
    }
}

/// Counts by brute force over the 16 presence patterns, straight from JSON.
fn oracle_counts(jsonl: &str) -> HashMap<&'static str, u64> {
    let mut patterns: HashMap<[bool; 4], u64> = HashMap::new();
    for line in jsonl.lines().filter(|l| !l.trim().is_empty()) {
        let v: Value = serde_json::from_str(line).expect("valid record");
        let has = |k: &str| v[k].as_str().is_some_and(|s| !s.is_empty());
        let key = [
            has("tenor"),
            has("tatbestand"),
            has("entscheidungsgruende"),
            has("rechtsmittelbelehrung"),
        ];
        *patterns.entry(key).or_default() += 1;
    }
    let sum = |f: &dyn Fn(&[bool; 4]) -> bool| -> u64 {
        patterns.iter().filter(|(k, _)| f(k)).map(|(_, c)| c).sum()
    };
    let mut c = HashMap::new();
    c.insert("total", sum(&|_| true));
    c.insert("tenor", sum(&|k| k[0]));
    c.insert("tatbestand", sum(&|k| k[1]));
    c.insert("entscheidungsgruende", sum(&|k| k[2]));
    c.insert("rechtsmittelbelehrung", sum(&|k| k[3]));
    c.insert("all_three", sum(&|k| k[0] && k[1] && k[2]));
    c.insert("tenor_and_eg_only", sum(&|k| k[0] && !k[1] && k[2]));
    c.insert("tenor_only", sum(&|k| k[0] && !k[1] && !k[2]));
    c.insert("all_absent", sum(&|k| !k.iter().any(|&b| b)));
    c
}

fn cli_counts(path: &Path) -> Result<HashMap<&'static str, u64>, String> {
    let out = olseg(&["stats", "--input", path.to_str().unwrap(), "--json"])?;
    let v: Value = serde_json::from_slice(&out).map_err(|e| e.to_string())?;
    let mut c = HashMap::new();
    c.insert("total", v["total"].as_u64().unwrap_or(u64::MAX));
    for k in [
        "tenor",
        "tatbestand",
        "entscheidungsgruende",
        "rechtsmittelbelehrung",
        "all_three",
        "tenor_and_eg_only",
        "tenor_only",
        "all_absent",
    ] {
        c.insert(k, v[k]["count"].as_u64().unwrap_or(u64::MAX));
    }
    Ok(c)
}

fn stats_oracle(tmp: &Path) -> Outcome {
    let golden = data("mini_corpus.golden.jsonl");
    let text = fs::read_to_string(&golden).map_err(|e| e.to_string())?;
    let oracle = oracle_counts(&text);
    let reported = cli_counts(&golden)?;
    if reported != oracle {
        return Err(format!("report {reported:?} != oracle {oracle:?}"));
    }
    let mut lines: Vec<&str> = text.lines().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for i in 0..SHUFFLES {
        lines.shuffle(&mut rng);
        let p = tmp.join(format!("shuffled_{i}.jsonl"));
        fs::write(&p, lines.join("\n") + "\n").map_err(|e| e.to_string())?;
        let shuffled = cli_counts(&p)?;
        if shuffled != oracle {
            return Err(format!("shuffle {i}: {shuffled:?} != {oracle:?}"));
        }
    }
    Ok(format!(
        "{} decisions, all 9 counts equal the oracle; invariant over {SHUFFLES} shuffles",
        oracle["total"]
    ))
}

fn full_corpus(tmp: &Path) -> Outcome {
    const PUBLISHED: [(&str, u64); 8] = [
        ("tenor", 220_273),
        ("tatbestand", 164_222),
        ("entscheidungsgruende", 238_666),
        ("all_three", 144_383),
        ("tenor_and_eg_only", 63_720),
        ("tenor_only", 11_388),
        ("rechtsmittelbelehrung", 8_335),
        ("all_absent", 176),
    ];
    let Some(dump) = std::env::var_os("OLSEG_FULL_DUMP") else {
        return Ok(
            "SKIP: set OLSEG_FULL_DUMP to the raw dump (and OLSEG_STATES/OLSEG_CITIES) to run"
                .into(),
        );
    };
    let out = tmp.join("full.jsonl");
    olseg(&[
        "segment",
        "--input",
        Path::new(&dump).to_str().ok_or("non-UTF-8 dump path")?,
        "--output",
        out.to_str().unwrap(),
    ])?;
    let got = cli_counts(&out)?;
    let mut lines = vec![format!("total {} (published 251038)", got["total"])];
    let mut ok = true;
    for (k, want) in PUBLISHED {
        let rel = (got[k] as f64 - want as f64).abs() / want as f64;
        ok &= rel <= FULL_CORPUS_REL_TOL;
        lines.push(format!(
            "{k} {} vs {want} ({:+.2}%)",
            got[k],
            100.0 * (got[k] as f64 / want as f64 - 1.0)
        ));
    }
    if ok {
        Ok(lines.join("; "))
    } else {
        Err(lines.join("; "))
    }
}

fn parse_ref(spec: &str) -> LegalReference {
    let parts: Vec<&str> = spec.split('|').collect();
    let opt = |s: &str| (s != "-").then(|| s.to_string());
    match parts[0] {
        "law" => LegalReference::law(parts[1], opt(parts[2]), opt(parts[3])),
        _ => LegalReference::case(parts[1], parts[2]),
    }
}

fn reference_grammar() -> Outcome {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/citation_oracle.tsv");
    let text = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let (mut total, mut exact, mut bad_spans) = (0usize, 0usize, 0usize);
    for l in text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
    {
        let (line, refs) = l.split_once('\t').ok_or("malformed oracle line")?;
        let expected: Vec<_> = refs
            .split(" || ")
            .filter(|s| !s.trim().is_empty())
            .map(parse_ref)
            .collect();
        let got = extract_references(&[line]);
        total += 1;
        exact += (got == expected) as usize;
        bad_spans += got
            .iter()
            .filter(|r| r.raw_text.is_empty() || !line.contains(&r.raw_text) || !is_well_typed(r))
            .count();
    }
    let rate = exact as f64 / total as f64;
    let msg = format!(
        "{exact}/{total} exact ({:.0}%), {bad_spans} invalid spans",
        100.0 * rate
    );
    if total >= 50 && rate >= CITATION_MIN_RATE && bad_spans == 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn determinism(tmp: &Path) -> Outcome {
    let a = segment_mini(tmp, "jobs8_a.jsonl", "8")?;
    let b = segment_mini(tmp, "jobs8_b.jsonl", "8")?;
    if a != b {
        return Err("two --jobs 8 runs differ".into());
    }
    let corpus = data("mini_corpus.golden.jsonl");
    let mut sessions = Vec::new();
    for name in ["seed7_a.json", "seed7_b.json"] {
        let s = tmp.join(name);
        olseg(&[
            "verify",
            "sample",
            "--seed",
            "7",
            "--margin",
            "0.1",
            "--corpus",
            corpus.to_str().unwrap(),
            "--session",
            s.to_str().unwrap(),
        ])?;
        sessions.push(fs::read(&s).map_err(|e| e.to_string())?);
    }
    if sessions[0] != sessions[1] {
        return Err("two `verify sample --seed 7` session files differ".into());
    }
    Ok(format!(
        "segment --jobs 8 twice: {} bytes identical; verify sample --seed 7 twice: identical",
        a.len()
    ))
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let criteria: Vec<Criterion> = vec![
        ("cochran plan", Box::new(cochran)),
        ("confidence interval", Box::new(confidence_interval)),
        ("segmentation invariants", Box::new(segmentation_invariants)),
        ("golden mini-corpus", Box::new(|| golden(tmp.path()))),
        ("statistics oracle", Box::new(|| stats_oracle(tmp.path()))),
        (
            "full-corpus tables (soft)",
            Box::new(|| full_corpus(tmp.path())),
        ),
        ("reference grammar", Box::new(reference_grammar)),
        ("determinism", Box::new(|| determinism(tmp.path()))),
    ];
    let (mut failed, mut skipped) = (0, 0);
    println!("acceptance criteria");
    for (name, check) in &criteria {
        match check() {
            Ok(msg) if msg.starts_with("SKIP") => {
                skipped += 1;
                println!("SKIP  {name}: {}", &msg[6..]);
            }
            Ok(msg) => println!("PASS  {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  {name}: {msg}");
            }
        }
    }
    println!(
        "{} passed, {failed} failed, {skipped} skipped",
        criteria.len() - failed - skipped
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
