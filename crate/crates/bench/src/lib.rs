//! Synthetic inputs shared by the benchmarks.

/// HTML of a long judgment with all sections, citations and tables.
pub fn judgment_html(paragraphs: usize) -> String {
    let mut html = String::from("<h2>Tenor</h2><p>Die Klage wird abgewiesen.</p>");
    html.push_str("<p>Die Kosten des Rechtsstreits trägt der Kläger.</p><h2>Tatbestand</h2>");
    for i in 0..paragraphs {
        html.push_str(&format!(
            "<p>Randnummer {i}: Der Kläger verlangt Zahlung nach § {} Abs. 1 BGB i.V.m. §§ 280, 281 BGB.</p>",
            400 + i % 200
        ));
    }
    html.push_str("<h2>Entscheidungsgründe</h2>");
    for i in 0..paragraphs {
        html.push_str(&format!(
            "<table><tr><td>{i}</td><td>Die Berufung ist unbegründet (vgl. BGH, Urteil vom 1. Juli 2020 - VIII ZR {}/19); \
             Art. 3 Abs. 1 GG steht nicht entgegen.</td></tr></table>",
            i % 300 + 1
        ));
    }
    html.push_str(
        "<h2>Rechtsmittelbelehrung</h2><p>Gegen dieses Urteil ist die Berufung zulässig.</p>",
    );
    html
}

/// Text lines of a Beschluss whose Gründe are split by Roman numerals.
pub fn beschluss_lines(paragraphs: usize) -> Vec<String> {
    let mut lines = vec![
        "Tenor".to_string(),
        "Die Beschwerde wird zurückgewiesen.".into(),
        "G r ü n d e :".into(),
        "I.".into(),
    ];
    lines.extend((0..paragraphs).map(|i| format!("Sachverhalt Absatz {i}.")));
    lines.push("II.".into());
    lines.extend(
        (0..paragraphs).map(|i| format!("Die Beschwerde ist nach § {i} VwGO unbegründet.")),
    );
    lines
}

/// One raw JSONL record per decision.
pub fn raw_corpus(decisions: usize, paragraphs: usize) -> String {
    let html = judgment_html(paragraphs).replace('"', "\\\"");
    (0..decisions)
        .map(|id| {
            format!("{{\"id\":{id},\"file_number\":\"1 O {id}/20\",\"content\":\"{html}\"}}\n")
        })
        .collect()
}
