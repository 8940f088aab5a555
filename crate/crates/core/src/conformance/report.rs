use std::fmt::Write;

use super::{ConformanceReport, Status};

fn pad(out: &mut String, cells: &[String], widths: &[usize]) {
    let mut line = String::new();
    for (i, (c, w)) in cells.iter().zip(widths).enumerate() {
        if i + 1 == cells.len() {
            line.push_str(c);
        } else {
            let _ = write!(line, "{c:<w$}  ");
        }
    }
    out.push_str(line.trim_end());
    out.push('\n');
}

fn join(set: &std::collections::BTreeSet<String>) -> String {
    if set.is_empty() {
        "-".into()
    } else {
        set.iter().cloned().collect::<Vec<_>>().join(",")
    }
}

/// Aligned text grid, one row per profile, followed by per-profile details.
pub fn render_table(report: &ConformanceReport) -> String {
    let mut header = vec!["Tool".to_string(), "Platform".to_string()];
    header.extend(report.columns.iter().cloned());
    header.extend([
        "Failed".to_string(),
        "Expected".to_string(),
        "Result".to_string(),
    ]);
    let mut rows = vec![header];
    for p in &report.profiles {
        let mut row = vec![p.tool.clone(), p.platform.clone()];
        row.extend(p.grid.iter().map(|(_, v)| v.clone()));
        row.push(join(&p.failed));
        row.push(join(&p.expected_failures));
        row.push(if p.ok { "ok" } else { "MISMATCH" }.to_string());
        rows.push(row);
    }
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|i| rows.iter().map(|r| r[i].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in &rows {
        pad(&mut out, r, &widths);
    }
    let mut details = String::new();
    for p in &report.profiles {
        let mut lines = Vec::new();
        for t in &p.tests {
            for v in &t.variants {
                if let Some(l) = &v.ledger {
                    lines.push(format!(
                        "{} ({}): counted {} of {} blocks",
                        t.id, v.variant, l.counted, l.actual
                    ));
                }
                if t.status == Status::Fail {
                    for m in &v.mismatches {
                        lines.push(format!(
                            "{} ({}): {} {} expected {} got {}",
                            t.id,
                            v.variant,
                            m.frame,
                            m.probe,
                            m.expected,
                            m.actual.as_deref().unwrap_or("nothing")
                        ));
                    }
                }
            }
        }
        if !p.grid_matches {
            let want: Vec<String> = p.verdicts.iter().map(|(c, v)| format!("{c}={v}")).collect();
            lines.push(format!("expected verdicts differ: {}", want.join(" ")));
        }
        if !p.over_reproduced.is_empty() {
            lines.push(format!("unexpected failures: {}", join(&p.over_reproduced)));
        }
        if !p.under_reproduced.is_empty() {
            lines.push(format!("missing failures: {}", join(&p.under_reproduced)));
        }
        lines.extend(p.notes.iter().map(|n| format!("note: {n}")));
        if !lines.is_empty() {
            let _ = writeln!(details, "\n{}", p.name);
            for l in lines {
                let _ = writeln!(details, "  {l}");
            }
        }
    }
    out.push_str(&details);
    let _ = writeln!(out, "\n{}", if report.ok { "PASS" } else { "FAIL" });
    out
}
