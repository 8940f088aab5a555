//! Aggregate tables over per-site statistics, and their text rendering.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::origin::SourceKind;
use crate::suffix::SuffixRules;

use super::{AnalysisReport, EntityMap, RankBucket, SiteAnalysis, SiteStats};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub column: String,
    /// Sites with at least one occurrence.
    pub sites: u64,
    pub mean: f64,
    /// Lower middle for an even number of sites.
    pub median: u64,
    pub max: u64,
    pub total: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrevalenceRow {
    /// A rank bucket label, or "Overall".
    pub bucket: String,
    pub sites: u64,
    pub sites_1p: u64,
    pub sites_3p: u64,
    pub sites_either: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestColumn {
    /// A rank bucket label, or "Total".
    pub bucket: String,
    pub requests: u64,
    pub requests_in_lf: u64,
    pub requests_blocked: u64,
    pub sites: u64,
    pub sites_any_request: u64,
    pub sites_lf_request: u64,
    pub sites_blocked_request: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n_sites: u64,
    pub prevalence: Vec<PrevalenceRow>,
    pub behavior: Vec<ColumnSummary>,
    pub requests: Vec<RequestColumn>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityRow {
    pub entity: String,
    pub sites: u64,
    /// Frames or requests, depending on the table.
    pub count: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityRollup {
    pub frames: Vec<EntityRow>,
    pub requests: Vec<EntityRow>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketEntities {
    pub bucket: RankBucket,
    pub rows: Vec<EntityRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrefixRow {
    pub kind: SourceKind,
    pub count: u64,
    pub share: f64,
}

type Column = (&'static str, fn(&SiteStats) -> u64);

const BEHAVIOR_COLUMNS: [Column; 6] = [
    ("1p", |s| s.n_local_frames_1p),
    ("3p", |s| s.n_local_frames_3p),
    ("Fingerprinting API Calls", |s| s.n_fp_api_calls),
    ("Requests", |s| s.n_requests_in_lf),
    ("JS/API Calls", |s| s.n_js_calls),
    ("HTML", |s| s.n_html_elements),
];

fn column_summary(name: &str, values: &[u64]) -> ColumnSummary {
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let total: u64 = sorted.iter().sum();
    let n = sorted.len();
    ColumnSummary {
        column: name.to_string(),
        sites: sorted.iter().filter(|v| **v > 0).count() as u64,
        mean: if n == 0 { 0.0 } else { total as f64 / n as f64 },
        median: if n == 0 { 0 } else { sorted[(n - 1) / 2] },
        max: sorted.last().copied().unwrap_or(0),
        total,
    }
}

fn prevalence(label: &str, stats: &[&SiteStats]) -> PrevalenceRow {
    let count = |f: &dyn Fn(&SiteStats) -> bool| stats.iter().filter(|s| f(s)).count() as u64;
    PrevalenceRow {
        bucket: label.to_string(),
        sites: stats.len() as u64,
        sites_1p: count(&|s| s.n_local_frames_1p > 0),
        sites_3p: count(&|s| s.n_local_frames_3p > 0),
        sites_either: count(&|s| s.n_local_frames_1p + s.n_local_frames_3p > 0),
    }
}

fn request_column(label: &str, stats: &[&SiteStats]) -> RequestColumn {
    let sum = |f: fn(&SiteStats) -> u64| stats.iter().map(|s| f(s)).sum();
    let sites = |f: fn(&SiteStats) -> u64| stats.iter().filter(|s| f(s) > 0).count() as u64;
    RequestColumn {
        bucket: label.to_string(),
        requests: sum(|s| s.n_requests),
        requests_in_lf: sum(|s| s.n_requests_in_lf),
        requests_blocked: sum(|s| s.n_blocked_in_lf),
        sites: stats.len() as u64,
        sites_any_request: sites(|s| s.n_requests),
        sites_lf_request: sites(|s| s.n_requests_in_lf),
        sites_blocked_request: sites(|s| s.n_blocked_in_lf),
    }
}

/// Prevalence per rank bucket, behavior columns over all sites, and request
/// shares per bucket. Depends only on the multiset of inputs.
pub fn summarize(stats: &[SiteStats]) -> Summary {
    let all: Vec<&SiteStats> = stats.iter().collect();
    let mut prevalence_rows = Vec::new();
    let mut request_cols = Vec::new();
    for b in RankBucket::ALL {
        let in_bucket: Vec<&SiteStats> = all
            .iter()
            .copied()
            .filter(|s| s.bucket == Some(b))
            .collect();
        prevalence_rows.push(prevalence(b.label(), &in_bucket));
        request_cols.push(request_column(b.label(), &in_bucket));
    }
    prevalence_rows.push(prevalence("Overall", &all));
    request_cols.push(request_column("Total", &all));
    let behavior = BEHAVIOR_COLUMNS
        .iter()
        .map(|(name, f)| column_summary(name, &stats.iter().map(f).collect::<Vec<_>>()))
        .collect();
    Summary {
        n_sites: stats.len() as u64,
        prevalence: prevalence_rows,
        behavior,
        requests: request_cols,
    }
}

fn rows_from(tally: BTreeMap<String, (BTreeSet<String>, u64)>) -> Vec<EntityRow> {
    let mut rows: Vec<EntityRow> = tally
        .into_iter()
        .map(|(entity, (sites, count))| EntityRow {
            entity,
            sites: sites.len() as u64,
            count,
        })
        .collect();
    rows.sort_by(|a, b| b.sites.cmp(&a.sites).then_with(|| a.entity.cmp(&b.entity)));
    rows
}

/// Entities behind third-party local frames and behind suspect requests,
/// by number of sites (descending), then name.
pub fn entity_rollup(
    sites: &[SiteAnalysis],
    entities: &EntityMap,
    suffixes: &SuffixRules,
) -> EntityRollup {
    let mut frames: BTreeMap<String, (BTreeSet<String>, u64)> = BTreeMap::new();
    let mut requests: BTreeMap<String, (BTreeSet<String>, u64)> = BTreeMap::new();
    for s in sites {
        for f in s.local_frames.iter().filter(|f| !f.first_party) {
            let Some(host) = &f.origin_host else { continue };
            let e = frames
                .entry(entities.entity_for_host(host, suffixes))
                .or_default();
            e.0.insert(s.stats.site.clone());
            e.1 += 1;
        }
        for r in &s.suspects {
            let Ok(parts) = crate::origin::UrlParts::parse(&r.url) else {
                continue;
            };
            let e = requests
                .entry(entities.entity_for_host(&parts.host, suffixes))
                .or_default();
            e.0.insert(s.stats.site.clone());
            e.1 += 1;
        }
    }
    EntityRollup {
        frames: rows_from(frames),
        requests: rows_from(requests),
    }
}

/// Integer with comma thousands separators.
pub(crate) fn grouped(n: u64) -> String {
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

/// `num / den` as a percentage with one decimal, rounded half up.
pub(crate) fn percent(num: u64, den: u64) -> String {
    if den == 0 {
        return "0.0%".into();
    }
    let tenths = (num as u128 * 2000 + den as u128) / (2 * den as u128);
    format!("{}.{}%", grouped((tenths / 10) as u64), tenths % 10)
}

/// `total / n` with two decimals, rounded half up.
pub(crate) fn mean2(total: u64, n: u64) -> String {
    if n == 0 {
        return "0.00".into();
    }
    let hundredths = (total as u128 * 200 + n as u128) / (2 * n as u128);
    format!(
        "{}.{:02}",
        grouped((hundredths / 100) as u64),
        hundredths % 100
    )
}

/// Aligned columns: the first `left` columns are left-aligned, the rest
/// right-aligned; two spaces between columns; no trailing blanks.
fn grid(out: &mut String, rows: &[Vec<String>], left: usize) {
    let n = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..n)
        .map(|i| {
            rows.iter()
                .map(|r| r.get(i).map_or(0, |c| c.chars().count()))
                .max()
                .unwrap_or(0)
        })
        .collect();
    for r in rows {
        let mut line = String::new();
        for (i, w) in widths.iter().enumerate() {
            let c = r.get(i).map_or("", String::as_str);
            if i > 0 {
                line.push_str("  ");
            }
            if i < left {
                let _ = write!(line, "{c:<w$}");
            } else {
                let _ = write!(line, "{c:>w$}");
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
}

fn s(v: &str) -> String {
    v.to_string()
}

/// Renders the report as plain-text tables.
pub fn render_text(report: &AnalysisReport) -> String {
    let mut out = String::new();
    let sum = &report.summary;

    out.push_str("Local frame prevalence\n");
    let mut rows = vec![vec![s("Rank"), s("Sites"), s("1p"), s("3p"), s("Either")]];
    for p in &sum.prevalence {
        rows.push(vec![
            p.bucket.clone(),
            grouped(p.sites),
            percent(p.sites_1p, p.sites),
            percent(p.sites_3p, p.sites),
            percent(p.sites_either, p.sites),
        ]);
    }
    grid(&mut out, &rows, 1);

    out.push_str("\nBehavior inside local frames\n");
    let mut header = vec![String::new()];
    header.extend(sum.behavior.iter().map(|c| c.column.clone()));
    let n = sum.n_sites;
    let line = |label: &str, f: &dyn Fn(&ColumnSummary) -> String| {
        let mut r = vec![s(label)];
        r.extend(sum.behavior.iter().map(f));
        r
    };
    let rows = vec![
        header,
        line("# Sites", &|c| grouped(c.sites)),
        line("Mean", &|c| mean2(c.total, n)),
        line("Median", &|c| grouped(c.median)),
        line("Max", &|c| grouped(c.max)),
        line("Total", &|c| grouped(c.total)),
    ];
    grid(&mut out, &rows, 1);

    out.push_str("\nRequests in local frames\n");
    let mut header = vec![String::new()];
    for c in &sum.requests {
        header.push(c.bucket.clone());
        header.push(String::new());
    }
    let row = |label: &str, f: &dyn Fn(&RequestColumn) -> (u64, u64)| {
        let mut r = vec![s(label)];
        for c in &sum.requests {
            let (num, den) = f(c);
            r.push(grouped(num));
            r.push(percent(num, den));
        }
        r
    };
    let rows = vec![
        header,
        row("# Requests in dataset", &|c| (c.requests, c.requests)),
        row("  in a local frame", &|c| (c.requests_in_lf, c.requests)),
        row("  that should be blocked", &|c| {
            (c.requests_blocked, c.requests_in_lf)
        }),
        row("# Sites crawled", &|c| (c.sites, c.sites)),
        row("  making >=1 request", &|c| (c.sites_any_request, c.sites)),
        row("  in a local frame", &|c| {
            (c.sites_lf_request, c.sites_any_request)
        }),
        row("  that should be blocked", &|c| {
            (c.sites_blocked_request, c.sites_lf_request)
        }),
    ];
    grid(&mut out, &rows, 1);

    for (title, count_label, tables) in [
        (
            "Entities in third-party local frames",
            "# Frames",
            &report.frame_entities,
        ),
        (
            "Entities receiving suspect requests",
            "# Requests",
            &report.request_entities,
        ),
    ] {
        let _ = write!(out, "\n{title}\n");
        let mut rows = vec![vec![s("Rank"), s("Entity"), s("# Sites"), s(count_label)]];
        for t in tables {
            for r in t.rows.iter().take(10) {
                rows.push(vec![
                    s(t.bucket.label()),
                    r.entity.clone(),
                    grouped(r.sites),
                    grouped(r.count),
                ]);
            }
        }
        grid(&mut out, &rows, 2);
    }

    out.push_str("\nLocal frame sources\n");
    let total: u64 = report.prefixes.iter().map(|p| p.count).sum();
    let mut rows = vec![vec![s("Source"), s("Frames"), s("Share")]];
    for p in &report.prefixes {
        rows.push(vec![
            s(p.kind.as_str()),
            grouped(p.count),
            percent(p.count, total),
        ]);
    }
    grid(&mut out, &rows, 1);
    out
}
