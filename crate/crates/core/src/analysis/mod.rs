//! Crawl-log analysis: local-frame prevalence, privacy-relevant behavior
//! inside local frames, requests a filter list would block, and the
//! organizations behind third-party local frames.

mod entity;
mod fingerprint;
mod log;
mod tables;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use entity::EntityMap;
pub use fingerprint::{FingerprintApiTable, FINGERPRINT_APIS};
pub use log::{load_logs, parse_logs, EventKind, EventLog, LogEvent, LogFrame, RankBucket};
pub use tables::{
    entity_rollup, render_text, summarize, BucketEntities, ColumnSummary, EntityRollup, EntityRow,
    PrefixRow, PrevalenceRow, RequestColumn, Summary,
};

use crate::engine::{Engine, RequestEvent};
use crate::error::{Error, Result};
use crate::filterlist::{parse_list, RuleSet};
use crate::frame::{FrameId, FrameTree};
use crate::origin::SourceKind;
use crate::policy::AttributionPolicy;
use crate::suffix::SuffixRules;

/// The 50-rule list shipped for tests and examples.
pub const MINI_LIST: &str = include_str!("../../data/mini-list.txt");

pub fn mini_list() -> RuleSet {
    parse_list(MINI_LIST).0
}

/// Tags the browser creates on its own in every document.
const AUTO_CREATED_TAGS: [&str; 3] = ["html", "head", "body"];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalFrame {
    pub id: FrameId,
    pub kind: SourceKind,
    pub first_party: bool,
    /// Host of the resolved origin; `None` when it is opaque.
    pub origin_host: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteStats {
    pub site: String,
    pub bucket: Option<RankBucket>,
    pub n_local_frames_1p: u64,
    pub n_local_frames_3p: u64,
    pub n_fp_api_calls: u64,
    pub n_requests: u64,
    pub n_requests_in_lf: u64,
    pub n_blocked_in_lf: u64,
    pub n_js_calls: u64,
    pub n_html_elements: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuspectRequest {
    pub frame: FrameId,
    pub url: String,
    pub record: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteAnalysis {
    pub stats: SiteStats,
    pub local_frames: Vec<LocalFrame>,
    /// Never-navigated local-source frames by kind, blob and data included.
    pub candidates: BTreeMap<SourceKind, u64>,
    pub suspects: Vec<SuspectRequest>,
}

pub struct AnalysisContext<'a> {
    pub rules: &'a RuleSet,
    /// Policy for the blocked-request check; spec-correct by default.
    pub policy: AttributionPolicy,
    pub suffixes: &'a SuffixRules,
    pub fingerprint: FingerprintApiTable,
    pub entities: EntityMap,
}

impl<'a> AnalysisContext<'a> {
    pub fn new(rules: &'a RuleSet) -> Self {
        AnalysisContext {
            rules,
            policy: AttributionPolicy::spec_correct(),
            suffixes: SuffixRules::builtin(),
            fingerprint: FingerprintApiTable::default(),
            entities: EntityMap::default(),
        }
    }
}

fn resolved_tree(log: &EventLog) -> Result<FrameTree> {
    log.tree(&AttributionPolicy::spec_correct())
}

/// Frames that are local frames or sit anywhere below one.
fn local_context(log: &EventLog) -> BTreeSet<FrameId> {
    let mut inside = BTreeSet::new();
    for f in &log.frames {
        if f.is_local_frame() || f.parent.is_some_and(|p| inside.contains(&p)) {
            inside.insert(f.id);
        }
    }
    inside
}

fn local_frames_in(
    log: &EventLog,
    tree: &FrameTree,
    suffixes: &SuffixRules,
) -> Result<Vec<LocalFrame>> {
    let site = suffixes.registrable_domain(&log.site);
    log.frames
        .iter()
        .filter(|f| f.is_local_frame())
        .map(|f| {
            let origin = tree.node(f.id)?.origin()?;
            let host = origin.host().map(str::to_string);
            let first_party = host
                .as_deref()
                .is_some_and(|h| suffixes.registrable_domain(h) == site);
            Ok(LocalFrame {
                id: f.id,
                kind: f.source.kind,
                first_party,
                origin_host: host,
            })
        })
        .collect()
}

/// Frames that stay local for the whole page lifetime, split into first
/// and third party by their resolved origin against the site.
pub fn extract_local_frames(log: &EventLog, suffixes: &SuffixRules) -> Result<Vec<LocalFrame>> {
    local_frames_in(log, &resolved_tree(log)?, suffixes)
}

fn candidate_counts(log: &EventLog) -> BTreeMap<SourceKind, u64> {
    let mut out = BTreeMap::new();
    for f in log.frames.iter().filter(|f| f.is_local_candidate()) {
        *out.entry(f.source.kind).or_insert(0) += 1;
    }
    out
}

/// Share of each source kind among never-navigated local-source frames.
pub fn prefix_shares(logs: &[EventLog]) -> BTreeMap<SourceKind, f64> {
    let mut counts: BTreeMap<SourceKind, u64> = BTreeMap::new();
    for log in logs {
        for (k, n) in candidate_counts(log) {
            *counts.entry(k).or_insert(0) += n;
        }
    }
    let total: u64 = counts.values().sum();
    counts
        .into_iter()
        .map(|(k, n)| (k, n as f64 / total as f64))
        .collect()
}

/// Counts API calls, requests, and element insertions made inside local
/// frames (or their descendants). Frame counts and blocked requests are
/// left at zero.
pub fn privacy_events(log: &EventLog, fp: &FingerprintApiTable) -> Result<SiteStats> {
    log.validate()?;
    let inside = local_context(log);
    let mut s = SiteStats {
        site: log.site.clone(),
        bucket: Some(log.bucket),
        ..SiteStats::default()
    };
    for e in &log.events {
        let local = inside.contains(&e.frame);
        match &e.kind {
            EventKind::Request { .. } => {
                s.n_requests += 1;
                s.n_requests_in_lf += local as u64;
            }
            EventKind::ApiCall { api } if local => {
                s.n_js_calls += 1;
                s.n_fp_api_calls += fp.contains(api) as u64;
            }
            EventKind::ElementInserted { tag } if local => {
                s.n_html_elements += !AUTO_CREATED_TAGS.contains(&tag.as_str()) as u64;
            }
            _ => {}
        }
    }
    Ok(s)
}

fn suspects_in(
    log: &EventLog,
    tree: &FrameTree,
    rules: &RuleSet,
    policy: AttributionPolicy,
    suffixes: &SuffixRules,
) -> Result<Vec<SuspectRequest>> {
    let inside = local_context(log);
    let engine = Engine::with_suffixes(tree, rules, policy, suffixes)?;
    let mut out = Vec::new();
    for e in &log.events {
        let EventKind::Request { url, resource_type } = &e.kind else {
            continue;
        };
        if !inside.contains(&e.frame) {
            continue;
        }
        let d = engine
            .decide_request(&RequestEvent::new(url.clone(), e.frame, *resource_type))
            .map_err(|err| Error::MalformedLog {
                record: e.record,
                reason: err.to_string(),
            })?;
        if d.is_block() {
            out.push(SuspectRequest {
                frame: e.frame,
                url: url.clone(),
                record: e.record,
            });
        }
    }
    Ok(out)
}

/// Requests issued inside local frames that `rules` would block.
pub fn suspect_requests(
    log: &EventLog,
    rules: &RuleSet,
    policy: AttributionPolicy,
) -> Result<Vec<SuspectRequest>> {
    let tree = resolved_tree(log)?;
    suspects_in(log, &tree, rules, policy, SuffixRules::builtin())
}

pub fn analyze_site(log: &EventLog, ctx: &AnalysisContext<'_>) -> Result<SiteAnalysis> {
    let tree = resolved_tree(log)?;
    let local_frames = local_frames_in(log, &tree, ctx.suffixes)?;
    let suspects = suspects_in(log, &tree, ctx.rules, ctx.policy, ctx.suffixes)?;
    let mut stats = privacy_events(log, &ctx.fingerprint)?;
    stats.n_local_frames_1p = local_frames.iter().filter(|f| f.first_party).count() as u64;
    stats.n_local_frames_3p = local_frames.len() as u64 - stats.n_local_frames_1p;
    stats.n_blocked_in_lf = suspects.len() as u64;
    Ok(SiteAnalysis {
        stats,
        local_frames,
        candidates: candidate_counts(log),
        suspects,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub sites: Vec<SiteStats>,
    pub summary: Summary,
    pub frame_entities: Vec<BucketEntities>,
    pub request_entities: Vec<BucketEntities>,
    pub prefixes: Vec<PrefixRow>,
}

/// Runs the whole pipeline. Sites are reported in name order; a site may
/// appear in only one log.
pub fn analyze(logs: &[EventLog], ctx: &AnalysisContext<'_>) -> Result<AnalysisReport> {
    let mut sites = Vec::with_capacity(logs.len());
    let mut seen = BTreeSet::new();
    for log in logs {
        if !seen.insert(log.site.as_str()) {
            return Err(Error::Schema(format!(
                "site {} has more than one log",
                log.site
            )));
        }
        sites.push(analyze_site(log, ctx)?);
    }
    sites.sort_by(|a, b| a.stats.site.cmp(&b.stats.site));
    Ok(report_from(&sites, ctx))
}

fn report_from(sites: &[SiteAnalysis], ctx: &AnalysisContext<'_>) -> AnalysisReport {
    let stats: Vec<SiteStats> = sites.iter().map(|s| s.stats.clone()).collect();
    let mut frame_entities = Vec::new();
    let mut request_entities = Vec::new();
    for bucket in RankBucket::ALL {
        let in_bucket: Vec<SiteAnalysis> = sites
            .iter()
            .filter(|s| s.stats.bucket == Some(bucket))
            .cloned()
            .collect();
        let r = entity_rollup(&in_bucket, &ctx.entities, ctx.suffixes);
        frame_entities.push(BucketEntities {
            bucket,
            rows: r.frames,
        });
        request_entities.push(BucketEntities {
            bucket,
            rows: r.requests,
        });
    }
    let mut counts: BTreeMap<SourceKind, u64> = BTreeMap::new();
    for s in sites {
        for (k, n) in &s.candidates {
            *counts.entry(*k).or_insert(0) += n;
        }
    }
    let total: u64 = counts.values().sum();
    let mut prefixes: Vec<PrefixRow> = counts
        .into_iter()
        .map(|(kind, count)| PrefixRow {
            kind,
            count,
            share: count as f64 / total as f64,
        })
        .collect();
    prefixes.sort_by(|a, b| b.count.cmp(&a.count).then(a.kind.cmp(&b.kind)));
    AnalysisReport {
        summary: summarize(&stats),
        sites: stats,
        frame_entities,
        request_entities,
        prefixes,
    }
}
