//! Line-delimited crawl event logs.
//!
//! Each line is one JSON record: a `site` header, then `frame` records
//! (parents before children), then `ev` records. A file may hold several
//! site logs back to back.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filterlist::ResourceType;
use crate::frame::{FrameId, FrameTree, FrameTreeBuilder};
use crate::origin::{FrameSource, SourceKind};
use crate::policy::AttributionPolicy;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RankBucket {
    #[serde(rename = "[1-15K)")]
    Top15K,
    #[serde(rename = "[15K-100K)")]
    Top100K,
    #[serde(rename = "[100K-1M)")]
    Top1M,
}

impl RankBucket {
    pub const ALL: [RankBucket; 3] = [RankBucket::Top15K, RankBucket::Top100K, RankBucket::Top1M];

    pub fn of_rank(rank: u64) -> Option<RankBucket> {
        match rank {
            1..=14_999 => Some(RankBucket::Top15K),
            15_000..=99_999 => Some(RankBucket::Top100K),
            100_000..=999_999 => Some(RankBucket::Top1M),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            RankBucket::Top15K => "[1-15K)",
            RankBucket::Top100K => "[15K-100K)",
            RankBucket::Top1M => "[100K-1M)",
        }
    }
}

impl fmt::Display for RankBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogFrame {
    pub id: FrameId,
    pub parent: Option<FrameId>,
    pub source: FrameSource,
    /// The frame left its initial document at some point.
    pub navigated: bool,
    /// Security origin reported by the crawler; used for navigated frames.
    pub origin: Option<String>,
    /// Line number of the record, 0 when built in code.
    pub record: usize,
}

impl LogFrame {
    /// Local for the whole page lifetime: an about:blank or about:srcdoc
    /// frame that was never navigated.
    pub fn is_local_frame(&self) -> bool {
        !self.navigated
            && matches!(
                self.source.kind,
                SourceKind::AboutBlank | SourceKind::AboutSrcdoc
            )
    }

    /// A candidate for the source-prefix statistic: any never-navigated
    /// local source, including blob and data.
    pub fn is_local_candidate(&self) -> bool {
        !self.navigated && self.source.is_local()
    }

    /// The source the frame tree sees: the reported origin for navigated
    /// frames, the initial `src` otherwise.
    fn effective_src(&self) -> &str {
        match (&self.origin, self.navigated) {
            (Some(o), true) => o,
            _ => &self.source.raw,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EventKind {
    Request {
        url: String,
        resource_type: ResourceType,
    },
    ApiCall {
        api: String,
    },
    ElementInserted {
        tag: String,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEvent {
    pub frame: FrameId,
    pub kind: EventKind,
    pub record: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventLog {
    pub site: String,
    pub rank: u64,
    pub bucket: RankBucket,
    pub frames: Vec<LogFrame>,
    pub events: Vec<LogEvent>,
    /// Line number of the site header.
    pub record: usize,
}

#[derive(Deserialize)]
#[serde(tag = "t", rename_all = "lowercase")]
enum Record {
    Site {
        domain: String,
        rank: u64,
    },
    Frame {
        id: u32,
        parent: Option<u32>,
        src: String,
        #[serde(default)]
        navigated: bool,
        #[serde(default)]
        origin: Option<String>,
    },
    Ev {
        frame: u32,
        kind: String,
        #[serde(default)]
        url: Option<String>,
        #[serde(default, rename = "type")]
        resource_type: Option<String>,
        #[serde(default)]
        api: Option<String>,
        #[serde(default)]
        tag: Option<String>,
    },
}

fn malformed(record: usize, reason: impl Into<String>) -> Error {
    Error::MalformedLog {
        record,
        reason: reason.into(),
    }
}

impl EventLog {
    pub fn new(site: &str, rank: u64) -> Result<EventLog> {
        let bucket = RankBucket::of_rank(rank)
            .ok_or_else(|| malformed(0, format!("rank {rank} is outside [1, 1M)")))?;
        Ok(EventLog {
            site: site.trim().to_ascii_lowercase(),
            rank,
            bucket,
            frames: Vec::new(),
            events: Vec::new(),
            record: 0,
        })
    }

    pub fn frame(&self, id: FrameId) -> Option<&LogFrame> {
        self.frames.iter().find(|f| f.id == id)
    }

    /// Checks the structural invariants: one root first, unique ids,
    /// parents declared before children, events on known frames.
    pub fn validate(&self) -> Result<()> {
        if self.site.is_empty() {
            return Err(malformed(self.record, "empty site domain"));
        }
        let Some(root) = self.frames.first() else {
            return Err(malformed(
                self.record,
                format!("site {} has no frames", self.site),
            ));
        };
        if root.parent.is_some() {
            return Err(malformed(
                root.record,
                "first frame must be the top-level frame",
            ));
        }
        let mut seen = BTreeSet::new();
        for f in &self.frames {
            if !seen.insert(f.id) {
                return Err(malformed(
                    f.record,
                    format!("duplicate frame id {}", f.id.0),
                ));
            }
            match f.parent {
                None if f.id != root.id => {
                    return Err(malformed(f.record, "second top-level frame"));
                }
                Some(p) if !seen.contains(&p) || p == f.id => {
                    return Err(malformed(
                        f.record,
                        format!("frame {} refers to undeclared parent {}", f.id.0, p.0),
                    ));
                }
                _ => {}
            }
            if f.navigated && f.origin.is_none() && f.source.is_local() {
                return Err(malformed(
                    f.record,
                    format!("navigated frame {} needs an origin", f.id.0),
                ));
            }
        }
        for e in &self.events {
            if !seen.contains(&e.frame) {
                return Err(malformed(
                    e.record,
                    format!("event on unknown frame {}", e.frame.0),
                ));
            }
        }
        Ok(())
    }

    /// The page's frame tree, resolved under `policy`.
    pub fn tree(&self, policy: &AttributionPolicy) -> Result<FrameTree> {
        self.validate()?;
        let root = &self.frames[0];
        let mut b = FrameTreeBuilder::new(root.id, root.effective_src());
        for f in &self.frames[1..] {
            b.add_child(f.parent.expect("validated"), f.id, f.effective_src());
        }
        let at = |id: FrameId| self.frame(id).map_or(self.record, |f| f.record);
        let tree = b
            .build()
            .map_err(|e| malformed(root.record, e.to_string()))?;
        tree.resolve(policy).map_err(|e| match e {
            Error::MalformedUrl { frame: Some(f), .. } => malformed(at(f), e.to_string()),
            other => malformed(self.record, other.to_string()),
        })
    }

    /// Serializes back to the line format.
    pub fn to_jsonl(&self) -> String {
        use serde_json::json;
        let mut lines = vec![json!({"t": "site", "domain": self.site, "rank": self.rank})];
        for f in &self.frames {
            let mut v = json!({
                "t": "frame",
                "id": f.id.0,
                "parent": f.parent.map(|p| p.0),
                "src": f.source.raw,
            });
            if f.navigated {
                v["navigated"] = json!(true);
            }
            if let Some(o) = &f.origin {
                v["origin"] = json!(o);
            }
            lines.push(v);
        }
        for e in &self.events {
            lines.push(match &e.kind {
                EventKind::Request { url, resource_type } => json!({
                    "t": "ev", "frame": e.frame.0, "kind": "request",
                    "url": url, "type": resource_type.as_str(),
                }),
                EventKind::ApiCall { api } => {
                    json!({"t": "ev", "frame": e.frame.0, "kind": "api", "api": api})
                }
                EventKind::ElementInserted { tag } => {
                    json!({"t": "ev", "frame": e.frame.0, "kind": "element", "tag": tag})
                }
            });
        }
        let mut out = lines
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join("\n");
        out.push('\n');
        out
    }
}

/// Parses one JSONL text holding zero or more site logs. Record numbers in
/// errors are 1-based line numbers.
pub fn parse_logs(text: &str) -> Result<Vec<EventLog>> {
    let mut logs: Vec<EventLog> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let record = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record =
            serde_json::from_str(line).map_err(|e| malformed(record, e.to_string()))?;
        if let Record::Site { domain, rank } = rec {
            let mut log = EventLog::new(&domain, rank).map_err(|e| match e {
                Error::MalformedLog { reason, .. } => malformed(record, reason),
                other => other,
            })?;
            log.record = record;
            logs.push(log);
            continue;
        }
        let Some(log) = logs.last_mut() else {
            return Err(malformed(record, "record before the first site header"));
        };
        match rec {
            Record::Site { .. } => unreachable!(),
            Record::Frame {
                id,
                parent,
                src,
                navigated,
                origin,
            } => log.frames.push(LogFrame {
                id: FrameId(id),
                parent: parent.map(FrameId),
                source: FrameSource::new(src),
                navigated,
                origin,
                record,
            }),
            Record::Ev {
                frame,
                kind,
                url,
                resource_type,
                api,
                tag,
            } => {
                let missing =
                    |field: &str| malformed(record, format!("{kind} event needs {field:?}"));
                let kind = match kind.as_str() {
                    "request" => EventKind::Request {
                        url: url.ok_or_else(|| missing("url"))?,
                        resource_type: match resource_type {
                            Some(t) => t.parse().map_err(|_| {
                                malformed(record, format!("unknown resource type {t:?}"))
                            })?,
                            None => ResourceType::Other,
                        },
                    },
                    "api" => EventKind::ApiCall {
                        api: api.ok_or_else(|| missing("api"))?,
                    },
                    "element" => EventKind::ElementInserted {
                        tag: tag.ok_or_else(|| missing("tag"))?.to_ascii_lowercase(),
                    },
                    other => {
                        return Err(malformed(record, format!("unknown event kind {other:?}")))
                    }
                };
                log.events.push(LogEvent {
                    frame: FrameId(frame),
                    kind,
                    record,
                });
            }
        }
    }
    for log in &logs {
        log.validate()?;
    }
    Ok(logs)
}

/// Reads every `*.jsonl` file in `dir`, in file-name order.
pub fn load_logs(dir: &Path) -> Result<Vec<EventLog>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for p in paths {
        let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
        let logs = parse_logs(&text).map_err(|e| match e {
            Error::MalformedLog { record, reason } => Error::MalformedLog {
                record,
                reason: format!("{}: {reason}", p.display()),
            },
            other => other,
        })?;
        out.extend(logs);
    }
    Ok(out)
}
