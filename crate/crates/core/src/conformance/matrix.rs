//! Probes, expected matrices, and the runner that fills actual matrices
//! from engine decisions.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::engine::{Action, Engine, FrameAdornment, RequestEvent};
use crate::error::{Error, Result};
use crate::filterlist::{ResourceType, RuleSet};
use crate::policy::AttributionPolicy;

use super::page::{ElementSpec, PageSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Capability {
    Requests,
    AsyncRequests,
    Replacement,
    Scriptlets,
    Cosmetics,
    Accounting,
}

impl Capability {
    pub const ALL: [Capability; 6] = [
        Capability::Requests,
        Capability::AsyncRequests,
        Capability::Replacement,
        Capability::Scriptlets,
        Capability::Cosmetics,
        Capability::Accounting,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Capability::Requests => "requests",
            Capability::AsyncRequests => "async-requests",
            Capability::Replacement => "replacement",
            Capability::Scriptlets => "scriptlets",
            Capability::Cosmetics => "cosmetics",
            Capability::Accounting => "accounting",
        }
    }
}

impl fmt::Display for Capability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The policy each capability runs under; `None` means the tool lacks it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CapabilityPolicies {
    pub requests: Option<AttributionPolicy>,
    /// Falls back to `requests` when unset.
    pub async_requests: Option<AttributionPolicy>,
    pub replacement: Option<AttributionPolicy>,
    pub scriptlets: Option<AttributionPolicy>,
    pub cosmetics: Option<AttributionPolicy>,
    pub accounting: Option<AttributionPolicy>,
}

impl CapabilityPolicies {
    pub fn uniform(p: AttributionPolicy) -> Self {
        CapabilityPolicies {
            requests: Some(p),
            async_requests: Some(p),
            replacement: Some(p),
            scriptlets: Some(p),
            cosmetics: Some(p),
            accounting: Some(p),
        }
    }

    pub fn get(&self, c: Capability) -> Option<AttributionPolicy> {
        match c {
            Capability::Requests => self.requests,
            Capability::AsyncRequests => self.async_requests.or(self.requests),
            Capability::Replacement => self.replacement,
            Capability::Scriptlets => self.scriptlets,
            Capability::Cosmetics => self.cosmetics,
            Capability::Accounting => self.accounting,
        }
    }

    pub fn set(&mut self, c: Capability, p: Option<AttributionPolicy>) {
        match c {
            Capability::Requests => self.requests = p,
            Capability::AsyncRequests => self.async_requests = p,
            Capability::Replacement => self.replacement = p,
            Capability::Scriptlets => self.scriptlets = p,
            Capability::Cosmetics => self.cosmetics = p,
            Capability::Accounting => self.accounting = p,
        }
    }

    fn for_request(&self, t: ResourceType) -> Option<AttributionPolicy> {
        if t == ResourceType::Xhr {
            self.get(Capability::AsyncRequests)
        } else {
            self.requests
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProbeKind {
    /// `request:<url>`: allow, block, or redirect:<resource>.
    Request,
    /// `replace:<url>`: original, or replaced:<body>.
    Replace,
    /// `element:<tag>.<class>`: hidden or visible.
    Element,
    /// `scriptlet:<global>`: the value set-constant leaves, or undefined.
    Scriptlet,
    /// `counted:<url>`: counted, uncounted, or allowed.
    Counted,
}

impl ProbeKind {
    pub fn prefix(self) -> &'static str {
        match self {
            ProbeKind::Request => "request",
            ProbeKind::Replace => "replace",
            ProbeKind::Element => "element",
            ProbeKind::Scriptlet => "scriptlet",
            ProbeKind::Counted => "counted",
        }
    }

    pub fn parse_probe(probe: &str) -> Option<(ProbeKind, &str)> {
        let (kind, target) = probe.split_once(':')?;
        let kind = match kind {
            "request" => ProbeKind::Request,
            "replace" => ProbeKind::Replace,
            "element" => ProbeKind::Element,
            "scriptlet" => ProbeKind::Scriptlet,
            "counted" => ProbeKind::Counted,
            _ => return None,
        };
        (!target.is_empty()).then_some((kind, target))
    }

    /// Whether `value` belongs to this probe's outcome alphabet.
    pub fn admits(self, value: &str) -> bool {
        match self {
            ProbeKind::Request => {
                matches!(value, "allow" | "block")
                    || value
                        .strip_prefix("redirect:")
                        .is_some_and(|r| !r.is_empty())
            }
            ProbeKind::Replace => value == "original" || value.starts_with("replaced:"),
            ProbeKind::Element => matches!(value, "hidden" | "visible"),
            ProbeKind::Scriptlet => !value.is_empty(),
            ProbeKind::Counted => matches!(value, "counted" | "uncounted" | "allowed"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedCell {
    pub frame: String,
    pub probe: String,
    pub expect: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedMatrix {
    pub test_id: String,
    pub cells: Vec<ExpectedCell>,
}

impl ExpectedMatrix {
    pub fn from_json(text: &str) -> Result<ExpectedMatrix> {
        serde_json::from_str(text).map_err(|e| Error::json("expected matrix", e))
    }

    /// Every page frame appears, every cell names a known frame, a well-formed
    /// probe, and an outcome from that probe's alphabet.
    pub fn validate(&self, page: &PageSpec) -> Result<()> {
        let labels: BTreeSet<&str> = page.labels().into_iter().collect();
        let mut covered = BTreeSet::new();
        let mut keys = BTreeSet::new();
        for c in &self.cells {
            let bad = |why: &str| {
                Error::Schema(format!(
                    "{}: cell ({}, {}): {why}",
                    self.test_id, c.frame, c.probe
                ))
            };
            if !labels.contains(c.frame.as_str()) {
                return Err(bad("unknown frame"));
            }
            let Some((kind, _)) = ProbeKind::parse_probe(&c.probe) else {
                return Err(bad("malformed probe"));
            };
            if !kind.admits(&c.expect) {
                return Err(bad(&format!(
                    "outcome {:?} not allowed for this probe",
                    c.expect
                )));
            }
            if !keys.insert((c.frame.as_str(), c.probe.as_str())) {
                return Err(bad("duplicate cell"));
            }
            covered.insert(c.frame.as_str());
        }
        if let Some(missing) = labels.difference(&covered).next() {
            return Err(Error::Schema(format!(
                "{}: frame {missing:?} has no expected cells",
                self.test_id
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActualCell {
    pub frame: String,
    pub probe: String,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActualMatrix {
    pub page: String,
    pub cells: Vec<ActualCell>,
}

impl ActualMatrix {
    pub fn get(&self, frame: &str, probe: &str) -> Option<&str> {
        self.cells
            .iter()
            .find(|c| c.frame == frame && c.probe == probe)
            .map(|c| c.value.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mismatch {
    pub frame: String,
    pub probe: String,
    pub expected: String,
    pub actual: Option<String>,
}

pub fn compare(expected: &ExpectedMatrix, actual: &ActualMatrix) -> Vec<Mismatch> {
    expected
        .cells
        .iter()
        .filter_map(|c| {
            let got = actual.get(&c.frame, &c.probe);
            (got != Some(c.expect.as_str())).then(|| Mismatch {
                frame: c.frame.clone(),
                probe: c.probe.clone(),
                expected: c.expect.clone(),
                actual: got.map(str::to_string),
            })
        })
        .collect()
}

/// Matches a selector list of simple compound selectors (`tag`, `.class`,
/// `tag.a.b`) against one element. Anything richer never matches.
pub fn selector_matches(selector: &str, element: &ElementSpec) -> bool {
    let classes: BTreeSet<&str> = element.class.split_whitespace().collect();
    selector.split(',').any(|compound| {
        let compound = compound.trim();
        let mut parts = compound.split('.');
        let tag = parts.next().unwrap_or_default();
        let ident = |s: &str| {
            !s.is_empty()
                && s.chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        };
        if !(tag.is_empty() || ident(tag)) || compound.is_empty() {
            return false;
        }
        let mut required = Vec::new();
        for p in parts {
            if !ident(p) {
                return false;
            }
            required.push(p);
        }
        (tag.is_empty() || tag.eq_ignore_ascii_case(&element.tag))
            && required.iter().all(|c| classes.contains(c))
    })
}

fn request_value(action: &Action) -> String {
    match action {
        Action::Allow => "allow".into(),
        Action::Block => "block".into(),
        Action::Redirect { resource } => format!("redirect:{resource}"),
    }
}

fn scriptlet_value(adornment: &FrameAdornment, global: &str) -> String {
    adornment
        .injected_scriptlets
        .iter()
        .find(|s| s.name == "set-constant" && s.args.first().map(String::as_str) == Some(global))
        .and_then(|s| s.args.get(1).cloned())
        .unwrap_or_else(|| "undefined".into())
}

struct Engines<'a> {
    built: Vec<(AttributionPolicy, Engine<'a>)>,
    tree: &'a crate::frame::FrameTree,
    rules: &'a RuleSet,
}

impl<'a> Engines<'a> {
    fn get(&mut self, p: AttributionPolicy) -> Result<&Engine<'a>> {
        if let Some(i) = self.built.iter().position(|(q, _)| *q == p) {
            return Ok(&self.built[i].1);
        }
        let engine = Engine::new(self.tree, self.rules, p)?;
        self.built.push((p, engine));
        Ok(&self.built.last().expect("just pushed").1)
    }
}

/// Fills every probe the page defines whose capability has a policy.
/// Cells come out in frame pre-order, then request, replacement, and
/// accounting probes per request, then elements, then globals.
pub fn run_page(
    test: &str,
    page: &PageSpec,
    rules: &RuleSet,
    policies: &CapabilityPolicies,
) -> Result<ActualMatrix> {
    let lowered = page.lower()?;
    let mut engines = Engines {
        built: Vec::new(),
        tree: &lowered.tree,
        rules,
    };
    let cell_err = |frame: &str, probe: &str, e: Error| Error::Cell {
        test: test.to_string(),
        frame: frame.to_string(),
        probe: probe.to_string(),
        source: Box::new(e),
    };

    // Accounting runs over the whole page's events at once.
    let mut counted: Vec<Option<bool>> = Vec::new();
    if let Some(p) = policies.accounting {
        let events = lowered.events();
        let ledger = engines
            .get(p)
            .and_then(|e| e.account_blocks(&events))
            .map_err(|e| cell_err(&page.name, "counted:*", e))?;
        let mut entries = ledger.entries.iter().peekable();
        for ev in &events {
            let hit = entries
                .peek()
                .filter(|en| en.frame_id == ev.frame_id && en.url == ev.url);
            counted.push(match hit {
                Some(en) => {
                    let c = en.counted;
                    entries.next();
                    Some(c)
                }
                None => None,
            });
        }
    }

    let mut cells = Vec::new();
    let mut ev_index = 0;
    for (id, frame) in &lowered.frames {
        let mut push = |probe: String, value: String| {
            cells.push(ActualCell {
                frame: frame.label.clone(),
                probe,
                value,
            })
        };
        for req in &frame.requests {
            let ev = RequestEvent::new(req.url.clone(), *id, req.resource_type);
            if let Some(p) = policies.for_request(req.resource_type) {
                let probe = format!("request:{}", req.url);
                let d = engines
                    .get(p)
                    .and_then(|e| e.decide_request(&ev))
                    .map_err(|e| cell_err(&frame.label, &probe, e))?;
                push(probe, request_value(&d.action));
            }
            if let Some(p) = policies.replacement {
                let probe = format!("replace:{}", req.url);
                let engine = engines
                    .get(p)
                    .map_err(|e| cell_err(&frame.label, &probe, e))?;
                let d = engine
                    .decide_replacement(&ev)
                    .map_err(|e| cell_err(&frame.label, &probe, e))?;
                let value = match d.action {
                    Action::Redirect { resource } => {
                        format!("replaced:{}", rules.resource(&resource).unwrap_or_default())
                    }
                    _ => "original".into(),
                };
                push(probe, value);
            }
            if policies.accounting.is_some() {
                let value = match counted[ev_index] {
                    Some(true) => "counted",
                    Some(false) => "uncounted",
                    None => "allowed",
                };
                push(format!("counted:{}", req.url), value.into());
            }
            ev_index += 1;
        }
        if let Some(p) = policies.cosmetics {
            if !frame.elements.is_empty() {
                let a = engines
                    .get(p)
                    .and_then(|e| e.adorn_frame(*id))
                    .map_err(|e| cell_err(&frame.label, "element:*", e))?;
                for el in &frame.elements {
                    let hidden = a.hidden_selectors.iter().any(|s| selector_matches(s, el));
                    let value = if hidden { "hidden" } else { "visible" };
                    push(format!("element:{}", el.label()), value.into());
                }
            }
        }
        if let Some(p) = policies.scriptlets {
            if !frame.globals.is_empty() {
                let a = engines
                    .get(p)
                    .and_then(|e| e.adorn_frame(*id))
                    .map_err(|e| cell_err(&frame.label, "scriptlet:*", e))?;
                for g in &frame.globals {
                    push(format!("scriptlet:{g}"), scriptlet_value(&a, g));
                }
            }
        }
    }
    Ok(ActualMatrix {
        page: page.name.clone(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn el(tag: &str, class: &str) -> ElementSpec {
        ElementSpec {
            tag: tag.into(),
            class: class.into(),
        }
    }

    #[test]
    fn simple_selectors() {
        let e = el("h1", "cosmetic-filter big");
        assert!(selector_matches(".cosmetic-filter", &e));
        assert!(selector_matches("h1.cosmetic-filter", &e));
        assert!(selector_matches("H1", &e));
        assert!(selector_matches("div, .big", &e));
        assert!(!selector_matches("h2.cosmetic-filter", &e));
        assert!(!selector_matches(".ADBAR", &e));
        assert!(!selector_matches("div > .big", &e));
        assert!(!selector_matches("[class]", &e));
        assert!(!selector_matches("", &e));
    }

    #[test]
    fn probe_alphabets() {
        assert_eq!(
            ProbeKind::parse_probe("request:https://a.com/x.js:1"),
            Some((ProbeKind::Request, "https://a.com/x.js:1"))
        );
        assert!(ProbeKind::parse_probe("nope:x").is_none());
        assert!(ProbeKind::parse_probe("element:").is_none());
        assert!(ProbeKind::Request.admits("redirect:noop.txt"));
        assert!(!ProbeKind::Request.admits("hidden"));
        assert!(ProbeKind::Counted.admits("uncounted"));
    }
}
