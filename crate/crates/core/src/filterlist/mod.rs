//! EasyList-subset filter lists: parsing, rendering, and indexed rule sets.

mod domains;
mod pattern;
mod rule;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::Serialize;

pub(crate) use domains::host_suffixes;
pub use domains::DomainList;
pub use pattern::{is_separator, Anchor, Pattern, Token};
pub use rule::{
    has_party_modifier, parse_rule, CosmeticRule, NetworkRule, ParsedRule, Party, ResourceType,
    ScriptletRule, SUPPORTED_SCRIPTLETS,
};

use crate::error::{Error, Result};

/// Parsed rules in list order, plus lookup indexes derived from them.
#[derive(Clone, Debug, Default)]
pub struct RuleSet {
    network: Vec<NetworkRule>,
    cosmetic: Vec<CosmeticRule>,
    scriptlets: Vec<ScriptletRule>,
    resources: BTreeMap<String, String>,
    index: Index,
}

#[derive(Clone, Debug, Default, PartialEq)]
struct Index {
    network_by_host: HashMap<String, Vec<usize>>,
    /// Rules without a pinned host, keyed by one whole alphanumeric run.
    network_by_run: HashMap<String, Vec<usize>>,
    network_rest: Vec<usize>,
    cosmetic_generic: Vec<usize>,
    cosmetic_by_domain: HashMap<String, Vec<usize>>,
    scriptlets_by_domain: HashMap<String, Vec<usize>>,
}

impl Index {
    fn build(
        network: &[NetworkRule],
        cosmetic: &[CosmeticRule],
        scriptlets: &[ScriptletRule],
    ) -> Index {
        let mut ix = Index::default();
        for (i, r) in network.iter().enumerate() {
            if let Some(h) = r.pattern.anchor_host() {
                ix.network_by_host.entry(h.to_string()).or_default().push(i);
                continue;
            }
            // Key on the run with the smallest bucket so far, then the longest.
            let best = r.pattern.whole_runs().into_iter().min_by_key(|run| {
                let load = ix.network_by_run.get(*run).map_or(0, Vec::len);
                (load, std::cmp::Reverse(run.len()))
            });
            match best {
                Some(run) => ix
                    .network_by_run
                    .entry(run.to_string())
                    .or_default()
                    .push(i),
                None => ix.network_rest.push(i),
            }
        }
        for (i, r) in cosmetic.iter().enumerate() {
            if r.domains.include.is_empty() {
                ix.cosmetic_generic.push(i);
            } else {
                for d in dedup(&r.domains.include) {
                    ix.cosmetic_by_domain.entry(d.clone()).or_default().push(i);
                }
            }
        }
        for (i, r) in scriptlets.iter().enumerate() {
            for d in dedup(&r.domains.include) {
                ix.scriptlets_by_domain
                    .entry(d.clone())
                    .or_default()
                    .push(i);
            }
        }
        ix
    }
}

fn dedup(v: &[String]) -> Vec<&String> {
    let mut out: Vec<&String> = v.iter().collect();
    out.sort();
    out.dedup();
    out
}

fn gather(map: &HashMap<String, Vec<usize>>, host: &str, out: &mut Vec<usize>) {
    for s in host_suffixes(host) {
        if let Some(ids) = map.get(s) {
            out.extend_from_slice(ids);
        }
    }
}

fn sorted_unique(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v.dedup();
    v
}

impl RuleSet {
    pub fn new(
        network: Vec<NetworkRule>,
        cosmetic: Vec<CosmeticRule>,
        scriptlets: Vec<ScriptletRule>,
    ) -> RuleSet {
        let index = Index::build(&network, &cosmetic, &scriptlets);
        RuleSet {
            network,
            cosmetic,
            scriptlets,
            resources: BTreeMap::new(),
            index,
        }
    }

    pub fn with_resources(mut self, resources: BTreeMap<String, String>) -> RuleSet {
        self.resources = resources;
        self
    }

    pub fn network(&self) -> &[NetworkRule] {
        &self.network
    }

    pub fn cosmetic(&self) -> &[CosmeticRule] {
        &self.cosmetic
    }

    pub fn scriptlets(&self) -> &[ScriptletRule] {
        &self.scriptlets
    }

    pub fn resources(&self) -> &BTreeMap<String, String> {
        &self.resources
    }

    pub fn resource(&self, name: &str) -> Option<&str> {
        self.resources.get(name).map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.network.is_empty() && self.cosmetic.is_empty() && self.scriptlets.is_empty()
    }

    pub fn len(&self) -> usize {
        self.network.len() + self.cosmetic.len() + self.scriptlets.len()
    }

    /// Indices of network rules that can match `url` (ASCII-lowercased),
    /// whose host is `host`, in list order. A superset of the rules that
    /// actually match.
    pub fn network_candidates(&self, url: &str, host: &str) -> Vec<usize> {
        let mut out = self.index.network_rest.clone();
        gather(&self.index.network_by_host, host, &mut out);
        for (a, b) in pattern::alnum_runs(url) {
            if let Some(ids) = self.index.network_by_run.get(&url[a..b]) {
                out.extend_from_slice(ids);
            }
        }
        sorted_unique(out)
    }

    /// Cosmetic rules worth checking for a frame host (`None` for opaque
    /// frames), in list order.
    pub fn cosmetic_candidates(&self, host: Option<&str>) -> Vec<usize> {
        let mut out = self.index.cosmetic_generic.clone();
        if let Some(h) = host {
            gather(&self.index.cosmetic_by_domain, h, &mut out);
        }
        sorted_unique(out)
    }

    pub fn scriptlet_candidates(&self, host: Option<&str>) -> Vec<usize> {
        let mut out = Vec::new();
        if let Some(h) = host {
            gather(&self.index.scriptlets_by_domain, h, &mut out);
        }
        sorted_unique(out)
    }

    /// True when the stored indexes equal a fresh rebuild from the lists.
    pub fn index_is_consistent(&self) -> bool {
        self.index == Index::build(&self.network, &self.cosmetic, &self.scriptlets)
    }
}

/// Loads a resource map: a JSON object of name to replacement body.
pub fn load_resources(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_resources(&text)
}

pub fn parse_resources(text: &str) -> Result<BTreeMap<String, String>> {
    serde_json::from_str(text).map_err(|e| Error::json("resource map", e))
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RuleCounts {
    pub network: usize,
    pub cosmetic: usize,
    pub scriptlet: usize,
    pub comment: usize,
    pub unsupported: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UnsupportedLine {
    pub line: usize,
    pub text: String,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ParseReport {
    pub counts: RuleCounts,
    /// Parsed network rules restricted by party.
    pub party_modified: usize,
    /// Lines carrying a party option, including ones we could not parse.
    pub party_modified_lines: usize,
    pub unsupported: Vec<UnsupportedLine>,
}

pub fn parse_list(text: &str) -> (RuleSet, ParseReport) {
    let mut report = ParseReport::default();
    let (mut network, mut cosmetic, mut scriptlets) = (Vec::new(), Vec::new(), Vec::new());
    for (i, line) in text.lines().enumerate() {
        if has_party_modifier(line) {
            report.party_modified_lines += 1;
        }
        match parse_rule(line) {
            ParsedRule::Network(r) => {
                report.counts.network += 1;
                network.push(r);
            }
            ParsedRule::Cosmetic(r) => {
                report.counts.cosmetic += 1;
                cosmetic.push(r);
            }
            ParsedRule::Scriptlet(r) => {
                report.counts.scriptlet += 1;
                scriptlets.push(r);
            }
            ParsedRule::Comment => report.counts.comment += 1,
            ParsedRule::Unsupported(reason) => {
                report.counts.unsupported += 1;
                report.unsupported.push(UnsupportedLine {
                    line: i + 1,
                    text: line.trim().to_string(),
                    reason,
                });
            }
        }
    }
    let rules = RuleSet::new(network, cosmetic, scriptlets);
    report.party_modified = count_party_modified(&rules);
    (rules, report)
}

pub fn load_list(path: &Path) -> Result<(RuleSet, ParseReport)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_list(&text))
}

/// Network rules with a party restriction.
pub fn count_party_modified(rules: &RuleSet) -> usize {
    rules
        .network
        .iter()
        .filter(|r| r.party != Party::Any)
        .count()
}
