//! Host and class renaming for catalog tests, so a test written against
//! `thirdparty.com` can exercise rules aimed at a real tracker host.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::matrix::ExpectedMatrix;
use super::page::{FrameSpec, PageSpec};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpoofMap {
    #[serde(default)]
    pub hosts: BTreeMap<String, String>,
    #[serde(default)]
    pub classes: BTreeMap<String, String>,
}

fn is_host_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '.' || c == '-'
}

fn is_class_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '-' || c == '_'
}

fn injective(map: &BTreeMap<String, String>) -> bool {
    map.values().collect::<BTreeSet<_>>().len() == map.len()
}

impl SpoofMap {
    pub fn new(hosts: BTreeMap<String, String>, classes: BTreeMap<String, String>) -> Result<Self> {
        let m = SpoofMap { hosts, classes };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !injective(&self.hosts) || !injective(&self.classes) {
            return Err(Error::Schema("spoof map must be one-to-one".into()));
        }
        let bad_host = |h: &String| h.is_empty() || !h.chars().all(is_host_char);
        let bad_class = |c: &String| c.is_empty() || !c.chars().all(is_class_char);
        if self.hosts.iter().any(|(k, v)| bad_host(k) || bad_host(v))
            || self
                .classes
                .iter()
                .any(|(k, v)| bad_class(k) || bad_class(v))
        {
            return Err(Error::Schema(
                "spoof map entries must be bare hosts or class names".into(),
            ));
        }
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        self.hosts.iter().all(|(k, v)| k == v) && self.classes.iter().all(|(k, v)| k == v)
    }

    /// Rewrites every hostname token equal to a mapped host or a subdomain
    /// of one. Substitution is simultaneous, so swaps are safe.
    pub fn rewrite_hosts(&self, text: &str) -> String {
        if self.hosts.is_empty() {
            return text.to_string();
        }
        rewrite_runs(text, is_host_char, |run, _| {
            let lower = run.to_ascii_lowercase();
            self.hosts.iter().find_map(|(from, to)| {
                if lower == *from {
                    Some(to.clone())
                } else {
                    lower
                        .strip_suffix(from.as_str())
                        .filter(|p| p.ends_with('.'))
                        .map(|p| format!("{}{to}", &run[..p.len()]))
                }
            })
        })
    }

    /// Rewrites `.class` tokens in a selector or probe label.
    pub fn rewrite_classes(&self, text: &str) -> String {
        if self.classes.is_empty() {
            return text.to_string();
        }
        rewrite_runs(text, is_class_char, |run, prev| {
            (prev == Some('.'))
                .then(|| self.classes.get(run).cloned())
                .flatten()
        })
    }

    /// Hosts everywhere; classes only in cosmetic selectors.
    pub fn rewrite_rules(&self, text: &str) -> String {
        text.lines()
            .map(|line| {
                let line = self.rewrite_hosts(line);
                match line.find("##").or_else(|| line.find("#@#")) {
                    Some(i) => format!("{}{}", &line[..i], self.rewrite_classes(&line[i..])),
                    None => line,
                }
            })
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn rewrite_page(&self, page: &PageSpec) -> PageSpec {
        fn frame(m: &SpoofMap, f: &FrameSpec) -> FrameSpec {
            let mut f = f.clone();
            f.src = m.rewrite_hosts(&f.src);
            for r in &mut f.requests {
                r.url = m.rewrite_hosts(&r.url);
            }
            for e in &mut f.elements {
                e.class = e
                    .class
                    .split_whitespace()
                    .map(|c| m.classes.get(c).map(String::as_str).unwrap_or(c))
                    .collect::<Vec<_>>()
                    .join(" ");
            }
            f.children = f.children.iter().map(|c| frame(m, c)).collect();
            f
        }
        PageSpec {
            name: page.name.clone(),
            frames: page.frames.iter().map(|f| frame(self, f)).collect(),
        }
    }

    pub fn rewrite_expected(&self, m: &ExpectedMatrix) -> ExpectedMatrix {
        let mut out = m.clone();
        for c in &mut out.cells {
            c.probe = self.rewrite_classes(&self.rewrite_hosts(&c.probe));
        }
        out
    }
}

fn rewrite_runs(
    text: &str,
    in_run: impl Fn(char) -> bool,
    replace: impl Fn(&str, Option<char>) -> Option<String>,
) -> String {
    let mut out = String::with_capacity(text.len());
    let mut prev: Option<char> = None;
    let mut chars = text.char_indices().peekable();
    while let Some((start, c)) = chars.next() {
        if !in_run(c) {
            out.push(c);
            prev = Some(c);
            continue;
        }
        let mut end = start + c.len_utf8();
        while let Some(&(i, n)) = chars.peek() {
            if !in_run(n) {
                break;
            }
            end = i + n.len_utf8();
            chars.next();
        }
        let run = &text[start..end];
        match replace(run, prev) {
            Some(r) => out.push_str(&r),
            None => out.push_str(run),
        }
        prev = run.chars().last();
    }
    out
}
