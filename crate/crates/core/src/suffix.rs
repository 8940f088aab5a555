//! Registrable-domain (eTLD+1) computation over a Public-Suffix-style rule set.

use std::collections::HashSet;
use std::net::IpAddr;
use std::path::Path;
use std::sync::LazyLock;

use crate::error::{Error, Result};

const BUILTIN: &str = include_str!("../data/suffixes.dat");

static BUILTIN_RULES: LazyLock<SuffixRules> = LazyLock::new(|| SuffixRules::parse(BUILTIN));

#[derive(Clone, Debug, Default)]
pub struct SuffixRules {
    exact: HashSet<String>,
    /// `*.ck` is stored as `ck`.
    wildcard: HashSet<String>,
    /// `!www.ck` is stored as `www.ck`.
    exception: HashSet<String>,
}

impl SuffixRules {
    /// Parses one suffix per line. `#` and `//` start comments; anything
    /// after the first whitespace on a line is ignored.
    pub fn parse(text: &str) -> SuffixRules {
        let mut rules = SuffixRules::default();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("//") {
                continue;
            }
            let rule = line
                .split_whitespace()
                .next()
                .unwrap_or_default()
                .trim_end_matches('.')
                .to_ascii_lowercase();
            if let Some(e) = rule.strip_prefix('!') {
                rules.exception.insert(e.to_string());
            } else if let Some(w) = rule.strip_prefix("*.") {
                rules.wildcard.insert(w.to_string());
            } else if !rule.is_empty() {
                rules.exact.insert(rule);
            }
        }
        rules
    }

    pub fn load(path: &Path) -> Result<SuffixRules> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(SuffixRules::parse(&text))
    }

    pub fn builtin() -> &'static SuffixRules {
        &BUILTIN_RULES
    }

    pub fn len(&self) -> usize {
        self.exact.len() + self.wildcard.len() + self.exception.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of labels in the public suffix of `labels`, or `None` when no
    /// rule applies.
    fn suffix_len(&self, labels: &[&str]) -> Option<usize> {
        let n = labels.len();
        let mut best: Option<usize> = None;
        for k in 1..=n {
            let candidate = labels[n - k..].join(".");
            if self.exception.contains(&candidate) {
                return Some(k - 1);
            }
            if self.exact.contains(&candidate) {
                best = Some(k);
            }
            if k < n {
                let parent = labels[n - k..].join(".");
                if self.wildcard.contains(&parent) {
                    best = Some(k + 1);
                }
            }
        }
        best
    }

    pub fn registrable_domain(&self, host: &str) -> String {
        let host = host.trim_end_matches('.').to_ascii_lowercase();
        let bare = host.trim_start_matches('[').trim_end_matches(']');
        if bare.parse::<IpAddr>().is_ok() {
            return host;
        }
        let labels: Vec<&str> = host.split('.').collect();
        let n = labels.len();
        let suffix = match self.suffix_len(&labels) {
            Some(k) => k,
            None if n <= 2 => return host,
            None => 1,
        };
        if suffix == 0 || suffix >= n {
            return host;
        }
        labels[n - suffix - 1..].join(".")
    }
}

/// Public suffix plus one label; see [`SuffixRules::registrable_domain`].
pub fn registrable_domain(host: &str, rules: &SuffixRules) -> String {
    rules.registrable_domain(host)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let rules = SuffixRules::parse("com\nco.uk\n");
        assert_eq!(
            registrable_domain("cdn.firstparty.com", &rules),
            "firstparty.com"
        );
        assert_eq!(registrable_domain("a.b.co.uk", &rules), "b.co.uk");
        assert_eq!(registrable_domain("localhost", &rules), "localhost");
    }

    #[test]
    fn unmatched_hosts() {
        let rules = SuffixRules::parse("com");
        assert_eq!(rules.registrable_domain("foo.bar"), "foo.bar");
        assert_eq!(rules.registrable_domain("a.foo.bar"), "foo.bar");
        assert_eq!(rules.registrable_domain("com"), "com");
        assert_eq!(rules.registrable_domain("Example.COM."), "example.com");
        assert_eq!(rules.registrable_domain("10.0.0.1"), "10.0.0.1");
        assert_eq!(rules.registrable_domain("[::1]"), "[::1]");
    }

    #[test]
    fn wildcard_and_exception() {
        let rules = SuffixRules::parse("// psl style\n*.ck\n!www.ck\n");
        assert_eq!(rules.registrable_domain("a.b.ck"), "a.b.ck");
        assert_eq!(rules.registrable_domain("x.a.b.ck"), "a.b.ck");
        assert_eq!(rules.registrable_domain("www.ck"), "www.ck");
        assert_eq!(rules.registrable_domain("a.www.ck"), "www.ck");
    }

    #[test]
    fn builtin_covers_common_suffixes() {
        let rules = SuffixRules::builtin();
        assert!(rules.len() >= 30);
        assert_eq!(
            rules.registrable_domain("ads.doubleclick.net"),
            "doubleclick.net"
        );
        assert_eq!(rules.registrable_domain("news.bbc.co.uk"), "bbc.co.uk");
        assert_eq!(
            rules.registrable_domain("ep1.adtrafficquality.google"),
            "adtrafficquality.google"
        );
    }
}
