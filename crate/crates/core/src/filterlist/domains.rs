use std::fmt;

/// Include/exclude hostname lists attached to a rule. An entry matches a
/// host equal to it or any subdomain of it.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct DomainList {
    pub include: Vec<String>,
    pub exclude: Vec<String>,
}

pub(crate) fn host_matches(host: &str, entry: &str) -> bool {
    host == entry
        || (host.len() > entry.len()
            && host.ends_with(entry)
            && host.as_bytes()[host.len() - entry.len() - 1] == b'.')
}

/// `a.b.c` yields `a.b.c`, `b.c`, `c`.
pub(crate) fn host_suffixes(host: &str) -> impl Iterator<Item = &str> {
    std::iter::once(host).chain(host.match_indices('.').map(move |(i, _)| &host[i + 1..]))
}

impl DomainList {
    /// Parses `sep`-separated entries; `~` marks an exclusion. Returns `None`
    /// on empty or malformed entries.
    pub fn parse(text: &str, sep: char) -> Option<DomainList> {
        let mut list = DomainList::default();
        if text.is_empty() {
            return Some(list);
        }
        for raw in text.split(sep) {
            let raw = raw.trim();
            let (negated, name) = match raw.strip_prefix('~') {
                Some(n) => (true, n),
                None => (false, raw),
            };
            if name.is_empty()
                || name.starts_with('.')
                || name.ends_with('.')
                || !name
                    .chars()
                    .all(|c| c.is_alphanumeric() || matches!(c, '.' | '-' | '_'))
            {
                return None;
            }
            let name = name.to_lowercase();
            if negated {
                list.exclude.push(name);
            } else {
                list.include.push(name);
            }
        }
        Some(list)
    }

    pub fn is_empty(&self) -> bool {
        self.include.is_empty() && self.exclude.is_empty()
    }

    /// Whether a frame with this host is admitted. Opaque frames (`None`)
    /// can satisfy only lists without includes.
    pub fn admits(&self, host: Option<&str>) -> bool {
        match host {
            None => self.include.is_empty(),
            Some(h) => {
                let included =
                    self.include.is_empty() || self.include.iter().any(|d| host_matches(h, d));
                included && !self.exclude.iter().any(|d| host_matches(h, d))
            }
        }
    }

    pub(crate) fn render(&self, sep: char) -> String {
        let mut out = String::new();
        let entries = self
            .include
            .iter()
            .map(|d| (false, d))
            .chain(self.exclude.iter().map(|d| (true, d)));
        for (i, (neg, d)) in entries.enumerate() {
            if i > 0 {
                out.push(sep);
            }
            if neg {
                out.push('~');
            }
            out.push_str(d);
        }
        out
    }
}

impl fmt::Display for DomainList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(','))
    }
}
