//! Brute-force reference implementations, written from the rule grammar
//! and origin rules directly: patterns become regexes, origins come from an
//! explicit walk up the parent chain, and every rule is checked in order.

use regex::Regex;

use super::gen::TreeSpec;
use localframe_core::ResourceType;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Policy {
    Spec,
    Skip,
    SkipRequests,
    Fallback,
    Literal,
    TopLevel,
    DirectParent,
}

pub const POLICIES: [Policy; 7] = [
    Policy::Spec,
    Policy::Skip,
    Policy::SkipRequests,
    Policy::Fallback,
    Policy::Literal,
    Policy::TopLevel,
    Policy::DirectParent,
];

impl Policy {
    pub fn name(self) -> &'static str {
        match self {
            Policy::Spec => "spec-correct",
            Policy::Skip => "skip-local-frames",
            Policy::SkipRequests => "skip-local-frames-and-requests",
            Policy::Fallback => "first-party-fallback",
            Policy::Literal => "literal-self",
            Policy::TopLevel => "top-level-partyness",
            Policy::DirectParent => "direct-parent-only",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Origin {
    Tuple {
        scheme: String,
        host: String,
    },
    /// Opaque origin minted for the given frame.
    Opaque(u32),
}

impl Origin {
    pub fn host(&self) -> Option<&str> {
        match self {
            Origin::Tuple { host, .. } => Some(host),
            Origin::Opaque(_) => None,
        }
    }
}

/// Scheme and host of an absolute URL, lowercased.
pub fn split_url(url: &str) -> (String, String) {
    let url = url.trim().to_lowercase();
    let (scheme, rest) = url.split_once("://").expect("absolute url");
    let host: String = rest.chars().take_while(|c| !"/?#:".contains(*c)).collect();
    (scheme.to_string(), host)
}

fn is_local(src: &str) -> bool {
    let s = src.trim().to_lowercase();
    s.is_empty() || s.starts_with("about:") || s.starts_with("blob:") || s.starts_with("data:")
}

fn inherits(src: &str) -> bool {
    let s = src.trim().to_lowercase();
    s.is_empty() || s == "about:blank" || s == "about:srcdoc" || s.starts_with("blob:")
}

fn is_url(src: &str) -> bool {
    let s = src.trim().to_lowercase();
    !is_local(&s) && !s.starts_with("file:")
}

/// The frame's security origin, by walking to the nearest ancestor that
/// does not inherit.
pub fn origin(tree: &TreeSpec, id: u32, policy: Policy) -> Origin {
    let src = tree.src(id);
    if is_url(src) {
        let (scheme, host) = split_url(src);
        return Origin::Tuple { scheme, host };
    }
    if is_local(src) {
        match policy {
            Policy::Fallback => return origin(tree, tree.frames[0].0, policy),
            Policy::Literal => return Origin::Opaque(id),
            _ => {}
        }
    }
    if inherits(src) {
        if let Some(p) = tree.parent(id) {
            return origin(tree, p, policy);
        }
    }
    Origin::Opaque(id)
}

/// Registrable domain over the generated host universe.
pub fn registrable(host: &str) -> String {
    let labels: Vec<&str> = host.split('.').collect();
    let keep = if host.ends_with(".co.uk") { 3 } else { 2 };
    labels[labels.len().saturating_sub(keep)..].join(".")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Party {
    First,
    Third,
    Unknown,
}

pub fn party(request: &Origin, context: &Origin) -> Party {
    match (request, context) {
        (
            Origin::Tuple {
                scheme: s1,
                host: h1,
            },
            Origin::Tuple {
                scheme: s2,
                host: h2,
            },
        ) => {
            if s1 == s2 && registrable(h1) == registrable(h2) {
                Party::First
            } else {
                Party::Third
            }
        }
        _ => Party::Unknown,
    }
}

pub fn pattern_regex(pattern: &str) -> Regex {
    let p = pattern.to_lowercase();
    let (mut re, body) = if let Some(b) = p.strip_prefix("||") {
        (
            String::from(r"^[a-z][a-z0-9+.\-]*://(?:[^/?#:.]*\.)*"),
            b.to_string(),
        )
    } else if let Some(b) = p.strip_prefix('|') {
        (String::from("^"), b.to_string())
    } else {
        (String::new(), p.clone())
    };
    let (body, end) = match body.strip_suffix('|') {
        Some(b) => (b.to_string(), "$"),
        None => (body, ""),
    };
    for c in body.chars() {
        match c {
            '*' => re.push_str(".*"),
            '^' => re.push_str(r"(?:[^a-z0-9_.%\-]|$)"),
            c => re.push_str(&regex::escape(&c.to_string())),
        }
    }
    re.push_str(end);
    Regex::new(&re).expect("pattern regex")
}

#[derive(Debug)]
pub struct Rule {
    pub exception: bool,
    pub regex: Regex,
    pub party: Option<Party>,
    pub types: Vec<String>,
    pub include: Vec<String>,
    pub exclude: Vec<String>,
    pub redirect: Option<String>,
}

/// Parses a generated network rule line.
pub fn rule(line: &str) -> Rule {
    let (exception, body) = match line.strip_prefix("@@") {
        Some(b) => (true, b),
        None => (false, line),
    };
    let (pattern, opts) = match body.rfind('$') {
        Some(i) => (&body[..i], &body[i + 1..]),
        None => (body, ""),
    };
    let mut r = Rule {
        exception,
        regex: pattern_regex(pattern),
        party: None,
        types: Vec::new(),
        include: Vec::new(),
        exclude: Vec::new(),
        redirect: None,
    };
    for o in opts.split(',').filter(|o| !o.is_empty()) {
        match o {
            "third-party" => r.party = Some(Party::Third),
            "~third-party" | "first-party" => r.party = Some(Party::First),
            "script" | "xhr" | "image" | "subdocument" => r.types.push(o.to_string()),
            _ => {
                if let Some(ds) = o.strip_prefix("domain=") {
                    for d in ds.split('|') {
                        match d.strip_prefix('~') {
                            Some(x) => r.exclude.push(x.to_lowercase()),
                            None => r.include.push(d.to_lowercase()),
                        }
                    }
                } else if let Some(n) = o.strip_prefix("redirect=") {
                    r.redirect = Some(n.to_string());
                } else {
                    panic!("generator produced unknown option {o:?}");
                }
            }
        }
    }
    r
}

fn host_in(host: &str, domain: &str) -> bool {
    host == domain || host.ends_with(&format!(".{domain}"))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Allow,
    Block,
    Redirect(String),
}

fn applies(r: &Rule, url: &str, ty: ResourceType, frame_host: Option<&str>, p: Party) -> bool {
    if let Some(want) = r.party {
        if p != want {
            return false;
        }
    }
    if !r.types.is_empty() && !r.types.iter().any(|t| t == ty.as_str()) {
        return false;
    }
    let domain_ok = match frame_host {
        None => r.include.is_empty(),
        Some(h) => {
            (r.include.is_empty() || r.include.iter().any(|d| host_in(h, d)))
                && !r.exclude.iter().any(|d| host_in(h, d))
        }
    };
    domain_ok && r.regex.is_match(url)
}

/// Linear scan over every rule: any exception wins, then the first
/// redirect, then the first block.
pub fn decide(
    lines: &[String],
    tree: &TreeSpec,
    frame: u32,
    url: &str,
    ty: ResourceType,
    policy: Policy,
) -> Verdict {
    let (scheme, host) = split_url(url);
    let request = Origin::Tuple { scheme, host };
    let own = origin(tree, frame, policy);
    let context = if policy == Policy::TopLevel {
        origin(tree, tree.frames[0].0, policy)
    } else {
        own.clone()
    };
    if policy == Policy::SkipRequests && is_local(tree.src(frame)) {
        return Verdict::Allow;
    }
    let p = party(&request, &context);
    let url = url.trim().to_lowercase();
    let rules: Vec<Rule> = lines.iter().map(|l| rule(l)).collect();
    let hits: Vec<&Rule> = rules
        .iter()
        .filter(|r| applies(r, &url, ty, own.host(), p))
        .collect();
    if hits.iter().any(|r| r.exception) {
        return Verdict::Allow;
    }
    if let Some(r) = hits.iter().find(|r| r.redirect.is_some()) {
        return Verdict::Redirect(r.redirect.clone().unwrap());
    }
    if hits.is_empty() {
        Verdict::Allow
    } else {
        Verdict::Block
    }
}
