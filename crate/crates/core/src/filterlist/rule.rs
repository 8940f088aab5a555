//! Single-line rule parsing and rendering.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::domains::DomainList;
use super::pattern::Pattern;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResourceType {
    Script,
    Xhr,
    Image,
    Subdocument,
    Other,
}

impl ResourceType {
    pub const ALL: [ResourceType; 5] = [
        ResourceType::Script,
        ResourceType::Xhr,
        ResourceType::Image,
        ResourceType::Subdocument,
        ResourceType::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ResourceType::Script => "script",
            ResourceType::Xhr => "xhr",
            ResourceType::Image => "image",
            ResourceType::Subdocument => "subdocument",
            ResourceType::Other => "other",
        }
    }

    /// Option keyword; `other` has none in the grammar.
    fn from_option(s: &str) -> Option<ResourceType> {
        match s {
            "script" => Some(ResourceType::Script),
            "xhr" => Some(ResourceType::Xhr),
            "image" => Some(ResourceType::Image),
            "subdocument" => Some(ResourceType::Subdocument),
            _ => None,
        }
    }
}

impl fmt::Display for ResourceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ResourceType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        ResourceType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown resource type {s:?}"))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Party {
    #[default]
    Any,
    ThirdOnly,
    FirstOnly,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NetworkRule {
    pub pattern: Pattern,
    pub is_exception: bool,
    pub party: Party,
    /// Empty admits every type.
    pub resource_types: BTreeSet<ResourceType>,
    pub domains: DomainList,
    pub redirect: Option<String>,
}

impl NetworkRule {
    pub fn admits_type(&self, t: ResourceType) -> bool {
        self.resource_types.is_empty() || self.resource_types.contains(&t)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CosmeticRule {
    pub domains: DomainList,
    pub selector: String,
    pub is_exception: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ScriptletRule {
    pub domains: DomainList,
    pub name: String,
    pub args: Vec<String>,
}

pub const SUPPORTED_SCRIPTLETS: &[&str] = &["set-constant"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParsedRule {
    Network(NetworkRule),
    Cosmetic(CosmeticRule),
    Scriptlet(ScriptletRule),
    Comment,
    Unsupported(String),
}

fn unsupported(reason: impl Into<String>) -> ParsedRule {
    ParsedRule::Unsupported(reason.into())
}

/// Parses one filter-list line. Total: anything outside the grammar subset
/// comes back as `Unsupported` with a reason.
pub fn parse_rule(line: &str) -> ParsedRule {
    let line = line.trim();
    if line.is_empty() || line.starts_with('!') {
        return ParsedRule::Comment;
    }
    if line.starts_with('[') && line.ends_with(']') {
        // "[Adblock Plus 2.0]" style headers.
        return ParsedRule::Comment;
    }
    if line.contains('\n') || line.contains('\r') {
        return unsupported("embedded line break");
    }
    if let Some((at, marker)) = find_cosmetic_marker(line) {
        let domains = &line[..at];
        let body = &line[at + marker.len()..];
        return parse_cosmetic_family(domains, marker, body);
    }
    parse_network(line)
}

const MARKERS: &[&str] = &["#@%#", "#@$#", "#@?#", "#%#", "#$#", "#?#", "#@#", "##"];

fn find_cosmetic_marker(line: &str) -> Option<(usize, &'static str)> {
    for (i, _) in line.match_indices('#') {
        for m in MARKERS {
            if line[i..].starts_with(m) {
                return Some((i, m));
            }
        }
    }
    None
}

const PROCEDURAL: &[&str] = &[
    ":has-text(",
    ":-abp-",
    ":xpath(",
    ":upward(",
    ":remove(",
    ":remove-attr(",
    ":remove-class(",
    ":style(",
    ":matches-css",
    ":matches-attr(",
    ":matches-path(",
    ":matches-media(",
    ":min-text-length(",
    ":watch-attr(",
    ":others(",
    ":if(",
    ":if-not(",
    ":contains(",
    ":nth-ancestor(",
    ":shadow(",
];

fn parse_cosmetic_family(domains: &str, marker: &str, body: &str) -> ParsedRule {
    let body = body.trim();
    match marker {
        "##" | "#@#" => {}
        "#%#" => {
            let Some(call) = body.strip_prefix("//scriptlet(") else {
                return unsupported("javascript rules are outside the subset");
            };
            return parse_scriptlet(domains, parse_quoted_call(call));
        }
        m => return unsupported(format!("{m} rules are outside the subset")),
    }
    let is_exception = marker == "#@#";
    if let Some(call) = body.strip_prefix("+js(") {
        if is_exception {
            return unsupported("scriptlet exceptions are outside the subset");
        }
        return parse_scriptlet(domains, parse_plain_call(call));
    }
    if body.starts_with('^') {
        return unsupported("html filtering is outside the subset");
    }
    if body.is_empty() {
        return unsupported("empty selector");
    }
    let lower = body.to_ascii_lowercase();
    if let Some(op) = PROCEDURAL.iter().find(|op| lower.contains(*op)) {
        return unsupported(format!("procedural operator {}", op.trim_end_matches('(')));
    }
    let Some(domains) = DomainList::parse(domains, ',') else {
        return unsupported("malformed domain list");
    };
    ParsedRule::Cosmetic(CosmeticRule {
        domains,
        selector: body.to_string(),
        is_exception,
    })
}

fn parse_scriptlet(domains: &str, call: Option<Vec<String>>) -> ParsedRule {
    let Some(mut args) = call.filter(|a| !a.is_empty()) else {
        return unsupported("malformed scriptlet call");
    };
    let name = args.remove(0);
    let name = name.strip_suffix(".js").unwrap_or(&name).to_string();
    if !SUPPORTED_SCRIPTLETS.contains(&name.as_str()) {
        return unsupported(format!("unsupported scriptlet {name:?}"));
    }
    if args.len() < 2 || args[0].is_empty() {
        return unsupported("set-constant needs a property and a value");
    }
    let Some(domains) = DomainList::parse(domains, ',') else {
        return unsupported("malformed domain list");
    };
    if domains.include.is_empty() {
        return unsupported("scriptlet rules need at least one included domain");
    }
    ParsedRule::Scriptlet(ScriptletRule {
        domains,
        name,
        args,
    })
}

/// `name, a, b)`: comma-separated, `\,` escapes a comma.
fn parse_plain_call(call: &str) -> Option<Vec<String>> {
    let inner = call.trim_end().strip_suffix(')')?;
    let mut args = Vec::new();
    let mut cur = String::new();
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => match chars.next() {
                Some(',') => cur.push(','),
                Some(n) => {
                    cur.push('\\');
                    cur.push(n);
                }
                None => cur.push('\\'),
            },
            ',' => args.push(std::mem::take(&mut cur).trim().to_string()),
            _ => cur.push(c),
        }
    }
    args.push(cur.trim().to_string());
    Some(args)
}

/// `'name', 'a', "b")`: each argument quoted, backslash escapes.
fn parse_quoted_call(call: &str) -> Option<Vec<String>> {
    let mut chars = call.trim_end().chars().peekable();
    let mut args = Vec::new();
    loop {
        while chars.peek().is_some_and(|c| c.is_whitespace()) {
            chars.next();
        }
        let quote = chars.next()?;
        if quote == ')' && args.is_empty() {
            break;
        }
        if quote != '\'' && quote != '"' {
            return None;
        }
        let mut arg = String::new();
        loop {
            match chars.next()? {
                '\\' => arg.push(chars.next()?),
                c if c == quote => break,
                c => arg.push(c),
            }
        }
        args.push(arg);
        while chars.peek().is_some_and(|c| c.is_whitespace()) {
            chars.next();
        }
        match chars.next()? {
            ',' => continue,
            ')' => break,
            _ => return None,
        }
    }
    if chars.next().is_some() {
        return None;
    }
    Some(args)
}

fn parse_network(line: &str) -> ParsedRule {
    let (is_exception, body) = match line.strip_prefix("@@") {
        Some(rest) => (true, rest),
        None => (false, line),
    };
    let (pattern_text, options) = match body.rfind('$') {
        Some(i) => (&body[..i], Some(&body[i + 1..])),
        None => (body, None),
    };
    if pattern_text.len() > 2 && pattern_text.starts_with('/') && pattern_text.ends_with('/') {
        return unsupported("regex rules are outside the subset");
    }
    if pattern_text.chars().any(char::is_whitespace) {
        return unsupported("whitespace in pattern");
    }
    let mut rule = NetworkRule {
        pattern: Pattern::parse(pattern_text),
        is_exception,
        party: Party::Any,
        resource_types: BTreeSet::new(),
        domains: DomainList::default(),
        redirect: None,
    };
    if let Some(options) = options {
        if options.is_empty() {
            return unsupported("empty option list");
        }
        let mut party_set = false;
        let mut domains_set = false;
        for opt in options.split(',') {
            let opt = opt.trim().to_ascii_lowercase();
            let party = match opt.as_str() {
                "third-party" => Some(Party::ThirdOnly),
                "~third-party" | "first-party" => Some(Party::FirstOnly),
                _ => None,
            };
            if let Some(p) = party {
                if party_set && rule.party != p {
                    return unsupported("conflicting party options");
                }
                party_set = true;
                rule.party = p;
            } else if let Some(t) = ResourceType::from_option(&opt) {
                rule.resource_types.insert(t);
            } else if let Some(list) = opt.strip_prefix("domain=") {
                if domains_set {
                    return unsupported("repeated domain option");
                }
                let Some(d) = DomainList::parse(list, '|').filter(|d| !d.is_empty()) else {
                    return unsupported("malformed domain option");
                };
                domains_set = true;
                rule.domains = d;
            } else if let Some(name) = opt.strip_prefix("redirect=") {
                if name.is_empty() || rule.redirect.is_some() {
                    return unsupported("malformed redirect option");
                }
                rule.redirect = Some(name.to_string());
            } else {
                return unsupported(format!("unsupported option {opt:?}"));
            }
        }
    }
    if rule.redirect.is_some() && rule.is_exception {
        return unsupported("redirect on an exception rule");
    }
    if rule.pattern.is_empty() && rule.domains.is_empty() {
        return unsupported("empty pattern without a domain option");
    }
    ParsedRule::Network(rule)
}

/// Whether a line names a party option, judged lexically so that rules we
/// cannot otherwise evaluate are still counted.
pub fn has_party_modifier(line: &str) -> bool {
    let line = line.trim();
    if line.is_empty() || line.starts_with('!') || find_cosmetic_marker(line).is_some() {
        return false;
    }
    let Some(i) = line.rfind('$') else {
        return false;
    };
    line[i + 1..].split(',').any(|o| {
        matches!(
            o.trim().to_ascii_lowercase().as_str(),
            "third-party"
                | "~third-party"
                | "first-party"
                | "~first-party"
                | "3p"
                | "1p"
                | "~3p"
                | "~1p"
        )
    })
}

impl fmt::Display for NetworkRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_exception {
            f.write_str("@@")?;
        }
        write!(f, "{}", self.pattern)?;
        let mut opts: Vec<String> = Vec::new();
        match self.party {
            Party::Any => {}
            Party::ThirdOnly => opts.push("third-party".into()),
            Party::FirstOnly => opts.push("first-party".into()),
        }
        opts.extend(self.resource_types.iter().map(|t| t.as_str().to_string()));
        if !self.domains.is_empty() {
            opts.push(format!("domain={}", self.domains.render('|')));
        }
        if let Some(r) = &self.redirect {
            opts.push(format!("redirect={r}"));
        }
        // A pattern containing '$' needs an option list so the last '$'
        // still separates them on reparse.
        if !opts.is_empty() {
            write!(f, "${}", opts.join(","))?;
        }
        Ok(())
    }
}

impl Serialize for NetworkRule {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NetworkRule {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        match parse_rule(&text) {
            ParsedRule::Network(r) => Ok(r),
            ParsedRule::Unsupported(reason) => Err(serde::de::Error::custom(reason)),
            _ => Err(serde::de::Error::custom("not a network rule")),
        }
    }
}

impl fmt::Display for CosmeticRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let marker = if self.is_exception { "#@#" } else { "##" };
        write!(f, "{}{}{}", self.domains.render(','), marker, self.selector)
    }
}

impl fmt::Display for ScriptletRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}##+js({}", self.domains.render(','), self.name)?;
        for a in &self.args {
            write!(f, ", {}", a.replace(',', "\\,"))?;
        }
        f.write_str(")")
    }
}

impl fmt::Display for ParsedRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParsedRule::Network(r) => r.fmt(f),
            ParsedRule::Cosmetic(r) => r.fmt(f),
            ParsedRule::Scriptlet(r) => r.fmt(f),
            ParsedRule::Comment => f.write_str("!"),
            ParsedRule::Unsupported(reason) => write!(f, "! unsupported: {reason}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filterlist::pattern::Anchor;

    fn network(line: &str) -> NetworkRule {
        match parse_rule(line) {
            ParsedRule::Network(r) => r,
            other => panic!("{line}: {other:?}"),
        }
    }

    fn is_unsupported(line: &str) -> bool {
        matches!(parse_rule(line), ParsedRule::Unsupported(_))
    }

    #[test]
    fn third_party_host_anchor() {
        let r = network("||thirdparty.com^$third-party");
        assert_eq!(r.pattern.anchor(), Anchor::Host);
        assert_eq!(r.pattern.anchor_host(), Some("thirdparty.com"));
        assert_eq!(r.party, Party::ThirdOnly);
        assert!(!r.is_exception);
    }

    #[test]
    fn party_options() {
        assert_eq!(network("a$~third-party").party, Party::FirstOnly);
        assert_eq!(network("a$first-party").party, Party::FirstOnly);
        assert!(is_unsupported("a$third-party,first-party"));
        assert!(is_unsupported("a$~first-party"));
    }

    #[test]
    fn cosmetic() {
        let ParsedRule::Cosmetic(r) = parse_rule("thirdparty.com##.cosmetic-filter") else {
            panic!()
        };
        assert_eq!(r.domains.include, ["thirdparty.com"]);
        assert_eq!(r.selector, ".cosmetic-filter");
        assert!(!r.is_exception);
        let ParsedRule::Cosmetic(r) = parse_rule("a.com#@#.ad") else {
            panic!()
        };
        assert!(r.is_exception);
        let ParsedRule::Cosmetic(r) = parse_rule("##.banner") else {
            panic!()
        };
        assert!(r.domains.is_empty());
    }

    #[test]
    fn scriptlets_both_syntaxes() {
        let a = parse_rule("firstparty.com##+js(set-constant, scriptletvalue, 1)");
        let b = parse_rule("firstparty.com#%#//scriptlet('set-constant', 'scriptletvalue', '1')");
        let ParsedRule::Scriptlet(r) = &a else {
            panic!("{a:?}")
        };
        assert_eq!(r.name, "set-constant");
        assert_eq!(r.args, ["scriptletvalue", "1"]);
        assert_eq!(a, b);
    }

    #[test]
    fn scriptlet_limits() {
        assert!(is_unsupported("a.com##+js(abort-on-property-read, x)"));
        assert!(is_unsupported("##+js(set-constant, x, 1)"));
        assert!(is_unsupported("a.com##+js(set-constant, x)"));
        assert!(is_unsupported("a.com#@#+js(set-constant, x, 1)"));
        assert!(is_unsupported("a.com#%#window.x = 1"));
        assert!(is_unsupported(
            "a.com#%#//scriptlet('set-constant', 'x', '1'"
        ));
    }

    #[test]
    fn redirect() {
        let r = network("||npttech.com/advertising.js$redirect=noop-js");
        assert_eq!(r.redirect.as_deref(), Some("noop-js"));
        assert!(is_unsupported("@@||a.com^$redirect=noop.txt"));
    }

    #[test]
    fn closed_world_options() {
        assert!(is_unsupported("||a.com^$csp=script-src 'none'"));
        assert!(is_unsupported("||a.com^$removeparam=x"));
        assert!(is_unsupported("||a.com^$stylesheet"));
        assert!(is_unsupported("/ads[0-9]+/"));
        assert!(is_unsupported("example.com#?#div:-abp-has(.ad)"));
        assert!(is_unsupported("example.com##div:has-text(Ad)"));
        assert!(is_unsupported("example.com##^script"));
        assert!(is_unsupported("a.com##"));
        assert!(!is_unsupported("$domain=a.com,script"));
        assert!(is_unsupported("$script"));
    }

    #[test]
    fn comments() {
        assert_eq!(parse_rule(""), ParsedRule::Comment);
        assert_eq!(parse_rule("   "), ParsedRule::Comment);
        assert_eq!(parse_rule("! Title: x"), ParsedRule::Comment);
        assert_eq!(parse_rule("[Adblock Plus 2.0]"), ParsedRule::Comment);
    }

    #[test]
    fn render_round_trip() {
        for line in [
            "||thirdparty.com^$third-party",
            "@@||a.com/x^$script,xhr,domain=b.com|~c.b.com",
            "|https://a.com/ads|$image,redirect=noop.txt",
            "a.com,~b.a.com##.x > .y",
            "#@#.ad",
            "a.com##+js(set-constant, k, a\\,b)",
            "$domain=a.com",
        ] {
            let parsed = parse_rule(line);
            assert!(!matches!(parsed, ParsedRule::Unsupported(_)), "{line}");
            assert_eq!(parse_rule(&parsed.to_string()), parsed, "{line}");
        }
    }

    #[test]
    fn lexical_party_modifier() {
        assert!(has_party_modifier("||a.com^$third-party"));
        assert!(has_party_modifier("||a.com^$3p,csp=x"));
        assert!(!has_party_modifier("||a.com^$script"));
        assert!(!has_party_modifier("a.com##.third-party"));
    }
}
