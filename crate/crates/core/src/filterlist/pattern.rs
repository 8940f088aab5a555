//! URL patterns: `||` host anchor, `|` edge anchors, `^` separator, `*` wildcard.

use std::fmt;
use std::ops::Range;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Anchor {
    None,
    /// `|` at the start: the match begins at the first character of the URL.
    Url,
    /// `||`: the match begins at the host or at any label boundary in it.
    Host,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Token {
    Literal(String),
    Wildcard,
    Separator,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Pattern {
    start: Anchor,
    end_anchor: bool,
    tokens: Vec<Token>,
}

/// `^` matches any character outside `[A-Za-z0-9_.%-]`, or the end of input.
pub fn is_separator(c: char) -> bool {
    !(c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '%' | '-'))
}

impl Pattern {
    /// Parses pattern text. Matching is ASCII case-insensitive, so the
    /// pattern is stored lowercased.
    pub fn parse(text: &str) -> Pattern {
        let text = text.to_ascii_lowercase();
        let (start, mut body) = if let Some(rest) = text.strip_prefix("||") {
            (Anchor::Host, rest)
        } else if let Some(rest) = text.strip_prefix('|') {
            (Anchor::Url, rest)
        } else {
            (Anchor::None, text.as_str())
        };
        let mut end_anchor = false;
        if let Some(rest) = body.strip_suffix('|') {
            end_anchor = true;
            body = rest;
        }
        let mut tokens = Vec::new();
        let mut lit = String::new();
        for c in body.chars() {
            let tok = match c {
                '*' => Token::Wildcard,
                '^' => Token::Separator,
                _ => {
                    lit.push(c);
                    continue;
                }
            };
            if !lit.is_empty() {
                tokens.push(Token::Literal(std::mem::take(&mut lit)));
            }
            if tok == Token::Wildcard && tokens.last() == Some(&Token::Wildcard) {
                continue;
            }
            tokens.push(tok);
        }
        if !lit.is_empty() {
            tokens.push(Token::Literal(lit));
        }
        Pattern {
            start,
            end_anchor,
            tokens,
        }
    }

    pub fn anchor(&self) -> Anchor {
        self.start
    }

    pub fn is_end_anchored(&self) -> bool {
        self.end_anchor
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty() && self.start == Anchor::None && !self.end_anchor
    }

    /// The exact hostname a `||` pattern is pinned to, when the pattern text
    /// makes the host boundary explicit (`||host^`, `||host/`, `||host:`).
    pub fn anchor_host(&self) -> Option<&str> {
        if self.start != Anchor::Host {
            return None;
        }
        let Some(Token::Literal(lit)) = self.tokens.first() else {
            return None;
        };
        let host = match lit.find(['/', ':']) {
            Some(i) => &lit[..i],
            None if self.tokens.get(1) == Some(&Token::Separator) => lit.as_str(),
            None => return None,
        };
        if host.is_empty() || host.starts_with('.') {
            None
        } else {
            Some(host)
        }
    }

    /// Alphanumeric runs that any matching URL must contain as whole runs:
    /// runs bounded on both sides by a non-alphanumeric literal character,
    /// a `^`, or an anchor. Wildcards and unanchored edges do not bound.
    pub fn whole_runs(&self) -> Vec<&str> {
        let mut out = Vec::new();
        let last = self.tokens.len().saturating_sub(1);
        for (k, t) in self.tokens.iter().enumerate() {
            let Token::Literal(lit) = t else { continue };
            let left_edge = if k == 0 {
                self.start != Anchor::None
            } else {
                self.tokens[k - 1] == Token::Separator
            };
            let right_edge = if k == last {
                self.end_anchor
            } else {
                self.tokens[k + 1] == Token::Separator
            };
            for (a, b) in alnum_runs(lit) {
                if (a > 0 || left_edge) && (b < lit.len() || right_edge) {
                    out.push(&lit[a..b]);
                }
            }
        }
        out
    }

    /// Matches against a URL that has already been ASCII-lowercased.
    /// `host` is the byte range of the URL's host.
    pub fn matches(&self, url: &str, host: Range<usize>) -> bool {
        match self.start {
            Anchor::Url => self.match_from(url, 0),
            Anchor::Host => {
                let bytes = url.as_bytes();
                (host.start..host.end)
                    .filter(|&i| i == host.start || bytes[i - 1] == b'.')
                    .any(|i| self.match_from(url, i))
            }
            Anchor::None => (0..=url.len())
                .filter(|&i| url.is_char_boundary(i))
                .any(|i| self.match_from(url, i)),
        }
    }

    fn match_from(&self, url: &str, pos: usize) -> bool {
        match_tokens(&self.tokens, url, pos, self.end_anchor)
    }
}

/// Byte ranges of the maximal ASCII-alphanumeric runs in `s`.
pub(crate) fn alnum_runs(s: &str) -> impl Iterator<Item = (usize, usize)> + '_ {
    let bytes = s.as_bytes();
    let mut i = 0;
    std::iter::from_fn(move || {
        while i < bytes.len() && !bytes[i].is_ascii_alphanumeric() {
            i += 1;
        }
        if i == bytes.len() {
            return None;
        }
        let start = i;
        while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
            i += 1;
        }
        Some((start, i))
    })
}

fn match_tokens(tokens: &[Token], s: &str, pos: usize, end_anchor: bool) -> bool {
    let Some((first, rest)) = tokens.split_first() else {
        return !end_anchor || pos == s.len();
    };
    match first {
        Token::Literal(lit) => {
            s[pos..].starts_with(lit.as_str()) && match_tokens(rest, s, pos + lit.len(), end_anchor)
        }
        Token::Separator => match s[pos..].chars().next() {
            None => match_tokens(rest, s, pos, end_anchor),
            Some(c) => is_separator(c) && match_tokens(rest, s, pos + c.len_utf8(), end_anchor),
        },
        Token::Wildcard => (pos..=s.len())
            .filter(|&i| s.is_char_boundary(i))
            .any(|i| match_tokens(rest, s, i, end_anchor)),
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.start {
            Anchor::None => {}
            Anchor::Url => f.write_str("|")?,
            Anchor::Host => f.write_str("||")?,
        }
        for t in &self.tokens {
            match t {
                Token::Literal(l) => f.write_str(l)?,
                Token::Wildcard => f.write_str("*")?,
                Token::Separator => f.write_str("^")?,
            }
        }
        if self.end_anchor {
            f.write_str("|")?;
        }
        Ok(())
    }
}
