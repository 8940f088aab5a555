//! Origins, frame source classification, and URL origin extraction.
//!
//! An origin is either a `(scheme, host, port)` tuple or an opaque marker that
//! is equal only to itself. Local frames (about:blank and friends) have no
//! host of their own, so their origin comes from the document that created
//! them; see [`crate::frame`] for the tree-level resolution.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::FrameId;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Origin {
    Tuple {
        scheme: String,
        host: String,
        /// Effective port. `None` only for schemes without a known default.
        port: Option<u16>,
    },
    Opaque(OpaqueOrigin),
}

/// Opaque origins are keyed by the tree and frame that minted them, so
/// re-resolving the same tree reproduces the same values while two distinct
/// frames never share one.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OpaqueOrigin {
    pub scope: u64,
    pub frame: FrameId,
    pub label: String,
}

impl Origin {
    pub fn tuple(scheme: &str, host: &str, port: Option<u16>) -> Origin {
        let scheme = scheme.to_ascii_lowercase();
        let port = port.or_else(|| default_port(&scheme));
        Origin::Tuple {
            scheme,
            host: host.to_ascii_lowercase(),
            port,
        }
    }

    pub fn opaque(scope: u64, frame: FrameId, label: impl Into<String>) -> Origin {
        Origin::Opaque(OpaqueOrigin {
            scope,
            frame,
            label: label.into(),
        })
    }

    pub fn is_opaque(&self) -> bool {
        matches!(self, Origin::Opaque(_))
    }

    pub fn scheme(&self) -> Option<&str> {
        match self {
            Origin::Tuple { scheme, .. } => Some(scheme),
            Origin::Opaque(_) => None,
        }
    }

    pub fn host(&self) -> Option<&str> {
        match self {
            Origin::Tuple { host, .. } => Some(host),
            Origin::Opaque(_) => None,
        }
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Tuple { scheme, host, port } => {
                write!(f, "{scheme}://{host}")?;
                match port {
                    Some(p) if Some(*p) != default_port(scheme) => write!(f, ":{p}"),
                    _ => Ok(()),
                }
            }
            Origin::Opaque(o) => write!(f, "opaque({})", o.label),
        }
    }
}

pub fn default_port(scheme: &str) -> Option<u16> {
    match scheme {
        "http" | "ws" => Some(80),
        "https" | "wss" => Some(443),
        "ftp" => Some(21),
        _ => None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    Url,
    AboutBlank,
    AboutSrcdoc,
    AboutOther,
    Blob,
    Data,
    FileUri,
}

impl SourceKind {
    /// Kinds that make a frame a local frame. `file:` and real URLs do not.
    pub fn is_local(self) -> bool {
        matches!(
            self,
            SourceKind::AboutBlank
                | SourceKind::AboutSrcdoc
                | SourceKind::AboutOther
                | SourceKind::Blob
                | SourceKind::Data
        )
    }

    /// Kinds that take their creator's origin under the standard rules.
    pub fn inherits_origin(self) -> bool {
        matches!(
            self,
            SourceKind::AboutBlank | SourceKind::AboutSrcdoc | SourceKind::Blob
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SourceKind::Url => "url",
            SourceKind::AboutBlank => "about-blank",
            SourceKind::AboutSrcdoc => "about-srcdoc",
            SourceKind::AboutOther => "about-other",
            SourceKind::Blob => "blob",
            SourceKind::Data => "data",
            SourceKind::FileUri => "file-uri",
        }
    }
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrameSource {
    pub raw: String,
    pub kind: SourceKind,
}

impl FrameSource {
    pub fn new(raw: impl Into<String>) -> FrameSource {
        classify_source(&raw.into())
    }

    pub fn is_local(&self) -> bool {
        self.kind.is_local()
    }
}

/// Classifies a frame's `src` by its scheme prefix. Total; never fails.
///
/// An empty (or all-whitespace) `src` loads about:blank.
pub fn classify_source(raw: &str) -> FrameSource {
    let norm = raw.trim().to_ascii_lowercase();
    let kind = if norm.is_empty() || norm == "about:blank" {
        SourceKind::AboutBlank
    } else if norm == "about:srcdoc" {
        SourceKind::AboutSrcdoc
    } else if norm.starts_with("about:") {
        SourceKind::AboutOther
    } else if norm.starts_with("blob:") {
        SourceKind::Blob
    } else if norm.starts_with("data:") {
        SourceKind::Data
    } else if norm.starts_with("file:") {
        SourceKind::FileUri
    } else {
        SourceKind::Url
    };
    FrameSource {
        raw: raw.to_string(),
        kind,
    }
}

/// The pieces of a `scheme://host[:port]/...` URL needed for origins and
/// host-anchored pattern matching.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UrlParts {
    pub scheme: String,
    pub host: String,
    pub explicit_port: Option<u16>,
    /// Byte range of the host inside the input string.
    pub host_range: Range<usize>,
}

impl UrlParts {
    pub fn parse(url: &str) -> Result<UrlParts> {
        let malformed = || Error::MalformedUrl {
            url: url.to_string(),
            frame: None,
        };
        let sep = url.find("://").ok_or_else(malformed)?;
        let scheme = &url[..sep];
        let mut chars = scheme.chars();
        let first_ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic());
        if !first_ok || !chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.')) {
            return Err(malformed());
        }

        let auth_start = sep + 3;
        let rest = &url[auth_start..];
        let auth_len = rest.find(['/', '?', '#']).unwrap_or(rest.len());
        let authority = &rest[..auth_len];
        let host_start = authority.rfind('@').map_or(0, |i| i + 1);
        let hostport = &authority[host_start..];

        let (host, port_str) = if hostport.starts_with('[') {
            let close = hostport.find(']').ok_or_else(malformed)?;
            let tail = &hostport[close + 1..];
            match tail.strip_prefix(':') {
                Some(p) => (&hostport[..=close], Some(p)),
                None if tail.is_empty() => (&hostport[..=close], None),
                None => return Err(malformed()),
            }
        } else {
            match hostport.rsplit_once(':') {
                Some((h, p)) => (h, Some(p)),
                None => (hostport, None),
            }
        };
        if host.is_empty() || host.chars().any(|c| c.is_whitespace() || c.is_control()) {
            return Err(malformed());
        }
        let explicit_port = match port_str {
            None | Some("") => None,
            Some(p) => {
                if !p.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(malformed());
                }
                match p.parse::<u32>() {
                    Ok(n) if (1..=65535).contains(&n) => Some(n as u16),
                    _ => return Err(malformed()),
                }
            }
        };
        let start = auth_start + host_start;
        Ok(UrlParts {
            scheme: scheme.to_ascii_lowercase(),
            host: host.to_ascii_lowercase(),
            explicit_port,
            host_range: start..start + host.len(),
        })
    }

    pub fn origin(&self) -> Origin {
        Origin::tuple(&self.scheme, &self.host, self.explicit_port)
    }
}

/// Tuple origin of a hierarchical URL. Host-less URIs such as about:blank
/// are rejected; their origin depends on the frame tree.
pub fn origin_of_url(url: &str) -> Result<Origin> {
    UrlParts::parse(url).map(|p| p.origin())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_examples() {
        assert_eq!(classify_source("about:blank").kind, SourceKind::AboutBlank);
        assert_eq!(
            classify_source("https://thirdparty.com").kind,
            SourceKind::Url
        );
        assert_eq!(
            classify_source("about:srcdoc").kind,
            SourceKind::AboutSrcdoc
        );
        assert_eq!(classify_source("").kind, SourceKind::AboutBlank);
        assert_eq!(classify_source("  ").kind, SourceKind::AboutBlank);
    }

    #[test]
    fn classify_prefix_table() {
        assert_eq!(
            classify_source(" ABOUT:Blank ").kind,
            SourceKind::AboutBlank
        );
        assert_eq!(
            classify_source("about:blank#x").kind,
            SourceKind::AboutOther
        );
        assert_eq!(classify_source("about:config").kind, SourceKind::AboutOther);
        assert_eq!(
            classify_source("Blob:https://a.com/1").kind,
            SourceKind::Blob
        );
        assert_eq!(classify_source("data:text/html,hi").kind, SourceKind::Data);
        assert_eq!(
            classify_source("file:///etc/hosts").kind,
            SourceKind::FileUri
        );
        assert_eq!(classify_source("javascript:void(0)").kind, SourceKind::Url);
    }

    #[test]
    fn local_kinds() {
        assert!(SourceKind::Blob.is_local());
        assert!(SourceKind::Data.is_local());
        assert!(!SourceKind::FileUri.is_local());
        assert!(!SourceKind::Url.is_local());
    }

    #[test]
    fn url_origins() {
        assert_eq!(
            origin_of_url("https://firstparty.com/a.js").unwrap(),
            Origin::tuple("https", "firstparty.com", Some(443))
        );
        assert_eq!(
            origin_of_url("http://thirdparty.com:8080/x").unwrap(),
            Origin::tuple("http", "thirdparty.com", Some(8080))
        );
        assert!(matches!(
            origin_of_url("about:blank"),
            Err(Error::MalformedUrl { .. })
        ));
    }

    #[test]
    fn url_origin_normalization() {
        let a = origin_of_url("HTTPS://User:pw@FirstParty.COM:443/x?y").unwrap();
        assert_eq!(a, Origin::tuple("https", "firstparty.com", None));
        assert_eq!(a.to_string(), "https://firstparty.com");
        let v6 = origin_of_url("http://[::1]:8000/").unwrap();
        assert_eq!(v6.host(), Some("[::1]"));
        assert!(origin_of_url("https://:443/").is_err());
        assert!(origin_of_url("https://a.com:99999/").is_err());
        assert!(origin_of_url("https://a.com:8x/").is_err());
        assert!(origin_of_url("1http://a.com/").is_err());
    }

    #[test]
    fn host_range_points_at_host() {
        let url = "https://u@cdn.example.com:8443/path";
        let parts = UrlParts::parse(url).unwrap();
        assert_eq!(&url[parts.host_range.clone()], "cdn.example.com");
    }

    #[test]
    fn opaque_never_equals_tuple() {
        let o = Origin::opaque(1, FrameId(2), "about:blank");
        assert_ne!(o, Origin::tuple("https", "a.com", None));
        assert_eq!(o, o.clone());
        assert_ne!(o, Origin::opaque(1, FrameId(3), "about:blank"));
    }
}
