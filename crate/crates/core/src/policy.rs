//! Attribution policies: how a blocker resolves local-frame origins and
//! decides party-ness. One preset follows the HTML standard; the others
//! reproduce the ways real blockers get local frames wrong.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyName {
    /// Local frames inherit their creator's origin; party-ness is judged
    /// against the frame that issued the request.
    SpecCorrect,
    /// Rules are not applied inside local frames at all.
    SkipLocalFrames,
    /// Every local frame is attributed to the top-level page.
    FirstPartyFallback,
    /// Local frames get an opaque origin named after their own URI.
    LiteralSelf,
    /// Standard origins, but every request is compared to the top-level page.
    TopLevelPartyness,
    /// Standard decisions; blocks are only reported when the requesting
    /// frame's direct parent is not itself a local frame.
    DirectParentOnly,
}

impl PolicyName {
    pub const ALL: [PolicyName; 6] = [
        PolicyName::SpecCorrect,
        PolicyName::SkipLocalFrames,
        PolicyName::FirstPartyFallback,
        PolicyName::LiteralSelf,
        PolicyName::TopLevelPartyness,
        PolicyName::DirectParentOnly,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyName::SpecCorrect => "spec-correct",
            PolicyName::SkipLocalFrames => "skip-local-frames",
            PolicyName::FirstPartyFallback => "first-party-fallback",
            PolicyName::LiteralSelf => "literal-self",
            PolicyName::TopLevelPartyness => "top-level-partyness",
            PolicyName::DirectParentOnly => "direct-parent-only",
        }
    }
}

impl fmt::Display for PolicyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct AttributionPolicy {
    name: PolicyName,
    cosmetics_in_local_frames: bool,
    scriptlets_in_local_frames: bool,
    skip_requests: bool,
}

impl AttributionPolicy {
    pub const fn spec_correct() -> Self {
        Self::plain(PolicyName::SpecCorrect)
    }

    const fn plain(name: PolicyName) -> Self {
        AttributionPolicy {
            name,
            cosmetics_in_local_frames: true,
            scriptlets_in_local_frames: true,
            skip_requests: false,
        }
    }

    /// The preset for `name`. `SkipLocalFrames` drops cosmetics and
    /// scriptlets in local frames but still evaluates requests.
    pub const fn new(name: PolicyName) -> Self {
        match name {
            PolicyName::SkipLocalFrames => AttributionPolicy {
                name,
                cosmetics_in_local_frames: false,
                scriptlets_in_local_frames: false,
                skip_requests: false,
            },
            _ => Self::plain(name),
        }
    }

    /// `SkipLocalFrames` that also lets every request from a local frame
    /// through unevaluated.
    pub const fn skip_local_frames_and_requests() -> Self {
        AttributionPolicy {
            skip_requests: true,
            ..Self::new(PolicyName::SkipLocalFrames)
        }
    }

    /// Overrides the per-capability local-frame switches. `SpecCorrect`
    /// admits no skips.
    pub fn with_local_frame_switches(
        self,
        cosmetics: bool,
        scriptlets: bool,
    ) -> Result<Self, Error> {
        if self.name == PolicyName::SpecCorrect && !(cosmetics && scriptlets) {
            return Err(Error::Schema(
                "spec-correct policy cannot skip local frames".into(),
            ));
        }
        Ok(AttributionPolicy {
            cosmetics_in_local_frames: cosmetics,
            scriptlets_in_local_frames: scriptlets,
            ..self
        })
    }

    pub fn name(&self) -> PolicyName {
        self.name
    }

    pub fn apply_cosmetics_in_local_frames(&self) -> bool {
        self.cosmetics_in_local_frames
    }

    pub fn apply_scriptlets_in_local_frames(&self) -> bool {
        self.scriptlets_in_local_frames
    }

    pub fn skip_requests(&self) -> bool {
        self.skip_requests
    }
}

impl Default for AttributionPolicy {
    fn default() -> Self {
        Self::spec_correct()
    }
}

impl FromStr for AttributionPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let key = s.trim().to_ascii_lowercase();
        if key == "skip-local-frames-and-requests" {
            return Ok(Self::skip_local_frames_and_requests());
        }
        PolicyName::ALL
            .into_iter()
            .find(|n| n.as_str() == key)
            .map(Self::new)
            .ok_or_else(|| Error::UnknownPolicy(s.to_string()))
    }
}

impl TryFrom<String> for AttributionPolicy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self, Error> {
        s.parse()
    }
}

impl From<AttributionPolicy> for String {
    fn from(p: AttributionPolicy) -> String {
        p.to_string()
    }
}

impl fmt::Display for AttributionPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self == Self::skip_local_frames_and_requests() {
            return f.write_str("skip-local-frames-and-requests");
        }
        f.write_str(self.name.as_str())?;
        if *self != Self::new(self.name) {
            write!(
                f,
                "[cosmetics={},scriptlets={},requests={}]",
                self.cosmetics_in_local_frames,
                self.scriptlets_in_local_frames,
                !self.skip_requests
            )?;
        }
        Ok(())
    }
}
