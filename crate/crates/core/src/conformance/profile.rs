use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{AttributionPolicy, PolicyName};

use super::matrix::{Capability, CapabilityPolicies};
use super::spoof::SpoofMap;

/// How one tool on one platform behaves, per capability, and which catalog
/// tests it is known to fail.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolProfile {
    pub name: String,
    pub tool: String,
    pub platform: String,
    /// Capabilities missing here are not offered by the tool.
    pub policies: BTreeMap<Capability, AttributionPolicy>,
    #[serde(default)]
    pub expected_failures: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spoof: Option<SpoofMap>,
    /// Columns the tool handles inconsistently, with the reason.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub inconsistent: BTreeMap<String, String>,
    /// Footnote marks appended to grid cells.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub marks: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    /// The expected verdict per column, compared against the computed grid.
    #[serde(default)]
    pub verdicts: BTreeMap<String, String>,
    #[serde(default)]
    pub reference: bool,
}

impl ToolProfile {
    pub fn capability_policies(&self) -> CapabilityPolicies {
        let mut out = CapabilityPolicies::default();
        for (c, p) in &self.policies {
            out.set(*c, Some(*p));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.reference {
            let all_correct = self
                .policies
                .values()
                .all(|p| *p == AttributionPolicy::spec_correct());
            if !all_correct || !self.expected_failures.is_empty() {
                return Err(Error::Schema(format!(
                    "reference profile {:?} must use spec-correct everywhere and expect no failures",
                    self.name
                )));
            }
            if self.policies.len() != Capability::ALL.len() {
                return Err(Error::Schema(format!(
                    "reference profile {:?} must declare every capability",
                    self.name
                )));
            }
        }
        if let Some(s) = &self.spoof {
            s.validate()?;
        }
        Ok(())
    }

    /// A profile with every capability under the standard policy.
    pub fn spec_correct(name: &str) -> ToolProfile {
        ToolProfile {
            name: name.to_string(),
            tool: name.to_string(),
            platform: "-".into(),
            policies: Capability::ALL
                .into_iter()
                .map(|c| (c, AttributionPolicy::new(PolicyName::SpecCorrect)))
                .collect(),
            expected_failures: BTreeSet::new(),
            spoof: None,
            inconsistent: BTreeMap::new(),
            marks: BTreeMap::new(),
            notes: Vec::new(),
            verdicts: BTreeMap::new(),
            reference: true,
        }
    }
}

pub fn parse_profiles(text: &str) -> Result<Vec<ToolProfile>> {
    let profiles: Vec<ToolProfile> =
        serde_json::from_str(text).map_err(|e| Error::json("tool profiles", e))?;
    let mut names = BTreeSet::new();
    for p in &profiles {
        p.validate()?;
        if !names.insert(p.name.to_ascii_lowercase()) {
            return Err(Error::Schema(format!("duplicate profile {:?}", p.name)));
        }
    }
    Ok(profiles)
}
