//! The test catalog: pages, rule lists, and expected matrices stored as
//! data files, indexed by `manifest.json`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filterlist::{parse_list, parse_resources, RuleSet};

use super::matrix::{Capability, ExpectedMatrix};
use super::page::PageSpec;
use super::profile::{parse_profiles, ToolProfile};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    /// Failing lets a page slip past the blocker.
    Evasion,
    /// Failing is a behavioral difference, not a bypass.
    Discrepancy,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    #[serde(default = "default_variant")]
    pub variant: String,
    pub column: String,
    pub severity: Severity,
    pub capability: Capability,
    pub page: String,
    pub rules: String,
    pub expected: String,
}

fn default_variant() -> String {
    "default".into()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub columns: Vec<String>,
    pub resources: String,
    pub profiles: String,
    pub tests: Vec<ManifestEntry>,
}

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub meta: ManifestEntry,
    pub page: PageSpec,
    pub rules_text: String,
    pub expected: ExpectedMatrix,
}

#[derive(Clone, Debug)]
pub struct Catalog {
    pub columns: Vec<String>,
    pub entries: Vec<CatalogEntry>,
    pub resources: BTreeMap<String, String>,
    pub profiles: Vec<ToolProfile>,
}

macro_rules! builtin_files {
    ($($path:literal),* $(,)?) => {
        &[$(($path, include_str!(concat!("../../catalog/", $path)))),*]
    };
}

static BUILTIN: &[(&str, &str)] = builtin_files!(
    "manifest.json",
    "resources.json",
    "profiles.json",
    "pages/block-scripts.json",
    "pages/intermediate.json",
    "pages/ajax-ads.json",
    "pages/ajax-replace.json",
    "pages/scriptlet.json",
    "pages/cosmetic.json",
    "rules/empty.txt",
    "rules/rq1.txt",
    "rules/rq1a.txt",
    "rules/rq1b.txt",
    "rules/rq1-intermediate.txt",
    "rules/rq1-xhr.txt",
    "rules/rq2-thirdparty.txt",
    "rules/rq2-firstparty.txt",
    "rules/rq3.txt",
    "rules/rq4-thirdparty.txt",
    "rules/rq4-firstparty.txt",
    "expected/rq1.json",
    "expected/rq1-baseline.json",
    "expected/rq1a.json",
    "expected/rq1b.json",
    "expected/rq1-intermediate.json",
    "expected/rq1-xhr.json",
    "expected/rq2-thirdparty.json",
    "expected/rq2-firstparty.json",
    "expected/rq3.json",
    "expected/rq4-thirdparty.json",
    "expected/rq4-firstparty.json",
    "expected/rq4-baseline.json",
    "expected/nested-accounting.json",
);

/// The catalog compiled into the library.
pub fn builtin_catalog() -> Catalog {
    Catalog::load_with(|path| {
        BUILTIN
            .iter()
            .find(|(p, _)| *p == path)
            .map(|(_, text)| text.to_string())
            .ok_or_else(|| Error::Schema(format!("builtin catalog has no file {path:?}")))
    })
    .expect("builtin catalog is valid")
}

impl Catalog {
    /// Loads a catalog directory laid out like the builtin one.
    pub fn load_dir(dir: &Path) -> Result<Catalog> {
        Catalog::load_with(|rel| {
            let path = dir.join(rel);
            std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))
        })
    }

    pub fn load_with(read: impl Fn(&str) -> Result<String>) -> Result<Catalog> {
        let manifest: Manifest = serde_json::from_str(&read("manifest.json")?)
            .map_err(|e| Error::json("manifest.json", e))?;
        let resources = parse_resources(&read(&manifest.resources)?)?;
        let profiles = parse_profiles(&read(&manifest.profiles)?)?;
        let mut entries = Vec::new();
        let mut pages: BTreeMap<String, PageSpec> = BTreeMap::new();
        let mut keys = BTreeSet::new();
        let mut capability_of: BTreeMap<&str, (Capability, &str)> = BTreeMap::new();
        for meta in &manifest.tests {
            if !keys.insert((meta.id.as_str(), meta.variant.as_str())) {
                return Err(Error::Schema(format!(
                    "duplicate catalog entry {}/{}",
                    meta.id, meta.variant
                )));
            }
            if !manifest.columns.contains(&meta.column) {
                return Err(Error::Schema(format!(
                    "{}: unknown column {:?}",
                    meta.id, meta.column
                )));
            }
            match capability_of.get(meta.id.as_str()) {
                Some(&(c, col)) if c != meta.capability || col != meta.column => {
                    return Err(Error::Schema(format!(
                        "{}: variants must share capability and column",
                        meta.id
                    )));
                }
                _ => {
                    capability_of.insert(&meta.id, (meta.capability, &meta.column));
                }
            }
            let page = match pages.get(&meta.page) {
                Some(p) => p.clone(),
                None => {
                    let p = PageSpec::from_json(&read(&meta.page)?)
                        .map_err(|e| Error::Schema(format!("{}: {e}", meta.page)))?;
                    pages.insert(meta.page.clone(), p.clone());
                    p
                }
            };
            let rules_text = read(&meta.rules)?;
            let (_, report) = parse_list(&rules_text);
            if let Some(u) = report.unsupported.first() {
                return Err(Error::Schema(format!(
                    "{} line {}: {}",
                    meta.rules, u.line, u.reason
                )));
            }
            let expected = ExpectedMatrix::from_json(&read(&meta.expected)?)
                .map_err(|e| Error::Schema(format!("{}: {e}", meta.expected)))?;
            if expected.test_id != meta.id {
                return Err(Error::Schema(format!(
                    "{}: test_id {:?} does not match manifest id {:?}",
                    meta.expected, expected.test_id, meta.id
                )));
            }
            expected.validate(&page)?;
            entries.push(CatalogEntry {
                meta: meta.clone(),
                page,
                rules_text,
                expected,
            });
        }
        let ids: BTreeSet<&str> = manifest.tests.iter().map(|t| t.id.as_str()).collect();
        for p in &profiles {
            if let Some(bad) = p
                .expected_failures
                .iter()
                .find(|f| !ids.contains(f.as_str()))
            {
                return Err(Error::Schema(format!(
                    "profile {:?} expects unknown test {bad:?}",
                    p.name
                )));
            }
            let cols = p
                .verdicts
                .keys()
                .chain(p.marks.keys())
                .chain(p.inconsistent.keys());
            for c in cols {
                if !manifest.columns.contains(c) {
                    return Err(Error::Schema(format!(
                        "profile {:?} names unknown column {c:?}",
                        p.name
                    )));
                }
            }
        }
        Ok(Catalog {
            columns: manifest.columns,
            entries,
            resources,
            profiles,
        })
    }

    /// Distinct test ids in manifest order.
    pub fn test_ids(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        self.entries
            .iter()
            .map(|e| e.meta.id.as_str())
            .filter(|id| seen.insert(*id))
            .collect()
    }

    pub fn variants<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a CatalogEntry> + 'a {
        self.entries.iter().filter(move |e| e.meta.id == id)
    }

    pub fn entry(&self, id: &str, variant: &str) -> Option<&CatalogEntry> {
        self.entries
            .iter()
            .find(|e| e.meta.id == id && e.meta.variant == variant)
    }

    pub fn rules_for(&self, text: &str) -> RuleSet {
        parse_list(text).0.with_resources(self.resources.clone())
    }

    pub fn profile(&self, name: &str) -> Option<&ToolProfile> {
        self.profiles
            .iter()
            .find(|p| p.name.eq_ignore_ascii_case(name))
    }

    /// Profiles whose name, tool, or platform contains `filter`
    /// (case-insensitive).
    pub fn filter_profiles(&self, filter: &str) -> Vec<&ToolProfile> {
        let f = filter.to_ascii_lowercase();
        self.profiles
            .iter()
            .filter(|p| {
                [&p.name, &p.tool, &p.platform]
                    .iter()
                    .any(|s| s.to_ascii_lowercase().contains(&f))
            })
            .collect()
    }
}
