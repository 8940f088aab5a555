//! Conformance catalog: test pages with expected behavior, run against
//! attribution policies and tool profiles.

mod catalog;
mod matrix;
mod page;
mod profile;
mod report;
mod spoof;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use catalog::{builtin_catalog, Catalog, CatalogEntry, Manifest, ManifestEntry, Severity};
pub use matrix::{
    compare, run_page, selector_matches, ActualCell, ActualMatrix, Capability, CapabilityPolicies,
    ExpectedCell, ExpectedMatrix, Mismatch, ProbeKind,
};
pub use page::{ElementSpec, FrameSpec, LoweredPage, PageSpec, RequestSpec};
pub use profile::{parse_profiles, ToolProfile};
pub use report::render_table;
pub use spoof::SpoofMap;

use crate::engine::Engine;
use crate::error::Result;
use crate::filterlist::RuleSet;
use crate::policy::AttributionPolicy;

/// Runs every probe on `page` with one policy for all capabilities.
pub fn run_test(
    page: &PageSpec,
    rules: &RuleSet,
    policy: AttributionPolicy,
) -> Result<ActualMatrix> {
    run_page(
        &page.name,
        page,
        rules,
        &CapabilityPolicies::uniform(policy),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerSummary {
    pub counted: usize,
    pub actual: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantOutcome {
    pub variant: String,
    pub mismatches: Vec<Mismatch>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ledger: Option<LedgerSummary>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub id: String,
    pub column: String,
    pub severity: Severity,
    pub status: Status,
    pub variants: Vec<VariantOutcome>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileOutcome {
    pub name: String,
    pub tool: String,
    pub platform: String,
    pub reference: bool,
    pub tests: Vec<TestOutcome>,
    pub failed: BTreeSet<String>,
    pub expected_failures: BTreeSet<String>,
    /// Failures the profile was not expected to show.
    pub over_reproduced: BTreeSet<String>,
    /// Expected failures that did not happen.
    pub under_reproduced: BTreeSet<String>,
    pub grid: Vec<(String, String)>,
    pub verdicts: Vec<(String, String)>,
    pub grid_matches: bool,
    pub notes: Vec<String>,
    pub ok: bool,
}

impl ProfileOutcome {
    pub fn test(&self, id: &str) -> Option<&TestOutcome> {
        self.tests.iter().find(|t| t.id == id)
    }

    pub fn grid_cell(&self, column: &str) -> Option<&str> {
        self.grid
            .iter()
            .find(|(c, _)| c == column)
            .map(|(_, v)| v.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub profile: String,
    pub column: String,
    pub tests: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConformanceReport {
    pub columns: Vec<String>,
    pub profiles: Vec<ProfileOutcome>,
    pub coverage: Vec<CoverageRow>,
    pub ok: bool,
}

impl ConformanceReport {
    pub fn profile(&self, name: &str) -> Option<&ProfileOutcome> {
        self.profiles
            .iter()
            .find(|p| p.name.eq_ignore_ascii_case(name))
    }
}

/// Runs one catalog entry under a profile's policies and spoofing.
pub fn run_entry(
    catalog: &Catalog,
    entry: &CatalogEntry,
    policies: &CapabilityPolicies,
    spoof: Option<&SpoofMap>,
) -> Result<VariantOutcome> {
    let (page, rules_text, expected) = match spoof.filter(|s| !s.is_identity()) {
        Some(s) => (
            s.rewrite_page(&entry.page),
            s.rewrite_rules(&entry.rules_text),
            s.rewrite_expected(&entry.expected),
        ),
        None => (
            entry.page.clone(),
            entry.rules_text.clone(),
            entry.expected.clone(),
        ),
    };
    let rules = catalog.rules_for(&rules_text);
    let actual = run_page(&entry.meta.id, &page, &rules, policies)?;
    let ledger = match (entry.meta.capability, policies.accounting) {
        (Capability::Accounting, Some(p)) => {
            let lowered = page.lower()?;
            let l = Engine::new(&lowered.tree, &rules, p)?.account_blocks(&lowered.events())?;
            Some(LedgerSummary {
                counted: l.counted_blocks,
                actual: l.actual_blocks,
            })
        }
        _ => None,
    };
    Ok(VariantOutcome {
        variant: entry.meta.variant.clone(),
        mismatches: compare(&expected, &actual),
        ledger,
    })
}

pub fn run_profile(catalog: &Catalog, profile: &ToolProfile) -> Result<ProfileOutcome> {
    let policies = profile.capability_policies();
    let mut tests = Vec::new();
    for id in catalog.test_ids() {
        let variants: Vec<&CatalogEntry> = catalog.variants(id).collect();
        let meta = &variants[0].meta;
        let mut outcome = TestOutcome {
            id: id.to_string(),
            column: meta.column.clone(),
            severity: meta.severity,
            status: Status::NotApplicable,
            variants: Vec::new(),
        };
        if policies.get(meta.capability).is_some() {
            for v in variants {
                outcome
                    .variants
                    .push(run_entry(catalog, v, &policies, profile.spoof.as_ref())?);
            }
            let failed = outcome.variants.iter().any(|v| !v.mismatches.is_empty());
            outcome.status = if failed { Status::Fail } else { Status::Pass };
        }
        tests.push(outcome);
    }
    let failed: BTreeSet<String> = tests
        .iter()
        .filter(|t| t.status == Status::Fail)
        .map(|t| t.id.clone())
        .collect();
    let over: BTreeSet<String> = failed
        .difference(&profile.expected_failures)
        .cloned()
        .collect();
    let under: BTreeSet<String> = profile
        .expected_failures
        .difference(&failed)
        .cloned()
        .collect();
    let grid: Vec<(String, String)> = catalog
        .columns
        .iter()
        .map(|c| (c.clone(), grid_cell(profile, &tests, c)))
        .collect();
    let verdicts: Vec<(String, String)> = catalog
        .columns
        .iter()
        .filter_map(|c| profile.verdicts.get(c).map(|v| (c.clone(), v.clone())))
        .collect();
    let grid_matches = verdicts
        .iter()
        .all(|(c, want)| grid.iter().any(|(gc, got)| gc == c && got == want));
    let mut notes = profile.notes.clone();
    for (col, why) in &profile.inconsistent {
        notes.push(format!("{col}: {why}"));
    }
    let ok = over.is_empty() && under.is_empty() && grid_matches;
    Ok(ProfileOutcome {
        name: profile.name.clone(),
        tool: profile.tool.clone(),
        platform: profile.platform.clone(),
        reference: profile.reference,
        tests,
        failed,
        expected_failures: profile.expected_failures.clone(),
        over_reproduced: over,
        under_reproduced: under,
        grid,
        verdicts,
        grid_matches,
        notes,
        ok,
    })
}

/// A column is N/A when none of its tests apply, VULN when an evasion test
/// fails, HALF when the tool is flagged inconsistent there, else PASS.
fn grid_cell(profile: &ToolProfile, tests: &[TestOutcome], column: &str) -> String {
    let in_col: Vec<&TestOutcome> = tests.iter().filter(|t| t.column == column).collect();
    let mut cell = if in_col.iter().all(|t| t.status == Status::NotApplicable) {
        "N/A".to_string()
    } else if in_col
        .iter()
        .any(|t| t.status == Status::Fail && t.severity == Severity::Evasion)
    {
        "VULN".to_string()
    } else if profile.inconsistent.contains_key(column) {
        "HALF".to_string()
    } else {
        "PASS".to_string()
    };
    if let Some(m) = profile.marks.get(column) {
        cell.push_str(m);
    }
    cell
}

pub fn run_profiles(catalog: &Catalog, profiles: &[&ToolProfile]) -> Result<ConformanceReport> {
    let mut outcomes = Vec::new();
    let mut coverage = Vec::new();
    for p in profiles {
        let o = run_profile(catalog, p)?;
        for col in &catalog.columns {
            let tests: Vec<String> = o
                .tests
                .iter()
                .filter(|t| &t.column == col && t.status != Status::NotApplicable)
                .map(|t| t.id.clone())
                .collect();
            if !tests.is_empty() {
                coverage.push(CoverageRow {
                    profile: o.name.clone(),
                    column: col.clone(),
                    tests,
                });
            }
        }
        outcomes.push(o);
    }
    let ok = outcomes.iter().all(|o| o.ok);
    Ok(ConformanceReport {
        columns: catalog.columns.clone(),
        profiles: outcomes,
        coverage,
        ok,
    })
}
