//! Origin attribution for local frames (about:blank, about:srcdoc, blob,
//! data) and a filter-list decision engine that can run under correct and
//! deliberately flawed attribution policies.

pub mod analysis;
pub mod conformance;
pub mod engine;
pub mod error;
pub mod filterlist;
pub mod frame;
pub mod origin;
pub mod policy;
pub mod suffix;

pub use analysis::{
    analyze, extract_local_frames, prefix_shares, privacy_events, suspect_requests,
    AnalysisContext, AnalysisReport, EntityMap, EventLog, FingerprintApiTable, SiteStats,
};
pub use conformance::{
    builtin_catalog, run_profile, run_profiles, run_test, ActualMatrix, Capability, Catalog,
    ConformanceReport, ExpectedMatrix, PageSpec, ProfileOutcome, Status, ToolProfile,
};
pub use engine::{
    account_blocks, adorn_frame, decide_replacement, decide_request, partyness, Action,
    BlockLedger, Decision, Engine, FrameAdornment, PartyContext, RequestEvent,
};
pub use error::{Error, Result};
pub use filterlist::{
    count_party_modified, parse_list, parse_rule, CosmeticRule, NetworkRule, ParseReport,
    ParsedRule, Party, ResourceType, RuleSet, ScriptletRule,
};
pub use frame::{resolve_tree, FrameId, FrameNode, FrameTree, FrameTreeBuilder};
pub use origin::{classify_source, origin_of_url, FrameSource, Origin, SourceKind};
pub use policy::{AttributionPolicy, PolicyName};
pub use suffix::{registrable_domain, SuffixRules};
