//! Decisions for the four blocker capabilities: request blocking, resource
//! replacement, scriptlet injection, and cosmetic filtering.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filterlist::{NetworkRule, Party, ResourceType, RuleSet};
use crate::frame::{FrameId, FrameNode, FrameTree};
use crate::origin::{Origin, UrlParts};
use crate::policy::{AttributionPolicy, PolicyName};
use crate::suffix::SuffixRules;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartyContext {
    FirstParty,
    ThirdParty,
    /// One side is an opaque origin.
    Indeterminate,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RequestEvent {
    pub url: String,
    pub frame_id: FrameId,
    pub resource_type: ResourceType,
}

impl RequestEvent {
    pub fn new(url: impl Into<String>, frame_id: FrameId, resource_type: ResourceType) -> Self {
        RequestEvent {
            url: url.into(),
            frame_id,
            resource_type,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Action {
    Allow,
    Block,
    Redirect { resource: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub action: Action,
    pub matched_rule: Option<NetworkRule>,
    pub party_context: PartyContext,
}

impl Decision {
    fn allow(party_context: PartyContext) -> Decision {
        Decision {
            action: Action::Allow,
            matched_rule: None,
            party_context,
        }
    }

    pub fn is_block(&self) -> bool {
        self.action == Action::Block
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InjectedScriptlet {
    pub name: String,
    pub args: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameAdornment {
    pub frame_id: FrameId,
    pub hidden_selectors: Vec<String>,
    pub injected_scriptlets: Vec<InjectedScriptlet>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub url: String,
    pub frame_id: FrameId,
    pub counted: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockLedger {
    pub site: String,
    pub counted_blocks: usize,
    pub actual_blocks: usize,
    pub entries: Vec<LedgerEntry>,
}

/// A rule set bound to a frame tree resolved under one policy.
#[derive(Clone, Debug)]
pub struct Engine<'a> {
    tree: Cow<'a, FrameTree>,
    rules: &'a RuleSet,
    policy: AttributionPolicy,
    suffixes: &'a SuffixRules,
}

impl<'a> Engine<'a> {
    /// Resolves `tree` under `policy` unless it already is.
    pub fn new(tree: &'a FrameTree, rules: &'a RuleSet, policy: AttributionPolicy) -> Result<Self> {
        Self::with_suffixes(tree, rules, policy, SuffixRules::builtin())
    }

    pub fn with_suffixes(
        tree: &'a FrameTree,
        rules: &'a RuleSet,
        policy: AttributionPolicy,
        suffixes: &'a SuffixRules,
    ) -> Result<Self> {
        let tree = if tree.resolved_with() == Some(policy) {
            Cow::Borrowed(tree)
        } else {
            Cow::Owned(tree.resolve(&policy)?)
        };
        Ok(Engine {
            tree,
            rules,
            policy,
            suffixes,
        })
    }

    pub fn tree(&self) -> &FrameTree {
        &self.tree
    }

    pub fn policy(&self) -> AttributionPolicy {
        self.policy
    }

    pub fn rules(&self) -> &RuleSet {
        self.rules
    }

    /// Origin a request from `frame` is compared against for party-ness.
    fn comparison_origin<'s>(&'s self, frame: &'s FrameNode) -> Result<&'s Origin> {
        if self.policy.name() == PolicyName::TopLevelPartyness {
            self.tree.root().origin()
        } else {
            frame.origin()
        }
    }

    pub fn partyness(&self, request_origin: &Origin, frame: FrameId) -> Result<PartyContext> {
        let frame = self.tree.node(frame)?;
        let context = self.comparison_origin(frame)?;
        Ok(compare_parties(request_origin, context, self.suffixes))
    }

    pub fn decide_request(&self, ev: &RequestEvent) -> Result<Decision> {
        self.decide(ev, false)
    }

    /// The request pipeline restricted to redirect rules; the named
    /// resource must exist in the rule set.
    pub fn decide_replacement(&self, ev: &RequestEvent) -> Result<Decision> {
        let d = self.decide(ev, true)?;
        if let Action::Redirect { resource } = &d.action {
            if self.rules.resource(resource).is_none() {
                return Err(Error::UnknownResource(resource.clone()));
            }
        }
        Ok(d)
    }

    fn decide(&self, ev: &RequestEvent, redirects_only: bool) -> Result<Decision> {
        let frame = self.tree.node(ev.frame_id)?;
        let url = ev.url.trim().to_ascii_lowercase();
        let parts = UrlParts::parse(&url).map_err(|_| Error::MalformedUrl {
            url: ev.url.clone(),
            frame: Some(ev.frame_id),
        })?;
        let party = compare_parties(
            &parts.origin(),
            self.comparison_origin(frame)?,
            self.suffixes,
        );
        if self.policy.skip_requests() && frame.is_local() {
            return Ok(Decision::allow(party));
        }
        let frame_host = frame.origin()?.host();
        let mut redirect = None;
        let mut block = None;
        for i in self.rules.network_candidates(&url, &parts.host) {
            let rule = &self.rules.network()[i];
            if !rule_applies(rule, &url, &parts, ev.resource_type, frame_host, party) {
                continue;
            }
            if rule.is_exception {
                return Ok(Decision {
                    action: Action::Allow,
                    matched_rule: Some(rule.clone()),
                    party_context: party,
                });
            }
            if rule.redirect.is_some() {
                redirect.get_or_insert(rule);
            } else if !redirects_only {
                block.get_or_insert(rule);
            }
        }
        let decision = match (redirect, block) {
            (Some(r), _) => Decision {
                action: Action::Redirect {
                    resource: r.redirect.clone().unwrap_or_default(),
                },
                matched_rule: Some(r.clone()),
                party_context: party,
            },
            (None, Some(b)) => Decision {
                action: Action::Block,
                matched_rule: Some(b.clone()),
                party_context: party,
            },
            (None, None) => Decision::allow(party),
        };
        Ok(decision)
    }

    pub fn adorn_frame(&self, frame: FrameId) -> Result<FrameAdornment> {
        let node = self.tree.node(frame)?;
        let host = node.origin()?.host();
        let local = node.is_local();
        let mut adornment = FrameAdornment {
            frame_id: frame,
            hidden_selectors: Vec::new(),
            injected_scriptlets: Vec::new(),
        };
        if !local || self.policy.apply_cosmetics_in_local_frames() {
            let rules: Vec<_> = self
                .rules
                .cosmetic_candidates(host)
                .into_iter()
                .map(|i| &self.rules.cosmetic()[i])
                .filter(|r| r.domains.admits(host))
                .collect();
            for r in rules.iter().filter(|r| !r.is_exception) {
                let excepted = rules
                    .iter()
                    .any(|e| e.is_exception && e.selector == r.selector);
                if !excepted && !adornment.hidden_selectors.contains(&r.selector) {
                    adornment.hidden_selectors.push(r.selector.clone());
                }
            }
        }
        if !local || self.policy.apply_scriptlets_in_local_frames() {
            for i in self.rules.scriptlet_candidates(host) {
                let r = &self.rules.scriptlets()[i];
                if !r.domains.admits(host) {
                    continue;
                }
                let s = InjectedScriptlet {
                    name: r.name.clone(),
                    args: r.args.clone(),
                };
                if !adornment.injected_scriptlets.contains(&s) {
                    adornment.injected_scriptlets.push(s);
                }
            }
        }
        Ok(adornment)
    }

    /// Tallies blocks the way the policy's reporting would. Under
    /// `DirectParentOnly` a block in a frame whose direct parent is a local
    /// frame happens but goes unreported.
    pub fn account_blocks(&self, events: &[RequestEvent]) -> Result<BlockLedger> {
        let mut ledger = BlockLedger {
            site: self.tree.root().origin()?.to_string(),
            counted_blocks: 0,
            actual_blocks: 0,
            entries: Vec::new(),
        };
        for ev in events {
            if !self.decide_request(ev)?.is_block() {
                continue;
            }
            let counted = self.policy.name() != PolicyName::DirectParentOnly
                || !self
                    .tree
                    .parent(ev.frame_id)?
                    .is_some_and(FrameNode::is_local);
            ledger.actual_blocks += 1;
            ledger.counted_blocks += usize::from(counted);
            ledger.entries.push(LedgerEntry {
                url: ev.url.clone(),
                frame_id: ev.frame_id,
                counted,
            });
        }
        Ok(ledger)
    }
}

fn rule_applies(
    rule: &NetworkRule,
    url: &str,
    parts: &UrlParts,
    resource_type: ResourceType,
    frame_host: Option<&str>,
    party: PartyContext,
) -> bool {
    let party_ok = match rule.party {
        Party::Any => true,
        Party::ThirdOnly => party == PartyContext::ThirdParty,
        Party::FirstOnly => party == PartyContext::FirstParty,
    };
    party_ok
        && rule.admits_type(resource_type)
        && rule.domains.admits(frame_host)
        && rule.pattern.matches(url, parts.host_range.clone())
}

/// First-party iff both origins are tuples with the same scheme and the
/// same registrable domain.
pub fn compare_parties(a: &Origin, b: &Origin, suffixes: &SuffixRules) -> PartyContext {
    match (a, b) {
        (
            Origin::Tuple {
                scheme: sa,
                host: ha,
                ..
            },
            Origin::Tuple {
                scheme: sb,
                host: hb,
                ..
            },
        ) => {
            if sa == sb && suffixes.registrable_domain(ha) == suffixes.registrable_domain(hb) {
                PartyContext::FirstParty
            } else {
                PartyContext::ThirdParty
            }
        }
        _ => PartyContext::Indeterminate,
    }
}

pub fn partyness(
    request_origin: &Origin,
    frame: FrameId,
    tree: &FrameTree,
    policy: AttributionPolicy,
) -> Result<PartyContext> {
    let empty = RuleSet::default();
    Engine::new(tree, &empty, policy)?.partyness(request_origin, frame)
}

pub fn decide_request(
    ev: &RequestEvent,
    tree: &FrameTree,
    rules: &RuleSet,
    policy: AttributionPolicy,
) -> Result<Decision> {
    Engine::new(tree, rules, policy)?.decide_request(ev)
}

pub fn decide_replacement(
    ev: &RequestEvent,
    tree: &FrameTree,
    rules: &RuleSet,
    policy: AttributionPolicy,
) -> Result<Decision> {
    Engine::new(tree, rules, policy)?.decide_replacement(ev)
}

pub fn adorn_frame(
    frame: FrameId,
    tree: &FrameTree,
    rules: &RuleSet,
    policy: AttributionPolicy,
) -> Result<FrameAdornment> {
    Engine::new(tree, rules, policy)?.adorn_frame(frame)
}

pub fn account_blocks(
    events: &[RequestEvent],
    tree: &FrameTree,
    rules: &RuleSet,
    policy: AttributionPolicy,
) -> Result<BlockLedger> {
    Engine::new(tree, rules, policy)?.account_blocks(events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filterlist::parse_list;
    use crate::origin::origin_of_url;

    const FP: &str = "https://firstparty.com/script.js";
    const TP: &str = "https://thirdparty.com/script.js";

    /// Root 1p page with a local frame and a nested local frame, plus a 3p
    /// iframe with the same pair beneath it.
    fn nested_page() -> FrameTree {
        FrameTree::builder(FrameId(0), "https://firstparty.com/")
            .child(FrameId(0), FrameId(1), "about:blank")
            .child(FrameId(1), FrameId(2), "about:blank")
            .child(FrameId(0), FrameId(3), "https://thirdparty.com/frame.html")
            .child(FrameId(3), FrameId(4), "about:blank")
            .child(FrameId(4), FrameId(5), "about:srcdoc")
            .build()
            .unwrap()
    }

    fn script(url: &str, frame: u32) -> RequestEvent {
        RequestEvent::new(url, FrameId(frame), ResourceType::Script)
    }

    fn all_events() -> Vec<RequestEvent> {
        (0..6)
            .flat_map(|f| [script(FP, f), script(TP, f)])
            .collect()
    }

    fn rules(text: &str) -> RuleSet {
        parse_list(text).0
    }

    #[test]
    fn partyness_examples() {
        let tree = nested_page();
        let tp = origin_of_url(TP).unwrap();
        let fp = origin_of_url(FP).unwrap();
        let sc = AttributionPolicy::spec_correct();
        let tl = AttributionPolicy::new(PolicyName::TopLevelPartyness);
        assert_eq!(
            partyness(&tp, FrameId(4), &tree, sc).unwrap(),
            PartyContext::FirstParty
        );
        assert_eq!(
            partyness(&tp, FrameId(4), &tree, tl).unwrap(),
            PartyContext::ThirdParty
        );
        assert_eq!(
            partyness(&fp, FrameId(0), &tree, sc).unwrap(),
            PartyContext::FirstParty
        );
        let data = FrameTree::builder(FrameId(0), "https://firstparty.com/")
            .child(FrameId(0), FrameId(1), "data:text/html,hi")
            .build()
            .unwrap();
        assert_eq!(
            partyness(&fp, FrameId(1), &data, sc).unwrap(),
            PartyContext::Indeterminate
        );
        assert!(matches!(
            partyness(&fp, FrameId(9), &tree, sc),
            Err(Error::UnknownFrame(_))
        ));
    }

    #[test]
    fn scheme_mismatch_is_third_party() {
        let a = origin_of_url("http://firstparty.com/").unwrap();
        let b = origin_of_url("https://cdn.firstparty.com/").unwrap();
        assert_eq!(
            compare_parties(&a, &b, SuffixRules::builtin()),
            PartyContext::ThirdParty
        );
    }

    #[test]
    fn block_everywhere() {
        let tree = nested_page();
        let rs = rules("||firstparty.com/script.js\n||thirdparty.com/script.js\n");
        let e = Engine::new(&tree, &rs, AttributionPolicy::spec_correct()).unwrap();
        for ev in all_events() {
            assert!(e.decide_request(&ev).unwrap().is_block(), "{ev:?}");
        }
    }

    #[test]
    fn third_party_rule_by_policy() {
        let tree = nested_page();
        let rs = rules("||thirdparty.com^$third-party\n");
        let ev = script(TP, 4);
        let sc = decide_request(&ev, &tree, &rs, AttributionPolicy::spec_correct()).unwrap();
        assert_eq!(sc.action, Action::Allow);
        let tl = AttributionPolicy::new(PolicyName::TopLevelPartyness);
        assert!(decide_request(&ev, &tree, &rs, tl).unwrap().is_block());
        assert!(decide_request(
            &script(TP, 2),
            &tree,
            &rs,
            AttributionPolicy::spec_correct()
        )
        .unwrap()
        .is_block());
    }

    #[test]
    fn indeterminate_fails_closed() {
        let tree = FrameTree::builder(FrameId(0), "https://firstparty.com/")
            .child(FrameId(0), FrameId(1), "data:text/html,x")
            .build()
            .unwrap();
        let sc = AttributionPolicy::spec_correct();
        let restricted = rules("||thirdparty.com^$third-party\n");
        let d = decide_request(&script(TP, 1), &tree, &restricted, sc).unwrap();
        assert_eq!(d.action, Action::Allow);
        assert_eq!(d.party_context, PartyContext::Indeterminate);
        let plain = rules("||thirdparty.com^\n");
        assert!(decide_request(&script(TP, 1), &tree, &plain, sc)
            .unwrap()
            .is_block());
    }

    #[test]
    fn brave_ios_skips_requests_in_local_frames() {
        let tree = nested_page();
        let rs = rules("/ads/index\n");
        let p = AttributionPolicy::skip_local_frames_and_requests();
        let ev = RequestEvent::new(
            "https://thirdparty.com/ads/index.js",
            FrameId(1),
            ResourceType::Xhr,
        );
        assert_eq!(
            decide_request(&ev, &tree, &rs, p).unwrap().action,
            Action::Allow
        );
        let root = RequestEvent {
            frame_id: FrameId(0),
            ..ev
        };
        assert!(decide_request(&root, &tree, &rs, p).unwrap().is_block());
    }

    #[test]
    fn precedence_exception_redirect_block() {
        let tree = nested_page();
        let sc = AttributionPolicy::spec_correct();
        let ev = RequestEvent::new(
            "https://thirdparty.com/ajax.txt",
            FrameId(0),
            ResourceType::Xhr,
        );
        let rs = rules("||thirdparty.com^\n||thirdparty.com/ajax.txt$redirect=noop.txt\n");
        assert_eq!(
            decide_request(&ev, &tree, &rs, sc).unwrap().action,
            Action::Redirect {
                resource: "noop.txt".into()
            }
        );
        let rs =
            rules("||thirdparty.com^\n||thirdparty.com/ajax.txt$redirect=noop.txt\n@@/ajax.txt\n");
        let d = decide_request(&ev, &tree, &rs, sc).unwrap();
        assert_eq!(d.action, Action::Allow);
        assert!(d.matched_rule.unwrap().is_exception);
    }

    #[test]
    fn replacement() {
        let tree = nested_page();
        let sc = AttributionPolicy::spec_correct();
        let mut res = std::collections::BTreeMap::new();
        res.insert("noop.txt".to_string(), "[noop text]".to_string());
        let rs = rules("||thirdparty.com/ajax.txt$xhr,redirect=noop.txt\n||thirdparty.com^\n")
            .with_resources(res);
        for f in 0..6 {
            let ev = RequestEvent::new(
                "https://thirdparty.com/ajax.txt",
                FrameId(f),
                ResourceType::Xhr,
            );
            let d = decide_replacement(&ev, &tree, &rs, sc).unwrap();
            assert_eq!(
                d.action,
                Action::Redirect {
                    resource: "noop.txt".into()
                }
            );
            let brave = AttributionPolicy::skip_local_frames_and_requests();
            let d = decide_replacement(&ev, &tree, &rs, brave).unwrap();
            let local = tree.node(FrameId(f)).unwrap().is_local();
            assert_eq!(d.action == Action::Allow, local);
        }
        let missing = rules("||thirdparty.com/ajax.txt$redirect=nope\n");
        let ev = RequestEvent::new(
            "https://thirdparty.com/ajax.txt",
            FrameId(0),
            ResourceType::Xhr,
        );
        assert!(matches!(
            decide_replacement(&ev, &tree, &missing, sc),
            Err(Error::UnknownResource(_))
        ));
        let none = rules("||thirdparty.com^\n");
        assert_eq!(
            decide_replacement(&ev, &tree, &none, sc).unwrap().action,
            Action::Allow
        );
    }

    #[test]
    fn scriptlets_by_policy() {
        let tree = nested_page();
        let rs = rules(
            "firstparty.com##+js(set-constant, scriptletvalue, 1)\nthirdparty.com##+js(set-constant, scriptletvalue, 42)\n",
        );
        let value = |p: AttributionPolicy, f: u32| {
            adorn_frame(FrameId(f), &tree, &rs, p)
                .unwrap()
                .injected_scriptlets
                .first()
                .map(|s| s.args[1].clone())
        };
        let sc = AttributionPolicy::spec_correct();
        assert_eq!(value(sc, 4).as_deref(), Some("42"));
        assert_eq!(value(sc, 1).as_deref(), Some("1"));
        let fpf = AttributionPolicy::new(PolicyName::FirstPartyFallback);
        assert_eq!(value(fpf, 4).as_deref(), Some("1"));
        assert_eq!(value(fpf, 3).as_deref(), Some("42"));
        let skip = AttributionPolicy::new(PolicyName::SkipLocalFrames);
        assert_eq!(value(skip, 4), None);
        assert_eq!(value(skip, 3).as_deref(), Some("42"));
    }

    #[test]
    fn cosmetics_by_policy() {
        let tree = nested_page();
        let rs = rules("thirdparty.com##.cosmetic-filter\n");
        let hidden = |p: AttributionPolicy| -> Vec<u32> {
            (0..6)
                .filter(|&f| {
                    !adorn_frame(FrameId(f), &tree, &rs, p)
                        .unwrap()
                        .hidden_selectors
                        .is_empty()
                })
                .collect()
        };
        assert_eq!(hidden(AttributionPolicy::spec_correct()), [3, 4, 5]);
        assert_eq!(
            hidden(AttributionPolicy::new(PolicyName::SkipLocalFrames)),
            [3]
        );
        assert_eq!(
            hidden(AttributionPolicy::new(PolicyName::FirstPartyFallback)),
            [3]
        );
        assert_eq!(hidden(AttributionPolicy::new(PolicyName::LiteralSelf)), [3]);
    }

    #[test]
    fn cosmetic_exceptions() {
        let tree = nested_page();
        let rs = rules("##.ad\n##.banner\nthirdparty.com#@#.ad\n##.ad\n");
        let sc = AttributionPolicy::spec_correct();
        assert_eq!(
            adorn_frame(FrameId(0), &tree, &rs, sc)
                .unwrap()
                .hidden_selectors,
            [".ad", ".banner"]
        );
        assert_eq!(
            adorn_frame(FrameId(5), &tree, &rs, sc)
                .unwrap()
                .hidden_selectors,
            [".banner"]
        );
    }

    #[test]
    fn accounting() {
        let tree = nested_page();
        let rs = rules("||firstparty.com/script.js\n||thirdparty.com/script.js\n");
        let sc =
            account_blocks(&all_events(), &tree, &rs, AttributionPolicy::spec_correct()).unwrap();
        assert_eq!((sc.counted_blocks, sc.actual_blocks), (12, 12));
        let dpo = AttributionPolicy::new(PolicyName::DirectParentOnly);
        let ddg = account_blocks(&all_events(), &tree, &rs, dpo).unwrap();
        assert_eq!((ddg.counted_blocks, ddg.actual_blocks), (8, 12));
        let uncounted: Vec<u32> = ddg
            .entries
            .iter()
            .filter(|e| !e.counted)
            .map(|e| e.frame_id.0)
            .collect();
        assert_eq!(uncounted, [2, 2, 5, 5]);
        let none = account_blocks(&all_events(), &tree, &RuleSet::default(), dpo).unwrap();
        assert_eq!((none.counted_blocks, none.actual_blocks), (0, 0));
    }

    #[test]
    fn malformed_request_url() {
        let tree = nested_page();
        let rs = RuleSet::default();
        let ev = script("not a url", 3);
        assert!(matches!(
            decide_request(&ev, &tree, &rs, AttributionPolicy::spec_correct()),
            Err(Error::MalformedUrl {
                frame: Some(FrameId(3)),
                ..
            })
        ));
    }
}
