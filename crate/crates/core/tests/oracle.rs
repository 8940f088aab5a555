//! The engine must agree with a brute-force regex matcher and an explicit
//! nearest-ancestor walk on seeded random rule lists and frame trees.

mod support;

use localframe_core::{parse_list, Action, AttributionPolicy, Engine, FrameId, RequestEvent};
use support::gen;
use support::oracle::{self, Verdict, POLICIES};

const CASES: u64 = 1000;

fn engine_verdict(case: &gen::Case, policy: oracle::Policy) -> Verdict {
    let (rules, report) = parse_list(&case.rules.join("\n"));
    assert!(report.unsupported.is_empty(), "{:?}", report.unsupported);
    let tree = case.tree.build();
    let policy: AttributionPolicy = policy.name().parse().unwrap();
    let engine = Engine::new(&tree, &rules, policy).unwrap();
    let ev = RequestEvent::new(case.url.clone(), FrameId(case.frame), case.resource_type);
    match engine.decide_request(&ev).unwrap().action {
        Action::Allow => Verdict::Allow,
        Action::Block => Verdict::Block,
        Action::Redirect { resource } => Verdict::Redirect(resource),
    }
}

#[test]
fn engine_agrees_with_brute_force() {
    let mut blocked = 0;
    for seed in 0..CASES {
        let case = gen::case(seed);
        let policy = POLICIES[(seed % POLICIES.len() as u64) as usize];
        let want = oracle::decide(
            &case.rules,
            &case.tree,
            case.frame,
            &case.url,
            case.resource_type,
            policy,
        );
        if want != Verdict::Allow {
            blocked += 1;
        }
        assert_eq!(
            engine_verdict(&case, policy),
            want,
            "seed {seed} policy {policy:?}: {case:#?}"
        );
    }
    // The generator must exercise both outcomes.
    assert!(
        blocked > CASES / 20 && blocked < CASES * 19 / 20,
        "blocked {blocked}"
    );
}

#[test]
fn origins_agree_with_ancestor_walk() {
    for seed in 0..500 {
        let mut r = gen::rng(seed);
        let spec = gen::tree(&mut r, 4);
        let tree = spec.build();
        for policy in POLICIES {
            let resolved = tree.resolve(&policy.name().parse().unwrap()).unwrap();
            for id in spec.ids() {
                let got = resolved.node(FrameId(id)).unwrap().origin().unwrap();
                let want = oracle::origin(&spec, id, policy);
                match want {
                    oracle::Origin::Tuple { scheme, host } => {
                        assert_eq!(
                            got.scheme(),
                            Some(scheme.as_str()),
                            "seed {seed} frame {id}"
                        );
                        assert_eq!(got.host(), Some(host.as_str()), "seed {seed} frame {id}");
                    }
                    oracle::Origin::Opaque(owner) => {
                        assert!(
                            got.is_opaque(),
                            "seed {seed} frame {id} {policy:?}: {got:?}"
                        );
                        let owner_origin = resolved.node(FrameId(owner)).unwrap().origin().unwrap();
                        if owner != id {
                            assert_eq!(got, owner_origin);
                        }
                    }
                }
            }
        }
    }
}
