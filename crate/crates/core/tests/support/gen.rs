//! Seeded generators for rule lists, frame trees, and request events.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use localframe_core::{FrameId, FrameTree, FrameTreeBuilder, ResourceType};

/// Registrable domains in the generated universe.
pub const BASES: [&str; 6] = [
    "a.com",
    "b.com",
    "ads.net",
    "c.co.uk",
    "d.org",
    "thirdparty.com",
];
const SUBS: [&str; 4] = ["", "www.", "cdn.", "x.y."];
const PATHS: [&str; 8] = [
    "/",
    "/ads/x.js",
    "/track?id=1",
    "/img/ads.png",
    "/a/b/c.js",
    "/ads/banner.gif?s=2",
    "/pixel",
    "/script.js",
];
const LITERALS: [&str; 10] = [
    "ads", "track", ".js", "/", "x", "banner", "a.com", "cdn.", "?id=", "pixel",
];
pub const TYPES: [ResourceType; 5] = [
    ResourceType::Script,
    ResourceType::Xhr,
    ResourceType::Image,
    ResourceType::Subdocument,
    ResourceType::Other,
];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn host(r: &mut impl Rng) -> String {
    format!("{}{}", SUBS.choose(r).unwrap(), BASES.choose(r).unwrap())
}

pub fn url(r: &mut impl Rng) -> String {
    let scheme = if r.gen_bool(0.85) { "https" } else { "http" };
    let port = if r.gen_bool(0.1) { ":8080" } else { "" };
    format!("{scheme}://{}{port}{}", host(r), PATHS.choose(r).unwrap())
}

/// One frame: id, parent, src. Parents precede children.
#[derive(Clone, Debug)]
pub struct TreeSpec {
    pub frames: Vec<(u32, Option<u32>, String)>,
}

impl TreeSpec {
    pub fn build(&self) -> FrameTree {
        let (id, _, src) = &self.frames[0];
        let mut b = FrameTreeBuilder::new(FrameId(*id), src.clone());
        for (id, parent, src) in &self.frames[1..] {
            b.add_child(FrameId(parent.unwrap()), FrameId(*id), src.clone());
        }
        b.build().expect("generated trees are valid")
    }

    pub fn src(&self, id: u32) -> &str {
        &self.frames.iter().find(|f| f.0 == id).unwrap().2
    }

    pub fn parent(&self, id: u32) -> Option<u32> {
        self.frames.iter().find(|f| f.0 == id).unwrap().1
    }

    pub fn ids(&self) -> Vec<u32> {
        self.frames.iter().map(|f| f.0).collect()
    }
}

fn child_src(r: &mut impl Rng) -> String {
    match r.gen_range(0..10) {
        0..=2 => url(r),
        3 | 4 => "about:blank".into(),
        5 => "".into(),
        6 => "about:srcdoc".into(),
        7 => format!("blob:https://{}/4f1c", host(r)),
        8 => "data:text/html,<p>x</p>".into(),
        _ => ["about:foo", "file:///tmp/x.html", "ABOUT:BLANK"]
            .choose(r)
            .unwrap()
            .to_string(),
    }
}

/// A random tree of depth at most `max_depth` (the root is depth 0).
pub fn tree(r: &mut impl Rng, max_depth: usize) -> TreeSpec {
    let mut frames = vec![(0u32, None, url(r))];
    let mut frontier = vec![(0u32, 0usize)];
    let mut next = 1u32;
    while let Some((id, depth)) = frontier.pop() {
        if depth >= max_depth {
            continue;
        }
        for _ in 0..r.gen_range(0..=3) {
            if next >= 24 {
                break;
            }
            frames.push((next, Some(id), child_src(r)));
            frontier.push((next, depth + 1));
            next += 1;
        }
    }
    // Parents precede children in `frames` already; ids follow creation.
    TreeSpec { frames }
}

fn pattern(r: &mut impl Rng) -> String {
    let mut p = String::new();
    let anchor = r.gen_range(0..4);
    match anchor {
        0 => {
            p.push_str("||");
            p.push_str(&host(r));
        }
        1 => {
            p.push('|');
            p.push_str(if r.gen_bool(0.5) {
                "https://"
            } else {
                "http://"
            });
        }
        _ => {}
    }
    for _ in 0..r.gen_range(if anchor == 0 { 0 } else { 1 }..=3) {
        match r.gen_range(0..6) {
            0 => p.push('*'),
            1 => p.push('^'),
            _ => p.push_str(LITERALS.choose(r).unwrap()),
        }
    }
    if r.gen_bool(0.15) {
        p.push('|');
    }
    // A leading and trailing slash would make it a regex rule.
    if p.len() > 1 && p.starts_with('/') && p.ends_with('/') {
        p.push('x');
    }
    p
}

fn domain_option(r: &mut impl Rng) -> String {
    let n = r.gen_range(1..=2);
    let parts: Vec<String> = (0..n)
        .map(|_| {
            let neg = if r.gen_bool(0.3) { "~" } else { "" };
            let sub = if r.gen_bool(0.3) { "www." } else { "" };
            format!("{neg}{sub}{}", BASES.choose(r).unwrap())
        })
        .collect();
    format!("domain={}", parts.join("|"))
}

/// A network rule line inside the supported grammar.
pub fn rule(r: &mut impl Rng) -> String {
    let exception = r.gen_bool(0.2);
    let mut p = pattern(r);
    let mut opts = Vec::new();
    match r.gen_range(0..6) {
        0 => opts.push("third-party".to_string()),
        1 => opts.push("~third-party".to_string()),
        2 => opts.push("first-party".to_string()),
        _ => {}
    }
    if r.gen_bool(0.3) {
        let mut ts: Vec<&str> = TYPES
            .iter()
            .map(|t| t.as_str())
            .filter(|t| *t != "other")
            .collect();
        ts.shuffle(r);
        ts.truncate(r.gen_range(1..=2));
        opts.extend(ts.into_iter().map(String::from));
    }
    let has_domain = r.gen_bool(0.25);
    if has_domain {
        opts.push(domain_option(r));
    }
    if !exception && r.gen_bool(0.15) {
        opts.push("redirect=noop.txt".into());
    }
    if p.is_empty() && !has_domain {
        p.push_str("ads");
    }
    let mut line = String::new();
    if exception {
        line.push_str("@@");
    }
    line.push_str(&p);
    if !opts.is_empty() {
        line.push('$');
        line.push_str(&opts.join(","));
    }
    line
}

#[derive(Clone, Debug)]
pub struct Case {
    pub rules: Vec<String>,
    pub tree: TreeSpec,
    pub frame: u32,
    pub url: String,
    pub resource_type: ResourceType,
}

pub fn case(seed: u64) -> Case {
    let mut r = rng(seed);
    let tree = tree(&mut r, 4);
    let rules = (0..r.gen_range(0..=12)).map(|_| rule(&mut r)).collect();
    let frame = *tree.ids().choose(&mut r).unwrap();
    Case {
        rules,
        tree,
        frame,
        url: url(&mut r),
        resource_type: *TYPES.choose(&mut r).unwrap(),
    }
}
