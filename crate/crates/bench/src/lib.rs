//! Shared fixtures for the benchmarks. Everything is built from fixed loops,
//! so runs are comparable across machines and commits.

use localframe_core::{FrameId, FrameTree, FrameTreeBuilder, RequestEvent, ResourceType};

const HOSTS: [&str; 8] = [
    "ads.example",
    "tracker.net",
    "cdn.metrics.io",
    "pixel.co.uk",
    "beacon.org",
    "stats.com",
    "tagmanager.net",
    "adserver.biz",
];

/// A list of `n` network rules in the shapes EasyList uses most: host
/// anchors, path fragments, party and type options, and some exceptions.
pub fn synthetic_list(n: usize) -> String {
    let mut out = String::from("! synthetic benchmark list\n");
    for i in 0..n {
        let host = HOSTS[i % HOSTS.len()];
        let line = match i % 6 {
            0 => format!("||{i}.{host}^"),
            1 => format!("||{host}/path{i}/*.js$script,third-party"),
            2 => format!("/banner{i}/*$image"),
            3 => format!("||sub{i}.{host}^$domain=site{i}.com|~www.site{i}.com"),
            4 => format!("@@||{host}/allow{i}^"),
            _ => format!("|https://{host}/t{i}?id=^$xhr"),
        };
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// A page with `width` children per level down to `depth`, alternating
/// URL, about:blank, srcdoc, and blob sources.
pub fn frame_tree(depth: usize, width: usize) -> FrameTree {
    let mut b = FrameTreeBuilder::new(FrameId(0), "https://www.publisher.com/");
    let mut next = 1u32;
    let mut level = vec![FrameId(0)];
    for d in 0..depth {
        let mut below = Vec::new();
        for parent in &level {
            for w in 0..width {
                let src = match (d + w) % 4 {
                    0 => format!("https://{}/frame", HOSTS[w % HOSTS.len()]),
                    1 => "about:blank".to_string(),
                    2 => "about:srcdoc".to_string(),
                    _ => "blob:https://www.publisher.com/0f3a".to_string(),
                };
                let id = FrameId(next);
                next += 1;
                b.add_child(*parent, id, src);
                below.push(id);
            }
        }
        level = below;
    }
    b.build().expect("fixture tree is valid")
}

/// `n` requests spread over every frame of `tree`.
pub fn requests(tree: &FrameTree, n: usize) -> Vec<RequestEvent> {
    let ids: Vec<FrameId> = tree.top_down();
    let types = [ResourceType::Script, ResourceType::Image, ResourceType::Xhr];
    (0..n)
        .map(|i| {
            let host = HOSTS[i % HOSTS.len()];
            RequestEvent::new(
                format!("https://{i}.{host}/path{i}/x.js?id={i}"),
                ids[i % ids.len()],
                types[i % types.len()],
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_well_formed() {
        let (rules, report) = localframe_core::parse_list(&synthetic_list(600));
        assert_eq!(report.counts.unsupported, 0);
        assert_eq!(rules.network().len(), 600);
        let tree = frame_tree(3, 3);
        assert_eq!(tree.len(), 1 + 3 + 9 + 27);
        assert_eq!(requests(&tree, 100).len(), 100);
    }
}
