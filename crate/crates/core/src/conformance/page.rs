//! Declarative test pages.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::engine::RequestEvent;
use crate::error::{Error, Result};
use crate::filterlist::ResourceType;
use crate::frame::{FrameId, FrameTree, FrameTreeBuilder};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementSpec {
    pub tag: String,
    #[serde(default)]
    pub class: String,
}

impl ElementSpec {
    /// Probe label, e.g. `h1.cosmetic-filter`.
    pub fn label(&self) -> String {
        let mut out = self.tag.clone();
        for c in self.class.split_whitespace() {
            out.push('.');
            out.push_str(c);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequestSpec {
    pub url: String,
    #[serde(rename = "type")]
    pub resource_type: ResourceType,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameSpec {
    pub label: String,
    pub src: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<FrameSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub elements: Vec<ElementSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub requests: Vec<RequestSpec>,
    /// Page globals whose value a scriptlet may set.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub globals: Vec<String>,
}

/// A test page: one top-level frame with nested children.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PageSpec {
    pub name: String,
    pub frames: Vec<FrameSpec>,
}

/// A page lowered to a frame tree. Frame ids follow pre-order.
#[derive(Clone, Debug)]
pub struct LoweredPage<'p> {
    pub tree: FrameTree,
    pub frames: Vec<(FrameId, &'p FrameSpec)>,
}

impl LoweredPage<'_> {
    pub fn id_of(&self, label: &str) -> Option<FrameId> {
        self.frames
            .iter()
            .find(|(_, f)| f.label == label)
            .map(|(id, _)| *id)
    }

    pub fn events(&self) -> Vec<RequestEvent> {
        self.frames
            .iter()
            .flat_map(|(id, f)| {
                f.requests
                    .iter()
                    .map(|r| RequestEvent::new(r.url.clone(), *id, r.resource_type))
            })
            .collect()
    }
}

impl PageSpec {
    pub fn from_json(text: &str) -> Result<PageSpec> {
        let page: PageSpec = serde_json::from_str(text).map_err(|e| Error::json("page spec", e))?;
        page.lower()?;
        Ok(page)
    }

    pub fn root(&self) -> Result<&FrameSpec> {
        match self.frames.as_slice() {
            [root] => Ok(root),
            _ => Err(Error::Schema(format!(
                "page {:?} must have exactly one top-level frame",
                self.name
            ))),
        }
    }

    /// Frames in pre-order.
    pub fn frames_preorder(&self) -> Vec<&FrameSpec> {
        fn walk<'a>(f: &'a FrameSpec, out: &mut Vec<&'a FrameSpec>) {
            out.push(f);
            for c in &f.children {
                walk(c, out);
            }
        }
        let mut out = Vec::new();
        for f in &self.frames {
            walk(f, &mut out);
        }
        out
    }

    pub fn labels(&self) -> Vec<&str> {
        self.frames_preorder()
            .into_iter()
            .map(|f| f.label.as_str())
            .collect()
    }

    pub fn lower(&self) -> Result<LoweredPage<'_>> {
        let root = self.root()?;
        let frames = self.frames_preorder();
        let mut seen = BTreeSet::new();
        for f in &frames {
            if !seen.insert(f.label.as_str()) {
                return Err(Error::Schema(format!(
                    "page {:?}: duplicate frame label {:?}",
                    self.name, f.label
                )));
            }
        }
        let mut builder = FrameTreeBuilder::new(FrameId(0), root.src.clone());
        let mut next = 1u32;
        fn add(b: &mut FrameTreeBuilder, parent: FrameId, f: &FrameSpec, next: &mut u32) {
            for c in &f.children {
                let id = FrameId(*next);
                *next += 1;
                b.add_child(parent, id, c.src.clone());
                add(b, id, c, next);
            }
        }
        add(&mut builder, FrameId(0), root, &mut next);
        let tree = builder.build()?;
        let frames = frames
            .into_iter()
            .enumerate()
            .map(|(i, f)| (FrameId(i as u32), f))
            .collect();
        Ok(LoweredPage { tree, frames })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAGE: &str = r#"{
        "name": "t",
        "frames": [{
            "label": "top", "src": "https://firstparty.com/",
            "children": [
                {"label": "lf", "src": "about:blank",
                 "children": [{"label": "nested", "src": "about:blank"}]},
                {"label": "3p", "src": "https://thirdparty.com/",
                 "requests": [{"url": "https://thirdparty.com/a.js", "type": "script"}]}
            ]
        }]
    }"#;

    #[test]
    fn preorder_ids() {
        let page = PageSpec::from_json(PAGE).unwrap();
        let lowered = page.lower().unwrap();
        assert_eq!(page.labels(), ["top", "lf", "nested", "3p"]);
        assert_eq!(lowered.id_of("nested"), Some(FrameId(2)));
        assert_eq!(
            lowered.tree.parent(FrameId(2)).unwrap().unwrap().id,
            FrameId(1)
        );
        assert_eq!(lowered.events()[0].frame_id, FrameId(3));
    }

    #[test]
    fn rejects_bad_pages() {
        assert!(PageSpec::from_json(r#"{"name":"x","frames":[]}"#).is_err());
        let dup = r#"{"name":"x","frames":[{"label":"a","src":"https://a.com/","children":[{"label":"a","src":"about:blank"}]}]}"#;
        assert!(matches!(PageSpec::from_json(dup), Err(Error::Schema(_))));
        let local_root = r#"{"name":"x","frames":[{"label":"a","src":"about:blank"}]}"#;
        assert!(PageSpec::from_json(local_root).is_err());
        let extra =
            r#"{"name":"x","frames":[{"label":"a","src":"https://a.com/","sandbox":true}]}"#;
        assert!(PageSpec::from_json(extra).is_err());
    }

    #[test]
    fn element_labels() {
        let e = ElementSpec {
            tag: "h1".into(),
            class: "cosmetic-filter".into(),
        };
        assert_eq!(e.label(), "h1.cosmetic-filter");
    }
}
