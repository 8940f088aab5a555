//! Frame trees and security-origin resolution.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::origin::{origin_of_url, FrameSource, Origin, SourceKind};
use crate::policy::{AttributionPolicy, PolicyName};

static NEXT_TREE_SCOPE: AtomicU64 = AtomicU64::new(1);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FrameId(pub u32);

impl fmt::Display for FrameId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameNode {
    pub id: FrameId,
    pub source: FrameSource,
    pub parent: Option<FrameId>,
    /// Origin of the document that created this frame; `None` for the root.
    pub creator_origin: Option<Origin>,
    pub resolved_origin: Option<Origin>,
    pub children: Vec<FrameId>,
}

impl FrameNode {
    pub fn is_local(&self) -> bool {
        self.source.is_local()
    }

    pub fn origin(&self) -> Result<&Origin> {
        self.resolved_origin
            .as_ref()
            .ok_or(Error::UnresolvedFrame(self.id))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameTree {
    scope: u64,
    root: FrameId,
    nodes: BTreeMap<FrameId, FrameNode>,
    resolved_with: Option<AttributionPolicy>,
}

impl FrameTree {
    pub fn builder(root: FrameId, src: impl Into<String>) -> FrameTreeBuilder {
        FrameTreeBuilder::new(root, src)
    }

    pub fn root_id(&self) -> FrameId {
        self.root
    }

    pub fn root(&self) -> &FrameNode {
        &self.nodes[&self.root]
    }

    pub fn node(&self, id: FrameId) -> Result<&FrameNode> {
        self.nodes.get(&id).ok_or(Error::UnknownFrame(id))
    }

    pub fn nodes(&self) -> impl Iterator<Item = &FrameNode> {
        self.nodes.values()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// The policy the current origins were computed under, if any.
    pub fn resolved_with(&self) -> Option<AttributionPolicy> {
        self.resolved_with
    }

    pub fn parent(&self, id: FrameId) -> Result<Option<&FrameNode>> {
        match self.node(id)?.parent {
            Some(p) => self.node(p).map(Some),
            None => Ok(None),
        }
    }

    /// Ancestors of `id`, nearest first, excluding `id` itself.
    pub fn ancestors(&self, id: FrameId) -> Result<Vec<&FrameNode>> {
        let mut out = Vec::new();
        let mut cur = self.node(id)?.parent;
        while let Some(p) = cur {
            let node = self.node(p)?;
            out.push(node);
            cur = node.parent;
        }
        Ok(out)
    }

    pub fn depth(&self, id: FrameId) -> Result<usize> {
        Ok(self.ancestors(id)?.len())
    }

    /// Frame ids in breadth-first order from the root, children in
    /// insertion order.
    pub fn top_down(&self) -> Vec<FrameId> {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut queue = VecDeque::from([self.root]);
        while let Some(id) = queue.pop_front() {
            order.push(id);
            queue.extend(self.nodes[&id].children.iter().copied());
        }
        order
    }

    /// Resolves every frame's origin in one top-down pass, returning a new tree.
    pub fn resolve(&self, policy: &AttributionPolicy) -> Result<FrameTree> {
        resolve_tree(self, policy)
    }
}

/// Computes one frame's origin from its source, its creator's origin, and
/// the top-level page's origin.
pub fn resolve_frame_origin(
    node: &FrameNode,
    root_origin: &Origin,
    scope: u64,
    policy: &AttributionPolicy,
) -> Result<Origin> {
    let kind = node.source.kind;
    if kind == SourceKind::Url {
        return origin_of_url(node.source.raw.trim()).map_err(|_| Error::MalformedUrl {
            url: node.source.raw.clone(),
            frame: Some(node.id),
        });
    }
    let opaque = |label: &str| Origin::opaque(scope, node.id, label);
    if kind.is_local() {
        match policy.name() {
            PolicyName::FirstPartyFallback => return Ok(root_origin.clone()),
            PolicyName::LiteralSelf => return Ok(opaque("about:blank")),
            _ => {}
        }
    }
    if kind.inherits_origin() {
        return node
            .creator_origin
            .clone()
            .ok_or(Error::UnresolvedFrame(node.id));
    }
    Ok(opaque(kind.as_str()))
}

pub fn resolve_tree(tree: &FrameTree, policy: &AttributionPolicy) -> Result<FrameTree> {
    let mut out = tree.clone();
    let root_origin = {
        let root = out.root();
        resolve_frame_origin(
            root,
            &Origin::opaque(tree.scope, root.id, "root"),
            tree.scope,
            policy,
        )?
    };
    for id in tree.top_down() {
        let creator = match out.nodes[&id].parent {
            Some(p) => out.nodes[&p].resolved_origin.clone(),
            None => None,
        };
        let node = out.nodes.get_mut(&id).expect("id from traversal");
        node.creator_origin = creator;
        let origin = if id == tree.root {
            root_origin.clone()
        } else {
            resolve_frame_origin(node, &root_origin, tree.scope, policy)?
        };
        node.resolved_origin = Some(origin);
    }
    out.resolved_with = Some(*policy);
    Ok(out)
}

#[derive(Debug)]
pub struct FrameTreeBuilder {
    root: FrameId,
    nodes: BTreeMap<FrameId, FrameNode>,
    error: Option<Error>,
}

impl FrameTreeBuilder {
    pub fn new(root: FrameId, src: impl Into<String>) -> Self {
        let mut nodes = BTreeMap::new();
        nodes.insert(
            root,
            FrameNode {
                id: root,
                source: FrameSource::new(src),
                parent: None,
                creator_origin: None,
                resolved_origin: None,
                children: Vec::new(),
            },
        );
        FrameTreeBuilder {
            root,
            nodes,
            error: None,
        }
    }

    /// Adds `id` as the last child of `parent`. Errors surface from `build`.
    pub fn child(mut self, parent: FrameId, id: FrameId, src: impl Into<String>) -> Self {
        self.add_child(parent, id, src);
        self
    }

    pub fn add_child(&mut self, parent: FrameId, id: FrameId, src: impl Into<String>) {
        if self.error.is_some() {
            return;
        }
        if self.nodes.contains_key(&id) {
            self.error = Some(Error::InvalidTree(format!("duplicate frame id {id}")));
            return;
        }
        let Some(p) = self.nodes.get_mut(&parent) else {
            self.error = Some(Error::InvalidTree(format!(
                "frame {id} refers to missing parent {parent}"
            )));
            return;
        };
        p.children.push(id);
        self.nodes.insert(
            id,
            FrameNode {
                id,
                source: FrameSource::new(src),
                parent: Some(parent),
                creator_origin: None,
                resolved_origin: None,
                children: Vec::new(),
            },
        );
    }

    pub fn build(self) -> Result<FrameTree> {
        if let Some(e) = self.error {
            return Err(e);
        }
        let root = &self.nodes[&self.root];
        if root.source.kind != SourceKind::Url {
            return Err(Error::InvalidTree(format!(
                "root frame source {:?} is not a URL",
                root.source.raw
            )));
        }
        Ok(FrameTree {
            scope: NEXT_TREE_SCOPE.fetch_add(1, Ordering::Relaxed),
            root: self.root,
            nodes: self.nodes,
            resolved_with: None,
        })
    }
}
