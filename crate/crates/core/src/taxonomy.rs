//! The hierarchical category tree of the sentence repository: a root, the
//! top-level categories, optional subcategories from corpus paths, and
//! sentence ids attached at leaves.

use serde::{Deserialize, Serialize};

/// The seven default top-level categories.
pub const DEFAULT_TOP_CATEGORIES: [&str; 7] = [
    "art & culture",
    "economics",
    "entertainment",
    "literature",
    "politics",
    "sports",
    "tourism",
];

pub type NodeId = usize;
pub const ROOT: NodeId = 0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaxNode {
    pub name: String,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    pub sentence_ids: Vec<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CategoryTree {
    nodes: Vec<TaxNode>,
}

impl Default for CategoryTree {
    fn default() -> Self {
        Self::new()
    }
}

impl CategoryTree {
    /// An empty tree with only the root node.
    pub fn new() -> CategoryTree {
        CategoryTree {
            nodes: vec![TaxNode {
                name: String::new(),
                parent: None,
                children: Vec::new(),
                sentence_ids: Vec::new(),
            }],
        }
    }

    /// A tree seeded with the seven default top-level categories.
    pub fn with_default_categories() -> CategoryTree {
        let mut tree = CategoryTree::new();
        for name in DEFAULT_TOP_CATEGORIES {
            tree.add_path(&[name.to_string()]);
        }
        tree
    }

    pub fn node(&self, id: NodeId) -> &TaxNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        0..self.nodes.len()
    }

    /// Insert (or find) the node for a category path, creating intermediate
    /// nodes. Sibling order is kept sorted by name so category indices are
    /// stable regardless of corpus order.
    pub fn add_path(&mut self, path: &[String]) -> NodeId {
        let mut current = ROOT;
        for part in path {
            let found = self.nodes[current]
                .children
                .iter()
                .copied()
                .find(|&c| self.nodes[c].name == *part);
            current = match found {
                Some(c) => c,
                None => {
                    let id = self.nodes.len();
                    self.nodes.push(TaxNode {
                        name: part.clone(),
                        parent: Some(current),
                        children: Vec::new(),
                        sentence_ids: Vec::new(),
                    });
                    self.nodes[current].children.push(id);
                    let mut ordered = self.nodes[current].children.clone();
                    ordered.sort_by(|&a, &b| self.nodes[a].name.cmp(&self.nodes[b].name));
                    self.nodes[current].children = ordered;
                    id
                }
            };
        }
        current
    }

    pub fn attach_sentence(&mut self, node: NodeId, sentence_id: u32) {
        self.nodes[node].sentence_ids.push(sentence_id);
    }

    pub fn resolve(&self, path: &[String]) -> Option<NodeId> {
        let mut current = ROOT;
        for part in path {
            current = self.nodes[current]
                .children
                .iter()
                .copied()
                .find(|&c| self.nodes[c].name == *part)?;
        }
        Some(current)
    }

    /// Human-readable path like `sports/cricket`; the root is `/`.
    pub fn path_string(&self, id: NodeId) -> String {
        let mut parts: Vec<&str> = Vec::new();
        let mut current = Some(id);
        while let Some(c) = current {
            if c != ROOT {
                parts.push(&self.nodes[c].name);
            }
            current = self.nodes[c].parent;
        }
        if parts.is_empty() {
            "/".to_string()
        } else {
            parts.reverse();
            parts.join("/")
        }
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        self.nodes[id].children.is_empty()
    }

    /// Sentence ids at this node and every node below it.
    pub fn sentences_under(&self, id: NodeId) -> Vec<u32> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            out.extend_from_slice(&self.nodes[n].sentence_ids);
            stack.extend(self.nodes[n].children.iter().copied());
        }
        out.sort_unstable();
        out
    }

    /// Leaves below (or at) the node.
    pub fn leaves_under(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            if self.is_leaf(n) {
                out.push(n);
            } else {
                stack.extend(self.nodes[n].children.iter().copied());
            }
        }
        out.sort_unstable();
        out
    }

    /// Which direct child subtree of `node` contains `descendant`?
    /// Returns the index into `node.children`.
    pub fn child_slot_of(&self, node: NodeId, descendant: NodeId) -> Option<usize> {
        let mut current = descendant;
        loop {
            let parent = self.nodes[current].parent?;
            if parent == node {
                return self.nodes[node].children.iter().position(|&c| c == current);
            }
            current = parent;
        }
    }

    /// Internal nodes with at least two children, breadth-first from the
    /// root: exactly the nodes that need a trained ensemble.
    pub fn multi_child_nodes(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut queue = std::collections::VecDeque::from([ROOT]);
        while let Some(n) = queue.pop_front() {
            if self.nodes[n].children.len() >= 2 {
                out.push(n);
            }
            queue.extend(self.nodes[n].children.iter().copied());
        }
        out
    }
}
