//! JSON interchange formats for trees, block layouts, and linear orders.

use std::path::Path;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::aware::BlockAssignment;
use crate::error::{Error, Result};
use crate::oblivious::LinearOrder;
use crate::tree::{NodeId, TreeTopology};

#[derive(Debug, Serialize, Deserialize)]
pub struct TreeFile {
    pub n: u64,
    pub root: u32,
    pub nodes: Vec<NodeEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct NodeEntry {
    pub id: u32,
    pub left: Option<u32>,
    pub right: Option<u32>,
}

impl TreeFile {
    pub fn from_tree(tree: &TreeTopology) -> Self {
        TreeFile {
            n: tree.len() as u64,
            root: tree.root().0,
            nodes: tree
                .nodes()
                .map(|x| NodeEntry {
                    id: x.0,
                    left: tree.left(x).map(|c| c.0),
                    right: tree.right(x).map(|c| c.0),
                })
                .collect(),
        }
    }

    pub fn into_tree(self) -> Result<TreeTopology> {
        let n = self.n as usize;
        if self.nodes.len() != n {
            return Err(Error::Format(format!(
                "declared n = {} but {} node entries",
                self.n,
                self.nodes.len()
            )));
        }
        let mut left = vec![None; n];
        let mut right = vec![None; n];
        let mut seen = vec![false; n];
        for e in self.nodes {
            let i = e.id as usize;
            if i >= n {
                return Err(Error::IdOutOfRange { id: e.id as u64, n });
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::Format(format!("node id {} listed twice", e.id)));
            }
            left[i] = e.left.map(NodeId);
            right[i] = e.right.map(NodeId);
        }
        let tree = TreeTopology::from_children(left, right)?;
        if tree.root().0 != self.root {
            return Err(Error::Format(format!(
                "declared root {} but the structure is rooted at {}",
                self.root,
                tree.root()
            )));
        }
        Ok(tree)
    }
}

pub fn tree_to_json(tree: &TreeTopology) -> String {
    serde_json::to_string(&TreeFile::from_tree(tree)).expect("tree serializes")
}

pub fn tree_from_json(text: &str) -> Result<TreeTopology> {
    serde_json::from_str::<TreeFile>(text)?.into_tree()
}

pub fn read_tree(path: &Path) -> Result<TreeTopology> {
    tree_from_json(&std::fs::read_to_string(path)?)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LayoutFile {
    #[serde(rename = "B")]
    pub block_size: u64,
    pub c: String,
    pub blocks: Vec<Vec<u32>>,
}

impl LayoutFile {
    pub fn from_assignment(a: &BlockAssignment) -> Self {
        LayoutFile {
            block_size: a.block_size(),
            c: format_ratio(a.c()),
            blocks: a.blocks().iter().map(|b| b.iter().map(|x| x.0).collect()).collect(),
        }
    }

    pub fn into_assignment(self, tree: &TreeTopology) -> Result<BlockAssignment> {
        let c = parse_ratio(&self.c)?;
        let blocks = self.blocks.into_iter().map(|b| b.into_iter().map(NodeId).collect()).collect();
        BlockAssignment::from_blocks(tree, self.block_size, c, blocks)
    }
}

/// Linear order by position; `null` marks an unused slot (padded exports).
#[derive(Debug, Serialize, Deserialize)]
pub struct OrderFile {
    pub order: Vec<Option<u32>>,
}

impl OrderFile {
    pub fn from_order(order: &LinearOrder) -> Self {
        OrderFile { order: order.nodes().iter().map(|x| Some(x.0)).collect() }
    }

    pub fn from_slots(slots: &[Option<NodeId>]) -> Self {
        OrderFile { order: slots.iter().map(|s| s.map(|x| x.0)).collect() }
    }

    /// Position of every node, validating that each node occupies exactly
    /// one slot.
    pub fn positions(&self, tree: &TreeTopology) -> Result<Vec<u64>> {
        let n = tree.len();
        let mut pos = vec![u64::MAX; n];
        for (i, slot) in self.order.iter().enumerate() {
            if let Some(id) = *slot {
                let x = id as usize;
                if x >= n {
                    return Err(Error::Mismatch(format!("order mentions node {id} but n = {n}")));
                }
                if pos[x] != u64::MAX {
                    return Err(Error::Mismatch(format!("node {id} appears twice in the order")));
                }
                pos[x] = i as u64;
            }
        }
        if let Some(x) = pos.iter().position(|&p| p == u64::MAX) {
            return Err(Error::Mismatch(format!("node {x} missing from the order")));
        }
        Ok(pos)
    }
}

/// Either kind of layout file, told apart by its keys.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum AnyLayout {
    Blocks(LayoutFile),
    Order(OrderFile),
}

pub fn read_layout(path: &Path) -> Result<AnyLayout> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// Parses `"num/den"` or a bare integer into a positive rational.
pub fn parse_ratio(text: &str) -> Result<Ratio<u64>> {
    let bad = || Error::InvalidParam(format!("expected a positive rational \"num/den\", got {text:?}"));
    let (num, den) = match text.trim().split_once('/') {
        Some((a, b)) => (a.trim().parse::<u64>(), b.trim().parse::<u64>()),
        None => (text.trim().parse::<u64>(), Ok(1)),
    };
    let (num, den) = (num.map_err(|_| bad())?, den.map_err(|_| bad())?);
    if num == 0 || den == 0 {
        return Err(bad());
    }
    Ok(Ratio::new(num, den))
}

pub fn format_ratio(r: Ratio<u64>) -> String {
    format!("{}/{}", r.numer(), r.denom())
}
