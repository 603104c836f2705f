//! Block-transfer counting along root-to-node paths.
//!
//! A downward traversal touches each block at most once, so the cost of
//! reaching a node is the number of distinct block ids on its root path.

use std::fmt;
use std::io::Write;

use crate::aware::BlockAssignment;
use crate::error::{Error, Result};
use crate::tree::{NodeId, TreeTopology, WeightTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LayoutKind {
    Aware,
    Oblivious,
    External,
}

impl fmt::Display for LayoutKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LayoutKind::Aware => "aware",
            LayoutKind::Oblivious => "oblivious",
            LayoutKind::External => "external",
        })
    }
}

/// Transfers needed to reach `node` from the root.
pub fn path_cost(tree: &TreeTopology, block_of: &[u32], node: NodeId) -> Result<u32> {
    if !tree.contains(node) {
        return Err(Error::IdOutOfRange { id: node.0 as u64, n: tree.len() });
    }
    let path = tree.root_path(node);
    let mut ids: Vec<u32> = path.iter().map(|x| block_of[x.index()]).collect();
    ids.sort_unstable();
    ids.dedup();
    Ok(ids.len() as u32)
}

/// Path cost of every node, from one depth-first pass that keeps a count of
/// each block id on the current root path.
pub fn cost_profile(tree: &TreeTopology, block_of: &[u32]) -> Vec<u32> {
    assert_eq!(block_of.len(), tree.len(), "one block id per node");
    let max_id = block_of.iter().copied().max().unwrap_or(0) as usize;
    let mut on_path = vec![0u32; max_id + 1];
    let mut cost = vec![0u32; tree.len()];
    let mut distinct = 0u32;
    // (node, leaving)
    let mut stack = vec![(tree.root(), false)];
    while let Some((x, leaving)) = stack.pop() {
        let b = block_of[x.index()] as usize;
        if leaving {
            on_path[b] -= 1;
            if on_path[b] == 0 {
                distinct -= 1;
            }
            continue;
        }
        if on_path[b] == 0 {
            distinct += 1;
        }
        on_path[b] += 1;
        cost[x.index()] = distinct;
        stack.push((x, true));
        for c in tree.children(x) {
            stack.push((c, false));
        }
    }
    cost
}

/// Worst-case cost at one depth.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DepthCost {
    pub depth: u32,
    /// Max over nodes at exactly this depth.
    pub worst_exact: u32,
    /// Max over nodes at this depth or shallower.
    pub worst_cum: u32,
    /// A node attaining `worst_exact`.
    pub argmax: NodeId,
}

/// Per-depth worst cases for every depth `0..=height`.
pub fn worst_case_by_depth(tree: &TreeTopology, block_of: &[u32]) -> Vec<DepthCost> {
    let cost = cost_profile(tree, block_of);
    let mut out: Vec<Option<(u32, NodeId)>> = vec![None; tree.height() as usize + 1];
    for x in tree.nodes() {
        let slot = &mut out[tree.depth(x) as usize];
        let c = cost[x.index()];
        if slot.is_none_or(|(best, arg)| c > best || (c == best && x < arg)) {
            *slot = Some((c, x));
        }
    }
    let mut cum = 0;
    out.into_iter()
        .enumerate()
        .map(|(d, e)| {
            let (worst, argmax) = e.expect("every depth up to the height is populated");
            cum = cum.max(worst);
            DepthCost { depth: d as u32, worst_exact: worst, worst_cum: cum, argmax }
        })
        .collect()
}

/// Worst case at depth `d`. Depths past the tree height are capped at the
/// height; the flag reports whether that happened.
pub fn worst_case_cost(tree: &TreeTopology, block_of: &[u32], d: u32) -> (DepthCost, bool) {
    let all = worst_case_by_depth(tree, block_of);
    let capped = d > tree.height();
    (all[d.min(tree.height()) as usize], capped)
}

/// Per-depth transfer counts of one layout at one block size.
#[derive(Clone, Debug, PartialEq)]
pub struct CostReport {
    pub tree_id: String,
    pub block_size: u64,
    pub layout: LayoutKind,
    pub offset: u64,
    pub depths: Vec<DepthCost>,
}

/// Outcome of re-deriving the exclusion inequality at every phase-2 block
/// boundary of a layout.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExclusionCheck {
    pub boundaries: u64,
    /// `(first node outside the block, block root)` pairs that fail.
    pub violations: Vec<(NodeId, NodeId)>,
}

/// For every child `x_k` left outside a phase-2 block rooted at `x_0`, checks
/// `k > B·p_k − 1` with `p_k = w(x_k)/w(x_0)`, in integers:
/// `(k + 1)·w(x_0) > B·w(x_k)`.
pub fn exclusion_check(
    tree: &TreeTopology,
    weights: &WeightTable,
    layout: &BlockAssignment,
) -> ExclusionCheck {
    let b = layout.block_size() as u128;
    let mut check = ExclusionCheck::default();
    for x in tree.nodes() {
        let Some(p) = tree.parent(x) else { continue };
        let pb = layout.block_of(p);
        if pb == layout.block_of(x) || !layout.is_phase2_block(tree, pb) {
            continue;
        }
        check.boundaries += 1;
        let top = layout.block_root(pb);
        let k = (tree.depth(x) - tree.depth(top)) as u128;
        if (k + 1) * weights.get(top) as u128 <= b * weights.get(x) as u128 {
            check.violations.push((x, top));
        }
    }
    check
}

/// One CSV row of a cost sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct CostRow {
    pub tree_id: String,
    pub family: String,
    pub n: u64,
    pub block_size: u64,
    pub layout: LayoutKind,
    pub offset: u64,
    pub depth: u32,
    pub worst_exact: u32,
    pub worst_cum: u32,
    pub bound: f64,
    pub ratio: f64,
}

pub const CSV_HEADER: &str = "tree_id,family,N,B,layout,offset,D,worst_exact,worst_cum,bound,ratio";

impl CostRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{:.6},{:.6}",
            self.tree_id,
            self.family,
            self.n,
            self.block_size,
            self.layout,
            self.offset,
            self.depth,
            self.worst_exact,
            self.worst_cum,
            self.bound,
            self.ratio
        )
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "tree_id": self.tree_id,
            "family": self.family,
            "N": self.n,
            "B": self.block_size,
            "layout": self.layout.to_string(),
            "offset": self.offset,
            "D": self.depth,
            "worst_exact": self.worst_exact,
            "worst_cum": self.worst_cum,
            "bound": self.bound,
            "ratio": self.ratio,
        })
    }
}

pub fn write_csv<W: Write>(mut out: W, rows: &[CostRow]) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.csv_line())?;
    }
    Ok(())
}
