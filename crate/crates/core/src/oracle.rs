//! Exhaustive optimal layouts for tiny trees.
//!
//! Searches every partition of the relevant nodes (those on some root path to
//! depth `D`) into parts of at most `B` nodes, with no connectivity
//! requirement. Parts are numbered in first-occurrence order so each set
//! partition is visited once; branches that already reach the incumbent cost
//! are cut.

use crate::error::{Error, Result};
use crate::tree::{NodeId, TreeTopology};

pub const MAX_ORACLE_NODES: usize = 12;
pub const DEFAULT_STATE_BUDGET: u64 = 10_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleResult {
    /// Minimum over partitions of the worst cost at depth `D`.
    pub cost: u32,
    /// A partition attaining it, covering every node.
    pub witness: Vec<Vec<NodeId>>,
    /// Search states visited.
    pub states: u64,
}

struct Search<'a> {
    tree: &'a TreeTopology,
    block_size: usize,
    order: Vec<NodeId>,
    /// parent's index in `order`, if any
    parent_slot: Vec<Option<usize>>,
    /// whether the node sits at the target depth
    target: Vec<bool>,
    part: Vec<usize>,
    cost: Vec<u32>,
    part_sizes: Vec<usize>,
    best: u32,
    best_parts: Vec<usize>,
    floor: u32,
    states: u64,
    budget: u64,
}

impl Search<'_> {
    fn on_path(&self, mut slot: Option<usize>, p: usize) -> bool {
        while let Some(s) = slot {
            if self.part[s] == p {
                return true;
            }
            slot = self.parent_slot[s];
        }
        false
    }

    fn run(&mut self, i: usize, worst: u32) -> Result<()> {
        if self.best == self.floor {
            return Ok(());
        }
        if i == self.order.len() {
            if worst < self.best {
                self.best = worst;
                self.best_parts = self.part.clone();
            }
            return Ok(());
        }
        let parent = self.parent_slot[i];
        let base = parent.map_or(0, |s| self.cost[s]);
        let open = self.part_sizes.len();
        for p in 0..=open {
            if p < open && self.part_sizes[p] >= self.block_size {
                continue;
            }
            self.states += 1;
            if self.states > self.budget {
                return Err(Error::Budget(format!(
                    "more than {} search states for {} nodes at B = {}",
                    self.budget,
                    self.tree.len(),
                    self.block_size
                )));
            }
            let c = if p < open && self.on_path(parent, p) { base } else { base + 1 };
            if c >= self.best {
                continue;
            }
            let worst_here = if self.target[i] { worst.max(c) } else { worst };
            self.part[i] = p;
            self.cost[i] = c;
            if p == open {
                self.part_sizes.push(1);
            } else {
                self.part_sizes[p] += 1;
            }
            self.run(i + 1, worst_here)?;
            if p == open {
                self.part_sizes.pop();
            } else {
                self.part_sizes[p] -= 1;
            }
        }
        Ok(())
    }
}

/// Minimum worst-case transfers to depth `d` over all layouts with blocks of
/// at most `block_size` nodes.
pub fn brute_force_optimal(
    tree: &TreeTopology,
    block_size: u64,
    d: u32,
    state_budget: u64,
) -> Result<OracleResult> {
    if tree.len() > MAX_ORACLE_NODES {
        return Err(Error::Budget(format!(
            "{} nodes exceeds the oracle limit of {MAX_ORACLE_NODES}",
            tree.len()
        )));
    }
    if block_size == 0 {
        return Err(Error::InvalidParam("B must be positive".into()));
    }
    if d > tree.height() {
        return Err(Error::InvalidParam(format!(
            "depth {d} exceeds the tree height {}",
            tree.height()
        )));
    }

    // Relevant nodes: ancestors-or-self of depth-d nodes, in preorder.
    let mut relevant = vec![false; tree.len()];
    for x in tree.nodes().filter(|&x| tree.depth(x) == d) {
        let mut cur = Some(x);
        while let Some(y) = cur {
            if relevant[y.index()] {
                break;
            }
            relevant[y.index()] = true;
            cur = tree.parent(y);
        }
    }
    let order: Vec<NodeId> = tree.preorder().into_iter().filter(|x| relevant[x.index()]).collect();
    let mut slot_of = vec![usize::MAX; tree.len()];
    for (i, x) in order.iter().enumerate() {
        slot_of[x.index()] = i;
    }
    let parent_slot = order.iter().map(|&x| tree.parent(x).map(|p| slot_of[p.index()])).collect();
    let target = order.iter().map(|&x| tree.depth(x) == d).collect();

    let m = order.len();
    let floor = (d as u64 + 1).div_ceil(block_size) as u32;
    let mut search = Search {
        tree,
        block_size: block_size as usize,
        parent_slot,
        target,
        part: vec![0; m],
        cost: vec![0; m],
        part_sizes: Vec::new(),
        // all singletons: d + 1 transfers
        best: d + 1,
        best_parts: (0..m).collect(),
        floor,
        states: 0,
        budget: state_budget,
        order,
    };
    search.run(0, 0)?;

    let parts_used = search.best_parts.iter().copied().max().map_or(0, |p| p + 1);
    let mut witness: Vec<Vec<NodeId>> = vec![Vec::new(); parts_used];
    for (i, &p) in search.best_parts.iter().enumerate() {
        witness[p].push(search.order[i]);
    }
    for x in tree.preorder() {
        if !relevant[x.index()] {
            witness.push(vec![x]);
        }
    }
    Ok(OracleResult { cost: search.best, witness, states: search.states })
}
