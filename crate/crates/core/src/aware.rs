//! Two-phase block layout for a known block size `B`.
//!
//! Phase 1 clusters the top `⌈c·lg N⌉` levels like a B-tree over a perfect
//! tree. Every connected subtree below that boundary is a phase-2 tree, laid
//! out by repeatedly carving a root block `K(r, B)` that shares the remaining
//! capacity between the two children in proportion to their weights.
//!
//! Budgets are exact rationals. The carving loop tracks the budget per unit of
//! weight, `s(x) = A(x)/w(x)`, which obeys `s(child) = s(x) − 1/w(x)` for both
//! children, so the child budget `(A − 1)·w(c)/w(x)` equals `w(c)·s(child)`.
//! `s` is carried in `f64` together with a rigorous bound on its accumulated
//! rounding error; an inclusion decision that the bound cannot settle is
//! recomputed exactly from the block root.

use num_bigint::{BigInt, BigUint};
use num_rational::{BigRational, Ratio};
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::tree::{NodeId, TreeTopology, WeightTable};

/// Remaining root-block capacity, in nodes.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Budget(pub BigRational);

impl Budget {
    pub fn new(num: i64, den: i64) -> Self {
        Budget(BigRational::new(num.into(), den.into()))
    }

    pub fn whole(n: u64) -> Self {
        Budget(BigRational::from_integer(n.into()))
    }
}

/// A partition of the nodes into blocks of at most `B` nodes each.
///
/// Blocks are connected, and within a block nodes are kept in preorder so the
/// first entry is the block's topmost node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockAssignment {
    block_size: u64,
    c: Ratio<u64>,
    phase1_levels: u32,
    block_of: Vec<u32>,
    blocks: Vec<Vec<NodeId>>,
    phase2_roots: Vec<NodeId>,
}

impl BlockAssignment {
    /// Validates an externally supplied partition.
    pub fn from_blocks(
        tree: &TreeTopology,
        block_size: u64,
        c: Ratio<u64>,
        blocks: Vec<Vec<NodeId>>,
    ) -> Result<Self> {
        if block_size == 0 {
            return Err(Error::InvalidParam("B must be positive".into()));
        }
        let n = tree.len();
        let mut block_of = vec![u32::MAX; n];
        for (b, nodes) in blocks.iter().enumerate() {
            if nodes.is_empty() {
                return Err(Error::Mismatch(format!("block {b} is empty")));
            }
            if nodes.len() as u64 > block_size {
                return Err(Error::Mismatch(format!(
                    "block {b} holds {} nodes, more than B = {block_size}",
                    nodes.len()
                )));
            }
            for &x in nodes {
                if x.index() >= n {
                    return Err(Error::IdOutOfRange { id: x.0 as u64, n });
                }
                if block_of[x.index()] != u32::MAX {
                    return Err(Error::Mismatch(format!("node {x} stored twice")));
                }
                block_of[x.index()] = b as u32;
            }
        }
        if let Some(x) = block_of.iter().position(|&b| b == u32::MAX) {
            return Err(Error::Mismatch(format!("node {x} is not stored in any block")));
        }
        // Connected iff exactly one node per block has its parent outside.
        let mut tops = vec![0u32; blocks.len()];
        for x in tree.nodes() {
            let b = block_of[x.index()];
            if tree.parent(x).is_none_or(|p| block_of[p.index()] != b) {
                tops[b as usize] += 1;
            }
        }
        if let Some(b) = tops.iter().position(|&t| t != 1) {
            return Err(Error::Mismatch(format!("block {b} is not a connected subtree")));
        }
        let rank = tree.preorder_rank();
        let blocks = blocks
            .into_iter()
            .map(|mut v| {
                v.sort_by_key(|x| rank[x.index()]);
                v
            })
            .collect();
        Ok(Self {
            block_size,
            c,
            phase1_levels: 0,
            block_of,
            blocks,
            phase2_roots: Vec::new(),
        })
    }

    /// Renumbers blocks in preorder of their topmost nodes.
    fn finalize(
        tree: &TreeTopology,
        block_size: u64,
        c: Ratio<u64>,
        phase1_levels: u32,
        raw_block_of: &[u32],
        mut phase2_roots: Vec<NodeId>,
    ) -> Self {
        let mut remap = vec![u32::MAX; raw_block_of.iter().map(|&b| b as usize + 1).max().unwrap_or(0)];
        let mut block_of = vec![0u32; tree.len()];
        let mut blocks: Vec<Vec<NodeId>> = Vec::new();
        for x in tree.preorder() {
            let raw = raw_block_of[x.index()] as usize;
            if remap[raw] == u32::MAX {
                remap[raw] = blocks.len() as u32;
                blocks.push(Vec::new());
            }
            let b = remap[raw];
            block_of[x.index()] = b;
            blocks[b as usize].push(x);
        }
        let rank = tree.preorder_rank();
        phase2_roots.sort_by_key(|x| rank[x.index()]);
        Self { block_size, c, phase1_levels, block_of, blocks, phase2_roots }
    }

    pub fn block_size(&self) -> u64 {
        self.block_size
    }

    pub fn c(&self) -> Ratio<u64> {
        self.c
    }

    /// Number of top levels clustered by phase 1.
    pub fn phase1_levels(&self) -> u32 {
        self.phase1_levels
    }

    #[inline]
    pub fn block_of(&self, x: NodeId) -> u32 {
        self.block_of[x.index()]
    }

    pub fn block_ids(&self) -> &[u32] {
        &self.block_of
    }

    pub fn blocks(&self) -> &[Vec<NodeId>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Topmost node of block `b`.
    pub fn block_root(&self, b: u32) -> NodeId {
        self.blocks[b as usize][0]
    }

    /// Roots of the phase-2 trees, in preorder.
    pub fn phase2_roots(&self) -> &[NodeId] {
        &self.phase2_roots
    }

    /// Whether block `b` was carved by the phase-2 recursion.
    pub fn is_phase2_block(&self, tree: &TreeTopology, b: u32) -> bool {
        tree.depth(self.block_root(b)) >= self.phase1_levels
    }

    /// Each block laid out in its own aligned `B`-slot region, empty slots as
    /// `None`.
    pub fn padded_order(&self) -> Vec<Option<NodeId>> {
        let b = self.block_size as usize;
        let mut slots = vec![None; self.blocks.len() * b];
        for (i, block) in self.blocks.iter().enumerate() {
            for (j, &x) in block.iter().enumerate() {
                slots[i * b + j] = Some(x);
            }
        }
        slots
    }
}

/// Which nodes a carving pass may use, and the weights it divides budget by.
pub(crate) struct Scope<'a> {
    pub weight: &'a [u64],
    /// `(piece id per node, active piece)`; `None` admits every node.
    pub piece: Option<(&'a [u32], u32)>,
}

impl Scope<'_> {
    #[inline]
    fn admits(&self, x: NodeId) -> bool {
        self.piece.is_none_or(|(ids, p)| ids[x.index()] == p)
    }

    #[inline]
    fn w(&self, x: NodeId) -> u64 {
        self.weight[x.index()]
    }
}

const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;

/// Exact per-weight budget `s(c) = A/w(top) − Σ 1/w(y)` over `y` on the path
/// from `top` down to `c`'s parent.
fn exact_unit_budget(
    tree: &TreeTopology,
    scope: &Scope<'_>,
    top: NodeId,
    top_budget: &BigRational,
    c: NodeId,
) -> BigRational {
    let mut s = top_budget / BigInt::from(scope.w(top));
    let mut y = tree.parent(c).expect("carved child has a parent");
    loop {
        s -= BigRational::new(BigInt::one(), BigInt::from(scope.w(y)));
        if y == top {
            break;
        }
        y = tree.parent(y).expect("path stays below the block root");
    }
    s
}

/// Computes `K(top, budget)` inside `scope`. Appends the chosen nodes to
/// `chosen` (preorder) and the admitted children left outside to `frontier`.
pub(crate) fn carve(
    tree: &TreeTopology,
    scope: &Scope<'_>,
    top: NodeId,
    budget: &BigRational,
    chosen: &mut Vec<NodeId>,
    frontier: &mut Vec<NodeId>,
) {
    if *budget < BigRational::one() {
        frontier.push(top);
        return;
    }
    let u = UNIT_ROUNDOFF;
    let s0 = (budget / BigInt::from(scope.w(top))).to_f64().unwrap_or(f64::INFINITY);
    // (node, unit budget, error bound on the unit budget)
    let mut stack: Vec<(NodeId, f64, f64)> = vec![(top, s0, 4.0 * u * s0.abs())];
    while let Some((x, s, err)) = stack.pop() {
        chosen.push(x);
        let inv_w = 1.0 / scope.w(x) as f64;
        let s_child = s - inv_w;
        let err_child = err + 2.0 * u * (inv_w + s_child.abs());
        let kids: [Option<NodeId>; 2] = [tree.left(x), tree.right(x)];
        // right pushed first so the left subtree is carved first
        for c in kids.into_iter().rev().flatten() {
            if !scope.admits(c) {
                continue;
            }
            let inv_wc = 1.0 / scope.w(c) as f64;
            let slack = s_child - inv_wc;
            let guard = err_child + 2.0 * u * (inv_wc + slack.abs());
            let (keep, s_c, err_c) = if slack > guard {
                (true, s_child, err_child)
            } else if slack < -guard {
                (false, s_child, err_child)
            } else {
                let exact = exact_unit_budget(tree, scope, top, budget, c);
                let keep = &exact * BigInt::from(scope.w(c)) >= BigRational::one();
                let approx = exact.to_f64().unwrap_or(0.0);
                (keep, approx, 4.0 * u * approx.abs())
            };
            if keep {
                stack.push((c, s_c, err_c));
            } else {
                frontier.push(c);
            }
        }
    }
}

/// `K(x, A)`: the nodes that the budget `A` places in the root block of the
/// subtree at `x`, in preorder. Empty iff `A < 1`.
pub fn k_set(tree: &TreeTopology, weights: &WeightTable, x: NodeId, budget: &Budget) -> Vec<NodeId> {
    let scope = Scope { weight: weights.as_slice(), piece: None };
    let mut chosen = Vec::new();
    let mut frontier = Vec::new();
    if budget.0 >= BigRational::one() {
        carve(tree, &scope, x, &budget.0, &mut chosen, &mut frontier);
    }
    chosen
}

/// Lays out the subtree at `top` (restricted to `scope`) by repeated
/// carving with a fresh budget `B` at every block root. Blocks are returned
/// in discovery order, each in preorder.
pub(crate) fn carve_blocks(
    tree: &TreeTopology,
    scope: &Scope<'_>,
    top: NodeId,
    block_size: u64,
) -> Vec<Vec<NodeId>> {
    let full = BigRational::from_integer(BigInt::from(block_size));
    let mut blocks = Vec::new();
    let mut roots = vec![top];
    let mut frontier = Vec::new();
    while let Some(r) = roots.pop() {
        let mut block = Vec::new();
        frontier.clear();
        carve(tree, scope, r, &full, &mut block, &mut frontier);
        roots.extend(frontier.iter().rev());
        blocks.push(block);
    }
    blocks
}

/// Phase-2 layout of the subtree at `root`: root block `K(root, B)`, then the
/// same recursively for every child left outside a carved block.
pub fn phase2_layout(
    tree: &TreeTopology,
    weights: &WeightTable,
    root: NodeId,
    block_size: u64,
) -> Result<Vec<Vec<NodeId>>> {
    if block_size == 0 {
        return Err(Error::InvalidParam("B must be positive".into()));
    }
    if !tree.contains(root) {
        return Err(Error::IdOutOfRange { id: root.0 as u64, n: tree.len() });
    }
    let scope = Scope { weight: weights.as_slice(), piece: None };
    Ok(carve_blocks(tree, &scope, root, block_size))
}

/// Number of levels `⌈c·lg N⌉` clustered by phase 1, capped at the tree's
/// level count.
pub fn phase1_level_count(n: usize, c: Ratio<u64>, tree_levels: u32) -> u32 {
    if n <= 1 || c.is_zero() {
        return 0;
    }
    let (num, den) = (*c.numer(), *c.denom());
    // k = ⌈num·lg n / den⌉ = smallest k with 2^(k·den) ≥ n^num
    if num > 1 << 16 {
        return tree_levels;
    }
    let x = BigUint::from(n as u64).pow(num as u32);
    let bits = x.bits();
    let lg_ceil = if x.count_ones() == 1 { bits - 1 } else { bits };
    let k = lg_ceil.div_ceil(den);
    k.min(tree_levels as u64) as u32
}

/// Levels per phase-1 block: `⌊lg(B + 1)⌋`.
pub fn phase1_block_levels(block_size: u64) -> u32 {
    (block_size + 1).ilog2()
}

/// Output of phase 1: blocks over the top levels and the phase-2 roots below.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Phase1 {
    pub levels: u32,
    pub blocks: Vec<Vec<NodeId>>,
    pub phase2_roots: Vec<NodeId>,
}

/// B-tree clustering of the top `⌈c·lg N⌉` levels. Every block takes
/// `⌊lg(B+1)⌋` levels of a subtree, truncated at the phase-1 boundary.
pub fn phase1_layout(tree: &TreeTopology, block_size: u64, c: Ratio<u64>) -> Result<Phase1> {
    if block_size == 0 {
        return Err(Error::InvalidParam("B must be positive".into()));
    }
    let levels = phase1_level_count(tree.len(), c, tree.height() + 1);
    let stride = phase1_block_levels(block_size);
    let mut blocks = Vec::new();
    let mut phase2_roots = Vec::new();
    if levels == 0 {
        phase2_roots.push(tree.root());
        return Ok(Phase1 { levels, blocks, phase2_roots });
    }
    let mut roots = vec![tree.root()];
    while let Some(r) = roots.pop() {
        let bottom = (tree.depth(r) + stride).min(levels);
        let mut block = Vec::new();
        let mut stack = vec![r];
        let mut below = Vec::new();
        while let Some(x) = stack.pop() {
            block.push(x);
            for c in [tree.right(x), tree.left(x)].into_iter().flatten() {
                if tree.depth(c) < bottom {
                    stack.push(c);
                } else {
                    below.push(c);
                }
            }
        }
        for c in below.into_iter().rev() {
            if tree.depth(c) < levels {
                roots.push(c);
            } else {
                phase2_roots.push(c);
            }
        }
        blocks.push(block);
    }
    Ok(Phase1 { levels, blocks, phase2_roots })
}

/// Full two-phase layout. Block ids follow preorder of block roots.
pub fn layout_aware(tree: &TreeTopology, block_size: u64, c: Ratio<u64>) -> Result<BlockAssignment> {
    let weights = WeightTable::compute(tree);
    layout_aware_with(tree, &weights, block_size, c)
}

pub fn layout_aware_with(
    tree: &TreeTopology,
    weights: &WeightTable,
    block_size: u64,
    c: Ratio<u64>,
) -> Result<BlockAssignment> {
    let phase1 = phase1_layout(tree, block_size, c)?;
    let mut raw = vec![u32::MAX; tree.len()];
    let mut next = 0u32;
    for block in &phase1.blocks {
        for &x in block {
            raw[x.index()] = next;
        }
        next += 1;
    }
    let scope = Scope { weight: weights.as_slice(), piece: None };
    for &r in &phase1.phase2_roots {
        for block in carve_blocks(tree, &scope, r, block_size) {
            for &x in &block {
                raw[x.index()] = next;
            }
            next += 1;
        }
    }
    Ok(BlockAssignment::finalize(tree, block_size, c, phase1.levels, &raw, phase1.phase2_roots))
}

/// The whole tree laid out by phase 2 alone, as if phase 1 clustered nothing.
pub fn layout_phase2_only(tree: &TreeTopology, block_size: u64) -> Result<BlockAssignment> {
    let weights = WeightTable::compute(tree);
    let blocks = phase2_layout(tree, &weights, tree.root(), block_size)?;
    let mut raw = vec![0u32; tree.len()];
    for (i, block) in blocks.iter().enumerate() {
        for &x in block {
            raw[x.index()] = i as u32;
        }
    }
    Ok(BlockAssignment::finalize(
        tree,
        block_size,
        Ratio::from_integer(0),
        0,
        &raw,
        vec![tree.root()],
    ))
}
