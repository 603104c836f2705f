//! A single block-size-independent node order built by nested refinement.
//!
//! Block sizes run through `2^(2^i)`, so each refinement step halves the
//! number of levels a block spans. The coarsest level is the two-phase layout
//! at the first such size that holds the tree. Each finer level re-carves
//! every block of the previous level on its own, treating the block as a
//! standalone tree with its own subtree weights. Sub-blocks are ordered by
//! the preorder rank of their roots, so every level's blocks stay contiguous
//! in the final order.
//!
//! Halving `B` at every step instead would shave one level off each block per
//! step, and the leftover single-node blocks pile up along deep paths.

use num_rational::Ratio;

use crate::aware::{carve_blocks, layout_aware_with, Scope};
use crate::error::{Error, Result};
use crate::tree::{NodeId, TreeTopology, WeightTable};

/// A bijection between nodes and positions `0..N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearOrder {
    order: Vec<NodeId>,
    position: Vec<u64>,
}

impl LinearOrder {
    pub fn new(tree: &TreeTopology, order: Vec<NodeId>) -> Result<Self> {
        let n = tree.len();
        if order.len() != n {
            return Err(Error::Mismatch(format!("order has {} entries for {n} nodes", order.len())));
        }
        let mut position = vec![u64::MAX; n];
        for (i, &x) in order.iter().enumerate() {
            if x.index() >= n {
                return Err(Error::IdOutOfRange { id: x.0 as u64, n });
            }
            if position[x.index()] != u64::MAX {
                return Err(Error::Mismatch(format!("node {x} appears twice in the order")));
            }
            position[x.index()] = i as u64;
        }
        Ok(Self { order, position })
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.order
    }

    pub fn positions(&self) -> &[u64] {
        &self.position
    }

    #[inline]
    pub fn position(&self, x: NodeId) -> u64 {
        self.position[x.index()]
    }

    pub fn blocks_at(&self, block_size: u64, offset: u64) -> Vec<u32> {
        blocks_at(&self.position, block_size, offset)
    }
}

/// Aligned block of every node: `⌊(position + offset) / B⌋`.
pub fn blocks_at(positions: &[u64], block_size: u64, offset: u64) -> Vec<u32> {
    assert!(block_size > 0, "B must be positive");
    positions.iter().map(|&p| ((p + offset) / block_size) as u32).collect()
}

fn ceil_lg(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        (n - 1).ilog2() + 1
    }
}

/// Block sizes used by the refinement, coarsest first: `2^(2^i)` for
/// `i = 0, 1, …`, up to the first one that holds the whole tree.
pub fn refinement_levels(n: usize) -> Vec<u64> {
    let mut levels = Vec::new();
    if n <= 1 {
        return levels;
    }
    let lg = ceil_lg(n);
    let mut e = 1u32;
    loop {
        levels.push(1u64 << e.min(63));
        if e >= lg {
            break;
        }
        e *= 2;
    }
    levels.reverse();
    levels
}

pub fn layout_oblivious(tree: &TreeTopology) -> LinearOrder {
    let order = refine(tree, |_, _| {});
    LinearOrder::new(tree, order).expect("refinement covers every node once")
}

/// The blocks of every refinement level, coarsest first, each level listed in
/// final order.
pub fn refinement_blocks(tree: &TreeTopology) -> Vec<(u64, Vec<Vec<NodeId>>)> {
    let mut levels = Vec::new();
    refine(tree, |b, pieces| levels.push((b, pieces.to_vec())));
    levels
}

fn refine(tree: &TreeTopology, mut visit: impl FnMut(u64, &[Vec<NodeId>])) -> Vec<NodeId> {
    let n = tree.len();
    let levels = refinement_levels(n);
    let Some((&top_b, finer)) = levels.split_first() else {
        return vec![tree.root()];
    };

    let weights = WeightTable::compute(tree);
    let top = layout_aware_with(tree, &weights, top_b, Ratio::from_integer(1))
        .expect("positive block size");
    let mut pieces: Vec<Vec<NodeId>> = top.blocks().to_vec();
    visit(top_b, &pieces);
    let rank = tree.preorder_rank();
    let mut piece_of = vec![0u32; n];
    let mut local_w = vec![0u64; n];

    for &b in finer {
        for (i, piece) in pieces.iter().enumerate() {
            for &x in piece {
                piece_of[x.index()] = i as u32;
            }
        }
        let mut next = Vec::with_capacity(pieces.len());
        for (i, piece) in pieces.iter().enumerate() {
            if piece.len() == 1 {
                next.push(piece.clone());
                continue;
            }
            // Pieces are in preorder: children come after their parent.
            for &x in piece {
                local_w[x.index()] = 1;
            }
            for &x in piece[1..].iter().rev() {
                let p = tree.parent(x).expect("non-root piece node has a parent");
                local_w[p.index()] += local_w[x.index()];
            }
            let scope = Scope { weight: &local_w, piece: Some((&piece_of, i as u32)) };
            let mut sub = carve_blocks(tree, &scope, piece[0], b);
            sub.sort_by_key(|blk| rank[blk[0].index()]);
            next.extend(sub);
        }
        pieces = next;
        visit(b, &pieces);
    }
    pieces.into_iter().flatten().collect()
}
