//! Immutable fixed-topology binary trees and their subtree weights.

use std::collections::VecDeque;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const NONE: u32 = u32::MAX;

/// Dense node identifier in `0..N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

#[inline]
fn opt(raw: u32) -> Option<NodeId> {
    (raw != NONE).then_some(NodeId(raw))
}

/// A validated binary tree. Parents and depths are derived at construction
/// and the topology never changes afterwards.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeTopology {
    root: NodeId,
    left: Vec<u32>,
    right: Vec<u32>,
    parent: Vec<u32>,
    depth: Vec<u32>,
    height: u32,
}

impl TreeTopology {
    /// Builds a tree on `n` nodes from `(parent, child, side)` edges.
    pub fn from_edges(n: usize, edges: &[(u32, u32, Side)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParam("a tree needs at least one node".into()));
        }
        let mut left = vec![NONE; n];
        let mut right = vec![NONE; n];
        for &(p, c, side) in edges {
            for id in [p, c] {
                if id as usize >= n || id == NONE {
                    return Err(Error::IdOutOfRange { id: id as u64, n });
                }
            }
            let (slot, other) = match side {
                Side::Left => (&mut left[p as usize], right[p as usize]),
                Side::Right => (&mut right[p as usize], left[p as usize]),
            };
            if *slot != NONE {
                if other != NONE {
                    return Err(Error::TooManyChildren { parent: NodeId(p) });
                }
                return Err(Error::DuplicateChildSlot { parent: NodeId(p), side: side.name() });
            }
            *slot = c;
        }
        Self::from_slots(left, right)
    }

    /// Builds a tree from per-node child slots.
    pub fn from_children(left: Vec<Option<NodeId>>, right: Vec<Option<NodeId>>) -> Result<Self> {
        let n = left.len();
        if right.len() != n {
            return Err(Error::Format("left and right slot arrays differ in length".into()));
        }
        let conv = |v: Vec<Option<NodeId>>| -> Result<Vec<u32>> {
            v.into_iter()
                .map(|c| match c {
                    None => Ok(NONE),
                    Some(c) if c.index() < n && c.0 != NONE => Ok(c.0),
                    Some(c) => Err(Error::IdOutOfRange { id: c.0 as u64, n }),
                })
                .collect()
        };
        Self::from_slots(conv(left)?, conv(right)?)
    }

    pub(crate) fn from_slots(left: Vec<u32>, right: Vec<u32>) -> Result<Self> {
        let n = left.len();
        if n == 0 {
            return Err(Error::InvalidParam("a tree needs at least one node".into()));
        }
        let mut parent = vec![NONE; n];
        for p in 0..n {
            for c in [left[p], right[p]] {
                if c == NONE {
                    continue;
                }
                if c as usize == p {
                    return Err(Error::Cycle(NodeId(c)));
                }
                if parent[c as usize] != NONE {
                    return Err(Error::MultipleParents(NodeId(c)));
                }
                parent[c as usize] = p as u32;
            }
        }
        let mut roots = (0..n as u32).filter(|&x| parent[x as usize] == NONE);
        let root = match roots.next() {
            Some(r) => r,
            None => return Err(Error::Cycle(NodeId(0))),
        };
        if let Some(other) = roots.next() {
            return Err(Error::Disconnected(NodeId(other)));
        }

        let mut depth = vec![NONE; n];
        depth[root as usize] = 0;
        let mut height = 0;
        let mut queue = VecDeque::from([root]);
        while let Some(x) = queue.pop_front() {
            let d = depth[x as usize];
            height = height.max(d);
            for c in [left[x as usize], right[x as usize]] {
                if c != NONE {
                    depth[c as usize] = d + 1;
                    queue.push_back(c);
                }
            }
        }
        // One root and every other node has exactly one parent, so anything
        // unreachable sits on a parent cycle.
        if let Some(x) = depth.iter().position(|&d| d == NONE) {
            return Err(Error::Cycle(NodeId(x as u32)));
        }

        Ok(Self { root: NodeId(root), left, right, parent, depth, height })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.left.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn root(&self) -> NodeId {
        self.root
    }

    #[inline]
    pub fn left(&self, x: NodeId) -> Option<NodeId> {
        opt(self.left[x.index()])
    }

    #[inline]
    pub fn right(&self, x: NodeId) -> Option<NodeId> {
        opt(self.right[x.index()])
    }

    #[inline]
    pub fn parent(&self, x: NodeId) -> Option<NodeId> {
        opt(self.parent[x.index()])
    }

    #[inline]
    pub fn depth(&self, x: NodeId) -> u32 {
        self.depth[x.index()]
    }

    /// Depth of the deepest node.
    #[inline]
    pub fn height(&self) -> u32 {
        self.height
    }

    /// Left child first, then right.
    #[inline]
    pub fn children(&self, x: NodeId) -> impl Iterator<Item = NodeId> {
        [self.left[x.index()], self.right[x.index()]].into_iter().filter_map(opt)
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.len() as u32).map(NodeId)
    }

    pub fn contains(&self, x: NodeId) -> bool {
        x.index() < self.len()
    }

    /// Nodes of the subtree at `top` in preorder (node, left subtree, right subtree).
    pub fn preorder_from(&self, top: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![top];
        while let Some(x) = stack.pop() {
            out.push(x);
            if let Some(r) = self.right(x) {
                stack.push(r);
            }
            if let Some(l) = self.left(x) {
                stack.push(l);
            }
        }
        out
    }

    pub fn preorder(&self) -> Vec<NodeId> {
        self.preorder_from(self.root)
    }

    /// Preorder rank of every node.
    pub fn preorder_rank(&self) -> Vec<u32> {
        let mut rank = vec![0; self.len()];
        for (i, x) in self.preorder().into_iter().enumerate() {
            rank[x.index()] = i as u32;
        }
        rank
    }

    /// Whether `x` lies in the subtree rooted at `top` (inclusive).
    pub fn in_subtree(&self, x: NodeId, top: NodeId) -> bool {
        let target = self.depth(top);
        let mut cur = x;
        while self.depth(cur) > target {
            match self.parent(cur) {
                Some(p) => cur = p,
                None => return false,
            }
        }
        cur == top
    }

    /// Nodes from the root down to `x`, inclusive.
    pub fn root_path(&self, x: NodeId) -> Vec<NodeId> {
        let mut path = vec![x];
        let mut cur = x;
        while let Some(p) = self.parent(cur) {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    /// Number of nodes at each depth `0..=height`.
    pub fn level_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.height as usize + 1];
        for &d in &self.depth {
            sizes[d as usize] += 1;
        }
        sizes
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes().filter(|&x| self.children(x).next().is_none()).count()
    }
}

/// Subtree sizes `w(x)`, with `w(null) = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightTable {
    w: Vec<u64>,
}

impl WeightTable {
    pub fn compute(tree: &TreeTopology) -> Self {
        let mut w = vec![1u64; tree.len()];
        for x in tree.preorder().into_iter().rev() {
            if let Some(p) = tree.parent(x) {
                w[p.index()] += w[x.index()];
            }
        }
        Self { w }
    }

    #[inline]
    pub fn get(&self, x: NodeId) -> u64 {
        self.w[x.index()]
    }

    #[inline]
    pub fn of(&self, x: Option<NodeId>) -> u64 {
        x.map_or(0, |x| self.get(x))
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.w
    }
}

/// Fraction `w(x)/w(r)` of a subtree's population living below `x`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Density(pub BigRational);

impl Density {
    pub fn to_f64(&self) -> f64 {
        use num_traits::ToPrimitive;
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

pub fn density(
    tree: &TreeTopology,
    weights: &WeightTable,
    node: NodeId,
    subtree_root: NodeId,
) -> Result<Density> {
    for id in [node, subtree_root] {
        if !tree.contains(id) {
            return Err(Error::IdOutOfRange { id: id.0 as u64, n: tree.len() });
        }
    }
    if !tree.in_subtree(node, subtree_root) {
        return Err(Error::NotInSubtree(node, subtree_root));
    }
    Ok(Density(BigRational::new(
        BigInt::from(weights.get(node)),
        BigInt::from(weights.get(subtree_root)),
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;
    use Side::*;

    fn perfect7() -> TreeTopology {
        TreeTopology::from_edges(
            7,
            &[(0, 1, Left), (0, 2, Right), (1, 3, Left), (1, 4, Right), (2, 5, Left), (2, 6, Right)],
        )
        .unwrap()
    }

    #[test]
    fn single_node() {
        let t = TreeTopology::from_edges(1, &[]).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.depth(t.root()), 0);
        assert_eq!(WeightTable::compute(&t).get(t.root()), 1);
    }

    #[test]
    fn three_nodes() {
        let t = TreeTopology::from_edges(3, &[(0, 1, Left), (0, 2, Right)]).unwrap();
        assert_eq!(t.root(), NodeId(0));
        let depths: Vec<_> = t.nodes().map(|x| t.depth(x)).collect();
        assert_eq!(depths, vec![0, 1, 1]);
    }

    #[test]
    fn rejects_cycle() {
        let e = TreeTopology::from_edges(2, &[(0, 1, Left), (1, 0, Right)]).unwrap_err();
        assert!(matches!(e, Error::Cycle(_)), "{e}");
        // root plus a detached 2-cycle
        let e = TreeTopology::from_edges(3, &[(1, 2, Left), (2, 1, Left)]).unwrap_err();
        assert!(matches!(e, Error::Cycle(_)), "{e}");
    }

    #[test]
    fn rejects_bad_slots() {
        let e = TreeTopology::from_edges(3, &[(0, 1, Left), (0, 2, Left)]).unwrap_err();
        assert!(matches!(e, Error::DuplicateChildSlot { .. }));
        let e =
            TreeTopology::from_edges(4, &[(0, 1, Left), (0, 2, Right), (0, 3, Left)]).unwrap_err();
        assert!(matches!(e, Error::TooManyChildren { .. }));
        let e = TreeTopology::from_edges(3, &[(0, 2, Left), (1, 2, Left)]).unwrap_err();
        assert!(matches!(e, Error::MultipleParents(_)));
        let e = TreeTopology::from_edges(3, &[(0, 1, Left)]).unwrap_err();
        assert!(matches!(e, Error::Disconnected(NodeId(2))));
        let e = TreeTopology::from_edges(2, &[(0, 5, Left)]).unwrap_err();
        assert!(matches!(e, Error::IdOutOfRange { .. }));
        assert!(TreeTopology::from_edges(0, &[]).is_err());
    }

    #[test]
    fn weights_perfect_and_path() {
        let t = perfect7();
        let w = WeightTable::compute(&t);
        assert_eq!(w.get(NodeId(0)), 7);
        assert_eq!((w.get(NodeId(1)), w.get(NodeId(2))), (3, 3));
        assert!((3..7).all(|i| w.get(NodeId(i)) == 1));

        let p = TreeTopology::from_edges(4, &[(0, 1, Left), (1, 2, Left), (2, 3, Left)]).unwrap();
        let w = WeightTable::compute(&p);
        assert_eq!(w.as_slice(), &[4, 3, 2, 1]);
    }

    #[test]
    fn densities() {
        let t = perfect7();
        let w = WeightTable::compute(&t);
        assert!(density(&t, &w, NodeId(0), NodeId(0)).unwrap().0.is_one());
        let d = density(&t, &w, NodeId(1), NodeId(0)).unwrap();
        assert_eq!(d.0, BigRational::new(3.into(), 7.into()));
        assert!(matches!(
            density(&t, &w, NodeId(5), NodeId(1)),
            Err(Error::NotInSubtree(_, _))
        ));

        let p = TreeTopology::from_edges(4, &[(0, 1, Left), (1, 2, Left), (2, 3, Left)]).unwrap();
        let w = WeightTable::compute(&p);
        let d = density(&p, &w, NodeId(3), NodeId(0)).unwrap();
        assert_eq!(d.0, BigRational::new(1.into(), 4.into()));
    }

    #[test]
    fn preorder_and_paths() {
        let t = perfect7();
        let pre: Vec<u32> = t.preorder().into_iter().map(|x| x.0).collect();
        assert_eq!(pre, vec![0, 1, 3, 4, 2, 5, 6]);
        assert_eq!(t.root_path(NodeId(5)), vec![NodeId(0), NodeId(2), NodeId(5)]);
        assert!(t.in_subtree(NodeId(6), NodeId(2)));
        assert!(!t.in_subtree(NodeId(6), NodeId(1)));
        assert_eq!(t.level_sizes(), vec![1, 2, 4]);
    }
}
