//! Tree generators: perfect trees, paths, uniformly random shapes, the
//! recursive adversarial construction, and exhaustive shape enumeration.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tree::TreeTopology;

const NONE: u32 = u32::MAX;

/// Largest perfect-tree height accepted by [`gen_perfect`].
pub const MAX_PERFECT_HEIGHT: u32 = 40;

/// Node ids are 32-bit, which caps perfect trees well below the nominal guard.
const MAX_ID_HEIGHT: u32 = 30;

struct Builder {
    left: Vec<u32>,
    right: Vec<u32>,
}

impl Builder {
    fn with_capacity(n: usize) -> Self {
        Self { left: Vec::with_capacity(n), right: Vec::with_capacity(n) }
    }

    fn push(&mut self, parent: Option<(u32, bool)>) -> u32 {
        let id = self.left.len() as u32;
        self.left.push(NONE);
        self.right.push(NONE);
        if let Some((p, is_right)) = parent {
            if is_right {
                self.right[p as usize] = id;
            } else {
                self.left[p as usize] = id;
            }
        }
        id
    }

    fn finish(self) -> TreeTopology {
        TreeTopology::from_slots(self.left, self.right).expect("generator produced a valid tree")
    }
}

/// Perfect tree with all leaves at depth `height`, ids in level order.
pub fn gen_perfect(height: u32) -> Result<TreeTopology> {
    if height > MAX_PERFECT_HEIGHT {
        return Err(Error::InvalidParam(format!(
            "height {height} exceeds the guard of {MAX_PERFECT_HEIGHT}"
        )));
    }
    if height > MAX_ID_HEIGHT {
        return Err(Error::InvalidParam(format!(
            "height {height} overflows 32-bit node ids (max {MAX_ID_HEIGHT})"
        )));
    }
    let n = (1u64 << (height + 1)) - 1;
    let internal = (n - 1) / 2;
    let mut left = vec![NONE; n as usize];
    let mut right = vec![NONE; n as usize];
    for k in 0..internal {
        left[k as usize] = (2 * k + 1) as u32;
        right[k as usize] = (2 * k + 2) as u32;
    }
    TreeTopology::from_slots(left, right)
}

/// Chain of `n` nodes, each the left child of the previous one.
pub fn gen_path(n: usize) -> Result<TreeTopology> {
    if n == 0 {
        return Err(Error::InvalidParam("path length must be at least 1".into()));
    }
    let mut left = vec![NONE; n];
    for (i, slot) in left.iter_mut().enumerate().take(n - 1) {
        *slot = (i + 1) as u32;
    }
    TreeTopology::from_slots(left, vec![NONE; n])
}

/// Uniformly random binary-tree shape on `n` nodes.
///
/// A uniform arrangement of `n` up-steps and `n + 1` down-steps is rotated by
/// the cycle lemma into a Dyck word followed by one extra down-step; the Dyck
/// word maps to a tree via `T = ε | ( T ) T`. Ids follow preorder.
pub fn gen_random(n: usize, seed: u64) -> Result<TreeTopology> {
    if n == 0 {
        return Err(Error::InvalidParam("random tree size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut steps: Vec<bool> = (0..2 * n + 1).map(|i| i < n).collect();
    steps.shuffle(&mut rng);

    // Rotate to start right after the first minimum prefix sum.
    let (mut sum, mut min, mut argmin) = (0i64, 0i64, 0usize);
    for (i, &up) in steps.iter().enumerate() {
        sum += if up { 1 } else { -1 };
        if sum < min {
            min = sum;
            argmin = i + 1;
        }
    }
    let len = steps.len();
    steps.rotate_left(argmin % len);
    debug_assert!(!steps[2 * n]);
    steps.truncate(2 * n);

    Ok(dyck_to_tree(&steps))
}

/// Maps a Dyck word (`true` = open) to a binary tree: the node opened at
/// position `i` has its left child opened at `i + 1`, and its right child
/// opened right after its matching close.
fn dyck_to_tree(word: &[bool]) -> TreeTopology {
    let n = word.len() / 2;
    let mut b = Builder::with_capacity(n);
    // Stack of open nodes; `pending` is where the next opened node attaches.
    let mut stack: Vec<u32> = Vec::new();
    let mut pending: Option<(u32, bool)> = None;
    for &open in word {
        if open {
            let id = b.push(pending);
            stack.push(id);
            pending = Some((id, false));
        } else {
            let id = stack.pop().expect("balanced word");
            pending = Some((id, true));
        }
    }
    b.finish()
}

/// Path length used by the adversarial gadget: `round(B / inv_p)`, at least 1.
pub fn gadget_path_len(block: u64, inv_p: u64) -> u64 {
    ((block + inv_p / 2) / inv_p).max(1)
}

/// Node count of one adversarial gadget: `2·inv_p − 1 + inv_p·L`.
pub fn gadget_size(block: u64, inv_p: u64) -> u64 {
    2 * inv_p - 1 + inv_p * gadget_path_len(block, inv_p)
}

/// Recursive lower-bound construction: a complete binary tree with `inv_p`
/// leaves, each leaf extended by a path of `L` nodes, each path end rooting a
/// further copy. Gadgets are added breadth-first, left to right, while they
/// fit in `target_n`; the remainder becomes one partial gadget (a
/// breadth-first prefix of the gadget).
pub fn gen_lower_bound(block: u64, inv_p: u64, target_n: u64) -> Result<TreeTopology> {
    if block == 0 {
        return Err(Error::InvalidParam("B must be positive".into()));
    }
    if inv_p < 2 || !inv_p.is_power_of_two() {
        return Err(Error::InvalidParam(format!("inv_p = {inv_p} is not a power of two >= 2")));
    }
    let path_len = gadget_path_len(block, inv_p);
    let size = gadget_size(block, inv_p);
    if target_n < size {
        return Err(Error::InvalidParam(format!(
            "target_n = {target_n} is smaller than one gadget ({size} nodes)"
        )));
    }
    if target_n >= NONE as u64 {
        return Err(Error::InvalidParam(format!("target_n = {target_n} overflows node ids")));
    }

    // Gadget template in breadth-first order: (local parent, is_right).
    let mut template: Vec<Option<(usize, bool)>> = Vec::with_capacity(size as usize);
    let complete = (2 * inv_p - 1) as usize;
    template.push(None);
    for k in 1..complete {
        template.push(Some(((k - 1) / 2, k % 2 == 0)));
    }
    let first_leaf = inv_p as usize - 1;
    let mut tails: Vec<usize> = (first_leaf..complete).collect();
    for _ in 0..path_len {
        for tail in tails.iter_mut() {
            let id = template.len();
            template.push(Some((*tail, false)));
            *tail = id;
        }
    }
    debug_assert_eq!(template.len() as u64, size);

    let mut b = Builder::with_capacity(target_n as usize);
    let mut attach: std::collections::VecDeque<Option<u32>> = [None].into();
    let mut remaining = target_n;
    while remaining > 0 {
        let anchor = attach.pop_front().expect("every gadget exposes attach points");
        let take = remaining.min(size) as usize;
        let mut ids = Vec::with_capacity(take);
        for slot in &template[..take] {
            let parent = match slot {
                None => anchor.map(|a| (a, false)),
                Some((p, is_right)) => Some((ids[*p], *is_right)),
            };
            ids.push(b.push(parent));
        }
        if take == size as usize {
            attach.extend(tails.iter().map(|&t| Some(ids[t])));
        }
        remaining -= take as u64;
    }
    Ok(b.finish())
}

/// Every binary-tree shape on `n` nodes (Catalan many), ids in preorder.
pub fn all_shapes(n: usize) -> Vec<TreeTopology> {
    all_shape_slots(n)
        .into_iter()
        .map(|(l, r)| TreeTopology::from_slots(l, r).expect("enumerated shape is valid"))
        .collect()
}

type Slots = (Vec<u32>, Vec<u32>);

fn all_shape_slots(n: usize) -> Vec<Slots> {
    let mut table: Vec<Vec<Slots>> = vec![vec![(vec![], vec![])]];
    for size in 1..=n {
        let mut shapes = Vec::new();
        for nl in 0..size {
            let nr = size - 1 - nl;
            for (ll, lr) in &table[nl] {
                for (rl, rr) in &table[nr] {
                    let mut left = Vec::with_capacity(size);
                    let mut right = Vec::with_capacity(size);
                    left.push(if nl > 0 { 1 } else { NONE });
                    right.push(if nr > 0 { (nl + 1) as u32 } else { NONE });
                    let shift = |v: u32, by: usize| if v == NONE { NONE } else { v + by as u32 };
                    left.extend(ll.iter().map(|&v| shift(v, 1)));
                    right.extend(lr.iter().map(|&v| shift(v, 1)));
                    left.extend(rl.iter().map(|&v| shift(v, nl + 1)));
                    right.extend(rr.iter().map(|&v| shift(v, nl + 1)));
                    shapes.push((left, right));
                }
            }
        }
        table.push(shapes);
    }
    table.swap_remove(n)
}
