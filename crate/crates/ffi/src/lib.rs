//! C interface to `treelayout`.
//!
//! Trees, block layouts and linear orders are opaque handles created by
//! `tl_*` constructors and released with the matching `*_free`. Every
//! fallible call returns a `TlStatus`; on failure `tl_last_error` describes
//! the most recent error on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_rational::Ratio;
use treelayout::cost::worst_case_by_depth;
use treelayout::error::Error;
use treelayout::{gen, io, oblivious, oracle};
use treelayout::{BlockAssignment, LinearOrder, NodeId, TreeTopology};

/// Slot value meaning "no child" in child arrays.
pub const TL_NONE: u32 = u32::MAX;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TlStatus {
    Ok = 0,
    NullPointer = 1,
    /// A parameter is out of its domain.
    InvalidArgument = 2,
    /// Input does not describe a valid tree or layout.
    Invalid = 3,
    /// The request exceeds a search budget.
    Budget = 4,
    /// A caller buffer is too small.
    BufferTooSmall = 5,
    Internal = 6,
}

pub struct TlTree(TreeTopology);
pub struct TlLayout(BlockAssignment);
pub struct TlOrder(LinearOrder);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> TlStatus {
    match e {
        Error::InvalidParam(_) | Error::Usage(_) => TlStatus::InvalidArgument,
        Error::Budget(_) => TlStatus::Budget,
        _ => TlStatus::Invalid,
    }
}

/// Runs `f`, turning errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), (TlStatus, String)>) -> TlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TlStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            TlStatus::Internal
        }
    }
}

fn lib<T>(r: treelayout::Result<T>) -> Result<T, (TlStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (TlStatus, String) {
    (TlStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (TlStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), (TlStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_value<T>(out: *mut T, value: T) -> Result<(), (TlStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = value;
    Ok(())
}

/// Copies `src` into a caller buffer of `cap` elements.
unsafe fn fill<T: Copy>(src: &[T], buf: *mut T, cap: usize) -> Result<(), (TlStatus, String)> {
    if cap < src.len() {
        return Err((TlStatus::BufferTooSmall, format!("buffer holds {cap}, need {}", src.len())));
    }
    if buf.is_null() {
        return Err(null("buffer"));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Message for the last failed call on this thread. Valid until the next
/// failing call on the same thread; never null.
#[no_mangle]
pub extern "C" fn tl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds a tree from child arrays of length `n`; `TL_NONE` marks a missing
/// child.
///
/// # Safety
/// `left` and `right` must point to `n` readable values.
#[no_mangle]
pub unsafe extern "C" fn tl_tree_from_children(
    n: usize,
    left: *const u32,
    right: *const u32,
    out: *mut *mut TlTree,
) -> TlStatus {
    guard(|| {
        if n > 0 && (left.is_null() || right.is_null()) {
            return Err(null("child array"));
        }
        let slots = |p: *const u32| -> Vec<Option<NodeId>> {
            if n == 0 {
                return Vec::new();
            }
            std::slice::from_raw_parts(p, n).iter().map(|&c| (c != TL_NONE).then_some(NodeId(c))).collect()
        };
        let tree = lib(TreeTopology::from_children(slots(left), slots(right)))?;
        put(out, TlTree(tree))
    })
}

/// Parses a tree from its JSON interchange text.
///
/// # Safety
/// `json` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tl_tree_from_json(json: *const c_char, out: *mut *mut TlTree) -> TlStatus {
    guard(|| {
        let text = deref(json, "json")?;
        let text = CStr::from_ptr(text).to_str().map_err(|e| (TlStatus::Invalid, e.to_string()))?;
        put(out, TlTree(lib(io::tree_from_json(text))?))
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tl_tree_perfect(height: u32, out: *mut *mut TlTree) -> TlStatus {
    guard(|| put(out, TlTree(lib(gen::gen_perfect(height))?)))
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tl_tree_path(n: usize, out: *mut *mut TlTree) -> TlStatus {
    guard(|| put(out, TlTree(lib(gen::gen_path(n))?)))
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tl_tree_random(n: usize, seed: u64, out: *mut *mut TlTree) -> TlStatus {
    guard(|| put(out, TlTree(lib(gen::gen_random(n, seed))?)))
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tl_tree_lower_bound(
    block_size: u64,
    inv_p: u64,
    n: u64,
    out: *mut *mut TlTree,
) -> TlStatus {
    guard(|| put(out, TlTree(lib(gen::gen_lower_bound(block_size, inv_p, n))?)))
}

/// Node count, or 0 for a null handle.
///
/// # Safety
/// `tree` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tl_tree_len(tree: *const TlTree) -> usize {
    tree.as_ref().map_or(0, |t| t.0.len())
}

/// Depth of the deepest node, or 0 for a null handle.
///
/// # Safety
/// `tree` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tl_tree_height(tree: *const TlTree) -> u32 {
    tree.as_ref().map_or(0, |t| t.0.height())
}

/// # Safety
/// `tree` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tl_tree_free(tree: *mut TlTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// Two-phase block layout with blocks of at most `block_size` nodes and
/// phase-1 depth factor `c_num / c_den`.
///
/// # Safety
/// `tree` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tl_layout_aware(
    tree: *const TlTree,
    block_size: u64,
    c_num: u64,
    c_den: u64,
    out: *mut *mut TlLayout,
) -> TlStatus {
    guard(|| {
        let t = deref(tree, "tree")?;
        if c_num == 0 || c_den == 0 {
            return Err((TlStatus::InvalidArgument, "c must be a positive rational".into()));
        }
        let a = lib(treelayout::layout_aware(&t.0, block_size, Ratio::new(c_num, c_den)))?;
        put(out, TlLayout(a))
    })
}

/// Number of blocks, or 0 for a null handle.
///
/// # Safety
/// `layout` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tl_layout_block_count(layout: *const TlLayout) -> usize {
    layout.as_ref().map_or(0, |l| l.0.len())
}

/// Writes each node's block id into `buf`, which must hold one entry per
/// node.
///
/// # Safety
/// `buf` must point to `cap` writable values.
#[no_mangle]
pub unsafe extern "C" fn tl_layout_block_ids(layout: *const TlLayout, buf: *mut u32, cap: usize) -> TlStatus {
    guard(|| fill(deref(layout, "layout")?.0.block_ids(), buf, cap))
}

/// Worst transfer count over nodes at exactly `depth`.
///
/// # Safety
/// Handles must be live, `layout` built for `tree`, and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tl_layout_worst_case(
    tree: *const TlTree,
    layout: *const TlLayout,
    depth: u32,
    out: *mut u32,
) -> TlStatus {
    guard(|| {
        let (t, l) = (deref(tree, "tree")?, deref(layout, "layout")?);
        worst_at(&t.0, l.0.block_ids(), depth).and_then(|c| put_value(out, c))
    })
}

/// # Safety
/// `layout` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tl_layout_free(layout: *mut TlLayout) {
    if !layout.is_null() {
        drop(Box::from_raw(layout));
    }
}

/// Block-size-independent linear order.
///
/// # Safety
/// `tree` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tl_layout_oblivious(tree: *const TlTree, out: *mut *mut TlOrder) -> TlStatus {
    guard(|| {
        let t = deref(tree, "tree")?;
        put(out, TlOrder(oblivious::layout_oblivious(&t.0)))
    })
}

/// Writes the node at each position into `buf`.
///
/// # Safety
/// `buf` must point to `cap` writable values.
#[no_mangle]
pub unsafe extern "C" fn tl_order_nodes(order: *const TlOrder, buf: *mut u32, cap: usize) -> TlStatus {
    guard(|| {
        let ids: Vec<u32> = deref(order, "order")?.0.nodes().iter().map(|x| x.0).collect();
        fill(&ids, buf, cap)
    })
}

/// Worst transfer count at exactly `depth` when the order is cut into
/// aligned blocks of `block_size` slots, shifted by `offset`.
///
/// # Safety
/// Handles must be live, `order` built for `tree`, and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tl_order_worst_case(
    tree: *const TlTree,
    order: *const TlOrder,
    block_size: u64,
    offset: u64,
    depth: u32,
    out: *mut u32,
) -> TlStatus {
    guard(|| {
        let (t, o) = (deref(tree, "tree")?, deref(order, "order")?);
        if block_size == 0 || offset >= block_size {
            return Err((TlStatus::InvalidArgument, "need B > 0 and offset < B".into()));
        }
        worst_at(&t.0, &o.0.blocks_at(block_size, offset), depth).and_then(|c| put_value(out, c))
    })
}

/// # Safety
/// `order` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tl_order_free(order: *mut TlOrder) {
    if !order.is_null() {
        drop(Box::from_raw(order));
    }
}

fn worst_at(tree: &TreeTopology, block_of: &[u32], depth: u32) -> Result<u32, (TlStatus, String)> {
    if block_of.len() != tree.len() {
        return Err((TlStatus::Invalid, "layout was built for a different tree".into()));
    }
    if depth > tree.height() {
        return Err((TlStatus::InvalidArgument, format!("depth {depth} exceeds height {}", tree.height())));
    }
    Ok(worst_case_by_depth(tree, block_of)[depth as usize].worst_exact)
}

/// Fewest worst-case transfers to `depth` over all layouts, by exhaustive
/// search. Trees above 12 nodes report `TL_STATUS_BUDGET`.
///
/// # Safety
/// `tree` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tl_optimal_cost(
    tree: *const TlTree,
    block_size: u64,
    depth: u32,
    out: *mut u32,
) -> TlStatus {
    guard(|| {
        let t = deref(tree, "tree")?;
        let r = lib(oracle::brute_force_optimal(&t.0, block_size, depth, oracle::DEFAULT_STATE_BUDGET))?;
        put_value(out, r.cost)
    })
}

/// Asymptotic transfer bound for `n` nodes, depth `d`, block size `b`.
#[no_mangle]
pub extern "C" fn tl_theoretical_bound(n: u64, d: u64, b: u64) -> f64 {
    treelayout::bound::theoretical_bound(n, d, b)
}

/// Root of `(1/p)·lg(1/p) = b·lg n / (2d)`, clamped to `[1/n, 1]`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tl_solve_p(n: u64, d: u64, b: u64, out: *mut f64) -> TlStatus {
    guard(|| {
        if d == 0 || n == 0 {
            return Err((TlStatus::InvalidArgument, "need n >= 1 and d >= 1".into()));
        }
        put_value(out, treelayout::bound::solve_p(n, d, b))
    })
}
