//! Block layouts for fixed-topology binary trees.
//!
//! [`aware::layout_aware`] builds a layout for a known block size `B`;
//! [`oblivious::layout_oblivious`] builds one linear order that serves every
//! `B` at once. [`cost`] counts block transfers along root-to-node paths and
//! [`bound`] evaluates the matching asymptotic expression.

pub mod aware;
pub mod bound;
pub mod cli;
pub mod cost;
pub mod error;
pub mod gen;
pub mod io;
pub mod oblivious;
pub mod oracle;
pub mod sweep;
pub mod tree;

pub use aware::{layout_aware, BlockAssignment, Budget};
pub use error::{Error, Result};
pub use oblivious::{layout_oblivious, LinearOrder};
pub use tree::{NodeId, Side, TreeTopology, WeightTable};
