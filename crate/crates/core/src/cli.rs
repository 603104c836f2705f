//! Command implementations behind the `treelayout` binary. Each command takes
//! parsed inputs and returns what should be written, so it can be driven
//! from tests without a process.

use std::time::{Duration, Instant};

use num_rational::Ratio;
use serde::Serialize;

use crate::aware::layout_aware;
use crate::bound::BoundQuery;
use crate::cost::{worst_case_by_depth, write_csv, CostRow, LayoutKind};
use crate::error::{Error, Result};
use crate::gen::{gen_lower_bound, gen_path, gen_perfect, gen_random};
use crate::io::{AnyLayout, LayoutFile, OrderFile};
use crate::oblivious::{blocks_at, layout_oblivious};
use crate::oracle::{brute_force_optimal, DEFAULT_STATE_BUDGET};
use crate::sweep::{run_sweep, summarize, OffsetPolicy, SweepConfig, SweepSummary};
use crate::tree::{NodeId, TreeTopology};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenFamily {
    Perfect,
    Path,
    Random,
    LowerBound,
}

/// Generator parameters; which ones are required depends on the family.
#[derive(Clone, Debug, Default)]
pub struct GenParams {
    pub height: Option<u32>,
    pub n: Option<u64>,
    pub seed: u64,
    pub block_size: Option<u64>,
    pub inv_p: Option<u64>,
}

fn need<T>(v: Option<T>, flag: &str, family: &str) -> Result<T> {
    v.ok_or_else(|| Error::Usage(format!("gen {family} requires {flag}")))
}

pub fn cmd_gen(family: GenFamily, params: &GenParams) -> Result<TreeTopology> {
    match family {
        GenFamily::Perfect => gen_perfect(need(params.height, "--height", "perfect")?),
        GenFamily::Path => gen_path(need(params.n, "--n", "path")? as usize),
        GenFamily::Random => gen_random(need(params.n, "--n", "random")? as usize, params.seed),
        GenFamily::LowerBound => gen_lower_bound(
            need(params.block_size, "--B", "lowerbound")?,
            need(params.inv_p, "--inv-p", "lowerbound")?,
            need(params.n, "--n", "lowerbound")?,
        ),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayoutMode {
    Aware,
    Oblivious,
}

/// Builds a layout and returns its JSON together with the construction time.
pub fn cmd_layout(
    tree: &TreeTopology,
    mode: LayoutMode,
    block_size: Option<u64>,
    c: Ratio<u64>,
) -> Result<(String, Duration)> {
    match mode {
        LayoutMode::Aware => {
            let b = block_size.ok_or_else(|| Error::Usage("layout aware requires --B".into()))?;
            let start = Instant::now();
            let a = layout_aware(tree, b, c)?;
            let took = start.elapsed();
            Ok((serde_json::to_string(&LayoutFile::from_assignment(&a))?, took))
        }
        LayoutMode::Oblivious => {
            if block_size.is_some() {
                return Err(Error::Usage("layout oblivious takes no --B".into()));
            }
            let start = Instant::now();
            let o = layout_oblivious(tree);
            let took = start.elapsed();
            Ok((serde_json::to_string(&OrderFile::from_order(&o))?, took))
        }
    }
}

fn rows_for(
    tree: &TreeTopology,
    tree_id: &str,
    family: &str,
    block_size: u64,
    layout: LayoutKind,
    offset: u64,
    block_of: &[u32],
) -> Vec<CostRow> {
    let n = tree.len() as u64;
    worst_case_by_depth(tree, block_of)
        .into_iter()
        .map(|dc| {
            let q = BoundQuery::new(n, dc.depth as u64, block_size);
            let denom = if dc.depth == 0 { 1.0 } else { q.floor_one() };
            CostRow {
                tree_id: tree_id.to_string(),
                family: family.to_string(),
                n,
                block_size,
                layout,
                offset,
                depth: dc.depth,
                worst_exact: dc.worst_exact,
                worst_cum: dc.worst_cum,
                bound: q.value,
                ratio: dc.worst_exact as f64 / denom,
            }
        })
        .collect()
}

/// Evaluates a layout file on a tree, one row per `(B, offset, D)`.
///
/// A block layout evaluated at its own `B` uses its blocks directly; at any
/// other `B` it is read as the padded linear order. An order file needs at
/// least one `B`.
pub fn cmd_eval(
    tree: &TreeTopology,
    tree_id: &str,
    layout: AnyLayout,
    block_sizes: &[u64],
    offsets: OffsetPolicy,
) -> Result<Vec<CostRow>> {
    if block_sizes.contains(&0) {
        return Err(Error::InvalidParam("B values must be positive".into()));
    }
    let mut rows = Vec::new();
    match layout {
        AnyLayout::Blocks(file) => {
            let a = file.into_assignment(tree)?;
            let own = a.block_size();
            let positions = OrderFile::from_slots(&a.padded_order()).positions(tree)?;
            let bs = if block_sizes.is_empty() { vec![own] } else { block_sizes.to_vec() };
            for b in bs {
                if b == own {
                    rows.extend(rows_for(tree, tree_id, "file", b, LayoutKind::Aware, 0, a.block_ids()));
                } else {
                    for off in offsets.offsets(b) {
                        let ids = blocks_at(&positions, b, off);
                        rows.extend(rows_for(tree, tree_id, "file", b, LayoutKind::External, off, &ids));
                    }
                }
            }
        }
        AnyLayout::Order(file) => {
            if block_sizes.is_empty() {
                return Err(Error::Usage("eval of a linear order requires --B".into()));
            }
            let positions = file.positions(tree)?;
            for &b in block_sizes {
                for off in offsets.offsets(b) {
                    let ids = blocks_at(&positions, b, off);
                    rows.extend(rows_for(tree, tree_id, "file", b, LayoutKind::Oblivious, off, &ids));
                }
            }
        }
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

pub fn render_rows(rows: &[CostRow], format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Csv => {
            let mut buf = Vec::new();
            write_csv(&mut buf, rows)?;
            Ok(String::from_utf8(buf).expect("CSV is ASCII"))
        }
        OutputFormat::Json => {
            let v: Vec<_> = rows.iter().map(CostRow::to_json).collect();
            Ok(serde_json::to_string_pretty(&v)? + "\n")
        }
    }
}

pub struct SweepOutput {
    pub rows: Vec<CostRow>,
    pub summary: SweepSummary,
}

pub fn cmd_sweep(config: &SweepConfig) -> Result<SweepOutput> {
    let result = run_sweep(config)?;
    let summary = summarize(&result);
    Ok(SweepOutput { rows: result.rows, summary })
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    #[serde(rename = "B")]
    pub block_size: u64,
    #[serde(rename = "D")]
    pub depth: u32,
    pub optimum: u32,
    pub witness: Vec<Vec<NodeId>>,
    pub states: u64,
    /// Worst cost at `D` of the two-phase layout with `c = 1`.
    pub aware_cost: u32,
    pub ratio: f64,
}

pub fn cmd_oracle(tree: &TreeTopology, block_size: u64, depth: u32) -> Result<OracleReport> {
    let r = brute_force_optimal(tree, block_size, depth, DEFAULT_STATE_BUDGET)?;
    let a = layout_aware(tree, block_size, Ratio::from_integer(1))?;
    let aware_cost = worst_case_by_depth(tree, a.block_ids())[depth as usize].worst_exact;
    Ok(OracleReport {
        block_size,
        depth,
        optimum: r.cost,
        witness: r.witness,
        states: r.states,
        aware_cost,
        ratio: aware_cost as f64 / r.cost as f64,
    })
}
