//! Batch experiments over tree families, block sizes, and layouts.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aware::layout_aware_with;
use crate::bound::{inv_p_power_of_two, lower_bound_shape, solve_p, BoundQuery};
use crate::cost::{exclusion_check, worst_case_by_depth, CostRow, DepthCost, LayoutKind};
use crate::error::{Error, Result};
use crate::gen::{gen_lower_bound, gen_path, gen_perfect, gen_random};
use crate::io::parse_ratio;
use crate::oblivious::layout_oblivious;
use crate::tree::{TreeTopology, WeightTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Perfect,
    Path,
    Random,
    #[serde(rename = "lowerbound")]
    LowerBound,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Perfect => "perfect",
            Family::Path => "path",
            Family::Random => "random",
            Family::LowerBound => "lowerbound",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DepthPolicy {
    #[default]
    All,
    /// 0, 1, 2, 4, 8, … plus the tree height.
    Log,
}

impl DepthPolicy {
    pub fn depths(self, height: u32) -> Vec<u32> {
        match self {
            DepthPolicy::All => (0..=height).collect(),
            DepthPolicy::Log => {
                let mut v = vec![0];
                let mut d = 1;
                while d < height {
                    v.push(d);
                    d *= 2;
                }
                if height > 0 {
                    v.push(height);
                }
                v
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OffsetPolicy {
    #[default]
    Zero,
    All,
}

impl OffsetPolicy {
    pub fn offsets(self, block_size: u64) -> std::ops::Range<u64> {
        match self {
            OffsetPolicy::Zero => 0..1,
            OffsetPolicy::All => 0..block_size,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayoutChoice {
    Aware,
    Oblivious,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub family: Family,
    pub sizes: Vec<u64>,
}

fn default_c() -> String {
    "1/1".into()
}

fn default_layouts() -> Vec<LayoutChoice> {
    vec![LayoutChoice::Aware, LayoutChoice::Oblivious]
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub families: Vec<FamilySpec>,
    #[serde(rename = "B")]
    pub block_sizes: Vec<u64>,
    #[serde(default = "default_c")]
    pub c: String,
    #[serde(default)]
    pub depths: DepthPolicy,
    #[serde(default)]
    pub offsets: OffsetPolicy,
    #[serde(default = "default_layouts")]
    pub layouts: Vec<LayoutChoice>,
    #[serde(default)]
    pub seed: u64,
    /// CSV destination, relative to the working directory.
    #[serde(default)]
    pub out: Option<String>,
    /// Summary JSON destination.
    #[serde(default)]
    pub summary: Option<String>,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.families.is_empty() || self.block_sizes.is_empty() || self.layouts.is_empty() {
            return Err(Error::InvalidParam("sweep needs families, B values and layouts".into()));
        }
        if self.block_sizes.contains(&0) {
            return Err(Error::InvalidParam("B values must be positive".into()));
        }
        if let Some(f) = self.families.iter().find(|f| f.sizes.is_empty() || f.sizes.contains(&0)) {
            return Err(Error::InvalidParam(format!("{} sizes must be positive", f.family.name())));
        }
        parse_ratio(&self.c)?;
        Ok(())
    }
}

/// Depth the adversarial construction is tuned for: the geometric middle of
/// the intermediate range, `⌈lg N⌉·⌈√B⌉`.
pub fn lower_bound_design_depth(n: u64, b: u64) -> u64 {
    let lg = (n as f64).log2().ceil().max(1.0) as u64;
    lg * (b as f64).sqrt().ceil() as u64
}

/// `inv_p` for the adversarial tree at `(N, D, B)`.
pub fn lower_bound_inv_p(n: u64, d: u64, b: u64) -> u64 {
    inv_p_power_of_two(solve_p(n, d.max(1), b))
}

/// One generated tree with its provenance.
#[derive(Clone, Debug)]
pub struct TreeCase {
    pub id: String,
    pub family: Family,
    pub tree: TreeTopology,
    pub requested_n: u64,
    /// Only for the adversarial family, which is built per block size.
    pub block_size: Option<u64>,
    pub design_depth: Option<u64>,
}

pub fn build_case(family: Family, n: u64, block_size: u64, seed: u64) -> Result<TreeCase> {
    let ctx = |e: Error| Error::InvalidParam(format!("{} n={n}: {e}", family.name()));
    let (id, tree, bs, dd) = match family {
        Family::Perfect => {
            let height = (n + 1).ilog2().saturating_sub(1);
            (format!("perfect-h{height}"), gen_perfect(height).map_err(ctx)?, None, None)
        }
        Family::Path => (format!("path-n{n}"), gen_path(n as usize).map_err(ctx)?, None, None),
        Family::Random => {
            let s = seed ^ n.wrapping_mul(0x9E37_79B9_7F4A_7C15);
            (format!("random-n{n}-s{seed}"), gen_random(n as usize, s).map_err(ctx)?, None, None)
        }
        Family::LowerBound => {
            let d = lower_bound_design_depth(n, block_size);
            let inv_p = lower_bound_inv_p(n, d, block_size);
            let tree = gen_lower_bound(block_size, inv_p, n).map_err(ctx)?;
            (format!("lowerbound-n{n}-B{block_size}-p{inv_p}"), tree, Some(block_size), Some(d))
        }
    };
    Ok(TreeCase { id, family, tree, requested_n: n, block_size: bs, design_depth: dd })
}

/// Per-(tree, B, layout) results.
#[derive(Clone, Debug)]
pub struct Cell {
    pub tree_id: String,
    pub family: Family,
    pub n: u64,
    /// The size asked for in the config; perfect trees round down.
    pub requested_n: u64,
    pub height: u32,
    pub block_size: u64,
    pub layout: LayoutKind,
    pub offset: u64,
    pub depths: Vec<DepthCost>,
    /// Max over depths of `worst_exact / max(1, bound)`.
    pub max_ratio: f64,
    /// Phase-2 block boundaries checked and violations found (aware only).
    pub exclusion: Option<(u64, usize)>,
    /// `(depth, measured, lg N / lg(2 + B lg N / D))` at the design depth.
    pub lower_bound: Option<(u32, u32, f64)>,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub cells: Vec<Cell>,
    pub rows: Vec<CostRow>,
}

fn ratio(worst: u32, n: u64, d: u32, b: u64) -> (f64, f64) {
    let q = BoundQuery::new(n, d as u64, b);
    let denom = if d == 0 { 1.0 } else { q.floor_one() };
    (q.value, worst as f64 / denom)
}

fn cell_for(
    case: &TreeCase,
    block_size: u64,
    layout: LayoutKind,
    offset: u64,
    block_of: &[u32],
) -> Cell {
    let n = case.tree.len() as u64;
    let depths = worst_case_by_depth(&case.tree, block_of);
    let max_ratio = depths
        .iter()
        .map(|dc| ratio(dc.worst_exact, n, dc.depth, block_size).1)
        .fold(0.0, f64::max);
    let lower_bound = case.design_depth.map(|d| {
        let d = (d as u32).min(case.tree.height());
        (d, depths[d as usize].worst_exact, lower_bound_shape(n, d.max(1) as u64, block_size))
    });
    Cell {
        tree_id: case.id.clone(),
        family: case.family,
        n,
        requested_n: case.requested_n,
        height: case.tree.height(),
        block_size,
        layout,
        offset,
        depths,
        max_ratio,
        exclusion: None,
        lower_bound,
    }
}

pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let c = parse_ratio(&config.c)?;

    // Trees: one per (family, size), or per (size, B) for the adversarial family.
    let mut jobs: Vec<(Family, u64, Option<u64>)> = Vec::new();
    for spec in &config.families {
        for &n in &spec.sizes {
            if spec.family == Family::LowerBound {
                jobs.extend(config.block_sizes.iter().map(|&b| (spec.family, n, Some(b))));
            } else {
                jobs.push((spec.family, n, None));
            }
        }
    }

    let per_job: Vec<Result<Vec<Cell>>> = jobs
        .par_iter()
        .map(|&(family, n, only_b)| {
            let case = build_case(family, n, only_b.unwrap_or(1), config.seed)?;
            let weights = WeightTable::compute(&case.tree);
            let bs: Vec<u64> = only_b.map_or_else(|| config.block_sizes.clone(), |b| vec![b]);
            let order = config
                .layouts
                .contains(&LayoutChoice::Oblivious)
                .then(|| layout_oblivious(&case.tree));
            let mut cells = Vec::new();
            for &b in &bs {
                for choice in &config.layouts {
                    match choice {
                        LayoutChoice::Aware => {
                            let a = layout_aware_with(&case.tree, &weights, b, c)?;
                            let mut cell = cell_for(&case, b, LayoutKind::Aware, 0, a.block_ids());
                            let ex = exclusion_check(&case.tree, &weights, &a);
                            cell.exclusion = Some((ex.boundaries, ex.violations.len()));
                            cells.push(cell);
                        }
                        LayoutChoice::Oblivious => {
                            let order = order.as_ref().expect("order built when requested");
                            for off in config.offsets.offsets(b) {
                                let ids = order.blocks_at(b, off);
                                cells.push(cell_for(&case, b, LayoutKind::Oblivious, off, &ids));
                            }
                        }
                    }
                }
            }
            Ok(cells)
        })
        .collect();

    let mut cells = Vec::new();
    for r in per_job {
        cells.extend(r?);
    }

    let mut rows = Vec::new();
    for cell in &cells {
        for d in config.depths.depths(cell.height) {
            let dc = cell.depths[d as usize];
            let (bound, r) = ratio(dc.worst_exact, cell.n, d, cell.block_size);
            rows.push(CostRow {
                tree_id: cell.tree_id.clone(),
                family: cell.family.name().into(),
                n: cell.n,
                block_size: cell.block_size,
                layout: cell.layout,
                offset: cell.offset,
                depth: d,
                worst_exact: dc.worst_exact,
                worst_cum: dc.worst_cum,
                bound,
                ratio: r,
            });
        }
    }
    Ok(SweepResult { cells, rows })
}

/// Largest ratio per size for one family and layout, keyed by requested size.
#[derive(Clone, Debug, Serialize)]
pub struct GrowthSummary {
    pub family: String,
    pub layout: String,
    pub max_ratio_by_n: BTreeMap<u64, f64>,
    /// Ratio at the largest size over ratio at the smallest.
    pub growth: f64,
    pub growth_ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepSummary {
    pub growth_cap: f64,
    pub families: Vec<GrowthSummary>,
    pub exclusion_boundaries: u64,
    pub exclusion_violations: usize,
    /// Smallest measured / lower-bound-shape ratio over adversarial cells.
    pub lower_bound_min_ratio: Option<f64>,
}

pub const GROWTH_CAP: f64 = 1.5;

/// Groups cells by family and layout, taking the largest ratio for each
/// requested tree size.
pub fn summarize(result: &SweepResult) -> SweepSummary {
    let mut by_key: BTreeMap<(Family, LayoutKind), BTreeMap<u64, f64>> = BTreeMap::new();
    for cell in &result.cells {
        let e = by_key.entry((cell.family, cell.layout)).or_default().entry(cell.requested_n).or_insert(0.0);
        *e = e.max(cell.max_ratio);
    }
    let families = by_key
        .into_iter()
        .map(|((family, layout), max_ratio_by_n)| {
            let first = *max_ratio_by_n.values().next().unwrap_or(&0.0);
            let last = *max_ratio_by_n.values().last().unwrap_or(&0.0);
            let growth = if first > 0.0 { last / first } else { 1.0 };
            GrowthSummary {
                family: family.name().into(),
                layout: layout.to_string(),
                max_ratio_by_n,
                growth,
                growth_ok: growth <= GROWTH_CAP,
            }
        })
        .collect();
    let (mut boundaries, mut violations) = (0, 0);
    for (b, v) in result.cells.iter().filter_map(|c| c.exclusion) {
        boundaries += b;
        violations += v;
    }
    let lower_bound_min_ratio = result
        .cells
        .iter()
        .filter(|c| c.layout == LayoutKind::Aware)
        .filter_map(|c| c.lower_bound)
        .map(|(_, measured, shape)| measured as f64 / shape)
        .reduce(f64::min);
    SweepSummary {
        growth_cap: GROWTH_CAP,
        families,
        exclusion_boundaries: boundaries,
        exclusion_violations: violations,
        lower_bound_min_ratio,
    }
}
