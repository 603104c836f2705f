//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::collections::{BTreeMap, HashMap};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use treelayout::aware::{k_set, layout_aware, layout_phase2_only, Budget};
use treelayout::bound::{budget_along_path, lower_bound_shape, solve_p, inv_p_power_of_two};
use treelayout::cost::{worst_case_by_depth, LayoutKind};
use treelayout::gen::{all_shapes, gen_lower_bound, gen_path, gen_perfect, gen_random};
use treelayout::oblivious::layout_oblivious;
use treelayout::oracle::{brute_force_optimal, DEFAULT_STATE_BUDGET};
use treelayout::sweep::{
    run_sweep, summarize, DepthPolicy, Family, FamilySpec, LayoutChoice, OffsetPolicy, SweepConfig,
    SweepResult, GROWTH_CAP,
};
use treelayout::{NodeId, TreeTopology, WeightTable};

type Outcome = Result<String, String>;

const GRID_N: [u64; 3] = [1 << 10, 1 << 13, 1 << 16];
const GRID_B: [u64; 4] = [4, 16, 64, 256];

fn grid_config(c: &str) -> SweepConfig {
    let fam = |family| FamilySpec { family, sizes: GRID_N.to_vec() };
    SweepConfig {
        families: vec![fam(Family::Perfect), fam(Family::Path), fam(Family::Random), fam(Family::LowerBound)],
        block_sizes: GRID_B.to_vec(),
        c: c.into(),
        depths: DepthPolicy::All,
        offsets: OffsetPolicy::Zero,
        layouts: vec![LayoutChoice::Aware, LayoutChoice::Oblivious],
        seed: 20240601,
        out: None,
        summary: None,
    }
}

fn random_path(tree: &TreeTopology, rng: &mut ChaCha8Rng) -> Vec<NodeId> {
    let mut path = vec![NodeId(rng.random_range(0..tree.len() as u32))];
    while let Some(&x) = path.last() {
        let kids: Vec<NodeId> = tree.children(x).collect();
        if kids.is_empty() {
            break;
        }
        path.push(kids[rng.random_range(0..kids.len())]);
    }
    path
}

fn identity_suite() -> Outcome {
    const TREES: u64 = 200;
    const PATHS_PER_TREE: usize = 50;
    let bad: Vec<String> = (0..TREES)
        .into_par_iter()
        .flat_map_iter(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(0xA11CE + t);
            let n = rng.random_range(1..=2000);
            let tree = gen_random(n, rng.random()).unwrap();
            let w = WeightTable::compute(&tree);
            let mut bad = Vec::new();
            for _ in 0..PATHS_PER_TREE {
                let b = rng.random_range(2..=256);
                let path = random_path(&tree, &mut rng);
                let trace = budget_along_path(&tree, &w, b, &path).unwrap();
                if !trace.agrees() {
                    bad.push(format!("tree {t} n={n} B={b} from {}", path[0]));
                }
            }
            bad
        })
        .collect();
    let total = TREES as usize * PATHS_PER_TREE;
    match bad.first() {
        None => Ok(format!("{total} paths, recurrence == closed form exactly")),
        Some(first) => Err(format!("{} of {total} paths disagree, first: {first}", bad.len())),
    }
}

/// K(x, A) straight from the definition: breadth-first over nodes whose
/// delivered budget is at least one.
fn k_by_definition(tree: &TreeTopology, w: &WeightTable, x: NodeId, a: &BigRational) -> Vec<NodeId> {
    let one = BigRational::one();
    let mut out = Vec::new();
    let mut queue = vec![(x, a.clone())];
    while let Some((y, m)) = queue.pop() {
        if m < one {
            continue;
        }
        out.push(y);
        for c in tree.children(y) {
            let q = BigRational::new(BigInt::from(w.get(c)), BigInt::from(w.get(y)));
            queue.push((c, (&m - &one) * q));
        }
    }
    out.sort();
    out
}

fn k_set_invariant() -> Outcome {
    const TREES: u64 = 1000;
    const PER_TREE: usize = 100;
    const BS: [i64; 6] = [1, 2, 4, 8, 16, 64];
    let bad: Vec<String> = (0..TREES)
        .into_par_iter()
        .flat_map_iter(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(0xB0B + t);
            let n = rng.random_range(1..=1000);
            let tree = gen_random(n, rng.random()).unwrap();
            let w = WeightTable::compute(&tree);
            let mut bad = Vec::new();
            for _ in 0..PER_TREE {
                let b = BS[rng.random_range(0..BS.len())];
                let den = rng.random_range(1..=24i64);
                let num = rng.random_range(0..=b * den);
                let a = BigRational::new(num.into(), den.into());
                let x = NodeId(rng.random_range(0..n as u32));
                let mut k = k_set(&tree, &w, x, &Budget(a.clone()));
                k.sort();
                let cap = (num / den) as usize;
                if k.len() > cap || k != k_by_definition(&tree, &w, x, &a) {
                    bad.push(format!("tree {t} x={x} A={num}/{den}: |K| = {}", k.len()));
                }
            }
            bad
        })
        .collect();
    let total = TREES as usize * PER_TREE;
    match bad.first() {
        None => Ok(format!("{total} samples, |K| <= floor(A) and membership matches budgets")),
        Some(first) => Err(format!("{} of {total} samples fail, first: {first}", bad.len())),
    }
}

fn exclusion(sweeps: &[(&str, &SweepResult)]) -> Outcome {
    let mut boundaries = 0;
    let mut violations = 0;
    for (_, r) in sweeps {
        for (b, v) in r.cells.iter().filter_map(|c| c.exclusion) {
            boundaries += b;
            violations += v;
        }
    }
    let detail = format!("{boundaries} phase-2 boundaries, {violations} violations");
    if violations == 0 && boundaries > 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fmt_by_n(m: &BTreeMap<u64, f64>) -> String {
    m.iter().map(|(n, v)| format!("{n}:{v:.3}")).collect::<Vec<_>>().join(" ")
}

/// Shared growth check: the value at the largest N at most `GROWTH_CAP`
/// times the value at the smallest.
fn growth_ok(m: &BTreeMap<u64, f64>) -> (bool, f64) {
    let first = *m.values().next().unwrap();
    let last = *m.values().last().unwrap();
    let g = if first > 0.0 { last / first } else { 1.0 };
    (g <= GROWTH_CAP, g)
}

fn upper_bound_shape(result: &SweepResult) -> Outcome {
    let summary = summarize(result);
    let mut lines = Vec::new();
    let mut ok = true;
    for f in summary.families.iter().filter(|f| f.layout == "aware") {
        let (g_ok, g) = growth_ok(&f.max_ratio_by_n);
        ok &= g_ok;
        lines.push(format!("{} C[{}] growth {g:.3}", f.family, fmt_by_n(&f.max_ratio_by_n)));
    }
    let detail = lines.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn lower_bound_check() -> Outcome {
    let mut jobs = Vec::new();
    for &n in &GRID_N {
        let lg = (n as f64).log2().ceil() as u64;
        for &b in &GRID_B {
            let mid = lg * (b as f64).sqrt().ceil() as u64;
            for d in [lg, mid, b * lg / 2] {
                jobs.push((n, b, d.max(1)));
            }
        }
    }
    let results: Vec<(u64, u64, u64, u64, u32, f64)> = jobs
        .par_iter()
        .map(|&(n, b, d)| {
            let inv_p = inv_p_power_of_two(solve_p(n, d, b));
            let tree = gen_lower_bound(b, inv_p, n).unwrap();
            let a = layout_aware(&tree, b, Ratio::from_integer(1)).unwrap();
            let costs = worst_case_by_depth(&tree, a.block_ids());
            let d_eff = d.min(tree.height() as u64);
            let measured = costs[d_eff as usize].worst_exact;
            (n, b, d_eff, inv_p, measured, lower_bound_shape(n, d_eff.max(1), b))
        })
        .collect();
    let worst = results
        .iter()
        .min_by(|x, y| (x.4 as f64 / x.5).total_cmp(&(y.4 as f64 / y.5)))
        .unwrap();
    let fails = results.iter().filter(|r| (r.4 as f64) < r.5 / 8.0).count();
    let detail = format!(
        "{} instances, min measured/shape = {:.3} at N={} B={} D={} 1/p={}",
        results.len(),
        worst.4 as f64 / worst.5,
        worst.0,
        worst.1,
        worst.2,
        worst.3
    );
    if fails == 0 {
        Ok(detail)
    } else {
        Err(format!("{fails} below 1/8 of the shape; {detail}"))
    }
}

fn oracle_comparison() -> Outcome {
    let shapes: Vec<TreeTopology> = (1..=10).flat_map(all_shapes).collect();
    let one = Ratio::from_integer(1);
    // (max aware ratio, max carving-only ratio, instances, failures)
    let (ratio, carve_ratio, count, fails) = shapes
        .par_iter()
        .map(|t| {
            let mut acc = (0.0f64, 0.0f64, 0u64, 0u64);
            for b in [2u64, 3, 4] {
                let aware = worst_case_by_depth(t, layout_aware(t, b, one).unwrap().block_ids());
                let carve = worst_case_by_depth(t, layout_phase2_only(t, b).unwrap().block_ids());
                for d in 0..=t.height() {
                    let opt = brute_force_optimal(t, b, d, DEFAULT_STATE_BUDGET).unwrap().cost as f64;
                    let r = aware[d as usize].worst_exact as f64 / opt;
                    acc.0 = acc.0.max(r);
                    acc.1 = acc.1.max(carve[d as usize].worst_exact as f64 / opt);
                    acc.2 += 1;
                    acc.3 += (r > 3.0) as u64;
                }
            }
            acc
        })
        .reduce(|| (0.0, 0.0, 0, 0), |a, b| (a.0.max(b.0), a.1.max(b.1), a.2 + b.2, a.3 + b.3));

    let p7 = gen_perfect(2).unwrap();
    let opt7 = brute_force_optimal(&p7, 3, 2, DEFAULT_STATE_BUDGET).unwrap().cost;
    let carve7 = worst_case_by_depth(&p7, layout_phase2_only(&p7, 3).unwrap().block_ids())[2].worst_exact;
    let full7 = worst_case_by_depth(&p7, layout_aware(&p7, 3, one).unwrap().block_ids())[2].worst_exact;
    let detail = format!(
        "{} shapes, {count} (tree,B,D) cases, max ratio {ratio:.3} (carving alone {carve_ratio:.3}); \
         perfect-7 B=3 D=2: optimum {opt7}, recursive carving {carve7}, two-phase {full7}",
        shapes.len()
    );
    if fails == 0 && opt7 == 2 && carve7 == 3 && full7 <= 3 * opt7 {
        Ok(detail)
    } else {
        Err(format!("{fails} cases above 3x; {detail}"))
    }
}

fn oblivious_factor(result: &SweepResult) -> Outcome {
    // (tree, B) -> per-depth aware costs
    let mut aware: HashMap<(&str, u64), Vec<u32>> = HashMap::new();
    for c in result.cells.iter().filter(|c| c.layout == LayoutKind::Aware) {
        aware.insert((&c.tree_id, c.block_size), c.depths.iter().map(|d| d.worst_exact).collect());
    }
    let mut by_family: BTreeMap<&str, BTreeMap<u64, f64>> = BTreeMap::new();
    for c in result.cells.iter().filter(|c| c.layout == LayoutKind::Oblivious) {
        let a = &aware[&(c.tree_id.as_str(), c.block_size)];
        let r = c
            .depths
            .iter()
            .zip(a)
            .map(|(o, &a)| o.worst_exact as f64 / a as f64)
            .fold(0.0, f64::max);
        let e = by_family.entry(c.family.name()).or_default().entry(c.requested_n).or_insert(0.0);
        *e = e.max(r);
    }
    let mut ok = true;
    let mut lines = Vec::new();
    for (family, m) in &by_family {
        let (g_ok, g) = growth_ok(m);
        let max = m.values().copied().fold(0.0, f64::max);
        ok &= g_ok && max <= 4.0;
        lines.push(format!("{family} [{}] growth {g:.3}", fmt_by_n(m)));
    }

    // Paths: the order is the identity, so every aligned block of B slots
    // holds B consecutive path nodes.
    let mut path_fail = None;
    'outer: for &n in &GRID_N {
        let p = gen_path(n as usize).unwrap();
        let o = layout_oblivious(&p);
        for b in 1..=512u64 {
            for off in [0, b / 2, b - 1] {
                let costs = worst_case_by_depth(&p, &o.blocks_at(b, off));
                if let Some(dc) =
                    costs.iter().find(|dc| dc.worst_exact as u64 > (dc.depth as u64).div_ceil(b) + 1)
                {
                    path_fail = Some(format!("path N={n} B={b} offset {off} D={}", dc.depth));
                    break 'outer;
                }
            }
        }
    }
    if let Some(f) = &path_fail {
        ok = false;
        lines.push(format!("path bound fails at {f}"));
    } else {
        lines.push("paths within ceil(D/B)+1 for B in 1..=512".into());
    }
    let detail = lines.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn min_time<T>(reps: usize, mut f: impl FnMut() -> T) -> Duration {
    (0..reps)
        .map(|_| {
            let start = Instant::now();
            std::hint::black_box(f());
            start.elapsed()
        })
        .min()
        .unwrap()
}

fn construction_scaling() -> Outcome {
    let sizes: Vec<usize> = (16..=20).map(|k| 1usize << k).collect();
    let trees: Vec<TreeTopology> = sizes.iter().map(|&n| gen_random(n, n as u64).unwrap()).collect();
    let one = Ratio::from_integer(1);
    let mut aware = Vec::new();
    let mut obl = Vec::new();
    for t in &trees {
        let reps = if t.len() <= 1 << 18 { 7 } else { 4 };
        aware.push(min_time(reps, || layout_aware(t, 64, one).unwrap()));
        obl.push(min_time(reps, || layout_oblivious(t)));
    }
    let ratios = |ts: &[Duration]| -> Vec<f64> {
        ts.windows(2).map(|w| w[1].as_secs_f64() / w[0].as_secs_f64()).collect()
    };
    let (ra, ro) = (ratios(&aware), ratios(&obl));
    let fmt = |ts: &[Duration], rs: &[f64]| {
        let ms: Vec<String> = ts.iter().map(|t| format!("{:.1}", t.as_secs_f64() * 1e3)).collect();
        let rs: Vec<String> = rs.iter().map(|r| format!("{r:.2}")).collect();
        format!("ms [{}] doubling [{}]", ms.join(" "), rs.join(" "))
    };
    let detail = format!("aware {}; oblivious {}", fmt(&aware, &ra), fmt(&obl, &ro));
    if ra.iter().all(|&r| r <= 2.5) && ro.iter().all(|&r| r <= 2.8) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() -> ExitCode {
    let started = Instant::now();
    let mut failed = 0;
    let mut report = |name: &str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let outcome = f();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS {name} ({secs:.1}s): {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL {name} ({secs:.1}s): {d}");
            }
        }
    };

    report("1 budget identity", &mut identity_suite);
    report("2 K-set invariant", &mut k_set_invariant);

    let grid = run_sweep(&grid_config("1/1")).expect("grid sweep");
    let half = run_sweep(&grid_config("1/2")).expect("grid sweep with c = 1/2");
    report("3 exclusion bound", &mut || exclusion(&[("c=1", &grid), ("c=1/2", &half)]));
    report("4 upper-bound shape", &mut || upper_bound_shape(&grid));
    report("5 lower-bound shape", &mut lower_bound_check);
    report("6 oracle comparison", &mut oracle_comparison);
    report("7 oblivious factor", &mut || oblivious_factor(&grid));
    report("8 construction scaling", &mut construction_scaling);

    println!("acceptance: {} failed, {:.1}s total", failed, started.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
