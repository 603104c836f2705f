//! The piecewise asymptotic transfer bound, the balance equation that picks
//! the worst density, and the budget algebra along a path.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use crate::error::{Error, Result};
use crate::tree::{NodeId, TreeTopology, WeightTable};

/// `D / lg(1 + B)`: shallow paths.
pub fn shallow_case(d: f64, b: f64) -> f64 {
    d / (1.0 + b).log2()
}

/// `lg N / lg(1 + B·lg N / D)`: intermediate depths.
pub fn middle_case(n: f64, d: f64, b: f64) -> f64 {
    let lg_n = n.log2();
    lg_n / (1.0 + b * lg_n / d).log2()
}

/// `D / B`: very deep paths.
pub fn deep_case(d: f64, b: f64) -> f64 {
    d / b
}

/// Piecewise bound with case boundaries at `D = lg N` and `D = B·lg N`.
pub fn theoretical_bound(n: u64, d: u64, b: u64) -> f64 {
    if d == 0 {
        return 0.0;
    }
    let (nf, df, bf) = (n as f64, d as f64, b as f64);
    let lg_n = nf.log2();
    if df <= lg_n {
        shallow_case(df, bf)
    } else if df <= bf * lg_n {
        middle_case(nf, df, bf)
    } else {
        deep_case(df, bf)
    }
}

/// An evaluated `(N, D, B)` triple.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundQuery {
    pub n: u64,
    pub d: u64,
    pub b: u64,
    pub value: f64,
}

impl BoundQuery {
    pub fn new(n: u64, d: u64, b: u64) -> Self {
        BoundQuery { n, d, b, value: theoretical_bound(n, d, b) }
    }

    /// The bound as a transfer count: any nonempty traversal costs at least one.
    pub fn floor_one(&self) -> f64 {
        if self.d == 0 {
            self.value
        } else {
            self.value.max(1.0)
        }
    }
}

/// The shape forced by the adversarial construction:
/// `lg N / lg(2 + B·lg N / D)`.
pub fn lower_bound_shape(n: u64, d: u64, b: u64) -> f64 {
    let lg_n = (n as f64).log2();
    lg_n / (2.0 + b as f64 * lg_n / d as f64).log2()
}

/// Solves `(1/p)·lg(1/p) = B·lg N / (2D)` for `p` by bisection on `1/p`,
/// to relative tolerance 1e-9, clamped to `[1/N, 1]`.
pub fn solve_p(n: u64, d: u64, b: u64) -> f64 {
    assert!(d >= 1, "depth must be positive");
    let target = b as f64 * (n as f64).log2() / (2.0 * d as f64);
    let f = |y: f64| y * y.log2();
    if target <= 0.0 {
        return 1.0;
    }
    let mut hi = (n as f64).max(1.0);
    if f(hi) <= target {
        return 1.0 / hi;
    }
    // Bisect to full precision; that is well inside the 1e-9 tolerance.
    let mut lo = 1.0;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    1.0 / (0.5 * (lo + hi))
}

/// `1/p` rounded to the nearest power of two in log scale, at least 2.
pub fn inv_p_power_of_two(p: f64) -> u64 {
    let e = (1.0 / p).log2().round().max(1.0);
    1u64 << (e as u32).min(62)
}

/// Budgets delivered along a path, by the recurrence and by the closed form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BudgetTrace {
    /// `m_0 = B`, `m_k = (m_{k−1} − 1)·q_k`.
    pub recurrence: Vec<BigRational>,
    /// `B·p_k − Σ_{i<k} p_k/p_i`.
    pub closed_form: Vec<BigRational>,
}

impl BudgetTrace {
    pub fn agrees(&self) -> bool {
        self.recurrence == self.closed_form
    }
}

/// Evaluates the budget algebra along `path`, which must start anywhere and
/// descend parent to child. Densities are relative to `path[0]`.
pub fn budget_along_path(
    tree: &TreeTopology,
    weights: &WeightTable,
    block_size: u64,
    path: &[NodeId],
) -> Result<BudgetTrace> {
    let Some(&top) = path.first() else {
        return Err(Error::NotAPath(0));
    };
    for (i, &x) in path.iter().enumerate() {
        if !tree.contains(x) {
            return Err(Error::IdOutOfRange { id: x.0 as u64, n: tree.len() });
        }
        if i > 0 && tree.parent(x) != Some(path[i - 1]) {
            return Err(Error::NotAPath(i));
        }
    }
    let b = BigRational::from_integer(BigInt::from(block_size));
    let w = |x: NodeId| BigInt::from(weights.get(x));
    let density: Vec<BigRational> =
        path.iter().map(|&x| BigRational::new(w(x), w(top))).collect();

    let mut recurrence = vec![b.clone()];
    for k in 1..path.len() {
        let q = BigRational::new(w(path[k]), w(path[k - 1]));
        let prev = &recurrence[k - 1];
        recurrence.push((prev - BigRational::one()) * q);
    }

    let closed_form = (0..path.len())
        .map(|k| {
            let pk = &density[k];
            let mut m = &b * pk;
            for pi in &density[..k] {
                m -= pk / pi;
            }
            m
        })
        .collect();

    Ok(BudgetTrace { recurrence, closed_form })
}

/// First index whose budget drops below one, i.e. the first path node left
/// out of the root block.
pub fn first_excluded(trace: &BudgetTrace) -> Option<usize> {
    trace.recurrence.iter().position(|m| *m < BigRational::one())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aware::{k_set, Budget};
    use crate::gen::{gen_path, gen_random};
    use proptest::prelude::*;

    fn r(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn bound_examples() {
        assert_eq!(theoretical_bound(1 << 16, 0, 16), 0.0);
        let v = theoretical_bound(1 << 16, 16, 16);
        assert!((v - 16.0 / 17f64.log2()).abs() < 1e-12);
        assert!((v - 3.914).abs() < 1e-3);
        assert_eq!(theoretical_bound(1 << 16, 1 << 20, 16), 65536.0);
        assert_eq!(BoundQuery::new(4, 1, 1024).floor_one(), 1.0);
        assert_eq!(BoundQuery::new(4, 0, 1024).floor_one(), 0.0);
    }

    #[test]
    fn bound_is_positive_past_zero() {
        for n in [2u64, 17, 1 << 10, 1 << 20] {
            for b in [1u64, 4, 64] {
                for d in 1..200 {
                    assert!(theoretical_bound(n, d, b) > 0.0);
                }
            }
        }
    }

    #[test]
    fn cases_meet_at_boundaries() {
        for lg in 1..=40u32 {
            for n in [(1u64 << lg) - 1, 1 << lg, (1 << lg) + 1] {
                if n < 2 {
                    continue;
                }
                let nf = n as f64;
                let d1 = nf.log2().ceil();
                for b in [1u64, 2, 3, 4, 7, 16, 64, 255, 256, 1 << 12, 1 << 20] {
                    let bf = b as f64;
                    let (s, m) = (shallow_case(d1, bf), middle_case(nf, d1, bf));
                    assert!(s.max(m) / s.min(m) <= 2.0, "N={n} B={b}: {s} vs {m}");
                    let d2 = bf * d1;
                    let (m, dp) = (middle_case(nf, d2, bf), deep_case(d2, bf));
                    assert!(m.max(dp) / m.min(dp) <= 2.0, "N={n} B={b}: {m} vs {dp}");
                }
            }
        }
    }

    #[test]
    fn solve_p_closed_case() {
        // B lg N / (2D) = 2: 16·lg 256 / (2·32) = 2
        let p = solve_p(256, 32, 16);
        assert!((1.0 / p - 2.0).abs() < 1e-8, "{p}");
        // tiny right-hand side drives p to 1
        assert!(solve_p(2, 1 << 30, 1) > 0.999_999);
        // huge right-hand side clamps at 1/N
        assert_eq!(solve_p(16, 1, 1 << 40), 1.0 / 16.0);
    }

    #[test]
    fn solve_p_residual_grid() {
        for n in [1u64 << 4, 1 << 10, 1 << 16, 1 << 30] {
            for b in [2u64, 16, 256, 4096] {
                for d in [1u64, 3, 10, 100, 1000, 100_000] {
                    let p = solve_p(n, d, b);
                    let y = 1.0 / p;
                    let rhs = b as f64 * (n as f64).log2() / (2.0 * d as f64);
                    if y >= n as f64 * (1.0 - 1e-12) || rhs <= 0.0 {
                        continue;
                    }
                    let res = (y * y.log2() - rhs).abs() / rhs;
                    assert!(res < 1e-6, "N={n} B={b} D={d}: residual {res}");
                }
            }
        }
    }

    #[test]
    fn power_of_two_rounding() {
        assert_eq!(inv_p_power_of_two(0.9), 2);
        assert_eq!(inv_p_power_of_two(1.0 / 5.0), 4);
        assert_eq!(inv_p_power_of_two(1.0 / 6.0), 8);
        assert_eq!(inv_p_power_of_two(1.0 / 1000.0), 1024);
    }

    #[test]
    fn path4_budgets() {
        let p = gen_path(4).unwrap();
        let w = WeightTable::compute(&p);
        let path: Vec<NodeId> = (0..4).map(NodeId).collect();
        let t = budget_along_path(&p, &w, 4, &path).unwrap();
        assert_eq!(t.recurrence[..3], [r(4, 1), r(9, 4), r(5, 6)]);
        // (5/6 − 1)·(1/2) = −1/12
        assert_eq!(t.recurrence[3], r(-1, 12));
        assert!(t.agrees());
        assert_eq!(first_excluded(&t), Some(2));

        let t = budget_along_path(&p, &w, 7, &path[..1]).unwrap();
        assert_eq!(t.recurrence, vec![r(7, 1)]);
        assert!(t.agrees());
    }

    #[test]
    fn rejects_non_paths() {
        let p = gen_path(4).unwrap();
        let w = WeightTable::compute(&p);
        assert!(matches!(
            budget_along_path(&p, &w, 4, &[NodeId(0), NodeId(2)]),
            Err(Error::NotAPath(1))
        ));
        assert!(budget_along_path(&p, &w, 4, &[]).is_err());
        assert!(budget_along_path(&p, &w, 4, &[NodeId(9)]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn recurrence_matches_closed_form_and_k_set(n in 1usize..600, seed: u64, b in 1u64..100, turns: u64) {
            let t = gen_random(n, seed).unwrap();
            let w = WeightTable::compute(&t);
            let top = NodeId((seed % n as u64) as u32);
            let mut path = vec![top];
            let mut bits = turns;
            while let Some(&x) = path.last() {
                let kids: Vec<NodeId> = t.children(x).collect();
                if kids.is_empty() { break; }
                path.push(kids[(bits & 1) as usize % kids.len()]);
                bits = bits.rotate_right(1);
            }
            let trace = budget_along_path(&t, &w, b, &path).unwrap();
            prop_assert!(trace.agrees());
            // membership in K(top, B) along the path iff every budget so far is ≥ 1
            let k = k_set(&t, &w, top, &Budget::whole(b));
            let cut = first_excluded(&trace).unwrap_or(path.len());
            for (i, x) in path.iter().enumerate() {
                prop_assert_eq!(k.contains(x), i < cut);
            }
        }
    }
}
