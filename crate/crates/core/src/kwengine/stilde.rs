use num_traits::{Signed, Zero};
use serde::Serialize;

use super::positive;
use crate::error::{domain, Result};
use crate::rational::{fmt_q, int, pow2_inv, Q};
use crate::realfunc::{eval, FunctionHandle};

/// Grids larger than this are coarsened.
const MAX_GRID: usize = 129;
const NODE_CAP: usize = 5000;

/// A nonempty sequence `(p_1, q_1), ..., (p_n, q_n)` in the tree, with the
/// approximate slopes used to admit it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StildeNode {
    pub pairs: Vec<(String, String)>,
    pub slopes: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct StildeResult {
    #[serde(serialize_with = "crate::rational::ser_q")]
    pub epsilon: Q,
    pub grid_depth: u64,
    /// Depth actually used after coarsening to at most 129 grid points.
    pub effective_depth: u64,
    #[serde(serialize_with = "crate::rational::ser_q")]
    pub window_lo: Q,
    #[serde(serialize_with = "crate::rational::ser_q")]
    pub window_hi: Q,
    pub max_len: u64,
    pub grid_points: usize,
    /// Longest chain found, capped at `max_len`.
    pub rank: u64,
    pub nodes: Vec<StildeNode>,
    pub truncated: bool,
}

/// Enumerate over the dyadic grid on `[0, 1]`.
pub fn stilde_enumerate(f: &FunctionHandle, eps: &Q, max_len: u64, grid_depth: u64) -> Result<StildeResult> {
    stilde_enumerate_in(f, eps, max_len, grid_depth, &Q::zero(), &int(1))
}

struct Grid {
    points: Vec<Q>,
    /// `slopes[a][b]` for `a < b`: approximate `Δ_f(p_a, p_b)`, within `ε/32`.
    slopes: Vec<Vec<Q>>,
}

impl Grid {
    fn build(f: &FunctionHandle, eps: &Q, depth: u64, lo: &Q, hi: &Q) -> Result<(Grid, u64)> {
        let mut depth = depth;
        let count = |d: u64| {
            let h = pow2_inv(d);
            let first: num_bigint::BigInt = crate::rational::floor(&(lo / &h)) + if (lo / &h).is_integer() { 0 } else { 1 };
            let last = crate::rational::floor(&(hi / &h));
            let n: num_bigint::BigInt = last - &first + 1;
            (first, n)
        };
        while depth > 0 && count(depth).1 > (MAX_GRID as i64).into() {
            depth -= 1;
        }
        let h = pow2_inv(depth);
        let (first, n) = count(depth);
        let n: usize = n.to_string().parse().unwrap_or(0);
        let points: Vec<Q> = (0..n).map(|k| (Q::from_integer(first.clone()) + int(k as i64)) * &h).collect();
        let tol = eps * &h / int(64);
        let values: Vec<Q> = points.iter().map(|p| eval(f, p, &tol).map(|v| v.0)).collect::<Result<_>>()?;
        let mut slopes = vec![Vec::new(); n];
        for a in 0..n {
            slopes[a] = (0..n)
                .map(|b| if b > a { (&values[b] - &values[a]) / (&points[b] - &points[a]) } else { Q::zero() })
                .collect();
        }
        Ok((Grid { points, slopes }, depth))
    }

    fn width_ok(&self, a: usize, b: usize, i: u64) -> bool {
        (&self.points[b] - &self.points[a]) * int(i as i64) <= int(1)
    }

    /// Longest admissible chain whose intervals all contain grid point `c`.
    fn chain_through(&self, c: usize, eps: &Q, max_len: u64) -> u64 {
        let n = self.points.len();
        let pairs: Vec<(usize, usize)> = (0..=c).flat_map(|a| (c.max(a + 1)..n).map(move |b| (a, b))).collect();
        let mut best = 0;
        let mut range: Option<(Q, Q)> = None;
        for i in 1..=max_len {
            let mut next: Option<(Q, Q)> = None;
            for &(a, b) in &pairs {
                if !self.width_ok(a, b, i) {
                    continue;
                }
                let s = &self.slopes[a][b];
                let ok = match &range {
                    None => true,
                    Some((mn, mx)) => *s >= mn + eps || *s <= mx - eps,
                };
                if ok {
                    next = Some(match next {
                        None => (s.clone(), s.clone()),
                        Some((mn, mx)) => (if *s < mn { s.clone() } else { mn }, if *s > mx { s.clone() } else { mx }),
                    });
                }
            }
            if next.is_none() {
                break;
            }
            best = i;
            range = next;
        }
        best
    }
}

/// Enumerate the tree over the dyadic grid of depth `grid_depth` restricted
/// to `[lo, hi]`.
///
/// `(p_1, q_1), ..., (p_n, q_n)` is a node when `q_i - p_i <= 1/i`, the
/// intervals share a point, and consecutive approximate slopes differ by at
/// least `ε`. Slopes are approximated to within `ε/32`, well inside the
/// `ε/4` the definition allows.
pub fn stilde_enumerate_in(f: &FunctionHandle, eps: &Q, max_len: u64, grid_depth: u64, lo: &Q, hi: &Q) -> Result<StildeResult> {
    positive(eps, "epsilon")?;
    if lo.is_negative() || *hi > int(1) || lo >= hi {
        return domain("need 0 <= lo < hi <= 1");
    }
    let (grid, effective_depth) = Grid::build(f, eps, grid_depth, lo, hi)?;
    let n = grid.points.len();
    let rank = (0..n).map(|c| grid.chain_through(c, eps, max_len)).max().unwrap_or(0);

    let mut nodes = Vec::new();
    let mut truncated = false;
    let mut stack: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
    while let Some(seq) = stack.pop() {
        let i = seq.len() as u64 + 1;
        if i > max_len {
            continue;
        }
        let (mut lo_i, mut hi_i) = (0usize, n.saturating_sub(1));
        for &(a, b) in &seq {
            lo_i = lo_i.max(a);
            hi_i = hi_i.min(b);
        }
        let mut children = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if a > hi_i || b < lo_i || !grid.width_ok(a, b, i) {
                    continue;
                }
                if let Some(&(pa, pb)) = seq.last() {
                    let gap = (&grid.slopes[a][b] - &grid.slopes[pa][pb]).abs();
                    if gap < *eps {
                        continue;
                    }
                }
                let mut next = seq.clone();
                next.push((a, b));
                children.push(next);
            }
        }
        for next in children.into_iter().rev() {
            if nodes.len() >= NODE_CAP {
                truncated = true;
                break;
            }
            nodes.push(StildeNode {
                pairs: next.iter().map(|&(a, b)| (fmt_q(&grid.points[a]), fmt_q(&grid.points[b]))).collect(),
                slopes: next.iter().map(|&(a, b)| fmt_q(&grid.slopes[a][b])).collect(),
            });
            stack.push(next);
        }
        if truncated {
            break;
        }
    }

    Ok(StildeResult {
        epsilon: eps.clone(),
        grid_depth,
        effective_depth,
        window_lo: lo.clone(),
        window_hi: hi.clone(),
        max_len,
        grid_points: n,
        rank,
        nodes,
        truncated,
    })
}

/// Whether a sequence of pairs passes the node test, using slopes accurate
/// to `ε/32`.
pub fn stilde_accepts(f: &FunctionHandle, eps: &Q, seq: &[(Q, Q)]) -> Result<bool> {
    positive(eps, "epsilon")?;
    let mut lo = Q::zero();
    let mut hi = int(1);
    let mut prev: Option<Q> = None;
    for (i, (p, qq)) in seq.iter().enumerate() {
        if p >= qq || (qq - p) * int(i as i64 + 1) > int(1) {
            return Ok(false);
        }
        lo = lo.max(p.clone());
        hi = hi.min(qq.clone());
        let (s, _) = super::secant(f, p, qq, &(eps / int(32)))?;
        if let Some(t) = &prev {
            if (&s - t).abs() < *eps {
                return Ok(false);
            }
        }
        prev = Some(s);
    }
    Ok(lo <= hi)
}
