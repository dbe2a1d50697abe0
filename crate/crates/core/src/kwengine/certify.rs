use num_traits::Zero;
use serde::Serialize;

use super::{frames_meeting, positive, Comparison};
use crate::error::{domain, Result};
use crate::rational::{max_q, min_q, q, Q};
use crate::realfunc::{eval, FunctionHandle};

/// Two overlapping secants near `x` whose slopes differ by more than the
/// sensitivity, with a point of the previous stage in their overlap.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Certificate {
    #[serde(serialize_with = "crate::rational::ser_q")]
    pub p: Q,
    #[serde(serialize_with = "crate::rational::ser_q")]
    pub q: Q,
    #[serde(serialize_with = "crate::rational::ser_q")]
    pub r: Q,
    #[serde(serialize_with = "crate::rational::ser_q")]
    pub s: Q,
    #[serde(serialize_with = "crate::rational::ser_q")]
    pub slope_gap_lower_bound: Q,
    #[serde(serialize_with = "crate::rational::ser_q")]
    pub meet_point: Q,
    /// Anchor address of the surviving node in the overlap; `None` at
    /// stage 1 where every point survives stage 0.
    pub stage_witness: Option<Vec<u64>>,
}

/// Certificate search with the strict comparison.
pub fn find_certificate(
    f: &FunctionHandle,
    x: &Q,
    delta: &Q,
    eps: &Q,
    stage: u64,
    membership: &dyn Fn(&[u64]) -> bool,
    search_budget: usize,
) -> Result<Option<Certificate>> {
    find_certificate_with(f, x, delta, eps, stage, membership, search_budget, Comparison::Strict)
}

/// Search the structural candidate points in `B(x, δ)` for the
/// lexicographically least quadruple `(p, q, r, s)` whose rigorous slope
/// gap passes `cmp` against `eps`.
///
/// At stage `k >= 2` the overlap must contain the anchor of a node accepted
/// by `membership` (survival through stage `k - 1`) whose weight keeps its
/// own slope gap `weight / 3` above `eps`.
#[allow(clippy::too_many_arguments)]
pub fn find_certificate_with(
    f: &FunctionHandle,
    x: &Q,
    delta: &Q,
    eps: &Q,
    stage: u64,
    membership: &dyn Fn(&[u64]) -> bool,
    search_budget: usize,
    cmp: Comparison,
) -> Result<Option<Certificate>> {
    positive(delta, "delta")?;
    positive(eps, "epsilon")?;
    if stage == 0 {
        return domain("stage must be at least 1");
    }
    let lo = x - delta;
    let hi = x + delta;
    let zero = Q::zero();
    let one = Q::from_integer(1.into());
    let frames = frames_meeting(f, &max_q(&lo, &zero), &min_q(&hi, &one), search_budget.max(4))?;
    let locals = [Q::zero(), q(1, 2), q(3, 4), one.clone()];
    let mut points = Vec::new();
    'outer: for fr in &frames {
        for t in &locals {
            let y = fr.to_global(t);
            if y > lo && y < hi && y >= zero && y <= one {
                points.push(y);
                if points.len() >= search_budget {
                    break 'outer;
                }
            }
        }
    }
    points.sort();
    points.dedup();
    if points.len() < 2 {
        return Ok(None);
    }

    let mut anchors: Vec<(Q, Vec<u64>)> = Vec::new();
    if stage >= 2 {
        for fr in &frames {
            let z = fr.anchor();
            let valid = match cmp {
                Comparison::Strict => *eps < &fr.weight / q(3, 1),
                Comparison::NonStrict => *eps <= &fr.weight / q(3, 1),
            };
            if z > lo && z < hi && valid && membership(&fr.address) {
                anchors.push((z, fr.address.clone()));
            }
        }
        anchors.sort();
        if anchors.is_empty() {
            return Ok(None);
        }
    }

    let min_gap = points.windows(2).map(|w| &w[1] - &w[0]).min().expect("two points");
    let tol = eps * &min_gap * &min_gap / q(1024, 1);
    let values: Vec<(Q, Q)> = points.iter().map(|y| eval(f, y, &tol)).collect::<Result<_>>()?;
    let k = points.len();
    let mut slopes = vec![vec![(Q::zero(), Q::zero()); k]; k];
    let mut max_lo: Option<Q> = None;
    let mut min_hi: Option<Q> = None;
    for i in 0..k {
        for j in i + 1..k {
            let w = &points[j] - &points[i];
            let c = (&values[j].0 - &values[i].0) / &w;
            let e = (&values[i].1 + &values[j].1) / &w;
            let (l, h) = (&c - &e, &c + &e);
            if max_lo.as_ref().is_none_or(|m| l > *m) {
                max_lo = Some(l.clone());
            }
            if min_hi.as_ref().is_none_or(|m| h < *m) {
                min_hi = Some(h.clone());
            }
            slopes[i][j] = (l, h);
        }
    }
    let (max_lo, min_hi) = (max_lo.expect("pairs"), min_hi.expect("pairs"));
    // At stage 2 and up both intervals must contain an anchor; skip pairs
    // that cannot.
    let first: Vec<usize> = points.iter().map(|y| anchors.partition_point(|(z, _)| z < y)).collect();
    let spans = |i: usize, j: usize| stage == 1 || anchors.get(first[i]).is_some_and(|(z, _)| *z <= points[j]);

    for i in 0..k {
        for j in i + 1..k {
            if !spans(i, j) {
                continue;
            }
            let (l1, h1) = &slopes[i][j];
            let best = max_q(&(&max_lo - h1), &(l1 - &min_hi));
            if !cmp.passes(&best, eps) {
                continue;
            }
            for a in 0..k {
                if points[a] > points[j] {
                    break;
                }
                for b in a + 1..k {
                    if points[b] < points[i] || !spans(a, b) {
                        continue;
                    }
                    let (l2, h2) = &slopes[a][b];
                    let gap = max_q(&(l1 - h2), &(l2 - h1));
                    if !cmp.passes(&gap, eps) {
                        continue;
                    }
                    let m0 = max_q(&points[i], &points[a]);
                    let m1 = min_q(&points[j], &points[b]);
                    if m0 > m1 {
                        continue;
                    }
                    let (meet_point, stage_witness) = if stage == 1 {
                        (m0, None)
                    } else {
                        let at = anchors.partition_point(|(z, _)| *z < m0);
                        match anchors.get(at) {
                            Some((z, addr)) if *z <= m1 => (z.clone(), Some(addr.clone())),
                            _ => continue,
                        }
                    };
                    return Ok(Some(Certificate {
                        p: points[i].clone(),
                        q: points[j].clone(),
                        r: points[a].clone(),
                        s: points[b].clone(),
                        slope_gap_lower_bound: gap,
                        meet_point,
                        stage_witness,
                    }));
                }
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kwengine::symbolic_predicate;
    use crate::ordinal::Ordinal;
    use crate::rational::pow2_inv;
    use crate::treeschema::{rank_witness, TreeSchema};

    fn witness(n: u64) -> FunctionHandle {
        FunctionHandle::tree(rank_witness(&Ordinal::nat(n)).unwrap())
    }

    #[test]
    fn rank_two_anchor_stage_one() {
        let f = witness(2);
        let m = symbolic_predicate(&f, 1);
        let c = find_certificate(&f, &q(1, 4), &q(1, 64), &q(1, 4), 1, &m, 48).unwrap().unwrap();
        assert!(c.slope_gap_lower_bound >= q(1, 3) - pow2_inv(20));
        assert!(c.p < c.q && c.r < c.s);
        assert!(c.stage_witness.is_none());
    }

    #[test]
    fn rank_three_anchor_stage_two() {
        let f = witness(3);
        let m = symbolic_predicate(&f, 2);
        let c = find_certificate(&f, &q(1, 4), &q(1, 64), &q(1, 4), 2, &m, 48).unwrap().unwrap();
        let addr = c.stage_witness.unwrap();
        assert_eq!(addr.len(), 1);
        assert!(c.meet_point > q(1, 4));
    }

    #[test]
    fn nothing_near_a_leaf_anchor() {
        let f = witness(1);
        let m = symbolic_predicate(&f, 1);
        assert!(find_certificate(&f, &q(1, 4), &q(1, 64), &q(1, 4), 1, &m, 48).unwrap().is_none());
        let z = FunctionHandle::tree(TreeSchema::Empty);
        assert!(find_certificate(&z, &q(1, 2), &q(1, 4), &q(1, 100), 1, &m, 48).unwrap().is_none());
        assert!(find_certificate(&f, &q(1, 4), &Q::zero(), &q(1, 4), 1, &m, 48).is_err());
    }
}
