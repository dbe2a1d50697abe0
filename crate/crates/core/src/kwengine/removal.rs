use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use super::{positive, symbolic_predicate};
use crate::error::Result;
use crate::ordinal::Ordinal;
use crate::rational::{int, max_q, min_q, pow2_inv, q, Q};
use crate::realfunc::{deriv_enclosure, first_piece_meeting, inner_interval, outer_interval, root_frame, Frame, FunctionHandle};
use crate::treeschema::ChildEntry;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// `f'` varies by less than `ε` over the ball.
    Oscillation,
    /// Every point of the previous stage in the ball is an anchor whose
    /// quadratic envelope flattens all secants through it.
    Anchors,
}

/// `x` is not in stage `stage` at sensitivity `epsilon`: every pair of
/// secants inside `B(x, delta)` whose overlap meets the previous stage has
/// slope gap at most `oscillation_bound < epsilon`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RemovalProof {
    #[serde(serialize_with = "crate::rational::ser_q")]
    pub x: Q,
    pub stage: u64,
    #[serde(serialize_with = "crate::rational::ser_q")]
    pub epsilon: Q,
    #[serde(serialize_with = "crate::rational::ser_q")]
    pub delta: Q,
    #[serde(serialize_with = "crate::rational::ser_q")]
    pub oscillation_bound: Q,
    pub route: Route,
}

const MAX_HALVINGS: u64 = 40;
const MAX_OUTER: u64 = 64;
const SCAN_LIMIT: usize = 100_000;

/// Try radii `b_S` (composites at `0`) and then `2^-k` until a proof
/// appears.
pub fn prove_removed(
    f: &FunctionHandle,
    x: &Q,
    eps: &Q,
    stage: u64,
    membership: &dyn Fn(&[u64]) -> bool,
) -> Result<Option<RemovalProof>> {
    positive(eps, "epsilon")?;
    if matches!(f, FunctionHandle::Composite { .. }) && x.is_zero() {
        for s in 0..MAX_OUTER {
            if let Some(p) = removal_at(f, x, &outer_interval(s).1, eps, stage, membership)? {
                return Ok(Some(p));
            }
        }
    }
    for k in 1..=MAX_HALVINGS {
        if let Some(p) = removal_at(f, x, &pow2_inv(k), eps, stage, membership)? {
            return Ok(Some(p));
        }
    }
    Ok(None)
}

/// Attempt a removal proof with the fixed radius `delta`.
pub fn removal_at(
    f: &FunctionHandle,
    x: &Q,
    delta: &Q,
    eps: &Q,
    stage: u64,
    membership: &dyn Fn(&[u64]) -> bool,
) -> Result<Option<RemovalProof>> {
    positive(delta, "delta")?;
    positive(eps, "epsilon")?;
    let lo = max_q(&(x - delta), &Q::zero());
    let hi = min_q(&(x + delta), &Q::one());
    let proof = |bound: Q, route| RemovalProof {
        x: x.clone(),
        stage,
        epsilon: eps.clone(),
        delta: delta.clone(),
        oscillation_bound: bound,
        route,
    };
    let (dl, dh) = deriv_enclosure(f, &lo, &hi)?;
    let osc = dh - dl;
    if osc < *eps {
        return Ok(Some(proof(osc, Route::Oscillation)));
    }
    if stage < 2 {
        return Ok(None);
    }
    let Some(alive) = alive_anchors(f, &lo, &hi, stage, membership)? else {
        return Ok(None);
    };
    let mut bound = Q::zero();
    for fr in &alive {
        if lo < fr.offset || hi > fr.to_global(&q(1, 2)) {
            return Ok(None);
        }
        // |f(y)| <= weight (y - z)^2 / W near the anchor z, so secants
        // through z have |slope| <= weight (q - p) / W.
        let b = int(4) * delta * &fr.weight / &fr.width;
        bound = max_q(&bound, &b);
    }
    Ok((bound < *eps).then(|| proof(bound, Route::Anchors)))
}

/// Frames in `[lo, hi]` whose anchors survive stage `stage - 1`, or `None`
/// when infinitely many subtrees of large rank meet the interval.
fn alive_anchors(
    f: &FunctionHandle,
    lo: &Q,
    hi: &Q,
    stage: u64,
    membership: &dyn Fn(&[u64]) -> bool,
) -> Result<Option<Vec<Frame>>> {
    let beta = Ordinal::nat(stage - 1);
    let mut stack: Vec<Frame> = Vec::new();
    match f {
        FunctionHandle::Tree(_) => stack.extend(root_frame(f, None)?),
        FunctionHandle::Composite { tail, .. } => {
            if lo.is_zero() && f.accumulates_at_zero() && tail.limsup_rank() > beta {
                return Ok(None);
            }
            if let Some(mut s) = first_piece_meeting(f, lo, hi) {
                loop {
                    let (a, b) = outer_interval(s);
                    if b < *lo || a > *hi || (s >= f.explicit_pieces() && tail.limsup_rank() <= beta) {
                        break;
                    }
                    stack.extend(root_frame(f, Some(s))?);
                    s += 1;
                    if s as usize > SCAN_LIMIT {
                        return Ok(None);
                    }
                }
            }
        }
    }
    let mut out = Vec::new();
    let mut visited = 0usize;
    while let Some(fr) = stack.pop() {
        visited += 1;
        if visited > SCAN_LIMIT {
            return Ok(None);
        }
        if fr.schema.limsup_rank() <= beta {
            continue;
        }
        let z = fr.anchor();
        if z >= *lo && z <= *hi && membership(&fr.address) {
            out.push(fr.clone());
        }
        let lo_l = fr.to_local(lo);
        let hi_l = fr.to_local(hi);
        let quarter = q(1, 4);
        if hi_l <= quarter || lo_l >= q(1, 2) {
            continue;
        }
        let unbounded = lo_l <= quarter;
        if unbounded && !tail_bounded(&fr, &beta) {
            return Ok(None);
        }
        let d = min_q(&hi_l, &q(1, 2)) - &quarter;
        let mut n = crate::rational::log4_ceil_inv(&d).saturating_sub(2);
        loop {
            let (a, b) = inner_interval(n);
            if b < lo_l || (unbounded && n >= fr.schema.finite_count()) {
                break;
            }
            if a <= hi_l {
                if let Some(c) = fr.child(n)? {
                    stack.push(c);
                }
            }
            n += 1;
            if n as usize > SCAN_LIMIT {
                return Ok(None);
            }
        }
    }
    Ok(Some(out))
}

/// Children past the finite repetitions all have rank at most `beta`, so
/// none of them holds a surviving anchor.
fn tail_bounded(fr: &Frame, beta: &Ordinal) -> bool {
    fr.schema.entries().iter().all(|e| match e {
        ChildEntry::Repeat(..) => true,
        ChildEntry::RepeatOmega(s) => s.limsup_rank() <= *beta,
        ChildEntry::Family(g) => match g {
            crate::treeschema::FamilyGen::WitnessFamily(lambda) => lambda <= beta,
        },
    })
}

/// Search `δ = 2^-k`, `k <= 12`, such that removal at stage `alpha` holds
/// at every center of spacing `δ/2` across `[i, j]`. The balls of radius
/// `δ` then cover `[i, j]`, so stage `alpha` is empty there.
pub fn emptiness_by_cover(f: &FunctionHandle, alpha: u64, eps: &Q, i: &Q, j: &Q) -> Result<Option<Q>> {
    positive(eps, "epsilon")?;
    if i < &Q::zero() || j > &Q::one() || i >= j {
        return crate::error::domain("need 0 <= i < j <= 1");
    }
    if alpha == 0 {
        return Ok(None);
    }
    let membership = symbolic_predicate(f, alpha);
    for k in 1..=12u64 {
        let delta = pow2_inv(k);
        let step = &delta / int(2);
        let count = crate::rational::floor(&((j - i) / &step)).to_string().parse::<u64>().unwrap_or(u64::MAX);
        let centers: Vec<Q> = (0..=count + 1).map(|m| min_q(&(i + &step * Q::from_integer(m.into())), j)).collect();
        let ok = centers
            .par_iter()
            .map(|c| removal_at(f, c, &delta, eps, alpha, &membership).map(|p| p.is_some()))
            .try_fold(|| true, |acc, r| r.map(|b| acc && b))
            .try_reduce(|| true, |a, b| Ok(a && b))?;
        if ok {
            return Ok(Some(delta));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treeschema::{rank_witness, TreeSchema};

    fn witness(n: u64) -> FunctionHandle {
        FunctionHandle::tree(rank_witness(&Ordinal::nat(n)).unwrap())
    }

    #[test]
    fn rank_two_anchor_removed_at_stage_two() {
        let f = witness(2);
        let m = symbolic_predicate(&f, 2);
        let p = prove_removed(&f, &q(1, 4), &q(1, 4), 2, &m).unwrap().unwrap();
        assert_eq!(p.route, Route::Anchors);
        assert!(p.oscillation_bound < q(1, 4));
        let m1 = symbolic_predicate(&f, 1);
        assert!(prove_removed(&f, &q(1, 4), &q(1, 4), 1, &m1).unwrap().is_none());
    }

    #[test]
    fn leaf_removed_for_huge_epsilon() {
        let f = FunctionHandle::tree(TreeSchema::leaf());
        let m = symbolic_predicate(&f, 1);
        for x in [q(0, 1), q(1, 3), q(3, 4), q(1, 1)] {
            let p = prove_removed(&f, &x, &int(10), 1, &m).unwrap().unwrap();
            assert_eq!(p.delta, q(1, 2));
        }
    }

    #[test]
    fn composite_zero_uses_outer_radius() {
        let f = FunctionHandle::composite(vec![], TreeSchema::leaf());
        let m = symbolic_predicate(&f, 1);
        let p = prove_removed(&f, &Q::zero(), &q(1, 2), 1, &m).unwrap().unwrap();
        // 4 / (S + 1) < 1/2 first at S = 8.
        assert_eq!(p.delta, outer_interval(8).1);
        assert_eq!(p.oscillation_bound, q(4, 9));
    }

    #[test]
    fn cover_examples() {
        let e = q(1, 4);
        assert!(emptiness_by_cover(&witness(1), 1, &e, &Q::zero(), &Q::one()).unwrap().is_some());
        assert!(emptiness_by_cover(&witness(2), 1, &e, &Q::zero(), &Q::one()).unwrap().is_none());
        assert_eq!(emptiness_by_cover(&witness(2), 1, &int(100), &Q::zero(), &Q::one()).unwrap(), Some(q(1, 2)));
    }
}
