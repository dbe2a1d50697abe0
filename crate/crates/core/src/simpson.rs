//! Finite fragments of codes for continuous functions.
//!
//! A quintuple `(n, a, r, b, s)` claims `f(B(a, r)) ⊆ closed B(b, s)`. The
//! exported set is closed under shrinking the domain ball and enlarging the
//! range ball, restricted to the balls that occur in it.

use std::collections::HashSet;

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::Result;
use crate::rational::{fmt_q, int, max_q, min_q, pow2_inv, q, to_f64, Q};
use crate::realfunc::{deriv_enclosure, eval, FunctionHandle};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Quintuple {
    pub n: u64,
    #[serde(serialize_with = "crate::rational::ser_q")]
    pub a: Q,
    #[serde(serialize_with = "crate::rational::ser_q")]
    pub r: Q,
    #[serde(serialize_with = "crate::rational::ser_q")]
    pub b: Q,
    #[serde(serialize_with = "crate::rational::ser_q")]
    pub s: Q,
}

impl Quintuple {
    pub fn csv_row(&self) -> String {
        format!("{},{},{},{},{}", self.n, fmt_q(&self.a), fmt_q(&self.r), fmt_q(&self.b), fmt_q(&self.s))
    }
}

/// `(a', r') < (a, r)`: the first ball sits strictly inside the second.
pub fn ball_lt(a1: &Q, r1: &Q, a2: &Q, r2: &Q) -> bool {
    (a1 - a2).abs() + r1 < *r2
}

type Ball = (Q, Q);

/// Float shadow of a ball, used to skip pairs that are plainly not nested
/// before the exact test.
#[derive(Clone, Copy)]
struct Shadow(f64, f64);

impl Shadow {
    fn of(c: &Q, r: &Q) -> Self {
        Shadow(to_f64(c), to_f64(r))
    }

    /// False only when `self < other` is impossible; the margin dwarfs the
    /// rounding error of `to_f64`.
    fn may_lt(self, other: Shadow) -> bool {
        let d = (self.0 - other.0).abs() + self.1 - other.1;
        let margin = 1e-9 * (1.0 + self.0.abs() + other.0.abs() + self.1.abs() + other.1.abs());
        !(d >= margin)
    }
}

/// Export a closed fragment of a code for `f`.
///
/// Domain balls are dyadic: centres `i / 2^j` with radius `2^-j` for
/// `j = 1..=J`, plus the coarse ball `(1/2, 1)`. The finest level is chosen
/// so that its range radii are at most `1 / budget`, which gives the cover
/// property for every precision `1/k` with `k <= budget`.
pub fn export_simpson_code(f: &FunctionHandle, budget: u64) -> Result<Vec<Quintuple>> {
    let budget = budget.max(1);
    let mut levels = 1;
    while (1u64 << levels) < 4 * budget {
        levels += 1;
    }
    let mut base: Vec<(Ball, Ball)> = vec![((q(1, 2), int(1)), (Q::zero(), int(1)))];
    for j in 1..=levels {
        let r = pow2_inv(j);
        let tol = &r / int(64);
        for i in 0..=(1u64 << j) {
            let a = Q::from_integer(i.into()) * &r;
            let (v, err) = eval(f, &a, &tol)?;
            let lo = max_q(&(&a - &r), &Q::zero());
            let hi = min_q(&(&a + &r), &int(1));
            let (dl, dh) = deriv_enclosure(f, &lo, &hi)?;
            let lip = max_q(&dl.abs(), &dh.abs());
            base.push(((a, r.clone()), (v, err + lip * &r)));
        }
    }
    let domains: Vec<Ball> = dedup(base.iter().map(|(d, _)| d.clone()));
    let ranges: Vec<Ball> = dedup(base.iter().map(|(_, g)| g.clone()));
    let shadow = |b: &Ball| Shadow::of(&b.0, &b.1);
    let base_sh: Vec<(Shadow, Shadow)> = base.iter().map(|(d, g)| (shadow(d), shadow(g))).collect();
    let range_sh: Vec<Shadow> = ranges.iter().map(shadow).collect();
    let mut out = Vec::new();
    for d in &domains {
        let dsh = shadow(d);
        let inherited: Vec<(&Ball, Shadow)> = base
            .iter()
            .zip(&base_sh)
            .filter(|((d0, _), (s0, _))| d0 == d || (dsh.may_lt(*s0) && ball_lt(&d.0, &d.1, &d0.0, &d0.1)))
            .map(|((_, g0), (_, gs))| (g0, *gs))
            .collect();
        for (g, gsh) in ranges.iter().zip(&range_sh) {
            if inherited.iter().any(|(g0, s0)| *g0 == g || (s0.may_lt(*gsh) && ball_lt(&g0.0, &g0.1, &g.0, &g.1))) {
                out.push(Quintuple { n: out.len() as u64, a: d.0.clone(), r: d.1.clone(), b: g.0.clone(), s: g.1.clone() });
            }
        }
    }
    Ok(out)
}

fn dedup(items: impl Iterator<Item = Ball>) -> Vec<Ball> {
    let mut seen = HashSet::new();
    items.filter(|b| seen.insert(b.clone())).collect()
}

/// Check conditions (1)-(3) over every pair of members. Returns a
/// description of the first violation.
pub fn check_closure(code: &[Quintuple]) -> std::result::Result<(), String> {
    let claims: HashSet<(&Q, &Q, &Q, &Q)> = code.iter().map(|c| (&c.a, &c.r, &c.b, &c.s)).collect();
    let domains: Vec<(&Q, &Q)> = {
        let mut seen = HashSet::new();
        code.iter().map(|c| (&c.a, &c.r)).filter(|d| seen.insert(*d)).collect()
    };
    let ranges: Vec<(&Q, &Q)> = {
        let mut seen = HashSet::new();
        code.iter().map(|c| (&c.b, &c.s)).filter(|g| seen.insert(*g)).collect()
    };
    let dsh: Vec<Shadow> = domains.iter().map(|(a, r)| Shadow::of(a, r)).collect();
    let rsh: Vec<Shadow> = ranges.iter().map(|(b, s)| Shadow::of(b, s)).collect();
    let mut by_domain: std::collections::HashMap<(&Q, &Q), Vec<&Quintuple>> = Default::default();
    for c in code {
        by_domain.entry((&c.a, &c.r)).or_default().push(c);
    }
    for group in by_domain.values() {
        for x in group {
            for y in group {
                if (&x.b - &y.b).abs() > &x.s + &y.s {
                    return Err(format!("condition (1) fails for quintuples {} and {}", x.n, y.n));
                }
            }
        }
    }
    for c in code {
        let (cd, cr) = (Shadow::of(&c.a, &c.r), Shadow::of(&c.b, &c.s));
        for ((a2, r2), sh) in domains.iter().zip(&dsh) {
            if sh.may_lt(cd) && ball_lt(a2, r2, &c.a, &c.r) && !claims.contains(&(*a2, *r2, &c.b, &c.s)) {
                return Err(format!("condition (2) fails: quintuple {} not inherited by ({}, {})", c.n, fmt_q(a2), fmt_q(r2)));
            }
        }
        for ((b2, s2), sh) in ranges.iter().zip(&rsh) {
            if cr.may_lt(*sh) && ball_lt(&c.b, &c.s, b2, s2) && !claims.contains(&(&c.a, &c.r, *b2, *s2)) {
                return Err(format!("condition (3) fails: quintuple {} not enlarged to ({}, {})", c.n, fmt_q(b2), fmt_q(s2)));
            }
        }
    }
    Ok(())
}

/// True when the domain balls of quintuples with `s <= 1/k` cover `[0, 1]`.
pub fn covers_at_precision(code: &[Quintuple], k: u64) -> bool {
    let bound = q(1, k as i64);
    let mut balls: Vec<(Q, Q)> = code
        .iter()
        .filter(|c| c.s <= bound)
        .map(|c| (&c.a - &c.r, &c.a + &c.r))
        .collect();
    balls.sort();
    // Open balls: every point, including the endpoints 0 and 1, must lie
    // strictly inside some ball.
    let mut reach = None::<Q>;
    for (lo, hi) in balls {
        let covered = match &reach {
            None => lo.is_negative(),
            Some(r) => lo < *r,
        };
        if !covered {
            return false;
        }
        if reach.as_ref().is_none_or(|r| hi > *r) {
            reach = Some(hi);
        }
        if reach.as_ref().is_some_and(|r| *r > int(1)) {
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treeschema::TreeSchema;

    #[test]
    fn leaf_code_is_closed_and_covers() {
        let f = FunctionHandle::tree(TreeSchema::leaf());
        let code = export_simpson_code(&f, 4).unwrap();
        assert!(code.iter().any(|c| c.r == int(1) && c.s == int(1)));
        check_closure(&code).unwrap();
        for k in 1..=4 {
            assert!(covers_at_precision(&code, k), "k = {k}");
        }
    }

    #[test]
    fn closure_checker_rejects_missing_inheritance() {
        let c = |n, a: Q, r: Q, b: Q, s: Q| Quintuple { n, a, r, b, s };
        let code = vec![c(0, q(1, 2), int(1), Q::zero(), int(1)), c(1, q(1, 2), q(1, 4), int(5), int(1))];
        assert!(check_closure(&code).is_err());
    }
}

#[cfg(test)]
mod shadow_props {
    use super::*;
    use proptest::prelude::*;

    fn rational() -> impl Strategy<Value = Q> {
        (-(1i64 << 40)..(1i64 << 40), 1i64..(1i64 << 40)).prop_map(|(n, d)| q(n, d))
    }

    proptest! {
        #[test]
        fn filter_never_hides_a_nested_pair(a1 in rational(), r1 in rational(), a2 in rational(), r2 in rational()) {
            if ball_lt(&a1, &r1, &a2, &r2) {
                prop_assert!(Shadow::of(&a1, &r1).may_lt(Shadow::of(&a2, &r2)));
            }
        }

        #[test]
        fn filter_on_near_misses(k in 1u32..60, n in 0i64..1000) {
            // Inner ball radius just under or equal to the gap.
            let a = q(n, 1000);
            let eps = pow2_inv(k as u64);
            let inner = q(1, 4) - &eps;
            if ball_lt(&a, &inner, &a, &q(1, 4)) {
                prop_assert!(Shadow::of(&a, &inner).may_lt(Shadow::of(&a, &q(1, 4))));
            }
        }
    }
}
