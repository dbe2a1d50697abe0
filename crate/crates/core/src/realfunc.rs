//! Differentiable functions on `[0, 1]` attached to tree schemas.
//!
//! `f_T = p[1/2, 1] + sum_n f_{T_n}[a_n, b_n]` where `p` is the bump
//! `8 x^2 (1 - x)^2` and `f[a, b](x) = (b - a) f((x - a) / (b - a))`.
//! Because the child intervals are pairwise disjoint and disjoint from
//! `[1/2, 1]`, evaluation follows a single path down the tree.

use std::fmt;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};

use crate::error::{domain, Result};
use crate::rational::{int, log4_ceil_inv, max_q, min_q, pow4_inv, q, Q};
use crate::treeschema::TreeSchema;

fn unit(x: &Q, what: &str) -> Result<()> {
    if x.is_negative() || *x > Q::one() {
        return domain(format!("{what} needs x in [0, 1], got {}", crate::rational::fmt_q(x)));
    }
    Ok(())
}

/// `p(x) = 8 x^2 (1 - x)^2`.
pub fn bump(x: &Q) -> Result<Q> {
    unit(x, "bump")?;
    let y = int(1) - x;
    Ok(int(8) * x * x * &y * &y)
}

/// `p'(x) = 16 x (1 - x) (1 - 2x)`.
pub fn bump_deriv(x: &Q) -> Result<Q> {
    unit(x, "bump_deriv")?;
    Ok(int(16) * x * (int(1) - x) * (int(1) - int(2) * x))
}

/// Rational upper bound for `max |p'| = 8 sqrt(3) / 9`.
pub fn bump_deriv_max() -> Q {
    q(15397, 10000)
}

/// `c[a, b] = a + c (b - a)`.
pub fn rescale_point(c: &Q, a: &Q, b: &Q) -> Result<Q> {
    if a >= b {
        return domain("rescale_point needs a < b");
    }
    Ok(a + c * (b - a))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntervalScheme {
    /// Child intervals accumulating at `1/4`.
    Inner,
    /// Piece intervals of a composite, accumulating at `0`.
    Outer,
}

pub fn interval(scheme: IntervalScheme, n: u64) -> (Q, Q) {
    match scheme {
        IntervalScheme::Inner => inner_interval(n),
        IntervalScheme::Outer => outer_interval(n),
    }
}

/// `a_n = 1/4 + 4^-(n+2)`, `b_n = a_n + 4^-(2n+5)`.
pub fn inner_interval(n: u64) -> (Q, Q) {
    let a = q(1, 4) + pow4_inv(n + 2);
    let b = &a + pow4_inv(2 * n + 5);
    (a, b)
}

/// `a_s = 4^-(s+1)`, `b_s = a_s + 4^-(2s+3)`.
pub fn outer_interval(s: u64) -> (Q, Q) {
    let a = pow4_inv(s + 1);
    let b = &a + pow4_inv(2 * s + 3);
    (a, b)
}

/// The inner interval containing `t`, if any.
pub fn locate_inner(t: &Q) -> Option<u64> {
    let d = t - q(1, 4);
    if !d.is_positive() {
        return None;
    }
    let k = log4_ceil_inv(&d);
    if k < 2 {
        return None;
    }
    let n = k - 2;
    let (a, b) = inner_interval(n);
    (a <= *t && *t <= b).then_some(n)
}

/// The outer (composite) interval containing `x`, if any.
pub fn locate_outer(x: &Q) -> Option<u64> {
    if !x.is_positive() {
        return None;
    }
    let k = log4_ceil_inv(x);
    if k < 1 {
        return None;
    }
    let s = k - 1;
    let (a, b) = outer_interval(s);
    (a <= *x && *x <= b).then_some(s)
}

/// A function `f_T` of one tree, or the weighted composite
/// `sum_s f_{T(s)}[a_s, b_s] / (s + 1)`.
///
/// Composite pieces not listed explicitly use `tail`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FunctionHandle {
    Tree(Arc<TreeSchema>),
    Composite { pieces: Vec<(u64, Arc<TreeSchema>)>, tail: Arc<TreeSchema> },
}

impl fmt::Display for FunctionHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionHandle::Tree(t) => write!(f, "tree({t})"),
            FunctionHandle::Composite { pieces, tail } => {
                write!(f, "composite(")?;
                for (s, t) in pieces {
                    write!(f, "{s}: {t}; ")?;
                }
                write!(f, "tail: {tail})")
            }
        }
    }
}

impl FunctionHandle {
    pub fn tree(t: TreeSchema) -> Self {
        FunctionHandle::Tree(Arc::new(t))
    }

    pub fn composite(pieces: Vec<(u64, TreeSchema)>, tail: TreeSchema) -> Self {
        let mut pieces: Vec<(u64, Arc<TreeSchema>)> = pieces.into_iter().map(|(s, t)| (s, Arc::new(t))).collect();
        pieces.sort_by_key(|(s, _)| *s);
        pieces.dedup_by_key(|(s, _)| *s);
        FunctionHandle::Composite { pieces, tail: Arc::new(tail) }
    }

    /// Schema of composite piece `s`.
    pub fn piece(&self, s: u64) -> Option<Arc<TreeSchema>> {
        match self {
            FunctionHandle::Tree(_) => None,
            FunctionHandle::Composite { pieces, tail } => Some(
                pieces
                    .binary_search_by_key(&s, |(k, _)| *k)
                    .map(|i| pieces[i].1.clone())
                    .unwrap_or_else(|_| tail.clone()),
            ),
        }
    }

    /// Indices past which every piece equals the tail.
    pub fn explicit_pieces(&self) -> u64 {
        match self {
            FunctionHandle::Tree(_) => 0,
            FunctionHandle::Composite { pieces, .. } => pieces.last().map_or(0, |(s, _)| s + 1),
        }
    }

    /// True when infinitely many composite pieces are nonempty.
    pub fn accumulates_at_zero(&self) -> bool {
        matches!(self, FunctionHandle::Composite { tail, .. } if !tail.is_empty())
    }
}

/// Affine window onto one tree node: local `t` in `[0, 1]` sits at
/// `offset + width * t`, and the function there equals
/// `weight * width * f_schema(t)` plus contributions from outside the node.
#[derive(Clone, Debug)]
pub struct Frame {
    pub offset: Q,
    pub width: Q,
    pub weight: Q,
    pub address: Vec<u64>,
    pub schema: Arc<TreeSchema>,
}

impl Frame {
    pub fn to_global(&self, t: &Q) -> Q {
        &self.offset + &self.width * t
    }

    pub fn to_local(&self, x: &Q) -> Q {
        (x - &self.offset) / &self.width
    }

    pub fn end(&self) -> Q {
        &self.offset + &self.width
    }

    /// Frame of child `n`, or `None` when that child is empty.
    pub fn child(&self, n: u64) -> Result<Option<Frame>> {
        let c = self.schema.child_at(n)?;
        if c.is_empty() {
            return Ok(None);
        }
        let (a, b) = inner_interval(n);
        let mut address = self.address.clone();
        address.push(n);
        Ok(Some(Frame {
            offset: self.to_global(&a),
            width: &self.width * (b - a),
            weight: self.weight.clone(),
            address,
            schema: c,
        }))
    }

    /// Global anchor point: the image of local `1/4`.
    pub fn anchor(&self) -> Q {
        self.to_global(&q(1, 4))
    }
}

/// Root frame of a tree handle, or of composite piece `s`.
pub fn root_frame(f: &FunctionHandle, piece: Option<u64>) -> Result<Option<Frame>> {
    match (f, piece) {
        (FunctionHandle::Tree(t), None) => Ok((!t.is_empty()).then(|| Frame {
            offset: Q::zero(),
            width: Q::one(),
            weight: Q::one(),
            address: Vec::new(),
            schema: t.clone(),
        })),
        (FunctionHandle::Composite { .. }, Some(s)) => {
            let t = f.piece(s).expect("composite has pieces");
            if t.is_empty() {
                return Ok(None);
            }
            let (a, b) = outer_interval(s);
            Ok(Some(Frame {
                offset: a.clone(),
                width: b - a,
                weight: q(1, (s + 1) as i64),
                address: vec![s],
                schema: t,
            }))
        }
        _ => domain("piece index given for the wrong kind of handle"),
    }
}

/// Frame of the node at `addr`. For composites the first component picks
/// the piece.
pub fn frame_at(f: &FunctionHandle, addr: &[u64]) -> Result<Frame> {
    let (mut frame, rest) = match f {
        FunctionHandle::Tree(_) => (root_frame(f, None)?, addr),
        FunctionHandle::Composite { .. } => match addr.split_first() {
            Some((s, rest)) => (root_frame(f, Some(*s))?, rest),
            None => return domain("composite addresses start with a piece index"),
        },
    };
    for &n in rest {
        frame = match frame {
            Some(fr) => fr.child(n)?,
            None => None,
        };
    }
    frame.ok_or_else(|| crate::Error::Domain("address is not a node".into()))
}

/// Anchor point of the node at `addr`: the nested rescaling of `1/4`.
pub fn anchor_point(f: &FunctionHandle, addr: &[u64]) -> Result<Q> {
    Ok(frame_at(f, addr)?.anchor())
}

const MAX_DESCENT: usize = 100_000;

/// Evaluate `f(x)` to within `tol`; returns the value and an error bound.
///
/// The value is exact (error zero) whenever the descent terminates, which
/// it does for every dyadic rational.
pub fn eval(f: &FunctionHandle, x: &Q, tol: &Q) -> Result<(Q, Q)> {
    if x.is_negative() || *x > Q::one() {
        return domain(format!("x = {x} lies outside [0, 1]"));
    }
    match f {
        FunctionHandle::Tree(t) => descend(t.clone(), x.clone(), Q::one(), tol),
        FunctionHandle::Composite { .. } => {
            let Some(s) = locate_outer(x) else {
                return Ok((Q::zero(), Q::zero()));
            };
            let (a, b) = outer_interval(s);
            let w = &b - &a;
            let scale = q(1, (s + 1) as i64) * &w;
            let t = (x - a) / w;
            descend(f.piece(s).expect("composite"), t, scale, tol)
        }
    }
}

fn descend(mut schema: Arc<TreeSchema>, mut t: Q, mut scale: Q, tol: &Q) -> Result<(Q, Q)> {
    let half = q(1, 2);
    for _ in 0..MAX_DESCENT {
        if schema.is_empty() {
            return Ok((Q::zero(), Q::zero()));
        }
        if t >= half {
            return Ok((scale * &half * bump(&(int(2) * &t - int(1)))?, Q::zero()));
        }
        let Some(n) = locate_inner(&t) else {
            return Ok((Q::zero(), Q::zero()));
        };
        let child = schema.child_at(n)?;
        if child.is_empty() {
            return Ok((Q::zero(), Q::zero()));
        }
        let (a, b) = inner_interval(n);
        let w = &b - &a;
        scale *= &w;
        t = (t - a) / w;
        schema = child;
        let remaining = &scale * q(1, 4);
        if tol.is_positive() && remaining <= *tol {
            return descend_bounded(&schema, &t, &scale);
        }
    }
    domain("evaluation did not terminate; use a positive tolerance")
}

/// A few more exact levels once the tolerance is met, so that points which
/// terminate shortly after still evaluate exactly.
fn descend_bounded(schema: &Arc<TreeSchema>, t: &Q, scale: &Q) -> Result<(Q, Q)> {
    let (mut schema, mut t, mut scale) = (schema.clone(), t.clone(), scale.clone());
    let half = q(1, 2);
    for _ in 0..16 {
        if schema.is_empty() {
            return Ok((Q::zero(), Q::zero()));
        }
        if t >= half {
            return Ok((scale * &half * bump(&(int(2) * &t - int(1)))?, Q::zero()));
        }
        let Some(n) = locate_inner(&t) else {
            return Ok((Q::zero(), Q::zero()));
        };
        let child = schema.child_at(n)?;
        if child.is_empty() {
            return Ok((Q::zero(), Q::zero()));
        }
        let (a, b) = inner_interval(n);
        let w = &b - &a;
        scale *= &w;
        t = (t - a) / w;
        schema = child;
    }
    Ok((Q::zero(), scale * q(1, 4)))
}

/// Structural bound on `|f'|` over `[lo, hi]`: 2 per piece times its
/// weight, and zero when no piece meets the interval.
pub fn deriv_sup_bound(f: &FunctionHandle, lo: &Q, hi: &Q) -> Q {
    match f {
        FunctionHandle::Tree(t) => {
            if t.is_empty() || *hi <= q(1, 4) || *lo >= Q::one() {
                Q::zero()
            } else {
                int(2)
            }
        }
        FunctionHandle::Composite { .. } => match first_piece_meeting(f, lo, hi) {
            Some(s) => q(2, (s + 1) as i64),
            None => Q::zero(),
        },
    }
}

/// Smallest nonempty composite piece whose interval meets `[lo, hi]`.
pub fn first_piece_meeting(f: &FunctionHandle, lo: &Q, hi: &Q) -> Option<u64> {
    if !hi.is_positive() {
        return None;
    }
    let mut s = log4_ceil_inv(hi).saturating_sub(1);
    loop {
        let (a, b) = outer_interval(s);
        if b < *lo {
            return None;
        }
        if a <= *hi && !f.piece(s)?.is_empty() {
            return Some(s);
        }
        if s > f.explicit_pieces() && f.piece(s)?.is_empty() {
            return None;
        }
        s += 1;
    }
}

/// Interval enclosing `f'` over `[lo, hi]`.
pub fn deriv_enclosure(f: &FunctionHandle, lo: &Q, hi: &Q) -> Result<(Q, Q)> {
    let lo = max_q(lo, &Q::zero());
    let hi = min_q(hi, &Q::one());
    if lo > hi {
        return domain("empty interval");
    }
    match f {
        FunctionHandle::Tree(t) => Ok(tree_enclosure(t, &lo, &hi, 0)),
        FunctionHandle::Composite { .. } => {
            let mut acc = Hull::default();
            let same_piece = locate_outer(&lo).is_some() && locate_outer(&lo) == locate_outer(&hi);
            if !same_piece {
                acc.add(&Q::zero(), &Q::zero());
            }
            let Some(first) = first_piece_meeting(f, &lo, &hi) else {
                return Ok(acc.get());
            };
            if lo.is_zero() && f.accumulates_at_zero() {
                let b = q(2, (first + 1) as i64);
                acc.add(&-b.clone(), &b);
                return Ok(acc.get());
            }
            let mut s = first;
            loop {
                let (a, b) = outer_interval(s);
                if b < lo || (s >= f.explicit_pieces() && !f.accumulates_at_zero()) && s > first {
                    break;
                }
                let t = f.piece(s).expect("composite");
                if !t.is_empty() && a <= hi {
                    let w = &b - &a;
                    let l = max_q(&((&lo - &a) / &w), &Q::zero());
                    let h = min_q(&((&hi - &a) / &w), &Q::one());
                    let (el, eh) = tree_enclosure(&t, &l, &h, 0);
                    let weight = q(1, (s + 1) as i64);
                    acc.add(&(el * &weight), &(eh * &weight));
                }
                s += 1;
            }
            Ok(acc.get())
        }
    }
}

#[derive(Default)]
struct Hull(Option<(Q, Q)>);

impl Hull {
    fn add(&mut self, lo: &Q, hi: &Q) {
        self.0 = Some(match self.0.take() {
            None => (lo.clone(), hi.clone()),
            Some((a, b)) => (min_q(&a, lo), max_q(&b, hi)),
        });
    }

    fn get(self) -> (Q, Q) {
        self.0.unwrap_or((Q::zero(), Q::zero()))
    }
}

const MAX_ENCLOSURE_DEPTH: usize = 24;
const MAX_ENCLOSURE_CHILDREN: u64 = 64;

/// Enclosure of `f_T'` over local `[lo, hi]` within `[0, 1]`.
fn tree_enclosure(t: &TreeSchema, lo: &Q, hi: &Q, depth: usize) -> (Q, Q) {
    let full = bump_deriv_max();
    let fallback = (-full.clone(), full.clone());
    if t.is_empty() {
        return (Q::zero(), Q::zero());
    }
    if depth > MAX_ENCLOSURE_DEPTH {
        return fallback;
    }
    let quarter = q(1, 4);
    let half = q(1, 2);
    let mut acc = Hull::default();
    let inside_child = locate_inner(lo).is_some() && locate_inner(lo) == locate_inner(hi);
    let inside_bump = *lo >= half;
    if !inside_child && !inside_bump {
        acc.add(&Q::zero(), &Q::zero());
    }
    if *hi > half {
        let u0 = int(2) * max_q(lo, &half) - int(1);
        let u1 = int(2) * min_q(hi, &Q::one()) - int(1);
        let (a, b) = bump_deriv_range(&u0, &u1);
        acc.add(&a, &b);
    }
    if *hi > quarter && *lo < half {
        if *lo <= quarter && t.infinitely_branching() {
            return fallback;
        }
        let hi_c = min_q(hi, &half);
        let d = &hi_c - &quarter;
        let first = log4_ceil_inv(&d).saturating_sub(2);
        let mut n = first;
        loop {
            let (a, b) = inner_interval(n);
            if b < *lo || (*lo <= quarter && n >= t.finite_count()) {
                break;
            }
            if n - first > MAX_ENCLOSURE_CHILDREN {
                return fallback;
            }
            if a <= hi_c {
                let c = t.child_at(n).expect("nonempty node");
                if !c.is_empty() {
                    let w = &b - &a;
                    let l = max_q(&((lo - &a) / &w), &Q::zero());
                    let h = min_q(&((&hi_c - &a) / &w), &Q::one());
                    let (el, eh) = tree_enclosure(&c, &l, &h, depth + 1);
                    acc.add(&el, &eh);
                }
            }
            n += 1;
        }
    }
    acc.get()
}

/// Range of `p'` over `[u0, u1]` inside `[0, 1]`: the endpoint values plus
/// the extreme values when a critical point `(3 -+ sqrt 3) / 6` may lie inside.
fn bump_deriv_range(u0: &Q, u1: &Q) -> (Q, Q) {
    let p = |u: &Q| int(16) * u * (int(1) - u) * (int(1) - int(2) * u);
    let mut lo = min_q(&p(u0), &p(u1));
    let mut hi = max_q(&p(u0), &p(u1));
    let c1 = (q(211324865, 1_000_000_000), q(211324866, 1_000_000_000));
    let c2 = (q(788675134, 1_000_000_000), q(788675135, 1_000_000_000));
    if *u0 <= c1.1 && *u1 >= c1.0 {
        hi = bump_deriv_max();
    }
    if *u0 <= c2.1 && *u1 >= c2.0 {
        lo = -bump_deriv_max();
    }
    (lo, hi)
}

/// `sup |f|` bound used by the composite construction: `||f_T|| <= 1/4`.
pub fn sup_norm_bound() -> Q {
    q(1, 4)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::pow2_inv;

    fn leaf() -> FunctionHandle {
        FunctionHandle::tree(TreeSchema::leaf())
    }

    #[test]
    fn bump_values() {
        assert_eq!(bump(&q(1, 2)).unwrap(), q(1, 2));
        assert_eq!(bump(&q(1, 4)).unwrap(), q(9, 32));
        assert_eq!(bump_deriv(&q(1, 2)).unwrap(), Q::zero());
        assert_eq!(bump_deriv(&q(1, 4)).unwrap(), q(3, 2));
        assert!(bump_deriv(&q(211324865, 1_000_000_000)).unwrap() < bump_deriv_max());
        assert!(bump(&q(-1, 8)).is_err());
        assert!(bump_deriv(&q(9, 8)).is_err());
    }

    #[test]
    fn schemes_and_rescaling() {
        assert_eq!(interval(IntervalScheme::Inner, 0), (q(5, 16), q(5, 16) + pow4_inv(5)));
        assert_eq!(interval(IntervalScheme::Outer, 0), (q(1, 4), q(1, 4) + pow4_inv(3)));
        for n in 0..=50 {
            let (a, b) = interval(IntervalScheme::Inner, n);
            let d = &a - q(1, 4);
            assert!(&b - &a < &d * &d);
        }
        let (a, b) = inner_interval(0);
        assert_eq!(rescale_point(&q(3, 4), &a, &b).unwrap(), q(5, 16) + q(3, 4) * pow4_inv(5));
        assert_eq!(rescale_point(&q(1, 2), &Q::zero(), &Q::one()).unwrap(), q(1, 2));
        assert!(rescale_point(&Q::zero(), &b, &a).is_err());
    }

    #[test]
    fn leaf_function_is_the_half_bump() {
        let f = leaf();
        assert_eq!(eval(&f, &q(3, 4), &Q::zero()).unwrap(), (q(1, 4), Q::zero()));
        assert_eq!(eval(&f, &q(1, 3), &Q::zero()).unwrap().0, Q::zero());
        assert_eq!(eval(&f, &Q::one(), &Q::zero()).unwrap().0, Q::zero());
        assert!(eval(&f, &q(3, 2), &Q::zero()).is_err());
    }

    #[test]
    fn child_contribution_is_rescaled() {
        let f = FunctionHandle::tree("node{ node{} }".parse().unwrap());
        let (a, b) = inner_interval(0);
        let x = rescale_point(&q(3, 4), &a, &b).unwrap();
        let (v, e) = eval(&f, &x, &Q::zero()).unwrap();
        assert!(e.is_zero());
        assert_eq!(v, (b - a) * q(1, 4));
    }

    #[test]
    fn locating() {
        for n in 0..6 {
            let (a, b) = inner_interval(n);
            assert_eq!(locate_inner(&a), Some(n));
            assert_eq!(locate_inner(&b), Some(n));
            assert_eq!(locate_inner(&((&a + &b) / int(2))), Some(n));
            assert_eq!(locate_inner(&(&b + pow4_inv(40))), None);
            let (a, b) = outer_interval(n);
            assert_eq!(locate_outer(&a), Some(n));
            assert_eq!(locate_outer(&b), Some(n));
        }
        assert_eq!(locate_inner(&q(1, 4)), None);
        assert_eq!(locate_outer(&Q::zero()), None);
    }

    #[test]
    fn composite_piece_weight() {
        let f = FunctionHandle::composite(vec![(2, TreeSchema::leaf())], TreeSchema::Empty);
        let (a, b) = outer_interval(2);
        let x = rescale_point(&q(3, 4), &a, &b).unwrap();
        assert_eq!(eval(&f, &x, &Q::zero()).unwrap().0, q(1, 3) * (b - a) * q(1, 4));
        let (a, b) = outer_interval(3);
        assert_eq!(eval(&f, &rescale_point(&q(3, 4), &a, &b).unwrap(), &Q::zero()).unwrap().0, Q::zero());
    }

    #[test]
    fn anchors() {
        let f = FunctionHandle::tree("node{ node{} xW }".parse().unwrap());
        assert_eq!(anchor_point(&f, &[]).unwrap(), q(1, 4));
        let (a, b) = inner_interval(3);
        assert_eq!(anchor_point(&f, &[3]).unwrap(), rescale_point(&q(1, 4), &a, &b).unwrap());
        assert!(anchor_point(&f, &[3, 0]).is_err());
    }

    #[test]
    fn enclosure_of_leaf() {
        let f = leaf();
        let (lo, hi) = deriv_enclosure(&f, &Q::zero(), &Q::one()).unwrap();
        assert!(lo <= -bump_deriv_max() + q(1, 100) && hi >= q(3, 2));
        let (lo, hi) = deriv_enclosure(&f, &q(3, 4), &(q(3, 4) + pow2_inv(10))).unwrap();
        assert!(lo <= hi && hi - lo < q(1, 10));
        let (lo, hi) = deriv_enclosure(&f, &Q::zero(), &q(1, 4)).unwrap();
        assert_eq!((lo, hi), (Q::zero(), Q::zero()));
    }

    #[test]
    fn composite_bound_at_zero() {
        let f = FunctionHandle::composite(vec![], TreeSchema::leaf());
        let (_, b4) = outer_interval(4);
        assert_eq!(deriv_sup_bound(&f, &Q::zero(), &b4), q(2, 5));
        let (lo, hi) = deriv_enclosure(&f, &Q::zero(), &b4).unwrap();
        assert_eq!(hi - lo, q(4, 5));
    }
}
