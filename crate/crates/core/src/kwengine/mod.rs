//! Certificates for and against membership in the derivative process.
//!
//! A point survives one stage at sensitivity `ε` when arbitrarily close to
//! it there are two overlapping secants whose slopes differ by more than
//! `ε` and whose overlap meets the previous stage. Survival is certified by
//! exhibiting such secants; removal is certified by bounding every slope
//! gap in a ball around the point.

mod certify;
mod interleave;
mod removal;
mod stilde;

use std::collections::VecDeque;

use num_traits::Signed;
use serde::Serialize;

pub use certify::{find_certificate, find_certificate_with, Certificate};
pub use interleave::{interleaving_report, InterleavingReport, PointReport, SensitivityReport, Verdict};
pub use removal::{emptiness_by_cover, prove_removed, removal_at, RemovalProof, Route};
pub use stilde::{stilde_accepts, stilde_enumerate, stilde_enumerate_in, StildeNode, StildeResult};

use crate::error::{domain, Result};
use crate::ordinal::Ordinal;
use crate::rational::{log4_ceil_inv, q, Q};
use crate::realfunc::{eval, first_piece_meeting, inner_interval, outer_interval, root_frame, FunctionHandle, Frame};
use crate::treeschema::TreeSchema;

/// How a slope gap is compared with the sensitivity: `>` for the strict
/// process, `>=` for the original one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Comparison {
    Strict,
    NonStrict,
}

impl Comparison {
    pub fn passes(self, gap: &Q, eps: &Q) -> bool {
        match self {
            Comparison::Strict => gap > eps,
            Comparison::NonStrict => gap >= eps,
        }
    }
}

/// Secant slope `(f(p) - f(q)) / (p - q)` with an error bound.
///
/// The tolerance is split between the two evaluations in proportion to
/// `|p - q|` so the returned bound is at most `tolerance`.
pub fn secant(f: &FunctionHandle, p: &Q, qq: &Q, tolerance: &Q) -> Result<(Q, Q)> {
    if p == qq {
        return domain("secant needs two distinct points");
    }
    let width = (p - qq).abs();
    let tol = tolerance * &width / Q::from_integer(2.into());
    let (fp, ep) = eval(f, p, &tol)?;
    let (fq, eq) = eval(f, qq, &tol)?;
    Ok(((fp - fq) / (p - qq), (ep + eq) / width))
}

/// True iff `β = 0` or `β <= limsup_n |T_{addr n}|`.
pub fn symbolic_membership(schema: &TreeSchema, addr: &[u64], beta: &Ordinal) -> Result<bool> {
    let sub = schema.subtree(addr)?;
    if beta.is_zero() {
        return Ok(true);
    }
    Ok(sub.children_limsup() >= *beta)
}

/// Least stage at which the process empties: the limsup rank.
pub fn symbolic_empty_stage(schema: &TreeSchema) -> Ordinal {
    schema.limsup_rank()
}

/// Symbolic empty stage of a handle. A composite's stage is the largest
/// stage among its pieces, since the accumulation point `0` is removed at
/// the first stage.
pub fn handle_empty_stage(f: &FunctionHandle) -> Ordinal {
    match f {
        FunctionHandle::Tree(t) => t.limsup_rank(),
        FunctionHandle::Composite { pieces, tail } => {
            pieces.iter().map(|(_, t)| t.limsup_rank()).chain(std::iter::once(tail.limsup_rank())).max().unwrap_or_default()
        }
    }
}

/// Symbolic membership on a handle; composite addresses start with the
/// piece index.
pub fn handle_membership(f: &FunctionHandle, addr: &[u64], beta: &Ordinal) -> Result<bool> {
    match f {
        FunctionHandle::Tree(t) => symbolic_membership(t, addr, beta),
        FunctionHandle::Composite { .. } => match addr.split_first() {
            Some((s, rest)) => symbolic_membership(&f.piece(*s).expect("composite"), rest, beta),
            None => domain("composite addresses start with a piece index"),
        },
    }
}

/// The membership predicate for stage `stage - 1` derived symbolically.
pub fn symbolic_predicate(f: &FunctionHandle, stage: u64) -> impl Fn(&[u64]) -> bool + Sync + '_ {
    let beta = Ordinal::nat(stage.saturating_sub(1));
    move |addr: &[u64]| handle_membership(f, addr, &beta).unwrap_or(false)
}

/// Frames of nonempty nodes whose interval meets `[lo, hi]`, in
/// breadth-first order, at most `limit` of them.
pub(crate) fn frames_meeting(f: &FunctionHandle, lo: &Q, hi: &Q, limit: usize) -> Result<Vec<Frame>> {
    let mut out = Vec::new();
    let mut queue: VecDeque<Frame> = VecDeque::new();
    match f {
        FunctionHandle::Tree(_) => {
            if let Some(fr) = root_frame(f, None)? {
                queue.push_back(fr);
            }
        }
        FunctionHandle::Composite { .. } => {
            if let Some(mut s) = first_piece_meeting(f, lo, hi) {
                while queue.len() < limit {
                    let (a, b) = outer_interval(s);
                    if b < *lo || (s >= f.explicit_pieces() && !f.accumulates_at_zero()) || a > *hi {
                        break;
                    }
                    if let Some(fr) = root_frame(f, Some(s))? {
                        queue.push_back(fr);
                    }
                    s += 1;
                }
            }
        }
    }
    while let Some(fr) = queue.pop_front() {
        if out.len() >= limit {
            break;
        }
        let room = limit.saturating_sub(out.len() + queue.len() + 1);
        for child in children_meeting(&fr, lo, hi, room)? {
            queue.push_back(child);
        }
        out.push(fr);
    }
    Ok(out)
}

/// Nonempty child frames of `fr` meeting `[lo, hi]`, at most `limit`.
pub(crate) fn children_meeting(fr: &Frame, lo: &Q, hi: &Q, limit: usize) -> Result<Vec<Frame>> {
    let mut out = Vec::new();
    let quarter = q(1, 4);
    let lo_l = fr.to_local(lo);
    let hi_l = fr.to_local(hi);
    if hi_l <= quarter || lo_l >= q(1, 2) {
        return Ok(out);
    }
    let d = Q::min(hi_l.clone(), q(1, 2)) - &quarter;
    let mut n = log4_ceil_inv(&d).saturating_sub(2);
    let unbounded = lo_l <= quarter;
    let finite = fr.schema.finite_count();
    let infinite = fr.schema.infinitely_branching();
    let mut scanned = 0usize;
    while out.len() < limit {
        let (a, b) = inner_interval(n);
        if b < lo_l || (unbounded && !infinite && n >= finite) {
            break;
        }
        scanned += 1;
        if scanned > 64 * limit.max(1) {
            break;
        }
        if a <= hi_l {
            if let Some(c) = fr.child(n)? {
                out.push(c);
            }
        }
        n += 1;
    }
    Ok(out)
}

pub(crate) fn positive(x: &Q, what: &str) -> Result<()> {
    if x.is_positive() {
        Ok(())
    } else {
        domain(format!("{what} must be positive"))
    }
}
