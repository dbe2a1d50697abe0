use rayon::prelude::*;
use serde::Serialize;

use super::{find_certificate_with, positive, prove_removed, symbolic_predicate, Comparison};
use crate::error::Result;
use crate::rational::{int, pow2_inv, Q};
use crate::realfunc::FunctionHandle;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    In,
    Out,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct SensitivityReport {
    #[serde(serialize_with = "crate::rational::ser_q")]
    pub epsilon: Q,
    pub comparison: Comparison,
    pub verdict: Verdict,
    /// Smallest ladder radius at which a certificate was found.
    #[serde(serialize_with = "ser_opt_q")]
    pub certificate_delta: Option<Q>,
    #[serde(serialize_with = "ser_opt_q")]
    pub removal_delta: Option<Q>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PointReport {
    #[serde(serialize_with = "crate::rational::ser_q")]
    pub x: Q,
    pub sensitivities: Vec<SensitivityReport>,
    pub flagged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct InterleavingReport {
    pub stage: u64,
    #[serde(serialize_with = "crate::rational::ser_q")]
    pub epsilon: Q,
    pub points: Vec<PointReport>,
    pub contradictions: usize,
}

fn ser_opt_q<S: serde::Serializer>(x: &Option<Q>, ser: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => crate::rational::ser_q(v, ser),
        None => ser.serialize_none(),
    }
}

const LADDER: [u64; 5] = [3, 5, 7, 9, 11];
const BUDGET: usize = 48;

/// Verdicts at `ε` (strict), `ε/2` (non-strict) and `ε/4` (strict) for each
/// point, flagging patterns that contradict the inclusions
/// `P̃_ε ⊆ P_{ε/2} ⊆ P̃_{ε/4}`.
///
/// A pattern is contradictory when a certificate at one sensitivity lives
/// inside the removal ball of an equal or finer sensitivity.
pub fn interleaving_report(f: &FunctionHandle, points: &[Q], stage: u64, eps: &Q) -> Result<InterleavingReport> {
    positive(eps, "epsilon")?;
    let sens = [
        (eps.clone(), Comparison::Strict),
        (eps / int(2), Comparison::NonStrict),
        (eps / int(4), Comparison::Strict),
    ];
    let membership = symbolic_predicate(f, stage);
    let reports: Vec<PointReport> = points
        .par_iter()
        .map(|x| {
            let mut out = Vec::new();
            for (e, cmp) in &sens {
                let mut certificate_delta = None;
                let mut all = true;
                for k in LADDER {
                    let d = pow2_inv(k);
                    if find_certificate_with(f, x, &d, e, stage, &membership, BUDGET, *cmp)?.is_some() {
                        certificate_delta = Some(d);
                    } else {
                        all = false;
                    }
                }
                let removal_delta = prove_removed(f, x, e, stage, &membership)?.map(|p| p.delta);
                let verdict = if all {
                    Verdict::In
                } else if removal_delta.is_some() {
                    Verdict::Out
                } else {
                    Verdict::Inconclusive
                };
                out.push(SensitivityReport { epsilon: e.clone(), comparison: *cmp, verdict, certificate_delta, removal_delta });
            }
            let flagged = (0..out.len()).any(|i| {
                (i..out.len()).any(|j| match (&out[i].certificate_delta, &out[j].removal_delta) {
                    (Some(c), Some(r)) => r >= c,
                    _ => false,
                })
            });
            Ok(PointReport { x: x.clone(), sensitivities: out, flagged })
        })
        .collect::<Result<_>>()?;
    let contradictions = reports.iter().filter(|r| r.flagged).count();
    Ok(InterleavingReport { stage, epsilon: eps.clone(), points: reports, contradictions })
}
