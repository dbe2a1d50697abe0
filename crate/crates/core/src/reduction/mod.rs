//! Reductions from stub oracles to trees and functions of prescribed rank.

mod builder;
mod oracle;
mod pairing;
mod theorems;

use serde::Serialize;

pub use builder::{build_reduction_tree, child_by_code, fold_reduction, input_shape, m_star, reduction_rank, Builder, Child, ReductionInput, Shape};
pub use oracle::{check_contract, g0_from_pi2, g0_of_status, FactId, FactStatus, OracleStub, WitnessOracle};
pub use pairing::{pair, tuple_decode, tuple_encode, unpair};
pub use theorems::{thm41_function, thm41_pieces, thm43_schema};

use crate::error::Result;
use crate::ordinal::Ordinal;

/// What the reduction lemma promises about the rank of its tree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum RankPrediction {
    Exact(#[serde(serialize_with = "ser_ord")] Ordinal),
    AtMost(#[serde(serialize_with = "ser_ord")] Ordinal),
}

fn ser_ord<S: serde::Serializer>(o: &Ordinal, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&o.to_string())
}

impl RankPrediction {
    pub fn admits(&self, rank: &Ordinal) -> bool {
        match self {
            RankPrediction::Exact(r) => rank == r,
            RankPrediction::AtMost(r) => rank <= r,
        }
    }
}

/// `truth[i]` answers `x_i ∈ ∅_(2α_i)`; `limit_detail[i]` gives, for a
/// limit `α_i` that is in, the least `z` whose split fact is in.
pub fn predicted_rank(inp: &ReductionInput, truth: &[bool], limit_detail: &[Option<u64>]) -> Result<RankPrediction> {
    if truth.len() != inp.pairs.len() {
        return crate::error::domain("one truth value per input pair");
    }
    let mut bound: Option<Ordinal> = None;
    for (i, ((a, _), t)) in inp.pairs.iter().zip(truth).enumerate() {
        if !t {
            continue;
        }
        let b = match (a.is_limit(), limit_detail.get(i).copied().flatten()) {
            (true, Some(z)) => a.fundamental(z)?.succ(),
            _ => a.clone(),
        };
        bound = Some(match bound {
            Some(c) if c <= b => c,
            _ => b,
        });
    }
    Ok(match bound {
        Some(b) => RankPrediction::AtMost(b),
        None => RankPrediction::Exact(inp.pairs.iter().map(|(a, _)| a.clone()).max().expect("nonempty").succ()),
    })
}

/// Truth values and limit details read off an oracle.
pub fn oracle_truth(inp: &ReductionInput, oracle: &dyn WitnessOracle) -> Result<(Vec<bool>, Vec<Option<u64>>)> {
    let mut truth = Vec::new();
    let mut detail = Vec::new();
    for (a, x) in &inp.pairs {
        let s = oracle.status(&FactId::Base(*x), a)?;
        truth.push(s.is_in());
        detail.push(if a.is_limit() { s.cutoff() } else { None });
    }
    Ok((truth, detail))
}
