use std::sync::Arc;

use super::builder::{fold_reduction, ReductionInput};
use super::oracle::WitnessOracle;
use super::pairing::tuple_encode;
use crate::error::{domain, Result};
use crate::ordinal::Ordinal;
use crate::realfunc::FunctionHandle;
use crate::treeschema::TreeSchema;

/// Piece schemas of the composite: the folded tree on input
/// `(α, g(x, s))` with `g(x, s) = ⟨x, s⟩`. Pieces whose index lies past the
/// oracle's support all equal the returned tail.
pub fn thm41_pieces(alpha: &Ordinal, x: u64, oracle: Arc<dyn WitnessOracle>, budget: u64) -> Result<(Vec<(u64, TreeSchema)>, TreeSchema)> {
    if alpha.is_zero() {
        return domain("the level must be at least 1");
    }
    let bound = oracle.support_bound();
    let mut pieces = Vec::new();
    let mut s = 0;
    loop {
        let g = tuple_encode(&[x, s])?;
        let inp = ReductionInput::new(vec![(alpha.clone(), g)])?;
        let schema = fold_reduction(&inp, oracle.clone(), budget)?;
        if g > bound {
            return Ok((pieces, (*schema).clone()));
        }
        pieces.push((s, (*schema).clone()));
        s += 1;
    }
}

/// `f = Σ_s f_{T(s)}[a_s, b_s] / (s + 1)`.
pub fn thm41_function(alpha: &Ordinal, x: u64, oracle: Arc<dyn WitnessOracle>, budget: u64) -> Result<FunctionHandle> {
    let (pieces, tail) = thm41_pieces(alpha, x, oracle, budget)?;
    Ok(FunctionHandle::composite(pieces, tail))
}

/// The folded tree on input `(λ, x)`.
pub fn thm43_schema(lambda: &Ordinal, x: u64, oracle: Arc<dyn WitnessOracle>, budget: u64) -> Result<Arc<TreeSchema>> {
    if !lambda.is_limit() {
        return domain(format!("{lambda} is not a limit ordinal"));
    }
    fold_reduction(&ReductionInput::new(vec![(lambda.clone(), x)])?, oracle, budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduction::{FactStatus, OracleStub};

    fn o(s: &str) -> Ordinal {
        s.parse().unwrap()
    }

    #[test]
    fn pieces_follow_the_oracle() {
        let special = tuple_encode(&[0, 1]).unwrap();
        let stub = OracleStub::new(special, FactStatus::In(0)).with(o("2"), special, FactStatus::NotIn);
        let (pieces, tail) = thm41_pieces(&o("2"), 0, Arc::new(stub), 3).unwrap();
        let ranks: Vec<Ordinal> = pieces.iter().map(|(_, t)| t.limsup_rank()).collect();
        assert_eq!(ranks.len() as u64, (0..).take_while(|s| tuple_encode(&[0, *s]).unwrap() <= special).count() as u64);
        assert_eq!(ranks[1], o("3"));
        assert!(ranks.iter().enumerate().all(|(s, r)| s == 1 || *r <= o("2")));
        assert!(tail.limsup_rank() <= o("2"));
    }

    #[test]
    fn limit_schema() {
        let out = OracleStub::new(4, FactStatus::NotIn);
        assert_eq!(thm43_schema(&o("w"), 0, Arc::new(out), 3).unwrap().limsup_rank(), o("w+1"));
        let inn = OracleStub::new(4, FactStatus::NotIn).with(o("w"), 0, FactStatus::In(2));
        assert!(thm43_schema(&o("w"), 0, Arc::new(inn), 3).unwrap().limsup_rank() < o("w"));
        assert!(thm43_schema(&o("3"), 0, Arc::new(OracleStub::new(4, FactStatus::NotIn)), 3).is_err());
        assert!(thm41_function(&Ordinal::zero(), 0, Arc::new(OracleStub::new(4, FactStatus::NotIn)), 3).is_err());
    }
}
