use std::sync::Arc;

use kwlab::ordinal::Ordinal;
use kwlab::reduction::*;

fn o(s: &str) -> Ordinal {
    s.parse().unwrap()
}

fn levels() -> Vec<Ordinal> {
    vec![o("1"), o("2"), o("3"), o("w+1")]
}

/// Bit `i` of `mask` puts fact `i` in, with cutoff `i + 1`.
fn stub(mask: u32) -> OracleStub {
    let mut s = OracleStub::new(8, FactStatus::NotIn);
    for (i, a) in levels().into_iter().enumerate() {
        if mask >> i & 1 == 1 {
            s = s.with(a, i as u64, FactStatus::In(i as u64 + 1));
        }
    }
    s
}

#[test]
fn dichotomy_over_all_configurations() {
    let inp = ReductionInput::new(levels().into_iter().enumerate().map(|(i, a)| (a, i as u64)).collect()).unwrap();
    for mask in 0..16 {
        let oracle: Arc<dyn WitnessOracle> = Arc::new(stub(mask));
        let (truth, detail) = oracle_truth(&inp, oracle.as_ref()).unwrap();
        let pred = predicted_rank(&inp, &truth, &detail).unwrap();
        let rank = reduction_rank(&inp, oracle, 3).unwrap();
        assert!(pred.admits(&rank), "mask {mask}: rank {rank}, predicted {pred:?}");
    }
}

#[test]
fn single_inputs() {
    for (i, a) in levels().into_iter().enumerate() {
        let inp = ReductionInput::new(vec![(a.clone(), i as u64)]).unwrap();
        for mask in [0, 1 << i] {
            let oracle: Arc<dyn WitnessOracle> = Arc::new(stub(mask));
            let (truth, detail) = oracle_truth(&inp, oracle.as_ref()).unwrap();
            let pred = predicted_rank(&inp, &truth, &detail).unwrap();
            let rank = reduction_rank(&inp, oracle, 3).unwrap();
            assert!(pred.admits(&rank), "{a} mask {mask}: rank {rank}, predicted {pred:?}");
        }
    }
}

/// Every derived witness fact answers "not in", whatever the tuple.
struct WitnessesOut;

impl WitnessOracle for WitnessesOut {
    fn base_status(&self, _x: u64, _alpha: &Ordinal) -> FactStatus {
        FactStatus::NotIn
    }
    fn support_bound(&self) -> u64 {
        0
    }
    fn witness_status(&self, _parent: FactStatus, _z: u64, _y: u64) -> FactStatus {
        FactStatus::NotIn
    }
}

#[test]
fn witnesses_always_out() {
    let inp = ReductionInput::new(vec![(o("2"), 0)]).unwrap();
    let r = fold_reduction(&inp, Arc::new(WitnessesOut), 3).unwrap().limsup_rank();
    assert_eq!(r, o("3"));
}

#[test]
fn limit_inputs() {
    let inp = ReductionInput::new(vec![(o("w"), 0)]).unwrap();
    let out = reduction_rank(&inp, Arc::new(OracleStub::new(8, FactStatus::NotIn)), 3).unwrap();
    assert_eq!(out, o("w+1"));
    for z in 0..4 {
        let s = OracleStub::new(8, FactStatus::NotIn).with(o("w"), 0, FactStatus::In(z));
        let r = reduction_rank(&inp, Arc::new(s), 3).unwrap();
        assert!(r <= o("w").fundamental(z).unwrap().succ(), "z = {z}: {r}");
        assert!(r.is_successor());
    }
}
