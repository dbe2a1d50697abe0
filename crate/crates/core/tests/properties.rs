use std::sync::Arc;

use kwlab::ordinal::Ordinal;
use kwlab::rational::q;
use kwlab::realfunc::{eval, FunctionHandle};
use kwlab::treeschema::{rank_witness, ChildEntry, FamilyGen, TreeSchema};
use num_traits::Signed;
use proptest::prelude::*;

/// Ordinals below ω^ω^2 with small coefficients.
fn ordinal() -> impl Strategy<Value = Ordinal> {
    let exponent = (0u64..3, 0u64..3).prop_map(|(a, b)| {
        let mut e = Ordinal::nat(b);
        if a > 0 {
            e = Ordinal::omega_pow(Ordinal::one(), a).add(&e);
        }
        e
    });
    prop::collection::vec((exponent, 1u64..4), 0..4)
        .prop_map(|ts| ts.into_iter().fold(Ordinal::zero(), |acc, (e, c)| Ordinal::omega_pow(e, c).add(&acc)))
}

fn schema() -> impl Strategy<Value = TreeSchema> {
    let leaf = Just(TreeSchema::leaf());
    leaf.prop_recursive(3, 24, 3, |inner| {
        let entry = prop_oneof![
            (inner.clone(), 1u64..4).prop_map(|(s, c)| ChildEntry::Repeat(Arc::new(s), c)),
            inner.prop_map(|s| ChildEntry::RepeatOmega(Arc::new(s))),
            Just(ChildEntry::Repeat(Arc::new(TreeSchema::Empty), 1)),
            prop_oneof![Just("w"), Just("w^2"), Just("w*2")]
                .prop_map(|l| ChildEntry::Family(FamilyGen::WitnessFamily(l.parse().unwrap()))),
        ];
        prop::collection::vec(entry, 1..4).prop_map(TreeSchema::Node)
    })
}

proptest! {
    #[test]
    fn ordinal_text_round_trips(a in ordinal()) {
        prop_assert_eq!(a.to_string().parse::<Ordinal>().unwrap(), a);
    }

    #[test]
    fn addition_is_associative_and_monotone(a in ordinal(), b in ordinal(), c in ordinal()) {
        prop_assert_eq!(a.add(&b).add(&c), a.add(&b.add(&c)));
        prop_assert!(a.add(&b) >= a);
        if b < c {
            prop_assert!(a.add(&b) < a.add(&c));
        }
    }

    #[test]
    fn successor_and_predecessor(a in ordinal()) {
        let s = a.succ();
        prop_assert!(s.is_successor());
        prop_assert_eq!(s.pred().unwrap(), a.clone());
        prop_assert!(a < s);
    }

    #[test]
    fn fundamental_sequences_climb(b in ordinal(), k in 1u64..4, n in 0u64..5) {
        let a = b.add(&Ordinal::omega_pow(Ordinal::nat(k), 1));
        prop_assert!(a.is_limit());
        let x = a.fundamental(n).unwrap();
        let y = a.fundamental(n + 1).unwrap();
        prop_assert!(x < y && y < a);
    }

    #[test]
    fn witnesses_have_their_rank(a in ordinal()) {
        let s = a.succ();
        prop_assert_eq!(rank_witness(&s).unwrap().limsup_rank(), s);
    }

    #[test]
    fn schema_text_round_trips(t in schema()) {
        let back: TreeSchema = t.to_string().parse().unwrap();
        prop_assert_eq!(back.limsup_rank(), t.limsup_rank());
        prop_assert_eq!(back.canonical(), t.canonical());
    }

    #[test]
    fn canonical_keeps_rank(t in schema()) {
        prop_assert_eq!(t.canonical().limsup_rank(), t.limsup_rank());
        prop_assert!(t.limsup_rank().is_successor());
    }

    #[test]
    fn evaluation_respects_the_envelope(t in schema(), k in 0i64..=1000) {
        let x = q(k, 1000);
        let f = FunctionHandle::tree(t);
        let (v, e) = eval(&f, &x, &q(1, 1 << 30)).unwrap();
        let d = &x - q(1, 4);
        // |f_T(x)| stays below the bump's peak and the quadratic envelope near 1/4.
        prop_assert!(v.abs() <= q(1, 2) + &e);
        if x < q(1, 2) {
            prop_assert!(v.abs() <= &d * &d + &e);
        }
    }
}
