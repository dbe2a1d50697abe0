//! The acceptance suite, shared by `kwlab selftest` and the test harness.

use std::collections::HashSet;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kwengine::{
    emptiness_by_cover, find_certificate, handle_empty_stage, interleaving_report, prove_removed, removal_at, secant,
    stilde_enumerate, stilde_enumerate_in, symbolic_predicate,
};
use crate::ordinal::Ordinal;
use crate::rational::{fmt_q, int, parse_q, pow2_inv, q, Q};
use crate::realfunc::{eval, inner_interval, outer_interval, rescale_point, root_frame, Frame, FunctionHandle};
use crate::reduction::{
    oracle_truth, predicted_rank, reduction_rank, thm41_function, tuple_encode, FactStatus, OracleStub, ReductionInput,
    WitnessOracle,
};
use crate::simpson::{check_closure, covers_at_precision, export_simpson_code};
use crate::treeschema::{rank_witness, ChildEntry, FamilyGen, TreeSchema};

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub millis: u128,
}

type Check = fn() -> Result<(bool, String)>;

pub const CHECKS: [(u32, &str, Check); 11] = [
    (1, "Def 3.6 rank correspondence", rank_correspondence),
    (2, "Prop 3.8(1) successor ranks", successor_ranks),
    (3, "CNF ordinal arithmetic", ordinal_oracle),
    (4, "Prop 3.2 evaluation rigor", evaluation_rigor),
    (5, "Prop 3.8(3) stages 1 and 2", stage_agreement),
    (6, "Lemma interleaving", interleaving),
    (7, "Lemmas A and B", scaling_and_locality),
    (8, "Section 2.6 approximation trees", stilde_behavior),
    (9, "Lemma technical dichotomy", reduction_dichotomy),
    (10, "Theorem 4.1 mechanics", theorem41),
    (11, "Def 2.1 Simpson codes", simpson_conformance),
];

pub fn run_check(id: u32) -> Option<CheckOutcome> {
    let (id, name, check) = CHECKS.iter().find(|c| c.0 == id).copied()?;
    let start = Instant::now();
    let (passed, detail) = match check() {
        Ok(r) => r,
        Err(e) => (false, e.to_string()),
    };
    Some(CheckOutcome { id, name, passed, detail, millis: start.elapsed().as_millis() })
}

pub fn run_all() -> Vec<CheckOutcome> {
    CHECKS.iter().filter_map(|c| run_check(c.0)).collect()
}

fn o(s: &str) -> Ordinal {
    s.parse().expect("ordinal literal")
}

fn witness(n: &str) -> FunctionHandle {
    FunctionHandle::tree(rank_witness(&o(n)).expect("successor"))
}

fn within(start: Instant, limit: Duration, what: &str) -> (bool, String) {
    let t = start.elapsed();
    (t < limit, format!("{what} in {:.3}s (limit {}s)", t.as_secs_f64(), limit.as_secs()))
}

fn rank_correspondence() -> Result<(bool, String)> {
    let start = Instant::now();
    let cases = ["1", "2", "3", "5", "w+1", "w+2", "w*2+1", "w^2+1", "w^3+1"];
    let mut bad = Vec::new();
    for c in cases {
        let a = o(c);
        let r = rank_witness(&a)?.limsup_rank();
        if r != a {
            bad.push(format!("{a} -> {r}"));
        }
    }
    let (fast, timing) = within(start, Duration::from_secs(1), "9 witnesses");
    Ok((bad.is_empty() && fast, if bad.is_empty() { timing } else { format!("mismatches: {}", bad.join("; ")) }))
}

fn limits() -> Vec<Ordinal> {
    vec![
        Ordinal::omega(),
        Ordinal::omega_pow(Ordinal::one(), 2),
        Ordinal::omega_pow(Ordinal::nat(2), 1),
        Ordinal::omega_pow(Ordinal::omega(), 1),
    ]
}

/// A random nonempty schema of bounded depth.
pub fn random_schema(rng: &mut ChaCha8Rng, depth: u32) -> TreeSchema {
    if depth == 0 || rng.gen_bool(0.25) {
        return TreeSchema::leaf();
    }
    let n = rng.gen_range(1..=3);
    let entries = (0..n)
        .map(|_| {
            let child = |rng: &mut ChaCha8Rng| {
                if rng.gen_bool(0.1) {
                    Arc::new(TreeSchema::Empty)
                } else {
                    Arc::new(random_schema(rng, depth - 1))
                }
            };
            match rng.gen_range(0..4) {
                0 | 1 => ChildEntry::Repeat(child(rng), rng.gen_range(1..=3)),
                2 => ChildEntry::RepeatOmega(child(rng)),
                _ => ChildEntry::Family(FamilyGen::WitnessFamily(limits()[rng.gen_range(0..4)].clone())),
            }
        })
        .collect();
    TreeSchema::Node(entries)
}

fn successor_ranks() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut bad = Vec::new();
    for _ in 0..200 {
        let s = random_schema(&mut rng, 4);
        let r = s.limsup_rank();
        if !r.is_successor() {
            bad.push(format!("{s} has rank {r}"));
        }
    }
    Ok((bad.is_empty(), if bad.is_empty() { "200 schemas, all successor ranks".into() } else { bad.join("; ") }))
}

/// `ω^2 a + ω b + c`.
fn triple(a: u64, b: u64, c: u64) -> Ordinal {
    let mut r = Ordinal::zero();
    if a > 0 {
        r = r.add(&Ordinal::omega_pow(Ordinal::nat(2), a));
    }
    if b > 0 {
        r = r.add(&Ordinal::omega_pow(Ordinal::one(), b));
    }
    r.add(&Ordinal::nat(c))
}

fn triple_add(x: (u64, u64, u64), y: (u64, u64, u64)) -> (u64, u64, u64) {
    if y.0 > 0 {
        (x.0 + y.0, y.1, y.2)
    } else if y.1 > 0 {
        (x.0, x.1 + y.1, y.2)
    } else {
        (x.0, x.1, x.2 + y.2)
    }
}

fn ordinal_oracle() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut bad = 0;
    let coef = |rng: &mut ChaCha8Rng| if rng.gen_bool(0.3) { 0 } else { rng.gen_range(1..6) };
    for _ in 0..10_000 {
        let x = (coef(&mut rng), coef(&mut rng), coef(&mut rng));
        let y = (coef(&mut rng), coef(&mut rng), coef(&mut rng));
        let (ox, oy) = (triple(x.0, x.1, x.2), triple(y.0, y.1, y.2));
        if ox.cmp(&oy) != x.cmp(&y) {
            bad += 1;
        }
        let s = triple_add(x, y);
        if ox.add(&oy) != triple(s.0, s.1, s.2) {
            bad += 1;
        }
    }
    Ok((bad == 0, format!("10000 pairs below w^3, {bad} discrepancies")))
}

fn evaluation_rigor() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let tol = pow2_inv(40);
    let mut envelope_fail = 0;
    let mut monotone_fail = 0;
    let quarter = q(1, 4);
    for w in ["1", "2", "3"] {
        let f = witness(w);
        for k in 0..1000u64 {
            // Half the points sit inside the first few child intervals.
            let x = if k % 2 == 0 {
                let (a, b) = inner_interval(rng.gen_range(0..6));
                &a + (&b - &a) * q(rng.gen_range(0..=1000), 1000)
            } else {
                &quarter + q(rng.gen_range(1..1_000_000), 4_000_000)
            };
            let (v, e) = eval(&f, &x, &tol)?;
            let d = &x - &quarter;
            if v.abs() > &d * &d + &e {
                envelope_fail += 1;
            }
            let (_, e2) = eval(&f, &x, &(&tol / int(2)))?;
            if e2 > e {
                monotone_fail += 1;
            }
        }
    }
    let f = witness("2");
    let s1 = secant(&f, &Q::zero(), &q(3, 4), &tol)?;
    let s2 = secant(&f, &Q::zero(), &q(1, 2), &tol)?;
    let anchors = s1 == (q(1, 3), Q::zero()) && s2 == (Q::zero(), Q::zero());
    Ok((
        envelope_fail == 0 && monotone_fail == 0 && anchors,
        format!(
            "3000 points: {envelope_fail} envelope failures, {monotone_fail} tolerance regressions; secants {} and {}",
            fmt_q(&s1.0),
            fmt_q(&s2.0)
        ),
    ))
}

fn stage_agreement() -> Result<(bool, String)> {
    let limit = Duration::from_secs(10);
    let eps = q(1, 4);
    let f2 = witness("2");

    let t = Instant::now();
    let m1 = symbolic_predicate(&f2, 1);
    let cert = find_certificate(&f2, &quarter(), &q(1, 64), &eps, 1, &m1, 48)?;
    let gap_ok = cert.as_ref().is_some_and(|c| c.slope_gap_lower_bound >= q(1, 3) - pow2_inv(20));
    let (t1, d1) = within(t, limit, "certificate");

    let t = Instant::now();
    let m2 = symbolic_predicate(&f2, 2);
    let removed = prove_removed(&f2, &quarter(), &eps, 2, &m2)?;
    let (t2, d2) = within(t, limit, "removal");

    let t = Instant::now();
    let cover = emptiness_by_cover(&witness("1"), 1, &eps, &Q::zero(), &Q::one())?;
    let (t3, d3) = within(t, limit, "cover");

    let gap = cert.as_ref().map_or("none".into(), |c| fmt_q(&c.slope_gap_lower_bound));
    let delta = removed.as_ref().map_or("none".into(), |p| fmt_q(&p.delta));
    let cover_delta = cover.as_ref().map_or("none".into(), fmt_q);
    Ok((
        gap_ok && removed.is_some() && cover.is_some() && t1 && t2 && t3,
        format!("gap {gap} ({d1}); removal delta {delta} ({d2}); cover delta {cover_delta} ({d3})"),
    ))
}

fn quarter() -> Q {
    q(1, 4)
}

/// Frames of a tree handle in breadth-first order, up to `limit`.
fn frames(f: &FunctionHandle, limit: usize) -> Result<Vec<Frame>> {
    let mut out: Vec<Frame> = root_frame(f, None)?.into_iter().collect();
    let mut i = 0;
    while i < out.len() && out.len() < limit {
        let fr = out[i].clone();
        for n in 0..4 {
            if let Some(c) = fr.child(n)? {
                out.push(c);
            }
        }
        i += 1;
    }
    out.truncate(limit);
    Ok(out)
}

fn interleaving() -> Result<(bool, String)> {
    let schemas = ["1", "2", "3", "w+1"]
        .iter()
        .map(|w| rank_witness(&o(w)))
        .chain(std::iter::once("node{ node{} x2, node{ node{} xW } }".parse::<TreeSchema>()))
        .collect::<Result<Vec<_>>>()?;
    let mut contradictions = 0;
    let mut reports = 0;
    for s in schemas {
        let f = FunctionHandle::tree(s);
        let mut points: Vec<Q> = frames(&f, 10)?.iter().map(Frame::anchor).collect();
        let mut k = 0;
        while points.len() < 50 {
            let x = q(k, 63);
            if !points.contains(&x) {
                points.push(x);
            }
            k += 1;
        }
        for eps in [q(1, 4), q(1, 8)] {
            for stage in [1, 2] {
                let r = interleaving_report(&f, &points, stage, &eps)?;
                contradictions += r.contradictions;
                reports += r.points.len();
            }
        }
    }
    Ok((contradictions == 0, format!("{reports} point reports at stages 1 and 2, {contradictions} contradictions")))
}

fn scaling_and_locality() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let eps = q(1, 4);
    let tol = pow2_inv(40);
    let mut valid = 0;
    let mut transports = 0;
    let mut attempts = 0;
    while transports < 100 && attempts < 10_000 {
        attempts += 1;
        let s = random_schema(&mut rng, 3);
        let inner = FunctionHandle::tree(s.clone());
        let fs = frames(&inner, 12)?;
        let fr = &fs[rng.gen_range(0..fs.len())];
        let x = fr.anchor();
        let m = symbolic_predicate(&inner, 1);
        let Some(c) = find_certificate(&inner, &x, &fr.width, &eps, 1, &m, 64)? else { continue };
        // Into a child slot of a tree, or into a weighted composite piece.
        let (outer, a, b, weight) = if transports % 2 == 0 {
            let n = rng.gen_range(0..3u64);
            let mut entries: Vec<ChildEntry> = (0..n).map(|_| ChildEntry::Repeat(Arc::new(TreeSchema::leaf()), 1)).collect();
            entries.push(ChildEntry::Repeat(Arc::new(s.clone()), 1));
            let (a, b) = inner_interval(n);
            (FunctionHandle::tree(TreeSchema::Node(entries)), a, b, Q::one())
        } else {
            let k = rng.gen_range(0..4u64);
            let (a, b) = outer_interval(k);
            (FunctionHandle::composite(vec![(k, s.clone())], TreeSchema::Empty), a, b, q(1, k as i64 + 1))
        };
        transports += 1;
        let map = |t: &Q| rescale_point(t, &a, &b);
        let (p, qq, r, ss) = (map(&c.p)?, map(&c.q)?, map(&c.r)?, map(&c.s)?);
        let (s1, e1) = secant(&outer, &p, &qq, &tol)?;
        let (s2, e2) = secant(&outer, &r, &ss, &tol)?;
        let (o1, _) = secant(&inner, &c.p, &c.q, &tol)?;
        let (o2, _) = secant(&inner, &c.r, &c.s, &tol)?;
        let gap = (&s1 - &s2).abs() - e1 - e2;
        let scaled = (&s1 - &o1 * &weight).abs() <= tol.clone() * int(4) && (&s2 - &o2 * &weight).abs() <= tol.clone() * int(4);
        let meet = map(&c.meet_point)?;
        let inside = [&p, &qq, &r, &ss].iter().all(|t| **t >= a && **t <= b) && meet >= a && meet <= b;
        if gap > &eps * &weight && scaled && inside {
            valid += 1;
        }
    }

    // Locality: two trees sharing their first two children agree on (a_1, 1].
    let mut agree = 0;
    let mut compared = 0;
    let (a1, _) = inner_interval(1);
    for _ in 0..20 {
        let c0 = Arc::new(random_schema(&mut rng, 3));
        let c1 = Arc::new(random_schema(&mut rng, 3));
        let head = vec![ChildEntry::Repeat(c0, 1), ChildEntry::Repeat(c1, 1)];
        let mut t1 = head.clone();
        t1.push(ChildEntry::RepeatOmega(Arc::new(random_schema(&mut rng, 2))));
        let mut t2 = head;
        t2.push(ChildEntry::Family(FamilyGen::WitnessFamily(Ordinal::omega())));
        let f = FunctionHandle::tree(TreeSchema::Node(t1));
        let g = FunctionHandle::tree(TreeSchema::Node(t2));
        let mut points: Vec<Q> = frames(&f, 40)?.iter().map(Frame::anchor).filter(|x| *x > a1).collect();
        points.extend((1..8).map(|k| q(1, 2) + q(k, 16)));
        for x in points {
            let delta = (&x - &a1).min(int(1) - &x) / int(2);
            if !delta.is_positive() {
                continue;
            }
            let verdict = |h: &FunctionHandle| -> Result<(bool, bool)> {
                let m = symbolic_predicate(h, 1);
                Ok((
                    find_certificate(h, &x, &delta, &eps, 1, &m, 64)?.is_some(),
                    removal_at(h, &x, &delta, &eps, 1, &m)?.is_some(),
                ))
            };
            compared += 1;
            if verdict(&f)? == verdict(&g)? {
                agree += 1;
            }
        }
    }
    Ok((
        transports == 100 && valid == 100 && agree == compared,
        format!("{valid}/{transports} transports valid; {agree}/{compared} local verdicts agree over 20 pairs"),
    ))
}

fn stilde_behavior() -> Result<(bool, String)> {
    let flat = stilde_enumerate(&witness("1"), &int(4), 6, 5)?;
    let (a, b) = inner_interval(0);
    let deep = stilde_enumerate_in(&witness("2"), &q(1, 8), 4, 12, &a, &b)?;

    // Soundness and completeness on a grid small enough to list exhaustively.
    let f = witness("2");
    let eps = q(1, 8);
    let tol = pow2_inv(40);
    let r = stilde_enumerate(&f, &eps, 2, 3)?;
    let nodes: HashSet<Vec<(String, String)>> = r.nodes.iter().map(|n| n.pairs.clone()).collect();
    let slope = |p: &Q, qq: &Q| secant(&f, p, qq, &tol);
    let mut unsound = 0;
    for n in &r.nodes {
        let pairs: Vec<(Q, Q)> = n.pairs.iter().map(|(p, qq)| Ok((parse_q(p)?, parse_q(qq)?))).collect::<Result<_>>()?;
        for w in pairs.windows(2) {
            let (s1, e1) = slope(&w[0].0, &w[0].1)?;
            let (s2, e2) = slope(&w[1].0, &w[1].1)?;
            if (s1 - s2).abs() + e1 + e2 < &eps / int(2) {
                unsound += 1;
            }
        }
    }
    let grid: Vec<Q> = (0..=8).map(|k| q(k, 8)).collect();
    let intervals: Vec<(Q, Q)> = grid
        .iter()
        .enumerate()
        .flat_map(|(i, p)| grid[i + 1..].iter().map(move |qq| (p.clone(), qq.clone())))
        .collect();
    let key = |s: &[(Q, Q)]| s.iter().map(|(p, qq)| (fmt_q(p), fmt_q(qq))).collect::<Vec<_>>();
    let mut missing = 0;
    let mut strong = 0;
    for i1 in &intervals {
        if !nodes.contains(&key(std::slice::from_ref(i1))) {
            missing += 1;
        }
        for i2 in &intervals {
            if (&i2.1 - &i2.0) * int(2) > int(1) || i1.0.clone().max(i2.0.clone()) > i1.1.clone().min(i2.1.clone()) {
                continue;
            }
            let (s1, e1) = slope(&i1.0, &i1.1)?;
            let (s2, e2) = slope(&i2.0, &i2.1)?;
            if (s1 - s2).abs() - e1 - e2 >= &eps * int(2) {
                strong += 1;
                if !nodes.contains(&key(&[i1.clone(), i2.clone()])) {
                    missing += 1;
                }
            }
        }
    }
    let ok = flat.rank <= 1 && deep.rank >= 3 && !r.truncated && unsound == 0 && missing == 0;
    Ok((
        ok,
        format!(
            "bump chain {}; rank-2 chain {} (depth {}); {} nodes, {unsound} unsound; {strong} strong pairs, {missing} missing",
            flat.rank,
            deep.rank,
            deep.effective_depth,
            r.nodes.len()
        ),
    ))
}

fn reduction_dichotomy() -> Result<(bool, String)> {
    let start = Instant::now();
    let levels = [o("1"), o("2"), o("3"), o("w+1")];
    let inp = ReductionInput::new(levels.iter().cloned().enumerate().map(|(i, a)| (a, i as u64)).collect())?;
    let mut violations = Vec::new();
    for mask in 0..16u32 {
        let mut stub = OracleStub::new(8, FactStatus::NotIn);
        for (i, a) in levels.iter().enumerate() {
            if mask >> i & 1 == 1 {
                stub = stub.with(a.clone(), i as u64, FactStatus::In(i as u64 + 1));
            }
        }
        let oracle: Arc<dyn WitnessOracle> = Arc::new(stub);
        let (truth, detail) = oracle_truth(&inp, oracle.as_ref())?;
        let pred = predicted_rank(&inp, &truth, &detail)?;
        let rank = reduction_rank(&inp, oracle, 3)?;
        if !pred.admits(&rank) {
            violations.push(format!("mask {mask}: {rank} vs {pred:?}"));
        }
    }
    let (fast, timing) = within(start, Duration::from_secs(30), "16 configurations");
    Ok((violations.is_empty() && fast, if violations.is_empty() { timing } else { violations.join("; ") }))
}

fn theorem41() -> Result<(bool, String)> {
    let alpha = o("2");
    let x = 0;
    let special = tuple_encode(&[x, 2])?;
    let stub = OracleStub::new(special.max(8), FactStatus::In(0)).with(alpha.clone(), special, FactStatus::NotIn);
    let f = thm41_function(&alpha, x, Arc::new(stub), 3)?;
    let rank = handle_empty_stage(&f);
    let fr = root_frame(&f, Some(2))?.ok_or_else(|| Error::Verification("piece 2 is empty".into()))?;
    let m = symbolic_predicate(&f, 2);
    let cert = find_certificate(&f, &fr.anchor(), &fr.width, &q(1, 12), 2, &m, 64)?;
    let mut removal = Vec::new();
    let m1 = symbolic_predicate(&f, 1);
    for eps in [q(1, 1), q(1, 2), q(1, 4)] {
        let s = (0..).find(|s| int(4) / int(*s + 1) < eps).expect("some S");
        let p = prove_removed(&f, &Q::zero(), &eps, 1, &m1)?;
        removal.push(p.is_some_and(|p| p.delta == outer_interval(s as u64).1));
    }
    let ok = rank == alpha.succ() && cert.is_some() && removal.iter().all(|b| *b);
    Ok((ok, format!("symbolic rank {rank}; certificate {}; removal radii {:?}", cert.is_some(), removal)))
}

fn simpson_conformance() -> Result<(bool, String)> {
    let handles = [witness("1"), witness("2"), FunctionHandle::composite(vec![(0, TreeSchema::leaf())], TreeSchema::leaf())];
    let mut notes = Vec::new();
    let mut ok = true;
    for f in &handles {
        // Budget 128 refines to dyadic radius 2^-9, past 10^4 quintuples.
        let code = export_simpson_code(f, 128)?;
        let closed = check_closure(&code);
        let covers = (1..=8).all(|k| covers_at_precision(&code, k));
        ok &= code.len() >= 10_000 && closed.is_ok() && covers;
        notes.push(format!(
            "{} quintuples{}{}",
            code.len(),
            closed.err().map_or(String::new(), |e| format!(", {e}")),
            if covers { "" } else { ", cover fails" }
        ));
    }
    Ok((ok, notes.join("; ")))
}
