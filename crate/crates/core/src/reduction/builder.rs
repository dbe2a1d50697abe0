//! The recursive tree of the reduction lemma.
//!
//! A node carries finitely many facts `(α_i, x_i)` and its `n`-th child is
//! decided by decoding `n = ⟨m_0, ..., m_k⟩`. Under a status-determined
//! oracle a child's subtree depends only on the levels and statuses of its
//! facts, so nodes are memoized by that shape and children are enumerated
//! by class instead of by code.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use super::oracle::{g0_of_status, FactId, FactStatus, WitnessOracle};
use super::pairing::tuple_decode;
use crate::error::{domain, Error, Result};
use crate::lazy::{LazyChild, LazyTree};
use crate::ordinal::Ordinal;
use crate::treeschema::{rank_witness, TreeSchema};

/// Pairs `(α_i, x_i)` with every `α_i >= 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionInput {
    pub pairs: Vec<(Ordinal, u64)>,
}

impl ReductionInput {
    pub fn new(pairs: Vec<(Ordinal, u64)>) -> Result<Self> {
        if pairs.is_empty() {
            return domain("a reduction input needs at least one pair");
        }
        if let Some((a, _)) = pairs.iter().find(|(a, _)| a.is_zero()) {
            return domain(format!("reduction levels must be at least 1, got {a}"));
        }
        Ok(ReductionInput { pairs })
    }
}

/// Outcome of the five steps for one child.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Child<F> {
    Empty,
    Leaf,
    Recurse(Vec<(Ordinal, F)>),
}

/// How derived facts are produced from a parent fact.
trait Derive<F> {
    fn g0(&self, f: &F, z: u64, y: u64) -> Result<bool>;
    fn witness(&self, f: &F, z: u64, y: u64) -> Result<F>;
    fn split(&self, f: &F, lambda: &Ordinal, n: u64) -> Result<F>;
}

struct ById<'a>(&'a dyn WitnessOracle);

impl Derive<FactId> for ById<'_> {
    fn g0(&self, f: &FactId, z: u64, y: u64) -> Result<bool> {
        self.0.g0(f, z, y)
    }
    fn witness(&self, f: &FactId, z: u64, y: u64) -> Result<FactId> {
        Ok(FactId::Witness { parent: Arc::new(f.clone()), z, y })
    }
    fn split(&self, f: &FactId, lambda: &Ordinal, n: u64) -> Result<FactId> {
        Ok(FactId::Split { parent: Arc::new(f.clone()), lambda: lambda.clone(), n })
    }
}

struct ByStatus<'a>(&'a dyn WitnessOracle);

impl Derive<FactStatus> for ByStatus<'_> {
    fn g0(&self, f: &FactStatus, z: u64, y: u64) -> Result<bool> {
        Ok(g0_of_status(*f, z, y))
    }
    fn witness(&self, f: &FactStatus, z: u64, y: u64) -> Result<FactStatus> {
        Ok(self.0.witness_status(*f, z, y))
    }
    fn split(&self, f: &FactStatus, _lambda: &Ordinal, n: u64) -> Result<FactStatus> {
        Ok(self.0.split_status(*f, n))
    }
}

const MAX_M: u64 = 100_000;

/// Least `M` with `γ <= β_M` for every `γ < λ` in `gammas`.
pub fn m_star(lambda: &Ordinal, gammas: &[Ordinal]) -> Result<u64> {
    let need: Vec<&Ordinal> = gammas.iter().filter(|g| *g < lambda).collect();
    let mut m = 0;
    loop {
        let b = lambda.fundamental(m)?;
        if need.iter().all(|g| **g <= b) {
            return Ok(m);
        }
        m += 1;
        if m > MAX_M {
            return Err(Error::Verification(format!("no M below {MAX_M} dominates the levels under {lambda}")));
        }
    }
}

/// Levels of `F_1 ∪ F_2` for sorted facts; they do not depend on the tuple.
fn low_levels<F>(facts: &[(Ordinal, F)]) -> Result<Vec<Ordinal>> {
    let a1 = &facts[0].0;
    let mut out: Vec<Ordinal> = facts.iter().filter(|(a, _)| a < a1).map(|(a, _)| a.clone()).collect();
    for (a, _) in facts {
        if a.is_successor() && *a > Ordinal::one() {
            out.push(a.pred()?);
        }
    }
    Ok(out)
}

/// Steps (1)-(5) for the child `⟨m_0, ..., m_k⟩` of a node whose facts are
/// sorted by decreasing level.
fn technical_child<F: Clone>(facts: &[(Ordinal, F)], ms: &[u64], d: &dyn Derive<F>) -> Result<Child<F>> {
    let k = facts.len();
    if ms.len() != k + 1 {
        return domain(format!("child tuple needs {} components", k + 1));
    }
    if !ms.windows(2).all(|w| w[0] < w[1]) {
        return Ok(Child::Empty);
    }
    for (i, (a, _)) in facts.iter().enumerate() {
        if a.is_limit() && ms[i + 1] != ms[i] + 1 {
            return Ok(Child::Empty);
        }
    }
    for (i, (a, x)) in facts.iter().enumerate() {
        if *a == Ordinal::one() && !d.g0(x, ms[i], ms[i + 1])? {
            return Ok(Child::Empty);
        }
    }
    let a1 = &facts[0].0;
    if *a1 == Ordinal::one() {
        return Ok(Child::Leaf);
    }
    let gammas = low_levels(facts)?;
    let mut out: Vec<(Ordinal, F)> = facts.iter().filter(|(a, _)| a < a1).cloned().collect();
    for (i, (a, x)) in facts.iter().enumerate() {
        if a.is_successor() && *a > Ordinal::one() {
            out.push((a.pred()?, d.witness(x, ms[i], ms[i + 1])?));
        }
    }
    for (i, (a, x)) in facts.iter().enumerate() {
        if a.is_limit() {
            let m = ms[i + 1].max(m_star(a, &gammas)?);
            for n in 0..=m {
                out.push((a.fundamental(n)?, d.split(x, a, n)?));
            }
        }
    }
    Ok(Child::Recurse(out))
}

/// Within a level, facts with more witnesses come first: `out`, then `in`
/// by decreasing cutoff.
fn tie_key(s: FactStatus) -> (u8, std::cmp::Reverse<u64>) {
    match s {
        FactStatus::NotIn => (0, std::cmp::Reverse(0)),
        FactStatus::In(c) => (1, std::cmp::Reverse(c)),
    }
}

/// The `n`-th child of the root exactly as the lemma states it, by decoding
/// `n` with iterated Cantor pairing.
pub fn child_by_code(inp: &ReductionInput, oracle: &dyn WitnessOracle, n: u64) -> Result<Child<FactId>> {
    let facts = sorted_input(inp, oracle)?;
    match tuple_decode(n, facts.len()) {
        Some(ms) => technical_child(&facts, &ms, &ById(oracle)),
        None => Ok(Child::Empty),
    }
}

fn sorted_input(inp: &ReductionInput, oracle: &dyn WitnessOracle) -> Result<Vec<(Ordinal, FactId)>> {
    let mut facts: Vec<(Ordinal, FactId, FactStatus)> = Vec::new();
    for (a, x) in &inp.pairs {
        let f = FactId::Base(*x);
        let s = oracle.status(&f, a)?;
        facts.push((a.clone(), f, s));
    }
    facts.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| tie_key(a.2).cmp(&tie_key(b.2))));
    Ok(facts.into_iter().map(|(a, f, _)| (a, f)).collect())
}

/// Levels and statuses of a node's facts, sorted by decreasing level and
/// run-length encoded.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Shape(pub Vec<(Ordinal, FactStatus, u64)>);

impl Shape {
    pub fn new(facts: Vec<(Ordinal, FactStatus)>) -> Self {
        Shape::from_runs(facts.into_iter().map(|(a, s)| (a, s, 1)).collect())
    }

    fn from_runs(mut runs: Vec<(Ordinal, FactStatus, u64)>) -> Self {
        runs.retain(|r| r.2 > 0);
        runs.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| tie_key(a.1).cmp(&tie_key(b.1))));
        let mut out: Vec<(Ordinal, FactStatus, u64)> = Vec::new();
        for (a, s, c) in runs {
            match out.last_mut() {
                Some(last) if last.0 == a && last.1 == s => last.2 += c,
                _ => out.push((a, s, c)),
            }
        }
        Shape(out)
    }

    /// Number of facts.
    pub fn len(&self) -> u64 {
        self.0.iter().map(|r| r.2).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn facts(&self) -> Vec<(Ordinal, FactStatus)> {
        self.0
            .iter()
            .flat_map(|(a, s, c)| std::iter::repeat_n((a.clone(), *s), *c as usize))
            .collect()
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|(a, s, c)| if *c == 1 { format!("{a}:{s}") } else { format!("{a}:{s}x{c}") })
            .collect();
        write!(f, "[{}]", parts.join(","))
    }
}

enum Outcome {
    Empty,
    Leaf,
    Node(Shape),
}

impl From<Child<FactStatus>> for Outcome {
    fn from(c: Child<FactStatus>) -> Self {
        match c {
            Child::Empty => Outcome::Empty,
            Child::Leaf => Outcome::Leaf,
            Child::Recurse(f) => Outcome::Node(Shape::new(f)),
        }
    }
}

/// A tuple component: an exact value, or `base + p + offset` for the class
/// parameter `p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Val {
    Exact(u64),
    Large(u64),
}

/// Child classes of a small node: exact prefixes up to `t` followed by a
/// large suffix. In the large region free components within a run of equal
/// facts are grouped so that the first `h` hit and the rest leave a gap.
fn templates(facts: &[(Ordinal, FactStatus)], t: u64) -> Vec<Vec<Val>> {
    let k = facts.len();
    let forced = |i: usize| facts[i].0.is_limit() || facts[i].0 == Ordinal::one();
    let mut out: Vec<Vec<Val>> = Vec::new();
    let mut stack: Vec<Vec<Val>> = (0..=t).map(|v| vec![Val::Exact(v)]).collect();
    stack.push(vec![Val::Large(0)]);
    while let Some(prefix) = stack.pop() {
        let i = prefix.len();
        if i == k + 1 {
            out.push(prefix);
            continue;
        }
        match *prefix.last().expect("nonempty") {
            Val::Exact(e) => {
                if forced(i - 1) {
                    stack.push([prefix.clone(), vec![Val::Exact(e + 1)]].concat());
                } else {
                    for v in e + 1..=t.max(e + 1) {
                        stack.push([prefix.clone(), vec![Val::Exact(v)]].concat());
                    }
                    stack.push([prefix.clone(), vec![Val::Large(0)]].concat());
                }
            }
            Val::Large(_) => {
                let mut suffixes: Vec<Vec<Val>> = vec![prefix.clone()];
                let mut j = i;
                while j <= k {
                    if forced(j - 1) {
                        for s in &mut suffixes {
                            let Val::Large(o) = *s.last().expect("nonempty") else { unreachable!() };
                            s.push(Val::Large(o + 1));
                        }
                        j += 1;
                        continue;
                    }
                    let mut run = j;
                    while run <= k && !forced(run - 1) && facts[run - 1] == facts[j - 1] {
                        run += 1;
                    }
                    let len = run - j;
                    let mut next = Vec::new();
                    for s in &suffixes {
                        for h in 0..=len {
                            let mut s = s.clone();
                            for q in 0..len {
                                let Val::Large(o) = *s.last().expect("nonempty") else { unreachable!() };
                                s.push(Val::Large(o + if q < h { 1 } else { 2 }));
                            }
                            next.push(s);
                        }
                    }
                    suffixes = next;
                    j = run;
                }
                out.extend(suffixes);
            }
        }
    }
    out.sort_by_key(|tm| tm.iter().map(|v| match v { Val::Exact(e) => (0, *e), Val::Large(o) => (1, *o) }).collect::<Vec<_>>());
    out
}

/// Least limit ordinal above `r`.
fn limit_above(r: &Ordinal) -> Ordinal {
    r.terms()
        .iter()
        .filter(|(e, _)| !e.is_zero())
        .fold(Ordinal::zero(), |acc, (e, c)| acc.add(&Ordinal::omega_pow(e.clone(), *c)))
        .add(&Ordinal::omega())
}

/// Running `sup` and `limsup` over the children of one node.
#[derive(Default)]
struct Acc {
    sup: Ordinal,
    limsup: Option<Ordinal>,
}

impl Acc {
    fn finite(&mut self, r: Ordinal) {
        self.sup = self.sup.clone().max(r);
    }

    fn infinite(&mut self, r: Ordinal) {
        self.limsup = Some(self.limsup.take().map_or(r.clone(), |l| l.max(r.clone())));
        self.finite(r);
    }

    /// A family of children sampled at consecutive parameters. A single
    /// sample stands for a family that does not depend on the parameter.
    fn sequence(&mut self, seq: Vec<Option<Ordinal>>) -> Result<()> {
        if seq.len() == 1 {
            if let Some(r) = seq.into_iter().next().flatten() {
                self.infinite(r);
            }
            return Ok(());
        }
        let half = seq.len() / 2;
        if seq[half..].iter().all(Option::is_none) {
            seq.into_iter().flatten().for_each(|r| self.finite(r));
            return Ok(());
        }
        let show = |s: &[Option<Ordinal>]| {
            s.iter().map(|r| r.as_ref().map_or("-".into(), |r| r.to_string())).collect::<Vec<_>>().join(", ")
        };
        let Some(ranks) = seq.iter().cloned().collect::<Option<Vec<Ordinal>>>() else {
            return Err(Error::Verification(format!("child family mixes empty and nonempty children ({})", show(&seq))));
        };
        let last = ranks.last().expect("nonempty").clone();
        if ranks.windows(2).all(|w| w[0] < w[1]) {
            self.infinite(limit_above(&last));
        } else if ranks.windows(2).all(|w| w[0] <= w[1]) && ranks[half..].iter().all(|r| *r == last) {
            ranks.into_iter().for_each(|r| self.finite(r));
            self.infinite(last);
        } else {
            return Err(Error::Verification(format!("child ranks neither settle nor climb ({})", show(&seq))));
        }
        Ok(())
    }

    fn rank(&self) -> Ordinal {
        let l = self.limsup.as_ref().map_or(Ordinal::zero(), |l| l.succ());
        self.sup.clone().max(l).max(Ordinal::one())
    }
}

/// A child tuple of a large node: `m_0`, then `m_i = m_{i-1} + 1` except
/// at the listed positions, which jump by the given amount.
struct Tuple {
    m0: u64,
    gaps: Vec<(u64, u64)>,
}

impl Tuple {
    fn m(&self, i: u64) -> u64 {
        self.m0 + i + self.gaps.iter().filter(|(p, _)| *p <= i).map(|(_, g)| g - 1).sum::<u64>()
    }
}

/// Shapes with more facts than this are ranked from a few dominant child
/// classes instead of all of them.
const SMALL: u64 = 4;

/// Memoizing rank computation over shapes.
pub struct Builder {
    oracle: Arc<dyn WitnessOracle>,
    window: u64,
    ranks: Mutex<HashMap<Shape, Ordinal>>,
}

impl Builder {
    /// `window + 1` consecutive members of each parameterized child family
    /// are ranked to decide whether the family settles or climbs.
    pub fn new(oracle: Arc<dyn WitnessOracle>, window: u64) -> Arc<Self> {
        Arc::new(Builder { oracle, window: window.max(2), ranks: Mutex::new(HashMap::new()) })
    }

    /// Limsup rank of the subtree below a node of this shape.
    pub fn rank(&self, shape: &Shape) -> Result<Ordinal> {
        if let Some(r) = self.ranks.lock().expect("rank cache").get(shape) {
            return Ok(r.clone());
        }
        if shape.is_empty() {
            return domain("a node needs at least one fact");
        }
        let r = if shape.len() <= SMALL { self.rank_by_classes(shape)? } else { self.rank_by_candidates(shape)? };
        self.ranks.lock().expect("rank cache").insert(shape.clone(), r.clone());
        Ok(r)
    }

    fn outcome_rank(&self, o: Outcome) -> Result<Option<Ordinal>> {
        Ok(match o {
            Outcome::Empty => None,
            Outcome::Leaf => Some(Ordinal::one()),
            Outcome::Node(s) => Some(self.rank(&s)?),
        })
    }

    fn rank_by_classes(&self, shape: &Shape) -> Result<Ordinal> {
        let facts = shape.facts();
        let k = facts.len();
        let gammas = low_levels(&facts)?;
        let mut t = facts.iter().filter_map(|(_, s)| s.cutoff()).max().unwrap_or(0);
        for (a, _) in &facts {
            if a.is_limit() {
                t = t.max(m_star(a, &gammas)?);
            }
        }
        let t = t + 1;
        let base = t + k as u64 + 2;
        let d = ByStatus(self.oracle.as_ref());
        let bound = facts[0].0.succ();
        let mut acc = Acc::default();
        for tm in templates(&facts, t) {
            let at = |p: u64| -> Vec<u64> {
                tm.iter()
                    .map(|v| match v {
                        Val::Exact(e) => *e,
                        Val::Large(o) => base + p + o,
                    })
                    .collect()
            };
            if !tm.iter().any(|v| matches!(v, Val::Large(_))) {
                if let Some(r) = self.outcome_rank(technical_child(&facts, &at(0), &d)?.into())? {
                    acc.finite(r);
                }
                continue;
            }
            let parameterized = facts.iter().enumerate().any(|(i, (a, _))| a.is_limit() && matches!(tm[i + 1], Val::Large(_)));
            let n = if parameterized { self.window } else { 0 };
            let seq = (0..=n)
                .map(|p| self.outcome_rank(technical_child(&facts, &at(p), &d)?.into()))
                .collect::<Result<Vec<_>>>()?;
            acc.sequence(seq)?;
            if acc.rank() >= bound {
                break;
            }
        }
        Ok(acc.rank())
    }

    /// Rank a large node from its dominant child classes.
    ///
    /// Giving a fact more witnesses never lowers a rank, and facts are
    /// ordered best first within a level, so the child at `m_0 = 0` with no
    /// gaps dominates every child. Infinitely many tuples need an unbounded
    /// component; the dominant ones have a single unbounded `m_0` or a single
    /// unbounded gap. Gap positions past every cutoff differ only in which
    /// run loses a hit, so one position per run stands for the rest.
    fn rank_by_candidates(&self, shape: &Shape) -> Result<Ordinal> {
        let bound = shape.0[0].0.succ();
        let mut levels: Vec<Ordinal> = Vec::new();
        for (a, _, _) in &shape.0 {
            levels.push(a.clone());
            if a.is_successor() {
                levels.push(a.pred()?);
            }
        }
        let mut t0 = 0;
        for (a, _, _) in &shape.0 {
            if a.is_limit() {
                t0 = t0.max(m_star(a, &levels)? + 1);
            }
        }
        let max_cut = shape.0.iter().filter_map(|(_, s, _)| s.cutoff()).max();
        let big = max_cut.map_or(0, |c| c + 2) + t0 + 1;
        let reach = max_cut.map_or(1, |c| c + 2);
        let has_limit = shape.0.iter().any(|r| r.0.is_limit());
        let n = if has_limit { self.window } else { 0 };

        let mut gaps_at: Vec<u64> = Vec::new();
        let mut p = 1;
        for (a, _, c) in &shape.0 {
            let last = p + c - 1;
            if a.is_successor() && *a > Ordinal::one() {
                gaps_at.extend(p..=last.min(reach));
                if last > reach {
                    gaps_at.push(p.max(reach + 1));
                }
            }
            p = last + 1;
        }
        let mut families: Vec<Box<dyn Fn(u64) -> Tuple>> = vec![Box::new(move |t| Tuple { m0: big + t, gaps: vec![] })];
        for j in gaps_at {
            families.push(Box::new(move |t| Tuple { m0: 0, gaps: vec![(j, big + 1 + t)] }));
        }

        let mut acc = Acc::default();
        for fam in &families {
            let seq = (0..=n)
                .map(|t| self.outcome_rank(self.candidate_child(shape, &fam(t))?))
                .collect::<Result<Vec<_>>>()?;
            acc.sequence(seq)?;
            if acc.rank() >= bound {
                return Ok(acc.rank());
            }
        }
        if let Some(r) = self.outcome_rank(self.candidate_child(shape, &Tuple { m0: 0, gaps: vec![] })?)? {
            acc.finite(r);
        }
        Ok(acc.rank())
    }

    /// Steps (1)-(5) on a run-length shape.
    fn candidate_child(&self, shape: &Shape, tup: &Tuple) -> Result<Outcome> {
        let a1 = &shape.0[0].0;
        let gap_at = |i: u64| tup.gaps.iter().any(|(p, _)| *p == i);
        let mut runs: Vec<(Ordinal, FactStatus, u64)> = Vec::new();
        let mut limits: Vec<(Ordinal, FactStatus, u64)> = Vec::new();
        let mut p = 1;
        for (a, s, c) in &shape.0 {
            let last = p + c - 1;
            if *a == Ordinal::one() {
                for i in p..=last {
                    if gap_at(i) || !g0_of_status(*s, tup.m(i - 1), tup.m(i)) {
                        return Ok(Outcome::Empty);
                    }
                }
            } else if a.is_limit() {
                for i in p..=last {
                    if gap_at(i) {
                        return Ok(Outcome::Empty);
                    }
                    limits.push((a.clone(), *s, i));
                }
            } else {
                let b = a.pred()?;
                let mut tally: Vec<(FactStatus, u64)> = Vec::new();
                for i in p..=last {
                    let w = self.oracle.witness_status(*s, tup.m(i - 1), tup.m(i));
                    match tally.iter_mut().find(|(x, _)| *x == w) {
                        Some(e) => e.1 += 1,
                        None => tally.push((w, 1)),
                    }
                }
                runs.extend(tally.into_iter().map(|(w, n)| (b.clone(), w, n)));
            }
            if a < a1 {
                runs.push((a.clone(), *s, *c));
            }
            p = last + 1;
        }
        if *a1 == Ordinal::one() {
            return Ok(Outcome::Leaf);
        }
        let gammas: Vec<Ordinal> = runs.iter().map(|r| r.0.clone()).collect();
        for (a, s, i) in limits {
            let top = tup.m(i).max(m_star(&a, &gammas)?);
            for n in 0..=top {
                runs.push((a.fundamental(n)?, self.oracle.split_status(s, n), 1));
            }
        }
        Ok(Outcome::Node(Shape::from_runs(runs)))
    }

    /// The lemma's tree below a node of the given shape, with children
    /// decoded from their codes. Folding yields a rank witness of the
    /// computed rank.
    pub fn tree(self: &Arc<Self>, shape: Shape) -> LazyTree {
        let me = self.clone();
        let key = shape.to_string();
        let facts = shape.facts();
        let me2 = self.clone();
        let children = move |n: u64| -> Result<LazyChild> {
            let Some(ms) = tuple_decode(n, facts.len()) else {
                return Ok(LazyChild::Schema(TreeSchema::Empty));
            };
            Ok(match technical_child(&facts, &ms, &ByStatus(me.oracle.as_ref()))? {
                Child::Empty => LazyChild::Schema(TreeSchema::Empty),
                Child::Leaf => LazyChild::Schema(TreeSchema::leaf()),
                Child::Recurse(f) => LazyChild::Lazy(me.tree(Shape::new(f))),
            })
        };
        LazyTree::new(children, None)
            .with_key(key)
            .with_fold(move || Ok(Arc::new(rank_witness(&me2.rank(&shape)?)?)))
    }
}

/// Root shape of an input: levels with the oracle's answers.
pub fn input_shape(inp: &ReductionInput, oracle: &dyn WitnessOracle) -> Result<Shape> {
    let mut facts = Vec::new();
    for (a, x) in &inp.pairs {
        facts.push((a.clone(), oracle.status(&FactId::Base(*x), a)?));
    }
    Ok(Shape::new(facts))
}

/// The lemma's tree for `inp`.
pub fn build_reduction_tree(inp: &ReductionInput, oracle: Arc<dyn WitnessOracle>) -> Result<LazyTree> {
    let shape = input_shape(inp, oracle.as_ref())?;
    Ok(Builder::new(oracle, 3).tree(shape))
}

/// Limsup rank of the lemma's tree for `inp`.
pub fn reduction_rank(inp: &ReductionInput, oracle: Arc<dyn WitnessOracle>, window: u64) -> Result<Ordinal> {
    let shape = input_shape(inp, oracle.as_ref())?;
    Builder::new(oracle, window).rank(&shape)
}

/// A schema with the same limsup rank as the reduction tree.
pub fn fold_reduction(inp: &ReductionInput, oracle: Arc<dyn WitnessOracle>, window: u64) -> Result<Arc<TreeSchema>> {
    Ok(Arc::new(rank_witness(&reduction_rank(inp, oracle, window)?)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduction::oracle::OracleStub;
    use crate::reduction::pairing::tuple_encode;

    fn o(s: &str) -> Ordinal {
        s.parse().unwrap()
    }

    fn all_out() -> Arc<dyn WitnessOracle> {
        Arc::new(OracleStub::new(8, FactStatus::NotIn))
    }

    fn rank(pairs: Vec<(Ordinal, u64)>, oracle: Arc<dyn WitnessOracle>) -> Ordinal {
        fold_reduction(&ReductionInput::new(pairs).unwrap(), oracle, 3).unwrap().limsup_rank()
    }

    #[test]
    fn base_case_children_by_code() {
        let inp = ReductionInput::new(vec![(o("1"), 0)]).unwrap();
        let stub = OracleStub::new(8, FactStatus::NotIn);
        for n in 0..200 {
            let ms = tuple_decode(n, 1).unwrap();
            let c = child_by_code(&inp, &stub, n).unwrap();
            assert_eq!(c == Child::Leaf, ms[1] == ms[0] + 1, "n = {n}");
        }
        assert_eq!(child_by_code(&inp, &stub, tuple_encode(&[4, 5]).unwrap()).unwrap(), Child::Leaf);
        assert_eq!(rank(vec![(o("1"), 0)], all_out()), o("2"));
    }

    #[test]
    fn false_fact_gives_finite_children() {
        let stub = Arc::new(OracleStub::new(8, FactStatus::NotIn).with(o("1"), 0, FactStatus::In(3)));
        let inp = ReductionInput::new(vec![(o("1"), 0)]).unwrap();
        let live = (0..2000).filter(|&n| child_by_code(&inp, stub.as_ref(), n).unwrap() != Child::Empty).count();
        assert_eq!(live, 4);
        assert_eq!(rank(vec![(o("1"), 0)], stub), o("1"));
    }

    #[test]
    fn successor_levels() {
        assert_eq!(rank(vec![(o("2"), 0)], all_out()), o("3"));
        assert_eq!(rank(vec![(o("2"), 0), (o("1"), 1)], all_out()), o("3"));
        assert_eq!(rank(vec![(o("3"), 0)], all_out()), o("4"));
        let stub = Arc::new(OracleStub::new(8, FactStatus::NotIn).with(o("2"), 0, FactStatus::In(1)));
        assert!(rank(vec![(o("2"), 0)], stub) <= o("2"));
    }

    #[test]
    fn limit_levels() {
        assert_eq!(rank(vec![(o("w"), 0)], all_out()), o("w+1"));
        let stub = Arc::new(OracleStub::new(8, FactStatus::NotIn).with(o("w"), 0, FactStatus::In(2)));
        assert!(rank(vec![(o("w"), 0)], stub) <= o("w").fundamental(2).unwrap().succ());
    }

    #[test]
    fn m_star_is_minimal() {
        let gammas = vec![o("3"), o("5"), o("w+2")];
        let m = m_star(&o("w"), &gammas).unwrap();
        assert_eq!(o("w").fundamental(m).unwrap(), o("5"));
        assert!(o("w").fundamental(m - 1).unwrap() < o("5"));
        assert_eq!(m_star(&o("w"), &[]).unwrap(), 0);
    }

    #[test]
    fn rejects_level_zero() {
        assert!(ReductionInput::new(vec![(o("0"), 1)]).is_err());
        assert!(ReductionInput::new(vec![]).is_err());
    }

    #[test]
    fn lazy_tree_folds_to_rank() {
        let inp = ReductionInput::new(vec![(o("2"), 0)]).unwrap();
        let t = build_reduction_tree(&inp, all_out()).unwrap();
        assert_eq!(crate::lazy::lazy_rank_under_periodicity(&t, 3).unwrap(), o("3"));
        assert!(matches!(t.child(tuple_encode(&[3, 4]).unwrap()).unwrap(), LazyChild::Lazy(_)));
    }

    #[test]
    fn candidates_agree_with_classes() {
        let b = Builder::new(all_out(), 3);
        let out = FactStatus::NotIn;
        let in0 = FactStatus::In(0);
        let shapes = vec![
            vec![(o("3"), out), (o("2"), in0), (o("2"), out), (o("1"), out)],
            vec![(o("2"), in0), (o("2"), out), (o("1"), out)],
            vec![(o("3"), in0), (o("2"), out), (o("1"), out), (o("1"), out)],
            vec![(o("2"), out), (o("2"), in0), (o("2"), in0), (o("1"), out)],
            vec![(o("w"), out), (o("2"), out), (o("1"), out)],
            vec![(o("w"), in0), (o("2"), out)],
            vec![(o("3"), FactStatus::In(2)), (o("2"), out), (o("1"), FactStatus::In(3))],
            vec![(o("2"), FactStatus::In(1)), (o("2"), FactStatus::In(2)), (o("1"), out), (o("1"), out)],
            vec![(o("3"), out), (o("2"), FactStatus::In(1)), (o("1"), FactStatus::In(2))],
            vec![(o("w"), out), (o("2"), FactStatus::In(1)), (o("1"), FactStatus::In(4))],
            vec![(o("w"), FactStatus::In(2)), (o("1"), out)],
        ];
        for f in shapes {
            let shape = Shape::new(f);
            let by_classes = b.rank_by_classes(&shape).unwrap();
            let by_candidates = b.rank_by_candidates(&shape).unwrap();
            assert_eq!(by_classes, by_candidates, "{shape}");
        }
    }

    #[test]
    fn doubling_shapes_stay_cheap() {
        let f: Vec<(Ordinal, FactStatus)> = (1..=9).map(|n| (Ordinal::nat(n), FactStatus::NotIn)).collect();
        let b = Builder::new(all_out(), 3);
        assert_eq!(b.rank(&Shape::new(f)).unwrap(), o("10"));
    }
}
