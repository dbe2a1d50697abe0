//! Finite descriptions of countably branching well-founded trees.
//!
//! A schema node lists its children as entries: a schema repeated a finite
//! number of times, a schema repeated infinitely often, or a generated
//! family. Children are numbered by first listing every finite repetition
//! in entry order and then visiting the infinite entries round-robin.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{domain, parse_err, Error, Result};
use crate::ordinal::Ordinal;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TreeSchema {
    Empty,
    Node(Vec<ChildEntry>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ChildEntry {
    Repeat(Arc<TreeSchema>, u64),
    RepeatOmega(Arc<TreeSchema>),
    Family(FamilyGen),
}

/// Generators for infinite families of children.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum FamilyGen {
    /// The `n`-th member is `rank_witness(fundamental(lambda, n))`.
    WitnessFamily(Ordinal),
}

pub type NodeAddress = Vec<u64>;

impl FamilyGen {
    fn member(&self, n: u64) -> Result<TreeSchema> {
        match self {
            FamilyGen::WitnessFamily(lambda) => rank_witness(&lambda.fundamental(n)?),
        }
    }

    fn rank(&self) -> &Ordinal {
        match self {
            FamilyGen::WitnessFamily(lambda) => lambda,
        }
    }
}

impl ChildEntry {
    fn is_infinite(&self) -> bool {
        !matches!(self, ChildEntry::Repeat(..))
    }
}

impl TreeSchema {
    /// The tree `{<>}`.
    pub fn leaf() -> Self {
        TreeSchema::Node(Vec::new())
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, TreeSchema::Empty)
    }

    pub fn entries(&self) -> &[ChildEntry] {
        match self {
            TreeSchema::Empty => &[],
            TreeSchema::Node(e) => e,
        }
    }

    /// Number of children contributed by finite repetitions.
    pub fn finite_count(&self) -> u64 {
        self.entries()
            .iter()
            .map(|e| match e {
                ChildEntry::Repeat(_, c) => *c,
                _ => 0,
            })
            .fold(0u64, u64::saturating_add)
    }

    /// True when infinitely many children are nonempty.
    pub fn infinitely_branching(&self) -> bool {
        self.entries().iter().any(|e| match e {
            ChildEntry::RepeatOmega(s) => !s.is_empty(),
            ChildEntry::Family(_) => true,
            ChildEntry::Repeat(..) => false,
        })
    }

    /// The `n`-th child. Fails on the empty tree, which has no root.
    pub fn child_at(&self, n: u64) -> Result<Arc<TreeSchema>> {
        let entries = match self {
            TreeSchema::Empty => return domain("the empty tree has no children"),
            TreeSchema::Node(e) => e,
        };
        let mut k = n;
        for e in entries {
            if let ChildEntry::Repeat(s, c) = e {
                if k < *c {
                    return Ok(s.clone());
                }
                k -= c;
            }
        }
        let infinite: Vec<&ChildEntry> = entries.iter().filter(|e| e.is_infinite()).collect();
        if infinite.is_empty() {
            return Ok(Arc::new(TreeSchema::Empty));
        }
        let m = infinite.len() as u64;
        let turn = k / m;
        match infinite[(k % m) as usize] {
            ChildEntry::RepeatOmega(s) => Ok(s.clone()),
            ChildEntry::Family(g) => Ok(Arc::new(g.member(turn)?)),
            ChildEntry::Repeat(..) => unreachable!(),
        }
    }

    pub fn is_member(&self, addr: &[u64]) -> bool {
        self.subtree(addr).is_ok()
    }

    /// The subtree `T_s` rooted at the address `s`.
    pub fn subtree(&self, addr: &[u64]) -> Result<Arc<TreeSchema>> {
        let mut cur = Arc::new(self.clone());
        if cur.is_empty() {
            return domain("address is not in the tree");
        }
        for &n in addr {
            cur = cur.child_at(n)?;
            if cur.is_empty() {
                return domain("address is not in the tree");
            }
        }
        Ok(cur)
    }

    /// `|T|_ls = max(sup |T_n|, limsup |T_n| + 1)`, with `|{}| = 0`.
    pub fn limsup_rank(&self) -> Ordinal {
        self.rank_memo(&mut HashMap::new())
    }

    /// Limsup of the children's ranks.
    pub fn children_limsup(&self) -> Ordinal {
        let mut memo = HashMap::new();
        self.sup_limsup(&mut memo).1
    }

    fn sup_limsup(&self, memo: &mut HashMap<*const TreeSchema, Ordinal>) -> (Ordinal, Ordinal) {
        let mut sup = Ordinal::zero();
        let mut ls = Ordinal::zero();
        for e in self.entries() {
            let (r, infinite) = match e {
                ChildEntry::Repeat(_, 0) => continue,
                ChildEntry::Repeat(s, _) => (arc_rank(s, memo), false),
                ChildEntry::RepeatOmega(s) => (arc_rank(s, memo), true),
                ChildEntry::Family(g) => (g.rank().clone(), true),
            };
            if infinite && r > ls {
                ls = r.clone();
            }
            if r > sup {
                sup = r;
            }
        }
        (sup, ls)
    }

    fn rank_memo(&self, memo: &mut HashMap<*const TreeSchema, Ordinal>) -> Ordinal {
        if self.is_empty() {
            return Ordinal::zero();
        }
        let (sup, ls) = self.sup_limsup(memo);
        std::cmp::max(sup, ls.succ())
    }

    /// A rank-equivalent schema: `Empty` or `rank_witness(rank)`.
    pub fn canonical(&self) -> TreeSchema {
        let r = self.limsup_rank();
        if r.is_zero() {
            TreeSchema::Empty
        } else {
            rank_witness(&r).expect("nonempty ranks are successors")
        }
    }
}

fn arc_rank(s: &Arc<TreeSchema>, memo: &mut HashMap<*const TreeSchema, Ordinal>) -> Ordinal {
    let key = Arc::as_ptr(s);
    if let Some(r) = memo.get(&key) {
        return r.clone();
    }
    let r = s.rank_memo(memo);
    memo.insert(key, r.clone());
    r
}

/// The canonical tree of limsup rank `alpha` for a successor `alpha`.
pub fn rank_witness(alpha: &Ordinal) -> Result<TreeSchema> {
    if !alpha.is_successor() {
        return domain(format!("rank_witness needs a successor ordinal, got {alpha}"));
    }
    let beta = alpha.pred()?;
    if beta.is_zero() {
        Ok(TreeSchema::leaf())
    } else if beta.is_successor() {
        Ok(TreeSchema::Node(vec![ChildEntry::RepeatOmega(Arc::new(rank_witness(&beta)?))]))
    } else {
        Ok(TreeSchema::Node(vec![ChildEntry::Family(FamilyGen::WitnessFamily(beta))]))
    }
}

impl fmt::Display for TreeSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeSchema::Empty => write!(f, "empty"),
            TreeSchema::Node(entries) if entries.is_empty() => write!(f, "node{{}}"),
            TreeSchema::Node(entries) => {
                write!(f, "node{{ ")?;
                for (i, e) in entries.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    match e {
                        ChildEntry::Repeat(s, 1) => write!(f, "{s}")?,
                        ChildEntry::Repeat(s, c) => write!(f, "{s} x{c}")?,
                        ChildEntry::RepeatOmega(s) => write!(f, "{s} xW")?,
                        ChildEntry::Family(g) => write!(f, "family({})", g.rank())?,
                    }
                }
                write!(f, " }}")
            }
        }
    }
}

impl FromStr for TreeSchema {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = SchemaParser { src: s.as_bytes(), pos: 0 };
        let t = p.schema()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return parse_err(format!("trailing input at byte {} of schema", p.pos));
        }
        Ok(t)
    }
}

struct SchemaParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl SchemaParser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn keyword(&mut self, kw: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(kw.as_bytes()) {
            self.pos += kw.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&c) {
            self.pos += 1;
            Ok(())
        } else {
            parse_err(format!("expected '{}' at byte {} of schema", c as char, self.pos))
        }
    }

    fn schema(&mut self) -> Result<TreeSchema> {
        if self.keyword("empty") {
            return Ok(TreeSchema::Empty);
        }
        if !self.keyword("node") {
            return parse_err(format!("expected 'empty' or 'node' at byte {} of schema", self.pos));
        }
        self.expect(b'{')?;
        let mut entries = Vec::new();
        self.skip_ws();
        if self.src.get(self.pos) == Some(&b'}') {
            self.pos += 1;
            return Ok(TreeSchema::Node(entries));
        }
        loop {
            entries.push(self.entry()?);
            self.skip_ws();
            match self.src.get(self.pos) {
                Some(b',') => self.pos += 1,
                Some(b'}') => {
                    self.pos += 1;
                    return Ok(TreeSchema::Node(entries));
                }
                _ => return parse_err(format!("expected ',' or '}}' at byte {} of schema", self.pos)),
            }
        }
    }

    fn entry(&mut self) -> Result<ChildEntry> {
        if self.keyword("family") {
            self.expect(b'(')?;
            let start = self.pos;
            let mut depth = 1;
            while depth > 0 {
                match self.src.get(self.pos) {
                    Some(b'(') => depth += 1,
                    Some(b')') => depth -= 1,
                    None => return parse_err("unbalanced parentheses in family"),
                    _ => {}
                }
                self.pos += 1;
            }
            let text = std::str::from_utf8(&self.src[start..self.pos - 1])
                .map_err(|_| Error::Parse("invalid utf-8 in family".into()))?;
            let lambda: Ordinal = text.parse()?;
            if !lambda.is_limit() {
                return parse_err(format!("family needs a limit ordinal, got {lambda}"));
            }
            return Ok(ChildEntry::Family(FamilyGen::WitnessFamily(lambda)));
        }
        let s = Arc::new(self.schema()?);
        self.skip_ws();
        if self.src.get(self.pos) != Some(&b'x') {
            return Ok(ChildEntry::Repeat(s, 1));
        }
        self.pos += 1;
        match self.src.get(self.pos) {
            Some(b'W') | Some(b'w') => {
                self.pos += 1;
                Ok(ChildEntry::RepeatOmega(s))
            }
            _ => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
                let c = digits
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad repetition count at byte {start}")))?;
                Ok(ChildEntry::Repeat(s, c))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> TreeSchema {
        s.parse().unwrap()
    }

    fn o(s: &str) -> Ordinal {
        s.parse().unwrap()
    }

    #[test]
    fn small_ranks() {
        assert_eq!(TreeSchema::Empty.limsup_rank(), Ordinal::zero());
        assert_eq!(t("node{}").limsup_rank(), o("1"));
        assert_eq!(t("node{ node{} xW }").limsup_rank(), o("2"));
        assert_eq!(t("node{ node{} x5 }").limsup_rank(), o("1"));
        assert_eq!(t("node{ family(w) }").limsup_rank(), o("w+1"));
        assert_eq!(t("node{ node{ node{} xW } x3, node{} xW }").limsup_rank(), o("2"));
    }

    #[test]
    fn witnesses() {
        for s in ["1", "2", "5", "w+1", "w+2", "w*2+1", "w^2+1", "w^(w)+3"] {
            assert_eq!(rank_witness(&o(s)).unwrap().limsup_rank(), o(s), "{s}");
        }
        assert!(rank_witness(&o("w")).is_err());
        assert!(rank_witness(&o("0")).is_err());
    }

    #[test]
    fn children_order() {
        let s = t("node{ node{} x2, empty xW, family(w) }");
        assert_eq!(*s.child_at(0).unwrap(), TreeSchema::leaf());
        assert_eq!(*s.child_at(1).unwrap(), TreeSchema::leaf());
        assert_eq!(*s.child_at(2).unwrap(), TreeSchema::Empty);
        assert_eq!(s.child_at(3).unwrap().limsup_rank(), o("1"));
        assert_eq!(s.child_at(5).unwrap().limsup_rank(), o("2"));
        assert!(TreeSchema::Empty.child_at(0).is_err());
    }

    #[test]
    fn membership() {
        let s = t("node{ node{ node{} } }");
        assert!(s.is_member(&[]));
        assert!(s.is_member(&[0, 0]));
        assert!(!s.is_member(&[1]));
        assert!(!s.is_member(&[0, 0, 0]));
        assert!(!TreeSchema::Empty.is_member(&[]));
    }

    #[test]
    fn text_round_trip() {
        for s in ["empty", "node{}", "node{ node{} x2, node{} xW, family(w^(w)) }", "node{ empty, node{ node{} xW } }"] {
            assert_eq!(t(s).to_string(), s);
        }
        assert!("node{ family(3) }".parse::<TreeSchema>().is_err());
        assert!("node{ node{} x }".parse::<TreeSchema>().is_err());
    }
}
