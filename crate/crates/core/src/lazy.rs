//! Trees given by a children function plus a periodicity declaration.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ordinal::Ordinal;
use crate::treeschema::{ChildEntry, FamilyGen, TreeSchema};

pub enum LazyChild {
    Schema(TreeSchema),
    Lazy(LazyTree),
}

/// Children at index `bound + r + period * t` share the residue `r`.
///
/// For an ordinary residue every such child folds to the same schema. A
/// parameterized residue `(r, lambda)` has children that may change with
/// `t`; their ranks must either settle or climb strictly while staying
/// below `lambda`, in which case they are folded into a family cofinal in
/// `lambda`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Periodicity {
    pub bound: u64,
    pub period: u64,
    pub parameterized: Vec<(u64, Ordinal)>,
}

type ChildFn = dyn Fn(u64) -> Result<LazyChild> + Send + Sync;
type FoldFn = dyn Fn() -> Result<Arc<TreeSchema>> + Send + Sync;

#[derive(Clone)]
pub struct LazyTree {
    children: Arc<ChildFn>,
    periodicity: Option<Periodicity>,
    key: Option<String>,
    fold_with: Option<Arc<FoldFn>>,
}

impl fmt::Debug for LazyTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LazyTree")
            .field("periodicity", &self.periodicity)
            .field("key", &self.key)
            .finish()
    }
}

impl LazyTree {
    pub fn new(
        children: impl Fn(u64) -> Result<LazyChild> + Send + Sync + 'static,
        periodicity: Option<Periodicity>,
    ) -> Self {
        LazyTree { children: Arc::new(children), periodicity, key: None, fold_with: None }
    }

    /// Attach a memo key. Two trees with the same key must fold to the
    /// same schema.
    pub fn with_key(mut self, key: String) -> Self {
        self.key = Some(key);
        self
    }

    /// Fold through `f` instead of the periodicity declaration. `f` must
    /// return a schema of the same limsup rank as the tree.
    pub fn with_fold(mut self, f: impl Fn() -> Result<Arc<TreeSchema>> + Send + Sync + 'static) -> Self {
        self.fold_with = Some(Arc::new(f));
        self
    }

    pub fn child(&self, n: u64) -> Result<LazyChild> {
        (self.children)(n)
    }

    pub fn periodicity(&self) -> Option<&Periodicity> {
        self.periodicity.as_ref()
    }

    /// Fold into a schema, spot-checking the periodicity declaration on
    /// `budget + 1` periods past the bound.
    pub fn fold(&self, budget: u64) -> Result<Arc<TreeSchema>> {
        self.fold_memo(budget, &mut HashMap::new())
    }

    fn fold_memo(&self, budget: u64, memo: &mut HashMap<String, Arc<TreeSchema>>) -> Result<Arc<TreeSchema>> {
        if let Some(k) = &self.key {
            if let Some(s) = memo.get(k) {
                return Ok(s.clone());
            }
        }
        if let Some(f) = &self.fold_with {
            let folded = f()?;
            if let Some(k) = &self.key {
                memo.insert(k.clone(), folded.clone());
            }
            return Ok(folded);
        }
        let p = self
            .periodicity
            .as_ref()
            .ok_or_else(|| Error::Verification("lazy tree has no periodicity declaration".into()))?;
        if p.period == 0 {
            return Err(Error::Verification("periodicity declares period 0".into()));
        }
        let mut entries = Vec::new();
        for i in 0..p.bound {
            entries.push(ChildEntry::Repeat(self.fold_child(i, budget, memo)?, 1));
        }
        for r in 0..p.period {
            let start = p.bound + r;
            let idx = |t: u64| start + p.period * t;
            if let Some((_, lambda)) = p.parameterized.iter().find(|(res, _)| *res == r) {
                entries.push(self.fold_parameterized(lambda, budget, &idx, memo)?);
                continue;
            }
            let first = self.fold_child(start, budget, memo)?;
            for t in 1..=budget {
                let other = self.fold_child(idx(t), budget, memo)?;
                if other != first {
                    return Err(Error::Verification(format!(
                        "periodicity violated: child {} differs from child {start}",
                        idx(t)
                    )));
                }
            }
            entries.push(ChildEntry::RepeatOmega(first));
        }
        let folded = Arc::new(TreeSchema::Node(entries));
        if let Some(k) = &self.key {
            memo.insert(k.clone(), folded.clone());
        }
        Ok(folded)
    }

    fn fold_parameterized(
        &self,
        lambda: &Ordinal,
        budget: u64,
        idx: &dyn Fn(u64) -> u64,
        memo: &mut HashMap<String, Arc<TreeSchema>>,
    ) -> Result<ChildEntry> {
        let window = budget.max(2);
        let mut folded = Vec::new();
        for t in 0..=window {
            folded.push(self.fold_child(idx(t), budget, memo)?);
        }
        let ranks: Vec<Ordinal> = folded.iter().map(|s| s.limsup_rank()).collect();
        let climbing = ranks.windows(2).all(|w| w[0] < w[1]) && ranks.iter().all(|r| r < lambda);
        if climbing && lambda.is_limit() {
            return Ok(ChildEntry::Family(FamilyGen::WitnessFamily(lambda.clone())));
        }
        let tail = ranks.len() / 2;
        let settled = ranks.windows(2).all(|w| w[0] <= w[1]) && ranks[tail..].iter().all(|r| *r == ranks[tail]);
        if settled {
            return Ok(ChildEntry::RepeatOmega(folded[window as usize].clone()));
        }
        Err(Error::Verification(format!(
            "parameterized children starting at index {} neither settle nor climb (ranks {})",
            idx(0),
            ranks.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(", ")
        )))
    }

    fn fold_child(&self, n: u64, budget: u64, memo: &mut HashMap<String, Arc<TreeSchema>>) -> Result<Arc<TreeSchema>> {
        match self.child(n)? {
            LazyChild::Schema(s) => Ok(Arc::new(s)),
            LazyChild::Lazy(t) => t.fold_memo(budget, memo),
        }
    }
}

/// Rank of a lazy tree computed through its folded schema.
pub fn lazy_rank_under_periodicity(t: &LazyTree, depth_budget: u64) -> Result<Ordinal> {
    Ok(t.fold(depth_budget)?.limsup_rank())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alternating(period: u64) -> LazyTree {
        LazyTree::new(
            |n| Ok(LazyChild::Schema(if n % 2 == 0 { TreeSchema::leaf() } else { TreeSchema::Empty })),
            Some(Periodicity { bound: 0, period, parameterized: vec![] }),
        )
    }

    #[test]
    fn alternating_leaves() {
        assert_eq!(lazy_rank_under_periodicity(&alternating(2), 4).unwrap(), Ordinal::nat(2));
    }

    #[test]
    fn violated_declaration() {
        let err = lazy_rank_under_periodicity(&alternating(1), 4).unwrap_err();
        assert!(matches!(err, Error::Verification(_)));
    }

    #[test]
    fn missing_declaration() {
        let t = LazyTree::new(|_| Ok(LazyChild::Schema(TreeSchema::Empty)), None);
        assert!(matches!(t.fold(2), Err(Error::Verification(_))));
    }

    #[test]
    fn nested_lazy_children() {
        let inner = alternating(2);
        let outer = LazyTree::new(
            move |n| Ok(if n < 3 { LazyChild::Schema(TreeSchema::leaf()) } else { LazyChild::Lazy(inner.clone()) }),
            Some(Periodicity { bound: 3, period: 1, parameterized: vec![] }),
        );
        assert_eq!(lazy_rank_under_periodicity(&outer, 3).unwrap(), Ordinal::nat(3));
    }

    #[test]
    fn climbing_family() {
        let t = LazyTree::new(
            |n| Ok(LazyChild::Schema(crate::treeschema::rank_witness(&Ordinal::nat(n + 1))?)),
            Some(Periodicity { bound: 0, period: 1, parameterized: vec![(0, Ordinal::omega())] }),
        );
        assert_eq!(lazy_rank_under_periodicity(&t, 3).unwrap(), "w+1".parse().unwrap());
    }
}
