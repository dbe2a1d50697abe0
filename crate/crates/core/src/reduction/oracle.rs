//! Witness oracles: finite stand-ins for the complete sets `∅_(2α)`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde_json::Value;

use crate::error::{parse_err, Result};
use crate::ordinal::Ordinal;

/// An index whose membership an oracle answers. Derived facts remember how
/// they were produced so their answers follow from the parent's.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum FactId {
    Base(u64),
    /// `g_s(parent, z, y)`, one level below its successor-level parent.
    Witness { parent: Arc<FactId>, z: u64, y: u64 },
    /// `g_l(parent, lambda, n)` at level `fundamental(lambda, n)`.
    Split { parent: Arc<FactId>, lambda: Ordinal, n: u64 },
}

impl fmt::Display for FactId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactId::Base(x) => write!(f, "{x}"),
            FactId::Witness { parent, z, y } => write!(f, "gs({parent},{z},{y})"),
            FactId::Split { parent, lambda, n } => write!(f, "gl({parent},{lambda},{n})"),
        }
    }
}

/// Answer to "is the fact in `∅_(2α)`".
///
/// `In(c)` carries the evidence: at a successor level witnesses exist
/// exactly for `z <= c`; at a limit level `c` is the least `n` whose split
/// fact is in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FactStatus {
    NotIn,
    In(u64),
}

impl FactStatus {
    pub fn is_in(self) -> bool {
        matches!(self, FactStatus::In(_))
    }

    /// Witnesses exist at `z`.
    pub fn has_witness_at(self, z: u64) -> bool {
        match self {
            FactStatus::NotIn => true,
            FactStatus::In(c) => z <= c,
        }
    }

    pub fn cutoff(self) -> Option<u64> {
        match self {
            FactStatus::NotIn => None,
            FactStatus::In(c) => Some(c),
        }
    }
}

impl fmt::Display for FactStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactStatus::NotIn => write!(f, "out"),
            FactStatus::In(c) => write!(f, "in{c}"),
        }
    }
}

/// `g0` built from a total binary predicate `R(v, w)`: `g0(z, y) = 1` iff
/// `y > z`, every `v < z` has some `w < y` with `R(v, w)`, and `y` is least
/// such.
pub fn g0_from_pi2(r: impl Fn(u64, u64) -> bool) -> impl Fn(u64, u64) -> bool {
    move |z, y| {
        let covered = |y: u64| (0..z).all(|v| (0..y).any(|w| r(v, w)));
        y > z && covered(y) && (y == z + 1 || !covered(y - 1))
    }
}

/// The interface the reduction builder consumes.
///
/// Implementations supply answers for base facts; answers for derived facts
/// follow the unique-witness contract: `g_s(x, z, y)` is out of the lower
/// set only for `y = z + 1` and only while `x` still has witnesses at `z`.
pub trait WitnessOracle: Send + Sync {
    fn base_status(&self, x: u64, alpha: &Ordinal) -> FactStatus;

    /// Indices past this bound all answer with the default.
    fn support_bound(&self) -> u64;

    fn witness_status(&self, parent: FactStatus, z: u64, y: u64) -> FactStatus {
        if y == z + 1 && parent.has_witness_at(z) {
            FactStatus::NotIn
        } else {
            FactStatus::In(0)
        }
    }

    fn split_status(&self, parent: FactStatus, n: u64) -> FactStatus {
        match parent {
            FactStatus::In(c) if n >= c => FactStatus::In(0),
            _ => FactStatus::NotIn,
        }
    }

    /// Answer for `fact` at level `alpha`, meaning membership in `∅_(2α)`.
    fn status(&self, fact: &FactId, alpha: &Ordinal) -> Result<FactStatus> {
        Ok(match fact {
            FactId::Base(x) => self.base_status(*x, alpha),
            FactId::Witness { parent, z, y } => self.witness_status(self.status(parent, &alpha.succ())?, *z, *y),
            FactId::Split { parent, lambda, n } => self.split_status(self.status(parent, lambda)?, *n),
        })
    }

    /// `g_0(x, z, y) = 1` for a level-1 fact, through [`g0_from_pi2`].
    fn g0(&self, x: &FactId, z: u64, y: u64) -> Result<bool> {
        let s = self.status(x, &Ordinal::one())?;
        Ok(g0_of_status(s, z, y))
    }

    /// `g_s(x, z, y) ∈ ∅_(2β)` for `x` at level `β + 1`.
    fn gs_in(&self, x: &FactId, z: u64, y: u64, beta: &Ordinal) -> Result<bool> {
        let w = FactId::Witness { parent: Arc::new(x.clone()), z, y };
        Ok(self.status(&w, beta)?.is_in())
    }

    /// `g_l(x, λ, n) ∈ ∅_(2β_n)`.
    fn gl_in(&self, x: &FactId, lambda: &Ordinal, n: u64) -> Result<bool> {
        let s = FactId::Split { parent: Arc::new(x.clone()), lambda: lambda.clone(), n };
        Ok(self.status(&s, &lambda.fundamental(n)?)?.is_in())
    }

    /// `x ∈ ∅_(2α)`.
    fn membership(&self, x: &FactId, alpha: &Ordinal) -> Result<bool> {
        Ok(self.status(x, alpha)?.is_in())
    }
}

/// `g0` for a level-1 fact with the given status: the `Π_2` matrix is
/// `R(v, w) ⟺ v < c` for `In(c)` and true for `NotIn`.
pub fn g0_of_status(s: FactStatus, z: u64, y: u64) -> bool {
    g0_from_pi2(|v, _| match s {
        FactStatus::NotIn => true,
        FactStatus::In(c) => v < c,
    })(z, y)
}

/// Finite truth tables per level, with a default past `support_bound`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleStub {
    pub support_bound: u64,
    pub default: FactStatus,
    pub levels: BTreeMap<Ordinal, BTreeMap<u64, FactStatus>>,
}

impl OracleStub {
    pub fn new(support_bound: u64, default: FactStatus) -> Self {
        OracleStub { support_bound, default, levels: BTreeMap::new() }
    }

    pub fn with(mut self, alpha: Ordinal, x: u64, status: FactStatus) -> Self {
        self.levels.entry(alpha).or_default().insert(x, status);
        self
    }

    /// Parse `{"support_bound": N, "default": A, "levels": {"α": {"x": A}}}`
    /// where an answer `A` is `false` (not in), `true` (in, cutoff 0) or a
    /// cutoff `c` (in).
    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| crate::Error::Parse(format!("stub file: {e}")))?;
        let obj = v.as_object().ok_or_else(|| crate::Error::Parse("stub file must be a JSON object".into()))?;
        let support_bound = obj
            .get("support_bound")
            .and_then(Value::as_u64)
            .ok_or_else(|| crate::Error::Parse("stub file needs a natural `support_bound`".into()))?;
        let default = match obj.get("default") {
            Some(a) => answer(a)?,
            None => FactStatus::NotIn,
        };
        let mut stub = OracleStub::new(support_bound, default);
        if let Some(levels) = obj.get("levels") {
            let levels = levels.as_object().ok_or_else(|| crate::Error::Parse("`levels` must be an object".into()))?;
            for (alpha, table) in levels {
                let alpha: Ordinal = alpha.parse()?;
                let table = table.as_object().ok_or_else(|| crate::Error::Parse(format!("level {alpha} must map indices to answers")))?;
                for (x, a) in table {
                    let x: u64 = x.parse().map_err(|_| crate::Error::Parse(format!("bad index {x:?}")))?;
                    stub = stub.with(alpha.clone(), x, answer(a)?);
                }
            }
        }
        Ok(stub)
    }

    pub fn to_json(&self) -> Value {
        let enc = |s: &FactStatus| match s {
            FactStatus::NotIn => Value::Bool(false),
            FactStatus::In(0) => Value::Bool(true),
            FactStatus::In(c) => Value::from(*c),
        };
        let levels: serde_json::Map<String, Value> = self
            .levels
            .iter()
            .map(|(a, t)| (a.to_string(), Value::Object(t.iter().map(|(x, s)| (x.to_string(), enc(s))).collect())))
            .collect();
        serde_json::json!({"support_bound": self.support_bound, "default": enc(&self.default), "levels": levels})
    }
}

fn answer(v: &Value) -> Result<FactStatus> {
    match v {
        Value::Bool(false) => Ok(FactStatus::NotIn),
        Value::Bool(true) => Ok(FactStatus::In(0)),
        Value::Number(n) => n.as_u64().map(FactStatus::In).ok_or_else(|| crate::Error::Parse(format!("bad cutoff {n}"))),
        other => parse_err(format!("answer must be a bool or a natural cutoff, got {other}")),
    }
}

impl WitnessOracle for OracleStub {
    fn base_status(&self, x: u64, alpha: &Ordinal) -> FactStatus {
        if x > self.support_bound {
            return self.default;
        }
        self.levels.get(alpha).and_then(|t| t.get(&x)).copied().unwrap_or(self.default)
    }

    fn support_bound(&self) -> u64 {
        self.support_bound
    }
}

/// Check unique witnesses, stable evidence and `y > z` for fact `x` at the
/// successor level `alpha`, over `z, y <= range`.
pub fn check_contract(oracle: &dyn WitnessOracle, x: &FactId, alpha: &Ordinal, range: u64) -> std::result::Result<(), String> {
    let beta = alpha.pred().map_err(|e| e.to_string())?;
    let witness = |z: u64, y: u64| -> std::result::Result<bool, String> {
        if beta.is_zero() {
            oracle.g0(x, z, y).map_err(|e| e.to_string())
        } else {
            oracle.gs_in(x, z, y, &beta).map(|i| !i).map_err(|e| e.to_string())
        }
    };
    let mut dead_at = None;
    for z in 0..=range {
        let ws: Vec<u64> = (0..=range + 1).filter_map(|y| witness(z, y).map(|w| w.then_some(y)).transpose()).collect::<std::result::Result<_, _>>()?;
        if ws.len() > 1 {
            return Err(format!("fact {x}: several witnesses {ws:?} at z = {z}"));
        }
        if let Some(&y) = ws.first() {
            if y <= z {
                return Err(format!("fact {x}: witness {y} not above z = {z}"));
            }
            if let Some(d) = dead_at {
                return Err(format!("fact {x}: witness at z = {z} after none at z = {d}"));
            }
        } else if dead_at.is_none() {
            dead_at = Some(z);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g0_examples() {
        let g = g0_from_pi2(|_, _| true);
        assert!(g(3, 4));
        assert!(!g(3, 5) && !g(3, 3));
        assert!(g(0, 1));
        let dead = g0_from_pi2(|v, _| v != 2);
        assert!(dead(2, 3));
        assert!((0..20).all(|y| !dead(3, y) && !dead(7, y)));
    }

    #[test]
    fn stub_round_trip_and_defaults() {
        let text = r#"{"support_bound": 8, "default": false, "levels": {"1": {"3": true, "4": 2}, "w+1": {"0": true}}}"#;
        let s = OracleStub::from_json(text).unwrap();
        assert_eq!(s.base_status(3, &Ordinal::one()), FactStatus::In(0));
        assert_eq!(s.base_status(4, &Ordinal::one()), FactStatus::In(2));
        assert_eq!(s.base_status(5, &Ordinal::one()), FactStatus::NotIn);
        assert_eq!(s.base_status(0, &"w+1".parse().unwrap()), FactStatus::In(0));
        assert_eq!(OracleStub::from_json(&s.to_json().to_string()).unwrap(), s);
        assert!(OracleStub::from_json(r#"{"default": false}"#).is_err());
        assert!(OracleStub::from_json(r#"{"support_bound": 1, "levels": {"x": {}}}"#).is_err());
    }

    #[test]
    fn stubs_satisfy_the_contract() {
        let s = OracleStub::new(8, FactStatus::NotIn).with(Ordinal::nat(2), 1, FactStatus::In(3)).with(Ordinal::one(), 2, FactStatus::In(1));
        for alpha in [Ordinal::one(), Ordinal::nat(2), Ordinal::nat(3)] {
            for x in 0..=9 {
                check_contract(&s, &FactId::Base(x), &alpha, 10).unwrap();
            }
        }
        let w = FactId::Witness { parent: Arc::new(FactId::Base(1)), z: 2, y: 3 };
        assert!(!s.gs_in(&FactId::Base(1), 2, 3, &Ordinal::one()).unwrap());
        assert!(s.gs_in(&FactId::Base(1), 4, 5, &Ordinal::one()).unwrap());
        assert_eq!(s.status(&w, &Ordinal::one()).unwrap(), FactStatus::NotIn);
    }

    #[test]
    fn split_answers() {
        let s = OracleStub::new(4, FactStatus::NotIn).with(Ordinal::omega(), 0, FactStatus::In(2));
        let w = Ordinal::omega();
        assert!(!s.gl_in(&FactId::Base(0), &w, 1).unwrap());
        assert!(s.gl_in(&FactId::Base(0), &w, 2).unwrap());
        assert!(!s.gl_in(&FactId::Base(1), &w, 5).unwrap());
    }
}
