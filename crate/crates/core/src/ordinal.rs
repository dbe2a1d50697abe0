//! Ordinals below epsilon-zero in Cantor normal form.
//!
//! An ordinal is stored as its list of terms `w^e * c` with strictly
//! decreasing exponents and nonzero coefficients. With that invariant the
//! derived lexicographic ordering on the term list is the ordinal ordering.

use std::fmt;
use std::str::FromStr;

use crate::error::{domain, parse_err, Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Ordinal {
    terms: Vec<(Ordinal, u64)>,
}

impl Ordinal {
    pub fn zero() -> Self {
        Ordinal { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Ordinal::nat(1)
    }

    pub fn nat(n: u64) -> Self {
        if n == 0 {
            Ordinal::zero()
        } else {
            Ordinal { terms: vec![(Ordinal::zero(), n)] }
        }
    }

    pub fn omega() -> Self {
        Ordinal::omega_pow(Ordinal::one(), 1)
    }

    /// `w^e * c`.
    pub fn omega_pow(e: Ordinal, c: u64) -> Self {
        if c == 0 {
            return Ordinal::zero();
        }
        Ordinal { terms: vec![(e, c)] }
    }

    pub fn terms(&self) -> &[(Ordinal, u64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_successor(&self) -> bool {
        matches!(self.terms.last(), Some((e, _)) if e.is_zero())
    }

    pub fn is_limit(&self) -> bool {
        !self.is_zero() && !self.is_successor()
    }

    pub fn is_finite(&self) -> bool {
        self.terms.iter().all(|(e, _)| e.is_zero())
    }

    pub fn as_nat(&self) -> Option<u64> {
        match self.terms.as_slice() {
            [] => Some(0),
            [(e, c)] if e.is_zero() => Some(*c),
            _ => None,
        }
    }

    pub fn succ(&self) -> Ordinal {
        self.add(&Ordinal::one())
    }

    /// The predecessor of a successor ordinal.
    pub fn pred(&self) -> Result<Ordinal> {
        if !self.is_successor() {
            return domain(format!("{self} has no predecessor"));
        }
        let mut terms = self.terms.clone();
        let last = terms.last_mut().expect("successor has a term");
        if last.1 == 1 {
            terms.pop();
        } else {
            last.1 -= 1;
        }
        Ok(Ordinal { terms })
    }

    /// Ordinal addition, `self + other`.
    pub fn add(&self, other: &Ordinal) -> Ordinal {
        let Some((lead, lead_c)) = other.terms.first() else {
            return self.clone();
        };
        let mut terms: Vec<(Ordinal, u64)> =
            self.terms.iter().take_while(|(e, _)| e > lead).cloned().collect();
        let merged = self.terms.iter().find(|(e, _)| e == lead).map_or(0, |(_, c)| *c);
        terms.push((lead.clone(), merged + lead_c));
        terms.extend(other.terms[1..].iter().cloned());
        Ordinal { terms }
    }

    /// `a + a + 1`, the level of the complete set one step above `a` in the
    /// doubled hierarchy.
    pub fn double_plus_one(&self) -> Ordinal {
        self.add(self).succ()
    }

    /// The `n`-th term of the fundamental sequence of a limit ordinal.
    ///
    /// Every term is a successor ordinal and the sequence is strictly
    /// increasing with supremum `self`.
    pub fn fundamental(&self, n: u64) -> Result<Ordinal> {
        if !self.is_limit() {
            return domain(format!("{self} is not a limit ordinal"));
        }
        let mut prefix = self.terms.clone();
        let (e, c) = prefix.pop().expect("limit has a term");
        if c > 1 {
            prefix.push((e.clone(), c - 1));
        }
        let prefix = Ordinal { terms: prefix };
        let tail = if e.is_successor() {
            let e_pred = e.pred()?;
            if e_pred.is_zero() {
                Ordinal::nat(n + 1)
            } else {
                Ordinal::omega_pow(e_pred, n + 1).succ()
            }
        } else {
            Ordinal::omega_pow(e.fundamental(n)?, 1).succ()
        };
        Ok(prefix.add(&tail))
    }
}

impl From<u64> for Ordinal {
    fn from(n: u64) -> Self {
        Ordinal::nat(n)
    }
}

impl fmt::Display for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, "+")?;
            }
            if e.is_zero() {
                write!(f, "{c}")?;
                continue;
            }
            match e.as_nat() {
                Some(1) => write!(f, "w")?,
                Some(k) => write!(f, "w^{k}")?,
                None => write!(f, "w^({e})")?,
            }
            if *c > 1 {
                write!(f, "*{c}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for Ordinal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let chars: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut p = Parser { chars, pos: 0 };
        let o = p.expr()?;
        if p.pos != p.chars.len() {
            return parse_err(format!("unexpected '{}' in ordinal {s:?}", p.chars[p.pos]));
        }
        Ok(o)
    }
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Ordinal> {
        let mut acc = self.term()?;
        while self.eat('+') {
            acc = acc.add(&self.term()?);
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Ordinal> {
        match self.peek() {
            Some('w') | Some('ω') => {
                self.pos += 1;
                let exp = if self.eat('^') { self.exponent()? } else { Ordinal::one() };
                let c = if self.eat('*') { self.nat()? } else { 1 };
                Ok(Ordinal::omega_pow(exp, c))
            }
            Some(d) if d.is_ascii_digit() => Ok(Ordinal::nat(self.nat()?)),
            Some(other) => parse_err(format!("unexpected '{other}' in ordinal")),
            None => parse_err("unexpected end of ordinal"),
        }
    }

    fn exponent(&mut self) -> Result<Ordinal> {
        if self.eat('(') {
            let e = self.expr()?;
            if !self.eat(')') {
                return parse_err("missing ')' in ordinal exponent");
            }
            return Ok(e);
        }
        match self.peek() {
            Some('w') | Some('ω') => {
                self.pos += 1;
                Ok(Ordinal::omega())
            }
            _ => Ok(Ordinal::nat(self.nat()?)),
        }
    }

    fn nat(&mut self) -> Result<u64> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return parse_err("expected a natural number");
        }
        let digits: String = self.chars[start..self.pos].iter().collect();
        digits.parse().map_err(|_| Error::Parse(format!("natural number {digits} out of range")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn o(s: &str) -> Ordinal {
        s.parse().unwrap()
    }

    #[test]
    fn fundamental_examples() {
        assert_eq!(o("w").fundamental(3).unwrap(), o("4"));
        assert_eq!(o("w^2").fundamental(1).unwrap(), o("w*2+1"));
        assert_eq!(o("w*2").fundamental(0).unwrap(), o("w+1"));
        assert_eq!(o("w^w").fundamental(2).unwrap(), o("w^3+1"));
        assert!(o("w+1").fundamental(0).is_err());
        assert!(Ordinal::zero().fundamental(0).is_err());
    }

    #[test]
    fn double_plus_one_of_successor() {
        assert_eq!(o("w+1").double_plus_one(), o("w*2+2"));
        assert_eq!(o("3").double_plus_one(), o("7"));
    }

    #[test]
    fn addition_absorbs_smaller_terms() {
        assert_eq!(o("1").add(&o("w")), o("w"));
        assert_eq!(o("w+3").add(&o("w^2")), o("w^2"));
        assert_eq!(o("w^2+w").add(&o("w*2+1")), o("w^2+w*3+1"));
    }

    #[test]
    fn print_parse() {
        for s in ["0", "7", "w", "w+1", "w*2+3", "w^2", "w^(w+1)*2+w", "w^(w^2)"] {
            assert_eq!(o(s).to_string(), s);
        }
        assert_eq!(o("w^w").to_string(), "w^(w)");
        assert!("w^".parse::<Ordinal>().is_err());
        assert!("x".parse::<Ordinal>().is_err());
    }

    #[test]
    fn classification() {
        assert!(o("w*2+1").is_successor());
        assert!(o("w^2").is_limit());
        assert!(!Ordinal::zero().is_limit());
        assert_eq!(o("w+2").pred().unwrap(), o("w+1"));
    }
}
