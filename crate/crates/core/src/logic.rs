//! Negation-free Boolean formulas and their expansion to disjunctive normal
//! form. Shared by the program reasoner and the component-model synthesizer.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Default cap on the number of conjuncts produced by [`expand_dnf`].
pub const DEFAULT_DNF_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula<L> {
    True,
    False,
    Lit(L),
    And(Vec<Formula<L>>),
    Or(Vec<Formula<L>>),
}

impl<L> Formula<L> {
    pub fn lit(l: L) -> Self {
        Formula::Lit(l)
    }

    /// Conjunction with constant folding and flattening.
    pub fn and(parts: impl IntoIterator<Item = Formula<L>>) -> Self {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::True => {}
                Formula::False => return Formula::False,
                Formula::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::True,
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    /// Disjunction with constant folding and flattening.
    pub fn or(parts: impl IntoIterator<Item = Formula<L>>) -> Self {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::False => {}
                Formula::True => return Formula::True,
                Formula::Or(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::False,
            1 => out.pop().unwrap(),
            _ => Formula::Or(out),
        }
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Formula::False)
    }

    /// Rebuilds the formula with every literal replaced by a sub-formula.
    pub fn try_map<M, E>(&self, f: &mut impl FnMut(&L) -> Result<Formula<M>, E>) -> Result<Formula<M>, E> {
        Ok(match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Lit(l) => f(l)?,
            Formula::And(parts) => {
                let mut mapped = Vec::with_capacity(parts.len());
                for p in parts {
                    let m = p.try_map(f)?;
                    if m.is_false() {
                        return Ok(Formula::False);
                    }
                    mapped.push(m);
                }
                Formula::and(mapped)
            }
            Formula::Or(parts) => Formula::or(
                parts
                    .iter()
                    .map(|p| p.try_map(f))
                    .collect::<Result<Vec<_>, E>>()?,
            ),
        })
    }

    /// Evaluates under a truth assignment for literals.
    pub fn eval(&self, truth: &impl Fn(&L) -> bool) -> bool {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Lit(l) => truth(l),
            Formula::And(parts) => parts.iter().all(|p| p.eval(truth)),
            Formula::Or(parts) => parts.iter().any(|p| p.eval(truth)),
        }
    }

    pub fn literals(&self) -> Vec<&L> {
        let mut out = Vec::new();
        self.collect_literals(&mut out);
        out
    }

    fn collect_literals<'a>(&'a self, out: &mut Vec<&'a L>) {
        match self {
            Formula::Lit(l) => out.push(l),
            Formula::And(ps) | Formula::Or(ps) => ps.iter().for_each(|p| p.collect_literals(out)),
            _ => {}
        }
    }
}

impl<L: fmt::Display> fmt::Display for Formula<L> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, ps: &[Formula<L>], op: &str| -> fmt::Result {
            f.write_str("(")?;
            for (i, p) in ps.iter().enumerate() {
                if i > 0 {
                    write!(f, " {op} ")?;
                }
                write!(f, "{p}")?;
            }
            f.write_str(")")
        };
        match self {
            Formula::True => f.write_str("TRUE"),
            Formula::False => f.write_str("FALSE"),
            Formula::Lit(l) => write!(f, "{l}"),
            Formula::And(ps) => join(f, ps, "∧"),
            Formula::Or(ps) => join(f, ps, "∨"),
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("DNF expansion exceeded {cap} conjuncts")]
pub struct DnfTooLarge {
    pub cap: usize,
}

/// Full disjunctive normal form: each conjunct is a set of literals, so
/// repeated literals collapse. Duplicate conjuncts are removed; no
/// absorption is performed.
pub fn expand_dnf<L: Ord + Clone>(f: &Formula<L>, cap: usize) -> Result<Vec<BTreeSet<L>>, DnfTooLarge> {
    let terms = expand(f, cap)?;
    Ok(terms.into_iter().collect())
}

fn expand<L: Ord + Clone>(f: &Formula<L>, cap: usize) -> Result<BTreeSet<BTreeSet<L>>, DnfTooLarge> {
    match f {
        Formula::True => Ok(BTreeSet::from([BTreeSet::new()])),
        Formula::False => Ok(BTreeSet::new()),
        Formula::Lit(l) => Ok(BTreeSet::from([BTreeSet::from([l.clone()])])),
        Formula::Or(parts) => {
            let mut acc = BTreeSet::new();
            for p in parts {
                acc.extend(expand(p, cap)?);
                if acc.len() > cap {
                    return Err(DnfTooLarge { cap });
                }
            }
            Ok(acc)
        }
        Formula::And(parts) => {
            let mut acc: BTreeSet<BTreeSet<L>> = BTreeSet::from([BTreeSet::new()]);
            for p in parts {
                let rhs = expand(p, cap)?;
                if acc.len().saturating_mul(rhs.len()) > cap.saturating_mul(4) {
                    return Err(DnfTooLarge { cap });
                }
                let mut next = BTreeSet::new();
                for a in &acc {
                    for b in &rhs {
                        let mut c = a.clone();
                        c.extend(b.iter().cloned());
                        next.insert(c);
                    }
                }
                if next.len() > cap {
                    return Err(DnfTooLarge { cap });
                }
                acc = next;
                if acc.is_empty() {
                    break;
                }
            }
            Ok(acc)
        }
    }
}

/// Plain set-inclusion minimization: drops any conjunct that is a strict
/// superset of another, then orders by (size, lexicographic).
pub fn minimize_sets<L: Ord + Clone>(sets: impl IntoIterator<Item = BTreeSet<L>>) -> Vec<BTreeSet<L>> {
    let mut all: Vec<BTreeSet<L>> = sets.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
    all.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    let mut kept: Vec<BTreeSet<L>> = Vec::new();
    for s in all {
        if !kept.iter().any(|k| k.is_subset(&s)) {
            kept.push(s);
        }
    }
    kept
}

/// All `k`-element subsets of `0..n`, in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
