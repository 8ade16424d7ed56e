//! Existential formulas as disjunctions of embedding targets, their
//! satisfaction on fragments and catalog structures, inclusion of
//! existential theories, and the family classifier.

use crate::catalog::{AgeOracle, CatalogError, CatalogStructure, Family, Kind};
use crate::structures::{decode_fragment, embed_finite, encode_fragment, DiagramPrefix, FiniteFragment, StructureError};
use serde::{Serialize, Serializer};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogicError {
    #[error("no embedding oracle for {0}")]
    Unsupported(String),
    #[error("cannot parse formula: {0}")]
    Parse(String),
    #[error("formula has no disjuncts")]
    Empty,
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

/// Default bound on the size of embedding targets searched as witnesses.
pub const WITNESS_BOUND: usize = 8;

/// "Some disjunct embeds here": a finite disjunction of finite targets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormulaWitness {
    disjuncts: Vec<FiniteFragment>,
}

impl FormulaWitness {
    pub fn new(disjuncts: Vec<FiniteFragment>) -> Result<Self, LogicError> {
        if disjuncts.is_empty() {
            return Err(LogicError::Empty);
        }
        Ok(FormulaWitness { disjuncts })
    }

    pub fn embeds(target: FiniteFragment) -> Self {
        FormulaWitness { disjuncts: vec![target] }
    }

    /// `embeds(x)` for a finite catalog structure `x`.
    pub fn embeds_structure(x: &CatalogStructure) -> Result<Self, LogicError> {
        if !x.is_finite() {
            return Err(LogicError::Unsupported(format!("infinite target {x}")));
        }
        Ok(FormulaWitness::embeds(x.canonical(usize::MAX)))
    }

    pub fn disjuncts(&self) -> &[FiniteFragment] {
        &self.disjuncts
    }

    pub fn or(mut self, other: FormulaWitness) -> Self {
        self.disjuncts.extend(other.disjuncts);
        self
    }

    /// Parses `embeds(chain(4)) | embeds(cycle(3))`. A target is a finite
    /// catalog structure or `diagram(n, bits)`.
    pub fn parse(text: &str, kind: Kind) -> Result<Self, LogicError> {
        let disjuncts = text
            .split('|')
            .map(|part| {
                let inner = part
                    .trim()
                    .strip_prefix("embeds(")
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| LogicError::Parse(part.trim().to_string()))?;
                parse_target(inner.trim(), kind)
            })
            .collect::<Result<Vec<_>, _>>()?;
        FormulaWitness::new(disjuncts)
    }
}

fn parse_target(text: &str, kind: Kind) -> Result<FiniteFragment, LogicError> {
    if let Some(body) = text.strip_prefix("diagram(").and_then(|r| r.strip_suffix(')')) {
        let bits = body.split(',').nth(1).ok_or_else(|| LogicError::Parse(text.to_string()))?;
        let prefix: DiagramPrefix = bits.trim().parse()?;
        return Ok(decode_fragment(&prefix, &kind.signature())?);
    }
    let x: CatalogStructure = text.parse()?;
    if x.declared_kind()?.is_some_and(|k| k != kind) {
        return Err(LogicError::Parse(format!("{text} is not of the requested kind")));
    }
    if !x.is_finite() {
        return Err(LogicError::Unsupported(format!("infinite target {x}")));
    }
    let f = x.canonical(usize::MAX);
    Ok(if x.declared_kind()?.is_none() { x_as_kind(&x, kind) } else { f })
}

fn x_as_kind(x: &CatalogStructure, kind: Kind) -> FiniteFragment {
    let n = x.card().unwrap_or(0);
    let mut f = FiniteFragment::with_size(kind.signature(), n);
    if kind == Kind::Order {
        for a in 0..n {
            f.insert(0, vec![a, a]).expect("in domain");
        }
    }
    f
}

/// A catalog name for small targets, else the `diagram(n, bits)` form.
pub fn describe_target(f: &FiniteFragment) -> String {
    let Some(kind) = Kind::of_signature(f.signature()) else {
        return format!("diagram({}, {})", f.size(), encode_fragment(f));
    };
    let n = f.size();
    let comparable = CatalogStructure::comparable_part(f);
    let core = f.induced(&comparable);
    let loose = n - comparable.len();
    let mut names: Vec<CatalogStructure> = Vec::new();
    let m = core.size();
    match kind {
        Kind::Order if m >= 2 => {
            names.push(CatalogStructure::Chain(m));
            if m.is_multiple_of(2) && m >= 4 {
                names.push(CatalogStructure::PosetP(m / 2 - 1));
            }
        }
        Kind::Graph if m >= 2 => {
            names.push(CatalogStructure::FiniteRay(m));
            if m >= 3 {
                names.push(CatalogStructure::Cycle(m));
            }
        }
        _ => {}
    }
    let is_same = |c: &CatalogStructure| {
        let g = c.canonical(usize::MAX);
        g.size() == m && embed_finite(&core, &g).unwrap_or(false)
    };
    let core_name = if m == 0 { None } else { names.into_iter().find(|c| c.validate().is_ok() && is_same(c)) };
    match (core_name, m, loose) {
        (_, 0, k) => format!("iso({k})"),
        (Some(c), _, 0) => c.to_string(),
        (Some(c), _, k) => format!("du({c}, iso({k}))"),
        (None, _, _) => format!("diagram({}, {})", f.size(), encode_fragment(f)),
    }
}

impl fmt::Display for FormulaWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.disjuncts.iter().map(|d| format!("embeds({})", describe_target(d))).collect();
        f.write_str(&parts.join(" | "))
    }
}

impl Serialize for FormulaWitness {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

pub fn sat_fragment(phi: &FormulaWitness, f: &FiniteFragment) -> Result<bool, LogicError> {
    for d in &phi.disjuncts {
        if embed_finite(d, f)? {
            return Ok(true);
        }
    }
    Ok(false)
}

pub fn sat_catalog(phi: &FormulaWitness, a: &CatalogStructure) -> Result<bool, LogicError> {
    a.validate()?;
    let mut oracle = AgeOracle::new(a.clone());
    for d in &phi.disjuncts {
        if *d.signature() != a.signature() {
            return Err(LogicError::Unsupported(format!("{a} against a target of another signature")));
        }
        if oracle.contains(d) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Size of canonical restriction of `a` beyond which no new obstruction to
/// embedding into `b` can appear: every chain, path, comb level and cycle
/// length up to two past the largest parameter is present, with room for
/// the interleaving of `tilde` and `du`.
pub fn age_threshold(a: &CatalogStructure, b: &CatalogStructure) -> usize {
    let p = a.max_parameter().max(b.max_parameter()) + 2;
    let span = (p * (p + 1) / 2).max(2 * p + 4);
    (1usize << a.depth()) * span + 8
}

/// Inclusion of existential theories, decided as inclusion of ages.
pub fn sigma1_leq(a: &CatalogStructure, b: &CatalogStructure) -> Result<bool, LogicError> {
    a.validate()?;
    b.validate()?;
    if a.signature() != b.signature() {
        return Err(LogicError::Unsupported(format!("{a} and {b} have different signatures")));
    }
    let mut oracle = AgeOracle::new(b.clone());
    if let Some(c) = a.card() {
        return Ok(oracle.contains(&a.canonical(c)));
    }
    let limit = age_threshold(a, b);
    let mut n = 8;
    loop {
        let n_eff = n.min(limit);
        if !oracle.contains(&a.canonical(n_eff)) {
            return Ok(false);
        }
        if n_eff == limit {
            return Ok(true);
        }
        n *= 2;
    }
}

/// A substructure of `a` that embeds into none of `others`, minimal under
/// single-element deletion. `None` if every canonical restriction up to the
/// threshold embeds into one of them.
pub fn separating_target(a: &CatalogStructure, others: &[CatalogStructure]) -> Option<FiniteFragment> {
    let mut oracles: Vec<AgeOracle> = others.iter().cloned().map(AgeOracle::new).collect();
    let mut escapes = |f: &FiniteFragment| oracles.iter_mut().all(|o| !o.contains(f));
    let limit = others.iter().map(|b| age_threshold(a, b)).max().unwrap_or(1);
    let limit = a.card().map_or(limit, |c| c.min(limit));
    let mut n = 1;
    let start = loop {
        let f = a.canonical(n.min(limit));
        if escapes(&f) {
            break f;
        }
        if n >= limit {
            return None;
        }
        n *= 2;
    };
    let mut keep: Vec<usize> = (0..start.size()).collect();
    let mut i = 0;
    while i < keep.len() {
        let mut trial = keep.clone();
        trial.remove(i);
        if escapes(&start.induced(&trial)) {
            keep = trial;
        } else {
            i += 1;
        }
    }
    Some(start.induced(&keep))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Level {
    StrongAntichain,
    Antichain,
    PartialOrder,
    NotPartialOrder,
    /// Antichain, but a separating witness exceeded the size bound.
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Solidity {
    Solid,
    NotSolid,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct Sigma1Classification {
    pub family: String,
    pub level: Level,
    /// Only meaningful when `level` is not `NotPartialOrder`.
    pub solid: Solidity,
    /// `leq[i][j]`: the theory of member `i` is included in that of `j`.
    pub leq: Vec<Vec<bool>>,
    /// `(i, j)`: true in member `i`, false in member `j`.
    pub witnesses: BTreeMap<String, FormulaWitness>,
    pub strong_witnesses: BTreeMap<usize, FormulaWitness>,
    pub solid_witnesses: BTreeMap<usize, FormulaWitness>,
    pub notes: Vec<String>,
}

impl Sigma1Classification {
    pub fn pair_witness(&self, i: usize, j: usize) -> Option<&FormulaWitness> {
        self.witnesses.get(&pair_key(i, j))
    }

    pub fn is_partial_order(&self) -> bool {
        self.level != Level::NotPartialOrder
    }

    pub fn is_antichain(&self) -> bool {
        matches!(self.level, Level::StrongAntichain | Level::Antichain | Level::Inconclusive)
    }

    /// Pairwise witnesses as a dense map, for learners and operators.
    pub fn pairwise(&self) -> BTreeMap<(usize, usize), FormulaWitness> {
        let n = self.leq.len();
        let mut out = BTreeMap::new();
        for i in 0..n {
            for j in 0..n {
                if let Some(w) = self.pair_witness(i, j) {
                    out.insert((i, j), w.clone());
                }
            }
        }
        out
    }
}

fn pair_key(i: usize, j: usize) -> String {
    format!("{i},{j}")
}

pub fn classify_family(family: &Family) -> Result<Sigma1Classification, LogicError> {
    classify_family_bounded(family, WITNESS_BOUND)
}

pub fn classify_family_bounded(family: &Family, bound: usize) -> Result<Sigma1Classification, LogicError> {
    family.validate()?;
    let k = &family.members;
    let n = k.len();
    let mut leq = vec![vec![true; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                leq[i][j] = sigma1_leq(&k[i], &k[j])?;
            }
        }
    }
    let mut notes = Vec::new();
    let mut witnesses = BTreeMap::new();
    let mut witness_gap = false;
    for i in 0..n {
        for j in 0..n {
            if i == j || leq[i][j] {
                continue;
            }
            match separating_target(&k[i], std::slice::from_ref(&k[j])) {
                Some(f) if f.size() <= bound => {
                    witnesses.insert(pair_key(i, j), FormulaWitness::embeds(f));
                }
                Some(f) => {
                    witness_gap = true;
                    notes.push(format!("pair ({i},{j}): smallest witness found has {} elements", f.size()));
                }
                None => notes.push(format!("pair ({i},{j}): no witness below the age threshold")),
            }
        }
    }
    let po = (0..n).all(|i| (0..n).all(|j| i == j || !(leq[i][j] && leq[j][i])));
    let antichain = po && (0..n).all(|i| (0..n).all(|j| i == j || !leq[i][j]));

    let mut strong_witnesses = BTreeMap::new();
    let mut level = if !po {
        Level::NotPartialOrder
    } else if !antichain {
        Level::PartialOrder
    } else {
        Level::StrongAntichain
    };
    if antichain {
        for i in 0..n {
            let others: Vec<_> = (0..n).filter(|&j| j != i).map(|j| k[j].clone()).collect();
            match separating_target(&k[i], &others) {
                Some(f) if f.size() <= bound => {
                    strong_witnesses.insert(i, FormulaWitness::embeds(f));
                }
                Some(f) => {
                    notes.push(format!("member {i}: strong witness needs {} elements", f.size()));
                    if level == Level::StrongAntichain {
                        level = Level::Inconclusive;
                    }
                }
                None => {
                    notes.push(format!("member {i}: no strong witness"));
                    level = Level::Antichain;
                }
            }
        }
    }
    if witness_gap && level == Level::StrongAntichain {
        level = Level::Inconclusive;
    }

    let mut solid_witnesses = BTreeMap::new();
    let mut solid = if po { Solidity::Solid } else { Solidity::NotSolid };
    if po {
        for i in 0..n {
            let cone: Vec<_> = (0..n).filter(|&j| j != i && leq[j][i]).map(|j| k[j].clone()).collect();
            match separating_target(&k[i], &cone) {
                Some(f) if f.size() <= bound => {
                    solid_witnesses.insert(i, FormulaWitness::embeds(f));
                }
                Some(f) => {
                    notes.push(format!("member {i}: solid witness needs {} elements", f.size()));
                    if solid == Solidity::Solid {
                        solid = Solidity::Inconclusive;
                    }
                }
                None => {
                    notes.push(format!("member {i}: no solid witness"));
                    solid = Solidity::NotSolid;
                }
            }
        }
    }

    let out = Sigma1Classification {
        family: family.name.clone(),
        level,
        solid,
        leq,
        witnesses,
        strong_witnesses,
        solid_witnesses,
        notes,
    };
    debug_assert!(out.level != Level::StrongAntichain || out.is_antichain());
    debug_assert!(!out.is_antichain() || out.is_partial_order());
    Ok(out)
}

/// Second-level comparability facts, declared per family and never computed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Sigma2Fact {
    pub family: String,
    pub antichain: bool,
    pub source: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Sigma2Metadata {
    pub facts: Vec<Sigma2Fact>,
}

impl Sigma2Metadata {
    pub fn declared() -> Self {
        let fact =
            |family: &str, antichain: bool, source: &str| Sigma2Fact { family: family.into(), antichain, source: source.into() };
        Sigma2Metadata {
            facts: vec![
                fact("omega_pair", true, "least and greatest element separate the two orders"),
                fact("fstar", true, "endpoint counters and chain growth separate every pair"),
                fact("omega_zeta", false, "omega's second-level theory is contained in zeta's"),
                fact("cyc_comp", true, "existential antichain, hence second-level antichain"),
                fact("tilde_chains_34", true, "finite family with existentially distinct members"),
            ],
        }
    }

    pub fn is_antichain(&self, family: &str) -> Option<bool> {
        self.facts.iter().find(|f| f.family == family).map(|f| f.antichain)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(s: &str) -> CatalogStructure {
        s.parse().unwrap()
    }

    #[test]
    fn witness_text_round_trip() {
        let w = FormulaWitness::parse("embeds(chain(4)) | embeds(chain(2))", Kind::Order).unwrap();
        assert_eq!(w.to_string(), "embeds(chain(4)) | embeds(chain(2))");
        let g = FormulaWitness::parse("embeds(cycle(3))", Kind::Graph).unwrap();
        assert_eq!(g.to_string(), "embeds(cycle(3))");
    }

    #[test]
    fn omega_and_its_reverse_share_a_theory() {
        assert!(sigma1_leq(&c("omega"), &c("omega_star")).unwrap());
        assert!(sigma1_leq(&c("omega_star"), &c("omega")).unwrap());
    }

    #[test]
    fn cycle_complements() {
        let c3 = FormulaWitness::embeds_structure(&c("cycle(3)")).unwrap();
        assert!(!sat_catalog(&c3, &c("cyc_comp(3)")).unwrap());
        assert!(sat_catalog(&c3, &c("cyc_comp(4)")).unwrap());
    }
}
