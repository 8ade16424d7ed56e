//! Continuous reductions from copies of a family to equivalence relations on
//! sequences, and finite-prefix checks of those relations.
//!
//! An operator is fed `S↾s` (domain `0..=s`) and returns its output prefix
//! after stage `s`. Outputs only grow as the stream grows.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{CatalogError, CatalogStructure, Family, Presentation};
use crate::learners::{FinLearner, Hypothesis, Learner, LearnerError, OrderView};
use crate::logic::{classify_family, sat_catalog, sat_fragment, FormulaWitness, LogicError};
use crate::pairing::{pair, unpair, untriple};
use crate::structures::FiniteFragment;

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error("prefixes have different shapes")]
    ShapeMismatch,
    #[error("configuration rejected: {0}")]
    Config(String),
    #[error("unknown operator `{0}`")]
    Unknown(String),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Learner(#[from] Box<LearnerError>),
}

impl From<LearnerError> for ReductionError {
    fn from(e: LearnerError) -> Self {
        ReductionError::Learner(Box::new(e))
    }
}

/// Target equivalence relations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// Equality of natural numbers, each read off the first entry.
    EqNat,
    /// Equality of sequences.
    Id,
    /// Agreement from some point on.
    E0,
    /// Equal sets of values.
    ERange,
    /// Column by column agreement from some point on.
    E3,
    /// Equal sets of columns.
    ESet,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Relation::EqNat => "eq_nat",
            Relation::Id => "id",
            Relation::E0 => "e0",
            Relation::ERange => "e_range",
            Relation::E3 => "e3",
            Relation::ESet => "e_set",
        };
        f.write_str(s)
    }
}

impl FromStr for Relation {
    type Err = ReductionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "eq_nat" => Relation::EqNat,
            "id" => Relation::Id,
            "e0" => Relation::E0,
            "e_range" => Relation::ERange,
            "e3" => Relation::E3,
            "e_set" => Relation::ESet,
            _ => return Err(ReductionError::Unknown(s.into())),
        })
    }
}

impl Relation {
    pub fn columnar(self) -> bool {
        matches!(self, Relation::E3 | Relation::ESet)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputPrefix {
    Flat(Vec<u64>),
    /// Column `m` is the finite known part of the `m`-th column.
    Columnar(Vec<Vec<u64>>),
}

impl OutputPrefix {
    /// `self` is a prefix of `other`, columnwise for columnar outputs.
    pub fn is_prefix_of(&self, other: &OutputPrefix) -> bool {
        match (self, other) {
            (OutputPrefix::Flat(a), OutputPrefix::Flat(b)) => b.starts_with(a),
            (OutputPrefix::Columnar(a), OutputPrefix::Columnar(b)) => {
                a.len() <= b.len() && a.iter().zip(b).all(|(x, y)| y.starts_with(x))
            }
            _ => false,
        }
    }

    pub fn flat(&self) -> Option<&[u64]> {
        match self {
            OutputPrefix::Flat(v) => Some(v),
            OutputPrefix::Columnar(_) => None,
        }
    }

    pub fn columns(&self) -> Option<&[Vec<u64>]> {
        match self {
            OutputPrefix::Columnar(c) => Some(c),
            OutputPrefix::Flat(_) => None,
        }
    }

    /// Comma-separated rows, one per column, for inspection.
    pub fn to_csv(&self) -> String {
        let line = |v: &[u64]| v.iter().map(u64::to_string).collect::<Vec<_>>().join(",") + "\n";
        match self {
            OutputPrefix::Flat(v) => line(v),
            OutputPrefix::Columnar(c) => c.iter().map(|v| line(v)).collect(),
        }
    }
}

/// What a finite comparison found so far.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Evidence {
    /// Entries compared.
    pub compared: usize,
    pub mismatches: usize,
    pub last_mismatch: Option<usize>,
    /// Symmetric difference of the value sets.
    pub range_delta: Vec<u64>,
    /// Columns that differ somewhere (E3) or have no counterpart (E_set).
    pub columns: Vec<usize>,
    /// Columns whose last compared entries differ.
    pub open_columns: Vec<usize>,
}

impl Evidence {
    /// Length of the common stretch at the end where the prefixes agree.
    pub fn agreement_suffix(&self) -> usize {
        self.last_mismatch.map_or(self.compared, |m| self.compared - m - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum PrefixVerdict {
    ConsistentSoFar(Evidence),
    /// No extension can make the two equivalent; the payload is the
    /// position that proves it.
    DefinitelyDistinct(usize),
    EquivalentByRule,
}

impl PrefixVerdict {
    pub fn is_distinct(&self) -> bool {
        matches!(self, PrefixVerdict::DefinitelyDistinct(_))
    }
}

fn compare_flat(a: &[u64], b: &[u64]) -> Evidence {
    let compared = a.len().min(b.len());
    let diff: Vec<usize> = (0..compared).filter(|&k| a[k] != b[k]).collect();
    Evidence { compared, mismatches: diff.len(), last_mismatch: diff.last().copied(), ..Evidence::default() }
}

fn range_delta(a: &[u64], b: &[u64]) -> Vec<u64> {
    let (x, y): (BTreeSet<u64>, BTreeSet<u64>) = (a.iter().copied().collect(), b.iter().copied().collect());
    x.symmetric_difference(&y).copied().collect()
}

fn compatible(x: &[u64], y: &[u64]) -> bool {
    x.iter().zip(y).all(|(p, q)| p == q)
}

/// Compares two output prefixes under `rel`.
pub fn check_prefix(rel: Relation, a: &OutputPrefix, b: &OutputPrefix) -> Result<PrefixVerdict, ReductionError> {
    use OutputPrefix::{Columnar, Flat};
    match (rel, a, b) {
        (Relation::EqNat, Flat(x), Flat(y)) => Ok(match (x.first(), y.first()) {
            (Some(p), Some(q)) if p == q => PrefixVerdict::EquivalentByRule,
            (Some(_), Some(_)) => PrefixVerdict::DefinitelyDistinct(0),
            _ => PrefixVerdict::ConsistentSoFar(compare_flat(x, y)),
        }),
        (Relation::Id, Flat(x), Flat(y)) => {
            let e = compare_flat(x, y);
            Ok(match (0..e.compared).find(|&k| x[k] != y[k]) {
                Some(k) => PrefixVerdict::DefinitelyDistinct(k),
                None => PrefixVerdict::ConsistentSoFar(e),
            })
        }
        (Relation::E0, Flat(x), Flat(y)) => Ok(PrefixVerdict::ConsistentSoFar(compare_flat(x, y))),
        (Relation::ERange, Flat(x), Flat(y)) => {
            let e = Evidence { range_delta: range_delta(x, y), ..compare_flat(x, y) };
            Ok(PrefixVerdict::ConsistentSoFar(e))
        }
        (Relation::E3, Columnar(x), Columnar(y)) => {
            let mut e = Evidence::default();
            for m in 0..x.len().max(y.len()) {
                let (p, q) = (x.get(m).map_or(&[][..], |c| c), y.get(m).map_or(&[][..], |c| c));
                let c = compare_flat(p, q);
                e.compared += c.compared;
                e.mismatches += c.mismatches;
                if c.mismatches > 0 {
                    e.columns.push(m);
                }
                if c.compared > 0 && c.last_mismatch == Some(c.compared - 1) {
                    e.open_columns.push(m);
                }
            }
            Ok(PrefixVerdict::ConsistentSoFar(e))
        }
        (Relation::ESet, Columnar(x), Columnar(y)) => {
            let unmatched =
                |u: &[Vec<u64>], v: &[Vec<u64>]| (0..u.len()).filter(|&m| !v.iter().any(|c| compatible(&u[m], c))).count();
            let e = Evidence {
                columns: (0..x.len()).filter(|&m| !y.iter().any(|c| compatible(&x[m], c))).collect(),
                mismatches: unmatched(x, y) + unmatched(y, x),
                ..Evidence::default()
            };
            Ok(PrefixVerdict::ConsistentSoFar(e))
        }
        _ => Err(ReductionError::ShapeMismatch),
    }
}

/// Checks a flat prefix against a range known to be final: any value
/// outside it certifies range inequality.
pub fn check_closed_range(a: &OutputPrefix, closed: &BTreeSet<u64>) -> Result<PrefixVerdict, ReductionError> {
    let x = a.flat().ok_or(ReductionError::ShapeMismatch)?;
    Ok(match x.iter().position(|v| !closed.contains(v)) {
        Some(k) => PrefixVerdict::DefinitelyDistinct(k),
        None => {
            let seen: BTreeSet<u64> = x.iter().copied().collect();
            PrefixVerdict::ConsistentSoFar(Evidence {
                compared: x.len(),
                range_delta: closed.difference(&seen).copied().collect(),
                ..Evidence::default()
            })
        }
    })
}

/// `0^{p(0)} 1 0^{p(1)} 1 …`
pub fn unary_encode(p: &[u64]) -> Vec<u64> {
    let mut out = Vec::new();
    for &v in p {
        out.extend(std::iter::repeat_n(0, v as usize));
        out.push(1);
    }
    out
}

/// Inverse of [`unary_encode`] on complete blocks; trailing zeros without a
/// separator are an unfinished block and are dropped. `None` on a symbol
/// other than 0 or 1.
pub fn unary_decode(bits: &[u64]) -> Option<Vec<u64>> {
    let mut out = Vec::new();
    let mut run = 0;
    for &b in bits {
        match b {
            0 => run += 1,
            1 => {
                out.push(run);
                run = 0;
            }
            _ => return None,
        }
    }
    Some(out)
}

/// The stage-`s` fragment of the canonical copy of `a`.
pub fn canonical_stage(a: &CatalogStructure, s: usize) -> FiniteFragment {
    a.canonical(a.card().map_or(s + 1, |c| c.min(s + 1)))
}

pub trait ReductionOperator: Send {
    fn id(&self) -> String;

    fn target(&self) -> Relation;

    /// Output after the stage whose fragment is `f`.
    fn apply(&mut self, f: &FiniteFragment) -> Result<OutputPrefix, ReductionError>;

    /// Forgets the stream seen so far.
    fn reset(&mut self);

    /// A reset copy, for running on a second stream alongside this one.
    fn fresh(&self) -> Box<dyn ReductionOperator>;

    /// The full range of the output on copies of member `code`, when known.
    fn declared_range(&self, _code: usize) -> Option<BTreeSet<u64>> {
        None
    }
}

/// One computed row per stage. A fragment whose newest common element
/// carries different facts than last time restarts the rows.
#[derive(Debug, Clone)]
struct StageRows<R> {
    last: Option<(usize, Vec<bool>)>,
    rows: Vec<R>,
}

impl<R> Default for StageRows<R> {
    fn default() -> Self {
        StageRows { last: None, rows: Vec::new() }
    }
}

impl<R> StageRows<R> {
    /// Returns `true` if the stream restarted.
    fn sync(&mut self, f: &FiniteFragment) -> bool {
        let restart = match &self.last {
            Some((n, facts)) => f.size() < *n || (*n > 0 && f.element_facts(n - 1) != *facts),
            None => false,
        };
        if restart {
            self.rows.clear();
        }
        let n = f.size();
        self.last = Some((n, if n > 0 { f.element_facts(n - 1) } else { Vec::new() }));
        restart
    }

    fn clear(&mut self) {
        self.last = None;
        self.rows.clear();
    }
}

/// Rows are the Fin-learner's answers stage by stage.
#[derive(Debug, Clone)]
struct FinRows {
    template: FinLearner,
    learner: FinLearner,
    rows: StageRows<Hypothesis>,
}

impl FinRows {
    fn new(family: &Family) -> Result<Self, ReductionError> {
        let template = FinLearner::from_family(family)?;
        Ok(FinRows { learner: template.clone(), template, rows: StageRows::default() })
    }

    fn sync(&mut self, f: &FiniteFragment) -> Result<&[Hypothesis], ReductionError> {
        if self.rows.sync(f) {
            self.learner = self.template.clone();
        }
        for t in self.rows.rows.len()..f.size() {
            let h = self.learner.step(&f.restrict(t + 1))?;
            self.rows.rows.push(h);
        }
        Ok(&self.rows.rows)
    }

    fn reset(&mut self) {
        self.rows.clear();
        self.learner = self.template.clone();
    }
}

/// To `=ℕ`: nothing until the Fin-learner commits to code `i`, then the
/// constant sequence `i` as long as the stream.
#[derive(Debug, Clone)]
pub struct FinToEqNat {
    fin: FinRows,
}

impl FinToEqNat {
    pub fn new(family: &Family) -> Result<Self, ReductionError> {
        Ok(FinToEqNat { fin: FinRows::new(family)? })
    }
}

impl ReductionOperator for FinToEqNat {
    fn id(&self) -> String {
        "fin_to_eqnat".into()
    }

    fn target(&self) -> Relation {
        Relation::EqNat
    }

    fn apply(&mut self, f: &FiniteFragment) -> Result<OutputPrefix, ReductionError> {
        let rows = self.fin.sync(f)?;
        Ok(OutputPrefix::Flat(match rows.iter().find_map(|h| h.code()) {
            Some(i) => vec![i as u64; rows.len()],
            None => Vec::new(),
        }))
    }

    fn fresh(&self) -> Box<dyn ReductionOperator> {
        let mut c = self.clone();
        c.reset();
        Box::new(c)
    }

    fn reset(&mut self) {
        self.fin.reset();
    }

    fn declared_range(&self, code: usize) -> Option<BTreeSet<u64>> {
        Some(BTreeSet::from([code as u64]))
    }
}

/// The Fin-learner's answers as a total sequence: `?` becomes 0 and code
/// `i` becomes `i + 1`. Defined on every graph stream.
#[derive(Debug, Clone)]
pub struct FinToIdTotal {
    fin: FinRows,
}

impl FinToIdTotal {
    pub fn new(family: &Family) -> Result<Self, ReductionError> {
        Ok(FinToIdTotal { fin: FinRows::new(family)? })
    }
}

impl ReductionOperator for FinToIdTotal {
    fn id(&self) -> String {
        "fin_to_id_total".into()
    }

    fn target(&self) -> Relation {
        Relation::Id
    }

    fn apply(&mut self, f: &FiniteFragment) -> Result<OutputPrefix, ReductionError> {
        let rows = self.fin.sync(f)?;
        Ok(OutputPrefix::Flat(rows.iter().map(|h| h.code().map_or(0, |c| c as u64 + 1)).collect()))
    }

    fn fresh(&self) -> Box<dyn ReductionOperator> {
        let mut c = self.clone();
        c.reset();
        Box::new(c)
    }

    fn reset(&mut self) {
        self.fin.reset();
    }
}

/// Which pairwise formulas hold at each stage.
#[derive(Debug, Clone)]
struct WitnessRows {
    witnesses: BTreeMap<(usize, usize), FormulaWitness>,
    ranges: Vec<BTreeSet<u64>>,
    rows: StageRows<BTreeSet<(usize, usize)>>,
}

impl WitnessRows {
    fn new(family: &Family) -> Result<Self, ReductionError> {
        let class = classify_family(family)?;
        if !class.is_partial_order() {
            return Err(ReductionError::Config(format!(
                "{} is not a partial order of existential theories ({:?})",
                family.name, class.level
            )));
        }
        let witnesses = class.pairwise();
        let k = &family.members;
        for i in 0..k.len() {
            for j in (0..k.len()).filter(|&j| j != i) {
                if !witnesses.contains_key(&(i, j)) && !witnesses.contains_key(&(j, i)) {
                    return Err(ReductionError::Config(format!("no separating formula for {} and {}", k[i], k[j])));
                }
            }
        }
        let mut ranges = Vec::new();
        for a in k {
            let mut range = BTreeSet::from([0]);
            for (&(i, j), phi) in &witnesses {
                if sat_catalog(phi, a)? {
                    range.insert(pair(i, j) as u64);
                }
            }
            ranges.push(range);
        }
        Ok(WitnessRows { witnesses, ranges, rows: StageRows::default() })
    }

    fn sync(&mut self, f: &FiniteFragment) -> Result<&[BTreeSet<(usize, usize)>], ReductionError> {
        self.rows.sync(f);
        for t in self.rows.rows.len()..f.size() {
            let g = f.restrict(t + 1);
            let mut row = BTreeSet::new();
            for (&key, phi) in &self.witnesses {
                if sat_fragment(phi, &g)? {
                    row.insert(key);
                }
            }
            self.rows.rows.push(row);
        }
        Ok(&self.rows.rows)
    }
}

/// To `E_range`: position `⟨t, i, j⟩` carries `⟨i, j⟩` when the formula
/// true in member `i` and false in member `j` holds at stage `t`, and
/// `⟨0, 0⟩ = 0` otherwise.
#[derive(Debug, Clone)]
pub struct ERangeOperator {
    rows: WitnessRows,
}

impl ERangeOperator {
    pub fn new(family: &Family) -> Result<Self, ReductionError> {
        Ok(ERangeOperator { rows: WitnessRows::new(family)? })
    }

    pub fn witnesses(&self) -> &BTreeMap<(usize, usize), FormulaWitness> {
        &self.rows.witnesses
    }
}

impl ReductionOperator for ERangeOperator {
    fn id(&self) -> String {
        "erange".into()
    }

    fn target(&self) -> Relation {
        Relation::ERange
    }

    fn apply(&mut self, f: &FiniteFragment) -> Result<OutputPrefix, ReductionError> {
        let rows = self.rows.sync(f)?;
        let s = rows.len();
        // Every position below (s)(s+1)/2 has its stage component below s.
        let out = (0..s * (s + 1) / 2)
            .map(|q| {
                let (t, i, j) = untriple(q);
                if rows[t].contains(&(i, j)) {
                    pair(i, j) as u64
                } else {
                    0
                }
            })
            .collect();
        Ok(OutputPrefix::Flat(out))
    }

    fn fresh(&self) -> Box<dyn ReductionOperator> {
        let mut c = self.clone();
        c.reset();
        Box::new(c)
    }

    fn reset(&mut self) {
        self.rows.rows.clear();
    }

    fn declared_range(&self, code: usize) -> Option<BTreeSet<u64>> {
        self.rows.ranges.get(code).cloned()
    }
}

/// To `E_3`: column `⟨i, j⟩` has a 1 at row `t` once the formula true in
/// member `i` and false in member `j` holds at stage `t`.
#[derive(Debug, Clone)]
pub struct ERangeToE3 {
    rows: WitnessRows,
    n: usize,
}

impl ERangeToE3 {
    pub fn new(family: &Family) -> Result<Self, ReductionError> {
        Ok(ERangeToE3 { rows: WitnessRows::new(family)?, n: family.len() })
    }
}

impl ReductionOperator for ERangeToE3 {
    fn id(&self) -> String {
        "erange_to_e3".into()
    }

    fn target(&self) -> Relation {
        Relation::E3
    }

    fn apply(&mut self, f: &FiniteFragment) -> Result<OutputPrefix, ReductionError> {
        let width = if self.n == 0 { 0 } else { pair(self.n - 1, self.n - 1) + 1 };
        let rows = self.rows.sync(f)?;
        let columns = (0..width)
            .map(|c| {
                let key = unpair(c);
                rows.iter().map(|r| u64::from(r.contains(&key))).collect()
            })
            .collect();
        Ok(OutputPrefix::Columnar(columns))
    }

    fn fresh(&self) -> Box<dyn ReductionOperator> {
        let mut c = self.clone();
        c.reset();
        Box::new(c)
    }

    fn reset(&mut self) {
        self.rows.rows.clear();
    }
}

/// One column: 1 at the stages where the longest chain grows.
#[derive(Debug, Clone, Default)]
pub struct ChainGrowth {
    view: OrderView,
    rows: StageRows<usize>,
}

impl ReductionOperator for ChainGrowth {
    fn id(&self) -> String {
        "chain_growth".into()
    }

    fn target(&self) -> Relation {
        Relation::E3
    }

    fn apply(&mut self, f: &FiniteFragment) -> Result<OutputPrefix, ReductionError> {
        if self.rows.sync(f) {
            self.view = OrderView::default();
        }
        for t in self.rows.rows.len()..f.size() {
            self.view.sync(&f.restrict(t + 1));
            self.rows.rows.push(self.view.height());
        }
        let heights = &self.rows.rows;
        let column = (0..heights.len()).map(|t| u64::from(heights[t] > if t == 0 { 0 } else { heights[t - 1] })).collect();
        Ok(OutputPrefix::Columnar(vec![column]))
    }

    fn fresh(&self) -> Box<dyn ReductionOperator> {
        let mut c = self.clone();
        c.reset();
        Box::new(c)
    }

    fn reset(&mut self) {
        self.rows.clear();
        self.view = OrderView::default();
    }
}

pub const OPERATOR_NAMES: &[&str] = &["fin_to_eqnat", "fin_to_id_total", "erange", "erange_to_e3", "chain_growth"];

pub fn build_operator(name: &str, family: &Family) -> Result<Box<dyn ReductionOperator>, ReductionError> {
    Ok(match name.trim() {
        "fin_to_eqnat" => Box::new(FinToEqNat::new(family)?),
        "fin_to_id_total" => Box::new(FinToIdTotal::new(family)?),
        "erange" => Box::new(ERangeOperator::new(family)?),
        "erange_to_e3" => Box::new(ERangeToE3::new(family)?),
        "chain_growth" => Box::new(ChainGrowth::default()),
        other => return Err(ReductionError::Unknown(other.into())),
    })
}

/// How two runs on different members were told apart.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Separation {
    pub members: (usize, usize),
    pub seed: u64,
    /// For `E_range`: a value in one output outside the other member's range.
    pub code: Option<u64>,
    pub evidence: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReductionReport {
    pub operator: String,
    pub family: String,
    pub relation: Relation,
    pub horizon: usize,
    pub seeds: Vec<u64>,
    pub monotone: bool,
    pub same_member_consistent: bool,
    pub range_sound: bool,
    pub cross_separated: bool,
    pub separations: Vec<Separation>,
    pub failures: Vec<String>,
    pub pass: bool,
}

fn run_operator(
    op: &mut dyn ReductionOperator,
    target: &CatalogStructure,
    seed: u64,
    horizon: usize,
) -> Result<(OutputPrefix, Option<usize>), ReductionError> {
    op.reset();
    let mut p = Presentation::new(target.clone(), seed)?;
    let mut prev: Option<OutputPrefix> = None;
    let mut broken = None;
    for s in 0..horizon {
        let out = op.apply(p.advance_to(s))?;
        if broken.is_none() && prev.as_ref().is_some_and(|q| !q.is_prefix_of(&out)) {
            broken = Some(s);
        }
        prev = Some(out);
    }
    let out = prev.unwrap_or_else(|| OutputPrefix::Flat(Vec::new()));
    Ok((out, broken))
}

fn separation_evidence(
    rel: Relation,
    op: &dyn ReductionOperator,
    (i, a): (usize, &OutputPrefix),
    (j, b): (usize, &OutputPrefix),
    horizon: usize,
) -> Result<Option<(Option<u64>, String)>, ReductionError> {
    Ok(match rel {
        Relation::EqNat | Relation::Id => match check_prefix(rel, a, b)? {
            PrefixVerdict::DefinitelyDistinct(k) => Some((None, format!("mismatch at position {k}"))),
            _ => None,
        },
        Relation::ERange => {
            let mut found = None;
            for ((x, out), other) in [((i, a), j), ((j, b), i)] {
                if let Some(range) = op.declared_range(other) {
                    if let PrefixVerdict::DefinitelyDistinct(k) = check_closed_range(out, &range)? {
                        let v = out.flat().expect("flat")[k];
                        let (p, q) = unpair(v as usize);
                        found = Some((Some(v), format!("code <{p},{q}> in member {x} is outside the range of member {other}")));
                        break;
                    }
                }
            }
            found
        }
        Relation::E0 => match check_prefix(rel, a, b)? {
            PrefixVerdict::ConsistentSoFar(e) if e.last_mismatch.is_some_and(|m| 2 * m >= horizon) => {
                Some((None, format!("{} mismatches, the last at {}", e.mismatches, e.last_mismatch.unwrap_or(0))))
            }
            _ => None,
        },
        Relation::E3 | Relation::ESet => match check_prefix(rel, a, b)? {
            PrefixVerdict::ConsistentSoFar(e) if rel == Relation::E3 && !e.open_columns.is_empty() => {
                Some((None, format!("columns {:?} still differ at the horizon", e.open_columns)))
            }
            PrefixVerdict::ConsistentSoFar(e) if rel == Relation::ESet && e.mismatches > 0 => {
                Some((None, format!("{} columns without a counterpart", e.mismatches)))
            }
            _ => None,
        },
    })
}

/// Runs `make()` on seeded copies of every member and checks that copies of
/// the same member are never told apart while copies of different members
/// are, by the horizon.
pub fn verify_reduction(
    make: &dyn Fn() -> Result<Box<dyn ReductionOperator>, ReductionError>,
    family: &Family,
    horizon: usize,
    seeds: &[u64],
) -> Result<ReductionReport, ReductionError> {
    let mut op = make()?;
    let rel = op.target();
    let mut report = ReductionReport {
        operator: op.id(),
        family: family.name.clone(),
        relation: rel,
        horizon,
        seeds: seeds.to_vec(),
        monotone: true,
        same_member_consistent: true,
        range_sound: true,
        cross_separated: true,
        separations: Vec::new(),
        failures: Vec::new(),
        pass: true,
    };
    let mut outputs: Vec<Vec<OutputPrefix>> = Vec::new();
    for (i, a) in family.members.iter().enumerate() {
        let mut per_seed = Vec::new();
        for &seed in seeds {
            let (out, broken) = run_operator(op.as_mut(), a, seed, horizon)?;
            if let Some(s) = broken {
                report.monotone = false;
                report.failures.push(format!("member {i} seed {seed}: output shrank at stage {s}"));
            }
            if let Some(range) = op.declared_range(i) {
                if let (Some(v), true) = (out.flat(), rel == Relation::ERange) {
                    if let Some(x) = v.iter().find(|x| !range.contains(x)) {
                        report.range_sound = false;
                        report.failures.push(format!("member {i} seed {seed}: value {x} outside declared range"));
                    }
                }
            }
            per_seed.push(out);
        }
        outputs.push(per_seed);
    }
    for (i, runs) in outputs.iter().enumerate() {
        for x in 0..runs.len() {
            for y in x + 1..runs.len() {
                if check_prefix(rel, &runs[x], &runs[y])?.is_distinct() {
                    report.same_member_consistent = false;
                    report.failures.push(format!("member {i}: seeds {} and {} told apart", seeds[x], seeds[y]));
                }
            }
        }
    }
    for i in 0..outputs.len() {
        for j in i + 1..outputs.len() {
            for (k, &seed) in seeds.iter().enumerate() {
                match separation_evidence(rel, op.as_ref(), (i, &outputs[i][k]), (j, &outputs[j][k]), horizon)? {
                    Some((code, evidence)) => report.separations.push(Separation { members: (i, j), seed, code, evidence }),
                    None => {
                        report.cross_separated = false;
                        report.failures.push(format!("members {i} and {j} not separated on seed {seed}"));
                    }
                }
            }
        }
    }
    report.pass = report.monotone && report.same_member_consistent && report.range_sound && report.cross_separated;
    Ok(report)
}
