//! Learners: maps from a growing stream of fragments to conjectures.
//!
//! A learner is fed the stage-`s` fragment `S↾s` for `s = 0, 1, 2, …` in
//! order and answers with a member code of its family or `?`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::catalog::{AgeOracle, CatalogError, CatalogStructure as C, Family, Kind, Presentation};
use crate::logic::{classify_family, sat_catalog, sat_fragment, sigma1_leq, FormulaWitness, LogicError, Solidity};
use crate::pairing::unpair;
use crate::reductions::{self, OutputPrefix, ReductionError, ReductionOperator};
use crate::structures::{FiniteFragment, StructureError};

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("configuration rejected: {0}")]
    Config(String),
    #[error("witnesses for codes {first} and {second} both hold at stage {stage}")]
    WitnessInconsistency { first: usize, second: usize, stage: usize },
    #[error("unknown learner `{0}`")]
    Unknown(String),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Reduction(#[from] Box<ReductionError>),
}

impl From<ReductionError> for LearnerError {
    fn from(e: ReductionError) -> Self {
        LearnerError::Reduction(Box::new(e))
    }
}

/// A conjecture code or the question mark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Hypothesis {
    Question,
    Conjecture(usize),
}

impl Hypothesis {
    pub fn code(self) -> Option<usize> {
        match self {
            Hypothesis::Conjecture(c) => Some(c),
            Hypothesis::Question => None,
        }
    }

    pub fn is_question(self) -> bool {
        self == Hypothesis::Question
    }
}

impl From<Option<usize>> for Hypothesis {
    fn from(c: Option<usize>) -> Self {
        c.map_or(Hypothesis::Question, Hypothesis::Conjecture)
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hypothesis::Question => write!(f, "?"),
            Hypothesis::Conjecture(c) => write!(f, "{c}"),
        }
    }
}

impl FromStr for Hypothesis {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "?" => Ok(Hypothesis::Question),
            t => t.parse().map(Hypothesis::Conjecture),
        }
    }
}

/// JSON form: the code as a number, or the string `"?"`.
impl Serialize for Hypothesis {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Hypothesis::Question => s.serialize_str("?"),
            Hypothesis::Conjecture(c) => s.serialize_u64(*c as u64),
        }
    }
}

impl<'de> Deserialize<'de> for Hypothesis {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Code(usize),
            Mark(String),
        }
        match Raw::deserialize(d)? {
            Raw::Code(c) => Ok(Hypothesis::Conjecture(c)),
            Raw::Mark(m) if m == "?" => Ok(Hypothesis::Question),
            Raw::Mark(m) => Err(serde::de::Error::custom(format!("expected a code or \"?\", got {m:?}"))),
        }
    }
}

/// The hypotheses a learner emitted, indexed by stage.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Transcript {
    entries: Vec<Hypothesis>,
}

#[derive(Serialize, Deserialize)]
struct StageRecord {
    stage: usize,
    hypothesis: Hypothesis,
}

impl Transcript {
    pub fn new() -> Self {
        Transcript::default()
    }

    pub fn from_entries(entries: Vec<Hypothesis>) -> Self {
        Transcript { entries }
    }

    pub fn push(&mut self, h: Hypothesis) {
        self.entries.push(h);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Hypothesis] {
        &self.entries
    }

    pub fn last(&self) -> Option<Hypothesis> {
        self.entries.last().copied()
    }

    /// Occurrences of `code` among stages `0..end`.
    pub fn count_before(&self, code: usize, end: usize) -> usize {
        self.entries[..end.min(self.len())].iter().filter(|h| h.code() == Some(code)).count()
    }

    pub fn count(&self, code: usize) -> usize {
        self.count_before(code, self.len())
    }

    pub fn distinct_codes(&self) -> BTreeSet<usize> {
        self.entries.iter().filter_map(|h| h.code()).collect()
    }

    /// Stages whose non-`?` hypothesis differs from the previous non-`?` one.
    pub fn mind_change_stages(&self) -> Vec<usize> {
        let mut last = None;
        let mut out = Vec::new();
        for (s, h) in self.entries.iter().enumerate() {
            if let Some(c) = h.code() {
                if last.is_some_and(|l| l != c) {
                    out.push(s);
                }
                last = Some(c);
            }
        }
        out
    }

    pub fn mind_changes(&self) -> usize {
        self.mind_change_stages().len()
    }

    /// One `{"stage":s,"hypothesis":h}` object per line.
    pub fn to_jsonl(&self) -> String {
        self.entries
            .iter()
            .enumerate()
            .map(|(stage, &hypothesis)| serde_json::to_string(&StageRecord { stage, hypothesis }).expect("plain record") + "\n")
            .collect()
    }

    pub fn from_jsonl(text: &str) -> Result<Self, serde_json::Error> {
        let mut records: Vec<StageRecord> =
            text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect::<Result<_, _>>()?;
        records.sort_by_key(|r| r.stage);
        Ok(Transcript::from_entries(records.into_iter().map(|r| r.hypothesis).collect()))
    }
}

/// A finite allowance of mind changes, spent each time the emitted non-`?`
/// hypothesis changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MindChangeBudget {
    remaining: usize,
    #[serde(skip)]
    last: Option<usize>,
}

impl MindChangeBudget {
    pub fn new(budget: usize) -> Self {
        MindChangeBudget { remaining: budget, last: None }
    }

    pub fn remaining(&self) -> usize {
        self.remaining
    }

    /// Records the next hypothesis. Returns `false` if it is a mind change
    /// the budget cannot pay for; the budget is then left at zero.
    pub fn observe(&mut self, h: Hypothesis) -> bool {
        let Some(c) = h.code() else { return true };
        let changed = self.last.is_some_and(|l| l != c);
        self.last = Some(c);
        if !changed {
            return true;
        }
        match self.remaining.checked_sub(1) {
            Some(r) => {
                self.remaining = r;
                true
            }
            None => false,
        }
    }
}

pub trait Learner: Send {
    /// The configuration name this learner was built from.
    fn id(&self) -> String;

    /// Consumes the next stage of the stream.
    fn step(&mut self, fragment: &FiniteFragment) -> Result<Hypothesis, LearnerError>;
}

/// Feeds stages `0..horizon` of `presentation` to `learner`.
pub fn run_presentation(
    learner: &mut dyn Learner,
    presentation: &mut Presentation,
    horizon: usize,
) -> Result<Transcript, LearnerError> {
    let mut t = Transcript::new();
    for s in 0..horizon {
        t.push(learner.step(presentation.advance_to(s))?);
    }
    Ok(t)
}

/// Feeds an explicit stream of fragments.
pub fn run_stream<'a>(
    learner: &mut dyn Learner,
    stream: impl IntoIterator<Item = &'a FiniteFragment>,
) -> Result<Transcript, LearnerError> {
    let mut t = Transcript::new();
    for f in stream {
        t.push(learner.step(f)?);
    }
    Ok(t)
}

/// The comparability matrix of an order fragment, grown as the stream grows.
#[derive(Debug, Clone, Default)]
pub(crate) struct OrderView {
    le: Vec<Vec<bool>>,
    /// Number of other elements each element is comparable with.
    degree: Vec<usize>,
}

impl OrderView {
    pub(crate) fn sync(&mut self, f: &FiniteFragment) {
        if self.le.len() > f.size() {
            self.le.clear();
            self.degree.clear();
        }
        for x in self.le.len()..f.size() {
            for (y, row) in self.le.iter_mut().enumerate() {
                row.push(f.holds(0, &[y, x]));
            }
            let row: Vec<bool> = (0..=x).map(|y| f.holds(0, &[x, y])).collect();
            self.le.push(row);
            self.degree.push(0);
            for y in 0..x {
                if self.comparable(x, y) {
                    self.degree[x] += 1;
                    self.degree[y] += 1;
                }
            }
        }
    }

    fn n(&self) -> usize {
        self.le.len()
    }

    fn le(&self, a: usize, b: usize) -> bool {
        self.le[a][b]
    }

    fn lt(&self, a: usize, b: usize) -> bool {
        a != b && self.le[a][b] && !self.le[b][a]
    }

    fn comparable(&self, a: usize, b: usize) -> bool {
        self.le[a][b] || self.le[b][a]
    }

    fn isolated(&self, c: usize) -> bool {
        (0..self.n()).all(|d| d == c || !self.comparable(c, d))
    }

    fn least_of(&self, set: &[usize]) -> Option<usize> {
        set.iter().copied().find(|&a| set.iter().all(|&c| self.le(a, c)))
    }

    fn greatest_of(&self, set: &[usize]) -> Option<usize> {
        set.iter().copied().find(|&a| set.iter().all(|&c| self.le(c, a)))
    }

    /// Length of the longest chain.
    pub(crate) fn height(&self) -> usize {
        let n = self.n();
        let busy = self.degree.iter().filter(|&&d| d > 0).count();
        if busy == 0 {
            return n.min(1);
        }
        if self.degree.iter().all(|&d| d == 0 || d == busy - 1) {
            // The comparable elements form one chain.
            return busy;
        }
        let mut order: Vec<usize> = (0..n).collect();
        let below = |a: usize| (0..n).filter(|&b| self.lt(b, a)).count();
        let ranks: Vec<usize> = (0..n).map(below).collect();
        order.sort_by_key(|&a| ranks[a]);
        let mut best = vec![1usize; n];
        for (k, &a) in order.iter().enumerate() {
            for &b in &order[..k] {
                if self.lt(b, a) {
                    best[a] = best[a].max(best[b] + 1);
                }
            }
        }
        best.into_iter().max().unwrap_or(0)
    }
}

/// How often the current value of an observed quantity has been seen.
#[derive(Debug, Clone, Default)]
struct StabilityCounter {
    history: Vec<Option<usize>>,
}

impl StabilityCounter {
    fn observe(&mut self, v: Option<usize>) -> usize {
        self.history.push(v);
        self.history.iter().filter(|&&h| h == v).count()
    }
}

fn require_order(family: &Family) -> Result<(), LearnerError> {
    if family.validate()? != Kind::Order {
        return Err(LearnerError::Config(format!("{} is not a family of orders", family.name)));
    }
    Ok(())
}

fn code_or_config(family: &Family, s: &C) -> Result<usize, LearnerError> {
    family.code_of(s).ok_or_else(|| LearnerError::Config(format!("{} does not contain {s}", family.name)))
}

/// `{ω, ω*}`: compare how long the least and the greatest element have
/// stayed the same.
#[derive(Debug, Clone)]
pub struct ExMinMax {
    omega: usize,
    omega_star: usize,
    view: OrderView,
    min: StabilityCounter,
    max: StabilityCounter,
}

impl ExMinMax {
    pub fn new(family: &Family) -> Result<Self, LearnerError> {
        require_order(family)?;
        if family.len() != 2 {
            return Err(LearnerError::Config("ex_minmax needs exactly {omega, omega_star}".into()));
        }
        Ok(ExMinMax {
            omega: code_or_config(family, &C::Omega)?,
            omega_star: code_or_config(family, &C::OmegaStar)?,
            view: OrderView::default(),
            min: StabilityCounter::default(),
            max: StabilityCounter::default(),
        })
    }
}

impl Learner for ExMinMax {
    fn id(&self) -> String {
        "ex_minmax".into()
    }

    fn step(&mut self, f: &FiniteFragment) -> Result<Hypothesis, LearnerError> {
        self.view.sync(f);
        let all: Vec<usize> = (0..self.view.n()).collect();
        let c_min = self.min.observe(self.view.least_of(&all));
        let c_max = self.max.observe(self.view.greatest_of(&all));
        Ok(match c_min.cmp(&c_max) {
            std::cmp::Ordering::Greater => Hypothesis::Conjecture(self.omega),
            std::cmp::Ordering::Less => Hypothesis::Conjecture(self.omega_star),
            std::cmp::Ordering::Equal => Hypothesis::Question,
        })
    }
}

/// Commits to the first member whose distinguishing formula shows up.
#[derive(Debug, Clone)]
pub struct FinLearner {
    witnesses: BTreeMap<usize, FormulaWitness>,
    committed: Option<usize>,
    stage: usize,
}

impl FinLearner {
    /// Checks that each `φ_i` holds in member `i` and in no other member.
    pub fn new(family: &Family, witnesses: BTreeMap<usize, FormulaWitness>) -> Result<Self, LearnerError> {
        family.validate()?;
        for (i, a) in family.members.iter().enumerate() {
            let phi = witnesses.get(&i).ok_or_else(|| LearnerError::Config(format!("no strong witness for {a}")))?;
            for (j, b) in family.members.iter().enumerate() {
                if sat_catalog(phi, b)? != (i == j) {
                    return Err(LearnerError::Config(format!("witness {phi} for {a} does not single it out at {b}")));
                }
            }
        }
        Ok(FinLearner { witnesses, committed: None, stage: 0 })
    }

    /// Uses the strong witnesses found by the classifier.
    pub fn from_family(family: &Family) -> Result<Self, LearnerError> {
        let class = classify_family(family)?;
        if let Some(a) = family.members.iter().enumerate().find(|(i, _)| !class.strong_witnesses.contains_key(i)) {
            return Err(LearnerError::Config(format!("classifier found no strong witness for {} within the size bound", a.1)));
        }
        FinLearner::new(family, class.strong_witnesses)
    }

    pub fn witnesses(&self) -> &BTreeMap<usize, FormulaWitness> {
        &self.witnesses
    }
}

impl Learner for FinLearner {
    fn id(&self) -> String {
        "fin".into()
    }

    fn step(&mut self, f: &FiniteFragment) -> Result<Hypothesis, LearnerError> {
        let stage = self.stage;
        self.stage += 1;
        if self.committed.is_none() {
            let mut hits = Vec::new();
            for (&i, phi) in &self.witnesses {
                if sat_fragment(phi, f)? {
                    hits.push(i);
                }
            }
            if let [first, second, ..] = hits[..] {
                return Err(LearnerError::WitnessInconsistency { first, second, stage });
            }
            self.committed = hits.first().copied();
        }
        Ok(self.committed.into())
    }
}

/// Emits the code of every member that the stream has been seen to differ
/// from. Output slot `⟨i, t⟩` is about member `i` at stage `t`.
#[derive(Debug, Clone)]
pub struct CoLearner {
    n: usize,
    witnesses: BTreeMap<(usize, usize), FormulaWitness>,
    stage: usize,
}

impl CoLearner {
    /// `witnesses[(i, j)]` must hold in member `i` and fail in member `j`,
    /// for every ordered pair of distinct members.
    pub fn new(family: &Family, witnesses: BTreeMap<(usize, usize), FormulaWitness>) -> Result<Self, LearnerError> {
        family.validate()?;
        let k = &family.members;
        for i in 0..k.len() {
            for j in (0..k.len()).filter(|&j| j != i) {
                let phi = witnesses.get(&(i, j)).ok_or_else(|| {
                    LearnerError::Config(format!("{} and {} are comparable: no formula true in the first only", k[i], k[j]))
                })?;
                if !sat_catalog(phi, &k[i])? || sat_catalog(phi, &k[j])? {
                    return Err(LearnerError::Config(format!("witness {phi} does not separate {} from {}", k[i], k[j])));
                }
            }
        }
        Ok(CoLearner { n: k.len(), witnesses, stage: 0 })
    }

    pub fn from_family(family: &Family) -> Result<Self, LearnerError> {
        CoLearner::new(family, classify_family(family)?.pairwise())
    }

    fn triggered(&self, i: usize, f: &FiniteFragment) -> Result<bool, LearnerError> {
        for ((_, target), phi) in self.witnesses.iter() {
            if *target == i && sat_fragment(phi, f)? {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

impl Learner for CoLearner {
    fn id(&self) -> String {
        "co".into()
    }

    fn step(&mut self, f: &FiniteFragment) -> Result<Hypothesis, LearnerError> {
        let (i, t) = unpair(self.stage);
        self.stage += 1;
        if i < self.n && self.triggered(i, &f.restrict(t + 1))? {
            return Ok(Hypothesis::Conjecture(i));
        }
        Ok(Hypothesis::Question)
    }
}

/// Keeps its conjecture while the stream still embeds into it; otherwise
/// moves to the least member that admits the stream and shows its lower-cone
/// separating formula.
#[derive(Debug, Clone)]
pub struct NusLearner {
    oracles: Vec<AgeOracle>,
    witnesses: Vec<FormulaWitness>,
    current: Hypothesis,
    previous: Option<FiniteFragment>,
}

impl NusLearner {
    /// `witnesses[i]` must hold in member `i` and fail in every member whose
    /// theory is strictly below it.
    pub fn new(family: &Family, witnesses: BTreeMap<usize, FormulaWitness>) -> Result<Self, LearnerError> {
        family.validate()?;
        let k = &family.members;
        let mut ordered = Vec::new();
        for (i, a) in k.iter().enumerate() {
            let phi = witnesses.get(&i).ok_or_else(|| LearnerError::Config(format!("no lower-cone witness for {a}")))?;
            if !sat_catalog(phi, a)? {
                return Err(LearnerError::Config(format!("{phi} fails in {a}")));
            }
            for b in k.iter().filter(|b| *b != a) {
                let below = sigma1_leq(b, a)? && !sigma1_leq(a, b)?;
                if below && sat_catalog(phi, b)? {
                    return Err(LearnerError::Config(format!("{phi} holds in {b}, which lies below {a}")));
                }
            }
            ordered.push(phi.clone());
        }
        Ok(NusLearner {
            oracles: k.iter().cloned().map(AgeOracle::new).collect(),
            witnesses: ordered,
            current: Hypothesis::Question,
            previous: None,
        })
    }

    /// Requires the classifier to confirm a solid partial order.
    pub fn from_family(family: &Family) -> Result<Self, LearnerError> {
        let class = classify_family(family)?;
        if !class.is_partial_order() || class.solid != Solidity::Solid {
            return Err(LearnerError::Config(format!(
                "{} is not a solid partial order (level {:?}, solidity {:?})",
                family.name, class.level, class.solid
            )));
        }
        NusLearner::new(family, class.solid_witnesses)
    }
}

impl Learner for NusLearner {
    fn id(&self) -> String {
        "nus".into()
    }

    fn step(&mut self, f: &FiniteFragment) -> Result<Hypothesis, LearnerError> {
        let Some(prev) = self.previous.replace(f.clone()) else {
            return Ok(Hypothesis::Question);
        };
        if let Hypothesis::Conjecture(i) = self.current {
            if self.oracles[i].contains(f) {
                return Ok(self.current);
            }
        }
        for i in 0..self.oracles.len() {
            if self.oracles[i].contains(&prev) && sat_fragment(&self.witnesses[i], &prev)? {
                self.current = Hypothesis::Conjecture(i);
                break;
            }
        }
        Ok(self.current)
    }
}

/// The decisive filter: follows the inner output only when it repeats the
/// current output or is brand new, so an abandoned value never comes back.
#[derive(Debug, Clone, Default)]
pub struct DecisiveFilter {
    seen: BTreeSet<Hypothesis>,
    last_inner: Option<Hypothesis>,
    last_out: Option<Hypothesis>,
}

impl DecisiveFilter {
    pub fn push(&mut self, u: Hypothesis) -> Hypothesis {
        let out = match (self.last_inner, self.last_out) {
            (Some(prev_u), Some(prev_d)) => {
                if u == prev_d || (u != prev_u && !self.seen.contains(&u)) {
                    u
                } else {
                    prev_d
                }
            }
            _ => u,
        };
        self.seen.insert(u);
        self.last_inner = Some(u);
        self.last_out = Some(out);
        out
    }

    pub fn apply(stream: &[Hypothesis]) -> Vec<Hypothesis> {
        let mut d = DecisiveFilter::default();
        stream.iter().map(|&u| d.push(u)).collect()
    }
}

pub struct Decisive {
    inner: Box<dyn Learner>,
    filter: DecisiveFilter,
}

impl Decisive {
    pub fn new(inner: Box<dyn Learner>) -> Self {
        Decisive { inner, filter: DecisiveFilter::default() }
    }
}

impl Learner for Decisive {
    fn id(&self) -> String {
        format!("dec({})", self.inner.id())
    }

    fn step(&mut self, f: &FiniteFragment) -> Result<Hypothesis, LearnerError> {
        let u = self.inner.step(f)?;
        Ok(self.filter.push(u))
    }
}

/// The least member the stream embeds into.
#[derive(Debug, Clone)]
pub struct ExMinEmbed {
    oracles: Vec<AgeOracle>,
}

impl ExMinEmbed {
    pub fn new(family: &Family) -> Result<Self, LearnerError> {
        family.validate()?;
        Ok(ExMinEmbed { oracles: family.members.iter().cloned().map(AgeOracle::new).collect() })
    }
}

impl Learner for ExMinEmbed {
    fn id(&self) -> String {
        "ex_min_embed".into()
    }

    fn step(&mut self, f: &FiniteFragment) -> Result<Hypothesis, LearnerError> {
        Ok(self.oracles.iter_mut().position(|o| o.contains(f)).into())
    }
}

/// The least-embedding learner for a finite partial order of theories,
/// after checking that codes increase along inclusion.
pub fn ex_finite_from_erange(family: &Family) -> Result<ExMinEmbed, LearnerError> {
    if family.infinite {
        return Err(LearnerError::Config(format!("{} is not a finite family", family.name)));
    }
    let class = classify_family(family)?;
    if !class.is_partial_order() {
        return Err(LearnerError::Config(format!("{} is not a partial order of theories", family.name)));
    }
    for (i, row) in class.leq.iter().enumerate() {
        for (j, &le) in row.iter().enumerate() {
            if i != j && le && i > j {
                return Err(LearnerError::Config(format!(
                    "{} is listed after {} but its theory is smaller",
                    family.members[i], family.members[j]
                )));
            }
        }
    }
    ExMinEmbed::new(family)
}

/// Maps the codes of a learner for a sub-family back to the full family.
pub struct Relabel {
    inner: Box<dyn Learner>,
    codes: Vec<usize>,
}

impl Relabel {
    pub fn new(inner: Box<dyn Learner>, codes: Vec<usize>) -> Self {
        Relabel { inner, codes }
    }
}

impl Learner for Relabel {
    fn id(&self) -> String {
        format!("{}{:?}", self.inner.id(), self.codes)
    }

    fn step(&mut self, f: &FiniteFragment) -> Result<Hypothesis, LearnerError> {
        Ok(self.inner.step(f)?.code().and_then(|c| self.codes.get(c).copied()).into())
    }
}

/// An Ex-learner for the pair of members `i, j`, emitting full-family codes.
pub fn pairwise_duel(family: &Family, i: usize, j: usize) -> Result<Box<dyn Learner>, LearnerError> {
    let (a, b) = (&family.members[i], &family.members[j]);
    let pair = Family::new(format!("{{{a}, {b}}}"), vec![a.clone(), b.clone()]);
    if pair.members.contains(&C::Omega) && pair.members.contains(&C::OmegaStar) {
        return Ok(Box::new(Relabel::new(Box::new(ExMinMax::new(&pair)?), vec![i, j])));
    }
    let (ab, ba) = (sigma1_leq(a, b)?, sigma1_leq(b, a)?);
    if ab && ba {
        return Err(LearnerError::Config(format!("no Ex duel known for {a} and {b}: equal existential theories")));
    }
    let codes = if ba { vec![j, i] } else { vec![i, j] };
    let ordered = Family::new(pair.name, codes.iter().map(|&c| family.members[c].clone()).collect());
    Ok(Box::new(Relabel::new(Box::new(ExMinEmbed::new(&ordered)?), codes)))
}

struct DuelRun {
    learner: Box<dyn Learner>,
    outputs: Vec<Hypothesis>,
}

impl DuelRun {
    /// Occurrences of `code` in the duel's outputs on stages `0..=k`.
    fn count(&mut self, f: &FiniteFragment, code: usize, k: usize) -> Result<usize, LearnerError> {
        while self.outputs.len() <= k {
            let t = self.outputs.len();
            let h = self.learner.step(&f.restrict(t + 1))?;
            self.outputs.push(h);
        }
        Ok(self.outputs[..=k].iter().filter(|h| h.code() == Some(code)).count())
    }
}

/// Partial learner assembled from one Ex-learner per pair of members. Slot
/// `⟨i, k⟩` speaks about member `i`.
pub struct PlPairwise {
    n: usize,
    duels: BTreeMap<(usize, usize), DuelRun>,
    emitted: Vec<usize>,
    stage: usize,
}

impl PlPairwise {
    /// `duels` is keyed by `(i, j)` with `i < j` and must cover every pair.
    pub fn new(n: usize, duels: BTreeMap<(usize, usize), Box<dyn Learner>>) -> Result<Self, LearnerError> {
        for i in 0..n {
            for j in i + 1..n {
                if !duels.contains_key(&(i, j)) {
                    return Err(LearnerError::Config(format!("missing duel learner for pair ({i}, {j})")));
                }
            }
        }
        if let Some((i, j)) = duels.keys().find(|(i, j)| i >= j || *j >= n) {
            return Err(LearnerError::Config(format!("malformed duel key ({i}, {j})")));
        }
        let duels = duels.into_iter().map(|(k, learner)| (k, DuelRun { learner, outputs: Vec::new() })).collect();
        Ok(PlPairwise { n, duels, emitted: vec![0; n], stage: 0 })
    }

    pub fn from_family(family: &Family) -> Result<Self, LearnerError> {
        family.validate()?;
        let mut duels = BTreeMap::new();
        for i in 0..family.len() {
            for j in i + 1..family.len() {
                duels.insert((i, j), pairwise_duel(family, i, j)?);
            }
        }
        PlPairwise::new(family.len(), duels)
    }
}

impl Learner for PlPairwise {
    fn id(&self) -> String {
        "pl_pairwise".into()
    }

    fn step(&mut self, f: &FiniteFragment) -> Result<Hypothesis, LearnerError> {
        let (i, k) = unpair(self.stage);
        self.stage += 1;
        if i >= self.n || k == 0 {
            return Ok(Hypothesis::Question);
        }
        // Some k' < k works iff the smallest admissible k' = c + 1 does,
        // since raising k' only adds duels to satisfy.
        let c = self.emitted[i];
        if c + 1 >= k {
            return Ok(Hypothesis::Question);
        }
        for j in (0..=c + 1).filter(|&j| j != i && j < self.n) {
            let duel = self.duels.get_mut(&(i.min(j), i.max(j))).expect("every pair has a duel");
            if duel.count(f, i, k)? <= c {
                return Ok(Hypothesis::Question);
            }
        }
        self.emitted[i] += 1;
        Ok(Hypothesis::Conjecture(i))
    }
}

/// Disagreement data between two members under a columnar operator: the
/// first column on which their references differ at the last computed row,
/// and the rows where that column differs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Disagreement {
    pub column: usize,
    pub rows: Vec<usize>,
}

/// Default depth to which reference outputs are computed.
pub const REFERENCE_DEPTH: usize = 64;

fn columns_of(p: OutputPrefix) -> Result<Vec<Vec<u64>>, LearnerError> {
    match p {
        OutputPrefix::Columnar(c) => Ok(c),
        OutputPrefix::Flat(_) => Err(LearnerError::Config("operator output is not columnar".into())),
    }
}

/// Partial learner driven by a reduction to columnwise eventual agreement.
pub struct PlFromE3 {
    operator: Box<dyn ReductionOperator>,
    references: Vec<Vec<Vec<u64>>>,
    tables: BTreeMap<(usize, usize), Disagreement>,
    emitted: Vec<usize>,
    stage: usize,
}

impl PlFromE3 {
    pub fn new(
        mut operator: Box<dyn ReductionOperator>,
        references: Vec<Vec<Vec<u64>>>,
        tables: BTreeMap<(usize, usize), Disagreement>,
    ) -> Result<Self, LearnerError> {
        operator.reset();
        let n = references.len();
        Ok(PlFromE3 { operator, references, tables, emitted: vec![0; n], stage: 0 })
    }

    /// References come from canonical copies to `depth` stages.
    pub fn from_operator(family: &Family, mut operator: Box<dyn ReductionOperator>, depth: usize) -> Result<Self, LearnerError> {
        let mut references = Vec::new();
        for a in &family.members {
            operator.reset();
            references.push(columns_of(operator.apply(&reductions::canonical_stage(a, depth - 1))?)?);
        }
        let tables = disagreement_tables(&references);
        PlFromE3::new(operator, references, tables)
    }

    pub fn tables(&self) -> &BTreeMap<(usize, usize), Disagreement> {
        &self.tables
    }

    /// `∃k ∀t<n`: the stream agrees with member `i` at row `rows[k+t]` of
    /// the disagreement column.
    fn agrees(&self, out: &[Vec<u64>], i: usize, d: &Disagreement, n: usize) -> bool {
        let reference = &self.references[i][d.column];
        let observed = out.get(d.column).map_or(&[][..], |c| c.as_slice());
        let known = |r: usize| r < reference.len() && r < observed.len();
        (0..d.rows.len()).any(|k| (0..n).all(|t| d.rows.get(k + t).is_some_and(|&r| known(r) && observed[r] == reference[r])))
    }
}

/// `d_ij` and `p_ij` for every pair, from reference outputs.
pub fn disagreement_tables(references: &[Vec<Vec<u64>>]) -> BTreeMap<(usize, usize), Disagreement> {
    let mut out = BTreeMap::new();
    for i in 0..references.len() {
        for j in (0..references.len()).filter(|&j| j != i) {
            let (a, b) = (&references[i], &references[j]);
            let column = (0..a.len().min(b.len())).find(|&c| {
                let depth = a[c].len().min(b[c].len());
                depth > 0 && a[c][depth - 1] != b[c][depth - 1]
            });
            if let Some(column) = column {
                let depth = a[column].len().min(b[column].len());
                let mut rows = vec![0];
                rows.extend((1..depth).filter(|&r| a[column][r] != b[column][r]));
                out.insert((i, j), Disagreement { column, rows });
            }
        }
    }
    out
}

impl Learner for PlFromE3 {
    fn id(&self) -> String {
        "pl_e3".into()
    }

    fn step(&mut self, f: &FiniteFragment) -> Result<Hypothesis, LearnerError> {
        let (i, _) = unpair(self.stage);
        self.stage += 1;
        if i >= self.emitted.len() {
            return Ok(Hypothesis::Question);
        }
        let out = columns_of(self.operator.apply(f)?)?;
        let n = self.emitted[i] + 1;
        if n > 1 {
            for m in (0..n.min(self.emitted.len())).filter(|&m| m != i) {
                let ok = self.tables.get(&(i, m)).is_some_and(|d| self.agrees(&out, i, d, n));
                if !ok {
                    return Ok(Hypothesis::Question);
                }
            }
        }
        self.emitted[i] += 1;
        Ok(Hypothesis::Conjecture(i))
    }
}

/// Partial learner for padded chains: follows the chain length while it is
/// stable, and otherwise compares how long the bottom and top of the
/// comparable part have stayed put.
#[derive(Debug, Clone)]
pub struct PlFstar {
    omega: usize,
    omega_star: usize,
    chains: BTreeMap<usize, usize>,
    view: OrderView,
    min: StabilityCounter,
    max: StabilityCounter,
    previous: Option<(usize, usize, usize)>,
}

impl PlFstar {
    pub fn new(family: &Family) -> Result<Self, LearnerError> {
        require_order(family)?;
        let mut chains = BTreeMap::new();
        for (code, m) in family.members.iter().enumerate() {
            match m {
                C::Tilde(x) => match **x {
                    C::Chain(n) => {
                        chains.insert(n, code);
                    }
                    C::Omega | C::OmegaStar => {}
                    _ => return Err(LearnerError::Config(format!("{m} is not a padded chain"))),
                },
                _ => return Err(LearnerError::Config(format!("{m} is not a padded chain"))),
            }
        }
        Ok(PlFstar {
            omega: code_or_config(family, &C::tilde(C::Omega))?,
            omega_star: code_or_config(family, &C::tilde(C::OmegaStar))?,
            chains,
            view: OrderView::default(),
            min: StabilityCounter::default(),
            max: StabilityCounter::default(),
            previous: None,
        })
    }
}

impl Learner for PlFstar {
    fn id(&self) -> String {
        "pl_fstar".into()
    }

    fn step(&mut self, f: &FiniteFragment) -> Result<Hypothesis, LearnerError> {
        self.view.sync(f);
        let n = self.view.n();
        let lower: Vec<usize> = (0..n).filter(|&a| (0..n).any(|k| self.view.lt(a, k))).collect();
        let upper: Vec<usize> = (0..n).filter(|&a| (0..n).any(|k| self.view.lt(k, a))).collect();
        let c_min = self.min.observe(self.view.least_of(&lower));
        let c_max = self.max.observe(self.view.greatest_of(&upper));
        let height = self.view.height();
        let out = match self.previous {
            None => Hypothesis::Conjecture(self.omega),
            Some((h, pmin, pmax)) => {
                if h == height {
                    self.chains.get(&height).copied().into()
                } else if pmin >= pmax {
                    Hypothesis::Conjecture(self.omega)
                } else {
                    Hypothesis::Conjecture(self.omega_star)
                }
            }
        };
        self.previous = Some((height, c_min, c_max));
        Ok(out)
    }
}

/// Learner for padded combs: says `P̃_0` when some pair looks like its two
/// lowest spine points, otherwise the least `P̃_k` (`k > 0`) the stream
/// embeds into.
#[derive(Debug, Clone)]
pub struct ExPoset {
    bottomless: usize,
    combs: Vec<(usize, AgeOracle)>,
    view: OrderView,
}

impl ExPoset {
    pub fn new(family: &Family) -> Result<Self, LearnerError> {
        require_order(family)?;
        let mut combs = Vec::new();
        for (code, m) in family.members.iter().enumerate() {
            match m {
                C::Tilde(x) => match **x {
                    C::PosetP(0) => {}
                    C::PosetP(k) => combs.push((k, code, m.clone())),
                    _ => return Err(LearnerError::Config(format!("{m} is not a padded comb"))),
                },
                _ => return Err(LearnerError::Config(format!("{m} is not a padded comb"))),
            }
        }
        combs.sort_by_key(|c| c.0);
        Ok(ExPoset {
            bottomless: code_or_config(family, &C::tilde(C::PosetP(0)))?,
            combs: combs.into_iter().map(|(_, code, m)| (code, AgeOracle::new(m))).collect(),
            view: OrderView::default(),
        })
    }

    /// `∃a,b ∀c: a < b ∧ (c = a ∨ b ≤ c ∨ c is isolated)`.
    fn guard(&self) -> bool {
        let n = self.view.n();
        let busy: Vec<usize> = (0..n).filter(|&c| !self.view.isolated(c)).collect();
        busy.iter().any(|&b| {
            let mut missing = busy.iter().filter(|&&c| !self.view.le(b, c));
            match (missing.next(), missing.next()) {
                (Some(&a), None) => self.view.lt(a, b),
                _ => false,
            }
        })
    }
}

impl Learner for ExPoset {
    fn id(&self) -> String {
        "ex_poset".into()
    }

    fn step(&mut self, f: &FiniteFragment) -> Result<Hypothesis, LearnerError> {
        self.view.sync(f);
        if self.guard() {
            return Ok(Hypothesis::Conjecture(self.bottomless));
        }
        Ok(self.combs.iter_mut().find_map(|(code, o)| o.contains(f).then_some(*code)).into())
    }
}

/// Ex-learner for a pair read off a partial learner: repeats the last of its
/// outputs that names one of the two.
pub struct ExFromPl {
    inner: Box<dyn Learner>,
    pair: (usize, usize),
    last: Hypothesis,
}

impl ExFromPl {
    pub fn new(inner: Box<dyn Learner>, pair: (usize, usize)) -> Self {
        ExFromPl { inner, pair, last: Hypothesis::Question }
    }
}

impl Learner for ExFromPl {
    fn id(&self) -> String {
        format!("ex_from_pl({},{})", self.pair.0, self.pair.1)
    }

    fn step(&mut self, f: &FiniteFragment) -> Result<Hypothesis, LearnerError> {
        let h = self.inner.step(f)?;
        if h.code().is_some_and(|c| c == self.pair.0 || c == self.pair.1) {
            self.last = h;
        }
        Ok(self.last)
    }
}

/// Co-learner from a reduction to equality of sequences: names each member
/// once, the first time the stream's output contradicts that member's.
pub struct IdToCo {
    operator: Box<dyn ReductionOperator>,
    references: Vec<Vec<u64>>,
    emitted: BTreeSet<usize>,
}

impl IdToCo {
    pub fn new(family: &Family, mut operator: Box<dyn ReductionOperator>, depth: usize) -> Result<Self, LearnerError> {
        let mut references = Vec::new();
        for a in &family.members {
            operator.reset();
            match operator.apply(&reductions::canonical_stage(a, depth - 1))? {
                OutputPrefix::Flat(v) => references.push(v),
                OutputPrefix::Columnar(_) => return Err(LearnerError::Config("operator output is not flat".into())),
            }
        }
        operator.reset();
        Ok(IdToCo { operator, references, emitted: BTreeSet::new() })
    }
}

impl Learner for IdToCo {
    fn id(&self) -> String {
        "id_to_co".into()
    }

    fn step(&mut self, f: &FiniteFragment) -> Result<Hypothesis, LearnerError> {
        let OutputPrefix::Flat(out) = self.operator.apply(f)? else {
            return Err(LearnerError::Config("operator output is not flat".into()));
        };
        let hit = (0..self.references.len())
            .find(|i| !self.emitted.contains(i) && out.iter().zip(&self.references[*i]).any(|(x, y)| x != y));
        if let Some(i) = hit {
            self.emitted.insert(i);
        }
        Ok(hit.into())
    }
}

/// Always the same answer.
#[derive(Debug, Clone)]
pub struct Constant(pub Hypothesis);

impl Learner for Constant {
    fn id(&self) -> String {
        format!("const({})", self.0)
    }

    fn step(&mut self, _: &FiniteFragment) -> Result<Hypothesis, LearnerError> {
        Ok(self.0)
    }
}

/// Configuration names accepted by [`build_learner`].
pub const LEARNER_NAMES: &[&str] = &[
    "fin",
    "co",
    "nus",
    "dec(nus)",
    "pl_pairwise",
    "pl_e3",
    "pl_fstar",
    "ex_minmax",
    "ex_poset",
    "ex_min_embed",
    "ex_from_pl",
    "id_to_co",
];

fn call<'a>(name: &'a str, head: &str) -> Option<&'a str> {
    name.strip_prefix(head)?.strip_prefix('(')?.strip_suffix(')')
}

/// Builds a learner for `family` from its configuration name. Besides
/// [`LEARNER_NAMES`] this accepts `dec(<name>)`, `ex_from_pl(i,j)`,
/// `ex_finite_from_erange` and `const(<code or ?>)`.
pub fn build_learner(name: &str, family: &Family) -> Result<Box<dyn Learner>, LearnerError> {
    let name = name.trim();
    if let Some(inner) = call(name, "dec") {
        return Ok(Box::new(Decisive::new(build_learner(inner, family)?)));
    }
    if let Some(args) = call(name, "const") {
        let h = args.parse().map_err(|_| LearnerError::Unknown(name.into()))?;
        return Ok(Box::new(Constant(h)));
    }
    if let Some(args) = call(name, "ex_from_pl") {
        let codes: Vec<usize> = args
            .split(',')
            .map(|a| a.trim().parse())
            .collect::<Result<_, _>>()
            .map_err(|_| LearnerError::Unknown(name.into()))?;
        let [i, j] = codes[..] else { return Err(LearnerError::Unknown(name.into())) };
        if i.max(j) >= family.len() {
            return Err(LearnerError::Config(format!("pair ({i}, {j}) outside {}", family.name)));
        }
        return Ok(Box::new(ExFromPl::new(Box::new(PlPairwise::from_family(family)?), (i, j))));
    }
    Ok(match name {
        "fin" => Box::new(FinLearner::from_family(family)?),
        "co" => Box::new(CoLearner::from_family(family)?),
        "nus" => Box::new(NusLearner::from_family(family)?),
        "pl_pairwise" => Box::new(PlPairwise::from_family(family)?),
        "pl_e3" => {
            let op = reductions::build_operator("erange_to_e3", family)?;
            Box::new(PlFromE3::from_operator(family, op, REFERENCE_DEPTH)?)
        }
        "pl_fstar" => Box::new(PlFstar::new(family)?),
        "ex_minmax" => Box::new(ExMinMax::new(family)?),
        "ex_poset" => Box::new(ExPoset::new(family)?),
        "ex_min_embed" => Box::new(ExMinEmbed::new(family)?),
        "ex_finite_from_erange" => Box::new(ex_finite_from_erange(family)?),
        "ex_from_pl" => return build_learner("ex_from_pl(0,1)", family),
        "id_to_co" => {
            let op = reductions::build_operator("fin_to_eqnat", family)?;
            Box::new(IdToCo::new(family, op, REFERENCE_DEPTH)?)
        }
        _ => return Err(LearnerError::Unknown(name.into())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use Hypothesis::{Conjecture as K, Question as Q};

    #[test]
    fn decisive_case_table() {
        let (a, b) = (K(0), K(1));
        assert_eq!(DecisiveFilter::apply(&[a, b, a, a]), vec![a, b, b, b]);
        assert_eq!(DecisiveFilter::apply(&[Q, a, a, b]), vec![Q, a, a, b]);
    }

    #[test]
    fn hypothesis_json() {
        let t = Transcript::from_entries(vec![Q, K(3)]);
        assert_eq!(serde_json::to_string(&t).unwrap(), r#"["?",3]"#);
        assert_eq!(Transcript::from_jsonl(&t.to_jsonl()).unwrap(), t);
    }

    #[test]
    fn budget_counts_changes_only() {
        let mut b = MindChangeBudget::new(1);
        assert!(b.observe(K(0)) && b.observe(Q) && b.observe(K(0)) && b.observe(K(1)));
        assert_eq!(b.remaining(), 0);
        assert!(!b.observe(K(0)));
    }
}
