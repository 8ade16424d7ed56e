//! Copy builders that play against a learner or a reduction operator and
//! try to make it fail, one domain element per stage.
//!
//! Limit behaviour is judged at escalating checkpoints `H = first, 2·first,
//! …, cap`: a wait that has lasted at least `H/2` stages at checkpoint `H`
//! is treated as never ending. Every outcome is a pure function of its
//! [`DuelRecord`], so replaying a record reproduces the outcome exactly.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{audit_shape, AgeOracle, CatalogError, CatalogStructure as C, CopyBuilder, Family};
use crate::learners::{build_learner, Hypothesis, Learner, LearnerError};
use crate::logic::{sigma1_leq, LogicError};
use crate::reductions::{build_operator, OutputPrefix, ReductionError, ReductionOperator};
use crate::structures::{embed_finite, FiniteFragment, StructureError};

#[derive(Debug, Error)]
pub enum AdversaryError {
    #[error("configuration rejected: {0}")]
    Config(String),
    #[error("unknown adversary `{0}`")]
    Unknown(String),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Structure(#[from] StructureError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CertificateKind {
    /// Mind changes kept coming between the two stages.
    InfinitelyManyMindChanges {
        window: (usize, usize),
        changes: usize,
    },
    StuckWrong {
        hypothesis: Hypothesis,
        truth: String,
    },
    /// The code was emitted, abandoned and emitted again at these stages.
    AbandonReturn {
        code: usize,
        stages: [usize; 3],
    },
    /// A co-learner named the structure it was shown.
    CorrectCodeEmitted {
        code: usize,
        stage: usize,
    },
    /// A co-learner never named a structure it was not shown.
    MissingCode {
        code: usize,
    },
    NeverCommits,
    MultipleCommitments {
        first: usize,
        second: usize,
    },
    RangeViolation {
        code: u64,
        stage: usize,
    },
    /// Output positions where the operator contradicts what a reduction
    /// must output on the structure being built.
    PrefixDisagreement {
        positions: Vec<usize>,
    },
    /// The true code was missing from a whole window of the final half.
    RecurrenceGap {
        start: usize,
        width: usize,
    },
    /// A wrong code kept being emitted over the final half.
    PlateauMissing {
        code: usize,
        before: usize,
        after: usize,
    },
    /// Something else was emitted after the true code first appeared.
    AbandonedCorrect {
        stage: usize,
    },
    BudgetExceeded {
        changes: usize,
        budget: usize,
    },
}

/// Per-stage checks on the fragments the adversary produced.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapeAudit {
    pub stages: usize,
    /// Stages whose fragment did not extend the previous one.
    pub non_monotone: Vec<usize>,
    /// Stages whose fragment had the wrong shape.
    pub bad_shape: Vec<usize>,
}

impl ShapeAudit {
    pub fn ok(&self) -> bool {
        self.non_monotone.is_empty() && self.bad_shape.is_empty()
    }

    fn record(&mut self, stage: usize, prev: Option<&(usize, Vec<bool>)>, f: &FiniteFragment, shape_ok: bool) {
        self.stages = stage + 1;
        if let Some((n, facts)) = prev {
            if f.size() < *n || (*n > 0 && f.element_facts(n - 1) != *facts) {
                self.non_monotone.push(stage);
            }
        }
        if !shape_ok {
            self.bad_shape.push(stage);
        }
    }
}

fn last_facts(f: &FiniteFragment) -> (usize, Vec<bool>) {
    let n = f.size();
    (n, if n > 0 { f.element_facts(n - 1) } else { Vec::new() })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureCertificate {
    pub adversary: String,
    pub opponent: String,
    pub seed: u64,
    /// The checkpoint at which the certificate was issued.
    pub horizon: usize,
    pub kind: CertificateKind,
    /// The opponent's last outputs, oldest first.
    pub excerpt: Vec<String>,
    pub audit: ShapeAudit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum DuelOutcome {
    Certificate(FailureCertificate),
    Inconclusive { adversary: String, opponent: String, seed: u64, stages: usize, reason: String },
}

impl DuelOutcome {
    pub fn certificate(&self) -> Option<&FailureCertificate> {
        match self {
            DuelOutcome::Certificate(c) => Some(c),
            DuelOutcome::Inconclusive { .. } => None,
        }
    }

    pub fn kind(&self) -> Option<&CertificateKind> {
        self.certificate().map(|c| &c.kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuelConfig {
    /// Recorded with the outcome. The builders here are deterministic and do
    /// not draw on it.
    pub seed: u64,
    pub first_checkpoint: usize,
    pub cap: usize,
    /// Disagreement indices to collect before certifying, where evidence
    /// accumulates rather than arriving at once.
    pub evidence: usize,
}

impl Default for DuelConfig {
    fn default() -> Self {
        DuelConfig { seed: 0, first_checkpoint: 256, cap: 1 << 14, evidence: 10 }
    }
}

impl DuelConfig {
    fn is_checkpoint(&self, stage: usize) -> bool {
        let h = stage + 1;
        h >= self.first_checkpoint && h.is_multiple_of(self.first_checkpoint) && (h / self.first_checkpoint).is_power_of_two()
            || h == self.cap
    }
}

/// A wait that began at `since` has lasted half the checkpoint.
fn quiet(checkpoint: usize, since: usize) -> bool {
    checkpoint - since.min(checkpoint) >= checkpoint / 2
}

/// Records a learner's outputs while it is fed.
struct Feed<'a> {
    learner: &'a mut dyn Learner,
    outputs: Vec<Hypothesis>,
}

impl<'a> Feed<'a> {
    fn new(learner: &'a mut dyn Learner) -> Self {
        Feed { learner, outputs: Vec::new() }
    }

    fn step(&mut self, f: &FiniteFragment) -> Result<Hypothesis, AdversaryError> {
        let h = self.learner.step(f)?;
        self.outputs.push(h);
        Ok(h)
    }

    fn excerpt(&self) -> Vec<String> {
        self.outputs[self.outputs.len().saturating_sub(16)..].iter().map(Hypothesis::to_string).collect()
    }

    fn last(&self) -> Hypothesis {
        self.outputs.last().copied().unwrap_or(Hypothesis::Question)
    }
}

struct Ctx<'a> {
    adversary: &'a str,
    opponent: String,
    cfg: DuelConfig,
    audit: ShapeAudit,
}

impl Ctx<'_> {
    fn certificate(&self, horizon: usize, kind: CertificateKind, excerpt: Vec<String>) -> DuelOutcome {
        DuelOutcome::Certificate(FailureCertificate {
            adversary: self.adversary.into(),
            opponent: self.opponent.clone(),
            seed: self.cfg.seed,
            horizon,
            kind,
            excerpt,
            audit: self.audit.clone(),
        })
    }

    fn inconclusive(&self, stages: usize, reason: impl Into<String>) -> DuelOutcome {
        DuelOutcome::Inconclusive {
            adversary: self.adversary.into(),
            opponent: self.opponent.clone(),
            seed: self.cfg.seed,
            stages,
            reason: reason.into(),
        }
    }
}

fn ray_plus_isolated(ray: usize, isolated: usize) -> FiniteFragment {
    let r = if ray >= 2 { C::FiniteRay(ray).canonical(ray) } else { C::Iso(ray).canonical(ray) };
    r.disjoint_union(&C::Iso(isolated).canonical(isolated)).expect("both graphs")
}

fn isomorphic(f: &FiniteFragment, g: &FiniteFragment) -> bool {
    f.size() == g.size() && f.tuple_count() == g.tuple_count() && embed_finite(f, g).unwrap_or(false)
}

fn member_code(family: &Family, s: &C) -> Result<usize, AdversaryError> {
    family.code_of(s).ok_or_else(|| AdversaryError::Config(format!("{s} is not a member of {}", family.name)))
}

/// Against Ex-learners of rays with isolated points: the ray grows by one
/// vertex after each even stage at which the learner names the current
/// finite ray, and otherwise the copy only gains isolated vertices.
pub fn adv_vs_ex_rays(learner: &mut dyn Learner, family: &Family, cfg: DuelConfig) -> Result<DuelOutcome, AdversaryError> {
    let ray_code = |n: usize| family.code_of(&C::du(C::FiniteRay(n), C::IsoInf));
    member_code(family, &C::du(C::Ray, C::IsoInf))?;
    let mut ctx = Ctx { adversary: "ex_rays", opponent: learner.id(), cfg, audit: ShapeAudit::default() };
    let mut feed = Feed::new(learner);
    let mut f = FiniteFragment::empty(crate::structures::Signature::graph());
    let (mut ray, mut isolated) = (0usize, 0usize);
    let mut ray_end: Option<usize> = None;
    // Elements still to add, `true` for a ray vertex.
    let mut queue: Vec<bool> = vec![true, true];
    let mut expansions: Vec<usize> = Vec::new();
    let mut prev = None;
    for stage in 0..cfg.cap {
        let grow_ray = if queue.is_empty() { false } else { queue.remove(0) };
        let x = f.push_element();
        if grow_ray {
            if let Some(e) = ray_end {
                f.insert(0, vec![e, x])?;
                f.insert(0, vec![x, e])?;
            }
            ray_end = Some(x);
            ray += 1;
        } else {
            isolated += 1;
        }
        ctx.audit.record(stage, prev.as_ref(), &f, isomorphic(&f, &ray_plus_isolated(ray, isolated)));
        prev = Some(last_facts(&f));
        let h = feed.step(&f)?;
        // With `f.size()` even and at least 2 the next two elements are decided.
        if f.size().is_multiple_of(2) {
            let expansionary = ray >= 2 && h.code().is_some() && h.code() == ray_code(ray);
            if expansionary {
                expansions.push(stage);
            }
            queue = vec![expansionary, false];
        }
        if cfg.is_checkpoint(stage) {
            let h_cp = stage + 1;
            let since = expansions.last().map_or(0, |s| s + 1);
            if quiet(h_cp, since) {
                let truth = C::du(C::FiniteRay(ray.max(2)), C::IsoInf).to_string();
                return Ok(ctx.certificate(h_cp, CertificateKind::StuckWrong { hypothesis: feed.last(), truth }, feed.excerpt()));
            }
            if h_cp >= cfg.cap {
                let window = (expansions.first().copied().unwrap_or(0), stage);
                let changes = crate::learners::Transcript::from_entries(feed.outputs.clone()).mind_changes();
                return Ok(ctx.certificate(h_cp, CertificateKind::InfinitelyManyMindChanges { window, changes }, feed.excerpt()));
            }
        }
    }
    Ok(ctx.inconclusive(cfg.cap, "cap reached between checkpoints"))
}

/// Against learners of the comb posets: build the bottomless comb until it
/// is named, detour to a comb with more teeth than the copy has elements
/// until that is named, then return to the bottomless comb.
pub fn adv_vs_nus_poset(learner: &mut dyn Learner, family: &Family, cfg: DuelConfig) -> Result<DuelOutcome, AdversaryError> {
    let home = C::tilde(C::PosetP(0));
    let home_code = member_code(family, &home)?;
    let mut ctx = Ctx { adversary: "nus_poset", opponent: learner.id(), cfg, audit: ShapeAudit::default() };
    let mut feed = Feed::new(learner);
    let mut builder = CopyBuilder::new(home.clone())?;
    // Stages at which the phases ended, and the detour's code.
    let mut marks: Vec<usize> = Vec::new();
    let mut detour: Option<usize> = None;
    let mut since = 0;
    let mut prev = None;
    for stage in 0..cfg.cap {
        builder.reveal_next();
        let f = builder.fragment().clone();
        ctx.audit.record(stage, prev.as_ref(), &f, builder.verify());
        prev = Some(last_facts(&f));
        let h = feed.step(&f)?;
        match (marks.len(), h.code()) {
            (0, Some(c)) if c == home_code => {
                let k = f.size() + 1;
                let target = C::tilde(C::PosetP(k));
                let Some(code) = family.code_of(&target) else {
                    return Ok(ctx.inconclusive(stage + 1, format!("detour target {target} is beyond the listed family")));
                };
                builder.retarget(target, 8 * (k + f.size()) + 16)?;
                marks.push(stage);
                detour = Some(code);
                since = stage + 1;
            }
            (1, Some(c)) if Some(c) == detour => {
                builder.retarget(home.clone(), 8 * f.size() + 16)?;
                marks.push(stage);
                since = stage + 1;
            }
            (2, Some(c)) if c == home_code => {
                let stages = [marks[0], marks[1], stage];
                return Ok(ctx.certificate(
                    stage + 1,
                    CertificateKind::AbandonReturn { code: home_code, stages },
                    feed.excerpt(),
                ));
            }
            _ => {}
        }
        if cfg.is_checkpoint(stage) && quiet(stage + 1, since) {
            let truth = builder.target().to_string();
            return Ok(ctx.certificate(
                stage + 1,
                CertificateKind::StuckWrong { hypothesis: feed.last(), truth },
                feed.excerpt(),
            ));
        }
    }
    Ok(ctx.inconclusive(cfg.cap, "cap reached between checkpoints"))
}

/// Against co-learners, for members `a` and `b` where every existential
/// fact of `a` holds in `b`: build `a`, and switch to `b` the moment the
/// learner names `b`.
pub fn adv_vs_co_comparable(
    learner: &mut dyn Learner,
    family: &Family,
    (a, b): (usize, usize),
    cfg: DuelConfig,
) -> Result<DuelOutcome, AdversaryError> {
    let (sa, sb) = match (family.members.get(a), family.members.get(b)) {
        (Some(x), Some(y)) => (x.clone(), y.clone()),
        _ => return Err(AdversaryError::Config(format!("codes ({a}, {b}) outside {}", family.name))),
    };
    if !(sigma1_leq(&sa, &sb)? && !sigma1_leq(&sb, &sa)?) {
        return Err(AdversaryError::Config(format!("{sa} is not strictly below {sb}")));
    }
    let mut ctx = Ctx { adversary: "co_comparable", opponent: learner.id(), cfg, audit: ShapeAudit::default() };
    let mut feed = Feed::new(learner);
    let mut builder = CopyBuilder::new(sa)?;
    let mut prev = None;
    for stage in 0..cfg.cap {
        builder.reveal_next();
        let f = builder.fragment().clone();
        ctx.audit.record(stage, prev.as_ref(), &f, builder.verify());
        prev = Some(last_facts(&f));
        if feed.step(&f)?.code() == Some(b) {
            builder.retarget(sb, 8 * f.size() + 16)?;
            return Ok(ctx.certificate(stage + 1, CertificateKind::CorrectCodeEmitted { code: b, stage }, feed.excerpt()));
        }
        if cfg.is_checkpoint(stage) && quiet(stage + 1, 0) {
            return Ok(ctx.certificate(stage + 1, CertificateKind::MissingCode { code: b }, feed.excerpt()));
        }
    }
    Ok(ctx.inconclusive(cfg.cap, "cap reached between checkpoints"))
}

/// Against Fin-learners: build member `a` until the learner commits; if it
/// commits to `a`, turn the committed fragment into a copy of another
/// member that contains it.
pub fn adv_vs_fin(learner: &mut dyn Learner, family: &Family, a: usize, cfg: DuelConfig) -> Result<DuelOutcome, AdversaryError> {
    let sa = family.members.get(a).cloned().ok_or_else(|| AdversaryError::Config(format!("code {a} outside {}", family.name)))?;
    let mut ctx = Ctx { adversary: "fin", opponent: learner.id(), cfg, audit: ShapeAudit::default() };
    let mut feed = Feed::new(learner);
    let mut builder = CopyBuilder::new(sa.clone())?;
    let mut commitment: Option<(usize, usize)> = None;
    let mut prev = None;
    for stage in 0..cfg.cap {
        builder.reveal_next();
        let f = builder.fragment().clone();
        ctx.audit.record(stage, prev.as_ref(), &f, builder.verify());
        prev = Some(last_facts(&f));
        let h = feed.step(&f)?;
        match (commitment, h.code()) {
            (None, Some(c)) if c != a => {
                let truth = sa.to_string();
                return Ok(ctx.certificate(stage + 1, CertificateKind::StuckWrong { hypothesis: h, truth }, feed.excerpt()));
            }
            (None, Some(c)) => {
                let other =
                    (0..family.len()).filter(|&j| j != a).find(|&j| AgeOracle::new(family.members[j].clone()).contains(&f));
                let Some(j) = other else {
                    return Ok(ctx.inconclusive(stage + 1, "the committed fragment embeds into no other member"));
                };
                builder.retarget(family.members[j].clone(), 8 * f.size() + 16)?;
                commitment = Some((c, stage));
            }
            (Some((c, s)), Some(d)) if d != c => {
                return Ok(ctx.certificate(
                    stage + 1,
                    CertificateKind::MultipleCommitments { first: s, second: stage },
                    feed.excerpt(),
                ));
            }
            _ => {}
        }
        if cfg.is_checkpoint(stage) {
            let kind = match commitment {
                None => CertificateKind::NeverCommits,
                Some((c, _)) => {
                    CertificateKind::StuckWrong { hypothesis: Hypothesis::Conjecture(c), truth: builder.target().to_string() }
                }
            };
            return Ok(ctx.certificate(stage + 1, kind, feed.excerpt()));
        }
    }
    Ok(ctx.inconclusive(cfg.cap, "cap reached between checkpoints"))
}

fn flat_of(out: &OutputPrefix) -> Result<&[u64], AdversaryError> {
    out.flat().ok_or_else(|| AdversaryError::Config("operator output is not a flat sequence".into()))
}

/// Against operators claimed to reduce a two-member graph family to
/// sequence equality on every input: feed isolated vertices until the
/// output leaves what the operator produces on one member's canonical copy,
/// then complete a copy of that member.
pub fn adv_vs_total_id_operator(
    op: &mut dyn ReductionOperator,
    family: &Family,
    cfg: DuelConfig,
) -> Result<DuelOutcome, AdversaryError> {
    if family.len() != 2 {
        return Err(AdversaryError::Config(format!("{} must have exactly two members", family.name)));
    }
    // Each member's canonical copy, revealed alongside the adversary's copy,
    // and the operator's output on it.
    let mut reference_copies = Vec::new();
    for m in &family.members {
        reference_copies.push((CopyBuilder::new(m.clone())?, op.fresh()));
    }
    let mut references: Vec<Vec<u64>> = vec![Vec::new(); 2];
    op.reset();
    let mut ctx = Ctx { adversary: "total_id_operator", opponent: op.id(), cfg, audit: ShapeAudit::default() };
    let mut builder = CopyBuilder::new(C::IsoInf)?;
    let mut prev = None;
    let mut last_len = 0;
    let mut grew_at = 0;
    let mut trap: Option<(usize, usize, usize)> = None;
    let mut excerpt: Vec<String>;
    for stage in 0..cfg.cap {
        builder.reveal_next();
        let f = builder.fragment().clone();
        ctx.audit.record(stage, prev.as_ref(), &f, builder.verify());
        prev = Some(last_facts(&f));
        for (m, (copy, shadow)) in reference_copies.iter_mut().enumerate() {
            copy.reveal_next();
            references[m] = flat_of(&shadow.apply(copy.fragment())?)?.to_vec();
        }
        let out = op.apply(&f)?;
        let values = flat_of(&out)?.to_vec();
        excerpt = values[values.len().saturating_sub(16)..].iter().map(u64::to_string).collect();
        if values.len() > last_len {
            last_len = values.len();
            grew_at = stage;
        }
        match trap {
            None => {
                let deviation = references
                    .iter()
                    .enumerate()
                    .find_map(|(m, r)| (0..values.len().min(r.len())).find(|&k| values[k] != r[k]).map(|k| (m, k)));
                if let Some((m, k)) = deviation {
                    builder.retarget(family.members[m].clone(), 8 * f.size() + 16)?;
                    trap = Some((m, k, stage));
                }
            }
            Some((m, k, _)) => {
                // Once the copy leaves the other member's age it is a copy of
                // member `m`, whose image must be the reference; position `k`
                // was fixed before the switch.
                if !AgeOracle::new(family.members[1 - m].clone()).contains(&f) {
                    if values[k] == references[m][k] {
                        return Ok(ctx.inconclusive(stage + 1, format!("operator revised position {k}")));
                    }
                    let positions = vec![k];
                    return Ok(ctx.certificate(stage + 1, CertificateKind::PrefixDisagreement { positions }, excerpt));
                }
            }
        }
        if cfg.is_checkpoint(stage) && trap.is_none() {
            let reason = if last_len == 0 {
                "precondition rejected: the operator is undefined on the isolated-vertex stream".to_string()
            } else if quiet(stage + 1, grew_at) {
                format!("output stopped growing at stage {grew_at}; the operator behaves as a partial one")
            } else {
                continue;
            };
            return Ok(ctx.inconclusive(stage + 1, reason));
        }
    }
    Ok(ctx.inconclusive(cfg.cap, "no deviation from either reference within the cap"))
}

/// Against columnar operators on chains with isolated points: keep the copy
/// a copy of the ω-chain with isolated points, alternating one chain
/// extension with isolated padding until column 0 disagrees with the
/// operator's output on the canonical copy at a fresh index.
pub fn adv_vs_e3_operator_fstar(op: &mut dyn ReductionOperator, cfg: DuelConfig) -> Result<DuelOutcome, AdversaryError> {
    let limit = C::tilde(C::Omega);
    op.reset();
    let mut reference_copy = CopyBuilder::new(limit.clone())?;
    let mut shadow = op.fresh();
    let mut ctx = Ctx { adversary: "e3_fstar", opponent: op.id(), cfg, audit: ShapeAudit::default() };
    let mut f = FiniteFragment::empty(crate::structures::Signature::order());
    let mut chain: Vec<usize> = Vec::new();
    let mut found: Vec<usize> = Vec::new();
    let mut extend_next = true;
    let mut since = 0;
    let mut prev = None;
    let templates = [limit.clone()];
    let mut excerpt: Vec<String>;
    for stage in 0..cfg.cap {
        let x = f.push_element();
        f.insert(0, vec![x, x])?;
        if extend_next {
            for &c in &chain {
                f.insert(0, vec![c, x])?;
            }
            chain.push(x);
            extend_next = false;
        }
        ctx.audit.record(stage, prev.as_ref(), &f, audit_shape(&f, &templates));
        prev = Some(last_facts(&f));
        let out = op.apply(&f)?;
        let column = out
            .columns()
            .and_then(|c| c.first())
            .ok_or_else(|| AdversaryError::Config("operator output has no column 0".into()))?;
        excerpt = column[column.len().saturating_sub(16)..].iter().map(u64::to_string).collect();
        reference_copy.reveal_next();
        let r = shadow.apply(reference_copy.fragment())?;
        let reference = r.columns().and_then(|c| c.first()).cloned().unwrap_or_default();
        let fresh = (found.last().map_or(0, |n| n + 1)..column.len().min(reference.len())).find(|&n| column[n] != reference[n]);
        if let Some(n) = fresh {
            found.push(n);
            extend_next = true;
            since = stage + 1;
            if found.len() >= cfg.evidence {
                let positions = found.clone();
                return Ok(ctx.certificate(stage + 1, CertificateKind::PrefixDisagreement { positions }, excerpt));
            }
        }
        if cfg.is_checkpoint(stage) && quiet(stage + 1, since) {
            return Ok(ctx.inconclusive(stage + 1, format!("no fresh disagreement after index {:?}", found.last())));
        }
    }
    Ok(ctx.inconclusive(cfg.cap, format!("{} disagreement indices within the cap", found.len())))
}

pub const ADVERSARY_NAMES: &[&str] = &["ex_rays", "nus_poset", "co_comparable", "fin", "total_id_operator", "e3_fstar"];

/// Everything needed to replay a duel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuelRecord {
    pub adversary: String,
    /// A learner name, or an operator name for the operator adversaries.
    pub opponent: String,
    pub family: String,
    pub config: DuelConfig,
}

impl DuelRecord {
    /// The record with the family each adversary plays on by default.
    pub fn new(adversary: &str, opponent: &str, config: DuelConfig) -> Result<Self, AdversaryError> {
        let family = match adversary {
            "ex_rays" => "rays",
            "nus_poset" => "posets",
            "co_comparable" => "tilde_chains_34",
            "fin" => "cycles_id",
            "total_id_operator" => "cycles_fin",
            "e3_fstar" => "fstar",
            other => return Err(AdversaryError::Unknown(other.into())),
        };
        Ok(DuelRecord { adversary: adversary.into(), opponent: opponent.into(), family: family.into(), config })
    }
}

/// Runs the duel a record describes.
pub fn run_duel(record: &DuelRecord) -> Result<DuelOutcome, AdversaryError> {
    let family = Family::parse(&record.family)?;
    let cfg = record.config;
    let learner = || build_learner(&record.opponent, &family);
    match record.adversary.as_str() {
        "ex_rays" => adv_vs_ex_rays(learner()?.as_mut(), &family, cfg),
        "nus_poset" => adv_vs_nus_poset(learner()?.as_mut(), &family, cfg),
        "co_comparable" => adv_vs_co_comparable(learner()?.as_mut(), &family, (0, 1), cfg),
        "fin" => {
            let target = family.len().checked_sub(1).ok_or_else(|| AdversaryError::Config("empty family".into()))?;
            adv_vs_fin(learner()?.as_mut(), &family, target, cfg)
        }
        "total_id_operator" => adv_vs_total_id_operator(build_operator(&record.opponent, &family)?.as_mut(), &family, cfg),
        "e3_fstar" => adv_vs_e3_operator_fstar(build_operator(&record.opponent, &family)?.as_mut(), cfg),
        other => Err(AdversaryError::Unknown(other.into())),
    }
}

/// Runs the duel again and compares the serialized outcomes byte for byte.
pub fn replay_matches(record: &DuelRecord, outcome: &DuelOutcome) -> Result<bool, AdversaryError> {
    let again = run_duel(record)?;
    let ser = |o: &DuelOutcome| serde_json::to_string(o).expect("outcomes serialize");
    Ok(ser(&again) == ser(outcome))
}
