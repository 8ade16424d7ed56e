//! Finite-horizon checks of the convergence criteria, and the experiment
//! matrix that runs them.
//!
//! Limit notions are read off a finite transcript with three knobs:
//! "eventually" is a stable tail of `tail` entries, "infinitely often" is
//! recurrence in every `window`-wide window of the final half, and "only
//! finitely often" is a count that stays constant over the final half.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversaries::CertificateKind;
use crate::catalog::{CatalogError, Family, Presentation};
use crate::learners::{build_learner, run_presentation, Hypothesis, LearnerError, Transcript};
use crate::reductions::{build_operator, verify_reduction, ReductionError, ReductionReport, Relation};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration rejected: {0}")]
    Config(String),
    #[error("cannot parse criterion `{0}`")]
    Criterion(String),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CriterionKind {
    Ex,
    Fin,
    /// Ex with at most this many mind changes.
    AlphaFin(usize),
    Co,
    Pl,
    NUs,
    Dec,
}

impl fmt::Display for CriterionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CriterionKind::Ex => f.write_str("ex"),
            CriterionKind::Fin => f.write_str("fin"),
            CriterionKind::AlphaFin(b) => write!(f, "alpha_fin({b})"),
            CriterionKind::Co => f.write_str("co"),
            CriterionKind::Pl => f.write_str("pl"),
            CriterionKind::NUs => f.write_str("nus"),
            CriterionKind::Dec => f.write_str("dec"),
        }
    }
}

impl FromStr for CriterionKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        Ok(match s.as_str() {
            "ex" => CriterionKind::Ex,
            "fin" => CriterionKind::Fin,
            "co" => CriterionKind::Co,
            "pl" => CriterionKind::Pl,
            "nus" => CriterionKind::NUs,
            "dec" => CriterionKind::Dec,
            _ => {
                let budget = s
                    .strip_prefix("alpha_fin(")
                    .and_then(|r| r.strip_suffix(')'))
                    .and_then(|b| b.trim().parse().ok())
                    .ok_or_else(|| HarnessError::Criterion(s.clone()))?;
                CriterionKind::AlphaFin(budget)
            }
        })
    }
}

impl Serialize for CriterionKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CriterionKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

pub const DEFAULT_HORIZON: usize = 512;
pub const DEFAULT_TAIL: usize = 64;
pub const DEFAULT_WINDOW: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionSpec {
    pub kind: CriterionKind,
    pub horizon: usize,
    pub tail: usize,
    pub window: usize,
}

impl CriterionSpec {
    pub fn new(kind: CriterionKind) -> Self {
        CriterionSpec { kind, horizon: DEFAULT_HORIZON, tail: DEFAULT_TAIL, window: DEFAULT_WINDOW }
    }

    pub fn with_horizon(self, horizon: usize) -> Self {
        CriterionSpec { horizon, ..self }
    }

    pub fn with_tail(self, tail: usize) -> Self {
        CriterionSpec { tail, ..self }
    }

    pub fn with_window(self, window: usize) -> Self {
        CriterionSpec { window, ..self }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.window == 0 || self.window >= self.horizon || self.tail == 0 || self.tail > self.horizon {
            return Err(HarnessError::Config(format!(
                "need horizon > window > 0 and 0 < tail ≤ horizon, got {}/{}/{}",
                self.horizon, self.window, self.tail
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail { certificate: Option<CertificateKind>, detail: String, excerpt: Vec<String> },
    Inconclusive { reason: String },
    Skipped { reason: String },
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail { .. } => "FAIL",
            Verdict::Inconclusive { .. } => "INCONCLUSIVE",
            Verdict::Skipped { .. } => "SKIPPED",
        }
    }

    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    pub fn is_fail(&self) -> bool {
        matches!(self, Verdict::Fail { .. })
    }

    fn fail(kind: CertificateKind, t: &[Hypothesis], around: usize) -> Verdict {
        let lo = around.saturating_sub(8);
        let hi = (around + 8).min(t.len());
        Verdict::Fail {
            detail: format!("{kind:?}"),
            certificate: Some(kind),
            excerpt: t[lo.min(hi)..hi].iter().map(Hypothesis::to_string).collect(),
        }
    }

    fn inconclusive(reason: impl Into<String>) -> Verdict {
        Verdict::Inconclusive { reason: reason.into() }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass => f.write_str("PASS"),
            Verdict::Fail { detail, .. } => write!(f, "FAIL {detail}"),
            Verdict::Inconclusive { reason } => write!(f, "INCONCLUSIVE {reason}"),
            Verdict::Skipped { reason } => write!(f, "SKIPPED {reason}"),
        }
    }
}

fn check_ex(t: &[Hypothesis], truth: usize, tail: usize) -> Verdict {
    let start = t.len().saturating_sub(tail);
    let end = &t[start..];
    if end.iter().all(|h| h.code() == Some(truth)) {
        return Verdict::Pass;
    }
    match end.first() {
        Some(&h) if end.iter().all(|x| *x == h) => {
            Verdict::fail(CertificateKind::StuckWrong { hypothesis: h, truth: truth.to_string() }, t, t.len())
        }
        _ => Verdict::inconclusive(format!("the last {tail} entries are not yet stable")),
    }
}

/// First `h … h' … h` on the non-`?` entries, with the stages where `h`
/// first appeared, was abandoned and came back.
pub fn abandon_return(t: &[Hypothesis]) -> Option<(usize, [usize; 3])> {
    let mut first_seen: BTreeMap<usize, usize> = BTreeMap::new();
    let mut abandoned: BTreeMap<usize, usize> = BTreeMap::new();
    let mut current: Option<usize> = None;
    for (s, h) in t.iter().enumerate() {
        let Some(c) = h.code() else { continue };
        if current == Some(c) {
            continue;
        }
        if let Some(p) = current {
            abandoned.entry(p).or_insert(s);
        }
        if let (Some(&first), Some(&left)) = (first_seen.get(&c), abandoned.get(&c)) {
            return Some((c, [first, left, s]));
        }
        first_seen.entry(c).or_insert(s);
        current = Some(c);
    }
    None
}

/// Checks one transcript of a learner shown a copy of member `truth`.
pub fn check(spec: &CriterionSpec, transcript: &Transcript, truth: usize, family: &Family) -> Result<Verdict, HarnessError> {
    spec.validate()?;
    if truth >= family.len() {
        return Err(HarnessError::Config(format!("code {truth} outside {}", family.name)));
    }
    if matches!(spec.kind, CriterionKind::Co | CriterionKind::Pl) && family.infinite && family.truncation.is_none() {
        return Err(HarnessError::Config(format!("{} is infinite and carries no truncation bound", family.name)));
    }
    let t = transcript.entries();
    if t.len() < spec.horizon {
        return Ok(Verdict::inconclusive(format!("transcript has {} entries, horizon is {}", t.len(), spec.horizon)));
    }
    Ok(match spec.kind {
        CriterionKind::Ex => check_ex(t, truth, spec.tail),
        CriterionKind::Fin => {
            let codes = transcript.distinct_codes();
            match t.iter().position(|h| h.code().is_some()) {
                None => Verdict::inconclusive("no commitment yet"),
                Some(s) if codes.len() > 1 => {
                    let second = (s..t.len()).find(|&k| t[k].code().is_some_and(|c| Some(c) != t[s].code())).unwrap_or(s);
                    Verdict::fail(CertificateKind::MultipleCommitments { first: s, second }, t, second)
                }
                Some(s) if t[s].code() == Some(truth) => Verdict::Pass,
                Some(s) => Verdict::fail(CertificateKind::StuckWrong { hypothesis: t[s], truth: truth.to_string() }, t, s),
            }
        }
        CriterionKind::AlphaFin(budget) => {
            let stages = transcript.mind_change_stages();
            if stages.len() > budget {
                let at = stages[budget];
                Verdict::fail(CertificateKind::BudgetExceeded { changes: stages.len(), budget }, t, at)
            } else {
                check_ex(t, truth, spec.tail)
            }
        }
        CriterionKind::Co => match t.iter().position(|h| h.code() == Some(truth)) {
            Some(s) => Verdict::fail(CertificateKind::CorrectCodeEmitted { code: truth, stage: s }, t, s),
            None => {
                let seen = transcript.distinct_codes();
                let missing: Vec<usize> = (0..family.len()).filter(|&c| c != truth && !seen.contains(&c)).collect();
                if missing.is_empty() {
                    Verdict::Pass
                } else {
                    Verdict::inconclusive(format!("codes {missing:?} not emitted by the horizon"))
                }
            }
        },
        CriterionKind::Pl => {
            let half = t.len() / 2;
            let gap = (half..=t.len() - spec.window).find(|&a| !t[a..a + spec.window].iter().any(|h| h.code() == Some(truth)));
            if let Some(a) = gap {
                Verdict::fail(CertificateKind::RecurrenceGap { start: a, width: spec.window }, t, a)
            } else if let Some(c) =
                (0..family.len()).find(|&c| c != truth && transcript.count_before(c, half) != transcript.count(c))
            {
                let (before, after) = (transcript.count_before(c, half), transcript.count(c));
                Verdict::fail(CertificateKind::PlateauMissing { code: c, before, after }, t, t.len())
            } else {
                Verdict::Pass
            }
        }
        CriterionKind::NUs => {
            let first = t.iter().position(|h| h.code() == Some(truth));
            match first.and_then(|f| (f..t.len()).find(|&s| t[s].code() != Some(truth))) {
                Some(s) => Verdict::fail(CertificateKind::AbandonedCorrect { stage: s }, t, s),
                None => check_ex(t, truth, spec.tail),
            }
        }
        CriterionKind::Dec => match abandon_return(t) {
            Some((code, stages)) => Verdict::fail(CertificateKind::AbandonReturn { code, stages }, t, stages[2]),
            None => check_ex(t, truth, spec.tail),
        },
    })
}

/// Pass when every check held; missing separation is a failure only for
/// relations whose inequivalence shows up at a finite stage.
pub fn reduction_verdict(report: &ReductionReport) -> Verdict {
    let detail = report.failures.first().cloned().unwrap_or_default();
    if !(report.monotone && report.same_member_consistent && report.range_sound) {
        return Verdict::Fail { certificate: None, detail, excerpt: report.failures.clone() };
    }
    if report.cross_separated {
        return Verdict::Pass;
    }
    match report.relation {
        Relation::E0 | Relation::E3 | Relation::ESet => Verdict::inconclusive(format!("no separation evidence yet: {detail}")),
        _ => Verdict::Fail { certificate: None, detail, excerpt: report.failures.clone() },
    }
}

/// A registry name or a braced member list, as accepted by [`Family::parse`].
pub fn family_by_name(name: &str) -> Result<Family, HarnessError> {
    Ok(Family::parse(name)?)
}

/// Runs a freshly built learner on the seeded presentation of one member.
pub fn run_learner(family: &Family, learner: &str, member: usize, seed: u64, horizon: usize) -> Result<Transcript, HarnessError> {
    let mut m = build_learner(learner, family)?;
    let target = family
        .members
        .get(member)
        .cloned()
        .ok_or_else(|| HarnessError::Config(format!("code {member} outside {}", family.name)))?;
    let mut p = Presentation::new(target, seed)?;
    Ok(run_presentation(m.as_mut(), &mut p, horizon)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixConfig {
    pub families: Vec<String>,
    #[serde(default)]
    pub learners: Vec<String>,
    #[serde(default)]
    pub criteria: Vec<CriterionKind>,
    #[serde(default)]
    pub reductions: Vec<String>,
    pub seeds: Vec<u64>,
    pub horizons: Vec<usize>,
    #[serde(default = "default_tail")]
    pub tail: usize,
    #[serde(default = "default_window")]
    pub window: usize,
}

fn default_tail() -> usize {
    DEFAULT_TAIL
}

fn default_window() -> usize {
    DEFAULT_WINDOW
}

/// One matrix cell: a learner under one criterion on one member, or a
/// reduction verified on a whole family.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellRecord {
    pub family: String,
    pub subject: String,
    /// A criterion name, or `reduce` for reduction cells.
    pub criterion: String,
    pub member: Option<usize>,
    pub seed: Option<u64>,
    pub horizon: usize,
    #[serde(flatten)]
    pub verdict: Verdict,
}

enum Task {
    Learner { family: usize, learner: String, member: usize, seed: u64, horizon: usize },
    Reduction { family: usize, operator: String, horizon: usize },
}

fn run_task(task: &Task, families: &[Result<Family, String>], config: &MatrixConfig) -> Vec<CellRecord> {
    let skip = |reason: String| Verdict::Skipped { reason };
    match task {
        Task::Learner { family, learner, member, seed, horizon } => {
            let cell = |criterion: String, verdict: Verdict, fam: &str| CellRecord {
                family: fam.into(),
                subject: learner.clone(),
                criterion,
                member: Some(*member),
                seed: Some(*seed),
                horizon: *horizon,
                verdict,
            };
            let name = &config.families[*family];
            let fam = match &families[*family] {
                Ok(f) => f,
                Err(e) => return config.criteria.iter().map(|c| cell(c.to_string(), skip(e.clone()), name)).collect(),
            };
            let transcript = run_learner(fam, learner, *member, *seed, *horizon);
            config
                .criteria
                .iter()
                .map(|&kind| {
                    let spec = CriterionSpec { kind, horizon: *horizon, tail: config.tail.min(*horizon), window: config.window };
                    let verdict = match &transcript {
                        Err(e) => skip(e.to_string()),
                        Ok(t) => match check(&spec, t, *member, fam) {
                            Ok(v) => v,
                            Err(e) => skip(e.to_string()),
                        },
                    };
                    cell(kind.to_string(), verdict, name)
                })
                .collect()
        }
        Task::Reduction { family, operator, horizon } => {
            let name = config.families[*family].clone();
            let verdict = match &families[*family] {
                Err(e) => skip(e.clone()),
                Ok(fam) => {
                    let make = || build_operator(operator, fam);
                    match make() {
                        Err(e) => skip(e.to_string()),
                        Ok(_) => match verify_reduction(&make, fam, *horizon, &config.seeds) {
                            Ok(report) => reduction_verdict(&report),
                            Err(e) => skip(e.to_string()),
                        },
                    }
                }
            };
            vec![CellRecord {
                family: name,
                subject: operator.clone(),
                criterion: "reduce".into(),
                member: None,
                seed: None,
                horizon: *horizon,
                verdict,
            }]
        }
    }
}

/// Runs every cell of the matrix on a pool of threads. The records come
/// back in a fixed order whatever the scheduling.
pub fn run_matrix(config: &MatrixConfig) -> Vec<CellRecord> {
    let families: Vec<Result<Family, String>> =
        config.families.iter().map(|n| family_by_name(n).map_err(|e| e.to_string())).collect();
    let mut tasks = Vec::new();
    for (fi, fam) in families.iter().enumerate() {
        let members = fam.as_ref().map_or(1, Family::len);
        for learner in &config.learners {
            for &horizon in &config.horizons {
                for member in 0..members {
                    for &seed in &config.seeds {
                        tasks.push(Task::Learner { family: fi, learner: learner.clone(), member, seed, horizon });
                    }
                }
            }
        }
        for operator in &config.reductions {
            for &horizon in &config.horizons {
                tasks.push(Task::Reduction { family: fi, operator: operator.clone(), horizon });
            }
        }
    }
    let results: Mutex<Vec<Option<Vec<CellRecord>>>> = Mutex::new((0..tasks.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(tasks.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(task) = tasks.get(k) else { break };
                let cells = run_task(task, &families, config);
                results.lock().expect("no worker panicked")[k] = Some(cells);
            });
        }
    });
    results.into_inner().expect("no worker panicked").into_iter().flatten().flatten().collect()
}

pub fn to_jsonl(records: &[CellRecord]) -> String {
    records.iter().map(|r| serde_json::to_string(r).expect("records serialize") + "\n").collect()
}

pub fn from_jsonl(text: &str) -> Result<Vec<CellRecord>, HarnessError> {
    text.lines().filter(|l| !l.trim().is_empty()).map(|l| Ok(serde_json::from_str(l)?)).collect()
}

/// Counts per (family, subject) row and criterion column, e.g. `PASS 20/20`.
pub fn render_table(records: &[CellRecord]) -> String {
    let mut columns: Vec<String> = Vec::new();
    let mut rows: Vec<(String, String)> = Vec::new();
    let mut cells: BTreeMap<(usize, usize), [usize; 4]> = BTreeMap::new();
    for r in records {
        let row = (r.family.clone(), r.subject.clone());
        let ri = rows.iter().position(|x| *x == row).unwrap_or_else(|| {
            rows.push(row);
            rows.len() - 1
        });
        let ci = columns.iter().position(|c| *c == r.criterion).unwrap_or_else(|| {
            columns.push(r.criterion.clone());
            columns.len() - 1
        });
        let slot = match r.verdict {
            Verdict::Pass => 0,
            Verdict::Fail { .. } => 1,
            Verdict::Inconclusive { .. } => 2,
            Verdict::Skipped { .. } => 3,
        };
        cells.entry((ri, ci)).or_default()[slot] += 1;
    }
    let summary = |c: &[usize; 4]| {
        let total: usize = c.iter().sum();
        if c[3] == total {
            "SKIPPED".to_string()
        } else if c[1] > 0 {
            format!("FAIL {}/{total}", c[1])
        } else if c[2] > 0 {
            format!("INCONC {}/{total}", c[2])
        } else {
            format!("PASS {}/{total}", c[0])
        }
    };
    let label_width = rows.iter().map(|(f, s)| f.len() + s.len() + 3).max().unwrap_or(0).max(6);
    let mut out = format!("{:<label_width$}", "cell");
    for c in &columns {
        out += &format!(" | {c:<14}");
    }
    out.push('\n');
    out += &"-".repeat(label_width + columns.len() * 17);
    out.push('\n');
    for (ri, (f, s)) in rows.iter().enumerate() {
        out += &format!("{:<label_width$}", format!("{f} / {s}"));
        for ci in 0..columns.len() {
            let text = cells.get(&(ri, ci)).map_or_else(|| "-".to_string(), summary);
            out += &format!(" | {text:<14}");
        }
        out.push('\n');
    }
    out
}
