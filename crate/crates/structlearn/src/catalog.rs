//! The symbolic catalog of structures, seeded presentations of their copies,
//! monotone stream builders for adversaries, and families of structures.

use crate::structures::{embed_finite, find_embedding, FiniteFragment, Signature, StructureError};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CatalogError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("cannot mix orders and graphs in {0}")]
    KindMismatch(String),
    #[error("builder step at stage {stage} does not extend the previous fragment")]
    NonMonotone { stage: usize },
    #[error("no embedding of the current fragment into {0} within the search bound")]
    Retarget(String),
    #[error("unknown family {0}")]
    UnknownFamily(String),
    #[error(transparent)]
    Structure(#[from] StructureError),
}

/// Orders use a reflexive `le`; graphs a symmetric irreflexive `edge`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kind {
    Order,
    Graph,
}

impl Kind {
    pub fn signature(self) -> Signature {
        match self {
            Kind::Order => Signature::order(),
            Kind::Graph => Signature::graph(),
        }
    }

    pub fn of_signature(sig: &Signature) -> Option<Kind> {
        if *sig == Signature::order() {
            Some(Kind::Order)
        } else if *sig == Signature::graph() {
            Some(Kind::Graph)
        } else {
            None
        }
    }
}

/// A structure named by the catalog. Abstract elements are numbered by a
/// canonical enumeration; copies renumber them.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum CatalogStructure {
    /// `omega`: the natural numbers in their order.
    Omega,
    /// `omega_star`: the reverse of `omega`.
    OmegaStar,
    /// `zeta`: the integers.
    Zeta,
    /// `chain(n)`: a finite chain of `n ≥ 2` elements.
    Chain(usize),
    /// `ray`: the one-way infinite path.
    Ray,
    /// `ray(n)`: a path on `n ≥ 2` vertices.
    FiniteRay(usize),
    /// `cycle(n)`: a cycle on `n ≥ 3` vertices.
    Cycle(usize),
    /// `iso_inf`: infinitely many isolated points.
    IsoInf,
    /// `iso(n)`: `n` isolated points.
    Iso(usize),
    /// `poset_p(k)`: a comb of even elements with odd teeth; infinite for `k = 0`.
    PosetP(usize),
    /// `cyc_comp(n)`: one cycle of every length `m ≥ 3` except `n`.
    CycComp(usize),
    /// `tilde(x)`: `x` plus infinitely many incomparable points.
    Tilde(Box<CatalogStructure>),
    /// `du(x, y)`: disjoint union.
    Du(Box<CatalogStructure>, Box<CatalogStructure>),
}

use CatalogStructure as C;

enum Side {
    Left(usize),
    Right(usize),
}

impl CatalogStructure {
    pub fn tilde(x: CatalogStructure) -> Self {
        C::Tilde(Box::new(x))
    }

    pub fn du(x: CatalogStructure, y: CatalogStructure) -> Self {
        C::Du(Box::new(x), Box::new(y))
    }

    /// The kind fixed by the structure, or `None` for bare isolated points.
    pub fn declared_kind(&self) -> Result<Option<Kind>, CatalogError> {
        Ok(match self {
            C::Omega | C::OmegaStar | C::Zeta | C::Chain(_) | C::PosetP(_) => Some(Kind::Order),
            C::Ray | C::FiniteRay(_) | C::Cycle(_) | C::CycComp(_) => Some(Kind::Graph),
            C::IsoInf | C::Iso(_) => None,
            C::Tilde(x) => x.declared_kind()?,
            C::Du(x, y) => match (x.declared_kind()?, y.declared_kind()?) {
                (Some(a), Some(b)) if a != b => return Err(CatalogError::KindMismatch(self.to_string())),
                (a, b) => a.or(b),
            },
        })
    }

    /// Bare isolated points default to graphs.
    pub fn kind(&self) -> Kind {
        self.declared_kind().ok().flatten().unwrap_or(Kind::Graph)
    }

    pub fn signature(&self) -> Signature {
        self.kind().signature()
    }

    pub fn validate(&self) -> Result<(), CatalogError> {
        let bad = |what: &str| Err(CatalogError::InvalidParameter(format!("{what} in {self}")));
        match self {
            C::Chain(n) if *n < 2 => bad("chain needs n >= 2"),
            C::FiniteRay(n) if *n < 2 => bad("ray needs n >= 2"),
            C::Cycle(n) if *n < 3 => bad("cycle needs n >= 3"),
            C::CycComp(n) if *n < 3 => bad("cyc_comp needs n >= 3"),
            C::Tilde(x) => x.validate(),
            C::Du(x, y) => {
                x.validate()?;
                y.validate()?;
                self.declared_kind().map(|_| ())
            }
            _ => Ok(()),
        }
    }

    /// Number of elements, `None` when infinite.
    pub fn card(&self) -> Option<usize> {
        match self {
            C::Chain(n) | C::FiniteRay(n) | C::Cycle(n) | C::Iso(n) => Some(*n),
            C::PosetP(0) => None,
            C::PosetP(k) => Some(2 * k + 2),
            C::Du(x, y) => Some(x.card()? + y.card()?),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.card().is_some()
    }

    fn locate(x: &CatalogStructure, y: &CatalogStructure, a: usize) -> Side {
        match (x.card(), y.card()) {
            (Some(nx), _) if a < nx => Side::Left(a),
            (Some(nx), _) => Side::Right(a - nx),
            (None, Some(ny)) if a < ny => Side::Right(a),
            (None, Some(ny)) => Side::Left(a - ny),
            (None, None) if a.is_multiple_of(2) => Side::Left(a / 2),
            (None, None) => Side::Right(a / 2),
        }
    }

    /// Whether `rel(a, b)` holds between distinct abstract elements.
    pub fn related(&self, a: usize, b: usize) -> bool {
        debug_assert_ne!(a, b);
        match self {
            C::Omega | C::Chain(_) => a < b,
            C::OmegaStar => a > b,
            C::Zeta => zeta_value(a) < zeta_value(b),
            C::Ray | C::FiniteRay(_) => a.abs_diff(b) == 1,
            C::Cycle(n) => {
                let d = a.abs_diff(b);
                d == 1 || d == n - 1
            }
            C::IsoInf | C::Iso(_) => false,
            C::PosetP(k) => comb_le(*k, a, b),
            C::CycComp(n) => {
                let (ma, oa) = cycle_slot(*n, a);
                let (mb, ob) = cycle_slot(*n, b);
                let d = oa.abs_diff(ob);
                ma == mb && (d == 1 || d == ma - 1)
            }
            C::Tilde(x) => Self::du_related(x, &C::IsoInf, a, b),
            C::Du(x, y) => Self::du_related(x, y, a, b),
        }
    }

    fn du_related(x: &CatalogStructure, y: &CatalogStructure, a: usize, b: usize) -> bool {
        match (Self::locate(x, y, a), Self::locate(x, y, b)) {
            (Side::Left(i), Side::Left(j)) => x.related(i, j),
            (Side::Right(i), Side::Right(j)) => y.related(i, j),
            _ => false,
        }
    }

    /// The substructure on the first `n` abstract elements (fewer if finite).
    pub fn canonical(&self, n: usize) -> FiniteFragment {
        let n = self.card().map_or(n, |c| c.min(n));
        let kind = self.kind();
        let mut f = FiniteFragment::with_size(kind.signature(), n);
        for a in 0..n {
            if kind == Kind::Order {
                f.insert(0, vec![a, a]).expect("in domain");
            }
            for b in 0..n {
                if a != b && self.related(a, b) {
                    f.insert(0, vec![a, b]).expect("in domain");
                }
            }
        }
        f
    }

    /// A finite substructure into which every substructure of size at most
    /// `m` embeds.
    pub fn universe(&self, m: usize) -> FiniteFragment {
        let kind = self.kind();
        match self {
            _ if self.is_finite() => self.canonical(usize::MAX),
            C::Omega | C::OmegaStar | C::Zeta | C::IsoInf => self.canonical(m),
            // c path components need m + c - 1 vertices.
            C::Ray => self.canonical(2 * m),
            // Levels of a substructure compress to levels 1..=m.
            C::PosetP(_) => self.canonical(2 * m + 3),
            C::CycComp(n) => {
                // Cycles of length ≤ m host cycle components; one long cycle
                // hosts every union of path components.
                let mut lengths: Vec<usize> = (3..=m).filter(|&l| l != *n).collect();
                let mut long = (2 * m + 1).max(m + 1).max(3);
                if long == *n {
                    long += 1;
                }
                lengths.push(long);
                cycles_fragment(&lengths)
            }
            C::Tilde(x) => retag(&x.universe(m), kind).disjoint_union(&isolated(kind, m)).expect("same kind"),
            C::Du(x, y) => {
                let (ux, uy) = (x.universe(m), y.universe(m));
                retag(&ux, kind).disjoint_union(&retag(&uy, kind)).expect("same kind")
            }
            _ => unreachable!("finite atoms handled above"),
        }
    }

    /// Largest numeric parameter in the tree.
    pub fn max_parameter(&self) -> usize {
        match self {
            C::Chain(n) | C::FiniteRay(n) | C::Cycle(n) | C::Iso(n) | C::PosetP(n) | C::CycComp(n) => *n,
            C::Tilde(x) => x.max_parameter(),
            C::Du(x, y) => x.max_parameter().max(y.max_parameter()),
            _ => 0,
        }
    }

    /// Nesting depth of `tilde` and `du`.
    pub fn depth(&self) -> usize {
        match self {
            C::Tilde(x) => 1 + x.depth(),
            C::Du(x, y) => 1 + x.depth().max(y.depth()),
            _ => 0,
        }
    }

    /// The canonical elements that are related to some other element.
    pub fn comparable_part(f: &FiniteFragment) -> Vec<usize> {
        let mut touched = vec![false; f.size()];
        for (_, t) in f.tuples() {
            if t[0] != t[1] {
                touched[t[0]] = true;
                touched[t[1]] = true;
            }
        }
        (0..f.size()).filter(|&x| touched[x]).collect()
    }
}

fn zeta_value(a: usize) -> i64 {
    if a.is_multiple_of(2) {
        (a / 2) as i64
    } else {
        -(a.div_ceil(2) as i64)
    }
}

/// The comb order: evens form a chain, each tooth sits above one even.
/// For `k > 0` tooth `2i+1` sits above `2i`; for `k = 0` tooth `2j-1` sits
/// above `2j`.
fn comb_le(k: usize, a: usize, b: usize) -> bool {
    match (a % 2, b % 2) {
        (0, 0) => a <= b,
        (0, 1) if k == 0 => a <= b + 1,
        (0, 1) => a < b,
        _ => false,
    }
}

/// `(cycle length, offset)` of abstract element `a` of `cyc_comp(n)`.
fn cycle_slot(n: usize, mut a: usize) -> (usize, usize) {
    let mut m = 3;
    loop {
        if m != n {
            if a < m {
                return (m, a);
            }
            a -= m;
        }
        m += 1;
    }
}

fn cycles_fragment(lengths: &[usize]) -> FiniteFragment {
    let total = lengths.iter().sum();
    let mut f = FiniteFragment::with_size(Signature::graph(), total);
    let mut base = 0;
    for &l in lengths {
        for i in 0..l {
            let (a, b) = (base + i, base + (i + 1) % l);
            f.insert(0, vec![a, b]).expect("in domain");
            f.insert(0, vec![b, a]).expect("in domain");
        }
        base += l;
    }
    f
}

fn isolated(kind: Kind, n: usize) -> FiniteFragment {
    let mut f = FiniteFragment::with_size(kind.signature(), n);
    if kind == Kind::Order {
        for a in 0..n {
            f.insert(0, vec![a, a]).expect("in domain");
        }
    }
    f
}

/// Reinterprets a fragment of bare isolated points in the given kind.
fn retag(f: &FiniteFragment, kind: Kind) -> FiniteFragment {
    if Kind::of_signature(f.signature()) == Some(kind) {
        f.clone()
    } else {
        isolated(kind, f.size())
    }
}

/// `m`, the largest cycle length all of whose cycles are present in the
/// stage-`s` fragment of any presentation of `cyc_comp(n)`. With blocks of
/// [`BLOCK`] elements, element `a` is revealed by stage `BLOCK·(⌊a/BLOCK⌋+1) - 1`,
/// so the answer is the largest `m` with `Σ_{3≤l≤m, l≠n} l ≤ BLOCK·⌊(s+1)/BLOCK⌋`.
pub fn cycle_complement_growth(n: usize, s: usize) -> usize {
    let revealed = BLOCK * ((s + 1) / BLOCK);
    let (mut m, mut total) = (2, 0);
    loop {
        let next = if m + 1 == n { m + 2 } else { m + 1 };
        if total + next > revealed {
            return m;
        }
        total += next;
        m = next;
    }
}

/// Whether the graph `f` is isomorphic to a finite induced subgraph of
/// `cyc_comp(n)`: every component is a path or a cycle, and the cycles have
/// pairwise distinct lengths, none equal to `n`. Paths always fit into some
/// unused longer cycle.
pub fn cycle_complement_age(n: usize, f: &FiniteFragment) -> bool {
    let size = f.size();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); size];
    for (_, t) in f.tuples() {
        if t[0] != t[1] {
            adj[t[0]].push(t[1]);
        }
    }
    if adj.iter().any(|v| v.len() > 2) {
        return false;
    }
    let mut seen = vec![false; size];
    let mut cycles = BTreeSet::new();
    for start in 0..size {
        if seen[start] {
            continue;
        }
        let (mut stack, mut vertices, mut degree_sum) = (vec![start], 0, 0);
        seen[start] = true;
        while let Some(a) = stack.pop() {
            vertices += 1;
            degree_sum += adj[a].len();
            for &b in &adj[a] {
                if !seen[b] {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
        // A component with as many edges as vertices and degree ≤ 2 is a cycle.
        if degree_sum == 2 * vertices && (vertices == n || !cycles.insert(vertices)) {
            return false;
        }
    }
    true
}

impl fmt::Display for CatalogStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            C::Omega => write!(f, "omega"),
            C::OmegaStar => write!(f, "omega_star"),
            C::Zeta => write!(f, "zeta"),
            C::Chain(n) => write!(f, "chain({n})"),
            C::Ray => write!(f, "ray"),
            C::FiniteRay(n) => write!(f, "ray({n})"),
            C::Cycle(n) => write!(f, "cycle({n})"),
            C::IsoInf => write!(f, "iso_inf"),
            C::Iso(n) => write!(f, "iso({n})"),
            C::PosetP(k) => write!(f, "poset_p({k})"),
            C::CycComp(n) => write!(f, "cyc_comp({n})"),
            C::Tilde(x) => write!(f, "tilde({x})"),
            C::Du(x, y) => write!(f, "du({x}, {y})"),
        }
    }
}

impl From<CatalogStructure> for String {
    fn from(c: CatalogStructure) -> Self {
        c.to_string()
    }
}

impl TryFrom<String> for CatalogStructure {
    type Error = CatalogError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl FromStr for CatalogStructure {
    type Err = CatalogError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = Parser { src: s, pos: 0 };
        let out = p.structure()?;
        p.skip_ws();
        if p.pos != s.len() {
            return Err(CatalogError::Parse(format!("trailing input at {}: {s}", p.pos)));
        }
        out.validate()?;
        Ok(out)
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), CatalogError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(CatalogError::Parse(format!("expected '{c}' at {} in {}", self.pos, self.src)))
        }
    }

    fn word(&mut self, pred: fn(char) -> bool) -> &str {
        self.skip_ws();
        let start = self.pos;
        let len = self.src[start..].find(|c: char| !pred(c)).unwrap_or(self.src.len() - start);
        self.pos += len;
        &self.src[start..start + len]
    }

    fn number(&mut self) -> Result<usize, CatalogError> {
        let w = self.word(|c| c.is_ascii_digit());
        w.parse().map_err(|_| CatalogError::Parse(format!("expected a number in {}", self.src)))
    }

    fn structure(&mut self) -> Result<CatalogStructure, CatalogError> {
        let name = self.word(|c| c.is_ascii_alphanumeric() || c == '_').to_string();
        let has_args = self.eat('(');
        let one = |p: &mut Self| -> Result<usize, CatalogError> {
            let n = p.number()?;
            p.expect(')')?;
            Ok(n)
        };
        let out = match (name.as_str(), has_args) {
            ("omega", false) => C::Omega,
            ("omega_star", false) => C::OmegaStar,
            ("zeta", false) => C::Zeta,
            ("ray", false) => C::Ray,
            ("iso_inf", false) => C::IsoInf,
            ("chain", true) => C::Chain(one(self)?),
            ("ray", true) => C::FiniteRay(one(self)?),
            ("cycle", true) => C::Cycle(one(self)?),
            ("iso", true) => C::Iso(one(self)?),
            ("poset_p", true) => C::PosetP(one(self)?),
            ("cyc_comp", true) => C::CycComp(one(self)?),
            ("tilde", true) => {
                let x = self.structure()?;
                self.expect(')')?;
                C::tilde(x)
            }
            ("du", true) => {
                let x = self.structure()?;
                self.expect(',')?;
                let y = self.structure()?;
                self.expect(')')?;
                C::du(x, y)
            }
            _ => return Err(CatalogError::Parse(format!("unknown structure '{name}' in {}", self.src))),
        };
        Ok(out)
    }
}

/// Elements are revealed in blocks of this many, shuffled within a block.
pub const BLOCK: usize = 8;

/// A seeded, fair, monotone stream of fragments of a copy of `target`.
/// Position `p` carries abstract element `perm_b(p)` of block `b = p / BLOCK`.
#[derive(Debug, Clone)]
pub struct Presentation {
    target: CatalogStructure,
    seed: u64,
    abstract_of: Vec<usize>,
    fragment: FiniteFragment,
}

impl Presentation {
    pub fn new(target: CatalogStructure, seed: u64) -> Result<Self, CatalogError> {
        target.validate()?;
        let fragment = FiniteFragment::empty(target.signature());
        Ok(Presentation { target, seed, abstract_of: Vec::new(), fragment })
    }

    pub fn target(&self) -> &CatalogStructure {
        &self.target
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn fragment(&self) -> &FiniteFragment {
        &self.fragment
    }

    /// Abstract element behind each revealed position.
    pub fn abstract_elements(&self) -> &[usize] {
        &self.abstract_of[..self.fragment.size()]
    }

    /// Reveals one more element; `false` once a finite target is exhausted.
    pub fn advance(&mut self) -> bool {
        let p = self.fragment.size();
        if self.target.card().is_some_and(|c| p >= c) {
            return false;
        }
        if p == self.abstract_of.len() {
            let block = p / BLOCK;
            let end = self.target.card().map_or(p + BLOCK, |c| c.min(p + BLOCK));
            let mut perm: Vec<usize> = (p..end).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            rng.set_stream(block as u64);
            perm.shuffle(&mut rng);
            self.abstract_of.extend(perm);
        }
        let alpha = self.abstract_of[p];
        self.fragment.push_element();
        if self.target.kind() == Kind::Order {
            self.fragment.insert(0, vec![p, p]).expect("in domain");
        }
        for r in 0..p {
            let beta = self.abstract_of[r];
            if self.target.related(alpha, beta) {
                self.fragment.insert(0, vec![p, r]).expect("in domain");
            }
            if self.target.related(beta, alpha) {
                self.fragment.insert(0, vec![r, p]).expect("in domain");
            }
        }
        true
    }

    /// Advances until stage `s` (domain `0..=s`) is revealed or the target
    /// runs out, and returns the current fragment.
    pub fn advance_to(&mut self, s: usize) -> &FiniteFragment {
        while self.fragment.size() < s + 1 && self.advance() {}
        &self.fragment
    }

    /// The stage-`s` fragment.
    pub fn restrict(&mut self, s: usize) -> FiniteFragment {
        self.advance_to(s).restrict(s + 1)
    }
}

/// The stage-`s` fragment of the seeded presentation of `target`.
pub fn realize(target: &CatalogStructure, seed: u64, s: usize) -> Result<FiniteFragment, CatalogError> {
    Ok(Presentation::new(target.clone(), seed)?.restrict(s))
}

/// A stream assembled one fragment at a time, rejecting any step that does
/// not extend its predecessor.
#[derive(Debug, Clone)]
pub struct BuiltPresentation {
    fragment: FiniteFragment,
    sizes: Vec<usize>,
}

impl BuiltPresentation {
    pub fn new(signature: Signature) -> Self {
        BuiltPresentation { fragment: FiniteFragment::empty(signature), sizes: Vec::new() }
    }

    pub fn push(&mut self, next: FiniteFragment) -> Result<&FiniteFragment, CatalogError> {
        if !self.fragment.is_extended_by(&next) {
            return Err(CatalogError::NonMonotone { stage: self.sizes.len() });
        }
        self.sizes.push(next.size());
        self.fragment = next;
        Ok(&self.fragment)
    }

    pub fn fragment(&self) -> &FiniteFragment {
        &self.fragment
    }

    pub fn stages(&self) -> usize {
        self.sizes.len()
    }

    pub fn restrict(&self, stage: usize) -> FiniteFragment {
        self.fragment.restrict(self.sizes[stage])
    }
}

/// Runs a stage rule for `stages` steps. The rule sees the stage number and
/// the current fragment and returns the next fragment.
pub fn adversarial_presentation(
    signature: Signature,
    stages: usize,
    mut rule: impl FnMut(usize, &FiniteFragment) -> FiniteFragment,
) -> Result<BuiltPresentation, CatalogError> {
    let mut built = BuiltPresentation::new(signature);
    for s in 0..stages {
        let next = rule(s, built.fragment());
        built.push(next)?;
    }
    Ok(built)
}

/// A copy under construction whose intended isomorphism type can be changed
/// mid-stream, as long as the revealed part embeds into the new target.
#[derive(Debug, Clone)]
pub struct CopyBuilder {
    target: CatalogStructure,
    abstract_of: Vec<usize>,
    taken: Vec<bool>,
    fragment: FiniteFragment,
}

impl CopyBuilder {
    pub fn new(target: CatalogStructure) -> Result<Self, CatalogError> {
        target.validate()?;
        let fragment = FiniteFragment::empty(target.signature());
        Ok(CopyBuilder { target, abstract_of: Vec::new(), taken: Vec::new(), fragment })
    }

    pub fn target(&self) -> &CatalogStructure {
        &self.target
    }

    pub fn fragment(&self) -> &FiniteFragment {
        &self.fragment
    }

    /// Reveals the least abstract element not yet used; `false` when a finite
    /// target is exhausted.
    pub fn reveal_next(&mut self) -> bool {
        let alpha = self.taken.iter().position(|t| !t).unwrap_or(self.taken.len());
        if self.target.card().is_some_and(|c| alpha >= c) {
            return false;
        }
        self.reveal(alpha);
        true
    }

    fn reveal(&mut self, alpha: usize) {
        if alpha >= self.taken.len() {
            self.taken.resize(alpha + 1, false);
        }
        self.taken[alpha] = true;
        let p = self.fragment.push_element();
        if self.target.kind() == Kind::Order {
            self.fragment.insert(0, vec![p, p]).expect("in domain");
        }
        for (r, &beta) in self.abstract_of.iter().enumerate() {
            if self.target.related(alpha, beta) {
                self.fragment.insert(0, vec![p, r]).expect("in domain");
            }
            if self.target.related(beta, alpha) {
                self.fragment.insert(0, vec![r, p]).expect("in domain");
            }
        }
        self.abstract_of.push(alpha);
    }

    /// Checks that the revealed fragment is exactly the induced substructure
    /// of the target on the abstract elements used so far, which makes it a
    /// piece of a copy of the target.
    pub fn verify(&self) -> bool {
        let n = self.fragment.size();
        let order = self.target.kind() == Kind::Order;
        let mut seen = BTreeSet::new();
        self.abstract_of.len() == n
            && self.abstract_of.iter().all(|a| seen.insert(*a))
            && self.target.card().is_none_or(|c| self.abstract_of.iter().all(|&a| a < c))
            && (0..n).all(|x| {
                self.fragment.holds(0, &[x, x]) == order
                    && (0..n).all(|y| {
                        x == y || self.fragment.holds(0, &[x, y]) == self.target.related(self.abstract_of[x], self.abstract_of[y])
                    })
            })
            && self.fragment.tuple_count() == self.fragment.tuples().filter(|(r, t)| *r == 0 && t.len() == 2).count()
    }

    /// Re-reads the revealed part as a piece of `target`, searching canonical
    /// restrictions of up to `bound` elements for an embedding.
    pub fn retarget(&mut self, target: CatalogStructure, bound: usize) -> Result<(), CatalogError> {
        target.validate()?;
        let mut n = (2 * self.fragment.size()).max(8);
        loop {
            let n_eff = target.card().map_or(n, |c| c.min(n));
            let host = target.canonical(n_eff);
            if let Some(h) = find_embedding(&self.fragment, &host)? {
                self.taken = vec![false; n_eff];
                for &a in &h {
                    self.taken[a] = true;
                }
                self.abstract_of = h;
                self.target = target;
                return Ok(());
            }
            if n_eff >= bound || target.card().is_some_and(|c| n_eff >= c) {
                return Err(CatalogError::Retarget(target.to_string()));
            }
            n *= 2;
        }
    }
}

/// Whether `f` is isomorphic to a finite substructure of some template.
pub fn audit_shape(f: &FiniteFragment, templates: &[CatalogStructure]) -> bool {
    f.size() == 0
        || templates.iter().any(|t| t.signature() == *f.signature() && embed_finite(f, &t.universe(f.size())).unwrap_or(false))
}

/// Decides `fragment ↪ structure` for one fixed catalog structure, caching
/// the universe it embeds into.
#[derive(Debug, Clone)]
pub struct AgeOracle {
    structure: CatalogStructure,
    capacity: usize,
    universe: FiniteFragment,
}

impl AgeOracle {
    pub fn new(structure: CatalogStructure) -> Self {
        let universe = structure.universe(8);
        AgeOracle { structure, capacity: 8, universe }
    }

    pub fn structure(&self) -> &CatalogStructure {
        &self.structure
    }

    pub fn contains(&mut self, f: &FiniteFragment) -> bool {
        if f.signature() != self.universe.signature() {
            return false;
        }
        if let CatalogStructure::CycComp(n) = self.structure {
            return cycle_complement_age(n, f);
        }
        if f.size() > self.capacity && !self.structure.is_finite() {
            self.capacity = f.size().max(2 * self.capacity);
            self.universe = self.structure.universe(self.capacity);
        }
        embed_finite(f, &self.universe).unwrap_or(false)
    }
}

/// An ordered list of structures; the conjecture code of a member is its
/// position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Family {
    pub name: String,
    pub members: Vec<CatalogStructure>,
    /// Set when the list truncates an infinite family at this parameter.
    pub truncation: Option<usize>,
    /// The family the list stands for is infinite.
    pub infinite: bool,
}

impl Family {
    pub fn new(name: impl Into<String>, members: Vec<CatalogStructure>) -> Self {
        Family { name: name.into(), members, truncation: None, infinite: false }
    }

    pub fn truncated(name: impl Into<String>, members: Vec<CatalogStructure>, bound: usize) -> Self {
        Family { name: name.into(), members, truncation: Some(bound), infinite: true }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn code_of(&self, s: &CatalogStructure) -> Option<usize> {
        self.members.iter().position(|m| m == s)
    }

    /// All members share one kind and no member is listed twice.
    pub fn validate(&self) -> Result<Kind, CatalogError> {
        let mut kind = None;
        for (i, m) in self.members.iter().enumerate() {
            m.validate()?;
            if self.members[..i].contains(m) {
                return Err(CatalogError::InvalidParameter(format!("{m} listed twice in {}", self.name)));
            }
            match (kind, m.declared_kind()?) {
                (Some(a), Some(b)) if a != b => return Err(CatalogError::KindMismatch(self.name.clone())),
                (None, k) => kind = k,
                _ => {}
            }
        }
        Ok(kind.unwrap_or(Kind::Graph))
    }

    /// Parses a registry name or a braced list such as `{omega, omega_star}`.
    pub fn parse(text: &str) -> Result<Family, CatalogError> {
        let t = text.trim();
        if let Some(f) = registry().into_iter().find(|f| f.name == t) {
            return Ok(f);
        }
        let inner =
            t.strip_prefix('{').and_then(|r| r.strip_suffix('}')).ok_or_else(|| CatalogError::UnknownFamily(t.to_string()))?;
        let members = split_top_level(inner).into_iter().map(str::parse).collect::<Result<Vec<_>, _>>()?;
        let family = Family::new(t, members);
        family.validate()?;
        Ok(family)
    }
}

fn split_top_level(s: &str) -> Vec<&str> {
    let (mut depth, mut start, mut out) = (0i32, 0, Vec::new());
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    if !s[start..].trim().is_empty() {
        out.push(s[start..].trim());
    }
    out
}

fn parse_all(items: &[&str]) -> Vec<CatalogStructure> {
    items.iter().map(|s| s.parse().expect("registry entry parses")).collect()
}

/// The named families used by the examples, the CLI and the acceptance gate.
pub fn registry() -> Vec<Family> {
    let tilde_chains = |lo: usize, hi: usize| (lo..=hi).map(|n| C::tilde(C::Chain(n))).collect::<Vec<_>>();
    let mut fstar = vec![C::tilde(C::Omega), C::tilde(C::OmegaStar)];
    fstar.extend(tilde_chains(2, 6));
    let mut chains_omega = tilde_chains(2, 8);
    chains_omega.push(C::tilde(C::Omega));
    let mut rays: Vec<_> = (2..=8).map(|n| C::du(C::FiniteRay(n), C::IsoInf)).collect();
    rays.push(C::du(C::Ray, C::IsoInf));
    let mut cycles_id: Vec<_> = (3..=6).map(|n| C::du(C::Cycle(n), C::IsoInf)).collect();
    cycles_id.push(C::du(C::Ray, C::IsoInf));
    vec![
        Family::new("omega_pair", parse_all(&["omega", "omega_star"])),
        Family::new("omega_zeta", parse_all(&["omega", "zeta"])),
        Family::new("cycles_fin", parse_all(&["du(cycle(3), iso_inf)", "du(cycle(4), iso_inf)"])),
        Family::new("tilde_chains_34", tilde_chains(3, 4)),
        Family::truncated("cyc_comp", (3..=6).map(C::CycComp).collect(), 6),
        Family::truncated("fstar", fstar, 6),
        Family::truncated("posets", (0..=6).map(|k| C::tilde(C::PosetP(k))).collect(), 6),
        Family::truncated("rays", rays, 8),
        Family::truncated("cycles_id", cycles_id, 6),
        Family::truncated("chains_omega", chains_omega, 8),
    ]
}
