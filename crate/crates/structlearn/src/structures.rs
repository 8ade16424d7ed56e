//! Relational signatures, finite fragments, the atomic-diagram bit codec and
//! the induced-substructure embedding engine.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("malformed formula: relation {relation} has arity {expected}, got {got} arguments")]
    MalformedFormula { relation: usize, expected: usize, got: usize },
    #[error("relation index {0} is not in the signature")]
    UnknownRelation(usize),
    #[error("partial diagram: {0} bits is not a fully decided prefix length")]
    PartialDiagram(usize),
    #[error("signature mismatch")]
    SignatureMismatch,
    #[error("invalid signature: {0}")]
    InvalidSignature(String),
    #[error("argument {arg} outside domain of size {size}")]
    OutOfDomain { arg: usize, size: usize },
    #[error("invalid bit {0:?} in diagram prefix")]
    InvalidBit(char),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Relation {
    pub name: String,
    pub arity: usize,
}

/// A finite, nonempty list of named relation symbols.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Relation>", into = "Vec<Relation>")]
pub struct Signature {
    relations: Vec<Relation>,
}

impl TryFrom<Vec<Relation>> for Signature {
    type Error = StructureError;

    fn try_from(relations: Vec<Relation>) -> Result<Self, Self::Error> {
        if relations.is_empty() {
            return Err(StructureError::InvalidSignature("no relations".into()));
        }
        let mut names = BTreeSet::new();
        for r in &relations {
            if r.arity == 0 {
                return Err(StructureError::InvalidSignature(format!("{} has arity 0", r.name)));
            }
            if !names.insert(r.name.clone()) {
                return Err(StructureError::InvalidSignature(format!("duplicate name {}", r.name)));
            }
        }
        Ok(Signature { relations })
    }
}

impl From<Signature> for Vec<Relation> {
    fn from(s: Signature) -> Self {
        s.relations
    }
}

impl Signature {
    pub fn new<S: Into<String>>(relations: impl IntoIterator<Item = (S, usize)>) -> Result<Self, StructureError> {
        relations.into_iter().map(|(name, arity)| Relation { name: name.into(), arity }).collect::<Vec<_>>().try_into()
    }

    /// One binary relation `le`, read as a reflexive partial order.
    pub fn order() -> Self {
        Signature::new([("le", 2)]).expect("static signature")
    }

    /// One binary relation `edge`, read as a symmetric irreflexive graph.
    pub fn graph() -> Self {
        Signature::new([("edge", 2)]).expect("static signature")
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn arity(&self, relation: usize) -> Result<usize, StructureError> {
        self.relations.get(relation).map(|r| r.arity).ok_or(StructureError::UnknownRelation(relation))
    }

    /// Number of atomic sentences all of whose arguments are below `size`.
    pub fn decided_len(&self, size: usize) -> u64 {
        self.relations.iter().map(|r| pow(size as u64, r.arity)).sum()
    }

    /// Number of atomic sentences whose largest argument is exactly `m`.
    fn layer_len(&self, m: u64) -> u64 {
        self.relations.iter().map(|r| pow(m + 1, r.arity) - pow(m, r.arity)).sum()
    }
}

fn pow(base: u64, exp: usize) -> u64 {
    base.checked_pow(exp as u32).expect("godel index overflow")
}

/// Position of the atomic sentence `rel(args)` in the canonical numbering,
/// ordered by largest argument, then relation index, then lexicographic args.
pub fn godel_index(sig: &Signature, relation: usize, args: &[usize]) -> Result<u64, StructureError> {
    let arity = sig.arity(relation)?;
    if args.len() != arity {
        return Err(StructureError::MalformedFormula { relation, expected: arity, got: args.len() });
    }
    let m = *args.iter().max().expect("arity >= 1") as u64;
    let mut index = sig.decided_len(m as usize);
    for r in &sig.relations[..relation] {
        index += pow(m + 1, r.arity) - pow(m, r.arity);
    }
    let mut seen_max = false;
    for (p, &a) in args.iter().enumerate() {
        let rest = arity - p - 1;
        for v in 0..a as u64 {
            index += completions(m, rest, seen_max || v == m);
        }
        seen_max |= a as u64 == m;
    }
    Ok(index)
}

/// Tuples of length `rest` over `0..=m` that finish a prefix into one whose
/// maximum is exactly `m`.
fn completions(m: u64, rest: usize, has_max: bool) -> u64 {
    if has_max {
        pow(m + 1, rest)
    } else {
        pow(m + 1, rest) - pow(m, rest)
    }
}

/// Inverse of [`godel_index`].
pub fn godel_decode(sig: &Signature, mut index: u64) -> (usize, Vec<usize>) {
    let mut m = 0u64;
    loop {
        let layer = sig.layer_len(m);
        if index < layer {
            break;
        }
        index -= layer;
        m += 1;
    }
    let mut relation = 0;
    for (r, rel) in sig.relations.iter().enumerate() {
        let block = pow(m + 1, rel.arity) - pow(m, rel.arity);
        if index < block {
            relation = r;
            break;
        }
        index -= block;
    }
    let arity = sig.relations[relation].arity;
    let mut args = Vec::with_capacity(arity);
    let mut seen_max = false;
    for p in 0..arity {
        let rest = arity - p - 1;
        let mut v = 0u64;
        loop {
            let c = completions(m, rest, seen_max || v == m);
            if index < c {
                break;
            }
            index -= c;
            v += 1;
        }
        seen_max |= v == m;
        args.push(v as usize);
    }
    (relation, args)
}

/// Atomic sentences with largest argument exactly `m`, in canonical order.
fn layer(sig: &Signature, m: usize) -> impl Iterator<Item = (usize, Vec<usize>)> + '_ {
    sig.relations.iter().enumerate().flat_map(move |(r, rel)| {
        let total = pow(m as u64 + 1, rel.arity);
        (0..total).filter_map(move |code| {
            let mut args = vec![0; rel.arity];
            let mut c = code;
            for slot in args.iter_mut().rev() {
                *slot = (c % (m as u64 + 1)) as usize;
                c /= m as u64 + 1;
            }
            args.contains(&m).then_some((r, args))
        })
    })
}

/// An initial segment of an atomic diagram: domain `0..size` plus the
/// positive tuples. Absent tuples are false.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FiniteFragment {
    signature: Signature,
    size: usize,
    tuples: Vec<BTreeSet<Vec<usize>>>,
}

impl FiniteFragment {
    pub fn empty(signature: Signature) -> Self {
        let tuples = vec![BTreeSet::new(); signature.relations.len()];
        FiniteFragment { signature, size: 0, tuples }
    }

    pub fn with_size(signature: Signature, size: usize) -> Self {
        let mut f = FiniteFragment::empty(signature);
        f.size = size;
        f
    }

    pub fn from_tuples(
        signature: Signature,
        size: usize,
        tuples: impl IntoIterator<Item = (usize, Vec<usize>)>,
    ) -> Result<Self, StructureError> {
        let mut f = FiniteFragment::with_size(signature, size);
        for (r, args) in tuples {
            f.insert(r, args)?;
        }
        Ok(f)
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn tuple_count(&self) -> usize {
        self.tuples.iter().map(BTreeSet::len).sum()
    }

    pub fn tuples(&self) -> impl Iterator<Item = (usize, &[usize])> + '_ {
        self.tuples.iter().enumerate().flat_map(|(r, set)| set.iter().map(move |t| (r, t.as_slice())))
    }

    pub fn holds(&self, relation: usize, args: &[usize]) -> bool {
        self.tuples.get(relation).is_some_and(|s| s.contains(args))
    }

    /// Adds a fresh domain element and returns its index.
    pub fn push_element(&mut self) -> usize {
        self.size += 1;
        self.size - 1
    }

    pub fn insert(&mut self, relation: usize, args: Vec<usize>) -> Result<(), StructureError> {
        let arity = self.signature.arity(relation)?;
        if args.len() != arity {
            return Err(StructureError::MalformedFormula { relation, expected: arity, got: args.len() });
        }
        if let Some(&arg) = args.iter().find(|&&a| a >= self.size) {
            return Err(StructureError::OutOfDomain { arg, size: self.size });
        }
        self.tuples[relation].insert(args);
        Ok(())
    }

    /// The substructure on the initial domain `0..n`.
    pub fn restrict(&self, n: usize) -> FiniteFragment {
        let n = n.min(self.size);
        let tuples = self.tuples.iter().map(|s| s.iter().filter(|t| t.iter().all(|&a| a < n)).cloned().collect()).collect();
        FiniteFragment { signature: self.signature.clone(), size: n, tuples }
    }

    /// The induced substructure on `elements`, renumbered in the given order.
    pub fn induced(&self, elements: &[usize]) -> FiniteFragment {
        let mut position = vec![usize::MAX; self.size];
        for (i, &e) in elements.iter().enumerate() {
            position[e] = i;
        }
        let tuples = self
            .tuples
            .iter()
            .map(|s| {
                s.iter()
                    .filter(|t| t.iter().all(|&a| position[a] != usize::MAX))
                    .map(|t| t.iter().map(|&a| position[a]).collect())
                    .collect()
            })
            .collect();
        FiniteFragment { signature: self.signature.clone(), size: elements.len(), tuples }
    }

    /// `self ⊑ other`: `other` extends `self` and agrees on its domain.
    pub fn is_extended_by(&self, other: &FiniteFragment) -> bool {
        self.signature == other.signature && other.size >= self.size && other.restrict(self.size).tuples == self.tuples
    }

    /// Truth values of the atomic facts whose largest argument is `a`, in a
    /// fixed order: relation first, then argument tuples lexicographically.
    pub fn element_facts(&self, a: usize) -> Vec<bool> {
        let mut out = Vec::new();
        for (r, rel) in self.signature.relations.iter().enumerate() {
            let mut args = vec![0; rel.arity];
            loop {
                if args.contains(&a) {
                    out.push(self.holds(r, &args));
                }
                let Some(k) = (0..args.len()).rev().find(|&k| args[k] < a) else { break };
                args[k] += 1;
                args[k + 1..].iter_mut().for_each(|x| *x = 0);
            }
        }
        out
    }

    /// Places `other` after `self` with no relations across.
    pub fn disjoint_union(&self, other: &FiniteFragment) -> Result<FiniteFragment, StructureError> {
        if self.signature != other.signature {
            return Err(StructureError::SignatureMismatch);
        }
        let mut out = self.clone();
        out.size += other.size;
        for (r, t) in other.tuples() {
            out.tuples[r].insert(t.iter().map(|a| a + self.size).collect());
        }
        Ok(out)
    }
}

/// Bits of an atomic diagram under the canonical numbering; prints as `0101…`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DiagramPrefix {
    pub bits: Vec<bool>,
}

impl fmt::Display for DiagramPrefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for DiagramPrefix {
    type Err = StructureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(StructureError::InvalidBit(other)),
            })
            .collect::<Result<_, _>>()
            .map(|bits| DiagramPrefix { bits })
    }
}

pub fn encode_fragment(f: &FiniteFragment) -> DiagramPrefix {
    let bits = (0..f.size).flat_map(|m| layer(&f.signature, m)).map(|(r, args)| f.holds(r, &args)).collect();
    DiagramPrefix { bits }
}

pub fn decode_fragment(p: &DiagramPrefix, sig: &Signature) -> Result<FiniteFragment, StructureError> {
    let len = p.bits.len() as u64;
    let mut size = 0;
    while sig.decided_len(size) < len {
        size += 1;
    }
    if sig.decided_len(size) != len {
        return Err(StructureError::PartialDiagram(p.bits.len()));
    }
    let mut f = FiniteFragment::with_size(sig.clone(), size);
    let sentences = (0..size).flat_map(|m| layer(sig, m));
    for (bit, (r, args)) in p.bits.iter().zip(sentences) {
        if *bit {
            f.tuples[r].insert(args);
        }
    }
    Ok(f)
}

pub fn embed_finite(f: &FiniteFragment, g: &FiniteFragment) -> Result<bool, StructureError> {
    find_embedding(f, g).map(|h| h.is_some())
}

/// An injective map `h` with `h[x]` the image of `x`, preserving and
/// reflecting every relation, if one exists.
pub fn find_embedding(f: &FiniteFragment, g: &FiniteFragment) -> Result<Option<Vec<usize>>, StructureError> {
    if f.signature != g.signature {
        return Err(StructureError::SignatureMismatch);
    }
    if f.size > g.size {
        return Ok(None);
    }
    let fp = Profile::new(f);
    let gp = Profile::new(g);
    let words = g.size.div_ceil(64);
    // Targets grouped by profile, so initial domains cost one pass per class.
    let mut classes: BTreeMap<Class<'_>, Vec<u64>> = BTreeMap::new();
    for y in 0..g.size {
        classes.entry(gp.class(y)).or_insert_with(|| vec![0; words])[y / 64] |= 1 << (y % 64);
    }
    let mut initial: BTreeMap<Class<'_>, (Vec<u64>, usize)> = BTreeMap::new();
    let mut domains = Vec::with_capacity(f.size);
    let mut counts = Vec::with_capacity(f.size);
    for x in 0..f.size {
        let (domain, count) = initial.entry(fp.class(x)).or_insert_with(|| {
            let mut domain = vec![0u64; words];
            for ((diagonal, degree, slots), members) in &classes {
                let fits = *diagonal == fp.diagonal[x]
                    && *degree >= fp.degree(x)
                    && slots.iter().zip(&fp.counts[x]).all(|(a, b)| a >= b);
                if fits {
                    domain.iter_mut().zip(members).for_each(|(d, m)| *d |= m);
                }
            }
            let count = domain.iter().map(|w| w.count_ones() as usize).sum();
            (domain, count)
        });
        if *count == 0 {
            return Ok(None);
        }
        domains.push(domain.clone());
        counts.push(*count);
    }
    let wide = f.signature.relations.iter().any(|r| r.arity > 2);
    let mut isolated: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for x in (0..f.size).filter(|&x| fp.degree(x) == 0) {
        isolated.entry(fp.diagonal[x]).or_default().push(x);
    }
    let order = fp.search_order();
    let mut rank = vec![0; f.size];
    for (i, &x) in order.iter().enumerate() {
        rank[x] = i;
    }
    let mut search = Search {
        f,
        g,
        fp: &fp,
        gp: &gp,
        rank,
        wide,
        isolated: isolated.into_values().collect(),
        domains,
        counts,
        trail: Vec::new(),
        map: vec![usize::MAX; f.size],
        inverse: vec![usize::MAX; g.size],
        used: vec![false; g.size],
        placed: 0,
    };
    Ok(search.run().then_some(search.map))
}

/// Diagonal facts, degree and per-slot neighbour counts of one element.
type Class<'a> = (u64, usize, &'a [u32]);

/// Per-element data used to prune the embedding search.
struct Profile {
    /// Relations holding on the constant tuple `(x, …, x)`, as a bitmask.
    diagonal: Vec<u64>,
    /// Elements sharing a non-diagonal tuple with `x`.
    neighbours: Vec<Vec<usize>>,
    /// Elements `y` with a tuple whose arguments are exactly `{x, y}`.
    pair_neighbours: Vec<Vec<usize>>,
    /// Non-diagonal tuples containing `x`, counted per (relation, position).
    counts: Vec<Vec<u32>>,
}

impl Profile {
    fn new(f: &FiniteFragment) -> Self {
        let mut diagonal = vec![0u64; f.size];
        let mut neighbours: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); f.size];
        let mut pair_neighbours: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); f.size];
        let offsets: Vec<usize> = f
            .signature
            .relations
            .iter()
            .scan(0, |acc, r| {
                let o = *acc;
                *acc += r.arity;
                Some(o)
            })
            .collect();
        let slots: usize = f.signature.relations.iter().map(|r| r.arity).sum();
        let mut counts = vec![vec![0u32; slots]; f.size];
        for (r, t) in f.tuples() {
            if t.iter().all(|&a| a == t[0]) {
                diagonal[t[0]] |= 1 << (r % 64);
                continue;
            }
            for (p, &a) in t.iter().enumerate() {
                counts[a][offsets[r] + p] += 1;
            }
            for &a in t {
                for &b in t {
                    if a != b {
                        neighbours[a].insert(b);
                    }
                }
            }
            if let Some(&b) = t.iter().find(|&&b| b != t[0]) {
                if t.iter().all(|&c| c == t[0] || c == b) {
                    pair_neighbours[t[0]].insert(b);
                    pair_neighbours[b].insert(t[0]);
                }
            }
        }
        let flatten = |v: Vec<BTreeSet<usize>>| v.into_iter().map(|s| s.into_iter().collect()).collect();
        Profile { diagonal, neighbours: flatten(neighbours), pair_neighbours: flatten(pair_neighbours), counts }
    }

    /// Diagonal, degree and slot counts: what the initial domains look at.
    fn class(&self, x: usize) -> Class<'_> {
        (self.diagonal[x], self.degree(x), &self.counts[x])
    }

    fn degree(&self, x: usize) -> usize {
        self.neighbours[x].len()
    }

    /// Connected, high-degree elements first; isolated elements last.
    fn search_order(&self) -> Vec<usize> {
        let n = self.diagonal.len();
        let mut placed = vec![false; n];
        let mut links = vec![0usize; n];
        let mut order = Vec::with_capacity(n);
        let connected = (0..n).filter(|&x| self.degree(x) > 0).count();
        while order.len() < connected {
            let next = (0..n)
                .filter(|&x| !placed[x] && self.degree(x) > 0)
                .max_by_key(|&x| (links[x], self.degree(x), std::cmp::Reverse(x)))
                .expect("unplaced connected element");
            placed[next] = true;
            order.push(next);
            for &y in &self.neighbours[next] {
                links[y] += 1;
            }
        }
        order.extend((0..n).filter(|&x| self.degree(x) == 0));
        order
    }
}

/// Tuples of `s` whose arguments are exactly `a` and `b`, as a bitmask over
/// (relation, argument pattern).
fn pair_facts(s: &FiniteFragment, a: usize, b: usize) -> u64 {
    let mut bits = 0u64;
    let mut bit = 0;
    let mut args = Vec::new();
    for (r, rel) in s.signature.relations.iter().enumerate() {
        let k = rel.arity;
        if k < 2 {
            continue;
        }
        for pattern in 1..(1u64 << k) - 1 {
            args.clear();
            args.extend((0..k).map(|i| if pattern >> i & 1 == 1 { b } else { a }));
            if s.holds(r, &args) {
                bits |= 1 << (bit % 64);
            }
            bit += 1;
        }
    }
    bits
}

/// Backtracking with forward checking: every unmapped element of `f` keeps a
/// bitset of targets compatible with the mapped ones, and a branch dies when a
/// bitset empties. Elements with one target left go first, the rest in the
/// connected search order.
struct Search<'a> {
    f: &'a FiniteFragment,
    g: &'a FiniteFragment,
    fp: &'a Profile,
    gp: &'a Profile,
    /// Position in the connected search order.
    rank: Vec<usize>,
    /// Some relation has arity above 2, so pair facts do not settle consistency.
    wide: bool,
    /// Isolated elements of `f` by diagonal. Members of a group always share
    /// one domain, so the group needs at least as many targets as members.
    isolated: Vec<Vec<usize>>,
    domains: Vec<Vec<u64>>,
    counts: Vec<usize>,
    /// Overwritten domain words as `(element, word, old value, old count)`.
    trail: Vec<(usize, usize, u64, usize)>,
    map: Vec<usize>,
    inverse: Vec<usize>,
    used: Vec<bool>,
    placed: usize,
}

impl Search<'_> {
    fn run(&mut self) -> bool {
        if self.placed == self.f.size {
            return true;
        }
        let unmapped: Vec<usize> = (0..self.f.size).filter(|&x| self.map[x] == usize::MAX).collect();
        if unmapped.iter().all(|&x| self.fp.degree(x) == 0) && self.fill_isolated() {
            return true;
        }
        let x = *unmapped.iter().min_by_key(|&&x| (self.counts[x] > 1, self.rank[x])).expect("an unmapped element");
        let candidates: Vec<usize> = bits(&self.domains[x]).collect();
        for y in candidates {
            if self.wide && !self.consistent(x, y) {
                continue;
            }
            let mark = self.trail.len();
            self.map[x] = y;
            self.inverse[y] = x;
            self.used[y] = true;
            self.placed += 1;
            if self.propagate(x, y) && self.run() {
                return true;
            }
            self.placed -= 1;
            self.map[x] = usize::MAX;
            self.inverse[y] = usize::MAX;
            self.used[y] = false;
            self.undo(mark);
        }
        false
    }

    /// Narrows the domains of unmapped elements after mapping `x` to `y`.
    fn propagate(&mut self, x: usize, y: usize) -> bool {
        let near: BTreeSet<usize> = self.fp.pair_neighbours[x].iter().copied().collect();
        for z in 0..self.f.size {
            if self.map[z] != usize::MAX {
                continue;
            }
            if near.contains(&z) {
                let want = pair_facts(self.f, x, z);
                let mut keep = vec![0u64; self.domains[z].len()];
                for &w in &self.gp.pair_neighbours[y] {
                    if self.domains[z][w / 64] >> (w % 64) & 1 == 1 && pair_facts(self.g, y, w) == want {
                        keep[w / 64] |= 1 << (w % 64);
                    }
                }
                let count: usize = keep.iter().map(|k| k.count_ones() as usize).sum();
                for (i, k) in keep.into_iter().enumerate() {
                    if self.domains[z][i] != k {
                        self.trail.push((z, i, self.domains[z][i], self.counts[z]));
                        self.domains[z][i] = k;
                    }
                }
                self.counts[z] = count;
            } else {
                for &w in self.gp.pair_neighbours[y].iter().chain(std::iter::once(&y)) {
                    let (i, m) = (w / 64, 1u64 << (w % 64));
                    if self.domains[z][i] & m != 0 {
                        self.trail.push((z, i, self.domains[z][i], self.counts[z]));
                        self.domains[z][i] &= !m;
                        self.counts[z] -= 1;
                    }
                }
            }
            if self.counts[z] == 0 {
                return false;
            }
        }
        self.isolated.iter().all(|group| {
            let mut open = group.iter().filter(|&&z| self.map[z] == usize::MAX);
            open.next().is_none_or(|&z| self.counts[z] > open.count())
        })
    }

    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let (z, i, word, count) = self.trail.pop().expect("above mark");
            self.domains[z][i] = word;
            self.counts[z] = count;
        }
    }

    /// Sends the remaining isolated elements to unused isolated targets with
    /// the same diagonal, if there are enough of them.
    fn fill_isolated(&mut self) -> bool {
        let rest: Vec<usize> = (0..self.f.size).filter(|&x| self.map[x] == usize::MAX).collect();
        let mut free: Vec<usize> = (0..self.g.size).filter(|&y| !self.used[y] && self.gp.degree(y) == 0).collect();
        let mut chosen = Vec::with_capacity(rest.len());
        for &x in &rest {
            match free.iter().position(|&y| self.gp.diagonal[y] == self.fp.diagonal[x]) {
                Some(i) => chosen.push(free.swap_remove(i)),
                None => return false,
            }
        }
        for (x, y) in rest.into_iter().zip(chosen) {
            self.map[x] = y;
            self.inverse[y] = x;
            self.used[y] = true;
        }
        self.placed = self.f.size;
        true
    }

    /// Every tuple over mapped elements and `x` holds in `f` iff its image
    /// holds in `g`. Only neighbours can share a tuple with `x` or `y`.
    fn consistent(&self, x: usize, y: usize) -> bool {
        let mut pool = vec![x];
        pool.extend(self.fp.neighbours[x].iter().copied().filter(|&m| self.map[m] != usize::MAX));
        for &z in &self.gp.neighbours[y] {
            if self.used[z] && !pool.contains(&self.inverse[z]) {
                pool.push(self.inverse[z]);
            }
        }
        let image = |a: usize| if a == x { y } else { self.map[a] };
        for (r, rel) in self.f.signature.relations.iter().enumerate() {
            let k = rel.arity;
            if k == 1 {
                continue;
            }
            let n = pool.len() as u64;
            let mut args = vec![0usize; k];
            let mut mapped = vec![0usize; k];
            for code in 0..pow(n, k) {
                let mut c = code;
                for slot in 0..k {
                    args[slot] = pool[(c % n) as usize];
                    mapped[slot] = image(args[slot]);
                    c /= n;
                }
                if args.contains(&x) && args.iter().any(|&a| a != x) && self.f.holds(r, &args) != self.g.holds(r, &mapped) {
                    return false;
                }
            }
        }
        true
    }
}

/// Indices of the set bits.
fn bits(words: &[u64]) -> impl Iterator<Item = usize> + '_ {
    words.iter().enumerate().flat_map(|(i, &w)| (0..64).filter(move |b| w >> b & 1 == 1).map(move |b| i * 64 + b))
}
