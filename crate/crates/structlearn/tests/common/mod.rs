//! Brute-force oracles shared by the integration tests. Apart from
//! `sigma1_agreement`, which pits them against it, nothing here calls the
//! crate's own search code.

#![allow(dead_code)]

use structlearn::catalog::{CatalogStructure, Kind};
use structlearn::logic::{separating_target, sigma1_leq};
use structlearn::structures::FiniteFragment;

/// Whether the map `h` (on elements `0..h.len()` of `f`) preserves and
/// reflects every tuple among the mapped elements.
fn consistent(f: &FiniteFragment, g: &FiniteFragment, h: &[usize]) -> bool {
    let n = h.len();
    let sig = f.signature();
    for (r, rel) in sig.relations().iter().enumerate() {
        let mut args = vec![0; rel.arity];
        // Every argument tuple over 0..n that mentions the newest element.
        let total = n.pow(rel.arity as u32);
        for mut code in 0..total {
            for slot in args.iter_mut() {
                *slot = code % n;
                code /= n;
            }
            if !args.contains(&(n - 1)) {
                continue;
            }
            let image: Vec<usize> = args.iter().map(|&a| h[a]).collect();
            if f.holds(r, &args) != g.holds(r, &image) {
                return false;
            }
        }
    }
    true
}

/// Tries every injection `0..f.size() → 0..g.size()` in lexicographic order,
/// checking each complete map from scratch.
pub fn all_injections_embed(f: &FiniteFragment, g: &FiniteFragment) -> bool {
    fn go(f: &FiniteFragment, g: &FiniteFragment, h: &mut Vec<usize>) -> bool {
        if h.len() == f.size() {
            return (1..=h.len()).all(|k| consistent(f, g, &h[..k]));
        }
        for y in 0..g.size() {
            if !h.contains(&y) {
                h.push(y);
                if go(f, g, h) {
                    return true;
                }
                h.pop();
            }
        }
        false
    }
    f.signature() == g.signature() && f.size() <= g.size() && go(f, g, &mut Vec::new())
}

/// The facts between `x` and `y` in both directions, one bit per relation
/// and direction. Binary signatures only.
fn pair_codes(s: &FiniteFragment) -> Vec<Vec<u32>> {
    let rels = s.signature().relations().len();
    (0..s.size())
        .map(|x| {
            (0..s.size())
                .map(|y| (0..rels).fold(0, |acc, r| acc << 2 | (s.holds(r, &[x, y]) as u32) << 1 | s.holds(r, &[y, x]) as u32))
                .collect()
        })
        .collect()
}

/// Exhaustive extension search with forward checking: every unplaced element
/// keeps the hosts still compatible with the placed ones, and a branch dies
/// when one of those lists empties.
pub fn extension_embed(f: &FiniteFragment, g: &FiniteFragment) -> bool {
    fn go(fc: &[Vec<u32>], gc: &[Vec<u32>], x: usize, domains: &[Vec<usize>]) -> bool {
        if x == fc.len() {
            return true;
        }
        'candidates: for &y in &domains[x] {
            let mut next = domains.to_vec();
            for z in x + 1..fc.len() {
                next[z].retain(|&w| w != y && gc[y][w] == fc[x][z]);
                if next[z].is_empty() {
                    continue 'candidates;
                }
            }
            if go(fc, gc, x + 1, &next) {
                return true;
            }
        }
        false
    }
    if f.signature() != g.signature() || f.size() > g.size() {
        return false;
    }
    assert!(f.signature().relations().iter().all(|r| r.arity == 2), "binary signatures only");
    let (fc, gc) = (pair_codes(f), pair_codes(g));
    let degree = |c: &[Vec<u32>], x: usize| (0..c.len()).filter(|&y| y != x && c[x][y] != 0).count();
    let domains: Vec<Vec<usize>> = (0..f.size())
        .map(|x| (0..g.size()).filter(|&y| gc[y][y] == fc[x][x] && degree(&gc, y) >= degree(&fc, x)).collect())
        .collect();
    go(&fc, &gc, 0, &domains)
}

/// Relabels `f` so the search meets its tightest constraints early: sparse
/// graphs place high-degree vertices first, orders place their least
/// comparable elements first.
pub fn by_degree(f: &FiniteFragment) -> FiniteFragment {
    let mut order: Vec<usize> = (0..f.size()).collect();
    let degree = |x: usize| (0..f.size()).filter(|&y| y != x && (f.holds(0, &[x, y]) || f.holds(0, &[y, x]))).count();
    if *f.signature() == Kind::Graph.signature() {
        order.sort_by_key(|&x| std::cmp::Reverse(degree(x)));
    } else {
        order.sort_by_key(|&x| degree(x));
    }
    f.induced(&order)
}

/// Every graph on `n` labelled vertices.
pub fn all_graphs(n: usize) -> Vec<FiniteFragment> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    (0u64..1 << pairs.len())
        .map(|mask| {
            let edges = pairs
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .flat_map(|(_, &(a, b))| [(0, vec![a, b]), (0, vec![b, a])]);
            FiniteFragment::from_tuples(Kind::Graph.signature(), n, edges).unwrap()
        })
        .collect()
}

/// Every partial order on `n` elements whose order extends the index order.
/// Each isomorphism type appears at least once.
pub fn all_natural_posets(n: usize) -> Vec<FiniteFragment> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let mut out = Vec::new();
    for mask in 0u64..1 << pairs.len() {
        let below = |a: usize, b: usize| pairs.iter().position(|&p| p == (a, b)).is_some_and(|i| mask >> i & 1 == 1);
        let transitive = (0..n).all(|a| (a + 1..n).all(|b| (b + 1..n).all(|c| !(below(a, b) && below(b, c)) || below(a, c))));
        if transitive {
            let tuples =
                (0..n).map(|a| (0, vec![a, a])).chain(pairs.iter().filter(|&&(a, b)| below(a, b)).map(|&(a, b)| (0, vec![a, b])));
            out.push(FiniteFragment::from_tuples(Kind::Order.signature(), n, tuples).unwrap());
        }
    }
    out
}

/// One representative per isomorphism type, found by comparing with
/// `all_injections_embed` in both directions.
pub fn iso_types(candidates: Vec<FiniteFragment>) -> Vec<FiniteFragment> {
    let mut reps: Vec<FiniteFragment> = Vec::new();
    for c in candidates {
        let count = |f: &FiniteFragment| f.tuples().count();
        if !reps.iter().any(|r| count(r) == count(&c) && all_injections_embed(&c, r)) {
            reps.push(c);
        }
    }
    reps
}

/// Isomorphism types of the given kind on `0..=max` elements.
pub fn small_types(kind: Kind, max: usize) -> Vec<FiniteFragment> {
    (0..=max).flat_map(|n| iso_types(if kind == Kind::Graph { all_graphs(n) } else { all_natural_posets(n) })).collect()
}

/// A finite piece of `x` large enough to host each of its substructures on
/// up to about ten elements.
pub fn piece(x: &CatalogStructure) -> FiniteFragment {
    x.canonical(48)
}

/// Which of `types` occur in `x`.
pub fn bounded_age(x: &CatalogStructure, types: &[FiniteFragment]) -> Vec<bool> {
    let host = piece(x);
    types.iter().map(|t| extension_embed(&by_degree(t), &host)).collect()
}

/// Catalog structures whose numeric parameters are at most 6.
pub fn small_catalog(kind: Kind) -> Vec<CatalogStructure> {
    let text: Vec<String> = match kind {
        Kind::Order => {
            let mut base: Vec<String> = ["omega", "omega_star", "zeta"].map(String::from).to_vec();
            base.extend((2..=6).map(|n| format!("chain({n})")));
            base.extend((0..=6).map(|k| format!("poset_p({k})")));
            let tilde: Vec<String> = base.iter().map(|b| format!("tilde({b})")).collect();
            base.into_iter().chain(tilde).collect()
        }
        Kind::Graph => {
            let mut v: Vec<String> = vec!["ray".into(), "iso_inf".into(), "du(ray, iso_inf)".into()];
            v.extend((2..=6).map(|n| format!("ray({n})")));
            v.extend((3..=6).map(|n| format!("cycle({n})")));
            v.extend((1..=6).map(|n| format!("iso({n})")));
            v.extend((3..=6).map(|n| format!("cyc_comp({n})")));
            v.extend((3..=6).map(|n| format!("du(cycle({n}), iso_inf)")));
            v.extend((2..=6).map(|n| format!("du(ray({n}), iso_inf)")));
            v
        }
    };
    text.iter().map(|t| t.parse().expect("catalog text")).collect()
}

/// Outcome of comparing `sigma1_leq` with inclusion of ages cut at size 5.
pub struct Agreement {
    pub pairs: usize,
    pub agreeing: usize,
    /// Separated only by a substructure above the cut, confirmed by brute force.
    pub separated_above_cut: Vec<(String, String, usize)>,
    /// `sigma1_leq` says included while some small substructure is missing.
    pub contradictions: Vec<(String, String)>,
    /// `sigma1_leq` says not included with no confirmed witness.
    pub unexplained: Vec<(String, String)>,
}

pub fn sigma1_agreement() -> Agreement {
    let mut out = Agreement { pairs: 0, agreeing: 0, separated_above_cut: vec![], contradictions: vec![], unexplained: vec![] };
    for kind in [Kind::Order, Kind::Graph] {
        let types = small_types(kind, 5);
        let catalog = small_catalog(kind);
        let ages: Vec<Vec<bool>> = catalog.iter().map(|x| bounded_age(x, &types)).collect();
        for (a, age_a) in catalog.iter().zip(&ages) {
            for (b, age_b) in catalog.iter().zip(&ages) {
                out.pairs += 1;
                let brute = age_a.iter().zip(age_b).all(|(&x, &y)| !x || y);
                let leq = sigma1_leq(a, b).unwrap();
                let names = (a.to_string(), b.to_string());
                match (leq, brute) {
                    (l, r) if l == r => out.agreeing += 1,
                    (true, false) => out.contradictions.push(names),
                    _ => match separating_target(a, std::slice::from_ref(b)) {
                        Some(w)
                            if w.size() > 5
                                && extension_embed(&by_degree(&w), &piece(a))
                                && !extension_embed(&by_degree(&w), &piece(b)) =>
                        {
                            out.separated_above_cut.push((names.0, names.1, w.size()))
                        }
                        _ => out.unexplained.push(names),
                    },
                }
            }
        }
    }
    out
}
