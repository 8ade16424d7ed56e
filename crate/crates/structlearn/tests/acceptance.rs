//! Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Criteria run concurrently and report in order.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use structlearn::adversaries::{replay_matches, run_duel, CertificateKind, DuelConfig, DuelRecord};
use structlearn::catalog::{Family, Kind};
use structlearn::harness::{abandon_return, check, run_learner, CriterionKind, CriterionSpec};
use structlearn::learners::{DecisiveFilter, Hypothesis};
use structlearn::logic::{classify_family, Level};
use structlearn::pairing::pair;
use structlearn::reductions::{build_operator, verify_reduction};
use structlearn::structures::{embed_finite, FiniteFragment};

/// `Ok(detail)` is a pass; `Err(detail)` a failure.
type Outcome = Result<String, String>;

type Criterion = (&'static str, &'static str, fn() -> Outcome);

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn family(name: &str) -> Family {
    Family::parse(name).expect("registry family")
}

/// Runs `learner` on every member of `fam` for each seed and counts
/// verdicts that are not PASS.
fn sweep(fam: &Family, learner: &str, spec: CriterionSpec, seeds: &[u64]) -> (usize, usize, Vec<String>) {
    let (mut runs, mut bad, mut notes) = (0, 0, Vec::new());
    for member in 0..fam.len() {
        for &seed in seeds {
            runs += 1;
            let verdict = run_learner(fam, learner, member, seed, spec.horizon)
                .map_err(|e| e.to_string())
                .and_then(|t| check(&spec, &t, member, fam).map_err(|e| e.to_string()));
            match verdict {
                Ok(v) if v.is_pass() => {}
                Ok(v) => {
                    bad += 1;
                    notes.push(format!("member {member} seed {seed}: {v}"));
                }
                Err(e) => {
                    bad += 1;
                    notes.push(format!("member {member} seed {seed}: {e}"));
                }
            }
        }
    }
    (runs, bad, notes)
}

fn sweep_outcome(fam: &Family, learner: &str, spec: CriterionSpec, seeds: &[u64]) -> Outcome {
    let (runs, bad, notes) = sweep(fam, learner, spec, seeds);
    ensure(bad == 0, format!("{}/{runs} runs pass{}", runs - bad, notes.first().map_or(String::new(), |n| format!("; {n}"))))
}

fn ex_on_omega_pair() -> Outcome {
    let spec = CriterionSpec::new(CriterionKind::Ex).with_horizon(512).with_tail(64);
    sweep_outcome(&family("omega_pair"), "ex_minmax", spec, &(0..10).collect::<Vec<_>>())
}

fn fin_on_cycle_pair() -> Outcome {
    let fam = family("cycles_fin");
    let level = classify_family(&fam).map_err(|e| e.to_string())?.level;
    if level != Level::StrongAntichain {
        return Err(format!("classified {level:?}"));
    }
    let spec = CriterionSpec::new(CriterionKind::Fin);
    let seeds: Vec<u64> = (0..5).collect();
    let (runs, bad, notes) = sweep(&fam, "fin", spec, &seeds);
    let mut single = 0;
    for member in 0..fam.len() {
        for &seed in &seeds {
            let t = run_learner(&fam, "fin", member, seed, spec.horizon).map_err(|e| e.to_string())?;
            single += usize::from(t.distinct_codes().len() == 1);
        }
    }
    ensure(
        bad == 0 && single == runs,
        format!("StrongAntichain; {}/{runs} Fin passes; {single}/{runs} runs commit to one code{}", runs - bad, notes.concat()),
    )
}

fn co_on_cycle_complements() -> Outcome {
    let spec = CriterionSpec::new(CriterionKind::Co).with_horizon(1024);
    sweep_outcome(&family("cyc_comp"), "co", spec, &[0, 1, 2])
}

fn symbol(x: u8) -> Hypothesis {
    match x {
        0 => Hypothesis::Question,
        n => Hypothesis::Conjecture(usize::from(n) - 1),
    }
}

fn nus_and_decisive() -> Outcome {
    let spec = CriterionSpec::new(CriterionKind::NUs).with_horizon(512).with_tail(64);
    let (runs, bad, notes) = sweep(&family("tilde_chains_34"), "nus", spec, &(0..5).collect::<Vec<_>>());
    let mut streams: Vec<Vec<Hypothesis>> = vec![vec![]];
    let mut frontier = streams.clone();
    for _ in 0..6 {
        frontier = frontier.iter().flat_map(|p| (0..3).map(move |x| [p.as_slice(), &[symbol(x)]].concat())).collect();
        streams.extend(frontier.iter().cloned());
    }
    let exhaustive = streams.len();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..1000 {
        let len = rng.gen_range(0..80);
        streams.push((0..len).map(|_| symbol(rng.gen_range(0..6))).collect());
    }
    let returns = streams.iter().filter(|s| abandon_return(&DecisiveFilter::apply(s)).is_some()).count();
    ensure(
        bad == 0 && returns == 0,
        format!(
            "{}/{runs} nUs passes; {returns} abandon-returns over {exhaustive} exhaustive + 1000 random streams{}",
            runs - bad,
            notes.concat()
        ),
    )
}

fn pl_from_pairwise() -> Outcome {
    let spec = CriterionSpec::new(CriterionKind::Pl).with_horizon(1024).with_window(50);
    sweep_outcome(&family("omega_pair"), "pl_pairwise", spec, &[0, 1, 2])
}

fn pl_on_fstar() -> Outcome {
    let spec = CriterionSpec::new(CriterionKind::Pl);
    sweep_outcome(&family("fstar"), "pl_fstar", spec, &[0, 1, 2])
}

fn erange_characterization() -> Outcome {
    let fam = family("tilde_chains_34");
    let make = || build_operator("erange", &fam);
    let report = verify_reduction(&make, &fam, 100, &[0, 1, 2]).map_err(|e| e.to_string())?;
    let code = pair(1, 0) as u64;
    let found = report.separations.iter().any(|s| s.code == Some(code));
    let rejected = build_operator("erange", &family("omega_pair")).err().map(|e| e.to_string());
    ensure(
        report.pass && found && rejected.is_some(),
        format!(
            "verify {}; separation code <1,0> {}; omega_pair {}",
            if report.pass { "passes" } else { "fails" },
            if found { "found" } else { "missing" },
            rejected.unwrap_or_else(|| "accepted".into())
        ),
    )
}

fn kind_label(k: Option<&CertificateKind>) -> String {
    k.map_or("no certificate".into(), |k| serde_json::to_value(k).expect("serializes")["kind"].as_str().unwrap_or("?").to_owned())
}

const DUELS: &[(&str, &str, &str)] = &[
    ("ex_rays", "ex_min_embed", ""),
    ("nus_poset", "ex_poset", "abandon_return"),
    ("nus_poset", "dec(ex_poset)", "stuck_wrong"),
    ("total_id_operator", "fin_to_id_total", "prefix_disagreement"),
];

fn duel_line(adversary: &str, opponent: &str, expected: &str) -> Result<(bool, String), String> {
    let record = DuelRecord::new(adversary, opponent, DuelConfig::default()).map_err(|e| e.to_string())?;
    let outcome = run_duel(&record).map_err(|e| e.to_string())?;
    let kind = kind_label(outcome.kind());
    let audited = outcome.certificate().is_some_and(|c| c.audit.ok());
    let ok = audited && (expected.is_empty() || kind == expected);
    Ok((ok, format!("{adversary} vs {opponent}: {kind}")))
}

fn duels(range: std::ops::Range<usize>) -> Outcome {
    let mut ok = true;
    let mut lines = Vec::new();
    for &(a, o, k) in &DUELS[range] {
        let (pass, line) = duel_line(a, o, k)?;
        ok &= pass;
        lines.push(line);
    }
    ensure(ok, lines.join("; "))
}

fn oracle_equivalence() -> Outcome {
    let mut compared = 0;
    let mut mismatches = 0;
    for kind in [Kind::Order, Kind::Graph] {
        let fragments: Vec<FiniteFragment> =
            common::small_catalog(kind).iter().flat_map(|x| (1..=6).map(move |n| x.canonical(n))).collect();
        for f in &fragments {
            for g in &fragments {
                compared += 1;
                mismatches += usize::from(embed_finite(f, g).map_err(|e| e.to_string())? != common::all_injections_embed(f, g));
            }
        }
    }
    let agreement = common::sigma1_agreement();
    let largest = agreement.separated_above_cut.iter().map(|s| s.2).max().unwrap_or(0);
    ensure(
        mismatches == 0 && agreement.contradictions.is_empty() && agreement.unexplained.is_empty(),
        format!(
            "embedder {mismatches} mismatches over {compared} fragment pairs; sigma1 {}/{} pairs agree with ages cut at 5, {} more separated only above the cut (witnesses up to size {largest}, each brute-force confirmed), {} contradictions, {} unexplained",
            agreement.agreeing,
            agreement.pairs,
            agreement.separated_above_cut.len(),
            agreement.contradictions.len(),
            agreement.unexplained.len()
        ),
    )
}

fn replay() -> Outcome {
    let mut replayed = 0;
    for &(adversary, opponent, _) in DUELS {
        for seed in [0, 7] {
            let record =
                DuelRecord::new(adversary, opponent, DuelConfig { seed, ..DuelConfig::default() }).map_err(|e| e.to_string())?;
            let outcome = run_duel(&record).map_err(|e| e.to_string())?;
            if outcome.certificate().is_none() {
                return Err(format!("{adversary} vs {opponent} seed {seed}: no certificate"));
            }
            if !replay_matches(&record, &outcome).map_err(|e| e.to_string())? {
                return Err(format!("{adversary} vs {opponent} seed {seed}: replay differs"));
            }
            replayed += 1;
        }
    }
    Ok(format!("{replayed}/{replayed} certificates regenerate byte-identically"))
}

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        ("1", "Ex on omega/omega*, 10 seeds, tolerance 0 failures", ex_on_omega_pair),
        ("2", "Fin on C3+I/C4+I, 5 seeds, one commitment per run", fin_on_cycle_pair),
        ("3", "co on cycle complements 3..6, 3 seeds, horizon 1024", co_on_cycle_complements),
        ("4", "nUs on tilde chains 3/4, 5 seeds; decisive filter never returns", nus_and_decisive),
        ("5", "PL from pairwise Ex on omega/omega*, horizon 1024, window 50", pl_from_pairwise),
        ("6", "PL on F*, 3 seeds", pl_on_fstar),
        ("7", "E_range on tilde chains 3/4; omega/omega* rejected", erange_characterization),
        ("8", "incomparability duels", || duels(0..3)),
        ("9", "total Id operator counterexample", || duels(3..4)),
        ("10", "oracle equivalence, exact", oracle_equivalence),
        ("11", "certificate replay", replay),
    ];
    let start = Instant::now();
    let results: Vec<(Outcome, f64)> = std::thread::scope(|scope| {
        let handles: Vec<_> = criteria
            .iter()
            .map(|&(_, _, run)| {
                scope.spawn(move || {
                    let t = Instant::now();
                    (run(), t.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|_| (Err("panicked".into()), 0.0))).collect()
    });
    let mut failed = 0;
    for ((id, title, _), (outcome, secs)) in criteria.iter().zip(&results) {
        let (label, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {id:>2} {label} [{secs:.1}s] {title}: {detail}");
    }
    println!("acceptance: {}/{} criteria pass in {:.1}s", criteria.len() - failed, criteria.len(), start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
