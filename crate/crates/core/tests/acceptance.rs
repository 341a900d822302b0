//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::cell::Cell;
use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use critical_tuple::crosscheck::{
    crosscheck_graph, crosscheck_qbf_formulas, cycle_matrix, enumerate_formulas, enumerate_qbf, random_qbf,
    random_qbf_sized, GraphCrosscheck, Source,
};
use critical_tuple::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

thread_local! {
    static VERIFIED: Cell<u64> = const { Cell::new(0) };
    static REJECTED: Cell<u64> = const { Cell::new(0) };
}

/// Independent check that `h` maps every atom into `inst`.
fn maps_into(h: &Homomorphism, q: &Query, inst: &Instance) -> bool {
    let ok = q.atoms().iter().all(|a| {
        let args: Option<Vec<String>> = a
            .args
            .iter()
            .map(|t| match t {
                Term::Const(c) => Some(c.clone()),
                Term::Var(v) => h.get(v).map(str::to_string),
            })
            .collect();
        args.is_some_and(|args| inst.contains(&Tuple::new(a.predicate.clone(), args)))
    });
    let counter = if ok { &VERIFIED } else { &REJECTED };
    counter.with(|c| c.set(c.get() + 1));
    ok
}

/// Naive existence test: odometer over the instance's constants.
fn naive_hom_exists(q: &Query, inst: &Instance) -> bool {
    let vars = q.vars();
    let consts: Vec<String> = inst.constants().into_iter().chain(q.constants()).collect();
    if consts.is_empty() {
        return q.atoms().iter().all(|a| a.args.is_empty() && inst.contains(&Tuple::new(a.predicate.clone(), Vec::<String>::new())));
    }
    let mut digits = vec![0usize; vars.len()];
    loop {
        let h: Homomorphism = vars.iter().cloned().zip(digits.iter().map(|&d| consts[d].clone())).collect();
        if q.atoms().iter().all(|a| h.image(a).is_some_and(|t| inst.contains(&t))) {
            return true;
        }
        let mut i = digits.len();
        loop {
            if i == 0 {
                return false;
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < consts.len() {
                break;
            }
            digits[i] = 0;
        }
    }
}

/// Re-verifies a criticality witness from scratch.
fn witness_holds(q: &Query, tau: &Tuple, w: &Witness, small: bool) -> bool {
    let mapped = maps_into(&w.homomorphism, q, &w.instance) && w.instance.contains(tau);
    let rest = w.instance.without(tau);
    let escapes = if small {
        naive_hom_exists(q, &rest)
    } else {
        find_hom(q, &rest, &Pin::empty()).expect("unbudgeted").is_some()
    };
    mapped && !escapes
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn run(id: &str, name: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let in_time = elapsed < limit;
    let pass = out.pass && in_time;
    let timing = if in_time {
        String::new()
    } else {
        format!("; exceeded {limit:?}")
    };
    println!(
        "[{}] criterion {id}: {name} ({:.2?}) {}{timing}",
        if pass { "PASS" } else { "FAIL" },
        elapsed,
        out.detail
    );
    pass
}

fn criterion_1() -> Outcome {
    let (q, tau, g1, g2) = counterexample_fixture();
    let opts = DeciderOptions::default();
    let full = is_critical(&tau, &q, &opts).unwrap();
    let r1 = is_critical_relative(&tau, &q, g1, &opts).unwrap();
    let r2 = is_critical_relative(&tau, &q, g2, &opts).unwrap();
    let brute = brute_force_critical(&tau, &q, None).unwrap();

    // {R(a,b,c,c), R(a,a,b,b)} up to renaming of c
    let shape = full.witness.as_ref().is_some_and(|w| {
        let ts: Vec<&Tuple> = w.instance.tuples().collect();
        ts.len() == 2
            && w.instance.contains(&tau)
            && ts.iter().any(|t| {
                t.predicate == "R"
                    && t.args[0] == "a"
                    && t.args[1] == "b"
                    && t.args[2] == t.args[3]
                    && t.args[2] != "a"
                    && t.args[2] != "b"
            })
    });
    let verified = full.witness.as_ref().is_some_and(|w| witness_holds(&q, &tau, w, true))
        && r2.witness.as_ref().is_some_and(|w| witness_holds(&q, &tau, w, true));
    let pass = full.critical && !r1.critical && r2.critical && brute && shape && verified && full.via_atom == Some(1);
    let witness = full
        .witness
        .map(|w| w.instance.tuples().map(ToString::to_string).collect::<Vec<_>>().join(", "))
        .unwrap_or_default();
    Outcome {
        pass,
        detail: format!(
            "critical={} rel(g1)={} rel(g2)={} witness={{{witness}}}",
            full.critical, r1.critical, r2.critical
        ),
    }
}

fn criterion_2() -> Outcome {
    // ∀u1 u2 ∃v: (u1 ∨ ¬u2 ∨ ¬v) ∧ (¬u1 ∨ u2 ∨ v)
    let f = parse_qbf("p cnf 3 2\na 1 2 0\ne 3 0\n1 -2 -3 0\n-1 2 3 0\n").unwrap();
    let out = reduce_qbf(&f).unwrap();
    let sym = out.registry.symbols();
    let v = |s: &str| Term::var(sym[s].clone());
    let cl = |cols: [&str; 6]| Atom::new("Cl1", cols.iter().map(|s| v(s)).collect());

    let (xu1, xnu2, xv) = ("x_u1", "x_¬u2", "x_v3");
    let left: [[&str; 3]; 7] = [
        ["f", "f", "f"],
        ["f", xnu2, "f"],
        ["f", xnu2, "t"],
        [xu1, "f", "f"],
        [xu1, "f", "t"],
        [xu1, xnu2, "f"],
        [xu1, xnu2, "t"],
    ];
    let mut expected: BTreeSet<Atom> = BTreeSet::new();
    expected.insert(cl([xu1, xnu2, xv, "r", "r", "z"]));
    for [a, b, c] in left {
        expected.insert(cl([a, b, c, "z", "z'", "s"]));
    }
    for [a, b, c] in left.iter().copied().chain([["f", "f", "t"]]) {
        expected.insert(cl([a, b, c, "s", "s'", "s"]));
    }
    let actual: BTreeSet<Atom> = out
        .query
        .atoms()
        .iter()
        .filter(|a| a.predicate == "Cl1")
        .cloned()
        .collect();

    let fft = [v("f"), v("f"), v("t")];
    let fft_rows: Vec<&Atom> = actual.iter().filter(|a| a.args[..3] == fft).collect();
    let fft_only_backup = fft_rows.len() == 1 && fft_rows[0].args[3] == v("s");

    let counts = out.query.len() == 2 + 3 * 2 + 16 * 2 && out.tau.to_string() == "R(0,0,1,2)" && out.g_index == 0;
    Outcome {
        pass: actual == expected && actual.len() == 16 && fft_only_backup && counts,
        detail: format!(
            "{} Cl atoms, golden match={}, (f,f,t) only in backups={fft_only_backup}",
            actual.len(),
            actual == expected
        ),
    }
}

fn criterion_3() -> Outcome {
    // Normalized formulas within the bounds, plus the normalized closure of all formulas within the bounds.
    let mut formulas = enumerate_qbf(2, 1, 2);
    let core = formulas.len();
    let mut seen: BTreeSet<String> = formulas.iter().map(|f| f.to_string()).collect();
    for f in enumerate_formulas(2, 1, 2) {
        let n = normalize_qbf(&f);
        if seen.insert(n.to_string()) {
            formulas.push(n);
        }
    }
    let report = crosscheck_qbf_formulas(&formulas, None, None, Some(Duration::from_secs(120))).unwrap();
    Outcome {
        pass: report.all_agree() && report.constructive_checks > 0,
        detail: format!(
            "{} formulas ({core} normalized within bounds), {}/{} constructive checks, {} counterexamples",
            report.instances,
            report.constructive_passed,
            report.constructive_checks,
            report.counterexamples.len()
        ),
    }
}

fn criterion_4() -> Outcome {
    let formulas: Vec<QbfFormula> = enumerate_qbf(1, 0, 1)
        .into_iter()
        .filter(|f| f.universals().len() == 1 && f.existentials().is_empty() && f.clauses().len() == 1)
        .collect();
    let opts = DeciderOptions {
        budget: Budget::time(Duration::from_secs(30 * 60)),
        ..DeciderOptions::default()
    };
    let mut agree = 0;
    let mut lines = Vec::new();
    for f in &formulas {
        let out = reduce_qbf(f).unwrap();
        let valid = eval_qbf(f).unwrap().valid;
        match is_critical_relative(&out.tau, &out.query, out.g_index, &opts) {
            Ok(v) => {
                let sound = v.witness.as_ref().map_or(true, |w| witness_holds(&out.query, &out.tau, w, false));
                if v.critical == !valid && sound {
                    agree += 1;
                }
                lines.push(format!("[{}] critical={} valid={valid}", f.clauses()[0].map(|l| l.to_string()).join(" "), v.critical));
            }
            Err(e) => lines.push(format!("error: {e}")),
        }
    }
    Outcome {
        pass: !formulas.is_empty() && agree == formulas.len(),
        detail: format!("{agree}/{} agree; {}", formulas.len(), lines.join("; ")),
    }
}

fn criterion_5() -> Outcome {
    let report = crosscheck_graph(&GraphCrosscheck {
        max_nodes: 6,
        source: Source::Exhaustive,
        decider_budget: Some(Budget::UNLIMITED),
        time_limit: Some(Duration::from_secs(300)),
    })
    .unwrap();
    let matrix = cycle_matrix(&report);
    let rule_ok = matrix.len() == 25 && matrix.iter().all(|(&(n, m), &v)| v == Some(n % m != 0));

    // Small pairs: decider witnesses re-verified, escapes built from the oracle's map.
    let mut small_ok = true;
    for n in 2..=5 {
        for m in 2..=(7 - n) {
            let (g1, g2) = (Digraph::cycle(n, "a"), Digraph::cycle(m, "b"));
            let out = reduce_graphhom(&g1, &g2).unwrap();
            let verdict = is_critical(&out.tau, &out.query, &DeciderOptions::default()).unwrap();
            let (h, inst) = graph_witness_map(&out).unwrap();
            small_ok &= maps_into(&h, &out.query, &inst);
            match graph_hom_oracle(&g1, &g2).unwrap() {
                Some(map) => {
                    let esc = graph_escape_map(&out, &h, &map).unwrap();
                    small_ok &= !verdict.critical && maps_into(&esc, &out.query, &inst.without(&out.tau));
                }
                None => {
                    small_ok &= verdict.critical
                        && verdict.witness.as_ref().is_some_and(|w| witness_holds(&out.query, &out.tau, w, false))
                        && !naive_hom_exists(&out.query, &inst.without(&out.tau));
                }
            }
        }
    }
    Outcome {
        pass: report.all_agree() && rule_ok && small_ok,
        detail: format!(
            "{} pairs, decider agreements {}/{}, divisibility rule={rule_ok}, small-pair constructions={small_ok}",
            report.instances, report.decider_agreements, report.decider_runs
        ),
    }
}

struct Corpus {
    pairs: Vec<(Tuple, Query)>,
}

const PREDS: [(&str, usize); 3] = [("R", 2), ("S", 3), ("P", 1)];

fn random_pair(rng: &mut ChaCha8Rng) -> (Tuple, Query) {
    let vars = ["x", "y", "z", "w"];
    let consts = ["a", "b", "c"];
    let n_atoms = rng.gen_range(1..=3);
    let atoms: Vec<Atom> = (0..n_atoms)
        .map(|_| {
            let (p, k) = PREDS[rng.gen_range(0..PREDS.len())];
            let args = (0..k)
                .map(|_| {
                    if rng.gen_bool(0.85) {
                        Term::var(vars[rng.gen_range(0..vars.len())])
                    } else {
                        Term::constant(consts[rng.gen_range(0..2)])
                    }
                })
                .collect();
            Atom::new(p, args)
        })
        .collect();
    let q = Query::new(atoms).unwrap();
    // Mostly an image of some atom, so that the designated atom can reach τ.
    let tau = if rng.gen_bool(0.8) {
        let a = &q.atoms()[rng.gen_range(0..q.len())];
        let h: Homomorphism = q
            .vars()
            .into_iter()
            .map(|v| (v, consts[rng.gen_range(0..consts.len())].to_string()))
            .collect();
        h.image(a).unwrap()
    } else {
        let (p, k) = PREDS[rng.gen_range(0..PREDS.len())];
        Tuple::new(p, (0..k).map(|_| consts[rng.gen_range(0..consts.len())]))
    };
    (tau, q)
}

fn corpus() -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    Corpus {
        pairs: (0..600).map(|_| random_pair(&mut rng)).collect(),
    }
}

fn criterion_6(c: &Corpus, relatives: &mut Vec<Vec<bool>>, absolutes: &mut Vec<bool>) -> Outcome {
    let variants = [
        DeciderOptions::default(),
        DeciderOptions {
            prune: false,
            ..DeciderOptions::default()
        },
        DeciderOptions {
            parallel: true,
            ..DeciderOptions::default()
        },
    ];
    let mut disagreements = 0;
    let mut critical = 0;
    for (tau, q) in &c.pairs {
        let brute = brute_force_critical(tau, q, None).unwrap();
        let full = is_critical(tau, q, &variants[0]).unwrap();
        let rel: Vec<bool> = (0..q.len())
            .map(|i| {
                let v = is_critical_relative(tau, q, i, &variants[0]).unwrap();
                if let Some(w) = &v.witness {
                    if !witness_holds(q, tau, w, true) {
                        disagreements += 1;
                    }
                }
                v.critical
            })
            .collect();
        let or = rel.iter().any(|&b| b);
        let others_agree = variants[1..]
            .iter()
            .all(|o| is_critical(tau, q, o).unwrap().critical == full.critical);
        let witness_ok = full.witness.as_ref().map_or(!full.critical, |w| witness_holds(q, tau, w, true));
        if full.critical != brute || full.critical != or || !others_agree || !witness_ok {
            disagreements += 1;
            println!("    disagreement: τ = {tau}, Q = {}", q.to_string().replace('\n', " "));
        }
        critical += full.critical as usize;
        relatives.push(rel);
        absolutes.push(full.critical);
    }
    Outcome {
        pass: disagreements == 0 && c.pairs.len() >= 500,
        detail: format!("{} pairs ({critical} critical), {disagreements} disagreements", c.pairs.len()),
    }
}

fn criterion_7(relatives: &[Vec<bool>], absolutes: &[bool]) -> Outcome {
    let violations = relatives
        .iter()
        .zip(absolutes)
        .filter(|(rel, &abs)| rel.iter().any(|&b| b) && !abs)
        .count();
    let relative_hits = relatives.iter().filter(|r| r.iter().any(|&b| b)).count();
    Outcome {
        pass: violations == 0 && !absolutes.is_empty(),
        detail: format!("{relative_hits} pairs critical relative to some atom, {violations} violations"),
    }
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut formulas: Vec<QbfFormula> = (0..12).map(|_| random_qbf_sized(&mut rng, 4, 3, 5)).collect();
    formulas.extend((0..12).map(|_| random_qbf(&mut rng, 4, 3, 5)));
    let limit = Duration::from_secs(10);
    let mut worst = Duration::ZERO;
    let mut checks = 0;
    let mut ok = true;
    for f in &formulas {
        let out = reduce_qbf(f).unwrap();
        let pin = unify_atom_tuple(&out.query.atoms()[out.g_index], &out.tau).unwrap();
        for case in eval_qbf(f).unwrap().cases {
            let (_, inst) = qbf_witness_map(&out, &case.sigma).unwrap();
            let rest = inst.without(&out.tau);
            for mode in [SearchMode::LexLeast, SearchMode::Fast] {
                let opts = SearchOptions {
                    mode,
                    budget: Budget::time(limit),
                };
                let t = Instant::now();
                let onto = find_hom_with(&out.query, &inst, &pin, &opts);
                let escape = find_hom_with(&out.query, &rest, &Pin::empty(), &opts);
                let pinned_escape = find_hom_with(&out.query, &rest, &pin, &opts);
                worst = worst.max(t.elapsed() / 3);
                checks += 3;
                match (onto, escape, pinned_escape) {
                    // g cannot reach τ once τ is gone
                    (Ok(Some(h)), Ok(esc), Ok(None)) => {
                        ok &= h.extends(&pin) && maps_into(&h, &out.query, &inst);
                        ok &= esc.is_some() == case.extension.is_some();
                        if let Some(e) = esc {
                            ok &= maps_into(&e, &out.query, &rest);
                        }
                    }
                    _ => ok = false,
                }
            }
        }
    }
    let verified = VERIFIED.with(Cell::get);
    let rejected = REJECTED.with(Cell::get);
    Outcome {
        pass: ok && worst < limit && rejected == 0,
        detail: format!(
            "{checks} pinned checks on {} reductions, slowest {worst:.2?}; {verified} homomorphisms re-verified across the suite, {rejected} rejected",
            formulas.len()
        ),
    }
}

fn main() {
    let mut all = true;
    all &= run("1", "counterexample suite", Duration::from_secs(1), criterion_1);
    all &= run("2", "clause gadget golden", Duration::from_secs(1), criterion_2);
    all &= run("3", "QBF constructive cross-validation", Duration::from_secs(120), criterion_3);
    all &= run("4", "QBF end-to-end decider agreement", Duration::from_secs(30 * 60), criterion_4);
    all &= run("5", "graph reduction on cycles", Duration::from_secs(300), criterion_5);
    let c = corpus();
    let (mut rel, mut abs) = (Vec::new(), Vec::new());
    all &= run("6", "oracle equivalence on random pairs", Duration::from_secs(300), || {
        criterion_6(&c, &mut rel, &mut abs)
    });
    all &= run("7", "relative implies absolute", Duration::from_secs(1), || criterion_7(&rel, &abs));
    all &= run("8", "engine soundness", Duration::from_secs(600), criterion_8);
    if all {
        println!("acceptance: all criteria pass");
    } else {
        println!("acceptance: some criteria FAILED");
        std::process::exit(1);
    }
}
