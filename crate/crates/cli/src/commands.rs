use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use anyhow::anyhow;
use critical_tuple::crosscheck::{
    crosscheck_graph, crosscheck_qbf, CrosscheckError, CrosscheckReport, GraphCrosscheck, QbfCrosscheck, Source,
};
use critical_tuple::*;
use serde_json::{json, Map, Value};

use crate::{Cli, Command, CrosscheckKind, GlobalOpts, OracleKind, ReduceKind};

pub enum Failure {
    Input(anyhow::Error),
    Resource(anyhow::Error),
    Invariant(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Resource(_) => 2,
            Failure::Invariant(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(e) => write!(f, "{e:#}"),
            Failure::Resource(e) => write!(f, "resource limit: {e:#}"),
            Failure::Invariant(e) => write!(f, "invariant violated: {e:#}"),
        }
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn input<E: Into<anyhow::Error>>(what: impl fmt::Display) -> impl FnOnce(E) -> Failure {
    move |e| Failure::Input(e.into().context(what.to_string()))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(input(format!("cannot read {}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(input(format!("cannot write {}", path.display())))
}

fn decider_error(e: CriticalityError) -> Failure {
    match e {
        CriticalityError::AtomIndex { .. } => Failure::Input(e.into()),
        CriticalityError::Budget { .. } | CriticalityError::SizeGuard(_) => Failure::Resource(e.into()),
        CriticalityError::Internal(_) => Failure::Invariant(e.into()),
    }
}

fn decider_options(g: &GlobalOpts) -> DeciderOptions {
    DeciderOptions {
        budget: Budget {
            max_nodes: g.max_nodes,
            max_time: g.max_seconds.map(Duration::from_secs_f64),
        },
        parallel: g.parallel,
        ..DeciderOptions::default()
    }
}

struct Output<'a> {
    global: &'a GlobalOpts,
    started: Instant,
}

impl Output<'_> {
    /// Prints `json` (with the schema and, unless reproducible, timing fields) or `text`.
    fn emit(&self, json: Value, text: &str) {
        if self.global.json {
            let mut obj = Map::new();
            obj.insert("schema".into(), json!(1));
            if let Value::Object(fields) = json {
                obj.extend(fields);
            }
            if !self.global.reproducible {
                let now = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default();
                obj.insert("timestamp".into(), json!(now.as_secs()));
                obj.insert("elapsed_ms".into(), json!(self.started.elapsed().as_millis() as u64));
            }
            println!("{}", serde_json::to_string_pretty(&Value::Object(obj)).expect("serializable"));
        } else {
            print!("{text}");
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let out = Output {
        global: &cli.global,
        started: Instant::now(),
    };
    match &cli.command {
        Command::Check {
            query,
            tuple,
            atom_index,
        } => check(&out, query, tuple, *atom_index),
        Command::Reduce(ReduceKind::Qbf {
            formula,
            normalize,
            out: paths,
        }) => reduce_qbf_cmd(&out, formula, *normalize, paths.output.as_deref()),
        Command::Reduce(ReduceKind::Graphhom { g1, g2, out: paths }) => {
            reduce_graph_cmd(&out, g1, g2, paths.output.as_deref())
        }
        Command::Oracle(OracleKind::Qbf { formula }) => oracle_qbf(&out, formula),
        Command::Oracle(OracleKind::Graphhom { g1, g2 }) => oracle_graph(&out, g1, g2),
        Command::Crosscheck(kind) => crosscheck(&out, kind),
        Command::Counterexample => counterexample(&out),
    }
}

/// Re-checks a verdict's witness without trusting the decider.
fn reverify(q: &Query, tau: &Tuple, verdict: &Verdict, atom: Option<usize>) -> Result<()> {
    let fail = |msg: &str| Err(Failure::Invariant(anyhow!("{msg}")));
    match (&verdict.witness, verdict.critical) {
        (None, false) => Ok(()),
        (Some(_), false) => fail("non-critical verdict carries a witness"),
        (None, true) => fail("critical verdict without a witness"),
        (Some(w), true) => {
            if !verify_hom(&w.homomorphism, q, &w.instance) || !w.instance.contains(tau) {
                return fail("witness homomorphism does not map the query into the witness instance");
            }
            if let Some(i) = atom.or(verdict.via_atom) {
                if w.homomorphism.image(&q.atoms()[i]).as_ref() != Some(tau) {
                    return fail("witness does not send the designated atom onto the tuple");
                }
            }
            match find_hom(q, &w.instance.without(tau), &Pin::empty()) {
                Ok(None) => Ok(()),
                Ok(Some(_)) => fail("witness instance still satisfies the query without the tuple"),
                Err(e) => Err(Failure::Invariant(e.into())),
            }
        }
    }
}

fn verdict_text(v: &Verdict) -> String {
    let mut s = format!("critical: {}\n", v.critical);
    if let Some(i) = v.via_atom {
        s += &format!("via atom: {i}\n");
    }
    s += &format!("reason: {}\n", serde_json::to_value(v.reason).expect("serializable").as_str().unwrap_or(""));
    if let Some(w) = &v.witness {
        s += "witness:\n";
        for t in w.instance.tuples() {
            s += &format!("  {t}.\n");
        }
        let h: Vec<String> = w.homomorphism.iter().map(|(k, c)| format!("?{k} -> {c}")).collect();
        s += &format!("homomorphism: {}\n", h.join(", "));
    }
    s += &format!(
        "stats: {} nodes, {} hom checks, {} pruned\n",
        v.stats.nodes, v.stats.hom_checks, v.stats.pruned
    );
    s
}

fn check(out: &Output, query: &Path, tuple: &str, atom: Option<usize>) -> Result<()> {
    let q = parse_query(&read(query)?).map_err(input(format!("in {}", query.display())))?;
    let tau = parse_tuple(tuple).map_err(input("in the tuple argument"))?;
    let opts = decider_options(out.global);
    let verdict = match atom {
        Some(i) => is_critical_relative(&tau, &q, i, &opts),
        None => is_critical(&tau, &q, &opts),
    }
    .map_err(decider_error)?;
    reverify(&q, &tau, &verdict, atom)?;

    let mut json = serde_json::to_value(&verdict).expect("serializable");
    json["relative_to"] = json!(atom);
    let mut text = String::new();
    if let Some(i) = atom {
        text += &format!("relative to atom {i}: {}\n", q.atoms()[i]);
    }
    text += &verdict_text(&verdict);
    out.emit(json, &text);
    Ok(())
}

fn query_lines(q: &Query) -> Vec<String> {
    q.atoms().iter().map(ToString::to_string).collect()
}

fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(ext);
    PathBuf::from(s)
}

/// Writes the three output files, or returns the text for stdout.
fn write_reduction(
    out: &Output,
    prefix: Option<&Path>,
    q: &Query,
    tau: &Tuple,
    header: &str,
    registry: Value,
) -> Result<()> {
    match prefix {
        Some(prefix) => {
            let files = [
                with_ext(prefix, ".query"),
                with_ext(prefix, ".tuple"),
                with_ext(prefix, ".registry.json"),
            ];
            write(&files[0], &q.to_string())?;
            write(&files[1], &format!("{tau}\n"))?;
            write(
                &files[2],
                &(serde_json::to_string_pretty(&registry).expect("serializable") + "\n"),
            )?;
            let names: Vec<String> = files.iter().map(|p| p.display().to_string()).collect();
            out.emit(
                json!({"atoms": q.len(), "tuple": tau.to_string(), "files": names}),
                &format!("wrote {} ({} atoms)\n", names.join(", "), q.len()),
            );
        }
        None => out.emit(
            json!({"tuple": tau.to_string(), "query": query_lines(q), "registry": registry}),
            &format!("% tuple: {tau}\n{header}{q}"),
        ),
    }
    Ok(())
}

fn reduce_qbf_cmd(out: &Output, path: &Path, normalize: bool, prefix: Option<&Path>) -> Result<()> {
    let mut f = parse_qbf(&read(path)?).map_err(input(format!("in {}", path.display())))?;
    if normalize {
        f = normalize_qbf(&f);
    }
    let red = reduce_qbf(&f).map_err(|e| {
        let hint = if matches!(e, ReductionError::NotNormalized(_)) {
            " (pass --normalize to add u ∨ u ∨ ¬u clauses)"
        } else {
            ""
        };
        Failure::Input(anyhow!("{e}{hint}"))
    })?;
    let registry = json!({
        "g_index": red.g_index,
        "symbols": red.registry.symbols(),
        "clauses": red.registry.clauses,
    });
    let header = format!("% designated atom: {}\n", red.g_index);
    write_reduction(out, prefix, &red.query, &red.tau, &header, registry)
}

fn read_graph(path: &Path) -> Result<Digraph> {
    parse_digraph(&read(path)?).map_err(input(format!("in {}", path.display())))
}

fn reduce_graph_cmd(out: &Output, g1: &Path, g2: &Path, prefix: Option<&Path>) -> Result<()> {
    let (a, b) = (read_graph(g1)?, read_graph(g2)?);
    let red = reduce_graphhom(&a, &b).map_err(|e| {
        let hint = if e == ReductionError::NotWeaklyConnected {
            " (the reduction requires a weakly connected first graph)"
        } else {
            ""
        };
        Failure::Input(anyhow!("{e}{hint}"))
    })?;
    let registry = json!({
        "vstar": red.vstar,
        "x": red.x,
        "g1": red.g1_vars,
        "g2": red.g2_vars,
    });
    let header = format!("% v*: {}\n", red.vstar);
    write_reduction(out, prefix, &red.query, &red.tau, &header, registry)
}

fn oracle_qbf(out: &Output, path: &Path) -> Result<()> {
    let f = parse_qbf(&read(path)?).map_err(input(format!("in {}", path.display())))?;
    let eval = eval_qbf(&f).map_err(|e| Failure::Resource(e.into()))?;
    let text = match &eval.failing {
        None => "valid\n".to_string(),
        Some(sigma) => format!("invalid; least failing universal assignment: {sigma}\n"),
    };
    out.emit(serde_json::to_value(&eval).expect("serializable"), &text);
    Ok(())
}

fn oracle_graph(out: &Output, g1: &Path, g2: &Path) -> Result<()> {
    let (a, b) = (read_graph(g1)?, read_graph(g2)?);
    let map = graph_hom_oracle(&a, &b).map_err(|e| Failure::Resource(e.into()))?;
    let text = match &map {
        None => "no homomorphism\n".to_string(),
        Some(m) => {
            let pairs: Vec<String> = m.iter().map(|(k, v)| format!("{k} -> {v}")).collect();
            format!("homomorphism: {}\n", pairs.join(", "))
        }
    };
    out.emit(json!({"exists": map.is_some(), "map": map}), &text);
    Ok(())
}

fn report_text(r: &CrosscheckReport) -> String {
    let mut s = format!(
        "{} instances; constructive {}/{}; decider {}/{} agree, {} skipped\n",
        r.instances, r.constructive_passed, r.constructive_checks, r.decider_agreements, r.decider_runs, r.decider_skipped
    );
    for c in &r.counterexamples {
        s += &format!("counterexample [{}]: {}\n{}", c.label, c.detail, c.input);
    }
    s
}

fn crosscheck(out: &Output, kind: &CrosscheckKind) -> Result<()> {
    let g = out.global;
    let time_limit = g.max_seconds.map(Duration::from_secs_f64);
    let budget = |on: bool| {
        on.then_some(Budget {
            max_nodes: g.max_nodes,
            max_time: None,
        })
    };
    let source = |random: Option<usize>| match random {
        Some(count) => Source::Random { seed: g.seed, count },
        None => Source::Exhaustive,
    };
    let report = match *kind {
        CrosscheckKind::Qbf {
            max_universals,
            max_existentials,
            max_clauses,
            random,
            decider,
        } => crosscheck_qbf(&QbfCrosscheck {
            max_universals,
            max_existentials,
            max_clauses,
            source: source(random),
            decider_budget: budget(decider),
            time_limit,
        }),
        CrosscheckKind::Graphhom { size, random, decider } => crosscheck_graph(&GraphCrosscheck {
            max_nodes: size,
            source: source(random),
            decider_budget: budget(decider),
            time_limit,
        }),
    }
    .map_err(|e| match e {
        CrosscheckError::Budget { .. } => Failure::Resource(e.into()),
        CrosscheckError::Setup(_) => Failure::Input(e.into()),
    })?;
    out.emit(serde_json::to_value(&report).expect("serializable"), &report_text(&report));
    if report.all_agree() {
        Ok(())
    } else {
        Err(Failure::Invariant(anyhow!(
            "{} disagreement(s) between reduction and oracle",
            report.counterexamples.len()
        )))
    }
}

fn counterexample(out: &Output) -> Result<()> {
    let (q, tau, g1, g2) = counterexample_fixture();
    let opts = decider_options(out.global);
    let full = is_critical(&tau, &q, &opts).map_err(decider_error)?;
    let r1 = is_critical_relative(&tau, &q, g1, &opts).map_err(decider_error)?;
    let r2 = is_critical_relative(&tau, &q, g2, &opts).map_err(decider_error)?;
    reverify(&q, &tau, &full, None)?;
    reverify(&q, &tau, &r1, Some(g1))?;
    reverify(&q, &tau, &r2, Some(g2))?;

    let as_expected = full.critical && !r1.critical && r2.critical;
    let witness: Option<Vec<String>> = full
        .witness
        .as_ref()
        .map(|w| w.instance.tuples().map(ToString::to_string).collect());
    let json = json!({
        "query": query_lines(&q),
        "tuple": tau.to_string(),
        "critical": full.critical,
        "via_atom": full.via_atom,
        "relative": [
            {"atom": g1, "critical": r1.critical},
            {"atom": g2, "critical": r2.critical},
        ],
        "witness": witness,
        "as_expected": as_expected,
    });
    let mut text = format!("query:\n{q}tuple: {tau}\n");
    text += &format!("relative to atom {g1} ({}): critical = {}\n", q.atoms()[g1], r1.critical);
    text += &format!("relative to atom {g2} ({}): critical = {}\n", q.atoms()[g2], r2.critical);
    text += &verdict_text(&full);
    out.emit(json, &text);
    if as_expected {
        Ok(())
    } else {
        Err(Failure::Invariant(anyhow!(
            "expected critical, not critical relative to atom {g1}, critical relative to atom {g2}"
        )))
    }
}
