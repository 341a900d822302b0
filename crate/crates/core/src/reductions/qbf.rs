use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::ReductionError;
use crate::hom::{apply_hom, verify_hom, Homomorphism};
use crate::model::{Atom, Instance, Query, Term, Tuple};
use crate::qbf::{Assignment, Literal, PropVar, QbfFormula};

fn missing_polarity(formula: &QbfFormula) -> Vec<PropVar> {
    formula
        .universals()
        .iter()
        .copied()
        .filter(|&u| {
            let mut lits = formula.clauses().iter().flatten().filter(|l| l.var == u);
            let pos = lits.clone().any(|l| l.positive);
            let neg = lits.any(|l| !l.positive);
            !(pos && neg)
        })
        .collect()
}

/// Appends the tautology `u ∨ u ∨ ¬u` for every universal `u` that lacks a
/// positive or a negative occurrence.
pub fn normalize_qbf(formula: &QbfFormula) -> QbfFormula {
    let mut clauses = formula.clauses().to_vec();
    for u in missing_polarity(formula) {
        clauses.push([Literal::pos(u), Literal::pos(u), Literal::neg(u)]);
    }
    formula.with_clauses(clauses)
}

/// Query variables standing for one universal `u`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UniversalVars {
    pub x_pos: String,
    pub x_neg: String,
    pub y: String,
    pub yp: String,
    pub yp_neg: String,
}

/// One `Cl` atom of a clause gadget.
///
/// `bits[i]` is the truth value of the i-th literal when its variable is
/// universal, and the value of the variable itself when it is existential.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GadgetRow {
    pub bits: [bool; 3],
    pub atom: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClauseGadget {
    pub predicate: String,
    /// The atom `Cl(x₁, x₂, x₃, r, r, z)`.
    pub clause_atom: usize,
    /// The seven rows ending in `(z, z', s)`, one per satisfying column assignment.
    pub satisfying: Vec<GadgetRow>,
    /// The eight rows ending in `(s, s', s)`.
    pub backup: Vec<GadgetRow>,
}

/// Where each symbol of the construction ended up. Variable names are stored
/// without the leading `?`; atom indices refer to the deduplicated query.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QbfRegistry {
    pub z: String,
    pub zp: String,
    pub y: String,
    pub yp: String,
    pub s: String,
    pub sp: String,
    pub p: String,
    pub r: String,
    pub f: String,
    pub t: String,
    pub universals: BTreeMap<PropVar, UniversalVars>,
    pub existentials: BTreeMap<PropVar, String>,
    pub clauses: Vec<ClauseGadget>,
}

impl QbfRegistry {
    /// Flat symbol table, e.g. `z'` → `zp`, `x_¬u1` → `x_u1_neg`.
    pub fn symbols(&self) -> BTreeMap<String, String> {
        let mut out: BTreeMap<String, String> = [
            ("z", &self.z),
            ("z'", &self.zp),
            ("y", &self.y),
            ("y'", &self.yp),
            ("s", &self.s),
            ("s'", &self.sp),
            ("p", &self.p),
            ("r", &self.r),
            ("f", &self.f),
            ("t", &self.t),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect();
        for (u, vars) in &self.universals {
            out.insert(format!("x_u{u}"), vars.x_pos.clone());
            out.insert(format!("x_¬u{u}"), vars.x_neg.clone());
            out.insert(format!("y_u{u}"), vars.y.clone());
            out.insert(format!("y'_u{u}"), vars.yp.clone());
            out.insert(format!("y'_¬u{u}"), vars.yp_neg.clone());
        }
        for (v, name) in &self.existentials {
            out.insert(format!("x_v{v}"), name.clone());
        }
        out
    }

    /// The variable standing for a literal over a universal, or for an existential.
    fn literal_var(&self, lit: &Literal) -> &str {
        match self.universals.get(&lit.var) {
            Some(u) if lit.positive => &u.x_pos,
            Some(u) => &u.x_neg,
            None => &self.existentials[&lit.var],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QbfReductionOutput {
    pub formula: QbfFormula,
    pub tau: Tuple,
    pub query: Query,
    pub g_index: usize,
    pub registry: QbfRegistry,
}

fn atom(pred: &str, vars: &[&str]) -> Atom {
    Atom::new(pred, vars.iter().map(|v| Term::var(*v)).collect())
}

fn row_bits(b: u8) -> [bool; 3] {
    [b & 4 != 0, b & 2 != 0, b & 1 != 0]
}

/// Builds `(τ, Q, g)` from a normalized `∀ū ∃v̄ ψ`. The first atom is
/// `g = R(z, z', y, y')`; clause `j` (1-based) gets predicate `Cl{j}`.
pub fn reduce_qbf(formula: &QbfFormula) -> Result<QbfReductionOutput, ReductionError> {
    if let Some(&u) = missing_polarity(formula).first() {
        return Err(ReductionError::NotNormalized(u));
    }
    let name = |s: &str| s.to_string();
    let mut reg = QbfRegistry {
        z: name("z"),
        zp: name("zp"),
        y: name("y"),
        yp: name("yp"),
        s: name("s"),
        sp: name("sp"),
        p: name("p"),
        r: name("r"),
        f: name("f"),
        t: name("t"),
        universals: formula
            .universals()
            .iter()
            .map(|&u| {
                let vars = UniversalVars {
                    x_pos: format!("x_u{u}_pos"),
                    x_neg: format!("x_u{u}_neg"),
                    y: format!("y_u{u}"),
                    yp: format!("yp_u{u}"),
                    yp_neg: format!("yp_u{u}_neg"),
                };
                (u, vars)
            })
            .collect(),
        existentials: formula
            .existentials()
            .iter()
            .map(|&v| (v, format!("x_v{v}")))
            .collect(),
        clauses: Vec::new(),
    };

    let mut atoms = vec![
        atom("R", &[&reg.z, &reg.zp, &reg.y, &reg.yp]),
        atom("R", &[&reg.s, &reg.sp, &reg.p, &reg.p]),
    ];
    for u in formula.universals() {
        let v = &reg.universals[u];
        atoms.push(atom("R", &[&v.x_pos, &v.x_pos, &v.y, &v.yp]));
        atoms.push(atom("R", &[&v.x_neg, &v.x_neg, &v.yp_neg, &v.y]));
        atoms.push(atom("R", &[&reg.f, &reg.f, &v.y, &v.y]));
    }

    // Gadget atoms, remembered by (clause, kind, bits) until the query is built.
    struct Pending {
        clause_atom: Atom,
        satisfying: Vec<([bool; 3], Atom)>,
        backup: Vec<([bool; 3], Atom)>,
    }
    let mut pending = Vec::with_capacity(formula.clauses().len());
    for (j, clause) in formula.clauses().iter().enumerate() {
        let pred = format!("Cl{}", j + 1);
        let xs: Vec<&str> = clause.iter().map(|l| reg.literal_var(l)).collect();
        let clause_atom = atom(&pred, &[xs[0], xs[1], xs[2], &reg.r, &reg.r, &reg.z]);
        let mut p = Pending {
            clause_atom,
            satisfying: Vec::with_capacity(7),
            backup: Vec::with_capacity(8),
        };
        for b in 0..8u8 {
            let bits = row_bits(b);
            let mut cols: [&str; 3] = [&reg.f; 3];
            let mut satisfied = false;
            for (i, lit) in clause.iter().enumerate() {
                if formula.is_universal(lit.var) {
                    satisfied |= bits[i];
                    if bits[i] {
                        cols[i] = reg.literal_var(lit);
                    }
                } else {
                    satisfied |= lit.eval(bits[i]);
                    if bits[i] {
                        cols[i] = &reg.t;
                    }
                }
            }
            if satisfied {
                p.satisfying
                    .push((bits, atom(&pred, &[cols[0], cols[1], cols[2], &reg.z, &reg.zp, &reg.s])));
            }
            p.backup
                .push((bits, atom(&pred, &[cols[0], cols[1], cols[2], &reg.s, &reg.sp, &reg.s])));
        }
        atoms.push(p.clause_atom.clone());
        atoms.extend(p.satisfying.iter().map(|(_, a)| a.clone()));
        atoms.extend(p.backup.iter().map(|(_, a)| a.clone()));
        pending.push(p);
    }

    let query = Query::new(atoms).expect("construction is well-formed");
    let index = |a: &Atom| query.index_of(a).expect("constructed atom is in the query");
    let rows = |list: &[([bool; 3], Atom)]| {
        list.iter()
            .map(|(bits, a)| GadgetRow {
                bits: *bits,
                atom: index(a),
            })
            .collect()
    };
    reg.clauses = pending
        .iter()
        .enumerate()
        .map(|(j, p)| ClauseGadget {
            predicate: format!("Cl{}", j + 1),
            clause_atom: index(&p.clause_atom),
            satisfying: rows(&p.satisfying),
            backup: rows(&p.backup),
        })
        .collect();

    Ok(QbfReductionOutput {
        formula: formula.clone(),
        tau: Tuple::new("R", ["0", "0", "1", "2"]),
        query,
        g_index: 0,
        registry: reg,
    })
}

/// The homomorphism of the forward direction: `g ↦ τ`, the gadget of each
/// universal aligned with `σ`, every other variable to a fresh constant named
/// after it. Returns `(h, h(Q))`.
pub fn qbf_witness_map(
    out: &QbfReductionOutput,
    sigma: &Assignment,
) -> Result<(Homomorphism, Instance), ReductionError> {
    let us = out.formula.universals();
    if let Some(u) = us.iter().find(|&&u| sigma.get(u).is_none()) {
        return Err(ReductionError::AssignmentScope {
            scope: "universal variables",
            detail: format!("no value for {u}"),
        });
    }
    let reg = &out.registry;
    let mut h: Homomorphism = out.query.vars().into_iter().map(|v| (v.clone(), v)).collect();
    for (var, c) in [(&reg.z, "0"), (&reg.zp, "0"), (&reg.y, "1"), (&reg.yp, "2")] {
        h.set(var.as_str(), c);
    }
    for &u in us {
        let v = &reg.universals[&u];
        let triple = if sigma.get(u) == Some(true) {
            [&v.x_neg, &v.yp_neg, &v.y]
        } else {
            [&v.x_pos, &v.y, &v.yp]
        };
        for (var, c) in triple.into_iter().zip(["0", "1", "2"]) {
            h.set(var.as_str(), c);
        }
    }
    let instance = apply_hom(&h, &out.query).map_err(|e| ReductionError::Verification(e.to_string()))?;
    if h.image(&out.query.atoms()[out.g_index]).as_ref() != Some(&out.tau) {
        return Err(ReductionError::Verification("g is not sent to τ".into()));
    }
    Ok((h, instance))
}

/// The homomorphism of the backward direction: given `h: Q → I` with
/// `h(g) = τ` and a satisfying assignment aligned with `h`, builds a
/// homomorphism from `Q` into `h(Q) ∖ {τ}`.
pub fn qbf_escape_map(
    out: &QbfReductionOutput,
    h: &Homomorphism,
    sigma_full: &Assignment,
) -> Result<Homomorphism, ReductionError> {
    let f = &out.formula;
    if let Some(w) = f
        .universals()
        .iter()
        .chain(f.existentials())
        .find(|&&w| sigma_full.get(w).is_none())
    {
        return Err(ReductionError::AssignmentScope {
            scope: "all variables",
            detail: format!("no value for {w}"),
        });
    }
    if !f.satisfied_by(sigma_full) {
        return Err(ReductionError::Unsatisfying);
    }
    let instance = apply_hom(h, &out.query).map_err(|e| ReductionError::Precondition(e.to_string()))?;
    if h.image(&out.query.atoms()[out.g_index]).as_ref() != Some(&out.tau) {
        return Err(ReductionError::Precondition("h does not send g to τ".into()));
    }
    let reg = &out.registry;
    for &u in f.universals() {
        let v = &reg.universals[&u];
        let hits = h.image(&atom("R", &[&v.x_pos, &v.x_pos, &v.y, &v.yp])).as_ref() == Some(&out.tau);
        if hits == sigma_full.get(u).unwrap_or(false) {
            return Err(ReductionError::Precondition(format!(
                "assignment of universal {u} is not aligned with h"
            )));
        }
    }

    // Variables absent from Q (no clauses, no universals) stay unmapped.
    let mut h_new = h.clone();
    let mut send = |var: &str, source: &str| {
        if h.get(var).is_some() {
            let value = h.get(source).expect("source symbol occurs with its target").to_string();
            h_new.set(var, value);
        }
    };
    send(&reg.z, &reg.s);
    send(&reg.zp, &reg.sp);
    send(&reg.y, &reg.p);
    send(&reg.yp, &reg.p);
    for &u in f.universals() {
        let v = &reg.universals[&u];
        if sigma_full.get(u) == Some(true) {
            send(&v.x_neg, &reg.f);
            send(&v.yp_neg, &v.y);
        } else {
            send(&v.x_pos, &reg.f);
            send(&v.yp, &v.y);
        }
    }
    for (&v, var) in &reg.existentials {
        send(var, if sigma_full.get(v) == Some(true) { &reg.t } else { &reg.f });
    }
    send(&reg.r, &reg.z);

    if !verify_hom(&h_new, &out.query, &instance.without(&out.tau)) {
        return Err(ReductionError::Verification(
            "escape map does not land in h(Q) ∖ {τ}".into(),
        ));
    }
    Ok(h_new)
}
