//! Exhaustive reference decider. Works on names directly and shares no search
//! code with the main engine.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::error::CriticalityError;
use crate::model::{Query, Term, Tuple};

const MAX_OUTER_MAPS: u128 = 5_000_000;

type Fact = (String, Vec<String>);

fn image(args: &[Term], values: &HashMap<&str, &str>) -> Vec<String> {
    args.iter()
        .map(|t| match t {
            Term::Const(c) => c.clone(),
            Term::Var(v) => values[v.as_str()].to_string(),
        })
        .collect()
}

/// Plain backtracking over variables in first-occurrence order; an atom is
/// checked as soon as all of its variables are set.
fn naive_hom_exists(query: &Query, vars: &[String], facts: &HashSet<Fact>, domain: &[String]) -> bool {
    fn go<'a>(
        i: usize,
        query: &'a Query,
        vars: &'a [String],
        facts: &HashSet<Fact>,
        domain: &'a [String],
        values: &mut HashMap<&'a str, &'a str>,
    ) -> bool {
        for atom in query.atoms() {
            if atom.vars().all(|v| values.contains_key(v)) {
                let fact = (atom.predicate.clone(), image(&atom.args, values));
                if !facts.contains(&fact) {
                    return false;
                }
            }
        }
        if i == vars.len() {
            return true;
        }
        for c in domain {
            values.insert(&vars[i], c);
            if go(i + 1, query, vars, facts, domain, values) {
                return true;
            }
        }
        values.remove(vars[i].as_str());
        false
    }
    go(0, query, vars, facts, domain, &mut HashMap::new())
}

/// Decides criticality by trying every map from the query's variables into
/// `constants(τ) ∪ constants(Q) ∪ {c1..c_max_fresh}`: `τ` is critical iff some
/// image `I = h(Q)` contains `τ` and admits no homomorphism into `I ∖ {τ}`.
///
/// `max_fresh` defaults to the number of variables.
pub fn brute_force_critical(tau: &Tuple, query: &Query, max_fresh: Option<usize>) -> Result<bool, CriticalityError> {
    let vars = query.vars();
    let mut named: BTreeSet<String> = tau.args.iter().cloned().collect();
    named.extend(query.constants());
    let max_fresh = max_fresh.unwrap_or(vars.len());
    let mut domain: Vec<String> = named.iter().cloned().collect();
    let mut k = 0;
    while domain.len() < named.len() + max_fresh {
        k += 1;
        let name = format!("c{k}");
        if !named.contains(&name) {
            domain.push(name);
        }
    }
    let outer = (domain.len() as u128).checked_pow(vars.len() as u32).unwrap_or(u128::MAX);
    if vars.len() > 6 || outer > MAX_OUTER_MAPS {
        return Err(CriticalityError::SizeGuard(format!(
            "{} variables over {} constants",
            vars.len(),
            domain.len()
        )));
    }

    let tau_fact: Fact = (tau.predicate.clone(), tau.args.clone());
    let mut digits = vec![0usize; vars.len()];
    loop {
        let values: HashMap<&str, &str> = vars
            .iter()
            .zip(&digits)
            .map(|(v, &d)| (v.as_str(), domain[d].as_str()))
            .collect();
        let mut facts: HashSet<Fact> = query
            .atoms()
            .iter()
            .map(|a| (a.predicate.clone(), image(&a.args, &values)))
            .collect();
        if facts.remove(&tau_fact) {
            let remaining: Vec<String> = facts
                .iter()
                .flat_map(|(_, args)| args.iter().cloned())
                .chain(query.constants())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            if !naive_hom_exists(query, &vars, &facts, &remaining) {
                return Ok(true);
            }
        }
        // odometer
        let mut i = 0;
        loop {
            if i == digits.len() {
                return Ok(false);
            }
            digits[i] += 1;
            if digits[i] < domain.len() {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_query, parse_tuple};

    #[test]
    fn counterexample_is_critical() {
        let q = parse_query("R(?x,?y,?z,?z). R(?x,?x,?y,?y).").unwrap();
        assert!(brute_force_critical(&parse_tuple("R(a,a,b,b)").unwrap(), &q, None).unwrap());
    }

    #[test]
    fn repeated_variable_never_hits_distinct_tuple() {
        let q = parse_query("R(?x,?x)").unwrap();
        assert!(!brute_force_critical(&parse_tuple("R(0,1)").unwrap(), &q, None).unwrap());
    }

    #[test]
    fn single_atom() {
        let q = parse_query("R(?x)").unwrap();
        assert!(brute_force_critical(&parse_tuple("R(0)").unwrap(), &q, None).unwrap());
        assert!(!brute_force_critical(&parse_tuple("S(0)").unwrap(), &q, None).unwrap());
    }

    #[test]
    fn size_guard() {
        let q = parse_query("R(?a,?b,?c,?d). R(?e,?f,?g,?h).").unwrap();
        assert!(matches!(
            brute_force_critical(&parse_tuple("R(0,1,2,3)").unwrap(), &q, None),
            Err(CriticalityError::SizeGuard(_))
        ));
    }
}
