//! Text formats.
//!
//! * Queries, tuples and instances: atoms `PRED(t1,...,tk)` separated by
//!   whitespace or `.`, `%` starts a line comment, variables are written
//!   `?name`, constants are bare alphanumeric tokens (integers included).
//! * Formulas: a QDIMACS subset with one optional `a` block followed by one
//!   optional `e` block and 3-literal clauses.
//! * Graphs: one `src dst` edge per line, `# nodes: a b ...` declares
//!   (possibly isolated) nodes, other `#` lines are comments.
//!
//! The `Display` impls of the model types print the same formats.

use std::collections::BTreeMap;

use crate::digraph::Digraph;
use crate::error::{ModelError, ParseError};
use crate::model::{Atom, Instance, Query, Term, Tuple};
use crate::qbf::{literal_from_dimacs, Clause, PropVar, QbfFormula};

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Cursor {
            chars: text.chars().peekable(),
            line: 1,
            column: 1,
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError::new(self.line, self.column, message)
    }

    /// Skips whitespace, `.` separators and `%` comments.
    fn skip_separators(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() || c == '.' {
                self.bump();
            } else if c == '%' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn skip_spaces(&mut self) {
        while self.peek().is_some_and(|c| c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            self.bump();
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        if s.is_empty() {
            match self.peek() {
                Some(c) => Err(self.error(format!("expected identifier, found {c:?}"))),
                None => Err(self.error("expected identifier, found end of input")),
            }
        } else {
            Ok(s)
        }
    }

    fn expect(&mut self, want: char) -> Result<(), ParseError> {
        self.skip_spaces();
        match self.peek() {
            Some(c) if c == want => {
                self.bump();
                Ok(())
            }
            Some(c) => Err(self.error(format!("expected {want:?}, found {c:?}"))),
            None => Err(self.error(format!("expected {want:?}, found end of input"))),
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        self.skip_spaces();
        if self.peek() == Some('?') {
            self.bump();
            Ok(Term::Var(self.ident()?))
        } else {
            Ok(Term::Const(self.ident()?))
        }
    }

    fn atom(&mut self) -> Result<Atom, ParseError> {
        let (line, column) = (self.line, self.column);
        let predicate = self.ident()?;
        if predicate.starts_with(|c: char| c.is_ascii_digit()) {
            return Err(ParseError::new(
                line,
                column,
                format!("predicate name {predicate:?} must not start with a digit"),
            ));
        }
        self.expect('(')?;
        let mut args = Vec::new();
        self.skip_spaces();
        if self.peek() == Some(')') {
            self.bump();
            return Ok(Atom::new(predicate, args));
        }
        loop {
            args.push(self.term()?);
            self.skip_spaces();
            match self.bump() {
                Some(',') => continue,
                Some(')') => break,
                Some(c) => {
                    return Err(ParseError::new(
                        self.line,
                        self.column - 1,
                        format!("expected ',' or ')', found {c:?}"),
                    ))
                }
                None => return Err(self.error("unterminated atom")),
            }
        }
        Ok(Atom::new(predicate, args))
    }
}

/// Atoms with the position where each starts.
fn parse_atoms(text: &str) -> Result<Vec<(Atom, usize, usize)>, ParseError> {
    let mut cur = Cursor::new(text);
    let mut out = Vec::new();
    loop {
        cur.skip_separators();
        if cur.peek().is_none() {
            return Ok(out);
        }
        let (line, column) = (cur.line, cur.column);
        out.push((cur.atom()?, line, column));
    }
}

fn check_arity_positions(atoms: &[(Atom, usize, usize)]) -> Result<(), ParseError> {
    let mut arities: BTreeMap<&str, usize> = BTreeMap::new();
    for (atom, line, column) in atoms {
        let known = *arities.entry(&atom.predicate).or_insert(atom.arity());
        if known != atom.arity() {
            return Err(ParseError::new(
                *line,
                *column,
                ModelError::ArityConflict {
                    predicate: atom.predicate.clone(),
                    first: known,
                    second: atom.arity(),
                }
                .to_string(),
            ));
        }
    }
    Ok(())
}

pub fn parse_query(text: &str) -> Result<Query, ParseError> {
    let atoms = parse_atoms(text)?;
    check_arity_positions(&atoms)?;
    if atoms.is_empty() {
        let lines = text.lines().count().max(1);
        return Err(ParseError::new(lines, 1, ModelError::EmptyQuery.to_string()));
    }
    Ok(Query::new(atoms.into_iter().map(|(a, _, _)| a).collect()).expect("checked above"))
}

fn ground(atom: Atom, line: usize, column: usize) -> Result<Tuple, ParseError> {
    Tuple::try_from(atom).map_err(|e| ParseError::new(line, column, e.to_string()))
}

pub fn parse_tuple(text: &str) -> Result<Tuple, ParseError> {
    let mut atoms = parse_atoms(text)?;
    match atoms.len() {
        1 => {
            let (atom, line, column) = atoms.pop().expect("one atom");
            ground(atom, line, column)
        }
        0 => Err(ParseError::new(1, 1, "expected a tuple, found no atom")),
        _ => {
            let (_, line, column) = &atoms[1];
            Err(ParseError::new(*line, *column, "expected exactly one tuple"))
        }
    }
}

pub fn parse_instance(text: &str) -> Result<Instance, ParseError> {
    let atoms = parse_atoms(text)?;
    check_arity_positions(&atoms)?;
    let tuples = atoms
        .into_iter()
        .map(|(a, l, c)| ground(a, l, c))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Instance::new(tuples).expect("checked above"))
}

pub fn parse_qbf(text: &str) -> Result<QbfFormula, ParseError> {
    #[derive(PartialEq, Eq, PartialOrd, Ord, Clone, Copy)]
    enum Stage {
        Header,
        Universal,
        Existential,
        Clauses,
    }
    let mut stage = Stage::Header;
    let mut declared: Option<(u64, u64, usize)> = None;
    let mut universals = Vec::new();
    let mut existentials = Vec::new();
    let mut clauses: Vec<Clause> = Vec::new();

    let ints = |line_no: usize, toks: &[(usize, &str)]| -> Result<Vec<i64>, ParseError> {
        toks.iter()
            .map(|(col, t)| {
                t.parse::<i64>()
                    .map_err(|_| ParseError::new(line_no, *col, format!("expected an integer, found {t:?}")))
            })
            .collect()
    };
    let block = |line_no: usize, toks: &[(usize, &str)]| -> Result<Vec<PropVar>, ParseError> {
        let vals = ints(line_no, &toks[1..])?;
        let (last_col, _) = toks[toks.len() - 1];
        if vals.last() != Some(&0) {
            return Err(ParseError::new(line_no, last_col, "quantifier block must end with 0"));
        }
        let body = &vals[..vals.len() - 1];
        body.iter()
            .zip(&toks[1..])
            .map(|(&v, (col, _))| {
                if v <= 0 {
                    Err(ParseError::new(line_no, *col, "quantified variables must be positive"))
                } else {
                    Ok(v as PropVar)
                }
            })
            .collect()
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let toks = tokens(raw);
        let Some(&(col, first)) = toks.first() else {
            continue;
        };
        match first {
            "c" => continue,
            "p" => {
                if stage != Stage::Header {
                    return Err(ParseError::new(line_no, col, "duplicate or misplaced header"));
                }
                if toks.len() != 4 || toks[1].1 != "cnf" {
                    return Err(ParseError::new(line_no, col, "expected `p cnf <nvars> <nclauses>`"));
                }
                let nums = ints(line_no, &toks[2..])?;
                if nums.iter().any(|&n| n < 0) {
                    return Err(ParseError::new(line_no, col, "negative count in header"));
                }
                declared = Some((nums[0] as u64, nums[1] as u64, line_no));
                stage = Stage::Universal;
            }
            _ if stage == Stage::Header => {
                return Err(ParseError::new(line_no, col, "expected `p cnf` header"));
            }
            "a" => {
                if stage > Stage::Universal {
                    return Err(ParseError::new(
                        line_no,
                        col,
                        "prefix must be one `a` block followed by at most one `e` block",
                    ));
                }
                universals = block(line_no, &toks)?;
                stage = Stage::Existential;
            }
            "e" => {
                if stage > Stage::Existential {
                    return Err(ParseError::new(
                        line_no,
                        col,
                        "prefix must be one `a` block followed by at most one `e` block",
                    ));
                }
                existentials = block(line_no, &toks)?;
                stage = Stage::Clauses;
            }
            _ => {
                stage = Stage::Clauses;
                let vals = ints(line_no, &toks)?;
                if vals.last() != Some(&0) {
                    return Err(ParseError::new(line_no, col, "clause must end with 0"));
                }
                let lits = &vals[..vals.len() - 1];
                if lits.len() != 3 || lits.contains(&0) {
                    return Err(ParseError::new(
                        line_no,
                        col,
                        format!("clause must have exactly 3 literals, found {}", lits.len()),
                    ));
                }
                for (&l, (c, _)) in lits.iter().zip(&toks) {
                    let v = l.unsigned_abs() as PropVar;
                    if !universals.contains(&v) && !existentials.contains(&v) {
                        return Err(ParseError::new(line_no, *c, format!("variable {v} is not quantified")));
                    }
                }
                clauses.push([
                    literal_from_dimacs(lits[0]),
                    literal_from_dimacs(lits[1]),
                    literal_from_dimacs(lits[2]),
                ]);
            }
        }
    }

    let Some((nvars, nclauses, header_line)) = declared else {
        return Err(ParseError::new(1, 1, "missing `p cnf` header"));
    };
    if let Some(&v) = universals.iter().chain(&existentials).find(|&&v| u64::from(v) > nvars) {
        return Err(ParseError::new(
            header_line,
            1,
            format!("variable {v} exceeds declared count {nvars}"),
        ));
    }
    if nclauses != clauses.len() as u64 {
        return Err(ParseError::new(
            header_line,
            1,
            format!("header declares {nclauses} clauses, found {}", clauses.len()),
        ));
    }
    QbfFormula::new(universals, existentials, clauses)
        .map_err(|e| ParseError::new(header_line, 1, e.to_string()))
}

/// Whitespace-separated tokens with their 1-based columns.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s + 1, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

fn node_id(line_no: usize, col: usize, tok: &str) -> Result<String, ParseError> {
    if tok.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        Ok(tok.to_string())
    } else {
        Err(ParseError::new(line_no, col, format!("invalid node id {tok:?}")))
    }
}

pub fn parse_digraph(text: &str) -> Result<Digraph, ParseError> {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = raw.trim_start();
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some(list) = comment.trim_start().strip_prefix("nodes:") {
                let offset = raw.len() - list.len();
                for (col, tok) in tokens(list) {
                    nodes.push(node_id(line_no, col + offset, tok)?);
                }
            }
            continue;
        }
        let toks = tokens(raw);
        match toks.as_slice() {
            [] => {}
            [(c1, a), (c2, b)] => {
                let (a, b) = (node_id(line_no, *c1, a)?, node_id(line_no, *c2, b)?);
                nodes.push(a.clone());
                nodes.push(b.clone());
                edges.push((a, b));
            }
            [(col, _), ..] => {
                return Err(ParseError::new(
                    line_no,
                    *col,
                    format!("expected `src dst`, found {} tokens", toks.len()),
                ))
            }
        }
    }
    Ok(Digraph::new(nodes, edges).expect("endpoints are declared"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qbf::Literal;

    #[test]
    fn counterexample_query() {
        let q = parse_query("R(?x,?y,?z,?z). R(?x,?x,?y,?y).").unwrap();
        assert_eq!(q.len(), 2);
        assert_eq!(q.vars(), vec!["x", "y", "z"]);
        assert_eq!(q.atoms()[0].to_string(), "R(?x,?y,?z,?z)");
    }

    #[test]
    fn single_atom_and_comments() {
        let q = parse_query("% a comment\nR(?x).  % trailing\n").unwrap();
        assert_eq!(q.len(), 1);
        let dup = parse_query("R(?x) R(?x). S(a, ?x)").unwrap();
        assert_eq!(dup.len(), 2);
    }

    #[test]
    fn query_errors_carry_positions() {
        let err = parse_query("R(?x,?y).\n  R(?x).").unwrap_err();
        assert_eq!((err.line, err.column), (2, 3));
        assert!(err.message.contains("arity"));

        let err = parse_query("% nothing\n").unwrap_err();
        assert!(err.message.contains("no atoms"));

        let err = parse_query("R(?x;?y)").unwrap_err();
        assert_eq!((err.line, err.column), (1, 5));

        assert!(parse_query("R(?x").is_err());
        assert!(parse_query("R(?)").is_err());
        assert!(parse_query("1R(a)").is_err());
    }

    #[test]
    fn tuples() {
        assert_eq!(parse_tuple("R(0,0,1,2)").unwrap(), Tuple::new("R", ["0", "0", "1", "2"]));
        assert_eq!(parse_tuple("R(0,1)").unwrap(), Tuple::new("R", ["0", "1"]));
        let err = parse_tuple("R(?x,0)").unwrap_err();
        assert!(err.message.contains("?x"));
        assert!(parse_tuple("R(0) S(1)").is_err());
        assert!(parse_tuple("").is_err());
    }

    #[test]
    fn instances() {
        let i = parse_instance("R(a,b,c,c). R(a,a,b,b). R(a,a,b,b).").unwrap();
        assert_eq!(i.len(), 2);
        assert!(parse_instance("R(a). R(a,b).").is_err());
        assert!(parse_instance("R(?x).").is_err());
    }

    #[test]
    fn qbf_basic() {
        let f = parse_qbf("p cnf 2 2\na 1 0\ne 2 0\n1 2 2 0\n-1 -2 -2 0\n").unwrap();
        assert_eq!(f.universals(), &[1]);
        assert_eq!(f.existentials(), &[2]);
        assert_eq!(f.clauses().len(), 2);
        assert_eq!(f.clauses()[1], [Literal::neg(1), Literal::neg(2), Literal::neg(2)]);
        assert!(f.is_normalized());

        let unnormalized = parse_qbf("c comment\np cnf 2 1\na 1 0\ne 2 0\n1 2 2 0\n").unwrap();
        assert!(!unnormalized.is_normalized());
    }

    #[test]
    fn qbf_errors() {
        let err = parse_qbf("p cnf 2 1\na 1 0\ne 2 0\n1 2 0\n").unwrap_err();
        assert!(err.message.contains("exactly 3"));
        assert_eq!(err.line, 4);

        let err = parse_qbf("p cnf 2 1\ne 2 0\na 1 0\n1 2 2 0\n").unwrap_err();
        assert!(err.message.contains("prefix"));

        let err = parse_qbf("p cnf 3 1\na 1 0\ne 2 0\n1 2 3 0\n").unwrap_err();
        assert!(err.message.contains("not quantified"));

        assert!(parse_qbf("a 1 0\n").is_err());
        assert!(parse_qbf("p cnf 1 2\na 1 0\n1 1 -1 0\n").is_err());
        assert!(parse_qbf("p cnf 1 1\na 1 0\na 1 0\n1 1 -1 0\n").is_err());
    }

    #[test]
    fn digraphs() {
        let g = parse_digraph("a b\nb c\nc a").unwrap();
        assert_eq!(g.nodes().len(), 3);
        assert_eq!(g.edges().len(), 3);
        assert!(g.has_edge("c", "a"));

        let iso = parse_digraph("# nodes: x y\n").unwrap();
        assert_eq!(iso.nodes().len(), 2);
        assert!(iso.edges().is_empty());

        let err = parse_digraph("a").unwrap_err();
        assert_eq!((err.line, err.column), (1, 1));
        assert!(parse_digraph("a b c").is_err());
        assert!(parse_digraph("a b-c").is_err());
    }
}
